//! Validator for the JSON Schema keywords used by the report schema:
//! `type`, `const`, `enum`, `pattern`, `minimum`, `maximum`, `properties`,
//! `required`, `additionalProperties`, `propertyNames`, `items`, `allOf`,
//! `oneOf`, `if`/`then` and local `$ref`.

use regex::Regex;
use serde_json::Value;

pub fn validate(root: &Value, instance: &Value) -> Result<(), String> {
    check(root, root, instance, "$")
}

fn resolve<'a>(root: &'a Value, reference: &str) -> Result<&'a Value, String> {
    let pointer = reference
        .strip_prefix('#')
        .ok_or_else(|| format!("unsupported reference {reference}"))?;
    root.pointer(pointer)
        .ok_or_else(|| format!("dangling reference {reference}"))
}

fn type_matches(name: &str, v: &Value) -> bool {
    match name {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "integer" => v.is_i64() || v.is_u64(),
        "number" => v.is_number(),
        "null" => v.is_null(),
        _ => false,
    }
}

fn check(root: &Value, schema: &Value, v: &Value, at: &str) -> Result<(), String> {
    let schema = match schema {
        Value::Bool(true) => return Ok(()),
        Value::Bool(false) => return Err(format!("{at}: not allowed")),
        Value::Object(m) => m,
        _ => return Err(format!("{at}: malformed schema")),
    };
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        check(root, resolve(root, r)?, v, at)?;
    }
    if let Some(t) = schema.get("type").and_then(Value::as_str) {
        if !type_matches(t, v) {
            return Err(format!("{at}: expected {t}"));
        }
    }
    if let Some(c) = schema.get("const") {
        if c != v {
            return Err(format!("{at}: expected {c}"));
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(v) {
            return Err(format!("{at}: {v} not in {options:?}"));
        }
    }
    if let (Some(p), Some(text)) = (schema.get("pattern").and_then(Value::as_str), v.as_str()) {
        if !Regex::new(p).map_err(|e| e.to_string())?.is_match(text) {
            return Err(format!("{at}: `{text}` does not match {p}"));
        }
    }
    if let Some(x) = v.as_f64() {
        if schema
            .get("minimum")
            .and_then(Value::as_f64)
            .is_some_and(|m| x < m)
        {
            return Err(format!("{at}: below minimum"));
        }
        if schema
            .get("maximum")
            .and_then(Value::as_f64)
            .is_some_and(|m| x > m)
        {
            return Err(format!("{at}: above maximum"));
        }
    }
    if let Some(all) = schema.get("allOf").and_then(Value::as_array) {
        for s in all {
            check(root, s, v, at)?;
        }
    }
    if let Some(one) = schema.get("oneOf").and_then(Value::as_array) {
        let passing = one.iter().filter(|s| check(root, s, v, at).is_ok()).count();
        if passing != 1 {
            return Err(format!(
                "{at}: matches {passing} alternatives, expected exactly one"
            ));
        }
    }
    if let Some(cond) = schema.get("if") {
        if check(root, cond, v, at).is_ok() {
            if let Some(then) = schema.get("then") {
                check(root, then, v, at)?;
            }
        }
    }
    if let Some(items) = schema.get("items") {
        for (k, item) in v.as_array().into_iter().flatten().enumerate() {
            check(root, items, item, &format!("{at}[{k}]"))?;
        }
    }
    if let Some(obj) = v.as_object() {
        for key in schema
            .get("required")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
        {
            let key = key.as_str().unwrap_or_default();
            if !obj.contains_key(key) {
                return Err(format!("{at}: missing `{key}`"));
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (key, value) in obj {
            let path = format!("{at}.{key}");
            if let Some(names) = schema.get("propertyNames") {
                check(root, names, &Value::String(key.clone()), &path)?;
            }
            match props.and_then(|p| p.get(key)) {
                Some(s) => check(root, s, value, &path)?,
                None => {
                    if let Some(extra) = schema.get("additionalProperties") {
                        check(root, extra, value, &path)?;
                    }
                }
            }
        }
    }
    Ok(())
}
