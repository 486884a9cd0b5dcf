//! Rendering of conditional plans as pseudo on-board control procedures and
//! as graphs.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::planner::{ConditionalPlan, PlanNode, PlanVerdict};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExportError {
    #[error("no service mapping for event `{0}`")]
    UnmappedEvent(String),
    #[error("diag_result encodes at most 9 faults, got {0}")]
    TooManyFaults(usize),
    #[error("mapping line {line}: {message}")]
    Mapping { line: usize, message: String },
}

/// Integer diagnosis code: one decimal digit per fault, the first fault
/// most significant, digit 1 when the fault is sure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiagResult(pub u32);

impl fmt::Display for DiagResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn encode_diag_result(verdicts: &[PlanVerdict]) -> Result<DiagResult, ExportError> {
    if verdicts.len() > 9 {
        return Err(ExportError::TooManyFaults(verdicts.len()));
    }
    let value = verdicts
        .iter()
        .fold(0u32, |acc, v| acc * 10 + u32::from(*v == PlanVerdict::Sure));
    Ok(DiagResult(value))
}

pub const PLACEHOLDER_INDEX: &str = "{N}";
pub const PLACEHOLDER_RESULT: &str = "{R}";

/// Templates used to turn plan elements into service calls.
///
/// Action keys are either exact event names or a prefix followed by `{N}`,
/// which matches the prefix followed by a number and substitutes it. Multi
/// line templates separate lines with `|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServiceMapping {
    pub procedure: String,
    pub actions: Vec<(String, Vec<String>)>,
    /// Branch guards by response, in rendering order.
    pub guards: Vec<(String, String)>,
    pub leaf: Vec<String>,
}

impl Default for ServiceMapping {
    fn default() -> Self {
        ServiceMapping {
            procedure: "int diagnose_network()".into(),
            actions: vec![
                (
                    "close_flow{N}".into(),
                    vec!["monitor_port_state({N}, false);".into()],
                ),
                (
                    "open_flow{N}".into(),
                    vec!["monitor_port_state({N}, true);".into()],
                ),
                (
                    "check".into(),
                    vec!["monitor_tempo();".into(), "monitor_scan();".into()],
                ),
            ],
            guards: vec![
                ("unsat".into(), "monitor_failing_nb == 0".into()),
                ("sat".into(), "monitor_failing_nb != 0".into()),
            ],
            leaf: vec!["diag_result = {R};".into(), "return diag_result;".into()],
        }
    }
}

impl FromStr for ServiceMapping {
    type Err = ExportError;

    /// Parses `key = value` lines over the defaults. Keys: `procedure`,
    /// `leaf`, `action.<event>` and `guard.<response>`.
    fn from_str(text: &str) -> Result<ServiceMapping, ExportError> {
        let mut m = ServiceMapping::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| ExportError::Mapping {
                line: k + 1,
                message: message.to_string(),
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let lines = || {
                value
                    .split('|')
                    .map(|l| l.trim().to_string())
                    .collect::<Vec<_>>()
            };
            if key == "procedure" {
                m.procedure = value.to_string();
            } else if key == "leaf" {
                m.leaf = lines();
            } else if let Some(event) = key.strip_prefix("action.") {
                upsert(&mut m.actions, event, lines());
            } else if let Some(resp) = key.strip_prefix("guard.") {
                upsert(&mut m.guards, resp, value.to_string());
            } else {
                return Err(err(&format!("unknown key `{key}`")));
            }
        }
        Ok(m)
    }
}

fn upsert<V>(list: &mut Vec<(String, V)>, key: &str, value: V) {
    match list.iter_mut().find(|(k, _)| k == key) {
        Some(slot) => slot.1 = value,
        None => list.push((key.to_string(), value)),
    }
}

impl ServiceMapping {
    /// Service-call lines for an action event.
    pub fn action_lines(&self, event: &str) -> Result<Vec<String>, ExportError> {
        if let Some((_, lines)) = self.actions.iter().find(|(k, _)| k == event) {
            return Ok(lines.clone());
        }
        let digits = event.len() - event.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        if digits > 0 {
            let (prefix, number) = event.split_at(event.len() - digits);
            let key = format!("{prefix}{PLACEHOLDER_INDEX}");
            if let Some((_, lines)) = self.actions.iter().find(|(k, _)| *k == key) {
                return Ok(lines
                    .iter()
                    .map(|l| l.replace(PLACEHOLDER_INDEX, number))
                    .collect());
            }
        }
        Err(ExportError::UnmappedEvent(event.to_string()))
    }

    fn guard_position(&self, response: &str) -> Result<usize, ExportError> {
        self.guards
            .iter()
            .position(|(r, _)| r == response)
            .ok_or_else(|| ExportError::UnmappedEvent(response.to_string()))
    }
}

struct Writer<'m> {
    mapping: &'m ServiceMapping,
    targets: &'m [String],
    out: Vec<String>,
}

impl Writer<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        self.out.push(format!("{}{}", "  ".repeat(depth), text));
    }

    fn node(&mut self, p: &PlanNode, depth: usize) -> Result<(), ExportError> {
        match p {
            PlanNode::Act { action, next, .. } => {
                for l in self.mapping.action_lines(action)? {
                    self.line(depth, &l);
                }
                self.node(next, depth)
            }
            PlanNode::Branch { children } => {
                let mut ordered = children
                    .iter()
                    .map(|(r, c)| Ok((self.mapping.guard_position(r)?, c)))
                    .collect::<Result<Vec<_>, ExportError>>()?;
                ordered.sort_by_key(|(pos, _)| *pos);
                let last = ordered.len() - 1;
                for (k, (pos, child)) in ordered.into_iter().enumerate() {
                    let guard = &self.mapping.guards[pos].1;
                    let open = match k {
                        0 => format!("if ({guard}) {{"),
                        _ if k == last => "} else {".to_string(),
                        _ => format!("}} else if ({guard}) {{"),
                    };
                    self.line(depth, &open);
                    self.node(child, depth + 1)?;
                }
                self.line(depth, "}");
                Ok(())
            }
            PlanNode::Leaf { verdicts, .. } => {
                let ordered: Vec<PlanVerdict> = self
                    .targets
                    .iter()
                    .map(|t| verdicts.get(t).copied().unwrap_or(PlanVerdict::Unsolvable))
                    .collect();
                let code = encode_diag_result(&ordered)?.to_string();
                for l in &self.mapping.leaf {
                    self.line(depth, &l.replace(PLACEHOLDER_RESULT, &code));
                }
                Ok(())
            }
        }
    }
}

/// Plan body lines without the procedure wrapper, at nesting depth 0.
pub fn pseudo_obcp_body(
    p: &ConditionalPlan,
    m: &ServiceMapping,
) -> Result<Vec<String>, ExportError> {
    let mut w = Writer {
        mapping: m,
        targets: &p.targets,
        out: Vec::new(),
    };
    w.node(&p.root, 0)?;
    Ok(w.out)
}

/// The full procedure: signature line, body indented one level, closing brace.
pub fn to_pseudo_obcp(p: &ConditionalPlan, m: &ServiceMapping) -> Result<String, ExportError> {
    let mut text = format!("{} {{\n", m.procedure);
    for l in pseudo_obcp_body(p, m)? {
        text.push_str("  ");
        text.push_str(&l);
        text.push('\n');
    }
    text.push_str("}\n");
    Ok(text)
}

/// Graphviz rendering of the plan tree; node ids follow pre-order.
pub fn export_graph(p: &ConditionalPlan) -> String {
    fn walk(p: &PlanNode, targets: &[String], next_id: &mut usize, out: &mut String) -> usize {
        let id = *next_id;
        *next_id += 1;
        match p {
            PlanNode::Act { action, cost, next } => {
                let _ = writeln!(out, "  n{id} [shape=box, label=\"{action} ({cost})\"];");
                let child = walk(next, targets, next_id, out);
                let _ = writeln!(out, "  n{id} -> n{child};");
            }
            PlanNode::Branch { children } => {
                let _ = writeln!(out, "  n{id} [shape=diamond, label=\"observe\"];");
                for (r, c) in children {
                    let child = walk(c, targets, next_id, out);
                    let _ = writeln!(out, "  n{id} -> n{child} [label=\"{r}\"];");
                }
            }
            PlanNode::Leaf { verdicts } => {
                let label: Vec<String> = targets
                    .iter()
                    .map(|t| {
                        let v = verdicts.get(t).copied().unwrap_or(PlanVerdict::Unsolvable);
                        format!("{t} {v}")
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "  n{id} [shape=ellipse, label=\"{}\"];",
                    label.join("\\n")
                );
            }
        }
        id
    }
    let mut out = String::from("digraph plan {\n");
    walk(&p.root, &p.targets, &mut 0, &mut out);
    out.push_str("}\n");
    out
}
