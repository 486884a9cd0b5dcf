use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use actdiag::active::{build_active_diagnoser, ActiveDiagnoser};
use actdiag::des::{parse_model, Automaton, Event, Model};
use actdiag::diagnoser::build_diagnoser;
use actdiag::export::{encode_diag_result, export_graph, to_pseudo_obcp, ServiceMapping};
use actdiag::planner::{ao_search, plan_cost, ConditionalPlan, SearchOptions};
use actdiag::simulator::{execute_plan, run_session, Scenario, SessionOutcome, World};
use actdiag::spacewire::{
    gen_spacewire_model_with_costs, saturated_root, splice_checks, SATURATED_ROOT_TRACE,
};
use actdiag::Cost;
use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Map, Value};

use crate::args::{AdFormat, BehaviorArgs, ExportFormat, PlanArgs, RootSpec};

/// What a subcommand produced: an optional artifact for `--output` or
/// standard output, and a summary report.
pub struct Outcome {
    pub artifact: Option<String>,
    pub report: Map<String, Value>,
}

fn report(command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m
}

pub fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .context("reading standard input")?;
        return Ok(text);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_model(path: &Path) -> Result<Model> {
    let text = read_input(path)?;
    parse_model(&text).with_context(|| format!("parsing {}", path.display()))
}

/// The automaton a model file describes, with the health check spliced in
/// on request.
fn load_behavior(path: &Path, behavior: BehaviorArgs) -> Result<Automaton> {
    let model = load_model(path)?;
    if behavior.check {
        return splice_checks(&model)
            .with_context(|| format!("splicing the health check into {}", path.display()));
    }
    model
        .compose()
        .with_context(|| format!("composing {}", path.display()))
}

fn parse_costs(text: &str) -> Result<BTreeMap<String, Cost>> {
    let mut costs = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (event, cost) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("costs line {}: expected `event = cost`", k + 1))?;
        let cost: Cost = cost
            .trim()
            .parse()
            .map_err(|e| anyhow!("costs line {}: {e}", k + 1))?;
        costs.insert(event.trim().to_string(), cost);
    }
    Ok(costs)
}

pub fn spacewire_gen(n: usize, costs: Option<&Path>, with_check: bool) -> Result<Outcome> {
    let costs = match costs {
        Some(p) => parse_costs(&read_input(p)?)?,
        None => BTreeMap::new(),
    };
    let model = gen_spacewire_model_with_costs(n, &costs)?;
    let text = if with_check {
        Model::from_automaton(model.name.clone(), splice_checks(&model)?).to_desm()
    } else {
        model.to_desm()
    };
    let mut r = report("spacewire gen");
    r.insert("instruments".into(), json!(n));
    Ok(Outcome {
        artifact: Some(text),
        report: r,
    })
}

pub fn compose(files: &[impl AsRef<Path>]) -> Result<Outcome> {
    let mut events: Vec<Event> = Vec::new();
    let mut components = Vec::new();
    let mut names = Vec::new();
    for f in files {
        let m = load_model(f.as_ref())?;
        for e in m.events {
            match events.iter().find(|x| x.name == e.name) {
                Some(x) if *x != e => {
                    bail!("event `{}` is declared differently across files", e.name)
                }
                Some(_) => {}
                None => events.push(e),
            }
        }
        components.extend(m.components);
        names.push(m.name);
    }
    let name = names.join("_");
    let merged = Model {
        name: name.clone(),
        events,
        components,
    };
    let a = merged.compose()?;
    let stats = a.stats();
    let mut r = report("compose");
    insert_stats(&mut r, &stats);
    Ok(Outcome {
        artifact: Some(Model::from_automaton(name, a).to_desm()),
        report: r,
    })
}

fn insert_stats(r: &mut Map<String, Value>, stats: &actdiag::des::ModelStats) {
    r.insert("states".into(), json!(stats.state_count));
    r.insert("events".into(), json!(stats.event_count));
    r.insert("transitions".into(), json!(stats.transition_count));
}

pub fn stats(file: &Path, behavior: BehaviorArgs) -> Result<Outcome> {
    let a = load_behavior(file, behavior)?;
    let mut r = report("stats");
    insert_stats(&mut r, &a.stats());
    Ok(Outcome {
        artifact: None,
        report: r,
    })
}

pub fn diagnoser(file: &Path, behavior: BehaviorArgs) -> Result<Outcome> {
    let a = load_behavior(file, behavior)?;
    let d = build_diagnoser(&a)?;
    let mut r = report("diagnoser");
    r.insert("nodes".into(), json!(d.state_count()));
    r.insert("observables".into(), json!(d.observables().len()));
    Ok(Outcome {
        artifact: Some(serde_json::to_string_pretty(&d.to_graph())? + "\n"),
        report: r,
    })
}

fn targets(faults: &[String]) -> Vec<&str> {
    faults.iter().map(String::as_str).collect()
}

pub fn active_diagnoser(
    file: &Path,
    behavior: BehaviorArgs,
    faults: &[String],
    format: AdFormat,
) -> Result<Outcome> {
    let a = load_behavior(file, behavior)?;
    let ad = build_active_diagnoser(&a, &targets(faults))?;
    let histogram: Map<String, Value> = ad
        .tag_histogram()
        .into_iter()
        .map(|(t, c)| (t.to_string(), json!(c)))
        .collect();
    let mut r = report("active-diagnoser");
    r.insert("nodes".into(), json!(ad.node_count()));
    r.insert("sink".into(), json!(ad.sink().is_some()));
    r.insert("faults".into(), json!(ad.targets()));
    r.insert("tags".into(), Value::Object(histogram));
    let artifact = match format {
        AdFormat::Json => serde_json::to_string(&ad)? + "\n",
        AdFormat::Graph => serde_json::to_string_pretty(&ad.to_graph())? + "\n",
        AdFormat::Dot => ad.to_dot(),
    };
    Ok(Outcome {
        artifact: Some(artifact),
        report: r,
    })
}

/// Reads either a saved active diagnoser (JSON) or a model file.
fn load_active(args: &PlanArgs) -> Result<ActiveDiagnoser> {
    let text = read_input(&args.input)?;
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(&text)
            .with_context(|| format!("reading {}", args.input.display()));
    }
    let model = parse_model(&text).with_context(|| format!("parsing {}", args.input.display()))?;
    let a = if args.behavior.check {
        splice_checks(&model)?
    } else {
        model.compose()?
    };
    Ok(build_active_diagnoser(&a, &[])?)
}

pub fn plan(args: &PlanArgs) -> Result<Outcome> {
    let ad = load_active(args)?;
    let (root, trace) = match &args.root {
        RootSpec::SaturatedAllOpen => {
            let root = saturated_root(&ad)
                .ok_or_else(|| anyhow!("the model has no `check`/`sat` session start"))?;
            (
                root,
                Some(SATURATED_ROOT_TRACE.iter().map(|s| s.to_string()).collect()),
            )
        }
        RootSpec::Initial => (ad.initial(), Some(Vec::new())),
        RootSpec::Trace(events) => {
            let root = ad.run(events.iter().map(String::as_str))?;
            if ad.is_sink(root) {
                bail!(
                    "trace {} is not consistent with the model",
                    events.join(",")
                );
            }
            (root, Some(events.clone()))
        }
        RootSpec::Node(id) => {
            if *id >= ad.state_count() {
                bail!(
                    "node {id} out of range (the active diagnoser has {} states)",
                    ad.state_count()
                );
            }
            (*id, None)
        }
    };
    let opts = SearchOptions {
        exploration: args.explore,
        aggregation: args.criterion,
        cost_budget: args.budget,
        node_limit: args.node_limit,
    };
    let mut plan = ao_search(&ad, root, &targets(&args.faults), &opts)?;
    plan.root_trace = trace;

    let mut r = report("plan");
    r.insert("root".into(), json!(root));
    r.insert("criterion".into(), json!(args.criterion.to_string()));
    r.insert("explore".into(), json!(args.explore.to_string()));
    r.insert("cost".into(), json!(plan.meta.cost.to_string()));
    r.insert("optimal".into(), json!(plan.meta.optimal));
    r.insert("search_nodes".into(), json!(plan.meta.nodes));
    r.insert("leaves".into(), json!(plan.root.leaf_count()));
    r.insert("depth".into(), json!(plan.root.depth()));
    Ok(Outcome {
        artifact: Some(plan.to_json() + "\n"),
        report: r,
    })
}

fn load_plan(path: &Path) -> Result<ConditionalPlan> {
    let text = read_input(path)?;
    ConditionalPlan::from_json(&text).with_context(|| format!("reading plan {}", path.display()))
}

pub fn export(plan_path: &Path, format: ExportFormat, mapping: Option<&Path>) -> Result<Outcome> {
    let plan = load_plan(plan_path)?;
    let mapping = match mapping {
        Some(p) => read_input(p)?.parse::<ServiceMapping>()?,
        None => ServiceMapping::default(),
    };
    let artifact = match format {
        ExportFormat::PseudoObcp => to_pseudo_obcp(&plan, &mapping)?,
        ExportFormat::Dot => export_graph(&plan),
        ExportFormat::Json => plan.to_json() + "\n",
    };
    let mut r = report("export");
    r.insert("leaves".into(), json!(plan.root.leaf_count()));
    r.insert(
        "cost".into(),
        json!(plan_cost(&plan.root, plan.meta.aggregation).to_string()),
    );
    Ok(Outcome {
        artifact: Some(artifact),
        report: r,
    })
}

pub fn simulate(
    plan_path: &Path,
    scenario: &Scenario,
    instruments: Option<usize>,
) -> Result<(Outcome, String)> {
    let plan = load_plan(plan_path)?;
    let n = instruments.unwrap_or(plan.targets.len());
    let mut world = World::new(n, &scenario.0)?;
    let session = plan.root_trace.as_deref() == Some(&SATURATED_ROOT_TRACE.map(String::from)[..]);
    let outcome = if session {
        run_session(&mut world, &plan)?
    } else {
        SessionOutcome::Diagnosed(execute_plan(&mut world, &plan)?)
    };

    let mut r = report("simulate");
    r.insert("scenario".into(), json!(scenario.to_string()));
    r.insert("instruments".into(), json!(n));
    let trace = match &outcome {
        SessionOutcome::Nominal { trace } => {
            r.insert("outcome".into(), json!("nominal"));
            trace
        }
        SessionOutcome::Diagnosed(exec) => {
            let code = encode_diag_result(&plan.ordered(&exec.verdicts))?;
            r.insert("outcome".into(), json!("diagnosed"));
            r.insert("diag_result".into(), json!(code.0));
            let verdicts: Map<String, Value> = exec
                .verdicts
                .iter()
                .map(|(f, v)| (f.clone(), json!(v.to_string())))
                .collect();
            r.insert("verdicts".into(), Value::Object(verdicts));
            &exec.trace
        }
    };
    r.insert("steps".into(), json!(trace.entries.len()));
    Ok((
        Outcome {
            artifact: None,
            report: r,
        },
        trace.to_log(),
    ))
}

/// `key=value` pairs on one line, then one line per nested object.
pub fn render_text(report: &Map<String, Value>) -> String {
    let scalar = |v: &Value| match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => items
            .iter()
            .map(|i| i.as_str().map_or(i.to_string(), str::to_string))
            .collect::<Vec<_>>()
            .join(","),
        other => other.to_string(),
    };
    let mut head = Vec::new();
    let mut nested = Vec::new();
    for (k, v) in report.iter().filter(|(k, _)| *k != "command") {
        match v {
            Value::Object(inner) => {
                let parts: Vec<String> = inner
                    .iter()
                    .map(|(ik, iv)| format!("{ik}={}", scalar(iv)))
                    .collect();
                nested.push(format!("{k}: {}", parts.join(" ")));
            }
            _ => head.push(format!("{k}={}", scalar(v))),
        }
    }
    let mut out = String::new();
    if !head.is_empty() {
        out.push_str(&head.join(" "));
        out.push('\n');
    }
    for line in nested {
        out.push_str(&line);
        out.push('\n');
    }
    out
}
