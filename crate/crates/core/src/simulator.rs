//! Ground-truth SpaceWire world for closed-loop runs of plans and of the
//! reconfiguration baseline.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::planner::{ConditionalPlan, PlanNode, PlanVerdict};
use crate::spacewire::{CheckResponse, PortAction, CHECK};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultMode {
    /// The instrument keeps babbling whatever happens to its port.
    Persistent,
    /// The babbling stops once the instrument's port is closed.
    Transient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Health {
    Ok,
    Babbling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flow {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("instrument {instrument} out of range 1..={n}")]
    OutOfRange { instrument: usize, n: usize },
    #[error("instrument {0} listed twice in the scenario")]
    DuplicateInstrument(usize),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("plan has no branch for observed response `{0}`")]
    MissingBranch(String),
    #[error("invalid scenario `{0}`: expected persistent:<i> or transient:<i>, comma separated")]
    Scenario(String),
}

/// Injected faults as (instrument, mode) pairs, 1-based.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario(pub Vec<(usize, FaultMode)>);

impl FromStr for Scenario {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Scenario, SimError> {
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(Scenario::default());
        }
        let bad = || SimError::Scenario(s.to_string());
        s.split(',')
            .map(|part| {
                let (mode, i) = part.trim().split_once(':').ok_or_else(bad)?;
                let mode = match mode {
                    "persistent" => FaultMode::Persistent,
                    "transient" => FaultMode::Transient,
                    _ => return Err(bad()),
                };
                let i = i.parse::<usize>().map_err(|_| bad())?;
                Ok((i, mode))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Scenario)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("none");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(i, m)| match m {
                FaultMode::Persistent => format!("persistent:{i}"),
                FaultMode::Transient => format!("transient:{i}"),
            })
            .collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct World {
    health: Vec<Health>,
    flows: Vec<Flow>,
    modes: Vec<Option<FaultMode>>,
    clock: u64,
}

impl World {
    pub fn new(n: usize, faults: &[(usize, FaultMode)]) -> Result<World, SimError> {
        let mut w = World {
            health: vec![Health::Ok; n],
            flows: vec![Flow::Open; n],
            modes: vec![None; n],
            clock: 0,
        };
        for &(i, mode) in faults {
            let k = w.index(i)?;
            if w.modes[k].is_some() {
                return Err(SimError::DuplicateInstrument(i));
            }
            w.modes[k] = Some(mode);
            w.health[k] = Health::Babbling;
        }
        Ok(w)
    }

    fn index(&self, i: usize) -> Result<usize, SimError> {
        if i == 0 || i > self.health.len() {
            return Err(SimError::OutOfRange {
                instrument: i,
                n: self.health.len(),
            });
        }
        Ok(i - 1)
    }

    pub fn instruments(&self) -> usize {
        self.health.len()
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn health(&self, i: usize) -> Health {
        self.health[i - 1]
    }

    pub fn flow(&self, i: usize) -> Flow {
        self.flows[i - 1]
    }

    pub fn apply(&mut self, a: PortAction) -> Result<(), SimError> {
        let k = self.index(a.instrument())?;
        match a {
            PortAction::Close(_) => {
                self.flows[k] = Flow::Closed;
                if self.modes[k] == Some(FaultMode::Transient) {
                    self.health[k] = Health::Ok;
                    self.modes[k] = None;
                }
            }
            PortAction::Open(_) => self.flows[k] = Flow::Open,
        }
        self.clock += 1;
        Ok(())
    }

    /// Health-check answer, without advancing the clock.
    pub fn observe_check(&self) -> CheckResponse {
        let babbling_open = self
            .health
            .iter()
            .zip(&self.flows)
            .any(|(h, f)| *h == Health::Babbling && *f == Flow::Open);
        if babbling_open {
            CheckResponse::Sat
        } else {
            CheckResponse::Unsat
        }
    }

    /// Issues a health check, advancing the clock.
    pub fn check(&mut self) -> CheckResponse {
        self.clock += 1;
        self.observe_check()
    }

    /// One character per instrument: `o`/`c` healthy with port open/closed,
    /// `B`/`b` babbling with port open/closed.
    pub fn digest(&self) -> String {
        self.health
            .iter()
            .zip(&self.flows)
            .map(|(h, f)| match (h, f) {
                (Health::Ok, Flow::Open) => 'o',
                (Health::Ok, Flow::Closed) => 'c',
                (Health::Babbling, Flow::Open) => 'B',
                (Health::Babbling, Flow::Closed) => 'b',
            })
            .collect()
    }
}

pub fn init_world(n: usize, scenario: &Scenario) -> Result<World, SimError> {
    World::new(n, &scenario.0)
}

/// Applies a port action given by event name.
pub fn apply_action(w: &mut World, action: &str) -> Result<(), SimError> {
    let a = PortAction::parse(action).ok_or_else(|| SimError::UnknownAction(action.to_string()))?;
    w.apply(a)
}

pub fn observe_check(w: &World) -> CheckResponse {
    w.observe_check()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: u64,
    pub event: String,
    pub digest: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    /// Nominal health-check rate; steps are not timed.
    pub check_rate_hz: u32,
    pub entries: Vec<TraceEntry>,
}

impl ExecutionTrace {
    fn new() -> ExecutionTrace {
        ExecutionTrace {
            check_rate_hz: 1,
            entries: Vec::new(),
        }
    }

    fn push(&mut self, w: &World, event: &str) {
        self.entries.push(TraceEntry {
            step: w.clock(),
            event: event.to_string(),
            digest: w.digest(),
        });
    }

    /// One `step event digest` line per entry.
    pub fn to_log(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{} {} {}\n", e.step, e.event, e.digest))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Execution {
    pub verdicts: BTreeMap<String, PlanVerdict>,
    pub trace: ExecutionTrace,
}

/// Walks `plan` against the world: port actions change it, `check` is
/// recorded, and each branch follows the world's health-check answer.
pub fn execute_plan(w: &mut World, plan: &ConditionalPlan) -> Result<Execution, SimError> {
    let mut trace = ExecutionTrace::new();
    let verdicts = walk(w, &plan.root, &mut trace)?;
    Ok(Execution { verdicts, trace })
}

fn walk(
    w: &mut World,
    node: &PlanNode,
    trace: &mut ExecutionTrace,
) -> Result<BTreeMap<String, PlanVerdict>, SimError> {
    let mut node = node;
    loop {
        match node {
            PlanNode::Leaf { verdicts } => return Ok(verdicts.clone()),
            PlanNode::Act { action, next, .. } => {
                if action == CHECK {
                    w.clock += 1;
                } else {
                    apply_action(w, action)?;
                }
                trace.push(w, action);
                node = next;
            }
            PlanNode::Branch { children } => {
                let r = w.observe_check().event_name();
                trace.push(w, r);
                node = children
                    .get(r)
                    .ok_or_else(|| SimError::MissingBranch(r.to_string()))?;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SessionOutcome {
    /// The opening health check found the network healthy; no diagnosis ran.
    Nominal {
        trace: ExecutionTrace,
    },
    Diagnosed(Execution),
}

/// Runs a plan rooted at the saturated session start: one health check,
/// then the plan if and only if the network reports saturation.
pub fn run_session(w: &mut World, plan: &ConditionalPlan) -> Result<SessionOutcome, SimError> {
    let mut trace = ExecutionTrace::new();
    let r = w.check();
    trace.push(w, CHECK);
    trace.push(w, r.event_name());
    if r == CheckResponse::Unsat {
        return Ok(SessionOutcome::Nominal { trace });
    }
    let verdicts = walk(w, &plan.root, &mut trace)?;
    Ok(SessionOutcome::Diagnosed(Execution { verdicts, trace }))
}
