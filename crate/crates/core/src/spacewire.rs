//! SpaceWire instrument network: one four-state automaton per instrument
//! (router port open or closed, instrument healthy or babbling), health
//! checks answered `sat` when a babbling instrument still has its port open,
//! and the classic reconfiguration strategy used as a baseline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::active::{ActiveDiagnoser, AdStateId};
use crate::cost::Cost;
use crate::des::{
    splice_check, Automaton, AutomatonBuilder, Event, Model, ModelError, STATE_SEPARATOR,
};
use crate::simulator::World;

pub const MAX_INSTRUMENTS: usize = 6;

pub const OPEN_OK: &str = "open_ok";
pub const OPEN_FAIL: &str = "open_fail";
pub const CLOSED_OK: &str = "closed_ok";
pub const CLOSED_FAIL: &str = "closed_fail";

pub const CHECK: &str = "check";
pub const SAT: &str = "sat";
pub const UNSAT: &str = "unsat";
pub const SATURATED: &str = "saturated";
pub const UNSATURATED: &str = "unsaturated";

/// Observations that lead from the diagnoser's initial state to the usual
/// session start: every port open, network reported saturated.
pub const SATURATED_ROOT_TRACE: [&str; 2] = [CHECK, SAT];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpacewireError {
    #[error("instrument count {0} out of range 1..={MAX_INSTRUMENTS}")]
    InstrumentCount(usize),
    #[error("cost override for unknown event `{0}`")]
    UnknownCostEvent(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn fault_event(i: usize) -> String {
    format!("fault{i}")
}

pub fn close_event(i: usize) -> String {
    format!("close_flow{i}")
}

pub fn open_event(i: usize) -> String {
    format!("open_flow{i}")
}

pub fn instrument_name(i: usize) -> String {
    format!("instrument{i}")
}

/// Port action parsed from an event name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PortAction {
    Close(usize),
    Open(usize),
}

impl PortAction {
    pub fn parse(event: &str) -> Option<PortAction> {
        let num = |s: &str| s.parse::<usize>().ok().filter(|&i| i >= 1);
        if let Some(i) = event.strip_prefix("close_flow") {
            num(i).map(PortAction::Close)
        } else if let Some(i) = event.strip_prefix("open_flow") {
            num(i).map(PortAction::Open)
        } else {
            None
        }
    }

    pub fn instrument(self) -> usize {
        match self {
            PortAction::Close(i) | PortAction::Open(i) => i,
        }
    }
}

impl fmt::Display for PortAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortAction::Close(i) => write!(f, "close_flow{i}"),
            PortAction::Open(i) => write!(f, "open_flow{i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckResponse {
    Sat,
    Unsat,
}

impl CheckResponse {
    pub fn event_name(self) -> &'static str {
        match self {
            CheckResponse::Sat => SAT,
            CheckResponse::Unsat => UNSAT,
        }
    }
}

impl fmt::Display for CheckResponse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.event_name())
    }
}

/// Event table with default costs: port actions 1, check 0.
pub fn default_events(n: usize) -> Vec<Event> {
    let mut events = Vec::new();
    for i in 1..=n {
        events.push(Event::fault(fault_event(i)));
        events.push(Event::action(close_event(i), Cost::integer(1)));
        events.push(Event::action(open_event(i), Cost::integer(1)));
    }
    events.push(Event::action(CHECK, Cost::ZERO));
    events.push(Event::observable(SAT));
    events.push(Event::observable(UNSAT));
    events.sort_by(|a, b| a.name.cmp(&b.name));
    events
}

/// Automaton of instrument `i` and its router port.
pub fn instrument_component(i: usize, events: &BTreeMap<String, Event>) -> Automaton {
    let (f, c, o) = (fault_event(i), close_event(i), open_event(i));
    let mut b = AutomatonBuilder::new(instrument_name(i));
    for e in [&f, &c, &o] {
        b.event(events[e].clone());
    }
    for s in [OPEN_OK, OPEN_FAIL, CLOSED_OK, CLOSED_FAIL] {
        b.state(s);
    }
    b.initial(OPEN_OK)
        .label(OPEN_FAIL, SATURATED)
        .transition(OPEN_OK, &f, OPEN_FAIL)
        .transition(CLOSED_OK, &f, CLOSED_FAIL)
        .transition(OPEN_OK, &c, CLOSED_OK)
        .transition(OPEN_FAIL, &c, CLOSED_FAIL)
        .transition(CLOSED_OK, &o, OPEN_OK)
        .transition(CLOSED_FAIL, &o, OPEN_FAIL);
    b.build().expect("instrument template is well formed")
}

/// Generates the `n`-instrument model with default costs.
pub fn gen_spacewire_model(n: usize) -> Result<Model, SpacewireError> {
    gen_spacewire_model_with_costs(n, &BTreeMap::new())
}

/// Generates the `n`-instrument model, overriding action costs by event name.
pub fn gen_spacewire_model_with_costs(
    n: usize,
    costs: &BTreeMap<String, Cost>,
) -> Result<Model, SpacewireError> {
    if !(1..=MAX_INSTRUMENTS).contains(&n) {
        return Err(SpacewireError::InstrumentCount(n));
    }
    let mut events = default_events(n);
    for (name, cost) in costs {
        let e = events
            .iter_mut()
            .find(|e| &e.name == name && e.action)
            .ok_or_else(|| SpacewireError::UnknownCostEvent(name.clone()))?;
        e.cost = *cost;
    }
    let table: BTreeMap<String, Event> =
        events.iter().map(|e| (e.name.clone(), e.clone())).collect();
    let components = (1..=n).map(|i| instrument_component(i, &table)).collect();
    Ok(Model {
        name: format!("spacewire{n}"),
        events,
        components,
    })
}

/// Health-check answer for a global state given by its local state names.
pub fn saturation_predicate<S: AsRef<str>>(locals: &[S]) -> CheckResponse {
    if locals.iter().any(|s| s.as_ref() == OPEN_FAIL) {
        CheckResponse::Sat
    } else {
        CheckResponse::Unsat
    }
}

/// Same as [`saturation_predicate`] on a composed state name.
pub fn saturation_of(state: &str) -> CheckResponse {
    let locals: Vec<&str> = state.split(STATE_SEPARATOR).collect();
    saturation_predicate(&locals)
}

/// Composes the components and labels every state `saturated` or
/// `unsaturated`.
pub fn compose_labeled(model: &Model) -> Result<Automaton, SpacewireError> {
    let a = model.compose()?;
    let mut b = a.to_builder();
    for s in a.states() {
        if !a.has_label(s, SATURATED) {
            b.label(a.state_name(s), UNSATURATED);
        }
    }
    Ok(b.build()?)
}

/// Splices the health check into every state of the composed model.
pub fn splice_checks(model: &Model) -> Result<Automaton, SpacewireError> {
    let a = compose_labeled(model)?;
    let relevant: BTreeSet<_> = a.states().collect();
    splice_with(model, &a, &relevant)
}

fn splice_with(
    model: &Model,
    a: &Automaton,
    relevant: &BTreeSet<u32>,
) -> Result<Automaton, SpacewireError> {
    let find = |name: &str| {
        model
            .events
            .iter()
            .find(|e| e.name == name)
            .cloned()
            .ok_or_else(|| SpacewireError::Model(ModelError::UndeclaredEvent(name.to_string())))
    };
    let check = find(CHECK)?;
    let responses = BTreeMap::from([
        (SATURATED.to_string(), find(SAT)?),
        (UNSATURATED.to_string(), find(UNSAT)?),
    ]);
    Ok(splice_check(a, &check, &responses, relevant)?)
}

/// Behavior automaton for `n` instruments with default costs.
pub fn behavior_automaton(n: usize) -> Result<Automaton, SpacewireError> {
    splice_checks(&gen_spacewire_model(n)?)
}

/// Session-start state: all ports open and the network reported saturated.
pub fn saturated_root(ad: &ActiveDiagnoser) -> Option<AdStateId> {
    ad.run(SATURATED_ROOT_TRACE)
        .ok()
        .filter(|&s| !ad.is_sink(s))
}

/// Confirmation checks after a suspicious reopening.
pub const FDIR_RETRIES: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FdirOutcome {
    /// Events in execution order: port actions, `check`, and the response.
    pub trace: Vec<String>,
    pub incriminated: Vec<usize>,
    pub final_status: CheckResponse,
    /// Number of port open/close commands issued.
    pub reconfigurations: usize,
    /// True when the first check already reported a healthy network.
    pub nominal: bool,
}

/// Runs the reconfiguration baseline on `world`: check; if saturated,
/// close every port, then reopen them one at a time. A port whose
/// reopening saturates the network on the first check and on every
/// confirmation retry is incriminated and closed again.
pub fn fdir_baseline(world: &mut World) -> FdirOutcome {
    let mut out = FdirOutcome {
        trace: Vec::new(),
        incriminated: Vec::new(),
        final_status: CheckResponse::Unsat,
        reconfigurations: 0,
        nominal: false,
    };
    let check = |w: &mut World, out: &mut FdirOutcome| {
        let r = w.check();
        out.trace.push(CHECK.to_string());
        out.trace.push(r.event_name().to_string());
        r
    };
    let act = |w: &mut World, out: &mut FdirOutcome, a: PortAction| {
        w.apply(a).expect("baseline only addresses existing ports");
        out.trace.push(a.to_string());
        out.reconfigurations += 1;
    };
    if check(world, &mut out) == CheckResponse::Unsat {
        out.nominal = true;
        return out;
    }
    let n = world.instruments();
    for i in 1..=n {
        act(world, &mut out, PortAction::Close(i));
    }
    for i in 1..=n {
        act(world, &mut out, PortAction::Open(i));
        let mut saturated = check(world, &mut out) == CheckResponse::Sat;
        let mut retries = 0;
        while saturated && retries < FDIR_RETRIES {
            saturated = check(world, &mut out) == CheckResponse::Sat;
            retries += 1;
        }
        if saturated {
            out.incriminated.push(i);
            act(world, &mut out, PortAction::Close(i));
        }
    }
    out.final_status = check(world, &mut out);
    out
}
