//! Fault-labelled diagnoser: subset construction with unobservable closure.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::des::{Automaton, EventId, StateId};

/// Maximum number of fault events a belief can track.
pub const MAX_FAULTS: usize = 64;

/// Set of fault indices, bit `i` standing for the `i`-th fault of a [`FaultTable`].
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FaultSet(pub u64);

impl FaultSet {
    pub const EMPTY: FaultSet = FaultSet(0);

    pub fn contains(self, bit: usize) -> bool {
        self.0 >> bit & 1 == 1
    }

    pub fn with(self, bit: usize) -> FaultSet {
        FaultSet(self.0 | 1 << bit)
    }

    pub fn bits(self) -> impl Iterator<Item = usize> {
        (0..MAX_FAULTS).filter(move |&b| self.contains(b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BeliefEntry {
    pub state: StateId,
    pub faults: FaultSet,
}

/// A canonical set of belief entries, sorted by `(state, faults)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Belief(Vec<BeliefEntry>);

impl Belief {
    pub fn from_entries(entries: impl IntoIterator<Item = BeliefEntry>) -> Belief {
        let mut v: Vec<BeliefEntry> = entries.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Belief(v)
    }

    pub fn entries(&self) -> &[BeliefEntry] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Per-fault verdict. Meaningless on an empty belief.
    pub fn verdict(&self, bit: usize) -> Verdict {
        let with = self.0.iter().filter(|e| e.faults.contains(bit)).count();
        if with == 0 {
            Verdict::Safe
        } else if with == self.0.len() {
            Verdict::Sure
        } else {
            Verdict::Ambiguous
        }
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.0.iter().map(|e| e.state)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Safe,
    Sure,
    Ambiguous,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Safe => "safe",
            Verdict::Sure => "sure",
            Verdict::Ambiguous => "ambiguous",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiagnosisError {
    #[error("model has {0} fault events; at most {MAX_FAULTS} are supported")]
    TooManyFaults(usize),
    #[error("`{0}` is not a fault event of the model")]
    UnknownFault(String),
    #[error("`{0}` is not an observable event of the model")]
    UnknownObservable(String),
    #[error("inconsistent observation `{event}` in diagnoser state {state}")]
    InconsistentObservation { state: usize, event: String },
}

/// The model's fault events in lexicographic order with their bit positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultTable {
    names: Vec<String>,
}

impl FaultTable {
    pub fn of(ba: &Automaton) -> Result<FaultTable, DiagnosisError> {
        let names: Vec<String> = ba.fault_events().iter().map(|e| e.name.clone()).collect();
        if names.len() > MAX_FAULTS {
            return Err(DiagnosisError::TooManyFaults(names.len()));
        }
        Ok(FaultTable { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bit(&self, fault: &str) -> Result<usize, DiagnosisError> {
        self.names
            .iter()
            .position(|n| n == fault)
            .ok_or_else(|| DiagnosisError::UnknownFault(fault.to_string()))
    }

    pub fn names_of(&self, set: FaultSet) -> Vec<&str> {
        set.bits().map(|b| self.names[b].as_str()).collect()
    }
}

/// Observable stepping and unobservable closure over a behaviour automaton.
pub struct BeliefEngine<'a> {
    ba: &'a Automaton,
    faults: FaultTable,
    fault_bit: Vec<Option<usize>>,
}

impl<'a> BeliefEngine<'a> {
    pub fn new(ba: &'a Automaton) -> Result<BeliefEngine<'a>, DiagnosisError> {
        let faults = FaultTable::of(ba)?;
        let fault_bit = ba
            .events()
            .iter()
            .map(|e| {
                if e.fault {
                    faults.bit(&e.name).ok()
                } else {
                    None
                }
            })
            .collect();
        Ok(BeliefEngine {
            ba,
            faults,
            fault_bit,
        })
    }

    pub fn automaton(&self) -> &Automaton {
        self.ba
    }

    pub fn faults(&self) -> &FaultTable {
        &self.faults
    }

    /// Follows unobservable transitions to a fixpoint, accumulating faults.
    pub fn closure(&self, seeds: impl IntoIterator<Item = BeliefEntry>) -> Belief {
        let mut seen: HashSet<BeliefEntry> = HashSet::new();
        let mut stack: Vec<BeliefEntry> = Vec::new();
        for e in seeds {
            if seen.insert(e) {
                stack.push(e);
            }
        }
        while let Some(entry) = stack.pop() {
            for &(ev, target) in self.ba.successors(entry.state) {
                if self.ba.event(ev).observable {
                    continue;
                }
                let faults = match self.fault_bit[ev as usize] {
                    Some(bit) => entry.faults.with(bit),
                    None => entry.faults,
                };
                let next = BeliefEntry {
                    state: target,
                    faults,
                };
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        Belief::from_entries(seen)
    }

    pub fn initial(&self) -> Belief {
        self.closure([BeliefEntry {
            state: self.ba.initial(),
            faults: FaultSet::EMPTY,
        }])
    }

    /// Observable step on `o` followed by closure. Empty when `o` is impossible.
    pub fn step(&self, belief: &Belief, o: EventId) -> Belief {
        let moved = belief.entries().iter().filter_map(|e| {
            self.ba.successor(e.state, o).map(|t| BeliefEntry {
                state: t,
                faults: e.faults,
            })
        });
        self.closure(moved)
    }
}

/// Classic diagnoser. Unlike the active diagnoser it is not completed:
/// impossible observations simply have no transition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diagnoser {
    ba_states: Vec<String>,
    faults: FaultTable,
    observables: Vec<String>,
    beliefs: Vec<Belief>,
    initial: usize,
    delta: Vec<Vec<Option<usize>>>,
}

pub fn build_diagnoser(ba: &Automaton) -> Result<Diagnoser, DiagnosisError> {
    let engine = BeliefEngine::new(ba)?;
    let obs: Vec<EventId> = (0..ba.events().len() as EventId)
        .filter(|&e| ba.event(e).observable)
        .collect();

    let mut index: HashMap<Belief, usize> = HashMap::new();
    let mut beliefs = vec![engine.initial()];
    index.insert(beliefs[0].clone(), 0);
    let mut delta: Vec<Vec<Option<usize>>> = Vec::new();
    let mut i = 0;
    while i < beliefs.len() {
        let mut row = Vec::with_capacity(obs.len());
        for &o in &obs {
            let next = engine.step(&beliefs[i], o);
            if next.is_empty() {
                row.push(None);
                continue;
            }
            let id = *index.entry(next.clone()).or_insert_with(|| {
                beliefs.push(next);
                beliefs.len() - 1
            });
            row.push(Some(id));
        }
        delta.push(row);
        i += 1;
    }

    Ok(Diagnoser {
        ba_states: ba.states().map(|s| ba.state_name(s).to_string()).collect(),
        faults: engine.faults,
        observables: obs.iter().map(|&o| ba.event(o).name.clone()).collect(),
        beliefs,
        initial: 0,
        delta,
    })
}

impl Diagnoser {
    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn state_count(&self) -> usize {
        self.beliefs.len()
    }

    pub fn belief(&self, s: usize) -> &Belief {
        &self.beliefs[s]
    }

    pub fn faults(&self) -> &FaultTable {
        &self.faults
    }

    pub fn observables(&self) -> &[String] {
        &self.observables
    }

    pub fn transition(&self, s: usize, o: usize) -> Option<usize> {
        self.delta[s][o]
    }

    pub fn step(&self, s: usize, o: &str) -> Result<usize, DiagnosisError> {
        let idx = self
            .observables
            .iter()
            .position(|n| n == o)
            .ok_or_else(|| DiagnosisError::UnknownObservable(o.to_string()))?;
        self.delta[s][idx].ok_or_else(|| DiagnosisError::InconsistentObservation {
            state: s,
            event: o.to_string(),
        })
    }

    /// Replays an observable trace from the initial state.
    pub fn run<'t>(
        &self,
        trace: impl IntoIterator<Item = &'t str>,
    ) -> Result<usize, DiagnosisError> {
        trace
            .into_iter()
            .try_fold(self.initial, |s, o| self.step(s, o))
    }

    /// Verdicts for the named faults at state `s`.
    pub fn diagnosis(&self, s: usize, faults: &[&str]) -> Result<Vec<Verdict>, DiagnosisError> {
        faults
            .iter()
            .map(|f| Ok(self.beliefs[s].verdict(self.faults.bit(f)?)))
            .collect()
    }

    pub fn to_graph(&self) -> DiagnoserGraph {
        let nodes = self
            .beliefs
            .iter()
            .enumerate()
            .map(|(id, b)| GraphNode {
                id,
                entries: b
                    .entries()
                    .iter()
                    .map(|e| NamedEntry {
                        state: self.ba_states[e.state as usize].clone(),
                        faults: self
                            .faults
                            .names_of(e.faults)
                            .into_iter()
                            .map(str::to_string)
                            .collect(),
                    })
                    .collect(),
                verdicts: self
                    .faults
                    .names()
                    .iter()
                    .enumerate()
                    .map(|(bit, f)| (f.clone(), b.verdict(bit)))
                    .collect(),
            })
            .collect();
        let edges = self
            .delta
            .iter()
            .enumerate()
            .flat_map(|(s, row)| {
                row.iter().enumerate().filter_map(move |(o, t)| {
                    t.map(|t| GraphEdge {
                        from: s,
                        event: self.observables[o].clone(),
                        to: t,
                    })
                })
            })
            .collect();
        DiagnoserGraph {
            initial: self.initial,
            faults: self.faults.names().to_vec(),
            nodes,
            edges,
        }
    }
}

/// Interchange form of a diagnoser: nodes are beliefs with verdicts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnoserGraph {
    pub initial: usize,
    pub faults: Vec<String>,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: usize,
    pub entries: Vec<NamedEntry>,
    pub verdicts: std::collections::BTreeMap<String, Verdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedEntry {
    pub state: String,
    pub faults: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: usize,
    pub event: String,
    pub to: usize,
}
