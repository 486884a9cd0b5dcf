//! Active diagnoser: a complete deterministic automaton over the observable
//! events whose states pair a belief with one tag per fault.
//!
//! Tags are computed in two passes. Unambiguous beliefs get `safe` or `sure`
//! directly. An ambiguous fault is `discriminable` when some state reachable
//! through the transition function (never through the sink) is certain about
//! it, and `nondiscriminable` otherwise. The empty belief is a single shared
//! sink, tagged `nonadmissible` everywhere and absorbing every observable.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::des::{Automaton, Event, EventId};
use crate::diagnoser::{Belief, BeliefEngine, DiagnosisError, FaultTable, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Safe,
    Sure,
    Discriminable,
    Nondiscriminable,
    Nonadmissible,
}

impl Tag {
    pub fn is_certain(self) -> bool {
        matches!(self, Tag::Safe | Tag::Sure)
    }

    pub const ALL: [Tag; 5] = [
        Tag::Safe,
        Tag::Sure,
        Tag::Discriminable,
        Tag::Nondiscriminable,
        Tag::Nonadmissible,
    ];
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::Safe => "safe",
            Tag::Sure => "sure",
            Tag::Discriminable => "discriminable",
            Tag::Nondiscriminable => "nondiscriminable",
            Tag::Nonadmissible => "nonadmissible",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdState {
    pub belief: Belief,
    pub tags: Vec<Tag>,
    /// Per target: the belief is entirely explained by hypotheses in which
    /// the fault has not occurred yet. Such ambiguity only resolves if the
    /// fault happens later, so no finite plan can be guaranteed to settle it.
    pub latent: Vec<bool>,
}

impl AdState {
    pub fn is_sink(&self) -> bool {
        self.belief.is_empty()
    }
}

pub type AdStateId = usize;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActiveDiagnoser {
    ba_states: Vec<String>,
    faults: FaultTable,
    targets: Vec<String>,
    target_bits: Vec<usize>,
    observables: Vec<Event>,
    states: Vec<AdState>,
    initial: AdStateId,
    sink: Option<AdStateId>,
    delta: Vec<Vec<AdStateId>>,
}

/// Builds the active diagnoser of `ba`, tagging the faults in `targets`
/// (all fault events when `targets` is empty).
pub fn build_active_diagnoser(
    ba: &Automaton,
    targets: &[&str],
) -> Result<ActiveDiagnoser, DiagnosisError> {
    let engine = BeliefEngine::new(ba)?;
    let faults = engine.faults().clone();
    let targets: Vec<String> = if targets.is_empty() {
        faults.names().to_vec()
    } else {
        targets.iter().map(|t| t.to_string()).collect()
    };
    let target_bits = targets
        .iter()
        .map(|t| faults.bit(t))
        .collect::<Result<Vec<_>, _>>()?;

    let obs: Vec<EventId> = (0..ba.events().len() as EventId)
        .filter(|&e| ba.event(e).observable)
        .collect();

    let mut index: HashMap<Belief, AdStateId> = HashMap::new();
    let mut beliefs: Vec<Belief> = vec![engine.initial()];
    index.insert(beliefs[0].clone(), 0);
    let mut delta: Vec<Vec<AdStateId>> = Vec::new();
    let mut i = 0;
    while i < beliefs.len() {
        let mut row = Vec::with_capacity(obs.len());
        if beliefs[i].is_empty() {
            row.resize(obs.len(), i);
        } else {
            for &o in &obs {
                let next = engine.step(&beliefs[i], o);
                let id = *index.entry(next.clone()).or_insert_with(|| {
                    beliefs.push(next);
                    beliefs.len() - 1
                });
                row.push(id);
            }
        }
        delta.push(row);
        i += 1;
    }

    let sink = beliefs.iter().position(Belief::is_empty);
    let states = beliefs
        .into_iter()
        .map(|belief| {
            let latent = target_bits
                .iter()
                .map(|&bit| {
                    belief.verdict(bit) == Verdict::Ambiguous
                        && engine.closure(
                            belief
                                .entries()
                                .iter()
                                .copied()
                                .filter(|e| !e.faults.contains(bit)),
                        ) == belief
                })
                .collect();
            AdState {
                belief,
                tags: Vec::new(),
                latent,
            }
        })
        .collect();
    let mut ad = ActiveDiagnoser {
        ba_states: ba.states().map(|s| ba.state_name(s).to_string()).collect(),
        faults,
        targets,
        target_bits,
        observables: obs.iter().map(|&o| ba.event(o).clone()).collect(),
        states,
        initial: 0,
        sink,
        delta,
    };
    ad.compute_tags();
    Ok(ad)
}

impl ActiveDiagnoser {
    /// Recomputes every tag from the beliefs and the transition structure.
    pub fn compute_tags(&mut self) {
        let n = self.states.len();
        for i in 0..n {
            let tags = if self.states[i].is_sink() {
                vec![Tag::Nonadmissible; self.target_bits.len()]
            } else {
                self.target_bits
                    .iter()
                    .map(|&bit| match self.states[i].belief.verdict(bit) {
                        Verdict::Safe => Tag::Safe,
                        Verdict::Sure => Tag::Sure,
                        Verdict::Ambiguous => Tag::Nondiscriminable,
                    })
                    .collect()
            };
            self.states[i].tags = tags;
        }

        let mut preds: Vec<Vec<AdStateId>> = vec![Vec::new(); n];
        for (s, row) in self.delta.iter().enumerate() {
            if Some(s) == self.sink {
                continue;
            }
            for &t in row {
                if Some(t) != self.sink {
                    preds[t].push(s);
                }
            }
        }
        for p in &mut preds {
            p.sort_unstable();
            p.dedup();
        }

        for i in 0..self.target_bits.len() {
            let mut reaches = vec![false; n];
            let mut queue: VecDeque<AdStateId> = (0..n)
                .filter(|&s| self.states[s].tags[i].is_certain())
                .collect();
            for &s in &queue {
                reaches[s] = true;
            }
            while let Some(s) = queue.pop_front() {
                for &p in &preds[s] {
                    if !reaches[p] {
                        reaches[p] = true;
                        queue.push_back(p);
                    }
                }
            }
            for (state, &reached) in self.states.iter_mut().zip(&reaches) {
                if reached && state.tags[i] == Tag::Nondiscriminable {
                    state.tags[i] = Tag::Discriminable;
                }
            }
        }
    }

    /// Number of states, not counting the nonadmissible sink.
    pub fn node_count(&self) -> usize {
        self.states.len() - usize::from(self.sink.is_some())
    }

    /// Number of states including the sink.
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> AdStateId {
        self.initial
    }

    pub fn sink(&self) -> Option<AdStateId> {
        self.sink
    }

    pub fn is_sink(&self, s: AdStateId) -> bool {
        Some(s) == self.sink
    }

    pub fn state(&self, s: AdStateId) -> &AdState {
        &self.states[s]
    }

    pub fn states(&self) -> impl Iterator<Item = AdStateId> {
        0..self.states.len()
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn faults(&self) -> &FaultTable {
        &self.faults
    }

    pub fn target_index(&self, fault: &str) -> Option<usize> {
        self.targets.iter().position(|t| t == fault)
    }

    pub fn ba_state_name(&self, s: u32) -> &str {
        &self.ba_states[s as usize]
    }

    pub fn observables(&self) -> &[Event] {
        &self.observables
    }

    pub fn observable_index(&self, name: &str) -> Option<usize> {
        self.observables.iter().position(|e| e.name == name)
    }

    /// Successor by observable index.
    pub fn delta(&self, s: AdStateId, o: usize) -> AdStateId {
        self.delta[s][o]
    }

    pub fn successor(&self, s: AdStateId, event: &str) -> Option<AdStateId> {
        self.observable_index(event).map(|o| self.delta[s][o])
    }

    /// Replays an observable trace from the initial state.
    pub fn run<'t>(
        &self,
        trace: impl IntoIterator<Item = &'t str>,
    ) -> Result<AdStateId, DiagnosisError> {
        trace.into_iter().try_fold(self.initial, |s, o| {
            self.successor(s, o)
                .ok_or_else(|| DiagnosisError::UnknownObservable(o.to_string()))
        })
    }

    pub fn tag(&self, s: AdStateId, target: usize) -> Tag {
        self.states[s].tags[target]
    }

    pub fn tags(&self, s: AdStateId) -> &[Tag] {
        &self.states[s].tags
    }

    pub fn is_solvable(&self, s: AdStateId) -> bool {
        is_solvable(&self.states[s])
    }

    pub fn is_latent(&self, s: AdStateId, target: usize) -> bool {
        self.states[s].latent[target]
    }

    /// Discriminable, and not merely because the fault may still occur.
    pub fn is_pending(&self, s: AdStateId, target: usize) -> bool {
        self.tag(s, target) == Tag::Discriminable && !self.is_latent(s, target)
    }

    /// Responses (observable non-actions) that do not lead to the sink.
    pub fn feasible_responses(&self, s: AdStateId) -> impl Iterator<Item = usize> + '_ {
        self.observables
            .iter()
            .enumerate()
            .filter(move |(o, e)| e.is_response() && !self.is_sink(self.delta[s][*o]))
            .map(|(o, _)| o)
    }

    /// Count of (state, fault) pairs per tag, over non-sink states.
    pub fn tag_histogram(&self) -> BTreeMap<Tag, usize> {
        let mut h = BTreeMap::new();
        for s in self.states() {
            if self.is_sink(s) {
                continue;
            }
            for &t in self.tags(s) {
                *h.entry(t).or_insert(0) += 1;
            }
        }
        h
    }

    pub fn to_graph(&self) -> AdGraph {
        let nodes = self
            .states()
            .map(|s| AdGraphNode {
                id: s,
                sink: self.is_sink(s),
                entries: self.states[s]
                    .belief
                    .entries()
                    .iter()
                    .map(|e| {
                        let mut name = self.ba_state_name(e.state).to_string();
                        for f in self.faults.names_of(e.faults) {
                            name.push('+');
                            name.push_str(f);
                        }
                        name
                    })
                    .collect(),
                tags: self
                    .targets
                    .iter()
                    .cloned()
                    .zip(self.tags(s).iter().copied())
                    .collect(),
            })
            .collect();
        let edges = self
            .states()
            .flat_map(|s| {
                self.observables
                    .iter()
                    .enumerate()
                    .map(move |(o, e)| AdGraphEdge {
                        from: s,
                        event: e.name.clone(),
                        to: self.delta[s][o],
                    })
            })
            .collect();
        AdGraph {
            initial: self.initial,
            nodes,
            edges,
        }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph active_diagnoser {\n  rankdir=LR;\n");
        for s in self.states() {
            let label = if self.is_sink(s) {
                "sink".to_string()
            } else {
                self.targets
                    .iter()
                    .zip(self.tags(s))
                    .map(|(f, t)| format!("{f}:{t}"))
                    .collect::<Vec<_>>()
                    .join("\\n")
            };
            out.push_str(&format!("  n{s} [label=\"{s}\\n{label}\"];\n"));
        }
        for s in self.states() {
            if self.is_sink(s) {
                continue;
            }
            for (o, e) in self.observables.iter().enumerate() {
                let t = self.delta[s][o];
                if !self.is_sink(t) {
                    out.push_str(&format!("  n{s} -> n{t} [label=\"{}\"];\n", e.name));
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

pub fn is_solvable(s: &AdState) -> bool {
    s.tags.contains(&Tag::Discriminable)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdGraph {
    pub initial: AdStateId,
    pub nodes: Vec<AdGraphNode>,
    pub edges: Vec<AdGraphEdge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdGraphNode {
    pub id: AdStateId,
    pub sink: bool,
    /// Belief entries as `state` or `state+fault+fault`.
    pub entries: Vec<String>,
    pub tags: BTreeMap<String, Tag>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdGraphEdge {
    pub from: AdStateId,
    pub event: String,
    pub to: AdStateId,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::des::AutomatonBuilder;

    /// `f` happens silently, then `o` reveals it; `p` is possible either way.
    fn revealing() -> Automaton {
        let mut b = AutomatonBuilder::new("m");
        b.event(Event::fault("f"))
            .event(Event::observable("o"))
            .event(Event::observable("p"))
            .state("ok")
            .state("bad")
            .initial("ok")
            .transition("ok", "f", "bad")
            .transition("ok", "p", "ok")
            .transition("bad", "p", "bad")
            .transition("bad", "o", "bad");
        b.build().unwrap()
    }

    #[test]
    fn one_step_witness_makes_discriminable() {
        let ad = build_active_diagnoser(&revealing(), &[]).unwrap();
        assert_eq!(ad.tags(ad.initial()), &[Tag::Discriminable]);
        let after = ad.successor(ad.initial(), "o").unwrap();
        assert_eq!(ad.tags(after), &[Tag::Sure]);
        assert!(ad.is_solvable(ad.initial()));
        assert!(!ad.is_solvable(after));
    }

    #[test]
    fn mixed_forever_is_nondiscriminable() {
        let mut b = AutomatonBuilder::new("m");
        b.event(Event::fault("f"))
            .event(Event::observable("p"))
            .state("ok")
            .state("bad")
            .initial("ok")
            .transition("ok", "f", "bad")
            .transition("ok", "p", "ok")
            .transition("bad", "p", "bad");
        let ad = build_active_diagnoser(&b.build().unwrap(), &[]).unwrap();
        assert_eq!(ad.tags(ad.initial()), &[Tag::Nondiscriminable]);
        assert!(!ad.is_solvable(ad.initial()));
    }

    #[test]
    fn no_faults_means_all_safe_and_no_sink() {
        let mut b = AutomatonBuilder::new("m");
        b.event(Event::observable("x"))
            .state("a")
            .state("b")
            .initial("a")
            .transition("a", "x", "b")
            .transition("b", "x", "a");
        let ad = build_active_diagnoser(&b.build().unwrap(), &[]).unwrap();
        assert!(ad.sink().is_none());
        assert_eq!(ad.node_count(), 2);
        assert!(ad.tags(ad.initial()).is_empty());
    }

    #[test]
    fn sink_absorbs_and_is_nonadmissible() {
        let mut b = revealing().to_builder();
        b.event(Event::observable("q")).transition("ok", "q", "ok");
        let ad = build_active_diagnoser(&b.build().unwrap(), &[]).unwrap();
        let after_o = ad.successor(ad.initial(), "o").unwrap();
        let sink = ad.successor(after_o, "q").unwrap();
        assert_eq!(ad.sink(), Some(sink));
        for o in 0..ad.observables().len() {
            assert_eq!(ad.delta(sink, o), sink);
        }
        assert_eq!(ad.tags(sink), &[Tag::Nonadmissible]);
        assert_eq!(ad.node_count(), ad.state_count() - 1);
    }

    #[test]
    fn unknown_target_rejected() {
        assert!(matches!(
            build_active_diagnoser(&revealing(), &["nope"]),
            Err(DiagnosisError::UnknownFault(_))
        ));
    }

    #[test]
    fn solvable_helper() {
        let s = AdState {
            belief: Belief::default(),
            tags: vec![Tag::Sure, Tag::Sure],
            latent: vec![false; 2],
        };
        assert!(!is_solvable(&s));
        let s = AdState {
            belief: Belief::default(),
            tags: vec![Tag::Sure, Tag::Discriminable, Tag::Safe],
            latent: vec![false; 3],
        };
        assert!(is_solvable(&s));
    }
}
