use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::cost::Cost;

pub type StateId = u32;
pub type EventId = u32;

/// An event with the attributes diagnosis and planning care about.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub name: String,
    pub observable: bool,
    pub fault: bool,
    pub action: bool,
    pub cost: Cost,
}

impl Event {
    pub fn observable(name: impl Into<String>) -> Event {
        Event {
            name: name.into(),
            observable: true,
            fault: false,
            action: false,
            cost: Cost::ZERO,
        }
    }

    pub fn unobservable(name: impl Into<String>) -> Event {
        Event {
            observable: false,
            ..Event::observable(name)
        }
    }

    pub fn fault(name: impl Into<String>) -> Event {
        Event {
            fault: true,
            ..Event::unobservable(name)
        }
    }

    pub fn action(name: impl Into<String>, cost: Cost) -> Event {
        Event {
            action: true,
            cost,
            ..Event::observable(name)
        }
    }

    /// Observable events that are not actions: sensor readings, check responses.
    pub fn is_response(&self) -> bool {
        self.observable && !self.action
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: &str| ModelError::InvalidEvent {
            event: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.fault && self.observable {
            return Err(bad("fault events must be unobservable"));
        }
        if self.fault && self.action {
            return Err(bad("fault events cannot be actions"));
        }
        if self.action && !self.observable {
            return Err(bad("action events must be observable"));
        }
        if !self.action && !self.cost.is_zero() {
            return Err(bad("only actions carry a cost"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub source: StateId,
    pub event: EventId,
    pub target: StateId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    pub state_count: usize,
    pub event_count: usize,
    pub transition_count: usize,
}

impl fmt::Display for ModelStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "states={} events={} transitions={}",
            self.state_count, self.event_count, self.transition_count
        )
    }
}

/// Deterministic event-labelled automaton.
///
/// States and events are interned; event ids follow lexicographic name order
/// and each state's successor list is sorted by event id.
#[derive(Clone, Debug)]
pub struct Automaton {
    name: String,
    states: Vec<String>,
    state_index: HashMap<String, StateId>,
    labels: Vec<BTreeSet<String>>,
    initial: StateId,
    events: Vec<Event>,
    event_index: HashMap<String, EventId>,
    successors: Vec<Vec<(EventId, StateId)>>,
}

impl PartialEq for Automaton {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.initial_name() == other.initial_name()
            && self.events == other.events
            && self.sorted_states() == other.sorted_states()
            && self.named_transitions() == other.named_transitions()
            && self.named_labels() == other.named_labels()
    }
}

impl Eq for Automaton {}

impl Automaton {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        0..self.states.len() as StateId
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s as usize]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn initial_name(&self) -> &str {
        self.state_name(self.initial)
    }

    pub fn labels(&self, s: StateId) -> &BTreeSet<String> {
        &self.labels[s as usize]
    }

    pub fn has_label(&self, s: StateId, label: &str) -> bool {
        self.labels[s as usize].contains(label)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, e: EventId) -> &Event {
        &self.events[e as usize]
    }

    pub fn event_id(&self, name: &str) -> Option<EventId> {
        self.event_index.get(name).copied()
    }

    pub fn successors(&self, s: StateId) -> &[(EventId, StateId)] {
        &self.successors[s as usize]
    }

    pub fn successor(&self, s: StateId, e: EventId) -> Option<StateId> {
        let out = &self.successors[s as usize];
        out.binary_search_by_key(&e, |&(ev, _)| ev)
            .ok()
            .map(|i| out[i].1)
    }

    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        self.successors.iter().enumerate().flat_map(|(s, out)| {
            out.iter().map(move |&(event, target)| Transition {
                source: s as StateId,
                event,
                target,
            })
        })
    }

    pub fn transition_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    pub fn stats(&self) -> ModelStats {
        ModelStats {
            state_count: self.states.len(),
            event_count: self.events.len(),
            transition_count: self.transition_count(),
        }
    }

    /// Fault events in lexicographic order.
    pub fn fault_events(&self) -> Vec<&Event> {
        self.events.iter().filter(|e| e.fault).collect()
    }

    pub fn observable_events(&self) -> Vec<&Event> {
        self.events.iter().filter(|e| e.observable).collect()
    }

    fn sorted_states(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.states.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    pub(crate) fn named_transitions(&self) -> Vec<(&str, &str, &str)> {
        let mut v: Vec<_> = self
            .transitions()
            .map(|t| {
                (
                    self.state_name(t.source),
                    self.event(t.event).name.as_str(),
                    self.state_name(t.target),
                )
            })
            .collect();
        v.sort_unstable();
        v
    }

    pub(crate) fn named_labels(&self) -> Vec<(&str, &BTreeSet<String>)> {
        let mut v: Vec<_> = self
            .states()
            .filter(|&s| !self.labels(s).is_empty())
            .map(|s| (self.state_name(s), self.labels(s)))
            .collect();
        v.sort_unstable();
        v
    }

    pub fn to_builder(&self) -> AutomatonBuilder {
        let mut b = AutomatonBuilder::new(self.name.clone());
        for e in &self.events {
            b.event(e.clone());
        }
        for s in self.states() {
            b.state(self.state_name(s));
            for l in self.labels(s) {
                b.label(self.state_name(s), l.clone());
            }
        }
        b.initial(self.initial_name());
        for (src, ev, dst) in self.named_transitions() {
            b.transition(src, ev, dst);
        }
        b
    }

    /// Sub-automaton induced by the states reachable from the initial state.
    pub fn reachable(&self) -> Automaton {
        let mut seen = vec![false; self.states.len()];
        let mut order = vec![self.initial];
        seen[self.initial as usize] = true;
        let mut i = 0;
        while i < order.len() {
            let s = order[i];
            i += 1;
            for &(_, t) in self.successors(s) {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    order.push(t);
                }
            }
        }
        if order.len() == self.states.len() {
            return self.clone();
        }
        let mut b = AutomatonBuilder::new(self.name.clone());
        for e in &self.events {
            b.event(e.clone());
        }
        order.sort_unstable();
        for &s in &order {
            b.state(self.state_name(s));
            for l in self.labels(s) {
                b.label(self.state_name(s), l.clone());
            }
            for &(e, t) in self.successors(s) {
                b.transition(self.state_name(s), &self.event(e).name, self.state_name(t));
            }
        }
        b.initial(self.initial_name());
        b.build()
            .expect("restriction of a valid automaton is valid")
    }
}

/// Name-based builder; `build` interns everything and checks invariants.
#[derive(Clone, Debug, Default)]
pub struct AutomatonBuilder {
    name: String,
    events: Vec<Event>,
    states: Vec<String>,
    initial: Option<String>,
    labels: Vec<(String, String)>,
    transitions: Vec<(String, String, String)>,
}

impl AutomatonBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        AutomatonBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn event(&mut self, e: Event) -> &mut Self {
        self.events.push(e);
        self
    }

    pub fn state(&mut self, s: impl Into<String>) -> &mut Self {
        self.states.push(s.into());
        self
    }

    pub fn initial(&mut self, s: impl Into<String>) -> &mut Self {
        self.initial = Some(s.into());
        self
    }

    pub fn label(&mut self, s: impl Into<String>, l: impl Into<String>) -> &mut Self {
        self.labels.push((s.into(), l.into()));
        self
    }

    pub fn transition(
        &mut self,
        src: impl Into<String>,
        ev: impl Into<String>,
        dst: impl Into<String>,
    ) -> &mut Self {
        self.transitions.push((src.into(), ev.into(), dst.into()));
        self
    }

    pub fn build(&self) -> Result<Automaton, ModelError> {
        let mut events = self.events.clone();
        events.sort_by(|a, b| a.name.cmp(&b.name));
        for w in events.windows(2) {
            if w[0].name == w[1].name {
                return Err(ModelError::DuplicateEvent(w[0].name.clone()));
            }
        }
        for e in &events {
            e.validate()?;
        }
        let event_index: HashMap<String, EventId> = events
            .iter()
            .enumerate()
            .map(|(i, e)| (e.name.clone(), i as EventId))
            .collect();

        let mut state_index = HashMap::with_capacity(self.states.len());
        for (i, s) in self.states.iter().enumerate() {
            if state_index.insert(s.clone(), i as StateId).is_some() {
                return Err(ModelError::DuplicateState(s.clone()));
            }
        }
        let lookup = |s: &str| {
            state_index
                .get(s)
                .copied()
                .ok_or_else(|| ModelError::UnknownState(s.to_string()))
        };

        let initial = match &self.initial {
            Some(s) => lookup(s)?,
            None => return Err(ModelError::MissingInitial(self.name.clone())),
        };

        let mut labels = vec![BTreeSet::new(); self.states.len()];
        for (s, l) in &self.labels {
            labels[lookup(s)? as usize].insert(l.clone());
        }

        let mut successors: Vec<Vec<(EventId, StateId)>> = vec![Vec::new(); self.states.len()];
        for (src, ev, dst) in &self.transitions {
            let s = lookup(src)?;
            let t = lookup(dst)?;
            let e = *event_index
                .get(ev)
                .ok_or_else(|| ModelError::UndeclaredEvent(ev.clone()))?;
            successors[s as usize].push((e, t));
        }
        for (s, out) in successors.iter_mut().enumerate() {
            out.sort_unstable();
            out.dedup();
            for w in out.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(ModelError::Nondeterministic {
                        state: self.states[s].clone(),
                        event: events[w[0].0 as usize].name.clone(),
                    });
                }
            }
        }

        Ok(Automaton {
            name: self.name.clone(),
            states: self.states.clone(),
            state_index,
            labels,
            initial,
            events,
            event_index,
            successors,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> AutomatonBuilder {
        let mut b = AutomatonBuilder::new("a");
        b.event(Event::observable("go"))
            .state("s0")
            .state("s1")
            .initial("s0")
            .transition("s0", "go", "s1");
        b
    }

    #[test]
    fn stats_read_back() {
        let a = two_state().build().unwrap();
        assert_eq!(
            a.stats(),
            ModelStats {
                state_count: 2,
                event_count: 1,
                transition_count: 1
            }
        );
    }

    #[test]
    fn single_state_without_transitions() {
        let mut b = AutomatonBuilder::new("a");
        b.event(Event::observable("x"))
            .event(Event::fault("f"))
            .state("only")
            .initial("only");
        let a = b.build().unwrap();
        assert_eq!(a.stats().state_count, 1);
        assert_eq!(a.stats().event_count, 2);
        assert_eq!(a.stats().transition_count, 0);
    }

    #[test]
    fn rejects_nondeterminism_and_bad_references() {
        let mut b = two_state();
        b.state("s2").transition("s0", "go", "s2");
        assert!(matches!(
            b.build(),
            Err(ModelError::Nondeterministic { .. })
        ));

        let mut b = two_state();
        b.transition("s1", "stop", "s0");
        assert!(matches!(b.build(), Err(ModelError::UndeclaredEvent(_))));

        let mut b = two_state();
        b.state("s0");
        assert!(matches!(b.build(), Err(ModelError::DuplicateState(_))));

        let mut b = two_state();
        b.initial("nowhere");
        assert!(matches!(b.build(), Err(ModelError::UnknownState(_))));
    }

    #[test]
    fn event_invariants() {
        let mut e = Event::fault("f");
        e.observable = true;
        assert_eq!(
            e.validate().unwrap_err().to_string(),
            "event `f`: fault events must be unobservable"
        );
        let mut e = Event::action("a", Cost::integer(1));
        e.observable = false;
        assert!(e.validate().is_err());
        let mut e = Event::observable("o");
        e.cost = Cost::integer(2);
        assert!(e.validate().is_err());
    }

    #[test]
    fn reachable_drops_unreachable_state() {
        let mut b = two_state();
        b.state("island").transition("island", "go", "s0");
        let a = b.build().unwrap();
        let r = a.reachable();
        assert_eq!(r.state_count(), 2);
        assert_eq!(r.transition_count(), 1);
        assert!(r.state_id("island").is_none());
        assert_eq!(r.reachable(), r);
    }
}
