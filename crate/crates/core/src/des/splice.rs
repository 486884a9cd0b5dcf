use std::collections::{BTreeMap, BTreeSet};

use super::automaton::{Automaton, Event, StateId};
use super::ModelError;

/// Name of the intermediate state inserted after `check` at `state`.
pub fn check_state_name(state: &str, check: &str) -> String {
    format!("{state}:{check}")
}

/// Adds a health-check probe to every relevant state.
///
/// Each relevant state `q` gets a fresh state `q:check`, a transition
/// `q --check--> q:check` and one response transition back to `q`. The
/// response is chosen by the label of `q` that keys `responses`; exactly one
/// such label must be present.
pub fn splice_check(
    a: &Automaton,
    check: &Event,
    responses: &BTreeMap<String, Event>,
    relevant: &BTreeSet<StateId>,
) -> Result<Automaton, ModelError> {
    if !check.action {
        return Err(ModelError::InvalidEvent {
            event: check.name.clone(),
            reason: "check must be an action".into(),
        });
    }
    for r in responses.values() {
        if !r.is_response() {
            return Err(ModelError::InvalidEvent {
                event: r.name.clone(),
                reason: "check responses must be observable non-actions".into(),
            });
        }
    }
    if relevant.is_empty() {
        return Ok(a.clone());
    }

    let mut b = a.to_builder();
    let mut added: BTreeSet<&str> = BTreeSet::new();
    for e in std::iter::once(check).chain(responses.values()) {
        if let Some(existing) = a.event_id(&e.name).map(|id| a.event(id)) {
            if existing != e {
                return Err(ModelError::ConflictingEvent(e.name.clone()));
            }
        } else if added.insert(&e.name) {
            b.event(e.clone());
        }
    }

    for &q in relevant {
        let name = a.state_name(q);
        let mut matching = responses.iter().filter(|(label, _)| a.has_label(q, label));
        let response = match (matching.next(), matching.next()) {
            (Some((_, r)), None) => r,
            (None, _) => {
                return Err(ModelError::MissingLabel {
                    state: name.to_string(),
                    expected: responses.keys().cloned().collect(),
                })
            }
            (Some(_), Some(_)) => {
                return Err(ModelError::AmbiguousLabel(name.to_string()));
            }
        };
        let probe = check_state_name(name, &check.name);
        if a.state_id(&probe).is_some() {
            return Err(ModelError::DuplicateState(probe));
        }
        b.state(probe.clone());
        b.transition(name, check.name.clone(), probe.clone());
        b.transition(probe, response.name.clone(), name);
    }
    b.build()
}
