use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::automaton::{Automaton, AutomatonBuilder, Event, StateId};
use super::ModelError;

/// Separator between component-local state names in product state names.
pub const STATE_SEPARATOR: char = '.';

/// Full synchronous composition.
///
/// An event synchronises every component whose alphabet contains it and
/// interleaves otherwise. Components are ordered by name, which fixes the
/// position of each local name in the product state name. Only states
/// reachable from the joint initial state are produced. Product labels are
/// the union of local labels.
pub fn compose(components: &[Automaton]) -> Result<Automaton, ModelError> {
    if components.is_empty() {
        return Err(ModelError::EmptyComposition);
    }
    let mut parts: Vec<&Automaton> = components.iter().collect();
    parts.sort_by(|a, b| a.name().cmp(b.name()));

    let mut alphabet: BTreeMap<&str, &Event> = BTreeMap::new();
    for p in &parts {
        for e in p.events() {
            match alphabet.get(e.name.as_str()) {
                Some(prev) if *prev != e => {
                    return Err(ModelError::ConflictingEvent(e.name.clone()));
                }
                _ => {
                    alphabet.insert(&e.name, e);
                }
            }
        }
    }

    // For each global event, the local event id in each participating component.
    let global: Vec<(&Event, Vec<(usize, u32)>)> = alphabet
        .values()
        .map(|e| {
            let participants = parts
                .iter()
                .enumerate()
                .filter_map(|(k, p)| p.event_id(&e.name).map(|id| (k, id)))
                .collect();
            (*e, participants)
        })
        .collect();

    let name = parts
        .iter()
        .map(|p| p.name())
        .collect::<Vec<_>>()
        .join("||");
    let mut b = AutomatonBuilder::new(name);
    for (e, _) in &global {
        b.event((*e).clone());
    }

    let state_name = |tuple: &[StateId]| -> String {
        tuple
            .iter()
            .zip(&parts)
            .map(|(&s, p)| p.state_name(s))
            .collect::<Vec<_>>()
            .join(&STATE_SEPARATOR.to_string())
    };

    let init: Vec<StateId> = parts.iter().map(|p| p.initial()).collect();
    let mut index: HashMap<Vec<StateId>, ()> = HashMap::new();
    index.insert(init.clone(), ());
    let mut queue = vec![init.clone()];
    let mut head = 0;
    while head < queue.len() {
        let tuple = queue[head].clone();
        head += 1;
        let src = state_name(&tuple);
        b.state(src.clone());
        let labels: BTreeSet<&String> = tuple
            .iter()
            .zip(&parts)
            .flat_map(|(&s, p)| p.labels(s).iter())
            .collect();
        for l in labels {
            b.label(src.clone(), l.clone());
        }
        for (e, participants) in &global {
            let mut next = tuple.clone();
            let enabled =
                participants
                    .iter()
                    .all(|&(k, id)| match parts[k].successor(tuple[k], id) {
                        Some(t) => {
                            next[k] = t;
                            true
                        }
                        None => false,
                    });
            if !enabled {
                continue;
            }
            b.transition(src.clone(), e.name.clone(), state_name(&next));
            if index.insert(next.clone(), ()).is_none() {
                queue.push(next);
            }
        }
    }
    b.initial(state_name(&init));
    b.build()
}
