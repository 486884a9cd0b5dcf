//! Structural properties checked on arbitrary models. Each check returns a
//! description of the first violation.

use std::collections::{BTreeSet, VecDeque};

use actdiag::active::{build_active_diagnoser, ActiveDiagnoser, Tag};
use actdiag::des::Automaton;
use actdiag::diagnoser::{build_diagnoser, FaultSet, Verdict};
use actdiag::planner::{ao_search, Aggregation, PlanNode, PlanVerdict, SearchOptions};

use super::random_walk;

/// Determinism, fault-set monotonicity and soundness of the diagnoser.
pub fn check_diagnoser(a: &Automaton, seed: u64) -> Result<(), String> {
    let d = build_diagnoser(a).map_err(|e| e.to_string())?;
    let again = build_diagnoser(a).map_err(|e| e.to_string())?;
    if serde_json::to_string(&d).unwrap() != serde_json::to_string(&again).unwrap() {
        return Err("diagnoser construction is not deterministic".into());
    }

    for s in 0..d.state_count() {
        for o in 0..d.observables().len() {
            let Some(t) = d.transition(s, o) else {
                continue;
            };
            for e in d.belief(t).entries() {
                let covered = d
                    .belief(s)
                    .entries()
                    .iter()
                    .any(|p| p.faults.0 & !e.faults.0 == 0);
                if !covered {
                    return Err(format!(
                        "state {t} entry {e:?} drops faults seen before {s}"
                    ));
                }
            }
        }
    }

    for walk in 0..8 {
        let events = random_walk(a, seed * 31 + walk, 30);
        let mut state = a.initial();
        let mut faults = FaultSet::EMPTY;
        let mut ds = d.initial();
        for name in &events {
            let e = a.event_id(name).unwrap();
            state = a.successor(state, e).unwrap();
            let ev = a.event(e);
            if ev.fault {
                faults = faults.with(d.faults().bit(name).unwrap());
            }
            if ev.observable {
                ds = d.step(ds, name).map_err(|err| {
                    format!("walk {events:?}: diagnoser rejected `{name}`: {err}")
                })?;
            }
            let present = d
                .belief(ds)
                .entries()
                .iter()
                .any(|x| x.state == state && x.faults == faults);
            if !present {
                return Err(format!(
                    "walk {events:?}: true state missing from belief after `{name}`"
                ));
            }
        }
    }
    Ok(())
}

/// Completeness, determinism, sink absorption and tag partition of the
/// active diagnoser. Discriminability is re-derived by a forward search
/// from each state.
pub fn check_active(a: &Automaton) -> Result<(), String> {
    let ad = build_active_diagnoser(a, &[]).map_err(|e| e.to_string())?;
    let again = build_active_diagnoser(a, &[]).map_err(|e| e.to_string())?;
    if serde_json::to_string(&ad).unwrap() != serde_json::to_string(&again).unwrap() {
        return Err("active diagnoser construction is not deterministic".into());
    }
    check_active_structure(&ad)
}

pub fn check_active_structure(ad: &ActiveDiagnoser) -> Result<(), String> {
    let obs = ad.observables().len();
    let n = ad.state_count();
    if ad.is_sink(ad.initial()) {
        return Err("initial state is the sink".into());
    }
    for s in ad.states() {
        for o in 0..obs {
            if ad.delta(s, o) >= n {
                return Err(format!(
                    "state {s} has a dangling `{}` edge",
                    ad.observables()[o].name
                ));
            }
        }
        let tags = ad.tags(s);
        if tags.len() != ad.targets().len() {
            return Err(format!("state {s} has {} tags", tags.len()));
        }
        if ad.is_sink(s) {
            if (0..obs).any(|o| ad.delta(s, o) != s) {
                return Err("sink is not absorbing".into());
            }
            if tags.iter().any(|t| *t != Tag::Nonadmissible) {
                return Err("sink carries an admissible tag".into());
            }
            continue;
        }
        if ad.state(s).belief.is_empty() {
            return Err(format!("non-sink state {s} has an empty belief"));
        }
        for (i, &tag) in tags.iter().enumerate() {
            let bit = ad.faults().bit(&ad.targets()[i]).unwrap();
            let expected = match ad.state(s).belief.verdict(bit) {
                Verdict::Safe => Tag::Safe,
                Verdict::Sure => Tag::Sure,
                Verdict::Ambiguous if reaches_certain(ad, s, i) => Tag::Discriminable,
                Verdict::Ambiguous => Tag::Nondiscriminable,
            };
            if tag != expected {
                return Err(format!(
                    "state {s} fault {}: tag {tag}, expected {expected}",
                    ad.targets()[i]
                ));
            }
        }
    }
    Ok(())
}

fn reaches_certain(ad: &ActiveDiagnoser, from: usize, target: usize) -> bool {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(s) = queue.pop_front() {
        if ad.tag(s, target).is_certain() {
            return true;
        }
        for o in 0..ad.observables().len() {
            let t = ad.delta(s, o);
            if !ad.is_sink(t) && seen.insert(t) {
                queue.push_back(t);
            }
        }
    }
    false
}

/// For every admissible root with a plan: branches cover exactly the
/// feasible responses, actions never enter the sink, leaves are reached in
/// finitely many steps, and leaf verdicts agree with the replayed tags.
pub fn check_plans(a: &Automaton) -> Result<usize, String> {
    let ad = build_active_diagnoser(a, &[]).map_err(|e| e.to_string())?;
    let mut planned = 0;
    for root in ad.states() {
        if ad.is_sink(root) {
            continue;
        }
        for aggregation in [Aggregation::WorstCase, Aggregation::Sum] {
            let opts = SearchOptions {
                aggregation,
                ..SearchOptions::default()
            };
            let Ok(plan) = ao_search(&ad, root, &[], &opts) else {
                continue;
            };
            let again = ao_search(&ad, root, &[], &opts).unwrap();
            if plan.to_json() != again.to_json() {
                return Err(format!("root {root}: plan is not deterministic"));
            }
            let bound = 4 * ad.state_count() * ad.state_count() + 2;
            if plan.root.depth() > bound {
                return Err(format!("root {root}: plan deeper than {bound}"));
            }
            replay(&ad, root, &plan.root)?;
            planned += 1;
        }
    }
    Ok(planned)
}

fn replay(ad: &ActiveDiagnoser, s: usize, p: &PlanNode) -> Result<(), String> {
    match p {
        PlanNode::Leaf { verdicts } => {
            for (fault, v) in verdicts {
                let i = ad
                    .target_index(fault)
                    .ok_or("leaf names an unknown fault")?;
                let consistent = match v {
                    PlanVerdict::Sure => ad.tag(s, i) == Tag::Sure,
                    PlanVerdict::Safe => ad.tag(s, i) == Tag::Safe,
                    PlanVerdict::Unsolvable => !ad.tag(s, i).is_certain(),
                };
                if !consistent {
                    return Err(format!(
                        "leaf at state {s}: {fault} {v} against tag {}",
                        ad.tag(s, i)
                    ));
                }
                if ad.is_pending(s, i) {
                    return Err(format!("leaf at state {s} leaves {fault} still resolvable"));
                }
            }
            Ok(())
        }
        PlanNode::Act { action, next, .. } => {
            let t = ad
                .successor(s, action)
                .ok_or("plan names an unknown action")?;
            if ad.is_sink(t) {
                return Err(format!("action {action} at state {s} enters the sink"));
            }
            replay(ad, t, next)
        }
        PlanNode::Branch { children } => {
            let feasible: BTreeSet<&str> = ad
                .feasible_responses(s)
                .map(|o| ad.observables()[o].name.as_str())
                .collect();
            let covered: BTreeSet<&str> = children.keys().map(String::as_str).collect();
            if feasible != covered {
                return Err(format!(
                    "branch at state {s} covers {covered:?}, feasible {feasible:?}"
                ));
            }
            for (r, c) in children {
                replay(ad, ad.successor(s, r).unwrap(), c)?;
            }
            Ok(())
        }
    }
}
