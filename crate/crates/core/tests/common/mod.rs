//! Seeded random models shared by the integration suites.

#![allow(dead_code)]

pub mod props;

use std::collections::BTreeMap;

use actdiag::des::{Automaton, AutomatonBuilder, Event};
use actdiag::Cost;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_STATES: usize = 40;

/// A plant with a few operating modes and up to three persistent faults.
///
/// States are (mode, fault set) pairs plus one probe state per pair. Actions
/// move between modes (some are disabled at random), a `probe` action with
/// cost 0 leads to the probe state, and the probe answers with a response
/// chosen by a random function of mode and faults. Faults may be disabled in
/// some modes.
pub fn structured_model(seed: u64) -> Automaton {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let faults = rng.gen_range(1..=3usize);
    let max_modes = (MAX_STATES / (2 << faults)).max(1);
    let modes = rng.gen_range(1..=max_modes.min(4));
    let actions = rng.gen_range(1..=3usize);
    let responses = rng.gen_range(2..=3usize);

    let costs = [
        Cost::integer(1),
        Cost::integer(2),
        Cost::integer(3),
        Cost::ratio(1, 2),
    ];
    let mut b = AutomatonBuilder::new(format!("structured{seed}"));
    for f in 0..faults {
        b.event(Event::fault(format!("f{}", f + 1)));
    }
    for a in 0..actions {
        b.event(Event::action(
            format!("a{}", a + 1),
            *costs.choose(&mut rng).unwrap(),
        ));
    }
    b.event(Event::action("probe", Cost::ZERO));
    for r in 0..responses {
        b.event(Event::observable(format!("r{}", r + 1)));
    }

    let name = |m: usize, set: usize| format!("m{m}_{set:03b}");
    for m in 0..modes {
        for set in 0..(1usize << faults) {
            b.state(name(m, set));
            b.state(format!("{}_p", name(m, set)));
        }
    }
    b.initial(name(0, 0));

    let fault_enabled: Vec<Vec<bool>> = (0..modes)
        .map(|_| (0..faults).map(|_| rng.gen_bool(0.8)).collect())
        .collect();
    let moves: Vec<Vec<Option<usize>>> = (0..modes)
        .map(|_| {
            (0..actions)
                .map(|_| rng.gen_bool(0.8).then(|| rng.gen_range(0..modes)))
                .collect()
        })
        .collect();
    let answer: BTreeMap<(usize, usize), usize> = (0..modes)
        .flat_map(|m| (0..(1usize << faults)).map(move |set| (m, set)))
        .map(|k| (k, rng.gen_range(0..responses)))
        .collect();

    for m in 0..modes {
        for set in 0..(1usize << faults) {
            for f in 0..faults {
                if set & (1 << f) == 0 && fault_enabled[m][f] {
                    b.transition(name(m, set), format!("f{}", f + 1), name(m, set | (1 << f)));
                }
            }
            for a in 0..actions {
                if let Some(m2) = moves[m][a] {
                    b.transition(name(m, set), format!("a{}", a + 1), name(m2, set));
                }
            }
            let probe = format!("{}_p", name(m, set));
            b.transition(name(m, set), "probe", probe.clone());
            b.transition(probe, format!("r{}", answer[&(m, set)] + 1), name(m, set));
        }
    }
    b.build()
        .expect("structured model is well formed")
        .reachable()
}

/// Unstructured deterministic automaton: random transitions over a mixed
/// alphabet of faults, a silent event, actions and responses.
pub fn random_model(seed: u64) -> Automaton {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = rng.gen_range(3..=MAX_STATES.min(20));
    let faults = rng.gen_range(1..=3usize);
    let mut events = Vec::new();
    for f in 0..faults {
        events.push(Event::fault(format!("f{}", f + 1)));
    }
    events.push(Event::unobservable("tau"));
    for a in 0..rng.gen_range(1..=3usize) {
        events.push(Event::action(
            format!("a{}", a + 1),
            Cost::integer(rng.gen_range(0..=3)),
        ));
    }
    for r in 0..rng.gen_range(1..=2usize) {
        events.push(Event::observable(format!("r{}", r + 1)));
    }

    let mut b = AutomatonBuilder::new(format!("random{seed}"));
    for e in &events {
        b.event(e.clone());
    }
    for s in 0..states {
        b.state(format!("s{s}"));
    }
    b.initial("s0");
    for s in 0..states {
        for e in &events {
            if rng.gen_bool(0.35) {
                b.transition(
                    format!("s{s}"),
                    e.name.clone(),
                    format!("s{}", rng.gen_range(0..states)),
                );
            }
        }
    }
    b.build().expect("random model is well formed").reachable()
}

/// Alternates the two generators.
pub fn corpus_model(seed: u64) -> Automaton {
    if seed.is_multiple_of(2) {
        structured_model(seed)
    } else {
        random_model(seed)
    }
}

/// Random walk of at most `steps` events; returns the visited events.
pub fn random_walk(a: &Automaton, seed: u64, steps: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = a.initial();
    let mut out = Vec::new();
    for _ in 0..steps {
        let succ = a.successors(s);
        if succ.is_empty() {
            break;
        }
        let &(e, t) = succ.choose(&mut rng).unwrap();
        out.push(a.event(e).name.clone());
        s = t;
    }
    out
}
