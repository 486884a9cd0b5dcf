//! Line-oriented text format for event-attributed component automata.
//!
//! ```text
//! model <name>
//! events
//!   <event> [obs|uobs] [fault] [action cost=<decimal>]
//! component <name>
//!   states <s> ...
//!   initial <s>
//!   label <s> <tag> ...
//!   trans <src> <event> <dst>
//! end
//! ```
//!
//! `#` starts a comment. Visibility defaults to `uobs` for faults and `obs`
//! otherwise. Serialization is canonical: events, components, states, labels
//! and transitions are each emitted in lexicographic order, so
//! `serialize(parse(serialize(m))) == serialize(m)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::automaton::{Automaton, AutomatonBuilder, Event};
use super::{compose, Model, ModelError};
use crate::cost::Cost;

fn at(line: usize, error: ModelError) -> ModelError {
    ModelError::At {
        line,
        error: Box::new(error),
    }
}

fn syntax(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Syntax {
        line,
        message: message.into(),
    }
}

fn check_ident(line: usize, token: &str) -> Result<(), ModelError> {
    if token.is_empty() || token.contains('#') || token.contains('=') {
        return Err(syntax(line, format!("invalid identifier `{token}`")));
    }
    Ok(())
}

struct PendingComponent {
    name: String,
    start: usize,
    states: Vec<(usize, String)>,
    initial: Option<(usize, String)>,
    labels: Vec<(usize, String, String)>,
    transitions: Vec<(usize, String, String, String)>,
}

impl PendingComponent {
    fn build(self, events: &BTreeMap<String, Event>) -> Result<Automaton, ModelError> {
        let mut b = AutomatonBuilder::new(self.name.clone());
        let mut seen = BTreeSet::new();
        for (line, s) in &self.states {
            if !seen.insert(s.as_str()) {
                return Err(at(*line, ModelError::DuplicateState(s.clone())));
            }
            b.state(s.clone());
        }
        let known = |line: usize, s: &str| {
            if seen.contains(s) {
                Ok(())
            } else {
                Err(at(line, ModelError::UnknownState(s.to_string())))
            }
        };
        match &self.initial {
            Some((line, s)) => {
                known(*line, s)?;
                b.initial(s.clone());
            }
            None => {
                return Err(at(
                    self.start,
                    ModelError::MissingInitial(self.name.clone()),
                ));
            }
        }
        for (line, s, l) in &self.labels {
            known(*line, s)?;
            b.label(s.clone(), l.clone());
        }
        let mut used = BTreeSet::new();
        let mut pairs = BTreeMap::new();
        for (line, src, ev, dst) in &self.transitions {
            known(*line, src)?;
            known(*line, dst)?;
            if !events.contains_key(ev) {
                return Err(at(*line, ModelError::UndeclaredEvent(ev.clone())));
            }
            if let Some(prev) = pairs.insert((src.as_str(), ev.as_str()), dst.as_str()) {
                if prev != dst {
                    return Err(at(
                        *line,
                        ModelError::Nondeterministic {
                            state: src.clone(),
                            event: ev.clone(),
                        },
                    ));
                }
            }
            used.insert(ev.as_str());
            b.transition(src.clone(), ev.clone(), dst.clone());
        }
        for ev in used {
            b.event(events[ev].clone());
        }
        b.build().map_err(|e| at(self.start, e))
    }
}

fn parse_event(line: usize, tokens: &[&str]) -> Result<Event, ModelError> {
    let name = tokens[0];
    check_ident(line, name)?;
    let mut visibility: Option<bool> = None;
    let mut fault = false;
    let mut action = false;
    let mut cost: Option<Cost> = None;
    for &tok in &tokens[1..] {
        match tok {
            "obs" | "uobs" => {
                if visibility.is_some() {
                    return Err(syntax(line, "visibility given twice"));
                }
                visibility = Some(tok == "obs");
            }
            "fault" => fault = true,
            "action" => action = true,
            _ => match tok.strip_prefix("cost=") {
                Some(v) => {
                    let c = v.parse::<Cost>().map_err(|e| syntax(line, e.to_string()))?;
                    cost = Some(c);
                }
                None => return Err(syntax(line, format!("unknown event attribute `{tok}`"))),
            },
        }
    }
    if cost.is_some() && !action {
        return Err(at(
            line,
            ModelError::InvalidEvent {
                event: name.to_string(),
                reason: "only actions carry a cost".into(),
            },
        ));
    }
    let event = Event {
        name: name.to_string(),
        observable: visibility.unwrap_or(!fault),
        fault,
        action,
        cost: cost.unwrap_or(Cost::ZERO),
    };
    event.validate().map_err(|e| at(line, e))?;
    Ok(event)
}

enum Section {
    Header,
    Events,
    Component(PendingComponent),
    Between,
}

/// Parses a model file.
pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    let mut name: Option<String> = None;
    let mut events: BTreeMap<String, Event> = BTreeMap::new();
    let mut components: Vec<Automaton> = Vec::new();
    let mut component_names = BTreeSet::new();
    let mut section = Section::Header;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some(&keyword) = tokens.first() else {
            continue;
        };

        if name.is_none() {
            if keyword != "model" || tokens.len() != 2 {
                return Err(syntax(line, "expected `model <name>`"));
            }
            check_ident(line, tokens[1])?;
            name = Some(tokens[1].to_string());
            continue;
        }

        match keyword {
            "model" => return Err(syntax(line, "duplicate `model` line")),
            "events" => {
                if !matches!(section, Section::Header) || tokens.len() != 1 {
                    return Err(syntax(line, "`events` must directly follow the model line"));
                }
                section = Section::Events;
            }
            "component" => {
                if matches!(section, Section::Component(_)) {
                    return Err(syntax(line, "missing `end` before next component"));
                }
                if tokens.len() != 2 {
                    return Err(syntax(line, "expected `component <name>`"));
                }
                check_ident(line, tokens[1])?;
                if !component_names.insert(tokens[1].to_string()) {
                    return Err(syntax(line, format!("duplicate component `{}`", tokens[1])));
                }
                section = Section::Component(PendingComponent {
                    name: tokens[1].to_string(),
                    start: line,
                    states: Vec::new(),
                    initial: None,
                    labels: Vec::new(),
                    transitions: Vec::new(),
                });
            }
            "end" => {
                if tokens.len() != 1 {
                    return Err(syntax(line, "unexpected tokens after `end`"));
                }
                match std::mem::replace(&mut section, Section::Between) {
                    Section::Component(c) => components.push(c.build(&events)?),
                    _ => return Err(syntax(line, "`end` outside a component")),
                }
            }
            _ => match &mut section {
                Section::Events => {
                    let e = parse_event(line, &tokens)?;
                    if events.contains_key(&e.name) {
                        return Err(at(line, ModelError::DuplicateEvent(e.name)));
                    }
                    events.insert(e.name.clone(), e);
                }
                Section::Component(c) => match keyword {
                    "states" => {
                        for &s in &tokens[1..] {
                            check_ident(line, s)?;
                            c.states.push((line, s.to_string()));
                        }
                    }
                    "initial" => {
                        if tokens.len() != 2 {
                            return Err(syntax(line, "expected `initial <state>`"));
                        }
                        if c.initial.is_some() {
                            return Err(syntax(line, "initial state given twice"));
                        }
                        c.initial = Some((line, tokens[1].to_string()));
                    }
                    "label" => {
                        if tokens.len() < 3 {
                            return Err(syntax(line, "expected `label <state> <tag> ...`"));
                        }
                        for &l in &tokens[2..] {
                            check_ident(line, l)?;
                            c.labels.push((line, tokens[1].to_string(), l.to_string()));
                        }
                    }
                    "trans" => {
                        if tokens.len() != 4 {
                            return Err(syntax(line, "expected `trans <src> <event> <dst>`"));
                        }
                        c.transitions.push((
                            line,
                            tokens[1].to_string(),
                            tokens[2].to_string(),
                            tokens[3].to_string(),
                        ));
                    }
                    other => {
                        return Err(syntax(
                            line,
                            format!("unknown component directive `{other}`"),
                        ))
                    }
                },
                _ => return Err(syntax(line, format!("unexpected `{keyword}`"))),
            },
        }
    }

    let Some(name) = name else {
        return Err(syntax(1, "empty model file"));
    };
    if let Section::Component(c) = section {
        return Err(syntax(
            c.start,
            format!("component `{}` is missing `end`", c.name),
        ));
    }
    Ok(Model {
        name,
        events: events.into_values().collect(),
        components,
    })
}

fn event_line(e: &Event) -> String {
    let mut s = format!("  {} {}", e.name, if e.observable { "obs" } else { "uobs" });
    if e.fault {
        s.push_str(" fault");
    }
    if e.action {
        let _ = write!(s, " action cost={}", e.cost);
    }
    s
}

/// Canonical text rendering of a model.
pub fn serialize(model: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {}", model.name);
    out.push_str("events\n");
    let mut events: Vec<&Event> = model.events.iter().collect();
    events.sort_by(|a, b| a.name.cmp(&b.name));
    for e in events {
        out.push_str(&event_line(e));
        out.push('\n');
    }
    let mut components: Vec<&Automaton> = model.components.iter().collect();
    components.sort_by(|a, b| a.name().cmp(b.name()));
    for c in components {
        let _ = writeln!(out, "component {}", c.name());
        let mut states: Vec<&str> = c.states().map(|s| c.state_name(s)).collect();
        states.sort_unstable();
        let _ = writeln!(out, "  states {}", states.join(" "));
        let _ = writeln!(out, "  initial {}", c.initial_name());
        for (s, labels) in c.named_labels() {
            let tags: Vec<&str> = labels.iter().map(String::as_str).collect();
            let _ = writeln!(out, "  label {} {}", s, tags.join(" "));
        }
        for (src, ev, dst) in c.named_transitions() {
            let _ = writeln!(out, "  trans {src} {ev} {dst}");
        }
        out.push_str("end\n");
    }
    out
}

impl Model {
    /// Wraps a single automaton, declaring exactly its alphabet.
    pub fn from_automaton(name: impl Into<String>, a: Automaton) -> Model {
        Model {
            name: name.into(),
            events: a.events().to_vec(),
            components: vec![a],
        }
    }

    /// Synchronous product of all components.
    pub fn compose(&self) -> Result<Automaton, ModelError> {
        if self.components.len() == 1 {
            return Ok(self.components[0].clone());
        }
        compose(&self.components)
    }

    pub fn to_desm(&self) -> String {
        serialize(self)
    }
}
