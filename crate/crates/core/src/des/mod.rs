//! Event-attributed automata, synchronous composition and check splicing.

mod automaton;
mod compose;
mod desm;
mod splice;

pub use automaton::{Automaton, AutomatonBuilder, Event, EventId, ModelStats, StateId, Transition};
pub use compose::{compose, STATE_SEPARATOR};
pub use desm::{parse_model, serialize};
pub use splice::{check_state_name, splice_check};

/// A named set of component automata sharing one event table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub name: String,
    pub events: Vec<Event>,
    pub components: Vec<Automaton>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {error}")]
    At { line: usize, error: Box<ModelError> },
    #[error("event `{event}`: {reason}")]
    InvalidEvent { event: String, reason: String },
    #[error("undeclared event `{0}`")]
    UndeclaredEvent(String),
    #[error("event `{0}` declared more than once")]
    DuplicateEvent(String),
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("automaton `{0}` has no initial state")]
    MissingInitial(String),
    #[error("state `{state}` has two `{event}` transitions")]
    Nondeterministic { state: String, event: String },
    #[error("event `{0}` has conflicting attributes across components")]
    ConflictingEvent(String),
    #[error("nothing to compose")]
    EmptyComposition,
    #[error("state `{state}` carries none of the labels {expected:?}")]
    MissingLabel {
        state: String,
        expected: Vec<String>,
    },
    #[error("state `{0}` carries more than one response label")]
    AmbiguousLabel(String),
}

impl ModelError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ModelError::Syntax { line, .. } | ModelError::At { line, .. } => Some(*line),
            _ => None,
        }
    }

    /// The underlying error with any line context stripped.
    pub fn root(&self) -> &ModelError {
        match self {
            ModelError::At { error, .. } => error.root(),
            other => other,
        }
    }
}
