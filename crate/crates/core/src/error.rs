use alloc::string::String;
use core::fmt;

use crate::reader::{ParseError, Span};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ErrorKind {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unbound name: {0}")]
    Unbound(String),
    #[error("not a function: {term} has type {ty}")]
    NotAFunction { term: String, ty: String },
    #[error("cannot infer the type of {0}")]
    CannotInfer(String),
    #[error("ty mismatch: expected {expected}, got {actual}")]
    Mismatch { expected: String, actual: String },
    #[error("unsupported literal: {0}")]
    UnsupportedLiteral(String),
    #[error("duplicate name: {0}")]
    Duplicate(String),
    #[error("bad datatype: {0}")]
    Datatype(String),
    #[error("positivity: {0}")]
    Positivity(String),
    #[error("pattern error: {0}")]
    Pattern(String),
    #[error("nonterminate: {0}")]
    Nonterminate(String),
    #[error("non-terminating!: size {actual} is not within {expected}")]
    SizeViolation { actual: String, expected: String },
    #[error("could not unify {0} and {1}")]
    Unify(String, String),
    #[error("cannot infer implicit {0}")]
    UnsolvedImplicit(String),
    #[error("diverged after exhausting fuel; last rule {rule} on {subterm}")]
    Diverged { rule: String, subterm: String },
    #[error("rule error: {0}")]
    Rule(String),
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("{0}")]
    Tactic(String),
    #[error("{0} open goal(s)")]
    OpenGoals(usize),
    #[error("unknown tactic {0}")]
    UnknownTactic(String),
}

/// A kernel error with an optional source location.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Error {
    pub kind: ErrorKind,
    pub span: Option<Span>,
}

impl Error {
    pub fn new(kind: ErrorKind) -> Error {
        Error { kind, span: None }
    }

    pub fn at(kind: ErrorKind, span: &Span) -> Error {
        Error { kind, span: Some(span.clone()) }
    }

    /// Attaches `span` unless one is already present.
    pub fn or_span(mut self, span: &Span) -> Error {
        if self.span.is_none() {
            self.span = Some(span.clone());
        }
        self
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.span {
            Some(s) => write!(f, "{}: {}", s, self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

impl core::error::Error for Error {}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Error {
        Error { kind: ErrorKind::Parse(alloc::string::ToString::to_string(&e.kind)), span: Some(e.span) }
    }
}

impl From<ErrorKind> for Error {
    fn from(kind: ErrorKind) -> Error {
        Error::new(kind)
    }
}

pub type Result<T> = core::result::Result<T, Error>;
