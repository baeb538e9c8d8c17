use std::fmt;

/// Source position of a top-level form or token (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.col)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: Pos, msg: String },
    #[error("syntax error in `{form}`: {msg}")]
    Syntax { form: String, msg: String },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("not a function: cannot apply {0}")]
    NotAFunction(String),
    #[error("{prim} expects {expected}, got {got}")]
    Arity {
        prim: String,
        expected: String,
        got: String,
    },
    #[error("conformance error at {path}: cannot add {left} and {right}")]
    Conformance {
        path: String,
        left: String,
        right: String,
    },
    #[error("not a reverse-tagged value: {0}")]
    NotReverseTagged(String),
    #[error("step budget of {0} apply-steps exceeded")]
    StepBudget(u64),
    #[error("nesting depth of {0} applications exceeded")]
    Depth(usize),
    #[error("{0}")]
    Structural(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("{pos}: {source}")]
    At {
        pos: Pos,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors caused by exhausting a resource rather than by the program itself.
    pub fn is_resource(&self) -> bool {
        match self {
            Error::StepBudget(_) | Error::Depth(_) => true,
            Error::At { source, .. } => source.is_resource(),
            _ => false,
        }
    }

    pub fn at(self, pos: Pos) -> Error {
        match self {
            e @ Error::At { .. } | e @ Error::Parse { .. } => e,
            e => Error::At {
                pos,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, with any location wrapper removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::At { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
