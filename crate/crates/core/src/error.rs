use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("unknown macro `{0}`")]
    UnknownMacro(String),

    #[error("macro `{name}` takes {expected} argument(s), found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("argument of `{macro_name}` must be a state formula, found `{arg}`")]
    NotExtensional { macro_name: String, arg: String },

    #[error("no finite domain known for variable `{0}`")]
    UnknownDomain(String),

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("unknown thread `{0}`")]
    UnknownThread(String),

    #[error("unresolved proposition `{0}`")]
    UnresolvedProp(String),

    #[error("unexpanded derived operator `{0}`")]
    UnexpandedDerived(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("program error: {0}")]
    Program(String),

    #[error("runtime domain fault in thread {thread} at {loc}: {var} := {value} outside {lo}..{hi}")]
    DomainFault {
        thread: String,
        loc: String,
        var: String,
        value: i64,
        lo: i64,
        hi: i64,
    },

    #[error("formula is not a step predicate: {0}")]
    StepShape(String),

    #[error("constraint has unsupported shape: {0}")]
    ConstraintShape(String),

    #[error("constraint does not hold at the initial state")]
    ConstraintFailsInitially,

    #[error("exploration budget exceeded: more than {0} nodes")]
    Budget(usize),

    #[error("negation normal form: {0}")]
    Nnf(String),

    #[error("point is not in the point set: {0}")]
    PointNotInSet(String),

    #[error("proof script: {0}")]
    Script(String),
}

impl Error {
    pub fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::UnknownMacro(_) => "unknown-macro",
            Error::Arity { .. } => "arity",
            Error::NotExtensional { .. } => "not-extensional",
            Error::UnknownDomain(_) => "unknown-domain",
            Error::UnknownName(_) => "unknown-name",
            Error::UnknownThread(_) => "unknown-thread",
            Error::UnresolvedProp(_) => "unresolved-prop",
            Error::UnexpandedDerived(_) => "unexpanded-derived",
            Error::Domain(_) => "domain",
            Error::Program(_) => "program",
            Error::DomainFault { .. } => "domain-fault",
            Error::StepShape(_) => "step-shape",
            Error::ConstraintShape(_) => "constraint-shape",
            Error::ConstraintFailsInitially => "constraint-initial",
            Error::Budget(_) => "budget",
            Error::Nnf(_) => "nnf",
            Error::PointNotInSet(_) => "point",
            Error::Script(_) => "script",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
