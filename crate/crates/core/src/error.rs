use thiserror::Error;

/// Errors raised across the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("config error{}: {msg}", location(.section, .key, .line))]
    Config {
        section: Option<String>,
        key: Option<String>,
        line: Option<usize>,
        msg: String,
    },
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("solve error: {0}")]
    Solve(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn location(section: &Option<String>, key: &Option<String>, line: &Option<usize>) -> String {
    let mut s = String::new();
    if let Some(sec) = section {
        s.push_str(&format!(" in [{sec}]"));
    }
    if let Some(k) = key {
        s.push_str(&format!(" key `{k}`"));
    }
    if let Some(l) = line {
        s.push_str(&format!(" (line {l})"));
    }
    s
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config {
            section: None,
            key: None,
            line: None,
            msg: msg.into(),
        }
    }

    /// Prefixes the message, keeping the variant.
    pub fn context(self, prefix: impl std::fmt::Display) -> Self {
        match self {
            Error::Syntax { line, msg } => Error::Syntax { line, msg: format!("{prefix}: {msg}") },
            Error::Topology(m) => Error::Topology(format!("{prefix}: {m}")),
            Error::Geometry(m) => Error::Geometry(format!("{prefix}: {m}")),
            Error::Domain(m) => Error::Domain(format!("{prefix}: {m}")),
            Error::Config { section, key, line, msg } => Error::Config { section, key, line, msg: format!("{prefix}: {msg}") },
            Error::Assembly(m) => Error::Assembly(format!("{prefix}: {m}")),
            Error::Solve(m) => Error::Solve(format!("{prefix}: {m}")),
            Error::Invariant(m) => Error::Invariant(format!("{prefix}: {m}")),
            Error::Dimension(m) => Error::Dimension(format!("{prefix}: {m}")),
            Error::NonConvergence(m) => Error::NonConvergence(format!("{prefix}: {m}")),
            Error::Io(e) => Error::Io(std::io::Error::new(e.kind(), format!("{prefix}: {e}"))),
        }
    }

    /// True for errors raised by numerical solves rather than by input validation.
    pub fn is_solver_error(&self) -> bool {
        matches!(
            self,
            Error::Solve(_) | Error::NonConvergence(_) | Error::Assembly(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
