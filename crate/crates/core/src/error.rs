use thiserror::Error;

/// Errors raised by basis construction, operator assembly and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Parameter(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("singular linear system (zero pivot at column {column})")]
    Singular { column: usize },

    #[error("point {value} outside the domain [0, 1]")]
    Domain { value: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
