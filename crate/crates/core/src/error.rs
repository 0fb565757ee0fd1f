use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("flow-map integration failed: {0}")]
    Integration(String),

    #[error("degenerate cell {cell} at t = {time}: volume {volume:e}")]
    Geometry { cell: usize, time: f64, volume: f64 },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("negative density {rho:e} in cell {cell} at t = {time}; retry with a smaller cfl number")]
    Positivity { cell: usize, time: f64, rho: f64 },

    #[error("step {step} at t = {time} failed: {source}\n{dump}")]
    Step {
        step: usize,
        time: f64,
        dump: String,
        #[source]
        source: Box<Error>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("expression error at column {column}: {message}")]
    Expression { column: usize, message: String },

    #[error("configuration syntax error at line {line}, column {column}: {message}")]
    ConfigSyntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("scenario {name}: {source}")]
    Scenario {
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("study failed: {0}")]
    Study(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
