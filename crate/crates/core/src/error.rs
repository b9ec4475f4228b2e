use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent inputs (shapes, empty data, bad sizes).
    #[error("input error: {0}")]
    Input(String),

    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid model or study configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A factorization or eigensolve failed.
    #[error(
        "numerical error: {message} (n = {dim}, diagonal range [{min_diag:.3e}, {max_diag:.3e}])"
    )]
    Numerical {
        message: String,
        dim: usize,
        min_diag: f64,
        max_diag: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
