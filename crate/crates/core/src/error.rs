use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("netlist parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid netlist: {0}")]
    Netlist(String),
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error("contradictory constraint on line {0}")]
    Contradiction(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
