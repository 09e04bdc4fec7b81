use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown map id `{0}`")]
    UnknownMap(String),
    #[error("invalid map layout: {0}")]
    MapLayout(String),
    #[error("singular input: robot coincides with a repulsion source")]
    SingularInput,
    #[error("input error: {0}")]
    Input(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("unknown calibration atom `{0}`")]
    Vocabulary(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("coverage mission complete: no uncovered cell remains")]
    MissionComplete,
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
