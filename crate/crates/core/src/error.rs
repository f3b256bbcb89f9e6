use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("insufficient jet order: need {required}, component supports {available}")]
    JetOrder { required: usize, available: usize },

    #[error("symbol is not elliptic: {0}")]
    NotElliptic(String),

    #[error("singular resolvent at {location}")]
    SingularResolvent { location: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
