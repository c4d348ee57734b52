use thiserror::Error;

/// Errors raised by the numerical kernels, generators and trainers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is rank deficient (pivot norm {pivot:e} at column {column})")]
    RankDeficient { column: usize, pivot: f64 },

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("delay taps ({taps}) exceed subcarrier count ({subcarriers})")]
    DelayOverflow { taps: usize, subcarriers: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("column {column} has zero norm")]
    ZeroColumn { column: usize },

    #[error("generated column {column} degenerate after {attempts} draws")]
    DegenerateColumn { column: usize, attempts: usize },

    #[error("unknown augmentation scheme `{0}`")]
    UnknownScheme(String),

    #[error("bitstream has {got} bits, expected {expected}")]
    BadBitstreamLength { expected: usize, got: usize },

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("ue {ue}: {source}")]
    Ue {
        ue: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than the environment.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Io(_) | Error::Format(_) => false,
            Error::Ue { source, .. } => source.is_validation(),
            _ => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
