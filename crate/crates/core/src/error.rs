use thiserror::Error;

pub type Result<T> = std::result::Result<T, SnnError>;

#[derive(Debug, Error)]
pub enum SnnError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("runaway network: more than {cap} events processed{}", sample_suffix(*.sample))]
    Runaway { cap: usize, sample: Option<usize> },

    #[error("degenerate fire at row {row} (neuron {neuron}, t = {time}): left derivative {derivative} is not positive")]
    DegenerateFire {
        row: usize,
        neuron: usize,
        time: f64,
        derivative: f64,
    },

    #[error("singular firing system: zero diagonal at row {row}")]
    Singular { row: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn sample_suffix(sample: Option<usize>) -> String {
    match sample {
        Some(id) => format!(" (sample {id})"),
        None => String::new(),
    }
}

impl SnnError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SnnError::InvalidArgument(msg.into())
    }

    /// Attaches the offending sample id to a runaway error; other errors pass through.
    pub fn with_sample(self, id: usize) -> Self {
        match self {
            SnnError::Runaway { cap, .. } => SnnError::Runaway {
                cap,
                sample: Some(id),
            },
            other => other,
        }
    }
}
