use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("no field value at ({x}, {y})")]
    MissingField { x: i32, y: i32 },
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("no coalescence after {sweeps} sweeps ({detail})")]
    Budget { sweeps: u64, detail: String },
    #[error("ordering violation: {0}")]
    OrderingViolation(String),
    #[error("empty restriction: {0}")]
    EmptyRestriction(String),
    #[error("inadmissible boundary tuple {0:?}")]
    Inadmissible([i8; 4]),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// Capacity and budget failures are censoring events, not bugs.
    pub fn is_resource(&self) -> bool {
        matches!(self, LabError::Capacity(_) | LabError::Budget { .. })
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
