use thiserror::Error;

/// Errors produced by the link model, the optimizer and the sweep driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("load error at row {row}: {msg}")]
    Load { row: usize, msg: String },

    #[error("profile not found: {0}")]
    ProfileNotFound(String),

    #[error("wavelength {wavelength_nm} nm outside profile range [{min_nm}, {max_nm}] nm")]
    OutOfRange {
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },

    #[error("requested {requested} channels but the band set holds only {capacity}")]
    Capacity { requested: usize, capacity: usize },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("integrator step underflow at z = {z_km} km")]
    StepUnderflow { z_km: f64 },

    #[error("O-band is not populated")]
    NoOBand,

    #[error("sweep failed at every point")]
    SweepFailed,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
