use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter violated its documented invariant.
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("infeasible grading on the {axis} axis: {reason}")]
    InfeasibleGrading { axis: char, reason: String },

    #[error("point ({x}, {y}, {z}) lies outside the grid")]
    OutOfDomain { x: f64, y: f64, z: f64 },

    #[error("time {time} s precedes the scan start at {start} s")]
    BeforeScanStart { time: f64, start: f64 },

    #[error("Newton iteration failed at t = {time} s after {iterations} iterations (relative residual {residual:e})")]
    NewtonFailed {
        time: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("time step underflow at t = {time} s (dt = {dt:e} s)")]
    TimeStepUnderflow { time: f64, dt: f64 },

    #[error("no {isotherm} °C isotherm crossing found in the wake")]
    MissingCrossing { isotherm: f64 },

    #[error("snapshot at {travel} mm of beam travel precedes the quasi-steady gate at {required} mm")]
    NotQuasiSteady { travel: f64, required: f64 },

    #[error("snapshot history does not match the run: {0}")]
    HistoryMismatch(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }
}
