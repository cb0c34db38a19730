use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error in {func}: {arg}")]
    Domain { func: &'static str, arg: f64 },

    #[error("site index {index} out of range for lattice with {n} sites")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("momentum ({kx}, {ky}) lies outside the first Brillouin zone")]
    OutsideBrillouinZone { kx: f64, ky: f64 },

    #[error("matrix dimension {dim} exceeds the configured cap {cap}")]
    SizeCap { dim: usize, cap: usize },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("eigen residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    Residual { residual: f64, tol: f64 },

    #[error("energy {energy} within {distance:.3e} of a continuum sample at q = ({qx}, {qy})")]
    PoleProximity { energy: f64, distance: f64, qx: f64, qy: f64 },

    #[error("gap of width {width:.3e} is too narrow for the q grid; use a denser grid")]
    GapTooNarrow { width: f64 },

    #[error("not enough data: {0}")]
    NotEnoughData(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
