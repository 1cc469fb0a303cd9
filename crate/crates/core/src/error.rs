use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A spec or configuration violates one of its invariants. The first
    /// field names the offending parameter.
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    /// Propagation would alias on the sampled grid.
    #[error("sampling error: {reason} (maximum safe |dz| = {max_dz_nm:.6e} nm)")]
    Sampling { reason: String, max_dz_nm: f64 },

    /// Fields on different grids were combined.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no stationary point: the phase function has none for ell = 0")]
    NoStationaryPoint,

    #[error("field is not ring-shaped: azimuthal intensity peaks at the center")]
    NotARing,

    #[error(
        "diffraction orders overlap; carrier wavenumber must exceed {min_k_carrier:.6e} rad/nm"
    )]
    OverlappingOrders { min_k_carrier: f64 },

    #[error(
        "measured rotation {measured:.6e} rad lies outside the curve range [{lo:.6e}, {hi:.6e}]"
    )]
    Extrapolation { measured: f64, lo: f64, hi: f64 },

    #[error("rotation curve is not strictly monotone")]
    NonMonotone,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Invalid {
        field,
        reason: reason.into(),
    }
}
