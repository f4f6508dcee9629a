use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// End-cap defocusing exceeds the rf pseudopotential confinement.
    #[error("radially deconfined: omega_r^2 = {omega_r_sq:e} rad^2/s^2")]
    RadiallyDeconfined { omega_r_sq: f64 },

    #[error("extreme anisotropy: no aspect-ratio root in [1e-3, 1e3] for omega_z^2/omega_r^2 = {ratio:e}")]
    ExtremeAnisotropy { ratio: f64 },

    #[error("no separation: species have equal mass-to-charge ratio")]
    NoSeparation,

    #[error("unstable resonator: length {length:e} m outside (0, 2 ROC = {limit:e} m)")]
    UnstableResonator { length: f64, limit: f64 },

    #[error("collision: ions {first} and {second} closer than {separation:e} m at t = {time:e} s")]
    Collision {
        first: usize,
        second: usize,
        separation: f64,
        time: f64,
    },

    #[error("not crystallized after {elapsed:e} s: secular temperature {temperature:e} K above threshold {threshold:e} K")]
    NotCrystallized {
        elapsed: f64,
        temperature: f64,
        threshold: f64,
    },

    #[error("insufficient samples: {got} provided, at least {needed} required")]
    InsufficientSamples { got: usize, needed: usize },

    #[error("degenerate abscissa: all x values coincide")]
    DegenerateAbscissa,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::RadiallyDeconfined { .. } => "radially_deconfined",
            Error::ExtremeAnisotropy { .. } => "extreme_anisotropy",
            Error::NoSeparation => "no_separation",
            Error::UnstableResonator { .. } => "unstable_resonator",
            Error::Collision { .. } => "collision",
            Error::NotCrystallized { .. } => "not_crystallized",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::DegenerateAbscissa => "degenerate_abscissa",
            Error::Infeasible(_) => "infeasible",
            Error::Config(_) => "config",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

impl Error {
    /// `{"error": {"kind": ..., "message": ...}}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
            }
        })
    }
}
