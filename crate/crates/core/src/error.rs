use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("integration failed at t = {time:.6} / Gamma: {reason}")]
    Integration { time: f64, reason: String },

    #[error("no unique steady state: {0}")]
    NoUniqueSteadyState(String),

    #[error("susceptibility undefined for a zero Rabi frequency")]
    ZeroDrive,

    #[error("gain undefined: zero input field at tau = {tau:.6} / Gamma")]
    UndefinedGain { tau: f64 },

    #[error("propagation grid too coarse (stability monitor {monitor:.3} > 0.1); use n_zeta >= {suggested_n_zeta}")]
    RefineGrid { monitor: f64, suggested_n_zeta: usize },

    #[error("velocity ensemble: {0}")]
    Ensemble(String),

    #[error("{responses} responses supplied for {nodes} velocity nodes")]
    NodeMismatch { responses: usize, nodes: usize },

    #[error("unknown preset `{name}` (available: {available})")]
    UnknownPreset { name: String, available: String },

    #[error("incompatible runs: {0}")]
    Incompatible(String),

    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn in_scenario(self, scenario: &str) -> Self {
        match self {
            e @ Error::Scenario { .. } => e,
            e => Error::Scenario {
                scenario: scenario.to_string(),
                source: Box::new(e),
            },
        }
    }

    /// Machine-readable error class.
    pub fn category(&self) -> &'static str {
        match self.root() {
            Error::Config(_) | Error::UnknownPreset { .. } => "config",
            Error::InvalidParameter { .. }
            | Error::Ensemble(_)
            | Error::NodeMismatch { .. }
            | Error::Incompatible(_) => "parameter",
            Error::RefineGrid { .. } => "grid",
            Error::Integration { .. } | Error::NoUniqueSteadyState(_) => "numerics",
            Error::ZeroDrive | Error::UndefinedGain { .. } => "undefined",
            Error::Io { .. } => "io",
            Error::Scenario { .. } => unreachable!("root strips context"),
        }
    }

    /// Process exit status for [`Error::category`].
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "parameter" => 3,
            "grid" => 4,
            "numerics" => 5,
            "undefined" => 6,
            _ => 7,
        }
    }

    /// The innermost error, with scenario context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Scenario { source, .. } => source.root(),
            e => e,
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}
