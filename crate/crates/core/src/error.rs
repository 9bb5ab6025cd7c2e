use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DsgError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("power-factor angle undefined at zero apparent power")]
    ZeroPower,

    #[error("no pre-disturbance equilibrium: P_ref = {p_ref} exceeds the reachable power {p_max}")]
    NoEquilibrium { p_ref: f64, p_max: f64 },

    #[error("state became non-finite at t = {t} s ({what})")]
    NonFinite { t: f64, what: &'static str },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("config{}: {message}", at_line(*.line))]
    Config { line: usize, message: String },

    #[error("{}:{line}: {message}", path.display())]
    Csv { path: PathBuf, line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn at_line(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" line {line}")
    }
}

pub type Result<T> = std::result::Result<T, DsgError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> DsgError {
    DsgError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
