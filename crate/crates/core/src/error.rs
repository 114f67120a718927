use crate::calculus::CalculusError;
use crate::expr::ParseError;
use crate::geometry::GeometryError;
use crate::lp::LpError;
use crate::problem::Violation;

/// Errors surfaced by the high-level API.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{what}: {source}")]
    Parse {
        what: String,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("invalid problem: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("invalid selection: {0}")]
    Selection(String),
    #[error("constraint qualification not established for the given selection")]
    CqNotEstablished,
    #[error("problem file: {0}")]
    File(String),
}

fn join(vs: &[Violation]) -> String {
    vs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
