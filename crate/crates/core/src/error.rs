use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("routing tree contains a cycle through vertex {0}")]
    CycleDetected(usize),
    #[error("vertex {0} has more than one parent")]
    MultipleParents(usize),
    #[error("UE {0} has children")]
    UeWithChildren(usize),
    #[error("vertex {0} is not connected to the donor")]
    DisconnectedVertex(usize),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid network matrices: {0}")]
    InvalidMatrices(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pathloss model out of range: {0}")]
    OutOfModelRange(String),

    #[error("unstable queue on edge {edge}: service {service} <= arrival {arrival}")]
    UnstableQueue { edge: usize, service: f64, arrival: f64 },

    #[error("network cannot support the requested rate (t* = {t_star})")]
    InfeasibleRate { t_star: f64 },
    #[error("delay threshold {delta_s} s is infeasible for this network")]
    InfeasibleDelay { delta_s: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("linear program is infeasible")]
    LpInfeasible,
    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("both duplex modes are infeasible")]
    BothInfeasible,
    #[error("latency target infeasible for every network depth")]
    InfeasibleTarget,

    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
