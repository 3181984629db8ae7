use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("degenerate rotation axis: effective Rabi frequency is zero")]
    DegenerateAxis,
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("integration step too coarse: {0}")]
    Accuracy(String),
    #[error("integrator failure at block {block}: {detail}")]
    Integrator { block: usize, detail: String },
    #[error("sensor schedule: {0}")]
    Schedule(String),
}
