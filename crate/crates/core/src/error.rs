use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("not invertible (sigma_min / sigma_max = {0:e})")]
    NotInvertible(f64),
    #[error("subspace ill-defined: sigma_{index} / sigma_{next} = {ratio}", next = .index + 1)]
    IllDefined { index: usize, ratio: f64 },
    #[error("empty horoball base")]
    EmptyBase,
    #[error("vertices disconnected within truncation (radius {radius}, depth {depth})")]
    Disconnected { radius: u32, depth: u32 },
    #[error("vertices lie in different horoballs")]
    DifferentHoroballs,
    #[error("normalize excursions first: {0}")]
    NotPreferred(String),
    #[error("wholly peripheral path")]
    WhollyPeripheral,
    #[error("distance to {0} not covered by the truncation")]
    Truncation(String),
    #[error("unsupported peripheral: {0}")]
    Unsupported(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("not dominated on window: {0}")]
    NotDominated(String),
    #[error("window too short: need depth {needed}, window allows {available}")]
    WindowTooShort { needed: usize, available: usize },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
