use thiserror::Error;

use crate::types::ChartId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("overlap {charts:?} is declared but has no sample points")]
    EmptyOverlapSamples { charts: Vec<ChartId> },

    #[error("transition value has modulus {modulus} (off the unit circle by more than 1e-6)")]
    NonUnitTransition { modulus: f64 },

    #[error("point lies outside chart {chart} (margin {margin})")]
    PointOutsideChart { chart: ChartId, margin: f64 },

    #[error("point lies outside overlap {charts:?} (margin {margin})")]
    PointOutsideOverlap { charts: Vec<ChartId>, margin: f64 },

    #[error("no chart covers the sample at parameter {at:?}")]
    NoCoveringChart { at: Vec<f64> },

    #[error("partition failed its validity audit; raise the resolution ({reason})")]
    ResolutionTooCoarse { reason: String },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("cannot relabel element {index} with chart {chart}: image leaves the chart")]
    InvalidRelabel { index: usize, chart: ChartId },

    #[error("cannot merge elements {index} and {other}: {reason}")]
    InvalidMerge {
        index: usize,
        other: usize,
        reason: String,
    },

    #[error("quadrature did not reach tolerance {tolerance} (estimate {estimate})")]
    QuadratureNotConverged { tolerance: f64, estimate: f64 },

    #[error("endpoints differ by {distance} (limit 1e-9)")]
    EndpointMismatch { distance: f64 },

    #[error("arc {arc} leaves the overlap {charts:?}")]
    ArcOutsideOverlap { arc: usize, charts: Vec<ChartId> },

    #[error("loop partitions cannot be put in general position: {0}")]
    GeneralPositionFailure(String),

    #[error("invalid cut: {0}")]
    CutGeometryInvalid(String),

    #[error("seam mismatch: {0}")]
    SeamMismatch(String),

    #[error("finite-difference step {step} too large for margin {margin}")]
    StepTooLarge { step: f64, margin: f64 },

    #[error("bad parameter `{name}`: {reason}")]
    BadParameter { name: String, reason: String },

    #[error("unknown chart index {0}")]
    UnknownChart(ChartId),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
