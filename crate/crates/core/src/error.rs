use thiserror::Error;

/// Errors surfaced by tree construction and the decomposition pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cycle detected: edge {a}-{b} closes a cycle")]
    CycleDetected { a: usize, b: usize },
    #[error("graph is disconnected: node {0} is unreachable")]
    Disconnected(usize),
    #[error("edge {a}-{b} has non-positive length {len}")]
    NonPositiveLength { a: usize, b: usize, len: f64 },
    #[error("snowflake exponent {0} outside (0, 1]")]
    SnowflakeExponentOutOfRange(f64),
    #[error("node id {0} out of range")]
    NodeOutOfRange(usize),
    #[error("distance table missing or malformed: {0}")]
    BadDistanceTable(String),
    #[error("point is not on the sample grid: {0}")]
    PointOffGrid(String),
    #[error("arc too short for grid: {need} pieces requested, {have} grid intervals available")]
    ArcTooShort { need: usize, have: usize },
    #[error("shadow bound violated: subarc holds {count} marked points, limit {limit}")]
    ShadowBoundViolated { count: usize, limit: usize },
    #[error("no grid point satisfies the branch-distance bound (gamma {gamma} too large for this resolution)")]
    NoQualifyingPoint { gamma: f64 },
    #[error("separated-set post-check failed: component diameter {diam} exceeds {bound} at scale {scale}")]
    SeparationPostCheck { diam: f64, bound: f64, scale: f64 },
    #[error("structural validation failed: {check} ({witness})")]
    ValidationFailed { check: String, witness: String },
    #[error("level {0} not built (hierarchy depth {1})")]
    LevelOutOfRange(usize, usize),
    #[error("degenerate query: {0}")]
    DegenerateQuery(String),
    #[error("chain mixes tiles of different levels")]
    MixedChainLevels,
    #[error("epsilon0 = {eps0} outside (0, 1/(3K)] with K = {k}")]
    Epsilon0OutOfRange { eps0: String, k: usize },
    #[error("main chain of tile {tile} has length {len} < 3; scale ratio too large for this tree")]
    MainChainTooShort { tile: usize, len: usize },
    #[error("exit vertex is not independent of the target boundary vertex in tile {tile}")]
    ExitVertexAmbiguous { tile: usize },
    #[error("dimension exponent must exceed 1 (got {0})")]
    AlphaOutOfRange(f64),
    #[error("delta = {delta} outside (0, {max}) required by beta = {beta}")]
    DeltaOutOfRange { delta: f64, max: f64, beta: f64 },
    #[error("invalid generator spec: {0}")]
    InvalidGenerator(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
