use serde::{Deserialize, Serialize};

/// Canonical location of a point on the sampled tree.
///
/// A point is either a combinatorial vertex or an interior grid position on
/// an edge. Interior positions use `step` in `1..grid` where `grid` is the
/// number of grid intervals on that edge, so `t = step/grid`. Endpoint
/// positions (`t = 0` or `t = 1`) are always represented as vertices, which
/// makes equality of `PointRef`s coincide with equality of tree points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PointRef {
    #[serde(rename = "v")]
    Vertex(usize),
    #[serde(rename = "e")]
    Interior { edge: usize, step: u32 },
}

impl PointRef {
    pub fn vertex(n: usize) -> Self {
        PointRef::Vertex(n)
    }

    pub fn interior(edge: usize, step: u32) -> Self {
        PointRef::Interior { edge, step }
    }
}

impl std::fmt::Display for PointRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointRef::Vertex(n) => write!(f, "v{n}"),
            PointRef::Interior { edge, step } => write!(f, "e{edge}+{step}"),
        }
    }
}

/// Index of a sample point in the tree's global sample table.
pub type SampleId = u32;

/// Index of a grid interval (the open segment between adjacent samples).
pub type IntervalId = u32;
