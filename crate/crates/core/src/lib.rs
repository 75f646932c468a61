//! Decomposition of finite metric trees into nested tile hierarchies cut at
//! well-separated double points, recursive tile weights, and the induced
//! geodesic limit metric, together with the verification machinery for the
//! quantitative properties of the construction (chain identities, diameter
//! sandwiches, weak quasisymmetry sampling, Hausdorff-dimension bounds).

pub mod analysis;
pub mod error;
pub mod export;
pub mod generators;
pub mod good_points;
pub mod pipeline;
pub mod point;
pub mod rho;
pub mod subdivision;
pub mod tree;
pub mod weights;

pub use error::{Error, Result};
pub use point::{IntervalId, PointRef, SampleId};
pub use tree::{Arc, BranchData, BranchKind, MetricMode, MetricTree, TreeSpec};

/// Exact rational used for tile weights and chain lengths.
pub type Rational = num_rational::BigRational;

/// Convenience constructor for small rational literals.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}
