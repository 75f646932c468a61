//! End-to-end construction with adaptive parameter search.
//!
//! The closed-form constants are far too conservative for finite inputs,
//! so the default pipeline starts from user-supplied or mild defaults and
//! shrinks gamma, then delta, until the separated-set post-checks and the
//! structural validation pass.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::good_points::{derive_constants, ConstantsBundle, Provenance};
use crate::rho::RhoSpace;
use crate::subdivision::{neighbor_stats, validate_delta, DeltaReport, Hierarchy, NeighborStats};
use crate::tree::MetricTree;
use crate::weights::{assign_weights, WeightAssignment};
use crate::{ratio, Rational};

#[derive(Debug, Clone, Default)]
pub struct PipelineConfig {
    /// Branch-size factor; defaults to 1.
    pub beta: Option<f64>,
    /// Branch-separation factor; defaults to 0.05 and halves on retries.
    pub gamma: Option<f64>,
    /// Scale ratio; defaults to min(0.3, 0.9/(3 beta)) and halves on
    /// retries that gamma cannot fix.
    pub delta: Option<f64>,
    /// Levels to build; default keeps the deepest scale a few grid steps
    /// wide.
    pub depth: Option<usize>,
    /// Relative weight floor; defaults to 1/(3K).
    pub eps0: Option<Rational>,
    /// Adaptive retry budget.
    pub retry_cap: usize,
    /// Estimate the doubling constant for the constants bundle
    /// (diagnostic; costs a packing sweep).
    pub estimate_doubling: bool,
}

impl PipelineConfig {
    pub fn quick() -> Self {
        PipelineConfig {
            retry_cap: 8,
            ..Default::default()
        }
    }
}

/// A fully built decomposition: hierarchy, weights, combinatorial bounds,
/// the constants actually used, and the adaptive search log.
pub struct Pipeline {
    pub tree: MetricTree,
    pub hierarchy: Hierarchy,
    pub weights: WeightAssignment,
    pub stats: NeighborStats,
    pub delta_report: DeltaReport,
    pub constants: ConstantsBundle,
    pub attempts: Vec<AttemptLog>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttemptLog {
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub depth: usize,
    pub outcome: String,
}

impl Pipeline {
    pub fn rho_space(&self) -> RhoSpace<'_> {
        RhoSpace::new(&self.tree, &self.hierarchy, &self.weights)
    }
}

pub fn build_pipeline(tree: MetricTree, cfg: &PipelineConfig) -> Result<Pipeline> {
    let mut beta = cfg.beta.unwrap_or(1.0);
    let mut gamma = cfg.gamma.unwrap_or(0.4);
    let mut delta_shrink = 1.0f64;

    let mut attempts: Vec<AttemptLog> = Vec::new();
    let retry_cap = cfg.retry_cap.max(1);
    let mut gamma_shrinks = 0usize;
    let mut beta_raises = 0usize;
    let mut depth_cap: Option<usize> = None;

    for _attempt in 0..retry_cap {
        let delta = match cfg.delta {
            Some(d) => {
                let max_delta = 1.0 / (3.0 * beta);
                if !(d > 0.0 && d < max_delta) {
                    return Err(Error::DeltaOutOfRange {
                        delta: d,
                        max: max_delta,
                        beta,
                    });
                }
                d
            }
            None => default_delta(&tree, beta, gamma) * delta_shrink,
        };
        let depth = cfg
            .depth
            .or(depth_cap)
            .unwrap_or_else(|| default_depth(&tree, delta));
        let log = |outcome: &str, attempts: &mut Vec<AttemptLog>| {
            attempts.push(AttemptLog {
                beta,
                gamma,
                delta,
                depth,
                outcome: outcome.to_string(),
            });
        };
        match Hierarchy::build(&tree, delta, depth, beta, gamma) {
            // A failure at a scale only a few grid steps wide means the
            // grid cannot support that level; retreat one level instead
            // of disturbing the parameters that worked above it.
            Err(Error::SeparationPostCheck { scale, .. })
                if cfg.depth.is_none()
                    && level_of_scale(delta, scale) >= 2
                    && scale < 16.0 * tree.grid_tolerance() =>
            {
                let failing = level_of_scale(delta, scale);
                log(
                    &format!(
                        "scale {scale} is grid noise; capping depth at {}",
                        failing - 1
                    ),
                    &mut attempts,
                );
                depth_cap = Some(failing - 1);
                continue;
            }
            // An oversized component certifies that the branch-size
            // factor is below what the packing geometry of this tree
            // needs; grow it (the closed-form value is 6 N', far above
            // 1). Only when beta is not user-pinned.
            Err(Error::SeparationPostCheck { diam, scale, .. })
                if cfg.beta.is_none() && beta_raises < 5 && diam / (3.0 * scale) > beta =>
            {
                let implied = diam / (3.0 * scale);
                log(
                    &format!(
                        "component diam {diam} at scale {scale} implies beta >= {implied:.3}; raising beta"
                    ),
                    &mut attempts,
                );
                beta = implied * 1.25;
                beta_raises += 1;
                depth_cap = None;
                continue;
            }
            Err(Error::SeparationPostCheck { diam, bound, scale })
                if cfg.gamma.is_none() && gamma_shrinks < 3 =>
            {
                log(
                    &format!(
                        "post-check failed at scale {scale} (diam {diam} > {bound}); shrinking gamma"
                    ),
                    &mut attempts,
                );
                gamma /= 2.0;
                gamma_shrinks += 1;
                continue;
            }
            Err(Error::SeparationPostCheck { diam, bound, scale }) if cfg.delta.is_none() => {
                log(
                    &format!(
                        "post-check failed at scale {scale} (diam {diam} > {bound}); shrinking delta"
                    ),
                    &mut attempts,
                );
                delta_shrink /= 2.0;
                depth_cap = None;
                continue;
            }
            // Every adjustable knob is pinned; surface the failure.
            Err(e) => return Err(e),
            Ok(hierarchy) => {
                let report = validate_delta(&tree, &hierarchy);
                if !report.pass() {
                    if cfg.delta.is_some() {
                        // The scale is pinned; surface the failing check
                        // instead of searching.
                        let bad = report.checks.iter().find(|c| !c.pass).unwrap();
                        return Err(Error::ValidationFailed {
                            check: bad.name.clone(),
                            witness: bad.witness.clone().unwrap_or_default(),
                        });
                    }
                    log(
                        "structural validation failed; shrinking delta",
                        &mut attempts,
                    );
                    delta_shrink /= 2.0;
                    depth_cap = None;
                    continue;
                }
                let stats = neighbor_stats(&hierarchy);
                let k = stats.k.max(3);
                let eps0 = cfg.eps0.clone().unwrap_or_else(|| ratio(1, 3 * k as i64));
                let weights = match assign_weights(&tree, &hierarchy, eps0, k) {
                    Ok(w) => w,
                    Err(Error::MainChainTooShort { .. }) => {
                        log("main chain too short; shrinking delta", &mut attempts);
                        delta_shrink /= 2.0;
                        depth_cap = None;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                log("ok", &mut attempts);
                let constants = used_constants(&tree, beta, gamma, delta, k, cfg);
                return Ok(Pipeline {
                    tree,
                    hierarchy,
                    weights,
                    stats,
                    delta_report: report,
                    constants,
                    attempts,
                });
            }
        }
    }
    Err(Error::SeparationPostCheck {
        diam: 1.0,
        bound: 0.0,
        scale: delta_shrink,
    })
}

/// Default scale ratio. Trees with branch structure must keep the per-
/// level scale below gamma/(6 beta), otherwise the exit-vertex and
/// boundary-avoidance properties of child chains degrade; branch-free
/// trees only need the 1/(3 beta) ceiling.
pub fn default_delta(tree: &MetricTree, beta: f64, gamma: f64) -> f64 {
    let ceiling = 0.9 / (3.0 * beta);
    if tree.branch_point_samples().is_empty() {
        (0.3f64).min(ceiling)
    } else {
        (gamma / (6.0 * beta)).min(ceiling)
    }
}

/// Level whose scale a post-check failure reports: the i >= 1 with
/// delta^i closest to the scale.
fn level_of_scale(delta: f64, scale: f64) -> usize {
    if !(scale > 0.0 && delta > 0.0 && delta < 1.0) {
        return 1;
    }
    (scale.ln() / delta.ln()).round().max(1.0) as usize
}

/// Deepest level worth building: the deepest scale should stay a few grid
/// steps wide, otherwise the metric inequalities drown in grid noise.
pub fn default_depth(tree: &MetricTree, delta: f64) -> usize {
    let floor = 16.0 * tree.grid_tolerance();
    let mut depth = 1usize;
    while depth < 8 && delta.powi(depth as i32 + 1) >= floor {
        depth += 1;
    }
    depth
}

fn used_constants(
    tree: &MetricTree,
    beta: f64,
    gamma: f64,
    delta: f64,
    k: usize,
    cfg: &PipelineConfig,
) -> ConstantsBundle {
    let n = if cfg.estimate_doubling {
        tree.estimate_doubling_constant(&[0.5, 0.25, 0.125], 0.5)
    } else {
        1
    };
    let mut c = derive_constants(n.max(1));
    let mark = |c: &mut ConstantsBundle, key: &str, p: Provenance| {
        c.provenance.insert(key.to_string(), p);
    };
    c.branch_beta = beta;
    mark(
        &mut c,
        "branch_beta",
        if cfg.beta.is_some() {
            Provenance::User
        } else {
            Provenance::Adaptive
        },
    );
    c.separation_gamma = gamma;
    mark(
        &mut c,
        "separation_gamma",
        if cfg.gamma.is_some() {
            Provenance::User
        } else {
            Provenance::Adaptive
        },
    );
    c.scale_delta = delta;
    mark(
        &mut c,
        "scale_delta",
        if cfg.delta.is_some() {
            Provenance::User
        } else {
            Provenance::Adaptive
        },
    );
    c.neighbor_k = Some(k);
    mark(&mut c, "neighbor_k", Provenance::Adaptive);
    if !cfg.estimate_doubling {
        mark(&mut c, "doubling_n", Provenance::User);
    }
    c
}
