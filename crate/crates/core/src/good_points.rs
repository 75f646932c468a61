//! Selection of double points that stay away from branch points in a
//! controlled way: shadow functions and the sun-point search, the goodness
//! predicate, maximal separated sets of good points, and the derived
//! constants pipeline.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::point::{PointRef, SampleId};
use crate::tree::{Arc, MetricTree};

/// A nonnegative function on an arc with sparse support, thought of as
/// casting a shadow of radius proportional to its value around each
/// support point.
#[derive(Debug, Clone)]
pub struct ShadowFunction {
    arc: Arc,
    /// (position in `arc.samples()`, value), sorted by position.
    support: Vec<(usize, f64)>,
    diam: f64,
}

impl ShadowFunction {
    /// Values outside `[0, diam(arc)]` or points off the arc are rejected.
    pub fn new(tree: &MetricTree, arc: Arc, support: Vec<(PointRef, f64)>) -> Result<Self> {
        let diam = tree.arc_diam(&arc);
        let mut by_pos: Vec<(usize, f64)> = Vec::with_capacity(support.len());
        for (p, v) in support {
            let s = tree.sample_of(p)?;
            let pos = arc
                .samples()
                .iter()
                .position(|&q| q == s)
                .ok_or_else(|| Error::PointOffGrid(format!("{p} not on shadow arc")))?;
            if !(0.0..=diam + 1e-12).contains(&v) {
                return Err(Error::PointOffGrid(format!(
                    "shadow value {v} outside [0, {diam}]"
                )));
            }
            by_pos.push((pos, v));
        }
        by_pos.sort_by_key(|a| a.0);
        by_pos.dedup_by_key(|e| e.0);
        Ok(ShadowFunction {
            arc,
            support: by_pos,
            diam,
        })
    }

    pub fn arc(&self) -> &Arc {
        &self.arc
    }

    pub fn diam(&self) -> f64 {
        self.diam
    }

    pub fn support(&self, tree: &MetricTree) -> Vec<(PointRef, f64)> {
        self.support
            .iter()
            .map(|&(pos, v)| (tree.point_of(self.arc.samples()[pos]), v))
            .collect()
    }

    /// Empirical bound on how many marked points a subarc can hold relative
    /// to its own diameter: max over subarcs I of #{p in I : S(p) >= diam I}.
    /// The max over all subarcs is attained on minimal arcs spanned by
    /// support points, so only support pairs need to be inspected.
    pub fn count_bound(&self, tree: &MetricTree) -> usize {
        let mut best = 1usize;
        let s = &self.support;
        for i in 0..s.len() {
            for j in i..s.len() {
                let span = tree.dd_samples(self.arc.samples()[s[i].0], self.arc.samples()[s[j].0]);
                let count = s[i..=j].iter().filter(|&&(_, v)| v >= span).count();
                best = best.max(count);
            }
        }
        best
    }
}

/// Parameters of the goodness predicate at a fixed scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoodPointParams {
    /// Both sides of a good double point must have diameter >= beta * scale.
    pub beta: f64,
    /// Distance to every branch point b must be >= gamma * min(H(b), scale).
    pub gamma: f64,
    /// The scale Delta.
    pub scale: f64,
}

impl GoodPointParams {
    pub fn new(beta: f64, gamma: f64, scale: f64) -> Self {
        assert!(beta >= 1.0, "beta must be >= 1");
        assert!(gamma > 0.0, "gamma must be positive");
        assert!(scale > 0.0 && scale <= 1.0, "scale must lie in (0, 1]");
        GoodPointParams { beta, gamma, scale }
    }
}

/// Why a point failed the goodness predicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GoodnessViolation {
    NotDoublePoint,
    SmallSide {
        side_diam: f64,
        required: f64,
    },
    BranchTooClose {
        branch: PointRef,
        dist: f64,
        required: f64,
    },
}

/// Result of the goodness predicate, with a witness on failure.
#[derive(Debug, Clone, PartialEq)]
pub struct GoodnessVerdict {
    pub good: bool,
    pub violation: Option<GoodnessViolation>,
}

/// Source of each constant in a [`ConstantsBundle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Formula,
    User,
    Adaptive,
}

/// The full set of constants steering the decomposition, with per-field
/// provenance. `derive_constants` fills them from the doubling constant by
/// the closed-form rules; pipelines may overwrite individual fields.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsBundle {
    /// Doubling constant of the tree (estimated or supplied).
    pub doubling_n: usize,
    /// Packing bound: max points of a rho-separated set in a ball of
    /// radius 6*rho.
    pub packing_n_prime: usize,
    /// Shadow-count bound used by the sun-point search.
    pub shadow_m: usize,
    /// Sun constant sigma = 1/(36 M^2).
    pub sun_sigma: f64,
    /// Branch-separation constant gamma = sigma^2 / 2.
    pub separation_gamma: f64,
    /// Branch-size constant beta = 6 N'.
    pub branch_beta: f64,
    /// Scale ratio delta = min(1/(6 beta), gamma/(3 beta)) / 2.
    pub scale_delta: f64,
    /// Neighbor/child bound K, filled by the subdivision stage.
    pub neighbor_k: Option<usize>,
    pub provenance: BTreeMap<String, Provenance>,
}

/// Fill the constants bundle from a doubling constant.
///
/// The packing bounds follow from iterated halving of the covering radius:
/// a ball of radius 6r needs 4 halvings to reach radius < r/2, bounding a
/// r-separated subset by N^4; the points produced by the shadow-count
/// argument are (r/2)-separated inside a ball of radius 3r/2, bounded by
/// N^3 plus the two arc endpoints.
pub fn derive_constants(doubling_n: usize) -> ConstantsBundle {
    assert!(doubling_n >= 1);
    let n = doubling_n;
    constants_from_parts(n, n.saturating_pow(4), n.saturating_pow(3) + 2)
}

/// The closed-form constants given the packing bound N' and the shadow
/// bound M: sigma = 1/(36 M^2), gamma = sigma^2/2, beta = 6 N',
/// delta = min(1/(6 beta), gamma/(3 beta)) / 2.
pub fn constants_from_parts(doubling_n: usize, n_prime: usize, m: usize) -> ConstantsBundle {
    assert!(n_prime >= 1 && m >= 1);
    let sigma = 1.0 / (36.0 * (m * m) as f64);
    let gamma = sigma * sigma / 2.0;
    let beta = 6.0 * n_prime as f64;
    let delta = 0.5 * (1.0 / (6.0 * beta)).min(gamma / (3.0 * beta));
    let provenance: BTreeMap<String, Provenance> = [
        "packing_n_prime",
        "shadow_m",
        "sun_sigma",
        "separation_gamma",
        "branch_beta",
        "scale_delta",
    ]
    .iter()
    .map(|k| (k.to_string(), Provenance::Formula))
    .collect();
    ConstantsBundle {
        doubling_n,
        packing_n_prime: n_prime,
        shadow_m: m,
        sun_sigma: sigma,
        separation_gamma: gamma,
        branch_beta: beta,
        scale_delta: delta,
        neighbor_k: None,
        provenance,
    }
}

/// Find a subarc of `jp` of diameter diam(jp)/(6m) that keeps the same
/// distance from the marked set and from the endpoints of `jp`.
///
/// Splits `jp` into m+1 equal-diameter pieces, picks the first piece whose
/// interior misses `marked`, splits that piece into thirds and trims the
/// middle third down to the target diameter.
pub fn find_avoiding_subarc(
    tree: &MetricTree,
    jp: &Arc,
    marked: &[SampleId],
    m: usize,
) -> Result<Arc> {
    assert!(m >= 1);
    let diam = tree.arc_diam(jp);
    let target = diam / (6.0 * m as f64);
    let (pieces, _) = tree.equal_diameter_split(jp, m + 1)?;
    let free = pieces
        .iter()
        .find(|piece| {
            let inner = &piece.samples()[1..piece.samples().len() - 1];
            !inner.iter().any(|s| marked.contains(s))
        })
        .ok_or(Error::ShadowBoundViolated {
            count: marked.len(),
            limit: m,
        })?;
    let (thirds, _) = tree.equal_diameter_split(free, 3)?;
    let middle = &thirds[1];
    // Largest prefix of the middle third whose diameter stays <= target;
    // each extension grows the diameter by at most one grid step.
    let samples = middle.samples();
    let mut hi = 1usize;
    for i in 2..samples.len() {
        let cand = middle.slice(tree, 0, i);
        if tree.arc_diam(&cand) <= target {
            hi = i;
        } else {
            break;
        }
    }
    let result = middle.slice(tree, 0, hi);
    if tree.arc_diam(&result) > target + tree.grid_tolerance() {
        return Err(Error::ArcTooShort {
            need: 6 * m,
            have: jp.interval_count(),
        });
    }
    // Grid scan of the distance postcondition: marked points and the
    // endpoints of jp stay a target away from every sample of the result.
    if cfg!(debug_assertions) {
        let tol = tree.grid_tolerance();
        let mut targets: Vec<SampleId> = marked.to_vec();
        targets.push(jp.samples()[0]);
        targets.push(*jp.samples().last().unwrap());
        // The split and the trim each cost up to one grid step.
        for &s in result.samples() {
            for &a in &targets {
                debug_assert!(
                    tree.dd_samples(s, a) >= target - 3.0 * tol,
                    "avoiding subarc too close to a marked point"
                );
            }
        }
    }
    Ok(result)
}

/// A point of the arc avoiding every shadow: dd(x, p) >= sigma * S(p) for
/// all support points p, with sigma = 1/(36 M^2), up to one grid step.
///
/// Implemented as a nested-arc descent with ratio 1/(6M) against the
/// growing level sets of S; if discretization noise defeats the descent,
/// falls back to a full scan of the arc for the most shadow-clear point.
pub fn place_in_sun(
    tree: &MetricTree,
    shadow: &ShadowFunction,
    m: usize,
) -> Result<(PointRef, f64)> {
    assert!(m >= 1);
    let observed = shadow.count_bound(tree);
    if observed > m {
        return Err(Error::ShadowBoundViolated {
            count: observed,
            limit: m,
        });
    }
    let sigma = 1.0 / (36.0 * (m * m) as f64);
    let arc = shadow.arc();
    let midpoint = |a: &Arc| tree.point_of(a.samples()[a.samples().len() / 2]);

    if shadow.support(tree).iter().all(|&(_, v)| v == 0.0) {
        return Ok((midpoint(arc), sigma));
    }

    let lambda = 1.0 / (6.0 * m as f64);
    let diam = shadow.diam();
    let tol = tree.grid_tolerance();
    let mut current = arc.clone();
    let mut level = 0u32;
    loop {
        let threshold = lambda.powi(level as i32) * diam;
        let marked: Vec<SampleId> = shadow
            .support
            .iter()
            .filter(|&&(_, v)| v >= threshold)
            .map(|&(pos, _)| arc.samples()[pos])
            .collect();
        match find_avoiding_subarc(tree, &current, &marked, m) {
            Ok(next) => current = next,
            Err(_) => break,
        }
        level += 1;
        if lambda.powi(level as i32 + 1) * diam <= tol || level > 64 {
            break;
        }
    }

    let clears = |x: SampleId| {
        shadow
            .support
            .iter()
            .all(|&(pos, v)| tree.dd_samples(x, arc.samples()[pos]) >= sigma * v - tol)
    };
    let x = tree.sample_of(midpoint(&current))?;
    if clears(x) {
        return Ok((tree.point_of(x), sigma));
    }
    // Grid fallback: most shadow-clear sample on the whole arc.
    let best = arc
        .samples()
        .iter()
        .copied()
        .max_by(|&a, &b| {
            let score = |s: SampleId| {
                shadow
                    .support
                    .iter()
                    .map(|&(pos, v)| tree.dd_samples(s, arc.samples()[pos]) - sigma * v)
                    .fold(f64::INFINITY, f64::min)
            };
            score(a)
                .partial_cmp(&score(b))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap();
    if clears(best) {
        Ok((tree.point_of(best), sigma))
    } else {
        Err(Error::NoQualifyingPoint { gamma: sigma })
    }
}

/// Check the goodness predicate exactly. `None` as `max_scale` checks only
/// the branch clause (used for points produced by the arc search, where the
/// small-side condition is enforced separately by the caller).
pub fn is_good_double_point(
    tree: &MetricTree,
    x: PointRef,
    params: &GoodPointParams,
) -> Result<GoodnessVerdict> {
    let s = tree.sample_of(x)?;
    Ok(goodness_of_sample(tree, s, params))
}

pub(crate) fn goodness_of_sample(
    tree: &MetricTree,
    s: SampleId,
    params: &GoodPointParams,
) -> GoodnessVerdict {
    if !tree.is_double_point(s) {
        return GoodnessVerdict {
            good: false,
            violation: Some(GoodnessViolation::NotDoublePoint),
        };
    }
    let bd = tree.branch_data_sample(s);
    let small = bd.double_small_side().unwrap();
    let required = params.beta * params.scale;
    if small < required {
        return GoodnessVerdict {
            good: false,
            violation: Some(GoodnessViolation::SmallSide {
                side_diam: small,
                required,
            }),
        };
    }
    for (i, &b) in tree.branch_point_samples().iter().enumerate() {
        let need = params.gamma * tree.branch_h_value(i).min(params.scale);
        let dist = tree.dd_samples(s, b);
        if dist < need {
            return GoodnessVerdict {
                good: false,
                violation: Some(GoodnessViolation::BranchTooClose {
                    branch: tree.point_of(b),
                    dist,
                    required: need,
                }),
            };
        }
    }
    GoodnessVerdict {
        good: true,
        violation: None,
    }
}

/// Branch clause only, with one grid step of slack (used to accept the
/// output of the sun-point search).
fn clears_branches(tree: &MetricTree, s: SampleId, scale: f64, gamma: f64, tol: f64) -> bool {
    tree.branch_point_samples()
        .iter()
        .enumerate()
        .all(|(i, &b)| tree.dd_samples(s, b) >= gamma * tree.branch_h_value(i).min(scale) - tol)
}

/// A double point on `j` whose distance to every branch point b is at least
/// gamma * min(H(b), delta), up to one grid step.
pub fn good_double_point_on_arc(
    tree: &MetricTree,
    j: &Arc,
    delta: f64,
    gamma: f64,
) -> Result<PointRef> {
    let diam = tree.arc_diam(j);
    assert!(
        diam >= delta - tree.grid_tolerance(),
        "arc diameter {diam} below requested scale {delta}"
    );
    let samples = j.samples();
    let interior: &[SampleId] = &samples[1..samples.len().saturating_sub(1)];
    let mut support: Vec<(PointRef, f64)> = vec![
        (j.endpoints().0, delta.min(diam)),
        (j.endpoints().1, delta.min(diam)),
    ];
    for (i, &b) in tree.branch_point_samples().iter().enumerate() {
        if interior.contains(&b) {
            support.push((
                tree.point_of(b),
                tree.branch_h_value(i).min(delta).min(diam),
            ));
        }
    }
    let shadow = ShadowFunction::new(tree, j.clone(), support)?;
    let m = shadow.count_bound(tree);
    let tol = tree.grid_tolerance();

    if let Ok((x, _)) = place_in_sun(tree, &shadow, m) {
        let s = tree.sample_of(x)?;
        if tree.is_double_point(s) && clears_branches(tree, s, delta, gamma, tol) {
            return Ok(x);
        }
    }
    // Exhaustive fallback: the double point on the arc maximizing the
    // worst-case normalized branch distance.
    let mut best: Option<(f64, SampleId)> = None;
    for &s in samples {
        if !tree.is_double_point(s) {
            continue;
        }
        let score = tree
            .branch_point_samples()
            .iter()
            .enumerate()
            .map(|(i, &b)| tree.dd_samples(s, b) / tree.branch_h_value(i).min(delta).max(1e-300))
            .fold(f64::INFINITY, f64::min);
        if best.is_none_or(|(bs, _)| score > bs) {
            best = Some((score, s));
        }
    }
    match best {
        Some((_, s)) if clears_branches(tree, s, delta, gamma, tol) => Ok(tree.point_of(s)),
        _ => Err(Error::NoQualifyingPoint { gamma }),
    }
}

/// Grow `seed` to a maximal separated set of good double points.
///
/// The scan order is the tree's deterministic DFS edge order; a ball of
/// radius `scale` around every accepted point is blocked, which both
/// enforces separation and keeps the scan near-linear. After the scan,
/// every complementary component must have diameter <= 3 * beta * scale
/// (plus one grid step), otherwise the scale/parameters are infeasible at
/// this resolution.
pub fn maximal_good_set(
    tree: &MetricTree,
    params: &GoodPointParams,
    seed: &[SampleId],
) -> Result<Vec<SampleId>> {
    let delta = params.scale;
    // Seed contract: pairwise separated and good at this scale.
    for (i, &a) in seed.iter().enumerate() {
        let verdict = goodness_of_sample(tree, a, params);
        assert!(
            verdict.good,
            "seed point {} fails goodness: {:?}",
            tree.point_of(a),
            verdict.violation
        );
        for &b in &seed[..i] {
            assert!(
                tree.dd_samples(a, b) >= delta,
                "seed points {} and {} are not {delta}-separated",
                tree.point_of(a),
                tree.point_of(b)
            );
        }
    }

    let ns = tree.sample_count() as usize;
    let mut blocked = vec![false; ns];
    let mut chosen: Vec<SampleId> = Vec::new();
    let block = |v: SampleId, blocked: &mut Vec<bool>| {
        for s in tree.dd_ball(v, delta) {
            blocked[s as usize] = true;
        }
    };
    for &v in seed {
        chosen.push(v);
        block(v, &mut blocked);
    }
    for &s in tree.dfs_order() {
        if blocked[s as usize] {
            continue;
        }
        if goodness_of_sample(tree, s, params).good {
            chosen.push(s);
            block(s, &mut blocked);
        }
    }

    // Post-check: complementary components stay small.
    let mut cut = vec![false; ns];
    for &v in &chosen {
        cut[v as usize] = true;
    }
    let (comp, count) = tree.components_cut_at(&cut);
    let groups = component_samples(tree, &comp, count);
    let bound = 3.0 * params.beta * delta + tree.grid_tolerance();
    for samples in &groups {
        let diam = subtree_diam(tree, samples);
        if diam > bound {
            return Err(Error::SeparationPostCheck {
                diam,
                bound,
                scale: delta,
            });
        }
    }
    Ok(chosen)
}

/// Sample sets of the closures of all components, grouped in one pass.
pub fn component_samples(tree: &MetricTree, comp: &[u32], count: usize) -> Vec<Vec<SampleId>> {
    let mut groups: Vec<Vec<SampleId>> = vec![Vec::new(); count];
    for iv in 0..tree.interval_count() {
        let c = comp[iv as usize] as usize;
        let (s, t) = tree.interval_endpoints(iv);
        groups[c].push(s);
        groups[c].push(t);
    }
    for g in groups.iter_mut() {
        g.sort_unstable();
        g.dedup();
    }
    groups
}

/// Diameter of a connected sample set. Double sweep on path length for
/// geodesic/snowflake modes; brute force in table mode.
pub fn subtree_diam(tree: &MetricTree, samples: &[SampleId]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    match tree.mode() {
        crate::tree::MetricMode::Table { .. } => {
            let mut best = 0.0f64;
            for i in 0..samples.len() {
                for j in i + 1..samples.len() {
                    best = best.max(tree.base_dist_samples(samples[i], samples[j]));
                }
            }
            best
        }
        _ => {
            let inset: std::collections::HashSet<SampleId> = samples.iter().copied().collect();
            let far = |start: SampleId| -> (SampleId, f64) {
                let mut best = (start, 0.0f64);
                let mut stack = vec![(start, start, 0.0f64)];
                while let Some((v, from, acc)) = stack.pop() {
                    for &(w, _, step) in tree.neighbors_of(v) {
                        if w != from && inset.contains(&w) {
                            let d = acc + step;
                            if d > best.1 {
                                best = (w, d);
                            }
                            stack.push((w, v, d));
                        }
                    }
                }
                best
            };
            let (a, _) = far(samples[0]);
            let (_, plen) = far(a);
            match tree.mode() {
                crate::tree::MetricMode::Snowflake { eps } => plen.powf(*eps),
                _ => plen,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{MetricMode, TreeSpec};

    fn segment(res: u32) -> MetricTree {
        MetricTree::build(&TreeSpec {
            node_count: 2,
            edges: vec![(0, 1, 1.0)],
            metric: MetricMode::Geodesic,
            resolution: res,
        })
        .unwrap()
    }

    fn tripod(res: u32) -> MetricTree {
        MetricTree::build(&TreeSpec {
            node_count: 4,
            edges: vec![(3, 0, 1.0), (3, 1, 1.0), (3, 2, 1.0)],
            metric: MetricMode::Geodesic,
            resolution: res,
        })
        .unwrap()
    }

    fn full_arc(t: &MetricTree) -> Arc {
        t.arc_between(PointRef::vertex(0), PointRef::vertex(1))
            .unwrap()
    }

    #[test]
    fn avoiding_subarc_with_empty_marks() {
        let t = segment(144);
        let arc = full_arc(&t);
        let i = find_avoiding_subarc(&t, &arc, &[], 1).unwrap();
        let tol = t.grid_tolerance();
        let d = t.arc_diam(&i);
        assert!((d - 1.0 / 6.0).abs() <= tol + 1e-12, "diam {d}");
        // Exhaustive check of the distance claim over the grid.
        let ends = [arc.samples()[0], *arc.samples().last().unwrap()];
        for &s in i.samples() {
            for &e in &ends {
                assert!(t.dd_samples(s, e) >= 1.0 / 6.0 - tol - 1e-12);
            }
        }
    }

    #[test]
    fn avoiding_subarc_with_midpoint_marked() {
        let t = segment(144);
        let arc = full_arc(&t);
        let mid = t.sample_of(PointRef::interior(0, 72)).unwrap();
        let i = find_avoiding_subarc(&t, &arc, &[mid], 1).unwrap();
        let tol = t.grid_tolerance();
        let d = t.arc_diam(&i);
        assert!((d - 1.0 / 6.0).abs() <= tol + 1e-12);
        let ends = [arc.samples()[0], *arc.samples().last().unwrap()];
        for &s in i.samples() {
            for &e in ends.iter().chain([mid].iter()) {
                assert!(
                    t.dd_samples(s, e) >= 1.0 / 6.0 - tol - 1e-12,
                    "dist to {e} broken"
                );
            }
        }
    }

    #[test]
    fn avoiding_subarc_with_spread_marks() {
        let t = segment(256);
        let arc = full_arc(&t);
        let m = 3usize;
        let marks: Vec<_> = [60u32, 128, 200]
            .iter()
            .map(|&s| t.sample_of(PointRef::interior(0, s)).unwrap())
            .collect();
        let i = find_avoiding_subarc(&t, &arc, &marks, m).unwrap();
        let tol = t.grid_tolerance();
        let want = 1.0 / (6.0 * m as f64);
        assert!((t.arc_diam(&i) - want).abs() <= tol + 1e-12);
        // Brute-force distance scan.
        let mut targets = marks.clone();
        targets.push(arc.samples()[0]);
        targets.push(*arc.samples().last().unwrap());
        for &s in i.samples() {
            for &e in &targets {
                assert!(t.dd_samples(s, e) >= want - tol - 1e-12);
            }
        }
    }

    #[test]
    fn sun_with_zero_shadow_returns_midpoint() {
        let t = segment(64);
        let arc = full_arc(&t);
        let shadow = ShadowFunction::new(&t, arc.clone(), vec![]).unwrap();
        let (x, sigma) = place_in_sun(&t, &shadow, 1).unwrap();
        assert_eq!(sigma, 1.0 / 36.0);
        assert_eq!(x, t.point_of(arc.samples()[arc.samples().len() / 2]));
    }

    #[test]
    fn sun_clears_endpoint_shadows() {
        let t = segment(512);
        let arc = full_arc(&t);
        let shadow = ShadowFunction::new(
            &t,
            arc.clone(),
            vec![(PointRef::vertex(0), 1.0), (PointRef::vertex(1), 1.0)],
        )
        .unwrap();
        let m = 2;
        let (x, sigma) = place_in_sun(&t, &shadow, m).unwrap();
        assert_eq!(sigma, 1.0 / 144.0);
        let tol = t.grid_tolerance();
        let sx = t.sample_of(x).unwrap();
        for e in [0u32, 1] {
            assert!(t.dd_samples(sx, e) >= sigma - tol - 1e-12);
        }
        // Oracle: some grid point clears the shadows outright.
        assert!(arc
            .samples()
            .iter()
            .any(|&s| { t.dd_samples(s, 0) >= sigma && t.dd_samples(s, 1) >= sigma }));
    }

    #[test]
    fn sun_clears_single_interior_shadow() {
        let t = segment(512);
        let arc = full_arc(&t);
        let p = PointRef::interior(0, 170);
        let shadow = ShadowFunction::new(&t, arc.clone(), vec![(p, 1.0)]).unwrap();
        let (x, sigma) = place_in_sun(&t, &shadow, 1).unwrap();
        assert_eq!(sigma, 1.0 / 36.0);
        let tol = t.grid_tolerance();
        let sx = t.sample_of(x).unwrap();
        let sp = t.sample_of(p).unwrap();
        assert!(t.dd_samples(sx, sp) >= sigma - tol - 1e-12);
        // Grid oracle confirms feasibility without slack.
        assert!(arc.samples().iter().any(|&s| t.dd_samples(s, sp) >= sigma));
    }

    #[test]
    fn sun_rejects_overcrowded_shadow() {
        let t = segment(64);
        let arc = full_arc(&t);
        // Three max-value shadows but M = 1: the count bound fails.
        let shadow = ShadowFunction::new(
            &t,
            arc.clone(),
            vec![
                (PointRef::vertex(0), 1.0),
                (PointRef::interior(0, 32), 1.0),
                (PointRef::vertex(1), 1.0),
            ],
        )
        .unwrap();
        assert!(matches!(
            place_in_sun(&t, &shadow, 1),
            Err(Error::ShadowBoundViolated { .. })
        ));
    }

    #[test]
    fn good_point_on_arc_without_branches() {
        let t = segment(128);
        let arc = full_arc(&t);
        let x = good_double_point_on_arc(&t, &arc, 1.0, 0.01).unwrap();
        let s = t.sample_of(x).unwrap();
        assert!(t.is_double_point(s));
    }

    #[test]
    fn good_point_on_tripod_leg_avoids_center() {
        let t = tripod(128);
        // One full leg: from leaf 0 to center 3; its diameter is 0.5.
        let arc = t
            .arc_between(PointRef::vertex(0), PointRef::vertex(3))
            .unwrap();
        let delta = 0.5;
        let gamma = 0.05;
        let x = good_double_point_on_arc(&t, &arc, delta, gamma).unwrap();
        let sx = t.sample_of(x).unwrap();
        let center = 3u32;
        let h = t.branch_h_value(0);
        assert!(t.dd_samples(sx, center) >= gamma * h.min(delta) - t.grid_tolerance() - 1e-12);
    }

    #[test]
    fn good_point_clears_every_branch_point_on_spine() {
        // Symmetric binary-ish tree: spine 0-1-2-3 with hairs off 1 and 2.
        let t = MetricTree::build(&TreeSpec {
            node_count: 7,
            edges: vec![
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 3, 1.0),
                (1, 4, 0.8),
                (2, 5, 0.8),
                (5, 6, 0.2),
            ],
            metric: MetricMode::Geodesic,
            resolution: 64,
        })
        .unwrap();
        let arc = t
            .arc_between(PointRef::vertex(0), PointRef::vertex(3))
            .unwrap();
        let delta = 0.3;
        let gamma = 0.02;
        let x = good_double_point_on_arc(&t, &arc, delta, gamma).unwrap();
        let sx = t.sample_of(x).unwrap();
        let tol = t.grid_tolerance();
        for (i, &b) in t.branch_point_samples().iter().enumerate() {
            let need = gamma * t.branch_h_value(i).min(delta);
            assert!(t.dd_samples(sx, b) >= need - tol - 1e-12, "branch {b}");
        }
    }

    #[test]
    fn goodness_examples() {
        let t = segment(64);
        let mid = PointRef::interior(0, 32);
        let good = is_good_double_point(&t, mid, &GoodPointParams::new(1.0, 0.5, 0.4)).unwrap();
        assert!(good.good);

        let near_leaf = PointRef::interior(0, 3); // distance 3/64 from leaf
        let bad =
            is_good_double_point(&t, near_leaf, &GoodPointParams::new(1.0, 0.5, 0.4)).unwrap();
        assert!(!bad.good);
        assert!(matches!(
            bad.violation,
            Some(GoodnessViolation::SmallSide { .. })
        ));

        let t3 = tripod(32);
        let center = is_good_double_point(
            &t3,
            PointRef::vertex(3),
            &GoodPointParams::new(1.0, 0.5, 0.1),
        )
        .unwrap();
        assert!(matches!(
            center.violation,
            Some(GoodnessViolation::NotDoublePoint)
        ));
    }

    #[test]
    fn maximal_set_at_oversized_scale() {
        let t = segment(64);
        // scale = 1 = diam: no point has both sides >= 1, so the set
        // stays empty and the post-check bound 3*beta*1 >= 1 passes.
        let params = GoodPointParams::new(1.0, 0.1, 1.0);
        let v = maximal_good_set(&t, &params, &[]).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn maximal_set_on_segment_is_separated_and_bounding() {
        let t = segment(256);
        let delta = 0.3;
        let params = GoodPointParams::new(1.0, 0.1, delta);
        let v = maximal_good_set(&t, &params, &[]).unwrap();
        assert!(!v.is_empty());
        for (i, &a) in v.iter().enumerate() {
            for &b in &v[..i] {
                assert!(t.dd_samples(a, b) >= delta);
            }
            assert!(goodness_of_sample(&t, a, &params).good);
        }
        // Components after cutting have diameter <= 3*beta*delta (+tol):
        // exhaustive check via the component machinery.
        let mut cut = vec![false; t.sample_count() as usize];
        for &a in &v {
            cut[a as usize] = true;
        }
        let (comp, count) = t.components_cut_at(&cut);
        for g in component_samples(&t, &comp, count) {
            assert!(subtree_diam(&t, &g) <= 3.0 * delta + t.grid_tolerance() + 1e-12);
        }
        // Maximality: no remaining grid point is addable.
        for s in 0..t.sample_count() {
            if v.contains(&s) || !goodness_of_sample(&t, s, &params).good {
                continue;
            }
            assert!(
                v.iter().any(|&a| t.dd_samples(a, s) < delta),
                "point {s} could still be added"
            );
        }
    }

    #[test]
    fn maximal_set_keeps_seed() {
        let t = segment(256);
        let params = GoodPointParams::new(1.0, 0.1, 0.3);
        let seed = vec![t.sample_of(PointRef::interior(0, 128)).unwrap()];
        let v = maximal_good_set(&t, &params, &seed).unwrap();
        assert!(v.contains(&seed[0]));
    }

    #[test]
    fn constants_formula_arithmetic() {
        let c = constants_from_parts(1, 2, 1);
        assert_eq!(c.sun_sigma, 1.0 / 36.0);
        assert!((c.separation_gamma - 1.0 / 2592.0).abs() < 1e-18);
        assert_eq!(c.branch_beta, 12.0);
        // delta = min(1/72, gamma/36)/2 = gamma/72 here.
        assert!((c.scale_delta - c.separation_gamma / 72.0).abs() < 1e-18);
    }

    #[test]
    fn derived_delta_always_below_limit() {
        for n in 1..6 {
            let c = derive_constants(n);
            assert!(c.scale_delta > 0.0);
            assert!(c.scale_delta < 1.0 / (3.0 * c.branch_beta));
        }
    }

    #[test]
    fn shadow_count_bound_examples() {
        let t = segment(128);
        let arc = full_arc(&t);
        let s0 = ShadowFunction::new(&t, arc.clone(), vec![]).unwrap();
        assert_eq!(s0.count_bound(&t), 1);
        // Two far-apart full shadows: a subarc spanning both has diameter
        // ~1 and both values equal 1, so the bound is 2.
        let s2 = ShadowFunction::new(
            &t,
            arc.clone(),
            vec![(PointRef::vertex(0), 1.0), (PointRef::vertex(1), 1.0)],
        )
        .unwrap();
        assert_eq!(s2.count_bound(&t), 2);
        // Two clustered small shadows: the spanning subarc is short, so
        // both count against it.
        let s3 = ShadowFunction::new(
            &t,
            arc.clone(),
            vec![
                (PointRef::interior(0, 60), 0.2),
                (PointRef::interior(0, 68), 0.2),
            ],
        )
        .unwrap();
        assert_eq!(s3.count_bound(&t), 2);
    }
}
