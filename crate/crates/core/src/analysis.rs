//! Empirical verification of the analytic properties of the constructed
//! metric: weak-quasisymmetry sampling, doubling of the new metric, and
//! the Hausdorff-dimension upper-bound machinery driven by the parameter
//! eps0.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::point::SampleId;
use crate::rho::{rational_to_f64, RhoSpace};
use crate::tree::packing_to_doubling;
use crate::{ratio, Rational};

// ----------------------------------------------------------------------
// Weak quasisymmetry
// ----------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct QsReport {
    /// Max over admissible triples of rho(x,y)/rho(x,z).
    pub h_empirical: f64,
    pub triples: usize,
    pub admitted: usize,
    pub worst_witness: Option<String>,
    /// (quantile, ratio) pairs over the admitted triples.
    pub quantiles: Vec<(f64, f64)>,
}

/// Sample triples stratified across combinatorial scales and record the
/// distortion ratios rho(x,y)/rho(x,z) over triples with dd(x,y) <=
/// dd(x,z). Includes y = z triples, so the max is always >= 1. The
/// result is an estimate, not a certificate.
pub fn verify_weak_qs(rs: &RhoSpace, samples: usize, seed: u64) -> Result<QsReport> {
    let tree = rs.tree;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = tree.sample_count();
    let depth = rs.depth();
    let mut ratios: Vec<(f64, String)> = Vec::new();
    let mut tried = 0usize;
    while tried < samples {
        tried += 1;
        let sx: SampleId = rng.gen_range(0..ns);
        // Stratify: pick a target scale and draw the other two points
        // from the dd-ball of comparable radius around x.
        let n = rng.gen_range(0..=depth as u32) as i32;
        let radius = (6.0 * rs.hierarchy.beta) * rs.hierarchy.delta.powi(n);
        let ball = tree.dd_ball(sx, radius.min(2.0));
        if ball.len() < 2 {
            continue;
        }
        let pick = |rng: &mut ChaCha8Rng| ball[rng.gen_range(0..ball.len())];
        let sy = pick(&mut rng);
        let sz = if tried.is_multiple_of(8) { sy } else { pick(&mut rng) };
        if sy == sx || sz == sx {
            continue;
        }
        if tree.dd_samples(sx, sy) > tree.dd_samples(sx, sz) {
            continue;
        }
        let top = rational_to_f64(&rs.rho_samples(sx, sy)?.value);
        let bot = rational_to_f64(&rs.rho_samples(sx, sz)?.value);
        if bot <= 0.0 {
            continue;
        }
        let ratio = top / bot;
        ratios.push((
            ratio,
            format!(
                "x={} y={} z={}",
                tree.point_of(sx),
                tree.point_of(sy),
                tree.point_of(sz)
            ),
        ));
    }
    ratios.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let admitted = ratios.len();
    let (h_empirical, worst_witness) = match ratios.last() {
        Some((r, w)) => (*r, Some(w.clone())),
        None => (1.0, None),
    };
    let q = |p: f64| -> f64 {
        if ratios.is_empty() {
            return 1.0;
        }
        let i = ((ratios.len() as f64 - 1.0) * p).round() as usize;
        ratios[i].0
    };
    Ok(QsReport {
        h_empirical,
        triples: samples,
        admitted,
        worst_witness,
        quantiles: vec![(0.5, q(0.5)), (0.9, q(0.9)), (0.99, q(0.99)), (1.0, q(1.0))],
    })
}

// ----------------------------------------------------------------------
// Doubling of the new metric
// ----------------------------------------------------------------------

/// Distances from one sample to every sample at a fixed level, via one
/// sweep: walking outward accumulates a tile weight each time a level
/// vertex is crossed.
pub fn rho_field(rs: &RhoSpace, from: SampleId, n: usize) -> Result<Vec<Rational>> {
    let tree = rs.tree;
    let lvl = rs.hierarchy.level(n)?;
    let ns = tree.sample_count() as usize;
    let mut out = vec![Rational::zero(); ns];
    let start_tiles = rs.hierarchy.tiles_containing_sample(tree, from, lvl);
    // Distance to itself: smallest containing tile weight.
    out[from as usize] = start_tiles
        .iter()
        .map(|&t| rs.weights.weight((n, t)).clone())
        .min()
        .unwrap();
    let mut stack: Vec<(SampleId, SampleId, u32, Rational)> = Vec::new();
    for &(w, iv, _) in tree.neighbors_of(from) {
        let tile = lvl.interval_tile[iv as usize];
        let acc = rs.weights.weight((n, tile)).clone();
        stack.push((w, from, tile, acc));
    }
    while let Some((v, prev, tile, acc)) = stack.pop() {
        out[v as usize] = acc.clone();
        for &(w, iv, _) in tree.neighbors_of(v) {
            if w == prev {
                continue;
            }
            let next_tile = lvl.interval_tile[iv as usize];
            let next_acc = if next_tile == tile {
                acc.clone()
            } else {
                &acc + rs.weights.weight((n, next_tile))
            };
            stack.push((w, v, next_tile, next_acc));
        }
    }
    Ok(out)
}

/// Empirical doubling constant of the tree under the constructed metric:
/// greedy packing at the given scales using deepest-level chain
/// distances, converted like the base-metric estimator.
pub fn verify_rho_doubling(rs: &RhoSpace, scales: &[f64], lambda: f64) -> Result<usize> {
    assert!(lambda > 0.0 && lambda < 1.0);
    let tree = rs.tree;
    let depth = rs.depth();
    let ns = tree.sample_count();
    let mut centers: Vec<SampleId> = (0..tree.node_count() as u32).collect();
    let stride = (ns as usize / 16).max(1);
    centers.extend((tree.node_count() as u32..ns).step_by(stride));
    centers.truncate(24);

    let mut worst = 1usize;
    for &c in &centers {
        let field = rho_field(rs, c, depth)?;
        for &s in scales {
            let sep = lambda * s;
            let mut picked: Vec<(SampleId, Vec<Rational>)> = Vec::new();
            for y in 0..ns {
                if rational_to_f64(&field[y as usize]) > s || y == c {
                    continue;
                }
                let far = picked
                    .iter()
                    .all(|(_, pf)| rational_to_f64(&pf[y as usize]) >= sep);
                if far {
                    let pf = rho_field(rs, y, depth)?;
                    picked.push((y, pf));
                }
            }
            worst = worst.max(picked.len().max(1));
        }
    }
    Ok(packing_to_doubling(lambda, worst))
}

// ----------------------------------------------------------------------
// Hausdorff dimension machinery
// ----------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct DimensionReport {
    pub alpha: f64,
    pub k: usize,
    pub eps0: String,
    /// L = (1/3)^(alpha-1) + K eps0^alpha; summability certified iff < 1.
    pub l_value: f64,
    pub certified: bool,
    /// Per-level weight-power sums S_n(alpha).
    pub level_sums: Vec<f64>,
    /// S_n / S_(n-1); certified decay requires each <= L.
    pub level_ratios: Vec<f64>,
    /// Tiles violating the per-tile child-sum inequality.
    pub per_tile_violations: usize,
    pub witness: Option<String>,
    /// Smallest alpha on the report grid with L(alpha) < 1.
    pub dimension_upper_bound: f64,
    /// True when every per-tile check ran on the exact rational path
    /// (integer alpha); otherwise the float path with 1e-12 slack was
    /// used.
    pub exact_path: bool,
}

/// Float-path slack for the per-tile inequality; sums stay O(1) after
/// dividing by the parent weight, so this is far above roundoff.
const FLOAT_SLACK: f64 = 1e-12;

pub fn hausdorff_bound(rs: &RhoSpace, k: usize, alpha: f64) -> Result<DimensionReport> {
    if alpha.is_nan() || alpha <= 1.0 {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let h = rs.hierarchy;
    let wa = rs.weights;
    let eps0_f = rational_to_f64(&wa.eps0);
    let l_value = (1.0f64 / 3.0).powf(alpha - 1.0) + k as f64 * eps0_f.powf(alpha);
    let exact_path = alpha.fract() == 0.0 && alpha <= 16.0;

    let mut violations = 0usize;
    let mut witness = None;
    if exact_path {
        // L = (1/3)^(a-1) + K eps0^a is rational for integer alpha.
        let a = alpha as i32;
        let l_rat = ratio(1, 3).pow(a - 1) + Rational::from_integer(k.into()) * wa.eps0.pow(a);
        for n in 0..h.depth {
            for tile in &h.levels[n].tiles {
                let w = wa.weight((n, tile.index));
                let sum: Rational = tile
                    .children
                    .iter()
                    .map(|&c| wa.weight((n + 1, c)).pow(a))
                    .sum();
                if sum > &l_rat * w.pow(a) {
                    violations += 1;
                    witness.get_or_insert(format!(
                        "tile {}:{} child power sum {} exceeds L w^a",
                        n,
                        tile.index,
                        rational_to_f64(&sum)
                    ));
                }
            }
        }
    } else {
        for n in 0..h.depth {
            for tile in &h.levels[n].tiles {
                let w = wa.weight((n, tile.index));
                // Relative form keeps the comparison well-conditioned.
                let sum: f64 = tile
                    .children
                    .iter()
                    .map(|&c| {
                        let lam = wa.weight((n + 1, c)) / w;
                        rational_to_f64(&lam).powf(alpha)
                    })
                    .sum();
                if sum > l_value + FLOAT_SLACK {
                    violations += 1;
                    witness.get_or_insert(format!(
                        "tile {}:{} relative child power sum {sum} exceeds L = {l_value}",
                        n, tile.index
                    ));
                }
            }
        }
    }

    let level_sums: Vec<f64> = h
        .levels
        .iter()
        .map(|lvl| {
            lvl.tiles
                .iter()
                .map(|t| rational_to_f64(wa.weight((lvl.n, t.index))).powf(alpha))
                .sum()
        })
        .collect();
    let level_ratios: Vec<f64> = level_sums
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::NAN })
        .collect();

    Ok(DimensionReport {
        alpha,
        k,
        eps0: crate::export::rational_string(&wa.eps0),
        l_value,
        certified: l_value < 1.0 && violations == 0,
        level_sums,
        level_ratios,
        per_tile_violations: violations,
        witness,
        dimension_upper_bound: dimension_upper_bound(k, eps0_f),
        exact_path,
    })
}

/// Smallest alpha on a fixed grid with L(alpha) < 1. L is strictly
/// decreasing in alpha, so the grid scan is a bracketing of the true
/// crossing.
pub fn dimension_upper_bound(k: usize, eps0: f64) -> f64 {
    let l = |a: f64| (1.0f64 / 3.0).powf(a - 1.0) + k as f64 * eps0.powf(a);
    let mut a = 1.01;
    while a <= 16.0 {
        if l(a) < 1.0 {
            return (a * 100.0).round() / 100.0;
        }
        a += 0.01;
    }
    f64::INFINITY
}
