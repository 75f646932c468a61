//! The weighted chain distances rho_n, their limit with a one-sided
//! truncation certificate, additivity and diameter checks, and the
//! geodesic output skeleton.

use std::collections::HashMap;
use std::sync::Mutex;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::point::{PointRef, SampleId};
use crate::subdivision::{Hierarchy, Level, TileRef};
use crate::tree::MetricTree;
use crate::weights::{chain_length_w, WeightAssignment};
use crate::{ratio, Rational};

/// Value of rho at the deepest built level plus a certified one-sided
/// truncation bound: rho(x, y) <= value + upper_slack. The Cauchy residual
/// over the last few levels is diagnostic only; no certified lower bound
/// is available.
#[derive(Debug, Clone)]
pub struct RhoEstimate {
    pub value: Rational,
    pub level: usize,
    pub upper_slack: Rational,
    pub cauchy_residual: Rational,
}

/// Read-only bundle of the built pipeline with a memo cache for chain
/// lengths. All queries are pure; the cache is internally synchronized.
pub struct RhoSpace<'a> {
    pub tree: &'a MetricTree,
    pub hierarchy: &'a Hierarchy,
    pub weights: &'a WeightAssignment,
    cache: Mutex<HashMap<(SampleId, SampleId, usize), Rational>>,
}

impl<'a> RhoSpace<'a> {
    pub fn new(
        tree: &'a MetricTree,
        hierarchy: &'a Hierarchy,
        weights: &'a WeightAssignment,
    ) -> Self {
        RhoSpace {
            tree,
            hierarchy,
            weights,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn depth(&self) -> usize {
        self.hierarchy.depth
    }

    /// Level-n chain distance: the w-length of the simple n-chain for
    /// distinct points, and the smallest containing tile weight for
    /// coinciding ones.
    pub fn rho_n(&self, x: PointRef, y: PointRef, n: usize) -> Result<Rational> {
        let sx = self.tree.sample_of(x)?;
        let sy = self.tree.sample_of(y)?;
        self.rho_n_samples(sx, sy, n)
    }

    pub fn rho_n_samples(&self, sx: SampleId, sy: SampleId, n: usize) -> Result<Rational> {
        if n > self.hierarchy.depth {
            return Err(Error::LevelOutOfRange(n, self.hierarchy.depth));
        }
        let key = (sx.min(sy), sx.max(sy), n);
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let lvl = self.hierarchy.level(n)?;
        let value = if sx == sy {
            self.hierarchy
                .tiles_containing_sample(self.tree, sx, lvl)
                .iter()
                .map(|&t| self.weights.weight((n, t)).clone())
                .min()
                .expect("every point lies in a tile")
        } else {
            let chain = self.hierarchy.simple_chain_samples(self.tree, sx, sy, n)?;
            chain_length_w(&chain, self.weights)
        };
        self.cache.lock().unwrap().insert(key, value.clone());
        Ok(value)
    }

    /// Estimate of the limit distance. The slack is the sharper of
    /// 3^-depth and half the sum of the first and last tile weights of
    /// the deepest simple chain.
    pub fn rho(&self, x: PointRef, y: PointRef) -> Result<RhoEstimate> {
        let sx = self.tree.sample_of(x)?;
        let sy = self.tree.sample_of(y)?;
        self.rho_samples(sx, sy)
    }

    pub fn rho_samples(&self, sx: SampleId, sy: SampleId) -> Result<RhoEstimate> {
        let depth = self.hierarchy.depth;
        let coarse = ratio(1, 3).pow(depth as i32);
        if sx == sy {
            return Ok(RhoEstimate {
                value: Rational::zero(),
                level: depth,
                upper_slack: coarse,
                cauchy_residual: self.rho_n_samples(sx, sy, depth)?,
            });
        }
        let value = self.rho_n_samples(sx, sy, depth)?;
        let chain = self
            .hierarchy
            .simple_chain_samples(self.tree, sx, sy, depth)?;
        let first = self.weights.weight((depth, chain.tiles[0]));
        let last = self.weights.weight((depth, *chain.tiles.last().unwrap()));
        let tight = (first + last) * ratio(1, 2);
        let upper_slack = tight.min(coarse);
        let mut residual = Rational::zero();
        for n in depth.saturating_sub(3)..=depth {
            let diff = self.rho_n_samples(sx, sy, n)? - &value;
            let abs = if diff < Rational::zero() { -diff } else { diff };
            residual = residual.max(abs);
        }
        Ok(RhoEstimate {
            value,
            level: depth,
            upper_slack,
            cauchy_residual: residual,
        })
    }

    /// Largest built level at which tiles containing the two points still
    /// intersect. The second component is true when the value is capped
    /// by the built depth.
    pub fn m_level(&self, x: PointRef, y: PointRef) -> Result<(usize, bool)> {
        let sx = self.tree.sample_of(x)?;
        let sy = self.tree.sample_of(y)?;
        if sx == sy {
            return Err(Error::DegenerateQuery("m-level of a point".into()));
        }
        Ok(self.m_level_samples(sx, sy))
    }

    pub fn m_level_samples(&self, sx: SampleId, sy: SampleId) -> (usize, bool) {
        let depth = self.hierarchy.depth;
        for n in (0..=depth).rev() {
            let lvl = &self.hierarchy.levels[n];
            let tx = self.hierarchy.tiles_containing_sample(self.tree, sx, lvl);
            let ty = self.hierarchy.tiles_containing_sample(self.tree, sy, lvl);
            for &a in &tx {
                for &b in &ty {
                    if tiles_intersect(lvl, a, b) {
                        return (n, n == depth);
                    }
                }
            }
        }
        (0, false)
    }
}

/// Two same-level tiles intersect iff they coincide or share a boundary
/// vertex.
pub fn tiles_intersect(lvl: &Level, a: u32, b: u32) -> bool {
    if a == b {
        return true;
    }
    let (ta, tb) = (&lvl.tiles[a as usize], &lvl.tiles[b as usize]);
    ta.boundary
        .iter()
        .any(|v| tb.boundary.binary_search(v).is_ok())
}

// ----------------------------------------------------------------------
// Additivity check
// ----------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicReport {
    pub triples: usize,
    pub violations: usize,
    /// Max of residual/bound over the sample (1.0 means the certified
    /// bound was attained).
    pub worst_fraction: f64,
    pub worst_witness: Option<String>,
}

/// Sampled additivity of the limit distance along arcs: for z on (x, y)
/// the splitting residual rho_n(x,z) + rho_n(z,y) - rho_n(x,y) at the
/// deepest level must stay within w(splitting tile) + 3^-depth.
pub fn geodesic_check(rs: &RhoSpace, samples: usize, seed: u64) -> Result<GeodesicReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let tree = rs.tree;
    let depth = rs.depth();
    let coarse = ratio(1, 3).pow(depth as i32);
    let ns = tree.sample_count();
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut done = 0usize;
    while done < samples {
        let sx: SampleId = rng.gen_range(0..ns);
        let sy: SampleId = rng.gen_range(0..ns);
        if sx == sy {
            continue;
        }
        let arc = tree.arc_between_samples(sx, sy);
        if arc.samples().len() < 3 {
            continue;
        }
        let sz = arc.samples()[rng.gen_range(1..arc.samples().len() - 1)];
        done += 1;

        let r_xy = rs.rho_n_samples(sx, sy, depth)?;
        let r_xz = rs.rho_n_samples(sx, sz, depth)?;
        let r_zy = rs.rho_n_samples(sz, sy, depth)?;
        let residual = &r_xz + &r_zy - &r_xy;
        let residual = if residual < Rational::zero() {
            -residual
        } else {
            residual
        };
        let chain = rs.hierarchy.simple_chain_samples(tree, sx, sy, depth)?;
        let split = chain
            .tiles
            .iter()
            .copied()
            .find(|&t| rs.hierarchy.tile((depth, t)).contains_sample(sz))
            .expect("z lies on the chain");
        let bound = rs.weights.weight((depth, split)) + &coarse;
        let frac = rational_to_f64(&residual) / rational_to_f64(&bound).max(1e-300);
        if frac > worst {
            worst = frac;
            witness = Some(format!(
                "x={} y={} z={} residual={} bound={}",
                tree.point_of(sx),
                tree.point_of(sy),
                tree.point_of(sz),
                residual,
                bound
            ));
        }
        if residual > bound {
            violations += 1;
        }
    }
    Ok(GeodesicReport {
        triples: samples,
        violations,
        worst_fraction: worst,
        worst_witness: witness,
    })
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

// ----------------------------------------------------------------------
// Scale comparability
// ----------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ComparabilityReport {
    pub pairs: usize,
    /// Range of rho(x,y) / w(X^m) over the sample, X^m a tile of the
    /// pair's combinatorial scale containing x. Finite bounds are the
    /// empirical comparability constants; they are logged, not asserted.
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Range of dd(x,y) / delta^m over the same sample.
    pub min_dd_ratio: f64,
    pub max_dd_ratio: f64,
}

/// Empirical comparability of the constructed distance with the weight of
/// the tiles at the pair's combinatorial scale, and of the base distance
/// with delta^m.
pub fn rho_comparability(rs: &RhoSpace, samples: usize, seed: u64) -> Result<ComparabilityReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let tree = rs.tree;
    let ns = tree.sample_count();
    let mut done = 0usize;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let (mut dlo, mut dhi) = (f64::INFINITY, 0.0f64);
    while done < samples {
        let sx: SampleId = rng.gen_range(0..ns);
        let sy: SampleId = rng.gen_range(0..ns);
        if sx == sy {
            continue;
        }
        done += 1;
        let (m, _) = rs.m_level_samples(sx, sy);
        let lvl = &rs.hierarchy.levels[m];
        let tile = rs.hierarchy.tiles_containing_sample(tree, sx, lvl)[0];
        let w = rational_to_f64(rs.weights.weight((m, tile)));
        let rho = rational_to_f64(&rs.rho_samples(sx, sy)?.value);
        if w > 0.0 {
            lo = lo.min(rho / w);
            hi = hi.max(rho / w);
        }
        let scale = rs.hierarchy.delta.powi(m as i32);
        let dd = tree.dd_samples(sx, sy) / scale;
        dlo = dlo.min(dd);
        dhi = dhi.max(dd);
    }
    Ok(ComparabilityReport {
        pairs: samples,
        min_ratio: lo,
        max_ratio: hi,
        min_dd_ratio: dlo,
        max_dd_ratio: dhi,
    })
}

// ----------------------------------------------------------------------
// Tile rho-diameter
// ----------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct TileRhoDiam {
    pub level: usize,
    pub tile: u32,
    /// eps0^2 w(X).
    #[serde(serialize_with = "crate::export::ser_rational")]
    pub lower: Rational,
    /// 2 w(X).
    #[serde(serialize_with = "crate::export::ser_rational")]
    pub upper: Rational,
    /// Max sampled rho over boundary/main pairs and a point sample.
    #[serde(serialize_with = "crate::export::ser_rational")]
    pub sampled: Rational,
    pub ok: bool,
}

/// Sampled rho-diameter of a tile against the certified sandwich
/// [eps0^2 w(X), 2 w(X)] with slack 3^-depth.
pub fn tile_rho_diam(rs: &RhoSpace, r: TileRef) -> Result<TileRhoDiam> {
    let tile = rs.hierarchy.tile(r);
    let w = rs.weights.weight(r).clone();
    let eps0 = &rs.weights.eps0;
    let lower = eps0 * eps0 * &w;
    let upper = &w * ratio(2, 1);
    let depth = rs.depth();
    let slack = ratio(1, 3).pow(depth as i32);

    let mut pairs: Vec<(SampleId, SampleId)> = Vec::new();
    let b = &tile.boundary;
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            pairs.push((b[i], b[j]));
        }
    }
    if let Some((p, q)) = rs.weights.main_vertices(r) {
        pairs.push((p, q));
    }
    // Pair each boundary vertex with the main partner inside its child
    // tile (this reaches eps0 w for leaf tiles), when children exist.
    if r.0 < depth {
        for &u in b {
            if let Ok(u2) = rs.hierarchy.exit_vertex(rs.tree, r, u) {
                pairs.push((u, u2));
            }
        }
    }
    // A small deterministic point sample across the tile.
    let stride = (tile.samples.len() / 6).max(1);
    let probes: Vec<SampleId> = tile.samples.iter().copied().step_by(stride).collect();
    for (i, &a) in probes.iter().enumerate() {
        for &c in &probes[i + 1..] {
            pairs.push((a, c));
        }
        for &v in b {
            pairs.push((a, v));
        }
    }

    let mut sampled = Rational::zero();
    for (a, c) in pairs {
        if a == c {
            continue;
        }
        let v = rs.rho_n_samples(a, c, depth)?;
        sampled = sampled.max(v);
    }
    let ok = sampled >= &lower - &slack && sampled <= &upper + &slack;
    Ok(TileRhoDiam {
        level: r.0,
        tile: r.1,
        lower,
        upper,
        sampled,
        ok,
    })
}

// ----------------------------------------------------------------------
// Geodesic skeleton
// ----------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SkeletonEdge {
    pub a: PointRef,
    pub b: PointRef,
    /// rho estimate between the endpoints.
    #[serde(serialize_with = "crate::export::ser_rational")]
    pub length: Rational,
    /// True when the edge joins the main-vertex pair of one deepest tile,
    /// making the length exactly that tile's weight.
    pub exact: bool,
    #[serde(serialize_with = "crate::export::ser_rational")]
    pub slack: Rational,
}

/// Combinatorial tree on the deepest vertex set plus the junction points
/// needed to keep it a tree; edge lengths are rho estimates.
#[derive(Debug, Clone, Serialize)]
pub struct GeodesicSkeleton {
    pub vertices: Vec<PointRef>,
    pub edges: Vec<SkeletonEdge>,
}

pub fn build_geodesic_skeleton(rs: &RhoSpace) -> Result<GeodesicSkeleton> {
    let tree = rs.tree;
    let depth = rs.depth();
    let deepest = &rs.hierarchy.levels[depth];
    let marked: Vec<SampleId> = deepest.vertices.clone();
    let ns = tree.sample_count() as usize;
    assert!(!marked.is_empty(), "deepest level has no vertices");

    // Minimal subtree spanning the marked samples: a sample's parent edge
    // belongs to the hull iff marked points lie both inside and outside
    // its subtree.
    let root = marked[0];
    let mut order: Vec<SampleId> = Vec::with_capacity(ns);
    let mut parent: Vec<SampleId> = vec![u32::MAX; ns];
    let mut stack = vec![root];
    let mut seen = vec![false; ns];
    seen[root as usize] = true;
    parent[root as usize] = root;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(w, _, _) in tree.neighbors_of(v) {
            if !seen[w as usize] {
                seen[w as usize] = true;
                parent[w as usize] = v;
                stack.push(w);
            }
        }
    }
    let total = marked.len();
    let mut cnt = vec![0usize; ns];
    for &m in &marked {
        cnt[m as usize] += 1;
    }
    for &v in order.iter().rev() {
        if v != root {
            cnt[parent[v as usize] as usize] += cnt[v as usize];
        }
    }
    let mut hull_adj: Vec<Vec<SampleId>> = vec![Vec::new(); ns];
    for &v in &order {
        if v == root {
            continue;
        }
        if cnt[v as usize] >= 1 && total - cnt[v as usize] >= 1 {
            hull_adj[v as usize].push(parent[v as usize]);
            hull_adj[parent[v as usize] as usize].push(v);
        }
    }

    let mut is_marked = vec![false; ns];
    for &m in &marked {
        is_marked[m as usize] = true;
    }
    let is_skeleton_vertex = |s: SampleId| is_marked[s as usize] || hull_adj[s as usize].len() >= 3;

    let mut vertices: Vec<SampleId> = (0..ns as u32)
        .filter(|&s| is_marked[s as usize] || hull_adj[s as usize].len() >= 3)
        .collect();
    vertices.sort_unstable();

    // Contract hull paths between consecutive skeleton vertices.
    let coarse = ratio(1, 3).pow(depth as i32);
    let mut edges: Vec<SkeletonEdge> = Vec::new();
    for &v in &vertices {
        for &start in &hull_adj[v as usize] {
            // Walk away from v until the next skeleton vertex.
            let mut prev = v;
            let mut cur = start;
            while !is_skeleton_vertex(cur) {
                let next = *hull_adj[cur as usize]
                    .iter()
                    .find(|&&w| w != prev)
                    .expect("hull path continues");
                prev = cur;
                cur = next;
            }
            if v >= cur {
                continue; // emit each edge once, from the smaller endpoint
            }
            let est = rs.rho_samples(v, cur)?;
            // Exact when the pair is the main pair of the single deepest
            // tile the open segment runs through.
            let chain = rs.hierarchy.simple_chain_samples(tree, v, cur, depth)?;
            let exact = chain.len() == 1
                && rs
                    .weights
                    .main_vertices((depth, chain.tiles[0]))
                    .map(|(p, q)| (p == v && q == cur) || (p == cur && q == v))
                    .unwrap_or(false);
            let slack = if exact {
                Rational::zero()
            } else {
                est.upper_slack.clone().min(coarse.clone())
            };
            edges.push(SkeletonEdge {
                a: tree.point_of(v),
                b: tree.point_of(cur),
                length: est.value,
                exact,
                slack,
            });
        }
    }
    edges.sort_by_key(|x| (x.a, x.b));
    assert_eq!(edges.len() + 1, vertices.len(), "skeleton must be a tree");
    Ok(GeodesicSkeleton {
        vertices: vertices.into_iter().map(|s| tree.point_of(s)).collect(),
        edges,
    })
}

impl GeodesicSkeleton {
    /// DOT rendering for graph tooling.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph skeleton {\n");
        for v in &self.vertices {
            out.push_str(&format!("  \"{v}\";\n"));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "  \"{}\" -- \"{}\" [label=\"{}\"{}];\n",
                e.a,
                e.b,
                e.length,
                if e.exact { ", style=bold" } else { "" }
            ));
        }
        out.push_str("}\n");
        out
    }
}
