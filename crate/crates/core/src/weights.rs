//! Recursive tile weights and main-vertex bookkeeping.
//!
//! The root tile has weight 1. Inside an arc-tile with main vertices p, q
//! the child chain joining p and q carries the parent's full weight: the
//! two endpoint tiles get a third each and the interior tiles share the
//! remaining third evenly; every other child gets the uniformly small
//! relative weight eps0. Children of leaf tiles and of the root all get
//! eps0. All arithmetic is exact rational, so the chain identities hold
//! with zero error.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::point::SampleId;
use crate::subdivision::{Chain, Hierarchy, TileKind, TileRef};
use crate::tree::MetricTree;
use crate::{ratio, Rational};

#[derive(Debug, Clone)]
pub struct WeightAssignment {
    pub eps0: Rational,
    /// `weights[level][tile index]`.
    pub weights: Vec<Vec<Rational>>,
    /// Main-vertex pair per tile; `None` for leaf tiles and the root.
    pub mains: Vec<Vec<Option<(SampleId, SampleId)>>>,
}

impl WeightAssignment {
    pub fn weight(&self, r: TileRef) -> &Rational {
        &self.weights[r.0][r.1 as usize]
    }

    pub fn main_vertices(&self, r: TileRef) -> Option<(SampleId, SampleId)> {
        self.mains[r.0][r.1 as usize]
    }

    /// Relative weight of a tile within its parent.
    pub fn relative_weight(&self, h: &Hierarchy, r: TileRef) -> Rational {
        let tile = h.tile(r);
        match tile.parent {
            None => Rational::one(),
            Some(p) => self.weight(r) / self.weight((r.0 - 1, p)),
        }
    }
}

/// Exact w-length of a chain: the sum of its tile weights.
pub fn chain_length_w(chain: &Chain, wa: &WeightAssignment) -> Rational {
    chain
        .tiles
        .iter()
        .map(|&t| wa.weight((chain.level, t)).clone())
        .sum()
}

/// Assign weights and main vertices level by level.
///
/// `k` is the neighbor/child bound from the subdivision statistics;
/// `eps0` must be a rational in (0, 1/(3K)].
pub fn assign_weights(
    tree: &MetricTree,
    h: &Hierarchy,
    eps0: Rational,
    k: usize,
) -> Result<WeightAssignment> {
    let limit = ratio(1, 3 * k as i64);
    if eps0 <= Rational::zero() || eps0 > limit {
        return Err(Error::Epsilon0OutOfRange {
            eps0: eps0.to_string(),
            k,
        });
    }
    let mut wa = WeightAssignment {
        eps0: eps0.clone(),
        weights: h
            .levels
            .iter()
            .map(|l| vec![Rational::zero(); l.tiles.len()])
            .collect(),
        mains: h.levels.iter().map(|l| vec![None; l.tiles.len()]).collect(),
    };
    wa.weights[0][0] = Rational::one();

    for n in 0..h.depth {
        let lvl = &h.levels[n];
        let child_lvl = &h.levels[n + 1];
        for tile in &lvl.tiles {
            let w = wa.weights[n][tile.index as usize].clone();
            debug_assert!(w > Rational::zero(), "parent weight must be set");
            // Child tile holding a given boundary vertex of this tile.
            let boundary_child = |u: SampleId| -> u32 {
                *h.tiles_containing_sample(tree, u, child_lvl)
                    .iter()
                    .find(|&&c| child_lvl.tiles[c as usize].parent == Some(tile.index))
                    .expect("boundary vertex has a child tile inside its tile")
            };

            match tile.kind {
                TileKind::Root | TileKind::Leaf => {
                    for &c in &tile.children {
                        wa.weights[n + 1][c as usize] = &eps0 * &w;
                    }
                    // The child holding the leaf-tile's boundary vertex
                    // pairs it with its exit vertex; other arc-tile
                    // children take their two smallest boundary vertices.
                    let special = tile.boundary.first().map(|&u| (boundary_child(u), u));
                    for &c in &tile.children {
                        let ct = &child_lvl.tiles[c as usize];
                        if !ct.is_arc_tile() {
                            continue;
                        }
                        wa.mains[n + 1][c as usize] = match special {
                            Some((cu, u)) if cu == c => {
                                let u2 = h.exit_vertex(tree, (n, tile.index), u)?;
                                Some((u, u2))
                            }
                            _ => Some((ct.boundary[0], ct.boundary[1])),
                        };
                    }
                }
                TileKind::Arc => {
                    let (p, q) =
                        wa.mains[n][tile.index as usize].expect("arc tile carries main vertices");
                    let chain = h.simple_chain_samples(tree, p, q, n + 1)?;
                    let r = chain.len();
                    if r < 3 {
                        return Err(Error::MainChainTooShort {
                            tile: tile.index as usize,
                            len: r,
                        });
                    }
                    debug_assert!(chain
                        .tiles
                        .iter()
                        .all(|&c| child_lvl.tiles[c as usize].parent == Some(tile.index)));
                    let third = &w * ratio(1, 3);
                    let inner = &w * ratio(1, 3 * (r as i64 - 2));
                    let gates = h.gateway_vertices(&chain);
                    for (i, &c) in chain.tiles.iter().enumerate() {
                        wa.weights[n + 1][c as usize] = if i == 0 || i == r - 1 {
                            third.clone()
                        } else {
                            inner.clone()
                        };
                        wa.mains[n + 1][c as usize] = Some((gates[i], gates[i + 1]));
                    }
                    for &c in &tile.children {
                        if chain.tiles.contains(&c) {
                            continue;
                        }
                        wa.weights[n + 1][c as usize] = &eps0 * &w;
                        let ct = &child_lvl.tiles[c as usize];
                        if !ct.is_arc_tile() {
                            continue;
                        }
                        // Off-chain children holding another boundary
                        // vertex pair it with the exit vertex; the rest
                        // take their two smallest boundary vertices.
                        let held = tile
                            .boundary
                            .iter()
                            .copied()
                            .find(|&u| u != p && u != q && boundary_child(u) == c);
                        wa.mains[n + 1][c as usize] = match held {
                            Some(u) => {
                                let u2 = h.exit_vertex(tree, (n, tile.index), u)?;
                                Some((u, u2))
                            }
                            None => Some((ct.boundary[0], ct.boundary[1])),
                        };
                    }
                }
            }
        }
    }
    Ok(wa)
}

// ----------------------------------------------------------------------
// Verification
// ----------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct WeightCheck {
    pub name: String,
    pub pass: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightReport {
    pub checks: Vec<WeightCheck>,
}

impl WeightReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Exact verification of the weight structure: the child sandwich, the
/// main-chain identity, boundary-chain bounds with equality exactly for
/// the main pair, level decay, the relative-weight value set, neighbor
/// comparability, and the descendant main-vertex decay.
pub fn verify_weight_bounds(
    tree: &MetricTree,
    h: &Hierarchy,
    wa: &WeightAssignment,
) -> WeightReport {
    let mut checks = Vec::new();
    let eps0 = &wa.eps0;
    let push = |name: &str, witness: Option<String>, checks: &mut Vec<WeightCheck>| {
        checks.push(WeightCheck {
            name: name.into(),
            pass: witness.is_none(),
            witness,
        });
    };

    // Child sandwich: eps0 w(X) <= w(X') <= w(X)/3, exact.
    let mut witness = None;
    for n in 1..=h.depth {
        for tile in &h.levels[n].tiles {
            let w = wa.weight((n, tile.index));
            let pw = wa.weight((n - 1, tile.parent.unwrap()));
            if w < &(eps0 * pw) || w > &(pw * ratio(1, 3)) {
                witness.get_or_insert(format!(
                    "tile {}:{} weight {} outside [eps0, 1/3] of parent {}",
                    n, tile.index, w, pw
                ));
            }
        }
    }
    push("child-weight-sandwich", witness, &mut checks);

    // Main-chain identity: the child chain between main vertices sums to
    // the parent weight exactly.
    let mut witness = None;
    for n in 0..h.depth {
        for tile in &h.levels[n].tiles {
            if let Some((p, q)) = wa.main_vertices((n, tile.index)) {
                let chain = h.simple_chain_samples(tree, p, q, n + 1).unwrap();
                let len = chain_length_w(&chain, wa);
                if &len != wa.weight((n, tile.index)) {
                    witness.get_or_insert(format!(
                        "main chain of {}:{} sums to {} != {}",
                        n,
                        tile.index,
                        len,
                        wa.weight((n, tile.index))
                    ));
                }
            }
        }
    }
    push("main-chain-weight-identity", witness, &mut checks);

    // Boundary-pair chains: length <= w(X) with equality iff main pair,
    // plus the generic bounds eps0 w <= len <= 4/3 w.
    let mut witness = None;
    for n in 0..h.depth {
        for tile in &h.levels[n].tiles {
            let w = wa.weight((n, tile.index));
            let mains = wa.main_vertices((n, tile.index));
            let b = &tile.boundary;
            for i in 0..b.len() {
                for j in i + 1..b.len() {
                    let chain = h.simple_chain_samples(tree, b[i], b[j], n + 1).unwrap();
                    let len = chain_length_w(&chain, wa);
                    let is_main = mains
                        .map(|(p, q)| (p == b[i] && q == b[j]) || (p == b[j] && q == b[i]))
                        .unwrap_or(false);
                    if len > *w {
                        witness.get_or_insert(format!(
                            "boundary chain {}-{} in {}:{} has length {} > {}",
                            b[i], b[j], n, tile.index, len, w
                        ));
                    }
                    if is_main && len != *w {
                        witness.get_or_insert(format!(
                            "main pair chain length {} != {} in {}:{}",
                            len, w, n, tile.index
                        ));
                    }
                    if !is_main && len == *w {
                        witness.get_or_insert(format!(
                            "non-main pair {}-{} reaches the full weight in {}:{}",
                            b[i], b[j], n, tile.index
                        ));
                    }
                    if len < eps0 * w || len > w * ratio(4, 3) {
                        witness.get_or_insert(format!(
                            "chain length {} outside [eps0 w, 4/3 w] in {}:{}",
                            len, n, tile.index
                        ));
                    }
                }
            }
        }
    }
    push("boundary-chain-bounds", witness, &mut checks);

    // Level decay: w(X) <= 3^-n, exact.
    let mut witness = None;
    for n in 0..=h.depth {
        let bound = ratio(1, 3).pow(n as i32);
        for tile in &h.levels[n].tiles {
            if wa.weight((n, tile.index)) > &bound {
                witness.get_or_insert(format!(
                    "tile {}:{} weight {} exceeds 3^-{}",
                    n,
                    tile.index,
                    wa.weight((n, tile.index)),
                    n
                ));
            }
        }
    }
    push("level-weight-decay", witness, &mut checks);

    // Relative weights take only the recursion's values.
    let mut witness = None;
    for n in 1..=h.depth {
        for tile in &h.levels[n].tiles {
            let lam = wa.relative_weight(h, (n, tile.index));
            let mut ok = lam == *eps0 || lam == ratio(1, 3);
            let mut r = 4i64;
            let cap = 3 + h.levels[n].tiles.len() as i64;
            while !ok && r <= cap {
                ok = lam == ratio(1, 3 * (r - 2));
                r += 1;
            }
            if !ok {
                witness.get_or_insert(format!(
                    "tile {}:{} relative weight {} outside the value set",
                    n, tile.index, lam
                ));
            }
        }
    }
    push("relative-weight-value-set", witness, &mut checks);

    // Neighbor comparability: same-level touching tiles within
    // [(3 eps0)^2, (3 eps0)^-2]; one level apart, the child sandwich
    // widens the range by [3, 1/eps0].
    let mut witness = None;
    let c_same_lo = (eps0 * ratio(3, 1)).pow(2);
    let c_same_hi = Rational::one() / &c_same_lo;
    for n in 1..=h.depth {
        let lvl = &h.levels[n];
        for (vi, pair) in lvl.vertex_tiles.iter().enumerate() {
            let [a, b] = *pair;
            let r_ab = wa.weight((n, a)) / wa.weight((n, b));
            if r_ab < c_same_lo || r_ab > c_same_hi {
                witness.get_or_insert(format!(
                    "tiles {}:{} and {}:{} at vertex {} have weight ratio {}",
                    n, a, n, b, lvl.vertices[vi], r_ab
                ));
            }
        }
    }
    let c_diff_lo = &c_same_lo * ratio(3, 1);
    let c_diff_hi = &c_same_hi / eps0;
    for n in 1..h.depth {
        let lvl = &h.levels[n];
        let child_lvl = &h.levels[n + 1];
        for (vi, pair) in lvl.vertex_tiles.iter().enumerate() {
            let v = lvl.vertices[vi];
            let cpos = child_lvl.vertex_pos(v).unwrap();
            for &x in pair {
                for &y in &child_lvl.vertex_tiles[cpos] {
                    let r = wa.weight((n, x)) / wa.weight((n + 1, y));
                    if r < c_diff_lo || r > c_diff_hi {
                        witness.get_or_insert(format!(
                            "cross-level tiles {}:{} and {}:{} ratio {}",
                            n,
                            x,
                            n + 1,
                            y,
                            r
                        ));
                    }
                }
            }
        }
    }
    push("neighbor-weight-comparability", witness, &mut checks);

    // Boundary vertices stay main vertices of their descendant tiles, and
    // the descendant weight drops by exactly 1/3 per level.
    let mut witness = None;
    for n in 0..h.depth {
        for tile in &h.levels[n].tiles {
            for &v in &tile.boundary {
                let mut cur: Option<u32> = None;
                for k in n + 1..=h.depth {
                    let lvl = &h.levels[k];
                    let next = *h
                        .tiles_containing_sample(tree, v, lvl)
                        .iter()
                        .find(|&&c| match cur {
                            None => lvl.tiles[c as usize].parent == Some(tile.index),
                            Some(prev) => lvl.tiles[c as usize].parent == Some(prev),
                        })
                        .unwrap();
                    if let Some(prev) = cur {
                        let expect = wa.weight((k - 1, prev)) * ratio(1, 3);
                        if wa.weight((k, next)) != &expect {
                            witness.get_or_insert(format!(
                                "descendant of {} at level {} has weight {} != {}",
                                tree.point_of(v),
                                k,
                                wa.weight((k, next)),
                                expect
                            ));
                        }
                    }
                    let m = wa.main_vertices((k, next));
                    if m.is_none_or(|(p, q)| p != v && q != v) {
                        witness.get_or_insert(format!(
                            "{} is not a main vertex of its level-{} tile",
                            tree.point_of(v),
                            k
                        ));
                    }
                    cur = Some(next);
                }
            }
        }
    }
    push("descendant-main-vertex-decay", witness, &mut checks);

    WeightReport { checks }
}
