//! The nested decomposition: vertex sets V^1 c V^2 c ... of separated good
//! double points at geometrically shrinking scales, tiles as closures of
//! complementary components, tile topology (boundaries, parents, children),
//! simple chains and chain refinement, and the scale-ratio validation
//! report.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::good_points::{
    component_samples, goodness_of_sample, maximal_good_set, subtree_diam, GoodPointParams,
};
use crate::point::{PointRef, SampleId};
use crate::tree::MetricTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TileKind {
    /// The whole tree; only the unique level-0 tile.
    Root,
    /// Exactly one boundary vertex.
    Leaf,
    /// Two or more boundary vertices.
    Arc,
}

/// Reference to a tile: (level, index within level).
pub type TileRef = (usize, u32);

#[derive(Debug, Clone)]
pub struct Tile {
    pub level: usize,
    pub index: u32,
    /// All samples of the closure, sorted.
    pub samples: Vec<SampleId>,
    /// Boundary vertices (subset of the level's vertex set), sorted.
    pub boundary: Vec<SampleId>,
    pub kind: TileKind,
    /// Index within level-1 (None only for the root tile).
    pub parent: Option<u32>,
    /// Indices within level+1.
    pub children: Vec<u32>,
    /// Maximal grid-interval runs per edge: (edge, first interval offset,
    /// last interval offset) in edge-local coordinates.
    pub segments: Vec<(usize, u32, u32)>,
    /// Cached dd-diameter.
    pub diam: f64,
}

impl Tile {
    pub fn contains_sample(&self, s: SampleId) -> bool {
        self.samples.binary_search(&s).is_ok()
    }

    pub fn is_arc_tile(&self) -> bool {
        self.kind == TileKind::Arc
    }
}

#[derive(Debug)]
pub struct Level {
    pub n: usize,
    /// Vertex samples, sorted. Empty at level 0.
    pub vertices: Vec<SampleId>,
    /// Per-sample membership in `vertices`.
    pub vertex_set: Vec<bool>,
    /// Per-interval tile index.
    pub interval_tile: Vec<u32>,
    pub tiles: Vec<Tile>,
    /// For each entry of `vertices`, the two tiles meeting there.
    pub vertex_tiles: Vec<[u32; 2]>,
}

impl Level {
    pub fn vertex_pos(&self, v: SampleId) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }
}

/// A sequence of same-level tiles in which consecutive tiles intersect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub level: usize,
    pub tiles: Vec<u32>,
    pub joins: (SampleId, SampleId),
    /// Set when the chain was produced for coinciding endpoints.
    pub degenerate: bool,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }
}

/// The full nested decomposition of a tree.
#[derive(Debug)]
pub struct Hierarchy {
    pub delta: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Deepest built level.
    pub depth: usize,
    /// `levels[n]` for n = 0..=depth; level 0 is the root level.
    pub levels: Vec<Level>,
}

impl Hierarchy {
    /// Build nested separated sets of good double points at scales delta^n
    /// and cut the tree into tiles at every level. Level n+1 is seeded with
    /// the vertices of level n, which forces the nesting V^n c V^(n+1).
    pub fn build(
        tree: &MetricTree,
        delta: f64,
        depth: usize,
        beta: f64,
        gamma: f64,
    ) -> Result<Hierarchy> {
        let max = 1.0 / (3.0 * beta);
        if !(delta > 0.0 && delta < max) {
            return Err(Error::DeltaOutOfRange { delta, max, beta });
        }
        assert!(depth >= 1, "hierarchy depth must be at least 1");

        let ns = tree.sample_count() as usize;
        let mut levels = Vec::with_capacity(depth + 1);
        levels.push(root_level(tree, ns));

        let mut verts: Vec<SampleId> = Vec::new();
        for n in 1..=depth {
            let scale = delta.powi(n as i32);
            let params = GoodPointParams::new(beta, gamma, scale);
            verts = maximal_good_set(tree, &params, &verts)?;
            verts.sort_unstable();
            levels.push(cut_level(tree, n, &verts, ns));
        }

        let mut h = Hierarchy {
            delta,
            beta,
            gamma,
            depth,
            levels,
        };
        h.link_parents(tree);
        Ok(h)
    }

    fn link_parents(&mut self, _tree: &MetricTree) {
        for n in 1..=self.depth {
            let parents: Vec<u32> = {
                let prev = &self.levels[n - 1];
                let cur = &self.levels[n];
                let mut parent_of = vec![u32::MAX; cur.tiles.len()];
                for iv in 0..cur.interval_tile.len() {
                    let t = cur.interval_tile[iv] as usize;
                    let p = prev.interval_tile[iv];
                    if parent_of[t] == u32::MAX {
                        parent_of[t] = p;
                    } else {
                        debug_assert_eq!(parent_of[t], p, "tile straddles two parents");
                    }
                }
                parent_of
            };
            for (t, &p) in parents.iter().enumerate() {
                self.levels[n].tiles[t].parent = Some(p);
            }
            let child_pairs: Vec<(u32, u32)> = parents
                .iter()
                .enumerate()
                .map(|(t, &p)| (p, t as u32))
                .collect();
            for (p, t) in child_pairs {
                self.levels[n - 1].tiles[p as usize].children.push(t);
            }
        }
        for lvl in self.levels.iter_mut() {
            for tile in lvl.tiles.iter_mut() {
                tile.children.sort_unstable();
            }
        }
    }

    pub fn level(&self, n: usize) -> Result<&Level> {
        self.levels
            .get(n)
            .ok_or(Error::LevelOutOfRange(n, self.depth))
    }

    pub fn tile(&self, r: TileRef) -> &Tile {
        &self.levels[r.0].tiles[r.1 as usize]
    }

    /// Tiles containing a point: one for interior points, exactly two for
    /// vertices of the level.
    pub fn tiles_containing(&self, tree: &MetricTree, x: PointRef, n: usize) -> Result<Vec<u32>> {
        let s = tree.sample_of(x)?;
        let lvl = self.level(n)?;
        Ok(self.tiles_containing_sample(tree, s, lvl))
    }

    pub fn tiles_containing_sample(&self, tree: &MetricTree, s: SampleId, lvl: &Level) -> Vec<u32> {
        if let Some(pos) = lvl.vertex_pos(s) {
            let [a, b] = lvl.vertex_tiles[pos];
            vec![a.min(b), a.max(b)]
        } else {
            let (_, iv, _) = tree.neighbors_of(s)[0];
            vec![lvl.interval_tile[iv as usize]]
        }
    }

    /// The unique simple chain joining two points at a level. For x == y
    /// the convention is the single smallest-index tile containing x,
    /// flagged as degenerate.
    pub fn simple_chain(
        &self,
        tree: &MetricTree,
        x: PointRef,
        y: PointRef,
        n: usize,
    ) -> Result<Chain> {
        let sx = tree.sample_of(x)?;
        let sy = tree.sample_of(y)?;
        self.simple_chain_samples(tree, sx, sy, n)
    }

    pub fn simple_chain_samples(
        &self,
        tree: &MetricTree,
        sx: SampleId,
        sy: SampleId,
        n: usize,
    ) -> Result<Chain> {
        let lvl = self.level(n)?;
        if sx == sy {
            let t = *self
                .tiles_containing_sample(tree, sx, lvl)
                .iter()
                .min()
                .unwrap();
            return Ok(Chain {
                level: n,
                tiles: vec![t],
                joins: (sx, sy),
                degenerate: true,
            });
        }
        let arc = tree.arc_between_samples(sx, sy);
        let mut tiles: Vec<u32> = Vec::new();
        for w in arc.samples().windows(2) {
            let iv = interval_between(tree, w[0], w[1]);
            let t = lvl.interval_tile[iv as usize];
            if tiles.last() != Some(&t) {
                tiles.push(t);
            }
        }
        Ok(Chain {
            level: n,
            tiles,
            joins: (sx, sy),
            degenerate: false,
        })
    }

    /// The vertex shared by consecutive chain tiles i and i+1.
    pub fn gateway(&self, chain: &Chain, i: usize) -> SampleId {
        let lvl = &self.levels[chain.level];
        let a = &lvl.tiles[chain.tiles[i] as usize].boundary;
        let b = &lvl.tiles[chain.tiles[i + 1] as usize].boundary;
        for &v in a {
            if b.binary_search(&v).is_ok() {
                return v;
            }
        }
        panic!("consecutive chain tiles do not share a vertex");
    }

    /// Gateways of a chain including the endpoints: x, v_1, ..., v_(r-1), y.
    pub fn gateway_vertices(&self, chain: &Chain) -> Vec<SampleId> {
        let mut out = Vec::with_capacity(chain.len() + 1);
        out.push(chain.joins.0);
        for i in 0..chain.len().saturating_sub(1) {
            out.push(self.gateway(chain, i));
        }
        out.push(chain.joins.1);
        out
    }

    /// Refine a chain one level down: the concatenation of the simple
    /// child chains between consecutive gateway vertices. The result is
    /// checked against the directly computed simple chain.
    pub fn refine_chain(&self, tree: &MetricTree, chain: &Chain) -> Result<Chain> {
        let n = chain.level;
        if n + 1 > self.depth {
            return Err(Error::LevelOutOfRange(n + 1, self.depth));
        }
        if chain.degenerate {
            return self.simple_chain_samples(tree, chain.joins.0, chain.joins.1, n + 1);
        }
        let gates = self.gateway_vertices(chain);
        let mut tiles: Vec<u32> = Vec::new();
        for w in gates.windows(2) {
            let sub = self.simple_chain_samples(tree, w[0], w[1], n + 1)?;
            tiles.extend(sub.tiles);
        }
        let refined = Chain {
            level: n + 1,
            tiles,
            joins: chain.joins,
            degenerate: false,
        };
        let direct = self.simple_chain_samples(tree, chain.joins.0, chain.joins.1, n + 1)?;
        assert_eq!(
            refined, direct,
            "chain refinement disagrees with the direct simple chain"
        );
        Ok(refined)
    }

    /// The child-level vertex through which every path from the boundary
    /// vertex `u` of tile `x` to the rest of the boundary leaves the child
    /// tile of `u`. For leaf tiles the partner is the smallest other
    /// boundary vertex of the child.
    pub fn exit_vertex(&self, tree: &MetricTree, x: TileRef, u: SampleId) -> Result<SampleId> {
        let (n, xi) = x;
        let tile = self.tile(x);
        debug_assert!(tile.boundary.contains(&u));
        let child_lvl = self.level(n + 1)?;
        let xp = *self
            .tiles_containing_sample(tree, u, child_lvl)
            .iter()
            .find(|&&c| child_lvl.tiles[c as usize].parent == Some(xi))
            .ok_or(Error::ExitVertexAmbiguous { tile: xi as usize })?;
        let child = &child_lvl.tiles[xp as usize];
        if tile.boundary.len() == 1 {
            return child
                .boundary
                .iter()
                .copied()
                .find(|&v| v != u)
                .ok_or(Error::ExitVertexAmbiguous { tile: xi as usize });
        }
        let mut exit: Option<SampleId> = None;
        for &v in tile.boundary.iter().filter(|&&v| v != u) {
            let arc = tree.arc_between_samples(u, v);
            let mut last = u;
            for &s in arc.samples() {
                if child.contains_sample(s) {
                    last = s;
                } else {
                    break;
                }
            }
            match exit {
                None => exit = Some(last),
                Some(prev) if prev == last => {}
                Some(_) => return Err(Error::ExitVertexAmbiguous { tile: xi as usize }),
            }
        }
        exit.ok_or(Error::ExitVertexAmbiguous { tile: xi as usize })
    }
}

fn root_level(tree: &MetricTree, ns: usize) -> Level {
    let all: Vec<SampleId> = (0..tree.sample_count()).collect();
    let interval_tile = vec![0u32; tree.interval_count() as usize];
    let mut segments = all_segments(tree, &interval_tile, 1);
    let tile = Tile {
        level: 0,
        index: 0,
        samples: all,
        boundary: Vec::new(),
        kind: TileKind::Root,
        parent: None,
        children: Vec::new(),
        segments: std::mem::take(&mut segments[0]),
        diam: 1.0,
    };
    Level {
        n: 0,
        vertices: Vec::new(),
        vertex_set: vec![false; ns],
        interval_tile,
        tiles: vec![tile],
        vertex_tiles: Vec::new(),
    }
}

fn cut_level(tree: &MetricTree, n: usize, verts: &[SampleId], ns: usize) -> Level {
    let mut vertex_set = vec![false; ns];
    for &v in verts {
        vertex_set[v as usize] = true;
    }
    let (interval_tile, count) = tree.components_cut_at(&vertex_set);
    let groups = component_samples(tree, &interval_tile, count);
    let mut segments = all_segments(tree, &interval_tile, count);
    let tiles: Vec<Tile> = groups
        .into_iter()
        .enumerate()
        .map(|(i, samples)| {
            let boundary: Vec<SampleId> = samples
                .iter()
                .copied()
                .filter(|&s| vertex_set[s as usize])
                .collect();
            let kind = match boundary.len() {
                0 => TileKind::Root,
                1 => TileKind::Leaf,
                _ => TileKind::Arc,
            };
            let diam = subtree_diam(tree, &samples);
            Tile {
                level: n,
                index: i as u32,
                samples,
                boundary,
                kind,
                parent: None,
                children: Vec::new(),
                segments: std::mem::take(&mut segments[i]),
                diam,
            }
        })
        .collect();
    let vertex_tiles: Vec<[u32; 2]> = verts
        .iter()
        .map(|&v| {
            let nb = tree.neighbors_of(v);
            debug_assert_eq!(nb.len(), 2, "level vertices are double points");
            [
                interval_tile[nb[0].1 as usize],
                interval_tile[nb[1].1 as usize],
            ]
        })
        .collect();
    Level {
        n,
        vertices: verts.to_vec(),
        vertex_set,
        interval_tile,
        tiles,
        vertex_tiles,
    }
}

/// Maximal runs of consecutive intervals per tile and edge, in edge-local
/// interval offsets; one sweep over the grid for the whole level.
fn all_segments(
    tree: &MetricTree,
    interval_tile: &[u32],
    count: usize,
) -> Vec<Vec<(usize, u32, u32)>> {
    let mut out = vec![Vec::new(); count];
    for (ei, e) in tree.edges().iter().enumerate() {
        let base = tree.edge_interval_base(ei);
        let mut run: Option<(u32, u32, u32)> = None; // (tile, lo, hi)
        for j in 0..e.grid {
            let t = interval_tile[(base + j) as usize];
            run = Some(match run.take() {
                Some((rt, lo, _)) if rt == t => (t, lo, j),
                Some((rt, lo, hi)) => {
                    out[rt as usize].push((ei, lo, hi));
                    (t, j, j)
                }
                None => (t, j, j),
            });
        }
        if let Some((rt, lo, hi)) = run {
            out[rt as usize].push((ei, lo, hi));
        }
    }
    out
}

pub(crate) fn interval_between(tree: &MetricTree, s: SampleId, t: SampleId) -> u32 {
    tree.neighbors_of(s)
        .iter()
        .find(|&&(w, _, _)| w == t)
        .map(|&(_, iv, _)| iv)
        .expect("samples are not grid-adjacent")
}

// ----------------------------------------------------------------------
// Validation report
// ----------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaReport {
    pub checks: Vec<CheckResult>,
}

impl DeltaReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Per-level structural checks that the chosen scale ratio is small enough:
/// (a) every tile has at least three children; (b) simple child chains
/// between distinct vertices have length >= 3; (c) the exit vertex is
/// independent of the target boundary vertex; (d) child chains between two
/// boundary vertices avoid the rest of the boundary.
pub fn validate_delta(tree: &MetricTree, h: &Hierarchy) -> DeltaReport {
    let mut checks = Vec::new();

    // (a) child counts
    let mut worst: Option<String> = None;
    for n in 0..h.depth {
        for tile in &h.levels[n].tiles {
            if tile.children.len() < 3 {
                worst.get_or_insert(format!(
                    "tile {}:{} has {} children",
                    n,
                    tile.index,
                    tile.children.len()
                ));
            }
        }
    }
    checks.push(CheckResult {
        name: "three-children-per-tile".into(),
        pass: worst.is_none(),
        witness: worst,
    });

    // (b) chains between distinct level-n vertices at level n+1 are long.
    // A chain of length < 3 forces its endpoints into one child tile or
    // two adjacent ones, so only those pairs need direct inspection.
    let mut worst: Option<String> = None;
    for n in 1..h.depth {
        let parent_lvl = &h.levels[n];
        let child_lvl = &h.levels[n + 1];
        // Level-n vertices contained in each child tile. Every such vertex
        // is also an (n+1)-vertex, so it sits on two child tiles.
        let mut held: Vec<Vec<SampleId>> = vec![Vec::new(); child_lvl.tiles.len()];
        for &u in &parent_lvl.vertices {
            let pos = child_lvl.vertex_pos(u).expect("nested vertex sets");
            for t in child_lvl.vertex_tiles[pos] {
                held[t as usize].push(u);
            }
        }
        for (ci, inside) in held.iter().enumerate() {
            if inside.len() >= 2 {
                worst.get_or_insert(format!(
                    "tile {}:{} holds two level-{} vertices {} and {}",
                    n + 1,
                    ci,
                    n,
                    tree.point_of(inside[0]),
                    tree.point_of(inside[1])
                ));
            }
        }
        for (vi, pair) in child_lvl.vertex_tiles.iter().enumerate() {
            let w = child_lvl.vertices[vi];
            let [a, b] = *pair;
            for &u in &held[a as usize] {
                for &v in &held[b as usize] {
                    if u == v || u == w || v == w {
                        continue;
                    }
                    let chain = h
                        .simple_chain_samples(tree, u, v, n + 1)
                        .expect("level built");
                    if chain.len() < 3 {
                        worst.get_or_insert(format!(
                            "chain between level-{} vertices {} and {} has length {}",
                            n,
                            tree.point_of(u),
                            tree.point_of(v),
                            chain.len()
                        ));
                    }
                }
            }
        }
    }
    checks.push(CheckResult {
        name: "child-chains-have-length-three".into(),
        pass: worst.is_none(),
        witness: worst,
    });

    // (c) exit vertex independence
    let mut worst: Option<String> = None;
    for n in 0..h.depth {
        for tile in &h.levels[n].tiles {
            if tile.boundary.len() < 2 {
                continue;
            }
            for &u in &tile.boundary {
                if let Err(e) = h.exit_vertex(tree, (n, tile.index), u) {
                    worst.get_or_insert(format!("tile {}:{} at {}: {e}", n, tile.index, {
                        tree.point_of(u)
                    }));
                }
            }
        }
    }
    checks.push(CheckResult {
        name: "exit-vertex-independent".into(),
        pass: worst.is_none(),
        witness: worst,
    });

    // (d) boundary chains avoid the rest of the boundary
    let mut worst: Option<String> = None;
    for n in 0..h.depth {
        let child_lvl = &h.levels[n + 1];
        for tile in &h.levels[n].tiles {
            let b = &tile.boundary;
            for i in 0..b.len() {
                for j in i + 1..b.len() {
                    let chain = h
                        .simple_chain_samples(tree, b[i], b[j], n + 1)
                        .expect("level built");
                    for &w in b.iter().filter(|&&w| w != b[i] && w != b[j]) {
                        let hit = h
                            .tiles_containing_sample(tree, w, child_lvl)
                            .iter()
                            .any(|t| chain.tiles.contains(t));
                        if hit {
                            worst.get_or_insert(format!(
                                "chain {}..{} in tile {}:{} passes boundary vertex {}",
                                tree.point_of(b[i]),
                                tree.point_of(b[j]),
                                n,
                                tile.index,
                                tree.point_of(w)
                            ));
                        }
                    }
                }
            }
        }
    }
    checks.push(CheckResult {
        name: "boundary-chains-avoid-boundary".into(),
        pass: worst.is_none(),
        witness: worst,
    });

    DeltaReport { checks }
}

// ----------------------------------------------------------------------
// Neighbor statistics
// ----------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct NeighborStats {
    /// Max over tiles of max(same-level touching tiles, children).
    pub k: usize,
    /// Per level: histogram of neighbor counts and child counts
    /// (count -> number of tiles).
    pub per_level: Vec<LevelStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelStats {
    pub level: usize,
    pub tiles: usize,
    pub neighbor_hist: std::collections::BTreeMap<usize, usize>,
    pub child_hist: std::collections::BTreeMap<usize, usize>,
}

/// Same-level touching counts and child counts. Two distinct tiles of one
/// level touch iff they share a boundary vertex, and each boundary vertex
/// joins its tile to exactly one other tile, so the touching count equals
/// the boundary size.
pub fn neighbor_stats(h: &Hierarchy) -> NeighborStats {
    let mut k = 0usize;
    let mut per_level = Vec::new();
    for lvl in &h.levels {
        let mut nh = std::collections::BTreeMap::new();
        let mut ch = std::collections::BTreeMap::new();
        for tile in &lvl.tiles {
            let neigh = tile.boundary.len();
            let childs = tile.children.len();
            *nh.entry(neigh).or_insert(0) += 1;
            *ch.entry(childs).or_insert(0) += 1;
            k = k.max(neigh);
            if lvl.n < h.depth {
                k = k.max(childs);
            }
        }
        per_level.push(LevelStats {
            level: lvl.n,
            tiles: lvl.tiles.len(),
            neighbor_hist: nh,
            child_hist: ch,
        });
    }
    NeighborStats { k, per_level }
}

/// Re-check the vertex-set contract of every built level: pairwise
/// separation (via ball scans around each vertex), goodness of every
/// vertex, and non-emptiness.
pub fn verify_levels(tree: &MetricTree, h: &Hierarchy) -> Result<()> {
    for n in 1..=h.depth {
        let scale = h.delta.powi(n as i32);
        let lvl = &h.levels[n];
        if lvl.vertices.is_empty() {
            return Err(Error::SeparationPostCheck {
                diam: 1.0,
                bound: 3.0 * h.beta * scale,
                scale,
            });
        }
        let params = GoodPointParams::new(h.beta, h.gamma, scale);
        for &a in &lvl.vertices {
            let verdict = goodness_of_sample(tree, a, &params);
            if !verdict.good {
                return Err(Error::SeparationPostCheck {
                    diam: 0.0,
                    bound: 0.0,
                    scale,
                });
            }
            for s in tree.dd_ball(a, scale) {
                if s != a && lvl.vertex_set[s as usize] {
                    return Err(Error::SeparationPostCheck {
                        diam: tree.dd_samples(a, s),
                        bound: scale,
                        scale,
                    });
                }
            }
        }
    }
    Ok(())
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

    #[test]
    fn rejects_delta_out_of_range() {
        let t = segment(64);
        assert!(matches!(
            Hierarchy::build(&t, 0.5, 1, 1.0, 0.1),
            Err(Error::DeltaOutOfRange { .. })
        ));
    }

    #[test]
    fn vertex_sets_nest_exactly() {
        let t = segment(1024);
        let h = Hierarchy::build(&t, 0.25, 3, 1.0, 0.1).unwrap();
        for n in 1..h.depth {
            for &v in &h.levels[n].vertices {
                assert!(
                    h.levels[n + 1].vertex_set[v as usize],
                    "vertex {v} of level {n} missing at level {}",
                    n + 1
                );
            }
        }
    }

    #[test]
    fn a_level_vertex_stays_in_two_tiles_one_level_down() {
        let t = segment(1024);
        let h = Hierarchy::build(&t, 0.25, 2, 1.0, 0.1).unwrap();
        for &v in &h.levels[1].vertices {
            let deeper = h.tiles_containing(&t, t.point_of(v), 2).unwrap();
            assert_eq!(deeper.len(), 2);
        }
    }

    #[test]
    fn exit_vertex_on_a_two_sided_tile() {
        let t = segment(1024);
        let h = Hierarchy::build(&t, 0.25, 2, 1.0, 0.1).unwrap();
        for tile in &h.levels[1].tiles {
            if tile.boundary.len() != 2 {
                continue;
            }
            let (u, v) = (tile.boundary[0], tile.boundary[1]);
            let u2 = h.exit_vertex(&t, (1, tile.index), u).unwrap();
            // The exit is the last child-tile point along [u, v].
            let child = h
                .tiles_containing_sample(&t, u, &h.levels[2])
                .into_iter()
                .find(|&c| h.levels[2].tiles[c as usize].parent == Some(tile.index))
                .unwrap();
            let arc = t.arc_between_samples(u, v);
            let mut last = u;
            for &s in arc.samples() {
                if h.levels[2].tiles[child as usize].contains_sample(s) {
                    last = s;
                } else {
                    break;
                }
            }
            assert_eq!(u2, last);
        }
    }

    #[test]
    fn exit_vertex_on_a_leaf_tile_is_deterministic() {
        let t = segment(1024);
        let h = Hierarchy::build(&t, 0.25, 2, 1.0, 0.1).unwrap();
        for tile in &h.levels[1].tiles {
            if tile.kind != TileKind::Leaf {
                continue;
            }
            let u = tile.boundary[0];
            let u2 = h.exit_vertex(&t, (1, tile.index), u).unwrap();
            let child = h
                .tiles_containing_sample(&t, u, &h.levels[2])
                .into_iter()
                .find(|&c| h.levels[2].tiles[c as usize].parent == Some(tile.index))
                .unwrap();
            let expect = h.levels[2].tiles[child as usize]
                .boundary
                .iter()
                .copied()
                .find(|&w| w != u)
                .unwrap();
            assert_eq!(u2, expect, "smallest other boundary vertex wins");
        }
    }

    #[test]
    fn interval_tiles_on_a_path_touch_at_most_two_others() {
        let t = segment(2048);
        let h = Hierarchy::build(&t, 0.25, 2, 1.0, 0.1).unwrap();
        let stats = neighbor_stats(&h);
        for lvl_stats in &stats.per_level {
            for &neighbors in lvl_stats.neighbor_hist.keys() {
                assert!(neighbors <= 2, "path tiles meet at most 2 others");
            }
        }
        // Children counts dominate K on a path.
        assert!(stats.k >= 3);
    }

    #[test]
    fn depth_one_validation_is_vacuous() {
        let t = segment(256);
        let h = Hierarchy::build(&t, 0.25, 1, 1.0, 0.1).unwrap();
        let rep = validate_delta(&t, &h);
        assert!(rep.pass());
    }

    #[test]
    fn degenerate_chain_is_flagged_with_smallest_tile() {
        let t = segment(512);
        let h = Hierarchy::build(&t, 0.25, 1, 1.0, 0.1).unwrap();
        let x = t.point_of(5);
        let c = h.simple_chain(&t, x, x, 1).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.len(), 1);
        let all = h.tiles_containing(&t, x, 1).unwrap();
        assert_eq!(c.tiles[0], *all.iter().min().unwrap());
    }
}
