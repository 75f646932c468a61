//! Finite metric trees on a per-edge sample grid.
//!
//! A tree is described combinatorially (nodes, weighted edges) together with
//! a base metric mode. Construction normalizes the metric so the tree has
//! diameter 1, materializes a uniform sample grid along every edge, and
//! precomputes the structures used by distance and branch queries: LCA
//! tables over samples, and a rerooting pass over the combinatorial tree
//! that yields the height/diameter of the component hanging off either side
//! of every edge.

use crate::error::{Error, Result};
use crate::point::{IntervalId, PointRef, SampleId};

/// Base metric carried by the tree before the diameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricMode {
    /// Distance = arc length of the unique path.
    Geodesic,
    /// Distance = (arc length)^eps with eps in (0, 1].
    Snowflake { eps: f64 },
    /// Symmetric node-to-node distance table, row-major `n x n`;
    /// interior samples are interpolated linearly in arc length.
    Table { dist: Vec<f64> },
}

impl MetricMode {
    pub fn name(&self) -> &'static str {
        match self {
            MetricMode::Geodesic => "geodesic",
            MetricMode::Snowflake { .. } => "snowflake",
            MetricMode::Table { .. } => "table",
        }
    }
}

/// Build-time description of a tree.
#[derive(Debug, Clone)]
pub struct TreeSpec {
    pub node_count: usize,
    /// (a, b, length) with raw (pre-normalization) positive lengths.
    pub edges: Vec<(usize, usize, f64)>,
    pub metric: MetricMode,
    /// Sample points per unit of normalized length; every edge gets at
    /// least 2 grid intervals.
    pub resolution: u32,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    /// Normalized length.
    pub len: f64,
    /// Number of grid intervals on this edge (>= 2).
    pub grid: u32,
    first_interior: SampleId,
    first_interval: IntervalId,
}

/// The unique simple path between two sample points, listed sample by sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    endpoints: (PointRef, PointRef),
    samples: Vec<SampleId>,
}

impl Arc {
    pub fn endpoints(&self) -> (PointRef, PointRef) {
        self.endpoints
    }

    pub fn samples(&self) -> &[SampleId] {
        &self.samples
    }

    pub fn is_degenerate(&self) -> bool {
        self.samples.len() == 1
    }

    /// Number of grid intervals covered by the arc.
    pub fn interval_count(&self) -> usize {
        self.samples.len() - 1
    }

    /// Sub-arc over the sample index range `lo..=hi`.
    pub fn slice(&self, tree: &MetricTree, lo: usize, hi: usize) -> Arc {
        let samples: Vec<SampleId> = self.samples[lo..=hi].to_vec();
        Arc {
            endpoints: (
                tree.point_of(samples[0]),
                tree.point_of(*samples.last().unwrap()),
            ),
            samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BranchKind {
    Leaf,
    Double,
    Branch,
}

use serde::Serialize;

/// Component diameters of the tree with one point removed.
#[derive(Debug, Clone)]
pub struct BranchData {
    pub at: PointRef,
    /// Diameters of the closures of the components, sorted descending.
    pub branch_diams: Vec<f64>,
    pub kind: BranchKind,
}

impl BranchData {
    /// Diameter of the smaller side of a double point.
    pub fn double_small_side(&self) -> Option<f64> {
        (self.kind == BranchKind::Double).then(|| self.branch_diams[1])
    }

    /// Diameter of the third-largest branch of a branch point.
    pub fn third_branch(&self) -> Option<f64> {
        (self.kind == BranchKind::Branch).then(|| self.branch_diams[2])
    }
}

/// Height/diameter of the component hanging off one side of an edge.
#[derive(Debug, Clone, Copy, Default)]
struct Reach {
    /// Max arc length from the incident endpoint into the component.
    height: f64,
    /// Max arc length between two points of the component.
    diam: f64,
}

#[derive(Debug)]
pub struct MetricTree {
    node_count: usize,
    edges: Vec<Edge>,
    mode: MetricMode,
    resolution: u32,
    /// Factor applied to raw lengths (and table entries) by normalization.
    scale: f64,

    sample_count: u32,
    interval_count: u32,
    /// Per-sample adjacency: (neighbor sample, interval id, step length).
    neighbors: Vec<Vec<(SampleId, IntervalId, f64)>>,
    /// Interval endpoints, smaller sample id first.
    interval_ends: Vec<(SampleId, SampleId)>,

    parent: Vec<SampleId>,
    depth: Vec<u32>,
    dist_root: Vec<f64>,
    /// Binary lifting table, `up[k][v]` = 2^k-th ancestor.
    up: Vec<Vec<SampleId>>,

    /// `reach[e][0]` describes the component beyond endpoint `a` of edge `e`
    /// (edge excluded, endpoint included); `reach[e][1]` the `b` side.
    reach: Vec<[Reach; 2]>,

    /// Combinatorial nodes of degree >= 3.
    branch_points: Vec<SampleId>,
    /// Third-largest branch diameter per entry of `branch_points`.
    branch_h: Vec<f64>,

    /// Canonical scan order of all samples (DFS over edges from node 0).
    dfs_order: Vec<SampleId>,

    /// Max base distance across a single grid interval; the discretization
    /// slack every metric inequality is tested with.
    grid_step: f64,
}

impl MetricTree {
    pub fn build(spec: &TreeSpec) -> Result<MetricTree> {
        let n = spec.node_count;
        if n < 2 || spec.edges.is_empty() {
            return Err(Error::BadDistanceTable(
                "tree needs at least two nodes and one edge".into(),
            ));
        }
        if spec.resolution == 0 {
            return Err(Error::BadDistanceTable(
                "resolution must be positive".into(),
            ));
        }
        if let MetricMode::Snowflake { eps } = spec.metric {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::SnowflakeExponentOutOfRange(eps));
            }
        }
        for &(a, b, len) in &spec.edges {
            if a >= n || b >= n {
                return Err(Error::NodeOutOfRange(a.max(b)));
            }
            if len.is_nan() || len <= 0.0 {
                return Err(Error::NonPositiveLength { a, b, len });
            }
        }

        // Cycle and connectivity checks via union-find.
        let mut uf: Vec<usize> = (0..n).collect();
        fn find(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        for &(a, b, _) in &spec.edges {
            let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
            if ra == rb {
                return Err(Error::CycleDetected { a, b });
            }
            uf[ra] = rb;
        }
        let root = find(&mut uf, 0);
        for v in 1..n {
            if find(&mut uf, v) != root {
                return Err(Error::Disconnected(v));
            }
        }
        if spec.edges.len() != n - 1 {
            // Connected and acyclic forces exactly n-1 edges; unreachable
            // after the checks above but kept as a guard.
            return Err(Error::Disconnected(n - 1));
        }

        // Normalization scale.
        let raw_path_diam = combinatorial_path_diameter(n, &spec.edges);
        let scale = match &spec.metric {
            MetricMode::Geodesic | MetricMode::Snowflake { .. } => 1.0 / raw_path_diam,
            MetricMode::Table { dist } => {
                if dist.len() != n * n {
                    return Err(Error::BadDistanceTable(format!(
                        "table has {} entries, expected {}",
                        dist.len(),
                        n * n
                    )));
                }
                let mut max = 0.0f64;
                for i in 0..n {
                    if dist[i * n + i] != 0.0 {
                        return Err(Error::BadDistanceTable(format!(
                            "nonzero diagonal at node {i}"
                        )));
                    }
                    for j in 0..n {
                        let d = dist[i * n + j];
                        if (d - dist[j * n + i]).abs() > 1e-12 {
                            return Err(Error::BadDistanceTable(format!(
                                "asymmetric entries at ({i},{j})"
                            )));
                        }
                        if i != j && (d.is_nan() || d <= 0.0) {
                            return Err(Error::BadDistanceTable(format!(
                                "non-positive entry at ({i},{j})"
                            )));
                        }
                        max = max.max(d);
                    }
                }
                1.0 / max
            }
        };

        let mode = match &spec.metric {
            MetricMode::Table { dist } => MetricMode::Table {
                dist: dist.iter().map(|d| d * scale).collect(),
            },
            other => other.clone(),
        };

        // Sample grid.
        let mut edges = Vec::with_capacity(spec.edges.len());
        let mut sample_count = n as u32;
        let mut interval_count: u32 = 0;
        for &(a, b, raw_len) in &spec.edges {
            let len = raw_len * scale;
            let grid = ((spec.resolution as f64 * len).ceil() as u32).max(2);
            edges.push(Edge {
                a,
                b,
                len,
                grid,
                first_interior: sample_count,
                first_interval: interval_count,
            });
            sample_count += grid - 1;
            interval_count += grid;
        }

        let mut neighbors: Vec<Vec<(SampleId, IntervalId, f64)>> =
            vec![Vec::new(); sample_count as usize];
        let mut interval_ends: Vec<(SampleId, SampleId)> =
            Vec::with_capacity(interval_count as usize);
        for (ei, e) in edges.iter().enumerate() {
            let step = e.len / e.grid as f64;
            for j in 0..e.grid {
                let s = edge_sample(e, ei, j);
                let t = edge_sample(e, ei, j + 1);
                let iv = e.first_interval + j;
                neighbors[s as usize].push((t, iv, step));
                neighbors[t as usize].push((s, iv, step));
                interval_ends.push((s.min(t), s.max(t)));
            }
        }

        // Rooted structure over samples (root = sample 0 = node 0).
        let ns = sample_count as usize;
        let mut parent = vec![0u32; ns];
        let mut depth = vec![0u32; ns];
        let mut dist_root = vec![0.0f64; ns];
        let mut seen = vec![false; ns];
        let mut order = Vec::with_capacity(ns);
        let mut stack = vec![0u32];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            order.push(v);
            for &(w, _, step) in &neighbors[v as usize] {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    parent[w as usize] = v;
                    depth[w as usize] = depth[v as usize] + 1;
                    dist_root[w as usize] = dist_root[v as usize] + step;
                    stack.push(w);
                }
            }
        }

        let levels = {
            let maxd = depth.iter().copied().max().unwrap_or(0);
            (32 - u32::leading_zeros(maxd.max(1))) as usize
        };
        let mut up = vec![vec![0u32; ns]; levels.max(1)];
        up[0].copy_from_slice(&parent);
        for k in 1..up.len() {
            for v in 0..ns {
                up[k][v] = up[k - 1][up[k - 1][v] as usize];
            }
        }

        let reach = compute_reach(n, &edges);

        let mut tree = MetricTree {
            node_count: n,
            edges,
            mode,
            resolution: spec.resolution,
            scale,
            sample_count,
            interval_count,
            neighbors,
            interval_ends,
            parent,
            depth,
            dist_root,
            up,
            reach,
            branch_points: Vec::new(),
            branch_h: Vec::new(),
            dfs_order: Vec::new(),
            grid_step: 0.0,
        };

        tree.grid_step = (0..tree.interval_count)
            .map(|iv| {
                let (s, t) = tree.interval_ends[iv as usize];
                tree.base_dist_samples(s, t)
            })
            .fold(0.0, f64::max);

        for v in 0..n {
            if tree.neighbors[v].len() >= 3 {
                tree.branch_points.push(v as u32);
            }
        }
        tree.branch_h = tree
            .branch_points
            .clone()
            .iter()
            .map(|&b| {
                let bd = tree.branch_data_sample(b);
                bd.branch_diams[2]
            })
            .collect();

        tree.dfs_order = tree.compute_dfs_order();

        let diam = tree.diam_check();
        if (diam - 1.0).abs() > 1e-9 {
            return Err(Error::BadDistanceTable(format!(
                "normalization failed: diameter {diam} != 1"
            )));
        }
        Ok(tree)
    }

    // ------------------------------------------------------------------
    // Basic accessors
    // ------------------------------------------------------------------

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn mode(&self) -> &MetricMode {
        &self.mode
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn normalization_scale(&self) -> f64 {
        self.scale
    }

    pub fn sample_count(&self) -> u32 {
        self.sample_count
    }

    pub fn interval_count(&self) -> u32 {
        self.interval_count
    }

    pub fn interval_endpoints(&self, iv: IntervalId) -> (SampleId, SampleId) {
        self.interval_ends[iv as usize]
    }

    /// Global id of the first grid interval of edge `ei`.
    pub fn edge_interval_base(&self, ei: usize) -> IntervalId {
        self.edges[ei].first_interval
    }

    pub fn neighbors_of(&self, s: SampleId) -> &[(SampleId, IntervalId, f64)] {
        &self.neighbors[s as usize]
    }

    pub fn degree(&self, s: SampleId) -> usize {
        self.neighbors[s as usize].len()
    }

    /// Double points of the sampled model: degree-2 samples (interior grid
    /// points and pass-through combinatorial vertices).
    pub fn is_double_point(&self, s: SampleId) -> bool {
        self.degree(s) == 2
    }

    /// One grid interval of discretization slack, measured in the base metric.
    pub fn grid_tolerance(&self) -> f64 {
        self.grid_step
    }

    /// Canonical deterministic scan order (DFS over edges from node 0).
    pub fn dfs_order(&self) -> &[SampleId] {
        &self.dfs_order
    }

    // ------------------------------------------------------------------
    // Point resolution
    // ------------------------------------------------------------------

    pub fn sample_of(&self, p: PointRef) -> Result<SampleId> {
        match p {
            PointRef::Vertex(v) => {
                if v < self.node_count {
                    Ok(v as u32)
                } else {
                    Err(Error::PointOffGrid(p.to_string()))
                }
            }
            PointRef::Interior { edge, step } => {
                let e = self
                    .edges
                    .get(edge)
                    .ok_or_else(|| Error::PointOffGrid(p.to_string()))?;
                if step == 0 || step >= e.grid {
                    return Err(Error::PointOffGrid(p.to_string()));
                }
                Ok(e.first_interior + step - 1)
            }
        }
    }

    pub fn point_of(&self, s: SampleId) -> PointRef {
        if (s as usize) < self.node_count {
            PointRef::Vertex(s as usize)
        } else {
            let ei = self
                .edges
                .partition_point(|e| e.first_interior <= s)
                .saturating_sub(1);
            let e = &self.edges[ei];
            PointRef::Interior {
                edge: ei,
                step: s - e.first_interior + 1,
            }
        }
    }

    /// Edge id and arc-length offset from endpoint `a` for any sample.
    /// Vertices report one incident edge (the smallest id).
    fn edge_position(&self, s: SampleId) -> (usize, f64) {
        if (s as usize) < self.node_count {
            for (ei, e) in self.edges.iter().enumerate() {
                if e.a == s as usize {
                    return (ei, 0.0);
                }
                if e.b == s as usize {
                    return (ei, e.len);
                }
            }
            unreachable!("node without incident edge");
        }
        let p = self.point_of(s);
        match p {
            PointRef::Interior { edge, step } => {
                let e = &self.edges[edge];
                (edge, e.len * step as f64 / e.grid as f64)
            }
            PointRef::Vertex(_) => unreachable!(),
        }
    }

    // ------------------------------------------------------------------
    // Paths and distances
    // ------------------------------------------------------------------

    pub fn lca(&self, mut x: SampleId, mut y: SampleId) -> SampleId {
        if self.depth[x as usize] < self.depth[y as usize] {
            std::mem::swap(&mut x, &mut y);
        }
        let mut diff = self.depth[x as usize] - self.depth[y as usize];
        let mut k = 0;
        while diff > 0 {
            if diff & 1 == 1 {
                x = self.up[k][x as usize];
            }
            diff >>= 1;
            k += 1;
        }
        if x == y {
            return x;
        }
        for k in (0..self.up.len()).rev() {
            if self.up[k][x as usize] != self.up[k][y as usize] {
                x = self.up[k][x as usize];
                y = self.up[k][y as usize];
            }
        }
        self.parent[x as usize]
    }

    /// Arc length of the unique path between two samples.
    pub fn path_len(&self, x: SampleId, y: SampleId) -> f64 {
        let l = self.lca(x, y);
        self.dist_root[x as usize] + self.dist_root[y as usize] - 2.0 * self.dist_root[l as usize]
    }

    pub fn arc_between(&self, x: PointRef, y: PointRef) -> Result<Arc> {
        let sx = self.sample_of(x)?;
        let sy = self.sample_of(y)?;
        Ok(self.arc_between_samples(sx, sy))
    }

    pub fn arc_between_samples(&self, x: SampleId, y: SampleId) -> Arc {
        let l = self.lca(x, y);
        let mut head = Vec::new();
        let mut v = x;
        while v != l {
            head.push(v);
            v = self.parent[v as usize];
        }
        head.push(l);
        let mut tail = Vec::new();
        let mut w = y;
        while w != l {
            tail.push(w);
            w = self.parent[w as usize];
        }
        head.extend(tail.into_iter().rev());
        Arc {
            endpoints: (self.point_of(x), self.point_of(y)),
            samples: head,
        }
    }

    /// Base metric between two points, before the diameter sweep.
    pub fn base_dist(&self, x: PointRef, y: PointRef) -> Result<f64> {
        Ok(self.base_dist_samples(self.sample_of(x)?, self.sample_of(y)?))
    }

    pub fn base_dist_samples(&self, x: SampleId, y: SampleId) -> f64 {
        if x == y {
            return 0.0;
        }
        match &self.mode {
            MetricMode::Geodesic => self.path_len(x, y),
            MetricMode::Snowflake { eps } => self.path_len(x, y).powf(*eps),
            MetricMode::Table { dist } => self.table_dist(dist, x, y),
        }
    }

    /// Linear-in-arc-length interpolation of the node table. For samples on
    /// distinct edges the value is bilinear in the two arc-length fractions,
    /// so maxima over sample ranges are attained at range endpoints.
    fn table_dist(&self, dist: &[f64], x: SampleId, y: SampleId) -> f64 {
        let n = self.node_count;
        let node = |s: SampleId| (s as usize) < n;
        let lookup = |u: SampleId, v: SampleId| dist[u as usize * n + v as usize];
        match (node(x), node(y)) {
            (true, true) => lookup(x, y),
            (false, true) => {
                let (ei, off) = self.edge_position(x);
                let e = &self.edges[ei];
                let t = off / e.len;
                (1.0 - t) * lookup(e.a as u32, y) + t * lookup(e.b as u32, y)
            }
            (true, false) => self.table_dist(dist, y, x),
            (false, false) => {
                let (ex, ox) = self.edge_position(x);
                let (ey, oy) = self.edge_position(y);
                if ex == ey {
                    let e = &self.edges[ex];
                    ((ox - oy).abs() / e.len) * lookup(e.a as u32, e.b as u32)
                } else if ex > ey {
                    // Canonical evaluation order keeps the bilinear form
                    // bit-exactly symmetric.
                    self.table_dist(dist, y, x)
                } else {
                    let e = &self.edges[ey];
                    let t = oy / e.len;
                    (1.0 - t) * self.table_dist(dist, x, e.a as u32)
                        + t * self.table_dist(dist, x, e.b as u32)
                }
            }
        }
    }

    /// Diameter distance: max base distance over sample pairs on the arc.
    /// In geodesic and snowflake modes the arc endpoints realize the max,
    /// so the pair sweep is skipped.
    pub fn dd(&self, x: PointRef, y: PointRef) -> Result<f64> {
        Ok(self.dd_samples(self.sample_of(x)?, self.sample_of(y)?))
    }

    pub fn dd_samples(&self, x: SampleId, y: SampleId) -> f64 {
        match &self.mode {
            MetricMode::Geodesic | MetricMode::Snowflake { .. } => self.base_dist_samples(x, y),
            MetricMode::Table { .. } => {
                let arc = self.arc_between_samples(x, y);
                self.arc_diam(&arc)
            }
        }
    }

    /// Max base distance over sample pairs of the arc.
    pub fn arc_diam(&self, arc: &Arc) -> f64 {
        match &self.mode {
            MetricMode::Geodesic | MetricMode::Snowflake { .. } => {
                self.base_dist_samples(arc.samples[0], *arc.samples.last().unwrap())
            }
            MetricMode::Table { .. } => {
                let s = &arc.samples;
                let mut best = 0.0f64;
                for i in 0..s.len() {
                    for j in i + 1..s.len() {
                        best = best.max(self.base_dist_samples(s[i], s[j]));
                    }
                }
                best
            }
        }
    }

    /// Max base distance across any single grid interval of the arc.
    pub fn arc_grid_tolerance(&self, arc: &Arc) -> f64 {
        arc.samples
            .windows(2)
            .map(|w| self.base_dist_samples(w[0], w[1]))
            .fold(0.0, f64::max)
    }

    // ------------------------------------------------------------------
    // Branch structure
    // ------------------------------------------------------------------

    pub fn branch_data(&self, p: PointRef) -> Result<BranchData> {
        Ok(self.branch_data_sample(self.sample_of(p)?))
    }

    pub fn branch_data_sample(&self, s: SampleId) -> BranchData {
        let mut diams = match &self.mode {
            MetricMode::Geodesic => self.branch_path_diams(s),
            MetricMode::Snowflake { eps } => self
                .branch_path_diams(s)
                .into_iter()
                .map(|d| if d > 0.0 { d.powf(*eps) } else { 0.0 })
                .collect(),
            MetricMode::Table { .. } => self.branch_diams_table(s),
        };
        diams.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let kind = match diams.len() {
            0 | 1 => BranchKind::Leaf,
            2 => BranchKind::Double,
            _ => BranchKind::Branch,
        };
        BranchData {
            at: self.point_of(s),
            branch_diams: diams,
            kind,
        }
    }

    /// Branch diameters in raw arc-length units, one per component of the
    /// tree minus the point.
    fn branch_path_diams(&self, s: SampleId) -> Vec<f64> {
        if (s as usize) < self.node_count {
            let v = s as usize;
            self.edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.a == v || e.b == v)
                .map(|(ei, e)| {
                    let far_is_b = e.a == v;
                    let r = self.reach[ei][if far_is_b { 1 } else { 0 }];
                    r.diam.max(e.len + r.height)
                })
                .collect()
        } else {
            let (ei, off) = self.edge_position(s);
            let e = &self.edges[ei];
            let ra = self.reach[ei][0];
            let rb = self.reach[ei][1];
            vec![
                ra.diam.max(off + ra.height),
                rb.diam.max((e.len - off) + rb.height),
            ]
        }
    }

    /// Table-mode branch diameters. Interpolated distances are bilinear in
    /// arc-length fractions, so component diameters are attained at
    /// combinatorial nodes or at the cut point itself.
    fn branch_diams_table(&self, s: SampleId) -> Vec<f64> {
        let sides: Vec<Vec<SampleId>> = if (s as usize) < self.node_count {
            let v = s as usize;
            self.edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.a == v || e.b == v)
                .map(|(ei, e)| {
                    let far = if e.a == v { e.b } else { e.a };
                    self.component_nodes(far, ei)
                })
                .collect()
        } else {
            let (ei, _) = self.edge_position(s);
            let e = &self.edges[ei];
            vec![self.component_nodes(e.a, ei), self.component_nodes(e.b, ei)]
        };
        sides
            .into_iter()
            .map(|mut nodes| {
                nodes.push(s);
                let mut best = 0.0f64;
                for i in 0..nodes.len() {
                    for j in i + 1..nodes.len() {
                        best = best.max(self.base_dist_samples(nodes[i], nodes[j]));
                    }
                }
                best
            })
            .collect()
    }

    /// Combinatorial nodes reachable from `start` without crossing `cut_edge`.
    fn component_nodes(&self, start: usize, cut_edge: usize) -> Vec<SampleId> {
        let mut seen = vec![false; self.node_count];
        let mut out = vec![start as u32];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for (ei, e) in self.edges.iter().enumerate() {
                if ei == cut_edge {
                    continue;
                }
                let w = if e.a == v {
                    e.b
                } else if e.b == v {
                    e.a
                } else {
                    continue;
                };
                if !seen[w] {
                    seen[w] = true;
                    out.push(w as u32);
                    stack.push(w);
                }
            }
        }
        out
    }

    /// Combinatorial vertices of degree >= 3. Interior grid points always
    /// have degree 2 and are never branch points.
    pub fn branch_points(&self) -> Vec<PointRef> {
        self.branch_points
            .iter()
            .map(|&s| self.point_of(s))
            .collect()
    }

    pub fn branch_point_samples(&self) -> &[SampleId] {
        &self.branch_points
    }

    /// Third-largest branch diameter of the `i`-th branch point.
    pub fn branch_h_value(&self, i: usize) -> f64 {
        self.branch_h[i]
    }

    // ------------------------------------------------------------------
    // Equal-diameter arc splitting
    // ------------------------------------------------------------------

    /// Split a non-degenerate arc into `n` consecutive non-overlapping
    /// subarcs of (grid-)equal diameter. Returns the pieces and their
    /// common diameter (the max piece diameter).
    pub fn equal_diameter_split(&self, arc: &Arc, n: usize) -> Result<(Vec<Arc>, f64)> {
        assert!(n >= 2, "split requires n >= 2");
        let k = arc.interval_count();
        if k < n {
            return Err(Error::ArcTooShort { need: n, have: k });
        }
        let cuts = match &self.mode {
            MetricMode::Geodesic | MetricMode::Snowflake { .. } => {
                // Subarc diameter is monotone in subarc length in these
                // modes, so equalizing arc length equalizes diameter.
                let mut pref = Vec::with_capacity(k + 1);
                let mut acc = 0.0;
                pref.push(0.0);
                for w in arc.samples.windows(2) {
                    acc += self.path_len(w[0], w[1]);
                    pref.push(acc);
                }
                let total = acc;
                let mut cuts = vec![0usize];
                for j in 1..n {
                    let target = total * j as f64 / n as f64;
                    let mut c = pref.partition_point(|&l| l < target);
                    if c > 0 && (pref[c - 1] - target).abs() <= (pref[c.min(k)] - target).abs() {
                        c -= 1;
                    }
                    let lo = cuts[j - 1] + 1;
                    let hi = k - (n - j);
                    cuts.push(c.clamp(lo, hi));
                }
                cuts.push(k);
                cuts
            }
            MetricMode::Table { .. } => self.minimax_cuts(arc, n),
        };
        let pieces: Vec<Arc> = cuts
            .windows(2)
            .map(|w| arc.slice(self, w[0], w[1]))
            .collect();
        let common = pieces.iter().map(|p| self.arc_diam(p)).fold(0.0, f64::max);
        Ok((pieces, common))
    }

    /// Greedy minimax split for table mode: binary search the smallest piece
    /// diameter for which a greedy left-to-right fill needs at most `n`
    /// pieces, then cut with that bound.
    fn minimax_cuts(&self, arc: &Arc, n: usize) -> Vec<usize> {
        let k = arc.interval_count();
        let total = self.arc_diam(arc);
        let greedy = |bound: f64| -> Vec<usize> {
            let mut cuts = vec![0usize];
            let mut start = 0usize;
            let mut diam = 0.0f64;
            for i in 1..=k {
                let mut d = diam;
                for j in start..i {
                    d = d.max(self.base_dist_samples(arc.samples[j], arc.samples[i]));
                }
                let pieces_left = n - cuts.len();
                let intervals_left = k - (i - 1);
                if d > bound && i - 1 > start && intervals_left > pieces_left {
                    cuts.push(i - 1);
                    start = i - 1;
                    diam = 0.0;
                    for j in start..i {
                        diam = diam.max(self.base_dist_samples(arc.samples[j], arc.samples[i]));
                    }
                } else {
                    diam = d;
                }
                if cuts.len() == n {
                    break;
                }
            }
            while cuts.len() < n {
                // Force remaining cuts at the tail, one interval each.
                let next = k - (n - cuts.len());
                cuts.push(next.max(cuts.last().unwrap() + 1));
            }
            cuts.push(k);
            cuts
        };
        let (mut lo, mut hi) = (0.0f64, total);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            let cuts = greedy(mid);
            let worst = cuts
                .windows(2)
                .map(|w| self.arc_diam(&arc.slice(self, w[0], w[1])))
                .fold(0.0, f64::max);
            if worst <= mid {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        greedy(hi)
    }

    // ------------------------------------------------------------------
    // Balls and doubling estimation
    // ------------------------------------------------------------------

    /// Samples within dd-distance < `r` of `center` (open ball). Uses the
    /// monotonicity of dd along arcs to prune the search.
    pub fn dd_ball(&self, center: SampleId, r: f64) -> Vec<SampleId> {
        match &self.mode {
            MetricMode::Geodesic => self.len_ball(center, r),
            MetricMode::Snowflake { eps } => self.len_ball(center, r.powf(1.0 / eps)),
            MetricMode::Table { .. } => {
                let mut ball = vec![center];
                let mut prev: std::collections::HashMap<SampleId, SampleId> =
                    std::collections::HashMap::new();
                prev.insert(center, center);
                let mut queue = std::collections::VecDeque::from([center]);
                let mut dd_val: std::collections::HashMap<SampleId, f64> =
                    std::collections::HashMap::new();
                dd_val.insert(center, 0.0);
                while let Some(v) = queue.pop_front() {
                    for &(w, _, _) in &self.neighbors[v as usize] {
                        if prev.contains_key(&w) {
                            continue;
                        }
                        // dd along the tree path grows monotonically, so the
                        // max against the new endpoint only needs the walk
                        // back to the center.
                        let mut d = dd_val[&v];
                        let mut u = w;
                        loop {
                            let p = if u == w { v } else { prev[&u] };
                            d = d.max(
                                self.base_dist_samples(u, w)
                                    .max(self.base_dist_samples(p, w)),
                            );
                            if p == center {
                                d = d.max(self.base_dist_samples(center, w));
                                break;
                            }
                            u = p;
                        }
                        if d < r {
                            prev.insert(w, v);
                            dd_val.insert(w, d);
                            ball.push(w);
                            queue.push_back(w);
                        } else {
                            prev.insert(w, v);
                        }
                    }
                }
                ball.sort_unstable();
                ball
            }
        }
    }

    fn len_ball(&self, center: SampleId, r: f64) -> Vec<SampleId> {
        let mut out = vec![center];
        let mut stack = vec![(center, center, 0.0f64)];
        while let Some((v, from, acc)) = stack.pop() {
            for &(w, _, step) in &self.neighbors[v as usize] {
                if w == from {
                    continue;
                }
                let d = acc + step;
                if d < r {
                    out.push(w);
                    stack.push((w, v, d));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Empirical doubling constant: max greedy packing count over sampled
    /// centers and the given scales, converted by `packing_to_doubling`.
    pub fn estimate_doubling_constant(&self, scales: &[f64], lambda: f64) -> usize {
        assert!(lambda > 0.0 && lambda < 1.0);
        let mut centers: Vec<SampleId> = (0..self.node_count as u32).collect();
        let stride = (self.sample_count as usize / 64).max(1);
        centers.extend((self.node_count as u32..self.sample_count).step_by(stride));
        let mut worst = 1usize;
        for &s in scales {
            for &c in &centers {
                let ball = self.dd_ball(c, s + 1e-15);
                let mut picked: Vec<SampleId> = Vec::new();
                for &p in &ball {
                    if picked.iter().all(|&q| self.dd_samples(p, q) >= lambda * s) {
                        picked.push(p);
                    }
                }
                worst = worst.max(picked.len());
            }
        }
        packing_to_doubling(lambda, worst)
    }

    /// Connected components of the tree minus a cut set of samples, at
    /// grid-interval granularity. Two intervals belong to the same component
    /// iff they share a sample that is not cut. Returns per-interval
    /// component ids (dense, ordered by smallest interval id) and the count.
    pub fn components_cut_at(&self, cut: &[bool]) -> (Vec<u32>, usize) {
        let ni = self.interval_count as usize;
        let mut comp = vec![u32::MAX; ni];
        let mut count = 0usize;
        for iv in 0..ni {
            if comp[iv] != u32::MAX {
                continue;
            }
            let id = count as u32;
            count += 1;
            comp[iv] = id;
            let mut stack = vec![iv as u32];
            while let Some(cur) = stack.pop() {
                let (s, t) = self.interval_ends[cur as usize];
                for join in [s, t] {
                    if cut[join as usize] {
                        continue;
                    }
                    for &(_, other_iv, _) in &self.neighbors[join as usize] {
                        if comp[other_iv as usize] == u32::MAX {
                            comp[other_iv as usize] = id;
                            stack.push(other_iv);
                        }
                    }
                }
            }
        }
        (comp, count)
    }

    fn diam_check(&self) -> f64 {
        match &self.mode {
            MetricMode::Geodesic | MetricMode::Snowflake { .. } => {
                let raw = combinatorial_path_diameter(
                    self.node_count,
                    &self
                        .edges
                        .iter()
                        .map(|e| (e.a, e.b, e.len))
                        .collect::<Vec<_>>(),
                );
                match &self.mode {
                    MetricMode::Snowflake { eps } => raw.powf(*eps),
                    _ => raw,
                }
            }
            MetricMode::Table { dist } => dist.iter().fold(0.0f64, |m, &d| m.max(d)),
        }
    }

    fn compute_dfs_order(&self) -> Vec<SampleId> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.node_count];
        for (ei, e) in self.edges.iter().enumerate() {
            adj[e.a].push(ei);
            adj[e.b].push(ei);
        }
        for l in adj.iter_mut() {
            l.sort_unstable();
        }
        let mut emitted = vec![false; self.sample_count as usize];
        let mut order = Vec::with_capacity(self.sample_count as usize);
        let mut edge_done = vec![false; self.edges.len()];
        let mut stack = vec![0usize];
        let mut node_seen = vec![false; self.node_count];
        node_seen[0] = true;
        let emit = |s: SampleId, order: &mut Vec<SampleId>, emitted: &mut Vec<bool>| {
            if !emitted[s as usize] {
                emitted[s as usize] = true;
                order.push(s);
            }
        };
        while let Some(v) = stack.pop() {
            emit(v as u32, &mut order, &mut emitted);
            // First unfinished edge wins, so smaller edge ids go first.
            for &ei in adj[v].iter() {
                if edge_done[ei] {
                    continue;
                }
                edge_done[ei] = true;
                let e = &self.edges[ei];
                let w = if e.a == v { e.b } else { e.a };
                // Emit interiors in traversal direction.
                let steps: Vec<u32> = if e.a == v {
                    (1..e.grid).collect()
                } else {
                    (1..e.grid).rev().collect()
                };
                stack.push(v); // revisit to continue remaining edges
                for st in steps {
                    emit(e.first_interior + st - 1, &mut order, &mut emitted);
                }
                if !node_seen[w] {
                    node_seen[w] = true;
                    stack.push(w);
                }
                break;
            }
        }
        // Any leftovers (defensive; should not happen on a connected tree).
        for s in 0..self.sample_count {
            emit(s, &mut order, &mut emitted);
        }
        order
    }
}

fn edge_sample(e: &Edge, _ei: usize, pos: u32) -> SampleId {
    if pos == 0 {
        e.a as u32
    } else if pos == e.grid {
        e.b as u32
    } else {
        e.first_interior + pos - 1
    }
}

/// Max path length between combinatorial nodes (double sweep).
fn combinatorial_path_diameter(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(a, b, len) in edges {
        adj[a].push((b, len));
        adj[b].push((a, len));
    }
    let farthest = |start: usize| -> (usize, f64) {
        let mut dist = vec![f64::NEG_INFINITY; n];
        dist[start] = 0.0;
        let mut stack = vec![start];
        let (mut best, mut best_d) = (start, 0.0);
        while let Some(v) = stack.pop() {
            for &(w, len) in &adj[v] {
                if dist[w] == f64::NEG_INFINITY {
                    dist[w] = dist[v] + len;
                    if dist[w] > best_d {
                        best_d = dist[w];
                        best = w;
                    }
                    stack.push(w);
                }
            }
        }
        (best, best_d)
    };
    let (far, _) = farthest(0);
    farthest(far).1
}

/// Convert a greedy packing count into a doubling constant. A maximal
/// (lambda*s)-separated subset of a ball B(x, s) covers the ball with
/// lambda*s-balls, so for lambda <= 1/2 the packing count itself bounds the
/// number of half-radius balls needed. For larger lambda the covering is
/// iterated until the radius halves.
pub fn packing_to_doubling(lambda: f64, packing: usize) -> usize {
    if lambda <= 0.5 {
        packing
    } else {
        let k = (0.5f64.ln() / lambda.ln()).ceil() as u32;
        packing.saturating_pow(k)
    }
}

/// Rerooting pass: for every edge and side, the height and diameter of the
/// component hanging off that side (edge excluded, endpoint included).
fn compute_reach(n: usize, edges: &[Edge]) -> Vec<[Reach; 2]> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ei, e) in edges.iter().enumerate() {
        adj[e.a].push(ei);
        adj[e.b].push(ei);
    }
    let other = |ei: usize, v: usize| {
        let e = &edges[ei];
        if e.a == v {
            e.b
        } else {
            e.a
        }
    };
    let side_of = |ei: usize, v: usize| if edges[ei].a == v { 0usize } else { 1usize };

    let mut reach = vec![[Reach::default(); 2]; edges.len()];

    // Post-order: component away from the parent, seen from the child side.
    let root = 0usize;
    let mut order = Vec::with_capacity(n);
    let mut parent_edge = vec![usize::MAX; n];
    let mut stack = vec![root];
    let mut seen = vec![false; n];
    seen[root] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &ei in &adj[v] {
            let w = other(ei, v);
            if !seen[w] {
                seen[w] = true;
                parent_edge[w] = ei;
                stack.push(w);
            }
        }
    }
    for &v in order.iter().rev() {
        let pe = parent_edge[v];
        if pe == usize::MAX {
            continue;
        }
        let mut r = Reach::default();
        let mut arms: Vec<f64> = Vec::new();
        for &ei in &adj[v] {
            if ei == pe {
                continue;
            }
            let w = other(ei, v);
            let sub = reach[ei][side_of(ei, w)];
            arms.push(edges[ei].len + sub.height);
            r.diam = r.diam.max(sub.diam);
        }
        arms.sort_by(|a, b| b.partial_cmp(a).unwrap());
        r.height = arms.first().copied().unwrap_or(0.0);
        let pair = arms.first().copied().unwrap_or(0.0) + arms.get(1).copied().unwrap_or(0.0);
        r.diam = r.diam.max(pair);
        reach[pe][side_of(pe, v)] = r;
    }

    // Pre-order: component away from each child edge, seen from the parent.
    for &v in order.iter() {
        // Gather per incident edge the arm and diameter of the far side.
        let incident = &adj[v];
        let info: Vec<(usize, f64, f64)> = incident
            .iter()
            .map(|&ei| {
                let w = other(ei, v);
                let far = reach[ei][side_of(ei, w)];
                (ei, edges[ei].len + far.height, far.diam)
            })
            .collect();
        for &ei in incident {
            let w = other(ei, v);
            if parent_edge[w] != ei {
                continue; // only fill the downward-facing sides from here
            }
            let mut arms: Vec<f64> = Vec::new();
            let mut best_diam = 0.0f64;
            for &(fj, arm, diam) in &info {
                if fj == ei {
                    continue;
                }
                arms.push(arm);
                best_diam = best_diam.max(diam);
            }
            arms.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let height = arms.first().copied().unwrap_or(0.0);
            let pair = arms.first().copied().unwrap_or(0.0) + arms.get(1).copied().unwrap_or(0.0);
            reach[ei][side_of(ei, v)] = Reach {
                height,
                diam: best_diam.max(pair),
            };
        }
    }
    reach
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segment(len: f64, res: u32) -> MetricTree {
        MetricTree::build(&TreeSpec {
            node_count: 2,
            edges: vec![(0, 1, len)],
            metric: MetricMode::Geodesic,
            resolution: res,
        })
        .unwrap()
    }

    fn tripod(leg: f64, res: u32) -> MetricTree {
        MetricTree::build(&TreeSpec {
            node_count: 4,
            edges: vec![(3, 0, leg), (3, 1, leg), (3, 2, leg)],
            metric: MetricMode::Geodesic,
            resolution: res,
        })
        .unwrap()
    }

    /// Path v0 - v1 - v2 with table distances d01 = d12 = 1, d02 = 1.5.
    fn table_path(res: u32) -> MetricTree {
        let dist = vec![
            0.0, 1.0, 1.5, //
            1.0, 0.0, 1.0, //
            1.5, 1.0, 0.0,
        ];
        MetricTree::build(&TreeSpec {
            node_count: 3,
            edges: vec![(0, 1, 1.0), (1, 2, 1.0)],
            metric: MetricMode::Table { dist },
            resolution: res,
        })
        .unwrap()
    }

    #[test]
    fn segment_normalizes_to_unit_diameter() {
        let t = segment(2.0, 8);
        assert!((t.normalization_scale() - 0.5).abs() < 1e-12);
        let d = t
            .base_dist(PointRef::vertex(0), PointRef::vertex(1))
            .unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tripod_normalizes_by_leaf_to_leaf_path() {
        let t = tripod(1.0, 8);
        assert!((t.normalization_scale() - 0.5).abs() < 1e-12);
        let d = t
            .base_dist(PointRef::vertex(0), PointRef::vertex(1))
            .unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cycle_is_rejected() {
        let err = MetricTree::build(&TreeSpec {
            node_count: 3,
            edges: vec![(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)],
            metric: MetricMode::Geodesic,
            resolution: 4,
        })
        .unwrap_err();
        assert!(matches!(err, Error::CycleDetected { .. }));
    }

    #[test]
    fn disconnected_is_rejected() {
        let err = MetricTree::build(&TreeSpec {
            node_count: 4,
            edges: vec![(0, 1, 1.0), (2, 3, 1.0)],
            metric: MetricMode::Geodesic,
            resolution: 4,
        })
        .unwrap_err();
        assert!(matches!(err, Error::Disconnected(_)));
    }

    #[test]
    fn bad_snowflake_exponent_is_rejected() {
        for eps in [0.0, -0.3, 1.5] {
            let err = MetricTree::build(&TreeSpec {
                node_count: 2,
                edges: vec![(0, 1, 1.0)],
                metric: MetricMode::Snowflake { eps },
                resolution: 4,
            })
            .unwrap_err();
            assert!(matches!(err, Error::SnowflakeExponentOutOfRange(_)));
        }
    }

    #[test]
    fn arc_through_tripod_center() {
        let t = tripod(1.0, 8);
        let arc = t
            .arc_between(PointRef::vertex(0), PointRef::vertex(1))
            .unwrap();
        assert!(arc.samples().contains(&3u32));
        assert_eq!(arc.samples().first(), Some(&0u32));
        assert_eq!(arc.samples().last(), Some(&1u32));
    }

    #[test]
    fn degenerate_arc_is_single_point() {
        let t = segment(1.0, 8);
        let p = PointRef::interior(0, 3);
        let arc = t.arc_between(p, p).unwrap();
        assert!(arc.is_degenerate());
        assert_eq!(t.arc_diam(&arc), 0.0);
    }

    #[test]
    fn arc_on_path_graph_lists_all_nodes() {
        let t = MetricTree::build(&TreeSpec {
            node_count: 3,
            edges: vec![(0, 1, 1.0), (1, 2, 1.0)],
            metric: MetricMode::Geodesic,
            resolution: 2,
        })
        .unwrap();
        let arc = t
            .arc_between(PointRef::vertex(0), PointRef::vertex(2))
            .unwrap();
        let nodes: Vec<_> = arc
            .samples()
            .iter()
            .filter(|&&s| (s as usize) < t.node_count())
            .copied()
            .collect();
        assert_eq!(nodes, vec![0, 1, 2]);
    }

    #[test]
    fn base_dist_examples() {
        let t = segment(1.0, 8);
        assert!(
            (t.base_dist(PointRef::vertex(0), PointRef::vertex(1))
                .unwrap()
                - 1.0)
                .abs()
                < 1e-12
        );
        let p = PointRef::interior(0, 2);
        assert_eq!(t.base_dist(p, p).unwrap(), 0.0);

        // Snowflaked quarter-length sub-path: 0.25^0.5 = 0.5.
        let s = MetricTree::build(&TreeSpec {
            node_count: 2,
            edges: vec![(0, 1, 1.0)],
            metric: MetricMode::Snowflake { eps: 0.5 },
            resolution: 8,
        })
        .unwrap();
        let d = s
            .base_dist(PointRef::vertex(0), PointRef::interior(0, 2))
            .unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dd_equals_base_dist_in_geodesic_mode() {
        let t = tripod(1.0, 8);
        for x in 0..t.sample_count() {
            for y in 0..t.sample_count() {
                assert_eq!(t.dd_samples(x, y), t.base_dist_samples(x, y));
            }
        }
    }

    #[test]
    fn dd_snowflake_endpoints_realize_diameter() {
        let s = MetricTree::build(&TreeSpec {
            node_count: 2,
            edges: vec![(0, 1, 1.0)],
            metric: MetricMode::Snowflake { eps: 0.8 },
            resolution: 16,
        })
        .unwrap();
        let d = s.dd(PointRef::vertex(0), PointRef::vertex(1)).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    /// Brute-force oracle: dd as the max base distance over all sample
    /// pairs of the arc, with no shortcut.
    fn dd_oracle(t: &MetricTree, x: SampleId, y: SampleId) -> f64 {
        let arc = t.arc_between_samples(x, y);
        let s = arc.samples();
        let mut best = 0.0f64;
        for i in 0..s.len() {
            for j in i..s.len() {
                best = best.max(t.base_dist_samples(s[i], s[j]));
            }
        }
        best
    }

    #[test]
    fn table_mode_dd_matches_brute_force() {
        let t = table_path(4);
        // Normalization divides by 1.5.
        let dd02 = t.dd(PointRef::vertex(0), PointRef::vertex(2)).unwrap();
        assert!((dd02 - 1.0).abs() < 1e-12);
        let dd01 = t.dd(PointRef::vertex(0), PointRef::vertex(1)).unwrap();
        assert!((dd01 - 1.0 / 1.5).abs() < 1e-12);
        for x in 0..t.sample_count() {
            for y in x..t.sample_count() {
                let got = t.dd_samples(x, y);
                let want = dd_oracle(&t, x, y);
                assert!((got - want).abs() < 1e-12, "dd({x},{y}) {got} != {want}");
            }
        }
    }

    #[test]
    fn table_full_path_arc_diam() {
        let t = table_path(4);
        let arc = t
            .arc_between(PointRef::vertex(0), PointRef::vertex(2))
            .unwrap();
        assert!((t.arc_diam(&arc) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dd_is_a_metric_on_small_trees() {
        for t in [segment(1.0, 6), tripod(1.0, 4), table_path(4)] {
            let n = t.sample_count();
            for x in 0..n {
                for y in 0..n {
                    let dxy = t.dd_samples(x, y);
                    let dyx = t.dd_samples(y, x);
                    assert_eq!(dxy, dyx, "symmetry at ({x},{y})");
                    assert!(dxy >= t.base_dist_samples(x, y) - 1e-15);
                    if x != y {
                        assert!(dxy > 0.0);
                    }
                }
            }
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        let lhs = t.dd_samples(x, y);
                        let rhs = t.dd_samples(x, z) + t.dd_samples(z, y);
                        assert!(lhs <= rhs + 1e-12, "triangle at ({x},{y},{z})");
                    }
                }
            }
        }
    }

    #[test]
    fn one_bounded_turning_under_dd() {
        for t in [segment(1.0, 6), tripod(1.0, 4), table_path(4)] {
            for x in 0..t.sample_count() {
                for y in 0..t.sample_count() {
                    let arc = t.arc_between_samples(x, y);
                    let lhs = t.arc_diam(&arc);
                    let rhs = t.dd_samples(x, y);
                    assert!((lhs - rhs).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn table_mode_bounded_turning_factor() {
        // d01 = d12 = 1, d02 = 1.5: the path [0,2] has diameter 1.5 but
        // base distance 1.5 as well, so the tree is 1.5-bounded turning
        // against the sub-distances: dd <= 1.5 * base everywhere.
        let t = table_path(4);
        for x in 0..t.sample_count() {
            for y in 0..t.sample_count() {
                if x != y {
                    assert!(t.dd_samples(x, y) <= 1.5 * t.base_dist_samples(x, y) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn branch_data_midpoint_of_segment() {
        let t = segment(1.0, 8);
        let bd = t.branch_data(PointRef::interior(0, 4)).unwrap();
        assert_eq!(bd.kind, BranchKind::Double);
        assert!((bd.double_small_side().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn branch_data_tripod_center() {
        let t = tripod(1.0, 8);
        let bd = t.branch_data(PointRef::vertex(3)).unwrap();
        assert_eq!(bd.kind, BranchKind::Branch);
        assert!((bd.third_branch().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn branch_data_leaf() {
        let t = segment(1.0, 8);
        let bd = t.branch_data(PointRef::vertex(0)).unwrap();
        assert_eq!(bd.kind, BranchKind::Leaf);
        assert_eq!(bd.branch_diams.len(), 1);
    }

    #[test]
    fn branch_points_listing() {
        assert!(MetricTree::build(&TreeSpec {
            node_count: 3,
            edges: vec![(0, 1, 1.0), (1, 2, 1.0)],
            metric: MetricMode::Geodesic,
            resolution: 4,
        })
        .unwrap()
        .branch_points()
        .is_empty());

        let t = tripod(1.0, 4);
        assert_eq!(t.branch_points(), vec![PointRef::vertex(3)]);

        // Caterpillar with three internal degree-3 nodes.
        let t = MetricTree::build(&TreeSpec {
            node_count: 8,
            edges: vec![
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 3, 1.0),
                (1, 4, 1.0),
                (2, 5, 1.0),
                (0, 6, 1.0),
                (0, 7, 1.0),
            ],
            metric: MetricMode::Geodesic,
            resolution: 2,
        })
        .unwrap();
        let bp: Vec<_> = t.branch_points();
        assert_eq!(
            bp,
            vec![
                PointRef::vertex(0),
                PointRef::vertex(1),
                PointRef::vertex(2)
            ]
        );
    }

    /// Oracle for branch diameters: brute-force max pairwise base distance
    /// over each component of the sample set minus the point.
    fn branch_diams_oracle(t: &MetricTree, p: SampleId) -> Vec<f64> {
        let mut cut = vec![false; t.sample_count() as usize];
        cut[p as usize] = true;
        let (comp, count) = t.components_cut_at(&cut);
        let mut groups: Vec<Vec<SampleId>> = vec![Vec::new(); count];
        for iv in 0..t.interval_count() {
            let (a, b) = t.interval_endpoints(iv);
            groups[comp[iv as usize] as usize].extend([a, b]);
        }
        let mut out: Vec<f64> = groups
            .into_iter()
            .map(|mut g| {
                g.sort_unstable();
                g.dedup();
                let mut best = 0.0f64;
                for i in 0..g.len() {
                    for j in i + 1..g.len() {
                        best = best.max(t.base_dist_samples(g[i], g[j]));
                    }
                }
                best
            })
            .collect();
        out.sort_by(|a, b| b.partial_cmp(a).unwrap());
        out
    }

    #[test]
    fn branch_diams_match_brute_force_oracle() {
        let trees = [tripod(1.0, 6), table_path(4), segment(1.0, 8)];
        for t in &trees {
            for p in 0..t.sample_count() {
                let got = t.branch_data_sample(p).branch_diams;
                let want = branch_diams_oracle(t, p);
                assert_eq!(got.len(), want.len(), "count at {p}");
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w).abs() < 1e-9, "at {p}: {got:?} vs {want:?}");
                }
            }
        }
    }

    #[test]
    fn equal_split_geodesic_thirds() {
        let t = segment(1.0, 30);
        let arc = t
            .arc_between(PointRef::vertex(0), PointRef::vertex(1))
            .unwrap();
        let (pieces, common) = t.equal_diameter_split(&arc, 3).unwrap();
        assert_eq!(pieces.len(), 3);
        let tol = t.grid_tolerance();
        for p in &pieces {
            let d = t.arc_diam(p);
            assert!((d - 1.0 / 3.0).abs() <= tol + 1e-12, "piece diam {d}");
        }
        assert!(common >= 1.0 / 3.0 - tol);
    }

    #[test]
    fn equal_split_halves_at_midpoint() {
        let t = segment(1.0, 16);
        let arc = t
            .arc_between(PointRef::vertex(0), PointRef::vertex(1))
            .unwrap();
        let (pieces, _) = t.equal_diameter_split(&arc, 2).unwrap();
        let (a, b) = pieces[0].endpoints();
        assert_eq!(a, PointRef::vertex(0));
        assert_eq!(b, PointRef::interior(0, 8));
    }

    #[test]
    fn equal_split_snowflake_bisection() {
        let t = MetricTree::build(&TreeSpec {
            node_count: 2,
            edges: vec![(0, 1, 1.0)],
            metric: MetricMode::Snowflake { eps: 0.5 },
            resolution: 64,
        })
        .unwrap();
        let arc = t
            .arc_between(PointRef::vertex(0), PointRef::vertex(1))
            .unwrap();
        let (pieces, _) = t.equal_diameter_split(&arc, 2).unwrap();
        // Equal snowflaked diameters force the split at the length
        // midpoint; each piece then has diameter 0.5^0.5.
        let want = 0.5f64.powf(0.5);
        let tol = t.grid_tolerance();
        for p in &pieces {
            let d = t.arc_diam(p);
            assert!(
                (d - want).abs() <= tol + 1e-12,
                "piece diam {d} want {want}"
            );
        }
        // Brute-force pair check that the pieces really are subarc-optimal:
        // no other grid cut gives a strictly more balanced split.
        let samples = arc.samples();
        let mut best_gap = f64::INFINITY;
        for cut in 1..samples.len() - 1 {
            let left = arc.slice(&t, 0, cut);
            let right = arc.slice(&t, cut, samples.len() - 1);
            let gap = (t.arc_diam(&left) - t.arc_diam(&right)).abs();
            best_gap = best_gap.min(gap);
        }
        let got_gap = (t.arc_diam(&pieces[0]) - t.arc_diam(&pieces[1])).abs();
        assert!(got_gap <= best_gap + tol);
    }

    #[test]
    fn equal_split_rejects_too_coarse_grid() {
        let t = segment(1.0, 2);
        let arc = t
            .arc_between(PointRef::vertex(0), PointRef::vertex(1))
            .unwrap();
        assert!(matches!(
            t.equal_diameter_split(&arc, 5),
            Err(Error::ArcTooShort { .. })
        ));
    }

    #[test]
    fn split_pieces_cover_arc_without_overlap() {
        let t = tripod(1.0, 12);
        let arc = t
            .arc_between(PointRef::vertex(0), PointRef::vertex(1))
            .unwrap();
        for n in [2usize, 3, 4] {
            let (pieces, _) = t.equal_diameter_split(&arc, n).unwrap();
            let mut covered = 0usize;
            for (i, p) in pieces.iter().enumerate() {
                covered += p.interval_count();
                if i + 1 < pieces.len() {
                    assert_eq!(
                        p.samples().last(),
                        pieces[i + 1].samples().first(),
                        "pieces must abut"
                    );
                }
            }
            assert_eq!(covered, arc.interval_count());
        }
    }

    #[test]
    fn doubling_estimate_on_segment_is_small() {
        let t = segment(1.0, 64);
        let n = t.estimate_doubling_constant(&[0.5, 0.25], 0.5);
        assert!((2..=5).contains(&n), "估 {n}");
        // Scale larger than the diameter: bounded by the full net size.
        let big = t.estimate_doubling_constant(&[2.0], 0.5);
        assert!(big <= t.sample_count() as usize);
    }

    #[test]
    fn doubling_estimate_snowflake_exceeds_geodesic() {
        let g = segment(1.0, 64);
        let s = MetricTree::build(&TreeSpec {
            node_count: 2,
            edges: vec![(0, 1, 1.0)],
            metric: MetricMode::Snowflake { eps: 0.5 },
            resolution: 64,
        })
        .unwrap();
        let ng = g.estimate_doubling_constant(&[0.5, 0.25], 0.5);
        let ns = s.estimate_doubling_constant(&[0.5, 0.25], 0.5);
        assert!(ns > ng, "snowflake {ns} vs geodesic {ng}");
    }

    #[test]
    fn packing_conversion_is_monotone() {
        for lambda in [0.25, 0.5, 0.75] {
            let mut prev = 0;
            for np in 1..10 {
                let n = packing_to_doubling(lambda, np);
                assert!(n >= prev);
                prev = n;
            }
        }
    }

    #[test]
    fn dfs_order_is_a_permutation() {
        let t = tripod(1.0, 8);
        let mut seen = vec![false; t.sample_count() as usize];
        for &s in t.dfs_order() {
            assert!(!seen[s as usize]);
            seen[s as usize] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn point_roundtrip() {
        let t = tripod(1.0, 8);
        for s in 0..t.sample_count() {
            let p = t.point_of(s);
            assert_eq!(t.sample_of(p).unwrap(), s);
        }
        assert!(t.sample_of(PointRef::interior(0, 0)).is_err());
        assert!(t.sample_of(PointRef::interior(9, 1)).is_err());
    }
}
