//! Deterministic SVG rendering of one level of the tile decomposition.
//!
//! The layout is a recursive angular embedding rooted at node 0: every
//! subtree gets an angular sector proportional to its leaf count and
//! edges radiate outward with drawn length proportional to their metric
//! diameter. The drawing is schematic, not isometric.

use std::fmt::Write as _;

use treeunif::rho::rational_to_f64;
use treeunif::subdivision::Hierarchy;
use treeunif::tree::MetricTree;
use treeunif::weights::WeightAssignment;
use treeunif::PointRef;

const CANVAS: f64 = 900.0;
const MARGIN: f64 = 40.0;

pub fn render_svg(
    tree: &MetricTree,
    h: &Hierarchy,
    wa: &WeightAssignment,
    level: usize,
) -> anyhow::Result<String> {
    if level > h.depth {
        anyhow::bail!("level {level} not built (depth {})", h.depth);
    }
    let pos = layout(tree);
    let lvl = &h.levels[level];

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {c} {c}\" width=\"{c}\" height=\"{c}\">",
        c = fmt(CANVAS + 2.0 * MARGIN)
    )?;
    write!(
        svg,
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g stroke-linecap=\"round\">\n"
    )?;

    // Tiles as colored polyline segments along edges.
    for tile in &lvl.tiles {
        let color = tile_color(tile.index);
        for &(ei, lo, hi) in &tile.segments {
            let e = &tree.edges()[ei];
            let a = interp(&pos, tree, ei, lo as f64 / e.grid as f64);
            let b = interp(&pos, tree, ei, (hi + 1) as f64 / e.grid as f64);
            writeln!(
                svg,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"4\"/>",
                fmt(a.0),
                fmt(a.1),
                fmt(b.0),
                fmt(b.1),
                color
            )?;
        }
    }

    // Level vertices as dots.
    for &v in &lvl.vertices {
        let p = point_pos(&pos, tree, v);
        writeln!(
            svg,
            "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"black\"/>",
            fmt(p.0),
            fmt(p.1)
        )?;
    }

    // Main-vertex pairs with relative weights.
    for tile in &lvl.tiles {
        if let Some((p, q)) = wa.main_vertices((level, tile.index)) {
            let lam = wa.relative_weight(h, (level, tile.index));
            for s in [p, q] {
                let c = point_pos(&pos, tree, s);
                writeln!(
                    svg,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"6\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>",
                    fmt(c.0),
                    fmt(c.1)
                )?;
            }
            let mid = midpoint(point_pos(&pos, tree, p), point_pos(&pos, tree, q));
            writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"black\">{:.4}</text>",
                fmt(mid.0 + 4.0),
                fmt(mid.1 - 4.0),
                rational_to_f64(&lam)
            )?;
        }
    }

    writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"14\">level {} | {} tiles | edge lengths drawn proportional to metric diameter</text>",
        fmt(MARGIN),
        fmt(MARGIN / 2.0),
        level,
        lvl.tiles.len()
    )?;
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

fn fmt(x: f64) -> String {
    format!("{x:.4}")
}

fn midpoint(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0)
}

fn tile_color(i: u32) -> String {
    // Golden-angle hue walk keeps adjacent ids distinguishable.
    let hue = (i as f64 * 137.508) % 360.0;
    format!("hsl({}, 65%, 52%)", fmt(hue))
}

/// Node coordinates of the angular embedding, in canvas units.
fn layout(tree: &MetricTree) -> Vec<(f64, f64)> {
    let n = tree.node_count();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (ei, e) in tree.edges().iter().enumerate() {
        adj[e.a].push((ei, e.b));
        adj[e.b].push((ei, e.a));
    }
    // Leaf counts per subtree rooted away from node 0.
    let mut order = Vec::with_capacity(n);
    let mut parent = vec![usize::MAX; n];
    let mut stack = vec![0usize];
    let mut seen = vec![false; n];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(_, w) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = v;
                stack.push(w);
            }
        }
    }
    let mut leaves = vec![1usize; n];
    for &v in order.iter().rev() {
        let kids: Vec<usize> = adj[v]
            .iter()
            .map(|&(_, w)| w)
            .filter(|&w| parent[w] == v)
            .collect();
        if !kids.is_empty() {
            leaves[v] = kids.iter().map(|&w| leaves[w]).sum();
        }
    }

    // Radial placement: drawn edge length proportional to the edge's
    // metric diameter.
    let draw_len = |ei: usize| {
        let e = &tree.edges()[ei];
        tree.base_dist_samples(e.a as u32, e.b as u32)
    };
    let mut pos = vec![(0.0f64, 0.0f64); n];
    let center = CANVAS / 2.0 + MARGIN;
    pos[0] = (center, center);
    // (node, sector start, sector end)
    let mut sectors = vec![(0usize, 0.0f64, std::f64::consts::TAU)];
    while let Some((v, lo, hi)) = sectors.pop() {
        let kids: Vec<usize> = adj[v]
            .iter()
            .map(|&(_, w)| w)
            .filter(|&w| parent[w] == v)
            .collect();
        if kids.is_empty() {
            continue;
        }
        let total: usize = kids.iter().map(|&w| leaves[w]).sum();
        let mut at = lo;
        for &w in &kids {
            let span = (hi - lo) * leaves[w] as f64 / total as f64;
            let angle = at + span / 2.0;
            let ei = adj[v]
                .iter()
                .find(|&&(_, x)| x == w)
                .map(|&(ei, _)| ei)
                .unwrap();
            let r = draw_len(ei) * CANVAS * 0.42;
            pos[w] = (pos[v].0 + r * angle.cos(), pos[v].1 + r * angle.sin());
            sectors.push((w, at, at + span));
            at += span;
        }
    }
    pos
}

fn point_pos(pos: &[(f64, f64)], tree: &MetricTree, s: treeunif::SampleId) -> (f64, f64) {
    match tree.point_of(s) {
        PointRef::Vertex(v) => pos[v],
        PointRef::Interior { edge, step } => {
            let e = &tree.edges()[edge];
            interp(pos, tree, edge, step as f64 / e.grid as f64)
        }
    }
}

fn interp(pos: &[(f64, f64)], tree: &MetricTree, ei: usize, t: f64) -> (f64, f64) {
    let e = &tree.edges()[ei];
    let (ax, ay) = pos[e.a];
    let (bx, by) = pos[e.b];
    (ax + (bx - ax) * t, ay + (by - ay) * t)
}
