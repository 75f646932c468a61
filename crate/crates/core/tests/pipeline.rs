//! End-to-end construction checks on small fixtures.

use treeunif::good_points::GoodPointParams;
use treeunif::subdivision::{neighbor_stats, validate_delta, verify_levels, Hierarchy, TileKind};
use treeunif::tree::{MetricMode, MetricTree, TreeSpec};
use treeunif::weights::{assign_weights, verify_weight_bounds};
use treeunif::{ratio, PointRef};

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
fn hierarchy_on_segment() {
    let t = segment(2048);
    let h = Hierarchy::build(&t, 0.22, 3, 1.0, 0.05).unwrap();
    verify_levels(&t, &h).unwrap();

    // Level-1 sanity per the tile sandwich.
    for n in 1..=h.depth {
        let scale = h.delta.powi(n as i32);
        for tile in &h.levels[n].tiles {
            assert!(
                tile.diam >= scale - t.grid_tolerance(),
                "tile {}:{} diam {} < {}",
                n,
                tile.index,
                tile.diam,
                scale
            );
            assert!(
                tile.diam <= 3.0 * h.beta * scale + t.grid_tolerance(),
                "tile {}:{} diam {} too large",
                n,
                tile.index,
                tile.diam
            );
        }
    }

    // Parent/child structure.
    for n in 1..=h.depth {
        for tile in &h.levels[n].tiles {
            let p = tile.parent.unwrap();
            let parent = &h.levels[n - 1].tiles[p as usize];
            assert!(parent.children.contains(&tile.index));
            // Children samples cover the parent.
            for &s in &tile.samples {
                assert!(parent.contains_sample(s));
            }
        }
    }
    for n in 0..h.depth {
        for tile in &h.levels[n].tiles {
            let mut covered: Vec<u32> = Vec::new();
            for &c in &tile.children {
                covered.extend(&h.levels[n + 1].tiles[c as usize].samples);
            }
            covered.sort_unstable();
            covered.dedup();
            assert_eq!(
                covered, tile.samples,
                "children must cover tile {}:{}",
                n, tile.index
            );
        }
    }

    let report = validate_delta(&t, &h);
    assert!(report.pass(), "{:?}", report.checks);

    let stats = neighbor_stats(&h);
    assert!(stats.k >= 3);

    let wa = assign_weights(&t, &h, ratio(1, 3 * stats.k as i64), stats.k).unwrap();
    let wreport = verify_weight_bounds(&t, &h, &wa);
    assert!(wreport.pass(), "{:?}", wreport.checks);
}

#[test]
fn vertices_lie_in_two_tiles() {
    let t = segment(1024);
    let h = Hierarchy::build(&t, 0.25, 2, 1.0, 0.05).unwrap();
    for n in 1..=h.depth {
        let lvl = &h.levels[n];
        for &v in &lvl.vertices {
            let tiles = h.tiles_containing(&t, t.point_of(v), n).unwrap();
            assert_eq!(tiles.len(), 2);
            assert_ne!(tiles[0], tiles[1]);
        }
        // Interior points lie in exactly one tile.
        let interior = t.sample_of(PointRef::interior(0, 1)).unwrap();
        if !lvl.vertex_set[interior as usize] {
            let tiles = h.tiles_containing(&t, t.point_of(interior), n).unwrap();
            assert_eq!(tiles.len(), 1);
        }
    }
}

#[test]
fn kinds_match_boundary_sizes() {
    let t = segment(1024);
    let h = Hierarchy::build(&t, 0.25, 2, 1.0, 0.05).unwrap();
    for n in 1..=h.depth {
        for tile in &h.levels[n].tiles {
            match tile.boundary.len() {
                0 => panic!("cut level tile without boundary"),
                1 => assert_eq!(tile.kind, TileKind::Leaf),
                _ => assert_eq!(tile.kind, TileKind::Arc),
            }
        }
    }
}

#[test]
fn good_set_respects_oversized_scale() {
    let t = segment(64);
    let params = GoodPointParams::new(1.0, 0.05, 0.9);
    let v = treeunif::good_points::maximal_good_set(&t, &params, &[]).unwrap();
    // At scale 0.9 no double point has both sides >= 0.9.
    assert!(v.is_empty());
}
