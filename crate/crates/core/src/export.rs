//! JSON schemas for trees, decompositions, skeletons, and reports.
//! Rationals travel as "num/den" strings so files stay exact and
//! byte-stable across runs.

use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::point::PointRef;
use crate::rho::GeodesicSkeleton;
use crate::subdivision::Hierarchy;
use crate::tree::{MetricMode, MetricTree, TreeSpec};
use crate::weights::WeightAssignment;
use crate::Rational;

pub fn ser_rational<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

pub fn parse_rational(text: &str) -> Result<Rational> {
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text.trim(), "1"),
    };
    let n = BigInt::from_str(num)
        .map_err(|e| Error::BadDistanceTable(format!("bad rational {text}: {e}")))?;
    let d = BigInt::from_str(den)
        .map_err(|e| Error::BadDistanceTable(format!("bad rational {text}: {e}")))?;
    if d == BigInt::from(0) {
        return Err(Error::BadDistanceTable(format!(
            "zero denominator in {text}"
        )));
    }
    Ok(Rational::new(n, d))
}

pub fn rational_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

// ----------------------------------------------------------------------
// Tree input document
// ----------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<crate::generators::GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<EdgeDocument>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeDocument {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricDocument {
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_s: Option<f64>,
    /// Row-major symmetric node-distance table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<f64>>,
}

impl TreeDocument {
    /// Resolve the document into a built tree; a `generate` entry wins
    /// over the explicit node/edge listing.
    pub fn build(&self) -> Result<MetricTree> {
        if let Some(spec) = &self.generate {
            return crate::generators::generate(spec);
        }
        let nodes = self
            .nodes
            .as_ref()
            .ok_or_else(|| Error::InvalidGenerator("missing nodes".into()))?;
        let edges = self
            .edges
            .as_ref()
            .ok_or_else(|| Error::InvalidGenerator("missing edges".into()))?;
        // Node ids may be arbitrary; remap to dense indices by listing order.
        let index_of = |id: usize| -> Result<usize> {
            nodes
                .iter()
                .position(|&n| n == id)
                .ok_or(Error::NodeOutOfRange(id))
        };
        let mapped: Result<Vec<(usize, usize, f64)>> = edges
            .iter()
            .map(|e| Ok((index_of(e.a)?, index_of(e.b)?, e.length)))
            .collect();
        let metric = match &self.metric {
            None => MetricMode::Geodesic,
            Some(m) => match m.mode.as_str() {
                "geodesic" => MetricMode::Geodesic,
                "snowflake" => MetricMode::Snowflake {
                    eps: m.epsilon_s.unwrap_or(1.0),
                },
                "sampled-table" | "table" => MetricMode::Table {
                    dist: m
                        .table
                        .clone()
                        .ok_or_else(|| Error::BadDistanceTable("missing table".into()))?,
                },
                other => {
                    return Err(Error::InvalidGenerator(format!(
                        "unknown metric mode {other}"
                    )))
                }
            },
        };
        MetricTree::build(&TreeSpec {
            node_count: nodes.len(),
            edges: mapped?,
            metric,
            resolution: self.resolution.unwrap_or(256),
        })
    }
}

// ----------------------------------------------------------------------
// Decomposition export
// ----------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DecompositionDocument {
    pub delta: f64,
    pub beta: f64,
    pub gamma: f64,
    pub depth: usize,
    pub eps0: String,
    pub levels: Vec<LevelDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LevelDocument {
    pub n: usize,
    pub vertices: Vec<PointRef>,
    pub tiles: Vec<TileDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TileDocument {
    pub id: u32,
    pub level: usize,
    pub kind: String,
    pub boundary: Vec<PointRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<u32>,
    /// (edge, first interval, last interval), edge-local offsets.
    pub segments: Vec<(usize, u32, u32)>,
    pub weight: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub main: Option<(PointRef, PointRef)>,
}

pub fn decomposition_document(
    tree: &MetricTree,
    h: &Hierarchy,
    wa: &WeightAssignment,
) -> DecompositionDocument {
    DecompositionDocument {
        delta: h.delta,
        beta: h.beta,
        gamma: h.gamma,
        depth: h.depth,
        eps0: rational_string(&wa.eps0),
        levels: h
            .levels
            .iter()
            .map(|lvl| LevelDocument {
                n: lvl.n,
                vertices: lvl.vertices.iter().map(|&v| tree.point_of(v)).collect(),
                tiles: lvl
                    .tiles
                    .iter()
                    .map(|t| TileDocument {
                        id: t.index,
                        level: t.level,
                        kind: match t.kind {
                            crate::subdivision::TileKind::Root => "root".into(),
                            crate::subdivision::TileKind::Leaf => "leaf".into(),
                            crate::subdivision::TileKind::Arc => "arc".into(),
                        },
                        boundary: t.boundary.iter().map(|&v| tree.point_of(v)).collect(),
                        parent: t.parent,
                        segments: t.segments.clone(),
                        weight: rational_string(wa.weight((t.level, t.index))),
                        main: wa
                            .main_vertices((t.level, t.index))
                            .map(|(p, q)| (tree.point_of(p), tree.point_of(q))),
                    })
                    .collect(),
            })
            .collect(),
    }
}

// ----------------------------------------------------------------------
// Skeleton export
// ----------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SkeletonDocument {
    pub vertices: Vec<PointRef>,
    pub edges: Vec<SkeletonEdgeDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SkeletonEdgeDocument {
    pub a: PointRef,
    pub b: PointRef,
    pub length: String,
    pub exact: bool,
    pub slack: String,
}

pub fn skeleton_document(sk: &GeodesicSkeleton) -> SkeletonDocument {
    SkeletonDocument {
        vertices: sk.vertices.clone(),
        edges: sk
            .edges
            .iter()
            .map(|e| SkeletonEdgeDocument {
                a: e.a,
                b: e.b,
                length: rational_string(&e.length),
                exact: e.exact,
                slack: rational_string(&e.slack),
            })
            .collect(),
    }
}

/// Stable pretty JSON with a trailing newline.
pub fn to_json_stable<T: Serialize>(value: &T) -> Result<String> {
    let mut out = serde_json::to_string_pretty(value)?;
    out.push('\n');
    Ok(out)
}
