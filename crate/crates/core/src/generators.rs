//! Deterministic test-tree factories: plain and snowflaked segments,
//! finite truncations of the trivalent self-similar tree, and random
//! attachment trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{MetricMode, MetricTree, TreeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LengthLaw {
    /// All edges length 1.
    Unit,
    /// Uniform in [0.5, 1.5).
    #[default]
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Segment,
    SnowflakeSegment {
        epsilon_s: f64,
    },
    /// Self-similar trivalent tree truncated at the given depth: starting
    /// from a segment, every edge is split at its midpoint and a new edge
    /// of half its length is attached there, `depth` times.
    Csst {
        depth: usize,
    },
    Random {
        nodes: usize,
        seed: u64,
        #[serde(default)]
        length_law: LengthLaw,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default = "default_resolution")]
    pub resolution: u32,
}

fn default_resolution() -> u32 {
    256
}

impl GeneratorSpec {
    /// Compact CLI syntax: `segment`, `snowflake:EPS`, `csst:DEPTH`,
    /// `random:NODES:SEED[:unit]`.
    pub fn parse(text: &str, resolution: u32) -> Result<GeneratorSpec> {
        let parts: Vec<&str> = text.split(':').collect();
        let family = match parts.as_slice() {
            ["segment"] => Family::Segment,
            ["snowflake", eps] => Family::SnowflakeSegment {
                epsilon_s: eps
                    .parse()
                    .map_err(|_| Error::InvalidGenerator(text.into()))?,
            },
            ["csst", d] => Family::Csst {
                depth: d
                    .parse()
                    .map_err(|_| Error::InvalidGenerator(text.into()))?,
            },
            ["random", n, s] | ["random", n, s, "uniform"] => Family::Random {
                nodes: n
                    .parse()
                    .map_err(|_| Error::InvalidGenerator(text.into()))?,
                seed: s
                    .parse()
                    .map_err(|_| Error::InvalidGenerator(text.into()))?,
                length_law: LengthLaw::Uniform,
            },
            ["random", n, s, "unit"] => Family::Random {
                nodes: n
                    .parse()
                    .map_err(|_| Error::InvalidGenerator(text.into()))?,
                seed: s
                    .parse()
                    .map_err(|_| Error::InvalidGenerator(text.into()))?,
                length_law: LengthLaw::Unit,
            },
            _ => return Err(Error::InvalidGenerator(text.into())),
        };
        Ok(GeneratorSpec { family, resolution })
    }

    pub fn label(&self) -> String {
        match &self.family {
            Family::Segment => "segment".into(),
            Family::SnowflakeSegment { epsilon_s } => format!("snowflake:{epsilon_s}"),
            Family::Csst { depth } => format!("csst:{depth}"),
            Family::Random { nodes, seed, .. } => format!("random:{nodes}:{seed}"),
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<MetricTree> {
    let res = spec.resolution;
    match &spec.family {
        Family::Segment => MetricTree::build(&TreeSpec {
            node_count: 2,
            edges: vec![(0, 1, 1.0)],
            metric: MetricMode::Geodesic,
            resolution: res,
        }),
        Family::SnowflakeSegment { epsilon_s } => MetricTree::build(&TreeSpec {
            node_count: 2,
            edges: vec![(0, 1, 1.0)],
            metric: MetricMode::Snowflake { eps: *epsilon_s },
            resolution: res,
        }),
        Family::Csst { depth } => {
            if *depth < 1 {
                return Err(Error::InvalidGenerator("csst depth must be >= 1".into()));
            }
            let (node_count, edges) = csst_edges(*depth);
            MetricTree::build(&TreeSpec {
                node_count,
                edges,
                metric: MetricMode::Geodesic,
                resolution: res,
            })
        }
        Family::Random {
            nodes,
            seed,
            length_law,
        } => {
            if *nodes < 2 {
                return Err(Error::InvalidGenerator(
                    "random tree needs >= 2 nodes".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut edges = Vec::with_capacity(nodes - 1);
            for i in 1..*nodes {
                let parent = rng.gen_range(0..i);
                let len = match length_law {
                    LengthLaw::Unit => 1.0,
                    LengthLaw::Uniform => rng.gen_range(0.5..1.5),
                };
                edges.push((parent, i, len));
            }
            MetricTree::build(&TreeSpec {
                node_count: *nodes,
                edges,
                metric: MetricMode::Geodesic,
                resolution: res,
            })
        }
    }
}

/// Edge list of the depth-d self-similar tree. One refinement step splits
/// every edge at its midpoint and hangs a half-length edge there.
fn csst_edges(depth: usize) -> (usize, Vec<(usize, usize, f64)>) {
    let mut node_count = 2usize;
    let mut edges: Vec<(usize, usize, f64)> = vec![(0, 1, 1.0)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(edges.len() * 3);
        for (a, b, len) in edges.drain(..) {
            let mid = node_count;
            let tip = node_count + 1;
            node_count += 2;
            next.push((a, mid, len / 2.0));
            next.push((mid, b, len / 2.0));
            next.push((mid, tip, len / 2.0));
        }
        edges = next;
    }
    (node_count, edges)
}
