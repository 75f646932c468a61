//! The end-to-end run: ingest or generate a tree, build the decomposition,
//! verify the quantitative claims, and write artifacts.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;

use treeunif::analysis::{
    hausdorff_bound, verify_rho_doubling, verify_weak_qs, DimensionReport, QsReport,
};
use treeunif::export::{self, parse_rational, to_json_stable, TreeDocument};
use treeunif::generators::GeneratorSpec;
use treeunif::pipeline::{build_pipeline, AttemptLog, Pipeline, PipelineConfig};
use treeunif::rho::{
    build_geodesic_skeleton, geodesic_check, tile_rho_diam, GeodesicReport, RhoSpace,
};
use treeunif::subdivision::verify_levels;
use treeunif::weights::verify_weight_bounds;
use treeunif::{ratio, MetricTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub generate: Option<String>,
    pub resolution: u32,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub eps0: Option<String>,
    pub depth: Option<usize>,
    pub alphas: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub svg: bool,
    pub report: ReportFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            generate: Some("segment".into()),
            resolution: 1024,
            beta: None,
            gamma: None,
            delta: None,
            eps0: None,
            depth: None,
            alphas: vec![1.2, 1.5, 2.0],
            samples: 500,
            seed: 7,
            out: PathBuf::from("out"),
            svg: false,
            report: ReportFormat::Json,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub certified_pass: bool,
    pub out_dir: PathBuf,
    pub summary: String,
}

#[derive(Serialize)]
struct LevelIncrementReport {
    pairs: usize,
    comparisons: usize,
    violations: usize,
    witness: Option<String>,
}

#[derive(Serialize)]
struct TileRhoReport {
    tiles: usize,
    failures: usize,
    witness: Option<String>,
}

#[derive(Serialize)]
struct DoublingReport {
    base_metric: usize,
    rho_metric: usize,
}

#[derive(Serialize)]
struct Reports {
    tree: TreeSummary,
    thread_cap: Option<usize>,
    constants: treeunif::good_points::ConstantsBundle,
    attempts: Vec<AttemptLog>,
    vertex_sets_valid: bool,
    delta_checks: treeunif::subdivision::DeltaReport,
    weight_checks: treeunif::weights::WeightReport,
    level_increment: LevelIncrementReport,
    geodesic: GeodesicReport,
    tile_rho: TileRhoReport,
    weak_qs: QsReport,
    doubling: DoublingReport,
    dimensions: Vec<DimensionReport>,
    certified: bool,
}

#[derive(Serialize)]
struct TreeSummary {
    nodes: usize,
    edges: usize,
    samples: u32,
    mode: String,
    resolution: u32,
    grid_tolerance: f64,
}

pub fn run(cfg: &RunConfig) -> anyhow::Result<RunOutcome> {
    let thread_cap = std::env::var("TREEUNIF_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());

    let tree = load_tree(cfg)?;
    let pcfg = PipelineConfig {
        beta: cfg.beta,
        gamma: cfg.gamma,
        delta: cfg.delta,
        depth: cfg.depth,
        eps0: cfg.eps0.as_deref().map(parse_rational).transpose()?,
        retry_cap: 8,
        estimate_doubling: true,
    };
    let pipeline = build_pipeline(tree, &pcfg).context("pipeline build failed")?;
    let rs = pipeline.rho_space();

    let vertex_sets_valid = verify_levels(&pipeline.tree, &pipeline.hierarchy).is_ok();
    let weight_checks =
        verify_weight_bounds(&pipeline.tree, &pipeline.hierarchy, &pipeline.weights);
    let level_increment = level_increment_sweep(&rs, cfg.samples, cfg.seed)?;
    let geodesic = geodesic_check(&rs, cfg.samples, cfg.seed)?;
    let tile_rho = tile_rho_sweep(&rs)?;
    let weak_qs = verify_weak_qs(&rs, cfg.samples, cfg.seed)?;
    let doubling = DoublingReport {
        base_metric: pipeline
            .tree
            .estimate_doubling_constant(&[0.5, 0.25, 0.125], 0.5),
        rho_metric: verify_rho_doubling(&rs, &[0.25, 0.125], 0.5)?,
    };
    let k = pipeline.stats.k.max(3);
    let dimensions: Vec<DimensionReport> = cfg
        .alphas
        .iter()
        .map(|&a| hausdorff_bound(&rs, k, a))
        .collect::<treeunif::Result<_>>()?;

    let certified = vertex_sets_valid
        && pipeline.delta_report.pass()
        && weight_checks.pass()
        && level_increment.violations == 0
        && geodesic.violations == 0
        && tile_rho.failures == 0
        && dimensions.iter().all(|d| d.per_tile_violations == 0);

    let reports = Reports {
        tree: TreeSummary {
            nodes: pipeline.tree.node_count(),
            edges: pipeline.tree.edges().len(),
            samples: pipeline.tree.sample_count(),
            mode: pipeline.tree.mode().name().into(),
            resolution: pipeline.tree.resolution(),
            grid_tolerance: pipeline.tree.grid_tolerance(),
        },
        thread_cap,
        constants: pipeline.constants.clone(),
        attempts: pipeline.attempts.clone(),
        vertex_sets_valid,
        delta_checks: pipeline.delta_report.clone(),
        weight_checks,
        level_increment,
        geodesic,
        tile_rho,
        weak_qs,
        doubling,
        dimensions,
        certified,
    };

    write_artifacts(cfg, &pipeline, &rs, &reports)?;

    let summary = text_report(&reports);
    Ok(RunOutcome {
        certified_pass: certified,
        out_dir: cfg.out.clone(),
        summary,
    })
}

fn load_tree(cfg: &RunConfig) -> anyhow::Result<MetricTree> {
    match (&cfg.input, &cfg.generate) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let doc: TreeDocument = serde_json::from_str(&text)?;
            Ok(doc.build()?)
        }
        (None, Some(spec)) => {
            let gs = GeneratorSpec::parse(spec, cfg.resolution)?;
            Ok(treeunif::generators::generate(&gs)?)
        }
        (None, None) => bail!("either --input or --generate is required"),
    }
}

fn level_increment_sweep(
    rs: &RhoSpace,
    samples: usize,
    seed: u64,
) -> anyhow::Result<LevelIncrementReport> {
    use treeunif::Rational;
    let depth = rs.depth();
    let ns = rs.tree.sample_count();
    // Deterministic pair sample from a seeded linear walk.
    let mut pairs = Vec::with_capacity(samples);
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state % ns as u64) as u32
    };
    while pairs.len() < samples {
        let a = next();
        let b = next();
        if a != b {
            pairs.push((a, b));
        }
    }
    let mut comparisons = 0usize;
    let mut violations = 0usize;
    let mut witness = None;
    for (a, b) in pairs.iter().copied() {
        let values: Vec<Rational> = (1..=depth)
            .map(|n| rs.rho_n_samples(a, b, n))
            .collect::<treeunif::Result<_>>()?;
        for n in 1..=depth {
            let bound = &values[n - 1] + ratio(1, 3).pow(n as i32);
            for k in n..=depth {
                comparisons += 1;
                if values[k - 1] > bound {
                    violations += 1;
                    witness.get_or_insert(format!(
                        "pair {}-{} at n={n}, k={k}",
                        rs.tree.point_of(a),
                        rs.tree.point_of(b)
                    ));
                }
            }
        }
    }
    Ok(LevelIncrementReport {
        pairs: samples,
        comparisons,
        violations,
        witness,
    })
}

fn tile_rho_sweep(rs: &RhoSpace) -> anyhow::Result<TileRhoReport> {
    let mut tiles = 0usize;
    let mut failures = 0usize;
    let mut witness = None;
    for n in 0..=rs.depth() {
        for tile in &rs.hierarchy.levels[n].tiles {
            tiles += 1;
            let d = tile_rho_diam(rs, (n, tile.index))?;
            if !d.ok {
                failures += 1;
                witness.get_or_insert(format!("tile {}:{}", n, tile.index));
            }
        }
    }
    Ok(TileRhoReport {
        tiles,
        failures,
        witness,
    })
}

fn write_artifacts(
    cfg: &RunConfig,
    pipeline: &Pipeline,
    rs: &RhoSpace,
    reports: &Reports,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    let decomp =
        export::decomposition_document(&pipeline.tree, &pipeline.hierarchy, &pipeline.weights);
    write_file(
        &cfg.out.join("decomposition.json"),
        &to_json_stable(&decomp)?,
    )?;

    let skeleton = build_geodesic_skeleton(rs)?;
    let sk_doc = export::skeleton_document(&skeleton);
    write_file(&cfg.out.join("skeleton.json"), &to_json_stable(&sk_doc)?)?;
    write_file(&cfg.out.join("skeleton.dot"), &skeleton.to_dot())?;

    write_file(&cfg.out.join("reports.json"), &to_json_stable(reports)?)?;
    if cfg.report == ReportFormat::Text {
        write_file(&cfg.out.join("reports.txt"), &text_report(reports))?;
    }

    if cfg.svg {
        for n in 0..=pipeline.hierarchy.depth {
            let svg = crate::render::render_svg(
                &pipeline.tree,
                &pipeline.hierarchy,
                &pipeline.weights,
                n,
            )?;
            write_file(&cfg.out.join(format!("level_{n}.svg")), &svg)?;
        }
    }
    Ok(())
}

fn write_file(path: &Path, content: &str) -> anyhow::Result<()> {
    std::fs::write(path, content.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn text_report(r: &Reports) -> String {
    let mut out = String::new();
    let mut line = |name: &str, pass: bool, extra: &str| {
        out.push_str(&format!(
            "{} {:<36} {}\n",
            if pass { "PASS" } else { "FAIL" },
            name,
            extra
        ));
    };
    line("vertex-sets", r.vertex_sets_valid, "");
    for c in &r.delta_checks.checks {
        line(&c.name, c.pass, c.witness.as_deref().unwrap_or(""));
    }
    for c in &r.weight_checks.checks {
        line(&c.name, c.pass, c.witness.as_deref().unwrap_or(""));
    }
    line(
        "level-increment-bound",
        r.level_increment.violations == 0,
        &format!("{} comparisons", r.level_increment.comparisons),
    );
    line(
        "geodesic-additivity",
        r.geodesic.violations == 0,
        &format!("worst fraction {:.3}", r.geodesic.worst_fraction),
    );
    line(
        "tile-rho-diameter",
        r.tile_rho.failures == 0,
        &format!("{} tiles", r.tile_rho.tiles),
    );
    for d in &r.dimensions {
        line(
            &format!("hausdorff-alpha-{}", d.alpha),
            d.per_tile_violations == 0,
            &format!("L = {:.4}, certified: {}", d.l_value, d.certified),
        );
    }
    out.push_str(&format!(
        "info weak-qs H ~ {:.3} over {} admitted triples\n",
        r.weak_qs.h_empirical, r.weak_qs.admitted
    ));
    out.push_str(&format!(
        "info doubling: base {} rho {}\n",
        r.doubling.base_metric, r.doubling.rho_metric
    ));
    out.push_str(&format!(
        "info dimension upper bound grid-alpha: {}\n",
        r.dimensions
            .first()
            .map(|d| d.dimension_upper_bound)
            .unwrap_or(f64::NAN)
    ));
    out.push_str(if r.certified {
        "certified: all checks pass\n"
    } else {
        "certified: FAILURES PRESENT\n"
    });
    out
}
