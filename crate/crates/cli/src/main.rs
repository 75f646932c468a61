use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use treeunif_cli::{run, ReportFormat, RunConfig};

/// Decompose a finite metric tree into a nested tile hierarchy, assign
/// recursive weights, construct the induced geodesic distance, and verify
/// the quantitative properties of the construction.
#[derive(Parser, Debug)]
#[command(name = "treeunif", version, about)]
struct Args {
    /// Tree input JSON (nodes/edges/metric/resolution or {"generate": ...}).
    #[arg(long, conflicts_with = "generate")]
    input: Option<PathBuf>,

    /// Generator spec: segment | snowflake:EPS | csst:DEPTH | random:N:SEED[:unit].
    #[arg(long)]
    generate: Option<String>,

    /// Sample points per unit length for generated trees.
    #[arg(long, default_value_t = 1024)]
    resolution: u32,

    /// Branch-size factor (>= 1) or "auto".
    #[arg(long, default_value = "auto")]
    beta: String,

    /// Branch-separation factor or "auto".
    #[arg(long, default_value = "auto")]
    gamma: String,

    /// Scale ratio in (0, 1/(3 beta)) or "auto".
    #[arg(long, default_value = "auto")]
    delta: String,

    /// Relative weight floor as a rational "P/Q" or "auto" (= 1/(3K)).
    #[arg(long, default_value = "auto")]
    eps0: String,

    /// Hierarchy depth or "auto".
    #[arg(long, default_value = "auto")]
    depth: String,

    /// Comma-separated dimension exponents for the summability reports.
    #[arg(long, default_value = "1.2,1.5,2.0")]
    alpha: String,

    /// Sample count for the randomized verification sweeps.
    #[arg(long, default_value_t = 500)]
    samples: usize,

    /// Seed for the randomized sweeps.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Also render one SVG per level.
    #[arg(long)]
    svg: bool,

    /// Report format: json (always written) or text (adds reports.txt).
    #[arg(long, default_value = "json")]
    report: String,
}

fn parse_auto<T: std::str::FromStr>(text: &str) -> Result<Option<T>, String> {
    if text == "auto" {
        Ok(None)
    } else {
        text.parse()
            .map(Some)
            .map_err(|_| format!("cannot parse {text}"))
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            println!("artifacts: {}", outcome.out_dir.display());
            if outcome.certified_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn build_config(args: &Args) -> Result<RunConfig, String> {
    let alphas: Result<Vec<f64>, _> = args
        .alpha
        .split(',')
        .map(|a| a.trim().parse::<f64>())
        .collect();
    Ok(RunConfig {
        input: args.input.clone(),
        generate: args.generate.clone(),
        resolution: args.resolution,
        beta: parse_auto(&args.beta)?,
        gamma: parse_auto(&args.gamma)?,
        delta: parse_auto(&args.delta)?,
        eps0: if args.eps0 == "auto" {
            None
        } else {
            Some(args.eps0.clone())
        },
        depth: parse_auto(&args.depth)?,
        alphas: alphas.map_err(|e| e.to_string())?,
        samples: args.samples,
        seed: args.seed,
        out: args.out.clone(),
        svg: args.svg,
        report: match args.report.as_str() {
            "json" => ReportFormat::Json,
            "text" => ReportFormat::Text,
            other => return Err(format!("unknown report format {other}")),
        },
    })
}
