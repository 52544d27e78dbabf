use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use routemix::io::{self, SMOOTHING_WIDTH};
use routemix::runner::{build_routes, load_network, population_to_csv, sample_population, scenario_ods};
use routemix::{parse_config, ScenarioConfig};

/// Day-to-day route choice with human drivers and learning AVs.
#[derive(Parser)]
#[command(name = "routemix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML); defaults apply to everything left out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic grid network as an edge list.
    GenNet {
        #[command(flatten)]
        common: Common,
        /// Seed of the randomized edge speeds (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
    },
    /// Generate three routes per OD pair.
    GenPaths {
        #[command(flatten)]
        common: Common,
        /// Edge-list file to use instead of the configured network.
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sample the driver population of one repetition.
    GenPopulation {
        #[command(flatten)]
        common: Common,
        /// Master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        repetition: usize,
    },
    /// Run every repetition of a scenario and export the records.
    Run {
        #[command(flatten)]
        common: Common,
        /// altruistic, collaborative, competitive, malicious, selfish, social or custom.
        #[arg(long)]
        behavior: Option<String>,
        /// Four reals: own, group, other and overall weights (implies `custom`).
        #[arg(long, num_args = 4, allow_negative_numbers = true, value_names = ["OWN", "GROUP", "OTHER", "ALL"])]
        phi: Option<Vec<f64>>,
        /// Master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        repetitions: Option<usize>,
    },
    /// Recompute the Settle-vs-Adapt summary of a run directory.
    Summarize {
        /// Directory written by `run`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Episodes compared at the end of each phase.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Draw SVG charts of a run directory.
    Charts {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Moving-average width in episodes.
        #[arg(long, default_value_t = SMOOTHING_WIDTH)]
        width: usize,
    },
}

/// Config plus the directory its relative paths resolve against.
fn load_config(path: Option<&Path>) -> Result<(ScenarioConfig, PathBuf)> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let cfg = parse_config(&text).with_context(|| format!("in {}", p.display()))?;
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            Ok((cfg, base))
        }
        None => Ok((ScenarioConfig::default(), PathBuf::from("."))),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<String> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path.display().to_string())
}

fn execute(cmd: Command) -> Result<Value> {
    match cmd {
        Command::GenNet { common, seed, rows, cols } => {
            let (mut cfg, _) = load_config(common.config.as_deref())?;
            cfg.network.file = None;
            if let Some(s) = seed {
                cfg.network.grid_seed = s;
            }
            if let Some(r) = rows {
                cfg.network.grid.rows = r;
            }
            if let Some(c) = cols {
                cfg.network.grid.cols = c;
            }
            let net = load_network(&cfg, Path::new("."))?;
            let path = write(&common.out, io::NETWORK_FILE, &net.to_edge_list())?;
            Ok(json!({ "network": path, "nodes": net.nodes().len(), "edges": net.edges().len() }))
        }
        Command::GenPaths { common, network, seed } => {
            let (mut cfg, mut base) = load_config(common.config.as_deref())?;
            if let Some(n) = network {
                cfg.network.file = Some(n);
                base = PathBuf::from(".");
            }
            if let Some(s) = seed {
                cfg.routes.seed = s;
            }
            let net = load_network(&cfg, &base)?;
            let ods = scenario_ods(&cfg)?;
            let routes = build_routes(&net, &ods, &cfg)?;
            let path = write(&common.out, io::ROUTES_FILE, &routes.to_text())?;
            Ok(json!({ "routes": path, "od_pairs": ods.len() }))
        }
        Command::GenPopulation { common, seed, repetition } => {
            let (mut cfg, _) = load_config(common.config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            let ods = scenario_ods(&cfg)?;
            let specs = sample_population(&cfg, ods.len(), repetition);
            let path = write(&common.out, io::POPULATION_FILE, &population_to_csv(&specs, &ods))?;
            Ok(json!({ "population": path, "drivers": specs.len(), "mutating": cfg.population.av_count }))
        }
        Command::Run { common, behavior, phi, seed, repetitions } => {
            let (mut cfg, base) = load_config(common.config.as_deref())?;
            if let Some(phi) = phi {
                cfg.behavior = "custom".into();
                cfg.custom_phi = Some([phi[0], phi[1], phi[2], phi[3]]);
            }
            if let Some(b) = behavior {
                cfg.behavior = b;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = repetitions {
                cfg.repetitions = r;
            }
            let outcome = io::run_to_dir(&cfg, &base, &common.out)?;
            Ok(json!({
                "out": common.out.display().to_string(),
                "behavior": cfg.behavior,
                "repetition_seeds": outcome.manifest.repetition_seeds,
                "summary": outcome.summary.map(|t| json!({
                    "av_pct": t.mean_pct[0], "human_pct": t.mean_pct[1], "system_pct": t.mean_pct[2],
                })),
            }))
        }
        Command::Summarize { run, out, window } => {
            let table = io::summarize_dir(&run, window)?;
            let path = write(&out, io::summary::SUMMARY_FILE, &table.to_csv())?;
            Ok(json!({
                "summary": path,
                "behavior": table.behavior,
                "window": table.window,
                "av_pct": table.mean_pct[0],
                "human_pct": table.mean_pct[1],
                "system_pct": table.mean_pct[2],
            }))
        }
        Command::Charts { run, out, width } => {
            let files = io::charts_from_dir(&run, &out, width)?;
            let files: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
            Ok(json!({ "charts": files }))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": format!("{e:#}") }));
            ExitCode::FAILURE
        }
    }
}
