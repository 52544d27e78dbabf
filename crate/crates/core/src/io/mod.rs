//! Run directories: manifest, per-repetition CSV exports, summary and charts.
//!
//! Layout of an output directory:
//!
//! ```text
//! manifest.json  network.csv  routes.csv  episodes_mean.csv  summary.csv
//! rep_0/population.csv  rep_0/episodes.csv  rep_0/drivers.csv  rep_0/od_breakdown.csv
//! rep_1/...
//! ```

pub mod charts;
pub mod export;
pub mod summary;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::runner::{self, population_from_csv, population_to_csv, repetition_seed, Repetition, Scenario};
use crate::Error;

pub use charts::{emit_charts, moving_average, smooth, SMOOTHING_WIDTH};
pub use export::{
    digest_all, export_records, load_digests, mean_episodes_csv, render_records, EpisodeDigest, RepetitionWriter,
};
pub use summary::{summarize, Comparison, SummaryTable};

use export::io_err;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const NETWORK_FILE: &str = "network.csv";
pub const ROUTES_FILE: &str = "routes.csv";
pub const POPULATION_FILE: &str = "population.csv";
pub const EPISODES_MEAN_FILE: &str = "episodes_mean.csv";
pub const PERCENT_AGGREGATION: &str = "percent change computed per repetition, then averaged";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub master_seed: u64,
    pub repetition_seeds: Vec<u64>,
    /// `origin->destination`, indexed like the `od` column of the exports.
    pub od_labels: Vec<String>,
    pub percent_aggregation: String,
    pub outputs: Vec<String>,
    pub config: ScenarioConfig,
}

pub fn rep_dir_name(rep: usize) -> String {
    format!("rep_{rep}")
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(io_err(path))
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(io_err(path))
}

impl RunManifest {
    pub fn new(cfg: &ScenarioConfig, scenario: &Scenario) -> Self {
        let mut outputs = vec![
            NETWORK_FILE.to_string(),
            ROUTES_FILE.to_string(),
            EPISODES_MEAN_FILE.to_string(),
            summary::SUMMARY_FILE.to_string(),
        ];
        for rep in 0..cfg.repetitions {
            for f in [POPULATION_FILE, export::EPISODES_FILE, export::DRIVERS_FILE, export::OD_BREAKDOWN_FILE] {
                outputs.push(format!("{}/{f}", rep_dir_name(rep)));
            }
        }
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: cfg.seed,
            repetition_seeds: (0..cfg.repetitions).map(|r| repetition_seed(cfg.seed, r)).collect(),
            od_labels: scenario.ods.iter().map(|od| format!("{}->{}", od.origin, od.destination)).collect(),
            percent_aggregation: PERCENT_AGGREGATION.to_string(),
            outputs,
            config: cfg.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn load(dir: &Path) -> Result<Self, Error> {
        let path = dir.join(MANIFEST_FILE);
        serde_json::from_str(&read(&path)?).map_err(|e| Error::Records(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub digests: Vec<Vec<EpisodeDigest>>,
    /// `None` when the phases are too short for the summary window.
    pub summary: Option<SummaryTable>,
}

/// Runs every repetition of `cfg`, streaming records into `out`. Relative
/// input files resolve against `base_dir`.
pub fn run_to_dir(cfg: &ScenarioConfig, base_dir: &Path, out: &Path) -> Result<RunOutcome, Error> {
    cfg.validate()?;
    let scenario = Scenario::from_config(cfg, base_dir)?;
    let fixed_specs = match &cfg.population.file {
        Some(f) => Some(population_from_csv(&read(&base_dir.join(f))?, &scenario.ods)?),
        None => None,
    };
    fs::create_dir_all(out).map_err(io_err(out))?;
    let manifest = RunManifest::new(cfg, &scenario);
    write(&out.join(MANIFEST_FILE), &manifest.to_json())?;
    write(&out.join(NETWORK_FILE), &scenario.net.to_edge_list())?;
    write(&out.join(ROUTES_FILE), &scenario.routes.to_text())?;

    let n_ods = scenario.ods.len();
    let mut digests = Vec::with_capacity(cfg.repetitions);
    for rep in 0..cfg.repetitions {
        let seed = repetition_seed(cfg.seed, rep);
        let mut run = match &fixed_specs {
            Some(s) => Repetition::with_specs(&scenario, cfg, seed, s.clone())?,
            None => Repetition::new(&scenario, cfg, rep)?,
        };
        let dir = out.join(rep_dir_name(rep));
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        write(&dir.join(POPULATION_FILE), &population_to_csv(&run.population.specs, &scenario.ods))?;
        let cohort: HashSet<_> = run.population.mutation_list.iter().copied().collect();
        let mut writer = RepetitionWriter::create(&dir, n_ods, cohort)?;
        for episode in 1..=cfg.phases.total_episodes {
            let step = run.step(episode).and_then(|r| writer.write(&r));
            if let Err(e) = step {
                writer.discard();
                return Err(e);
            }
        }
        log::info!("repetition {rep} done ({} episodes)", cfg.phases.total_episodes);
        digests.push(writer.finish()?);
    }
    write(&out.join(EPISODES_MEAN_FILE), &mean_episodes_csv(&digests))?;
    let summary = write_summary(cfg, &digests, out)?;
    Ok(RunOutcome { manifest, digests, summary })
}

fn write_summary(
    cfg: &ScenarioConfig,
    digests: &[Vec<EpisodeDigest>],
    out: &Path,
) -> Result<Option<SummaryTable>, Error> {
    match summarize(&cfg.behavior, digests, cfg.summary.window) {
        Ok(t) => {
            write(&out.join(summary::SUMMARY_FILE), &t.to_csv())?;
            Ok(Some(t))
        }
        Err(e) => {
            log::warn!("summary skipped: {e}");
            Ok(None)
        }
    }
}

/// Manifest and per-repetition digests of an existing run directory.
pub fn load_run(dir: &Path) -> Result<(RunManifest, Vec<Vec<EpisodeDigest>>), Error> {
    let manifest = RunManifest::load(dir)?;
    let digests = (0..manifest.repetition_seeds.len())
        .map(|rep| load_digests(&dir.join(rep_dir_name(rep)), &manifest.config.phases, manifest.od_labels.len()))
        .collect::<Result<_, _>>()?;
    Ok((manifest, digests))
}

/// Recomputes the summary of a run directory from its CSV files.
pub fn summarize_dir(dir: &Path, window: Option<usize>) -> Result<SummaryTable, Error> {
    let (manifest, digests) = load_run(dir)?;
    summarize(&manifest.config.behavior, &digests, window.unwrap_or(manifest.config.summary.window))
}

pub fn charts_from_dir(dir: &Path, out: &Path, width: usize) -> Result<Vec<PathBuf>, Error> {
    let (manifest, digests) = load_run(dir)?;
    emit_charts(&digests, &manifest.od_labels, width, out)
}

/// In-memory records of every repetition; convenient for small runs and tests.
pub fn run_records(cfg: &ScenarioConfig, base_dir: &Path) -> Result<Vec<runner::RepetitionOutput>, Error> {
    runner::run_scenario(cfg, base_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.population.size = 12;
        cfg.population.av_count = 4;
        cfg.phases.shock_start = 2;
        cfg.phases.adapt_start = 3;
        cfg.phases.total_episodes = 3;
        cfg.repetitions = 2;
        cfg.summary.window = 1;
        cfg
    }

    #[test]
    fn run_dir_layout_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = smoke();
        let outcome = run_to_dir(&cfg, Path::new("."), dir.path()).unwrap();
        for f in &outcome.manifest.outputs {
            assert!(dir.path().join(f).exists(), "missing {f}");
        }
        let episodes = read(&dir.path().join("rep_0/episodes.csv")).unwrap();
        assert_eq!(episodes.lines().filter(|l| l.contains(",human,")).count(), 3);
        assert_eq!(episodes.lines().filter(|l| l.contains(",av,")).count(), 3);

        let (manifest, digests) = load_run(dir.path()).unwrap();
        assert_eq!(manifest, outcome.manifest);
        assert_eq!(digests.len(), 2);
        let table = summarize_dir(dir.path(), None).unwrap();
        let mem = outcome.summary.unwrap();
        for k in 0..3 {
            assert!((table.mean_pct[k] - mem.mean_pct[k]).abs() < 1e-9);
        }
        let charts = charts_from_dir(dir.path(), &dir.path().join("charts"), SMOOTHING_WIDTH).unwrap();
        assert_eq!(charts.len(), 3 + 4);
    }

    #[test]
    fn streamed_export_matches_in_memory_render() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = smoke();
        cfg.repetitions = 1;
        run_to_dir(&cfg, Path::new("."), dir.path()).unwrap();
        let reps = run_records(&cfg, Path::new(".")).unwrap();
        let docs = render_records(&reps[0].records, 4);
        assert_eq!(read(&dir.path().join("rep_0/drivers.csv")).unwrap(), docs[1]);
        assert_eq!(read(&dir.path().join("rep_0/episodes.csv")).unwrap(), docs[0]);
    }
}
