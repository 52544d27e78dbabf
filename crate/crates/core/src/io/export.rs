//! Deterministic CSV exports and their readers.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::PhaseConfig;
use crate::mesosim::DriverId;
use crate::net::ROUTES_PER_OD;
use crate::runner::{EpisodeRecord, GroupStats, Phase};
use crate::stateobs::Group;
use crate::Error;

pub const EPISODES_FILE: &str = "episodes.csv";
pub const DRIVERS_FILE: &str = "drivers.csv";
pub const OD_BREAKDOWN_FILE: &str = "od_breakdown.csv";

pub const EPISODES_HEADER: &str = "episode,group,mean_tt,mean_reward,mean_loss,mean_epsilon";
pub const DRIVERS_HEADER: &str = "episode,driver,group,od,action,travel_time,reward";
pub const OD_BREAKDOWN_HEADER: &str = "episode,od,group,mean_tt";

const GROUPS: [Group; 2] = [Group::Human, Group::Av];

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Compact per-episode view used by the summary and the charts.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeDigest {
    pub episode: usize,
    pub phase: Phase,
    pub human: GroupStats,
    pub av: GroupStats,
    /// Mean travel time of the drivers that ever become AVs, in any phase.
    pub av_cohort_tt: Option<f64>,
    /// Mean travel time of the drivers that stay human.
    pub human_cohort_tt: Option<f64>,
    pub system_tt: Option<f64>,
    /// Per OD, fraction of its drivers on each route (`None` if the OD is empty).
    pub route_share: Vec<Option<[f64; ROUTES_PER_OD]>>,
}

impl EpisodeDigest {
    pub fn group(&self, g: Group) -> &GroupStats {
        match g {
            Group::Human => &self.human,
            Group::Av => &self.av,
        }
    }
}

#[derive(Default)]
struct DigestBuilder {
    sums: [(f64, usize); 3],
    routes: Vec<[usize; ROUTES_PER_OD]>,
}

impl DigestBuilder {
    fn new(n_ods: usize) -> Self {
        DigestBuilder { sums: [(0.0, 0); 3], routes: vec![[0; ROUTES_PER_OD]; n_ods] }
    }

    fn add(&mut self, in_av_cohort: bool, od: usize, action: usize, tt: f64) -> Result<(), Error> {
        let k = usize::from(in_av_cohort);
        self.sums[k].0 += tt;
        self.sums[k].1 += 1;
        self.sums[2].0 += tt;
        self.sums[2].1 += 1;
        let slot = self
            .routes
            .get_mut(od)
            .and_then(|r| r.get_mut(action))
            .ok_or_else(|| Error::Records(format!("od {od} / action {action} out of range")))?;
        *slot += 1;
        Ok(())
    }

    fn finish(self, episode: usize, phase: Phase, human: GroupStats, av: GroupStats) -> EpisodeDigest {
        let mean = |(s, n): (f64, usize)| (n > 0).then(|| s / n as f64);
        EpisodeDigest {
            episode,
            phase,
            human,
            av,
            human_cohort_tt: mean(self.sums[0]),
            av_cohort_tt: mean(self.sums[1]),
            system_tt: mean(self.sums[2]),
            route_share: self
                .routes
                .iter()
                .map(|c| {
                    let n: usize = c.iter().sum();
                    (n > 0).then(|| c.map(|k| k as f64 / n as f64))
                })
                .collect(),
        }
    }
}

/// Digest of one record; `av_cohort` holds every driver that is an AV at
/// some point of the repetition.
pub fn digest(record: &EpisodeRecord, av_cohort: &HashSet<DriverId>, n_ods: usize) -> Result<EpisodeDigest, Error> {
    let mut b = DigestBuilder::new(n_ods);
    for d in &record.drivers {
        b.add(av_cohort.contains(&d.driver_id), d.od, d.action, d.travel_time)?;
    }
    Ok(b.finish(record.episode, record.phase, record.human, record.av))
}

/// AV cohort of a record set: drivers with an AV row anywhere.
pub fn av_cohort(records: &[EpisodeRecord]) -> HashSet<DriverId> {
    records
        .iter()
        .flat_map(|r| r.drivers.iter())
        .filter(|d| d.group == Group::Av)
        .map(|d| d.driver_id)
        .collect()
}

pub fn digest_all(records: &[EpisodeRecord], n_ods: usize) -> Result<Vec<EpisodeDigest>, Error> {
    let cohort = av_cohort(records);
    let mut out: Vec<EpisodeDigest> = records.iter().map(|r| digest(r, &cohort, n_ods)).collect::<Result<_, _>>()?;
    out.sort_by_key(|d| d.episode);
    Ok(out)
}

fn episodes_rows(out: &mut String, r: &EpisodeRecord) {
    for g in GROUPS {
        let s = r.group(g);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.episode,
            g.as_str(),
            opt(s.mean_tt),
            opt(s.mean_reward),
            opt(s.mean_loss),
            opt(s.mean_epsilon)
        );
    }
}

fn drivers_rows(out: &mut String, r: &EpisodeRecord) {
    for d in &r.drivers {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.episode,
            d.driver_id,
            d.group.as_str(),
            d.od,
            d.action,
            d.travel_time,
            d.reward
        );
    }
}

fn od_rows(out: &mut String, r: &EpisodeRecord, n_ods: usize) {
    let mut sums = vec![[(0.0, 0usize); 2]; n_ods];
    for d in &r.drivers {
        let s = &mut sums[d.od][usize::from(d.group == Group::Av)];
        s.0 += d.travel_time;
        s.1 += 1;
    }
    for (od, s) in sums.iter().enumerate() {
        for (k, g) in GROUPS.iter().enumerate() {
            let (sum, n) = s[k];
            let mean = (n > 0).then(|| sum / n as f64);
            let _ = writeln!(out, "{},{},{},{}", r.episode, od, g.as_str(), opt(mean));
        }
    }
}

/// The three CSV documents of a record set, in episode order.
pub fn render_records(records: &[EpisodeRecord], n_ods: usize) -> [String; 3] {
    let mut sorted: Vec<&EpisodeRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.episode);
    let mut docs = [
        format!("{EPISODES_HEADER}\n"),
        format!("{DRIVERS_HEADER}\n"),
        format!("{OD_BREAKDOWN_HEADER}\n"),
    ];
    for r in sorted {
        episodes_rows(&mut docs[0], r);
        drivers_rows(&mut docs[1], r);
        od_rows(&mut docs[2], r, n_ods);
    }
    docs
}

/// Writes the three CSV files of a record set into `dir`.
pub fn export_records(records: &[EpisodeRecord], n_ods: usize, dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let docs = render_records(records, n_ods);
    for (name, doc) in [EPISODES_FILE, DRIVERS_FILE, OD_BREAKDOWN_FILE].iter().zip(docs) {
        let path = dir.join(name);
        fs::write(&path, doc).map_err(io_err(&path))?;
    }
    Ok(())
}

fn partial(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Streams records of one repetition to disk. Files carry a `.partial`
/// suffix until [`RepetitionWriter::finish`] renames them.
pub struct RepetitionWriter {
    paths: Vec<PathBuf>,
    files: Vec<BufWriter<File>>,
    n_ods: usize,
    av_cohort: HashSet<DriverId>,
    digests: Vec<EpisodeDigest>,
    buf: String,
}

impl RepetitionWriter {
    pub fn create(dir: &Path, n_ods: usize, av_cohort: HashSet<DriverId>) -> Result<Self, Error> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut paths = Vec::new();
        let mut files = Vec::new();
        for (name, header) in [
            (EPISODES_FILE, EPISODES_HEADER),
            (DRIVERS_FILE, DRIVERS_HEADER),
            (OD_BREAKDOWN_FILE, OD_BREAKDOWN_HEADER),
        ] {
            let path = dir.join(name);
            let tmp = partial(&path);
            let mut f = BufWriter::new(File::create(&tmp).map_err(io_err(&tmp))?);
            writeln!(f, "{header}").map_err(io_err(&tmp))?;
            paths.push(path);
            files.push(f);
        }
        Ok(RepetitionWriter { paths, files, n_ods, av_cohort, digests: Vec::new(), buf: String::new() })
    }

    pub fn write(&mut self, r: &EpisodeRecord) -> Result<(), Error> {
        for k in 0..3 {
            self.buf.clear();
            match k {
                0 => episodes_rows(&mut self.buf, r),
                1 => drivers_rows(&mut self.buf, r),
                _ => od_rows(&mut self.buf, r, self.n_ods),
            }
            self.files[k].write_all(self.buf.as_bytes()).map_err(io_err(&self.paths[k]))?;
        }
        self.digests.push(digest(r, &self.av_cohort, self.n_ods)?);
        Ok(())
    }

    /// Flushes and publishes the files; returns the episode digests.
    pub fn finish(self) -> Result<Vec<EpisodeDigest>, Error> {
        for (f, path) in self.files.into_iter().zip(&self.paths) {
            let tmp = partial(path);
            f.into_inner().map_err(|e| Error::Io { path: tmp.clone(), source: e.into_error() })?;
            fs::rename(&tmp, path).map_err(io_err(path))?;
        }
        Ok(self.digests)
    }

    /// Deletes the unfinished files.
    pub fn discard(self) {
        for path in &self.paths {
            let _ = fs::remove_file(partial(path));
        }
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>, Error> {
    let f = File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(f))
}

fn records_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Records(format!("{}: {e}", path.display()))
}

fn parse_opt(path: &Path, s: &str) -> Result<Option<f64>, Error> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| records_err(path, format!("bad number `{s}`")))
}

#[derive(Debug, serde::Deserialize)]
struct DriverCsvRow {
    episode: usize,
    driver: DriverId,
    group: String,
    od: usize,
    action: usize,
    travel_time: f64,
    #[allow(dead_code)]
    reward: f64,
}

/// Rebuilds the episode digests of one exported repetition directory.
pub fn load_digests(dir: &Path, phases: &PhaseConfig, n_ods: usize) -> Result<Vec<EpisodeDigest>, Error> {
    let ep_path = dir.join(EPISODES_FILE);
    let mut groups: BTreeMap<usize, [GroupStats; 2]> = BTreeMap::new();
    for row in reader(&ep_path)?.records() {
        let row = row.map_err(|e| records_err(&ep_path, e))?;
        if row.len() != 6 {
            return Err(records_err(&ep_path, format!("expected 6 fields, found {}", row.len())));
        }
        let episode: usize = row[0].parse().map_err(|_| records_err(&ep_path, "bad episode"))?;
        let g: Group = row[1].parse().map_err(|e| records_err(&ep_path, e))?;
        let stats = GroupStats {
            count: 0,
            mean_tt: parse_opt(&ep_path, &row[2])?,
            mean_reward: parse_opt(&ep_path, &row[3])?,
            mean_loss: parse_opt(&ep_path, &row[4])?,
            mean_epsilon: parse_opt(&ep_path, &row[5])?,
        };
        groups.entry(episode).or_default()[usize::from(g == Group::Av)] = stats;
    }

    let dr_path = dir.join(DRIVERS_FILE);
    let mut cohort = HashSet::new();
    for row in reader(&dr_path)?.deserialize() {
        let row: DriverCsvRow = row.map_err(|e| records_err(&dr_path, e))?;
        if row.group == "av" {
            cohort.insert(row.driver);
        }
    }
    let mut builders: BTreeMap<usize, DigestBuilder> = BTreeMap::new();
    for row in reader(&dr_path)?.deserialize() {
        let row: DriverCsvRow = row.map_err(|e| records_err(&dr_path, e))?;
        let g: Group = row.group.parse().map_err(|e| records_err(&dr_path, e))?;
        let stats = groups
            .get_mut(&row.episode)
            .ok_or_else(|| records_err(&dr_path, format!("episode {} missing from {EPISODES_FILE}", row.episode)))?;
        stats[usize::from(g == Group::Av)].count += 1;
        builders
            .entry(row.episode)
            .or_insert_with(|| DigestBuilder::new(n_ods))
            .add(cohort.contains(&row.driver), row.od, row.action, row.travel_time)?;
    }
    groups
        .into_iter()
        .map(|(episode, [human, av])| {
            let b = builders.remove(&episode).unwrap_or_else(|| DigestBuilder::new(n_ods));
            Ok(b.finish(episode, Phase::of_episode(episode, phases), human, av))
        })
        .collect()
}

/// Mean across repetitions of per-episode group statistics.
pub fn mean_episodes_csv(reps: &[Vec<EpisodeDigest>]) -> String {
    let mut out = format!("{EPISODES_HEADER}\n");
    let mut by_episode: BTreeMap<usize, Vec<&EpisodeDigest>> = BTreeMap::new();
    for d in reps.iter().flatten() {
        by_episode.entry(d.episode).or_default().push(d);
    }
    for (episode, ds) in by_episode {
        for g in GROUPS {
            let avg = |f: fn(&GroupStats) -> Option<f64>| {
                let v: Vec<f64> = ds.iter().filter_map(|d| f(d.group(g))).collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                episode,
                g.as_str(),
                opt(avg(|s| s.mean_tt)),
                opt(avg(|s| s.mean_reward)),
                opt(avg(|s| s.mean_loss)),
                opt(avg(|s| s.mean_epsilon))
            );
        }
    }
    out
}
