//! Static SVG line charts of repetition-averaged, smoothed series.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::export::{io_err, EpisodeDigest};
use crate::net::ROUTES_PER_OD;
use crate::runner::GroupStats;
use crate::stateobs::Group;
use crate::Error;

pub const SMOOTHING_WIDTH: usize = 50;

/// Centered moving average with edge truncation. Widths larger than the
/// series (or below 2) leave it unchanged.
pub fn moving_average(xs: &[f64], width: usize) -> Vec<f64> {
    let opt: Vec<Option<f64>> = xs.iter().copied().map(Some).collect();
    smooth(&opt, width).into_iter().map(|v| v.unwrap()).collect()
}

/// Like [`moving_average`], skipping missing values; gaps stay gaps.
pub fn smooth(xs: &[Option<f64>], width: usize) -> Vec<Option<f64>> {
    if width < 2 || width > xs.len() {
        return xs.to_vec();
    }
    let left = width / 2;
    let right = width - 1 - left;
    let mut prefix = Vec::with_capacity(xs.len() + 1);
    prefix.push((0.0, 0usize));
    for x in xs {
        let (s, n) = *prefix.last().unwrap();
        prefix.push(match x {
            Some(v) => (s + v, n + 1),
            None => (s, n),
        });
    }
    (0..xs.len())
        .map(|i| {
            xs[i]?;
            let lo = i.saturating_sub(left);
            let hi = (i + right + 1).min(xs.len());
            let (s, n) = (prefix[hi].0 - prefix[lo].0, prefix[hi].1 - prefix[lo].1);
            Some(s / n as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const W: f64 = 720.0;
const H: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 50.0); // left, right, top, bottom

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

impl LineChart {
    /// Number of points drawn per series.
    pub fn point_counts(&self) -> Vec<usize> {
        self.series.iter().map(|s| s.y.iter().flatten().count()).collect()
    }

    pub fn to_svg(&self) -> String {
        let (ml, mr, mt, mb) = MARGIN;
        let (x0, x1) = bounds(self.series.iter().flat_map(|s| s.x.iter().copied()));
        let (y0, y1) = bounds(self.series.iter().flat_map(|s| s.y.iter().flatten().copied()));
        let px = |x: f64| ml + (x - x0) / (x1 - x0) * (W - ml - mr);
        let py = |y: f64| H - mb - (y - y0) / (y1 - y0) * (H - mt - mb);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(&self.title));
        let _ = writeln!(
            out,
            r#"<path d="M{ml} {mt} V{} H{}" fill="none" stroke="black"/>"#,
            H - mb,
            W - mr
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
                px(xv),
                H - mb + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
                ml - 6.0,
                py(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (ml + W - mr) / 2.0, H - 10.0, esc(&self.x_label));
        let _ = writeln!(
            out,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            (mt + H - mb) / 2.0,
            esc(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            // One polyline per run of defined values.
            let mut runs: Vec<Vec<(f64, f64)>> = vec![vec![]];
            for (x, y) in s.x.iter().zip(&s.y) {
                match y {
                    Some(y) => runs.last_mut().unwrap().push((px(*x), py(*y))),
                    None if !runs.last().unwrap().is_empty() => runs.push(vec![]),
                    None => {}
                }
            }
            let _ = writeln!(out, r#"<g stroke="{color}" fill="{color}"><title>{}</title>"#, esc(&s.name));
            for run in runs.iter().filter(|r| !r.is_empty()) {
                if run.len() == 1 {
                    let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5"/>"#, run[0].0, run[0].1);
                } else {
                    let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(out, r#"<polyline fill="none" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
                }
            }
            let _ = writeln!(out, "</g>");
            let ly = mt + 4.0 + 16.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{ly}" width="12" height="3" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
                W - mr - 140.0,
                W - mr - 124.0,
                ly + 5.0,
                esc(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{:.0}", v)
    } else {
        format!("{:.3}", v)
    }
}

/// Per-episode mean over repetitions of `f`; `None` where no repetition
/// has a value.
fn averaged<F>(reps: &[Vec<EpisodeDigest>], f: F) -> (Vec<f64>, Vec<Option<f64>>)
where
    F: Fn(&EpisodeDigest) -> Option<f64>,
{
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for d in reps.iter().flatten() {
        let e = acc.entry(d.episode).or_insert((0.0, 0));
        if let Some(v) = f(d) {
            e.0 += v;
            e.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(ep, (s, n))| (ep as f64, (n > 0).then(|| s / n as f64)))
        .unzip()
}

fn series<F>(reps: &[Vec<EpisodeDigest>], name: &str, width: usize, f: F) -> Series
where
    F: Fn(&EpisodeDigest) -> Option<f64>,
{
    let (x, y) = averaged(reps, f);
    Series { name: name.to_string(), x, y: smooth(&y, width) }
}

fn group_series(
    reps: &[Vec<EpisodeDigest>],
    width: usize,
    pick: fn(&GroupStats) -> Option<f64>,
    groups: &[Group],
) -> Vec<Series> {
    groups
        .iter()
        .map(|&g| series(reps, if g == Group::Human { "humans" } else { "AVs" }, width, |d| pick(d.group(g))))
        .collect()
}

/// Charts of the repetition-averaged records, smoothed over `width` episodes.
pub fn build_charts(reps: &[Vec<EpisodeDigest>], od_labels: &[String], width: usize) -> Vec<(String, LineChart)> {
    let both = [Group::Human, Group::Av];
    let chart = |title: &str, y_label: &str, series: Vec<Series>| LineChart {
        title: title.to_string(),
        x_label: "episode".into(),
        y_label: y_label.to_string(),
        series,
    };
    let mut charts = vec![
        (
            "travel_time.svg".to_string(),
            chart("Mean travel time", "seconds", group_series(reps, width, |s| s.mean_tt, &both)),
        ),
        (
            "loss.svg".to_string(),
            chart("Mean AV training loss", "MSE", group_series(reps, width, |s| s.mean_loss, &[Group::Av])),
        ),
        (
            "reward.svg".to_string(),
            chart("Mean reward", "reward", group_series(reps, width, |s| s.mean_reward, &both)),
        ),
    ];
    for (od, label) in od_labels.iter().enumerate() {
        let routes = (0..ROUTES_PER_OD)
            .map(|k| series(reps, &format!("route {k}"), width, move |d| d.route_share.get(od).copied().flatten().map(|s| s[k])))
            .collect();
        charts.push((format!("route_share_od{od}.svg"), chart(&format!("Route shares, {label}"), "share", routes)));
    }
    charts
}

pub fn emit_charts(
    reps: &[Vec<EpisodeDigest>],
    od_labels: &[String],
    width: usize,
    dir: &Path,
) -> Result<Vec<PathBuf>, Error> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    build_charts(reps, od_labels, width)
        .into_iter()
        .map(|(name, c)| {
            let path = dir.join(name);
            fs::write(&path, c.to_svg()).map_err(io_err(&path))?;
            Ok(path)
        })
        .collect()
}
