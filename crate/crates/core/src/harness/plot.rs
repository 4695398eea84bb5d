//! Line charts of run metrics as standalone SVG: one line per series at the
//! mean over seeds, with a shaded ±1 sample standard deviation band when a
//! series has more than one run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::config::{Metric, SeriesSpec};
use super::metrics::{read_csv, CsvRow};

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// One aggregated series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesData {
    pub label: String,
    pub episodes: Vec<usize>,
    pub mean: Vec<f64>,
    /// Sample standard deviation; `None` for a single run.
    pub std: Option<Vec<f64>>,
    pub runs: usize,
}

fn value(row: &CsvRow, metric: Metric) -> Option<f64> {
    match metric {
        Metric::CumulativeReward => Some(row.cumulative_reward),
        Metric::EpisodeReward => Some(row.episode_reward),
        Metric::MseToOracle => row.mse_to_oracle,
    }
}

/// Mean and spread per episode across runs. Each run is a list of
/// (episode, value) points.
pub fn aggregate(label: &str, runs: &[Vec<(usize, f64)>]) -> Result<SeriesData> {
    let mut by_episode: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for run in runs {
        for &(e, v) in run {
            by_episode.entry(e).or_default().push(v);
        }
    }
    if by_episode.is_empty() {
        return Err(Error::Config(format!("series {label:?} has no data points")));
    }
    let mut episodes = Vec::new();
    let mut mean = Vec::new();
    let mut std = Vec::new();
    for (e, vs) in &by_episode {
        let n = vs.len() as f64;
        let m = vs.iter().sum::<f64>() / n;
        let var = if vs.len() > 1 {
            vs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        episodes.push(*e);
        mean.push(m);
        std.push(var.sqrt());
    }
    Ok(SeriesData {
        label: label.to_string(),
        episodes,
        mean,
        std: (runs.len() > 1).then_some(std),
        runs: runs.len(),
    })
}

/// Reads one series; every (file, seed) pair is a separate run.
pub fn load_series(spec: &SeriesSpec, metric: Metric, agent: usize) -> Result<SeriesData> {
    let mut runs: BTreeMap<(usize, u64), Vec<(usize, f64)>> = BTreeMap::new();
    for (i, path) in spec.csv.iter().enumerate() {
        for row in read_csv(path)? {
            if row.agent != agent {
                continue;
            }
            if let Some(v) = value(&row, metric) {
                runs.entry((i, row.seed)).or_default().push((row.episode, v));
            }
        }
    }
    let runs: Vec<_> = runs.into_values().collect();
    aggregate(&spec.label, &runs)
}

/// About five round-valued ticks covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize + usize::from((step / mag).fract() != 0.0);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn range(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo > 1e-12 * hi.abs().max(lo.abs()).max(1.0) {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = (0.1 * lo.abs()).max(1.0);
        (lo - pad, hi + pad)
    }
}

pub fn render_svg(series: &[SeriesData], metric: Metric, title: &str) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Config("nothing to plot".into()));
    }
    let xs = series.iter().flat_map(|s| s.episodes.iter().map(|&e| e as f64));
    let (x_lo, x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for (i, m) in s.mean.iter().enumerate() {
            let d = s.std.as_ref().map_or(0.0, |sd| sd[i]);
            y_lo = y_lo.min(m - d);
            y_hi = y_hi.max(m + d);
        }
    }
    if !(y_lo.is_finite() && y_hi.is_finite()) {
        return Err(Error::NonFinite("plot values"));
    }
    let (x_lo, x_hi) = if x_hi > x_lo { (x_lo, x_hi) } else { (x_lo - 1.0, x_hi + 1.0) };
    let (y_lo, y_hi) = range(y_lo, y_hi);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let py = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );

    let (xt, xd) = ticks(x_lo, x_hi);
    for t in xt {
        let x = px(t);
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e5e5e5"/>"##, TOP, TOP + ph);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.xd$}</text>"#, TOP + ph + 18.0);
    }
    let (yt, yd) = ticks(y_lo, y_hi);
    for t in yt {
        let y = py(t);
        let _ = writeln!(svg, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e5e5e5"/>"##, LEFT + pw);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t:.yd$}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let _ = writeln!(svg, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">episode</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        metric.label()
    );

    for (k, s) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        if let Some(sd) = &s.std {
            let mut pts = String::new();
            for (i, &e) in s.episodes.iter().enumerate() {
                let _ = write!(pts, "{:.2},{:.2} ", px(e as f64), py(s.mean[i] + sd[i]));
            }
            for (i, &e) in s.episodes.iter().enumerate().rev() {
                let _ = write!(pts, "{:.2},{:.2} ", px(e as f64), py(s.mean[i] - sd[i]));
            }
            let _ = writeln!(svg, r#"<polygon points="{}" fill="{colour}" fill-opacity="0.18" stroke="none"/>"#, pts.trim_end());
        }
        let mut pts = String::new();
        for (i, &e) in s.episodes.iter().enumerate() {
            let _ = write!(pts, "{:.2},{:.2} ", px(e as f64), py(s.mean[i]));
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            pts.trim_end()
        );
        let ly = TOP + 14.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="3"/>"#, lx + 22.0);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{} (n={})</text>"#,
            lx + 28.0,
            ly + 4.0,
            escape(&s.label),
            s.runs
        );
    }
    if series.iter().any(|s| s.std.is_some()) {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="10">band: mean ± 1 std over seeds</text>"#,
            LEFT + pw + 14.0,
            TOP + 14.0 + 20.0 * series.len() as f64 + 6.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Reads every series and writes the chart to `out`.
pub fn emit_plot(series: &[SeriesSpec], metric: Metric, agent: usize, title: &str, out: &Path) -> Result<()> {
    if series.is_empty() {
        return Err(Error::Config("plot needs at least one series".into()));
    }
    let data = series
        .iter()
        .map(|s| load_series(s, metric, agent))
        .collect::<Result<Vec<_>>>()?;
    let svg = render_svg(&data, metric, title)?;
    std::fs::write(out, svg).map_err(|e| Error::io(out, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::metrics::RunMetrics;
    use crate::tabular::EpisodeSummary;

    fn run(rewards: &[f64]) -> Vec<(usize, f64)> {
        rewards.iter().copied().enumerate().collect()
    }

    #[test]
    fn single_series_has_no_band() {
        let s = aggregate("a", &[run(&[1.0, 2.0, 3.0])]).unwrap();
        let svg = render_svg(&[s], Metric::EpisodeReward, "t").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<polygon").count(), 0);
    }

    #[test]
    fn bands_follow_series_order() {
        let series: Vec<SeriesData> = ["grade1", "grade2", "grade3", "grade4"]
            .iter()
            .enumerate()
            .map(|(g, l)| aggregate(l, &[run(&[g as f64, 1.0]), run(&[g as f64 + 1.0, 2.0])]).unwrap())
            .collect();
        let svg = render_svg(&series, Metric::CumulativeReward, "sweep").unwrap();
        assert_eq!(svg.matches("<polygon").count(), 4);
        let pos: Vec<usize> = ["grade1", "grade2", "grade3", "grade4"]
            .iter()
            .map(|l| svg.find(&format!(">{l} (n=2)")).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn constant_series_is_flat_with_labels() {
        let s = aggregate("c", &[run(&[5.0; 10])]).unwrap();
        let svg = render_svg(&[s], Metric::EpisodeReward, "flat").unwrap();
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let pts = line.split('"').nth(1).unwrap();
        let ys: Vec<&str> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]));
        assert!(svg.contains(">episode</text>") && svg.contains(">episode reward</text>"));
    }

    #[test]
    fn mean_and_sample_std() {
        let s = aggregate("x", &[vec![(0, 1.0)], vec![(0, 3.0)]]).unwrap();
        assert_eq!(s.mean, vec![2.0]);
        assert!((s.std.unwrap()[0] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn reads_metrics_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut paths = Vec::new();
        for seed in 0..3u64 {
            let mut m = RunMetrics::new(seed);
            for e in 0..4 {
                m.push(
                    &EpisodeSummary {
                        episode: e,
                        rewards: vec![seed as f64, 0.0],
                        epsilon: 0.0,
                        epsilon_prime: 0.0,
                        steps: 1,
                        max_change: 0.0,
                    },
                    None,
                );
            }
            let p = dir.path().join(format!("s{seed}.csv"));
            m.write_csv(&p).unwrap();
            paths.push(p);
        }
        let spec = SeriesSpec {
            label: "l".into(),
            csv: paths,
        };
        let s = load_series(&spec, Metric::CumulativeReward, 0).unwrap();
        assert_eq!(s.runs, 3);
        assert_eq!(s.mean, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(load_series(&spec, Metric::MseToOracle, 0).is_err());
        let out = dir.path().join("p.svg");
        emit_plot(&[spec], Metric::CumulativeReward, 0, "t", &out).unwrap();
        assert!(std::fs::read_to_string(out).unwrap().starts_with("<svg"));
    }
}
