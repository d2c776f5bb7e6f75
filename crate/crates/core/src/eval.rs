//! Displacement metrics (minADE, minFDE, miss rate) and the minFDE
//! histogram report.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::LocalPoint;
use crate::model::{Model, ModelError, PredictionSet};
use crate::road_graph::LocalNavGraph;
use crate::scenario::Scene;

/// Endpoint distance beyond which a scene counts as a miss.
pub const MISS_THRESHOLD: f64 = 2.0;
/// Mode counts reported by default.
pub const DEFAULT_KS: [usize; 2] = [1, 6];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k = {k} exceeds the {available} available modes")]
    TooManyModes { k: usize, available: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("empty split")]
    EmptySplit,
    #[error("prediction has {got} points, ground truth {expected}")]
    Length { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

/// Modes considered for `k`: the `k` most confident, ties broken by
/// lower index.
pub fn top_k_modes(pred: &PredictionSet, k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    if k > pred.k() {
        return Err(EvalError::TooManyModes { k, available: pred.k() });
    }
    let mut idx: Vec<usize> = (0..pred.k()).collect();
    idx.sort_by(|&a, &b| pred.confidences[b].total_cmp(&pred.confidences[a]).then(a.cmp(&b)));
    idx.truncate(k);
    Ok(idx)
}

fn check_len(pred: &PredictionSet, future: &[LocalPoint]) -> Result<()> {
    for t in &pred.trajectories {
        if t.len() != future.len() || t.is_empty() {
            return Err(EvalError::Length {
                expected: future.len(),
                got: t.len(),
            });
        }
    }
    Ok(())
}

/// Smallest endpoint distance among the modes selected for `k`, with the
/// winning mode. Equal distances go to the lower mode index.
pub fn min_fde(pred: &PredictionSet, future: &[LocalPoint], k: usize) -> Result<(f64, usize)> {
    check_len(pred, future)?;
    let gt = *future.last().expect("checked non-empty");
    let mut modes = top_k_modes(pred, k)?;
    modes.sort_unstable();
    let mut best = (f64::INFINITY, modes[0]);
    for m in modes {
        let e = pred.endpoint(m).distance(&gt);
        if e < best.0 {
            best = (e, m);
        }
    }
    Ok(best)
}

fn ade(traj: &[LocalPoint], future: &[LocalPoint]) -> f64 {
    traj.iter().zip(future).map(|(a, b)| a.distance(b)).sum::<f64>() / future.len() as f64
}

/// Average displacement of the mode selected by [`min_fde`].
pub fn min_ade(pred: &PredictionSet, future: &[LocalPoint], k: usize) -> Result<f64> {
    let (_, m) = min_fde(pred, future, k)?;
    Ok(ade(&pred.trajectories[m], future))
}

pub fn is_miss(fde: f64) -> bool {
    fde > MISS_THRESHOLD
}

/// Fraction of predictions whose best endpoint is more than 2 m off.
pub fn miss_rate(preds: &[PredictionSet], futures: &[Vec<LocalPoint>], k: usize) -> Result<f64> {
    if preds.is_empty() {
        return Err(EvalError::EmptySplit);
    }
    let mut misses = 0usize;
    for (p, f) in preds.iter().zip(futures) {
        if is_miss(min_fde(p, f, k)?.0) {
            misses += 1;
        }
    }
    Ok(misses as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMetrics {
    pub k: usize,
    pub min_ade: f64,
    pub min_fde: f64,
    pub miss_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scenes: usize,
    pub metrics: Vec<KMetrics>,
}

impl MetricReport {
    pub fn at(&self, k: usize) -> Option<&KMetrics> {
        self.metrics.iter().find(|m| m.k == k)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Per-scene values for one `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneValue {
    pub min_ade: f64,
    pub min_fde: f64,
    pub mode: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub scene_id: u64,
    /// One entry per evaluated `k`, in report order.
    pub values: Vec<SceneValue>,
}

/// Metrics of every scene for each `k` in `ks`.
pub fn scene_metrics(
    ids: &[u64],
    preds: &[PredictionSet],
    futures: &[Vec<LocalPoint>],
    ks: &[usize],
) -> Result<Vec<SceneMetrics>> {
    ids.iter()
        .zip(preds)
        .zip(futures)
        .map(|((&scene_id, p), f)| {
            let values = ks
                .iter()
                .map(|&k| {
                    let (fde, mode) = min_fde(p, f, k)?;
                    Ok(SceneValue {
                        min_ade: ade(&p.trajectories[mode], f),
                        min_fde: fde,
                        mode,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(SceneMetrics { scene_id, values })
        })
        .collect()
}

/// Averages per-scene values. Sums run in scene order.
pub fn aggregate(per_scene: &[SceneMetrics], ks: &[usize]) -> Result<MetricReport> {
    if per_scene.is_empty() {
        return Err(EvalError::EmptySplit);
    }
    let n = per_scene.len() as f64;
    let metrics = ks
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let (mut ade, mut fde, mut miss) = (0.0, 0.0, 0usize);
            for s in per_scene {
                let v = s.values[j];
                ade += v.min_ade;
                fde += v.min_fde;
                miss += is_miss(v.min_fde) as usize;
            }
            KMetrics {
                k,
                min_ade: ade / n,
                min_fde: fde / n,
                miss_rate: miss as f64 / n,
            }
        })
        .collect();
    Ok(MetricReport {
        scenes: per_scene.len(),
        metrics,
    })
}

/// Predicts every scene and reports metrics for each `k` in `ks`.
pub fn evaluate(
    model: &Model,
    scenes: &[Scene],
    view: Option<&LocalNavGraph>,
    ks: &[usize],
) -> Result<(MetricReport, Vec<SceneMetrics>)> {
    if scenes.is_empty() {
        return Err(EvalError::EmptySplit);
    }
    let preds: Vec<PredictionSet> = scenes
        .par_iter()
        .map(|s| model.predict(s, view))
        .collect::<std::result::Result<_, _>>()?;
    let ids: Vec<u64> = scenes.iter().map(|s| s.scene_id).collect();
    let futures: Vec<Vec<LocalPoint>> = scenes.iter().map(|s| s.future.clone()).collect();
    let per_scene = scene_metrics(&ids, &preds, &futures, ks)?;
    Ok((aggregate(&per_scene, ks)?, per_scene))
}

/// Per-scene CSV: `scene_id` then `min_ade_k`, `min_fde_k`, `mode_k` for
/// every `k`.
pub fn scene_csv(per_scene: &[SceneMetrics], ks: &[usize]) -> String {
    let mut s = String::from("scene_id");
    for k in ks {
        let _ = write!(s, ",min_ade_{k},min_fde_{k},mode_{k}");
    }
    s.push('\n');
    for m in per_scene {
        let _ = write!(s, "{}", m.scene_id);
        for v in &m.values {
            let _ = write!(s, ",{:?},{:?},{}", v.min_ade, v.min_fde, v.mode);
        }
        s.push('\n');
    }
    s
}

/// Parses [`scene_csv`] output back into per-scene values.
pub fn parse_scene_csv(text: &str) -> std::result::Result<(Vec<usize>, Vec<SceneMetrics>), String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty csv")?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"scene_id") || !(cols.len() - 1).is_multiple_of(3) {
        return Err(format!("unexpected header {header:?}"));
    }
    let ks = cols[1..]
        .chunks(3)
        .map(|c| {
            c[0].strip_prefix("min_ade_")
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| format!("bad column {:?}", c[0]))
        })
        .collect::<std::result::Result<Vec<usize>, _>>()?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(format!("row {}: {} fields, expected {}", i + 1, f.len(), cols.len()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1));
        let values = f[1..]
            .chunks(3)
            .map(|c| {
                Ok(SceneValue {
                    min_ade: num(c[0])?,
                    min_fde: num(c[1])?,
                    mode: c[2].parse().map_err(|e| format!("row {}: {e}", i + 1))?,
                })
            })
            .collect::<std::result::Result<_, String>>()?;
        out.push(SceneMetrics {
            scene_id: f[0].parse().map_err(|e| format!("row {}: {e}", i + 1))?,
            values,
        });
    }
    Ok((ks, out))
}

/// Aligned text table with one row per named report.
pub fn format_table(rows: &[(String, &MetricReport)]) -> String {
    let ks: Vec<usize> = rows
        .first()
        .map(|(_, r)| r.metrics.iter().map(|m| m.k).collect())
        .unwrap_or_default();
    let name_w = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(5);
    let mut s = format!("{:<name_w$}", "model");
    for k in &ks {
        let _ = write!(s, " | {:^26}", format!("k={k}"));
    }
    s.push('\n');
    let _ = write!(s, "{:<name_w$}", "");
    for _ in &ks {
        let _ = write!(s, " | {:>8} {:>8} {:>8}", "minADE", "minFDE", "MR");
    }
    s.push('\n');
    s.push_str(&"-".repeat(name_w + ks.len() * 29));
    s.push('\n');
    for (name, r) in rows {
        let _ = write!(s, "{name:<name_w$}");
        for m in &r.metrics {
            let _ = write!(s, " | {:>8.3} {:>8.3} {:>8.3}", m.min_ade, m.min_fde, m.miss_rate);
        }
        s.push('\n');
    }
    s
}

/// Histogram of minFDE values beyond the miss threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    /// Bin edges; bin `i` is `(edges[i], edges[i + 1]]`.
    pub edges: Vec<f64>,
    /// Fraction of the values above the threshold in each bin.
    pub fractions: Vec<f64>,
    /// Number of values above the threshold.
    pub count: usize,
    /// True when no value exceeds the threshold.
    pub empty: bool,
    pub kde: Option<Kde>,
}

/// Gaussian kernel density estimate sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kde {
    pub bandwidth: f64,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Silverman,
    Fixed(f64),
}

/// Grid points of the sampled KDE.
pub const KDE_GRID: usize = 512;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Silverman's rule `0.9 · min(σ, IQR / 1.34) · n^(-1/5)`; falls back to
/// whichever spread is nonzero, and to `fallback` if both are zero.
pub fn silverman_bandwidth(values: &[f64], fallback: f64) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = (quantile(&sorted, 0.75) - quantile(&sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => return fallback,
    };
    0.9 * spread * n.powf(-0.2)
}

pub fn kde(values: &[f64], bandwidth: f64) -> Kde {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 4.0 * bandwidth;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0 * bandwidth;
    let norm = 1.0 / (values.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let x: Vec<f64> = (0..KDE_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (KDE_GRID - 1) as f64)
        .collect();
    let density = x
        .iter()
        .map(|&xi| {
            norm * values
                .iter()
                .map(|&v| {
                    let u = (xi - v) / bandwidth;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Kde { bandwidth, x, density }
}

/// Normalized histogram of the values above the miss threshold, in bins
/// `(2, 2 + w], (2 + w, 2 + 2w], ...`, with an optional KDE of the same
/// values.
pub fn fde_histogram(values: &[f64], bin_width: f64, bandwidth: Option<Bandwidth>) -> Result<HistogramReport> {
    if values.is_empty() {
        return Err(EvalError::EmptySplit);
    }
    assert!(bin_width > 0.0, "bin width must be positive");
    let tail: Vec<f64> = values.iter().copied().filter(|&v| v > MISS_THRESHOLD).collect();
    if tail.is_empty() {
        return Ok(HistogramReport {
            edges: Vec::new(),
            fractions: Vec::new(),
            count: 0,
            empty: true,
            kde: None,
        });
    }
    let bin = |v: f64| (((v - MISS_THRESHOLD) / bin_width).ceil() as usize).max(1) - 1;
    let bins = tail.iter().map(|&v| bin(v)).max().expect("non-empty") + 1;
    let mut counts = vec![0usize; bins];
    for &v in &tail {
        counts[bin(v)] += 1;
    }
    let n = tail.len() as f64;
    let kde = bandwidth.map(|b| {
        let h = match b {
            Bandwidth::Fixed(h) => h,
            Bandwidth::Silverman => silverman_bandwidth(&tail, bin_width),
        };
        kde(&tail, h)
    });
    Ok(HistogramReport {
        edges: (0..=bins).map(|i| MISS_THRESHOLD + bin_width * i as f64).collect(),
        fractions: counts.iter().map(|&c| c as f64 / n).collect(),
        count: tail.len(),
        empty: false,
        kde,
    })
}

impl HistogramReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_low,bin_high,fraction\n");
        for (i, f) in self.fractions.iter().enumerate() {
            let _ = writeln!(s, "{},{},{:?}", self.edges[i], self.edges[i + 1], f);
        }
        s
    }

    pub fn kde_csv(&self) -> Option<String> {
        self.kde.as_ref().map(|k| {
            let mut s = String::from("x,density\n");
            for (x, d) in k.x.iter().zip(&k.density) {
                let _ = writeln!(s, "{x:?},{d:?}");
            }
            s
        })
    }

    /// Bars of the normalized histogram with the KDE overlaid, scaled to
    /// the bar heights.
    pub fn to_svg(&self) -> String {
        let (w, h, pad) = (640.0, 360.0, 40.0);
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
        );
        if self.empty {
            let _ = writeln!(s, "<text x=\"{pad}\" y=\"{pad}\">no minFDE above 2 m</text>\n</svg>");
            return s;
        }
        let bin_w = self.edges[1] - self.edges[0];
        let (x0, x1) = (self.edges[0], *self.edges.last().expect("edges"));
        let kde_scaled: Vec<(f64, f64)> = self
            .kde
            .iter()
            .flat_map(|k| k.x.iter().zip(&k.density).map(move |(&x, &d)| (x, d * bin_w)))
            .filter(|&(x, _)| x >= x0 && x <= x1)
            .collect();
        let ymax = self
            .fractions
            .iter()
            .copied()
            .chain(kde_scaled.iter().map(|p| p.1))
            .fold(0.0, f64::max)
            .max(1e-12);
        let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - y / ymax * (h - 2.0 * pad);
        for (i, f) in self.fractions.iter().enumerate() {
            let (a, b) = (sx(self.edges[i]), sx(self.edges[i + 1]));
            let _ = writeln!(
                s,
                "<rect x=\"{a:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#9ecae1\" stroke=\"#3182bd\"/>",
                sy(*f),
                b - a,
                h - pad - sy(*f)
            );
        }
        if !kde_scaled.is_empty() {
            let pts: Vec<String> = kde_scaled
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                "<polyline fill=\"none\" stroke=\"#de2d26\" points=\"{}\"/>",
                pts.join(" ")
            );
        }
        let _ = writeln!(
            s,
            "<line x1=\"{pad}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>",
            h - pad,
            w - pad
        );
        let _ = writeln!(s, "<text x=\"{pad}\" y=\"{}\">{x0} m</text>", h - pad / 4.0);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{x1} m</text>", w - 2.0 * pad, h - pad / 4.0);
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(x: f64, y: f64) -> LocalPoint {
        LocalPoint::new(x, y)
    }

    fn line(offset: LocalPoint) -> Vec<LocalPoint> {
        (1..=30).map(|t| lp(t as f64, 0.0) + offset).collect()
    }

    fn single(traj: Vec<LocalPoint>) -> PredictionSet {
        PredictionSet {
            trajectories: vec![traj],
            confidences: vec![1.0],
        }
    }

    #[test]
    fn three_four_five() {
        let gt: Vec<LocalPoint> = vec![lp(0.0, 0.0); 30];
        let pred = single(vec![lp(3.0, 4.0); 30]);
        assert_eq!(min_fde(&pred, &gt, 1).unwrap(), (5.0, 0));
        assert!(matches!(
            min_fde(&pred, &gt, 2),
            Err(EvalError::TooManyModes { k: 2, available: 1 })
        ));
    }

    #[test]
    fn min_ade_constant_offset() {
        let gt = line(lp(0.0, 0.0));
        let pred = single(line(lp(1.0, 0.0)));
        assert_eq!(min_ade(&pred, &gt, 1).unwrap(), 1.0);
        assert_eq!(min_ade(&single(gt.clone()), &gt, 1).unwrap(), 0.0);
    }

    #[test]
    fn min_ade_follows_the_fde_winner() {
        let gt = line(lp(0.0, 0.0));
        // Mode 0 hugs the path but ends 1 m off; mode 1 is far off until it
        // lands exactly on the endpoint.
        let mut a = gt.clone();
        a[29] = a[29] + lp(0.0, 1.0);
        let mut b = line(lp(0.0, 10.0));
        b[29] = gt[29];
        let pred = PredictionSet {
            trajectories: vec![a, b.clone()],
            confidences: vec![0.5, 0.5],
        };
        assert_eq!(min_fde(&pred, &gt, 2).unwrap(), (0.0, 1));
        let expected = ade(&b, &gt);
        assert!(expected > 9.0);
        assert_eq!(min_ade(&pred, &gt, 2).unwrap(), expected);
    }

    #[test]
    fn k1_uses_the_most_confident_mode() {
        let gt = line(lp(0.0, 0.0));
        let pred = PredictionSet {
            trajectories: vec![gt.clone(), line(lp(0.0, 3.0)), line(lp(0.0, 4.0))],
            confidences: vec![0.2, 0.4, 0.4],
        };
        assert_eq!(min_fde(&pred, &gt, 1).unwrap(), (3.0, 1));
        assert_eq!(min_fde(&pred, &gt, 2).unwrap(), (3.0, 1));
        assert_eq!(min_fde(&pred, &gt, 3).unwrap(), (0.0, 0));
    }

    #[test]
    fn miss_rate_boundary_and_counts() {
        let gt = line(lp(0.0, 0.0));
        let at = |d: f64| single(line(lp(0.0, d)));
        assert_eq!(miss_rate(&[at(0.0)], &[gt.clone()], 1).unwrap(), 0.0);
        assert_eq!(miss_rate(&[at(2.0)], &[gt.clone()], 1).unwrap(), 0.0);
        let preds: Vec<PredictionSet> = (0..10).map(|i| at(if i < 3 { 2.5 } else { 0.0 })).collect();
        let futures = vec![gt; 10];
        assert_eq!(miss_rate(&preds, &futures, 1).unwrap(), 0.3);
        assert!(matches!(miss_rate(&[], &[], 1), Err(EvalError::EmptySplit)));
    }

    #[test]
    fn histogram_example() {
        let r = fde_histogram(&[3.0, 3.0, 5.0, 1.0, 2.0], 2.0, None).unwrap();
        assert_eq!(r.edges, vec![2.0, 4.0, 6.0]);
        assert_eq!(r.fractions, vec![2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(r.count, 3);
        let r = fde_histogram(&[4.0], 2.0, None).unwrap();
        assert_eq!(r.fractions, vec![1.0]);
        assert_eq!(r.edges, vec![2.0, 4.0]);
        let r = fde_histogram(&[0.5, 2.0], 1.0, None).unwrap();
        assert!(r.empty);
    }

    #[test]
    fn kde_integrates_to_one_and_peaks_at_a_single_value() {
        let values: Vec<f64> = (0..50).map(|i| 2.1 + (i as f64 * 0.37) % 6.0).collect();
        let r = fde_histogram(&values, 0.5, Some(Bandwidth::Silverman)).unwrap();
        let k = r.kde.unwrap();
        let area: f64 =
            k.x.windows(2)
                .zip(k.density.windows(2))
                .map(|(x, d)| (x[1] - x[0]) * (d[0] + d[1]) / 2.0)
                .sum();
        assert!((area - 1.0).abs() < 1e-2, "{area}");

        let r = fde_histogram(&[3.7], 0.5, Some(Bandwidth::Silverman)).unwrap();
        let k = r.kde.unwrap();
        assert_eq!(k.bandwidth, 0.5);
        let peak = k.x[k
            .density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0];
        assert!((peak - 3.7).abs() <= (k.x[1] - k.x[0]), "{peak}");
    }

    #[test]
    fn csv_round_trip_matches_report() {
        let gt = line(lp(0.0, 0.0));
        let preds: Vec<PredictionSet> = (0..4)
            .map(|i| single(line(lp(0.1 * i as f64, 1.3 * i as f64))))
            .collect();
        let futures = vec![gt; 4];
        let ks = [1];
        let per = scene_metrics(&[10, 11, 12, 13], &preds, &futures, &ks).unwrap();
        let report = aggregate(&per, &ks).unwrap();
        let (ks2, back) = parse_scene_csv(&scene_csv(&per, &ks)).unwrap();
        assert_eq!(ks2, ks);
        assert_eq!(back, per);
        assert_eq!(aggregate(&back, &ks2).unwrap(), report);
        assert_eq!(report.at(1).unwrap().miss_rate, 0.5);
    }

    #[test]
    fn table_has_a_row_per_model() {
        let r = MetricReport {
            scenes: 1,
            metrics: vec![KMetrics {
                k: 1,
                min_ade: 1.0,
                min_fde: 2.0,
                miss_rate: 0.0,
            }],
        };
        let t = format_table(&[("nav".into(), &r), ("none".into(), &r)]);
        assert_eq!(t.lines().count(), 5);
        assert!(t.contains("k=1"));
    }
}
