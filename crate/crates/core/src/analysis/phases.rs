//! Piecewise-linear segmentation of log10 error traces.

use serde::Serialize;

/// Points at or below this fraction of the initial error are ignored.
pub const RELATIVE_FLOOR: f64 = 1e-12;
/// An extra segment must cut the residual sum of squares by this fraction.
pub const MIN_RSS_GAIN: f64 = 0.25;
/// ...and the current fit must miss by at least this many decades (RMS).
pub const MIN_RMS: f64 = 0.1;
pub const MAX_SEGMENTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    /// First and last iteration index, inclusive.
    pub start: usize,
    pub end: usize,
    /// Slope in decades per iteration.
    pub slope: f64,
    /// Contraction factor per iteration, `10^slope`.
    pub ratio: f64,
    /// log10 of the relative error where the fitted line ends.
    pub end_log10: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSegmentation {
    pub segments: Vec<Segment>,
    /// Number of trace points used in the fit.
    pub points: usize,
    pub rss: f64,
}

impl PhaseSegmentation {
    pub fn count(&self) -> usize {
        self.segments.len()
    }
}

fn fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let rss = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    (slope, icpt, rss)
}

/// Best split of `0..n` into `parts` contiguous runs of at least two points.
fn best_split(x: &[f64], y: &[f64], parts: usize) -> Option<(Vec<usize>, f64)> {
    let n = x.len();
    if n < 2 * parts {
        return None;
    }
    if parts == 1 {
        return Some((vec![0, n], fit(x, y).2));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for cut in 2..=n - 2 * (parts - 1) {
        let head = fit(&x[..cut], &y[..cut]).2;
        if let Some((mut rest, rss)) = best_split(&x[cut..], &y[cut..], parts - 1) {
            let total = head + rss;
            if best.as_ref().map_or(true, |b| total < b.1) {
                for b in rest.iter_mut() {
                    *b += cut;
                }
                rest.insert(0, 0);
                best = Some((rest, total));
            }
        }
    }
    best
}

/// Splits `log10(e_k / e_0)` into one to three independently fitted lines.
pub fn detect_phases(errors: &[f64]) -> PhaseSegmentation {
    let e0 = errors.first().copied().unwrap_or(0.0);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    if e0 > 0.0 && e0.is_finite() {
        for (k, &e) in errors.iter().enumerate() {
            let r = e / e0;
            if r > RELATIVE_FLOOR && r.is_finite() {
                xs.push(k as f64);
                ys.push(r.log10());
            }
        }
    }
    let points = xs.len();
    let Some((mut bounds, mut rss)) = best_split(&xs, &ys, 1) else {
        return PhaseSegmentation { segments: Vec::new(), points, rss: 0.0 };
    };
    for parts in 2..=MAX_SEGMENTS {
        let rms = (rss / points as f64).sqrt();
        let Some((b, r)) = best_split(&xs, &ys, parts) else { break };
        if rms > MIN_RMS && r < (1.0 - MIN_RSS_GAIN) * rss {
            bounds = b;
            rss = r;
        } else {
            break;
        }
    }
    let segments = bounds
        .windows(2)
        .map(|w| {
            let (x, y) = (&xs[w[0]..w[1]], &ys[w[0]..w[1]]);
            let (slope, icpt, _) = fit(x, y);
            let last = x[x.len() - 1];
            Segment {
                start: x[0] as usize,
                end: last as usize,
                slope,
                ratio: 10f64.powf(slope),
                end_log10: icpt + slope * last,
            }
        })
        .collect();
    PhaseSegmentation { segments, points, rss }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_rate() {
        let e: Vec<f64> = (0..20).map(|k| 0.5f64.powi(k)).collect();
        let p = detect_phases(&e);
        assert_eq!(p.count(), 1);
        assert!((p.segments[0].ratio - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_rates() {
        let mut e: Vec<f64> = (0..6).map(|k| 0.01f64.powi(k)).collect();
        let last = e[5];
        e.extend((1..20).map(|k| last * 0.8f64.powi(k)));
        let p = detect_phases(&e);
        assert_eq!(p.count(), 2);
        // Iteration 5 lies on both lines, so either side may take it.
        assert!((4..=5).contains(&p.segments[0].end));
        assert!((p.segments[1].ratio - 0.8).abs() < 1e-9);
    }

    #[test]
    fn three_rates() {
        let mut e = vec![1.0];
        for k in 1..30 {
            let r = if k <= 3 { 0.9 } else if k <= 8 { 0.02 } else { 0.7 };
            e.push(e[k - 1] * r);
        }
        let p = detect_phases(&e);
        assert_eq!(p.count(), 3);
    }

    #[test]
    fn floor_points_dropped() {
        let e = [1.0, 1e-6, 1e-13, 0.0];
        let p = detect_phases(&e);
        assert_eq!(p.points, 2);
    }

    #[test]
    fn empty_trace() {
        assert_eq!(detect_phases(&[]).count(), 0);
        assert_eq!(detect_phases(&[0.0, 0.0]).count(), 0);
    }
}
