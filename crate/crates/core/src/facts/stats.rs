use serde::{Deserialize, Serialize};

use super::FactError;

/// Linear interpolation between closest ranks on a sorted sample, placing
/// quantile `p` at 1-based position `(n - 1) * p + 1`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn quartiles(values: &[f64]) -> Result<(f64, f64), FactError> {
    if values.len() < 4 {
        return Err(FactError::TooFewValues {
            needed: 4,
            found: values.len(),
        });
    }
    let s = sorted(values);
    Ok((quantile_sorted(&s, 0.25), quantile_sorted(&s, 0.75)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Fences {
    pub q1: f64,
    pub q3: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Fences {
    pub fn excludes(&self, v: f64) -> bool {
        v < self.lower || v > self.upper
    }
}

/// Tukey fences at 1.5 IQR beyond the quartiles.
pub fn fences(values: &[f64]) -> Result<Fences, FactError> {
    if values.len() < 5 {
        return Err(FactError::TooFewValues {
            needed: 5,
            found: values.len(),
        });
    }
    let (q1, q3) = quartiles(values)?;
    let iqr = q3 - q1;
    Ok(Fences {
        q1,
        q3,
        lower: q1 - 1.5 * iqr,
        upper: q3 + 1.5 * iqr,
    })
}

/// Row ids whose value lies strictly beyond the fences, in ascending order.
pub fn detect_outliers(values: &[f64], rows: &[usize]) -> Result<Vec<usize>, FactError> {
    let f = fences(values)?;
    let mut out: Vec<usize> = values
        .iter()
        .zip(rows)
        .filter(|(v, _)| f.excludes(**v))
        .map(|(_, r)| *r)
        .collect();
    out.sort_unstable();
    Ok(out)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Pearson correlation; `None` when either variable is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Least-squares slope of y on x.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Direction {
    Increasing,
    Decreasing,
    Wavering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Step {
    Up,
    Down,
    Flat,
}

impl Step {
    fn of(dy: f64) -> Step {
        if dy > 0.0 {
            Step::Up
        } else if dy < 0.0 {
            Step::Down
        } else {
            Step::Flat
        }
    }
}

/// A maximal run of equal step signs, as indices into the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub start: usize,
    pub end: usize,
    pub step: Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendShape {
    pub direction: Direction,
    pub slope: f64,
    pub runs: Vec<Run>,
}

/// Share of steps that must agree with the slope for a clean trend.
pub const CONSISTENT_STEPS: f64 = 0.75;

pub fn detect_trend(points: &[(f64, f64)]) -> Result<TrendShape, FactError> {
    if points.len() < 2 {
        return Err(FactError::TooFewPoints);
    }
    if points
        .windows(2)
        .any(|w| w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater))
    {
        return Err(FactError::NotIncreasing);
    }
    let mut runs: Vec<Run> = Vec::new();
    for i in 1..points.len() {
        let step = Step::of(points[i].1 - points[i - 1].1);
        match runs.last_mut() {
            Some(run) if run.step == step => run.end = i,
            _ => runs.push(Run {
                start: i - 1,
                end: i,
                step,
            }),
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let slope = slope(&xs, &ys);
    let steps = (points.len() - 1) as f64;
    let rising = points.windows(2).filter(|w| w[1].1 >= w[0].1).count() as f64;
    let falling = points.windows(2).filter(|w| w[1].1 <= w[0].1).count() as f64;
    let direction = if slope > 0.0 && rising >= CONSISTENT_STEPS * steps {
        Direction::Increasing
    } else if slope < 0.0 && falling >= CONSISTENT_STEPS * steps {
        Direction::Decreasing
    } else {
        Direction::Wavering
    };
    Ok(TrendShape { direction, slope, runs })
}
