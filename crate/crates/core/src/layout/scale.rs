use serde::{Deserialize, Serialize};

use super::XValue;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScale {
    pub domain: [f64; 2],
    pub range: [f64; 2],
}

impl LinearScale {
    pub fn new(domain: [f64; 2], range: [f64; 2]) -> LinearScale {
        LinearScale { domain, range }
    }

    pub fn apply(&self, v: f64) -> f64 {
        let [d0, d1] = self.domain;
        let [r0, r1] = self.range;
        r0 + (v - d0) / (d1 - d0) * (r1 - r0)
    }

    pub fn invert(&self, px: f64) -> f64 {
        let [d0, d1] = self.domain;
        let [r0, r1] = self.range;
        d0 + (px - r0) / (r1 - r0) * (d1 - d0)
    }

    /// Round tick values, roughly `count` of them, inside the domain.
    pub fn ticks(&self, count: usize) -> Vec<f64> {
        let [lo, hi] = self.domain;
        let span = hi - lo;
        if span.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || count == 0 {
            return vec![lo];
        }
        let raw = span / count as f64;
        let magnitude = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * magnitude)
            .find(|s| span / s <= count as f64)
            .unwrap_or(10.0 * magnitude);
        let first = (lo / step).ceil() as i64;
        let last = (hi / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

/// Discrete scale with equal bands and fractional paddings, following the
/// common `paddingInner` / `paddingOuter` convention with centered alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BandScale {
    pub domain: Vec<XValue>,
    pub labels: Vec<String>,
    pub range: [f64; 2],
    pub padding_inner: f64,
    pub padding_outer: f64,
    pub step: f64,
    pub bandwidth: f64,
    pub start: f64,
}

impl BandScale {
    pub fn new(
        domain: Vec<XValue>,
        labels: Vec<String>,
        range: [f64; 2],
        padding_inner: f64,
        padding_outer: f64,
    ) -> BandScale {
        let n = domain.len() as f64;
        let [r0, r1] = range;
        let step = (r1 - r0) / (n - padding_inner + 2.0 * padding_outer).max(1.0);
        let start = r0 + (r1 - r0 - step * (n - padding_inner)) / 2.0;
        BandScale {
            domain,
            labels,
            range,
            padding_inner,
            padding_outer,
            step,
            bandwidth: step * (1.0 - padding_inner),
            start,
        }
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn band_start(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn band_center(&self, i: usize) -> f64 {
        self.band_start(i) + self.bandwidth / 2.0
    }

    pub fn index_of(&self, value: &XValue) -> Option<usize> {
        self.domain.iter().position(|d| d == value)
    }

    /// Band owning `px`: each band claims half of the inner gap on either
    /// side, and positions in the outer padding snap to the nearest band.
    pub fn index_at(&self, px: f64) -> Option<usize> {
        if self.domain.is_empty() {
            return None;
        }
        let half_gap = self.step * self.padding_inner / 2.0;
        let k = ((px - self.start + half_gap) / self.step).floor();
        Some(k.clamp(0.0, (self.domain.len() - 1) as f64) as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Scale {
    Band(BandScale),
    Linear(LinearScale),
}

impl Scale {
    /// Canvas position of a data value: band center or affine map.
    pub fn position(&self, value: &XValue) -> f64 {
        match self {
            Scale::Band(b) => b.index_of(value).map_or(f64::NAN, |i| b.band_center(i)),
            Scale::Linear(s) => value.as_f64().map_or(f64::NAN, |v| s.apply(v)),
        }
    }
}
