//! Order statistics and a rank-sum test for comparing planner batches.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Linearly interpolated quantile (the "type 7" estimator: position
/// `q * (n - 1)` in the sorted sample). `None` for an empty sample or NaNs.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi || frac == 0.0 || sorted[lo] == sorted[hi] {
        return Some(sorted[lo]);
    }
    Some(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

/// Lower quartile, median, upper quartile.
pub fn quartiles(values: &[f64]) -> Option<(f64, f64, f64)> {
    Some((quantile(values, 0.25)?, quantile(values, 0.5)?, quantile(values, 0.75)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankTest {
    /// Mann–Whitney U of the first sample.
    pub u: f64,
    pub z: f64,
    pub p_value: f64,
}

/// One-sided Mann–Whitney U test of "`x` tends to be smaller than `y`",
/// using the normal approximation with tie correction and a 0.5 continuity
/// correction. Infinite values rank as ordinary extremes. `None` if either
/// sample is empty, contains NaN, or all values are tied.
pub fn mann_whitney_less(x: &[f64], y: &[f64]) -> Option<RankTest> {
    let (n1, n2) = (x.len(), y.len());
    if n1 == 0 || n2 == 0 || x.iter().chain(y).any(|v| v.is_nan()) {
        return None;
    }
    let mut pooled: Vec<(f64, bool)> = x.iter().map(|&v| (v, true)).chain(y.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n = (n1 + n2) as f64;
    let mut rank_sum_x = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        // average of ranks i+1 ..= j+1
        let rank = (i + j + 2) as f64 / 2.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_sum_x += rank * pooled[i..=j].iter().filter(|p| p.1).count() as f64;
        i = j + 1;
    }

    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let u = rank_sum_x - n1f * (n1f + 1.0) / 2.0;
    let mean = n1f * n2f / 2.0;
    let var = n1f * n2f / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return None;
    }
    let z = (u - mean + 0.5) / var.sqrt();
    let normal = Normal::standard();
    Some(RankTest {
        u,
        z,
        p_value: normal.cdf(z),
    })
}
