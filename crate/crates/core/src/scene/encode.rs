//! Mapping normalized feature values to color and thickness.
//!
//! Slow bowing is drawn thick and blue, fast bowing thin and red.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Linear-interpolated percentile of sorted data, `p` in `[0, 100]`.
pub fn percentile_sorted<T: Real>(sorted: &[T], p: T) -> T {
    debug_assert!(!sorted.is_empty());
    let rank = p / T::lit(100.0) * T::from_usize_lossy(sorted.len() - 1);
    let lo = rank.floor().to_usize().unwrap_or(0).min(sorted.len() - 1);
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = rank - T::from_usize_lossy(lo);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn check_percentiles<T: Real>(lo_pct: T, hi_pct: T) -> Result<()> {
    if lo_pct >= T::zero() && lo_pct < hi_pct && hi_pct <= T::lit(100.0) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("percentiles must satisfy 0 <= lo < hi <= 100, got {lo_pct}, {hi_pct}")))
    }
}

/// `(lo, hi)` percentile values of the finite entries of `series`.
pub fn percentile_bounds<T: Real>(series: &[T], lo_pct: T, hi_pct: T) -> Result<Option<(T, T)>> {
    check_percentiles(lo_pct, hi_pct)?;
    let mut sorted: Vec<T> = series.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.is_empty() {
        return Ok(None);
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(Some((percentile_sorted(&sorted, lo_pct), percentile_sorted(&sorted, hi_pct))))
}

/// Maps `v` into `[0, 1]` against fixed bounds; degenerate bounds and
/// non-finite values give 0.5.
pub fn normalize_with_bounds<T: Real>(v: T, (lo, hi): (T, T)) -> T {
    let half = T::lit(0.5);
    if !v.is_finite() || !(hi > lo) {
        return half;
    }
    ((v - lo) / (hi - lo)).max(T::zero()).min(T::one())
}

/// Robust min-max normalization between the `lo_pct` and `hi_pct`
/// percentiles, clamped to `[0, 1]`. A constant series maps to 0.5.
pub fn normalize_feature<T: Real>(series: &[T], lo_pct: T, hi_pct: T) -> Result<Vec<T>> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let bounds = percentile_bounds(series, lo_pct, hi_pct)?;
    Ok(series
        .iter()
        .map(|&v| bounds.map_or(T::lit(0.5), |b| normalize_with_bounds(v, b)))
        .collect())
}

/// Diverging blue → white → red ramp with opaque alpha.
pub fn colormap<T: Real>(u: T) -> [T; 4] {
    let one = T::one();
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let u = if u.is_nan() { half } else { u.max(T::zero()).min(one) };
    if u <= half {
        let w = two * u;
        [w, w, one, one]
    } else {
        let w = two * (one - u);
        [one, w, w, one]
    }
}

/// Inverse-linear thickness: `u = 0` is `max`, `u = 1` is `min`.
pub fn thickness_map<T: Real>(u: T, (min, max): (T, T)) -> T {
    let u = if u.is_nan() { T::lit(0.5) } else { u.max(T::zero()).min(T::one()) };
    max - (max - min) * u
}
