use crate::error::{Error, Result};
use crate::scalar::Real;

/// Clamp value for silence on the decibel scale (16-bit noise floor).
pub const DBFS_FLOOR: f64 = -96.0;

/// RMS level of `window` in dBFS, clamped to `[DBFS_FLOOR, 0]`.
pub fn rms_dbfs<T: Real>(window: &[T]) -> T {
    let floor = T::lit(DBFS_FLOOR);
    if window.is_empty() {
        return floor;
    }
    let mean_sq = window.iter().map(|&x| x * x).sum::<T>() / T::from_usize_lossy(window.len());
    let db = T::lit(10.0) * mean_sq.log10();
    if db.is_nan() {
        return floor;
    }
    db.max(floor).min(T::zero())
}

/// One level per hop: window `k` covers `[k·hop, k·hop + window_len)`,
/// truncated at the end of the clip.
pub fn loudness_track<T: Real>(samples: &[T], window_len: usize, hop_len: usize) -> Result<Vec<T>> {
    if window_len == 0 || hop_len == 0 {
        return Err(Error::InvalidArgument("loudness window and hop must be at least 1".into()));
    }
    let count = samples.len().div_ceil(hop_len);
    Ok((0..count)
        .map(|k| {
            let start = k * hop_len;
            let end = (start + window_len).min(samples.len());
            rms_dbfs(&samples[start..end])
        })
        .collect())
}
