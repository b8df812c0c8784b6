//! Monophonic fundamental frequency estimation with YIN.
//!
//! For a window `x` and lag `τ` the difference function is
//! `d(τ) = Σ_j (x_j − x_{j+τ})²` over a fixed integration length, and the
//! cumulative-mean-normalized difference is `d'(0) = 1`,
//! `d'(τ) = d(τ) · τ / Σ_{k=1..τ} d(k)`. The estimate is the first lag whose
//! `d'` falls below the absolute threshold, followed down to its local minimum
//! and refined by parabolic interpolation.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YinConfig<T> {
    /// Absolute threshold on `d'`.
    pub threshold: T,
    pub min_hz: T,
    pub max_hz: T,
}

impl<T: Real> Default for YinConfig<T> {
    fn default() -> Self {
        Self { threshold: T::lit(0.1), min_hz: T::lit(30.0), max_hz: T::lit(2000.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchEstimate<T> {
    pub hz: T,
    /// `1 − d'(τ*)`, in `[0, 1]`.
    pub confidence: T,
}

impl<T: Real> YinConfig<T> {
    fn shortest_lag(&self, sample_rate: T) -> usize {
        (sample_rate / self.max_hz).floor().to_usize().unwrap_or(1).max(2)
    }

    fn longest_lag(&self, sample_rate: T) -> usize {
        (sample_rate / self.min_hz).ceil().to_usize().unwrap_or(usize::MAX)
    }

    /// Shortest window accepted by [`detect_pitch_with`].
    ///
    /// It must hold two periods of the highest detectable pitch plus the
    /// interpolation neighbours. Longer windows extend the search towards
    /// `min_hz`, which a window of `2 · sample_rate / min_hz` samples reaches.
    pub fn min_window_len(&self, sample_rate: T) -> usize {
        2 * (self.shortest_lag(sample_rate) + 2)
    }
}

/// [`detect_pitch_with`] using the default configuration (threshold 0.1,
/// 30–2000 Hz).
pub fn detect_pitch<T: Real>(window: &[T], sample_rate: T) -> Result<Option<PitchEstimate<T>>> {
    detect_pitch_with(window, sample_rate, &YinConfig::default())
}

pub fn detect_pitch_with<T: Real>(
    window: &[T],
    sample_rate: T,
    cfg: &YinConfig<T>,
) -> Result<Option<PitchEstimate<T>>> {
    if !(sample_rate > T::zero()) || !(cfg.min_hz > T::zero() && cfg.min_hz < cfg.max_hz) {
        return Err(Error::InvalidArgument(format!(
            "pitch search needs 0 < min_hz < max_hz and a positive rate (got {} < {} at {})",
            cfg.min_hz, cfg.max_hz, sample_rate
        )));
    }
    let needed = cfg.min_window_len(sample_rate);
    if window.len() < needed {
        return Err(Error::InsufficientWindow { len: window.len(), needed });
    }

    let tau_min = cfg.shortest_lag(sample_rate);
    // d is evaluated on 0..=lag_limit; candidates need a right neighbour
    let lag_limit = (cfg.longest_lag(sample_rate) + 1).min(window.len() / 2);
    let span = window.len() - lag_limit;

    let cmnd = normalized_difference(window, lag_limit, span);

    let Some(mut tau) = (tau_min..lag_limit).find(|&t| cmnd[t] < cfg.threshold) else {
        return Ok(None);
    };
    while tau + 1 < lag_limit && cmnd[tau + 1] < cmnd[tau] {
        tau += 1;
    }

    let (a, b, c) = (cmnd[tau - 1], cmnd[tau], cmnd[tau + 1]);
    let denom = a - T::lit(2.0) * b + c;
    let shift = if denom.abs() > T::epsilon() {
        (T::lit(0.5) * (a - c) / denom).max(-T::one()).min(T::one())
    } else {
        T::zero()
    };
    let period = T::from_usize_lossy(tau) + shift;
    let hz = sample_rate / period;
    if !(hz >= cfg.min_hz && hz <= cfg.max_hz) {
        return Ok(None);
    }
    let confidence = (T::one() - b).max(T::zero()).min(T::one());
    Ok(Some(PitchEstimate { hz, confidence }))
}

/// `d'(τ)` for `τ` in `0..=lag_limit`, integrating over `span` samples.
fn normalized_difference<T: Real>(x: &[T], lag_limit: usize, span: usize) -> Vec<T> {
    let head = &x[..span];
    let mut out = Vec::with_capacity(lag_limit + 1);
    out.push(T::one());
    let mut running = T::zero();
    for tau in 1..=lag_limit {
        let d: T = head
            .iter()
            .zip(&x[tau..tau + span])
            .map(|(&p, &q)| {
                let e = p - q;
                e * e
            })
            .sum();
        running += d;
        out.push(if running > T::zero() { d * T::from_usize_lossy(tau) / running } else { T::one() });
    }
    out
}

/// Estimates for consecutive windows starting at `k · hop`; only windows that
/// fit entirely inside `samples` are evaluated.
pub fn pitch_track<T: Real>(
    samples: &[T],
    sample_rate: T,
    window_len: usize,
    hop_len: usize,
    cfg: &YinConfig<T>,
) -> Result<Vec<Option<PitchEstimate<T>>>> {
    if hop_len == 0 {
        return Err(Error::InvalidArgument("pitch hop must be at least 1".into()));
    }
    if samples.len() < window_len {
        return Ok(Vec::new());
    }
    let count = (samples.len() - window_len) / hop_len + 1;
    (0..count)
        .map(|k| detect_pitch_with(&samples[k * hop_len..k * hop_len + window_len], sample_rate, cfg))
        .collect()
}
