//! Timestamped bow pose streams.

use std::fmt;

use crate::error::{Error, Result};
use crate::geom::{UnitQuat, Vec3};
use crate::scalar::Real;

/// Capture cadence of the bow tracker.
pub const DEFAULT_RATE_HZ: f64 = 80.0;

/// A gap longer than this many nominal periods is reported by validation.
pub const GAP_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionSample<T> {
    /// Milliseconds since recording start.
    pub t: T,
    pub pos: Vec3<T>,
    pub orient: UnitQuat<T>,
}

impl<T: Real> MotionSample<T> {
    pub fn new(t: T, pos: Vec3<T>, orient: UnitQuat<T>) -> Self {
        Self { t, pos, orient }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionTrack<T> {
    pub samples: Vec<MotionSample<T>>,
    pub nominal_rate_hz: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    /// Timestamp at `index` does not exceed the one before it.
    NonMonotone { index: usize },
    NegativeTime { index: usize },
    NonFinite { index: usize },
    NonUnitQuaternion { index: usize, norm: f64 },
    /// Interval between `index - 1` and `index` exceeds the gap threshold.
    Gap { index: usize, gap_ms: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonMonotone { index } => write!(f, "sample {index}: timestamp not increasing"),
            Violation::NegativeTime { index } => write!(f, "sample {index}: negative timestamp"),
            Violation::NonFinite { index } => write!(f, "sample {index}: non-finite value"),
            Violation::NonUnitQuaternion { index, norm } => {
                write!(f, "sample {index}: quaternion norm {norm}")
            }
            Violation::Gap { index, gap_ms } => write!(f, "sample {index}: {gap_ms} ms gap"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl<T: Real> MotionTrack<T> {
    pub fn new(samples: Vec<MotionSample<T>>) -> Self {
        Self::with_rate(samples, T::lit(DEFAULT_RATE_HZ))
    }

    pub fn with_rate(samples: Vec<MotionSample<T>>, nominal_rate_hz: T) -> Self {
        Self { samples, nominal_rate_hz }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Nominal sampling period in milliseconds.
    pub fn nominal_period_ms(&self) -> T {
        T::lit(1000.0) / self.nominal_rate_hz
    }

    pub fn first_t(&self) -> Option<T> {
        self.samples.first().map(|s| s.t)
    }

    pub fn last_t(&self) -> Option<T> {
        self.samples.last().map(|s| s.t)
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3<T>> + '_ {
        self.samples.iter().map(|s| s.pos)
    }

    pub(crate) fn require(&self, needed: usize) -> Result<()> {
        if self.samples.len() < needed {
            Err(Error::InsufficientData { needed, got: self.samples.len() })
        } else {
            Ok(())
        }
    }

    /// Lists every invariant violation; empty iff the track is well formed.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let gap_limit = T::lit(GAP_FACTOR) * self.nominal_period_ms();
        for (i, s) in self.samples.iter().enumerate() {
            if !(s.t.is_finite() && s.pos.is_finite() && s.orient.is_finite()) {
                violations.push(Violation::NonFinite { index: i });
                continue;
            }
            if s.t < T::zero() {
                violations.push(Violation::NegativeTime { index: i });
            }
            if !s.orient.is_unit() {
                violations.push(Violation::NonUnitQuaternion {
                    index: i,
                    norm: s.orient.norm().as_f64(),
                });
            }
            if i > 0 {
                let prev = self.samples[i - 1].t;
                if !prev.is_finite() {
                    continue;
                }
                let dt = s.t - prev;
                if dt <= T::zero() {
                    violations.push(Violation::NonMonotone { index: i });
                } else if dt > gap_limit {
                    violations.push(Violation::Gap { index: i, gap_ms: dt.as_f64() });
                }
            }
        }
        ValidationReport { violations }
    }

    /// Resamples onto the uniform grid `t_first + k / rate_hz` covering
    /// `[t_first, t_last]`.
    ///
    /// Positions are interpolated linearly, orientations by shortest-arc slerp.
    pub fn resample(&self, rate_hz: T) -> Result<Self> {
        if !(rate_hz > T::zero() && rate_hz.is_finite()) {
            return Err(Error::InvalidArgument(format!("resample rate must be positive, got {rate_hz}")));
        }
        self.require(2)?;
        let period = T::lit(1000.0) / rate_hz;
        let t0 = self.samples[0].t;
        let t_end = self.samples[self.samples.len() - 1].t;
        // Tolerate rounding in the grid count so the final sample of an
        // on-grid track is not dropped.
        let steps = ((t_end - t0) / period + T::lit(1e-9)).floor();
        let n = steps.to_usize().unwrap_or(0) + 1;

        let mut out = Vec::with_capacity(n);
        let mut seg = 0;
        for k in 0..n {
            let t = t0 + T::from_usize_lossy(k) * period;
            while seg + 2 < self.samples.len() && self.samples[seg + 1].t <= t {
                seg += 1;
            }
            let a = &self.samples[seg];
            let b = &self.samples[seg + 1];
            let u = ((t - a.t) / (b.t - a.t)).max(T::zero()).min(T::one());
            out.push(interpolate(a, b, t, u));
        }
        Ok(Self::with_rate(out, rate_hz))
    }

    /// Converts every value to another scalar type.
    pub fn cast<U: Real>(&self) -> MotionTrack<U> {
        MotionTrack {
            samples: self
                .samples
                .iter()
                .map(|s| MotionSample::new(U::lit(s.t.as_f64()), s.pos.cast(), s.orient.cast()))
                .collect(),
            nominal_rate_hz: U::lit(self.nominal_rate_hz.as_f64()),
        }
    }
}

fn interpolate<T: Real>(a: &MotionSample<T>, b: &MotionSample<T>, t: T, u: T) -> MotionSample<T> {
    if u == T::zero() {
        return MotionSample::new(t, a.pos, a.orient);
    }
    if u == T::one() {
        return MotionSample::new(t, b.pos, b.orient);
    }
    MotionSample::new(t, a.pos.lerp(b.pos, u), a.orient.slerp(b.orient, u))
}
