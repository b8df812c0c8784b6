//! Translational and rotational speed of the bow.
//!
//! Both use central differences over `(i-1, i+1)` at interior samples and the
//! single adjacent step at the two endpoints.

use crate::error::{Error, Result};
use crate::geom::geodesic_angle;
use crate::motion::{MotionSample, MotionTrack};
use crate::scalar::Real;

/// Index range used for the derivative at `i` in a series of length `n`.
#[inline]
pub fn difference_span(i: usize, n: usize) -> (usize, usize) {
    (i.saturating_sub(1), (i + 1).min(n - 1))
}

fn elapsed_s<T: Real>(a: &MotionSample<T>, b: &MotionSample<T>) -> Result<T> {
    let dt = (b.t - a.t) / T::lit(1000.0);
    if dt > T::zero() {
        Ok(dt)
    } else {
        Err(Error::Domain(format!("timestamps {} and {} do not increase", a.t, b.t)))
    }
}

/// Speed in m/s between two samples.
pub fn span_speed<T: Real>(a: &MotionSample<T>, b: &MotionSample<T>) -> Result<T> {
    Ok((b.pos - a.pos).norm() / elapsed_s(a, b)?)
}

/// Angular speed in rad/s between two samples.
pub fn span_rotation_speed<T: Real>(a: &MotionSample<T>, b: &MotionSample<T>) -> Result<T> {
    Ok(geodesic_angle(a.orient, b.orient)? / elapsed_s(a, b)?)
}

pub fn movement_speed<T: Real>(track: &MotionTrack<T>) -> Result<Vec<T>> {
    track.require(2)?;
    let s = &track.samples;
    (0..s.len())
        .map(|i| {
            let (lo, hi) = difference_span(i, s.len());
            span_speed(&s[lo], &s[hi])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationSpeed<T> {
    pub values: Vec<T>,
    /// Frames whose differencing span contains a step of more than π/2.
    ///
    /// Past that point the geodesic angle of the span can wrap, so a rotation
    /// faster than π per step shows up as a slower one.
    pub aliased: Vec<usize>,
}

/// Per-step rotation above which a frame is flagged as possibly aliased.
pub fn aliasing_step_limit<T: Real>() -> T {
    T::FRAC_PI_2()
}

pub fn rotation_speed<T: Real>(track: &MotionTrack<T>) -> Result<RotationSpeed<T>> {
    track.require(2)?;
    let s = &track.samples;
    let n = s.len();
    let steps = s
        .windows(2)
        .map(|w| geodesic_angle(w[0].orient, w[1].orient))
        .collect::<Result<Vec<T>>>()?;
    let limit = aliasing_step_limit::<T>();

    let mut values = Vec::with_capacity(n);
    let mut aliased = Vec::new();
    for i in 0..n {
        let (lo, hi) = difference_span(i, n);
        values.push(span_rotation_speed(&s[lo], &s[hi])?);
        if steps[lo..hi].iter().any(|&a| a > limit) {
            aliased.push(i);
        }
    }
    if !aliased.is_empty() {
        log::warn!(
            "{} frame(s) rotate more than {:.3} rad per step; rotation speed may alias",
            aliased.len(),
            limit.as_f64()
        );
    }
    Ok(RotationSpeed { values, aliased })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{UnitQuat, Vec3};
    use std::f64::consts::PI;

    fn track_from(n: usize, rate: f64, f: impl Fn(f64) -> (Vec3<f64>, UnitQuat<f64>)) -> MotionTrack<f64> {
        MotionTrack::with_rate(
            (0..n)
                .map(|i| {
                    let t = i as f64 * 1000.0 / rate;
                    let (p, q) = f(t / 1000.0);
                    MotionSample::new(t, p, q)
                })
                .collect(),
            rate,
        )
    }

    #[test]
    fn stationary_is_zero() {
        let tr = track_from(10, 80.0, |_| (Vec3::new(0.1, 0.2, 0.3), UnitQuat::identity()));
        assert!(movement_speed(&tr).unwrap().iter().all(|&v| v == 0.0));
        assert!(rotation_speed(&tr).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_linear_motion() {
        let tr = track_from(50, 80.0, |t| (Vec3::new(t, 0.0, 0.0), UnitQuat::identity()));
        for v in movement_speed(&tr).unwrap() {
            assert!((v - 1.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn fixed_axis_rotation() {
        let axis = Vec3::new(0.2, -1.0, 0.4);
        let tr = track_from(81, 80.0, |t| (Vec3::zero(), UnitQuat::from_axis_angle(axis, PI * t)));
        let r = rotation_speed(&tr).unwrap();
        assert!(r.aliased.is_empty());
        for v in r.values {
            assert!((v - PI).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn too_fast_rotation_is_flagged() {
        // 1.2π per step is observed as 0.8π
        let tr = track_from(5, 1.0, |t| (Vec3::zero(), UnitQuat::from_axis_angle(Vec3::unit_z(), 1.2 * PI * t)));
        let r = rotation_speed(&tr).unwrap();
        assert_eq!(r.aliased, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn needs_two_samples() {
        let tr = track_from(1, 80.0, |_| (Vec3::zero(), UnitQuat::identity()));
        assert!(matches!(movement_speed(&tr), Err(Error::InsufficientData { .. })));
        assert!(matches!(rotation_speed(&tr), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn single_precision_speed() {
        let tr = track_from(20, 80.0, |t| (Vec3::new(0.0, 2.0 * t, 0.0), UnitQuat::identity())).cast::<f32>();
        for v in movement_speed(&tr).unwrap() {
            assert!((v - 2.0).abs() < 1e-4);
        }
    }
}
