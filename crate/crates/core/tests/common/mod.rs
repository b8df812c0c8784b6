#![allow(dead_code)]

use bowtrace::features::{FeatureFrame, FeatureTrack};
use bowtrace::geom::{UnitQuat, Vec3};
use bowtrace::motion::{MotionSample, MotionTrack};
use proptest::prelude::*;

pub fn vec3(range: f64) -> impl Strategy<Value = Vec3<f64>> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

pub fn unit_quat() -> impl Strategy<Value = UnitQuat<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter_map("degenerate", |(w, x, y, z)| {
            let n = (w * w + x * x + y * y + z * z).sqrt();
            (n > 0.1).then(|| UnitQuat::normalize(w, x, y, z)).flatten()
        })
}

/// Valid track with strictly increasing timestamps and unit orientations.
pub fn track(min: usize, max: usize) -> impl Strategy<Value = MotionTrack<f64>> {
    (0.0..1000.0f64, prop::collection::vec((1.0..40.0f64, vec3(1.0), unit_quat()), min..max)).prop_map(|(t0, steps)| {
        let mut t = t0;
        let samples = steps
            .into_iter()
            .map(|(dt, p, q)| {
                t += dt;
                MotionSample::new(t, p, q)
            })
            .collect();
        MotionTrack::new(samples)
    })
}

/// Smooth 80 Hz track whose orientation changes slowly enough not to alias.
pub fn smooth_track(min: usize, max: usize) -> impl Strategy<Value = MotionTrack<f64>> {
    (min..max, vec3(1.0), vec3(0.5), unit_quat(), vec3(1.0), 0.1..4.0f64).prop_map(|(n, base, amp, q0, axis, freq)| {
        let axis = axis.normalized().unwrap_or(Vec3::unit_z());
        let samples = (0..n)
            .map(|i| {
                let t = 12.5 * i as f64;
                let a = std::f64::consts::TAU * freq * t / 1000.0;
                let p = base + Vec3::new(amp.x * a.sin(), amp.y * a.cos(), amp.z * (2.0 * a).sin());
                MotionSample::new(t, p, UnitQuat::from_axis_angle(axis, 0.5 * a.sin()) * q0)
            })
            .collect();
        MotionTrack::new(samples)
    })
}

pub fn feature_track(id: &str, track: &MotionTrack<f64>) -> FeatureTrack {
    FeatureTrack {
        source_id: id.into(),
        frames: track
            .samples
            .iter()
            .map(|s| FeatureFrame::kinematic(s.t, s.pos, s.orient, 0.0, 0.0))
            .collect(),
        has_pitch: false,
        has_loudness: false,
    }
}
