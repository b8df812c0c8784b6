//! Synthetic recordings for tests, demos and calibration.

use crate::features::midi_to_hz;
use crate::geom::{UnitQuat, Vec3};
use crate::ingest::{AudioClip, Dynamic, Recording, Score, ScoreNote, AUDIO_OFFSET_KEY};
use crate::motion::{MotionSample, MotionTrack};
use crate::scalar::Real;

/// Uniform timestamps `t0 + k · 1000 / rate_hz` for `duration_s` inclusive.
pub fn timestamps<T: Real>(rate_hz: T, duration_s: T, t0: T) -> Vec<T> {
    let period = T::lit(1000.0) / rate_hz;
    let n = (duration_s * rate_hz).round().to_usize().unwrap_or(0) + 1;
    (0..n).map(|k| t0 + T::from_usize_lossy(k) * period).collect()
}

/// Circle of `radius` m in the xy plane at `rev_per_s`, bow fixed in identity
/// orientation.
pub fn circle<T: Real>(radius: T, rev_per_s: T, rate_hz: T, duration_s: T) -> MotionTrack<T> {
    let samples = timestamps(rate_hz, duration_s, T::zero())
        .into_iter()
        .map(|t| {
            let a = T::TAU() * rev_per_s * t / T::lit(1000.0);
            MotionSample::new(t, Vec3::new(radius * a.cos(), radius * a.sin(), T::zero()), UnitQuat::identity())
        })
        .collect();
    MotionTrack::with_rate(samples, rate_hz)
}

/// Bow at rest rotating about `axis` at `rad_per_s`.
pub fn spin<T: Real>(axis: Vec3<T>, rad_per_s: T, rate_hz: T, duration_s: T) -> MotionTrack<T> {
    let samples = timestamps(rate_hz, duration_s, T::zero())
        .into_iter()
        .map(|t| MotionSample::new(t, Vec3::zero(), UnitQuat::from_axis_angle(axis, rad_per_s * t / T::lit(1000.0))))
        .collect();
    MotionTrack::with_rate(samples, rate_hz)
}

/// Sine of `amplitude` at `hz`.
pub fn sine(hz: f64, amplitude: f64, sample_rate_hz: u32, len: usize) -> Vec<f32> {
    let sr = f64::from(sample_rate_hz);
    (0..len).map(|i| (amplitude * (std::f64::consts::TAU * hz * i as f64 / sr).sin()) as f32).collect()
}

/// Back-and-forth bow strokes: `stroke_s` per stroke, sweeping `length_m`
/// along x with a slight arc and tilt, sampled at 80 Hz from `t0_ms`.
pub fn bowing(duration_s: f64, stroke_s: f64, length_m: f64, t0_ms: f64) -> MotionTrack<f64> {
    let samples = timestamps(80.0, duration_s, t0_ms)
        .into_iter()
        .map(|t| {
            let u = (t - t0_ms) / 1000.0 / stroke_s;
            // smooth triangle wave: half a cosine per stroke
            let x = 0.5 * length_m * (std::f64::consts::PI * u).cos();
            let pos = Vec3::new(x, 0.05 * (x / length_m).powi(2), 0.002 * (3.1 * u).sin());
            let tilt = UnitQuat::from_axis_angle(Vec3::unit_y(), 0.15 * (std::f64::consts::PI * u).sin());
            MotionSample::new(t, pos, tilt)
        })
        .collect();
    MotionTrack::new(samples)
}

/// Score note on `midi` lasting `duration_s`.
pub fn note(onset_s: f64, duration_s: f64, midi: u8, dynamic: Dynamic) -> ScoreNote {
    ScoreNote { onset_s, duration_s, midi, dynamic }
}

/// A recording of bow strokes with audio playing `notes` (each as a sine at
/// the note's pitch and amplitude `amplitude`) and the matching score.
pub fn performance(id: &str, notes: &[ScoreNote], amplitude: f64, sample_rate_hz: u32, audio_offset_ms: f64) -> Recording {
    let end = notes.iter().map(ScoreNote::end_s).fold(0.0, f64::max);
    let sr = f64::from(sample_rate_hz);
    let mut samples = vec![0.0f32; (end * sr).ceil() as usize];
    for n in notes {
        let hz = midi_to_hz(f64::from(n.midi));
        let start = (n.onset_s * sr).round() as usize;
        let stop = ((n.end_s() * sr).round() as usize).min(samples.len());
        for (k, s) in samples[start..stop].iter_mut().enumerate() {
            *s = (amplitude * (std::f64::consts::TAU * hz * k as f64 / sr).sin()) as f32;
        }
    }
    let mut rec = Recording::new(id, bowing(end + audio_offset_ms.max(0.0) / 1000.0, 1.0, 0.6, 0.0));
    rec.audio = Some(AudioClip::new(sample_rate_hz, samples).expect("supported rate and bounded amplitude"));
    rec.score = Some(Score::new(notes.to_vec()).expect("valid notes"));
    if audio_offset_ms != 0.0 {
        rec.meta.insert(AUDIO_OFFSET_KEY.into(), audio_offset_ms.to_string());
    }
    rec
}
