mod common;

use bowtrace::features::kinematics::{movement_speed, rotation_speed};
use bowtrace::features::{build_feature_track, detect_pitch, hz_to_midi, midi_to_hz, write_feature_csv, AnalysisConfig};
use bowtrace::geom::UnitQuat;
use bowtrace::ingest::Dynamic;
use bowtrace::motion::{MotionSample, MotionTrack};
use bowtrace::synth;
use common::{track, unit_quat, vec3};
use proptest::prelude::*;

fn rigid(t: &MotionTrack<f64>, r: UnitQuat<f64>, shift: bowtrace::geom::Vec3<f64>) -> MotionTrack<f64> {
    MotionTrack::new(t.samples.iter().map(|s| MotionSample::new(s.t, r.rotate(s.pos) + shift, r * s.orient)).collect())
}

proptest! {
    #[test]
    fn series_lengths_match_samples(t in track(2, 50)) {
        prop_assert_eq!(movement_speed(&t).unwrap().len(), t.len());
        prop_assert_eq!(rotation_speed(&t).unwrap().values.len(), t.len());
    }

    #[test]
    fn kinematics_ignore_rigid_motion(t in track(2, 50), r in unit_quat(), shift in vec3(10.0)) {
        let moved = rigid(&t, r, shift);
        let (s0, s1) = (movement_speed(&t).unwrap(), movement_speed(&moved).unwrap());
        let (w0, w1) = (rotation_speed(&t).unwrap().values, rotation_speed(&moved).unwrap().values);
        for i in 0..t.len() {
            prop_assert!((s0[i] - s1[i]).abs() <= 1e-9, "speed {} vs {}", s0[i], s1[i]);
            prop_assert!((w0[i] - w1[i]).abs() <= 1e-9, "rotation {} vs {}", w0[i], w1[i]);
        }
    }

    #[test]
    fn speeds_are_non_negative(t in track(2, 50)) {
        prop_assert!(movement_speed(&t).unwrap().iter().all(|&v| v >= 0.0));
        prop_assert!(rotation_speed(&t).unwrap().values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn midi_and_hz_are_inverse(m in 20.0..100.0f64) {
        prop_assert!((hz_to_midi(midi_to_hz(m)).unwrap() - m).abs() <= 1e-9);
        // independent equal-temperament oracle
        let hz = 440.0 * 2f64.powf((m - 69.0) / 12.0);
        prop_assert!((midi_to_hz(m) - hz).abs() <= 1e-9 * hz);
    }
}

#[test]
fn pitch_within_ten_cents_from_65_to_880_hz() {
    let sr = 44_100u32;
    let steps = 60;
    for k in 0..=steps {
        let hz = 65.0 * (880.0f64 / 65.0).powf(k as f64 / steps as f64);
        let clip: Vec<f64> = synth::sine(hz, 0.7, sr, 4096).into_iter().map(f64::from).collect();
        let est = detect_pitch(&clip, f64::from(sr)).unwrap().expect("voiced");
        let cents = 1200.0 * (est.hz / hz).log2();
        assert!(cents.abs() < 10.0, "{hz} Hz: detected {} ({cents:.2} cents)", est.hz);
    }
}

#[test]
fn feature_extraction_is_deterministic() {
    let notes = [synth::note(0.0, 0.7, 45, Dynamic::Mp), synth::note(0.7, 0.7, 52, Dynamic::F)];
    let rec = synth::performance("det", &notes, 0.4, 22_050, 80.0);
    let cfg = AnalysisConfig::default();
    let a = build_feature_track(&rec, &cfg).unwrap();
    let b = build_feature_track(&rec.clone(), &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(write_feature_csv(&a), write_feature_csv(&b));
    assert_eq!(a.len(), rec.motion.len());
}

#[test]
fn reference_points() {
    assert_eq!(hz_to_midi(440.0).unwrap(), 69.0);
    assert!((hz_to_midi(220.0f64).unwrap() - 57.0).abs() < 1e-12);
    assert!((midi_to_hz(60.0f64) - 261.625_565_300_598_6).abs() < 1e-9);
    assert!(hz_to_midi(0.0f64).is_err());
}
