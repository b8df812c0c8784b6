mod common;

use bowtrace::geom::geodesic_angle;
use bowtrace::ingest::{
    decode_wav, encode_pcm16, encode_wav, load_bundle, parse_motion_csv, parse_score, save_bundle, synchronize, write_motion_csv,
    write_score, AudioClip, Dynamic, Recording, Score, ScoreNote,
};
use common::track;
use proptest::prelude::*;

fn dynamic() -> impl Strategy<Value = Dynamic> {
    prop::sample::select(Dynamic::ALL.to_vec())
}

fn score() -> impl Strategy<Value = Score> {
    prop::collection::vec((0.0..600.0f64, 0.001..20.0f64, 0u8..=127, dynamic()), 0..30).prop_map(|notes| {
        Score::new(
            notes
                .into_iter()
                .map(|(onset_s, duration_s, midi, dynamic)| ScoreNote { onset_s, duration_s, midi, dynamic })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #[test]
    fn motion_csv_round_trips(t in track(1, 60)) {
        let back = parse_motion_csv(write_motion_csv(&t).as_bytes()).unwrap();
        prop_assert_eq!(back.len(), t.len());
        for (a, b) in t.samples.iter().zip(&back.samples) {
            prop_assert!((a.t - b.t).abs() <= 1e-9);
            prop_assert!((a.pos - b.pos).norm() <= 1e-9);
            prop_assert!(geodesic_angle(a.orient, b.orient).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn score_round_trips_exactly(s in score()) {
        prop_assert_eq!(parse_score(write_score(&s).as_bytes()).unwrap(), s);
    }

    #[test]
    fn pcm16_decodes_in_range(samples in prop::collection::vec(any::<i16>(), 0..400), stereo in any::<bool>()) {
        let channels = if stereo { 2 } else { 1 };
        let frames = samples.len() / channels as usize * channels as usize;
        let clip = decode_wav(&encode_pcm16(&samples[..frames], channels, 44_100)).unwrap();
        prop_assert!(clip.samples.iter().all(|s| (-1.0..=1.0).contains(s)));
        if !stereo {
            for (a, b) in samples.iter().zip(&clip.samples) {
                prop_assert_eq!(f32::from(*a) / 32768.0, *b);
            }
        }
    }

    #[test]
    fn float_wav_is_clamped_or_exact(samples in prop::collection::vec(-4.0f32..4.0, 0..400)) {
        // built directly so out-of-range values reach the encoder
        let clip = AudioClip { sample_rate_hz: 48_000, samples: samples.clone() };
        let back = decode_wav(&encode_wav(&clip)).unwrap();
        for (a, b) in samples.iter().zip(&back.samples) {
            prop_assert!((-1.0..=1.0).contains(b));
            prop_assert_eq!(a.clamp(-1.0, 1.0), *b);
        }
    }

    #[test]
    fn synchronize_is_idempotent(t in track(1, 30)) {
        let once = synchronize(Recording::new("r", t));
        prop_assert_eq!(once.motion.samples[0].t, 0.0);
        prop_assert_eq!(synchronize(once.clone()), once);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bundles_round_trip(t in track(1, 30), s in score(), offset in -500.0..500.0f64) {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = Recording::new("bundle", t);
        rec.score = Some(s);
        rec.meta.insert("audio_offset_ms".into(), offset.to_string());
        rec.meta.insert("cellist".into(), "anon".into());
        save_bundle(&rec, dir.path()).unwrap();
        let back = load_bundle(dir.path()).unwrap();
        prop_assert_eq!(back, rec);
    }
}
