//! Alignment of two feature tracks and per-pair differences.

pub mod dtw;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Channel, FeatureTrack};

pub use dtw::{dtw_align, pairing_cost, Warp};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingMode {
    UniformTime,
    Dtw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
    pub mode: PairingMode,
}

impl Pairing {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn check(&self, len_a: usize, len_b: usize) -> Result<()> {
        for &(a, b) in &self.pairs {
            if a >= len_a || b >= len_b {
                return Err(Error::Pairing { a, b, len_a, len_b });
            }
        }
        Ok(())
    }

    /// Both index sequences are non-decreasing.
    pub fn is_monotone(&self) -> bool {
        self.pairs.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1)
    }
}

/// Index of the element of sorted `times` closest to `t`; ties go to the
/// earlier element.
pub(crate) fn nearest_index(times: &[f64], t: f64) -> Option<usize> {
    let i = times.partition_point(|&x| x < t);
    match (i.checked_sub(1), (i < times.len()).then_some(i)) {
        (Some(l), Some(r)) => Some(if t - times[l] <= times[r] - t { l } else { r }),
        (l, r) => l.or(r),
    }
}

/// Pairs each frame of `a` with the nearest-in-time frame of `b`, skipping
/// frames with no partner within `tol_ms`.
pub fn pair_uniform(a: &FeatureTrack, b: &FeatureTrack, tol_ms: f64) -> Pairing {
    let tb: Vec<f64> = b.times().collect();
    let pairs = a
        .times()
        .enumerate()
        .filter_map(|(i, t)| {
            let j = nearest_index(&tb, t)?;
            ((tb[j] - t).abs() <= tol_ms).then_some((i, j))
        })
        .collect();
    Pairing { pairs, mode: PairingMode::UniformTime }
}

pub fn position_distance(a: &FeatureTrack, b: &FeatureTrack, pairing: &Pairing) -> Result<Vec<f64>> {
    pairing.check(a.len(), b.len())?;
    Ok(pairing.pairs.iter().map(|&(i, j)| (a.frames[i].pos - b.frames[j].pos).norm()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    /// Pairing window for uniform-time mode.
    pub tol_ms: f64,
    /// Series warped in DTW mode; absent values count as zero.
    pub channel: Channel,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { tol_ms: 10.0, channel: Channel::Speed }
    }
}

/// Statistics over the present values of a series; `max` is the largest
/// absolute value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub max: f64,
    pub rms: f64,
}

impl Summary {
    pub fn of<I: IntoIterator<Item = f64>>(values: I) -> Option<Self> {
        let (mut count, mut sum, mut sq, mut max) = (0usize, 0.0, 0.0, 0.0f64);
        for v in values {
            count += 1;
            sum += v;
            sq += v * v;
            max = max.max(v.abs());
        }
        (count > 0).then(|| Summary {
            count,
            mean: sum / count as f64,
            max,
            rms: (sq / count as f64).sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summaries {
    pub position_distance_m: Summary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note_dev_semitones: Option<Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loudness_dev_db: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub version: u32,
    pub a: String,
    pub b: String,
    pub pairing: Pairing,
    pub position_distance_m: Vec<f64>,
    /// `pitch_midi(a) − pitch_midi(b)` per pair; `None` where either is unvoiced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note_dev_semitones: Option<Vec<Option<f64>>>,
    /// `loudness(a) − loudness(b)` per pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loudness_dev_db: Option<Vec<Option<f64>>>,
    pub summary: Summaries,
    /// Accumulated DTW cost on the warped channel (DTW mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warp_cost: Option<f64>,
}

impl ComparisonResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

fn channel_series(t: &FeatureTrack, channel: Channel) -> Vec<f64> {
    t.frames.iter().map(|f| channel.value(f).unwrap_or(0.0)).collect()
}

pub fn compare(a: &FeatureTrack, b: &FeatureTrack, mode: PairingMode, opts: &CompareOptions) -> Result<ComparisonResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (pairing, warp_cost) = match mode {
        PairingMode::UniformTime => (pair_uniform(a, b, opts.tol_ms), None),
        PairingMode::Dtw => {
            let w = dtw_align(&channel_series(a, opts.channel), &channel_series(b, opts.channel))?;
            (Pairing { pairs: w.path, mode }, Some(w.cost))
        }
    };
    if pairing.is_empty() {
        return Err(Error::NoOverlap);
    }

    let dist = position_distance(a, b, &pairing)?;
    let diff = |get: fn(&crate::features::FeatureFrame) -> Option<f64>| -> Vec<Option<f64>> {
        pairing
            .pairs
            .iter()
            .map(|&(i, j)| Some(get(&a.frames[i])? - get(&b.frames[j])?))
            .collect()
    };
    let note = (a.has_pitch && b.has_pitch).then(|| diff(|f| f.pitch_midi));
    let loud = (a.has_loudness && b.has_loudness).then(|| diff(|f| Some(f.loudness_dbfs)));

    let summary = Summaries {
        position_distance_m: Summary::of(dist.iter().copied()).expect("pairing is non-empty"),
        note_dev_semitones: note.as_ref().and_then(|s| Summary::of(s.iter().flatten().copied())),
        loudness_dev_db: loud.as_ref().and_then(|s| Summary::of(s.iter().flatten().copied())),
    };
    Ok(ComparisonResult {
        version: REPORT_VERSION,
        a: a.source_id.clone(),
        b: b.source_id.clone(),
        pairing,
        position_distance_m: dist,
        note_dev_semitones: note,
        loudness_dev_db: loud,
        summary,
        warp_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureFrame;
    use crate::geom::{UnitQuat, Vec3};

    fn track(id: &str, times: impl IntoIterator<Item = f64>, offset: Vec3<f64>) -> FeatureTrack {
        FeatureTrack {
            source_id: id.into(),
            frames: times
                .into_iter()
                .map(|t| {
                    let p = Vec3::new((t / 300.0).sin(), t / 1000.0, 0.2) + offset;
                    FeatureFrame::kinematic(t, p, UnitQuat::identity(), t / 1000.0, 0.0)
                })
                .collect(),
            has_pitch: false,
            has_loudness: false,
        }
    }

    fn grid(n: usize, shift: f64) -> Vec<f64> {
        (0..n).map(|i| 12.5 * i as f64 + shift).collect()
    }

    #[test]
    fn identical_grids_pair_identically() {
        let a = track("a", grid(40, 0.0), Vec3::zero());
        let p = pair_uniform(&a, &a, 1.0);
        assert_eq!(p.pairs, (0..40).map(|i| (i, i)).collect::<Vec<_>>());
    }

    #[test]
    fn shifted_grid_pairs_with_brute_force_nearest() {
        let a = track("a", grid(40, 0.0), Vec3::zero());
        let b = track("b", grid(40, 6.0), Vec3::zero());
        let p = pair_uniform(&a, &b, 10.0);
        let expected: Vec<(usize, usize)> = a
            .times()
            .enumerate()
            .filter_map(|(i, t)| {
                let (j, d) = b
                    .times()
                    .enumerate()
                    .map(|(j, u)| (j, (u - t).abs()))
                    .min_by(|x, y| x.1.total_cmp(&y.1))?;
                (d <= 10.0).then_some((i, j))
            })
            .collect();
        assert_eq!(p.pairs.len(), 40);
        assert_eq!(p.pairs, expected);
        assert!(p.is_monotone());
    }

    #[test]
    fn disjoint_ranges_do_not_pair() {
        let a = track("a", grid(10, 0.0), Vec3::zero());
        let b = track("b", grid(10, 10_000.0), Vec3::zero());
        assert!(pair_uniform(&a, &b, 10.0).is_empty());
        assert!(matches!(compare(&a, &b, PairingMode::UniformTime, &CompareOptions::default()), Err(Error::NoOverlap)));
    }

    #[test]
    fn rigid_offset_distance() {
        let a = track("a", grid(30, 0.0), Vec3::zero());
        let b = track("b", grid(30, 0.0), Vec3::new(0.1, 0.0, 0.0));
        let d = position_distance(&a, &b, &pair_uniform(&a, &b, 1.0)).unwrap();
        assert!(d.iter().all(|&x| (x - 0.1).abs() < 1e-12));
    }

    #[test]
    fn out_of_range_pairing() {
        let a = track("a", grid(3, 0.0), Vec3::zero());
        let bad = Pairing { pairs: vec![(0, 0), (1, 7)], mode: PairingMode::UniformTime };
        assert!(matches!(position_distance(&a, &a, &bad), Err(Error::Pairing { a: 1, b: 7, .. })));
    }

    #[test]
    fn self_comparison_is_zero_and_omits_audio() {
        let a = track("a", grid(50, 0.0), Vec3::zero());
        for mode in [PairingMode::UniformTime, PairingMode::Dtw] {
            let r = compare(&a, &a, mode, &CompareOptions::default()).unwrap();
            assert!(r.position_distance_m.iter().all(|&d| d == 0.0));
            let s = r.summary.position_distance_m;
            assert_eq!((s.mean, s.max, s.rms), (0.0, 0.0, 0.0));
            assert!(r.note_dev_semitones.is_none() && r.loudness_dev_db.is_none());
            assert!(r.summary.note_dev_semitones.is_none());
        }
    }

    #[test]
    fn report_round_trips() {
        let a = track("a", grid(20, 0.0), Vec3::zero());
        let b = track("b", grid(20, 3.0), Vec3::new(0.0, 0.05, 0.0));
        let r = compare(&a, &b, PairingMode::Dtw, &CompareOptions::default()).unwrap();
        assert_eq!(ComparisonResult::from_json(r.to_json().as_bytes()).unwrap(), r);
    }

    #[test]
    fn nearest_index_ties_go_left() {
        assert_eq!(nearest_index(&[0.0, 10.0], 5.0), Some(0));
        assert_eq!(nearest_index(&[0.0, 10.0], 5.1), Some(1));
        assert_eq!(nearest_index(&[], 5.0), None);
        assert_eq!(nearest_index(&[3.0], -50.0), Some(0));
    }
}
