//! Per-frame features: kinematics from motion, pitch and loudness from audio,
//! expectations from the score, and the deviations between the two.

pub mod kinematics;
pub mod loudness;
pub mod pitch;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{UnitQuat, Vec3};
use crate::ingest::{synchronize, Dynamic, Recording, Score, ScoreNote};
use crate::scalar::Real;

pub use kinematics::{movement_speed, rotation_speed, RotationSpeed};
pub use loudness::{loudness_track, rms_dbfs, DBFS_FLOOR};
pub use pitch::{detect_pitch, detect_pitch_with, pitch_track, PitchEstimate, YinConfig};

pub const FEATURE_CSV_HEADER: &str = "t_ms,px,py,pz,qw,qx,qy,qz,speed,rot_speed,pitch_hz,pitch_midi,confidence,\
loudness_dbfs,expected_midi,expected_dbfs,note_dev,loudness_dev";

pub const PITCH_CSV_HEADER: &str = "t_ms,pitch_hz,confidence";

/// MIDI note number (possibly fractional) of a frequency; A4 = 440 Hz = 69.
pub fn hz_to_midi<T: Real>(hz: T) -> Result<T> {
    if !(hz > T::zero()) || !hz.is_finite() {
        return Err(Error::Domain(format!("frequency must be positive, got {hz}")));
    }
    Ok(T::lit(69.0) + T::lit(12.0) * (hz / T::lit(440.0)).log2())
}

pub fn midi_to_hz<T: Real>(midi: T) -> T {
    T::lit(440.0) * T::lit(2.0).powf((midi - T::lit(69.0)) / T::lit(12.0))
}

/// Target level for a dynamic marking: 6 dB steps from pp = −40 to ff = −10 dBFS.
pub fn dynamic_to_dbfs(dynamic: Dynamic) -> f64 {
    match dynamic {
        Dynamic::Pp => -40.0,
        Dynamic::P => -34.0,
        Dynamic::Mp => -28.0,
        Dynamic::Mf => -22.0,
        Dynamic::F => -16.0,
        Dynamic::Ff => -10.0,
    }
}

/// [`dynamic_to_dbfs`] for a textual marking.
pub fn dynamic_token_to_dbfs(token: &str) -> Result<f64> {
    match token.parse::<Dynamic>() {
        Ok(d) => Ok(dynamic_to_dbfs(d)),
        Err(_) => Err(Error::Domain(format!("unknown dynamic {token:?}"))),
    }
}

pub fn expected_at(score: &Score, t_s: f64) -> Option<&ScoreNote> {
    score.expected_at(t_s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub pitch_window: usize,
    pub pitch_hop: usize,
    pub loudness_window: usize,
    pub loudness_hop: usize,
    pub yin: YinConfig<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            pitch_window: 4096,
            pitch_hop: 512,
            loudness_window: 2048,
            loudness_hop: 512,
            yin: YinConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    pub t: f64,
    pub pos: Vec3<f64>,
    pub orient: UnitQuat<f64>,
    pub speed: f64,
    pub rot_speed: f64,
    pub pitch_hz: Option<f64>,
    pub pitch_midi: Option<f64>,
    pub pitch_confidence: f64,
    pub loudness_dbfs: f64,
    pub expected_midi: Option<u8>,
    pub expected_loudness_dbfs: Option<f64>,
    pub note_dev_semitones: Option<f64>,
    pub loudness_dev_db: Option<f64>,
}

impl FeatureFrame {
    /// Frame carrying only pose and kinematics.
    pub fn kinematic(t: f64, pos: Vec3<f64>, orient: UnitQuat<f64>, speed: f64, rot_speed: f64) -> Self {
        Self {
            t,
            pos,
            orient,
            speed,
            rot_speed,
            pitch_hz: None,
            pitch_midi: None,
            pitch_confidence: 0.0,
            loudness_dbfs: DBFS_FLOOR,
            expected_midi: None,
            expected_loudness_dbfs: None,
            note_dev_semitones: None,
            loudness_dev_db: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTrack {
    pub source_id: String,
    pub frames: Vec<FeatureFrame>,
    /// Pitch came from audio or an imported pitch series.
    pub has_pitch: bool,
    /// Loudness was measured from audio (otherwise frames hold the floor).
    pub has_loudness: bool,
}

impl FeatureTrack {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.frames.iter().map(|f| f.t)
    }
}

/// Numeric per-frame feature usable for encoding or alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    Speed,
    RotSpeed,
    PitchMidi,
    Loudness,
    NoteDev,
    LoudnessDev,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::Speed,
        Channel::RotSpeed,
        Channel::PitchMidi,
        Channel::Loudness,
        Channel::NoteDev,
        Channel::LoudnessDev,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Speed => "speed",
            Channel::RotSpeed => "rot-speed",
            Channel::PitchMidi => "pitch-midi",
            Channel::Loudness => "loudness",
            Channel::NoteDev => "note-dev",
            Channel::LoudnessDev => "loudness-dev",
        }
    }

    pub fn value(self, f: &FeatureFrame) -> Option<f64> {
        match self {
            Channel::Speed => Some(f.speed),
            Channel::RotSpeed => Some(f.rot_speed),
            Channel::PitchMidi => f.pitch_midi,
            Channel::Loudness => Some(f.loudness_dbfs),
            Channel::NoteDev => f.note_dev_semitones,
            Channel::LoudnessDev => f.loudness_dev_db,
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature channel {s:?}")))
    }
}

/// One pitch observation on the audio clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchPoint {
    pub t_ms: f64,
    pub hz: Option<f64>,
    pub confidence: f64,
}

/// Parses an external pitch series (`t_ms,pitch_hz,confidence`); an empty,
/// zero or negative frequency marks an unvoiced frame.
pub fn parse_pitch_csv(bytes: &[u8]) -> Result<Vec<PitchPoint>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse { line: 0, msg: format!("not UTF-8: {e}") })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == PITCH_CSV_HEADER => {}
        _ => return Err(Error::Parse { line: 1, msg: format!("expected header {PITCH_CSV_HEADER:?}") }),
    }
    let mut out: Vec<PitchPoint> = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse { line, msg: format!("expected 3 fields, found {}", fields.len()) });
        }
        let num = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| Error::Parse { line, msg: format!("bad {what} {s:?}") })
        };
        let t_ms = num(fields[0], "t_ms")?.ok_or_else(|| Error::Parse { line, msg: "missing t_ms".into() })?;
        if let Some(prev) = out.last() {
            if t_ms <= prev.t_ms {
                return Err(Error::NonMonotone { line, t: t_ms });
            }
        }
        let hz = num(fields[1], "pitch_hz")?.filter(|&v| v > 0.0);
        let confidence = num(fields[2], "confidence")?.unwrap_or(0.0).clamp(0.0, 1.0);
        out.push(PitchPoint { t_ms, hz, confidence });
    }
    Ok(out)
}

/// Regularly hopped series: value `k` is stamped at the centre of its window.
struct HoppedSeries<V> {
    values: Vec<V>,
    window: usize,
    hop: usize,
    rate: f64,
}

impl<V: Copy> HoppedSeries<V> {
    /// Value whose stamp is within half a hop of `t_ms`.
    fn nearest(&self, t_ms: f64) -> Option<V> {
        let pos = t_ms / 1000.0 * self.rate - self.window as f64 / 2.0;
        let k = (pos / self.hop as f64).round();
        if k < 0.0 || k >= self.values.len() as f64 {
            return None;
        }
        self.values.get(k as usize).copied()
    }
}

enum PitchSource<'a> {
    None,
    Detected(HoppedSeries<Option<PitchEstimate<f64>>>),
    Imported { points: &'a [PitchPoint], tolerance_ms: f64 },
}

impl PitchSource<'_> {
    fn at(&self, t_ms: f64) -> Option<(Option<f64>, f64)> {
        match self {
            PitchSource::None => None,
            PitchSource::Detected(s) => s.nearest(t_ms).map(|p| match p {
                Some(p) => (Some(p.hz), p.confidence),
                None => (None, 0.0),
            }),
            PitchSource::Imported { points, tolerance_ms } => {
                let i = points.partition_point(|p| p.t_ms < t_ms);
                let best = [i.checked_sub(1), Some(i)]
                    .into_iter()
                    .flatten()
                    .filter_map(|j| points.get(j))
                    .min_by(|a, b| (a.t_ms - t_ms).abs().total_cmp(&(b.t_ms - t_ms).abs()))?;
                ((best.t_ms - t_ms).abs() <= *tolerance_ms).then_some((best.hz, best.confidence))
            }
        }
    }
}

/// Pitch values outside this band are treated as unvoiced.
pub const PITCH_RANGE_HZ: (f64, f64) = (30.0, 2000.0);

pub fn build_feature_track(rec: &Recording, cfg: &AnalysisConfig) -> Result<FeatureTrack> {
    build_feature_track_with_pitch(rec, cfg, None)
}

/// Builds the feature track; an `imported_pitch` series replaces detection.
///
/// Audio and score are read at `t − audio_offset_ms`. Audio values are taken
/// from the nearest analysis hop within half a hop, and are absent otherwise.
pub fn build_feature_track_with_pitch(
    rec: &Recording,
    cfg: &AnalysisConfig,
    imported_pitch: Option<&[PitchPoint]>,
) -> Result<FeatureTrack> {
    let rec = synchronize(rec.clone());
    let track = &rec.motion;
    let speed = movement_speed(track)?;
    let rot = rotation_speed(track)?;
    let offset = rec.audio_offset_ms()?;

    let audio: Option<Vec<f64>> = rec.audio.as_ref().map(|a| a.samples.iter().map(|&s| s as f64).collect());
    let rate = rec.audio.as_ref().map(|a| a.sample_rate_hz as f64).unwrap_or(0.0);

    let loudness = match &audio {
        Some(x) => Some(HoppedSeries {
            values: loudness_track(x, cfg.loudness_window, cfg.loudness_hop)?,
            window: cfg.loudness_window,
            hop: cfg.loudness_hop,
            rate,
        }),
        None => None,
    };

    let pitch = match (imported_pitch, &audio) {
        (Some(points), _) => PitchSource::Imported { points, tolerance_ms: imported_tolerance(points, cfg) },
        (None, Some(x)) => PitchSource::Detected(HoppedSeries {
            values: pitch_track(x, rate, cfg.pitch_window, cfg.pitch_hop, &cfg.yin)?,
            window: cfg.pitch_window,
            hop: cfg.pitch_hop,
            rate,
        }),
        (None, None) => PitchSource::None,
    };

    let mut frames = Vec::with_capacity(track.len());
    for (i, s) in track.samples.iter().enumerate() {
        let mut f = FeatureFrame::kinematic(s.t, s.pos, s.orient, speed[i], rot.values[i]);
        let t_audio = s.t - offset;

        if let Some((hz, confidence)) = pitch.at(t_audio) {
            let hz = hz.filter(|h| (PITCH_RANGE_HZ.0..=PITCH_RANGE_HZ.1).contains(h));
            f.pitch_hz = hz;
            f.pitch_midi = hz.map(hz_to_midi).transpose()?;
            f.pitch_confidence = confidence;
        }
        let measured = loudness.as_ref().and_then(|l| l.nearest(t_audio));
        if let Some(db) = measured {
            f.loudness_dbfs = db;
        }
        if let Some(note) = rec.score.as_ref().and_then(|sc| sc.expected_at(t_audio / 1000.0)) {
            let target = dynamic_to_dbfs(note.dynamic);
            f.expected_midi = Some(note.midi);
            f.expected_loudness_dbfs = Some(target);
            f.note_dev_semitones = f.pitch_midi.map(|m| m - note.midi as f64);
            f.loudness_dev_db = measured.map(|db| db - target);
        }
        frames.push(f);
    }

    Ok(FeatureTrack {
        source_id: rec.id.clone(),
        frames,
        has_pitch: !matches!(pitch, PitchSource::None),
        has_loudness: loudness.is_some(),
    })
}

/// Half the median spacing of the imported series.
fn imported_tolerance(points: &[PitchPoint], cfg: &AnalysisConfig) -> f64 {
    let mut gaps: Vec<f64> = points.windows(2).map(|w| w[1].t_ms - w[0].t_ms).collect();
    if gaps.is_empty() {
        return cfg.pitch_hop as f64 / 44.1 / 2.0;
    }
    gaps.sort_by(f64::total_cmp);
    gaps[gaps.len() / 2] / 2.0
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV export; absent optional values are written as empty fields.
pub fn write_feature_csv(track: &FeatureTrack) -> String {
    let mut out = String::with_capacity(160 * (track.len() + 1));
    out.push_str(FEATURE_CSV_HEADER);
    out.push('\n');
    for f in &track.frames {
        let q = f.orient;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f.t,
            f.pos.x,
            f.pos.y,
            f.pos.z,
            q.w,
            q.x,
            q.y,
            q.z,
            f.speed,
            f.rot_speed,
            opt(f.pitch_hz),
            opt(f.pitch_midi),
            f.pitch_confidence,
            f.loudness_dbfs,
            opt(f.expected_midi),
            opt(f.expected_loudness_dbfs),
            opt(f.note_dev_semitones),
            opt(f.loudness_dev_db),
        );
    }
    out
}
