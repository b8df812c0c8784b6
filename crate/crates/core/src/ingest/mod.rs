//! Recordings and their on-disk representation.
//!
//! A bundle is a directory:
//!
//! ```text
//! meta.json    {"id": "...", "format_version": 1, "audio_offset_ms": 250, ...}
//! motion.csv   t_ms,px,py,pz,qw,qx,qy,qz
//! audio.wav    optional
//! score.json   optional
//! ```

mod motion_csv;
mod score;
mod wav;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

pub use motion_csv::{parse_motion_csv, write_motion_csv, MOTION_HEADER, QUAT_LOAD_TOLERANCE};
pub use score::{parse_score, write_score, Dynamic, Score, ScoreNote};
pub use wav::{decode_wav, encode_pcm16, encode_wav, AudioClip, SUPPORTED_RATES};

use crate::error::{Error, Result};
use crate::motion::{MotionTrack, DEFAULT_RATE_HZ};

pub const FORMAT_VERSION: u64 = 1;

/// Meta key holding the audio/score start relative to motion `t = 0`, in ms.
pub const AUDIO_OFFSET_KEY: &str = "audio_offset_ms";
pub const NOMINAL_RATE_KEY: &str = "nominal_rate_hz";

const META_FILE: &str = "meta.json";
const MOTION_FILE: &str = "motion.csv";
const AUDIO_FILE: &str = "audio.wav";
const SCORE_FILE: &str = "score.json";

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub id: String,
    pub motion: MotionTrack<f64>,
    pub audio: Option<AudioClip>,
    pub score: Option<Score>,
    pub meta: BTreeMap<String, String>,
}

impl Recording {
    pub fn new(id: impl Into<String>, motion: MotionTrack<f64>) -> Self {
        Self { id: id.into(), motion, audio: None, score: None, meta: BTreeMap::new() }
    }

    /// Offset of the audio and score clocks against motion `t = 0`.
    pub fn audio_offset_ms(&self) -> Result<f64> {
        match self.meta.get(AUDIO_OFFSET_KEY) {
            None => Ok(0.0),
            Some(v) => v
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::InvalidRecording(format!("{AUDIO_OFFSET_KEY} = {v:?} is not a number"))),
        }
    }

    /// Checks that motion is present and that audio, if any, overlaps it.
    pub fn check(&self) -> Result<()> {
        let (Some(first), Some(last)) = (self.motion.first_t(), self.motion.last_t()) else {
            return Err(Error::InvalidRecording("motion track is empty".into()));
        };
        if let Some(audio) = &self.audio {
            let start = first + self.audio_offset_ms()?;
            let end = start + audio.duration_ms();
            if !(start <= last && end > first) {
                return Err(Error::InvalidRecording(format!(
                    "audio span [{start}, {end}] ms does not overlap motion span [{first}, {last}] ms"
                )));
            }
        }
        Ok(())
    }
}

/// Shifts motion so the first sample is at `t = 0`. Idempotent.
pub fn synchronize(mut rec: Recording) -> Recording {
    if let Some(t0) = rec.motion.first_t() {
        if t0 != 0.0 {
            for s in &mut rec.motion.samples {
                s.t -= t0;
            }
        }
    }
    rec
}

fn read_optional(path: &Path) -> Result<Option<Vec<u8>>> {
    match fs::read(path) {
        Ok(b) => Ok(Some(b)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(path, e)),
    }
}

pub fn load_bundle(dir: impl AsRef<Path>) -> Result<Recording> {
    let dir = dir.as_ref();
    let meta_path = dir.join(META_FILE);
    let motion_path = dir.join(MOTION_FILE);

    let meta_bytes = read_optional(&meta_path)?.ok_or_else(|| Error::IncompleteBundle(meta_path.clone()))?;
    let meta: Map<String, Value> = serde_json::from_slice(&meta_bytes)?;
    let version = meta.get("format_version").and_then(Value::as_u64).unwrap_or(0);
    if version != FORMAT_VERSION {
        return Err(Error::Version { found: version, expected: FORMAT_VERSION });
    }
    let id = meta
        .get("id")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::InvalidRecording(format!("{} has no string \"id\"", meta_path.display())))?
        .to_owned();

    let motion_bytes = read_optional(&motion_path)?.ok_or(Error::IncompleteBundle(motion_path))?;
    let mut motion = parse_motion_csv(&motion_bytes)?;
    if let Some(rate) = meta.get(NOMINAL_RATE_KEY).and_then(Value::as_f64) {
        motion.nominal_rate_hz = rate;
    }

    let mut extra = BTreeMap::new();
    if let Some(off) = meta.get(AUDIO_OFFSET_KEY) {
        let v = match off {
            Value::String(s) => s.clone(),
            // shortest form, so "120" survives a save as 120.0
            Value::Number(n) if n.is_f64() => n.as_f64().map_or_else(|| n.to_string(), |f| f.to_string()),
            other => other.to_string(),
        };
        extra.insert(AUDIO_OFFSET_KEY.to_owned(), v);
    }
    if let Some(Value::Object(m)) = meta.get("meta") {
        for (k, v) in m {
            let v = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            extra.insert(k.clone(), v);
        }
    }

    let audio = read_optional(&dir.join(AUDIO_FILE))?.map(|b| decode_wav(&b)).transpose()?;
    let score = read_optional(&dir.join(SCORE_FILE))?.map(|b| parse_score(&b)).transpose()?;

    let rec = Recording { id, motion, audio, score, meta: extra };
    rec.check()?;
    Ok(rec)
}

pub fn save_bundle(rec: &Recording, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    rec.check()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut meta = Map::new();
    meta.insert("id".into(), Value::from(rec.id.clone()));
    meta.insert("format_version".into(), Value::from(FORMAT_VERSION));
    if rec.meta.contains_key(AUDIO_OFFSET_KEY) {
        meta.insert(AUDIO_OFFSET_KEY.into(), Value::from(rec.audio_offset_ms()?));
    }
    if rec.motion.nominal_rate_hz != DEFAULT_RATE_HZ {
        meta.insert(NOMINAL_RATE_KEY.into(), Value::from(rec.motion.nominal_rate_hz));
    }
    let extra: Map<String, Value> = rec
        .meta
        .iter()
        .filter(|(k, _)| k.as_str() != AUDIO_OFFSET_KEY)
        .map(|(k, v)| (k.clone(), Value::from(v.clone())))
        .collect();
    if !extra.is_empty() {
        meta.insert("meta".into(), Value::Object(extra));
    }

    let write = |name: &str, bytes: &[u8]| {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| Error::io(p, e))
    };
    let remove_stale = |name: &str| {
        let p = dir.join(name);
        match fs::remove_file(&p) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(Error::io(p, e)),
            _ => Ok(()),
        }
    };

    write(META_FILE, serde_json::to_string_pretty(&Value::Object(meta))?.as_bytes())?;
    write(MOTION_FILE, write_motion_csv(&rec.motion).as_bytes())?;
    match &rec.audio {
        Some(a) => write(AUDIO_FILE, &encode_wav(a))?,
        None => remove_stale(AUDIO_FILE)?,
    }
    match &rec.score {
        Some(s) => write(SCORE_FILE, write_score(s).as_bytes())?,
        None => remove_stale(SCORE_FILE)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{UnitQuat, Vec3};
    use crate::motion::MotionSample;

    fn track(t0: f64, n: usize) -> MotionTrack<f64> {
        MotionTrack::new(
            (0..n)
                .map(|i| {
                    let t = t0 + 12.5 * i as f64;
                    MotionSample::new(t, Vec3::new(0.1 * i as f64, 1.0, -0.2), UnitQuat::identity())
                })
                .collect(),
        )
    }

    #[test]
    fn synchronize_shifts_to_zero_and_is_idempotent() {
        let rec = synchronize(Recording::new("r", track(5000.0, 4)));
        assert_eq!(rec.motion.first_t(), Some(0.0));
        assert_eq!(rec.motion.samples[3].t, 37.5);
        assert_eq!(synchronize(rec.clone()), rec);
    }

    #[test]
    fn audio_offset_default_and_explicit() {
        let mut rec = Recording::new("r", track(0.0, 4));
        assert_eq!(rec.audio_offset_ms().unwrap(), 0.0);
        rec.meta.insert(AUDIO_OFFSET_KEY.into(), "250".into());
        assert_eq!(rec.audio_offset_ms().unwrap(), 250.0);
        rec.meta.insert(AUDIO_OFFSET_KEY.into(), "soon".into());
        assert!(rec.audio_offset_ms().is_err());
    }

    #[test]
    fn audio_must_overlap_motion() {
        let mut rec = Recording::new("r", track(0.0, 81));
        rec.audio = Some(AudioClip::new(22050, vec![0.0; 22050]).unwrap());
        assert!(rec.check().is_ok());
        rec.meta.insert(AUDIO_OFFSET_KEY.into(), "5000".into());
        assert!(matches!(rec.check(), Err(Error::InvalidRecording(_))));
    }

    #[test]
    fn missing_pieces() {
        let dir = tempfile::tempdir().unwrap();
        let rec = Recording::new("r", track(0.0, 3));
        save_bundle(&rec, dir.path()).unwrap();
        let loaded = load_bundle(dir.path()).unwrap();
        assert!(loaded.audio.is_none() && loaded.score.is_none());

        fs::write(dir.path().join(META_FILE), r#"{"id":"r","format_version":99}"#).unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(Error::Version { found: 99, .. })));

        fs::write(dir.path().join(META_FILE), r#"{"id":"r","format_version":1}"#).unwrap();
        fs::remove_file(dir.path().join(MOTION_FILE)).unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(Error::IncompleteBundle(_))));
    }

    #[test]
    fn saving_without_audio_removes_stale_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = Recording::new("r", track(0.0, 81));
        rec.audio = Some(AudioClip::new(44100, vec![0.25; 4410]).unwrap());
        save_bundle(&rec, dir.path()).unwrap();
        rec.audio = None;
        save_bundle(&rec, dir.path()).unwrap();
        assert_eq!(load_bundle(dir.path()).unwrap(), rec);
    }
}
