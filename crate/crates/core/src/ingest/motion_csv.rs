//! `t_ms,px,py,pz,qw,qx,qy,qz` motion files.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geom::{UnitQuat, Vec3};
use crate::motion::{MotionSample, MotionTrack};

pub const MOTION_HEADER: &str = "t_ms,px,py,pz,qw,qx,qy,qz";

/// Quaternions within this distance of unit norm are renormalized on load.
pub const QUAT_LOAD_TOLERANCE: f64 = 1e-2;

pub fn parse_motion_csv(bytes: &[u8]) -> Result<MotionTrack<f64>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Parse { line: 0, msg: format!("not UTF-8: {e}") })?;
    let mut lines = text.split('\n').enumerate();

    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r').trim() == MOTION_HEADER => {}
        Some((_, h)) => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header {MOTION_HEADER:?}, found {:?}", h.trim_end()),
            })
        }
        None => unreachable!("split yields at least one item"),
    }

    let mut samples: Vec<MotionSample<f64>> = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.trim().is_empty() {
            continue;
        }
        let mut vals = [0.0f64; 8];
        let mut n = 0;
        for field in row.split(',') {
            if n == 8 {
                return Err(Error::Parse { line, msg: "more than 8 fields".into() });
            }
            vals[n] = field.trim().parse::<f64>().map_err(|e| Error::Parse {
                line,
                msg: format!("field {} ({field:?}): {e}", n + 1),
            })?;
            if !vals[n].is_finite() {
                return Err(Error::Parse { line, msg: format!("field {} is not finite", n + 1) });
            }
            n += 1;
        }
        if n != 8 {
            return Err(Error::Parse { line, msg: format!("expected 8 fields, found {n}") });
        }
        let [t, px, py, pz, qw, qx, qy, qz] = vals;
        if t < 0.0 {
            return Err(Error::Parse { line, msg: format!("negative timestamp {t}") });
        }
        if let Some(prev) = samples.last() {
            if t <= prev.t {
                return Err(Error::NonMonotone { line, t });
            }
        }
        let raw_q = UnitQuat::new_unchecked(qw, qx, qy, qz);
        let norm = raw_q.norm();
        if (norm - 1.0).abs() > QUAT_LOAD_TOLERANCE {
            return Err(Error::QuaternionNorm { line, norm });
        }
        let orient = if raw_q.is_unit() {
            raw_q
        } else {
            UnitQuat::normalize(qw, qx, qy, qz).expect("norm near one")
        };
        samples.push(MotionSample::new(t, Vec3::new(px, py, pz), orient));
    }
    Ok(MotionTrack::new(samples))
}

/// Serializes with shortest round-trip float formatting, so parsing the result
/// reproduces every value exactly.
pub fn write_motion_csv(track: &MotionTrack<f64>) -> String {
    let mut out = String::with_capacity(64 * (track.len() + 1));
    out.push_str(MOTION_HEADER);
    out.push('\n');
    for s in &track.samples {
        let q = s.orient;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.t, s.pos.x, s.pos.y, s.pos.z, q.w, q.x, q.y, q.z
        );
    }
    out
}
