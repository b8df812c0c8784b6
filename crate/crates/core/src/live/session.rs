//! Rolling live session: incremental kinematics, encoded vertices and deltas.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::compare::nearest_index;
use crate::error::{Error, Result};
use crate::features::kinematics::{span_rotation_speed, span_speed};
use crate::features::{Channel, FeatureTrack};
use crate::geom::{UnitQuat, Vec3, UNIT_TOLERANCE};
use crate::ingest::QUAT_LOAD_TOLERANCE;
use crate::motion::MotionSample;
use crate::scene::encode::normalize_with_bounds;
use crate::scene::{
    colormap, fly_away, fly_away_direction, percentile_bounds, thickness_map, BowPose, EncodingConfig, PathVertex, Scene,
    ScenePath, Segment,
};

pub const DEFAULT_WINDOW_S: f64 = 30.0;

/// Samples always kept by eviction, enough for a central difference.
pub const MIN_RETAINED: usize = 2;

/// Normalization bounds used when no reference track is loaded.
pub fn default_bounds(channel: Channel) -> (f64, f64) {
    match channel {
        Channel::Speed => (0.0, 1.5),
        Channel::RotSpeed => (0.0, std::f64::consts::TAU),
        Channel::PitchMidi => (36.0, 84.0),
        Channel::Loudness => (-60.0, 0.0),
        Channel::NoteDev => (-1.0, 1.0),
        Channel::LoudnessDev => (-12.0, 12.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub window_s: f64,
    pub encoding: EncodingConfig,
    pub reference: Option<Arc<FeatureTrack>>,
    /// Connector every this many paired vertices; 0 disables.
    pub rubber_band_stride: usize,
    pub pairing_tol_ms: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            window_s: DEFAULT_WINDOW_S,
            encoding: EncodingConfig::default(),
            reference: None,
            rubber_band_stride: 10,
            pairing_tol_ms: 10.0,
        }
    }
}

/// Encoded live vertex. Positions are as recorded; the viewer applies the
/// fly-away offset against its own clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiveVertex {
    pub t: f64,
    pub p: Vec3<f64>,
    pub q: UnitQuat<f64>,
    pub c: [f64; 4],
    pub w: f64,
    pub speed: f64,
    pub rot_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiveConnector {
    pub t: f64,
    pub a: Vec3<f64>,
    pub b: Vec3<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SceneDelta {
    pub epoch: u64,
    pub since_epoch: u64,
    pub vertices: Vec<LiveVertex>,
    pub connectors: Vec<LiveConnector>,
    /// Vertices and connectors older than this are no longer retained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evict_before_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bow: Option<BowPose>,
    /// The tracker has closed the session; no further vertices follow.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub finished: bool,
}

impl SceneDelta {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.connectors.is_empty()
    }
}

/// Viewer-side accumulation of deltas: add, then trim below the watermark.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeltaState {
    pub epoch: u64,
    pub vertices: Vec<LiveVertex>,
    pub connectors: Vec<LiveConnector>,
}

impl DeltaState {
    pub fn apply(&mut self, d: &SceneDelta) {
        self.vertices.extend_from_slice(&d.vertices);
        self.connectors.extend_from_slice(&d.connectors);
        if let Some(w) = d.evict_before_ms {
            self.vertices.retain(|v| v.t >= w);
            self.connectors.retain(|c| c.t >= w);
        }
        self.epoch = self.epoch.max(d.epoch);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    OutOfOrder,
    Parse,
    Closed,
}

impl Rejection {
    pub fn as_str(self) -> &'static str {
        match self {
            Rejection::OutOfOrder => "out-of-order",
            Rejection::Parse => "parse",
            Rejection::Closed => "closed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Tagged<V> {
    epoch: u64,
    item: V,
}

#[derive(Debug, Clone)]
pub struct LiveSession {
    pub session_id: String,
    cfg: SessionConfig,
    color_bounds: (f64, f64),
    thickness_bounds: (f64, f64),
    samples: VecDeque<MotionSample<f64>>,
    /// Total samples accepted; the index of `samples[0]` is `accepted - samples.len()`.
    accepted: usize,
    finalized: usize,
    origin_ms: Option<f64>,
    epoch: u64,
    vertices: VecDeque<Tagged<LiveVertex>>,
    connectors: VecDeque<Tagged<LiveConnector>>,
    paired: usize,
    finished: bool,
}

fn session_bounds(channel: Channel, reference: Option<&FeatureTrack>, pct: (f64, f64)) -> Result<(f64, f64)> {
    if let Some(r) = reference {
        let v: Vec<f64> = r.frames.iter().filter_map(|f| channel.value(f)).collect();
        if let Some(b) = percentile_bounds(&v, pct.0, pct.1)? {
            return Ok(b);
        }
    }
    Ok(default_bounds(channel))
}

impl LiveSession {
    pub fn new(session_id: impl Into<String>, cfg: SessionConfig) -> Result<Self> {
        cfg.encoding.check()?;
        if !(cfg.window_s > 0.0 && cfg.window_s.is_finite()) {
            return Err(Error::InvalidArgument(format!("window must be positive, got {} s", cfg.window_s)));
        }
        let reference = cfg.reference.as_deref();
        let pct = cfg.encoding.percentiles;
        Ok(Self {
            session_id: session_id.into(),
            color_bounds: session_bounds(cfg.encoding.color_source, reference, pct)?,
            thickness_bounds: session_bounds(cfg.encoding.thickness_source, reference, pct)?,
            cfg,
            samples: VecDeque::new(),
            accepted: 0,
            finalized: 0,
            origin_ms: None,
            epoch: 0,
            vertices: VecDeque::new(),
            connectors: VecDeque::new(),
            paired: 0,
            finished: false,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn samples(&self) -> impl Iterator<Item = &MotionSample<f64>> {
        self.samples.iter()
    }

    /// Time span of the retained samples in ms.
    pub fn retained_span_ms(&self) -> f64 {
        match (self.samples.front(), self.samples.back()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Timestamp of the first accepted sample.
    pub fn origin_ms(&self) -> Option<f64> {
        self.origin_ms
    }

    pub fn bow(&self) -> Option<BowPose> {
        self.samples.back().map(|s| BowPose { p: s.pos, q: s.orient })
    }

    /// Appends a sample with a strictly later timestamp, finalizes the
    /// previous frame and evicts samples older than the window.
    pub fn accept_sample(&mut self, t_ms: f64, p: Vec3<f64>, q: UnitQuat<f64>) -> Result<(), Rejection> {
        if self.finished {
            return Err(Rejection::Closed);
        }
        if !t_ms.is_finite() || !p.is_finite() || !q.is_finite() {
            return Err(Rejection::Parse);
        }
        let n = q.norm();
        let q = if (n - 1.0).abs() <= UNIT_TOLERANCE {
            q
        } else if (n - 1.0).abs() <= QUAT_LOAD_TOLERANCE {
            UnitQuat::normalize(q.w, q.x, q.y, q.z).ok_or(Rejection::Parse)?
        } else {
            return Err(Rejection::Parse);
        };
        if let Some(last) = self.samples.back() {
            if !(t_ms > last.t) {
                return Err(Rejection::OutOfOrder);
            }
        }

        self.epoch += 1;
        self.origin_ms.get_or_insert(t_ms);
        self.samples.push_back(MotionSample::new(t_ms, p, q));
        self.accepted += 1;
        if self.accepted >= 2 {
            self.finalize(self.accepted - 2);
        }
        self.evict();
        Ok(())
    }

    /// Closes the session, finalizing the newest frame with a one-sided
    /// difference.
    pub fn finish(&mut self) {
        if self.finished {
            return;
        }
        self.finished = true;
        self.epoch += 1;
        if self.accepted >= 2 && self.finalized < self.accepted {
            self.finalize(self.accepted - 1);
        }
    }

    fn sample(&self, global: usize) -> &MotionSample<f64> {
        &self.samples[global + self.samples.len() - self.accepted]
    }

    fn finalize(&mut self, i: usize) {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(self.accepted - 1);
        let (a, b, s) = (self.sample(lo), self.sample(hi), *self.sample(i));
        // timestamps strictly increase and quaternions are unit, so both succeed
        let speed = span_speed(a, b).expect("increasing timestamps");
        let rot_speed = span_rotation_speed(a, b).expect("unit quaternions");

        let enc = &self.cfg.encoding;
        let value = |ch: Channel| match ch {
            Channel::Speed => Some(speed),
            Channel::RotSpeed => Some(rot_speed),
            _ => None,
        };
        let uc = value(enc.color_source).map_or(0.5, |v| normalize_with_bounds(v, self.color_bounds));
        let uw = value(enc.thickness_source).map_or(0.5, |v| normalize_with_bounds(v, self.thickness_bounds));
        let v = LiveVertex {
            t: s.t,
            p: s.pos,
            q: s.orient,
            c: colormap(uc),
            w: thickness_map(uw, enc.thickness_range_m),
            speed,
            rot_speed,
        };
        self.vertices.push_back(Tagged { epoch: self.epoch, item: v });
        self.finalized = i + 1;
        self.pair(v);
    }

    fn pair(&mut self, v: LiveVertex) {
        let (Some(reference), Some(origin)) = (self.cfg.reference.as_deref(), self.origin_ms) else {
            return;
        };
        if self.cfg.rubber_band_stride == 0 {
            return;
        }
        let rel = v.t - origin;
        let times: Vec<f64> = reference.times().collect();
        let Some(j) = nearest_index(&times, rel) else {
            return;
        };
        if (times[j] - rel).abs() > self.cfg.pairing_tol_ms {
            return;
        }
        if self.paired.is_multiple_of(self.cfg.rubber_band_stride) {
            let c = LiveConnector { t: v.t, a: v.p, b: reference.frames[j].pos };
            self.connectors.push_back(Tagged { epoch: self.epoch, item: c });
        }
        self.paired += 1;
    }

    fn evict(&mut self) {
        let window_ms = self.cfg.window_s * 1000.0;
        let Some(newest) = self.samples.back().map(|s| s.t) else {
            return;
        };
        while self.samples.len() > MIN_RETAINED && newest - self.samples[0].t > window_ms {
            self.samples.pop_front();
        }
        if let Some(w) = self.watermark() {
            while self.vertices.front().is_some_and(|v| v.item.t < w) {
                self.vertices.pop_front();
            }
            while self.connectors.front().is_some_and(|c| c.item.t < w) {
                self.connectors.pop_front();
            }
        }
    }

    /// Oldest retained timestamp once anything has been evicted.
    pub fn watermark(&self) -> Option<f64> {
        (self.accepted > self.samples.len()).then(|| self.samples[0].t)
    }

    /// Everything added after `since_epoch`. A `since_epoch` at or past the
    /// current epoch gives an empty delta.
    pub fn scene_delta(&self, since_epoch: u64) -> SceneDelta {
        let newer = |e: u64| e > since_epoch;
        let vertices = self.vertices.iter().filter(|v| newer(v.epoch)).map(|v| v.item).collect();
        let connectors = self.connectors.iter().filter(|c| newer(c.epoch)).map(|c| c.item).collect();
        SceneDelta {
            epoch: self.epoch.max(since_epoch),
            since_epoch,
            vertices,
            connectors,
            evict_before_ms: self.watermark(),
            bow: self.bow(),
            finished: self.finished,
        }
    }

    /// Retained finalized vertices in time order.
    pub fn vertices(&self) -> impl Iterator<Item = &LiveVertex> {
        self.vertices.iter().map(|v| &v.item)
    }

    pub fn connectors(&self) -> impl Iterator<Item = &LiveConnector> {
        self.connectors.iter().map(|c| &c.item)
    }
}

impl LiveSession {
    /// Snapshot of the retained vertices as a one-path scene drawn at `t_now`
    /// (default: the newest vertex).
    pub fn to_scene(&self, t_now: Option<f64>) -> Scene {
        let t_now = t_now.or_else(|| self.vertices.back().map(|v| v.item.t)).unwrap_or(0.0);
        let enc = &self.cfg.encoding;
        let dir = enc.fly_dir.unwrap_or_else(|| {
            let pts: Vec<Vec3<f64>> = self.samples.iter().map(|s| s.pos).collect();
            fly_away_direction(&pts).dir
        });
        let shift = |p: Vec3<f64>, t: f64| fly_away(p, t, t_now, dir, enc.fly_speed_mps);
        let vertices = self
            .vertices()
            .map(|v| PathVertex { render_pos: shift(v.p, v.t), color: v.c, thickness_m: v.w, t: v.t })
            .collect();
        let connectors = self.connectors().map(|c| Segment { a: shift(c.a, c.t), b: c.b }).collect();
        Scene {
            t_now,
            paths: vec![ScenePath { id: self.session_id.clone(), vertices }],
            connectors,
            bow: self.bow(),
            ..Scene::default()
        }
    }
}
