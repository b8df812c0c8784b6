//! Encoded 3D path geometry.
//!
//! Each motion frame becomes a path vertex whose color and thickness encode a
//! feature channel. Time is turned into space by pushing older vertices along a
//! fly-away direction in proportion to their age; with zero fly-away speed the
//! path is the recorded motion itself.

pub mod encode;
pub mod pca;

use serde::{Deserialize, Serialize};

use crate::compare::{pair_uniform, Pairing};
use crate::error::{Error, Result};
use crate::features::{Channel, FeatureFrame, FeatureTrack};
use crate::geom::{UnitQuat, Vec3};
use crate::scalar::Real;

pub use encode::{colormap, normalize_feature, normalize_with_bounds, percentile_bounds, thickness_map};
pub use pca::{fly_away_direction, principal_axes, FlyDirection, PrincipalAxes};

pub const SCENE_VERSION: u32 = 1;

/// Length of an orientation tick glyph, in meters.
pub const GLYPH_LENGTH_M: f64 = 0.04;

/// Default spacing between juxtaposed paths, in meters.
pub const JUXTAPOSE_SPACING_M: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelChannel {
    PlayedNote,
    ExpectedNote,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodingConfig {
    pub color_source: Channel,
    pub thickness_source: Channel,
    /// `None` derives the direction from the motion.
    pub fly_dir: Option<Vec3<f64>>,
    pub fly_speed_mps: f64,
    pub thickness_range_m: (f64, f64),
    /// Robust normalization percentiles.
    pub percentiles: (f64, f64),
    pub label_channel: Option<LabelChannel>,
    /// Emit an orientation tick every this many frames; 0 disables.
    pub orientation_glyph_stride: usize,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self {
            color_source: Channel::Speed,
            thickness_source: Channel::Speed,
            fly_dir: None,
            fly_speed_mps: 0.25,
            thickness_range_m: (0.002, 0.012),
            percentiles: (5.0, 95.0),
            label_channel: Some(LabelChannel::PlayedNote),
            orientation_glyph_stride: 0,
        }
    }
}

impl EncodingConfig {
    pub fn check(&self) -> Result<()> {
        let (tmin, tmax) = self.thickness_range_m;
        if !(tmin > 0.0 && tmin < tmax && tmax.is_finite()) {
            return Err(Error::InvalidArgument(format!("thickness range must satisfy 0 < min < max, got {tmin}..{tmax}")));
        }
        if !(self.fly_speed_mps >= 0.0 && self.fly_speed_mps.is_finite()) {
            return Err(Error::InvalidArgument(format!("fly-away speed must be >= 0, got {}", self.fly_speed_mps)));
        }
        let (lo, hi) = self.percentiles;
        if !(lo >= 0.0 && lo < hi && hi <= 100.0) {
            return Err(Error::InvalidArgument(format!("percentiles must satisfy 0 <= lo < hi <= 100, got {lo}, {hi}")));
        }
        if let Some(d) = self.fly_dir {
            if !((d.norm() - 1.0).abs() <= 1e-6) {
                return Err(Error::InvalidArgument(format!("fly direction must be a unit vector, got {d:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathVertex {
    #[serde(rename = "p")]
    pub render_pos: Vec3<f64>,
    #[serde(rename = "c")]
    pub color: [f64; 4],
    #[serde(rename = "w")]
    pub thickness_m: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePath {
    pub id: String,
    pub vertices: Vec<PathVertex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub t: f64,
    pub text: String,
    #[serde(rename = "p")]
    pub anchor: Vec3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec3<f64>,
    pub b: Vec3<f64>,
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    fn translated(self, by: Vec3<f64>) -> Self {
        Segment { a: self.a + by, b: self.b + by }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BowPose {
    pub p: Vec3<f64>,
    pub q: UnitQuat<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub version: u32,
    #[serde(rename = "t_now_ms")]
    pub t_now: f64,
    pub paths: Vec<ScenePath>,
    pub labels: Vec<Label>,
    pub connectors: Vec<Segment>,
    /// Orientation ticks.
    #[serde(default)]
    pub glyphs: Vec<Segment>,
    pub bow: Option<BowPose>,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            version: SCENE_VERSION,
            t_now: 0.0,
            paths: Vec::new(),
            labels: Vec::new(),
            connectors: Vec::new(),
            glyphs: Vec::new(),
            bow: None,
        }
    }
}

/// Serializes with a stable field order and shortest round-trip number
/// formatting, so equal scenes give identical bytes and re-import is exact.
pub fn export_scene(scene: &Scene) -> Vec<u8> {
    let mut out = serde_json::to_vec(scene).expect("scene serializes");
    out.push(b'\n');
    out
}

pub fn import_scene(bytes: &[u8]) -> Result<Scene> {
    let scene: Scene = serde_json::from_slice(bytes)?;
    if scene.version != SCENE_VERSION {
        return Err(Error::Version { found: scene.version as u64, expected: SCENE_VERSION as u64 });
    }
    for p in &scene.paths {
        if p.vertices.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::InvalidArgument(format!("path {:?}: vertex times are not increasing", p.id)));
        }
    }
    Ok(scene)
}

/// Position of a frame recorded at `t` when drawn at time `t_now`:
/// `pos + dir · speed · (t_now − t) / 1000`.
#[inline]
pub fn fly_away<T: Real>(pos: Vec3<T>, t: T, t_now: T, dir: Vec3<T>, speed_mps: T) -> Vec3<T> {
    let shift = speed_mps * (t_now - t) / T::lit(1000.0);
    // a zero shift returns the recorded position bit for bit (including -0.0)
    if shift == T::zero() {
        pos
    } else {
        pos + dir * shift
    }
}

pub fn time_to_space<T: Real>(frames: &[(T, Vec3<T>)], t_now: T, dir: Vec3<T>, speed_mps: T) -> Vec<Vec3<T>> {
    frames.iter().map(|&(t, p)| fly_away(p, t, t_now, dir, speed_mps)).collect()
}

const NOTE_NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

/// Scientific pitch name, e.g. 57 → "A3".
pub fn note_name(midi: i32) -> String {
    format!("{}{}", NOTE_NAMES[midi.rem_euclid(12) as usize], midi.div_euclid(12) - 1)
}

fn label_note(f: &FeatureFrame, ch: LabelChannel) -> Option<i32> {
    match ch {
        LabelChannel::PlayedNote => f.pitch_midi.map(|m| m.round() as i32),
        LabelChannel::ExpectedNote => f.expected_midi.map(i32::from),
    }
}

/// Channel values normalized over the track; frames without a value get 0.5.
pub fn normalized_channel(ft: &FeatureTrack, ch: Channel, percentiles: (f64, f64)) -> Result<Vec<f64>> {
    let raw: Vec<Option<f64>> = ft.frames.iter().map(|f| ch.value(f)).collect();
    let present: Vec<f64> = raw.iter().flatten().copied().collect();
    let bounds = percentile_bounds(&present, percentiles.0, percentiles.1)?;
    Ok(raw
        .iter()
        .map(|v| match (v, bounds) {
            (Some(v), Some(b)) => normalize_with_bounds(*v, b),
            _ => 0.5,
        })
        .collect())
}

/// Color and thickness of one frame from already normalized values.
pub fn encode_vertex(render_pos: Vec3<f64>, t: f64, u_color: f64, u_thickness: f64, cfg: &EncodingConfig) -> PathVertex {
    PathVertex {
        render_pos,
        color: colormap(u_color),
        thickness_m: thickness_map(u_thickness, cfg.thickness_range_m),
        t,
    }
}

/// Tick along the bow's local x axis, centred on `at`.
pub fn orientation_glyph(at: Vec3<f64>, orient: UnitQuat<f64>) -> Segment {
    let half = orient.rotate(Vec3::unit_x()) * (GLYPH_LENGTH_M / 2.0);
    Segment { a: at - half, b: at + half }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltPath {
    pub path: ScenePath,
    pub labels: Vec<Label>,
    pub glyphs: Vec<Segment>,
    pub fly_dir: Vec3<f64>,
}

impl BuiltPath {
    pub fn translate(&mut self, by: Vec3<f64>) {
        for v in &mut self.path.vertices {
            v.render_pos += by;
        }
        for l in &mut self.labels {
            l.anchor += by;
        }
        for g in &mut self.glyphs {
            *g = g.translated(by);
        }
    }
}

pub fn resolve_fly_dir(ft: &FeatureTrack, cfg: &EncodingConfig) -> Vec3<f64> {
    cfg.fly_dir.unwrap_or_else(|| {
        let pts: Vec<Vec3<f64>> = ft.frames.iter().map(|f| f.pos).collect();
        fly_away_direction(&pts).dir
    })
}

/// One vertex per frame, plus note labels and orientation ticks.
pub fn build_path(ft: &FeatureTrack, cfg: &EncodingConfig, t_now: f64) -> Result<BuiltPath> {
    build_path_towards(ft, cfg, t_now, resolve_fly_dir(ft, cfg))
}

/// [`build_path`] with an explicit fly-away direction.
pub fn build_path_towards(ft: &FeatureTrack, cfg: &EncodingConfig, t_now: f64, dir: Vec3<f64>) -> Result<BuiltPath> {
    cfg.check()?;
    if ft.is_empty() {
        return Err(Error::EmptyInput);
    }
    let uc = normalized_channel(ft, cfg.color_source, cfg.percentiles)?;
    let uw = normalized_channel(ft, cfg.thickness_source, cfg.percentiles)?;

    let mut vertices = Vec::with_capacity(ft.len());
    let mut labels = Vec::new();
    let mut glyphs = Vec::new();
    let mut prev_note = None;
    for (i, f) in ft.frames.iter().enumerate() {
        let p = fly_away(f.pos, f.t, t_now, dir, cfg.fly_speed_mps);
        vertices.push(encode_vertex(p, f.t, uc[i], uw[i], cfg));

        if let Some(ch) = cfg.label_channel {
            let note = label_note(f, ch);
            if let Some(n) = note {
                if note != prev_note {
                    labels.push(Label { t: f.t, text: note_name(n), anchor: p });
                }
            }
            prev_note = note;
        }
        if cfg.orientation_glyph_stride > 0 && i % cfg.orientation_glyph_stride == 0 {
            glyphs.push(orientation_glyph(p, f.orient));
        }
    }
    Ok(BuiltPath {
        path: ScenePath { id: ft.source_id.clone(), vertices },
        labels,
        glyphs,
        fly_dir: dir,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    Juxtapose,
    Superimpose,
}

/// Superimpose leaves paths in place; juxtapose moves path `k` by `k · offset`.
pub fn layout(mut paths: Vec<ScenePath>, mode: Layout, offset: Vec3<f64>) -> Vec<ScenePath> {
    if mode == Layout::Juxtapose {
        for (k, p) in paths.iter_mut().enumerate().skip(1) {
            let by = offset * k as f64;
            for v in &mut p.vertices {
                v.render_pos += by;
            }
        }
    }
    paths
}

/// Default juxtaposition offset: half a meter along the in-plane axis that is
/// perpendicular to the main bowing direction.
pub fn default_juxtapose_offset(ft: &FeatureTrack, fly_dir: Vec3<f64>) -> Vec3<f64> {
    let pts: Vec<Vec3<f64>> = ft.frames.iter().map(|f| f.pos).collect();
    let axis = principal_axes(&pts)
        .and_then(|pa| {
            // remove any fly-direction component so the offset stays in plane
            let a = pa.axes[1];
            (a - fly_dir * a.dot(fly_dir)).normalized()
        })
        .map(pca::canonical_sign)
        .unwrap_or_else(Vec3::unit_x);
    axis * JUXTAPOSE_SPACING_M
}

/// Segments joining paired vertices of `a` and `b` for every `stride`-th pair.
pub fn rubber_bands(a: &ScenePath, b: &ScenePath, pairing: &Pairing, stride: usize) -> Result<Vec<Segment>> {
    if stride == 0 {
        return Err(Error::InvalidArgument("rubber band stride must be at least 1".into()));
    }
    pairing.check(a.vertices.len(), b.vertices.len())?;
    Ok(pairing
        .pairs
        .iter()
        .step_by(stride)
        .map(|&(i, j)| Segment { a: a.vertices[i].render_pos, b: b.vertices[j].render_pos })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneOptions {
    pub layout: Layout,
    /// `None` uses [`default_juxtapose_offset`] of the first track.
    pub offset: Option<Vec3<f64>>,
    /// Connect the first two tracks every this many pairs; 0 disables.
    pub rubber_band_stride: usize,
    pub pairing_tol_ms: f64,
    /// `None` uses the latest frame time over all tracks.
    pub t_now: Option<f64>,
}

impl Default for SceneOptions {
    fn default() -> Self {
        Self { layout: Layout::Superimpose, offset: None, rubber_band_stride: 0, pairing_tol_ms: 10.0, t_now: None }
    }
}

/// Builds a scene of one or more tracks sharing the first track's fly-away
/// direction; the bow is placed at the first track's pose at `t_now`.
pub fn build_scene(tracks: &[FeatureTrack], cfg: &EncodingConfig, opts: &SceneOptions) -> Result<Scene> {
    let first = tracks.first().ok_or(Error::EmptyInput)?;
    if first.is_empty() {
        return Err(Error::EmptyInput);
    }
    let t_now = opts
        .t_now
        .unwrap_or_else(|| tracks.iter().filter_map(|t| t.frames.last()).map(|f| f.t).fold(f64::NEG_INFINITY, f64::max));
    let dir = resolve_fly_dir(first, cfg);
    let offset = match opts.layout {
        Layout::Superimpose => Vec3::zero(),
        Layout::Juxtapose => opts.offset.unwrap_or_else(|| default_juxtapose_offset(first, dir)),
    };

    let mut built = tracks
        .iter()
        .map(|t| build_path_towards(t, cfg, t_now, dir))
        .collect::<Result<Vec<_>>>()?;
    if opts.layout == Layout::Juxtapose {
        for (k, b) in built.iter_mut().enumerate().skip(1) {
            b.translate(offset * k as f64);
        }
    }

    let mut connectors = Vec::new();
    if opts.rubber_band_stride > 0 && tracks.len() >= 2 {
        let pairing = pair_uniform(&tracks[0], &tracks[1], opts.pairing_tol_ms);
        connectors = rubber_bands(&built[0].path, &built[1].path, &pairing, opts.rubber_band_stride)?;
    }

    let bow = first
        .frames
        .iter()
        .rev()
        .find(|f| f.t <= t_now)
        .or(first.frames.first())
        .map(|f| BowPose { p: fly_away(f.pos, f.t, t_now, dir, cfg.fly_speed_mps), q: f.orient });

    let mut scene = Scene { t_now, bow, connectors, ..Scene::default() };
    for b in built {
        scene.labels.extend(b.labels);
        scene.glyphs.extend(b.glyphs);
        scene.paths.push(b.path);
    }
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compare::PairingMode;

    fn ft(id: &str, n: usize, speed: impl Fn(usize) -> f64, midi: impl Fn(usize) -> Option<f64>) -> FeatureTrack {
        FeatureTrack {
            source_id: id.into(),
            frames: (0..n)
                .map(|i| {
                    let t = 12.5 * i as f64;
                    let p = Vec3::new((i as f64 * 0.1).sin() * 0.3, (i as f64 * 0.07).cos() * 0.1, 0.001 * (i % 3) as f64);
                    let mut f = FeatureFrame::kinematic(t, p, UnitQuat::identity(), speed(i), 0.0);
                    f.pitch_midi = midi(i);
                    f
                })
                .collect(),
            has_pitch: true,
            has_loudness: false,
        }
    }

    #[test]
    fn zero_speed_is_identity() {
        let t = ft("a", 50, |i| i as f64, |_| None);
        let cfg = EncodingConfig { fly_speed_mps: 0.0, ..Default::default() };
        let b = build_path(&t, &cfg, 10_000.0).unwrap();
        for (v, f) in b.path.vertices.iter().zip(&t.frames) {
            assert_eq!(v.render_pos.to_array().map(f64::to_bits), f.pos.to_array().map(f64::to_bits));
        }
    }

    #[test]
    fn fly_away_offsets() {
        let dir = Vec3::unit_z();
        let p = Vec3::new(0.1, 0.2, 0.3);
        let moved = fly_away(p, 1000.0, 3000.0, dir, 1.0);
        assert!((moved - (p + Vec3::new(0.0, 0.0, 2.0))).norm() < 1e-15);
        assert_eq!(fly_away(p, 3000.0, 3000.0, dir, 1.0), p);
        let neg_zero: Vec3<f64> = Vec3::new(-0.0, 0.0, -0.0);
        let same = fly_away(neg_zero, 0.0, 5.0, dir, 0.0);
        assert_eq!(same.x.to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn constant_speed_is_neutral() {
        let b = build_path(&ft("a", 20, |_| 0.7, |_| None), &EncodingConfig::default(), 250.0).unwrap();
        for v in &b.path.vertices {
            assert_eq!(v.color, [1.0, 1.0, 1.0, 1.0]);
            assert!((v.thickness_m - 0.007).abs() < 1e-15);
        }
    }

    #[test]
    fn slow_thick_blue_fast_thin_red() {
        let t = ft("a", 40, |i| if (i / 10) % 2 == 0 { 0.05 } else { 1.5 }, |_| None);
        let b = build_path(&t, &EncodingConfig::default(), 500.0).unwrap();
        for (i, v) in b.path.vertices.iter().enumerate() {
            if (i / 10) % 2 == 0 {
                assert_eq!(v.color, [0.0, 0.0, 1.0, 1.0]);
                assert_eq!(v.thickness_m, 0.012);
            } else {
                assert_eq!(v.color, [1.0, 0.0, 0.0, 1.0]);
                assert_eq!(v.thickness_m, 0.002);
            }
        }
    }

    #[test]
    fn note_change_gives_one_boundary() {
        // A3 then D3
        let t = ft("a", 30, |_| 1.0, |i| Some(if i < 17 { 57.1 } else { 49.9 }));
        let b = build_path(&t, &EncodingConfig::default(), 400.0).unwrap();
        let texts: Vec<&str> = b.labels.iter().map(|l| l.text.as_str()).collect();
        assert_eq!(texts, vec!["A3", "D3"]);
        let boundaries: Vec<f64> = b.labels.iter().skip(1).map(|l| l.t).collect();
        assert_eq!(boundaries, vec![t.frames[17].t]);
    }

    #[test]
    fn glyph_stride() {
        let cfg = EncodingConfig { orientation_glyph_stride: 4, ..Default::default() };
        let b = build_path(&ft("a", 10, |_| 1.0, |_| None), &cfg, 0.0).unwrap();
        assert_eq!(b.glyphs.len(), 3);
        assert!((b.glyphs[0].length() - GLYPH_LENGTH_M).abs() < 1e-12);
    }

    #[test]
    fn layouts() {
        let a = build_path(&ft("a", 5, |_| 1.0, |_| None), &EncodingConfig::default(), 60.0).unwrap().path;
        let b = ScenePath { id: "b".into(), ..a.clone() };
        let paths = vec![a.clone(), b.clone()];
        assert_eq!(layout(paths.clone(), Layout::Superimpose, Vec3::new(0.5, 0.0, 0.0)), paths);
        let j = layout(paths.clone(), Layout::Juxtapose, Vec3::new(0.5, 0.0, 0.0));
        assert_eq!(j[0], a);
        for (v, w) in j[1].vertices.iter().zip(&b.vertices) {
            assert_eq!(v.render_pos, w.render_pos + Vec3::new(0.5, 0.0, 0.0));
        }
        assert_eq!(layout(vec![a.clone()], Layout::Juxtapose, Vec3::new(0.5, 0.0, 0.0)), vec![a]);
    }

    #[test]
    fn rubber_band_counts() {
        let t = ft("a", 100, |i| i as f64, |_| None);
        let p = build_path(&t, &EncodingConfig::default(), 2000.0).unwrap().path;
        let pairing = Pairing { pairs: (0..100).map(|i| (i, i)).collect(), mode: PairingMode::UniformTime };
        assert_eq!(rubber_bands(&p, &p, &pairing, 10).unwrap().len(), 10);
        let all = rubber_bands(&p, &p, &pairing, 1).unwrap();
        assert_eq!(all.len(), 100);
        assert!(all.iter().all(|s| s.length() == 0.0));
        assert!(rubber_bands(&p, &p, &pairing, 0).is_err());
    }

    #[test]
    fn empty_scene_exports_empty_arrays() {
        let bytes = export_scene(&Scene::default());
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        for key in ["paths", "labels", "connectors"] {
            assert_eq!(v[key], serde_json::json!([]));
        }
        assert_eq!(import_scene(&bytes).unwrap(), Scene::default());
    }

    #[test]
    fn scene_round_trip_and_determinism() {
        let a = ft("a", 60, |i| (i as f64 * 0.3).sin().abs(), |i| Some(45.0 + (i / 20) as f64));
        let b = ft("b", 60, |i| (i as f64 * 0.2).cos().abs(), |_| None);
        let opts = SceneOptions { layout: Layout::Juxtapose, rubber_band_stride: 7, ..Default::default() };
        let cfg = EncodingConfig { orientation_glyph_stride: 9, ..Default::default() };
        let scene = build_scene(&[a, b], &cfg, &opts).unwrap();
        assert_eq!(scene.paths.len(), 2);
        assert_eq!(scene.connectors.len(), 9);
        let bytes = export_scene(&scene);
        assert_eq!(bytes, export_scene(&scene.clone()));
        assert_eq!(import_scene(&bytes).unwrap(), scene);
    }

    #[test]
    fn import_rejects_unordered_vertices() {
        let v = PathVertex { render_pos: Vec3::zero(), color: [1.0; 4], thickness_m: 0.01, t: 5.0 };
        let s = Scene { paths: vec![ScenePath { id: "x".into(), vertices: vec![v, v] }], ..Default::default() };
        assert!(import_scene(&export_scene(&s)).is_err());
    }

    #[test]
    fn note_names() {
        assert_eq!(note_name(57), "A3");
        assert_eq!(note_name(50), "D3");
        assert_eq!(note_name(60), "C4");
        assert_eq!(note_name(36), "C2");
        assert_eq!(note_name(70), "A#4");
    }
}
