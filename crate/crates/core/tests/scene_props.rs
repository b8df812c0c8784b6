mod common;

use bowtrace::geom::Vec3;
use bowtrace::scene::{
    build_path, colormap, export_scene, fly_away_direction, import_scene, layout, normalize_feature, principal_axes,
    thickness_map, time_to_space, EncodingConfig, Layout, PathVertex, Scene, ScenePath,
};
use common::{feature_track, smooth_track, unit_quat, vec3};
use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

/// Points on a random plane through `origin`, spread along two in-plane axes.
fn planar_points() -> impl Strategy<Value = (Vec<Vec3<f64>>, Vec3<f64>)> {
    (unit_quat(), vec3(2.0), prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 8..80), 0.2..1.0f64).prop_map(
        |(r, origin, uv, aspect)| {
            let (e1, e2, n) = (r.rotate(Vec3::unit_x()), r.rotate(Vec3::unit_y()), r.rotate(Vec3::unit_z()));
            let pts = uv.into_iter().map(|(u, v)| origin + e1 * u + e2 * (v * aspect)).collect();
            (pts, n)
        },
    )
}

fn nalgebra_normal(points: &[Vec3<f64>]) -> (Vector3<f64>, [f64; 3]) {
    let n = points.len() as f64;
    let c = points.iter().fold(Vector3::zeros(), |s, p| s + Vector3::new(p.x, p.y, p.z)) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = Vector3::new(p.x, p.y, p.z) - c;
        cov += d * d.transpose() / n;
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    (eig.eigenvectors.column(order[2]).into_owned(), order.map(|i| eig.eigenvalues[i]))
}

fn scene_strategy() -> impl Strategy<Value = Scene> {
    let vertex = (vec3(3.0), 0.0..1.0f64, 0.002..0.012f64);
    (prop::collection::vec(prop::collection::vec(vertex, 0..30), 0..4), 0.0..1e5f64).prop_map(|(paths, t_now)| Scene {
        t_now,
        paths: paths
            .into_iter()
            .enumerate()
            .map(|(k, vs)| ScenePath {
                id: format!("p{k}"),
                vertices: vs
                    .into_iter()
                    .enumerate()
                    .map(|(i, (p, u, w))| PathVertex { render_pos: p, color: colormap(u), thickness_m: w, t: 12.5 * i as f64 })
                    .collect(),
            })
            .collect(),
        ..Scene::default()
    })
}

proptest! {
    #[test]
    fn zero_speed_is_the_identity(
        frames in prop::collection::vec((0.0..1e5f64, vec3(5.0)), 0..50),
        t_now in 0.0..1e6f64,
        dir in vec3(1.0),
    ) {
        let out = time_to_space(&frames, t_now, dir, 0.0);
        for (o, (_, p)) in out.iter().zip(&frames) {
            prop_assert_eq!(o.to_array().map(f64::to_bits), p.to_array().map(f64::to_bits));
        }
    }

    #[test]
    fn fly_away_moves_older_frames_further(t in 0.0..1e4f64, age in 0.0..1e4f64, speed in 0.0..2.0f64, p in vec3(1.0)) {
        let out = time_to_space(&[(t, p)], t + age, Vec3::unit_z(), speed);
        prop_assert!(((out[0] - p).norm() - speed * age / 1000.0).abs() < 1e-9);
    }

    #[test]
    fn colormap_is_monotone(u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
        let (a, b) = (colormap(lo), colormap(hi));
        prop_assert!(a[0] <= b[0]);
        prop_assert!(a[2] >= b[2]);
        prop_assert!(a.iter().chain(&b).all(|c| (0.0..=1.0).contains(c)));
        prop_assert!(thickness_map(lo, (0.002, 0.012)) >= thickness_map(hi, (0.002, 0.012)));
    }

    #[test]
    fn normalization_is_bounded_and_order_preserving(v in prop::collection::vec(-100.0..100.0f64, 1..60)) {
        let n = normalize_feature(&v, 5.0, 95.0).unwrap();
        for i in 0..v.len() {
            prop_assert!((0.0..=1.0).contains(&n[i]));
            for j in 0..v.len() {
                if v[i] < v[j] {
                    prop_assert!(n[i] <= n[j]);
                }
            }
        }
    }

    #[test]
    fn one_vertex_per_frame(t in smooth_track(1, 80), speed in 0.0..1.0f64) {
        let ft = feature_track("t", &t);
        let cfg = EncodingConfig { fly_speed_mps: speed, ..Default::default() };
        let b = build_path(&ft, &cfg, 5_000.0).unwrap();
        prop_assert_eq!(b.path.vertices.len(), ft.len());
    }

    #[test]
    fn fly_direction_is_the_plane_normal((pts, normal) in planar_points()) {
        let d = fly_away_direction(&pts);
        prop_assert!(!d.fallback);
        prop_assert!((d.dir.norm() - 1.0).abs() <= 1e-9);
        let pa = principal_axes(&pts).unwrap();
        prop_assert!(d.dir.dot(pa.axes[0]).abs() < 1e-6);
        prop_assert!(d.dir.dot(pa.axes[1]).abs() < 1e-6);
        prop_assert!((d.dir.dot(normal).abs() - 1.0).abs() < 1e-6);

        let (oracle, vals) = nalgebra_normal(&pts);
        prop_assert!((pa.variances[0] - vals[0]).abs() < 1e-9);
        prop_assert!((d.dir.x * oracle.x + d.dir.y * oracle.y + d.dir.z * oracle.z).abs() > 1.0 - 1e-6);
    }

    #[test]
    fn juxtapose_is_invertible(t in smooth_track(2, 40), copies in 1usize..4, offset in vec3(1.0)) {
        let ft = feature_track("t", &t);
        let path = build_path(&ft, &EncodingConfig::default(), 1_000.0).unwrap().path;
        let paths = vec![path; copies];
        let back = layout(layout(paths.clone(), Layout::Juxtapose, offset), Layout::Juxtapose, -offset);
        let superimposed = layout(paths, Layout::Superimpose, offset);
        for (a, b) in back.iter().zip(&superimposed) {
            for (v, w) in a.vertices.iter().zip(&b.vertices) {
                prop_assert!((v.render_pos - w.render_pos).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn scenes_round_trip_byte_for_byte(s in scene_strategy()) {
        let bytes = export_scene(&s);
        let back = import_scene(&bytes).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(export_scene(&back), bytes);
    }
}

#[test]
fn orientation_ticks_follow_the_bow() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let track = smooth_track(10, 11).new_tree(&mut runner).unwrap().current();
    let ft = feature_track("g", &track);
    let cfg = EncodingConfig { orientation_glyph_stride: 1, fly_speed_mps: 0.0, ..Default::default() };
    let b = build_path(&ft, &cfg, 0.0).unwrap();
    for (g, f) in b.glyphs.iter().zip(&ft.frames) {
        let axis = (g.b - g.a).normalized().unwrap();
        assert!((axis - f.orient.rotate(Vec3::unit_x())).norm() < 1e-12);
        assert!(((g.a + g.b) * 0.5 - f.pos).norm() < 1e-12);
    }
}
