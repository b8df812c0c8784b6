//! Principal axes of a point cloud and the fly-away direction derived from them.

use crate::geom::Vec3;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalAxes<T> {
    /// Unit axes ordered by decreasing variance.
    pub axes: [Vec3<T>; 3],
    pub variances: [T; 3],
    pub centroid: Vec3<T>,
}

/// Eigen-decomposition of a symmetric 3×3 matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the matching eigenvectors as columns.
pub fn symmetric_eigen3<T: Real>(m: [[T; 3]; 3]) -> ([T; 3], [[T; 3]; 3]) {
    let mut a = m;
    let mut v = [[T::zero(); 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let scale = a.iter().flatten().fold(T::zero(), |s, &x| s.max(x.abs()));
    if scale == T::zero() {
        return ([T::zero(); 3], v);
    }
    for _sweep in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off <= T::epsilon() * scale * T::lit(1e-3) {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == T::zero() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            for row in a.iter_mut() {
                let (akp, akq) = (row[p], row[q]);
                row[p] = c * akp - s * akq;
                row[q] = s * akp + c * akq;
            }
            let (rp, rq) = (a[p], a[q]);
            for k in 0..3 {
                a[p][k] = c * rp[k] - s * rq[k];
                a[q][k] = s * rp[k] + c * rq[k];
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2]], v)
}

/// Principal axes of `points`; `None` for an empty set.
pub fn principal_axes<T: Real>(points: &[Vec3<T>]) -> Option<PrincipalAxes<T>> {
    if points.is_empty() {
        return None;
    }
    let n = T::from_usize_lossy(points.len());
    let centroid = points.iter().fold(Vec3::zero(), |s, &p| s + p) * (T::one() / n);
    let mut cov = [[T::zero(); 3]; 3];
    for p in points {
        let d = (*p - centroid).to_array();
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    for row in cov.iter_mut() {
        for x in row.iter_mut() {
            *x /= n;
        }
    }
    let (vals, vecs) = symmetric_eigen3(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap_or(std::cmp::Ordering::Equal));
    let column = |c: usize| Vec3::new(vecs[0][c], vecs[1][c], vecs[2][c]);
    Some(PrincipalAxes {
        axes: order.map(|c| column(c).normalized().unwrap_or_else(Vec3::unit_z)),
        variances: order.map(|c| vals[c].max(T::zero())),
        centroid,
    })
}

/// Flips `v` so its first clearly non-zero component, in the order z, x, y,
/// is positive.
pub fn canonical_sign<T: Real>(v: Vec3<T>) -> Vec3<T> {
    let eps = T::lit(1e-9);
    for c in [v.z, v.x, v.y] {
        if c.abs() > eps {
            return if c < T::zero() { -v } else { v };
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlyDirection<T> {
    pub dir: Vec3<T>,
    /// Positions were coincident or collinear and world +z was used.
    pub fallback: bool,
}

/// Least-variance principal axis of the positions: the normal of the mostly
/// planar bowing motion.
pub fn fly_away_direction<T: Real>(points: &[Vec3<T>]) -> FlyDirection<T> {
    let fallback = || {
        log::warn!("bow positions are degenerate; flying away along +z");
        FlyDirection { dir: Vec3::unit_z(), fallback: true }
    };
    if points.len() < 3 {
        return fallback();
    }
    let Some(pa) = principal_axes(points) else {
        return fallback();
    };
    let [v0, v1, _] = pa.variances;
    if !(v0 > T::zero()) || v1 <= v0 * T::lit(1e-12) {
        return fallback();
    }
    FlyDirection { dir: canonical_sign(pa.axes[2]), fallback: false }
}
