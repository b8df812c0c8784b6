//! Dynamic time warping with absolute-difference cost and unit steps.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Warp<T> {
    /// Monotone path from `(0, 0)` to `(n − 1, m − 1)`.
    pub path: Vec<(usize, usize)>,
    pub cost: T,
}

/// Classic DTW between `a` and `b` with steps `(1,0)`, `(0,1)`, `(1,1)`.
///
/// Costs accumulate along the path from `(0, 0)`; on equal predecessors the
/// diagonal is preferred, then the step in `a`.
pub fn dtw_align<T: Real>(a: &[T], b: &[T]) -> Result<Warp<T>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (n, m) = (a.len(), b.len());
    let mut acc = vec![T::zero(); n * m];
    let at = |i: usize, j: usize| i * m + j;

    for i in 0..n {
        for j in 0..m {
            let local = (a[i] - b[j]).abs();
            acc[at(i, j)] = if i == 0 && j == 0 {
                local
            } else {
                let best = [
                    (i > 0 && j > 0).then(|| acc[at(i - 1, j - 1)]),
                    (i > 0).then(|| acc[at(i - 1, j)]),
                    (j > 0).then(|| acc[at(i, j - 1)]),
                ]
                .into_iter()
                .flatten()
                .fold(T::infinity(), T::min);
                best + local
            };
        }
    }

    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n - 1, m - 1);
    path.push((i, j));
    while i > 0 || j > 0 {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[at(i - 1, j - 1)];
            let up = acc[at(i - 1, j)];
            let left = acc[at(i, j - 1)];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        path.push((i, j));
    }
    path.reverse();
    Ok(Warp { path, cost: acc[at(n - 1, m - 1)] })
}

/// Sum of absolute differences along an arbitrary pairing.
pub fn pairing_cost<T: Real>(a: &[T], b: &[T], pairs: &[(usize, usize)]) -> T {
    pairs.iter().fold(T::zero(), |s, &(i, j)| s + (a[i] - b[j]).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeated_element_costs_nothing() {
        let w = dtw_align(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert_eq!(w.cost, 0.0);
        assert_eq!(w.path.first(), Some(&(0, 0)));
        assert_eq!(w.path.last(), Some(&(2, 3)));
    }

    #[test]
    fn identical_series_walk_the_diagonal() {
        let x = [0.3, -1.0, 2.5, 2.5, 7.0];
        let w = dtw_align(&x, &x).unwrap();
        assert_eq!(w.cost, 0.0);
        assert_eq!(w.path, (0..5).map(|i| (i, i)).collect::<Vec<_>>());
    }

    #[test]
    fn single_cell() {
        let w = dtw_align(&[0.0f32], &[5.0]).unwrap();
        assert_eq!(w.cost, 5.0);
        assert_eq!(w.path, vec![(0, 0)]);
    }

    #[test]
    fn empty_input() {
        assert!(matches!(dtw_align::<f64>(&[], &[1.0]), Err(Error::EmptyInput)));
        assert!(matches!(dtw_align::<f64>(&[1.0], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn path_cost_matches_reported_cost() {
        let a = [0.0, 1.0, 4.0, 2.0, 2.0, 9.0];
        let b = [1.0, 3.0, 3.0, 8.0];
        let w = dtw_align(&a, &b).unwrap();
        assert_eq!(pairing_cost(&a, &b, &w.path), w.cost);
        for s in w.path.windows(2) {
            let (di, dj) = (s[1].0 - s[0].0, s[1].1 - s[0].1);
            assert!(matches!((di, dj), (1, 0) | (0, 1) | (1, 1)));
        }
    }
}
