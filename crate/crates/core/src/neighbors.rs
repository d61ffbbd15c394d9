//! Exact k-nearest-neighbor index by brute-force Euclidean distance.

use std::cmp::Ordering;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ClsmError, Result};
use crate::scalar::Scalar;

/// Whether row `i` of the index lists `i` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SelfPolicy {
    /// `i` always occupies the first slot of row `i`.
    #[default]
    Include,
    Exclude,
}

/// Row `i` lists the `N` observations closest to observation `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborIndex {
    neighbors: Array2<usize>,
    policy: SelfPolicy,
}

fn squared_distance<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    a.iter()
        .zip(b.iter())
        .map(|(&u, &v)| (u - v) * (u - v))
        .fold(T::zero(), |acc, d| acc + d)
}

fn by_distance_then_index<T: Scalar>(a: &(T, usize), b: &(T, usize)) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
}

/// The `n` reference rows nearest to `query`, ordered by (distance, index), optionally skipping one row.
pub fn nearest<T: Scalar>(
    reference: ArrayView2<'_, T>,
    query: ArrayView1<'_, T>,
    n: usize,
    skip: Option<usize>,
) -> Vec<usize> {
    let mut cand: Vec<(T, usize)> = reference
        .rows()
        .into_iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != skip)
        .map(|(j, row)| (squared_distance(query, row), j))
        .collect();
    let n = n.min(cand.len());
    if n == 0 {
        return Vec::new();
    }
    if n < cand.len() {
        cand.select_nth_unstable_by(n - 1, by_distance_then_index);
        cand.truncate(n);
    }
    cand.sort_unstable_by(by_distance_then_index);
    cand.into_iter().map(|(_, j)| j).collect()
}

impl NeighborIndex {
    /// Builds the index over the rows of `points`, which are expected to be standardized already.
    pub fn build<T: Scalar>(points: ArrayView2<'_, T>, n: usize, policy: SelfPolicy) -> Result<Self> {
        let s = points.nrows();
        let available = match policy {
            SelfPolicy::Include => s,
            SelfPolicy::Exclude => s.saturating_sub(1),
        };
        if n == 0 || n > available {
            return Err(ClsmError::config(format!(
                "n_neighbors must lie in [1, {available}] for {s} observations ({policy:?} self), got {n}"
            )));
        }
        let rows: Vec<Vec<usize>> = (0..s)
            .into_par_iter()
            .map(|i| match policy {
                SelfPolicy::Include => {
                    let mut row = Vec::with_capacity(n);
                    row.push(i);
                    row.extend(nearest(points, points.row(i), n - 1, Some(i)));
                    row
                }
                SelfPolicy::Exclude => nearest(points, points.row(i), n, Some(i)),
            })
            .collect();
        let flat: Vec<usize> = rows.into_iter().flatten().collect();
        Ok(Self {
            neighbors: Array2::from_shape_vec((s, n), flat).expect("S * N entries"),
            policy,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.neighbors.nrows()
    }

    pub fn n_neighbors(&self) -> usize {
        self.neighbors.ncols()
    }

    pub fn policy(&self) -> SelfPolicy {
        self.policy
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, usize> {
        self.neighbors.row(i)
    }

    pub fn as_array(&self) -> ArrayView2<'_, usize> {
        self.neighbors.view()
    }

    /// Wraps a precomputed neighbor table after validating its indices.
    pub fn from_array(neighbors: Array2<usize>, policy: SelfPolicy) -> Result<Self> {
        let s = neighbors.nrows();
        if neighbors.ncols() == 0 || neighbors.iter().any(|&j| j >= s) {
            return Err(ClsmError::config("neighbor table has out-of-range indices or no columns"));
        }
        Ok(Self { neighbors, policy })
    }
}

/// Default smoothing neighborhood: `ceil(0.02 * S)` clamped to `[3, 50]`, never above `S`.
pub fn default_neighbor_count(s: usize) -> usize {
    let n = (0.02 * s as f64).ceil() as usize;
    n.clamp(3, 50).min(s.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn three_points_self_excluded() {
        let pts = array![[0.0], [1.0], [10.0]];
        let idx = NeighborIndex::build(pts.view(), 1, SelfPolicy::Exclude).unwrap();
        assert_eq!(idx.as_array().column(0).to_vec(), vec![1, 0, 1]);
    }

    #[test]
    fn full_neighborhood_is_a_permutation() {
        let pts = array![[0.0, 1.0], [3.0, -1.0], [2.0, 2.0], [0.5, 0.5]];
        let idx = NeighborIndex::build(pts.view(), 4, SelfPolicy::Include).unwrap();
        for i in 0..4 {
            let mut row = idx.row(i).to_vec();
            assert_eq!(row[0], i);
            row.sort_unstable();
            assert_eq!(row, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn duplicate_points_prefer_lower_index() {
        let pts = array![[1.0], [5.0], [1.0], [1.0]];
        let idx = NeighborIndex::build(pts.view(), 2, SelfPolicy::Exclude).unwrap();
        assert_eq!(idx.row(3).to_vec(), vec![0, 2]);
        assert_eq!(idx.row(0).to_vec(), vec![2, 3]);
    }

    #[test]
    fn too_many_neighbors_is_config_error() {
        let pts = array![[0.0], [1.0]];
        assert!(matches!(
            NeighborIndex::build(pts.view(), 3, SelfPolicy::Include),
            Err(ClsmError::Config(_))
        ));
        assert!(NeighborIndex::build(pts.view(), 2, SelfPolicy::Exclude).is_err());
        assert!(NeighborIndex::build(pts.view(), 0, SelfPolicy::Include).is_err());
    }

    #[test]
    fn default_count_rule() {
        assert_eq!(default_neighbor_count(10), 3);
        assert_eq!(default_neighbor_count(1201), 25);
        assert_eq!(default_neighbor_count(100_000), 50);
        assert_eq!(default_neighbor_count(2), 2);
    }
}
