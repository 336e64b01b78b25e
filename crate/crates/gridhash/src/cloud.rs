//! Point clouds carrying implicit squared-distance vectors.

use nalgebra::DMatrix;

use crate::GridError;

/// `n` points in `R^k`, stored as the rows of an `n × k` matrix.
///
/// The cloud stands for the implicit vector `g_e = ‖q_u − q_v‖²` over all
/// unordered pairs `e = (u, v)`; accessors below materialize entries, full
/// matrices, or coordinate-thresholded variants on demand.
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: DMatrix<f64>,
}

impl PointCloud {
    /// Wraps an `n × k` matrix whose rows are the points.
    ///
    /// # Errors
    ///
    /// [`GridError::BadParameter`] when `k = 0` or any coordinate is not
    /// finite.
    pub fn new(points: DMatrix<f64>) -> Result<Self, GridError> {
        if points.ncols() == 0 {
            return Err(GridError::BadParameter {
                what: "embedding dimension k must be positive".into(),
            });
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(GridError::BadParameter {
                what: "point coordinates must be finite".into(),
            });
        }
        Ok(Self { points })
    }

    /// Wraps a `k × n` matrix whose *columns* are the points.
    pub fn from_columns(q: &DMatrix<f64>) -> Result<Self, GridError> {
        Self::new(q.transpose())
    }

    /// Number of points.
    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    /// Embedding dimension.
    pub fn k(&self) -> usize {
        self.points.ncols()
    }

    /// The `n × k` coordinate matrix.
    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    /// Coordinate `j` of all points.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.points.column(j).iter().cloned().collect()
    }

    /// Squared distance `g_{(u,v)} = ‖q_u − q_v‖²`.
    pub fn squared_distance(&self, u: usize, v: usize) -> f64 {
        (self.points.row(u) - self.points.row(v)).norm_squared()
    }

    /// Dense symmetric matrix of all squared distances (zero diagonal).
    pub fn squared_distances_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut g = DMatrix::zeros(n, n);
        for u in 0..n {
            for v in 0..u {
                let d = self.squared_distance(u, v);
                g[(u, v)] = d;
                g[(v, u)] = d;
            }
        }
        g
    }

    /// Coordinate-thresholded distances: entry `(u, v)` sums
    /// `(q_{uj} − q_{vj})²` over coordinates `j` where that square is `≥ c`.
    ///
    /// This is the part of `g` that large-scale interval rounding is
    /// responsible for covering.
    pub fn thresholded_distances_dense(&self, c: f64) -> DMatrix<f64> {
        let n = self.n();
        let mut g = DMatrix::zeros(n, n);
        for u in 0..n {
            for v in 0..u {
                let mut sum = 0.0;
                for j in 0..self.k() {
                    let d2 = (self.points[(u, j)] - self.points[(v, j)]).powi(2);
                    if d2 >= c {
                        sum += d2;
                    }
                }
                g[(u, v)] = sum;
                g[(v, u)] = sum;
            }
        }
        g
    }

    /// Largest squared difference along any single coordinate over all
    /// pairs: `max_{u,v} max_j (q_{uj} − q_{vj})²`.
    ///
    /// Per coordinate this is `(max_i q_{ij} − min_i q_{ij})²`, so the scan
    /// is `O(nk)`.
    pub fn max_coordinate_gap_squared(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.k() {
            let col = self.points.column(j);
            let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
            worst = worst.max((max - min).powi(2));
        }
        worst
    }
}
