//! Matrix-free symmetric operators: the access abstraction shared by the
//! packing and sparsification layers.
//!
//! Everything downstream only ever needs `v ↦ Av` for symmetric positive
//! semidefinite `A`, plus an optional dense materialization for
//! reference-mode tests. Query counting is part of the contract: callers
//! budget and report matvec counts.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Matrix-vector access to a symmetric operator on `R^n`.
pub trait LinearOperator {
    /// Ambient dimension `n`.
    fn dim(&self) -> usize;

    /// The product `A·v`.
    fn apply(&self, v: &DVector<f64>) -> DVector<f64>;

    /// Dense materialization, when the operator is backed by one
    /// (reference mode); `None` for genuinely implicit operators.
    fn as_dense(&self) -> Option<DMatrix<f64>> {
        None
    }
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        debug_assert_eq!(self.nrows(), self.ncols(), "operator must be square");
        self.nrows()
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self * v
    }

    fn as_dense(&self) -> Option<DMatrix<f64>> {
        Some(self.clone())
    }
}

/// Wraps a closure as an operator.
pub struct FnOperator<F: Fn(&DVector<f64>) -> DVector<f64>> {
    n: usize,
    f: F,
}

impl<F: Fn(&DVector<f64>) -> DVector<f64>> FnOperator<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(&DVector<f64>) -> DVector<f64>> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        (self.f)(v)
    }
}

/// Counts matvec queries to an inner operator.
pub struct CountingOperator<'a> {
    inner: &'a dyn LinearOperator,
    count: Cell<u64>,
}

impl<'a> CountingOperator<'a> {
    pub fn new(inner: &'a dyn LinearOperator) -> Self {
        Self { inner, count: Cell::new(0) }
    }

    /// Queries issued so far.
    pub fn count(&self) -> u64 {
        self.count.get()
    }
}

impl LinearOperator for CountingOperator<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.count.set(self.count.get() + 1);
        self.inner.apply(v)
    }

    fn as_dense(&self) -> Option<DMatrix<f64>> {
        self.inner.as_dense()
    }
}

/// The operator `s·A`.
pub struct ScaledOperator<'a> {
    inner: &'a dyn LinearOperator,
    scale: f64,
}

impl<'a> ScaledOperator<'a> {
    pub fn new(inner: &'a dyn LinearOperator, scale: f64) -> Self {
        Self { inner, scale }
    }
}

impl LinearOperator for ScaledOperator<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.inner.apply(v) * self.scale
    }

    fn as_dense(&self) -> Option<DMatrix<f64>> {
        self.inner.as_dense().map(|m| m * self.scale)
    }
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration with
/// Rayleigh-quotient readout.
///
/// Deterministic given the generator state. The estimate approaches the true
/// value from below; callers needing certified upper bounds must add their
/// own margin.
pub fn power_lambda_max<R: Rng>(op: &dyn LinearOperator, iters: usize, rng: &mut R) -> f64 {
    let n = op.dim();
    if n == 0 {
        return 0.0;
    }
    let mut v = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    v /= norm;
    let mut rayleigh = 0.0;
    for _ in 0..iters {
        let w = op.apply(&v);
        rayleigh = v.dot(&w);
        let norm = w.norm();
        if norm <= f64::MIN_POSITIVE {
            return 0.0; // v landed in the null space
        }
        v = w / norm;
    }
    let w = op.apply(&v);
    rayleigh = rayleigh.max(v.dot(&w));
    rayleigh
}
