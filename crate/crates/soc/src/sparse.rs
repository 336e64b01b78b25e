//! Explicit sparse graph Laplacians as normalized edge lists.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::SocError;

/// A sparse graph Laplacian stored as `(u, v, weight)` edges with `u < v`
/// and strictly positive finite weights. Row sums of the assembled matrix
/// are zero by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLaplacian {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl SparseLaplacian {
    /// Builds from raw edges: orients each pair as `u < v`, merges
    /// duplicates, and drops explicit zeros.
    ///
    /// # Errors
    ///
    /// [`SocError::InvalidEdges`] on self-loops, out-of-range vertices, or
    /// non-finite/negative weights.
    pub fn new(n: usize, raw: Vec<(usize, usize, f64)>) -> Result<Self, SocError> {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (a, b, w) in raw {
            if a == b {
                return Err(SocError::InvalidEdges {
                    reason: format!("self-loop at vertex {a}"),
                });
            }
            if a >= n || b >= n {
                return Err(SocError::InvalidEdges {
                    reason: format!("edge ({a},{b}) out of range n = {n}"),
                });
            }
            if !w.is_finite() || w < 0.0 {
                return Err(SocError::InvalidEdges {
                    reason: format!("edge ({a},{b}) has invalid weight {w}"),
                });
            }
            let key = (a.min(b), a.max(b));
            *merged.entry(key).or_insert(0.0) += w;
        }
        let edges = merged
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|((u, v), w)| (u, v, w))
            .collect();
        Ok(Self { n, edges })
    }

    /// The empty Laplacian on `[n]`.
    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    /// Vertex count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Normalized edge list, sorted by `(u, v)`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Number of stored edges.
    pub fn nnz(&self) -> usize {
        self.edges.len()
    }

    /// Sum of all edge weights.
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|&(_, _, w)| w).sum()
    }

    /// Laplacian–vector product.
    pub fn matvec(&self, u: &DVector<f64>) -> DVector<f64> {
        assert_eq!(u.len(), self.n);
        let mut out = DVector::zeros(self.n);
        for &(a, b, w) in &self.edges {
            let diff = u[a] - u[b];
            out[a] += w * diff;
            out[b] -= w * diff;
        }
        out
    }

    /// Dense assembly (test oracle).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(a, b, w) in &self.edges {
            m[(a, a)] += w;
            m[(b, b)] += w;
            m[(a, b)] -= w;
            m[(b, a)] -= w;
        }
        m
    }

    /// Sum of two Laplacians over the same vertex set.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut raw = self.edges.clone();
        raw.extend_from_slice(&other.edges);
        Self::new(self.n, raw).expect("merging valid edge lists stays valid")
    }

    /// Scales every edge weight.
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor >= 0.0 && factor.is_finite());
        let raw = self
            .edges
            .iter()
            .map(|&(u, v, w)| (u, v, w * factor))
            .collect();
        Self::new(self.n, raw).expect("scaling valid edges stays valid")
    }

    /// Writes the TSV interchange format: `u<TAB>v<TAB>weight`, 0-indexed,
    /// `u < v`, one edge per line, sorted.
    ///
    /// # Errors
    ///
    /// Propagates filesystem errors.
    pub fn write_tsv(&self, path: &Path) -> std::io::Result<()> {
        let mut out = String::new();
        for &(u, v, w) in &self.edges {
            out.push_str(&format!("{u}\t{v}\t{w}\n"));
        }
        fs::write(path, out)
    }

    /// Reads the TSV interchange format produced by [`Self::write_tsv`].
    ///
    /// # Errors
    ///
    /// [`SocError::InvalidEdges`] on malformed lines (with line numbers).
    pub fn read_tsv(path: &Path, n: usize) -> Result<Self, SocError> {
        let text = fs::read_to_string(path).map_err(|e| SocError::InvalidEdges {
            reason: format!("{}: {e}", path.display()),
        })?;
        let mut raw = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            fn parse<'a>(
                field: Option<&'a str>,
                what: &str,
                line: usize,
            ) -> Result<&'a str, SocError> {
                field.ok_or_else(|| SocError::InvalidEdges {
                    reason: format!("line {line}: missing {what}"),
                })
            }
            let mut parts = line.split('\t');
            let u: usize = parse(parts.next(), "u", idx + 1)?
                .parse()
                .map_err(|e| SocError::InvalidEdges {
                    reason: format!("line {}: bad u: {e}", idx + 1),
                })?;
            let v: usize = parse(parts.next(), "v", idx + 1)?
                .parse()
                .map_err(|e| SocError::InvalidEdges {
                    reason: format!("line {}: bad v: {e}", idx + 1),
                })?;
            let w: f64 = parse(parts.next(), "weight", idx + 1)?
                .parse()
                .map_err(|e| SocError::InvalidEdges {
                    reason: format!("line {}: bad weight: {e}", idx + 1),
                })?;
            raw.push((u, v, w));
        }
        Self::new(n, raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_and_merges() {
        let lap = SparseLaplacian::new(4, vec![(2, 0, 1.5), (0, 2, 0.5), (1, 3, 1.0)]).unwrap();
        assert_eq!(lap.edges(), &[(0, 2, 2.0), (1, 3, 1.0)]);
    }

    #[test]
    fn rejects_self_loops() {
        assert!(SparseLaplacian::new(3, vec![(1, 1, 1.0)]).is_err());
    }

    #[test]
    fn matvec_matches_dense() {
        let lap = SparseLaplacian::new(3, vec![(0, 1, 2.0), (1, 2, 3.0)]).unwrap();
        let u = DVector::from_vec(vec![1.0, -1.0, 0.5]);
        let fast = lap.matvec(&u);
        let dense = lap.to_dense() * &u;
        assert!((fast - dense).norm() < 1e-14);
    }

    #[test]
    fn row_sums_vanish() {
        let lap = SparseLaplacian::new(5, vec![(0, 4, 1.0), (2, 3, 0.25), (1, 4, 4.0)]).unwrap();
        let ones = DVector::from_element(5, 1.0);
        assert_eq!(lap.matvec(&ones).norm(), 0.0, "L·1 = 0 exactly");
    }
}
