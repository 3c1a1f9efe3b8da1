use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};
use crate::scalar::Real;

/// Flattening of `(i, j, m)` into the line-up vector.
///
/// One based: `idx = (i - 1)(M + 1)N + (j - 1)N + m`. The zero-based methods
/// are the same map shifted by one in every slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LineupIndexer {
    pub m_x: usize,
    pub n_terms: usize,
}

impl LineupIndexer {
    pub fn new(m_x: usize, n_terms: usize) -> Self {
        Self { m_x, n_terms }
    }

    pub fn len(&self) -> usize {
        (self.m_x + 1) * (self.m_x + 1) * self.n_terms
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, m: usize) -> usize {
        (i * (self.m_x + 1) + j) * self.n_terms + m
    }

    pub fn triple(&self, idx: usize) -> (usize, usize, usize) {
        let m = idx % self.n_terms;
        let node = idx / self.n_terms;
        (node / (self.m_x + 1), node % (self.m_x + 1), m)
    }

    pub fn one_based(&self, i: usize, j: usize, m: usize) -> usize {
        (i - 1) * (self.m_x + 1) * self.n_terms + (j - 1) * self.n_terms + m
    }

    pub fn one_based_triple(&self, idx: usize) -> (usize, usize, usize) {
        let (i, j, m) = self.triple(idx - 1);
        (i + 1, j + 1, m + 1)
    }
}

/// Split a line-up vector into the coefficient fields `v_1 .. v_N`.
pub fn unlineup<T: Real>(v: &[Complex<T>], grid: GridSpec<T>, n_terms: usize) -> Result<Vec<ComplexField<T>>> {
    let ix = LineupIndexer::new(grid.n_cells, n_terms);
    if v.len() != ix.len() {
        return Err(Error::Dimension(format!("line-up vector has {} entries, expected {}", v.len(), ix.len())));
    }
    Ok((0..n_terms)
        .map(|m| ComplexField {
            grid,
            values: (0..grid.n_nodes()).map(|p| v[p * n_terms + m]).collect(),
        })
        .collect())
}

/// Inverse of [`unlineup`].
pub fn lineup<T: Real>(fields: &[ComplexField<T>]) -> Result<Vec<Complex<T>>> {
    let first = fields.first().ok_or_else(|| Error::InvalidArgument("no fields".into()))?;
    let n = fields.len();
    if fields.iter().any(|f| f.grid != first.grid) {
        return Err(Error::Dimension("fields on different grids".into()));
    }
    let mut out = Vec::with_capacity(first.values.len() * n);
    for p in 0..first.values.len() {
        out.extend(fields.iter().map(|f| f.values[p]));
    }
    Ok(out)
}
