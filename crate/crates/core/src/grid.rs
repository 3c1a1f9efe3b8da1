//! Uniform node grid on `(-R, R)^2` and nodal fields.
//!
//! Node `(i, j)` (zero based) sits at `(-R + i h, -R + j h)`; `i` runs along the
//! first coordinate. Flat storage uses `i * (M + 1) + j`, the same node order
//! as the line-up vector of the inverse solver.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub half_width: T,
    pub n_cells: usize,
}

/// Boundary edges, walked counter-clockwise from `(-R, -R)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Edge {
    Bottom = 0,
    Right = 1,
    Top = 2,
    Left = 3,
}

impl Edge {
    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Edge> {
        match id {
            0 => Some(Edge::Bottom),
            1 => Some(Edge::Right),
            2 => Some(Edge::Top),
            3 => Some(Edge::Left),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryNode {
    pub i: usize,
    pub j: usize,
    pub edge: Edge,
}

impl<T: Real> GridSpec<T> {
    pub fn new(half_width: T, n_cells: usize) -> Result<Self> {
        if !(half_width > T::zero()) {
            return Err(Error::InvalidArgument("half width must be positive".into()));
        }
        if n_cells < 2 || n_cells % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "cell count must be even and at least 2, got {n_cells}"
            )));
        }
        Ok(Self { half_width, n_cells })
    }

    pub fn side(&self) -> usize {
        self.n_cells + 1
    }

    pub fn n_nodes(&self) -> usize {
        self.side() * self.side()
    }

    pub fn spacing(&self) -> T {
        T::lit(2.0) * self.half_width / T::from_usize_lossy(self.n_cells)
    }

    pub fn coord(&self, i: usize) -> T {
        -self.half_width + T::from_usize_lossy(i) * self.spacing()
    }

    pub fn node(&self, i: usize, j: usize) -> (T, T) {
        (self.coord(i), self.coord(j))
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.side() + j
    }

    pub fn ij(&self, index: usize) -> (usize, usize) {
        (index / self.side(), index % self.side())
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n_cells || j == self.n_cells
    }

    /// All `4 M` boundary nodes; every corner belongs to exactly one edge.
    pub fn boundary_nodes(&self) -> Vec<BoundaryNode> {
        let m = self.n_cells;
        let mut out = Vec::with_capacity(4 * m);
        out.extend((0..m).map(|i| BoundaryNode { i, j: 0, edge: Edge::Bottom }));
        out.extend((0..m).map(|j| BoundaryNode { i: m, j, edge: Edge::Right }));
        out.extend((1..=m).rev().map(|i| BoundaryNode { i, j: m, edge: Edge::Top }));
        out.extend((1..=m).rev().map(|j| BoundaryNode { i: 0, j, edge: Edge::Left }));
        out
    }

    /// The `M + 1` nodes of the top edge `y = R`, ordered by `i`.
    pub fn top_nodes(&self) -> Vec<(usize, usize)> {
        (0..=self.n_cells).map(|i| (i, self.n_cells)).collect()
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = self.n_cells;
        (1..m).flat_map(move |i| (1..m).map(move |j| (i, j)))
    }
}

/// Nodal values on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T, S> {
    pub grid: GridSpec<T>,
    pub values: Vec<S>,
}

pub type ScalarField<T> = Field<T, T>;
pub type ComplexField<T> = Field<T, Complex<T>>;

impl<T: Real, S: Copy> Field<T, S> {
    pub fn new(grid: GridSpec<T>, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::Dimension(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn filled(grid: GridSpec<T>, value: S) -> Self {
        Self { values: vec![value; grid.n_nodes()], grid }
    }

    pub fn from_fn(grid: GridSpec<T>, f: impl Fn(T, T) -> S) -> Self {
        let side = grid.side();
        let mut values = Vec::with_capacity(grid.n_nodes());
        for i in 0..side {
            for j in 0..side {
                let (x, y) = grid.node(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> S {
        self.values[self.grid.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        let k = self.grid.index(i, j);
        self.values[k] = v;
    }

    pub fn map<R: Copy>(&self, f: impl Fn(S) -> R) -> Field<T, R> {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }
}
