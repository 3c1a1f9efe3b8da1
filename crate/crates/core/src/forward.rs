//! Data synthesis: the impedance boundary value problem
//!
//! ```text
//! Δu + k² n²(x) u = g(k) f(x)   in Ω = (-R, R)²
//! ∂_ν u - i k u   = 0           on ∂Ω
//! ```
//!
//! discretized with the 5-point Laplacian in the interior and a one-sided
//! first-order normal difference on the boundary, followed by extraction of
//! noisy Dirichlet traces on ∂Ω and Neumann traces on the top edge.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec, ScalarField};
use crate::scalar::Real;

/// Relative residual every forward solve must reach.
pub const FORWARD_TOLERANCE: f64 = 1e-10;

/// Uniform partition of `[k_lo, k_hi]` with the source amplitude `g` sampled on it.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencySweep<T> {
    pub k_lo: T,
    pub k_hi: T,
    pub n_intervals: usize,
    pub k_values: Vec<T>,
    pub g_values: Vec<Complex<T>>,
}

impl<T: Real> FrequencySweep<T> {
    pub fn new(k_lo: T, k_hi: T, n_intervals: usize, g: impl Fn(T) -> Complex<T>) -> Result<Self> {
        if !(k_lo > T::zero() && k_lo < k_hi) || n_intervals == 0 {
            return Err(Error::InvalidArgument(format!(
                "bad wavenumber partition [{k_lo}, {k_hi}] / {n_intervals}"
            )));
        }
        let step = (k_hi - k_lo) / T::from_usize_lossy(n_intervals);
        let k_values: Vec<T> = (0..=n_intervals)
            .map(|i| if i == n_intervals { k_hi } else { k_lo + T::from_usize_lossy(i) * step })
            .collect();
        let g_values: Vec<Complex<T>> = k_values.iter().map(|&k| g(k)).collect();
        if let Some((k, gk)) = k_values.iter().zip(&g_values).find(|(_, gk)| !(gk.norm() > T::zero())) {
            return Err(Error::VanishingSource { k: k.to_f64_lossy(), modulus: gk.norm().to_f64_lossy() });
        }
        Ok(Self { k_lo, k_hi, n_intervals, k_values, g_values })
    }

    pub fn step(&self) -> T {
        (self.k_hi - self.k_lo) / T::from_usize_lossy(self.n_intervals)
    }

    pub fn len(&self) -> usize {
        self.k_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_values.is_empty()
    }

    /// Partition index of `k`, if `k` is a partition point.
    pub fn position(&self, k: T) -> Option<usize> {
        let tol = self.step() * T::lit(1e-9);
        self.k_values.iter().position(|&kv| (kv - k).abs() <= tol)
    }
}

/// Noisy boundary data, one entry per partition point.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTraces<T> {
    pub grid: GridSpec<T>,
    pub k_values: Vec<T>,
    /// `dirichlet[ik][b]` on `grid.boundary_nodes()[b]`.
    pub dirichlet: Vec<Vec<Complex<T>>>,
    /// `neumann[ik][i]` on top-edge node `(i, M)`.
    pub neumann: Vec<Vec<Complex<T>>>,
    pub noise_level: T,
    pub rng_seed: u64,
}

/// Sparse impedance Helmholtz operator with a cached symbolic LU.
pub struct HelmholtzSolver {
    grid: GridSpec<f64>,
    n2: Vec<f64>,
    symbolic: SymbolicLu<usize>,
}

impl HelmholtzSolver {
    pub fn new(grid: GridSpec<f64>, n2: &ScalarField<f64>) -> Result<Self> {
        if n2.grid != grid {
            return Err(Error::Dimension("refractive index lives on a different grid".into()));
        }
        if let Some(v) = n2.values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("n² must be positive and finite, found {v}")));
        }
        let mat = assemble(&grid, &n2.values, 1.0)?;
        let symbolic = SymbolicLu::try_new(mat.symbolic())
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Self { grid, n2: n2.values.clone(), symbolic })
    }

    pub fn grid(&self) -> &GridSpec<f64> {
        &self.grid
    }

    /// Solve for one wavenumber. `robin_rhs`, when given, holds the impedance
    /// data on `grid.boundary_nodes()`.
    pub fn solve(
        &self,
        f: &ScalarField<f64>,
        g_k: c64,
        k: f64,
        robin_rhs: Option<&[c64]>,
    ) -> Result<ComplexField<f64>> {
        if !(k > 0.0) {
            return Err(Error::InvalidArgument(format!("wavenumber must be positive, got {k}")));
        }
        if f.grid != self.grid {
            return Err(Error::Dimension("source lives on a different grid".into()));
        }
        let rhs = self.rhs(f, g_k, robin_rhs)?;
        let bnorm = rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if bnorm == 0.0 {
            return Ok(ComplexField::filled(self.grid, c64::new(0.0, 0.0)));
        }
        let mat = assemble(&self.grid, &self.n2, k)?;
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone(), mat.as_ref()).map_err(|e| {
            Error::ForwardSolve { k, residual: f64::NAN, reason: format!("LU failed: {e:?}") }
        })?;
        let n = rhs.len();
        let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
        let mut x = lu.solve(&b);
        let mut sol: Vec<c64> = (0..n).map(|i| x[(i, 0)]).collect();
        let mut res = residual(&mat, &sol, &rhs) / bnorm;
        // Iterative refinement in case pivoting was unlucky.
        let mut steps = 0;
        while res > FORWARD_TOLERANCE && steps < 3 {
            let r = residual_vec(&mat, &sol, &rhs);
            let rb = Mat::from_fn(n, 1, |i, _| r[i]);
            x = lu.solve(&rb);
            for (s, i) in sol.iter_mut().zip(0..n) {
                *s += x[(i, 0)];
            }
            res = residual(&mat, &sol, &rhs) / bnorm;
            steps += 1;
        }
        if !(res <= FORWARD_TOLERANCE) {
            return Err(Error::ForwardSolve { k, residual: res, reason: "residual above tolerance".into() });
        }
        ComplexField::new(self.grid, sol)
    }

    fn rhs(&self, f: &ScalarField<f64>, g_k: c64, robin_rhs: Option<&[c64]>) -> Result<Vec<c64>> {
        let grid = &self.grid;
        let mut b = vec![c64::new(0.0, 0.0); grid.n_nodes()];
        for (i, j) in grid.interior_nodes() {
            b[grid.index(i, j)] = g_k * f.at(i, j);
        }
        if let Some(data) = robin_rhs {
            let nodes = grid.boundary_nodes();
            if data.len() != nodes.len() {
                return Err(Error::Dimension(format!(
                    "impedance data has {} entries, boundary has {}",
                    data.len(),
                    nodes.len()
                )));
            }
            for (node, &v) in nodes.iter().zip(data) {
                b[grid.index(node.i, node.j)] = v;
            }
        }
        Ok(b)
    }

    /// Relative residual of `u` for the system at wavenumber `k`.
    pub fn relative_residual(
        &self,
        u: &ComplexField<f64>,
        f: &ScalarField<f64>,
        g_k: c64,
        k: f64,
        robin_rhs: Option<&[c64]>,
    ) -> Result<f64> {
        let mat = assemble(&self.grid, &self.n2, k)?;
        let rhs = self.rhs(f, g_k, robin_rhs)?;
        let bnorm = rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Ok(residual(&mat, &u.values, &rhs) / bnorm.max(f64::MIN_POSITIVE))
    }
}

/// One-shot convenience around [`HelmholtzSolver`].
pub fn solve_helmholtz(
    grid: &GridSpec<f64>,
    n2: &ScalarField<f64>,
    f: &ScalarField<f64>,
    g_k: c64,
    k: f64,
    robin_rhs: Option<&[c64]>,
) -> Result<ComplexField<f64>> {
    HelmholtzSolver::new(*grid, n2)?.solve(f, g_k, k, robin_rhs)
}

/// Solve every partition point of the sweep. Order of the output follows `sweep.k_values`.
pub fn solve_sweep(
    solver: &HelmholtzSolver,
    f: &ScalarField<f64>,
    sweep: &FrequencySweep<f64>,
) -> Result<Vec<ComplexField<f64>>> {
    sweep
        .k_values
        .par_iter()
        .zip(sweep.g_values.par_iter())
        .map(|(&k, &g)| solver.solve(f, g, k, None))
        .collect()
}

fn stencil_entries(grid: &GridSpec<f64>, n2: &[f64], k: f64) -> Vec<Triplet<usize, usize, c64>> {
    let m = grid.n_cells;
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let mut t = Vec::with_capacity(5 * grid.n_nodes());
    let z = |re: f64, im: f64| c64::new(re, im);
    for i in 0..=m {
        for j in 0..=m {
            let p = grid.index(i, j);
            if !grid.is_boundary(i, j) {
                t.push(Triplet::new(p, p, z(-4.0 * inv_h2 + k * k * n2[p], 0.0)));
                for q in [grid.index(i - 1, j), grid.index(i + 1, j), grid.index(i, j - 1), grid.index(i, j + 1)] {
                    t.push(Triplet::new(p, q, z(inv_h2, 0.0)));
                }
                continue;
            }
            // Inward neighbours along each edge normal touching this node.
            let mut inward = Vec::with_capacity(2);
            if i == 0 {
                inward.push(grid.index(1, j));
            }
            if i == m {
                inward.push(grid.index(m - 1, j));
            }
            if j == 0 {
                inward.push(grid.index(i, 1));
            }
            if j == m {
                inward.push(grid.index(i, m - 1));
            }
            let w = 1.0 / (h * inward.len() as f64);
            t.push(Triplet::new(p, p, z(1.0 / h, -k)));
            for q in inward {
                t.push(Triplet::new(p, q, z(-w, 0.0)));
            }
        }
    }
    t
}

fn assemble(grid: &GridSpec<f64>, n2: &[f64], k: f64) -> Result<SparseColMat<usize, c64>> {
    let n = grid.n_nodes();
    SparseColMat::try_new_from_triplets(n, n, &stencil_entries(grid, n2, k))
        .map_err(|e| Error::Factorization(format!("{e:?}")))
}

fn residual_vec(mat: &SparseColMat<usize, c64>, x: &[c64], b: &[c64]) -> Vec<c64> {
    let mut r = b.to_vec();
    let a = mat.as_ref();
    for col in 0..a.ncols() {
        let xc = x[col];
        for (row, v) in a.row_idx_of_col(col).zip(a.val_of_col(col)) {
            r[row] -= v * xc;
        }
    }
    r
}

fn residual(mat: &SparseColMat<usize, c64>, x: &[c64], b: &[c64]) -> f64 {
    residual_vec(mat, x, b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Impedance data `∂_ν u - i k u` of a smooth field on `grid.boundary_nodes()`,
/// with corner normals averaged the same way as the discrete operator.
pub fn impedance_data<T: Real>(
    grid: &GridSpec<T>,
    k: T,
    u: impl Fn(T, T) -> Complex<T>,
    grad: impl Fn(T, T) -> (Complex<T>, Complex<T>),
) -> Vec<Complex<T>> {
    let m = grid.n_cells;
    grid.boundary_nodes()
        .iter()
        .map(|b| {
            let (x, y) = grid.node(b.i, b.j);
            let (ux, uy) = grad(x, y);
            let mut dn = Vec::with_capacity(2);
            if b.i == 0 {
                dn.push(-ux);
            }
            if b.i == m {
                dn.push(ux);
            }
            if b.j == 0 {
                dn.push(-uy);
            }
            if b.j == m {
                dn.push(uy);
            }
            let cnt = T::from_usize_lossy(dn.len());
            let avg = dn.into_iter().fold(Complex::new(T::zero(), T::zero()), |a, v| a + v) / cnt;
            avg - Complex::new(T::zero(), k) * u(x, y)
        })
        .collect()
}

/// Pull `u` on ∂Ω and the one-sided `∂_z u` on the top edge out of each
/// wavefield, then multiply every sample by `1 + δ(2r₁ - 1) + iδ(2r₂ - 1)`.
///
/// Draws come from ChaCha8 seeded with `seed`: per wavenumber, first the
/// Dirichlet samples in boundary order, then the Neumann samples left to right.
pub fn extract_traces<T: Real>(
    fields: &[ComplexField<T>],
    k_values: &[T],
    delta: T,
    seed: u64,
) -> Result<BoundaryTraces<T>> {
    if !(delta >= T::zero() && delta < T::one()) {
        return Err(Error::InvalidArgument(format!("noise level must lie in [0, 1), got {delta}")));
    }
    if fields.len() != k_values.len() {
        return Err(Error::Dimension(format!(
            "{} wavefields for {} wavenumbers",
            fields.len(),
            k_values.len()
        )));
    }
    let grid = match fields.first() {
        Some(f) => f.grid,
        None => return Err(Error::InvalidArgument("no wavefields".into())),
    };
    if fields.iter().any(|f| f.grid != grid) {
        return Err(Error::Dimension("wavefields on different grids".into()));
    }
    let m = grid.n_cells;
    let h = grid.spacing();
    let nodes = grid.boundary_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = delta > T::zero();
    let mut perturb = |z: Complex<T>| -> Complex<T> {
        if !noisy {
            return z;
        }
        let r1 = T::lit(rng.random::<f64>());
        let r2 = T::lit(rng.random::<f64>());
        let two = T::lit(2.0);
        z * Complex::new(T::one() + delta * (two * r1 - T::one()), delta * (two * r2 - T::one()))
    };
    let mut dirichlet = Vec::with_capacity(fields.len());
    let mut neumann = Vec::with_capacity(fields.len());
    for u in fields {
        dirichlet.push(nodes.iter().map(|b| perturb(u.at(b.i, b.j))).collect());
        neumann.push((0..=m).map(|i| perturb((u.at(i, m) - u.at(i, m - 1)) / h)).collect());
    }
    Ok(BoundaryTraces {
        grid,
        k_values: k_values.to_vec(),
        dirichlet,
        neumann,
        noise_level: delta,
        rng_seed: seed,
    })
}
