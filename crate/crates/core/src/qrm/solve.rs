use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat, Side};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qrm::system::{Mode, QrmSystem};
use crate::scalar::{dot, norm, Real};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Sparse Cholesky of the assembled normal matrix.
    #[default]
    Direct,
    /// Matrix-free conjugate gradients.
    Cg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: SolverKind,
    pub mode: Mode,
    pub epsilon: f64,
    pub unknowns: usize,
    pub iterations: usize,
    /// `|A v - b| / |b|` measured with the matrix-free operator.
    pub relative_residual: f64,
}

/// Default CG iteration cap: `20 sqrt(n)`.
pub fn default_max_iter(n_unknowns: usize) -> usize {
    (20.0 * (n_unknowns as f64).sqrt()).ceil() as usize
}

fn relative_residual<T: Real>(sys: &QrmSystem<T>, v: &[Complex<T>], b: &[Complex<T>]) -> T {
    let av = sys.apply_normal(v);
    let r: Vec<Complex<T>> = b.iter().zip(&av).map(|(x, y)| x - y).collect();
    let nb = norm(b);
    if nb == T::zero() {
        norm(&r)
    } else {
        norm(&r) / nb
    }
}

/// Conjugate gradients on `(MᵀM + ε I) v = Mᵀ [0; F̃; G̃]`.
pub fn solve_normal<T: Real>(
    sys: &QrmSystem<T>,
    tol: T,
    max_iter: usize,
    initial: Option<&[Complex<T>]>,
) -> Result<(Vec<Complex<T>>, SolveReport)> {
    if !(tol > T::zero() && tol < T::one()) {
        return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let n = sys.n_unknowns();
    let zero = Complex::new(T::zero(), T::zero());
    let b = sys.normal_rhs();
    let bnorm = norm(&b);
    let report = |iterations: usize, res: T| SolveReport {
        solver: SolverKind::Cg,
        mode: sys.mode,
        epsilon: sys.epsilon.to_f64_lossy(),
        unknowns: n,
        iterations,
        relative_residual: res.to_f64_lossy(),
    };
    if bnorm == T::zero() {
        return Ok((vec![zero; n], report(0, T::zero())));
    }
    let mut x = match initial {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => {
            return Err(Error::Dimension(format!("initial guess has {} entries, expected {n}", x0.len())))
        }
        None => vec![zero; n],
    };
    let ax = sys.apply_normal(&x);
    let mut r: Vec<Complex<T>> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r).re;
    let target = tol * bnorm;
    let mut it = 0;
    while rr.sqrt() > target {
        if it >= max_iter {
            let res = relative_residual(sys, &x, &b);
            return Err(Error::NotConverged { iterations: it, residual: res.to_f64_lossy() });
        }
        let ap = sys.apply_normal(&p);
        let alpha = rr / dot(&p, &ap).re;
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += *pi * alpha;
            *ri -= *api * alpha;
        }
        let rr_new = dot(&r, &r).re;
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = *ri + *pi * beta;
        }
        rr = rr_new;
        it += 1;
        // Recursive residuals drift; re-anchor occasionally.
        if it % 500 == 0 {
            let ax = sys.apply_normal(&x);
            r = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            rr = dot(&r, &r).re;
        }
    }
    let res = relative_residual(sys, &x, &b);
    Ok((x, report(it, res)))
}

/// Sparse Cholesky of `MᵀM + ε I`. The matrix is real, so the real and
/// imaginary parts of the data are solved as two right-hand sides.
pub fn solve_direct(sys: &QrmSystem<f64>) -> Result<(Vec<c64>, SolveReport)> {
    let n = sys.n_unknowns();
    let rows = sys.layout().total();
    let fail = |e: &dyn std::fmt::Debug| Error::Factorization(format!("{e:?}"));

    // Mᵀ stored column-major is M row-major.
    let mt_entries: Vec<Triplet<usize, usize, f64>> =
        sys.entries().into_iter().map(|(r, c, v)| Triplet::new(c, r, v)).collect();
    let mt = SparseColMat::<usize, f64>::try_new_from_triplets(n, rows, &mt_entries).map_err(|e| fail(&e))?;
    let m = mt.as_ref().transpose().to_col_major().map_err(|e| fail(&e))?;
    let mtm = faer::sparse::linalg::matmul::sparse_sparse_matmul(mt.as_ref(), m.as_ref(), 1.0, faer::Par::Seq)
        .map_err(|e| fail(&e))?;

    let mut lower: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(mtm.compute_nnz() / 2 + n);
    let a = mtm.as_ref();
    for col in 0..n {
        for (row, &v) in a.row_idx_of_col(col).zip(a.val_of_col(col)) {
            if row >= col {
                lower.push(Triplet::new(row, col, v));
            }
        }
        lower.push(Triplet::new(col, col, sys.epsilon));
    }
    drop(mtm);
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &lower).map_err(|e| fail(&e))?;
    drop(lower);
    let llt = a.sp_cholesky(Side::Lower).map_err(|e| fail(&e))?;

    let b = sys.normal_rhs();
    let mut rhs = Mat::<f64>::from_fn(n, 2, |i, j| if j == 0 { b[i].re } else { b[i].im });
    llt.solve_in_place(rhs.as_mut());
    let v: Vec<c64> = (0..n).map(|i| c64::new(rhs[(i, 0)], rhs[(i, 1)])).collect();
    let res = relative_residual(sys, &v, &b);
    Ok((
        v,
        SolveReport {
            solver: SolverKind::Direct,
            mode: sys.mode,
            epsilon: sys.epsilon,
            unknowns: n,
            iterations: 1,
            relative_residual: res,
        },
    ))
}

/// Dispatch on [`SolverKind`].
pub fn solve(sys: &QrmSystem<f64>, kind: SolverKind, tol: f64, max_iter: usize) -> Result<(Vec<c64>, SolveReport)> {
    match kind {
        SolverKind::Direct => solve_direct(sys),
        SolverKind::Cg => solve_normal(sys, tol, max_iter, None),
    }
}
