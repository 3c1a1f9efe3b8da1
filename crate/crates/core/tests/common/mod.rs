#![allow(dead_code)]

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qrm_isource::basis::BasisSet;
use qrm_isource::grid::{ComplexField, ScalarField};
use qrm_isource::pipeline::FourierBoundaryData;
use qrm_isource::qrm::{Mode, QrmSystem};
use qrm_isource::scenario::refractive_index;
use qrm_isource::Grid;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_c64(rng: &mut ChaCha8Rng) -> c64 {
    c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<c64> {
    (0..n).map(|_| random_c64(rng)).collect()
}

/// Random boundary data of the right shape for `mode`.
pub fn random_data(grid: Grid, n_terms: usize, mode: Mode, seed: u64) -> FourierBoundaryData<f64> {
    let mut r = rng(seed);
    let f_tilde = (0..grid.boundary_nodes().len()).map(|_| random_vec(&mut r, n_terms)).collect();
    let g_tilde = match mode {
        Mode::Cauchy => (0..grid.side()).map(|_| random_vec(&mut r, n_terms)).collect(),
        Mode::Dirichlet => Vec::new(),
    };
    FourierBoundaryData { grid, n_terms, f_tilde, g_tilde }
}

pub fn system(grid: Grid, n_terms: usize, data: &FourierBoundaryData<f64>, mode: Mode, eps: f64) -> QrmSystem<f64> {
    let basis = BasisSet::build(n_terms, 1.5, 4.5).unwrap();
    let n2 = ScalarField::from_fn(grid, refractive_index);
    QrmSystem::assemble(grid, &n2, &basis, data, mode, eps).unwrap()
}

/// `M` as a dense real matrix.
pub fn dense_m(sys: &QrmSystem<f64>) -> Mat<f64> {
    let mut m = Mat::<f64>::zeros(sys.layout().total(), sys.n_unknowns());
    for (r, c, v) in sys.entries() {
        m[(r, c)] += v;
    }
    m
}

/// Dense LU solve of `(MᵀM + ε I) v = Mᵀ d`.
pub fn dense_solve(sys: &QrmSystem<f64>) -> Vec<c64> {
    let m = dense_m(sys);
    let n = sys.n_unknowns();
    let mut a = m.transpose() * &m;
    for i in 0..n {
        a[(i, i)] += sys.epsilon;
    }
    let d = sys.data();
    let rhs_re = Mat::<f64>::from_fn(d.len(), 1, |i, _| d[i].re);
    let rhs_im = Mat::<f64>::from_fn(d.len(), 1, |i, _| d[i].im);
    let lu = a.partial_piv_lu();
    let xr = lu.solve(m.transpose() * &rhs_re);
    let xi = lu.solve(m.transpose() * &rhs_im);
    (0..n).map(|i| c64::new(xr[(i, 0)], xi[(i, 0)])).collect()
}

pub fn rel_diff(a: &[c64], b: &[c64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Max-norm error of the discrete solution for the plane wave `e^{ikx}` with `n² = 1`.
pub fn plane_wave_error(m_x: usize, k: f64) -> f64 {
    use qrm_isource::forward::{impedance_data, solve_helmholtz};
    let grid = Grid::new(2.0, m_x).unwrap();
    let u = |x: f64, _y: f64| c64::new(0.0, k * x).exp();
    let grad = |x: f64, y: f64| (c64::new(0.0, k) * u(x, y), c64::new(0.0, 0.0));
    let robin = impedance_data(&grid, k, u, grad);
    let n2 = ScalarField::filled(grid, 1.0);
    let f = ScalarField::filled(grid, 0.0);
    let uh: ComplexField<f64> = solve_helmholtz(&grid, &n2, &f, c64::new(1.0, 0.0), k, Some(&robin)).unwrap();
    let exact = ComplexField::from_fn(grid, u);
    uh.values.iter().zip(&exact.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}
