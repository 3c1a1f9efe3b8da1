//! The stacked least-squares operator `M = [L; D; N]` of the quasi-reversibility
//! functional and its regularized normal form `A = MᵀM + ε I`.
//!
//! Rows of `M`, in order:
//!
//! * residual rows, one per interior node and per `m`:
//!   `sum_r d_mr Δ_h v_r + n² s_mr v_r`;
//! * Dirichlet rows, one per boundary node (in [`GridSpec::boundary_nodes`]
//!   order) and per `m`: `v_m`;
//! * Neumann rows (Cauchy mode only), one per top-edge node and per `m`:
//!   `(v_m(i, M) - v_m(i, M-1)) / h`.
//!
//! All coefficients are real, so `Mᴴ = Mᵀ` and `A` is real symmetric positive
//! definite; only the data are complex.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::pipeline::FourierBoundaryData;
use crate::qrm::lineup::LineupIndexer;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Dirichlet data on ∂Ω plus Neumann data on the top edge.
    Cauchy,
    /// Dirichlet data only.
    Dirichlet,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Cauchy => "cauchy",
            Mode::Dirichlet => "dirichlet",
        })
    }
}

/// Block row counts of `M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowLayout {
    pub residual: usize,
    pub dirichlet: usize,
    pub neumann: usize,
}

impl RowLayout {
    pub fn total(&self) -> usize {
        self.residual + self.dirichlet + self.neumann
    }
}

#[derive(Clone, Debug)]
pub struct QrmSystem<T> {
    pub grid: GridSpec<T>,
    pub n_terms: usize,
    pub mode: Mode,
    pub epsilon: T,
    n2: Vec<T>,
    /// Row-major `N x N`.
    d: Vec<T>,
    s: Vec<T>,
    /// Stacked data `[0; F̃; G̃]`, one entry per row of `M`.
    data: Vec<Complex<T>>,
    interior: Vec<usize>,
    /// Residual-row slot of each node, `usize::MAX` on the ring.
    interior_slot: Vec<usize>,
    boundary: Vec<usize>,
}

impl<T: Real> QrmSystem<T> {
    pub fn assemble(
        grid: GridSpec<T>,
        n2: &ScalarField<T>,
        basis: &BasisSet<T>,
        data: &FourierBoundaryData<T>,
        mode: Mode,
        epsilon: T,
    ) -> Result<Self> {
        if !(epsilon > T::zero()) {
            return Err(Error::InvalidArgument(format!("regularization weight must be positive, got {epsilon}")));
        }
        if n2.grid != grid || data.grid != grid {
            return Err(Error::Dimension("refractive index, data and grid disagree".into()));
        }
        let n = basis.n_terms;
        if data.n_terms != n {
            return Err(Error::Dimension(format!("data carry {} terms, basis has {n}", data.n_terms)));
        }
        let boundary: Vec<usize> = grid.boundary_nodes().iter().map(|b| grid.index(b.i, b.j)).collect();
        if data.f_tilde.len() != boundary.len() || data.f_tilde.iter().any(|v| v.len() != n) {
            return Err(Error::Dimension("Dirichlet data do not match the boundary".into()));
        }
        if mode == Mode::Cauchy
            && (data.g_tilde.len() != grid.side() || data.g_tilde.iter().any(|v| v.len() != n))
        {
            return Err(Error::Dimension("Neumann data do not match the top edge".into()));
        }
        let interior: Vec<usize> = grid.interior_nodes().map(|(i, j)| grid.index(i, j)).collect();
        let mut interior_slot = vec![usize::MAX; grid.n_nodes()];
        for (slot, &p) in interior.iter().enumerate() {
            interior_slot[p] = slot;
        }
        let flat = |m: &Vec<Vec<T>>| m.iter().flatten().copied().collect::<Vec<T>>();

        let zero = Complex::new(T::zero(), T::zero());
        let mut stacked = vec![zero; interior.len() * n];
        stacked.extend(data.f_tilde.iter().flatten().copied());
        if mode == Mode::Cauchy {
            stacked.extend(data.g_tilde.iter().flatten().copied());
        }
        Ok(Self {
            grid,
            n_terms: n,
            mode,
            epsilon,
            n2: n2.values.clone(),
            d: flat(&basis.d_matrix),
            s: flat(&basis.s_matrix),
            data: stacked,
            interior,
            interior_slot,
            boundary,
        })
    }

    pub fn layout(&self) -> RowLayout {
        let n = self.n_terms;
        RowLayout {
            residual: self.interior.len() * n,
            dirichlet: self.boundary.len() * n,
            neumann: if self.mode == Mode::Cauchy { self.grid.side() * n } else { 0 },
        }
    }

    pub fn indexer(&self) -> LineupIndexer {
        LineupIndexer::new(self.grid.n_cells, self.n_terms)
    }

    pub fn n_unknowns(&self) -> usize {
        self.grid.n_nodes() * self.n_terms
    }

    /// `[0; F̃; G̃]`.
    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    fn inv_h2(&self) -> T {
        let h = self.grid.spacing();
        T::one() / (h * h)
    }

    /// `M v`.
    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.n_unknowns(), "line-up vector length");
        let n = self.n_terms;
        let side = self.grid.side();
        let m_x = self.grid.n_cells;
        let inv_h = T::one() / self.grid.spacing();
        let inv_h2 = self.inv_h2();
        let four = T::lit(4.0);
        let layout = self.layout();
        let zero = Complex::new(T::zero(), T::zero());
        let mut out = vec![zero; layout.total()];
        let (res, rest) = out.split_at_mut(layout.residual);
        let (dir, neu) = rest.split_at_mut(layout.dirichlet);

        res.par_chunks_mut(n).zip(self.interior.par_iter()).for_each_init(
            || (vec![zero; n], vec![zero; n]),
            |(lap, val), (row, &p)| {
                for r in 0..n {
                    let c = v[p * n + r];
                    let nb = v[(p - side) * n + r] + v[(p + side) * n + r] + v[(p - 1) * n + r] + v[(p + 1) * n + r];
                    lap[r] = (nb - c * four) * inv_h2;
                    val[r] = c * self.n2[p];
                }
                for (m, y) in row.iter_mut().enumerate() {
                    let mut acc = zero;
                    for r in 0..n {
                        acc += lap[r] * self.d[m * n + r] + val[r] * self.s[m * n + r];
                    }
                    *y = acc;
                }
            },
        );
        for (b, &p) in self.boundary.iter().enumerate() {
            dir[b * n..(b + 1) * n].copy_from_slice(&v[p * n..(p + 1) * n]);
        }
        if self.mode == Mode::Cauchy {
            for i in 0..=m_x {
                let top = self.grid.index(i, m_x);
                let below = self.grid.index(i, m_x - 1);
                for m in 0..n {
                    neu[i * n + m] = (v[top * n + m] - v[below * n + m]) * inv_h;
                }
            }
        }
        out
    }

    /// `Mᵀ w` (equal to `Mᴴ w`, the coefficients being real).
    pub fn apply_adjoint(&self, w: &[Complex<T>]) -> Vec<Complex<T>> {
        let layout = self.layout();
        assert_eq!(w.len(), layout.total(), "row vector length");
        let n = self.n_terms;
        let side = self.grid.side();
        let m_x = self.grid.n_cells;
        let inv_h = T::one() / self.grid.spacing();
        let inv_h2 = self.inv_h2();
        let four = T::lit(4.0);
        let zero = Complex::new(T::zero(), T::zero());
        let (res, rest) = w.split_at(layout.residual);
        let (dir, neu) = rest.split_at(layout.dirichlet);

        // Per interior node: z_r = sum_m d_mr y_m / h², q_r = n² sum_m s_mr y_m.
        let mut z = vec![zero; res.len()];
        let mut q = vec![zero; res.len()];
        z.par_chunks_mut(n)
            .zip(q.par_chunks_mut(n))
            .zip(res.par_chunks(n))
            .zip(self.interior.par_iter())
            .for_each(|(((zc, qc), y), &p)| {
                for r in 0..n {
                    let (mut a, mut b) = (zero, zero);
                    for m in 0..n {
                        a += y[m] * self.d[m * n + r];
                        b += y[m] * self.s[m * n + r];
                    }
                    zc[r] = a * inv_h2;
                    qc[r] = b * self.n2[p];
                }
            });

        let mut out = vec![zero; self.n_unknowns()];
        out.par_chunks_mut(n).enumerate().for_each(|(p, o)| {
            let (i, j) = (p / side, p % side);
            let own = self.interior_slot[p];
            if own != usize::MAX {
                for r in 0..n {
                    o[r] += q[own * n + r] - z[own * n + r] * four;
                }
            }
            let mut nbr = |cond: bool, pp: usize| {
                if cond {
                    let slot = self.interior_slot[pp];
                    if slot != usize::MAX {
                        for r in 0..n {
                            o[r] += z[slot * n + r];
                        }
                    }
                }
            };
            nbr(i > 0, p.wrapping_sub(side));
            nbr(i < m_x, p + side);
            nbr(j > 0, p.wrapping_sub(1));
            nbr(j < m_x, p + 1);
        });
        for (b, &p) in self.boundary.iter().enumerate() {
            for m in 0..n {
                out[p * n + m] += dir[b * n + m];
            }
        }
        if self.mode == Mode::Cauchy {
            for i in 0..=m_x {
                let top = self.grid.index(i, m_x);
                let below = self.grid.index(i, m_x - 1);
                for m in 0..n {
                    let g = neu[i * n + m] * inv_h;
                    out[top * n + m] += g;
                    out[below * n + m] -= g;
                }
            }
        }
        out
    }

    /// `A v = Mᵀ M v + ε v`.
    pub fn apply_normal(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = self.apply_adjoint(&self.apply(v));
        for (o, x) in out.iter_mut().zip(v) {
            *o += *x * self.epsilon;
        }
        out
    }

    /// Right-hand side `Mᵀ [0; F̃; G̃]`.
    pub fn normal_rhs(&self) -> Vec<Complex<T>> {
        self.apply_adjoint(&self.data)
    }

    /// Explicit nonzeros `(row, col, value)` of `M`.
    pub fn entries(&self) -> Vec<(usize, usize, T)> {
        let n = self.n_terms;
        let side = self.grid.side();
        let m_x = self.grid.n_cells;
        let inv_h = T::one() / self.grid.spacing();
        let inv_h2 = self.inv_h2();
        let layout = self.layout();
        let mut out = Vec::with_capacity(layout.residual * 5 * n + layout.dirichlet + 2 * layout.neumann);
        for (slot, &p) in self.interior.iter().enumerate() {
            for m in 0..n {
                let row = slot * n + m;
                for r in 0..n {
                    let d = self.d[m * n + r];
                    let centre = -T::lit(4.0) * d * inv_h2 + self.n2[p] * self.s[m * n + r];
                    out.push((row, p * n + r, centre));
                    for pp in [p - side, p + side, p - 1, p + 1] {
                        out.push((row, pp * n + r, d * inv_h2));
                    }
                }
            }
        }
        let base = layout.residual;
        for (b, &p) in self.boundary.iter().enumerate() {
            for m in 0..n {
                out.push((base + b * n + m, p * n + m, T::one()));
            }
        }
        if self.mode == Mode::Cauchy {
            let base = layout.residual + layout.dirichlet;
            for i in 0..=m_x {
                let top = self.grid.index(i, m_x);
                let below = self.grid.index(i, m_x - 1);
                for m in 0..n {
                    out.push((base + i * n + m, top * n + m, inv_h));
                    out.push((base + i * n + m, below * n + m, -inv_h));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{dot, norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C64 = Complex<f64>;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
        (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    fn small_system(m_x: usize, n_terms: usize, mode: Mode, rng: &mut ChaCha8Rng) -> QrmSystem<f64> {
        let grid = GridSpec::new(2.0, m_x).unwrap();
        let basis = BasisSet::build(n_terms, 1.5, 4.5).unwrap();
        let n2 = ScalarField::from_fn(grid, |x: f64, y: f64| 1.0 + 0.1 * (3.0 * (x * x + y * y)).sin());
        let nb = grid.boundary_nodes().len();
        let data = FourierBoundaryData {
            grid,
            n_terms,
            f_tilde: (0..nb).map(|_| random_vec(rng, n_terms)).collect(),
            g_tilde: (0..grid.side()).map(|_| random_vec(rng, n_terms)).collect(),
        };
        QrmSystem::assemble(grid, &n2, &basis, &data, mode, 1e-3).unwrap()
    }

    #[test]
    fn row_counts_on_the_smallest_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sys = small_system(2, 1, Mode::Cauchy, &mut rng);
        assert_eq!(sys.n_unknowns(), 9);
        assert_eq!(sys.layout(), RowLayout { residual: 1, dirichlet: 8, neumann: 3 });
        let sys = small_system(2, 1, Mode::Dirichlet, &mut rng);
        assert_eq!(sys.layout().neumann, 0);
    }

    #[test]
    fn neumann_rows_vanish_on_vertically_constant_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sys = small_system(6, 3, Mode::Cauchy, &mut rng);
        let ix = sys.indexer();
        let mut v = vec![C64::new(0.0, 0.0); sys.n_unknowns()];
        for i in 0..=6 {
            for j in 0..=6 {
                for m in 0..3 {
                    v[ix.index(i, j, m)] = C64::new(i as f64 + m as f64, -(i as f64));
                }
            }
        }
        let w = sys.apply(&v);
        let l = sys.layout();
        assert!(w[l.residual + l.dirichlet..].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn residual_rows_have_bounded_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sys = small_system(6, 4, Mode::Cauchy, &mut rng);
        let mut per_row = vec![0usize; sys.layout().total()];
        for (r, _, _) in sys.entries() {
            per_row[r] += 1;
        }
        assert!(per_row[..sys.layout().residual].iter().all(|&c| c <= 5 * 4));
    }

    #[test]
    fn explicit_entries_match_the_stencil() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for mode in [Mode::Cauchy, Mode::Dirichlet] {
            let sys = small_system(6, 3, mode, &mut rng);
            let v = random_vec(&mut rng, sys.n_unknowns());
            let mut w = vec![C64::new(0.0, 0.0); sys.layout().total()];
            for (r, c, a) in sys.entries() {
                w[r] += v[c] * a;
            }
            let fast = sys.apply(&v);
            let scale = norm(&w);
            for (a, b) in w.iter().zip(&fast) {
                assert!((a - b).norm() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn adjoint_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for mode in [Mode::Cauchy, Mode::Dirichlet] {
            let sys = small_system(8, 3, mode, &mut rng);
            for _ in 0..5 {
                let v = random_vec(&mut rng, sys.n_unknowns());
                let w = random_vec(&mut rng, sys.layout().total());
                let lhs = dot(&w, &sys.apply(&v));
                let rhs = dot(&sys.apply_adjoint(&w), &v);
                let scale = norm(&v) * norm(&w);
                assert!((lhs - rhs).norm() <= 1e-12 * scale, "{lhs} vs {rhs}");
            }
        }
    }

    /// Functional expanded straight from its definition.
    fn brute_force_functional(sys: &QrmSystem<f64>, basis: &BasisSet<f64>, v: &[C64]) -> f64 {
        let g = sys.grid;
        let m_x = g.n_cells;
        let h = g.spacing();
        let n = sys.n_terms;
        let ix = sys.indexer();
        let at = |i: usize, j: usize, r: usize| v[ix.index(i, j, r)];
        let n2 = |i: usize, j: usize| {
            let (x, y) = g.node(i, j);
            1.0 + 0.1 * (3.0 * (x * x + y * y)).sin()
        };
        let mut total = 0.0;
        for i in 1..m_x {
            for j in 1..m_x {
                for m in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for r in 0..n {
                        let lap = at(i - 1, j, r) + at(i + 1, j, r) + at(i, j - 1, r) + at(i, j + 1, r) - at(i, j, r) * 4.0;
                        acc += lap * basis.d_matrix[m][r] / (h * h) + at(i, j, r) * n2(i, j) * basis.s_matrix[m][r];
                    }
                    total += acc.norm_sqr();
                }
            }
        }
        for i in 0..=m_x {
            for j in 0..=m_x {
                if g.is_boundary(i, j) {
                    for m in 0..n {
                        total += at(i, j, m).norm_sqr();
                    }
                }
            }
        }
        if sys.mode == Mode::Cauchy {
            for i in 0..=m_x {
                for m in 0..n {
                    total += ((at(i, m_x, m) - at(i, m_x - 1, m)) / h).norm_sqr();
                }
            }
        }
        total + sys.epsilon * v.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    #[test]
    fn quadratic_form_matches_functional_on_three_by_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for mode in [Mode::Cauchy, Mode::Dirichlet] {
            let sys = small_system(2, 2, mode, &mut rng);
            let basis = BasisSet::build(2, 1.5, 4.5).unwrap();
            let v = random_vec(&mut rng, sys.n_unknowns());
            let form = dot(&v, &sys.apply_normal(&v));
            let brute = brute_force_functional(&sys, &basis, &v);
            assert!((form.re - brute).abs() <= 1e-12 * brute);
            assert!(form.im.abs() <= 1e-12 * brute);
        }
    }

    #[test]
    fn normal_operator_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sys = small_system(8, 4, Mode::Cauchy, &mut rng);
        for _ in 0..10 {
            let v = random_vec(&mut rng, sys.n_unknowns());
            let form = dot(&v, &sys.apply_normal(&v));
            let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            assert!(form.re >= sys.epsilon * nv);
            assert!(form.im.abs() <= 1e-12 * form.re.max(nv));
        }
    }

    #[test]
    fn assemble_rejects_bad_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sys = small_system(4, 2, Mode::Cauchy, &mut rng);
        let basis = BasisSet::build(2, 1.5, 4.5).unwrap();
        let n2 = ScalarField::filled(sys.grid, 1.0);
        let data = FourierBoundaryData {
            grid: sys.grid,
            n_terms: 2,
            f_tilde: vec![vec![C64::new(0.0, 0.0); 2]; 16],
            g_tilde: vec![],
        };
        assert!(QrmSystem::assemble(sys.grid, &n2, &basis, &data, Mode::Dirichlet, 0.0).is_err());
        assert!(QrmSystem::assemble(sys.grid, &n2, &basis, &data, Mode::Cauchy, 1e-5).is_err());
        assert!(QrmSystem::assemble(sys.grid, &n2, &basis, &data, Mode::Dirichlet, 1e-5).is_ok());
        let basis3 = BasisSet::build(3, 1.5, 4.5).unwrap();
        assert!(QrmSystem::assemble(sys.grid, &n2, &basis3, &data, Mode::Dirichlet, 1e-5).is_err());
    }
}
