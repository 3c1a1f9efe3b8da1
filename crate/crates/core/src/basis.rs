//! Orthonormal exponential-polynomial basis of `L^2(k_lo, k_hi)`.
//!
//! The family `t^j e^t`, `t = k - k0`, `k0 = (k_lo + k_hi) / 2`, is
//! orthonormalized by modified Gram-Schmidt with one reorthogonalization
//! pass. Every inner product reduces to moments `int t^n e^{2t} dt`, which
//! are computed in closed form, so no quadrature enters the construction.
//!
//! Two coupling matrices come out of the construction:
//!
//! * `d[m][r] = int Psi_m Psi_r' dk`, upper triangular with unit diagonal;
//! * `s[m][r] = int (k^2 Psi_r' + 2k Psi_r) Psi_m dk`.

use crate::error::{Error, Result};
use crate::scalar::{Real, TwoFold};

/// `p(t) e^t` with `p(t) = sum coeffs[i] t^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpPoly<T> {
    pub coeffs: Vec<T>,
}

impl<T: Real> ExpPoly<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Polynomial factor only.
    pub fn poly(&self, t: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * t + c)
    }

    pub fn eval(&self, t: T) -> T {
        self.poly(t) * t.exp()
    }

    /// `(p e^t)' = (p' + p) e^t`.
    pub fn derivative(&self) -> ExpPoly<T> {
        let mut out = self.coeffs.clone();
        for (i, &c) in self.coeffs.iter().enumerate().skip(1) {
            out[i - 1] += T::from_usize_lossy(i) * c;
        }
        ExpPoly::new(out)
    }
}

/// `int_a^b t^n e^{2t} dt`.
///
/// Satisfies `I_n = [t^n e^{2t} / 2]_a^b - (n/2) I_{n-1}` with
/// `I_0 = (e^{2b} - e^{2a}) / 2`, but is evaluated through the power series of
/// `e^{2t}` in two-word arithmetic: running the recurrence forward loses about
/// one digit per step once `n` exceeds `2 max(|a|, |b|)`.
pub fn exp_moment<T: Real>(n: usize, a: T, b: T) -> T {
    exp_moment_twofold(n, a, b).value()
}

/// The recurrence as written, kept for cross-checks on small `n`.
pub fn exp_moment_recurrence<T: Real>(n: usize, a: T, b: T) -> T {
    let two = T::lit(2.0);
    let (ea, eb) = ((two * a).exp(), (two * b).exp());
    let mut acc = (eb - ea) / two;
    for j in 1..=n {
        let jj = j as i32;
        acc = (b.powi(jj) * eb - a.powi(jj) * ea) / two - T::from_usize_lossy(j) / two * acc;
    }
    acc
}

fn exp_moment_twofold<T: Real>(n: usize, a: T, b: T) -> TwoFold<T> {
    // sum_k 2^k / k! * (b^{p} - a^{p}) / p,  p = n + k + 1
    let (ta, tb) = (TwoFold::new(a), TwoFold::new(b));
    let mut pa = TwoFold::new(T::one());
    let mut pb = TwoFold::new(T::one());
    for _ in 0..=n {
        pa = pa.mul(ta);
        pb = pb.mul(tb);
    }
    let mut coef = TwoFold::new(T::one());
    let mut sum = TwoFold::zero();
    let span = a.abs().max(b.abs());
    let reach = T::lit(2.0) * span;
    let tiny = T::epsilon() * T::epsilon();
    // Bound on the term magnitude; individual terms vanish on symmetric intervals.
    let mut bound = span.powi(n as i32 + 1) * T::lit(2.0);
    for k in 0..2000usize {
        let p = T::from_usize_lossy(n + k + 1);
        let term = coef.mul(pb.sub(pa)).div(TwoFold::new(p));
        sum = sum.add(term);
        if T::from_usize_lossy(k) > reach && bound <= tiny * sum.hi.abs() {
            break;
        }
        coef = coef.scale(T::lit(2.0)).div(TwoFold::new(T::from_usize_lossy(k + 1)));
        bound = bound * T::lit(2.0) * span / T::from_usize_lossy(k + 1);
        pa = pa.mul(ta);
        pb = pb.mul(tb);
    }
    sum
}

type Poly<T> = Vec<TwoFold<T>>;

fn lift<T: Real>(p: &[T]) -> Poly<T> {
    p.iter().map(|&c| TwoFold::new(c)).collect()
}

fn poly_mul<T: Real>(p: &[TwoFold<T>], q: &[TwoFold<T>]) -> Poly<T> {
    let mut out = vec![TwoFold::zero(); p.len() + q.len() - 1];
    for (i, &a) in p.iter().enumerate() {
        for (j, &b) in q.iter().enumerate() {
            out[i + j] = out[i + j].add(a.mul(b));
        }
    }
    out
}

fn poly_add<T: Real>(p: &[TwoFold<T>], q: &[TwoFold<T>]) -> Poly<T> {
    let mut out = vec![TwoFold::zero(); p.len().max(q.len())];
    for (i, &a) in p.iter().enumerate() {
        out[i] = out[i].add(a);
    }
    for (i, &b) in q.iter().enumerate() {
        out[i] = out[i].add(b);
    }
    out
}

fn poly_deriv_plus<T: Real>(p: &[TwoFold<T>]) -> Poly<T> {
    let mut out = p.to_vec();
    for i in 1..p.len() {
        out[i - 1] = out[i - 1].add(p[i].scale(T::from_usize_lossy(i)));
    }
    out
}

/// Moment table `mu[n] = int_a^b t^n e^{2t} dt` for the shifted interval.
#[derive(Clone, Debug)]
struct Moments<T> {
    mu: Vec<TwoFold<T>>,
}

impl<T: Real> Moments<T> {
    fn new(max_degree: usize, a: T, b: T) -> Self {
        Self { mu: (0..=max_degree).map(|n| exp_moment_twofold(n, a, b)).collect() }
    }

    /// `int p(t) q(t) e^{2t} dt`.
    fn inner(&self, p: &[TwoFold<T>], q: &[TwoFold<T>]) -> TwoFold<T> {
        let mut acc = TwoFold::zero();
        for (i, &x) in p.iter().enumerate() {
            for (j, &y) in q.iter().enumerate() {
                acc = acc.add(x.mul(y).mul(self.mu[i + j]));
            }
        }
        acc
    }
}

/// First `n_terms` orthonormal functions on `[k_lo, k_hi]` plus `D_N`, `S_N`.
#[derive(Clone, Debug)]
pub struct BasisSet<T> {
    pub n_terms: usize,
    pub k_lo: T,
    pub k_hi: T,
    pub k0: T,
    pub psi: Vec<ExpPoly<T>>,
    /// Row `m`, column `r`.
    pub d_matrix: Vec<Vec<T>>,
    pub s_matrix: Vec<Vec<T>>,
    moments: Moments<T>,
}

impl<T: Real> BasisSet<T> {
    pub fn build(n_terms: usize, k_lo: T, k_hi: T) -> Result<Self> {
        if n_terms == 0 {
            return Err(Error::InvalidArgument("basis needs at least one term".into()));
        }
        if !(k_lo > T::zero() && k_lo < k_hi) || !k_hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need 0 < k_lo < k_hi, got [{k_lo}, {k_hi}]"
            )));
        }
        let k0 = (k_lo + k_hi) / T::lit(2.0);
        let (a, b) = (k_lo - k0, k_hi - k0);
        // S_N integrands reach degree 2(N-1) + 2.
        let moments = Moments::new(2 * n_terms + 1, a, b);

        let mut basis: Vec<Poly<T>> = Vec::with_capacity(n_terms);
        for m in 0..n_terms {
            let mut v = vec![TwoFold::zero(); n_terms];
            v[m] = TwoFold::new(T::one());
            for _pass in 0..2 {
                for q in &basis {
                    let c = moments.inner(q, &v);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi = vi.sub(c.mul(*qi));
                    }
                }
            }
            let norm = moments.inner(&v, &v).sqrt();
            let nv = norm.value();
            if !(nv >= T::lit(1e-12)) {
                return Err(Error::DependentBasis { index: m, norm: nv.to_f64_lossy() });
            }
            for vi in v.iter_mut() {
                *vi = vi.div(norm);
            }
            basis.push(v);
        }

        let psi: Vec<ExpPoly<T>> = basis
            .iter()
            .enumerate()
            .map(|(m, p)| ExpPoly::new(p[..=m].iter().map(|c| c.value()).collect()))
            .collect();
        // Stored (rounded) coefficients are what the matrices describe.
        let stored: Vec<Poly<T>> = psi.iter().map(|p| lift(&p.coeffs)).collect();

        let shift = vec![TwoFold::new(k0), TwoFold::new(T::one())]; // t + k0
        let shift_sq = poly_mul(&shift, &shift);
        let mut d_matrix = vec![vec![T::zero(); n_terms]; n_terms];
        let mut s_matrix = vec![vec![T::zero(); n_terms]; n_terms];
        for r in 0..n_terms {
            let dr = poly_deriv_plus(&stored[r]);
            let two_k_psi = poly_mul(&shift, &stored[r]);
            let s_integrand =
                poly_add(&poly_mul(&shift_sq, &dr), &poly_add(&two_k_psi, &two_k_psi));
            for m in 0..n_terms {
                d_matrix[m][r] = moments.inner(&stored[m], &dr).value();
                s_matrix[m][r] = moments.inner(&stored[m], &s_integrand).value();
            }
        }

        Ok(Self { n_terms, k_lo, k_hi, k0, psi, d_matrix, s_matrix, moments })
    }

    /// `Psi_{m+1}(k)`.
    pub fn eval(&self, m: usize, k: T) -> Result<T> {
        self.term(m).map(|p| p.eval(k - self.k0))
    }

    /// `Psi_{m+1}'(k)`.
    pub fn eval_deriv(&self, m: usize, k: T) -> Result<T> {
        self.term(m).map(|p| p.derivative().eval(k - self.k0))
    }

    fn term(&self, m: usize) -> Result<&ExpPoly<T>> {
        self.psi.get(m).ok_or(Error::OutOfRange { index: m, len: self.n_terms })
    }

    /// `int Psi_i Psi_j dk` from the stored coefficients, evaluated with exact moments.
    pub fn inner(&self, i: usize, j: usize) -> Result<T> {
        let (p, q) = (self.term(i)?, self.term(j)?);
        Ok(self.moments.inner(&lift(&p.coeffs), &lift(&q.coeffs)).value())
    }

    pub fn gram_matrix(&self) -> Vec<Vec<T>> {
        (0..self.n_terms)
            .map(|i| (0..self.n_terms).map(|j| self.inner(i, j).expect("in range")).collect())
            .collect()
    }

    /// Table `psi[m][i] = Psi_{m+1}(k_i)`.
    pub fn sample(&self, ks: &[T]) -> Vec<Vec<T>> {
        self.psi
            .iter()
            .map(|p| ks.iter().map(|&k| p.eval(k - self.k0)).collect())
            .collect()
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant<T: Real>(m: &[Vec<T>]) -> T {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut det = T::one();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| a[x][c].abs().partial_cmp(&a[y][c].abs()).unwrap())
            .unwrap();
        if a[p][c] == T::zero() {
            return T::zero();
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                let v = a[c][k];
                a[r][k] -= f * v;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Gauss-Legendre, 200 panels of 5 nodes.
    fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let x = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        let w = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let panels = 200;
        let h = (b - a) / panels as f64;
        let mut s = 0.0;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            let mut ps = 0.0;
            for q in 0..5 {
                ps += w[q] * f(mid + 0.5 * h * x[q]);
            }
            s += ps * 0.5 * h;
        }
        s
    }

    #[test]
    fn moments_match_closed_forms() {
        let s3 = 3.0f64.sinh();
        assert!((exp_moment(0, -1.5, 1.5) - s3).abs() < 1e-13 * s3);
        let e3 = 3.0f64.exp();
        let i1 = 0.5 * e3 + 1.0 / e3;
        assert!((exp_moment(1, -1.5, 1.5) - i1).abs() < 1e-13 * i1);
        let i2 = e3 * 0.625 - (-3.0f64).exp() * 2.125;
        assert!((exp_moment(2, -1.5, 1.5) - i2).abs() < 1e-13 * i2);
    }

    #[test]
    fn moments_match_quadrature_to_1e12() {
        for n in 0..=18 {
            let exact = exp_moment(n, -1.5, 1.5);
            let q = quad(|t| t.powi(n as i32) * (2.0 * t).exp(), -1.5, 1.5);
            assert!((exact - q).abs() <= 1e-12 * q.abs(), "n = {n}: {exact} vs {q}");
        }
    }

    #[test]
    fn recurrence_holds_on_low_degrees() {
        for n in 0..8 {
            let r = exp_moment_recurrence(n, -1.5f64, 1.5);
            let s = exp_moment(n, -1.5f64, 1.5);
            assert!((r - s).abs() < 1e-13 * s.abs());
        }
    }

    #[test]
    fn single_term_basis() {
        let b = BasisSet::build(1, 1.5f64, 4.5).unwrap();
        let c = 1.0 / 3.0f64.sinh().sqrt();
        assert!((b.psi[0].coeffs[0] - c).abs() < 1e-15);
        assert!((b.d_matrix[0][0] - 1.0).abs() < 1e-14);
        assert!((b.eval(0, 3.0).unwrap() - c).abs() < 1e-15);
        for k in [1.5, 2.2, 3.9, 4.5] {
            assert!((b.eval(0, k).unwrap() - b.eval_deriv(0, k).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn s11_against_quadrature() {
        let b = BasisSet::build(1, 1.5f64, 4.5).unwrap();
        let mu: Vec<f64> = (0..3).map(|n| exp_moment(n, -1.5, 1.5)).collect();
        let closed = (mu[2] + 8.0 * mu[1] + 15.0 * mu[0]) / mu[0];
        let oracle = quad(
            |k| {
                let p = b.eval(0, k).unwrap();
                (k * k * b.eval_deriv(0, k).unwrap() + 2.0 * k * p) * p
            },
            1.5,
            4.5,
        );
        assert!((b.s_matrix[0][0] - closed).abs() < 1e-12 * closed);
        assert!((b.s_matrix[0][0] - oracle).abs() < 1e-10 * closed);
        assert!((closed - 24.302).abs() < 1e-3);
    }

    #[test]
    fn coupling_matrices_against_quadrature() {
        let b = BasisSet::build(6, 1.5f64, 4.5).unwrap();
        for m in 0..6 {
            for r in 0..6 {
                let d = quad(
                    |k| b.eval(m, k).unwrap() * b.eval_deriv(r, k).unwrap(),
                    1.5,
                    4.5,
                );
                let s = quad(
                    |k| {
                        (k * k * b.eval_deriv(r, k).unwrap() + 2.0 * k * b.eval(r, k).unwrap())
                            * b.eval(m, k).unwrap()
                    },
                    1.5,
                    4.5,
                );
                assert!((b.d_matrix[m][r] - d).abs() < 1e-9, "d[{m}][{r}]");
                assert!((b.s_matrix[m][r] - s).abs() < 1e-8, "s[{m}][{r}]");
            }
        }
    }

    #[test]
    fn orthonormal_and_triangular_at_ten_terms() {
        let b = BasisSet::build(10, 1.5f64, 4.5).unwrap();
        let g = b.gram_matrix();
        for i in 0..10 {
            for j in 0..10 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[i][j] - want).abs() <= 1e-10, "gram[{i}][{j}] = {}", g[i][j]);
                if j < i {
                    assert!(b.d_matrix[i][j].abs() <= 1e-10);
                }
            }
            assert!((b.d_matrix[i][i] - 1.0).abs() <= 1e-10);
            assert_eq!(b.psi[i].degree(), i);
        }
        assert!((determinant(&b.d_matrix) - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let b = BasisSet::build(10, 1.5f64, 4.5).unwrap();
        let h = 1e-6;
        for m in 0..10 {
            for k in [1.6, 2.0, 2.75, 3.3, 4.4] {
                let fd = (b.eval(m, k + h).unwrap() - b.eval(m, k - h).unwrap()) / (2.0 * h);
                let d = b.eval_deriv(m, k).unwrap();
                assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "m {m} k {k}");
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(BasisSet::build(0, 1.5f64, 4.5).is_err());
        assert!(BasisSet::build(3, 4.5f64, 1.5).is_err());
        let b = BasisSet::build(2, 1.5f64, 4.5).unwrap();
        assert!(matches!(b.eval(2, 3.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn dependent_family_is_reported() {
        // A very narrow band makes t^j e^t numerically collinear in double precision.
        let r = BasisSet::build(12, 3.0f64, 3.0 + 1e-3);
        assert!(matches!(r, Err(Error::DependentBasis { .. })));
    }

    #[test]
    fn single_precision_basis() {
        let b = BasisSet::build(4, 1.5f32, 4.5).unwrap();
        let g = b.gram_matrix();
        for i in 0..4 {
            assert!((g[i][i] - 1.0).abs() < 1e-4);
            assert!((b.d_matrix[i][i] - 1.0).abs() < 1e-3);
        }
    }
}
