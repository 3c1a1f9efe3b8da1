//! Boundary traces to Fourier coefficients in the exponential-polynomial basis.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::forward::{BoundaryTraces, FrequencySweep};
use crate::grid::{ComplexField, GridSpec};
use crate::scalar::Real;

/// Smallest `|g(k)|` accepted when dividing the traces.
pub const MIN_SOURCE_MODULUS: f64 = 1e-14;

/// Rule for the k-integrals `int v(x, k) Psi_m(k) dk` on the sampled partition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KQuadrature {
    #[default]
    Trapezoid,
    /// Composite Simpson; needs an even number of intervals.
    Simpson,
}

impl KQuadrature {
    pub fn weights<T: Real>(self, sweep: &FrequencySweep<T>) -> Result<Vec<T>> {
        let n = sweep.n_intervals;
        let h = sweep.step();
        match self {
            KQuadrature::Trapezoid => Ok((0..=n)
                .map(|i| if i == 0 || i == n { h / T::lit(2.0) } else { h })
                .collect()),
            KQuadrature::Simpson => {
                if n % 2 != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "Simpson's rule needs an even interval count, got {n}"
                    )));
                }
                let third = h / T::lit(3.0);
                Ok((0..=n)
                    .map(|i| {
                        if i == 0 || i == n {
                            third
                        } else if i % 2 == 1 {
                            T::lit(4.0) * third
                        } else {
                            T::lit(2.0) * third
                        }
                    })
                    .collect())
            }
        }
    }
}

/// `N`-vectors of Fourier coefficients of the boundary data.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierBoundaryData<T> {
    pub grid: GridSpec<T>,
    pub n_terms: usize,
    /// `f_tilde[b][m]` on `grid.boundary_nodes()[b]`.
    pub f_tilde: Vec<Vec<Complex<T>>>,
    /// `g_tilde[i][m]` on top-edge node `(i, M)`; empty when only Dirichlet data exist.
    pub g_tilde: Vec<Vec<Complex<T>>>,
}

/// Divide the traces by `g(k)`.
pub fn to_v<T: Real>(traces: &BoundaryTraces<T>, sweep: &FrequencySweep<T>) -> Result<BoundaryTraces<T>> {
    check_partition(&traces.k_values, sweep)?;
    let floor = T::lit(MIN_SOURCE_MODULUS);
    if let Some((k, g)) = sweep.k_values.iter().zip(&sweep.g_values).find(|(_, g)| !(g.norm() >= floor)) {
        return Err(Error::VanishingSource { k: k.to_f64_lossy(), modulus: g.norm().to_f64_lossy() });
    }
    let divide = |rows: &Vec<Vec<Complex<T>>>| -> Vec<Vec<Complex<T>>> {
        rows.iter()
            .zip(&sweep.g_values)
            .map(|(row, &g)| row.iter().map(|&z| z / g).collect())
            .collect()
    };
    Ok(BoundaryTraces {
        dirichlet: divide(&traces.dirichlet),
        neumann: divide(&traces.neumann),
        ..traces.clone()
    })
}

fn check_partition<T: Real>(k_values: &[T], sweep: &FrequencySweep<T>) -> Result<()> {
    if k_values.len() != sweep.len() {
        return Err(Error::Dimension(format!(
            "traces at {} wavenumbers, partition has {}",
            k_values.len(),
            sweep.len()
        )));
    }
    let tol = sweep.step() * T::lit(1e-9);
    if k_values.iter().zip(&sweep.k_values).any(|(a, b)| (*a - *b).abs() > tol) {
        return Err(Error::Dimension("traces sampled off the partition".into()));
    }
    Ok(())
}

fn check_band<T: Real>(basis: &BasisSet<T>, sweep: &FrequencySweep<T>) -> Result<()> {
    let tol = T::lit(1e-12) * sweep.k_hi;
    if (basis.k_lo - sweep.k_lo).abs() > tol || (basis.k_hi - sweep.k_hi).abs() > tol {
        return Err(Error::Dimension("basis and partition cover different bands".into()));
    }
    Ok(())
}

/// `weighted[m][i] = w_i Psi_m(k_i)`.
fn weighted_basis<T: Real>(basis: &BasisSet<T>, sweep: &FrequencySweep<T>, rule: KQuadrature) -> Result<Vec<Vec<T>>> {
    check_band(basis, sweep)?;
    let w = rule.weights(sweep)?;
    Ok(basis
        .sample(&sweep.k_values)
        .into_iter()
        .map(|row| row.iter().zip(&w).map(|(&p, &wi)| p * wi).collect())
        .collect())
}

/// Project per-k samples (`samples[ik][node]`) onto the basis: `[node][m]`.
fn project_samples<T: Real>(samples: &[Vec<Complex<T>>], weighted: &[Vec<T>]) -> Vec<Vec<Complex<T>>> {
    let n_nodes = samples.first().map_or(0, Vec::len);
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![vec![zero; weighted.len()]; n_nodes];
    for (m, wrow) in weighted.iter().enumerate() {
        for (row, &w) in samples.iter().zip(wrow) {
            for (node, &z) in row.iter().enumerate() {
                out[node][m] += z * w;
            }
        }
    }
    out
}

/// `F̃` on ∂Ω and `G̃` on the top edge.
pub fn fourier_project<T: Real>(
    v_traces: &BoundaryTraces<T>,
    basis: &BasisSet<T>,
    sweep: &FrequencySweep<T>,
    rule: KQuadrature,
) -> Result<FourierBoundaryData<T>> {
    check_partition(&v_traces.k_values, sweep)?;
    let weighted = weighted_basis(basis, sweep, rule)?;
    Ok(FourierBoundaryData {
        grid: v_traces.grid,
        n_terms: basis.n_terms,
        f_tilde: project_samples(&v_traces.dirichlet, &weighted),
        g_tilde: project_samples(&v_traces.neumann, &weighted),
    })
}

/// Coefficient fields `v_m(x)` of full wavefields: `[m]` fields.
pub fn project_fields<T: Real>(
    v_full: &[ComplexField<T>],
    basis: &BasisSet<T>,
    sweep: &FrequencySweep<T>,
    rule: KQuadrature,
) -> Result<Vec<ComplexField<T>>> {
    if v_full.len() != sweep.len() {
        return Err(Error::Dimension(format!(
            "{} fields for {} wavenumbers",
            v_full.len(),
            sweep.len()
        )));
    }
    let grid = v_full.first().ok_or_else(|| Error::InvalidArgument("no fields".into()))?.grid;
    let weighted = weighted_basis(basis, sweep, rule)?;
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![ComplexField::filled(grid, zero); basis.n_terms];
    for (m, wrow) in weighted.iter().enumerate() {
        for (field, &w) in v_full.iter().zip(wrow) {
            for (o, &z) in out[m].values.iter_mut().zip(&field.values) {
                *o += z * w;
            }
        }
    }
    Ok(out)
}

/// Relative interior L² gap between `v(., k_probe)` and its `N`-term expansion.
pub fn truncation_residual<T: Real>(
    v_full: &[ComplexField<T>],
    basis: &BasisSet<T>,
    sweep: &FrequencySweep<T>,
    rule: KQuadrature,
    k_probe: T,
) -> Result<T> {
    let ip = sweep
        .position(k_probe)
        .ok_or_else(|| Error::InvalidArgument(format!("probe k = {k_probe} is not a partition point")))?;
    let coeffs = project_fields(v_full, basis, sweep, rule)?;
    let psi: Vec<T> = (0..basis.n_terms).map(|m| basis.eval(m, k_probe)).collect::<Result<_>>()?;
    let truth = &v_full[ip];
    let grid = truth.grid;
    let (mut num, mut den) = (T::zero(), T::zero());
    for (i, j) in grid.interior_nodes() {
        let p = grid.index(i, j);
        let approx = coeffs
            .iter()
            .zip(&psi)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (c, &w)| acc + c.values[p] * w);
        num += (truth.values[p] - approx).norm_sqr();
        den += truth.values[p].norm_sqr();
    }
    if den == T::zero() {
        return Err(Error::ZeroNorm);
    }
    Ok((num / den).sqrt())
}
