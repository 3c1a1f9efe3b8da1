//! From coefficient fields back to `v(x, k)` and the source `f(x)`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, ScalarField};
use crate::scalar::Real;

/// Extreme-value comparison on interior nodes. `None` where the true source
/// has no positive (or negative) part.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub true_max: Option<f64>,
    pub true_min: Option<f64>,
    pub max_pos: Option<f64>,
    pub min_neg: Option<f64>,
    pub rel_err_pos: Option<f64>,
    pub rel_err_neg: Option<f64>,
    pub l2_rel_err: f64,
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult<T> {
    pub v_comp: ComplexField<T>,
    pub f_comp: ScalarField<T>,
    pub metrics: Metrics,
}

/// `sum_m v_m(x) Psi_m(k_probe)`.
pub fn synthesize_v<T: Real>(fields: &[ComplexField<T>], basis: &BasisSet<T>, k_probe: T) -> Result<ComplexField<T>> {
    if fields.len() != basis.n_terms {
        return Err(Error::Dimension(format!("{} fields for {} basis terms", fields.len(), basis.n_terms)));
    }
    let first = fields.first().ok_or_else(|| Error::InvalidArgument("no fields".into()))?;
    let mut out = ComplexField::filled(first.grid, Complex::new(T::zero(), T::zero()));
    for (m, field) in fields.iter().enumerate() {
        if field.grid != first.grid {
            return Err(Error::Dimension("coefficient fields on different grids".into()));
        }
        let w = basis.eval(m, k_probe)?;
        for (o, z) in out.values.iter_mut().zip(&field.values) {
            *o += *z * w;
        }
    }
    Ok(out)
}

/// `Re[Δ_h v + k² n² v]` on interior nodes; ring nodes copy their nearest
/// interior neighbour.
pub fn recover_f<T: Real>(v: &ComplexField<T>, n2: &ScalarField<T>, k_probe: T) -> Result<ScalarField<T>> {
    if !(k_probe > T::zero()) {
        return Err(Error::InvalidArgument(format!("probe wavenumber must be positive, got {k_probe}")));
    }
    if v.grid != n2.grid {
        return Err(Error::Dimension("v and n² on different grids".into()));
    }
    let grid = v.grid;
    let m = grid.n_cells;
    let h = grid.spacing();
    let k2 = k_probe * k_probe;
    let mut f = ScalarField::filled(grid, T::zero());
    for (i, j) in grid.interior_nodes() {
        let lap = (v.at(i - 1, j) + v.at(i + 1, j) + v.at(i, j - 1) + v.at(i, j + 1) - v.at(i, j) * T::lit(4.0)) / (h * h);
        f.set(i, j, (lap + v.at(i, j) * (k2 * n2.at(i, j))).re);
    }
    let clamp = |a: usize| a.clamp(1, m - 1);
    for i in 0..=m {
        for j in 0..=m {
            if grid.is_boundary(i, j) {
                let val = f.at(clamp(i), clamp(j));
                f.set(i, j, val);
            }
        }
    }
    Ok(f)
}

/// Compare maximal positive and minimal negative values on interior nodes.
pub fn extreme_value_errors<T: Real>(f_comp: &ScalarField<T>, f_true: &ScalarField<T>) -> Result<Metrics> {
    if f_comp.grid != f_true.grid {
        return Err(Error::Dimension("fields on different grids".into()));
    }
    let grid = f_comp.grid;
    let (mut cmax, mut cmin) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut tmax, mut tmin) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (i, j) in grid.interior_nodes() {
        let c = f_comp.at(i, j).to_f64_lossy();
        let t = f_true.at(i, j).to_f64_lossy();
        cmax = cmax.max(c);
        cmin = cmin.min(c);
        tmax = tmax.max(t);
        tmin = tmin.min(t);
        num += (c - t) * (c - t);
        den += t * t;
    }
    let pos = tmax > 0.0;
    let neg = tmin < 0.0;
    Ok(Metrics {
        true_max: pos.then_some(tmax),
        true_min: neg.then_some(tmin),
        max_pos: pos.then_some(cmax),
        min_neg: neg.then_some(cmin),
        rel_err_pos: pos.then(|| (cmax - tmax).abs() / tmax.abs()),
        rel_err_neg: neg.then(|| (cmin - tmin).abs() / tmin.abs()),
        l2_rel_err: if den > 0.0 { (num / den).sqrt() } else { num.sqrt() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    type C64 = Complex<f64>;

    #[test]
    fn synthesis_of_single_term() {
        let basis = BasisSet::build(1, 1.5, 4.5).unwrap();
        let grid = GridSpec::new(1.0, 4).unwrap();
        let v = synthesize_v(&[ComplexField::filled(grid, C64::new(1.0, 0.0))], &basis, 3.0).unwrap();
        let c = 1.0 / 3.0f64.sinh().sqrt();
        assert!(v.values.iter().all(|z| (z.re - c).abs() < 1e-15 && z.im == 0.0));
        let zero = synthesize_v(&[ComplexField::filled(grid, C64::new(0.0, 0.0))], &basis, 3.0).unwrap();
        assert!(zero.values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn constant_and_quadratic_fields() {
        let grid = GridSpec::new(2.0, 8).unwrap();
        let n2 = ScalarField::filled(grid, 1.0);
        let c = C64::new(0.7, -0.2);
        let f = recover_f(&ComplexField::filled(grid, c), &n2, 1.5).unwrap();
        assert!(f.values.iter().all(|x| (x - 2.25 * 0.7).abs() < 1e-13));
        let q = ComplexField::from_fn(grid, |x, _| C64::new(x * x, 0.0));
        let f = recover_f(&q, &n2, 1.5).unwrap();
        for (i, j) in grid.interior_nodes() {
            let (x, _) = grid.node(i, j);
            assert!((f.at(i, j) - (2.0 + 2.25 * x * x)).abs() < 1e-12);
        }
        // The ring copies the nearest interior node.
        assert_eq!(f.at(0, 0), f.at(1, 1));
        assert_eq!(f.at(8, 3), f.at(7, 3));
    }

    #[test]
    fn reported_extremes() {
        let grid = GridSpec::new(2.0, 4).unwrap();
        let mut t = ScalarField::filled(grid, 0.0);
        t.set(1, 1, 2.5);
        t.set(3, 3, -2.0);
        let mut c = t.clone();
        c.set(1, 1, 2.76);
        c.set(3, 3, -1.94);
        let m = extreme_value_errors(&c, &t).unwrap();
        assert!((m.rel_err_pos.unwrap() - 0.104).abs() < 1e-12);
        assert!((m.rel_err_neg.unwrap() - 0.03).abs() < 1e-12);
        let same = extreme_value_errors(&t, &t).unwrap();
        assert_eq!(same.rel_err_pos, Some(0.0));
        assert_eq!(same.l2_rel_err, 0.0);
    }

    #[test]
    fn one_sided_sources_report_absent_component() {
        let grid = GridSpec::new(2.0, 4).unwrap();
        let t = ScalarField::from_fn(grid, |x: f64, _| x.abs());
        let m = extreme_value_errors(&t, &t).unwrap();
        assert!(m.rel_err_neg.is_none() && m.min_neg.is_none());
        assert_eq!(m.rel_err_pos, Some(0.0));
    }
}
