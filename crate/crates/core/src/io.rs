//! CSV and JSON formats shared by the CLI and the harness.
//!
//! Boundary rows are keyed by the flat node index `i (M + 1) + j` and the edge
//! id (0 bottom, 1 right, 2 top, 3 left). Neumann columns are blank off the
//! top row `j = M`. Basis indices `m` are one based in every file.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::forward::{BoundaryTraces, FrequencySweep};
use crate::grid::{ComplexField, GridSpec};
use crate::pipeline::FourierBoundaryData;
use crate::scenario::SourceProfile;

type C64 = Complex<f64>;

#[derive(Debug, Serialize, Deserialize)]
struct BoundaryRow {
    node: usize,
    edge: u8,
    re_f: f64,
    im_f: f64,
    re_g: Option<f64>,
    im_g: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FourierRow {
    node: usize,
    edge: u8,
    m: usize,
    re_f: f64,
    im_f: f64,
    re_g: Option<f64>,
    im_g: Option<f64>,
}

/// Description of a directory of per-k trace files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceManifest {
    pub grid: GridSpec<f64>,
    pub k_lo: f64,
    pub k_hi: f64,
    pub n_intervals: usize,
    pub k_values: Vec<f64>,
    pub delta: f64,
    pub seed: u64,
    pub g: SourceProfile,
    pub test: Option<u8>,
    pub files: Vec<String>,
}

impl TraceManifest {
    pub fn sweep(&self) -> Result<FrequencySweep<f64>> {
        FrequencySweep::new(self.k_lo, self.k_hi, self.n_intervals, |k| self.g.eval(k))
    }
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Flat index of each top-row node -> position in the Neumann vector.
fn top_slot(grid: &GridSpec<f64>, i: usize, j: usize) -> Option<usize> {
    (j == grid.n_cells).then_some(i)
}

/// Write one file per wavenumber plus `manifest.json`.
pub fn write_traces(
    dir: &Path,
    traces: &BoundaryTraces<f64>,
    sweep: &FrequencySweep<f64>,
    g: SourceProfile,
    test: Option<u8>,
) -> Result<TraceManifest> {
    fs::create_dir_all(dir)?;
    let grid = traces.grid;
    let nodes = grid.boundary_nodes();
    let mut files = Vec::with_capacity(traces.k_values.len());
    for (ik, (dir_row, neu_row)) in traces.dirichlet.iter().zip(&traces.neumann).enumerate() {
        let name = format!("traces_k{ik:04}.csv");
        let mut w = csv::Writer::from_path(dir.join(&name))?;
        for (b, node) in nodes.iter().enumerate() {
            let g = top_slot(&grid, node.i, node.j).map(|s| neu_row[s]);
            w.serialize(BoundaryRow {
                node: grid.index(node.i, node.j),
                edge: node.edge.id(),
                re_f: dir_row[b].re,
                im_f: dir_row[b].im,
                re_g: g.map(|z| z.re),
                im_g: g.map(|z| z.im),
            })?;
        }
        w.flush()?;
        files.push(name);
    }
    let manifest = TraceManifest {
        grid,
        k_lo: sweep.k_lo,
        k_hi: sweep.k_hi,
        n_intervals: sweep.n_intervals,
        k_values: traces.k_values.clone(),
        delta: traces.noise_level,
        seed: traces.rng_seed,
        g,
        test,
        files,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Boundary position of each flat node index, `usize::MAX` for interior nodes.
fn boundary_positions(grid: &GridSpec<f64>) -> Vec<usize> {
    let mut pos = vec![usize::MAX; grid.n_nodes()];
    for (b, node) in grid.boundary_nodes().iter().enumerate() {
        pos[grid.index(node.i, node.j)] = b;
    }
    pos
}

fn locate(grid: &GridSpec<f64>, pos: &[usize], node: usize, edge: u8) -> Result<(usize, Option<usize>)> {
    let b = *pos.get(node).ok_or(Error::OutOfRange { index: node, len: pos.len() })?;
    if b == usize::MAX {
        return Err(Error::InvalidArgument(format!("node {node} is not on the boundary")));
    }
    let expect = grid.boundary_nodes()[b].edge.id();
    if expect != edge {
        return Err(Error::InvalidArgument(format!("node {node} lies on edge {expect}, file says {edge}")));
    }
    let (i, j) = grid.ij(node);
    Ok((b, top_slot(grid, i, j)))
}

/// Read a trace directory written by [`write_traces`].
pub fn read_traces(dir: &Path) -> Result<(TraceManifest, BoundaryTraces<f64>)> {
    let manifest: TraceManifest = read_json(&dir.join("manifest.json"))?;
    let grid = GridSpec::new(manifest.grid.half_width, manifest.grid.n_cells)?;
    let pos = boundary_positions(&grid);
    let n_b = grid.boundary_nodes().len();
    let zero = C64::new(0.0, 0.0);
    let mut dirichlet = Vec::with_capacity(manifest.files.len());
    let mut neumann = Vec::with_capacity(manifest.files.len());
    for name in &manifest.files {
        let mut d = vec![zero; n_b];
        let mut n = vec![zero; grid.side()];
        let mut seen = 0;
        for row in csv::Reader::from_path(dir.join(name))?.deserialize() {
            let row: BoundaryRow = row?;
            let (b, slot) = locate(&grid, &pos, row.node, row.edge)?;
            d[b] = C64::new(row.re_f, row.im_f);
            if let (Some(s), Some(re), Some(im)) = (slot, row.re_g, row.im_g) {
                n[s] = C64::new(re, im);
            }
            seen += 1;
        }
        if seen != n_b {
            return Err(Error::Dimension(format!("{name}: {seen} rows for {n_b} boundary nodes")));
        }
        dirichlet.push(d);
        neumann.push(n);
    }
    if manifest.k_values.len() != dirichlet.len() {
        return Err(Error::Dimension("manifest lists a different number of wavenumbers than files".into()));
    }
    let traces = BoundaryTraces {
        grid,
        k_values: manifest.k_values.clone(),
        dirichlet,
        neumann,
        noise_level: manifest.delta,
        rng_seed: manifest.seed,
    };
    Ok((manifest, traces))
}

pub fn write_fourier(path: &Path, data: &FourierBoundaryData<f64>) -> Result<()> {
    let grid = data.grid;
    let mut w = csv::Writer::from_path(path)?;
    for (b, node) in grid.boundary_nodes().iter().enumerate() {
        let slot = top_slot(&grid, node.i, node.j).filter(|&s| s < data.g_tilde.len());
        for m in 0..data.n_terms {
            let g = slot.map(|s| data.g_tilde[s][m]);
            w.serialize(FourierRow {
                node: grid.index(node.i, node.j),
                edge: node.edge.id(),
                m: m + 1,
                re_f: data.f_tilde[b][m].re,
                im_f: data.f_tilde[b][m].im,
                re_g: g.map(|z| z.re),
                im_g: g.map(|z| z.im),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a Fourier CSV. The grid is needed to place the rows; `n_terms` is
/// taken from the largest `m` present.
pub fn read_fourier(path: &Path, grid: GridSpec<f64>) -> Result<FourierBoundaryData<f64>> {
    let pos = boundary_positions(&grid);
    let rows: Vec<FourierRow> = csv::Reader::from_path(path)?.deserialize().collect::<Result<_, _>>()?;
    let n_terms = rows.iter().map(|r| r.m).max().unwrap_or(0);
    if n_terms == 0 || rows.iter().any(|r| r.m == 0) {
        return Err(Error::InvalidArgument("basis index m must be one based".into()));
    }
    let n_b = grid.boundary_nodes().len();
    if rows.len() != n_b * n_terms {
        return Err(Error::Dimension(format!("{} rows, expected {}", rows.len(), n_b * n_terms)));
    }
    let zero = C64::new(0.0, 0.0);
    let mut f_tilde = vec![vec![zero; n_terms]; n_b];
    let mut g_tilde = vec![vec![zero; n_terms]; grid.side()];
    let mut have_g = false;
    for r in &rows {
        let (b, slot) = locate(&grid, &pos, r.node, r.edge)?;
        f_tilde[b][r.m - 1] = C64::new(r.re_f, r.im_f);
        if let (Some(s), Some(re), Some(im)) = (slot, r.re_g, r.im_g) {
            g_tilde[s][r.m - 1] = C64::new(re, im);
            have_g = true;
        }
    }
    if !have_g {
        g_tilde.clear();
    }
    Ok(FourierBoundaryData { grid, n_terms, f_tilde, g_tilde })
}

#[derive(Debug, Serialize, Deserialize)]
struct CoefficientRow {
    i: usize,
    j: usize,
    x: f64,
    y: f64,
    m: usize,
    re_v: f64,
    im_v: f64,
}

/// Coefficient fields `v_1 .. v_N`, one row per node and term.
pub fn write_coefficients(path: &Path, fields: &[ComplexField<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if let Some(first) = fields.first() {
        let grid = first.grid;
        for p in 0..grid.n_nodes() {
            let (i, j) = grid.ij(p);
            let (x, y) = grid.node(i, j);
            for (m, f) in fields.iter().enumerate() {
                let z = f.values[p];
                w.serialize(CoefficientRow { i, j, x, y, m: m + 1, re_v: z.re, im_v: z.im })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_coefficients(path: &Path, grid: GridSpec<f64>) -> Result<Vec<ComplexField<f64>>> {
    let rows: Vec<CoefficientRow> = csv::Reader::from_path(path)?.deserialize().collect::<Result<_, _>>()?;
    let n_terms = rows.iter().map(|r| r.m).max().unwrap_or(0);
    if rows.len() != n_terms * grid.n_nodes() || rows.iter().any(|r| r.m == 0 || r.i > grid.n_cells || r.j > grid.n_cells) {
        return Err(Error::Dimension("coefficient file does not match the grid".into()));
    }
    let mut out = vec![ComplexField::filled(grid, C64::new(0.0, 0.0)); n_terms];
    for r in rows {
        out[r.m - 1].set(r.i, r.j, C64::new(r.re_v, r.im_v));
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct BasisRow {
    block: String,
    row: usize,
    col: usize,
    value: f64,
}

/// Basis file with three blocks: `coeff` (term m, power of t), `D` and `S`.
pub fn write_basis(path: &Path, basis: &BasisSet<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (m, psi) in basis.psi.iter().enumerate() {
        for (p, &c) in psi.coeffs.iter().enumerate() {
            w.serialize(BasisRow { block: "coeff".into(), row: m + 1, col: p, value: c })?;
        }
    }
    for (name, mat) in [("D", &basis.d_matrix), ("S", &basis.s_matrix)] {
        for (r, row) in mat.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                w.serialize(BasisRow { block: name.into(), row: r + 1, col: c + 1, value: v })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct GridRow {
    i: usize,
    j: usize,
    x: f64,
    y: f64,
    f_true: f64,
    f_comp: f64,
    re_v: f64,
    im_v: f64,
}

/// Nodal reconstruction table.
pub fn write_grid(
    path: &Path,
    f_true: &crate::grid::ScalarField<f64>,
    f_comp: &crate::grid::ScalarField<f64>,
    v: &ComplexField<f64>,
) -> Result<()> {
    let grid = f_true.grid;
    if f_comp.grid != grid || v.grid != grid {
        return Err(Error::Dimension("grid outputs on different grids".into()));
    }
    let mut w = csv::Writer::from_path(path)?;
    for p in 0..grid.n_nodes() {
        let (i, j) = grid.ij(p);
        let (x, y) = grid.node(i, j);
        w.serialize(GridRow {
            i,
            j,
            x,
            y,
            f_true: f_true.values[p],
            f_comp: f_comp.values[p],
            re_v: v.values[p].re,
            im_v: v.values[p].im,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::extract_traces;

    fn sample_traces() -> (BoundaryTraces<f64>, FrequencySweep<f64>) {
        let grid = GridSpec::new(1.0, 6).unwrap();
        let sweep = FrequencySweep::new(1.5, 4.5, 2, |k| SourceProfile::K.eval(k)).unwrap();
        let fields: Vec<_> = sweep
            .k_values
            .iter()
            .map(|&k| ComplexField::from_fn(grid, |x, y| C64::new(x * k + y, x - y * y)))
            .collect();
        (extract_traces(&fields, &sweep.k_values, 0.05, 9).unwrap(), sweep)
    }

    #[test]
    fn traces_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let (traces, sweep) = sample_traces();
        let man = write_traces(dir.path(), &traces, &sweep, SourceProfile::K, Some(3)).unwrap();
        assert_eq!(man.files.len(), 3);
        let (back_man, back) = read_traces(dir.path()).unwrap();
        assert_eq!(back_man, man);
        assert_eq!(back, traces);
        assert_eq!(back_man.sweep().unwrap().k_values, sweep.k_values);
    }

    #[test]
    fn fourier_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::new(1.0, 4).unwrap();
        let n_b = grid.boundary_nodes().len();
        let f_tilde: Vec<Vec<C64>> =
            (0..n_b).map(|b| (0..3).map(|m| C64::new(b as f64, m as f64 * 0.5)).collect()).collect();
        let g_tilde: Vec<Vec<C64>> =
            (0..grid.side()).map(|i| (0..3).map(|m| C64::new(-(i as f64), m as f64)).collect()).collect();
        let data = FourierBoundaryData { grid, n_terms: 3, f_tilde, g_tilde };
        let path = dir.path().join("fourier.csv");
        write_fourier(&path, &data).unwrap();
        assert_eq!(read_fourier(&path, grid).unwrap(), data);

        let dirichlet_only = FourierBoundaryData { g_tilde: Vec::new(), ..data };
        write_fourier(&path, &dirichlet_only).unwrap();
        assert_eq!(read_fourier(&path, grid).unwrap(), dirichlet_only);
    }

    #[test]
    fn coefficients_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::new(2.0, 4).unwrap();
        let fields: Vec<_> =
            (0..2).map(|m| ComplexField::from_fn(grid, |x, y| C64::new(x + m as f64, y))).collect();
        let path = dir.path().join("v.csv");
        write_coefficients(&path, &fields).unwrap();
        assert_eq!(read_coefficients(&path, grid).unwrap(), fields);
    }

    #[test]
    fn mislabelled_edge_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (traces, sweep) = sample_traces();
        write_traces(dir.path(), &traces, &sweep, SourceProfile::K, None).unwrap();
        let file = dir.path().join("traces_k0000.csv");
        let text = fs::read_to_string(&file).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        // Row 1 is node (0,0) on the bottom edge; claim it is on the top edge.
        lines[1] = lines[1].replacen(",0,", ",2,", 1);
        fs::write(&file, lines.join("\n")).unwrap();
        assert!(read_traces(dir.path()).is_err());
    }
}
