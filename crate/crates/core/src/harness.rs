//! End-to-end runs of the reference scenarios and parameter sweeps.
//!
//! A run goes forward solve -> noise -> division by `g` -> Fourier projection
//! -> quasi-reversibility solve -> reconstruction -> metrics. The noiseless
//! wavefields depend only on the grid, the partition and the scenario, so a
//! [`Wavefields`] value can be shared by every run that varies `δ`, `ε`, `N`
//! or the seed.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::forward::{extract_traces, solve_sweep, FrequencySweep, HelmholtzSolver};
use crate::grid::{ComplexField, GridSpec, ScalarField};
use crate::io;
use crate::pipeline::{fourier_project, to_v, KQuadrature};
use crate::qrm::{self, unlineup, Mode, QrmSystem, SolveReport, SolverKind};
use crate::reconstruction::{extreme_value_errors, recover_f, synthesize_v, Metrics, ReconstructionResult};
use crate::scenario::{refractive_index, Scenario};

/// Which data the inverse solver uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeChoice {
    /// The scenario's own mode.
    #[default]
    Auto,
    Cauchy,
    Dirichlet,
}

impl ModeChoice {
    pub fn resolve(self, scenario: Scenario) -> Mode {
        match self {
            ModeChoice::Auto => scenario.mode(),
            ModeChoice::Cauchy => Mode::Cauchy,
            ModeChoice::Dirichlet => Mode::Dirichlet,
        }
    }
}

impl FromStr for ModeChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "cauchy" => Ok(Self::Cauchy),
            "dirichlet" => Ok(Self::Dirichlet),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

/// Every knob of a run. Serialized as the `config` block of the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub test: u8,
    pub half_width: f64,
    pub m_x: usize,
    pub m_k: usize,
    pub k_lo: f64,
    pub k_hi: f64,
    pub k_probe: f64,
    pub n_terms: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub mode: ModeChoice,
    pub solver: SolverKind,
    pub quadrature: KQuadrature,
    /// Relative tolerance of the CG solver.
    pub cg_tol: f64,
    /// CG iteration cap; `None` means `20 sqrt(n)`.
    pub cg_max_iter: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::paper(1)
    }
}

impl RunConfig {
    /// Full-size parameters of the reference experiments.
    pub fn paper(test: u8) -> Self {
        Self {
            test,
            half_width: 2.0,
            m_x: 120,
            m_k: 150,
            k_lo: 1.5,
            k_hi: 4.5,
            k_probe: 1.5,
            n_terms: 10,
            epsilon: 1e-5,
            delta: 0.05,
            seed: 1,
            mode: ModeChoice::Auto,
            solver: SolverKind::Direct,
            quadrature: KQuadrature::Trapezoid,
            cg_tol: 1e-10,
            cg_max_iter: None,
        }
    }

    /// Reduced grid and partition for quick runs.
    pub fn desk(test: u8) -> Self {
        Self { m_x: 40, m_k: 60, ..Self::paper(test) }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::new(self.test)
    }

    pub fn grid(&self) -> Result<GridSpec<f64>> {
        GridSpec::new(self.half_width, self.m_x)
    }

    pub fn sweep(&self) -> Result<FrequencySweep<f64>> {
        let g = self.scenario()?.profile();
        FrequencySweep::new(self.k_lo, self.k_hi, self.m_k, |k| g.eval(k))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        self.scenario()?;
        self.grid()?;
        if self.n_terms == 0 {
            return bad("at least one basis term is needed".into());
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("ε must be positive, got {}", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return bad(format!("δ must lie in [0, 1), got {}", self.delta));
        }
        if !(self.k_lo <= self.k_probe && self.k_probe <= self.k_hi) {
            return bad(format!("probe k = {} outside [{}, {}]", self.k_probe, self.k_lo, self.k_hi));
        }
        self.sweep()?;
        Ok(())
    }

    /// Apply one named override, as used by [`sweep`] and the CLI.
    pub fn set(&mut self, param: SweepParam, value: f64) -> Result<()> {
        let count = |v: f64| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidArgument(format!("{param} needs a non-negative integer, got {v}")))
            }
        };
        match param {
            SweepParam::Delta => self.delta = value,
            SweepParam::Epsilon => self.epsilon = value,
            SweepParam::NTerms => self.n_terms = count(value)?,
            SweepParam::MX => self.m_x = count(value)?,
        }
        Ok(())
    }
}

/// Noiseless wavefields of one scenario on one grid and partition.
pub struct Wavefields {
    pub scenario: Scenario,
    pub grid: GridSpec<f64>,
    pub sweep: FrequencySweep<f64>,
    pub n2: ScalarField<f64>,
    pub f_true: ScalarField<f64>,
    pub fields: Vec<ComplexField<f64>>,
    pub seconds: f64,
}

impl Wavefields {
    pub fn simulate(cfg: &RunConfig) -> Result<Self> {
        let scenario = cfg.scenario()?;
        let grid = cfg.grid()?;
        let sweep = cfg.sweep()?;
        let t = Instant::now();
        let n2 = ScalarField::from_fn(grid, refractive_index);
        let f_true = scenario.source_field(grid);
        let solver = HelmholtzSolver::new(grid, &n2)?;
        let fields = solve_sweep(&solver, &f_true, &sweep)?;
        Ok(Self { scenario, grid, sweep, n2, f_true, fields, seconds: t.elapsed().as_secs_f64() })
    }

    fn matches(&self, cfg: &RunConfig) -> bool {
        cfg.test == self.scenario.id
            && cfg.m_x == self.grid.n_cells
            && cfg.half_width == self.grid.half_width
            && cfg.m_k == self.sweep.n_intervals
            && cfg.k_lo == self.sweep.k_lo
            && cfg.k_hi == self.sweep.k_hi
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub forward_s: f64,
    pub projection_s: f64,
    pub solve_s: f64,
    pub reconstruction_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub scenario: String,
    pub config: RunConfig,
    pub mode: Mode,
    pub g: String,
    pub unknowns: usize,
    pub timings: Timings,
    pub solve: SolveReport,
    pub metrics: Metrics,
    pub files: Vec<String>,
}

pub struct RunOutcome {
    pub manifest: RunManifest,
    pub coefficients: Vec<ComplexField<f64>>,
    pub result: ReconstructionResult<f64>,
    pub f_true: ScalarField<f64>,
}

/// Run the inverse pipeline on precomputed wavefields.
pub fn invert(cfg: &RunConfig, waves: &Wavefields) -> Result<RunOutcome> {
    cfg.validate()?;
    if !waves.matches(cfg) {
        return Err(Error::InvalidArgument("wavefields were simulated for a different configuration".into()));
    }
    let mode = cfg.mode.resolve(waves.scenario);
    let t = Instant::now();
    let basis = BasisSet::build(cfg.n_terms, cfg.k_lo, cfg.k_hi).map_err(Error::at("basis"))?;
    let traces = extract_traces(&waves.fields, &waves.sweep.k_values, cfg.delta, cfg.seed).map_err(Error::at("noise"))?;
    let v_traces = to_v(&traces, &waves.sweep).map_err(Error::at("projection"))?;
    let data = fourier_project(&v_traces, &basis, &waves.sweep, cfg.quadrature).map_err(Error::at("projection"))?;
    let projection_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let sys = QrmSystem::assemble(waves.grid, &waves.n2, &basis, &data, mode, cfg.epsilon).map_err(Error::at("qrm"))?;
    let max_iter = cfg.cg_max_iter.unwrap_or_else(|| qrm::default_max_iter(sys.n_unknowns()));
    let (v, report) = qrm::solve(&sys, cfg.solver, cfg.cg_tol, max_iter).map_err(Error::at("qrm"))?;
    let coefficients = unlineup(&v, waves.grid, cfg.n_terms)?;
    let solve_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let v_comp = synthesize_v(&coefficients, &basis, cfg.k_probe).map_err(Error::at("reconstruction"))?;
    let f_comp = recover_f(&v_comp, &waves.n2, cfg.k_probe).map_err(Error::at("reconstruction"))?;
    let metrics = extreme_value_errors(&f_comp, &waves.f_true).map_err(Error::at("reconstruction"))?;
    let reconstruction_s = t.elapsed().as_secs_f64();

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: waves.scenario.name().into(),
        config: cfg.clone(),
        mode,
        g: waves.scenario.profile().id().into(),
        unknowns: sys.n_unknowns(),
        timings: Timings { forward_s: waves.seconds, projection_s, solve_s, reconstruction_s },
        solve: report,
        metrics: metrics.clone(),
        files: Vec::new(),
    };
    Ok(RunOutcome {
        manifest,
        coefficients,
        result: ReconstructionResult { v_comp, f_comp, metrics },
        f_true: waves.f_true.clone(),
    })
}

/// Simulate and invert one scenario; write `grid.csv`, `coefficients.csv` and
/// `manifest.json` into `out` when given.
pub fn run_test(cfg: &RunConfig, out: Option<&Path>) -> Result<RunOutcome> {
    cfg.validate()?;
    let waves = Wavefields::simulate(cfg).map_err(Error::at("forward"))?;
    let mut outcome = invert(cfg, &waves)?;
    if let Some(dir) = out {
        write_outcome(dir, &mut outcome)?;
    }
    Ok(outcome)
}

pub fn write_outcome(dir: &Path, outcome: &mut RunOutcome) -> Result<()> {
    io::ensure_dir(dir)?;
    io::write_grid(&dir.join("grid.csv"), &outcome.f_true, &outcome.result.f_comp, &outcome.result.v_comp)?;
    io::write_coefficients(&dir.join("coefficients.csv"), &outcome.coefficients)?;
    outcome.manifest.files = vec!["grid.csv".into(), "coefficients.csv".into()];
    io::write_json(&dir.join("manifest.json"), &outcome.manifest)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Delta,
    Epsilon,
    NTerms,
    MX,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Delta => "delta",
            SweepParam::Epsilon => "epsilon",
            SweepParam::NTerms => "n_terms",
            SweepParam::MX => "m_x",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(SweepParam::Delta),
            "epsilon" | "eps" => Ok(SweepParam::Epsilon),
            "n_terms" | "n" => Ok(SweepParam::NTerms),
            "m_x" | "mx" => Ok(SweepParam::MX),
            _ => Err(Error::InvalidArgument(format!("cannot sweep over {s:?}"))),
        }
    }
}

/// One line of a sweep table. The single-seed columns use the base seed; the
/// mean columns average seeds `seed, seed + 1, ..., seed + n_seeds - 1`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub status: String,
    pub seed: u64,
    pub n_seeds: usize,
    pub rel_err_pos: Option<f64>,
    pub rel_err_neg: Option<f64>,
    pub l2_rel_err: Option<f64>,
    pub mean_rel_err_pos: Option<f64>,
    pub mean_rel_err_neg: Option<f64>,
    pub mean_l2_rel_err: Option<f64>,
    pub error: String,
}

fn mean(xs: &[Option<f64>]) -> Option<f64> {
    let v: Vec<f64> = xs.iter().flatten().copied().collect();
    (!v.is_empty() && v.len() == xs.len()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn sweep_point(cfg: &RunConfig, waves: &mut Option<Wavefields>, n_seeds: usize) -> Result<Vec<Metrics>> {
    cfg.validate()?;
    if !waves.as_ref().is_some_and(|w| w.matches(cfg)) {
        *waves = None;
        *waves = Some(Wavefields::simulate(cfg).map_err(Error::at("forward"))?);
    }
    let w = waves.as_ref().expect("wavefields just simulated");
    (0..n_seeds as u64)
        .map(|s| {
            let run = RunConfig { seed: cfg.seed.wrapping_add(s), ..cfg.clone() };
            invert(&run, w).map(|o| o.manifest.metrics)
        })
        .collect()
}

/// One run per value (times `n_seeds`); failures are recorded in the row and
/// the sweep moves on.
pub fn sweep(base: &RunConfig, param: SweepParam, values: &[f64], n_seeds: usize) -> Result<Vec<SweepRow>> {
    if n_seeds == 0 {
        return Err(Error::InvalidArgument("at least one seed is needed".into()));
    }
    let mut waves: Option<Wavefields> = None;
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut row = SweepRow {
            param: param.name().into(),
            value,
            seed: base.seed,
            n_seeds,
            ..SweepRow::default()
        };
        let mut cfg = base.clone();
        let outcome = cfg.set(param, value).and_then(|_| sweep_point(&cfg, &mut waves, n_seeds));
        match outcome {
            Ok(ms) => {
                let first = &ms[0];
                row.status = "ok".into();
                row.rel_err_pos = first.rel_err_pos;
                row.rel_err_neg = first.rel_err_neg;
                row.l2_rel_err = Some(first.l2_rel_err);
                row.mean_rel_err_pos = mean(&ms.iter().map(|m| m.rel_err_pos).collect::<Vec<_>>());
                row.mean_rel_err_neg = mean(&ms.iter().map(|m| m.rel_err_neg).collect::<Vec<_>>());
                row.mean_l2_rel_err = mean(&ms.iter().map(|m| Some(m.l2_rel_err)).collect::<Vec<_>>());
            }
            Err(e) => {
                row.status = "failed".into();
                row.error = e.to_string();
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
