use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qrm_isource::basis::BasisSet;
use qrm_isource::forward::{extract_traces, solve_sweep, HelmholtzSolver};
use qrm_isource::grid::ScalarField;
use qrm_isource::harness::{self, ModeChoice, RunConfig, SweepParam};
use qrm_isource::pipeline::{fourier_project, to_v, KQuadrature};
use qrm_isource::qrm::{self, unlineup, Mode, QrmSystem, SolverKind};
use qrm_isource::scenario::refractive_index;
use qrm_isource::{io, Error, Grid, Result};

#[derive(Parser)]
#[command(name = "qrm-isource", version, about = "Inverse source solver for the multi-frequency Helmholtz equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the basis and write its coefficients, D and S.
    Basis {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 1.5)]
        klo: f64,
        #[arg(long, default_value_t = 4.5)]
        khi: f64,
        #[arg(long, default_value = "basis.csv")]
        out: PathBuf,
    },
    /// Simulate noisy boundary traces for a scenario.
    Forward {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Turn a trace directory into Fourier coefficients of the boundary data.
    Project {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, value_parser = parse_quadrature, default_value = "trapezoid")]
        quadrature: KQuadrature,
        #[arg(long, default_value = "fourier.csv")]
        out: PathBuf,
    },
    /// Solve for the coefficient fields from a Fourier CSV.
    Invert {
        #[arg(long)]
        fourier: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        #[arg(long, default_value_t = 120)]
        mx: usize,
        #[arg(long, default_value_t = 1.5)]
        klo: f64,
        #[arg(long, default_value_t = 4.5)]
        khi: f64,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        /// Use the Neumann columns if present.
        #[arg(long, value_parser = parse_mode, default_value = "cauchy")]
        mode: ModeChoice,
        #[arg(long, value_parser = parse_solver, default_value = "direct")]
        solver: SolverKind,
        #[arg(long, default_value = "inverse")]
        out: PathBuf,
    },
    /// Run one of the five reference scenarios end to end.
    Test {
        id: u8,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Vary one parameter and tabulate the metrics.
    Sweep {
        #[arg(long, value_parser = parse_param)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        test: u8,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
}

/// Overrides on top of a profile or config file.
#[derive(Args, Default)]
struct RunArgs {
    /// `paper` (120 x 150) or `desk` (40 x 60).
    #[arg(long, default_value = "paper")]
    profile: String,
    #[arg(long)]
    mx: Option<usize>,
    #[arg(long)]
    mk: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<ModeChoice>,
    #[arg(long, value_parser = parse_solver)]
    solver: Option<SolverKind>,
    #[arg(long, value_parser = parse_quadrature)]
    quadrature: Option<KQuadrature>,
}

fn parse_mode(s: &str) -> Result<ModeChoice, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    match s {
        "direct" => Ok(SolverKind::Direct),
        "cg" => Ok(SolverKind::Cg),
        _ => Err(format!("unknown solver {s:?}")),
    }
}

fn parse_quadrature(s: &str) -> Result<KQuadrature, String> {
    match s {
        "trapezoid" => Ok(KQuadrature::Trapezoid),
        "simpson" => Ok(KQuadrature::Simpson),
        _ => Err(format!("unknown quadrature {s:?}")),
    }
}

fn build_config(test: Option<u8>, file: Option<&PathBuf>, a: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match file {
        Some(path) => io::read_json(path)?,
        None => match a.profile.as_str() {
            "paper" => RunConfig::paper(1),
            "desk" => RunConfig::desk(1),
            p => return Err(Error::InvalidArgument(format!("unknown profile {p:?}"))),
        },
    };
    if let Some(t) = test {
        cfg.test = t;
    }
    if let Some(v) = a.mx {
        cfg.m_x = v;
    }
    if let Some(v) = a.mk {
        cfg.m_k = v;
    }
    if let Some(v) = a.n {
        cfg.n_terms = v;
    }
    if let Some(v) = a.delta {
        cfg.delta = v;
    }
    if let Some(v) = a.eps {
        cfg.epsilon = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.mode {
        cfg.mode = v;
    }
    if let Some(v) = a.solver {
        cfg.solver = v;
    }
    if let Some(v) = a.quadrature {
        cfg.quadrature = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Basis { n, klo, khi, out } => {
            let basis = BasisSet::build(n, klo, khi)?;
            io::write_basis(&out, &basis)?;
            println!("wrote {} terms to {}", n, out.display());
        }
        Command::Forward { config, run, out } => {
            let cfg = build_config(None, config.as_ref(), &run)?;
            let grid = cfg.grid()?;
            let sweep = cfg.sweep()?;
            let scenario = cfg.scenario()?;
            let n2 = ScalarField::from_fn(grid, refractive_index);
            let solver = HelmholtzSolver::new(grid, &n2)?;
            let fields = solve_sweep(&solver, &scenario.source_field(grid), &sweep).map_err(Error::at("forward"))?;
            let traces = extract_traces(&fields, &sweep.k_values, cfg.delta, cfg.seed)?;
            let man = io::write_traces(&out, &traces, &sweep, scenario.profile(), Some(scenario.id))?;
            println!("wrote {} trace files to {}", man.files.len(), out.display());
        }
        Command::Project { traces, n, quadrature, out } => {
            let (man, traces) = io::read_traces(&traces)?;
            let sweep = man.sweep()?;
            let basis = BasisSet::build(n, sweep.k_lo, sweep.k_hi)?;
            let v = to_v(&traces, &sweep)?;
            let data = fourier_project(&v, &basis, &sweep, quadrature)?;
            io::write_fourier(&out, &data)?;
            println!("wrote {} x {} coefficients to {}", data.f_tilde.len(), n, out.display());
        }
        Command::Invert { fourier, r, mx, klo, khi, eps, mode, solver, out } => {
            let grid = Grid::new(r, mx)?;
            let data = io::read_fourier(&fourier, grid)?;
            let mode = match mode {
                ModeChoice::Dirichlet => Mode::Dirichlet,
                _ if data.g_tilde.is_empty() => Mode::Dirichlet,
                _ => Mode::Cauchy,
            };
            let basis = BasisSet::build(data.n_terms, klo, khi)?;
            let n2 = ScalarField::from_fn(grid, refractive_index);
            let sys = QrmSystem::assemble(grid, &n2, &basis, &data, mode, eps)?;
            let (v, report) = qrm::solve(&sys, solver, 1e-10, qrm::default_max_iter(sys.n_unknowns()))?;
            io::ensure_dir(&out)?;
            io::write_coefficients(&out.join("coefficients.csv"), &unlineup(&v, grid, data.n_terms)?)?;
            io::write_json(&out.join("report.json"), &report)?;
            println!("solved {} unknowns ({} mode), residual {:.3e}", report.unknowns, mode, report.relative_residual);
        }
        Command::Test { id, config, run, out } => {
            let cfg = build_config(Some(id), config.as_ref(), &run)?;
            let outcome = harness::run_test(&cfg, Some(&out))?;
            let m = &outcome.manifest.metrics;
            let pct = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{:.1}%", 100.0 * v));
            println!(
                "test {id} ({}): max {:?} min {:?}, errors {} / {}, L2 {:.1}%",
                outcome.manifest.mode,
                m.max_pos,
                m.min_neg,
                pct(m.rel_err_pos),
                pct(m.rel_err_neg),
                100.0 * m.l2_rel_err
            );
        }
        Command::Sweep { param, values, test, seeds, config, run, out } => {
            let cfg = build_config(Some(test), config.as_ref(), &run)?;
            let rows = harness::sweep(&cfg, param, &values, seeds)?;
            harness::write_sweep(&out, &rows)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            println!("wrote {} rows to {} ({failed} failed)", rows.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
