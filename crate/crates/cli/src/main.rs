mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use manin_core::coherent::{coherent_coefficients, eigen_residual, kernel, polar_grid, radius_of_convergence};
use manin_core::export::{to_json, write_grid_csv};
use manin_core::measure::{verify_moments, verify_resolution_identity, MeasureRegistry, PhaseSpaceGrid};
use manin_core::paragrassmann::{pg_structure_report, ParagrassmannConfig};
use manin_core::symbols::{lower_symbol_grid, quantize_cs, secondary_toeplitz, PolynomialSymbol};
use manin_core::toeplitz::toeplitz_matrix;
use manin_core::verification::run_acceptance_suite;
use manin_core::{Error, ErrorClass, ManinElement, WeightSpec};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use config::{parse_pair, RunConfig};

#[derive(Parser)]
#[command(name = "manin", version, about = "Toeplitz operators and coherent states on the Manin plane")]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Estimate the phase-space radius.
    Radius,
    /// Toeplitz matrix of a Manin-plane expression.
    Operator,
    /// Coherent state coefficients and eigen residual.
    Coherent,
    /// Reproducing kernel K(mu, lambda) over the lambda grid, as CSV.
    Kernel,
    /// Radial quadrature with moment and Gram checks.
    Measure,
    /// Lower symbols over the grid and Q_cs / S_f matrices.
    Symbols,
    /// Jordan structure of the truncated annihilation operator.
    Paragrassmann,
    /// Run the acceptance suite.
    Verify,
}

#[derive(Args)]
struct Overrides {
    /// JSON config file, or "-" for standard input.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// q as "re,im".
    #[arg(long, global = true, value_parser = parse_pair, allow_hyphen_values = true)]
    q: Option<[f64; 2]>,
    /// Weight rule, e.g. "factorial", "constant:c=2", "explicit:1,1,2".
    #[arg(long, global = true)]
    weights: Option<String>,
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Radial quadrature order.
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Angular points of the phase-space grid.
    #[arg(long, global = true)]
    angles: Option<usize>,
    /// Measure strategy: closed-form, moments or auto.
    #[arg(long, global = true)]
    strategy: Option<String>,
    #[arg(long, global = true, value_parser = parse_pair, allow_hyphen_values = true)]
    lambda: Option<[f64; 2]>,
    #[arg(long, global = true, value_parser = parse_pair, allow_hyphen_values = true)]
    mu: Option<[f64; 2]>,
    /// Manin-plane expression such as "tb" or "2 th^2 tb".
    #[arg(long, global = true, allow_hyphen_values = true)]
    operator: Option<String>,
    /// Phase-space expression such as "L" or "(1,2) L Lc".
    #[arg(long, global = true, allow_hyphen_values = true)]
    symbol: Option<String>,
    /// Paragrassmann order.
    #[arg(long, global = true)]
    l: Option<usize>,
    /// Output directory; artifacts go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0} of 12 acceptance criteria failed")]
    Verification(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Core(e) => match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::OutOfDomain => 3,
                ErrorClass::Conditioning => 4,
            },
        }
    }
}

fn resolve(o: &Overrides) -> Result<RunConfig, Error> {
    let mut c = match &o.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(w) = &o.weights {
        c.weights = WeightSpec::parse(w)?;
    }
    macro_rules! take {
        ($($f:ident),*) => { $( if let Some(v) = o.$f.clone() { c.$f = v; } )* };
    }
    take!(q, cutoff, tol, order, angles, strategy, lambda, mu, operator, symbol, l);
    if o.out.is_some() {
        c.out = o.out.clone();
    }
    c.validate()?;
    Ok(c)
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    command: &'static str,
    config: &'a RunConfig,
    result: T,
}

struct Output<'a> {
    config: &'a RunConfig,
}

impl Output<'_> {
    fn json<T: Serialize>(&self, command: &'static str, result: T) -> Result<(), Error> {
        let text = to_json(&Artifact {
            command,
            config: self.config,
            result,
        })? + "\n";
        self.emit(&format!("{command}.json"), text.as_bytes())
    }

    fn emit(&self, name: &str, bytes: &[u8]) -> Result<(), Error> {
        match &self.config.out {
            None => {
                use std::io::Write;
                std::io::stdout().write_all(bytes).map_err(|e| Error::Io(e.to_string()))
            }
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| Error::Io(e.to_string()))?;
                let path = dir.join(name);
                fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                eprintln!("wrote {}", path.display());
                Ok(())
            }
        }
    }
}

fn grid_points(c: &RunConfig) -> Vec<Complex64> {
    polar_grid(c.grid.r_max, c.grid.rings, c.grid.spokes)
}

fn phase_space_grid(c: &RunConfig) -> Result<PhaseSpaceGrid, Error> {
    let model = c.model()?;
    let quad = MeasureRegistry::with_builtins().build(&c.strategy, &model, c.order)?;
    PhaseSpaceGrid::new(quad, c.angles)
}

#[derive(Serialize)]
struct CoherentResult<T: Serialize, R: Serialize> {
    state: T,
    residual: R,
}

#[derive(Serialize)]
struct MeasureResult<Q: Serialize, M: Serialize, G: Serialize> {
    quadrature: Q,
    moments: M,
    gram_basis: usize,
    gram: G,
}

#[derive(Serialize)]
struct SymbolsResult<L: Serialize, O: Serialize> {
    operator: String,
    lower_symbol_normalized: L,
    symbol: String,
    q_cs: O,
    s_f: O,
}

fn dispatch(cmd: Command, c: &RunConfig) -> Result<(), CliError> {
    let out = Output { config: c };
    let model = c.model()?;
    match cmd {
        Command::Radius => {
            let r = radius_of_convergence(&model, c.horizon, 1e6)?;
            eprintln!("radius {:?} ({:?})", r.value, r.boundary_verdict);
            out.json("radius", r)?;
        }
        Command::Operator => {
            let g = ManinElement::parse(model.q, &c.operator)?;
            let op = toeplitz_matrix(&g, &model, c.cutoff)?;
            if c.out.is_some() {
                let mut buf = Vec::new();
                op.write_csv(&mut buf)?;
                out.emit("operator.csv", &buf)?;
            }
            out.json("operator", op)?;
        }
        Command::Coherent => {
            let state = coherent_coefficients(c.lambda(), &model, c.tol)?;
            let residual = eigen_residual(&state, &model)?;
            eprintln!("cutoff {} residual {:e}", state.cutoff(), residual.residual);
            out.json("coherent", CoherentResult { state, residual })?;
        }
        Command::Kernel => {
            let mu = c.mu();
            let pairs = grid_points(c)
                .into_iter()
                .map(|l| kernel(mu, l, &model, c.tol).map(|k| (l, k)))
                .collect::<Result<Vec<_>, _>>()?;
            let mut buf = Vec::new();
            write_grid_csv(&pairs, &mut buf)?;
            out.emit("kernel.csv", &buf)?;
            if c.out.is_some() {
                out.json("kernel", "kernel.csv")?;
            }
        }
        Command::Measure => {
            let grid = phase_space_grid(c)?;
            let moments = verify_moments(&grid.quad, &model, c.order - 1)?;
            let gram_basis = (c.order - 1).min((c.angles - 1) / 2);
            let gram = verify_resolution_identity(&grid, &model, gram_basis)?;
            eprintln!(
                "moments max dev {:e}, gram max dev {:e}",
                moments.max_deviation, gram.max_deviation
            );
            out.json(
                "measure",
                MeasureResult {
                    quadrature: &grid.quad,
                    moments,
                    gram_basis,
                    gram,
                },
            )?;
        }
        Command::Symbols => {
            let g = ManinElement::parse(model.q, &c.operator)?;
            let f = PolynomialSymbol::parse(&c.symbol)?;
            let points = grid_points(c);
            let mut need = 1;
            for &p in &points {
                need = need.max(coherent_coefficients(p, &model, c.tol)?.len());
            }
            let op = toeplitz_matrix(&g, &model, need + 1)?;
            let lower = lower_symbol_grid(&op, &points, &model, true, c.tol)?;
            let grid = phase_space_grid(c)?;
            let q_cs = quantize_cs(&f, &grid, &model, c.cutoff)?;
            let s_f = secondary_toeplitz(&f, &grid, &model, c.cutoff)?;
            if c.out.is_some() {
                let mut buf = Vec::new();
                write_grid_csv(&lower.pairs(), &mut buf)?;
                out.emit("lower_symbol.csv", &buf)?;
            }
            out.json(
                "symbols",
                SymbolsResult {
                    operator: c.operator.clone(),
                    lower_symbol_normalized: lower,
                    symbol: f.to_string(),
                    q_cs,
                    s_f,
                },
            )?;
        }
        Command::Paragrassmann => {
            let cfg = match &c.pg_weights {
                Some(w) => ParagrassmannConfig::new(c.l, w.clone(), model.q)?,
                None => ParagrassmannConfig::uniform(c.l, model.q)?,
            };
            out.json("paragrassmann", pg_structure_report(&cfg)?)?;
        }
        Command::Verify => {
            let outcomes = run_acceptance_suite();
            for o in &outcomes {
                eprintln!("{}", o.line());
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            out.json("verify", &outcomes)?;
            if failed > 0 {
                return Err(CliError::Verification(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(&cli.opts)
        .map_err(CliError::from)
        .and_then(|c| dispatch(cli.command, &c));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
