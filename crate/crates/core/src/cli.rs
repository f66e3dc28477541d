//! Command-line front end: flag parsing, the four workflows, and
//! byte-stable CSV/JSON emission.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{OutputFormat, RunConfig, StateBasis};
use crate::error::{Error, Result};
use crate::linalg::general_eigenvalues;
use crate::metric::{closed_form_energy, evolve, expectation, time_grid, InnerProduct};
use crate::model::ModelParams;
use crate::position::{density, uniform_grid, Representation};
use crate::report::{fixed, format_float};
use crate::verify::{verify_all, Model, ParameterSummary, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pt-oscillator", version, about = "Truncated Fock-space numerics for the complex-shifted PT-symmetric oscillator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Energies n + 1/2 with eigensolver cross-check and eigenvector residuals.
    Spectrum,
    /// Energy expectation of an evolving state in both inner products.
    Evolve,
    /// Probability densities in the X and x representations.
    Density,
    /// Run every invariant and emit the JSON report.
    Verify,
}

#[derive(Debug, Default, Args)]
pub struct Options {
    /// Shift z*, as `a+bi` or `a,b`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub z: Option<String>,
    /// `auto-half`, `auto-integer`, or an explicit angle.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Fock-space cutoff N.
    #[arg(long, global = true)]
    pub n: Option<String>,
    /// Corner margin M; interior block is N − M.
    #[arg(long, global = true)]
    pub margin: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t_min: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t_max: Option<String>,
    #[arg(long, global = true)]
    pub t_steps: Option<String>,
    /// Initial state as `level:amplitude` items, e.g. "1:1 2:0.5-0.5i".
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub state: Option<String>,
    /// Basis of the state levels: `a` or `b`.
    #[arg(long, global = true)]
    pub state_basis: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid_min: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid_max: Option<String>,
    #[arg(long, global = true)]
    pub grid_steps: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub output: Option<String>,
    /// `csv` or `json`.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

impl Options {
    pub fn flags(&self) -> Vec<(String, String)> {
        let pairs = [
            ("--z", &self.z),
            ("--theta", &self.theta),
            ("--n", &self.n),
            ("--margin", &self.margin),
            ("--t-min", &self.t_min),
            ("--t-max", &self.t_max),
            ("--t-steps", &self.t_steps),
            ("--state", &self.state),
            ("--state-basis", &self.state_basis),
            ("--grid-min", &self.grid_min),
            ("--grid-max", &self.grid_max),
            ("--grid-steps", &self.grid_steps),
            ("--output", &self.output),
            ("--format", &self.format),
        ];
        pairs.into_iter().filter_map(|(flag, v)| v.as_ref().map(|v| (flag.to_owned(), v.clone()))).collect()
    }
}

/// Output text and whether the workflow succeeded.
pub struct Rendered {
    pub text: String,
    pub success: bool,
}

fn ok(text: String) -> Result<Rendered> {
    Ok(Rendered { text, success: true })
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serialization is infallible") + "\n"
}

fn model(cfg: &RunConfig) -> Result<Model> {
    Model::build(cfg.params()?)
}

fn summary(params: &ModelParams) -> Result<ParameterSummary> {
    Ok(ParameterSummary::new(params, params.require_branch()?))
}

#[derive(Serialize)]
struct SpectrumRow {
    n: usize,
    #[serde(serialize_with = "fixed")]
    energy: f64,
    #[serde(serialize_with = "fixed")]
    eigensolver_re: f64,
    #[serde(serialize_with = "fixed")]
    eigensolver_im: f64,
    #[serde(serialize_with = "fixed")]
    right_residual: f64,
    #[serde(serialize_with = "fixed")]
    left_residual: f64,
}

#[derive(Serialize)]
struct Document<'a, R: Serialize> {
    schema: u32,
    command: &'a str,
    parameters: ParameterSummary,
    #[serde(flatten)]
    body: R,
}

fn column_residual(a: &crate::linalg::StateVector, b: &crate::linalg::StateVector) -> f64 {
    a.max_abs_diff(b) / b.norm().max(1.0)
}

pub fn render_spectrum(cfg: &RunConfig) -> Result<Rendered> {
    let m = model(cfg)?;
    let solver = general_eigenvalues(&m.ops.h)?;
    let rows: Vec<SpectrumRow> = (0..m.dim())
        .map(|n| {
            let e = Complex64::new(m.system.energies[n], 0.0);
            let b = m.system.basis.column(n);
            let d = m.system.duals.column(n);
            SpectrumRow {
                n,
                energy: m.system.energies[n],
                eigensolver_re: solver[n].re,
                eigensolver_im: solver[n].im,
                right_residual: column_residual(&m.ops.h.apply(&b), &b.scale(e)),
                left_residual: column_residual(&m.ops.h_dag.apply(&d), &d.scale(e)),
            }
        })
        .collect();
    match cfg.format {
        OutputFormat::Csv => {
            let mut out = String::from("n,energy,eigensolver_re,eigensolver_im,right_residual,left_residual\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.n,
                    format_float(r.energy),
                    format_float(r.eigensolver_re),
                    format_float(r.eigensolver_im),
                    format_float(r.right_residual),
                    format_float(r.left_residual)
                );
            }
            ok(out)
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Body {
                rows: Vec<SpectrumRow>,
            }
            ok(json(&Document { schema: SCHEMA_VERSION, command: "spectrum", parameters: summary(&m.params)?, body: Body { rows } }))
        }
    }
}

#[derive(Serialize)]
struct EvolveRow {
    #[serde(serialize_with = "fixed")]
    t: f64,
    #[serde(serialize_with = "fixed")]
    l2_re: f64,
    #[serde(serialize_with = "fixed")]
    l2_im: f64,
    #[serde(serialize_with = "fixed")]
    eta_re: f64,
    #[serde(serialize_with = "fixed")]
    eta_im: f64,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    closed: Option<ClosedColumns>,
}

#[derive(Serialize)]
struct ClosedColumns {
    #[serde(serialize_with = "fixed")]
    l2_closed_re: f64,
    #[serde(serialize_with = "fixed")]
    l2_closed_im: f64,
    #[serde(serialize_with = "fixed")]
    eta_closed_re: f64,
    #[serde(serialize_with = "fixed")]
    eta_closed_im: f64,
    #[serde(serialize_with = "fixed")]
    l2_deviation: f64,
    #[serde(serialize_with = "fixed")]
    eta_deviation: f64,
}

/// Closed forms exist for states proportional to |1⟩ in the a-basis.
fn is_first_excited(cfg: &RunConfig) -> bool {
    let nonzero: Vec<_> = cfg.state.iter().filter(|(_, a)| *a != Complex64::ZERO).collect();
    let (a_basis, level_one) = (cfg.state_basis == StateBasis::A, nonzero.iter().all(|(l, _)| *l == 1));
    a_basis && level_one
}

pub fn render_evolve(cfg: &RunConfig) -> Result<Rendered> {
    let m = model(cfg)?;
    let psi0 = cfg.initial_state(&m.system.basis);
    let closed = is_first_excited(cfg);
    let z_abs2 = m.params.z_abs2();
    let rows = time_grid(cfg.t_min, cfg.t_max, cfg.t_steps)
        .par_iter()
        .map(|&t| {
            let psi = evolve(&psi0, t, &m.system)?;
            let l2 = expectation(&m.ops.h, &psi, InnerProduct::L2, &m.bundle)?;
            let eta = expectation(&m.ops.h, &psi, InnerProduct::Eta, &m.bundle)?;
            let closed = closed.then(|| {
                let (l2_c, eta_c) = (closed_form_energy(t, z_abs2, InnerProduct::L2), closed_form_energy(t, z_abs2, InnerProduct::Eta));
                ClosedColumns {
                    l2_closed_re: l2_c.re,
                    l2_closed_im: l2_c.im,
                    eta_closed_re: eta_c.re,
                    eta_closed_im: eta_c.im,
                    l2_deviation: (l2 - l2_c).norm(),
                    eta_deviation: (eta - eta_c).norm(),
                }
            });
            Ok(EvolveRow { t, l2_re: l2.re, l2_im: l2.im, eta_re: eta.re, eta_im: eta.im, closed })
        })
        .collect::<Result<Vec<_>>>()?;
    match cfg.format {
        OutputFormat::Csv => {
            let mut out = String::from("t,l2_re,l2_im,eta_re,eta_im");
            if closed {
                out.push_str(",l2_closed_re,l2_closed_im,eta_closed_re,eta_closed_im,l2_deviation,eta_deviation");
            }
            out.push('\n');
            for r in &rows {
                let mut fields = vec![r.t, r.l2_re, r.l2_im, r.eta_re, r.eta_im];
                if let Some(c) = &r.closed {
                    fields.extend([c.l2_closed_re, c.l2_closed_im, c.eta_closed_re, c.eta_closed_im, c.l2_deviation, c.eta_deviation]);
                }
                out.push_str(&fields.iter().map(|&x| format_float(x)).collect::<Vec<_>>().join(","));
                out.push('\n');
            }
            ok(out)
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Body {
                rows: Vec<EvolveRow>,
            }
            ok(json(&Document { schema: SCHEMA_VERSION, command: "evolve", parameters: summary(&m.params)?, body: Body { rows } }))
        }
    }
}

#[derive(Serialize)]
struct DensityRow {
    #[serde(serialize_with = "fixed")]
    coordinate: f64,
    #[serde(rename = "density_X_space", serialize_with = "fixed")]
    density_pseudo: f64,
    #[serde(serialize_with = "fixed")]
    density_x_space: f64,
}

pub fn render_density(cfg: &RunConfig) -> Result<Rendered> {
    let m = model(cfg)?;
    let psi = cfg.initial_state(&m.system.basis);
    let grid = uniform_grid(cfg.grid_min, cfg.grid_max, cfg.grid_steps);
    let pseudo = density(&psi, Representation::PseudoPosition, &grid, &m.system, &m.bundle)?;
    let plain = density(&psi, Representation::Position, &grid, &m.system, &m.bundle)?;
    match cfg.format {
        OutputFormat::Csv => {
            let mut out = String::from("coordinate,density_X_space,density_x_space\n");
            for i in 0..grid.len() {
                let _ = writeln!(out, "{},{},{}", format_float(grid[i]), format_float(pseudo.values[i]), format_float(plain.values[i]));
            }
            ok(out)
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Totals {
                #[serde(rename = "X_SPACE", serialize_with = "fixed")]
                pseudo: f64,
                #[serde(rename = "x_SPACE", serialize_with = "fixed")]
                plain: f64,
            }
            #[derive(Serialize)]
            struct Body {
                totals: Totals,
                rows: Vec<DensityRow>,
            }
            let rows = (0..grid.len())
                .map(|i| DensityRow { coordinate: grid[i], density_pseudo: pseudo.values[i], density_x_space: plain.values[i] })
                .collect();
            let body = Body { totals: Totals { pseudo: pseudo.total, plain: plain.total }, rows };
            ok(json(&Document { schema: SCHEMA_VERSION, command: "density", parameters: summary(&m.params)?, body }))
        }
    }
}

pub fn render_verify(cfg: &RunConfig) -> Result<Rendered> {
    let report = verify_all(&cfg.params()?)?;
    let text = match cfg.format {
        OutputFormat::Json => report.to_json() + "\n",
        OutputFormat::Csv => {
            let mut out = String::from("check,residual,tolerance,pass\n");
            for c in &report.checks {
                let _ = writeln!(out, "\"{}\",{},{},{}", c.check, format_float(c.residual), format_float(c.tolerance), c.pass);
            }
            out
        }
    };
    Ok(Rendered { text, success: report.all_pass })
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Rendered> {
    match command {
        Command::Spectrum => render_spectrum(cfg),
        Command::Evolve => render_evolve(cfg),
        Command::Density => render_density(cfg),
        Command::Verify => render_verify(cfg),
    }
}

fn is_input_error(err: &Error) -> bool {
    matches!(err, Error::InvalidParams(_) | Error::CutoffTooLarge(_) | Error::BranchViolation { .. })
}

/// Full CLI: parse, configure, run, write. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let file = match &cli.options.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => Some(text),
            Err(err) => {
                eprintln!("error: cannot read {}: {err}", path.display());
                return EXIT_USAGE;
            }
        },
        None => None,
    };
    let cfg = match RunConfig::from_sources(file.as_deref(), &cli.options.flags()) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err}");
            return EXIT_USAGE;
        }
    };
    for warning in cfg.warnings() {
        eprintln!("warning: {warning}");
    }
    let rendered = match run(cli.command, &cfg) {
        Ok(r) => r,
        Err(err) => {
            eprintln!("error: {err}");
            return if is_input_error(&err) { EXIT_USAGE } else { EXIT_FAILURE };
        }
    };
    let written = match &cfg.output {
        Some(path) => std::fs::write(path, &rendered.text),
        None => {
            use std::io::Write;
            std::io::stdout().lock().write_all(rendered.text.as_bytes())
        }
    };
    if let Err(err) = written {
        eprintln!("error: cannot write output: {err}");
        return EXIT_FAILURE;
    }
    if rendered.success {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}
