//! Command-line driver. Every subcommand prints a JSON report carrying the
//! tolerance it enforced and a description of the claim under test.
//!
//! Exit codes: 0 pass, 1 usage or configuration error, 2 tolerance breach
//! (or crossing orbits), 3 numerical failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::canonical_audit::{
    roundtrip_defect, symplectic_audit, CanonicalChart, DelaunayChart, JacobianOptions, PChart, TildePChart,
};
use crate::charts::EllipseChain;
use crate::dynamics::{integrate_and_monitor, IntegrateOptions};
use crate::kepler::{Ellipse, MassSystem};
use crate::planetary::{check_no_crossing, expansion_term, quadrupole_closed_form, QuadratureGrid};
use crate::secular::{
    birkhoff4_oracle, diophantine_check, fit_quadrupole, quadratic_data, secular_coefficients, DiophantineSpec,
    FitOptions, SecularPoint,
};
use crate::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BREACH: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "perihelia", version, about = "Canonical charts of the planetary problem: audits and experiments")]
pub struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Round-trip defect of a chart over seeded samples.
    Roundtrip(ChartArgs),
    /// Finite-difference symplectic defect of a chart.
    Symplectic(SymplecticArgs),
    /// Averaged interaction of a planet pair: quadrature against closed form.
    Average(AverageArgs),
    /// Equilibrium coefficients of a quadrupole term and their numerical oracles.
    Secular(SecularArgs),
    /// Leapfrog integration with conservation monitors.
    Integrate(IntegrateArgs),
    /// Multi-scale Diophantine check of a frequency vector.
    Diophantine(DiophantineArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartName {
    P,
    Delaunay,
    TildeP,
    /// Extraction only; has no forward map.
    Deprit,
}

#[derive(Args, Debug)]
pub struct ChartArgs {
    #[arg(long, value_enum)]
    pub chart: ChartName,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Mass parameter for the default uniform mass system.
    #[arg(long, default_value_t = 0.01)]
    pub mu: f64,
    /// JSON mass system `{m0, masses, mu}`; overrides `--n` and `--mu`.
    #[arg(long)]
    pub masses: Option<PathBuf>,
    /// Tolerance override.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SymplecticArgs {
    #[command(flatten)]
    pub chart: ChartArgs,
    #[arg(long, default_value_t = JacobianOptions::default().step_rel)]
    pub step_rel: f64,
    /// Plain central differences.
    #[arg(long)]
    pub no_richardson: bool,
}

#[derive(Args, Debug)]
pub struct AverageArgs {
    /// System JSON (see `configs/`).
    #[arg(long)]
    pub config: PathBuf,
    /// One-based pair, `n` standing for the last planet, e.g. `n-1,n`.
    #[arg(long, default_value = "n-1,n")]
    pub pair: String,
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
}

#[derive(Args, Debug)]
pub struct SecularArgs {
    /// JSON point `{chi_prev, chi, chi_next, lambda, lambda_next, a, a_next, m, m_next}`.
    #[arg(long)]
    pub point_file: PathBuf,
    #[arg(long, default_value_t = FitOptions::default().degree)]
    pub fit_degree: usize,
    #[arg(long, default_value_t = FitOptions::default().radius)]
    pub fit_radius: f64,
}

#[derive(Args, Debug)]
pub struct IntegrateArgs {
    /// System JSON (see `configs/`).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    /// Defaults to the shortest osculating period over 500.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub sample_every: usize,
    /// Abort below this separation; defaults to 1e-4 of the smallest semi-major axis.
    #[arg(long)]
    pub collision_radius: Option<f64>,
    /// Samples per averaging window for the energy drift; defaults to a fifth of the run.
    #[arg(long)]
    pub window: Option<usize>,
    /// Trajectory CSV output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-7)]
    pub energy_tolerance: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub momentum_tolerance: f64,
}

#[derive(Args, Debug)]
pub struct DiophantineArgs {
    /// Frequency vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub omega: Vec<f64>,
    /// One γ per block, non-increasing.
    #[arg(long, value_delimiter = ',', required = true)]
    pub gamma: Vec<f64>,
    /// Block sizes; defaults to a single block.
    #[arg(long, value_delimiter = ',')]
    pub blocks: Option<Vec<usize>>,
    /// Exponent τ of the small-divisor bound.
    #[arg(long)]
    pub tau: f64,
    /// Largest `|k|₁` enumerated.
    #[arg(long = "K", short = 'K')]
    pub k_max: u32,
}

/// Planet entry of a system file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitConfig {
    pub a: f64,
    pub e: f64,
    pub inclination: f64,
    pub node: f64,
    pub arg_perihelion: f64,
    #[serde(default)]
    pub mean_anomaly: f64,
}

/// System file: masses and one orbit per planet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemConfig {
    pub m0: f64,
    pub mu: f64,
    pub masses: Vec<f64>,
    pub orbits: Vec<OrbitConfig>,
}

impl SystemConfig {
    pub fn build(&self) -> crate::Result<(MassSystem, EllipseChain, Vec<f64>)> {
        let masses = MassSystem::new(self.m0, self.masses.clone(), self.mu)?;
        if self.orbits.len() != masses.n() {
            return Err(Error::InvalidInput(format!("{} orbits for {} masses", self.orbits.len(), masses.n())));
        }
        let ellipses = self
            .orbits
            .iter()
            .map(|o| {
                let el = Ellipse::from_orientation(o.a, o.e, o.inclination, o.node, o.arg_perihelion);
                el.validate().map(|_| el)
            })
            .collect::<crate::Result<Vec<_>>>()?;
        let ell = self.orbits.iter().map(|o| o.mean_anomaly).collect();
        Ok((masses, EllipseChain::new(ellipses)?, ell))
    }
}

/// Failure of a subcommand before a report could be produced.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib(e) => error_exit_code(e),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "{s}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::DomainViolation(_) | Error::CapExceeded(_) => EXIT_USAGE,
        Error::OrbitCrossing { .. } => EXIT_BREACH,
        _ => EXIT_NUMERICAL,
    }
}

/// Finished subcommand: report plus exit code.
pub struct Outcome {
    pub report: Value,
    pub code: i32,
}

fn verdict(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_BREACH
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid JSON in {}: {e}", path.display())))
}

fn mass_system(args: &ChartArgs) -> Result<MassSystem, CliError> {
    let m = match &args.masses {
        Some(p) => read_json::<MassSystem>(p)?,
        None => MassSystem::uniform(args.n, args.mu),
    };
    m.validate()?;
    Ok(m)
}

fn chart(args: &ChartArgs) -> Result<Box<dyn CanonicalChart>, CliError> {
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let masses = mass_system(args)?;
    let n = masses.n();
    if n == 0 {
        return Err(CliError::Usage("at least one planet is required".into()));
    }
    Ok(match args.chart {
        ChartName::P => {
            if n < 2 {
                return Err(CliError::Usage("the perihelia chart needs n >= 2".into()));
            }
            Box::new(PChart { masses })
        }
        ChartName::Delaunay => Box::new(DelaunayChart { masses }),
        ChartName::TildeP => Box::new(TildePChart { n }),
        ChartName::Deprit => {
            return Err(CliError::Usage("the Deprit chart has no forward map; use p or delaunay".into()));
        }
    })
}

pub fn cmd_roundtrip(args: &ChartArgs) -> Result<Outcome, CliError> {
    let c = chart(args)?;
    let tol = args.tolerance.unwrap_or(1e-9);
    let stats = roundtrip_defect(c.as_ref(), args.samples, args.seed)?;
    let pass = stats.max <= tol;
    Ok(Outcome {
        report: json!({
            "command": "roundtrip",
            "claim": "the chart is a bijection: inverse(forward(z)) = z and forward(inverse(w)) = w",
            "chart": c.name(),
            "n": c.n(),
            "seed": args.seed,
            "samples": stats.samples,
            "rejected_draws": stats.rejected,
            "tolerance": tol,
            "max_defect": stats.max,
            "mean_defect": stats.mean,
            "pass": pass,
        }),
        code: verdict(pass),
    })
}

pub fn cmd_symplectic(args: &SymplecticArgs) -> Result<Outcome, CliError> {
    let c = chart(&args.chart)?;
    let tol = args.chart.tolerance.unwrap_or(match args.chart.chart {
        ChartName::Delaunay => 1e-8,
        _ => 1e-6,
    });
    if !(args.step_rel > 0.0) {
        return Err(CliError::Usage("--step-rel must be positive".into()));
    }
    let opts = JacobianOptions { step_rel: args.step_rel, richardson: !args.no_richardson };
    let rep = symplectic_audit(c.as_ref(), args.chart.samples, args.chart.seed, opts)?;
    let pass = rep.max_defect <= tol;
    Ok(Outcome {
        report: json!({
            "command": "symplectic",
            "claim": "the chart preserves the standard symplectic form: max |J^T JJ J - JJ| over sampled points",
            "chart": rep.chart,
            "n": rep.n,
            "seed": rep.seed,
            "samples": rep.samples,
            "step_rel": rep.step_rel,
            "richardson": opts.richardson,
            "tolerance": tol,
            "max_defect": rep.max_defect,
            "mean_defect": rep.mean_defect,
            "pass": pass,
        }),
        code: verdict(pass),
    })
}

fn parse_pair(spec: &str, n: usize) -> Result<(usize, usize), CliError> {
    let one = |t: &str| -> Result<usize, CliError> {
        let t = t.trim();
        let v = if let Some(rest) = t.strip_prefix('n') {
            let off: usize = if rest.is_empty() {
                0
            } else {
                rest.strip_prefix('-')
                    .and_then(|r| r.parse().ok())
                    .ok_or_else(|| CliError::Usage(format!("bad planet index {t}")))?
            };
            n.saturating_sub(off)
        } else {
            t.parse().map_err(|_| CliError::Usage(format!("bad planet index {t}")))?
        };
        if v == 0 || v > n {
            return Err(CliError::Usage(format!("planet index {t} outside 1..={n}")));
        }
        Ok(v - 1)
    };
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("pair must be i,j; got {spec}")));
    }
    let (i, j) = (one(parts[0])?, one(parts[1])?);
    if i == j {
        return Err(CliError::Usage("pair needs two distinct planets".into()));
    }
    Ok((i, j))
}

pub fn cmd_average(args: &AverageArgs) -> Result<Outcome, CliError> {
    let cfg: SystemConfig = read_json(&args.config)?;
    let (masses, chain, _) = cfg.build()?;
    let (mut i, mut j) = parse_pair(&args.pair, chain.n())?;
    if chain.ellipses[i].a > chain.ellipses[j].a {
        std::mem::swap(&mut i, &mut j);
    }
    check_no_crossing(i, j, &chain)?;
    let grid = QuadratureGrid::new(args.grid)?;
    let f0 = expansion_term(0, i, j, &chain, &masses, grid)?;
    let f1 = expansion_term(1, i, j, &chain, &masses, grid)?;
    let f2 = expansion_term(2, i, j, &chain, &masses, grid)?;
    let closed = quadrupole_closed_form(i, j, &chain, &masses)?;
    let mm = masses.masses[i] * masses.masses[j];
    let aj = chain.ellipses[j].a;
    let f0_exact = -mm / aj;
    let scale = mm * chain.ellipses[i].a / (aj * aj);
    let rel0 = (f0 - f0_exact).abs() / f0_exact.abs();
    let rel2 = (f2 - closed).abs() / closed.abs();
    let order1 = f1.abs() / scale;
    let pass = rel0 <= args.tolerance && rel2 <= args.tolerance && order1 <= 1e-10;
    Ok(Outcome {
        report: json!({
            "command": "average",
            "claim": "doubly averaged expansion terms: order 0 equals -m_i m_j / a_j, order 1 vanishes, order 2 equals the closed-form quadrupole",
            "pair": [i + 1, j + 1],
            "grid": args.grid,
            "tolerance": args.tolerance,
            "order1_tolerance": 1e-10,
            "order0": {"quadrature": f0, "closed_form": f0_exact, "relative_error": rel0},
            "order1": {"quadrature": f1, "scaled": order1},
            "order2": {"quadrature": f2, "closed_form": closed, "relative_error": rel2},
            "pass": pass,
        }),
        code: verdict(pass),
    })
}

pub fn cmd_secular(args: &SecularArgs) -> Result<Outcome, CliError> {
    let pt: SecularPoint = read_json(&args.point_file)?;
    let k = secular_coefficients(&pt)?;
    let opts = FitOptions { degree: args.fit_degree, radius: args.fit_radius, ..FitOptions::default() };
    if opts.degree < 4 {
        return Err(CliError::Usage("--fit-degree must be at least 4".into()));
    }
    let fit = fit_quadrupole(&pt, opts)?;
    let (beta4, a_omega) = quadratic_data(&fit);
    let tau_fit = birkhoff4_oracle(&fit, k.beta)?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let d_e = rel(fit.coeff(0, 0), k.amplitude * k.energy);
    let d_w = rel(a_omega, k.amplitude * k.omega);
    let d_b = rel(beta4, k.beta.powi(4));
    let d_t = rel(tau_fit, k.amplitude * k.tau);
    let (tol_quad, tol_tau) = (1e-6, 1e-5);
    let pass = d_e <= tol_quad && d_w <= tol_quad && d_b <= tol_quad && d_t <= tol_tau;
    Ok(Outcome {
        report: json!({
            "command": "secular",
            "claim": "closed-form equilibrium coefficients A, E, Omega, beta, tau reproduce the Taylor data of the quadrupole term at (Theta, vartheta) = (0, pi)",
            "point": pt,
            "coefficients": k,
            "fit": {"degree": fit.degree, "radius": opts.radius, "nodes": opts.nodes, "residual": fit.residual, "condition": fit.condition},
            "oracle": {"AE": fit.coeff(0, 0), "AOmega": a_omega, "beta4": beta4, "Atau": tau_fit},
            "relative_deltas": {"energy": d_e, "omega": d_w, "beta4": d_b, "tau": d_t},
            "tolerance": {"quadratic": tol_quad, "tau": tol_tau},
            "pass": pass,
        }),
        code: verdict(pass),
    })
}

pub fn cmd_integrate(args: &IntegrateArgs) -> Result<Outcome, CliError> {
    let cfg: SystemConfig = read_json(&args.config)?;
    let (masses, chain, ell) = cfg.build()?;
    let state = chain.state(&masses, &ell)?;
    if args.steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    let mut opts = IntegrateOptions::for_state(&state, &masses, args.steps)?;
    opts.sample_every = args.sample_every;
    if let Some(dt) = args.dt {
        opts.dt = dt;
    }
    if let Some(r) = args.collision_radius {
        opts.collision_radius = r;
    }
    let traj = integrate_and_monitor(&state, &masses, opts)?;
    if let Some(path) = &args.csv {
        let file = fs::File::create(path).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))?;
        traj.write_csv(std::io::BufWriter::new(file))?;
    }
    let samples = traj.times.len();
    let window = args.window.unwrap_or((samples / 5).max(1)).min(samples);
    let summary = traj.summary(window)?;
    let s_max = summary.s_drift.iter().copied().fold(0.0, f64::max);
    let pass = traj.abort.is_none() && summary.energy_drift <= args.energy_tolerance && s_max <= args.momentum_tolerance;
    let code = if traj.abort.is_some() { EXIT_NUMERICAL } else { verdict(pass) };
    Ok(Outcome {
        report: json!({
            "command": "integrate",
            "claim": "energy and the total angular momentum S (hence Z and G) are integrals of the heliocentric flow",
            "dt": opts.dt,
            "steps": args.steps,
            "samples": samples,
            "final_time": traj.times.last().copied().unwrap_or(0.0),
            "abort": traj.abort.as_ref().map(|e| e.to_string()),
            "tolerance": {"energy_drift": args.energy_tolerance, "momentum": args.momentum_tolerance},
            "summary": summary,
            "csv": args.csv.as_ref().map(|p| p.display().to_string()),
            "pass": pass,
        }),
        code,
    })
}

pub fn cmd_diophantine(args: &DiophantineArgs) -> Result<Outcome, CliError> {
    let spec = DiophantineSpec {
        nu_blocks: args.blocks.clone().unwrap_or_else(|| vec![args.omega.len()]),
        gammas: args.gamma.clone(),
        tau: args.tau,
        k_max: args.k_max,
    };
    let rep = diophantine_check(&args.omega, &spec)?;
    let mut report = serde_json::to_value(&rep).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Value::Object(map) = &mut report {
        map.insert("command".into(), json!("diophantine"));
        map.insert(
            "claim".into(),
            json!("|omega . k| >= gamma_j / |k|_1^tau for 0 < |k|_1 <= K, j the first block where k is nonzero"),
        );
        map.insert("tolerance".into(), json!(0.0));
    }
    Ok(Outcome { report, code: verdict(rep.pass) })
}

pub fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Roundtrip(a) => cmd_roundtrip(a),
        Command::Symplectic(a) => cmd_symplectic(a),
        Command::Average(a) => cmd_average(a),
        Command::Secular(a) => cmd_secular(a),
        Command::Integrate(a) => cmd_integrate(a),
        Command::Diophantine(a) => cmd_diophantine(a),
    }
}

/// Parses `args`, runs the subcommand, writes the report and returns the
/// exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            if code == EXIT_PASS {
                let _ = write!(stdout, "{}", e.render());
            } else {
                let _ = write!(stderr, "{}", e.render());
            }
            return code;
        }
    };
    let outcome = match dispatch(&cli) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    let text = match serde_json::to_string_pretty(&outcome.report) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_NUMERICAL;
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = fs::write(path, text + "\n") {
                let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
        None => {
            let _ = writeln!(stdout, "{text}");
        }
    }
    outcome.code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_parsing() {
        assert_eq!(parse_pair("n-1,n", 3).unwrap(), (1, 2));
        assert_eq!(parse_pair("1,3", 3).unwrap(), (0, 2));
        assert!(parse_pair("1,1", 3).is_err());
        assert!(parse_pair("0,1", 3).is_err());
        assert!(parse_pair("n-3,n", 3).is_err());
        assert!(parse_pair("1", 3).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(error_exit_code(&Error::OrbitCrossing { i: 0, j: 1, distance: 0.0 }), EXIT_BREACH);
        assert_eq!(error_exit_code(&Error::NoConvergence("x".into())), EXIT_NUMERICAL);
        assert_eq!(error_exit_code(&Error::Collision("x".into())), EXIT_NUMERICAL);
        assert_eq!(error_exit_code(&Error::InvalidInput("x".into())), EXIT_USAGE);
    }

    #[test]
    fn usage_errors_exit_one() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(run(["perihelia", "roundtrip", "--chart", "deprit"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["perihelia", "roundtrip", "--chart", "p", "--samples", "0"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["perihelia", "symplectic", "--chart", "nope"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["perihelia", "--help"], &mut out, &mut err), EXIT_PASS);
    }
}
