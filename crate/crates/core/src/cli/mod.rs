//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 computation failure, 2 usage or config error,
//! 3 infeasible request.

pub mod config;
pub mod verify;

use crate::ansatz::{build_adjustments, residual_shape_check, Anchor, AnsatzConfig};
use crate::base::Tolerances;
use crate::eigensolver::{decay_check, solve_lambda0, EigenGrid};
use crate::error::{BblError, Result};
use crate::kernels::{bound_ratio, BoundFamily, FamilyId};
use crate::modulation::{backward_grid, build_trajectory, ModulationParams};
use crate::simulator::{fit_rate, run, seed_with_ansatz, type1_field, CylGrid, SolverState, StopRule, TypeISpec};
use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand, ValueEnum};
use config::{Config, InitialKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "bbl", version, about = "Half-space critical Neumann heat flow laboratory")]
pub struct Cli {
    /// Worker threads; BBL_THREADS takes precedence. Default: all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = "bbl-out")]
    pub out: PathBuf,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Print the resolved configuration and stop.
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Family {
    BeyondNeumann,
    NeumannSelfsim,
    NeumannOutside,
    RhsSelfsim,
}

impl From<Family> for FamilyId {
    fn from(f: Family) -> Self {
        match f {
            Family::BeyondNeumann => FamilyId::BeyondNeumann,
            Family::NeumannSelfsim => FamilyId::NeumannSelfsim,
            Family::NeumannOutside => FamilyId::NeumannOutside,
            Family::RhsSelfsim => FamilyId::RhsSelfsim,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an invariant battery: profiles, caloric, spectral, kernels or ansatz.
    Verify {
        suite: String,
        /// Factor applied to the quadrature and eigen tolerances.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Negative eigenpair of the linearized boundary problem.
    Lambda0 {
        #[arg(long)]
        n: Option<usize>,
        /// Largest cell size.
        #[arg(long)]
        grid: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Leading scale law and its trajectory over the configured decades.
    Modulation {
        #[arg(long)]
        l: Option<u32>,
        #[arg(long = "T")]
        big_t: Option<f64>,
        #[arg(long = "R")]
        r_cut: Option<f64>,
    },
    /// Window-by-window sup ratios of the single-bubble residuals.
    AnsatzResidual {
        #[arg(long)]
        l: Option<u32>,
        #[arg(long = "T")]
        big_t: Option<f64>,
        #[arg(long)]
        decades: Option<f64>,
    },
    /// Finite-difference run from the configured initial data.
    Simulate,
    /// Blow-up rate fit of a `t,sup_u` series.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
    /// Vanishing adjustment functions at the points of a CSV file.
    Adjust {
        /// CSV of tangential coordinates, one point per row, with a header.
        #[arg(long)]
        points_file: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: u32,
        #[arg(long, default_value_t = 0.1)]
        d: f64,
        #[arg(long)]
        time: f64,
    },
    /// Sup ratio of a Duhamel term against its claimed bound.
    Boundcheck {
        #[arg(long, value_enum)]
        family: Family,
        /// Comma-separated `key=value` pairs.
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Configuration utilities.
    Config {
        #[arg(long)]
        print_defaults: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Verify { .. } => "verify",
            Command::Lambda0 { .. } => "lambda0",
            Command::Modulation { .. } => "modulation",
            Command::AnsatzResidual { .. } => "ansatz-residual",
            Command::Simulate => "simulate",
            Command::Fit { .. } => "fit",
            Command::Adjust { .. } => "adjust",
            Command::Boundcheck { .. } => "boundcheck",
            Command::Config { .. } => "config",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub tool_version: String,
    pub outputs: Vec<PathBuf>,
}

pub fn exit_code(e: &BblError) -> i32 {
    match e {
        BblError::InvalidArgument(_) | BblError::Config(_) => EXIT_USAGE,
        BblError::Infeasible(_) => EXIT_INFEASIBLE,
        _ => EXIT_COMPUTE,
    }
}

/// Output sink: files go under `dir` and are recorded for the manifest.
struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(io_err)?;
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(io_err)?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let s = serde_json::to_string_pretty(v).map_err(|e| BblError::Io(e.to_string()))?;
        self.write(name, s.as_bytes())
    }
}

fn io_err(e: std::io::Error) -> BblError {
    BblError::Io(e.to_string())
}

fn config_hash(cfg: &Config) -> String {
    Sha256::digest(cfg.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Merges the command's flags into the configuration.
fn resolve(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| BblError::Config(format!("{}: {e}", p.display())))?;
            Config::from_toml(&text)?
        }
        None => Config::default(),
    };
    match &cli.command {
        Command::Verify { tol_scale, .. } => {
            if !(*tol_scale > 0.0) {
                return Err(BblError::InvalidArgument("--tol-scale must be positive".into()));
            }
            cfg.tolerances = cfg.tolerances.scaled(*tol_scale);
        }
        Command::Lambda0 { n, grid, radius } => {
            let s = &mut cfg.lambda0;
            s.n = n.unwrap_or(s.n);
            s.grid = grid.unwrap_or(s.grid);
            s.radius = radius.unwrap_or(s.radius);
        }
        Command::Modulation { l, big_t, r_cut } => {
            let s = &mut cfg.modulation;
            s.l = l.unwrap_or(s.l);
            s.big_t = big_t.unwrap_or(s.big_t);
            s.r_cut = r_cut.or(s.r_cut);
        }
        Command::AnsatzResidual { l, big_t, decades } => {
            let s = &mut cfg.ansatz;
            s.l = l.unwrap_or(s.l);
            s.big_t = big_t.unwrap_or(s.big_t);
            s.decades = decades.unwrap_or(s.decades);
        }
        _ => {}
    }
    cfg.tolerances.validate()?;
    Ok(cfg)
}

fn thread_count(flag: Option<usize>) -> Result<usize> {
    match std::env::var("BBL_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| BblError::Config(format!("BBL_THREADS must be a count, got '{v}'"))),
        Err(_) => Ok(flag.unwrap_or(0)),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let started = Utc::now();
    let cfg = resolve(cli)?;
    if let Command::Config { print_defaults } = cli.command {
        if print_defaults {
            print!("{}", Config::default().to_toml());
        } else {
            print!("{}", cfg.to_toml());
        }
        return Ok(EXIT_OK);
    }
    let threads = thread_count(cli.threads)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| BblError::Config(e.to_string()))?;
    let mut out = Outputs { dir: cli.out.clone(), files: Vec::new() };
    let code = if cli.dry_run {
        print!("{}", cfg.to_toml());
        EXIT_OK
    } else {
        pool.install(|| dispatch(cli, &cfg, &mut out))?
    };
    let manifest = RunManifest {
        command: std::iter::once("bbl".to_string()).chain(command_line(cli)).collect::<Vec<_>>().join(" "),
        config_hash: config_hash(&cfg),
        seed: cli.seed,
        started,
        finished: Utc::now(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: out.files.clone(),
    };
    let name = match &cli.command {
        Command::Verify { suite, .. } => format!("verify_{suite}.manifest.json"),
        c => format!("{}.manifest.json", c.name()),
    };
    out.json(&name, &manifest)?;
    Ok(code)
}

fn command_line(cli: &Cli) -> Vec<String> {
    let mut v = vec![cli.command.name().to_string()];
    match &cli.command {
        Command::Verify { suite, .. } => v.push(suite.clone()),
        Command::Fit { input } => v.push(input.display().to_string()),
        Command::Adjust { points_file, .. } => v.push(points_file.display().to_string()),
        Command::Boundcheck { family, params, samples } => {
            v.push(FamilyId::from(*family).name().to_string());
            v.push(params.clone());
            v.push(samples.to_string());
        }
        _ => {}
    }
    v
}

fn dispatch(cli: &Cli, cfg: &Config, out: &mut Outputs) -> Result<i32> {
    let tol = &cfg.tolerances;
    match &cli.command {
        Command::Verify { suite, .. } => cmd_verify(suite, cli.seed, tol, out),
        Command::Lambda0 { .. } => cmd_lambda0(cfg, out),
        Command::Modulation { .. } => cmd_modulation(cfg, out),
        Command::AnsatzResidual { .. } => cmd_ansatz_residual(cfg, cli.seed, out),
        Command::Simulate => cmd_simulate(cfg, out),
        Command::Fit { input } => cmd_fit(input, cfg, out),
        Command::Adjust { points_file, order, d, time } => cmd_adjust(points_file, *order, *d, *time, cfg, out),
        Command::Boundcheck { family, params, samples } => cmd_boundcheck(*family, params, *samples, cli.seed, cfg, out),
        Command::Config { .. } => unreachable!("handled before dispatch"),
    }
}

fn cmd_verify(suite: &str, seed: u64, tol: &Tolerances, out: &mut Outputs) -> Result<i32> {
    let rows = verify::run_suite(suite, seed, tol)?;
    print!("{}", verify::format_table(&rows));
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize((&r.check, r.residual, r.tolerance, r.passed())).map_err(|e| BblError::Io(e.to_string()))?;
    }
    let mut body = b"check,max_residual,tolerance,passed\n".to_vec();
    body.extend(w.into_inner().map_err(|e| BblError::Io(e.to_string()))?);
    out.write(&format!("verify_{suite}.csv"), &body)?;
    Ok(if rows.iter().all(|r| r.passed()) { EXIT_OK } else { EXIT_COMPUTE })
}

fn cmd_lambda0(cfg: &Config, out: &mut Outputs) -> Result<i32> {
    let s = &cfg.lambda0;
    if s.n < 3 {
        return Err(BblError::InvalidArgument(format!("dimension must be at least 3, got {}", s.n)));
    }
    let grid = EigenGrid::graded(s.radius, 0.1 * s.grid, s.ratio, s.grid)?;
    let res = solve_lambda0(s.n, &grid, &cfg.tolerances)?;
    let decay = decay_check(&res, s.nu_fraction)?;
    println!("lambda0 = {:.10e}", res.lambda0);
    println!("gap     = {:.6e}", res.gap);
    println!("decay   = {:.6e} (required {:.6e})", decay.rate, decay.required);
    out.json("lambda0.json", &res)?;
    out.write("z0.csv", res.to_csv().as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_modulation(cfg: &Config, out: &mut Outputs) -> Result<i32> {
    let s = &cfg.modulation;
    let p = ModulationParams::new(s.l, s.big_t, s.r_cut, s.n, &cfg.tolerances)?;
    let tau_max = 0.5 * s.big_t;
    let times = backward_grid(s.big_t, tau_max * 10f64.powf(-s.decades), tau_max, s.per_decade)?;
    let zero = vec![0.0; times.len()];
    let traj = build_trajectory(&p, &times, &zero, &zero)?;
    let (d, k) = p.law();
    println!("A_R = {:.10e}  (R = {})", p.a_r, p.r_cut);
    println!("mu_0 = {d:.6e} (T-t)^{k}");
    out.write("modulation.csv", traj.to_csv(&p)?.as_bytes())?;
    out.json("modulation.json", &p)?;
    Ok(EXIT_OK)
}

fn cmd_ansatz_residual(cfg: &Config, seed: u64, out: &mut Outputs) -> Result<i32> {
    let s = &cfg.ansatz;
    let acfg = AnsatzConfig::new(5, s.big_t, vec![Anchor { q: vec![0.0; 4], l: s.l }], Some(s.delta), s.r_cut)?;
    let hi = 0.1 * s.big_t;
    let rep = residual_shape_check(&acfg, 0, s.samples, (hi * 10f64.powf(-s.decades), hi), seed, &cfg.tolerances)?;
    for r in &rep.regions {
        let vals: Vec<String> = r.per_window.iter().map(|v| v.map_or("-".into(), |x| format!("{x:.3e}"))).collect();
        println!("{:<9} {}", r.name, vals.join(" "));
    }
    println!("largest window-to-window change: {:.3} ({})", rep.max_change, if rep.passed() { "PASS" } else { "FAIL" });
    out.write("ansatz_residual.csv", rep.to_csv().as_bytes())?;
    out.json("ansatz_residual.json", &rep)?;
    Ok(EXIT_OK)
}

fn cmd_simulate(cfg: &Config, out: &mut Outputs) -> Result<i32> {
    let s = &cfg.simulate;
    let g = &s.grid;
    let grid = CylGrid::new(g.dim, g.nr, g.nz, g.r_max, g.h_max)?;
    let init = &s.initial;
    let field = match init.kind {
        InitialKind::TypeI => {
            let spec = TypeISpec::new(init.alpha, init.p, init.big_t, &cfg.tolerances)?;
            type1_field(&spec, &grid, init.t0, &cfg.tolerances)?
        }
        InitialKind::Ansatz => {
            let acfg = AnsatzConfig::new(g.dim, init.big_t, vec![Anchor { q: vec![0.0; g.dim - 1], l: init.l }], None, None)?;
            seed_with_ansatz(&acfg, init.t0, &grid, &cfg.tolerances)?
        }
    };
    let state = SolverState::new(grid, field, init.t0)?;
    let stop = StopRule { t_end: s.stop.t_end, sup_threshold: s.stop.sup_threshold };
    let res = run(state, &s.run, &stop)?;
    println!("outcome: {:?} after {} steps, t = {:.9e}, sup|u| = {:.6e}", res.outcome, res.state.step_count, res.state.t, res.state.sup());
    out.write("series.csv", res.to_csv()?.as_bytes())?;
    out.json("outcome.json", &res.outcome)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Deserialize)]
struct SeriesIn {
    t: f64,
    sup_u: f64,
}

fn cmd_fit(input: &Path, cfg: &Config, out: &mut Outputs) -> Result<i32> {
    let mut rd = csv::Reader::from_path(input).map_err(|e| BblError::InvalidArgument(format!("{}: {e}", input.display())))?;
    let mut t = Vec::new();
    let mut sup = Vec::new();
    for row in rd.deserialize::<SeriesIn>() {
        let row = row.map_err(|e| BblError::InvalidArgument(format!("{}: {e}", input.display())))?;
        t.push(row.t);
        sup.push(row.sup_u);
    }
    let fit = fit_rate(&t, &sup, cfg.fit.window_fraction)?;
    println!("T_est = {:.10e}  exponent = {:.6}  r2 = {:.8}", fit.t_est, fit.exponent, fit.r2);
    out.json("fit.json", &fit)?;
    Ok(EXIT_OK)
}

fn cmd_adjust(points_file: &Path, order: u32, d: f64, time: f64, cfg: &Config, out: &mut Outputs) -> Result<i32> {
    let mut rd = csv::Reader::from_path(points_file).map_err(|e| BblError::InvalidArgument(format!("{}: {e}", points_file.display())))?;
    let mut points = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| BblError::InvalidArgument(e.to_string()))?;
        let p: std::result::Result<Vec<f64>, _> = rec.iter().map(|v| v.trim().parse::<f64>()).collect();
        points.push(p.map_err(|e| BblError::InvalidArgument(format!("bad coordinate: {e}")))?);
    }
    let set = build_adjustments(&points, order, d, time, &cfg.tolerances)?;
    let defect = set.kronecker_defect(cfg.adjust.nodes)?;
    println!("{} functions, Kronecker defect {defect:.3e}", set.coeffs.len());
    out.json("adjust.json", &set)?;
    Ok(EXIT_OK)
}

/// Parses `a=1,b=2.5`.
fn parse_params(s: &str) -> Result<Vec<(String, f64)>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (k, v) = p.split_once('=').ok_or_else(|| BblError::InvalidArgument(format!("expected key=value, got '{p}'")))?;
            let v = v.trim().parse::<f64>().map_err(|_| BblError::InvalidArgument(format!("bad value in '{p}'")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn cmd_boundcheck(family: Family, params: &str, samples: usize, seed: u64, cfg: &Config, out: &mut Outputs) -> Result<i32> {
    let parsed = parse_params(params)?;
    let refs: Vec<(&str, f64)> = parsed.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let fam = BoundFamily::new(family.into(), &refs);
    let rep = bound_ratio(&fam, cfg.boundcheck.n, samples, seed)?;
    println!("{}: sup ratio {:.6e} over {} samples", fam.family_id.name(), rep.sup_ratio, rep.samples.len());
    let mut buf = Vec::new();
    rep.write_csv(&mut buf)?;
    out.write(&format!("boundcheck_{}.csv", fam.family_id.name()), &buf)?;
    std::io::stdout().flush().map_err(io_err)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_parse() {
        assert_eq!(parse_params("a=1, b = 2.5,").unwrap(), vec![("a".into(), 1.0), ("b".into(), 2.5)]);
        assert!(parse_params("a").is_err());
        assert!(parse_params("a=x").is_err());
        assert!(parse_params("").unwrap().is_empty());
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&BblError::Config("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&BblError::Infeasible("x".into())), EXIT_INFEASIBLE);
        assert_eq!(exit_code(&BblError::Eigen("x".into())), EXIT_COMPUTE);
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from(["bbl", "modulation", "--l", "2", "--T", "0.001"]).unwrap();
        let cfg = resolve(&cli).unwrap();
        assert_eq!((cfg.modulation.l, cfg.modulation.big_t), (2, 0.001));
        assert_eq!(cfg.lambda0, config::Lambda0Section::default());
    }
}
