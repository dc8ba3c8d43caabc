//! Command-line driver: Butcher spectra, theorem verification, and heat
//! equation solves, each emitting CSV.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{default_verify_cases, verify_sweep, write_verify_csv, CycleShape, VerifySettings};
use crate::error::{Error, Result};
use crate::fem::{l2_error, Point};
use crate::linalg::GmresOptions;
use crate::multigrid::{build_hierarchy, mg_preconditioned_gmres, MgConfig, MgLevel, SmootherKind};
use crate::stage_system::{rk_update, stage_rhs, ForcingSpec};
use crate::tableau::{spectrum_report, write_spectrum_csv, Family, MAX_STAGES};

#[derive(Debug, Parser)]
#[command(name = "stagemg", version, about = "Monolithic multigrid for implicit Runge-Kutta stage systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues and eigenvector conditioning of Butcher matrices.
    Spectrum(Options),
    /// Check monolithicity and ρ(T) = max ρ(T_i) over a sweep of cases.
    Verify(Options),
    /// One heat-equation time step solved by multigrid-preconditioned GMRES.
    SolveHeat(Options),
    /// Several heat-equation time steps with the error at the final time.
    StepHeat(Options),
}

/// Flags shared by all commands. Any flag may also be given as `key=value`
/// in the `--config` file (keys are flag names without the leading dashes); flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Plain-text `key=value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// radauiia or gauss-legendre.
    #[arg(long)]
    pub family: Option<String>,
    /// Stage count `s`, or an inclusive range `a..b`.
    #[arg(long)]
    pub stages: Option<String>,
    /// Lagrange degree, 1 or 2.
    #[arg(long)]
    pub degree: Option<String>,
    /// Cells per side of the coarsest mesh.
    #[arg(long)]
    pub base_n: Option<String>,
    /// Number of mesh levels.
    #[arg(long)]
    pub levels: Option<String>,
    /// Time step factor: Δt = κ h on the finest mesh.
    #[arg(long)]
    pub kappa: Option<String>,
    /// Fixed time step (overrides --kappa).
    #[arg(long)]
    pub dt: Option<String>,
    /// Number of time steps (step-heat).
    #[arg(long)]
    pub steps: Option<String>,
    /// point-jacobi, block-jacobi or asm-star.
    #[arg(long)]
    pub smoother: Option<String>,
    /// Pre-smoothing steps per level
    #[arg(long)]
    pub nu_pre: Option<String>,
    /// Post-smoothing steps per level
    #[arg(long)]
    pub nu_post: Option<String>,
    /// 1 for V-cycles, 2 for W-cycles.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Smoother damping in (0, 1].
    #[arg(long)]
    pub omega: Option<String>,
    /// Relative residual tolerance (solves) or spectral discrepancy bound (verify).
    #[arg(long)]
    pub tol: Option<String>,
    /// Seed for the random test vectors
    #[arg(long)]
    pub seed: Option<String>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long)]
    pub threads: Option<String>,
}

const CONFIG_KEYS: [&str; 17] = [
    "family", "stages", "degree", "base-n", "levels", "kappa", "dt", "steps", "smoother", "nu-pre", "nu-post",
    "gamma", "omega", "tol", "seed", "out", "threads",
];

/// Parses `key=value` lines; `#` starts a comment. Keys may use `-` or `_`.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value", no + 1)))?;
        let key = k.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::Parse(format!("config line {}: unknown key '{}'", no + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

/// Flag values merged over an optional configuration file.
#[derive(Debug, Clone, Default)]
pub struct ExperimentConfig {
    values: HashMap<String, String>,
}

impl ExperimentConfig {
    pub fn resolve(opts: &Options) -> Result<Self> {
        let mut values = match &opts.config {
            Some(path) => parse_config(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?,
            None => HashMap::new(),
        };
        let flags: [(&str, Option<String>); 17] = [
            ("family", opts.family.clone()),
            ("stages", opts.stages.clone()),
            ("degree", opts.degree.clone()),
            ("base-n", opts.base_n.clone()),
            ("levels", opts.levels.clone()),
            ("kappa", opts.kappa.clone()),
            ("dt", opts.dt.clone()),
            ("steps", opts.steps.clone()),
            ("smoother", opts.smoother.clone()),
            ("nu-pre", opts.nu_pre.clone()),
            ("nu-post", opts.nu_post.clone()),
            ("gamma", opts.gamma.clone()),
            ("omega", opts.omega.clone()),
            ("tol", opts.tol.clone()),
            ("seed", opts.seed.clone()),
            ("out", opts.out.as_ref().map(|p| p.display().to_string())),
            ("threads", opts.threads.clone()),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Parse(format!("invalid value '{v}' for --{key}")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn family(&self) -> Result<Option<Family>> {
        self.raw("family").map(str::parse).transpose()
    }

    pub fn smoother(&self) -> Result<Option<SmootherKind>> {
        self.raw("smoother").map(str::parse).transpose()
    }

    pub fn stages(&self) -> Result<Option<Vec<usize>>> {
        self.raw("stages").map(parse_stage_range).transpose()
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.raw("out").map(PathBuf::from)
    }

    fn mg_config(&self) -> Result<MgConfig> {
        let d = MgConfig::default();
        let cfg = MgConfig {
            nu_pre: self.get_or("nu-pre", d.nu_pre)?,
            nu_post: self.get_or("nu-post", d.nu_post)?,
            gamma: self.get_or("gamma", d.gamma)?,
            omega: self.get_or("omega", d.omega)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `"3"`, `"1..3"` or `"1-3"` (inclusive) within `1..=6`.
pub fn parse_stage_range(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::Parse(format!("invalid stage range '{text}'"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => match text.split_once('-') {
            Some((a, b)) => (num(a)?, num(b)?),
            None => {
                let s = num(text)?;
                (s, s)
            }
        },
    };
    if lo == 0 || lo > hi || hi > MAX_STAGES {
        return Err(Error::InvalidArgument(format!(
            "stage range {lo}..{hi} must lie within 1..{MAX_STAGES}"
        )));
    }
    Ok((lo..=hi).collect())
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn io_error(path: Option<&Path>, e: io::Error) -> Error {
    Error::io(path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf), e)
}

/// Manufactured heat solution `u = sin(πx) sin(πy) e^{−t}`.
pub fn heat_exact(p: Point, t: f64) -> f64 {
    (PI * p[0]).sin() * (PI * p[1]).sin() * (-t).exp()
}

/// Forcing `f = u_t − Δu = (2π² − 1) u` for [`heat_exact`].
pub fn heat_forcing(p: Point, t: f64) -> f64 {
    (2.0 * PI * PI - 1.0) * heat_exact(p, t)
}

/// Parameters of a heat-equation solve.
#[derive(Debug, Clone)]
pub struct HeatParams {
    pub family: Family,
    pub stages: usize,
    pub degree: usize,
    pub base_n: usize,
    pub levels: usize,
    pub dt: f64,
    pub smoother: SmootherKind,
    pub cfg: MgConfig,
    pub tol: f64,
}

impl HeatParams {
    /// `Δt = κ h`, with `h` the cell width of the finest mesh.
    pub fn kappa_dt(kappa: f64, base_n: usize, levels: usize) -> f64 {
        kappa / (base_n as f64 * 2f64.powi(levels as i32 - 1))
    }

    pub fn hierarchy(&self) -> Result<Vec<MgLevel>> {
        let tableau = self.family.tableau(self.stages)?;
        build_hierarchy(self.base_n, self.levels, self.degree, &tableau, self.dt, self.smoother)
    }

    fn gmres_options(&self) -> GmresOptions {
        GmresOptions {
            tol: self.tol,
            ..GmresOptions::default()
        }
    }
}

/// Outcome of one multigrid-preconditioned stage solve.
#[derive(Debug, Clone)]
pub struct HeatSolveRow {
    pub stages: usize,
    pub degree: usize,
    pub levels: usize,
    /// Spatial dofs on the finest level.
    pub dofs: usize,
    pub iterations: usize,
    pub final_residual: f64,
    pub true_residual: f64,
    pub converged: bool,
    pub solve_seconds: f64,
}

/// Solves the stage system of the first time step from the interpolated
/// manufactured initial condition.
pub fn solve_heat_step(params: &HeatParams) -> Result<HeatSolveRow> {
    let levels = params.hierarchy()?;
    let fine = levels.last().expect("nonempty hierarchy");
    let space = Arc::clone(&fine.space);
    let u0 = space.interpolate(|p| heat_exact(p, 0.0));
    let forcing = ForcingSpec::new(Arc::clone(&space), heat_forcing);
    let load = stage_rhs(&forcing, 0.0, fine.sys.tableau(), params.dt)?;
    let rhs = fine.sys.step_rhs(&load, &u0)?;
    let start = Instant::now();
    let (_, _, tel) = mg_preconditioned_gmres(&levels, &params.cfg, &rhs, &params.gmres_options())?;
    Ok(HeatSolveRow {
        stages: params.stages,
        degree: params.degree,
        levels: params.levels,
        dofs: space.ndof(),
        iterations: tel.iterations,
        final_residual: tel.final_residual,
        true_residual: tel.true_residual,
        converged: tel.converged,
        solve_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Outcome of a multi-step heat run.
#[derive(Debug, Clone)]
pub struct HeatStepRow {
    pub stages: usize,
    pub dofs: usize,
    pub steps: usize,
    pub t_final: f64,
    pub l2_error: f64,
    pub gmres_iterations: usize,
    pub converged: bool,
}

/// Runs `steps` time steps with forcing `f` from `u0`, solving each stage
/// system by multigrid-preconditioned GMRES. Returns the final solution,
/// total GMRES iterations, and whether every solve converged.
pub fn integrate_heat(
    params: &HeatParams,
    levels: &[MgLevel],
    u0: &[f64],
    f: impl Fn(Point, f64) -> f64 + Send + Sync + 'static,
    steps: usize,
) -> Result<(Vec<f64>, usize, bool)> {
    let fine = levels.last().ok_or_else(|| Error::InvalidArgument("empty hierarchy".into()))?;
    let forcing = ForcingSpec::new(Arc::clone(&fine.space), f);
    let mut u = u0.to_vec();
    let mut iterations = 0;
    let mut converged = true;
    for step in 0..steps {
        let t_n = step as f64 * params.dt;
        let load = stage_rhs(&forcing, t_n, fine.sys.tableau(), params.dt)?;
        let rhs = fine.sys.step_rhs(&load, &u)?;
        let (k, _, tel) = mg_preconditioned_gmres(levels, &params.cfg, &rhs, &params.gmres_options())?;
        iterations += tel.iterations;
        converged &= tel.converged;
        u = rk_update(&u, &k, fine.sys.tableau(), params.dt)?;
    }
    Ok((u, iterations, converged))
}

/// Time steps the manufactured heat problem and measures the final L² error.
pub fn step_heat(params: &HeatParams, steps: usize) -> Result<HeatStepRow> {
    let levels = params.hierarchy()?;
    let space = Arc::clone(&levels.last().expect("nonempty hierarchy").space);
    let u0 = space.interpolate(|p| heat_exact(p, 0.0));
    let (u, gmres_iterations, converged) = integrate_heat(params, &levels, &u0, heat_forcing, steps)?;
    let t_final = steps as f64 * params.dt;
    Ok(HeatStepRow {
        stages: params.stages,
        dofs: space.ndof(),
        steps,
        t_final,
        l2_error: l2_error(&space, &u, |p| heat_exact(p, t_final))?,
        gmres_iterations,
        converged,
    })
}

fn heat_params(cfg: &ExperimentConfig, stages: usize, default_levels: usize, default_kappa: f64) -> Result<HeatParams> {
    let smoother = cfg.smoother()?.unwrap_or(SmootherKind::AsmStar);
    let base_n = cfg.get_or("base-n", 4)?;
    let levels = cfg.get_or("levels", default_levels)?;
    let dt = match cfg.get::<f64>("dt")? {
        Some(dt) => dt,
        None => HeatParams::kappa_dt(cfg.get_or("kappa", default_kappa)?, base_n, levels),
    };
    Ok(HeatParams {
        family: cfg.family()?.unwrap_or(Family::RadauIIA),
        stages,
        degree: cfg.get_or("degree", 1)?,
        base_n,
        levels,
        dt,
        smoother,
        cfg: cfg.mg_config()?,
        tol: cfg.get_or("tol", 1e-8)?,
    })
}

pub const SOLVE_HEAT_CSV_HEADER: &str = "s,degree,levels,dofs,iterations,final_residual,solve_seconds,converged";
pub const STEP_HEAT_CSV_HEADER: &str = "s,family,degree,levels,dofs,dt,steps,t_final,l2_error,gmres_iterations,converged";

fn cmd_spectrum(cfg: &ExperimentConfig) -> Result<i32> {
    let families = match cfg.family()? {
        Some(f) => vec![f],
        None => vec![Family::RadauIIA, Family::GaussLegendre],
    };
    let stages = cfg.stages()?.unwrap_or_else(|| (1..=MAX_STAGES).collect());
    let (lo, hi) = (stages[0], *stages.last().expect("nonempty range"));
    let mut rows = Vec::new();
    for f in families {
        rows.extend(spectrum_report(f, lo..=hi)?);
    }
    let out = cfg.out();
    let mut w = open_output(out.as_deref())?;
    write_spectrum_csv(&rows, &mut w)
        .and_then(|()| w.flush())
        .map_err(|e| io_error(out.as_deref(), e))?;
    Ok(0)
}

fn cmd_verify(cfg: &ExperimentConfig) -> Result<i32> {
    let family = cfg.family()?;
    let stages = cfg.stages()?;
    let degree: Option<usize> = cfg.get("degree")?;
    let levels: Option<usize> = cfg.get("levels")?;
    let smoother = cfg.smoother()?;
    let mut cases = default_verify_cases();
    cases.retain(|c| {
        family.is_none_or(|f| c.family == f)
            && stages.as_ref().is_none_or(|s| s.contains(&c.stages))
            && degree.is_none_or(|d| c.degree == d)
            && levels.is_none_or(|l| c.cycle.levels() == l)
    });
    if let Some(kind) = smoother {
        // replace the smoother pair with the requested one
        cases.retain(|c| c.smoother == SmootherKind::BlockJacobi);
        cases.iter_mut().for_each(|c| c.smoother = kind);
    }
    if let Some(l) = levels {
        if ![CycleShape::TwoGrid, CycleShape::VCycle3].iter().any(|c| c.levels() == l) {
            return Err(Error::InvalidArgument(format!("verify supports 2 or 3 levels, got {l}")));
        }
    }
    if cases.is_empty() {
        return Err(Error::InvalidArgument("no verification cases match the filters".into()));
    }
    let d = VerifySettings::default();
    let settings = VerifySettings {
        base_n: cfg.get_or("base-n", d.base_n)?,
        dt: cfg.get_or("dt", d.dt)?,
        cfg: cfg.mg_config()?,
        tol: cfg.get_or("tol", d.tol)?,
        monolithic_tol: d.monolithic_tol,
        seed: cfg.get_or("seed", d.seed)?,
    };
    let rows = verify_sweep(&cases, &settings)?;
    let out = cfg.out();
    let mut w = open_output(out.as_deref())?;
    write_verify_csv(&rows, &mut w)
        .and_then(|()| w.flush())
        .map_err(|e| io_error(out.as_deref(), e))?;
    let failed: Vec<_> = rows.iter().filter(|r| !r.passed()).collect();
    for r in &failed {
        eprintln!("FAIL {}: {}", r.case.label(), r.failures.join("; "));
    }
    eprintln!("verify: {} of {} cases passed", rows.len() - failed.len(), rows.len());
    Ok(i32::from(!failed.is_empty()))
}

fn cmd_solve_heat(cfg: &ExperimentConfig) -> Result<i32> {
    let stages = cfg.stages()?.unwrap_or_else(|| vec![1, 2, 3]);
    let out = cfg.out();
    let mut w = open_output(out.as_deref())?;
    let mut all_converged = true;
    writeln!(w, "{SOLVE_HEAT_CSV_HEADER}").map_err(|e| io_error(out.as_deref(), e))?;
    for s in stages {
        let row = solve_heat_step(&heat_params(cfg, s, 3, 4.0)?)?;
        all_converged &= row.converged;
        writeln!(
            w,
            "{},{},{},{},{},{:.16e},{:.6},{}",
            row.stages,
            row.degree,
            row.levels,
            row.dofs,
            row.iterations,
            row.final_residual,
            row.solve_seconds,
            row.converged
        )
        .map_err(|e| io_error(out.as_deref(), e))?;
    }
    w.flush().map_err(|e| io_error(out.as_deref(), e))?;
    Ok(i32::from(!all_converged))
}

fn cmd_step_heat(cfg: &ExperimentConfig) -> Result<i32> {
    let stages = cfg.stages()?.unwrap_or_else(|| vec![1]);
    let steps = cfg.get_or("steps", 8)?;
    let out = cfg.out();
    let mut w = open_output(out.as_deref())?;
    let mut all_converged = true;
    writeln!(w, "{STEP_HEAT_CSV_HEADER}").map_err(|e| io_error(out.as_deref(), e))?;
    for s in stages {
        let params = heat_params(cfg, s, 2, 1.0)?;
        let row = step_heat(&params, steps)?;
        all_converged &= row.converged;
        writeln!(
            w,
            "{},{},{},{},{},{:.16e},{},{:.16e},{:.16e},{},{}",
            row.stages,
            params.family,
            params.degree,
            params.levels,
            row.dofs,
            params.dt,
            row.steps,
            row.t_final,
            row.l2_error,
            row.gmres_iterations,
            row.converged
        )
        .map_err(|e| io_error(out.as_deref(), e))?;
    }
    w.flush().map_err(|e| io_error(out.as_deref(), e))?;
    Ok(i32::from(!all_converged))
}

/// Runs a parsed command line. Returns the process exit status: 0 when every
/// check of the command passed, 1 otherwise.
pub fn run(cli: &Cli) -> Result<i32> {
    let opts = match &cli.command {
        Command::Spectrum(o) | Command::Verify(o) | Command::SolveHeat(o) | Command::StepHeat(o) => o,
    };
    let cfg = ExperimentConfig::resolve(opts)?;
    if let Some(threads) = cfg.get::<usize>("threads")? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("cannot configure {threads} threads: {e}")))?;
    }
    match &cli.command {
        Command::Spectrum(_) => cmd_spectrum(&cfg),
        Command::Verify(_) => cmd_verify(&cfg),
        Command::SolveHeat(_) => cmd_solve_heat(&cfg),
        Command::StepHeat(_) => cmd_step_heat(&cfg),
    }
}
