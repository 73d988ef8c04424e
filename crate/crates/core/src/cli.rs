//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::acceptance::{run_acceptance_with, Suite};
use crate::error::{invalid, Error, Result};
use crate::geometry::{
    check_embeddings, check_intertwining, check_scaling_bounds, distance_d, doubling_ratio, find_kappa,
    region_volume, DegeneracyParams, Point, Region, Sign, VolumeMethod,
};
use crate::heat::{
    crossing_mass, default_domain, evolve_kernel, fit_gaussian_bounds, kernel_symmetry_check, ondiag_lower,
};
use crate::report::{config, to_value, Format, Report};
use crate::sde::{bundled_test_functions, dt_refinement, ends_transform_check, simulate_hitting, HittingExperiment};
use crate::spectral::{chi_log, chi_n_rayleigh, poincare_constant, poincare_sweep, Conductance, Family, Resolution};

#[derive(Parser, Debug)]
#[command(name = "degenlab", version, about = "Experiments for degenerate-elliptic operators")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    m: usize,
    #[arg(long, default_value_t = 0.0)]
    d1: f64,
    #[arg(long, default_value_t = 0.0)]
    d1p: f64,
    #[arg(long, default_value_t = 0.0)]
    d2: f64,
    #[arg(long, default_value_t = 0.0)]
    d2p: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    #[serde(skip)]
    jobs: Option<usize>,
}

impl Common {
    fn params(&self) -> Result<DegeneracyParams> {
        DegeneracyParams::new(self.n, self.m, self.d1, self.d1p, self.d2, self.d2p)
    }
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum FamilyArg {
    Cube,
    Ball,
    Halfball,
    Interval,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum SignArg {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum CondArg {
    Harmonic,
    Midpoint,
}

#[derive(Args, Debug, Serialize)]
struct Mesh {
    /// Cells per axis.
    #[arg(long, default_value_t = 1025)]
    grid: usize,
    /// Graded line mesh `core:growth` instead of a uniform one.
    #[arg(long)]
    graded: Option<String>,
    #[arg(long, value_enum, default_value_t = CondArg::Harmonic)]
    conductance: CondArg,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Quasi-distance between two points.
    Distance {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        a: DistanceArgs,
    },
    /// Volume of a ball (`--r`) or cube (`--t`).
    Volume {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        a: VolumeArgs,
    },
    /// Ball doubling ratios over a list of radii.
    Doubling {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        a: DoublingArgs,
    },
    /// Seeded inequality suites.
    Checks {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        a: ChecksArgs,
    },
    /// Poincare constant of one region.
    Poincare {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        a: PoincareArgs,
    },
    /// Poincare constants over a radius sweep.
    Sweep {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        a: SweepArgs,
    },
    /// Rayleigh quotients of the cut-off test functions.
    Counterexample {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        a: CounterArgs,
    },
    /// Heat kernel columns, on-diagonal bounds, Gaussian fits, symmetry.
    Heat {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        a: HeatArgs,
    },
    /// Heat mass crossing to `x1 < 0`.
    Crossing {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        a: CrossingArgs,
    },
    /// Hitting probabilities of the diffusion with coefficient (1 v |x|)^(2 d').
    Sde {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        a: SdeArgs,
    },
    /// Change of variables to the two-ended measure.
    Ends {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        a: EndsArgs,
    },
    /// Pinned acceptance suite.
    Accept {
        #[command(flatten)]
        c: Common,
        #[arg(value_parser = ["geometry", "spectral", "heat", "sde", "all"])]
        suite: String,
    },
}

#[derive(Args, Debug, Serialize)]
struct DistanceArgs {
    /// Comma list of n + m coordinates.
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Grid,
    Mc,
}

#[derive(Args, Debug, Serialize)]
struct VolumeArgs {
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    /// Ball centre; the origin by default.
    #[arg(long)]
    x: Option<String>,
    #[arg(long, default_value_t = 256)]
    grid: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Grid)]
    method: MethodArg,
    /// Monte Carlo samples.
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
}

#[derive(Args, Debug, Serialize)]
struct DoublingArgs {
    /// `a:b:geometric:k`, `a:b:linear:k` or a comma list.
    #[arg(long)]
    radii: String,
    #[arg(long)]
    x: Option<String>,
    #[arg(long, default_value_t = 256)]
    grid: usize,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum CheckSuite {
    Scaling,
    Embedding,
    Kappa,
    Intertwining,
}

#[derive(Args, Debug, Serialize)]
struct ChecksArgs {
    #[arg(long, value_enum)]
    suite: CheckSuite,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Use the parameters given on the command line instead of drawing them per trial.
    #[arg(long)]
    fixed: bool,
    /// Kappa for the ball-in-cube embedding (needs `--fixed`).
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct PoincareArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Radius: ball radius, cube `t`, interval half-width.
    #[arg(long)]
    r: f64,
    #[arg(long)]
    x: Option<String>,
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    sign: SignArg,
    #[command(flatten)]
    mesh: Mesh,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    radii: String,
    #[arg(long)]
    x: Option<String>,
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    sign: SignArg,
    #[command(flatten)]
    mesh: Mesh,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum CounterKind {
    ChiN,
    ChiLog,
}

#[derive(Args, Debug, Serialize)]
struct CounterArgs {
    #[arg(long, value_enum, default_value_t = CounterKind::ChiN)]
    kind: CounterKind,
    /// `n` values for chi-n, `t` values for chi-log (same syntax as radii).
    #[arg(long)]
    values: String,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum HeatMode {
    Kernel,
    Ondiag,
    Fit,
    Symmetry,
}

#[derive(Args, Debug, Serialize)]
struct HeatArgs {
    #[arg(long, value_enum, default_value_t = HeatMode::Kernel)]
    mode: HeatMode,
    /// Source point (comma list); the origin by default.
    #[arg(long)]
    x: Option<String>,
    /// Second point for `--mode symmetry`.
    #[arg(long)]
    y: Option<String>,
    #[arg(long, default_value_t = 0.25)]
    t: f64,
    /// Time list for `ondiag` and `fit`.
    #[arg(long)]
    times: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Time steps per run for `ondiag` and `fit`.
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 2049)]
    grid: usize,
}

#[derive(Args, Debug, Serialize)]
struct CrossingArgs {
    /// Start point `x0 > 0`.
    #[arg(long, default_value_t = 0.5)]
    x: f64,
    #[arg(long, default_value_t = 0.5)]
    t: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 4097)]
    grid: usize,
}

#[derive(Args, Debug, Serialize)]
struct SdeArgs {
    #[arg(long, default_value_t = 0.0)]
    deltap: f64,
    #[arg(long, default_value_t = 5.0)]
    x0: f64,
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    #[arg(long, default_value_t = 10.0)]
    b: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Also run `dt/2` on the same increments.
    #[arg(long)]
    refine: bool,
}

#[derive(Args, Debug, Serialize)]
struct EndsArgs {
    /// Quadrature tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 4 {
        let a: f64 = num(parts[0])?;
        let b: f64 = num(parts[1])?;
        let k: usize = parts[3].trim().parse().map_err(|_| Error::Invalid(format!("bad count '{}'", parts[3])))?;
        if k < 2 || !(a < b) {
            return invalid(format!("range '{s}' needs a < b and at least 2 points"));
        }
        let f = |i: usize| i as f64 / (k - 1) as f64;
        return match parts[2] {
            "geometric" if a > 0.0 => Ok((0..k).map(|i| if i == k - 1 { b } else { a * (b / a).powf(f(i)) }).collect()),
            "linear" => Ok((0..k).map(|i| if i == k - 1 { b } else { a + (b - a) * f(i) }).collect()),
            _ => invalid(format!("range '{s}': spacing must be geometric (a > 0) or linear")),
        };
    }
    s.split(',').map(num).collect()
}

fn num(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Invalid(format!("'{s}' is not a number")))
}

fn point(p: &DegeneracyParams, s: Option<&str>) -> Result<Point> {
    match s {
        None => Ok(Point::origin(p)),
        Some(s) => {
            let v = parse_list(s)?;
            Point::from_flat(p, &v)
        }
    }
}

fn resolution(p: &DegeneracyParams, mesh: &Mesh) -> Result<Resolution> {
    match &mesh.graded {
        Some(g) => {
            let (c, q) = g.split_once(':').ok_or_else(|| Error::Invalid(format!("graded mesh '{g}' must be core:growth")))?;
            let core = c.trim().parse().map_err(|_| Error::Invalid(format!("bad core '{c}'")))?;
            Ok(Resolution::Graded { core, growth: num(q)? })
        }
        None if p.m == 0 => Ok(Resolution::line(mesh.grid)),
        None => Ok(Resolution::Uniform { n1: mesh.grid, n2: mesh.grid }),
    }
}

fn conductance(c: CondArg) -> Conductance {
    match c {
        CondArg::Harmonic => Conductance::Harmonic,
        CondArg::Midpoint => Conductance::Midpoint,
    }
}

fn family(p: &DegeneracyParams, f: FamilyArg, x: Option<&str>, sign: SignArg) -> Result<Family> {
    let sign = match sign {
        SignArg::Plus => Sign::Plus,
        SignArg::Minus => Sign::Minus,
    };
    Ok(match f {
        FamilyArg::Cube => Family::Cube,
        FamilyArg::Ball => Family::Ball { center: point(p, x)? },
        FamilyArg::Halfball => Family::HalfBall { center: point(p, x)?, sign },
        FamilyArg::Interval => Family::Interval,
    })
}

fn f(v: f64) -> Value {
    json!(v)
}

/// What a command produced: a report, or plain text for the terminal.
enum Output {
    Report(Report, Format),
    Text(String),
}

fn run(cmd: Cmd) -> Result<(Output, Common)> {
    match cmd {
        Cmd::Distance { c, a } => {
            let p = c.params()?;
            let d = distance_d(&p, &point(&p, Some(&a.x))?, &point(&p, Some(&a.y))?)?;
            let out = match c.format {
                None => Output::Text(format!("{d:?}\n")),
                Some(fmt) => Output::Report(Report::scalar(config("distance", &c, &a), json!({ "distance": d })), fmt),
            };
            Ok((out, c))
        }
        Cmd::Volume { c, a } => {
            let p = c.params()?;
            let reg = match (a.r, a.t) {
                (Some(r), None) => Region::Ball { center: point(&p, a.x.as_deref())?, r },
                (None, Some(t)) => Region::Cube { t },
                _ => return invalid("give exactly one of --r (ball) and --t (cube)"),
            };
            let method = match a.method {
                MethodArg::Grid => VolumeMethod::Grid { resolution: a.grid },
                MethodArg::Mc => VolumeMethod::MonteCarlo { samples: a.trials, seed: c.seed },
            };
            let v = region_volume(&p, &reg, method)?;
            let cfg = config("volume", &c, &a);
            Ok((Output::Report(Report::scalar(cfg, json!({ "region": to_value(&reg), "volume": to_value(&v) })), c.format.unwrap_or(Format::Json)), c))
        }
        Cmd::Doubling { c, a } => {
            let p = c.params()?;
            let x = point(&p, a.x.as_deref())?;
            let mut rows = Vec::new();
            let mut ratios = Vec::new();
            for r in parse_list(&a.radii)? {
                let d = doubling_ratio(&p, &x, r, VolumeMethod::Grid { resolution: a.grid })?;
                ratios.push(d.ratio);
                rows.push(vec![f(r), f(d.small.estimate), f(d.large.estimate), f(d.ratio)]);
            }
            let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let cfg = config("doubling", &c, &a);
            let rep = Report::table(cfg, &["r", "small", "large", "ratio"], rows, json!({ "maxRatio": max, "spread": max / min }));
            Ok((Output::Report(rep, c.format.unwrap_or(Format::Csv)), c))
        }
        Cmd::Checks { c, a } => {
            let p = c.params()?;
            let fixed = a.fixed.then_some(&p);
            let result = match a.suite {
                CheckSuite::Scaling => to_value(&check_scaling_bounds(a.trials, c.seed)?),
                CheckSuite::Embedding => to_value(&check_embeddings(fixed, a.kappa, a.trials, c.seed)?),
                CheckSuite::Kappa => to_value(&find_kappa(&p, 16, a.trials, c.seed)?),
                CheckSuite::Intertwining => to_value(&check_intertwining(fixed, a.trials, c.seed)?),
            };
            let cfg = config("checks", &c, &a);
            Ok((Output::Report(Report::scalar(cfg, result), c.format.unwrap_or(Format::Json)), c))
        }
        Cmd::Poincare { c, a } => {
            let p = c.params()?;
            let reg = family(&p, a.family, a.x.as_deref(), a.sign)?.region(a.r);
            let e = poincare_constant(&p, &reg, resolution(&p, &a.mesh)?, conductance(a.mesh.conductance))?;
            let cfg = config("poincare", &c, &a);
            Ok((Output::Report(Report::scalar(cfg, to_value(&e)), c.format.unwrap_or(Format::Json)), c))
        }
        Cmd::Sweep { c, a } => {
            let p = c.params()?;
            let fam = family(&p, a.family, a.x.as_deref(), a.sign)?;
            let s = poincare_sweep(&p, &fam, &parse_list(&a.radii)?, resolution(&p, &a.mesh)?, conductance(a.mesh.conductance))?;
            let rows = s
                .rows
                .iter()
                .map(|r| vec![f(r.r), f(r.gap), f(r.normalized), json!(r.cells), f(r.residual), json!(r.iterations)])
                .collect();
            let cfg = config("sweep", &c, &a);
            let rep = Report::table(
                cfg,
                &["r", "gap", "normalized", "cells", "residual", "iterations"],
                rows,
                json!({ "slope": s.slope, "fitFrom": s.fit_from, "spread": s.spread }),
            );
            Ok((Output::Report(rep, c.format.unwrap_or(Format::Csv)), c))
        }
        Cmd::Counterexample { c, a } => {
            let vals = parse_list(&a.values)?;
            let cfg = config("counterexample", &c, &a);
            let rep = match a.kind {
                CounterKind::ChiN => {
                    let rows = vals
                        .iter()
                        .map(|&n| chi_n_rayleigh(c.d1, n).map(|r| vec![f(n), f(r.energy), f(r.variance), f(r.ratio), f(3.0 / n.ln())]))
                        .collect::<Result<_>>()?;
                    Report::table(cfg, &["n", "energy", "variance", "ratio", "bound"], rows, json!({}))
                }
                CounterKind::ChiLog => {
                    let rows = vals
                        .iter()
                        .map(|&t| chi_log(c.d1, c.d1p, t).map(|r| vec![f(t), f(r.half_width), f(r.energy), f(r.variance), f(r.ratio), f(r.normalized)]))
                        .collect::<Result<_>>()?;
                    Report::table(cfg, &["t", "halfWidth", "energy", "variance", "ratio", "normalized"], rows, json!({}))
                }
            };
            Ok((Output::Report(rep, c.format.unwrap_or(Format::Csv)), c))
        }
        Cmd::Heat { c, a } => {
            let p = c.params()?;
            let res = if p.m == 0 { Resolution::line(a.grid) } else { Resolution::Uniform { n1: a.grid, n2: a.grid } };
            let x = point(&p, a.x.as_deref())?;
            let cfg = config("heat", &c, &a);
            let times = || -> Result<Vec<f64>> {
                match &a.times {
                    Some(s) => parse_list(s),
                    None => invalid("--times is required for this mode"),
                }
            };
            let rep = match a.mode {
                HeatMode::Kernel => {
                    let dom = default_domain(&p, &x, a.t)?;
                    let k = evolve_kernel(&p, &dom, &x, a.t, a.dt, res)?;
                    let rows = k
                        .form
                        .nodes
                        .iter()
                        .zip(&k.values)
                        .map(|(y, v)| y.x1.iter().chain(&y.x2).map(|c| f(*c)).chain([f(*v)]).collect())
                        .collect();
                    let header: &[&str] = if p.m == 0 { &["x1", "value"] } else { &["x1", "x2", "value"] };
                    let footer = json!({
                        "domain": to_value(&dom), "mass": k.mass, "massDrift": k.mass_drift, "minRatio": k.min_ratio,
                        "boundaryFraction": k.boundary_fraction, "warning": k.boundary_warning, "steps": k.steps, "dt": k.dt,
                        "source": f(k.at_source()),
                    });
                    Report::table(cfg, header, rows, footer)
                }
                HeatMode::Ondiag => {
                    let t = ondiag_lower(&p, &[x], &times()?, res, a.steps)?;
                    let rows = t
                        .rows
                        .iter()
                        .map(|r| vec![f(r.t), f(r.kernel), f(r.volume), f(r.product), f(r.boundary_fraction), json!(r.warning)])
                        .collect();
                    Report::table(cfg, &["t", "kernel", "volume", "product", "boundaryFraction", "warning"], rows, json!({ "minProduct": t.min_product }))
                }
                HeatMode::Fit => Report::scalar(cfg, to_value(&fit_gaussian_bounds(&p, &x, &times()?, res, a.steps)?)),
                HeatMode::Symmetry => {
                    let y = point(&p, Some(a.y.as_deref().ok_or_else(|| Error::Invalid("--y is required for symmetry".into()))?))?;
                    let dom = default_domain(&p, &x, a.t)?;
                    let d = kernel_symmetry_check(&p, &dom, &x, &y, a.t, a.dt, res)?;
                    Report::scalar(cfg, json!({ "domain": to_value(&dom), "discrepancy": d }))
                }
            };
            let fmt = match a.mode {
                HeatMode::Kernel | HeatMode::Ondiag => Format::Csv,
                _ => Format::Json,
            };
            Ok((Output::Report(rep, c.format.unwrap_or(fmt)), c))
        }
        Cmd::Crossing { c, a } => {
            let p = c.params()?;
            let r = crossing_mass(&p, a.x, a.t, a.dt, Resolution::line(a.grid))?;
            let cfg = config("crossing", &c, &a);
            Ok((Output::Report(Report::scalar(cfg, to_value(&r)), c.format.unwrap_or(Format::Json)), c))
        }
        Cmd::Sde { c, a } => {
            let e = HittingExperiment::new(a.deltap, a.x0, a.a, a.b, a.dt, a.trials, c.seed);
            let cfg = config("sde", &c, &a);
            let result = if a.refine { to_value(&dt_refinement(&e)?) } else { to_value(&simulate_hitting(&e)?) };
            Ok((Output::Report(Report::scalar(cfg, result), c.format.unwrap_or(Format::Json)), c))
        }
        Cmd::Ends { c, a } => {
            let r = ends_transform_check(c.d1, &bundled_test_functions(), a.tol)?;
            let cfg = config("ends", &c, &a);
            Ok((Output::Report(Report::scalar(cfg, to_value(&r)), c.format.unwrap_or(Format::Json)), c))
        }
        Cmd::Accept { .. } => unreachable!("handled by dispatch"),
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn install_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(j) = jobs {
        if j == 0 {
            return invalid("--jobs must be at least 1");
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    Ok(())
}

fn jobs_of(cmd: &Cmd) -> Option<usize> {
    match cmd {
        Cmd::Distance { c, .. }
        | Cmd::Volume { c, .. }
        | Cmd::Doubling { c, .. }
        | Cmd::Checks { c, .. }
        | Cmd::Poincare { c, .. }
        | Cmd::Sweep { c, .. }
        | Cmd::Counterexample { c, .. }
        | Cmd::Heat { c, .. }
        | Cmd::Crossing { c, .. }
        | Cmd::Sde { c, .. }
        | Cmd::Ends { c, .. }
        | Cmd::Accept { c, .. } => c.jobs,
    }
}

fn emit(text: &str, out: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the command and returns the exit code:
/// 0 on success, 1 on invalid input, 2 on numerical failure or failed acceptance criteria.
pub fn dispatch<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    if let Err(e) = install_jobs(jobs_of(&cli.cmd)) {
        let _ = writeln!(stderr, "error: {e}");
        return 1;
    }
    let start = Instant::now();
    if let Cmd::Accept { c, suite } = cli.cmd {
        let suite: Suite = suite.parse().expect("checked by clap");
        let mut progress = |cr: &crate::acceptance::Criterion| {
            let _ = writeln!(stderr, "{}", cr.line());
        };
        let report = run_acceptance_with(suite, &mut progress);
        let text = match c.format {
            Some(fmt) => {
                let rows = report
                    .criteria
                    .iter()
                    .map(|x| vec![json!(x.id), json!(x.claim), json!(x.measured), json!(x.tolerance), json!(x.pass)])
                    .collect();
                let cfg = config("accept", &c, &json!({ "suite": suite }));
                Report::table(cfg, &["id", "claim", "measured", "tolerance", "pass"], rows, json!({ "passed": report.passed, "failed": report.failed }))
                    .render(fmt)
            }
            None => report.table(),
        };
        let _ = writeln!(stderr, "runtime: {:.1} s", start.elapsed().as_secs_f64());
        if let Err(e) = emit(&text, &c.out, stdout) {
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
        return if report.all_passed() { 0 } else { 2 };
    }
    match run(cli.cmd) {
        Ok((out, c)) => {
            let text = match out {
                Output::Report(r, fmt) => r.render(fmt),
                Output::Text(t) => t,
            };
            let _ = writeln!(stderr, "runtime: {:.3} s", start.elapsed().as_secs_f64());
            match emit(&text, &c.out, stdout) {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    1
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_syntax() {
        let v = parse_list("4:64:geometric:5").unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v[4], 64.0);
        assert!((v[2] - 16.0).abs() < 1e-12);
        assert_eq!(parse_list("0.125,0.5, 2").unwrap(), vec![0.125, 0.5, 2.0]);
        assert!(parse_list("4:1:geometric:3").is_err());
        assert!(parse_list("0:1:geometric:3").is_err());
        assert!(parse_list("a,b").is_err());
    }
}
