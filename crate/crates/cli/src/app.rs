use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;
use tilekit_core::coupling::{alpha_map, increase_factor, sweep_lmin, SweepAxis, SweepBase, DEFAULT_CYCLE_SAMPLES};
use tilekit_core::export::{self, fmt_float};
use tilekit_core::motion::{pattern_preset, validate_pattern, MotionPattern, PatternKind, SinusoidalParams};
use tilekit_core::simulator::{auto_phi_max, run_experiment, run_grid, GridSpec, ObjectSpec, OutcomeSummary, SimError};
use tilekit_core::workspace::{sweep_workspace, workspace_bounds, DEFAULT_RESOLUTION};

use crate::config::{parse_config, parse_quantity, ConfigError, Dim, MaterialLengths, ToolkitConfig};
use crate::svg;

/// Like `println!`, but a closed stdout (e.g. piped into `head`) is not fatal.
macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

pub const OUT_ENV: &str = "TILEKIT_OUT";

#[derive(Debug, Parser)]
#[command(name = "tilekit", version, about = "Kinematics, coupling and transport analysis for origami tile arrays")]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides TILEKIT_OUT and the config).
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// Skip SVG plots.
    #[arg(long, global = true)]
    no_svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct Overrides {
    /// Pattern preset (A, B, state-100:240, state-150:280, state-200:320).
    #[arg(long)]
    preset: Option<String>,
    /// Inter-tile distance, e.g. 240 or "24 cm".
    #[arg(long)]
    spacing: Option<String>,
    /// Material length per gap.
    #[arg(long)]
    length: Option<String>,
    #[arg(long)]
    tiles: Option<usize>,
    /// Tilt amplitude, or "auto" to derive it from the shared workspace.
    #[arg(long)]
    phi_max: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reachable end-effector cloud over the leg-angle grid.
    Workspace {
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
    },
    /// Corner separation of a tilted tile against a level neighbour.
    AlphaMap {
        #[arg(long, default_value = "210")]
        spacing: String,
        /// Extension of both tiles (defaults to the pattern's r0).
        #[arg(long)]
        r: Option<String>,
        #[arg(long, default_value = "0.5235987755982988")]
        phi_max: String,
        #[arg(long, default_value_t = 72)]
        delta_samples: usize,
        #[arg(long, default_value_t = 31)]
        phi_samples: usize,
    },
    /// Minimum material length over one cycle as one parameter varies.
    LminSweep {
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[command(flatten)]
        set: Overrides,
    },
    /// Per-tile pose trajectory of a pattern.
    Pattern {
        #[command(flatten)]
        set: Overrides,
        /// Duration in seconds (default: one period).
        #[arg(long)]
        duration: Option<f64>,
        /// Sample step in seconds (default: period / 200).
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Checks a pattern against the array's material and reach limits.
    Validate {
        #[command(flatten)]
        set: Overrides,
    },
    /// Simulates object transport across the array.
    Simulate {
        #[command(flatten)]
        set: Overrides,
        /// cylinder, disk or cube.
        #[arg(long)]
        object: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Success matrix over material lengths and spacings.
    Grid,
    /// Traversable-distance gain of a spaced three-tile array.
    IncreaseFactor {
        #[arg(long = "D")]
        d: f64,
        #[arg(long)]
        w: f64,
    },
}

#[derive(Debug, Error)]
enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    /// The run completed but the result is infeasible or failed.
    #[error("{0}")]
    Failed(String),
}

impl AppError {
    fn code(&self) -> i32 {
        match self {
            Self::Failed(_) => 2,
            _ => 1,
        }
    }
}

fn io<E: std::fmt::Display>(e: E) -> AppError {
    AppError::Io(e.to_string())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

struct Ctx {
    cfg: ToolkitConfig,
    out: PathBuf,
    svg: bool,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, AppError> {
        let p = self.path(name);
        File::create(&p).map(BufWriter::new).map_err(|e| AppError::Io(format!("{}: {e}", p.display())))
    }

    fn write(&self, name: &str, text: &str) -> Result<(), AppError> {
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| AppError::Io(format!("{}: {e}", p.display())))
    }

    fn plot(&self, name: &str, doc: impl FnOnce() -> String) -> Result<(), AppError> {
        if self.svg {
            self.write(name, &doc())?;
        }
        Ok(())
    }
}

fn output_dir(cli: &Cli, cfg: &ToolkitConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| cfg.output.directory.clone())
}

fn execute(cli: Cli) -> Result<(), AppError> {
    if let Command::IncreaseFactor { d, w } = cli.command {
        if !(d > 0.0 && w > 0.0) {
            return Err(AppError::Usage("--D and --w must be > 0".into()));
        }
        outln!("{:.3}", increase_factor(d, w));
        return Ok(());
    }
    let cfg = match &cli.config {
        Some(p) => parse_config(p)?,
        None => ToolkitConfig::default(),
    };
    let out = output_dir(&cli, &cfg);
    fs::create_dir_all(&out).map_err(|e| AppError::Io(format!("{}: {e}", out.display())))?;
    let mut ctx = Ctx {
        svg: cfg.output.svg && !cli.no_svg,
        cfg,
        out,
    };
    match cli.command {
        Command::Workspace { resolution } => workspace(&ctx, resolution),
        Command::AlphaMap {
            spacing,
            r,
            phi_max,
            delta_samples,
            phi_samples,
        } => {
            let spacing = quantity("--spacing", &spacing, Dim::Length)?;
            let r = r.map(|v| quantity("--r", &v, Dim::Length)).transpose()?;
            let phi_max = quantity("--phi-max", &phi_max, Dim::Angle)?;
            alpha(&ctx, spacing, r, phi_max, delta_samples, phi_samples)
        }
        Command::LminSweep {
            axis,
            from,
            to,
            samples,
            set,
        } => {
            apply(&mut ctx.cfg, &set)?;
            let dim = match axis {
                SweepAxis::D => Dim::Length,
                SweepAxis::Ps | SweepAxis::PhiMax => Dim::Angle,
            };
            let from = quantity("--from", &from, dim)?;
            let to = quantity("--to", &to, dim)?;
            lmin(&ctx, axis, from, to, samples)
        }
        Command::Pattern { set, duration, dt } => {
            apply(&mut ctx.cfg, &set)?;
            pattern(&ctx, duration, dt)
        }
        Command::Validate { set } => {
            apply(&mut ctx.cfg, &set)?;
            validate(&ctx)
        }
        Command::Simulate { set, object, seed } => {
            apply(&mut ctx.cfg, &set)?;
            if let Some(o) = object {
                let base = match o.as_str() {
                    "cylinder" => ObjectSpec::cylinder(),
                    "disk" => ObjectSpec::disk(),
                    "cube" => ObjectSpec::cube(),
                    other => return Err(AppError::Usage(format!("unknown object {other:?}"))),
                };
                ctx.cfg.simulation.object = base;
            }
            if let Some(s) = seed {
                ctx.cfg.simulation.seed = s;
            }
            simulate(&ctx)
        }
        Command::Grid => grid(&ctx),
        Command::IncreaseFactor { .. } => unreachable!("handled before config loading"),
    }
}

fn quantity(flag: &str, text: &str, dim: Dim) -> Result<f64, AppError> {
    parse_quantity(text, dim).map_err(|e| AppError::Usage(format!("{flag}: {e}")))
}

/// Applies command-line overrides on top of the loaded config.
fn apply(cfg: &mut ToolkitConfig, set: &Overrides) -> Result<(), AppError> {
    if let Some(name) = &set.preset {
        let p = pattern_preset(name).map_err(|e| AppError::Usage(e.to_string()))?;
        cfg.pattern.pattern = MotionPattern {
            vibration: p.vibration.or(cfg.pattern.pattern.vibration),
            ..p
        };
    }
    if let Some(s) = &set.spacing {
        cfg.array.spacing = quantity("--spacing", s, Dim::Length)?;
        cfg.array.bases = None;
    }
    if let Some(l) = &set.length {
        cfg.array.material_length = MaterialLengths::Uniform(quantity("--length", l, Dim::Length)?);
    }
    if let Some(n) = set.tiles {
        cfg.array.tiles = n;
        cfg.array.bases = None;
    }
    if let Some(phi) = &set.phi_max {
        if phi.trim() == "auto" {
            cfg.pattern.auto_phi = true;
        } else {
            let v = quantity("--phi-max", phi, Dim::Angle)?;
            cfg.pattern.auto_phi = false;
            if let PatternKind::Sinusoidal(p) = &mut cfg.pattern.pattern.kind {
                p.phi_max = v;
            }
        }
    }
    let array = cfg.array_config();
    if let MaterialLengths::PerGap(v) = &cfg.array.material_length {
        if v.len() + 1 != array.bases.len() {
            return Err(AppError::Usage("per-gap material lengths do not match the tile count".into()));
        }
    }
    if let Err(e) = array.validate() {
        return Err(AppError::Usage(e.to_string()));
    }
    if let Err(e) = cfg.pattern.pattern.validate() {
        return Err(AppError::Usage(e.to_string()));
    }
    Ok(())
}

/// The configured pattern with its tilt amplitude resolved.
fn resolved_pattern(cfg: &ToolkitConfig) -> Result<MotionPattern, AppError> {
    let p = &cfg.pattern;
    if !p.auto_phi {
        return Ok(p.pattern);
    }
    auto_phi_max(&p.pattern, &cfg.array_config(), p.phi_cap, p.slack_compensation)
        .ok_or_else(|| AppError::Failed("no feasible tilt amplitude for this array".into()))
}

fn phi_of(p: &MotionPattern) -> Option<f64> {
    match p.kind {
        PatternKind::Sinusoidal(s) => Some(s.phi_max),
        PatternKind::StateCycle(_) => None,
    }
}

fn workspace(ctx: &Ctx, resolution: usize) -> Result<(), AppError> {
    let cloud = sweep_workspace(&ctx.cfg.geometry, resolution).map_err(|e| AppError::Usage(e.to_string()))?;
    export::write_workspace(ctx.create("workspace.csv")?, &cloud).map_err(io)?;
    let b = workspace_bounds(&cloud).map_err(|e| AppError::Failed(e.to_string()))?;
    ctx.plot("workspace.svg", || {
        let pts: Vec<_> = cloud.points.iter().map(|p| (p.position.x, p.position.z)).collect();
        svg::scatter("Reachable end-effector positions", "x (mm)", "z (mm)", &pts)
    })?;
    outln!(
        "{} points, {} singular; x [{}, {}] y [{}, {}] z [{}, {}] mm",
        cloud.points.len(),
        cloud.singular.len(),
        fmt_float(b.min.x),
        fmt_float(b.max.x),
        fmt_float(b.min.y),
        fmt_float(b.max.y),
        fmt_float(b.min.z),
        fmt_float(b.max.z)
    );
    Ok(())
}

fn alpha(ctx: &Ctx, spacing: f64, r: Option<f64>, phi_max: f64, nd: usize, np: usize) -> Result<(), AppError> {
    if nd < 1 || np < 2 || !(spacing > 0.0) || !(phi_max >= 0.0) {
        return Err(AppError::Usage("need spacing > 0, phi-max >= 0, delta-samples >= 1, phi-samples >= 2".into()));
    }
    let r = r.unwrap_or(match ctx.cfg.pattern.pattern.kind {
        PatternKind::Sinusoidal(p) => p.r0,
        PatternKind::StateCycle(p) => p.r_high,
    });
    let map = alpha_map(&ctx.cfg.geometry, spacing, r, nd, phi_max, np);
    export::write_alpha_map(ctx.create("alpha_map.csv")?, &map).map_err(io)?;
    ctx.plot("alpha_map.svg", || svg::heatmap("Corner separation alpha (mm)", "delta (rad)", "phi (rad)", &map))?;
    let (lo, hi) = map.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.2), hi.max(c.2)));
    outln!("{} cells; alpha in [{}, {}] mm", map.len(), fmt_float(lo), fmt_float(hi));
    Ok(())
}

fn lmin(ctx: &Ctx, axis: SweepAxis, from: f64, to: f64, samples: usize) -> Result<(), AppError> {
    let PatternKind::Sinusoidal(params) = ctx.cfg.pattern.pattern.kind else {
        return Err(AppError::Usage("lmin-sweep needs a sinusoidal pattern".into()));
    };
    let params = if ctx.cfg.pattern.auto_phi {
        SinusoidalParams {
            phi_max: SinusoidalParams::default().phi_max,
            ..params
        }
    } else {
        params
    };
    let base = SweepBase {
        geom: ctx.cfg.geometry,
        params,
        spacing: ctx.cfg.array.spacing,
        cycle_samples: DEFAULT_CYCLE_SAMPLES,
    };
    let pts = sweep_lmin(axis, from, to, samples, &base).map_err(|e| AppError::Usage(e.to_string()))?;
    let name = format!("lmin_{axis}");
    export::write_lmin_sweep(ctx.create(&format!("{name}.csv"))?, &pts).map_err(io)?;
    ctx.plot(&format!("{name}.svg"), || {
        let series: Vec<_> = pts.iter().map(|p| (p.value, p.lmin)).collect();
        svg::line("Minimum material length", &axis.to_string(), "L_min (mm)", &series)
    })?;
    let infeasible = pts.iter().filter(|p| !p.feasible).count();
    outln!("{} samples written to {name}.csv ({infeasible} with unreachable poses)", pts.len());
    Ok(())
}

fn pattern(ctx: &Ctx, duration: Option<f64>, dt: Option<f64>) -> Result<(), AppError> {
    let pattern = resolved_pattern(&ctx.cfg)?;
    let period = pattern.period();
    let duration = duration.unwrap_or(period);
    let dt = dt.unwrap_or(period / DEFAULT_CYCLE_SAMPLES as f64);
    if !(duration > 0.0 && dt > 0.0) {
        return Err(AppError::Usage("--duration and --dt must be > 0".into()));
    }
    let n = (duration / dt + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    let tiles = ctx.cfg.array_config().bases.len();
    let file = ctx.create("pattern.csv")?;
    export::write_pattern_trajectory(file, &pattern, tiles, &times).map_err(|e| AppError::Failed(e.to_string()))?;
    outln!("{} samples x {tiles} tiles written to pattern.csv (period {} s)", times.len(), fmt_float(period));
    Ok(())
}

fn validate(ctx: &Ctx) -> Result<(), AppError> {
    let pattern = resolved_pattern(&ctx.cfg)?;
    let period = pattern.period();
    let report = validate_pattern(&pattern, &ctx.cfg.array_config(), period, period / DEFAULT_CYCLE_SAMPLES as f64);
    let json = export::to_json(&report);
    ctx.write("validity.json", &json)?;
    outln!("{json}");
    if report.valid {
        Ok(())
    } else {
        Err(AppError::Failed("pattern is not valid for this array".into()))
    }
}

#[derive(Serialize)]
struct SimulationReport {
    #[serde(flatten)]
    summary: OutcomeSummary,
    /// `success` or `fail`.
    verdict: &'static str,
    phi_max: Option<f64>,
}

fn simulate(ctx: &Ctx) -> Result<(), AppError> {
    let pattern = resolved_pattern(&ctx.cfg)?;
    let cfg = ctx.cfg.experiment(pattern);
    match run_experiment(&cfg) {
        Ok(res) => {
            export::write_sim_trajectory(ctx.create("trajectory.csv")?, &res.trajectory).map_err(io)?;
            let ok = res.summary.outcome.is_success();
            let report = SimulationReport {
                summary: res.summary,
                verdict: if ok { "success" } else { "fail" },
                phi_max: phi_of(&pattern),
            };
            let json = export::to_json(&report);
            ctx.write("outcome.json", &json)?;
            outln!("{json}");
            if ok {
                Ok(())
            } else {
                Err(AppError::Failed(format!("transport failed: {}", res.summary.outcome.as_str())))
            }
        }
        Err(SimError::InvalidPattern(report)) => {
            let json = export::to_json(&*report);
            ctx.write("validity.json", &json)?;
            outln!("{json}");
            Err(AppError::Failed("pattern refused: it violates the array's constraints".into()))
        }
        Err(e @ (SimError::InvalidConfiguration(_) | SimError::UnsupportedConfiguration(_))) => {
            Err(AppError::Usage(e.to_string()))
        }
        Err(e) => Err(AppError::Failed(e.to_string())),
    }
}

fn grid(ctx: &Ctx) -> Result<(), AppError> {
    let g = &ctx.cfg.grid;
    let patterns = g
        .patterns
        .iter()
        .map(|n| pattern_preset(n).map_err(|e| AppError::Usage(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = GridSpec {
        lengths: g.lengths.clone(),
        spacings: g.spacings.clone(),
        tiles: g.tiles,
        skip: g.skip.clone(),
        phi_cap: ctx.cfg.pattern.phi_cap,
        slack_compensation: ctx.cfg.pattern.slack_compensation,
        ..GridSpec::new(ctx.cfg.experiment(ctx.cfg.pattern.pattern), patterns)
    };
    let cells = run_grid(&spec);
    export::write_grid(ctx.create("grid.csv")?, &spec.lengths, &spec.spacings, &cells).map_err(io)?;
    let text = fs::read_to_string(ctx.path("grid.csv")).map_err(io)?;
    outln!("{}", text.trim_end());
    Ok(())
}
