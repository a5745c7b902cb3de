//! TOML configuration with unit-suffixed quantities.
//!
//! Every section is optional. Unknown keys are errors, and every problem in
//! a file is reported together rather than one at a time.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;
use tilekit_core::coupling::ArrayConfig;
use tilekit_core::kinematics::TileGeometry;
use tilekit_core::motion::{
    pattern_preset, MotionPattern, PatternKind, SinusoidalParams, StateCycleParams, VibrationParams,
    DEFAULT_PHI_CAP, PRESET_NAMES,
};
use tilekit_core::simulator::{
    ExperimentConfig, ObjectSpec, DEFAULT_DT, DEFAULT_STRAIN_TOLERANCE, DEFAULT_TIME_LIMIT,
};
use toml::{Table, Value};

pub const DEFAULT_MATERIAL_LENGTH: f64 = 250.0;
pub const DEFAULT_SPACING: f64 = 400.0;
pub const DEFAULT_TILES: usize = 3;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaterialLengths {
    Uniform(f64),
    PerGap(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArraySection {
    pub tiles: usize,
    pub spacing: f64,
    /// Explicit base abscissae; overrides `tiles` and `spacing`.
    pub bases: Option<Vec<f64>>,
    pub material_length: MaterialLengths,
}

impl ArraySection {
    pub fn build(&self, geom: TileGeometry) -> ArrayConfig {
        let xs: Vec<f64> = match &self.bases {
            Some(b) => b.clone(),
            None => (0..self.tiles).map(|i| i as f64 * self.spacing).collect(),
        };
        let gaps = xs.len().saturating_sub(1);
        let material_lengths = match &self.material_length {
            MaterialLengths::Uniform(l) => vec![*l; gaps],
            MaterialLengths::PerGap(v) => v.clone(),
        };
        ArrayConfig {
            geom,
            bases: xs.iter().map(|&x| nalgebra::Vector3::new(x, 0.0, 0.0)).collect(),
            material_lengths,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSection {
    pub pattern: MotionPattern,
    /// Tilt amplitude to be derived from the shared workspace.
    pub auto_phi: bool,
    pub phi_cap: f64,
    pub slack_compensation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSection {
    pub object: ObjectSpec,
    pub dt: f64,
    pub time_limit: f64,
    pub strain_tolerance: f64,
    pub seed: u64,
    pub start_jitter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSection {
    pub lengths: Vec<f64>,
    pub spacings: Vec<f64>,
    pub patterns: Vec<String>,
    pub tiles: usize,
    pub skip: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolkitConfig {
    pub geometry: TileGeometry,
    pub array: ArraySection,
    pub pattern: PatternSection,
    pub simulation: SimulationSection,
    pub output: OutputSection,
    pub grid: GridSection,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        parse_config_str("").expect("empty config is valid")
    }
}

impl ToolkitConfig {
    pub fn array_config(&self) -> ArrayConfig {
        self.array.build(self.geometry)
    }

    pub fn experiment(&self, pattern: MotionPattern) -> ExperimentConfig {
        let s = &self.simulation;
        ExperimentConfig {
            dt: s.dt,
            time_limit: s.time_limit,
            strain_tolerance: s.strain_tolerance,
            seed: s.seed,
            start_jitter: s.start_jitter,
            ..ExperimentConfig::new(self.array_config(), pattern, s.object)
        }
    }
}

pub fn parse_config(path: &Path) -> Result<ToolkitConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ToolkitConfig, ConfigError> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let mut r = Reader::default();
    let mut root = Section::new("", root);

    let mut geo = root.section(&mut r, "geometry");
    let defaults = TileGeometry::default();
    let azimuths = geo.angles(&mut r, "leg_azimuths").unwrap_or(defaults.leg_azimuths.to_vec());
    let geometry = TileGeometry {
        leg_length: geo.quantity(&mut r, "leg_length", Dim::Length, defaults.leg_length),
        base_radius: geo.quantity(&mut r, "base_radius", Dim::Length, defaults.base_radius),
        leg_azimuths: match <[f64; 3]>::try_from(azimuths.as_slice()) {
            Ok(a) => a,
            Err(_) => {
                r.error("geometry.leg_azimuths", "expected exactly three angles");
                defaults.leg_azimuths
            }
        },
        theta_min: geo.quantity(&mut r, "theta_min", Dim::Angle, defaults.theta_min),
        theta_max: geo.quantity(&mut r, "theta_max", Dim::Angle, defaults.theta_max),
        plate_width: geo.quantity(&mut r, "plate_width", Dim::Length, defaults.plate_width),
        plate_height: geo.quantity(&mut r, "plate_height", Dim::Length, defaults.plate_height),
    };
    geo.finish(&mut r);
    if let Err(e) = geometry.validate() {
        r.error("geometry", &e.to_string());
    }

    let mut arr = root.section(&mut r, "array");
    let tiles = arr.count(&mut r, "tiles", DEFAULT_TILES);
    let spacing = arr.quantity(&mut r, "spacing", Dim::Length, DEFAULT_SPACING);
    let bases = arr.lengths(&mut r, "bases");
    let material_length = match arr.take("material_length") {
        None => MaterialLengths::Uniform(DEFAULT_MATERIAL_LENGTH),
        Some(Value::Array(items)) => MaterialLengths::PerGap(
            items
                .iter()
                .map(|v| r.convert(&arr.key("material_length"), v, Dim::Length).unwrap_or(0.0))
                .collect(),
        ),
        Some(v) => MaterialLengths::Uniform(r.convert(&arr.key("material_length"), &v, Dim::Length).unwrap_or(0.0)),
    };
    arr.finish(&mut r);
    let array = ArraySection {
        tiles,
        spacing,
        bases,
        material_length,
    };
    check_array(&mut r, &array);

    let pattern = read_pattern(&mut r, &mut root);
    let simulation = read_simulation(&mut r, &mut root);

    let mut out = root.section(&mut r, "output");
    let output = OutputSection {
        directory: out.string(&mut r, "directory").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out")),
        svg: out.boolean(&mut r, "svg", true),
    };
    out.finish(&mut r);

    let grid = read_grid(&mut r, &mut root);
    root.finish(&mut r);

    if r.errors.is_empty() {
        Ok(ToolkitConfig {
            geometry,
            array,
            pattern,
            simulation,
            output,
            grid,
        })
    } else {
        Err(ConfigError::Invalid(r.errors))
    }
}

fn check_array(r: &mut Reader, a: &ArraySection) {
    let count = a.bases.as_ref().map_or(a.tiles, Vec::len);
    if count < 1 {
        r.error("array.tiles", "need at least one tile");
    }
    if a.bases.is_none() && !(a.spacing > 0.0) {
        r.error("array.spacing", "must be > 0");
    }
    if let Some(b) = &a.bases {
        if b.windows(2).any(|w| !(w[1] > w[0])) {
            r.error("array.bases", "must be strictly increasing");
        }
    }
    match &a.material_length {
        MaterialLengths::Uniform(l) if *l < 0.0 => r.error("array.material_length", "must be >= 0"),
        MaterialLengths::PerGap(v) => {
            if v.iter().any(|l| *l < 0.0) {
                r.error("array.material_length", "must be >= 0");
            }
            if v.len() + 1 != count {
                r.error("array.material_length", &format!("expected {} gap lengths, got {}", count.saturating_sub(1), v.len()));
            }
        }
        _ => {}
    }
}

fn read_pattern(r: &mut Reader, root: &mut Section) -> PatternSection {
    let mut sec = root.section(r, "pattern");
    let preset = sec.string(r, "preset");
    let kind = sec.string(r, "kind");
    let mut pattern = match &preset {
        Some(name) => match pattern_preset(name) {
            Ok(p) => p,
            Err(_) => {
                r.error("pattern.preset", &format!("unknown preset {name:?} (known: {})", PRESET_NAMES.join(", ")));
                MotionPattern::sinusoidal(SinusoidalParams::default())
            }
        },
        None => match kind.as_deref() {
            None | Some("sinusoidal") => MotionPattern::sinusoidal(SinusoidalParams::default()),
            Some("state-cycle") => MotionPattern::state_cycle(StateCycleParams::default()),
            Some(other) => {
                r.error("pattern.kind", &format!("unknown kind {other:?} (expected sinusoidal or state-cycle)"));
                MotionPattern::sinusoidal(SinusoidalParams::default())
            }
        },
    };
    if let (Some(_), Some(k)) = (&preset, &kind) {
        let actual = match pattern.kind {
            PatternKind::Sinusoidal(_) => "sinusoidal",
            PatternKind::StateCycle(_) => "state-cycle",
        };
        if k != actual {
            r.error("pattern.kind", &format!("{k:?} conflicts with the preset, which is {actual}"));
        }
    }

    let mut auto_phi = false;
    match &mut pattern.kind {
        PatternKind::Sinusoidal(p) => {
            match sec.take("phi_max") {
                Some(Value::String(s)) if s.trim() == "auto" => auto_phi = true,
                Some(v) => {
                    if let Some(x) = r.convert(&sec.key("phi_max"), &v, Dim::Angle) {
                        p.phi_max = x;
                    }
                }
                None => {}
            }
            p.delta = sec.quantity(r, "delta", Dim::Angle, p.delta);
            p.f_s = sec.quantity(r, "f_s", Dim::Frequency, p.f_s);
            p.p_s = sec.quantity(r, "p_s", Dim::Angle, p.p_s);
            p.r0 = sec.quantity(r, "r0", Dim::Length, p.r0);
            p.h_max = sec.quantity(r, "h_max", Dim::Length, p.h_max);
            p.f_h = sec.quantity(r, "f_h", Dim::Frequency, p.f_h);
            p.p_h = sec.quantity(r, "p_h", Dim::Angle, p.p_h);
        }
        PatternKind::StateCycle(p) => {
            p.phi_forward = sec.quantity(r, "phi_forward", Dim::Angle, p.phi_forward);
            p.phi_backward = sec.quantity(r, "phi_backward", Dim::Angle, p.phi_backward);
            p.r_high = sec.quantity(r, "r_high", Dim::Length, p.r_high);
            p.r_low = sec.quantity(r, "r_low", Dim::Length, p.r_low);
            p.dwell = sec.quantity(r, "dwell", Dim::Time, p.dwell);
            p.neighbor_offset = sec.count(r, "neighbor_offset", p.neighbor_offset);
        }
    }
    let phi_cap = sec.quantity(r, "phi_cap", Dim::Angle, DEFAULT_PHI_CAP);
    let slack_compensation = sec.boolean(r, "slack_compensation", false);

    match sec.take("vibration") {
        None | Some(Value::Boolean(false)) => {}
        Some(Value::Boolean(true)) => pattern.vibration = Some(VibrationParams::default()),
        Some(Value::Table(t)) => {
            let mut v = Section::new("pattern.vibration", t);
            let d = VibrationParams::default();
            pattern.vibration = Some(VibrationParams {
                frequency: v.quantity(r, "frequency", Dim::Frequency, d.frequency),
                amplitude: v.quantity(r, "amplitude", Dim::Length, d.amplitude),
            });
            v.finish(r);
        }
        Some(_) => r.error("pattern.vibration", "expected true, false or a table"),
    }
    sec.finish(r);

    if let Err(e) = pattern.validate() {
        r.error("pattern", &e.to_string());
    }
    if !(phi_cap >= 0.0) {
        r.error("pattern.phi_cap", "must be >= 0");
    }
    PatternSection {
        pattern,
        auto_phi,
        phi_cap,
        slack_compensation,
    }
}

fn read_simulation(r: &mut Reader, root: &mut Section) -> SimulationSection {
    let mut sec = root.section(r, "simulation");
    let base = match sec.string(r, "object").as_deref() {
        None | Some("cylinder") => ObjectSpec::cylinder(),
        Some("disk") => ObjectSpec::disk(),
        Some("cube") => ObjectSpec::cube(),
        Some(other) => {
            r.error("simulation.object", &format!("unknown object {other:?} (expected cylinder, disk or cube)"));
            ObjectSpec::cylinder()
        }
    };
    let object = ObjectSpec {
        size: sec.quantity(r, "size", Dim::Length, base.size),
        mass: sec.plain(r, "mass", base.mass),
        mu_static: sec.plain(r, "mu_static", base.mu_static),
        mu_kinetic: sec.plain(r, "mu_kinetic", base.mu_kinetic),
        mu_rolling: sec.plain(r, "mu_rolling", base.mu_rolling),
        inertia_factor: sec.plain(r, "inertia_factor", base.inertia_factor),
        ..base
    };
    if let Err(e) = object.validate() {
        r.error("simulation", &e);
    }
    let s = SimulationSection {
        object,
        dt: sec.quantity(r, "dt", Dim::Time, DEFAULT_DT),
        time_limit: sec.quantity(r, "time_limit", Dim::Time, DEFAULT_TIME_LIMIT),
        strain_tolerance: sec.plain(r, "strain_tolerance", DEFAULT_STRAIN_TOLERANCE),
        seed: sec.count(r, "seed", 0) as u64,
        start_jitter: sec.quantity(r, "start_jitter", Dim::Length, 0.0),
    };
    sec.finish(r);
    if !(s.dt > 0.0) {
        r.error("simulation.dt", "must be > 0");
    }
    if !(s.time_limit > 0.0) {
        r.error("simulation.time_limit", "must be > 0");
    }
    if !(s.strain_tolerance >= 0.0) {
        r.error("simulation.strain_tolerance", "must be >= 0");
    }
    if !(s.start_jitter >= 0.0) {
        r.error("simulation.start_jitter", "must be >= 0");
    }
    s
}

fn read_grid(r: &mut Reader, root: &mut Section) -> GridSection {
    let mut sec = root.section(r, "grid");
    let g = GridSection {
        lengths: sec.lengths(r, "lengths").unwrap_or_else(|| vec![200.0, 150.0, 100.0, 50.0, 0.0]),
        spacings: sec.lengths(r, "spacings").unwrap_or_else(|| (0..9).map(|k| 180.0 + 20.0 * k as f64).collect()),
        patterns: sec.strings(r, "patterns").unwrap_or_else(|| vec!["A".into(), "B".into()]),
        tiles: sec.count(r, "tiles", DEFAULT_TILES),
        skip: match sec.take("skip") {
            None => Vec::new(),
            Some(Value::Array(items)) => items
                .iter()
                .filter_map(|item| {
                    let pair = item.as_array().filter(|a| a.len() == 2);
                    match pair {
                        Some(a) => {
                            let l = r.convert("grid.skip", &a[0], Dim::Length)?;
                            let d = r.convert("grid.skip", &a[1], Dim::Length)?;
                            Some((l, d))
                        }
                        None => {
                            r.error("grid.skip", "entries must be [L, D] pairs");
                            None
                        }
                    }
                })
                .collect(),
            Some(_) => {
                r.error("grid.skip", "expected a list of [L, D] pairs");
                Vec::new()
            }
        },
    };
    sec.finish(r);
    for name in &g.patterns {
        if pattern_preset(name).is_err() {
            r.error("grid.patterns", &format!("unknown preset {name:?}"));
        }
    }
    if g.lengths.iter().any(|l| *l < 0.0) {
        r.error("grid.lengths", "must be >= 0");
    }
    if g.spacings.iter().any(|d| !(*d > 0.0)) {
        r.error("grid.spacings", "must be > 0");
    }
    if g.tiles < 2 {
        r.error("grid.tiles", "need at least two tiles");
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Length,
    Angle,
    Frequency,
    Time,
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Length => "length",
            Self::Angle => "angle",
            Self::Frequency => "frequency",
            Self::Time => "time",
        })
    }
}

/// Parses `"<number> <unit>"` (space optional) into internal units: mm, rad,
/// Hz, s. A bare number is taken in internal units.
pub fn parse_quantity(text: &str, dim: Dim) -> Result<f64, String> {
    let t = text.trim();
    let split = t
        .char_indices()
        .find(|&(i, c)| c.is_ascii_alphabetic() && !is_exponent(t, i))
        .map_or(t.len(), |(i, _)| i);
    let (num, unit) = t.split_at(split);
    let value: f64 = num.trim().parse().map_err(|_| format!("cannot read a number from {text:?}"))?;
    let scale = match (dim, unit.trim()) {
        (_, "") => 1.0,
        (Dim::Length, "mm") => 1.0,
        (Dim::Length, "cm") => 10.0,
        (Dim::Length, "m") => 1000.0,
        (Dim::Angle, "rad") => 1.0,
        (Dim::Angle, "deg") => PI / 180.0,
        (Dim::Frequency, "Hz") => 1.0,
        (Dim::Time, "s") => 1.0,
        (Dim::Time, "ms") => 1e-3,
        (_, u) => return Err(format!("unit {u:?} is not a {dim} unit")),
    };
    Ok(value * scale)
}

fn is_exponent(t: &str, i: usize) -> bool {
    let b = t.as_bytes();
    matches!(b[i], b'e' | b'E')
        && i > 0
        && b[i - 1].is_ascii_digit()
        && b.get(i + 1).is_some_and(|c| c.is_ascii_digit() || *c == b'-' || *c == b'+')
}

#[derive(Default)]
struct Reader {
    errors: Vec<String>,
}

impl Reader {
    fn error(&mut self, key: &str, msg: &str) {
        self.errors.push(format!("{key}: {msg}"));
    }

    fn convert(&mut self, key: &str, v: &Value, dim: Dim) -> Option<f64> {
        let out = match v {
            Value::Integer(i) => Ok(*i as f64),
            Value::Float(f) => Ok(*f),
            Value::String(s) => parse_quantity(s, dim),
            _ => Err(format!("expected a {dim}")),
        };
        out.map_err(|e| self.error(key, &e)).ok()
    }
}

struct Section {
    path: String,
    table: Table,
}

impl Section {
    fn new(path: &str, table: Table) -> Self {
        Self {
            path: path.to_string(),
            table,
        }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn take(&mut self, k: &str) -> Option<Value> {
        self.table.remove(k)
    }

    fn section(&mut self, r: &mut Reader, k: &str) -> Section {
        let key = self.key(k);
        match self.take(k) {
            None => Section::new(&key, Table::new()),
            Some(Value::Table(t)) => Section::new(&key, t),
            Some(_) => {
                r.error(&key, "expected a table");
                Section::new(&key, Table::new())
            }
        }
    }

    fn quantity(&mut self, r: &mut Reader, k: &str, dim: Dim, default: f64) -> f64 {
        match self.take(k) {
            None => default,
            Some(v) => r.convert(&self.key(k), &v, dim).unwrap_or(default),
        }
    }

    /// A dimensionless number.
    fn plain(&mut self, r: &mut Reader, k: &str, default: f64) -> f64 {
        match self.take(k) {
            None => default,
            Some(Value::Integer(i)) => i as f64,
            Some(Value::Float(f)) => f,
            Some(_) => {
                r.error(&self.key(k), "expected a number");
                default
            }
        }
    }

    fn count(&mut self, r: &mut Reader, k: &str, default: usize) -> usize {
        match self.take(k) {
            None => default,
            Some(Value::Integer(i)) if i >= 0 => i as usize,
            Some(_) => {
                r.error(&self.key(k), "expected a non-negative integer");
                default
            }
        }
    }

    fn boolean(&mut self, r: &mut Reader, k: &str, default: bool) -> bool {
        match self.take(k) {
            None => default,
            Some(Value::Boolean(b)) => b,
            Some(_) => {
                r.error(&self.key(k), "expected true or false");
                default
            }
        }
    }

    fn string(&mut self, r: &mut Reader, k: &str) -> Option<String> {
        match self.take(k) {
            None => None,
            Some(Value::String(s)) => Some(s),
            Some(_) => {
                r.error(&self.key(k), "expected a string");
                None
            }
        }
    }

    fn strings(&mut self, r: &mut Reader, k: &str) -> Option<Vec<String>> {
        match self.take(k) {
            None => None,
            Some(Value::Array(items)) if items.iter().all(Value::is_str) => {
                Some(items.into_iter().filter_map(|v| v.as_str().map(str::to_string)).collect())
            }
            Some(_) => {
                r.error(&self.key(k), "expected a list of strings");
                None
            }
        }
    }

    fn list(&mut self, r: &mut Reader, k: &str, dim: Dim) -> Option<Vec<f64>> {
        let key = self.key(k);
        match self.take(k) {
            None => None,
            Some(Value::Array(items)) => Some(items.iter().filter_map(|v| r.convert(&key, v, dim)).collect()),
            Some(_) => {
                r.error(&key, &format!("expected a list of {dim} values"));
                None
            }
        }
    }

    fn lengths(&mut self, r: &mut Reader, k: &str) -> Option<Vec<f64>> {
        self.list(r, k, Dim::Length)
    }

    fn angles(&mut self, r: &mut Reader, k: &str) -> Option<Vec<f64>> {
        self.list(r, k, Dim::Angle)
    }

    /// Reports whatever keys were not consumed.
    fn finish(self, r: &mut Reader) {
        let path = self.path.clone();
        for k in self.table.keys() {
            let key = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            r.error(&key, "unknown key");
        }
    }
}
