//! Quasi-static transport of an object across a linear tile array, in the
//! vertical x-z cross-section through the tile centres.
//!
//! Each step rebuilds the surface from the tiles' commanded poses and moves
//! a point contact under gravity, friction and rolling resistance. Material
//! between plates hangs as a circular arc when slack and straightens into a
//! chord when the plates pull it taut.

mod object;
mod surface;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use object::{step_object, Detection, ObjectKind, ObjectSpec, SimState, SimStatus, GRAVITY};
pub use surface::{
    material_shape, plate_cross_section, surface_height_slope, surface_profile, Arc, GapState, MaterialShape,
    Point, Segment, SegmentKind, SurfacePoint, SurfaceProfile, SurfaceQuery,
};

use crate::coupling::{max_feasible_phi, ArrayConfig, TileState, DEFAULT_CYCLE_SAMPLES};
use crate::kinematics::Pose;
use crate::motion::{
    clamp_phi_max, validate_pattern, MotionError, MotionPattern, PatternKind, SinusoidalParams, ValidityReport,
    DEFAULT_PHI_CAP, DEFAULT_SLACK,
};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_TIME_LIMIT: f64 = 20.0;
pub const DEFAULT_STRAIN_TOLERANCE: f64 = 0.02;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("pattern violates the array's constraints")]
    InvalidPattern(Box<ValidityReport>),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// Source of per-tile poses over time (tiles are 1-based).
pub trait TileSchedule: Sync {
    fn pose(&self, tile: usize, t: f64) -> Result<Pose, MotionError>;

    fn vibrating(&self) -> bool {
        false
    }
}

impl TileSchedule for MotionPattern {
    fn pose(&self, tile: usize, t: f64) -> Result<Pose, MotionError> {
        MotionPattern::pose(self, tile, t)
    }

    fn vibrating(&self) -> bool {
        self.vibration.is_some_and(|v| v.amplitude > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub array: ArrayConfig,
    pub pattern: MotionPattern,
    pub object: ObjectSpec,
    pub dt: f64,
    pub time_limit: f64,
    pub strain_tolerance: f64,
    pub seed: u64,
    /// Half-width of the uniform start-position jitter (mm).
    pub start_jitter: f64,
}

impl ExperimentConfig {
    pub fn new(array: ArrayConfig, pattern: MotionPattern, object: ObjectSpec) -> Self {
        Self {
            array,
            pattern,
            object,
            dt: DEFAULT_DT,
            time_limit: DEFAULT_TIME_LIMIT,
            strain_tolerance: DEFAULT_STRAIN_TOLERANCE,
            seed: 0,
            start_jitter: 0.0,
        }
    }

    /// Object starts on the centre of the left-most tile.
    pub fn start_x(&self) -> f64 {
        let x0 = self.array.bases[0].x;
        if self.start_jitter > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            x0 + rng.gen_range(-self.start_jitter..=self.start_jitter)
        } else {
            x0
        }
    }

    /// Success once past the right edge of the right-most tile.
    pub fn detection(&self) -> Detection {
        let last = self.array.bases.last().expect("array has tiles");
        Detection {
            boundary: last.x + 0.5 * self.array.geom.plate_width,
            direction: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let mut problems = Vec::new();
        if let Err(e) = self.array.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.array.geom.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.pattern.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.object.validate() {
            problems.push(e);
        }
        if !(self.dt > 0.0) {
            problems.push("dt must be > 0".into());
        }
        if !(self.time_limit > 0.0) {
            problems.push("time limit must be > 0".into());
        }
        if !(self.strain_tolerance >= 0.0) {
            problems.push("strain tolerance must be >= 0".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SimError::InvalidConfiguration(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Success,
    Timeout,
    InGapFailure,
    StrainViolation,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Success => "success",
            Self::Timeout => "timeout",
            Self::InGapFailure => "in-gap-failure",
            Self::StrainViolation => "strain-violation",
        }
    }

    pub fn is_success(self) -> bool {
        self == Self::Success
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: f64,
    /// Contact height plus the object's contact radius.
    pub z: f64,
    pub v: f64,
    pub status: SimStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeSummary {
    pub outcome: Outcome,
    pub time_to_detection_s: Option<f64>,
    pub max_strain: f64,
    /// Smallest `L - chord` over connected gaps and time.
    pub min_margin_mm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub summary: OutcomeSummary,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl ExperimentResult {
    pub fn final_state(&self) -> &TrajectoryPoint {
        self.trajectory.last().expect("trajectory starts with the initial state")
    }

    pub fn net_displacement(&self) -> f64 {
        self.final_state().x - self.trajectory[0].x
    }
}

/// Fixed-step integration of one object on one array, independent of how
/// the tile poses are produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub array: ArrayConfig,
    pub object: ObjectSpec,
    pub start_x: f64,
    pub detection: Detection,
    pub dt: f64,
    pub time_limit: f64,
    pub strain_tolerance: f64,
}

impl Simulation {
    pub fn profile_at(&self, schedule: &dyn TileSchedule, t: f64) -> Result<SurfaceProfile, SimError> {
        let states = self
            .array
            .bases
            .iter()
            .enumerate()
            .map(|(i, b)| Ok(TileState::new(*b, schedule.pose(i + 1, t)?)))
            .collect::<Result<Vec<_>, SimError>>()?;
        let mut p = surface_profile(&states, &self.array, t, self.strain_tolerance)?;
        p.vibrating = schedule.vibrating();
        Ok(p)
    }

    pub fn run(&self, schedule: &dyn TileSchedule) -> Result<ExperimentResult, SimError> {
        let steps = (self.time_limit / self.dt).round() as usize;
        let mut profile = self.profile_at(schedule, 0.0)?;
        let mut state = SimState::at(self.start_x);
        let mut trajectory = Vec::with_capacity(steps + 1);
        let mut max_strain = 0.0f64;
        let mut min_margin: Option<f64> = None;
        let mut strained = false;

        let mut track = |p: &SurfaceProfile| {
            max_strain = max_strain.max(p.max_strain());
            strained |= p.strain_violation();
            for g in p.gaps.iter().filter(|g| g.material_length > 0.0) {
                let m = g.material_length - g.chord;
                min_margin = Some(min_margin.map_or(m, |cur: f64| cur.min(m)));
            }
        };
        track(&profile);
        trajectory.push(self.record(&state, &profile));

        for k in 1..=steps {
            let t = k as f64 * self.dt;
            let next = self.profile_at(schedule, t)?;
            track(&next);
            state = step_object(&state, &self.object, &profile, &next, self.dt, &self.detection);
            state.t = t;
            if k == steps && state.status == SimStatus::OnSurface {
                state.status = SimStatus::Timeout;
            }
            trajectory.push(self.record(&state, &next));
            profile = next;
            if state.status.is_terminal() {
                break;
            }
        }

        let outcome = match state.status {
            _ if strained => Outcome::StrainViolation,
            SimStatus::Success => Outcome::Success,
            SimStatus::InGapFailure => Outcome::InGapFailure,
            SimStatus::OnSurface | SimStatus::Timeout => Outcome::Timeout,
        };
        Ok(ExperimentResult {
            summary: OutcomeSummary {
                outcome,
                time_to_detection_s: (state.status == SimStatus::Success).then_some(state.t),
                max_strain,
                min_margin_mm: min_margin,
            },
            trajectory,
        })
    }

    fn record(&self, state: &SimState, profile: &SurfaceProfile) -> TrajectoryPoint {
        let z = match profile.query(state.x) {
            SurfaceQuery::On(p) => p.z + self.object.size,
            _ => f64::NAN,
        };
        TrajectoryPoint {
            t: state.t,
            x: state.x,
            z,
            v: state.v,
            status: state.status,
        }
    }
}

/// Validates the pattern against the array, then simulates. Invalid
/// patterns are refused with their report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, SimError> {
    cfg.validate()?;
    let period = cfg.pattern.period();
    let report = validate_pattern(&cfg.pattern, &cfg.array, period, period / DEFAULT_CYCLE_SAMPLES as f64);
    if !report.valid {
        return Err(SimError::InvalidPattern(Box::new(report)));
    }
    let sim = Simulation {
        array: cfg.array.clone(),
        object: cfg.object,
        start_x: cfg.start_x(),
        detection: cfg.detection(),
        dt: cfg.dt,
        time_limit: cfg.time_limit,
        strain_tolerance: cfg.strain_tolerance,
    };
    sim.run(&cfg.pattern)
}

/// Fills in the tilt amplitude of a sinusoidal pattern from the array's
/// shared workspace: the largest feasible amplitude up to
/// `cap`, optionally with slack compensation added. Returns `None` when no
/// amplitude is feasible.
pub fn auto_phi_max(
    pattern: &MotionPattern,
    array: &ArrayConfig,
    cap: f64,
    slack_compensation: bool,
) -> Option<MotionPattern> {
    let PatternKind::Sinusoidal(params) = pattern.kind else {
        return Some(*pattern);
    };
    let limit = max_feasible_phi(pattern, array, cap, DEFAULT_CYCLE_SAMPLES)?;
    let phi_max = if slack_compensation {
        clamp_phi_max(limit, DEFAULT_SLACK, cap)
    } else {
        limit
    };
    Some(MotionPattern {
        kind: PatternKind::Sinusoidal(SinusoidalParams { phi_max, ..params }),
        ..*pattern
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridCell {
    Success,
    Fail,
    Invalid,
    Untested,
}

impl GridCell {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Success => "success",
            Self::Fail => "fail",
            Self::Invalid => "invalid",
            Self::Untested => "untested",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Material lengths, one row each, in output order.
    pub lengths: Vec<f64>,
    /// Inter-tile distances, one column each.
    pub spacings: Vec<f64>,
    pub tiles: usize,
    /// Every pattern must succeed for a cell to count as a success.
    pub patterns: Vec<MotionPattern>,
    /// Tilt amplitudes are re-derived per cell from the shared workspace.
    pub auto_phi: bool,
    pub phi_cap: f64,
    pub slack_compensation: bool,
    /// `(L, D)` cells to leave untested.
    pub skip: Vec<(f64, f64)>,
    /// Template for everything except array and pattern.
    pub template: ExperimentConfig,
}

impl GridSpec {
    pub fn new(template: ExperimentConfig, patterns: Vec<MotionPattern>) -> Self {
        Self {
            lengths: vec![200.0, 150.0, 100.0, 50.0, 0.0],
            spacings: (0..9).map(|k| 180.0 + 20.0 * k as f64).collect(),
            tiles: 3,
            patterns,
            auto_phi: true,
            phi_cap: DEFAULT_PHI_CAP,
            slack_compensation: false,
            skip: Vec::new(),
            template,
        }
    }
}

/// Runs one cell of the grid.
pub fn run_cell(spec: &GridSpec, length: f64, spacing: f64) -> GridCell {
    if spec.skip.iter().any(|&(l, d)| l == length && d == spacing) {
        return GridCell::Untested;
    }
    let array = ArrayConfig::linear(spec.template.array.geom, spec.tiles, spacing, length);
    let mut all_ok = true;
    for pattern in &spec.patterns {
        let pattern = if spec.auto_phi {
            match auto_phi_max(pattern, &array, spec.phi_cap, spec.slack_compensation) {
                Some(p) => p,
                None => return GridCell::Invalid,
            }
        } else {
            *pattern
        };
        let cfg = ExperimentConfig {
            array: array.clone(),
            pattern,
            ..spec.template.clone()
        };
        match run_experiment(&cfg) {
            Ok(res) => all_ok &= res.summary.outcome.is_success(),
            Err(SimError::InvalidPattern(_)) => return GridCell::Invalid,
            Err(_) => return GridCell::Invalid,
        }
    }
    if all_ok {
        GridCell::Success
    } else {
        GridCell::Fail
    }
}

/// Success matrix over `(L, D)`, rows in `lengths` order. Cells run in
/// parallel and are merged by index.
pub fn run_grid(spec: &GridSpec) -> Vec<Vec<GridCell>> {
    let cols = spec.spacings.len();
    let cells: Vec<GridCell> = (0..spec.lengths.len() * cols)
        .into_par_iter()
        .map(|k| run_cell(spec, spec.lengths[k / cols], spec.spacings[k % cols]))
        .collect();
    cells.chunks(cols.max(1)).map(<[GridCell]>::to_vec).collect()
}
