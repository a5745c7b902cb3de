//! Per-tile pose trajectories: the phase-offset sinusoidal pattern, the
//! six-state cycle used for sliding objects, and an optional vibration on
//! the extension.
//!
//! Tile indices are 1-based, matching the phase recurrence
//! `p_i = p_{i-1} + P`.

use std::f64::consts::{PI, TAU};

use serde::Serialize;
use thiserror::Error;

use crate::coupling::{self, ArrayConfig, CycleSample};
use crate::kinematics::{is_reachable, Pose};

pub const DEFAULT_SLACK: f64 = PI / 18.0;
pub const DEFAULT_PHI_CAP: f64 = 5.0 * PI / 36.0;
/// Absolute tilt ceiling applied after slack compensation.
pub const PHI_CEILING: f64 = 25.0 * PI / 180.0;
/// Height amplitude used for the rolling-object presets.
pub const ROLLING_H_MAX: f64 = 15.0;
pub const DEFAULT_DWELL: f64 = 5.0;
pub const STATE_COUNT: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("invalid motion parameters: {0}")]
    InvalidParams(String),
    #[error("vibration drives extension negative (r = {r} mm at t = {t} s)")]
    NegativeExtension { r: f64, t: f64 },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinusoidalParams {
    /// Array-aligned yaw shared by every tile.
    pub delta: f64,
    pub phi_max: f64,
    pub f_s: f64,
    /// Tilt phase offset between adjacent tiles.
    pub p_s: f64,
    pub r0: f64,
    pub h_max: f64,
    pub f_h: f64,
    /// Height phase offset between adjacent tiles.
    pub p_h: f64,
}

impl Default for SinusoidalParams {
    fn default() -> Self {
        Self {
            delta: 0.0,
            phi_max: PI / 9.0,
            f_s: 1.0,
            p_s: 0.0,
            r0: 70.0,
            h_max: 0.0,
            f_h: 1.0,
            p_h: 0.0,
        }
    }
}

impl SinusoidalParams {
    pub fn validate(&self) -> Result<(), MotionError> {
        let mut problems = Vec::new();
        if !(self.phi_max >= 0.0) {
            problems.push("phi_max must be >= 0");
        }
        if !(self.h_max >= 0.0) {
            problems.push("h_max must be >= 0");
        }
        if !(self.f_s > 0.0) {
            problems.push("f_s must be > 0");
        }
        if !(self.f_h > 0.0) {
            problems.push("f_h must be > 0");
        }
        if !(self.r0 >= self.h_max) {
            problems.push("r0 must be >= h_max so the extension stays non-negative");
        }
        if !(self.delta.is_finite() && self.p_s.is_finite() && self.p_h.is_finite()) {
            problems.push("delta, p_s and p_h must be finite");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(MotionError::InvalidParams(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateCycleParams {
    pub phi_forward: f64,
    pub phi_backward: f64,
    pub r_high: f64,
    pub r_low: f64,
    /// Dwell time per state.
    pub dwell: f64,
    /// States by which each tile leads its left neighbour.
    pub neighbor_offset: usize,
}

impl Default for StateCycleParams {
    fn default() -> Self {
        Self {
            phi_forward: 5.0 * PI / 36.0,
            phi_backward: PI / 12.0,
            r_high: 70.0,
            r_low: 40.0,
            dwell: DEFAULT_DWELL,
            neighbor_offset: 3,
        }
    }
}

impl StateCycleParams {
    pub fn validate(&self) -> Result<(), MotionError> {
        let mut problems = Vec::new();
        if !(self.phi_forward > 0.0 && self.phi_backward > 0.0) {
            problems.push("forward and backward tilts must be > 0");
        }
        if !(self.r_high > self.r_low && self.r_low > 0.0) {
            problems.push("extensions must satisfy r_high > r_low > 0");
        }
        if !(self.dwell > 0.0) {
            problems.push("dwell must be > 0");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(MotionError::InvalidParams(problems.join("; ")))
        }
    }

    /// 1-based state of tile `i` at time `t`.
    pub fn state_index(&self, tile: usize, t: f64) -> usize {
        let step = (t / self.dwell).floor() as i64;
        let lead = (self.neighbor_offset * (tile.max(1) - 1)) as i64;
        ((step + lead).rem_euclid(STATE_COUNT as i64)) as usize + 1
    }

    pub fn state_pose(&self, state: usize) -> Pose {
        match state {
            1 | 6 => Pose::new(0.0, self.phi_forward, self.r_high),
            2 => Pose::new(PI, self.phi_backward, self.r_high),
            3 => Pose::level(self.r_high),
            4 => Pose::new(PI, self.phi_backward, self.r_low),
            5 => Pose::level(self.r_low),
            _ => panic!("state index {state} outside 1..=6"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VibrationParams {
    pub frequency: f64,
    pub amplitude: f64,
}

impl Default for VibrationParams {
    fn default() -> Self {
        Self {
            frequency: 5.0,
            amplitude: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum PatternKind {
    Sinusoidal(SinusoidalParams),
    StateCycle(StateCycleParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MotionPattern {
    pub kind: PatternKind,
    pub vibration: Option<VibrationParams>,
}

impl MotionPattern {
    pub fn sinusoidal(params: SinusoidalParams) -> Self {
        Self {
            kind: PatternKind::Sinusoidal(params),
            vibration: None,
        }
    }

    pub fn state_cycle(params: StateCycleParams) -> Self {
        Self {
            kind: PatternKind::StateCycle(params),
            vibration: None,
        }
    }

    pub fn with_vibration(mut self, vibration: VibrationParams) -> Self {
        self.vibration = Some(vibration);
        self
    }

    pub fn validate(&self) -> Result<(), MotionError> {
        match &self.kind {
            PatternKind::Sinusoidal(p) => p.validate()?,
            PatternKind::StateCycle(p) => p.validate()?,
        }
        if let Some(v) = &self.vibration {
            if !(v.amplitude >= 0.0 && v.frequency > 0.0) {
                return Err(MotionError::InvalidParams(
                    "vibration needs amplitude >= 0 and frequency > 0".into(),
                ));
            }
        }
        Ok(())
    }

    /// Pose of tile `tile` (1-based) at time `t`, vibration included.
    pub fn pose(&self, tile: usize, t: f64) -> Result<Pose, MotionError> {
        let base = match &self.kind {
            PatternKind::Sinusoidal(p) => sinusoidal_pose(p, tile, t),
            PatternKind::StateCycle(p) => state_cycle_pose(p, tile, t),
        };
        match &self.vibration {
            Some(v) => apply_vibration(&base, v, t),
            None => Ok(base),
        }
    }

    /// Smallest period common to every oscillation in the pattern, searched
    /// over integer multiples of the base period.
    pub fn period(&self) -> f64 {
        let (base, mut others) = match &self.kind {
            PatternKind::Sinusoidal(p) if p.h_max == 0.0 => (1.0 / p.f_s, vec![]),
            PatternKind::Sinusoidal(p) => (1.0 / p.f_s, vec![p.f_h]),
            PatternKind::StateCycle(p) => (STATE_COUNT as f64 * p.dwell, vec![]),
        };
        if let Some(v) = &self.vibration {
            if v.amplitude > 0.0 {
                others.push(v.frequency);
            }
        }
        for k in 1..=1000u32 {
            let t = base * k as f64;
            if others.iter().all(|f| {
                let cycles = t * f;
                (cycles - cycles.round()).abs() < 1e-9 * cycles.max(1.0)
            }) {
                return t;
            }
        }
        base
    }
}

/// Pose of tile `tile` under the sinusoidal pattern. Negative tilt is
/// realised by flipping yaw by pi.
pub fn sinusoidal_pose(params: &SinusoidalParams, tile: usize, t: f64) -> Pose {
    let k = tile.max(1) as f64 - 1.0;
    let phi = params.phi_max * (TAU * params.f_s * t + params.p_s * k).sin();
    let r = params.r0 + params.h_max * (TAU * params.f_h * t + params.p_h * k).sin();
    Pose::new(params.delta, phi, r)
}

/// Signed tilt of the sinusoidal pattern before the yaw-flip rewrite.
pub fn sinusoidal_signed_tilt(params: &SinusoidalParams, tile: usize, t: f64) -> f64 {
    let k = tile.max(1) as f64 - 1.0;
    params.phi_max * (TAU * params.f_s * t + params.p_s * k).sin()
}

pub fn state_cycle_pose(params: &StateCycleParams, tile: usize, t: f64) -> Pose {
    params.state_pose(params.state_index(tile, t))
}

/// Adds the extension vibration. A negative result is an error rather than
/// being clamped.
pub fn apply_vibration(pose: &Pose, vib: &VibrationParams, t: f64) -> Result<Pose, MotionError> {
    let r = pose.r + vib.amplitude * (TAU * vib.frequency * t).sin();
    if r < 0.0 {
        return Err(MotionError::NegativeExtension { r, t });
    }
    Ok(Pose { r, ..*pose })
}

/// Tilt amplitude after slack compensation: the shared-workspace limit is
/// capped at `cap`, the slack added, and the result held under
/// [`PHI_CEILING`].
pub fn clamp_phi_max(shared_limit: f64, slack: f64, cap: f64) -> f64 {
    (shared_limit.min(cap) + slack).min(PHI_CEILING)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    /// 1-based index of the left tile of this gap.
    pub left_tile: usize,
    pub material_length: f64,
    /// `false` when the gap has no material and hence no constraint.
    pub connected: bool,
    pub lmin: f64,
    pub worst_time: f64,
    pub margin: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TileReport {
    pub tile: usize,
    pub reachable: bool,
    /// Sample times at which the commanded pose could not be realised.
    pub unreachable_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub period: f64,
    pub dt: f64,
    pub gaps: Vec<GapReport>,
    pub tiles: Vec<TileReport>,
}

impl ValidityReport {
    pub fn min_margin(&self) -> Option<f64> {
        self.gaps
            .iter()
            .filter(|g| g.connected)
            .map(|g| g.margin)
            .reduce(f64::min)
    }
}

/// Checks every gap's material constraint and every tile's pose
/// reachability over one sampled period. Gaps with zero material length
/// carry no constraint.
pub fn validate_pattern(pattern: &MotionPattern, config: &ArrayConfig, period: f64, dt: f64) -> ValidityReport {
    let times = coupling::cycle_times(period, dt);
    let n = config.bases.len();

    let tiles: Vec<TileReport> = (1..=n)
        .map(|tile| {
            let unreachable_times: Vec<f64> = times
                .iter()
                .copied()
                .filter(|&t| match pattern.pose(tile, t) {
                    Ok(p) => !is_reachable(&config.geom, &p),
                    Err(_) => true,
                })
                .collect();
            TileReport {
                tile,
                reachable: unreachable_times.is_empty(),
                unreachable_times,
            }
        })
        .collect();

    let gaps: Vec<GapReport> = (1..n)
        .map(|left| {
            let material_length = config.material_lengths[left - 1];
            let samples: Vec<CycleSample> = times
                .iter()
                .map(|&t| coupling::gap_sample(pattern, config, left, t, false))
                .collect();
            let (lmin, worst_time) = coupling::max_alpha(&samples);
            let connected = material_length > 0.0;
            GapReport {
                left_tile: left,
                material_length,
                connected,
                lmin,
                worst_time,
                margin: material_length - lmin,
                feasible: !connected || lmin <= material_length,
            }
        })
        .collect();

    let valid = pattern.validate().is_ok() && gaps.iter().all(|g| g.feasible) && tiles.iter().all(|t| t.reachable);
    ValidityReport {
        valid,
        period,
        dt,
        gaps,
        tiles,
    }
}

/// Named parameter sets used in the transport experiments.
pub const PRESET_NAMES: [&str; 5] = ["A", "B", "state-100:240", "state-150:280", "state-200:320"];

pub fn pattern_preset(name: &str) -> Result<MotionPattern, MotionError> {
    let rolling = |f_s, f_h, p_s, p_h| {
        MotionPattern::sinusoidal(SinusoidalParams {
            f_s,
            f_h,
            p_s,
            p_h,
            h_max: ROLLING_H_MAX,
            phi_max: DEFAULT_PHI_CAP,
            ..Default::default()
        })
    };
    let sliding = |phi_forward, r_high| {
        MotionPattern::state_cycle(StateCycleParams {
            phi_forward,
            phi_backward: PI / 12.0,
            r_high,
            r_low: 40.0,
            ..Default::default()
        })
        .with_vibration(VibrationParams::default())
    };
    match name {
        "A" => Ok(rolling(0.25, 0.25, PI / 2.0, PI / 2.0)),
        "B" => Ok(rolling(0.25, 0.5, PI / 2.0, 0.0)),
        "state-100:240" => Ok(sliding(5.0 * PI / 36.0, 70.0)),
        "state-150:280" => Ok(sliding(PI / 6.0, 80.0)),
        "state-200:320" => Ok(sliding(5.0 * PI / 36.0, 85.0)),
        other => Err(MotionError::UnknownPreset(other.to_string())),
    }
}

pub fn pattern_presets() -> Vec<(&'static str, MotionPattern)> {
    PRESET_NAMES
        .iter()
        .map(|&n| (n, pattern_preset(n).expect("preset table is complete")))
        .collect()
}
