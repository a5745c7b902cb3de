//! Geometry of connected tiles: plate corners, the corner-to-corner span
//! `alpha` across the closest adjoining edges, the material-length
//! constraint `L >= alpha`, and minimum material lengths over a motion
//! cycle.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::kinematics::{is_reachable, pose_to_cartesian, Pose, TileGeometry};
use crate::motion::{validate_pattern, MotionPattern, PatternKind, SinusoidalParams};

/// Edge pairs whose summed corner distance lies within this of the best are
/// treated as tied.
const TIE_TOLERANCE: f64 = 1e-9;

/// Default number of time samples per motion period.
pub const DEFAULT_CYCLE_SAMPLES: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("invalid array: {0}")]
    InvalidArray(String),
    #[error("invalid sweep range [{from}, {to}] with {samples} samples")]
    InvalidRange { from: f64, to: f64, samples: usize },
    #[error("invalid cycle sampling: period {period} s, dt {dt} s")]
    InvalidSampling { period: f64, dt: f64 },
}

/// Placement of one tile: base frame in the world plus its pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileState {
    pub base: Vector3<f64>,
    pub base_yaw: f64,
    pub pose: Pose,
}

impl TileState {
    pub fn new(base: Vector3<f64>, pose: Pose) -> Self {
        Self {
            base,
            base_yaw: 0.0,
            pose,
        }
    }

    fn base_rotation(&self) -> Matrix3<f64> {
        let (s, c) = self.base_yaw.sin_cos();
        Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
    }

    /// World position of the end-effector centre.
    pub fn end_effector(&self) -> Vector3<f64> {
        self.base + self.base_rotation() * pose_to_cartesian(&self.pose)
    }
}

/// Ordered linear array of tiles joined by material.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    pub geom: TileGeometry,
    pub bases: Vec<Vector3<f64>>,
    /// Material length for each adjacent pair; zero means unconnected.
    pub material_lengths: Vec<f64>,
}

impl ArrayConfig {
    /// `count` tiles spaced `spacing` apart along x, every gap spanned by
    /// `material_length`.
    pub fn linear(geom: TileGeometry, count: usize, spacing: f64, material_length: f64) -> Self {
        Self {
            geom,
            bases: (0..count).map(|i| Vector3::new(spacing * i as f64, 0.0, 0.0)).collect(),
            material_lengths: vec![material_length; count.saturating_sub(1)],
        }
    }

    pub fn validate(&self) -> Result<(), CouplingError> {
        let mut problems = Vec::new();
        if self.bases.is_empty() {
            problems.push("array needs at least one tile".to_string());
        }
        if self.material_lengths.len() + 1 != self.bases.len().max(1) {
            problems.push(format!(
                "{} tiles need {} material lengths (got {})",
                self.bases.len(),
                self.bases.len().saturating_sub(1),
                self.material_lengths.len()
            ));
        }
        for (i, l) in self.material_lengths.iter().enumerate() {
            if !(*l >= 0.0) {
                problems.push(format!("material length {i} must be >= 0 (got {l})"));
            }
        }
        for (i, w) in self.bases.windows(2).enumerate() {
            if !(w[1].x > w[0].x) {
                problems.push(format!("tile {} is not after tile {} along the array axis", i + 1, i));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CouplingError::InvalidArray(problems.join("; ")))
        }
    }

    /// Centre-to-centre distance of each adjacent pair.
    pub fn spacings(&self) -> Vec<f64> {
        self.bases.windows(2).map(|w| (w[1] - w[0]).norm()).collect()
    }
}

/// Plate corners, counter-clockwise viewed from the plate's +z:
/// `(-,-), (+,-), (+,+), (-,+)`. Edge `k` joins corner `k` to `k+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateCorners(pub [Vector3<f64>; 4]);

impl PlateCorners {
    pub fn edge(&self, k: usize) -> (Vector3<f64>, Vector3<f64>) {
        (self.0[k % 4], self.0[(k + 1) % 4])
    }
}

const CORNER_SIGNS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];

pub fn end_effector_corners(state: &TileState, geom: &TileGeometry) -> PlateCorners {
    let half = 0.5 * geom.plate_width;
    let rot = state.base_rotation();
    let orient = state.pose.orientation();
    let centre = pose_to_cartesian(&state.pose);
    PlateCorners(CORNER_SIGNS.map(|(i, j)| {
        let local = Vector3::new(i * half, j * half, geom.plate_height);
        state.base + rot * (centre + orient * local)
    }))
}

/// Closest adjoining edges of two plates and how their corners pair up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePair {
    pub edge_x: usize,
    pub edge_y: usize,
    /// `(corner of X, corner of Y)` for each of the two connections.
    pub pairing: [(usize, usize); 2],
    pub distances: [f64; 2],
}

impl EdgePair {
    pub fn sum(&self) -> f64 {
        self.distances[0] + self.distances[1]
    }

    /// Span of the more distant corner pair.
    pub fn alpha(&self) -> f64 {
        self.distances[0].max(self.distances[1])
    }
}

/// Non-crossing pairing of edge `a` of X with edge `b` of Y: of the two ways
/// to join the endpoints, the one with the smaller total length.
fn pair_edges(cx: &PlateCorners, cy: &PlateCorners, a: usize, b: usize) -> EdgePair {
    let (xa, xb) = (a, (a + 1) % 4);
    let (ya, yb) = (b, (b + 1) % 4);
    let d = |i: usize, j: usize| (cx.0[i] - cy.0[j]).norm();
    let opposite = [d(xa, yb), d(xb, ya)];
    let parallel = [d(xa, ya), d(xb, yb)];
    if opposite[0] + opposite[1] <= parallel[0] + parallel[1] {
        EdgePair {
            edge_x: a,
            edge_y: b,
            pairing: [(xa, yb), (xb, ya)],
            distances: opposite,
        }
    } else {
        EdgePair {
            edge_x: a,
            edge_y: b,
            pairing: [(xa, ya), (xb, yb)],
            distances: parallel,
        }
    }
}

/// Edge pair minimising the summed corner distance. Near-ties resolve to the
/// smaller span, then lexicographically by `(edge_x, edge_y)`.
pub fn closest_edge_pair(cx: &PlateCorners, cy: &PlateCorners) -> EdgePair {
    let candidates: Vec<EdgePair> = (0..4)
        .flat_map(|a| (0..4).map(move |b| (a, b)))
        .map(|(a, b)| pair_edges(cx, cy, a, b))
        .collect();
    let best = candidates.iter().map(EdgePair::sum).fold(f64::INFINITY, f64::min);
    let mut chosen: Option<EdgePair> = None;
    for c in candidates.into_iter().filter(|c| c.sum() <= best + TIE_TOLERANCE) {
        match &chosen {
            Some(cur) if cur.alpha() <= c.alpha() => {}
            _ => chosen = Some(c),
        }
    }
    chosen.expect("sixteen candidates always exist")
}

pub fn alpha(x: &TileState, y: &TileState, geom: &TileGeometry) -> f64 {
    let cx = end_effector_corners(x, geom);
    let cy = end_effector_corners(y, geom);
    closest_edge_pair(&cx, &cy).alpha()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointReachability {
    pub reachable: bool,
    /// `L_i - alpha_i` per gap; `None` for gaps without material.
    pub margins: Vec<Option<f64>>,
}

/// Whether adjacent tiles can hold their poses without straining the
/// material. A gap of zero length has no material and no constraint.
pub fn is_reachable_jointly(states: &[TileState], config: &ArrayConfig) -> JointReachability {
    let margins: Vec<Option<f64>> = states
        .windows(2)
        .zip(&config.material_lengths)
        .map(|(w, &l)| (l > 0.0).then(|| l - alpha(&w[0], &w[1], &config.geom)))
        .collect();
    JointReachability {
        reachable: margins.iter().flatten().all(|m| *m >= 0.0),
        margins,
    }
}

/// One time sample of a gap over a motion cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleSample {
    pub t: f64,
    pub alpha: f64,
    /// Both tiles' commanded poses are realisable.
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LminResult {
    pub lmin: f64,
    pub worst_time: f64,
    pub infeasible_samples: usize,
    pub samples: Vec<CycleSample>,
}

impl LminResult {
    pub fn feasible(&self) -> bool {
        self.infeasible_samples == 0
    }
}

/// Sample times `k * dt` covering `[0, period)`.
pub fn cycle_times(period: f64, dt: f64) -> Vec<f64> {
    let n = ((period / dt) - 1e-9).ceil().max(1.0) as usize;
    (0..n).map(|k| k as f64 * dt).collect()
}

/// Alpha between tile `left` and `left + 1` (1-based) at time `t`.
pub(crate) fn gap_sample(pattern: &MotionPattern, config: &ArrayConfig, left: usize, t: f64, check_reach: bool) -> CycleSample {
    let geom = &config.geom;
    let poses = (pattern.pose(left, t), pattern.pose(left + 1, t));
    match poses {
        (Ok(px), Ok(py)) => {
            let x = TileState::new(config.bases[left - 1], px);
            let y = TileState::new(config.bases[left], py);
            CycleSample {
                t,
                alpha: alpha(&x, &y, geom),
                feasible: !check_reach || (is_reachable(geom, &px) && is_reachable(geom, &py)),
            }
        }
        _ => CycleSample {
            t,
            alpha: f64::NAN,
            feasible: false,
        },
    }
}

/// Largest alpha among samples and the time it occurs.
pub(crate) fn max_alpha(samples: &[CycleSample]) -> (f64, f64) {
    samples
        .iter()
        .filter(|s| !s.alpha.is_nan())
        .fold((f64::NEG_INFINITY, 0.0), |(best, bt), s| if s.alpha > best { (s.alpha, s.t) } else { (best, bt) })
}

/// Minimum material length keeping the first two tiles of `pattern`
/// connected over one sampled period. Unreachable poses are flagged per
/// sample rather than aborting.
pub fn min_material_length_over_cycle(
    pattern: &MotionPattern,
    pair: [Vector3<f64>; 2],
    geom: &TileGeometry,
    period: f64,
    dt: f64,
) -> Result<LminResult, CouplingError> {
    if !(period > 0.0 && dt > 0.0 && period.is_finite()) {
        return Err(CouplingError::InvalidSampling { period, dt });
    }
    let config = ArrayConfig {
        geom: *geom,
        bases: pair.to_vec(),
        material_lengths: vec![0.0],
    };
    let samples: Vec<CycleSample> = cycle_times(period, dt)
        .into_iter()
        .map(|t| gap_sample(pattern, &config, 1, t, true))
        .collect();
    let (lmin, worst_time) = max_alpha(&samples);
    Ok(LminResult {
        lmin,
        worst_time,
        infeasible_samples: samples.iter().filter(|s| !s.feasible).count(),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    /// Inter-tile distance (mm).
    D,
    /// Adjacent-tile tilt phase offset (rad).
    Ps,
    /// Tilt amplitude (rad).
    PhiMax,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "D" | "d" => Ok(Self::D),
            "Ps" | "ps" | "P_s" => Ok(Self::Ps),
            "phimax" | "phi_max" | "PhiMax" => Ok(Self::PhiMax),
            _ => Err(format!("unknown sweep axis {s:?} (expected D, Ps or phimax)")),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::D => "D",
            Self::Ps => "Ps",
            Self::PhiMax => "phimax",
        })
    }
}

/// Fixed parameters of a minimum-length sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBase {
    pub geom: TileGeometry,
    pub params: SinusoidalParams,
    /// x of the second tile base; the first sits at the origin.
    pub spacing: f64,
    pub cycle_samples: usize,
}

impl Default for SweepBase {
    fn default() -> Self {
        Self {
            geom: TileGeometry::default(),
            params: SinusoidalParams::default(),
            spacing: 400.0,
            cycle_samples: DEFAULT_CYCLE_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub lmin: f64,
    pub feasible: bool,
}

/// Evenly spaced values over `[from, to]`, endpoints included.
pub fn linspace(from: f64, to: f64, samples: usize) -> Vec<f64> {
    (0..samples)
        .map(|k| {
            if k + 1 == samples {
                to
            } else {
                from + (to - from) * k as f64 / (samples - 1) as f64
            }
        })
        .collect()
}

pub fn sweep_lmin(
    axis: SweepAxis,
    from: f64,
    to: f64,
    samples: usize,
    base: &SweepBase,
) -> Result<Vec<SweepPoint>, CouplingError> {
    let bad_range = !(from.is_finite() && to.is_finite() && from < to)
        || samples < 2
        || (axis == SweepAxis::PhiMax && from < 0.0)
        || (axis == SweepAxis::D && from <= 0.0);
    if bad_range {
        return Err(CouplingError::InvalidRange { from, to, samples });
    }
    linspace(from, to, samples)
        .into_par_iter()
        .map(|value| {
            let mut params = base.params;
            let mut spacing = base.spacing;
            match axis {
                SweepAxis::D => spacing = value,
                SweepAxis::Ps => params.p_s = value,
                SweepAxis::PhiMax => params.phi_max = value,
            }
            let pattern = MotionPattern::sinusoidal(params);
            let period = pattern.period();
            let res = min_material_length_over_cycle(
                &pattern,
                [Vector3::zeros(), Vector3::new(spacing, 0.0, 0.0)],
                &base.geom,
                period,
                period / base.cycle_samples as f64,
            )?;
            Ok(SweepPoint {
                value,
                lmin: res.lmin,
                feasible: res.feasible(),
            })
        })
        .collect()
}

/// Largest tilt amplitude in `[0, cap]` for which the pattern passes
/// [`validate_pattern`] on `array`: every connected gap within its material
/// length and every pose reachable. `None` if even zero tilt fails.
pub fn max_feasible_phi(pattern: &MotionPattern, array: &ArrayConfig, cap: f64, cycle_samples: usize) -> Option<f64> {
    let PatternKind::Sinusoidal(params) = pattern.kind else {
        return None;
    };
    let ok = |phi: f64| {
        let candidate = MotionPattern {
            kind: PatternKind::Sinusoidal(SinusoidalParams { phi_max: phi, ..params }),
            ..*pattern
        };
        let period = candidate.period();
        validate_pattern(&candidate, array, period, period / cycle_samples as f64).valid
    };
    if !ok(0.0) {
        return None;
    }
    if ok(cap) {
        return Some(cap);
    }
    let (mut lo, mut hi) = (0.0, cap);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Alpha between tile X at the origin with pose `(delta, phi, r)` and a
/// level tile Y at `(spacing, 0, 0)` with the same extension, over a grid.
pub fn alpha_map(
    geom: &TileGeometry,
    spacing: f64,
    r: f64,
    delta_samples: usize,
    phi_max: f64,
    phi_samples: usize,
) -> Vec<(f64, f64, f64)> {
    let y = TileState::new(Vector3::new(spacing, 0.0, 0.0), Pose::level(r));
    let deltas: Vec<f64> = (0..delta_samples).map(|k| TAU * k as f64 / delta_samples as f64).collect();
    let phis = linspace(0.0, phi_max, phi_samples.max(2));
    deltas
        .iter()
        .flat_map(|&d| phis.iter().map(move |&p| (d, p)))
        .map(|(d, p)| {
            let x = TileState::new(Vector3::zeros(), Pose { delta: d, phi: p, r });
            (d, p, alpha(&x, &y, geom))
        })
        .collect()
}

/// Traversable-distance gain of a three-tile array with spacing `d` over a
/// densely packed one of plate width `w`.
pub fn increase_factor(d: f64, w: f64) -> f64 {
    (2.0 * d + w) / (3.0 * w)
}
