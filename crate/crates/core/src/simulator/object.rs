//! Point-contact object dynamics on a moving cross-section surface.

use serde::{Deserialize, Serialize};

use super::surface::{SurfaceProfile, SurfaceQuery};

/// Gravitational acceleration in mm/s^2.
pub const GRAVITY: f64 = 9810.0;

/// A rise steeper than this over one step is treated as a wall.
const WALL_SLOPE: f64 = 5.671_281_819_617_709; // tan(80 deg)

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectKind {
    RollingCylinder,
    SlidingDisk,
    SlidingBlock,
}

impl ObjectKind {
    pub fn rolls(self) -> bool {
        matches!(self, Self::RollingCylinder)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectSpec {
    pub kind: ObjectKind,
    /// Contact radius (cylinder) or half-width (disk, block) in mm.
    pub size: f64,
    /// Grams; only reported, the dynamics are mass-independent.
    pub mass: f64,
    pub mu_static: f64,
    pub mu_kinetic: f64,
    pub mu_rolling: f64,
    /// Acceleration multiplier `1 / (1 + I / (m rho^2))` for rolling
    /// without slip; 2/3 for a uniform cylinder.
    pub inertia_factor: f64,
}

impl ObjectSpec {
    /// 40 mm diameter PLA cylinder.
    pub fn cylinder() -> Self {
        Self {
            kind: ObjectKind::RollingCylinder,
            size: 20.0,
            mass: 270.0,
            mu_static: 0.4,
            mu_kinetic: 0.3,
            mu_rolling: 0.01,
            inertia_factor: 2.0 / 3.0,
        }
    }

    /// 60 mm diameter, 5 mm thick disk.
    pub fn disk() -> Self {
        Self {
            kind: ObjectKind::SlidingDisk,
            size: 30.0,
            mass: 18.0,
            inertia_factor: 1.0,
            ..Self::cylinder()
        }
    }

    /// 40 mm cube, modelled as sliding only.
    pub fn cube() -> Self {
        Self {
            kind: ObjectKind::SlidingBlock,
            size: 20.0,
            mass: 80.0,
            inertia_factor: 1.0,
            ..Self::cylinder()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut problems = Vec::new();
        if !(self.size > 0.0) {
            problems.push("object size must be > 0");
        }
        if !(self.mass > 0.0) {
            problems.push("object mass must be > 0");
        }
        if !(self.mu_static >= self.mu_kinetic && self.mu_kinetic >= 0.0) {
            problems.push("friction must satisfy mu_s >= mu_k >= 0");
        }
        if !(self.mu_rolling >= 0.0) {
            problems.push("rolling resistance must be >= 0");
        }
        if !(self.inertia_factor > 0.0 && self.inertia_factor <= 1.0) {
            problems.push("inertia factor must lie in (0, 1]");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("; "))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimStatus {
    OnSurface,
    /// The object left the supported surface through an open gap or the
    /// array's far end.
    InGapFailure,
    Success,
    Timeout,
}

impl SimStatus {
    pub fn is_terminal(self) -> bool {
        !matches!(self, Self::OnSurface)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::OnSurface => "on-surface",
            Self::InGapFailure => "in-gap-failure",
            Self::Success => "success",
            Self::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub t: f64,
    /// Contact abscissa (mm).
    pub x: f64,
    /// Horizontal speed (mm/s).
    pub v: f64,
    pub status: SimStatus,
}

impl SimState {
    pub fn at(x: f64) -> Self {
        Self {
            t: 0.0,
            x,
            v: 0.0,
            status: SimStatus::OnSurface,
        }
    }
}

/// Direction of travel that counts as success, and where it is detected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub boundary: f64,
    /// `+1` when success lies at larger x.
    pub direction: f64,
}

impl Detection {
    fn reached(&self, x: f64) -> bool {
        (x - self.boundary) * self.direction >= 0.0
    }
}

/// Acceleration from gravity and friction, or `None` when the object holds
/// still.
fn acceleration(spec: &ObjectSpec, slope: f64, v: f64, vibrating: bool) -> Option<f64> {
    let (s, c) = slope.sin_cos();
    if spec.kind.rolls() {
        let drive = -GRAVITY * s * spec.inertia_factor;
        let resist = spec.mu_rolling * GRAVITY * c;
        if v == 0.0 {
            (drive.abs() > resist).then(|| drive - resist * drive.signum())
        } else {
            Some(drive - resist * v.signum())
        }
    } else {
        let drive = -GRAVITY * s;
        let resist = spec.mu_kinetic * GRAVITY * c;
        if v == 0.0 {
            let mu_hold = if vibrating { spec.mu_kinetic } else { spec.mu_static };
            (slope.tan().abs() > mu_hold).then(|| drive - resist * drive.signum())
        } else {
            Some(drive - resist * v.signum())
        }
    }
}

fn holds_at_rest(spec: &ObjectSpec, slope: f64, vibrating: bool) -> bool {
    acceleration(spec, slope, 0.0, vibrating).is_none()
}

/// Advances the object one step. Slope is read from the surface at the
/// start of the step; position is checked against the surface at the end.
pub fn step_object(
    state: &SimState,
    spec: &ObjectSpec,
    profile: &SurfaceProfile,
    next: &SurfaceProfile,
    dt: f64,
    detection: &Detection,
) -> SimState {
    if state.status.is_terminal() {
        return *state;
    }
    let t = state.t + dt;
    let leave = |x: f64| {
        let status = if detection.reached(x) { SimStatus::Success } else { SimStatus::InGapFailure };
        SimState { t, x, v: state.v, status }
    };
    let here = match profile.query(state.x) {
        SurfaceQuery::On(p) => p,
        _ => return leave(state.x),
    };

    let v = match acceleration(spec, here.slope, state.v, profile.vibrating) {
        None => 0.0,
        Some(a) => {
            let v_new = state.v + a * dt;
            let reversed = state.v != 0.0 && v_new.signum() != state.v.signum();
            if reversed && holds_at_rest(spec, here.slope, profile.vibrating) {
                0.0
            } else {
                v_new
            }
        }
    };
    let mut x = state.x + v * dt;
    let mut v = v;

    if let (SurfaceQuery::On(from), SurfaceQuery::On(to)) = (next.query(state.x), next.query(x)) {
        let dx = (x - state.x).abs();
        if to.z - from.z > WALL_SLOPE * dx + 1e-9 && from.segment != to.segment {
            x = state.x;
            v = 0.0;
        }
    }

    if detection.reached(x) {
        return SimState {
            t,
            x,
            v,
            status: SimStatus::Success,
        };
    }
    match next.query(x) {
        SurfaceQuery::On(_) => SimState {
            t,
            x,
            v,
            status: SimStatus::OnSurface,
        },
        _ => SimState {
            t,
            x,
            v,
            status: SimStatus::InGapFailure,
        },
    }
}
