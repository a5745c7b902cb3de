//! Forward and inverse kinematics of a single three-legged origami tile.
//!
//! Each leg is hinged to the base at `B_i`, folds at a central waterbomb
//! joint `J_i` halfway along its length, and is hinged to the end-effector
//! plate at `E_i`. Base and plate hinges are mirror images across the plane
//! through the three central joints, so the end-effector centre `O_E` is the
//! reflection of the base centre `O_B` across that plane.
//!
//! Units are millimetres and radians throughout.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Below this `sin(phi)` the yaw angle is reported as zero.
pub const YAW_DEGENERACY: f64 = 1e-9;

/// Slack allowed on the joint-limit check for converged IK solutions.
const LIMIT_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("invalid tile geometry: {0}")]
    InvalidGeometry(String),
    #[error("leg {leg} angle {angle} rad outside [{min}, {max}]")]
    LimitViolation {
        leg: usize,
        angle: f64,
        min: f64,
        max: f64,
    },
    #[error("central joints are collinear; symmetry plane undefined")]
    SingularConfiguration,
    #[error("pose unreachable (residual {residual:.3e} mm after {iterations} iterations)")]
    UnreachablePose { residual: f64, iterations: usize },
}

/// Fixed geometric parameters of one tile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileGeometry {
    /// Full leg length `l`, split equally by the central joint.
    pub leg_length: f64,
    /// Radius `R` of the circle through the base hinges.
    pub base_radius: f64,
    /// Azimuth of each leg base about the tile z axis.
    pub leg_azimuths: [f64; 3],
    pub theta_min: f64,
    pub theta_max: f64,
    /// Edge length of the square end-effector plate.
    pub plate_width: f64,
    /// Offset of the plate surface along the plate normal.
    pub plate_height: f64,
}

impl Default for TileGeometry {
    fn default() -> Self {
        Self {
            leg_length: 130.0,
            base_radius: 44.01,
            leg_azimuths: [PI / 3.0, PI, 5.0 * PI / 3.0],
            theta_min: 0.0,
            theta_max: 7.0 * PI / 18.0,
            plate_width: 150.0,
            plate_height: 6.0,
        }
    }
}

impl TileGeometry {
    pub fn half_leg(&self) -> f64 {
        0.5 * self.leg_length
    }

    /// Checks the geometric invariants, collecting every violation.
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let mut problems = Vec::new();
        if !(self.leg_length > 0.0) {
            problems.push(format!("leg_length must be > 0 (got {})", self.leg_length));
        }
        if !(self.base_radius > 0.0) {
            problems.push(format!("base_radius must be > 0 (got {})", self.base_radius));
        }
        if !(0.0 <= self.theta_min && self.theta_min < self.theta_max && self.theta_max <= FRAC_PI_2) {
            problems.push(format!(
                "joint limits must satisfy 0 <= theta_min < theta_max <= pi/2 (got [{}, {}])",
                self.theta_min, self.theta_max
            ));
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let d = (self.leg_azimuths[i] - self.leg_azimuths[j]).rem_euclid(TAU);
                if d < 1e-12 || TAU - d < 1e-12 {
                    problems.push(format!("leg azimuths {i} and {j} coincide modulo 2pi"));
                }
            }
        }
        if !(self.plate_width > 0.0) {
            problems.push(format!("plate_width must be > 0 (got {})", self.plate_width));
        }
        if !(self.plate_height >= 0.0) {
            problems.push(format!("plate_height must be >= 0 (got {})", self.plate_height));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(KinematicsError::InvalidGeometry(problems.join("; ")))
        }
    }

    /// Outward radial unit vector of leg `i` in the base plane.
    fn radial(&self, i: usize) -> Vector3<f64> {
        let a = self.leg_azimuths[i];
        Vector3::new(a.cos(), a.sin(), 0.0)
    }

    fn check_limits(&self, theta: &LegAngles, slack: f64) -> Result<(), KinematicsError> {
        for (leg, &angle) in theta.0.iter().enumerate() {
            if !(angle >= self.theta_min - slack && angle <= self.theta_max + slack) {
                return Err(KinematicsError::LimitViolation {
                    leg,
                    angle,
                    min: self.theta_min,
                    max: self.theta_max,
                });
            }
        }
        Ok(())
    }
}

/// Angles between each lower leg link and the base plane; zero is flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegAngles(pub [f64; 3]);

impl LegAngles {
    pub fn uniform(a: f64) -> Self {
        Self([a; 3])
    }

    /// `(t1, t2, t3) -> (t3, t1, t2)`: leg `i+1` takes leg `i`'s angle.
    pub fn rotated(&self) -> Self {
        let [a, b, c] = self.0;
        Self([c, a, b])
    }
}

/// End-effector placement `(delta, phi, r)`: yaw about z, tilt from vertical,
/// and base-to-end-effector distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub delta: f64,
    pub phi: f64,
    pub r: f64,
}

impl Pose {
    /// Builds a canonical pose. A negative tilt is rewritten as a positive
    /// tilt with the yaw flipped by pi; yaw is wrapped into `[0, 2pi)` and
    /// zeroed when the tilt is degenerate.
    pub fn new(delta: f64, phi: f64, r: f64) -> Self {
        let (delta, phi) = if phi < 0.0 { (delta + PI, -phi) } else { (delta, phi) };
        let delta = if phi.sin().abs() < YAW_DEGENERACY {
            0.0
        } else {
            let d = delta.rem_euclid(TAU);
            if d >= TAU {
                0.0
            } else {
                d
            }
        };
        Self { delta, phi, r }
    }

    pub fn level(r: f64) -> Self {
        Self { delta: 0.0, phi: 0.0, r }
    }

    /// Unit direction of `O_B -> O_E`.
    pub fn direction(&self) -> Vector3<f64> {
        let (sp, cp) = self.phi.sin_cos();
        let (sd, cd) = self.delta.sin_cos();
        Vector3::new(sp * cd, sp * sd, cp)
    }

    /// End-effector orientation: yaw `delta` about z, then tilt `phi` about
    /// the yawed y axis. The plate normal equals [`Pose::direction`].
    pub fn orientation(&self) -> Matrix3<f64> {
        let (sd, cd) = self.delta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        let yaw = Matrix3::new(cd, -sd, 0.0, sd, cd, 0.0, 0.0, 0.0, 1.0);
        let tilt = Matrix3::new(cp, 0.0, sp, 0.0, 1.0, 0.0, -sp, 0.0, cp);
        yaw * tilt
    }

    /// Recovers a canonical pose from an end-effector position.
    pub fn from_cartesian(p: &Vector3<f64>) -> Self {
        let r = p.norm();
        if r == 0.0 {
            return Self::level(0.0);
        }
        let phi = (p.z / r).clamp(-1.0, 1.0).acos();
        let delta = p.y.atan2(p.x);
        Self::new(delta, phi, r)
    }
}

pub fn pose_to_cartesian(pose: &Pose) -> Vector3<f64> {
    pose.direction() * pose.r
}

/// A plane `{x : normal . x = offset}` with unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl Plane {
    pub fn reflect(&self, p: &Vector3<f64>) -> Vector3<f64> {
        p - self.normal * (2.0 * (self.normal.dot(p) - self.offset))
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Hinge and joint positions for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LegJointState {
    pub base_hinges: [Vector3<f64>; 3],
    pub joints: [Vector3<f64>; 3],
    pub plate_hinges: [Vector3<f64>; 3],
    pub plane: Plane,
}

pub fn leg_base_positions(geom: &TileGeometry) -> [Vector3<f64>; 3] {
    std::array::from_fn(|i| geom.radial(i) * geom.base_radius)
}

fn joints_unchecked(geom: &TileGeometry, theta: &LegAngles) -> [Vector3<f64>; 3] {
    let base = leg_base_positions(geom);
    let h = geom.half_leg();
    std::array::from_fn(|i| {
        let (s, c) = theta.0[i].sin_cos();
        base[i] + (geom.radial(i) * c + Vector3::z() * s) * h
    })
}

/// Central joint positions. The lower link folds outward in the leg's
/// radial plane.
pub fn joint_positions(
    geom: &TileGeometry,
    theta: &LegAngles,
) -> Result<[Vector3<f64>; 3], KinematicsError> {
    geom.check_limits(theta, 0.0)?;
    Ok(joints_unchecked(geom, theta))
}

fn symmetry_plane(joints: &[Vector3<f64>; 3]) -> Result<Plane, KinematicsError> {
    let n = (joints[1] - joints[0]).cross(&(joints[2] - joints[0]));
    let scale = (joints[1] - joints[0]).norm() * (joints[2] - joints[0]).norm();
    let len = n.norm();
    if !(len > 1e-12 * scale.max(1.0)) {
        return Err(KinematicsError::SingularConfiguration);
    }
    let mut normal = n / len;
    if normal.z < 0.0 {
        normal = -normal;
    }
    let offset = normal.dot(&joints[0]);
    Ok(Plane { normal, offset })
}

/// End-effector position without joint-limit checks; used inside the solver.
fn end_effector_unchecked(geom: &TileGeometry, theta: &LegAngles) -> Result<Vector3<f64>, KinematicsError> {
    let plane = symmetry_plane(&joints_unchecked(geom, theta))?;
    Ok(plane.normal * (2.0 * plane.offset))
}

pub fn forward_kinematics(
    geom: &TileGeometry,
    theta: &LegAngles,
) -> Result<(Pose, LegJointState), KinematicsError> {
    let joints = joint_positions(geom, theta)?;
    let plane = symmetry_plane(&joints)?;
    let base_hinges = leg_base_positions(geom);
    let plate_hinges = base_hinges.map(|b| plane.reflect(&b));
    let oe = plane.reflect(&Vector3::zeros());
    let pose = Pose::from_cartesian(&oe);
    Ok((
        pose,
        LegJointState {
            base_hinges,
            joints,
            plate_hinges,
            plane,
        },
    ))
}

/// Convenience: the end-effector centre for in-range leg angles.
pub fn end_effector_position(geom: &TileGeometry, theta: &LegAngles) -> Result<Vector3<f64>, KinematicsError> {
    geom.check_limits(theta, 0.0)?;
    end_effector_unchecked(geom, theta)
}

/// Settings for the damped Newton solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSettings {
    /// Accepted Cartesian residual (mm).
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Forward-difference step for the Jacobian (rad).
    pub fd_step: f64,
}

impl Default for IkSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 100,
            fd_step: 1e-6,
        }
    }
}

pub fn inverse_kinematics(geom: &TileGeometry, target: &Pose) -> Result<LegAngles, KinematicsError> {
    inverse_kinematics_with(geom, target, &IkSettings::default())
}

/// Solves for leg angles placing `O_E` at the target's Cartesian position.
///
/// The residual lives in Cartesian space so the yaw degeneracy at zero tilt
/// never enters the iteration.
pub fn inverse_kinematics_with(
    geom: &TileGeometry,
    target: &Pose,
    settings: &IkSettings,
) -> Result<LegAngles, KinematicsError> {
    let goal = pose_to_cartesian(target);
    if !(target.r >= 0.0) || target.r > geom.leg_length {
        return Err(KinematicsError::UnreachablePose {
            residual: (target.r - target.r.clamp(0.0, geom.leg_length)).abs(),
            iterations: 0,
        });
    }
    // Iterate past the acceptance tolerance; Newton converges fast here and
    // the extra digits are free.
    let polish = settings.tolerance * 1e-3;
    let seed = (target.r / geom.leg_length).min(1.0).asin();
    let mut theta = Vector3::new(seed, seed, seed);
    let eval = |t: &Vector3<f64>| end_effector_unchecked(geom, &LegAngles([t.x, t.y, t.z]));

    let mut residual = match eval(&theta) {
        Ok(p) => p - goal,
        Err(_) => {
            theta.add_scalar_mut(1e-3);
            eval(&theta)? - goal
        }
    };
    let mut lambda = 1e-6;
    let mut iterations = 0;
    while iterations < settings.max_iterations && residual.norm() > polish {
        iterations += 1;
        let mut jac = Matrix3::zeros();
        for k in 0..3 {
            let mut probe = theta;
            probe[k] += settings.fd_step;
            let col = (eval(&probe)? - goal - residual) / settings.fd_step;
            jac.set_column(k, &col);
        }
        let jt = jac.transpose();
        let jtj = jt * jac;
        let grad = jt * residual;
        let mut improved = false;
        for _ in 0..30 {
            let damped = jtj + Matrix3::identity() * lambda;
            let Some(step) = damped.lu().solve(&grad) else {
                lambda *= 10.0;
                continue;
            };
            let candidate = theta - step;
            if let Ok(p) = eval(&candidate) {
                let r = p - goal;
                if r.norm() < residual.norm() {
                    theta = candidate;
                    residual = r;
                    lambda = (lambda * 0.1).max(1e-15);
                    improved = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }

    let err = residual.norm();
    if !(err <= settings.tolerance) {
        return Err(KinematicsError::UnreachablePose {
            residual: err,
            iterations,
        });
    }
    let mut angles = LegAngles([theta.x, theta.y, theta.z]);
    geom.check_limits(&angles, LIMIT_SLACK)?;
    for a in angles.0.iter_mut() {
        *a = a.clamp(geom.theta_min, geom.theta_max);
    }
    Ok(angles)
}

/// True when some in-range leg angles realise `pose`.
pub fn is_reachable(geom: &TileGeometry, pose: &Pose) -> bool {
    inverse_kinematics(geom, pose).is_ok()
}
