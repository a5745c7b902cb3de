//! Reachable end-effector set of a single tile, sampled on a uniform grid of
//! leg angles.

use nalgebra::Vector3;
use rayon::prelude::*;
use thiserror::Error;

use crate::kinematics::{forward_kinematics, KinematicsError, LegAngles, Pose, TileGeometry};

pub const DEFAULT_RESOLUTION: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkspaceError {
    #[error("workspace resolution must be at least 2 (got {0})")]
    Resolution(usize),
    #[error("workspace cloud is empty")]
    EmptyCloud,
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkspacePoint {
    /// Grid index per leg axis.
    pub index: [usize; 3],
    pub theta: LegAngles,
    pub position: Vector3<f64>,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceCloud {
    pub resolution: usize,
    /// Row-major over `(theta1, theta2, theta3)`.
    pub points: Vec<WorkspacePoint>,
    /// Grid indices whose central joints were collinear.
    pub singular: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Bounds {
    pub fn contains(&self, other: &Bounds, tol: f64) -> bool {
        (0..3).all(|k| self.min[k] <= other.min[k] + tol && self.max[k] >= other.max[k] - tol)
    }
}

/// Angle of grid sample `k` on one leg axis.
pub fn grid_angle(geom: &TileGeometry, resolution: usize, k: usize) -> f64 {
    let span = geom.theta_max - geom.theta_min;
    if k + 1 == resolution {
        geom.theta_max
    } else {
        geom.theta_min + span * k as f64 / (resolution - 1) as f64
    }
}

pub fn sweep_workspace(geom: &TileGeometry, resolution: usize) -> Result<WorkspaceCloud, WorkspaceError> {
    if resolution < 2 {
        return Err(WorkspaceError::Resolution(resolution));
    }
    geom.validate()?;
    let n = resolution;
    let results: Vec<_> = (0..n * n * n)
        .into_par_iter()
        .map(|flat| {
            let index = [flat / (n * n), (flat / n) % n, flat % n];
            let theta = LegAngles(index.map(|k| grid_angle(geom, n, k)));
            (index, theta, forward_kinematics(geom, &theta))
        })
        .collect();

    let mut points = Vec::with_capacity(results.len());
    let mut singular = Vec::new();
    for (index, theta, fk) in results {
        match fk {
            Ok((pose, state)) => points.push(WorkspacePoint {
                index,
                theta,
                position: state.plane.normal * (2.0 * state.plane.offset),
                pose,
            }),
            Err(KinematicsError::SingularConfiguration) => singular.push(index),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(WorkspaceCloud {
        resolution,
        points,
        singular,
    })
}

pub fn workspace_bounds(cloud: &WorkspaceCloud) -> Result<Bounds, WorkspaceError> {
    bounds_of(cloud.points.iter().map(|p| p.position))
}

pub fn bounds_of(points: impl IntoIterator<Item = Vector3<f64>>) -> Result<Bounds, WorkspaceError> {
    let mut it = points.into_iter();
    let first = it.next().ok_or(WorkspaceError::EmptyCloud)?;
    let (min, max) = it.fold((first, first), |(lo, hi), p| (lo.inf(&p), hi.sup(&p)));
    Ok(Bounds { min, max })
}
