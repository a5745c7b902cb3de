use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};
use tilekit_core::kinematics::{end_effector_position, inverse_kinematics, TileGeometry};
use tilekit_core::workspace::*;

fn geom() -> TileGeometry {
    TileGeometry::default()
}

fn hausdorff(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    let directed = |p: &[Vector3<f64>], q: &[Vector3<f64>]| {
        p.iter()
            .map(|x| q.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[test]
fn cloud_is_symmetric_under_leg_rotation() {
    let cloud = sweep_workspace(&geom(), 10).unwrap();
    let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), 2.0 * PI / 3.0);
    let pts: Vec<_> = cloud.points.iter().map(|p| p.position).collect();
    let rotated: Vec<_> = pts.iter().map(|p| rot * p).collect();
    assert!(hausdorff(&pts, &rotated) < 1e-6);

    // Point-by-point: index (i, j, k) maps to (k, i, j).
    let by_index: HashMap<[usize; 3], Vector3<f64>> = cloud.points.iter().map(|p| (p.index, p.position)).collect();
    for p in &cloud.points {
        let [i, j, k] = p.index;
        let q = by_index[&[k, i, j]];
        assert!((q - rot * p.position).norm() < 1e-9);
    }
}

#[test]
fn refinement_never_shrinks_the_bounds() {
    for k in [3, 5, 10] {
        let coarse = workspace_bounds(&sweep_workspace(&geom(), k).unwrap()).unwrap();
        let fine = workspace_bounds(&sweep_workspace(&geom(), 2 * k).unwrap()).unwrap();
        assert!(fine.contains(&coarse, 1e-9), "k = {k}: {coarse:?} vs {fine:?}");
    }
}

#[test]
fn highest_point_is_all_legs_at_the_upper_limit() {
    let g = geom();
    let cloud = sweep_workspace(&g, 8).unwrap();
    let top = cloud
        .points
        .iter()
        .max_by(|a, b| a.position.z.total_cmp(&b.position.z))
        .unwrap();
    assert_eq!(top.index, [7, 7, 7]);
    assert!((top.position.z - g.leg_length * g.theta_max.sin()).abs() < 1e-9);
}

#[test]
fn sampled_points_round_trip_through_inverse_kinematics() {
    let g = geom();
    let cloud = sweep_workspace(&g, 6).unwrap();
    for p in cloud.points.iter().filter(|p| p.pose.r > 5.0).step_by(7) {
        let theta = inverse_kinematics(&g, &p.pose).unwrap();
        let back = end_effector_position(&g, &theta).unwrap();
        assert!((back - p.position).norm() < 1e-6, "{:?}", p.index);
    }
}

#[test]
fn tiny_resolution_is_rejected() {
    assert!(matches!(sweep_workspace(&geom(), 1), Err(WorkspaceError::Resolution(1))));
}
