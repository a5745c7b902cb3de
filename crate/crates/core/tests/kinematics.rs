use std::f64::consts::{FRAC_PI_3, PI, TAU};

use approx::assert_relative_eq;
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;
use tilekit_core::kinematics::*;

fn geom() -> TileGeometry {
    TileGeometry::default()
}

fn in_range() -> impl Strategy<Value = LegAngles> {
    let g = geom();
    // Stay clear of the fully folded limit, where the plate collapses onto
    // the base and the pose is degenerate.
    let lo = g.theta_min + 1e-3;
    (lo..g.theta_max, lo..g.theta_max, lo..g.theta_max).prop_map(|(a, b, c)| LegAngles([a, b, c]))
}

/// Independent construction: joints from the leg geometry, symmetry plane
/// by hand, end effector as the mirror image of the base centre.
fn oracle_end_effector(g: &TileGeometry, theta: &LegAngles) -> Vector3<f64> {
    let h = g.leg_length / 2.0;
    let joints: Vec<Vector3<f64>> = (0..3)
        .map(|i| {
            let az = g.leg_azimuths[i];
            let radial = Vector3::new(az.cos(), az.sin(), 0.0);
            radial * g.base_radius + (radial * theta.0[i].cos() + Vector3::z() * theta.0[i].sin()) * h
        })
        .collect();
    let mut n = (joints[1] - joints[0]).cross(&(joints[2] - joints[0])).normalize();
    if n.z < 0.0 {
        n = -n;
    }
    2.0 * n.dot(&joints[0]) * n
}

#[test]
fn symmetric_legs_give_level_plate_at_closed_form_height() {
    let g = geom();
    for k in 1..=50 {
        let a = g.theta_max * k as f64 / 50.0;
        let (pose, _) = forward_kinematics(&g, &LegAngles::uniform(a)).unwrap();
        assert!(pose.phi.abs() < 1e-9, "a = {a}: phi = {}", pose.phi);
        assert_relative_eq!(pose.r, g.leg_length * a.sin(), max_relative = 1e-9);
    }
}

#[test]
fn folded_flat_collapses_onto_base() {
    let g = geom();
    let (pose, _) = forward_kinematics(&g, &LegAngles::uniform(0.0)).unwrap();
    assert!(pose.r.abs() < 1e-9);
}

#[test]
fn pose_cartesian_round_trip() {
    for &(d, p, r) in &[(0.0, 0.3, 70.0), (2.0, 0.1, 100.0), (5.5, 0.6, 40.0)] {
        let pose = Pose::new(d, p, r);
        let back = Pose::from_cartesian(&pose_to_cartesian(&pose));
        assert_relative_eq!(back.delta, d, epsilon = 1e-12);
        assert_relative_eq!(back.phi, p, epsilon = 1e-12);
        assert_relative_eq!(back.r, r, epsilon = 1e-9);
    }
}

#[test]
fn negative_tilt_is_yaw_flip_with_same_position() {
    let a = Pose::new(0.0, -0.2, 80.0);
    let b = Pose::new(PI, 0.2, 80.0);
    assert_relative_eq!(pose_to_cartesian(&a), pose_to_cartesian(&b), epsilon = 1e-12);
    assert!(a.phi >= 0.0);
}

#[test]
fn orientation_normal_is_pose_direction() {
    let pose = Pose::new(1.1, 0.4, 90.0);
    let n = pose.orientation() * Vector3::z();
    assert_relative_eq!(n, pose.direction(), epsilon = 1e-12);
    let axis = Vector3::z_axis();
    let expected = Rotation3::from_axis_angle(&axis, 1.1) * Rotation3::from_axis_angle(&Vector3::y_axis(), 0.4);
    assert_relative_eq!(pose.orientation(), *expected.matrix(), epsilon = 1e-12);
}

#[test]
fn out_of_reach_extension_is_reported() {
    let g = geom();
    let err = inverse_kinematics(&g, &Pose::level(g.leg_length + 1.0)).unwrap_err();
    assert!(matches!(err, KinematicsError::UnreachablePose { .. }));
    assert!(!is_reachable(&g, &Pose::level(200.0)));
    assert!(is_reachable(&g, &Pose::level(70.0)));
}

#[test]
fn invalid_geometry_lists_every_problem() {
    let g = TileGeometry {
        leg_length: -1.0,
        plate_width: 0.0,
        ..geom()
    };
    match g.validate() {
        Err(KinematicsError::InvalidGeometry(msg)) => {
            assert!(msg.contains("leg"), "{msg}");
            assert!(msg.contains("plate"), "{msg}");
        }
        other => panic!("expected invalid geometry, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn legs_keep_their_length(theta in in_range()) {
        let g = geom();
        let (_, s) = forward_kinematics(&g, &theta).unwrap();
        for i in 0..3 {
            prop_assert!(((s.joints[i] - s.base_hinges[i]).norm() - 65.0).abs() < 1e-9);
            prop_assert!(((s.plate_hinges[i] - s.joints[i]).norm() - 65.0).abs() < 1e-9);
        }
    }

    #[test]
    fn end_effector_matches_independent_construction(theta in in_range()) {
        let g = geom();
        let oe = end_effector_position(&g, &theta).unwrap();
        let expected = oracle_end_effector(&g, &theta);
        prop_assert!((oe - expected).norm() < 1e-9);
    }

    #[test]
    fn plate_hinges_mirror_base_hinges(theta in in_range()) {
        let g = geom();
        let (pose, s) = forward_kinematics(&g, &theta).unwrap();
        let n = s.plane.normal;
        for i in 0..3 {
            prop_assert!(s.plane.signed_distance(&s.joints[i]).abs() < 1e-9);
            let mid = 0.5 * (s.base_hinges[i] + s.plate_hinges[i]);
            prop_assert!(s.plane.signed_distance(&mid).abs() < 1e-9);
            prop_assert!((s.plate_hinges[i] - s.base_hinges[i]).cross(&n).norm() < 1e-9);
        }
        let oe = pose_to_cartesian(&pose);
        prop_assert!((oe - 2.0 * s.plane.offset * n).norm() < 1e-9);
        // The plate is the base reflected: hinge spacing is preserved.
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            let base = (s.base_hinges[i] - s.base_hinges[j]).norm();
            let plate = (s.plate_hinges[i] - s.plate_hinges[j]).norm();
            prop_assert!((base - plate).abs() < 1e-9);
        }
    }

    #[test]
    fn cyclic_leg_permutation_rotates_the_tile(theta in in_range()) {
        let g = geom();
        let p = end_effector_position(&g, &theta).unwrap();
        let q = end_effector_position(&g, &theta.rotated()).unwrap();
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), 2.0 * PI / 3.0);
        prop_assert!((q - rot * p).norm() < 1e-9, "p = {p:?}, q = {q:?}");
    }

    #[test]
    fn inverse_recovers_forward(theta in in_range()) {
        let g = geom();
        let (pose, _) = forward_kinematics(&g, &theta).unwrap();
        let solved = inverse_kinematics(&g, &pose).unwrap();
        let back = end_effector_position(&g, &solved).unwrap();
        prop_assert!((back - pose_to_cartesian(&pose)).norm() < 1e-6);
    }

    #[test]
    fn canonical_pose_ranges(d in -10.0..10.0f64, p in -1.5..1.5f64, r in 1.0..120.0f64) {
        let pose = Pose::new(d, p, r);
        prop_assert!(pose.phi >= 0.0);
        prop_assert!((0.0..TAU).contains(&pose.delta));
        let raw = Vector3::new(p.sin() * d.cos(), p.sin() * d.sin(), p.cos()) * r;
        prop_assert!((pose_to_cartesian(&pose) - raw).norm() < 1e-9);
    }
}

#[test]
fn legs_sit_on_the_base_circle() {
    let g = geom();
    let b = leg_base_positions(&g);
    for (i, p) in b.iter().enumerate() {
        assert_relative_eq!(p.norm(), g.base_radius, epsilon = 1e-12);
        assert_relative_eq!(p.y.atan2(p.x).rem_euclid(TAU), g.leg_azimuths[i], epsilon = 1e-12);
    }
    assert_relative_eq!(g.leg_azimuths[1] - g.leg_azimuths[0], 2.0 * FRAC_PI_3, epsilon = 1e-12);
}
