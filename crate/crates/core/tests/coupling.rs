use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;
use proptest::prelude::*;
use tilekit_core::coupling::*;
use tilekit_core::kinematics::{Pose, TileGeometry};
use tilekit_core::motion::{MotionPattern, SinusoidalParams};

fn geom() -> TileGeometry {
    TileGeometry::default()
}

fn at(x: f64, pose: Pose) -> TileState {
    TileState::new(Vector3::new(x, 0.0, 0.0), pose)
}

fn rodrigues(v: Vector3<f64>, axis: Vector3<f64>, angle: f64) -> Vector3<f64> {
    let k = axis.normalize();
    v * angle.cos() + k.cross(&v) * angle.sin() + k * k.dot(&v) * (1.0 - angle.cos())
}

/// Corners built by yawing the level plate, then tipping it about the
/// horizontal axis perpendicular to the tilt direction.
fn oracle_corners(state: &TileState, g: &TileGeometry) -> [Vector3<f64>; 4] {
    let Pose { delta, phi, r } = state.pose;
    let n = Vector3::new(phi.sin() * delta.cos(), phi.sin() * delta.sin(), phi.cos());
    let axis = Vector3::new(-delta.sin(), delta.cos(), 0.0);
    let h = g.plate_width / 2.0;
    [(-h, -h), (h, -h), (h, h), (-h, h)].map(|(a, b)| {
        let yawed = Vector3::new(a * delta.cos() - b * delta.sin(), a * delta.sin() + b * delta.cos(), g.plate_height);
        state.base + n * r + rodrigues(yawed, axis, phi)
    })
}

fn pose_strategy() -> impl Strategy<Value = Pose> {
    (0.0..TAU, 0.0..0.45f64, 40.0..110.0f64).prop_map(|(d, p, r)| Pose::new(d, p, r))
}

/// Tilts about the array axis only, as in a linear array.
fn inline_pose() -> impl Strategy<Value = Pose> {
    (prop::bool::ANY, 0.0..0.4f64, 40.0..110.0f64).prop_map(|(flip, p, r)| Pose::new(if flip { PI } else { 0.0 }, p, r))
}

fn level_pattern() -> MotionPattern {
    MotionPattern::sinusoidal(SinusoidalParams {
        phi_max: 0.0,
        ..SinusoidalParams::default()
    })
}

#[test]
fn level_tiles_are_separated_by_the_gap() {
    let g = geom();
    for d in [160.0, 210.0, 240.0, 400.0] {
        let a = alpha(&at(0.0, Pose::level(70.0)), &at(d, Pose::level(70.0)), &g);
        assert!((a - (d - g.plate_width)).abs() < 1e-9, "D = {d}: {a}");
    }
}

#[test]
fn level_pair_uses_facing_edges() {
    let g = geom();
    let cx = end_effector_corners(&at(0.0, Pose::level(70.0)), &g);
    let cy = end_effector_corners(&at(240.0, Pose::level(70.0)), &g);
    let pair = closest_edge_pair(&cx, &cy);
    // Edge 1 is the +x side, edge 3 the -x side.
    assert_eq!((pair.edge_x, pair.edge_y), (1, 3));
    assert!((pair.distances[0] - 90.0).abs() < 1e-9 && (pair.distances[1] - 90.0).abs() < 1e-9);
}

#[test]
fn level_pattern_minimum_length_tracks_spacing() {
    let g = geom();
    let base = SweepBase::default();
    let pts = sweep_lmin(SweepAxis::D, 210.0, 400.0, 20, &SweepBase { params: SinusoidalParams { phi_max: 0.0, ..base.params }, ..base }).unwrap();
    for p in &pts {
        assert!((p.lmin - (p.value - g.plate_width)).abs() < 1e-9);
    }
    let r = min_material_length_over_cycle(&level_pattern(), [Vector3::zeros(), Vector3::new(250.0, 0.0, 0.0)], &g, 1.0, 0.01).unwrap();
    let shifted = min_material_length_over_cycle(&level_pattern(), [Vector3::zeros(), Vector3::new(260.0, 0.0, 0.0)], &g, 1.0, 0.01).unwrap();
    assert!((shifted.lmin - r.lmin - 10.0).abs() < 1e-9);
}

#[test]
fn tilted_minimum_length_grows_no_faster_than_spacing() {
    let pts = sweep_lmin(SweepAxis::D, 210.0, 400.0, 20, &SweepBase::default()).unwrap();
    for w in pts.windows(2) {
        let (dl, dd) = (w[1].lmin - w[0].lmin, w[1].value - w[0].value);
        assert!(dl > 0.0 && dl <= dd + 1e-9, "{w:?}");
    }
}

#[test]
fn phase_sweep_is_periodic() {
    let pts = sweep_lmin(SweepAxis::Ps, 0.0, TAU, 9, &SweepBase::default()).unwrap();
    assert!((pts[0].lmin - pts[8].lmin).abs() < 1e-6);
}

#[test]
fn sweep_rejects_bad_ranges() {
    let base = SweepBase::default();
    assert!(sweep_lmin(SweepAxis::D, 400.0, 210.0, 10, &base).is_err());
    assert!(sweep_lmin(SweepAxis::D, 210.0, 400.0, 1, &base).is_err());
    assert!(sweep_lmin(SweepAxis::PhiMax, -0.1, 0.3, 10, &base).is_err());
}

#[test]
fn increase_factor_for_widest_spacing() {
    assert!((increase_factor(340.0, 150.0) - 1.844_444_444).abs() < 1e-6);
    assert!((increase_factor(150.0, 150.0) - 1.0).abs() < 1e-12);
}

#[test]
fn alpha_map_covers_the_grid() {
    let g = geom();
    let map = alpha_map(&g, 210.0, 70.0, 8, 0.3, 5);
    assert_eq!(map.len(), 40);
    let level = map.iter().find(|(d, p, _)| *d == 0.0 && *p == 0.0).unwrap();
    assert!((level.2 - 60.0).abs() < 1e-9);
}

#[test]
fn feasible_tilt_is_capped_and_respects_the_material() {
    let g = geom();
    let pattern = MotionPattern::sinusoidal(SinusoidalParams::default());
    let loose = ArrayConfig::linear(g, 2, 240.0, 1000.0);
    assert_eq!(max_feasible_phi(&pattern, &loose, 0.05, 50), Some(0.05));
    let tight = ArrayConfig::linear(g, 2, 240.0, 80.0);
    assert_eq!(max_feasible_phi(&pattern, &tight, 0.05, 50), None);
    let snug = ArrayConfig::linear(g, 3, 240.0, 100.0);
    let phi = max_feasible_phi(&pattern, &snug, FRAC_PI_2, 50).unwrap();
    assert!(phi > 0.0 && phi < FRAC_PI_2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn corners_match_rotation_oracle(pose in pose_strategy(), x in -100.0..100.0f64) {
        let g = geom();
        let s = at(x, pose);
        let c = end_effector_corners(&s, &g);
        let o = oracle_corners(&s, &g);
        for (a, b) in c.0.iter().zip(&o) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn alpha_is_symmetric(px in pose_strategy(), py in pose_strategy(), d in 180.0..400.0f64) {
        let g = geom();
        let (x, y) = (at(0.0, px), at(d, py));
        prop_assert_eq!(alpha(&x, &y, &g), alpha(&y, &x, &g));
    }

    #[test]
    fn rigid_translation_keeps_alpha(
        px in pose_strategy(), py in pose_strategy(),
        t in prop::array::uniform3(-500.0..500.0f64),
    ) {
        let g = geom();
        let shift = Vector3::from(t);
        let (x, y) = (at(0.0, px), at(240.0, py));
        let moved = (TileState { base: x.base + shift, ..x }, TileState { base: y.base + shift, ..y });
        prop_assert!((alpha(&x, &y, &g) - alpha(&moved.0, &moved.1, &g)).abs() < 1e-9);
    }

    #[test]
    fn alpha_is_one_lipschitz_in_spacing(px in inline_pose(), py in inline_pose(), t in -30.0..30.0f64) {
        let g = geom();
        let a = alpha(&at(0.0, px), &at(260.0, py), &g);
        let b = alpha(&at(0.0, px), &at(260.0 + t, py), &g);
        prop_assert!((a - b).abs() <= t.abs() + 1e-9);
    }

    #[test]
    fn more_material_never_breaks_reachability(
        poses in prop::array::uniform3(inline_pose()),
        lengths in prop::array::uniform2(0.0..200.0f64),
        extra in prop::array::uniform2(0.0..50.0f64),
    ) {
        let g = geom();
        let states: Vec<_> = poses.iter().enumerate().map(|(i, p)| at(240.0 * i as f64, *p)).collect();
        let short = ArrayConfig { geom: g, bases: states.iter().map(|s| s.base).collect(), material_lengths: lengths.to_vec() };
        let long = ArrayConfig { material_lengths: vec![lengths[0] + extra[0], lengths[1] + extra[1]], ..short.clone() };
        if is_reachable_jointly(&states, &short).reachable {
            prop_assert!(is_reachable_jointly(&states, &long).reachable);
        }
    }
}
