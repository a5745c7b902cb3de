//! x-z cross-section of the array surface: tilted plates joined by taut
//! chords or circular slack arcs of fixed length.

use nalgebra::Vector2;
use serde::Serialize;

use super::SimError;
use crate::coupling::{ArrayConfig, TileState};
use crate::kinematics::TileGeometry;

/// Bisection stops once the bracket is this small relative to the root.
const ARC_RELATIVE_TOLERANCE: f64 = 1e-9;
const YAW_TOLERANCE: f64 = 1e-9;

pub type Point = Vector2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    Plate,
    Taut,
    SlackArc,
    /// Uncovered gap between plates; no surface.
    Gap,
}

/// Circular arc hanging below its chord.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub center: Point,
    pub radius: f64,
    /// Half of the subtended angle, in `(0, pi]`.
    pub half_angle: f64,
}

impl Arc {
    pub fn length(&self) -> f64 {
        2.0 * self.radius * self.half_angle
    }

    /// Lower branch of the circle at abscissa `x`, clamped to the circle's
    /// horizontal extent.
    fn lower(&self, x: f64) -> (f64, f64) {
        let dx = (x - self.center.x).clamp(-self.radius, self.radius);
        let h = (self.radius * self.radius - dx * dx).max(0.0).sqrt();
        let z = self.center.y - h;
        let slope = if h > 0.0 { dx / h } else { f64::INFINITY.copysign(dx) };
        (z, slope)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Left endpoint (x, z).
    pub start: Point,
    /// Right endpoint (x, z).
    pub end: Point,
    pub arc: Option<Arc>,
    /// Configured material length for material segments.
    pub material_length: Option<f64>,
}

impl Segment {
    pub fn line(kind: SegmentKind, start: Point, end: Point) -> Self {
        Self {
            kind,
            start,
            end,
            arc: None,
            material_length: None,
        }
    }

    fn height_slope(&self, x: f64) -> (f64, f64) {
        match &self.arc {
            Some(arc) => arc.lower(x),
            None => {
                let d = self.end - self.start;
                if d.x.abs() < 1e-12 {
                    return (self.start.y.min(self.end.y), 0.0);
                }
                let s = d.y / d.x;
                (self.start.y + s * (x - self.start.x), s)
            }
        }
    }

    pub fn length(&self) -> f64 {
        match &self.arc {
            Some(arc) => arc.length(),
            None => (self.end - self.start).norm(),
        }
    }
}

/// Result of shaping one span of material between two plate edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialShape {
    pub segment: Segment,
    pub chord: f64,
    /// Relative stretch `chord / L - 1`, zero when slack.
    pub strain: f64,
    pub strain_violation: bool,
    /// Depth of the lowest arc point below the chord midpoint.
    pub sag: f64,
}

/// Shape of inextensible material of length `l` hung between `a` (left) and
/// `b` (right). Taut when the chord reaches `l`; otherwise a circular arc
/// below the chord with arc length exactly `l`.
pub fn material_shape(a: Point, b: Point, l: f64, strain_tolerance: f64) -> MaterialShape {
    let chord = (b - a).norm();
    if chord >= l {
        let strain = chord / l - 1.0;
        return MaterialShape {
            segment: Segment {
                material_length: Some(l),
                ..Segment::line(SegmentKind::Taut, a, b)
            },
            chord,
            strain,
            strain_violation: strain > strain_tolerance,
            sag: 0.0,
        };
    }
    let half_angle = solve_half_angle(chord / l);
    let radius = l / (2.0 * half_angle);
    let mid = 0.5 * (a + b);
    let up = if chord > 0.0 {
        let u = (b - a) / chord;
        Point::new(-u.y, u.x)
    } else {
        Point::new(0.0, 1.0)
    };
    let center = mid + up * (radius * half_angle.cos());
    MaterialShape {
        segment: Segment {
            kind: SegmentKind::SlackArc,
            start: a,
            end: b,
            arc: Some(Arc {
                center,
                radius,
                half_angle,
            }),
            material_length: Some(l),
        },
        chord,
        strain: 0.0,
        strain_violation: false,
        sag: radius * (1.0 - half_angle.cos()),
    }
}

/// Root of `sin(h) / h = ratio` for `h` in `(0, pi]` by bisection.
pub(crate) fn solve_half_angle(ratio: f64) -> f64 {
    if ratio <= 0.0 {
        return std::f64::consts::PI;
    }
    let f = |h: f64| h.sin() / h - ratio;
    let (mut lo, mut hi) = (1e-12, std::f64::consts::PI);
    while hi - lo > ARC_RELATIVE_TOLERANCE * 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        // sin(h)/h decreases on (0, pi].
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Plate of a tile in the x-z plane as `(left, right)` endpoints. The tile
/// must be yawed along the array axis (0 or pi); positive signed tilt lowers
/// the +x edge.
pub fn plate_cross_section(state: &TileState, geom: &TileGeometry) -> Result<(Point, Point), SimError> {
    let pose = &state.pose;
    let (sd, cd) = pose.delta.sin_cos();
    if pose.phi != 0.0 && sd.abs() > YAW_TOLERANCE {
        return Err(SimError::UnsupportedConfiguration(format!(
            "yaw {} rad is not aligned with the array axis",
            pose.delta
        )));
    }
    if state.base_yaw.sin().abs() > YAW_TOLERANCE || state.base_yaw.cos() < 0.0 {
        return Err(SimError::UnsupportedConfiguration(format!(
            "base yaw {} rad is not supported in the cross-section",
            state.base_yaw
        )));
    }
    let psi = if cd >= 0.0 { pose.phi } else { -pose.phi };
    let (s, c) = psi.sin_cos();
    let centre = Point::new(state.base.x, state.base.z) + Point::new(s, c) * (pose.r + geom.plate_height);
    let half = Point::new(c, -s) * (0.5 * geom.plate_width);
    Ok((centre - half, centre + half))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapState {
    pub material_length: f64,
    pub chord: f64,
    pub strain: f64,
    pub strain_violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceProfile {
    pub t: f64,
    pub segments: Vec<Segment>,
    pub gaps: Vec<GapState>,
    /// Tiles are vibrating; static friction is replaced by kinetic.
    pub vibrating: bool,
}

/// Where a query abscissa falls on a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceQuery {
    On(SurfacePoint),
    Gap { segment: usize },
    BeforeStart,
    AfterEnd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub segment: usize,
    pub kind: SegmentKind,
    pub z: f64,
    /// Surface inclination `atan(dz/dx)`.
    pub slope: f64,
}

impl SurfaceProfile {
    /// Profile assembled from explicit segments; used for synthetic tests.
    pub fn from_segments(t: f64, segments: Vec<Segment>) -> Self {
        Self {
            t,
            segments,
            gaps: Vec::new(),
            vibrating: false,
        }
    }

    pub fn x_domain(&self) -> (f64, f64) {
        match (self.segments.first(), self.segments.last()) {
            (Some(a), Some(b)) => (a.start.x, b.end.x),
            _ => (0.0, 0.0),
        }
    }

    pub fn query(&self, x: f64) -> SurfaceQuery {
        let (lo, hi) = self.x_domain();
        if self.segments.is_empty() || x < lo {
            return SurfaceQuery::BeforeStart;
        }
        if x > hi {
            return SurfaceQuery::AfterEnd;
        }
        let idx = self
            .segments
            .iter()
            .position(|s| x <= s.end.x)
            .unwrap_or(self.segments.len() - 1);
        let seg = &self.segments[idx];
        if seg.kind == SegmentKind::Gap {
            return SurfaceQuery::Gap { segment: idx };
        }
        let (z, dzdx) = seg.height_slope(x);
        SurfaceQuery::On(SurfacePoint {
            segment: idx,
            kind: seg.kind,
            z,
            slope: dzdx.atan(),
        })
    }

    pub fn max_strain(&self) -> f64 {
        self.gaps.iter().map(|g| g.strain).fold(0.0, f64::max)
    }

    pub fn strain_violation(&self) -> bool {
        self.gaps.iter().any(|g| g.strain_violation)
    }
}

/// Height, inclination and vertical surface speed at `x`, the latter by
/// finite difference between consecutive profiles.
pub fn surface_height_slope(
    profile: &SurfaceProfile,
    next: &SurfaceProfile,
    x: f64,
) -> Result<(f64, f64, f64), SurfaceQuery> {
    let here = match profile.query(x) {
        SurfaceQuery::On(p) => p,
        other => return Err(other),
    };
    let dt = next.t - profile.t;
    let vz = match next.query(x) {
        SurfaceQuery::On(p) if dt > 0.0 => (p.z - here.z) / dt,
        _ => 0.0,
    };
    Ok((here.z, here.slope, vz))
}

/// Cross-section of the whole array. Adjacent plates are joined by material
/// between their facing edges; zero-length material leaves an open gap.
pub fn surface_profile(
    states: &[TileState],
    config: &ArrayConfig,
    t: f64,
    strain_tolerance: f64,
) -> Result<SurfaceProfile, SimError> {
    let plates = states
        .iter()
        .map(|s| plate_cross_section(s, &config.geom))
        .collect::<Result<Vec<_>, _>>()?;
    let mut segments = Vec::with_capacity(2 * plates.len());
    let mut gaps = Vec::with_capacity(plates.len().saturating_sub(1));
    for (i, &(left, right)) in plates.iter().enumerate() {
        if i > 0 {
            let prev_right = plates[i - 1].1;
            if !(left.x > prev_right.x) {
                return Err(SimError::InvalidConfiguration(format!(
                    "plates {} and {} overlap at t = {t} s",
                    i - 1,
                    i
                )));
            }
            let l = config.material_lengths[i - 1];
            if l > 0.0 {
                let shape = material_shape(prev_right, left, l, strain_tolerance);
                gaps.push(GapState {
                    material_length: l,
                    chord: shape.chord,
                    strain: shape.strain,
                    strain_violation: shape.strain_violation,
                });
                segments.push(shape.segment);
            } else {
                gaps.push(GapState {
                    material_length: 0.0,
                    chord: (left - prev_right).norm(),
                    strain: 0.0,
                    strain_violation: false,
                });
                segments.push(Segment::line(SegmentKind::Gap, prev_right, left));
            }
        }
        segments.push(Segment::line(SegmentKind::Plate, left, right));
    }
    Ok(SurfaceProfile {
        t,
        segments,
        gaps,
        vibrating: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Pose;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;
    use std::f64::consts::PI;

    fn flat_geom() -> TileGeometry {
        TileGeometry {
            plate_height: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn level_plate() {
        let s = TileState::new(Vector3::zeros(), Pose::level(70.0));
        let (a, b) = plate_cross_section(&s, &flat_geom()).unwrap();
        assert_eq!((a, b), (Point::new(-75.0, 70.0), Point::new(75.0, 70.0)));
    }

    #[test]
    fn tilted_plate_drops_leading_edge() {
        let s = TileState::new(Vector3::zeros(), Pose::new(0.0, PI / 6.0, 70.0));
        let (_, b) = plate_cross_section(&s, &flat_geom()).unwrap();
        let centre_z = 70.0 * (PI / 6.0).cos();
        assert_abs_diff_eq!(centre_z - b.y, 37.5, epsilon = 1e-9);
        let m = TileState::new(Vector3::zeros(), Pose::new(PI, PI / 6.0, 70.0));
        let (ma, mb) = plate_cross_section(&m, &flat_geom()).unwrap();
        assert_abs_diff_eq!(ma.x, -b.x, epsilon = 1e-12);
        assert_abs_diff_eq!(ma.y, b.y, epsilon = 1e-12);
        assert!(mb.y > ma.y);
    }

    #[test]
    fn off_axis_yaw_rejected() {
        let s = TileState::new(Vector3::zeros(), Pose::new(0.3, 0.2, 70.0));
        assert!(matches!(
            plate_cross_section(&s, &flat_geom()),
            Err(SimError::UnsupportedConfiguration(_))
        ));
    }

    #[test]
    fn exact_length_is_straight() {
        let m = material_shape(Point::new(0.0, 0.0), Point::new(100.0, 0.0), 100.0, 0.02);
        assert_eq!(m.segment.kind, SegmentKind::Taut);
        assert_eq!(m.sag, 0.0);
        assert!(!m.strain_violation);
    }

    #[test]
    fn overstretched_chord_flags_strain() {
        let m = material_shape(Point::new(0.0, 0.0), Point::new(120.0, 0.0), 100.0, 0.05);
        assert_eq!(m.segment.kind, SegmentKind::Taut);
        assert!(m.strain_violation);
        assert_abs_diff_eq!(m.strain, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn slack_arc_keeps_length() {
        let m = material_shape(Point::new(0.0, 0.0), Point::new(90.0, 0.0), 100.0, 0.02);
        let arc = m.segment.arc.unwrap();
        assert_eq!(m.segment.kind, SegmentKind::SlackArc);
        assert_abs_diff_eq!(arc.length(), 100.0, epsilon = 1e-6);
        assert_abs_diff_eq!(2.0 * arc.radius * arc.half_angle.sin(), 90.0, epsilon = 1e-6);
        assert!(arc.center.y > 0.0);
        // Lowest point is under the midpoint with zero slope.
        let (z, slope) = m.segment.height_slope(45.0);
        assert_abs_diff_eq!(z, -m.sag, epsilon = 1e-9);
        assert_abs_diff_eq!(slope, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn chord_slope() {
        let seg = Segment::line(SegmentKind::Taut, Point::new(75.0, 70.0), Point::new(165.0, 55.0));
        let p = SurfaceProfile::from_segments(0.0, vec![seg]);
        let SurfaceQuery::On(pt) = p.query(100.0) else { panic!() };
        assert_abs_diff_eq!(pt.slope, (-15.0f64 / 90.0).atan(), epsilon = 1e-15);
    }
}
