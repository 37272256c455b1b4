//! Rotation algebra, pose grids and cameras.
//!
//! World axes: x to the right, y up, z toward the camera. The camera sits on
//! the +z axis looking down -z, so a rotation about z is an in-plane rotation
//! of the image. Image-plane coordinates are pixels with the origin at the
//! top-left corner, u to the right and v downward.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::clipgen::{Paperclip, Vec3, NUM_VERTICES};
use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type View2 = [Vec2; NUM_VERTICES];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn letter(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

/// Single axes and the three axis pairs used for dual rotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axes {
    X,
    Y,
    Z,
    Xy,
    Xz,
    Yz,
}

impl Axes {
    pub const SINGLE: [Axes; 3] = [Axes::X, Axes::Y, Axes::Z];
    pub const DUAL: [Axes; 3] = [Axes::Xy, Axes::Xz, Axes::Yz];
    pub const ALL: [Axes; 6] = [Axes::X, Axes::Y, Axes::Z, Axes::Xy, Axes::Xz, Axes::Yz];

    pub fn is_dual(self) -> bool {
        matches!(self, Axes::Xy | Axes::Xz | Axes::Yz)
    }

    pub fn components(self) -> &'static [Axis] {
        match self {
            Axes::X => &[Axis::X],
            Axes::Y => &[Axis::Y],
            Axes::Z => &[Axis::Z],
            Axes::Xy => &[Axis::X, Axis::Y],
            Axes::Xz => &[Axis::X, Axis::Z],
            Axes::Yz => &[Axis::Y, Axis::Z],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axes::X => "x",
            Axes::Y => "y",
            Axes::Z => "z",
            Axes::Xy => "xy",
            Axes::Xz => "xz",
            Axes::Yz => "yz",
        }
    }
}

impl From<Axis> for Axes {
    fn from(a: Axis) -> Self {
        match a {
            Axis::X => Axes::X,
            Axis::Y => Axes::Y,
            Axis::Z => Axes::Z,
        }
    }
}

impl fmt::Display for Axes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axes {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "x" => Axes::X,
            "y" => Axes::Y,
            "z" => Axes::Z,
            "xy" => Axes::Xy,
            "xz" => Axes::Xz,
            "yz" => Axes::Yz,
            other => return Err(Error::Parse(format!("unknown axes {other:?}"))),
        })
    }
}

/// How the two rotations of a dual-axis pose are composed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Composition {
    /// Both rotations about fixed world axes, first listed axis applied first.
    #[default]
    Extrinsic,
    /// Second rotation about the object's already-rotated axis.
    Intrinsic,
}

/// One view address. Serialized as `{"axes": "yz", "angles": [10, 20]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseSpec {
    pub axes: Axes,
    pub angles: Vec<f64>,
}

impl PoseSpec {
    pub fn single(axis: Axis, deg: f64) -> Self {
        PoseSpec {
            axes: axis.into(),
            angles: vec![wrap_deg(deg)],
        }
    }

    pub fn dual(axes: Axes, first: f64, second: f64) -> Self {
        debug_assert!(axes.is_dual());
        PoseSpec {
            axes,
            angles: vec![wrap_deg(first), wrap_deg(second)],
        }
    }

    pub fn check(&self) -> Result<()> {
        let want = self.axes.components().len();
        if self.angles.len() != want {
            return Err(Error::InvalidConfig(format!(
                "pose {} needs {want} angle(s), got {}",
                self.axes,
                self.angles.len()
            )));
        }
        Ok(())
    }

    pub fn rotation(&self, comp: Composition) -> Matrix3<f64> {
        let axes = self.axes.components();
        match (axes, self.angles.as_slice()) {
            ([a], [d]) => rotation_matrix(*a, *d),
            ([a, b], [da, db]) => {
                let first = rotation_matrix(*a, *da);
                let second = rotation_matrix(*b, *db);
                match comp {
                    Composition::Extrinsic => second * first,
                    Composition::Intrinsic => first * second,
                }
            }
            _ => panic!("pose {self} has mismatched angle count"),
        }
    }

    /// Compact key such as `y:120` or `yz:10:20`, used in CSV and logs.
    pub fn key(&self) -> String {
        let mut s = self.axes.name().to_string();
        for a in &self.angles {
            s.push(':');
            s.push_str(&fmt_angle(*a));
        }
        s
    }
}

impl fmt::Display for PoseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

fn fmt_angle(a: f64) -> String {
    if a.fract() == 0.0 {
        format!("{}", a as i64)
    } else {
        format!("{a}")
    }
}

/// Wraps an angle into [0, 360).
pub fn wrap_deg(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Exact sine/cosine for multiples of 90 degrees, libm otherwise.
fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let w = wrap_deg(deg);
    if w.fract() == 0.0 && (w as i64) % 90 == 0 {
        return match w as i64 {
            0 => (0.0, 1.0),
            90 => (1.0, 0.0),
            180 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        };
    }
    w.to_radians().sin_cos()
}

/// Right-handed rotation by `deg` degrees about a world axis.
pub fn rotation_matrix(axis: Axis, deg: f64) -> Matrix3<f64> {
    let (s, c) = sin_cos_deg(deg);
    match axis {
        Axis::X => Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        Axis::Y => Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        Axis::Z => Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
    }
}

/// Rotates the clip about its centroid (the origin after normalization).
pub fn apply_pose(clip: &Paperclip, pose: &PoseSpec) -> [Vec3; NUM_VERTICES] {
    apply_pose_with(clip, pose, Composition::Extrinsic)
}

pub fn apply_pose_with(
    clip: &Paperclip,
    pose: &PoseSpec,
    comp: Composition,
) -> [Vec3; NUM_VERTICES] {
    let r = pose.rotation(comp);
    clip.vertices.map(|v| r * v)
}

/// Enumerates poses: `single_stride` over 360 degrees for each single axis and
/// a `dual_stride` x `dual_stride` grid for each axis pair, in the order given.
pub fn pose_grid(axes_set: &[Axes], single_stride: f64, dual_stride: f64) -> Result<Vec<PoseSpec>> {
    let steps = |stride: f64| -> Result<usize> {
        let n = 360.0 / stride;
        if !(stride > 0.0) || (n - n.round()).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "stride {stride} does not divide 360"
            )));
        }
        Ok(n.round() as usize)
    };
    let mut out = Vec::new();
    for &axes in axes_set {
        match axes.components() {
            [a] => {
                let n = steps(single_stride)?;
                out.extend((0..n).map(|i| PoseSpec::single(*a, i as f64 * single_stride)));
            }
            _ => {
                let n = steps(dual_stride)?;
                for i in 0..n {
                    for j in 0..n {
                        out.push(PoseSpec::dual(
                            axes,
                            i as f64 * dual_stride,
                            j as f64 * dual_stride,
                        ));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The full protocol: 360 single-axis views for x, y, z plus 36x36 for xy, xz, yz.
pub fn full_protocol() -> Vec<PoseSpec> {
    pose_grid(&Axes::ALL, 1.0, 10.0).expect("built-in strides divide 360")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    Orthographic,
    Perspective,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub mode: Projection,
    /// Distance from the camera to the object centroid (perspective only).
    pub distance: f64,
    /// Orthographic: object units spanned by the image height.
    /// Perspective: image-plane height at unit depth, i.e. 2 tan(fov/2).
    pub scale: f64,
    pub image_size: u32,
}

impl Camera {
    pub fn orthographic(image_size: u32) -> Self {
        Camera {
            mode: Projection::Orthographic,
            distance: 3.0,
            scale: 2.5,
            image_size,
        }
    }

    /// Near pinhole camera at distance 3; a unit-radius object at the nearest
    /// depth (2) still fits inside the frame.
    pub fn perspective(image_size: u32) -> Self {
        Camera {
            mode: Projection::Perspective,
            distance: 3.0,
            scale: 1.25,
            image_size,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.scale > 0.0) {
            return Err(Error::InvalidConfig("camera scale must be > 0".into()));
        }
        if self.mode == Projection::Perspective && !(self.distance > 1.0) {
            return Err(Error::InvalidConfig(
                "perspective camera distance must be > 1".into(),
            ));
        }
        if self.image_size == 0 {
            return Err(Error::InvalidConfig("image_size must be > 0".into()));
        }
        Ok(())
    }

    fn pixels_per_unit(&self) -> f64 {
        self.image_size as f64 / self.scale
    }

    pub fn center(&self) -> Vec2 {
        let h = self.image_size as f64 / 2.0;
        Vec2::new(h, h)
    }
}

impl Default for Camera {
    fn default() -> Self {
        Camera::orthographic(224)
    }
}

pub fn project(points: &[Vec3; NUM_VERTICES], cam: &Camera) -> Result<View2> {
    project_points(points, cam).map(|v| {
        let mut out = [Vec2::zeros(); NUM_VERTICES];
        out.copy_from_slice(&v);
        out
    })
}

/// Projects any number of points to pixel coordinates.
pub fn project_points(points: &[Vec3], cam: &Camera) -> Result<Vec<Vec2>> {
    let k = cam.pixels_per_unit();
    let c = cam.center();
    points
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let (x, y) = match cam.mode {
                Projection::Orthographic => (p.x, p.y),
                Projection::Perspective => {
                    let depth = cam.distance - p.z;
                    if !(depth > 0.0) {
                        return Err(Error::BehindCamera { index, depth });
                    }
                    (p.x / depth, p.y / depth)
                }
            };
            Ok(Vec2::new(c.x + k * x, c.y - k * y))
        })
        .collect()
}

/// Poses and projects in one step.
pub fn view_of(clip: &Paperclip, pose: &PoseSpec, cam: &Camera) -> Result<View2> {
    project(&apply_pose(clip, pose), cam)
}

/// A set of training views along one axis, written as `y:0,30,60`,
/// `y:uniform:12` (equidistant from 0), `y:uniform:12:15` (with offset) or
/// `y:range:-30,30:7` (evenly spaced, endpoints included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSelection {
    pub axis: Axis,
    /// Angles wrapped into [0, 360), in declaration order.
    pub angles: Vec<f64>,
}

impl ViewSelection {
    pub fn new(axis: Axis, angles: impl IntoIterator<Item = f64>) -> Self {
        ViewSelection {
            axis,
            angles: angles.into_iter().map(wrap_deg).collect(),
        }
    }

    pub fn uniform(axis: Axis, count: usize, offset: f64) -> Self {
        let step = 360.0 / count as f64;
        Self::new(axis, (0..count).map(|i| offset + i as f64 * step))
    }

    pub fn range(axis: Axis, lo: f64, hi: f64, count: usize) -> Self {
        if count == 1 {
            return Self::new(axis, [(lo + hi) / 2.0]);
        }
        let step = (hi - lo) / (count - 1) as f64;
        Self::new(axis, (0..count).map(|i| lo + i as f64 * step))
    }

    pub fn poses(&self) -> Vec<PoseSpec> {
        self.angles
            .iter()
            .map(|&a| PoseSpec::single(self.axis, a))
            .collect()
    }

    pub fn contains(&self, pose: &PoseSpec) -> bool {
        pose.axes == Axes::from(self.axis)
            && self
                .angles
                .iter()
                .any(|&a| angle_dist(a, pose.angles[0]) < 1e-9)
    }
}

/// Shortest angular distance in degrees, in [0, 180].
pub fn angle_dist(a: f64, b: f64) -> f64 {
    let d = wrap_deg(a - b);
    d.min(360.0 - d)
}

impl FromStr for ViewSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("view selection {s:?}: {why}"));
        let (axis, rest) = s.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let axis = match axis.trim().parse::<Axes>()? {
            Axes::X => Axis::X,
            Axes::Y => Axis::Y,
            Axes::Z => Axis::Z,
            _ => return Err(bad("training views use a single axis")),
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("bad number"));
        let count = |t: &str| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| bad("bad count"))
        };
        let parts: Vec<&str> = rest.split(':').collect();
        match parts.as_slice() {
            ["uniform", n] => Ok(Self::uniform(axis, count(n)?, 0.0)),
            ["uniform", n, off] => Ok(Self::uniform(axis, count(n)?, num(off)?)),
            ["range", bounds, n] => {
                let (lo, hi) = bounds
                    .split_once(',')
                    .ok_or_else(|| bad("range needs lo,hi"))?;
                Ok(Self::range(axis, num(lo)?, num(hi)?, count(n)?))
            }
            [list] => {
                let angles = list.split(',').map(num).collect::<Result<Vec<_>>>()?;
                if angles.is_empty() {
                    return Err(bad("no angles"));
                }
                Ok(Self::new(axis, angles))
            }
            _ => Err(bad("unrecognized form")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clipgen::{generate_paperclip, GenConfig};

    fn max_abs(m: Matrix3<f64>) -> f64 {
        m.iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    #[test]
    fn identity_at_zero() {
        for a in Axis::ALL {
            assert_eq!(rotation_matrix(a, 0.0), Matrix3::identity());
        }
    }

    #[test]
    fn z90_maps_x_to_y() {
        let v = rotation_matrix(Axis::Z, 90.0) * Vec3::new(1.0, 0.0, 0.0);
        assert!((v - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
        let v = rotation_matrix(Axis::X, 90.0) * Vec3::new(0.0, 1.0, 0.0);
        assert!((v - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        let v = rotation_matrix(Axis::Y, 90.0) * Vec3::new(0.0, 0.0, 1.0);
        assert!((v - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn group_law_and_orthonormality() {
        let prod = rotation_matrix(Axis::Y, 30.0) * rotation_matrix(Axis::Y, 60.0);
        assert!(max_abs(prod - rotation_matrix(Axis::Y, 90.0)) < 1e-12);
        for a in Axis::ALL {
            for d in 0..360 {
                let r = rotation_matrix(a, d as f64 + 0.37);
                assert!(max_abs(r.transpose() * r - Matrix3::identity()) < 1e-12);
                assert!((r.determinant() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn periodicity_and_dual_composition() {
        let clip = generate_paperclip(&GenConfig::with_seed(3), 5).unwrap();
        let back = apply_pose(&clip, &PoseSpec::single(Axis::Y, 360.0));
        for (a, b) in back.iter().zip(&clip.vertices) {
            assert!((a - b).norm() < 1e-9);
        }
        for t in [0.0, 10.0, 77.0, 350.0] {
            let d = apply_pose(&clip, &PoseSpec::dual(Axes::Xy, 0.0, t));
            let s = apply_pose(&clip, &PoseSpec::single(Axis::Y, t));
            for (a, b) in d.iter().zip(&s) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        let d = apply_pose(&clip, &PoseSpec::dual(Axes::Yz, 10.0, 20.0));
        let m = rotation_matrix(Axis::Z, 20.0) * rotation_matrix(Axis::Y, 10.0);
        for (a, v) in d.iter().zip(&clip.vertices) {
            assert!((a - m * v).norm() < 1e-12);
        }
        let i = apply_pose_with(
            &clip,
            &PoseSpec::dual(Axes::Yz, 10.0, 20.0),
            Composition::Intrinsic,
        );
        let m = rotation_matrix(Axis::Y, 10.0) * rotation_matrix(Axis::Z, 20.0);
        for (a, v) in i.iter().zip(&clip.vertices) {
            assert!((a - m * v).norm() < 1e-12);
        }
    }

    #[test]
    fn grids() {
        let y = pose_grid(&[Axes::Y], 1.0, 10.0).unwrap();
        assert_eq!(y.len(), 360);
        for (i, p) in y.iter().enumerate() {
            assert_eq!(p.angles, vec![i as f64]);
        }
        let xz = pose_grid(&[Axes::Xz], 1.0, 10.0).unwrap();
        assert_eq!(xz.len(), 1296);
        assert_eq!(xz[0].angles, vec![0.0, 0.0]);
        assert_eq!(xz[1295].angles, vec![350.0, 350.0]);
        assert_eq!(full_protocol().len(), 360 * 3 + 36 * 36 * 3);
        assert_eq!(full_protocol().len() * 10, 49_680);
        assert!(pose_grid(&[Axes::Y], 7.0, 10.0).is_err());
    }

    #[test]
    fn orthographic_plane_is_similarity() {
        let cam = Camera::orthographic(200);
        let pts = [
            Vec3::new(0.1, 0.2, 0.4),
            Vec3::new(-0.5, 0.3, 0.4),
            Vec3::new(0.7, -0.2, 0.4),
        ];
        let p = project_points(&pts, &cam).unwrap();
        let k = 200.0 / 2.5;
        for (q, v) in p.iter().zip(&pts) {
            assert!((q.x - (100.0 + k * v.x)).abs() < 1e-12);
            assert!((q.y - (100.0 - k * v.y)).abs() < 1e-12);
        }
    }

    #[test]
    fn perspective_pinhole_law() {
        let clip = generate_paperclip(&GenConfig::with_seed(9), 1).unwrap();
        let extent = |d: f64| {
            let cam = Camera {
                distance: d,
                ..Camera::perspective(224)
            };
            let p = project(&clip.vertices, &cam).unwrap();
            let c = cam.center();
            p.iter().map(|q| (q - c).norm()).fold(0.0, f64::max)
        };
        let ratio = extent(60.0) / extent(30.0);
        assert!((ratio - 0.5).abs() < 0.005, "{ratio}");
        // flat object: exact
        let flat = [Vec3::new(0.4, -0.3, 0.0), Vec3::new(-0.2, 0.6, 0.0)];
        let at = |d: f64| {
            let cam = Camera {
                distance: d,
                ..Camera::perspective(224)
            };
            let p = project_points(&flat, &cam).unwrap();
            (p[0] - p[1]).norm()
        };
        assert!((at(6.0) / at(3.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn behind_camera() {
        let cam = Camera::perspective(64);
        let pts = [Vec3::new(0.0, 0.0, 3.5)];
        assert!(matches!(
            project_points(&pts, &cam),
            Err(Error::BehindCamera { index: 0, .. })
        ));
    }

    #[test]
    fn in_plane_rotation_is_image_rotation() {
        let clip = generate_paperclip(&GenConfig::with_seed(11), 2).unwrap();
        let cam = Camera::orthographic(224);
        let c = cam.center();
        let base = project(&clip.vertices, &cam).unwrap();
        for theta in [15.0, 90.0, 203.0] {
            let rot = view_of(&clip, &PoseSpec::single(Axis::Z, theta), &cam).unwrap();
            let (s, co) = f64::to_radians(theta).sin_cos();
            for (r, b) in rot.iter().zip(&base) {
                // rotate in y-up frame: flip v, rotate, flip back
                let (x, y) = (b.x - c.x, c.y - b.y);
                let expect = Vec2::new(c.x + co * x - s * y, c.y - (s * x + co * y));
                assert!((r - expect).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn view_selection_forms() {
        let v: ViewSelection = "y:0,30,60".parse().unwrap();
        assert_eq!(v.angles, vec![0.0, 30.0, 60.0]);
        let v: ViewSelection = "y:uniform:12".parse().unwrap();
        assert_eq!(v.angles.len(), 12);
        assert_eq!(v.angles[1], 30.0);
        let v: ViewSelection = "y:range:-30,30:7".parse().unwrap();
        assert_eq!(v.angles, vec![330.0, 340.0, 350.0, 0.0, 10.0, 20.0, 30.0]);
        assert!(v.contains(&PoseSpec::single(Axis::Y, 340.0)));
        assert!(!v.contains(&PoseSpec::single(Axis::X, 340.0)));
        let v: ViewSelection = "x:-15,15".parse().unwrap();
        assert_eq!(v.angles, vec![345.0, 15.0]);
        assert!("xy:0".parse::<ViewSelection>().is_err());
        assert!("y:uniform:0".parse::<ViewSelection>().is_err());
        assert!("y".parse::<ViewSelection>().is_err());
        assert_eq!(angle_dist(350.0, 10.0), 20.0);
    }

    #[test]
    fn pose_json_shape() {
        let p = PoseSpec::dual(Axes::Yz, 10.0, 20.0);
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"axes":"yz","angles":[10.0,20.0]}"#
        );
        let q: PoseSpec = serde_json::from_str(r#"{"axes":"y","angles":[120]}"#).unwrap();
        assert_eq!(q, PoseSpec::single(Axis::Y, 120.0));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn axes() -> impl Strategy<Value = Axes> {
        prop::sample::select(Axes::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn rotations_are_proper_orthonormal(
            axes in axes(),
            a in -720.0..720.0f64,
            b in -720.0..720.0f64,
            intrinsic in any::<bool>(),
        ) {
            let pose = if axes.is_dual() { PoseSpec::dual(axes, a, b) } else { PoseSpec::single(axes.components()[0], a) };
            let comp = if intrinsic { Composition::Intrinsic } else { Composition::Extrinsic };
            let r = pose.rotation(comp);
            prop_assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn wrap_lands_in_range(deg in -1e6..1e6f64) {
            let w = wrap_deg(deg);
            prop_assert!((0.0..360.0).contains(&w));
            let k = (deg - w) / 360.0;
            prop_assert!((k - k.round()).abs() < 1e-6);
        }
    }
}
