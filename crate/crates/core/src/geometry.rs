//! Plane-reflection algebra for 3D point clouds.
//!
//! A mirror plane `n·x + d = 0` (unit normal `n`, offset `d`) induces the
//! affine map `p* = p - 2(n·p + d)n`, whose linear part is the reflection
//! matrix `R = I - 2nnᵀ` and whose translation is `-2dn`. The affine formula
//! is the source of truth; the matrix form is exposed for callers that want
//! the transform explicitly (and equals it only up to rounding).

use std::ops::{Add, Index, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum GeometryError {
    #[error("plane normal must have nonzero length")]
    ZeroNormal,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("point cloud must contain at least one point")]
    EmptyCloud,
}

/// A 3D point (or direction) in normalized model coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    /// Squared Euclidean distance. Every metric path (brute force, kd-tree,
    /// assignment solvers) goes through this one function so that competing
    /// implementations agree bitwise.
    pub fn dist2(self, other: Self) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    pub fn dist(self, other: Self) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn coord(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn normalized(self) -> Option<Self> {
        let len = self.norm();
        if len < 1e-12 {
            None
        } else {
            Some(self * (1.0 / len))
        }
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, rhs: f64) -> Point3 {
        Point3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// An ordered, non-empty list of finite 3D points. Order is stable and
/// index-addressable; both are part of the contract (metrics break ties by
/// lowest index).
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::EmptyCloud);
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { points })
    }

    /// Constructor for internal use where finiteness is already guaranteed
    /// (e.g. the image of a valid cloud under an isometry).
    pub(crate) fn from_points_unchecked(points: Vec<Point3>) -> Self {
        debug_assert!(!points.is_empty() && points.iter().all(|p| p.is_finite()));
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point3> {
        self.points.iter()
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    pub fn centroid(&self) -> Point3 {
        let mut sum = Point3::ORIGIN;
        for &p in &self.points {
            sum = sum + p;
        }
        sum * (1.0 / self.points.len() as f64)
    }
}

impl Index<usize> for PointCloud {
    type Output = Point3;
    fn index(&self, i: usize) -> &Point3 {
        &self.points[i]
    }
}

impl<'a> IntoIterator for &'a PointCloud {
    type Item = &'a Point3;
    type IntoIter = std::slice::Iter<'a, Point3>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// The plane `n·x + d = 0` with `‖n‖ = 1`.
///
/// Construction normalizes the input (rescaling the offset by the same
/// factor, so the geometric plane is unchanged) and canonicalizes the sign
/// so the first nonzero component of `n` is positive. `n, d` and `-n, -d`
/// describe the same plane; canonicalization makes equality testing and
/// optimizer output reproducible.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryPlane {
    normal: Point3,
    offset: f64,
}

impl SymmetryPlane {
    pub fn new(normal: Point3, offset: f64) -> Result<Self, GeometryError> {
        if !normal.is_finite() || !offset.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let len = normal.norm();
        if len < 1e-12 {
            return Err(GeometryError::ZeroNormal);
        }
        let mut n = normal * (1.0 / len);
        let mut d = offset / len;
        // Inputs at the edge of the f64 range can overflow the norm or the
        // rescaled offset; reject rather than hand back a broken plane.
        if !n.is_finite() || !d.is_finite() || (n.norm2() - 1.0).abs() > 1e-9 {
            return Err(GeometryError::NonFinite);
        }
        for c in [n.x, n.y, n.z] {
            if c != 0.0 {
                if c < 0.0 {
                    n = -n;
                    d = -d;
                }
                break;
            }
        }
        Ok(Self {
            normal: n,
            offset: d,
        })
    }

    /// Plane with the given normal passing through `point` (d = -n·p).
    pub fn through_point(normal: Point3, point: Point3) -> Result<Self, GeometryError> {
        if !point.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let base = Self::new(normal, 0.0)?;
        let d = -base.normal.dot(point);
        Self::new(base.normal, d)
    }

    pub fn normal(&self) -> Point3 {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed distance `n·p + d`; zero on the plane.
    pub fn signed_distance(&self, p: Point3) -> f64 {
        self.normal.dot(p) + self.offset
    }

    /// The explicit affine transform: `R = I - 2nnᵀ`, translation `-2dn`.
    pub fn reflection(&self) -> ReflectionTransform {
        let n = self.normal;
        let linear = Mat3::IDENTITY - Mat3::outer(n, n) * 2.0;
        let translation = n * (-2.0 * self.offset);
        ReflectionTransform {
            linear,
            translation,
        }
    }

    /// Mirror a single point: `p* = p - 2(n·p + d)n`.
    pub fn reflect_point(&self, p: Point3) -> Result<Point3, GeometryError> {
        if !p.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(self.reflect_unchecked(p))
    }

    pub(crate) fn reflect_unchecked(&self, p: Point3) -> Point3 {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    /// Mirror every point, preserving order. Cloud invariants guarantee
    /// finite input, so this cannot fail.
    pub fn reflect_cloud(&self, cloud: &PointCloud) -> PointCloud {
        PointCloud::from_points_unchecked(
            cloud.iter().map(|&p| self.reflect_unchecked(p)).collect(),
        )
    }
}

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Outer product `a bᵀ`.
    pub fn outer(a: Point3, b: Point3) -> Mat3 {
        Mat3([
            [a.x * b.x, a.x * b.y, a.x * b.z],
            [a.y * b.x, a.y * b.y, a.y * b.z],
            [a.z * b.x, a.z * b.y, a.z * b.z],
        ])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

impl Mul<Point3> for Mat3 {
    type Output = Point3;
    fn mul(self, p: Point3) -> Point3 {
        let m = &self.0;
        Point3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z,
        )
    }
}

impl Mul<Mat3> for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Mat3(out)
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, s: f64) -> Mat3 {
        let mut out = self.0;
        for row in &mut out {
            for cell in row {
                *cell *= s;
            }
        }
        Mat3(out)
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        let mut out = self.0;
        for (row, rrow) in out.iter_mut().zip(rhs.0.iter()) {
            for (cell, r) in row.iter_mut().zip(rrow.iter()) {
                *cell -= r;
            }
        }
        Mat3(out)
    }
}

/// The affine mirror map `p ↦ Rp + t` induced by a [`SymmetryPlane`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReflectionTransform {
    pub linear: Mat3,
    pub translation: Point3,
}

impl ReflectionTransform {
    pub fn apply(&self, p: Point3) -> Point3 {
        self.linear * p + self.translation
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn assert_points_close(a: Point3, b: Point3, tol: f64) {
        assert_close(a.x, b.x, tol);
        assert_close(a.y, b.y, tol);
        assert_close(a.z, b.z, tol);
    }

    #[test]
    fn make_plane_rescales_offset() {
        let p = SymmetryPlane::new(Point3::new(2.0, 0.0, 0.0), 4.0).unwrap();
        assert_eq!(p.normal(), Point3::new(1.0, 0.0, 0.0));
        assert_eq!(p.offset(), 2.0);

        let p = SymmetryPlane::new(Point3::new(0.0, 1.0, 0.0), 0.0).unwrap();
        assert_eq!(p.normal(), Point3::new(0.0, 1.0, 0.0));
        assert_eq!(p.offset(), 0.0);

        let p = SymmetryPlane::new(Point3::new(1.0, 1.0, 0.0), 2f64.sqrt()).unwrap();
        let s = 2f64.sqrt() / 2.0;
        assert_points_close(p.normal(), Point3::new(s, s, 0.0), 1e-15);
        assert_close(p.offset(), 1.0, 1e-15);
        // A point satisfying the original equation still lies on the plane.
        let on_plane = Point3::new(-s, -s, 0.3);
        assert_close(p.signed_distance(on_plane), 0.0, 1e-12);
    }

    #[test]
    fn make_plane_rejects_bad_input() {
        assert_eq!(
            SymmetryPlane::new(Point3::new(0.0, 0.0, 0.0), 1.0),
            Err(GeometryError::ZeroNormal)
        );
        assert_eq!(
            SymmetryPlane::new(Point3::new(1e-13, 0.0, 0.0), 1.0),
            Err(GeometryError::ZeroNormal)
        );
        assert_eq!(
            SymmetryPlane::new(Point3::new(f64::NAN, 1.0, 0.0), 0.0),
            Err(GeometryError::NonFinite)
        );
        assert_eq!(
            SymmetryPlane::new(Point3::new(1.0, 1.0, 0.0), f64::INFINITY),
            Err(GeometryError::NonFinite)
        );
        // Inputs whose norm or rescaled offset overflow are rejected too.
        assert_eq!(
            SymmetryPlane::new(Point3::new(1e308, 1e308, 0.0), 0.0),
            Err(GeometryError::NonFinite)
        );
        assert_eq!(
            SymmetryPlane::new(Point3::new(1e-12, 0.0, 0.0), 1e308),
            Err(GeometryError::NonFinite)
        );
    }

    #[test]
    fn canonical_sign_flips_normal_and_offset() {
        let p = SymmetryPlane::new(Point3::new(-1.0, 0.0, 0.0), 2.0).unwrap();
        assert_eq!(p.normal(), Point3::new(1.0, 0.0, 0.0));
        assert_eq!(p.offset(), -2.0);

        let p = SymmetryPlane::new(Point3::new(0.0, -3.0, 0.0), 6.0).unwrap();
        assert_eq!(p.normal(), Point3::new(0.0, 1.0, 0.0));
        assert_eq!(p.offset(), -2.0);
    }

    #[test]
    fn reflection_matrix_axis_aligned() {
        let p = SymmetryPlane::new(Point3::new(1.0, 0.0, 0.0), 0.0).unwrap();
        let t = p.reflection();
        assert_eq!(
            t.linear,
            Mat3([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        );
        assert_eq!(t.translation, Point3::ORIGIN);

        let p = SymmetryPlane::new(Point3::new(0.0, 0.0, 1.0), 0.0).unwrap();
        assert_eq!(
            p.reflection().linear,
            Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]])
        );
    }

    #[test]
    fn reflection_matrix_diagonal_plane() {
        // n = (√2/2, √2/2, 0): I - 2nnᵀ expands to [[0,-1,0],[-1,0,0],[0,0,1]].
        let p = SymmetryPlane::new(Point3::new(1.0, 1.0, 0.0), 0.0).unwrap();
        let r = p.reflection().linear.0;
        let expect = [[0.0, -1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_close(r[i][j], expect[i][j], 1e-15);
            }
        }
    }

    #[test]
    fn reflection_translation_is_minus_two_d_n() {
        let p = SymmetryPlane::new(Point3::new(1.0, 0.0, 0.0), -1.0).unwrap();
        assert_eq!(p.reflection().translation, Point3::new(2.0, 0.0, 0.0));
    }

    #[test]
    fn reflect_point_examples() {
        let mirror_x = SymmetryPlane::new(Point3::new(1.0, 0.0, 0.0), 0.0).unwrap();
        assert_eq!(
            mirror_x.reflect_point(Point3::new(1.0, 2.0, 3.0)).unwrap(),
            Point3::new(-1.0, 2.0, 3.0)
        );

        // Mirror across x = 1 (d = -1).
        let plane = SymmetryPlane::new(Point3::new(1.0, 0.0, 0.0), -1.0).unwrap();
        assert_eq!(
            plane.reflect_point(Point3::new(3.0, 0.0, 0.0)).unwrap(),
            Point3::new(-1.0, 0.0, 0.0)
        );
        // Point on the plane is fixed.
        assert_eq!(
            plane.reflect_point(Point3::new(1.0, 5.0, 7.0)).unwrap(),
            Point3::new(1.0, 5.0, 7.0)
        );

        assert_eq!(
            plane.reflect_point(Point3::new(f64::NAN, 0.0, 0.0)),
            Err(GeometryError::NonFinite)
        );
    }

    #[test]
    fn reflect_cloud_swaps_mirror_pair() {
        let plane = SymmetryPlane::new(Point3::new(1.0, 0.0, 0.0), 0.0).unwrap();
        let cloud = PointCloud::new(vec![
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(-1.0, 0.0, 0.0),
        ])
        .unwrap();
        let reflected = plane.reflect_cloud(&cloud);
        assert_eq!(reflected[0], Point3::new(-1.0, 0.0, 0.0));
        assert_eq!(reflected[1], Point3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn reflect_cloud_negates_y_for_unit_cube() {
        let plane = SymmetryPlane::new(Point3::new(0.0, 1.0, 0.0), 0.0).unwrap();
        let corners: Vec<Point3> = (0..8)
            .map(|i| {
                Point3::new(
                    if i & 1 == 0 { -0.5 } else { 0.5 },
                    if i & 2 == 0 { -0.5 } else { 0.5 },
                    if i & 4 == 0 { -0.5 } else { 0.5 },
                )
            })
            .collect();
        let cloud = PointCloud::new(corners.clone()).unwrap();
        let reflected = plane.reflect_cloud(&cloud);
        for (orig, refl) in corners.iter().zip(reflected.iter()) {
            assert_eq!(refl, &Point3::new(orig.x, -orig.y, orig.z));
        }
    }

    #[test]
    fn empty_cloud_rejected() {
        assert_eq!(PointCloud::new(vec![]), Err(GeometryError::EmptyCloud));
        assert_eq!(
            PointCloud::new(vec![Point3::new(0.0, 0.0, f64::INFINITY)]),
            Err(GeometryError::NonFinite)
        );
    }

    fn arb_unit_normal() -> impl Strategy<Value = Point3> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter_map("normal too short", |(x, y, z)| {
                Point3::new(x, y, z).normalized()
            })
    }

    fn arb_point() -> impl Strategy<Value = Point3> {
        (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0).prop_map(|(x, y, z)| Point3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn reflecting_twice_is_identity(n in arb_unit_normal(), d in -5.0f64..5.0, p in arb_point()) {
            let plane = SymmetryPlane::new(n, d).unwrap();
            let once = plane.reflect_point(p).unwrap();
            let twice = plane.reflect_point(once).unwrap();
            prop_assert!((twice.x - p.x).abs() < 1e-12);
            prop_assert!((twice.y - p.y).abs() < 1e-12);
            prop_assert!((twice.z - p.z).abs() < 1e-12);
        }

        #[test]
        fn reflection_preserves_pairwise_distance(
            n in arb_unit_normal(),
            d in -5.0f64..5.0,
            a in arb_point(),
            b in arb_point(),
        ) {
            let plane = SymmetryPlane::new(n, d).unwrap();
            let da = plane.reflect_point(a).unwrap();
            let db = plane.reflect_point(b).unwrap();
            let before = a.dist(b);
            let after = da.dist(db);
            prop_assert!((before - after).abs() <= 1e-12 * before.max(1.0));
        }

        #[test]
        fn points_on_plane_are_fixed(n in arb_unit_normal(), d in -5.0f64..5.0, p in arb_point()) {
            let plane = SymmetryPlane::new(n, d).unwrap();
            // Project p onto the plane, then reflect the projection.
            let on_plane = p - plane.normal() * plane.signed_distance(p);
            let r = plane.reflect_point(on_plane).unwrap();
            prop_assert!((r.x - on_plane.x).abs() < 1e-12);
            prop_assert!((r.y - on_plane.y).abs() < 1e-12);
            prop_assert!((r.z - on_plane.z).abs() < 1e-12);
        }

        #[test]
        fn affine_formula_matches_matrix_form(
            n in arb_unit_normal(),
            d in -5.0f64..5.0,
            p in arb_point(),
        ) {
            let plane = SymmetryPlane::new(n, d).unwrap();
            let direct = plane.reflect_point(p).unwrap();
            let via_matrix = plane.reflection().apply(p);
            prop_assert!((direct.x - via_matrix.x).abs() < 1e-12);
            prop_assert!((direct.y - via_matrix.y).abs() < 1e-12);
            prop_assert!((direct.z - via_matrix.z).abs() < 1e-12);
        }

        #[test]
        fn reflection_matrix_identities(n in arb_unit_normal(), d in -5.0f64..5.0) {
            let plane = SymmetryPlane::new(n, d).unwrap();
            let r = plane.reflection().linear;
            let rt = r.transpose();
            let rr = r * r;
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((r.0[i][j] - rt.0[i][j]).abs() < 1e-12);
                    let ident = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((rr.0[i][j] - ident).abs() < 1e-12);
                }
            }
            prop_assert!((r.determinant() + 1.0).abs() < 1e-12);
        }
    }
}
