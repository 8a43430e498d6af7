use serde::{Deserialize, Serialize};

use super::{any_perpendicular, Vec3};
use crate::error::{CurvError, Result};

/// A sphere of positive radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(CurvError::InvalidParameter(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    /// Outward unit normal at a point of the sphere.
    #[inline]
    pub fn normal_at(&self, p: &Vec3) -> Vec3 {
        (p - self.center) / self.radius
    }
}

/// Intersection circle of two spheres of equal radius.
///
/// `axis` points from the lower to the higher parent identifier. `basis_x`,
/// `basis_y` span the circle plane with `basis_x × basis_y = axis`; angles on
/// the circle are measured counterclockwise about `axis` from `basis_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionCircle {
    pub center: Vec3,
    pub radius: f64,
    pub axis: Vec3,
    pub basis_x: Vec3,
    pub basis_y: Vec3,
    pub parents: (usize, usize),
}

impl IntersectionCircle {
    /// Builds a circle from raw parts, completing the in-plane basis.
    pub fn from_parts(center: Vec3, radius: f64, axis: Vec3, parents: (usize, usize)) -> Self {
        let axis = axis.normalize();
        let basis_x = any_perpendicular(&axis);
        let basis_y = axis.cross(&basis_x);
        Self { center, radius, axis, basis_x, basis_y, parents }
    }

    /// Circle of sphere `i` and sphere `j` (equal radii). Argument order does
    /// not matter: the result is identical under swapping `(i, si)` with `(j, sj)`.
    pub fn between(
        i: usize,
        si: &Sphere,
        j: usize,
        sj: &Sphere,
        tol: f64,
    ) -> Result<Option<Self>> {
        let (lo, slo, hi, shi) = if i <= j { (i, si, j, sj) } else { (j, sj, i, si) };
        if (slo.radius - shi.radius).abs() > tol {
            return Err(CurvError::Unsupported(format!(
                "spheres {lo} and {hi} have different radii ({} vs {})",
                slo.radius, shi.radius
            )));
        }
        let r = slo.radius;
        let delta = shi.center - slo.center;
        let d = delta.norm();
        if d <= tol {
            return Err(CurvError::DegeneratePair(lo, hi));
        }
        if (d - 2.0 * r).abs() <= tol {
            return Err(CurvError::Tangent(format!(
                "spheres {lo} and {hi} are tangent (distance {d}, radius {r})"
            )));
        }
        if d > 2.0 * r {
            return Ok(None);
        }
        let axis = delta / d;
        let center = slo.center + 0.5 * delta;
        let radius = (r * r - 0.25 * d * d).sqrt();
        Ok(Some(Self::from_parts(center, radius, axis, (lo, hi))))
    }

    #[inline]
    pub fn point_at(&self, theta: f64) -> Vec3 {
        let (s, c) = theta.sin_cos();
        self.center + self.radius * (c * self.basis_x + s * self.basis_y)
    }

    /// Unit tangent at `theta`, counterclockwise about the axis.
    #[inline]
    pub fn tangent_at(&self, theta: f64) -> Vec3 {
        let (s, c) = theta.sin_cos();
        -s * self.basis_x + c * self.basis_y
    }

    /// Angle of the projection of `p` onto the circle plane, in `[0, 2π)`.
    pub fn angle_of(&self, p: &Vec3) -> f64 {
        let w = p - self.center;
        let a = w.dot(&self.basis_y).atan2(w.dot(&self.basis_x));
        if a < 0.0 {
            a + std::f64::consts::TAU
        } else {
            a
        }
    }

    /// Distance between the parent centers.
    pub fn parent_distance(&self, sphere_radius: f64) -> f64 {
        2.0 * (sphere_radius * sphere_radius - self.radius * self.radius).max(0.0).sqrt()
    }
}

/// Circle `∂B₁ ∩ ∂B₂` for two equal-radius spheres (identifiers 0 and 1).
pub fn sphere_sphere_circle(s1: &Sphere, s2: &Sphere, tol: f64) -> Result<Option<IntersectionCircle>> {
    IntersectionCircle::between(0, s1, 1, s2, tol)
}

/// Points common to three equal-radius spheres. Returns zero or two points;
/// near-tangential single-point outcomes are errors.
pub fn triple_intersection_points(
    s1: &Sphere,
    s2: &Sphere,
    s3: &Sphere,
    tol: f64,
) -> Result<Vec<Vec3>> {
    let r = s1.radius;
    if (s2.radius - r).abs() > tol || (s3.radius - r).abs() > tol {
        return Err(CurvError::Unsupported("triple with unequal radii".into()));
    }
    let (c1, c2, c3) = (s1.center, s2.center, s3.center);
    for (a, b) in [(c1, c2), (c1, c3), (c2, c3)] {
        let d = (b - a).norm();
        if d <= tol {
            return Err(CurvError::DegenerateTriple("coincident centers".into()));
        }
        if d >= 2.0 * r + tol {
            return Ok(Vec::new());
        }
    }
    let d12 = c2 - c1;
    let d = d12.norm();
    let ex = d12 / d;
    let v13 = c3 - c1;
    let i = ex.dot(&v13);
    let rest = v13 - i * ex;
    let j = rest.norm();
    let x = 0.5 * d;
    if j <= tol {
        // Collinear centers: the pairwise circles are coaxial.
        let x3 = i;
        if (x3 - d).abs() <= tol || (x3 - x).abs() <= tol {
            return Err(CurvError::DegenerateTriple("collinear centers with coincident circles".into()));
        }
        return Ok(Vec::new());
    }
    let ey = rest / j;
    let ez = ex.cross(&ey);
    let y = (i * i + j * j - 2.0 * i * x) / (2.0 * j);
    let z2 = r * r - x * x - y * y;
    // |z| <= tol is the tangential (single point) case.
    if z2 <= tol * tol {
        if z2 > -tol * (2.0 * r) {
            return Err(CurvError::Tangent(
                "three spheres meet in a single point (circumradius equals r)".into(),
            ));
        }
        return Ok(Vec::new());
    }
    let z = z2.sqrt();
    let base = c1 + x * ex + y * ey;
    Ok(vec![base + z * ez, base - z * ez])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(c: [f64; 3]) -> Sphere {
        Sphere::new(Vec3::new(c[0], c[1], c[2]), 1.0).unwrap()
    }

    #[test]
    fn symmetric_lens() {
        let c = sphere_sphere_circle(&unit([0.0, 0.0, 0.0]), &unit([1.0, 0.0, 0.0]), 1e-9)
            .unwrap()
            .unwrap();
        assert_relative_eq!(c.center, Vec3::new(0.5, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(c.radius, 3f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_relative_eq!(c.axis, Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(c.basis_x.cross(&c.basis_y), c.axis, epsilon = 1e-15);
    }

    #[test]
    fn disjoint_and_coincident() {
        assert!(sphere_sphere_circle(&unit([0.0; 3]), &unit([3.0, 0.0, 0.0]), 1e-9)
            .unwrap()
            .is_none());
        let err = sphere_sphere_circle(&unit([0.0; 3]), &unit([0.0; 3]), 1e-9).unwrap_err();
        assert!(matches!(err, CurvError::DegeneratePair(..)));
        let err = sphere_sphere_circle(&unit([0.0; 3]), &unit([2.0, 0.0, 0.0]), 1e-9).unwrap_err();
        assert!(matches!(err, CurvError::Tangent(..)));
    }

    #[test]
    fn swap_is_bitwise_symmetric() {
        let a = unit([0.1, -0.3, 0.2]);
        let b = unit([0.9, 0.4, -0.5]);
        let c1 = IntersectionCircle::between(3, &a, 7, &b, 1e-9).unwrap().unwrap();
        let c2 = IntersectionCircle::between(7, &b, 3, &a, 1e-9).unwrap().unwrap();
        assert_eq!(c1, c2);
        assert_eq!(c1.parents, (3, 7));
    }

    #[test]
    fn equilateral_triple() {
        let h = 3f64.sqrt() / 2.0;
        let pts = triple_intersection_points(
            &unit([0.0, 0.0, 0.0]),
            &unit([1.0, 0.0, 0.0]),
            &unit([0.5, h, 0.0]),
            1e-9,
        )
        .unwrap();
        assert_eq!(pts.len(), 2);
        let z = (1.0f64 - 1.0 / 3.0).sqrt();
        for p in &pts {
            assert_relative_eq!(p.x, 0.5, epsilon = 1e-12);
            assert_relative_eq!(p.y, 3f64.sqrt() / 6.0, epsilon = 1e-12);
            assert_relative_eq!(p.z.abs(), z, epsilon = 1e-12);
            for c in [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, h, 0.0]] {
                let r = (p - Vec3::new(c[0], c[1], c[2])).norm();
                assert!((r - 1.0).abs() < 1e-12);
            }
        }
        assert!(pts[0].z * pts[1].z < 0.0);
    }

    #[test]
    fn far_triple_is_empty() {
        let pts = triple_intersection_points(
            &unit([0.0, 0.0, 0.0]),
            &unit([5.0, 0.0, 0.0]),
            &unit([0.0, 5.0, 0.0]),
            1e-9,
        )
        .unwrap();
        assert!(pts.is_empty());
    }

    #[test]
    fn collinear_triple() {
        let pts = triple_intersection_points(
            &unit([0.0, 0.0, 0.0]),
            &unit([0.5, 0.0, 0.0]),
            &unit([1.0, 0.0, 0.0]),
            1e-9,
        )
        .unwrap();
        assert!(pts.is_empty());
        let err = triple_intersection_points(
            &unit([0.0, 0.0, 0.0]),
            &unit([1.0, 0.0, 0.0]),
            &unit([1.0, 0.0, 0.0]),
            1e-9,
        );
        assert!(err.is_err());
    }

    proptest::proptest! {
        #[test]
        fn triple_points_lie_on_all_spheres(
            a in proptest::array::uniform3(-0.8f64..0.8),
            b in proptest::array::uniform3(-0.8f64..0.8),
            c in proptest::array::uniform3(-0.8f64..0.8),
        ) {
            let s = [unit(a), unit(b), unit(c)];
            if let Ok(pts) = triple_intersection_points(&s[0], &s[1], &s[2], 1e-9) {
                for p in pts {
                    for sp in &s {
                        let d = (p - sp.center).norm();
                        proptest::prop_assert!((d - 1.0).abs() < 1e-9);
                    }
                }
            }
        }
    }
}
