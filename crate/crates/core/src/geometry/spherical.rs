use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{Arc, Mat3, Sphere, SphereArc, Vec3};
use crate::error::{CurvError, Result};

/// Area of the spherical triangle on the unit sphere with the given side
/// lengths (L'Huilier).
pub fn spherical_triangle_area(alpha12: f64, alpha23: f64, alpha13: f64) -> Result<f64> {
    let (a, b, c) = (alpha12, alpha23, alpha13);
    let sigma = 0.5 * (a + b + c);
    let valid = [a, b, c].iter().all(|x| x.is_finite() && *x > 0.0)
        && a < b + c
        && b < a + c
        && c < a + b
        && sigma < PI;
    if !valid {
        return Err(CurvError::InvalidSphericalTriangle(a, b, c));
    }
    let prod = (0.5 * sigma).tan()
        * (0.5 * (sigma - a)).tan()
        * (0.5 * (sigma - b)).tan()
        * (0.5 * (sigma - c)).tan();
    Ok(4.0 * prod.max(0.0).sqrt().atan())
}

/// Signed turning angle at `u` from incoming tangent `t_in` to outgoing tangent
/// `t_out`, positive for a left turn seen from outside the sphere.
pub fn turning_angle(u: &Vec3, t_in: &Vec3, t_out: &Vec3) -> f64 {
    u.dot(&t_in.cross(t_out)).atan2(t_in.dot(t_out))
}

/// Area of the region to the left of a closed loop of arcs on the unit sphere.
pub fn loop_area(arcs: &[SphereArc]) -> f64 {
    let mut total = TAU;
    for (idx, a) in arcs.iter().enumerate() {
        let next = &arcs[(idx + 1) % arcs.len()];
        total -= a.geodesic_curvature_integral();
        total -= turning_angle(&next.start(), &a.tangent_end(), &next.tangent_start());
    }
    total
}

/// Signed area of the spherical triangle `(p, a, b)`.
fn signed_triangle(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    2.0 * p.dot(&a.cross(b)).atan2(1.0 + p.dot(a) + p.dot(b) + a.dot(b))
}

/// Signed area between a short arc and the great arc joining its endpoints.
fn segment_area(arc: &SphereArc) -> f64 {
    if arc.c == 0.0 {
        return 0.0;
    }
    let back = SphereArc::great(&arc.end(), &arc.start());
    let g = loop_area(&[*arc, back]);
    if g > TAU {
        g - 2.0 * TAU
    } else {
        g
    }
}

/// Segment term of [`pole_winding`]: the segment area, shifted by `4π` when
/// `q` lies between the arc and its chord.
fn segment_winding(arc: &SphereArc, q: &Vec3) -> f64 {
    let s = segment_area(arc);
    if s == 0.0 {
        return 0.0;
    }
    let (a, b) = (arc.start(), arc.end());
    let g = a.cross(&b);
    let chord_mid = (a + b).normalize();
    let bulge = arc.midpoint();
    let level = |u: &Vec3| u.dot(&arc.k) - arc.c;
    let between = q.dot(&g) * bulge.dot(&g) > 0.0 && level(q) * level(&chord_mid) > 0.0;
    if between {
        s - 2.0 * TAU * s.signum()
    } else {
        s
    }
}

/// Integral over the loop of the area form seen from `pole`. Equals the left
/// area if `-pole` lies outside the left region, and that area minus `4π` if
/// inside.
pub fn pole_winding(arcs: &[SphereArc], pole: &Vec3) -> f64 {
    let mut total = 0.0;
    for a in arcs {
        let pieces = ((a.dtheta.abs() / (PI / 4.0)).ceil() as usize).max(1);
        for k in 0..pieces {
            let sub = a.sub(k as f64 / pieces as f64, (k + 1) as f64 / pieces as f64);
            total += signed_triangle(pole, &sub.start(), &sub.end()) + segment_winding(&sub, &(-pole));
        }
    }
    total
}

/// A loop split into the short pieces used by [`pole_winding`], with the
/// pole-independent terms cached.
#[derive(Debug, Clone)]
pub struct PreparedLoop {
    pieces: Vec<PreparedPiece>,
    area: f64,
}

#[derive(Debug, Clone)]
struct PreparedPiece {
    start: Vec3,
    end: Vec3,
    normal: Vec3,
    bulge_side: f64,
    axis: Vec3,
    level: f64,
    chord_side: f64,
    segment: f64,
}

impl PreparedLoop {
    pub fn new(arcs: &[SphereArc]) -> Self {
        let mut pieces = Vec::new();
        for a in arcs {
            let n = ((a.dtheta.abs() / (PI / 4.0)).ceil() as usize).max(1);
            for k in 0..n {
                let sub = a.sub(k as f64 / n as f64, (k + 1) as f64 / n as f64);
                let (start, end) = (sub.start(), sub.end());
                let normal = start.cross(&end);
                let chord_mid = (start + end).normalize();
                pieces.push(PreparedPiece {
                    start,
                    end,
                    normal,
                    bulge_side: sub.midpoint().dot(&normal),
                    axis: sub.k,
                    level: sub.c,
                    chord_side: chord_mid.dot(&sub.k) - sub.c,
                    segment: segment_area(&sub),
                });
            }
        }
        Self { pieces, area: loop_area(arcs) }
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Same value as [`pole_winding`] on the original arcs.
    pub fn winding(&self, pole: &Vec3) -> f64 {
        let q = -pole;
        self.pieces
            .iter()
            .map(|p| {
                let mut seg = p.segment;
                if seg != 0.0
                    && q.dot(&p.normal) * p.bulge_side > 0.0
                    && (q.dot(&p.axis) - p.level) * p.chord_side > 0.0
                {
                    seg -= 2.0 * TAU * seg.signum();
                }
                signed_triangle(pole, &p.start, &p.end) + seg
            })
            .sum()
    }

    /// Whether `q` lies strictly to the left of the loop.
    pub fn contains(&self, q: &Vec3) -> bool {
        (self.winding(&(-q)) - self.area).abs() > TAU
    }
}

/// Whether the unit vector `q` lies strictly to the left of the loop.
pub fn loop_contains(arcs: &[SphereArc], area: f64, q: &Vec3) -> bool {
    (pole_winding(arcs, &(-q)) - area).abs() > TAU
}

/// One oriented boundary arc of a face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryArc {
    pub arc: Arc,
    /// Traversed counterclockwise about the circle axis when true.
    pub forward: bool,
    /// Edge index in the owning boundary, once stitched.
    pub edge: Option<usize>,
}

/// A connected region of a sphere bounded by loops of circular arcs, each loop
/// oriented with the region on its left when seen from outside the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalPolygon {
    pub sphere_id: usize,
    pub sphere: Sphere,
    pub loops: Vec<Vec<BoundaryArc>>,
}

impl SphericalPolygon {
    pub fn full(sphere_id: usize, sphere: Sphere) -> Self {
        Self { sphere_id, sphere, loops: Vec::new() }
    }

    pub fn is_full_sphere(&self) -> bool {
        self.loops.is_empty()
    }

    /// The loops as arcs on the unit sphere centered at the sphere center.
    pub fn unit_loops(&self) -> Vec<Vec<SphereArc>> {
        self.loops
            .iter()
            .map(|l| {
                l.iter()
                    .map(|b| b.arc.on_sphere(&self.sphere.center, self.sphere.radius, b.forward))
                    .collect()
            })
            .collect()
    }

    /// Checks that every loop closes within `tol` and lies on the sphere.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let r = self.sphere.radius;
        for (li, l) in self.loops.iter().enumerate() {
            if l.is_empty() {
                return Err(CurvError::UnclosedFace(format!("loop {li} of sphere {} is empty", self.sphere_id)));
            }
            for (k, b) in l.iter().enumerate() {
                let next = &l[(k + 1) % l.len()];
                let end = if b.forward { b.arc.end_point() } else { b.arc.start_point() };
                let start = if next.forward { next.arc.start_point() } else { next.arc.end_point() };
                if (end - start).norm() > tol.max(1e-12 * r) * 1e3 {
                    return Err(CurvError::UnclosedFace(format!(
                        "loop {li} of sphere {} has a gap of {} after arc {k}",
                        self.sphere_id,
                        (end - start).norm()
                    )));
                }
                let off = ((end - self.sphere.center).norm() - r).abs();
                if off > tol.max(1e-12 * r) * 1e3 {
                    return Err(CurvError::UnclosedFace(format!(
                        "arc {k} of loop {li} is off sphere {} by {off}",
                        self.sphere_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Area on the unit sphere.
    pub fn unit_area(&self) -> f64 {
        if self.loops.is_empty() {
            return 2.0 * TAU;
        }
        let loops = self.unit_loops();
        let b = loops.len() as f64;
        loops.iter().map(|l| loop_area(l)).sum::<f64>() - 2.0 * TAU * (b - 1.0)
    }

    /// Area in world units.
    pub fn area(&self) -> f64 {
        self.unit_area() * self.sphere.radius * self.sphere.radius
    }

    /// `∫ u dA` over the face on the unit sphere.
    pub fn unit_vector_area(&self) -> Vec3 {
        self.unit_loops().iter().flatten().map(|a| a.vector_area()).sum()
    }

    /// `∫ u uᵀ dA` over the face on the unit sphere.
    pub fn unit_second_moment(&self) -> Mat3 {
        let m: Mat3 = self.unit_loops().iter().flatten().map(|a| a.conormal_moment()).sum();
        (2.0 * self.unit_area() * Mat3::identity() - m) / 6.0
    }

    /// Whether the unit direction `u` (from the sphere center) lies in the face.
    pub fn contains_direction(&self, u: &Vec3) -> bool {
        self.unit_loops().iter().all(|l| loop_contains(l, loop_area(l), u))
    }
}

/// Area of a spherical polygon in world units, by angle excess.
pub fn spherical_polygon_area(poly: &SphericalPolygon) -> Result<f64> {
    poly.validate(super::DEFAULT_TOLERANCE)?;
    Ok(poly.area())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::IntersectionCircle;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn octant_triangle() {
        let a = spherical_triangle_area(PI / 2.0, PI / 2.0, PI / 2.0).unwrap();
        assert_relative_eq!(a, PI / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn planar_limit() {
        for x in [1e-2, 1e-3, 1e-4] {
            let a = spherical_triangle_area(x, x, x).unwrap();
            assert_relative_eq!(a / (3f64.sqrt() / 4.0 * x * x), 1.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn invalid_triangles() {
        assert!(spherical_triangle_area(1.0, 1.0, 2.5).is_err());
        assert!(spherical_triangle_area(2.5, 2.5, 2.5).is_err());
        assert!(spherical_triangle_area(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn triangle_matches_rejection_sampling() {
        // Build vertices with the given side lengths, then sample the solid angle.
        let (a12, a23, a13) = (1.0f64, 1.2f64, 0.9f64);
        let v1 = Vec3::z();
        let v2 = Vec3::new(a12.sin(), 0.0, a12.cos());
        // v3 at distance a13 from v1 and a23 from v2.
        let z3 = a13.cos();
        let x3 = (a23.cos() - z3 * a12.cos()) / a12.sin();
        let y3 = (1.0 - x3 * x3 - z3 * z3).sqrt();
        let v3 = Vec3::new(x3, y3, z3);
        let n = [v1.cross(&v2), v2.cross(&v3), v3.cross(&v1)];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let samples = 2_000_000;
        let mut hits = 0usize;
        for _ in 0..samples {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi: f64 = rng.gen_range(0.0..TAU);
            let s = (1.0 - z * z).sqrt();
            let u = Vec3::new(s * phi.cos(), s * phi.sin(), z);
            if n.iter().all(|m| m.dot(&u) > 0.0) {
                hits += 1;
            }
        }
        let mc = 4.0 * PI * hits as f64 / samples as f64;
        let exact = spherical_triangle_area(a12, a23, a13).unwrap();
        assert!((mc - exact).abs() < 3e-3, "mc {mc} exact {exact}");
    }

    #[test]
    fn permutation_invariance() {
        let a = spherical_triangle_area(1.0, 1.2, 0.9).unwrap();
        for (x, y, z) in [(1.2, 0.9, 1.0), (0.9, 1.0, 1.2), (1.0, 0.9, 1.2)] {
            assert_relative_eq!(spherical_triangle_area(x, y, z).unwrap(), a, epsilon = 1e-14);
        }
    }

    fn cap_polygon(r: f64, cos_half: f64, flip: bool) -> SphericalPolygon {
        let sphere = Sphere::new(Vec3::zeros(), r).unwrap();
        let circle = IntersectionCircle::from_parts(
            Vec3::new(0.0, 0.0, r * cos_half),
            r * (1.0 - cos_half * cos_half).sqrt(),
            Vec3::z(),
            (0, 1),
        );
        let arc = Arc::full(circle);
        SphericalPolygon {
            sphere_id: 0,
            sphere,
            loops: vec![vec![BoundaryArc { arc, forward: !flip, edge: None }]],
        }
    }

    #[test]
    fn full_sphere_and_hemisphere() {
        let s = Sphere::new(Vec3::zeros(), 2.0).unwrap();
        assert_relative_eq!(spherical_polygon_area(&SphericalPolygon::full(0, s)).unwrap(), 16.0 * PI);
        let hemi = cap_polygon(1.0, 0.0, false);
        assert_relative_eq!(spherical_polygon_area(&hemi).unwrap(), TAU, epsilon = 1e-14);
    }

    #[test]
    fn cap_and_complement() {
        for &(r, alpha) in &[(1.0, 0.4), (2.5, 1.9), (0.3, 2.9)] {
            let c = f64::cos(alpha);
            let cap = cap_polygon(r, c, false);
            let rest = cap_polygon(r, c, true);
            let exact = TAU * r * r * (1.0 - c);
            assert_relative_eq!(cap.area(), exact, max_relative = 1e-12);
            assert_relative_eq!(cap.area() + rest.area(), 2.0 * TAU * r * r, max_relative = 1e-9);
            // Numeric quadrature cross-check.
            let loops = cap.unit_loops();
            let quad = loops[0][0].polar_area_integral(&Vec3::new(0.1, 0.0, 1.0).normalize());
            assert_relative_eq!(quad * r * r, exact, max_relative = 1e-9);
        }
    }

    #[test]
    fn containment() {
        let at = |z: f64| Vec3::new((1.0 - z * z).sqrt(), 0.0, z);
        let cap = cap_polygon(1.0, 0.5, false);
        assert!(cap.contains_direction(&Vec3::z()));
        assert!(!cap.contains_direction(&(-Vec3::z())));
        assert!(cap.contains_direction(&at(0.5 + 1e-9)));
        assert!(!cap.contains_direction(&at(0.5 - 1e-9)));
        let rest = cap_polygon(1.0, 0.5, true);
        assert!(rest.contains_direction(&at(0.5 - 1e-9)));
        assert!(!rest.contains_direction(&at(0.9)));
    }

    #[test]
    fn containment_near_the_boundary_at_every_azimuth() {
        let cap = cap_polygon(1.0, 0.5, false);
        let rest = cap_polygon(1.0, 0.5, true);
        for k in 0..720 {
            let phi = k as f64 * TAU / 720.0 + 0.01;
            for (z, inside) in [(0.5f64 + 1e-9, true), (0.5 - 1e-9, false), (0.53, true), (0.47, false)] {
                let rho = (1.0 - z * z).sqrt();
                let u = Vec3::new(rho * phi.cos(), rho * phi.sin(), z);
                assert_eq!(cap.contains_direction(&u), inside, "phi {phi} z {z}");
                assert_eq!(rest.contains_direction(&u), !inside, "phi {phi} z {z}");
            }
        }
    }

    #[test]
    fn prepared_loop_matches_direct_winding() {
        let cap = cap_polygon(1.0, 0.3, false);
        let arcs = &cap.unit_loops()[0];
        let prepared = PreparedLoop::new(arcs);
        for k in 0..200 {
            let t = k as f64 * 0.37;
            let pole = Vec3::new(t.cos() * (0.3 * t).sin(), t.sin() * (0.3 * t).sin(), (0.3 * t).cos());
            assert_relative_eq!(prepared.winding(&pole), pole_winding(arcs, &pole), epsilon = 1e-12);
        }
    }

    #[test]
    fn winding_of_triangle() {
        let tri = [
            SphereArc::great(&Vec3::x(), &Vec3::y()),
            SphereArc::great(&Vec3::y(), &Vec3::z()),
            SphereArc::great(&Vec3::z(), &Vec3::x()),
        ];
        let a = loop_area(&tri);
        assert_relative_eq!(a, PI / 2.0, epsilon = 1e-14);
        let inside = Vec3::new(1.0, 1.0, 1.0).normalize();
        assert!(loop_contains(&tri, a, &inside));
        assert!(!loop_contains(&tri, a, &(-inside)));
        assert!(!loop_contains(&tri, a, &Vec3::new(1.0, 1.0, -0.01).normalize()));
    }
}
