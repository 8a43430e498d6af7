use std::ops::{Add, AddAssign, Mul};
use std::f64::consts::TAU;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::LipschitzKernel;
use crate::error::{CurvError, Result};
use crate::geometry::{
    any_perpendicular, arc_crossings, gauss_legendre_16, pole_winding, PreparedLoop,
    spherical_triangle_area, Arc, Frame2B, Mat3, Sphere, SphereArc, SphericalPolygon, Vec3,
};

/// Values of the four measures on one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub phi_h: f64,
    pub phi_g: f64,
    pub h_bar: Mat3,
    pub h_tilde: Mat3,
}

impl Contribution {
    pub fn zero() -> Self {
        Self { phi_h: 0.0, phi_g: 0.0, h_bar: Mat3::zeros(), h_tilde: Mat3::zeros() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.phi_h - other.phi_h)
            .abs()
            .max((self.phi_g - other.phi_g).abs())
            .max((self.h_bar - other.h_bar).abs().max())
            .max((self.h_tilde - other.h_tilde).abs().max())
    }
}

impl Default for Contribution {
    fn default() -> Self {
        Self::zero()
    }
}

impl Add for Contribution {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            phi_h: self.phi_h + o.phi_h,
            phi_g: self.phi_g + o.phi_g,
            h_bar: self.h_bar + o.h_bar,
            h_tilde: self.h_tilde + o.h_tilde,
        }
    }
}

impl AddAssign for Contribution {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Mul<f64> for Contribution {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self { phi_h: self.phi_h * s, phi_g: self.phi_g * s, h_bar: self.h_bar * s, h_tilde: self.h_tilde * s }
    }
}

/// Measures of a spherical region with unit-sphere area `area` and second
/// moment `second` on a sphere of radius `r`, for `f ≡ 1`.
fn region_contribution(r: f64, area: f64, second: &Mat3) -> Contribution {
    let h = r * (area * Mat3::identity() - second);
    Contribution { phi_h: 2.0 * r * area, phi_g: area, h_bar: h, h_tilde: h }
}

struct FaceData<'a> {
    center: Vec3,
    r: f64,
    loops: Vec<Vec<SphereArc>>,
    prepared: Vec<PreparedLoop>,
    /// (loop, arc, cap center, cap radius)
    caps: Vec<(usize, usize, Vec3, f64)>,
    kernel: &'a LipschitzKernel,
    eta: f64,
}

fn icosahedron() -> &'static (Vec<Vec3>, Vec<[usize; 3]>) {
    static ICO: OnceLock<(Vec<Vec3>, Vec<[usize; 3]>)> = OnceLock::new();
    ICO.get_or_init(|| {
        let p = (1.0 + 5f64.sqrt()) / 2.0;
        let mut v = Vec::new();
        for a in [-1.0, 1.0] {
            for b in [-p, p] {
                v.push(Vec3::new(a, b, 0.0).normalize());
                v.push(Vec3::new(0.0, a, b).normalize());
                v.push(Vec3::new(b, 0.0, a).normalize());
            }
        }
        let edge = (1..12).map(|b| (v[0] - v[b]).norm()).fold(f64::INFINITY, f64::min);
        let near = |a: usize, b: usize| (v[a] - v[b]).norm() < 1.5 * edge;
        let mut faces = Vec::new();
        for a in 0..12 {
            for b in a + 1..12 {
                for c in b + 1..12 {
                    if near(a, b) && near(b, c) && near(a, c) {
                        let t = if v[a].dot(&v[b].cross(&v[c])) > 0.0 { [a, b, c] } else { [a, c, b] };
                        faces.push(t);
                    }
                }
            }
        }
        debug_assert_eq!(faces.len(), 20);
        (v, faces)
    })
}

fn signed_triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    2.0 * a.dot(&b.cross(c)).atan2(1.0 + a.dot(b) + b.dot(c) + c.dot(a))
}

/// Frame used to lay the tessellation on a face so that it moves with the data.
fn face_frame(face: &SphericalPolygon, kernel: &LipschitzKernel) -> Frame2B {
    let c = face.sphere.center;
    let r = face.sphere.radius;
    // Circle shared with the lowest-id neighbor, so that appending points
    // does not rotate the tessellation of faces they do not touch.
    let first_axis = face
        .loops
        .iter()
        .flatten()
        .map(|b| &b.arc.circle)
        .min_by_key(|c| if c.parents.0 == face.sphere_id { c.parents.1 } else { c.parents.0 })
        .map(|c| c.axis);
    let k = match kernel.anchor() {
        Some(a) if (a - c).norm() > 1e-9 * r => (a - c).normalize(),
        _ => first_axis.unwrap_or_else(Vec3::z),
    };
    let toward = match first_axis {
        Some(ax) if ax.cross(&k).norm() > 1e-6 => ax,
        _ => any_perpendicular(&k),
    };
    Frame2B::new(c, toward, k)
}

/// Face contribution: exact for constant `f`; otherwise `f` is sampled at the
/// spherical centroid of each patch of a tessellation of diameter `< eta`.
pub fn face_measures(face: &SphericalPolygon, f: &LipschitzKernel, eta: f64) -> Result<Contribution> {
    if !(eta > 0.0) {
        return Err(CurvError::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    let r = face.sphere.radius;
    if let Some(v) = f.constant_value() {
        return Ok(region_contribution(r, face.unit_area(), &face.unit_second_moment()) * v);
    }
    // Terms are integrated separately, each on its own frame, so the result is linear in f.
    if let LipschitzKernel::Combination { terms } = f {
        let mut acc = Contribution::zero();
        for (w, k) in terms.iter().filter(|(w, _)| *w != 0.0) {
            acc += face_measures(face, k, eta)? * *w;
        }
        return Ok(acc);
    }
    if face.is_full_sphere() {
        if let Some(c) = radial_full_sphere(face, f) {
            return Ok(c);
        }
    }
    let loops = face.unit_loops();
    let prepared: Vec<PreparedLoop> = loops.iter().map(|l| PreparedLoop::new(l)).collect();
    let mut caps = Vec::new();
    for (li, l) in loops.iter().enumerate() {
        for (ai, a) in l.iter().enumerate() {
            let (m, rad) = a.bounding_cap();
            caps.push((li, ai, m, rad));
        }
    }
    let data = FaceData { center: face.sphere.center, r, loops, prepared, caps, kernel: f, eta };
    let frame = face_frame(face, f);
    let q = frame.rotation();
    let (verts, tris) = icosahedron();
    let world: Vec<Vec3> = verts.iter().map(|v| q * v).collect();
    let all: Vec<usize> = (0..data.caps.len()).collect();
    let loops: Vec<usize> = (0..data.loops.len()).collect();
    let mut acc = Contribution::zero();
    for t in tris {
        refine(&data, [world[t[0]], world[t[1]], world[t[2]]], &loops, &all, &mut acc);
    }
    Ok(acc)
}

/// Exact integral over a whole sphere of a kernel that depends only on the
/// distance to its anchor. In that distance the integrand is piecewise
/// polynomial, so Gauss-Legendre is exact between the kinks of the kernel.
fn radial_full_sphere(face: &SphericalPolygon, f: &LipschitzKernel) -> Option<Contribution> {
    let (anchor, kinks) = match f {
        LipschitzKernel::Hat { center, radius } => (*center, vec![*radius]),
        LipschitzKernel::Tabulated { nodes, values, lipschitz } if nodes.len() == 1 => {
            let kinks = if *lipschitz > 0.0 { vec![(1.0 - values[0]) / lipschitz, (-1.0 - values[0]) / lipschitz] } else { Vec::new() };
            (nodes[0], kinks)
        }
        _ => return None,
    };
    let c = face.sphere.center;
    let r = face.sphere.radius;
    let s = (anchor - c).norm();
    if s <= 1e-12 * r {
        let v = f.eval(&(c + r * Vec3::z()));
        return Some(region_contribution(r, 2.0 * TAU, &(Mat3::identity() * (2.0 * TAU / 3.0))) * v);
    }
    let k = (anchor - c) / s;
    let side = any_perpendicular(&k);
    let (lo, hi) = ((s - r).abs(), s + r);
    let mut cuts = vec![lo];
    cuts.extend(kinks.into_iter().filter(|d| *d > lo && *d < hi));
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let kk = k * k.transpose();
    let plane = Mat3::identity() - kk;
    let (mut area, mut second) = (0.0, Mat3::zeros());
    for w in cuts.windows(2) {
        let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for &(x, wx) in gauss_legendre_16().iter() {
            let d = mid + half * x;
            let t = ((s * s + r * r - d * d) / (2.0 * s * r)).clamp(-1.0, 1.0);
            let fv = f.eval(&(c + r * (t * k + (1.0 - t * t).sqrt() * side)));
            // dΩ = dt dφ and dt = -(d / s r) dd.
            let weight = fv * wx * half * d / (s * r);
            area += TAU * weight;
            second += (plane * (0.5 * (1.0 - t * t)) + kk * (t * t)) * (TAU * weight);
        }
    }
    Some(region_contribution(r, area, &second))
}

/// `pending` lists the loops whose side is not yet settled for `tri`, and
/// `arcs` the arcs of those loops that may still cross it.
fn refine(d: &FaceData, tri: [Vec3; 3], pending: &[usize], arcs: &[usize], acc: &mut Contribution) {
    let m = (tri[0] + tri[1] + tri[2]).normalize();
    let cap = tri.iter().map(|v| m.dot(v).clamp(-1.0, 1.0).acos()).fold(0.0, f64::max) + 1e-12;
    let world_center = d.center + d.r * m;
    let world_radius = 2.0 * d.r * (0.5 * cap).sin();
    if !d.kernel.may_touch(&world_center, world_radius) {
        return;
    }
    let near: Vec<usize> = arcs
        .iter()
        .copied()
        .filter(|&k| {
            let (_, _, c, rad) = d.caps[k];
            m.dot(&c).clamp(-1.0, 1.0).acos() <= cap + rad
        })
        .collect();
    // Loops with no arc near the triangle keep one side over all of it.
    let mut still: Vec<usize> = Vec::with_capacity(pending.len());
    for &l in pending {
        if near.iter().any(|&k| d.caps[k].0 == l) {
            still.push(l);
        } else if !d.prepared[l].contains(&m) {
            return;
        }
    }
    let diameter = d.r
        * (tri[0] - tri[1]).norm().max((tri[1] - tri[2]).norm()).max((tri[2] - tri[0]).norm());
    if diameter < d.eta {
        let patch = if still.is_empty() { triangle_patch(&tri) } else { clipped_patch(d, &tri, m, &near, &still) };
        if let Some((area, vector, second)) = patch {
            let u = if vector.norm() > 0.0 { vector.normalize() } else { m };
            let fv = d.kernel.eval(&(d.center + d.r * u));
            if fv != 0.0 {
                *acc += region_contribution(d.r, area, &second) * fv;
            }
        }
        return;
    }
    let mid = |a: usize, b: usize| (tri[a] + tri[b]).normalize();
    let (m01, m12, m20) = (mid(0, 1), mid(1, 2), mid(2, 0));
    for child in [[tri[0], m01, m20], [m01, tri[1], m12], [m20, m12, tri[2]], [m01, m12, m20]] {
        refine(d, child, &still, &near, acc);
    }
}

/// World-space triangles of diameter `< eta` covering the face, keeping the
/// leaves whose centroid lies in it.
pub fn face_tessellation(face: &SphericalPolygon, eta: f64) -> Result<Vec<[Vec3; 3]>> {
    if !(eta > 0.0) {
        return Err(CurvError::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    let loops = face.unit_loops();
    let prepared: Vec<PreparedLoop> = loops.iter().map(|l| PreparedLoop::new(l)).collect();
    let caps: Vec<(usize, Vec3, f64)> = loops
        .iter()
        .enumerate()
        .flat_map(|(li, l)| l.iter().map(move |a| {
            let (m, rad) = a.bounding_cap();
            (li, m, rad)
        }))
        .collect();
    let r = face.sphere.radius;
    let c = face.sphere.center;
    let q = face_frame(face, &LipschitzKernel::ConstantOne).rotation();
    let (verts, tris) = icosahedron();
    let world: Vec<Vec3> = verts.iter().map(|v| q * v).collect();
    let mut out = Vec::new();
    let mut stack: Vec<([Vec3; 3], Vec<usize>)> =
        tris.iter().map(|t| ([world[t[0]], world[t[1]], world[t[2]]], (0..loops.len()).collect())).collect();
    while let Some((tri, pending)) = stack.pop() {
        let m = (tri[0] + tri[1] + tri[2]).normalize();
        let cap = tri.iter().map(|v| m.dot(v).clamp(-1.0, 1.0).acos()).fold(0.0, f64::max) + 1e-12;
        let mut still = Vec::new();
        let mut outside = false;
        for &l in &pending {
            let near = caps.iter().any(|&(li, cm, rad)| li == l && m.dot(&cm).clamp(-1.0, 1.0).acos() <= cap + rad);
            if near {
                still.push(l);
            } else if !prepared[l].contains(&m) {
                outside = true;
                break;
            }
        }
        if outside {
            continue;
        }
        let diameter = r * (tri[0] - tri[1]).norm().max((tri[1] - tri[2]).norm()).max((tri[2] - tri[0]).norm());
        if diameter < eta {
            if still.iter().all(|&l| prepared[l].contains(&m)) {
                out.push(tri.map(|v| c + r * v));
            }
            continue;
        }
        let mid = |a: usize, b: usize| (tri[a] + tri[b]).normalize();
        let (m01, m12, m20) = (mid(0, 1), mid(1, 2), mid(2, 0));
        for child in [[tri[0], m01, m20], [m01, tri[1], m12], [m20, m12, tri[2]], [m01, m12, m20]] {
            stack.push((child, still.clone()));
        }
    }
    Ok(out)
}

type Patch = (f64, Vec3, Mat3);

fn moments_of(pieces: &[SphereArc], area: f64) -> Patch {
    let vector: Vec3 = pieces.iter().map(|p| p.vector_area()).sum();
    let m: Mat3 = pieces.iter().map(|p| p.conormal_moment()).sum();
    (area, vector, (2.0 * area * Mat3::identity() - m) / 6.0)
}

fn triangle_patch(tri: &[Vec3; 3]) -> Option<Patch> {
    let edges = [SphereArc::great(&tri[0], &tri[1]), SphereArc::great(&tri[1], &tri[2]), SphereArc::great(&tri[2], &tri[0])];
    let area = signed_triangle_area(&tri[0], &tri[1], &tri[2]);
    (area > 0.0).then(|| moments_of(&edges, area))
}

/// Part of a small geodesic triangle inside the face, integrated through its
/// boundary: face arcs inside the triangle and triangle sides inside the face.
fn clipped_patch(d: &FaceData, tri: &[Vec3; 3], pole: Vec3, near: &[usize], pending: &[usize]) -> Option<Patch> {
    let edges = [SphereArc::great(&tri[0], &tri[1]), SphereArc::great(&tri[1], &tri[2]), SphereArc::great(&tri[2], &tri[0])];
    let normals = [tri[0].cross(&tri[1]), tri[1].cross(&tri[2]), tri[2].cross(&tri[0])];
    let in_tri = |u: &Vec3| normals.iter().all(|n| n.dot(u) >= 0.0);
    let mut pieces = Vec::new();
    let mut edge_cuts: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for &k in near {
        let (li, ai, _, _) = d.caps[k];
        let arc = d.loops[li][ai];
        let mut cuts = vec![0.0, 1.0];
        for (e, g) in edges.iter().enumerate() {
            cuts.extend(arc_crossings(&arc, g));
            edge_cuts[e].extend(arc_crossings(g, &arc));
        }
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            if w[1] - w[0] <= 0.0 {
                continue;
            }
            let piece = arc.sub(w[0], w[1]);
            if in_tri(&piece.midpoint()) {
                pieces.push(piece);
            }
        }
    }
    for (e, g) in edges.iter().enumerate() {
        let cuts = &mut edge_cuts[e];
        cuts.push(0.0);
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            if w[1] - w[0] <= 0.0 {
                continue;
            }
            let piece = g.sub(w[0], w[1]);
            let x = piece.midpoint();
            if pending.iter().all(|&l| d.prepared[l].contains(&x)) {
                pieces.push(piece);
            }
        }
    }
    if pieces.is_empty() {
        return None;
    }
    let area: f64 = pieces.iter().map(|p| pole_winding(std::slice::from_ref(p), &pole)).sum();
    (area > 0.0).then(|| moments_of(&pieces, area))
}

/// `∫∫ e eᵀ` over the edge normal cone in the frame `(i, j, k)`, for the
/// direction across the edge (`across = true`) or along it.
fn edge_frame_matrix(alpha: f64, beta: f64, across: bool) -> Mat3 {
    let s2b = (2.0 * beta).sin();
    let c2b = (2.0 * beta).cos();
    if across {
        let w = alpha - 0.5 * (2.0 * alpha).sin();
        let off = w * (1.0 - c2b) / 4.0;
        Mat3::new(
            0.5 * w * (beta + 0.5 * s2b), off, 0.0,
            off, 0.5 * w * (beta - 0.5 * s2b), 0.0,
            0.0, 0.0, beta * (alpha + 0.5 * (2.0 * alpha).sin()),
        )
    } else {
        let off = -(1.0 - c2b) / 4.0;
        Mat3::new(
            0.5 * (beta - 0.5 * s2b), off, 0.0,
            off, 0.5 * (beta + 0.5 * s2b), 0.0,
            0.0, 0.0, 0.0,
        ) * (2.0 * alpha)
    }
}

/// Half-angle of the edge normal cone: `arcsin(d / 2r)`.
pub fn edge_half_angle(s1: &Sphere, s2: &Sphere) -> f64 {
    let d = (s1.center - s2.center).norm();
    (0.5 * d / s1.radius).clamp(-1.0, 1.0).asin()
}

/// Contribution of a sub-arc starting at angle `theta` spanning `beta`, for `f ≡ 1`.
fn edge_piece(arc: &Arc, r: f64, alpha: f64, theta: f64, beta: f64) -> Contribution {
    let c = &arc.circle;
    let i = theta.cos() * c.basis_x + theta.sin() * c.basis_y;
    let frame = Frame2B::new(c.center, i, c.axis);
    let w = -r * alpha.cos();
    Contribution {
        phi_h: -2.0 * beta * r * alpha * alpha.cos(),
        phi_g: -2.0 * beta * alpha.sin(),
        h_bar: frame.to_world(&edge_frame_matrix(alpha, beta, true)) * w,
        h_tilde: frame.to_world(&edge_frame_matrix(alpha, beta, false)) * w,
    }
}

/// Edge contribution: closed form per sub-arc of length `< eta`, `f` sampled
/// at each sub-arc midpoint.
pub fn edge_measures(edge: &Arc, spheres: (&Sphere, &Sphere), f: &LipschitzKernel, eta: f64) -> Result<Contribution> {
    if !(eta > 0.0) {
        return Err(CurvError::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    let (s1, s2) = spheres;
    if (s1.radius - s2.radius).abs() > 1e-12 * s1.radius.max(s2.radius) {
        return Err(CurvError::Unsupported("edge between spheres of different radii".into()));
    }
    let r = s1.radius;
    let alpha = edge_half_angle(s1, s2);
    if let Some(v) = f.constant_value() {
        return Ok(edge_piece(edge, r, alpha, edge.start_angle, edge.beta) * v);
    }
    if let LipschitzKernel::Combination { terms } = f {
        let mut acc = Contribution::zero();
        for (w, k) in terms.iter().filter(|(w, _)| *w != 0.0) {
            acc += edge_measures(edge, spheres, k, eta)? * *w;
        }
        return Ok(acc);
    }
    let circle = &edge.circle;
    let mut start = edge.start_angle;
    if edge.is_full_circle() {
        if let Some(a) = f.anchor() {
            let w = a - circle.center;
            let inplane = w - circle.axis * w.dot(&circle.axis);
            if inplane.norm() > 1e-9 * circle.radius {
                start = circle.angle_of(&a);
            }
        }
    }
    let n = (edge.length() / eta).floor() as usize + 1;
    let sub = edge.beta / n as f64;
    let mut acc = Contribution::zero();
    for k in 0..n {
        let theta = start + k as f64 * sub;
        let fv = f.eval(&circle.point_at(theta + 0.5 * sub));
        if fv != 0.0 {
            acc += edge_piece(edge, r, alpha, theta, sub) * fv;
        }
    }
    Ok(acc)
}

/// Vertex contribution: only the Gaussian measure is nonzero, equal to `f(v)`
/// times the area of the normal cone.
pub fn vertex_measures(vertex: &Vec3, spheres: (&Sphere, &Sphere, &Sphere), f: &LipschitzKernel) -> Result<Contribution> {
    let fv = f.eval(vertex);
    Ok(Contribution { phi_g: fv * vertex_cone_area(vertex, spheres)?, ..Contribution::zero() })
}

/// Area of the normal cone of a vertex of three equal spheres.
pub fn vertex_cone_area(vertex: &Vec3, spheres: (&Sphere, &Sphere, &Sphere)) -> Result<f64> {
    let (a, b, c) = spheres;
    let r = a.radius;
    for s in [a, b, c] {
        if (s.radius - r).abs() > 1e-12 * r {
            return Err(CurvError::Unsupported("vertex of spheres with different radii".into()));
        }
        if ((vertex - s.center).norm() - r).abs() > 1e-6 * r {
            return Err(CurvError::InvalidParameter("vertex does not lie on its spheres".into()));
        }
    }
    let side = |p: &Sphere, q: &Sphere| 2.0 * ((p.center - q.center).norm() / (2.0 * r)).min(1.0).asin();
    spherical_triangle_area(side(a, b), side(b, c), side(a, c))
}

/// Mass of the normal cycle over a face: `(1 + 1/r²)·area`.
pub fn face_mass(face: &SphericalPolygon) -> f64 {
    let r = face.sphere.radius;
    (1.0 + 1.0 / (r * r)) * face.area()
}

/// Mass of the normal cycle over an edge: `β ∫ √(R² + cos² v) dv` over the cone.
pub fn edge_mass(edge: &Arc, alpha: f64) -> f64 {
    let rr = edge.circle.radius;
    let integral: f64 = gauss_legendre_16()
        .iter()
        .map(|&(x, w)| w * (rr * rr + (alpha * x).cos().powi(2)).sqrt())
        .sum::<f64>()
        * alpha;
    edge.beta * integral
}
