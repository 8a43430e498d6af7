use std::collections::HashMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::general_position::{GeneralPositionReport, Violation, ViolationKind};
use crate::error::{CurvError, Result};
use crate::geometry::{loop_area, loop_contains, wrap_angle, Arc, BoundaryArc, IntersectionCircle, Sphere, SphericalPolygon, Vec3};

/// A neighboring ball of the clipped sphere with their common circle.
#[derive(Debug, Clone, Copy)]
pub struct Neighbor {
    pub id: usize,
    pub sphere: Sphere,
    pub circle: IntersectionCircle,
}

/// Identity of a boundary vertex: its three spheres (sorted) and the side of
/// their center plane it lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexKey {
    pub spheres: [usize; 3],
    pub side: i8,
}

impl VertexKey {
    pub fn of(point: &Vec3, ids: [usize; 3], centers: [Vec3; 3]) -> Self {
        let mut order = [0usize, 1, 2];
        order.sort_by_key(|&t| ids[t]);
        let [a, b, c] = order.map(|t| centers[t]);
        let s = (point - a).dot(&(b - a).cross(&(c - a)));
        Self { spheres: order.map(|t| ids[t]), side: if s >= 0.0 { 1 } else { -1 } }
    }
}

/// Identity of a boundary arc in its circle's counterclockwise parametrization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArcKey {
    pub pair: (usize, usize),
    pub start: Option<VertexKey>,
    pub end: Option<VertexKey>,
}

/// Faces of one sphere with the keys of their boundary arcs, parallel to the loops.
#[derive(Debug, Clone)]
pub struct SphereClip {
    pub faces: Vec<SphericalPolygon>,
    pub keys: Vec<Vec<Vec<ArcKey>>>,
}

#[derive(Debug, Clone, Copy)]
struct Cover {
    start: f64,
    len: f64,
    ball: usize,
}

fn gp_error(kind: ViolationKind, ids: Vec<usize>) -> CurvError {
    CurvError::GeneralPosition(GeneralPositionReport::single(kind, ids))
}

/// Portion of `circle` inside the open ball `ball`, as a counterclockwise
/// interval `(start, len)`; `len >= 2π` means fully covered.
fn coverage(circle: &IntersectionCircle, ball: &Sphere, ids: [usize; 3], tol: f64) -> Result<Option<(f64, f64)>> {
    let r = ball.radius;
    let rho = circle.radius;
    let w = ball.center - circle.center;
    let wa = w.dot(&circle.axis);
    let wp = w - wa * circle.axis;
    let s = wp.norm();
    let num = w.norm_squared() + rho * rho - r * r;
    if s * rho <= tol * r {
        if num.abs() <= 2.0 * r * tol {
            return Err(gp_error(ViolationKind::Tangency, ids.to_vec()));
        }
        return Ok((num < 0.0).then_some((0.0, TAU)));
    }
    let g = num / (2.0 * rho * s);
    let z2 = rho * rho * (1.0 - g * g);
    if z2 <= tol * tol && z2 > -2.0 * r * tol {
        return Err(gp_error(ViolationKind::RadiusCoincidence, ids.to_vec()));
    }
    if g >= 1.0 {
        return Ok(None);
    }
    if g <= -1.0 {
        return Ok(Some((0.0, TAU)));
    }
    let phi = wp.dot(&circle.basis_y).atan2(wp.dot(&circle.basis_x));
    let a = g.acos();
    Ok(Some((wrap_angle(phi - a), 2.0 * a)))
}

/// Angular distance on the circle.
fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Uncovered arcs of `circle`, as `(start, len, ball ending the coverage
/// before, ball starting the coverage after)`; full circle is `(0, 2π, None, None)`.
fn visible_arcs(
    circle: &IntersectionCircle,
    covers: &mut [Cover],
    ids: (usize, usize),
    tol: f64,
) -> Result<Vec<(f64, f64, Option<usize>, Option<usize>)>> {
    if covers.is_empty() {
        return Ok(vec![(0.0, TAU, None, None)]);
    }
    if covers.iter().any(|c| c.len >= TAU) {
        return Ok(Vec::new());
    }
    covers.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.ball.cmp(&b.ball)));
    // Merge into blocks in unrolled angle.
    let mut blocks: Vec<(f64, usize, f64, usize)> = Vec::new();
    for c in covers.iter() {
        let e = c.start + c.len;
        match blocks.last_mut() {
            Some(last) if c.start <= last.2 => {
                if e > last.2 {
                    last.2 = e;
                    last.3 = c.ball;
                }
            }
            _ => blocks.push((c.start, c.ball, e, c.ball)),
        }
    }
    while blocks.len() > 1 {
        let first = blocks[0];
        let last = blocks.last_mut().unwrap();
        if last.2 >= first.0 + TAU {
            if first.2 + TAU > last.2 {
                last.2 = first.2 + TAU;
                last.3 = first.3;
            }
            blocks.remove(0);
        } else {
            break;
        }
    }
    if blocks.len() == 1 && blocks[0].2 - blocks[0].0 >= TAU {
        return Ok(Vec::new());
    }
    let angle_tol = tol / circle.radius;
    let mut out = Vec::with_capacity(blocks.len());
    for (k, b) in blocks.iter().enumerate() {
        let next = blocks[(k + 1) % blocks.len()];
        let start = b.2;
        let mut end = next.0;
        while end <= start {
            end += TAU;
        }
        let len = end - start;
        // A vertex shared by four spheres shows up as coincident endpoints.
        for (angle, owner) in [(start, b.3), (next.0, next.1)] {
            for c in covers.iter() {
                if c.ball == owner {
                    continue;
                }
                if angle_gap(c.start, angle) <= angle_tol || angle_gap(c.start + c.len, angle) <= angle_tol {
                    let mut w = vec![ids.0, ids.1, owner, c.ball];
                    w.sort_unstable();
                    return Err(gp_error(ViolationKind::RadiusCoincidence, w));
                }
            }
        }
        if len > TAU {
            return Err(CurvError::Internal("visible arc longer than its circle".into()));
        }
        out.push((wrap_angle(start), len, Some(b.3), Some(next.1)));
    }
    Ok(out)
}

/// Clips a convex polytope, given by its face polygons, to `x·u <= h`.
fn clip_polytope(faces: &mut Vec<Vec<Vec3>>, u: &Vec3, h: f64, scale: f64) {
    let mut section = Vec::new();
    for face in faces.iter_mut() {
        let mut out = Vec::with_capacity(face.len() + 1);
        for k in 0..face.len() {
            let a = face[k];
            let b = face[(k + 1) % face.len()];
            let (sa, sb) = (a.dot(u) - h, b.dot(u) - h);
            if sa <= 0.0 {
                out.push(a);
            }
            if (sa <= 0.0) != (sb <= 0.0) {
                let p = a + (b - a) * (sa / (sa - sb));
                out.push(p);
                section.push(p);
            }
        }
        *face = out;
    }
    faces.retain(|f| f.len() >= 3);
    if section.len() >= 3 {
        let mid = section.iter().sum::<Vec3>() / section.len() as f64;
        let ex = crate::geometry::any_perpendicular(u);
        let ey = u.cross(&ex);
        section.sort_by(|p, q| {
            let (dp, dq) = (p - mid, q - mid);
            dp.dot(&ey).atan2(dp.dot(&ex)).total_cmp(&dq.dot(&ey).atan2(dq.dot(&ex)))
        });
        section.dedup_by(|p, q| (*p - *q).norm() <= 1e-12 * scale);
        if section.len() >= 3 {
            faces.push(section);
        }
    }
}

/// Indices of the `others` (centers within `2r` of `center`) whose bisector
/// plane touches the Voronoi cell of `center` inside the cube around the ball
/// of radius `r`. For equal radii the visible part of the sphere is its
/// intersection with that cell, and halfspaces that miss the cell do not
/// change it, so the other centers cannot bound a face.
pub(crate) fn voronoi_relevant(center: &Vec3, r: f64, others: &[Vec3]) -> Vec<usize> {
    if others.len() <= 8 {
        return (0..others.len()).collect();
    }
    let planes: Vec<(Vec3, f64)> = others
        .iter()
        .map(|c| {
            let w = c - center;
            let d = w.norm();
            (w / d, 0.5 * d)
        })
        .collect();
    let mut order: Vec<usize> = (0..others.len()).collect();
    order.sort_by(|&a, &b| planes[a].1.total_cmp(&planes[b].1).then(a.cmp(&b)));
    let w = r * (1.0 + 1e-6);
    let corner = |i: usize| Vec3::new(if i & 1 == 0 { -w } else { w }, if i & 2 == 0 { -w } else { w }, if i & 4 == 0 { -w } else { w });
    let mut faces: Vec<Vec<Vec3>> = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]]
        .iter()
        .map(|f| f.iter().map(|&i| corner(i)).collect())
        .collect();
    let reach = |faces: &Vec<Vec<Vec3>>, u: &Vec3, h: f64| {
        faces.iter().flatten().map(|v| v.dot(u) - h).fold(f64::NEG_INFINITY, f64::max)
    };
    for &k in &order {
        let (u, h) = planes[k];
        if reach(&faces, &u, h) > 0.0 {
            clip_polytope(&mut faces, &u, h, r);
        }
    }
    if faces.is_empty() {
        return (0..others.len()).collect();
    }
    let margin = 1e-6 * r;
    (0..others.len()).filter(|&k| reach(&faces, &planes[k].0, planes[k].1) >= -margin).collect()
}

fn relevant_neighbors(sphere: &Sphere, neighbors: &[Neighbor]) -> Vec<Neighbor> {
    let centers: Vec<Vec3> = neighbors.iter().map(|n| n.sphere.center).collect();
    voronoi_relevant(&sphere.center, sphere.radius, &centers).into_iter().map(|k| neighbors[k]).collect()
}

/// Visible arcs of every circle of a sphere, grouped into faces.
pub fn clip_sphere(sphere_id: usize, sphere: &Sphere, neighbors: &[Neighbor], tol: f64) -> Result<SphereClip> {
    if neighbors.is_empty() {
        return Ok(SphereClip { faces: vec![SphericalPolygon::full(sphere_id, *sphere)], keys: vec![Vec::new()] });
    }
    let relevant = relevant_neighbors(sphere, neighbors);
    let neighbors = &relevant[..];
    if neighbors.is_empty() {
        return Ok(SphereClip { faces: Vec::new(), keys: Vec::new() });
    }
    for (a, na) in neighbors.iter().enumerate() {
        for nb in &neighbors[a + 1..] {
            if (na.sphere.center - nb.sphere.center).norm() <= tol {
                return Err(gp_error(ViolationKind::Tangency, vec![sphere_id, na.id, nb.id]));
            }
        }
    }
    let centers: HashMap<usize, Vec3> =
        neighbors.iter().map(|n| (n.id, n.sphere.center)).chain([(sphere_id, sphere.center)]).collect();
    // Oriented arcs on this sphere: (arc, forward, key, from, to).
    let mut arcs: Vec<(Arc, bool, ArcKey, Option<VertexKey>, Option<VertexKey>)> = Vec::new();
    for n in neighbors {
        let circle = n.circle;
        let mut covers = Vec::new();
        for k in neighbors {
            if k.id == n.id {
                continue;
            }
            if let Some((start, len)) = coverage(&circle, &k.sphere, [sphere_id, n.id, k.id], tol)? {
                covers.push(Cover { start, len, ball: k.id });
            }
        }
        let pair = circle.parents;
        let forward = sphere_id == pair.1;
        for (start, len, before, after) in visible_arcs(&circle, &mut covers, pair, tol)? {
            let arc = if len >= TAU { Arc::full(circle) } else { Arc::new(circle, start, len) };
            let vkey = |ball: Option<usize>, p: Vec3| {
                ball.map(|b| VertexKey::of(&p, [pair.0, pair.1, b], [centers[&pair.0], centers[&pair.1], centers[&b]]))
            };
            let sk = vkey(before, arc.start_point());
            let ek = vkey(after, arc.end_point());
            let key = ArcKey { pair, start: sk, end: ek };
            let (from, to) = if forward { (sk, ek) } else { (ek, sk) };
            arcs.push((arc, forward, key, from, to));
        }
    }
    if arcs.is_empty() {
        return Ok(SphereClip { faces: Vec::new(), keys: Vec::new() });
    }
    arcs.sort_by(|a, b| a.2.cmp(&b.2));

    // Chain arcs into loops.
    let mut outgoing: HashMap<VertexKey, usize> = HashMap::new();
    for (idx, a) in arcs.iter().enumerate() {
        if let Some(from) = a.3 {
            if outgoing.insert(from, idx).is_some() {
                return Err(CurvError::Internal(format!("vertex {from:?} has two outgoing arcs on sphere {sphere_id}")));
            }
        }
    }
    let mut used = vec![false; arcs.len()];
    let mut loops: Vec<Vec<usize>> = Vec::new();
    for first in 0..arcs.len() {
        if used[first] {
            continue;
        }
        let mut lp = Vec::new();
        let mut cur = first;
        loop {
            if used[cur] {
                return Err(CurvError::UnclosedFace(format!("arc chain on sphere {sphere_id} revisits an arc")));
            }
            used[cur] = true;
            lp.push(cur);
            let Some(to) = arcs[cur].4 else { break };
            match outgoing.get(&to) {
                Some(&next) if next == first => break,
                Some(&next) => cur = next,
                None => {
                    return Err(CurvError::UnclosedFace(format!("no arc leaves vertex {to:?} on sphere {sphere_id}")))
                }
            }
        }
        loops.push(lp);
    }

    // Group loops into faces.
    let unit: Vec<Vec<_>> = loops
        .iter()
        .map(|l| l.iter().map(|&a| arcs[a].0.on_sphere(&sphere.center, sphere.radius, arcs[a].1)).collect())
        .collect();
    let areas: Vec<f64> = unit.iter().map(|l: &Vec<_>| loop_area(l)).collect();
    let probes: Vec<Vec3> = unit.iter().map(|l| l[0].midpoint()).collect();
    let nl = loops.len();
    let side: Vec<Vec<bool>> = (0..nl)
        .map(|a| (0..nl).map(|c| a != c && loop_contains(&unit[c], areas[c], &probes[a])).collect())
        .collect();
    let mut face_of = vec![usize::MAX; nl];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for a in 0..nl {
        if face_of[a] != usize::MAX {
            continue;
        }
        let g = groups.len();
        face_of[a] = g;
        let mut members = vec![a];
        for b in a + 1..nl {
            if face_of[b] != usize::MAX || !side[a][b] || !side[b][a] {
                continue;
            }
            if (0..nl).filter(|&c| c != a && c != b).all(|c| side[a][c] == side[b][c]) {
                face_of[b] = g;
                members.push(b);
            }
        }
        groups.push(members);
    }
    let mut faces = Vec::with_capacity(groups.len());
    let mut keys = Vec::with_capacity(groups.len());
    for members in groups {
        let mut poly = SphericalPolygon { sphere_id, sphere: *sphere, loops: Vec::new() };
        let mut fk = Vec::new();
        for l in members {
            poly.loops.push(loops[l].iter().map(|&a| BoundaryArc { arc: arcs[a].0, forward: arcs[a].1, edge: None }).collect());
            fk.push(loops[l].iter().map(|&a| arcs[a].2).collect());
        }
        faces.push(poly);
        keys.push(fk);
    }
    Ok(SphereClip { faces, keys })
}

/// Connected components of the part of the sphere outside all neighbor balls.
pub fn face_clip(sphere_id: usize, sphere: &Sphere, neighbors: &[Neighbor], tol: f64) -> Result<Vec<SphericalPolygon>> {
    Ok(clip_sphere(sphere_id, sphere, neighbors, tol)?.faces)
}

/// Neighbors of `sphere_id` among `spheres` given candidate ids.
pub fn neighbors_of(
    sphere_id: usize,
    spheres: &[Sphere],
    candidates: &[usize],
    tol: f64,
) -> std::result::Result<Vec<Neighbor>, Violation> {
    let mut out = Vec::new();
    for &j in candidates {
        if j == sphere_id {
            continue;
        }
        match IntersectionCircle::between(sphere_id, &spheres[sphere_id], j, &spheres[j], tol) {
            Ok(Some(circle)) => out.push(Neighbor { id: j, sphere: spheres[j], circle }),
            Ok(None) => {}
            Err(_) => return Err(Violation::new(ViolationKind::RadiusCoincidence, vec![sphere_id, j])),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn spheres(c: &[[f64; 3]]) -> Vec<Sphere> {
        c.iter().map(|p| Sphere::new(Vec3::new(p[0], p[1], p[2]), 1.0).unwrap()).collect()
    }

    fn clip(sp: &[Sphere], i: usize) -> Vec<SphericalPolygon> {
        let ids: Vec<usize> = (0..sp.len()).collect();
        let nb = neighbors_of(i, sp, &ids, 1e-9).unwrap();
        face_clip(i, &sp[i], &nb, 1e-9).unwrap()
    }

    #[test]
    fn isolated_sphere_is_full() {
        let sp = spheres(&[[0.0, 0.0, 0.0]]);
        let f = clip(&sp, 0);
        assert_eq!(f.len(), 1);
        assert!(f[0].is_full_sphere());
    }

    #[test]
    fn single_neighbor_leaves_a_cap() {
        let sp = spheres(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let f = clip(&sp, 0);
        assert_eq!(f.len(), 1);
        assert_relative_eq!(f[0].area(), 3.0 * PI, epsilon = 1e-12);
        assert!(f[0].contains_direction(&(-Vec3::x())));
        assert!(!f[0].contains_direction(&Vec3::x()));
        let g = clip(&sp, 1);
        assert_relative_eq!(g[0].area(), 3.0 * PI, epsilon = 1e-12);
        assert!(g[0].contains_direction(&Vec3::x()));
    }

    #[test]
    fn covered_sphere_is_empty() {
        let mut c = vec![[0.0, 0.0, 0.0]];
        for d in [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]] {
            c.push([0.9 * d[0], 0.9 * d[1], 0.9 * d[2]]);
        }
        let sp = spheres(&c);
        assert!(clip(&sp, 0).is_empty());
    }

    #[test]
    fn middle_of_a_row_is_an_annulus() {
        let sp = spheres(&[[-1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let f = clip(&sp, 1);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].loops.len(), 2);
        // Band between the planes x = ±1/2.
        assert_relative_eq!(f[0].area(), 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn separated_bands_are_two_faces() {
        // Two neighbors close together leave an annular band between caps when
        // their caps overlap; opposite far caps leave one face. Here two caps
        // at opposite poles plus a ring of neighbors splits the sphere.
        let mut c = vec![[0.0, 0.0, 0.0]];
        let n = 12;
        for k in 0..n {
            let t = TAU * k as f64 / n as f64;
            c.push([1.2 * t.cos(), 1.2 * t.sin(), 0.0]);
        }
        let sp = spheres(&c);
        let f = clip(&sp, 0);
        assert_eq!(f.len(), 2);
        for face in &f {
            assert_eq!(face.loops.len(), 1);
        }
        assert_relative_eq!(f[0].area(), f[1].area(), max_relative = 1e-9);
    }
}
