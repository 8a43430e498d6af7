use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clip::voronoi_relevant;

use crate::cloud::PointCloud;
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Coplanar4,
    Cospherical5,
    RadiusCoincidence,
    Tangency,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Sorted point ids.
    pub witnesses: Vec<usize>,
}

impl Violation {
    pub fn new(kind: ViolationKind, mut witnesses: Vec<usize>) -> Self {
        witnesses.sort_unstable();
        Self { kind, witnesses }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralPositionReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl GeneralPositionReport {
    /// Report from a violation list, sorted and deduplicated.
    pub fn from_violations(mut violations: Vec<Violation>) -> Self {
        violations.sort();
        violations.dedup();
        Self { ok: violations.is_empty(), violations }
    }

    pub fn single(kind: ViolationKind, witnesses: Vec<usize>) -> Self {
        Self::from_violations(vec![Violation::new(kind, witnesses)])
    }
}

/// Circumcenter and circumradius of a triangle, `None` when collinear.
pub(crate) fn circumcircle(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<(Vec3, f64)> {
    let u = b - a;
    let v = c - a;
    let n = u.cross(&v);
    let nn = n.norm_squared();
    if nn <= f64::MIN_POSITIVE {
        return None;
    }
    let off = (u.norm_squared() * v.cross(&n) + v.norm_squared() * n.cross(&u)) / (2.0 * nn);
    Some((a + off, off.norm()))
}

/// Circumsphere of a tetrahedron, `None` when flat.
pub(crate) fn circumsphere(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> Option<(Vec3, f64)> {
    let u = b - a;
    let v = c - a;
    let w = d - a;
    let det = u.dot(&v.cross(&w));
    if det.abs() <= f64::MIN_POSITIVE {
        return None;
    }
    let off = (u.norm_squared() * v.cross(&w) + v.norm_squared() * w.cross(&u) + w.norm_squared() * u.cross(&v))
        / (2.0 * det);
    Some((a + off, off.norm()))
}

/// Distance from the point of a quadruple farthest from the plane of the
/// other three, measured against the largest-area face.
fn flatness(p: [&Vec3; 4]) -> f64 {
    let vol6 = (p[1] - p[0]).dot(&(p[2] - p[0]).cross(&(p[3] - p[0]))).abs();
    let faces = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    let area2 = faces
        .iter()
        .map(|f| (p[f[1]] - p[f[0]]).cross(&(p[f[2]] - p[f[0]])).norm())
        .fold(0.0, f64::max);
    if area2 <= 0.0 {
        0.0
    } else {
        vol6 / area2
    }
}

/// Reports general-position violations of the balls of radius `r` around the
/// cloud. Only point subsets that can bound a common feature of the union
/// are examined: each point is paired with the neighbors within `2r` whose
/// bisector touches its Voronoi cell, triples are taken among those whose
/// spheres meet, and the coplanar and cospherical tests apply to quadruples
/// whose balls share a point (circumradius below `r`).
pub fn check_general_position(cloud: &PointCloud, r: f64, tol: f64) -> GeneralPositionReport {
    let pts = cloud.points();
    let n = pts.len();
    let reach = 2.0 * r + 2.0 * tol;
    let neighbors: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let near: Vec<usize> = cloud.within(&pts[i], reach).into_iter().filter(|&j| j != i).collect();
            let centers: Vec<Vec3> = near.iter().map(|&j| pts[j]).collect();
            let mut keep: Vec<usize> = voronoi_relevant(&pts[i], r, &centers).into_iter().map(|k| near[k]).collect();
            keep.sort_unstable();
            keep
        })
        .collect();
    let per_point: Vec<Vec<Violation>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            let ni: Vec<usize> = neighbors[i].iter().copied().filter(|&j| j > i).collect();
            let adjacent = |a: usize, b: usize| neighbors[a].binary_search(&b).is_ok();
            for (a, &j) in ni.iter().enumerate() {
                let d = (pts[j] - pts[i]).norm();
                if (0.5 * d - r).abs() <= tol {
                    out.push(Violation::new(ViolationKind::RadiusCoincidence, vec![i, j]));
                }
                let common: Vec<usize> = ni[a + 1..].iter().copied().filter(|&k| adjacent(j, k)).collect();
                let mut meeting = Vec::new();
                for &k in &common {
                    match circumcircle(&pts[i], &pts[j], &pts[k]) {
                        Some((_, rc)) => {
                            if (rc - r).abs() <= tol {
                                out.push(Violation::new(ViolationKind::RadiusCoincidence, vec![i, j, k]));
                            }
                            if rc < r + tol {
                                meeting.push(k);
                            }
                        }
                        None => out.push(Violation::new(ViolationKind::Coplanar4, vec![i, j, k])),
                    }
                }
                for (b, &k) in meeting.iter().enumerate() {
                    for &l in &meeting[b + 1..] {
                        if !adjacent(k, l) {
                            continue;
                        }
                        let q = [&pts[i], &pts[j], &pts[k], &pts[l]];
                        match circumsphere(q[0], q[1], q[2], q[3]) {
                            Some((center, rs)) if flatness(q) > tol => {
                                if (rs - r).abs() <= tol {
                                    out.push(Violation::new(ViolationKind::RadiusCoincidence, vec![i, j, k, l]));
                                }
                                if rs < r + tol {
                                    for m in cloud.within(&center, rs + tol) {
                                        if m > l && ((pts[m] - center).norm() - rs).abs() <= tol {
                                            out.push(Violation::new(ViolationKind::Cospherical5, vec![i, j, k, l, m]));
                                        }
                                    }
                                }
                            }
                            _ => {
                                // Flat quadruple: its balls share a point when every triple meets.
                                let meets = |x: usize, y: usize, z: usize| {
                                    circumcircle(&pts[x], &pts[y], &pts[z]).is_some_and(|(_, rc)| rc < r + tol)
                                };
                                if meets(i, k, l) && meets(j, k, l) {
                                    out.push(Violation::new(ViolationKind::Coplanar4, vec![i, j, k, l]));
                                }
                            }
                        }
                    }
                }
            }
            out
        })
        .collect();
    GeneralPositionReport::from_violations(per_point.into_iter().flatten().collect())
}
