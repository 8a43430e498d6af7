//! Combinatorial boundary of a union of equal balls.

mod clip;
mod general_position;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use clip::{clip_sphere, face_clip, neighbors_of, ArcKey, Neighbor, SphereClip, VertexKey};
pub use general_position::{check_general_position, GeneralPositionReport, Violation, ViolationKind};
pub(crate) use general_position::{circumcircle, circumsphere};

use crate::cloud::PointCloud;
use crate::error::{CurvError, Result};
use crate::geometry::{triple_intersection_points, Arc, Sphere, SphericalPolygon, Vec3, DEFAULT_TOLERANCE};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Face {
    pub polygon: SphericalPolygon,
    pub component: usize,
    pub area: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Edge {
    pub arc: Arc,
    /// Parent spheres, lower id first.
    pub spheres: (usize, usize),
    /// Incident face on each parent sphere, in the order of `spheres`.
    pub faces: (usize, usize),
    /// Vertices at the start and end of the arc (counterclockwise about the
    /// circle axis); `None` for a full circle.
    pub vertices: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vertex {
    pub position: Vec3,
    pub spheres: [usize; 3],
    pub side: i8,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Component {
    pub faces: Vec<usize>,
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
    pub euler_characteristic: i64,
    pub area: f64,
    /// Signed volume enclosed by the component with the outward orientation;
    /// negative for a cavity.
    pub enclosed_volume: f64,
    pub cavity: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OffsetBoundary {
    pub r: f64,
    pub tolerance: f64,
    pub spheres: Vec<Sphere>,
    pub faces: Vec<Face>,
    pub edges: Vec<Edge>,
    pub vertices: Vec<Vertex>,
    pub components: Vec<Component>,
}

impl OffsetBoundary {
    /// `V − E + F` with raw cell counts.
    pub fn cell_counts(&self) -> (usize, usize, usize) {
        (self.vertices.len(), self.edges.len(), self.faces.len())
    }

    /// Euler characteristic of the whole boundary surface.
    pub fn euler_characteristic(&self) -> i64 {
        self.components.iter().map(|c| c.euler_characteristic).sum()
    }

    pub fn total_area(&self) -> f64 {
        self.faces.iter().map(|f| f.area).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Sphere ids that carry at least one face.
    pub fn visible_spheres(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.faces.iter().map(|f| f.polygon.sphere_id).collect();
        ids.dedup();
        ids
    }
}

/// Boundary of the union of balls of radius `r` around the cloud, with the
/// default tolerance.
pub fn build_boundary(cloud: &PointCloud, r: f64) -> Result<OffsetBoundary> {
    build_boundary_with_tolerance(cloud, r, DEFAULT_TOLERANCE)
}

pub fn build_boundary_with_tolerance(cloud: &PointCloud, r: f64, tol: f64) -> Result<OffsetBoundary> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(CurvError::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    if !(tol > 0.0) {
        return Err(CurvError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    if cloud.is_empty() {
        return Err(CurvError::EmptyBoundary);
    }
    let index = if (cloud.cell_size() - 2.0 * r).abs() > 1e-12 * r { cloud.reindexed(r) } else { cloud.clone() };
    let spheres: Vec<Sphere> = cloud.points().iter().map(|p| Sphere { center: *p, radius: r }).collect();
    let clips: Vec<Result<SphereClip>> = (0..spheres.len())
        .into_par_iter()
        .map(|i| {
            let cand = index.within(&spheres[i].center, 2.0 * r + 2.0 * tol);
            let nb = neighbors_of(i, &spheres, &cand, tol)
                .map_err(|v| CurvError::GeneralPosition(GeneralPositionReport::from_violations(vec![v])))?;
            clip_sphere(i, &spheres[i], &nb, tol)
        })
        .collect();
    let mut violations = Vec::new();
    let mut ok = Vec::with_capacity(clips.len());
    let mut first_err = None;
    for c in clips {
        match c {
            Ok(c) => ok.push(c),
            Err(CurvError::GeneralPosition(rep)) => violations.extend(rep.violations),
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    if !violations.is_empty() {
        return Err(CurvError::GeneralPosition(GeneralPositionReport::from_violations(violations)));
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    stitch(spheres, ok, r, tol)
}

fn stitch(spheres: Vec<Sphere>, clips: Vec<SphereClip>, r: f64, tol: f64) -> Result<OffsetBoundary> {
    let mut faces = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut edge_of: HashMap<ArcKey, usize> = HashMap::new();
    let mut vertex_of: HashMap<VertexKey, usize> = HashMap::new();

    let mut vertex_id = |key: VertexKey, vertices: &mut Vec<Vertex>| -> Result<usize> {
        if let Some(&v) = vertex_of.get(&key) {
            return Ok(v);
        }
        let [a, b, c] = key.spheres;
        let pts = triple_intersection_points(&spheres[a], &spheres[b], &spheres[c], tol)?;
        let centers = [spheres[a].center, spheres[b].center, spheres[c].center];
        let position = pts
            .into_iter()
            .find(|p| VertexKey::of(p, key.spheres, centers).side == key.side)
            .ok_or_else(|| CurvError::Internal(format!("vertex {key:?} has no matching triple point")))?;
        vertices.push(Vertex { position, spheres: key.spheres, side: key.side, edges: Vec::new() });
        vertex_of.insert(key, vertices.len() - 1);
        Ok(vertices.len() - 1)
    };

    for (sphere_id, clip) in clips.into_iter().enumerate() {
        for (mut poly, keys) in clip.faces.into_iter().zip(clip.keys) {
            let face_id = faces.len();
            for (lp, lk) in poly.loops.iter_mut().zip(&keys) {
                for (b, key) in lp.iter_mut().zip(lk) {
                    let low_side = sphere_id == key.pair.0;
                    let e = match edge_of.get(key) {
                        Some(&e) => e,
                        None => {
                            let vs = match (key.start, key.end) {
                                (Some(s), Some(t)) => Some((vertex_id(s, &mut vertices)?, vertex_id(t, &mut vertices)?)),
                                (None, None) => None,
                                _ => return Err(CurvError::Internal("arc with a single endpoint".into())),
                            };
                            edges.push(Edge { arc: b.arc, spheres: key.pair, faces: (usize::MAX, usize::MAX), vertices: vs });
                            edge_of.insert(*key, edges.len() - 1);
                            edges.len() - 1
                        }
                    };
                    let slot = if low_side { &mut edges[e].faces.0 } else { &mut edges[e].faces.1 };
                    if *slot != usize::MAX {
                        return Err(CurvError::Internal(format!("edge {key:?} seen twice from one side")));
                    }
                    *slot = face_id;
                    b.edge = Some(e);
                }
            }
            let area = poly.area();
            faces.push(Face { polygon: poly, component: usize::MAX, area });
        }
    }
    for (e, edge) in edges.iter().enumerate() {
        if edge.faces.0 == usize::MAX || edge.faces.1 == usize::MAX {
            return Err(CurvError::Internal(format!("edge {e} between spheres {:?} has one face", edge.spheres)));
        }
        if let Some((s, t)) = edge.vertices {
            vertices[s].edges.push(e);
            vertices[t].edges.push(e);
        }
    }
    for (v, vert) in vertices.iter().enumerate() {
        if vert.edges.len() != 3 {
            return Err(CurvError::Internal(format!("vertex {v} has {} incident edge ends", vert.edges.len())));
        }
    }

    // Connected components over shared edges.
    let mut parent: Vec<usize> = (0..faces.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in &edges {
        let (a, b) = (find(&mut parent, e.faces.0), find(&mut parent, e.faces.1));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut label: HashMap<usize, usize> = HashMap::new();
    let mut components: Vec<Component> = Vec::new();
    for f in 0..faces.len() {
        let root = find(&mut parent, f);
        let c = *label.entry(root).or_insert_with(|| {
            components.push(Component {
                faces: Vec::new(),
                edges: Vec::new(),
                vertices: Vec::new(),
                euler_characteristic: 0,
                area: 0.0,
                enclosed_volume: 0.0,
                cavity: false,
            });
            components.len() - 1
        });
        faces[f].component = c;
        components[c].faces.push(f);
    }
    for (e, edge) in edges.iter().enumerate() {
        components[faces[edge.faces.0].component].edges.push(e);
    }
    for (v, vert) in vertices.iter().enumerate() {
        components[faces[edges[vert.edges[0]].faces.0].component].vertices.push(v);
    }
    for (ci, comp) in components.iter_mut().enumerate() {
        let full_circles = comp.edges.iter().filter(|&&e| edges[e].vertices.is_none()).count() as i64;
        let face_chi: i64 = comp.faces.iter().map(|&f| 2 - faces[f].polygon.loops.len() as i64).sum();
        comp.euler_characteristic = comp.vertices.len() as i64 + full_circles - comp.edges.len() as i64 + face_chi;
        if comp.euler_characteristic % 2 != 0 {
            return Err(CurvError::Internal(format!(
                "component {ci} has odd Euler characteristic {}",
                comp.euler_characteristic
            )));
        }
        let mut vol = 0.0;
        for &f in &comp.faces {
            let poly = &faces[f].polygon;
            let c = poly.sphere.center;
            let rr = poly.sphere.radius;
            vol += c.dot(&poly.unit_vector_area()) * rr * rr + rr * rr * rr * poly.unit_area();
            comp.area += faces[f].area;
        }
        comp.enclosed_volume = vol / 3.0;
        comp.cavity = comp.enclosed_volume < 0.0;
    }
    Ok(OffsetBoundary { r, tolerance: tol, spheres, faces, edges, vertices, components })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(pts.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect(), 1e-9).unwrap()
    }

    #[test]
    fn single_ball() {
        let b = build_boundary(&cloud(&[[0.0, 0.0, 0.0]]), 1.0).unwrap();
        assert_eq!(b.cell_counts(), (0, 0, 1));
        assert_eq!(b.euler_characteristic(), 2);
    }

    #[test]
    fn two_ball_lens() {
        let b = build_boundary(&cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]), 1.0).unwrap();
        assert_eq!(b.cell_counts(), (0, 1, 2));
        assert_eq!(b.euler_characteristic(), 2);
        assert!(b.edges[0].vertices.is_none());
        assert_eq!(b.edges[0].arc.beta, std::f64::consts::TAU);
    }

    #[test]
    fn equilateral_triple() {
        let h = 3f64.sqrt() / 2.0;
        let b = build_boundary(&cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, h, 0.0]]), 1.0).unwrap();
        assert_eq!(b.cell_counts(), (2, 3, 3));
        assert_eq!(b.euler_characteristic(), 2);
        assert_eq!(b.components.len(), 1);
        assert!(!b.components[0].cavity);
    }

    #[test]
    fn tangent_pair_is_rejected() {
        let err = build_boundary(&cloud(&[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]), 1.0).unwrap_err();
        match err {
            CurvError::GeneralPosition(rep) => {
                assert_eq!(rep.violations[0].kind, ViolationKind::RadiusCoincidence);
                assert_eq!(rep.violations[0].witnesses, vec![0, 1]);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn disjoint_balls_are_separate_components() {
        let b = build_boundary(&cloud(&[[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]]), 1.0).unwrap();
        assert_eq!(b.components.len(), 2);
        assert_eq!(b.euler_characteristic(), 4);
        let v = 4.0 / 3.0 * std::f64::consts::PI;
        for c in &b.components {
            assert!((c.enclosed_volume - v).abs() < 1e-12);
        }
    }
}
