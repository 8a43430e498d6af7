//! Mean, Gaussian and anisotropic curvature measures of the offset boundary.

mod cells;
mod kernel;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cells::{
    edge_half_angle, edge_mass, edge_measures, face_mass, face_measures, face_tessellation, vertex_cone_area,
    vertex_measures,
    Contribution,
};
pub use kernel::LipschitzKernel;

use crate::boundary::OffsetBoundary;
use crate::cloud::PointCloud;
use crate::error::{CurvError, Result};
use crate::geometry::{Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    PhiH,
    PhiG,
    HBar,
    HTilde,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 4] = [Self::PhiH, Self::PhiG, Self::HBar, Self::HTilde];
}

impl std::str::FromStr for MeasureKind {
    type Err = CurvError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi_h" | "H" | "mean" => Ok(Self::PhiH),
            "phi_g" | "G" | "gauss" | "gaussian" => Ok(Self::PhiG),
            "h_bar" => Ok(Self::HBar),
            "h_tilde" => Ok(Self::HTilde),
            _ => Err(CurvError::InvalidParameter(format!("unknown measure kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum CellId {
    Face(usize),
    Edge(usize),
    Vertex(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellContribution {
    pub cell: CellId,
    pub contribution: Contribution,
    /// Normal-cycle mass of the cell.
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentMeasures {
    pub component: usize,
    pub cavity: bool,
    pub euler_characteristic: i64,
    pub phi_h: f64,
    pub phi_g: f64,
    pub h_bar: Mat3,
    pub h_tilde: Mat3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub phi_h: f64,
    pub phi_g: f64,
    pub h_bar: Mat3,
    pub h_tilde: Mat3,
    pub eta: f64,
    pub lipschitz_constant: f64,
    /// Normal-cycle mass summed over the visited cells.
    pub mass_bound: f64,
    pub error_bound_h: f64,
    pub error_bound_g: f64,
    pub components: Vec<ComponentMeasures>,
    /// Visited cells in cell order.
    pub per_cell: Vec<CellContribution>,
}

impl CurvatureReport {
    pub fn totals(&self) -> Contribution {
        Contribution { phi_h: self.phi_h, phi_g: self.phi_g, h_bar: self.h_bar, h_tilde: self.h_tilde }
    }

    pub fn value(&self, kind: MeasureKind) -> serde_json::Value {
        let m = |m: &Mat3| serde_json::json!((0..3).map(|i| (0..3).map(|j| m[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>());
        match kind {
            MeasureKind::PhiH => serde_json::json!(self.phi_h),
            MeasureKind::PhiG => serde_json::json!(self.phi_g),
            MeasureKind::HBar => m(&self.h_bar),
            MeasureKind::HTilde => m(&self.h_tilde),
        }
    }
}

/// Default subdivision diameter for radius `r`.
pub fn default_eta(r: f64) -> f64 {
    r / 50.0
}

fn cell_component(b: &OffsetBoundary, cell: CellId) -> usize {
    match cell {
        CellId::Face(f) => b.faces[f].component,
        CellId::Edge(e) => b.faces[b.edges[e].faces.0].component,
        CellId::Vertex(v) => b.faces[b.edges[b.vertices[v].edges[0]].faces.0].component,
    }
}

/// Cells whose bounding ball meets the support of `f` inflated by `eta`.
fn visited_cells(b: &OffsetBoundary, f: &LipschitzKernel, eta: f64, among: Option<&[CellId]>) -> Vec<CellId> {
    let touches = |cell: CellId| match cell {
        CellId::Face(i) => {
            let s = &b.faces[i].polygon.sphere;
            f.may_touch(&s.center, s.radius + eta)
        }
        CellId::Edge(i) => {
            let c = &b.edges[i].arc.circle;
            f.may_touch(&c.center, c.radius + eta)
        }
        CellId::Vertex(i) => f.may_touch(&b.vertices[i].position, eta),
    };
    match among {
        Some(cells) => cells.iter().copied().filter(|&c| touches(c)).collect(),
        None => (0..b.faces.len())
            .map(CellId::Face)
            .chain((0..b.edges.len()).map(CellId::Edge))
            .chain((0..b.vertices.len()).map(CellId::Vertex))
            .filter(|&c| touches(c))
            .collect(),
    }
}

fn cell_measure(b: &OffsetBoundary, cell: CellId, f: &LipschitzKernel, eta: f64) -> Result<CellContribution> {
    let (contribution, mass) = match cell {
        CellId::Face(i) => {
            let poly = &b.faces[i].polygon;
            (face_measures(poly, f, eta)?, face_mass(poly))
        }
        CellId::Edge(i) => {
            let e = &b.edges[i];
            let s = (&b.spheres[e.spheres.0], &b.spheres[e.spheres.1]);
            (edge_measures(&e.arc, s, f, eta)?, edge_mass(&e.arc, edge_half_angle(s.0, s.1)))
        }
        CellId::Vertex(i) => {
            let v = &b.vertices[i];
            let [x, y, z] = v.spheres.map(|k| &b.spheres[k]);
            (vertex_measures(&v.position, (x, y, z), f)?, vertex_cone_area(&v.position, (x, y, z))?)
        }
    };
    Ok(CellContribution { cell, contribution, mass })
}

fn assemble(b: &OffsetBoundary, f: &LipschitzKernel, eta: f64, cells: &[CellId]) -> Result<CurvatureReport> {
    let per_cell: Vec<CellContribution> =
        cells.par_iter().map(|&c| cell_measure(b, c, f, eta)).collect::<Result<Vec<_>>>()?;
    let mut total = Contribution::zero();
    let mut mass = 0.0;
    let mut comps: Vec<Contribution> = vec![Contribution::zero(); b.components.len()];
    for c in &per_cell {
        total += c.contribution;
        mass += c.mass;
        comps[cell_component(b, c.cell)] += c.contribution;
    }
    let lip = f.lipschitz_constant();
    let bound = lip * mass * eta;
    Ok(CurvatureReport {
        phi_h: total.phi_h,
        phi_g: total.phi_g,
        h_bar: total.h_bar,
        h_tilde: total.h_tilde,
        eta,
        lipschitz_constant: lip,
        mass_bound: mass,
        error_bound_h: bound,
        error_bound_g: bound,
        components: comps
            .into_iter()
            .enumerate()
            .map(|(i, c)| ComponentMeasures {
                component: i,
                cavity: b.components[i].cavity,
                euler_characteristic: b.components[i].euler_characteristic,
                phi_h: c.phi_h,
                phi_g: c.phi_g,
                h_bar: c.h_bar,
                h_tilde: c.h_tilde,
            })
            .collect(),
        per_cell,
    })
}

/// Integrates the four measures of the boundary against `f`.
pub fn eval_measures(boundary: &OffsetBoundary, f: &LipschitzKernel, eta: f64) -> Result<CurvatureReport> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(CurvError::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    let cells = visited_cells(boundary, f, eta, None);
    assemble(boundary, f, eta, &cells)
}

/// Mean and Gaussian measure of a hat kernel of radius `rho` centered at each
/// cloud point, with the default subdivision.
pub fn per_point_curvature(boundary: &OffsetBoundary, cloud: &PointCloud, rho: f64) -> Result<Vec<(f64, f64)>> {
    per_point_curvature_with_eta(boundary, cloud, rho, default_eta(boundary.r))
}

pub fn per_point_curvature_with_eta(
    boundary: &OffsetBoundary,
    cloud: &PointCloud,
    rho: f64,
    eta: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(rho > 0.0) {
        return Err(CurvError::InvalidParameter(format!("kernel radius must be positive, got {rho}")));
    }
    if boundary.is_empty() {
        return Err(CurvError::EmptyBoundary);
    }
    let n = boundary.spheres.len();
    let mut by_sphere: Vec<Vec<CellId>> = vec![Vec::new(); n];
    for (i, f) in boundary.faces.iter().enumerate() {
        by_sphere[f.polygon.sphere_id].push(CellId::Face(i));
    }
    for (i, e) in boundary.edges.iter().enumerate() {
        by_sphere[e.spheres.0].push(CellId::Edge(i));
    }
    for (i, v) in boundary.vertices.iter().enumerate() {
        by_sphere[v.spheres[0]].push(CellId::Vertex(i));
    }
    let centers: Vec<Vec3> = boundary.spheres.iter().map(|s| s.center).collect();
    let index = PointCloud::with_cell_size(centers, rho + boundary.r, 0.0)?;
    let reach = rho + boundary.r + eta;
    cloud
        .points()
        .par_iter()
        .map(|p| {
            let kernel = LipschitzKernel::hat(*p, rho)?;
            let near: BTreeSet<CellId> =
                index.within(p, reach).into_iter().flat_map(|s| by_sphere[s].iter().copied()).collect();
            let near: Vec<CellId> = near.into_iter().collect();
            let cells = visited_cells(boundary, &kernel, eta, Some(&near));
            let rep = assemble(boundary, &kernel, eta, &cells)?;
            Ok((rep.phi_h, rep.phi_g))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::build_boundary;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(pts.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect(), 1e-9).unwrap()
    }

    #[test]
    fn two_ball_gauss_bonnet() {
        let b = build_boundary(&cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]), 1.0).unwrap();
        let rep = eval_measures(&b, &LipschitzKernel::ConstantOne, 0.02).unwrap();
        assert_relative_eq!(rep.phi_g, 4.0 * PI, epsilon = 1e-12);
        let faces: f64 = rep.per_cell.iter().filter(|c| matches!(c.cell, CellId::Face(_))).map(|c| c.contribution.phi_g).sum();
        assert_relative_eq!(faces, 6.0 * PI, epsilon = 1e-12);
        assert_eq!(rep.error_bound_h, 0.0);
    }

    #[test]
    fn equilateral_triple_gauss_bonnet() {
        let h = 3f64.sqrt() / 2.0;
        let b = build_boundary(&cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, h, 0.0]]), 1.0).unwrap();
        let rep = eval_measures(&b, &LipschitzKernel::ConstantOne, 0.02).unwrap();
        assert_relative_eq!(rep.phi_g, 4.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn disjoint_support_gives_zero() {
        let b = build_boundary(&cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]), 1.0).unwrap();
        let k = LipschitzKernel::hat(Vec3::new(10.0, 0.0, 0.0), 1.0).unwrap();
        let rep = eval_measures(&b, &k, 0.05).unwrap();
        assert!(rep.per_cell.is_empty());
        assert_eq!((rep.phi_h, rep.phi_g), (0.0, 0.0));
    }

    #[test]
    fn hat_kernel_on_single_ball_matches_analytic_integral() {
        // ∫ f dA for a hat centered at a point of the unit sphere, radius 0.5.
        let b = build_boundary(&cloud(&[[0.0, 0.0, 0.0]]), 1.0).unwrap();
        let rho = 0.5;
        let k = LipschitzKernel::hat(Vec3::z(), rho).unwrap();
        let rep = eval_measures(&b, &k, 0.01).unwrap();
        // Chord distance t = 2 sin(ψ/2), dA = t dt dφ on the unit sphere.
        let exact = 2.0 * PI * (rho * rho / 2.0 - rho * rho / 3.0);
        assert!((rep.phi_g - exact).abs() <= rep.error_bound_g);
        assert!((rep.phi_g - exact).abs() < 1e-4, "{} vs {exact}", rep.phi_g);
        assert_relative_eq!(rep.phi_h, 2.0 * rep.phi_g, max_relative = 1e-12);
    }
}
