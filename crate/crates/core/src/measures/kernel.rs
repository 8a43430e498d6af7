use serde::{Deserialize, Serialize};

use crate::error::{CurvError, Result};
use crate::geometry::Vec3;

/// Lipschitz test function with `|f| ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LipschitzKernel {
    ConstantOne,
    /// `max(1 − ‖x − center‖ / radius, 0)`.
    Hat { center: Vec3, radius: f64 },
    /// `clamp(min_k (values_k + lipschitz·‖x − nodes_k‖), −1, 1)`, the
    /// smallest `lipschitz`-Lipschitz extension of the tabulated values.
    Tabulated { nodes: Vec<Vec3>, values: Vec<f64>, lipschitz: f64 },
    /// `Σ weight_k · f_k`, with `Σ |weight_k| ≤ 1`.
    Combination { terms: Vec<(f64, LipschitzKernel)> },
}

impl LipschitzKernel {
    pub fn hat(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(CurvError::InvalidParameter(format!("hat radius must be positive, got {radius}")));
        }
        Ok(Self::Hat { center, radius })
    }

    pub fn tabulated(nodes: Vec<Vec3>, values: Vec<f64>, lipschitz: f64) -> Result<Self> {
        if nodes.len() != values.len() || nodes.is_empty() {
            return Err(CurvError::InvalidParameter("tabulated kernel needs one value per node".into()));
        }
        if !(lipschitz >= 0.0) || values.iter().any(|v| !(v.abs() <= 1.0)) {
            return Err(CurvError::InvalidParameter("tabulated values must lie in [-1, 1]".into()));
        }
        Ok(Self::Tabulated { nodes, values, lipschitz })
    }

    pub fn combination(terms: Vec<(f64, LipschitzKernel)>) -> Result<Self> {
        let total: f64 = terms.iter().map(|(w, _)| w.abs()).sum();
        if total > 1.0 + 1e-12 {
            return Err(CurvError::InvalidParameter(format!("combination weights sum to {total} > 1")));
        }
        Ok(Self::Combination { terms })
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        match self {
            Self::ConstantOne => 1.0,
            Self::Hat { center, radius } => (1.0 - (x - center).norm() / radius).max(0.0),
            Self::Tabulated { nodes, values, lipschitz } => nodes
                .iter()
                .zip(values)
                .map(|(p, v)| v + lipschitz * (x - p).norm())
                .fold(f64::INFINITY, f64::min)
                .clamp(-1.0, 1.0),
            Self::Combination { terms } => terms.iter().map(|(w, k)| w * k.eval(x)).sum(),
        }
    }

    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            Self::ConstantOne => 0.0,
            Self::Hat { radius, .. } => 1.0 / radius,
            Self::Tabulated { lipschitz, .. } => *lipschitz,
            Self::Combination { terms } => terms.iter().map(|(w, k)| w.abs() * k.lipschitz_constant()).sum(),
        }
    }

    /// Radius of the support ball around [`Self::anchor`]; infinite when unbounded.
    pub fn support_radius(&self) -> f64 {
        match self {
            Self::Hat { radius, .. } => *radius,
            Self::Combination { terms } => {
                let Some(a) = self.anchor() else { return f64::INFINITY };
                terms
                    .iter()
                    .map(|(_, k)| match k.anchor() {
                        Some(b) => (a - b).norm() + k.support_radius(),
                        None => f64::INFINITY,
                    })
                    .fold(0.0, f64::max)
            }
            _ => f64::INFINITY,
        }
    }

    /// A point attached to the kernel, used to orient discretizations so that
    /// they move with the data.
    pub fn anchor(&self) -> Option<Vec3> {
        match self {
            Self::Hat { center, .. } => Some(*center),
            Self::Tabulated { nodes, .. } => nodes.first().copied(),
            Self::Combination { terms } => terms.first().and_then(|(_, k)| k.anchor()),
            Self::ConstantOne => None,
        }
    }

    /// The constant value, when the kernel does not vary.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Self::ConstantOne => Some(1.0),
            Self::Combination { terms } => {
                terms.iter().map(|(w, k)| k.constant_value().map(|v| w * v)).sum::<Option<f64>>()
            }
            _ => None,
        }
    }

    /// Whether the support may meet the ball `(center, radius)`.
    pub fn may_touch(&self, center: &Vec3, radius: f64) -> bool {
        match self {
            Self::Combination { terms } => terms.iter().any(|(w, k)| *w != 0.0 && k.may_touch(center, radius)),
            _ => match self.anchor() {
                Some(a) if self.support_radius().is_finite() => (center - a).norm() < radius + self.support_radius(),
                _ => true,
            },
        }
    }

    /// Applies the rigid motion `x ↦ rot·x + t` to the kernel.
    pub fn transformed(&self, rot: &nalgebra::Matrix3<f64>, t: &Vec3) -> Self {
        match self {
            Self::ConstantOne => Self::ConstantOne,
            Self::Hat { center, radius } => Self::Hat { center: rot * center + t, radius: *radius },
            Self::Tabulated { nodes, values, lipschitz } => Self::Tabulated {
                nodes: nodes.iter().map(|p| rot * p + t).collect(),
                values: values.clone(),
                lipschitz: *lipschitz,
            },
            Self::Combination { terms } => {
                Self::Combination { terms: terms.iter().map(|(w, k)| (*w, k.transformed(rot, t))).collect() }
            }
        }
    }
}
