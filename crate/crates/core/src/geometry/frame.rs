use serde::{Deserialize, Serialize};

use super::{Mat3, Vec3};

/// Right-handed orthonormal frame with an origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame2B {
    pub origin: Vec3,
    pub i: Vec3,
    pub j: Vec3,
    pub k: Vec3,
}

impl Frame2B {
    /// Frame with `k` along `axis` and `i` along the part of `toward`
    /// orthogonal to it; `j = k × i`.
    pub fn new(origin: Vec3, toward: Vec3, axis: Vec3) -> Self {
        let k = axis.normalize();
        let i = (toward - k * k.dot(&toward)).normalize();
        let j = k.cross(&i);
        Self { origin, i, j, k }
    }

    /// Columns `i, j, k`: maps frame coordinates to world coordinates.
    pub fn rotation(&self) -> Mat3 {
        Mat3::from_columns(&[self.i, self.j, self.k])
    }

    /// Expresses a bilinear form given in frame coordinates in world coordinates.
    pub fn to_world(&self, m: &Mat3) -> Mat3 {
        let q = self.rotation();
        q * m * q.transpose()
    }

    pub fn is_orthonormal(&self, tol: f64) -> bool {
        let q = self.rotation();
        (q.transpose() * q - Mat3::identity()).abs().max() <= tol && (q.determinant() - 1.0).abs() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_orthonormal() {
        let f = Frame2B::new(Vec3::zeros(), Vec3::new(1.0, 2.0, 0.3), Vec3::new(0.2, -0.1, 1.0));
        assert!(f.is_orthonormal(1e-12));
        let m = Mat3::from_diagonal(&Vec3::new(1.0, 0.0, 0.0));
        let w = f.to_world(&m);
        assert!((w - f.i * f.i.transpose()).abs().max() < 1e-15);
    }
}
