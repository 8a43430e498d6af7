use std::f64::consts::TAU;
use std::sync::OnceLock;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{wrap_angle, IntersectionCircle, Vec3};

/// An arc of an intersection circle, counterclockwise about the circle axis
/// from `start_angle` through `beta` radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub circle: IntersectionCircle,
    pub start_angle: f64,
    pub end_angle: f64,
    pub beta: f64,
}

impl Arc {
    pub fn new(circle: IntersectionCircle, start_angle: f64, beta: f64) -> Self {
        debug_assert!(beta > 0.0 && beta <= TAU + 1e-12);
        let start_angle = wrap_angle(start_angle);
        Self { circle, start_angle, end_angle: wrap_angle(start_angle + beta), beta }
    }

    pub fn full(circle: IntersectionCircle) -> Self {
        Self { circle, start_angle: 0.0, end_angle: 0.0, beta: TAU }
    }

    pub fn is_full_circle(&self) -> bool {
        self.beta >= TAU
    }

    pub fn start_point(&self) -> Vec3 {
        self.circle.point_at(self.start_angle)
    }

    pub fn end_point(&self) -> Vec3 {
        self.circle.point_at(self.start_angle + self.beta)
    }

    pub fn point_at_fraction(&self, t: f64) -> Vec3 {
        self.circle.point_at(self.start_angle + t * self.beta)
    }

    pub fn length(&self) -> f64 {
        self.circle.radius * self.beta
    }

    /// The arc as seen on the unit sphere of radius `r` around `sphere_center`,
    /// traversed forward (counterclockwise about the axis) or reversed.
    pub fn on_sphere(&self, sphere_center: &Vec3, r: f64, forward: bool) -> SphereArc {
        let c = (self.circle.center - sphere_center).dot(&self.circle.axis) / r;
        let s = self.circle.radius / r;
        let (theta0, dtheta) = if forward {
            (self.start_angle, self.beta)
        } else {
            (self.start_angle + self.beta, -self.beta)
        };
        SphereArc {
            k: self.circle.axis,
            x: self.circle.basis_x,
            y: self.circle.basis_y,
            c,
            s,
            theta0,
            dtheta,
        }
    }
}

/// A circular arc on the unit sphere, `u(θ) = c·k + s·(cos θ·x + sin θ·y)`,
/// with `(x, y, k)` a right-handed orthonormal frame and `c² + s² = 1`.
/// The arc runs from `theta0` to `theta0 + dtheta`; `dtheta` may be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereArc {
    pub k: Vec3,
    pub x: Vec3,
    pub y: Vec3,
    pub c: f64,
    pub s: f64,
    pub theta0: f64,
    pub dtheta: f64,
}

impl SphereArc {
    /// Minor great-circle arc from unit vector `a` to unit vector `b`.
    pub fn great(a: &Vec3, b: &Vec3) -> Self {
        let n = a.cross(b);
        let k = n.normalize();
        let y = k.cross(a);
        let angle = n.norm().atan2(a.dot(b));
        Self { k, x: *a, y, c: 0.0, s: 1.0, theta0: 0.0, dtheta: angle }
    }

    #[inline]
    pub fn point_at_angle(&self, theta: f64) -> Vec3 {
        let (sn, cs) = theta.sin_cos();
        self.c * self.k + self.s * (cs * self.x + sn * self.y)
    }

    #[inline]
    pub fn point(&self, t: f64) -> Vec3 {
        self.point_at_angle(self.theta0 + t * self.dtheta)
    }

    pub fn start(&self) -> Vec3 {
        self.point(0.0)
    }

    pub fn end(&self) -> Vec3 {
        self.point(1.0)
    }

    pub fn midpoint(&self) -> Vec3 {
        self.point(0.5)
    }

    /// Derivative of the position with respect to θ, oriented along travel.
    #[inline]
    pub fn velocity_at_angle(&self, theta: f64) -> Vec3 {
        let (sn, cs) = theta.sin_cos();
        let v = self.s * (-sn * self.x + cs * self.y);
        if self.dtheta < 0.0 {
            -v
        } else {
            v
        }
    }

    pub fn tangent_start(&self) -> Vec3 {
        self.velocity_at_angle(self.theta0).normalize()
    }

    pub fn tangent_end(&self) -> Vec3 {
        self.velocity_at_angle(self.theta0 + self.dtheta).normalize()
    }

    pub fn length(&self) -> f64 {
        self.s * self.dtheta.abs()
    }

    /// Sub-arc between fractions `t0 < t1` of this arc.
    pub fn sub(&self, t0: f64, t1: f64) -> Self {
        Self { theta0: self.theta0 + t0 * self.dtheta, dtheta: (t1 - t0) * self.dtheta, ..*self }
    }

    /// Fraction along the arc of the point of its circle at angle `theta`, if
    /// the point lies on the arc.
    pub fn fraction_of_angle(&self, theta: f64) -> Option<f64> {
        let span = self.dtheta.abs();
        let delta = if self.dtheta >= 0.0 { theta - self.theta0 } else { self.theta0 - theta };
        let delta = delta.rem_euclid(TAU);
        if delta <= span {
            Some(delta / span)
        } else if TAU - delta < 1e-15 {
            Some(0.0)
        } else {
            None
        }
    }

    pub fn angle_of(&self, u: &Vec3) -> f64 {
        u.dot(&self.y).atan2(u.dot(&self.x))
    }

    /// Integral of geodesic curvature (relative to the left side) along the arc.
    pub fn geodesic_curvature_integral(&self) -> f64 {
        self.c * self.dtheta
    }

    /// `½ ∫ u × du`; summed over a closed oriented boundary this is `∫ u dA`.
    pub fn vector_area(&self) -> Vec3 {
        let t0 = self.theta0;
        let t1 = self.theta0 + self.dtheta;
        let w_int = (t1.sin() - t0.sin()) * self.x - (t1.cos() - t0.cos()) * self.y;
        0.5 * (self.s * self.s * self.dtheta * self.k - self.c * self.s * w_int)
    }

    /// `∮ (ν uᵀ + u νᵀ) ds` contribution, `ν` the outward conormal. For a
    /// region `R` on the unit sphere, `∫_R u uᵀ dA = (2·A·Id − M) / 6` where `M`
    /// sums this quantity over the boundary of `R`.
    pub fn conormal_moment(&self) -> Matrix3<f64> {
        let t0 = self.theta0;
        let t1 = self.theta0 + self.dtheta;
        let (c, s) = (self.c, self.s);
        let w_int = (t1.sin() - t0.sin()) * self.x - (t1.cos() - t0.cos()) * self.y;
        let cc = |t: f64| 0.5 * t + 0.25 * (2.0 * t).sin();
        let ss = |t: f64| 0.5 * t - 0.25 * (2.0 * t).sin();
        let cs = |t: f64| 0.5 * t.sin() * t.sin();
        let xx = self.x * self.x.transpose();
        let yy = self.y * self.y.transpose();
        let xy = self.x * self.y.transpose() + self.y * self.x.transpose();
        let ww = (cc(t1) - cc(t0)) * xx + (ss(t1) - ss(t0)) * yy + (cs(t1) - cs(t0)) * xy;
        let kk = self.k * self.k.transpose();
        let wk = w_int * self.k.transpose() + self.k * w_int.transpose();
        s * ((c * c - s * s) * wk + 2.0 * c * s * (ww - self.dtheta * kk))
    }

    /// `∫ (1 − cos ψ) dφ` in polar coordinates about `pole`. Summed over a
    /// closed boundary of a region not containing `−pole` this is its area.
    pub fn polar_area_integral(&self, pole: &Vec3) -> f64 {
        let pieces = ((self.dtheta.abs() / 0.5).ceil() as usize).max(1);
        let step = self.dtheta / pieces as f64;
        let gl = gauss_legendre_16();
        let mut total = 0.0;
        for p in 0..pieces {
            let a = self.theta0 + p as f64 * step;
            let half = 0.5 * step;
            let mid = a + half;
            let mut acc = 0.0;
            for &(node, weight) in gl {
                let theta = mid + half * node;
                let u = self.point_at_angle(theta);
                let (sn, cs) = theta.sin_cos();
                let du = self.s * (-sn * self.x + cs * self.y);
                acc += weight * pole.dot(&u.cross(&du)) / (1.0 + u.dot(pole));
            }
            total += acc * half;
        }
        total
    }

    /// Bounding cap (center direction, angular radius) of the arc.
    pub fn bounding_cap(&self) -> (Vec3, f64) {
        let m = self.midpoint();
        let half = 0.5 * self.dtheta.abs();
        if half >= std::f64::consts::FRAC_PI_2 {
            // The extremal points may not be the endpoints.
            let rho = self.s.clamp(-1.0, 1.0).asin();
            let center = if self.c >= 0.0 { self.k } else { -self.k };
            return (center, rho + 1e-12);
        }
        let chord = 2.0 * self.s * (0.5 * half).sin();
        (m, 2.0 * (0.5 * chord).min(1.0).asin() + 1e-12)
    }
}

/// Parameters (fractions in `[0, 1]`) where arc `a` meets the circle carrying `b`,
/// restricted to points that also lie on arc `b`.
pub fn arc_crossings(a: &SphereArc, b: &SphereArc) -> Vec<f64> {
    // Point of a's circle: c_a k_a + s_a (cos θ x_a + sin θ y_a); plane of b: k_b·u = c_b.
    let p = a.s * b.k.dot(&a.x);
    let q = a.s * b.k.dot(&a.y);
    let rhs = b.c - a.c * b.k.dot(&a.k);
    let rr = p.hypot(q);
    if rr < 1e-15 || rhs.abs() >= rr {
        return Vec::new();
    }
    let phi = q.atan2(p);
    let delta = (rhs / rr).acos();
    let mut out = Vec::with_capacity(2);
    for theta in [phi + delta, phi - delta] {
        if let Some(t) = a.fraction_of_angle(theta) {
            let u = a.point_at_angle(theta);
            if b.fraction_of_angle(b.angle_of(&u)).is_some() {
                out.push(t);
            }
        }
    }
    out
}

/// Sixteen-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre_16() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}
