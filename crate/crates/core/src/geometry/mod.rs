//! Spheres, intersection circles, arcs and spherical polygons.

mod arc;
mod frame;
mod sphere;
mod spherical;

pub use arc::{arc_crossings, gauss_legendre, gauss_legendre_16, Arc, SphereArc};
pub use frame::Frame2B;
pub use sphere::{sphere_sphere_circle, triple_intersection_points, IntersectionCircle, Sphere};
pub use spherical::{
    loop_area, loop_contains, PreparedLoop, pole_winding, spherical_polygon_area, spherical_triangle_area,
    turning_angle, BoundaryArc, SphericalPolygon,
};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Default absolute incidence tolerance, in model units.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// A unit vector orthogonal to the unit vector `v`, chosen deterministically.
pub fn any_perpendicular(v: &Vec3) -> Vec3 {
    let a = v.abs();
    let e = if a.x <= a.y && a.x <= a.z {
        Vec3::x()
    } else if a.y <= a.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    (e - v * v.dot(&e)).normalize()
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(std::f64::consts::TAU);
    if w >= std::f64::consts::TAU {
        0.0
    } else {
        w
    }
}
