//! Controlled Hausdorff perturbations of reference shapes and empirical
//! scaling of the measure differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::build_boundary;
use crate::cloud::{hausdorff_brute, PointCloud};
use crate::distance::{ray_to_level, sample_critical_function, theorem2_radius_check};
use crate::error::{CurvError, Result};
use crate::geometry::{Vec3, DEFAULT_TOLERANCE};
use crate::measures::{default_eta, eval_measures, CurvatureReport, LipschitzKernel, MeasureKind};

/// Seeds per perturbation size; the median difference is reported.
pub const SEEDS_PER_EPSILON: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceShape {
    /// `samples` evenly spaced points on a segment of the x axis centered at
    /// the origin, plus one point at height `offset` above the middle sample
    /// when `offset > 0`.
    SegmentPlusOutlier { length: f64, samples: usize, offset: f64 },
    /// Uniform sampling of the unit sphere.
    SphereSampling { n: usize },
    /// Uniform sampling of a torus around the z axis.
    TorusSampling { n: usize, r_major: f64, r_minor: f64 },
    /// Uniform sampling of the boundary of `[-1, 1]³` united with a solid torus
    /// of radii 1 and 0.35 centered at `(1.4, 0, 0)`.
    CubeUnionTorus { n: usize },
}

#[derive(Debug, Clone)]
pub struct GeneratedCloud {
    pub cloud: PointCloud,
    /// Largest distance from the sampled surface to the cloud, estimated on
    /// an independent dense sample.
    pub fill_radius: f64,
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm_squared();
        if n > 1e-4 && n <= 1.0 {
            return v / n.sqrt();
        }
    }
}

fn torus_point(rng: &mut ChaCha8Rng, big: f64, small: f64) -> Vec3 {
    loop {
        let u = rng.gen_range(0.0..std::f64::consts::TAU);
        let v = rng.gen_range(0.0..std::f64::consts::TAU);
        // Area density is proportional to the distance from the axis.
        if rng.gen::<f64>() * (big + small) <= big + small * v.cos() {
            let rho = big + small * v.cos();
            return Vec3::new(rho * u.cos(), rho * u.sin(), small * v.sin());
        }
    }
}

const CUT_TORUS_CENTER: [f64; 3] = [1.4, 0.0, 0.0];
const CUT_TORUS_RADII: (f64, f64) = (1.0, 0.35);

fn in_cube(p: &Vec3) -> bool {
    p.iter().all(|c| c.abs() < 1.0)
}

fn in_cut_torus(p: &Vec3) -> bool {
    let q = p - Vec3::from(CUT_TORUS_CENTER);
    let rho = (q.x * q.x + q.y * q.y).sqrt();
    (rho - CUT_TORUS_RADII.0).powi(2) + q.z * q.z < CUT_TORUS_RADII.1.powi(2)
}

impl ReferenceShape {
    fn surface_points(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
        match *self {
            Self::SegmentPlusOutlier { length, .. } => {
                (0..n).map(|_| Vec3::new(rng.gen_range(-0.5..=0.5) * length, 0.0, 0.0)).collect()
            }
            Self::SphereSampling { .. } => (0..n).map(|_| unit_vector(rng)).collect(),
            Self::TorusSampling { r_major, r_minor, .. } => (0..n).map(|_| torus_point(rng, r_major, r_minor)).collect(),
            Self::CubeUnionTorus { .. } => {
                let (big, small) = CUT_TORUS_RADII;
                let cube_area = 24.0;
                let torus_area = 4.0 * std::f64::consts::PI.powi(2) * big * small;
                let mut out = Vec::with_capacity(n);
                while out.len() < n {
                    let p = if rng.gen::<f64>() * (cube_area + torus_area) < cube_area {
                        let axis = rng.gen_range(0..3);
                        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                        let mut p = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                        p[axis] = sign;
                        if in_cut_torus(&p) {
                            continue;
                        }
                        p
                    } else {
                        let p = torus_point(rng, big, small) + Vec3::from(CUT_TORUS_CENTER);
                        if in_cube(&p) {
                            continue;
                        }
                        p
                    };
                    out.push(p);
                }
                out
            }
        }
    }

    fn segment_points(length: f64, samples: usize) -> Vec<Vec3> {
        let n = samples.max(2);
        (0..n).map(|i| Vec3::new(length * (i as f64 / (n - 1) as f64 - 0.5), 0.0, 0.0)).collect()
    }

    /// Deterministic cloud for `seed`.
    pub fn sample(&self, seed: u64) -> Result<GeneratedCloud> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = match *self {
            Self::SegmentPlusOutlier { length, samples, offset } => {
                let mut pts = Self::segment_points(length, samples);
                if offset > 0.0 {
                    pts.push(pts[pts.len() / 2] + Vec3::new(0.0, offset, 0.0));
                }
                pts
            }
            Self::SphereSampling { n } | Self::TorusSampling { n, .. } | Self::CubeUnionTorus { n } => {
                self.surface_points(n, &mut rng)
            }
        };
        let cloud = PointCloud::new(points, DEFAULT_TOLERANCE)?;
        let fill_radius = match *self {
            Self::SegmentPlusOutlier { length, samples, .. } => 0.5 * length / (samples.max(2) - 1) as f64,
            _ => {
                let mut dense_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f111);
                let dense = self.surface_points(8 * cloud.len(), &mut dense_rng);
                dense.par_iter().map(|q| cloud.distance(q)).reduce(|| 0.0, f64::max)
            }
        };
        Ok(GeneratedCloud { cloud, fill_radius })
    }

    /// Point id and unit direction where an outlier is placed by default.
    pub fn outlier_site(&self, cloud: &PointCloud) -> Option<(usize, Vec3)> {
        match self {
            Self::SegmentPlusOutlier { samples, .. } if cloud.len() >= (*samples).max(2) => {
                Some(((*samples).max(2) / 2, Vec3::y()))
            }
            _ => None,
        }
    }

    /// Point of the `r`-offset above the perturbation locus, where a
    /// localized kernel is centered.
    pub fn perturbation_locus(&self, cloud: &PointCloud, r: f64) -> Vec3 {
        match self.outlier_site(cloud) {
            Some((i, dir)) => cloud.point(i) + r * dir,
            None => {
                let (c, _) = cloud.bounding_radius();
                let p = cloud.point(0);
                let out = p - c;
                p + r * if out.norm() > 0.0 { out.normalize() } else { Vec3::z() }
            }
        }
    }

    /// Hat kernel of radius `r` at [`Self::perturbation_locus`].
    pub fn localized_kernel(&self, cloud: &PointCloud, r: f64) -> Result<LipschitzKernel> {
        LipschitzKernel::hat(self.perturbation_locus(cloud, r), r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationMode {
    Jitter,
    OutlierOnOffset,
    DecimateThenJitter,
}

impl std::str::FromStr for PerturbationMode {
    type Err = CurvError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jitter" => Ok(Self::Jitter),
            "outlier_on_offset" | "outlier" => Ok(Self::OutlierOnOffset),
            "decimate_then_jitter" | "decimate" => Ok(Self::DecimateThenJitter),
            _ => Err(CurvError::InvalidParameter(format!("unknown perturbation mode {s:?}"))),
        }
    }
}

fn jitter(points: &[Vec3], radius: f64, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    points.iter().map(|p| p + radius * rng.gen::<f64>().cbrt() * unit_vector(rng)).collect()
}

/// Perturbs `cloud` within Hausdorff distance `epsilon`.
pub fn perturb_cloud(cloud: &PointCloud, epsilon: f64, mode: PerturbationMode, seed: u64) -> Result<PointCloud> {
    perturb_cloud_at(cloud, epsilon, mode, seed, None)
}

/// As [`perturb_cloud`]; `site` fixes the point and direction of an outlier.
pub fn perturb_cloud_at(
    cloud: &PointCloud,
    epsilon: f64,
    mode: PerturbationMode,
    seed: u64,
    site: Option<(usize, Vec3)>,
) -> Result<PointCloud> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(CurvError::InvalidParameter(format!("epsilon must be non-negative, got {epsilon}")));
    }
    if epsilon == 0.0 || cloud.is_empty() {
        return Ok(cloud.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = cloud.points();
    let out = match mode {
        PerturbationMode::Jitter => jitter(pts, epsilon, &mut rng),
        PerturbationMode::OutlierOnOffset => {
            let (i, dir) = match site {
                Some(s) => s,
                None => {
                    let i = rng.gen_range(0..pts.len());
                    let dir = (0..64)
                        .map(|_| unit_vector(&mut rng))
                        .max_by(|a, b| {
                            cloud.distance(&(pts[i] + epsilon * a)).total_cmp(&cloud.distance(&(pts[i] + epsilon * b)))
                        })
                        .expect("candidate directions");
                    (i, dir)
                }
            };
            let mut x = pts[i] + epsilon * dir;
            if (cloud.distance(&x) - epsilon).abs() > 1e-15 * epsilon.max(1.0) {
                x = ray_to_level(cloud, &pts[i], &dir, epsilon);
            }
            // Rounding can leave the point just past the level; step back onto it.
            let mut shrink = f64::EPSILON;
            while cloud.distance(&x) > epsilon {
                x = pts[i] + (x - pts[i]) * (1.0 - shrink);
                shrink *= 2.0;
            }
            let mut v = pts.to_vec();
            v.push(x);
            v
        }
        PerturbationMode::DecimateThenJitter => {
            let half = 0.5 * epsilon;
            let kept = greedy_net(pts, half);
            jitter(&kept, half, &mut rng)
        }
    };
    let verified = hausdorff_brute(pts, &out);
    if verified > epsilon * (1.0 + 1e-12) {
        return Err(CurvError::Internal(format!("perturbation at Hausdorff distance {verified} exceeds {epsilon}")));
    }
    PointCloud::new(out, DEFAULT_TOLERANCE)
}

/// Greedy subset such that every point lies within `radius` of a kept one.
fn greedy_net(pts: &[Vec3], radius: f64) -> Vec<Vec3> {
    let mut kept: Vec<Vec3> = Vec::new();
    let mut index: Option<PointCloud> = None;
    let mut pending: Vec<Vec3> = Vec::new();
    for p in pts {
        let far_from_index = index.as_ref().map_or(true, |c| c.distance(p) > radius);
        if far_from_index && pending.iter().all(|q| (q - p).norm() > radius) {
            kept.push(*p);
            pending.push(*p);
            if pending.len() >= 64 {
                index = PointCloud::with_cell_size(kept.clone(), radius.max(1e-9), 0.0).ok();
                pending.clear();
            }
        }
    }
    kept
}

/// Total-curvature discrepancy of a disk-offset bump of height `epsilon`.
pub fn tightness_oracle(r: f64, epsilon: f64) -> Result<f64> {
    if !(r > 0.0) || !(epsilon >= 0.0) || epsilon >= r {
        return Err(CurvError::Domain(format!("need 0 <= epsilon < r, got epsilon {epsilon}, r {r}")));
    }
    Ok(2.0 * ((r - epsilon) / r).acos())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesStatus {
    Fitted,
    /// Every difference is at the rounding floor.
    TopologicallyPinned,
    /// One or two differences above the floor.
    InsufficientSignal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSeries {
    pub kind: MeasureKind,
    /// Median difference over seeds, per epsilon.
    pub deltas: Vec<f64>,
    pub noise_floor: f64,
    pub usable: usize,
    pub fitted_slope: Option<f64>,
    pub fitted_intercept: Option<f64>,
    pub status: SeriesStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// The largest epsilon satisfies the radius condition for the estimated μ.
    WithinTheorem,
    OutsideTheoremRegime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRun {
    pub shape: ReferenceShape,
    pub mode: PerturbationMode,
    pub r: f64,
    pub eta: f64,
    pub kernel: LipschitzKernel,
    pub seed: u64,
    pub seeds_per_epsilon: usize,
    pub fill_radius: f64,
    /// Sampled, uncertified μ of the reference cloud on `[r/2, r]`.
    pub mu_estimate: f64,
    pub regime: Regime,
    pub epsilons: Vec<f64>,
    pub series: Vec<MeasureSeries>,
    /// Analytic discrepancy and its slope, for the segment construction.
    pub oracle: Option<Vec<f64>>,
    pub oracle_slope: Option<f64>,
}

impl StabilityRun {
    pub fn series(&self, kind: MeasureKind) -> &MeasureSeries {
        self.series.iter().find(|s| s.kind == kind).expect("all kinds are recorded")
    }
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn delta(a: &CurvatureReport, b: &CurvatureReport, kind: MeasureKind) -> f64 {
    match kind {
        MeasureKind::PhiH => (a.phi_h - b.phi_h).abs(),
        MeasureKind::PhiG => (a.phi_g - b.phi_g).abs(),
        MeasureKind::HBar => (a.h_bar - b.h_bar).norm(),
        MeasureKind::HTilde => (a.h_tilde - b.h_tilde).norm(),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn cell_seed(seed: u64, i: usize, s: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((i as u64) << 32 | s as u64)
}

/// Sweeps `epsilons` and fits the exponent of the measure differences.
pub fn run_stability_experiment(
    shape: &ReferenceShape,
    r: f64,
    kernel: &LipschitzKernel,
    epsilons: &[f64],
    mode: PerturbationMode,
    seed: u64,
) -> Result<StabilityRun> {
    run_stability_experiment_with_eta(shape, r, kernel, epsilons, mode, seed, default_eta(r))
}

pub fn run_stability_experiment_with_eta(
    shape: &ReferenceShape,
    r: f64,
    kernel: &LipschitzKernel,
    epsilons: &[f64],
    mode: PerturbationMode,
    seed: u64,
    eta: f64,
) -> Result<StabilityRun> {
    if epsilons.len() < 3 {
        return Err(CurvError::InsufficientSignal(format!(
            "need at least 3 perturbation sizes, got {}",
            epsilons.len()
        )));
    }
    if epsilons.iter().any(|e| !(*e > 0.0)) || epsilons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CurvError::InvalidParameter("epsilons must be positive and strictly increasing".into()));
    }
    if !(r > 0.0) {
        return Err(CurvError::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    let generated = shape.sample(seed)?;
    let base = &generated.cloud;
    let site = shape.outlier_site(base);
    let reference = eval_measures(&build_boundary(base, r)?, kernel, eta)?;

    let chi = sample_critical_function(base, 0.5 * r, r, 4, 32)?;
    let mu_estimate = chi.chi_lower.iter().copied().fold(1.0, f64::min);
    let regime = if mu_estimate > 0.0 && theorem2_radius_check(mu_estimate, r, *epsilons.last().unwrap()) {
        Regime::WithinTheorem
    } else {
        Regime::OutsideTheoremRegime
    };

    let cells: Vec<(usize, usize)> =
        (0..epsilons.len()).flat_map(|i| (0..SEEDS_PER_EPSILON).map(move |s| (i, s))).collect();
    let measured: Vec<[f64; 4]> = cells
        .par_iter()
        .map(|&(i, s)| {
            let k2 = perturb_cloud_at(base, epsilons[i], mode, cell_seed(seed, i, s), site)?;
            let rep = eval_measures(&build_boundary(&k2, r)?, kernel, eta)?;
            Ok(MeasureKind::ALL.map(|k| delta(&reference, &rep, k)))
        })
        .collect::<Result<Vec<_>>>()?;

    let floor = 1e3 * f64::EPSILON * reference.mass_bound.max(1.0);
    let series = MeasureKind::ALL
        .iter()
        .enumerate()
        .map(|(ki, &kind)| {
            let deltas: Vec<f64> = (0..epsilons.len())
                .map(|i| median((0..SEEDS_PER_EPSILON).map(|s| measured[i * SEEDS_PER_EPSILON + s][ki]).collect()))
                .collect();
            let (xs, ys): (Vec<f64>, Vec<f64>) =
                epsilons.iter().zip(&deltas).filter(|(_, d)| **d > 10.0 * floor).map(|(e, d)| (*e, *d)).unzip();
            let usable = xs.len();
            let (status, fit) = match usable {
                0 => (SeriesStatus::TopologicallyPinned, None),
                1 | 2 => (SeriesStatus::InsufficientSignal, None),
                _ => (SeriesStatus::Fitted, fit_log_log(&xs, &ys)),
            };
            MeasureSeries {
                kind,
                deltas,
                noise_floor: floor,
                usable,
                fitted_slope: fit.map(|f| f.0),
                fitted_intercept: fit.map(|f| f.1),
                status,
            }
        })
        .collect();

    let oracle = match shape {
        ReferenceShape::SegmentPlusOutlier { .. } if epsilons.iter().all(|&e| e < r) => {
            Some(epsilons.iter().map(|&e| tightness_oracle(r, e)).collect::<Result<Vec<_>>>()?)
        }
        _ => None,
    };
    let oracle_slope = oracle.as_ref().and_then(|o| fit_log_log(epsilons, o)).map(|f| f.0);
    Ok(StabilityRun {
        shape: shape.clone(),
        mode,
        r,
        eta,
        kernel: kernel.clone(),
        seed,
        seeds_per_epsilon: SEEDS_PER_EPSILON,
        fill_radius: generated.fill_radius,
        mu_estimate,
        regime,
        epsilons: epsilons.to_vec(),
        series,
        oracle,
        oracle_slope,
    })
}
