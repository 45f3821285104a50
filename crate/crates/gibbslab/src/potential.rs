//! Invariant Hölder potentials on the unit tangent bundle, geodesic line
//! integrals, the orbital weight `kappa`, the `delta` and Gibbs cocycles,
//! F-harmonic evaluation and pressure estimation.
//!
//! All potentials here depend on the base point only. The bump series sums a
//! C² cutoff over the lattice orbit of a centre point; its support radius is
//! capped below half the systole so that at most one orbit point contributes
//! at any point of the plane, which makes invariance exact.

use crate::group::{GroupElement, GroupPresentation};
use crate::hypgeom::{
    axis_map, busemann, geodesic_endpoints, geodesic_point, geodesic_point_to_boundary, hdist,
    BoundaryPoint, GeomError, HPoint, MobiusMap, UnitTangent,
};
use crate::measures::EmpiricalMeasure;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Simpson base step for geodesic line integrals.
pub const QUADRATURE_STEP: f64 = 0.05;
/// Default relative tolerance for the cocycle limits. Double precision
/// half-plane coordinates floor the attainable increment resolution of the
/// ray limit near 1e−6 for generic inputs; tighter tolerances error out
/// honestly instead of stalling.
pub const DEFAULT_COCYCLE_TOL: f64 = 1e-6;
/// Ray-depth cap for the delta cocycle. Beyond depth ≈ 35 a ray point is no
/// longer resolvable in f64 half-plane coordinates (its horizontal offset
/// from the target boundary point drops under one ulp), so the tail of the
/// defining limit is truncated safely below that wall, against its analytic
/// exponential envelope.
pub const DELTA_T_CAP: f64 = 30.0;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("bump radius {0} outside (0, 1.5] (half the systole bounds the support)")]
    BadBumpRadius(f64),
    #[error("delta cocycle did not converge before T = {t_cap}; last relative increment {last:.3e}")]
    DeltaNoConvergence { t_cap: f64, last: f64 },
    #[error("pressure window [{0}, {1}] must contain at least 4 integer radii")]
    WindowTooShort(f64, f64),
    #[error("pressure window extends past the enumerated ball (max orbit distance {max:.3})")]
    WindowOutsideBall { max: f64 },
    #[error("empty orbit shell ({lo}, {hi}] inside the pressure window")]
    EmptyShell { lo: u32, hi: u32 },
    #[error("measure is not supported on the boundary circle")]
    NotBoundarySupported,
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Group(#[from] crate::group::GroupError),
}

// ---------------------------------------------------------------------------
// Potentials
// ---------------------------------------------------------------------------

/// A lattice-invariant potential on the unit tangent bundle.
#[derive(Debug, Clone)]
pub enum Potential {
    Zero,
    Constant(f64),
    BumpSeries(Bump),
}

/// Bump series: `F(v) = A · φ(dist(base v, Γq)/r)` with `φ(u) = (1 − u²)⁴`
/// inside the unit interval, zero outside (C³ across the support boundary,
/// smooth inside).
#[derive(Debug, Clone)]
pub struct Bump {
    center: HPoint,
    radius: f64,
    amplitude: f64,
    group: GroupPresentation,
    /// orbit points of the centre that can reach any Dirichlet-domain point
    orbit_points: Vec<HPoint>,
}

impl Potential {
    pub fn zero() -> Self {
        Potential::Zero
    }

    pub fn constant(c: f64) -> Self {
        Potential::Constant(c)
    }

    /// Builds the bump series. The centre is moved to its Dirichlet-domain
    /// representative first; the support radius must stay within (0, 1.5].
    pub fn bump(
        group: &GroupPresentation,
        center: HPoint,
        radius: f64,
        amplitude: f64,
    ) -> Result<Self, PotentialError> {
        if !(radius > 0.0 && radius <= 1.5) {
            return Err(PotentialError::BadBumpRadius(radius));
        }
        let (center, _) = group.reduce_to_domain(center)?;
        let reach = crate::group::dirichlet_circumradius() + radius;
        let enum_radius = reach + hdist(HPoint::base(), center) + 0.05;
        let mut orbit_points = Vec::new();
        for e in group.ball(enum_radius, 40)? {
            let p = e.matrix.apply(center);
            if hdist(HPoint::base(), p) <= reach + 1e-9 {
                orbit_points.push(p);
            }
        }
        Ok(Potential::BumpSeries(Bump {
            center,
            radius,
            amplitude,
            group: group.clone(),
            orbit_points,
        }))
    }

    /// Evaluation on a unit tangent vector (base-point potentials ignore the
    /// direction).
    pub fn eval(&self, v: &UnitTangent) -> f64 {
        self.eval_point(v.base())
    }

    pub fn eval_point(&self, z: HPoint) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant(c) => *c,
            Potential::BumpSeries(b) => b.eval_hinted(z, &MobiusMap::identity()).0,
        }
    }

    fn eval_walking(&self, z: HPoint, hint: &mut MobiusMap) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant(c) => *c,
            Potential::BumpSeries(b) => {
                let (v, g) = b.eval_hinted(z, hint);
                *hint = g;
                v
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero)
    }

    /// Lipschitz constant of the potential along geodesics (zero for the
    /// locally constant kinds).
    pub fn lipschitz(&self) -> f64 {
        match self {
            Potential::Zero | Potential::Constant(_) => 0.0,
            // |φ'| of (1−u²)⁴ peaks below 2.0
            Potential::BumpSeries(b) => 2.0 * b.amplitude.abs() / b.radius,
        }
    }

    /// Human-readable tag used in reports and manifests.
    pub fn describe(&self) -> String {
        match self {
            Potential::Zero => "zero".to_string(),
            Potential::Constant(c) => format!("const:{c}"),
            Potential::BumpSeries(b) => format!(
                "bump:q={},{};r={};A={}",
                b.center.re(),
                b.center.im(),
                b.radius,
                b.amplitude
            ),
        }
    }
}

impl Bump {
    fn cutoff(u: f64) -> f64 {
        if u >= 1.0 {
            0.0
        } else {
            let w = 1.0 - u * u;
            w * w * w * w
        }
    }

    /// Evaluates at `z`; also returns the deck transformation found by the
    /// reduction so that callers walking along a path can warm-start.
    fn eval_hinted(&self, z: HPoint, hint: &MobiusMap) -> (f64, MobiusMap) {
        let (z0, gamma) = self
            .group
            .reduce_point_hinted(z, hint)
            .or_else(|_| self.group.reduce_point_hinted(z, &MobiusMap::identity()))
            .expect("descent terminates on resolvable interior points");
        let mut nearest = f64::INFINITY;
        for p in &self.orbit_points {
            nearest = nearest.min(hdist(z0, *p));
        }
        let val = if nearest < self.radius {
            self.amplitude * Self::cutoff(nearest / self.radius)
        } else {
            0.0
        };
        (val, gamma)
    }
}

// ---------------------------------------------------------------------------
// Deterministic reduction
// ---------------------------------------------------------------------------

/// Sums a slice in a fixed pairwise-tree association, so that parallel
/// producers followed by this reduction give bit-stable totals.
pub fn tree_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let mid = n / 2;
            tree_sum(&values[..mid]) + tree_sum(&values[mid..])
        }
    }
}

// ---------------------------------------------------------------------------
// Geodesic line integrals
// ---------------------------------------------------------------------------

/// Integral of the lifted potential along the directed unit-speed geodesic
/// from `z1` to `z2`: composite Simpson with step ≤ 0.05 plus one Richardson
/// refinement.
pub fn geodesic_integral(f: &Potential, z1: HPoint, z2: HPoint) -> f64 {
    let d = hdist(z1, z2);
    if d == 0.0 {
        return 0.0;
    }
    match f {
        Potential::Zero => 0.0,
        Potential::Constant(c) => c * d,
        Potential::BumpSeries(bump) => {
            // parameterise the geodesic once
            let (neg, pos) = match geodesic_endpoints(z1, z2) {
                Ok(e) => e,
                Err(_) => return 0.0, // coincident within float resolution
            };
            let m = axis_map(neg, pos);
            let m_inv = m.inverse();
            // anchor the arclength parametrisation at z2: when z1 lies far
            // down a ray (as in the cocycle limits) its axis height carries
            // an exponentially amplified relative error, while the height at
            // the near endpoint stays accurate to machine precision
            let h2 = m.apply(z2).z().norm();
            let point_at = |s: f64| {
                m_inv.apply(HPoint::new(Complex64::new(0.0, h2 * (s - d).exp())).unwrap())
            };
            // a quarter of the contract step keeps the kink-panel error of the
            // C³ integrand below 1e−8 per unit length after refinement
            let step = QUADRATURE_STEP / 4.0;
            let n = ((d / step).ceil() as usize).max(2);
            let n = n + n % 2; // even
            let fine = 2 * n;
            let h_fine = d / fine as f64;
            let mut values = Vec::with_capacity(fine + 1);
            let mut hint = MobiusMap::identity();
            for k in 0..=fine {
                let (v, g) = bump.eval_hinted(point_at(k as f64 * h_fine), &hint);
                hint = g;
                values.push(v);
            }
            let simpson = |stride: usize| -> f64 {
                let h = h_fine * stride as f64;
                let m = fine / stride;
                let mut acc = values[0] + values[fine];
                for j in 1..m {
                    let w = if j % 2 == 1 { 4.0 } else { 2.0 };
                    acc += w * values[j * stride];
                }
                acc * h / 3.0
            };
            let coarse = simpson(2);
            let refined = simpson(1);
            (16.0 * refined - coarse) / 15.0
        }
    }
}

/// The orbital weight `kappa(o, z) = exp ∫_o^z F`.
pub fn kappa(f: &Potential, o: HPoint, z: HPoint) -> f64 {
    if (o.z() - z.z()).norm() == 0.0 {
        return 1.0;
    }
    geodesic_integral(f, o, z).exp()
}

/// Weights `kappa(γ) = kappa(o, γ·o)` for a whole ball, computed in parallel
/// with per-element independence (the output order is the ball order).
pub fn kappa_table(f: &Potential, ball: &[GroupElement]) -> Vec<f64> {
    match f {
        Potential::Zero => vec![1.0; ball.len()],
        Potential::Constant(c) => ball.iter().map(|e| (c * e.orbit_dist).exp()).collect(),
        Potential::BumpSeries(_) => {
            let o = HPoint::base();
            ball.par_iter().map(|e| kappa(f, o, e.matrix.apply(o))).collect()
        }
    }
}

// ---------------------------------------------------------------------------
// Cocycles
// ---------------------------------------------------------------------------

/// The Gibbs integral cocycle
/// `delta(y, z; xi) = exp[∫_xi^z F − ∫_xi^y F]`, the limit of
/// `exp[∫_{c(T)}^z F − ∫_{c(T)}^y F]` along any ray `c → xi`.
///
/// Evaluated through the horospherically synchronised decomposition of that
/// limit: finite head integrals along the rays `[z → xi)` and `[y → xi)` up
/// to anchors with `A_y − A_z = β_xi(z, y)`, plus the paired tail
/// `∫_0^∞ [F(ray_z(A_z+u)) − F(ray_y(A_y+u))] du`, whose integrand is
/// bounded by `Lip(F)·D·e^{−u}`. The tail is truncated once its analytic
/// envelope drops below `tol/2`; if that needs more ray depth than double
/// precision can represent, an error reports the residual envelope.
pub fn delta_cocycle(
    f: &Potential,
    y: HPoint,
    z: HPoint,
    xi: BoundaryPoint,
    tol: f64,
) -> Result<f64, PotentialError> {
    if f.is_zero() {
        return Ok(1.0);
    }
    if (y.z() - z.z()).norm() == 0.0 {
        return Ok(1.0);
    }
    let b = busemann(xi, z, y)?; // β_xi(z, y)
    let (a_z, a_y) = if b >= 0.0 { (0.0, b) } else { (-b, 0.0) };
    let ray_z = RayChart::new(z, xi);
    let ray_y = RayChart::new(y, xi);
    // head integrals along well-conditioned initial ray segments
    let mut log_delta = 0.0;
    if a_z > 0.0 {
        log_delta += geodesic_integral(f, z, ray_z.at(a_z));
    }
    if a_y > 0.0 {
        log_delta -= geodesic_integral(f, y, ray_y.at(a_y));
    }
    // paired tail
    let lip = f.lipschitz();
    if lip > 0.0 {
        let d0 = hdist(ray_z.at(a_z), ray_y.at(a_y)).max(1e-12);
        let u_cap = DELTA_T_CAP - a_z.max(a_y);
        let needed = (2.0 * lip * d0 / tol.max(1e-300)).ln();
        if needed > u_cap {
            return Err(PotentialError::DeltaNoConvergence {
                t_cap: DELTA_T_CAP,
                last: lip * d0 * (-u_cap).exp(),
            });
        }
        let u_max = needed.clamp(1.0, u_cap);
        let step = QUADRATURE_STEP / 4.0;
        let n = ((u_max / step).ceil() as usize).max(2);
        let n = n + n % 2;
        let fine = 2 * n;
        let h_fine = u_max / fine as f64;
        let mut hint_z = MobiusMap::identity();
        let mut hint_y = MobiusMap::identity();
        let mut values = Vec::with_capacity(fine + 1);
        for k in 0..=fine {
            let u = k as f64 * h_fine;
            let fz = f.eval_walking(ray_z.at(a_z + u), &mut hint_z);
            let fy = f.eval_walking(ray_y.at(a_y + u), &mut hint_y);
            values.push(fz - fy);
        }
        let simpson = |stride: usize| -> f64 {
            let h = h_fine * stride as f64;
            let m = fine / stride;
            let mut acc = values[0] + values[fine];
            for j in 1..m {
                let w = if j % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * values[j * stride];
            }
            acc * h / 3.0
        };
        let coarse = simpson(2);
        let refined = simpson(1);
        log_delta += (16.0 * refined - coarse) / 15.0;
    }
    Ok(log_delta.exp())
}

/// Unit-speed parametrisation of the ray from an interior point toward a
/// boundary point, anchored at the interior point.
struct RayChart {
    m_inv: MobiusMap,
    h0: f64,
}

impl RayChart {
    fn new(z: HPoint, xi: BoundaryPoint) -> Self {
        let m = crate::hypgeom::ray_axis_map(z, xi);
        let h0 = m.apply(z).z().norm();
        RayChart { m_inv: m.inverse(), h0 }
    }

    fn at(&self, s: f64) -> HPoint {
        self.m_inv
            .apply(HPoint::new(Complex64::new(0.0, self.h0 * s.exp())).unwrap())
    }
}

/// The Gibbs kernel `k(z1, z2; xi) = delta(z1, z2; xi) · e^{−P·β_xi(z1, z2)}`.
pub fn gibbs_kernel(
    f: &Potential,
    z1: HPoint,
    z2: HPoint,
    xi: BoundaryPoint,
    pressure: f64,
    tol: f64,
) -> Result<f64, PotentialError> {
    let delta = delta_cocycle(f, z1, z2, xi, tol)?;
    let beta = busemann(xi, z1, z2)?;
    Ok(delta * (-pressure * beta).exp())
}

/// Evaluates the F-harmonic integrand sum `h(z) = Σ w_i · k(o, z; ξ_i)` over
/// the atoms of a boundary measure. `h(o)` equals the measure's mass.
pub fn f_harmonic_eval(
    f: &Potential,
    eta: &EmpiricalMeasure,
    z: HPoint,
    o: HPoint,
    pressure: f64,
    tol: f64,
) -> Result<f64, PotentialError> {
    let atoms = eta.circle_atoms().map_err(|_| PotentialError::NotBoundarySupported)?;
    if (z.z() - o.z()).norm() == 0.0 {
        let weights: Vec<f64> = atoms.iter().map(|(_, w)| *w).collect();
        return Ok(tree_sum(&weights));
    }
    let terms: Vec<f64> = atoms
        .par_iter()
        .map(|(xi, w)| gibbs_kernel(f, o, z, *xi, pressure, tol).map(|k| w * k))
        .collect::<Result<_, _>>()?;
    Ok(tree_sum(&terms))
}

// ---------------------------------------------------------------------------
// Pressure
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct PressureSample {
    pub radius: u32,
    pub log_weight: f64,
    pub count: usize,
}

/// Least-squares growth rate of the orbital sums `J_R = Σ_{d(γ) ≤ R} κ(γ)`.
#[derive(Debug, Clone, Serialize)]
pub struct PressureEstimate {
    pub value: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub samples: Vec<PressureSample>,
}

/// Estimates the pressure of `f` as the slope of `log J_R` against `R` over
/// the integer radii inside `window`. The fit residual is reported, never
/// hidden.
pub fn estimate_pressure(
    f: &Potential,
    ball: &[GroupElement],
    window: (f64, f64),
) -> Result<PressureEstimate, PotentialError> {
    let lo = window.0.ceil() as i64;
    let hi = window.1.floor() as i64;
    if hi - lo + 1 < 4 {
        return Err(PotentialError::WindowTooShort(window.0, window.1));
    }
    let max = ball.iter().map(|e| e.orbit_dist).fold(0.0f64, f64::max);
    if (hi as f64) > max + 1.0 {
        return Err(PotentialError::WindowOutsideBall { max });
    }
    let weights = kappa_table(f, ball);
    let mut samples = Vec::new();
    for radius in lo..=hi {
        let r = radius as f64;
        let in_shell = ball.iter().filter(|e| e.orbit_dist > r - 1.0 && e.orbit_dist <= r).count();
        if in_shell == 0 {
            return Err(PotentialError::EmptyShell { lo: radius as u32 - 1, hi: radius as u32 });
        }
        let terms: Vec<f64> = ball
            .iter()
            .zip(weights.iter())
            .filter(|(e, _)| e.orbit_dist <= r)
            .map(|(_, w)| *w)
            .collect();
        let count = terms.len();
        samples.push(PressureSample {
            radius: radius as u32,
            log_weight: tree_sum(&terms).ln(),
            count,
        });
    }
    // least squares y = a + b x
    let n = samples.len() as f64;
    let sx: f64 = samples.iter().map(|s| s.radius as f64).sum();
    let sy: f64 = samples.iter().map(|s| s.log_weight).sum();
    let sxx: f64 = samples.iter().map(|s| (s.radius as f64).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| s.radius as f64 * s.log_weight).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let ss: f64 = samples
        .iter()
        .map(|s| (s.log_weight - intercept - slope * s.radius as f64).powi(2))
        .sum();
    Ok(PressureEstimate { value: slope, window, residual: (ss / n).sqrt(), samples })
}

/// The orbital sum `J_R` itself (deterministic reduction over the ball order).
pub fn orbital_sum(f: &Potential, ball: &[GroupElement], radius: f64) -> f64 {
    let weights = kappa_table(f, ball);
    let terms: Vec<f64> = ball
        .iter()
        .zip(weights.iter())
        .filter(|(e, _)| e.orbit_dist <= radius)
        .map(|(_, w)| *w)
        .collect();
    tree_sum(&terms)
}
