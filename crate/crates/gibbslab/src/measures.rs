//! Empirical measures on the projective line and on the boundary circle:
//! weighted counting measures, Monte-Carlo ball and sphere averages, the
//! ball-truncated boundary measure, measure distances and convergence
//! diagnostics.

use crate::cocycle::ProjPoint;
use crate::group::{GroupElement, GroupPresentation, Representation};
use crate::hypgeom::{geodesic_point_to_boundary, ray_endpoint, BoundaryPoint, HPoint};
use crate::potential::{kappa, tree_sum, Potential};
use nalgebra::{Matrix3, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Cap on the subsample size for assignment-based Wasserstein distances.
pub const W1_SUBSAMPLE: usize = 512;
/// Fixed seed of the subsample draw, so the distance is a deterministic
/// function of its two inputs.
const W1_SEED: u64 = 0x51ab;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("measures have different support kinds")]
    MixedSupport,
    #[error("Kolmogorov–Smirnov distance needs circle-supported measures")]
    KsNeedsCircle,
    #[error("no atoms inside the requested radius")]
    EmptyBall,
    #[error("total weight degenerate ({0:.3e})")]
    DegenerateWeight(f64),
    #[error("radii must be strictly increasing")]
    RadiiNotIncreasing,
    #[error("atoms are not on the boundary circle (max chordal deviation {0:.3e})")]
    NotOnCircle(f64),
    #[error("empty measure")]
    Empty,
    #[error(transparent)]
    Group(#[from] crate::group::GroupError),
    #[error(transparent)]
    Cocycle(#[from] crate::cocycle::CocycleError),
}

// ---------------------------------------------------------------------------
// Empirical measures
// ---------------------------------------------------------------------------

/// Atom storage: either points of the projective line or boundary-circle
/// points carried as visual angles at the base point.
#[derive(Debug, Clone)]
pub enum Atoms {
    Projective(Vec<(ProjPoint, f64)>),
    Circle(Vec<(f64, f64)>),
}

/// A finite weighted point cloud, normalised to mass one when the flag says
/// so. Atom order is the construction order and is deterministic.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    atoms: Atoms,
    normalized: bool,
}

impl EmpiricalMeasure {
    pub fn from_proj_atoms(atoms: Vec<(ProjPoint, f64)>) -> Self {
        Self { atoms: Atoms::Projective(atoms), normalized: false }
    }

    pub fn from_circle_atoms(atoms: Vec<(f64, f64)>) -> Self {
        let tau = std::f64::consts::TAU;
        let atoms = atoms.into_iter().map(|(a, w)| (a.rem_euclid(tau), w)).collect();
        Self { atoms: Atoms::Circle(atoms), normalized: false }
    }

    pub fn len(&self) -> usize {
        match &self.atoms {
            Atoms::Projective(v) => v.len(),
            Atoms::Circle(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.atoms, Atoms::Circle(_))
    }

    pub fn mass(&self) -> f64 {
        let ws: Vec<f64> = match &self.atoms {
            Atoms::Projective(v) => v.iter().map(|(_, w)| *w).collect(),
            Atoms::Circle(v) => v.iter().map(|(_, w)| *w).collect(),
        };
        tree_sum(&ws)
    }

    /// Rescales to total mass one.
    pub fn normalized(mut self) -> Result<Self, MeasureError> {
        let m = self.mass();
        if !(m > 1e-300) {
            return Err(MeasureError::DegenerateWeight(m));
        }
        match &mut self.atoms {
            Atoms::Projective(v) => v.iter_mut().for_each(|(_, w)| *w /= m),
            Atoms::Circle(v) => v.iter_mut().for_each(|(_, w)| *w /= m),
        }
        self.normalized = true;
        Ok(self)
    }

    /// Rescales all weights by a positive factor (drops the normalised flag).
    pub fn scaled(mut self, lambda: f64) -> Self {
        match &mut self.atoms {
            Atoms::Projective(v) => v.iter_mut().for_each(|(_, w)| *w *= lambda),
            Atoms::Circle(v) => v.iter_mut().for_each(|(_, w)| *w *= lambda),
        }
        self.normalized = false;
        self
    }

    pub fn atoms(&self) -> &Atoms {
        &self.atoms
    }

    /// Atoms as projective points (circle atoms are embedded).
    pub fn proj_atoms(&self) -> Vec<(ProjPoint, f64)> {
        match &self.atoms {
            Atoms::Projective(v) => v.clone(),
            Atoms::Circle(v) => v
                .iter()
                .map(|(a, w)| (ProjPoint::from_boundary(&BoundaryPoint::from_visual_angle(*a)), *w))
                .collect(),
        }
    }

    /// Atoms as boundary points; errors unless circle-supported.
    pub fn circle_atoms(&self) -> Result<Vec<(BoundaryPoint, f64)>, MeasureError> {
        match &self.atoms {
            Atoms::Circle(v) => Ok(v
                .iter()
                .map(|(a, w)| (BoundaryPoint::from_visual_angle(*a), *w))
                .collect()),
            Atoms::Projective(_) => Err(MeasureError::KsNeedsCircle),
        }
    }

    /// Converts a projective measure whose atoms all sit on the real circle
    /// (within `tol` chordal) into a circle measure of visual angles.
    pub fn to_circle(&self, tol: f64) -> Result<EmpiricalMeasure, MeasureError> {
        match &self.atoms {
            Atoms::Circle(v) => Ok(EmpiricalMeasure { atoms: Atoms::Circle(v.clone()), normalized: self.normalized }),
            Atoms::Projective(v) => {
                let mut worst = 0.0f64;
                let mut out = Vec::with_capacity(v.len());
                for (p, w) in v {
                    worst = worst.max(p.chordal_to_real_circle());
                    let xi = match p.chart() {
                        None => BoundaryPoint::Infinity,
                        Some(z) => {
                            if z.norm() > 1e12 {
                                BoundaryPoint::Infinity
                            } else {
                                BoundaryPoint::Real(z.re)
                            }
                        }
                    };
                    out.push((xi.visual_angle(), *w));
                }
                if worst > tol {
                    return Err(MeasureError::NotOnCircle(worst));
                }
                Ok(EmpiricalMeasure { atoms: Atoms::Circle(out), normalized: self.normalized })
            }
        }
    }

    /// CSV rows. Projective: `re,im,inv_re,inv_im,weight` (both charts, so
    /// infinity stays finite in one of them). Circle: `angle,weight`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        match &self.atoms {
            Atoms::Projective(v) => {
                s.push_str("re,im,inv_re,inv_im,weight\n");
                for (p, w) in v {
                    let (u0, u1) = p.homogeneous();
                    let z = u0 / u1;
                    let zi = u1 / u0;
                    s.push_str(&format!("{},{},{},{},{}\n", z.re, z.im, zi.re, zi.im, w));
                }
            }
            Atoms::Circle(v) => {
                s.push_str("angle,weight\n");
                for (a, w) in v {
                    s.push_str(&format!("{},{}\n", a, w));
                }
            }
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        match &self.atoms {
            Atoms::Projective(v) => serde_json::json!({
                "support": "projective",
                "normalized": self.normalized,
                "atoms": v.iter().map(|(p, w)| {
                    let (u0, u1) = p.homogeneous();
                    serde_json::json!({"u0": [u0.re, u0.im], "u1": [u1.re, u1.im], "weight": w})
                }).collect::<Vec<_>>(),
            }),
            Atoms::Circle(v) => serde_json::json!({
                "support": "circle",
                "normalized": self.normalized,
                "atoms": v.iter().map(|(a, w)| serde_json::json!({"angle": a, "weight": w})).collect::<Vec<_>>(),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Weighted counting measures
// ---------------------------------------------------------------------------

fn kappa_of(f: &Potential, e: &GroupElement) -> f64 {
    match f {
        Potential::Zero => 1.0,
        Potential::Constant(c) => (c * e.orbit_dist).exp(),
        Potential::BumpSeries(_) => kappa(f, HPoint::base(), e.matrix.apply(HPoint::base())),
    }
}

/// The weighted counting measure
/// `θ_{F,R} = (Σ_{γ∈B_R} κ(γ))⁻¹ Σ_{γ∈B_R} κ(γ) δ_{ρ(γ)⁻¹ x}`.
///
/// Fully deterministic given its inputs; atoms come in ball order.
pub fn theta(
    rep: &Representation,
    f: &Potential,
    radius: f64,
    x: &ProjPoint,
    ball: &[GroupElement],
) -> Result<EmpiricalMeasure, MeasureError> {
    let selected: Vec<&GroupElement> = ball.iter().filter(|e| e.orbit_dist <= radius).collect();
    if selected.is_empty() {
        return Err(MeasureError::EmptyBall);
    }
    let atoms: Vec<(ProjPoint, f64)> = selected
        .par_iter()
        .map(|e| {
            let w = kappa_of(f, e);
            let pulled = x.apply(&rep.eval(&e.word).inverse());
            (pulled, w)
        })
        .collect();
    EmpiricalMeasure::from_proj_atoms(atoms).normalized()
}

// ---------------------------------------------------------------------------
// Monte-Carlo leaf averages
// ---------------------------------------------------------------------------

/// One atom of a suspension sample: a fundamental-domain base point, the
/// pulled-back fiber point over it, and a weight.
#[derive(Debug, Clone)]
pub struct PairedAtom {
    pub base: HPoint,
    pub fiber: ProjPoint,
    pub weight: f64,
}

/// Weighted sample of the suspension: the quotient identification sends a
/// sampled plane point `y = γ·z0` to the pair `(z0, ρ(γ)⁻¹·x)`.
#[derive(Debug, Clone)]
pub struct PairedMeasure {
    pub atoms: Vec<PairedAtom>,
    pub normalized: bool,
}

impl PairedMeasure {
    pub fn mass(&self) -> f64 {
        let ws: Vec<f64> = self.atoms.iter().map(|a| a.weight).collect();
        tree_sum(&ws)
    }

    pub fn fiber_marginal(&self) -> EmpiricalMeasure {
        let atoms = self.atoms.iter().map(|a| (a.fiber, a.weight)).collect();
        EmpiricalMeasure {
            atoms: Atoms::Projective(atoms),
            normalized: self.normalized,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("base_re,base_im,fiber_re,fiber_im,fiber_inv_re,fiber_inv_im,weight\n");
        for a in &self.atoms {
            let (u0, u1) = a.fiber.homogeneous();
            let z = u0 / u1;
            let zi = u1 / u0;
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                a.base.re(),
                a.base.im(),
                z.re,
                z.im,
                zi.re,
                zi.im,
                a.weight
            ));
        }
        s
    }
}

#[derive(Clone, Copy)]
enum Radial {
    BallUniform,
    Sphere,
}

fn leaf_average(
    group: &GroupPresentation,
    rep: &Representation,
    f: &Potential,
    radius: f64,
    x: &ProjPoint,
    n_samples: usize,
    seed: u64,
    radial: Radial,
) -> Result<PairedMeasure, MeasureError> {
    let o = HPoint::base();
    let cosh_r_minus_1 = radius.cosh() - 1.0;
    let atoms: Vec<PairedAtom> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            // counter-derived stream per sample: deterministic under any
            // thread schedule
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let phi = rng.gen::<f64>() * std::f64::consts::TAU;
            let r = match radial {
                // hyperbolic-area inverse CDF on [0, R]
                Radial::BallUniform => (1.0 + rng.gen::<f64>() * cosh_r_minus_1).acosh(),
                Radial::Sphere => radius,
            };
            let y = geodesic_point_to_boundary(o, BoundaryPoint::from_visual_angle(phi), r);
            let weight = kappa(f, o, y);
            let (z0, gamma) = group.reduce_to_domain(y)?;
            let fiber = x.apply(&rep.eval(&gamma.word).inverse());
            Ok(PairedAtom { base: z0, fiber, weight })
        })
        .collect::<Result<_, MeasureError>>()?;
    let total = tree_sum(&atoms.iter().map(|a| a.weight).collect::<Vec<_>>());
    if !(total > 1e-300) {
        return Err(MeasureError::DegenerateWeight(total));
    }
    let atoms = atoms
        .into_iter()
        .map(|mut a| {
            a.weight /= total;
            a
        })
        .collect();
    Ok(PairedMeasure { atoms, normalized: true })
}

/// Monte-Carlo weighted ball average: `n_samples` points drawn uniformly for
/// the hyperbolic area of `B(o, R)`, weighted by `κ(o, y)`, reduced to the
/// fundamental domain and pulled back to the fiber.
pub fn ball_average(
    group: &GroupPresentation,
    rep: &Representation,
    f: &Potential,
    radius: f64,
    x: &ProjPoint,
    n_samples: usize,
    seed: u64,
) -> Result<PairedMeasure, MeasureError> {
    leaf_average(group, rep, f, radius, x, n_samples, seed, Radial::BallUniform)
}

/// Monte-Carlo weighted sphere average over `S(o, R)`.
pub fn sphere_average(
    group: &GroupPresentation,
    rep: &Representation,
    f: &Potential,
    radius: f64,
    x: &ProjPoint,
    n_samples: usize,
    seed: u64,
) -> Result<PairedMeasure, MeasureError> {
    leaf_average(group, rep, f, radius, x, n_samples, seed, Radial::Sphere)
}

// ---------------------------------------------------------------------------
// Boundary measure
// ---------------------------------------------------------------------------

/// Ball-truncated boundary approximation of the Gibbs boundary measure:
/// atoms at the boundary directions of the orbit points, with weights
/// `κ(γ)·e^{−P·d(γ)}`, normalised.
pub fn ledrappier_boundary(
    f: &Potential,
    ball: &[GroupElement],
    radius: f64,
    pressure: f64,
) -> Result<EmpiricalMeasure, MeasureError> {
    let o = HPoint::base();
    let selected: Vec<&GroupElement> = ball
        .iter()
        .filter(|e| e.orbit_dist > 1e-9 && e.orbit_dist <= radius)
        .collect();
    if selected.is_empty() {
        return Err(MeasureError::EmptyBall);
    }
    let atoms: Vec<(f64, f64)> = selected
        .par_iter()
        .map(|e| {
            let y = e.matrix.apply(o);
            let xi = ray_endpoint(o, y).expect("orbit points are distinct from o");
            let w = kappa_of(f, e) * (-pressure * e.orbit_dist).exp();
            (xi.visual_angle(), w)
        })
        .collect();
    EmpiricalMeasure::from_circle_atoms(atoms).normalized()
}

// ---------------------------------------------------------------------------
// Measure distances
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMetric {
    /// Chordal 1-Wasserstein by exact assignment on weighted subsamples of
    /// ≤ 512 atoms drawn with a fixed seed. Works on any support; carries a
    /// subsampling noise floor of a few times `1/√512`.
    W1Chordal,
    /// Exact 1-Wasserstein for circle-supported measures (projective
    /// measures sitting on the real circle are converted first), with the
    /// geodesic arc/2 ground metric — the path metric induced by the chordal
    /// distance. Noise-free, so it resolves Cauchy increments far below the
    /// subsampler's floor.
    W1CircleExact,
    /// Two-sample Kolmogorov–Smirnov statistic of the angular laws
    /// (circle-supported measures only, cut at angle zero).
    KsAngle,
}

/// Distance between two empirical measures. Symmetric; zero when the
/// subsampled supports coincide atomwise.
pub fn measure_distance(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    metric: MeasureMetric,
) -> Result<f64, MeasureError> {
    if mu.is_empty() || nu.is_empty() {
        return Err(MeasureError::Empty);
    }
    match metric {
        MeasureMetric::KsAngle => {
            let a = angles_sorted(mu)?;
            let b = angles_sorted(nu)?;
            Ok(ks_statistic(&a, &b))
        }
        MeasureMetric::W1CircleExact => {
            let cm = mu.to_circle(1e-9)?;
            let cn = nu.to_circle(1e-9)?;
            Ok(w1_circle_exact(&circle_atoms_raw(&cm), &circle_atoms_raw(&cn)))
        }
        MeasureMetric::W1Chordal => {
            match (mu.is_circle(), nu.is_circle()) {
                (true, false) | (false, true) => return Err(MeasureError::MixedSupport),
                _ => {}
            }
            let pa = subsample_proj(mu, W1_SEED);
            let pb = subsample_proj(nu, W1_SEED);
            Ok(w1_assignment(&pa, &pb))
        }
    }
}

fn circle_atoms_raw(m: &EmpiricalMeasure) -> Vec<(f64, f64)> {
    match &m.atoms {
        Atoms::Circle(v) => v.clone(),
        Atoms::Projective(_) => unreachable!("caller converts first"),
    }
}

fn angles_sorted(m: &EmpiricalMeasure) -> Result<Vec<(f64, f64)>, MeasureError> {
    let circ = m.to_circle(1e-9).map_err(|_| MeasureError::KsNeedsCircle)?;
    let mut v = circle_atoms_raw(&circ);
    let total: f64 = v.iter().map(|(_, w)| w).sum();
    if !(total > 1e-300) {
        return Err(MeasureError::DegenerateWeight(total));
    }
    v.iter_mut().for_each(|(_, w)| *w /= total);
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(v)
}

/// Weighted two-sample KS statistic on sorted angle atom lists.
fn ks_statistic(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut d: f64 = 0.0;
    let mut fa = 0.0;
    let mut fb = 0.0;
    let mut i = 0;
    let mut j = 0;
    while i < a.len() || j < b.len() {
        let ta = if i < a.len() { a[i].0 } else { f64::INFINITY };
        let tb = if j < b.len() { b[j].0 } else { f64::INFINITY };
        if ta <= tb {
            fa += a[i].1;
            i += 1;
        }
        if tb <= ta && j < b.len() {
            fb += b[j].1;
            j += 1;
        }
        d = d.max((fa - fb).abs());
    }
    d
}

/// One-sample weighted KS distance of the angular law to the uniform law on
/// the circle.
pub fn ks_to_uniform(m: &EmpiricalMeasure) -> Result<f64, MeasureError> {
    let v = angles_sorted(m)?;
    let tau = std::f64::consts::TAU;
    let mut d: f64 = 0.0;
    let mut cum = 0.0;
    for (angle, w) in &v {
        let u = angle / tau;
        d = d.max((cum - u).abs());
        cum += w;
        d = d.max((cum - u).abs());
    }
    Ok(d)
}

/// Exact 1-Wasserstein on the circle for weighted atomic measures, with the
/// geodesic chordal (arc/2) ground metric: `min_c ∫ |F_μ − F_ν − c|` over the
/// angle coordinate, halved.
fn w1_circle_exact(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let wa: f64 = a.iter().map(|(_, w)| w).sum();
    let wb: f64 = b.iter().map(|(_, w)| w).sum();
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(a.len() + b.len());
    events.extend(a.iter().map(|(t, w)| (*t, w / wa)));
    events.extend(b.iter().map(|(t, w)| (*t, -w / wb)));
    events.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let n = events.len();
    let mut f = Vec::with_capacity(n);
    let mut seglen = Vec::with_capacity(n);
    let mut acc = 0.0;
    for k in 0..n {
        acc += events[k].1;
        f.push(acc);
        let next = if k + 1 < n { events[k + 1].0 } else { events[0].0 + std::f64::consts::TAU };
        seglen.push(next - events[k].0);
    }
    // optimal shift is the seglen-weighted median of F
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| f[i].partial_cmp(&f[j]).unwrap());
    let total: f64 = seglen.iter().sum();
    let mut cum = 0.0;
    let mut c = f[order[n - 1]];
    for &k in &order {
        cum += seglen[k];
        if cum >= total / 2.0 {
            c = f[k];
            break;
        }
    }
    let cost: f64 = (0..n).map(|k| seglen[k] * (f[k] - c).abs()).sum();
    cost / 2.0
}

/// Weighted subsample of a measure as projective points (fixed seed, with
/// replacement, proportional to weight).
fn subsample_proj(m: &EmpiricalMeasure, seed: u64) -> Vec<ProjPoint> {
    let atoms = m.proj_atoms();
    let n = W1_SUBSAMPLE;
    let mut cum = Vec::with_capacity(atoms.len());
    let mut acc = 0.0;
    for (_, w) in &atoms {
        acc += *w;
        cum.push(acc);
    }
    let total = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u = rng.gen::<f64>() * total;
            let idx = cum.partition_point(|&c| c < u).min(atoms.len() - 1);
            atoms[idx].0
        })
        .collect()
}

/// Exact assignment (Jonker–Volgenant shortest augmenting paths) between two
/// equal-size point sets under the chordal cost; returns the mean matched
/// cost.
fn w1_assignment(a: &[ProjPoint], b: &[ProjPoint]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let cost: Vec<Vec<f64>> = a[..n]
        .iter()
        .map(|p| b[..n].iter().map(|q| p.chordal(q)).collect())
        .collect();
    let assignment = solve_assignment(&cost);
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    total / n as f64
}

/// Jonker–Volgenant style primal-dual assignment solver (row-by-row shortest
/// augmenting paths with potentials). Returns for each row its column.
fn solve_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    const UNSET: usize = usize::MAX;
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut match_col = vec![UNSET; n + 1]; // column -> row (n = virtual column)
    for i in 0..n {
        // augment starting from row i, via the virtual column n
        let mut j0 = n;
        match_col[n] = i;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = match_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = n;
            for j in 0..n {
                if !used[j] {
                    let cur = cost[i0][j] - u[i0 + 1] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    if match_col[j] != UNSET {
                        u[match_col[j] + 1] += delta;
                    }
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if match_col[j0] == UNSET {
                break;
            }
        }
        // unwind augmenting path
        while j0 != n {
            let j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
        }
    }
    let mut row_to_col = vec![UNSET; n];
    for j in 0..n {
        if match_col[j] != UNSET {
            row_to_col[match_col[j]] = j;
        }
    }
    row_to_col
}

// ---------------------------------------------------------------------------
// Convergence diagnostics
// ---------------------------------------------------------------------------

/// Successive-distance table of the counting measures along a radius ladder.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub radii: Vec<f64>,
    /// `d(θ_{R_i}, θ_{R_{i+1}})`, chordal 1-Wasserstein
    pub successive: Vec<f64>,
    /// optional W1 distance of each `θ_R` to a reference measure
    pub to_reference: Option<Vec<f64>>,
    /// optional angular KS distance of each `θ_R` to the reference
    pub ks_to_reference: Option<Vec<f64>>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r_lo,r_hi,w1_successive\n");
        for (k, d) in self.successive.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", self.radii[k], self.radii[k + 1], d));
        }
        if let Some(refs) = &self.to_reference {
            s.push_str("radius,w1_to_reference\n");
            for (r, d) in self.radii.iter().zip(refs.iter()) {
                s.push_str(&format!("{},{}\n", r, d));
            }
        }
        if let Some(refs) = &self.ks_to_reference {
            s.push_str("radius,ks_to_reference\n");
            for (r, d) in self.radii.iter().zip(refs.iter()) {
                s.push_str(&format!("{},{}\n", r, d));
            }
        }
        s
    }
}

/// Picks the exact circular transport when both measures allow it, falling
/// back to the subsampled assignment otherwise.
pub fn w1_auto(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64, MeasureError> {
    match measure_distance(mu, nu, MeasureMetric::W1CircleExact) {
        Ok(d) => Ok(d),
        Err(_) => measure_distance(mu, nu, MeasureMetric::W1Chordal),
    }
}

/// Builds the Cauchy diagnostic: `θ_R` at each radius, successive distances,
/// and (optionally) distances to a reference boundary measure. Distances use
/// the exact circular transport whenever the supports sit on the real
/// circle (fuchsian data), the subsampled assignment otherwise.
pub fn cauchy_diagnostic(
    rep: &Representation,
    f: &Potential,
    x: &ProjPoint,
    radii: &[f64],
    ball: &[GroupElement],
    reference: Option<&EmpiricalMeasure>,
) -> Result<ConvergenceTable, MeasureError> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MeasureError::RadiiNotIncreasing);
    }
    let thetas: Vec<EmpiricalMeasure> = radii
        .iter()
        .map(|r| theta(rep, f, *r, x, ball))
        .collect::<Result<_, _>>()?;
    let mut successive = Vec::new();
    for w in thetas.windows(2) {
        successive.push(w1_auto(&w[0], &w[1])?);
    }
    let (mut to_reference, mut ks_to_reference) = (None, None);
    if let Some(reference) = reference {
        let ref_proj = EmpiricalMeasure::from_proj_atoms(reference.proj_atoms());
        let mut w1s = Vec::new();
        let mut kss = Vec::new();
        for th in &thetas {
            w1s.push(w1_auto(th, &ref_proj)?);
            if let (Ok(a), Ok(b)) = (th.to_circle(1e-9), reference.to_circle(1e-9)) {
                kss.push(measure_distance(&a, &b, MeasureMetric::KsAngle)?);
            }
        }
        to_reference = Some(w1s);
        if kss.len() == thetas.len() {
            ks_to_reference = Some(kss);
        }
    }
    Ok(ConvergenceTable { radii: radii.to_vec(), successive, to_reference, ks_to_reference })
}

// ---------------------------------------------------------------------------
// Round-circle fit on the sphere
// ---------------------------------------------------------------------------

/// Best-fit round circle diagnostics for a projective point cloud: the atoms
/// are embedded on the Riemann sphere, a least-squares plane is fitted, and
/// residuals are chordal distances to the plane–sphere section.
#[derive(Debug, Clone, Serialize)]
pub struct CircleFit {
    pub max_residual: f64,
    pub mean_residual: f64,
}

pub fn circle_fit_residual(m: &EmpiricalMeasure) -> Result<CircleFit, MeasureError> {
    let atoms = m.proj_atoms();
    if atoms.len() < 4 {
        return Err(MeasureError::Empty);
    }
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    if !(total > 1e-300) {
        return Err(MeasureError::DegenerateWeight(total));
    }
    let embed = |p: &ProjPoint| -> Vector3<f64> {
        let (u0, u1) = p.homogeneous();
        let cross = u0 * u1.conj();
        Vector3::new(2.0 * cross.re, 2.0 * cross.im, u0.norm_sqr() - u1.norm_sqr())
    };
    let pts: Vec<(Vector3<f64>, f64)> = atoms.iter().map(|(p, w)| (embed(p), w / total)).collect();
    let centroid: Vector3<f64> = pts.iter().map(|(p, w)| p * *w).sum();
    let mut cov = Matrix3::<f64>::zeros();
    for (p, w) in &pts {
        let d = p - centroid;
        cov += d * d.transpose() * *w;
    }
    let eig = cov.symmetric_eigen();
    // eigenvector of the smallest eigenvalue is the plane normal
    let mut idx = 0;
    for k in 1..3 {
        if eig.eigenvalues[k] < eig.eigenvalues[idx] {
            idx = k;
        }
    }
    let normal = eig.eigenvectors.column(idx).into_owned();
    let h = normal.dot(&centroid);
    let rho = (1.0 - h * h).max(0.0).sqrt();
    let mut max_res = 0.0f64;
    let mut mean = 0.0;
    for (p, w) in &pts {
        let e = normal.dot(p) - h;
        let ax = (p - normal * normal.dot(p)).norm();
        let res = (((ax - rho).powi(2) + e * e).sqrt()) / 2.0;
        max_res = max_res.max(res);
        mean += w * res;
    }
    Ok(CircleFit { max_residual: max_res, mean_residual: mean })
}
