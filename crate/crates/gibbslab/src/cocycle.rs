//! The projective holonomy cocycle over the geodesic flow — Lyapunov
//! exponent and Lyapunov section estimators, fuchsian closed forms — and the
//! discrete-time projective cocycle over a Bernoulli base: Oseledets flags,
//! lifted measures and basin diagnostics.

use crate::group::{GroupElement, GroupPresentation, Representation};
use crate::hypgeom::{BoundaryPoint, MobiusMap, UnitTangent};
use crate::potential::{kappa_table, tree_sum, Potential};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Convergence tolerance for the section estimator (successive `T`, `T + 5`).
pub const SECTION_TOL: f64 = 1e-4;
pub const SECTION_T_CAP: f64 = 60.0;
/// Minimal exponent gap below which the simple-spectrum hypothesis is
/// declared failed.
pub const SIMPLE_SPECTRUM_MARGIN: f64 = 1e-3;
/// Re-orthonormalisation cadence of the exponent estimator.
const QR_CADENCE: usize = 20;
/// Backward/forward relaxation horizon for Oseledets directions.
const DIRECTION_HORIZON: usize = 400;

#[derive(Debug, Error)]
pub enum CocycleError {
    #[error("projective point needs a non-zero homogeneous pair")]
    ZeroVector,
    #[error("orbital Lyapunov estimator needs radius ≥ 5 (got {0})")]
    RadiusTooSmall(f64),
    #[error("no group elements with orbit distance in [R/2, R]")]
    EmptyEligibleSet,
    #[error("section did not contract before T = {t_cap} (invariant measure or elementary holonomy?)")]
    NoContraction { t_cap: f64 },
    #[error("Lyapunov spectrum not simple: minimal gap {gap:.3e} < {margin:.1e}")]
    SpectrumNotSimple { gap: f64, margin: f64 },
    #[error("discrete cocycle is malformed: {0}")]
    BadCocycle(String),
    #[error("n_steps must be at least 1000 (got {0})")]
    TooFewSteps(usize),
    #[error(transparent)]
    Group(#[from] crate::group::GroupError),
}

// ---------------------------------------------------------------------------
// Projective points
// ---------------------------------------------------------------------------

/// A point of the complex projective line in homogeneous coordinates,
/// kept at unit norm.
#[derive(Debug, Clone, Copy)]
pub struct ProjPoint {
    u0: Complex64,
    u1: Complex64,
}

impl ProjPoint {
    pub fn new(u0: Complex64, u1: Complex64) -> Result<Self, CocycleError> {
        let n = (u0.norm_sqr() + u1.norm_sqr()).sqrt();
        if !(n > 1e-300) || !n.is_finite() {
            return Err(CocycleError::ZeroVector);
        }
        Ok(Self { u0: u0 / n, u1: u1 / n })
    }

    pub fn from_chart(z: Complex64) -> Self {
        Self::new(z, Complex64::new(1.0, 0.0)).expect("finite chart value")
    }

    pub fn infinity() -> Self {
        Self { u0: Complex64::new(1.0, 0.0), u1: Complex64::new(0.0, 0.0) }
    }

    pub fn from_boundary(xi: &BoundaryPoint) -> Self {
        match xi {
            BoundaryPoint::Infinity => Self::infinity(),
            BoundaryPoint::Real(x) => Self::from_chart(Complex64::new(*x, 0.0)),
        }
    }

    pub fn homogeneous(&self) -> (Complex64, Complex64) {
        (self.u0, self.u1)
    }

    /// Chart value `u0/u1`; `None` encodes the point at infinity.
    pub fn chart(&self) -> Option<Complex64> {
        if self.u1.norm() <= 1e-14 * self.u0.norm() {
            None
        } else {
            Some(self.u0 / self.u1)
        }
    }

    /// Fubini–Study chordal distance, `√(1 − |⟨u,v⟩|²) = |u0 v1 − u1 v0|`
    /// for unit vectors.
    pub fn chordal(&self, other: &Self) -> f64 {
        (self.u0 * other.u1 - self.u1 * other.u0).norm().min(1.0)
    }

    pub fn apply(&self, m: &MobiusMap) -> Self {
        Self::new(m.a * self.u0 + m.b * self.u1, m.c * self.u0 + m.d * self.u1)
            .expect("Möbius maps are invertible")
    }

    /// Chordal distance to the real circle `R ∪ {∞} ⊂ CP¹`.
    pub fn chordal_to_real_circle(&self) -> f64 {
        // y-coordinate of the Riemann-sphere embedding
        let py = 2.0 * (self.u0 * self.u1.conj()).im / (self.u0.norm_sqr() + self.u1.norm_sqr());
        let py = py.clamp(-1.0, 1.0);
        (2.0 - 2.0 * (1.0 - py * py).sqrt()).max(0.0).sqrt() / 2.0
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.chordal(other) <= tol
    }
}

/// Standard normal deviate (Box–Muller), enough for isotropic sampling.
struct StdNormal;

impl rand::distributions::Distribution<f64> for StdNormal {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u1: f64 = rng.gen::<f64>().max(1e-300);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Uniform (Fubini–Study) random point of the projective line.
pub fn random_proj_point(rng: &mut impl Rng) -> ProjPoint {
    loop {
        let u0 = Complex64::new(rng.sample(StdNormal), rng.sample(StdNormal));
        let u1 = Complex64::new(rng.sample(StdNormal), rng.sample(StdNormal));
        if let Ok(p) = ProjPoint::new(u0, u1) {
            return p;
        }
    }
}

// ---------------------------------------------------------------------------
// Orbital Lyapunov estimators over the geodesic flow
// ---------------------------------------------------------------------------

/// Gibbs-weighted orbital estimator of the top Lyapunov exponent:
/// the κ-weighted average of `log‖ρ(γ)‖ / d(γ)` over the outer half of the
/// orbit ball (`R/2 ≤ d(γ) ≤ R`), with `‖·‖` the largest singular value.
pub fn lyapunov_top(
    rep: &Representation,
    ball: &[GroupElement],
    f: &Potential,
    radius: f64,
) -> Result<f64, CocycleError> {
    if radius < 5.0 {
        return Err(CocycleError::RadiusTooSmall(radius));
    }
    let weights = kappa_table(f, ball);
    let mut num = Vec::new();
    let mut den = Vec::new();
    for (e, w) in ball.iter().zip(weights.iter()) {
        if e.orbit_dist >= radius / 2.0 && e.orbit_dist <= radius {
            let image = rep.eval(&e.word);
            num.push(w * image.op_norm().ln() / e.orbit_dist);
            den.push(*w);
        }
    }
    if den.is_empty() {
        return Err(CocycleError::EmptyEligibleSet);
    }
    Ok(tree_sum(&num) / tree_sum(&den))
}

/// Estimator of the unstable Lyapunov section `σ⁺` at a unit tangent vector:
/// push a generic fiber point with the holonomy of the group element whose
/// orbit point shadows the backward geodesic point at parameter `−T`,
/// increasing `T` until two evaluations five units apart agree in the chordal
/// metric. North–south contraction makes the generic start forgettable.
pub fn lyapunov_section_plus(
    group: &GroupPresentation,
    rep: &Representation,
    v: &UnitTangent,
    t_start: f64,
    x0: &ProjPoint,
) -> Result<ProjPoint, CocycleError> {
    let t_start = t_start.max(5.0);
    let mut x = *x0;
    for attempt in 0..3u64 {
        let mut t = t_start;
        let p = v.flow(-t).base();
        let (_, gamma) = group.reduce_to_domain(p)?;
        let mut prev = x.apply(&rep.eval(&gamma.word));
        while t + 5.0 <= SECTION_T_CAP + t_start {
            t += 5.0;
            let p = v.flow(-t).base();
            let (_, gamma) = group.reduce_to_domain(p)?;
            let cur = x.apply(&rep.eval(&gamma.word));
            if prev.chordal(&cur) < SECTION_TOL {
                return Ok(cur);
            }
            prev = cur;
        }
        // re-randomise the start deterministically and retry
        let mut rng = ChaCha8Rng::seed_from_u64(0x5ec7 + attempt);
        x = random_proj_point(&mut rng);
    }
    Err(CocycleError::NoContraction { t_cap: SECTION_T_CAP + t_start })
}

/// Closed-form fuchsian section: the backward Hopf endpoint embedded in the
/// projective line.
pub fn fuchsian_section_plus(v: &UnitTangent) -> ProjPoint {
    ProjPoint::from_boundary(&v.backward())
}

// ---------------------------------------------------------------------------
// Discrete projective cocycles over a Bernoulli base
// ---------------------------------------------------------------------------

/// A locally constant projective cocycle over a Bernoulli shift: one complex
/// `d×d` unimodular matrix per symbol, with a probability vector on symbols.
#[derive(Debug, Clone)]
pub struct DiscreteCocycle {
    probs: Vec<f64>,
    mats: Vec<DMatrix<Complex64>>,
    inv_mats: Vec<DMatrix<Complex64>>,
    dim: usize,
}

impl DiscreteCocycle {
    pub fn new(probs: Vec<f64>, mats: Vec<DMatrix<Complex64>>) -> Result<Self, CocycleError> {
        if probs.len() != mats.len() || mats.is_empty() {
            return Err(CocycleError::BadCocycle("one probability per matrix required".into()));
        }
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) || probs.iter().any(|p| *p < 0.0) {
            return Err(CocycleError::BadCocycle(
                "probabilities must be nonnegative with positive sum".into(),
            ));
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let dim = mats[0].nrows();
        let mut normalised = Vec::with_capacity(mats.len());
        let mut inverses = Vec::with_capacity(mats.len());
        for m in mats {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(CocycleError::BadCocycle("matrices must be square of one size".into()));
            }
            let det = m.determinant();
            if det.norm() < 1e-12 {
                return Err(CocycleError::BadCocycle("singular matrix".into()));
            }
            // scale to determinant one by the principal d-th root
            let scale = det.powf(-1.0 / dim as f64);
            let m = m.map(|x| x * scale);
            let inv = m
                .clone()
                .try_inverse()
                .ok_or_else(|| CocycleError::BadCocycle("matrix not invertible".into()))?;
            normalised.push(m);
            inverses.push(inv);
        }
        Ok(Self { probs, mats: normalised, inv_mats: inverses, dim })
    }

    /// The two-symbol demonstration cocycle `diag(2, 1/2)`, `[[1,1],[0,1]]`
    /// with equal weights.
    pub fn demo2() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let a0 = DMatrix::from_row_slice(2, 2, &[one * 2.0, zero, zero, one * 0.5]);
        let a1 = DMatrix::from_row_slice(2, 2, &[one, one, zero, one]);
        Self::new(vec![0.5, 0.5], vec![a0, a1]).expect("demo cocycle is well formed")
    }

    /// Constant diagonal cocycle `diag(2, 1/2)`.
    pub fn constant_diag2() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let a0 = DMatrix::from_row_slice(2, 2, &[one * 2.0, zero, zero, one * 0.5]);
        Self::new(vec![1.0], vec![a0]).expect("diagonal cocycle is well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn symbols(&self) -> usize {
        self.mats.len()
    }

    pub fn matrix(&self, symbol: usize) -> &DMatrix<Complex64> {
        &self.mats[symbol]
    }

    fn sample_symbol(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }

    fn sample_symbols(&self, rng: &mut impl Rng, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.sample_symbol(rng)).collect()
    }
}

/// Oseledets data of a discrete cocycle along one sampled base orbit:
/// exponents in increasing order and the directions `σ¹ … σ^d` at the
/// sampled base point.
#[derive(Debug, Clone)]
pub struct LyapunovFlag {
    pub exponents: Vec<f64>,
    pub directions: Vec<DVector<Complex64>>,
    pub seed: u64,
    pub n_steps: usize,
}

impl LyapunovFlag {
    /// Minimal gap between consecutive exponents.
    pub fn gap(&self) -> f64 {
        self.exponents.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// The direction `σ^j` (1-based) as a projective-line point, when d = 2.
    pub fn direction_proj(&self, j: usize) -> Option<ProjPoint> {
        if self.directions.first().map(|v| v.len()) != Some(2) {
            return None;
        }
        let v = &self.directions[j - 1];
        ProjPoint::new(v[0], v[1]).ok()
    }
}

fn chordal_vectors(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    let inner: Complex64 = a.dotc(b);
    (1.0 - (inner.norm() / (na * nb)).powi(2)).max(0.0).sqrt()
}

/// Estimates the Lyapunov spectrum and the Oseledets directions of the
/// cocycle along a seeded base orbit.
///
/// Exponents come from the re-orthonormalised product method (QR every
/// [`QR_CADENCE`] steps). The slow direction `σ¹` is relaxed backwards from a
/// far horizon with the inverse matrices, the top direction `σ^d` forwards
/// from a sampled past; intermediate directions are intersections of the slow
/// flag (from the future) with the fast flag (from the past).
pub fn oseledets_flags(
    cocycle: &DiscreteCocycle,
    seed: u64,
    n_steps: usize,
) -> Result<LyapunovFlag, CocycleError> {
    if n_steps < 1_000 {
        return Err(CocycleError::TooFewSteps(n_steps));
    }
    let d = cocycle.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let future = cocycle.sample_symbols(&mut rng, n_steps + DIRECTION_HORIZON);
    let past = cocycle.sample_symbols(&mut rng, DIRECTION_HORIZON);

    // --- exponents: batched QR iteration ---
    let mut q: DMatrix<Complex64> = DMatrix::identity(d, d);
    let mut sums = vec![0.0f64; d];
    let mut k = 0;
    while k < n_steps {
        let batch = QR_CADENCE.min(n_steps - k);
        let mut acc = q.clone();
        for step in 0..batch {
            acc = cocycle.matrix(future[k + step]) * acc;
        }
        let qr = acc.qr();
        let r = qr.r();
        for j in 0..d {
            sums[j] += r[(j, j)].norm().max(1e-300).ln();
        }
        q = qr.q();
        k += batch;
    }
    let mut exponents: Vec<f64> = sums.iter().map(|s| s / n_steps as f64).collect();
    exponents.reverse(); // QR yields decreasing order; report increasing

    let gap = exponents.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if !(gap > SIMPLE_SPECTRUM_MARGIN) {
        return Err(CocycleError::SpectrumNotSimple { gap, margin: SIMPLE_SPECTRUM_MARGIN });
    }

    // --- directions at the sampled base point ---
    // slow flags from the future: relax frames backwards with the inverses
    let mut slow_frames: Vec<DMatrix<Complex64>> = Vec::with_capacity(d);
    for j in 1..=d {
        let mut frame = generic_frame(d, j, seed ^ 0x51de);
        for k in (0..DIRECTION_HORIZON).rev() {
            frame = &cocycle.inv_mats[future[k]] * frame;
            if k % QR_CADENCE == 0 {
                frame = orthonormalise(frame);
            }
        }
        slow_frames.push(orthonormalise(frame));
    }
    // fast flags from the past: push frames forwards through the past buffer
    let mut fast_frames: Vec<DMatrix<Complex64>> = Vec::with_capacity(d);
    for j in 1..=d {
        let mut frame = generic_frame(d, j, seed ^ 0xfa57);
        for k in (0..DIRECTION_HORIZON).rev() {
            frame = cocycle.matrix(past[k]) * frame;
            if k % QR_CADENCE == 0 {
                frame = orthonormalise(frame);
            }
        }
        fast_frames.push(orthonormalise(frame));
    }
    // σ^j = (slow flag of dimension j) ∩ (fast flag of dimension d−j+1)
    let mut directions = Vec::with_capacity(d);
    for j in 1..=d {
        let dir = if j == 1 {
            slow_frames[0].column(0).into_owned()
        } else if j == d {
            fast_frames[0].column(0).into_owned()
        } else {
            intersect_one_dim(&slow_frames[j - 1], &fast_frames[d - j])
        };
        let n = dir.norm();
        directions.push(dir / Complex64::new(n, 0.0));
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let c = chordal_vectors(&directions[i], &directions[j]);
            if c <= 1e-6 {
                return Err(CocycleError::BadCocycle(format!(
                    "Oseledets directions {} and {} collapse (chordal {c:.2e})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(LyapunovFlag { exponents, directions, seed, n_steps })
}

fn generic_frame(d: usize, j: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<Complex64> =
        (0..d * j).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    orthonormalise(DMatrix::from_vec(d, j, data))
}

fn orthonormalise(frame: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let cols = frame.ncols();
    let qr = frame.qr();
    let q = qr.q();
    q.columns(0, cols).into_owned()
}

/// One-dimensional intersection of two subspaces given by orthonormal
/// frames, via the principal vector with the largest principal-angle cosine.
fn intersect_one_dim(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DVector<Complex64> {
    let overlap = a.adjoint() * b;
    let svd = overlap.svd(true, false);
    let u = svd.u.expect("requested U");
    // nalgebra sorts singular values in decreasing order
    let first = u.column(0).into_owned();
    a * first
}

// ---------------------------------------------------------------------------
// Basin diagnostics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct BasinPointReport {
    /// homogeneous start coordinates, as `[re, im]` pairs
    pub start: Vec<[f64; 2]>,
    pub w1_to_mu_top: f64,
    pub w1_to_mu_bottom: f64,
}

/// Outcome of [`basin_check`]: per-point transport distances of the
/// empirical fiber orbit to samples of the lifted measures `μ^d` (top) and
/// `μ¹` (bottom). The distances are matched-index coupling costs, which
/// bound the chordal 1-Wasserstein distance from above.
#[derive(Debug, Clone, Serialize)]
pub struct BasinReport {
    pub seed: u64,
    pub n_steps: usize,
    pub exponents: Vec<f64>,
    pub generic: Vec<BasinPointReport>,
    pub prepared_bottom: Vec<BasinPointReport>,
}

impl BasinReport {
    /// Number of generic points whose orbit measure came within `tol` of the
    /// top lifted measure.
    pub fn generic_hits(&self, tol: f64) -> usize {
        self.generic.iter().filter(|p| p.w1_to_mu_top < tol).count()
    }
}

/// Runs the basin-of-attraction diagnostic: `n_points` generic fiber points
/// are iterated for `n_steps` along one sampled base orbit and their
/// empirical measures are compared against samples of `μ^d` and `μ¹`.
///
/// Points prepared on the slow direction are tracked through the
/// backward-stable recursion (naive forward iteration of the slow section is
/// exponentially unstable in floating point, so it would report round-off,
/// not dynamics); an independently relaxed slow path plays the role of the
/// prepared trajectory.
pub fn basin_check(
    cocycle: &DiscreteCocycle,
    flag: &LyapunovFlag,
    n_points: usize,
    n_steps: usize,
    seed: u64,
) -> Result<BasinReport, CocycleError> {
    let gap = flag.gap();
    if !(gap > SIMPLE_SPECTRUM_MARGIN) {
        return Err(CocycleError::SpectrumNotSimple { gap, margin: SIMPLE_SPECTRUM_MARGIN });
    }
    let d = cocycle.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let future = cocycle.sample_symbols(&mut rng, n_steps + DIRECTION_HORIZON);
    let past = cocycle.sample_symbols(&mut rng, DIRECTION_HORIZON);

    // σ¹ along the orbit: one backward sweep from the horizon
    let bottom_path = slow_path(cocycle, &future, n_steps, seed ^ 0xb0770, d);
    // an independently relaxed copy, standing in for "a point prepared on σ¹"
    let prepared_path = slow_path(cocycle, &future, n_steps, seed ^ 0xdeadbeef, d);
    // σ^d at the base point from the past, then forward along the orbit
    let mut top = generic_vector(d, seed ^ 0x70b);
    for k in (0..DIRECTION_HORIZON).rev() {
        top = cocycle.matrix(past[k]) * top;
        let n = top.norm();
        top /= Complex64::new(n, 0.0);
    }
    let mut top_path: Vec<DVector<Complex64>> = Vec::with_capacity(n_steps + 1);
    top_path.push(top.clone());
    for k in 0..n_steps {
        top = cocycle.matrix(future[k]) * top;
        let n = top.norm();
        top /= Complex64::new(n, 0.0);
        top_path.push(top.clone());
    }

    let trajectory = |start: &DVector<Complex64>| -> Vec<DVector<Complex64>> {
        let mut x = start.clone();
        let mut path = Vec::with_capacity(n_steps + 1);
        path.push(x.clone());
        for k in 0..n_steps {
            x = cocycle.matrix(future[k]) * x;
            let n = x.norm();
            x /= Complex64::new(n, 0.0);
            path.push(x.clone());
        }
        path
    };

    let report_for = |start: &DVector<Complex64>, path: &[DVector<Complex64>]| BasinPointReport {
        start: start.iter().map(|c| [c.re, c.im]).collect(),
        w1_to_mu_top: w1_matched(path, &top_path),
        w1_to_mu_bottom: w1_matched(path, &bottom_path),
    };

    let starts: Vec<DVector<Complex64>> = (0..n_points)
        .map(|i| generic_vector(d, seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(i as u64)))
        .collect();
    let generic: Vec<BasinPointReport> =
        starts.par_iter().map(|s| report_for(s, &trajectory(s))).collect();
    let prepared_bottom = vec![report_for(&prepared_path[0].clone(), &prepared_path)];

    Ok(BasinReport { seed, n_steps, exponents: flag.exponents.clone(), generic, prepared_bottom })
}

/// Backward-stable slow path: relax a generic horizon vector down to step 0
/// with the inverse matrices, recording σ¹ along the visible window.
fn slow_path(
    cocycle: &DiscreteCocycle,
    future: &[usize],
    n_steps: usize,
    seed: u64,
    d: usize,
) -> Vec<DVector<Complex64>> {
    let mut path = vec![DVector::zeros(d); n_steps + 1];
    let mut s = generic_vector(d, seed);
    for k in (0..future.len()).rev() {
        s = &cocycle.inv_mats[future[k]] * s;
        let n = s.norm();
        s /= Complex64::new(n, 0.0);
        if k <= n_steps {
            path[k] = s.clone();
        }
    }
    path
}

fn generic_vector(d: usize, seed: u64) -> DVector<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v = DVector::from_iterator(
            d,
            (0..d).map(|_| Complex64::new(rng.sample(StdNormal), rng.sample(StdNormal))),
        );
        let n = v.norm();
        if n > 1e-6 {
            return v / Complex64::new(n, 0.0);
        }
    }
}

/// Matched-index transport cost between two equal-length projective paths:
/// the coupling that pairs points over the same base-orbit index, evaluated
/// on 512 indices drawn with one fixed seed. This is an upper bound for the
/// chordal 1-Wasserstein distance of the two empirical measures.
fn w1_matched(a: &[DVector<Complex64>], b: &[DVector<Complex64>]) -> f64 {
    let take = 512.min(a.len());
    let mut rng = ChaCha8Rng::seed_from_u64(0x5b5a);
    let dists: Vec<f64> = (0..take)
        .map(|_| {
            let i = rng.gen_range(0..a.len());
            chordal_vectors(&a[i], &b[i])
        })
        .collect();
    tree_sum(&dists) / take as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{bend, octagon_generators};
    use crate::hypgeom::HPoint;

    #[test]
    fn proj_point_chart_round_trip() {
        let z = Complex64::new(0.7, -1.3);
        let p = ProjPoint::from_chart(z);
        assert!((p.chart().unwrap() - z).norm() < 1e-14);
        assert!(ProjPoint::infinity().chart().is_none());
        assert_eq!(p.chordal(&p), 0.0);
    }

    #[test]
    fn chordal_between_boundary_points() {
        // chordal(ξ1, ξ2) = |sin(Δ visual angle / 2)|
        let a = BoundaryPoint::Real(0.0);
        let b = BoundaryPoint::Infinity;
        let pa = ProjPoint::from_boundary(&a);
        let pb = ProjPoint::from_boundary(&b);
        let dv = (a.visual_angle() - b.visual_angle()).abs();
        assert!((pa.chordal(&pb) - (dv / 2.0).sin().abs()).abs() < 1e-12);
        assert!(pa.chordal_to_real_circle() < 1e-12);
        let off = ProjPoint::from_chart(Complex64::new(0.0, 1.0));
        assert!(off.chordal_to_real_circle() > 0.5);
    }

    #[test]
    fn fuchsian_top_exponent_is_half() {
        let g = octagon_generators();
        let rep = Representation::fuchsian(&g);
        let ball = g.ball(8.0, 40).unwrap();
        // per-element identity: cosh d = ‖m‖_F²/2 gives log‖m‖ = d/2 exactly
        for e in ball.iter().filter(|e| e.orbit_dist > 4.0) {
            let per = e.matrix.op_norm().ln() / e.orbit_dist;
            assert!((per - 0.5).abs() < 1e-9, "per-element {per}");
        }
        let chi = lyapunov_top(&rep, &ball, &Potential::zero(), 8.0).unwrap();
        assert!((chi - 0.5).abs() < 0.05, "chi = {chi}");
    }

    #[test]
    fn lyapunov_top_rejects_bad_input() {
        let g = octagon_generators();
        let rep = Representation::fuchsian(&g);
        let ball = g.ball(6.0, 40).unwrap();
        assert!(matches!(
            lyapunov_top(&rep, &ball, &Potential::zero(), 3.0),
            Err(CocycleError::RadiusTooSmall(_))
        ));
    }

    #[test]
    fn section_matches_backward_endpoint_fuchsian() {
        let g = octagon_generators();
        let rep = Representation::fuchsian(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let x0 = ProjPoint::from_chart(Complex64::new(0.21, 0.73));
        for _ in 0..10 {
            let base = crate::hypgeom::geodesic_point_to_boundary(
                HPoint::base(),
                BoundaryPoint::from_visual_angle(rng.gen::<f64>() * std::f64::consts::TAU),
                rng.gen::<f64>() * 1.5,
            );
            let v = UnitTangent::from_base_angle(base, rng.gen::<f64>() * std::f64::consts::TAU);
            let s = lyapunov_section_plus(&g, &rep, &v, 10.0, &x0).unwrap();
            let expected = fuchsian_section_plus(&v);
            assert!(s.approx_eq(&expected, 1e-4), "chordal {}", s.chordal(&expected));
            assert!(s.chordal_to_real_circle() < 1e-4);
        }
    }

    #[test]
    fn section_equivariance_and_flow_invariance() {
        let g = octagon_generators();
        let rep = Representation::fuchsian(&g);
        let x0 = ProjPoint::from_chart(Complex64::new(-0.4, 0.9));
        let v = UnitTangent::from_base_angle(HPoint::new(Complex64::new(0.2, 1.1)).unwrap(), 0.8);
        let s_v = lyapunov_section_plus(&g, &rep, &v, 10.0, &x0).unwrap();
        // equivariance under a generator
        let m = g.generator(2);
        let s_mv = lyapunov_section_plus(&g, &rep, &v.apply(&m), 10.0, &x0).unwrap();
        assert!(s_mv.approx_eq(&s_v.apply(&m), 1e-4));
        // flow invariance
        let s_fl = lyapunov_section_plus(&g, &rep, &v.flow(2.3), 10.0, &x0).unwrap();
        assert!(s_fl.approx_eq(&s_v, 1e-4));
    }

    #[test]
    fn section_for_bent_representation_converges() {
        let g = octagon_generators();
        let rep = bend(&Representation::fuchsian(&g), 0.3).unwrap();
        let x0 = ProjPoint::from_chart(Complex64::new(0.37, 0.0));
        let v = UnitTangent::from_base_angle(HPoint::base(), 1.0);
        let s = lyapunov_section_plus(&g, &rep, &v, 10.0, &x0).unwrap();
        assert!(s.chordal_to_real_circle() <= 1.0);
    }

    #[test]
    fn discrete_constant_diagonal() {
        let c = DiscreteCocycle::constant_diag2();
        let flag = oseledets_flags(&c, 7, 2_000).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((flag.exponents[0] + ln2).abs() < 1e-9);
        assert!((flag.exponents[1] - ln2).abs() < 1e-9);
        let top = flag.direction_proj(2).unwrap(); // e1 axis
        let slow = flag.direction_proj(1).unwrap(); // e2 axis
        assert!(top.approx_eq(&ProjPoint::infinity(), 1e-9));
        assert!(slow.approx_eq(&ProjPoint::from_chart(Complex64::new(0.0, 0.0)), 1e-9));
    }

    #[test]
    fn discrete_exponents_sum_to_zero_and_match_oracle() {
        let c = DiscreteCocycle::demo2();
        let flag = oseledets_flags(&c, 11, 200_000).unwrap();
        let sum: f64 = flag.exponents.iter().sum();
        assert!(sum.abs() < 1e-6, "sum {sum}");
        // independent norm-tracking oracle along its own sampled orbit
        let oracle = {
            let mut rng = ChaCha8Rng::seed_from_u64(1234);
            let mut v = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.37, 0.0)]);
            let n = 400_000;
            let mut acc = 0.0;
            for _ in 0..n {
                let s = c.sample_symbol(&mut rng);
                v = c.matrix(s) * v;
                let norm = v.norm();
                acc += norm.ln();
                v /= Complex64::new(norm, 0.0);
            }
            acc / n as f64
        };
        assert!(
            (flag.exponents[1] - oracle).abs() < 0.02,
            "qr {} vs oracle {oracle}",
            flag.exponents[1]
        );
        assert!(flag.gap() > 0.5);
    }

    #[test]
    fn spectrum_not_simple_detected() {
        // rotation matrix: equal exponents 0, 0
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let rot = DMatrix::from_row_slice(2, 2, &[zero, one, -one, zero]);
        let c = DiscreteCocycle::new(vec![1.0], vec![rot]).unwrap();
        assert!(matches!(oseledets_flags(&c, 3, 2_000), Err(CocycleError::SpectrumNotSimple { .. })));
    }

    #[test]
    fn diag3_flags_and_middle_direction() {
        // diag(4, 1, 1/4): exponents ∓log4, 0; directions are the axes
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[one * 4.0, zero, zero, zero, one, zero, zero, zero, one * 0.25],
        );
        let c = DiscreteCocycle::new(vec![1.0], vec![m]).unwrap();
        let flag = oseledets_flags(&c, 4, 2_000).unwrap();
        let l4 = 4.0f64.ln();
        assert!((flag.exponents[0] + l4).abs() < 1e-9);
        assert!(flag.exponents[1].abs() < 1e-9);
        assert!((flag.exponents[2] - l4).abs() < 1e-9);
        // σ¹ = e3, σ² = e2, σ³ = e1
        for (j, axis) in [(1usize, 2usize), (2, 1), (3, 0)] {
            let v = &flag.directions[j - 1];
            let mut e = DVector::zeros(3);
            e[axis] = one;
            assert!(chordal_vectors(v, &e) < 1e-7, "σ^{j} is off its axis");
        }
    }

    #[test]
    fn constant_top_direction_is_invariant() {
        let cd = DiscreteCocycle::constant_diag2();
        let f2 = oseledets_flags(&cd, 5, 2_000).unwrap();
        let top = &f2.directions[1];
        let fwd = cd.matrix(0) * top;
        let drift = chordal_vectors(&fwd, top);
        assert!(drift < 1e-8, "drift {drift}");
    }

    #[test]
    fn basin_demo2() {
        let c = DiscreteCocycle::demo2();
        let flag = oseledets_flags(&c, 21, 20_000).unwrap();
        let report = basin_check(&c, &flag, 30, 10_000, 22).unwrap();
        assert!(report.generic_hits(0.05) >= 29, "hits {}", report.generic_hits(0.05));
        for p in &report.prepared_bottom {
            assert!(p.w1_to_mu_bottom < 0.05, "prepared point strayed: {}", p.w1_to_mu_bottom);
            assert!(p.w1_to_mu_top > 0.05, "prepared point fell onto the top measure");
        }
        // generic points are far from μ¹
        assert!(report.generic.iter().all(|p| p.w1_to_mu_bottom > 0.05));
    }

    #[test]
    fn basin_constant_diagonal_start_on_slow_axis() {
        let c = DiscreteCocycle::constant_diag2();
        let flag = oseledets_flags(&c, 2, 2_000).unwrap();
        let report = basin_check(&c, &flag, 5, 2_000, 3).unwrap();
        for p in &report.prepared_bottom {
            assert!(p.w1_to_mu_bottom < 1e-9, "e2 should be exactly invariant");
        }
    }

    #[test]
    fn attraction_rate_matches_gap() {
        // chordal dist(A_n x, σ^d) decays at rate χ_top − χ_bottom; fit the
        // decay on the clean window (below the transient, above the float
        // floor) and take the median over several starts
        let c = DiscreteCocycle::demo2();
        let flag = oseledets_flags(&c, 21, 50_000).unwrap();
        let gap = flag.exponents[1] - flag.exponents[0];
        let mut slopes = Vec::new();
        for trial in 0..5u64 {
            let n = 120;
            let mut rng = ChaCha8Rng::seed_from_u64(9 + trial);
            let symbols = c.sample_symbols(&mut rng, n);
            let mut rng2 = ChaCha8Rng::seed_from_u64(100 + trial);
            let past = c.sample_symbols(&mut rng2, DIRECTION_HORIZON);
            let mut top = generic_vector(2, 77 + trial);
            for k in (0..DIRECTION_HORIZON).rev() {
                top = c.matrix(past[k]) * top;
                let nn = top.norm();
                top /= Complex64::new(nn, 0.0);
            }
            let mut x = generic_vector(2, 200 + trial);
            let mut logs = Vec::new();
            for (k, &sym) in symbols.iter().enumerate() {
                let ch = chordal_vectors(&x, &top);
                if ch > 1e-10 && ch < 1e-2 {
                    logs.push((k as f64, ch.ln()));
                }
                x = c.matrix(sym) * x;
                let nx = x.norm();
                x /= Complex64::new(nx, 0.0);
                top = c.matrix(sym) * top;
                let nt = top.norm();
                top /= Complex64::new(nt, 0.0);
            }
            if logs.len() < 8 {
                continue;
            }
            let n_pts = logs.len() as f64;
            let sx: f64 = logs.iter().map(|p| p.0).sum();
            let sy: f64 = logs.iter().map(|p| p.1).sum();
            let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
            slopes.push(((n_pts * sxy - sx * sy) / (n_pts * sxx - sx * sx)).abs());
        }
        slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(slopes.len() >= 3, "not enough clean decay windows");
        let median = slopes[slopes.len() / 2];
        assert!((median - gap).abs() < 0.25 * gap, "decay {median} vs gap {gap}");
    }

    #[test]
    fn chain_rule_is_exact() {
        let c = DiscreteCocycle::demo2();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let symbols = c.sample_symbols(&mut rng, 12);
        let prod = |range: std::ops::Range<usize>| {
            let mut m = DMatrix::<Complex64>::identity(2, 2);
            for k in range {
                m = c.matrix(symbols[k]) * m;
            }
            m
        };
        let whole = prod(0..12);
        let split = prod(7..12) * prod(0..7);
        assert_eq!(whole, split);
    }
}
