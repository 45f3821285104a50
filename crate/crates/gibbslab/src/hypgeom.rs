//! Exact hyperbolic plane geometry in the upper half-plane model.
//!
//! The base point is `o = i` throughout. Boundary points live on the circle
//! `R ∪ {∞}`, carried as an explicit chart flag so that `∞` never turns into
//! a floating-point special value. The Busemann cocycle uses the convention
//! `beta_xi(y, z) = lim_t dist(c(t), z) − dist(c(t), y)` for a ray `c → xi`,
//! so that `beta_∞(y, z) = log(Im y / Im z)`.

use num_complex::Complex64;
use thiserror::Error;

/// Global base point of the model, `o = i`.
pub const BASE_POINT: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Chart switch threshold: boundary points with `|xi|` above this are handled
/// through the inversion `z → −1/z` to avoid precision loss near infinity.
pub const CHART_SWITCH: f64 = 1e6;

/// Busemann truncation: stop once evaluations at `t` and `t + 2` agree to
/// this tolerance; give up past `t = 60`.
pub const BUSEMANN_TOL: f64 = 1e-10;
pub const BUSEMANN_T_CAP: f64 = 60.0;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("matrix is singular (|det| = {det:.3e})")]
    SingularMatrix { det: f64 },
    #[error("matrix is not in SL2 (|det - 1| = {defect:.3e})")]
    NotUnimodular { defect: f64 },
    #[error("point is not in the open upper half-plane (Im = {im:.3e})")]
    NotInterior { im: f64 },
    #[error("coincident points where distinct points are required")]
    CoincidentPoints,
    #[error("Busemann limit did not stabilise before t = {t_cap}; last increment {last_increment:.3e}")]
    BusemannNoConvergence { t_cap: f64, last_increment: f64 },
    #[error("unit tangent requires distinct Hopf endpoints")]
    DegenerateTangent,
}

// ---------------------------------------------------------------------------
// Möbius maps
// ---------------------------------------------------------------------------

/// A Möbius transformation, stored as a 2×2 complex matrix with determinant
/// one and identified up to global sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MobiusMap {
    /// Builds a map from arbitrary entries, rescaling so that `ad − bc = 1`.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self, GeomError> {
        let det = a * d - b * c;
        if det.norm() < 1e-12 {
            return Err(GeomError::SingularMatrix { det: det.norm() });
        }
        let s = det.sqrt().inv();
        Ok(Self { a: a * s, b: b * s, c: c * s, d: d * s })
    }

    /// Accepts entries only if they already form an SL2 matrix to 1e−9.
    pub fn from_sl2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self, GeomError> {
        let det = a * d - b * c;
        let defect = (det - Complex64::new(1.0, 0.0)).norm();
        if defect > 1e-9 {
            return Err(GeomError::NotUnimodular { defect });
        }
        Ok(Self { a, b, c, d })
    }

    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    /// `z → −1/z`, the chart swap fixing `i`.
    pub fn inversion() -> Self {
        Self {
            a: Complex64::new(0.0, 0.0),
            b: Complex64::new(-1.0, 0.0),
            c: Complex64::new(1.0, 0.0),
            d: Complex64::new(0.0, 0.0),
        }
    }

    /// Real rotation matrix fixing `i`; rotates tangent directions at `i`
    /// by the geometric angle `2·half_angle`.
    pub fn rotation(half_angle: f64) -> Self {
        let (s, c) = half_angle.sin_cos();
        Self {
            a: Complex64::new(c, 0.0),
            b: Complex64::new(s, 0.0),
            c: Complex64::new(-s, 0.0),
            d: Complex64::new(c, 0.0),
        }
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.a.im.abs() <= tol && self.b.im.abs() <= tol && self.c.im.abs() <= tol && self.d.im.abs() <= tol
    }

    pub fn max_imag(&self) -> f64 {
        self.a.im.abs().max(self.b.im.abs()).max(self.c.im.abs()).max(self.d.im.abs())
    }

    /// Squared Frobenius norm `Σ |entry|²`.
    pub fn frobenius_sq(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    /// Largest singular value. With `det = 1` the two singular values are
    /// `σ, 1/σ`, so `σ² = (s + √(s² − 4))/2` with `s` the squared Frobenius
    /// norm.
    pub fn op_norm(&self) -> f64 {
        let s = self.frobenius_sq();
        let disc = (s * s - 4.0).max(0.0);
        (0.5 * (s + disc.sqrt())).sqrt()
    }

    /// Canonical representative of `{M, −M}`: the first entry of modulus
    /// above 1e−9 is flipped to have positive real part, ties broken toward
    /// positive imaginary part.
    pub fn canonical(&self) -> Self {
        let mut sign = 1.0;
        for e in self.entries() {
            if e.norm() > 1e-9 {
                if e.re.abs() > 1e-12 * e.norm() {
                    sign = if e.re > 0.0 { 1.0 } else { -1.0 };
                } else {
                    sign = if e.im > 0.0 { 1.0 } else { -1.0 };
                }
                break;
            }
        }
        Self { a: self.a * sign, b: self.b * sign, c: self.c * sign, d: self.d * sign }
    }

    /// Sup-norm distance between the two maps as projective matrices:
    /// `min(‖A − B‖∞, ‖A + B‖∞)`.
    pub fn dist_up_to_sign(&self, other: &Self) -> f64 {
        let mut plus: f64 = 0.0;
        let mut minus: f64 = 0.0;
        for (x, y) in self.entries().iter().zip(other.entries().iter()) {
            minus = minus.max((x - y).norm());
            plus = plus.max((x + y).norm());
        }
        minus.min(plus)
    }

    pub fn approx_eq_up_to_sign(&self, other: &Self, tol: f64) -> bool {
        self.dist_up_to_sign(other) <= tol
    }

    /// Fractional-linear action on an interior point. Callers must pass a
    /// real (isometry) matrix; complex matrices do not preserve the
    /// half-plane.
    pub fn apply(&self, p: HPoint) -> HPoint {
        let z = p.0;
        let w = (self.a * z + self.b) / (self.c * z + self.d);
        // real entries keep Im > 0 exactly up to rounding; clamp the rounding
        HPoint(Complex64::new(w.re, w.im.max(f64::MIN_POSITIVE)))
    }

    /// Action on a boundary point of `R ∪ {∞}` (real matrices only).
    pub fn apply_boundary(&self, xi: BoundaryPoint) -> BoundaryPoint {
        match xi {
            BoundaryPoint::Infinity => {
                if self.c.norm() < 1e-300 {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Real((self.a / self.c).re)
                }
            }
            BoundaryPoint::Real(x) => {
                let den = self.c.re * x + self.d.re;
                if den.abs() < 1e-300 {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Real((self.a.re * x + self.b.re) / den)
                }
            }
        }
    }
}

impl std::ops::Mul for MobiusMap {
    type Output = MobiusMap;
    fn mul(self, rhs: MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }
}

// ---------------------------------------------------------------------------
// Points
// ---------------------------------------------------------------------------

/// Interior point of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint(Complex64);

impl HPoint {
    pub fn new(z: Complex64) -> Result<Self, GeomError> {
        if z.im <= 0.0 || !z.im.is_finite() || !z.re.is_finite() {
            return Err(GeomError::NotInterior { im: z.im });
        }
        Ok(Self(z))
    }

    pub fn base() -> Self {
        Self(BASE_POINT)
    }

    pub fn z(&self) -> Complex64 {
        self.0
    }

    pub fn re(&self) -> f64 {
        self.0.re
    }

    pub fn im(&self) -> f64 {
        self.0.im
    }
}

/// Point of the circle at infinity, `R ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPoint {
    Real(f64),
    Infinity,
}

impl BoundaryPoint {
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        match (self, other) {
            (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => true,
            (BoundaryPoint::Real(x), BoundaryPoint::Real(y)) => (x - y).abs() <= tol,
            _ => false,
        }
    }

    /// Visual angle of the boundary point as seen from the base point `i`:
    /// the direction of the geodesic ray from `i` to `xi`. `xi = tan(θ/2 + π/4)`.
    pub fn visual_angle(&self) -> f64 {
        let theta = match self {
            BoundaryPoint::Infinity => std::f64::consts::FRAC_PI_2,
            BoundaryPoint::Real(x) => 2.0 * x.atan() - std::f64::consts::FRAC_PI_2,
        };
        theta.rem_euclid(2.0 * std::f64::consts::PI)
    }

    /// Inverse of [`visual_angle`](Self::visual_angle).
    pub fn from_visual_angle(theta: f64) -> Self {
        forward_endpoint(BASE_POINT, theta)
    }
}

// ---------------------------------------------------------------------------
// Distance and geodesics
// ---------------------------------------------------------------------------

/// Hyperbolic distance, `arccosh(1 + |z−w|²/(2 Im z Im w))`, evaluated in the
/// cancellation-free form `2 asinh(|z−w| / (2 √(Im z · Im w)))`.
pub fn hdist(z: HPoint, w: HPoint) -> f64 {
    let dz = z.0 - w.0;
    2.0 * (dz.norm() / (2.0 * (z.im() * w.im()).sqrt())).asinh()
}

/// Both ideal endpoints of the geodesic through two interior points,
/// as (backward, forward) for travel from `z` toward `w`.
pub fn geodesic_endpoints(z: HPoint, w: HPoint) -> Result<(BoundaryPoint, BoundaryPoint), GeomError> {
    let (zc, wc) = (z.0, w.0);
    let scale = 1.0f64.max(zc.norm()).max(wc.norm());
    if (zc.re - wc.re).abs() <= 1e-14 * scale {
        if (zc.im - wc.im).abs() <= 1e-14 * scale {
            return Err(GeomError::CoincidentPoints);
        }
        // vertical line through Re z
        return if wc.im > zc.im {
            Ok((BoundaryPoint::Real(zc.re), BoundaryPoint::Infinity))
        } else {
            Ok((BoundaryPoint::Infinity, BoundaryPoint::Real(zc.re)))
        };
    }
    let t = (wc.norm_sqr() - zc.norm_sqr()) / (2.0 * (wc.re - zc.re));
    let r = (zc - t).norm();
    // endpoints t ± r; compute the cancellation-prone one from the product
    // of the roots, t² − r² = 2 t Re z − |z|².
    let prod = 2.0 * t * zc.re - zc.norm_sqr();
    let (left, right) = if t >= 0.0 {
        let far = t + r;
        (prod / far, far)
    } else {
        let far = t - r;
        (far, prod / far)
    };
    // travel direction: moving from z to w decreases the polar angle about t
    // exactly when it heads to the right endpoint.
    let phi_z = (zc - t).arg();
    let phi_w = (wc - t).arg();
    if phi_w < phi_z {
        Ok((BoundaryPoint::Real(left), BoundaryPoint::Real(right)))
    } else {
        Ok((BoundaryPoint::Real(right), BoundaryPoint::Real(left)))
    }
}

/// Backward endpoint of the geodesic arriving at `z` from `xi`; i.e. the
/// second ideal endpoint of the geodesic through `z` with forward endpoint `xi`.
fn second_endpoint(z: HPoint, xi: BoundaryPoint) -> BoundaryPoint {
    let zc = z.0;
    match xi {
        BoundaryPoint::Infinity => BoundaryPoint::Real(zc.re),
        BoundaryPoint::Real(x) => {
            let scale = 1.0f64.max(zc.norm()).max(x.abs());
            if (x - zc.re).abs() <= 1e-14 * scale {
                BoundaryPoint::Infinity
            } else {
                let t = (x * x - zc.norm_sqr()) / (2.0 * (x - zc.re));
                // other root of (u − t)² = r²: product of roots is 2 t Re z − |z|²
                let prod = 2.0 * t * zc.re - zc.norm_sqr();
                if x.abs() > 1e-9 * scale {
                    BoundaryPoint::Real(prod / x)
                } else {
                    let r = (zc - t).norm();
                    BoundaryPoint::Real(if (t + r - x).abs() > (t - r - x).abs() { t + r } else { t - r })
                }
            }
        }
    }
}

/// The real Möbius map sending the directed geodesic `(neg → pos)` onto the
/// upward imaginary axis, `neg → 0`, `pos → ∞`.
pub fn axis_map(neg: BoundaryPoint, pos: BoundaryPoint) -> MobiusMap {
    let one = Complex64::new(1.0, 0.0);
    match (neg, pos) {
        (BoundaryPoint::Real(p), BoundaryPoint::Real(q)) => {
            let (a, b, c, d) = if p > q {
                (1.0, -p, 1.0, -q)
            } else {
                (1.0, -p, -1.0, q)
            };
            let det = (a * d - b * c).sqrt();
            MobiusMap {
                a: Complex64::new(a / det, 0.0),
                b: Complex64::new(b / det, 0.0),
                c: Complex64::new(c / det, 0.0),
                d: Complex64::new(d / det, 0.0),
            }
        }
        (BoundaryPoint::Real(p), BoundaryPoint::Infinity) => MobiusMap {
            a: one,
            b: Complex64::new(-p, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: one,
        },
        (BoundaryPoint::Infinity, BoundaryPoint::Real(q)) => MobiusMap {
            a: Complex64::new(0.0, 0.0),
            b: -one,
            c: one,
            d: Complex64::new(-q, 0.0),
        },
        (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => MobiusMap::identity(),
    }
}

/// Point at arclength `s` along the unit-speed geodesic from `z` toward an
/// interior target `w`; `s = hdist(z, w)` lands on `w`.
pub fn geodesic_point(z: HPoint, w: HPoint, s: f64) -> Result<HPoint, GeomError> {
    let (neg, pos) = geodesic_endpoints(z, w)?;
    Ok(slide_along(z, neg, pos, s))
}

/// Point at arclength `s` along the unit-speed geodesic ray from `z` toward
/// the boundary point `xi`.
pub fn geodesic_point_to_boundary(z: HPoint, xi: BoundaryPoint, s: f64) -> HPoint {
    let neg = second_endpoint(z, xi);
    slide_along(z, neg, xi, s)
}

/// The axis map of the ray from `z` toward `xi` (backward endpoint to zero,
/// `xi` to infinity).
pub fn ray_axis_map(z: HPoint, xi: BoundaryPoint) -> MobiusMap {
    axis_map(second_endpoint(z, xi), xi)
}

fn slide_along(z: HPoint, neg: BoundaryPoint, pos: BoundaryPoint, s: f64) -> HPoint {
    let m = axis_map(neg, pos);
    let h = m.apply(z).z().norm();
    let lifted = Complex64::new(0.0, h * s.exp());
    m.inverse().apply(HPoint(lifted))
}

/// Forward ideal endpoint of the ray from `z` through `w`.
pub fn ray_endpoint(z: HPoint, w: HPoint) -> Result<BoundaryPoint, GeomError> {
    Ok(geodesic_endpoints(z, w)?.1)
}

/// Direction angle at `z` of the geodesic ray toward `xi` (Euclidean angle of
/// the unit tangent vector in the chart).
pub fn direction_angle(z: HPoint, xi: BoundaryPoint) -> f64 {
    let zc = z.0;
    let two_pi = 2.0 * std::f64::consts::PI;
    match xi {
        BoundaryPoint::Infinity => std::f64::consts::FRAC_PI_2,
        BoundaryPoint::Real(x) => {
            let scale = 1.0f64.max(zc.norm()).max(x.abs());
            if (x - zc.re).abs() <= 1e-14 * scale {
                return 1.5 * std::f64::consts::PI; // straight down
            }
            let t = (x * x - zc.norm_sqr()) / (2.0 * (x - zc.re));
            let radial = zc - t;
            let tangent = if x > t {
                Complex64::new(0.0, -1.0) * radial
            } else {
                Complex64::new(0.0, 1.0) * radial
            };
            tangent.arg().rem_euclid(two_pi)
        }
    }
}

/// Forward ideal endpoint of the geodesic leaving the interior point with the
/// given Euclidean direction angle.
fn forward_endpoint(z: Complex64, angle: f64) -> BoundaryPoint {
    let (sin, cos) = angle.sin_cos();
    if cos.abs() < 1e-12 {
        return if sin > 0.0 { BoundaryPoint::Infinity } else { BoundaryPoint::Real(z.re) };
    }
    let t = z.re + z.im * sin / cos;
    let r = z.im / cos.abs();
    // near root from the product of the roots when it cancels
    let prod = 2.0 * t * z.re - z.norm_sqr();
    if cos > 0.0 {
        let far = t + r;
        BoundaryPoint::Real(if t >= 0.0 { far } else { prod / (t - r) })
    } else {
        let far = t - r;
        BoundaryPoint::Real(if t <= 0.0 { far } else { prod / (t + r) })
    }
}

// ---------------------------------------------------------------------------
// Busemann cocycle
// ---------------------------------------------------------------------------

/// Busemann cocycle `beta_xi(y, z) = lim_t dist(c(t), z) − dist(c(t), y)`,
/// evaluated by following a ray towards `xi` from the midpoint of `[y, z]`
/// until two evaluations two units apart agree to `BUSEMANN_TOL`.
pub fn busemann(xi: BoundaryPoint, y: HPoint, z: HPoint) -> Result<f64, GeomError> {
    if let BoundaryPoint::Real(x) = xi {
        if x.abs() > CHART_SWITCH {
            // work in the inverted chart z → −1/z
            let j = MobiusMap::inversion();
            return busemann(j.apply_boundary(xi), j.apply(y), j.apply(z));
        }
    }
    if (y.z() - z.z()).norm() == 0.0 {
        return Ok(0.0);
    }
    let mid = if hdist(y, z) < 1e-14 {
        y
    } else {
        geodesic_point(y, z, 0.5 * hdist(y, z))?
    };
    let eval = |t: f64| {
        let c = geodesic_point_to_boundary(mid, xi, t);
        hdist(c, z) - hdist(c, y)
    };
    let mut t = 2.0;
    let mut prev = eval(t);
    while t <= BUSEMANN_T_CAP {
        let next = eval(t + 2.0);
        if (next - prev).abs() < BUSEMANN_TOL {
            return Ok(next);
        }
        prev = next;
        t += 2.0;
    }
    Err(GeomError::BusemannNoConvergence { t_cap: BUSEMANN_T_CAP, last_increment: f64::NAN })
}

// ---------------------------------------------------------------------------
// Unit tangent vectors and the geodesic flow
// ---------------------------------------------------------------------------

/// Unit tangent vector of the hyperbolic plane, kept simultaneously as
/// (base point, direction angle) and in Hopf coordinates (backward endpoint,
/// forward endpoint, time). The time origin on each geodesic is the foot of
/// the perpendicular from the base point `o = i`.
#[derive(Debug, Clone, Copy)]
pub struct UnitTangent {
    base: HPoint,
    angle: f64,
    neg: BoundaryPoint,
    pos: BoundaryPoint,
    time: f64,
}

impl UnitTangent {
    pub fn from_base_angle(base: HPoint, angle: f64) -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        let angle = angle.rem_euclid(two_pi);
        let pos = forward_endpoint(base.z(), angle);
        let neg = forward_endpoint(base.z(), angle + std::f64::consts::PI);
        let m = axis_map(neg, pos);
        let h = m.apply(base).z().norm();
        let h0 = m.apply(HPoint::base()).z().norm();
        Self { base, angle, neg, pos, time: (h / h0).ln() }
    }

    pub fn from_hopf(neg: BoundaryPoint, pos: BoundaryPoint, time: f64) -> Result<Self, GeomError> {
        if neg.approx_eq(&pos, 0.0) {
            return Err(GeomError::DegenerateTangent);
        }
        let m = axis_map(neg, pos);
        let h0 = m.apply(HPoint::base()).z().norm();
        let base = m.inverse().apply(HPoint(Complex64::new(0.0, h0 * time.exp())));
        let angle = direction_angle(base, pos);
        Ok(Self { base, angle, neg, pos, time })
    }

    pub fn base(&self) -> HPoint {
        self.base
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Hopf coordinates (backward endpoint, forward endpoint, time).
    pub fn hopf(&self) -> (BoundaryPoint, BoundaryPoint, f64) {
        (self.neg, self.pos, self.time)
    }

    pub fn backward(&self) -> BoundaryPoint {
        self.neg
    }

    pub fn forward(&self) -> BoundaryPoint {
        self.pos
    }

    /// Geodesic flow: endpoints fixed, time shifted by `t`.
    pub fn flow(&self, t: f64) -> Self {
        Self::from_hopf(self.neg, self.pos, self.time + t).expect("valid tangent stays valid under the flow")
    }

    /// Differential action of a real Möbius isometry.
    pub fn apply(&self, m: &MobiusMap) -> Self {
        debug_assert!(m.is_real(1e-9), "tangent vectors move only under real isometries");
        let base = m.apply(self.base);
        // arg of the derivative 1/(cz+d)^2
        let den = m.c * self.base.z() + m.d;
        let dangle = -2.0 * den.arg();
        Self::from_base_angle(base, self.angle + dangle)
    }
}
