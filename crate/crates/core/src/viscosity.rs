//! Constitutive layer: the field-direction factor μ(u, E), viscosity models
//! with electric-field-dependent yield stress, and their admissibility
//! conditions (C1)–(C5).
//!
//! The viscosity function φ(y₁, y₂, y₃) depends on the strain-rate invariant
//! y₁ = I(u), the field magnitude y₂ = |E| and the direction factor
//! y₃ = μ(u, E) ∈ [0, 1] (squared cosine between the velocity, in the frame
//! of the moving boundary, and the field).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Below this field magnitude the constitutive law switches to its E = 0
/// branch, which takes μ = 0 as a dummy argument and must not depend on it.
pub const DEFAULT_EPS_E: f64 = 1e-12;

// ---------------------------------------------------------------------------
// μ(u, E)
// ---------------------------------------------------------------------------

/// Radial smoothing kernel of the mollified direction factor.
#[derive(Clone)]
pub enum Kernel {
    /// C^∞ bump `exp(-1/(1-(r/a)²))` on `[0, a)`, 0 outside.
    Bump,
    /// User-supplied radial profile `ω(r) ≥ 0` supported on `[0, a]`.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Bump => write!(f, "Kernel::Bump"),
            Kernel::Custom(_) => write!(f, "Kernel::Custom(..)"),
        }
    }
}

/// Mollifier configuration: smoothing radius (the particle scale) and kernel.
#[derive(Debug, Clone)]
pub struct Mollifier {
    /// Support radius `a > 0`.
    pub radius: f64,
    /// Radial kernel; normalized numerically to unit mass over the disk.
    pub kernel: Kernel,
}

impl Mollifier {
    fn kernel_value(&self, r: f64) -> f64 {
        let s = r / self.radius;
        if s >= 1.0 {
            return 0.0;
        }
        match &self.kernel {
            Kernel::Bump => (-1.0 / (1.0 - s * s)).exp(),
            Kernel::Custom(f) => f(r),
        }
    }

    /// Polar quadrature points `(offset, weight)` over the disk `B(0, a)`,
    /// with weights of the kernel normalized to sum to 1 (unit mass).
    pub fn quadrature(&self) -> Vec<([f64; 2], f64)> {
        const NR: usize = 10;
        const NT: usize = 16;
        let a = self.radius;
        let mut pts = Vec::with_capacity(NR * NT);
        let mut total = 0.0;
        for ir in 0..NR {
            // midpoint rule in radius and angle
            let r = a * (ir as f64 + 0.5) / NR as f64;
            let w_r = self.kernel_value(r) * r * (a / NR as f64);
            for it in 0..NT {
                let th = 2.0 * std::f64::consts::PI * (it as f64 + 0.5) / NT as f64;
                let w = w_r * 2.0 * std::f64::consts::PI / NT as f64;
                pts.push(([r * th.cos(), r * th.sin()], w));
                total += w;
            }
        }
        assert!(total > 0.0, "mollifier kernel must have positive mass");
        for p in &mut pts {
            p.1 /= total;
        }
        pts
    }
}

/// The direction factor μ(u, E): squared cosine of the angle between the
/// regularized velocity `α·(1,1) + u + ǔ` and the field `E`.
#[derive(Debug, Clone)]
pub struct MuFunction {
    /// Regularization constant α ≥ 0 (keeps μ defined where u + ǔ = 0).
    pub alpha: f64,
    /// Velocity ǔ of the frame in which the direction is measured.
    pub frame_velocity: [f64; 2],
    /// Optional smoothing of the velocity argument over a particle-scale ball.
    pub mollifier: Option<Mollifier>,
    /// Secondary regularization used together with the mollifier.
    pub beta: f64,
}

impl Default for MuFunction {
    fn default() -> Self {
        MuFunction { alpha: 1e-3, frame_velocity: [0.0, 0.0], mollifier: None, beta: 0.0 }
    }
}

impl MuFunction {
    /// Direction factor for pointwise values `u` and `E`.
    /// Errors when `E = 0`; callers must branch to the E = 0 constitutive
    /// law before calling.
    pub fn eval(&self, u: [f64; 2], e: [f64; 2]) -> Result<f64> {
        let en = (e[0] * e[0] + e[1] * e[1]).sqrt();
        if en == 0.0 {
            return Err(Error::InvalidConfig(
                "μ(u, E) is undefined at E = 0; use the field-free constitutive branch".into(),
            ));
        }
        let w = [u[0] + self.frame_velocity[0], u[1] + self.frame_velocity[1]];
        let wn = (w[0] * w[0] + w[1] * w[1]).sqrt();
        let den = self.alpha * 2f64.sqrt() + wn;
        if den == 0.0 {
            // α = 0 and u + ǔ = 0: the direction is undefined; the
            // unregularized limit is taken as 0.
            return Ok(0.0);
        }
        let num = [self.alpha + w[0], self.alpha + w[1]];
        let cos = (num[0] * e[0] + num[1] * e[1]) / (den * en);
        Ok((cos * cos).clamp(0.0, 1.0))
    }

    /// Mollified direction factor at the point `x`: the velocity argument is
    /// replaced by its convolution with the kernel over `B(x, a)` before the
    /// squared cosine is formed.  `u` and `e` are field evaluators which must
    /// handle (clamp) points outside the domain.
    pub fn eval_mollified(
        &self,
        u: &dyn Fn([f64; 2]) -> [f64; 2],
        e: &dyn Fn([f64; 2]) -> [f64; 2],
        x: [f64; 2],
    ) -> Result<f64> {
        let moll = self.mollifier.as_ref().ok_or_else(|| {
            Error::InvalidConfig("eval_mollified requires a configured mollifier".into())
        })?;
        let mut pu = [0.0, 0.0];
        for (off, w) in moll.quadrature() {
            let v = u([x[0] + off[0], x[1] + off[1]]);
            pu[0] += w * v[0];
            pu[1] += w * v[1];
        }
        // β adds to the α-regularization when smoothing is active.
        let inner = MuFunction {
            alpha: self.alpha + self.beta,
            frame_velocity: self.frame_velocity,
            mollifier: None,
            beta: 0.0,
        };
        inner.eval(pu, e(x))
    }
}

// ---------------------------------------------------------------------------
// Scalar coefficient functions
// ---------------------------------------------------------------------------

/// Cubic Hermite spline with linear extension beyond the last knot.
#[derive(Debug, Clone)]
pub struct HermiteSpline {
    /// Strictly increasing knot abscissae.
    pub knots: Vec<f64>,
    /// Values at the knots.
    pub values: Vec<f64>,
    /// Derivatives at the knots.
    pub derivs: Vec<f64>,
}

impl HermiteSpline {
    /// Builds a spline after validating monotone knots and matching lengths.
    pub fn new(knots: Vec<f64>, values: Vec<f64>, derivs: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() || knots.len() != derivs.len() {
            return Err(Error::InvalidConfig(
                "spline needs ≥ 2 knots with matching value/derivative lists".into(),
            ));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("spline knots must be strictly increasing".into()));
        }
        Ok(HermiteSpline { knots, values, derivs })
    }

    /// Value at `s` (linear extension outside the knot range).
    pub fn eval(&self, s: f64) -> f64 {
        self.eval_with_deriv(s).0
    }

    /// Value and derivative at `s`.
    pub fn eval_with_deriv(&self, s: f64) -> (f64, f64) {
        let n = self.knots.len();
        if s <= self.knots[0] {
            let m = self.derivs[0];
            return (self.values[0] + m * (s - self.knots[0]), m);
        }
        if s >= self.knots[n - 1] {
            let m = self.derivs[n - 1];
            return (self.values[n - 1] + m * (s - self.knots[n - 1]), m);
        }
        let j = match self.knots.binary_search_by(|k| k.partial_cmp(&s).unwrap()) {
            Ok(j) => j.min(n - 2),
            Err(j) => j - 1,
        };
        let dx = self.knots[j + 1] - self.knots[j];
        let t = (s - self.knots[j]) / dx;
        let (y0, y1, m0, m1) = (self.values[j], self.values[j + 1], self.derivs[j], self.derivs[j + 1]);
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        let val = h00 * y0 + dx * h10 * m0 + h01 * y1 + dx * h11 * m1;
        let dh00 = 6.0 * t * (t - 1.0);
        let dh10 = (1.0 - t) * (1.0 - 3.0 * t);
        let dh01 = -dh00;
        let dh11 = t * (3.0 * t - 2.0);
        let der = (dh00 * y0 + dh01 * y1) / dx + dh10 * m0 + dh11 * m1;
        (val, der)
    }
}

/// A shear function β(I): a factor of the viscosity depending on the
/// strain-rate invariant.
#[derive(Clone)]
pub enum ShearFn {
    /// Constant value.
    Constant(f64),
    /// Flow-curve spline in the shear rate γ = (I/2)^{1/2}, extended by a
    /// straight line beyond the last knot.
    SplineGamma(HermiteSpline),
    /// Black-box function of I with optional analytic derivative; without
    /// one, central differences with step `max(1e-6, 1e-6·I)` are used.
    Custom {
        /// Value β(I).
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        /// Optional analytic derivative dβ/dI.
        df: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    },
}

impl fmt::Debug for ShearFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShearFn::Constant(c) => write!(f, "ShearFn::Constant({c})"),
            ShearFn::SplineGamma(s) => write!(f, "ShearFn::SplineGamma({} knots)", s.knots.len()),
            ShearFn::Custom { .. } => write!(f, "ShearFn::Custom(..)"),
        }
    }
}

impl ShearFn {
    /// Value at invariant `i ≥ 0`.
    pub fn eval(&self, i: f64) -> f64 {
        match self {
            ShearFn::Constant(c) => *c,
            ShearFn::SplineGamma(s) => s.eval((i / 2.0).max(0.0).sqrt()),
            ShearFn::Custom { f, .. } => f(i),
        }
    }

    /// Derivative dβ/dI at `i`.
    pub fn deriv(&self, i: f64) -> f64 {
        match self {
            ShearFn::Constant(_) => 0.0,
            ShearFn::SplineGamma(s) => {
                // dβ/dI = s'(γ)/(4γ); at γ = 0 the chain rule is singular,
                // but the products φ'·(ε(u):ε(h)) it multiplies vanish with I,
                // so a clamped γ keeps the arithmetic finite.
                let g = (i / 2.0).max(0.0).sqrt().max(1e-150);
                s.eval_with_deriv(g).1 / (4.0 * g)
            }
            ShearFn::Custom { f, df } => {
                if let Some(df) = df {
                    df(i)
                } else {
                    let h = (1e-6f64).max(1e-6 * i);
                    let lo = (i - h).max(0.0);
                    (f(i + h) - f(lo)) / (i + h - lo)
                }
            }
        }
    }
}

/// A coefficient function of (|E|, μ) such as eᵢ, b or b₁.
#[derive(Clone)]
pub enum CoefFn {
    /// Constant value.
    Constant(f64),
    /// Black-box `f(|E|, μ)`.
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for CoefFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefFn::Constant(c) => write!(f, "CoefFn::Constant({c})"),
            CoefFn::Custom(_) => write!(f, "CoefFn::Custom(..)"),
        }
    }
}

impl CoefFn {
    /// Value at `(|E|, μ)`.
    pub fn eval(&self, abs_e: f64, mu: f64) -> f64 {
        match self {
            CoefFn::Constant(c) => *c,
            CoefFn::Custom(f) => f(abs_e, mu),
        }
    }
}

/// Spatial coefficient `e(|E|, x)` of the anisotropic model.
pub type SpatialCoef = Arc<dyn Fn(f64, [f64; 2]) -> f64 + Send + Sync>;
/// Spatial viscosity `ψ₁(I, |E|, x)` of the anisotropic model.
pub type SpatialVisc = Arc<dyn Fn(f64, f64, [f64; 2]) -> f64 + Send + Sync>;

// ---------------------------------------------------------------------------
// Viscosity models
// ---------------------------------------------------------------------------

/// A smooth (non-yield) viscosity: a sum of products of field coefficients
/// and shear functions, `ψ(I, |E|, μ) = Σᵢ eᵢ(|E|, μ) βᵢ(I)`, together with
/// its admissibility bounds a₁ ≤ ψ ≤ a₂, ψ + 2ψ′I ≥ a₃, |ψ′|I ≤ a₄.
#[derive(Debug, Clone)]
pub struct RegularModel {
    /// The terms eᵢ βᵢ.
    pub terms: Vec<(CoefFn, ShearFn)>,
    /// Lower viscosity bound a₁ > 0.
    pub a1: f64,
    /// Upper viscosity bound a₂ ≥ a₁.
    pub a2: f64,
    /// Monotonicity bound a₃ > 0.
    pub a3: f64,
    /// Derivative bound a₄ > 0.
    pub a4: f64,
}

impl RegularModel {
    /// Constant viscosity `c` with its exact bounds.
    pub fn constant(c: f64) -> Self {
        RegularModel {
            terms: vec![(CoefFn::Constant(1.0), ShearFn::Constant(c))],
            a1: c,
            a2: c,
            a3: c,
            a4: f64::MIN_POSITIVE,
        }
    }

    /// ψ(I, |E|, μ).
    pub fn eval(&self, i: f64, abs_e: f64, mu: f64) -> f64 {
        self.terms.iter().map(|(e, b)| e.eval(abs_e, mu) * b.eval(i)).sum()
    }

    /// ∂ψ/∂I.
    pub fn deriv(&self, i: f64, abs_e: f64, mu: f64) -> f64 {
        self.terms.iter().map(|(e, b)| e.eval(abs_e, mu) * b.deriv(i)).sum()
    }
}

/// The constitutive model variants.
#[derive(Clone)]
pub enum ViscosityModel {
    /// Smooth viscosity ψ alone (no yield stress).
    Regular(RegularModel),
    /// φ = b(|E|, μ)(λ + I)^{−1/2} + ψ(I, |E|, μ) with λ > 0.
    RegularizedBingham {
        /// Yield coefficient b with bound 0 ≤ b ≤ a₅.
        yield_coef: CoefFn,
        /// Bound a₅ on the yield coefficient.
        a5: f64,
        /// Smooth part.
        psi: RegularModel,
        /// Regularization parameter λ > 0.
        lambda: f64,
    },
    /// φ = b(|E|, μ) I^{−1/2} + ψ(I, |E|, μ); evaluable only for I > 0.
    SingularBingham {
        /// Yield coefficient b with bound 0 ≤ b ≤ a₅.
        yield_coef: CoefFn,
        /// Bound a₅ on the yield coefficient.
        a5: f64,
        /// Smooth part.
        psi: RegularModel,
    },
    /// φ = b(|E|, μ) I^{−1/2} + b₁(|E|, μ): constant-in-I plastic viscosity.
    ExtendedBingham {
        /// Yield coefficient b with bound 0 ≤ b ≤ a₅.
        yield_coef: CoefFn,
        /// Bound a₅ on the yield coefficient.
        a5: f64,
        /// Plastic viscosity b₁ with bounds a₆ ≤ b₁ ≤ a₇.
        plastic: CoefFn,
        /// Lower bound a₆ > 0 on b₁.
        a6: f64,
        /// Upper bound a₇ on b₁.
        a7: f64,
        /// Regularization parameter λ ≥ 0 applied to the yield part.
        lambda: f64,
    },
    /// Anisotropic model with prescribed direction field:
    /// φ = e(|E|, x)(λ + I)^{−1/2} + ψ₁(I, |E|, x).
    GivenMu {
        /// Yield coefficient e(|E|, x) with bound a₅.
        e: SpatialCoef,
        /// Bound a₅ on e.
        a5: f64,
        /// Smooth part ψ₁(I, |E|, x).
        psi1: SpatialVisc,
        /// Optional analytic ∂ψ₁/∂I.
        dpsi1: Option<SpatialVisc>,
        /// Regularization parameter λ ≥ 0.
        lambda: f64,
    },
}

impl fmt::Debug for ViscosityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViscosityModel::Regular(m) => f.debug_tuple("Regular").field(m).finish(),
            ViscosityModel::RegularizedBingham { yield_coef, a5, psi, lambda } => f
                .debug_struct("RegularizedBingham")
                .field("yield_coef", yield_coef)
                .field("a5", a5)
                .field("psi", psi)
                .field("lambda", lambda)
                .finish(),
            ViscosityModel::SingularBingham { yield_coef, a5, psi } => f
                .debug_struct("SingularBingham")
                .field("yield_coef", yield_coef)
                .field("a5", a5)
                .field("psi", psi)
                .finish(),
            ViscosityModel::ExtendedBingham { yield_coef, a5, plastic, a6, a7, lambda } => f
                .debug_struct("ExtendedBingham")
                .field("yield_coef", yield_coef)
                .field("a5", a5)
                .field("plastic", plastic)
                .field("a6", a6)
                .field("a7", a7)
                .field("lambda", lambda)
                .finish(),
            ViscosityModel::GivenMu { a5, lambda, .. } => f
                .debug_struct("GivenMu")
                .field("a5", a5)
                .field("lambda", lambda)
                .finish_non_exhaustive(),
        }
    }
}

impl ViscosityModel {
    /// λ of the model's yield regularization (0 where absent).
    pub fn lambda(&self) -> f64 {
        match self {
            ViscosityModel::Regular(_) => 0.0,
            ViscosityModel::RegularizedBingham { lambda, .. } => *lambda,
            ViscosityModel::SingularBingham { .. } => 0.0,
            ViscosityModel::ExtendedBingham { lambda, .. } => *lambda,
            ViscosityModel::GivenMu { lambda, .. } => *lambda,
        }
    }

    /// Copy of the model with λ replaced (used by the continuation driver).
    pub fn with_lambda(&self, lambda: f64) -> ViscosityModel {
        let mut m = self.clone();
        match &mut m {
            ViscosityModel::RegularizedBingham { lambda: l, .. }
            | ViscosityModel::ExtendedBingham { lambda: l, .. }
            | ViscosityModel::GivenMu { lambda: l, .. } => *l = lambda,
            ViscosityModel::SingularBingham { .. } | ViscosityModel::Regular(_) => {}
        }
        m
    }

    /// The μ argument actually used: dropped to the dummy value 0 on the
    /// E = 0 branch, where the law must not depend on the direction.
    fn effective_mu(abs_e: f64, mu: f64) -> f64 {
        if abs_e < DEFAULT_EPS_E {
            0.0
        } else {
            mu
        }
    }

    /// Viscosity φ(I, |E|, μ; x).
    pub fn eval_phi(&self, i: f64, abs_e: f64, mu: f64, x: [f64; 2]) -> Result<f64> {
        let mu = Self::effective_mu(abs_e, mu);
        let v = match self {
            ViscosityModel::Regular(m) => m.eval(i, abs_e, mu),
            ViscosityModel::RegularizedBingham { yield_coef, psi, lambda, .. } => {
                yield_coef.eval(abs_e, mu) / (lambda + i).sqrt() + psi.eval(i, abs_e, mu)
            }
            ViscosityModel::SingularBingham { yield_coef, psi, .. } => {
                if i <= 0.0 {
                    return Err(Error::InvalidConfig(
                        "singular Bingham viscosity is undefined at I = 0".into(),
                    ));
                }
                yield_coef.eval(abs_e, mu) / i.sqrt() + psi.eval(i, abs_e, mu)
            }
            ViscosityModel::ExtendedBingham { yield_coef, plastic, lambda, .. } => {
                if *lambda <= 0.0 && i <= 0.0 {
                    return Err(Error::InvalidConfig(
                        "extended Bingham viscosity is undefined at I = 0 without regularization"
                            .into(),
                    ));
                }
                yield_coef.eval(abs_e, mu) / (lambda + i).sqrt() + plastic.eval(abs_e, mu)
            }
            ViscosityModel::GivenMu { e, psi1, lambda, .. } => {
                if *lambda <= 0.0 && i <= 0.0 {
                    return Err(Error::InvalidConfig(
                        "anisotropic yield viscosity is undefined at I = 0 without regularization"
                            .into(),
                    ));
                }
                e(abs_e, x) / (lambda + i).sqrt() + psi1(i, abs_e, x)
            }
        };
        Ok(v)
    }

    /// ∂φ/∂I at (I, |E|, μ; x).
    pub fn dphi_di(&self, i: f64, abs_e: f64, mu: f64, x: [f64; 2]) -> Result<f64> {
        let mu = Self::effective_mu(abs_e, mu);
        let v = match self {
            ViscosityModel::Regular(m) => m.deriv(i, abs_e, mu),
            ViscosityModel::RegularizedBingham { yield_coef, psi, lambda, .. } => {
                -0.5 * yield_coef.eval(abs_e, mu) * (lambda + i).powf(-1.5)
                    + psi.deriv(i, abs_e, mu)
            }
            ViscosityModel::SingularBingham { yield_coef, psi, .. } => {
                if i <= 0.0 {
                    return Err(Error::InvalidConfig(
                        "singular Bingham viscosity is undefined at I = 0".into(),
                    ));
                }
                -0.5 * yield_coef.eval(abs_e, mu) * i.powf(-1.5) + psi.deriv(i, abs_e, mu)
            }
            ViscosityModel::ExtendedBingham { yield_coef, lambda, .. } => {
                -0.5 * yield_coef.eval(abs_e, mu) * (lambda + i).powf(-1.5)
            }
            ViscosityModel::GivenMu { e, psi1, dpsi1, lambda, .. } => {
                let dpsi = if let Some(d) = dpsi1 {
                    d(i, abs_e, x)
                } else {
                    let h = (1e-6f64).max(1e-6 * i);
                    let lo = (i - h).max(0.0);
                    (psi1(i + h, abs_e, x) - psi1(lo, abs_e, x)) / (i + h - lo)
                };
                -0.5 * e(abs_e, x) * (lambda + i).powf(-1.5) + dpsi
            }
        };
        Ok(v)
    }
}

// ---------------------------------------------------------------------------
// Condition checking (C1)–(C5)
// ---------------------------------------------------------------------------

/// Verdict on one admissibility condition.
#[derive(Debug, Clone)]
pub struct ConditionVerdict {
    /// Condition name ("C1" … "C5").
    pub name: &'static str,
    /// Whether the condition holds on the sample grid.
    pub pass: bool,
    /// Worst margin found (negative means violated).
    pub margin: f64,
    /// Sample point (y₁, y₂, y₃) realizing the worst margin.
    pub worst_point: [f64; 3],
    /// Human-readable remark (what was checked, or why it was skipped).
    pub note: String,
}

/// Report of all condition checks.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    /// One verdict per condition.
    pub verdicts: Vec<ConditionVerdict>,
}

impl ConditionReport {
    /// True when every applicable condition passed.
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

fn sample_grid(n: usize, y1_max: f64) -> Vec<f64> {
    let mut ys = vec![0.0];
    let lo: f64 = y1_max * 1e-8;
    for k in 0..n.saturating_sub(1) {
        let t = k as f64 / (n - 2).max(1) as f64;
        ys.push(lo * (y1_max / lo).powf(t));
    }
    ys
}

fn field_pairs() -> Vec<(f64, f64)> {
    let y2s = [0.0, 0.01, 1.0, 100.0];
    let y3s = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut pairs = Vec::new();
    for &y2 in &y2s {
        for &y3 in &y3s {
            pairs.push((y2, y3));
        }
    }
    pairs
}

/// Samples the admissibility conditions on a grid of `grid` log-spaced
/// invariant values (plus 0) times 20 field/direction pairs, reporting the
/// worst margin of each condition.  Sampling is a desk-scale surrogate for
/// the semi-infinite constraints, not a proof.
pub fn check_conditions(model: &ViscosityModel, grid: usize) -> ConditionReport {
    let n = grid.max(10);
    let y1_max = 1e4;
    let ys = sample_grid(n, y1_max);
    let pairs = field_pairs();
    let xs: Vec<[f64; 2]> = match model {
        ViscosityModel::GivenMu { .. } => {
            let mut v = Vec::new();
            for i in 0..3 {
                for j in 0..3 {
                    v.push([i as f64 / 2.0, j as f64 / 2.0]);
                }
            }
            v
        }
        _ => vec![[0.0, 0.0]],
    };

    let mut verdicts = Vec::new();

    // The smooth part to which (C1) applies, and its bounds.
    let smooth: Option<(Box<dyn Fn(f64, f64, f64, [f64; 2]) -> (f64, f64)>, f64, f64, f64, f64)> =
        match model {
            ViscosityModel::Regular(m) => {
                let m = m.clone();
                let (a1, a2, a3, a4) = (m.a1, m.a2, m.a3, m.a4);
                Some((
                    Box::new(move |i, e, mu, _| (m.eval(i, e, mu), m.deriv(i, e, mu)))
                        as Box<dyn Fn(f64, f64, f64, [f64; 2]) -> (f64, f64)>,
                    a1, a2, a3, a4,
                ))
            }
            ViscosityModel::RegularizedBingham { psi, .. }
            | ViscosityModel::SingularBingham { psi, .. } => {
                let m = psi.clone();
                let (a1, a2, a3, a4) = (m.a1, m.a2, m.a3, m.a4);
                Some((
                    Box::new(move |i, e, mu, _| (m.eval(i, e, mu), m.deriv(i, e, mu)))
                        as Box<dyn Fn(f64, f64, f64, [f64; 2]) -> (f64, f64)>,
                    a1, a2, a3, a4,
                ))
            }
            ViscosityModel::ExtendedBingham { .. } => None,
            ViscosityModel::GivenMu { .. } => None,
        };

    match &smooth {
        Some((f, a1, a2, a3, a4)) => {
            let mut worst = (f64::INFINITY, [0.0; 3], "");
            for &(y2, y3) in &pairs {
                for &y1 in &ys {
                    for &x in &xs {
                        let (phi, dphi) = f(y1, y2, y3, x);
                        let margins = [
                            (phi - a1, "φ ≥ a₁"),
                            (a2 - phi, "φ ≤ a₂"),
                            (phi + 2.0 * dphi * y1 - a3, "φ + 2φ′y₁ ≥ a₃"),
                            (a4 - dphi.abs() * y1, "|φ′|y₁ ≤ a₄"),
                        ];
                        for (m, label) in margins {
                            if m < worst.0 {
                                worst = (m, [y1, y2, y3], label);
                            }
                        }
                    }
                }
            }
            verdicts.push(ConditionVerdict {
                name: "C1",
                pass: worst.0 >= -1e-9,
                margin: worst.0,
                worst_point: worst.1,
                note: format!("tightest inequality: {} (smooth part)", worst.2),
            });
        }
        None => verdicts.push(ConditionVerdict {
            name: "C1",
            pass: true,
            margin: f64::INFINITY,
            worst_point: [0.0; 3],
            note: "not applicable: model has no smooth ψ part with (C1) bounds".into(),
        }),
    }

    // (C2)/(C3) apply to the full viscosity through f(z) = φ(z², ·)·z.
    let a3_full: f64 = match (model, &smooth) {
        (_, Some((_, _, _, a3, _))) => *a3,
        (ViscosityModel::ExtendedBingham { a6, .. }, _) => *a6,
        _ => 0.0,
    };
    let mut c2_worst = (f64::INFINITY, [0.0; 3]);
    let mut c3_worst = (f64::INFINITY, [0.0; 3]);
    for &(y2, y3) in &pairs {
        for &x in &xs {
            // f(z) = φ(z²)·z, continuously extended by b(·) at z = 0 for
            // yield models.
            let f_of_z = |z: f64| -> f64 {
                if z == 0.0 {
                    match model {
                        ViscosityModel::Regular(_) => 0.0,
                        ViscosityModel::RegularizedBingham { yield_coef, lambda, .. }
                        | ViscosityModel::ExtendedBingham { yield_coef, lambda, .. } => {
                            if *lambda > 0.0 {
                                0.0
                            } else {
                                yield_coef.eval(y2, y3)
                            }
                        }
                        ViscosityModel::SingularBingham { yield_coef, .. } => {
                            yield_coef.eval(y2, y3)
                        }
                        ViscosityModel::GivenMu { e, lambda, .. } => {
                            if *lambda > 0.0 {
                                0.0
                            } else {
                                e(y2, x)
                            }
                        }
                    }
                } else {
                    self_phi(model, z * z, y2, y3, x) * z
                }
            };
            let zs: Vec<f64> = ys.iter().map(|y| y.sqrt()).collect();
            let fs: Vec<f64> = zs.iter().map(|&z| f_of_z(z)).collect();
            for i in 0..zs.len() {
                for j in (i + 1)..zs.len() {
                    let dz = zs[j] - zs[i];
                    if dz <= 0.0 {
                        continue;
                    }
                    let quot = (fs[j] - fs[i]) / dz;
                    let m2 = quot - a3_full;
                    if m2 < c2_worst.0 {
                        c2_worst = (m2, [zs[i] * zs[i], y2, y3]);
                    }
                    if quot < c3_worst.0 {
                        c3_worst = (quot, [zs[i] * zs[i], y2, y3]);
                    }
                }
            }
        }
    }
    verdicts.push(ConditionVerdict {
        name: "C2",
        pass: c2_worst.0 >= -1e-9,
        margin: c2_worst.0,
        worst_point: c2_worst.1,
        note: format!("[φ(z₁²)z₁−φ(z₂²)z₂]/(z₁−z₂) ≥ a₃ with a₃ = {a3_full}"),
    });
    verdicts.push(ConditionVerdict {
        name: "C3",
        pass: c3_worst.0 > 0.0,
        margin: c3_worst.0,
        worst_point: c3_worst.1,
        note: "z ↦ φ(z²)z strictly increasing (minimal difference quotient)".into(),
    });

    // (C4): 0 ≤ b ≤ a₅ for yield models.
    let c4 = match model {
        ViscosityModel::RegularizedBingham { yield_coef, a5, .. }
        | ViscosityModel::SingularBingham { yield_coef, a5, .. }
        | ViscosityModel::ExtendedBingham { yield_coef, a5, .. } => {
            let mut worst = (f64::INFINITY, [0.0; 3]);
            for &(y2, y3) in &pairs {
                let b = yield_coef.eval(y2, y3);
                for m in [b, a5 - b] {
                    if m < worst.0 {
                        worst = (m, [0.0, y2, y3]);
                    }
                }
            }
            ConditionVerdict {
                name: "C4",
                pass: worst.0 >= -1e-12,
                margin: worst.0,
                worst_point: worst.1,
                note: "0 ≤ b(|E|, μ) ≤ a₅".into(),
            }
        }
        ViscosityModel::GivenMu { e, a5, .. } => {
            let mut worst = (f64::INFINITY, [0.0; 3]);
            for &(y2, _) in &pairs {
                for &x in &xs {
                    let b = e(y2, x);
                    for m in [b, a5 - b] {
                        if m < worst.0 {
                            worst = (m, [0.0, y2, 0.0]);
                        }
                    }
                }
            }
            ConditionVerdict {
                name: "C4",
                pass: worst.0 >= -1e-12,
                margin: worst.0,
                worst_point: worst.1,
                note: "0 ≤ e(|E|, x) ≤ a₅ sampled on the unit square".into(),
            }
        }
        ViscosityModel::Regular(_) => ConditionVerdict {
            name: "C4",
            pass: true,
            margin: f64::INFINITY,
            worst_point: [0.0; 3],
            note: "not applicable: no yield coefficient".into(),
        },
    };
    verdicts.push(c4);

    // (C5): a₆ ≤ b₁ ≤ a₇ for the extended model.
    let c5 = match model {
        ViscosityModel::ExtendedBingham { plastic, a6, a7, .. } => {
            let mut worst = (f64::INFINITY, [0.0; 3]);
            for &(y2, y3) in &pairs {
                let b1 = plastic.eval(y2, y3);
                for m in [b1 - a6, a7 - b1] {
                    if m < worst.0 {
                        worst = (m, [0.0, y2, y3]);
                    }
                }
            }
            ConditionVerdict {
                name: "C5",
                pass: worst.0 >= -1e-12,
                margin: worst.0,
                worst_point: worst.1,
                note: "a₆ ≤ b₁(|E|, μ) ≤ a₇".into(),
            }
        }
        _ => ConditionVerdict {
            name: "C5",
            pass: true,
            margin: f64::INFINITY,
            worst_point: [0.0; 3],
            note: "not applicable: no plastic-viscosity coefficient".into(),
        },
    };
    verdicts.push(c5);

    ConditionReport { verdicts }
}

fn self_phi(model: &ViscosityModel, i: f64, y2: f64, y3: f64, x: [f64; 2]) -> f64 {
    model.eval_phi(i, y2, y3, x).unwrap_or(f64::INFINITY)
}

// ---------------------------------------------------------------------------
// Model definition files
// ---------------------------------------------------------------------------

/// Parses a model definition file: line-oriented `key = value` pairs.
///
/// Keys: `variant` (REGULAR | REGULARIZED_BINGHAM | SINGULAR_BINGHAM |
/// EXTENDED_BINGHAM | GIVEN_MU), bounds `a1` … `a7`, `lambda`,
/// `yield.constant`, `plastic.constant`, per-term coefficients
/// `term.<k>.coef.constant` and shear functions (`term.<k>.shear.constant` or
/// `term.<k>.shear.knots/values/derivs` for a flow-curve spline in γ),
/// μ-parameters `mu.alpha`, `mu.frame_velocity`, `mu.beta`,
/// `mu.mollifier_radius`.  Returns the model plus the μ configuration.
pub fn parse_model(text: &str) -> Result<(ViscosityModel, MuFunction)> {
    use std::collections::BTreeMap;
    let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(Error::Parse {
            line: idx + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        kv.insert(k.trim().to_string(), (idx + 1, v.trim().to_string()));
    }

    let get_f64 = |kv: &BTreeMap<String, (usize, String)>, key: &str| -> Result<Option<f64>> {
        match kv.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Parse { line: *line, message: format!("invalid number `{v}` for `{key}`") }),
        }
    };
    let need = |v: Option<f64>, key: &str| -> Result<f64> {
        v.ok_or_else(|| Error::InvalidConfig(format!("missing required key `{key}`")))
    };
    let get_list = |key: &str| -> Result<Option<Vec<f64>>> {
        match kv.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split_whitespace()
                .map(|t| {
                    t.parse().map_err(|_| Error::Parse {
                        line: *line,
                        message: format!("invalid number `{t}` in `{key}`"),
                    })
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    };

    // μ configuration
    let mut mu = MuFunction::default();
    if let Some(a) = get_f64(&kv, "mu.alpha")? {
        if a < 0.0 {
            return Err(Error::InvalidConfig("mu.alpha must be ≥ 0".into()));
        }
        mu.alpha = a;
    }
    if let Some(b) = get_f64(&kv, "mu.beta")? {
        mu.beta = b;
    }
    if let Some(fv) = get_list("mu.frame_velocity")? {
        if fv.len() != 2 {
            return Err(Error::InvalidConfig("mu.frame_velocity needs 2 components".into()));
        }
        mu.frame_velocity = [fv[0], fv[1]];
    }
    if let Some(r) = get_f64(&kv, "mu.mollifier_radius")? {
        if !(r > 0.0) {
            return Err(Error::InvalidConfig("mollifier radius must be positive".into()));
        }
        mu.mollifier = Some(Mollifier { radius: r, kernel: Kernel::Bump });
    }

    // terms of the smooth part
    let mut terms: Vec<(CoefFn, ShearFn)> = Vec::new();
    for k in 1.. {
        let prefix = format!("term.{k}");
        if !kv.keys().any(|key| key.starts_with(&prefix)) {
            break;
        }
        let coef = CoefFn::Constant(need(
            get_f64(&kv, &format!("{prefix}.coef.constant"))?,
            &format!("{prefix}.coef.constant"),
        )?);
        let shear = if let Some(c) = get_f64(&kv, &format!("{prefix}.shear.constant"))? {
            ShearFn::Constant(c)
        } else {
            let knots = get_list(&format!("{prefix}.shear.knots"))?
                .ok_or_else(|| Error::InvalidConfig(format!("missing `{prefix}.shear.*`")))?;
            let values = get_list(&format!("{prefix}.shear.values"))?
                .ok_or_else(|| Error::InvalidConfig(format!("missing `{prefix}.shear.values`")))?;
            let derivs = get_list(&format!("{prefix}.shear.derivs"))?
                .ok_or_else(|| Error::InvalidConfig(format!("missing `{prefix}.shear.derivs`")))?;
            if knots.first() != Some(&0.0) {
                return Err(Error::InvalidConfig("flow-curve knots must start at γ = 0".into()));
            }
            ShearFn::SplineGamma(HermiteSpline::new(knots, values, derivs)?)
        };
        terms.push((coef, shear));
    }

    let smooth = |terms: Vec<(CoefFn, ShearFn)>| -> Result<RegularModel> {
        if terms.is_empty() {
            return Err(Error::InvalidConfig("model needs at least one `term.k.*`".into()));
        }
        Ok(RegularModel {
            terms,
            a1: need(get_f64(&kv, "a1")?, "a1")?,
            a2: need(get_f64(&kv, "a2")?, "a2")?,
            a3: need(get_f64(&kv, "a3")?, "a3")?,
            a4: need(get_f64(&kv, "a4")?, "a4")?,
        })
    };

    let variant = kv
        .get("variant")
        .ok_or_else(|| Error::InvalidConfig("missing required key `variant`".into()))?
        .1
        .clone();
    let model = match variant.as_str() {
        "REGULAR" => ViscosityModel::Regular(smooth(terms)?),
        "REGULARIZED_BINGHAM" | "SINGULAR_BINGHAM" => {
            let b = need(get_f64(&kv, "yield.constant")?, "yield.constant")?;
            let a5 = need(get_f64(&kv, "a5")?, "a5")?;
            if !(b >= 0.0 && b <= a5) {
                return Err(Error::InvalidConfig(format!(
                    "yield coefficient {b} violates 0 ≤ b ≤ a₅ = {a5}"
                )));
            }
            let psi = smooth(terms)?;
            if variant == "REGULARIZED_BINGHAM" {
                let lambda = need(get_f64(&kv, "lambda")?, "lambda")?;
                if !(lambda > 0.0) {
                    return Err(Error::InvalidConfig("lambda must be > 0".into()));
                }
                ViscosityModel::RegularizedBingham {
                    yield_coef: CoefFn::Constant(b),
                    a5,
                    psi,
                    lambda,
                }
            } else {
                ViscosityModel::SingularBingham { yield_coef: CoefFn::Constant(b), a5, psi }
            }
        }
        "EXTENDED_BINGHAM" => {
            let b = need(get_f64(&kv, "yield.constant")?, "yield.constant")?;
            let a5 = need(get_f64(&kv, "a5")?, "a5")?;
            let b1 = need(get_f64(&kv, "plastic.constant")?, "plastic.constant")?;
            let a6 = need(get_f64(&kv, "a6")?, "a6")?;
            let a7 = need(get_f64(&kv, "a7")?, "a7")?;
            if !(b >= 0.0 && b <= a5) {
                return Err(Error::InvalidConfig(format!(
                    "yield coefficient {b} violates 0 ≤ b ≤ a₅ = {a5}"
                )));
            }
            if !(a6 > 0.0 && b1 >= a6 && b1 <= a7) {
                return Err(Error::InvalidConfig(format!(
                    "plastic viscosity {b1} violates a₆ ≤ b₁ ≤ a₇ with a₆ = {a6} > 0, a₇ = {a7}"
                )));
            }
            ViscosityModel::ExtendedBingham {
                yield_coef: CoefFn::Constant(b),
                a5,
                plastic: CoefFn::Constant(b1),
                a6,
                a7,
                lambda: get_f64(&kv, "lambda")?.unwrap_or(0.0),
            }
        }
        "GIVEN_MU" => {
            let e = need(get_f64(&kv, "yield.constant")?, "yield.constant")?;
            let a5 = need(get_f64(&kv, "a5")?, "a5")?;
            if !(e >= 0.0 && e <= a5) {
                return Err(Error::InvalidConfig(format!(
                    "coefficient e = {e} violates 0 ≤ e ≤ a₅ = {a5}"
                )));
            }
            let psi = smooth(terms)?;
            let psi2 = psi.clone();
            ViscosityModel::GivenMu {
                e: Arc::new(move |_, _| e),
                a5,
                psi1: Arc::new(move |i, abs_e, _| psi.eval(i, abs_e, 0.0)),
                dpsi1: Some(Arc::new(move |i, abs_e, _| psi2.deriv(i, abs_e, 0.0))),
                lambda: get_f64(&kv, "lambda")?.unwrap_or(0.0),
            }
        }
        other => {
            return Err(Error::InvalidConfig(format!("unknown model variant `{other}`")));
        }
    };

    Ok((model, mu))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain_mu() -> MuFunction {
        MuFunction { alpha: 0.0, ..MuFunction::default() }
    }

    #[test]
    fn mu_orthogonal_parallel_oblique() {
        let mu = plain_mu();
        assert!(mu.eval([1.0, 0.0], [0.0, 2.0]).unwrap().abs() < 1e-15);
        assert!((mu.eval([3.0, 4.0], [6.0, 8.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((mu.eval([1.0, 1.0], [1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mu_alpha_regularization_at_rest() {
        let mu = MuFunction { alpha: 0.1, ..MuFunction::default() };
        let v = mu.eval([0.0, 0.0], [1.0, 0.0]).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn mu_rejects_zero_field_and_stays_in_range() {
        use rand::{Rng, SeedableRng};
        let mu = MuFunction { alpha: 0.05, frame_velocity: [0.3, -0.2], ..MuFunction::default() };
        assert!(mu.eval([1.0, 2.0], [0.0, 0.0]).is_err());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let u = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let e = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            if e[0] == 0.0 && e[1] == 0.0 {
                continue;
            }
            let v = mu.eval(u, e).unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn mollified_mu_on_constant_fields_equals_pointwise() {
        let mu = MuFunction {
            alpha: 0.05,
            mollifier: Some(Mollifier { radius: 0.1, kernel: Kernel::Bump }),
            ..MuFunction::default()
        };
        let u = |_: [f64; 2]| [1.0, 2.0];
        let e = |_: [f64; 2]| [0.5, -1.0];
        let m1 = mu.eval_mollified(&u, &e, [0.3, 0.4]).unwrap();
        let m2 = mu.eval([1.0, 2.0], [0.5, -1.0]).unwrap();
        assert!((m1 - m2).abs() < 1e-14);
    }

    #[test]
    fn mollified_mu_small_radius_limit() {
        // Smooth velocity field: P(u)(x) → u(x) as a → 0, error O(a²).
        let u = |p: [f64; 2]| [p[0] * p[0] + p[1], p[0] - p[1] * p[1]];
        let e = |_: [f64; 2]| [1.0, 1.0];
        let x = [0.4, 0.6];
        let mut prev_err = f64::INFINITY;
        for a in [0.2, 0.1, 0.05] {
            let mu = MuFunction {
                alpha: 0.05,
                mollifier: Some(Mollifier { radius: a, kernel: Kernel::Bump }),
                ..MuFunction::default()
            };
            let m = mu.eval_mollified(&u, &e, x).unwrap();
            let exact = MuFunction { alpha: 0.05, ..MuFunction::default() }
                .eval(u(x), e(x))
                .unwrap();
            let err = (m - exact).abs();
            // Error must drop roughly by 4 per halving (O(a²)).
            assert!(err < prev_err * 0.5 + 1e-15, "a={a}: err {err} vs prev {prev_err}");
            prev_err = err;
        }
        assert!(prev_err < 1e-3);
    }

    #[test]
    fn mollified_mu_ignores_far_perturbations() {
        let base = |_: [f64; 2]| [1.0, 0.0];
        let perturbed = |p: [f64; 2]| {
            if p[0] > 0.8 {
                [100.0, -50.0]
            } else {
                [1.0, 0.0]
            }
        };
        let e = |_: [f64; 2]| [1.0, 3.0];
        let mu = MuFunction {
            alpha: 0.05,
            mollifier: Some(Mollifier { radius: 0.1, kernel: Kernel::Bump }),
            ..MuFunction::default()
        };
        let x = [0.3, 0.3]; // ball B(x, 0.1) avoids {x > 0.8}
        let a = mu.eval_mollified(&base, &e, x).unwrap();
        let b = mu.eval_mollified(&perturbed, &e, x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn phi_regularized_bingham_values() {
        let model = ViscosityModel::RegularizedBingham {
            yield_coef: CoefFn::Constant(1.0),
            a5: 1.0,
            psi: RegularModel::constant(1.0),
            lambda: 1.0,
        };
        let phi0 = model.eval_phi(0.0, 1.0, 0.5, [0.0; 2]).unwrap();
        assert!((phi0 - 2.0).abs() < 1e-14);
        let phi3 = model.eval_phi(3.0, 1.0, 0.5, [0.0; 2]).unwrap();
        assert!((phi3 - 1.5).abs() < 1e-14);
    }

    #[test]
    fn phi_is_mu_independent_at_zero_field() {
        use rand::{Rng, SeedableRng};
        let model = ViscosityModel::RegularizedBingham {
            yield_coef: CoefFn::Custom(Arc::new(|e, m| 0.5 * e.min(2.0) * (1.0 + m))),
            a5: 2.0,
            psi: RegularModel {
                terms: vec![(
                    CoefFn::Custom(Arc::new(|e, m| 1.0 + e.min(1.0) * m)),
                    ShearFn::Constant(1.0),
                )],
                a1: 1.0,
                a2: 2.0,
                a3: 1.0,
                a4: 0.1,
            },
            lambda: 0.5,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let base = model.eval_phi(1.3, 0.0, 0.0, [0.0; 2]).unwrap();
        for _ in 0..50 {
            let mu: f64 = rng.gen_range(0.0..1.0);
            let v = model.eval_phi(1.3, 0.0, mu, [0.0; 2]).unwrap();
            assert_eq!(v, base);
        }
    }

    #[test]
    fn singular_bingham_rejects_zero_invariant() {
        let model = ViscosityModel::SingularBingham {
            yield_coef: CoefFn::Constant(1.0),
            a5: 1.0,
            psi: RegularModel::constant(1.0),
        };
        assert!(model.eval_phi(0.0, 1.0, 0.5, [0.0; 2]).is_err());
        assert!((model.eval_phi(4.0, 1.0, 0.5, [0.0; 2]).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn conditions_constant_model_passes() {
        let model = ViscosityModel::Regular(RegularModel::constant(2.0));
        let report = check_conditions(&model, 50);
        assert!(report.all_pass(), "{report:#?}");
    }

    #[test]
    fn conditions_catch_decreasing_flow_curve() {
        // φ(y₁) = (1 + y₁)^{-1}: z·φ(z²) = z/(1+z²) decreases past z = 1,
        // so (C2) and (C3) must fail.
        let model = ViscosityModel::Regular(RegularModel {
            terms: vec![(
                CoefFn::Constant(1.0),
                ShearFn::Custom {
                    f: Arc::new(|i| 1.0 / (1.0 + i)),
                    df: Some(Arc::new(|i| -1.0 / ((1.0 + i) * (1.0 + i)))),
                },
            )],
            a1: 1e-6,
            a2: 1.0,
            a3: 1e-6,
            a4: 0.25,
        });
        let report = check_conditions(&model, 200);
        let c2 = report.verdicts.iter().find(|v| v.name == "C2").unwrap();
        let c3 = report.verdicts.iter().find(|v| v.name == "C3").unwrap();
        assert!(!c2.pass);
        assert!(!c3.pass);
        // the violation is found around z ≈ 1, i.e. y₁ ≈ 1
        assert!(c3.worst_point[0] > 0.05 && c3.worst_point[0] < 20.0);
    }

    #[test]
    fn regularized_yield_part_satisfies_monotonicity() {
        // φ(y) = ½ h (λ+y)^{-1/2} gives φ + 2φ′y = ½h(λ+y)^{-1/2}[1 − y/(λ+y)] > 0.
        let (h, lambda): (f64, f64) = (3.0, 0.25);
        for y in [0.0, 0.1, 1.0, 10.0, 1e4] {
            let phi = 0.5 * h / (lambda + y).sqrt();
            let dphi = -0.25 * h * (lambda + y).powf(-1.5);
            let expr = phi + 2.0 * dphi * y;
            let closed = 0.5 * h / (lambda + y).sqrt() * (1.0 - y / (lambda + y));
            assert!((expr - closed).abs() < 1e-12);
            assert!(expr > 0.0);
        }
    }

    #[test]
    fn spline_flow_curve_round_trip() {
        let s = HermiteSpline::new(
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.8, 0.7],
            vec![-0.3, -0.15, -0.05],
        )
        .unwrap();
        // interpolation at the knots
        assert!((s.eval(0.0) - 1.0).abs() < 1e-15);
        assert!((s.eval(1.0) - 0.8).abs() < 1e-15);
        assert!((s.eval(2.0) - 0.7).abs() < 1e-15);
        // linear extension beyond the last knot
        assert!((s.eval(3.0) - (0.7 - 0.05)).abs() < 1e-15);
        // derivative consistency (finite differences)
        for g in [0.3, 0.9, 1.4, 1.9] {
            let (_, d) = s.eval_with_deriv(g);
            let h = 1e-6;
            let fd = (s.eval(g + h) - s.eval(g - h)) / (2.0 * h);
            assert!((d - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn parse_model_file() {
        let text = "
            variant = REGULARIZED_BINGHAM
            lambda = 0.1
            a1 = 1.0
            a2 = 2.0
            a3 = 0.875
            a4 = 0.25
            a5 = 2.0
            yield.constant = 1.5
            term.1.coef.constant = 1.0
            term.1.shear.knots = 0.0 1.0 2.0
            term.1.shear.values = 2.0 1.6 1.4
            term.1.shear.derivs = -0.5 -0.3 -0.1
            mu.alpha = 0.01
            mu.frame_velocity = 0.5 0.0
        ";
        let (model, mu) = parse_model(text).unwrap();
        assert!((mu.alpha - 0.01).abs() < 1e-15);
        assert_eq!(mu.frame_velocity, [0.5, 0.0]);
        match &model {
            ViscosityModel::RegularizedBingham { lambda, .. } => {
                assert!((lambda - 0.1).abs() < 1e-15)
            }
            other => panic!("wrong variant {other:?}"),
        }
        // φ(0) = 1.5/√0.1 + spline(γ=0) = 1.5/√0.1 + 2
        let phi = model.eval_phi(0.0, 1.0, 0.3, [0.0; 2]).unwrap();
        assert!((phi - (1.5 / 0.1f64.sqrt() + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn parse_model_rejects_bad_input() {
        assert!(parse_model("variant = NOPE").is_err());
        // yield above a5
        let text = "
            variant = SINGULAR_BINGHAM
            a1 = 1
            a2 = 2
            a3 = 1
            a4 = 1
            a5 = 1.0
            yield.constant = 2.0
            term.1.coef.constant = 1.0
            term.1.shear.constant = 1.0
        ";
        assert!(parse_model(text).is_err());
        // malformed line reports its number
        match parse_model("variant = REGULAR\nbogus line\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
