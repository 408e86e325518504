//! Constitutive laws: the p-Laplace-type conductivity, thermal conductivity,
//! the Joule source and its bounded regularization, the current–voltage
//! characteristic, and numerical checks of the structural hypotheses.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// `η(x, t, u, ĵ)`.
pub type EtaFn = Arc<dyn Fn([f64; 2], f64, f64, [f64; 2]) -> f64 + Send + Sync>;
/// `a(u, ξ)`.
pub type FluxCoeffFn = Arc<dyn Fn(f64, [f64; 2]) -> f64 + Send + Sync>;

/// A bounded scalar map of temperature, used for `σ0` and `κ`.
#[derive(Clone)]
pub enum Profile {
    Constant(f64),
    /// `lower + (upper - lower) / (1 + exp(-u))`.
    Saturating { lower: f64, upper: f64 },
    /// Piecewise-linear through `(u, value)` points, clamped outside.
    Table(Vec<(f64, f64)>),
    /// Any continuous map with declared bounds.
    Custom {
        f: ScalarFn,
        lower: f64,
        upper: f64,
    },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Profile::Saturating { lower, upper } => f
                .debug_struct("Saturating")
                .field("lower", lower)
                .field("upper", upper)
                .finish(),
            Profile::Table(points) => f.debug_tuple("Table").field(points).finish(),
            Profile::Custom { lower, upper, .. } => f
                .debug_struct("Custom")
                .field("lower", lower)
                .field("upper", upper)
                .finish_non_exhaustive(),
        }
    }
}

impl PartialEq for Profile {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Profile::Constant(a), Profile::Constant(b)) => a == b,
            (
                Profile::Saturating { lower, upper },
                Profile::Saturating {
                    lower: l2,
                    upper: u2,
                },
            ) => lower == l2 && upper == u2,
            (Profile::Table(a), Profile::Table(b)) => a == b,
            (
                Profile::Custom { f, lower, upper },
                Profile::Custom {
                    f: f2,
                    lower: l2,
                    upper: u2,
                },
            ) => Arc::ptr_eq(f, f2) && lower == l2 && upper == u2,
            _ => false,
        }
    }
}

impl Profile {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Saturating { lower, upper } => lower + (upper - lower) / (1.0 + (-u).exp()),
            Profile::Table(points) => {
                let first = points[0];
                let last = points[points.len() - 1];
                if u <= first.0 {
                    return first.1;
                }
                if u >= last.0 {
                    return last.1;
                }
                let idx = points.partition_point(|&(x, _)| x <= u);
                let (x0, y0) = points[idx - 1];
                let (x1, y1) = points[idx];
                y0 + (y1 - y0) * (u - x0) / (x1 - x0)
            }
            Profile::Custom { f, .. } => f(u),
        }
    }

    /// Declared `(lower, upper)` bounds.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Profile::Constant(c) => (*c, *c),
            Profile::Saturating { lower, upper } => (*lower, *upper),
            Profile::Table(points) => points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, p| {
                (acc.0.min(p.1), acc.1.max(p.1))
            }),
            Profile::Custom { lower, upper, .. } => (*lower, *upper),
        }
    }

    pub fn shape_name(&self) -> &'static str {
        match self {
            Profile::Constant(_) => "constant",
            Profile::Saturating { .. } => "saturating",
            Profile::Table(_) => "table",
            Profile::Custom { .. } => "custom",
        }
    }

    /// Flat parameter list as used by the run configuration.
    pub fn params(&self) -> Vec<f64> {
        match self {
            Profile::Constant(c) => vec![*c],
            Profile::Saturating { lower, upper } => vec![*lower, *upper],
            Profile::Table(points) => points.iter().flat_map(|&(x, y)| [x, y]).collect(),
            Profile::Custom { lower, upper, .. } => vec![*lower, *upper],
        }
    }

    pub fn from_shape(shape: &str, params: &[f64]) -> std::result::Result<Profile, String> {
        match shape {
            "constant" => match params {
                [c] => Ok(Profile::Constant(*c)),
                _ => Err(format!("constant shape takes 1 parameter, got {}", params.len())),
            },
            "saturating" => match params {
                [lower, upper] => Ok(Profile::Saturating {
                    lower: *lower,
                    upper: *upper,
                }),
                _ => Err(format!(
                    "saturating shape takes 2 parameters (lower, upper), got {}",
                    params.len()
                )),
            },
            "table" => {
                if params.is_empty() || params.len() % 2 != 0 {
                    return Err(format!(
                        "table shape takes a non-empty list of (u, value) pairs, got {} numbers",
                        params.len()
                    ));
                }
                Ok(Profile::Table(
                    params.chunks(2).map(|c| (c[0], c[1])).collect(),
                ))
            }
            other => Err(format!(
                "unknown shape '{other}' (expected constant, saturating or table)"
            )),
        }
    }

    fn check(&self, name: &str, issues: &mut Vec<String>) {
        if let Profile::Table(points) = self {
            if points.is_empty() {
                issues.push(format!("{name}: table must have at least one point"));
                return;
            }
            if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                issues.push(format!("{name}: table abscissae must be strictly increasing"));
            }
        }
        let (lo, hi) = self.bounds();
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            issues.push(format!(
                "{name}: bounds must satisfy 0 < lower <= upper < inf (got {lo}, {hi})"
            ));
            return;
        }
        let slack = 1e-12 * hi;
        for i in 0..=200 {
            let u = -50.0 + 0.5 * i as f64;
            let v = self.eval(u);
            if !(v >= lo - slack && v <= hi + slack) {
                issues.push(format!(
                    "{name}: value {v} at u = {u} outside declared bounds [{lo}, {hi}]"
                ));
                break;
            }
        }
    }
}

#[derive(Clone)]
pub enum Eta {
    Constant(f64),
    Custom(EtaFn),
}

impl fmt::Debug for Eta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Eta::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Eta::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl PartialEq for Eta {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Eta::Constant(a), Eta::Constant(b)) => a == b,
            (Eta::Custom(a), Eta::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// Material and boundary parameters of the thermistor model.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstitutiveSpec {
    pub p: f64,
    pub delta: f64,
    pub sigma0: Profile,
    pub kappa: Profile,
    pub eta1: f64,
    pub eta: Eta,
    /// `None` means the default `a(u, ξ) = σ(u, |ξ|)`.
    pub a_coeff: Option<FluxCoeff>,
    pub g: f64,
    pub h: f64,
}

#[derive(Clone)]
pub struct FluxCoeff(pub FluxCoeffFn);

impl fmt::Debug for FluxCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FluxCoeff(..)")
    }
}

impl PartialEq for FluxCoeff {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl ConstitutiveSpec {
    /// Ohmic, constant-coefficient material with a constant loss factor.
    pub fn ohmic(sigma0: f64, kappa: f64, eta: f64, g: f64, h: f64) -> Self {
        ConstitutiveSpec {
            p: 2.0,
            delta: 0.0,
            sigma0: Profile::Constant(sigma0),
            kappa: Profile::Constant(kappa),
            eta1: eta,
            eta: Eta::Constant(eta),
            a_coeff: None,
            g,
            h,
        }
    }

    /// Lists every violated invariant; empty when the spec is valid.
    pub fn issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if !(self.p > 1.0 && self.p.is_finite()) {
            issues.push(format!("p must lie in (1, inf) (got {})", self.p));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            issues.push(format!("delta must be >= 0 (got {})", self.delta));
        } else if self.p < 2.0 && self.delta == 0.0 {
            issues.push("delta must be > 0 when p < 2".to_string());
        }
        self.sigma0.check("sigma0", &mut issues);
        self.kappa.check("kappa", &mut issues);
        if !(self.eta1 >= 0.0 && self.eta1.is_finite()) {
            issues.push(format!("eta1 must be >= 0 (got {})", self.eta1));
        }
        if let Eta::Constant(e) = self.eta {
            if !(0.0..=self.eta1).contains(&e) {
                issues.push(format!("eta = {e} must lie in [0, eta1 = {}]", self.eta1));
            }
        }
        if !(self.g > 0.0 && self.g.is_finite()) {
            issues.push(format!("g must be > 0 (got {})", self.g));
        }
        if !self.h.is_finite() {
            issues.push(format!("h must be finite (got {})", self.h));
        }
        issues
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues.join("; ")))
        }
    }

    pub fn is_singular(&self) -> bool {
        self.p < 2.0 && self.delta == 0.0
    }

    /// `(δ + τ²)^((p-2)/2)`.
    pub fn gradient_factor(&self, tau: f64) -> Result<f64> {
        let base = self.delta + tau * tau;
        if self.p == 2.0 {
            return Ok(1.0);
        }
        if base == 0.0 && self.p < 2.0 {
            return Err(Error::Singular(format!(
                "sigma with p = {} < 2 and delta = 0 at zero gradient",
                self.p
            )));
        }
        Ok(base.powf(0.5 * (self.p - 2.0)))
    }

    pub fn sigma(&self, u: f64, tau: f64) -> Result<f64> {
        Ok(self.sigma0.eval(u) * self.gradient_factor(tau)?)
    }

    pub fn kappa(&self, u: f64) -> f64 {
        self.kappa.eval(u)
    }

    fn flux_coefficient(&self, u: f64, xi: [f64; 2]) -> Result<f64> {
        match &self.a_coeff {
            None => self.sigma(u, norm(xi)),
            Some(a) => Ok((a.0)(u, xi)),
        }
    }

    /// Joule source `η(x, t, u, -a(u, -ξ) ξ) σ(u, |ξ|) |ξ|²`.
    pub fn source_f(&self, x: [f64; 2], t: f64, u: f64, xi: [f64; 2]) -> Result<f64> {
        let tau2 = xi[0] * xi[0] + xi[1] * xi[1];
        let eta = match &self.eta {
            Eta::Constant(e) => *e,
            Eta::Custom(f) => {
                let a = self.flux_coefficient(u, [-xi[0], -xi[1]])?;
                f(x, t, u, [-a * xi[0], -a * xi[1]])
            }
        };
        if eta == 0.0 || tau2 == 0.0 {
            // still surface the singular case
            self.sigma(u, tau2.sqrt())?;
            return Ok(0.0);
        }
        Ok(eta * self.sigma(u, tau2.sqrt())? * tau2)
    }

    /// `f / (1 + ε f)`.
    pub fn source_f_eps(&self, x: [f64; 2], t: f64, u: f64, xi: [f64; 2], eps: f64) -> Result<f64> {
        let f = self.source_f(x, t, u, xi)?;
        regularize(f, eps)
    }

    /// Current–voltage characteristic `I = σ0(u) (δ + V²)^((p-2)/2) V`.
    pub fn iv_characteristic(&self, u: f64, voltage: f64) -> Result<f64> {
        if !(voltage >= 0.0) {
            return Err(Error::Domain(format!("voltage must be >= 0 (got {voltage})")));
        }
        if voltage == 0.0 {
            self.gradient_factor(0.0)?;
            return Ok(0.0);
        }
        Ok(self.sigma(u, voltage)? * voltage)
    }

    /// The `δ → 0` limit of the characteristic, `σ0(u) V^(p-1)`.
    pub fn iv_limit(&self, u: f64, voltage: f64) -> f64 {
        self.sigma0.eval(u) * voltage.powf(self.p - 1.0)
    }
}

pub fn regularize(f: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be > 0 (got {eps})")));
    }
    Ok(f / (1.0 + eps * f))
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// `(δ + |ξ|²)^((p-2)/2) ξ`, extended by zero at `ξ = 0`.
pub fn p_flux(xi: [f64; 2], p: f64, delta: f64) -> [f64; 2] {
    let n2 = dot(xi, xi);
    if n2 == 0.0 {
        return [0.0, 0.0];
    }
    let w = if p == 2.0 {
        1.0
    } else {
        (delta + n2).powf(0.5 * (p - 2.0))
    };
    [w * xi[0], w * xi[1]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityGap {
    pub lhs: f64,
    pub lower_bound: f64,
}

/// Monotonicity gap of the p-flux and its explicit lower bound, with `δ0 = δ`
/// on the `1 < p ≤ 2` branch.
pub fn monotonicity_gap(xi: [f64; 2], xibar: [f64; 2], p: f64, delta: f64) -> MonotonicityGap {
    let diff = sub(xi, xibar);
    let d2 = dot(diff, diff);
    if d2 == 0.0 {
        return MonotonicityGap {
            lhs: 0.0,
            lower_bound: 0.0,
        };
    }
    let lhs = dot(sub(p_flux(xi, p, delta), p_flux(xibar, p, delta)), diff);
    let lower_bound = if p <= 2.0 {
        let denom = delta + dot(xi, xi) + dot(xibar, xibar);
        (p - 1.0) * d2 / denom.powf(0.5 * (2.0 - p))
    } else {
        let c = f64::min(0.5, 2f64.powf(2.0 - p));
        c * d2.powf(0.5 * p)
    };
    MonotonicityGap { lhs, lower_bound }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub scalar_monotone: bool,
    pub vector_monotone: bool,
    /// A pair `(τ, τ̄)` with `(a(τ)τ − a(τ̄)τ̄)(τ − τ̄) ≤ 0`, if one was found.
    pub witness: Option<(f64, f64)>,
}

impl EquivalenceReport {
    /// Both monotonicity statements hold on every sample.
    pub fn holds(&self) -> bool {
        self.scalar_monotone && self.vector_monotone
    }

    /// The two statements agree, as they must.
    pub fn consistent(&self) -> bool {
        self.scalar_monotone == self.vector_monotone
    }
}

/// Samples the scalar and vector strict-monotonicity statements for the
/// flux `τ ↦ a(τ) τ` on `τ ∈ [0, tau_max]`.
pub fn scalar_vector_equivalence_check(
    a: impl Fn(f64) -> f64,
    samples: usize,
    tau_max: f64,
    seed: u64,
) -> EquivalenceReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scalar_monotone = true;
    let mut vector_monotone = true;
    let mut witness = None;

    // deterministic scan for a decreasing flux pair
    let grid = 4096;
    let mut prev = (0.0, 0.0);
    for i in 1..=grid {
        let tau = tau_max * i as f64 / grid as f64;
        let flux = a(tau) * tau;
        if (flux - prev.1) * (tau - prev.0) <= 0.0 {
            scalar_monotone = false;
            witness.get_or_insert((tau, prev.0));
        }
        prev = (tau, flux);
    }

    for i in 0..samples {
        let tau = rng.gen::<f64>() * tau_max;
        let taubar = rng.gen::<f64>() * tau_max;
        if tau == taubar {
            continue;
        }
        let s = (a(tau) * tau - a(taubar) * taubar) * (tau - taubar);
        if !(s > 0.0) {
            scalar_monotone = false;
            witness.get_or_insert((tau, taubar));
        }
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        // every other draw is collinear
        let thetabar = if i % 2 == 0 {
            theta
        } else {
            rng.gen::<f64>() * std::f64::consts::TAU
        };
        let xi = [tau * theta.cos(), tau * theta.sin()];
        let xibar = [taubar * thetabar.cos(), taubar * thetabar.sin()];
        let fa = a(tau);
        let fb = a(taubar);
        let v = dot(
            sub([fa * xi[0], fa * xi[1]], [fb * xibar[0], fb * xibar[1]]),
            sub(xi, xibar),
        );
        if !(v > 0.0) {
            vector_monotone = false;
        }
    }
    // the collinear scan pair is also a vector counterexample
    if let Some((tau, taubar)) = witness {
        let v = (a(tau) * tau - a(taubar) * taubar) * (tau - taubar);
        if !(v > 0.0) {
            vector_monotone = false;
        }
    }

    EquivalenceReport {
        scalar_monotone,
        vector_monotone,
        witness,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H1Constants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Finds constants with `c1 τ^p − c2 ≤ σ(u, τ) τ²` and
/// `σ(u, τ) ≤ c3 (1 + τ²)^((p-2)/2)` on `τ ∈ [0, tau_max]`, then re-checks
/// them on a fresh random sample of `(u, τ)`.
pub fn h1_witness(spec: &ConstitutiveSpec, tau_max: f64, samples: usize, seed: u64) -> Result<H1Constants> {
    spec.validate()?;
    let (s_lo, s_hi) = spec.sigma0.bounds();
    let p = spec.p;
    let factor = |tau: f64| -> f64 {
        if p == 2.0 {
            1.0
        } else {
            (spec.delta + tau * tau).powf(0.5 * (p - 2.0))
        }
    };
    let weight = |tau: f64| -> f64 {
        if p == 2.0 {
            1.0
        } else {
            (1.0 + tau * tau).powf(0.5 * (p - 2.0))
        }
    };
    let grid = samples.max(1000);
    let taus: Vec<f64> = (1..=grid).map(|i| tau_max * i as f64 / grid as f64).collect();

    // c1 from the large-τ ratio σ τ² / τ^p on τ ≥ 1
    let ratio = |tau: f64| factor(tau) * tau.powf(2.0 - p);
    let mut c1 = taus
        .iter()
        .filter(|&&t| t >= 1.0)
        .map(|&t| ratio(t))
        .fold(f64::INFINITY, f64::min);
    if !c1.is_finite() {
        c1 = ratio(tau_max);
    }
    c1 = s_lo * c1.min(1.0);
    let exact_power = p == 2.0 || (spec.delta == 0.0 && p >= 2.0);
    if exact_power {
        // σ τ² ≥ σ* τ^p holds identically
        c1 = s_lo;
    }
    let mut c2 = taus
        .iter()
        .chain(std::iter::once(&0.0))
        .map(|&t| c1 * t.powf(p) - s_lo * factor(t) * t * t)
        .fold(0.0, f64::max);
    let mut c3 = taus
        .iter()
        .chain(std::iter::once(&0.0))
        .map(|&t| s_hi * factor(t) / weight(t))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    if exact_power {
        c2 = 0.0;
    } else {
        // grid-to-continuum margin
        c2 += 1e-6 * (1.0 + c2);
    }
    if p != 2.0 {
        c3 *= 1.0 + 1e-9;
    }
    let constants = H1Constants { c1, c2, c3 };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let u = rng.gen_range(-20.0..20.0);
        let tau = rng.gen::<f64>() * tau_max;
        let s = spec.sigma(u, tau)?;
        let lower = c1 * tau.powf(p) - c2;
        let upper = c3 * weight(tau);
        let slack = 1e-12 * (1.0 + (s * tau * tau).abs());
        if lower > s * tau * tau + slack || s > upper * (1.0 + 1e-12) {
            return Err(Error::Structural(format!(
                "H1 bounds fail at u = {u}, tau = {tau}: sigma = {s}, constants {constants:?}"
            )));
        }
    }
    Ok(constants)
}
