//! Discrete norms and the instrumentation for ε-uniform a-priori bounds.
//!
//! Field norms use nodal (lumped) quadrature, gradient norms the exact
//! one-point rule for P1, and time integrals the right-endpoint rectangle
//! rule on the step grid, matching backward Euler.

use std::fmt;

use crate::constitutive::ConstitutiveSpec;
use crate::coupling::Trajectory;
use crate::error::{Error, Result};
use crate::fem::{lumped_mass, ScalarField};
use crate::mesh::Mesh;

/// Spatial dimension; the solver is two-dimensional.
pub const DIM: f64 = 2.0;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("lambda must lie in (0, 1) (got {lambda})")))
    }
}

/// `Φ_λ(s) = (1 − (1+|s|)^(−λ)) sign(s)` with `sign(0) = 0`.
pub fn phi_lambda(s: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - (1.0 + s.abs()).powf(-lambda)) * s.signum())
}

/// `Φ_λ'(s) = λ (1+|s|)^(−1−λ)`.
pub fn phi_lambda_derivative(s: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(lambda * (1.0 + s.abs()).powf(-1.0 - lambda))
}

/// `Ψ_λ(s) = |s| + (1 − (1+|s|)^(1−λ)) / (1−λ)`, an antiderivative of `Φ_λ`.
pub fn psi_lambda(s: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let a = s.abs();
    // (1 - (1+a)^(1-λ)) computed as -expm1((1-λ) ln(1+a)) to keep small |s| accurate
    Ok(a - ((1.0 - lambda) * a.ln_1p()).exp_m1() / (1.0 - lambda))
}

/// The claimed lower bound `|s|/2 − 2^((1−λ)/2) / (1−λ)` on `Ψ_λ`.
pub fn psi_lambda_lower_bound(s: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(0.5 * s.abs() - 2f64.powf(0.5 * (1.0 - lambda)) / (1.0 - lambda))
}

/// `λ = (n + 2 − q(n+1)) / n`.
pub fn lambda_from_q(q: f64) -> f64 {
    (DIM + 2.0 - q * (DIM + 1.0)) / DIM
}

/// Lumped `L^p` norm, `(Σ_i m_i |v_i|^p)^(1/p)`.
pub fn lp_norm(mesh: &Mesh, field: &ScalarField, p: f64) -> f64 {
    lp_norm_with(&lumped_mass(mesh), field, p)
}

pub(crate) fn lp_norm_with(weights: &[f64], field: &ScalarField, p: f64) -> f64 {
    let s: f64 = weights
        .iter()
        .zip(&field.values)
        .map(|(m, v)| m * v.abs().powf(p))
        .sum();
    s.powf(1.0 / p)
}

/// `(Σ_K |∇v|^p |K|)^(1/p)`, exact for P1.
pub fn w1p_seminorm(mesh: &Mesh, field: &ScalarField, p: f64) -> f64 {
    let s: f64 = (0..mesh.num_triangles())
        .map(|k| {
            let geo = mesh.triangle_geometry(k);
            let g = geo.gradient(field.triangle_values(mesh, k));
            g[0].hypot(g[1]).powf(p) * geo.area
        })
        .sum();
    s.powf(1.0 / p)
}

/// `(‖v‖_p^p + |v|_{1,p}^p)^(1/p)`.
pub fn w1p_norm(mesh: &Mesh, field: &ScalarField, p: f64) -> f64 {
    (lp_norm(mesh, field, p).powf(p) + w1p_seminorm(mesh, field, p).powf(p)).powf(1.0 / p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialNorm {
    Lp(f64),
    W1pSeminorm(f64),
    W1p(f64),
}

impl SpatialNorm {
    pub fn eval(self, mesh: &Mesh, field: &ScalarField) -> f64 {
        match self {
            SpatialNorm::Lp(p) => lp_norm(mesh, field, p),
            SpatialNorm::W1pSeminorm(p) => w1p_seminorm(mesh, field, p),
            SpatialNorm::W1p(p) => w1p_norm(mesh, field, p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeExponent {
    Finite(f64),
    Infinity,
}

/// Bochner norm of a time series of fields. For finite exponents `fields`
/// holds the values at `t_1, …, t_M`; the maximum is taken over every sample.
pub fn bochner_norm(mesh: &Mesh, fields: &[ScalarField], dt: f64, spatial: SpatialNorm, time: TimeExponent) -> f64 {
    let norms = fields.iter().map(|f| spatial.eval(mesh, f));
    match time {
        TimeExponent::Infinity => norms.fold(0.0, f64::max),
        TimeExponent::Finite(r) => norms.map(|n| dt * n.powf(r)).sum::<f64>().powf(1.0 / r),
    }
}

/// `Σ_m Δt Σ_K λ |∇u^m|²_K / (1 + |u^m_K|)^(1+λ) |K|` over `fields = u^1..u^M`.
pub fn weighted_gradient_integral(mesh: &Mesh, fields: &[ScalarField], dt: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let mut total = 0.0;
    for u in fields {
        let mut step = 0.0;
        for k in 0..mesh.num_triangles() {
            let geo = mesh.triangle_geometry(k);
            let g = geo.gradient(u.triangle_values(mesh, k));
            let ub = u.barycenter_value(mesh, k);
            step += lambda * (g[0] * g[0] + g[1] * g[1]) * (1.0 + ub.abs()).powf(-1.0 - lambda) * geo.area;
        }
        total += dt * step;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interpolation {
    pub lhs: f64,
    pub rhs: f64,
}

impl Interpolation {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-10)
    }
}

/// Both sides of `‖z‖_{q(n+1)/n} ≤ ‖z‖₁^{1/(n+1)} ‖z‖_{nq/(n−q)}^{n/(n+1)}`
/// under the shared lumped quadrature.
pub fn interpolation_check(mesh: &Mesh, field: &ScalarField, q: f64) -> Result<Interpolation> {
    if !(q > 1.0 && q < DIM) {
        return Err(Error::Domain(format!("q must lie in (1, {DIM}) (got {q})")));
    }
    let m = lumped_mass(mesh);
    let lhs = lp_norm_with(&m, field, q * (DIM + 1.0) / DIM);
    let rhs = lp_norm_with(&m, field, 1.0).powf(1.0 / (DIM + 1.0))
        * lp_norm_with(&m, field, DIM * q / (DIM - q)).powf(DIM / (DIM + 1.0));
    Ok(Interpolation { lhs, rhs })
}

/// Exponents used by the ledger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateParams {
    pub q: f64,
    pub r: f64,
    pub lambda: f64,
}

impl EstimateParams {
    pub fn from_q(q: f64, r: f64) -> Self {
        EstimateParams {
            q,
            r,
            lambda: lambda_from_q(q),
        }
    }

    pub fn issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let q_max = (DIM + 2.0) / (DIM + 1.0);
        let r_max = (DIM + 2.0) / DIM;
        if !(self.q > 1.0 && self.q < q_max) {
            issues.push(format!("q must lie in (1, {q_max}) (got {})", self.q));
        }
        if !(self.r > 1.0 && self.r < r_max) {
            issues.push(format!("r must lie in (1, {r_max}) (got {})", self.r));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            issues.push(format!("lambda must lie in (0, 1) (got {})", self.lambda));
        }
        issues
    }
}

impl Default for EstimateParams {
    fn default() -> Self {
        EstimateParams::from_q(9.0 / 8.0, 1.5)
    }
}

/// One ε of the continuation study.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub eps: f64,
    /// `‖φ_ε‖_{L^p(W^{1,p})}` (seminorm in space).
    pub phi_norm: f64,
    /// `∫_{Q_T} f_ε`.
    pub f_eps_integral: f64,
    pub u_linf_l1: f64,
    pub weighted_grad: f64,
    pub u_lq_w1q: f64,
    pub u_lr_lr: f64,
    pub u0_l1: f64,
    pub phid_norm: f64,
    /// `‖u_ε − u_ε'‖_{L²(Q_T)}` to the previous row; zero on the first row.
    pub cauchy_dist: f64,
    /// `‖u_ε‖_{L²(L²)}`.
    pub u_l2l2: f64,
    /// `Σ_m ‖u^m − u^{m−1}‖_{L¹}`, the time-derivative proxy.
    pub du_dt_l1: f64,
    /// `Σ_m Δt (1 + ‖u^m‖_{W^{1,q}} + ‖φ^m‖^p_{W^{1,p}})`.
    pub du_dt_bound: f64,
    pub failure: Option<String>,
}

impl EstimateRow {
    pub fn failed(eps: f64, message: String) -> Self {
        EstimateRow {
            eps,
            phi_norm: f64::NAN,
            f_eps_integral: f64::NAN,
            u_linf_l1: f64::NAN,
            weighted_grad: f64::NAN,
            u_lq_w1q: f64::NAN,
            u_lr_lr: f64::NAN,
            u0_l1: f64::NAN,
            phid_norm: f64::NAN,
            cauchy_dist: f64::NAN,
            u_l2l2: f64::NAN,
            du_dt_l1: f64::NAN,
            du_dt_bound: f64::NAN,
            failure: Some(message),
        }
    }

    pub const CSV_HEADER: &'static str =
        "eps,phi_norm,f_eps_integral,u_LinfL1,weighted_grad,u_LqW1q,u_LrLr,u0_L1,phiD_norm,cauchy_dist";

    pub fn csv_values(&self) -> [f64; 10] {
        [
            self.eps,
            self.phi_norm,
            self.f_eps_integral,
            self.u_linf_l1,
            self.weighted_grad,
            self.u_lq_w1q,
            self.u_lr_lr,
            self.u0_l1,
            self.phid_norm,
            self.cauchy_dist,
        ]
    }

    /// The quantities whose bounds must be uniform in ε.
    pub fn monitored(&self) -> [(&'static str, f64); 6] {
        [
            ("phi_norm", self.phi_norm),
            ("f_eps_integral", self.f_eps_integral),
            ("u_LinfL1", self.u_linf_l1),
            ("weighted_grad", self.weighted_grad),
            ("u_LqW1q", self.u_lq_w1q),
            ("u_LrLr", self.u_lr_lr),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateLedger {
    pub params: EstimateParams,
    pub p: f64,
    pub rows: Vec<EstimateRow>,
}

/// `‖u_a − u_b‖_{L²(Q_T)}` over steps `1..=M`.
pub fn trajectory_distance(mesh: &Mesh, a: &Trajectory, b: &Trajectory) -> f64 {
    let m = lumped_mass(mesh);
    let dt = a.dt();
    a.u.iter()
        .zip(&b.u)
        .skip(1)
        .map(|(x, y)| {
            let d = ScalarField::new(x.values.iter().zip(&y.values).map(|(p, q)| p - q).collect());
            dt * lp_norm_with(&m, &d, 2.0).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Computes every ledger quantity of a converged trajectory. `cauchy_dist`
/// is left at zero.
pub fn ledger_row(mesh: &Mesh, traj: &Trajectory, spec: &ConstitutiveSpec, params: &EstimateParams) -> Result<EstimateRow> {
    let dt = traj.dt();
    let p = spec.p;
    let steps = &traj.u[1..];
    let phis = &traj.phi[1..];
    let m = lumped_mass(mesh);

    let phi_norm = bochner_norm(mesh, phis, dt, SpatialNorm::W1pSeminorm(p), TimeExponent::Finite(p));
    let f_eps_integral = traj.f_eps_integrals[1..].iter().map(|f| dt * f).sum();
    let u_linf_l1 = traj.u.iter().map(|u| lp_norm_with(&m, u, 1.0)).fold(0.0, f64::max);
    let weighted_grad = weighted_gradient_integral(mesh, steps, dt, params.lambda)?;
    let u_lq_w1q = bochner_norm(mesh, steps, dt, SpatialNorm::W1p(params.q), TimeExponent::Finite(params.q));
    let u_lr_lr = bochner_norm(mesh, steps, dt, SpatialNorm::Lp(params.r), TimeExponent::Finite(params.r));
    let u_l2l2 = bochner_norm(mesh, steps, dt, SpatialNorm::Lp(2.0), TimeExponent::Finite(2.0));
    let u0_l1 = lp_norm_with(&m, &traj.u[0], 1.0);
    let phid_norm = traj.phi_d_seminorms[1..]
        .iter()
        .map(|s| dt * s.powf(p))
        .sum::<f64>()
        .powf(1.0 / p);

    let mut du_dt_l1 = 0.0;
    let mut du_dt_bound = 0.0;
    for i in 1..traj.u.len() {
        let d = ScalarField::new(
            traj.u[i].values.iter().zip(&traj.u[i - 1].values).map(|(a, b)| a - b).collect(),
        );
        du_dt_l1 += lp_norm_with(&m, &d, 1.0);
        du_dt_bound += dt
            * (1.0 + w1p_norm(mesh, &traj.u[i], params.q) + w1p_seminorm(mesh, &traj.phi[i], p).powf(p));
    }

    Ok(EstimateRow {
        eps: traj.eps,
        phi_norm,
        f_eps_integral,
        u_linf_l1,
        weighted_grad,
        u_lq_w1q,
        u_lr_lr,
        u0_l1,
        phid_norm,
        cauchy_dist: 0.0,
        u_l2l2,
        du_dt_l1,
        du_dt_bound,
        failure: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckOutcome {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Ratio allowed between any row and the largest-ε row.
pub const BOUNDEDNESS_FACTOR: f64 = 2.0;
/// Relative change allowed between the two smallest ε.
pub const STABILIZATION_TOL: f64 = 0.10;
const ABS_FLOOR: f64 = 1e-12;

/// Flat-trend checks over the ε schedule.
pub fn verify_ledger(ledger: &EstimateLedger) -> VerificationReport {
    let mut report = VerificationReport::default();
    let rows = &ledger.rows;
    if rows.len() < 2 {
        report.push("rows", false, format!("need at least 2 rows, got {}", rows.len()));
        return report;
    }
    let failed: Vec<String> = rows
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|m| format!("eps = {}: {m}", r.eps)))
        .collect();
    report.push(
        "runs",
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} runs converged", rows.len())
        } else {
            failed.join("; ")
        },
    );
    if !failed.is_empty() {
        return report;
    }
    let finite = rows
        .iter()
        .all(|r| r.csv_values().iter().all(|v| v.is_finite() && *v >= 0.0));
    report.push("finite", finite, "all entries finite and non-negative");

    let first = &rows[0];
    let (a, b) = (&rows[rows.len() - 2], &rows[rows.len() - 1]);
    for (i, (name, v0)) in first.monitored().into_iter().enumerate() {
        let max = rows.iter().map(|r| r.monitored()[i].1).fold(0.0, f64::max);
        report.push(
            format!("bounded:{name}"),
            max <= BOUNDEDNESS_FACTOR * v0 + ABS_FLOOR,
            format!("max {max:.6e} vs largest-eps value {v0:.6e}"),
        );
        let (va, vb) = (a.monitored()[i].1, b.monitored()[i].1);
        let change = (vb - va).abs();
        let scale = va.abs().max(vb.abs());
        report.push(
            format!("stable:{name}"),
            change <= STABILIZATION_TOL * scale + ABS_FLOOR,
            format!(
                "relative change {:.3e} between eps = {} and eps = {}",
                if scale > 0.0 { change / scale } else { 0.0 },
                a.eps,
                b.eps
            ),
        );
    }

    let c = first.phi_norm / (1.0 + first.phid_norm);
    let worst = rows
        .iter()
        .map(|r| r.phi_norm / (c * (1.0 + r.phid_norm)))
        .fold(0.0, f64::max);
    report.push(
        "potential-bound",
        c == 0.0 && rows.iter().all(|r| r.phi_norm <= ABS_FLOOR) || worst <= BOUNDEDNESS_FACTOR,
        format!("C = {c:.6e}, worst ratio {worst:.4}"),
    );

    let c_dt = if first.du_dt_bound > 0.0 { first.du_dt_l1 / first.du_dt_bound } else { 0.0 };
    let worst = rows
        .iter()
        .map(|r| r.du_dt_l1 / r.du_dt_bound)
        .fold(0.0, f64::max);
    report.push(
        "time-derivative-bound",
        worst <= BOUNDEDNESS_FACTOR * c_dt + ABS_FLOOR,
        format!("fitted c = {c_dt:.6e}, worst {worst:.6e}"),
    );

    let dists: Vec<f64> = rows[1..].iter().map(|r| r.cauchy_dist).collect();
    let floor = ABS_FLOOR * (1.0 + rows.iter().map(|r| r.u_l2l2).fold(0.0, f64::max));
    let decreasing = dists
        .windows(2)
        .all(|w| w[1] < w[0] || (w[0] <= floor && w[1] <= floor));
    report.push(
        "cauchy",
        decreasing,
        format!(
            "distances [{}]",
            dists.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rect_mesh, Side};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(n: usize) -> Mesh {
        build_rect_mesh(n, n, 1.0, 1.0, &[Side::Left]).unwrap()
    }

    #[test]
    fn phi_psi_at_zero_and_symmetry() {
        for lambda in [0.1, 0.5, 0.9] {
            assert_eq!(phi_lambda(0.0, lambda).unwrap(), 0.0);
            assert_eq!(psi_lambda(0.0, lambda).unwrap(), 0.0);
            for s in [0.01, 0.7, 3.0, 40.0] {
                assert_eq!(phi_lambda(-s, lambda).unwrap(), -phi_lambda(s, lambda).unwrap());
                assert_eq!(psi_lambda(-s, lambda).unwrap(), psi_lambda(s, lambda).unwrap());
                assert!(phi_lambda(s, lambda).unwrap().abs() < 1.0);
            }
        }
        assert!(matches!(phi_lambda(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(psi_lambda(1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn psi_derivative_by_central_differences() {
        let lambda = 0.5;
        for s in [3.0, -3.0, 0.1, -0.1, 7.0] {
            let mut errs = Vec::new();
            for h in [1e-2, 5e-3] {
                let fd = (psi_lambda(s + h, lambda).unwrap() - psi_lambda(s - h, lambda).unwrap()) / (2.0 * h);
                errs.push((fd - phi_lambda(s, lambda).unwrap()).abs());
            }
            let order = (errs[0] / errs[1]).log2();
            assert!((order - 2.0).abs() < 0.1, "s = {s}: order {order}");
        }
    }

    #[test]
    fn lambda_q_relation() {
        assert!((lambda_from_q(9.0 / 8.0) - 5.0 / 16.0).abs() < 1e-15);
        assert!(EstimateParams::default().issues().is_empty());
        assert!(!EstimateParams::from_q(1.4, 1.5).issues().is_empty());
    }

    #[test]
    fn norms_of_simple_fields() {
        let mesh = unit(4);
        let c = ScalarField::constant(&mesh, -2.5);
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert!((lp_norm(&mesh, &c, p) - 2.5).abs() < 1e-13);
            assert_eq!(w1p_seminorm(&mesh, &c, p), 0.0);
        }
        let x = ScalarField::from_fn(&mesh, |x, _| x);
        for p in [1.1, 2.0, 4.0] {
            assert!((w1p_seminorm(&mesh, &x, p) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn lumped_vs_consistent_l2() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut prev_gap = f64::INFINITY;
        for n in [4, 8, 16, 32] {
            let mesh = unit(n);
            let f = ScalarField::from_fn(&mesh, |x, y| (3.0 * x).sin() * (2.0 * y).cos() + 0.5);
            let gap = (lp_norm(&mesh, &f, 2.0)
                - crate::fem::consistent_l2_norm(&crate::fem::assemble_mass(&mesh), &f.values))
            .abs();
            assert!(gap < prev_gap);
            prev_gap = gap;
            // element mass eigenvalues are |K|/3·{1, 1/4, 1/4}, so the
            // consistent norm sits between half the lumped norm and the lumped norm
            let r = ScalarField::new((0..mesh.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let lumped = lp_norm(&mesh, &r, 2.0);
            let consistent = crate::fem::consistent_l2_norm(&crate::fem::assemble_mass(&mesh), &r.values);
            assert!(consistent <= lumped * (1.0 + 1e-12) && lumped <= 2.0 * consistent);
        }
    }

    #[test]
    fn weighted_gradient_of_linear_field() {
        // exact: λ ∫_0^1 (1+x)^(-1-λ) dx · Δt = (1 − 2^(−λ)) Δt
        let lambda = 0.5;
        let dt = 0.1;
        let mut errors = Vec::new();
        for n in [8, 16, 32] {
            let mesh = unit(n);
            let u = ScalarField::from_fn(&mesh, |x, _| x);
            let v = weighted_gradient_integral(&mesh, &[u], dt, lambda).unwrap();
            errors.push((v - (1.0 - 2f64.powf(-lambda)) * dt).abs());
        }
        // midpoint-type rule: second order
        assert!(errors[0] < 1e-3 * dt);
        assert!(errors[0] / errors[1] > 3.5 && errors[1] / errors[2] > 3.5);
        let mesh = unit(4);
        assert_eq!(
            weighted_gradient_integral(&mesh, &[ScalarField::constant(&mesh, 3.0)], dt, lambda).unwrap(),
            0.0
        );
    }

    #[test]
    fn interpolation_examples() {
        let mesh = unit(16);
        let c = ScalarField::constant(&mesh, 1.7);
        let i = interpolation_check(&mesh, &c, 9.0 / 8.0).unwrap();
        assert!((i.lhs - i.rhs).abs() <= 1e-12 * i.rhs);
        // indicator fields attain equality under lumped norms, so use three levels
        let levels = ScalarField::new((0..mesh.num_nodes()).map(|i| (i % 3) as f64).collect());
        let i = interpolation_check(&mesh, &levels, 9.0 / 8.0).unwrap();
        assert!(i.lhs < i.rhs * (1.0 - 1e-6));
        assert!(interpolation_check(&mesh, &c, 2.0).is_err());
        assert!(interpolation_check(&mesh, &c, 1.0).is_err());
    }

    #[test]
    fn bochner_infinity_is_max() {
        let mesh = unit(2);
        let fields = [1.0, 3.0, 2.0].map(|c| ScalarField::constant(&mesh, c));
        assert!((bochner_norm(&mesh, &fields, 0.5, SpatialNorm::Lp(1.0), TimeExponent::Infinity) - 3.0).abs() < 1e-14);
        let two = bochner_norm(&mesh, &fields, 0.5, SpatialNorm::Lp(2.0), TimeExponent::Finite(2.0));
        assert!((two - (0.5f64 * 14.0).sqrt()).abs() < 1e-13);
    }

    fn row(eps: f64, scale: f64, cauchy: f64) -> EstimateRow {
        EstimateRow {
            eps,
            phi_norm: 1.0 * scale,
            f_eps_integral: 0.5 * scale,
            u_linf_l1: 0.2 * scale,
            weighted_grad: 0.01 * scale,
            u_lq_w1q: 0.3 * scale,
            u_lr_lr: 0.1 * scale,
            u0_l1: 0.0,
            phid_norm: 0.8,
            cauchy_dist: cauchy,
            u_l2l2: 0.1,
            du_dt_l1: 0.2 * scale,
            du_dt_bound: 1.5,
            failure: None,
        }
    }

    #[test]
    fn ledger_checks() {
        let params = EstimateParams::default();
        let identical = EstimateLedger {
            params,
            p: 2.0,
            rows: vec![row(0.1, 1.0, 0.0), row(0.01, 1.0, 0.0), row(0.001, 1.0, 0.0)],
        };
        let r = verify_ledger(&identical);
        assert!(r.passed(), "{r}");

        let trending = EstimateLedger {
            params,
            p: 2.0,
            rows: vec![row(0.1, 1.0, 0.0), row(0.01, 1.05, 1e-2), row(0.001, 1.06, 1e-3)],
        };
        assert!(verify_ledger(&trending).passed());

        let mut inflated = trending.clone();
        inflated.rows[2].u_linf_l1 *= 1.5;
        let r = verify_ledger(&inflated);
        assert!(!r.passed());
        assert!(!r.get("stable:u_LinfL1").unwrap().passed);

        let mut not_cauchy = trending.clone();
        not_cauchy.rows[2].cauchy_dist = 2e-2;
        assert!(!verify_ledger(&not_cauchy).get("cauchy").unwrap().passed);

        let single = EstimateLedger { params, p: 2.0, rows: vec![row(0.1, 1.0, 0.0)] };
        assert!(!verify_ledger(&single).passed());
    }

    proptest! {
        #[test]
        fn norms_are_homogeneous(seed in 0u64..1000, alpha in -5.0f64..5.0, p in 1.0f64..4.0) {
            let mesh = unit(5);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = ScalarField::new((0..mesh.num_nodes()).map(|_| rng.gen_range(-2.0..2.0)).collect());
            let g = ScalarField::new(f.values.iter().map(|v| alpha * v).collect());
            let (a, b) = (lp_norm(&mesh, &f, p), lp_norm(&mesh, &g, p));
            prop_assert!((b - alpha.abs() * a).abs() <= 1e-12 * (1.0 + b));
            let (a, b) = (w1p_seminorm(&mesh, &f, p), w1p_seminorm(&mesh, &g, p));
            prop_assert!((b - alpha.abs() * a).abs() <= 1e-12 * (1.0 + b));
        }

        #[test]
        fn interpolation_always_holds(seed in 0u64..10_000, q in 1.01f64..1.99) {
            let mesh = unit(6);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = ScalarField::new((0..mesh.num_nodes()).map(|_| rng.gen_range(-3.0..3.0)).collect());
            prop_assert!(interpolation_check(&mesh, &f, q).unwrap().holds());
        }
    }
}
