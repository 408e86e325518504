//! Picard coupling of the potential and heat problems, the implicit time
//! march and the ε-continuation study.
//!
//! One application of the fixed-point map solves the potential equation with
//! `σ` frozen at the outer iterate `u_k`, then takes a heat step with `κ` and
//! the source frozen at `u_k` as well.

use crate::boundary::{smooth_initial, BoundaryData};
use crate::constitutive::ConstitutiveSpec;
use crate::error::{Error, Result};
use crate::estimates::{ledger_row, lp_norm, trajectory_distance, w1p_seminorm, EstimateLedger, EstimateParams, EstimateRow};
use crate::fem::ScalarField;
use crate::heat::{source_integral, step_heat, HeatStepInputs, LinearOptions};
use crate::mesh::Mesh;
use crate::potential::{harmonic_lift, solve_potential, PotentialOptions, PotentialReport};

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConfig {
    pub t_final: f64,
    /// Number of time steps `M`.
    pub steps: usize,
    pub eps_schedule: Vec<f64>,
    pub fp_rtol: f64,
    pub fp_max_iter: usize,
    /// Under-relaxation of the outer iteration, in `(0, 1]`.
    pub omega: f64,
    pub kacanov: PotentialOptions,
    pub linear: LinearOptions,
    pub params: EstimateParams,
    /// Lumped mass in the heat step.
    pub lumped: bool,
    /// Seed each ε run with the previous ε's trajectory.
    pub warm_start: bool,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig {
            t_final: 1.0,
            steps: 10,
            eps_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4],
            fp_rtol: 1e-8,
            fp_max_iter: 50,
            omega: 1.0,
            kacanov: PotentialOptions::default(),
            linear: LinearOptions::default(),
            params: EstimateParams::default(),
            lumped: false,
            warm_start: true,
        }
    }
}

impl CouplingConfig {
    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            issues.push(format!("t_final must be > 0 (got {})", self.t_final));
        }
        if self.steps == 0 {
            issues.push("steps must be >= 1".to_string());
        }
        if self.eps_schedule.is_empty() {
            issues.push("eps_schedule must not be empty".to_string());
        }
        if self.eps_schedule.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            issues.push("eps_schedule entries must be positive".to_string());
        }
        if self.eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
            issues.push("eps_schedule must be strictly decreasing".to_string());
        }
        for (name, v) in [
            ("fp_rtol", self.fp_rtol),
            ("kacanov_rtol", self.kacanov.rtol),
            ("linear_rtol", self.linear.rtol),
            ("kacanov_linear_rtol", self.kacanov.linear_rtol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                issues.push(format!("{name} must be > 0 (got {v})"));
            }
        }
        for (name, v) in [
            ("fp_max_iter", self.fp_max_iter),
            ("kacanov_max_iter", self.kacanov.max_iter),
            ("linear_max_iter", self.linear.max_iter),
        ] {
            if v == 0 {
                issues.push(format!("{name} must be >= 1"));
            }
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            issues.push(format!("omega must lie in (0, 1] (got {})", self.omega));
        }
        issues.extend(self.params.issues());
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
}

/// Everything a time step needs besides the fields.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub mesh: &'a Mesh,
    pub spec: &'a ConstitutiveSpec,
    pub boundary: &'a BoundaryData,
    pub config: &'a CouplingConfig,
    pub eps: f64,
}

/// Starting iterate of the per-step fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeedPolicy {
    PreviousStep,
    Constant(f64),
}

/// The discrete pair `(φ_ε, u_ε)` on the time grid. Every per-step vector
/// has `M + 1` entries; index 0 is the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub eps: f64,
    pub times: Vec<f64>,
    pub phi: Vec<ScalarField>,
    pub u: Vec<ScalarField>,
    pub reports: Vec<PotentialReport>,
    pub fp_iters: Vec<usize>,
    /// Relative fixed-point changes per outer iteration.
    pub fp_histories: Vec<Vec<f64>>,
    /// `∫_Ω f_ε(·, t^m, u^m, ∇φ^m)`.
    pub f_eps_integrals: Vec<f64>,
    /// `‖∇ φ_D(t^m)‖_{L^p}` of the harmonic extension.
    pub phi_d_seminorms: Vec<f64>,
}

impl Trajectory {
    pub fn dt(&self) -> f64 {
        match self.times.as_slice() {
            [t0, t1, ..] => t1 - t0,
            _ => 0.0,
        }
    }

    pub fn steps(&self) -> usize {
        self.u.len().saturating_sub(1)
    }
}

/// Result of one converged time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub u: ScalarField,
    pub phi: ScalarField,
    pub report: PotentialReport,
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// One application of the map `u_k ↦ u_{k+1}`. Returns the new iterate, the
/// potential `φ_{u_k}` and its solver report.
pub fn fixed_point_map(
    problem: &Problem<'_>,
    u_k: &ScalarField,
    u_prev: &ScalarField,
    t: f64,
    dt: f64,
    phi_guess: Option<&ScalarField>,
) -> Result<(ScalarField, ScalarField, PotentialReport)> {
    let Problem { mesh, spec, boundary, config, eps } = *problem;
    let phi_d = boundary.nodal_values(mesh, t)?;
    let (phi, report) = solve_potential(mesh, u_k, &phi_d, spec, &config.kacanov, phi_guess)?;
    let inputs = HeatStepInputs {
        u_prev,
        phi: &phi,
        t,
        dt,
        eps,
        spec,
        lumped: config.lumped,
    };
    let u_hat = step_heat(mesh, &inputs, u_k, &config.linear)?;
    let w = config.omega;
    let next = if w == 1.0 {
        u_hat
    } else {
        ScalarField::new(
            u_k.values
                .iter()
                .zip(&u_hat.values)
                .map(|(a, b)| (1.0 - w) * a + w * b)
                .collect(),
        )
    };
    Ok((next, phi, report))
}

/// Picard iteration of the map from `seed` until the lumped `L²` change
/// drops below `fp_rtol·(1 + ‖u_{k+1}‖)`.
pub fn solve_timestep(
    problem: &Problem<'_>,
    u_prev: &ScalarField,
    t: f64,
    dt: f64,
    seed: &ScalarField,
    phi_guess: Option<&ScalarField>,
) -> Result<StepResult> {
    let mesh = problem.mesh;
    let config = problem.config;
    let mut u_k = seed.clone();
    let mut phi_prev = phi_guess.cloned();
    let mut history = Vec::new();
    for k in 1..=config.fp_max_iter {
        let (next, phi, report) = fixed_point_map(problem, &u_k, u_prev, t, dt, phi_prev.as_ref())?;
        let diff = ScalarField::new(next.values.iter().zip(&u_k.values).map(|(a, b)| a - b).collect());
        let change = lp_norm(mesh, &diff, 2.0);
        let scale = 1.0 + lp_norm(mesh, &next, 2.0);
        history.push(change / scale);
        if !change.is_finite() {
            break;
        }
        if change <= config.fp_rtol * scale {
            return Ok(StepResult {
                u: next,
                phi,
                report,
                iterations: k,
                history,
            });
        }
        u_k = next;
        phi_prev = Some(phi);
    }
    Err(Error::CouplingDivergence { history })
}

/// Marches `M` implicit steps from the smoothed initial data `u_{0,ε}`.
pub fn run_simulation(problem: &Problem<'_>, u0: &ScalarField) -> Result<Trajectory> {
    run_simulation_with(problem, u0, SeedPolicy::PreviousStep, None)
}

/// As [`run_simulation`], with a chosen fixed-point seed. A `warm` trajectory
/// on the same grid overrides the seed with its value at the same step.
pub fn run_simulation_with(
    problem: &Problem<'_>,
    u0: &ScalarField,
    seed: SeedPolicy,
    warm: Option<&Trajectory>,
) -> Result<Trajectory> {
    let Problem { mesh, spec, boundary, config, eps } = *problem;
    config.validate()?;
    spec.validate()?;
    u0.check(mesh, "initial temperature")?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("eps must be > 0 (got {eps})")));
    }
    let dt = config.dt();
    let m_steps = config.steps;
    let warm = warm.filter(|w| w.steps() == m_steps && w.u[0].len() == mesh.num_nodes());

    let u_init = smooth_initial(mesh, u0, eps);
    let phi_d0 = boundary.nodal_values(mesh, 0.0)?;
    let (phi_init, report0) = solve_potential(mesh, &u_init, &phi_d0, spec, &config.kacanov, None)?;
    let mut traj = Trajectory {
        eps,
        times: vec![0.0],
        f_eps_integrals: vec![source_integral(mesh, &phi_init, &u_init, 0.0, eps, spec)?],
        phi_d_seminorms: vec![lift_seminorm(problem, 0.0)?],
        phi: vec![phi_init],
        u: vec![u_init],
        reports: vec![report0],
        fp_iters: vec![0],
        fp_histories: vec![Vec::new()],
    };

    for m in 0..m_steps {
        let t = (m + 1) as f64 * dt;
        let u_prev = &traj.u[m];
        let seed_field = match (warm, seed) {
            (Some(w), _) => w.u[m + 1].clone(),
            (None, SeedPolicy::PreviousStep) => u_prev.clone(),
            (None, SeedPolicy::Constant(c)) => ScalarField::constant(mesh, c),
        };
        let phi_guess = warm.map(|w| &w.phi[m + 1]).unwrap_or(&traj.phi[m]).clone();
        let step = solve_timestep(problem, u_prev, t, dt, &seed_field, Some(&phi_guess))
            .and_then(|s| {
                let f = source_integral(mesh, &s.phi, &s.u, t, eps, spec)?;
                let lift = lift_seminorm(problem, t)?;
                Ok((s, f, lift))
            });
        match step {
            Ok((s, f, lift)) => {
                traj.times.push(t);
                traj.u.push(s.u);
                traj.phi.push(s.phi);
                traj.reports.push(s.report);
                traj.fp_iters.push(s.iterations);
                traj.fp_histories.push(s.history);
                traj.f_eps_integrals.push(f);
                traj.phi_d_seminorms.push(lift);
            }
            Err(source) => {
                return Err(Error::Simulation {
                    step: m + 1,
                    partial: Box::new(traj),
                    source: Box::new(source),
                })
            }
        }
    }
    Ok(traj)
}

fn lift_seminorm(problem: &Problem<'_>, t: f64) -> Result<f64> {
    let phi_d = problem.boundary.nodal_values(problem.mesh, t)?;
    let lift = harmonic_lift(problem.mesh, &phi_d, &problem.config.kacanov)?;
    Ok(w1p_seminorm(problem.mesh, &lift, problem.spec.p))
}

/// The ledger together with the trajectories that produced it; failed runs
/// leave `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Continuation {
    pub ledger: EstimateLedger,
    pub trajectories: Vec<Option<Trajectory>>,
}

/// Runs the whole ε schedule and fills one ledger row per ε. The Cauchy
/// distance of row `i` is measured against row `i − 1`.
pub fn eps_continuation(
    mesh: &Mesh,
    config: &CouplingConfig,
    spec: &ConstitutiveSpec,
    boundary: &BoundaryData,
    u0: &ScalarField,
) -> Result<Continuation> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.eps_schedule.len());
    let mut trajectories: Vec<Option<Trajectory>> = Vec::with_capacity(config.eps_schedule.len());
    for &eps in &config.eps_schedule {
        let problem = Problem { mesh, spec, boundary, config, eps };
        let warm = if config.warm_start {
            trajectories.iter().rev().flatten().next()
        } else {
            None
        };
        let outcome = run_simulation_with(&problem, u0, SeedPolicy::PreviousStep, warm)
            .and_then(|traj| ledger_row(mesh, &traj, spec, &config.params).map(|row| (traj, row)));
        match outcome {
            Ok((traj, mut row)) => {
                row.cauchy_dist = match trajectories.last() {
                    None => 0.0,
                    Some(Some(prev)) => trajectory_distance(mesh, &traj, prev),
                    Some(None) => f64::NAN,
                };
                rows.push(row);
                trajectories.push(Some(traj));
            }
            Err(e) => {
                rows.push(EstimateRow::failed(eps, e.to_string()));
                trajectories.push(None);
            }
        }
    }
    Ok(Continuation {
        ledger: EstimateLedger {
            params: config.params,
            p: spec.p,
            rows,
        },
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryData;
    use crate::constitutive::{Eta, Profile};
    use crate::mesh::{build_rect_mesh, Side};
    use std::collections::BTreeMap;

    fn mesh(n: usize) -> Mesh {
        build_rect_mesh(n, n, 1.0, 1.0, &[Side::Left, Side::Right]).unwrap()
    }

    fn joule_spec() -> ConstitutiveSpec {
        ConstitutiveSpec {
            sigma0: Profile::Saturating { lower: 0.5, upper: 2.0 },
            kappa: Profile::Saturating { lower: 0.5, upper: 1.5 },
            ..ConstitutiveSpec::ohmic(1.0, 1.0, 0.9, 1.0, 0.0)
        }
    }

    fn config(t_final: f64, steps: usize) -> CouplingConfig {
        CouplingConfig {
            t_final,
            steps,
            fp_rtol: 1e-9,
            ..CouplingConfig::default()
        }
    }

    fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
        a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn decoupled_step_converges_immediately() {
        let mesh = mesh(6);
        let spec = ConstitutiveSpec::ohmic(1.0, 1.0, 0.0, 1.0, 0.2);
        let cfg = config(0.1, 1);
        let boundary = BoundaryData::left_right(1.0);
        let problem = Problem { mesh: &mesh, spec: &spec, boundary: &boundary, config: &cfg, eps: 1e-3 };
        let u0 = ScalarField::from_fn(&mesh, |x, y| x * y);
        let step = solve_timestep(&problem, &u0, 0.1, 0.1, &u0, None).unwrap();
        assert!(step.iterations <= 2, "{}", step.iterations);
    }

    #[test]
    fn decoupled_trajectory_ignores_voltage() {
        let mesh = mesh(6);
        let spec = ConstitutiveSpec::ohmic(1.0, 1.0, 0.0, 1.0, 0.0);
        let cfg = config(0.2, 4);
        let u0 = ScalarField::from_fn(&mesh, |x, _| 1.0 + x);
        let run = |v: f64| {
            let boundary = BoundaryData::left_right(v);
            let problem = Problem { mesh: &mesh, spec: &spec, boundary: &boundary, config: &cfg, eps: 1e-2 };
            run_simulation(&problem, &u0).unwrap()
        };
        let (a, b) = (run(1.0), run(5.0));
        for (x, y) in a.u.iter().zip(&b.u) {
            assert!(max_diff(x, y) <= 1e-12);
        }
    }

    #[test]
    fn single_step_run_matches_timestep() {
        let mesh = mesh(6);
        let spec = joule_spec();
        let cfg = config(0.05, 1);
        let boundary = BoundaryData::left_right(1.0);
        let problem = Problem { mesh: &mesh, spec: &spec, boundary: &boundary, config: &cfg, eps: 1e-3 };
        let u0 = ScalarField::constant(&mesh, 0.0);
        let traj = run_simulation(&problem, &u0).unwrap();
        let step = solve_timestep(&problem, &u0, 0.05, 0.05, &u0, Some(&traj.phi[0])).unwrap();
        assert_eq!(traj.steps(), 1);
        assert_eq!(traj.u[1], step.u);
        assert_eq!(traj.fp_iters[1], step.iterations);
    }

    #[test]
    fn two_seeds_agree() {
        let mesh = mesh(8);
        let spec = joule_spec();
        let cfg = config(0.1, 2);
        let boundary = BoundaryData::left_right(1.0);
        let problem = Problem { mesh: &mesh, spec: &spec, boundary: &boundary, config: &cfg, eps: 1e-3 };
        let u0 = ScalarField::constant(&mesh, 0.0);
        let a = run_simulation_with(&problem, &u0, SeedPolicy::PreviousStep, None).unwrap();
        let b = run_simulation_with(&problem, &u0, SeedPolicy::Constant(2.0), None).unwrap();
        for (x, y) in a.u.iter().zip(&b.u) {
            let d = ScalarField::new(x.values.iter().zip(&y.values).map(|(p, q)| p - q).collect());
            assert!(lp_norm(&mesh, &d, 2.0) <= 10.0 * cfg.fp_rtol);
        }
        assert!(a.fp_histories[1..].iter().all(|h| *h.last().unwrap() <= cfg.fp_rtol));
    }

    #[test]
    fn uniform_recurrence() {
        // constant voltage: ∇φ = 0, f = 0, and a stiff κ keeps u flat
        let mesh = build_rect_mesh(6, 6, 1.0, 1.0, &Side::ALL).unwrap();
        let spec = ConstitutiveSpec::ohmic(1.0, 1e4, 0.9, 1.0, 0.0);
        let cfg = config(0.5, 10);
        let boundary = BoundaryData::Sides(Side::ALL.iter().map(|&s| (s, 3.0)).collect::<BTreeMap<_, _>>());
        let problem = Problem { mesh: &mesh, spec: &spec, boundary: &boundary, config: &cfg, eps: 1e-3 };
        let traj = run_simulation(&problem, &ScalarField::constant(&mesh, 1.0)).unwrap();
        let dt = cfg.dt();
        for (m, u) in traj.u.iter().enumerate() {
            let expected = (1.0 + 4.0 * dt).powi(-(m as i32));
            assert!(u.values.iter().all(|v| (v - expected).abs() < 1e-4));
        }
    }

    #[test]
    fn divergence_is_reported_with_partial_trajectory() {
        let mesh = mesh(4);
        let spec = joule_spec();
        let cfg = CouplingConfig { fp_max_iter: 1, ..config(0.1, 3) };
        let boundary = BoundaryData::left_right(1.0);
        let problem = Problem { mesh: &mesh, spec: &spec, boundary: &boundary, config: &cfg, eps: 1e-3 };
        match run_simulation(&problem, &ScalarField::constant(&mesh, 0.0)) {
            Err(Error::Simulation { step, partial, source }) => {
                assert_eq!(step, 1);
                assert_eq!(partial.u.len(), 1);
                assert!(matches!(*source, Error::CouplingDivergence { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = CouplingConfig::default();
        cfg.eps_schedule = vec![1e-2, 1e-1];
        cfg.omega = 0.0;
        cfg.steps = 0;
        assert_eq!(cfg.issues().len(), 3);
    }

    #[test]
    fn decoupled_ledger_rows_agree() {
        let mesh = mesh(6);
        let spec = ConstitutiveSpec {
            eta: Eta::Constant(0.0),
            ..ConstitutiveSpec::ohmic(1.0, 1.0, 0.0, 1.0, 0.0)
        };
        let cfg = CouplingConfig {
            eps_schedule: vec![1e-2, 1e-3],
            ..config(0.1, 2)
        };
        let u0 = ScalarField::from_fn(&mesh, |x, y| 1.0 + x * y);
        let out = eps_continuation(&mesh, &cfg, &spec, &BoundaryData::left_right(1.0), &u0).unwrap();
        let rows = &out.ledger.rows;
        assert!(rows[1].cauchy_dist <= 1e-12);
        for (a, b) in rows[0].csv_values()[1..9].iter().zip(&rows[1].csv_values()[1..9]) {
            assert!((a - b).abs() <= 1e-7 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
}
