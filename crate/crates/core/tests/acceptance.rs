//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use thermistor_core::boundary::BoundaryData;
use thermistor_core::config::{MeshConfig, OutputConfig, OutputFormat, RunConfig};
use thermistor_core::boundary::InitialData;
use thermistor_core::constitutive::{ConstitutiveSpec, Eta, Profile};
use thermistor_core::coupling::{eps_continuation, run_simulation_with, CouplingConfig, Problem, SeedPolicy, Trajectory};
use thermistor_core::estimates::{lp_norm, w1p_seminorm, EstimateParams, VerificationReport};
use thermistor_core::heat::{step_heat, HeatStepInputs, LinearOptions};
use thermistor_core::pipeline::run_pipeline;
use thermistor_core::potential::{solve_potential, PotentialOptions};
use thermistor_core::studies::DecaySetup;
use thermistor_core::suites::{interpolation_suite, monotonicity_suite, phipsi_suite};
use thermistor_core::{build_rect_mesh, Mesh, ScalarField, Side};

const SEED: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.2}s of {limit_s}s"))
}

fn failures(report: &VerificationReport) -> Vec<String> {
    report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: {}", c.name, c.detail))
        .collect()
}

fn diff(a: &ScalarField, b: &ScalarField) -> ScalarField {
    ScalarField::new(a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let report = monotonicity_suite(&[1.2, 1.5, 2.0, 3.0, 4.0], &[0.0, 0.1, 1.0], 100_000, SEED);
    let (fast, time) = within(start.elapsed(), 5.0);
    let bad = failures(&report);
    outcome(
        bad.is_empty() && fast,
        format!("{} (p, delta) cases x 1e5 pairs, {time}{}", report.checks.len(), detail_list(&bad)),
    )
}

fn detail_list(bad: &[String]) -> String {
    if bad.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", bad.join(" | "))
    }
}

fn linear_potential(n: usize, p: f64, delta: f64) -> (f64, usize) {
    let mesh = build_rect_mesh(n, n, 1.0, 1.0, &[Side::Left, Side::Right]).unwrap();
    let spec = ConstitutiveSpec {
        p,
        delta,
        ..ConstitutiveSpec::ohmic(1.0, 1.0, 0.0, 1.0, 0.0)
    };
    let v = 1.0;
    let phi_d: BTreeMap<usize, f64> = mesh
        .dirichlet_nodes()
        .into_iter()
        .map(|i| (i, v * mesh.nodes[i][0]))
        .collect();
    let u = ScalarField::constant(&mesh, 0.0);
    let (phi, report) = solve_potential(&mesh, &u, &phi_d, &spec, &PotentialOptions::default(), None).unwrap();
    let err = mesh
        .nodes
        .iter()
        .zip(&phi.values)
        .map(|([x, _], f)| (f - v * x).abs())
        .fold(0.0, f64::max);
    (err, report.iterations)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst = (0.0f64, 0usize);
    let mut ok = true;
    for (p, delta) in [(1.5, 0.1), (2.0, 0.0), (3.0, 0.0)] {
        for n in [8, 32] {
            let (err, iters) = linear_potential(n, p, delta);
            ok &= err <= 1e-10 && iters <= 3;
            worst = (worst.0.max(err), worst.1.max(iters));
        }
    }
    let (fast, time) = within(start.elapsed(), 5.0);
    outcome(
        ok && fast,
        format!("max nodal error {:.2e}, max Kacanov iterations {}, {time}", worst.0, worst.1),
    )
}

fn criterion_3() -> Outcome {
    let mesh = build_rect_mesh(16, 16, 1.0, 1.0, &[Side::Left, Side::Right]).unwrap();
    let spec = ConstitutiveSpec {
        p: 3.0,
        delta: 0.1,
        sigma0: Profile::Custom {
            f: Arc::new(|u| 1.0 + u * u),
            lower: 1.0,
            upper: 2.0,
        },
        ..ConstitutiveSpec::ohmic(1.0, 1.0, 0.0, 1.0, 0.0)
    };
    // checkerboard temperature in {0, 1}
    let u = ScalarField::new((0..mesh.num_nodes()).map(|i| ((i % 17 + i / 17) % 2) as f64).collect());
    let phi_d: BTreeMap<usize, f64> = mesh
        .dirichlet_nodes()
        .into_iter()
        .map(|i| (i, if mesh.nodes[i][0] > 0.5 { 1.0 } else { 0.0 }))
        .collect();
    let opts = PotentialOptions::default();
    let (a, ra) = solve_potential(&mesh, &u, &phi_d, &spec, &opts, None).unwrap();
    let zero = ScalarField::constant(&mesh, 0.0);
    let (b, rb) = solve_potential(&mesh, &u, &phi_d, &spec, &opts, Some(&zero)).unwrap();
    let descent = |e: &[f64]| e.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
    let monotone = descent(&ra.energies) && descent(&rb.energies);
    let gap = w1p_seminorm(&mesh, &diff(&a, &b), 3.0);
    outcome(
        monotone && gap <= 10.0 * opts.rtol && ra.converged && rb.converged,
        format!(
            "energy non-increasing: {monotone} ({} and {} sweeps), W1p gap between starts {gap:.2e} (limit {:.0e})",
            ra.iterations,
            rb.iterations,
            10.0 * opts.rtol
        ),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let setup = DecaySetup {
        n: 8,
        ..DecaySetup::default()
    };
    let e20 = setup.terminal_error(20).unwrap();
    let e40 = setup.terminal_error(40).unwrap();
    let slope = (e20 / e40).log2();

    let mesh = build_rect_mesh(8, 8, 1.0, 1.0, &[Side::Left]).unwrap();
    let h = 0.35;
    let spec = ConstitutiveSpec::ohmic(1.0, 1.0, 0.0, 1.0, h);
    let phi = ScalarField::constant(&mesh, 0.0);
    let mut u = ScalarField::constant(&mesh, h);
    for m in 0..50 {
        let inputs = HeatStepInputs {
            u_prev: &u,
            phi: &phi,
            t: (m + 1) as f64 * 0.01,
            dt: 0.01,
            eps: 1e-3,
            spec: &spec,
            lumped: false,
        };
        u = step_heat(&mesh, &inputs, &u, &LinearOptions::default()).unwrap();
    }
    let drift = u.values.iter().map(|v| (v - h).abs()).fold(0.0, f64::max);
    let (fast, time) = within(start.elapsed(), 5.0);
    outcome(
        e20 <= 0.1 && (slope - 1.0).abs() <= 0.2 && drift <= 1e-12 && fast,
        format!(
            "terminal error {e20:.3e} (M=20), {e40:.3e} (M=40), slope {slope:.3}, equilibrium drift {drift:.1e}, {time}"
        ),
    )
}

fn joule_spec() -> ConstitutiveSpec {
    ConstitutiveSpec {
        sigma0: Profile::Saturating { lower: 0.5, upper: 2.0 },
        kappa: Profile::Saturating { lower: 0.5, upper: 1.5 },
        eta1: 0.9,
        eta: Eta::Constant(0.9),
        ..ConstitutiveSpec::ohmic(1.0, 1.0, 0.9, 1.0, 0.0)
    }
}

fn joule_boundary() -> BoundaryData {
    BoundaryData::Ramp {
        values: BTreeMap::from([(Side::Left, 0.0), (Side::Right, 1.0)]),
        t_ramp: 0.1,
    }
}

fn joule_coupling() -> CouplingConfig {
    CouplingConfig {
        t_final: 0.2,
        steps: 20,
        fp_rtol: 1e-9,
        fp_max_iter: 50,
        params: EstimateParams::from_q(9.0 / 8.0, 1.5),
        ..CouplingConfig::default()
    }
}

fn joule_mesh() -> Mesh {
    build_rect_mesh(16, 16, 1.0, 1.0, &[Side::Left, Side::Right]).unwrap()
}

fn max_step_distance(mesh: &Mesh, a: &Trajectory, b: &Trajectory) -> f64 {
    a.u.iter()
        .zip(&b.u)
        .map(|(x, y)| lp_norm(mesh, &diff(x, y), 2.0))
        .fold(0.0, f64::max)
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mesh = joule_mesh();
    let spec = joule_spec();
    let boundary = joule_boundary();
    let config = joule_coupling();
    let u0 = ScalarField::constant(&mesh, 0.0);
    let run = |config: &CouplingConfig, seed: SeedPolicy| {
        let problem = Problem {
            mesh: &mesh,
            spec: &spec,
            boundary: &boundary,
            config,
            eps: 1e-3,
        };
        run_simulation_with(&problem, &u0, seed, None)
    };
    let base = match run(&config, SeedPolicy::PreviousStep) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("base run failed: {e}")),
    };
    let doubled_cfg = CouplingConfig {
        fp_max_iter: 2 * config.fp_max_iter,
        ..config.clone()
    };
    let doubled = run(&doubled_cfg, SeedPolicy::PreviousStep);
    let seeded = run(&config, SeedPolicy::Constant(1.0));
    let (Ok(doubled), Ok(seeded)) = (doubled, seeded) else {
        return outcome(false, "comparison run failed");
    };
    let limit = 10.0 * config.fp_rtol;
    let d_iter = max_step_distance(&mesh, &base, &doubled);
    let d_seed = max_step_distance(&mesh, &base, &seeded);
    let max_fp = base.fp_iters.iter().copied().max().unwrap_or(0);
    let final_ok = base.fp_histories[1..]
        .iter()
        .all(|h| h.iter().all(|v| v.is_finite()) && *h.last().unwrap() <= config.fp_rtol);
    let (fast, time) = within(start.elapsed(), 60.0);
    outcome(
        base.steps() == 20 && max_fp <= 50 && final_ok && d_iter <= limit && d_seed <= limit && fast,
        format!(
            "20 steps, max fixed-point iterations {max_fp}, distance under doubled cap {d_iter:.2e}, under second seed {d_seed:.2e} (limit {limit:.0e}), {time}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mesh = joule_mesh();
    let u0 = ScalarField::constant(&mesh, 0.0);
    let config = joule_coupling();
    let cont = match eps_continuation(&mesh, &config, &joule_spec(), &joule_boundary(), &u0) {
        Ok(c) => c,
        Err(e) => return outcome(false, format!("continuation failed: {e}")),
    };
    let rows = &cont.ledger.rows;
    if let Some(r) = rows.iter().find(|r| r.failure.is_some()) {
        return outcome(false, format!("eps = {} failed: {}", r.eps, r.failure.as_deref().unwrap_or("")));
    }
    let quantities: [(&str, fn(&thermistor_core::estimates::EstimateRow) -> f64); 5] = [
        ("u_LinfL1", |r| r.u_linf_l1),
        ("weighted_grad", |r| r.weighted_grad),
        ("phi_norm", |r| r.phi_norm),
        ("f_eps_integral", |r| r.f_eps_integral),
        ("u_LrLr", |r| r.u_lr_lr),
    ];
    let mut bad = Vec::new();
    let mut worst_change = 0.0f64;
    let n = rows.len();
    for (name, get) in quantities {
        let v0 = get(&rows[0]);
        if rows.iter().any(|r| get(r) > 2.0 * v0) {
            bad.push(format!("{name} exceeds twice its largest-eps value"));
        }
        let (a, b) = (get(&rows[n - 2]), get(&rows[n - 1]));
        let change = (b - a).abs() / a.abs().max(b.abs());
        worst_change = worst_change.max(change);
        if change > 0.10 {
            bad.push(format!("{name} changes by {change:.3} between the two smallest eps"));
        }
    }
    let dists: Vec<f64> = rows[1..].iter().map(|r| r.cauchy_dist).collect();
    if !dists.windows(2).all(|w| w[1] < w[0]) {
        bad.push("Cauchy distances not strictly decreasing".to_string());
    }
    let (fast, time) = within(start.elapsed(), 240.0);
    outcome(
        bad.is_empty() && fast,
        format!(
            "largest relative change between smallest eps {worst_change:.2e}, Cauchy distances [{}], {time}{}",
            dists.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>().join(", "),
            detail_list(&bad)
        ),
    )
}

fn criterion_7() -> Outcome {
    let report = phipsi_suite(&[0.1, 5.0 / 16.0, 0.9], 1000, 100_000, SEED);
    let bad = failures(&report);
    let orders: Vec<String> = report
        .checks
        .iter()
        .filter(|c| c.name.contains("derivative"))
        .map(|c| c.detail.rsplit(' ').next().unwrap_or("").to_string())
        .collect();
    outcome(
        bad.is_empty(),
        format!("observed orders [{}]{}", orders.join(", "), detail_list(&bad)),
    )
}

fn criterion_8() -> Outcome {
    let report = interpolation_suite(16, &[1.05, 9.0 / 8.0, 1.15], 1000, SEED);
    let bad = failures(&report);
    outcome(
        bad.is_empty(),
        format!("{} checks over 1000 fields per q{}", report.checks.len(), detail_list(&bad)),
    )
}

fn criterion_9() -> Outcome {
    let ohmic = ConstitutiveSpec {
        delta: 1.0,
        sigma0: Profile::Constant(1.3),
        ..ConstitutiveSpec::ohmic(1.3, 1.0, 0.0, 1.0, 0.0)
    };
    let exact = (0..=40).all(|k| {
        let v = 0.125 * k as f64;
        ohmic.iv_characteristic(0.0, v).unwrap() == 1.3 * v
    });
    let v = 2.0;
    let deltas = [1e-1, 1e-2, 1e-3, 1e-4];
    let devs: Vec<f64> = deltas
        .iter()
        .map(|&delta| {
            let spec = ConstitutiveSpec {
                p: 4.0,
                delta,
                ..ConstitutiveSpec::ohmic(1.0, 1.0, 0.0, 1.0, 0.0)
            };
            (spec.iv_characteristic(0.0, v).unwrap() - spec.iv_limit(0.0, v)).abs()
        })
        .collect();
    // least-squares slope of log deviation against log delta
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = devs.iter().map(|d| d.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
    outcome(
        exact && decreasing && (slope - 1.0).abs() <= 0.1,
        format!("p=2 exactly Ohmic: {exact}, p=4 deviation slope {slope:.4}"),
    )
}

fn criterion_10() -> Outcome {
    let cfg = RunConfig {
        mesh: MeshConfig {
            nx: 16,
            ny: 16,
            lx: 1.0,
            ly: 1.0,
            dirichlet_sides: vec![Side::Left, Side::Right],
        },
        constitutive: joule_spec(),
        coupling: CouplingConfig {
            eps_schedule: vec![1e-3],
            ..joule_coupling()
        },
        boundary: joule_boundary(),
        initial: InitialData::constant(0.0),
        output: OutputConfig {
            dir: None,
            formats: vec![OutputFormat::Csv],
            stride: 1,
        },
    };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        if let Err(e) = run_pipeline(&cfg, d.path()) {
            return outcome(false, format!("run failed: {e}"));
        }
    }
    let mut compared = 0;
    for name in ["trajectory_eps0.csv", "ledger.csv"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        if a != b {
            return outcome(false, format!("{name} differs between runs"));
        }
        compared += a.len();
    }
    outcome(true, format!("trajectory and ledger CSVs byte-identical ({compared} bytes)"))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "monotonicity lower bounds", criterion_1),
        (2, "P1 exactness for linear potentials", criterion_2),
        (3, "Kacanov energy descent and uniqueness", criterion_3),
        (4, "heat equation ODE oracle", criterion_4),
        (5, "coupled fixed point", criterion_5),
        (6, "eps-uniform estimates", criterion_6),
        (7, "Phi/Psi calculus", criterion_7),
        (8, "interpolation inequality", criterion_8),
        (9, "I-V characteristics", criterion_9),
        (10, "determinism", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut all = true;
    for (n, name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == &n.to_string()) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        all &= o.passed;
        println!(
            "criterion {n:>2} {} {name} ({:.1}s): {}",
            if o.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
