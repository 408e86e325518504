//! Seeded property suites for the constitutive law and the estimate
//! calculus. Each suite is its own oracle and returns one check per case.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constitutive::{h1_witness, monotonicity_gap, scalar_vector_equivalence_check, ConstitutiveSpec, Profile};
use crate::estimates::{interpolation_check, phi_lambda, psi_lambda, psi_lambda_lower_bound, VerificationReport};
use crate::fem::ScalarField;
use crate::mesh::{build_rect_mesh, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Monotonicity,
    H1,
    Interpolation,
    PhiPsi,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Monotonicity, Suite::H1, Suite::Interpolation, Suite::PhiPsi];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Monotonicity => "monotonicity",
            Suite::H1 => "h1",
            Suite::Interpolation => "interpolation",
            Suite::PhiPsi => "phipsi",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }

    /// Runs the suite with its default case list.
    pub fn run(self, samples: usize, seed: u64) -> VerificationReport {
        match self {
            Suite::Monotonicity => monotonicity_suite(&[1.2, 1.5, 2.0, 3.0, 4.0], &[0.0, 0.1, 1.0], samples, seed),
            Suite::H1 => h1_suite(samples, seed),
            Suite::Interpolation => interpolation_suite(16, &[1.05, 9.0 / 8.0, 1.15], samples, seed),
            Suite::PhiPsi => phipsi_suite(&[0.1, 5.0 / 16.0, 0.9], 1000, samples, seed),
        }
    }
}

fn random_in_disk(rng: &mut ChaCha8Rng, radius: f64) -> [f64; 2] {
    let r = radius * rng.gen::<f64>().sqrt();
    let t = rng.gen::<f64>() * TAU;
    [r * t.cos(), r * t.sin()]
}

/// Lower monotonicity bounds of the `p`-flux on `samples` random pairs in
/// the disk of radius 10, for every `(p, δ)` except the singular ones.
pub fn monotonicity_suite(ps: &[f64], deltas: &[f64], samples: usize, seed: u64) -> VerificationReport {
    let mut report = VerificationReport::default();
    for &p in ps {
        for &delta in deltas {
            if p < 2.0 && delta == 0.0 {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut bound_failures = 0usize;
            let mut positivity_failures = 0usize;
            let mut worst = f64::INFINITY;
            for _ in 0..samples {
                let xi = random_in_disk(&mut rng, 10.0);
                let xibar = random_in_disk(&mut rng, 10.0);
                let gap = monotonicity_gap(xi, xibar, p, delta);
                let slack = gap.lhs - gap.lower_bound + 1e-12 * (1.0 + gap.lhs.abs());
                worst = worst.min(slack);
                if !(slack >= 0.0) {
                    bound_failures += 1;
                }
                let dist = ((xi[0] - xibar[0]).powi(2) + (xi[1] - xibar[1]).powi(2)).sqrt();
                if dist > 1e-9 && !(gap.lhs > 0.0) {
                    positivity_failures += 1;
                }
            }
            report.push(
                format!("monotonicity p={p} delta={delta}"),
                bound_failures == 0 && positivity_failures == 0,
                format!(
                    "{samples} pairs, {bound_failures} bound failures, {positivity_failures} positivity failures, min slack {worst:e}"
                ),
            );
        }
    }
    report
}

/// Growth and coercivity constants for a few materials, and the
/// scalar/vector monotonicity equivalence on a monotone and a non-monotone
/// flux coefficient.
pub fn h1_suite(samples: usize, seed: u64) -> VerificationReport {
    let mut report = VerificationReport::default();
    let samples = samples.max(1);
    for (p, delta) in [(1.5, 0.1), (2.0, 0.0), (3.0, 0.0), (3.0, 0.5), (4.0, 1.0)] {
        let spec = ConstitutiveSpec {
            p,
            delta,
            sigma0: Profile::Saturating { lower: 0.5, upper: 2.0 },
            ..ConstitutiveSpec::ohmic(1.0, 1.0, 0.0, 1.0, 0.0)
        };
        let name = format!("h1 p={p} delta={delta}");
        match h1_witness(&spec, 100.0, samples, seed) {
            Ok(c) => report.push(
                name,
                c.c1 > 0.0 && c.c2 >= 0.0 && c.c3 > 0.0 && c.c2.is_finite() && c.c3.is_finite(),
                format!("c1={:e} c2={:e} c3={:e}", c.c1, c.c2, c.c3),
            ),
            Err(e) => report.push(name, false, e.to_string()),
        }
    }

    let monotone = scalar_vector_equivalence_check(|t| (0.1 + t * t).powf(0.5), samples, 10.0, seed);
    report.push(
        "equivalence monotone flux",
        monotone.holds() && monotone.consistent(),
        format!("{monotone:?}"),
    );
    // τ/(1+τ²) decreases for τ > 1
    let bent = scalar_vector_equivalence_check(|t| 1.0 / (1.0 + t * t), samples, 10.0, seed);
    report.push(
        "equivalence non-monotone flux detected",
        !bent.holds() && bent.consistent() && bent.witness.is_some(),
        format!("{bent:?}"),
    );
    report
}

/// The interpolation inequality on random fields over an `n × n` unit
/// square, plus equality for a constant field.
pub fn interpolation_suite(n: usize, qs: &[f64], samples: usize, seed: u64) -> VerificationReport {
    let mut report = VerificationReport::default();
    let mesh = build_rect_mesh(n, n, 1.0, 1.0, &[Side::Left]).expect("unit square mesh");
    let nodes = mesh.num_nodes();
    for &q in qs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut failures = 0usize;
        let mut worst = 0.0f64;
        for k in 0..samples {
            let values: Vec<f64> = match k % 3 {
                0 => (0..nodes).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                1 => {
                    // a few spikes on a zero background
                    let mut v = vec![0.0; nodes];
                    for _ in 0..rng.gen_range(1..6) {
                        v[rng.gen_range(0..nodes)] = 10f64.powf(rng.gen_range(-3.0..3.0));
                    }
                    v
                }
                _ => {
                    let (a, b, c) = (rng.gen_range(0.0..8.0), rng.gen_range(0.0..8.0), rng.gen_range(0.0..TAU));
                    mesh.nodes.iter().map(|[x, y]| (a * x + b * y + c).sin().powi(3)).collect()
                }
            };
            let field = ScalarField::new(values);
            match interpolation_check(&mesh, &field, q) {
                Ok(i) => {
                    if i.rhs > 0.0 {
                        worst = worst.max(i.lhs / i.rhs);
                    }
                    if !(i.lhs <= i.rhs * (1.0 + 1e-10)) {
                        failures += 1;
                    }
                }
                Err(_) => failures += 1,
            }
        }
        report.push(
            format!("interpolation q={q}"),
            failures == 0,
            format!("{samples} fields, {failures} failures, max lhs/rhs {worst:.15}"),
        );
        let constant = ScalarField::constant(&mesh, 1.7);
        let (ok, detail) = match interpolation_check(&mesh, &constant, q) {
            Ok(i) => ((i.lhs - i.rhs).abs() <= 1e-12 * i.rhs, format!("lhs={:e} rhs={:e}", i.lhs, i.rhs)),
            Err(e) => (false, e.to_string()),
        };
        report.push(format!("interpolation constant q={q}"), ok, detail);
    }
    report
}

/// Order of the central difference `Ψ' ≈ Φ` at `points` samples, and the
/// two-sided bounds on `Ψ` at `bound_samples` samples with `|s|`
/// log-uniform in `[1e-6, 1e4]`.
pub fn phipsi_suite(lambdas: &[f64], points: usize, bound_samples: usize, seed: u64) -> VerificationReport {
    let mut report = VerificationReport::default();
    for &lambda in lambdas {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = |s: f64| psi_lambda(s, lambda).expect("lambda checked");
        let phi = |s: f64| phi_lambda(s, lambda).expect("lambda checked");

        let mut err = [0.0f64; 2];
        for _ in 0..points {
            let s = 10f64.powf(rng.gen_range(-3.0..2.0)) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            for (k, e) in err.iter_mut().enumerate() {
                let h = 0.1 * s.abs() / 2f64.powi(k as i32);
                *e += ((psi(s + h) - psi(s - h)) / (2.0 * h) - phi(s)).abs() / (h * h);
            }
        }
        // err[k] is normalized by h², so the observed order is 2 + log2 of the ratio
        let order = 2.0 + (err[0] / err[1]).log2();
        report.push(
            format!("phipsi derivative lambda={lambda}"),
            order >= 1.9,
            format!("{points} points, observed order {order:.4}"),
        );

        let mut upper_failures = 0usize;
        let mut lower_failures = 0usize;
        let mut worst_lower = (f64::INFINITY, 0.0);
        for _ in 0..bound_samples {
            let s = 10f64.powf(rng.gen_range(-6.0..4.0)) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let v = psi(s);
            let slack = 1e-12 * (1.0 + v.abs());
            if !(v <= s.abs() + slack) {
                upper_failures += 1;
            }
            let gap = v - psi_lambda_lower_bound(s, lambda).expect("lambda checked");
            if gap < worst_lower.0 {
                worst_lower = (gap, s);
            }
            if !(gap >= -slack) {
                lower_failures += 1;
            }
        }
        report.push(
            format!("phipsi upper bound lambda={lambda}"),
            upper_failures == 0,
            format!("{bound_samples} samples, {upper_failures} failures"),
        );
        report.push(
            format!("phipsi lower bound lambda={lambda}"),
            lower_failures == 0,
            format!(
                "{bound_samples} samples, {lower_failures} failures, worst gap {:e} at s={:e}",
                worst_lower.0, worst_lower.1
            ),
        );
    }
    report
}
