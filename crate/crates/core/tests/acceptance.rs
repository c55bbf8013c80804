//! Acceptance criteria, one line each. Runs without the libtest harness so the
//! output is exactly one PASS/FAIL line per criterion plus a summary.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use relfreq::binom::eigprob;
use relfreq::convergence::{certify_theorem3, n_epsilon_omega};
use relfreq::freqop::{
    build_eigenprojectors, build_frequency_operator, expectation, spectral_reconstruction_check,
    variance_forms, variance_spectral, verify_spectrum,
};
use relfreq::hilbert::{probability, tensor_power_state, Projector, StateVector};
use relfreq::mcsim::{
    run_experiment, simulate_trial, verify_bridging_with, TrialStream, DEFAULT_SEED,
};
use relfreq::suite::random_instance;

const TOL_SPECTRUM: f64 = 1e-8;
const TOL_IDENTITY: f64 = 1e-10;
const N_MAX: usize = 8;
const INSTANCES: usize = 20;
const INSTANCE_SEED: u64 = 2024;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn instances(d: usize, rank: usize) -> Vec<(Projector, StateVector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(INSTANCE_SEED);
    (0..INSTANCES)
        .map(|_| random_instance(d, rank, &mut rng).expect("valid instance"))
        .collect()
}

fn grid() -> Vec<(f64, f64, f64)> {
    let mut cells = Vec::new();
    for pc in (5..=95).step_by(5) {
        for eps in [0.01, 0.05, 0.1] {
            for omega in [0.01, 0.05, 0.1] {
                cells.push((pc as f64 / 100.0, eps, omega));
            }
        }
    }
    cells
}

fn exact_spectrum() -> Outcome {
    let (proj, _) = &instances(2, 1)[0];
    let mut worst = 0.0f64;
    let mut ok = true;
    for n in 1..=N_MAX {
        let f = build_frequency_operator(proj, n).unwrap();
        let report = verify_spectrum(&f).unwrap();
        worst = worst.max(report.max_deviation);
        ok &= report.membership_ok && report.multiplicity_checked && report.multiplicity_ok;
    }
    ok &= worst < TOL_SPECTRUM;
    outcome(
        ok,
        format!("max eigenvalue offset {worst:.2e}, multiplicities C(N,K) for N=1..{N_MAX}"),
    )
}

fn completeness_and_spectral_form() -> Outcome {
    let (mut completeness, mut reconstruction) = (0.0f64, 0.0f64);
    for (proj, _) in instances(2, 1) {
        for n in 1..=N_MAX {
            let f = build_frequency_operator(&proj, n).unwrap();
            let q = build_eigenprojectors(&proj, n).unwrap();
            completeness = completeness.max(q.completeness_deviation());
            reconstruction = reconstruction.max(spectral_reconstruction_check(&f, &q).unwrap());
        }
    }
    outcome(
        completeness < TOL_IDENTITY && reconstruction < TOL_IDENTITY,
        format!("sum Q = I within {completeness:.2e}, sum (K/N) Q = F within {reconstruction:.2e}"),
    )
}

fn expectation_identity() -> Outcome {
    let mut worst = 0.0f64;
    for (proj, psi) in instances(2, 1) {
        let p = probability(&psi, &proj).unwrap();
        for n in 1..=N_MAX {
            let f = build_frequency_operator(&proj, n).unwrap();
            let big = tensor_power_state(&psi, n).unwrap();
            worst = worst.max((expectation(&f, &big).unwrap() - p).abs());
        }
    }
    outcome(worst < TOL_IDENTITY, format!("max |<F> - p| = {worst:.2e}"))
}

fn variance_law() -> Outcome {
    let mut worst = [0.0f64; 4];
    for (proj, psi) in instances(2, 1) {
        let p = probability(&psi, &proj).unwrap();
        for n in 1..=N_MAX {
            let f = build_frequency_operator(&proj, n).unwrap();
            let q = build_eigenprojectors(&proj, n).unwrap();
            let big = tensor_power_state(&psi, n).unwrap();
            let closed = p * (1.0 - p) / n as f64;
            let forms = variance_forms(&f, &big, p).unwrap();
            let spectral = variance_spectral(&q, &big, p).unwrap();
            for (w, v) in
                worst
                    .iter_mut()
                    .zip([forms.direct, forms.second_moment, forms.distance, spectral])
            {
                *w = w.max((v - closed).abs());
            }
        }
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    outcome(
        max < TOL_IDENTITY,
        format!(
            "direct {:.2e}, second moment {:.2e}, distance {:.2e}, spectral {:.2e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn binomial_law() -> Outcome {
    let mut worst = 0.0f64;
    for (proj, psi) in instances(2, 1) {
        let p = probability(&psi, &proj).unwrap();
        for n in 1..=N_MAX {
            let q = build_eigenprojectors(&proj, n).unwrap();
            let big = tensor_power_state(&psi, n).unwrap();
            for (k, w) in q
                .ensemble_probabilities(&big)
                .unwrap()
                .into_iter()
                .enumerate()
            {
                worst = worst.max((w - eigprob(p, n as u64, k as u64).unwrap()).abs());
            }
        }
    }
    // Extremes: dense weights and the closed form must both be Kronecker deltas.
    let mut extremes_exact = true;
    for (rank, p) in [(0usize, 0.0f64), (2, 1.0)] {
        let mut rng = ChaCha8Rng::seed_from_u64(INSTANCE_SEED);
        let (proj, psi) = random_instance(2, rank, &mut rng).unwrap();
        for n in 1..=N_MAX {
            let q = build_eigenprojectors(&proj, n).unwrap();
            let big = tensor_power_state(&psi, n).unwrap();
            let weights = q.ensemble_probabilities(&big).unwrap();
            for (k, w) in weights.iter().enumerate() {
                let delta = if (rank == 0 && k == 0) || (rank == 2 && k == n) {
                    1.0
                } else {
                    0.0
                };
                extremes_exact &= eigprob(p, n as u64, k as u64).unwrap() == delta;
                extremes_exact &= (w - delta).abs() < TOL_IDENTITY;
            }
        }
    }
    outcome(
        worst < TOL_IDENTITY && extremes_exact,
        format!("max |<Q_K> - binomial| = {worst:.2e}, extremes exact: {extremes_exact}"),
    )
}

fn threshold_grid() -> Outcome {
    let cells = grid();
    let mut bad = 0;
    for &(p, eps, omega) in &cells {
        let bound = n_epsilon_omega(p, eps, omega).unwrap();
        // Integer oracle on the percent grid: ceil(pc(100-pc)100 / (ec^2 oc)).
        let (pc, ec, oc) = (
            (p * 100.0).round() as u64,
            (eps * 100.0).round() as u64,
            (omega * 100.0).round() as u64,
        );
        let expected = (pc * (100 - pc) * 100).div_ceil(ec * ec * oc).max(1);
        if !bound.sandwich_holds() || bound.n_threshold != expected {
            bad += 1;
        }
    }
    let spot = n_epsilon_omega(0.5, 0.1, 0.05).unwrap().n_threshold;
    outcome(
        bad == 0 && spot == 500,
        format!(
            "{} cells, {bad} off the integer oracle, spot value {spot}",
            cells.len()
        ),
    )
}

fn certification_grid() -> Outcome {
    let cells = grid();
    let mut failures = 0;
    let mut largest_n = 0;
    let mut closest = 0.0f64;
    for &(p, eps, omega) in &cells {
        let n = n_epsilon_omega(p, eps, omega).unwrap().n_threshold;
        largest_n = largest_n.max(n);
        let report = certify_theorem3(p, eps, omega, &[n]).unwrap();
        let row = &report.rows[0];
        let ok = row.tail > 0.0
            && row.log_tail.is_finite()
            && row.tail < omega
            && row.chebyshev_ceiling >= row.tail;
        closest = closest.max(row.tail / omega);
        if !ok {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!(
            "{} cells up to N={largest_n}, {failures} failures, max tail/omega {closest:.3}",
            cells.len()
        ),
    )
}

fn bridging() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(INSTANCE_SEED);
    let (proj, psi) = random_instance(2, 1, &mut rng).unwrap();
    let p = probability(&psi, &proj).unwrap();
    let ops: Vec<_> = (1..=N_MAX)
        .map(|n| {
            (
                build_frequency_operator(&proj, n).unwrap(),
                build_eigenprojectors(&proj, n).unwrap(),
            )
        })
        .collect();
    let mut passed = 0;
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let n = 1 + (trial as usize % N_MAX);
        let mut stream = TrialStream::new(DEFAULT_SEED, trial);
        let record = simulate_trial(p, n as u64, &mut stream).unwrap();
        let (f, q) = &ops[n - 1];
        let report = verify_bridging_with(f, q, &psi, &proj, &record).unwrap();
        worst = worst.max(report.q_deviation).max(report.f_deviation);
        if report.holds && worst < TOL_IDENTITY {
            passed += 1;
        }
    }
    outcome(
        passed == 100,
        format!("{passed}/100 trials, max deviation {worst:.2e}"),
    )
}

fn monte_carlo() -> Outcome {
    let first = run_experiment(0.3, 100, 0.1, 100_000, DEFAULT_SEED).unwrap();
    let second = run_experiment(0.3, 100, 0.1, 100_000, DEFAULT_SEED).unwrap();
    let identical =
        first == second && first.empirical_tail.to_bits() == second.empirical_tail.to_bits();
    let z = (first.empirical_tail - first.exact_tail) / first.std_error;
    outcome(
        first.within_sigmas(5.0) && identical,
        format!(
            "empirical {:.5} vs exact {:.5} ({z:+.2} sigma), rerun identical: {identical}",
            first.empirical_tail, first.exact_tail
        ),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, Option<Duration>); 9] = [
        (
            "exact spectrum",
            exact_spectrum,
            Some(Duration::from_secs(10)),
        ),
        (
            "completeness and spectral form",
            completeness_and_spectral_form,
            Some(Duration::from_secs(30)),
        ),
        ("expectation identity", expectation_identity, None),
        ("variance law", variance_law, None),
        ("binomial eigen-probabilities", binomial_law, None),
        (
            "threshold sandwich",
            threshold_grid,
            Some(Duration::from_secs(1)),
        ),
        (
            "outside-epsilon certification",
            certification_grid,
            Some(Duration::from_secs(60)),
        ),
        ("measurement bridging", bridging, None),
        (
            "Monte Carlo agreement",
            monte_carlo,
            Some(Duration::from_secs(30)),
        ),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let ok = result.passed && in_time;
        if !ok {
            failed += 1;
        }
        let budget = limit.map_or(String::new(), |l| format!(" / {}s", l.as_secs()));
        println!(
            "criterion {}: {} {name}: {} [{:.3}s{budget}]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
