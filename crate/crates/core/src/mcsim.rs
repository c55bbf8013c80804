//! Simulated complete measurements of an event on `N` independent copies.
//!
//! Each trial draws its own ChaCha20 stream: the key comes from the master
//! seed and the stream id is the trial index, so every trial is reproducible
//! on its own and results do not depend on how trials are scheduled across
//! threads. A copy shows the event when one uniform draw in `[0, 1)`, built
//! from the top 53 bits of a `u64`, falls below `p`.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::binom::{is_outside, tail_outside_epsilon};
use crate::error::{check_range, Error, Result};
use crate::freqop::{
    build_eigenprojectors, build_frequency_operator, EigenProjectorFamily, FrequencyOperator,
};
use crate::hilbert::{
    max_abs_diff_vec, orthocomplement, product_state, CVector, Projector, StateVector, TOL_OP,
};

pub const RNG_NAME: &str =
    "ChaCha20Rng/rand_chacha-0.9 key=seed_from_u64(master_seed) stream=trial_index u01=(u64>>11)*2^-53";

/// Seed used when none is supplied.
pub const DEFAULT_SEED: u64 = 0x5eed_f00d;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SeedPath {
    pub master_seed: u64,
    pub trial_index: u64,
}

/// The random stream of one trial.
pub struct TrialStream {
    rng: ChaCha20Rng,
    path: SeedPath,
}

impl TrialStream {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
        rng.set_stream(trial_index);
        TrialStream {
            rng,
            path: SeedPath {
                master_seed,
                trial_index,
            },
        }
    }

    pub fn path(&self) -> SeedPath {
        self.path
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn occurs(&mut self, p: f64) -> bool {
        self.next_uniform() < p
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    outcomes: Vec<bool>,
    k_count: u64,
    seed_path: SeedPath,
}

impl TrialRecord {
    pub fn from_outcomes(outcomes: Vec<bool>, seed_path: SeedPath) -> Self {
        let k_count = outcomes.iter().filter(|&&b| b).count() as u64;
        TrialRecord {
            outcomes,
            k_count,
            seed_path,
        }
    }

    pub fn outcomes(&self) -> &[bool] {
        &self.outcomes
    }

    pub fn k_count(&self) -> u64 {
        self.k_count
    }

    pub fn n_copies(&self) -> u64 {
        self.outcomes.len() as u64
    }

    pub fn seed_path(&self) -> SeedPath {
        self.seed_path
    }

    /// Experimental relative frequency `K/N`.
    pub fn frequency(&self) -> f64 {
        self.k_count as f64 / self.n_copies() as f64
    }
}

fn validate_trial(p: f64, n: u64) -> Result<()> {
    check_range("p", p, (0.0..=1.0).contains(&p), "0 <= p <= 1")?;
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "N",
            value: 0.0,
            expected: "N >= 1",
        });
    }
    Ok(())
}

/// `N` Bernoulli(`p`) outcomes, one uniform draw per copy.
pub fn simulate_trial(p: f64, n: u64, stream: &mut TrialStream) -> Result<TrialRecord> {
    validate_trial(p, n)?;
    let outcomes = (0..n).map(|_| stream.occurs(p)).collect();
    Ok(TrialRecord::from_outcomes(outcomes, stream.path()))
}

/// Same draws as [`simulate_trial`], keeping only the count.
fn count_occurrences(p: f64, n: u64, stream: &mut TrialStream) -> u64 {
    (0..n).filter(|_| stream.occurs(p)).count() as u64
}

/// The count `K` of every trial `0..trials`, in trial order.
pub fn trial_counts(p: f64, n: u64, trials: u64, master_seed: u64) -> Result<Vec<u64>> {
    validate_trial(p, n)?;
    let count = |i: u64| count_occurrences(p, n, &mut TrialStream::new(master_seed, i));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok((0..trials).into_par_iter().map(count).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok((0..trials).map(count).collect())
    }
}

/// Lüders update after outcome `1` (event occurred) or `0` (opposite event).
pub fn post_measurement_state(
    psi: &StateVector,
    p: &Projector,
    outcome: bool,
) -> Result<StateVector> {
    let projected = if outcome {
        p.apply(psi)?
    } else {
        orthocomplement(p).apply(psi)?
    };
    let norm_sqr = projected.norm_squared();
    if norm_sqr < TOL_OP {
        return Err(Error::UnreachableOutcome { outcome });
    }
    Ok(StateVector::from_unchecked(
        projected.unscale(norm_sqr.sqrt()),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BridgingReport {
    pub n: u64,
    pub k: u64,
    /// `max |Q_N^K Ψ′ − Ψ′|`
    pub q_deviation: f64,
    /// `max |F Ψ′ − (K/N) Ψ′|`
    pub f_deviation: f64,
    /// At `K = 0` the eigen-relation reads `F Ψ′ = 0`.
    pub k_zero: bool,
    pub holds: bool,
}

/// The ensemble state after measurement: one post-measurement factor per outcome.
pub fn post_measurement_ensemble(
    psi: &StateVector,
    p: &Projector,
    record: &TrialRecord,
) -> Result<StateVector> {
    let factors = record
        .outcomes()
        .iter()
        .map(|&o| post_measurement_state(psi, p, o))
        .collect::<Result<Vec<_>>>()?;
    product_state(&factors)
}

/// Checks `Q_N^K Ψ′ = Ψ′` and `F Ψ′ = (K/N) Ψ′` with prebuilt operators.
pub fn verify_bridging_with(
    f: &FrequencyOperator,
    q: &EigenProjectorFamily,
    psi: &StateVector,
    p: &Projector,
    record: &TrialRecord,
) -> Result<BridgingReport> {
    let n = record.n_copies();
    if f.n_copies() as u64 != n || q.n_copies() as u64 != n {
        return Err(Error::MismatchedFamily(format!(
            "record has N = {n}, operators have N = {}",
            f.n_copies()
        )));
    }
    let k = record.k_count();
    let after = post_measurement_ensemble(psi, p, record)?;
    let amps = after.amplitudes();
    let qk = q.get(k as usize).expect("K <= N");
    let q_deviation = max_abs_diff_vec(&qk.apply(&after)?, amps);
    let scaled: CVector = amps.scale(k as f64 / n as f64);
    let f_deviation = max_abs_diff_vec(&f.op().apply(&after)?, &scaled);
    Ok(BridgingReport {
        n,
        k,
        q_deviation,
        f_deviation,
        k_zero: k == 0,
        holds: q_deviation < TOL_OP && f_deviation < TOL_OP,
    })
}

pub fn verify_bridging(
    psi: &StateVector,
    p: &Projector,
    record: &TrialRecord,
) -> Result<BridgingReport> {
    let n = record.n_copies() as usize;
    let f = build_frequency_operator(p, n)?;
    let q = build_eigenprojectors(p, n)?;
    verify_bridging_with(&f, &q, psi, p, record)
}

/// Bridging checks over the first `trials` trials of a seeded experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BridgingBatch {
    pub trials: u64,
    pub passed: u64,
    pub max_q_deviation: f64,
    pub max_f_deviation: f64,
}

impl BridgingBatch {
    pub fn holds(&self) -> bool {
        self.passed == self.trials
    }
}

/// Replays trials `0..trials` of `(p, n, master_seed)` on a qubit prepared
/// with probability `p` for the event `|0><0|`, and checks each post-measurement
/// ensemble against the operators built once for `n`.
pub fn bridging_batch(p: f64, n: u64, trials: u64, master_seed: u64) -> Result<BridgingBatch> {
    validate_trial(p, n)?;
    let proj = Projector::diagonal(&[true, false])?;
    let psi = crate::random::state_with_probability(&proj, p)?;
    let f = build_frequency_operator(&proj, n as usize)?;
    let q = build_eigenprojectors(&proj, n as usize)?;
    let mut batch = BridgingBatch {
        trials,
        passed: 0,
        max_q_deviation: 0.0,
        max_f_deviation: 0.0,
    };
    for i in 0..trials {
        let record = simulate_trial(p, n, &mut TrialStream::new(master_seed, i))?;
        let r = verify_bridging_with(&f, &q, &psi, &proj, &record)?;
        batch.passed += u64::from(r.holds);
        batch.max_q_deviation = batch.max_q_deviation.max(r.q_deviation);
        batch.max_f_deviation = batch.max_f_deviation.max(r.f_deviation);
    }
    Ok(batch)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentParams {
    pub p: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub eps: f64,
    #[serde(rename = "R")]
    pub trials: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub params: ExperimentParams,
    /// Fraction of trials with `|K/N − p| > ε`.
    pub empirical_tail: f64,
    pub exact_tail: f64,
    /// `sqrt(exact_tail (1 − exact_tail) / R)`
    pub std_error: f64,
    pub outside_count: u64,
    pub seed: u64,
    pub rng_name: &'static str,
}

impl ExperimentSummary {
    /// `|empirical − exact| <= sigmas · std_error`
    pub fn within_sigmas(&self, sigmas: f64) -> bool {
        (self.empirical_tail - self.exact_tail).abs() <= sigmas * self.std_error
    }
}

pub fn run_experiment(
    p: f64,
    n: u64,
    eps: f64,
    trials: u64,
    master_seed: u64,
) -> Result<ExperimentSummary> {
    if trials == 0 {
        return Err(Error::OutOfRange {
            name: "R",
            value: 0.0,
            expected: "R >= 1",
        });
    }
    // Validates 0 < p < 1 and eps > 0 before any sampling.
    let exact_tail = tail_outside_epsilon(p, n, eps)?;
    let counts = trial_counts(p, n, trials, master_seed)?;
    let outside_count = counts.iter().filter(|&&k| is_outside(k, n, p, eps)).count() as u64;
    Ok(ExperimentSummary {
        params: ExperimentParams { p, n, eps, trials },
        empirical_tail: outside_count as f64 / trials as f64,
        exact_tail,
        std_error: (exact_tail * (1.0 - exact_tail) / trials as f64).sqrt(),
        outside_count,
        seed: master_seed,
        rng_name: RNG_NAME,
    })
}

#[derive(Serialize)]
struct TrialCsvRow {
    trial: u64,
    #[serde(rename = "K")]
    k: u64,
    #[serde(rename = "K/N")]
    frequency: f64,
}

/// Writes `trial, K, K/N` for every trial.
pub fn write_trials_csv<W: Write>(n: u64, counts: &[u64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, &k) in counts.iter().enumerate() {
        w.serialize(TrialCsvRow {
            trial: i as u64,
            k,
            frequency: k as f64 / n as f64,
        })?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}
