//! Batch verification of the dense identities over random instances.
//!
//! For each random `(ψ, P)` and each `N = 1..=n_max` the dense operators are
//! built and every identity is measured as a maximum deviation. Extreme
//! projectors (rank `0` or `d`) make `p ∈ {0, 1}`; only the Kronecker-delta
//! law and the eigenstate equivalences are checked for them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::binom::eigprob;
use crate::error::{Error, Result};
use crate::freqop::{
    binomial_coefficient, build_eigenprojectors, build_frequency_operator, expectation,
    spectral_reconstruction_check, variance_forms, variance_spectral, verify_spectrum,
    SpectrumReport, MAX_ENUM_COPIES, TOL_EIG,
};
use crate::hilbert::{
    ee_link_check, probability, tensor_dim, tensor_power_state, Projector, StateVector,
    MAX_OPERATOR_DIM, TOL_OP,
};
use crate::random::{random_projector, random_state};

/// Pairwise orthogonality of the eigen-projectors costs `O(N² D³)`; it is
/// only evaluated up to this many copies.
pub const FAMILY_CHECK_MAX_N: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub d: usize,
    pub rank: usize,
    pub n_max: usize,
    pub instances: usize,
    pub seed: u64,
}

impl VerifyConfig {
    /// Rejects configurations whose operators would exceed the dense caps.
    pub fn validate(&self) -> Result<()> {
        if self.rank > self.d || self.d == 0 {
            return Err(Error::InvalidProjector(format!(
                "rank {} is not admissible in dimension {}",
                self.rank, self.d
            )));
        }
        if self.n_max > MAX_ENUM_COPIES {
            return Err(Error::TooManyCopies {
                n: self.n_max,
                cap: MAX_ENUM_COPIES,
            });
        }
        tensor_dim(self.d, self.n_max, MAX_OPERATOR_DIM)?;
        if self.instances == 0 {
            return Err(Error::Empty("instances"));
        }
        if self.n_max == 0 {
            return Err(Error::Empty("copy range"));
        }
        Ok(())
    }

    pub fn is_extreme(&self) -> bool {
        self.rank == 0 || self.rank == self.d
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentitySummary {
    pub name: &'static str,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub evaluations: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub extreme_regime: bool,
    pub identities: Vec<IdentitySummary>,
    pub passed: bool,
}

#[derive(Default)]
struct Tally {
    entries: Vec<IdentitySummary>,
}

impl Tally {
    fn record(&mut self, name: &'static str, deviation: f64, tolerance: f64) {
        let ok = deviation <= tolerance;
        match self.entries.iter_mut().find(|e| e.name == name) {
            Some(e) => {
                e.max_deviation = e.max_deviation.max(deviation);
                e.evaluations += 1;
                e.passed &= ok;
            }
            None => self.entries.push(IdentitySummary {
                name,
                max_deviation: deviation,
                tolerance,
                evaluations: 1,
                passed: ok,
            }),
        }
    }
}

/// One random instance: a projector and a state.
pub fn random_instance(
    d: usize,
    rank: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Projector, StateVector)> {
    Ok((random_projector(d, rank, rng)?, random_state(d, rng)?))
}

/// Spectrum of `F` on `n` copies for a random rank-`rank` projector in `C^d`.
pub fn random_spectrum(d: usize, rank: usize, n: usize, seed: u64) -> Result<SpectrumReport> {
    if rank > d || d == 0 {
        return Err(Error::InvalidProjector(format!(
            "rank {rank} is not admissible in dimension {d}"
        )));
    }
    if n == 0 {
        return Err(Error::Empty("copy range"));
    }
    tensor_dim(d, n, MAX_OPERATOR_DIM)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let proj = random_projector(d, rank, &mut rng)?;
    verify_spectrum(&build_frequency_operator(&proj, n)?)
}

fn check_interior(tally: &mut Tally, psi: &StateVector, proj: &Projector, n: usize) -> Result<()> {
    let p = probability(psi, proj)?;
    let f = build_frequency_operator(proj, n)?;
    let q = build_eigenprojectors(proj, n)?;
    let big = tensor_power_state(psi, n)?;
    let nf = n as f64;
    let closed_variance = p * (1.0 - p) / nf;

    tally.record("hermitian", f.op().hermitian_deviation(), TOL_OP);

    let spectrum = verify_spectrum(&f)?;
    tally.record("spectrum", spectrum.max_deviation, TOL_EIG);
    if !spectrum.membership_ok {
        tally.record("spectrum", f64::INFINITY, TOL_EIG);
    }
    if spectrum.multiplicity_checked {
        let worst = (0..=n)
            .map(|k| {
                let got = spectrum
                    .entries
                    .iter()
                    .find(|e| e.k == k)
                    .map_or(0, |e| e.multiplicity) as f64;
                (got - binomial_coefficient(n as u64, k as u64) as f64).abs()
            })
            .fold(0.0, f64::max);
        tally.record("spectrum_multiplicity", worst, 0.0);
    }

    tally.record("completeness", q.completeness_deviation(), TOL_OP);
    if n <= FAMILY_CHECK_MAX_N {
        tally.record("projector_family", q.defects().max(), TOL_OP);
    }
    tally.record(
        "spectral_form",
        spectral_reconstruction_check(&f, &q)?,
        TOL_OP,
    );
    tally.record("expectation", (expectation(&f, &big)? - p).abs(), TOL_OP);

    let weights = q.ensemble_probabilities(&big)?;
    let mean: f64 = weights
        .iter()
        .enumerate()
        .map(|(k, w)| k as f64 / nf * w)
        .sum();
    tally.record("mean_spectral", (mean - p).abs(), TOL_OP);

    let forms = variance_forms(&f, &big, p)?;
    tally.record(
        "variance_direct",
        (forms.direct - closed_variance).abs(),
        TOL_OP,
    );
    tally.record(
        "variance_second_moment",
        (forms.second_moment - closed_variance).abs(),
        TOL_OP,
    );
    tally.record(
        "variance_distance",
        (forms.distance - closed_variance).abs(),
        TOL_OP,
    );
    tally.record(
        "variance_spectral",
        (variance_spectral(&q, &big, p)? - closed_variance).abs(),
        TOL_OP,
    );

    let mut worst = 0.0f64;
    for (k, w) in weights.iter().enumerate() {
        worst = worst.max((w - eigprob(p, n as u64, k as u64)?).abs());
    }
    tally.record("binomial_law", worst, TOL_OP);
    Ok(())
}

fn check_extreme(tally: &mut Tally, psi: &StateVector, proj: &Projector, n: usize) -> Result<()> {
    let p = if proj.rank() == 0 { 0.0 } else { 1.0 };
    let q = build_eigenprojectors(proj, n)?;
    let big = tensor_power_state(psi, n)?;
    let delta = |k: usize| {
        let hit = if p == 0.0 { k == 0 } else { k == n };
        if hit {
            1.0
        } else {
            0.0
        }
    };
    let weights = q.ensemble_probabilities(&big)?;
    let dense = weights
        .iter()
        .enumerate()
        .map(|(k, w)| (w - delta(k)).abs())
        .fold(0.0, f64::max);
    tally.record("extreme_delta_dense", dense, TOL_OP);
    let mut closed = 0.0f64;
    for k in 0..=n {
        closed = closed.max((eigprob(p, n as u64, k as u64)? - delta(k)).abs());
    }
    tally.record("extreme_delta_closed_form", closed, 0.0);
    let link = ee_link_check(psi, proj)?;
    let agrees = link.consistent() && link.certain == (p == 1.0);
    tally.record(
        "eigenstate_equivalence",
        if agrees { 0.0 } else { 1.0 },
        0.0,
    );
    Ok(())
}

/// Runs every identity over `instances` random `(ψ, P)` and `N = 1..=n_max`.
pub fn run_verify(config: &VerifyConfig) -> Result<VerifyReport> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tally = Tally::default();
    for _ in 0..config.instances {
        let (proj, psi) = random_instance(config.d, config.rank, &mut rng)?;
        for n in 1..=config.n_max {
            if config.is_extreme() {
                check_extreme(&mut tally, &psi, &proj, n)?;
            } else {
                check_interior(&mut tally, &psi, &proj, n)?;
            }
        }
    }
    let passed = tally.entries.iter().all(|e| e.passed);
    Ok(VerifyReport {
        config: config.clone(),
        extreme_regime: config.is_extreme(),
        identities: tally.entries,
        passed,
    })
}
