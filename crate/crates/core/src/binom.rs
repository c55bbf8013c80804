//! Closed-form eigenvalue probabilities of the relative-frequency operator.
//!
//! In the ensemble state `|ψ⟩^{⊗N}` the eigenvalue `K/N` is found with the
//! binomial probability `C(N,K) p^K (1-p)^{N-K}`, where `p = ⟨ψ|P|ψ⟩`.
//! Everything here is evaluated in log-space so that `N` can be as large as
//! `10^9` and the strict positivity of every term for `0 < p < 1` stays
//! observable after `exp` would underflow.
//!
//! The log-probability uses the saddle-point decomposition of the binomial
//! coefficient (log-gamma split into Stirling's formula plus a tabulated or
//! series Stirling error, with the deviance term `bd0` evaluated by a stable
//! series). Subtracting three raw log-gamma values of size `N ln N` would
//! lose about eight digits at `N = 10^6`.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{check_range, Error, Result};

/// Relative tolerance on sums over a whole distribution.
pub const TOL_SUM: f64 = 1e-9;

/// Slack, relative to `N`, within which `|K - Np|` counts as equal to `Nε`.
const BOUNDARY_SLACK: f64 = 1e-12;

/// `ln Γ(n+1) - (n+½) ln n + n - ½ ln 2π` for `n = 0..=15`.
const STIRLING_ERROR: [f64; 16] = [
    0.0,
    0.08106146679532726,
    0.0413406959554093,
    0.02767792568499834,
    0.020790672103765093,
    0.016644691189821193,
    0.013876128823070748,
    0.01189670994589177,
    0.010411265261972096,
    0.009255462182712733,
    0.00833056343336287,
    0.007573675487951841,
    0.00694284010720953,
    0.006408994188004207,
    0.0059513701127588475,
    0.005554733551962801,
];

fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return STIRLING_ERROR[n as usize];
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance `x ln(x/m) + m - x`, accurate when `x ≈ m`.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

fn validate(p: f64, n: u64, k: u64) -> Result<()> {
    check_range("p", p, (0.0..=1.0).contains(&p), "0 <= p <= 1")?;
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "N",
            value: 0.0,
            expected: "N >= 1",
        });
    }
    if k > n {
        return Err(Error::OutOfRange {
            name: "K",
            value: k as f64,
            expected: "0 <= K <= N",
        });
    }
    Ok(())
}

/// `ln [C(N,K) p^K (1-p)^{N-K}]` for `0 < p < 1`; always finite there.
fn log_pmf_interior(p: f64, n: u64, k: u64) -> f64 {
    let q = 1.0 - p;
    let nf = n as f64;
    let kf = k as f64;
    if k == 0 {
        return if p < 0.1 {
            -deviance(nf, nf * q) - nf * p
        } else {
            nf * q.ln()
        };
    }
    if k == n {
        return if q < 0.1 {
            -deviance(nf, nf * p) - nf * q
        } else {
            nf * p.ln()
        };
    }
    let rest = nf - kf;
    let lc = stirling_error(nf)
        - stirling_error(kf)
        - stirling_error(rest)
        - deviance(kf, nf * p)
        - deviance(rest, nf * q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    lc - 0.5 * lf
}

/// Natural log of [`eigprob`]; `-∞` only for the impossible outcomes at `p ∈ {0, 1}`.
pub fn log_eigprob(p: f64, n: u64, k: u64) -> Result<f64> {
    validate(p, n, k)?;
    Ok(if p == 0.0 || p == 1.0 {
        match extreme_mass(p, n, k) {
            1.0 => 0.0,
            _ => f64::NEG_INFINITY,
        }
    } else {
        log_pmf_interior(p, n, k)
    })
}

/// Exact Kronecker delta for the certain (`p = 1`) and impossible (`p = 0`) events.
fn extreme_mass(p: f64, n: u64, k: u64) -> f64 {
    let hit = if p == 0.0 { k == 0 } else { k == n };
    if hit {
        1.0
    } else {
        0.0
    }
}

/// Probability `C(N,K) p^K (1-p)^{N-K}` of the eigenvalue `K/N`, with `p^0 = (1-p)^0 = 1`.
pub fn eigprob(p: f64, n: u64, k: u64) -> Result<f64> {
    validate(p, n, k)?;
    if p == 0.0 || p == 1.0 {
        return Ok(extreme_mass(p, n, k));
    }
    Ok(log_pmf_interior(p, n, k).exp())
}

/// True when `|K/N - p| > ε` strictly.
///
/// Deviations equal to `ε` up to rounding (relative slack `1e-12` on the
/// count scale) are inside. The same predicate is used by the exact tail,
/// the per-term bound check and the Monte Carlo counter.
pub fn is_outside(k: u64, n: u64, p: f64, eps: f64) -> bool {
    let nf = n as f64;
    let deviation = (k as f64 - nf * p).abs();
    deviation - nf * eps > BOUNDARY_SLACK * nf.max(1.0)
}

/// `ln Σ exp(terms)` with the terms added smallest first.
pub(crate) fn log_sum_ascending(mut terms: Vec<f64>) -> f64 {
    terms.retain(|t| *t > f64::NEG_INFINITY);
    if terms.is_empty() {
        return f64::NEG_INFINITY;
    }
    terms.sort_by(f64::total_cmp);
    let top = *terms.last().expect("nonempty");
    let scaled: f64 = terms.iter().map(|t| (t - top).exp()).sum();
    top + scaled.ln()
}

fn validate_tail(p: f64, n: u64, eps: f64) -> Result<()> {
    check_range("p", p, (0.0..=1.0).contains(&p), "0 <= p <= 1")?;
    if p == 0.0 || p == 1.0 {
        return Err(Error::ExtremeProbability(p));
    }
    check_range("eps", eps, eps > 0.0, "eps > 0")?;
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "N",
            value: 0.0,
            expected: "N >= 1",
        });
    }
    Ok(())
}

/// Log-probabilities of every outside-ε eigenvalue, in index order.
pub fn outside_log_terms(p: f64, n: u64, eps: f64) -> Result<Vec<(u64, f64)>> {
    validate_tail(p, n, eps)?;
    Ok((0..=n)
        .filter(|&k| is_outside(k, n, p, eps))
        .map(|k| (k, log_pmf_interior(p, n, k)))
        .collect())
}

/// Log of the total probability of the eigenvalues with `|K/N - p| > ε`;
/// `-∞` when no eigenvalue lies outside.
pub fn log_tail_outside_epsilon(p: f64, n: u64, eps: f64) -> Result<f64> {
    let terms = outside_log_terms(p, n, eps)?;
    Ok(log_sum_ascending(
        terms.into_iter().map(|(_, l)| l).collect(),
    ))
}

/// Total probability of the eigenvalues with `|K/N - p| > ε`.
///
/// Only `0 < p < 1` is admissible; at the extremes all mass sits on a single
/// eigenvalue and [`eigprob`] already answers exactly.
pub fn tail_outside_epsilon(p: f64, n: u64, eps: f64) -> Result<f64> {
    Ok(log_tail_outside_epsilon(p, n, eps)?.exp())
}

/// The full table `K = 0..=N` of eigenvalue probabilities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinomialDistribution {
    p: f64,
    n: u64,
    log_probs: Vec<f64>,
}

#[derive(Serialize)]
struct CsvRow {
    #[serde(rename = "K")]
    k: u64,
    #[serde(rename = "K/N")]
    frequency: f64,
    prob: f64,
    log_prob: f64,
}

impl BinomialDistribution {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn prob(&self, k: u64) -> f64 {
        self.log_probs[k as usize].exp()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    /// `Σ_K prob[K]`, accumulated smallest first.
    pub fn total_mass(&self) -> f64 {
        log_sum_ascending(self.log_probs.clone()).exp()
    }

    /// Writes the columns `K, K/N, prob, log_prob`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let nf = self.n as f64;
        for (k, &l) in self.log_probs.iter().enumerate() {
            w.serialize(CsvRow {
                k: k as u64,
                frequency: k as f64 / nf,
                prob: l.exp(),
                log_prob: l,
            })?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

pub fn distribution(p: f64, n: u64) -> Result<BinomialDistribution> {
    validate(p, n, 0)?;
    let log_probs = (0..=n)
        .map(|k| log_eigprob(p, n, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(BinomialDistribution { p, n, log_probs })
}

/// Average eigenvalue `Σ_K (K/N) prob[K]`.
pub fn mean(dist: &BinomialDistribution) -> f64 {
    let nf = dist.n as f64;
    dist.log_probs
        .iter()
        .enumerate()
        .map(|(k, l)| k as f64 / nf * l.exp())
        .sum()
}

/// Spread of the eigenvalues around `p`: `Σ_K (K/N - p)² prob[K]`.
pub fn variance(dist: &BinomialDistribution) -> f64 {
    let nf = dist.n as f64;
    dist.log_probs
        .iter()
        .enumerate()
        .map(|(k, l)| (k as f64 / nf - dist.p).powi(2) * l.exp())
        .sum()
}
