//! Explicit ensemble sizes for probabilistic convergence.
//!
//! For `0 < p < 1`, `ε > 0` and `ω > 0` the threshold `N_εω` is the unique
//! integer with `p(1-p)/(ε²ω) <= N_εω < p(1-p)/(ε²ω) + 1`. From that size on,
//! every single outside-ε eigenvalue has probability strictly between `0`
//! and `ω` (the per-term bound obtained from the variance identity). The
//! summed outside-ε mass is also checked against `ω`, as an exact binomial
//! computation rather than as a consequence of the per-term argument.

use std::io::Write;

use serde::Serialize;

use crate::binom::{log_tail_outside_epsilon, outside_log_terms};
use crate::error::{check_range, Error, Result};

/// Relative distance to an integer below which the threshold ratio snaps to it.
const INTEGER_SNAP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceBound {
    pub p: f64,
    pub eps: f64,
    pub omega: f64,
    pub n_threshold: u64,
}

impl ConvergenceBound {
    /// `p(1-p)/(ε²ω)`
    pub fn ratio(&self) -> f64 {
        threshold_ratio(self.p, self.eps, self.omega)
    }

    /// `ratio <= n_threshold < ratio + 1`, with the snapping tolerance on the left.
    pub fn sandwich_holds(&self) -> bool {
        let r = self.ratio();
        let n = self.n_threshold as f64;
        n >= r * (1.0 - INTEGER_SNAP) && n < r + 1.0
    }

    /// Variance bound `p(1-p)/(Nε²)` on the outside-ε mass at size `n`.
    pub fn chebyshev_ceiling(&self, n: u64) -> f64 {
        chebyshev_ceiling(self.p, n, self.eps)
    }
}

fn threshold_ratio(p: f64, eps: f64, omega: f64) -> f64 {
    p * (1.0 - p) / (eps * eps * omega)
}

pub fn chebyshev_ceiling(p: f64, n: u64, eps: f64) -> f64 {
    p * (1.0 - p) / (n as f64 * eps * eps)
}

fn validate(p: f64, eps: f64, omega: f64) -> Result<()> {
    check_range("p", p, (0.0..=1.0).contains(&p), "0 <= p <= 1")?;
    if p == 0.0 || p == 1.0 {
        return Err(Error::ExtremeProbability(p));
    }
    check_range("eps", eps, eps > 0.0, "eps > 0")?;
    check_range("omega", omega, omega > 0.0, "omega > 0")?;
    Ok(())
}

/// The threshold `N_εω = ⌈p(1-p)/(ε²ω)⌉`.
///
/// A ratio within `1e-12` (relative) of an integer is taken to be that
/// integer, so decimal inputs such as `0.21 / (0.05² · 0.01) = 8400` are not
/// pushed to the next integer by rounding.
pub fn n_epsilon_omega(p: f64, eps: f64, omega: f64) -> Result<ConvergenceBound> {
    validate(p, eps, omega)?;
    let ratio = threshold_ratio(p, eps, omega);
    if !ratio.is_finite() || ratio >= u64::MAX as f64 {
        return Err(Error::OutOfRange {
            name: "p(1-p)/(eps^2 omega)",
            value: ratio,
            expected: "a representable ensemble size",
        });
    }
    let nearest = ratio.round();
    let n = if nearest >= 1.0 && (ratio - nearest).abs() <= INTEGER_SNAP * ratio {
        nearest
    } else {
        ratio.ceil().max(1.0)
    };
    Ok(ConvergenceBound {
        p,
        eps,
        omega,
        n_threshold: n as u64,
    })
}

/// One ensemble size checked against both readings of the bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationRow {
    pub n: u64,
    /// Exact binomial mass with `|K/N - p| > ε`.
    pub tail: f64,
    pub log_tail: f64,
    /// `1 - tail`, the mass with `|K/N - p| <= ε`.
    pub inside_mass: f64,
    pub chebyshev_ceiling: f64,
    /// Largest single outside-ε probability (per-term reading).
    pub max_outside_term: f64,
    /// Per-term reading: `0 < prob(K̄) < ω` for every outside index.
    pub per_term_holds: bool,
    /// Summed reading: `0 < tail < ω`, computed exactly.
    pub summed_holds: bool,
    /// `tail <= chebyshev_ceiling`.
    pub ceiling_holds: bool,
}

impl CertificationRow {
    pub fn holds(&self) -> bool {
        self.per_term_holds && self.summed_holds && self.ceiling_holds
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationReport {
    pub bound: ConvergenceBound,
    /// Tag for the per-term check, which is what the variance argument proves.
    pub per_term_basis: &'static str,
    /// Tag for the summed check, which is only verified numerically.
    pub summed_basis: &'static str,
    pub rows: Vec<CertificationRow>,
}

impl CertificationReport {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(CertificationRow::holds)
    }
}

pub const PER_TERM_BASIS: &str = "analytic bound (per-term)";
pub const SUMMED_BASIS: &str = "empirical (exact binomial)";

fn certification_row(p: f64, eps: f64, omega: f64, n: u64) -> Result<CertificationRow> {
    let log_tail = log_tail_outside_epsilon(p, n, eps)?;
    let tail = log_tail.exp();
    let log_omega = omega.ln();
    let max_log_term = outside_log_terms(p, n, eps)?
        .into_iter()
        .map(|(_, l)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    let ceiling = chebyshev_ceiling(p, n, eps);
    Ok(CertificationRow {
        n,
        tail,
        log_tail,
        inside_mass: -log_tail.exp_m1(),
        chebyshev_ceiling: ceiling,
        max_outside_term: max_log_term.exp(),
        // Strict positivity is decided in log-space: finite means > 0.
        per_term_holds: max_log_term.is_finite() && max_log_term < log_omega,
        summed_holds: log_tail.is_finite() && log_tail < log_omega,
        ceiling_holds: tail <= ceiling,
    })
}

/// Evaluates both readings of the outside-ε bound for every `n`, each of
/// which must be at least `N_εω`.
pub fn certify_theorem3(
    p: f64,
    eps: f64,
    omega: f64,
    n_values: &[u64],
) -> Result<CertificationReport> {
    let bound = n_epsilon_omega(p, eps, omega)?;
    if let Some(&short) = n_values.iter().find(|&&n| n < bound.n_threshold) {
        return Err(Error::OutOfRange {
            name: "N",
            value: short as f64,
            expected: "N >= N_eps_omega",
        });
    }
    let rows = n_values
        .iter()
        .map(|&n| certification_row(p, eps, omega, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(CertificationReport {
        bound,
        per_term_basis: PER_TERM_BASIS,
        summed_basis: SUMMED_BASIS,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChebyshevReport {
    pub p: f64,
    pub n: u64,
    pub eps: f64,
    pub ceiling: f64,
    pub outside_count: u64,
    /// `ceiling − max outside term`; `None` when nothing lies outside.
    pub worst_margin: Option<f64>,
    pub holds: bool,
}

/// Checks `prob(K̄) < p(1-p)/(Nε²)` for each outside-ε index individually.
pub fn chebyshev_chain_check(p: f64, n: u64, eps: f64) -> Result<ChebyshevReport> {
    let terms = outside_log_terms(p, n, eps)?;
    let ceiling = chebyshev_ceiling(p, n, eps);
    let log_ceiling = ceiling.ln();
    let holds = terms.iter().all(|&(_, l)| l < log_ceiling);
    let max_term = terms
        .iter()
        .map(|&(_, l)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ChebyshevReport {
        p,
        n,
        eps,
        ceiling,
        outside_count: terms.len() as u64,
        worst_margin: (!terms.is_empty()).then(|| ceiling - max_term.exp()),
        holds,
    })
}

/// One line of a bound table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub p: f64,
    pub eps: f64,
    pub omega: f64,
    #[serde(rename = "N_threshold")]
    pub n_threshold: u64,
    pub tail_at_threshold: f64,
    pub chebyshev_ceiling: f64,
}

impl BoundRow {
    /// Re-checks `ratio <= N_threshold < ratio + 1` for the emitted row.
    pub fn sandwich_holds(&self) -> bool {
        ConvergenceBound {
            p: self.p,
            eps: self.eps,
            omega: self.omega,
            n_threshold: self.n_threshold,
        }
        .sandwich_holds()
    }
}

/// Threshold and exact tail for every `(p, ε, ω)` in the grid, in
/// `p`-major order.
pub fn bound_table(ps: &[f64], epss: &[f64], omegas: &[f64]) -> Result<Vec<BoundRow>> {
    if ps.is_empty() || epss.is_empty() || omegas.is_empty() {
        return Err(Error::Empty("bound grid"));
    }
    let cells: Vec<(f64, f64, f64)> = ps
        .iter()
        .flat_map(|&p| {
            epss.iter()
                .flat_map(move |&e| omegas.iter().map(move |&o| (p, e, o)))
        })
        .collect();
    let row = |&(p, eps, omega): &(f64, f64, f64)| -> Result<BoundRow> {
        let bound = n_epsilon_omega(p, eps, omega)?;
        let n = bound.n_threshold;
        Ok(BoundRow {
            p,
            eps,
            omega,
            n_threshold: n,
            tail_at_threshold: log_tail_outside_epsilon(p, n, eps)?.exp(),
            chebyshev_ceiling: chebyshev_ceiling(p, n, eps),
        })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        cells.par_iter().map(row).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        cells.iter().map(row).collect()
    }
}

/// Writes `p, eps, omega, N_threshold, tail_at_threshold, chebyshev_ceiling`.
pub fn write_bound_csv<W: Write>(rows: &[BoundRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

/// A point of the tail-versus-`N` curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub p: f64,
    pub eps: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub tail: f64,
    pub ceiling: f64,
    pub omega: f64,
}

/// Exact tail and variance ceiling at up to `points` sizes spread
/// geometrically over `1..=n_max`.
pub fn tail_series(
    p: f64,
    eps: f64,
    omega: f64,
    n_max: u64,
    points: usize,
) -> Result<Vec<SeriesPoint>> {
    validate(p, eps, omega)?;
    if n_max == 0 || points == 0 {
        return Err(Error::Empty("series range"));
    }
    let mut sizes: Vec<u64> = (0..points)
        .map(|i| {
            let t = if points == 1 {
                1.0
            } else {
                i as f64 / (points - 1) as f64
            };
            ((n_max as f64).powf(t).round() as u64).clamp(1, n_max)
        })
        .collect();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|n| {
            Ok(SeriesPoint {
                p,
                eps,
                n,
                tail: log_tail_outside_epsilon(p, n, eps)?.exp(),
                ceiling: chebyshev_ceiling(p, n, eps),
                omega,
            })
        })
        .collect()
}

pub fn write_series_csv<W: Write>(points: &[SeriesPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for pt in points {
        w.serialize(pt)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}
