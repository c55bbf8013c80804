//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each export returns a JSON string the page plots on a canvas. The work is
//! done by plain functions so they can be tested off the browser.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use relfreq::binom::{distribution, is_outside, tail_outside_epsilon};
use relfreq::convergence::{chebyshev_ceiling, n_epsilon_omega, tail_series, SeriesPoint};
use relfreq::mcsim::{run_experiment, trial_counts, ExperimentSummary};

/// Larger ensembles are fine for the library but not for a bar chart.
pub const MAX_PLOT_N: u64 = 5_000;
pub const MAX_TRIALS: u64 = 1_000_000;

#[derive(Serialize)]
struct DistributionView {
    p: f64,
    #[serde(rename = "N")]
    n: u64,
    eps: f64,
    probs: Vec<f64>,
    outside: Vec<bool>,
    tail: f64,
    ceiling: f64,
}

#[derive(Serialize)]
struct ThresholdView {
    #[serde(rename = "N_threshold")]
    n_threshold: u64,
    ratio: f64,
    series: Vec<SeriesPoint>,
}

#[derive(Serialize)]
struct SimulationView {
    summary: ExperimentSummary,
    within_5_sigma: bool,
    /// Number of trials with each count `K = 0..=N`.
    histogram: Vec<u64>,
    exact: Vec<f64>,
}

fn plot_size(n: u64) -> Result<(), String> {
    if n == 0 || n > MAX_PLOT_N {
        return Err(format!("N must be between 1 and {MAX_PLOT_N} for plotting"));
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Eigen-probabilities `prob[K]` with the outside-ε indices marked.
pub fn distribution_view(p: f64, n: u64, eps: f64) -> Result<String, String> {
    plot_size(n)?;
    let dist = distribution(p, n).map_err(|e| e.to_string())?;
    let tail = tail_outside_epsilon(p, n, eps).map_err(|e| e.to_string())?;
    to_json(&DistributionView {
        p,
        n,
        eps,
        probs: dist.probs(),
        outside: (0..=n).map(|k| is_outside(k, n, p, eps)).collect(),
        tail,
        ceiling: chebyshev_ceiling(p, n, eps),
    })
}

/// The threshold `N_εω` and the exact tail against `N` up to `n_max`.
pub fn threshold_view(
    p: f64,
    eps: f64,
    omega: f64,
    n_max: u64,
    points: usize,
) -> Result<String, String> {
    let bound = n_epsilon_omega(p, eps, omega).map_err(|e| e.to_string())?;
    let series = tail_series(p, eps, omega, n_max, points).map_err(|e| e.to_string())?;
    to_json(&ThresholdView {
        n_threshold: bound.n_threshold,
        ratio: bound.ratio(),
        series,
    })
}

/// A seeded experiment with its histogram of counts.
pub fn simulation_view(p: f64, n: u64, eps: f64, trials: u64, seed: u64) -> Result<String, String> {
    plot_size(n)?;
    if trials > MAX_TRIALS {
        return Err(format!("at most {MAX_TRIALS} trials in the browser"));
    }
    let summary = run_experiment(p, n, eps, trials, seed).map_err(|e| e.to_string())?;
    let mut histogram = vec![0u64; n as usize + 1];
    for k in trial_counts(p, n, trials, seed).map_err(|e| e.to_string())? {
        histogram[k as usize] += 1;
    }
    let exact = distribution(p, n).map_err(|e| e.to_string())?.probs();
    to_json(&SimulationView {
        within_5_sigma: summary.within_sigmas(5.0),
        summary,
        histogram,
        exact,
    })
}

#[wasm_bindgen]
pub fn distribution_json(p: f64, n: u32, eps: f64) -> Result<String, JsError> {
    distribution_view(p, n.into(), eps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn threshold_json(
    p: f64,
    eps: f64,
    omega: f64,
    n_max: u32,
    points: u32,
) -> Result<String, JsError> {
    threshold_view(p, eps, omega, n_max.into(), points as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulation_json(
    p: f64,
    n: u32,
    eps: f64,
    trials: u32,
    seed: u32,
) -> Result<String, JsError> {
    simulation_view(p, n.into(), eps, trials.into(), seed.into()).map_err(|e| JsError::new(&e))
}
