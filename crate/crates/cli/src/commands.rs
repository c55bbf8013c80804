use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use relfreq::convergence::{
    bound_table, certify_theorem3, n_epsilon_omega, tail_series, write_bound_csv, write_series_csv,
    BoundRow, CertificationReport, ConvergenceBound,
};
use relfreq::freqop::SpectrumEntry;
use relfreq::mcsim::{
    bridging_batch, run_experiment, trial_counts, write_trials_csv, BridgingBatch,
    ExperimentSummary,
};
use relfreq::suite::{random_spectrum, run_verify, IdentitySummary, VerifyConfig, VerifyReport};

use crate::config::{pick, FileConfig};
use crate::{BoundArgs, Common, Failure, Format, Report, SimulateArgs, SpectrumArgs, VerifyArgs};

/// Statistical agreement required between simulated and exact tails.
const SIGMAS: f64 = 5.0;

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut body =
        serde_json::to_vec_pretty(value).map_err(|e| Failure::Internal(e.to_string()))?;
    body.push(b'\n');
    Ok(body)
}

fn csv_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| Failure::Internal(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Failure::Internal(e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", path.display())))
}

pub fn verify(args: &VerifyArgs, file: &FileConfig, common: &Common) -> Result<Report, Failure> {
    let config = VerifyConfig {
        d: pick(args.d, file.usize("d")?, 2),
        rank: pick(args.rank, file.usize("rank")?, 1),
        n_max: pick(args.n_max, file.usize("n_max")?, 8),
        instances: pick(args.trials, file.usize("trials")?, 20),
        seed: common.seed,
    };
    config.validate()?;
    let report: VerifyReport = run_verify(&config)?;
    let body = match common.format {
        Format::Json => json(&report)?,
        Format::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                identity: &'a str,
                max_deviation: f64,
                tolerance: f64,
                evaluations: usize,
                passed: bool,
            }
            csv_rows(report.identities.iter().map(|i: &IdentitySummary| Row {
                identity: i.name,
                max_deviation: i.max_deviation,
                tolerance: i.tolerance,
                evaluations: i.evaluations,
                passed: i.passed,
            }))?
        }
    };
    Ok(Report {
        body,
        passed: report.passed,
    })
}

#[derive(Serialize)]
struct BoundReport {
    rows: Vec<BoundRow>,
    sandwich_holds: bool,
}

pub fn bound(args: &BoundArgs, file: &FileConfig, common: &Common) -> Result<Report, Failure> {
    let ps = pick(args.p.clone(), file.f64_list("p")?, vec![0.5]);
    let epss = pick(args.eps.clone(), file.f64_list("eps")?, vec![0.1]);
    let omegas = pick(args.omega.clone(), file.f64_list("omega")?, vec![0.05]);
    let series = args.series.clone().or(file.path("series")?);
    let series_n_max = pick(args.series_n_max, file.u64("series_n_max")?, 10_000);
    let series_points = pick(args.series_points, file.usize("series_points")?, 40);

    // Check every grid cell before the tails are summed.
    for &p in &ps {
        for &eps in &epss {
            for &omega in &omegas {
                n_epsilon_omega(p, eps, omega)?;
            }
        }
    }
    let rows = bound_table(&ps, &epss, &omegas)?;
    let sandwich_holds = rows.iter().all(BoundRow::sandwich_holds);

    if let Some(path) = series {
        let mut points = Vec::new();
        for &p in &ps {
            for &eps in &epss {
                for &omega in &omegas {
                    points.extend(tail_series(p, eps, omega, series_n_max, series_points)?);
                }
            }
        }
        write_series_csv(&points, create(&path)?)?;
    }

    let body = match common.format {
        Format::Json => json(&BoundReport {
            rows,
            sandwich_holds,
        })?,
        Format::Csv => {
            let mut buf = Vec::new();
            write_bound_csv(&rows, &mut buf)?;
            buf
        }
    };
    Ok(Report {
        body,
        passed: sandwich_holds,
    })
}

pub fn spectrum(
    args: &SpectrumArgs,
    file: &FileConfig,
    common: &Common,
) -> Result<Report, Failure> {
    let d = pick(args.d, file.usize("d")?, 2);
    let rank = pick(args.rank, file.usize("rank")?, 1);
    let n = pick(args.n, file.usize("n")?, 3);
    let report = random_spectrum(d, rank, n, common.seed)?;
    let passed = report.passed();
    let body = match common.format {
        Format::Json => json(&report)?,
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                #[serde(rename = "K")]
                k: usize,
                eigenvalue: f64,
                multiplicity: usize,
            }
            csv_rows(report.entries.iter().map(|e: &SpectrumEntry| Row {
                k: e.k,
                eigenvalue: e.eigenvalue,
                multiplicity: e.multiplicity,
            }))?
        }
    };
    Ok(Report { body, passed })
}

#[derive(Serialize)]
struct SimulateReport {
    experiment: ExperimentSummary,
    within_5_sigma: bool,
    threshold: ConvergenceBound,
    /// Present when `N >= N_threshold`.
    certification: Option<CertificationReport>,
    bridging: Option<BridgingBatch>,
    passed: bool,
}

#[derive(Serialize)]
struct SimulateRow {
    p: f64,
    #[serde(rename = "N")]
    n: u64,
    eps: f64,
    #[serde(rename = "R")]
    r: u64,
    seed: u64,
    empirical_tail: f64,
    exact_tail: f64,
    std_error: f64,
    outside_count: u64,
    within_5_sigma: bool,
    omega: f64,
    #[serde(rename = "N_threshold")]
    n_threshold: u64,
    certified: Option<bool>,
    bridging_passed: Option<u64>,
    passed: bool,
}

pub fn simulate(
    args: &SimulateArgs,
    file: &FileConfig,
    common: &Common,
) -> Result<Report, Failure> {
    let p = pick(args.p, file.f64("p")?, 0.5);
    let n = pick(args.n, file.u64("n")?, 100);
    let eps = pick(args.eps, file.f64("eps")?, 0.1);
    let r = pick(args.r, file.u64("r")?, 10_000);
    let omega = pick(args.omega, file.f64("omega")?, 0.05);
    let with_bridging = args.verify_bridging || file.bool("verify_bridging")?.unwrap_or(false);
    let trials_csv = args.trials_csv.clone().or(file.path("trials_csv")?);
    let seed = common.seed;

    // Preconditions first: p in (0,1), eps and omega positive.
    let threshold = n_epsilon_omega(p, eps, omega)?;
    let bridging = if with_bridging {
        Some(bridging_batch(p, n, r, seed)?)
    } else {
        None
    };
    let experiment = run_experiment(p, n, eps, r, seed)?;
    let certification = if n >= threshold.n_threshold {
        Some(certify_theorem3(p, eps, omega, &[n])?)
    } else {
        None
    };
    if let Some(path) = trials_csv {
        write_trials_csv(n, &trial_counts(p, n, r, seed)?, create(&path)?)?;
    }

    let within = experiment.within_sigmas(SIGMAS);
    let certified = certification.as_ref().map(CertificationReport::holds);
    let passed =
        within && certified.unwrap_or(true) && bridging.as_ref().is_none_or(BridgingBatch::holds);

    let body = match common.format {
        Format::Json => json(&SimulateReport {
            experiment,
            within_5_sigma: within,
            threshold,
            certification,
            bridging,
            passed,
        })?,
        Format::Csv => csv_rows([SimulateRow {
            p,
            n,
            eps,
            r,
            seed,
            empirical_tail: experiment.empirical_tail,
            exact_tail: experiment.exact_tail,
            std_error: experiment.std_error,
            outside_count: experiment.outside_count,
            within_5_sigma: within,
            omega,
            n_threshold: threshold.n_threshold,
            certified,
            bridging_passed: bridging.as_ref().map(|b| b.passed),
            passed,
        }])?,
    };
    Ok(Report { body, passed })
}
