//! Monte Carlo estimates of the probability that a random null space
//! satisfies ERC and the probed robust condition.

use std::fs;

use nsp_core::nsp::{ce1_membership, erc_member, rrc_probe, SearchOptions};
use nsp_core::subspaces::{matrix_from_csv, sample_haar};
use nsp_core::{rng, CostFunction, MeasurementMatrix, SparsenessMeasure, Subspace};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, MatrixSource};
use crate::error::{CliError, CliResult};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959964;

/// Margins inside `±BOUNDARY_BAND` are counted apart from pass/fail.
pub const BOUNDARY_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    /// Point estimate with a Wilson score interval.
    pub fn wilson(successes: usize, trials: usize) -> Self {
        if trials == 0 {
            return Proportion { successes, trials, estimate: f64::NAN, ci_low: 0.0, ci_high: 1.0 };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Proportion { successes, trials, estimate: p, ci_low: (center - half).max(0.0), ci_high: (center + half).min(1.0) }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RrcEstimate {
    pub d: f64,
    pub probability: Proportion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub erc: bool,
    pub margin: f64,
    pub boundary: bool,
    /// Probe pass per entry of the `d` grid.
    pub rrc: Vec<bool>,
    /// Disagreement with the closed-form classifier, when it applies.
    pub ce1_agrees: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    /// Over trials outside the boundary band.
    pub p_erc: Proportion,
    pub p_rrc_at_d: Vec<RrcEstimate>,
    pub boundary_fraction: f64,
    pub boundary_count: usize,
    /// Trials where a certificate errored out; excluded from the estimates.
    pub failures: usize,
    /// Trials where the probe passed but ERC did not hold.
    pub subset_violations: usize,
    pub ce1_disagreements: Option<usize>,
    pub config_hash: String,
}

impl MonteCarloSummary {
    pub fn subset_holds(&self) -> bool {
        self.subset_violations == 0 && self.p_rrc_at_d.iter().all(|r| r.probability.successes <= self.p_erc.successes)
    }
}

fn fixed_null_space(cfg: &ExperimentConfig) -> CliResult<Option<Subspace>> {
    if cfg.matrix_source != MatrixSource::File {
        return Ok(None);
    }
    let path = cfg.matrix_file.as_ref().ok_or_else(|| CliError::usage("matrix_file missing"))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let a = MeasurementMatrix::new(matrix_from_csv(&text)?)?;
    if a.cols() != cfg.n || a.rows() != cfg.m {
        return Err(CliError::usage(format!(
            "matrix file is {}x{}, config says m={}, n={}",
            a.rows(),
            a.cols(),
            cfg.m,
            cfg.n
        )));
    }
    Ok(Some(a.null_space().clone()))
}

fn run_trial(
    cfg: &ExperimentConfig,
    cost: &CostFunction,
    fixed: Option<&Subspace>,
    t: usize,
    ce1_applies: bool,
) -> nsp_core::Result<TrialOutcome> {
    let mut r = rng::stream(cfg.seed, t as u64);
    let nu = match (fixed, cfg.matrix_source) {
        (Some(nu), _) => nu.clone(),
        (None, MatrixSource::HaarNullspace) => sample_haar(cfg.n, cfg.n - cfg.m, &mut r)?,
        (None, _) => MeasurementMatrix::gaussian(cfg.m, cfg.n, &mut r)?.null_space().clone(),
    };
    if cfg.k == 0 {
        return Ok(TrialOutcome {
            trial: t,
            erc: true,
            margin: f64::INFINITY,
            boundary: false,
            rrc: vec![true; cfg.d_grid.len()],
            ce1_agrees: None,
        });
    }
    let opts = SearchOptions { seed: cfg.seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15), ..Default::default() };
    let erc = erc_member(&nu, cost, cfg.k, &opts)?;
    let boundary = erc.margin.abs() < BOUNDARY_BAND;
    let rrc = cfg
        .d_grid
        .iter()
        .map(|&d| rrc_probe(&nu, cost, cfg.k, d, cfg.budget, &opts).map(|p| p.passed()))
        .collect::<nsp_core::Result<Vec<bool>>>()?;
    let ce1_agrees = if ce1_applies {
        let c = ce1_membership(&nu)?;
        (c.margin.abs() >= BOUNDARY_BAND && !boundary).then_some(c.in_interior == erc.member)
    } else {
        None
    };
    Ok(TrialOutcome { trial: t, erc: erc.member, margin: erc.margin, boundary, rrc, ce1_agrees })
}

/// Runs `cfg.trials` independent trials, each on its own stream of
/// `cfg.seed`, and aggregates them. Trial outcomes come back in trial order.
pub fn mc_probability(cfg: &ExperimentConfig) -> CliResult<(MonteCarloSummary, Vec<TrialOutcome>)> {
    cfg.validate()?;
    let measure = SparsenessMeasure::parse(&cfg.measure)?;
    let ce1_applies = measure.name() == "exp_ce1" && cfg.n == 3 && cfg.m == 2 && cfg.k == 1;
    let cost = CostFunction::new(measure, cfg.n)?;
    let fixed = fixed_null_space(cfg)?;
    let results: Vec<nsp_core::Result<TrialOutcome>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &cost, fixed.as_ref(), t, ce1_applies))
        .collect();
    let mut outcomes = Vec::with_capacity(results.len());
    let mut failures = 0;
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            // invalid input fails every trial the same way
            Err(e @ (nsp_core::Error::Unsupported { .. } | nsp_core::Error::InvalidParameter { .. })) => return Err(e.into()),
            Err(_) => failures += 1,
        }
    }
    let decided: Vec<&TrialOutcome> = outcomes.iter().filter(|o| !o.boundary).collect();
    let boundary_count = outcomes.len() - decided.len();
    let p_erc = Proportion::wilson(decided.iter().filter(|o| o.erc).count(), decided.len());
    let p_rrc_at_d = cfg
        .d_grid
        .iter()
        .enumerate()
        .map(|(i, &d)| RrcEstimate { d, probability: Proportion::wilson(decided.iter().filter(|o| o.rrc[i]).count(), decided.len()) })
        .collect();
    let subset_violations = outcomes.iter().filter(|o| o.rrc.iter().any(|&p| p) && !o.erc).count();
    let ce1_disagreements = ce1_applies.then(|| outcomes.iter().filter(|o| o.ce1_agrees == Some(false)).count());
    let summary = MonteCarloSummary {
        trials: cfg.trials,
        p_erc,
        p_rrc_at_d,
        boundary_fraction: boundary_count as f64 / cfg.trials as f64,
        boundary_count,
        failures,
        subset_violations,
        ce1_disagreements,
        config_hash: cfg.hash(),
    };
    Ok((summary, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // 8/10: standard table value (0.4902, 0.9433)
        let p = Proportion::wilson(8, 10);
        assert!((p.ci_low - 0.4902).abs() < 1e-4, "{}", p.ci_low);
        assert!((p.ci_high - 0.9433).abs() < 1e-4, "{}", p.ci_high);
        let z = Proportion::wilson(0, 50);
        assert_eq!(z.ci_low, 0.0);
        assert!(z.ci_high > 0.0 && z.ci_high < 0.1);
    }

    #[test]
    fn zero_sparsity_always_recovers() {
        let cfg = ExperimentConfig { k: 0, trials: 20, ..Default::default() };
        let (s, _) = mc_probability(&cfg).unwrap();
        assert_eq!(s.p_erc.estimate, 1.0);
        assert!(s.subset_holds());
    }

    #[test]
    fn deterministic_and_subset_consistent() {
        let cfg = ExperimentConfig { trials: 40, d_grid: vec![0.01, 0.2], seed: 9, ..Default::default() };
        let (a, ra) = mc_probability(&cfg).unwrap();
        let (b, rb) = mc_probability(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert!(a.subset_holds());
        assert!(a.p_rrc_at_d[1].probability.successes <= a.p_rrc_at_d[0].probability.successes);
    }

    #[test]
    fn ce1_stream_agrees_with_closed_form() {
        let cfg = ExperimentConfig {
            n: 3,
            m: 2,
            k: 1,
            measure: "exp_ce1".into(),
            trials: 100,
            d_grid: vec![0.1],
            seed: 4,
            ..Default::default()
        };
        let (s, _) = mc_probability(&cfg).unwrap();
        assert_eq!(s.ce1_disagreements, Some(0));
    }
}
