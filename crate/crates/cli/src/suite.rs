//! Verification suites. Each criterion returns a pass flag and a one-line
//! detail; `run_suite` bundles them.

use std::time::Instant;

use nsp_core::measures::{compare_measures, ComparisonRule, MeasureFlags, Tri};
use nsp_core::nsp::{
    ce1_membership, erc_member, nsc, nsp_check, region_boundary_map, robustness_constant, rrc_probe, NspReport,
    NspVerdict, ProbeWitness, Region, SearchOptions,
};
use nsp_core::search::{gaussian_vec, grid_then_golden, log_grid, norm};
use nsp_core::solver::{adversarial_pair_from_witness, empirical_robustness, SolveMethod};
use nsp_core::subspaces::{grassmann_distance, perturb_subspace, sample_haar};
use nsp_core::width::{chi_mean, delta, delta_threshold, omega_hat_bound, width_extended, width_mc, zeta};
use nsp_core::{rng, CostFunction, MeasurementMatrix, SparsenessMeasure, Subspace};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, MatrixSource};
use crate::error::{CliError, CliResult};
use crate::montecarlo::mc_probability;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    PaperChecks,
    Quick,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Replaces the MCP measure by one with the sign of `α` flipped, so the
    /// comparison-rule check must fail.
    pub mutate_mcp: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_ms: u128,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {}: {} ({} ms)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed_ms
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: SuiteName,
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

type Check = fn(&SuiteOptions) -> CliResult<(bool, String)>;

pub const CRITERIA: &[(u32, &str, Check)] = &[
    (1, "counter-example 1", counterexample_check),
    (2, "closed-form omega agreement", ce1_agreement_check),
    (3, "nsc exactness", nsc_exactness_check),
    (4, "erc/rrc probability equality", probability_equality_check),
    (5, "power-law inclusion", inclusion_check),
    (6, "formula fidelity", formula_check),
    (7, "width sanity", width_check),
    (8, "gordon consistency", gordon_check),
    (9, "robustness bound", robustness_check),
    (10, "perturbation lemma", perturbation_check),
    (11, "region map", region_check),
    (12, "mcp comparison rule", comparison_check),
];

const QUICK: &[u32] = &[1, 2, 3, 5, 6, 10, 12];

/// Runs one criterion, turning errors into failures.
pub fn run_criterion(id: u32, opts: &SuiteOptions) -> CriterionResult {
    let (_, name, check) = CRITERIA.iter().find(|c| c.0 == id).copied().expect("known criterion id");
    let start = Instant::now();
    let (passed, detail) = match check(opts) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult { id, name: name.to_string(), passed, detail, elapsed_ms: start.elapsed().as_millis() }
}

pub fn run_suite(name: SuiteName, opts: &SuiteOptions) -> SuiteReport {
    let ids: Vec<u32> = match name {
        SuiteName::PaperChecks => CRITERIA.iter().map(|c| c.0).collect(),
        SuiteName::Quick => QUICK.to_vec(),
    };
    let criteria: Vec<CriterionResult> = ids.iter().map(|&id| run_criterion(id, opts)).collect();
    SuiteReport { suite: name, seed: opts.seed, passed: criteria.iter().all(|c| c.passed), criteria }
}

fn fexp() -> SparsenessMeasure {
    SparsenessMeasure::exp_ce1()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ce1Row {
    pub d: f64,
    pub t: f64,
    pub deficit: f64,
    /// `2dt`, the leading term of the deficit for small `t`.
    pub leading_term: f64,
    pub probe_violated: bool,
    pub adversarial_ratio: f64,
    pub converse_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ce1Report {
    /// `(t, 2F(t) − F(2t), (1 − e^{−t})²)` on `t = 0.1, 0.2, …, 10`.
    pub erc_margins: Vec<(f64, f64, f64)>,
    pub nsp: NspReport,
    pub rows: Vec<Ce1Row>,
}

/// Checks the first counter-example: `ν = span{(1,1,2)}`, `k = 1`,
/// `F(t) = t + 1 − e^{−t}`. ERC holds, yet for every `d` shrinking the
/// first coordinate of `t(1,1,2)` by `dt` breaks the NSP at some small `t`.
pub fn verify_counterexample1(d_list: &[f64]) -> CliResult<Ce1Report> {
    if d_list.is_empty() {
        return Err(CliError::usage("d list is empty"));
    }
    if let Some(d) = d_list.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(CliError::usage(format!("d = {d} not in (0, 1)")));
    }
    let f = fexp();
    let g = [1.0, 1.0, 2.0];
    let nu = Subspace::span(&[&g])?;
    let cost = CostFunction::new(f.clone(), 3)?;
    let erc_margins = (1..=100)
        .map(|i| {
            let t = 0.1 * i as f64;
            (t, 2.0 * f.eval(t) - f.eval(2.0 * t), (1.0 - (-t).exp()).powi(2))
        })
        .collect();
    let nsp = nsp_check(&nu, &cost, 1, &SearchOptions::default())?;
    let a = MeasurementMatrix::from_null_space(&nu)?;
    let grid = log_grid(1e-8, 1.0, 200);
    let mut rows = Vec::new();
    for &d in d_list {
        let deficit = |t: f64| f.eval(2.0 * t) - f.eval((1.0 - d) * t) - f.eval(t);
        let (lt, _, _) = grid_then_golden(|s| deficit(s.exp()), &grid.iter().map(|v| v.ln()).collect::<Vec<_>>(), 60);
        let t = lt.exp().min(1.0);
        let z: Vec<f64> = g.iter().map(|v| v * t).collect();
        let n_vec = vec![-d * t, 0.0, 0.0];
        let u: Vec<f64> = z.iter().zip(&n_vec).map(|(a, b)| a + b).collect();
        let direct = cost.eval(&u, Some(&[2]))? - cost.eval_complement(&u, &[2])?;
        if !(direct > 0.0) {
            return Err(CliError::Criterion(format!("no perturbed-NSP violation found at d = {d}")));
        }
        let witness = ProbeWitness { z, n_vec, support: vec![2], deficit: direct };
        let pair = adversarial_pair_from_witness(&a, &witness, d)?;
        let probe = rrc_probe(&nu, &cost, 1, d, 20_000, &SearchOptions::default())?;
        rows.push(Ce1Row {
            d,
            t,
            deficit: direct,
            leading_term: 2.0 * d * t,
            probe_violated: !probe.passed(),
            adversarial_ratio: pair.ratio,
            converse_bound: pair.bound,
        });
    }
    Ok(Ce1Report { erc_margins, nsp, rows })
}

fn counterexample_check(_: &SuiteOptions) -> CliResult<(bool, String)> {
    let r = verify_counterexample1(&[0.5, 0.1, 0.01, 0.001])?;
    let margins_ok = r.erc_margins.iter().all(|&(_, m, c)| m > 0.0 && (m - c).abs() <= 1e-12);
    let nsp_ok = r.nsp.verdict == NspVerdict::HoldsStrict;
    let rows_ok = r.rows.iter().all(|row| row.deficit > 1e-12);
    let smallest = r.rows.iter().map(|row| row.deficit).fold(f64::INFINITY, f64::min);
    Ok((
        margins_ok && nsp_ok && rows_ok,
        format!(
            "margins {} on 100 t, nsp {:?}, min violation deficit {smallest:.3e} over d = 0.5, 0.1, 0.01, 0.001",
            if margins_ok { "match (1-e^-t)^2" } else { "MISMATCH" },
            r.nsp.verdict
        ),
    ))
}

fn ce1_agreement_check(o: &SuiteOptions) -> CliResult<(bool, String)> {
    let cost = CostFunction::new(fexp(), 3)?;
    let res: Vec<CliResult<Option<bool>>> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let nu = sample_haar(3, 1, &mut rng::stream(o.seed ^ 0xC2, i))?;
            let c = ce1_membership(&nu)?;
            if c.margin.abs() < 1e-6 {
                return Ok(None);
            }
            let r = nsp_check(&nu, &cost, 1, &SearchOptions { seed: i, ..Default::default() })?;
            Ok(Some((r.verdict == NspVerdict::HoldsStrict) == c.in_interior))
        })
        .collect();
    let res = res.into_iter().collect::<CliResult<Vec<_>>>()?;
    let compared = res.iter().flatten().count();
    let disagree = res.iter().flatten().filter(|a| !**a).count();
    Ok((disagree == 0, format!("{disagree} disagreements over {compared} samples outside the band")))
}

/// `max_i |g_i| / (Σ|g| − |g_i|)` as an exact fraction of integers.
fn l1_theta_fraction(g: &[i64]) -> (i64, i64) {
    let sum: i64 = g.iter().map(|v| v.abs()).sum();
    let mut best = (0, 1);
    for &v in g {
        let cand = (v.abs(), sum - v.abs());
        if cand.0 * best.1 > best.0 * cand.1 {
            best = cand;
        }
    }
    best
}

fn nsc_exactness_check(_: &SuiteOptions) -> CliResult<(bool, String)> {
    let cost = CostFunction::new(SparsenessMeasure::l1(), 3)?;
    let cases: [([i64; 3], (i64, i64)); 3] = [([1, 1, 1], (1, 2)), ([1, 1, 2], (1, 1)), ([1, 2, 4], (4, 3))];
    let mut ok = true;
    let mut parts = Vec::new();
    for (g, expected) in cases {
        let (p, q) = l1_theta_fraction(&g);
        ok &= p * expected.1 == q * expected.0;
        let gf: Vec<f64> = g.iter().map(|&v| v as f64).collect();
        let r = nsc(&Subspace::span(&[&gf])?, &cost, 1, &SearchOptions::default())?;
        let err = (r.theta - expected.0 as f64 / expected.1 as f64).abs();
        ok &= err <= 1e-12;
        parts.push(format!("{g:?}: {}/{} (|err| {err:.1e})", expected.0, expected.1));
    }
    Ok((ok, parts.join(", ")))
}

fn probability_equality_check(o: &SuiteOptions) -> CliResult<(bool, String)> {
    let cfg = ExperimentConfig {
        n: 5,
        m: 3,
        k: 1,
        measure: "l1".into(),
        trials: 2000,
        d_grid: vec![1e-3],
        seed: o.seed,
        matrix_source: MatrixSource::GaussianIid,
        ..Default::default()
    };
    let (s, _) = mc_probability(&cfg)?;
    let erc = s.p_erc;
    let rrc = s.p_rrc_at_d[0].probability;
    let gap = (erc.estimate - rrc.estimate).abs();
    let slack = erc.half_width() + rrc.half_width();
    let ok = gap < slack && s.boundary_fraction < 0.01 && s.subset_holds() && s.failures == 0;
    Ok((
        ok,
        format!(
            "p_erc {:.4}, p_rrc(1e-3) {:.4}, gap {gap:.4} vs CI slack {slack:.4}, boundary {:.4}, failures {}",
            erc.estimate, rrc.estimate, s.boundary_fraction, s.failures
        ),
    ))
}

fn inclusion_check(o: &SuiteOptions) -> CliResult<(bool, String)> {
    let l1 = CostFunction::new(SparsenessMeasure::l1(), 8)?;
    let half = CostFunction::new(SparsenessMeasure::lp(0.5)?, 8)?;
    let res: Vec<CliResult<(bool, bool)>> = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let nu = sample_haar(8, 1, &mut rng::stream(o.seed ^ 0xC5, i))?;
            let opts = SearchOptions::default();
            let a = nsc(&nu, &l1, 2, &opts)?.theta < 1.0;
            let b = nsc(&nu, &half, 2, &opts)?.theta < 1.0;
            Ok((a, b))
        })
        .collect();
    let res = res.into_iter().collect::<CliResult<Vec<_>>>()?;
    let l1_ok = res.iter().filter(|r| r.0).count();
    let violations = res.iter().filter(|r| r.0 && !r.1).count();
    Ok((violations == 0, format!("{violations} violations; {l1_ok}/500 samples have theta_l1 < 1")))
}

fn formula_check(_: &SuiteOptions) -> CliResult<(bool, String)> {
    let z = zeta(1000, 10)?;
    // independent route: ln(en/k) split into 1 + ln n − ln k, exponentials
    // taken separately
    let l = 1.0 + 1000f64.ln() - 10f64.ln();
    let oracle_z = ((1.0 + 2.0 * l).ln() / (4.0 * l)).exp() * (1.0 / (24.0 * 100.0 * l)).exp();
    let th = delta_threshold(100.0);
    // the threshold is the root of δ(100, ·); bisect for it
    let (mut lo, mut hi) = (1.0, 99.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if delta(100.0, mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let ok = (z - 1.1181).abs() <= 1e-3
        && (z - oracle_z).abs() <= 1e-12
        && (th - 61.06).abs() <= 0.1
        && (th - root).abs() <= 1e-9 * root;
    Ok((ok, format!("zeta(1000,10) = {z:.6} (oracle {oracle_z:.6}); threshold {th:.4} (bisection root {root:.4})")))
}

fn width_check(o: &SuiteOptions) -> CliResult<(bool, String)> {
    let mut ok = true;
    let mut worst_rel: f64 = 0.0;
    for n in [2usize, 4, 8] {
        let cost = CostFunction::new(SparsenessMeasure::l1(), n)?;
        let w = width_mc(&cost, n, n, 10_000, o.seed)?;
        let rel = (w.mean - chi_mean(n)).abs() / chi_mean(n);
        worst_rel = worst_rel.max(rel);
        ok &= rel <= 0.02;
    }
    let mut cases = 0;
    for (n, k, d) in [(4usize, 1usize, 0.2), (6, 1, 0.05), (6, 1, 0.1), (8, 2, 0.1), (8, 2, 0.3), (8, 3, 0.5)] {
        let cost = CostFunction::new(SparsenessMeasure::l1(), n)?;
        let base = width_mc(&cost, n, k, 4000, o.seed)?;
        let ext = width_extended(&cost, n, k, d, 4000, o.seed)?;
        let diff = ext.mean - base.mean;
        let se = ext.std_error;
        ok &= diff >= -3.0 * se && diff <= d * (n as f64).sqrt() + 3.0 * se && ext.bound_violations == 0;
        cases += 1;
    }
    Ok((ok, format!("chi-mean worst relative error {worst_rel:.4}; extended-width bracket on {cases} (n,k,d) cases")))
}

fn gordon_check(o: &SuiteOptions) -> CliResult<(bool, String)> {
    let (n, m, k) = (6, 4, 1);
    let cost = CostFunction::new(SparsenessMeasure::l1(), n)?;
    let res: Vec<CliResult<bool>> = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let nu = sample_haar(n, n - m, &mut rng::stream(o.seed ^ 0xC8, i))?;
            Ok(erc_member(&nu, &cost, k, &SearchOptions::default())?.member)
        })
        .collect();
    let hits = res.into_iter().collect::<CliResult<Vec<bool>>>()?.iter().filter(|b| **b).count();
    let frac = hits as f64 / 10_000.0;
    let analytic = omega_hat_bound(&cost, m, k, 0.0, None)?;
    let w = width_mc(&cost, n, k, 10_000, o.seed)?;
    let mc = omega_hat_bound(&cost, m, k, 0.0, Some(&w))?;
    let mut ok = true;
    for b in [&analytic, &mc] {
        if !b.vacuous {
            ok &= frac >= b.probability;
        }
    }
    Ok((
        ok,
        format!(
            "fraction avoiding K {frac:.4}; bound {:.4} from rv width {:.3} ({}), {:.4} from MC width {:.3} ({}); sqrt(m) = 2",
            analytic.probability,
            analytic.width,
            if analytic.vacuous { "vacuous" } else { "nonvacuous" },
            mc.probability,
            mc.width,
            if mc.vacuous { "vacuous" } else { "nonvacuous" }
        ),
    ))
}

fn robustness_check(o: &SuiteOptions) -> CliResult<(bool, String)> {
    let (n, m, k, d) = (6, 5, 1, 0.2);
    let cost = CostFunction::new(SparsenessMeasure::l1(), n)?;
    let eps = [1e-1, 1e-2, 1e-3];
    let mut passing = 0;
    let mut violated = 0;
    let mut ok = true;
    let mut worst_ratio_frac: f64 = 0.0;
    let mut min_adv_margin = f64::INFINITY;
    for i in 0..2000u64 {
        if passing >= 50 && violated >= 50 {
            break;
        }
        let a = MeasurementMatrix::gaussian(m, n, &mut rng::stream(o.seed ^ 0xC9, i))?;
        let opts = SearchOptions { seed: i, ..Default::default() };
        let probe = rrc_probe(a.null_space(), &cost, k, d, 20_000, &opts)?;
        let (smin, smax) = a.singular_extremes();
        match probe.violation {
            None if passing < 50 => {
                passing += 1;
                let bound = robustness_constant(d, smin)?;
                let s = empirical_robustness(&a, &cost, k, 10, &eps, SolveMethod::Irls, o.seed ^ i)?;
                for e in &s.per_epsilon {
                    ok &= e.failures == 0 && e.max_ratio <= bound;
                    worst_ratio_frac = worst_ratio_frac.max(e.max_ratio / bound);
                }
            }
            Some(w) if violated < 50 => {
                violated += 1;
                let pair = adversarial_pair_from_witness(&a, &w, d)?;
                ok &= pair.ratio > pair.bound;
                min_adv_margin = min_adv_margin.min(pair.ratio / pair.bound);
                let _ = smax;
            }
            _ => {}
        }
    }
    ok &= passing == 50;
    Ok((
        ok,
        format!(
            "{passing} passing instances, worst error/eps at {worst_ratio_frac:.3} of the bound; {violated} violated instances, min adversarial ratio/bound {min_adv_margin:.3}"
        ),
    ))
}

fn perturbation_check(o: &SuiteOptions) -> CliResult<(bool, String)> {
    let res: Vec<CliResult<(f64, f64)>> = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(o.seed ^ 0xCA, i);
            let nu = sample_haar(6, 3, &mut r)?;
            let z = nu.point(&gaussian_vec(&mut r, 3));
            let mut n_vec = gaussian_vec(&mut r, 6);
            let scale = 0.99 * rng::uniform(&mut r) * norm(&z) / norm(&n_vec);
            n_vec.iter_mut().for_each(|v| *v *= scale);
            let moved = perturb_subspace(&nu, &z, &n_vec)?;
            let u: Vec<f64> = z.iter().zip(&n_vec).map(|(a, b)| a + b).collect();
            let residual = moved.residual(&u)?;
            let excess = grassmann_distance(&nu, &moved)? - norm(&n_vec) / norm(&z);
            Ok((residual, excess))
        })
        .collect();
    let res = res.into_iter().collect::<CliResult<Vec<_>>>()?;
    let failures = res.iter().filter(|(r, e)| !(*r < 1e-10 && *e <= 1e-10)).count();
    let worst_res = res.iter().map(|p| p.0).fold(0.0, f64::max);
    let worst_excess = res.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    Ok((
        failures == 0,
        format!("{failures} failures of 10000; worst residual {worst_res:.2e}, worst distance excess {worst_excess:.2e}"),
    ))
}

/// Built-in measures that are non-decreasing on `[0, ∞)`.
pub fn nondecreasing_builtins() -> Vec<SparsenessMeasure> {
    vec![
        SparsenessMeasure::l0(),
        SparsenessMeasure::lp(0.5).expect("valid p"),
        SparsenessMeasure::l1(),
        SparsenessMeasure::exp_ce1(),
        SparsenessMeasure::mcp_zap(2.0).expect("valid alpha"),
        SparsenessMeasure::scad(1.0, 3.7).expect("valid scad"),
    ]
}

fn region_check(_: &SuiteOptions) -> CliResult<(bool, String)> {
    let map = region_boundary_map(&SparsenessMeasure::l1(), 200, 200, 2.0, 2.0)?;
    let mut mismatches = 0;
    for i in 0..map.rows() {
        for j in 0..map.cols() {
            let (a, b) = (map.a_values[j], map.b_values[i]);
            let expected = if a >= 1.0 || b >= 1.0 { Region::A } else { Region::B };
            if map.at(i, j) != expected {
                mismatches += 1;
            }
        }
    }
    let mut ok = mismatches == 0 && map.inconclusive == 0;
    let mut parts = vec![format!("l1 mismatches {mismatches}")];
    for f in nondecreasing_builtins() {
        let m = region_boundary_map(&f, 200, 200, 2.0, 2.0)?;
        ok &= m.upward_violations == 0 && m.inconclusive == 0;
        parts.push(format!("{f}: {} upward violations", m.upward_violations));
    }
    Ok((ok, parts.join("; ")))
}

/// MCP with the sign of `α` flipped inside the quadratic branch.
fn corrupted_mcp(alpha: f64) -> CliResult<SparsenessMeasure> {
    let flags = MeasureFlags { non_decreasing: Tri::Unknown, subadditive: Tri::Unknown, homogeneity_degree: None, continuous: true };
    Ok(SparsenessMeasure::custom("mcp_zap_corrupted", flags, move |x: f64| {
        let a = -alpha;
        if x < 1.0 / alpha {
            2.0 * a * x - a * a * x * x
        } else {
            1.0
        }
    })?)
}

fn comparison_check(o: &SuiteOptions) -> CliResult<(bool, String)> {
    let mcp = if o.mutate_mcp { corrupted_mcp(2.0)? } else { SparsenessMeasure::mcp_zap(2.0)? };
    let r = compare_measures(&mcp, &SparsenessMeasure::l1(), 20_000);
    let ok = r.rules.contains(&ComparisonRule::RatioMonotone);
    Ok((ok, format!("{} vs l1: rules {:?}", r.f, r.rules)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_table() {
        let r = verify_counterexample1(&[0.1, 0.01]).unwrap();
        assert!((r.erc_margins[9].1 - 0.39958).abs() < 1e-5);
        for row in &r.rows {
            assert!(row.t > 0.0 && row.t <= 1.0);
            assert!(row.deficit > 0.0 && row.deficit < row.leading_term);
            assert!(row.adversarial_ratio > row.converse_bound);
            assert!(row.probe_violated);
        }
        assert!(r.rows[1].t < r.rows[0].t);
        assert!(verify_counterexample1(&[]).is_err());
        assert!(verify_counterexample1(&[1.5]).is_err());
    }

    #[test]
    fn exact_fraction_oracle() {
        assert_eq!(l1_theta_fraction(&[1, 2, 4]), (4, 3));
        assert_eq!(l1_theta_fraction(&[-3, 1, 1]), (3, 2));
    }

    #[test]
    fn comparison_mutation_is_caught() {
        let good = run_criterion(12, &SuiteOptions::default());
        assert!(good.passed, "{}", good.detail);
        let bad = run_criterion(12, &SuiteOptions { mutate_mcp: true, ..Default::default() });
        assert!(!bad.passed);
    }
}
