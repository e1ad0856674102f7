//! `J`-minimization solvers for `min J(x) s.t. Ax = y` and
//! `min J(x) s.t. ‖Ax − y‖ ≤ ε`.
//!
//! These corroborate certificates; none of them is a global optimality
//! proof for non-convex `J`, and results say so.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::CostFunction;
use crate::nsp::{rrc_probe, ProbeWitness, SearchOptions};
use crate::rng::{self, Rng};
use crate::search::{gaussian_vec, norm, PatternSearch};
use crate::subspaces::MeasurementMatrix;
use crate::support::{binomial, for_each_subset, subsets_up_to};
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Least squares on every support of size `≤ k`; the least-`J` feasible
    /// candidate wins.
    Enumerate,
    /// Multistart local descent on the feasible set.
    Descent,
    /// Iteratively reweighted least squares, `ℓp` only.
    Irls,
}

impl std::str::FromStr for SolveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enumerate" => Ok(SolveMethod::Enumerate),
            "descent" => Ok(SolveMethod::Descent),
            "irls" => Ok(SolveMethod::Irls),
            _ => Err(Error::param("method", format!("`{s}` is not one of enumerate, descent, irls"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub starts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { starts: 32, max_iters: 200, seed: 0 }
    }
}

/// `min J(x)` subject to `Ax = y` (`epsilon = 0`) or `‖Ax − y‖ < ε`.
#[derive(Debug, Clone)]
pub struct RecoveryProblem<'a> {
    pub a: &'a MeasurementMatrix,
    pub y: Vec<f64>,
    pub epsilon: f64,
    pub cost: &'a CostFunction,
    pub k: usize,
}

impl<'a> RecoveryProblem<'a> {
    pub fn new(a: &'a MeasurementMatrix, y: Vec<f64>, epsilon: f64, cost: &'a CostFunction, k: usize) -> Result<Self> {
        if y.len() != a.rows() {
            return Err(Error::DimensionMismatch { expected: a.rows(), got: y.len() });
        }
        if cost.dim() != a.cols() {
            return Err(Error::DimensionMismatch { expected: a.cols(), got: cost.dim() });
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::param("epsilon", format!("{epsilon} must be finite and non-negative")));
        }
        if k > a.cols() {
            return Err(Error::param("k", format!("{k} exceeds n = {}", a.cols())));
        }
        Ok(RecoveryProblem { a, y, epsilon, cost, k })
    }

    /// Radius of the closed ball actually used: `ε(1 − 1e−9)`.
    pub fn radius(&self) -> f64 {
        self.epsilon * (1.0 - tolerance::NOISY_SHRINK)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub x: Vec<f64>,
    pub cost: f64,
    pub residual: f64,
    pub method: SolveMethod,
    pub iterations: usize,
    /// Only `enumerate` on the noiseless problem is optimal, and only among
    /// `k`-sparse candidates.
    pub globally_optimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub x_true: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub error: f64,
    pub epsilon: f64,
    pub cost_gap: f64,
    pub residual: f64,
    pub method: SolveMethod,
    pub iterations: usize,
}

fn finish(p: &RecoveryProblem, x: Vec<f64>, method: SolveMethod, iterations: usize) -> Solution {
    Solution {
        cost: p.cost.total(&x),
        residual: p.a.residual(&x, &p.y),
        x,
        method,
        iterations,
        globally_optimal: false,
    }
}

fn require_power(p: &RecoveryProblem) -> Result<f64> {
    p.cost.measure().power().ok_or_else(|| Error::Unsupported { op: "irls", measure: p.cost.measure().to_string() })
}

/// Solves `min J(x) s.t. Ax = y`.
pub fn solve_noiseless(p: &RecoveryProblem, method: SolveMethod, opts: &SolveOptions) -> Result<Solution> {
    let x0 = p.a.min_norm_solution(&p.y)?;
    let residual = p.a.residual(&x0, &p.y);
    if residual > tolerance::FEASIBILITY * norm(&p.y).max(1.0) {
        return Err(Error::Infeasible { residual });
    }
    if p.y.iter().all(|&v| v == 0.0) {
        let mut s = finish(p, vec![0.0; p.a.cols()], method, 0);
        s.globally_optimal = true;
        return Ok(s);
    }
    match method {
        SolveMethod::Enumerate => enumerate_noiseless(p),
        SolveMethod::Descent => {
            p.cost.measure().require_continuous("descent")?;
            let (x, iters) = descent_noiseless(p, &x0, opts);
            Ok(finish(p, x, method, iters))
        }
        SolveMethod::Irls => {
            let power = require_power(p)?;
            let (x, iters) = irls(p, power, None, &x0);
            Ok(finish(p, x, method, iters))
        }
    }
}

/// Solves `min J(x) s.t. ‖Ax − y‖ ≤ ε(1 − 1e−9)`.
pub fn solve_noisy(p: &RecoveryProblem, method: SolveMethod, opts: &SolveOptions) -> Result<Solution> {
    if !(p.epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be positive for the noisy problem"));
    }
    let r = p.radius();
    if norm(&p.y) <= r {
        let mut s = finish(p, vec![0.0; p.a.cols()], method, 0);
        s.globally_optimal = true;
        return Ok(s);
    }
    let sol = match method {
        SolveMethod::Enumerate => {
            let mut best: Option<Vec<f64>> = None;
            let mut best_cost = f64::INFINITY;
            supports_checked(p.a.cols(), p.k)?;
            for s in subsets_up_to(p.a.cols(), p.k) {
                let Some(ls) = support_least_squares(p, &s) else { continue };
                for cand in [ls.clone(), p.a.project_onto_residual_ball(&ls, &p.y, r)] {
                    if p.a.residual(&cand, &p.y) <= r {
                        let c = p.cost.total(&cand);
                        if c < best_cost {
                            best_cost = c;
                            best = Some(cand);
                        }
                    }
                }
            }
            let x = best.unwrap_or_else(|| p.a.project_onto_residual_ball(&vec![0.0; p.a.cols()], &p.y, r));
            finish(p, x, method, 0)
        }
        SolveMethod::Descent => {
            p.cost.measure().require_continuous("descent")?;
            let exact = RecoveryProblem { epsilon: 0.0, ..p.clone() };
            let start = solve_noiseless(&exact, SolveMethod::Descent, opts)?.x;
            let (x, iters) = descent_noisy(p, &start, opts);
            finish(p, x, method, iters)
        }
        SolveMethod::Irls => {
            let power = require_power(p)?;
            let x0 = p.a.project_onto_residual_ball(&vec![0.0; p.a.cols()], &p.y, r);
            let (x, iters) = irls(p, power, Some(r), &x0);
            finish(p, x, method, iters)
        }
    };
    debug_assert!(sol.residual <= p.epsilon + tolerance::FEASIBILITY);
    Ok(sol)
}

fn supports_checked(n: usize, k: usize) -> Result<()> {
    let total: u64 = (0..=k).map(|s| binomial(n, s)).fold(0u64, |a, b| a.saturating_add(b));
    if total > tolerance::SUPPORT_CAP {
        return Err(Error::TooManySupports { n, k, cap: tolerance::SUPPORT_CAP });
    }
    Ok(())
}

/// Least-squares solution supported on `s`, or `None` if the columns are
/// numerically dependent.
fn support_least_squares(p: &RecoveryProblem, s: &[usize]) -> Option<Vec<f64>> {
    if s.is_empty() {
        return Some(vec![0.0; p.a.cols()]);
    }
    let a_s = p.a.entries().select_columns(s);
    let svd = a_s.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= tolerance::RANK_REL * smax.max(1.0) * p.a.cols() as f64 {
        return None;
    }
    let sol = svd.solve(&DVector::from_column_slice(&p.y), 0.0).ok()?;
    let mut x = vec![0.0; p.a.cols()];
    for (c, &i) in s.iter().enumerate() {
        x[i] = sol[c];
    }
    Some(x)
}

fn enumerate_noiseless(p: &RecoveryProblem) -> Result<Solution> {
    supports_checked(p.a.cols(), p.k)?;
    let tol = tolerance::FEASIBILITY * norm(&p.y).max(1.0);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut best_residual = f64::INFINITY;
    let mut count = 0;
    for s in subsets_up_to(p.a.cols(), p.k) {
        let Some(x) = support_least_squares(p, &s) else { continue };
        count += 1;
        let res = p.a.residual(&x, &p.y);
        best_residual = best_residual.min(res);
        if res <= tol {
            let c = p.cost.total(&x);
            if best.as_ref().map_or(true, |(_, bc)| c < *bc) {
                best = Some((x, c));
            }
        }
    }
    let (x, _) = best.ok_or(Error::Infeasible { residual: best_residual })?;
    let mut s = finish(p, x, SolveMethod::Enumerate, count);
    s.globally_optimal = true;
    Ok(s)
}

/// `x = W⁻¹Aᵀ(AW⁻¹Aᵀ + I/λ)⁻¹ y` with `λ` chosen so that `‖Ax − y‖ = radius`,
/// or `λ = ∞` (exact feasibility) when `radius` is `None`. This is the
/// minimizer of `Σ x_i²/winv_i` over the feasible set.
fn weighted_min_norm(a: &DMatrix<f64>, winv: &[f64], y: &[f64], radius: Option<f64>) -> Option<Vec<f64>> {
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, jj| a[(i, jj)] * winv[jj]);
    let g = &scaled * a.transpose();
    let eig = SymmetricEigen::new(g);
    let lmax = eig.eigenvalues.max();
    if !(eig.eigenvalues.min() > 1e-14 * lmax) {
        return None;
    }
    let b = eig.eigenvectors.transpose() * DVector::from_column_slice(y);
    let ev = &eig.eigenvalues;
    let coef: DVector<f64> = match radius {
        None => b.component_div(ev),
        Some(r) => {
            let resid = |lam: f64| (0..b.len()).map(|i| (b[i] / (1.0 + lam * ev[i])).powi(2)).sum::<f64>().sqrt();
            let mut hi = 1.0;
            while resid(hi) > r && hi < 1e300 {
                hi *= 4.0;
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if resid(mid) > r {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            DVector::from_fn(b.len(), |i, _| hi * b[i] / (1.0 + hi * ev[i]))
        }
    };
    let x = scaled.transpose() * (&eig.eigenvectors * coef);
    Some(x.as_slice().to_vec())
}

/// IRLS with weights `(|x_i| + μ)^{p−2}`, `μ` halved every 10 iterations
/// from 1 down to 1e−10.
fn irls(p: &RecoveryProblem, power: f64, radius: Option<f64>, x0: &[f64]) -> (Vec<f64>, usize) {
    let mut x = x0.to_vec();
    let mut mu = 1.0;
    let mut iters = 0;
    while mu >= 1e-10 {
        let winv: Vec<f64> = x.iter().map(|v| (v.abs() + mu).powf(2.0 - power)).collect();
        match weighted_min_norm(p.a.entries(), &winv, &p.y, radius) {
            Some(next) if next.iter().all(|v| v.is_finite()) => x = next,
            _ => break,
        }
        iters += 1;
        if iters % 10 == 0 {
            mu *= 0.5;
        }
    }
    // remove drift from the feasible set
    match radius {
        None => {
            let resid: Vec<f64> = p.a.apply(&x).iter().zip(&p.y).map(|(a, b)| b - a).collect();
            if let Ok(fix) = p.a.min_norm_solution(&resid) {
                x.iter_mut().zip(fix).for_each(|(a, b)| *a += b);
            }
        }
        Some(r) => x = p.a.project_onto_residual_ball(&x, &p.y, r),
    }
    (x, iters)
}

fn subgradient(cost: &CostFunction, x: &[f64]) -> Vec<f64> {
    let f = cost.measure();
    x.iter()
        .map(|&v| if v.abs() < tolerance::KINK { 0.0 } else { f.derivative(v.abs()) * v.signum() })
        .collect()
}

/// Backtracking subgradient descent followed by a compass-search polish.
/// `to_x` maps search coordinates to `x`, `grad` pulls an `x`-gradient back,
/// `project` keeps coordinates feasible.
fn local_descent(
    cost: &CostFunction,
    start: Vec<f64>,
    to_x: &dyn Fn(&[f64]) -> Vec<f64>,
    pull_back: &dyn Fn(&[f64]) -> Vec<f64>,
    project: &dyn Fn(&mut [f64]),
    scale: f64,
    max_iters: usize,
    rng: &mut Rng,
) -> (Vec<f64>, f64, usize) {
    let phi = |w: &[f64]| cost.total(&to_x(w));
    let mut w = start;
    project(&mut w);
    let mut fw = phi(&w);
    let mut iters = 0;
    for _ in 0..max_iters {
        iters += 1;
        let g = pull_back(&subgradient(cost, &to_x(&w)));
        let gn = norm(&g);
        if gn == 0.0 {
            break;
        }
        let mut step = scale / gn;
        let mut moved = false;
        for _ in 0..40 {
            let mut trial: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            project(&mut trial);
            let ft = phi(&trial);
            if ft < fw - 1e-4 * step * gn * gn * 1e-3 {
                w = trial;
                fw = ft;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let search = PatternSearch { initial_step: 0.1 * scale, min_step: 1e-12 * scale.max(1.0), max_evals: 3000, random_directions: 4 };
    let res = search.maximize(w, |v| -phi(v), |v| project(v), rng);
    iters += res.evals;
    (res.x, -res.value, iters)
}

fn descent_noiseless(p: &RecoveryProblem, x0: &[f64], opts: &SolveOptions) -> (Vec<f64>, usize) {
    let nb = p.a.null_space().basis();
    let (n, l) = nb.shape();
    let m = p.a.rows();
    let to_x = |w: &[f64]| -> Vec<f64> {
        let mut x = x0.to_vec();
        for (c, &wc) in w.iter().enumerate() {
            for i in 0..n {
                x[i] += nb[(i, c)] * wc;
            }
        }
        x
    };
    let coords = |x: &[f64]| -> Vec<f64> {
        (0..l).map(|c| (0..n).map(|i| nb[(i, c)] * (x[i] - x0[i])).sum()).collect()
    };
    let pull_back = |g: &[f64]| -> Vec<f64> { (0..l).map(|c| (0..n).map(|i| nb[(i, c)] * g[i]).sum()).collect() };
    let scale = norm(x0).max(1e-12);

    // for concave-on-the-orthant F the minimum sits on a basic solution
    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; l]];
    if binomial(n, m) <= 5_000 {
        for_each_subset(n, m, |s| {
            if let Some(x) = support_least_squares(p, s) {
                if p.a.residual(&x, &p.y) <= 1e-9 * norm(&p.y).max(1.0) {
                    starts.push(coords(&x));
                }
            }
            true
        });
    }
    let mut r = rng::stream(opts.seed, 0);
    for _ in 0..opts.starts {
        starts.push(gaussian_vec(&mut r, l).into_iter().map(|v| v * scale).collect());
    }
    let mut scored: Vec<(f64, Vec<f64>)> = starts.into_iter().map(|w| (p.cost.total(&to_x(&w)), w)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.truncate(opts.starts.max(1));
    let results: Vec<(Vec<f64>, f64, usize)> = scored
        .into_par_iter()
        .enumerate()
        .map(|(i, (_, w))| {
            let mut r = rng::stream(opts.seed, 1 + i as u64);
            local_descent(p.cost, w, &to_x, &pull_back, &|_: &mut [f64]| {}, scale, opts.max_iters, &mut r)
        })
        .collect();
    let iters = results.iter().map(|r| r.2).sum();
    let best = results.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("at least one start");
    let mut x = to_x(&best.0);
    let resid: Vec<f64> = p.a.apply(&x).iter().zip(&p.y).map(|(a, b)| b - a).collect();
    if let Ok(fix) = p.a.min_norm_solution(&resid) {
        x.iter_mut().zip(fix).for_each(|(a, b)| *a += b);
    }
    (x, iters)
}

fn descent_noisy(p: &RecoveryProblem, start: &[f64], opts: &SolveOptions) -> (Vec<f64>, usize) {
    let r = p.radius();
    let n = p.a.cols();
    let project = |x: &mut [f64]| {
        let q = p.a.project_onto_residual_ball(x, &p.y, r);
        x.copy_from_slice(&q);
    };
    let scale = norm(start).max(1e-12);
    let mut starts = vec![start.to_vec(), vec![0.0; n]];
    let mut rng0 = rng::stream(opts.seed, 0);
    for _ in 0..opts.starts.min(8) {
        let g = gaussian_vec(&mut rng0, n);
        starts.push(start.iter().zip(g).map(|(a, b)| a + 0.1 * scale * b).collect());
    }
    let id = |x: &[f64]| x.to_vec();
    let results: Vec<(Vec<f64>, f64, usize)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut rr = rng::stream(opts.seed, 1 + i as u64);
            local_descent(p.cost, x, &id, &id, &project, scale, opts.max_iters, &mut rr)
        })
        .collect();
    let iters = results.iter().map(|r| r.2).sum();
    let mut best = results.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("at least one start").0;
    project(&mut best);
    (best, iters)
}

/// `x̄ = u_T`, `x̂ = −u_{T^c}` and `v = A(x̂ − x̄)/2` built from a
/// perturbed-NSP violation `u = z + n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversarialPair {
    pub x_bar: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub v: Vec<f64>,
    pub epsilon: f64,
    pub error: f64,
    pub ratio: f64,
    /// `2(1−d)/(d σ_max)`, which `ratio` provably exceeds.
    pub bound: f64,
}

/// `2(1−d)/(d σ_max)`.
pub fn adversarial_ratio_bound(d: f64, sigma_max: f64) -> f64 {
    2.0 * (1.0 - d) / (d * sigma_max)
}

pub fn adversarial_pair_from_witness(a: &MeasurementMatrix, w: &ProbeWitness, d: f64) -> Result<AdversarialPair> {
    let n = a.cols();
    if w.z.len() != n || w.n_vec.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.z.len() });
    }
    let u: Vec<f64> = w.z.iter().zip(&w.n_vec).map(|(a, b)| a + b).collect();
    let mut on = vec![false; n];
    for &i in &w.support {
        *on.get_mut(i).ok_or(Error::IndexOutOfRange { index: i, dim: n })? = true;
    }
    let x_bar: Vec<f64> = (0..n).map(|i| if on[i] { u[i] } else { 0.0 }).collect();
    let x_hat: Vec<f64> = (0..n).map(|i| if on[i] { 0.0 } else { -u[i] }).collect();
    let diff: Vec<f64> = x_hat.iter().zip(&x_bar).map(|(a, b)| a - b).collect();
    let v: Vec<f64> = a.apply(&diff).into_iter().map(|t| 0.5 * t).collect();
    let epsilon = norm(&v);
    let (_, sigma_max) = a.singular_extremes();
    if !(epsilon > 1e-12 * sigma_max * norm(&u)) {
        return Err(Error::NoWitness("perturbation lies in the null space, so ε = 0".into()));
    }
    let error = norm(&diff);
    Ok(AdversarialPair { x_bar, x_hat, v, epsilon, error, ratio: error / epsilon, bound: adversarial_ratio_bound(d, sigma_max) })
}

/// Probes `N(A)` at radius `d` and turns the violation into a pair of
/// signals that defeats any robustness constant below the converse bound.
pub fn adversarial_pair(
    a: &MeasurementMatrix,
    cost: &CostFunction,
    k: usize,
    d: f64,
    budget: usize,
    opts: &SearchOptions,
) -> Result<AdversarialPair> {
    let probe = rrc_probe(a.null_space(), cost, k, d, budget, opts)?;
    let w = probe.violation.ok_or_else(|| Error::NoWitness(format!("no violation found at d = {d}")))?;
    adversarial_pair_from_witness(a, &w, d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    /// `max error/ε` over completed trials.
    pub max_ratio: f64,
    pub worst: Option<TrialRecord>,
    pub completed: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessSummary {
    pub trials: usize,
    pub per_epsilon: Vec<EpsilonSummary>,
}

/// One noisy recovery per trial and `ε`: random `k`-sparse `x̄` with standard
/// normal nonzeros, noise of norm exactly `ε`.
pub fn empirical_robustness(
    a: &MeasurementMatrix,
    cost: &CostFunction,
    k: usize,
    trials: usize,
    epsilon_grid: &[f64],
    method: SolveMethod,
    seed: u64,
) -> Result<RobustnessSummary> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    if let Some(e) = epsilon_grid.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::param("epsilon", format!("{e} must be positive")));
    }
    if k > a.cols() {
        return Err(Error::param("k", format!("{k} exceeds n = {}", a.cols())));
    }
    let (n, m) = (a.cols(), a.rows());
    let records: Vec<Vec<Option<TrialRecord>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let mut x_true = vec![0.0; n];
            let vals = gaussian_vec(&mut r, k);
            for (i, v) in sample(&mut r, n, k).into_iter().zip(vals) {
                x_true[i] = v;
            }
            let mut dir = gaussian_vec(&mut r, m);
            crate::search::normalize(&mut dir);
            let clean = a.apply(&x_true);
            epsilon_grid
                .iter()
                .map(|&eps| {
                    let y: Vec<f64> = clean.iter().zip(&dir).map(|(c, d)| c + eps * d).collect();
                    let p = RecoveryProblem::new(a, y, eps, cost, k).ok()?;
                    let opts = SolveOptions { seed: seed ^ t as u64, ..SolveOptions::default() };
                    let s = solve_noisy(&p, method, &opts).ok()?;
                    if !(s.residual <= eps + tolerance::FEASIBILITY) {
                        return None;
                    }
                    let error = s.x.iter().zip(&x_true).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    Some(TrialRecord {
                        cost_gap: s.cost - cost.total(&x_true),
                        x_true: x_true.clone(),
                        x_hat: s.x,
                        error,
                        epsilon: eps,
                        residual: s.residual,
                        method,
                        iterations: s.iterations,
                    })
                })
                .collect()
        })
        .collect();
    let per_epsilon = epsilon_grid
        .iter()
        .enumerate()
        .map(|(e, &eps)| {
            let mut s = EpsilonSummary { epsilon: eps, max_ratio: 0.0, worst: None, completed: 0, failures: 0 };
            for rec in records.iter().map(|r| &r[e]) {
                match rec {
                    Some(rec) => {
                        s.completed += 1;
                        let ratio = rec.error / eps;
                        if s.worst.is_none() || ratio > s.max_ratio {
                            s.max_ratio = ratio;
                            s.worst = Some(rec.clone());
                        }
                    }
                    None => s.failures += 1,
                }
            }
            s
        })
        .collect();
    Ok(RobustnessSummary { trials, per_epsilon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::SparsenessMeasure;
    use crate::nsp::rrc_probe;
    use crate::subspaces::Subspace;
    use approx::assert_relative_eq;

    fn matrix_with_null(v: &[f64]) -> MeasurementMatrix {
        MeasurementMatrix::from_null_space(&Subspace::span(&[v]).unwrap()).unwrap()
    }

    fn l1(n: usize) -> CostFunction {
        CostFunction::new(SparsenessMeasure::l1(), n).unwrap()
    }

    #[test]
    fn recovers_sparse_signal_when_theta_below_one() {
        let a = matrix_with_null(&[1.0, 1.0, 1.0]);
        let j = l1(3);
        let x_bar = [5.0, 0.0, 0.0];
        let p = RecoveryProblem::new(&a, a.apply(&x_bar), 0.0, &j, 1).unwrap();
        for method in [SolveMethod::Enumerate, SolveMethod::Descent, SolveMethod::Irls] {
            let s = solve_noiseless(&p, method, &SolveOptions::default()).unwrap();
            for (a, b) in s.x.iter().zip(&x_bar) {
                assert!((a - b).abs() < 1e-6, "{method:?}: {:?}", s.x);
            }
            assert!(s.residual < 1e-9);
        }
    }

    #[test]
    fn zero_measurement_gives_zero() {
        let a = matrix_with_null(&[1.0, 2.0, 3.0]);
        let j = l1(3);
        let p = RecoveryProblem::new(&a, vec![0.0, 0.0], 0.0, &j, 1).unwrap();
        assert_eq!(solve_noiseless(&p, SolveMethod::Descent, &SolveOptions::default()).unwrap().x, vec![0.0; 3]);
        let p = RecoveryProblem::new(&a, vec![1e-3, 0.0], 0.01, &j, 1).unwrap();
        assert_eq!(solve_noisy(&p, SolveMethod::Descent, &SolveOptions::default()).unwrap().x, vec![0.0; 3]);
    }

    #[test]
    fn boundary_instance_has_tied_optimum() {
        let a = matrix_with_null(&[1.0, 1.0, 2.0]);
        let j = l1(3);
        let c = 1.5;
        let p = RecoveryProblem::new(&a, a.apply(&[0.0, 0.0, c]), 0.0, &j, 2).unwrap();
        let s = solve_noiseless(&p, SolveMethod::Enumerate, &SolveOptions::default()).unwrap();
        assert_relative_eq!(s.cost, c, max_relative = 1e-9);
        // the competitor (−c/2, −c/2, 0) is feasible with the same cost
        assert!(a.residual(&[-c / 2.0, -c / 2.0, 0.0], &p.y) < 1e-12);
    }

    #[test]
    fn irls_rejects_non_power_measures() {
        let a = matrix_with_null(&[1.0, 1.0, 1.0]);
        let j = CostFunction::new(SparsenessMeasure::exp_ce1(), 3).unwrap();
        let p = RecoveryProblem::new(&a, vec![1.0, 0.0], 0.0, &j, 1).unwrap();
        assert!(matches!(solve_noiseless(&p, SolveMethod::Irls, &SolveOptions::default()), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn enumerate_matches_dense_grid_on_small_instance() {
        // n=3, m=2: feasible set is a line; a dense scan is the oracle
        let a = matrix_with_null(&[0.4, -1.0, 0.7]);
        let j = CostFunction::new(SparsenessMeasure::lp(0.5).unwrap(), 3).unwrap();
        let p = RecoveryProblem::new(&a, a.apply(&[0.0, 2.0, 0.0]), 0.0, &j, 1).unwrap();
        let s = solve_noiseless(&p, SolveMethod::Enumerate, &SolveOptions::default()).unwrap();
        let x0 = a.min_norm_solution(&p.y).unwrap();
        let nb = a.null_space().basis();
        let mut best = f64::INFINITY;
        for i in -400_000..=400_000 {
            let t = i as f64 * 1e-5;
            let x: Vec<f64> = (0..3).map(|c| x0[c] + t * nb[(c, 0)]).collect();
            best = best.min(j.total(&x));
        }
        assert!(s.cost <= best + 1e-6, "{} vs {}", s.cost, best);
    }

    #[test]
    fn noisy_outputs_are_feasible_and_converge() {
        let a = matrix_with_null(&[1.0, 1.0, 1.0]);
        let j = l1(3);
        let x_bar = [2.0, 0.0, 0.0];
        let clean = a.apply(&x_bar);
        let mut last = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let y: Vec<f64> = clean.iter().map(|v| v + eps / 2f64.sqrt()).collect();
            let p = RecoveryProblem::new(&a, y, eps, &j, 1).unwrap();
            for method in [SolveMethod::Descent, SolveMethod::Irls, SolveMethod::Enumerate] {
                let s = solve_noisy(&p, method, &SolveOptions::default()).unwrap();
                assert!(s.residual <= eps + 1e-9);
                let err = s.x.iter().zip(&x_bar).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                assert!(err < 50.0 * eps, "{method:?} eps={eps} err={err}");
                if method == SolveMethod::Irls {
                    assert!(err <= last + 1e-8);
                    last = err;
                }
            }
        }
    }

    #[test]
    fn adversarial_pair_on_counterexample() {
        let a = matrix_with_null(&[1.0, 1.0, 2.0]);
        let j = CostFunction::new(SparsenessMeasure::exp_ce1(), 3).unwrap();
        let d = 0.1;
        let pair = adversarial_pair(&a, &j, 1, d, 50_000, &SearchOptions::default()).unwrap();
        assert!(pair.ratio > pair.bound);
        let y: Vec<f64> = a.apply(&pair.x_bar).iter().zip(&pair.v).map(|(a, b)| a + b).collect();
        assert_relative_eq!(a.residual(&pair.x_hat, &y), pair.epsilon, max_relative = 1e-9);
        assert!(j.total(&pair.x_hat) <= j.total(&pair.x_bar));

        let lone = ProbeWitness { z: vec![1.0, 1.0, 2.0], n_vec: vec![0.0; 3], support: vec![2], deficit: 0.0 };
        assert!(adversarial_pair_from_witness(&a, &lone, d).is_err());
    }

    #[test]
    fn l1_boundary_instance_beats_converse_bound() {
        let a = matrix_with_null(&[1.0, 1.0, 2.0]);
        let j = l1(3);
        for d in [0.3, 0.1, 0.01] {
            let probe = rrc_probe(a.null_space(), &j, 1, d, 20_000, &SearchOptions::default()).unwrap();
            let w = probe.violation.unwrap();
            let pair = adversarial_pair_from_witness(&a, &w, d).unwrap();
            assert!(pair.ratio > pair.bound, "d={d}");
        }
    }

    #[test]
    fn empirical_robustness_respects_direct_bound() {
        let a = matrix_with_null(&[1.0, 1.0, 1.0]);
        let j = l1(3);
        let d = 0.05;
        assert!(rrc_probe(a.null_space(), &j, 1, d, 20_000, &SearchOptions::default()).unwrap().passed());
        let bound = crate::nsp::robustness_constant(d, a.singular_extremes().0).unwrap();
        let s = empirical_robustness(&a, &j, 1, 20, &[1e-1, 1e-2, 1e-3], SolveMethod::Irls, 3).unwrap();
        for e in &s.per_epsilon {
            assert_eq!(e.failures, 0);
            assert!(e.max_ratio <= bound, "{} > {bound}", e.max_ratio);
        }
        let s = empirical_robustness(&a, &j, 0, 5, &[1e-2], SolveMethod::Descent, 3).unwrap();
        assert!(s.per_epsilon[0].max_ratio <= bound);
    }
}
