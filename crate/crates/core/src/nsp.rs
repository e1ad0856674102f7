//! Null space property certificates.
//!
//! For a fixed vector `u` the support `|T| ≤ k` that maximizes both
//! `J(u_T) − J(u_{T^c})` and `J(u_T)/J(u_{T^c})` is the set of `k` largest
//! `F(|u_i|)`, so every search here ranges over directions of `ν` (and a
//! scale for non-homogeneous `F`) while the support is resolved exactly by
//! [`CostFunction::top_split`].

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{CostFunction, SparsenessMeasure};
use crate::rng;
use crate::search::{gaussian_vec, golden_max, grid_then_golden, log_grid, norm, normalize, PatternSearch};
use crate::subspaces::Subspace;
use crate::tolerance;

/// Knobs shared by the sphere searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    /// Random starts for multistart ascent (`l ≥ 3`) and the probe.
    pub starts: usize,
    /// Angular grid size on the circle when `l = 2`.
    pub circle_points: usize,
    /// Cap on objective evaluations spent by local ascent.
    pub budget: usize,
    pub golden_iters: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { starts: 32, circle_points: 2048, budget: 200_000, golden_iters: 40, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NscMethod {
    Exact1d,
    SphereEnum,
    Multistart,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NscReport {
    /// `sup J(z_T)/J(z_{T^c})`; `+∞` when some `z ∈ ν` lives on `k` coordinates.
    pub theta: f64,
    pub witness_z: Vec<f64>,
    pub witness_t: Vec<usize>,
    pub method: NscMethod,
    pub evaluations: usize,
    pub is_lower_bound: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NspVerdict {
    HoldsStrict,
    Fails,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NspReport {
    pub verdict: NspVerdict,
    /// Minus the worst relative deficit `(J(z_T) − J(z_{T^c}))/J(z)`;
    /// positive when the property holds.
    pub margin: f64,
    /// `J(z_T) − J(z_{T^c})` at the witness.
    pub worst_deficit: f64,
    pub witness_z: Vec<f64>,
    pub witness_t: Vec<usize>,
    pub method: NscMethod,
    pub evaluations: usize,
    /// A `holds_strict` verdict is only certified to the search resolution.
    pub is_lower_bound: bool,
}

fn verdict_from(relative_deficit: f64) -> NspVerdict {
    if relative_deficit.abs() < tolerance::STRICTNESS {
        NspVerdict::Boundary
    } else if relative_deficit >= 0.0 {
        NspVerdict::Fails
    } else {
        NspVerdict::HoldsStrict
    }
}

fn check_inputs(nu: &Subspace, j: &CostFunction, k: usize, opts: &SearchOptions, op: &'static str) -> Result<()> {
    let n = nu.ambient_dim();
    if j.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: j.dim() });
    }
    if k == 0 || k >= n {
        return Err(Error::param("k", format!("need 1 ≤ k < n, got k={k}, n={n}")));
    }
    if opts.budget == 0 {
        return Err(Error::BudgetExhausted);
    }
    j.measure().require_continuous(op)
}

/// `ln t` grid for non-homogeneous measures.
fn log_scales() -> Vec<f64> {
    log_grid(tolerance::SCALE_MIN, tolerance::SCALE_MAX, tolerance::SCALE_POINTS)
        .into_iter()
        .map(f64::ln)
        .collect()
}

/// Maximizes `obj(t)` over the scale grid, or evaluates at `t = 1` when the
/// measure is homogeneous. Returns `(t, value)`.
fn scale_sup(measure: &SparsenessMeasure, scales: &[f64], iters: usize, obj: impl Fn(f64) -> f64) -> (f64, f64) {
    if measure.is_homogeneous() {
        return (1.0, obj(1.0));
    }
    let lo = scales[0];
    let hi = scales[scales.len() - 1];
    let (s, v, _) = grid_then_golden(|s| obj(s.clamp(lo, hi).exp()), scales, iters);
    (s.clamp(lo, hi).exp(), v)
}

struct Candidate {
    w: Vec<f64>,
    value: f64,
}

/// Angles in `[0, π)` where some coordinate of `z(φ) = cos φ b₁ + sin φ b₂`
/// vanishes or two coordinates tie in magnitude. On the arcs in between,
/// every ℓ1 ratio is linear-fractional in `tan φ` and hence monotone.
fn breakpoints(nu: &Subspace) -> Vec<f64> {
    let b = nu.basis();
    let n = b.nrows();
    let mut forms: Vec<(f64, f64)> = (0..n).map(|i| (b[(i, 0)], b[(i, 1)])).collect();
    for i in 0..n {
        for jj in (i + 1)..n {
            forms.push((b[(i, 0)] - b[(jj, 0)], b[(i, 1)] - b[(jj, 1)]));
            forms.push((b[(i, 0)] + b[(jj, 0)], b[(i, 1)] + b[(jj, 1)]));
        }
    }
    let pi = std::f64::consts::PI;
    forms
        .into_iter()
        .filter(|(c, s)| c.hypot(*s) > 1e-14)
        .map(|(c, s)| (-c).atan2(s).rem_euclid(pi))
        .collect()
}

/// Searches the unit sphere of `ν` (in coordinates `w ∈ S^{l−1}`) for large
/// values of `g`. Returns candidates sorted by decreasing value and the
/// method used.
fn sphere_search(
    nu: &Subspace,
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    refine_circle: bool,
    opts: &SearchOptions,
) -> (Vec<Candidate>, NscMethod) {
    let l = nu.dim();
    let mut cands = match l {
        1 => vec![Candidate { w: vec![1.0], value: g(&[1.0]) }],
        2 => {
            let pi = std::f64::consts::PI;
            let m = opts.circle_points.max(8);
            let mut angles: Vec<f64> = (0..m).map(|i| pi * i as f64 / m as f64).collect();
            angles.extend(breakpoints(nu));
            let at = |phi: f64| g(&[phi.cos(), phi.sin()]);
            let mut scored: Vec<(f64, f64)> = angles.iter().map(|&phi| (phi, at(phi))).collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1));
            if refine_circle {
                let h = pi / m as f64;
                for entry in scored.iter_mut().take(4) {
                    let (phi, v) = golden_max(at, entry.0 - h, entry.0 + h, opts.golden_iters);
                    if v > entry.1 {
                        *entry = (phi, v);
                    }
                }
                scored.sort_by(|a, b| b.1.total_cmp(&a.1));
            }
            scored.into_iter().map(|(phi, value)| Candidate { w: vec![phi.cos(), phi.sin()], value }).collect()
        }
        _ => multistart(nu, g, opts),
    };
    cands.sort_by(|a, b| b.value.total_cmp(&a.value));
    let method = match l {
        1 => NscMethod::Exact1d,
        2 => NscMethod::SphereEnum,
        _ => NscMethod::Multistart,
    };
    (cands, method)
}

fn multistart(nu: &Subspace, g: &(dyn Fn(&[f64]) -> f64 + Sync), opts: &SearchOptions) -> Vec<Candidate> {
    let l = nu.dim();
    let n = nu.ambient_dim();
    let b = nu.basis();
    // the direction of ν that maximizes |z_i| is the projection of e_i
    let mut seeds: Vec<Vec<f64>> = (0..n)
        .map(|i| b.row(i).iter().copied().collect::<Vec<f64>>())
        .filter(|w| norm(w) > 1e-12)
        .collect();
    let mut r = rng::stream(opts.seed, u64::MAX);
    for _ in 0..opts.starts {
        seeds.push(gaussian_vec(&mut r, l));
    }
    for w in seeds.iter_mut() {
        normalize(w);
    }
    let mut scored: Vec<Candidate> = seeds.into_iter().map(|w| Candidate { value: g(&w), w }).collect();
    scored.sort_by(|a, b| b.value.total_cmp(&a.value));
    let starts = opts.starts.clamp(1, scored.len());
    let per_start = (opts.budget / starts).max(2 * l + 1);
    let search = PatternSearch { max_evals: per_start, ..PatternSearch::default() };
    let mut refined: Vec<Candidate> = scored[..starts]
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut r = rng::stream(opts.seed, i as u64);
            let res = search.maximize(c.w.clone(), g, |w: &mut [f64]| project_unit(w), &mut r);
            Candidate { w: res.x, value: res.value }
        })
        .collect();
    refined.extend(scored.into_iter().skip(starts));
    refined
}

fn project_unit(w: &mut [f64]) {
    if norm(w) == 0.0 {
        w[0] = 1.0;
    }
    normalize(w);
}

/// Zeroes rounding residue so exactly sparse directions give `θ = ∞`.
fn snap(mut z: Vec<f64>) -> Vec<f64> {
    let top = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    z.iter_mut().filter(|v| v.abs() <= 1e-14 * top).for_each(|v| *v = 0.0);
    z
}

/// The null space constant `θ_J = sup_{z ∈ ν∖0} max_{|T| ≤ k} J(z_T)/J(z_{T^c})`.
pub fn nsc(nu: &Subspace, j: &CostFunction, k: usize, opts: &SearchOptions) -> Result<NscReport> {
    check_inputs(nu, j, k, opts, "nsc")?;
    let measure = j.measure();
    let scales = log_scales();
    let evals = AtomicUsize::new(0);
    let ratio_at = |z: &[f64], t: f64| {
        evals.fetch_add(1, Ordering::Relaxed);
        let u: Vec<f64> = z.iter().map(|v| v * t).collect();
        j.top_split(&u, k).ratio()
    };
    let g = |w: &[f64]| {
        let z = snap(nu.point(w));
        scale_sup(measure, &scales, opts.golden_iters, |t| ratio_at(&z, t)).1
    };
    let exact_l2 = measure.power() == Some(1.0);
    let (cands, method) = sphere_search(nu, &g, !exact_l2, opts);
    let best = &cands[0];
    let z = snap(nu.point(&best.w));
    let (t, _) = scale_sup(measure, &scales, opts.golden_iters, |t| ratio_at(&z, t));
    let witness_z: Vec<f64> = z.iter().map(|v| v * t).collect();
    let split = j.top_split(&witness_z, k);
    let is_lower_bound = match method {
        NscMethod::Exact1d => !measure.is_homogeneous(),
        NscMethod::SphereEnum => !exact_l2,
        NscMethod::Multistart => true,
    };
    Ok(NscReport {
        theta: split.ratio(),
        witness_z,
        witness_t: split.support,
        method,
        evaluations: evals.into_inner(),
        is_lower_bound,
    })
}

/// Decides `J(z_T) < J(z_{T^c})` for all `z ∈ ν∖0`, `|T| ≤ k` by maximizing the
/// relative deficit over directions of `ν` and the scale grid.
pub fn nsp_check(nu: &Subspace, j: &CostFunction, k: usize, opts: &SearchOptions) -> Result<NspReport> {
    check_inputs(nu, j, k, opts, "nsp_check")?;
    let measure = j.measure();
    let scales = log_scales();
    let evals = AtomicUsize::new(0);
    let rel_at = |z: &[f64], t: f64| {
        evals.fetch_add(1, Ordering::Relaxed);
        let u: Vec<f64> = z.iter().map(|v| v * t).collect();
        j.top_split(&u, k).relative_deficit()
    };
    let g = |w: &[f64]| {
        let z = nu.point(w);
        scale_sup(measure, &scales, opts.golden_iters, |t| rel_at(&z, t)).1
    };
    let exact_l2 = measure.power() == Some(1.0);
    let (cands, method) = sphere_search(nu, &g, !exact_l2, opts);
    let best = &cands[0];
    let z = nu.point(&best.w);
    let (t, rel) = scale_sup(measure, &scales, opts.golden_iters, |t| rel_at(&z, t));
    let witness_z: Vec<f64> = z.iter().map(|v| v * t).collect();
    let split = j.top_split(&witness_z, k);
    let is_lower_bound = match method {
        NscMethod::Exact1d => !measure.is_homogeneous(),
        NscMethod::SphereEnum => !exact_l2,
        NscMethod::Multistart => true,
    };
    Ok(NspReport {
        verdict: verdict_from(rel),
        margin: -rel,
        worst_deficit: split.deficit(),
        witness_z,
        witness_t: split.support,
        method,
        evaluations: evals.into_inner(),
        is_lower_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErcReport {
    pub member: bool,
    /// `1 − θ` for power measures, the NSP margin otherwise.
    pub margin: f64,
    pub theta: Option<f64>,
    pub verdict: NspVerdict,
    pub is_lower_bound: bool,
}

/// Membership of `ν` in the ERC set: `θ < 1` for `ℓp`, the strict NSP
/// verdict for other measures.
pub fn erc_member(nu: &Subspace, j: &CostFunction, k: usize, opts: &SearchOptions) -> Result<ErcReport> {
    if j.measure().power().is_some() {
        let r = nsc(nu, j, k, opts)?;
        let margin = 1.0 - r.theta;
        let verdict = if margin.abs() < tolerance::STRICTNESS {
            NspVerdict::Boundary
        } else if margin > 0.0 {
            NspVerdict::HoldsStrict
        } else {
            NspVerdict::Fails
        };
        Ok(ErcReport {
            member: r.theta < 1.0,
            margin,
            theta: Some(r.theta),
            verdict,
            is_lower_bound: r.is_lower_bound,
        })
    } else {
        let r = nsp_check(nu, j, k, opts)?;
        Ok(ErcReport {
            member: r.verdict == NspVerdict::HoldsStrict,
            margin: r.margin,
            theta: None,
            verdict: r.verdict,
            is_lower_bound: r.is_lower_bound,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOutcome {
    Violated,
    PassedAtResolution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeWitness {
    pub z: Vec<f64>,
    pub n_vec: Vec<f64>,
    pub support: Vec<usize>,
    /// `J(u_T) − J(u_{T^c})` for `u = z + n_vec`; non-negative.
    pub deficit: f64,
}

/// Which robust set a passing probe is read as certifying. A pass at `d`
/// shows `ν ∈ Ω̂_d`, which sits between `d`-interior and
/// `d/(1+d)`-interior of the ERC set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustSet {
    OmegaHat,
    DInterior,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessProbe {
    pub d: f64,
    pub outcome: ProbeOutcome,
    pub violation: Option<ProbeWitness>,
    pub search_budget: usize,
    pub evaluations: usize,
    /// Largest relative deficit seen; negative on a pass.
    pub best_relative_deficit: f64,
}

impl RobustnessProbe {
    pub fn passed(&self) -> bool {
        self.outcome == ProbeOutcome::PassedAtResolution
    }

    /// Interior radius a pass guarantees: `d/(1+d)` when read as `Ω̂_d`
    /// membership, `d` under the `d`-interior reading.
    pub fn implied_interior_radius(&self, convention: RobustSet) -> Option<f64> {
        if !self.passed() {
            return None;
        }
        Some(match convention {
            RobustSet::OmegaHat => self.d / (1.0 + self.d),
            RobustSet::DInterior => self.d,
        })
    }
}

/// Searches for `z ∈ ν∖0`, `‖n‖ < d‖z‖`, `|T| ≤ k` with
/// `J(z_T + n_T) ≥ J(z_{T^c} + n_{T^c})`. A `violated` outcome is checked by
/// direct evaluation; a pass only means nothing was found within `budget`.
pub fn rrc_probe(
    nu: &Subspace,
    j: &CostFunction,
    k: usize,
    d: f64,
    budget: usize,
    opts: &SearchOptions,
) -> Result<RobustnessProbe> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::param("d", format!("{d} must be positive and finite")));
    }
    if budget == 0 {
        return Err(Error::BudgetExhausted);
    }
    check_inputs(nu, j, k, opts, "rrc_probe")?;
    let measure = j.measure();
    let homogeneous = measure.is_homogeneous();
    let n = nu.ambient_dim();
    let l = nu.dim();
    let r = d * (1.0 - tolerance::OPEN_BALL_SHRINK);
    let scales = log_scales();
    let (s_lo, s_hi) = (scales[0], scales[scales.len() - 1]);
    let evals = AtomicUsize::new(0);

    // layout: w (l) | v (n) | ln t (non-homogeneous only)
    let dim = l + n + usize::from(!homogeneous);
    let split_of = |p: &[f64]| {
        let z = nu.point(&p[..l]);
        let t = if homogeneous { 1.0 } else { p[l + n].exp() };
        let u: Vec<f64> = z.iter().zip(&p[l..l + n]).map(|(a, b)| t * (a + r * b)).collect();
        j.top_split(&u, k)
    };
    let objective = |p: &[f64]| {
        evals.fetch_add(1, Ordering::Relaxed);
        split_of(p).relative_deficit()
    };
    let project = |p: &mut [f64]| {
        project_unit(&mut p[..l]);
        let vn = norm(&p[l..l + n]);
        if vn > 1.0 {
            p[l..l + n].iter_mut().for_each(|v| *v /= vn);
        }
        if !homogeneous {
            p[l + n] = p[l + n].clamp(s_lo, s_hi);
        }
    };
    let with_best_scale = |mut p: Vec<f64>| -> (Vec<f64>, f64) {
        project(&mut p);
        if homogeneous {
            let v = objective(&p);
            return (p, v);
        }
        let (s, v, _) = grid_then_golden(
            |s| {
                let mut q = p.clone();
                q[l + n] = s.clamp(s_lo, s_hi);
                objective(&q)
            },
            &scales,
            opts.golden_iters,
        );
        p[l + n] = s.clamp(s_lo, s_hi);
        (p, v)
    };

    // directions of ν that already come close to failing the unperturbed NSP
    let base_opts = SearchOptions { budget: opts.budget.min(budget), ..*opts };
    let scale_obj = |w: &[f64]| {
        let z = nu.point(w);
        scale_sup(measure, &scales, opts.golden_iters, |t| {
            evals.fetch_add(1, Ordering::Relaxed);
            let u: Vec<f64> = z.iter().map(|v| v * t).collect();
            j.top_split(&u, k).relative_deficit()
        })
        .1
    };
    let (cands, _) = sphere_search(nu, &scale_obj, measure.power() != Some(1.0), &base_opts);
    let mut directions: Vec<Vec<f64>> = cands.iter().take(4).map(|c| c.w.clone()).collect();
    let mut seed_rng = rng::stream(opts.seed, u64::MAX - 1);
    for _ in 0..2 {
        let mut w = gaussian_vec(&mut seed_rng, l);
        project_unit(&mut w);
        directions.push(w);
    }

    let mut seeds: Vec<(Vec<f64>, f64)> = Vec::new();
    for w in &directions {
        let z = nu.point(w);
        let split = j.top_split(&z, k);
        let mut on_mask = vec![false; n];
        split.support.iter().for_each(|&i| on_mask[i] = true);
        let off: Vec<f64> = (0..n).map(|i| if on_mask[i] { 0.0 } else { z[i] }).collect();
        let on: Vec<f64> = (0..n).map(|i| if on_mask[i] { z[i] } else { 0.0 }).collect();
        let mut vs: Vec<Vec<f64>> = vec![vec![0.0; n]];
        let off_norm = norm(&off);
        if off_norm > 0.0 {
            let c = (1.0 / off_norm).min(1.0 / r);
            vs.push(off.iter().map(|v| -v * c).collect());
        }
        let on_norm = norm(&on);
        if on_norm > 0.0 {
            vs.push(on.iter().map(|v| v / on_norm).collect());
        }
        for i in (0..n).filter(|&i| !on_mask[i] && z[i] != 0.0) {
            let mut v = vec![0.0; n];
            v[i] = -z[i].signum() * (z[i].abs() / r).min(1.0);
            vs.push(v);
        }
        for v in vs {
            let mut p = Vec::with_capacity(dim);
            p.extend_from_slice(w);
            p.extend(v);
            if !homogeneous {
                p.push(0.0);
            }
            seeds.push(with_best_scale(p));
        }
    }
    seeds.sort_by(|a, b| b.1.total_cmp(&a.1));

    let finish = |p: &[f64], best: f64, evaluations: usize| -> RobustnessProbe {
        let z = nu.point(&p[..l]);
        let t = if homogeneous { 1.0 } else { p[l + n].exp() };
        let z: Vec<f64> = z.iter().map(|v| v * t).collect();
        let n_vec: Vec<f64> = p[l..l + n].iter().map(|v| v * r * t).collect();
        let u: Vec<f64> = z.iter().zip(&n_vec).map(|(a, b)| a + b).collect();
        let split = j.top_split(&u, k);
        let sound = split.deficit() >= 0.0 && norm(&n_vec) < d * norm(&z);
        RobustnessProbe {
            d,
            outcome: if sound { ProbeOutcome::Violated } else { ProbeOutcome::PassedAtResolution },
            violation: sound.then(|| ProbeWitness { z, n_vec, deficit: split.deficit(), support: split.support }),
            search_budget: budget,
            evaluations,
            best_relative_deficit: best,
        }
    };

    let (mut best_p, mut best_v) = seeds[0].clone();
    if split_of(&best_p).deficit() >= 0.0 {
        return Ok(finish(&best_p, best_v, evals.load(Ordering::Relaxed)));
    }
    let starts = opts.starts.clamp(1, 8).min(seeds.len());
    let used = evals.load(Ordering::Relaxed);
    let per_start = (budget.saturating_sub(used) / starts).max(2 * dim + 1);
    let search = PatternSearch { max_evals: per_start, ..PatternSearch::default() };
    for (i, (p, _)) in seeds.iter().take(starts).enumerate() {
        let mut r = rng::stream(opts.seed, i as u64);
        let res = search.maximize(p.clone(), objective, project, &mut r);
        if res.value > best_v {
            best_v = res.value;
            best_p = res.x;
        }
        if split_of(&best_p).deficit() >= 0.0 || evals.load(Ordering::Relaxed) >= budget {
            break;
        }
    }
    Ok(finish(&best_p, best_v, evals.into_inner()))
}

/// `2(1+d)/(d σ_min)`, the constant certified by a pass at radius `d`.
pub fn robustness_constant(d: f64, sigma_min: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::param("d", format!("{d} must be positive")));
    }
    if !(sigma_min > 0.0) {
        return Err(Error::param("sigma_min", format!("{sigma_min} must be positive")));
    }
    Ok(2.0 * (1.0 + d) / (d * sigma_min))
}

/// `2(1−2d)/(d σ_max)` for `0 < d < 1/2`.
pub fn converse_constant(d: f64, sigma_max: f64) -> Result<f64> {
    if !(d > 0.0 && d < 0.5) {
        return Err(Error::param("d", format!("{d} not in (0, 1/2)")));
    }
    if !(sigma_max > 0.0) {
        return Err(Error::param("sigma_max", format!("{sigma_max} must be positive")));
    }
    Ok(2.0 * (1.0 - 2.0 * d) / (d * sigma_max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ce1Class {
    Interior,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ce1Membership {
    pub class: Ce1Class,
    pub in_omega: bool,
    pub in_interior: bool,
    /// `(Σ|x_i| − 2 max|x_i|)/Σ|x_i|`.
    pub margin: f64,
}

/// Closed-form classification of a line in `R³` for `F(t) = t + 1 − e^{−t}`,
/// `k = 1`: in the ERC set iff `2 max|x_i| ≤ Σ|x_i|`, interior iff strict.
pub fn ce1_membership(nu: &Subspace) -> Result<Ce1Membership> {
    if nu.ambient_dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: nu.ambient_dim() });
    }
    if nu.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: nu.dim() });
    }
    let x: Vec<f64> = nu.basis().column(0).iter().map(|v| v.abs()).collect();
    let sum: f64 = x.iter().sum();
    let max = x.iter().copied().fold(0.0, f64::max);
    let gap = sum - 2.0 * max;
    let tol = 1e-12 * sum;
    let class = if gap > tol {
        Ce1Class::Interior
    } else if gap >= -tol {
        Ce1Class::Boundary
    } else {
        Ce1Class::Outside
    };
    Ok(Ce1Membership {
        class,
        in_omega: class != Ce1Class::Outside,
        in_interior: class == Ce1Class::Interior,
        margin: gap / sum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    A,
    B,
    Inconclusive,
}

/// Classification of `(a, b) ∈ [0, a_max] × [0, b_max]` by whether
/// `F(x) + F(y) ≤ F(ax + by)` for some `x, y ≥ 0` not both zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMap {
    pub measure: String,
    /// Values of `a`, one per column.
    pub a_values: Vec<f64>,
    /// Values of `b`, one per row.
    pub b_values: Vec<f64>,
    /// Row-major, `cells[i * cols + j]` is the point `(a_j, b_i)`.
    pub cells: Vec<Region>,
    /// Best relative excess found per cell.
    pub excess: Vec<f64>,
    /// Pairs of grid neighbours where `A` is not closed upward.
    pub upward_violations: usize,
    /// Grid rectangles with upper-right corner in `A` and lower-left in `B`.
    pub mixed_rectangles: usize,
    pub inconclusive: usize,
}

impl RegionMap {
    pub fn rows(&self) -> usize {
        self.b_values.len()
    }

    pub fn cols(&self) -> usize {
        self.a_values.len()
    }

    pub fn at(&self, i: usize, jj: usize) -> Region {
        self.cells[i * self.cols() + jj]
    }
}

/// Best relative excess `(F(ax+by) − F(x) − F(y))/(F(x) + F(y))` over
/// directions `(x, y)` in the closed quadrant and, for non-homogeneous `F`,
/// radii on the scale grid.
pub fn region_point(f: &SparsenessMeasure, a: f64, b: f64) -> (Region, f64) {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let rel = |phi: f64, r: f64| {
        let (x, y) = if phi <= 0.0 {
            (r, 0.0)
        } else if phi >= half_pi {
            (0.0, r)
        } else {
            (r * phi.cos(), r * phi.sin())
        };
        let base = f.eval(x) + f.eval(y);
        (f.eval(a * x + b * y) - base) / base
    };
    let radii: Vec<f64> = if f.is_homogeneous() {
        vec![0.0]
    } else {
        log_grid(tolerance::SCALE_MIN, tolerance::SCALE_MAX, 25).into_iter().map(f64::ln).collect()
    };
    let phis: Vec<f64> = (0..=16).map(|i| half_pi * i as f64 / 16.0).collect();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    let mut finite = true;
    for &s in &radii {
        for &phi in &phis {
            let v = rel(phi, s.exp());
            finite &= !v.is_nan();
            if v > best.0 {
                best = (v, phi, s);
            }
        }
    }
    let (_, phi0, s0) = best;
    let h = half_pi / 16.0;
    let (phi, v) = golden_max(|p| rel(p.clamp(0.0, half_pi), s0.exp()), (phi0 - h).max(0.0), (phi0 + h).min(half_pi), 40);
    if v > best.0 {
        best = (v, phi.clamp(0.0, half_pi), s0);
    }
    if radii.len() > 1 {
        let step = radii[1] - radii[0];
        let (s, v) = golden_max(|s| rel(best.1, s.exp()), best.2 - step, best.2 + step, 40);
        if v > best.0 {
            best = (v, best.1, s);
        }
    }
    if !finite {
        return (Region::Inconclusive, best.0);
    }
    if best.0 >= -tolerance::REGION_REL {
        (Region::A, best.0)
    } else {
        (Region::B, best.0)
    }
}

/// Maps regions A and B on a `rows × cols` grid over `[0, a_max] × [0, b_max]`
/// and checks that A is closed upward in both coordinates.
pub fn region_boundary_map(
    f: &SparsenessMeasure,
    rows: usize,
    cols: usize,
    a_max: f64,
    b_max: f64,
) -> Result<RegionMap> {
    if rows < 2 || cols < 2 {
        return Err(Error::param("grid", format!("need at least 2x2, got {rows}x{cols}")));
    }
    if !(a_max > 0.0 && b_max > 0.0 && a_max.is_finite() && b_max.is_finite()) {
        return Err(Error::param("domain", "bounds must be positive and finite"));
    }
    let a_values: Vec<f64> = (0..cols).map(|c| a_max * c as f64 / (cols - 1) as f64).collect();
    let b_values: Vec<f64> = (0..rows).map(|r| b_max * r as f64 / (rows - 1) as f64).collect();
    let points: Vec<(Region, f64)> = (0..rows * cols)
        .into_par_iter()
        .map(|idx| region_point(f, a_values[idx % cols], b_values[idx / cols]))
        .collect();
    let cells: Vec<Region> = points.iter().map(|p| p.0).collect();
    let excess: Vec<f64> = points.iter().map(|p| p.1).collect();
    let at = |i: usize, jj: usize| cells[i * cols + jj];
    let mut upward_violations = 0;
    let mut mixed_rectangles = 0;
    for i in 0..rows {
        for jj in 0..cols {
            if at(i, jj) == Region::A {
                if i + 1 < rows && at(i + 1, jj) != Region::A {
                    upward_violations += 1;
                }
                if jj + 1 < cols && at(i, jj + 1) != Region::A {
                    upward_violations += 1;
                }
            }
            if i + 1 < rows && jj + 1 < cols && at(i + 1, jj + 1) == Region::A && at(i, jj) == Region::B {
                mixed_rectangles += 1;
            }
        }
    }
    let inconclusive = cells.iter().filter(|c| **c == Region::Inconclusive).count();
    Ok(RegionMap {
        measure: f.to_string(),
        a_values,
        b_values,
        cells,
        excess,
        upward_violations,
        mixed_rectangles,
        inconclusive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspaces::{grassmann_distance, sample_haar};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn line(v: &[f64]) -> Subspace {
        Subspace::span(&[v]).unwrap()
    }

    fn cost(m: SparsenessMeasure, n: usize) -> CostFunction {
        CostFunction::new(m, n).unwrap()
    }

    /// Exhaustive oracle for a single direction: max over all `|T| ≤ k`.
    fn enumerate_ratio(z: &[f64], f: &SparsenessMeasure, k: usize) -> f64 {
        let mut best: f64 = 0.0;
        for t in crate::support::subsets_up_to(z.len(), k) {
            let on: f64 = t.iter().map(|&i| f.eval(z[i])).sum();
            let off: f64 = (0..z.len()).filter(|i| !t.contains(i)).map(|i| f.eval(z[i])).sum();
            best = best.max(on / off);
        }
        best
    }

    #[test]
    fn nsc_examples_l1() {
        let opts = SearchOptions::default();
        for (g, theta, t) in [([1.0, 1.0, 1.0], 0.5, None), ([1.0, 1.0, 2.0], 1.0, Some(2)), ([1.0, 2.0, 4.0], 4.0 / 3.0, Some(2))] {
            let r = nsc(&line(&g), &cost(SparsenessMeasure::l1(), 3), 1, &opts).unwrap();
            assert!((r.theta - theta).abs() < 1e-12, "{g:?}: {}", r.theta);
            assert_relative_eq!(r.theta, enumerate_ratio(&g, &SparsenessMeasure::l1(), 1), epsilon = 1e-12);
            assert_eq!(r.method, NscMethod::Exact1d);
            assert!(!r.is_lower_bound);
            if let Some(t) = t {
                assert_eq!(r.witness_t, vec![t]);
            }
            let on = cost(SparsenessMeasure::l1(), 3).eval(&r.witness_z, Some(&r.witness_t)).unwrap();
            let off = cost(SparsenessMeasure::l1(), 3).eval_complement(&r.witness_z, &r.witness_t).unwrap();
            assert_relative_eq!(on / off, r.theta, max_relative = 1e-9);
        }
    }

    #[test]
    fn nsc_matches_enumeration_oracle() {
        let f = SparsenessMeasure::lp(0.5).unwrap();
        let g = [0.3, -1.2, 0.7, 2.0, -0.1];
        for k in 1..4 {
            let r = nsc(&line(&g), &cost(f.clone(), 5), k, &SearchOptions::default()).unwrap();
            let oracle = enumerate_ratio(&g, &f, k);
            assert_relative_eq!(r.theta, oracle, max_relative = 1e-12);
        }
    }

    #[test]
    fn nsc_infinite_when_sparse_vector_in_null_space() {
        let r = nsc(&line(&[0.0, 0.0, 1.0]), &cost(SparsenessMeasure::l1(), 3), 1, &SearchOptions::default()).unwrap();
        assert_eq!(r.theta, f64::INFINITY);
    }

    #[test]
    fn nsp_examples() {
        let opts = SearchOptions::default();
        let r = nsp_check(&line(&[1.0, 1.0, 1.0]), &cost(SparsenessMeasure::l1(), 3), 1, &opts).unwrap();
        assert_eq!(r.verdict, NspVerdict::HoldsStrict);
        // relative deficit (1 − 2)/3
        assert_relative_eq!(r.margin, 1.0 / 3.0, epsilon = 1e-12);
        let r = nsp_check(&line(&[1.0, 1.0, 2.0]), &cost(SparsenessMeasure::l1(), 3), 1, &opts).unwrap();
        assert_eq!(r.verdict, NspVerdict::Boundary);
        assert_eq!(r.witness_t, vec![2]);
        let r = nsp_check(&line(&[1.0, 1.0, 2.0]), &cost(SparsenessMeasure::exp_ce1(), 3), 1, &opts).unwrap();
        assert_eq!(r.verdict, NspVerdict::HoldsStrict);
        assert!(r.margin > 0.0);
        let r = nsp_check(&line(&[1.0, 1.0, 3.0]), &cost(SparsenessMeasure::exp_ce1(), 3), 1, &opts).unwrap();
        assert_eq!(r.verdict, NspVerdict::Fails);
        assert!(r.worst_deficit >= 0.0);
    }

    #[test]
    fn input_errors() {
        let nu = line(&[1.0, 1.0, 1.0]);
        let opts = SearchOptions::default();
        assert!(nsc(&nu, &cost(SparsenessMeasure::l1(), 3), 3, &opts).is_err());
        assert!(nsc(&nu, &cost(SparsenessMeasure::l1(), 3), 0, &opts).is_err());
        assert!(nsc(&nu, &cost(SparsenessMeasure::l1(), 4), 1, &opts).is_err());
        assert!(matches!(nsc(&nu, &cost(SparsenessMeasure::l0(), 3), 1, &opts), Err(Error::Unsupported { .. })));
        let zero = SearchOptions { budget: 0, ..opts };
        assert!(matches!(nsp_check(&nu, &cost(SparsenessMeasure::l1(), 3), 1, &zero), Err(Error::BudgetExhausted)));
        assert!(rrc_probe(&nu, &cost(SparsenessMeasure::l1(), 3), 1, 0.0, 10, &opts).is_err());
        assert!(rrc_probe(&nu, &cost(SparsenessMeasure::l1(), 3), 1, 0.1, 0, &opts).is_err());
    }

    #[test]
    fn erc_examples() {
        let opts = SearchOptions::default();
        let half = SparsenessMeasure::lp(0.5).unwrap();
        let r = erc_member(&line(&[1.0, 1.0, 1.0]), &cost(half, 3), 1, &opts).unwrap();
        assert!(r.member);
        assert_relative_eq!(r.theta.unwrap(), 0.5, epsilon = 1e-12);
        let r = erc_member(&line(&[1.0, 1.0, 2.0]), &cost(SparsenessMeasure::l1(), 3), 1, &opts).unwrap();
        assert!(!r.member);
        let r = erc_member(&line(&[1.0, 1.0, 2.0]), &cost(SparsenessMeasure::exp_ce1(), 3), 1, &opts).unwrap();
        assert!(r.member);
    }

    #[test]
    fn probe_examples() {
        let opts = SearchOptions::default();
        let ce1 = cost(SparsenessMeasure::exp_ce1(), 3);
        for d in [0.1, 0.01] {
            let p = rrc_probe(&line(&[1.0, 1.0, 2.0]), &ce1, 1, d, 50_000, &opts).unwrap();
            assert_eq!(p.outcome, ProbeOutcome::Violated, "d={d}");
            let w = p.violation.unwrap();
            assert!(norm(&w.n_vec) < d * norm(&w.z));
            assert!(w.deficit >= 0.0);
            assert_eq!(w.support, vec![2]);
        }
        let p = rrc_probe(&line(&[1.0, 1.0, 1.0]), &cost(SparsenessMeasure::l1(), 3), 1, 0.05, 50_000, &opts).unwrap();
        assert!(p.passed());
        assert!(p.best_relative_deficit < 0.0);
        let p = rrc_probe(&line(&[1.0, 1.0, 1.0]), &cost(SparsenessMeasure::l1(), 3), 1, 1.0, 50_000, &opts).unwrap();
        assert_eq!(p.outcome, ProbeOutcome::Violated);
        let p = rrc_probe(&line(&[1.0, 1.0, 2.0]), &cost(SparsenessMeasure::l1(), 3), 1, 1e-3, 50_000, &opts).unwrap();
        assert_eq!(p.outcome, ProbeOutcome::Violated);
    }

    #[test]
    fn probe_interior_radius_convention() {
        let p = rrc_probe(&line(&[1.0, 1.0, 1.0]), &cost(SparsenessMeasure::l1(), 3), 1, 0.05, 20_000, &SearchOptions::default()).unwrap();
        assert_relative_eq!(p.implied_interior_radius(RobustSet::OmegaHat).unwrap(), 0.05 / 1.05);
        assert_eq!(p.implied_interior_radius(RobustSet::DInterior), Some(0.05));
    }

    #[test]
    fn constant_examples() {
        assert_relative_eq!(robustness_constant(1.0, 1.0).unwrap(), 4.0);
        assert_relative_eq!(robustness_constant(0.1, 0.5).unwrap(), 44.0, max_relative = 1e-14);
        assert_relative_eq!(converse_constant(0.25, 2.0).unwrap(), 2.0);
        assert!(robustness_constant(0.0, 1.0).is_err());
        assert!(converse_constant(0.5, 1.0).is_err());
        assert!(converse_constant(0.1, 0.0).is_err());
    }

    #[test]
    fn ce1_examples() {
        assert_eq!(ce1_membership(&line(&[1.0, 1.0, 2.0])).unwrap().class, Ce1Class::Boundary);
        let m = ce1_membership(&line(&[1.0, 1.0, 1.0])).unwrap();
        assert!(m.in_interior && m.in_omega);
        let m = ce1_membership(&line(&[1.0, 1.0, 3.0])).unwrap();
        assert_eq!(m.class, Ce1Class::Outside);
        assert!(!m.in_omega);
        assert!(ce1_membership(&line(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn region_examples() {
        let l1 = SparsenessMeasure::l1();
        assert_eq!(region_point(&l1, 0.0, 0.0).0, Region::B);
        assert_eq!(region_point(&l1, 1.0, 0.0).0, Region::A);
        assert_eq!(region_point(&l1, 0.3, 1.0).0, Region::A);
        assert_eq!(region_point(&l1, 0.999, 0.999).0, Region::B);
        let map = region_boundary_map(&l1, 21, 21, 2.0, 2.0).unwrap();
        for i in 0..21 {
            for jj in 0..21 {
                let expect = map.a_values[jj] >= 1.0 || map.b_values[i] >= 1.0;
                assert_eq!(map.at(i, jj) == Region::A, expect, "({}, {})", map.a_values[jj], map.b_values[i]);
            }
        }
        assert_eq!(map.upward_violations, 0);
        assert!(map.mixed_rectangles <= 42);
        assert!(region_boundary_map(&l1, 1, 5, 1.0, 1.0).is_err());
    }

    #[test]
    fn mcp_region_a_reaches_below_the_unit_lines() {
        // F saturates at 1, so F(x) ≤ F(ax) as soon as ax ≥ 1/α
        let mcp = SparsenessMeasure::mcp_zap(2.0).unwrap();
        assert_eq!(region_point(&mcp, 0.5, 0.0).0, Region::A);
        assert_eq!(region_point(&mcp, 0.0, 0.0).0, Region::B);
        let map = region_boundary_map(&mcp, 10, 10, 1.0, 1.0).unwrap();
        assert_eq!(map.upward_violations, 0);
        let inside = (0..10).flat_map(|i| (0..10).map(move |jj| (i, jj))).filter(|&(i, jj)| {
            map.at(i, jj) == Region::A && map.a_values[jj] < 1.0 && map.b_values[i] < 1.0
        });
        assert!(inside.count() > 0);
    }

    #[test]
    fn l2_breakpoints_give_exact_theta() {
        // ν = span{(1,0,1,0), (0,1,0,1)}: θ_ℓ1 for k=1 is attained on a generator
        let nu = Subspace::span(&[&[1.0, 0.0, 1.0, 0.0], &[0.0, 1.0, 0.0, 1.0]]).unwrap();
        let r = nsc(&nu, &cost(SparsenessMeasure::l1(), 4), 1, &SearchOptions::default()).unwrap();
        assert_eq!(r.method, NscMethod::SphereEnum);
        assert!(!r.is_lower_bound);
        assert_relative_eq!(r.theta, 1.0, epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn theta_invariant_under_basis_change(seed in any::<u64>(), angle in 0.0f64..6.28) {
            let mut r = rng::seeded(seed);
            let nu = sample_haar(5, 2, &mut r).unwrap();
            let rot = nalgebra::DMatrix::from_row_slice(2, 2, &[angle.cos(), -angle.sin(), angle.sin(), angle.cos()]);
            let other = Subspace::from_orthonormal(nu.basis() * rot).unwrap();
            prop_assert!(grassmann_distance(&nu, &other).unwrap() < 1e-12);
            let j = cost(SparsenessMeasure::l1(), 5);
            let opts = SearchOptions::default();
            let a = nsc(&nu, &j, 1, &opts).unwrap().theta;
            let b = nsc(&other, &j, 1, &opts).unwrap().theta;
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{a} vs {b}");
        }

        #[test]
        fn l1_membership_implies_half_power_membership(seed in any::<u64>()) {
            let nu = sample_haar(8, 1, &mut rng::seeded(seed)).unwrap();
            let opts = SearchOptions::default();
            let t1 = nsc(&nu, &cost(SparsenessMeasure::l1(), 8), 2, &opts).unwrap().theta;
            let th = nsc(&nu, &cost(SparsenessMeasure::lp(0.5).unwrap(), 8), 2, &opts).unwrap().theta;
            prop_assert!(!(t1 < 1.0) || th < 1.0);
        }

        #[test]
        fn probe_violations_are_sound_and_erc_failures_are_violated(seed in any::<u64>(), d in 0.001f64..0.5) {
            let nu = sample_haar(4, 1, &mut rng::seeded(seed)).unwrap();
            let j = cost(SparsenessMeasure::l1(), 4);
            let opts = SearchOptions { seed, ..SearchOptions::default() };
            let erc = erc_member(&nu, &j, 1, &opts).unwrap();
            let p = rrc_probe(&nu, &j, 1, d, 5_000, &opts).unwrap();
            if let Some(w) = &p.violation {
                prop_assert!(norm(&w.n_vec) < d * norm(&w.z));
                let u: Vec<f64> = w.z.iter().zip(&w.n_vec).map(|(a, b)| a + b).collect();
                let on = j.eval(&u, Some(&w.support)).unwrap();
                let off = j.eval_complement(&u, &w.support).unwrap();
                prop_assert!(on >= off);
                prop_assert!(nu.residual(&w.z).unwrap() < 1e-10 * norm(&w.z).max(1.0));
            }
            if !erc.member {
                prop_assert_eq!(p.outcome, ProbeOutcome::Violated);
            }
        }

        #[test]
        fn ce1_closed_form_agrees_with_nsp_check(seed in any::<u64>()) {
            let nu = sample_haar(3, 1, &mut rng::seeded(seed)).unwrap();
            let cf = ce1_membership(&nu).unwrap();
            prop_assume!(cf.margin.abs() > 1e-6);
            let r = nsp_check(&nu, &cost(SparsenessMeasure::exp_ce1(), 3), 1, &SearchOptions::default()).unwrap();
            prop_assert_eq!(r.verdict == NspVerdict::HoldsStrict, cf.in_interior);
        }
    }
}
