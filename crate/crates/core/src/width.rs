//! Gaussian widths of the cones `K(n,k)` and `K_d(n,k)`, escape-through-the-mesh
//! bounds and the rate/robustness tradeoff. Logarithms are natural.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::measures::CostFunction;
use crate::rng;
use crate::search::{gaussian_vec, grid_then_golden, log_grid, norm, normalize, PatternSearch};
use crate::support::{binomial, for_each_subset};
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSearch {
    /// Exact per-support maximization (`ℓ1`).
    EnumerateSupports,
    /// Local search from feasible starts; per-draw values are lower bounds.
    Multistart,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub inner_search: InnerSearch,
    pub is_lower_bound: bool,
    /// Sample mean of `‖g‖`.
    pub norm_mean: f64,
    /// Draws where `sup_{K_d} gᵀx ≤ d‖g‖ + sup_K gᵀx` failed (extended width only).
    pub bound_violations: usize,
}

/// `E‖g‖` for `g ~ N(0, I_n)`: `√2 Γ((n+1)/2)/Γ(n/2)`.
pub fn chi_mean(n: usize) -> f64 {
    let n = n as f64;
    (2f64.sqrt().ln() + ln_gamma((n + 1.0) / 2.0) - ln_gamma(n / 2.0)).exp()
}

/// `sup gᵀx` over unit `x` with `sign(x) = sign(g)` and `‖x_T‖₁ ≥ ‖x_{T^c}‖₁`:
/// the norm of the projection of `|g|` onto that polyhedral cone, which is
/// `(|g_i| + λ)` on `T` and `(|g_i| − λ)_+` off it for the smallest `λ ≥ 0`
/// balancing the two ℓ1 masses.
fn l1_support_sup(abs_g: &[f64], on: &[bool]) -> f64 {
    let mass = |lam: f64| -> f64 {
        abs_g
            .iter()
            .zip(on)
            .map(|(&g, &t)| if t { g + lam } else { -(g - lam).max(0.0) })
            .sum()
    };
    let value = |lam: f64| -> f64 {
        abs_g
            .iter()
            .zip(on)
            .map(|(&g, &t)| if t { (g + lam).powi(2) } else { (g - lam).max(0.0).powi(2) })
            .sum::<f64>()
            .sqrt()
    };
    if mass(0.0) >= 0.0 {
        return value(0.0);
    }
    let mut hi = abs_g.iter().copied().fold(0.0, f64::max).max(1e-300);
    while mass(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    value(hi)
}

/// `sup_{x ∈ K_ℓ1(n,k)} gᵀx`. Moving a larger `|g_i|` into `T` never hurts,
/// so the top-`k` support is optimal; smaller families are enumerated
/// outright as a cross-check.
pub fn l1_cone_sup(g: &[f64], k: usize) -> f64 {
    let n = g.len();
    let abs_g: Vec<f64> = g.iter().map(|v| v.abs()).collect();
    if k >= n {
        return norm(g);
    }
    if binomial(n, k) <= 64 {
        let mut best: f64 = 0.0;
        let mut on = vec![false; n];
        for_each_subset(n, k, |s| {
            on.iter_mut().for_each(|v| *v = false);
            s.iter().for_each(|&i| on[i] = true);
            best = best.max(l1_support_sup(&abs_g, &on));
            true
        });
        return best;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| abs_g[b].total_cmp(&abs_g[a]));
    let mut on = vec![false; n];
    order[..k].iter().for_each(|&i| on[i] = true);
    l1_support_sup(&abs_g, &on)
}

/// Whether the unit vector `x` lies in `K_J(n,k)`: some scale `t` gives
/// `J(tx_T) ≥ J(tx_{T^c})`.
fn in_cone(cost: &CostFunction, x: &[f64], k: usize, scales: &[f64]) -> bool {
    let rel = |t: f64| {
        let u: Vec<f64> = x.iter().map(|v| v * t).collect();
        cost.top_split(&u, k).relative_deficit()
    };
    if cost.measure().is_homogeneous() {
        return rel(1.0) >= 0.0;
    }
    let (lo, hi) = (scales[0], scales[scales.len() - 1]);
    grid_then_golden(|s| rel(s.clamp(lo, hi).exp()), scales, 30).1 >= 0.0
}

/// Lower bound on `sup_{x ∈ K_J} gᵀx` by compass search from feasible starts.
fn general_cone_sup(cost: &CostFunction, g: &[f64], k: usize, scales: &[f64], seed: u64) -> f64 {
    let n = g.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g[b].abs().total_cmp(&g[a].abs()));
    // a vector supported on T is always in the cone
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let mut top = vec![0.0; n];
    order[..k.min(n)].iter().for_each(|&i| top[i] = g[i]);
    normalize(&mut top);
    starts.push(top);
    let mut single = vec![0.0; n];
    single[order[0]] = g[order[0]].signum();
    starts.push(single);
    let mut whole = g.to_vec();
    normalize(&mut whole);
    if in_cone(cost, &whole, k, scales) {
        return norm(g);
    }
    let dot = |x: &[f64]| x.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
    let f = |x: &[f64]| if in_cone(cost, x, k, scales) { dot(x) } else { f64::NEG_INFINITY };
    let search = PatternSearch { initial_step: 0.2, min_step: 1e-7, max_evals: 600, random_directions: 2 };
    let mut best: f64 = 0.0;
    for (i, x) in starts.into_iter().enumerate() {
        let mut r = rng::stream(seed, i as u64);
        let res = search.maximize(x, f, |v: &mut [f64]| normalize(v), &mut r);
        best = best.max(res.value);
    }
    best
}

fn validate(cost: &CostFunction, n: usize, k: usize, draws: usize) -> Result<()> {
    if draws == 0 {
        return Err(Error::param("draws", "must be at least 1"));
    }
    if cost.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: cost.dim() });
    }
    if k == 0 || k > n {
        return Err(Error::param("k", format!("need 1 ≤ k ≤ n, got k={k}, n={n}")));
    }
    cost.measure().require_continuous("width")
}

/// Per draw `(‖g‖, sup_K gᵀx)`, using stream `i` of `seed` for draw `i`.
fn cone_sups(cost: &CostFunction, n: usize, k: usize, draws: usize, seed: u64) -> (Vec<(f64, f64)>, InnerSearch) {
    let is_l1 = cost.measure().power() == Some(1.0);
    let scales: Vec<f64> = log_grid(tolerance::SCALE_MIN, tolerance::SCALE_MAX, tolerance::SCALE_POINTS)
        .into_iter()
        .map(f64::ln)
        .collect();
    let out = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let g = gaussian_vec(&mut r, n);
            let sup = if is_l1 { l1_cone_sup(&g, k) } else { general_cone_sup(cost, &g, k, &scales, seed ^ i as u64) };
            (norm(&g), sup)
        })
        .collect();
    (out, if is_l1 { InnerSearch::EnumerateSupports } else { InnerSearch::Multistart })
}

fn summarize(values: &[f64], norms: &[f64], inner: InnerSearch, bound_violations: usize) -> WidthEstimate {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0)
    } else {
        0.0
    };
    WidthEstimate {
        mean,
        std_error: (var / count).sqrt(),
        samples: values.len(),
        inner_search: inner,
        is_lower_bound: inner == InnerSearch::Multistart,
        norm_mean: norms.iter().sum::<f64>() / count,
        bound_violations,
    }
}

/// Monte Carlo estimate of `w(K_J(n,k)) = E sup_{x ∈ K} gᵀx`.
pub fn width_mc(cost: &CostFunction, n: usize, k: usize, draws: usize, seed: u64) -> Result<WidthEstimate> {
    validate(cost, n, k, draws)?;
    let (pairs, inner) = cone_sups(cost, n, k, draws, seed);
    let values: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let norms: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    Ok(summarize(&values, &norms, inner, 0))
}

/// `sup gᵀx` over unit `x` within distance `d` of the cone, given
/// `base = sup_K gᵀx`. For a cone the distance from a unit vector is the
/// sine of its angle to the cone, so the optimum turns the best cone
/// direction towards `g` by `asin d`.
pub fn extended_sup(g_norm: f64, base: f64, d: f64) -> f64 {
    if d >= 1.0 || g_norm == 0.0 {
        return g_norm;
    }
    let angle = (base / g_norm).clamp(-1.0, 1.0).acos();
    g_norm * (angle - d.asin()).max(0.0).cos()
}

/// Monte Carlo estimate of `w(K_d(n,k))`, drawn on the same streams as
/// [`width_mc`] with the same seed so the two are paired draw by draw.
pub fn width_extended(cost: &CostFunction, n: usize, k: usize, d: f64, draws: usize, seed: u64) -> Result<WidthEstimate> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::param("d", format!("{d} must be finite and non-negative")));
    }
    validate(cost, n, k, draws)?;
    let (pairs, inner) = cone_sups(cost, n, k, draws, seed);
    let mut violations = 0;
    let values: Vec<f64> = pairs
        .iter()
        .map(|&(gn, base)| {
            let v = extended_sup(gn, base, d);
            if v > d * gn + base + 1e-12 * gn {
                violations += 1;
            }
            v
        })
        .collect();
    let norms: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    Ok(summarize(&values, &norms, inner, violations))
}

/// `ζ(n,k) = exp(ln(1 + 2 ln(en/k))/(4 ln(en/k)) + 1/(24 k² ln(en/k)))`.
pub fn zeta(n: usize, k: usize) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::param("k", format!("need 1 ≤ k ≤ n, got k={k}, n={n}")));
    }
    let (n, k) = (n as f64, k as f64);
    let l = 1.0 + (n / k).ln();
    Ok(((1.0 + 2.0 * l).ln() / (4.0 * l) + 1.0 / (24.0 * k * k * l)).exp())
}

/// `2√(k(3 + 2 ln(n/k))) · ζ(n,k)`, an upper bound on `w(K_ℓ1(n,k))`.
pub fn rv_bound(n: usize, k: usize) -> Result<f64> {
    let z = zeta(n, k)?;
    let (nf, kf) = (n as f64, k as f64);
    Ok(2.0 * (kf * (3.0 + 2.0 * (nf / kf).ln())).sqrt() * z)
}

/// Whether the escape condition `w < √m` holds.
pub fn gordon_applies(w: f64, m: usize) -> bool {
    w < (m as f64).sqrt()
}

/// `max(0, 1 − 2.5 exp(−(m/√(m+1) − w)²/18))`, or `0` when `w ≥ √m`.
pub fn gordon_bound(w: f64, m: usize) -> f64 {
    if !gordon_applies(w, m) {
        return 0.0;
    }
    let mf = m as f64;
    let gap = mf / (mf + 1.0).sqrt() - w;
    (1.0 - 2.5 * (-gap * gap / 18.0).exp()).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthSource {
    RvBound,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaHatBound {
    pub probability: f64,
    pub width: f64,
    pub source: WidthSource,
    /// `w + d√n`.
    pub effective_width: f64,
    /// The condition `w < √m − d√n` failed, so the bound is `0`.
    pub vacuous: bool,
}

/// Lower bound on the Haar measure of the robust set `Ω̂_d` for `m`
/// measurements. Uses the Monte Carlo width when given and the analytic
/// bound for `ℓ1` otherwise.
pub fn omega_hat_bound(cost: &CostFunction, m: usize, k: usize, d: f64, width: Option<&WidthEstimate>) -> Result<OmegaHatBound> {
    let n = cost.dim();
    if m == 0 || m >= n {
        return Err(Error::param("m", format!("need 1 ≤ m < n, got m={m}, n={n}")));
    }
    if !(d >= 0.0) {
        return Err(Error::param("d", format!("{d} must be non-negative")));
    }
    let (w, source) = match width {
        Some(est) => (est.mean, WidthSource::MonteCarlo),
        None if cost.measure().power() == Some(1.0) => (rv_bound(n, k)?, WidthSource::RvBound),
        None => return Err(Error::Unsupported { op: "omega_hat_bound without a width estimate", measure: cost.measure().to_string() }),
    };
    let effective = w + d * (n as f64).sqrt();
    let vacuous = !gordon_applies(effective, m);
    Ok(OmegaHatBound { probability: gordon_bound(effective, m), width: w, source, effective_width: effective, vacuous })
}

/// `2√(3 + 2 ln β) exp(ln(1 + 2 ln(eβ))/(4 ln(eβ)))`, the limit of
/// `rv_bound(βk, k)/√k`.
fn rv_rate(beta: f64) -> f64 {
    let l = 1.0 + beta.ln();
    2.0 * (3.0 + 2.0 * beta.ln()).sqrt() * ((1.0 + 2.0 * l).ln() / (4.0 * l)).exp()
}

/// `δ(β,γ) = (√γ − 2√(3 + 2 ln β) exp(ln(1 + 2 ln(eβ))/(4 ln(eβ))))/√β`.
pub fn delta(beta: f64, gamma: f64) -> Result<f64> {
    if !(beta > gamma && gamma >= 1.0) || !beta.is_finite() {
        return Err(Error::param("beta", format!("need β > γ ≥ 1, got β={beta}, γ={gamma}")));
    }
    Ok((gamma.sqrt() - rv_rate(beta)) / beta.sqrt())
}

/// Smallest `γ` with `δ(β,γ) > 0`:
/// `4(3 + 2 ln β) exp(ln(1 + 2 ln(eβ))/(2 ln(eβ)))`.
pub fn delta_threshold(beta: f64) -> f64 {
    let l = 1.0 + beta.ln();
    4.0 * (3.0 + 2.0 * beta.ln()) * ((1.0 + 2.0 * l).ln() / (2.0 * l)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// `2(1+δ)/(δ(1 − √(γ/β)))` when `δ > 0`.
    pub c: Option<f64>,
    /// `(1 − √(1/γ))^{−1}`.
    pub oracle_c: Option<f64>,
    /// Escape bound on `μ(Ω̂_d)` at `n = ⌊βk⌋`, `m = ⌈γk⌉`, `d = δ/2`
    /// (`d = 0` when `δ ≤ 0`).
    pub gordon_bound: f64,
    pub gordon_k: usize,
    pub gordon_d: f64,
}

/// Evaluates the rate/robustness tradeoff at `(β, γ)`; the Gordon column
/// is computed at sparsity `k`.
pub fn tradeoff(beta: f64, gamma: f64, use_oracle_comparison: bool, k: usize) -> Result<TradeoffPoint> {
    let delta = delta(beta, gamma)?;
    if k == 0 {
        return Err(Error::param("k", "must be positive"));
    }
    let c = (delta > 0.0).then(|| 2.0 * (1.0 + delta) / (delta * (1.0 - (gamma / beta).sqrt())));
    let oracle_c = use_oracle_comparison.then(|| 1.0 / (1.0 - (1.0 / gamma).sqrt()));
    let n = (beta * k as f64).floor() as usize;
    let m = (gamma * k as f64).ceil() as usize;
    let d = if delta > 0.0 { delta / 2.0 } else { 0.0 };
    let gordon = if n > m && k <= n { gordon_bound(rv_bound(n, k)? + d * (n as f64).sqrt(), m) } else { 0.0 };
    Ok(TradeoffPoint { beta, gamma, delta, c, oracle_c, gordon_bound: gordon, gordon_k: k, gordon_d: d })
}
