//! Sparseness measures and the separable cost functions they induce.
//!
//! A sparseness measure is a scalar penalty `F: [0, ∞) → [0, ∞)` with
//! `F(0) = 0`, `F > 0` away from zero and `F(|·|)` subadditive. The cost of a
//! vector is `J(x) = Σ_k F(|x_k|)`.
//!
//! Measures are named on the command line by spec strings such as
//! `lp(p=0.5)` or `mcp_zap(alpha=2)`; see [`SparsenessMeasure::parse`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;
use crate::tolerance;

/// A declared structural property that may be unknown for custom measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tri {
    True,
    False,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureFlags {
    pub non_decreasing: Tri,
    pub subadditive: Tri,
    /// `p` such that `F(t x) = t^p F(x)` for all `t, x > 0`.
    pub homogeneity_degree: Option<f64>,
    pub continuous: bool,
}

impl MeasureFlags {
    pub fn unknown() -> Self {
        MeasureFlags {
            non_decreasing: Tri::Unknown,
            subadditive: Tri::Unknown,
            homogeneity_degree: None,
            continuous: true,
        }
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    L0,
    Power(f64),
    ExpCe1,
    McpZap(f64),
    Scad { lambda: f64, a: f64 },
    Custom(ScalarFn),
}

/// An evaluable scalar sparseness measure. Immutable once built.
#[derive(Clone)]
pub struct SparsenessMeasure {
    name: String,
    kind: Kind,
    params: BTreeMap<String, f64>,
    flags: MeasureFlags,
}

impl fmt::Debug for SparsenessMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparsenessMeasure({self})")
    }
}

impl fmt::Display for SparsenessMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.params.is_empty() {
            f.write_str("(")?;
            for (i, (k, v)) in self.params.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{k}={v}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

pub const BUILTIN_NAMES: [&str; 6] = ["l0", "lp", "l1", "exp_ce1", "mcp_zap", "scad"];

impl SparsenessMeasure {
    /// Builds one of the built-in measures.
    ///
    /// * `l0: `1{x > 0}`; discontinuous, for oracle comparisons only.
    /// * `lp: `x^p` with `0 < p ≤ 1` (param `p`).
    /// * `l1: `x`.
    /// * `exp_ce1: `x + 1 − e^{−x}`, strictly subadditive with slope 2 at 0.
    /// * `mcp_zap: `2αx − α²x²` below `1/α`, `1` above (param `alpha`).
    /// * `scad: the SCAD penalty (params `lambda`, default 1, and `a`,
    ///   default 3.7).
    pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let allowed: &[&str] = match name {
            "l0" | "l1" | "exp_ce1" => &[],
            "lp" => &["p"],
            "mcp_zap" => &["alpha"],
            "scad" => &["lambda", "a"],
            _ => return Err(Error::UnknownMeasure(name.to_string())),
        };
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::param(bad, format!("not a parameter of `{name}`")));
        }
        for (k, v) in params {
            if !v.is_finite() {
                return Err(Error::param(k, "must be finite"));
            }
        }
        let regular = |homogeneity_degree| MeasureFlags {
            non_decreasing: Tri::True,
            subadditive: Tri::True,
            homogeneity_degree,
            continuous: true,
        };
        let (kind, flags, stored) = match name {
            "l0" => (
                Kind::L0,
                MeasureFlags { continuous: false, ..regular(Some(0.0)) },
                BTreeMap::new(),
            ),
            "l1" => (Kind::Power(1.0), regular(Some(1.0)), BTreeMap::new()),
            "lp" => {
                let p = *params.get("p").ok_or_else(|| Error::param("p", "required for lp"))?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::param("p", format!("{p} not in (0, 1]")));
                }
                (Kind::Power(p), regular(Some(p)), params.clone())
            }
            "exp_ce1" => (Kind::ExpCe1, regular(None), BTreeMap::new()),
            "mcp_zap" => {
                let alpha = *params
                    .get("alpha")
                    .ok_or_else(|| Error::param("alpha", "required for mcp_zap"))?;
                if alpha <= 0.0 {
                    return Err(Error::param("alpha", format!("{alpha} must be positive")));
                }
                (Kind::McpZap(alpha), regular(None), params.clone())
            }
            "scad" => {
                let lambda = params.get("lambda").copied().unwrap_or(1.0);
                let a = params.get("a").copied().unwrap_or(3.7);
                if lambda <= 0.0 {
                    return Err(Error::param("lambda", format!("{lambda} must be positive")));
                }
                if a <= 2.0 {
                    return Err(Error::param("a", format!("{a} must exceed 2")));
                }
                let stored = BTreeMap::from([("a".to_string(), a), ("lambda".to_string(), lambda)]);
                (Kind::Scad { lambda, a }, regular(None), stored)
            }
            _ => unreachable!(),
        };
        Ok(SparsenessMeasure { name: name.to_string(), kind, params: stored, flags })
    }

    pub fn l1() -> Self {
        Self::builtin("l1", &BTreeMap::new()).expect("l1 is built in")
    }

    pub fn lp(p: f64) -> Result<Self> {
        Self::builtin("lp", &BTreeMap::from([("p".to_string(), p)]))
    }

    pub fn l0() -> Self {
        Self::builtin("l0", &BTreeMap::new()).expect("l0 is built in")
    }

    pub fn exp_ce1() -> Self {
        Self::builtin("exp_ce1", &BTreeMap::new()).expect("exp_ce1 is built in")
    }

    pub fn mcp_zap(alpha: f64) -> Result<Self> {
        Self::builtin("mcp_zap", &BTreeMap::from([("alpha".to_string(), alpha)]))
    }

    pub fn scad(lambda: f64, a: f64) -> Result<Self> {
        Self::builtin(
            "scad",
            &BTreeMap::from([("lambda".to_string(), lambda), ("a".to_string(), a)]),
        )
    }

    /// Wraps an arbitrary scalar function. `f(0)` must be exactly zero.
    pub fn custom<F>(name: &str, flags: MeasureFlags, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let at_zero = f(0.0);
        if at_zero != 0.0 {
            return Err(Error::param(name, format!("F(0) = {at_zero}, must be 0")));
        }
        Ok(SparsenessMeasure {
            name: name.to_string(),
            kind: Kind::Custom(Arc::new(f)),
            params: BTreeMap::new(),
            flags,
        })
    }

    /// Parses `name` or `name(key=value, ...)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, params) = parse_spec(spec)?;
        Self::builtin(&name, &params)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn flags(&self) -> MeasureFlags {
        self.flags
    }

    pub fn homogeneity_degree(&self) -> Option<f64> {
        self.flags.homogeneity_degree
    }

    /// `J` is scale invariant in ratio form exactly when `F` is homogeneous.
    pub fn is_homogeneous(&self) -> bool {
        self.flags.homogeneity_degree.is_some()
    }

    pub fn is_continuous(&self) -> bool {
        self.flags.continuous
    }

    /// The exponent `p` if this is `x^p` (including `l1`).
    pub fn power(&self) -> Option<f64> {
        match self.kind {
            Kind::Power(p) => Some(p),
            _ => None,
        }
    }

    /// `F(|t|)`.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        match &self.kind {
            Kind::L0 => {
                if t > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Power(p) => {
                if *p == 1.0 {
                    t
                } else if t == 0.0 {
                    0.0
                } else {
                    t.powf(*p)
                }
            }
            Kind::ExpCe1 => t - (-t).exp_m1(),
            Kind::McpZap(alpha) => {
                if t < 1.0 / alpha {
                    2.0 * alpha * t - alpha * alpha * t * t
                } else {
                    1.0
                }
            }
            Kind::Scad { lambda, a } => {
                if t <= *lambda {
                    lambda * t
                } else if t <= a * lambda {
                    (2.0 * a * lambda * t - t * t - lambda * lambda) / (2.0 * (a - 1.0))
                } else {
                    lambda * lambda * (a + 1.0) / 2.0
                }
            }
            Kind::Custom(f) => f(t),
        }
    }

    /// One-sided derivative estimate `F'(t+)` used by gradient-based solvers.
    pub fn derivative(&self, t: f64) -> f64 {
        let t = t.abs();
        match &self.kind {
            Kind::L0 => 0.0,
            Kind::Power(p) => {
                if *p == 1.0 {
                    1.0
                } else if t == 0.0 {
                    f64::INFINITY
                } else {
                    p * t.powf(p - 1.0)
                }
            }
            Kind::ExpCe1 => 1.0 + (-t).exp(),
            Kind::McpZap(alpha) => {
                if t < 1.0 / alpha {
                    2.0 * alpha - 2.0 * alpha * alpha * t
                } else {
                    0.0
                }
            }
            Kind::Scad { lambda, a } => {
                if t <= *lambda {
                    *lambda
                } else if t <= a * lambda {
                    (a * lambda - t) / (a - 1.0)
                } else {
                    0.0
                }
            }
            Kind::Custom(f) => {
                let h = 1e-7 * t.max(1e-3);
                (f(t + h) - f((t - h).max(0.0))) / (t + h - (t - h).max(0.0))
            }
        }
    }

    pub(crate) fn require_continuous(&self, op: &'static str) -> Result<()> {
        if self.flags.continuous {
            Ok(())
        } else {
            Err(Error::Unsupported { op, measure: self.to_string() })
        }
    }
}

impl FromStr for SparsenessMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SparsenessMeasure::parse(s)
    }
}

/// Splits a measure spec into its name and parameter map without
/// validating the name.
pub fn parse_spec(spec: &str) -> Result<(String, BTreeMap<String, f64>)> {
    let fail = |reason: &str| Error::MeasureSpec { spec: spec.to_string(), reason: reason.to_string() };
    let s = spec.trim();
    let (name, rest) = match s.find('(') {
        Some(i) => (s[..i].trim(), Some(&s[i + 1..])),
        None => (s, None),
    };
    if name.is_empty() {
        return Err(fail("empty measure name"));
    }
    if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(fail("measure name must be alphanumeric or `_`"));
    }
    let mut params = BTreeMap::new();
    if let Some(rest) = rest {
        let body = rest.trim_end();
        let body = body.strip_suffix(')').ok_or_else(|| fail("missing closing `)`"))?;
        if body.contains('(') || body.contains(')') {
            return Err(fail("nested parentheses"));
        }
        if !body.trim().is_empty() {
            for item in body.split(',') {
                let (k, v) = item.split_once('=').ok_or_else(|| fail("expected key=value"))?;
                let k = k.trim();
                if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(fail("bad parameter name"));
                }
                let v: f64 = v.trim().parse().map_err(|_| fail("parameter value is not a number"))?;
                if params.insert(k.to_string(), v).is_some() {
                    return Err(fail("duplicate parameter"));
                }
            }
        }
    }
    Ok((name.to_string(), params))
}

/// `J(x) = Σ F(|x_k|)` on `R^n`.
#[derive(Debug, Clone)]
pub struct CostFunction {
    measure: SparsenessMeasure,
    dim: usize,
}

/// The split of `J(u)` into the `k` heaviest coordinates and the rest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopSplit {
    pub support: Vec<usize>,
    pub on: f64,
    pub off: f64,
}

impl TopSplit {
    pub fn deficit(&self) -> f64 {
        self.on - self.off
    }

    /// `(on − off)/(on + off)`, in `[−1, 1]`; zero for the zero vector.
    pub fn relative_deficit(&self) -> f64 {
        let total = self.on + self.off;
        if total > 0.0 {
            (self.on - self.off) / total
        } else {
            0.0
        }
    }

    pub fn ratio(&self) -> f64 {
        if self.off > 0.0 {
            self.on / self.off
        } else if self.on > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

impl CostFunction {
    pub fn new(measure: SparsenessMeasure, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("n", "dimension must be positive"));
        }
        Ok(CostFunction { measure, dim })
    }

    pub fn measure(&self) -> &SparsenessMeasure {
        &self.measure
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Σ_{k ∈ support} F(|x_k|)`, or the full sum when `support` is `None`.
    pub fn eval(&self, x: &[f64], support: Option<&[usize]>) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        match support {
            None => Ok(self.total(x)),
            Some(idx) => {
                if let Some(&bad) = idx.iter().find(|&&i| i >= self.dim) {
                    return Err(Error::IndexOutOfRange { index: bad, dim: self.dim });
                }
                Ok(idx.iter().map(|&i| self.measure.eval(x[i])).sum())
            }
        }
    }

    /// Unchecked full sum.
    #[inline]
    pub fn total(&self, x: &[f64]) -> f64 {
        x.iter().map(|&v| self.measure.eval(v)).sum()
    }

    /// `J(x_{T^c})` for the complement of `support`.
    pub fn eval_complement(&self, x: &[f64], support: &[usize]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let mut mask = vec![false; self.dim];
        for &i in support {
            *mask.get_mut(i).ok_or(Error::IndexOutOfRange { index: i, dim: self.dim })? = true;
        }
        Ok(x.iter().zip(&mask).filter(|(_, &m)| !m).map(|(&v, _)| self.measure.eval(v)).sum())
    }

    /// For a fixed vector the support of size `≤ k` maximizing both
    /// `J(u_T) − J(u_{T^c})` and `J(u_T)/J(u_{T^c})` is the set of `k`
    /// coordinates with the largest `F(|u_i|)`.
    pub fn top_split(&self, u: &[f64], k: usize) -> TopSplit {
        let vals: Vec<f64> = u.iter().map(|&v| self.measure.eval(v)).collect();
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
        let k = k.min(vals.len());
        let mut support: Vec<usize> = order[..k].to_vec();
        support.sort_unstable();
        let on: f64 = order[..k].iter().map(|&i| vals[i]).sum();
        let off: f64 = order[k..].iter().map(|&i| vals[i]).sum();
        TopSplit { support, on, off }
    }
}

/// Largest observed violation of one sampled property.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: f64,
    pub y: f64,
    /// Amount by which the inequality fails (positive means violated).
    pub excess: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ViolationSummary {
    pub checked: u64,
    pub violations: u64,
    pub worst: Option<Witness>,
}

impl ViolationSummary {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, x: f64, y: f64, excess: f64, tol: f64) {
        self.checked += 1;
        if excess > tol || excess.is_nan() {
            self.violations += 1;
            let better = match &self.worst {
                None => true,
                Some(w) => excess > w.excess || (excess == w.excess && (x, y) < (w.x, w.y)),
            };
            if better {
                self.worst = Some(Witness { x, y, excess });
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.checked += other.checked;
        self.violations += other.violations;
        self.worst = match (self.worst.take(), other.worst) {
            (None, w) | (w, None) => w,
            (Some(a), Some(b)) => {
                if b.excess > a.excess || (b.excess == a.excess && (b.x, b.y) < (a.x, a.y)) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
        };
        self
    }
}

/// Outcome of [`check_measure_properties`]. Zero violations is evidence,
/// not proof.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub measure: String,
    pub sample_budget: u64,
    pub domain_cap: f64,
    pub inconclusive: bool,
    pub zero_at_origin: bool,
    pub positivity: ViolationSummary,
    pub subadditivity: ViolationSummary,
    pub monotonicity: ViolationSummary,
    /// `F(t)/t` non-increasing.
    pub ratio_non_increasing: ViolationSummary,
    /// `F(t)/t^p` non-increasing for each requested `p`.
    pub power_ratio_non_increasing: Vec<(f64, ViolationSummary)>,
    /// Present when a homogeneity degree is declared.
    pub homogeneity: Option<ViolationSummary>,
}

#[derive(Default)]
struct Partial {
    positivity: ViolationSummary,
    subadditivity: ViolationSummary,
    monotonicity: ViolationSummary,
    ratio: ViolationSummary,
    power: Vec<ViolationSummary>,
    homogeneity: ViolationSummary,
}

impl Partial {
    fn merge(self, o: Partial) -> Partial {
        let n = self.power.len().max(o.power.len());
        let mut a = self.power;
        let mut b = o.power;
        a.resize_with(n, Default::default);
        b.resize_with(n, Default::default);
        Partial {
            positivity: self.positivity.merge(o.positivity),
            subadditivity: self.subadditivity.merge(o.subadditivity),
            monotonicity: self.monotonicity.merge(o.monotonicity),
            ratio: self.ratio.merge(o.ratio),
            power: a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
            homogeneity: self.homogeneity.merge(o.homogeneity),
        }
    }
}

const PROPERTY_CHUNK: u64 = 1024;
const LOG_FLOOR: f64 = 1e-8;

fn draw_point(rng: &mut rng::Rng, cap: f64) -> f64 {
    if rng.random_bool(0.5) {
        rng.random_range(0.0..=cap)
    } else {
        let lo = LOG_FLOOR.min(cap).ln();
        (rng.random_range(lo..=cap.ln())).exp()
    }
}

/// Samples pairs in `[0, domain_cap]²` and counts violations of the
/// structural properties used by the recovery theory.
pub fn check_measure_properties(
    measure: &SparsenessMeasure,
    sample_budget: u64,
    domain_cap: f64,
    powers: &[f64],
    seed: u64,
) -> PropertyReport {
    let tol = tolerance::PROPERTY_REL;
    let zero_at_origin = measure.eval(0.0) == 0.0;
    let degree = measure.homogeneity_degree();
    let cap = if domain_cap > 0.0 && domain_cap.is_finite() { domain_cap } else { 0.0 };
    let budget = if cap > 0.0 { sample_budget } else { 0 };

    let chunks = budget.div_ceil(PROPERTY_CHUNK);
    let totals = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, c);
            let count = PROPERTY_CHUNK.min(budget - c * PROPERTY_CHUNK);
            let mut part = Partial { power: vec![Default::default(); powers.len()], ..Default::default() };
            for _ in 0..count {
                let a = draw_point(&mut rng, cap);
                let b = draw_point(&mut rng, cap);
                let (x, y) = if a <= b { (a, b) } else { (b, a) };
                let (fx, fy) = (measure.eval(x), measure.eval(y));

                if x > 0.0 {
                    part.positivity.record(x, x, if fx > 0.0 { -fx } else { 1.0 }, 0.0);
                }
                let fxy = measure.eval(x + y);
                let scale = (fx + fy).max(fxy);
                part.subadditivity.record(x, y, fxy - fx - fy, tol * scale);
                if x < y {
                    part.monotonicity.record(x, y, fx - fy, tol * fx.abs().max(fy.abs()));
                }
                if x > 0.0 && x < y {
                    let (rx, ry) = (fx / x, fy / y);
                    part.ratio.record(x, y, ry - rx, tol * rx.abs().max(ry.abs()));
                    for (slot, &p) in part.power.iter_mut().zip(powers) {
                        let (px, py) = (fx / x.powf(p), fy / y.powf(p));
                        slot.record(x, y, py - px, tol * px.abs().max(py.abs()));
                    }
                }
                if let Some(p) = degree {
                    let t = rng.random_range(0.0..=10.0_f64);
                    if x > 0.0 && t > 0.0 {
                        let lhs = measure.eval(t * x);
                        let rhs = t.powf(p) * fx;
                        part.homogeneity.record(t, x, (lhs - rhs).abs(), 1e-12 * lhs.abs());
                    }
                }
            }
            part
        })
        .reduce(
            || Partial { power: vec![Default::default(); powers.len()], ..Default::default() },
            Partial::merge,
        );

    PropertyReport {
        measure: measure.to_string(),
        sample_budget: budget,
        domain_cap,
        inconclusive: budget == 0,
        zero_at_origin,
        positivity: totals.positivity,
        subadditivity: totals.subadditivity,
        monotonicity: totals.monotonicity,
        ratio_non_increasing: totals.ratio,
        power_ratio_non_increasing: powers.iter().copied().zip(totals.power).collect(),
        homogeneity: degree.map(|_| totals.homogeneity),
    }
}

/// Estimated limit of a ratio along a geometric grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum LimitEstimate {
    Finite(f64),
    Zero,
    Infinite,
    Inconclusive,
}

impl LimitEstimate {
    pub fn is_positive_finite(&self) -> bool {
        matches!(self, LimitEstimate::Finite(v) if *v > 0.0)
    }
}

/// Comparison rules between two sparseness measures `F` and `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonRule {
    /// `F`, `G` non-decreasing and `F/G` non-increasing: whenever `J_G`
    /// guarantees exact or robust recovery so does `J_F`.
    RatioMonotone,
    /// The same rule with `G(x) = x^p`: `F` is at least as good as `ℓp`.
    PowerRatioMonotone,
    /// `F(x)/x^p` has a positive finite limit at `0+` or `∞`: the set of
    /// null spaces where `J_F` succeeds has Haar measure at most that of `ℓp`.
    PowerAsymptote,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub f: String,
    pub g: String,
    pub sample_budget: u64,
    pub f_non_decreasing: bool,
    pub g_non_decreasing: bool,
    pub ratio_non_increasing: ViolationSummary,
    /// Exponent used for the asymptotic limits, taken from `G`'s homogeneity.
    pub p: Option<f64>,
    pub limit_at_zero: LimitEstimate,
    pub limit_at_infinity: LimitEstimate,
    pub overflow: bool,
    pub rules: Vec<ComparisonRule>,
}

/// Domain cap used by comparisons and limit extrapolation.
pub const DEFAULT_DOMAIN_CAP: f64 = 1e3;

/// Richardson-extrapolated limit of `r(x)` along `x_j = x0 · 2^{±j}`.
///
/// `toward_zero` selects halving (`x → 0+`) or doubling (`x → ∞`). The
/// extrapolation assumes a leading correction linear in `x` (resp. `1/x`)
/// and falls back to growth/decay detection on the raw sequence.
pub fn extrapolate_limit(r: impl Fn(f64) -> f64, toward_zero: bool) -> LimitEstimate {
    let steps = 27;
    let xs: Vec<f64> = (0..=steps)
        .map(|j| if toward_zero { 2f64.powi(-j) } else { 2f64.powi(j) })
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| r(x)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        // An infinite ratio at the far end is divergence, anything else is
        // numerical trouble.
        if vals.last().is_some_and(|v| v.is_infinite() && *v > 0.0)
            && vals.iter().rev().skip(1).take(3).all(|v| v.is_finite() || v.is_infinite())
        {
            return LimitEstimate::Infinite;
        }
        return LimitEstimate::Inconclusive;
    }
    let rich: Vec<f64> = vals.windows(2).map(|w| 2.0 * w[1] - w[0]).collect();
    let tail = &rich[rich.len() - 6..];
    let last = *tail.last().unwrap();
    let spread = tail.iter().fold(0.0f64, |m, &v| m.max((v - last).abs()));
    let raw_tail = &vals[vals.len() - 7..];
    let growing = raw_tail.windows(2).all(|w| w[1] > w[0] * 1.05 && w[1] > 0.0);
    let decaying = raw_tail.windows(2).all(|w| w[1].abs() < w[0].abs() * 0.98);

    if growing {
        return LimitEstimate::Infinite;
    }
    if spread <= 1e-6 * last.abs().max(1e-300) || spread <= 1e-12 {
        if last.abs() <= 1e-9 {
            return LimitEstimate::Zero;
        }
        return LimitEstimate::Finite(last);
    }
    if decaying && raw_tail.last().unwrap().abs() < 1e-3 * vals[0].abs().max(1e-300) {
        return LimitEstimate::Zero;
    }
    LimitEstimate::Inconclusive
}

/// Numerically tests which comparison rule between `F` and `G` holds.
pub fn compare_measures(f: &SparsenessMeasure, g: &SparsenessMeasure, sample_budget: u64) -> ComparisonReport {
    let tol = tolerance::PROPERTY_REL;
    let budget = sample_budget.max(2);
    let lo = LOG_FLOOR.ln();
    let hi = DEFAULT_DOMAIN_CAP.ln();
    let grid: Vec<f64> = (0..budget)
        .map(|i| (lo + (hi - lo) * i as f64 / (budget - 1) as f64).exp())
        .collect();

    let mut f_mono = ViolationSummary::default();
    let mut g_mono = ViolationSummary::default();
    let mut ratio = ViolationSummary::default();
    let mut overflow = false;
    for w in grid.windows(2) {
        let (x, y) = (w[0], w[1]);
        let (fx, fy, gx, gy) = (f.eval(x), f.eval(y), g.eval(x), g.eval(y));
        if ![fx, fy, gx, gy].iter().all(|v| v.is_finite()) {
            overflow = true;
            continue;
        }
        f_mono.record(x, y, fx - fy, tol * fx.abs().max(fy.abs()));
        g_mono.record(x, y, gx - gy, tol * gx.abs().max(gy.abs()));
        if gx > 0.0 && gy > 0.0 {
            let (rx, ry) = (fx / gx, fy / gy);
            ratio.record(x, y, ry - rx, tol * rx.abs().max(ry.abs()));
        }
    }

    let p = g.homogeneity_degree().filter(|&p| p > 0.0 && g.power().is_some());
    let (limit_at_zero, limit_at_infinity) = match p {
        Some(p) => {
            let r = |x: f64| f.eval(x) / x.powf(p);
            (extrapolate_limit(r, true), extrapolate_limit(r, false))
        }
        None => (LimitEstimate::Inconclusive, LimitEstimate::Inconclusive),
    };
    if matches!(limit_at_zero, LimitEstimate::Inconclusive) && p.is_some()
        || matches!(limit_at_infinity, LimitEstimate::Inconclusive) && p.is_some()
    {
        overflow |= [1e-8, 1e8].iter().any(|&x| !f.eval(x).is_finite());
    }

    let mut rules = Vec::new();
    let monotone = f_mono.holds() && g_mono.holds();
    if monotone && ratio.holds() && !overflow {
        rules.push(ComparisonRule::RatioMonotone);
        if p.is_some() {
            rules.push(ComparisonRule::PowerRatioMonotone);
        }
    }
    if p.is_some() && (limit_at_zero.is_positive_finite() || limit_at_infinity.is_positive_finite()) {
        rules.push(ComparisonRule::PowerAsymptote);
    }

    ComparisonReport {
        f: f.to_string(),
        g: g.to_string(),
        sample_budget: budget,
        f_non_decreasing: f_mono.holds(),
        g_non_decreasing: g_mono.holds(),
        ratio_non_increasing: ratio,
        p,
        limit_at_zero,
        limit_at_infinity,
        overflow,
        rules,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cost_examples() {
        let j = CostFunction::new(SparsenessMeasure::l1(), 3).unwrap();
        assert_eq!(j.eval(&[1.0, 1.0, 2.0], None).unwrap(), 4.0);
        assert_eq!(j.eval(&[0.0; 3], None).unwrap(), 0.0);
        let e = CostFunction::new(SparsenessMeasure::exp_ce1(), 1).unwrap();
        assert_relative_eq!(e.eval(&[1.0], None).unwrap(), 2.0 - (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(e.eval(&[1.0], None).unwrap(), 1.63212, epsilon = 1e-5);
        let l0 = CostFunction::new(SparsenessMeasure::l0(), 3).unwrap();
        assert_eq!(l0.eval(&[0.0, 5.0, -3.0], None).unwrap(), 2.0);
    }

    #[test]
    fn cost_errors() {
        let j = CostFunction::new(SparsenessMeasure::l1(), 3).unwrap();
        assert!(matches!(j.eval(&[1.0, 2.0], None), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(j.eval(&[1.0, 2.0, 3.0], Some(&[3])), Err(Error::IndexOutOfRange { index: 3, .. })));
        assert_eq!(j.eval(&[1.0, -2.0, 3.0], Some(&[1, 2])).unwrap(), 5.0);
        assert_eq!(j.eval_complement(&[1.0, -2.0, 3.0], &[1]).unwrap(), 4.0);
    }

    #[test]
    fn builtins_evaluate() {
        assert_eq!(SparsenessMeasure::lp(1.0).unwrap().eval(3.0), 3.0);
        let mcp = SparsenessMeasure::mcp_zap(2.0).unwrap();
        assert_eq!(mcp.eval(0.5), 1.0);
        assert_eq!(mcp.eval(7.0), 1.0);
        assert_relative_eq!(mcp.eval(0.25), 2.0 * 2.0 * 0.25 - 4.0 * 0.0625);
        // continuity at the knee
        assert_relative_eq!(mcp.eval(0.5 - 1e-12), 1.0, epsilon = 1e-11);
        let scad = SparsenessMeasure::scad(1.0, 3.7).unwrap();
        assert_eq!(scad.eval(0.5), 0.5);
        assert_relative_eq!(scad.eval(3.7), 4.7 / 2.0, epsilon = 1e-12);
        assert_relative_eq!(scad.eval(1.0 + 1e-12), 1.0, epsilon = 1e-11);
    }

    #[test]
    fn builtin_errors() {
        assert!(matches!(SparsenessMeasure::lp(0.0), Err(Error::InvalidParameter { .. })));
        assert!(matches!(SparsenessMeasure::lp(1.5), Err(Error::InvalidParameter { .. })));
        assert!(matches!(SparsenessMeasure::mcp_zap(-1.0), Err(Error::InvalidParameter { .. })));
        assert!(matches!(SparsenessMeasure::scad(1.0, 2.0), Err(Error::InvalidParameter { .. })));
        assert!(matches!(SparsenessMeasure::parse("l2"), Err(Error::UnknownMeasure(_))));
        assert!(matches!(SparsenessMeasure::parse("lp(q=1)"), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn parse_specs() {
        let m = SparsenessMeasure::parse("lp(p=0.5)").unwrap();
        assert_eq!(m.power(), Some(0.5));
        let m = SparsenessMeasure::parse(" mcp_zap( alpha = 2 ) ").unwrap();
        assert_eq!(m.to_string(), "mcp_zap(alpha=2)");
        assert_eq!(SparsenessMeasure::parse("l1").unwrap().to_string(), "l1");
        assert_eq!(SparsenessMeasure::parse("l1()").unwrap().to_string(), "l1");
        for bad in ["", "lp(p=0.5", "lp(p)", "lp(p=x)", "lp(p=1,p=1)", "l p", "lp((p=1))", "lp(=1)"] {
            assert!(SparsenessMeasure::parse(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn custom_requires_zero_at_origin() {
        assert!(SparsenessMeasure::custom("shift", MeasureFlags::unknown(), |t| t + 1.0).is_err());
        let sq = SparsenessMeasure::custom("sq", MeasureFlags::unknown(), |t| t * t).unwrap();
        assert_eq!(sq.eval(-3.0), 9.0);
    }

    #[test]
    fn top_split_picks_heaviest() {
        let j = CostFunction::new(SparsenessMeasure::l1(), 4).unwrap();
        let s = j.top_split(&[1.0, -4.0, 2.0, 0.5], 2);
        assert_eq!(s.support, vec![1, 2]);
        assert_eq!(s.on, 6.0);
        assert_eq!(s.off, 1.5);
        assert_eq!(s.ratio(), 4.0);
    }

    #[test]
    fn property_examples() {
        let sqrt = SparsenessMeasure::lp(0.5).unwrap();
        let r = check_measure_properties(&sqrt, 100_000, DEFAULT_DOMAIN_CAP, &[0.5], 1);
        assert!(r.subadditivity.holds(), "{:?}", r.subadditivity.worst);
        assert!(r.monotonicity.holds());
        assert!(r.ratio_non_increasing.holds());
        assert!(r.power_ratio_non_increasing[0].1.holds());
        assert!(r.homogeneity.as_ref().unwrap().holds());
        assert!(r.positivity.holds() && r.zero_at_origin && !r.inconclusive);

        let e = check_measure_properties(&SparsenessMeasure::exp_ce1(), 100_000, DEFAULT_DOMAIN_CAP, &[], 2);
        assert!(e.subadditivity.holds());
        assert!(e.monotonicity.holds());

        let sq = SparsenessMeasure::custom("sq", MeasureFlags::unknown(), |t| t * t).unwrap();
        let r = check_measure_properties(&sq, 10_000, 2.0, &[], 3);
        assert!(r.subadditivity.violations > 0);
        let w = r.subadditivity.worst.unwrap();
        assert!(w.excess > 0.0 && w.x + w.y <= 4.0);
    }

    #[test]
    fn degenerate_budget_is_inconclusive() {
        let r = check_measure_properties(&SparsenessMeasure::l1(), 0, 10.0, &[], 0);
        assert!(r.inconclusive);
        assert_eq!(r.subadditivity.checked, 0);
    }

    #[test]
    fn property_check_is_deterministic() {
        let m = SparsenessMeasure::mcp_zap(3.0).unwrap();
        let a = check_measure_properties(&m, 5000, 10.0, &[1.0], 9);
        let b = check_measure_properties(&m, 5000, 10.0, &[1.0], 9);
        assert_eq!(a, b);
    }

    #[test]
    fn comparison_examples() {
        let sqrt = SparsenessMeasure::lp(0.5).unwrap();
        let l1 = SparsenessMeasure::l1();
        let r = compare_measures(&sqrt, &l1, 2000);
        assert!(r.rules.contains(&ComparisonRule::RatioMonotone));
        assert!(r.rules.contains(&ComparisonRule::PowerRatioMonotone));
        assert_eq!(r.limit_at_zero, LimitEstimate::Infinite);
        assert_eq!(r.limit_at_infinity, LimitEstimate::Zero);
        assert!(!r.rules.contains(&ComparisonRule::PowerAsymptote));

        let mcp = SparsenessMeasure::mcp_zap(2.0).unwrap();
        let r = compare_measures(&mcp, &l1, 2000);
        match r.limit_at_zero {
            LimitEstimate::Finite(v) => assert_relative_eq!(v, 4.0, epsilon = 1e-6),
            other => panic!("{other:?}"),
        }
        assert!(r.rules.contains(&ComparisonRule::PowerAsymptote));
        assert!(r.rules.contains(&ComparisonRule::PowerRatioMonotone));

        let r = compare_measures(&SparsenessMeasure::exp_ce1(), &l1, 2000);
        match r.limit_at_zero {
            LimitEstimate::Finite(v) => assert_relative_eq!(v, 2.0, epsilon = 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn finite_difference_limit_oracle() {
        // Independent route: the slope F(x)/x on x = 2^-j, no extrapolation.
        for alpha in [0.5, 2.0, 7.0] {
            let mcp = SparsenessMeasure::mcp_zap(alpha).unwrap();
            let slope = mcp.eval(2f64.powi(-30)) / 2f64.powi(-30);
            assert!((slope - 2.0 * alpha).abs() < 1e-6 * alpha);
        }
        let e = SparsenessMeasure::exp_ce1();
        assert!((e.eval(2f64.powi(-30)) / 2f64.powi(-30) - 2.0).abs() < 1e-8);
    }
}
