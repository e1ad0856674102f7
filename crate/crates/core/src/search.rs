//! Derivative-free maximization helpers shared by the certificate searches.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::rng::Rng;

/// `count` log-spaced points covering `[lo, hi]` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && count >= 1);
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes a 1-D function sampled on `grid`, then refines by golden
/// section between the neighbours of the best grid point.
pub fn grid_then_golden(f: impl Fn(f64) -> f64, grid: &[f64], iters: usize) -> (f64, f64, usize) {
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let best = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let mut evals = grid.len();
    let (mut x, mut fx) = (grid[best], vals[best]);
    if hi > lo && iters > 0 {
        let (gx, gf) = golden_max(&f, lo, hi, iters);
        evals += iters + 2;
        if gf > fx {
            x = gx;
            fx = gf;
        }
    }
    (x, fx, evals)
}

/// Opportunistic compass search with random extra directions.
#[derive(Debug, Clone, Copy)]
pub struct PatternSearch {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evals: usize,
    /// Random unit directions tried per sweep in addition to the axes.
    pub random_directions: usize,
}

impl Default for PatternSearch {
    fn default() -> Self {
        PatternSearch { initial_step: 0.25, min_step: 1e-9, max_evals: 4000, random_directions: 4 }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

impl PatternSearch {
    /// Maximizes `f` from `x0`. Every trial point passes through `project`
    /// before evaluation, which keeps iterates on a constraint manifold.
    pub fn maximize(
        &self,
        mut x: Vec<f64>,
        f: impl Fn(&[f64]) -> f64,
        project: impl Fn(&mut [f64]),
        rng: &mut Rng,
    ) -> SearchResult {
        project(&mut x);
        let mut fx = f(&x);
        let mut evals = 1;
        let dim = x.len();
        let mut step = self.initial_step;
        let mut trial = vec![0.0; dim];
        let mut dir = vec![0.0; dim];
        while step >= self.min_step && evals < self.max_evals {
            let mut improved = false;
            let total = 2 * dim + 2 * self.random_directions;
            for d in 0..total {
                if evals >= self.max_evals {
                    break;
                }
                if d < 2 * dim {
                    dir.iter_mut().for_each(|v| *v = 0.0);
                    dir[d / 2] = if d % 2 == 0 { 1.0 } else { -1.0 };
                } else if d % 2 == 0 {
                    let mut norm = 0.0;
                    for v in dir.iter_mut() {
                        *v = rng.sample::<f64, _>(StandardNormal);
                        norm += *v * *v;
                    }
                    let norm = norm.sqrt().max(1e-300);
                    dir.iter_mut().for_each(|v| *v /= norm);
                } else {
                    dir.iter_mut().for_each(|v| *v = -*v);
                }
                for i in 0..dim {
                    trial[i] = x[i] + step * dir[i];
                }
                project(&mut trial);
                let ft = f(&trial);
                evals += 1;
                if ft > fx {
                    x.copy_from_slice(&trial);
                    fx = ft;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            } else {
                step = (step * 1.5).min(self.initial_step * 4.0);
            }
        }
        SearchResult { x, value: fx, evals }
    }
}

/// Normalizes `v` to unit length in place (no-op for the zero vector).
pub fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A standard normal vector of length `n`.
pub fn gaussian_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 80);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx > -1e-15);
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = log_grid(1e-6, 1e6, 61);
        assert_eq!(g.len(), 61);
        assert!((g[0] - 1e-6).abs() < 1e-18);
        assert!((g[60] - 1e6).abs() < 1e-6);
        assert!((g[30] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pattern_search_on_sphere() {
        // max of c·x on the unit sphere is |c| at c/|c|
        let c = [1.0, -2.0, 2.0];
        let mut r = rng::seeded(3);
        let res = PatternSearch::default().maximize(
            vec![1.0, 1.0, 1.0],
            |x| x.iter().zip(&c).map(|(a, b)| a * b).sum(),
            normalize,
            &mut r,
        );
        assert!((res.value - 3.0).abs() < 1e-8, "{}", res.value);
    }
}
