//! Index-set utilities.

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Calls `f` on every `size`-subset of `0..n` in lexicographic order.
/// Stops early when `f` returns `false`.
pub fn for_each_subset(n: usize, size: usize, mut f: impl FnMut(&[usize]) -> bool) {
    if size > n {
        return;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        if !f(&idx) {
            return;
        }
        // advance
        let mut i = size;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - size + i {
                idx[i] += 1;
                for j in i + 1..size {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// All subsets of `0..n` with at most `k` elements, smallest first.
pub fn subsets_up_to(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 0..=k.min(n) {
        for_each_subset(n, size, |s| {
            out.push(s.to_vec());
            true
        });
    }
    out
}

/// Indicator of `support` restricted to `x`; the complement part is zeroed.
pub fn restrict(x: &[f64], support: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for &i in support {
        out[i] = x[i];
    }
    out
}

/// Complement of `support` in `0..n`.
pub fn complement(n: usize, support: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    for &i in support {
        mask[i] = false;
    }
    (0..n).filter(|&i| mask[i]).collect()
}
