//! Summary statistics and the one-tailed Mann-Whitney U test.

use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator); zero for one value.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return if xs.is_empty() { f64::NAN } else { 0.0 };
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UTest {
    /// Number of pairs with `x > y`, ties counting one half.
    pub u: f64,
    /// One-tailed p-value for the alternative "x tends to be smaller than y".
    pub p: f64,
    pub exact: bool,
}

/// Groups at most this large on both sides are tested by full enumeration.
pub const EXACT_LIMIT: usize = 8;

/// Midranks of `values` (1-based).
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Mann-Whitney U test of `x` against `y`, alternative `x < y`.
///
/// Small samples use the exact permutation distribution of the midrank sum;
/// larger ones the normal approximation with tie and continuity correction.
/// Returns `None` when either sample is empty.
pub fn mann_whitney_less(x: &[f64], y: &[f64]) -> Option<UTest> {
    let (n1, n2) = (x.len(), y.len());
    if n1 == 0 || n2 == 0 {
        return None;
    }
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&pooled);
    let offset = (n1 * (n1 + 1)) as f64 / 2.0;
    let u = ranks[..n1].iter().sum::<f64>() - offset;

    if n1 <= EXACT_LIMIT && n2 <= EXACT_LIMIT {
        let n = n1 + n2;
        let (mut hits, mut total) = (0u64, 0u64);
        // every n1-subset of the pooled ranks, as a bit mask
        for mask in 0u32..(1u32 << n) {
            if mask.count_ones() as usize != n1 {
                continue;
            }
            let r: f64 = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
            total += 1;
            if r - offset <= u + 1e-9 {
                hits += 1;
            }
        }
        return Some(UTest {
            u,
            p: hits as f64 / total as f64,
            exact: true,
        });
    }

    let (a, b) = (n1 as f64, n2 as f64);
    let n = a + b;
    let mut ties = 0.0;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    let var = a * b / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    let p = if var > 0.0 {
        let z = (u - a * b / 2.0 + 0.5) / var.sqrt();
        Normal::standard().cdf(z).min(1.0)
    } else {
        1.0
    };
    Some(UTest { u, p, exact: false })
}
