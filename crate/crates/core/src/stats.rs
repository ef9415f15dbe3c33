//! Small statistics helpers: medians, empirical quantiles, a one-sided
//! Fisher exact test and a through-origin slope fit.

/// Median of `xs` (average of the two middle order statistics for even
/// lengths). Returns NaN for empty input.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Lower empirical quantile: smallest order statistic whose empirical CDF
/// reaches `p`. For `p = 0` returns the minimum.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "quantile level out of range");
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let k = (p * v.len() as f64).ceil() as usize;
    v[k.saturating_sub(1).min(v.len() - 1)]
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// One-sided Fisher exact p-value for "group two has a lower success rate".
///
/// Conditions on the margins: under exchangeability the success count of
/// group two is hypergeometric, and the p-value is `P(X <= s2)`. Small
/// values are evidence that the second rate is genuinely lower.
pub fn fisher_decrease_p(s1: u64, t1: u64, s2: u64, t2: u64) -> f64 {
    assert!(s1 <= t1 && s2 <= t2, "successes exceed trials");
    let total = t1 + t2;
    let succ = s1 + s2;
    let lf = ln_factorials(total as usize);
    let ln_choose = |n: u64, k: u64| -> f64 {
        if k > n {
            return f64::NEG_INFINITY;
        }
        lf[n as usize] - lf[k as usize] - lf[(n - k) as usize]
    };
    let denom = ln_choose(total, t2);
    // X = successes in group two; support is [max(0, t2 - failures), min(t2, succ)].
    let lo = t2.saturating_sub(total - succ);
    let mut p = 0.0;
    for k in lo..=s2.min(t2).min(succ) {
        p += (ln_choose(succ, k) + ln_choose(total - succ, t2 - k) - denom).exp();
    }
    p.min(1.0)
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut lf = vec![0.0; n + 1];
    for k in 2..=n {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    lf
}

/// Least-squares slope of `y` against `x` through the origin.
pub fn slope_through_origin(points: &[(f64, f64)]) -> f64 {
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    if sxx == 0.0 {
        return f64::NAN;
    }
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    sxy / sxx
}
