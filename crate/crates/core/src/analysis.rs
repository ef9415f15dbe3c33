//! Rearrangement functionals, cone membership, regularity and the
//! sparsity-regime parameter computation.
//!
//! Logarithms are natural throughout; base-2 logs appear only where a
//! quantity is defined through a power of two (s0, s1 and the leading
//! 10 log2(e) constant in rho).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::fft::complexify;
use crate::measurement::HadamardTypeMatrix;
use crate::vector::{norm_l2, norm_linf};

/// Indices of `x` sorted by decreasing magnitude; ties keep the original
/// index order, making every rearrangement-based functional deterministic.
pub fn rearrangement_indices(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| {
        x[b].abs()
            .partial_cmp(&x[a].abs())
            .expect("finite entries")
            .then(a.cmp(&b))
    });
    idx
}

/// Nonincreasing rearrangement (|x|_(1) >= |x|_(2) >= ...).
pub fn nonincreasing_rearrangement(x: &[f64]) -> Vec<f64> {
    rearrangement_indices(x).iter().map(|&i| x[i].abs()).collect()
}

/// Top-k norm: the l2 norm of the k largest-magnitude entries,
/// equivalently max over |S| = k of ||x_S||_2.
pub fn topk_norm(x: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > x.len() {
        return Err(Error::InvalidArgument(format!(
            "top-k order must lie in [1, {}], got {k}",
            x.len()
        )));
    }
    let rearr = nonincreasing_rearrangement(x);
    Ok(rearr[..k].iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Best s-term approximation error in l1: the l1 norm of everything past
/// the s largest magnitudes. Zero when s covers the whole support.
pub fn best_s_term_error(x: &[f64], s: usize) -> f64 {
    if s >= x.len() {
        return 0.0;
    }
    let rearr = nonincreasing_rearrangement(x);
    rearr[s..].iter().sum()
}

/// Membership in the cone ||v_S||_2 >= (nu / sqrt(s)) ||v_{S^c}||_1.
///
/// Decided at the top-s support: it simultaneously maximizes the left side
/// and minimizes the right side, so some support of size at most s works
/// iff the top-s support does.
pub fn cone_membership(v: &[f64], nu: f64, s: usize) -> Result<bool> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "cone parameter must be positive and finite, got {nu}"
        )));
    }
    if s == 0 || s > v.len() {
        return Err(Error::InvalidArgument(format!(
            "cone order must lie in [1, {}], got {s}",
            v.len()
        )));
    }
    let rearr = nonincreasing_rearrangement(v);
    let head: f64 = rearr[..s].iter().map(|a| a * a).sum::<f64>().sqrt();
    let tail: f64 = rearr[s..].iter().sum();
    Ok(head >= nu / (s as f64).sqrt() * tail)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegularityReport {
    /// |{i : |x_i| >= ||x||_2 * alpha / sqrt(n)}|.
    pub count: usize,
    pub passes: bool,
    /// Zero vectors satisfy the inequality vacuously and are flagged.
    pub degenerate: bool,
}

/// Checks whether at least theta * n coordinates reach the typical scale
/// ||x||_2 * alpha / sqrt(n).
pub fn regularity_check(x: &[f64], alpha: f64, theta: f64) -> Result<RegularityReport> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("regularity of empty vector".into()));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad alpha {alpha}")));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "theta must lie in (0, 1], got {theta}"
        )));
    }
    let n = x.len();
    let norm = norm_l2(x);
    let level = norm * alpha / (n as f64).sqrt();
    let count = x.iter().filter(|v| v.abs() >= level).count();
    let degenerate = norm == 0.0;
    Ok(RegularityReport {
        count,
        passes: !degenerate && (count as f64) >= theta * n as f64,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SparsityRegime {
    LowSparsity,
    HighSparsity,
}

/// Free constants of the theta selection rule; all default to 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ThetaConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl Default for ThetaConstants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c4: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SparsityParameters {
    pub n: usize,
    pub r: usize,
    pub kappa4: f64,
    pub rho: f64,
    /// 2^{s0} = kappa4 * n / r (real-valued exponent).
    pub s0: f64,
    /// 2^{s1} = rho * r * ln(e n / r).
    pub s1: f64,
    /// max(1, ln 2^{s1 - s0}).
    pub alpha_r: f64,
    pub theta: f64,
    pub regime: SparsityRegime,
}

/// Derived parameters of the sparsity split at (n, r). kappa4 is the free
/// budget knob (default 1); theta follows the two-branch selection rule.
pub fn compute_parameters(
    n: usize,
    r: usize,
    kappa4: f64,
    tc: &ThetaConstants,
) -> Result<SparsityParameters> {
    if n == 0 || r == 0 || 2 * r > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= r <= n/2, got r = {r}, n = {n}"
        )));
    }
    if !(kappa4 > 0.0 && kappa4.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad kappa4 {kappa4}")));
    }
    for (name, c) in [("c1", tc.c1), ("c2", tc.c2), ("c3", tc.c3), ("c4", tc.c4)] {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad {name}: {c}")));
        }
    }
    let nf = n as f64;
    let rf = r as f64;
    let e = std::f64::consts::E;
    let log_en_r = (e * nf / rf).ln();
    let rho = 10.0 * std::f64::consts::LOG2_E * 1.0_f64.max((e * rf).ln() / log_en_r);
    let s0 = (kappa4 * nf / rf).log2();
    let s1 = (rho * rf * log_en_r).log2();
    let alpha_r = 1.0_f64.max((s1 - s0) * std::f64::consts::LN_2);
    let regime = if s0 >= s1 {
        SparsityRegime::LowSparsity
    } else {
        SparsityRegime::HighSparsity
    };
    let inner = tc.c2 * nf / kappa4;
    let low_r_branch =
        inner > 1.0 && rf <= tc.c2 * (kappa4 * nf / inner.ln()).sqrt();
    let theta = if low_r_branch {
        tc.c1
    } else {
        tc.c3 / (alpha_r * alpha_r * (e * alpha_r).ln())
    };
    Ok(SparsityParameters {
        n,
        r,
        kappa4,
        rho,
        s0,
        s1,
        alpha_r,
        theta,
        regime,
    })
}

/// Metric for the greedy net construction.
pub enum NetMetric<'a> {
    Euclidean,
    /// d(x, y) = sqrt(n) ||W (x - y)||_inf for a Hadamard-type W.
    ScaledInftyUnderW(&'a HadamardTypeMatrix),
}

impl NetMetric<'_> {
    fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        match self {
            NetMetric::Euclidean => Ok(norm_l2(&diff)),
            NetMetric::ScaledInftyUnderW(w) => {
                if w.n() != diff.len() {
                    return Err(Error::DimensionMismatch {
                        expected: w.n(),
                        got: diff.len(),
                    });
                }
                let img = w.apply(&complexify(&diff));
                let maxmod = img.iter().map(|c| c.norm()).fold(0.0, f64::max);
                Ok((diff.len() as f64).sqrt() * maxmod)
            }
        }
    }
}

/// Greedy eps-separated subset: scans the points in order and keeps those at
/// distance >= eps from everything kept so far. The result is both
/// eps-separated and (by maximality) an eps-cover of the input. Returns the
/// retained indices.
pub fn greedy_separated_net(
    points: &[Vec<f64>],
    eps: f64,
    metric: &NetMetric<'_>,
) -> Result<Vec<usize>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad separation {eps}")));
    }
    let dim = match points.first() {
        None => return Ok(vec![]),
        Some(p) => p.len(),
    };
    let mut kept: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        let mut separated = true;
        for &k in &kept {
            if metric.distance(p, &points[k])? < eps {
                separated = false;
                break;
            }
        }
        if separated {
            kept.push(i);
        }
    }
    Ok(kept)
}

/// max_j x*_j / ln(e n / j) over 1-based positions j.
pub fn psi1n_norm(x: &[f64]) -> f64 {
    let n = x.len();
    let rearr = nonincreasing_rearrangement(x);
    rearr
        .iter()
        .enumerate()
        .map(|(j0, &a)| a / (std::f64::consts::E * n as f64 / (j0 + 1) as f64).ln())
        .fold(0.0, f64::max)
}

/// Convenience: ||x||_inf / ||x||_2 scale gap, used in diagnostics.
pub fn peak_to_energy(x: &[f64]) -> f64 {
    let l2 = norm_l2(x);
    if l2 == 0.0 {
        return 0.0;
    }
    norm_linf(x) / l2
}
