//! Exact null-space-property certification on small explicit matrices, and
//! Monte Carlo verification of the structural claims behind partial-circulant
//! recovery: small-ball frequencies, rearrangement structure of Gamma_v xi,
//! selector log-sums and one-sparse projection bounds.
//!
//! Certification is honest brute force: the infimum of ||Ax||_2 over
//! unit-norm r-sparse x is the minimum smallest singular value over all
//! C(n, r) column supports, enumerated exactly up to a configured cap.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{cone_membership, nonincreasing_rearrangement, topk_norm};
use crate::error::{Error, Result};
use crate::generators::{derive_seed, sparse_gaussian_unit, SubgaussianEnsemble};
use crate::measurement::fft::complexify;
use crate::measurement::{
    GammaOperator, HadamardKind, HadamardTypeMatrix, SelectorMask, GAMMA_RESIDUE_TOL,
};
use crate::par;
use crate::stats;
use crate::vector::{norm_l1, norm_l2};

/// Default limit on the number of enumerated supports.
pub const ENUMERATION_CAP: u128 = 1_000_000;

/// Random draws used to validate the certificate's quadratic inequality.
pub const NSQ_DRAWS: usize = 1000;

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// t-th (0-based) r-subset of {0..n-1} in lexicographic order.
fn combination_unrank(n: usize, r: usize, mut t: u128) -> Vec<usize> {
    let mut combo = Vec::with_capacity(r);
    let mut x = 0;
    let mut remaining = r;
    while remaining > 0 {
        let with_x = binomial(n - x - 1, remaining - 1);
        if t < with_x {
            combo.push(x);
            remaining -= 1;
        } else {
            t -= with_x;
        }
        x += 1;
    }
    combo
}

/// Lexicographic successor in place; false once exhausted.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let r = c.len();
    for i in (0..r).rev() {
        if c[i] != i + n - r {
            c[i] += 1;
            for j in i + 1..r {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn smallest_singular_on_support(gram: &DMatrix<f64>, support: &[usize]) -> f64 {
    let r = support.len();
    if r == 1 {
        return gram[(support[0], support[0])].max(0.0).sqrt();
    }
    let sub = DMatrix::from_fn(r, r, |i, j| gram[(support[i], support[j])]);
    let eig = SymmetricEigen::new(sub);
    eig.eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
        .max(0.0)
        .sqrt()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TauScan {
    /// inf over unit-norm r-sparse x of ||Ax||_2.
    pub inf_norm: f64,
    pub supports: u128,
    /// r exceeded min(m, n): the infimum is 0 without enumeration.
    pub rank_deficient: bool,
}

/// Exact infimum of ||Ax||_2 over unit-norm r-sparse x: the minimum smallest
/// singular value over all column supports of size r.
pub fn brute_force_tau(a: &DMatrix<f64>, r: usize, cap: u128) -> Result<TauScan> {
    let (m, n) = (a.nrows(), a.ncols());
    if r == 0 {
        return Err(Error::InvalidArgument("support size 0".into()));
    }
    if r > m.min(n) {
        return Ok(TauScan {
            inf_norm: 0.0,
            supports: 0,
            rank_deficient: true,
        });
    }
    let total = binomial(n, r);
    if total > cap {
        return Err(Error::SizeCap {
            what: "support enumeration",
            got: usize::try_from(total).unwrap_or(usize::MAX),
            cap: usize::try_from(cap).unwrap_or(usize::MAX),
        });
    }
    let gram = a.transpose() * a;
    let chunk: u128 = 4096;
    let chunks = total.div_ceil(chunk) as usize;
    let inf = par::min_indexed(chunks, |c| {
        let start = c as u128 * chunk;
        let end = total.min(start + chunk);
        let mut support = combination_unrank(n, r, start);
        let mut best = f64::INFINITY;
        let mut t = start;
        loop {
            best = best.min(smallest_singular_on_support(&gram, &support));
            t += 1;
            if t >= end || !next_combination(&mut support, n) {
                break;
            }
        }
        best
    });
    Ok(TauScan {
        inf_norm: inf,
        supports: total,
        rank_deficient: false,
    })
}

/// Largest column l2 norm of A.
pub fn column_bound(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct NspCertificate {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub nu: f64,
    /// 1 / inf_{V_r} ||Ax||_2.
    pub tau: f64,
    /// Max column norm.
    pub column_norm_bound: f64,
    /// nu^2 / (2 nu + 1)^2.
    pub c_nu: f64,
    /// floor(c_nu (r-1) / (M^2 tau^2 - 1)); None when M^2 tau^2 <= 1, where
    /// the sparsity constraint is vacuous.
    pub s_max: Option<u64>,
    pub s_unbounded: bool,
    /// sqrt(2) tau: on the certified cone, ||Av||_2 >= 1 / (sqrt(2) tau).
    pub cone_constant: f64,
    /// q -> m^{1/2 - 1/q} sqrt(2) tau for the lq-constrained variants.
    pub q_constants: BTreeMap<String, f64>,
    /// Smallest slack of the quadratic inequality
    /// ||Ay||_2^2 >= tau^{-2} ||y||_2^2
    ///   - (||y||_1 / (r-1)) (sum_j ||Ae_j||_2^2 |y_j| - tau^{-2} ||y||_1)
    /// over the random validation draws; a true certificate never goes
    /// below -1e-9.
    pub min_inequality_slack: f64,
    pub inequality_ok: bool,
    pub supports_checked: u128,
    pub seed: u64,
}

/// Assembles a cone-based NSP certificate from exact brute-force constants
/// and validates the underlying quadratic inequality on random draws.
pub fn lm14_certify(
    a: &DMatrix<f64>,
    r: usize,
    nu: f64,
    cap: u128,
    seed: u64,
) -> Result<NspCertificate> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "nu must lie in (0, 1], got {nu}"
        )));
    }
    if r < 2 {
        return Err(Error::InvalidArgument(
            "certification needs r >= 2".into(),
        ));
    }
    let scan = brute_force_tau(a, r, cap)?;
    if scan.inf_norm <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "no certificate: inf over {r}-sparse vectors is 0 (rank deficient: {})",
            scan.rank_deficient
        )));
    }
    let tau = 1.0 / scan.inf_norm;
    let m_bound = column_bound(a);
    let c_nu = nu * nu / (2.0 * nu + 1.0).powi(2);
    let denom = m_bound * m_bound * tau * tau - 1.0;
    let (s_max, s_unbounded) = if denom <= 0.0 {
        (None, true)
    } else {
        (Some((c_nu * (r as f64 - 1.0) / denom).floor() as u64), false)
    };
    let cone_constant = std::f64::consts::SQRT_2 * tau;
    let mf = a.nrows() as f64;
    let mut q_constants = BTreeMap::new();
    q_constants.insert("2".to_string(), cone_constant);
    q_constants.insert("inf".to_string(), mf.sqrt() * cone_constant);

    // Validate the inequality the certificate rests on.
    let col_sq: Vec<f64> = (0..a.ncols())
        .map(|j| a.column(j).norm_squared())
        .collect();
    let tau_inv_sq = scan.inf_norm * scan.inf_norm;
    let slacks = par::map_indexed(NSQ_DRAWS, |t| {
        let y = SubgaussianEnsemble::Gaussian.sample(a.ncols(), derive_seed(seed, t as u64));
        let l2 = norm_l2(&y);
        let y: Vec<f64> = y.iter().map(|v| v / l2).collect();
        let ay = a * nalgebra::DVector::from_column_slice(&y);
        let l1 = norm_l1(&y);
        let weighted: f64 = y.iter().zip(&col_sq).map(|(v, c)| c * v.abs()).sum();
        let rhs = tau_inv_sq - (l1 / (r as f64 - 1.0)) * (weighted - tau_inv_sq * l1);
        ay.norm_squared() - rhs
    });
    let min_slack = slacks.iter().fold(f64::INFINITY, |x, &y| x.min(y));

    Ok(NspCertificate {
        m: a.nrows(),
        n: a.ncols(),
        r,
        nu,
        tau,
        column_norm_bound: m_bound,
        c_nu,
        s_max,
        s_unbounded,
        cone_constant,
        q_constants,
        min_inequality_slack: min_slack,
        inequality_ok: min_slack >= -1e-9,
        supports_checked: scan.supports,
        seed,
    })
}

/// Cone order actually usable for sampling: the certified s floored at 1 and
/// capped at n (an unbounded certificate covers every order).
pub fn effective_cone_order(cert: &NspCertificate, n: usize) -> usize {
    match cert.s_max {
        None => n,
        Some(s) => (s as usize).clamp(1, n),
    }
}

/// Draws a unit vector from the cone
/// ||v_S||_2 >= (nu / sqrt(s)) ||v_{S^c}||_1 by rejection: an s-sparse
/// Gaussian head plus a dense tail at a random scale, re-proposed with a
/// shrinking scale ceiling until membership holds. Always terminates (the
/// ceiling decays to 0 and s-sparse vectors are members).
pub fn sample_cone_vector(n: usize, s: usize, nu: f64, seed: u64) -> Result<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    if s == 0 || s > n {
        return Err(Error::InvalidArgument(format!(
            "cone order must lie in [1, {n}], got {s}"
        )));
    }
    // Heuristic ceiling: a unit dense tail has l1 norm ~ sqrt(2n/pi), so
    // scales up to this keep roughly half the proposals inside the cone.
    let t_max = (s as f64 / n as f64).sqrt() * (std::f64::consts::PI / 2.0).sqrt() / nu;
    for attempt in 0u64.. {
        let head = sparse_gaussian_unit(n, s, derive_seed(seed, 3 * attempt))?;
        let noise = SubgaussianEnsemble::Gaussian.sample(n, derive_seed(seed, 3 * attempt + 1));
        let noise_l2 = norm_l2(&noise);
        let mut rng =
            rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, 3 * attempt + 2));
        // Halve the ceiling every 20 rejections so termination is guaranteed.
        let scale = t_max * 0.5_f64.powi((attempt / 20) as i32) * rng.gen::<f64>();
        let v: Vec<f64> = head
            .iter()
            .zip(&noise)
            .map(|(h, g)| h + scale * g / noise_l2)
            .collect();
        if cone_membership(&v, nu, s)? {
            let l2 = norm_l2(&v);
            return Ok(v.iter().map(|x| x / l2).collect());
        }
    }
    unreachable!("rejection sampler terminates")
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeCheckReport {
    pub samples: usize,
    pub s_used: usize,
    pub nu: f64,
    /// min over samples of ||Av||_2 * sqrt(2) tau; certified cones keep this
    /// >= 1 up to rounding.
    pub min_ratio: f64,
    pub threshold: f64,
    pub seed: u64,
}

/// Empirically honors the certificate's cone conclusion: random cone members
/// v satisfy ||Av||_2 >= 1 / (sqrt(2) tau).
pub fn cone_check(
    a: &DMatrix<f64>,
    cert: &NspCertificate,
    samples: usize,
    seed: u64,
) -> Result<ConeCheckReport> {
    let n = a.ncols();
    let s = effective_cone_order(cert, n);
    let ratios = par::try_map_indexed(samples, |i| -> Result<f64> {
        let v = sample_cone_vector(n, s, cert.nu, derive_seed(seed, i as u64))?;
        let av = a * nalgebra::DVector::from_column_slice(&v);
        Ok(av.norm() * cert.cone_constant)
    })?;
    let min_ratio = ratios.iter().fold(f64::INFINITY, |x, &y| x.min(y));
    Ok(ConeCheckReport {
        samples,
        s_used: s,
        nu: cert.nu,
        min_ratio,
        threshold: 1.0 / cert.cone_constant,
        seed,
    })
}

/// Operator fed to the small-ball Monte Carlo.
pub enum SmallBallOperator {
    Identity(usize),
    Dense(DMatrix<f64>),
    Factored(GammaOperator),
}

impl SmallBallOperator {
    pub fn dim(&self) -> usize {
        match self {
            SmallBallOperator::Identity(n) => *n,
            SmallBallOperator::Dense(a) => a.ncols(),
            SmallBallOperator::Factored(g) => g.n(),
        }
    }

    pub fn hs_norm(&self) -> f64 {
        match self {
            SmallBallOperator::Identity(n) => (*n as f64).sqrt(),
            SmallBallOperator::Dense(a) => a.norm(),
            SmallBallOperator::Factored(g) => g.hs_norm(),
        }
    }

    pub fn op_norm(&self) -> f64 {
        match self {
            SmallBallOperator::Identity(_) => 1.0,
            SmallBallOperator::Dense(a) => a.clone().svd(false, false).singular_values[0],
            SmallBallOperator::Factored(g) => g.op_norm(),
        }
    }

    fn image_norm(&self, xi: &[f64]) -> Result<f64> {
        match self {
            SmallBallOperator::Identity(_) => Ok(norm_l2(xi)),
            SmallBallOperator::Dense(a) => {
                if xi.len() != a.ncols() {
                    return Err(Error::DimensionMismatch {
                        expected: a.ncols(),
                        got: xi.len(),
                    });
                }
                Ok((a * nalgebra::DVector::from_column_slice(xi)).norm())
            }
            SmallBallOperator::Factored(g) => Ok(norm_l2(&g.apply(xi)?)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallBallReport {
    pub n: usize,
    pub trials: usize,
    pub hs_norm: f64,
    pub op_norm: f64,
    /// (HS / op)^2, the effective dimension controlling the tail exponent.
    pub d_gamma: f64,
    pub t_grid: Vec<f64>,
    /// frequencies[i] = empirical Pr(||G xi||_2 <= t_grid[i] * ||G||_HS).
    pub frequencies: Vec<f64>,
    pub seed: u64,
}

/// Empirical small-ball frequencies Pr(||G xi||_2 <= t ||G||_HS) on a grid.
pub fn small_ball_mc(
    op: &SmallBallOperator,
    ensemble: SubgaussianEnsemble,
    t_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<SmallBallReport> {
    if trials < 1000 {
        return Err(Error::InvalidArgument(format!(
            "small-ball estimate needs >= 1000 trials, got {trials}"
        )));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidArgument("bad t grid".into()));
    }
    let n = op.dim();
    let hs = op.hs_norm();
    let op_norm = op.op_norm();
    if hs == 0.0 || op_norm == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let norms = par::try_map_indexed(trials, |t| {
        let xi = ensemble.sample(n, derive_seed(seed, t as u64));
        op.image_norm(&xi)
    })?;
    let frequencies = t_grid
        .iter()
        .map(|&t| norms.iter().filter(|&&v| v <= t * hs).count() as f64 / trials as f64)
        .collect();
    Ok(SmallBallReport {
        n,
        trials,
        hs_norm: hs,
        op_norm,
        d_gamma: (hs / op_norm).powi(2),
        t_grid: t_grid.to_vec(),
        frequencies,
        seed,
    })
}

pub const QUANTILE_GRID: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureConfig {
    pub n: usize,
    pub r: usize,
    pub kinds: [HadamardKind; 3],
    pub ensemble: SubgaussianEnsemble,
    pub samples: usize,
    pub seed: u64,
    /// Regularity level: coordinates counted at ||t||_2 alpha / sqrt(n).
    pub alpha: f64,
    /// Regularity fraction, and the top-k order k = ceil(theta n).
    pub theta: f64,
    /// Prepend v = e1 as a deterministic consistency sample.
    pub force_e1: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StructureSample {
    pub index: usize,
    /// The deterministic v = e1 consistency sample, excluded from summaries.
    pub forced: bool,
    pub l2_ratio: f64,
    pub topk_ratio: f64,
    pub regular: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub n: usize,
    pub r: usize,
    pub samples: usize,
    pub k_top: usize,
    pub alpha: f64,
    pub theta: f64,
    /// Mean of ||Gamma_v xi||_2^2 / n; isotropy makes the expectation 1.
    pub mean_sq_ratio: f64,
    pub l2_quantiles: Vec<(f64, f64)>,
    pub topk_quantiles: Vec<(f64, f64)>,
    pub regularity_pass_rate: f64,
    pub forced_e1_l2_ratio: Option<f64>,
    pub seed: u64,
    pub rows: Vec<StructureSample>,
}

/// Monte Carlo over random r-sparse directions v: distribution of
/// ||Gamma_v xi||_2 / sqrt(n), its top-k part, and regularity pass rates.
/// Reports only; thresholds live in the calling test suites.
pub fn structure_check(config: &StructureConfig) -> Result<StructureReport> {
    if config.r == 0 || 2 * config.r > config.n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= r <= n/2, got r = {}, n = {}",
            config.r, config.n
        )));
    }
    if config.samples == 0 {
        return Err(Error::InvalidArgument("no samples requested".into()));
    }
    if !(config.theta > 0.0 && config.theta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "theta must lie in (0, 1], got {}",
            config.theta
        )));
    }
    let n = config.n;
    let k_top = ((config.theta * n as f64).ceil() as usize).clamp(1, n);
    let sqrt_n = (n as f64).sqrt();

    let eval = |v: &[f64], xi_seed: u64| -> Result<StructureSample> {
        let gamma = GammaOperator::from_kinds(config.kinds, v)?;
        let xi = config.ensemble.sample(n, xi_seed);
        let t = gamma.apply(&xi)?;
        let reg = crate::analysis::regularity_check(&t, config.alpha, config.theta)?;
        Ok(StructureSample {
            index: 0,
            forced: false,
            l2_ratio: norm_l2(&t) / sqrt_n,
            topk_ratio: topk_norm(&t, k_top)? / sqrt_n,
            regular: reg.passes,
        })
    };

    let mut rows: Vec<StructureSample> = Vec::with_capacity(config.samples + 1);
    let mut forced = None;
    if config.force_e1 {
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        let mut s = eval(&e1, derive_seed(config.seed, u64::MAX))?;
        s.forced = true;
        forced = Some(s.l2_ratio);
        rows.push(s);
    }
    let sampled = par::try_map_indexed(config.samples, |i| -> Result<StructureSample> {
        let v = sparse_gaussian_unit(n, config.r, derive_seed(config.seed, 2 * i as u64))?;
        let mut s = eval(&v, derive_seed(config.seed, 2 * i as u64 + 1))?;
        s.index = i;
        Ok(s)
    })?;
    rows.extend(sampled);

    // Summary statistics exclude the forced consistency sample.
    let body: Vec<&StructureSample> = rows.iter().filter(|s| !s.forced).collect();
    let l2: Vec<f64> = body.iter().map(|s| s.l2_ratio).collect();
    let topk: Vec<f64> = body.iter().map(|s| s.topk_ratio).collect();
    let mean_sq = l2.iter().map(|v| v * v).sum::<f64>() / l2.len() as f64;
    let quantiles = |vals: &[f64]| -> Vec<(f64, f64)> {
        QUANTILE_GRID
            .iter()
            .map(|&p| (p, stats::quantile(vals, p)))
            .collect()
    };
    let pass_rate =
        body.iter().filter(|s| s.regular).count() as f64 / body.len() as f64;
    Ok(StructureReport {
        n,
        r: config.r,
        samples: config.samples,
        k_top,
        alpha: config.alpha,
        theta: config.theta,
        mean_sq_ratio: mean_sq,
        l2_quantiles: quantiles(&l2),
        topk_quantiles: quantiles(&topk),
        regularity_pass_rate: pass_rate,
        forced_e1_l2_ratio: forced,
        seed: config.seed,
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectorSumReport {
    pub n: usize,
    pub delta: f64,
    pub trials: usize,
    /// Fraction of trials with sum_{j in mask} ln(en/j) <= 5 delta n.
    pub frequency: f64,
    /// Mean of sum / (5 delta n).
    pub mean_ratio: f64,
    pub seed: u64,
}

/// Empirical frequency of the selector log-sum bound
/// sum_j delta_j ln(en/j) <= 5 delta n (1-based j).
pub fn selector_log_sum_check(
    n: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<SelectorSumReport> {
    if delta * (n as f64) < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "need delta n >= 1, got {}",
            delta * n as f64
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("no trials".into()));
    }
    let bound = 5.0 * delta * n as f64;
    let e = std::f64::consts::E;
    let ratios = par::try_map_indexed(trials, |t| -> Result<f64> {
        let mask = SelectorMask::bernoulli(n, delta, derive_seed(seed, t as u64))?;
        let sum: f64 = mask
            .omega()
            .iter()
            .map(|&j| (e * n as f64 / (j + 1) as f64).ln())
            .sum();
        Ok(sum / bound)
    })?;
    let hits = ratios.iter().filter(|&&r| r <= 1.0).count();
    Ok(SelectorSumReport {
        n,
        delta,
        trials,
        frequency: hits as f64 / trials as f64,
        mean_ratio: ratios.iter().sum::<f64>() / trials as f64,
        seed,
    })
}

/// One trial of the one-sparse projection bound: with columns w_i of W and
/// z = O xi precomputed, max_i ||P_Omega sqrt(n) U (w_i . z)||_2 / sqrt(delta n).
pub fn one_sparse_max_ratio(
    kinds: [HadamardKind; 3],
    xi: &[f64],
    mask: &SelectorMask,
) -> Result<f64> {
    let n = xi.len();
    if mask.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mask.n,
        });
    }
    let u = HadamardTypeMatrix::new(kinds[0], n)?;
    let w = HadamardTypeMatrix::new(kinds[1], n)?;
    let o = HadamardTypeMatrix::new(kinds[2], n)?;
    let oz = o.apply(&complexify(xi));
    let sqrt_n = (n as f64).sqrt();
    let xi_l2 = norm_l2(xi);
    let denom = (mask.delta * n as f64).sqrt();
    let mut best: f64 = 0.0;
    for i in 0..n {
        let col = w.column(i);
        let prod: Vec<Complex64> = col.iter().zip(&oz).map(|(a, b)| a * b).collect();
        let img = u.apply(&prod);
        // Same real-extraction guard as the factored operator.
        let residue: f64 = img.iter().map(|c| c.im * c.im).sum::<f64>().sqrt() * sqrt_n;
        if residue > GAMMA_RESIDUE_TOL * sqrt_n * xi_l2 {
            return Err(Error::ComplexResidue {
                residue,
                tol: GAMMA_RESIDUE_TOL * sqrt_n * xi_l2,
            });
        }
        let masked: f64 = mask
            .omega()
            .iter()
            .map(|&j| {
                let v = sqrt_n * img[j].re;
                v * v
            })
            .sum::<f64>()
            .sqrt();
        best = best.max(masked / denom);
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct OneSparseReport {
    pub n: usize,
    pub delta: f64,
    pub trials: usize,
    /// delta >= c0 ln(n) / n held (the regime the bound is stated in).
    pub hypothesis_ok: bool,
    /// Per-trial max ratios, trial order.
    pub ratios: Vec<f64>,
    pub seed: u64,
}

/// Distribution of max_i ||P_Omega Gamma_{e_i} xi||_2 / sqrt(delta n) over
/// fresh (xi, mask) pairs.
pub fn one_sparse_bound_check(
    n: usize,
    delta: f64,
    kinds: [HadamardKind; 3],
    ensemble: SubgaussianEnsemble,
    trials: usize,
    c0: f64,
    seed: u64,
) -> Result<OneSparseReport> {
    if trials == 0 || n == 0 {
        return Err(Error::InvalidArgument("empty experiment".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(format!("bad delta {delta}")));
    }
    let hypothesis_ok = delta >= c0 * (n as f64).ln() / n as f64;
    let ratios = par::try_map_indexed(trials, |t| {
        let xi = ensemble.sample(n, derive_seed(seed, 2 * t as u64));
        let mask = SelectorMask::bernoulli(n, delta, derive_seed(seed, 2 * t as u64 + 1))?;
        one_sparse_max_ratio(kinds, &xi, &mask)
    })?;
    Ok(OneSparseReport {
        n,
        delta,
        trials,
        hypothesis_ok,
        ratios,
        seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HeadTailSplit {
    pub head: Vec<f64>,
    pub tail: Vec<f64>,
    /// ||head||_2 = top-m norm of the input.
    pub head_l2: f64,
    /// max_i tail*_i / sqrt(ln(en/i)), the subexponential tail profile.
    pub tail_profile: f64,
}

/// Splits z into its m largest-magnitude coordinates and the remainder.
pub fn decompose_head_tail(z: &[f64], m: usize) -> Result<HeadTailSplit> {
    let n = z.len();
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "head size must lie in [1, {n}], got {m}"
        )));
    }
    let order = crate::analysis::rearrangement_indices(z);
    let mut head = vec![0.0; n];
    for &i in &order[..m] {
        head[i] = z[i];
    }
    let tail: Vec<f64> = z.iter().zip(&head).map(|(a, b)| a - b).collect();
    let rearr = nonincreasing_rearrangement(&tail);
    let e = std::f64::consts::E;
    let tail_profile = rearr
        .iter()
        .enumerate()
        .map(|(i0, &v)| v / (e * n as f64 / (i0 + 1) as f64).ln().sqrt())
        .fold(0.0, f64::max);
    Ok(HeadTailSplit {
        head_l2: norm_l2(&head),
        head,
        tail,
        tail_profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{gamma_materialize, MATERIALIZE_CAP};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        })
    }

    #[test]
    fn binomial_and_unranking() {
        assert_eq!(binomial(12, 3), 220);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 5), 0);
        // Unranking agrees with sequential enumeration.
        let mut combo = vec![0, 1, 2];
        let mut t = 0u128;
        loop {
            assert_eq!(combination_unrank(6, 3, t), combo);
            t += 1;
            if !next_combination(&mut combo, 6) {
                break;
            }
        }
        assert_eq!(t, binomial(6, 3));
    }

    #[test]
    fn brute_force_identity_and_zero_column() {
        let id = DMatrix::<f64>::identity(6, 6);
        for r in 1..=4 {
            let scan = brute_force_tau(&id, r, ENUMERATION_CAP).unwrap();
            assert!((scan.inf_norm - 1.0).abs() < 1e-12);
            assert!(!scan.rank_deficient);
        }
        let mut with_zero = random_matrix(5, 7, 3);
        with_zero.column_mut(4).fill(0.0);
        let scan = brute_force_tau(&with_zero, 1, ENUMERATION_CAP).unwrap();
        assert!(scan.inf_norm < 1e-12);
    }

    #[test]
    fn brute_force_flags_and_caps() {
        let a = random_matrix(4, 9, 5);
        let scan = brute_force_tau(&a, 5, ENUMERATION_CAP).unwrap();
        assert_eq!(scan.inf_norm, 0.0);
        assert!(scan.rank_deficient);
        assert!(matches!(
            brute_force_tau(&a, 3, 10),
            Err(Error::SizeCap { .. })
        ));
        assert!(brute_force_tau(&a, 0, ENUMERATION_CAP).is_err());
    }

    #[test]
    fn brute_force_monotone_and_sample_consistent() {
        let a = random_matrix(8, 12, 7);
        let mut prev = f64::INFINITY;
        for r in 1..=3 {
            let scan = brute_force_tau(&a, r, ENUMERATION_CAP).unwrap();
            assert!(scan.inf_norm <= prev + 1e-12, "not monotone at r = {r}");
            prev = scan.inf_norm;
        }
        // Random unit 3-sparse vectors never dip below the exact infimum.
        let scan = brute_force_tau(&a, 3, ENUMERATION_CAP).unwrap();
        assert_eq!(scan.supports, 220);
        for i in 0..1000 {
            let v = sparse_gaussian_unit(12, 3, derive_seed(99, i)).unwrap();
            let norm = (&a * nalgebra::DVector::from_column_slice(&v)).norm();
            assert!(norm >= scan.inf_norm - 1e-9);
        }
    }

    #[test]
    fn column_bound_values() {
        let id = DMatrix::<f64>::identity(5, 5);
        assert!((column_bound(&id) - 1.0).abs() < 1e-15);
        assert!((column_bound(&(2.0 * &id)) - 2.0).abs() < 1e-15);
        let a = random_matrix(6, 4, 11);
        let manual = (0..4)
            .map(|j| (0..6).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        assert!((column_bound(&a) - manual).abs() < 1e-12);
    }

    #[test]
    fn identity_certificate_is_unbounded() {
        let id = DMatrix::<f64>::identity(6, 6);
        let cert = lm14_certify(&id, 2, 1.0, ENUMERATION_CAP, 1).unwrap();
        assert!((cert.tau - 1.0).abs() < 1e-12);
        assert!((cert.column_norm_bound - 1.0).abs() < 1e-12);
        assert!((cert.c_nu - 1.0 / 9.0).abs() < 1e-15);
        assert!(cert.s_unbounded && cert.s_max.is_none());
        assert!((cert.cone_constant - std::f64::consts::SQRT_2).abs() < 1e-12);
        // Equality case of the quadratic inequality: slack ~ 0, never below.
        assert!(cert.inequality_ok, "slack {}", cert.min_inequality_slack);
        assert!(cert.min_inequality_slack < 1e-9);
        assert!((cert.q_constants["2"] - cert.cone_constant).abs() < 1e-15);
        assert!(
            (cert.q_constants["inf"] - 6.0_f64.sqrt() * cert.cone_constant).abs() < 1e-12
        );
    }

    #[test]
    fn random_certificate_inequality_and_cone() {
        // Wide Gaussian with near-unit columns.
        let mut a = random_matrix(20, 40, 42);
        a /= 20.0_f64.sqrt();
        let cert = lm14_certify(&a, 4, 0.5, ENUMERATION_CAP, 42).unwrap();
        assert!(cert.tau > 1.0);
        assert!(cert.inequality_ok, "slack {}", cert.min_inequality_slack);
        let report = cone_check(&a, &cert, 200, 7).unwrap();
        assert!(
            report.min_ratio >= 1.0 - 1e-9,
            "cone bound violated: {}",
            report.min_ratio
        );
        assert_eq!(report.s_used, effective_cone_order(&cert, 40));
    }

    #[test]
    fn cone_sampler_members_and_determinism() {
        for i in 0..50 {
            let v = sample_cone_vector(24, 3, 0.5, i).unwrap();
            assert!((norm_l2(&v) - 1.0).abs() < 1e-12);
            assert!(cone_membership(&v, 0.5, 3).unwrap());
        }
        assert_eq!(
            sample_cone_vector(24, 3, 0.5, 9).unwrap(),
            sample_cone_vector(24, 3, 0.5, 9).unwrap()
        );
        assert!(sample_cone_vector(8, 0, 0.5, 1).is_err());
    }

    #[test]
    fn small_ball_identity_dimensions() {
        let op = SmallBallOperator::Identity(64);
        let report =
            small_ball_mc(&op, SubgaussianEnsemble::Gaussian, &[0.5, 2.0], 1000, 5).unwrap();
        assert!((report.d_gamma - 64.0).abs() < 1e-12);
        // chi-square(64) essentially never falls below 16 or above 256.
        assert_eq!(report.frequencies[0], 0.0);
        assert_eq!(report.frequencies[1], 1.0);
        assert!(small_ball_mc(&op, SubgaussianEnsemble::Gaussian, &[0.5], 10, 5).is_err());
    }

    #[test]
    fn small_ball_factored_matches_dense() {
        let n = 32;
        let v = sparse_gaussian_unit(n, 4, 77).unwrap();
        let gamma = GammaOperator::fourier(&v).unwrap();
        let dense_c = gamma_materialize(&gamma, MATERIALIZE_CAP).unwrap();
        let dense = DMatrix::from_fn(n, n, |i, j| dense_c[(i, j)].re);
        let fac = SmallBallOperator::Factored(gamma);
        let dn = SmallBallOperator::Dense(dense);
        assert!((fac.hs_norm() - dn.hs_norm()).abs() < 1e-9 * fac.hs_norm());
        assert!((fac.op_norm() - dn.op_norm()).abs() < 1e-9 * fac.op_norm());
        let a = small_ball_mc(&fac, SubgaussianEnsemble::Gaussian, &[0.8], 1000, 3).unwrap();
        let b = small_ball_mc(&dn, SubgaussianEnsemble::Gaussian, &[0.8], 1000, 3).unwrap();
        assert_eq!(a.frequencies, b.frequencies);
    }

    #[test]
    fn structure_check_isotropy_and_forced_sample() {
        let config = StructureConfig {
            n: 64,
            r: 4,
            kinds: [
                HadamardKind::InverseDft,
                HadamardKind::Dft,
                HadamardKind::Dft,
            ],
            ensemble: SubgaussianEnsemble::Gaussian,
            samples: 200,
            seed: 12,
            alpha: 0.5,
            theta: 0.25,
            force_e1: true,
        };
        let report = structure_check(&config).unwrap();
        assert!(report.mean_sq_ratio > 0.8 && report.mean_sq_ratio < 1.2);
        assert_eq!(report.rows.len(), 201);
        assert_eq!(report.k_top, 16);
        // Quantiles nondecreasing in p.
        for w in report.l2_quantiles.windows(2) {
            assert!(w[1].1 >= w[0].1);
        }
        // Forced e1 sample: Gamma_{e1} xi = xi for the Fourier triple, so
        // the ratio is ||xi||_2 / sqrt(n), concentrated near 1.
        let forced = report.forced_e1_l2_ratio.unwrap();
        assert!(forced > 0.7 && forced < 1.3, "forced ratio {forced}");
        assert!(structure_check(&StructureConfig { r: 40, ..config.clone() }).is_err());
    }

    #[test]
    fn selector_sum_deterministic_cases() {
        // delta = 1 selects everything: Stirling makes the sum ~ 2n << 5n.
        let r = selector_log_sum_check(128, 1.0, 10, 1).unwrap();
        assert_eq!(r.frequency, 1.0);
        assert!(r.mean_ratio < 0.5);
        let tiny = selector_log_sum_check(1, 1.0, 5, 1).unwrap();
        assert_eq!(tiny.frequency, 1.0);
        assert!(selector_log_sum_check(10, 0.05, 5, 1).is_err());
    }

    #[test]
    fn one_sparse_full_sampling_identity() {
        // delta = 1 and the Fourier triple: Gamma_{e_i} xi is a cyclic shift
        // of xi, so every ratio equals ||xi||_2 / sqrt(n).
        let n = 64;
        let kinds = [
            HadamardKind::InverseDft,
            HadamardKind::Dft,
            HadamardKind::Dft,
        ];
        let xi = SubgaussianEnsemble::Gaussian.sample(n, 21);
        let mask = SelectorMask::bernoulli(n, 1.0, 4).unwrap();
        let ratio = one_sparse_max_ratio(kinds, &xi, &mask).unwrap();
        let expect = norm_l2(&xi) / (n as f64).sqrt();
        assert!((ratio - expect).abs() < 1e-9, "{ratio} vs {expect}");
        // Degenerate input.
        let zero = vec![0.0; n];
        assert_eq!(one_sparse_max_ratio(kinds, &zero, &mask).unwrap(), 0.0);
    }

    #[test]
    fn one_sparse_report_runs() {
        let kinds = [
            HadamardKind::InverseDft,
            HadamardKind::Dft,
            HadamardKind::Dft,
        ];
        let report = one_sparse_bound_check(
            64,
            0.25,
            kinds,
            SubgaussianEnsemble::Gaussian,
            20,
            1.0,
            31,
        )
        .unwrap();
        assert_eq!(report.ratios.len(), 20);
        assert!(report.hypothesis_ok);
        assert!(report.ratios.iter().all(|&r| r.is_finite() && r >= 0.0));
        let tight = one_sparse_bound_check(
            64,
            0.01,
            kinds,
            SubgaussianEnsemble::Gaussian,
            2,
            1.0,
            31,
        )
        .unwrap();
        assert!(!tight.hypothesis_ok);
    }

    #[test]
    fn head_tail_split_examples() {
        let z = [3.0, 1.0, -2.0, 0.0];
        let split = decompose_head_tail(&z, 2).unwrap();
        assert_eq!(split.head, vec![3.0, 0.0, -2.0, 0.0]);
        assert_eq!(split.tail, vec![0.0, 1.0, 0.0, 0.0]);
        assert!((split.head_l2 - topk_norm(&z, 2).unwrap()).abs() < 1e-15);
        let full = decompose_head_tail(&z, 4).unwrap();
        assert!(full.tail.iter().all(|&v| v == 0.0));
        assert_eq!(full.tail_profile, 0.0);
        // Exact reassembly and disjoint supports.
        for (i, (h, t)) in split.head.iter().zip(&split.tail).enumerate() {
            assert_eq!(h + t, z[i]);
            assert!(*h == 0.0 || *t == 0.0);
        }
        assert!(decompose_head_tail(&z, 0).is_err());
        assert!(decompose_head_tail(&z, 5).is_err());
    }
}
