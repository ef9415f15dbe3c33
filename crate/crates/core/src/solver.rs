//! l1 minimization under an lq residual constraint:
//!
//!   min ||z||_1  subject to  ||Bz - y||_q <= eta,  q in {2, inf}
//!
//! solved by a primal-dual proximal splitting (fixed steps, relaxation 1)
//! that touches B only through apply/adjoint. The primal proximal map is
//! soft-thresholding; the dual step projects onto the eta-ball around y
//! (exact for q = 2 and q = inf, which is why q is restricted to those).
//!
//! Internally the problem is scaled by 1/||y||_2 so tolerances and step
//! sizes are scale-free; outputs are reported in the original scale.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::PartialCirculantOperator;
use crate::vector::{dot, norm_l1, norm_l2, norm_linf};

/// Forward/adjoint access to a measurement map; everything the solver needs.
pub trait MeasurementOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn adjoint(&self, w: &[f64]) -> Result<Vec<f64>>;
}

impl MeasurementOperator for PartialCirculantOperator {
    fn rows(&self) -> usize {
        self.m()
    }

    fn cols(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        PartialCirculantOperator::apply(self, x)
    }

    fn adjoint(&self, w: &[f64]) -> Result<Vec<f64>> {
        PartialCirculantOperator::adjoint(self, w)
    }
}

impl MeasurementOperator for DMatrix<f64> {
    fn rows(&self) -> usize {
        self.nrows()
    }

    fn cols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                got: x.len(),
            });
        }
        Ok((self * DVector::from_column_slice(x)).as_slice().to_vec())
    }

    fn adjoint(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.nrows(),
                got: w.len(),
            });
        }
        Ok((self.transpose() * DVector::from_column_slice(w))
            .as_slice()
            .to_vec())
    }
}

/// Exponent of the residual constraint norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintNorm {
    #[serde(rename = "l2", alias = "2")]
    L2,
    #[serde(rename = "linf", alias = "inf")]
    Linf,
}

impl ConstraintNorm {
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            ConstraintNorm::L2 => norm_l2(v),
            ConstraintNorm::Linf => norm_linf(v),
        }
    }

    /// Norm of the dual exponent (q = 2 -> l2, q = inf -> l1).
    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        match self {
            ConstraintNorm::L2 => norm_l2(v),
            ConstraintNorm::Linf => norm_l1(v),
        }
    }

    /// Euclidean projection of z onto {v : ||v - center||_q <= radius}.
    pub fn project_ball(&self, z: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
        match self {
            ConstraintNorm::L2 => {
                let diff: Vec<f64> = z.iter().zip(center).map(|(a, b)| a - b).collect();
                let d = norm_l2(&diff);
                if d <= radius {
                    return z.to_vec();
                }
                let scale = radius / d;
                center
                    .iter()
                    .zip(&diff)
                    .map(|(c, d)| c + scale * d)
                    .collect()
            }
            ConstraintNorm::Linf => z
                .iter()
                .zip(center)
                .map(|(a, c)| c + (a - c).clamp(-radius, radius))
                .collect(),
        }
    }
}

impl std::str::FromStr for ConstraintNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "2" | "l2" => Ok(ConstraintNorm::L2),
            "inf" | "linf" | "infinity" => Ok(ConstraintNorm::Linf),
            other => Err(Error::InvalidArgument(format!(
                "constraint norm must be 2 or inf, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub q: ConstraintNorm,
    pub eta: f64,
    pub max_iters: usize,
    /// Feasibility tolerance on ||Bx - y||_q - eta, in y-normalized units.
    pub tol: f64,
    /// Duality-gap tolerance, relative to max(1, objective) in normalized
    /// units.
    pub gap_tol: f64,
    /// Convergence bookkeeping runs every this many iterations.
    pub check_every: usize,
    /// Power-iteration steps for the operator-norm estimate.
    pub power_iters: usize,
    /// sigma * tau = (step_ratio / ||B||)^2 unless overridden below; the
    /// sigma : tau balance additionally depends on q (see solve_bpdn).
    pub step_ratio: f64,
    pub sigma: Option<f64>,
    pub tau_step: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            q: ConstraintNorm::L2,
            eta: 0.0,
            max_iters: 50_000,
            tol: 1e-9,
            gap_tol: 1e-9,
            check_every: 16,
            power_iters: 50,
            step_ratio: 0.99,
            sigma: None,
            tau_step: None,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad eta {}", self.eta)));
        }
        if self.max_iters == 0 || self.check_every == 0 || self.power_iters == 0 {
            return Err(Error::InvalidArgument(
                "iteration counts must be positive".into(),
            ));
        }
        if !(self.tol > 0.0) || !(self.gap_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if !(self.step_ratio > 0.0 && self.step_ratio < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "step ratio must lie in (0, 1), got {}",
                self.step_ratio
            )));
        }
        for s in [self.sigma, self.tau_step].into_iter().flatten() {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!("bad step size {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    /// No iterate ever reached feasibility within tolerance.
    InfeasibleDegenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryResult {
    pub x_sharp: Vec<f64>,
    pub iterations: usize,
    /// ||B x_sharp - y||_q - eta in original units; <= tol * ||y||_2 when
    /// converged.
    pub constraint_residual: f64,
    /// ||x_sharp||_1.
    pub objective: f64,
    /// Primal objective minus the best dual lower bound, original units.
    pub gap_certificate: f64,
    pub status: SolveStatus,
    /// eta actually used (zero eta is nudged to 1e-12 ||y||_2 to keep the
    /// dual projection well-posed).
    pub eta_used: f64,
    /// Final dual iterate; scale-free, reusable for independent gap checks.
    pub dual: Vec<f64>,
    /// Best feasible objective recorded at each convergence check.
    #[serde(skip_serializing)]
    pub objective_trace: Vec<f64>,
}

/// Largest singular value of B by power iteration on B* B from a fixed
/// pseudorandom start; deterministic for a given operator shape.
pub fn estimate_operator_norm(b: &dyn MeasurementOperator, iters: usize) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let n = b.cols();
    if n == 0 || b.rows() == 0 {
        return Ok(0.0);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9e37_79b9_7f4a_7c15);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut lambda = 0.0;
    for _ in 0..iters {
        let next = b.adjoint(&b.apply(&v)?)?;
        lambda = norm_l2(&next);
        if lambda == 0.0 {
            return Ok(0.0);
        }
        v = next.iter().map(|x| x / lambda).collect();
    }
    Ok(lambda.sqrt())
}

fn soft_threshold(v: &[f64], t: f64) -> Vec<f64> {
    v.iter()
        .map(|&x| x.signum() * (x.abs() - t).max(0.0))
        .collect()
}

/// Best dual objective over the two sign choices of w after rescaling into
/// the dual-feasible set {w : ||B* w||_inf <= 1}; any such value lower-bounds
/// the optimum.
fn dual_lower_bound(
    q: ConstraintNorm,
    y: &[f64],
    eta: f64,
    w: &[f64],
    adjoint_w: &[f64],
) -> f64 {
    let scale = norm_linf(adjoint_w).max(1.0);
    let inner = dot(y, w) / scale;
    let penalty = eta * q.dual_norm(w) / scale;
    (-inner - penalty).max(inner - penalty)
}

fn trivial_result(n: usize, m: usize, eta: f64, residual: f64) -> RecoveryResult {
    RecoveryResult {
        x_sharp: vec![0.0; n],
        iterations: 0,
        constraint_residual: residual,
        objective: 0.0,
        gap_certificate: 0.0,
        status: SolveStatus::Converged,
        eta_used: eta,
        dual: vec![0.0; m],
        objective_trace: vec![0.0],
    }
}

/// Solves min ||z||_1 s.t. ||Bz - y||_q <= eta and returns the best iterate
/// by objective among those feasible within tolerance.
pub fn solve_bpdn(
    b: &dyn MeasurementOperator,
    y: &[f64],
    config: &SolverConfig,
) -> Result<RecoveryResult> {
    config.validate()?;
    let (m, n) = (b.rows(), b.cols());
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("measurement vector"));
    }

    let y_scale = norm_l2(y);
    let eta_used = if config.eta == 0.0 {
        1e-12 * y_scale
    } else {
        config.eta
    };
    // Zero rows, or the origin already feasible: x = 0 is optimal.
    if m == 0 {
        return Ok(trivial_result(n, m, eta_used, -eta_used));
    }
    if config.q.norm(y) <= eta_used {
        return Ok(trivial_result(n, m, eta_used, config.q.norm(y) - eta_used));
    }

    let opnorm = estimate_operator_norm(b, config.power_iters)?;
    if opnorm == 0.0 {
        return Err(Error::ZeroOperator);
    }
    // Safety margin: power iteration approaches ||B|| from below.
    let l = opnorm * 1.02;
    // Feasibility error decays like ||w*||^2 / (sigma k), and the box
    // constraint's dual variable travels much farther than the l2 ball's, so
    // q = inf gets a dual-weighted (still fixed) step balance.
    let kappa = match config.q {
        ConstraintNorm::L2 => 1.0,
        ConstraintNorm::Linf => 32.0,
    };
    let sigma = config.sigma.unwrap_or(config.step_ratio * kappa / l);
    let tau = config.tau_step.unwrap_or(config.step_ratio / (kappa * l));
    let product = sigma * tau * l * l;
    if product > 1.0 + 1e-12 {
        return Err(Error::StepSize { product });
    }

    // Normalized problem: y' = y / ||y||_2, eta' = eta / ||y||_2.
    let ys: Vec<f64> = y.iter().map(|v| v / y_scale).collect();
    let eta_n = eta_used / y_scale;

    let mut x = vec![0.0; n];
    let mut x_bar = x.clone();
    let mut w = vec![0.0; m];
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut lb_best = f64::NEG_INFINITY;
    let mut trace = Vec::new();
    let mut iterations = config.max_iters;
    let mut converged = false;

    for it in 1..=config.max_iters {
        // Dual ascent: w <- prox of the ball indicator's conjugate.
        let bx_bar = b.apply(&x_bar)?;
        let u: Vec<f64> = w.iter().zip(&bx_bar).map(|(wi, bi)| wi + sigma * bi).collect();
        let scaled: Vec<f64> = u.iter().map(|v| v / sigma).collect();
        let projected = config.q.project_ball(&scaled, &ys, eta_n);
        for ((wi, ui), pi) in w.iter_mut().zip(&u).zip(&projected) {
            *wi = ui - sigma * pi;
        }
        // Primal descent with over-relaxation x_bar = 2 x_new - x.
        let adj = b.adjoint(&w)?;
        let stepped: Vec<f64> = x.iter().zip(&adj).map(|(xi, ai)| xi - tau * ai).collect();
        let x_new = soft_threshold(&stepped, tau);
        for ((xb, xn), xo) in x_bar.iter_mut().zip(&x_new).zip(&x) {
            *xb = 2.0 * xn - xo;
        }
        x = x_new;

        if it % config.check_every == 0 || it == config.max_iters {
            let residual = {
                let bx = b.apply(&x)?;
                let diff: Vec<f64> = bx.iter().zip(&ys).map(|(a, b)| a - b).collect();
                config.q.norm(&diff)
            };
            if residual <= eta_n + config.tol {
                let obj = norm_l1(&x);
                if best.as_ref().is_none_or(|(o, _, _)| obj < *o) {
                    best = Some((obj, x.clone(), residual));
                }
            }
            lb_best = lb_best.max(dual_lower_bound(config.q, &ys, eta_n, &w, &adj));
            if let Some((obj, _, _)) = &best {
                trace.push(*obj);
                if obj - lb_best <= config.gap_tol * obj.max(1.0) {
                    iterations = it;
                    converged = true;
                    break;
                }
            }
        }
    }

    let (status, obj_n, x_n, res_n) = match best {
        Some((obj, xv, res)) => {
            let status = if converged {
                SolveStatus::Converged
            } else {
                SolveStatus::MaxIters
            };
            (status, obj, xv, res)
        }
        None => (
            SolveStatus::InfeasibleDegenerate,
            norm_l1(&x),
            x,
            f64::INFINITY,
        ),
    };
    let x_sharp: Vec<f64> = x_n.iter().map(|v| v * y_scale).collect();
    Ok(RecoveryResult {
        objective: obj_n * y_scale,
        constraint_residual: if res_n.is_finite() {
            (res_n - eta_n) * y_scale
        } else {
            f64::INFINITY
        },
        gap_certificate: (obj_n - lb_best).max(0.0) * y_scale,
        iterations,
        status,
        eta_used,
        dual: w,
        objective_trace: trace,
        x_sharp,
    })
}

/// Independent optimality check: recomputes the primal objective, the
/// constraint residual and a dual lower bound from scratch out of a result's
/// solution and final dual iterate.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub primal_objective: f64,
    pub dual_lower_bound: f64,
    pub gap: f64,
    pub tolerance: f64,
    /// ||B x_sharp - y||_q - eta_used.
    pub constraint_residual: f64,
    pub feasible: bool,
    pub certified: bool,
}

pub fn certify_optimality(
    b: &dyn MeasurementOperator,
    y: &[f64],
    config: &SolverConfig,
    result: &RecoveryResult,
) -> Result<GapReport> {
    let primal = norm_l1(&result.x_sharp);
    let bx = b.apply(&result.x_sharp)?;
    let diff: Vec<f64> = bx.iter().zip(y).map(|(a, b)| a - b).collect();
    let residual = config.q.norm(&diff) - result.eta_used;
    let feasible = residual <= config.tol * norm_l2(y).max(1.0);
    let lower = if result.dual.iter().all(|&v| v == 0.0) {
        0.0
    } else {
        let adj = b.adjoint(&result.dual)?;
        dual_lower_bound(config.q, y, result.eta_used, &result.dual, &adj).max(0.0)
    };
    let gap = primal - lower;
    let tolerance = 1e-5 * primal.max(1.0);
    Ok(GapReport {
        primal_objective: primal,
        dual_lower_bound: lower,
        gap,
        tolerance,
        constraint_residual: residual,
        feasible,
        certified: feasible && gap <= tolerance,
    })
}

/// Which normalization the cone constant tau is quoted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauNormalization {
    /// tau used as given.
    Direct,
    /// tau divided by m^{1/q} (so q = 2 rescales by 1/sqrt(m), q = inf not
    /// at all).
    PerMeasurement,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorBounds {
    pub c: f64,
    pub d: f64,
    /// C sigma_s + D sqrt(s) eta.
    pub l1: f64,
    /// C sigma_s / sqrt(s) + D eta.
    pub l2: f64,
}

/// Recovery error bounds under an lq noise constraint, from the cone
/// parameter nu and cone constant tau: C = (1+nu)^2/(1-nu) and
/// D = (3+nu)/(1-nu) * tau (tau optionally per-measurement normalized).
#[allow(clippy::too_many_arguments)]
pub fn predicted_error_bounds(
    nu: f64,
    tau: f64,
    s: usize,
    eta: f64,
    sigma_s: f64,
    m: usize,
    q: ConstraintNorm,
    normalization: TauNormalization,
) -> Result<ErrorBounds> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "nu must lie in (0, 1), got {nu}"
        )));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad tau {tau}")));
    }
    if s == 0 || m == 0 {
        return Err(Error::InvalidArgument("need s >= 1 and m >= 1".into()));
    }
    if !(eta >= 0.0) || !(sigma_s >= 0.0) {
        return Err(Error::InvalidArgument(
            "eta and sigma_s must be nonnegative".into(),
        ));
    }
    let tau_eff = match normalization {
        TauNormalization::Direct => tau,
        TauNormalization::PerMeasurement => match q {
            ConstraintNorm::L2 => tau / (m as f64).sqrt(),
            ConstraintNorm::Linf => tau,
        },
    };
    let c = (1.0 + nu).powi(2) / (1.0 - nu);
    let d = (3.0 + nu) / (1.0 - nu) * tau_eff;
    let sf = s as f64;
    Ok(ErrorBounds {
        c,
        d,
        l1: c * sigma_s + d * sf.sqrt() * eta,
        l2: c * sigma_s / sf.sqrt() + d * eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{derive_seed, sparse_gaussian_unit, SubgaussianEnsemble};
    use crate::measurement::SelectorMask;

    fn gaussian_partial(n: usize, m: usize, seed: u64) -> PartialCirculantOperator {
        let xi = SubgaussianEnsemble::Gaussian.sample(n, derive_seed(seed, 1));
        let mask = SelectorMask::from_target_m(n, m, derive_seed(seed, 2)).unwrap();
        PartialCirculantOperator::from_parts(&xi, mask).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let b = gaussian_partial(32, 16, 7);
        let m = b.m();
        let config = SolverConfig::default();
        let r = solve_bpdn(&b, &vec![0.0; m], &config).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(r.x_sharp.iter().all(|&v| v == 0.0));
        assert_eq!(r.iterations, 0);
        assert_eq!(r.gap_certificate, 0.0);
    }

    #[test]
    fn origin_feasible_when_eta_dominates() {
        let b = gaussian_partial(32, 16, 8);
        let y: Vec<f64> = (0..b.m()).map(|i| (i as f64 * 0.37).sin()).collect();
        let config = SolverConfig {
            eta: crate::vector::norm_l2(&y) + 0.1,
            ..SolverConfig::default()
        };
        let r = solve_bpdn(&b, &y, &config).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(r.x_sharp.iter().all(|&v| v == 0.0));
        assert!(r.constraint_residual <= 0.0);
    }

    #[test]
    fn recovers_sparse_signal_noiseless() {
        let n = 64;
        let b = gaussian_partial(n, 32, 11);
        let x = sparse_gaussian_unit(n, 3, derive_seed(11, 3)).unwrap();
        let y = MeasurementOperator::apply(&b, &x).unwrap();
        let config = SolverConfig::default();
        let r = solve_bpdn(&b, &y, &config).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        let err: Vec<f64> = r.x_sharp.iter().zip(&x).map(|(a, b)| a - b).collect();
        assert!(
            norm_l2(&err) <= 1e-5,
            "rel err {} too large",
            norm_l2(&err)
        );
        // Independent certificate agrees.
        let report = certify_optimality(&b, &y, &config, &r).unwrap();
        assert!(report.certified, "gap {} tol {}", report.gap, report.tolerance);
    }

    #[test]
    fn identity_operator_analytic_solution() {
        // B = I, eta = 0.25, q = 2: x = y shrunk toward the ball boundary.
        let b = DMatrix::<f64>::identity(8, 8);
        let y = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let config = SolverConfig {
            eta: 0.25,
            ..SolverConfig::default()
        };
        let r = solve_bpdn(&b, &y, &config).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!((r.x_sharp[0] - 0.75).abs() < 1e-6, "got {}", r.x_sharp[0]);
        assert!(r.x_sharp[1..].iter().all(|v| v.abs() < 1e-6));
        assert!((r.objective - 0.75).abs() < 1e-6);
    }

    #[test]
    fn scale_covariance() {
        let n = 64;
        let b = gaussian_partial(n, 40, 13);
        let x = sparse_gaussian_unit(n, 4, derive_seed(13, 3)).unwrap();
        let mut y = MeasurementOperator::apply(&b, &x).unwrap();
        // Perturb so eta > 0 matters.
        for (i, v) in y.iter_mut().enumerate() {
            *v += 1e-3 * ((i as f64) * 0.71).cos();
        }
        let eta = 0.05;
        let base = solve_bpdn(
            &b,
            &y,
            &SolverConfig {
                eta,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        let c = 37.5;
        let yc: Vec<f64> = y.iter().map(|v| c * v).collect();
        let scaled = solve_bpdn(
            &b,
            &yc,
            &SolverConfig {
                eta: c * eta,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        let num: f64 = base
            .x_sharp
            .iter()
            .zip(&scaled.x_sharp)
            .map(|(a, b)| (c * a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let den = c * norm_l2(&base.x_sharp);
        assert!(num / den < 1e-6, "covariance violated: {}", num / den);
    }

    #[test]
    fn best_iterate_objective_is_monotone() {
        let b = gaussian_partial(64, 32, 17);
        let x = sparse_gaussian_unit(64, 3, derive_seed(17, 3)).unwrap();
        let y = MeasurementOperator::apply(&b, &x).unwrap();
        let r = solve_bpdn(&b, &y, &SolverConfig::default()).unwrap();
        assert!(r.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn linf_quantization_keeps_truth_feasible() {
        let n = 64;
        let b = gaussian_partial(n, n, 19);
        let x = sparse_gaussian_unit(n, 4, derive_seed(19, 3)).unwrap();
        let exact = MeasurementOperator::apply(&b, &x).unwrap();
        let delta = 0.05;
        let y: Vec<f64> = exact.iter().map(|v| (v / delta).round() * delta).collect();
        let config = SolverConfig {
            q: ConstraintNorm::Linf,
            eta: delta / 2.0,
            ..SolverConfig::default()
        };
        let r = solve_bpdn(&b, &y, &config).unwrap();
        assert!(r.status != SolveStatus::InfeasibleDegenerate);
        // x itself is feasible, so the minimizer cannot have larger l1 norm.
        assert!(
            r.objective <= norm_l1(&x) + 1e-5,
            "objective {} exceeds truth {}",
            r.objective,
            norm_l1(&x)
        );
    }

    #[test]
    fn perturbed_solution_increases_gap() {
        let b = gaussian_partial(64, 32, 23);
        let x = sparse_gaussian_unit(64, 3, derive_seed(23, 3)).unwrap();
        let y = MeasurementOperator::apply(&b, &x).unwrap();
        let config = SolverConfig::default();
        let r = solve_bpdn(&b, &y, &config).unwrap();
        let clean = certify_optimality(&b, &y, &config, &r).unwrap();
        let mut bent = r.clone();
        // Bump an off-support coordinate so the objective strictly grows.
        let slot = bent
            .x_sharp
            .iter()
            .position(|v| v.abs() < 1e-8)
            .expect("sparse solution has zeros");
        bent.x_sharp[slot] += 0.1;
        let worse = certify_optimality(&b, &y, &config, &bent).unwrap();
        assert!(worse.gap > clean.gap + 0.09);
        assert!(!worse.certified);
    }

    #[test]
    fn rejects_bad_input() {
        let b = gaussian_partial(32, 16, 29);
        let m = b.m();
        let mut y = vec![1.0; m];
        y[0] = f64::NAN;
        assert!(matches!(
            solve_bpdn(&b, &y, &SolverConfig::default()),
            Err(Error::NonFinite(_))
        ));
        let zero = DMatrix::<f64>::zeros(4, 6);
        assert!(matches!(
            solve_bpdn(&zero, &[1.0, 1.0, 1.0, 1.0], &SolverConfig::default()),
            Err(Error::ZeroOperator)
        ));
        let overstep = SolverConfig {
            sigma: Some(10.0),
            tau_step: Some(10.0),
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve_bpdn(&b, &vec![1.0; m], &overstep),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn error_bound_arithmetic() {
        let b = predicted_error_bounds(
            0.5,
            1.0,
            4,
            0.0,
            0.0,
            16,
            ConstraintNorm::L2,
            TauNormalization::Direct,
        )
        .unwrap();
        assert!((b.c - 4.5).abs() < 1e-15);
        assert!((b.d - 7.0).abs() < 1e-15);
        assert_eq!(b.l1, 0.0);
        assert_eq!(b.l2, 0.0);
        let b2 = predicted_error_bounds(
            1.0 / 3.0,
            2.0,
            9,
            0.5,
            1.2,
            16,
            ConstraintNorm::L2,
            TauNormalization::Direct,
        )
        .unwrap();
        assert!((b2.c - 8.0 / 3.0).abs() < 1e-12);
        assert!((b2.d - 10.0).abs() < 1e-12);
        assert!((b2.l1 - (b2.c * 1.2 + 10.0 * 3.0 * 0.5)).abs() < 1e-12);
        assert!((b2.l2 - (b2.c * 1.2 / 3.0 + 10.0 * 0.5)).abs() < 1e-12);
        // Per-measurement normalization rescales tau for q = 2 only.
        let pm = predicted_error_bounds(
            0.5,
            1.0,
            4,
            1.0,
            0.0,
            16,
            ConstraintNorm::L2,
            TauNormalization::PerMeasurement,
        )
        .unwrap();
        assert!((pm.d - 7.0 / 4.0).abs() < 1e-12);
        let pminf = predicted_error_bounds(
            0.5,
            1.0,
            4,
            1.0,
            0.0,
            16,
            ConstraintNorm::Linf,
            TauNormalization::PerMeasurement,
        )
        .unwrap();
        assert!((pminf.d - 7.0).abs() < 1e-12);
        assert!(predicted_error_bounds(
            1.0,
            1.0,
            4,
            0.0,
            0.0,
            16,
            ConstraintNorm::L2,
            TauNormalization::Direct
        )
        .is_err());
    }

    #[test]
    fn operator_norm_matches_dense_svd() {
        let b = gaussian_partial(48, 24, 31);
        let mut dense = DMatrix::<f64>::zeros(b.m(), b.n());
        for j in 0..b.n() {
            let mut e = vec![0.0; b.n()];
            e[j] = 1.0;
            let col = MeasurementOperator::apply(&b, &e).unwrap();
            for (i, v) in col.iter().enumerate() {
                dense[(i, j)] = *v;
            }
        }
        let exact = dense.svd(false, false).singular_values[0];
        let est = estimate_operator_norm(&b, 200).unwrap();
        assert!(
            (est - exact).abs() <= 1e-6 * exact,
            "est {est} vs exact {exact}"
        );
    }
}
