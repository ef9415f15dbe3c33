//! End-to-end recovery experiments: seeded single trials, phase-diagram
//! sweeps over (s, m) grids, bisection for the minimal working m, and
//! noise-robustness sweeps, all with CSV emission.
//!
//! Reproducibility contract: every random object is drawn from a stream
//! derived from the master seed with [`derive_seed`], trials aggregate in
//! index order, and floats are written with shortest-roundtrip formatting,
//! so identical configs produce bit-identical CSV and JSON.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{derive_seed, sparse_gaussian_unit, SubgaussianEnsemble};
use crate::measurement::{PartialCirculantOperator, SelectorMask};
use crate::par;
use crate::solver::{
    predicted_error_bounds, solve_bpdn, ConstraintNorm, SolveStatus, SolverConfig,
    TauNormalization,
};
use crate::stats;
use crate::vector::{norm_l1, norm_l2};

/// Relative l2 error at or below which a trial counts as exact recovery.
pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 1e-4;

/// Reference cone parameters for the advisory per-trial error bounds;
/// certified runs substitute exact constants instead.
const REPORT_NU: f64 = 0.5;
const REPORT_TAU: f64 = 1.0;

fn default_threshold() -> f64 {
    DEFAULT_SUCCESS_THRESHOLD
}

fn default_ensemble() -> SubgaussianEnsemble {
    SubgaussianEnsemble::Gaussian
}

fn default_q() -> ConstraintNorm {
    ConstraintNorm::L2
}

/// Noise drawn uniformly from the lq-sphere of radius eta (exactly
/// ||e||_q = eta): a normalized Gaussian direction for q = 2; a uniform box
/// sample with one uniformly chosen coordinate pushed to +-eta for q = inf.
pub fn noise_on_sphere(m: usize, q: ConstraintNorm, eta: f64, seed: u64) -> Vec<f64> {
    if eta == 0.0 || m == 0 {
        return vec![0.0; m];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match q {
        ConstraintNorm::L2 => {
            let g: Vec<f64> = (0..m)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let l2 = norm_l2(&g);
            if l2 == 0.0 {
                let mut e = vec![0.0; m];
                e[0] = eta;
                return e;
            }
            g.iter().map(|v| eta * v / l2).collect()
        }
        ConstraintNorm::Linf => {
            let mut e: Vec<f64> = (0..m).map(|_| rng.gen_range(-eta..=eta)).collect();
            let k = rng.gen_range(0..m);
            e[k] = if rng.gen::<bool>() { eta } else { -eta };
            e
        }
    }
}

/// Rounds each measurement to the nearest multiple of `step`.
pub fn quantize(values: &[f64], step: f64) -> Vec<f64> {
    values.iter().map(|v| (v / step).round() * step).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialParams {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    #[serde(default = "default_ensemble")]
    pub ensemble: SubgaussianEnsemble,
    #[serde(default = "default_q")]
    pub q: ConstraintNorm,
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    /// Iteration/tolerance knobs for the underlying solves; q and eta always
    /// come from the trial parameters themselves.
    #[serde(default)]
    pub solver: Option<SolverConfig>,
}

impl TrialParams {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.s >= self.n || self.m > self.n {
            return Err(Error::InvalidArgument(format!(
                "need s < n and m <= n, got n = {}, m = {}, s = {}",
                self.n, self.m, self.s
            )));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad eta {}", self.eta)));
        }
        if !(self.success_threshold > 0.0) {
            return Err(Error::InvalidArgument(
                "success threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub n: usize,
    pub m_target: usize,
    /// Realized |Omega| of the Bernoulli selector.
    pub m_realized: usize,
    pub s: usize,
    pub seed: u64,
    pub abs_l1: f64,
    pub abs_l2: f64,
    /// Relative to ||x||; equal to the absolute error when x = 0.
    pub rel_l1: f64,
    pub rel_l2: f64,
    pub iterations: usize,
    pub converged: bool,
    pub success: bool,
    pub objective: f64,
    /// Advisory bounds at the reference (nu, tau), sigma_s = 0, noise eta.
    pub predicted_l1: Option<f64>,
    pub predicted_l2: Option<f64>,
}

/// One complete recovery experiment: draw generator, selector, signal and
/// noise from streams derived off `seed`, solve, and score the outcome.
/// Solver non-convergence is a recorded failure, not an error.
pub fn run_trial(params: &TrialParams, seed: u64) -> Result<TrialRecord> {
    params.validate()?;
    let (n, s) = (params.n, params.s);
    let xi = params.ensemble.sample(n, derive_seed(seed, 1));
    let mask = SelectorMask::from_target_m(n, params.m, derive_seed(seed, 2))?;
    let x = sparse_gaussian_unit(n, s, derive_seed(seed, 3))?;
    let b = PartialCirculantOperator::from_parts(&xi, mask)?;
    let m_realized = b.m();
    let mut y = b.apply(&x)?;
    let e = noise_on_sphere(m_realized, params.q, params.eta, derive_seed(seed, 4));
    for (yi, ei) in y.iter_mut().zip(&e) {
        *yi += ei;
    }
    let config = SolverConfig {
        q: params.q,
        eta: params.eta,
        ..params.solver.clone().unwrap_or_default()
    };
    let result = solve_bpdn(&b, &y, &config)?;
    let diff: Vec<f64> = x.iter().zip(&result.x_sharp).map(|(a, b)| a - b).collect();
    let (abs_l1, abs_l2) = (norm_l1(&diff), norm_l2(&diff));
    let (x_l1, x_l2) = (norm_l1(&x), norm_l2(&x));
    let rel_l1 = if x_l1 > 0.0 { abs_l1 / x_l1 } else { abs_l1 };
    let rel_l2 = if x_l2 > 0.0 { abs_l2 / x_l2 } else { abs_l2 };
    let converged = result.status == SolveStatus::Converged;
    let predicted = (s >= 1 && m_realized >= 1)
        .then(|| {
            predicted_error_bounds(
                REPORT_NU,
                REPORT_TAU,
                s,
                params.eta,
                0.0,
                m_realized,
                params.q,
                TauNormalization::PerMeasurement,
            )
            .ok()
        })
        .flatten();
    Ok(TrialRecord {
        n,
        m_target: params.m,
        m_realized,
        s,
        seed,
        abs_l1,
        abs_l2,
        rel_l1,
        rel_l2,
        iterations: result.iterations,
        converged,
        success: converged && rel_l2 <= params.success_threshold,
        objective: result.objective,
        predicted_l1: predicted.map(|b| b.l1),
        predicted_l2: predicted.map(|b| b.l2),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub s_grid: Vec<usize>,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    #[serde(default = "default_ensemble")]
    pub ensemble: SubgaussianEnsemble,
    #[serde(default = "default_q")]
    pub q: ConstraintNorm,
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.s_grid.is_empty() || self.m_grid.is_empty() {
            return Err(Error::InvalidArgument("empty experiment grid".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("need at least one trial".into()));
        }
        for &s in &self.s_grid {
            if s >= self.n {
                return Err(Error::InvalidArgument(format!(
                    "sparsity {s} not below n = {}",
                    self.n
                )));
            }
        }
        for &m in &self.m_grid {
            if m > self.n {
                return Err(Error::InvalidArgument(format!(
                    "row target {m} exceeds n = {}",
                    self.n
                )));
            }
        }
        Ok(())
    }

    fn trial_params(&self, s: usize, m: usize) -> TrialParams {
        TrialParams {
            n: self.n,
            m,
            s,
            ensemble: self.ensemble,
            q: self.q,
            eta: self.eta,
            success_threshold: self.success_threshold,
            solver: self.solver.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub trials: usize,
    pub successes: usize,
    pub median_rel_l2: f64,
    pub median_rel_l1: f64,
    pub mean_iters: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseDiagram {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Row order: s_grid outer, m_grid inner.
    pub cells: Vec<CellSummary>,
}

/// Full (s, m) grid sweep; trials fan out in parallel, aggregation is
/// sequential in index order so results are bit-stable.
pub fn run_phase_diagram(config: &ExperimentConfig) -> Result<PhaseDiagram> {
    config.validate()?;
    let m_len = config.m_grid.len();
    let cells_count = config.s_grid.len() * m_len;
    let trials = config.trials;
    let records = par::try_map_indexed(cells_count * trials, |idx| {
        let cell = idx / trials;
        let t = idx % trials;
        let params = config.trial_params(config.s_grid[cell / m_len], config.m_grid[cell % m_len]);
        let cell_seed = derive_seed(config.seed, cell as u64);
        run_trial(&params, derive_seed(cell_seed, t as u64))
    })?;
    let cells = (0..cells_count)
        .map(|cell| {
            let recs = &records[cell * trials..(cell + 1) * trials];
            let rel_l2: Vec<f64> = recs.iter().map(|r| r.rel_l2).collect();
            let rel_l1: Vec<f64> = recs.iter().map(|r| r.rel_l1).collect();
            CellSummary {
                n: config.n,
                m: config.m_grid[cell % m_len],
                s: config.s_grid[cell / m_len],
                trials,
                successes: recs.iter().filter(|r| r.success).count(),
                median_rel_l2: stats::median(&rel_l2),
                median_rel_l1: stats::median(&rel_l1),
                mean_iters: recs.iter().map(|r| r.iterations as f64).sum::<f64>()
                    / trials as f64,
                seed: derive_seed(config.seed, cell as u64),
            }
        })
        .collect();
    Ok(PhaseDiagram {
        n: config.n,
        trials,
        seed: config.seed,
        cells,
    })
}

/// CSV with the exact column contract used by downstream tooling.
pub fn phase_csv(diagram: &PhaseDiagram) -> String {
    let mut out = String::from("n,m,s,trials,successes,median_rel_l2,median_rel_l1,mean_iters,seed\n");
    for c in &diagram.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            c.n,
            c.m,
            c.s,
            c.trials,
            c.successes,
            c.median_rel_l2,
            c.median_rel_l1,
            c.mean_iters,
            c.seed
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinMConfig {
    pub n: usize,
    pub s: usize,
    pub target_rate: f64,
    /// Confirmation trials at the returned m; bisection probes use half.
    pub trials: usize,
    #[serde(default = "default_ensemble")]
    pub ensemble: SubgaussianEnsemble,
    #[serde(default = "default_q")]
    pub q: ConstraintNorm,
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeRecord {
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinMResult {
    pub n: usize,
    pub s: usize,
    pub target_rate: f64,
    pub m_star: usize,
    /// Rate at m_star with the full confirmation trial count.
    pub confirmed_rate: f64,
    pub confirmed: bool,
    /// Even m = n missed the target during bisection.
    pub unreached: bool,
    /// Probes in the order they were made.
    pub probes: Vec<ProbeRecord>,
    pub seed: u64,
}

/// Bisection for the smallest m whose empirical success rate reaches the
/// target. Probes run at half the trial budget; the endpoint is re-measured
/// at the full budget (its streams extend the probe's, so the probe trials
/// are a prefix).
pub fn estimate_min_m(config: &MinMConfig) -> Result<MinMResult> {
    if !(config.target_rate > 0.0 && config.target_rate < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target rate must lie in (0, 1), got {}",
            config.target_rate
        )));
    }
    if config.trials < 2 {
        return Err(Error::InvalidArgument("need at least 2 trials".into()));
    }
    let probe_trials = config.trials / 2;
    let mut probes = Vec::new();
    let rate_at = |m: usize, trials: usize, probes: &mut Vec<ProbeRecord>| -> Result<f64> {
        let params = TrialParams {
            n: config.n,
            m,
            s: config.s,
            ensemble: config.ensemble,
            q: config.q,
            eta: config.eta,
            success_threshold: config.success_threshold,
            solver: config.solver.clone(),
        };
        let m_seed = derive_seed(config.seed, m as u64);
        let recs = par::try_map_indexed(trials, |t| {
            run_trial(&params, derive_seed(m_seed, t as u64))
        })?;
        let successes = recs.iter().filter(|r| r.success).count();
        probes.push(ProbeRecord {
            m,
            trials,
            successes,
        });
        Ok(successes as f64 / trials as f64)
    };

    let mut unreached = false;
    if rate_at(config.n, probe_trials, &mut probes)? < config.target_rate {
        unreached = true;
    }
    let m_star = if unreached {
        config.n
    } else {
        let (mut lo, mut hi) = (config.s.max(1), config.n);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if rate_at(mid, probe_trials, &mut probes)? >= config.target_rate {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    };
    let confirmed_rate = rate_at(m_star, config.trials, &mut probes)?;
    Ok(MinMResult {
        n: config.n,
        s: config.s,
        target_rate: config.target_rate,
        m_star,
        confirmed_rate,
        confirmed: confirmed_rate >= config.target_rate,
        unreached,
        probes,
        seed: config.seed,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSweepConfig {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub eta_grid: Vec<f64>,
    pub trials: usize,
    #[serde(default = "default_ensemble")]
    pub ensemble: SubgaussianEnsemble,
    #[serde(default = "default_q")]
    pub q: ConstraintNorm,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseSweepReport {
    pub n: usize,
    pub m_realized: usize,
    pub s: usize,
    pub q: ConstraintNorm,
    pub trials: usize,
    pub etas: Vec<f64>,
    /// Median ||x - x_sharp||_2 per eta (x is unit-normalized, so these are
    /// also relative errors).
    pub median_l2: Vec<f64>,
    /// Least-squares slope of median error vs eta through the origin.
    pub slope: f64,
    pub seed: u64,
}

/// Noise robustness on one fixed instance (xi, Omega, x): only the noise is
/// redrawn, per eta and per trial.
pub fn run_noise_sweep(config: &NoiseSweepConfig) -> Result<NoiseSweepReport> {
    if config.eta_grid.is_empty()
        || config
            .eta_grid
            .iter()
            .any(|e| !(*e >= 0.0) || !e.is_finite())
    {
        return Err(Error::InvalidArgument("bad eta grid".into()));
    }
    if config.trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let n = config.n;
    let xi = config.ensemble.sample(n, derive_seed(config.seed, 1));
    let mask = SelectorMask::from_target_m(n, config.m, derive_seed(config.seed, 2))?;
    let x = sparse_gaussian_unit(n, config.s, derive_seed(config.seed, 3))?;
    let b = PartialCirculantOperator::from_parts(&xi, mask)?;
    let m_realized = b.m();
    let clean = b.apply(&x)?;
    let noise_stream = derive_seed(config.seed, 5);

    let trials = config.trials;
    let errors = par::try_map_indexed(config.eta_grid.len() * trials, |idx| -> Result<f64> {
        let eta = config.eta_grid[idx / trials];
        let e = noise_on_sphere(
            m_realized,
            config.q,
            eta,
            derive_seed(noise_stream, idx as u64),
        );
        let y: Vec<f64> = clean.iter().zip(&e).map(|(a, b)| a + b).collect();
        let solver = SolverConfig {
            q: config.q,
            eta,
            ..config.solver.clone().unwrap_or_default()
        };
        let result = solve_bpdn(&b, &y, &solver)?;
        let diff: Vec<f64> = x.iter().zip(&result.x_sharp).map(|(a, b)| a - b).collect();
        Ok(norm_l2(&diff))
    })?;
    let median_l2: Vec<f64> = (0..config.eta_grid.len())
        .map(|ei| stats::median(&errors[ei * trials..(ei + 1) * trials]))
        .collect();
    let points: Vec<(f64, f64)> = config
        .eta_grid
        .iter()
        .copied()
        .zip(median_l2.iter().copied())
        .collect();
    let slope = stats::slope_through_origin(&points);
    Ok(NoiseSweepReport {
        n,
        m_realized,
        s: config.s,
        q: config.q,
        trials,
        etas: config.eta_grid.clone(),
        median_l2,
        slope,
        seed: config.seed,
    })
}

pub fn noise_csv(report: &NoiseSweepReport) -> String {
    let mut out = String::from("eta,median_l2\n");
    for (eta, med) in report.etas.iter().zip(&report.median_l2) {
        out.push_str(&format!("{eta},{med}\n"));
    }
    out
}
