//! Measurement operators: circular convolution, Bernoulli row selectors and
//! the partial circulant operators built from them.
//!
//! Index convention: the API follows the 1-based definition
//! (x * xi)_k = sum_j x_j xi_{((k - j) mod n) + 1}; storage is 0-based, so
//! out[k] = sum_j x[j] xi[(k - j) mod n]. Convolving the first unit vector
//! with xi returns xi.

pub(crate) mod fft;
mod gamma;
mod hadamard;

pub use gamma::{
    gamma_apply, gamma_materialize, GammaOperator, GAMMA_RESIDUE_TOL, MATERIALIZE_CAP,
};
pub use hadamard::{HadamardKind, HadamardTypeMatrix};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::norm_l2;
use fft::{complexify, fft_forward, fft_inverse};

/// Naive convolution is quadratic; cap the dimension it accepts.
pub const NAIVE_CONVOLVE_CAP: usize = 4096;

/// Relative tolerance on the imaginary residue of the FFT convolution path.
pub const CONVOLVE_RESIDUE_TOL: f64 = 1e-10;

fn check_pair(x: &[f64], xi: &[f64]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::InvalidArgument(
            "convolution needs at least one entry".into(),
        ));
    }
    if x.len() != xi.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: xi.len(),
        });
    }
    Ok(x.len())
}

/// Circular convolution via FFT: out = ifft(fft(x) .* fft(xi)) / n. The
/// imaginary residue must stay below `CONVOLVE_RESIDUE_TOL * ||x|| ||xi||`.
pub fn circular_convolve(x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    let n = check_pair(x, xi)?;
    let mut fx = complexify(x);
    let mut fxi = complexify(xi);
    fft_forward(&mut fx);
    fft_forward(&mut fxi);
    for (a, b) in fx.iter_mut().zip(&fxi) {
        *a *= b;
    }
    fft_inverse(&mut fx);
    let scale = 1.0 / n as f64;
    let residue = fx
        .iter()
        .map(|c| (c.im * scale) * (c.im * scale))
        .sum::<f64>()
        .sqrt();
    let tol = CONVOLVE_RESIDUE_TOL * norm_l2(x) * norm_l2(xi);
    if residue > tol {
        return Err(Error::ComplexResidue { residue, tol });
    }
    Ok(fx.into_iter().map(|c| c.re * scale).collect())
}

/// Quadratic reference convolution, usable up to `NAIVE_CONVOLVE_CAP`.
pub fn circular_convolve_naive(x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    let n = check_pair(x, xi)?;
    if n > NAIVE_CONVOLVE_CAP {
        return Err(Error::SizeCap {
            what: "naive convolution",
            got: n,
            cap: NAIVE_CONVOLVE_CAP,
        });
    }
    let mut out = vec![0.0; n];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &xj) in x.iter().enumerate() {
            acc += xj * xi[(k + n - j) % n];
        }
        *o = acc;
    }
    Ok(out)
}

/// Circulant operator generated by `xi`, with the DFT spectrum cached so an
/// apply costs one forward and one inverse transform.
#[derive(Debug, Clone)]
pub struct CirculantOperator {
    xi: Vec<f64>,
    spectrum: Vec<Complex64>,
}

impl CirculantOperator {
    pub fn new(xi: &[f64]) -> Result<Self> {
        if xi.is_empty() {
            return Err(Error::InvalidArgument(
                "circulant generator must be non-empty".into(),
            ));
        }
        if !xi.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("circulant generator"));
        }
        let mut spectrum = complexify(xi);
        fft_forward(&mut spectrum);
        Ok(Self {
            xi: xi.to_vec(),
            spectrum,
        })
    }

    pub fn n(&self) -> usize {
        self.xi.len()
    }

    pub fn generator(&self) -> &[f64] {
        &self.xi
    }

    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    /// x -> x * xi.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_with(x, false)
    }

    /// Adjoint: correlation with the time-reversed generator, computed as
    /// ifft(fft(z) .* conj(spectrum)) / n.
    pub fn apply_adjoint(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.apply_with(z, true)
    }

    fn apply_with(&self, x: &[f64], conjugate: bool) -> Result<Vec<f64>> {
        let n = check_pair(x, &self.xi)?;
        let mut fx = complexify(x);
        fft_forward(&mut fx);
        for (a, b) in fx.iter_mut().zip(&self.spectrum) {
            *a *= if conjugate { b.conj() } else { *b };
        }
        fft_inverse(&mut fx);
        let scale = 1.0 / n as f64;
        let residue = fx
            .iter()
            .map(|c| (c.im * scale) * (c.im * scale))
            .sum::<f64>()
            .sqrt();
        let tol = CONVOLVE_RESIDUE_TOL * norm_l2(x) * norm_l2(&self.xi);
        if residue > tol {
            return Err(Error::ComplexResidue { residue, tol });
        }
        Ok(fx.into_iter().map(|c| c.re * scale).collect())
    }
}

/// Bernoulli(delta) row selector. Each index enters independently with
/// probability delta, so |omega| concentrates around delta * n but is not
/// fixed. An empty selection is allowed and propagates as length-0
/// measurements downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorMask {
    pub n: usize,
    pub delta: f64,
    pub seed: u64,
    omega: Vec<usize>,
}

impl SelectorMask {
    pub fn bernoulli(n: usize, delta: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "selector dimension must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidArgument(format!(
                "selection probability must lie in [0, 1], got {delta}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega = (0..n).filter(|_| rng.gen::<f64>() < delta).collect();
        Ok(Self {
            n,
            delta,
            seed,
            omega,
        })
    }

    /// Selector targeting `m` rows in expectation: delta = m / n.
    pub fn from_target_m(n: usize, m: usize, seed: u64) -> Result<Self> {
        if m > n {
            return Err(Error::InvalidArgument(format!(
                "target row count {m} exceeds dimension {n}"
            )));
        }
        Self::bernoulli(n, m as f64 / n as f64, seed)
    }

    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Invariants checked on deserialized masks: sorted unique indices below
    /// n, delta in [0, 1].
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("selector with n = 0".into()));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidArgument(format!(
                "selector delta {} out of range",
                self.delta
            )));
        }
        if !self.omega.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "selector indices must be strictly increasing".into(),
            ));
        }
        if self.omega.last().is_some_and(|&last| last >= self.n) {
            return Err(Error::InvalidArgument(
                "selector index out of range".into(),
            ));
        }
        Ok(())
    }
}

/// Rows of a circulant operator restricted to a selector mask.
#[derive(Debug, Clone)]
pub struct PartialCirculantOperator {
    circ: CirculantOperator,
    mask: SelectorMask,
}

impl PartialCirculantOperator {
    pub fn new(circ: CirculantOperator, mask: SelectorMask) -> Result<Self> {
        if circ.n() != mask.n {
            return Err(Error::DimensionMismatch {
                expected: circ.n(),
                got: mask.n,
            });
        }
        mask.validate()?;
        Ok(Self { circ, mask })
    }

    pub fn from_parts(xi: &[f64], mask: SelectorMask) -> Result<Self> {
        Self::new(CirculantOperator::new(xi)?, mask)
    }

    pub fn n(&self) -> usize {
        self.circ.n()
    }

    pub fn m(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &SelectorMask {
        &self.mask
    }

    pub fn circulant(&self) -> &CirculantOperator {
        &self.circ
    }

    /// x -> P_Omega (x * xi); length |Omega| (possibly zero).
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let full = self.circ.apply(x)?;
        Ok(self.mask.omega().iter().map(|&i| full[i]).collect())
    }

    /// Adjoint: zero-fill onto Omega, then correlate with the time-reversed
    /// generator.
    pub fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.mask.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mask.len(),
                got: y.len(),
            });
        }
        let n = self.n();
        if y.is_empty() {
            return Ok(vec![0.0; n]);
        }
        let mut full = vec![0.0; n];
        for (&i, &v) in self.mask.omega().iter().zip(y) {
            full[i] = v;
        }
        self.circ.apply_adjoint(&full)
    }
}
