//! Factored diagonal operators Gamma_v = sqrt(n) U D_{Wv} O built from three
//! Hadamard-type matrices. With the Fourier triple (U = inverse DFT,
//! W = O = DFT) the action on xi is exactly the circular convolution v * xi.
//!
//! Closed forms used throughout (U, W, O orthogonal/unitary):
//! - Hilbert-Schmidt norm: sqrt(n) ||v||_2
//! - operator norm: sqrt(n) ||Wv||_inf
//! - row norms: ||Gamma_v^* e_i||_2 <= beta_U ||v||_2

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::fft::complexify;
use super::hadamard::{HadamardKind, HadamardTypeMatrix};
use crate::error::{Error, Result};
use crate::vector::norm_l2;

/// Dimension cap for dense materialization.
pub const MATERIALIZE_CAP: usize = 512;

/// Relative tolerance on the imaginary residue when a real result is
/// extracted from the complex composition.
pub const GAMMA_RESIDUE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct GammaOperator {
    u: HadamardTypeMatrix,
    w: HadamardTypeMatrix,
    o: HadamardTypeMatrix,
    v: Vec<f64>,
    /// Diagonal D_{Wv}: complex for complex W.
    diag: Vec<Complex64>,
}

impl GammaOperator {
    pub fn new(
        u: HadamardTypeMatrix,
        w: HadamardTypeMatrix,
        o: HadamardTypeMatrix,
        v: &[f64],
    ) -> Result<Self> {
        let n = v.len();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "Gamma operator needs a non-empty generating vector".into(),
            ));
        }
        for h in [&u, &w, &o] {
            if h.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: h.n(),
                });
            }
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("Gamma generating vector"));
        }
        let diag = w.apply(&complexify(v));
        Ok(Self { u, w, o, v: v.to_vec(), diag })
    }

    /// The Fourier triple: U = inverse DFT, W = O = DFT. The composition is
    /// real on real inputs and equals circular convolution by `v`.
    pub fn fourier(v: &[f64]) -> Result<Self> {
        let n = v.len();
        Self::new(
            HadamardTypeMatrix::new(HadamardKind::InverseDft, n)?,
            HadamardTypeMatrix::new(HadamardKind::Dft, n)?,
            HadamardTypeMatrix::new(HadamardKind::Dft, n)?,
            v,
        )
    }

    pub fn from_kinds(kinds: [HadamardKind; 3], v: &[f64]) -> Result<Self> {
        let n = v.len();
        Self::new(
            HadamardTypeMatrix::new(kinds[0], n)?,
            HadamardTypeMatrix::new(kinds[1], n)?,
            HadamardTypeMatrix::new(kinds[2], n)?,
            v,
        )
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn u(&self) -> &HadamardTypeMatrix {
        &self.u
    }

    pub fn w(&self) -> &HadamardTypeMatrix {
        &self.w
    }

    pub fn o(&self) -> &HadamardTypeMatrix {
        &self.o
    }

    pub fn apply_complex(&self, z: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(z.len(), self.n(), "Gamma apply dimension");
        let mut t = self.o.apply(z);
        for (ti, di) in t.iter_mut().zip(&self.diag) {
            *ti *= di;
        }
        let mut out = self.u.apply(&t);
        let scale = (self.n() as f64).sqrt();
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }

    /// Real-input apply returning the real part; errors if the composition
    /// leaves an imaginary residue above `GAMMA_RESIDUE_TOL` relative to the
    /// natural output scale sqrt(n) ||v|| ||z||.
    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        let out = self.apply_complex(&complexify(z));
        let scale = (self.n() as f64).sqrt() * norm_l2(&self.v) * norm_l2(z);
        let residue = out.iter().map(|c| c.im * c.im).sum::<f64>().sqrt();
        if residue > GAMMA_RESIDUE_TOL * scale {
            return Err(Error::ComplexResidue {
                residue,
                tol: GAMMA_RESIDUE_TOL * scale,
            });
        }
        Ok(out.into_iter().map(|c| c.re).collect())
    }

    /// ||Gamma_v||_HS = sqrt(n) ||v||_2.
    pub fn hs_norm(&self) -> f64 {
        (self.n() as f64).sqrt() * norm_l2(&self.v)
    }

    /// ||Gamma_v||_{2->2} = sqrt(n) ||Wv||_inf.
    pub fn op_norm(&self) -> f64 {
        let dmax = self.diag.iter().map(|c| c.norm()).fold(0.0, f64::max);
        (self.n() as f64).sqrt() * dmax
    }

    /// Upper bound on every row norm: beta_U ||v||_2.
    pub fn row_norm_bound(&self) -> f64 {
        self.u.beta() * norm_l2(&self.v)
    }

    /// Effective rank d = (||.||_HS / ||.||_{2->2})^2 used by small-ball
    /// estimates.
    pub fn d_gamma(&self) -> f64 {
        let op = self.op_norm();
        if op == 0.0 {
            return 0.0;
        }
        let r = self.hs_norm() / op;
        r * r
    }
}

/// One-shot apply; prefer constructing a [`GammaOperator`] when the same `v`
/// is reused.
pub fn gamma_apply(
    u: &HadamardTypeMatrix,
    w: &HadamardTypeMatrix,
    o: &HadamardTypeMatrix,
    v: &[f64],
    z: &[f64],
) -> Result<Vec<f64>> {
    GammaOperator::new(*u, *w, *o, v)?.apply(z)
}

/// Dense n x n materialization (column j = Gamma e_j), capped at `cap`.
pub fn gamma_materialize(gamma: &GammaOperator, cap: usize) -> Result<DMatrix<Complex64>> {
    let n = gamma.n();
    if n > cap {
        return Err(Error::SizeCap {
            what: "Gamma materialization",
            got: n,
            cap,
        });
    }
    let mut cols = Vec::with_capacity(n);
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = Complex64::new(1.0, 0.0);
        cols.push(gamma.apply_complex(&e));
        e[j] = Complex64::new(0.0, 0.0);
    }
    Ok(DMatrix::from_fn(n, n, |i, j| cols[j][i]))
}
