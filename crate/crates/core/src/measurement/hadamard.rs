//! Hadamard-type matrices: orthogonal or unitary with all entries bounded by
//! beta/sqrt(n) in modulus. Four kinds are supported, each with an
//! O(n log n) apply:
//!
//! - `Dft`: the unitary DFT, rows n^{-1/2} e^{-2 pi i jk/n}, beta = 1.
//! - `InverseDft`: its conjugate (also unitary), beta = 1.
//! - `WalshHadamard`: Sylvester-ordered Walsh-Hadamard scaled by n^{-1/2},
//!   requires n to be a power of two, beta = 1.
//! - `Dct`: the orthonormal DCT-II, beta = sqrt(2).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::{fft_forward, fft_inverse};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HadamardKind {
    Dft,
    InverseDft,
    WalshHadamard,
    Dct,
}

impl HadamardKind {
    pub fn name(self) -> &'static str {
        match self {
            HadamardKind::Dft => "dft",
            HadamardKind::InverseDft => "inverse-dft",
            HadamardKind::WalshHadamard => "walsh-hadamard",
            HadamardKind::Dct => "dct",
        }
    }
}

impl std::str::FromStr for HadamardKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dft" => Ok(HadamardKind::Dft),
            "inverse-dft" => Ok(HadamardKind::InverseDft),
            "walsh-hadamard" | "wht" => Ok(HadamardKind::WalshHadamard),
            "dct" => Ok(HadamardKind::Dct),
            other => Err(Error::InvalidArgument(format!(
                "unknown Hadamard-type kind: {other}"
            ))),
        }
    }
}

/// An n x n Hadamard-type matrix, stored as (kind, dimension) only; the
/// action is computed by fast transforms and single entries on demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HadamardTypeMatrix {
    kind: HadamardKind,
    n: usize,
}

impl HadamardTypeMatrix {
    pub fn new(kind: HadamardKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "Hadamard-type dimension must be positive".into(),
            ));
        }
        if kind == HadamardKind::WalshHadamard && !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "Walsh-Hadamard requires a power-of-two dimension, got {n}"
            )));
        }
        Ok(Self { kind, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> HadamardKind {
        self.kind
    }

    /// Entry modulus bound: max |O_ij| <= beta / sqrt(n).
    pub fn beta(&self) -> f64 {
        match self.kind {
            HadamardKind::Dft | HadamardKind::InverseDft | HadamardKind::WalshHadamard => 1.0,
            HadamardKind::Dct => std::f64::consts::SQRT_2,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.kind, HadamardKind::Dft | HadamardKind::InverseDft)
    }

    pub fn apply(&self, z: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(z.len(), self.n, "Hadamard-type apply dimension");
        let scale = 1.0 / (self.n as f64).sqrt();
        match self.kind {
            HadamardKind::Dft => {
                let mut buf = z.to_vec();
                fft_forward(&mut buf);
                buf.iter_mut().for_each(|v| *v *= scale);
                buf
            }
            HadamardKind::InverseDft => {
                let mut buf = z.to_vec();
                fft_inverse(&mut buf);
                buf.iter_mut().for_each(|v| *v *= scale);
                buf
            }
            HadamardKind::WalshHadamard => {
                let mut buf = z.to_vec();
                fwht(&mut buf);
                buf.iter_mut().for_each(|v| *v *= scale);
                buf
            }
            HadamardKind::Dct => apply_split_real(z, dct2_ortho),
        }
    }

    /// Conjugate-transpose apply. All four kinds are orthogonal/unitary, so
    /// this is also the inverse.
    pub fn apply_adjoint(&self, z: &[Complex64]) -> Vec<Complex64> {
        match self.kind {
            HadamardKind::Dft => HadamardTypeMatrix {
                kind: HadamardKind::InverseDft,
                n: self.n,
            }
            .apply(z),
            HadamardKind::InverseDft => HadamardTypeMatrix {
                kind: HadamardKind::Dft,
                n: self.n,
            }
            .apply(z),
            HadamardKind::WalshHadamard => self.apply(z),
            HadamardKind::Dct => {
                assert_eq!(z.len(), self.n, "Hadamard-type apply dimension");
                apply_split_real(z, dct3_ortho)
            }
        }
    }

    /// Single entry (row i, column j), for materialization and oracles.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let n = self.n;
        let scale = 1.0 / (n as f64).sqrt();
        match self.kind {
            HadamardKind::Dft | HadamardKind::InverseDft => {
                // Reduce i*j mod n first so the angle stays well conditioned.
                let prod = ((i as u128 * j as u128) % n as u128) as f64;
                let mut angle = -2.0 * std::f64::consts::PI * prod / n as f64;
                if self.kind == HadamardKind::InverseDft {
                    angle = -angle;
                }
                Complex64::from_polar(scale, angle)
            }
            HadamardKind::WalshHadamard => {
                let sign = if (i & j).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                Complex64::new(sign * scale, 0.0)
            }
            HadamardKind::Dct => {
                let v = if i == 0 {
                    (1.0 / n as f64).sqrt()
                } else {
                    (2.0 / n as f64).sqrt()
                        * (std::f64::consts::PI * (2 * j + 1) as f64 * i as f64
                            / (2.0 * n as f64))
                            .cos()
                };
                Complex64::new(v, 0.0)
            }
        }
    }

    /// Column i as a dense vector (equals the apply of the i-th unit vector).
    pub fn column(&self, i: usize) -> Vec<Complex64> {
        (0..self.n).map(|row| self.entry(row, i)).collect()
    }
}

/// In-place Walsh-Hadamard butterflies, Sylvester (natural) ordering.
fn fwht(buf: &mut [Complex64]) {
    let n = buf.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(h * 2) {
            for i in block..block + h {
                let a = buf[i];
                let b = buf[i + h];
                buf[i] = a + b;
                buf[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Applies a real-to-real transform to the real and imaginary parts
/// separately; real matrices act on complex vectors componentwise.
fn apply_split_real(z: &[Complex64], f: fn(&[f64]) -> Vec<f64>) -> Vec<Complex64> {
    let re: Vec<f64> = z.iter().map(|v| v.re).collect();
    let im: Vec<f64> = z.iter().map(|v| v.im).collect();
    let fre = f(&re);
    let fim = f(&im);
    fre.into_iter()
        .zip(fim)
        .map(|(a, b)| Complex64::new(a, b))
        .collect()
}

/// Orthonormal DCT-II via a zero-padded length-2n FFT:
/// sum_j x_j cos(pi (2j+1) k / (2n)) = Re(e^{-i pi k/(2n)} Z_k) with
/// Z = FFT_{2n}([x, 0]).
fn dct2_ortho(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 1 {
        return vec![x[0]];
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
    for (j, &v) in x.iter().enumerate() {
        buf[j] = Complex64::new(v, 0.0);
    }
    fft_forward(&mut buf);
    let c0 = (1.0 / n as f64).sqrt();
    let ck = (2.0 / n as f64).sqrt();
    (0..n)
        .map(|k| {
            let phase = Complex64::from_polar(
                1.0,
                -std::f64::consts::PI * k as f64 / (2.0 * n as f64),
            );
            let raw = (buf[k] * phase).re;
            raw * if k == 0 { c0 } else { ck }
        })
        .collect()
}

/// Transpose (orthonormal DCT-III) via the same trick:
/// sum_k c_k y_k cos(pi (2j+1) k / (2n)) = Re(FFT_{2n}(t)_j) with
/// t_k = c_k y_k e^{-i pi k/(2n)} zero-padded.
fn dct3_ortho(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n == 1 {
        return vec![y[0]];
    }
    let c0 = (1.0 / n as f64).sqrt();
    let ck = (2.0 / n as f64).sqrt();
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
    for (k, &v) in y.iter().enumerate() {
        let c = if k == 0 { c0 } else { ck };
        buf[k] = Complex64::from_polar(
            c * v,
            -std::f64::consts::PI * k as f64 / (2.0 * n as f64),
        );
    }
    fft_forward(&mut buf);
    (0..n).map(|j| buf[j].re).collect()
}
