use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

/// Unitary discrete Fourier transform of a fixed length.
///
/// `forward` applies `F = {exp(2πi jk/n)/√n}`, `inverse` applies `F*`. Any
/// length is supported (rustfft falls back to mixed-radix and Bluestein plans).
#[derive(Clone)]
pub struct UnitaryDft {
    len: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for UnitaryDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryDft").field("len", &self.len).finish()
    }
}

impl UnitaryDft {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "transform length must be positive");
        let mut planner = FftPlanner::new();
        // rustfft's "inverse" direction carries the positive exponent.
        let forward = planner.plan_fft(len, FftDirection::Inverse);
        let inverse = planner.plan_fft(len, FftDirection::Forward);
        Self {
            len,
            scale: 1.0 / (len as f64).sqrt(),
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
        buf.iter_mut().for_each(|x| *x *= self.scale);
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
        buf.iter_mut().for_each(|x| *x *= self.scale);
    }
}

/// Applies the unitary transform `F` to `v`.
pub fn fft_forward(v: &[Complex64]) -> Vec<Complex64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut out = v.to_vec();
    UnitaryDft::new(v.len()).forward_in_place(&mut out);
    out
}

/// Applies `F*`, the inverse of [`fft_forward`].
pub fn fft_inverse(v: &[Complex64]) -> Vec<Complex64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut out = v.to_vec();
    UnitaryDft::new(v.len()).inverse_in_place(&mut out);
    out
}
