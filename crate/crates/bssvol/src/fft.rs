//! Frequency-domain evaluation of the hybrid scheme's Riemann sum.

use std::sync::{Arc, Mutex};

use bssvol_core::simulate::Convolution;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// [`Convolution`] via zero-padded FFTs. Two real signals are packed into
/// one complex transform, so a pair costs the same as a single signal.
pub struct FftConvolution {
    planner: Mutex<FftPlanner<f64>>,
}

impl std::fmt::Debug for FftConvolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftConvolution").finish_non_exhaustive()
    }
}

impl Default for FftConvolution {
    fn default() -> Self {
        FftConvolution {
            planner: Mutex::new(FftPlanner::new()),
        }
    }
}

impl FftConvolution {
    pub fn new() -> Self {
        Self::default()
    }

    fn plans(&self, len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        let mut planner = self.planner.lock().unwrap_or_else(|e| e.into_inner());
        (planner.plan_fft_forward(len), planner.plan_fft_inverse(len))
    }

    /// Linear convolution of `weights` with the complex signal `a + i b`,
    /// keeping entries K..K + out_len.
    fn convolve_packed(&self, weights: &[f64], a: &[f64], b: Option<&[f64]>, out_len: usize) -> Vec<Complex<f64>> {
        let kk = weights.len() - 1;
        assert_eq!(a.len(), kk + out_len, "signal length must be K + out_len");
        let len = (weights.len() + a.len() - 1).next_power_of_two();
        let (fwd, inv) = self.plans(len);

        let mut w: Vec<Complex<f64>> = weights.iter().map(|&x| Complex::new(x, 0.0)).collect();
        w.resize(len, Complex::new(0.0, 0.0));
        let mut s: Vec<Complex<f64>> = match b {
            Some(b) => a.iter().zip(b).map(|(&x, &y)| Complex::new(x, y)).collect(),
            None => a.iter().map(|&x| Complex::new(x, 0.0)).collect(),
        };
        s.resize(len, Complex::new(0.0, 0.0));
        fwd.process(&mut w);
        fwd.process(&mut s);
        let scale = 1.0 / len as f64;
        for (x, y) in s.iter_mut().zip(&w) {
            *x *= y * scale;
        }
        inv.process(&mut s);
        s[kk..kk + out_len].to_vec()
    }
}

impl Convolution for FftConvolution {
    fn causal_window(&self, weights: &[f64], signal: &[f64], out_len: usize) -> Vec<f64> {
        self.convolve_packed(weights, signal, None, out_len)
            .into_iter()
            .map(|c| c.re)
            .collect()
    }

    fn causal_window_pair(&self, weights: &[f64], a: &[f64], b: &[f64], out_len: usize) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(a.len(), b.len(), "paired signals must have equal length");
        // Identical inputs give identical outputs, not results a rounding apart.
        if a == b {
            let c = self.causal_window(weights, a, out_len);
            return (c.clone(), c);
        }
        let c = self.convolve_packed(weights, a, Some(b), out_len);
        (c.iter().map(|z| z.re).collect(), c.iter().map(|z| z.im).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bssvol_core::simulate::DirectConvolution;

    #[test]
    fn matches_direct_on_small_input() {
        let w = [0.0, 0.0, 1.5, -0.25, 2.0];
        let a: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..12).map(|i| (i as f64 * 1.3).cos()).collect();
        let out_len = a.len() - (w.len() - 1);
        let (fa, fb) = FftConvolution::new().causal_window_pair(&w, &a, &b, out_len);
        let da = DirectConvolution.causal_window(&w, &a, out_len);
        let db = DirectConvolution.causal_window(&w, &b, out_len);
        for i in 0..out_len {
            assert!((fa[i] - da[i]).abs() < 1e-13 && (fb[i] - db[i]).abs() < 1e-13);
        }
        let single = FftConvolution::new().causal_window(&w, &a, out_len);
        assert!(single.iter().zip(&da).all(|(x, y)| (x - y).abs() < 1e-13));
        let (x, y) = FftConvolution::new().causal_window_pair(&w, &a, &a, out_len);
        assert_eq!(x, y);
    }
}
