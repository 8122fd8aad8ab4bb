use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Cached forward/inverse FFT pair for one period length.
#[derive(Clone)]
pub struct DftPlan {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for DftPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DftPlan").field("n", &self.n).finish()
    }
}

impl DftPlan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `q^-1` evaluated on the DFT grid, `exp(-j 2 pi k / N)`.
    pub fn grid(&self) -> Vec<Complex64> {
        (0..self.n)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / self.n as f64))
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse transform keeping the real part, scaled by `1/N`.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        assert_eq!(spectrum.len(), self.n);
        self.inv.process(&mut spectrum);
        let scale = 1.0 / self.n as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Periodic steady-state response given the block response on the DFT grid.
    pub fn filter(&self, x: &[f64], response: &[Complex64]) -> Vec<f64> {
        let mut spec = self.forward(x);
        for (s, h) in spec.iter_mut().zip(response) {
            *s *= h;
        }
        self.inverse_real(spec)
    }

    /// Spectra of two real signals from one complex transform of `a + j b`.
    pub fn forward_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        assert!(a.len() == self.n && b.len() == self.n);
        let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.fwd.process(&mut z);
        let n = self.n;
        let mut sa = Vec::with_capacity(n);
        let mut sb = Vec::with_capacity(n);
        for k in 0..n {
            let zk = z[k];
            let zc = z[(n - k) % n].conj();
            sa.push((zk + zc) * 0.5);
            sb.push((zk - zc) * Complex64::new(0.0, -0.5));
        }
        (sa, sb)
    }

    /// Inverse transforms of two spectra whose signals are real, from one
    /// complex transform of `A + j B`.
    pub fn inverse_real_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        assert!(a.len() == self.n && b.len() == self.n);
        let j = Complex64::new(0.0, 1.0);
        let mut z: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + j * y).collect();
        self.inv.process(&mut z);
        let scale = 1.0 / self.n as f64;
        z.into_iter().map(|c| (c.re * scale, c.im * scale)).unzip()
    }

    /// Applies a spectrum multiplier that is already available.
    pub fn filter_spectrum(&self, spectrum: &[Complex64], response: &[Complex64]) -> Vec<f64> {
        let spec = spectrum.iter().zip(response).map(|(s, h)| s * h).collect();
        self.inverse_real(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_transforms_match_single() {
        let plan = DftPlan::new(16);
        let a: Vec<f64> = (0..16).map(|i| (i as f64 * 0.3).sin()).collect();
        let b: Vec<f64> = (0..16).map(|i| ((i * i) % 5) as f64).collect();
        let (sa, sb) = plan.forward_pair(&a, &b);
        for (x, y) in sa.iter().zip(plan.forward(&a)) {
            assert!((x - y).norm() < 1e-12);
        }
        for (x, y) in sb.iter().zip(plan.forward(&b)) {
            assert!((x - y).norm() < 1e-12);
        }
        let (ra, rb) = plan.inverse_real_pair(&sa, &sb);
        for (x, y) in ra.iter().zip(&a).chain(rb.iter().zip(&b)) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
