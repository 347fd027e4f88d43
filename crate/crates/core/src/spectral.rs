//! Fourier collocation on a periodic grid.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

/// Periodic grid of `n` nodes with spacing `h` (period `n h`).
#[derive(Clone)]
pub struct Periodic {
    pub n: usize,
    pub h: f64,
    pub kappa: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Periodic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Periodic")
            .field("n", &self.n)
            .field("h", &self.h)
            .finish()
    }
}

impl Periodic {
    pub fn new(n: usize, h: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let period = n as f64 * h;
        let kappa = (0..n)
            .map(|j| {
                let jj = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * std::f64::consts::PI * jj / period
            })
            .collect();
        Periodic { n, h, kappa, fwd, inv }
    }

    pub fn forward(&self, f: &[C64]) -> Vec<C64> {
        let mut buf = f.to_vec();
        self.fwd.process(&mut buf);
        buf
    }

    pub fn inverse(&self, fh: &[C64]) -> Vec<C64> {
        let mut buf = fh.to_vec();
        self.inv.process(&mut buf);
        let s = 1.0 / self.n as f64;
        for z in buf.iter_mut() {
            *z *= s;
        }
        buf
    }

    /// Apply the Fourier multiplier `sym(κ)`.
    pub fn multiply<S: Fn(f64) -> C64>(&self, f: &[C64], sym: S) -> Vec<C64> {
        let mut fh = self.forward(f);
        for (z, &k) in fh.iter_mut().zip(&self.kappa) {
            *z *= sym(k);
        }
        self.inverse(&fh)
    }

    pub fn multiply_real<S: Fn(f64) -> C64>(&self, f: &[f64], sym: S) -> Vec<f64> {
        let fc: Vec<C64> = f.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.multiply(&fc, sym).iter().map(|z| z.re).collect()
    }

    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        let nyq = self.n % 2 == 0;
        let kn = self.kappa[self.n / 2];
        self.multiply_real(f, |k| {
            if nyq && k == kn {
                C64::new(0.0, 0.0)
            } else {
                C64::new(0.0, k)
            }
        })
    }

    /// `h Σ |f|²`, the discrete L² norm squared.
    pub fn norm(&self, f: &[C64]) -> f64 {
        (self.h * f.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }
}

pub fn to_complex(f: &[f64]) -> Vec<C64> {
    f.iter().map(|&x| C64::new(x, 0.0)).collect()
}
