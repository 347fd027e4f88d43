//! Dormand-Prince 5(4) stepping on fixed-size real states.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn comb<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (w, k) in terms {
        if *w != 0.0 {
            for i in 0..N {
                out[i] += h * w * k[i];
            }
        }
    }
    out
}

/// One step; returns the fifth-order update and the embedded error vector.
pub fn dopri_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, y);
    let k2 = f(t + C2 * h, &comb(y, h, &[(A21, &k1)]));
    let k3 = f(t + C3 * h, &comb(y, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &comb(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(
        t + C5 * h,
        &comb(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        t + h,
        &comb(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y5 = comb(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(t + h, &y5);
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y5, err)
}

/// `n` equal fifth-order steps from `t0` to `t1`.
pub fn fixed_steps<const N: usize, F>(f: &mut F, t0: f64, y0: [f64; N], t1: f64, n: usize) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let h = (t1 - t0) / n as f64;
    let mut y = y0;
    for j in 0..n {
        y = dopri_step(f, t0 + j as f64 * h, &y, h).0;
    }
    y
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

/// Adaptive integrator; keeps its step size between calls to `advance`.
pub struct Adaptive {
    pub tol: Tolerance,
    pub h: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub steps: usize,
    pub rejected: usize,
}

impl Adaptive {
    pub fn new(tol: Tolerance, h0: f64, h_max: f64) -> Self {
        Adaptive {
            tol,
            h: h0,
            h_max,
            max_steps: 2_000_000,
            steps: 0,
            rejected: 0,
        }
    }

    /// Integrate from `*t` to `t_end` (either direction), landing exactly on `t_end`.
    pub fn advance<const N: usize, F>(&mut self, f: &mut F, t: &mut f64, y: &mut [f64; N], t_end: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let dir = if t_end >= *t { 1.0 } else { -1.0 };
        let span = (t_end - *t).abs();
        if span == 0.0 {
            return Ok(());
        }
        let eps = 1e-14 * (1.0 + t_end.abs());
        loop {
            let rem = (t_end - *t).abs();
            if rem <= eps {
                *t = t_end;
                return Ok(());
            }
            let mut h = self.h.abs().min(self.h_max).min(rem);
            let last = h >= rem * (1.0 - 1e-12);
            if last {
                h = rem;
            }
            let (yn, e) = dopri_step(f, *t, y, dir * h);
            let mut acc = 0.0;
            for i in 0..N {
                let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(yn[i].abs());
                acc += (e[i] / sc).powi(2);
            }
            let err = (acc / N as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Solver(format!("non-finite state near t = {:.6}", *t)));
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                *y = yn;
                *t = if last { t_end } else { *t + dir * h };
                self.steps += 1;
                if !last || fac < 1.0 {
                    self.h = h * fac;
                }
                if last {
                    return Ok(());
                }
            } else {
                self.rejected += 1;
                self.h = h * fac.min(1.0);
            }
            if self.h < 1e-12 * (1.0 + t.abs()) {
                return Err(Error::Solver(format!("step size underflow near t = {:.6}", *t)));
            }
            if self.steps + self.rejected > self.max_steps {
                return Err(Error::Solver(format!("step budget exhausted near t = {:.6}", *t)));
            }
        }
    }
}
