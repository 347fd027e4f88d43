//! Quadrature on uniform grids: trapezoid sums, sixth-order cumulative
//! integrals and exponentially weighted running integrals.

use num_complex::Complex64 as C64;

const GL_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

pub fn trapz(f: &[f64], h: f64) -> f64 {
    match f.len() {
        0 | 1 => 0.0,
        n => h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n - 1])),
    }
}

pub fn trapz_c(f: &[C64], h: f64) -> C64 {
    match f.len() {
        0 | 1 => C64::new(0.0, 0.0),
        n => (f.iter().sum::<C64>() - (f[0] + f[n - 1]) * 0.5) * h,
    }
}

/// `∫ a b dξ` by the trapezoid rule.
pub fn inner(a: &[f64], b: &[f64], h: f64) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return 0.0;
    }
    let s: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    h * (s - 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]))
}

pub fn norm_l2(a: &[f64], h: f64) -> f64 {
    inner(a, a, h).max(0.0).sqrt()
}

fn lagrange6(x: f64) -> [f64; 6] {
    let mut l = [1.0; 6];
    for (i, li) in l.iter_mut().enumerate() {
        for j in 0..6 {
            if i != j {
                *li *= (x - j as f64) / (i as f64 - j as f64);
            }
        }
    }
    l
}

/// Per-interval weights for `∫ e^{-m(x_{j+1}-y)} g` (fwd) and `∫ e^{-m(y-x_j)} g` (bwd)
/// over one cell, with `g` replaced by its 6-point interpolant.
struct CellWeights {
    fwd: [[C64; 6]; 5],
    bwd: [[C64; 6]; 5],
    decay: C64,
}

impl CellWeights {
    fn new(m: C64, h: f64) -> Self {
        let z = C64::new(0.0, 0.0);
        let mut fwd = [[z; 6]; 5];
        let mut bwd = [[z; 6]; 5];
        for p in 0..5 {
            for (x, w) in GL_X.iter().zip(GL_W.iter()) {
                let tau = 0.5 * (x + 1.0);
                let wt = 0.5 * w * h;
                let l = lagrange6(p as f64 + tau);
                let ef = (-m * (h * (1.0 - tau))).exp() * wt;
                let eb = (-m * (h * tau)).exp() * wt;
                for i in 0..6 {
                    fwd[p][i] += ef * l[i];
                    bwd[p][i] += eb * l[i];
                }
            }
        }
        CellWeights {
            fwd,
            bwd,
            decay: (-m * h).exp(),
        }
    }
}

fn stencil_start(j: usize, n_nodes: usize) -> usize {
    j.saturating_sub(2).min(n_nodes - 6)
}

/// Outward exponential rate of `g` beyond the first node (if it decays that way).
fn tail_rate(g0: C64, g1: C64, h: f64) -> Option<C64> {
    if g0.norm() == 0.0 || g1.norm() == 0.0 {
        return None;
    }
    let r = g1 / g0;
    if r.norm() <= 1.0 + 1e-12 {
        return None;
    }
    Some(r.ln() / h)
}

/// Running integrals on a uniform grid with `n >= 6` nodes:
/// `fwd[i] = ∫_{-∞}^{x_i} e^{-m(x_i-y)} g(y) dy`,
/// `bwd[i] = ∫_{x_i}^{∞} e^{-m(y-x_i)} g(y) dy`,
/// with the pieces outside the grid from an exponential fit to the end samples.
pub fn exp_sweeps(g: &[C64], h: f64, m: C64) -> (Vec<C64>, Vec<C64>) {
    let n = g.len();
    assert!(n >= 6, "exp_sweeps needs at least 6 nodes");
    let w = CellWeights::new(m, h);
    let z = C64::new(0.0, 0.0);
    let mut fwd = vec![z; n];
    let mut bwd = vec![z; n];
    fwd[0] = match tail_rate(g[0], g[1], h) {
        Some(rho) if (m + rho).norm() > 1e-14 => g[0] / (m + rho),
        _ => z,
    };
    bwd[n - 1] = match tail_rate(g[n - 1], g[n - 2], h) {
        Some(rho) if (m + rho).norm() > 1e-14 => g[n - 1] / (m + rho),
        _ => z,
    };
    for j in 0..n - 1 {
        let st = stencil_start(j, n);
        let p = j - st;
        let mut acc = z;
        for i in 0..6 {
            acc += w.fwd[p][i] * g[st + i];
        }
        fwd[j + 1] = fwd[j] * w.decay + acc;
    }
    for j in (0..n - 1).rev() {
        let st = stencil_start(j, n);
        let p = j - st;
        let mut acc = z;
        for i in 0..6 {
            acc += w.bwd[p][i] * g[st + i];
        }
        bwd[j] = bwd[j + 1] * w.decay + acc;
    }
    (fwd, bwd)
}

/// `∫_{-∞}^{x_i} g`, sixth order, with the left tail added analytically.
pub fn cumulative(g: &[f64], h: f64) -> Vec<f64> {
    let gc: Vec<C64> = g.iter().map(|&x| C64::new(x, 0.0)).collect();
    exp_sweeps(&gc, h, C64::new(0.0, 0.0)).0.iter().map(|z| z.re).collect()
}
