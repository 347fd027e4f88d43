//! Conserved functionals, Helmholtz inverses and the generalized kernel.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::dispersion::{Band, Weight};
use crate::error::{check_len, Error, Result};
use crate::quad::{cumulative, exp_sweeps, inner, trapz};
use crate::wave::{solve_base, Profile, WaveParams};

/// Solves `(msq - ∂²) h = g` on the line for data decaying at both ends.
pub fn helmholtz_solve(g: &[f64], h: f64, msq: f64) -> Result<Vec<f64>> {
    if !(msq > 0.0) {
        return Err(Error::InvalidInput(format!("msq must be positive, got {msq}")));
    }
    if g.len() < 6 {
        return Err(Error::InvalidInput("need at least 6 nodes".into()));
    }
    let m = msq.sqrt();
    let gc: Vec<C64> = g.iter().map(|&x| C64::new(x, 0.0)).collect();
    let (f, b) = exp_sweeps(&gc, h, C64::new(m, 0.0));
    Ok(f.iter().zip(&b).map(|(x, y)| (x.re + y.re) / (2.0 * m)).collect())
}

/// `(1 - ∂²)(4 - ∂²)⁻¹ g = g - 3 (4 - ∂²)⁻¹ g`.
pub fn k_operator(g: &[f64], h: f64) -> Result<Vec<f64>> {
    let w = helmholtz_solve(g, h, 4.0)?;
    Ok(g.iter().zip(&w).map(|(a, b)| a - 3.0 * b).collect())
}

/// Sixth-order centered first derivative; second order in the three
/// nodes nearest each end, where the data are flat.
pub fn fd_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    for i in 0..n {
        d[i] = if i >= 3 && i + 3 < n {
            (-f[i - 3] + 9.0 * f[i - 2] - 45.0 * f[i - 1] + 45.0 * f[i + 1] - 9.0 * f[i + 2] + f[i + 3]) / (60.0 * h)
        } else if i == 0 {
            (f[1] - f[0]) / h
        } else if i == n - 1 {
            (f[n - 1] - f[n - 2]) / h
        } else {
            (f[i + 1] - f[i - 1]) / (2.0 * h)
        };
    }
    d
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConservedValues {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "E_mass")]
    pub e_mass: f64,
    /// `None` where `m ≤ 0` somewhere.
    #[serde(rename = "F1")]
    pub f1: Option<f64>,
    #[serde(rename = "F2")]
    pub f2: Option<f64>,
}

/// The five conserved integrals for a state `(u, m)` on a uniform grid.
pub fn conserved(u: &[f64], m: &[f64], h: f64, params: &WaveParams) -> Result<ConservedValues> {
    params.validate()?;
    check_len(u.len(), m.len())?;
    let k = params.k;
    let d: Vec<f64> = u.iter().map(|x| x - k).collect();
    conserved_dev(&d, m, h, params)
}

/// As [`conserved`], with `u - k` supplied directly.
pub fn conserved_dev(dev: &[f64], m: &[f64], h: f64, params: &WaveParams) -> Result<ConservedValues> {
    check_len(dev.len(), m.len())?;
    let k = params.k;
    // u³ - 3k²(u-k) - k³ = d³ + 3k d²
    let hd: Vec<f64> = dev.iter().map(|d| d * d * (d + 3.0 * k)).collect();
    let kd = k_operator(dev, h)?;
    let q = 0.5 * inner(dev, &kd, h);
    let e: Vec<f64> = m.iter().map(|x| x - k).collect();
    let positive = m.iter().all(|&x| x > 0.0);
    let (f1, f2) = if positive {
        let k3 = k.cbrt();
        let f1: Vec<f64> = m.iter().map(|x| x.cbrt() - k3).collect();
        let mx = fd_derivative(m, h);
        let f2: Vec<f64> = m
            .iter()
            .zip(&mx)
            .map(|(&x, &dx)| (dx * dx / (9.0 * x * x) + 1.0) / x.cbrt() - 1.0 / k3)
            .collect();
        (Some(trapz(&f1, h)), Some(trapz(&f2, h)))
    } else {
        (None, None)
    };
    Ok(ConservedValues {
        h: -trapz(&hd, h) / 6.0,
        q,
        e_mass: trapz(&e, h),
        f1,
        f2,
    })
}

/// `Q(u₀)` of a profile.
pub fn profile_q(p: &Profile) -> Result<f64> {
    let kd = k_operator(&p.dev, p.h)?;
    Ok(0.5 * inner(&p.dev, &kd, p.h))
}

/// `∂Q(u₀)/∂c` by centered differences (`dc = 1e-4 c`) with one Richardson step.
pub fn dc_q(params: &WaveParams, l: f64, h: f64) -> Result<f64> {
    let dc = 1e-4 * params.c;
    let q = |cc: f64| -> Result<f64> {
        let p = WaveParams::new(params.k, cc)?;
        profile_q(&solve_base(&p, l, h, Default::default())?)
    };
    let d1 = (q(params.c + dc)? - q(params.c - dc)?) / (2.0 * dc);
    let d2 = (q(params.c + 0.5 * dc)? - q(params.c - 0.5 * dc)?) / dc;
    Ok((4.0 * d2 - d1) / 3.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelBasis {
    pub xi: Vec<f64>,
    pub h: f64,
    pub alpha: f64,
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub eta1: Vec<f64>,
    pub eta2: Vec<f64>,
    /// Unweighted `η̃₁`, bounded but not decaying as ξ → +∞.
    pub eta1_tilde: Vec<f64>,
    pub theta1: f64,
    pub theta2: f64,
    pub dc_q: f64,
    /// `gram[j][l] = ⟨z_j, η_l⟩`.
    pub gram: [[f64; 2]; 2],
}

impl KernelBasis {
    pub fn gram_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for j in 0..2 {
            for l in 0..2 {
                let id = if j == l { 1.0 } else { 0.0 };
                r = r.max((self.gram[j][l] - id).abs());
            }
        }
        r
    }
}

pub fn kernel_basis(profile: &Profile, alpha: Weight) -> Result<KernelBasis> {
    let p = &profile.params;
    match alpha.band(p)? {
        Band::Small => {}
        b => {
            return Err(Error::InvalidInput(format!(
                "kernel basis needs 0 < alpha < alpha_crit, got {} ({b:?})",
                alpha.0
            )))
        }
    }
    if profile.dc_u0.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidInput(
            "profile carries no ∂_c u₀ (use solve_profile)".into(),
        ));
    }
    let h = profile.h;
    let dcq = dc_q(p, profile.l, h)?;
    if !(dcq > 0.0) {
        return Err(Error::Solver(format!("∂Q/∂c = {dcq:e} is not positive")));
    }
    let theta1 = 1.0 / dcq;
    let kdc = k_operator(&profile.dc_u0, h)?;
    let anti = cumulative(&kdc, h);
    let theta2 = theta1 * theta1 * inner(&profile.dc_u0, &anti, h);
    let kd = k_operator(&profile.dev, h)?;
    let a = alpha.0;
    let ew: Vec<f64> = profile.xi.iter().map(|x| (a * x).exp()).collect();
    let z1: Vec<f64> = profile.u0_p.iter().zip(&ew).map(|(v, e)| v * e).collect();
    let z2: Vec<f64> = profile.dc_u0.iter().zip(&ew).map(|(v, e)| v * e).collect();
    let eta1_tilde: Vec<f64> = anti.iter().zip(&kd).map(|(s, q)| -theta1 * s + theta2 * q).collect();
    let eta1: Vec<f64> = eta1_tilde.iter().zip(&ew).map(|(v, e)| v / e).collect();
    let eta2: Vec<f64> = kd.iter().zip(&ew).map(|(v, e)| theta1 * v / e).collect();
    let g = |x: &[f64], y: &[f64]| inner(x, y, h);
    let gram = [[g(&z1, &eta1), g(&z1, &eta2)], [g(&z2, &eta1), g(&z2, &eta2)]];
    Ok(KernelBasis {
        xi: profile.xi.clone(),
        h,
        alpha: a,
        z1,
        z2,
        eta1,
        eta2,
        eta1_tilde,
        theta1,
        theta2,
        dc_q: dcq,
        gram,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Projection {
    pub pi_f: Vec<f64>,
    pub complement: Vec<f64>,
    /// Coefficients along `z1`, `z2`.
    pub coeffs: [f64; 2],
}

/// `Π f = Σ_j c_j z_j` with `c = G⁻ᵀ (⟨η_l, f⟩)_l`; the Gram correction is the
/// identity up to the reported Gram residual, and makes Π exactly idempotent
/// in the discrete inner product.
pub fn project(f: &[f64], basis: &KernelBasis) -> Result<Projection> {
    check_len(basis.xi.len(), f.len())?;
    let h = basis.h;
    let b = [inner(&basis.eta1, f, h), inner(&basis.eta2, f, h)];
    // solve Σ_j c_j ⟨z_j, η_l⟩ = b_l
    let g = basis.gram;
    let det = g[0][0] * g[1][1] - g[1][0] * g[0][1];
    if det.abs() < 1e-12 {
        return Err(Error::Solver("singular Gram matrix".into()));
    }
    let c0 = (b[0] * g[1][1] - b[1] * g[1][0]) / det;
    let c1 = (b[1] * g[0][0] - b[0] * g[0][1]) / det;
    let pi_f: Vec<f64> = basis.z1.iter().zip(&basis.z2).map(|(a, b)| c0 * a + c1 * b).collect();
    let complement = f.iter().zip(&pi_f).map(|(a, b)| a - b).collect();
    Ok(Projection {
        pi_f,
        complement,
        coeffs: [c0, c1],
    })
}
