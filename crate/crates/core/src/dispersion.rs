//! Characteristic polynomial, weighted essential spectrum, gaps and root
//! classification.
//!
//! Sign convention: `P(λ, r) = (λ + r(k-c))(1-r²) + 3kr`. The opposite sign of
//! the last term contradicts the dispersion relation; `self_test` checks this.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;
use crate::wave::{derived_constants, WaveParams};

/// Exponential weight rate α of the norm ‖e^{αξ} v‖.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weight(pub f64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Unweighted,
    /// `0 < α < α_crit`
    Small,
    /// `α_crit ≤ α < 1`, no gap
    Marginal,
    Singular,
    /// `α > 1`
    Large,
}

impl Weight {
    pub fn band(&self, p: &WaveParams) -> Result<Band> {
        let a = self.0;
        if !a.is_finite() || a < 0.0 {
            return Err(Error::InvalidInput(format!("weight must be finite and ≥ 0, got {a}")));
        }
        let ac = derived_constants(p)?.alpha_crit;
        Ok(if a == 0.0 {
            Band::Unweighted
        } else if a < ac {
            Band::Small
        } else if (a - 1.0).abs() < 1e-12 {
            Band::Singular
        } else if a < 1.0 {
            Band::Marginal
        } else {
            Band::Large
        })
    }
}

/// Coefficients (low to high) of `P(λ, r + shift)` as a cubic in `r`.
pub fn char_poly_coeffs(lambda: C64, p: &WaveParams, shift: f64) -> [C64; 4] {
    let (k, c) = (p.k, p.c);
    // P(λ, r) = (c-k) r³ - λ r² - (c-4k) r + λ
    let a3 = C64::new(c - k, 0.0);
    let a2 = -lambda;
    let a1 = C64::new(-(c - 4.0 * k), 0.0);
    let a0 = lambda;
    if shift == 0.0 {
        return [a0, a1, a2, a3];
    }
    let s = shift;
    [
        a0 + a1 * s + a2 * s * s + a3 * s * s * s,
        a1 + a2 * 2.0 * s + a3 * 3.0 * s * s,
        a2 + a3 * 3.0 * s,
        a3,
    ]
}

pub fn char_poly(lambda: C64, r: C64, p: &WaveParams) -> C64 {
    let (k, c) = (p.k, p.c);
    (lambda + r * (k - c)) * (C64::new(1.0, 0.0) - r * r) + r * (3.0 * k)
}

/// The variant with `-3kr`, kept only for the sign self-test.
pub fn char_poly_minus(lambda: C64, r: C64, p: &WaveParams) -> C64 {
    let (k, c) = (p.k, p.c);
    (lambda + r * (k - c)) * (C64::new(1.0, 0.0) - r * r) - r * (3.0 * k)
}

/// λ(σ) of the unweighted problem.
pub fn dispersion(sigma: f64, p: &WaveParams) -> C64 {
    let s2 = sigma * sigma;
    C64::new(0.0, sigma * (p.c - p.k * (4.0 + s2) / (1.0 + s2)))
}

/// Weighted essential spectrum point λ(σ; α).
pub fn ess_point(sigma: f64, alpha: f64, p: &WaveParams) -> C64 {
    let (k, c) = (p.k, p.c);
    let (a2, s2) = (alpha * alpha, sigma * sigma);
    let d = (1.0 + s2 - a2).powi(2) + 4.0 * s2 * a2;
    let re = -alpha * (c - k + 3.0 * k * (a2 + s2 - 1.0) / d);
    let im = sigma * (c - k - 3.0 * k * (a2 + s2 + 1.0) / d);
    C64::new(re, im)
}

/// Numerator of `-Re λ(σ; α)/α` times the positive denominator; positive for
/// all σ exactly when the weighted curve lies in the open left half plane.
pub fn quartic_condition(sigma: f64, alpha: f64, p: &WaveParams) -> f64 {
    let (k, c) = (p.k, p.c);
    let (s2, a2) = (sigma * sigma, alpha * alpha);
    (c - k) * s2 * s2 + (2.0 * c * (1.0 + a2) + k * (1.0 - 2.0 * a2)) * s2 + (a2 - 1.0) * (a2 * (c - k) - c + 4.0 * k)
}

/// Symbol of the asymptotic operator at `D = iσ - α`.
pub fn symbol(dd: C64, p: &WaveParams) -> C64 {
    let one = C64::new(1.0, 0.0);
    dd * ((4.0 * one - dd * dd) * (p.c - p.k) - 3.0 * p.c) / (one - dd * dd)
}

/// σ samples concentrated near 0; odd `n` puts σ = 0 on the grid exactly.
pub fn sigma_grid(n: usize, sigma_max: f64, stretch: f64) -> Vec<f64> {
    if n < 2 {
        return vec![0.0; n];
    }
    let sh = stretch.sinh();
    (0..n)
        .map(|j| {
            let s = (2.0 * j as f64 - (n - 1) as f64) / (n - 1) as f64;
            if 2 * j + 1 == n {
                0.0
            } else {
                sigma_max * (stretch * s).sinh() / sh
            }
        })
        .collect()
}

pub fn default_sigma_grid() -> Vec<f64> {
    sigma_grid(2001, 50.0, 4.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralCurve {
    pub sigma: Vec<f64>,
    pub lambda: Vec<C64>,
    pub alpha: f64,
    pub params: WaveParams,
}

impl SpectralCurve {
    /// `(max Re λ, σ where attained)`.
    pub fn max_re(&self) -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for (s, l) in self.sigma.iter().zip(&self.lambda) {
            if l.re > best.0 {
                best = (l.re, *s);
            }
        }
        best
    }

    pub fn asymptote(&self) -> f64 {
        -self.alpha * (self.params.c - self.params.k)
    }
}

pub fn ess_spectrum_curve(p: &WaveParams, alpha: Weight, sigma: &[f64]) -> Result<SpectralCurve> {
    if alpha.band(p)? == Band::Singular {
        return Err(Error::InvalidInput(
            "alpha = 1 is singular (Im λ blows up at σ = 0)".into(),
        ));
    }
    let lambda = sigma.par_iter().map(|&s| ess_point(s, alpha.0, p)).collect();
    Ok(SpectralCurve {
        sigma: sigma.to_vec(),
        lambda,
        alpha: alpha.0,
        params: *p,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Gap {
    pub value: f64,
    pub band: Band,
}

pub fn spectral_gap(p: &WaveParams, alpha: Weight) -> Result<Gap> {
    let (k, c, a) = (p.k, p.c, alpha.0);
    match alpha.band(p)? {
        Band::Small => Ok(Gap {
            value: a * (c - k - 3.0 * k / (1.0 - a * a)),
            band: Band::Small,
        }),
        Band::Large => Ok(Gap {
            value: a * (c - k),
            band: Band::Large,
        }),
        Band::Singular => Err(Error::InvalidInput("alpha = 1 is singular".into())),
        Band::Marginal => Err(Error::InvalidInput(format!(
            "alpha = {a} lies in the marginal/unstable band [alpha_crit, 1): no spectral gap"
        ))),
        Band::Unweighted => Err(Error::InvalidInput(
            "alpha = 0: essential spectrum on the imaginary axis, no gap".into(),
        )),
    }
}

/// Stability verdict printed by the CLI.
pub fn verdict(p: &WaveParams, alpha: Weight) -> Result<&'static str> {
    Ok(match alpha.band(p)? {
        Band::Small | Band::Large => "stable",
        Band::Unweighted => "marginal",
        Band::Marginal => {
            let ac = derived_constants(p)?.alpha_crit;
            if (alpha.0 - ac).abs() < 1e-12 {
                "marginal"
            } else {
                "unstable"
            }
        }
        Band::Singular => "singular",
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RootTriple {
    /// Roots of `P(λ, r) = 0`, ascending real part.
    pub roots: [C64; 3],
    pub alpha: f64,
    /// Number of roots with `Re r < -α`.
    pub n_left: usize,
    /// Number of roots with `Re r < 0`.
    pub n_neg: usize,
    /// Smallest pairwise distance.
    pub separation: f64,
}

impl RootTriple {
    /// The weighted roots `r + α`.
    pub fn shifted(&self) -> [C64; 3] {
        self.roots.map(|r| r + self.alpha)
    }
}

pub fn classify_roots(lambda: C64, alpha: Weight, p: &WaveParams) -> Result<RootTriple> {
    let roots = poly::cubic_roots(char_poly_coeffs(lambda, p, 0.0))?;
    let a = alpha.0;
    let n_left = roots.iter().filter(|r| r.re < -a).count();
    let n_neg = roots.iter().filter(|r| r.re < 0.0).count();
    let separation = (roots[0] - roots[1])
        .norm()
        .min((roots[1] - roots[2]).norm())
        .min((roots[0] - roots[2]).norm());
    Ok(RootTriple {
        roots,
        alpha: a,
        n_left,
        n_neg,
        separation,
    })
}

pub fn group_velocity(ell: f64, p: &WaveParams) -> f64 {
    let l2 = ell * ell;
    -p.c + p.k * (4.0 - l2 + l2 * l2) / (1.0 + l2).powi(2)
}

#[derive(Clone, Debug, Serialize)]
pub struct SignCheck {
    pub name: &'static str,
    pub plus: f64,
    pub minus: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SignSelfTest {
    pub checks: Vec<SignCheck>,
    /// `+3kr` satisfies every anchor.
    pub plus_consistent: bool,
    /// `-3kr` satisfies every anchor.
    pub minus_consistent: bool,
}

impl SignSelfTest {
    pub fn passed(&self) -> bool {
        self.plus_consistent
    }
}

/// Check both signs of the `3kr` term against three independent anchors.
pub fn self_test(p: &WaveParams) -> Result<SignSelfTest> {
    let d = derived_constants(p)?;
    let scale = 1.0 + p.c;
    let mut disp = (0.0f64, 0.0f64);
    for &s in &[0.3, 1.0, 2.5, 7.0] {
        let lam = dispersion(s, p);
        let r = C64::new(0.0, s);
        disp.0 = disp.0.max(char_poly(lam, r, p).norm() / scale);
        disp.1 = disp.1.max(char_poly_minus(lam, r, p).norm() / scale);
    }
    let mut decay = (0.0f64, 0.0f64);
    for r in [0.0, d.r_decay, -d.r_decay] {
        let r = C64::new(r, 0.0);
        let z = C64::new(0.0, 0.0);
        decay.0 = decay.0.max(char_poly(z, r, p).norm() / scale);
        decay.1 = decay.1.max(char_poly_minus(z, r, p).norm() / scale);
    }
    let mut curve = (0.0f64, 0.0f64);
    let a = 0.5 * d.alpha_crit;
    for &s in &[0.0, 0.4, 1.3, 5.0] {
        let lam = ess_point(s, a, p);
        let r = C64::new(-a, s);
        curve.0 = curve.0.max(char_poly(lam, r, p).norm() / scale);
        curve.1 = curve.1.max(char_poly_minus(lam, r, p).norm() / scale);
    }
    let checks = vec![
        SignCheck {
            name: "dispersion relation",
            plus: disp.0,
            minus: disp.1,
        },
        SignCheck {
            name: "decay exponents",
            plus: decay.0,
            minus: decay.1,
        },
        SignCheck {
            name: "weighted curve",
            plus: curve.0,
            minus: curve.1,
        },
    ];
    let tol = 1e-12;
    Ok(SignSelfTest {
        plus_consistent: checks.iter().all(|c| c.plus < tol),
        minus_consistent: checks.iter().all(|c| c.minus < tol),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> WaveParams {
        WaveParams::new(0.1, 1.0).unwrap()
    }

    #[test]
    fn shifted_coefficients() {
        let p = base();
        let lam = C64::new(0.3, -0.7);
        let cf = char_poly_coeffs(lam, &p, 0.4);
        for &r in &[C64::new(0.2, 0.1), C64::new(-1.0, 2.0)] {
            let direct = char_poly(lam, r + 0.4, &p);
            assert!((poly::eval_cubic(&cf, r) - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn sigma_grid_is_symmetric_with_zero() {
        let g = default_sigma_grid();
        assert_eq!(g.len(), 2001);
        assert_eq!(g[1000], 0.0);
        assert!((g[0] + 50.0).abs() < 1e-12 && (g[2000] - 50.0).abs() < 1e-12);
        for j in 0..1000 {
            assert_eq!(g[j], -g[2000 - j]);
        }
    }

    #[test]
    fn bands() {
        let p = base();
        assert_eq!(Weight(0.5).band(&p).unwrap(), Band::Small);
        assert_eq!(Weight(0.9).band(&p).unwrap(), Band::Marginal);
        assert_eq!(Weight(1.0).band(&p).unwrap(), Band::Singular);
        assert_eq!(Weight(1.2).band(&p).unwrap(), Band::Large);
        assert!(spectral_gap(&p, Weight(1.0))
            .unwrap_err()
            .to_string()
            .contains("singular"));
        assert!(spectral_gap(&p, Weight(0.9))
            .unwrap_err()
            .to_string()
            .contains("marginal"));
    }
}
