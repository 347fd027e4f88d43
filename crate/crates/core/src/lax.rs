//! Lax pair layer: root algebra, the M-cubic, Lax solutions and the
//! squared-eigenfunction map into the linearized problem.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dispersion::{char_poly, char_poly_coeffs, char_poly_minus};
use crate::error::{Error, Result};
use crate::ode::{Adaptive, Tolerance};
use crate::poly;
use crate::wave::{linear_slope, Profile, WaveParams};

fn cz(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Coefficients (low to high) of `(c-k)M³ - λM² + (4k-c)M + λ`.
pub fn m_cubic_coeffs(lambda: C64, p: &WaveParams) -> [C64; 4] {
    [lambda, cz(4.0 * p.k - p.c), -lambda, cz(p.c - p.k)]
}

pub fn discriminant(lambda: C64, p: &WaveParams) -> C64 {
    let (k, c) = (p.k, p.c);
    let l2 = lambda * lambda;
    l2 * l2 * 4.0 + l2 * (61.0 * k * k - 8.0 * c * c - 44.0 * c * k) + cz(4.0 * (c - k) * (c - 4.0 * k).powi(3))
}

/// Roots of `l³ - l - kσ` (forward) or `l³ - l + kσ` (adjoint), sorted by real part.
pub fn lax_roots(sigma: C64, k: f64, adjoint: bool) -> Result<[C64; 3]> {
    let s = if adjoint { -1.0 } else { 1.0 };
    poly::cubic_roots([-sigma * k * s, cz(-1.0), cz(0.0), cz(1.0)])
}

/// Temporal rate attached to the exponent `l`.
pub fn temporal_rate(l: C64, sigma: C64, p: &WaveParams, adjoint: bool) -> C64 {
    let s = if adjoint { -1.0 } else { 1.0 };
    l * (l * s / sigma + (p.c - p.k))
}

#[derive(Clone, Debug, Serialize)]
pub struct Branch {
    pub m: C64,
    pub p: C64,
    pub l1: C64,
    pub l2: C64,
    /// `None` on the degenerate `M = 0` branch.
    pub sigma: Option<C64>,
    pub r1: Option<C64>,
    pub r2: Option<C64>,
    /// max of `|l_j³ - l_j - kσ|`.
    pub cubic_residual: f64,
    /// `|λ_rec - λ| / max(|λ|, 1)`.
    pub roundtrip: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LaxRootData {
    pub lambda: C64,
    pub m_roots: [C64; 3],
    pub branches: Vec<Branch>,
    pub discriminant: C64,
    pub degenerate: bool,
}

impl LaxRootData {
    pub fn max_cubic_residual(&self) -> f64 {
        self.branches.iter().map(|b| b.cubic_residual).fold(0.0, f64::max)
    }

    pub fn max_roundtrip(&self) -> f64 {
        self.branches
            .iter()
            .filter(|b| b.sigma.is_some())
            .map(|b| b.roundtrip)
            .fold(0.0, f64::max)
    }
}

const M_ZERO: f64 = 1e-12;

pub fn m_cubic(lambda: C64, params: &WaveParams) -> Result<LaxRootData> {
    params.validate()?;
    let m_roots = poly::cubic_roots(m_cubic_coeffs(lambda, params))?;
    let (k, c) = (params.k, params.c);
    let mut branches = Vec::with_capacity(3);
    let mut degenerate = false;
    for &m in &m_roots {
        let pp = ((cz(4.0) - m * m) / 3.0).sqrt();
        let l1 = (pp + m) * 0.5;
        let l2 = (pp - m) * 0.5;
        let den = lambda + m * (k - c);
        let sigma = if m.norm() <= M_ZERO || den.norm() <= M_ZERO {
            None
        } else {
            Some(m * pp / den)
        };
        degenerate |= sigma.is_none();
        let (cubic_residual, roundtrip, r1, r2) = match sigma {
            Some(s) => {
                let res = |l: C64| (l * l * l - l - s * k).norm();
                let rec = m * (pp / s + (c - k));
                (
                    res(l1).max(res(l2)),
                    (rec - lambda).norm() / lambda.norm().max(1.0),
                    Some(temporal_rate(l1, s, params, false)),
                    Some(temporal_rate(l2, s, params, false)),
                )
            }
            None => (f64::NAN, f64::NAN, None, None),
        };
        branches.push(Branch {
            m,
            p: pp,
            l1,
            l2,
            sigma,
            r1,
            r2,
            cubic_residual,
            roundtrip,
        });
    }
    Ok(LaxRootData {
        lambda,
        m_roots,
        branches,
        discriminant: discriminant(lambda, params),
        degenerate,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanEntry {
    pub lambda: C64,
    pub min_separation: f64,
    pub min_dist_special: f64,
    pub discriminant: C64,
    pub sigma_finite: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub entries: Vec<ScanEntry>,
    pub all_pass: bool,
}

/// Checks on `λ = i t` for the given `t` samples: three distinct M away from
/// {0, ±2}, positive discriminant, finite σ on every branch.
pub fn completeness_scan(imag: &[f64], params: &WaveParams) -> Result<ScanReport> {
    params.validate()?;
    let entries: Vec<ScanEntry> = imag
        .par_iter()
        .map(|&t| {
            let lambda = C64::new(0.0, t);
            let data = m_cubic(lambda, params);
            let disc = discriminant(lambda, params);
            match data {
                Ok(d) => {
                    let r = d.m_roots;
                    let sep = (r[0] - r[1]).norm().min((r[0] - r[2]).norm()).min((r[1] - r[2]).norm());
                    let special = r
                        .iter()
                        .flat_map(|m| [m.norm(), (m - 2.0).norm(), (m + 2.0).norm()])
                        .fold(f64::INFINITY, f64::min);
                    let finite = d
                        .branches
                        .iter()
                        .all(|b| b.sigma.is_some_and(|s| s.re.is_finite() && s.im.is_finite()));
                    let disc_ok = disc.re > 0.0 && disc.im.abs() <= 1e-9 * disc.re;
                    let pass = t != 0.0 && sep > 1e-8 && special > 1e-8 && disc_ok && finite;
                    ScanEntry {
                        lambda,
                        min_separation: sep,
                        min_dist_special: special,
                        discriminant: disc,
                        sigma_finite: finite,
                        pass,
                    }
                }
                Err(_) => ScanEntry {
                    lambda,
                    min_separation: 0.0,
                    min_dist_special: 0.0,
                    discriminant: disc,
                    sigma_finite: false,
                    pass: false,
                },
            }
        })
        .collect();
    let all_pass = entries.iter().all(|e| e.pass);
    Ok(ScanReport { entries, all_pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct LaxSelfTest {
    /// Max over samples of the Lax-cubic residual of the reconstructed roots.
    pub lax_residual: f64,
    /// Max |M-cubic - P(λ, M)| with the `+3kr` polynomial.
    pub plus_mismatch: f64,
    /// Same against the `-3kr` polynomial.
    pub minus_mismatch: f64,
    pub consistent_family: &'static str,
}

impl LaxSelfTest {
    pub fn passed(&self) -> bool {
        self.lax_residual < 1e-9 && self.consistent_family == "+3kr"
    }
}

/// Eliminates `(P, σ)` numerically on a fixed sample of `(k, c, λ)` and
/// compares the M-cubic against both sign families of the characteristic polynomial.
pub fn self_test() -> Result<LaxSelfTest> {
    let samples = [
        (0.1, 1.0, C64::new(0.3, 0.7)),
        (0.05, 2.0, C64::new(-0.4, 1.3)),
        (0.2, 1.0, C64::new(0.0, 2.5)),
        (0.3, 1.5, C64::new(1.1, -0.2)),
        (0.01, 0.5, C64::new(0.05, 0.0)),
    ];
    let mut lax_residual: f64 = 0.0;
    let mut plus: f64 = 0.0;
    let mut minus: f64 = 0.0;
    for (k, c, lambda) in samples {
        let p = WaveParams::new(k, c)?;
        let d = m_cubic(lambda, &p)?;
        lax_residual = lax_residual.max(d.max_cubic_residual());
        for m in [C64::new(0.37, -0.21), C64::new(-1.3, 0.4), cz(2.2)] {
            let mc = poly::eval_cubic(&m_cubic_coeffs(lambda, &p), m);
            plus = plus.max((mc - char_poly(lambda, m, &p)).norm());
            minus = minus.max((mc - char_poly_minus(lambda, m, &p)).norm());
        }
    }
    let consistent_family = match (plus < 1e-12, minus < 1e-12) {
        (true, false) => "+3kr",
        (false, true) => "-3kr",
        (true, true) => "both",
        (false, false) => "neither",
    };
    Ok(LaxSelfTest {
        lax_residual,
        plus_mismatch: plus,
        minus_mismatch: minus,
        consistent_family,
    })
}

/// Same zero set as the dispersion polynomial.
pub fn m_cubic_matches_char_poly(lambda: C64, p: &WaveParams) -> f64 {
    let a = m_cubic_coeffs(lambda, p);
    let b = char_poly_coeffs(lambda, p, 0.0);
    let s = b[3] / a[3];
    (0..4).map(|i| (a[i] * s - b[i]).norm()).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    FromPlus,
    FromMinus,
}

/// Root of the Lax cubic that is dominant when integrating away from the launch end.
pub fn extreme_root(sigma: C64, k: f64, direction: Direction, adjoint: bool) -> Result<C64> {
    let r = lax_roots(sigma, k, adjoint)?;
    Ok(match direction {
        Direction::FromPlus => r[0],
        Direction::FromMinus => r[2],
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LaxSolution {
    pub sigma: C64,
    pub l_target: C64,
    pub direction: Direction,
    pub adjoint: bool,
    /// Temporal rate `r`.
    pub rate: C64,
    pub xi: Vec<f64>,
    /// `e^{-lξ} f^{(j)}` for `j = 0..=5`.
    pub g: [Vec<C64>; 6],
}

impl LaxSolution {
    pub fn sign(&self) -> f64 {
        if self.adjoint {
            -1.0
        } else {
            1.0
        }
    }

    /// `f(ξ_i)`, not renormalized.
    pub fn f(&self, i: usize) -> C64 {
        self.g[0][i] * (self.l_target * self.xi[i]).exp()
    }

    /// Max over interior nodes of `|D₄(e^{-lξ}f'') - e^{-lξ}(f''' - l f'')|`, with `D₄` the
    /// fourth-order central difference and `f'''` from the Lax equation;
    /// relative to `max|f|`, both renormalized.
    pub fn ode_residual(&self) -> f64 {
        let n = self.xi.len();
        let h = self.xi[1] - self.xi[0];
        let scale = self.g[0].iter().map(|z| z.norm()).fold(0.0, f64::max);
        let f2 = &self.g[2];
        (2..n - 2)
            .map(|i| {
                let d = (f2[i - 2] - f2[i - 1] * 8.0 + f2[i + 1] * 8.0 - f2[i + 2]) / (12.0 * h);
                (d - (self.g[3][i] - self.l_target * f2[i])).norm()
            })
            .fold(0.0, f64::max)
            / scale
    }

    /// Residual of `r f = ±σ⁻¹ f'' + (c - u₀) f' + u₀' f`, relative, renormalized.
    pub fn time_residual(&self, profile: &Profile) -> f64 {
        let s = self.sign();
        let c = profile.params.c;
        let scale = self.g[0].iter().map(|z| z.norm()).fold(0.0, f64::max);
        (0..self.xi.len())
            .map(|i| {
                let lhs = self.rate * self.g[0][i];
                let rhs =
                    self.g[2][i] * s / self.sigma + self.g[1][i] * (c - profile.u0[i]) + self.g[0][i] * profile.u0_p[i];
                (lhs - rhs).norm()
            })
            .fold(0.0, f64::max)
            / scale
    }

    /// Slope of `log|f|` over the outer `frac` of the half domain at the launch end.
    pub fn launch_slope(&self, frac: f64) -> f64 {
        let n = self.xi.len();
        let w = ((n / 2) as f64 * frac).max(4.0) as usize;
        let range: Vec<usize> = match self.direction {
            Direction::FromPlus => (n - w..n).collect(),
            Direction::FromMinus => (0..w).collect(),
        };
        let pts: Vec<(f64, f64)> = range
            .iter()
            .map(|&i| (self.xi[i], self.l_target.re * self.xi[i] + self.g[0][i].norm().ln()))
            .collect();
        linear_slope(&pts)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LaxOptions {
    pub tol: Tolerance,
    /// Required gap between the real part of the target root and the others.
    pub root_gap: f64,
}

impl Default for LaxOptions {
    fn default() -> Self {
        LaxOptions {
            tol: Tolerance {
                rtol: 1e-11,
                atol: 1e-13,
            },
            root_gap: 1e-6,
        }
    }
}

pub fn lax_solve(
    sigma: C64,
    profile: &Profile,
    l_target: C64,
    direction: Direction,
    adjoint: bool,
) -> Result<LaxSolution> {
    lax_solve_with(sigma, profile, l_target, direction, adjoint, &LaxOptions::default())
}

pub fn lax_solve_with(
    sigma: C64,
    profile: &Profile,
    l_target: C64,
    direction: Direction,
    adjoint: bool,
    opts: &LaxOptions,
) -> Result<LaxSolution> {
    if sigma.norm() == 0.0 || !(sigma.re.is_finite() && sigma.im.is_finite()) {
        return Err(Error::InvalidInput("σ must be finite and nonzero".into()));
    }
    let p = &profile.params;
    let s = if adjoint { -1.0 } else { 1.0 };
    let roots = lax_roots(sigma, p.k, adjoint)?;
    let (idx, _) = roots
        .iter()
        .enumerate()
        .map(|(i, r)| (i, (r - l_target).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if (roots[idx] - l_target).norm() > 1e-8 * (1.0 + l_target.norm()) {
        return Err(Error::InvalidInput(format!(
            "l = {l_target} is not a root of the Lax cubic"
        )));
    }
    let ok = match direction {
        Direction::FromPlus => idx == 0 && roots[1].re - roots[0].re > opts.root_gap,
        Direction::FromMinus => idx == 2 && roots[2].re - roots[1].re > opts.root_gap,
    };
    if !ok {
        return Err(Error::InvalidInput(format!(
            "l = {l_target} is not the separated extreme root for this launch direction (roots {roots:?})"
        )));
    }
    let l = roots[idx];
    let cr = profile.crest();
    let n = profile.len();
    let m = profile.center();
    let k = p.k;
    // coefficient σ(μ - k) uses the cubic identity l - l³ = -s kσ
    let rhs = |y: &[f64; 7], side: f64| -> [f64; 7] {
        let q = y[0].exp();
        let pv = cr.point(q, side);
        let g = [C64::new(y[1], y[2]), C64::new(y[3], y[4]), C64::new(y[5], y[6])];
        let g3 = -l * 3.0 * g[2] + (cz(1.0) - l * l * 3.0) * g[1] + sigma * s * (pv.mu - k) * g[0];
        [side * cr.rhs(q) / q, g[1].re, g[1].im, g[2].re, g[2].im, g3.re, g3.im]
    };
    let mut state = vec![[0.0f64; 7]; n];
    let q_end = *profile.q_half.last().unwrap();
    let start = [q_end.ln(), 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let order: Vec<usize> = match direction {
        Direction::FromPlus => (0..n).rev().collect(),
        Direction::FromMinus => (0..n).collect(),
    };
    let mut ad = Adaptive::new(opts.tol, 0.01, 0.25);
    let mut y = start;
    let mut x = profile.xi[order[0]];
    state[order[0]] = y;
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        // the crest parametrization switches branch at ξ = 0
        let side = if a.max(b) > m { 1.0 } else { -1.0 };
        let mut f = |_t: f64, yy: &[f64; 7]| rhs(yy, side);
        ad.advance(&mut f, &mut x, &mut y, profile.xi[b])
            .map_err(|e| Error::Solver(format!("Lax shooting: {e}")))?;
        state[b] = y;
    }
    let mut g: [Vec<C64>; 6] = Default::default();
    for v in g.iter_mut() {
        v.resize(n, C64::new(0.0, 0.0));
    }
    for i in 0..n {
        let st = &state[i];
        let (g0, g1, g2) = (C64::new(st[1], st[2]), C64::new(st[3], st[4]), C64::new(st[5], st[6]));
        let pv = profile.point(i);
        let f0 = g0;
        let f1 = g1 + l * g0;
        let f2 = g2 + l * g1 * 2.0 + l * l * g0;
        let sm = sigma * s;
        let f3 = f1 + sm * pv.mu * f0;
        let f4 = f2 + sm * (pv.mup * f0 + pv.mu * f1);
        let f5 = f3 + sm * (pv.mupp * f0 + pv.mup * f1 * 2.0 + pv.mu * f2);
        for (j, fj) in [f0, f1, f2, f3, f4, f5].into_iter().enumerate() {
            g[j][i] = fj;
        }
    }
    Ok(LaxSolution {
        sigma,
        l_target: l,
        direction,
        adjoint,
        rate: temporal_rate(l, sigma, p, adjoint),
        xi: profile.xi.clone(),
        g,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SquaredEigenfunction {
    pub lambda: C64,
    /// `v^{(j)} = e^{Eξ} w[j]` with `E = l_φ + l_ψ`.
    pub exponent: C64,
    pub w: [Vec<C64>; 4],
    /// Interior relative residual of `(1 - ∂²)(λ - 𝒜)v`.
    pub residual: f64,
    pub interior: f64,
}

fn binom(n: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `v = (φψ - φ'ψ')'` from a forward and an adjoint solution with the same σ.
pub fn squared_eigenfunction(phi: &LaxSolution, psi: &LaxSolution, profile: &Profile) -> Result<SquaredEigenfunction> {
    squared_eigenfunction_on(phi, psi, profile, 0.8)
}

pub fn squared_eigenfunction_on(
    phi: &LaxSolution,
    psi: &LaxSolution,
    profile: &Profile,
    interior: f64,
) -> Result<SquaredEigenfunction> {
    let n = profile.len();
    if phi.xi.len() != n || psi.xi.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: phi.xi.len().max(psi.xi.len()),
        });
    }
    if phi.adjoint || !psi.adjoint {
        return Err(Error::InvalidInput("need a forward φ and an adjoint ψ".into()));
    }
    if (phi.sigma - psi.sigma).norm() > 1e-14 * phi.sigma.norm() {
        return Err(Error::InvalidInput("φ and ψ carry different σ".into()));
    }
    let lambda = phi.rate + psi.rate;
    let mut w: [Vec<C64>; 4] = Default::default();
    for v in w.iter_mut() {
        v.resize(n, C64::new(0.0, 0.0));
    }
    for i in 0..n {
        for (mi, wm) in w.iter_mut().enumerate() {
            let nn = mi + 1;
            let mut s = C64::new(0.0, 0.0);
            for j in 0..=nn {
                let b = binom(nn, j);
                s += (phi.g[j][i] * psi.g[nn - j][i] - phi.g[j + 1][i] * psi.g[nn - j + 1][i]) * b;
            }
            wm[i] = s;
        }
    }
    let c = profile.params.c;
    let lim = interior * profile.l;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        if profile.xi[i].abs() > lim {
            continue;
        }
        let (u, up, upp, uppp) = (profile.u0[i], profile.u0_p[i], profile.u0_pp[i], profile.u0_ppp[i]);
        let (v0, v1, v2, v3) = (w[0][i], w[1][i], w[2][i], w[3][i]);
        let lin =
            (v1 - v3) * c + v2 * (3.0 * up) + v1 * (3.0 * upp) - v1 * (4.0 * u) - v0 * (4.0 * up) + v3 * u + v0 * uppp;
        let r = (v0 - v2) * lambda - lin;
        num += r.norm_sqr();
        den += v0.norm_sqr();
    }
    let residual = if den == 0.0 { 0.0 } else { (num / den).sqrt() };
    Ok(SquaredEigenfunction {
        lambda,
        exponent: phi.l_target + psi.l_target,
        w,
        residual,
        interior,
    })
}
