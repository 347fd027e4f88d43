//! Evans function by renormalized shooting, and argument-principle counts.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dispersion::{char_poly_coeffs, spectral_gap, Weight};
use crate::error::{Error, Result};
use crate::ode::{Adaptive, Tolerance};
use crate::poly;
use crate::wave::{PointVals, Profile};

/// Row three of the first-order system for `(v, v', v'')`.
pub fn system_row(pv: &PointVals, c: f64, lambda: C64) -> [C64; 3] {
    let w = c - pv.u;
    [
        (C64::new(pv.uppp - 4.0 * pv.up, 0.0) - lambda) / w,
        C64::new((c + 3.0 * pv.upp - 4.0 * pv.u) / w, 0.0),
        (lambda + 3.0 * pv.up) / w,
    ]
}

/// Row three of the asymptotic matrix.
pub fn limit_row(lambda: C64, k: f64, c: f64) -> [C64; 3] {
    let b = c - k;
    [-lambda / b, C64::new((c - 4.0 * k) / b, 0.0), lambda / b]
}

#[derive(Clone, Copy, Debug)]
pub struct EvansOptions {
    pub tol: Tolerance,
    /// Required gap between the real parts of the two leftmost roots.
    pub root_gap: f64,
}

impl Default for EvansOptions {
    fn default() -> Self {
        EvansOptions {
            tol: Tolerance {
                rtol: 1e-10,
                atol: 1e-12,
            },
            root_gap: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EvansSample {
    pub lambda: C64,
    pub value: C64,
    /// log of the scale removed by the renormalization, `-2 Re(r₁) L`.
    pub renorm_exponent: f64,
}

/// The decaying root `r₁` of `P(λ, ·)`, validated against the weight.
pub fn decaying_root(lambda: C64, profile: &Profile, alpha: f64, opts: &EvansOptions) -> Result<C64> {
    let roots = poly::cubic_roots(char_poly_coeffs(lambda, &profile.params, 0.0))?;
    check_roots(lambda, &roots, alpha, opts)?;
    Ok(roots[0])
}

fn check_roots(lambda: C64, roots: &[C64; 3], alpha: f64, opts: &EvansOptions) -> Result<()> {
    if roots[1].re - roots[0].re < opts.root_gap {
        return Err(Error::NearEssentialSpectrum(format!(
            "λ = {lambda}: leftmost roots {} and {} not separated",
            roots[0], roots[1]
        )));
    }
    if !(roots[0].re < -alpha && roots[1].re > -alpha) {
        return Err(Error::NearEssentialSpectrum(format!(
            "λ = {lambda} is not right of the essential spectrum for alpha = {alpha} (roots {:?})",
            roots
        )));
    }
    Ok(())
}

fn pack(z: &[C64; 3], q: f64) -> [f64; 7] {
    [q, z[0].re, z[0].im, z[1].re, z[1].im, z[2].re, z[2].im]
}

fn unpack(y: &[f64; 7]) -> [C64; 3] {
    [C64::new(y[1], y[2]), C64::new(y[3], y[4]), C64::new(y[5], y[6])]
}

/// Shoot `Z' = (A - αI - ρ I) Z` from `+L` (right) or the adjoint
/// `W' = (-(A - αI)ᵀ + ρ I) W` from `-L` (left), carrying the profile along.
fn shoot(
    profile: &Profile,
    lambda: C64,
    alpha: f64,
    rho: C64,
    start: [C64; 3],
    right: bool,
    tol: Tolerance,
) -> Result<[C64; 3]> {
    let cr = profile.crest();
    let c = profile.params.c;
    let l = profile.xi[profile.len() - 1];
    let q0 = *profile.q_half.last().unwrap();
    let side = if right { 1.0 } else { -1.0 };
    let shift = C64::new(alpha, 0.0) + rho;
    let mut f = |_x: f64, y: &[f64; 7]| -> [f64; 7] {
        // ln q keeps the tail phase under relative error control
        let q = y[0].exp();
        let pv = cr.point(q, side);
        let dq = side * cr.rhs(q) / q;
        let z = unpack(y);
        let row = system_row(&pv, c, lambda);
        let out = if right {
            [
                z[1] - shift * z[0],
                z[2] - shift * z[1],
                row[0] * z[0] + row[1] * z[1] + row[2] * z[2] - shift * z[2],
            ]
        } else {
            // -(A - αI)ᵀ W + ρ W = -Aᵀ W + (α + ρ) W
            [
                -row[0] * z[2] + shift * z[0],
                -z[0] - row[1] * z[2] + shift * z[1],
                -z[1] - row[2] * z[2] + shift * z[2],
            ]
        };
        pack(&out, dq)
    };
    let mut ad = Adaptive::new(tol, 0.05, 0.5);
    let mut x = side * l;
    let mut y = pack(&start, q0.ln());
    ad.advance(&mut f, &mut x, &mut y, 0.0).map_err(|e| match e {
        Error::Solver(m) => Error::Solver(format!("Evans shooting at λ = {lambda}: {m}")),
        other => other,
    })?;
    Ok(unpack(&y))
}

fn eval_with_shift(
    lambda: C64,
    profile: &Profile,
    alpha_sys: f64,
    alpha_check: f64,
    opts: &EvansOptions,
) -> Result<EvansSample> {
    let p = &profile.params;
    // roots of the shifted system come from P(λ, ρ + α) directly
    let rho = poly::cubic_roots(char_poly_coeffs(lambda, p, alpha_sys))?;
    let unshifted = rho.map(|z| z + alpha_sys);
    check_roots(lambda, &unshifted, alpha_check, opts)?;
    let r1 = unshifted[0];
    let vp = [C64::new(1.0, 0.0), r1, r1 * r1];
    let row = limit_row(lambda, p.k, p.c);
    let (p1, p2) = (row[1], row[2]);
    let dchi = r1 * r1 * 3.0 - p2 * r1 * 2.0 - p1;
    let vm = [
        (r1 * r1 - p2 * r1 - p1) / dchi,
        (r1 - p2) / dchi,
        C64::new(1.0, 0.0) / dchi,
    ];
    let x = shoot(profile, lambda, alpha_sys, rho[0], vp, true, opts.tol)?;
    let y = shoot(profile, lambda, alpha_sys, rho[0], vm, false, opts.tol)?;
    let value = x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let l = profile.xi[profile.len() - 1];
    Ok(EvansSample {
        lambda,
        value,
        renorm_exponent: -2.0 * rho[0].re * l,
    })
}

/// Evans function of the unweighted system, valid right of the essential
/// spectrum of weight `alpha_check`.
pub fn evans_eval(lambda: C64, profile: &Profile, alpha_check: Weight) -> Result<EvansSample> {
    evans_eval_with(lambda, profile, alpha_check, &EvansOptions::default())
}

pub fn evans_eval_with(
    lambda: C64,
    profile: &Profile,
    alpha_check: Weight,
    opts: &EvansOptions,
) -> Result<EvansSample> {
    eval_with_shift(lambda, profile, 0.0, alpha_check.0, opts)
}

/// Evans function computed through the conjugated system `A - αI`.
pub fn evans_eval_weighted(lambda: C64, profile: &Profile, alpha: Weight, opts: &EvansOptions) -> Result<EvansSample> {
    eval_with_shift(lambda, profile, alpha.0, alpha.0, opts)
}

/// `|D_α(λ) - D(λ)| / |D(λ)|`.
pub fn weighted_equivalence_check(lambda: C64, profile: &Profile, alpha: Weight) -> Result<f64> {
    let opts = EvansOptions::default();
    let d0 = evans_eval_with(lambda, profile, alpha, &opts)?.value;
    let da = evans_eval_weighted(lambda, profile, alpha, &opts)?.value;
    Ok((da - d0).norm() / d0.norm())
}

#[derive(Clone, Debug, Serialize)]
pub struct WindingResult {
    /// Nodes after refinement (closed implicitly).
    pub contour: Vec<C64>,
    pub values: Vec<C64>,
    pub winding: i64,
    pub min_abs_d: f64,
}

pub fn circle(center: C64, radius: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            center + C64::from_polar(radius, th)
        })
        .collect()
}

fn segment(a: C64, b: C64, step: f64, out: &mut Vec<C64>) {
    let m = ((b - a).norm() / step).ceil().max(1.0) as usize;
    for j in 0..m {
        out.push(a + (b - a) * (j as f64 / m as f64));
    }
}

/// Counter-clockwise rectangle `[re0, re1] × [im0, im1]`.
pub fn rectangle(re0: f64, re1: f64, im0: f64, im1: f64, step: f64) -> Vec<C64> {
    let c = [
        C64::new(re1, im0),
        C64::new(re1, im1),
        C64::new(re0, im1),
        C64::new(re0, im0),
    ];
    let mut out = Vec::new();
    for j in 0..4 {
        segment(c[j], c[(j + 1) % 4], step, &mut out);
    }
    out
}

/// Rectangle minus the disc `|λ| ≤ radius` (which must sit strictly inside),
/// joined by a slit along the positive real axis.
pub fn keyhole(re0: f64, re1: f64, im_max: f64, radius: f64, step: f64) -> Result<Vec<C64>> {
    if !(re0 < -radius && re1 > radius && im_max > radius && radius > 0.0) {
        return Err(Error::InvalidInput("keyhole disc must lie inside the rectangle".into()));
    }
    let z = |re: f64, im: f64| C64::new(re, im);
    let mut out = Vec::new();
    segment(z(re1, 0.0), z(re1, im_max), step, &mut out);
    segment(z(re1, im_max), z(re0, im_max), step, &mut out);
    segment(z(re0, im_max), z(re0, -im_max), step, &mut out);
    segment(z(re0, -im_max), z(re1, -im_max), step, &mut out);
    segment(z(re1, -im_max), z(re1, 0.0), step, &mut out);
    // lower lip of the slit, leftward
    segment(z(re1, 0.0), z(radius, 0.0), step, &mut out);
    // clockwise around the disc, from angle 2π down to 0
    let n = ((2.0 * std::f64::consts::PI * radius) / step).ceil().max(16.0) as usize;
    for j in 0..n {
        let th = 2.0 * std::f64::consts::PI * (1.0 - j as f64 / n as f64);
        out.push(C64::from_polar(radius, th));
    }
    // upper lip, rightward (the last point closes onto the first)
    segment(z(radius, 0.0), z(re1, 0.0), step, &mut out);
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct WindingOptions {
    pub max_depth: usize,
    /// Segments are split while the phase step exceeds this.
    pub refine_above: f64,
}

impl Default for WindingOptions {
    fn default() -> Self {
        WindingOptions {
            max_depth: 14,
            refine_above: std::f64::consts::FRAC_PI_4,
        }
    }
}

/// Unrefined winding of a closed sequence of nonzero values, in turns.
pub fn phase_winding(values: &[C64]) -> f64 {
    let n = values.len();
    (0..n).map(|j| (values[(j + 1) % n] / values[j]).arg()).sum::<f64>() / (2.0 * std::f64::consts::PI)
}

pub fn winding_count(nodes: &[C64], profile: &Profile, alpha: Weight) -> Result<WindingResult> {
    winding_count_with(
        nodes,
        profile,
        alpha,
        &EvansOptions::default(),
        &WindingOptions::default(),
    )
}

pub fn winding_count_with(
    nodes: &[C64],
    profile: &Profile,
    alpha: Weight,
    eopts: &EvansOptions,
    wopts: &WindingOptions,
) -> Result<WindingResult> {
    if nodes.len() < 3 {
        return Err(Error::InvalidInput("contour needs at least 3 nodes".into()));
    }
    let eval = |z: &C64| evans_eval_with(*z, profile, alpha, eopts).map(|s| s.value);
    let vals: Vec<C64> = nodes.par_iter().map(eval).collect::<Result<_>>()?;
    let n = nodes.len();
    let mut contour = Vec::with_capacity(2 * n);
    let mut values = Vec::with_capacity(2 * n);
    let mut total = 0.0;
    for j in 0..n {
        let (a, b) = (nodes[j], nodes[(j + 1) % n]);
        let (da, db) = (vals[j], vals[(j + 1) % n]);
        contour.push(a);
        values.push(da);
        total += refine(a, b, da, db, 0, profile, alpha, eopts, wopts, &mut contour, &mut values)?;
    }
    let w = total / (2.0 * std::f64::consts::PI);
    if (w - w.round()).abs() > 0.05 {
        return Err(Error::Contour(format!("non-integer winding {w:.4}")));
    }
    let min_abs_d = values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    let max_abs_d = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(min_abs_d > 1e-12 * max_abs_d) {
        return Err(Error::Contour(format!(
            "contour passes too close to a zero (min |D| = {min_abs_d:e})"
        )));
    }
    Ok(WindingResult {
        contour,
        values,
        winding: w.round() as i64,
        min_abs_d,
    })
}

#[allow(clippy::too_many_arguments)]
fn refine(
    a: C64,
    b: C64,
    da: C64,
    db: C64,
    depth: usize,
    profile: &Profile,
    alpha: Weight,
    eopts: &EvansOptions,
    wopts: &WindingOptions,
    contour: &mut Vec<C64>,
    values: &mut Vec<C64>,
) -> Result<f64> {
    let step = (db / da).arg();
    if step.abs() <= wopts.refine_above {
        return Ok(step);
    }
    if depth >= wopts.max_depth {
        if step.abs() < std::f64::consts::FRAC_PI_2 {
            return Ok(step);
        }
        return Err(Error::Contour(format!(
            "contour too close to zero/essential spectrum near λ = {a} (phase step {step:.3})"
        )));
    }
    let m = (a + b) * 0.5;
    let dm = evans_eval_with(m, profile, alpha, eopts)?.value;
    let s1 = refine(a, m, da, dm, depth + 1, profile, alpha, eopts, wopts, contour, values)?;
    contour.push(m);
    values.push(dm);
    let s2 = refine(m, b, dm, db, depth + 1, profile, alpha, eopts, wopts, contour, values)?;
    Ok(s1 + s2)
}

#[derive(Clone, Debug, Serialize)]
pub struct EtaCertificate {
    pub eta: Option<f64>,
    pub gap: f64,
    /// `(η, winding or error)` per attempt, largest first.
    pub attempts: Vec<(f64, std::result::Result<i64, String>)>,
}

/// Largest `η = jΔ_α/8` for which the keyhole `[-η, re_max] × [-im_max, im_max]`
/// minus the disc of `radius` has winding zero.
pub fn certified_eta(
    profile: &Profile,
    alpha: Weight,
    re_max: f64,
    im_max: f64,
    radius: f64,
    step: f64,
) -> Result<EtaCertificate> {
    let gap = spectral_gap(&profile.params, alpha)?.value;
    let mut attempts = Vec::new();
    for j in (1..8).rev() {
        let eta = gap * j as f64 / 8.0;
        if eta <= radius {
            break;
        }
        let nodes = keyhole(-eta, re_max, im_max, radius, step)?;
        match winding_count(&nodes, profile, alpha) {
            Ok(w) => {
                attempts.push((eta, Ok(w.winding)));
                if w.winding == 0 {
                    return Ok(EtaCertificate {
                        eta: Some(eta),
                        gap,
                        attempts,
                    });
                }
            }
            Err(e) => attempts.push((eta, Err(e.to_string()))),
        }
    }
    Ok(EtaCertificate {
        eta: None,
        gap,
        attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::{solve_base, WaveParams};

    #[test]
    fn profile_slope_solves_system_at_zero() {
        // (u0', u0'', u0''') must satisfy X' = A(ξ, 0) X
        let p = solve_base(&WaveParams::new(0.1, 1.0).unwrap(), 20.0, 0.02, Default::default()).unwrap();
        let c = p.params.c;
        for i in (10..p.len() - 10).step_by(37) {
            let pv = p.point(i);
            let row = system_row(&pv, c, C64::new(0.0, 0.0));
            // fourth derivative from differentiating u''' = u'(1 - 3a/(c-u)^4)
            let a = p.consts.a;
            let w = c - pv.u;
            let u4 = pv.upp * (1.0 - 3.0 * a / w.powi(4)) - 12.0 * a * pv.up * pv.up / w.powi(5);
            let rhs = row[0] * pv.up + row[1] * pv.upp + row[2] * pv.uppp;
            assert!((rhs.re - u4).abs() < 1e-11, "at {}", p.xi[i]);
        }
    }
}
