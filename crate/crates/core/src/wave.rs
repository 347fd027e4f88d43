//! The smooth solitary-wave family and profile-derived grid functions.
//!
//! The profile is built from the quadrature form `(u')² = (u-k)² R(u)` with the
//! substitution `u = u_max - t²`, which removes the square-root singularity at
//! the crest. The deviation `q = t* - t` obeys a smooth scalar ODE that is
//! contracting in the forward direction, so the tail keeps full relative
//! precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub k: f64,
    pub c: f64,
}

impl WaveParams {
    pub fn new(k: f64, c: f64) -> Result<Self> {
        let p = WaveParams { k, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (k, c) = (self.k, self.c);
        if !(k.is_finite() && c.is_finite()) {
            return Err(Error::InvalidParams("k and c must be finite".into()));
        }
        if c <= 0.0 {
            return Err(Error::InvalidParams(format!("need c > 0, got c = {c}")));
        }
        if k <= 0.0 {
            return Err(Error::InvalidParams(format!("need k > 0, got k = {k}")));
        }
        if k >= c / 4.0 {
            return Err(Error::InvalidParams(format!(
                "need k < c/4, got k = {k}, c/4 = {}",
                c / 4.0
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub a: f64,
    pub e: f64,
    /// Crest height, the turning point of the quadrature inside `(k, c)`.
    pub u_max: f64,
    /// The other simple root of `E = V(u)`; it lies above `c`.
    pub u_upper: f64,
    pub r_decay: f64,
    pub alpha_crit: f64,
}

pub fn derived_constants(p: &WaveParams) -> Result<DerivedConstants> {
    p.validate()?;
    let (k, c) = (p.k, p.c);
    let s = (c * k).sqrt();
    let r = ((c - 4.0 * k) / (c - k)).sqrt();
    Ok(DerivedConstants {
        a: k * (c - k).powi(3),
        e: k * c - 2.0 * k * k,
        u_max: c - k - s,
        u_upper: c - k + s,
        r_decay: r,
        alpha_crit: r,
    })
}

/// `E - V(u)` in the unfactored form `E + u² - a/(c-u)²`.
pub fn quadrature_rhs(p: &WaveParams, d: &DerivedConstants, u: f64) -> f64 {
    d.e + u * u - d.a / (p.c - u).powi(2)
}

/// Pointwise profile data.
#[derive(Clone, Copy, Debug, Default)]
pub struct PointVals {
    pub dev: f64,
    pub u: f64,
    pub up: f64,
    pub upp: f64,
    pub uppp: f64,
    pub mu: f64,
    pub mup: f64,
    pub mupp: f64,
}

/// The reduced crest-to-tail ODE in the variable `q`.
#[derive(Clone, Copy, Debug)]
pub struct Crest {
    pub k: f64,
    pub c: f64,
    pub a: f64,
    pub u_max: f64,
    pub u_upper: f64,
    pub t_star: f64,
}

impl Crest {
    pub fn new(p: &WaveParams) -> Result<Self> {
        let d = derived_constants(p)?;
        Ok(Crest {
            k: p.k,
            c: p.c,
            a: d.a,
            u_max: d.u_max,
            u_upper: d.u_upper,
            t_star: (d.u_max - p.k).sqrt(),
        })
    }

    /// `dq/dξ` for `ξ > 0`.
    #[inline]
    pub fn rhs(&self, q: f64) -> f64 {
        let t = self.t_star - q;
        let dev = q * (self.t_star + t);
        let u = self.k + dev;
        -dev * (self.u_upper - u).sqrt() / (2.0 * (self.c - u))
    }

    /// Profile data at a point with crest deviation `q`; `side` is the sign of ξ.
    pub fn point(&self, q: f64, side: f64) -> PointVals {
        let t = self.t_star - q;
        let dev = q * (self.t_star + t);
        let u = self.k + dev;
        let w = self.c - u;
        let top = t * t;
        let bot = self.u_upper - u;
        let f = dev * bot.sqrt() / (2.0 * w);
        let up = -side * 2.0 * t * f;
        let r = top * bot / (w * w);
        let dr = -(bot + top) / (w * w) + 2.0 * top * bot / (w * w * w);
        let upp = dev * (r + 0.5 * dev * dr);
        let w4 = w.powi(4);
        let uppp = up * (1.0 - 3.0 * self.a / w4);
        let mu = self.a / (w * w * w);
        let mup = 3.0 * self.a * up / w4;
        let mupp = 3.0 * self.a * (upp / w4 + 4.0 * up * up / (w4 * w));
        PointVals {
            dev,
            u,
            up,
            upp,
            uppp,
            mu,
            mup,
            mupp,
        }
    }
}

/// Options for the profile solver.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Largest fixed RK substep of the crest ODE.
    pub substep: f64,
    /// Relative c-step for ∂_c u₀.
    pub dc_rel: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            substep: 2e-3,
            dc_rel: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Profile {
    pub params: WaveParams,
    pub consts: DerivedConstants,
    pub l: f64,
    pub h: f64,
    pub xi: Vec<f64>,
    pub u0: Vec<f64>,
    pub u0_p: Vec<f64>,
    pub u0_pp: Vec<f64>,
    pub u0_ppp: Vec<f64>,
    pub mu: Vec<f64>,
    pub dc_u0: Vec<f64>,
    /// `u0 - k` without cancellation.
    pub dev: Vec<f64>,
    /// Crest deviation `q` at the nodes with ξ ≥ 0.
    pub q_half: Vec<f64>,
    pub opts: ProfileOptions,
}

impl Profile {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn center(&self) -> usize {
        self.xi.len() / 2
    }

    pub fn crest(&self) -> Crest {
        Crest::new(&self.params).expect("validated at construction")
    }

    /// Pointwise data at node `i`.
    pub fn point(&self, i: usize) -> PointVals {
        let m = self.center();
        let (j, side) = if i >= m { (i - m, 1.0) } else { (m - i, -1.0) };
        self.crest().point(self.q_half[j], side)
    }
}

fn grid_size(l: f64, h: f64) -> Result<(usize, f64)> {
    if !(l > 0.0 && h > 0.0 && l.is_finite() && h.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need L > 0 and h > 0, got L = {l}, h = {h}"
        )));
    }
    let half = (l / h).round();
    if half < 3.0 {
        return Err(Error::InvalidInput("grid too coarse: need L/h ≥ 3".into()));
    }
    if half > 5e6 {
        return Err(Error::InvalidInput("grid too fine".into()));
    }
    Ok((half as usize, l / half))
}

fn crest_half(cr: &Crest, half: usize, h: f64, substep: f64) -> Vec<f64> {
    let m = (h / substep).ceil().max(1.0) as usize;
    let mut f = |_x: f64, y: &[f64; 1]| [cr.rhs(y[0])];
    let mut q = vec![0.0; half + 1];
    q[0] = cr.t_star;
    for j in 0..half {
        q[j + 1] = ode::fixed_steps(&mut f, j as f64 * h, [q[j]], (j + 1) as f64 * h, m)[0];
    }
    q
}

fn dev_on_grid(cr: &Crest, q_half: &[f64]) -> Vec<f64> {
    let half = q_half.len() - 1;
    let mut out = vec![0.0; 2 * half + 1];
    for (j, &q) in q_half.iter().enumerate() {
        let d = q * (2.0 * cr.t_star - q);
        out[half + j] = d;
        out[half - j] = d;
    }
    out
}

pub fn solve_profile(params: &WaveParams, l: f64, h: f64) -> Result<Profile> {
    solve_profile_with(params, l, h, ProfileOptions::default())
}

pub fn solve_profile_with(params: &WaveParams, l: f64, h: f64, opts: ProfileOptions) -> Result<Profile> {
    let mut p = solve_base(params, l, h, opts)?;
    p.dc_u0 = dc_profile(params, &p, opts.dc_rel * params.c)?;
    Ok(p)
}

/// Profile without the c-derivative column.
pub fn solve_base(params: &WaveParams, l: f64, h: f64, opts: ProfileOptions) -> Result<Profile> {
    let consts = derived_constants(params)?;
    if !(opts.substep > 0.0) {
        return Err(Error::InvalidInput("substep must be positive".into()));
    }
    let (half, h) = grid_size(l, h)?;
    let cr = Crest::new(params)?;
    let q_half = crest_half(&cr, half, h, opts.substep);
    if q_half.iter().any(|q| !q.is_finite() || *q < 0.0 || *q > cr.t_star) {
        return Err(Error::Solver("crest ODE left the admissible band".into()));
    }
    let n = 2 * half + 1;
    let xi: Vec<f64> = (0..n).map(|i| (i as f64 - half as f64) * h).collect();
    let mut cols = vec![vec![0.0; n]; 7];
    for i in 0..n {
        let (j, side) = if i >= half { (i - half, 1.0) } else { (half - i, -1.0) };
        let pv = cr.point(q_half[j], side);
        let vals = [pv.dev, pv.u, pv.up, pv.upp, pv.uppp, pv.mu, 0.0];
        for (c, v) in cols.iter_mut().zip(vals) {
            c[i] = v;
        }
    }
    // exact zero at the crest
    cols[2][half] = 0.0;
    cols[4][half] = 0.0;
    let mut it = cols.into_iter();
    let mut next = || it.next().unwrap();
    Ok(Profile {
        params: *params,
        consts,
        l,
        h,
        xi,
        dev: next(),
        u0: next(),
        u0_p: next(),
        u0_pp: next(),
        u0_ppp: next(),
        mu: next(),
        dc_u0: next(),
        q_half,
        opts,
    })
}

/// Phase-matched centered difference in c with one Richardson step.
pub fn dc_profile(params: &WaveParams, profile: &Profile, dc: f64) -> Result<Vec<f64>> {
    if !(dc > 0.0) {
        return Err(Error::InvalidInput("dc must be positive".into()));
    }
    let (k, c) = (params.k, params.c);
    if c - dc <= 4.0 * k {
        return Err(Error::InvalidParams(format!(
            "c - dc = {} must exceed 4k = {}",
            c - dc,
            4.0 * k
        )));
    }
    let half = profile.center();
    let h = profile.h;
    let sub = profile.opts.substep;
    let dev_at = |cc: f64| -> Result<Vec<f64>> {
        let cr = Crest::new(&WaveParams::new(k, cc)?)?;
        Ok(dev_on_grid(&cr, &crest_half(&cr, half, h, sub)))
    };
    let (p1, m1) = (dev_at(c + dc)?, dev_at(c - dc)?);
    let (p2, m2) = (dev_at(c + 0.5 * dc)?, dev_at(c - 0.5 * dc)?);
    Ok((0..p1.len())
        .map(|i| {
            let d1 = (p1[i] - m1[i]) / (2.0 * dc);
            let d2 = (p2[i] - m2[i]) / dc;
            (4.0 * d2 - d1) / 3.0
        })
        .collect())
}

/// Profile value and slope at arbitrary points.
pub fn sample_profile(params: &WaveParams, xs: &[f64], substep: f64) -> Result<Vec<PointVals>> {
    let cr = Crest::new(params)?;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].abs().total_cmp(&xs[b].abs()));
    let mut f = |_x: f64, y: &[f64; 1]| [cr.rhs(y[0])];
    let mut out = vec![PointVals::default(); xs.len()];
    let (mut x, mut q) = (0.0, cr.t_star);
    for i in order {
        let target = xs[i].abs();
        if !target.is_finite() {
            return Err(Error::InvalidInput("non-finite sample point".into()));
        }
        if target > x {
            let m = ((target - x) / substep).ceil().max(1.0) as usize;
            q = ode::fixed_steps(&mut f, x, [q], target, m)[0];
            x = target;
        }
        let side = if xs[i] >= 0.0 { 1.0 } else { -1.0 };
        out[i] = cr.point(q, side);
    }
    Ok(out)
}

/// Max pointwise residual of the unfactored quadrature form.
pub fn quadrature_residual(p: &Profile) -> f64 {
    p.u0.iter()
        .zip(&p.u0_p)
        .map(|(&u, &up)| (up * up - quadrature_rhs(&p.params, &p.consts, u)).abs())
        .fold(0.0, f64::max)
}

/// Max residual of `u'' = u - a/(c-u)³` with `u''` from a fourth-order
/// centered difference of the sampled profile.
pub fn ode_residual(p: &Profile) -> f64 {
    let h2 = 12.0 * p.h * p.h;
    let d = &p.dev;
    (2..p.len() - 2)
        .map(|i| {
            let d2 = (-d[i + 2] + 16.0 * d[i + 1] - 30.0 * d[i] + 16.0 * d[i - 1] - d[i - 2]) / h2;
            let u = p.u0[i];
            (d2 - (u - p.consts.a / (p.params.c - u).powi(3))).abs()
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of `ln(u0 - k)` over `ξ ∈ [lo, hi]`.
pub fn tail_slope(p: &Profile, lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> =
        p.xi.iter()
            .zip(&p.dev)
            .filter(|(x, d)| **x >= lo && **x <= hi && **d > 0.0)
            .map(|(x, d)| (*x, d.ln()))
            .collect();
    linear_slope(&pts)
}

pub fn linear_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
