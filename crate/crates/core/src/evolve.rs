//! Linearized operator, free and linearized semigroups, the DP flow in
//! momentum form, and modulation fitting.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dispersion::{char_poly_coeffs, symbol, Band, Weight};
use crate::error::{check_len, Error, Result};
use crate::kernel::{conserved_dev, ConservedValues, KernelBasis};
use crate::poly;
use crate::quad::{exp_sweeps, inner};
use crate::spectral::{to_complex, Periodic};
use crate::wave::{linear_slope, sample_profile, Profile, WaveParams};

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (alpha - 1.0).abs() < 1e-12 || !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidInput(format!(
            "alpha = {alpha}: need alpha ≥ 0, alpha ≠ 1"
        )));
    }
    Ok(())
}

/// Shifted derivative symbol `iκ - α`, with the Nyquist wavenumber folded to 0
/// so that real data stay real and the discrete adjoint is the transpose.
fn shifted(grid: &Periodic, alpha: f64) -> Vec<C64> {
    let nyq = grid.n % 2 == 0;
    grid.kappa
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let k = if nyq && j == grid.n / 2 { 0.0 } else { k };
            C64::new(-alpha, k)
        })
        .collect()
}

/// `𝒜_α = P₁(∂-α)[(c-u₀)·] + P₂(∂-α)` on a periodic grid, with
/// `P₁(D) = D(4-D²)/(1-D²)` and `P₂(D) = -3cD/(1-D²)`.
#[derive(Clone, Debug)]
pub struct LinearOperator {
    pub params: WaveParams,
    pub alpha: f64,
    pub grid: Periodic,
    /// `c - u₀` at the periodic nodes.
    pub cmu: Vec<f64>,
    p1: Vec<C64>,
    p2: Vec<C64>,
    p1_adj: Vec<C64>,
    p2_adj: Vec<C64>,
}

impl LinearOperator {
    /// On the profile grid with its last node dropped (period `2L`).
    pub fn new(profile: &Profile, alpha: Weight) -> Result<Self> {
        let n = profile.len() - 1;
        let cmu = profile.u0[..n].iter().map(|u| profile.params.c - u).collect();
        Self::build(profile.params, alpha.0, n, profile.h, cmu)
    }

    /// Constant background `u₀ ≡ k`.
    pub fn constant(params: WaveParams, alpha: Weight, n: usize, h: f64) -> Result<Self> {
        params.validate()?;
        Self::build(params, alpha.0, n, h, vec![params.c - params.k; n])
    }

    fn build(params: WaveParams, alpha: f64, n: usize, h: f64, cmu: Vec<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        if n < 8 {
            return Err(Error::InvalidInput("grid too small".into()));
        }
        let grid = Periodic::new(n, h);
        let c = params.c;
        let p1f = |d: C64| d * (4.0 * one() - d * d) / (one() - d * d);
        let p2f = |d: C64| -d * (3.0 * c) / (one() - d * d);
        let fwd = shifted(&grid, alpha);
        // transpose in the real pairing: D ↦ -(iκ + α) = -conj-free flip of κ
        let adj: Vec<C64> = fwd.iter().map(|d| C64::new(d.re, -d.im)).collect();
        Ok(LinearOperator {
            params,
            alpha,
            p1: fwd.iter().map(|&d| p1f(d)).collect(),
            p2: fwd.iter().map(|&d| p2f(d)).collect(),
            p1_adj: adj.iter().map(|&d| p1f(d)).collect(),
            p2_adj: adj.iter().map(|&d| p2f(d)).collect(),
            grid,
            cmu,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.n
    }

    pub fn is_empty(&self) -> bool {
        self.grid.n == 0
    }

    pub fn apply_c(&self, w: &[C64]) -> Result<Vec<C64>> {
        check_len(self.len(), w.len())?;
        let t: Vec<C64> = w.iter().zip(&self.cmu).map(|(z, m)| z * m).collect();
        let mut th = self.grid.forward(&t);
        let wh = self.grid.forward(w);
        for j in 0..self.len() {
            th[j] = th[j] * self.p1[j] + wh[j] * self.p2[j];
        }
        Ok(self.grid.inverse(&th))
    }

    pub fn apply(&self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply_c(&to_complex(w))?.iter().map(|z| z.re).collect())
    }

    /// Transpose of [`apply`](Self::apply) in the real `L²` pairing.
    pub fn apply_adjoint(&self, eta: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), eta.len())?;
        let eh = self.grid.forward(&to_complex(eta));
        let a: Vec<C64> = eh.iter().zip(&self.p1_adj).map(|(z, s)| z * s).collect();
        let b: Vec<C64> = eh.iter().zip(&self.p2_adj).map(|(z, s)| z * s).collect();
        let a = self.grid.inverse(&a);
        let b = self.grid.inverse(&b);
        Ok((0..self.len()).map(|j| self.cmu[j] * a[j].re + b[j].re).collect())
    }

    /// Largest `|λ|` of the discrete operator by power iteration (seeded).
    pub fn spectral_radius(&self, iters: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<C64> = (0..self.len())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut est = 0.0;
        for _ in 0..iters {
            let nv = self.grid.norm(&v);
            v.iter_mut().for_each(|z| *z /= nv);
            let av = self.apply_c(&v).expect("length checked");
            est = self.grid.norm(&av);
            v = av;
        }
        est
    }

    /// Step size for classical RK4 from the measured spectral radius.
    pub fn suggested_dt(&self) -> f64 {
        2.0 / (1.1 * self.spectral_radius(60, 7))
    }
}

fn drop_last(w: &[f64]) -> &[f64] {
    &w[..w.len() - 1]
}

fn wrap(mut w: Vec<f64>) -> Vec<f64> {
    w.push(w[0]);
    w
}

/// `𝒜_α w` on the profile grid (the last node is the periodic image of the first).
pub fn apply_linearized(w: &[f64], profile: &Profile, alpha: Weight) -> Result<Vec<f64>> {
    check_len(profile.len(), w.len())?;
    let op = LinearOperator::new(profile, alpha)?;
    Ok(wrap(op.apply(drop_last(w))?))
}

pub fn apply_linearized_adjoint(eta: &[f64], profile: &Profile, alpha: Weight) -> Result<Vec<f64>> {
    check_len(profile.len(), eta.len())?;
    let op = LinearOperator::new(profile, alpha)?;
    Ok(wrap(op.apply_adjoint(drop_last(eta))?))
}

/// `e^{𝒜_α^∞ t} w₀` by the exact Fourier multiplier on the periodic grid.
pub fn free_evolve(w0: &[C64], alpha: Weight, t: f64, params: &WaveParams, h: f64) -> Result<Vec<C64>> {
    check_alpha(alpha.0)?;
    params.validate()?;
    let grid = Periodic::new(w0.len(), h);
    let d = shifted(&grid, alpha.0);
    let mut wh = grid.forward(w0);
    wh.iter_mut()
        .zip(&d)
        .for_each(|(z, &s)| *z *= (symbol(s, params) * t).exp());
    Ok(grid.inverse(&wh))
}

/// `max_κ Re s(iκ - α)` over the periodic grid: the exponential rate of
/// `‖e^{𝒜_α^∞ t}‖`.
pub fn free_growth_bound(alpha: Weight, params: &WaveParams, n: usize, h: f64) -> Result<f64> {
    check_alpha(alpha.0)?;
    params.validate()?;
    let grid = Periodic::new(n, h);
    Ok(shifted(&grid, alpha.0)
        .iter()
        .map(|&d| symbol(d, params).re)
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub t: Vec<f64>,
    pub norm: Vec<f64>,
    /// Least-squares slope of `ln‖w‖`.
    pub slope: f64,
    pub window: (f64, f64),
}

pub fn fit_log_slope(t: &[f64], norm: &[f64], window: (f64, f64)) -> f64 {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(norm)
        .filter(|(s, n)| **s >= window.0 && **s <= window.1 && **n > 0.0)
        .map(|(s, n)| (*s, n.ln()))
        .collect();
    linear_slope(&pts)
}

/// Norm history of the free flow sampled at `samples` equally spaced times.
pub fn free_decay(
    w0: &[C64],
    alpha: Weight,
    params: &WaveParams,
    h: f64,
    t_end: f64,
    samples: usize,
    window: (f64, f64),
) -> Result<DecayFit> {
    let grid = Periodic::new(w0.len(), h);
    let mut t = Vec::with_capacity(samples + 1);
    let mut norm = Vec::with_capacity(samples + 1);
    for j in 0..=samples {
        let s = t_end * j as f64 / samples as f64;
        let w = free_evolve(w0, alpha, s, params, h)?;
        t.push(s);
        norm.push(grid.norm(&w));
    }
    let slope = fit_log_slope(&t, &norm, window);
    Ok(DecayFit { t, norm, slope, window })
}

/// Green's function of `P(λ, ∂ - α)`, leading coefficient `c - k`.
#[derive(Clone, Debug, Serialize)]
pub struct GreenFunction {
    pub lambda: C64,
    pub alpha: f64,
    /// `ρ_j = r_j + α`, ascending real part; `ρ₁` decays to the right.
    pub roots: [C64; 3],
    pub a: [C64; 3],
    pub lead: f64,
}

pub fn free_green(lambda: C64, alpha: Weight, params: &WaveParams) -> Result<GreenFunction> {
    check_alpha(alpha.0)?;
    params.validate()?;
    let r = poly::cubic_roots(char_poly_coeffs(lambda, params, 0.0))?;
    let rho = r.map(|z| z + alpha.0);
    if !(rho[0].re < 0.0 && rho[1].re > 0.0) {
        return Err(Error::NearEssentialSpectrum(format!(
            "λ = {lambda} is not right of the essential spectrum for alpha = {}",
            alpha.0
        )));
    }
    let sep = (rho[0] - rho[1])
        .norm()
        .min((rho[1] - rho[2]).norm())
        .min((rho[0] - rho[2]).norm());
    if sep < 1e-8 {
        return Err(Error::NearEssentialSpectrum(format!(
            "coalescing roots at λ = {lambda}"
        )));
    }
    let lead = params.c - params.k;
    Ok(GreenFunction {
        lambda,
        alpha: alpha.0,
        roots: rho,
        a: coefficients(&rho, lead),
        lead,
    })
}

/// `a₁ = 1/(L Π(ρ₁-ρᵢ))`, `a_{2,3} = -1/(L Π(ρ_j-ρᵢ))`.
fn coefficients(rho: &[C64; 3], lead: f64) -> [C64; 3] {
    let pr = |j: usize| -> C64 { (0..3).filter(|&i| i != j).fold(one(), |acc, i| acc * (rho[j] - rho[i])) };
    [one() / (pr(0) * lead), -one() / (pr(1) * lead), -one() / (pr(2) * lead)]
}

impl GreenFunction {
    /// `G^{(d)}(y)` for `d = 0, 1, 2`.
    pub fn eval(&self, y: f64, d: i32) -> C64 {
        if y > 0.0 {
            self.a[0] * self.roots[0].powi(d) * (self.roots[0] * y).exp()
        } else {
            (1..3)
                .map(|j| self.a[j] * self.roots[j].powi(d) * (self.roots[j] * y).exp())
                .sum()
        }
    }

    /// `(G(0+)-G(0-), G'(0+)-G'(0-), G''(0+)-G''(0-))`.
    pub fn jumps(&self) -> [C64; 3] {
        [0, 1, 2].map(|d| self.eval(1e-300, d) - self.eval(0.0, d))
    }

    /// `G ∗ f` on a uniform grid.
    pub fn convolve(&self, f: &[C64], h: f64) -> Vec<C64> {
        let (right, _) = exp_sweeps(f, h, -self.roots[0]);
        let (_, l2) = exp_sweeps(f, h, self.roots[1]);
        let (_, l3) = exp_sweeps(f, h, self.roots[2]);
        (0..f.len())
            .map(|i| self.a[0] * right[i] + self.a[1] * l2[i] + self.a[2] * l3[i])
            .collect()
    }

    /// `(λ - 𝒜_α^∞)⁻¹ φ = G ∗ (1 - (∂-α)²) φ` for `φ` vanishing near the ends;
    /// the derivative is spectral on the periodic grid.
    pub fn resolvent_apply(&self, phi: &[C64], h: f64) -> Vec<C64> {
        let grid = Periodic::new(phi.len(), h);
        let a = self.alpha;
        let f = grid.multiply(phi, |k| {
            let d = C64::new(-a, k);
            one() - d * d
        });
        self.convolve(&f, h)
    }

    /// The same coefficients with a uniform denominator `C Π(ρ_j - ρ_i)`.
    pub fn with_uniform_constant(&self, c: f64) -> GreenFunction {
        let pr = |j: usize| -> C64 {
            (0..3)
                .filter(|&i| i != j)
                .fold(one(), |acc, i| acc * (self.roots[j] - self.roots[i]))
        };
        GreenFunction {
            a: [0, 1, 2].map(|j| one() / (pr(j) * c)),
            lead: c,
            ..self.clone()
        }
    }
}

/// `(λ - 𝒜_α^∞) w` by Fourier multiplication.
pub fn free_resolvent_lhs(w: &[C64], lambda: C64, alpha: Weight, params: &WaveParams, h: f64) -> Vec<C64> {
    let grid = Periodic::new(w.len(), h);
    grid.multiply(w, |k| lambda - symbol(C64::new(-alpha.0, k), params))
}

#[derive(Clone, Debug, Serialize)]
pub struct JumpCandidate {
    pub name: &'static str,
    pub constant: f64,
    /// Relative manufactured-solution error of `G ∗ (1-D²)(λ-𝒜^∞)w` against `w`.
    pub error: f64,
}

/// Tests the Green's-function normalization candidates against a Gaussian
/// manufactured solution; the validated one has error near roundoff.
pub fn jump_candidates(lambda: C64, alpha: Weight, params: &WaveParams, u0_center: f64) -> Result<Vec<JumpCandidate>> {
    let g = free_green(lambda, alpha, params)?;
    let (l, n) = (30.0, 3000);
    let h = 2.0 * l / n as f64;
    let w: Vec<C64> = (0..n)
        .map(|i| {
            let x = -l + i as f64 * h;
            C64::new((-(x - 0.5) * (x - 0.5)).exp(), 0.0)
        })
        .collect();
    let phi = free_resolvent_lhs(&w, lambda, alpha, params, h);
    let cands = [
        ("c-k", params.c - params.k, g.clone()),
        (
            "u0(0)-c",
            u0_center - params.c,
            g.with_uniform_constant(u0_center - params.c),
        ),
        ("k-c", params.k - params.c, g.with_uniform_constant(params.k - params.c)),
    ];
    let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(cands
        .into_iter()
        .map(|(name, constant, gf)| {
            let r = gf.resolvent_apply(&phi, h);
            let e = r.iter().zip(&w).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() / wn;
            JumpCandidate {
                name,
                constant,
                error: e,
            }
        })
        .collect())
}

/// `‖(λ - 𝒜_α^∞)⁻¹‖` of the periodic discretization: `max_κ 1/|λ - s(iκ-α)|`.
pub fn resolvent_norm(lambda: C64, alpha: Weight, params: &WaveParams, n: usize, h: f64) -> Result<f64> {
    check_alpha(alpha.0)?;
    let grid = Periodic::new(n, h);
    let m = shifted(&grid, alpha.0)
        .iter()
        .map(|&d| 1.0 / (lambda - symbol(d, params)).norm())
        .fold(0.0, f64::max);
    if !m.is_finite() {
        return Err(Error::NearEssentialSpectrum(format!(
            "λ = {lambda} hits the discrete spectrum"
        )));
    }
    Ok(m)
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventSample {
    pub lambda: f64,
    pub norm: f64,
    pub norm_l2: f64,
    pub norm_l1: f64,
}

pub fn resolvent_scan(
    xs: &[f64],
    alpha: Weight,
    params: &WaveParams,
    n: usize,
    h: f64,
) -> Result<Vec<ResolventSample>> {
    xs.iter()
        .map(|&x| {
            let r = resolvent_norm(C64::new(x, 0.0), alpha, params, n, h)?;
            Ok(ResolventSample {
                lambda: x,
                norm: r,
                norm_l2: r * x * x,
                norm_l1: r * x,
            })
        })
        .collect()
}

fn rk4<F: FnMut(&[f64]) -> Result<Vec<f64>>>(f: &mut F, w: &[f64], dt: f64) -> Result<Vec<f64>> {
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
    let k1 = f(w)?;
    let k2 = f(&axpy(w, 0.5 * dt, &k1))?;
    let k3 = f(&axpy(w, 0.5 * dt, &k2))?;
    let k4 = f(&axpy(w, dt, &k3))?;
    Ok((0..w.len())
        .map(|i| w[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub norm_w: Vec<f64>,
    pub ip_eta1: Vec<f64>,
    pub ip_eta2: Vec<f64>,
    /// Final state on the profile grid.
    pub w: Vec<f64>,
    pub dt: f64,
}

fn cfl_check(dt: f64, op: &LinearOperator) -> Result<f64> {
    let rho = op.spectral_radius(60, 7);
    let limit = 2.8 / rho;
    if !(dt > 0.0) || dt > limit {
        return Err(Error::InvalidInput(format!(
            "dt = {dt} exceeds the RK4 stability limit {limit:.4}; suggested dt = {:.4}",
            2.0 / (1.1 * rho)
        )));
    }
    Ok(rho)
}

/// RK4 method of lines for `w_t = 𝒜_α w` on the profile grid; records the
/// norm and `⟨η_j, w⟩` every `record_every` steps. `dt = None` picks the step
/// from the measured spectral radius.
pub fn linear_evolve(
    w0: &[f64],
    profile: &Profile,
    alpha: Weight,
    basis: Option<&KernelBasis>,
    t_end: f64,
    dt: Option<f64>,
    record_every: usize,
) -> Result<Trajectory> {
    check_len(profile.len(), w0.len())?;
    let op = LinearOperator::new(profile, alpha)?;
    let dt0 = match dt {
        Some(d) => {
            cfl_check(d, &op)?;
            d
        }
        None => op.suggested_dt(),
    };
    let steps = (t_end / dt0).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let h = profile.h;
    let mut w = drop_last(w0).to_vec();
    let mut tr = Trajectory {
        t: vec![],
        norm_w: vec![],
        ip_eta1: vec![],
        ip_eta2: vec![],
        w: vec![],
        dt,
    };
    let record = |tr: &mut Trajectory, t: f64, w: &[f64]| {
        tr.t.push(t);
        tr.norm_w.push((h * w.iter().map(|x| x * x).sum::<f64>()).sqrt());
        if let Some(b) = basis {
            let n = w.len();
            tr.ip_eta1.push(inner(&b.eta1[..n], w, h));
            tr.ip_eta2.push(inner(&b.eta2[..n], w, h));
        }
    };
    record(&mut tr, 0.0, &w);
    let every = record_every.max(1);
    let mut f = |x: &[f64]| op.apply(x);
    for s in 1..=steps {
        w = rk4(&mut f, &w, dt)?;
        if !w.iter().all(|x| x.is_finite()) {
            return Err(Error::Solver(format!("non-finite state at t = {}", s as f64 * dt)));
        }
        if s % every == 0 || s == steps {
            record(&mut tr, s as f64 * dt, &w);
        }
    }
    tr.w = wrap(w);
    Ok(tr)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NonlinearOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Exponential damping of the top eighth of the spectrum.
    pub filter: bool,
    pub filter_strength: f64,
    pub record_every: usize,
}

impl Default for NonlinearOptions {
    fn default() -> Self {
        NonlinearOptions {
            t_end: 10.0,
            dt: 0.01,
            filter: false,
            filter_strength: 1.0,
            record_every: 50,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NonlinearSnapshot {
    pub t: f64,
    pub invariants: ConservedValues,
}

#[derive(Clone, Debug, Serialize)]
pub struct NonlinearTrajectory {
    pub snapshots: Vec<NonlinearSnapshot>,
    /// Final momentum and velocity on the periodic grid (profile grid minus last node).
    pub m: Vec<f64>,
    pub u: Vec<f64>,
    pub xi: Vec<f64>,
    pub h: f64,
}

impl NonlinearTrajectory {
    /// Largest relative drift of `E_mass`, `Q`, `H` against the first snapshot.
    pub fn max_drift(&self) -> [f64; 3] {
        let f = &self.snapshots[0].invariants;
        let mut d = [0.0f64; 3];
        for s in &self.snapshots {
            let v = &s.invariants;
            d[0] = d[0].max((v.e_mass - f.e_mass).abs() / f.e_mass.abs());
            d[1] = d[1].max((v.q - f.q).abs() / f.q.abs());
            d[2] = d[2].max((v.h - f.h).abs() / f.h.abs());
        }
        d
    }
}

struct MomentumFlow {
    grid: Periodic,
    c: f64,
    helm: Vec<C64>,
    deriv: Vec<C64>,
    filt: Vec<f64>,
}

impl MomentumFlow {
    fn new(n: usize, h: f64, c: f64, opts: &NonlinearOptions) -> Self {
        let grid = Periodic::new(n, h);
        let half = (n / 2) as f64;
        let nyq = n % 2 == 0;
        let helm = grid.kappa.iter().map(|k| C64::new(1.0 / (1.0 + k * k), 0.0)).collect();
        let deriv = grid
            .kappa
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                if nyq && j == n / 2 {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new(0.0, k)
                }
            })
            .collect();
        let filt = (0..n)
            .map(|j| {
                let jj = if j <= n / 2 { j as f64 } else { n as f64 - j as f64 };
                let eta = jj / half;
                if opts.filter && eta > 7.0 / 8.0 {
                    let s = (eta - 7.0 / 8.0) * 8.0;
                    (-opts.filter_strength * opts.dt * s.powi(4)).exp()
                } else {
                    1.0
                }
            })
            .collect();
        MomentumFlow {
            grid,
            c,
            helm,
            deriv,
            filt,
        }
    }

    fn velocity(&self, m: &[f64]) -> Vec<f64> {
        let mh = self.grid.forward(&to_complex(m));
        let uh: Vec<C64> = mh.iter().zip(&self.helm).map(|(a, b)| a * b).collect();
        self.grid.inverse(&uh).iter().map(|z| z.re).collect()
    }

    fn rhs(&self, m: &[f64]) -> Vec<f64> {
        let mh = self.grid.forward(&to_complex(m));
        let uh: Vec<C64> = mh.iter().zip(&self.helm).map(|(a, b)| a * b).collect();
        let dm: Vec<C64> = mh.iter().zip(&self.deriv).map(|(a, b)| a * b).collect();
        let du: Vec<C64> = uh.iter().zip(&self.deriv).map(|(a, b)| a * b).collect();
        let u = self.grid.inverse(&uh);
        let mx = self.grid.inverse(&dm);
        let ux = self.grid.inverse(&du);
        (0..m.len())
            .map(|i| -(u[i].re - self.c) * mx[i].re - 3.0 * ux[i].re * m[i])
            .collect()
    }

    fn filter(&self, m: Vec<f64>) -> Vec<f64> {
        if self.filt.iter().all(|&f| f == 1.0) {
            return m;
        }
        let mut mh = self.grid.forward(&to_complex(&m));
        mh.iter_mut().zip(&self.filt).for_each(|(z, f)| *z *= f);
        self.grid.inverse(&mh).iter().map(|z| z.re).collect()
    }
}

fn invariants(flow: &MomentumFlow, m: &[f64], params: &WaveParams) -> Result<ConservedValues> {
    let u = flow.velocity(m);
    let dev: Vec<f64> = u.iter().map(|x| x - params.k).collect();
    conserved_dev(&dev, m, flow.grid.h, params)
}

/// Co-moving DP flow `m_t = -(u - c) m_ξ - 3 u_ξ m`, `u = (1 - ∂²)⁻¹ m`, on the
/// profile grid with its last node dropped. `m0` has the profile grid length.
pub fn nonlinear_evolve(m0: &[f64], profile: &Profile, opts: &NonlinearOptions) -> Result<NonlinearTrajectory> {
    nonlinear_evolve_observed(m0, profile, opts, |_, _, _| Ok(()))
}

/// As [`nonlinear_evolve`]; `observe(t, m, u)` runs at every recorded step.
pub fn nonlinear_evolve_observed<F>(
    m0: &[f64],
    profile: &Profile,
    opts: &NonlinearOptions,
    mut observe: F,
) -> Result<NonlinearTrajectory>
where
    F: FnMut(f64, &[f64], &[f64]) -> Result<()>,
{
    check_len(profile.len(), m0.len())?;
    if !(opts.dt > 0.0 && opts.t_end >= 0.0) {
        return Err(Error::InvalidInput("need dt > 0 and T ≥ 0".into()));
    }
    if let Some(i) = m0.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInput(format!("m0 not positive at ξ = {}", profile.xi[i])));
    }
    let params = profile.params;
    let n = profile.len() - 1;
    let flow = MomentumFlow::new(n, profile.h, params.c, opts);
    let steps = (opts.t_end / opts.dt).round() as usize;
    let dt = if steps > 0 { opts.t_end / steps as f64 } else { opts.dt };
    let mut m = drop_last(m0).to_vec();
    let mut snapshots = vec![NonlinearSnapshot {
        t: 0.0,
        invariants: invariants(&flow, &m, &params)?,
    }];
    observe(0.0, &m, &flow.velocity(&m))?;
    let every = opts.record_every.max(1);
    let mut f = |x: &[f64]| Ok(flow.rhs(x));
    for s in 1..=steps {
        m = flow.filter(rk4(&mut f, &m, dt)?);
        let t = s as f64 * dt;
        if let Some(i) = m.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::Solver(format!(
                "momentum lost positivity at t = {t:.4}, ξ = {}",
                profile.xi[i]
            )));
        }
        if s % every == 0 || s == steps {
            snapshots.push(NonlinearSnapshot {
                t,
                invariants: invariants(&flow, &m, &params)?,
            });
            observe(t, &m, &flow.velocity(&m))?;
        }
    }
    let u = flow.velocity(&m);
    Ok(NonlinearTrajectory {
        snapshots,
        m,
        u,
        xi: profile.xi[..n].to_vec(),
        h: profile.h,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FitOptions {
    /// Nodes with ξ above this are excluded (`e^{αξ}` amplifies roundoff there).
    pub xi_max: f64,
    pub max_iter: usize,
    pub substep: f64,
}

impl FitOptions {
    pub fn for_alpha(alpha: f64) -> Self {
        FitOptions {
            xi_max: if alpha > 0.0 {
                1e5f64.ln() / alpha
            } else {
                f64::INFINITY
            },
            max_iter: 50,
            substep: 2e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ModulationFit {
    pub c_star: f64,
    pub gamma_star: f64,
    pub residual: f64,
    pub initial_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Initial weighted residual below 0.1.
    pub in_trust_region: bool,
}

fn fit_residual(
    u: &[f64],
    xi: &[f64],
    wts: &[f64],
    k: f64,
    c: f64,
    gamma: f64,
    substep: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = WaveParams::new(k, c)?;
    let xs: Vec<f64> = xi.iter().map(|x| x - gamma).collect();
    let pv = sample_profile(&p, &xs, substep)?;
    let r = (0..xi.len()).map(|i| wts[i] * (u[i] - pv[i].u)).collect();
    let d = (0..xi.len()).map(|i| wts[i] * pv[i].up).collect();
    Ok((r, d))
}

/// Damped Gauss-Newton for `min ‖e^{αξ}(u - u₀(· - γ; k, c̃))‖` over `ξ ≤ xi_max`,
/// seeded at `(c, 0)`.
pub fn modulation_fit(
    u: &[f64],
    xi: &[f64],
    h: f64,
    params: &WaveParams,
    alpha: Weight,
    opts: &FitOptions,
) -> Result<ModulationFit> {
    check_len(xi.len(), u.len())?;
    params.validate()?;
    let idx: Vec<usize> = (0..xi.len()).filter(|&i| xi[i] <= opts.xi_max).collect();
    if idx.len() < 8 {
        return Err(Error::InvalidInput("fit window holds too few nodes".into()));
    }
    let xw: Vec<f64> = idx.iter().map(|&i| xi[i]).collect();
    let uw: Vec<f64> = idx.iter().map(|&i| u[i]).collect();
    let wts: Vec<f64> = xw.iter().map(|x| h.sqrt() * (alpha.0 * x).exp()).collect();
    let k = params.k;
    let norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (mut c, mut g) = (params.c, 0.0);
    let (mut r, mut du) = fit_residual(&uw, &xw, &wts, k, c, g, opts.substep)?;
    let initial = norm(&r);
    let mut res = initial;
    let mut it = 0;
    let mut converged = false;
    while it < opts.max_iter {
        it += 1;
        let dc = 1e-5 * c;
        let (rp, _) = fit_residual(&uw, &xw, &wts, k, c + dc, g, opts.substep)?;
        let (rm, _) = fit_residual(&uw, &xw, &wts, k, c - dc, g, opts.substep)?;
        // columns of the Jacobian of r with respect to (c̃, γ)
        let jc: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * dc)).collect();
        let jg = &du;
        let (a11, a12, a22) = (
            jc.iter().map(|x| x * x).sum::<f64>(),
            jc.iter().zip(jg).map(|(x, y)| x * y).sum::<f64>(),
            jg.iter().map(|x| x * x).sum::<f64>(),
        );
        let (b1, b2) = (
            -jc.iter().zip(&r).map(|(x, y)| x * y).sum::<f64>(),
            -jg.iter().zip(&r).map(|(x, y)| x * y).sum::<f64>(),
        );
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > 0.0) {
            return Err(Error::Fit("singular normal equations".into()));
        }
        let sc = (b1 * a22 - b2 * a12) / det;
        let sg = (a11 * b2 - a12 * b1) / det;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let (cn, gn) = (c + step * sc, g + step * sg);
            if cn > 4.0 * k {
                let (rn, dn) = fit_residual(&uw, &xw, &wts, k, cn, gn, opts.substep)?;
                let nn = norm(&rn);
                if nn <= res {
                    c = cn;
                    g = gn;
                    r = rn;
                    du = dn;
                    let small = (step * sc).abs() <= 1e-13 * c && (step * sg).abs() <= 1e-13 * (1.0 + g.abs());
                    converged = small || (res - nn) <= 1e-15 * res.max(1e-300);
                    res = nn;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // no descent direction left: at the minimum up to roundoff
            converged = true;
        }
        if converged {
            break;
        }
    }
    Ok(ModulationFit {
        c_star: c,
        gamma_star: g,
        residual: res,
        initial_residual: initial,
        iterations: it,
        converged,
        in_trust_region: initial < 0.1,
    })
}

/// Seeded sum of `count` Gaussian bumps with centres in `[-10, 10]`.
pub fn random_bumps(xi: &[f64], count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![0.0; xi.len()];
    for _ in 0..count {
        let amp: f64 = rng.gen_range(-1.0..1.0);
        let x0: f64 = rng.gen_range(-10.0..10.0);
        let s: f64 = rng.gen_range(0.5..2.0);
        for (v, x) in w.iter_mut().zip(xi) {
            *v += amp * (-((x - x0) / s).powi(2)).exp();
        }
    }
    w
}

/// Weighted norm `‖e^{αξ} f‖` over `ξ ≤ xi_max` on a uniform grid.
pub fn weighted_norm(f: &[f64], xi: &[f64], h: f64, alpha: f64, xi_max: f64) -> f64 {
    (h * f
        .iter()
        .zip(xi)
        .filter(|(_, x)| **x <= xi_max)
        .map(|(v, x)| (v * (alpha * x).exp()).powi(2))
        .sum::<f64>())
    .sqrt()
}

/// Band check used by the CLI before long runs.
pub fn growth_expected(params: &WaveParams, alpha: Weight) -> Result<bool> {
    Ok(!matches!(alpha.band(params)?, Band::Small | Band::Large))
}
