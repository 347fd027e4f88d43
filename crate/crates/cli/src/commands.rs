use anyhow::Result;
use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::json;

use dpsoliton::dispersion::{self, ess_spectrum_curve, sigma_grid, spectral_gap, verdict, Band, Weight};
use dpsoliton::evans::{
    self, certified_eta, evans_eval, evans_eval_weighted, winding_count, EvansOptions, EvansSample,
};
use dpsoliton::evolve::{self, FitOptions, NonlinearOptions};
use dpsoliton::kernel::{conserved_dev, kernel_basis, project, KernelBasis};
use dpsoliton::lax::{self, m_cubic, m_cubic_matches_char_poly};
use dpsoliton::quad::inner;
use dpsoliton::wave::{solve_base, solve_profile, WaveParams};

use crate::args::*;
use crate::output::{num, opt, parse_complex, resolve, Out};

fn params(k: f64, c: f64) -> Result<WaveParams> {
    Ok(WaveParams::new(k, c)?)
}

pub fn profile(cmd: Cmd<ProfileArgs>) -> Result<u8> {
    let a = resolve(cmd.args, &cmd.io)?;
    let out = Out::new(&cmd.io)?;
    let p = solve_profile(&params(a.k, a.c)?, a.l, a.h)?;
    let mut w = out.csv("profile.csv")?;
    w.write_record(["xi", "u0", "u0_p", "u0_pp", "u0_ppp", "mu", "dc_u0"])?;
    for i in 0..p.len() {
        w.serialize((
            p.xi[i],
            p.u0[i],
            p.u0_p[i],
            p.u0_pp[i],
            p.u0_ppp[i],
            p.mu[i],
            p.dc_u0[i],
        ))?;
    }
    w.flush()?;
    out.json(
        "profile.json",
        &json!({
            "config": a,
            "params": p.params,
            "derived_constants": p.consts,
            "L": p.l,
            "h": p.h,
            "tolerances": p.opts,
        }),
    )?;
    out.plot("profile.csv", &["u0", "dc_u0"], false)?;
    println!("u_max = {}", p.consts.u_max);
    Ok(0)
}

pub fn spectrum(cmd: Cmd<SpectrumArgs>) -> Result<u8> {
    let a = resolve(cmd.args, &cmd.io)?;
    let out = Out::new(&cmd.io)?;
    let p = params(a.k, a.c)?;
    let curve = ess_spectrum_curve(&p, Weight(a.alpha), &sigma_grid(a.n, a.sigma_max, 4.0))?;
    let mut w = out.csv("spectrum.csv")?;
    w.write_record(["sigma", "re_lambda", "im_lambda"])?;
    for (s, l) in curve.sigma.iter().zip(&curve.lambda) {
        w.serialize((s, l.re, l.im))?;
    }
    w.flush()?;
    let gap = spectral_gap(&p, Weight(a.alpha)).ok().map(|g| g.value);
    let v = verdict(&p, Weight(a.alpha))?;
    let (max_re, at) = curve.max_re();
    out.json(
        "spectrum.json",
        &json!({"config": a, "gap": gap, "asymptote": curve.asymptote(), "max_re": max_re, "sigma_at_max": at, "verdict": v}),
    )?;
    out.plot("spectrum.csv", &["re_lambda", "im_lambda"], false)?;
    match gap {
        Some(g) => println!("gap = {g}"),
        None => println!("gap = none"),
    }
    println!("asymptote = {}", curve.asymptote());
    println!("verdict = {v}");
    Ok(0)
}

pub fn gap(cmd: Cmd<GapArgs>) -> Result<u8> {
    let a = resolve(cmd.args, &cmd.io)?;
    println!("{}", spectral_gap(&params(a.k, a.c)?, Weight(a.alpha))?.value);
    Ok(0)
}

fn write_evans(out: &Out, name: &str, samples: &[EvansSample]) -> Result<()> {
    let mut w = out.csv(name)?;
    w.write_record(["re_lambda", "im_lambda", "re_D", "im_D", "renorm_exponent"])?;
    for s in samples {
        w.serialize((s.lambda.re, s.lambda.im, s.value.re, s.value.im, s.renorm_exponent))?;
    }
    w.flush()?;
    out.plot(name, &["re_D", "im_D"], false)
}

pub fn evans(cmd: Cmd<EvansArgs>) -> Result<u8> {
    let a = resolve(cmd.args, &cmd.io)?;
    let out = Out::new(&cmd.io)?;
    let prof = solve_base(&params(a.k, a.c)?, a.l, a.h, Default::default())?;
    let lambdas = a.lambda.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>>>()?;
    let mut samples = Vec::new();
    for &z in &lambdas {
        let s = if a.weighted {
            evans_eval_weighted(z, &prof, Weight(a.alpha), &EvansOptions::default())?
        } else {
            evans_eval(z, &prof, Weight(a.alpha))?
        };
        println!("D({}) = {}", z, s.value);
        samples.push(s);
    }
    write_evans(&out, "evans.csv", &samples)?;
    out.json("evans.json", &json!({"config": a}))?;
    Ok(0)
}

pub fn winding(cmd: Cmd<WindingArgs>) -> Result<u8> {
    let a = resolve(cmd.args, &cmd.io)?;
    let out = Out::new(&cmd.io)?;
    let p = params(a.k, a.c)?;
    let alpha = Weight(a.alpha);
    let prof = solve_base(&p, a.l, a.h, Default::default())?;
    let nodes = match a.contour {
        ContourKind::Circle => evans::circle(parse_complex(&a.center)?, a.radius, a.n),
        ContourKind::Rectangle => {
            let re0 = a.re_min.unwrap_or(-0.5 * spectral_gap(&p, alpha)?.value);
            evans::rectangle(re0, a.re_max, -a.im_max, a.im_max, a.step)
        }
        ContourKind::Keyhole => {
            let re0 = a.re_min.unwrap_or(-0.5 * spectral_gap(&p, alpha)?.value);
            evans::keyhole(re0, a.re_max, a.im_max, a.radius, a.step)?
        }
    };
    let res = winding_count(&nodes, &prof, alpha)?;
    let eta = if a.certify {
        certified_eta(&prof, alpha, a.re_max, a.im_max, a.radius, a.step)?.eta
    } else {
        None
    };
    let samples: Vec<EvansSample> = res
        .contour
        .iter()
        .zip(&res.values)
        .map(|(&lambda, &value)| EvansSample {
            lambda,
            value,
            renorm_exponent: 0.0,
        })
        .collect();
    let mut w = out.csv("winding.csv")?;
    w.write_record(["re_lambda", "im_lambda", "re_D", "im_D"])?;
    for s in &samples {
        w.serialize((s.lambda.re, s.lambda.im, s.value.re, s.value.im))?;
    }
    w.flush()?;
    out.plot("winding.csv", &["re_D", "im_D"], false)?;
    out.json(
        "winding.json",
        &json!({
            "config": a,
            "contour": a.contour,
            "nodes": res.contour.len(),
            "winding": res.winding,
            "min_abs_D": res.min_abs_d,
            "certified_eta": eta,
        }),
    )?;
    println!("winding = {}", res.winding);
    Ok(0)
}

#[derive(Serialize)]
struct BranchReport {
    #[serde(rename = "P")]
    p: C64,
    l1: C64,
    l2: C64,
    sigma: Option<C64>,
    r1: Option<C64>,
    r2: Option<C64>,
}

pub fn lax(cmd: Cmd<LaxArgs>) -> Result<u8> {
    let a = resolve(cmd.args, &cmd.io)?;
    let out = Out::new(&cmd.io)?;
    let p = params(a.k, a.c)?;
    let z = parse_complex(&a.lambda)?;
    let d = m_cubic(z, &p)?;
    let branches: Vec<BranchReport> = d
        .branches
        .iter()
        .map(|b| BranchReport {
            p: b.p,
            l1: b.l1,
            l2: b.l2,
            sigma: b.sigma,
            r1: b.r1,
            r2: b.r2,
        })
        .collect();
    let report = json!({
        "config": a,
        "lambda": z,
        "M_roots": d.m_roots,
        "P": branches.iter().map(|b| b.p).collect::<Vec<_>>(),
        "l1": branches.iter().map(|b| b.l1).collect::<Vec<_>>(),
        "l2": branches.iter().map(|b| b.l2).collect::<Vec<_>>(),
        "sigma": branches.iter().map(|b| b.sigma).collect::<Vec<_>>(),
        "r1": branches.iter().map(|b| b.r1).collect::<Vec<_>>(),
        "r2": branches.iter().map(|b| b.r2).collect::<Vec<_>>(),
        "discriminant": d.discriminant,
        "checks": {
            "max_cubic_residual": d.max_cubic_residual(),
            "max_roundtrip": d.max_roundtrip(),
            "char_poly_mismatch": m_cubic_matches_char_poly(z, &p),
            "degenerate": d.degenerate,
        },
    });
    out.json("lax.json", &report)?;
    println!("discriminant = {}", d.discriminant);
    Ok(0)
}

pub fn kernel(cmd: Cmd<KernelArgs>) -> Result<u8> {
    let a = resolve(cmd.args, &cmd.io)?;
    let out = Out::new(&cmd.io)?;
    let prof = solve_profile(&params(a.k, a.c)?, a.l, a.h)?;
    let b = kernel_basis(&prof, Weight(a.alpha))?;
    let mut w = out.csv("kernel.csv")?;
    w.write_record(["xi", "z1", "z2", "eta1", "eta2"])?;
    for i in 0..b.xi.len() {
        w.serialize((b.xi[i], b.z1[i], b.z2[i], b.eta1[i], b.eta2[i]))?;
    }
    w.flush()?;
    let res: Vec<Vec<f64>> = (0..2)
        .map(|j| (0..2).map(|l| b.gram[j][l] - if j == l { 1.0 } else { 0.0 }).collect())
        .collect();
    out.json(
        "kernel.json",
        &json!({"config": a, "theta1": b.theta1, "theta2": b.theta2, "dc_Q": b.dc_q, "gram": b.gram, "gram_residuals": res}),
    )?;
    out.plot("kernel.csv", &["z1", "z2", "eta1", "eta2"], false)?;
    println!("gram residual = {:e}", b.gram_residual());
    Ok(0)
}

fn growth_warning(p: &WaveParams, alpha: f64) -> Result<()> {
    if evolve::growth_expected(p, Weight(alpha))? {
        eprintln!("warning: alpha = {alpha} is outside the stable bands; growth expected");
    }
    Ok(())
}

fn write_trajectory(out: &Out, name: &str, t: &[f64], norm: &[f64], eta: Option<(&[f64], &[f64])>) -> Result<()> {
    let mut w = out.csv(name)?;
    w.write_record(["t", "norm_w", "ip_eta1", "ip_eta2"])?;
    for i in 0..t.len() {
        let (e1, e2) = match eta {
            Some((a, b)) => (Some(a[i]), Some(b[i])),
            None => (None, None),
        };
        w.write_record([num(t[i]), num(norm[i]), opt(e1), opt(e2)])?;
    }
    w.flush()?;
    out.plot(name, &["norm_w"], true)
}

pub fn free_evolve(cmd: Cmd<FreeArgs>) -> Result<u8> {
    let a = resolve(cmd.args, &cmd.io)?;
    let out = Out::new(&cmd.io)?;
    let p = params(a.k, a.c)?;
    growth_warning(&p, a.alpha)?;
    let xi: Vec<f64> = (0..a.n).map(|i| (i as f64 - (a.n / 2) as f64) * a.h).collect();
    let w0: Vec<f64> = match a.data {
        InitialData::Gauss => xi.iter().map(|x| (-(x / a.width).powi(2)).exp()).collect(),
        InitialData::Random => evolve::random_bumps(&xi, 12, a.seed),
    };
    let w0c = dpsoliton::spectral::to_complex(&w0);
    let window = (a.t / 5.0, 4.0 * a.t / 5.0);
    let fit = evolve::free_decay(&w0c, Weight(a.alpha), &p, a.h, a.t, a.samples, window)?;
    write_trajectory(&out, "free.csv", &fit.t, &fit.norm, None)?;
    let bound = evolve::free_growth_bound(Weight(a.alpha), &p, a.n, a.h)?;
    out.json(
        "free.json",
        &json!({"config": a, "slope": fit.slope, "window": window, "growth_bound": bound}),
    )?;
    println!("slope = {}", fit.slope);
    Ok(0)
}

pub fn linear_evolve(cmd: Cmd<LinearArgs>) -> Result<u8> {
    let a = resolve(cmd.args, &cmd.io)?;
    let out = Out::new(&cmd.io)?;
    let p = params(a.k, a.c)?;
    growth_warning(&p, a.alpha)?;
    let alpha = Weight(a.alpha);
    let prof = solve_profile(&p, a.l, a.h)?;
    let basis = match alpha.band(&p)? {
        Band::Small => Some(kernel_basis(&prof, alpha)?),
        _ => None,
    };
    let mut w0 = evolve::random_bumps(&prof.xi, a.bumps, a.seed);
    if let (Some(b), false) = (&basis, a.no_project) {
        w0 = project(&w0, b)?.complement;
    }
    let tr = evolve::linear_evolve(&w0, &prof, alpha, basis.as_ref(), a.t, a.dt, a.record_every)?;
    let eta = basis.as_ref().map(|_| (tr.ip_eta1.as_slice(), tr.ip_eta2.as_slice()));
    write_trajectory(&out, "linear.csv", &tr.t, &tr.norm_w, eta)?;
    let window = (a.t / 5.0, 4.0 * a.t / 5.0);
    let slope = evolve::fit_log_slope(&tr.t, &tr.norm_w, window);
    out.json(
        "linear.json",
        &json!({"config": a, "params": p, "alpha": a.alpha, "L": a.l, "h": a.h, "dt": tr.dt, "T": a.t, "filter": false, "seed": a.seed, "slope": slope, "window": window}),
    )?;
    println!("slope = {slope}");
    Ok(0)
}

struct Recorder<'a> {
    basis: Option<&'a KernelBasis>,
    u0: &'a [f64],
    xi: &'a [f64],
    h: f64,
    alpha: f64,
    fit: bool,
    params: WaveParams,
    rows: Vec<Vec<String>>,
    last_fit: Option<evolve::ModulationFit>,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, m: &[f64], u: &[f64]) -> dpsoliton::Result<()> {
        let n = u.len();
        let xi = &self.xi[..n];
        let fo = FitOptions::for_alpha(self.alpha);
        let w: Vec<f64> = (0..n)
            .map(|i| (u[i] - self.u0[i]) * (self.alpha * xi[i]).exp())
            .collect();
        let (c_fit, g_fit, norm) = if self.fit {
            let f = evolve::modulation_fit(u, xi, self.h, &self.params, Weight(self.alpha), &fo)?;
            self.last_fit = Some(f);
            (Some(f.c_star), Some(f.gamma_star), f.residual)
        } else {
            let d: Vec<f64> = (0..n).map(|i| u[i] - self.u0[i]).collect();
            (None, None, evolve::weighted_norm(&d, xi, self.h, self.alpha, fo.xi_max))
        };
        let (e1, e2) = match self.basis {
            Some(b) => (
                Some(inner(&b.eta1[..n], &w, self.h)),
                Some(inner(&b.eta2[..n], &w, self.h)),
            ),
            None => (None, None),
        };
        let dev: Vec<f64> = u.iter().map(|x| x - self.params.k).collect();
        let inv = conserved_dev(&dev, m, self.h, &self.params)?;
        self.rows.push(vec![
            num(t),
            num(norm),
            opt(e1),
            opt(e2),
            num(inv.e_mass),
            num(inv.q),
            num(inv.h),
            opt(c_fit),
            opt(g_fit),
        ]);
        Ok(())
    }
}

pub fn nonlinear_evolve(cmd: Cmd<NonlinearArgs>) -> Result<u8> {
    let a = resolve(cmd.args, &cmd.io)?;
    let out = Out::new(&cmd.io)?;
    let p = params(a.k, a.c)?;
    let alpha = Weight(a.alpha);
    let prof = solve_profile(&p, a.l, a.h)?;
    let basis = match alpha.band(&p)? {
        Band::Small => Some(kernel_basis(&prof, alpha)?),
        _ => None,
    };
    let b = evolve::random_bumps(&prof.xi, 4, a.seed);
    let bmax = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let m0: Vec<f64> = prof
        .mu
        .iter()
        .zip(&b)
        .map(|(m, v)| m * (1.0 + a.delta * v / bmax))
        .collect();
    let opts = NonlinearOptions {
        t_end: a.t,
        dt: a.dt,
        filter: a.filter,
        filter_strength: a.filter_strength,
        record_every: a.record_every,
    };
    let mut rec = Recorder {
        basis: basis.as_ref(),
        u0: &prof.u0,
        xi: &prof.xi,
        h: prof.h,
        alpha: a.alpha,
        fit: !a.no_fit,
        params: p,
        rows: vec![],
        last_fit: None,
    };
    let tr = evolve::nonlinear_evolve_observed(&m0, &prof, &opts, |t, m, u| rec.record(t, m, u))?;
    let mut w = out.csv("nonlinear.csv")?;
    w.write_record(["t", "norm_w", "ip_eta1", "ip_eta2", "E", "Q", "H", "c_fit", "gamma_fit"])?;
    for r in &rec.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    out.plot("nonlinear.csv", &["norm_w"], true)?;
    let drift = tr.max_drift();
    out.json(
        "nonlinear.json",
        &json!({
            "config": a,
            "params": p,
            "alpha": a.alpha,
            "L": a.l,
            "h": a.h,
            "dt": a.dt,
            "T": a.t,
            "filter": a.filter,
            "seed": a.seed,
            "drift": {"E_mass": drift[0], "Q": drift[1], "H": drift[2]},
            "final_fit": rec.last_fit,
        }),
    )?;
    println!("drift E_mass = {:e}, Q = {:e}, H = {:e}", drift[0], drift[1], drift[2]);
    if let Some(f) = rec.last_fit {
        println!(
            "c_fit = {}, gamma_fit = {}, residual = {:e}",
            f.c_star, f.gamma_star, f.residual
        );
    }
    Ok(0)
}

pub fn selftest(cmd: Cmd<SelftestArgs>) -> Result<u8> {
    let a = resolve(cmd.args, &cmd.io)?;
    let out = Out::new(&cmd.io)?;
    let d = dispersion::self_test(&params(a.k, a.c)?)?;
    let l = lax::self_test()?;
    let ok = d.passed() && l.passed();
    out.json(
        "selftest.json",
        &json!({"config": a, "dispersion": d, "lax": l, "passed": ok}),
    )?;
    println!(
        "dispersion sign self-test: {}",
        if d.passed() { "pass" } else { "FAIL" }
    );
    println!("lax identity self-test: {}", if l.passed() { "pass" } else { "FAIL" });
    Ok(if ok { 0 } else { 3 })
}
