use dpsoliton::dispersion::{spectral_gap, symbol, Weight};
use dpsoliton::evolve::*;
use dpsoliton::kernel::{kernel_basis, project, KernelBasis};
use dpsoliton::quad::inner;
use dpsoliton::spectral::Periodic;
use dpsoliton::wave::{sample_profile, solve_profile, Profile, WaveParams};
use dpsoliton::Error;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::sync::OnceLock;

const A: Weight = Weight(0.5);

fn p01() -> WaveParams {
    WaveParams::new(0.1, 1.0).unwrap()
}

fn prof() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| solve_profile(&p01(), 100.0, 0.04).unwrap())
}

fn basis() -> &'static KernelBasis {
    static B: OnceLock<KernelBasis> = OnceLock::new();
    B.get_or_init(|| kernel_basis(prof(), A).unwrap())
}

fn gauss(x0: f64, s: f64) -> Vec<f64> {
    prof().xi.iter().map(|x| (-((x - x0) / s).powi(2)).exp()).collect()
}

fn norm(v: &[f64]) -> f64 {
    inner(v, v, prof().h).sqrt()
}

#[test]
fn constant_background_acts_by_symbol() {
    let p = p01();
    let (n, h) = (256, 0.1);
    let op = LinearOperator::constant(p, A, n, h).unwrap();
    let per = Periodic::new(n, h);
    for j in [1usize, 5, 40] {
        let kap = per.kappa[j];
        let w: Vec<C64> = (0..n).map(|i| C64::new(0.0, kap * i as f64 * h).exp()).collect();
        let aw = op.apply_c(&w).unwrap();
        let s = symbol(C64::new(-0.5, kap), &p);
        let err = aw.iter().zip(&w).map(|(a, b)| (a - s * b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "mode {j}: {err}");
    }
}

#[test]
fn matches_local_form_unweighted() {
    // (1 - ∂²) 𝒜v = c(v' - v''') + 3u'v'' + 3u''v' - 4uv' - 4u'v + uv''' + u'''v
    let pr = prof();
    let c = pr.params.c;
    let v: Vec<[f64; 4]> = pr
        .xi
        .iter()
        .map(|&x| {
            let e = (-x * x).exp();
            [
                e,
                -2.0 * x * e,
                (4.0 * x * x - 2.0) * e,
                (12.0 * x - 8.0 * x * x * x) * e,
            ]
        })
        .collect();
    let v0: Vec<f64> = v.iter().map(|d| d[0]).collect();
    let av = apply_linearized(&v0, pr, Weight(0.0)).unwrap();
    let n = av.len() - 1;
    let per = Periodic::new(n, pr.h);
    let lhs = per.multiply_real(&av[..n], |k| C64::new(1.0 + k * k, 0.0));
    let mut err: f64 = 0.0;
    for i in 0..n {
        let (u, u1, u2, u3) = (pr.u0[i], pr.u0_p[i], pr.u0_pp[i], pr.u0_ppp[i]);
        let [w, w1, w2, w3] = v[i];
        let rhs = c * (w1 - w3) + 3.0 * u1 * w2 + 3.0 * u2 * w1 - 4.0 * u * w1 - 4.0 * u1 * w + u * w3 + u3 * w;
        err = err.max((lhs[i] - rhs).abs());
    }
    assert!(err < 1e-9, "{err}");
}

#[test]
fn weight_is_a_conjugation() {
    let pr = prof();
    let w = gauss(0.5, 1.5);
    let ew: Vec<f64> = pr.xi.iter().map(|x| (0.5 * x).exp()).collect();
    let v: Vec<f64> = w.iter().zip(&ew).map(|(a, e)| a / e).collect();
    let aw = apply_linearized(&w, pr, A).unwrap();
    let av = apply_linearized(&v, pr, Weight(0.0)).unwrap();
    let back: Vec<f64> = av.iter().zip(&ew).map(|(a, e)| a * e).collect();
    let i0 = pr.xi.iter().position(|&x| x > -20.0).unwrap();
    let i1 = pr.xi.iter().position(|&x| x > 20.0).unwrap();
    let err = (i0..i1).map(|i| (aw[i] - back[i]).abs()).fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");
}

#[test]
fn operator_shape_and_weight_checks() {
    assert!(matches!(
        apply_linearized(&[0.0; 7], prof(), A),
        Err(Error::Shape { .. })
    ));
    assert!(matches!(
        apply_linearized(&gauss(0.0, 1.0), prof(), Weight(1.0)),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn spectral_radius_of_constant_background() {
    let p = p01();
    let (n, h) = (512, 0.05);
    let op = LinearOperator::constant(p, A, n, h).unwrap();
    let per = Periodic::new(n, h);
    let exact = per
        .kappa
        .iter()
        .take(n / 2)
        .map(|&k| symbol(C64::new(-0.5, k), &p).norm())
        .fold(0.0, f64::max);
    let est = op.spectral_radius(200, 3);
    assert!((est - exact).abs() < 0.02 * exact, "{est} vs {exact}");
}

#[test]
fn free_flow_preserves_norm_unweighted() {
    let p = p01();
    let (n, h) = (4096, 0.05);
    let per = Periodic::new(n, h);
    let w0: Vec<C64> = (0..n)
        .map(|i| {
            let x = (i as f64 - n as f64 / 2.0) * h;
            C64::new((-x * x).exp(), (-(x - 3.0) * (x - 3.0)).exp() * x)
        })
        .collect();
    let n0 = per.norm(&w0);
    for t in [1.0, 10.0, 40.0] {
        let w = free_evolve(&w0, Weight(0.0), t, &p, h).unwrap();
        assert!((per.norm(&w) - n0).abs() < 1e-10 * n0);
    }
}

#[test]
fn free_flow_is_a_semigroup() {
    let p = p01();
    let (n, h) = (1024, 0.1);
    let w0: Vec<C64> = (0..n)
        .map(|i| C64::new((-((i as f64 - 512.0) * h).powi(2)).exp(), 0.0))
        .collect();
    let a = free_evolve(&free_evolve(&w0, A, 1.5, &p, h).unwrap(), A, 2.5, &p, h).unwrap();
    let b = free_evolve(&w0, A, 4.0, &p, h).unwrap();
    let err = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(err < 1e-13);
    let id = free_evolve(&w0, A, 0.0, &p, h).unwrap();
    assert!(id.iter().zip(&w0).all(|(x, y)| (x - y).norm() < 1e-14));
}

#[test]
fn free_growth_bound_is_minus_gap() {
    let p = p01();
    let g = spectral_gap(&p, A).unwrap().value;
    assert!((free_growth_bound(A, &p, 4096, 0.05).unwrap() + g).abs() < 1e-12);
    assert!(free_growth_bound(Weight(0.0), &p, 4096, 0.05).unwrap().abs() < 1e-14);
}

#[test]
fn free_decay_of_broad_data() {
    // a wide profile concentrates near κ = 0, where Re s attains -Δ
    let p = p01();
    let (n, h) = (16384, 0.1);
    let w0: Vec<C64> = (0..n)
        .map(|i| {
            let x = (i as f64 - n as f64 / 2.0) * h;
            C64::new((-(x / 40.0).powi(2)).exp(), 0.0)
        })
        .collect();
    let fit = free_decay(&w0, A, &p, h, 40.0, 40, (5.0, 40.0)).unwrap();
    assert!((-fit.slope - 0.25).abs() < 0.05 * 0.25, "{}", fit.slope);
    assert!(fit.norm.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn fit_log_slope_on_exponential() {
    let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.5).collect();
    let y: Vec<f64> = t.iter().map(|s| 3.0 * (-0.37 * s).exp()).collect();
    assert!((fit_log_slope(&t, &y, (2.0, 20.0)) + 0.37).abs() < 1e-12);
}

#[test]
fn green_jumps() {
    let p = p01();
    for lam in [C64::new(0.5, 0.0), C64::new(0.2, 1.3), C64::new(3.0, -2.0)] {
        let g = free_green(lam, A, &p).unwrap();
        let j = g.jumps();
        assert!(j[0].norm() < 1e-14 && j[1].norm() < 1e-14);
        assert!((j[2] - 1.0 / (p.c - p.k)).norm() < 1e-13);
        assert!(g.roots[0].re < 0.0 && g.roots[1].re > 0.0);
    }
}

#[test]
fn green_resolvent_matches_fourier() {
    let p = p01();
    let lam = C64::new(0.4, 0.7);
    let (n, h) = (8000, 0.02);
    let phi: Vec<C64> = (0..n)
        .map(|i| {
            let x = (i as f64 - 4000.0) * h;
            C64::new((-(x * x)).exp() * (1.0 + x), 0.0)
        })
        .collect();
    let g = free_green(lam, A, &p).unwrap();
    let got = g.resolvent_apply(&phi, h);
    let per = Periodic::new(n, h);
    let want = per.multiply(&phi, |k| C64::new(1.0, 0.0) / (lam - symbol(C64::new(-0.5, k), &p)));
    let err = got.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");
}

#[test]
fn only_lead_coefficient_normalization_validates() {
    let p = p01();
    let c = jump_candidates(C64::new(0.5, 0.0), A, &p, prof().u0[prof().center()]).unwrap();
    assert!(c[0].name == "c-k" && c[0].error < 1e-9);
    assert!(c[1..].iter().all(|x| x.error > 0.1), "{c:?}");
}

#[test]
fn green_rejects_left_of_spectrum() {
    assert!(matches!(
        free_green(C64::new(-1.0, 0.0), A, &p01()),
        Err(Error::NearEssentialSpectrum(_))
    ));
}

#[test]
fn resolvent_norm_is_inverse_distance_to_tip() {
    // for real λ the closest point of the curve is the tip -Δ
    let p = p01();
    for lam in [1.0, 10.0, 100.0] {
        let r = resolvent_norm(C64::new(lam, 0.0), A, &p, 4096, 0.04).unwrap();
        assert!((r * (lam + 0.25) - 1.0).abs() < 1e-10, "{lam}: {r}");
    }
    let s = resolvent_scan(&[10.0, 200.0], A, &p, 4096, 0.04).unwrap();
    assert!(s[1].norm_l2 / s[0].norm_l2 > 3.0);
    assert!((s[1].norm_l1 / s[0].norm_l1 - 1.0).abs() < 0.05);
}

#[test]
fn jordan_block_in_time() {
    // e^{𝒜t} z2 = z2 - t z1
    let (pr, b) = (prof(), basis());
    let tr = linear_evolve(&b.z2, pr, A, Some(b), 2.0, None, 10).unwrap();
    let want: Vec<f64> = b.z2.iter().zip(&b.z1).map(|(a, c)| a - 2.0 * c).collect();
    let d: Vec<f64> = tr.w.iter().zip(&want).map(|(a, c)| a - c).collect();
    assert!(norm(&d) < 1e-7 * norm(&want), "{}", norm(&d));
}

#[test]
fn projected_data_decays() {
    let (pr, b) = (prof(), basis());
    let w0 = project(&gauss(1.0, 1.3), b).unwrap().complement;
    let tr = linear_evolve(&w0, pr, A, Some(b), 30.0, None, 20).unwrap();
    let slope = fit_log_slope(&tr.t, &tr.norm_w, (5.0, 30.0));
    assert!(slope < -0.2, "{slope}");
    let n0 = tr.norm_w[0];
    assert!(tr.ip_eta1.iter().chain(&tr.ip_eta2).all(|v| v.abs() < 1e-6 * n0));
}

#[test]
fn linear_evolve_rejects_unstable_step() {
    let e = linear_evolve(&gauss(0.0, 1.0), prof(), A, None, 1.0, Some(1.0), 1).unwrap_err();
    assert!(matches!(e, Error::InvalidInput(ref m) if m.contains("suggested")));
}

#[test]
fn soliton_is_an_equilibrium() {
    let pr = prof();
    let o = NonlinearOptions {
        t_end: 2.0,
        dt: 0.01,
        record_every: 50,
        ..Default::default()
    };
    let tr = nonlinear_evolve(&pr.mu, pr, &o).unwrap();
    let e = tr.u.iter().zip(&pr.u0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(e < 1e-10, "{e}");
    assert!(tr.max_drift().iter().all(|&d| d < 1e-10));
}

#[test]
fn perturbed_soliton_conserves_invariants() {
    let pr = prof();
    let m0: Vec<f64> = pr.mu.iter().zip(&gauss(2.0, 1.0)).map(|(m, g)| m + 1e-2 * g).collect();
    for filter in [false, true] {
        let o = NonlinearOptions {
            t_end: 3.0,
            dt: 0.01,
            filter,
            record_every: 30,
            ..Default::default()
        };
        let tr = nonlinear_evolve(&m0, pr, &o).unwrap();
        let d = tr.max_drift();
        assert!(d.iter().all(|&x| x < 1e-8), "{d:?}");
    }
}

#[test]
fn nonpositive_momentum_rejected() {
    let pr = prof();
    let mut m = pr.mu.clone();
    m[100] = 0.0;
    let o = NonlinearOptions::default();
    assert!(matches!(nonlinear_evolve(&m, pr, &o), Err(Error::InvalidInput(_))));
}

#[test]
fn modulation_fit_recovers_parameters() {
    let pr = prof();
    let p = p01();
    let (c1, g1) = (1.003, 0.07);
    let q = WaveParams::new(p.k, c1).unwrap();
    let xs: Vec<f64> = pr.xi.iter().map(|x| x - g1).collect();
    let u: Vec<f64> = sample_profile(&q, &xs, 2e-3).unwrap().iter().map(|v| v.u).collect();
    let f = modulation_fit(&u, &pr.xi, pr.h, &p, A, &FitOptions::for_alpha(0.5)).unwrap();
    assert!(f.converged);
    assert!(
        (f.c_star - c1).abs() < 1e-8 && (f.gamma_star - g1).abs() < 1e-8,
        "{f:?}"
    );
    assert!(f.residual < 1e-3 * f.initial_residual);
}

#[test]
fn weighted_norm_window() {
    let xi = [-1.0, 0.0, 1.0, 30.0];
    let f = [1.0, 1.0, 1.0, 1.0];
    let w = weighted_norm(&f, &xi, 1.0, 0.5, 2.0);
    let want = ((-1.0f64).exp() + 1.0 + 1.0f64.exp()).sqrt();
    assert!((w - want).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn adjoint_is_transpose(a in -2.0f64..2.0, b in -2.0f64..2.0, s in 0.5f64..3.0, alpha in 0.0f64..0.8) {
        let pr = prof();
        let f = gauss(a, s);
        let g: Vec<f64> = gauss(b, 1.0).iter().zip(&pr.xi).map(|(v, x)| v * x.sin()).collect();
        let af = apply_linearized(&f, pr, Weight(alpha)).unwrap();
        let ag = apply_linearized_adjoint(&g, pr, Weight(alpha)).unwrap();
        let n = f.len() - 1;
        let lhs = inner(&af[..n], &g[..n], pr.h);
        let rhs = inner(&f[..n], &ag[..n], pr.h);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn free_flow_contracts_weighted(t in 0.1f64..20.0, x0 in -5.0f64..5.0) {
        let p = p01();
        let (n, h) = (512, 0.1);
        let per = Periodic::new(n, h);
        let w0: Vec<C64> = (0..n).map(|i| C64::new((-((i as f64 - 256.0) * h - x0).powi(2)).exp(), 0.0)).collect();
        let w = free_evolve(&w0, A, t, &p, h).unwrap();
        prop_assert!(per.norm(&w) <= (-0.25 * t).exp() * per.norm(&w0) * (1.0 + 1e-12));
    }
}

#[test]
fn z1_is_stationary() {
    let (pr, b) = (prof(), basis());
    let tr = linear_evolve(&b.z1, pr, A, Some(b), 5.0, None, 10).unwrap();
    let d: Vec<f64> = tr.w.iter().zip(&b.z1).map(|(a, c)| a - c).collect();
    assert!(norm(&d) < 1e-8 * norm(&b.z1));
    assert!(tr.t.windows(2).all(|w| w[1] > w[0]) && tr.norm_w.iter().all(|&n| n > 0.0));
}

#[test]
fn secular_growth_coefficient() {
    let (pr, b) = (prof(), basis());
    let t = 3.0;
    let tr = linear_evolve(&b.z2, pr, A, Some(b), t, None, 10).unwrap();
    let c = project(&tr.w, b).unwrap().coeffs;
    assert!((c[0] / -t - 1.0).abs() < 1e-3 && (c[1] - 1.0).abs() < 1e-6, "{c:?}");
}

#[test]
fn rk4_order_on_perturbed_soliton() {
    let pr = prof();
    let m0: Vec<f64> = pr.mu.iter().zip(&gauss(0.0, 1.0)).map(|(m, g)| m + 1e-2 * g).collect();
    let run = |dt: f64| {
        let o = NonlinearOptions {
            t_end: 0.5,
            dt,
            record_every: 1000,
            ..Default::default()
        };
        nonlinear_evolve(&m0, pr, &o).unwrap().m
    };
    let r = run(0.0025);
    let e = |m: Vec<f64>| m.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (e1, e2) = (e(run(0.02)), e(run(0.01)));
    assert!(e1 / e2 > 10.0, "{e1:e} {e2:e}");
}

#[test]
fn observer_sees_every_record() {
    let pr = prof();
    let o = NonlinearOptions {
        t_end: 0.5,
        dt: 0.01,
        record_every: 10,
        ..Default::default()
    };
    let mut ts = vec![];
    let tr = nonlinear_evolve_observed(&pr.mu, pr, &o, |t, m, u| {
        assert_eq!(m.len(), u.len());
        ts.push(t);
        Ok(())
    })
    .unwrap();
    assert_eq!(ts, tr.snapshots.iter().map(|s| s.t).collect::<Vec<_>>());
}

#[test]
fn weighted_norm_decays_under_left_transport() {
    let pr = prof();
    let mut last = f64::INFINITY;
    for t in [0.0, 2.0, 5.0, 10.0] {
        let f: Vec<f64> = pr.xi.iter().map(|x| (-(x + 0.7 * t).powi(2)).exp()).collect();
        let w = weighted_norm(&f, &pr.xi, pr.h, 0.5, f64::INFINITY);
        assert!(w < last);
        last = w;
    }
}

#[test]
fn modulation_fit_speed_only() {
    let pr = prof();
    let p = p01();
    let q = WaveParams::new(p.k, p.c + 1e-3).unwrap();
    let u: Vec<f64> = sample_profile(&q, &pr.xi, 2e-3).unwrap().iter().map(|v| v.u).collect();
    let f = modulation_fit(&u, &pr.xi, pr.h, &p, A, &FitOptions::for_alpha(0.5)).unwrap();
    assert!((f.c_star - p.c - 1e-3).abs() < 1e-6 && f.gamma_star.abs() < 1e-6 && f.in_trust_region);
}

#[test]
fn modulation_fit_matches_projection_to_first_order() {
    let (pr, b) = (prof(), basis());
    let p = p01();
    let eps = 1e-4;
    let u: Vec<f64> = pr.u0.iter().zip(&pr.dc_u0).map(|(a, d)| a + eps * d).collect();
    let f = modulation_fit(&u, &pr.xi, pr.h, &p, A, &FitOptions::for_alpha(0.5)).unwrap();
    let w: Vec<f64> = pr
        .dc_u0
        .iter()
        .zip(&pr.xi)
        .map(|(d, x)| eps * d * (0.5 * x).exp())
        .collect();
    let pred = project(&w, b).unwrap().coeffs[1];
    assert!(
        ((f.c_star - p.c) / pred - 1.0).abs() < 0.1,
        "{} vs {pred}",
        f.c_star - p.c
    );
}

#[test]
fn random_bumps_are_seeded() {
    let xi = &prof().xi;
    assert_eq!(random_bumps(xi, 5, 9), random_bumps(xi, 5, 9));
    assert_ne!(random_bumps(xi, 5, 9), random_bumps(xi, 5, 10));
}
