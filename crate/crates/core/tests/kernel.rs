use dpsoliton::dispersion::Weight;
use dpsoliton::evolve::{apply_linearized, apply_linearized_adjoint};
use dpsoliton::kernel::*;
use dpsoliton::quad::{inner, trapz};
use dpsoliton::spectral::Periodic;
use dpsoliton::wave::{solve_base, solve_profile, Profile, WaveParams};
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

fn grid(l: f64, n: usize) -> (Vec<f64>, f64) {
    let h = 2.0 * l / (n - 1) as f64;
    ((0..n).map(|i| -l + i as f64 * h).collect(), h)
}

fn sech2(x: f64) -> f64 {
    1.0 / x.cosh().powi(2)
}

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn helmholtz_manufactured_sech() {
    // (m² - ∂²) sech² = (m² - 4) sech² + 6 sech⁴
    let (x, h) = grid(30.0, 3001);
    for msq in [1.0, 4.0, 9.0] {
        let g: Vec<f64> = x
            .iter()
            .map(|&t| (msq - 4.0) * sech2(t) + 6.0 * sech2(t).powi(2))
            .collect();
        let want: Vec<f64> = x.iter().map(|&t| sech2(t)).collect();
        let got = helmholtz_solve(&g, h, msq).unwrap();
        assert!(max_err(&got, &want) < 1e-8, "msq = {msq}: {}", max_err(&got, &want));
    }
}

#[test]
fn helmholtz_matches_fourier() {
    let (x, h) = grid(40.0, 4001);
    let g: Vec<f64> = x
        .iter()
        .map(|&t| (-(t - 1.0) * (t - 1.0)).exp() * (3.0 * t).cos())
        .collect();
    let n = g.len() - 1;
    let per = Periodic::new(n, h);
    let four = per.multiply_real(&g[..n], |k| C64::new(1.0 / (4.0 + k * k), 0.0));
    let got = helmholtz_solve(&g, h, 4.0).unwrap();
    assert!(max_err(&got[..n], &four) < 1e-10);
}

#[test]
fn helmholtz_zero_and_bad_mass() {
    let z = helmholtz_solve(&[0.0; 50], 0.1, 4.0).unwrap();
    assert!(z.iter().all(|&v| v == 0.0));
    assert!(matches!(
        helmholtz_solve(&[0.0; 50], 0.1, 0.0),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn k_operator_inverts_helmholtz_pair() {
    // K (4 - ∂²) f = (1 - ∂²) f for f = sech²
    let (x, h) = grid(30.0, 3001);
    let g: Vec<f64> = x.iter().map(|&t| 6.0 * sech2(t).powi(2)).collect();
    let want: Vec<f64> = x.iter().map(|&t| -3.0 * sech2(t) + 6.0 * sech2(t).powi(2)).collect();
    assert!(max_err(&k_operator(&g, h).unwrap(), &want) < 1e-8);
}

#[test]
fn conserved_vanish_on_background() {
    let p = p01();
    let u = vec![p.k; 400];
    let v = conserved(&u, &u, 0.05, &p).unwrap();
    for q in [v.h, v.q, v.e_mass, v.f1.unwrap(), v.f2.unwrap()] {
        assert!(q.abs() < 1e-14, "{v:?}");
    }
}

#[test]
fn conserved_sign_and_nonpositive_momentum() {
    let p = p01();
    let pr = prof();
    let v = conserved(&pr.u0, &pr.mu, pr.h, &p).unwrap();
    assert!(v.q > 0.0 && v.e_mass > 0.0);
    assert!((profile_q(pr).unwrap() - v.q).abs() < 1e-12);
    let mut m = pr.mu.clone();
    m[10] = -1.0;
    let w = conserved(&pr.u0, &m, pr.h, &p).unwrap();
    assert!(w.f1.is_none() && w.f2.is_none());
}

#[test]
fn dc_q_matches_pairing_identity() {
    // ∂_c Q = ⟨∂_c u₀, K(u₀ - k)⟩ since K is symmetric
    let pr = prof();
    let kd = k_operator(&pr.dev, pr.h).unwrap();
    let pairing = inner(&pr.dc_u0, &kd, pr.h);
    let b = basis();
    assert!((b.dc_q - pairing).abs() < 1e-8 * pairing, "{} vs {pairing}", b.dc_q);
}

#[test]
fn dc_q_positive_on_sample_grid() {
    for c in [0.5, 1.0, 2.0] {
        for k in [c / 20.0, c / 8.0, c / 5.0] {
            let p = WaveParams::new(k, c).unwrap();
            let d = dc_q(&p, 40.0 / c.sqrt(), 0.04).unwrap();
            assert!(d > 0.0, "k = {k}, c = {c}: {d}");
        }
    }
}

#[test]
fn gram_is_identity() {
    assert!(basis().gram_residual() < 1e-8, "{:?}", basis().gram);
}

#[test]
fn jordan_chain() {
    let (pr, b) = (prof(), basis());
    let h = pr.h;
    let norm = |v: &[f64]| inner(v, v, h).sqrt();
    let az1 = apply_linearized(&b.z1, pr, A).unwrap();
    assert!(norm(&az1) < 1e-8);
    let az2 = apply_linearized(&b.z2, pr, A).unwrap();
    let r: Vec<f64> = az2.iter().zip(&b.z1).map(|(x, y)| x + y).collect();
    assert!(norm(&r) < 1e-6 * norm(&b.z1));
    let ae2 = apply_linearized_adjoint(&b.eta2, pr, A).unwrap();
    assert!(norm(&ae2) < 1e-6 * norm(&b.eta2));
    let ae1 = apply_linearized_adjoint(&b.eta1, pr, A).unwrap();
    let r: Vec<f64> = ae1.iter().zip(&b.eta2).map(|(x, y)| x + y).collect();
    assert!(norm(&r) < 1e-6 * norm(&b.eta2));
}

#[test]
fn eta1_tilde_tail_constant() {
    // η̃₁(+∞) = -θ₁ ∫ K ∂_c u₀ = -θ₁ ∫ ∂_c u₀ / 4
    let (pr, b) = (prof(), basis());
    let want = -b.theta1 * trapz(&pr.dc_u0, pr.h) / 4.0;
    let n = b.eta1_tilde.len();
    for i in [n - 1, n - 50, n - 200] {
        assert!(
            (b.eta1_tilde[i] - want).abs() < 1e-8 * want.abs(),
            "{} vs {want}",
            b.eta1_tilde[i]
        );
    }
    assert!(b.eta1_tilde[0].abs() < 1e-10);
}

#[test]
fn projection_properties() {
    let (pr, b) = (prof(), basis());
    let f: Vec<f64> = pr
        .xi
        .iter()
        .map(|x| (-(x - 1.5f64).powi(2)).exp() * (1.0 + x))
        .collect();
    let p1 = project(&f, b).unwrap();
    let p2 = project(&p1.pi_f, b).unwrap();
    assert!(max_err(&p1.pi_f, &p2.pi_f) < 1e-12);
    let pc = project(&p1.complement, b).unwrap();
    assert!(pc.coeffs[0].abs() < 1e-12 && pc.coeffs[1].abs() < 1e-12);
    let pz = project(&b.z2, b).unwrap();
    assert!((pz.coeffs[0]).abs() < 1e-12 && (pz.coeffs[1] - 1.0).abs() < 1e-12);
    for eta in [&b.eta1, &b.eta2] {
        assert!(inner(eta, &p1.complement, pr.h).abs() < 1e-10);
    }
}

#[test]
fn kernel_rejects_bad_inputs() {
    assert!(matches!(kernel_basis(prof(), Weight(0.9)), Err(Error::InvalidInput(_))));
    assert!(matches!(kernel_basis(prof(), Weight(0.0)), Err(Error::InvalidInput(_))));
    let bare = solve_base(&p01(), 30.0, 0.04, Default::default()).unwrap();
    assert!(matches!(kernel_basis(&bare, A), Err(Error::InvalidInput(_))));
    assert!(matches!(project(&[0.0; 3], basis()), Err(Error::Shape { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn q_is_positive_definite(a in -1.0f64..1.0, b in -1.0f64..1.0, s in 0.3f64..3.0, x0 in -5.0f64..5.0) {
        prop_assume!(a.abs() + b.abs() > 1e-3);
        let (x, h) = grid(30.0, 1501);
        let d: Vec<f64> = x.iter().map(|&t| {
            let y = (t - x0) / s;
            (a + b * y) * (-y * y).exp()
        }).collect();
        let kd = k_operator(&d, h).unwrap();
        // K has symbol between 1/4 and 1
        let q = inner(&d, &kd, h);
        let l2 = inner(&d, &d, h);
        prop_assert!(q >= 0.25 * l2 * (1.0 - 1e-8) && q <= l2 * (1.0 + 1e-8));
    }
}
