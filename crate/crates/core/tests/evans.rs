use dpsoliton::dispersion::{spectral_gap, Weight};
use dpsoliton::evans::*;
use dpsoliton::ode::Tolerance;
use dpsoliton::wave::{solve_base, Profile, WaveParams};
use dpsoliton::Error;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::sync::OnceLock;

fn base(l: f64) -> Profile {
    solve_base(&WaveParams::new(0.1, 1.0).unwrap(), l, 0.02, Default::default()).unwrap()
}

fn prof() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| base(40.0))
}

const A: Weight = Weight(0.5);

fn d(z: C64) -> C64 {
    evans_eval(z, prof(), A).unwrap().value
}

#[test]
fn origin_is_a_zero() {
    assert!(d(C64::new(0.0, 0.0)).norm() < 1e-6);
}

#[test]
fn no_zero_at_one() {
    assert!(d(C64::new(1.0, 0.0)).norm() > 1e-4);
}

#[test]
fn conjugate_symmetry() {
    let z = C64::new(0.3, 0.2);
    assert!((d(z.conj()) - d(z).conj()).norm() < 1e-10);
}

#[test]
fn weighted_matches_unweighted() {
    assert!(weighted_equivalence_check(C64::new(0.5, 0.0), prof(), A).unwrap() < 1e-8);
    assert!(weighted_equivalence_check(C64::new(0.0, 2.002), prof(), A).unwrap() < 1e-6);
    assert_eq!(
        weighted_equivalence_check(C64::new(0.5, 0.0), prof(), Weight(0.0)).unwrap(),
        0.0
    );
}

#[test]
fn left_of_weighted_spectrum_is_rejected() {
    // the weighted curve crosses the real axis at -0.25
    let e = evans_eval(C64::new(-0.3, 0.0), prof(), A).unwrap_err();
    assert!(matches!(e, Error::NearEssentialSpectrum(_)));
    // the unweighted spectrum is the imaginary axis
    assert!(evans_eval(C64::new(0.0, 1.0), prof(), Weight(0.0)).is_err());
}

#[test]
fn double_zero_at_origin() {
    let w = winding_count(&circle(C64::new(0.0, 0.0), 0.05, 32), prof(), A).unwrap();
    assert_eq!(w.winding, 2);
    assert!(w.min_abs_d > 0.0);
}

#[test]
fn no_zero_near_one() {
    let w = winding_count(&circle(C64::new(1.0, 0.0), 0.1, 24), prof(), A).unwrap();
    assert_eq!(w.winding, 0);
}

#[test]
fn keyhole_is_zero_free() {
    let gap = spectral_gap(&prof().params, A).unwrap().value;
    let nodes = keyhole(-gap / 2.0, 2.0, 2.0, 0.05, 0.1).unwrap();
    let w = winding_count(&nodes, prof(), A).unwrap();
    assert_eq!(w.winding, 0);
}

#[test]
fn contour_geometry() {
    // λ ↦ λ - z0 winds once for z0 inside, zero times for z0 in the excised disc
    let k = keyhole(-0.5, 2.0, 2.0, 0.1, 0.05).unwrap();
    let inside: Vec<C64> = k.iter().map(|z| z - C64::new(1.0, 0.5)).collect();
    let hole: Vec<C64> = k.iter().map(|z| z - C64::new(0.02, 0.01)).collect();
    assert!((phase_winding(&inside) - 1.0).abs() < 1e-12);
    assert!(phase_winding(&hole).abs() < 1e-12);
    let r = rectangle(-1.0, 1.0, -1.0, 1.0, 0.1);
    assert!((phase_winding(&r) - 1.0).abs() < 1e-12);
    let c: Vec<C64> = circle(C64::new(0.0, 0.0), 1.0, 16).iter().map(|z| z * z).collect();
    assert!((phase_winding(&c) - 2.0).abs() < 1e-12);
}

#[test]
fn bad_keyhole_rejected() {
    assert!(keyhole(-0.01, 1.0, 1.0, 0.05, 0.1).is_err());
}

#[test]
fn cauchy_riemann_probe() {
    let h = 1e-3;
    for z in [C64::new(0.4, 0.3), C64::new(0.1, 1.5), C64::new(-0.1, 0.7)] {
        let dx = (d(z + h) - d(z - h)) / (2.0 * h);
        let dy = (d(z + C64::new(0.0, h)) - d(z - C64::new(0.0, h))) / C64::new(0.0, 2.0 * h);
        assert!((dx - dy).norm() / dx.norm() < 1e-5, "{z}: {dx} vs {dy}");
    }
}

#[test]
fn truncation_insensitive() {
    let p50 = base(50.0);
    for z in [
        C64::new(0.5, 0.0),
        C64::new(0.2, 1.0),
        C64::new(-0.05, 1.8),
        C64::new(1.0, -1.0),
    ] {
        let a = d(z);
        let b = evans_eval(z, &p50, A).unwrap().value;
        assert!((a - b).norm() / a.norm() < 1e-6, "{z}");
    }
}

#[test]
fn tolerance_reproducible() {
    let tight = EvansOptions {
        tol: Tolerance {
            rtol: 1e-12,
            atol: 1e-14,
        },
        ..Default::default()
    };
    for z in [C64::new(0.5, 0.0), C64::new(0.2, 1.0)] {
        let a = d(z);
        let b = evans_eval_with(z, prof(), A, &tight).unwrap().value;
        assert!((a - b).norm() / a.norm() < 1e-8);
    }
}

#[test]
fn renorm_exponent_tracks_root() {
    let s = evans_eval(C64::new(1.0, 0.0), prof(), A).unwrap();
    let r1 = decaying_root(C64::new(1.0, 0.0), prof(), 0.5, &Default::default()).unwrap();
    assert!((s.renorm_exponent + 2.0 * r1.re * 40.0).abs() < 1e-9);
}

#[test]
fn certified_eta_found() {
    let cert = certified_eta(prof(), A, 2.0, 2.0, 0.05, 0.1).unwrap();
    let eta = cert.eta.expect("some η certified");
    assert!(eta > 0.0 && eta < cert.gap);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conj_symmetry_random(re in 0.05f64..2.0, im in 0.0f64..2.0) {
        let z = C64::new(re, im);
        prop_assert!((d(z.conj()) - d(z).conj()).norm() <= 1e-10 * d(z).norm().max(1.0));
    }

    #[test]
    fn no_zeros_right_half(re in 0.2f64..2.0, im in -2.0f64..2.0) {
        prop_assert!(d(C64::new(re, im)).norm() > 1e-4);
    }
}
