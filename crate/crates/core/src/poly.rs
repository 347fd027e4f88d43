//! Cubic roots through companion-matrix eigenvalues.

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Roots of `a3 x^3 + a2 x^2 + a1 x + a0`, coefficients given low to high,
/// sorted by real part (then imaginary part).
pub fn cubic_roots(coef: [C64; 4]) -> Result<[C64; 3]> {
    let lead = coef[3];
    if lead.norm() == 0.0 || !coef.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidInput("degenerate cubic".into()));
    }
    let p0 = -coef[0] / lead;
    let p1 = -coef[1] / lead;
    let p2 = -coef[2] / lead;
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let m = Matrix3::new(z, o, z, z, z, o, p0, p1, p2);
    let (_, t) = m.schur().unpack();
    let mut roots = [t[(0, 0)], t[(1, 1)], t[(2, 2)]];
    for r in roots.iter_mut() {
        *r = polish(&coef, *r);
    }
    sort_roots(&mut roots);
    Ok(roots)
}

pub fn sort_roots(roots: &mut [C64; 3]) {
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

pub fn eval_cubic(coef: &[C64; 4], x: C64) -> C64 {
    ((coef[3] * x + coef[2]) * x + coef[1]) * x + coef[0]
}

fn eval_deriv(coef: &[C64; 4], x: C64) -> C64 {
    (coef[3] * 3.0 * x + coef[2] * 2.0) * x + coef[1]
}

// Two Newton steps, accepted only if they reduce the residual.
fn polish(coef: &[C64; 4], mut x: C64) -> C64 {
    for _ in 0..2 {
        let f = eval_cubic(coef, x);
        let d = eval_deriv(coef, x);
        if d.norm() == 0.0 {
            break;
        }
        let y = x - f / d;
        if eval_cubic(coef, y).norm() <= f.norm() {
            x = y;
        } else {
            break;
        }
    }
    x
}

/// Classical discriminant of `a x^3 + b x^2 + c x + d`.
pub fn cubic_discriminant(coef: [C64; 4]) -> C64 {
    let (d, c, b, a) = (coef[0], coef[1], coef[2], coef[3]);
    a * b * c * d * 18.0 - b * b * b * d * 4.0 + b * b * c * c - a * c * c * c * 4.0 - a * a * d * d * 27.0
}
