//! Closed forms for the square barrier/well `V = a * chi_[-1,1]`: Wronskian,
//! its kappa-derivative, the first-pole fixed-point iteration and residues of
//! 1/W. These are the exact cross-validation targets for the shooting module.
//!
//! With `kp = sqrt(a + kappa^2)` (either branch; everything is even in kp):
//!
//! `W(kappa) = e^{-2 kappa} [ 2 (kappa^2 + kp^2) sinhc(2 kp) + 2 kappa cosh(2 kp) ]`
//!
//! which reduces to `2 kappa` as `a -> 0`.

use crate::{c64, C64, Error, Result};

/// Square step of amplitude `a` on [-1, 1]; `a = 1` is the barrier used in
/// the worked example, `a < 0` gives wells with bound states.
#[derive(Debug, Clone, Copy)]
pub struct SquareProblem {
    pub amplitude: f64,
}

impl SquareProblem {
    pub fn new(amplitude: f64) -> Result<Self> {
        if amplitude == 0.0 || !amplitude.is_finite() {
            return Err(Error::InvalidProblem("square step amplitude must be nonzero and finite".into()));
        }
        Ok(SquareProblem { amplitude })
    }
}

/// sinh(z)/z, stable near z = 0.
fn sinhc(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        1.0 + z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0))
    } else {
        z.sinh() / z
    }
}

/// (cosh z - sinhc z)/z, the derivative of sinhc, stable near 0.
fn sinhc_prime(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        z / 3.0 * (1.0 + z2 / 10.0 * (1.0 + z2 / 28.0))
    } else {
        (z.cosh() - sinhc(z)) / z
    }
}

/// Exact Wronskian W(kappa) of the Jost pair for the square step.
pub fn wronskian_closed_form(sq: &SquareProblem, kappa: C64) -> C64 {
    let kp2 = sq.amplitude + kappa * kappa;
    let kp = kp2.sqrt();
    (-2.0 * kappa).exp() * (2.0 * (kappa * kappa + kp2) * sinhc(2.0 * kp) + 2.0 * kappa * (2.0 * kp).cosh())
}

/// Analytic dW/dkappa for the square step.
pub fn wronskian_closed_form_dk(sq: &SquareProblem, kappa: C64) -> C64 {
    let kp2 = sq.amplitude + kappa * kappa;
    let kp = kp2.sqrt();
    let g = 2.0 * (kappa * kappa + kp2) * sinhc(2.0 * kp) + 2.0 * kappa * (2.0 * kp).cosh();
    // d(kp)/dkappa = kappa/kp; every kp-odd factor pairs up so dg stays even in kp
    let dg = 8.0 * kappa * sinhc(2.0 * kp)
        + 4.0 * (kappa * kappa + kp2) * sinhc_prime(2.0 * kp) * (kappa / kp)
        + 2.0 * (2.0 * kp).cosh()
        + 8.0 * kappa * kappa * sinhc(2.0 * kp);
    (-2.0 * kappa).exp() * (dg - 2.0 * g)
}

pub use crate::shooting::kappa_first_sheet;

/// Fixed-point iteration for the k-th pole of 1/W, followed by a Newton
/// polish on the closed-form Wronskian. Returns p_k.
pub fn iterate_pole(sq: &SquareProblem, k: usize) -> Result<C64> {
    let a = sq.amplitude;
    let half_pi_k = k as f64 * std::f64::consts::FRAC_PI_2;
    let mut w = c64(half_pi_k, 0.0);
    // w' = pi k/2 + (1/2i) Log((w + w')/(w - w')), w = sqrt(w'^2 + a)
    for _ in 0..40 {
        let wp = (w * w - a).sqrt();
        let ratio = (w + wp) / (w - wp);
        let wp_next = c64(half_pi_k, 0.0) + ratio.ln() / (2.0 * C64::i());
        let w_next = (wp_next * wp_next + a).sqrt();
        if !w_next.re.is_finite() || !w_next.im.is_finite() {
            return Err(Error::NoConvergence { iters: 40, step: f64::INFINITY });
        }
        let step = (w_next - w).norm();
        w = w_next;
        if step < 1e-13 * w.norm() {
            break;
        }
    }
    // Newton polish in kappa on the exact W; the huge-term cancellation in W
    // sets an absolute noise floor, so stop on stagnation as well
    let mut kappa = -C64::i() * w;
    let mut last_step = f64::INFINITY;
    for it in 0..60 {
        let f = wronskian_closed_form(sq, kappa);
        let d = wronskian_closed_form_dk(sq, kappa);
        let step = f / d;
        kappa -= step;
        let sn = step.norm();
        if sn < 1e-13 * kappa.norm().max(1.0) || (sn >= 0.5 * last_step && sn < 1e-6 * (1.0 + kappa.norm())) {
            return Ok(C64::i() * kappa * kappa);
        }
        last_step = sn;
        if it == 59 {
            return Err(Error::NoConvergence { iters: 60, step: sn });
        }
    }
    Ok(C64::i() * kappa * kappa)
}

/// The first pole of 1/W_p (k = 1).
pub fn iterate_first_pole(sq: &SquareProblem) -> Result<C64> {
    iterate_pole(sq, 1)
}

/// Residue of 1/W_p in the p variable at a simple zero p_k:
/// `res = 2 i kappa_k / (dW/dkappa)(kappa_k)`.
pub fn residue_closed_form(sq: &SquareProblem, p_k: C64) -> Result<C64> {
    let kappa = kappa_first_sheet(p_k);
    let w = wronskian_closed_form(sq, kappa);
    let d = wronskian_closed_form_dk(sq, kappa);
    if w.norm() > 1e-6 * d.norm() * kappa.norm().max(1.0) {
        return Err(Error::Precondition(format!("p = {p_k} is not a zero of the closed-form Wronskian")));
    }
    if d.norm() < 1e-12 {
        return Err(Error::NonSimpleZero { kappa });
    }
    Ok(2.0 * C64::i() * kappa / d)
}
