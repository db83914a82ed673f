//! Complex exponential integrals E_1 and E_{1/2} and the pole-term function
//! used by the finite-accuracy (pole-corrected) evaluator.
//!
//! `E_n(z) = int_1^inf t^{-n} e^{-zt} dt` for Re z > 0, continued to
//! `C \ R^-` and extended by continuity to the two sides of the cut.
//!
//! Algorithm zones (validated against quadrature oracles):
//!   |z| >= 35                      -> optimally truncated asymptotic series,
//!                                     relative error ~ e^{-|z|}
//!   |z| + Re z <= 8                -> power series around 0 (cancellation
//!                                     stays below ~e^8 there)
//!   otherwise                      -> modified-Lentz continued fraction
//!
//! E_{1/2} goes through the same machinery; its small-z series carries the
//! `Gamma(1/2) z^{-1/2}` ramified head. A scaled variant `e^{z} E_n(z)` is
//! provided so that `e^{-u^2 t} E_n(-u^2 t)` never overflows.

use crate::quad::adaptive;
use crate::{c64, C64, Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Order selector: the two exponential integrals the pole terms need.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnOrder {
    One,
    Half,
}

/// Side of the branch cut R^- used for boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSide {
    Above,
    Below,
}

/// Validated input of the pole-term functions: u off the real axis, t > 0.
#[derive(Debug, Clone, Copy)]
pub struct PoleTermInput {
    pub u: C64,
    pub t: f64,
}

impl PoleTermInput {
    pub fn new(u: C64, t: f64) -> Result<Self> {
        if u.im == 0.0 {
            return Err(Error::InvalidPoleTerm(format!("u = {u} is real; arg u must lie in (-pi,0) or (0,pi)")));
        }
        if !(t > 0.0) {
            return Err(Error::InvalidPoleTerm(format!("t = {t} must be positive")));
        }
        Ok(PoleTermInput { u, t })
    }
}

fn order_value(n: EnOrder) -> f64 {
    match n {
        EnOrder::One => 1.0,
        EnOrder::Half => 0.5,
    }
}

/// E_n(z) on C \ R^-; on the cut itself the side is chosen by `side`.
pub fn exp_integral(n: EnOrder, z: C64, side: CutSide) -> Result<C64> {
    if z.norm() == 0.0 {
        return Err(Error::InvalidPoleTerm("E_n(0) diverges".into()));
    }
    // boundary values: approach the cut from the requested side
    let z = if z.im == 0.0 && z.re < 0.0 {
        match side {
            CutSide::Above => c64(z.re, 5e-324),
            CutSide::Below => c64(z.re, -5e-324),
        }
    } else {
        z
    };
    Ok(en_scaled(n, z)? * (-z).exp())
}

/// `e^{z} E_n(z)`, overflow-free for large |z| away from the positive axis.
pub fn exp_integral_scaled(n: EnOrder, z: C64, side: CutSide) -> Result<C64> {
    if z.norm() == 0.0 {
        return Err(Error::InvalidPoleTerm("E_n(0) diverges".into()));
    }
    let z = if z.im == 0.0 && z.re < 0.0 {
        match side {
            CutSide::Above => c64(z.re, 5e-324),
            CutSide::Below => c64(z.re, -5e-324),
        }
    } else {
        z
    };
    en_scaled(n, z)
}

/// Dispatch on the zone map; returns e^{z} E_n(z).
fn en_scaled(n: EnOrder, z: C64) -> Result<C64> {
    let az = z.norm();
    if az >= 35.0 {
        return Ok(en_asymptotic_scaled(n, z));
    }
    if az + z.re <= 8.0 {
        let series = match n {
            EnOrder::One => e1_series(z),
            EnOrder::Half => eh_series(z),
        };
        return Ok(series * z.exp());
    }
    en_continued_fraction_scaled(n, z)
}

/// Power series: E_1(z) = -gamma - ln z - sum_{k>=1} (-z)^k/(k k!).
fn e1_series(z: C64) -> C64 {
    let mut sum = c64(0.0, 0.0);
    let mut term = c64(1.0, 0.0);
    for k in 1..400 {
        term *= -z / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.norm() < 1e-18 * sum.norm().max(1.0) {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

/// Power series: E_{1/2}(z) = Gamma(1/2) z^{-1/2} - sum_{k>=0} (-z)^k/(k! (k+1/2)).
fn eh_series(z: C64) -> C64 {
    let mut sum = c64(0.0, 0.0);
    let mut term = c64(1.0, 0.0); // (-z)^k / k!
    for k in 0..400 {
        if k > 0 {
            term *= -z / k as f64;
        }
        let add = term / (k as f64 + 0.5);
        sum += add;
        if add.norm() < 1e-18 * sum.norm().max(1.0) {
            break;
        }
    }
    std::f64::consts::PI.sqrt() / z.sqrt() - sum
}

/// Modified Lentz on E_n(z) = e^{-z}/(z+n- 1n/(z+n+2- 2(n+1)/(z+n+4- ...))).
fn en_continued_fraction_scaled(n: EnOrder, z: C64) -> Result<C64> {
    let nv = order_value(n);
    let tiny = c64(1e-290, 0.0);
    let mut b = z + nv;
    let mut c = c64(1e290, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..200_000 {
        let a = -(i as f64) * (nv + i as f64 - 1.0);
        b += 2.0;
        d = b + a * d;
        if d.norm() < 1e-290 {
            d = tiny;
        }
        c = b + a / c;
        if c.norm() < 1e-290 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            return Ok(h);
        }
    }
    Err(Error::QuadratureFailure("E_n continued fraction stalled".into()))
}

/// Optimally truncated asymptotic series: E_n(z) ~ e^{-z}/z sum_k (-1)^k (n)_k / z^k.
fn en_asymptotic_scaled(n: EnOrder, z: C64) -> C64 {
    let nv = order_value(n);
    let mut sum = c64(1.0, 0.0);
    let mut term = c64(1.0, 0.0);
    let mut prev = 1.0f64;
    for k in 0..400 {
        let next = term * (-(nv + k as f64)) / z;
        if next.norm() >= prev {
            break; // least term reached
        }
        prev = next.norm();
        sum += next;
        term = next;
        if prev < 1e-18 * sum.norm() {
            break;
        }
    }
    sum / z
}

/// Closed form of the pole term
/// `E(u,t) = sqrt(pi/t) + e^{-u^2 t} ( u^2 sqrt(pi t) E_{1/2}(-u^2 t) + u E_1(-u^2 t) )`,
/// evaluated through the scaled exponential integrals so that nothing
/// overflows. Equals `int_0^inf e^{-pt} dp / (sqrt p - u)`.
pub fn pole_term_e(input: &PoleTermInput) -> Result<C64> {
    let (u, t) = (input.u, input.t);
    let z = -u * u * t; // never on R^- since u is off the real axis
    let side = CutSide::Above;
    let eh = exp_integral_scaled(EnOrder::Half, z, side)?; // e^{z} E_{1/2}(z)
    let e1 = exp_integral_scaled(EnOrder::One, z, side)?; // e^{z} E_1(z)
    // e^{-u^2 t} E_n(-u^2 t) = e^{z} E_n(z)
    let sqrt_pi_t = (std::f64::consts::PI * t).sqrt();
    Ok((std::f64::consts::PI / t).sqrt() + u * u * sqrt_pi_t * eh + u * e1)
}

/// Quadrature oracle for the same integral: adaptive Gauss-Kronrod on
/// `int_0^inf e^{-pt}/(sqrt p - u) dp`, substituted p = s^2 and split at the
/// scale of |u|. Relative tolerance 1e-10.
pub fn pole_term_quadrature(input: &PoleTermInput) -> Result<C64> {
    let (u, t) = (input.u, input.t);
    let f = |s: f64| -> C64 { (-s * s * t).exp() * 2.0 * s / (c64(s, 0.0) - u) };
    let split = (2.0 * u.norm()).max(1.0);
    let tail_end = split.max((45.0 / t).sqrt() + 1.0);
    let head = adaptive(f, 0.0, split, 1e-13, 1e-11, 40_000)?;
    let tail = adaptive(f, split, tail_end, 1e-13, 1e-11, 40_000)?;
    Ok(head + tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rel_err;

    #[test]
    fn e1_at_one() {
        // independent pinned value, from adaptive quadrature of int_1^inf e^-t/t
        let direct = adaptive(
            |s| {
                // substitute t = 1/(1-s) mapping [0,1) -> [1,inf)
                let t = 1.0 / (1.0 - s);
                c64((-t).exp() / t * t * t, 0.0)
            },
            0.0,
            1.0 - 1e-12,
            1e-14,
            1e-13,
            20_000,
        )
        .unwrap();
        assert!((direct.re - 0.21938393439552026).abs() < 1e-12);
        let v = exp_integral(EnOrder::One, c64(1.0, 0.0), CutSide::Above).unwrap();
        assert!((v.re - 0.21938393439552026).abs() < 1e-13, "{v}");
        assert!(v.im.abs() < 1e-16);
    }

    #[test]
    fn e_half_erfc_identity_at_one() {
        // E_{1/2}(z) = sqrt(pi/z) erfc(sqrt z) for Re z > 0, checked at z = 1
        // with erfc(1) = 2/sqrt(pi) int_1^inf e^{-t^2} dt from quadrature
        let tail = adaptive(|s| c64((-(s * s)).exp(), 0.0), 1.0, 8.0, 1e-15, 1e-13, 20_000).unwrap();
        let erfc_1 = 2.0 / std::f64::consts::PI.sqrt() * tail.re;
        let want = std::f64::consts::PI.sqrt() * erfc_1;
        let v = exp_integral(EnOrder::Half, c64(1.0, 0.0), CutSide::Above).unwrap();
        assert!((v.re - want).abs() < 1e-12, "{} vs {want}", v.re);
    }

    #[test]
    fn e1_series_identity_small_z() {
        // E1(z) + log z + gamma + sum (-z)^k/(k k!) -> 0 for |z| = 0.1
        for th in [0.3, 1.8, 3.0, -2.2] {
            let z = C64::from_polar(0.1, th);
            let v = exp_integral(EnOrder::One, z, CutSide::Above).unwrap();
            let mut sum = c64(0.0, 0.0);
            let mut term = c64(1.0, 0.0);
            for k in 1..40 {
                term *= -z / k as f64;
                sum += term / k as f64;
            }
            let recon = -EULER_GAMMA - z.ln() - sum;
            assert!(rel_err(v, recon) < 1e-14);
        }
    }

    #[test]
    fn branch_jump_across_cut() {
        // the two boundary values on R^- differ by the log jump 2 pi i
        let eps = 1e-9;
        let above = exp_integral(EnOrder::One, c64(-1.0, eps), CutSide::Above).unwrap();
        let below = exp_integral(EnOrder::One, c64(-1.0, -eps), CutSide::Below).unwrap();
        let jump = below - above;
        assert!((jump - c64(0.0, 2.0 * std::f64::consts::PI)).norm() < 1e-7, "jump {jump}");
        // side flags reproduce the same limits exactly on the cut
        let above0 = exp_integral(EnOrder::One, c64(-1.0, 0.0), CutSide::Above).unwrap();
        let below0 = exp_integral(EnOrder::One, c64(-1.0, 0.0), CutSide::Below).unwrap();
        assert!((above0 - above).norm() < 1e-7);
        assert!((below0 - below).norm() < 1e-7);
    }

    #[test]
    fn zone_consistency() {
        // series vs CF where both are in their good regions (the series loses
        // ~e^{|z|+Re z} digits, so stay near the cut)
        for z in [c64(-2.0, 9.0), c64(-6.0, 6.0), c64(0.5, 6.8), c64(-20.0, 10.0)] {
            let s = e1_series(z) * z.exp();
            let c = en_continued_fraction_scaled(EnOrder::One, z).unwrap();
            assert!(rel_err(s, c) < 1e-10, "z={z} series vs cf {:e}", rel_err(s, c));
        }
        // CF vs asymptotic straddling the |z| = 35 seam
        for z in [c64(31.0, 18.0), c64(36.0, -14.0), c64(-20.0, 33.0)] {
            let c = en_continued_fraction_scaled(EnOrder::One, z).unwrap();
            let a = en_asymptotic_scaled(EnOrder::One, z);
            assert!(rel_err(c, a) < 1e-12, "z={z} cf vs asym {:e}", rel_err(c, a));
            let ch = en_continued_fraction_scaled(EnOrder::Half, z).unwrap();
            let ah = en_asymptotic_scaled(EnOrder::Half, z);
            assert!(rel_err(ch, ah) < 1e-12, "z={z} half cf vs asym {:e}", rel_err(ch, ah));
        }
    }

    #[test]
    fn pole_term_identity_spot_checks() {
        for (u, t) in [
            (C64::from_polar(1.0, std::f64::consts::FRAC_PI_4), 5.0),
            (c64(0.0, 1.0), 1.0),
            (c64(2.0, 0.5), 2.0),
            (c64(-1.0, 0.7), 0.5),
            (c64(1.2, -0.8), 10.0),
        ] {
            let inp = PoleTermInput::new(u, t).unwrap();
            let q = pole_term_quadrature(&inp).unwrap();
            let e = pole_term_e(&inp).unwrap();
            assert!(rel_err(q, e) < 1e-9, "u={u} t={t}: {q} vs {e} rel {:e}", rel_err(q, e));
        }
    }

    #[test]
    fn pole_term_rejects_real_u() {
        assert!(PoleTermInput::new(c64(1.0, 0.0), 1.0).is_err());
        assert!(PoleTermInput::new(c64(0.5, 0.5), -1.0).is_err());
    }

    #[test]
    fn pole_term_conjugation_symmetry() {
        // real integrand kernel: conjugate u gives conjugate output
        let inp = PoleTermInput::new(c64(0.8, 1.1), 3.0).unwrap();
        let cnj = PoleTermInput::new(c64(0.8, -1.1), 3.0).unwrap();
        let a = pole_term_e(&inp).unwrap();
        let b = pole_term_e(&cnj).unwrap();
        assert!((a - b.conj()).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn pole_term_scaling_identity() {
        // substituting p -> lambda^2 p in the defining integral gives
        // E(lambda u, t/lambda^2) = lambda E(u, t), tested at lambda = 2
        let lambda = 2.0;
        let inp = PoleTermInput::new(c64(0.6, 0.9), 4.0).unwrap();
        let scaled = PoleTermInput::new(inp.u * lambda, inp.t / (lambda * lambda)).unwrap();
        let a = pole_term_e(&inp).unwrap();
        let b = pole_term_e(&scaled).unwrap() / lambda;
        assert!(rel_err(a, b) < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn pole_term_large_u_limit() {
        // I(u,t) -> -1/(u t) (1 + o(1)) as u -> inf off the axis
        let t = 1.0;
        let u = c64(300.0, 90.0);
        let inp = PoleTermInput::new(u, t).unwrap();
        let v = pole_term_e(&inp).unwrap();
        let lead = -1.0 / (u * t);
        assert!(rel_err(v, lead) < 2e-2, "{v} vs {lead}");
    }
}
