//! Jost solutions, fundamental pairs and the Wronskian for
//! `y'' = (V(x) + kappa^2) y` on the uniformizing kappa-plane.
//!
//! The integrator evolves exponentially rescaled unknowns so that only O(1)
//! quantities are stepped: for `y_+` we integrate `z = e^{+kappa x} y_+`
//! (leftward from x = 1), for `y_-` the mirror image; the rescaled equation is
//! `z'' = +-2 kappa z' + V z`. Traces store the scaled value, scaled
//! derivative and the complex exponent separately.

use crate::problem::Problem;
use crate::quad::{gauss_legendre, gl_integrate};
use crate::{c64, C64, Error, Result};

/// Beyond this |kappa| the shooting integrator loses digits to oscillation
/// and the two-term WKB forms take over.
pub const KAPPA_SWITCH: f64 = 40.0;

/// Which sheet of the p-surface a kappa-point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SheetTag {
    /// Re kappa < 0: the outgoing/Gamow continuation side.
    First,
    /// Re kappa > 0: the L^2-decay (physical) side.
    Physical,
    /// Re kappa = 0: on the continuous spectrum boundary.
    Boundary,
}

/// A point kappa on the uniformizing plane together with p = i kappa^2.
#[derive(Debug, Clone, Copy)]
pub struct SpectralPoint {
    pub kappa: C64,
    pub p: C64,
    pub sheet: SheetTag,
}

impl SpectralPoint {
    pub fn from_kappa(kappa: C64) -> Self {
        let p = C64::i() * kappa * kappa;
        let sheet = if kappa.re < 0.0 {
            SheetTag::First
        } else if kappa.re > 0.0 {
            SheetTag::Physical
        } else {
            SheetTag::Boundary
        };
        SpectralPoint { kappa, p, sheet }
    }
}

/// Which solution a trace represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSide {
    Plus,
    Minus,
    F1,
    F2,
}

/// Sampled solution: `y(x) = val * exp(exponent)`, `y'(x) = dval * exp(exponent)`.
#[derive(Debug, Clone)]
pub struct SolutionTrace {
    pub side: TraceSide,
    pub kappa: SpectralPoint,
    pub xs: Vec<f64>,
    /// scaled (y, y') pairs
    pub vals: Vec<(C64, C64)>,
    /// complex exponents, one per sample
    pub exps: Vec<C64>,
}

impl SolutionTrace {
    /// Reconstructed y at sample i (may overflow for extreme exponents;
    /// callers in scaled arithmetic use the raw fields).
    pub fn value(&self, i: usize) -> C64 {
        self.vals[i].0 * self.exps[i].exp()
    }
    pub fn deriv(&self, i: usize) -> C64 {
        self.vals[i].1 * self.exps[i].exp()
    }
    pub fn len(&self) -> usize {
        self.xs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

// Dormand-Prince 5(4) coefficients.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

pub(crate) const RTOL: f64 = 1e-12;
pub(crate) const ATOL: f64 = 1e-14;

type State = [C64; 2];

/// One adaptive DP5(4) solve of `z'' = alpha z' + (beta + V(x)) z` from `x0`
/// to each checkpoint in turn. `checkpoints` must be sorted in the direction
/// of integration and start after `x0`. Returns the state at each checkpoint.
fn integrate_linear2(
    prob: &Problem,
    alpha: C64,
    beta: C64,
    x0: f64,
    y0: State,
    checkpoints: &[f64],
) -> Result<Vec<State>> {
    let rhs = |x: f64, y: &State| -> State {
        let v = prob.eval_potential(x, 0);
        [y[1], y[1] * alpha + y[0] * (beta + v)]
    };
    let dir = if checkpoints.last().copied().unwrap_or(x0) >= x0 { 1.0 } else { -1.0 };

    // forced stops: potential support endpoints and interior knots
    let mut stops: Vec<f64> = Vec::new();
    let (sa, sb) = prob.potential().support();
    for k in [sa, sb].into_iter().chain(prob.potential().interior_knots()) {
        stops.push(k);
    }
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut x = x0;
    let mut y = y0;
    // conservative initial step
    let scale = 1.0 + alpha.norm() + beta.norm().sqrt();
    let mut h = dir * (0.01 / scale).min(0.1);

    for &target in checkpoints {
        if (target - x) * dir <= 0.0 {
            // duplicate or zero-length hop
            if (target - x).abs() < 1e-14 {
                out.push(y);
                continue;
            }
            return Err(Error::Precondition("checkpoints not sorted along direction".into()));
        }
        // sub-targets: knots strictly between x and target
        let mut subs: Vec<f64> = stops
            .iter()
            .copied()
            .filter(|s| (s - x) * dir > 1e-14 && (target - s) * dir > 1e-14)
            .collect();
        subs.sort_by(|a, b| if dir > 0.0 { a.partial_cmp(b).unwrap() } else { b.partial_cmp(a).unwrap() });
        subs.push(target);

        for sub in subs {
            while (sub - x) * dir > 1e-14 * (1.0 + x.abs()) {
                if h.abs() > (sub - x).abs() {
                    h = sub - x;
                }
                let k1 = rhs(x, &y);
                let mut yt = step_stage(&y, &[k1], &A2, h);
                let k2 = rhs(x + h / 5.0, &yt);
                yt = step_stage(&y, &[k1, k2], &A3, h);
                let k3 = rhs(x + 3.0 * h / 10.0, &yt);
                yt = step_stage(&y, &[k1, k2, k3], &A4, h);
                let k4 = rhs(x + 4.0 * h / 5.0, &yt);
                yt = step_stage(&y, &[k1, k2, k3, k4], &A5, h);
                let k5 = rhs(x + 8.0 * h / 9.0, &yt);
                yt = step_stage(&y, &[k1, k2, k3, k4, k5], &A6, h);
                let k6 = rhs(x + h, &yt);
                let y5 = step_stage(&y, &[k1, k2, k3, k4, k5, k6], &B5, h);
                let k7 = rhs(x + h, &y5);
                let y4 = step_stage(&y, &[k1, k2, k3, k4, k5, k6, k7], &B4, h);

                let mut err: f64 = 0.0;
                for i in 0..2 {
                    let sc = ATOL + RTOL * y[i].norm().max(y5[i].norm());
                    err = err.max((y5[i] - y4[i]).norm() / sc);
                }
                if err <= 1.0 {
                    x += h;
                    y = y5;
                }
                let fac = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
                h *= fac.clamp(0.2, 5.0);
                if h.abs() < 1e-14 * (1.0 + x.abs()) {
                    return Err(Error::StepUnderflow { x, h: h.abs() });
                }
            }
            x = sub;
        }
        out.push(y);
    }
    Ok(out)
}

fn step_stage(y: &State, ks: &[State], coeffs: &[f64], h: f64) -> State {
    let mut out = *y;
    for (k, c) in ks.iter().zip(coeffs) {
        if *c != 0.0 {
            out[0] += k[0] * (*c * h);
            out[1] += k[1] * (*c * h);
        }
    }
    out
}

/// The pair f1, f2 with f1(-1)=1, f1'(-1)=0, f2(-1)=0, f2'(-1)=1, sampled at
/// `xs` (ascending, within [-1, 1]). The cross-Wronskian [f1,f2] = 1 is
/// checked at every sample to integrator accuracy.
pub fn fundamental_pair(
    prob: &Problem,
    sp: &SpectralPoint,
    xs: &[f64],
) -> Result<(SolutionTrace, SolutionTrace)> {
    let beta = sp.kappa * sp.kappa;
    let f1 = integrate_linear2(prob, c64(0.0, 0.0), beta, -1.0, [c64(1.0, 0.0), c64(0.0, 0.0)], xs)?;
    let f2 = integrate_linear2(prob, c64(0.0, 0.0), beta, -1.0, [c64(0.0, 0.0), c64(1.0, 0.0)], xs)?;
    // unit cross-Wronskian check, scaled by the term magnitudes
    for (a, b) in f1.iter().zip(&f2) {
        let w = a[0] * b[1] - a[1] * b[0];
        let mag = (a[0] * b[1]).norm() + (a[1] * b[0]).norm();
        if (w - 1.0).norm() > 1e-9 * mag.max(1.0) {
            return Err(Error::WronskianInconsistent { spread: (w - 1.0).norm() });
        }
    }
    let zeros = vec![c64(0.0, 0.0); xs.len()];
    Ok((
        SolutionTrace {
            side: TraceSide::F1,
            kappa: *sp,
            xs: xs.to_vec(),
            vals: f1.into_iter().map(|s| (s[0], s[1])).collect(),
            exps: zeros.clone(),
        },
        SolutionTrace {
            side: TraceSide::F2,
            kappa: *sp,
            xs: xs.to_vec(),
            vals: f2.into_iter().map(|s| (s[0], s[1])).collect(),
            exps: zeros,
        },
    ))
}

/// Jost solutions y+ (= e^{-kappa x} for x >= 1) and y- (= e^{kappa x} for
/// x <= -1), sampled at `xs` (ascending, anywhere in [-X, X]).
pub fn jost_solutions(
    prob: &Problem,
    sp: &SpectralPoint,
    xs: &[f64],
) -> Result<(SolutionTrace, SolutionTrace)> {
    if sp.kappa.norm() == 0.0 {
        return Err(Error::KappaZero);
    }
    let kappa = sp.kappa;
    let plus = jost_side(prob, sp, xs, true)?;
    let minus = jost_side(prob, sp, xs, false)?;
    let _ = kappa;
    Ok((plus, minus))
}

fn jost_side(prob: &Problem, sp: &SpectralPoint, xs: &[f64], plus: bool) -> Result<SolutionTrace> {
    let kappa = sp.kappa;
    let n = xs.len();
    let mut vals = vec![(c64(0.0, 0.0), c64(0.0, 0.0)); n];
    let mut exps = vec![c64(0.0, 0.0); n];

    // indices by region; the far support edge itself belongs to the
    // integrated range (its checkpoint is always present)
    let mut interior: Vec<usize> = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        if plus {
            exps[i] = -kappa * x;
            if x >= 1.0 {
                vals[i] = (c64(1.0, 0.0), -kappa);
            } else if x >= -1.0 {
                interior.push(i);
            }
        } else {
            exps[i] = kappa * x;
            if x <= -1.0 {
                vals[i] = (c64(1.0, 0.0), kappa);
            } else if x <= 1.0 {
                interior.push(i);
            }
        }
    }

    // integrate the scaled equation across [-1, 1]
    // plus: z = e^{+kappa x} y+, z'' = 2 kappa z' + V z, from x=1 leftward
    // minus: z = e^{-kappa x} y-, z'' = -2 kappa z' + V z, from x=-1 rightward
    let (alpha, start) = if plus { (2.0 * kappa, 1.0) } else { (-2.0 * kappa, -1.0) };
    let mut checkpoints: Vec<f64> = interior.iter().map(|&i| xs[i]).collect();
    if plus {
        checkpoints.sort_by(|a, b| b.partial_cmp(a).unwrap());
    } else {
        checkpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    // always land on the far support edge for the exterior continuation
    let far = if plus { -1.0 } else { 1.0 };
    if checkpoints.last().map(|&l| (l - far).abs() > 1e-14).unwrap_or(true) {
        checkpoints.push(far);
    }
    let states = integrate_linear2(
        prob,
        alpha,
        c64(0.0, 0.0),
        start,
        [c64(1.0, 0.0), c64(0.0, 0.0)],
        &checkpoints,
    )?;
    // interior samples: y = z e^{-+kappa x}, y' = (z' -+ kappa z) e^{-+kappa x}
    let mut by_x = std::collections::HashMap::new();
    for (cx, st) in checkpoints.iter().zip(&states) {
        by_x.insert(cx.to_bits(), *st);
    }
    for &i in &interior {
        let st = by_x[&xs[i].to_bits()];
        let (z, w) = (st[0], st[1]);
        vals[i] = if plus { (z, w - kappa * z) } else { (z, w + kappa * z) };
    }
    // exterior continuation on the far side
    let far_state = by_x[&far.to_bits()];
    let (zf, wf) = (far_state[0], far_state[1]);
    let two_k = 2.0 * kappa;
    for (i, &x) in xs.iter().enumerate() {
        if plus && x < -1.0 {
            // y+ = e^{-kappa x} (c6 + c5 e^{2 kappa (x+1)}) with
            // c5 = w(-1)/(2k) [times e^{2k} folded into the shifted exponent],
            // c6 = z(-1) - w(-1)/(2k)
            let c5 = wf / two_k;
            let c6 = zf - wf / two_k;
            let grow = (two_k * (x + 1.0)).exp();
            vals[i] = (c6 + c5 * grow, kappa * (c5 * grow - c6));
        } else if !plus && x > 1.0 {
            let c7 = zf + wf / two_k;
            let c8 = -wf / two_k;
            let decay = (-two_k * (x - 1.0)).exp();
            vals[i] = (c7 + c8 * decay, kappa * (c7 - c8 * decay));
        }
    }
    Ok(SolutionTrace {
        side: if plus { TraceSide::Plus } else { TraceSide::Minus },
        kappa: *sp,
        xs: xs.to_vec(),
        vals,
        exps,
    })
}

/// The Wronskian W = [y+, y-]; x-independent, computed at three interior
/// points with a relative consistency check of 1e-9.
pub fn wronskian(prob: &Problem, sp: &SpectralPoint) -> Result<C64> {
    if sp.kappa.norm() == 0.0 {
        return Err(Error::KappaZero);
    }
    let xs = [-0.613, 0.117, 0.741];
    let (p, m) = jost_solutions(prob, sp, &xs)?;
    let mut ws = [c64(0.0, 0.0); 3];
    let mut term_scale = 0.0f64;
    for i in 0..3 {
        // exponents cancel exactly: e_+ + e_- = 0
        ws[i] = p.vals[i].0 * m.vals[i].1 - m.vals[i].0 * p.vals[i].1;
        term_scale = term_scale
            .max((p.vals[i].0 * m.vals[i].1).norm())
            .max((m.vals[i].0 * p.vals[i].1).norm());
    }
    let w0 = ws[0];
    let spread = ws.iter().map(|w| (w - w0).norm()).fold(0.0, f64::max);
    // relative x-independence, with an absolute floor at the integrator noise
    // of the cancelling terms (W may legitimately vanish)
    let allowed = 1e-9 * w0.norm() + 1e-10 * term_scale.max(1e-300);
    if spread > allowed {
        return Err(Error::WronskianInconsistent { spread: spread / w0.norm().max(1e-300) });
    }
    Ok((ws[0] + ws[1] + ws[2]) / 3.0)
}

/// The kappa-preimage of a p-plane point on the resonance continuation side:
/// the branch `kappa = -i sqrt(i p)` (principal square root), which maps the
/// left half p-plane into the third-quadrant kappa-wedge where the Gamow
/// zeros live. Analytic away from the positive imaginary p-axis.
pub fn kappa_first_sheet(p: C64) -> C64 {
    -C64::i() * (C64::i() * p).sqrt()
}

/// Side selector for [`wkb_jost`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JostSide {
    Plus,
    Minus,
}

/// Two-term WKB approximation of the Jost solutions for |kappa| >= KAPPA_SWITCH:
/// `y+ ~ e^{-kappa x}(1 + (2 kappa)^{-1} int_x^1 V)` and
/// `y- ~ e^{kappa x}(1 + (2 kappa)^{-1} int_{-1}^x V)`, with O(1/p) error.
/// The seam Re kappa = 0 is treated as part of the S+ sector.
pub fn wkb_jost(prob: &Problem, sp: &SpectralPoint, x: f64, side: JostSide) -> Result<C64> {
    if sp.kappa.norm() < KAPPA_SWITCH {
        return Err(Error::BelowWkbSwitch { kappa_abs: sp.kappa.norm() });
    }
    let (nodes, weights) = gauss_legendre(32);
    let integral = |a: f64, b: f64| -> f64 {
        if b <= a {
            return 0.0;
        }
        // piecewise over potential knots
        let mut cuts = vec![a];
        for k in prob.potential().interior_knots() {
            if k > a && k < b {
                cuts.push(k);
            }
        }
        cuts.push(b);
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            acc += gl_integrate(|s| c64(prob.eval_potential(s, 0), 0.0), w[0], w[1], &nodes, &weights).re;
        }
        acc
    };
    let kappa = sp.kappa;
    Ok(match side {
        JostSide::Plus => {
            let corr = integral(x.clamp(-1.0, 1.0), 1.0);
            (-kappa * x).exp() * (1.0 + corr / (2.0 * kappa))
        }
        JostSide::Minus => {
            let corr = integral(-1.0, x.clamp(-1.0, 1.0));
            (kappa * x).exp() * (1.0 + corr / (2.0 * kappa))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{free_problem, square_barrier_problem};
    use crate::rel_err;

    #[test]
    fn free_fundamental_pair_is_hyperbolic() {
        let prob = free_problem();
        let sp = SpectralPoint::from_kappa(c64(1.0, 0.0));
        let xs = [0.0];
        let (f1, f2) = fundamental_pair(&prob, &sp, &xs).unwrap();
        // f1 = cosh(x+1), f2 = sinh(x+1) at x = 0
        assert!((f1.value(0) - 1.0f64.cosh()).norm() < 1e-10);
        assert!((f2.value(0) - 1.0f64.sinh()).norm() < 1e-10);
    }

    #[test]
    fn free_jost_and_wronskian_exact() {
        let prob = free_problem();
        for kap in [c64(0.3, 0.1), c64(-1.0, -2.0), c64(5.0, 0.0), c64(0.1, -8.0)] {
            let sp = SpectralPoint::from_kappa(kap);
            let xs = [-1.4, -0.3, 0.9, 1.7];
            let (p, m) = jost_solutions(&prob, &sp, &xs).unwrap();
            for (i, &x) in xs.iter().enumerate() {
                assert!(rel_err(p.value(i), (-kap * x).exp()) < 1e-11, "y+ at {x}");
                assert!(rel_err(m.value(i), (kap * x).exp()) < 1e-11, "y- at {x}");
            }
            let w = wronskian(&prob, &sp).unwrap();
            assert!(rel_err(w, 2.0 * kap) < 1e-12, "W = 2 kappa, got {w} for {kap}");
        }
    }

    #[test]
    fn barrier_fundamental_pair_closed_form() {
        // inside the barrier the equation has constant coefficient 1 + kappa^2
        let prob = square_barrier_problem();
        for kap in [c64(0.7, 0.4), c64(-1.2, 2.0)] {
            let sp = SpectralPoint::from_kappa(kap);
            let mu = (1.0 + kap * kap).sqrt();
            let xs = [-0.5, 0.25, 1.0];
            let (f1, f2) = fundamental_pair(&prob, &sp, &xs).unwrap();
            for (i, &x) in xs.iter().enumerate() {
                let want1 = (mu * (x + 1.0)).cosh();
                let want2 = (mu * (x + 1.0)).sinh() / mu;
                assert!(rel_err(f1.value(i), want1) < 1e-10);
                assert!(rel_err(f2.value(i), want2) < 1e-10);
            }
        }
    }

    #[test]
    fn trace_reconstruction_invariant() {
        let prob = square_barrier_problem();
        let sp = SpectralPoint::from_kappa(c64(-0.7, -1.1));
        let xs = [-1.2, 0.0, 1.3];
        let (p, _) = jost_solutions(&prob, &sp, &xs).unwrap();
        for i in 0..xs.len() {
            let y = p.vals[i].0 * p.exps[i].exp();
            assert_eq!(y, p.value(i));
        }
        assert_eq!(p.side, TraceSide::Plus);
    }

    #[test]
    fn sheet_tags() {
        assert_eq!(SpectralPoint::from_kappa(c64(-1.0, 1.0)).sheet, SheetTag::First);
        assert_eq!(SpectralPoint::from_kappa(c64(2.0, -1.0)).sheet, SheetTag::Physical);
        assert_eq!(SpectralPoint::from_kappa(c64(0.0, 3.0)).sheet, SheetTag::Boundary);
        let sp = SpectralPoint::from_kappa(c64(0.3, -0.4));
        assert!((sp.p - C64::i() * sp.kappa * sp.kappa).norm() < 1e-16);
    }

    #[test]
    fn wkb_refuses_small_kappa() {
        let prob = square_barrier_problem();
        let sp = SpectralPoint::from_kappa(c64(3.0, 0.0));
        assert!(wkb_jost(&prob, &sp, 0.0, JostSide::Plus).is_err());
    }

    #[test]
    fn wkb_matches_shooting_at_moderate_kappa() {
        // cross-check at |kappa| = 50 where both methods work
        let prob = square_barrier_problem();
        let kap = c64(50.0, 0.0);
        let sp = SpectralPoint::from_kappa(kap);
        let xs = [-0.4, 0.2, 0.7];
        let (p, m) = jost_solutions(&prob, &sp, &xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            let wp = wkb_jost(&prob, &sp, x, JostSide::Plus).unwrap();
            let wm = wkb_jost(&prob, &sp, x, JostSide::Minus).unwrap();
            assert!(rel_err(p.value(i), wp) < 1e-3, "plus at {x}: {:e}", rel_err(p.value(i), wp));
            assert!(rel_err(m.value(i), wm) < 1e-3, "minus at {x}");
        }
        // the correction integral for the barrier is just the length
        let v = wkb_jost(&prob, &sp, 0.3, JostSide::Minus).unwrap();
        let want = (kap * 0.3).exp() * (1.0 + (0.3 + 1.0) / (2.0 * kap));
        assert!(rel_err(v, want) < 1e-14);
    }
}
