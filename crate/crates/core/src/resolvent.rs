//! The Laplace-transformed wave function psihat(x, p) assembled from Jost
//! solutions, and its Laurent/Taylor data in kappa at the branch point.
//!
//! `-i W psihat = y_-(x) int_M^x y_+ psi0 - y_+(x) int_{-M}^x y_- psi0`.
//! All products are formed with explicit exponent bookkeeping so that only
//! combined exponents `kappa (x - s)` are ever exponentiated.

use crate::problem::Problem;
use crate::quad::{gauss_legendre, laurent_coeff};
use crate::shooting::{jost_solutions, SpectralPoint};
use crate::{c64, C64, Error, Result};

/// psihat at one spectral point.
#[derive(Debug, Clone, Copy)]
pub struct ResolventValue {
    pub x: f64,
    pub kappa: SpectralPoint,
    pub value: C64,
    pub wronskian: C64,
}

/// Laurent data of psihat(x, .) at kappa = 0: an at-most-simple pole part and
/// the regular Taylor coefficients. `pole_minus2` is retained as a diagnostic
/// and must vanish for a well-posed problem.
#[derive(Debug, Clone)]
pub struct KappaTaylor {
    pub x: f64,
    pub radius: f64,
    /// a_{-2}: must be ~0 (the kappa-pole at the origin is at most simple)
    pub pole_minus2: C64,
    /// a_{-1}: nonzero exactly in the zero-energy-resonance case
    pub pole_minus1: C64,
    /// a_0 .. a_J
    pub coeffs: Vec<C64>,
}

impl KappaTaylor {
    /// Reconstruct psihat from the stored Laurent data.
    pub fn eval(&self, kappa: C64) -> C64 {
        let mut acc = self.pole_minus2 / (kappa * kappa) + self.pole_minus1 / kappa;
        let mut pw = c64(1.0, 0.0);
        for a in &self.coeffs {
            acc += a * pw;
            pw *= kappa;
        }
        acc
    }
}

/// Evaluate psihat(x, p = i kappa^2) by quadrature of the Jost-solution
/// integrals over the smooth pieces of psi0 (Gauss-Legendre, 32 nodes/piece).
pub fn resolvent_at(prob: &Problem, sp: &SpectralPoint, x: f64) -> Result<ResolventValue> {
    if sp.kappa.norm() == 0.0 {
        return Err(Error::KappaZero);
    }
    let kappa = sp.kappa;
    let (nodes, weights) = gauss_legendre(32);

    // quadrature nodes per smooth piece of psi0, split additionally at x
    let pieces = prob.initial().pieces();
    let (ia, ib) = prob.initial().support();
    let mut cuts: Vec<f64> = pieces;
    if x > ia && x < ib {
        cuts.push(x);
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    struct Panel {
        lo: f64,
        hi: f64,
        idx: usize, // first sample index in xs
    }
    let mut xs: Vec<f64> = Vec::new();
    let mut panels = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo < 1e-14 {
            continue;
        }
        panels.push(Panel { lo, hi, idx: xs.len() });
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for n in &nodes {
            xs.push(mid + half * n);
        }
    }
    xs.push(x);
    let x_idx = xs.len() - 1;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).unwrap());
    let sorted_xs: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
    let mut rank = vec![0usize; xs.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }

    let (plus, minus) = jost_solutions(prob, sp, &sorted_xs)?;
    let w_at = |i: usize| plus.vals[i].0 * minus.vals[i].1 - minus.vals[i].0 * plus.vals[i].1;
    let wr = w_at(rank[x_idx]);
    let w_scale = 1.0 + 2.0 * kappa.norm();
    if wr.norm() < 1e-13 * w_scale {
        return Err(Error::PoleProximity { w_abs: wr.norm(), nearest: sp.p });
    }

    // J_plus = int_M^x y_+ psi0 ds (zero for x >= ib);
    // J_minus = int_{-M}^x y_- psi0 ds (zero for x <= ia)
    // term_plus = y_-(x) J_plus, term_minus = y_+(x) J_minus, psihat = i (term_plus - term_minus)/W
    let vx_plus = plus.vals[rank[x_idx]].0;
    let vx_minus = minus.vals[rank[x_idx]].0;
    let mut term_plus = c64(0.0, 0.0);
    let mut term_minus = c64(0.0, 0.0);
    for p in &panels {
        let half = 0.5 * (p.hi - p.lo);
        for (j, w) in weights.iter().enumerate() {
            let i = p.idx + j;
            let s = xs[i];
            let psi0 = prob.eval_initial(s, 0);
            if psi0.norm() == 0.0 {
                continue;
            }
            let r = rank[i];
            if s >= x {
                // contributes to J_plus: int_M^x = -int_{x}^{M}
                term_plus -= vx_minus * plus.vals[r].0 * psi0 * (kappa * (x - s)).exp() * (w * half);
            } else {
                term_minus += vx_plus * minus.vals[r].0 * psi0 * (kappa * (s - x)).exp() * (w * half);
            }
        }
    }
    let value = C64::i() * (term_plus - term_minus) / wr;
    Ok(ResolventValue { x, kappa: *sp, value, wronskian: wr })
}

/// Laurent coefficients of psihat(x, .) in kappa on a pole-free circle of
/// radius `r` (halved until pole-free), with a node-doubling convergence
/// check. J <= 40.
pub fn kappa_taylor(prob: &Problem, x: f64, r: f64, j_max: usize) -> Result<KappaTaylor> {
    if j_max > 40 {
        return Err(Error::Precondition(format!("J = {j_max} exceeds 40")));
    }
    fn sample_circle_vals(
        prob: &Problem,
        x: f64,
        radius: f64,
        n: usize,
    ) -> Result<(Vec<C64>, f64, f64)> {
        let mut vals = Vec::with_capacity(n);
        let mut wmin = f64::INFINITY;
        let mut wmax = 0.0f64;
        for m in 0..n {
            let th = std::f64::consts::TAU * m as f64 / n as f64;
            let sp = SpectralPoint::from_kappa(C64::from_polar(radius, th));
            let rv = match resolvent_at(prob, &sp, x) {
                Ok(v) => v,
                Err(Error::PoleProximity { .. }) => return Err(Error::PoleInsideCircle { radius }),
                Err(e) => return Err(e),
            };
            wmin = wmin.min(rv.wronskian.norm());
            wmax = wmax.max(rv.wronskian.norm());
            vals.push(rv.value);
        }
        Ok((vals, wmin, wmax))
    }

    let mut radius = r;
    'radius: for _ in 0..7 {
        let n = 256usize.max(8 * j_max);
        let (vals, wmin, wmax) = match sample_circle_vals(prob, x, radius, n) {
            Ok(v) => v,
            Err(Error::PoleInsideCircle { .. }) => {
                radius *= 0.5;
                continue 'radius;
            }
            Err(e) => return Err(e),
        };
        if wmin < 1e-3 * wmax {
            radius *= 0.5;
            continue 'radius;
        }
        let (vals2, _, _) = match sample_circle_vals(prob, x, radius, 2 * n) {
            Ok(v) => v,
            Err(Error::PoleInsideCircle { .. }) => {
                radius *= 0.5;
                continue 'radius;
            }
            Err(e) => return Err(e),
        };
        let co = |vals: &[C64], j: i32| laurent_coeff(vals, radius, j);
        let mut coeffs = Vec::with_capacity(j_max + 1);
        // doubling check: in reconstruction units a_j r^j (spectral part),
        // plus relative agreement of the coefficients that carry weight
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for j in -2..=(j_max as i32) {
            scale = scale.max(co(&vals, j).norm() * radius.powi(j));
        }
        for j in -2..=(j_max as i32) {
            let a = co(&vals, j);
            let b = co(&vals2, j);
            let delta = (a - b).norm();
            worst = worst.max(delta * radius.powi(j) / scale);
            if a.norm() * radius.powi(j) > 1e-2 * scale {
                worst = worst.max(delta / a.norm());
            }
        }
        if worst > 1e-10 {
            return Err(Error::CircleNotConverged { rel: worst });
        }
        for j in 0..=(j_max as i32) {
            coeffs.push(co(&vals2, j));
        }
        return Ok(KappaTaylor {
            x,
            radius,
            pole_minus2: co(&vals2, -2),
            pole_minus1: co(&vals2, -1),
            coeffs,
        });
    }
    Err(Error::PoleInsideCircle { radius })
}

/// Threshold (zero-energy) resonance test: w0 = lim W(kappa -> 0) from the
/// kappa-Taylor of W on a small circle; flagged when w0 vanishes against the
/// linear coefficient.
pub fn zero_energy_resonance_test(prob: &Problem) -> Result<(bool, C64)> {
    let r = 0.05;
    let n = 128;
    let mut vals = Vec::with_capacity(n);
    for m in 0..n {
        let th = std::f64::consts::TAU * m as f64 / n as f64;
        let sp = SpectralPoint::from_kappa(C64::from_polar(r, th));
        vals.push(crate::shooting::wronskian(prob, &sp)?);
    }
    let w0 = laurent_coeff(&vals, r, 0);
    let w1 = laurent_coeff(&vals, r, 1);
    let flag = w0.norm() < 1e-8 * w1.norm() * r;
    Ok((flag, w0))
}
