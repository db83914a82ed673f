//! The two halves of the decomposition: the Gamow-vector exponential sum and
//! the Borel-summed dispersive series with least-term truncation, plus the
//! finite-accuracy evaluator with exponential-integral pole corrections.
//!
//! Series bookkeeping: with `a_j` the kappa-Laurent coefficients of psihat at
//! fixed x, the wrap-around (branch-jump) integral gives
//!
//! `psi_disp(t) ~ sum_{j odd >= -1} c_j t^{-(j/2+1)}`,
//! `c_j = (i/pi) Gamma(j/2+1) e^{i j pi/4} a_j`.
//!
//! These map constants were locked against the branch-cut quadrature oracle
//! and the exact free evolution before being frozen here. Pole corrections
//! subtract `A_z I(u_z, t)` per Wronskian zero, `u_z = +-e^{-i pi/4} kappa_z`
//! (upper half-plane), `A_z = -e^{-i pi/4} Res_kappa[psihat] / (2 pi i)`,
//! which extends the Borel-regular disk past that singularity.

use crate::oracle::{branch_cut_integral, bromwich_invert, ContourSpec};
use crate::problem::Problem;
use crate::quad::gl32;
use crate::resolvent::kappa_taylor;
use crate::shooting::{jost_solutions, SpectralPoint};
use crate::spectrum::{
    bound_state_eval, bound_states, find_resonances, BoundState, Resonance, ResonanceSheet,
    SearchBound,
};
use crate::{c64, C64, Error, Result};

/// Gamma(n2/2) for positive half-integer arguments.
pub(crate) fn gamma_half(n2: i32) -> f64 {
    assert!(n2 >= 1);
    let mut z = n2 as f64 / 2.0;
    let mut acc = 1.0;
    while z > 1.0 + 1e-9 {
        z -= 1.0;
        acc *= z;
    }
    if (z - 0.5).abs() < 1e-9 {
        acc * std::f64::consts::PI.sqrt()
    } else {
        acc // Gamma(1) = 1
    }
}

/// A resonance with its Gamow vector and expansion coefficient.
#[derive(Debug, Clone)]
pub struct GamowMode {
    pub resonance: Resonance,
    /// decay rate gamma = -p, Re gamma > 0 on the first sheet
    pub gamma: C64,
    /// proportionality y_- = c y_+ at the zero
    pub c_dep: C64,
    /// overlap integral int y_+ psi0
    pub overlap: C64,
    /// g so that Res_p psihat(x, .) = g * Gamma(x) with Gamma = y_+(.; kappa)
    pub g: C64,
}

/// Build the mode data at a Wronskian zero (any sheet). The public
/// [`gamow_mode`] additionally enforces the first-sheet precondition.
pub fn mode_at_zero(prob: &Problem, res: &Resonance) -> Result<GamowMode> {
    let kappa = res.kappa.kappa;
    let sp = res.kappa;
    // c = y_-(-1)/y_+(-1) = e^{-2 kappa} / v_+(-1)
    let (ia, ib) = prob.initial().support();
    let mut xs: Vec<f64> = vec![-1.0];
    let pieces = prob.initial().pieces();
    let (nodes, weights) = gl32();
    let mut panels = Vec::new();
    for w in pieces.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo < 1e-14 {
            continue;
        }
        panels.push((lo, hi, xs.len()));
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for n in nodes {
            xs.push(mid + half * n);
        }
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
    let mut rank = vec![0usize; xs.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let (plus, _) = jost_solutions(prob, &sp, &sorted)?;
    let v_m1 = plus.vals[rank[0]].0;
    if v_m1.norm() < 1e-280 {
        return Err(Error::BadNormalization);
    }
    let c_dep = (-2.0 * kappa).exp() / v_m1;
    // overlap int y_+ psi0 = sum w v_+(s) psi0(s) e^{-kappa s}
    let mut overlap = c64(0.0, 0.0);
    for (lo, hi, idx) in panels {
        let half = 0.5 * (hi - lo);
        for (j, wt) in weights.iter().enumerate() {
            let s = xs[idx + j];
            let psi0 = prob.eval_initial(s, 0);
            if psi0.norm() == 0.0 {
                continue;
            }
            overlap += plus.vals[rank[idx + j]].0 * psi0 * (-kappa * s).exp() * (wt * half);
        }
    }
    let _ = (ia, ib);
    // g = -i * res(1/W_p) * c * overlap
    let g = -C64::i() * res.residue_inv_w * c_dep * overlap;
    Ok(GamowMode { resonance: res.clone(), gamma: res.gamma, c_dep, overlap, g })
}

/// Gamow mode of a first-sheet resonance, normalized as Gamma_k = y_+(.;kappa_k)
/// (so Gamma_k(1) = e^{-kappa_k} and Gamma_k = e^{-kappa_k x} for x > 1).
pub fn gamow_mode(prob: &Problem, res: &Resonance) -> Result<GamowMode> {
    if res.sheet != ResonanceSheet::First {
        return Err(Error::NotFirstSheet { re_p: res.p.re });
    }
    mode_at_zero(prob, res)
}

/// The Gamow vector Gamma(x) = y_+(x; kappa) of a mode.
pub fn gamow_vector(prob: &Problem, mode: &GamowMode, x: f64) -> Result<C64> {
    let (plus, _) = jost_solutions(prob, &mode.resonance.kappa, &[x])?;
    Ok(plus.vals[0].0 * plus.exps[0].exp())
}

/// Residue of psihat(x, .) at the mode's pole, in the p variable:
/// equals g * Gamma(x).
pub fn mode_residue_p(prob: &Problem, mode: &GamowMode, x: f64) -> Result<C64> {
    Ok(mode.g * gamow_vector(prob, mode, x)?)
}

/// Independent residue oracle: (1/2 pi i) contour integral of psihat around
/// the pole, taken on a kappa-circle (dp = 2 i kappa dkappa).
pub fn residue_p_contour(prob: &Problem, kappa_zero: C64, x: f64, r: f64) -> Result<C64> {
    let n = 64;
    let mut acc = c64(0.0, 0.0);
    for m in 0..n {
        let th = std::f64::consts::TAU * m as f64 / n as f64;
        let kap = kappa_zero + C64::from_polar(r, th);
        let f = crate::resolvent::resolvent_at(prob, &SpectralPoint::from_kappa(kap), x)?.value;
        acc += f * (2.0 * C64::i() * kap) * C64::from_polar(r, th);
    }
    Ok(acc / n as f64)
}

/// Spectral projection coefficient of a bound state: b_k = <psi_k, psi0>.
pub fn bound_coefficient(prob: &Problem, bs: &BoundState) -> Result<C64> {
    let (nodes, weights) = gl32();
    let mut xs = Vec::new();
    let mut wts = Vec::new();
    for w in prob.initial().pieces().windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo < 1e-14 {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (n, wt) in nodes.iter().zip(weights) {
            xs.push(mid + half * n);
            wts.push(wt * half);
        }
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
    let vals = crate::spectrum::bound_state_eval_many(prob, bs, &sorted)?;
    let mut acc = c64(0.0, 0.0);
    for (r, &i) in order.iter().enumerate() {
        acc += prob.eval_initial(xs[i], 0) * vals[r] * wts[i];
    }
    Ok(acc)
}

/// Coefficients of the t^{-1/2} asymptotic series of the dispersive part at
/// fixed x. `coeffs[i]` multiplies `t^{-(m/2+1)}` with `m = i - 1` (so index
/// 0 holds the t^{-1/2} term, present only with a zero-energy resonance).
#[derive(Debug, Clone)]
pub struct DispersiveSeries {
    pub x: f64,
    pub coeffs: Vec<C64>,
    /// nearest Borel-plane singularity |p|; infinite when W has no zeros
    pub rho: f64,
    /// true when the leading power is t^{-1/2} (zero-energy resonance)
    pub leading_t_half: bool,
}

impl DispersiveSeries {
    /// Magnitude of term i at time t.
    fn term(&self, i: usize, t: f64) -> C64 {
        let m = i as i32 - 1;
        self.coeffs[i] * t.powf(-(m as f64 / 2.0 + 1.0))
    }
}

/// Watson map: kappa-Laurent data -> dispersive series coefficients.
pub(crate) fn watson_map(kt: &crate::resolvent::KappaTaylor, rho: f64) -> DispersiveSeries {
    let jmax = kt.coeffs.len() as i32 - 1;
    let mut coeffs = Vec::with_capacity((jmax + 2) as usize);
    for m in -1..=jmax {
        let a = if m == -1 {
            kt.pole_minus1
        } else {
            kt.coeffs[m as usize]
        };
        let c = if m % 2 == 0 {
            c64(0.0, 0.0) // even powers vanish in the pure branch-jump series
        } else {
            let phase = C64::from_polar(1.0, m as f64 * std::f64::consts::FRAC_PI_4);
            C64::i() / std::f64::consts::PI * gamma_half(m + 2) * phase * a
        };
        coeffs.push(c);
    }
    DispersiveSeries {
        x: kt.x,
        coeffs,
        rho,
        leading_t_half: kt.pole_minus1.norm() > 1e-10,
    }
}

/// Dispersive series at x with J kappa-Taylor coefficients. The nearest
/// Borel singularity is taken from the first resonance pair when one exists.
pub fn dispersive_series(prob: &Problem, x: f64, j_max: usize) -> Result<DispersiveSeries> {
    let kt = kappa_taylor(prob, x, 0.2, j_max)?;
    let rho = match find_resonances(prob, SearchBound::KMax(2))?.resonances.first() {
        Some(r) => r.p.norm(),
        None => f64::INFINITY,
    };
    Ok(watson_map(&kt, rho))
}

/// Result of least-term (optimal) truncation at a given t.
#[derive(Debug, Clone, Copy)]
pub struct Truncation {
    pub value: C64,
    pub error_estimate: f64,
    /// index of the least term in the coefficient lattice
    pub n_star: usize,
    /// the minimum was not bracketed: all available terms still decreasing
    pub saturated: bool,
    /// coefficient count needed to reach the least term at this t
    pub required_terms: usize,
}

/// Sum the series to its least term; the error estimate is twice the least
/// term's magnitude (~ e^{-rho t} once the least term is reachable).
pub fn optimal_truncate(series: &DispersiveSeries, t: f64) -> Result<Truncation> {
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("t = {t} must be positive")));
    }
    let mut best: Option<(usize, f64)> = None;
    let mut last_nonzero = None;
    for i in 0..series.coeffs.len() {
        if series.coeffs[i].norm() < 1e-280 {
            continue;
        }
        let mag = series.term(i, t).norm();
        last_nonzero = Some(i);
        match best {
            Some((_, m)) if m <= mag => {}
            _ => best = Some((i, mag)),
        }
    }
    let (n_star, least) = best.ok_or_else(|| Error::Precondition("series has no nonzero terms".into()))?;
    let saturated = last_nonzero == Some(n_star);
    let value = (0..=n_star).fold(c64(0.0, 0.0), |acc, i| acc + series.term(i, t));
    let required_terms = if series.rho.is_finite() {
        (2.0 * series.rho * t).ceil() as usize + 6
    } else {
        series.coeffs.len()
    };
    Ok(Truncation {
        value,
        error_estimate: 2.0 * least,
        n_star,
        saturated,
        required_terms,
    })
}

/// Evaluation mode of [`evaluate_wavefunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// bound sum + full Gamow sum + least-term dispersive value
    Theorem1,
    /// bound sum + Gamow exponentials + pole-term corrections + corrected
    /// least-term series, for poles with |gamma| <= M on both sheets
    Approx2,
    /// reference value from the Bromwich oracle
    OracleCross,
}

/// Per-point evaluation record; `value` is exactly the sum of the breakdown.
#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub x: f64,
    pub t: f64,
    pub mode: EvalMode,
    pub value: C64,
    pub bound_sum: C64,
    pub gamow_sum: C64,
    /// (seed index k, |g_k Gamma_k(x) e^{-gamma_k t}|)
    pub gamow_terms: Vec<(usize, f64)>,
    pub dispersive_value: C64,
    pub e_corrections: C64,
    pub error_estimate: f64,
    pub n_star: usize,
    pub gamow_terms_used: usize,
}

/// Cached evaluator: resonances, bound states and per-x series are computed
/// once and shared across (x, t) grid points.
pub struct WaveEvaluator<'a> {
    prob: &'a Problem,
    pub resonances: Vec<Resonance>,
    pub bounds: Vec<BoundState>,
    bound_coeffs: Vec<C64>,
    modes: Vec<GamowMode>,
    series_cache: std::cell::RefCell<Vec<(u64, std::rc::Rc<DispersiveSeries>)>>,
    j_max: usize,
}

impl<'a> WaveEvaluator<'a> {
    pub fn new(prob: &'a Problem, k_max: usize) -> Result<Self> {
        let search = find_resonances(prob, SearchBound::KMax(k_max))?;
        let bounds = bound_states(prob)?;
        let bound_coeffs = bounds
            .iter()
            .map(|b| bound_coefficient(prob, b))
            .collect::<Result<Vec<_>>>()?;
        let modes = search
            .resonances
            .iter()
            .map(|r| mode_at_zero(prob, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(WaveEvaluator {
            prob,
            resonances: search.resonances,
            bounds,
            bound_coeffs,
            modes,
            series_cache: std::cell::RefCell::new(Vec::new()),
            j_max: 40,
        })
    }

    pub fn problem(&self) -> &Problem {
        self.prob
    }

    /// min |p| over all Wronskian zeros (infinite for the free particle).
    pub fn rho(&self) -> f64 {
        self.resonances.iter().map(|r| r.p.norm()).fold(f64::INFINITY, f64::min)
    }

    fn series_at(&self, x: f64) -> Result<std::rc::Rc<DispersiveSeries>> {
        let key = x.to_bits();
        if let Some((_, s)) = self.series_cache.borrow().iter().find(|(k, _)| *k == key) {
            return Ok(s.clone());
        }
        let kt = kappa_taylor(self.prob, x, 0.2, self.j_max)?;
        let s = std::rc::Rc::new(watson_map(&kt, self.rho()));
        self.series_cache.borrow_mut().push((key, s.clone()));
        Ok(s)
    }

    fn bound_part(&self, x: f64, t: f64) -> Result<C64> {
        let mut acc = c64(0.0, 0.0);
        for (b, coef) in self.bounds.iter().zip(&self.bound_coeffs) {
            // e^{-i E t} = e^{p t} with p = -iE on the positive imaginary axis
            let psi = bound_state_eval(self.prob, b, x)?;
            acc += coef * psi * (b.p * t).exp();
        }
        Ok(acc)
    }

    pub fn evaluate(&self, x: f64, t: f64, mode: EvalMode, m_cut: f64) -> Result<EvaluationReport> {
        if !(t > 0.0) {
            return Err(Error::Precondition(format!("t = {t} must be positive")));
        }
        match mode {
            EvalMode::OracleCross => {
                let spec = ContourSpec::default_for(t);
                let (value, tail) = bromwich_invert(self.prob, x, t, &spec)?;
                Ok(EvaluationReport {
                    x,
                    t,
                    mode,
                    value,
                    bound_sum: c64(0.0, 0.0),
                    gamow_sum: c64(0.0, 0.0),
                    gamow_terms: Vec::new(),
                    dispersive_value: value,
                    e_corrections: c64(0.0, 0.0),
                    error_estimate: tail,
                    n_star: 0,
                    gamow_terms_used: 0,
                })
            }
            EvalMode::Theorem1 => self.evaluate_theorem1(x, t),
            EvalMode::Approx2 => self.evaluate_approx2(x, t, m_cut),
        }
    }

    fn evaluate_theorem1(&self, x: f64, t: f64) -> Result<EvaluationReport> {
        let bound_sum = self.bound_part(x, t)?;
        let series = self.series_at(x)?;

        // dispersive value: least-term truncation, or direct branch-cut
        // quadrature while the least term has not yet formed
        let (dispersive_value, error_estimate, n_star) = if series.rho.is_finite() && t < 2.0 / series.rho {
            let first: Vec<Resonance> = self
                .resonances
                .iter()
                .filter(|r| r.sheet == ResonanceSheet::First)
                .cloned()
                .collect();
            let v = branch_cut_integral(self.prob, x, t, &first)?;
            (v, 1e-9, 0)
        } else {
            let tr = optimal_truncate(&series, t)?;
            (tr.value, tr.error_estimate, tr.n_star)
        };

        // Gamow sum over first-sheet modes, ascending Re gamma, with the
        // balanced-budget stop rule
        let mut gamow_sum = c64(0.0, 0.0);
        let mut gamow_terms = Vec::new();
        let mut below = 0usize;
        let mut used = 0usize;
        let mut prev_mag = f64::INFINITY;
        let mut increase_streak = 0usize;
        for mode in self.modes.iter().filter(|m| m.resonance.sheet == ResonanceSheet::First) {
            let term = mode_residue_p(self.prob, mode, x)? * (mode.resonance.p * t).exp();
            let mag = term.norm();
            gamow_sum += term;
            gamow_terms.push((mode.resonance.seed_index, mag));
            used += 1;
            if mag > prev_mag && used > 3 {
                increase_streak += 1;
                if increase_streak >= 3 {
                    return Err(Error::GamowTailNotDecreasing);
                }
            } else {
                increase_streak = 0;
            }
            prev_mag = mag;
            if mag < 1e-3 * error_estimate.max(1e-300) {
                below += 1;
                if below >= 3 {
                    break;
                }
            } else {
                below = 0;
            }
        }
        let value = bound_sum + gamow_sum + dispersive_value;
        Ok(EvaluationReport {
            x,
            t,
            mode: EvalMode::Theorem1,
            value,
            bound_sum,
            gamow_sum,
            gamow_terms,
            dispersive_value,
            e_corrections: c64(0.0, 0.0),
            error_estimate,
            n_star,
            gamow_terms_used: used,
        })
    }

    fn evaluate_approx2(&self, x: f64, t: f64, m_cut: f64) -> Result<EvaluationReport> {
        if !(m_cut > 0.0) {
            return Err(Error::Precondition("approx2 mode needs M > 0".into()));
        }
        let bound_sum = self.bound_part(x, t)?;
        let series = self.series_at(x)?;

        // pole set: both sheets with |gamma| <= M
        let selected: Vec<&GamowMode> = self
            .modes
            .iter()
            .filter(|m| m.resonance.gamma.norm() <= m_cut)
            .collect();

        // exponentials: first sheet only
        let mut gamow_sum = c64(0.0, 0.0);
        let mut gamow_terms = Vec::new();
        for mode in selected.iter().filter(|m| m.resonance.sheet == ResonanceSheet::First) {
            let term = mode_residue_p(self.prob, mode, x)? * (mode.resonance.p * t).exp();
            gamow_terms.push((mode.resonance.seed_index, term.norm()));
            gamow_sum += term;
        }

        // pole-term corrections A_z I(u_z, t) and the matching series surgery
        let mut e_corrections = c64(0.0, 0.0);
        let mut corrected = series.coeffs.clone();
        let phase = C64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
        for mode in &selected {
            let kappa_z = mode.resonance.kappa.kappa;
            let mut u = kappa_z * phase;
            if u.im < 0.0 {
                u = -u;
            }
            let res_kappa = mode_residue_p(self.prob, mode, x)? / (2.0 * C64::i() * kappa_z);
            let a_z = -phase * res_kappa / (2.0 * std::f64::consts::PI * C64::i());
            let input = crate::specfun::PoleTermInput::new(u, t)?;
            e_corrections += a_z * crate::specfun::pole_term_e(&input)?;
            // I(u,t) ~ -sum_m Gamma(m/2+1) t^{-(m/2+1)} / u^{m+1}
            let mut upow = u;
            for (i, c) in corrected.iter_mut().enumerate().skip(1) {
                let m = i as i32 - 1;
                *c += a_z * gamma_half(m + 2) / upow;
                upow *= u;
            }
        }
        let corrected_series = DispersiveSeries {
            x,
            coeffs: corrected,
            rho: self
                .resonances
                .iter()
                .filter(|r| r.gamma.norm() > m_cut)
                .map(|r| r.p.norm())
                .fold(f64::INFINITY, f64::min),
            leading_t_half: series.leading_t_half,
        };
        let tr = optimal_truncate(&corrected_series, t)?;
        let value = bound_sum + gamow_sum + e_corrections + tr.value;
        Ok(EvaluationReport {
            x,
            t,
            mode: EvalMode::Approx2,
            value,
            bound_sum,
            gamow_sum,
            gamow_terms_used: gamow_terms.len(),
            gamow_terms,
            dispersive_value: tr.value,
            e_corrections,
            error_estimate: tr.error_estimate,
            n_star: tr.n_star,
        })
    }
}

/// One-shot evaluation (builds a fresh evaluator; grids should use
/// [`WaveEvaluator`] directly).
pub fn evaluate_wavefunction(
    prob: &Problem,
    x: f64,
    t: f64,
    mode: EvalMode,
    m_cut: f64,
) -> Result<EvaluationReport> {
    let ev = WaveEvaluator::new(prob, 12)?;
    ev.evaluate(x, t, mode, m_cut)
}
