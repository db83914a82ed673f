//! Independent reference computations of psi(x,t): numerical Bromwich
//! inversion on a vertical line, the wrap-around branch-cut route, a
//! Crank-Nicolson time stepper, and the exact free propagator.
//!
//! The vertical-line quadrature substitutes y = +-sigma^2 so the integrand is
//! smooth through p = a0, panels Gauss-Legendre nodes against the e^{iyt}
//! oscillation, truncates the upper half-line early using the e^{-sqrt(y) x}
//! decay of the resolvent beyond the supports, and corrects both tails with
//! a first-order integration-by-parts term.

use crate::problem::Problem;
use crate::quad::{adaptive, gauss_legendre};
use crate::resolvent::resolvent_at;
use crate::shooting::SpectralPoint;
use crate::expansion::bound_coefficient;
use crate::spectrum::{bound_states, Resonance};
use crate::{c64, C64, Error, Result};

/// Inversion contour description.
#[derive(Debug, Clone)]
pub struct ContourSpec {
    pub kind: ContourKind,
    /// requested bound on the discarded tail
    pub tol: f64,
    /// truncation of the sigma = sqrt(|Im p|) variable
    pub sigma_max: f64,
}

#[derive(Debug, Clone)]
pub enum ContourKind {
    /// vertical line Re p = a0 (default a0 = max(1, 2/t))
    Vertical { abscissa: Option<f64> },
    /// wrap-around route: branch-cut integral plus pole and bound-state terms
    Wraparound,
}

impl ContourSpec {
    pub fn default_for(_t: f64) -> Self {
        ContourSpec { kind: ContourKind::Vertical { abscissa: None }, tol: 1e-9, sigma_max: 80.0 }
    }

    /// Vertical contour with an explicit abscissa (e.g. a0 ~ 6/t keeps the
    /// e^{a0 t} roundoff amplification bounded at large t).
    pub fn vertical_with_abscissa(a0: f64) -> Self {
        ContourSpec { kind: ContourKind::Vertical { abscissa: Some(a0) }, tol: 1e-9, sigma_max: 80.0 }
    }
}

const GL24_N: usize = 24;

fn gl24() -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    CACHE.get_or_init(|| gauss_legendre(GL24_N))
}

/// psi(x, t) by numerical inverse Laplace transform. Returns the value and
/// the estimated discarded-tail magnitude.
pub fn bromwich_invert(prob: &Problem, x: f64, t: f64, spec: &ContourSpec) -> Result<(C64, f64)> {
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("t = {t} must be positive")));
    }
    match &spec.kind {
        ContourKind::Wraparound => {
            let search = crate::spectrum::find_resonances(prob, crate::spectrum::SearchBound::KMax(12))?;
            let first: Vec<Resonance> = search
                .resonances
                .into_iter()
                .filter(|r| r.sheet == crate::spectrum::ResonanceSheet::First)
                .collect();
            let cut = branch_cut_integral(prob, x, t, &first)?;
            let mut total = cut;
            let ev_modes: Vec<_> = first
                .iter()
                .map(|r| crate::expansion::mode_at_zero(prob, r))
                .collect::<Result<Vec<_>>>()?;
            for m in &ev_modes {
                total += crate::expansion::mode_residue_p(prob, m, x)? * (m.resonance.p * t).exp();
            }
            for b in bound_states(prob)? {
                let coef = bound_coefficient(prob, &b)?;
                total += coef * crate::spectrum::bound_state_eval(prob, &b, x)? * (b.p * t).exp();
            }
            Ok((total, 1e-10))
        }
        ContourKind::Vertical { abscissa } => {
            let a0 = abscissa.unwrap_or_else(|| 1.0f64.max(2.0 / t));
            vertical_line(prob, x, t, a0, spec)
        }
    }
}

/// The free resolvent `-(i/(2 kappa)) int e^{-kappa |x-s|} psi0(s) ds`,
/// subtracted from psihat on the vertical line so the remainder carries the
/// fast `|p|^{-3/2} e^{-Re kappa (x-1)}` decay of the potential-scattering
/// part. Valid for Re kappa > 0.
fn free_resolvent(prob: &Problem, kappa: C64, x: f64) -> C64 {
    let (nodes, weights) = crate::quad::gl32();
    let mut pieces = prob.initial().pieces();
    let (ia, ib) = prob.initial().support();
    if x > ia && x < ib {
        pieces.push(x);
        pieces.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let mut acc = c64(0.0, 0.0);
    for w in pieces.windows(2) {
        if w[1] - w[0] < 1e-14 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let half = 0.5 * (w[1] - w[0]);
        for (n, wt) in nodes.iter().zip(weights) {
            let s = mid + half * n;
            acc += prob.eval_initial(s, 0) * (-kappa * (x - s).abs()).exp() * (wt * half);
        }
    }
    -C64::i() / (2.0 * kappa) * acc
}

fn vertical_line(prob: &Problem, x: f64, t: f64, a0: f64, spec: &ContourSpec) -> Result<(C64, f64)> {
    // psi = psi_free + (1/2 pi i) int (psihat - psihat_free) e^{pt} dp; the
    // free part is inverted exactly by the kernel quadrature
    let psi_free = free_propagator_kernel(prob, x, t)?;
    let f = |p: C64| -> Result<C64> {
        let kap = (-C64::i() * p).sqrt();
        let v = resolvent_at(prob, &SpectralPoint::from_kappa(kap), x)?.value;
        Ok(v - free_resolvent(prob, kap, x))
    };
    // early truncation of the upper half-line where e^{-sqrt(y)(x-edge)}
    // kills the remainder; the lower half-line keeps the full range
    let edge = prob.initial().support().1.max(1.0);
    let sigma_up = if x - edge > 0.5 {
        (45.0 / (x - edge)).clamp(8.0, spec.sigma_max)
    } else {
        spec.sigma_max
    };
    let (nodes, weights) = gl24();
    let mut total = c64(0.0, 0.0);
    for (sgn, sig_end) in [(1.0f64, sigma_up), (-1.0, spec.sigma_max)] {
        let mut sig = 0.0f64;
        while sig < sig_end {
            // ~12 rad of e^{iyt} phase per 24-node panel
            let w = (12.0 / (2.0 * sig.max(1e-3) * t)).clamp(2e-3, 0.5);
            let hi = (sig + w).min(sig_end);
            let mid = 0.5 * (sig + hi);
            let half = 0.5 * (hi - sig);
            for (n, wt) in nodes.iter().zip(weights) {
                let s = mid + half * n;
                let p = c64(a0, sgn * s * s);
                total += f(p)? * (p * t).exp() * (2.0 * s) * (wt * half);
            }
            sig = hi;
        }
    }
    let p_up = c64(a0, sigma_up * sigma_up);
    let p_lo = c64(a0, -spec.sigma_max * spec.sigma_max);
    let f_up = f(p_up)?;
    let f_lo = f(p_lo)?;
    // second-order IBP tail corrections, worthwhile once e^{iyt} oscillates
    // inside the tail; otherwise bound the remainder by its unsigned integral
    let oscillatory = t * p_lo.im.abs() > 50.0;
    let mut bound;
    if oscillatory {
        let it = C64::i() * t;
        let dy = (0.001 * spec.sigma_max * spec.sigma_max).max(1.0);
        let f_up_p = f(c64(a0, p_up.im + dy))?;
        let f_up_m = f(c64(a0, p_up.im - dy))?;
        let f_lo_p = f(c64(a0, p_lo.im + dy))?;
        let f_lo_m = f(c64(a0, p_lo.im - dy))?;
        let fd_up = (f_up_p - f_up_m) / (2.0 * dy);
        let fd_lo = (f_lo_p - f_lo_m) / (2.0 * dy);
        let fdd_up = (f_up_p - 2.0 * f_up + f_up_m) / (dy * dy);
        let fdd_lo = (f_lo_p - 2.0 * f_lo + f_lo_m) / (dy * dy);
        // int_Y^inf f e^{iyt} dy = -(f + f'/(it)) e^{iYt}/(it) + O(f''/t^3)
        total += -(f_up + fd_up / it) * (p_up * t).exp() / it;
        total += (f_lo - fd_lo / it) * (p_lo * t).exp() / it;
        bound = (fdd_up.norm() + fdd_lo.norm()) / (t * t * t) * (a0 * t).exp()
            / std::f64::consts::TAU
            * 10.0;
    } else {
        // |f| ~ C y^{-3/2}: int_Y^inf |f| = 2|f(Y)| Y/sqrt(Y)
        bound = (f_up.norm() * p_up.im.abs().sqrt() + f_lo.norm() * p_lo.im.abs().sqrt())
            * 2.0
            * (a0 * t).exp()
            / std::f64::consts::TAU;
    }
    // roundoff floor of the e^{a0 t}-amplified accumulation
    bound = bound.max((a0 * t).exp() * 1e-15);
    if bound > spec.tol {
        return Err(Error::TailBound { bound, tol: spec.tol });
    }
    Ok((psi_free + total / std::f64::consts::TAU, bound))
}

/// Exact free evolution by kernel quadrature (any potential; only psi0 enters).
fn free_propagator_kernel(prob: &Problem, x: f64, t: f64) -> Result<C64> {
    let pref = C64::from_polar(
        1.0 / (2.0 * (std::f64::consts::PI * t).sqrt()),
        -std::f64::consts::FRAC_PI_4,
    );
    let mut acc = c64(0.0, 0.0);
    for w in prob.initial().pieces().windows(2) {
        if w[1] - w[0] < 1e-14 {
            continue;
        }
        acc += adaptive(
            |y| prob.eval_initial(y, 0) * C64::from_polar(1.0, (x - y) * (x - y) / (4.0 * t)),
            w[0],
            w[1],
            1e-14,
            1e-12,
            20_000,
        )?;
    }
    Ok(pref * acc)
}

/// The exact dispersive part: wrap-around jump integral
/// `(1/2 pi i) int_0^inf [psihat(-kappa_a) - psihat(kappa_a)] e^{-st} ds`
/// with `kappa_a = sqrt(s) e^{i pi/4}`, substituted s = sigma^2. The supplied
/// resonances are used to refuse evaluation when a Borel-plane pole sits
/// within 1e-3 of the integration ray.
pub fn branch_cut_integral(prob: &Problem, x: f64, t: f64, resonances: &[Resonance]) -> Result<C64> {
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("t = {t} must be positive")));
    }
    let phase = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    for r in resonances {
        let mut u = r.kappa.kappa * phase.conj();
        if u.im < 0.0 {
            u = -u;
        }
        if u.im.abs() < 1e-3 {
            return Err(Error::PoleNearCut { dist: u.im.abs(), p: r.p });
        }
    }
    let integrand = |sig: f64| -> Result<C64> {
        if sig < 1e-9 {
            return Ok(c64(0.0, 0.0));
        }
        let kap = phase * sig;
        let above = resolvent_at(prob, &SpectralPoint::from_kappa(kap), x)?.value;
        let below = resolvent_at(prob, &SpectralPoint::from_kappa(-kap), x)?.value;
        Ok((below - above) * (-sig * sig * t).exp() * 2.0 * sig / (2.0 * C64::i() * std::f64::consts::PI))
    };
    let hi = (48.0 / t).sqrt() + 2.0;
    // adaptive GK over a fallible integrand: capture the first error
    let err = std::cell::RefCell::new(None);
    let v = adaptive(
        |s| match integrand(s) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                c64(0.0, 0.0)
            }
        },
        0.0,
        hi,
        1e-12,
        1e-10,
        6000,
    )?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(v)
}

/// Exact free evolution `int K(x-y, t) psi0(y) dy` with the Schrodinger
/// kernel `K(u,t) = (4 pi i t)^{-1/2} e^{i u^2/(4t)}`, by adaptive quadrature
/// over the smooth pieces of psi0. The reference for V = 0 problems.
pub fn free_propagator(prob: &Problem, x: f64, t: f64) -> Result<C64> {
    if !(t > 0.0) {
        return Err(Error::Precondition("t must be positive".into()));
    }
    free_propagator_kernel(prob, x, t)
}

/// Uniform spatial grid for [`cn_propagate`]: interior points of [-L, L] with
/// Dirichlet walls at the ends.
#[derive(Debug, Clone, Copy)]
pub struct CnGrid {
    pub l: f64,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct CnResult {
    pub xs: Vec<f64>,
    /// achieved snapshot times (aligned to whole steps)
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<C64>>,
    pub norm_drift: f64,
}

impl CnResult {
    /// Linear interpolation of snapshot `k` at position x.
    pub fn sample(&self, k: usize, x: f64) -> C64 {
        let xs = &self.xs;
        if x <= xs[0] || x >= *xs.last().unwrap() {
            return c64(0.0, 0.0);
        }
        let dx = xs[1] - xs[0];
        let i = (((x - xs[0]) / dx).floor() as usize).min(xs.len() - 2);
        let w = (x - xs[i]) / dx;
        self.snapshots[k][i] * (1.0 - w) + self.snapshots[k][i + 1] * w
    }
}

/// Crank-Nicolson propagation with Dirichlet walls; unitary to round-off,
/// second order in dt and dx. The tridiagonal solve is pre-factored once.
pub fn cn_propagate(
    prob: &Problem,
    grid: &CnGrid,
    t_final: f64,
    dt: f64,
    snapshot_times: &[f64],
) -> Result<CnResult> {
    let l = grid.l;
    let n = grid.n;
    let dx = 2.0 * l / (n as f64);
    if dt > dx * dx * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("dt = {dt} exceeds dx^2 = {}", dx * dx)));
    }
    let needed = prob.initial().half_width() + 1.0 + 4.0 * t_final.sqrt() + 2.0;
    if l < needed {
        return Err(Error::Precondition(format!("L = {l} below the dispersion-safe size {needed:.2}")));
    }
    // interior nodes x_1 .. x_{n-1}
    let m = n - 1;
    let xs: Vec<f64> = (1..n).map(|i| -l + dx * i as f64).collect();
    let mut psi: Vec<C64> = xs
        .iter()
        .map(|&xv| {
            // half-value convention at jump points
            (prob.eval_initial(xv - 1e-12, 0) + prob.eval_initial(xv + 1e-12, 0)) / 2.0
        })
        .collect();

    let idt2 = C64::i() * dt / 2.0;
    let a_off = idt2 * (-1.0 / (dx * dx));
    let b_off = -a_off;
    let mut a_diag = Vec::with_capacity(m);
    let mut b_diag = Vec::with_capacity(m);
    for &xv in &xs {
        let h = 2.0 / (dx * dx) + prob.eval_potential(xv, 0);
        a_diag.push(1.0 + idt2 * h);
        b_diag.push(1.0 - idt2 * h);
    }
    // pre-factored Thomas coefficients
    let mut cp = vec![c64(0.0, 0.0); m];
    let mut inv_den = vec![c64(0.0, 0.0); m];
    inv_den[0] = 1.0 / a_diag[0];
    cp[0] = a_off * inv_den[0];
    for i in 1..m {
        let den = a_diag[i] - a_off * cp[i - 1];
        inv_den[i] = 1.0 / den;
        cp[i] = a_off * inv_den[i];
    }

    let norm0 = l2_norm(&psi, dx);
    let steps = (t_final / dt).round() as usize;
    let mut snap_steps: Vec<usize> = snapshot_times.iter().map(|&st| (st / dt).round() as usize).collect();
    snap_steps.sort_unstable();
    let mut result_times = Vec::new();
    let mut snapshots = Vec::new();
    let mut norm_drift = 0.0f64;
    let mut rhs = vec![c64(0.0, 0.0); m];
    let mut dp = vec![c64(0.0, 0.0); m];
    let wall = (0.05 * l / dx).ceil() as usize;

    let mut snap_iter = snap_steps.iter().peekable();
    while let Some(&&s) = snap_iter.peek() {
        if s == 0 {
            result_times.push(0.0);
            snapshots.push(psi.clone());
            snap_iter.next();
        } else {
            break;
        }
    }
    for step in 1..=steps {
        // rhs = B psi
        for i in 0..m {
            let mut v = b_diag[i] * psi[i];
            if i > 0 {
                v += b_off * psi[i - 1];
            }
            if i + 1 < m {
                v += b_off * psi[i + 1];
            }
            rhs[i] = v;
        }
        dp[0] = rhs[0] * inv_den[0];
        for i in 1..m {
            dp[i] = (rhs[i] - a_off * dp[i - 1]) * inv_den[i];
        }
        psi[m - 1] = dp[m - 1];
        for i in (0..m - 1).rev() {
            psi[i] = dp[i] - cp[i] * psi[i + 1];
        }
        if step % 2000 == 0 || step == steps {
            let nn = l2_norm(&psi, dx);
            norm_drift = norm_drift.max((nn - norm0).abs());
            let mut edge_mass = 0.0;
            for i in 0..wall.min(m) {
                edge_mass += psi[i].norm_sqr() + psi[m - 1 - i].norm_sqr();
            }
            if edge_mass * dx > 1e-10 {
                return Err(Error::BoundaryReach { prob: edge_mass * dx });
            }
        }
        while let Some(&&s) = snap_iter.peek() {
            if s == step {
                result_times.push(step as f64 * dt);
                snapshots.push(psi.clone());
                snap_iter.next();
            } else {
                break;
            }
        }
    }
    Ok(CnResult { xs, times: result_times, snapshots, norm_drift })
}

fn l2_norm(psi: &[C64], dx: f64) -> f64 {
    (psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx).sqrt()
}
