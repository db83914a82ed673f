//! Crate-wide error type.

use crate::C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("problem parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("integrator step underflow at x = {x} (|h| = {h:.3e}); stiff regime, use WKB")]
    StepUnderflow { x: f64, h: f64 },

    #[error("Wronskian varies with x beyond tolerance: spread {spread:.3e}")]
    WronskianInconsistent { spread: f64 },

    #[error("evaluation at or near a pole of the resolvent: |W| = {w_abs:.3e}, nearest pole estimate {nearest}")]
    PoleProximity { w_abs: f64, nearest: C64 },

    #[error("pole inside Taylor circle of radius {radius}")]
    PoleInsideCircle { radius: f64 },

    #[error("circle quadrature did not converge under node doubling (rel {rel:.3e})")]
    CircleNotConverged { rel: f64 },

    #[error("Newton refinement did not converge in {iters} iterations (last |step| = {step:.3e})")]
    NoConvergence { iters: usize, step: f64 },

    #[error("refinement converged to an already recorded zero at kappa = {kappa}")]
    DuplicateZero { kappa: C64 },

    #[error("refinement escaped to the right half p-plane (p = {p})")]
    EscapedRightHalfPlane { p: C64 },

    #[error("refinement converged to a bound-state zero at kappa = {kappa}")]
    ConvergedToBoundState { kappa: C64 },

    #[error("too few resonances for a fit: have {have}, need {need}")]
    TooFewPoints { have: usize, need: usize },

    #[error("kappa = 0 must not be evaluated directly; use the Taylor machinery")]
    KappaZero,

    #[error("WKB form requested below kappa_switch (|kappa| = {kappa_abs})")]
    BelowWkbSwitch { kappa_abs: f64 },

    #[error("resonance is not on the first sheet (Re p = {re_p})")]
    NotFirstSheet { re_p: f64 },

    #[error("Gamow normalization point has near-zero amplitude")]
    BadNormalization,

    #[error("invalid pole-term input: {0}")]
    InvalidPoleTerm(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("Bromwich tail bound unattainable at requested tolerance (bound {bound:.3e} > tol {tol:.3e})")]
    TailBound { bound: f64, tol: f64 },

    #[error("pole too close to the branch cut: distance {dist:.3e} at p = {p}")]
    PoleNearCut { dist: f64, p: C64 },

    #[error("wave reached the boundary wall: probability within 5% of wall = {prob:.3e}")]
    BoundaryReach { prob: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("Gamow tail not decreasing; insufficient resonances for requested accuracy")]
    GamowTailNotDecreasing,

    #[error("non-simple zero suspected at kappa = {kappa}")]
    NonSimpleZero { kappa: C64 },
}
