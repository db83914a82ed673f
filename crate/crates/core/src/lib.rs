//! Time evolution of 1D Schrödinger wave functions with compactly supported
//! potentials, decomposed into bound states, a convergent Gamow-vector
//! (resonance) sum and a Borel-summed dispersive `t^{-1/2}` series.
//!
//! The spectral parameter is uniformized as `kappa = sqrt(-i p)` so that the
//! Jost solutions, the Wronskian and the resolvent are single-valued and
//! analytic in `kappa`; resonances are zeros of the Wronskian in the left
//! half `kappa`-plane. Everything downstream (pole location, residues,
//! Watson-map series coefficients, least-term truncation, oracle inversions)
//! works in that variable.

pub mod error;
pub mod expansion;
pub mod oracle;
pub mod problem;
pub mod quad;
pub mod resolvent;
pub mod shooting;
pub mod specfun;
pub mod spectrum;
pub mod squarewell;

pub use error::Error;

/// Complex double, the scalar type of the whole crate.
pub type C64 = num_complex::Complex64;

/// Convenience constructor.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Relative distance used across tests and internal consistency checks.
#[inline]
pub fn rel_err(a: C64, b: C64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

pub(crate) type Result<T> = std::result::Result<T, Error>;
