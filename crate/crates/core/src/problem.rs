//! Problem definition: compactly supported potential and initial state,
//! normalized so that supp V is contained in [-1, 1].
//!
//! Shapes are square steps, piecewise polynomials (coefficients in the global
//! coordinate) or sampled data interpolated by a natural C^2 cubic spline.
//! Interior discontinuities of the potential are rejected; jumps are allowed
//! only at support endpoints. Building records the affine change of variables
//! so that times and spectral parameters can be mapped back to user units.

use crate::{c64, C64, Error, Result};
use serde::{Deserialize, Serialize};

/// A number in the JSON schema: plain real or `[re, im]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonNum {
    Real(f64),
    Complex([f64; 2]),
}

impl JsonNum {
    fn to_c64(self) -> C64 {
        match self {
            JsonNum::Real(x) => c64(x, 0.0),
            JsonNum::Complex([re, im]) => c64(re, im),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyPieceSpec {
    pub interval: [f64; 2],
    pub coeffs: Vec<JsonNum>,
}

/// One side of the problem as it appears in the JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShapeSpec {
    SquareStep {
        support: [f64; 2],
        amplitude: JsonNum,
    },
    PiecewisePolynomial {
        pieces: Vec<PolyPieceSpec>,
    },
    SampledWithSpline {
        xs: Vec<f64>,
        values: Vec<JsonNum>,
    },
}

/// Top-level problem document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub potential: ShapeSpec,
    pub initial: ShapeSpec,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone)]
struct PolyPiece {
    lo: f64,
    hi: f64,
    coeffs: Vec<C64>, // polynomial in the global coordinate
}

impl PolyPiece {
    fn eval(&self, x: f64, d: usize) -> C64 {
        // Horner on the d-th derivative coefficients
        let n = self.coeffs.len();
        if n <= d {
            return c64(0.0, 0.0);
        }
        let mut acc = c64(0.0, 0.0);
        for m in (d..n).rev() {
            let mut fac = 1.0;
            for j in 0..d {
                fac *= (m - j) as f64;
            }
            acc = acc * x + self.coeffs[m] * fac;
        }
        acc
    }

    /// Substitute x = s*x' + c and multiply by `amp` (used by normalization).
    fn map_affine(&self, s: f64, c: f64, amp: f64) -> PolyPiece {
        let n = self.coeffs.len();
        let mut out = vec![c64(0.0, 0.0); n];
        for (m, cm) in self.coeffs.iter().enumerate() {
            // cm * (s x' + c)^m
            let mut binom = 1.0;
            for j in 0..=m {
                // C(m, j) s^j c^(m-j)
                out[j] += *cm * binom * s.powi(j as i32) * c.powi((m - j) as i32) * amp;
                binom = binom * (m - j) as f64 / (j + 1) as f64;
            }
        }
        PolyPiece {
            lo: (self.lo - c) / s,
            hi: (self.hi - c) / s,
            coeffs: out,
        }
    }
}

#[derive(Debug, Clone)]
struct Spline {
    xs: Vec<f64>,
    ys: Vec<C64>,
    m2: Vec<C64>, // second derivatives at knots, natural BC
}

impl Spline {
    fn new(xs: Vec<f64>, ys: Vec<C64>) -> Result<Self> {
        let n = xs.len();
        if n < 4 {
            return Err(Error::InvalidProblem(format!(
                "sampled shape needs at least 4 points, got {n}"
            )));
        }
        for w in xs.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidProblem("sample x-values must be strictly increasing".into()));
            }
        }
        // natural cubic spline: tridiagonal solve for m2
        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![c64(0.0, 0.0); n];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        }
        // Thomas
        let mut m2 = vec![c64(0.0, 0.0); n];
        let mut cp = vec![0.0; n];
        let mut dp = vec![c64(0.0, 0.0); n];
        cp[0] = sup[0] / diag[0];
        dp[0] = rhs[0] / diag[0];
        for i in 1..n {
            let den = diag[i] - sub[i] * cp[i - 1];
            cp[i] = sup[i] / den;
            dp[i] = (rhs[i] - dp[i - 1] * sub[i]) / den;
        }
        m2[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            m2[i] = dp[i] - cp[i] * m2[i + 1];
        }
        Ok(Spline { xs, ys, m2 })
    }

    fn eval(&self, x: f64, d: usize) -> C64 {
        let n = self.xs.len();
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        match d {
            0 => {
                self.ys[i] * a
                    + self.ys[i + 1] * b
                    + (self.m2[i] * (a * a * a - a) + self.m2[i + 1] * (b * b * b - b)) * (h * h / 6.0)
            }
            1 => {
                (self.ys[i + 1] - self.ys[i]) / h - self.m2[i] * ((3.0 * a * a - 1.0) * h / 6.0)
                    + self.m2[i + 1] * ((3.0 * b * b - 1.0) * h / 6.0)
            }
            2 => self.m2[i] * a + self.m2[i + 1] * b,
            _ => c64(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone)]
enum ShapeImpl {
    Pieces(Vec<PolyPiece>),
    Spline(Spline),
}

/// Compactly supported piecewise-C^2 function; complex-valued in general.
#[derive(Debug, Clone)]
pub struct Shape {
    support: (f64, f64),
    imp: ShapeImpl,
}

impl Shape {
    fn from_spec(spec: &ShapeSpec) -> Result<Shape> {
        let shape = match spec {
            ShapeSpec::SquareStep { support, amplitude } => {
                let amp = amplitude.to_c64();
                if !amp.re.is_finite() || !amp.im.is_finite() {
                    return Err(Error::InvalidProblem("non-finite amplitude".into()));
                }
                Shape {
                    support: (support[0], support[1]),
                    imp: ShapeImpl::Pieces(vec![PolyPiece {
                        lo: support[0],
                        hi: support[1],
                        coeffs: vec![amp],
                    }]),
                }
            }
            ShapeSpec::PiecewisePolynomial { pieces } => {
                if pieces.is_empty() {
                    return Err(Error::InvalidProblem("no polynomial pieces".into()));
                }
                let mut ps: Vec<PolyPiece> = pieces
                    .iter()
                    .map(|p| PolyPiece {
                        lo: p.interval[0],
                        hi: p.interval[1],
                        coeffs: p.coeffs.iter().map(|c| c.to_c64()).collect(),
                    })
                    .collect();
                ps.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
                for w in ps.windows(2) {
                    if (w[0].hi - w[1].lo).abs() > 1e-12 {
                        return Err(Error::InvalidProblem("polynomial pieces must abut".into()));
                    }
                }
                for p in &ps {
                    if p.hi <= p.lo {
                        return Err(Error::InvalidProblem("empty polynomial piece".into()));
                    }
                    if p.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                        return Err(Error::InvalidProblem("non-finite coefficient".into()));
                    }
                }
                Shape {
                    support: (ps[0].lo, ps.last().unwrap().hi),
                    imp: ShapeImpl::Pieces(ps),
                }
            }
            ShapeSpec::SampledWithSpline { xs, values } => {
                if xs.len() != values.len() {
                    return Err(Error::InvalidProblem("xs and values length mismatch".into()));
                }
                let ys: Vec<C64> = values.iter().map(|v| v.to_c64()).collect();
                if ys.iter().any(|c| !c.re.is_finite() || !c.im.is_finite())
                    || xs.iter().any(|x| !x.is_finite())
                {
                    return Err(Error::InvalidProblem("non-finite sample".into()));
                }
                let sp = Spline::new(xs.clone(), ys)?;
                Shape {
                    support: (xs[0], *xs.last().unwrap()),
                    imp: ShapeImpl::Spline(sp),
                }
            }
        };
        if !(shape.support.0 < shape.support.1) {
            return Err(Error::InvalidProblem("empty support".into()));
        }
        Ok(shape)
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// d-th derivative at x; exact zero outside the support, one-sided at the
    /// endpoints.
    pub fn eval(&self, x: f64, d: usize) -> C64 {
        if x < self.support.0 || x > self.support.1 {
            return c64(0.0, 0.0);
        }
        match &self.imp {
            ShapeImpl::Pieces(ps) => {
                // leftmost piece containing x; values at joins resolve left
                for p in ps {
                    if x >= p.lo && x <= p.hi {
                        return p.eval(x, d);
                    }
                }
                c64(0.0, 0.0)
            }
            ShapeImpl::Spline(sp) => sp.eval(x, d),
        }
    }

    /// Interior breakpoints (piece joins / spline knots), exclusive of support
    /// endpoints. Integrators and quadratures must not step across these.
    pub fn interior_knots(&self) -> Vec<f64> {
        match &self.imp {
            ShapeImpl::Pieces(ps) => ps.iter().skip(1).map(|p| p.lo).collect(),
            ShapeImpl::Spline(sp) => sp.xs[1..sp.xs.len() - 1].to_vec(),
        }
    }

    fn map_affine(&self, s: f64, c: f64, amp: f64) -> Shape {
        let support = ((self.support.0 - c) / s, (self.support.1 - c) / s);
        let imp = match &self.imp {
            ShapeImpl::Pieces(ps) => ShapeImpl::Pieces(ps.iter().map(|p| p.map_affine(s, c, amp)).collect()),
            ShapeImpl::Spline(sp) => ShapeImpl::Spline(Spline {
                xs: sp.xs.iter().map(|x| (x - c) / s).collect(),
                ys: sp.ys.iter().map(|y| y * amp).collect(),
                // spline second derivatives pick up s^2 from the chain rule,
                // which is exactly re-solving on the mapped knots
                m2: sp.m2.iter().map(|m| m * amp * s * s).collect(),
            }),
        };
        Shape { support, imp }
    }

    fn is_zero(&self) -> bool {
        let (a, b) = self.support;
        let n = 64;
        (0..=n).all(|i| {
            let x = a + (b - a) * i as f64 / n as f64;
            self.eval(x, 0).norm() < 1e-300
        })
    }
}

/// Affine change of variables from user to normalized coordinates:
/// `x_norm = (x_user - x_shift) / x_scale`, `t_norm = t_user / t_scale`,
/// `p_norm = p_user * t_scale`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub x_scale: f64,
    pub x_shift: f64,
    pub t_scale: f64,
    pub p_scale: f64,
}

impl ScalingRecord {
    pub fn identity() -> Self {
        ScalingRecord { x_scale: 1.0, x_shift: 0.0, t_scale: 1.0, p_scale: 1.0 }
    }
    pub fn to_normalized_x(&self, x_user: f64) -> f64 {
        (x_user - self.x_shift) / self.x_scale
    }
    pub fn to_user_x(&self, x_norm: f64) -> f64 {
        x_norm * self.x_scale + self.x_shift
    }
    pub fn to_user_p(&self, p_norm: C64) -> C64 {
        p_norm * self.p_scale
    }
}

/// The potential: real-valued, supp V inside [-1, 1] after normalization.
#[derive(Debug, Clone)]
pub struct Potential {
    shape: Shape,
    v_left: f64,
    v_right: f64,
    zero: bool,
}

impl Potential {
    pub fn support(&self) -> (f64, f64) {
        self.shape.support()
    }
    /// One-sided endpoint values V at the left/right support endpoints.
    pub fn endpoint_values(&self) -> (f64, f64) {
        (self.v_left, self.v_right)
    }
    pub fn is_zero(&self) -> bool {
        self.zero
    }
    pub fn eval(&self, x: f64, d: usize) -> f64 {
        self.shape.eval(x, d).re
    }
    pub fn interior_knots(&self) -> Vec<f64> {
        self.shape.interior_knots()
    }
    pub fn min_value(&self) -> f64 {
        let (a, b) = self.shape.support();
        (0..=256)
            .map(|i| self.eval(a + (b - a) * i as f64 / 256.0, 0))
            .fold(f64::INFINITY, f64::min)
            .min(0.0)
    }
}

/// The initial state psi_0: complex-valued, supp inside [-M, M].
#[derive(Debug, Clone)]
pub struct InitialState {
    shape: Shape,
    half_width: f64,
}

impl InitialState {
    pub fn support(&self) -> (f64, f64) {
        self.shape.support()
    }
    /// M with supp psi_0 inside [-M, M].
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn eval(&self, x: f64, d: usize) -> C64 {
        self.shape.eval(x, d)
    }
    pub fn interior_knots(&self) -> Vec<f64> {
        self.shape.interior_knots()
    }
    /// Quadrature breakpoints: support endpoints plus interior knots.
    pub fn pieces(&self) -> Vec<f64> {
        let (a, b) = self.shape.support();
        let mut v = vec![a];
        v.extend(self.shape.interior_knots());
        v.push(b);
        v
    }
}

/// A validated, normalized problem.
#[derive(Debug, Clone)]
pub struct Problem {
    potential: Potential,
    initial: InitialState,
    scaling: ScalingRecord,
}

impl Problem {
    pub fn potential(&self) -> &Potential {
        &self.potential
    }
    pub fn initial(&self) -> &InitialState {
        &self.initial
    }
    pub fn scaling(&self) -> &ScalingRecord {
        &self.scaling
    }
    /// Half-width X = max(M, 1) of the interval where both the potential and
    /// the initial state live.
    pub fn x_extent(&self) -> f64 {
        self.initial.half_width().max(1.0)
    }
    pub fn eval_potential(&self, x: f64, d: usize) -> f64 {
        debug_assert!(d <= 2);
        self.potential.eval(x, d)
    }
    pub fn eval_initial(&self, x: f64, d: usize) -> C64 {
        debug_assert!(d <= 2);
        self.initial.eval(x, d)
    }
}

/// Reject potentials with interior jumps in V, V' or V''.
fn check_interior_continuity(shape: &Shape) -> Result<()> {
    for k in shape.interior_knots() {
        let h = 1e-7 * (1.0 + k.abs());
        for d in 0..=2 {
            let lo = shape.eval(k - h, d);
            let hi = shape.eval(k + h, d);
            let scale = lo.norm().max(hi.norm()).max(1.0);
            if (hi - lo).norm() > 1e-5 * scale {
                return Err(Error::InvalidProblem(format!(
                    "potential has an interior discontinuity of order {d} at x = {k}"
                )));
            }
        }
    }
    Ok(())
}

/// Build and validate a [`Problem`] from its JSON-level description,
/// rescaling so that the potential support lands inside [-1, 1].
pub fn build_problem(spec: &ProblemSpec) -> Result<Problem> {
    let pot_shape = Shape::from_spec(&spec.potential)?;
    let init_shape = Shape::from_spec(&spec.initial)?;

    // potential must be real
    let (pa, pb) = pot_shape.support();
    for i in 0..=128 {
        let x = pa + (pb - pa) * i as f64 / 128.0;
        if pot_shape.eval(x, 0).im.abs() > 1e-14 {
            return Err(Error::InvalidProblem("potential must be real-valued".into()));
        }
    }

    // normalize: map potential support into [-1, 1] when it sticks out
    let (s, c) = if pa >= -1.0 && pb <= 1.0 {
        (1.0, 0.0)
    } else {
        ((pb - pa) / 2.0, (pa + pb) / 2.0)
    };
    // V_norm(x') = s^2 V(s x' + c); psi0_norm(x') = psi0(s x' + c)
    let pot_norm = pot_shape.map_affine(s, c, s * s);
    let init_norm = init_shape.map_affine(s, c, 1.0);

    check_interior_continuity(&pot_norm)?;

    let (a, b) = pot_norm.support();
    // one-sided endpoint values, taken exactly at the support endpoints
    let v_left = pot_norm.eval(a, 0).re;
    let v_right = pot_norm.eval(b, 0).re;
    let zero = pot_norm.is_zero();

    let (ia, ib) = init_norm.support();
    let half_width = ia.abs().max(ib.abs());

    Ok(Problem {
        potential: Potential { shape: pot_norm, v_left, v_right, zero },
        initial: InitialState { shape: init_norm, half_width },
        scaling: ScalingRecord { x_scale: s, x_shift: c, t_scale: s * s, p_scale: 1.0 / (s * s) },
    })
}

/// The square barrier of unit height on [-1,1] with psi0 the indicator of
/// [-1/2, 1/2]; the standing demo fixture.
pub fn square_barrier_problem() -> Problem {
    let spec = ProblemSpec {
        potential: ShapeSpec::SquareStep { support: [-1.0, 1.0], amplitude: JsonNum::Real(1.0) },
        initial: ShapeSpec::SquareStep { support: [-0.5, 0.5], amplitude: JsonNum::Real(1.0) },
    };
    build_problem(&spec).expect("builtin fixture is valid")
}

/// Square well of depth `depth` (< 0) on [-1,1], same initial state.
pub fn square_well_problem(depth: f64) -> Problem {
    let spec = ProblemSpec {
        potential: ShapeSpec::SquareStep { support: [-1.0, 1.0], amplitude: JsonNum::Real(depth) },
        initial: ShapeSpec::SquareStep { support: [-0.5, 0.5], amplitude: JsonNum::Real(1.0) },
    };
    build_problem(&spec).expect("builtin fixture is valid")
}

/// Free particle (V = 0) with the indicator initial state.
pub fn free_problem() -> Problem {
    let spec = ProblemSpec {
        potential: ShapeSpec::SquareStep { support: [-1.0, 1.0], amplitude: JsonNum::Real(0.0) },
        initial: ShapeSpec::SquareStep { support: [-0.5, 0.5], amplitude: JsonNum::Real(1.0) },
    };
    build_problem(&spec).expect("builtin fixture is valid")
}

/// Smooth C^2 bump (1-x^2)^3 on [-1,1] as an initial state, with the given
/// potential spec; used where time-domain oracles favor smooth data.
pub fn smooth_bump_initial() -> ShapeSpec {
    // (1 - x^2)^3 = 1 - 3x^2 + 3x^4 - x^6
    ShapeSpec::PiecewisePolynomial {
        pieces: vec![PolyPieceSpec {
            interval: [-1.0, 1.0],
            coeffs: vec![
                JsonNum::Real(1.0),
                JsonNum::Real(0.0),
                JsonNum::Real(-3.0),
                JsonNum::Real(0.0),
                JsonNum::Real(3.0),
                JsonNum::Real(0.0),
                JsonNum::Real(-1.0),
            ],
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn square_barrier_no_rescale() {
        let p = square_barrier_problem();
        assert_eq!(p.scaling().x_scale, 1.0);
        assert_eq!(p.eval_potential(0.0, 0), 1.0);
        assert_eq!(p.eval_potential(2.0, 0), 0.0);
        assert_eq!(p.eval_initial(0.0, 0), c64(1.0, 0.0));
        assert_eq!(p.eval_initial(0.75, 0), c64(0.0, 0.0));
    }

    #[test]
    fn zero_potential_flagged() {
        let p = free_problem();
        assert!(p.potential().is_zero());
    }

    #[test]
    fn wide_barrier_rescaled() {
        let spec = ProblemSpec {
            potential: ShapeSpec::SquareStep { support: [-3.0, 3.0], amplitude: JsonNum::Real(1.0) },
            initial: ShapeSpec::SquareStep { support: [-0.5, 0.5], amplitude: JsonNum::Real(1.0) },
        };
        let p = build_problem(&spec).unwrap();
        assert!((p.scaling().x_scale - 3.0).abs() < 1e-15);
        assert!((p.scaling().p_scale - 1.0 / 9.0).abs() < 1e-15);
        // V_norm = s^2 * V = 9 on [-1,1]
        assert!((p.eval_potential(0.3, 0) - 9.0).abs() < 1e-13);
        // initial support shrinks to [-1/6, 1/6]
        assert!((p.initial().half_width() - 0.5 / 3.0).abs() < 1e-15);
        // round trip
        assert!((p.scaling().to_user_x(p.scaling().to_normalized_x(1.7)) - 1.7).abs() < 1e-14);
    }

    #[test]
    fn rejects_degenerate_input() {
        let bad = ProblemSpec {
            potential: ShapeSpec::SquareStep { support: [1.0, 1.0], amplitude: JsonNum::Real(1.0) },
            initial: ShapeSpec::SquareStep { support: [-0.5, 0.5], amplitude: JsonNum::Real(1.0) },
        };
        assert!(build_problem(&bad).is_err());
        let nan = ProblemSpec {
            potential: ShapeSpec::SquareStep { support: [-1.0, 1.0], amplitude: JsonNum::Real(f64::NAN) },
            initial: ShapeSpec::SquareStep { support: [-0.5, 0.5], amplitude: JsonNum::Real(1.0) },
        };
        assert!(build_problem(&nan).is_err());
        let few = ProblemSpec {
            potential: ShapeSpec::SampledWithSpline { xs: vec![-1.0, 0.0, 1.0], values: vec![JsonNum::Real(0.0); 3] },
            initial: ShapeSpec::SquareStep { support: [-0.5, 0.5], amplitude: JsonNum::Real(1.0) },
        };
        assert!(build_problem(&few).is_err());
    }

    #[test]
    fn rejects_interior_jump() {
        let spec = ProblemSpec {
            potential: ShapeSpec::PiecewisePolynomial {
                pieces: vec![
                    PolyPieceSpec { interval: [-1.0, 0.0], coeffs: vec![JsonNum::Real(1.0)] },
                    PolyPieceSpec { interval: [0.0, 1.0], coeffs: vec![JsonNum::Real(2.0)] },
                ],
            },
            initial: ShapeSpec::SquareStep { support: [-0.5, 0.5], amplitude: JsonNum::Real(1.0) },
        };
        assert!(build_problem(&spec).is_err());
    }

    /// Independent natural-cubic-spline oracle: dense Gaussian elimination on
    /// the full second-derivative system, then direct piece evaluation.
    fn spline_oracle(xs: &[f64], ys: &[f64], x: f64) -> f64 {
        let n = xs.len();
        let mut a = vec![vec![0.0f64; n]; n];
        let mut rhs = vec![0.0f64; n];
        a[0][0] = 1.0;
        a[n - 1][n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            a[i][i - 1] = h0 / 6.0;
            a[i][i] = (h0 + h1) / 3.0;
            a[i][i + 1] = h1 / 6.0;
            rhs[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        }
        // Gaussian elimination with partial pivoting
        for col in 0..n {
            let piv = (col..n).max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap()).unwrap();
            a.swap(col, piv);
            rhs.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                rhs[row] -= f * rhs[col];
            }
        }
        let mut m = vec![0.0f64; n];
        for row in (0..n).rev() {
            let mut s = rhs[row];
            for k in row + 1..n {
                s -= a[row][k] * m[k];
            }
            m[row] = s / a[row][row];
        }
        let i = xs.iter().rposition(|&v| v <= x).unwrap().min(n - 2);
        let h = xs[i + 1] - xs[i];
        let aa = (xs[i + 1] - x) / h;
        let bb = (x - xs[i]) / h;
        aa * ys[i] + bb * ys[i + 1] + ((aa * aa * aa - aa) * m[i] + (bb * bb * bb - bb) * m[i + 1]) * h * h / 6.0
    }

    #[test]
    fn spline_matches_independent_oracle() {
        let xs: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
        let ysf: Vec<f64> = xs.iter().map(|x| -(1.0 - x * x)).collect();
        let vals: Vec<JsonNum> = ysf.iter().map(|v| JsonNum::Real(*v)).collect();
        let spec = ProblemSpec {
            potential: ShapeSpec::SampledWithSpline { xs: xs.clone(), values: vals },
            initial: ShapeSpec::SquareStep { support: [-0.5, 0.5], amplitude: JsonNum::Real(1.0) },
        };
        let p = build_problem(&spec).unwrap();
        for x in &xs {
            assert!((p.eval_potential(*x, 0) - (-(1.0 - x * x))).abs() < 1e-12);
        }
        for x in [-0.62, 0.125, 0.8101] {
            let want = spline_oracle(&xs, &ysf, x);
            assert!(
                (p.eval_potential(x, 0) - want).abs() < 1e-12,
                "x={x}: {} vs {}",
                p.eval_potential(x, 0),
                want
            );
        }
    }

    proptest! {
        #[test]
        fn potential_zero_outside_support(x in 1.0001f64..50.0) {
            let p = square_barrier_problem();
            prop_assert_eq!(p.eval_potential(x, 0), 0.0);
            prop_assert_eq!(p.eval_potential(-x, 0), 0.0);
        }

        #[test]
        fn rescaling_consistency(scale in 1.2f64..5.0) {
            // same physical potential declared at two scalings agrees pointwise
            let base = ProblemSpec {
                potential: ShapeSpec::PiecewisePolynomial {
                    pieces: vec![PolyPieceSpec { interval: [-1.0, 1.0],
                        coeffs: vec![JsonNum::Real(1.0), JsonNum::Real(0.0), JsonNum::Real(-1.0)] }],
                },
                initial: ShapeSpec::SquareStep { support: [-0.5, 0.5], amplitude: JsonNum::Real(1.0) },
            };
            // physical: V_phys(x) = s^{-2} V_norm(x/s) on [-s, s] should normalize back
            let s = scale;
            let wide = ProblemSpec {
                potential: ShapeSpec::PiecewisePolynomial {
                    pieces: vec![PolyPieceSpec { interval: [-s, s],
                        coeffs: vec![JsonNum::Real(1.0 / (s * s)), JsonNum::Real(0.0), JsonNum::Real(-1.0 / (s * s * s * s))] }],
                },
                initial: ShapeSpec::SquareStep { support: [-0.5 * s, 0.5 * s], amplitude: JsonNum::Real(1.0) },
            };
            let p1 = build_problem(&base).unwrap();
            let p2 = build_problem(&wide).unwrap();
            for i in 0..=40 {
                let x = -1.0 + 2.0 * i as f64 / 40.0;
                prop_assert!((p1.eval_potential(x, 0) - p2.eval_potential(x, 0)).abs() < 1e-12);
            }
        }
    }
}
