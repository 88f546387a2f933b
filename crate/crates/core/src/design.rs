//! Construction of the squared magnitude |m0(xi)|^2 from design parameters.
//!
//! Two routes produce the coefficient sequence a_0..a_{2N-1} of
//! |m0(xi)|^2 = sum a_k cos(k xi): prescribing double roots on (pi/2, pi)
//! and solving one linear system, or the v-parametrization in which
//! v = (1,...,1) reproduces the Daubechies filter of the same length.
//! Orthonormality forces a_0 = 1/2 and all other even coefficients to
//! vanish, so only the N odd coefficients are unknowns.

use crate::error::{Error, Result};
use crate::prec::{self, mpf};
use crate::trigpoly::CosinePoly;
use rug::ops::{CompleteRound, Pow};
use rug::Float;
use std::f64::consts::PI;

/// Prescribed roots closer than this are rejected as degenerate.
pub const COINCIDENT_ROOT_TOL: f64 = 1e-9;

/// Extraction stops dividing once |r(pi)| exceeds this times the
/// coefficient scale.
pub const EXTRACT_STOP_TOL: f64 = 1e-8;

const FEASIBILITY_TOL: f64 = -1e-10;

/// Design parameters: filter length 2N, n_z double roots on (pi/2, pi),
/// M = N - 2 n_z vanishing moments.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignParams {
    n: usize,
    n_z: usize,
    m: usize,
    roots: Vec<f64>,
}

impl DesignParams {
    pub fn new(n: usize, n_z: usize, roots: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("N must be positive".into()));
        }
        if roots.len() != n_z {
            return Err(Error::InvalidParams(format!(
                "expected {n_z} roots, got {}",
                roots.len()
            )));
        }
        if n < 2 * n_z + 1 {
            return Err(Error::InvalidParams(format!(
                "M = N - 2 n_z = {} must be at least 1",
                n as isize - 2 * n_z as isize
            )));
        }
        for w in roots.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParams(
                    "roots must be strictly increasing".into(),
                ));
            }
        }
        for &z in &roots {
            if z <= PI / 2.0 || z >= PI {
                return Err(Error::InvalidParams(format!(
                    "root {z} is outside the open interval (pi/2, pi)"
                )));
            }
        }
        Ok(Self::new_unchecked(n, n_z, roots))
    }

    /// Skips the root-interval and ordering validation. The optimizer uses
    /// this to evaluate penalty terms outside the feasible set.
    pub fn new_unchecked(n: usize, n_z: usize, roots: Vec<f64>) -> Self {
        DesignParams {
            n,
            n_z,
            m: n.saturating_sub(2 * n_z),
            roots,
        }
    }

    pub fn half_length(&self) -> usize {
        self.n
    }

    pub fn filter_length(&self) -> usize {
        2 * self.n
    }

    pub fn n_roots(&self) -> usize {
        self.n_z
    }

    pub fn vanishing_moments(&self) -> usize {
        self.m
    }

    pub fn roots(&self) -> &[f64] {
        &self.roots
    }
}

/// The squared magnitude |m0|^2 with full-precision coefficients.
#[derive(Debug, Clone)]
pub struct SqMagnitude {
    n: usize,
    a: Vec<Float>,
    prec: u32,
    params: Option<DesignParams>,
}

impl SqMagnitude {
    pub fn half_length(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> Option<&DesignParams> {
        self.params.as_ref()
    }

    /// Coefficients a_0..a_{2N-1} rounded to f64.
    pub fn a_f64(&self) -> Vec<f64> {
        self.a.iter().map(|v| v.to_f64()).collect()
    }

    pub fn a_mp(&self) -> &[Float] {
        &self.a
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn poly(&self) -> CosinePoly {
        CosinePoly::new(self.a_f64())
    }

    /// Decimal-string rendering of the coefficients, preserving the solve
    /// precision for serialization.
    pub fn a_decimal_strings(&self, digits: usize) -> Vec<String> {
        self.a
            .iter()
            .map(|v| v.to_string_radix(10, Some(digits)))
            .collect()
    }

    /// Builds |m0|^2 from filter taps by autocorrelation:
    /// a_0 = sum c_j^2 / 2, a_k = sum_j c_j c_{j+k}.
    pub fn from_filter_coeffs(c: &[f64]) -> Result<SqMagnitude> {
        if c.len() < 2 || c.len() % 2 != 0 {
            return Err(Error::InvalidParams(
                "coefficient sequence must have even length >= 2".into(),
            ));
        }
        let n = c.len() / 2;
        let prec = 128;
        let cmp: Vec<Float> = c.iter().map(|&v| mpf(prec, v)).collect();
        let mut a = Vec::with_capacity(2 * n);
        for k in 0..2 * n {
            let mut acc = Float::with_val(prec, 0);
            for j in 0..2 * n - k {
                acc += (&cmp[j] * &cmp[j + k]).complete(prec);
            }
            if k == 0 {
                acc /= 2u32;
            }
            a.push(acc);
        }
        Ok(SqMagnitude {
            n,
            a,
            prec,
            params: None,
        })
    }

    /// Maximum over a 4096-point grid of |p(xi) + p(pi + xi) - 1|.
    pub fn orthonormality_residual(&self) -> f64 {
        let p = self.poly();
        let mut worst = 0.0f64;
        for i in 0..4096 {
            let xi = i as f64 * PI / 4096.0;
            let defect = (p.eval(xi) + p.eval(PI + xi) - 1.0).abs();
            worst = worst.max(defect);
        }
        worst
    }

    /// Grid-sampled lower estimate of the minimum; used where the exact
    /// minimum is not needed.
    pub fn min_value_coarse(&self) -> f64 {
        self.poly().grid_minimum(0.0, PI)
    }

    /// Minimum of the represented polynomial over [0, pi].
    pub fn min_value(&self) -> f64 {
        self.poly().minimum_on_interval(0.0, PI).1
    }

    pub fn is_feasible(&self) -> bool {
        self.min_value() >= FEASIBILITY_TOL
    }
}

fn solver_precision(n: usize) -> u32 {
    if 2 * n > 20 {
        320
    } else {
        192
    }
}

/// Solves for the unique a-sequence with M vanishing-moment conditions at
/// pi and a double-root condition at each prescribed z_i. One linear system
/// of N equations in the N odd coefficients; solved in extended precision.
pub fn solve_by_roots(params: &DesignParams) -> Result<SqMagnitude> {
    solve_by_roots_with_prec(params, solver_precision(params.half_length()))
}

pub fn solve_by_roots_with_prec(params: &DesignParams, prec: u32) -> Result<SqMagnitude> {
    let n = params.half_length();
    let m = params.vanishing_moments();
    if m < 1 {
        return Err(Error::InvalidParams("M must be at least 1".into()));
    }
    for w in params.roots().windows(2) {
        if (w[1] - w[0]).abs() < COINCIDENT_ROOT_TOL {
            return Err(Error::SingularSystem(format!(
                "prescribed roots {} and {} coincide",
                w[0], w[1]
            )));
        }
    }

    // Unknowns x_i = a_{2i+1}, i = 0..N-1.
    let mut mat: Vec<Vec<Float>> = Vec::with_capacity(n);
    let mut rhs: Vec<Float> = Vec::with_capacity(n);

    // Moment conditions: p(pi) = 0 and even derivatives through 2M-2.
    // j = 0: sum_i x_i = 1/2.   j >= 1: sum_i x_i (2i+1)^{2j} = 0.
    let kmax = mpf(prec, (2 * n - 1) as f64);
    for j in 0..m {
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            let k = mpf(prec, (2 * i + 1) as f64);
            // Scale by (2N-1)^{2j} to keep entries in [0, 1].
            let ratio = (&k / &kmax).complete(prec);
            row.push(ratio.pow((2 * j) as u32));
        }
        mat.push(row);
        rhs.push(if j == 0 {
            mpf(prec, 0.5)
        } else {
            mpf(prec, 0.0)
        });
    }
    // Double-root conditions at each z: p(z) = 0 and p'(z) = 0.
    for &z in params.roots() {
        let zmp = mpf(prec, z);
        let mut row_val = Vec::with_capacity(n);
        let mut row_der = Vec::with_capacity(n);
        for i in 0..n {
            let k = (2 * i + 1) as u32;
            let angle = (&zmp * k).complete(prec);
            row_val.push(angle.clone().cos());
            row_der.push(angle.sin() * k);
        }
        mat.push(row_val);
        rhs.push(mpf(prec, -0.5));
        mat.push(row_der);
        rhs.push(mpf(prec, 0.0));
    }

    let x = prec::solve_linear(mat, rhs, prec)?;
    Ok(assemble(n, x, prec, Some(params.clone())))
}

fn assemble(n: usize, odd: Vec<Float>, prec: u32, params: Option<DesignParams>) -> SqMagnitude {
    let mut a = vec![Float::with_val(prec, 0); 2 * n];
    a[0] = mpf(prec, 0.5);
    for (i, v) in odd.into_iter().enumerate() {
        a[2 * i + 1] = v;
    }
    SqMagnitude {
        n,
        a,
        prec,
        params,
    }
}

/// The v-parametrization: free odd coefficients a_{2M+1}..a_{2N-1} are set
/// to v_i times their Daubechies values, then the M = N - len(v) moment
/// conditions are solved for a_1..a_{2M-1}. v = (1,...,1) reproduces the
/// Daubechies design of the same length.
pub fn solve_by_v(n: usize, v: &[f64]) -> Result<SqMagnitude> {
    if v.len() >= n {
        return Err(Error::InvalidParams(
            "M = N - len(v) must be at least 1".into(),
        ));
    }
    let m = n - v.len();
    let prec = solver_precision(n);
    if v.is_empty() {
        return solve_by_roots_with_prec(&DesignParams::new(n, 0, vec![])?, prec);
    }
    let daub = solve_by_roots_with_prec(&DesignParams::new(n, 0, vec![])?, prec)?;

    // Known tail: a_k = v_i * daubechies a_k for odd k = 2M+1 .. 2N-1.
    let mut known = vec![Float::with_val(prec, 0); 2 * n];
    for (i, &vi) in v.iter().enumerate() {
        let k = 2 * m + 1 + 2 * i;
        known[k] = (&daub.a[k] * &mpf(prec, vi)).complete(prec);
    }

    // Solve the M moment conditions for x_i = a_{2i+1}, i = 0..M-1.
    let kmax = mpf(prec, (2 * m - 1).max(1) as f64);
    let mut mat = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for j in 0..m {
        let mut row = Vec::with_capacity(m);
        for i in 0..m {
            let k = mpf(prec, (2 * i + 1) as f64);
            let ratio = (&k / &kmax).complete(prec);
            row.push(ratio.pow((2 * j) as u32));
        }
        let mut b = if j == 0 {
            mpf(prec, 0.5)
        } else {
            mpf(prec, 0.0)
        };
        for i in m..n {
            let k = 2 * i + 1;
            let kf = mpf(prec, k as f64);
            let ratio = (&kf / &kmax).complete(prec);
            b -= (&known[k] * &ratio.pow((2 * j) as u32)).complete(prec);
        }
        mat.push(row);
        rhs.push(b);
    }
    let x = prec::solve_linear(mat, rhs, prec)?;
    let mut odd: Vec<Float> = x;
    for i in m..n {
        odd.push(known[2 * i + 1].clone());
    }
    Ok(assemble(n, odd, prec, None))
}

/// The ((1+cos xi)/2)^M factorization of a squared magnitude.
#[derive(Debug, Clone)]
pub struct Factorization {
    /// Number of (1+cos xi)/2 factors removed (the vanishing moments).
    pub m: usize,
    /// Residual polynomial r with r(0) = 1, r(pi) != 0.
    pub r: CosinePoly,
    /// Full-precision coefficients of r.
    pub r_mp: Vec<Float>,
}

/// Divides out (1+cos xi)/2 factors until the quotient no longer vanishes
/// at pi. M = 0 signals a design without vanishing moments.
pub fn extract_r(sq: &SqMagnitude) -> Result<Factorization> {
    extract_r_capped(sq, 2 * sq.half_length() - 1)
}

/// Same as [`extract_r`] but stops after at most `max_m` divisions; used to
/// compare alternative factorizations of the same magnitude.
pub fn extract_r_capped(sq: &SqMagnitude, max_m: usize) -> Result<Factorization> {
    let prec = sq.prec;
    let scale = prec::sum_abs(&sq.a, prec);
    let stop = (&scale * &mpf(prec, EXTRACT_STOP_TOL)).complete(prec);

    let mut b: Vec<Float> = sq.a.to_vec();
    let mut m = 0usize;
    while m < max_m && b.len() > 1 {
        let at_pi = prec::eval_at_pi(&b, prec).abs();
        if at_pi > stop {
            break;
        }
        // Quotient coefficients grow with each division, and so does any
        // rounding carried by the input, so the remainder limit tracks the
        // current coefficient scale rather than the initial one.
        let step_scale = prec::sum_abs(&b, prec).max(&scale);
        let rem_limit = (&step_scale * &mpf(prec, 1e-10)).complete(prec);
        let (q, rem) = prec::divide_once_cheb(&b, prec);
        if rem.clone().abs() > rem_limit {
            return Err(Error::DivisibilityFailure {
                remainder: rem.to_f64().abs(),
                limit: rem_limit.to_f64(),
            });
        }
        b = q;
        m += 1;
    }
    // Trim trailing mp zeros so the f64 mirror has a tight degree.
    while b.len() > 1 && b.last().unwrap().clone().abs().to_f64() <= 1e-14 {
        b.pop();
    }
    let r = CosinePoly::new(b.iter().map(|v| v.to_f64()).collect());
    Ok(Factorization { m, r, r_mp: b })
}

/// Orthonormality-identity residual; structurally <= 1e-12 for any solve
/// output.
pub fn check_orthonormality(sq: &SqMagnitude) -> f64 {
    sq.orthonormality_residual()
}

/// Cohen criterion via the sufficient condition: |m0|^2 bounded away from
/// zero on [0, pi/2] (evenness covers [-pi/2, pi/2]).
pub fn check_cohen(sq: &SqMagnitude) -> bool {
    sq.poly().minimum_on_interval(0.0, PI / 2.0).1 > 1e-10
}
