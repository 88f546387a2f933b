//! Arithmetic on real cosine-series polynomials p(xi) = sum b_k cos(k xi).
//!
//! Everything is kept in the cosine/Chebyshev basis: with x = cos(xi) the
//! basis functions cos(k xi) are the Chebyshev polynomials T_k(x), so
//! products, divisions and sampling stay well conditioned at degrees where
//! a monomial representation would already have lost all accuracy.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Absolute tolerance below which trailing coefficients are trimmed.
pub const TRIM_TOL: f64 = 1e-14;

/// Relative per-step remainder tolerance for division by (1+cos xi)/2.
pub const DIVISION_TOL: f64 = 1e-10;

/// A real trigonometric polynomial sum_{k=0}^{d} b_k cos(k xi).
#[derive(Debug, Clone, PartialEq)]
pub struct CosinePoly {
    coeffs: Vec<f64>,
}

impl CosinePoly {
    /// Builds a polynomial from coefficients `b_0..b_d`, trimming trailing
    /// coefficients below [`TRIM_TOL`] so the stored degree is tight.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        assert!(
            coeffs.iter().all(|c| c.is_finite()),
            "cosine polynomial coefficients must be finite"
        );
        while coeffs.len() > 1 && coeffs.last().map_or(false, |c| c.abs() <= TRIM_TOL) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        CosinePoly { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        CosinePoly::new(vec![c])
    }

    /// ((1 + cos xi)/2)^m expressed in the cosine basis.
    pub fn half_raised(m: u32) -> Self {
        let mut p = CosinePoly::constant(1.0);
        let factor = CosinePoly::new(vec![0.5, 0.5]);
        for _ in 0..m {
            p = p.multiply(&factor);
        }
        p
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn sum_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// Evaluates the polynomial by the Clenshaw backward recurrence.
    pub fn eval(&self, xi: f64) -> f64 {
        let x = xi.cos();
        let b = &self.coeffs;
        let d = b.len() - 1;
        if d == 0 {
            return b[0];
        }
        let mut u1 = 0.0;
        let mut u2 = 0.0;
        for k in (1..=d).rev() {
            let u = b[k] + 2.0 * x * u1 - u2;
            u2 = u1;
            u1 = u;
        }
        b[0] + x * u1 - u2
    }

    /// Evaluates p'(xi) = sum -k b_k sin(k xi).
    pub fn derivative_eval(&self, xi: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &bk) in self.coeffs.iter().enumerate().skip(1) {
            acc -= (k as f64) * bk * (k as f64 * xi).sin();
        }
        acc
    }

    /// Exact product via cos(j xi) cos(k xi) = [cos((j+k)xi) + cos(|j-k|xi)] / 2.
    pub fn multiply(&self, other: &CosinePoly) -> CosinePoly {
        let mut out = vec![0.0; self.degree() + other.degree() + 1];
        for (j, &bj) in self.coeffs.iter().enumerate() {
            for (k, &ck) in other.coeffs.iter().enumerate() {
                let w = 0.5 * bj * ck;
                out[j + k] += w;
                out[j.abs_diff(k)] += w;
            }
        }
        CosinePoly::new(out)
    }

    /// Divides by ((1 + cos xi)/2)^m via `m` synthetic divisions in the
    /// Chebyshev basis. Returns the quotient and the largest absolute
    /// remainder seen across the steps.
    ///
    /// Fails when a step's remainder exceeds [`DIVISION_TOL`] relative to
    /// the coefficient scale, which signals `m` was chosen too large.
    pub fn divide_by_half_raised(&self, m: u32) -> Result<(CosinePoly, f64)> {
        assert!(m >= 1, "division order must be at least 1");
        let scale = self.sum_abs().max(f64::MIN_POSITIVE);
        let mut b = self.coeffs.clone();
        let mut max_rem = 0.0f64;
        for _ in 0..m {
            // Quotient coefficients grow roughly fourfold per step, so the
            // remainder tolerance tracks the current coefficient scale.
            let step_scale: f64 = b.iter().map(|c| c.abs()).sum::<f64>().max(scale);
            let limit = DIVISION_TOL * step_scale;
            let (q, rem) = divide_once(&b);
            if rem.abs() > limit {
                return Err(Error::DivisibilityFailure {
                    remainder: rem.abs(),
                    limit,
                });
            }
            max_rem = max_rem.max(rem.abs());
            b = q;
        }
        Ok((CosinePoly::new(b), max_rem))
    }

    /// Minimum over `[lo, hi]` on the dense sampling grid alone, without
    /// golden-section refinement. Cheap feasibility screen for optimizer
    /// penalty terms.
    pub fn grid_minimum(&self, lo: f64, hi: f64) -> f64 {
        assert!(lo < hi, "empty interval");
        let n = 64 * (self.degree() + 1);
        let h = (hi - lo) / n as f64;
        (0..=n)
            .map(|i| self.eval(lo + i as f64 * h))
            .fold(f64::INFINITY, f64::min)
    }

    /// Global minimum over `[lo, hi]` by dense sampling followed by
    /// golden-section refinement of each candidate bracket.
    pub fn minimum_on_interval(&self, lo: f64, hi: f64) -> (f64, f64) {
        assert!(lo < hi, "empty interval");
        let n = 64 * (self.degree() + 1);
        let h = (hi - lo) / n as f64;
        let samples: Vec<f64> = (0..=n).map(|i| self.eval(lo + i as f64 * h)).collect();

        let mut best_x = lo;
        let mut best_v = samples[0];
        let consider = |x: f64, v: f64, best_x: &mut f64, best_v: &mut f64| {
            if v < *best_v {
                *best_v = v;
                *best_x = x;
            }
        };
        consider(hi, samples[n], &mut best_x, &mut best_v);
        for i in 0..=n {
            let is_local_min = (i == 0 || samples[i] <= samples[i - 1])
                && (i == n || samples[i] <= samples[i + 1]);
            if !is_local_min {
                continue;
            }
            let a = if i == 0 { lo } else { lo + (i - 1) as f64 * h };
            let b = if i == n { hi } else { lo + (i + 1) as f64 * h };
            let (x, v) = self.golden_min(a, b);
            consider(x, v, &mut best_x, &mut best_v);
        }
        (best_x, best_v)
    }

    fn golden_min(&self, mut a: f64, mut b: f64) -> (f64, f64) {
        const INVPHI: f64 = 0.618_033_988_749_894_9;
        let mut c = b - INVPHI * (b - a);
        let mut d = a + INVPHI * (b - a);
        let mut fc = self.eval(c);
        let mut fd = self.eval(d);
        while b - a > 1e-12 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INVPHI * (b - a);
                fc = self.eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INVPHI * (b - a);
                fd = self.eval(d);
            }
        }
        let x = 0.5 * (a + b);
        (x, self.eval(x))
    }

    /// Samples the polynomial at the extrema grid xi_m = m pi / d, m = 0..d.
    pub fn samples(&self, d: usize) -> Vec<f64> {
        (0..=d).map(|m| self.eval(m as f64 * PI / d as f64)).collect()
    }

    /// Recovers coefficients from samples at xi_m = m pi / D (D+1 values)
    /// via the type-I discrete cosine transform. Exact (up to rounding) for
    /// any cosine polynomial of degree <= D.
    pub fn from_samples(samples: &[f64]) -> CosinePoly {
        let dd = samples.len() - 1;
        if dd == 0 {
            return CosinePoly::constant(samples[0]);
        }
        let mut coeffs = vec![0.0; dd + 1];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.5 * samples[0];
            for (m, &fm) in samples.iter().enumerate().take(dd).skip(1) {
                acc += fm * ((k * m) as f64 * PI / dd as f64).cos();
            }
            acc += 0.5 * if k % 2 == 0 { samples[dd] } else { -samples[dd] };
            let sigma = if k == 0 || k == dd { 1.0 } else { 2.0 };
            *ck = sigma * acc / dd as f64;
        }
        CosinePoly::new(coeffs)
    }
}

/// One synthetic division of sum b_k T_k(x) by (1+x)/2; the remainder is
/// the constant p(-1).
fn divide_once(b: &[f64]) -> (Vec<f64>, f64) {
    let d = b.len() - 1;
    if d == 0 {
        return (vec![0.0], b[0]);
    }
    let mut c = vec![0.0; d];
    c[d - 1] = 4.0 * b[d];
    for k in (2..d).rev() {
        let next = if k + 1 < d { c[k + 1] } else { 0.0 };
        c[k - 1] = 4.0 * b[k] - 2.0 * c[k] - next;
    }
    if d >= 2 {
        let c2 = if d > 2 { c[2] } else { 0.0 };
        c[0] = 2.0 * b[1] - c[1] - 0.5 * c2;
    } else {
        c[0] = 2.0 * b[1];
    }
    let c1 = if d > 1 { c[1] } else { 0.0 };
    let rem = b[0] - 0.5 * (c[0] + 0.5 * c1);
    (c, rem)
}
