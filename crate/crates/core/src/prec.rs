//! Extended-precision helpers on top of MPFR floats.
//!
//! High-degree designs make the linear systems and the spectral
//! factorization badly conditioned; those paths run here instead of in
//! f64. Precision contexts are created per call and never shared.

use crate::error::{Error, Result};
use rug::ops::CompleteRound;
use rug::Float;

/// Bits needed to carry `digits` significant decimal digits, plus guard bits.
pub fn bits_for_digits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 64
}

pub fn mpf(prec: u32, v: f64) -> Float {
    Float::with_val(prec, v)
}

pub fn to_f64(v: &Float) -> f64 {
    v.to_f64()
}

/// p(pi) for Chebyshev-basis coefficients: sum (-1)^k b_k.
pub fn eval_at_pi(b: &[Float], prec: u32) -> Float {
    let mut acc = Float::with_val(prec, 0);
    for (k, bk) in b.iter().enumerate() {
        if k % 2 == 0 {
            acc += bk;
        } else {
            acc -= bk;
        }
    }
    acc
}

pub fn sum_abs(b: &[Float], prec: u32) -> Float {
    let mut acc = Float::with_val(prec, 0);
    for bk in b {
        acc += bk.clone().abs();
    }
    acc
}

/// One synthetic division of sum b_k T_k(x) by (1+x)/2 in the Chebyshev
/// basis; returns (quotient, constant remainder).
pub fn divide_once_cheb(b: &[Float], prec: u32) -> (Vec<Float>, Float) {
    let d = b.len() - 1;
    if d == 0 {
        return (vec![Float::with_val(prec, 0)], b[0].clone());
    }
    let mut c = vec![Float::with_val(prec, 0); d];
    c[d - 1] = Float::with_val(prec, 4 * &b[d]);
    for k in (2..d).rev() {
        let mut t = Float::with_val(prec, 4 * &b[k]);
        t -= Float::with_val(prec, 2 * &c[k]);
        if k + 1 < d {
            t -= &c[k + 1];
        }
        c[k - 1] = t;
    }
    if d >= 2 {
        let mut t = Float::with_val(prec, 2 * &b[1]);
        t -= &c[1];
        if d > 2 {
            t -= (&c[2] / 2u32).complete(prec);
        }
        c[0] = t;
    } else {
        c[0] = Float::with_val(prec, 2 * &b[1]);
    }
    let mut s0 = c[0].clone();
    if d > 1 {
        s0 += (&c[1] / 2u32).complete(prec);
    }
    s0 /= 2u32;
    let rem = b[0].clone() - s0;
    (c, rem)
}

/// Dense Gaussian elimination with partial pivoting.
pub fn solve_linear(
    mut mat: Vec<Vec<Float>>,
    mut rhs: Vec<Float>,
    prec: u32,
) -> Result<Vec<Float>> {
    let n = mat.len();
    assert!(mat.iter().all(|row| row.len() == n) && rhs.len() == n);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                mat[i][col]
                    .clone()
                    .abs()
                    .partial_cmp(&mat[j][col].clone().abs())
                    .unwrap()
            })
            .unwrap();
        if mat[pivot_row][col].clone().abs().to_f64() == 0.0 {
            return Err(Error::SingularSystem(format!("zero pivot in column {col}")));
        }
        mat.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = (&mat[row][col] / &mat[col][col]).complete(prec);
            for k in col..n {
                let t = (&factor * &mat[col][k]).complete(prec);
                mat[row][k] -= t;
            }
            let t = (&factor * &rhs[col]).complete(prec);
            rhs[row] -= t;
        }
    }
    let mut x = vec![Float::with_val(prec, 0); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row].clone();
        for col in row + 1..n {
            let t = (&mat[row][col] * &x[col]).complete(prec);
            acc -= t;
        }
        acc /= &mat[row][row];
        x[row] = acc;
    }
    Ok(x)
}

/// Complex number over MPFR floats, enough for Newton polishing of
/// polynomial roots.
#[derive(Debug, Clone)]
pub struct MpComplex {
    pub re: Float,
    pub im: Float,
}

impl MpComplex {
    pub fn new(re: Float, im: Float) -> Self {
        MpComplex { re, im }
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        MpComplex {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn add(&self, o: &MpComplex) -> MpComplex {
        let prec = self.prec();
        MpComplex {
            re: (&self.re + &o.re).complete(prec),
            im: (&self.im + &o.im).complete(prec),
        }
    }

    pub fn sub(&self, o: &MpComplex) -> MpComplex {
        let prec = self.prec();
        MpComplex {
            re: (&self.re - &o.re).complete(prec),
            im: (&self.im - &o.im).complete(prec),
        }
    }

    pub fn mul(&self, o: &MpComplex) -> MpComplex {
        let prec = self.prec();
        let re = (&self.re * &o.re).complete(prec) - (&self.im * &o.im).complete(prec);
        let im = (&self.re * &o.im).complete(prec) + (&self.im * &o.re).complete(prec);
        MpComplex { re, im }
    }

    pub fn mul_real(&self, o: &Float) -> MpComplex {
        let prec = self.prec();
        MpComplex {
            re: (&self.re * o).complete(prec),
            im: (&self.im * o).complete(prec),
        }
    }

    pub fn add_real(&self, o: &Float) -> MpComplex {
        let prec = self.prec();
        MpComplex {
            re: (&self.re + o).complete(prec),
            im: self.im.clone(),
        }
    }

    pub fn div(&self, o: &MpComplex) -> MpComplex {
        let prec = self.prec();
        let denom = o.norm_sq();
        let re = ((&self.re * &o.re).complete(prec) + (&self.im * &o.im).complete(prec)) / &denom;
        let im = ((&self.im * &o.re).complete(prec) - (&self.re * &o.im).complete(prec)) / &denom;
        MpComplex { re, im }
    }

    pub fn norm_sq(&self) -> Float {
        let prec = self.prec();
        (&self.re * &self.re).complete(prec) + (&self.im * &self.im).complete(prec)
    }

    pub fn abs(&self) -> Float {
        self.norm_sq().sqrt()
    }
}

/// Evaluates a real polynomial (ascending coefficients) at a complex point
/// by Horner's scheme.
pub fn poly_eval_complex(coeffs: &[Float], w: &MpComplex) -> MpComplex {
    let prec = w.prec();
    let mut acc = MpComplex::from_f64(prec, 0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc.mul(w).add_real(c);
    }
    acc
}

/// Derivative of a real polynomial with ascending coefficients.
pub fn poly_derivative(coeffs: &[Float], prec: u32) -> Vec<Float> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| Float::with_val(prec, k as u32 * c))
        .collect()
}

/// Product of two real polynomials with ascending coefficients.
pub fn poly_mul(a: &[Float], b: &[Float], prec: u32) -> Vec<Float> {
    let mut out = vec![Float::with_val(prec, 0); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += (ai * bj).complete(prec);
        }
    }
    out
}

/// Divides an ascending-coefficient polynomial by the monic quadratic
/// w^2 + p w + q; returns (quotient, [r0, r1]) with remainder r0 + r1 w.
pub fn poly_divide_quadratic(
    coeffs: &[Float],
    p: &Float,
    q: &Float,
    prec: u32,
) -> (Vec<Float>, [Float; 2]) {
    let n = coeffs.len() - 1;
    assert!(n >= 2);
    // Work on descending coefficients.
    let a: Vec<&Float> = coeffs.iter().rev().collect();
    let mut b = vec![Float::with_val(prec, 0); n - 1];
    b[0] = a[0].clone();
    if n >= 2 {
        if n - 1 > 1 {
            b[1] = a[1] - (p * &b[0]).complete(prec);
        }
        for k in 2..n - 1 {
            let mut t = a[k].clone();
            t -= (p * &b[k - 1]).complete(prec);
            t -= (q * &b[k - 2]).complete(prec);
            b[k] = t;
        }
    }
    let bm2 = if n >= 3 {
        b[n - 3].clone()
    } else {
        Float::with_val(prec, 0)
    };
    let r1 = {
        let mut t = a[n - 1].clone();
        t -= (p * &b[n - 2]).complete(prec);
        t -= (q * &bm2).complete(prec);
        t
    };
    let r0 = {
        let mut t = a[n].clone();
        t -= (q * &b[n - 2]).complete(prec);
        t
    };
    b.reverse();
    (b, [r0, r1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheb_division_matches_f64_path() {
        let prec = 128;
        // Daubechies 2N = 4 squared magnitude.
        let b: Vec<Float> = [0.5, 9.0 / 16.0, 0.0, -1.0 / 16.0]
            .iter()
            .map(|&v| mpf(prec, v))
            .collect();
        let (q1, r1) = divide_once_cheb(&b, prec);
        assert!(r1.to_f64().abs() < 1e-30);
        let (q2, r2) = divide_once_cheb(&q1, prec);
        assert!(r2.to_f64().abs() < 1e-30);
        assert!((q2[0].to_f64() - 2.0).abs() < 1e-30);
        assert!((q2[1].to_f64() + 1.0).abs() < 1e-30);
    }

    #[test]
    fn linear_solve_small() {
        let prec = 128;
        let mat = vec![
            vec![mpf(prec, 2.0), mpf(prec, 1.0)],
            vec![mpf(prec, 1.0), mpf(prec, 3.0)],
        ];
        let rhs = vec![mpf(prec, 5.0), mpf(prec, 10.0)];
        let x = solve_linear(mat, rhs, prec).unwrap();
        assert!((x[0].to_f64() - 1.0).abs() < 1e-30);
        assert!((x[1].to_f64() - 3.0).abs() < 1e-30);
    }

    #[test]
    fn quadratic_division_round_trip() {
        let prec = 128;
        // (w^2 + 2w + 5)(3 + w + w^2) = expand, divide, recover.
        let quad = vec![mpf(prec, 5.0), mpf(prec, 2.0), mpf(prec, 1.0)];
        let other = vec![mpf(prec, 3.0), mpf(prec, 1.0), mpf(prec, 1.0)];
        let prod = poly_mul(&quad, &other, prec);
        let (q, rem) = poly_divide_quadratic(&prod, &mpf(prec, 2.0), &mpf(prec, 5.0), prec);
        assert!(rem[0].to_f64().abs() < 1e-30 && rem[1].to_f64().abs() < 1e-30);
        for (a, e) in q.iter().zip(&other) {
            assert!((a.to_f64() - e.to_f64()).abs() < 1e-30);
        }
    }

    #[test]
    fn complex_newton_on_simple_poly() {
        let prec = 192;
        // w^2 + 1 has roots +-i.
        let coeffs = vec![mpf(prec, 1.0), mpf(prec, 0.0), mpf(prec, 1.0)];
        let deriv = poly_derivative(&coeffs, prec);
        let mut w = MpComplex::from_f64(prec, 0.2, 0.9);
        for _ in 0..50 {
            let f = poly_eval_complex(&coeffs, &w);
            let d = poly_eval_complex(&deriv, &w);
            w = w.sub(&f.div(&d));
        }
        assert!(w.re.to_f64().abs() < 1e-40);
        assert!((w.im.to_f64() - 1.0).abs() < 1e-40);
    }
}
