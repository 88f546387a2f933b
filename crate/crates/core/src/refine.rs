//! Extended-precision refinement of optimal root locations.
//!
//! The regularity exponent has a smooth quadratic maximum in the root
//! positions, so double-precision search can only place the optimum to
//! about the square root of its noise floor. Published filter tables
//! need the argmax to ten digits or better, which requires evaluating
//! s0 in extended precision and running Newton on its gradient.

use crate::design::{extract_r, solve_by_roots_with_prec, DesignParams};
use crate::error::{Error, Result};
use crate::prec::{bits_for_digits, mpf, solve_linear};
use crate::regularity::eigenvalue_moduli;
use nalgebra::DMatrix;
use rug::ops::CompleteRound;
use rug::Float;

/// Clenshaw evaluation of a cosine series with extended-precision
/// coefficients at an extended-precision point.
fn eval_cos_series(b: &[Float], xi: &Float, prec: u32) -> Float {
    let x = xi.clone().cos();
    let d = b.len() - 1;
    if d == 0 {
        return b[0].clone();
    }
    let two_x = (2u32 * &x).complete(prec);
    let mut u1 = Float::with_val(prec, 0);
    let mut u2 = Float::with_val(prec, 0);
    for k in (1..=d).rev() {
        let mut u = b[k].clone();
        u += (&two_x * &u1).complete(prec);
        u -= &u2;
        u2 = u1;
        u1 = u;
    }
    let mut out = b[0].clone();
    out += (&x * &u1).complete(prec);
    out -= &u2;
    out
}

/// Matrix of the transfer operator in extended precision; column j holds
/// the cosine coefficients of the image of cos(j xi), recovered by the
/// type-I DCT on the degree-d extrema grid.
fn transfer_matrix_mp(r: &[Float], prec: u32) -> Vec<Vec<Float>> {
    let d = r.len() - 1;
    let pi = Float::with_val(prec, rug::float::Constant::Pi);
    let dim = d + 1;
    if d == 0 {
        return vec![vec![(2u32 * &r[0]).complete(prec)]];
    }

    // Sample points xi_m = m pi / d and the two half-angle arguments.
    let mut columns = Vec::with_capacity(dim);
    for j in 0..dim {
        let samples: Vec<Float> = (0..=d)
            .map(|m| {
                let xi = (&pi * m as u32).complete(prec) / d as u32;
                let h = (&xi / 2u32).complete(prec);
                let hc = (&pi - &h).complete(prec);
                let mut acc = eval_cos_series(r, &h, prec)
                    * Float::with_val(prec, (&h * j as u32).complete(prec).cos());
                acc += eval_cos_series(r, &hc, prec)
                    * Float::with_val(prec, (&hc * j as u32).complete(prec).cos());
                acc
            })
            .collect();
        // Type-I DCT recovery of the coefficients.
        let mut col = Vec::with_capacity(dim);
        for k in 0..dim {
            let mut acc = (&samples[0] / 2u32).complete(prec);
            for (m, fm) in samples.iter().enumerate().take(d).skip(1) {
                let angle = (&pi * ((k * m) as u32)).complete(prec) / d as u32;
                acc += (fm * &angle.cos()).complete(prec);
            }
            let end = (&samples[d] / 2u32).complete(prec);
            if k % 2 == 0 {
                acc += end;
            } else {
                acc -= end;
            }
            let sigma = if k == 0 || k == d { 1u32 } else { 2u32 };
            col.push(acc * sigma / d as u32);
        }
        columns.push(col);
    }
    // Transpose to row-major storage.
    (0..dim)
        .map(|row| (0..dim).map(|col| columns[col][row].clone()).collect())
        .collect()
}

/// Dominant eigenvalue of the transfer matrix in extended precision:
/// double-precision estimate followed by Rayleigh-quotient iteration.
pub fn spectral_radius_mp(r: &[Float], prec: u32) -> Result<Float> {
    let mat = transfer_matrix_mp(r, prec);
    let dim = mat.len();
    let f64_mat = DMatrix::from_fn(dim, dim, |i, j| mat[i][j].to_f64());
    let rho0 = eigenvalue_moduli(&f64_mat)?.into_iter().fold(0.0, f64::max);

    let mut mu = mpf(prec, rho0 * (1.0 + 1e-8));
    let mut x = vec![Float::with_val(prec, 1); dim];
    for _ in 0..60 {
        // Inverse iteration step: (T - mu I) y = x.
        let mut shifted: Vec<Vec<Float>> = mat.iter().map(|row| row.to_vec()).collect();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] -= &mu;
        }
        let y = match solve_linear(shifted, x.clone(), prec) {
            Ok(y) => y,
            // The shift hit the eigenvalue to working precision.
            Err(_) => break,
        };
        let norm = {
            let mut acc = Float::with_val(prec, 0);
            for v in &y {
                acc += (v * v).complete(prec);
            }
            acc.sqrt()
        };
        if norm.to_f64() == 0.0 {
            return Err(Error::NonConvergence);
        }
        x = y.iter().map(|v| (v / &norm).complete(prec)).collect();
        // Rayleigh quotient of the normalized iterate.
        let mut quotient = Float::with_val(prec, 0);
        for (i, row) in mat.iter().enumerate() {
            let mut tx = Float::with_val(prec, 0);
            for (j, entry) in row.iter().enumerate() {
                tx += (entry * &x[j]).complete(prec);
            }
            quotient += tx * &x[i];
        }
        let delta = (&quotient - &mu).complete(prec).abs();
        mu = quotient;
        let tiny = (mu.clone().abs() >> (prec - 8)).max(&Float::with_val(prec, 0));
        if delta <= tiny {
            break;
        }
    }
    if (mu.to_f64() - rho0).abs() > 1e-6 * (1.0 + rho0) {
        return Err(Error::NonConvergence);
    }
    Ok(mu)
}

/// s0 for the given design evaluated entirely in extended precision.
pub fn s0_mp(params: &DesignParams, prec: u32) -> Result<Float> {
    let sq = solve_by_roots_with_prec(params, prec)?;
    let fact = extract_r(&sq)?;
    let rho = spectral_radius_mp(&fact.r_mp, prec)?;
    let ln4 = Float::with_val(prec, 4).ln();
    Ok(mpf(prec, fact.m as f64) - rho.ln() / ln4)
}

/// Polishes approximate optimal root locations by Newton iteration on the
/// finite-difference gradient of the extended-precision s0. The seeds must
/// lie in the quadratic basin of the optimum (within roughly 1e-3).
pub fn refine_roots(n: usize, n_z: usize, seed: &[f64], digits: u32) -> Result<Vec<f64>> {
    assert!(n_z >= 1 && seed.len() == n_z);
    let prec = bits_for_digits(digits);
    let dim = n_z;
    let eval = |z: &[f64]| -> Result<Float> {
        s0_mp(&DesignParams::new(n, n_z, z.to_vec())?, prec)
    };
    let hg = 1e-7;
    let hh = 1e-5;

    let mut z = seed.to_vec();
    for _ in 0..30 {
        let mut grad = vec![0.0; dim];
        for i in 0..dim {
            let mut zp = z.clone();
            zp[i] += hg;
            let mut zm = z.clone();
            zm[i] -= hg;
            let diff = eval(&zp)? - eval(&zm)?;
            grad[i] = diff.to_f64() / (2.0 * hg);
        }
        let center = eval(&z)?;
        let mut hess = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let mut zp = z.clone();
            zp[i] += hh;
            let mut zm = z.clone();
            zm[i] -= hh;
            let second = eval(&zp)? - (2u32 * &center).complete(prec) + eval(&zm)?;
            hess[(i, i)] = second.to_f64() / (hh * hh);
            for j in i + 1..dim {
                let mut zpp = z.clone();
                zpp[i] += hh;
                zpp[j] += hh;
                let mut zpm = z.clone();
                zpm[i] += hh;
                zpm[j] -= hh;
                let mut zmp = z.clone();
                zmp[i] -= hh;
                zmp[j] += hh;
                let mut zmm = z.clone();
                zmm[i] -= hh;
                zmm[j] -= hh;
                let cross = eval(&zpp)? - eval(&zpm)? - eval(&zmp)? + eval(&zmm)?;
                let v = cross.to_f64() / (4.0 * hh * hh);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        let g = nalgebra::DVector::from_column_slice(&grad);
        let step = hess
            .lu()
            .solve(&(-g))
            .ok_or_else(|| Error::SingularSystem("singular Hessian in root refinement".into()))?;
        let mut worst = 0.0f64;
        for i in 0..dim {
            let delta = step[i].clamp(-1e-2, 1e-2);
            z[i] += delta;
            worst = worst.max(delta.abs());
        }
        if worst < 1e-12 {
            break;
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::solve_by_roots;
    use crate::regularity::regularity;
    use crate::trigpoly::CosinePoly;

    #[test]
    fn mp_radius_matches_closed_form() {
        // r = 2 - cos(xi) has transfer spectral radius exactly 4.
        let prec = 192;
        let r = vec![mpf(prec, 2.0), mpf(prec, -1.0)];
        let rho = spectral_radius_mp(&r, prec).unwrap();
        assert!((rho.to_f64() - 4.0).abs() < 1e-40 + 1e-12);
        let diff = rho - 4u32;
        assert!(diff.to_f64().abs() < 1e-40);
    }

    #[test]
    fn mp_radius_matches_quadratic_family() {
        // Closed form 1 + sqrt(1 - v) at v = 1/2.
        let prec = 256;
        let v = 0.5;
        let r = vec![mpf(prec, 1.0 - v / 4.0), mpf(prec, v / 2.0), mpf(prec, -v / 4.0)];
        let rho = spectral_radius_mp(&r, prec).unwrap();
        let expect = Float::with_val(prec, 0.5).sqrt() + 1u32;
        let diff = (rho - expect).abs();
        assert!(diff.to_f64() < 1e-50, "diff {}", diff.to_f64());
    }

    #[test]
    fn mp_matrix_agrees_with_f64_path() {
        let prec = 192;
        let sq = solve_by_roots(&DesignParams::new(5, 1, vec![2.6450]).unwrap()).unwrap();
        let fact = extract_r(&sq).unwrap();
        let mp = transfer_matrix_mp(&fact.r_mp, prec);
        let f64_t = crate::regularity::transfer_matrix(&fact.r).unwrap();
        for (i, row) in mp.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((v.to_f64() - f64_t.matrix()[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mp_s0_agrees_with_f64_pipeline() {
        let params = DesignParams::new(5, 1, vec![2.6450]).unwrap();
        let exact = s0_mp(&params, 192).unwrap().to_f64();
        let rep = regularity(&solve_by_roots(&params).unwrap()).unwrap();
        assert!((exact - rep.s0).abs() < 1e-10, "{exact} vs {}", rep.s0);
    }

    #[test]
    fn refine_10_tap_root() {
        let z = refine_roots(5, 1, &[2.6450], 40).unwrap();
        assert!((z[0] - 2.6450).abs() < 5e-4, "refined to {}", z[0]);
        // The refined point dominates nearby evaluations.
        let prec = bits_for_digits(40);
        let best = s0_mp(&DesignParams::new(5, 1, z.clone()).unwrap(), prec).unwrap();
        for delta in [-1e-6, 1e-6] {
            let probe = s0_mp(
                &DesignParams::new(5, 1, vec![z[0] + delta]).unwrap(),
                prec,
            )
            .unwrap();
            assert!(probe <= best);
        }
    }

    #[test]
    fn clenshaw_mp_matches_f64() {
        let prec = 128;
        let p = CosinePoly::new(vec![0.3, -0.7, 0.2, 0.05]);
        let b: Vec<Float> = p.coeffs().iter().map(|&v| mpf(prec, v)).collect();
        for i in 0..10 {
            let xi = i as f64 * 0.31;
            let got = eval_cos_series(&b, &mpf(prec, xi), prec).to_f64();
            assert!((got - p.eval(xi)).abs() < 1e-13);
        }
    }
}
