//! One-bit ADC model: exact sign quantizer plus its statistical
//! linearization for proper complex Gaussian inputs.
//!
//! For an input with covariance C and diagonal Σ, the linearization is
//! ŷ = A ỹ + q with gain A = sqrt(2/π) Σ^{-1/2}, output covariance given by
//! the arcsine law
//!   C_ŷ = (2/π) [ arcsin(Σ^{-1/2} Re{C} Σ^{-1/2}) + j arcsin(Σ^{-1/2} Im{C} Σ^{-1/2}) ],
//! and distortion covariance C_q = C_ŷ − A C A^H, which is uncorrelated
//! with the input. With the ±1/√2 output levels that give C_ŷ its unit
//! diagonal, sqrt(2/π) is the unique gain for which the distortion is
//! uncorrelated; these relations are then exact for Gaussian inputs, which
//! is what makes the analytic MSE downstream exact as well.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const CLAMP_TOL: f64 = 1e-9;

fn sign_unit(x: f64) -> f64 {
    // Tie rule: sign(0) = +1, so simulation stays deterministic.
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Per-entry one-bit quantization of both rails:
/// y ↦ (sign(Re y) + j sign(Im y)) / √2. Every output has unit magnitude.
pub fn quantize_one_bit(y: &DVector<Complex64>) -> DVector<Complex64> {
    y.map(|z| Complex64::new(sign_unit(z.re), sign_unit(z.im)) * std::f64::consts::FRAC_1_SQRT_2)
}

fn positive_diagonal(c_in: &DMatrix<Complex64>) -> Result<DVector<f64>> {
    let n = c_in.nrows();
    let mut d = DVector::zeros(n);
    for i in 0..n {
        let v = c_in[(i, i)].re;
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::DegenerateSignal(format!(
                "covariance diagonal entry {i} is {v}; a dimension carries no power"
            )));
        }
        d[i] = v;
    }
    Ok(d)
}

/// Bussgang gain A = sqrt(2/π) diag(C)^{-1/2}; depends on C only through
/// its diagonal. Returned as the vector of diagonal entries.
pub fn bussgang_gain(c_in: &DMatrix<Complex64>) -> Result<DVector<f64>> {
    let d = positive_diagonal(c_in)?;
    Ok(d.map(|v| (std::f64::consts::FRAC_2_PI / v).sqrt()))
}

/// Arcsine-law covariance of the quantizer output. Unit diagonal by
/// construction; normalized correlations marginally above 1 (within 1e-9)
/// are clamped, anything larger is rejected.
pub fn arcsine_covariance(c_in: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = c_in.nrows();
    let d = positive_diagonal(c_in)?;
    let inv_sqrt = d.map(|v| 1.0 / v.sqrt());

    let clamp_rail = |v: f64, a: usize, b: usize| -> Result<f64> {
        if v.abs() <= 1.0 {
            Ok(v)
        } else if v.abs() <= 1.0 + CLAMP_TOL {
            Ok(v.signum())
        } else {
            Err(Error::InvalidCovariance(format!(
                "normalized correlation ({a},{b}) rail value {v} exceeds 1"
            )))
        }
    };

    let mut out = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                out[(a, b)] = Complex64::new(1.0, 0.0);
                continue;
            }
            let norm = c_in[(a, b)] * (inv_sqrt[a] * inv_sqrt[b]);
            if norm.norm() > 1.0 + CLAMP_TOL {
                return Err(Error::InvalidCovariance(format!(
                    "normalized correlation ({a},{b}) has magnitude {} > 1",
                    norm.norm()
                )));
            }
            let re = clamp_rail(norm.re, a, b)?;
            let im = clamp_rail(norm.im, a, b)?;
            out[(a, b)] = Complex64::new(re.asin(), im.asin()) * std::f64::consts::FRAC_2_PI;
        }
    }
    Ok(out)
}

/// Quantization-noise covariance C_q = C_ŷ − A C A^H; every diagonal entry
/// is 1 − 2/π exactly.
pub fn quantization_noise_cov(c_in: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let a = bussgang_gain(c_in)?;
    let c_out = arcsine_covariance(c_in)?;
    let n = c_in.nrows();
    let mut c_q = DMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            c_q[(r, c)] = if r == c {
                // 1 − (2/π)·C_rr/C_rr exactly.
                Complex64::new(1.0 - std::f64::consts::FRAC_2_PI, 0.0)
            } else {
                c_out[(r, c)] - c_in[(r, c)] * (a[r] * a[c])
            };
        }
    }
    Ok(c_q)
}

/// All linearization pieces for one RRH's received covariance.
#[derive(Debug, Clone)]
pub struct BussgangState {
    /// Diagonal of the input covariance (signal power per dimension).
    pub sigma_diag: DVector<f64>,
    /// Diagonal of the Bussgang gain A.
    pub a_gain: DVector<f64>,
    /// Quantizer-output covariance C_ŷ (unit diagonal).
    pub c_out: DMatrix<Complex64>,
    /// Quantization-noise covariance C_q (diagonal 1 − 2/π).
    pub c_q: DMatrix<Complex64>,
}

impl BussgangState {
    pub fn from_covariance(c_in: &DMatrix<Complex64>) -> Result<Self> {
        Ok(BussgangState {
            sigma_diag: positive_diagonal(c_in)?,
            a_gain: bussgang_gain(c_in)?,
            c_out: arcsine_covariance(c_in)?,
            c_q: quantization_noise_cov(c_in)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma_diag.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::herm_min_eigenvalue;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quantize_signs_and_tie() {
        let y = DVector::from_vec(vec![c(3.0, -2.0), c(0.0, 0.0), c(-0.1, 5.0)]);
        let q = quantize_one_bit(&y);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((q[0] - c(s, -s)).norm() < 1e-15);
        assert!((q[1] - c(s, s)).norm() < 1e-15);
        assert!((q[2] - c(-s, s)).norm() < 1e-15);
        for e in q.iter() {
            assert!((e.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn quantize_scale_invariant() {
        let y = DVector::from_vec(vec![c(0.3, -2.0), c(-1.0, 0.01)]);
        let scaled = y.scale(375.0);
        assert_eq!(quantize_one_bit(&y), quantize_one_bit(&scaled));
    }

    #[test]
    fn gain_identity_and_scaling() {
        let g = std::f64::consts::FRAC_2_PI.sqrt();
        let eye = DMatrix::identity(3, 3);
        let a = bussgang_gain(&eye).unwrap();
        for v in a.iter() {
            assert!((v - g).abs() < 1e-15);
        }
        // Scaling the input power by 4 halves the gain.
        let a4 = bussgang_gain(&eye.scale(4.0)).unwrap();
        for v in a4.iter() {
            assert!((v - g / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gain_ignores_off_diagonal() {
        let mut m1 = DMatrix::identity(2, 2);
        let mut m2 = DMatrix::identity(2, 2);
        m1[(0, 1)] = c(0.3, 0.1);
        m1[(1, 0)] = c(0.3, -0.1);
        m2[(0, 1)] = c(-0.7, 0.2);
        m2[(1, 0)] = c(-0.7, -0.2);
        assert_eq!(bussgang_gain(&m1).unwrap(), bussgang_gain(&m2).unwrap());
    }

    #[test]
    fn gain_rejects_zero_power() {
        let mut m = DMatrix::identity(2, 2);
        m[(1, 1)] = c(0.0, 0.0);
        assert!(matches!(
            bussgang_gain(&m),
            Err(Error::DegenerateSignal(_))
        ));
    }

    #[test]
    fn arcsine_identity() {
        let out = arcsine_covariance(&DMatrix::identity(3, 3)).unwrap();
        assert!((out - DMatrix::<Complex64>::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn arcsine_real_two_by_two() {
        for r in [-0.9, -0.3, 0.0, 0.4, 1.0] {
            let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(r, 0.0), c(r, 0.0), c(1.0, 0.0)]);
            let out = arcsine_covariance(&m).unwrap();
            let expect = std::f64::consts::FRAC_2_PI * r.asin();
            assert!((out[(0, 1)].re - expect).abs() < 1e-15);
            assert_eq!(out[(0, 1)].im, 0.0);
            assert_eq!(out[(0, 0)], c(1.0, 0.0));
        }
    }

    #[test]
    fn arcsine_complex_entry() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.3, 0.4), c(0.3, -0.4), c(1.0, 0.0)],
        );
        let out = arcsine_covariance(&m).unwrap();
        let f = std::f64::consts::FRAC_2_PI;
        assert!((out[(0, 1)].re - f * 0.3f64.asin()).abs() < 1e-15);
        assert!((out[(0, 1)].im - f * 0.4f64.asin()).abs() < 1e-15);
    }

    #[test]
    fn arcsine_clamps_and_rejects() {
        let just_over = 1.0 + 5e-10;
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(just_over, 0.0), c(just_over, 0.0), c(1.0, 0.0)],
        );
        let out = arcsine_covariance(&m).unwrap();
        assert!((out[(0, 1)].re - 1.0).abs() < 1e-15);

        let way_over = 1.0 + 1e-6;
        let bad = DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(way_over, 0.0), c(way_over, 0.0), c(1.0, 0.0)],
        );
        assert!(matches!(
            arcsine_covariance(&bad),
            Err(Error::InvalidCovariance(_))
        ));
    }

    #[test]
    fn arcsine_hermitian_unit_diag() {
        // Random-ish Hermitian PSD input with positive diagonal.
        let g = DMatrix::from_fn(4, 4, |i, j| c((i as f64 - 1.3) * 0.4, (j as f64 - 2.1) * 0.3));
        let m = &g * g.adjoint() + DMatrix::identity(4, 4);
        let out = arcsine_covariance(&m).unwrap();
        assert!((out.clone() - out.adjoint()).norm() < 1e-14);
        for i in 0..4 {
            assert_eq!(out[(i, i)], c(1.0, 0.0));
        }
    }

    #[test]
    fn noise_cov_identity_input() {
        let d = 1.0 - std::f64::consts::FRAC_2_PI;
        let q = quantization_noise_cov(&DMatrix::identity(3, 3)).unwrap();
        assert!((q - DMatrix::<Complex64>::identity(3, 3).scale(d)).norm() < 1e-15);
    }

    #[test]
    fn noise_cov_fully_correlated() {
        // Perfectly correlated rails: off-diagonal (2/π)·arcsin(1) − 2/π·1
        // equals the diagonal, so the distortion is rank-deficient PSD.
        let d = 1.0 - std::f64::consts::FRAC_2_PI;
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)],
        );
        let q = quantization_noise_cov(&m).unwrap();
        assert!((q[(0, 1)].re - d).abs() < 1e-12);
        assert_eq!(q[(0, 0)], c(d, 0.0));
    }

    #[test]
    fn noise_cov_psd_over_correlation_sweep() {
        for r in [-0.99, -0.5, 0.0, 0.5, 0.99] {
            let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(r, 0.0), c(r, 0.0), c(1.0, 0.0)]);
            let q = quantization_noise_cov(&m).unwrap();
            assert!(
                herm_min_eigenvalue(&q) >= -1e-10,
                "C_q not PSD at r = {r}"
            );
        }
    }
}
