//! Matrix exponentials for the per-mode propagators.

use nalgebra::DMatrix;

use crate::spectral::C64;

/// `exp(m * t)` for a small complex matrix.
///
/// 2x2 matrices use the closed form `e^{mu t} [cosh(s t) I + sinh(s t)/s N]`
/// with `N = M - mu I` traceless and `N^2 = s^2 I`, which stays accurate for
/// large oscillatory arguments. Larger matrices fall back to Padé scaling
/// and squaring.
pub fn exp_complex(m: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let n = m.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, (m[(0, 0)] * t).exp());
    }
    if n == 2 {
        return exp_2x2(m, t);
    }
    (m * C64::new(t, 0.0)).exp()
}

fn exp_2x2(m: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let mu = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let p = m[(0, 0)] - mu;
    let q = m[(0, 1)];
    let r = m[(1, 0)];
    let s = (p * p + q * r).sqrt();
    let z = s * t;
    let cosh = z.cosh();
    // sinh(z)/z, with a series near the removable singularity
    let sinhc = if z.norm() < 1e-3 {
        let z2 = z * z;
        C64::new(1.0, 0.0) + z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sinh() / z
    };
    let scale = (mu * t).exp();
    let st = sinhc * t;
    DMatrix::from_row_slice(
        2,
        2,
        &[
            scale * (cosh + st * p),
            scale * st * q,
            scale * st * r,
            scale * (cosh - st * p),
        ],
    )
}

/// `exp(m * t)` for a real dense matrix (Padé scaling and squaring).
pub fn exp_real(m: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    (m * t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn hyperbolic_rotation_closed_form() {
        let a = 0.7;
        let t = 1.3;
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(a, 0.0), c(a, 0.0), c(0.0, 0.0)]);
        let e = exp_complex(&m, t);
        assert!((e[(0, 0)] - c((a * t).cosh(), 0.0)).norm() < 1e-15);
        assert!((e[(0, 1)] - c((a * t).sinh(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn closed_form_matches_pade_on_random_matrices() {
        let cases = [
            [c(0.3, 2.0), c(-1.0, 0.5), c(0.2, 0.0), c(-0.7, -1.0)],
            [c(0.0, 5.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, -5.0)],
            [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        ];
        for entries in cases {
            let m = DMatrix::from_row_slice(2, 2, &entries);
            let closed = exp_complex(&m, 0.9);
            let pade = (&m * c(0.9, 0.0)).exp();
            assert!((closed - pade).norm() < 1e-13);
        }
    }

    #[test]
    fn defective_2x2_is_handled() {
        // nilpotent part: exp([[0,1],[0,0]] t) = [[1,t],[0,1]]
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let e = exp_complex(&m, 2.5);
        assert!((e[(0, 1)] - c(2.5, 0.0)).norm() < 1e-15);
        assert!((e[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn group_property_for_3x3() {
        let m = DMatrix::from_fn(3, 3, |i, j| c((i as f64 - j as f64) * 0.4, (i * j) as f64 * 0.1));
        let a = exp_complex(&m, 0.4);
        let b = exp_complex(&m, 0.7);
        let ab = exp_complex(&m, 1.1);
        assert!((a * b - &ab).norm() / ab.norm() < 1e-13);
    }
}
