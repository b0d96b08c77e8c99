//! Small dense complex matrix helpers: the scaling-and-squaring matrix
//! exponential and a Schur-based eigenvalue wrapper. Everything here targets
//! the 3x3 and 4x4 generators of this crate, not large systems.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("Schur iteration failed to converge")]
    SchurFailed,
    #[error("Pade denominator is singular")]
    SingularDenominator,
}

/// Degree thresholds for the Pade approximant (Higham 2005).
const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
    (13, 5.371920351148152),
];

fn pade_coeffs(m: usize) -> Vec<f64> {
    match m {
        3 => vec![120.0, 60.0, 12.0, 1.0],
        5 => vec![30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => vec![
            17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
        ],
        9 => vec![
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
        13 => vec![
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ],
        _ => unreachable!(),
    }
}

fn one_norm(a: &DMatrix<C64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with diagonal Pade
/// approximants.
pub fn expm(a: &DMatrix<C64>) -> Result<DMatrix<C64>, LinalgError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);

    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            return pade(a, m);
        }
    }
    let theta13 = THETA[4].1;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.map(|z| z / (2f64.powi(s as i32)));
    let mut e = pade(&scaled, 13)?;
    for _ in 0..s {
        e = &e * &e;
    }
    Ok(e)
}

fn pade(a: &DMatrix<C64>, m: usize) -> Result<DMatrix<C64>, LinalgError> {
    let n = a.nrows();
    let b = pade_coeffs(m);
    let id = DMatrix::<C64>::identity(n, n);
    let a2 = a * a;
    let (u, v) = if m == 13 {
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
            + &a6 * b[7]
            + &a4 * b[5]
            + &a2 * b[3]
            + &id * b[1];
        let u = a * u_inner;
        let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
            + &a6 * b[6]
            + &a4 * b[4]
            + &a2 * b[2]
            + &id * b[0];
        (u, v)
    } else {
        let mut pow = id.clone();
        let mut u_inner = &id * b[1];
        let mut v = &id * b[0];
        for j in 1..=(m / 2) {
            pow = &pow * &a2;
            u_inner += &pow * b[2 * j + 1];
            v += &pow * b[2 * j];
        }
        (a * u_inner, v)
    };
    let denom = &v - &u;
    let numer = &v + &u;
    denom
        .lu()
        .solve(&numer)
        .ok_or(LinalgError::SingularDenominator)
}

/// Eigenvalues of a small dense complex matrix via the Schur form.
pub fn eigenvalues(a: &DMatrix<C64>) -> Result<Vec<C64>, LinalgError> {
    let schur = a
        .clone()
        .try_schur(1e-14, 100_000)
        .ok_or(LinalgError::SchurFailed)?;
    if let Some(e) = schur.eigenvalues() {
        return Ok(e.iter().copied().collect());
    }
    // complex Schur form is triangular, so the diagonal always works
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn expm_zero_is_identity() {
        let z = DMatrix::<C64>::zeros(3, 3);
        let e = expm(&z).unwrap();
        assert_eq!(e, DMatrix::identity(3, 3));
    }

    #[test]
    fn expm_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![c(-1.0, 2.0), c(0.5, -3.0)]);
        let e = expm(&a).unwrap();
        assert_abs_diff_eq!((e[(0, 0)] - c(-1.0, 2.0).exp()).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((e[(1, 1)] - c(0.5, -3.0).exp()).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[(0, 1)].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn expm_nilpotent() {
        let a = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(3., 1.), c(0., 0.), c(0., 0.)]);
        let e = expm(&a).unwrap();
        assert_abs_diff_eq!((e[(0, 1)] - c(3., 1.)).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((e[(0, 0)] - c(1., 0.)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn expm_rotation_with_scaling() {
        // norm large enough to force the squaring branch
        let th = 40.0;
        let a = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(-th, 0.), c(th, 0.), c(0., 0.)]);
        let e = expm(&a).unwrap();
        assert_abs_diff_eq!(e[(0, 0)].re, th.cos(), epsilon = 1e-11);
        assert_abs_diff_eq!(e[(1, 0)].re, th.sin(), epsilon = 1e-11);
    }

    #[test]
    fn expm_group_property() {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(-0.3, 0.1), c(0.2, -0.4), c(0.0, 0.7),
                c(0.1, 0.0), c(-0.5, 0.2), c(0.3, 0.0),
                c(0.0, -0.2), c(0.4, 0.1), c(-0.1, -0.3),
            ],
        );
        let half = a.map(|z| z * 0.5);
        let e_full = expm(&a).unwrap();
        let e_half = expm(&half).unwrap();
        let composed = &e_half * &e_half;
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!((e_full[(i, j)] - composed[(i, j)]).norm(), 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 1.0), c(2.0, 0.0), c(0.0, 3.0),
                c(0.0, 0.0), c(-2.0, 0.5), c(1.0, 0.0),
                c(0.0, 0.0), c(0.0, 0.0), c(0.25, -4.0),
            ],
        );
        let mut eigs = eigenvalues(&a).unwrap();
        eigs.sort_by(|x, y| x.re.total_cmp(&y.re));
        assert_abs_diff_eq!((eigs[0] - c(-2.0, 0.5)).norm(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!((eigs[1] - c(0.25, -4.0)).norm(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!((eigs[2] - c(1.0, 1.0)).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                c(0.0, -1.0), c(0.5, 0.0), c(0.0, 0.0), c(0.2, 0.2),
                c(0.5, 0.0), c(0.0, 1.0), c(-0.3, 0.0), c(0.0, 0.0),
                c(0.0, 0.1), c(-0.3, 0.0), c(-1.0, 0.0), c(0.9, 0.0),
                c(0.2, -0.2), c(0.0, 0.4), c(0.9, 0.0), c(1.0, 0.0),
            ],
        );
        let eigs = eigenvalues(&a).unwrap();
        let sum: C64 = eigs.iter().sum();
        let tr: C64 = (0..4).map(|i| a[(i, i)]).sum();
        assert_abs_diff_eq!((sum - tr).norm(), 0.0, epsilon = 1e-10);
    }
}
