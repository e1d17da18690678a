//! Eigenvalues of small Hermitian matrices.
//!
//! The matrices here are Gram matrices of reshaped statevectors, at most
//! `2^(n/2)` on a side, so a cyclic Jacobi sweep is plenty. A complex
//! Hermitian `A = X + iY` is handled through its real symmetric embedding
//! `[[X, -Y], [Y, X]]`, whose spectrum is that of `A` with every eigenvalue
//! doubled.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Allowed deviation from Hermitian symmetry.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a real symmetric matrix (row-major, `dim x dim`), descending.
pub fn symmetric_eigenvalues(mut a: Vec<f64>, dim: usize) -> Vec<f64> {
    assert_eq!(a.len(), dim * dim);
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let eps = f64::EPSILON * frob.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..dim)
            .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * dim + j] * a[i * dim + j])
            .sum::<f64>()
            .sqrt();
        if off <= eps {
            break;
        }
        for p in 0..dim {
            for q in p + 1..dim {
                let apq = a[p * dim + q];
                if apq.abs() <= eps / (dim as f64) {
                    continue;
                }
                let app = a[p * dim + p];
                let aqq = a[q * dim + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..dim {
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    a[k * dim + p] = c * akp - s * akq;
                    a[k * dim + q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[p * dim + k];
                    let aqk = a[q * dim + k];
                    a[p * dim + k] = c * apk - s * aqk;
                    a[q * dim + k] = s * apk + c * aqk;
                }
            }
        }
    }

    let mut eig: Vec<f64> = (0..dim).map(|i| a[i * dim + i]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig
}

/// Eigenvalues of a Hermitian matrix (row-major, `dim x dim`), descending.
pub fn hermitian_eigenvalues(m: &[Complex64], dim: usize) -> Result<Vec<f64>> {
    if m.len() != dim * dim {
        return Err(Error::Size(format!(
            "{} entries for a {dim}x{dim} matrix",
            m.len()
        )));
    }
    for i in 0..dim {
        for j in i..dim {
            let d = (m[i * dim + j] - m[j * dim + i].conj()).norm();
            if d > HERMITIAN_TOLERANCE {
                return Err(Error::Argument(format!(
                    "matrix not Hermitian at ({i}, {j}): deviation {d:e}"
                )));
            }
        }
    }

    let big = 2 * dim;
    let mut emb = vec![0.0; big * big];
    for i in 0..dim {
        for j in 0..dim {
            let z = m[i * dim + j];
            emb[i * big + j] = z.re;
            emb[(i + dim) * big + (j + dim)] = z.re;
            emb[i * big + (j + dim)] = -z.im;
            emb[(i + dim) * big + j] = z.im;
        }
    }
    let doubled = symmetric_eigenvalues(emb, big);
    Ok(doubled.into_iter().step_by(2).collect())
}

/// `M M^dagger` for a row-major `rows x cols` matrix.
pub fn gram(m: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut g = vec![Complex64::new(0.0, 0.0); rows * rows];
    for i in 0..rows {
        for j in i..rows {
            let v: Complex64 = (0..cols)
                .map(|k| m[i * cols + k] * m[j * cols + k].conj())
                .sum();
            g[i * rows + j] = v;
            g[j * rows + i] = v.conj();
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_two_by_two() {
        assert_eq!(symmetric_eigenvalues(vec![3.0, 0.0, 0.0, -1.0], 2), vec![3.0, -1.0]);
        let e = symmetric_eigenvalues(vec![2.0, 1.0, 1.0, 2.0], 2);
        assert!((e[0] - 3.0).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_y_spectrum() {
        let i = Complex64::new(0.0, 1.0);
        let zero = Complex64::new(0.0, 0.0);
        let e = hermitian_eigenvalues(&[zero, -i, i, zero], 2).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert!(hermitian_eigenvalues(&[zero, one, zero, zero], 2).is_err());
        assert!(hermitian_eigenvalues(&[zero; 3], 2).is_err());
    }

    #[test]
    fn trace_and_determinant_preserved() {
        // Symmetric 4x4 with known characteristic data.
        let a = vec![
            4.0, 1.0, -2.0, 2.0, //
            1.0, 2.0, 0.0, 1.0, //
            -2.0, 0.0, 3.0, -2.0, //
            2.0, 1.0, -2.0, -1.0,
        ];
        let e = symmetric_eigenvalues(a.clone(), 4);
        let trace: f64 = e.iter().sum();
        assert!((trace - 8.0).abs() < 1e-12);
        let sumsq: f64 = e.iter().map(|x| x * x).sum();
        let frob: f64 = a.iter().map(|x| x * x).sum();
        assert!((sumsq - frob).abs() < 1e-11);
        assert!(e.windows(2).all(|w| w[0] >= w[1]));
    }
}
