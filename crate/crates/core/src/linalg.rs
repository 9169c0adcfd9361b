//! Dense symmetric positive-definite solves for the small normal-equation
//! systems that come out of IRLS.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor of a row-major `k × k` SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<F> {
    k: usize,
    l: Vec<F>,
}

impl<F: Scalar> Cholesky<F> {
    /// Factor `a`. A pivot at or below `rel_tol · max(diag)` is reported as rank
    /// deficiency in that column.
    pub fn factor(a: &[F], k: usize, rel_tol: F) -> Result<Self> {
        assert_eq!(a.len(), k * k);
        let max_diag = (0..k).map(|i| a[i * k + i]).fold(F::zero(), F::max);
        let floor = rel_tol * max_diag.max(F::min_positive_value());
        let mut l = vec![F::zero(); k * k];
        for j in 0..k {
            let mut d = a[j * k + j];
            for p in 0..j {
                d = d - l[j * k + p] * l[j * k + p];
            }
            if !(d > floor) {
                return Err(Error::RankDeficient { column: j });
            }
            let djj = d.sqrt();
            l[j * k + j] = djj;
            for i in (j + 1)..k {
                let mut s = a[i * k + j];
                for p in 0..j {
                    s = s - l[i * k + p] * l[j * k + p];
                }
                l[i * k + j] = s / djj;
            }
        }
        Ok(Self { k, l })
    }

    pub fn solve(&self, b: &[F]) -> Vec<F> {
        let k = self.k;
        let mut y = b.to_vec();
        for i in 0..k {
            let mut s = y[i];
            for p in 0..i {
                s = s - self.l[i * k + p] * y[p];
            }
            y[i] = s / self.l[i * k + i];
        }
        for i in (0..k).rev() {
            let mut s = y[i];
            for p in (i + 1)..k {
                s = s - self.l[p * k + i] * y[p];
            }
            y[i] = s / self.l[i * k + i];
        }
        y
    }

    /// Diagonal of the inverse matrix.
    pub fn inverse_diagonal(&self) -> Vec<F> {
        (0..self.k)
            .map(|j| {
                let mut e = vec![F::zero(); self.k];
                e[j] = F::one();
                self.solve(&e)[j]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0_f64];
        let x = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i * 3 + j] * x[j]).sum())
            .collect();
        let sol = Cholesky::factor(&a, 3, 1e-12).unwrap().solve(&b);
        for (s, t) in sol.iter().zip(&x) {
            assert!((s - t).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_rank_deficient() {
        let a = [1.0, 2.0, 2.0, 4.0_f64];
        assert_eq!(
            Cholesky::factor(&a, 2, 1e-10).unwrap_err(),
            Error::RankDeficient { column: 1 }
        );
    }

    #[test]
    fn inverse_diagonal_of_diagonal_matrix() {
        let a = [2.0, 0.0, 0.0, 8.0_f64];
        let d = Cholesky::factor(&a, 2, 1e-12).unwrap().inverse_diagonal();
        assert!((d[0] - 0.5).abs() < 1e-15 && (d[1] - 0.125).abs() < 1e-15);
    }
}
