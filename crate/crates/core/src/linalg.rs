//! Dense symmetric solves for the small systems in IRLS and Gaussian densities.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major square matrix of order `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[i * self.n + j]
    }

    pub fn add_diagonal(&mut self, v: T) {
        for i in 0..self.n {
            self.data[i * self.n + i] += v;
        }
    }

    pub fn cholesky(&self) -> Result<Cholesky<T>> {
        Cholesky::new(self)
    }
}

/// Lower-triangular factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    lower: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn new(a: &SquareMatrix<T>) -> Result<Self> {
        let n = a.n;
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::InvalidArgument("matrix is not positive definite".into()));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Cholesky { n, lower: l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let t = self.lower[i * n + k] * y[k];
                y[i] -= t;
            }
            y[i] /= self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let t = self.lower[k * n + i] * y[k];
                y[i] -= t;
            }
            y[i] /= self.lower[i * n + i];
        }
        y
    }

    /// `ln det A`.
    pub fn log_det(&self) -> T {
        let two = T::one() + T::one();
        (0..self.n).map(|i| self.lower[i * self.n + i].ln()).sum::<T>() * two
    }

    /// Quadratic form `xᵀ A⁻¹ x` via a single forward substitution.
    pub fn inv_quad(&self, x: &[T]) -> T {
        let n = self.n;
        let mut y = x.to_vec();
        for i in 0..n {
            for k in 0..i {
                let t = self.lower[i * n + k] * y[k];
                y[i] -= t;
            }
            y[i] /= self.lower[i * n + i];
        }
        y.iter().map(|&v| v * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = SquareMatrix { n: 3, data: vec![4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0] };
        let ch = a.cholesky().unwrap();
        let x = ch.solve(&[1.0, 2.0, 3.0]);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a.get(i, j) * x[j]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
        let q = ch.inv_quad(&[1.0, 2.0, 3.0]);
        assert!((q - (x[0] + 2.0 * x[1] + 3.0 * x[2])).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let a = SquareMatrix { n: 2, data: vec![1.0, 2.0, 2.0, 1.0] };
        assert!(a.cholesky().is_err());
    }
}
