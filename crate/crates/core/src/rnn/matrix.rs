use std::ops::Range;

use rand::Rng;

use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix {rows}x{cols} from {} values", data.len());
        Matrix { rows, cols, data }
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))` with `fan_out = rows / blocks`.
    pub fn glorot<R: Rng>(rows: usize, cols: usize, blocks: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (cols + rows / blocks) as f64).sqrt();
        let data = (0..rows * cols).map(|_| T::of(rng.gen_range(-limit..limit))).collect();
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out[k] += Σ_j self[rows.start + k][j] · x[j]`.
    #[inline]
    pub fn matvec_rows_acc(&self, rows: Range<usize>, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        for (o, r) in out.iter_mut().zip(rows) {
            let mut s = T::zero();
            for (&w, &xv) in self.row(r).iter().zip(x) {
                s += w * xv;
            }
            *o += s;
        }
    }

    #[inline]
    pub fn matvec_acc(&self, x: &[T], out: &mut [T]) {
        self.matvec_rows_acc(0..self.rows, x, out)
    }

    /// `out[j] += Σ_k self[rows.start + k][j] · v[k]`.
    #[inline]
    pub fn matvec_t_rows_acc(&self, rows: Range<usize>, v: &[T], out: &mut [T]) {
        for (&vk, r) in v.iter().zip(rows) {
            if vk == T::zero() {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(r)) {
                *o += w * vk;
            }
        }
    }

    #[inline]
    pub fn matvec_t_acc(&self, v: &[T], out: &mut [T]) {
        self.matvec_t_rows_acc(0..self.rows, v, out)
    }

    /// `self[rows.start + k][j] += v[k] · x[j]`.
    #[inline]
    pub fn add_outer_rows(&mut self, rows: Range<usize>, v: &[T], x: &[T]) {
        let cols = self.cols;
        for (&vk, r) in v.iter().zip(rows) {
            if vk == T::zero() {
                continue;
            }
            for (w, &xv) in self.data[r * cols..(r + 1) * cols].iter_mut().zip(x) {
                *w += vk * xv;
            }
        }
    }

    #[inline]
    pub fn add_outer(&mut self, v: &[T], x: &[T]) {
        self.add_outer_rows(0..self.rows, v, x)
    }
}
