//! Binary logistic regression fit by iteratively re-weighted least squares.
//!
//! Each iteration is a Newton step on the ridge-penalized log-likelihood
//!
//! ```text
//! L(w) = Σ_n [ y_n a_n − ln(1 + e^{a_n}) ] − λ/2 ‖w‖²,   a_n = wᵀ[x_n; 1]
//! ```
//!
//! solved through the weighted normal equations `(XᵀSX + λI) Δ = Xᵀ(y − p) − λw`
//! with `S = diag(p(1 − p))`. The bias is the last weight and is penalized too,
//! which keeps the Hessian positive definite for constant or collinear columns.

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::scalar::{log_sigmoid, sigmoid, Real};

#[derive(Debug, Clone, Copy)]
pub struct IrlsOptions<T> {
    pub lambda: T,
    pub max_iter: usize,
    /// Stop once `max |Δw| < tol`.
    pub tol: T,
}

impl<T: Real> Default for IrlsOptions<T> {
    fn default() -> Self {
        IrlsOptions { lambda: T::of(1e-4), max_iter: 50, tol: T::of(1e-6) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit<T> {
    /// `n_features` weights followed by the bias.
    pub weights: Vec<T>,
    pub converged: bool,
    pub iterations: usize,
}

impl<T: Real> LogisticFit<T> {
    pub fn n_features(&self) -> usize {
        self.weights.len() - 1
    }

    /// Linear predictor `wᵀx + b`.
    pub fn decision(&self, x: &[T]) -> T {
        let p = self.n_features();
        debug_assert_eq!(x.len(), p);
        x.iter().zip(&self.weights[..p]).map(|(&a, &w)| a * w).sum::<T>() + self.weights[p]
    }

    pub fn probability(&self, x: &[T]) -> T {
        sigmoid(self.decision(x))
    }
}

/// Fits `P(y = 1 | x) = σ(wᵀx + b)`.
///
/// `features` is row-major with `n_features` columns. A fit that hits
/// `max_iter` is returned with `converged = false`; it is still the best
/// iterate found.
pub fn fit_irls<T: Real>(
    features: &[T],
    n_features: usize,
    targets: &[bool],
    opts: &IrlsOptions<T>,
) -> Result<LogisticFit<T>> {
    let n = targets.len();
    if n == 0 {
        return Err(Error::Empty("logistic regression needs at least one example".into()));
    }
    if features.len() != n * n_features {
        return Err(Error::Shape(format!(
            "{} feature values for {} rows of {} columns",
            features.len(),
            n,
            n_features
        )));
    }
    let p = n_features + 1;
    let mut w = vec![T::zero(); p];
    let mut objective = penalized_log_likelihood(features, n_features, targets, &w, opts.lambda);
    let half = T::of(0.5);

    for iter in 1..=opts.max_iter {
        let mut grad = vec![T::zero(); p];
        let mut hess = SquareMatrix::zeros(p);
        let mut row = vec![T::one(); p];
        for (i, &y) in targets.iter().enumerate() {
            row[..n_features].copy_from_slice(&features[i * n_features..(i + 1) * n_features]);
            let a = dot(&row, &w);
            let mu = sigmoid(a);
            let s = mu * (T::one() - mu);
            let r = if y { T::one() - mu } else { -mu };
            for j in 0..p {
                grad[j] += r * row[j];
                let sj = s * row[j];
                for k in 0..=j {
                    *hess.get_mut(j, k) += sj * row[k];
                }
            }
        }
        for j in 0..p {
            grad[j] -= opts.lambda * w[j];
            for k in 0..j {
                let v = hess.get(j, k);
                *hess.get_mut(k, j) = v;
            }
        }
        hess.add_diagonal(opts.lambda);
        let step = hess.cholesky()?.solve(&grad);

        // Newton with step halving; the penalized objective is concave so a
        // short enough step always improves it.
        let mut scale = T::one();
        let mut candidate;
        let mut cand_obj;
        let mut halvings = 0;
        loop {
            candidate = w.iter().zip(&step).map(|(&wi, &si)| wi + scale * si).collect::<Vec<_>>();
            cand_obj = penalized_log_likelihood(features, n_features, targets, &candidate, opts.lambda);
            if cand_obj >= objective || halvings >= 30 {
                break;
            }
            scale *= half;
            halvings += 1;
        }
        let max_change = step.iter().map(|s| (scale * *s).abs()).fold(T::zero(), T::max);
        if cand_obj >= objective {
            w = candidate;
            objective = cand_obj;
        }
        if max_change < opts.tol {
            return Ok(LogisticFit { weights: w, converged: true, iterations: iter });
        }
    }
    log::warn!("IRLS did not converge in {} iterations", opts.max_iter);
    Ok(LogisticFit { weights: w, converged: false, iterations: opts.max_iter })
}

fn penalized_log_likelihood<T: Real>(features: &[T], n_features: usize, targets: &[bool], w: &[T], lambda: T) -> T {
    let mut ll = T::zero();
    for (i, &y) in targets.iter().enumerate() {
        let x = &features[i * n_features..(i + 1) * n_features];
        let a = x.iter().zip(w).map(|(&xi, &wi)| xi * wi).sum::<T>() + w[n_features];
        // y ln σ(a) + (1 − y) ln σ(−a)
        ll += if y { log_sigmoid(a) } else { log_sigmoid(-a) };
    }
    ll - T::of(0.5) * lambda * w.iter().map(|&v| v * v).sum::<T>()
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain gradient ascent on the same objective, as an independent route.
    fn gradient_ascent(xs: &[f64], ys: &[bool], lambda: f64) -> (f64, f64) {
        let (mut w, mut b) = (0.0, 0.0);
        for _ in 0..200_000 {
            let (mut gw, mut gb) = (-lambda * w, -lambda * b);
            for (&x, &y) in xs.iter().zip(ys) {
                let p = 1.0 / (1.0 + (-(w * x + b)).exp());
                let r = if y { 1.0 - p } else { -p };
                gw += r * x;
                gb += r;
            }
            w += 0.05 * gw;
            b += 0.05 * gb;
        }
        (w, b)
    }

    #[test]
    fn matches_gradient_ascent_on_textbook_problem() {
        // hours studied vs pass/fail, overlapping classes
        let xs = [
            0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0, 3.25, 3.5, 4.0, 4.25, 4.5, 4.75, 5.0, 5.5,
        ];
        let ys = [
            false, false, false, false, false, false, true, false, true, false, true, false, true, false, true, true,
            true, true, true, true,
        ];
        let fit = fit_irls(&xs, 1, &ys, &IrlsOptions::default()).unwrap();
        assert!(fit.converged);
        let (w, b) = gradient_ascent(&xs, &ys, 1e-4);
        assert!((fit.weights[0] - w).abs() < 1e-4, "{} vs {}", fit.weights[0], w);
        assert!((fit.weights[1] - b).abs() < 1e-4, "{} vs {}", fit.weights[1], b);
        // classic unregularized answer is w ≈ 1.5046, b ≈ −4.0777
        assert!((fit.weights[0] - 1.5046).abs() < 1e-2);
    }

    #[test]
    fn constant_features_give_prior_logit() {
        let xs = vec![0.0f64; 40];
        let ys: Vec<bool> = (0..20).map(|i| i % 4 == 0).collect();
        let fit = fit_irls(&xs, 2, &ys, &IrlsOptions::default()).unwrap();
        assert_eq!(fit.weights[0], 0.0);
        assert_eq!(fit.weights[1], 0.0);
        assert!((fit.probability(&[0.0, 0.0]) - 0.25).abs() < 1e-4);
    }

    #[test]
    fn separable_data_stays_finite() {
        let xs = [-2.0f64, -1.0, 1.0, 2.0];
        let ys = [false, false, true, true];
        let fit = fit_irls(&xs, 1, &ys, &IrlsOptions::default()).unwrap();
        assert!(fit.weights.iter().all(|w| w.is_finite()));
        assert!(fit.probability(&[2.0]) > 0.99 && fit.probability(&[-2.0]) < 0.01);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(fit_irls::<f64>(&[], 1, &[], &IrlsOptions::default()).is_err());
        assert!(fit_irls(&[1.0, 2.0, 3.0], 2, &[true, false], &IrlsOptions::default()).is_err());
    }
}
