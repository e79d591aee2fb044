//! Soft-margin kernel SVM trained by sequential minimal optimization with
//! maximal-violating-pair working-set selection.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    /// `(γ·xᵀy + coef0)^degree`.
    Polynomial {
        degree: u32,
        gamma: f64,
        coef0: f64,
    },
    /// `exp(−γ‖x − y‖²)`.
    Rbf {
        gamma: f64,
    },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Polynomial { degree, gamma, coef0 } => (gamma * dot(a, b) + coef0).powi(degree as i32),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Kernel::Linear => "linear".into(),
            Kernel::Polynomial { degree, gamma, coef0 } => format!("poly {degree} {gamma:.16e} {coef0:.16e}"),
            Kernel::Rbf { gamma } => format!("rbf {gamma:.16e}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let t: Vec<&str> = s.split_whitespace().collect();
        let num = |i: usize| -> Result<f64> {
            t.get(i).and_then(|v| v.parse().ok()).ok_or_else(|| Error::parse("kernel", format!("bad kernel {s:?}")))
        };
        match t.first().copied() {
            Some("linear") => Ok(Kernel::Linear),
            Some("poly") => Ok(Kernel::Polynomial { degree: num(1)? as u32, gamma: num(2)?, coef0: num(3)? }),
            Some("rbf") => Ok(Kernel::Rbf { gamma: num(1)? }),
            _ => Err(Error::parse("kernel", format!("bad kernel {s:?}"))),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoOptions {
    pub c: f64,
    /// Stop when the maximal KKT violation `m(α) − M(α)` is below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SmoOptions {
    fn default() -> Self {
        SmoOptions { c: 1.0, tol: 1e-3, max_iter: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl SvmModel {
    /// `Σ α_i y_i K(x_i, x) + b`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors.iter().zip(&self.coefficients).map(|(sv, &a)| a * self.kernel.eval(sv, x)).sum::<f64>()
            + self.bias
    }
}

/// Full solution of the dual, including the multipliers of every point.
#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub model: SvmModel,
}

/// Dual objective `Σα − ½ Σ_ij α_i α_j y_i y_j K_ij`.
pub fn dual_objective(alpha: &[f64], y: &[f64], k: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[i * n + j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

pub fn kernel_matrix(x: &[Vec<f64>], kernel: &Kernel) -> Vec<f64> {
    let n = x.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&x[i], &x[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Solves `max Σα − ½αᵀQα` s.t. `0 ≤ α ≤ C`, `yᵀα = 0`, `Q_ij = y_i y_j K_ij`.
/// `labels` are `true` for the positive class.
pub fn train_smo(x: &[Vec<f64>], labels: &[bool], kernel: Kernel, opts: &SmoOptions) -> Result<SmoSolution> {
    let n = x.len();
    if n != labels.len() {
        return Err(Error::Shape(format!("{n} vectors, {} labels", labels.len())));
    }
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(Error::SingleClass);
    }
    if !(opts.c > 0.0) {
        return Err(Error::InvalidArgument("C must be positive".into()));
    }
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let k = kernel_matrix(x, &kernel);
    let c = opts.c;
    let mut alpha = vec![0.0; n];
    // gradient of ½αᵀQα − Σα
    let mut g = vec![-1.0; n];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * g[t];
            if in_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let quad = (k[i * n + i] + k[j * n + j] - 2.0 * k[i * n + j]).max(1e-12);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        // move along y_i Δα_i = −y_j Δα_j, clipped to the box
        let mut step = (gmax - gmin) / quad;
        let cap_i = if y[i] > 0.0 { c - old_i } else { old_i };
        let cap_j = if y[j] > 0.0 { old_j } else { c - old_j };
        step = step.min(cap_i).min(cap_j);
        alpha[i] = (old_i + y[i] * step).clamp(0.0, c);
        alpha[j] = (old_j - y[j] * step).clamp(0.0, c);
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            g[t] += y[t] * (y[i] * k[t * n + i] * di + y[j] * k[t * n + j] * dj);
        }
    }
    // b = −ρ, ρ from free vectors, else the midpoint of the feasible range
    let mut free_sum = 0.0;
    let mut free_n = 0;
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * g[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += yg;
            free_n += 1;
        } else if (alpha[t] == 0.0 && y[t] > 0.0) || (alpha[t] == c && y[t] < 0.0) {
            // upper-bound constraint on ρ for these
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free_n > 0 { free_sum / free_n as f64 } else { (ub + lb) / 2.0 };
    let (mut support_vectors, mut coefficients) = (Vec::new(), Vec::new());
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(x[t].clone());
            coefficients.push(alpha[t] * y[t]);
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations without meeting tolerance {}", opts.tol);
    }
    Ok(SmoSolution {
        alpha,
        model: SvmModel { kernel, c, support_vectors, coefficients, bias: -rho, converged, iterations },
    })
}
