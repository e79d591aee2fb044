//! Zero-phase IIR filters and the FFT analytic signal.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::scalar::Real;

/// First-order Butterworth low-pass (bilinear transform), run forward then
/// backward. Both passes start from the steady state of the first sample
/// they see, so constants pass unchanged and the map is linear.
pub fn lowpass1_zero_phase<T: Real>(x: &[T], cutoff_hz: f64, rate_hz: f64) -> Vec<T> {
    let k = (std::f64::consts::PI * cutoff_hz / rate_hz).tan();
    let b = T::of(k / (1.0 + k));
    let a = T::of((1.0 - k) / (1.0 + k));
    let pass = |input: &mut Vec<T>| {
        if input.is_empty() {
            return;
        }
        let mut x_prev = input[0];
        let mut y_prev = input[0];
        for v in input.iter_mut() {
            let xn = *v;
            let y = b * (xn + x_prev) + a * y_prev;
            x_prev = xn;
            y_prev = y;
            *v = y;
        }
    };
    let mut y = x.to_vec();
    pass(&mut y);
    y.reverse();
    pass(&mut y);
    y.reverse();
    y
}

#[derive(Debug, Clone, Copy)]
pub enum BiquadKind {
    LowPass,
    HighPass,
}

/// Second-order Butterworth section (RBJ cookbook, Q = 1/√2).
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
    dc_gain: f64,
}

impl Biquad {
    pub fn new(kind: BiquadKind, cutoff_hz: f64, rate_hz: f64) -> Self {
        let w0 = 2.0 * std::f64::consts::PI * cutoff_hz / rate_hz;
        let alpha = w0.sin() / (2.0 * std::f64::consts::FRAC_1_SQRT_2);
        let cos = w0.cos();
        let a0 = 1.0 + alpha;
        let (b, dc_gain) = match kind {
            BiquadKind::LowPass => ([(1.0 - cos) / 2.0, 1.0 - cos, (1.0 - cos) / 2.0], 1.0),
            BiquadKind::HighPass => ([(1.0 + cos) / 2.0, -(1.0 + cos), (1.0 + cos) / 2.0], 0.0),
        };
        Biquad { b: [b[0] / a0, b[1] / a0, b[2] / a0], a: [-2.0 * cos / a0, (1.0 - alpha) / a0], dc_gain }
    }

    fn run<T: Real>(&self, x: &mut [T]) {
        if x.is_empty() {
            return;
        }
        let (b0, b1, b2) = (T::of(self.b[0]), T::of(self.b[1]), T::of(self.b[2]));
        let (a1, a2) = (T::of(self.a[0]), T::of(self.a[1]));
        let y0 = x[0] * T::of(self.dc_gain);
        let (mut x1, mut x2, mut y1, mut y2) = (x[0], x[0], y0, y0);
        for v in x.iter_mut() {
            let xn = *v;
            let y = b0 * xn + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
            x2 = x1;
            x1 = xn;
            y2 = y1;
            y1 = y;
            *v = y;
        }
    }

    pub fn zero_phase<T: Real>(&self, x: &[T]) -> Vec<T> {
        let mut y = x.to_vec();
        self.run(&mut y);
        y.reverse();
        self.run(&mut y);
        y.reverse();
        y
    }
}

/// Analytic signal by the FFT method: keep DC (and Nyquist for even
/// lengths), double the positive bins, zero the negative ones.
pub fn analytic_signal<T: Real>(x: &[T]) -> Vec<Complex<T>> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<T>::new();
    let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let two = T::of(2.0);
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || (n.is_multiple_of(2) && k == half) {
            continue;
        }
        if k < n.div_ceil(2) {
            *v *= two;
        } else {
            *v = Complex::new(T::zero(), T::zero());
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = T::one() / T::of_usize(n);
    buf.iter().map(|v| v * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowpass_passes_constants() {
        let y = lowpass1_zero_phase(&[2.5_f64; 100], 8.0, 1000.0);
        assert!(y.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn biquad_highpass_kills_dc() {
        let hp = Biquad::new(BiquadKind::HighPass, 25.0, 1000.0);
        let y = hp.zero_phase(&[1.0_f64; 200]);
        assert!(y.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn analytic_signal_of_cosine_is_phasor() {
        let n = 256;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * 8.0 * i as f64 / n as f64).cos()).collect();
        let z = analytic_signal(&x);
        for (i, zi) in z.iter().enumerate() {
            assert!((zi.re - x[i]).abs() < 1e-12);
            assert!((zi.norm() - 1.0).abs() < 1e-12);
        }
    }
}
