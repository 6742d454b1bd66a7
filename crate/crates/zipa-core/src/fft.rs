//! Thin wrappers around rustfft: cached forward/inverse transforms of real
//! signals plus FFT-based linear convolution (overlap-add for long inputs).

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub(crate) fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// A planned forward FFT of a fixed size, reusable across frames and threads.
pub(crate) struct ForwardFft {
    fft: Arc<dyn Fft<f64>>,
    n: usize,
}

impl ForwardFft {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n);
        Self { fft, n }
    }

    /// Transform a real frame (zero-padded to the plan size if shorter).
    pub fn transform(&self, frame: &[f64]) -> Vec<Complex<f64>> {
        assert!(frame.len() <= self.n);
        let mut buf: Vec<Complex<f64>> = frame.iter().map(|&x| Complex::new(x, 0.0)).collect();
        buf.resize(self.n, Complex::new(0.0, 0.0));
        self.fft.process(&mut buf);
        buf
    }
}

/// Forward/inverse pair for spectral-domain filtering at one size.
pub(crate) struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n: usize,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            n,
        }
    }

    pub fn forward_real(&self, x: &[f64]) -> Vec<Complex<f64>> {
        assert!(x.len() <= self.n);
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        buf.resize(self.n, Complex::new(0.0, 0.0));
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform, returning the real part scaled by 1/n.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex<f64>>) -> Vec<f64> {
        assert_eq!(spectrum.len(), self.n);
        self.inverse.process(&mut spectrum);
        let scale = 1.0 / self.n as f64;
        spectrum.iter().map(|c| c.re * scale).collect()
    }
}

/// Full linear convolution, output length `a.len() + b.len() - 1`.
///
/// Short kernels run the quadratic loop; longer ones go through FFT
/// overlap-add so minute-long recordings convolve in blocks instead of one
/// giant transform.
pub(crate) fn convolve_full(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.len() <= 32 {
        return convolve_direct(long, short);
    }

    let m = short.len();
    let fft_len = next_pow2((4 * (m - 1)).max(8192));
    let block = fft_len - (m - 1);
    let pair = FftPair::new(fft_len);
    let kernel = pair.forward_real(short);

    let out_len = long.len() + m - 1;
    let mut out = vec![0.0; out_len];
    let mut start = 0;
    while start < long.len() {
        let end = (start + block).min(long.len());
        let mut spectrum = pair.forward_real(&long[start..end]);
        for (s, k) in spectrum.iter_mut().zip(kernel.iter()) {
            *s *= k;
        }
        let chunk = pair.inverse_real(spectrum);
        let copy_len = (end - start + m - 1).min(out_len - start);
        for (o, c) in out[start..start + copy_len].iter_mut().zip(chunk.iter()) {
            *o += c;
        }
        start = end;
    }
    out
}

fn convolve_direct(long: &[f64], short: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; long.len() + short.len() - 1];
    for (j, &k) in short.iter().enumerate() {
        if k == 0.0 {
            continue;
        }
        for (i, &x) in long.iter().enumerate() {
            out[i + j] += x * k;
        }
    }
    out
}
