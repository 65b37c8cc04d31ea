//! Chebyshev-basis primitives: Clenshaw evaluation and fast transforms between
//! values at first-kind nodes and coefficients.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// `sum_k c[k] T_k(x)`.
pub fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or(0.0) + x * b1 - b2
}

pub fn clenshaw_complex(c: &[f64], x: Complex64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let (mut b1, mut b2) = (zero, zero);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or(0.0) + x * b1 - b2
}

/// First-kind Chebyshev nodes `cos(pi (j + 1/2) / n)`, descending.
pub fn nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos())
        .collect()
}

/// Interpolation coefficients from values at [`nodes`]`(n)`.
pub fn coeffs_from_values(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = Vec::with_capacity(2 * n);
    buf.extend(values.iter().map(|&v| Complex64::new(v, 0.0)));
    buf.extend(values.iter().rev().map(|&v| Complex64::new(v, 0.0)));
    FftPlanner::new().plan_fft_forward(2 * n).process(&mut buf);
    let mut out: Vec<f64> = (0..n)
        .map(|k| {
            let tw = Complex64::from_polar(1.0, -std::f64::consts::PI * k as f64 / (2 * n) as f64);
            (tw * buf[k]).re / n as f64
        })
        .collect();
    out[0] *= 0.5;
    out
}

/// Values at [`nodes`]`(n)` of the series `c`; requires `c.len() <= n`.
pub fn values_at_nodes(c: &[f64], n: usize) -> Vec<f64> {
    assert!(c.len() <= n, "series longer than node count");
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
    for (k, &ck) in c.iter().enumerate() {
        buf[k] = ck * Complex64::from_polar(1.0, std::f64::consts::PI * k as f64 / (2 * n) as f64);
    }
    FftPlanner::new().plan_fft_inverse(2 * n).process(&mut buf);
    buf.into_iter().take(n).map(|z| z.re).collect()
}
