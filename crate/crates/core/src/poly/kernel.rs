//! Even entire functions with closed-form values and explicit growth bounds.
//!
//! A [`Kernel`] is `scale * prod(factors)`. Its Chebyshev series converges
//! geometrically, and the coefficient tail is bounded through the maximum
//! modulus on Bernstein ellipses, so a polynomial of very high degree can be
//! represented by the kernel and a truncation bound instead of its coefficients.

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use super::cheb::clenshaw_complex;

/// Below this argument the lower incomplete gamma ratio is summed directly.
const SERIES_SWITCH: f64 = 40.0;
/// Degrees beyond this are reported saturated.
const MAX_DEGREE: f64 = (1u64 << 62) as f64;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Factor {
    /// `x^-a P(a/2, t x^2)`: equals `x^-a` for `x >> t^-1/2`, finite at 0.
    SatPow { a: f64, t: f64 },
    /// Smooth step from 0 to 1 around `|x| = center`.
    HighPass { center: f64, width: f64 },
    /// Smooth step from 1 to 0 around `|x| = center`.
    LowPass { center: f64, width: f64 },
    /// Chebyshev series in `x^2`, mapped from `[lo, hi]`.
    Local { lo: f64, hi: f64, coeffs: Vec<f64> },
}

/// `P(s, z) / z^s`, entire in `z`.
fn scaled_lower_gamma(s: f64, z: f64) -> f64 {
    if z < SERIES_SWITCH {
        let mut term = (-ln_gamma(s + 1.0)).exp();
        let mut sum = term;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= z / (s + k);
            sum += term;
            k += 1.0;
        }
        sum * (-z).exp()
    } else {
        gamma_lr(s, z) * (-s * z.ln()).exp()
    }
}

fn ln_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl Factor {
    fn eval(&self, x: f64) -> f64 {
        let x = x.abs();
        match *self {
            Factor::SatPow { a, t } => {
                let s = 0.5 * a;
                (s * t.ln()).exp() * scaled_lower_gamma(s, t * x * x)
            }
            Factor::HighPass { center, width } => {
                let tail = 0.5 * erfc((center + x) / width);
                if x <= center {
                    0.5 * erfc((center - x) / width) + tail
                } else {
                    1.0 - 0.5 * erfc((x - center) / width) + tail
                }
            }
            Factor::LowPass { center, width } => {
                let tail = 0.5 * erfc((center + x) / width);
                if x <= center {
                    1.0 - 0.5 * erfc((center - x) / width) - tail
                } else {
                    0.5 * erfc((x - center) / width) - tail
                }
            }
            Factor::Local { lo, hi, ref coeffs } => {
                super::cheb::clenshaw(coeffs, (2.0 * x * x - lo - hi) / (hi - lo))
            }
        }
    }

    /// `factor / ideal - 1`, where the ideal is `|x|^-a` for `SatPow` and 1
    /// for the windows, computed without cancellation where it is small.
    fn defect(&self, x: f64) -> Option<f64> {
        let x = x.abs();
        match *self {
            Factor::SatPow { a, t } => Some(-gamma_ur(0.5 * a, t * x * x)),
            Factor::HighPass { center, width } => Some(if x <= center {
                self.eval(x) - 1.0
            } else {
                0.5 * erfc((center + x) / width) - 0.5 * erfc((x - center) / width)
            }),
            Factor::LowPass { center, width } => Some(if x <= center {
                -0.5 * erfc((center - x) / width) - 0.5 * erfc((center + x) / width)
            } else {
                self.eval(x) - 1.0
            }),
            Factor::Local { .. } => None,
        }
    }

    fn ideal_power(&self) -> f64 {
        match *self {
            Factor::SatPow { a, .. } => -a,
            _ => 0.0,
        }
    }

    /// Upper bound on `ln |factor(y)|` for complex `y`.
    fn ln_bound(&self, y: Complex64) -> f64 {
        match *self {
            Factor::SatPow { a, t } => {
                let s = 0.5 * a;
                let re = (y * y).re;
                if re >= 0.0 {
                    s * t.ln() + scaled_lower_gamma(s, t * re).ln()
                } else {
                    s * t.ln() + t * (-re) - ln_gamma(s + 1.0)
                }
            }
            Factor::HighPass { center, width } | Factor::LowPass { center, width } => {
                let re = y.re.abs();
                let im = y.im.abs() / width;
                let a1 = (center - re) / width;
                let a2 = (center + re) / width;
                let e1 = im * im - a1 * a1 + (0.5f64).ln();
                let e2 = im * im - a2 * a2 + (0.5f64).ln();
                let with_one = matches!(self, Factor::HighPass { .. }) != (a1 >= 0.0);
                if with_one {
                    ln_sum_exp(&[0.0, e1, e2])
                } else {
                    ln_sum_exp(&[e1, e2])
                }
            }
            Factor::Local { lo, hi, ref coeffs } => {
                let w = (2.0 * y * y - lo - hi) / (hi - lo);
                let ln_grow = (w.norm() + (w.norm_sqr() + 1.0).sqrt()).ln();
                let ln_crude = coeffs.iter().map(|c| c.abs()).sum::<f64>().ln()
                    + coeffs.len().saturating_sub(1) as f64 * ln_grow;
                if ln_crude < 600.0 {
                    clenshaw_complex(coeffs, w).norm().ln().min(ln_crude)
                } else {
                    ln_crude
                }
            }
        }
    }

    /// Locations and widths where values change quickly.
    fn features(&self) -> Vec<(f64, f64)> {
        match *self {
            Factor::SatPow { t, .. } => vec![(0.0, t.sqrt().recip())],
            Factor::HighPass { center, width } | Factor::LowPass { center, width } => {
                vec![(center, width)]
            }
            Factor::Local { .. } => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Kernel {
    pub scale: f64,
    pub factors: Vec<Factor>,
}

/// Truncation degree and the proven bound on the discarded tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub degree: u64,
    pub tail_bound: f64,
    pub ellipse_r: f64,
}

impl Kernel {
    /// Multiplies in log space, windows before local series, so a window
    /// that has underflowed short-circuits a series that would overflow.
    pub fn eval(&self, x: f64) -> f64 {
        let mut ln = self.scale.abs().ln();
        let mut negative = self.scale < 0.0;
        let windows = self.factors.iter().filter(|f| !matches!(f, Factor::Local { .. }));
        let locals = self.factors.iter().filter(|f| matches!(f, Factor::Local { .. }));
        for f in windows.chain(locals) {
            if ln < -800.0 {
                return 0.0;
            }
            let v = f.eval(x);
            ln += v.abs().ln();
            negative ^= v < 0.0;
        }
        let v = ln.exp();
        if negative {
            -v
        } else {
            v
        }
    }

    /// `(p, l)` with `kernel(x) = scale |x|^p e^l` and `l` the summed
    /// log-defects of the factors; `None` when a factor has no ideal form.
    pub fn ideal_ratio(&self, x: f64) -> Option<(f64, f64)> {
        let mut p = 0.0;
        let mut l = 0.0;
        for f in &self.factors {
            l += f.defect(x)?.ln_1p();
            p += f.ideal_power();
        }
        Some((p, l))
    }

    pub fn ln_bound(&self, y: Complex64) -> f64 {
        self.scale.abs().ln() + self.factors.iter().map(|f| f.ln_bound(y)).sum::<f64>()
    }

    pub fn features(&self) -> Vec<(f64, f64)> {
        self.factors.iter().flat_map(|f| f.features()).collect()
    }

    /// Largest sampled `ln |kernel|` on the Bernstein ellipse with parameter `r`.
    /// Points are log-spaced in `Re y` down to well below the finest feature.
    fn ln_max_on_ellipse(&self, r: f64, floor: f64) -> f64 {
        let a = 0.5 * (r + r.recip());
        let b = 0.5 * (r - r.recip());
        let point = |cos_phi: f64| {
            let sin_phi = (1.0 - cos_phi * cos_phi).max(0.0).sqrt();
            Complex64::new(a * cos_phi, b * sin_phi)
        };
        let mut best = f64::NEG_INFINITY;
        let mut take = |c: f64| {
            let v = self.ln_bound(point(c));
            best = if v.is_nan() { f64::INFINITY } else { best.max(v) };
        };
        take(0.0);
        take(1.0);
        let decades = -floor.log10();
        let n = (160.0 * decades).ceil() as usize;
        for k in 0..n {
            take(10f64.powf(-decades * k as f64 / n as f64));
        }
        for k in 1..128 {
            take((std::f64::consts::FRAC_PI_2 * k as f64 / 128.0).cos());
        }
        best
    }

    /// Smallest even degree whose Chebyshev tail, bounded through the sampled
    /// ellipse maxima, is below `tol`.
    pub fn truncation(&self, tol: f64) -> Truncation {
        if self.factors.is_empty() || self.scale == 0.0 {
            return Truncation { degree: 0, tail_bound: 0.0, ellipse_r: f64::INFINITY };
        }
        let finest = self
            .features()
            .iter()
            .map(|&(c, w)| (c - 8.0 * w).max(w))
            .fold(1.0f64, f64::min);
        let floor = (1e-3 * finest).clamp(1e-16, 1e-3);
        // Degree needed when bounding on the ellipse with `r = 1 + rho`.
        let degree_for = |log_rho: f64| {
            let rho = log_rho.exp();
            let r = 1.0 + rho;
            let ln_m = self.ln_max_on_ellipse(r, floor) + 2f64.ln();
            let d = (ln_m + 2f64.ln() - rho.ln() - tol.ln()) / r.ln();
            (if d.is_nan() { f64::INFINITY } else { d.max(0.0) }, ln_m)
        };
        let (lo, hi) = ((1e-14f64).ln(), (3.0f64).ln());
        let steps = 32;
        let mut best = (f64::INFINITY, hi, 0.0);
        for k in 0..=steps {
            let x = lo + (hi - lo) * k as f64 / steps as f64;
            let (d, ln_m) = degree_for(x);
            if d < best.0 {
                best = (d, x, ln_m);
            }
        }
        let step = (hi - lo) / steps as f64;
        let (mut a, mut b) = (best.1 - step, best.1 + step);
        let golden = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..24 {
            let x1 = b - golden * (b - a);
            let x2 = a + golden * (b - a);
            let (d1, m1) = degree_for(x1);
            let (d2, m2) = degree_for(x2);
            if d1 < best.0 {
                best = (d1, x1, m1);
            }
            if d2 < best.0 {
                best = (d2, x2, m2);
            }
            if d1 < d2 {
                b = x2;
            } else {
                a = x1;
            }
        }
        let (d, log_rho, ln_m) = best;
        let rho = log_rho.exp();
        let mut degree = d.ceil().min(MAX_DEGREE) as u64;
        degree += degree % 2;
        let r = 1.0 + rho;
        let tail = (2f64.ln() + ln_m - degree as f64 * r.ln() - rho.ln()).exp();
        Truncation { degree, tail_bound: tail, ellipse_r: r }
    }
}
