//! Bounded, parity-definite polynomials on `[-1, 1]`: construction, evaluation
//! and grid certification.
//!
//! Low-degree polynomials are stored as Chebyshev coefficients. The power-law
//! approximations needed at deep levels reach degrees far beyond what can be
//! stored, so they are kept as an even entire [`Kernel`] times `x^(2k)` with a
//! bound on the Chebyshev tail dropped at the stated degree; evaluation uses
//! the kernel directly and is accurate to that bound.

mod build;
mod cert;
pub mod cheb;
mod kernel;

use std::borrow::Cow;

use serde::Serialize;

use crate::error::{invalid, Result};

pub use build::{
    build_neg_power, build_pos_power, build_sqrt_log, SqrtLogBounds, MAX_ROUNDS, SQRT_LOG_DEGREE_K,
    TAIL_TOL,
};
pub use cert::{cap_check, certify, certify_with, CertRecord, SideCheck, CAP_SLACK};
pub use kernel::{Factor, Kernel, Truncation};

/// Largest degree for which coefficients of a kernel-backed polynomial are
/// computed on request.
pub const MATERIALIZE_CAP: u64 = 1 << 16;

const SCALE_ULPS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// `x^x_power` times the degree-`truncation.degree` Chebyshev truncation of `kernel`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub kernel: Kernel,
    pub x_power: u32,
    pub truncation: Truncation,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Coeffs(Vec<f64>),
    Series(Series),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChebPoly {
    parity: Parity,
    degree: u64,
    repr: Repr,
    cert: Option<CertRecord>,
}

impl ChebPoly {
    /// Trailing zeros are dropped; mixed parity is rejected.
    pub fn from_coeffs(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coefficients must be finite"));
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        let odd_zero = coeffs.iter().skip(1).step_by(2).all(|&c| c == 0.0);
        let even_zero = coeffs.iter().step_by(2).all(|&c| c == 0.0);
        let parity = if odd_zero {
            Parity::Even
        } else if even_zero {
            Parity::Odd
        } else {
            return Err(invalid("coefficients mix even and odd terms"));
        };
        Ok(Self { parity, degree: (coeffs.len() - 1) as u64, repr: Repr::Coeffs(coeffs), cert: None })
    }

    pub fn constant(v: f64) -> Self {
        Self::from_coeffs(vec![v]).expect("a finite constant is even")
    }

    /// The Chebyshev polynomial `T_k`.
    pub fn chebyshev_t(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Self::from_coeffs(c).expect("T_k has definite parity")
    }

    pub(crate) fn from_series(series: Series) -> Self {
        debug_assert!(series.x_power % 2 == 0);
        let degree = series.truncation.degree + series.x_power as u64;
        Self { parity: Parity::Even, degree, repr: Repr::Series(series), cert: None }
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn cert(&self) -> Option<&CertRecord> {
        self.cert.as_ref()
    }

    pub fn with_cert(mut self, cert: CertRecord) -> Self {
        self.cert = Some(cert);
        self
    }

    pub fn without_cert(mut self) -> Self {
        self.cert = None;
        self
    }

    /// Stored coefficients; `None` for kernel-backed polynomials.
    pub fn coeffs(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Coeffs(c) => Some(c),
            Repr::Series(_) => None,
        }
    }

    pub fn series(&self) -> Option<&Series> {
        match &self.repr {
            Repr::Coeffs(_) => None,
            Repr::Series(s) => Some(s),
        }
    }

    /// Worst-case gap between [`ChebPoly::eval`] and the exact polynomial.
    pub fn representation_error(&self) -> f64 {
        match &self.repr {
            Repr::Coeffs(_) => 0.0,
            Repr::Series(s) => s.truncation.tail_bound,
        }
    }

    /// `r` with `P(y) = target_scale |y|^target_power (1 + r)` for the kernel
    /// before truncation, evaluated from the factor defects so that tiny
    /// relative errors survive; `None` for stored coefficients or a kernel
    /// whose ideal is not of that form. Scales within a few ulps of the target
    /// are roundings of the same constant and count as equal.
    pub fn relative_defect(&self, y: f64, target_scale: f64, target_power: f64) -> Option<f64> {
        let s = self.series()?;
        let (p, l) = s.kernel.ideal_ratio(y)?;
        let ratio = s.kernel.scale / target_scale;
        if (s.x_power as f64 + p - target_power).abs() > 1e-9 || !(ratio > 0.0) {
            return None;
        }
        let ln_ratio = if (ratio - 1.0).abs() <= SCALE_ULPS * f64::EPSILON { 0.0 } else { ratio.ln() };
        Some((l + ln_ratio).exp_m1())
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x.abs() <= 1.0) {
            return Err(invalid(format!("evaluation point {x} outside [-1, 1]")));
        }
        Ok(self.value(x))
    }

    pub(crate) fn value(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Coeffs(c) => cheb::clenshaw(c, x),
            Repr::Series(s) => {
                let k = s.kernel.eval(x);
                if s.x_power == 0 || k == 0.0 {
                    k
                } else {
                    x.abs().powi(s.x_power as i32) * k
                }
            }
        }
    }

    /// Chebyshev coefficients, computed by interpolation for kernel-backed
    /// polynomials up to [`MATERIALIZE_CAP`].
    pub fn materialize(&self) -> Option<Vec<f64>> {
        match &self.repr {
            Repr::Coeffs(c) => Some(c.clone()),
            Repr::Series(_) if self.degree > MATERIALIZE_CAP => None,
            Repr::Series(_) => {
                let n = (2 * (self.degree as usize + 1)).next_power_of_two();
                let vals: Vec<f64> = cheb::nodes(n).into_iter().map(|x| self.value(x)).collect();
                let mut c = cheb::coeffs_from_values(&vals);
                c.truncate(self.degree as usize + 1);
                for ck in c.iter_mut().skip(1).step_by(2) {
                    *ck = 0.0;
                }
                Some(c)
            }
        }
    }

    /// Multiplies every value by `f`, dropping any certificate.
    pub fn scaled(&self, f: f64) -> Self {
        let repr = match &self.repr {
            Repr::Coeffs(c) => Repr::Coeffs(c.iter().map(|v| v * f).collect()),
            Repr::Series(s) => {
                let mut s = s.clone();
                s.kernel.scale *= f;
                s.truncation.tail_bound *= f.abs();
                Repr::Series(s)
            }
        };
        Self { parity: self.parity, degree: self.degree, repr, cert: None }
    }
}

#[derive(Serialize)]
struct PolyJson<'a> {
    parity: Parity,
    degree: u64,
    coeffs: Option<Cow<'a, [f64]>>,
    generator: Option<&'a Series>,
    cert: Option<&'a CertRecord>,
}

impl Serialize for ChebPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coeffs = match &self.repr {
            Repr::Coeffs(c) => Some(Cow::Borrowed(c.as_slice())),
            Repr::Series(_) => self.materialize().map(Cow::Owned),
        };
        PolyJson {
            parity: self.parity,
            degree: self.degree,
            coeffs,
            generator: self.series(),
            cert: self.cert.as_ref(),
        }
        .serialize(s)
    }
}
