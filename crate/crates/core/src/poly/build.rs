//! Constructions of the power-law and square-root-logarithm approximations.
//!
//! Each builder designs a smooth even function that equals the target on the
//! constrained interval up to a design error, damps it outside, truncates its
//! Chebyshev expansion, rescales below the cap and certifies the result on a
//! grid. A failed certificate tightens the design error and retries.

use std::f64::consts::LN_2;

use serde::Serialize;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::gamma_ur;

use super::cert::{cap_check, certify_with, side_check};
use super::kernel::{Factor, Kernel};
use super::{cheb, ChebPoly, Series};
use crate::error::{invalid, Error, Result};

pub const MAX_ROUNDS: u32 = 6;

/// Largest Chebyshev tail dropped from kernel-backed polynomials; builders
/// tighten it to a sixteenth of their tolerance.
pub const TAIL_TOL: f64 = 1e-13;

/// Constant in the degree audit `deg P_j <= K 2^j ln(1/eps)` for the
/// square-root-logarithm family.
pub const SQRT_LOG_DEGREE_K: f64 = 512.0;

/// Tolerances below this underflow inside the refinement rounds.
const MIN_TOL: f64 = 1e-290;
/// Window edges below this overflow the kernel sharpness.
const MIN_EDGE: f64 = 1e-140;

const CAP_TARGET: f64 = 1.0 - 1e-6;

/// Smallest `u` with `Q(s, u) <= e`.
fn upper_gamma_inverse(s: f64, e: f64) -> f64 {
    let mut hi = 1.0;
    while gamma_ur(s, hi) > e {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_ur(s, mid) > e {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

/// Truncates the kernel and pulls it under the cap.
fn finish(kernel: Kernel, x_power: u32, tol: f64) -> ChebPoly {
    let truncation = kernel.truncation(TAIL_TOL.min(tol / 16.0));
    let poly = ChebPoly::from_series(Series { kernel, x_power, truncation });
    cap_rescale(poly)
}

fn cap_rescale(poly: ChebPoly) -> ChebPoly {
    let (_, cap) = cap_check(&poly);
    if cap > CAP_TARGET {
        poly.scaled(CAP_TARGET / cap)
    } else {
        poly
    }
}

fn check_unit(name: &str, v: f64, lo: f64, hi: f64, hi_open: bool) -> Result<()> {
    let ok = v.is_finite() && v > lo && if hi_open { v < hi } else { v <= hi };
    if ok {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v:e} out of range")))
    }
}

fn neg_power_candidate(c: f64, delta: f64, e: f64, eps: f64) -> ChebPoly {
    let ratio = 2f64.powf(c.recip()).min(4.0);
    let centre = delta / ratio.sqrt();
    let width = (delta - centre) / erfc_inv(2.0 * e);
    let t = upper_gamma_inverse(0.5 * c, e) / (delta * delta);
    let kernel = Kernel {
        scale: 0.5 * delta.powf(c),
        factors: vec![Factor::SatPow { a: c, t }, Factor::HighPass { center: centre, width }],
    };
    finish(kernel, 0, eps)
}

/// Even `P` with `|P(x) - (delta^c / 2) x^-c| <= eps` on `[delta, 1]` and `|P| <= 1`.
pub fn build_neg_power(c: f64, delta: f64, eps: f64) -> Result<ChebPoly> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(format!("exponent must be positive, got {c}")));
    }
    check_unit("delta", delta, MIN_EDGE, 0.5, false)?;
    check_unit("eps", eps, MIN_TOL, 0.5, false)?;
    let target = |x: f64| 0.5 * (delta / x).powf(c);
    let mut best = f64::INFINITY;
    for round in 0..MAX_ROUNDS {
        let e = 0.25 * eps * 0.125f64.powi(round as i32);
        let poly = neg_power_candidate(c, delta, e, eps);
        let rep = poly.representation_error();
        let cert = certify_with(&poly, (delta, 1.0), eps, |x, v| {
            match poly.relative_defect(x, 0.5 * delta.powf(c), -c) {
                Some(r) => target(x) * r.abs() + rep,
                None => (v - target(x)).abs() + rep,
            }
        });
        if cert.passed() {
            return Ok(poly.with_cert(cert));
        }
        best = best.min(cert.sup_error.max(cert.cap_max - 1.0));
    }
    Err(Error::ConstructionFailed { rounds: MAX_ROUNDS, sup_error: best, tol: eps })
}

fn pos_power_candidate(c: f64, nu: f64, beta: f64, e: f64, eta: f64) -> ChebPoly {
    let k = ((0.5 * c).ceil() as u32).max(1);
    let a = 2.0 * k as f64 - c;
    let scale = 2f64.powf(-c - 1.0) * beta.powf(-c);
    let mut factors = Vec::new();
    if a > 1e-12 {
        let t = upper_gamma_inverse(0.5 * a, e) / (nu * nu);
        factors.push(Factor::SatPow { a, t });
    }
    if scale > 0.5 {
        let ratio = 2f64.powf((c + 1.0) / c).min(4.0).min(beta.recip());
        let centre = beta * ratio.sqrt();
        let width = (centre - beta) / erfc_inv(e);
        factors.push(Factor::LowPass { center: centre, width });
    }
    finish(Kernel { scale, factors }, 2 * k, eta)
}

/// Even `S` with `|S| <= 2g` on `[0, nu]`, `|S - g| <= eta` on `[nu, beta]`
/// and `|S| <= 1`, where `g(x) = 2^(-c-1) beta^-c x^c`.
pub fn build_pos_power(c: f64, nu: f64, beta: f64, eta: f64) -> Result<ChebPoly> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(format!("exponent must be positive, got {c}")));
    }
    if !(nu >= MIN_EDGE && nu < beta && beta < 1.0) {
        return Err(invalid(format!("need {MIN_EDGE:e} <= nu < beta < 1, got nu = {nu:e}, beta = {beta:e}")));
    }
    check_unit("eta", eta, MIN_TOL, 0.5, true)?;
    let k = 2f64.powf(-c - 1.0) * beta.powf(-c);
    let g = move |x: f64| k * x.abs().powf(c);
    let mut best = f64::INFINITY;
    for round in 0..MAX_ROUNDS {
        let e = 0.5 * eta * 0.125f64.powi(round as i32);
        let poly = pos_power_candidate(c, nu, beta, e, eta);
        let tail = poly.representation_error();
        let x_power = poly.series().map_or(0, |s| s.x_power) as i32;
        let mut cert = certify_with(&poly, (nu, beta), eta, |x, v| {
            match poly.relative_defect(x, k, c) {
                Some(r) => g(x) * r.abs() + tail,
                None => (v - g(x)).abs() + tail,
            }
        });
        cert.checks.push(side_check(&poly, "|S| <= 2g on [0, nu]", (0.0, nu), |x, v| {
            v.abs() + tail * x.abs().powi(x_power) - 2.0 * g(x)
        }));
        if cert.passed() {
            return Ok(poly.with_cert(cert));
        }
        best = best.min(cert.sup_error.max(cert.cap_max - 1.0));
    }
    Err(Error::ConstructionFailed { rounds: MAX_ROUNDS, sup_error: best, tol: eta })
}

/// Interval bound constants of the square-root-logarithm level `j`:
/// `b_j = 4 j ln 2 = 2 max |ln x^2|` over `(2^-j, 2^-(j-1)]`, and the scale
/// `b_scale = max(b_j, b_(j+1))` multiplying `P_j^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqrtLogBounds {
    pub b_j: f64,
    pub b_scale: f64,
}

impl SqrtLogBounds {
    pub fn for_level(j: u32) -> Self {
        Self { b_j: 4.0 * j as f64 * LN_2, b_scale: 4.0 * (j + 1) as f64 * LN_2 }
    }
}

/// Chebyshev interpolant of `f` on `[lo, hi]`, truncated at machine precision.
fn local_fit(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut n = 64;
    loop {
        let vals: Vec<f64> =
            cheb::nodes(n).into_iter().map(|w| f(0.5 * (lo + hi) + 0.5 * (hi - lo) * w)).collect();
        let c = cheb::coeffs_from_values(&vals);
        let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let settled = c[3 * n / 4..].iter().all(|v| v.abs() <= 1e-15 * scale);
        if settled || n >= 1 << 14 {
            let keep = c.iter().rposition(|v| v.abs() > 1e-17 * scale).unwrap_or(0);
            return c[..=keep].to_vec();
        }
        n *= 2;
    }
}

fn sqrt_log_windowed(j: u32, e: f64) -> ChebPoly {
    let b = SqrtLogBounds::for_level(j).b_scale;
    let (ya, yb) = (2f64.powi(-(j as i32) - 2), 2f64.powi(-(j as i32)));
    let z = erfc_inv(2.0 * e / (12.0 * b));
    let (ca, cb) = (ya * 2f64.powf(-0.25), yb * 2f64.powf(0.25));
    // The series grows quickly past its fit range, so the range extends to
    // where the low-pass window is negligible.
    let (ulo, uhi) = (0.5 * ya * ya, (64.0 * yb * yb).min(0.2));
    let coeffs = local_fit(|u| (-(4.0 * u).ln() / b).sqrt(), ulo, uhi);
    let kernel = Kernel {
        scale: 1.0,
        factors: vec![
            Factor::Local { lo: ulo, hi: uhi, coeffs },
            Factor::HighPass { center: ca, width: (ya - ca) / z },
            Factor::LowPass { center: cb, width: (cb - yb) / z },
        ],
    };
    finish(kernel, 0, e)
}

/// Level 1 reaches the zero of `ln(1/x)` at the band edge, so the target is
/// floored by a softplus before expanding.
fn sqrt_log_first(e: f64) -> Result<ChebPoly> {
    let b = SqrtLogBounds::for_level(1).b_scale;
    let soft = e / (3.0 * b * LN_2);
    let z = erfc_inv(2.0 * e / (12.0 * b));
    let ya = 0.125;
    let ca = ya * 2f64.powf(-0.25);
    let window = Factor::HighPass { center: ca, width: (ya - ca) / z };
    let window_kernel = Kernel { scale: 1.0, factors: vec![window.clone()] };
    let cut = ca - 40.0 * (ya - ca) / z;
    let f = |y: f64| {
        if y.abs() < cut {
            return 0.0;
        }
        let v = -(4.0 * y * y).ln() / b;
        let r = v / soft;
        let sp = if r > 30.0 { v + soft * (-r).exp().ln_1p() } else { soft * r.exp().ln_1p() };
        sp.sqrt() * window_kernel.eval(y)
    };
    let mut n = 4096;
    let coeffs = loop {
        let vals: Vec<f64> = cheb::nodes(n).into_iter().map(f).collect();
        let c = cheb::coeffs_from_values(&vals);
        if c[3 * n / 4..].iter().all(|v| v.abs() <= 1e-6 * e / b) || n >= 1 << 23 {
            break c;
        }
        n *= 2;
    };
    let budget = e / (12.0 * b);
    let mut tail = 0.0;
    let mut keep = coeffs.len() - 1;
    while keep > 0 && tail + coeffs[keep].abs() <= budget {
        tail += coeffs[keep].abs();
        keep -= 1;
    }
    let mut c = coeffs[..=keep].to_vec();
    for ck in c.iter_mut().skip(1).step_by(2) {
        *ck = 0.0;
    }
    Ok(cap_rescale(ChebPoly::from_coeffs(c)?))
}

/// Even `P_j` with `b_scale P_j(y)^2` within `tol` of `-ln(4 y^2)` for
/// `y` in `[2^-(j+2), 2^-j]` (so `x = 2y` covers `(2^-(j+1), 2^-(j-1)]`).
pub fn build_sqrt_log(j: u32, tol: f64) -> Result<ChebPoly> {
    if j == 0 {
        return Err(invalid("level index must be >= 1"));
    }
    check_unit("tol", tol, MIN_TOL, 1.0, true)?;
    let b = SqrtLogBounds::for_level(j).b_scale;
    let band = (2f64.powi(-(j as i32) - 2), 2f64.powi(-(j as i32)));
    let mut best = f64::INFINITY;
    for round in 0..MAX_ROUNDS {
        let e = tol * 0.25f64.powi(round as i32);
        let poly = if j == 1 { sqrt_log_first(e)? } else { sqrt_log_windowed(j, e) };
        let rep = poly.representation_error();
        let cert = certify_with(&poly, band, tol, |x, v| {
            (b * v * v + (4.0 * x * x).ln()).abs() + b * rep * (2.0 * v.abs() + rep)
        });
        if cert.passed() {
            return Ok(poly.with_cert(cert));
        }
        best = best.min(cert.sup_error.max(cert.cap_max - 1.0));
    }
    Err(Error::ConstructionFailed { rounds: MAX_ROUNDS, sup_error: best, tol })
}
