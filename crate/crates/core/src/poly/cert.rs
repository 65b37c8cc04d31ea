//! Grid certification of polynomial approximations.

use serde::Serialize;

use super::{cheb, ChebPoly, Repr};
use crate::par;

/// Roundoff allowance on the cap `|P| <= 1`.
pub const CAP_SLACK: f64 = 1e-9;

const UNIFORM_MAX: u64 = 1 << 15;
const CHEB_NODE_MAX: usize = 1 << 22;

/// A one-sided bound checked on a grid; `worst` is the largest violation,
/// so the check passes when `worst <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideCheck {
    pub label: String,
    pub interval: (f64, f64),
    pub worst: f64,
    pub grid_points: usize,
}

impl SideCheck {
    pub fn passed(&self) -> bool {
        self.worst <= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertRecord {
    pub interval: (f64, f64),
    pub sup_error: f64,
    pub tol: f64,
    pub cap_ok: bool,
    pub cap_max: f64,
    pub grid_points: usize,
    pub checks: Vec<SideCheck>,
}

impl CertRecord {
    pub fn passed(&self) -> bool {
        self.sup_error <= self.tol && self.cap_ok && self.checks.iter().all(SideCheck::passed)
    }
}

fn push_geometric(out: &mut Vec<f64>, a: f64, b: f64, per_octave: f64, sign: f64) {
    if !(b > 0.0) {
        return;
    }
    let floor = if a > 0.0 { a } else { b * 1e-13 };
    let octaves = (b / floor).log2().min(64.0);
    let n = (octaves * per_octave).ceil().max(1.0) as usize;
    for k in 0..=n {
        out.push(sign * floor * (b / floor).powf(k as f64 / n as f64));
    }
}

/// Evaluation points for `[lo, hi]`: uniform, log-spaced toward zero, and
/// dense around every feature of a kernel-backed polynomial.
fn grid_points(poly: &ChebPoly, lo: f64, hi: f64) -> Vec<f64> {
    let n_u = poly.degree().saturating_mul(8).clamp(1024, UNIFORM_MAX) as usize;
    let mut xs: Vec<f64> = (0..=n_u).map(|k| lo + (hi - lo) * k as f64 / n_u as f64).collect();
    let per_octave = if poly.coeffs().is_some() { 32.0 } else { 256.0 };
    push_geometric(&mut xs, lo.max(0.0), hi, per_octave, 1.0);
    push_geometric(&mut xs, (-hi).max(0.0), -lo, per_octave, -1.0);
    if let Some(s) = poly.series() {
        for (c, w) in s.kernel.features() {
            for k in 0..=128 {
                let x = c + w * (16.0 * k as f64 / 128.0 - 8.0);
                xs.push(x);
                xs.push(-x);
            }
        }
    }
    xs.retain(|x| *x >= lo && *x <= hi);
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    xs
}

/// `(x, P(x))` pairs on the certification grid of `[lo, hi]`.
fn sample(poly: &ChebPoly, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let xs = grid_points(poly, lo, hi);
    let mut out = par::map_slice(&xs, |&x| (x, poly.value(x)));
    if let Repr::Coeffs(c) = &poly.repr {
        let n = (8 * c.len()).next_power_of_two();
        if c.len() > UNIFORM_MAX as usize / 8 && n <= CHEB_NODE_MAX {
            let vals = cheb::values_at_nodes(c, n);
            out.extend(
                cheb::nodes(n).into_iter().zip(vals).filter(|(x, _)| *x >= lo && *x <= hi),
            );
        }
    }
    out
}

fn worst(samples: &[(f64, f64)], f: impl Fn(f64, f64) -> f64) -> f64 {
    samples.iter().map(|&(x, v)| f(x, v)).fold(f64::NEG_INFINITY, |a, b| {
        if a.is_nan() || b.is_nan() {
            f64::NAN
        } else {
            a.max(b)
        }
    })
}

/// Largest `|P|` on a grid of `[-1, 1]` and whether it respects the cap.
pub fn cap_check(poly: &ChebPoly) -> (bool, f64) {
    let mut samples = sample(poly, 0.0, 1.0);
    samples.extend((0..=4096).map(|k| {
        let x = -1.0 + 2.0 * k as f64 / 4096.0;
        (x, poly.value(x))
    }));
    let m = worst(&samples, |_, v| v.abs()) + poly.representation_error();
    (m <= 1.0 + CAP_SLACK, m)
}

/// Measures `max |P(x) - target(x)|` over a grid of `interval`.
pub fn certify(
    poly: &ChebPoly,
    target: impl Fn(f64) -> f64 + Sync,
    interval: (f64, f64),
    tol: f64,
) -> CertRecord {
    let rep = poly.representation_error();
    certify_with(poly, interval, tol, |x, v| (v - target(x)).abs() + rep)
}

/// Like [`certify`], with the deviation at `x` computed from `P(x)` by `dev`,
/// which must account for [`ChebPoly::representation_error`] itself.
pub fn certify_with(
    poly: &ChebPoly,
    interval: (f64, f64),
    tol: f64,
    dev: impl Fn(f64, f64) -> f64,
) -> CertRecord {
    let samples = sample(poly, interval.0, interval.1);
    let sup_error = worst(&samples, dev);
    let (cap_ok, cap_max) = cap_check(poly);
    CertRecord {
        interval,
        sup_error,
        tol,
        cap_ok,
        cap_max,
        grid_points: samples.len(),
        checks: Vec::new(),
    }
}

/// Grid check of `excess(x, P(x)) <= 0` on `interval`.
pub fn side_check(
    poly: &ChebPoly,
    label: impl Into<String>,
    interval: (f64, f64),
    excess: impl Fn(f64, f64) -> f64,
) -> SideCheck {
    let samples = sample(poly, interval.0, interval.1);
    SideCheck {
        label: label.into(),
        interval,
        worst: worst(&samples, excess),
        grid_points: samples.len(),
    }
}
