//! Amplitude estimation simulated through its exact outcome distribution.
//!
//! With `M = t` grid points and true angle `theta = arcsin(sqrt(a))`, phase
//! estimation returns `y` with the Fejér-kernel probability centred at
//! `theta M / pi`; the estimate is `sin^2(pi y / M)`. The mirrored eigenphase
//! produces `M - y`, which maps to the same estimate, so one branch suffices.
//! Sampling for large `t` enumerates a window around the peak exactly and
//! draws the far tail by rejection from a `1/k^2` envelope.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest grid size accepted for sampling.
pub const MAX_T: u64 = 1 << 52;
/// Largest grid size for which [`ae_distribution`] enumerates every outcome.
pub const MAX_PMF_T: u64 = 1 << 22;

const WINDOW: i64 = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeParams {
    /// Median repetitions are `ceil(boost_constant * ln(2/eta))`.
    pub boost_constant: f64,
}

impl Default for AeParams {
    fn default() -> Self {
        Self { boost_constant: 18.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AEOutcome {
    pub estimate: f64,
    pub grover_calls: u64,
    pub repeats: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoStageOutcome {
    pub estimate: f64,
    pub queries: u128,
    pub rounds: Vec<AEOutcome>,
}

/// Outcome probabilities keyed by estimate, ascending in `y <= M/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AePmf {
    pub m: u64,
    pub points: Vec<(f64, f64)>,
}

impl AePmf {
    /// Probability that the estimate lies within `r` of `a`.
    pub fn mass_within(&self, a: f64, r: f64) -> f64 {
        self.points.iter().filter(|(e, _)| (e - a).abs() <= r).map(|(_, p)| p).sum()
    }
}

fn check_amplitude(a: f64) -> Result<f64> {
    if !(a >= -1e-12 && a <= 1.0 + 1e-12) {
        return Err(invalid(format!("amplitude {a} outside [0, 1]")));
    }
    Ok(a.clamp(0.0, 1.0))
}

fn check_t(t: u64) -> Result<()> {
    if t == 0 {
        return Err(invalid("t must be positive"));
    }
    if t > MAX_T {
        return Err(Error::Unsupported(format!("t = {t} exceeds {MAX_T}")));
    }
    Ok(())
}

/// The peak `theta M / pi = y0 + f` with `0 <= f < 1`.
#[derive(Debug, Clone, Copy)]
struct Peak {
    m: u64,
    y0: u64,
    f: f64,
}

impl Peak {
    fn new(a: f64, m: u64) -> Self {
        let c = a.sqrt().asin() / PI * m as f64;
        let y0 = c.floor();
        Self { m, y0: y0 as u64, f: c - y0 }
    }

    /// Probability of `y = y0 + k (mod M)`.
    fn prob(&self, k: i64) -> f64 {
        let d = self.f - k as f64;
        if d == 0.0 {
            return 1.0;
        }
        let m = self.m as f64;
        let s = (PI * self.f).sin();
        let den = m * (PI * d / m).sin();
        (s * s) / (den * den)
    }

    fn y(&self, k: i64) -> u64 {
        (self.y0 as i128 + k as i128).rem_euclid(self.m as i128) as u64
    }

    fn estimate(&self, y: u64) -> f64 {
        let s = (PI * y as f64 / self.m as f64).sin();
        s * s
    }

    /// Offsets `k` covering every residue exactly once.
    fn k_range(&self) -> (i64, i64) {
        let m = self.m as i64;
        (-((m - 1) / 2), m / 2)
    }
}

/// Exact outcome distribution of amplitude estimation with `t` grid points.
pub fn ae_distribution(a: f64, t: u64) -> Result<AePmf> {
    let a = check_amplitude(a)?;
    check_t(t)?;
    if t > MAX_PMF_T {
        return Err(Error::Unsupported(format!("full pmf for t = {t} above {MAX_PMF_T}")));
    }
    let peak = Peak::new(a, t);
    let mut folded = vec![0.0; (t / 2 + 1) as usize];
    let (lo, hi) = peak.k_range();
    for k in lo..=hi {
        let y = peak.y(k);
        folded[y.min(t - y) as usize] += peak.prob(k);
    }
    let points = folded.into_iter().enumerate().map(|(y, p)| (peak.estimate(y as u64), p)).collect();
    Ok(AePmf { m: t, points })
}

/// Reusable sampler for one `(a, t)`.
struct Sampler {
    peak: Peak,
    /// `(k, cumulative probability)` over the exact window.
    window: Vec<(i64, f64)>,
    tail_lo: i64,
    tail_hi: i64,
}

impl Sampler {
    fn new(a: f64, t: u64) -> Self {
        let peak = Peak::new(a, t);
        let (lo, hi) = peak.k_range();
        let (wlo, whi) = (lo.max(-WINDOW), hi.min(WINDOW));
        let mut acc = 0.0;
        let window = (wlo..=whi)
            .map(|k| {
                acc += peak.prob(k);
                (k, acc)
            })
            .collect();
        Self { peak, window, tail_lo: lo, tail_hi: hi }
    }

    fn sample_k<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.random();
        let mass = self.window.last().map_or(0.0, |w| w.1);
        if u < mass || self.tail_lo >= -WINDOW && self.tail_hi <= WINDOW {
            let idx = self.window.partition_point(|w| w.1 <= u).min(self.window.len() - 1);
            return self.window[idx].0;
        }
        // Proposal: P(|k| >= K) = W / (K - 1) for K > W, random sign.
        let w = WINDOW as f64;
        let bound = (w + 1.0) / (2.0 * w * w);
        loop {
            let v: f64 = 1.0 - rng.random::<f64>();
            let mag = (w / v).floor() + 1.0;
            if mag > 9.0e15 {
                continue;
            }
            let k = if rng.random::<bool>() { mag as i64 } else { -(mag as i64) };
            if k < self.tail_lo || k > self.tail_hi {
                continue;
            }
            let q = w / (2.0 * mag * (mag - 1.0));
            if rng.random::<f64>() * bound <= self.peak.prob(k) / q {
                return k;
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.peak.estimate(self.peak.y(self.sample_k(rng)))
    }
}

impl AeParams {
    pub fn repeats(&self, eta: f64) -> u64 {
        (self.boost_constant * (2.0 / eta).ln()).ceil().max(1.0) as u64
    }

    /// Lower median of `repeats(eta)` independent estimates.
    pub fn median_boosted<R: Rng + ?Sized>(&self, a: f64, t: u64, eta: f64, rng: &mut R) -> Result<AEOutcome> {
        let a = check_amplitude(a)?;
        check_t(t)?;
        if !(eta > 0.0 && eta < 1.0) {
            return Err(invalid(format!("eta {eta} outside (0, 1)")));
        }
        let r = self.repeats(eta);
        let sampler = Sampler::new(a, t);
        let mut xs: Vec<f64> = (0..r).map(|_| sampler.sample(rng)).collect();
        xs.sort_by(f64::total_cmp);
        Ok(AEOutcome { estimate: xs[(xs.len() - 1) / 2], grover_calls: t, repeats: r })
    }

    /// Coarse stage, then a refined stage unless the coarse estimate is at
    /// most `3 eps / 4`. `queries` charges `(2t + 1) * cost_v` per run.
    pub fn two_stage<R: Rng + ?Sized>(
        &self,
        a: f64,
        cost_v: u128,
        eps: f64,
        eta: f64,
        rng: &mut R,
    ) -> Result<TwoStageOutcome> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(invalid(format!("eps {eps} outside (0, 1]")));
        }
        let t1 = ceil_t(PI * (80.0 / eps).sqrt())?;
        let first = self.median_boosted(a, t1, eta, rng)?;
        let mut rounds = vec![first];
        let estimate = if first.estimate <= 0.75 * eps {
            0.0
        } else {
            let t2 = ceil_t((4.0 * PI * (2.0 * first.estimate).sqrt() / eps).max(PI * (2.0 / eps).sqrt()))?;
            let second = self.median_boosted(a, t2, eta, rng)?;
            rounds.push(second);
            second.estimate
        };
        let queries = rounds.iter().try_fold(0u128, |acc, r| {
            u128::from(r.grover_calls)
                .checked_mul(2)
                .and_then(|x| x.checked_add(1))
                .and_then(|x| x.checked_mul(u128::from(r.repeats)))
                .and_then(|x| x.checked_mul(cost_v))
                .and_then(|x| x.checked_add(acc))
        });
        let queries = queries.ok_or(Error::QueryOverflow { level: 0 })?;
        Ok(TwoStageOutcome { estimate, queries, rounds })
    }
}

fn ceil_t(x: f64) -> Result<u64> {
    let t = x.ceil();
    if !(t >= 1.0 && t <= MAX_T as f64) {
        return Err(Error::Unsupported(format!("grid size {x:e} outside [1, {MAX_T}]")));
    }
    Ok(t as u64)
}

pub fn median_boosted_ae<R: Rng + ?Sized>(a: f64, t: u64, eta: f64, rng: &mut R) -> Result<AEOutcome> {
    AeParams::default().median_boosted(a, t, eta, rng)
}

pub fn two_stage_ae<R: Rng + ?Sized>(
    a: f64,
    cost_v: u128,
    eps: f64,
    eta: f64,
    rng: &mut R,
) -> Result<TwoStageOutcome> {
    AeParams::default().two_stage(a, cost_v, eps, eta, rng)
}
