//! Level plans for power sums and Shannon entropy, checks of the conditions
//! a plan must meet, and the end-to-end entropy estimators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{invalid, Error, Result};
use crate::multilevel::{
    level_deviation, run_estimate, Backend, EstimateReport, FunctionalKind, FunctionalSpec, LevelPlan,
    PipelineOptions,
};
use crate::par;
use crate::poly::{build_neg_power, build_pos_power, build_sqrt_log, cap_check, SqrtLogBounds, CAP_SLACK};

/// Grid points per level for the condition checks.
pub const CONDITION_GRID: usize = 2048;

/// `ceil(x)` that ignores roundoff just above an integer.
fn ceil_tight(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r.max(1.0) as usize
    } else {
        x.ceil().max(1.0) as usize
    }
}

fn check_eps(eps: f64, hi: f64) -> Result<()> {
    if !(eps > 0.0 && eps < hi) {
        return Err(invalid(format!("eps {eps} outside (0, {hi})")));
    }
    Ok(())
}

fn dyadic_phis(m: usize) -> Vec<f64> {
    (0..m + 3).map(|j| 2f64.powi(-(j as i32))).collect()
}

/// Power-sum plan for `0 < q < 1`.
pub fn plan_tsallis_lt1(q: f64, n: usize, eps: f64) -> Result<LevelPlan> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid(format!("q = {q} outside (0, 1)")));
    }
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    check_eps(eps, 1.0)?;
    let c = 2f64.powf(3.0 - q);
    let m = ceil_tight((3.0 * (1.0 + c) * n as f64 / eps).log2() / (2.0 * q));
    let mf = m as f64;
    let b = (1..=m + 1).map(|j| 4.0 * 2f64.powf(2.0 * j as f64 * (1.0 - q))).collect();
    let polys = par::map_indices(m, |k| {
        let j = (k + 1) as f64;
        let eps_j = eps / (96.0 * 2f64.powf(2.0 * (j + 1.0) * (1.0 - q)) * mf);
        build_neg_power(1.0 - q, 2f64.powf(-j - 2.0), eps_j)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    LevelPlan::new(FunctionalSpec::power(q, c), eps, 2.0, dyadic_phis(m), b, polys)
}

/// Power-sum plan for `q > 1`; independent of `n`.
pub fn plan_tsallis_gt1(q: f64, eps: f64) -> Result<LevelPlan> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(invalid(format!("q = {q} must exceed 1")));
    }
    check_eps(eps, 0.5)?;
    let m = ceil_tight((9.0 / eps).log2() / (2.0 * (q - 1.0)));
    let mf = m as f64;
    let b: Vec<f64> = (1..=m + 1).map(|j| 2f64.powf(2.0 - 2.0 * (j as f64 - 2.0) * (q - 1.0))).collect();
    let mut phis = dyadic_phis(m);
    phis[m + 2] = 0.0;
    let polys = par::map_indices(m, |k| {
        let j = k + 1;
        let bj = b[k];
        let mut eps_j = eps / (24.0 * mf * bj);
        if j == m {
            eps_j = eps_j.min(eps / (2f64.powf(1.0 + (mf + 2.0) * (q - 1.0)) * bj));
        }
        build_pos_power(q - 1.0, phis[j + 1] / 2.0, phis[j - 1] / 2.0, eps_j)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    LevelPlan::new(FunctionalSpec::power(q, 2.0), eps, 2.0, phis, b, polys)
}

/// Smallest `m >= 1` with `2^m / sqrt(m) >= sqrt(n / eps)`.
pub fn shannon_levels(n: usize, eps: f64) -> usize {
    let target = (n as f64 / eps).sqrt();
    (1..).find(|&m: &usize| 2f64.powi(m as i32) / (m as f64).sqrt() >= target * (1.0 - 1e-12)).unwrap()
}

/// Shannon-entropy plan with `g(x) = -ln x`.
pub fn plan_shannon(n: usize, eps: f64) -> Result<LevelPlan> {
    if n < 2 {
        return Err(invalid("Shannon plans need n >= 2"));
    }
    check_eps(eps, 1.0)?;
    let m = shannon_levels(n, eps);
    let tol = eps / (12.0 * m as f64);
    let b = (1..=m + 1).map(|j| SqrtLogBounds::for_level(j as u32).b_j).collect();
    let polys = par::map_indices(m, |k| build_sqrt_log(k as u32 + 1, tol)).into_iter().collect::<Result<Vec<_>>>()?;
    LevelPlan::new(FunctionalSpec::neg_log(1.0), eps, 2.0, dyadic_phis(m), b, polys)
}

/// Which distributions the tail condition is evaluated over.
#[derive(Debug, Clone, Copy)]
pub enum TailSpec<'a> {
    /// Worst case over all distributions on `n` points.
    WorstCase { n: usize },
    Distribution(&'a Distribution),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: String,
    pub passed: bool,
    /// Largest `lhs / bound` over the checked points.
    pub worst_ratio: f64,
    /// Level where the worst ratio occurs, if the check is per level.
    pub worst_level: Option<usize>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tally {
    name: &'static str,
    passed: bool,
    worst: f64,
    level: Option<usize>,
    points: usize,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self { name, passed: true, worst: 0.0, level: None, points: 0 }
    }

    fn record(&mut self, lhs: f64, bound: f64, level: Option<usize>) {
        self.points += 1;
        if !(lhs <= bound) {
            self.passed = false;
        }
        let r = if bound > 0.0 { lhs / bound } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
        if r.is_nan() || r > self.worst {
            self.worst = if r.is_nan() { f64::INFINITY } else { r };
            self.level = level;
        }
    }

    fn finish(self) -> ConditionCheck {
        ConditionCheck {
            name: self.name.into(),
            passed: self.passed,
            worst_ratio: self.worst,
            worst_level: self.level,
            points: self.points,
        }
    }
}

/// Geometric grid on `(lo, hi]` that includes `hi` and approaches `lo`.
fn open_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let ratio = hi / lo;
    (0..k)
        .map(|i| {
            let t = 1.0 - i as f64 / k as f64;
            if i + 1 == k {
                lo * (1.0 + 1e-12)
            } else {
                lo * ratio.powf(t)
            }
        })
        .collect()
}

/// Worst case of `sum_i p_i |g(p_i)|` over distributions whose entries all
/// satisfy `sqrt(p_i) <= phi`.
fn worst_tail(f: &FunctionalSpec, n: usize, phi: f64) -> f64 {
    let cap = phi * phi;
    match f.kind {
        // Concave summands: spreading evenly is worst.
        FunctionalKind::Power { q } if q < 1.0 => {
            let p = cap.min(1.0 / n as f64);
            n as f64 * p.powf(q)
        }
        FunctionalKind::Power { q } => cap.powf(q - 1.0) * (n as f64 * cap).min(1.0),
        FunctionalKind::NegLog => {
            let p = cap.min(1.0 / n as f64).min((-1.0f64).exp());
            n as f64 * f.weighted(p).abs()
        }
    }
}

/// Grid checks of the four level conditions plus the interval bounds `B_j`.
pub fn verify_plan_conditions(plan: &LevelPlan, tail: TailSpec<'_>) -> Result<ConditionReport> {
    let m = plan.m;
    let mf = m as f64;
    let f = &plan.functional;

    let mut bounds = Tally::new("interval_bounds");
    for j in 1..=m + 1 {
        let worst = open_grid(plan.phis[j], plan.phis[j - 1], CONDITION_GRID)
            .into_iter()
            .map(|x| f.g(x * x).abs())
            .fold(0.0, f64::max);
        bounds.record(2.0 * worst, plan.b[j], Some(j));
    }

    let mut cap = Tally::new("bounded_levels");
    for j in 1..=m {
        let poly = plan.poly(j);
        let (_, max) = cap_check(poly);
        let stored = poly.cert().map_or(f64::INFINITY, |c| c.cap_max);
        cap.record(max.max(stored), 1.0 + CAP_SLACK, Some(j));
    }

    let mut approx = Tally::new("level_approximation");
    let per_level = par::map_indices(m, |k| {
        let j = k + 1;
        open_grid(plan.phis[j + 1], plan.phis[j - 1], CONDITION_GRID)
            .into_iter()
            .map(|x| level_deviation(plan, j, x))
            .collect::<Result<Vec<f64>>>()
    });
    for (k, devs) in per_level.into_iter().enumerate() {
        for d in devs? {
            approx.record(d, plan.eps / (12.0 * mf), Some(k + 1));
        }
    }

    let mut last = Tally::new("last_level");
    let pm = plan.poly(m);
    let tail_err = pm.representation_error();
    for x in open_grid(plan.phis[m + 1], plan.phis[m], CONDITION_GRID) {
        let v = pm.eval(0.5 * x)?.abs() + tail_err;
        last.record(plan.b[m] * v * v, f.c * f.g(x * x).abs(), Some(m));
    }

    Ok(ConditionReport {
        checks: vec![bounds.finish(), cap.finish(), approx.finish(), last.finish(), check_tail(plan, tail)],
    })
}

/// `sum over sqrt(p_i) <= phi_m of p_i |g(p_i)|` against `eps / (3 (1 + C))`.
pub fn check_tail(plan: &LevelPlan, tail: TailSpec<'_>) -> ConditionCheck {
    let f = &plan.functional;
    let phi_m = plan.phis[plan.m];
    let tail_sum = match tail {
        TailSpec::WorstCase { n } => worst_tail(f, n, phi_m),
        TailSpec::Distribution(p) => p.probs().iter().filter(|&&x| x.sqrt() <= phi_m).map(|&x| f.weighted(x).abs()).sum(),
    };
    let mut t = Tally::new("tail");
    t.record(tail_sum, plan.eps / (3.0 * (1.0 + f.c)), None);
    t.finish()
}

/// Functional to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Target {
    Tsallis { q: f64 },
    Shannon,
    Renyi { alpha: f64 },
}

impl Target {
    pub fn exact(&self, p: &Distribution) -> Result<f64> {
        match *self {
            Target::Tsallis { q } if q == 1.0 => Ok(crate::dist::exact_shannon(p)),
            Target::Tsallis { q } => crate::dist::exact_tsallis(p, q),
            Target::Shannon => Ok(crate::dist::exact_shannon(p)),
            Target::Renyi { alpha } => crate::dist::exact_renyi(p, alpha),
        }
    }

    /// Plan whose estimate of `sum_i p_i g(p_i)` maps to this target within
    /// `eps`.
    pub fn plan(&self, n: usize, eps: f64) -> Result<LevelPlan> {
        match *self {
            Target::Shannon => plan_shannon(n, eps),
            Target::Tsallis { q } if q == 1.0 => plan_shannon(n, eps),
            Target::Tsallis { q } if q > 0.0 && q < 1.0 => plan_tsallis_lt1(q, n, (1.0 - q) * eps),
            Target::Tsallis { q } if q > 1.0 => plan_tsallis_gt1(q, (q - 1.0) * eps),
            Target::Tsallis { q } => Err(invalid(format!("q = {q} must be positive"))),
            Target::Renyi { alpha } if alpha > 0.0 && alpha < 1.0 => plan_tsallis_lt1(alpha, n, (1.0 - alpha) * eps),
            Target::Renyi { alpha } => Err(Error::Unsupported(format!("Renyi order {alpha} outside (0, 1)"))),
        }
    }

    /// Maps an estimate of the plan's functional to this target.
    pub fn convert(&self, functional_estimate: f64) -> f64 {
        match *self {
            Target::Shannon => functional_estimate,
            Target::Tsallis { q } if q == 1.0 => functional_estimate,
            Target::Tsallis { q } => (functional_estimate - 1.0) / (1.0 - q),
            // The true power sum is at least 1 for alpha < 1.
            Target::Renyi { alpha } => functional_estimate.max(1.0).ln() / (1.0 - alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub functional_estimate: f64,
    pub report: EstimateReport,
}

/// One run of the estimator on a prepared plan.
pub fn estimate_with_plan<R: Rng + ?Sized>(
    target: Target,
    p: &Distribution,
    plan: &LevelPlan,
    backend: Backend,
    opts: &PipelineOptions,
    rng: &mut R,
) -> Result<Estimate> {
    let report = run_estimate(p, plan, backend, opts, rng)?;
    Ok(Estimate { value: target.convert(report.estimate), functional_estimate: report.estimate, report })
}

pub fn estimate_tsallis<R: Rng + ?Sized>(
    p: &Distribution,
    q: f64,
    eps: f64,
    backend: Backend,
    opts: &PipelineOptions,
    rng: &mut R,
) -> Result<Estimate> {
    let target = Target::Tsallis { q };
    estimate_with_plan(target, p, &target.plan(p.n(), eps)?, backend, opts, rng)
}

pub fn estimate_shannon<R: Rng + ?Sized>(
    p: &Distribution,
    eps: f64,
    backend: Backend,
    opts: &PipelineOptions,
    rng: &mut R,
) -> Result<Estimate> {
    let plan = plan_shannon(p.n().max(2), eps)?;
    estimate_with_plan(Target::Shannon, p, &plan, backend, opts, rng)
}

pub fn estimate_renyi<R: Rng + ?Sized>(
    p: &Distribution,
    alpha: f64,
    eps: f64,
    backend: Backend,
    opts: &PipelineOptions,
    rng: &mut R,
) -> Result<Estimate> {
    let target = Target::Renyi { alpha };
    estimate_with_plan(target, p, &target.plan(p.n(), eps)?, backend, opts, rng)
}

/// Tsallis entropy of the empirical distribution of `samples` (Shannon at `q = 1`).
pub fn classical_plugin_estimate(samples: &[usize], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("no samples"));
    }
    if !(q > 0.0) {
        return Err(invalid(format!("q = {q} must be positive")));
    }
    let n = samples.iter().max().unwrap() + 1;
    let mut counts = vec![0usize; n];
    for &s in samples {
        counts[s] += 1;
    }
    let total = samples.len() as f64;
    let probs = counts.into_iter().filter(|&c| c > 0).map(|c| c as f64 / total);
    if q == 1.0 {
        return Ok(-probs.map(|p| p * p.ln()).sum::<f64>());
    }
    let f: f64 = probs.map(|p| p.powf(q)).sum();
    Ok((f - 1.0) / (1.0 - q))
}
