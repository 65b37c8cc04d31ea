//! The verification battery: plan conditions, error budgets under many
//! discriminator profiles, polynomial certificates, and backend agreement.

use qmle_core::discrim::Profile;
use qmle_core::dist::{make_uniform, make_zipf, Distribution};
use qmle_core::encode::dense::Purification;
use qmle_core::entropy::{check_tail, verify_plan_conditions, ConditionCheck, ConditionReport, Target, TailSpec};
use qmle_core::multilevel::{level_amplitudes, verify_error_budget, Backend, BudgetReport, LevelPlan, PipelineOptions};
use qmle_core::par;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Config, VerifyConfig};
use crate::error::CliError;
use crate::run::build_plan;

/// Allowed dense/block amplitude gap.
pub const BACKEND_TOL: f64 = 1e-9;
/// Evaluation roundoff allowed above the unit cap.
pub const CAP_TOL: f64 = 1e-9;
const CAP_GRID: usize = 4096;

/// Budget fixtures on `n` points: flat, Zipf and halving weights.
pub fn fixtures(n: usize) -> Result<Vec<(String, Distribution)>, CliError> {
    let halving = Distribution::normalized((0..n).map(|i| 0.5f64.powi(i as i32)).collect())?;
    Ok(vec![
        (format!("uniform(n={n})"), make_uniform(n)?),
        (format!("zipf(n={n},s=1)"), make_zipf(n, 1.0)?),
        (format!("halving(n={n})"), halving),
    ])
}

pub fn profiles(adversarial_seeds: u64) -> Vec<Profile> {
    let mut v = vec![Profile::Ideal, Profile::Smooth];
    v.extend((0..adversarial_seeds).map(|seed| Profile::Adversarial { seed }));
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct FailedBudget {
    pub distribution: String,
    pub report: BudgetReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetSummary {
    pub runs: usize,
    pub failures: usize,
    /// Largest deterministic error over its `2 eps / 3` bound.
    pub worst_error_ratio: f64,
    pub localization_checked: usize,
    pub worst_localization_ratio: f64,
    pub completeness_checked: usize,
    pub worst_completeness_ratio: f64,
    pub worst_approximation_ratio: f64,
    pub failed: Vec<FailedBudget>,
}

impl BudgetSummary {
    fn of(runs: Vec<(String, BudgetReport)>) -> Self {
        let mut s = Self {
            runs: runs.len(),
            failures: 0,
            worst_error_ratio: 0.0,
            localization_checked: 0,
            worst_localization_ratio: 0.0,
            completeness_checked: 0,
            worst_completeness_ratio: 0.0,
            worst_approximation_ratio: 0.0,
            failed: Vec::new(),
        };
        for (distribution, r) in runs {
            s.worst_error_ratio = s.worst_error_ratio.max(r.deterministic_error / r.bound);
            s.localization_checked += r.localization.checked;
            s.worst_localization_ratio = s.worst_localization_ratio.max(r.localization.worst_ratio);
            s.completeness_checked += r.completeness.checked;
            s.worst_completeness_ratio = s.worst_completeness_ratio.max(r.completeness.worst_ratio);
            s.worst_approximation_ratio = s.worst_approximation_ratio.max(r.approximation.worst_ratio);
            if !r.passed() {
                s.failures += 1;
                s.failed.push(FailedBudget { distribution, report: r });
            }
        }
        s
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertSummary {
    pub polys: usize,
    pub failed_levels: Vec<usize>,
    /// Largest `|P|` on a uniform grid of `[-1, 1]`, measured here.
    pub worst_cap: f64,
    pub worst_sup_ratio: f64,
}

impl CertSummary {
    pub fn passed(&self) -> bool {
        self.failed_levels.is_empty() && self.worst_cap <= 1.0 + CAP_TOL
    }
}

pub fn certificate_summary(plan: &LevelPlan) -> CertSummary {
    let per_level = par::map_slice(&plan.polys, |p| {
        let cap = (0..CAP_GRID)
            .map(|i| -1.0 + 2.0 * i as f64 / (CAP_GRID - 1) as f64)
            .map(|x| p.eval(x).map_or(f64::INFINITY, f64::abs))
            .fold(0.0, f64::max);
        let (ok, ratio) = match p.cert() {
            Some(c) => (c.passed(), c.sup_error / c.tol),
            None => (false, f64::INFINITY),
        };
        (ok, ratio, cap)
    });
    let mut s = CertSummary { polys: plan.m, failed_levels: Vec::new(), worst_cap: 0.0, worst_sup_ratio: 0.0 };
    for (k, (ok, ratio, cap)) in per_level.into_iter().enumerate() {
        if !ok {
            s.failed_levels.push(k + 1);
        }
        s.worst_sup_ratio = s.worst_sup_ratio.max(ratio);
        s.worst_cap = s.worst_cap.max(cap);
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanCheck {
    pub target: Target,
    /// Planner input; `None` for plans that do not depend on `n`.
    pub n: Option<usize>,
    pub eps: f64,
    pub m: usize,
    pub conditions: ConditionReport,
    /// Worst-case tail over every distribution on `n` points, where it is
    /// reported without gating.
    pub worst_case_tail: Option<ConditionCheck>,
    pub certificates: CertSummary,
    pub budget: BudgetSummary,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BackendCase {
    pub case: usize,
    pub plan: String,
    pub probs: Vec<f64>,
    pub purification: Purification,
    pub max_diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BackendComparison {
    pub tolerance: f64,
    pub max_diff: f64,
    pub cases: Vec<BackendCase>,
    pub passed: bool,
}

/// Random distributions on at most eight points, each compared level by
/// level under a fixed and a seeded random purification.
pub fn compare_backends(
    cases: usize,
    seed: u64,
    plans: &[(String, LevelPlan)],
    opts: &PipelineOptions,
) -> Result<BackendComparison, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::new();
    for case in 0..cases {
        let n = rng.random_range(1..=8usize);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let p = Distribution::normalized(w)?;
        let (label, _) = &plans[case % plans.len()];
        for purification in [Purification::Fixed, Purification::RandomSeeded(rng.random())] {
            jobs.push((case, case % plans.len(), label.clone(), p.clone(), purification));
        }
    }
    let results = par::map_slice(&jobs, |(case, k, label, p, purification)| {
        let plan = &plans[*k].1;
        let block = level_amplitudes(p, plan, Backend::Block, opts)?;
        let dense = level_amplitudes(p, plan, Backend::Dense { purification: *purification }, opts)?;
        let max_diff = block.iter().zip(&dense).map(|(b, d)| (b.0 - d.0).abs()).fold(0.0, f64::max);
        Ok::<_, CliError>(BackendCase {
            case: *case,
            plan: label.clone(),
            probs: p.probs().to_vec(),
            purification: *purification,
            max_diff,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let max_diff = results.iter().map(|c| c.max_diff).fold(0.0, f64::max);
    Ok(BackendComparison { tolerance: BACKEND_TOL, max_diff, passed: max_diff <= BACKEND_TOL, cases: results })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutput {
    pub config: Config,
    pub plans: Vec<PlanCheck>,
    pub backends: BackendComparison,
    pub passed: bool,
}

/// One plan to check, with the point counts of its budget fixtures.
struct Job {
    target: Target,
    planner_n: Option<usize>,
    eps: f64,
    fixture_ns: Vec<usize>,
}

fn jobs(v: &VerifyConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for &eps in &v.eps {
        for &q in &v.q {
            let target = Target::Tsallis { q };
            if q < 1.0 {
                out.extend(v.n.iter().map(|&n| Job { target, planner_n: Some(n), eps, fixture_ns: vec![n] }));
            } else {
                out.push(Job { target, planner_n: None, eps, fixture_ns: v.n.clone() });
            }
        }
        if v.shannon {
            out.extend(v.n.iter().map(|&n| Job { target: Target::Shannon, planner_n: Some(n), eps, fixture_ns: vec![n] }));
        }
    }
    out
}

fn check_plan(job: &Job, v: &VerifyConfig, base: &PipelineOptions) -> Result<PlanCheck, CliError> {
    let tail_n = job.planner_n.unwrap_or_else(|| job.fixture_ns.iter().copied().max().unwrap_or(1));
    let mut plan = build_plan(job.target, tail_n, job.eps)?;
    if v.sabotage_bounds {
        plan = plan.with_scaled_bounds(0.5)?;
    }
    let dists: Vec<(String, Distribution)> =
        job.fixture_ns.iter().map(|&n| fixtures(n)).collect::<Result<Vec<_>, _>>()?.into_iter().flatten().collect();

    let mut conditions = verify_plan_conditions(&plan, TailSpec::WorstCase { n: tail_n })?;
    let mut worst_case_tail = None;
    if job.target == Target::Shannon {
        // The smallest-m level count meets the tail only on concrete inputs.
        let worst = dists
            .iter()
            .map(|(_, p)| check_tail(&plan, TailSpec::Distribution(p)))
            .max_by(|a, b| a.worst_ratio.total_cmp(&b.worst_ratio))
            .expect("fixtures are non-empty");
        let slot = conditions.checks.iter_mut().find(|c| c.name == "tail").expect("tail check");
        worst_case_tail = Some(std::mem::replace(slot, worst));
    }

    let profiles = profiles(v.adversarial_seeds);
    let pairs: Vec<(usize, Profile)> =
        (0..dists.len()).flat_map(|d| profiles.iter().map(move |&p| (d, p))).collect();
    let runs = par::map_slice(&pairs, |&(d, profile)| {
        let opts = PipelineOptions { profile, ..*base };
        verify_error_budget(&dists[d].1, &plan, &opts).map(|r| (dists[d].0.clone(), r))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let budget = BudgetSummary::of(runs);
    let certificates = certificate_summary(&plan);
    let passed = conditions.passed() && budget.passed() && certificates.passed();
    Ok(PlanCheck {
        target: job.target,
        n: job.planner_n,
        eps: job.eps,
        m: plan.m,
        conditions,
        worst_case_tail,
        certificates,
        budget,
        passed,
    })
}

/// Plans used for the backend comparison: one per planner family.
pub fn backend_plans(eps: f64) -> Result<Vec<(String, LevelPlan)>, CliError> {
    Ok(vec![
        ("tsallis(q=0.5,n=8)".into(), build_plan(Target::Tsallis { q: 0.5 }, 8, eps)?),
        ("tsallis(q=2)".into(), build_plan(Target::Tsallis { q: 2.0 }, 8, eps)?),
        ("shannon(n=8)".into(), build_plan(Target::Shannon, 8, eps)?),
    ])
}

pub fn verify(cfg: &Config) -> Result<VerifyOutput, CliError> {
    let v = &cfg.verify;
    let plans = jobs(v).iter().map(|j| check_plan(j, v, &cfg.pipeline)).collect::<Result<Vec<_>, _>>()?;
    let eps = v.eps.iter().copied().fold(cfg.eps, f64::max);
    let backends = compare_backends(v.backend_cases, cfg.seed, &backend_plans(eps)?, &cfg.pipeline)?;
    let passed = backends.passed && plans.iter().all(|p| p.passed);
    Ok(VerifyOutput { config: cfg.clone(), plans, backends, passed })
}
