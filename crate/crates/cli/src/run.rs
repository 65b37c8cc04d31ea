//! Repeated estimator runs and parameter sweeps.

use std::io::Write;

use qmle_core::dist::Distribution;
use qmle_core::entropy::{estimate_with_plan, Target};
use qmle_core::multilevel::{Backend, EstimateReport, LevelPlan, PipelineOptions};
use qmle_core::par;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Config, DistSource};
use crate::error::CliError;
use crate::fit::{log_log_fit, LineFit};

pub fn trial_seed(base: u64, k: u64) -> u64 {
    base.wrapping_add(k)
}

/// Shannon plans need two points even for a point mass.
pub fn build_plan(target: Target, n: usize, eps: f64) -> Result<LevelPlan, CliError> {
    let n = match target {
        Target::Shannon => n.max(2),
        Target::Tsallis { q } if q == 1.0 => n.max(2),
        _ => n,
    };
    Ok(target.plan(n, eps)?)
}

/// Order parameter shown in sweep rows: `q`, `alpha`, or 1 for Shannon.
pub fn order(target: Target) -> f64 {
    match target {
        Target::Tsallis { q } => q,
        Target::Renyi { alpha } => alpha,
        Target::Shannon => 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub value: f64,
    pub abs_error: f64,
    pub success: bool,
    pub report: EstimateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub trials: u64,
    pub successes: u64,
    pub success_fraction: f64,
    pub mean_abs_error: f64,
    pub mean_queries: f64,
    pub max_queries: u128,
}

impl Summary {
    fn of(trials: &[TrialRecord]) -> Self {
        let k = trials.len() as f64;
        let successes = trials.iter().filter(|t| t.success).count() as u64;
        Self {
            trials: trials.len() as u64,
            successes,
            success_fraction: successes as f64 / k,
            mean_abs_error: trials.iter().map(|t| t.abs_error).sum::<f64>() / k,
            mean_queries: trials.iter().map(|t| t.report.queries_total as f64).sum::<f64>() / k,
            max_queries: trials.iter().map(|t| t.report.queries_total).max().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateOutput {
    pub config: Config,
    pub distribution: String,
    pub exact: f64,
    pub plan: LevelPlan,
    pub summary: Summary,
    pub trials: Vec<TrialRecord>,
}

pub struct TrialSetup<'a> {
    pub target: Target,
    pub p: &'a Distribution,
    pub plan: &'a LevelPlan,
    pub backend: Backend,
    pub opts: &'a PipelineOptions,
    pub exact: f64,
    pub eps: f64,
}

impl TrialSetup<'_> {
    pub fn run(&self, trial: u64, seed: u64) -> Result<TrialRecord, CliError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = estimate_with_plan(self.target, self.p, self.plan, self.backend, self.opts, &mut rng)?;
        let abs_error = (e.value - self.exact).abs();
        Ok(TrialRecord { trial, seed, value: e.value, abs_error, success: abs_error <= self.eps, report: e.report })
    }
}

pub fn estimate(cfg: &Config) -> Result<EstimateOutput, CliError> {
    let p = cfg.distribution.load()?;
    let plan = build_plan(cfg.functional, p.n(), cfg.eps)?;
    let exact = cfg.functional.exact(&p)?;
    let setup = TrialSetup {
        target: cfg.functional,
        p: &p,
        plan: &plan,
        backend: cfg.backend,
        opts: &cfg.pipeline,
        exact,
        eps: cfg.eps,
    };
    let trials = par::map_indices(cfg.trials as usize, |k| setup.run(k as u64, trial_seed(cfg.seed, k as u64)))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EstimateOutput {
        config: cfg.clone(),
        distribution: cfg.distribution.label(),
        exact,
        summary: Summary::of(&trials),
        plan,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub q: f64,
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    pub queries_total: u128,
    pub abs_error: f64,
    pub success: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub n: usize,
    pub eps: f64,
    pub distribution: String,
    pub exact: f64,
    pub mean_queries: f64,
    pub success_fraction: f64,
    pub plan: LevelPlan,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxisFit {
    /// `inv_eps` or `n`.
    pub axis: String,
    /// Value of the other sweep parameter.
    pub fixed: f64,
    pub x: Vec<f64>,
    pub mean_queries: Vec<f64>,
    pub fit: Option<LineFit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub config: Config,
    pub fits: Vec<AxisFit>,
    pub points: Vec<SweepPoint>,
    #[serde(skip)]
    pub rows: Vec<SweepRow>,
}

impl SweepOutput {
    pub fn fit(&self, axis: &str) -> Option<&LineFit> {
        self.fits.iter().find(|f| f.axis == axis).and_then(|f| f.fit.as_ref())
    }
}

pub fn scale_sweep(cfg: &Config) -> Result<SweepOutput, CliError> {
    let eps_axis = if cfg.sweep.eps.is_empty() { vec![cfg.eps] } else { cfg.sweep.eps.clone() };
    let sources: Vec<DistSource> = if cfg.sweep.n.is_empty() {
        vec![cfg.distribution.clone()]
    } else {
        cfg.sweep.n.iter().map(|&n| cfg.distribution.with_n(n)).collect::<Result<_, _>>()?
    };
    if cfg.sweep.seeds == 0 {
        return Err(CliError::Config("sweep.seeds must be positive".into()));
    }
    let dists: Vec<Distribution> = sources.iter().map(DistSource::load).collect::<Result<_, _>>()?;
    let grid: Vec<(usize, f64)> =
        (0..dists.len()).flat_map(|d| eps_axis.iter().map(move |&e| (d, e))).collect();
    let plans = par::map_slice(&grid, |&(d, eps)| build_plan(cfg.functional, dists[d].n(), eps))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let exacts: Vec<f64> = dists.iter().map(|p| cfg.functional.exact(p)).collect::<Result<_, _>>()?;

    let seeds = cfg.sweep.seeds;
    let jobs: Vec<(usize, u64)> = (0..grid.len()).flat_map(|g| (0..seeds).map(move |s| (g, s))).collect();
    let records = par::map_slice(&jobs, |&(g, s)| {
        let (d, eps) = grid[g];
        let setup = TrialSetup {
            target: cfg.functional,
            p: &dists[d],
            plan: &plans[g],
            backend: cfg.backend,
            opts: &cfg.pipeline,
            exact: exacts[d],
            eps,
        };
        setup.run(s, trial_seed(cfg.seed, s))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let mut rows: Vec<SweepRow> = jobs
        .iter()
        .zip(&records)
        .map(|(&(g, _), r)| SweepRow {
            q: order(cfg.functional),
            n: dists[grid[g].0].n(),
            eps: grid[g].1,
            seed: r.seed,
            queries_total: r.report.queries_total,
            abs_error: r.abs_error,
            success: r.success,
        })
        .collect();
    rows.sort_by(|a, b| a.seed.cmp(&b.seed).then(a.n.cmp(&b.n)).then(b.eps.total_cmp(&a.eps)));

    let points: Vec<SweepPoint> = grid
        .iter()
        .enumerate()
        .map(|(g, &(d, eps))| {
            let recs = &records[g * seeds as usize..(g + 1) * seeds as usize];
            SweepPoint {
                n: dists[d].n(),
                eps,
                distribution: sources[d].label(),
                exact: exacts[d],
                mean_queries: recs.iter().map(|r| r.report.queries_total as f64).sum::<f64>() / seeds as f64,
                success_fraction: recs.iter().filter(|r| r.success).count() as f64 / seeds as f64,
                plan: plans[g].clone(),
            }
        })
        .collect();

    let mut fits = Vec::new();
    if eps_axis.len() > 1 {
        for d in &dists {
            let pts: Vec<&SweepPoint> = points.iter().filter(|p| p.n == d.n()).collect();
            fits.push(axis_fit("inv_eps", d.n() as f64, &pts, |p| 1.0 / p.eps));
        }
    }
    if dists.len() > 1 {
        for &eps in &eps_axis {
            let pts: Vec<&SweepPoint> = points.iter().filter(|p| p.eps == eps).collect();
            fits.push(axis_fit("n", eps, &pts, |p| p.n as f64));
        }
    }
    Ok(SweepOutput { config: cfg.clone(), fits, points, rows })
}

fn axis_fit(axis: &str, fixed: f64, pts: &[&SweepPoint], x: impl Fn(&SweepPoint) -> f64) -> AxisFit {
    let xs: Vec<f64> = pts.iter().map(|p| x(p)).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.mean_queries).collect();
    AxisFit { axis: axis.into(), fixed, fit: log_log_fit(&xs, &ys), x: xs, mean_queries: ys }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
