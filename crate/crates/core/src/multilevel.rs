//! The level pipeline and the estimator built on it.
//!
//! Level `j` applies the discriminator `D_(j-1)` to ancilla c, `D_j` to ancilla
//! d and the transformation by `P_j` to ancilla a, then keeps the part with a
//! in `|+>` and flags `d = 0` (level 1) or `(c, d) = (1, 0)` (deeper levels).
//! Amplitude estimation reads off that part's squared norm, and the weighted
//! sum `S = sum_j max(B_j, B_(j+1)) v_j` estimates `sum_i p_i g(p_i)`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ae::AeParams;
use crate::discrim::{
    apply_discriminator, apply_discriminator_dense, xi_response, CostConstants, DiscriminatorConfig,
    FlagRegister, Profile,
};
use crate::dist::Distribution;
use crate::encode::dense::{DenseModel, DenseState, Purification};
use crate::encode::{
    build_encoding, initial_branch_state, Ancilla, BranchState, EncodingSpec, BIT_A, NUS,
};
use crate::error::{invalid, Error, Result};
use crate::par;
use crate::poly::{ChebPoly, Parity};
use crate::svt::{apply_svt, apply_svt_dense};

const SEED_STRIDE: u64 = 0xd1b5_4a32_d192_ed03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FunctionalKind {
    /// `g(x) = x^(q-1)`, so the functional is `sum_i p_i^q`.
    Power { q: f64 },
    /// `g(x) = -ln x`, so the functional is the Shannon entropy.
    NegLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSpec {
    pub name: String,
    pub kind: FunctionalKind,
    /// Bound on `B_m P_m^2(x/2) / |g(x^2)|` below `phi_m`.
    pub c: f64,
}

impl FunctionalSpec {
    pub fn power(q: f64, c: f64) -> Self {
        Self { name: format!("power_sum(q={q})"), kind: FunctionalKind::Power { q }, c }
    }

    pub fn neg_log(c: f64) -> Self {
        Self { name: "shannon".into(), kind: FunctionalKind::NegLog, c }
    }

    pub fn g(&self, x: f64) -> f64 {
        match self.kind {
            FunctionalKind::Power { q } => x.powf(q - 1.0),
            FunctionalKind::NegLog => -x.ln(),
        }
    }

    /// `p g(p)`, taken as 0 at `p = 0`.
    pub fn weighted(&self, p: f64) -> f64 {
        if p == 0.0 {
            0.0
        } else {
            p * self.g(p)
        }
    }

    pub fn exact(&self, p: &Distribution) -> f64 {
        p.probs().iter().map(|&x| self.weighted(x)).sum()
    }
}

/// Everything a run of the estimator needs besides the distribution.
#[derive(Debug, Clone, Serialize)]
pub struct LevelPlan {
    pub m: usize,
    pub rho: f64,
    /// `phi_0 ..= phi_(m+2)`.
    pub phis: Vec<f64>,
    /// `B_0 ..= B_(m+2)`, with `B_0 = B_(m+2) = 0`.
    pub b: Vec<f64>,
    /// `P_1 ..= P_m`.
    pub polys: Vec<ChebPoly>,
    /// Discriminator precisions of `D_1 ..= D_m`.
    pub eps1s: Vec<f64>,
    pub eps2s: Vec<f64>,
    pub functional: FunctionalSpec,
    pub eps: f64,
}

fn min1(x: f64) -> f64 {
    x.min(1.0)
}

impl LevelPlan {
    /// `b` holds `B_1 ..= B_(m+1)`; the zero ends are added here.
    pub fn new(
        functional: FunctionalSpec,
        eps: f64,
        rho: f64,
        phis: Vec<f64>,
        b_inner: Vec<f64>,
        polys: Vec<ChebPoly>,
    ) -> Result<Self> {
        let m = polys.len();
        if m == 0 {
            return Err(invalid("a plan needs at least one level"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("eps {eps} outside (0, 1)")));
        }
        if !(rho > 1.0) {
            return Err(invalid(format!("rho {rho} must exceed 1")));
        }
        if phis.len() != m + 3 || phis[0] != 1.0 || phis.windows(2).any(|w| !(w[1] < w[0])) || phis[m + 2] < 0.0 {
            return Err(invalid("phis must be phi_0 = 1 > phi_1 > ... > phi_(m+2) >= 0"));
        }
        if b_inner.len() != m + 1 || b_inner.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(invalid("need nonnegative B_1 ..= B_(m+1)"));
        }
        if polys.iter().any(|p| p.cert().is_none()) {
            return Err(invalid("every level polynomial must carry a certificate"));
        }
        if polys.iter().any(|p| p.parity() != polys[0].parity()) {
            return Err(invalid("level polynomials must share one parity"));
        }
        let mut b = Vec::with_capacity(m + 3);
        b.push(0.0);
        b.extend(b_inner);
        b.push(0.0);
        let (eps1s, eps2s) = (1..=m)
            .map(|j| {
                let big = b[j].max(b[j + 1]).max(b[j + 2]);
                (min1(eps / (24.0 * m as f64 * big)), min1(eps / (6.0 * m as f64 * big)))
            })
            .unzip();
        Ok(Self { m, rho, phis, b, polys, eps1s, eps2s, functional, eps })
    }

    /// The same plan with every `B_j` multiplied by `factor`.
    pub fn with_scaled_bounds(&self, factor: f64) -> Result<Self> {
        let b = self.b[1..=self.m + 1].iter().map(|x| x * factor).collect();
        Self::new(self.functional.clone(), self.eps, self.rho, self.phis.clone(), b, self.polys.clone())
    }

    /// The first `m` levels of this plan.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.m {
            return Err(invalid(format!("cannot truncate {} levels to {m}", self.m)));
        }
        let mut phis = self.phis[..m + 3].to_vec();
        if self.phis[self.m + 2] == 0.0 {
            phis[m + 2] = 0.0;
        }
        Self::new(
            self.functional.clone(),
            self.eps,
            self.rho,
            phis,
            self.b[1..=m + 1].to_vec(),
            self.polys[..m].to_vec(),
        )
    }

    pub fn parity(&self) -> Parity {
        self.polys[0].parity()
    }

    pub fn poly(&self, j: usize) -> &ChebPoly {
        &self.polys[j - 1]
    }

    /// `max(B_j, B_(j+1))`, the weight of level `j` in `S`.
    pub fn b_scale(&self, j: usize) -> f64 {
        self.b[j].max(self.b[j + 1])
    }

    /// `max(B_(j-1), B_j, B_(j+1), B_(j+2))`.
    pub fn local_bound(&self, j: usize) -> f64 {
        self.b[j - 1].max(self.b[j]).max(self.b[j + 1]).max(self.b[j + 2])
    }

    pub fn ae_eps(&self, j: usize) -> f64 {
        min1(self.eps / (6.0 * self.m as f64 * self.b_scale(j)))
    }

    pub fn ae_eta(&self) -> f64 {
        1.0 / (3.0 * self.m as f64)
    }

    fn check_level(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.m {
            return Err(invalid(format!("level {j} outside 1..={}", self.m)));
        }
        Ok(())
    }

    /// `D_j` with threshold `phi_j / 2`; `None` for `D_0 = I`. Adversarial
    /// seeds are decorrelated across levels.
    pub fn discriminator(&self, j: usize, opts: &PipelineOptions) -> Result<Option<DiscriminatorConfig>> {
        if j == 0 {
            return Ok(None);
        }
        if j > self.m {
            return Err(invalid(format!("discriminator {j} outside 0..={}", self.m)));
        }
        let profile = match opts.profile {
            Profile::Adversarial { seed } => {
                Profile::Adversarial { seed: seed.wrapping_add((j as u64).wrapping_mul(SEED_STRIDE)) }
            }
            p => p,
        };
        let mut cfg =
            DiscriminatorConfig::new(0.5 * self.phis[j], self.rho, self.eps1s[j - 1], self.eps2s[j - 1], profile)?;
        cfg.perturb_map = opts.perturb_map;
        cfg.costs = opts.costs;
        Ok(Some(cfg))
    }

    /// Oracle queries of one application of `V_j`.
    pub fn level_cost(&self, j: usize, opts: &PipelineOptions) -> Result<LevelCost> {
        self.check_level(j)?;
        let cost = |k| Ok::<_, Error>(self.discriminator(k, opts)?.map_or(0, |d| d.cost()));
        Ok(LevelCost {
            state_prep: 1,
            discriminator_prev: cost(j - 1)?,
            discriminator: cost(j)?,
            svt: self.poly(j).degree(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LevelCost {
    pub state_prep: u64,
    pub discriminator_prev: u64,
    pub discriminator: u64,
    pub svt: u64,
}

impl LevelCost {
    pub fn total(&self) -> u128 {
        [self.state_prep, self.discriminator_prev, self.discriminator, self.svt].iter().map(|&x| u128::from(x)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    pub profile: Profile,
    pub perturb_map: bool,
    pub costs: CostConstants,
    pub ae: AeParams,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { profile: Profile::Smooth, perturb_map: false, costs: CostConstants::default(), ae: AeParams::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Backend {
    Block,
    Dense { purification: Purification },
}

/// Whether ancilla index `k` (with a = 0) passes the flag part of `Pi_j`.
fn flag_selected(k: usize, j: usize) -> bool {
    let (c, d) = (k >> 1 & 1, k & 1);
    d == 0 && (j == 1 || c == 1)
}

/// `|| (|+><+|_a x flags) v ||^2`.
fn projected_norm_sqr(v: &Ancilla, j: usize) -> f64 {
    (0..BIT_A)
        .filter(|&k| flag_selected(k, j))
        .map(|k| 0.5 * (v[k] + v[k + BIT_A]).norm_sqr())
        .sum()
}

/// `Pi_j V_j |Psi_in>` on the block backend, plus the state's query count.
pub fn level_state(
    p: &Distribution,
    spec: &EncodingSpec,
    plan: &LevelPlan,
    j: usize,
    opts: &PipelineOptions,
) -> Result<(BranchState, f64)> {
    plan.check_level(j)?;
    if spec.n() != p.n() {
        return Err(invalid("encoding and distribution sizes differ"));
    }
    let mut state = initial_branch_state(p);
    if let Some(prev) = plan.discriminator(j - 1, opts)? {
        state = apply_discriminator(state, spec, &prev, FlagRegister::C)?;
    }
    let cur = plan.discriminator(j, opts)?.expect("level discriminator exists");
    state = apply_discriminator(state, spec, &cur, FlagRegister::D)?;
    let (state, report) = apply_svt(plan.poly(j), spec, state)?;
    Ok((state, report.total))
}

/// `|| Pi_j V_j |Psi_in> ||^2` on the block backend.
pub fn level_true_amplitude(p: &Distribution, plan: &LevelPlan, j: usize, opts: &PipelineOptions) -> Result<f64> {
    let spec = build_encoding(p);
    let (state, _) = level_state(p, &spec, plan, j, opts)?;
    Ok(state.blocks().iter().flatten().map(|v| projected_norm_sqr(v, j)).sum())
}

/// Dense counterpart of [`level_true_amplitude`].
pub fn level_true_amplitude_dense(
    model: &DenseModel,
    plan: &LevelPlan,
    j: usize,
    opts: &PipelineOptions,
) -> Result<f64> {
    plan.check_level(j)?;
    let mut state = model.reference_state();
    if let Some(prev) = plan.discriminator(j - 1, opts)? {
        state = apply_discriminator_dense(model, &state, &prev, FlagRegister::C)?;
    }
    let cur = plan.discriminator(j, opts)?.expect("level discriminator exists");
    state = apply_discriminator_dense(model, &state, &cur, FlagRegister::D)?;
    state = apply_svt_dense(plan.poly(j), model, &state)?;
    Ok(dense_projected_norm_sqr(model, &state, j))
}

fn dense_projected_norm_sqr(model: &DenseModel, state: &DenseState, j: usize) -> f64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..BIT_A)
        .filter(|&k| flag_selected(k, j))
        .map(|k| {
            let mut plus: Vec<Complex64> =
                state.slot(k).iter().zip(state.slot(k + BIT_A)).map(|(u, v)| s * (u + v)).collect();
            model.project_pi_h(&mut plus);
            plus.iter().map(|z| z.norm_sqr()).sum::<f64>()
        })
        .sum()
}

/// `|beta_(i,j)|^2`, averaged over the two branch signs; row `i`, column `j - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaWeights {
    pub weights: Vec<Vec<f64>>,
}

impl BetaWeights {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.weights[i][j - 1]
        }
    }
}

pub fn beta_weights(p: &Distribution, plan: &LevelPlan, opts: &PipelineOptions) -> Result<BetaWeights> {
    let discs: Vec<DiscriminatorConfig> =
        (1..=plan.m).map(|j| plan.discriminator(j, opts).map(|d| d.expect("j >= 1"))).collect::<Result<_>>()?;
    let spec = build_encoding(p);
    let weights = par::map_indices(p.n(), |i| {
        let sigma = spec.sigmas[i];
        (1..=plan.m)
            .map(|j| {
                let w: f64 = NUS
                    .iter()
                    .map(|&nu| {
                        let cur = xi_response(sigma, nu, &discs[j - 1])[0].norm_sqr();
                        let prev = if j == 1 { 1.0 } else { xi_response(sigma, nu, &discs[j - 2])[1].norm_sqr() };
                        prev * cur
                    })
                    .sum();
                0.5 * w
            })
            .collect()
    });
    Ok(BetaWeights { weights })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AeRound {
    pub t: u64,
    pub repeats: u64,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub b_scale: f64,
    pub true_amplitude: f64,
    pub v_tilde: f64,
    pub ae_eps: f64,
    pub leakage: f64,
    pub cost: LevelCost,
    pub cost_v: u128,
    pub ae_rounds: Vec<AeRound>,
    pub queries: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryLedger {
    pub by_level: Vec<u128>,
    pub total: u128,
}

impl QueryLedger {
    /// `sum over rounds of (2t + 1) * repeats * cost(V_j)`, recomputed from the levels.
    pub fn recompute(levels: &[LevelReport]) -> Option<u128> {
        levels.iter().try_fold(0u128, |acc, l| {
            l.ae_rounds.iter().try_fold(acc, |acc, r| {
                (2 * u128::from(r.t) + 1)
                    .checked_mul(u128::from(r.repeats))?
                    .checked_mul(l.cost.total())?
                    .checked_add(acc)
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub per_level: Vec<LevelReport>,
    pub queries_total: u128,
    pub queries_by_level: Vec<u128>,
}

impl EstimateReport {
    pub fn ledger(&self) -> QueryLedger {
        QueryLedger { by_level: self.queries_by_level.clone(), total: self.queries_total }
    }
}

/// Per-level amplitudes and leakage on the chosen backend.
pub fn level_amplitudes(
    p: &Distribution,
    plan: &LevelPlan,
    backend: Backend,
    opts: &PipelineOptions,
) -> Result<Vec<(f64, f64)>> {
    match backend {
        Backend::Block => {
            let spec = build_encoding(p);
            (1..=plan.m)
                .map(|j| {
                    let (state, leak) = level_state(p, &spec, plan, j, opts)?;
                    let want = plan.level_cost(j, opts)?.total();
                    if state.queries != want {
                        return Err(Error::ContractViolation(format!(
                            "level {j} state charged {} queries, cost model says {want}",
                            state.queries
                        )));
                    }
                    Ok((state.blocks().iter().flatten().map(|v| projected_norm_sqr(v, j)).sum(), leak))
                })
                .collect()
        }
        Backend::Dense { purification } => {
            let model = DenseModel::new(p, purification)?;
            (1..=plan.m).map(|j| Ok((level_true_amplitude_dense(&model, plan, j, opts)?, f64::NAN))).collect()
        }
    }
}

pub fn run_estimate<R: Rng + ?Sized>(
    p: &Distribution,
    plan: &LevelPlan,
    backend: Backend,
    opts: &PipelineOptions,
    rng: &mut R,
) -> Result<EstimateReport> {
    let amps = level_amplitudes(p, plan, backend, opts)?;
    let mut estimate = 0.0;
    let mut per_level = Vec::with_capacity(plan.m);
    for (j, (amp, leakage)) in (1..=plan.m).zip(amps) {
        let cost = plan.level_cost(j, opts)?;
        let cost_v = cost.total();
        let ae_eps = plan.ae_eps(j);
        let out = opts
            .ae
            .two_stage(amp.clamp(0.0, 1.0), cost_v, ae_eps, plan.ae_eta(), rng)
            .map_err(|e| match e {
                Error::QueryOverflow { .. } => Error::QueryOverflow { level: j },
                e => e,
            })?;
        let b_scale = plan.b_scale(j);
        estimate += b_scale * out.estimate;
        per_level.push(LevelReport {
            level: j,
            b_scale,
            true_amplitude: amp,
            v_tilde: out.estimate,
            ae_eps,
            leakage,
            cost,
            cost_v,
            ae_rounds: out
                .rounds
                .iter()
                .map(|r| AeRound { t: r.grover_calls, repeats: r.repeats, estimate: r.estimate })
                .collect(),
            queries: out.queries,
        });
    }
    let queries_by_level: Vec<u128> = per_level.iter().map(|l| l.queries).collect();
    let queries_total = queries_by_level
        .iter()
        .try_fold(0u128, |a, &q| a.checked_add(q))
        .ok_or(Error::QueryOverflow { level: plan.m })?;
    Ok(EstimateReport { estimate, per_level, queries_total, queries_by_level })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub checked: usize,
    pub violations: usize,
    /// Largest `lhs / (bound + ROUNDOFF)`; above 1 exactly when a check fails.
    pub worst_ratio: f64,
}

impl InequalityCheck {
    fn new() -> Self {
        Self { checked: 0, violations: 0, worst_ratio: 0.0 }
    }

    fn record(&mut self, lhs: f64, bound: f64) {
        self.checked += 1;
        if lhs > bound + ROUNDOFF {
            self.violations += 1;
        }
        self.worst_ratio = self.worst_ratio.max(lhs / (bound + ROUNDOFF));
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Slack for sums of unit-scale weights: a few ulps of 1.
pub const ROUNDOFF: f64 = 8.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    pub profile: Profile,
    pub weighted_sum: f64,
    pub exact: f64,
    pub deterministic_error: f64,
    pub bound: f64,
    pub budget_ok: bool,
    pub localization: InequalityCheck,
    pub completeness: InequalityCheck,
    /// Level approximation checked at the distribution's own points.
    pub approximation: InequalityCheck,
}

impl BudgetReport {
    pub fn passed(&self) -> bool {
        self.budget_ok && self.localization.passed() && self.completeness.passed() && self.approximation.passed()
    }
}

/// Deviation `|max(B_j, B_(j+1)) P_j(x/2)^2 - g(x^2)|`, including the
/// polynomial's representation error. Power-law levels are evaluated through
/// the relative defect of the kernel so that tiny tolerances stay resolvable.
pub fn level_deviation(plan: &LevelPlan, j: usize, x: f64) -> Result<f64> {
    let poly = plan.poly(j);
    let bs = plan.b_scale(j);
    let y = 0.5 * x;
    let g = plan.functional.g(x * x);
    let tail = poly.representation_error();
    if let FunctionalKind::Power { q } = plan.functional.kind {
        let ts = 2f64.powf(q - 1.0) / bs.sqrt();
        if let Some(r) = poly.relative_defect(y, ts, q - 1.0) {
            let ideal = ts * y.powf(q - 1.0) * (1.0 + r);
            return Ok(g * (r * (2.0 + r)).abs() + bs * tail * (2.0 * ideal.abs() + tail));
        }
    }
    let v = poly.eval(y)?;
    Ok((bs * v * v - g).abs() + bs * tail * (2.0 * v.abs() + tail))
}

/// The deterministic part of the estimator's error and the weight
/// inequalities behind it, for one distribution and discriminator profile.
pub fn verify_error_budget(p: &Distribution, plan: &LevelPlan, opts: &PipelineOptions) -> Result<BudgetReport> {
    let amps = level_amplitudes(p, plan, Backend::Block, opts)?;
    let weighted_sum: f64 = amps.iter().enumerate().map(|(k, (a, _))| plan.b_scale(k + 1) * a).sum();
    let exact = plan.functional.exact(p);
    let deterministic_error = (weighted_sum - exact).abs();
    let bound = 2.0 * plan.eps / 3.0;

    let beta = beta_weights(p, plan, opts)?;
    let m = plan.m;
    let mf = m as f64;
    let mut localization = InequalityCheck::new();
    let mut completeness = InequalityCheck::new();
    let mut approximation = InequalityCheck::new();
    for (i, &pi) in p.probs().iter().enumerate() {
        let x = pi.sqrt();
        for j in 1..=m {
            let (lo, hi) = (plan.phis[j + 1], plan.phis[j - 1]);
            if x <= lo || x > hi {
                localization.record(beta.get(i, j), plan.eps / (3.0 * mf * plan.b_scale(j)));
            } else if pi > 0.0 {
                approximation.record(level_deviation(plan, j, x)?, plan.eps / (12.0 * mf));
            }
            if x >= plan.phis[j] && x <= plan.phis[j - 1] {
                let s = beta.get(i, j - 1) + beta.get(i, j);
                completeness.record((s - 1.0).abs(), plan.eps / (3.0 * mf * plan.b[j]));
            }
        }
    }
    Ok(BudgetReport {
        profile: opts.profile,
        weighted_sum,
        exact,
        deterministic_error,
        bound,
        budget_ok: deterministic_error <= bound,
        localization,
        completeness,
        approximation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::make_uniform;
    use crate::encode::ancilla_index;

    fn flat_plan(m: usize) -> LevelPlan {
        let phis = (0..m + 3).map(|j| 2f64.powi(-(j as i32))).collect();
        let one = ChebPoly::constant(1.0);
        let cert = crate::poly::certify(&one, |_| 1.0, (0.0, 1.0), 1e-12);
        LevelPlan::new(
            FunctionalSpec::power(2.0, 2.0),
            0.1,
            2.0,
            phis,
            vec![1.0; m + 1],
            vec![one.with_cert(cert); m],
        )
        .unwrap()
    }

    #[test]
    fn point_mass_sits_in_level_one() {
        let plan = flat_plan(2);
        let p = Distribution::new(vec![1.0]).unwrap();
        let opts = PipelineOptions { profile: Profile::Ideal, ..Default::default() };
        assert!((level_true_amplitude(&p, &plan, 1, &opts).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(level_true_amplitude(&p, &plan, 2, &opts).unwrap(), 0.0);
        assert!(level_true_amplitude(&p, &plan, 3, &opts).is_err());
    }

    #[test]
    fn flag_selection() {
        assert!(flag_selected(ancilla_index(0, 1, 0, 0), 1));
        assert!(flag_selected(ancilla_index(0, 0, 1, 0), 1));
        assert!(!flag_selected(ancilla_index(0, 0, 0, 0), 2));
        assert!(flag_selected(ancilla_index(0, 1, 1, 0), 3));
        assert!(!flag_selected(ancilla_index(0, 0, 1, 1), 2));
    }

    #[test]
    fn eps_schedule() {
        let plan = flat_plan(3);
        assert_eq!(plan.b, vec![0.0, 1.0, 1.0, 1.0, 1.0, 0.0]);
        assert!((plan.eps1s[0] - 0.1 / 72.0).abs() < 1e-18);
        assert!((plan.eps2s[2] - 0.1 / 18.0).abs() < 1e-18);
        assert!((plan.ae_eta() - 1.0 / 9.0).abs() < 1e-18);
        let _ = make_uniform(2).unwrap();
    }
}
