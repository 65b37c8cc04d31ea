//! Singular value discrimination as a per-branch flag map.
//!
//! A discriminator writes a two-level flag `xi(sigma, nu)` into ancilla c or d
//! while leaving a, b and the system branch untouched. Above the threshold
//! `gamma` the flag is near `nu|0>`, below `gamma/rho` near `i|1>`, and in between
//! anything unit-norm is allowed. Profiles choose how that freedom is used.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encode::dense::{DenseModel, DenseState};
use crate::encode::{ancilla_index, block_norm_sqr, BranchState, EncodingSpec, BIT_C, BIT_D, NUS};
use crate::error::{invalid, Error, Result};

pub type Flag = [Complex64; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const PERTURB_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Profile {
    Ideal,
    Smooth,
    Adversarial { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostConstants {
    pub branch_marking: u64,
    pub phase_estimation: u64,
}

impl Default for CostConstants {
    fn default() -> Self {
        Self { branch_marking: 1, phase_estimation: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    pub gamma: f64,
    pub rho: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub profile: Profile,
    /// Rotate every flag by up to `eps1` on top of the profile.
    #[serde(default)]
    pub perturb_map: bool,
    #[serde(default)]
    pub costs: CostConstants,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlagRegister {
    C,
    D,
}

impl FlagRegister {
    fn bit(self) -> usize {
        match self {
            FlagRegister::C => BIT_C,
            FlagRegister::D => BIT_D,
        }
    }

    fn other(self) -> usize {
        match self {
            FlagRegister::C => BIT_D,
            FlagRegister::D => BIT_C,
        }
    }
}

/// `ceil(x)` that ignores roundoff just above an integer.
fn ceil_tight(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * x.abs().max(1.0) {
        r.max(0.0) as u64
    } else {
        x.ceil().max(0.0) as u64
    }
}

impl DiscriminatorConfig {
    pub fn new(gamma: f64, rho: f64, eps1: f64, eps2: f64, profile: Profile) -> Result<Self> {
        let cfg = Self {
            gamma,
            rho,
            eps1,
            eps2,
            profile,
            perturb_map: false,
            costs: CostConstants::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 0.5) {
            return Err(invalid(format!("gamma {} outside (0, 1/2)", self.gamma)));
        }
        if !(self.rho > 1.0) {
            return Err(invalid(format!("rho {} must exceed 1", self.rho)));
        }
        for (name, e) in [("eps1", self.eps1), ("eps2", self.eps2)] {
            if !(e > 0.0 && e <= 1.0) {
                return Err(invalid(format!("{name} {e} outside (0, 1]")));
            }
        }
        Ok(())
    }

    /// `c_bm * ceil(log2(1/eps1)) + c_gpe * ceil(log2(1/eps2) / gamma)`.
    pub fn cost(&self) -> u64 {
        let bm = ceil_tight((1.0 / self.eps1).log2());
        let gpe = ceil_tight((1.0 / self.eps2).log2() / self.gamma);
        self.costs.branch_marking * bm + self.costs.phase_estimation * gpe
    }

    fn band(&self, sigma: f64) -> Band {
        if sigma >= self.gamma {
            Band::Above
        } else if sigma <= self.gamma / self.rho {
            Band::Below
        } else {
            Band::Between
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Band {
    Above,
    Below,
    Between,
}

/// Smooth pseudo-random map from `ln sigma` to `[0, 1]`, fixed by its draws.
struct Wiggle([(f64, f64, f64); 3]);

impl Wiggle {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let mut terms = [(0.0, 0.0, 0.0); 3];
        for t in terms.iter_mut() {
            *t = (rng.random::<f64>() / 3.0, rng.random_range(0.5..6.0), rng.random_range(0.0..2.0 * PI));
        }
        Wiggle(terms)
    }

    fn at(&self, sigma: f64) -> f64 {
        let l = sigma.max(1e-300).ln();
        0.5 + 0.5 * self.0.iter().map(|(a, w, ph)| a * (w * l + ph).sin()).sum::<f64>()
    }
}

fn branch_rng(seed: u64, nu: f64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ if nu > 0.0 { 0 } else { u64::MAX })
}

/// Rotates the unit flag `e` by an angle budget `psi`, so the result stays
/// within `2 sin(psi/2)` of `e`.
fn rotate(e: Flag, psi: f64, w: [f64; 4]) -> Flag {
    let perp = [-e[1].conj(), e[0].conj()];
    let t = psi * w[0] * w[1];
    let alpha = psi * w[0] * (1.0 - w[1]) * (2.0 * w[2] - 1.0);
    let outer = Complex64::from_polar(1.0, alpha);
    let inner = Complex64::from_polar(t.sin(), 2.0 * PI * w[3]);
    [outer * (t.cos() * e[0] + inner * perp[0]), outer * (t.cos() * e[1] + inner * perp[1])]
}

fn seeded_rotation(e: Flag, eps: f64, seed: u64, sigma: f64, nu: f64) -> Flag {
    let mut rng = branch_rng(seed, nu);
    let ws: Vec<Wiggle> = (0..4).map(|_| Wiggle::draw(&mut rng)).collect();
    let psi = 2.0 * (eps.min(2.0) / 2.0).asin();
    rotate(e, psi, [ws[0].at(sigma), ws[1].at(sigma), ws[2].at(sigma), ws[3].at(sigma)])
}

fn ideal_flag(band: Band, nu: f64, sigma: f64, cfg: &DiscriminatorConfig) -> Flag {
    match band {
        Band::Above => [Complex64::new(nu, 0.0), ZERO],
        Band::Below => [ZERO, Complex64::new(0.0, 1.0)],
        Band::Between => {
            if sigma >= cfg.gamma / cfg.rho.sqrt() {
                [Complex64::new(nu, 0.0), ZERO]
            } else {
                [ZERO, Complex64::new(0.0, 1.0)]
            }
        }
    }
}

fn smooth_flag(nu: f64, sigma: f64, cfg: &DiscriminatorConfig) -> Flag {
    let theta = (FRAC_PI_2 * (cfg.gamma / sigma).ln() / cfg.rho.ln()).clamp(0.0, FRAC_PI_2);
    [Complex64::new(nu * theta.cos(), 0.0), Complex64::new(0.0, theta.sin())]
}

/// Flag written for a branch with singular value `sigma` and sign `nu`.
pub fn xi_response(sigma: f64, nu: f64, cfg: &DiscriminatorConfig) -> Flag {
    let band = cfg.band(sigma);
    let flag = match cfg.profile {
        Profile::Ideal => ideal_flag(band, nu, sigma, cfg),
        Profile::Smooth => smooth_flag(nu, sigma, cfg),
        Profile::Adversarial { seed } => match band {
            Band::Between => {
                let mut rng = branch_rng(seed.wrapping_add(1), nu);
                let w: Vec<Wiggle> = (0..3).map(|_| Wiggle::draw(&mut rng)).collect();
                let th = FRAC_PI_2 * w[0].at(sigma);
                [
                    Complex64::from_polar(th.cos(), 2.0 * PI * w[1].at(sigma)),
                    Complex64::from_polar(th.sin(), 2.0 * PI * w[2].at(sigma)),
                ]
            }
            _ => seeded_rotation(ideal_flag(band, nu, sigma, cfg), cfg.eps2, seed, sigma, nu),
        },
    };
    if cfg.perturb_map {
        let seed = match cfg.profile {
            Profile::Adversarial { seed } => seed,
            _ => 0,
        };
        seeded_rotation(flag, cfg.eps1, seed ^ PERTURB_SALT, sigma, nu)
    } else {
        flag
    }
}

fn violation(i: usize, nu: f64, what: &str) -> Error {
    Error::ContractViolation(format!("branch ({i}, {nu:+}): {what}"))
}

/// Writes the flag into `reg` on every branch and charges the cost.
pub fn apply_discriminator(
    mut state: BranchState,
    spec: &EncodingSpec,
    cfg: &DiscriminatorConfig,
    reg: FlagRegister,
) -> Result<BranchState> {
    cfg.validate()?;
    if spec.n() != state.n() {
        return Err(invalid("state and encoding sizes differ"));
    }
    let (fb, ob) = (reg.bit(), reg.other());
    for i in 0..state.n() {
        for (b, &nu) in NUS.iter().enumerate() {
            let blk = state.block_mut(i, b);
            let scale = block_norm_sqr(blk);
            if scale == 0.0 {
                continue;
            }
            let flagged: f64 = (0..16).filter(|k| k & fb != 0).map(|k| blk[k].norm_sqr()).sum();
            if flagged > 1e-24 * scale {
                return Err(violation(i, nu, "flag register is not |0>"));
            }
            let xi = xi_response(spec.sigmas[i], nu, cfg);
            for o in [0, ob] {
                let base = blk[o];
                if (1..4).any(|ab| (blk[o + 4 * ab] - base).norm_sqr() > 1e-24 * scale) {
                    return Err(violation(i, nu, "ancillas a, b are not |++>"));
                }
                for ab in 0..4 {
                    let k = o + 4 * ab;
                    blk[k] = base * xi[0];
                    blk[k + fb] = base * xi[1];
                }
            }
        }
    }
    state.charge(cfg.cost())?;
    Ok(state)
}

/// Dense counterpart of [`apply_discriminator`]; the flag is a function of
/// the dilation applied through its spectrum.
pub fn apply_discriminator_dense(
    model: &DenseModel,
    state: &DenseState,
    cfg: &DiscriminatorConfig,
    reg: FlagRegister,
) -> Result<DenseState> {
    cfg.validate()?;
    let (fb, ob) = (reg.bit(), reg.other());
    let scale = state.norm_sqr().max(f64::MIN_POSITIVE);
    let mut out = DenseState::zeros(model.dim());
    for o in [0, ob] {
        let mut x = vec![ZERO; model.dim()];
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let anc = ancilla_index(a, b, 0, 0) + o;
            let flagged: f64 = state.slot(anc + fb).iter().map(|z| z.norm_sqr()).sum();
            if flagged > 1e-20 * scale {
                return Err(Error::ContractViolation("flag register is not |0>".into()));
            }
            for (xi, s) in x.iter_mut().zip(state.slot(anc)) {
                *xi += 0.5 * s;
            }
        }
        let spread: f64 = (1..4)
            .map(|ab| {
                state.slot(o + 4 * ab).iter().zip(state.slot(o)).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>()
            })
            .sum();
        if spread > 1e-20 * scale {
            return Err(Error::ContractViolation("ancillas a, b are not |++>".into()));
        }
        let flags = [0, 1].map(|f| {
            model.apply_fn(&x, |lam| {
                let nu = if lam < 0.0 { -1.0 } else { 1.0 };
                0.5 * xi_response(lam.abs(), nu, cfg)[f]
            })
        });
        for ab in 0..4 {
            out.slot_mut(o + 4 * ab).copy_from_slice(&flags[0]);
            out.slot_mut(o + 4 * ab + fb).copy_from_slice(&flags[1]);
        }
    }
    Ok(out)
}
