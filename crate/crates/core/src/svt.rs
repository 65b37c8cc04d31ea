//! Singular value transformation acting branch by branch.
//!
//! The part of each branch with ancilla a in `|+>` is multiplied by
//! `P(nu * sigma_i)`; everything else leaves the tracked subspace and is
//! booked as leakage.

use num_complex::Complex64;
use serde::Serialize;

use crate::encode::dense::{DenseModel, DenseState};
use crate::encode::{block_norm_sqr, Ancilla, BranchState, EncodingSpec, BIT_A, NUS};
use crate::error::{invalid, Result};
use crate::poly::ChebPoly;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageReport {
    /// Squared norm removed from each branch, `[nu = +1, nu = -1]`.
    pub per_branch: Vec<[f64; 2]>,
    pub total: f64,
}

fn check_poly(poly: &ChebPoly) -> Result<()> {
    match poly.cert() {
        None => Err(invalid("polynomial carries no certificate")),
        Some(c) if !c.cap_ok => Err(invalid(format!("polynomial exceeds the cap: max {}", c.cap_max))),
        Some(_) => Ok(()),
    }
}

/// Keeps `P * (|+><+|_a x I) v`.
fn transform(v: &Ancilla, p: f64) -> Ancilla {
    let mut out = [Complex64::new(0.0, 0.0); 16];
    for rest in 0..BIT_A {
        let plus = 0.5 * (v[rest] + v[rest + BIT_A]) * p;
        out[rest] = plus;
        out[rest + BIT_A] = plus;
    }
    out
}

pub fn apply_svt(
    poly: &ChebPoly,
    spec: &EncodingSpec,
    mut state: BranchState,
) -> Result<(BranchState, LeakageReport)> {
    check_poly(poly)?;
    if spec.n() != state.n() {
        return Err(invalid("state and encoding sizes differ"));
    }
    let mut per_branch = Vec::with_capacity(state.n());
    for i in 0..state.n() {
        let mut leak = [0.0; 2];
        for (b, &nu) in NUS.iter().enumerate() {
            let blk = state.block_mut(i, b);
            let before = block_norm_sqr(blk);
            if before == 0.0 {
                continue;
            }
            *blk = transform(blk, poly.eval(nu * spec.sigmas[i])?);
            leak[b] = (before - block_norm_sqr(blk)).max(0.0);
        }
        per_branch.push(leak);
    }
    state.charge(poly.degree())?;
    let total = per_branch.iter().flatten().sum();
    Ok((state, LeakageReport { per_branch, total }))
}

/// Dense counterpart of [`apply_svt`]: `P` of the dilation on the `|+>_a` part.
pub fn apply_svt_dense(poly: &ChebPoly, model: &DenseModel, state: &DenseState) -> Result<DenseState> {
    check_poly(poly)?;
    let mut out = DenseState::zeros(model.dim());
    for rest in 0..BIT_A {
        let plus: Vec<Complex64> =
            state.slot(rest).iter().zip(state.slot(rest + BIT_A)).map(|(u, v)| 0.5 * (u + v)).collect();
        if plus.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        let y = model.apply_fn(&plus, |lam| Complex64::new(poly.value(lam.clamp(-1.0, 1.0)), 0.0));
        out.slot_mut(rest).copy_from_slice(&y);
        out.slot_mut(rest + BIT_A).copy_from_slice(&y);
    }
    Ok(out)
}
