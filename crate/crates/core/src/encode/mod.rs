//! The purified-oracle encoding and the per-branch state used by the block
//! backend.
//!
//! The encoded matrix has singular values `sigma_i = sqrt(p_i)/2`. Its
//! Hermitian dilation has eigenvalues `nu * sigma_i` for `nu = +1, -1`, and every
//! stage of the level pipeline acts on each eigenvector separately. The block
//! backend therefore stores one 16-entry ancilla vector (qubits a, b, c, d) per
//! branch `(i, nu)` and never builds the eigenvectors themselves; [`dense`]
//! builds them explicitly for small `n` as a cross-check.

pub mod dense;

use num_complex::Complex64;
use serde::Serialize;

use crate::dist::Distribution;
use crate::error::{Error, Result};

/// Branch signs in storage order.
pub const NUS: [f64; 2] = [1.0, -1.0];

pub const ANCILLA_DIM: usize = 16;

/// Bit of each ancilla qubit inside an ancilla index.
pub const BIT_A: usize = 8;
pub const BIT_B: usize = 4;
pub const BIT_C: usize = 2;
pub const BIT_D: usize = 1;

pub type Ancilla = [Complex64; ANCILLA_DIM];

pub fn ancilla_index(a: usize, b: usize, c: usize, d: usize) -> usize {
    a * BIT_A + b * BIT_B + c * BIT_C + d * BIT_D
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EncodingSpec {
    pub sigmas: Vec<f64>,
}

impl EncodingSpec {
    pub fn n(&self) -> usize {
        self.sigmas.len()
    }

    /// Dilation eigenvalue of branch `(i, b)`, where `b` indexes [`NUS`].
    pub fn lambda(&self, i: usize, b: usize) -> f64 {
        NUS[b] * self.sigmas[i]
    }
}

pub fn build_encoding(p: &Distribution) -> EncodingSpec {
    EncodingSpec { sigmas: p.probs().iter().map(|&x| x.sqrt() / 2.0).collect() }
}

/// Walk eigenphases `arccos(nu * sigma_i)`, stored as `[nu = +1, nu = -1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkSpectrum {
    pub thetas: Vec<[f64; 2]>,
}

impl WalkSpectrum {
    pub fn theta(&self, i: usize, nu: i8) -> f64 {
        self.thetas[i][usize::from(nu < 0)]
    }
}

pub fn walk_phases(spec: &EncodingSpec) -> WalkSpectrum {
    WalkSpectrum { thetas: spec.sigmas.iter().map(|&s| [s.acos(), (-s).acos()]).collect() }
}

/// Ancilla contents per branch `(i, nu)`, each scaled by the branch's system
/// amplitude, plus the oracle queries spent producing the state.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    blocks: Vec<[Ancilla; 2]>,
    pub queries: u128,
}

impl BranchState {
    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, i: usize, b: usize) -> &Ancilla {
        &self.blocks[i][b]
    }

    pub fn block_mut(&mut self, i: usize, b: usize) -> &mut Ancilla {
        &mut self.blocks[i][b]
    }

    pub fn blocks(&self) -> &[[Ancilla; 2]] {
        &self.blocks
    }

    pub fn norm_sqr(&self) -> f64 {
        self.blocks.iter().flatten().map(block_norm_sqr).sum()
    }

    /// Squared norm carried by each branch.
    pub fn branch_weights(&self) -> Vec<[f64; 2]> {
        self.blocks.iter().map(|b| [block_norm_sqr(&b[0]), block_norm_sqr(&b[1])]).collect()
    }

    pub(crate) fn charge(&mut self, queries: u64) -> Result<()> {
        self.queries = self
            .queries
            .checked_add(u128::from(queries))
            .ok_or(Error::QueryOverflow { level: 0 })?;
        Ok(())
    }
}

pub fn block_norm_sqr(v: &Ancilla) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `sqrt(p_i / 2)` on every branch with a, b in `|+>` and c, d in `|0>`; one
/// oracle query.
pub fn initial_branch_state(p: &Distribution) -> BranchState {
    let blocks = p
        .probs()
        .iter()
        .map(|&pi| {
            let mut v = [Complex64::new(0.0, 0.0); ANCILLA_DIM];
            let amp = 0.5 * (pi / 2.0).sqrt();
            for a in 0..2 {
                for b in 0..2 {
                    v[ancilla_index(a, b, 0, 0)] = Complex64::new(amp, 0.0);
                }
            }
            [v, v]
        })
        .collect();
    BranchState { blocks, queries: 1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{make_uniform, Distribution};

    #[test]
    fn sigmas_and_phases() {
        let spec = build_encoding(&Distribution::new(vec![0.64, 0.36]).unwrap());
        assert!((spec.sigmas[0] - 0.4).abs() < 1e-15 && (spec.sigmas[1] - 0.3).abs() < 1e-15);
        let w = walk_phases(&build_encoding(&make_uniform(1).unwrap()));
        assert!((w.theta(0, 1) - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
        assert!((w.theta(0, -1) - 2.0 * std::f64::consts::FRAC_PI_3).abs() < 1e-15);
    }

    #[test]
    fn initial_state_amplitudes() {
        let s = initial_branch_state(&make_uniform(2).unwrap());
        assert_eq!(s.queries, 1);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        for w in s.branch_weights() {
            assert!((w[0] - 0.25).abs() < 1e-15 && (w[1] - 0.25).abs() < 1e-15);
        }
    }
}
