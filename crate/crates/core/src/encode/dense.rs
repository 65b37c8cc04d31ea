//! Explicit-vector model of the encoding for small `n`.
//!
//! The system is `(i, i', phi, r)` with `phi` of dimension `k` (1 for the fixed
//! purification, `n` for random ones), doubled by a dilation qubit. The
//! encoded matrix is read off `(I x O_p^dag x R^dag)` between the two
//! projectors, with `O_p` a Householder reflection sending `|0,0>` to the
//! purified oracle state. Functions of the dilation are applied through its
//! eigenpairs on the Krylov space of the input, found by Lanczos with full
//! reorthogonalization; every pipeline vector lives in that space.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BranchState, ANCILLA_DIM, NUS};
use crate::dist::Distribution;
use crate::error::{Error, Result};

pub const DENSE_CAP: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const LANCZOS_BREAK: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purification {
    Fixed,
    RandomSeeded(u64),
}

/// Eigenpair of the dilation restricted to the input's Krylov space.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub lambda: f64,
    pub vector: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct DenseModel {
    n: usize,
    k: usize,
    /// Nonzero entries `(row, col, value)` of the encoded matrix.
    a: Vec<(usize, usize, Complex64)>,
    in_pi: Vec<bool>,
    in_pi_tilde: Vec<bool>,
    purifications: Vec<Vec<Complex64>>,
    input: Vec<Complex64>,
    eig: Vec<Eigenpair>,
}

fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn random_unit(rng: &mut ChaCha8Rng, k: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..k)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let s = norm(&v);
    v.into_iter().map(|z| z / s).collect()
}

/// Unitary whose first column is the unit vector `t`.
fn householder_to(t: &[Complex64]) -> DMatrix<Complex64> {
    let d = t.len();
    let phase = if t[0].norm() > 0.0 { t[0] / t[0].norm() } else { Complex64::new(1.0, 0.0) };
    let mut w: Vec<Complex64> = t.iter().map(|z| -z / phase).collect();
    w[0] += 1.0;
    let wn = norm(&w);
    let mut m = DMatrix::<Complex64>::identity(d, d);
    if wn > 1e-15 {
        for z in w.iter_mut() {
            *z /= wn;
        }
        for r in 0..d {
            for c in 0..d {
                m[(r, c)] -= 2.0 * w[r] * w[c].conj();
            }
        }
    }
    m * phase
}

impl DenseModel {
    pub fn new(p: &Distribution, purification: Purification) -> Result<Self> {
        let n = p.n();
        if n > DENSE_CAP {
            return Err(Error::CapacityExceeded { n, cap: DENSE_CAP });
        }
        let (k, purifications) = match purification {
            Purification::Fixed => (1, vec![vec![Complex64::new(1.0, 0.0)]; n]),
            Purification::RandomSeeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (n, (0..n).map(|_| random_unit(&mut rng, n)).collect())
            }
        };
        let target: Vec<Complex64> = (0..n)
            .flat_map(|i| purifications[i].iter().map(move |z| z * p.probs()[i].sqrt()))
            .collect();
        let o_p = householder_to(&target);
        let h = 0.5 * 3f64.sqrt();
        let r = [[0.5, -h], [h, 0.5]];

        let sys = |i: usize, i2: usize, f: usize, rq: usize| ((i * n + i2) * k + f) * 2 + rq;
        let ns = 2 * n * n * k;
        let mut in_pi = vec![false; ns];
        let mut in_pi_tilde = vec![false; ns];
        for i in 0..n {
            in_pi_tilde[sys(i, 0, 0, 0)] = true;
            for f in 0..k {
                in_pi[sys(i, i, f, 0)] = true;
            }
        }
        // Entries of I x O_p^dag x R^dag from column (i, i, f, 0) to row
        // (i, 0, 0, 0), the only pairs both projectors keep.
        let mut a = Vec::new();
        for i in 0..n {
            for f in 0..k {
                let u = o_p[(i * k + f, 0)].conj() * r[0][0];
                if u != ZERO {
                    a.push((sys(i, 0, 0, 0), sys(i, i, f, 0), u));
                }
            }
        }

        // O_p on (i', phi) applied to |0,0>, then CNOT i' -> i.
        let mut input = vec![ZERO; 2 * ns];
        for i2 in 0..n {
            for f in 0..k {
                input[sys(i2, i2, f, 0)] = o_p[(i2 * k + f, 0)];
            }
        }

        let mut model =
            Self { n, k, a, in_pi, in_pi_tilde, purifications, input, eig: Vec::new() };
        model.eig = model.lanczos()?;
        Ok(model)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn purification_dim(&self) -> usize {
        self.k
    }

    fn sys_dim(&self) -> usize {
        2 * self.n * self.n * self.k
    }

    /// Length of a dilated system vector.
    pub fn dim(&self) -> usize {
        2 * self.sys_dim()
    }

    /// The dilation `|1><0| x A + |0><1| x A^dag`.
    pub fn apply_h(&self, x: &[Complex64]) -> Vec<Complex64> {
        let ns = self.sys_dim();
        let mut y = vec![ZERO; 2 * ns];
        for &(r, c, v) in &self.a {
            y[ns + r] += v * x[c];
            y[c] += v.conj() * x[ns + r];
        }
        y
    }

    /// `|0><0| x Pi + |1><1| x Pi~`, applied in place.
    pub fn project_pi_h(&self, x: &mut [Complex64]) {
        let ns = self.sys_dim();
        for (s, z) in x.iter_mut().enumerate() {
            let keep = if s < ns { self.in_pi[s] } else { self.in_pi_tilde[s - ns] };
            if !keep {
                *z = ZERO;
            }
        }
    }

    /// Dilated input `|0> x sum_i sqrt(p_i) |i, i, phi_i, 0>`.
    pub fn input(&self) -> &[Complex64] {
        &self.input
    }

    pub fn spectrum(&self) -> &[Eigenpair] {
        &self.eig
    }

    /// Dilation eigenvector for branch `(i, b)`, `b` indexing [`NUS`].
    pub fn branch_vector(&self, i: usize, b: usize) -> Vec<Complex64> {
        let (n, k, ns) = (self.n, self.k, self.sys_dim());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = vec![ZERO; 2 * ns];
        for f in 0..k {
            v[((i * n + i) * k + f) * 2] = self.purifications[i][f] * s;
        }
        v[ns + (i * n * k) * 2] = Complex64::new(NUS[b] * s, 0.0);
        v
    }

    /// `f(H) x` for `x` in the Krylov space of the input.
    pub fn apply_fn(&self, x: &[Complex64], f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let mut y = vec![ZERO; x.len()];
        for e in &self.eig {
            let c = dot(&e.vector, x);
            if c != ZERO {
                axpy(&mut y, f(e.lambda) * c, &e.vector);
            }
        }
        y
    }

    fn lanczos(&self) -> Result<Vec<Eigenpair>> {
        let q0 = norm(&self.input);
        let mut basis: Vec<Vec<Complex64>> = vec![self.input.iter().map(|z| z / q0).collect()];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        loop {
            let q = basis.last().unwrap();
            let mut w = self.apply_h(q);
            alpha.push(dot(q, &w).re);
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    axpy(&mut w, -c, b);
                }
            }
            let bn = norm(&w);
            if bn < LANCZOS_BREAK || basis.len() >= 2 * self.n {
                break;
            }
            beta.push(bn);
            basis.push(w.into_iter().map(|z| z / bn).collect());
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alpha[r]
            } else if r == c + 1 {
                beta[c]
            } else if c == r + 1 {
                beta[r]
            } else {
                0.0
            }
        });
        let es = SymmetricEigen::new(t);
        let mut out = Vec::with_capacity(m);
        for col in 0..m {
            let mut v = vec![ZERO; self.dim()];
            for (r, b) in basis.iter().enumerate() {
                axpy(&mut v, Complex64::new(es.eigenvectors[(r, col)], 0.0), b);
            }
            let lambda = es.eigenvalues[col];
            let hv = self.apply_h(&v);
            let res: f64 = hv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - lambda * b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if res > RESIDUAL_TOL {
                return Err(Error::ContractViolation(format!(
                    "dilation eigenpair residual {res:e} at eigenvalue {lambda}"
                )));
            }
            out.push(Eigenpair { lambda, vector: v });
        }
        Ok(out)
    }

    /// Ancillas a, b in `|+>`, c, d in `|0>`, system in the dilated input.
    pub fn reference_state(&self) -> DenseState {
        let mut s = DenseState::zeros(self.dim());
        for a in 0..2 {
            for b in 0..2 {
                let slot = s.slot_mut(super::ancilla_index(a, b, 0, 0));
                for (z, x) in slot.iter_mut().zip(&self.input) {
                    *z = 0.5 * x;
                }
            }
        }
        s
    }

    /// Explicit vector of a block-backend state.
    pub fn embed(&self, state: &BranchState) -> DenseState {
        let mut s = DenseState::zeros(self.dim());
        for i in 0..state.n() {
            for b in 0..2 {
                let blk = state.block(i, b);
                if blk.iter().all(|z| *z == ZERO) {
                    continue;
                }
                let v = self.branch_vector(i, b);
                for (anc, amp) in blk.iter().enumerate() {
                    if *amp != ZERO {
                        axpy(s.slot_mut(anc), *amp, &v);
                    }
                }
            }
        }
        s
    }
}

/// Amplitudes over ancilla index (outer) and dilated system (inner).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseState {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; ANCILLA_DIM * dim] }
    }

    pub fn slot(&self, anc: usize) -> &[Complex64] {
        &self.data[anc * self.dim..(anc + 1) * self.dim]
    }

    pub fn slot_mut(&mut self, anc: usize) -> &mut [Complex64] {
        &mut self.data[anc * self.dim..(anc + 1) * self.dim]
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.data
    }

    pub fn inner(&self, other: &DenseState) -> Complex64 {
        dot(&self.data, &other.data)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

pub fn dense_reference_state(p: &Distribution, purification: Purification) -> Result<DenseState> {
    Ok(DenseModel::new(p, purification)?.reference_state())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{make_uniform, Distribution};
    use crate::encode::initial_branch_state;

    #[test]
    fn spectrum_is_plus_minus_sigma() {
        let p = Distribution::new(vec![0.64, 0.36]).unwrap();
        let m = DenseModel::new(&p, Purification::RandomSeeded(3)).unwrap();
        let mut ls: Vec<f64> = m.spectrum().iter().map(|e| e.lambda).collect();
        ls.sort_by(f64::total_cmp);
        let want = [-0.4, -0.3, 0.3, 0.4];
        assert_eq!(ls.len(), 4);
        for (l, w) in ls.iter().zip(want) {
            assert!((l - w).abs() < 1e-12);
        }
    }

    #[test]
    fn branch_vectors_are_eigenvectors() {
        let p = Distribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        let m = DenseModel::new(&p, Purification::RandomSeeded(11)).unwrap();
        for i in 0..3 {
            for b in 0..2 {
                let v = m.branch_vector(i, b);
                let hv = m.apply_h(&v);
                let lam = NUS[b] * p.probs()[i].sqrt() / 2.0;
                let r: f64 = hv.iter().zip(&v).map(|(a, x)| (a - lam * x).norm_sqr()).sum();
                assert!(r < 1e-24);
            }
        }
    }

    #[test]
    fn reference_matches_embedding() {
        for purif in [Purification::Fixed, Purification::RandomSeeded(7)] {
            let p = make_uniform(2).unwrap();
            let m = DenseModel::new(&p, purif).unwrap();
            let e = m.embed(&initial_branch_state(&p));
            assert!((m.reference_state().inner(&e).re - 1.0).abs() < 1e-12);
        }
        let p = make_uniform(9).unwrap();
        assert!(matches!(
            DenseModel::new(&p, Purification::Fixed),
            Err(Error::CapacityExceeded { .. })
        ));
    }
}
