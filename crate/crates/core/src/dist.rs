//! Discrete distributions and exact functionals used as ground truth.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const SUM_TOL: f64 = 1e-12;

/// A validated probability vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("distribution must have at least one entry"));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("entry {i} = {p} is not a probability")));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(invalid(format!("entries sum to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Scales nonnegative weights to unit mass.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(invalid("weights have zero total mass"));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    /// Returns a copy rescaled to unit mass.
    pub fn renormalize(&self) -> Result<Self> {
        Self::normalized(self.probs.clone())
    }

    /// Reads one probability per line; blank lines and `#` comments are skipped.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut probs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let p: f64 = line
                .parse()
                .map_err(|_| invalid(format!("line {}: cannot parse {line:?}", lineno + 1)))?;
            probs.push(p);
        }
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n(&self) -> usize {
        self.probs.len()
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(d)?;
        Distribution::new(probs).map_err(serde::de::Error::custom)
    }
}

pub fn make_uniform(n: usize) -> Result<Distribution> {
    if n == 0 {
        return Err(invalid("uniform distribution needs n >= 1"));
    }
    Distribution::new(vec![1.0 / n as f64; n])
}

/// `p_i` proportional to `(i+1)^(-s)`.
pub fn make_zipf(n: usize, s: f64) -> Result<Distribution> {
    if n == 0 {
        return Err(invalid("zipf distribution needs n >= 1"));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(invalid(format!("zipf exponent must be nonnegative, got {s}")));
    }
    Distribution::normalized((1..=n).map(|k| (k as f64).powf(-s)).collect())
}

/// `sum_i p_i^q`, with zero entries contributing zero.
pub fn exact_power_sum(p: &Distribution, q: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(invalid(format!("power sum needs q > 0, got {q}")));
    }
    Ok(p.probs.iter().filter(|&&x| x > 0.0).map(|&x| x.powf(q)).sum())
}

pub fn exact_tsallis(p: &Distribution, q: f64) -> Result<f64> {
    if q == 1.0 {
        return Err(invalid("Tsallis entropy at q = 1 is the Shannon entropy"));
    }
    Ok((exact_power_sum(p, q)? - 1.0) / (1.0 - q))
}

/// Natural-log Shannon entropy.
pub fn exact_shannon(p: &Distribution) -> f64 {
    -p.probs
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// Natural-log Rényi entropy of order `alpha`, `alpha != 1`.
pub fn exact_renyi(p: &Distribution, alpha: f64) -> Result<f64> {
    if alpha == 1.0 {
        return Err(invalid("Rényi entropy at alpha = 1 is the Shannon entropy"));
    }
    Ok(exact_power_sum(p, alpha)?.ln() / (1.0 - alpha))
}

/// Number of indices with `sqrt(p_i)` in `(rho^-(j+1), rho^-(j-1)]`.
pub fn count_neighborhood(p: &Distribution, rho: f64, j: u32) -> Result<usize> {
    if j == 0 {
        return Err(invalid("neighborhood index j must be >= 1"));
    }
    if !(rho > 1.0) {
        return Err(invalid(format!("gap ratio must exceed 1, got {rho}")));
    }
    let lo = rho.powi(-(j as i32 + 1));
    let hi = rho.powi(-(j as i32 - 1));
    Ok(p.probs
        .iter()
        .map(|x| x.sqrt())
        .filter(|&s| s > lo && s <= hi)
        .count())
}
