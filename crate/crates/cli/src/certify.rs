//! Single-polynomial construction for inspection from the command line.

use qmle_core::poly::{build_neg_power, build_pos_power, build_sqrt_log, ChebPoly};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum PolySpec {
    /// Approximates `(delta / x)^c / 2` on `[delta, 1]`.
    NegPower { c: f64, delta: f64, eps: f64 },
    /// Approximates a scaled `|x|^c` on `[nu, beta]`.
    PosPower { c: f64, nu: f64, beta: f64, eta: f64 },
    /// Level `j` of the square-root-logarithm family.
    SqrtLog { j: u32, tol: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct PolyOutput {
    pub spec: PolySpec,
    pub degree: u64,
    pub representation_error: f64,
    pub poly: ChebPoly,
}

pub fn build(spec: &PolySpec) -> Result<ChebPoly, CliError> {
    let p = match *spec {
        PolySpec::NegPower { c, delta, eps } => build_neg_power(c, delta, eps)?,
        PolySpec::PosPower { c, nu, beta, eta } => build_pos_power(c, nu, beta, eta)?,
        PolySpec::SqrtLog { j, tol } => build_sqrt_log(j, tol)?,
    };
    Ok(p)
}

pub fn certify_poly(spec: PolySpec) -> Result<PolyOutput, CliError> {
    let poly = build(&spec)?;
    Ok(PolyOutput { degree: poly.degree(), representation_error: poly.representation_error(), poly, spec })
}
