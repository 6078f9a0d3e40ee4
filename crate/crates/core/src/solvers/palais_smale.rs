use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fields::{Regime, RegimeReport};

use super::TraceEntry;

/// A-posteriori Palais–Smale check on a solver trace: along a sequence with
/// bounded energy and vanishing residual, `(1/p⁺ − 1/η)‖u‖^{p⁻} ≤ M + ‖u‖`
/// must hold wherever `‖u‖_β ≥ 1`, with `M = sup |J|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsCheck {
    pub eta: f64,
    pub energy_bound: f64,
    /// Entries with `‖u‖_β ≥ 1` that were tested.
    pub checked: usize,
    pub violations: usize,
    pub max_beta_norm: f64,
    pub final_residual: f64,
    pub holds: bool,
}

pub fn ps_check(trace: &[TraceEntry], regime: &RegimeReport) -> Result<PsCheck> {
    regime.require(Regime::Superlinear)?;
    let Some(last) = trace.last() else {
        return Err(invalid("empty trace"));
    };
    let eta = regime.eta().ok_or_else(|| invalid("regime has no η interval"))?;
    let energy_bound = trace.iter().map(|t| t.j.abs()).fold(0.0, f64::max);
    let coef = 1.0 / regime.p_plus - 1.0 / eta;
    let mut checked = 0;
    let mut violations = 0;
    for t in trace.iter().filter(|t| t.beta_norm >= 1.0) {
        checked += 1;
        if coef * t.beta_norm.powf(regime.p_minus) > energy_bound + t.beta_norm {
            violations += 1;
        }
    }
    let max_beta_norm = trace.iter().map(|t| t.beta_norm).fold(0.0, f64::max);
    Ok(PsCheck {
        eta,
        energy_bound,
        checked,
        violations,
        max_beta_norm,
        final_residual: last.residual,
        holds: violations == 0 && max_beta_norm.is_finite(),
    })
}
