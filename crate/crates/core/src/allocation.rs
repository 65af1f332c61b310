//! Transmit-power allocation across RISSs.
//!
//! Sensing equalizes the power delivered to every RISS (max-min), which puts
//! more power on distant panels. Communication maximizes the coherent
//! amplitude `Σ c_k √η_k` at the user. Both problems have closed-form KKT
//! solutions with a tight budget; a brute-force simplex search is provided as
//! an independent check.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationMode {
    /// `max t` s.t. `ϱ²_B2R,i η_i ≥ t`, `Σ η_i ≤ P`.
    Sensing,
    /// `max Σ c_k √η_k` s.t. `Σ η_k ≤ P`.
    Communication,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// Per-RISS transmit power, watts.
    pub powers: Vec<f64>,
    /// `t` for sensing, `Σ c_k √η_k` for communication.
    pub objective: f64,
    pub mode: AllocationMode,
}

impl PowerAllocation {
    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }

    /// Fraction of the allocated total that goes to each RISS.
    pub fn shares(&self) -> Vec<f64> {
        let total = self.total();
        self.powers
            .iter()
            .map(|p| if total > 0.0 { p / total } else { 0.0 })
            .collect()
    }
}

fn check_budget(budget: f64) -> Result<()> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::InvalidInput(format!(
            "power budget must be positive, got {budget}"
        )));
    }
    Ok(())
}

/// `min_i ϱ_i² η_i`.
pub fn sensing_objective(pathloss_b2r: &[f64], powers: &[f64]) -> f64 {
    pathloss_b2r
        .iter()
        .zip(powers)
        .map(|(r, p)| r * r * p)
        .fold(f64::INFINITY, f64::min)
}

/// `Σ_k c_k √η_k`.
pub fn communication_objective(coeffs: &[f64], powers: &[f64]) -> f64 {
    coeffs.iter().zip(powers).map(|(c, p)| c * p.sqrt()).sum()
}

/// Max-min allocation: `η_i = t / ϱ_i²` with `t = P / Σ_j ϱ_j⁻²`.
pub fn sensing_allocation(pathloss_b2r: &[f64], budget: f64) -> Result<PowerAllocation> {
    if pathloss_b2r.is_empty() {
        return Err(Error::InvalidInput("no RISS to allocate".into()));
    }
    check_budget(budget)?;
    if let Some(bad) = pathloss_b2r.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "pathloss amplitudes must be positive, got {bad}"
        )));
    }
    let inv: Vec<f64> = pathloss_b2r.iter().map(|r| 1.0 / (r * r)).collect();
    let total: f64 = inv.iter().sum();
    let t = budget / total;
    Ok(PowerAllocation {
        powers: inv.iter().map(|w| budget * (w / total)).collect(),
        objective: t,
        mode: AllocationMode::Sensing,
    })
}

/// Weighted-sum allocation: `η_k = P c_k² / Σ_j c_j²`, objective `√(P Σ c_j²)`.
///
/// RISSs with `c_k = 0` receive exactly zero power.
pub fn communication_allocation(coeffs: &[f64], budget: f64) -> Result<PowerAllocation> {
    check_budget(budget)?;
    if let Some(bad) = coeffs.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "coefficients must be non-negative, got {bad}"
        )));
    }
    let energy: f64 = coeffs.iter().map(|c| c * c).sum();
    if !(energy > 0.0) {
        return Err(Error::InvalidInput(
            "at least one coefficient must be positive".into(),
        ));
    }
    Ok(PowerAllocation {
        powers: coeffs.iter().map(|c| budget * c * c / energy).collect(),
        objective: (budget * energy).sqrt(),
        mode: AllocationMode::Communication,
    })
}

/// Largest RISS count the grid oracle enumerates.
pub const ORACLE_MAX_RISS: usize = 4;

/// Exhaustive search over the simplex `{η : Σ η = P, η_k ∈ (P/n)·ℕ}` with
/// `n = round(1 / resolution)`.
///
/// Only the budget face is searched: both objectives are non-decreasing in
/// every `η_k`, so some optimum always spends the whole budget.
pub fn oracle_grid_search(
    mode: AllocationMode,
    coeffs: &[f64],
    budget: f64,
    resolution: f64,
) -> Result<PowerAllocation> {
    check_budget(budget)?;
    let k = coeffs.len();
    if k == 0 {
        return Err(Error::InvalidInput("no RISS to allocate".into()));
    }
    if k > ORACLE_MAX_RISS {
        return Err(Error::OracleInfeasible(format!(
            "{k} RISSs exceed the exhaustive limit of {ORACLE_MAX_RISS}"
        )));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "resolution must lie in (0, 1], got {resolution}"
        )));
    }
    let steps = (1.0 / resolution).round() as usize;
    let objective = |powers: &[f64]| match mode {
        AllocationMode::Sensing => sensing_objective(coeffs, powers),
        AllocationMode::Communication => communication_objective(coeffs, powers),
    };

    let mut counts = vec![0usize; k];
    let mut powers = vec![0.0; k];
    let mut best = (f64::NEG_INFINITY, vec![0.0; k]);
    let mut visit = |counts: &[usize], powers: &mut [f64]| {
        for (p, c) in powers.iter_mut().zip(counts) {
            *p = budget * *c as f64 / steps as f64;
        }
        let value = objective(powers);
        if value > best.0 {
            best = (value, powers.to_vec());
        }
    };
    enumerate_compositions(steps, 0, &mut counts, &mut |c| visit(c, &mut powers));

    Ok(PowerAllocation {
        powers: best.1,
        objective: best.0,
        mode,
    })
}

fn enumerate_compositions(
    remaining: usize,
    index: usize,
    counts: &mut [usize],
    f: &mut impl FnMut(&[usize]),
) {
    if index + 1 == counts.len() {
        counts[index] = remaining;
        f(counts);
        return;
    }
    for c in 0..=remaining {
        counts[index] = c;
        enumerate_compositions(remaining - c, index + 1, counts, f);
    }
}
