//! Leakage-free RISS placement.
//!
//! RISSs sit on a line parallel to the BS array at perpendicular offset `rr`.
//! Slot `l` is chosen so that the departure sine is exactly `2l/M`; any two
//! slots then differ by a multiple of `2/M`, and the BS beams aimed at them
//! are mutually orthogonal.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementGrid {
    /// Perpendicular offset `R_r` of the RISS line from the BS, meters.
    pub rr: f64,
    /// BS antenna count `M`.
    pub antennas: usize,
    /// Slot positions along the array axis, meters. `slots[l]` has sine `2l/M`.
    pub slots: Vec<f64>,
}

impl PlacementGrid {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Departure sine of slot `l`, `2l/M`.
    pub fn sine(&self, l: usize) -> f64 {
        2.0 * l as f64 / self.antennas as f64
    }

    /// Right end of the deployment interval, the position of the last slot.
    pub fn span(&self) -> f64 {
        self.slots.last().copied().unwrap_or(0.0)
    }
}

/// Largest slot count used by default for an `M`-element array, `M/2 − 1`.
///
/// `2L ≤ M` would also admit `L = M/2`, but its last slot sits at a sine of
/// `1 − 2/M`, far off broadside; the default keeps the same range as the
/// experiments.
pub fn default_slot_count(antennas: usize) -> usize {
    (antennas / 2).saturating_sub(1).max(1)
}

/// Slots `x_l = 2·l·rr / √(M² − 4l²)` for `l = 0 … L−1`.
pub fn orthogonal_grid(slots: usize, rr: f64, antennas: usize) -> Result<PlacementGrid> {
    if slots == 0 {
        return Err(Error::Infeasible("need at least one slot".into()));
    }
    if 2 * slots > antennas {
        return Err(Error::Infeasible(format!(
            "{slots} slots need at least {} antennas, have {antennas}",
            2 * slots
        )));
    }
    if !(rr > 0.0) || !rr.is_finite() {
        return Err(Error::InvalidInput(format!(
            "rr must be positive, got {rr}"
        )));
    }
    let m = antennas as f64;
    let slots = (0..slots)
        .map(|l| {
            let l = l as f64;
            2.0 * l * rr / (m * m - 4.0 * l * l).sqrt()
        })
        .collect();
    Ok(PlacementGrid {
        rr,
        antennas,
        slots,
    })
}

/// Spreads `n_riss` targets evenly over `[0, grid.span()]` and snaps each to
/// the nearest free slot.
///
/// Targets are processed left to right; a target whose nearest slot is taken
/// moves to the nearest unused one (ties go to the lower index). The result is
/// sorted and duplicate-free.
pub fn quantize_uniform(n_riss: usize, grid: &PlacementGrid) -> Result<Vec<usize>> {
    if n_riss == 0 {
        return Err(Error::InvalidInput("n_riss must be positive".into()));
    }
    if n_riss > grid.len() {
        return Err(Error::Infeasible(format!(
            "{n_riss} RISSs do not fit on {} slots",
            grid.len()
        )));
    }
    let span = grid.span();
    let mut used = vec![false; grid.len()];
    let mut chosen = Vec::with_capacity(n_riss);
    for i in 0..n_riss {
        let target = if n_riss == 1 {
            0.0
        } else {
            span * i as f64 / (n_riss - 1) as f64
        };
        let best = grid
            .slots
            .iter()
            .enumerate()
            .filter(|(l, _)| !used[*l])
            .min_by(|(_, a), (_, b)| {
                (*a - target)
                    .abs()
                    .partial_cmp(&(*b - target).abs())
                    .expect("slot positions are finite")
            })
            .map(|(l, _)| l)
            .expect("a free slot exists since n_riss ≤ slots");
        used[best] = true;
        chosen.push(best);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Inner product of two BS beams, `Σ_{m=1}^{M} e^{iπ(m−1)(sine_k − sine_i)}`.
pub fn leakage(sine_k: f64, sine_i: f64, antennas: usize) -> Complex64 {
    let delta = PI * (sine_k - sine_i);
    (0..antennas)
        .map(|m| Complex64::from_polar(1.0, m as f64 * delta))
        .sum()
}
