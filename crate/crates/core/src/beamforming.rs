//! Closed-form RISS phases, BS precoders and received-signal evaluation.
//!
//! With leakage removed by placement, each RISS link decouples into a panel
//! term `h_kᵀ Θ_k α_G,k` and a BS term `β_kᵀ w_k`. Both are maximized
//! independently: Θ_k co-phases the two panel responses, giving `N`, and the
//! matched-filter precoder gives `√(η_k M)`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::channel::{PlanarSteering, RissLink, SteeringVector};
use crate::error::{Error, Result};

/// Diagonal of the RISS phase matrix, stored in the same factored form as the
/// panel responses. Every entry has unit modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShifts(pub PlanarSteering);

impl PhaseShifts {
    /// Multiplies every entry by `e^{iφ}`; the factorization absorbs it into the `u` factor.
    pub fn rotated(&self, phase: f64) -> PhaseShifts {
        let rot = Complex64::from_polar(1.0, phase);
        let along_u = SteeringVector::from_entries(
            self.0.along_u.entries().iter().map(|z| z * rot).collect(),
        );
        PhaseShifts(PlanarSteering {
            along_u,
            along_v: self.0.along_v.clone(),
        })
    }
}

/// BS precoder `w = √η · direction` with a unit-norm direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub direction: Vec<Complex64>,
    pub power: f64,
}

impl Precoder {
    pub fn weights(&self) -> Vec<Complex64> {
        let amp = self.power.sqrt();
        self.direction.iter().map(|z| z * amp).collect()
    }
}

/// Per-RISS configuration installed for the communication scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct RissBeam {
    pub theta: PhaseShifts,
    pub precoder: Precoder,
    /// Path phase `Δφ_k` in `[0, 2π)`.
    pub path_phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    pub beams: Vec<RissBeam>,
}

/// `Θ_k = diag{(h_k ∘ α_G,k)^*}`.
pub fn optimal_theta(h: &PlanarSteering, g_left: &PlanarSteering) -> Result<PhaseShifts> {
    Ok(PhaseShifts(h.hadamard(g_left)?.conj()))
}

/// Matched-filter precoder `√η · β^* / ‖β‖`.
pub fn optimal_precoder(beta: &SteeringVector, power: f64) -> Result<Precoder> {
    if !(power >= 0.0) || !power.is_finite() {
        return Err(Error::InvalidInput(format!(
            "transmit power must be non-negative, got {power}"
        )));
    }
    let norm = beta.norm();
    if norm == 0.0 {
        return Err(Error::InvalidInput("zero steering vector".into()));
    }
    Ok(Precoder {
        direction: beta.conj().entries().iter().map(|z| z / norm).collect(),
        power,
    })
}

/// `h_kᵀ Θ G_k w` including both pathloss amplitudes, evaluated in factored form.
pub fn cascade_gain(
    link: &RissLink,
    theta: &PhaseShifts,
    weights: &[Complex64],
) -> Result<Complex64> {
    let panel = PlanarSteering::triple_sum(&link.riss_to_user, &theta.0, &link.bs_to_riss.left)?;
    let bs = link.bs_to_riss.project(weights)?;
    Ok(panel * bs * link.pathloss_b2r * link.pathloss_r2u)
}

/// Received amplitude at the user from RISS `k` under optimal beamforming:
/// `ϱ_B2R,k · ϱ_R2U,k · N · √M · √η_k`.
pub fn effective_gain(link: &RissLink, power: f64) -> f64 {
    link.pathloss_b2r
        * link.pathloss_r2u
        * link.elements() as f64
        * (link.antennas() as f64).sqrt()
        * power.max(0.0).sqrt()
}

/// Propagation phase `2π (d_B2R + d_R2U) / λ` reduced to `[0, 2π)`.
pub fn path_phase(link: &RissLink, wavelength: f64) -> f64 {
    let cycles = (link.d_b2r + link.d_r2u) / wavelength;
    (TAU * cycles.fract()).rem_euclid(TAU)
}

/// Installs the closed-form phases and precoders with per-RISS powers.
pub fn configure(links: &[RissLink], powers: &[f64], wavelength: f64) -> Result<PhaseConfig> {
    if links.len() != powers.len() {
        return Err(Error::DimensionMismatch {
            expected: links.len(),
            found: powers.len(),
        });
    }
    let beams = links
        .iter()
        .zip(powers)
        .map(|(link, &p)| {
            Ok(RissBeam {
                theta: optimal_theta(&link.riss_to_user, &link.bs_to_riss.left)?,
                precoder: optimal_precoder(&link.bs_to_riss.right, p)?,
                path_phase: path_phase(link, wavelength),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseConfig { beams })
}

/// Noiseless received amplitude with every precoder transmitting the same symbol:
/// `Σ_k Σ_i ϱ_B2R,k ϱ_R2U,k h_kᵀ Θ_k G_k w_i e^{−iΔφ_k}`.
///
/// Leakage terms (`i ≠ k`) are included. With `compensate`, each panel applies
/// `Θ_k e^{iΔφ_k}` so that all paths arrive in phase.
pub fn received_amplitude(
    links: &[RissLink],
    config: &PhaseConfig,
    compensate: bool,
) -> Result<Complex64> {
    if links.len() != config.beams.len() {
        return Err(Error::DimensionMismatch {
            expected: links.len(),
            found: config.beams.len(),
        });
    }
    let weights: Vec<Vec<Complex64>> = config.beams.iter().map(|b| b.precoder.weights()).collect();
    let antennas = links.first().map_or(0, |l| l.antennas());
    let mut total_w = vec![Complex64::new(0.0, 0.0); antennas];
    for w in &weights {
        for (acc, z) in total_w.iter_mut().zip(w) {
            *acc += z;
        }
    }
    let mut y = Complex64::new(0.0, 0.0);
    for (link, beam) in links.iter().zip(&config.beams) {
        let path = Complex64::from_polar(1.0, -beam.path_phase);
        let theta = if compensate {
            beam.theta.rotated(beam.path_phase)
        } else {
            beam.theta.clone()
        };
        y += cascade_gain(link, &theta, &total_w)? * path;
    }
    Ok(y)
}
