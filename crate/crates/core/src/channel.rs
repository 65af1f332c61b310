//! Steering vectors, rank-one channels and free-space pathloss.
//!
//! Planar responses are kept in Kronecker-factored form `u ⊗ v`; a 25×25 panel
//! is therefore two length-25 vectors rather than one of length 625. Every
//! quantity the simulator needs is a bilinear form that factorizes over the
//! two panel axes.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scene::{departure_sine, panel_direction_cosines, Scenario};

/// Linear-array response `[1, e^{iϖ}, …, e^{i(M−1)ϖ}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(Vec<Complex64>);

impl SteeringVector {
    pub fn from_entries(entries: Vec<Complex64>) -> Self {
        SteeringVector(entries)
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn conj(&self) -> SteeringVector {
        SteeringVector(self.0.iter().map(|z| z.conj()).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Entrywise product.
    pub fn hadamard(&self, other: &SteeringVector) -> Result<SteeringVector> {
        check_len(self.len(), other.len())?;
        Ok(SteeringVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect(),
        ))
    }

    /// Unconjugated inner product `aᵀb`.
    pub fn dot(&self, other: &[Complex64]) -> Result<Complex64> {
        check_len(self.len(), other.len())?;
        Ok(self.0.iter().zip(other).map(|(a, b)| a * b).sum())
    }
}

/// Uniform planar array response `α = α_u ⊗ α_v` in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarSteering {
    pub along_u: SteeringVector,
    pub along_v: SteeringVector,
}

impl PlanarSteering {
    pub fn nx(&self) -> usize {
        self.along_u.len()
    }

    pub fn ny(&self) -> usize {
        self.along_v.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn conj(&self) -> PlanarSteering {
        PlanarSteering {
            along_u: self.along_u.conj(),
            along_v: self.along_v.conj(),
        }
    }

    /// Entrywise product; the Kronecker structure is preserved factor by factor.
    pub fn hadamard(&self, other: &PlanarSteering) -> Result<PlanarSteering> {
        Ok(PlanarSteering {
            along_u: self.along_u.hadamard(&other.along_u)?,
            along_v: self.along_v.hadamard(&other.along_v)?,
        })
    }

    /// Entry `n = i·ny + j` of the dense Kronecker product.
    pub fn entry(&self, n: usize) -> Complex64 {
        let ny = self.ny();
        self.along_u.0[n / ny] * self.along_v.0[n % ny]
    }

    /// Dense `nx·ny` vector. Test and small-instance use only.
    pub fn to_dense(&self) -> Vec<Complex64> {
        (0..self.len()).map(|n| self.entry(n)).collect()
    }

    /// `Σ_n a_n d_n b_n` for three factored vectors, i.e. `aᵀ diag(d) b`.
    pub fn triple_sum(
        a: &PlanarSteering,
        d: &PlanarSteering,
        b: &PlanarSteering,
    ) -> Result<Complex64> {
        let axis =
            |x: &SteeringVector, y: &SteeringVector, z: &SteeringVector| -> Result<Complex64> {
                check_len(x.len(), y.len())?;
                check_len(x.len(), z.len())?;
                Ok(x.0
                    .iter()
                    .zip(&y.0)
                    .zip(&z.0)
                    .map(|((p, q), r)| p * q * r)
                    .sum())
            };
        Ok(axis(&a.along_u, &d.along_u, &b.along_u)? * axis(&a.along_v, &d.along_v, &b.along_v)?)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// ULA steering vector with per-element phase increment `phase` (radians).
pub fn ula_steering(phase: f64, len: usize) -> SteeringVector {
    SteeringVector(
        (0..len)
            .map(|m| Complex64::from_polar(1.0, m as f64 * phase))
            .collect(),
    )
}

/// UPA steering vector for direction cosines `(u, v)` at half-wavelength spacing.
pub fn upa_steering(u: f64, v: f64, nx: usize, ny: usize) -> PlanarSteering {
    PlanarSteering {
        along_u: ula_steering(PI * u, nx),
        along_v: ula_steering(PI * v, ny),
    }
}

fn free_space_amplitude(distance: f64, wavelength: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::InvalidInput(format!(
            "distance must be positive, got {distance}"
        )));
    }
    if !(wavelength > 0.0) {
        return Err(Error::InvalidInput(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    Ok(wavelength / (4.0 * PI * distance))
}

/// BS→RISS amplitude `λ / (4πd)`.
pub fn pathloss_b2r(distance: f64, wavelength: f64) -> Result<f64> {
    free_space_amplitude(distance, wavelength)
}

/// RISS→user amplitude; same free-space law as [`pathloss_b2r`].
pub fn pathloss_r2u(distance: f64, wavelength: f64) -> Result<f64> {
    free_space_amplitude(distance, wavelength)
}

/// User→RISS echo amplitude `√(ς / 4π) / d` for radar cross-section `ς`.
pub fn pathloss_u2r(distance: f64, rcs: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::InvalidInput(format!(
            "distance must be positive, got {distance}"
        )));
    }
    if !(rcs > 0.0) || !rcs.is_finite() {
        return Err(Error::InvalidInput(format!(
            "rcs must be positive, got {rcs}"
        )));
    }
    Ok((rcs / (4.0 * PI)).sqrt() / distance)
}

/// Rank-one channel `amplitude · α βᵀ` from the BS array to a panel.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneChannel {
    /// Panel-side response α.
    pub left: PlanarSteering,
    /// BS-side response β.
    pub right: SteeringVector,
    pub amplitude: f64,
}

impl RankOneChannel {
    /// Dense `N × M` matrix, row-major. Small instances only.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let left = self.left.to_dense();
        left.iter()
            .map(|a| {
                self.right
                    .entries()
                    .iter()
                    .map(|b| a * b * self.amplitude)
                    .collect()
            })
            .collect()
    }

    /// `βᵀw`, the scalar the precoder contributes; `G w = amplitude · (βᵀw) · α`.
    pub fn project(&self, w: &[Complex64]) -> Result<Complex64> {
        self.right.dot(w)
    }
}

/// Everything the downstream modules need about one RISS.
#[derive(Debug, Clone, PartialEq)]
pub struct RissLink {
    /// `G_k` with `amplitude = ϱ_B2R,k`.
    pub bs_to_riss: RankOneChannel,
    /// `h_k`.
    pub riss_to_user: PlanarSteering,
    /// Sine of the BS departure angle towards this RISS.
    pub departure_sine: f64,
    pub d_b2r: f64,
    pub d_r2u: f64,
    pub pathloss_b2r: f64,
    pub pathloss_r2u: f64,
}

impl RissLink {
    pub fn elements(&self) -> usize {
        self.riss_to_user.len()
    }

    pub fn antennas(&self) -> usize {
        self.bs_to_riss.right.len()
    }
}

/// Builds `G_k`, `h_k` and the link distances for every RISS in the scenario.
pub fn make_channels(scenario: &Scenario) -> Result<Vec<RissLink>> {
    let lambda = scenario.wavelength();
    let bs = &scenario.bs;
    scenario
        .riss
        .iter()
        .map(|riss| {
            let sine = departure_sine(bs, riss.position)?;
            let (gu, gv) = panel_direction_cosines(riss, bs.position)?;
            let (hu, hv) = panel_direction_cosines(riss, scenario.user_position)?;
            let d_b2r = bs.position.distance(riss.position);
            let d_r2u = riss.position.distance(scenario.user_position);
            let pathloss_b2r = pathloss_b2r(d_b2r, lambda)?;
            let pathloss_r2u = pathloss_r2u(d_r2u, lambda)?;
            Ok(RissLink {
                bs_to_riss: RankOneChannel {
                    left: upa_steering(gu, gv, riss.nx, riss.ny),
                    right: ula_steering(PI * sine, bs.antennas),
                    amplitude: pathloss_b2r,
                },
                riss_to_user: upa_steering(hu, hv, riss.nx, riss.ny),
                departure_sine: sine,
                d_b2r,
                d_r2u,
                pathloss_b2r,
                pathloss_r2u,
            })
        })
        .collect()
}
