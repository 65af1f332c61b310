//! Received energy under Gaussian direction-of-arrival errors.
//!
//! Each RISS configures its phases from estimated angles. The estimate of
//! each direction cosine is off by a zero-mean Gaussian `ξ`, common to a whole
//! array axis, so the `n`-th element along that axis picks up a residual phase
//! `nξ`. The expected energy has a closed form in per-axis double sums; a
//! sampler drawing the same errors serves as its oracle and also estimates the
//! ergodic spectral efficiency.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::RissLink;
use crate::error::{Error, Result};
use crate::sampling::{map_chunks, Estimate, Moments};

pub const MIN_SAMPLES: usize = 10_000;

/// Per-RISS error deviations in radians.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RissErrors {
    /// User-side estimate, first axis.
    pub h_phi: f64,
    /// User-side estimate, second axis.
    pub h_theta: f64,
    /// BS-side estimate, first axis.
    pub g_phi: f64,
    /// BS-side estimate, second axis.
    pub g_theta: f64,
}

impl RissErrors {
    pub fn uniform(sigma: f64) -> Self {
        Self {
            h_phi: sigma,
            h_theta: sigma,
            g_phi: sigma,
            g_theta: sigma,
        }
    }

    /// `σ²_φ = σ²_h,φ + σ²_G,φ`, paired with the `nx` axis.
    pub fn var_phi(&self) -> f64 {
        self.h_phi * self.h_phi + self.g_phi * self.g_phi
    }

    /// `σ²_ϑ = σ²_h,ϑ + σ²_G,ϑ`, paired with the `ny` axis.
    pub fn var_theta(&self) -> f64 {
        self.h_theta * self.h_theta + self.g_theta * self.g_theta
    }

    fn is_valid(&self) -> bool {
        [self.h_phi, self.h_theta, self.g_phi, self.g_theta]
            .iter()
            .all(|s| *s >= 0.0 && s.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel(pub Vec<RissErrors>);

impl ErrorModel {
    pub fn uniform(riss: usize, sigma: f64) -> Self {
        Self(vec![RissErrors::uniform(sigma); riss])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// End-to-end amplitudes `ζ_k = ϱ_B2R,k ϱ_R2U,k √η_k √M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainProfile(pub Vec<f64>);

impl GainProfile {
    pub fn from_links(links: &[RissLink], powers: &[f64]) -> Result<Self> {
        if links.len() != powers.len() {
            return Err(Error::DimensionMismatch {
                expected: links.len(),
                found: powers.len(),
            });
        }
        Ok(Self(
            links
                .iter()
                .zip(powers)
                .map(|(l, p)| {
                    l.pathloss_b2r
                        * l.pathloss_r2u
                        * p.max(0.0).sqrt()
                        * (l.antennas() as f64).sqrt()
                })
                .collect(),
        ))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check(gains: &GainProfile, errors: &ErrorModel, nx: usize, ny: usize) -> Result<()> {
    if gains.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: gains.len(),
            found: errors.len(),
        });
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidInput(
            "array dimensions must be positive".into(),
        ));
    }
    if let Some(z) = gains.0.iter().find(|z| !(**z >= 0.0) || !z.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "gains must be non-negative, got {z}"
        )));
    }
    if let Some(k) = errors.0.iter().position(|e| !e.is_valid()) {
        return Err(Error::InvalidInput(format!(
            "RISS {k}: deviations must be non-negative"
        )));
    }
    Ok(())
}

/// `Σ_i Σ_j e^{−(i−j)² s² / 2}` over `i, j < n`.
fn double_sum(n: usize, var: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = i as f64 - j as f64;
            total += (-d * d * var / 2.0).exp();
        }
    }
    total
}

/// `Σ_{m<n} e^{−m² s² / 2}`, the mean of one axis response.
fn single_sum(n: usize, var: f64) -> f64 {
    (0..n).map(|m| (-((m * m) as f64) * var / 2.0).exp()).sum()
}

/// Expected received energy `E|y|²`, watts.
///
/// Self terms use the full double sum per axis; cross terms between RISSs
/// factor into products of the mean axis responses since their errors are
/// independent.
pub fn expected_power_closed_form(
    gains: &GainProfile,
    errors: &ErrorModel,
    nx: usize,
    ny: usize,
) -> Result<f64> {
    check(gains, errors, nx, ny)?;
    let z = &gains.0;
    let e = &errors.0;
    let part1: f64 = z
        .iter()
        .zip(e)
        .map(|(z, e)| z * z * double_sum(nx, e.var_phi()) * double_sum(ny, e.var_theta()))
        .sum();
    let means: Vec<f64> = e
        .iter()
        .map(|e| single_sum(nx, e.var_phi()) * single_sum(ny, e.var_theta()))
        .collect();
    let mut part2 = 0.0;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            part2 += 2.0 * z[i] * z[j] * means[i] * means[j];
        }
    }
    Ok(part1 + part2)
}

/// `log2(1 + E/σ0²)`.
pub fn ese_upper_bound(expected_power: f64, noise_power: f64) -> Result<f64> {
    if !(expected_power >= 0.0) || !(noise_power > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need expected power ≥ 0 and noise > 0, got {expected_power}, {noise_power}"
        )));
    }
    Ok((expected_power / noise_power).ln_1p() / std::f64::consts::LN_2)
}

/// `Σ_{m<n} e^{imξ}`.
#[inline]
fn axis_response(xi: f64, n: usize) -> Complex64 {
    let step = Complex64::from_polar(1.0, xi);
    let mut phasor = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for _ in 0..n {
        acc += phasor;
        phasor *= step;
    }
    acc
}

/// Sampled received energy and spectral efficiency from one set of draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedStats {
    pub samples: usize,
    /// `|y|²`, watts.
    pub power: Estimate,
    /// `log2(1 + |y|²/σ0²)`, bits/s/Hz.
    pub spectral_efficiency: Estimate,
}

/// Draws four independent errors per RISS per sample, in the order
/// `h_φ, h_ϑ, G_φ, G_ϑ`, and forms `y = Σ_k ζ_k A(ξ_φ,k, nx) A(ξ_ϑ,k, ny)`.
///
/// The draws depend only on `(seed, samples, K)`, so runs that differ only in
/// `noise_power` or in the deviations are paired.
pub fn sample_received(
    gains: &GainProfile,
    errors: &ErrorModel,
    nx: usize,
    ny: usize,
    noise_power: f64,
    samples: usize,
    seed: u64,
) -> Result<ReceivedStats> {
    check(gains, errors, nx, ny)?;
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if !(noise_power > 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise power must be positive, got {noise_power}"
        )));
    }
    let parts = map_chunks(samples, seed, |rng, n| {
        let mut power = Moments::default();
        let mut se = Moments::default();
        for _ in 0..n {
            let mut y = Complex64::new(0.0, 0.0);
            for (z, e) in gains.0.iter().zip(&errors.0) {
                let h_phi: f64 = rng.sample(StandardNormal);
                let h_theta: f64 = rng.sample(StandardNormal);
                let g_phi: f64 = rng.sample(StandardNormal);
                let g_theta: f64 = rng.sample(StandardNormal);
                let xi_phi = e.h_phi * h_phi + e.g_phi * g_phi;
                let xi_theta = e.h_theta * h_theta + e.g_theta * g_theta;
                y += axis_response(xi_phi, nx) * axis_response(xi_theta, ny) * *z;
            }
            let p = y.norm_sqr();
            power.push(p);
            se.push((p / noise_power).ln_1p() / std::f64::consts::LN_2);
        }
        (power, se)
    });
    Ok(ReceivedStats {
        samples,
        power: Moments::merge_all(parts.iter().map(|(p, _)| p)).estimate(),
        spectral_efficiency: Moments::merge_all(parts.iter().map(|(_, s)| s)).estimate(),
    })
}

pub fn expected_power_mc(
    gains: &GainProfile,
    errors: &ErrorModel,
    nx: usize,
    ny: usize,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    Ok(sample_received(gains, errors, nx, ny, 1.0, samples, seed)?.power)
}

pub fn ergodic_se_mc(
    gains: &GainProfile,
    errors: &ErrorModel,
    nx: usize,
    ny: usize,
    noise_power: f64,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    Ok(sample_received(gains, errors, nx, ny, noise_power, samples, seed)?.spectral_efficiency)
}

/// `(2l − 1)!!`, with `(−1)!! = 1`.
pub fn double_factorial_odd(l: u32) -> f64 {
    (1..=l).map(|i| (2 * i - 1) as f64).product()
}

/// Sampled `E[X^{2l}]` for `X ~ 𝒩(0, σ²)`.
pub fn even_moment_mc(sigma: f64, l: u32, samples: usize, seed: u64) -> Result<Estimate> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    if samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let parts = map_chunks(samples, seed, |rng, n| {
        let mut m = Moments::default();
        for _ in 0..n {
            let x: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
            m.push(x.powi(2 * l as i32));
        }
        m
    });
    Ok(Moments::merge_all(&parts).estimate())
}

/// One σ point of an error sweep with all four deviations equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub sigma: f64,
    pub e_closed: f64,
    pub e_mc: Estimate,
    pub ese_bound: f64,
    pub ese_mc: Estimate,
}

/// Sweeps `σ`, reusing the same seed at every point so neighbouring points
/// share their normal draws.
pub fn error_sweep(
    gains: &GainProfile,
    nx: usize,
    ny: usize,
    noise_power: f64,
    sigmas: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    sigmas
        .iter()
        .map(|&sigma| {
            let errors = ErrorModel::uniform(gains.len(), sigma);
            let e_closed = expected_power_closed_form(gains, &errors, nx, ny)?;
            let mc = sample_received(gains, &errors, nx, ny, noise_power, samples, seed)?;
            Ok(SweepPoint {
                sigma,
                e_closed,
                e_mc: mc.power,
                ese_bound: ese_upper_bound(e_closed, noise_power)?,
                ese_mc: mc.spectral_efficiency,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// `n + 2 Σ_{d≥1} (n − d) e^{−d² s²/2}`.
    fn banded(n: usize, var: f64) -> f64 {
        n as f64
            + 2.0
                * (1..n)
                    .map(|d| (n - d) as f64 * (-((d * d) as f64) * var / 2.0).exp())
                    .sum::<f64>()
    }

    /// `Σ_k ζ_k² (D_φ D_ϑ − (S_φ S_ϑ)²) + (Σ_k ζ_k S_φ S_ϑ)²`.
    fn variance_route(z: &[f64], e: &[RissErrors], nx: usize, ny: usize) -> f64 {
        let mut spread = 0.0;
        let mut mean = 0.0;
        for (z, e) in z.iter().zip(e) {
            let s = single_sum(nx, e.var_phi()) * single_sum(ny, e.var_theta());
            spread += z * z * (banded(nx, e.var_phi()) * banded(ny, e.var_theta()) - s * s);
            mean += z * s;
        }
        spread + mean * mean
    }

    #[test]
    fn two_by_one_hand_value() {
        let g = GainProfile(vec![3.0]);
        // σ²_φ = 1 + 1 = 2
        let e = ErrorModel(vec![RissErrors {
            h_phi: 1.0,
            g_phi: 1.0,
            ..Default::default()
        }]);
        let v = expected_power_closed_form(&g, &e, 2, 1).unwrap();
        assert_relative_eq!(v, 9.0 * (2.0 + 2.0 * (-1f64).exp()), max_relative = 1e-14);
        assert_relative_eq!(v / 9.0, 2.7358, epsilon = 1e-4);
    }

    #[test]
    fn noiseless_is_coherent_sum() {
        let g = GainProfile(vec![1e-6, 2.5e-6, 0.7e-6]);
        let e = ErrorModel::uniform(3, 0.0);
        let v = expected_power_closed_form(&g, &e, 25, 25).unwrap();
        let want = (625.0 * (1e-6 + 2.5e-6 + 0.7e-6f64)).powi(2);
        assert_relative_eq!(v, want, max_relative = 1e-12);
        let mc = expected_power_mc(&g, &e, 25, 25, MIN_SAMPLES, 1).unwrap();
        assert_relative_eq!(mc.mean, want, max_relative = 1e-12);
        assert!(mc.stderr <= 1e-12 * want);
    }

    #[test]
    fn large_sigma_floor() {
        let g = GainProfile(vec![2.0, 1.0]);
        let e = ErrorModel::uniform(2, 50.0);
        let v = expected_power_closed_form(&g, &e, 5, 4).unwrap();
        // self terms keep only the diagonal; the first element on each axis
        // carries no phase error, so the mean response tends to 1, not 0
        assert_relative_eq!(
            v,
            (4.0 + 1.0) * 20.0 + 2.0 * 2.0 * 1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn literal_sum_matches_banded_form() {
        for n in [1, 2, 5, 25] {
            for var in [0.0, 1e-3, 0.1, 2.0] {
                assert_relative_eq!(double_sum(n, var), banded(n, var), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn matches_variance_decomposition() {
        let z = vec![1.0, 0.3, 2.2, 0.9];
        let e: Vec<RissErrors> = (0..4)
            .map(|k| RissErrors {
                h_phi: 0.01 * k as f64,
                h_theta: 0.05,
                g_phi: 0.02,
                g_theta: 0.003 * k as f64,
            })
            .collect();
        let v = expected_power_closed_form(&GainProfile(z.clone()), &ErrorModel(e.clone()), 5, 7)
            .unwrap();
        assert_relative_eq!(v, variance_route(&z, &e, 5, 7), max_relative = 1e-12);
    }

    #[test]
    fn closed_form_agrees_with_sampler() {
        let g = GainProfile(vec![1.0, 0.5]);
        let e = ErrorModel(vec![RissErrors::uniform(0.1), RissErrors::uniform(0.05)]);
        let c = expected_power_closed_form(&g, &e, 5, 5).unwrap();
        let mc = expected_power_mc(&g, &e, 5, 5, 200_000, 7).unwrap();
        assert!((c - mc.mean).abs() <= 3.0 * mc.stderr, "{c} vs {mc:?}");
    }

    #[test]
    fn zero_gain_riss_drops_out() {
        let one = GainProfile(vec![1.0]);
        let two = GainProfile(vec![1.0, 0.0]);
        let e1 = ErrorModel::uniform(1, 0.2);
        let e2 = ErrorModel::uniform(2, 0.2);
        assert_relative_eq!(
            expected_power_closed_form(&one, &e1, 5, 5).unwrap(),
            expected_power_closed_form(&two, &e2, 5, 5).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn bound_cases() {
        assert_relative_eq!(ese_upper_bound(2.0, 2.0).unwrap(), 1.0);
        assert_eq!(ese_upper_bound(0.0, 2.0).unwrap(), 0.0);
        assert!(ese_upper_bound(1.0, 0.0).is_err());
    }

    #[test]
    fn se_noiseless_equals_bound_and_jensen_holds() {
        let g = GainProfile(vec![1e-6, 2e-6]);
        let noise = 1e-10;
        for sigma in [0.0, 0.02 * PI, 0.05 * PI] {
            let e = ErrorModel::uniform(2, sigma);
            let bound =
                ese_upper_bound(expected_power_closed_form(&g, &e, 5, 5).unwrap(), noise).unwrap();
            let se = ergodic_se_mc(&g, &e, 5, 5, noise, 50_000, 3).unwrap();
            if sigma == 0.0 {
                assert_relative_eq!(se.mean, bound, max_relative = 1e-12);
            } else {
                assert!(
                    se.mean < bound - 3.0 * se.stderr,
                    "{sigma}: {se:?} vs {bound}"
                );
            }
        }
    }

    #[test]
    fn se_non_increasing_in_sigma_with_paired_draws() {
        let g = GainProfile(vec![1e-6, 2e-6, 0.5e-6]);
        let sigmas: Vec<f64> = (0..6).map(|i| 0.01 * PI * i as f64).collect();
        let pts = error_sweep(&g, 5, 5, 1e-8, &sigmas, 20_000, 11).unwrap();
        assert!(pts.windows(2).all(|w| w[1].ese_mc.mean <= w[0].ese_mc.mean));
        assert!(pts.windows(2).all(|w| w[1].e_closed <= w[0].e_closed));
    }

    #[test]
    fn moments_and_double_factorial() {
        assert_eq!(double_factorial_odd(0), 1.0);
        assert_eq!(double_factorial_odd(3), 15.0);
        let s = 0.3;
        for l in 1..=3 {
            let m = even_moment_mc(s, l, 400_000, l as u64).unwrap();
            let want = s.powi(2 * l as i32) * double_factorial_odd(l);
            assert!(
                (m.mean - want).abs() <= 3.0 * m.stderr,
                "l={l}: {m:?} vs {want}"
            );
        }
    }

    #[test]
    fn input_checks() {
        let g = GainProfile(vec![1.0]);
        assert!(expected_power_closed_form(&g, &ErrorModel::uniform(2, 0.1), 2, 2).is_err());
        assert!(expected_power_closed_form(&g, &ErrorModel::uniform(1, -0.1), 2, 2).is_err());
        assert!(expected_power_mc(&g, &ErrorModel::uniform(1, 0.1), 2, 2, 100, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn permutation_invariant(
            zs in prop::collection::vec((0.0..3.0f64, 0.0..0.3f64, 0.0..0.3f64), 1..5),
            rot in 0usize..4,
        ) {
            let g = GainProfile(zs.iter().map(|t| t.0).collect());
            let e = ErrorModel(zs.iter().map(|t| RissErrors { h_phi: t.1, g_phi: t.2, h_theta: t.2, g_theta: t.1 }).collect());
            let mut g2 = g.clone();
            let mut e2 = e.clone();
            let r = rot % g.len();
            g2.0.rotate_left(r);
            e2.0.rotate_left(r);
            let a = expected_power_closed_form(&g, &e, 4, 3).unwrap();
            let b = expected_power_closed_form(&g2, &e2, 4, 3).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        }

        #[test]
        fn between_floor_and_coherent(
            zs in prop::collection::vec(0.01..3.0f64, 1..5),
            sigma in 0.0..2.0f64,
            nx in 1usize..8,
            ny in 1usize..8,
        ) {
            let g = GainProfile(zs.clone());
            let e = ErrorModel::uniform(zs.len(), sigma);
            let v = expected_power_closed_form(&g, &e, nx, ny).unwrap();
            let n = (nx * ny) as f64;
            let coherent = (n * zs.iter().sum::<f64>()).powi(2);
            let floor = n * zs.iter().map(|z| z * z).sum::<f64>();
            prop_assert!(v <= coherent * (1.0 + 1e-12));
            prop_assert!(v >= floor * (1.0 - 1e-12));
        }

        #[test]
        fn axis_response_matches_direct(xi in -3.0..3.0f64, n in 1usize..30) {
            let direct: Complex64 = (0..n).map(|m| Complex64::from_polar(1.0, m as f64 * xi)).sum();
            prop_assert!((axis_response(xi, n) - direct).norm() < 1e-11);
            // even in ξ
            let a = axis_response(xi, n).norm_sqr();
            let b = axis_response(-xi, n).norm_sqr();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
