//! Detectable range of each RISS and the volume its coverage hemispheres span.
//!
//! A RISS detects the user while the per-element echo SNR stays above `Γ`.
//! With optimal beamforming that bound becomes a radius, and the region each
//! RISS serves is the half-ball below the panel. The union of those regions
//! is estimated by Monte Carlo.

use std::f64::consts::PI;

use rand::Rng;

use crate::channel::pathloss_b2r;
use crate::error::{Error, Result};
use crate::sampling::{map_chunks, Estimate, Moments};
use crate::scene::{Scenario, Vec3};

/// Smallest sample count accepted by the union estimator.
pub const MIN_SAMPLES: usize = 10_000;

/// Largest user distance at which RISS `k` still meets the SNR threshold
/// `gamma` (linear), given transmit power `eta` (watts) on its beam.
///
/// `d⁴ = λ² ς ϱ²_B2R η M N² / (64 π³ Γ σ0²)`.
pub fn detect_radius(scenario: &Scenario, k: usize, eta: f64, gamma: f64) -> Result<f64> {
    let riss = scenario.riss.get(k).ok_or_else(|| {
        Error::InvalidInput(format!(
            "RISS index {k} out of range ({})",
            scenario.riss.len()
        ))
    })?;
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "power must be non-negative, got {eta}"
        )));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidInput(format!(
            "threshold must be positive, got {gamma}"
        )));
    }
    let lambda = scenario.wavelength();
    let rho = pathloss_b2r(scenario.bs.position.distance(riss.position), lambda)?;
    let m = scenario.bs.antennas as f64;
    let n = riss.elements() as f64;
    let num = lambda * lambda * scenario.rf.rcs_m2 * rho * rho * eta * m * n * n;
    let den = 64.0 * PI.powi(3) * gamma * scenario.rf.noise_power_w;
    Ok((num / den).powf(0.25))
}

/// Half-ball `{p : |p − center| ≤ radius, p.z ≤ center.z}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hemisphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Hemisphere {
    pub fn new(center: Vec3, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn volume(&self) -> f64 {
        2.0 / 3.0 * PI * self.radius.powi(3)
    }

    #[inline]
    pub fn contains(&self, p: Vec3) -> bool {
        if p.z > self.center.z {
            return false;
        }
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        let dz = p.z - self.center.z;
        dx * dx + dy * dy + dz * dz <= self.radius * self.radius
    }
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl BoundingBox {
    pub fn volume(&self) -> f64 {
        (self.hi.x - self.lo.x).max(0.0)
            * (self.hi.y - self.lo.y).max(0.0)
            * (self.hi.z - self.lo.z).max(0.0)
    }

    /// Tight box around the hemispheres with positive radius.
    pub fn around(hemis: &[Hemisphere]) -> Option<BoundingBox> {
        let mut it = hemis.iter().filter(|h| h.radius > 0.0);
        let first = it.next()?;
        let corners = |h: &Hemisphere| {
            let r = h.radius;
            let c = h.center;
            (
                Vec3::new(c.x - r, c.y - r, c.z - r),
                Vec3::new(c.x + r, c.y + r, c.z),
            )
        };
        let (mut lo, mut hi) = corners(first);
        for h in it {
            let (l, u) = corners(h);
            lo = Vec3::new(lo.x.min(l.x), lo.y.min(l.y), lo.z.min(l.z));
            hi = Vec3::new(hi.x.max(u.x), hi.y.max(u.y), hi.z.max(u.z));
        }
        Some(BoundingBox { lo, hi })
    }
}

/// Monte Carlo estimates of the union volume from one shared sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnionVolume {
    pub box_volume: f64,
    pub samples: usize,
    /// `B·p̂` with `stderr = B·√(p̂(1−p̂)/n)`.
    pub hit_or_miss: Estimate,
    /// `A_Σ − B·mean((c − 1)⁺)` where `c` counts the hemispheres covering a
    /// sample. Exact when no two hemispheres overlap and never above `A_Σ`.
    pub corrected: Estimate,
}

fn check_hemis(hemis: &[Hemisphere]) -> Result<()> {
    for (i, h) in hemis.iter().enumerate() {
        if !(h.radius >= 0.0) || !h.radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "hemisphere {i}: radius must be non-negative, got {}",
                h.radius
            )));
        }
        if !h.center.is_finite() {
            return Err(Error::InvalidInput(format!(
                "hemisphere {i}: center must be finite"
            )));
        }
    }
    Ok(())
}

/// Union volume sampled over the tight bounding box of `hemis`.
pub fn union_volume(hemis: &[Hemisphere], samples: usize, seed: u64) -> Result<UnionVolume> {
    check_hemis(hemis)?;
    match BoundingBox::around(hemis) {
        Some(bbox) => union_volume_in(hemis, bbox, samples, seed),
        None => {
            if samples < MIN_SAMPLES {
                return Err(Error::InvalidInput(format!(
                    "need at least {MIN_SAMPLES} samples, got {samples}"
                )));
            }
            let zero = Estimate {
                mean: 0.0,
                stderr: 0.0,
            };
            Ok(UnionVolume {
                box_volume: 0.0,
                samples,
                hit_or_miss: zero,
                corrected: zero,
            })
        }
    }
}

/// Union volume sampled over a caller-supplied box, which must contain every
/// hemisphere for the result to be unbiased.
pub fn union_volume_in(
    hemis: &[Hemisphere],
    bbox: BoundingBox,
    samples: usize,
    seed: u64,
) -> Result<UnionVolume> {
    check_hemis(hemis)?;
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let active: Vec<Hemisphere> = hemis.iter().copied().filter(|h| h.radius > 0.0).collect();
    let b = bbox.volume();
    let ext = bbox.hi - bbox.lo;

    let parts = map_chunks(samples, seed, |rng, n| {
        let mut hits = 0u64;
        let mut excess = Moments::default();
        for _ in 0..n {
            let p = Vec3::new(
                bbox.lo.x + ext.x * rng.random::<f64>(),
                bbox.lo.y + ext.y * rng.random::<f64>(),
                bbox.lo.z + ext.z * rng.random::<f64>(),
            );
            let count = active.iter().filter(|h| h.contains(p)).count();
            if count > 0 {
                hits += 1;
            }
            excess.push(count.saturating_sub(1) as f64);
        }
        (hits, excess)
    });

    let hits: u64 = parts.iter().map(|(h, _)| h).sum();
    let excess = Moments::merge_all(parts.iter().map(|(_, m)| m));
    let p = hits as f64 / samples as f64;
    let a_sum = sum_volume(&active.iter().map(|h| h.radius).collect::<Vec<_>>());
    Ok(UnionVolume {
        box_volume: b,
        samples,
        hit_or_miss: Estimate {
            mean: b * p,
            stderr: b * (p * (1.0 - p) / samples as f64).sqrt(),
        },
        corrected: Estimate {
            mean: a_sum - b * excess.mean(),
            stderr: b * excess.stderr(),
        },
    })
}

/// `Σ (2/3) π r³`.
pub fn sum_volume(radii: &[f64]) -> f64 {
    radii.iter().map(|r| 2.0 / 3.0 * PI * r.powi(3)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub radii: Vec<f64>,
    pub union_volume: f64,
    pub sum_volume: f64,
    pub mc_samples: usize,
    pub mc_stderr: f64,
}

/// Radii for the given per-RISS powers and the resulting coverage volumes.
pub fn coverage(
    scenario: &Scenario,
    powers: &[f64],
    gamma: f64,
    samples: usize,
    seed: u64,
) -> Result<CoverageReport> {
    if powers.len() != scenario.riss.len() {
        return Err(Error::DimensionMismatch {
            expected: scenario.riss.len(),
            found: powers.len(),
        });
    }
    let radii = powers
        .iter()
        .enumerate()
        .map(|(k, eta)| detect_radius(scenario, k, *eta, gamma))
        .collect::<Result<Vec<_>>>()?;
    let hemis: Vec<Hemisphere> = scenario
        .riss
        .iter()
        .zip(&radii)
        .map(|(r, d)| Hemisphere::new(r.position, *d))
        .collect();
    let u = union_volume(&hemis, samples, seed)?;
    Ok(CoverageReport {
        sum_volume: sum_volume(&radii),
        radii,
        union_volume: u.corrected.mean,
        mc_samples: samples,
        mc_stderr: u.corrected.stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::db_to_linear;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Lens formed by two full balls.
    fn lens_volume(r1: f64, r2: f64, d: f64) -> f64 {
        if d >= r1 + r2 {
            return 0.0;
        }
        if d <= (r1 - r2).abs() {
            return 4.0 / 3.0 * PI * r1.min(r2).powi(3);
        }
        PI * (r1 + r2 - d).powi(2)
            * (d * d + 2.0 * d * r2 - 3.0 * r2 * r2 + 2.0 * d * r1 + 6.0 * r1 * r2 - 3.0 * r1 * r1)
            / (12.0 * d)
    }

    #[test]
    fn radius_reference_value() {
        let s = Scenario::reference();
        let r = detect_radius(&s, 0, 1e-3, db_to_linear(10.0)).unwrap();
        // evaluated term by term
        let lambda = 299_792_458.0 / 3.5e9;
        let rho = lambda / (4.0 * PI * 50.0);
        let sigma0 = 10f64.powf(-9.4) * 1e-3;
        let oracle = (lambda.powi(2) * 100.0 * rho.powi(2) * 1e-3 * 64.0 * 625f64.powi(2)
            / (64.0 * PI.powi(3) * 10.0 * sigma0))
            .powf(0.25);
        assert_relative_eq!(r, oracle, max_relative = 1e-12);
        assert!((r - 14.4).abs() < 0.05, "{r}");
    }

    #[test]
    fn radius_scaling_and_zero() {
        let s = Scenario::reference();
        let g = db_to_linear(10.0);
        assert_eq!(detect_radius(&s, 0, 0.0, g).unwrap(), 0.0);
        let r1 = detect_radius(&s, 0, 1e-3, g).unwrap();
        let r2 = detect_radius(&s, 0, 2e-3, g).unwrap();
        assert_relative_eq!(r2 / r1, 2f64.powf(0.25), max_relative = 1e-12);
        assert!(detect_radius(&s, 1, 1e-3, g).is_err());
        assert!(detect_radius(&s, 0, -1.0, g).is_err());
        assert!(detect_radius(&s, 0, 1e-3, 0.0).is_err());
    }

    #[test]
    fn sum_volume_cases() {
        assert_eq!(sum_volume(&[]), 0.0);
        assert_relative_eq!(sum_volume(&[1.0]), 2.0 * PI / 3.0);
    }

    #[test]
    fn single_hemisphere() {
        let h = [Hemisphere::new(Vec3::new(3.0, -2.0, 15.0), 10.0)];
        let u = union_volume(&h, 200_000, 1).unwrap();
        let exact = 2.0 / 3.0 * PI * 1000.0;
        assert!((u.hit_or_miss.mean - exact).abs() <= 3.0 * u.hit_or_miss.stderr);
        assert_relative_eq!(u.corrected.mean, exact, max_relative = 1e-12);
        assert_eq!(u.box_volume, 20.0 * 20.0 * 10.0);
    }

    #[test]
    fn disjoint_pair_is_additive() {
        let h = [
            Hemisphere::new(Vec3::new(0.0, 0.0, 15.0), 5.0),
            Hemisphere::new(Vec3::new(20.0, 0.0, 15.0), 8.0),
        ];
        let u = union_volume(&h, 200_000, 2).unwrap();
        let exact = sum_volume(&[5.0, 8.0]);
        assert!((u.hit_or_miss.mean - exact).abs() <= 3.0 * u.hit_or_miss.stderr);
        assert_relative_eq!(u.corrected.mean, exact, max_relative = 1e-12);
    }

    #[test]
    fn coincident_pair_is_one_hemisphere() {
        let c = Vec3::new(1.0, 1.0, 15.0);
        let h = [Hemisphere::new(c, 6.0), Hemisphere::new(c, 6.0)];
        let u = union_volume(&h, 200_000, 3).unwrap();
        // inclusion-exclusion: 2·V − V
        let exact = 2.0 * h[0].volume() - lens_volume(6.0, 6.0, 0.0) / 2.0;
        assert!((u.hit_or_miss.mean - exact).abs() <= 3.0 * u.hit_or_miss.stderr);
        assert!((u.corrected.mean - exact).abs() <= 3.0 * u.corrected.stderr + 1e-9);
    }

    #[test]
    fn overlapping_pair_matches_lens() {
        // centers in the same horizontal plane: the lens splits evenly
        let (r1, r2, d) = (7.0, 5.0, 8.0);
        let h = [
            Hemisphere::new(Vec3::new(0.0, 0.0, 15.0), r1),
            Hemisphere::new(Vec3::new(d, 0.0, 15.0), r2),
        ];
        let u = union_volume(&h, 400_000, 4).unwrap();
        let exact = sum_volume(&[r1, r2]) - lens_volume(r1, r2, d) / 2.0;
        assert!((u.hit_or_miss.mean - exact).abs() <= 3.0 * u.hit_or_miss.stderr);
        assert!((u.corrected.mean - exact).abs() <= 3.0 * u.corrected.stderr);
    }

    #[test]
    fn lens_oracle_limits() {
        assert_eq!(lens_volume(1.0, 1.0, 2.0), 0.0);
        assert_relative_eq!(
            lens_volume(2.0, 1.0, 0.5),
            4.0 / 3.0 * PI,
            max_relative = 1e-12
        );
        // continuity at internal tangency
        assert_relative_eq!(
            lens_volume(2.0, 1.0, 1.0 + 1e-9),
            4.0 / 3.0 * PI,
            max_relative = 1e-6
        );
    }

    #[test]
    fn empty_and_zero_radius() {
        let u = union_volume(&[], MIN_SAMPLES, 0).unwrap();
        assert_eq!(u.corrected.mean, 0.0);
        let u = union_volume(&[Hemisphere::new(Vec3::default(), 0.0)], MIN_SAMPLES, 0).unwrap();
        assert_eq!(u.hit_or_miss.mean, 0.0);
        assert!(union_volume(&[Hemisphere::new(Vec3::default(), -1.0)], MIN_SAMPLES, 0).is_err());
        assert!(union_volume(&[Hemisphere::new(Vec3::default(), 1.0)], 10, 0).is_err());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let h: Vec<Hemisphere> = (0..6)
            .map(|i| Hemisphere::new(Vec3::new(4.0 * i as f64, 50.0, 15.0), 5.0 + i as f64))
            .collect();
        let run = || union_volume(&h, 100_000, 9).unwrap();
        let a = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(run);
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(run);
        assert_eq!(a, b);
    }

    #[test]
    fn coverage_reference() {
        let s = Scenario::reference();
        let rep = coverage(&s, &[1e-3], 10.0, 50_000, 5).unwrap();
        assert_eq!(rep.radii.len(), 1);
        assert_relative_eq!(rep.union_volume, rep.sum_volume, max_relative = 1e-12);
        assert!(coverage(&s, &[1e-3, 1e-3], 10.0, 50_000, 5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn disjoint_random_configurations(
            radii in prop::collection::vec(0.5..4.0f64, 1..5),
            gap in 0.1..3.0f64,
            seed in any::<u64>(),
        ) {
            let mut x = 0.0;
            let mut hemis = Vec::new();
            for (i, r) in radii.iter().enumerate() {
                if i > 0 {
                    x += radii[i - 1] + r + gap;
                }
                hemis.push(Hemisphere::new(Vec3::new(x, 2.0 * i as f64, 15.0), *r));
            }
            let u = union_volume(&hemis, 50_000, seed).unwrap();
            let exact = sum_volume(&radii);
            prop_assert!((u.corrected.mean - exact).abs() <= 1e-9 * exact);
            prop_assert!((u.hit_or_miss.mean - exact).abs() <= 4.0 * u.hit_or_miss.stderr);
        }

        #[test]
        fn union_bounded_by_sum(
            xs in prop::collection::vec((-10.0..10.0f64, 0.5..8.0f64), 1..6),
            seed in any::<u64>(),
        ) {
            let hemis: Vec<_> = xs.iter().map(|(x, r)| Hemisphere::new(Vec3::new(*x, 0.0, 15.0), *r)).collect();
            let radii: Vec<f64> = xs.iter().map(|(_, r)| *r).collect();
            let u = union_volume(&hemis, 20_000, seed).unwrap();
            prop_assert!(u.corrected.mean <= sum_volume(&radii) * (1.0 + 1e-12));
            let largest = hemis.iter().map(|h| h.volume()).fold(0.0, f64::max);
            prop_assert!(u.corrected.mean >= largest - 4.0 * u.corrected.stderr);
        }

        #[test]
        fn monotone_in_radius(
            xs in prop::collection::vec((-10.0..10.0f64, 0.5..6.0f64), 1..5),
            which in any::<prop::sample::Index>(),
            grow in 0.0..2.0f64,
            seed in any::<u64>(),
        ) {
            let hemis: Vec<_> = xs.iter().map(|(x, r)| Hemisphere::new(Vec3::new(*x, 0.0, 15.0), *r)).collect();
            let mut bigger = hemis.clone();
            let i = which.index(bigger.len());
            bigger[i].radius += grow;
            let bbox = BoundingBox::around(&bigger).unwrap();
            let a = union_volume_in(&hemis, bbox, 20_000, seed).unwrap();
            let b = union_volume_in(&bigger, bbox, 20_000, seed).unwrap();
            prop_assert!(b.hit_or_miss.mean >= a.hit_or_miss.mean);
        }
    }
}
