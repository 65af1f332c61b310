//! Scene configuration and geometry.
//!
//! Positions are in meters in a right-handed frame. The base station carries a
//! uniform linear array along `array_axis`; every RISS panel is a uniform
//! planar array spanned by the orthonormal pair `axis_u`, `axis_v`. Angles are
//! handled as direction cosines along those axes, so the per-element phase
//! increment at half-wavelength spacing is simply `π · cosine`.

use std::fs;
use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact SI speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Inter-element spacing in wavelengths, shared by the BS and RISS arrays.
pub const ELEMENT_SPACING_RATIO: f64 = 0.5;

const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (other - self).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Unit vector pointing from `self` to `target`.
    pub fn direction_to(self, target: Vec3) -> Result<Vec3> {
        let delta = target - self;
        let dist = delta.norm();
        if !(dist > 0.0) || !dist.is_finite() {
            return Err(Error::DegenerateGeometry(format!(
                "points {self:?} and {target:?} coincide"
            )));
        }
        Ok(delta * (1.0 / dist))
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Base station with an `antennas`-element ULA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsConfig {
    pub antennas: usize,
    pub position: Vec3,
    pub array_axis: Vec3,
}

/// A reconfigurable intelligent sensing surface with an `nx × ny` passive grid.
///
/// `n_active` is carried as metadata only; the active elements enter the
/// model through the DOA error deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RissConfig {
    pub nx: usize,
    pub ny: usize,
    pub n_active: usize,
    pub position: Vec3,
    pub axis_u: Vec3,
    pub axis_v: Vec3,
}

impl RissConfig {
    /// Number of passive elements `N = nx · ny`.
    pub fn elements(&self) -> usize {
        self.nx * self.ny
    }
}

/// RF constants, all in linear SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct RfConfig {
    pub frequency_hz: f64,
    pub noise_power_w: f64,
    pub rcs_m2: f64,
    /// Detection SNR threshold Γ as a linear ratio.
    pub snr_threshold: f64,
    pub total_power_w: f64,
}

impl RfConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub bs: BsConfig,
    pub riss: Vec<RissConfig>,
    pub user_position: Vec3,
    pub rf: RfConfig,
}

/// Returns `c / frequency`.
pub fn wavelength(frequency_hz: f64) -> Result<f64> {
    if !(frequency_hz > 0.0) || !frequency_hz.is_finite() {
        return Err(Error::InvalidInput(format!(
            "frequency must be positive and finite, got {frequency_hz}"
        )));
    }
    Ok(SPEED_OF_LIGHT / frequency_hz)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Sine of the departure angle from the BS array towards `target`.
///
/// This is the projection of the unit BS→target direction on the array axis;
/// the ULA phase increment is `π` times this value.
pub fn departure_sine(bs: &BsConfig, target: Vec3) -> Result<f64> {
    let dir = bs.position.direction_to(target)?;
    Ok(dir.dot(bs.array_axis).clamp(-1.0, 1.0))
}

/// Direction cosines `(u, v)` of `target` seen from the panel, along its two axes.
pub fn panel_direction_cosines(riss: &RissConfig, target: Vec3) -> Result<(f64, f64)> {
    let dir = riss.position.direction_to(target)?;
    Ok((
        dir.dot(riss.axis_u).clamp(-1.0, 1.0),
        dir.dot(riss.axis_v).clamp(-1.0, 1.0),
    ))
}

fn check_vec(path: &str, v: Vec3) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::config(path, "components must be finite"));
    }
    Ok(())
}

fn check_unit(path: &str, v: Vec3) -> Result<()> {
    check_vec(path, v)?;
    if (v.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::config(
            path,
            format!("must have unit norm, got {}", v.norm()),
        ));
    }
    Ok(())
}

fn check_positive(path: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::config(
            path,
            format!("must be strictly positive, got {value}"),
        ));
    }
    Ok(())
}

impl BsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.antennas < 2 {
            return Err(Error::config(
                "bs.antennas",
                format!("need at least 2 antennas, got {}", self.antennas),
            ));
        }
        check_vec("bs.position", self.position)?;
        check_unit("bs.array_axis", self.array_axis)
    }
}

impl RissConfig {
    fn validate_at(&self, index: usize) -> Result<()> {
        let p = |field: &str| format!("riss[{index}].{field}");
        if self.nx == 0 {
            return Err(Error::config(p("nx"), "must be positive"));
        }
        if self.ny == 0 {
            return Err(Error::config(p("ny"), "must be positive"));
        }
        check_vec(&p("position"), self.position)?;
        check_unit(&p("axis_u"), self.axis_u)?;
        check_unit(&p("axis_v"), self.axis_v)?;
        if self.axis_u.dot(self.axis_v).abs() > UNIT_TOL {
            return Err(Error::config(p("axis_v"), "must be orthogonal to axis_u"));
        }
        Ok(())
    }
}

impl RfConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("rf.frequency_hz", self.frequency_hz)?;
        check_positive("rf.noise_dbm", self.noise_power_w)?;
        check_positive("rf.rcs_m2", self.rcs_m2)?;
        check_positive("rf.snr_threshold_db", self.snr_threshold)?;
        check_positive("rf.total_power_w", self.total_power_w)
    }
}

impl Scenario {
    /// Builds a scenario and checks every invariant.
    pub fn new(
        bs: BsConfig,
        riss: Vec<RissConfig>,
        user_position: Vec3,
        rf: RfConfig,
    ) -> Result<Self> {
        let s = Scenario {
            bs,
            riss,
            user_position,
            rf,
        };
        s.validate()?;
        Ok(s)
    }

    /// Reports the first violated invariant by JSON path.
    pub fn validate(&self) -> Result<()> {
        self.bs.validate()?;
        if self.riss.is_empty() {
            return Err(Error::config("riss", "at least one RISS is required"));
        }
        for (i, r) in self.riss.iter().enumerate() {
            r.validate_at(i)?;
        }
        for i in 0..self.riss.len() {
            for j in 0..i {
                if self.riss[i].position == self.riss[j].position {
                    return Err(Error::config(
                        format!("riss[{i}].position"),
                        format!("coincides with riss[{j}].position"),
                    ));
                }
            }
        }
        check_vec("user_position", self.user_position)?;
        self.rf.validate()
    }

    /// The reference deployment: BS at (0, 0, 15) with a 64-element array along x̂,
    /// one 25×25 panel at (0, 50, 15) spanned by x̂/ẑ, user at (10, 10, 0),
    /// 3.5 GHz carrier, −94 dBm noise, 100 m² RCS, Γ = 10 dB and P = 1 mW.
    pub fn reference() -> Self {
        Scenario {
            bs: BsConfig {
                antennas: 64,
                position: Vec3::new(0.0, 0.0, 15.0),
                array_axis: Vec3::X,
            },
            riss: vec![RissConfig {
                nx: 25,
                ny: 25,
                n_active: 8,
                position: Vec3::new(0.0, 50.0, 15.0),
                axis_u: Vec3::X,
                axis_v: Vec3::Z,
            }],
            user_position: Vec3::new(10.0, 10.0, 0.0),
            rf: RfConfig {
                frequency_hz: 3.5e9,
                noise_power_w: dbm_to_watts(-94.0),
                rcs_m2: 100.0,
                snr_threshold: db_to_linear(10.0),
                total_power_w: 1e-3,
            },
        }
    }

    pub fn wavelength(&self) -> f64 {
        self.rf.wavelength()
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(json);
        let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        file.into_scenario()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            bs: self.bs.clone(),
            riss: self.riss.clone(),
            user_position: self.user_position,
            rf: RfFile {
                frequency_hz: self.rf.frequency_hz,
                noise_dbm: watts_to_dbm(self.rf.noise_power_w),
                rcs_m2: self.rf.rcs_m2,
                snr_threshold_db: linear_to_db(self.rf.snr_threshold),
                total_power_w: self.rf.total_power_w,
            },
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }
}

/// On-disk scenario schema. RF quantities use engineering units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub bs: BsConfig,
    pub riss: Vec<RissConfig>,
    pub user_position: Vec3,
    pub rf: RfFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfFile {
    pub frequency_hz: f64,
    pub noise_dbm: f64,
    pub rcs_m2: f64,
    pub snr_threshold_db: f64,
    pub total_power_w: f64,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        for (path, v) in [
            ("rf.noise_dbm", self.rf.noise_dbm),
            ("rf.snr_threshold_db", self.rf.snr_threshold_db),
        ] {
            if !v.is_finite() {
                return Err(Error::config(path, "must be finite"));
            }
        }
        Scenario::new(
            self.bs,
            self.riss,
            self.user_position,
            RfConfig {
                frequency_hz: self.rf.frequency_hz,
                noise_power_w: dbm_to_watts(self.rf.noise_dbm),
                rcs_m2: self.rf.rcs_m2,
                snr_threshold: db_to_linear(self.rf.snr_threshold_db),
                total_power_w: self.rf.total_power_w,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bs_at_origin() -> BsConfig {
        BsConfig {
            antennas: 64,
            position: Vec3::default(),
            array_axis: Vec3::X,
        }
    }

    #[test]
    fn wavelength_values() {
        // 299792458 / 3.5e9 = 0.085654988
        assert_relative_eq!(
            wavelength(3.5e9).unwrap(),
            0.085_654_988,
            max_relative = 1e-8
        );
        assert!((wavelength(3.5e9).unwrap() - 0.085_655_0).abs() < 5e-8);
        assert_relative_eq!(wavelength(SPEED_OF_LIGHT).unwrap(), 1.0);
        assert_relative_eq!(
            wavelength(7.0e9).unwrap(),
            wavelength(3.5e9).unwrap() / 2.0,
            max_relative = 1e-15
        );
        assert!(matches!(wavelength(0.0), Err(Error::InvalidInput(_))));
        assert!(matches!(wavelength(-1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn noise_floor_conversion() {
        assert_relative_eq!(
            dbm_to_watts(-94.0),
            3.981_071_705_534_97e-13,
            max_relative = 1e-12
        );
        assert_relative_eq!(dbm_to_watts(30.0), 1.0);
        assert_relative_eq!(watts_to_dbm(dbm_to_watts(-94.0)), -94.0, epsilon = 1e-12);
    }

    #[test]
    fn departure_sine_cases() {
        let bs = bs_at_origin();
        assert_eq!(departure_sine(&bs, Vec3::new(0.0, 50.0, 0.0)).unwrap(), 0.0);
        assert_eq!(departure_sine(&bs, Vec3::new(7.0, 0.0, 0.0)).unwrap(), 1.0);
        // first orthogonal slot for M = 64, R_r = 50
        let x1 = 100.0 / 4092f64.sqrt();
        assert_relative_eq!(
            departure_sine(&bs, Vec3::new(x1, 50.0, 0.0)).unwrap(),
            2.0 / 64.0,
            max_relative = 1e-13
        );
        assert!(matches!(
            departure_sine(&bs, Vec3::default()),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn panel_cosines_cases() {
        let riss = Scenario::reference().riss[0].clone();
        // panel normal is ±ŷ
        let (u, v) = panel_direction_cosines(&riss, Vec3::new(0.0, 10.0, 15.0)).unwrap();
        assert_eq!((u, v), (0.0, 0.0));
        let (u, v) = panel_direction_cosines(&riss, Vec3::new(30.0, 50.0, 15.0)).unwrap();
        assert_eq!((u, v), (1.0, 0.0));

        let d = (10f64.powi(2) + 40f64.powi(2) + 15f64.powi(2)).sqrt();
        let (u, v) = panel_direction_cosines(&riss, Vec3::new(10.0, 10.0, 0.0)).unwrap();
        assert_relative_eq!(u, 10.0 / d, max_relative = 1e-14);
        assert_relative_eq!(v, -15.0 / d, max_relative = 1e-14);

        assert!(panel_direction_cosines(&riss, riss.position).is_err());
    }

    #[test]
    fn reference_scenario_is_valid() {
        Scenario::reference().validate().unwrap();
    }

    #[test]
    fn json_roundtrip_and_paths() {
        let s = Scenario::reference();
        let json = s.to_json_pretty();
        let back = Scenario::from_json_str(&json).unwrap();
        assert_eq!(back.bs, s.bs);
        assert_eq!(back.riss, s.riss);
        assert_relative_eq!(
            back.rf.noise_power_w,
            s.rf.noise_power_w,
            max_relative = 1e-12
        );

        let mut bad = s.to_file();
        bad.riss[0].axis_v = Vec3::new(0.0, 0.0, 2.0);
        let err = bad.clone().into_scenario().unwrap_err();
        assert!(matches!(&err, Error::InvalidConfig { path, .. } if path == "riss[0].axis_v"));
        assert_eq!(err.exit_code(), 2);

        bad.riss[0].axis_v = Vec3::X;
        let err = bad.into_scenario().unwrap_err();
        assert!(matches!(&err, Error::InvalidConfig { path, .. } if path == "riss[0].axis_v"));

        let broken = json.replace("\"nx\": 25", "\"nx\": \"many\"");
        let err = Scenario::from_json_str(&broken).unwrap_err();
        assert!(
            matches!(&err, Error::InvalidConfig { path, .. } if path == "riss[0].nx"),
            "{err}"
        );
    }

    #[test]
    fn duplicate_riss_rejected() {
        let mut s = Scenario::reference();
        s.riss.push(s.riss[0].clone());
        let err = s.validate().unwrap_err();
        assert!(matches!(&err, Error::InvalidConfig { path, .. } if path == "riss[1].position"));
    }

    fn finite_point() -> impl Strategy<Value = Vec3> {
        (-200.0..200.0f64, -200.0..200.0f64, -50.0..50.0f64)
            .prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn angle_maps_bounded_and_translation_invariant(
            target in finite_point(),
            shift in finite_point(),
        ) {
            let bs = BsConfig { antennas: 8, position: Vec3::new(1.0, -3.0, 15.0), array_axis: Vec3::X };
            let riss = Scenario::reference().riss[0].clone();
            prop_assume!(bs.position.distance(target) > 1e-6);
            prop_assume!(riss.position.distance(target) > 1e-6);

            let s = departure_sine(&bs, target).unwrap();
            let (u, v) = panel_direction_cosines(&riss, target).unwrap();
            prop_assert!((-1.0..=1.0).contains(&s));
            prop_assert!((-1.0..=1.0).contains(&u));
            prop_assert!((-1.0..=1.0).contains(&v));

            let bs2 = BsConfig { position: bs.position + shift, ..bs.clone() };
            let riss2 = RissConfig { position: riss.position + shift, ..riss.clone() };
            let s2 = departure_sine(&bs2, target + shift).unwrap();
            let (u2, v2) = panel_direction_cosines(&riss2, target + shift).unwrap();
            prop_assert!((s - s2).abs() < 1e-9);
            prop_assert!((u - u2).abs() < 1e-9);
            prop_assert!((v - v2).abs() < 1e-9);
        }

        #[test]
        fn wavelength_times_frequency_is_c(f in 1.0e6..1.0e12f64) {
            let lambda = wavelength(f).unwrap();
            prop_assert!((lambda * f - SPEED_OF_LIGHT).abs() <= 1e-15 * SPEED_OF_LIGHT * 4.0);
        }
    }
}
