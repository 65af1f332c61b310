//! Parameter sweeps behind the coverage, spectral-efficiency and
//! sensing-error studies, written as CSV.
//!
//! Every sweep starts from a base scenario whose first RISS is a template:
//! its array size, orientation and perpendicular offset from the BS array are
//! reused, and copies are placed on the leakage-free slot grid.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::allocation::{communication_allocation, sensing_allocation};
use crate::beamforming::{configure, received_amplitude};
use crate::channel::make_channels;
use crate::error::{Error, Result};
use crate::error_analysis::{error_sweep, GainProfile, SweepPoint};
use crate::placement::{default_slot_count, orthogonal_grid, quantize_uniform};
use crate::scene::{linear_to_db, Scenario, Vec3};
use crate::sensing_range::coverage;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_SEED: u64 = 20_240_521;
pub const SEED_ENV: &str = "RISS_SIM_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSource {
    Default,
    Env,
    Cli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedChoice {
    pub seed: u64,
    pub source: SeedSource,
}

impl SeedChoice {
    /// Command line first, then `RISS_SIM_SEED`, then the built-in default.
    pub fn resolve(cli: Option<u64>) -> Result<Self> {
        if let Some(seed) = cli {
            return Ok(Self {
                seed,
                source: SeedSource::Cli,
            });
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map(|seed| Self {
                    seed,
                    source: SeedSource::Env,
                })
                .map_err(|_| Error::config(SEED_ENV, format!("not an unsigned integer: {v:?}"))),
            Err(_) => Ok(Self::fixed(DEFAULT_SEED)),
        }
    }

    pub fn fixed(seed: u64) -> Self {
        Self {
            seed,
            source: SeedSource::Default,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.source {
            SeedSource::Default => "default",
            SeedSource::Env => "env:RISS_SIM_SEED",
            SeedSource::Cli => "cli",
        }
    }
}

/// First 16 hex digits of the SHA-256 of the scenario's canonical JSON.
pub fn scenario_hash(scenario: &Scenario) -> String {
    let digest = Sha256::digest(scenario.to_json_pretty().as_bytes());
    hex::encode(&digest[..8])
}

/// Perpendicular offset of the template RISS from the BS array line.
fn template_offset(base: &Scenario) -> Result<Vec3> {
    let template = &base.riss[0];
    let axis = base.bs.array_axis;
    let rel = template.position - base.bs.position;
    let perp = rel - axis * rel.dot(axis);
    if perp.norm() <= 1e-9 {
        return Err(Error::DegenerateGeometry(
            "template RISS lies on the BS array axis".into(),
        ));
    }
    Ok(perp)
}

/// Places `n` copies of the template RISS on the leakage-free grid with
/// `slots` positions. Returns the scenario and the chosen slot indices.
pub fn deploy(base: &Scenario, n: usize, slots: usize) -> Result<(Scenario, Vec<usize>)> {
    let perp = template_offset(base)?;
    let grid = orthogonal_grid(slots, perp.norm(), base.bs.antennas)?;
    let chosen = quantize_uniform(n, &grid)?;
    let template = base.riss[0].clone();
    let riss = chosen
        .iter()
        .map(|&l| {
            let mut r = template.clone();
            r.position = base.bs.position + perp + base.bs.array_axis * grid.slots[l];
            r
        })
        .collect();
    let scenario = Scenario::new(base.bs.clone(), riss, base.user_position, base.rf.clone())?;
    Ok((scenario, chosen))
}

fn non_empty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidInput(format!("{name} must not be empty")));
    }
    Ok(())
}

fn positive_counts(name: &str, v: &[usize]) -> Result<()> {
    non_empty(name, v)?;
    if v.contains(&0) {
        return Err(Error::InvalidInput(format!(
            "{name} entries must be positive"
        )));
    }
    Ok(())
}

fn header(
    out: &mut String,
    figure: &str,
    base: &Scenario,
    seed: Option<SeedChoice>,
    samples: Option<usize>,
    notes: &[String],
) {
    let _ = write!(
        out,
        "# riss-sim {TOOL_VERSION} {figure} scenario_sha256={}",
        scenario_hash(base)
    );
    if let Some(s) = seed {
        let _ = write!(out, " seed={} seed_source={}", s.seed, s.label());
    }
    if let Some(n) = samples {
        let _ = write!(out, " samples={n}");
    }
    out.push('\n');
    if !notes.is_empty() {
        let _ = writeln!(out, "# assumed defaults: {}", notes.join("; "));
    }
}

// ---------------------------------------------------------------- coverage

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Spec {
    pub n_riss: Vec<usize>,
    pub powers_w: Vec<f64>,
    pub slots: usize,
    pub samples: usize,
    pub seed: SeedChoice,
}

impl Fig3Spec {
    pub fn defaults(base: &Scenario) -> Self {
        let slots = default_slot_count(base.bs.antennas);
        Self {
            n_riss: (1..=slots).collect(),
            powers_w: vec![1e-4, 1e-3, 1e-2],
            slots,
            samples: 200_000,
            seed: SeedChoice::fixed(DEFAULT_SEED),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig3Row {
    pub n_riss: usize,
    pub power_w: f64,
    pub a_union: f64,
    pub a_sum: f64,
    pub a_union_stderr: f64,
}

/// Coverage volumes for every `(P, N)` pair, grouped by power.
pub fn run_fig3(base: &Scenario, spec: &Fig3Spec) -> Result<Vec<Fig3Row>> {
    positive_counts("n_riss", &spec.n_riss)?;
    non_empty("powers_w", &spec.powers_w)?;
    if let Some(p) = spec.powers_w.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "powers must be positive, got {p}"
        )));
    }
    let deployments = spec
        .n_riss
        .iter()
        .map(|&n| deploy(base, n, spec.slots).map(|(s, _)| s))
        .collect::<Result<Vec<_>>>()?;
    let grid: Vec<(f64, usize)> = spec
        .powers_w
        .iter()
        .flat_map(|&p| (0..deployments.len()).map(move |i| (p, i)))
        .collect();
    grid.par_iter()
        .map(|&(p, i)| {
            let scenario = &deployments[i];
            let links = make_channels(scenario)?;
            let rho: Vec<f64> = links.iter().map(|l| l.pathloss_b2r).collect();
            let alloc = sensing_allocation(&rho, p)?;
            let rep = coverage(
                scenario,
                &alloc.powers,
                scenario.rf.snr_threshold,
                spec.samples,
                spec.seed.seed,
            )?;
            Ok(Fig3Row {
                n_riss: scenario.riss.len(),
                power_w: p,
                a_union: rep.union_volume,
                a_sum: rep.sum_volume,
                a_union_stderr: rep.mc_stderr,
            })
        })
        .collect()
}

pub fn fig3_csv(base: &Scenario, spec: &Fig3Spec, rows: &[Fig3Row]) -> String {
    let mut out = String::new();
    let notes = vec![
        format!("gamma_db={}", linear_to_db(base.rf.snr_threshold)),
        format!("powers_w={:?}", spec.powers_w),
        format!("slots={}", spec.slots),
    ];
    header(
        &mut out,
        "fig3",
        base,
        Some(spec.seed),
        Some(spec.samples),
        &notes,
    );
    out.push_str("n_riss,power_w,a_union_m3,a_sum_m3,a_union_stderr_m3\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.n_riss, r.power_w, r.a_union, r.a_sum, r.a_union_stderr
        );
    }
    out
}

// ------------------------------------------------------- spectral efficiency

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Spec {
    pub n_riss: Vec<usize>,
    pub x_start: f64,
    pub x_end: f64,
    pub points: usize,
    /// The user's fixed `y` and `z`.
    pub user_yz: (f64, f64),
    pub power_w: f64,
    pub slots: usize,
}

impl Fig4Spec {
    pub fn defaults(base: &Scenario) -> Self {
        Self {
            n_riss: (1..=5).collect(),
            x_start: 0.0,
            x_end: 150.0,
            points: 151,
            user_yz: (base.user_position.y, base.user_position.z),
            power_w: base.rf.total_power_w,
            slots: default_slot_count(base.bs.antennas),
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.x_start];
        }
        (0..self.points)
            .map(|i| {
                self.x_start + (self.x_end - self.x_start) * i as f64 / (self.points - 1) as f64
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig4Row {
    pub n_riss: usize,
    pub x_u: f64,
    pub spectral_efficiency: f64,
}

/// Spectral efficiency of the phase-aligned coherent sum at one user position.
pub fn spectral_efficiency_at(deployed: &Scenario, user: Vec3, power_w: f64) -> Result<f64> {
    let mut s = deployed.clone();
    s.user_position = user;
    let links = make_channels(&s)?;
    let coeffs: Vec<f64> = links
        .iter()
        .map(|l| {
            l.pathloss_b2r * l.pathloss_r2u * l.elements() as f64 * (l.antennas() as f64).sqrt()
        })
        .collect();
    let alloc = communication_allocation(&coeffs, power_w)?;
    let config = configure(&links, &alloc.powers, s.wavelength())?;
    let y = received_amplitude(&links, &config, true)?;
    Ok((y.norm_sqr() / s.rf.noise_power_w).ln_1p() / std::f64::consts::LN_2)
}

pub fn run_fig4(base: &Scenario, spec: &Fig4Spec) -> Result<Vec<Fig4Row>> {
    positive_counts("n_riss", &spec.n_riss)?;
    if spec.points == 0 || !(spec.x_end >= spec.x_start) {
        return Err(Error::InvalidInput(
            "x range must be ordered and non-empty".into(),
        ));
    }
    let xs = spec.xs();
    let mut rows = Vec::with_capacity(spec.n_riss.len() * xs.len());
    for &n in &spec.n_riss {
        let (deployed, _) = deploy(base, n, spec.slots)?;
        let se = xs
            .par_iter()
            .map(|&x| {
                spectral_efficiency_at(
                    &deployed,
                    Vec3::new(x, spec.user_yz.0, spec.user_yz.1),
                    spec.power_w,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(
            xs.iter()
                .zip(se)
                .map(|(&x_u, spectral_efficiency)| Fig4Row {
                    n_riss: n,
                    x_u,
                    spectral_efficiency,
                }),
        );
    }
    Ok(rows)
}

pub fn fig4_csv(base: &Scenario, spec: &Fig4Spec, rows: &[Fig4Row]) -> String {
    let mut out = String::new();
    let notes = vec![format!("slots={}", spec.slots)];
    header(&mut out, "fig4", base, None, None, &notes);
    out.push_str("n_riss,x_u_m,spectral_efficiency_bps_hz\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.n_riss, r.x_u, r.spectral_efficiency);
    }
    out
}

// ------------------------------------------------------------ sensing errors

#[derive(Debug, Clone, PartialEq)]
pub struct Fig5Spec {
    pub n_riss: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub user_position: Vec3,
    pub power_w: f64,
    pub slots: usize,
    pub samples: usize,
    pub seed: SeedChoice,
}

impl Fig5Spec {
    pub fn defaults(base: &Scenario) -> Self {
        Self {
            n_riss: vec![4, 8, 12],
            sigmas: sigma_grid(0.05 * PI, 11),
            user_position: Vec3::new(50.0, 10.0, 0.0),
            power_w: 1e-3,
            slots: default_slot_count(base.bs.antennas),
            samples: 200_000,
            seed: SeedChoice::fixed(DEFAULT_SEED),
        }
    }
}

/// `steps` evenly spaced values on `[0, max]`.
pub fn sigma_grid(max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..steps)
            .map(|i| max * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig5Row {
    pub n_riss: usize,
    pub point: SweepPoint,
}

/// Communication-optimal gains for a deployed scenario.
pub fn communication_gains(deployed: &Scenario, power_w: f64) -> Result<GainProfile> {
    let links = make_channels(deployed)?;
    let coeffs: Vec<f64> = links
        .iter()
        .map(|l| {
            l.pathloss_b2r * l.pathloss_r2u * l.elements() as f64 * (l.antennas() as f64).sqrt()
        })
        .collect();
    let alloc = communication_allocation(&coeffs, power_w)?;
    GainProfile::from_links(&links, &alloc.powers)
}

/// Smallest sample count accepted by the error sweep.
pub const FIG5_MIN_SAMPLES: usize = 100_000;

pub fn run_fig5(base: &Scenario, spec: &Fig5Spec) -> Result<Vec<Fig5Row>> {
    positive_counts("n_riss", &spec.n_riss)?;
    if spec.samples < FIG5_MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "need at least {FIG5_MIN_SAMPLES} samples, got {}",
            spec.samples
        )));
    }
    non_empty("sigmas", &spec.sigmas)?;
    if spec.sigmas.windows(2).any(|w| !(w[1] > w[0])) || spec.sigmas[0] < 0.0 {
        return Err(Error::InvalidInput(
            "sigmas must be non-negative and increasing".into(),
        ));
    }
    let (nx, ny) = (base.riss[0].nx, base.riss[0].ny);
    let mut rows = Vec::new();
    for &n in &spec.n_riss {
        let (mut deployed, _) = deploy(base, n, spec.slots)?;
        deployed.user_position = spec.user_position;
        let gains = communication_gains(&deployed, spec.power_w)?;
        let pts = error_sweep(
            &gains,
            nx,
            ny,
            deployed.rf.noise_power_w,
            &spec.sigmas,
            spec.samples,
            spec.seed.seed,
        )?;
        rows.extend(pts.into_iter().map(|point| Fig5Row { n_riss: n, point }));
    }
    Ok(rows)
}

pub fn fig5_csv(base: &Scenario, spec: &Fig5Spec, rows: &[Fig5Row]) -> String {
    let mut out = String::new();
    let notes = vec![
        format!("n_riss={:?}", spec.n_riss),
        format!("slots={}", spec.slots),
    ];
    header(
        &mut out,
        "fig5",
        base,
        Some(spec.seed),
        Some(spec.samples),
        &notes,
    );
    out.push_str(SWEEP_COLUMNS_WITH_N);
    for r in rows {
        out.push_str(&format!("{},", r.n_riss));
        push_sweep_point(&mut out, &r.point);
    }
    out
}

const SWEEP_COLUMNS_WITH_N: &str =
    "n_riss,sigma_rad,e_closed_w,e_mc_w,e_mc_stderr,ese_bound,ese_mc,ese_stderr\n";
pub const SWEEP_COLUMNS: &str =
    "sigma_rad,e_closed_w,e_mc_w,e_mc_stderr,ese_bound,ese_mc,ese_stderr\n";

pub fn push_sweep_point(out: &mut String, p: &SweepPoint) {
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{}",
        p.sigma,
        p.e_closed,
        p.e_mc.mean,
        p.e_mc.stderr,
        p.ese_bound,
        p.ese_mc.mean,
        p.ese_mc.stderr
    );
}
