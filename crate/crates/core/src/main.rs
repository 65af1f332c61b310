#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use riss_sim::allocation::{communication_allocation, sensing_allocation};
use riss_sim::channel::make_channels;
use riss_sim::error_analysis::error_sweep;
use riss_sim::experiments::{
    communication_gains, fig3_csv, fig4_csv, fig5_csv, push_sweep_point, run_fig3, run_fig4,
    run_fig5, scenario_hash, sigma_grid, Fig3Spec, Fig4Spec, Fig5Spec, SeedChoice, SWEEP_COLUMNS,
    TOOL_VERSION,
};
use riss_sim::placement::{default_slot_count, orthogonal_grid, quantize_uniform};
use riss_sim::scene::{db_to_linear, Scenario};
use riss_sim::sensing_range::coverage;
use riss_sim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "riss-sim",
    version,
    about = "Multi-RISS sensing and communication simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sensing,
    Comm,
}

#[derive(Subcommand)]
enum Command {
    /// Leakage-free slots and the uniform-then-quantized selection.
    Place {
        #[arg(long)]
        n: usize,
        /// Perpendicular offset of the RISS line, meters.
        #[arg(long)]
        rr: f64,
        #[arg(long, default_value_t = 64)]
        antennas: usize,
        /// Grid size; defaults to antennas/2 − 1.
        #[arg(long)]
        slots: Option<usize>,
    },
    /// Per-RISS transmit powers for the scenario's RISSs.
    Allocate {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Overrides the scenario's total power, watts.
        #[arg(long)]
        power: Option<f64>,
    },
    /// Detectable radii and coverage volumes under max-min allocation.
    SenseRange {
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Overrides the scenario's threshold.
        #[arg(long)]
        gamma_db: Option<f64>,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Expected energy and spectral efficiency versus DOA error.
    ErrorSweep {
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Largest deviation, radians.
        #[arg(long, default_value_t = 0.05 * std::f64::consts::PI)]
        sigma_max: f64,
        #[arg(long, default_value_t = 11)]
        steps: usize,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Coverage volume versus RISS count and power.
    Fig3(FigArgs),
    /// Spectral efficiency versus user position.
    Fig4(FigArgs),
    /// Received energy and spectral efficiency versus DOA error.
    Fig5(FigArgs),
    /// Prints the reference scenario as JSON.
    Scenario,
}

#[derive(clap::Args)]
struct FigArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
}

fn load(path: Option<&Path>) -> Result<Scenario> {
    match path {
        None => Ok(Scenario::reference()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::InvalidConfig {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            Scenario::from_json_str(&text)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Place {
            n,
            rr,
            antennas,
            slots,
        } => {
            let grid = orthogonal_grid(
                slots.unwrap_or_else(|| default_slot_count(antennas)),
                rr,
                antennas,
            )?;
            let chosen = quantize_uniform(n, &grid)?;
            let mut out = String::from("slot,x_m,departure_sine\n");
            for l in chosen {
                let _ = writeln!(out, "{l},{},{}", grid.slots[l], grid.sine(l));
            }
            emit(None, &out)
        }
        Command::Allocate {
            mode,
            scenario,
            power,
        } => {
            let s = load(scenario.as_deref())?;
            let budget = power.unwrap_or(s.rf.total_power_w);
            let links = make_channels(&s)?;
            let alloc = match mode {
                Mode::Sensing => {
                    let rho: Vec<f64> = links.iter().map(|l| l.pathloss_b2r).collect();
                    sensing_allocation(&rho, budget)?
                }
                Mode::Comm => {
                    let c: Vec<f64> = links
                        .iter()
                        .map(|l| {
                            l.pathloss_b2r
                                * l.pathloss_r2u
                                * l.elements() as f64
                                * (l.antennas() as f64).sqrt()
                        })
                        .collect();
                    communication_allocation(&c, budget)?
                }
            };
            let mut out = String::from("riss_index,power_w,share\n");
            for (k, (p, f)) in alloc.powers.iter().zip(alloc.shares()).enumerate() {
                let _ = writeln!(out, "{k},{p},{f}");
            }
            let _ = writeln!(out, "# objective={}", alloc.objective);
            emit(None, &out)
        }
        Command::SenseRange {
            scenario,
            gamma_db,
            samples,
            seed,
        } => {
            let s = load(scenario.as_deref())?;
            let seed = SeedChoice::resolve(seed)?;
            let gamma = gamma_db.map_or(s.rf.snr_threshold, db_to_linear);
            let links = make_channels(&s)?;
            let rho: Vec<f64> = links.iter().map(|l| l.pathloss_b2r).collect();
            let alloc = sensing_allocation(&rho, s.rf.total_power_w)?;
            let rep = coverage(&s, &alloc.powers, gamma, samples, seed.seed)?;
            let mut out = format!(
                "# riss-sim {TOOL_VERSION} sense-range scenario_sha256={} seed={} seed_source={}\nriss_index,radius_m\n",
                scenario_hash(&s),
                seed.seed,
                seed.label()
            );
            for (k, r) in rep.radii.iter().enumerate() {
                let _ = writeln!(out, "{k},{r}");
            }
            let _ = writeln!(
                out,
                "A_union_m3,A_sum_m3,stderr\n{},{},{}",
                rep.union_volume, rep.sum_volume, rep.mc_stderr
            );
            emit(None, &out)
        }
        Command::ErrorSweep {
            scenario,
            sigma_max,
            steps,
            samples,
            seed,
        } => {
            let s = load(scenario.as_deref())?;
            let seed = SeedChoice::resolve(seed)?;
            if !(sigma_max >= 0.0) || steps == 0 {
                return Err(Error::InvalidInput(
                    "need sigma_max ≥ 0 and steps ≥ 1".into(),
                ));
            }
            let gains = communication_gains(&s, s.rf.total_power_w)?;
            let (nx, ny) = (s.riss[0].nx, s.riss[0].ny);
            if s.riss.iter().any(|r| r.nx != nx || r.ny != ny) {
                return Err(Error::InvalidInput(
                    "error sweep needs identical panel sizes".into(),
                ));
            }
            let pts = error_sweep(
                &gains,
                nx,
                ny,
                s.rf.noise_power_w,
                &sigma_grid(sigma_max, steps),
                samples,
                seed.seed,
            )?;
            let mut out = format!(
                "# riss-sim {TOOL_VERSION} error-sweep scenario_sha256={} seed={} seed_source={} samples={samples}\n{SWEEP_COLUMNS}",
                scenario_hash(&s),
                seed.seed,
                seed.label()
            );
            for p in &pts {
                push_sweep_point(&mut out, p);
            }
            emit(None, &out)
        }
        Command::Fig3(a) => {
            let base = load(a.scenario.as_deref())?;
            let mut spec = Fig3Spec::defaults(&base);
            spec.seed = SeedChoice::resolve(a.seed)?;
            if let Some(n) = a.samples {
                spec.samples = n;
            }
            let rows = run_fig3(&base, &spec)?;
            emit(a.out.as_deref(), &fig3_csv(&base, &spec, &rows))
        }
        Command::Fig4(a) => {
            let base = load(a.scenario.as_deref())?;
            let spec = Fig4Spec::defaults(&base);
            let rows = run_fig4(&base, &spec)?;
            emit(a.out.as_deref(), &fig4_csv(&base, &spec, &rows))
        }
        Command::Fig5(a) => {
            let base = load(a.scenario.as_deref())?;
            let mut spec = Fig5Spec::defaults(&base);
            spec.seed = SeedChoice::resolve(a.seed)?;
            if let Some(n) = a.samples {
                spec.samples = n;
            }
            let rows = run_fig5(&base, &spec)?;
            emit(a.out.as_deref(), &fig5_csv(&base, &spec, &rows))
        }
        Command::Scenario => emit(
            None,
            &format!("{}\n", Scenario::reference().to_json_pretty()),
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
