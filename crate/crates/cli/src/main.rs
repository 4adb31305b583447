//! Command-line front end: experiment sweeps, single-shot localization,
//! beam-pattern export, and noise-free RSS fixture generation.
//!
//! Exit codes: 0 success, 2 unusable input (bad config, missing file,
//! wrong arity), 3 localization rejected every LED subset. Other runtime
//! failures (e.g. a quadrature that does not converge) exit 1.

mod presets;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use leris_core::geometry::{ue_boresight_tilt, Pose, Vec3};
use leris_core::localization::{localize, ExponentModel, LocalizeOptions, ModelPolicy};
use leris_core::montecarlo::sweep_rows_to_csv;
use leris_core::optics::{synthesize_measurement, NlosMode, NoiseMode, OpticalMeasurement};
use leris_core::ris::{
    far_field_power_grid, hemisphere_denominator, steering_profile, Quadrature, RisPanel,
};
use leris_core::scenario::Scenario;
use leris_core::steering_angles_from_estimate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Default base seed; fixed so repeated runs replay bit-identically.
const DEFAULT_SEED: u64 = 20240001;

#[derive(Parser)]
#[command(
    name = "leris",
    version,
    about = "Optical-RSS localization and RIS steering simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Use the built-in deployment (all table defaults).
    #[arg(long, conflicts_with = "scenario")]
    default: bool,
    /// Scenario file (TOML keyed by the deployment table names).
    #[arg(long)]
    scenario: Option<PathBuf>,
}

impl ScenarioArgs {
    fn load(&self) -> anyhow::Result<Scenario> {
        if self.default {
            return Ok(Scenario::default());
        }
        match &self.scenario {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read scenario file {}", path.display()))?;
                Scenario::from_toml(&text)
                    .map_err(|e| anyhow!("cannot parse {}: {e}", path.display()))
            }
            None => bail!("either --default or --scenario <file> is required"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment preset and write one CSV plus a replay manifest.
    RunExperiment {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// One of: fig2, fig3, fig4, fig5, fig6.
        #[arg(long)]
        preset: String,
        /// Trials per sweep point (preset default when omitted).
        #[arg(long)]
        trials: Option<usize>,
        /// Base seed for trial derivation.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Worker threads (all cores when omitted).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the RIS center displacement (fig6 only), centimeters.
        #[arg(long)]
        offset_cm: Option<f64>,
    },
    /// Localize from a CSV of (channel_id, p_r) rows.
    Localize {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Input CSV; '#' lines are comments, a header row is allowed.
        #[arg(long)]
        input: PathBuf,
        /// Exponent model: auto, parallel or general (scenario default
        /// when omitted).
        #[arg(long)]
        model: Option<String>,
    },
    /// Export the realized |F| and gain grid for one steering command.
    BeamPattern {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Square panel size as element count (rows = cols = sqrt(n)).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
        steer_theta_deg: f64,
        #[arg(long, default_value_t = 45.0, allow_negative_numbers = true)]
        steer_phi_deg: f64,
        /// Von Mises concentration of the per-element phase error; ideal
        /// phases when omitted.
        #[arg(long)]
        kappa_hw: Option<f64>,
        /// Actual-minus-assumed center displacement along +x, centimeters.
        #[arg(long, default_value_t = 0.0)]
        offset_cm: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Grid step, degrees.
        #[arg(long, default_value_t = 0.5)]
        step_deg: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a noise-free RSS fixture for a known receiver pose.
    Synth {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Receiver position as x,y,z meters.
        #[arg(long, value_delimiter = ',')]
        pos: Vec<f64>,
        /// Tilt from zenith, degrees.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        tilt_deg: f64,
        /// Azimuth of the tilt direction, degrees from +x toward +y.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        azimuth_deg: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    preset: &'a str,
    base_seed: u64,
    trials_per_point: usize,
    scenario_sha256: String,
    outputs: Vec<String>,
    sweep: &'a leris_core::montecarlo::SweepSpec,
    scenario_toml: String,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::RunExperiment {
            scenario,
            preset,
            trials,
            seed,
            workers,
            out,
            offset_cm,
        } => run_experiment(scenario, &preset, trials, seed, workers, &out, offset_cm),
        Command::Localize {
            scenario,
            input,
            model,
        } => cmd_localize(scenario, &input, model),
        Command::BeamPattern {
            scenario,
            n,
            steer_theta_deg,
            steer_phi_deg,
            kappa_hw,
            offset_cm,
            seed,
            step_deg,
            out,
        } => cmd_beam_pattern(
            scenario,
            n,
            steer_theta_deg,
            steer_phi_deg,
            kappa_hw,
            offset_cm,
            seed,
            step_deg,
            &out,
        ),
        Command::Synth {
            scenario,
            pos,
            tilt_deg,
            azimuth_deg,
            out,
        } => cmd_synth(scenario, &pos, tilt_deg, azimuth_deg, &out),
    }
}

fn run_experiment(
    scenario_args: ScenarioArgs,
    preset_name: &str,
    trials: Option<usize>,
    seed: u64,
    workers: Option<usize>,
    out: &Path,
    offset_cm: Option<f64>,
) -> anyhow::Result<i32> {
    let scenario = scenario_args.load()?;
    let Some(mut preset) = presets::preset(preset_name, &scenario, offset_cm) else {
        bail!(
            "unknown preset '{preset_name}' (available: {})",
            presets::PRESET_NAMES.join(", ")
        );
    };
    preset.spec.trials_per_point = trials.unwrap_or(preset.default_trials);

    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;

    let rows = match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .context("cannot build worker pool")?;
            pool.install(|| leris_core::montecarlo::run_sweep(&scenario, &preset.spec, seed))
        }
        None => leris_core::montecarlo::run_sweep(&scenario, &preset.spec, seed),
    };
    let csv = sweep_rows_to_csv(&rows);
    let csv_path = out.join(format!("{preset_name}.csv"));
    std::fs::write(&csv_path, &csv)
        .with_context(|| format!("cannot write {}", csv_path.display()))?;

    let scenario_toml = scenario.to_toml();
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        preset: preset_name,
        base_seed: seed,
        trials_per_point: preset.spec.trials_per_point,
        scenario_sha256: hex_digest(&scenario_toml),
        outputs: vec![format!("{preset_name}.csv")],
        sweep: &preset.spec,
        scenario_toml,
    };
    let manifest_path = out.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)
        .with_context(|| format!("cannot write {}", manifest_path.display()))?;
    println!(
        "wrote {} ({} rows) and {}",
        csv_path.display(),
        rows.len(),
        manifest_path.display()
    );
    Ok(0)
}

fn hex_digest(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    let bytes = h.finalize();
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_rss_file(path: &Path) -> anyhow::Result<Vec<(u32, f64)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read RSS input {}", path.display()))?;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
            bail!("malformed row '{line}' (expected channel_id,p_r)");
        };
        if a.eq_ignore_ascii_case("channel_id") {
            continue; // header
        }
        let id: u32 = a.parse().with_context(|| format!("bad channel id '{a}'"))?;
        let p: f64 = b.parse().with_context(|| format!("bad power '{b}'"))?;
        rows.push((id, p));
    }
    Ok(rows)
}

fn cmd_localize(
    scenario_args: ScenarioArgs,
    input: &Path,
    model: Option<String>,
) -> anyhow::Result<i32> {
    let scenario = scenario_args.load()?;
    let rows = parse_rss_file(input)?;
    if rows.len() < 4 {
        bail!("need at least 4 (channel_id, p_r) rows, got {}", rows.len());
    }
    let policy = match model.as_deref() {
        None => scenario.model_policy(),
        Some("auto") => ModelPolicy::Auto {
            parallel_threshold: scenario.parallel_threshold_deg.to_radians(),
        },
        Some("parallel") => ModelPolicy::Fixed(ExponentModel::Parallel),
        Some("general") => ModelPolicy::Fixed(ExponentModel::General),
        Some(other) => bail!("unknown model '{other}' (expected auto/parallel/general)"),
    };

    let groups = [scenario.ceiling_group(), scenario.leris_group()];
    let measurements: Vec<OpticalMeasurement> = rows
        .iter()
        .map(|&(id, p_r)| OpticalMeasurement {
            led_channel_id: id,
            p_los: 0.0,
            p_nlos: 0.0,
            p_noise: 0.0,
            p_r,
            arrival_angle: 0.0,
            departure_angle: 0.0,
            has_los: p_r > 0.0,
        })
        .collect();
    // the detector pose is unknown; only its optical constants matter here
    let pd = scenario.photodetector_at(Pose::new(Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0)));
    let opts = LocalizeOptions {
        policy,
        eps: scenario.degeneracy_eps,
        bounds: Some(scenario.ue_bounds()),
    };
    let pairs: Vec<_> = groups
        .iter()
        .map(|g| (g, measurements.as_slice()))
        .collect();
    match localize(&pairs, &pd, None, &opts) {
        Ok(est) => {
            println!(
                "estimate_m = [{:.6}, {:.6}, {:.6}]",
                est.u_hat.x, est.u_hat.y, est.u_hat.z
            );
            println!("leds_used = {:?}", est.leds_used);
            println!(
                "alphas = [{:.9}, {:.9}, {:.9}] ({:?})",
                est.alphas.a1, est.alphas.a2, est.alphas.a3, est.alphas.model
            );
            println!(
                "validity: ok = {}, min_margin = {:.3e}, residual = {:.3e}, collinear_path = {}",
                est.diagnostics.validity.ok,
                est.diagnostics.validity.min_margin,
                est.diagnostics.residual,
                est.diagnostics.collinear_path
            );
            let c = scenario.leris_center;
            let steer = steering_angles_from_estimate(est.u_hat, Vec3::new(c[0], c[1], c[2]))
                .map_err(|e| anyhow!("steering angles undefined: {e}"))?;
            println!(
                "steering_deg = [theta {:.4}, phi {:.4}]",
                steer.theta.to_degrees(),
                steer.phi.to_degrees()
            );
            Ok(0)
        }
        Err(leris_core::Error::NoValidSubset { summary }) => {
            eprintln!("no valid 4-LED subset: {summary}");
            Ok(3)
        }
        Err(leris_core::Error::NotEnoughMeasurements) => {
            eprintln!("fewer than four usable line-of-sight measurements");
            Ok(3)
        }
        Err(e) => Err(e.into()),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_beam_pattern(
    scenario_args: ScenarioArgs,
    n: Option<usize>,
    steer_theta_deg: f64,
    steer_phi_deg: f64,
    kappa_hw: Option<f64>,
    offset_cm: f64,
    seed: u64,
    step_deg: f64,
    out: &Path,
) -> anyhow::Result<i32> {
    let scenario = scenario_args.load()?;
    let mut panel: RisPanel = scenario.ris_panel();
    if let Some(n) = n {
        let side = (n as f64).sqrt().round() as usize;
        if side * side != n {
            bail!("--n must be a perfect square, got {n}");
        }
        panel.rows = side;
        panel.cols = side;
    }
    panel.kappa_hw = kappa_hw;
    panel.position_offset = Vec3::new(offset_cm / 100.0, 0.0, 0.0);

    let steer = leris_core::SteeringAngles {
        theta: steer_theta_deg.to_radians(),
        phi: steer_phi_deg.to_radians(),
    };
    let ap = scenario.ap_position();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profile = steering_profile(steer, &panel, ap, scenario.wavelength_m, &mut rng);

    let quad = Quadrature {
        step: step_deg.to_radians(),
        check_convergence: true,
        ..Quadrature::default()
    };
    let den = match hemisphere_denominator(&profile, &panel, ap, &quad) {
        Ok(d) => d,
        Err(e @ leris_core::Error::QuadratureNotConverged { .. }) => {
            eprintln!("{e}");
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };

    let grid = far_field_power_grid(&profile, &panel, ap, quad.step);
    let mut csv = String::from("phi_deg, theta_deg, F_mag, gain_db\n");
    for (phi, theta, f2) in grid {
        let g = panel.efficiency * 4.0 * std::f64::consts::PI * f2 / den;
        csv.push_str(&format!(
            "{:.4}, {:.4}, {:.9e}, {:.6}\n",
            phi.to_degrees(),
            theta.to_degrees(),
            f2.sqrt(),
            10.0 * g.log10()
        ));
    }
    std::fs::write(out, csv).with_context(|| format!("cannot write {}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(0)
}

fn cmd_synth(
    scenario_args: ScenarioArgs,
    pos: &[f64],
    tilt_deg: f64,
    azimuth_deg: f64,
    out: &Path,
) -> anyhow::Result<i32> {
    let scenario = scenario_args.load()?;
    if pos.len() != 3 {
        bail!("--pos needs exactly three coordinates");
    }
    let position = Vec3::new(pos[0], pos[1], pos[2]);
    let boresight = ue_boresight_tilt(tilt_deg.to_radians(), azimuth_deg.to_radians());
    let pose = Pose::new(position, boresight);
    let mut noise_free = scenario.clone();
    noise_free.optical_noise_power = 0.0;
    let pd = noise_free.photodetector_at(pose);
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    let mut csv = format!(
        "# truth_m = {:.9} {:.9} {:.9}\n# tilt_deg = {:.6} azimuth_deg = {:.6}\nchannel_id,p_r\n",
        position.x, position.y, position.z, tilt_deg, azimuth_deg
    );
    let mut n_los = 0;
    for led in noise_free.all_leds() {
        let m = synthesize_measurement(
            &led,
            &pd,
            &NlosMode::KRatio {
                k_pwe: f64::INFINITY,
                jitter_sigma: None,
            },
            NoiseMode::Fixed,
            &mut rng,
        );
        if m.has_los {
            csv.push_str(&format!("{},{:.12e}\n", m.led_channel_id, m.p_r));
            n_los += 1;
        }
    }
    std::fs::write(out, csv).with_context(|| format!("cannot write {}", out.display()))?;
    println!("wrote {} ({n_los} LoS channels)", out.display());
    if n_los < 4 {
        eprintln!("warning: fewer than 4 LoS channels; localization will not succeed");
    }
    Ok(0)
}
