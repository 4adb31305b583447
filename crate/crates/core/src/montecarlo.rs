//! Randomized trials and experiment sweeps with deterministic seeding.
//!
//! A trial synthesizes per-LED received powers for one receiver pose, runs
//! the localization solver, steers the RIS from the estimate, and evaluates
//! the realized gain and spectral efficiency at the receiver's true
//! direction. Sweeps iterate a variable over per-combination trial batches;
//! every trial derives its RNG seed from (base seed, point index, trial
//! index), so results are identical for any worker count.

use crate::error::Error;
use crate::geometry::{
    distance, steering_angles_from_estimate, ue_boresight_tilt, Pose, SteeringAngles, Vec3,
};
use crate::localization::{localize, LocalizationEstimate, LocalizeOptions, ModelPolicy};
use crate::numeric::pairwise_sum;
use crate::optics::{synthesize_measurement, NlosMode, NoiseMode, OpticalMeasurement};
use crate::ris::{
    diffuse_profile, gain_with_denominator, hemisphere_denominator, steering_profile, FieldGrid,
    Quadrature, RisPanel,
};
use crate::scenario::Scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which LED planes the localization may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedMode {
    CeilingOnly,
    CeilingPlusLeris,
}

impl std::fmt::Display for LedMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LedMode::CeilingOnly => "ceiling_only",
            LedMode::CeilingPlusLeris => "ceiling_plus_leris",
        })
    }
}

/// How the receiver orientation is chosen per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OrientationPolicy {
    /// Both tilt angles uniform over the scenario's angle range.
    Uniform,
    /// Face the first LED plane (ceiling, then wall strip) that keeps all
    /// four of its LEDs inside the field of view when faced squarely.
    FacePreferredGroup,
    /// Fixed tilt angles, radians.
    FixedTilt { theta: f64, phi: f64 },
}

/// Per-combination overrides applied on top of the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub led_mode: LedMode,
    pub m_l: f64,
    pub k_pwe: f64,
    pub k_jitter_sigma: Option<f64>,
    pub kappa_hw: Option<f64>,
    /// RIS size as rows = cols = sqrt(n_elements).
    pub ris_side: usize,
    /// RIS center displacement magnitude along +x, meters.
    pub offset_m: f64,
    /// Skip the RIS/link evaluation (localization-only experiments).
    pub compute_r: bool,
    /// Exponent-model policy for the solver.
    pub model_policy: ModelPolicy,
}

impl TrialConfig {
    pub fn from_scenario(s: &Scenario) -> Self {
        TrialConfig {
            led_mode: LedMode::CeilingPlusLeris,
            m_l: s.lambertian_order,
            k_pwe: s.k_pwe,
            k_jitter_sigma: s.k_jitter_sigma,
            kappa_hw: s.kappa_hw,
            ris_side: s.ris_rows,
            offset_m: s.ris_offset_m[0],
            compute_r: true,
            model_policy: s.model_policy(),
        }
    }

    fn panel(&self, s: &Scenario) -> RisPanel {
        let mut p = s.ris_panel();
        p.rows = self.ris_side;
        p.cols = self.ris_side;
        p.kappa_hw = self.kappa_hw;
        p.position_offset = Vec3::new(self.offset_m, 0.0, 0.0);
        p
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub truth: Pose,
    pub estimate: Option<LocalizationEstimate>,
    /// |truth - estimate| when the estimate exists.
    pub delta_d: Option<f64>,
    pub steering_estimated: Option<SteeringAngles>,
    pub steering_true: SteeringAngles,
    pub r_bpshz: Option<f64>,
    pub failed: bool,
    pub seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Trial seed from (base, point, trial); scheduler-independent.
pub fn derive_seed(base_seed: u64, point_index: u64, trial_index: u64) -> u64 {
    base_seed ^ splitmix64((point_index << 32) | (trial_index & 0xffff_ffff))
}

/// Synthesizes measurements for every LED the trial's mode allows.
fn synthesize_all<R: Rng + ?Sized>(
    s: &Scenario,
    cfg: &TrialConfig,
    pose: Pose,
    rng: &mut R,
) -> (Vec<crate::localization::LedGroup>, Vec<OpticalMeasurement>) {
    let pd = s.photodetector_at(pose);
    let mut groups = vec![s.ceiling_group()];
    if cfg.led_mode == LedMode::CeilingPlusLeris {
        groups.push(s.leris_group());
    }
    for g in &mut groups {
        for led in &mut g.leds {
            led.lambertian_order = cfg.m_l;
        }
    }
    let nlos = NlosMode::KRatio {
        k_pwe: cfg.k_pwe,
        jitter_sigma: cfg.k_jitter_sigma,
    };
    let ms = groups
        .iter()
        .flat_map(|g| g.leds.iter())
        .map(|led| synthesize_measurement(led, &pd, &nlos, NoiseMode::Fixed, rng))
        .collect();
    (groups, ms)
}

/// Runs one trial at the given receiver truth pose. `den_grid`, when
/// given, must match the trial's panel/AP geometry; it lets a sweep reuse
/// the profile-independent part of the normalization integral.
pub fn run_trial<R: Rng + ?Sized>(
    s: &Scenario,
    cfg: &TrialConfig,
    ue_truth: Pose,
    seed: u64,
    rng: &mut R,
    den_grid: Option<&FieldGrid>,
) -> TrialResult {
    let (groups, measurements) = synthesize_all(s, cfg, ue_truth, rng);
    let pd = s.photodetector_at(ue_truth);
    let opts = LocalizeOptions {
        policy: cfg.model_policy,
        eps: s.degeneracy_eps,
        bounds: Some(s.ue_bounds()),
    };
    let pairs: Vec<_> = groups
        .iter()
        .map(|g| (g, measurements.as_slice()))
        .collect();
    let outcome = localize(&pairs, &pd, Some(ue_truth.boresight), &opts);

    let panel = cfg.panel(s);
    let assumed_center = panel.center;
    let actual_center = panel.actual_center();
    let steering_true = steering_angles_from_estimate(ue_truth.position, actual_center)
        .expect("receiver never coincides with the RIS center");

    let (estimate, delta_d, steering_estimated, failed) = match outcome {
        Ok(est) => {
            let dd = distance(est.u_hat, ue_truth.position);
            let steer = steering_angles_from_estimate(est.u_hat, assumed_center).ok();
            (Some(est), Some(dd), steer, false)
        }
        Err(Error::NoValidSubset { .. })
        | Err(Error::NotEnoughMeasurements)
        | Err(Error::InconsistentMeasurements(_))
        | Err(Error::DegeneratePlacement { .. }) => (None, None, None, true),
        Err(e) => panic!("unexpected localization error: {e}"),
    };

    let r_bpshz = if cfg.compute_r {
        let lambda = s.wavelength_m;
        let ap = s.ap_position();
        let profile = match steering_estimated {
            Some(steer) => steering_profile(steer, &panel, ap, lambda, rng),
            None => diffuse_profile(&panel, lambda, rng),
        };
        let den = match den_grid {
            Some(grid) => grid.denominator(&profile),
            None => {
                let quad = Quadrature {
                    step: s.quadrature_step_deg.to_radians(),
                    ..Quadrature::default()
                };
                hemisphere_denominator(&profile, &panel, ap, &quad)
                    .expect("convergence checking disabled in trial loop")
            }
        };
        let g = gain_with_denominator(
            steering_true.theta,
            steering_true.phi,
            &profile,
            &panel,
            ap,
            den,
        );
        let d2 = distance(ue_truth.position, actual_center);
        let budget = s.link_budget(d2, &panel);
        Some(crate::ris::spectral_efficiency(&budget, g))
    } else {
        None
    };

    TrialResult {
        truth: ue_truth,
        estimate,
        delta_d,
        steering_estimated,
        steering_true,
        r_bpshz,
        failed,
        seed,
    }
}

/// Samples a receiver pose for one trial.
pub fn sample_pose<R: Rng + ?Sized>(
    s: &Scenario,
    cfg: &TrialConfig,
    orientation: OrientationPolicy,
    fixed_position: Option<Vec3>,
    rng: &mut R,
) -> Pose {
    let position = match fixed_position {
        Some(p) => p,
        None => Vec3::new(
            rng.gen_range(s.ue_x_range_m[0]..=s.ue_x_range_m[1]),
            rng.gen_range(s.ue_y_range_m[0]..=s.ue_y_range_m[1]),
            rng.gen_range(s.ue_z_range_m[0]..=s.ue_z_range_m[1]),
        ),
    };
    let boresight = match orientation {
        OrientationPolicy::FixedTilt { theta, phi } => ue_boresight_tilt(theta, phi),
        OrientationPolicy::Uniform => {
            let lo = s.ue_angle_range_deg[0].to_radians();
            let hi = s.ue_angle_range_deg[1].to_radians();
            let theta = rng.gen_range(lo..=hi);
            let phi = rng.gen_range(lo..=hi);
            // tilt from zenith; negative tilts fold into the opposite azimuth
            ue_boresight_tilt(
                theta.abs(),
                if theta < 0.0 {
                    phi + std::f64::consts::PI
                } else {
                    phi
                },
            )
        }
        OrientationPolicy::FacePreferredGroup => face_preferred_group(s, cfg, position),
    };
    Pose::new(position, boresight)
}

fn face_preferred_group(s: &Scenario, cfg: &TrialConfig, position: Vec3) -> Vec3 {
    let cos_fov = s.psi_max_deg.to_radians().cos();
    let mut groups = vec![s.ceiling_group()];
    if cfg.led_mode == LedMode::CeilingPlusLeris {
        groups.push(s.leris_group());
    }
    for g in &groups {
        let facing = -g.boresight;
        let worst = g
            .leds
            .iter()
            .map(|l| {
                let v = l.pose.position - position;
                facing.dot(v) / v.norm()
            })
            .fold(f64::MAX, f64::min);
        if worst > cos_fov {
            return facing;
        }
    }
    // no plane fully visible; face upward and let the trial fail into the
    // diffuse fallback
    Vec3::new(0.0, 0.0, 1.0)
}

/// Which quantity a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Receiver tilt from zenith, degrees, at the fixed test position.
    ThetaUe,
    KPwe,
    ArraySize,
    KappaHw,
    /// RIS center displacement, centimeters.
    Offset,
}

/// One curve of a sweep: the combination of settings held fixed while the
/// sweep variable moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCombo {
    pub led_mode: LedMode,
    pub m_l: f64,
    pub ris_side: usize,
    pub kappa_hw: Option<f64>,
    pub offset_m: f64,
}

/// Full sweep definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub trials_per_point: usize,
    pub combos: Vec<SweepCombo>,
    pub orientation: OrientationPolicy,
    /// Fixed receiver position (orientation sweeps); random otherwise.
    pub fixed_position: Option<[f64; 3]>,
    pub k_pwe: f64,
    pub k_jitter_sigma: Option<f64>,
    pub compute_r: bool,
    /// Exponent-model policy applied to every trial of the sweep.
    pub model_policy: ModelPolicy,
}

/// Aggregated results for one (combo, value) sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub led_mode: LedMode,
    pub m_l: f64,
    pub n_elements: usize,
    pub kappa_hw: Option<f64>,
    pub mean_delta_d_m: Option<f64>,
    pub se_delta_d: Option<f64>,
    pub mean_r_bpshz: Option<f64>,
    pub se_r: Option<f64>,
    pub n_trials: usize,
    pub n_failures: usize,
}

fn mean_and_se(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return Some((mean, 0.0));
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

/// Runs a sweep. Trials execute in parallel; per-trial seeds depend only on
/// (base_seed, point index, trial index), and the aggregation is a fixed
/// in-order pairwise sum, so the output is identical for any worker count.
pub fn run_sweep(s: &Scenario, spec: &SweepSpec, base_seed: u64) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    let mut point_index: u64 = 0;
    for combo in &spec.combos {
        for &value in &spec.values {
            let mut cfg = TrialConfig {
                led_mode: combo.led_mode,
                m_l: combo.m_l,
                k_pwe: spec.k_pwe,
                k_jitter_sigma: spec.k_jitter_sigma,
                kappa_hw: combo.kappa_hw,
                ris_side: combo.ris_side,
                offset_m: combo.offset_m,
                compute_r: spec.compute_r,
                model_policy: spec.model_policy,
            };
            let mut orientation = spec.orientation;
            let mut fixed_position = spec.fixed_position.map(|p| Vec3::new(p[0], p[1], p[2]));
            match spec.variable {
                SweepVariable::ThetaUe => {
                    orientation = OrientationPolicy::FixedTilt {
                        theta: value.to_radians(),
                        phi: 0.0,
                    };
                    if fixed_position.is_none() {
                        let p = s.fig2_position_m;
                        fixed_position = Some(Vec3::new(p[0], p[1], p[2]));
                    }
                }
                SweepVariable::KPwe => cfg.k_pwe = value,
                SweepVariable::ArraySize => cfg.ris_side = (value.sqrt().round()) as usize,
                SweepVariable::KappaHw => cfg.kappa_hw = Some(value),
                SweepVariable::Offset => cfg.offset_m = value / 100.0,
            }

            let den_grid = if spec.compute_r {
                let panel = cfg.panel(s);
                Some(FieldGrid::build(
                    &panel,
                    s.ap_position(),
                    s.wavelength_m,
                    s.quadrature_step_deg.to_radians(),
                ))
            } else {
                None
            };
            let results: Vec<TrialResult> = (0..spec.trials_per_point)
                .into_par_iter()
                .map(|t| {
                    let seed = derive_seed(base_seed, point_index, t as u64);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let pose = sample_pose(s, &cfg, orientation, fixed_position, &mut rng);
                    run_trial(s, &cfg, pose, seed, &mut rng, den_grid.as_ref())
                })
                .collect();

            let dd: Vec<f64> = results.iter().filter_map(|r| r.delta_d).collect();
            let rr: Vec<f64> = results.iter().filter_map(|r| r.r_bpshz).collect();
            let n_failures = results.iter().filter(|r| r.failed).count();
            let (mean_dd, se_dd) = match mean_and_se(&dd) {
                Some((m, s)) => (Some(m), Some(s)),
                None => (None, None),
            };
            let (mean_r, se_r) = match mean_and_se(&rr) {
                Some((m, s)) => (Some(m), Some(s)),
                None => (None, None),
            };
            rows.push(SweepRow {
                sweep_value: value,
                led_mode: combo.led_mode,
                m_l: combo.m_l,
                n_elements: cfg.ris_side * cfg.ris_side,
                kappa_hw: cfg.kappa_hw,
                mean_delta_d_m: mean_dd,
                se_delta_d: se_dd,
                mean_r_bpshz: mean_r,
                se_r,
                n_trials: results.len(),
                n_failures,
            });
            point_index += 1;
        }
    }
    rows
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.9e}"),
        None => String::new(),
    }
}

/// Renders sweep rows as CSV with a fixed column order and dot-decimal
/// formatting.
pub fn sweep_rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "sweep_value,led_mode,m_l,N,kappa_hw,mean_delta_d_m,se_delta_d,mean_R_bpshz,se_R,n_trials,n_failures\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.sweep_value,
            r.led_mode,
            r.m_l,
            r.n_elements,
            r.kappa_hw.map(|k| format!("{k}")).unwrap_or_default(),
            fmt_opt(r.mean_delta_d_m),
            fmt_opt(r.se_delta_d),
            fmt_opt(r.mean_r_bpshz),
            fmt_opt(r.se_r),
            r.n_trials,
            r.n_failures,
        ));
    }
    out
}
