//! Experiment presets: the five sweep designs, each one CSV.
//!
//! All presets run against the default deployment unless a scenario file
//! overrides it. Localization-only sweeps skip the RIS evaluation; the
//! link-level sweeps orient the receiver toward the preferred LED plane
//! per trial and spread the per-LED LoS/non-LoS ratio log-normally around
//! K_PWE, which is what makes the recovered position (and hence the
//! steered rate) K-dependent.

use leris_core::localization::{ExponentModel, ModelPolicy};
use leris_core::montecarlo::{LedMode, OrientationPolicy, SweepCombo, SweepSpec, SweepVariable};
use leris_core::scenario::Scenario;

/// Log-normal sigma of the per-LED LoS/non-LoS ratio used by the
/// link-level presets when the scenario does not set one.
pub const DEFAULT_K_JITTER_SIGMA: f64 = 0.15;

pub struct Preset {
    pub spec: SweepSpec,
    pub default_trials: usize,
}

fn combo(
    led_mode: LedMode,
    m_l: f64,
    side: usize,
    kappa: Option<f64>,
    offset_m: f64,
) -> SweepCombo {
    SweepCombo {
        led_mode,
        m_l,
        ris_side: side,
        kappa_hw: kappa,
        offset_m,
    }
}

fn jitter(s: &Scenario) -> Option<f64> {
    s.k_jitter_sigma.or(Some(DEFAULT_K_JITTER_SIGMA))
}

/// Localization error against receiver tilt at a fixed position,
/// ceiling-only versus ceiling plus the RIS-mounted strip.
fn fig2(s: &Scenario) -> Preset {
    Preset {
        spec: SweepSpec {
            variable: SweepVariable::ThetaUe,
            values: vec![0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0],
            trials_per_point: 0,
            combos: vec![
                combo(LedMode::CeilingOnly, 1.0, s.ris_rows, None, 0.0),
                combo(LedMode::CeilingPlusLeris, 1.0, s.ris_rows, None, 0.0),
                combo(LedMode::CeilingOnly, 2.0, s.ris_rows, None, 0.0),
                combo(LedMode::CeilingPlusLeris, 2.0, s.ris_rows, None, 0.0),
            ],
            orientation: OrientationPolicy::FixedTilt {
                theta: 0.0,
                phi: 0.0,
            },
            fixed_position: Some(s.fig2_position_m),
            k_pwe: 100.0,
            k_jitter_sigma: None,
            compute_r: false,
            model_policy: ModelPolicy::Fixed(ExponentModel::Parallel),
        },
        default_trials: 1000,
    }
}

/// Spectral efficiency against K_PWE for three panel sizes.
fn fig3(s: &Scenario) -> Preset {
    Preset {
        spec: SweepSpec {
            variable: SweepVariable::KPwe,
            values: vec![10.0, 25.0, 50.0, 75.0, 100.0, 125.0, 150.0],
            trials_per_point: 0,
            combos: vec![
                combo(LedMode::CeilingPlusLeris, s.lambertian_order, 10, None, 0.0),
                combo(LedMode::CeilingPlusLeris, s.lambertian_order, 25, None, 0.0),
                combo(LedMode::CeilingPlusLeris, s.lambertian_order, 40, None, 0.0),
            ],
            orientation: OrientationPolicy::FacePreferredGroup,
            fixed_position: None,
            k_pwe: s.k_pwe,
            k_jitter_sigma: jitter(s),
            compute_r: true,
            model_policy: ModelPolicy::Fixed(ExponentModel::Parallel),
        },
        default_trials: 1000,
    }
}

/// Hardware-imperfection study: R against K_PWE for kappa in {0, 1, 10}
/// and two panel sizes.
fn fig4(s: &Scenario) -> Preset {
    let mut combos = Vec::new();
    for kappa in [0.0, 1.0, 10.0] {
        for side in [10usize, 40] {
            combos.push(combo(
                LedMode::CeilingPlusLeris,
                s.lambertian_order,
                side,
                Some(kappa),
                0.0,
            ));
        }
    }
    Preset {
        spec: SweepSpec {
            variable: SweepVariable::KPwe,
            values: vec![10.0, 50.0, 100.0, 150.0],
            trials_per_point: 0,
            combos,
            orientation: OrientationPolicy::FacePreferredGroup,
            fixed_position: None,
            k_pwe: s.k_pwe,
            k_jitter_sigma: jitter(s),
            compute_r: true,
            model_policy: ModelPolicy::Fixed(ExponentModel::Parallel),
        },
        default_trials: 200,
    }
}

/// Localization error against K_PWE for Lambertian orders {1, 2, 5},
/// ceiling-only versus ceiling plus the RIS strip.
fn fig5(s: &Scenario) -> Preset {
    let mut combos = Vec::new();
    for m_l in [1.0, 2.0, 5.0] {
        for mode in [LedMode::CeilingOnly, LedMode::CeilingPlusLeris] {
            combos.push(combo(mode, m_l, s.ris_rows, None, 0.0));
        }
    }
    Preset {
        spec: SweepSpec {
            variable: SweepVariable::KPwe,
            values: vec![10.0, 25.0, 50.0, 75.0, 100.0, 125.0, 150.0],
            trials_per_point: 0,
            combos,
            orientation: OrientationPolicy::FacePreferredGroup,
            fixed_position: None,
            k_pwe: s.k_pwe,
            k_jitter_sigma: jitter(s),
            compute_r: false,
            model_policy: ModelPolicy::Fixed(ExponentModel::Parallel),
        },
        default_trials: 1000,
    }
}

/// Position-offset study: R against K_PWE when the actual RIS center is
/// displaced from the assumed one.
fn fig6(s: &Scenario, offset_cm_override: Option<f64>) -> Preset {
    let offsets_cm: Vec<f64> = match offset_cm_override {
        Some(cm) => vec![cm],
        None => vec![1.0, 3.0],
    };
    let mut combos = Vec::new();
    for &cm in &offsets_cm {
        for side in [10usize, 40] {
            combos.push(combo(
                LedMode::CeilingPlusLeris,
                s.lambertian_order,
                side,
                None,
                cm / 100.0,
            ));
        }
    }
    Preset {
        spec: SweepSpec {
            variable: SweepVariable::KPwe,
            values: vec![10.0, 50.0, 100.0, 150.0, 200.0, 250.0],
            trials_per_point: 0,
            combos,
            orientation: OrientationPolicy::FacePreferredGroup,
            fixed_position: None,
            k_pwe: s.k_pwe,
            k_jitter_sigma: jitter(s),
            compute_r: true,
            model_policy: ModelPolicy::Fixed(ExponentModel::Parallel),
        },
        default_trials: 300,
    }
}

/// Looks up a preset by name.
pub fn preset(name: &str, s: &Scenario, offset_cm: Option<f64>) -> Option<Preset> {
    match name {
        "fig2" => Some(fig2(s)),
        "fig3" => Some(fig3(s)),
        "fig4" => Some(fig4(s)),
        "fig5" => Some(fig5(s)),
        "fig6" => Some(fig6(s, offset_cm)),
        _ => None,
    }
}

pub const PRESET_NAMES: [&str; 5] = ["fig2", "fig3", "fig4", "fig5", "fig6"];
