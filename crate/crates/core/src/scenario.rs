//! Room configuration: LED deployment, RIS panel, detector and link
//! parameters, receiver sampling ranges, and the structured-text scenario
//! file that mirrors the deployment tables key for key.

use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::localization::{ExponentModel, LedGroup, ModelPolicy};
use crate::optics::{Led, PhotoDetector};
use crate::ris::{LinkBudget, Quadrature, RisPanel};
use serde::{Deserialize, Serialize};

/// Full simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    /// Room dimensions, meters.
    pub room_dims_m: [f64; 3],
    pub ceiling_led_1: [f64; 3],
    pub ceiling_led_2: [f64; 3],
    pub ceiling_led_3: [f64; 3],
    pub ceiling_led_4: [f64; 3],
    pub leris_center: [f64; 3],
    pub leris_led_1: [f64; 3],
    pub leris_led_2: [f64; 3],
    pub leris_led_3: [f64; 3],
    pub leris_led_4: [f64; 3],

    pub wavelength_m: f64,
    pub ris_efficiency: f64,
    pub element_size_m: f64,
    pub element_gain: f64,
    pub reference_distance_m: f64,
    /// RF receiver noise power, watts (-130 dBm).
    pub rf_noise_power_w: f64,
    pub rf_transmit_power_w: f64,
    pub antenna_gain_tx: f64,
    pub antenna_gain_rx: f64,
    pub optical_transmit_power_w: f64,
    /// Additive optical noise power P_n (channel-power units).
    pub optical_noise_power: f64,
    pub optical_filter_gain: f64,
    pub pd_area_m2: f64,
    pub pd_refractive_index: f64,
    pub psi_max_deg: f64,
    pub lambertian_order: f64,

    pub ris_rows: usize,
    pub ris_cols: usize,
    /// Hardware-imperfection concentration; absent = ideal phases.
    pub kappa_hw: Option<f64>,
    /// Actual-minus-assumed RIS center displacement, meters.
    pub ris_offset_m: [f64; 3],
    /// AP distance from the RIS center along +y.
    pub ap_distance_m: f64,

    pub k_pwe: f64,
    /// Log-normal spread (sigma of ln K) of the per-LED LoS/non-LoS ratio;
    /// absent = every LED at exactly k_pwe.
    pub k_jitter_sigma: Option<f64>,

    pub ue_x_range_m: [f64; 2],
    pub ue_y_range_m: [f64; 2],
    pub ue_z_range_m: [f64; 2],
    /// Orientation-angle sampling range, degrees (applies to both angles).
    pub ue_angle_range_deg: [f64; 2],

    /// Degeneracy tolerance of the localization solver.
    pub degeneracy_eps: f64,
    /// Exponent-model policy: "auto", "parallel" or "general".
    pub exponent_model: String,
    /// Auto-policy threshold on the boresight-axis angle, degrees.
    pub parallel_threshold_deg: f64,
    /// Quadrature grid step for the gain normalization, degrees.
    pub quadrature_step_deg: f64,
    /// Fixed receiver position used by the orientation-sweep experiment.
    pub fig2_position_m: [f64; 3],
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            room_dims_m: [10.0, 10.0, 3.0],
            ceiling_led_1: [3.5, 5.0, 3.0],
            ceiling_led_2: [4.5, 5.0, 3.0],
            ceiling_led_3: [5.5, 5.0, 3.0],
            ceiling_led_4: [6.5, 5.0, 3.0],
            leris_center: [5.0, 0.0, 1.5],
            leris_led_1: [4.1, 0.0, 1.5],
            leris_led_2: [4.7, 0.0, 1.5],
            leris_led_3: [5.3, 0.0, 1.5],
            leris_led_4: [5.9, 0.0, 1.5],
            wavelength_m: 0.125,
            ris_efficiency: 1.0,
            element_size_m: 0.0625,
            element_gain: 1.0,
            reference_distance_m: 1.0,
            rf_noise_power_w: 1e-16,
            rf_transmit_power_w: 1.0,
            antenna_gain_tx: 1.0,
            antenna_gain_rx: 1.0,
            optical_transmit_power_w: 0.05,
            optical_noise_power: 5e-14,
            optical_filter_gain: 1.0,
            pd_area_m2: 1e-4,
            pd_refractive_index: 1.5,
            psi_max_deg: 75.0,
            lambertian_order: 2.0,
            ris_rows: 40,
            ris_cols: 40,
            kappa_hw: None,
            ris_offset_m: [0.0, 0.0, 0.0],
            ap_distance_m: 20.0,
            k_pwe: 100.0,
            k_jitter_sigma: None,
            ue_x_range_m: [0.0, 10.0],
            ue_y_range_m: [0.5, 5.0],
            ue_z_range_m: [0.5, 2.5],
            ue_angle_range_deg: [-90.0, 90.0],
            degeneracy_eps: 1e-6,
            exponent_model: "auto".to_string(),
            parallel_threshold_deg: 1.0,
            quadrature_step_deg: 0.5,
            fig2_position_m: [3.9, 3.5, 0.9],
        }
    }
}

/// The deployment defaults (all table values).
pub fn build_default_scenario() -> Scenario {
    Scenario::default()
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario> {
        let s: Scenario =
            toml::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let inside = |p: &[f64; 3]| {
            p[0] >= 0.0
                && p[0] <= self.room_dims_m[0]
                && p[1] >= 0.0
                && p[1] <= self.room_dims_m[1]
                && p[2] >= 0.0
                && p[2] <= self.room_dims_m[2]
        };
        for (name, p) in [
            ("ceiling_led_1", &self.ceiling_led_1),
            ("ceiling_led_2", &self.ceiling_led_2),
            ("ceiling_led_3", &self.ceiling_led_3),
            ("ceiling_led_4", &self.ceiling_led_4),
            ("leris_led_1", &self.leris_led_1),
            ("leris_led_2", &self.leris_led_2),
            ("leris_led_3", &self.leris_led_3),
            ("leris_led_4", &self.leris_led_4),
        ] {
            if !inside(p) {
                return Err(Error::InvalidScenario(format!("{name} outside the room")));
            }
        }
        for (name, p) in [
            ("leris_led_1", &self.leris_led_1),
            ("leris_led_2", &self.leris_led_2),
            ("leris_led_3", &self.leris_led_3),
            ("leris_led_4", &self.leris_led_4),
        ] {
            if p[1].abs() > 1e-9 {
                return Err(Error::InvalidScenario(format!(
                    "{name} must lie on the RIS plane y = 0"
                )));
            }
        }
        if !(self.ris_efficiency > 0.0 && self.ris_efficiency <= 1.0) {
            return Err(Error::InvalidScenario(
                "ris_efficiency must be in (0, 1]".into(),
            ));
        }
        if self.ris_rows == 0 || self.ris_cols == 0 || self.element_size_m <= 0.0 {
            return Err(Error::InvalidScenario(
                "RIS dimensions must be positive".into(),
            ));
        }
        match self.exponent_model.as_str() {
            "auto" | "parallel" | "general" => {}
            other => {
                return Err(Error::InvalidScenario(format!(
                    "unknown exponent_model '{other}' (expected auto/parallel/general)"
                )))
            }
        }
        Ok(())
    }

    fn led(&self, position: [f64; 3], boresight: Vec3, channel_id: u32) -> Led {
        Led {
            pose: Pose::new(Vec3::new(position[0], position[1], position[2]), boresight),
            optical_power: self.optical_transmit_power_w,
            lambertian_order: self.lambertian_order,
            channel_id,
        }
    }

    /// Ceiling strip, emitting downward; channels 1-4.
    pub fn ceiling_group(&self) -> LedGroup {
        let b = Vec3::new(0.0, 0.0, -1.0);
        LedGroup {
            label: "ceiling".into(),
            leds: vec![
                self.led(self.ceiling_led_1, b, 1),
                self.led(self.ceiling_led_2, b, 2),
                self.led(self.ceiling_led_3, b, 3),
                self.led(self.ceiling_led_4, b, 4),
            ],
            boresight: b,
        }
    }

    /// RIS-mounted strip, emitting into the room along +y; channels 5-8.
    pub fn leris_group(&self) -> LedGroup {
        let b = Vec3::new(0.0, 1.0, 0.0);
        LedGroup {
            label: "leris".into(),
            leds: vec![
                self.led(self.leris_led_1, b, 5),
                self.led(self.leris_led_2, b, 6),
                self.led(self.leris_led_3, b, 7),
                self.led(self.leris_led_4, b, 8),
            ],
            boresight: b,
        }
    }

    pub fn all_leds(&self) -> Vec<Led> {
        let mut v = self.ceiling_group().leds;
        v.extend(self.leris_group().leds);
        v
    }

    pub fn photodetector_at(&self, pose: Pose) -> PhotoDetector {
        PhotoDetector {
            pose,
            area: self.pd_area_m2,
            filter_gain: self.optical_filter_gain,
            refractive_index: self.pd_refractive_index,
            half_fov: self.psi_max_deg.to_radians(),
            noise_power: self.optical_noise_power,
        }
    }

    pub fn ris_panel(&self) -> RisPanel {
        RisPanel {
            rows: self.ris_rows,
            cols: self.ris_cols,
            element_side: self.element_size_m,
            center: Vec3::new(
                self.leris_center[0],
                self.leris_center[1],
                self.leris_center[2],
            ),
            efficiency: self.ris_efficiency,
            element_gain: self.element_gain,
            kappa_hw: self.kappa_hw,
            position_offset: Vec3::new(
                self.ris_offset_m[0],
                self.ris_offset_m[1],
                self.ris_offset_m[2],
            ),
        }
    }

    /// AP placed along +y from the RIS center at the configured distance.
    pub fn ap_position(&self) -> Vec3 {
        Vec3::new(
            self.leris_center[0],
            self.leris_center[1] + self.ap_distance_m,
            self.leris_center[2],
        )
    }

    pub fn link_budget(&self, d2: f64, panel: &RisPanel) -> LinkBudget {
        LinkBudget::new(
            self.antenna_gain_tx,
            self.antenna_gain_rx,
            self.rf_transmit_power_w,
            self.rf_noise_power_w,
            self.wavelength_m,
            self.reference_distance_m,
            self.ap_distance_m,
            d2,
            panel,
        )
    }

    pub fn ue_bounds(&self) -> [[f64; 2]; 3] {
        [self.ue_x_range_m, self.ue_y_range_m, self.ue_z_range_m]
    }

    pub fn model_policy(&self) -> ModelPolicy {
        match self.exponent_model.as_str() {
            "parallel" => ModelPolicy::Fixed(ExponentModel::Parallel),
            "general" => ModelPolicy::Fixed(ExponentModel::General),
            _ => ModelPolicy::Auto {
                parallel_threshold: self.parallel_threshold_deg.to_radians(),
            },
        }
    }

    pub fn quadrature(&self) -> Quadrature {
        Quadrature {
            step: self.quadrature_step_deg.to_radians(),
            ..Quadrature::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_matches_tables() {
        let s = build_default_scenario();
        assert_eq!(s.ceiling_led_3, [5.5, 5.0, 3.0]);
        assert_eq!(s.leris_led_4, [5.9, 0.0, 1.5]);
        assert_eq!(s.optical_transmit_power_w, 0.05);
        assert_eq!(s.psi_max_deg, 75.0);
        assert_eq!(s.wavelength_m, 0.125);
        assert!((s.element_size_m - s.wavelength_m / 2.0).abs() < 1e-15);
        s.validate().unwrap();
    }

    #[test]
    fn toml_round_trip_and_overrides() {
        let s = build_default_scenario();
        let text = s.to_toml();
        let back = Scenario::from_toml(&text).unwrap();
        assert_eq!(s, back);

        let partial = "k_pwe = 50.0\nceiling_led_1 = [3.0, 5.0, 3.0]\n";
        let p = Scenario::from_toml(partial).unwrap();
        assert_eq!(p.k_pwe, 50.0);
        assert_eq!(p.ceiling_led_1, [3.0, 5.0, 3.0]);
        assert_eq!(p.ceiling_led_2, [4.5, 5.0, 3.0]);
    }

    #[test]
    fn validation_rejects_out_of_room_led() {
        let mut s = build_default_scenario();
        s.ceiling_led_1 = [11.0, 5.0, 3.0];
        assert!(s.validate().is_err());
        let mut s2 = build_default_scenario();
        s2.leris_led_2 = [4.7, 0.3, 1.5];
        assert!(s2.validate().is_err());
    }

    #[test]
    fn channel_ids_unique() {
        let s = build_default_scenario();
        let mut ids: Vec<u32> = s.all_leds().iter().map(|l| l.channel_id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 8);
    }
}
