//! Indoor optical-RSS localization driving RIS beam steering.
//!
//! The library models a programmable indoor wireless environment in which a
//! receiver first localizes itself from the received signal strength of
//! ceiling-mounted LEDs and LEDs carried on the face of a reconfigurable
//! intelligent surface, and the surface is then phase-configured to steer
//! an access point's transmission toward the estimated position. Modules:
//!
//! * [`geometry`]: vectors, poses, steering angles, canonical plane frames.
//! * [`optics`]: Lambertian LoS/non-LoS channel gains and received-power
//!   synthesis.
//! * [`localization`]: the closed-form RSS position solver, placement
//!   validity, and the closed-form distance-error model.
//! * [`ris`]: far-field synthesis, steering profiles with Von Mises
//!   hardware imperfection, hemispherical gain normalization, and the link
//!   budget.
//! * [`scenario`]: room/parameter configuration and its structured text
//!   format.
//! * [`montecarlo`]: seeded randomized trials and experiment sweeps.

pub mod error;
pub mod geometry;
pub mod localization;
pub mod montecarlo;
pub mod numeric;
pub mod optics;
pub mod ris;
pub mod scenario;

pub use error::{ConstraintTag, Error, Result};
pub use geometry::{
    distance, steering_angles_from_estimate, CanonicalFrame, Pose, SteeringAngles, Vec3,
};
pub use localization::{
    compute_alphas, estimate_distance, localization_error_model, localize, AlphaTriple,
    ExponentModel, LedGroup, LocalizationEstimate, LocalizeOptions, ModelPolicy, PlacementValidity,
    XiCoefficients,
};
pub use montecarlo::{
    derive_seed, run_sweep, run_trial, sweep_rows_to_csv, LedMode, OrientationPolicy, SweepCombo,
    SweepRow, SweepSpec, SweepVariable, TrialConfig, TrialResult,
};
pub use optics::{
    concentrator_gain, half_power_beamwidth, los_gain, nlos_gain, synthesize_measurement, Led,
    NlosMode, NoiseMode, OpticalMeasurement, PhotoDetector, ReflectorPatch,
};
pub use ris::{
    diffuse_profile, effective_area, far_field, far_field_power, far_field_power_grid, gain,
    gain_with_denominator, hemisphere_denominator, omega, path_loss, sample_von_mises,
    spectral_efficiency, steering_profile, zeta, FieldGrid, LinkBudget, PhaseProfile, Quadrature,
    RisPanel,
};
pub use scenario::{build_default_scenario, Scenario};
