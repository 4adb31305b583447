//! Error and diagnostic types shared across the library.

use thiserror::Error;

/// Tags identifying which solvability constraint a 4-LED placement violates.
///
/// The closed-form coordinate solver divides by several alpha-dependent
/// expressions; each tag names one of the quantities that must stay away
/// from zero for the solution to exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintTag {
    /// |alpha_1 - 1| below tolerance (LEDs 1 and 2 indistinguishable).
    Alpha1Unity,
    /// |alpha_3 - 1| below tolerance (LEDs 1 and 4 indistinguishable).
    Alpha3Unity,
    /// |alpha_1 - alpha_3| below tolerance (LEDs 2 and 4 indistinguishable).
    Alpha1EqAlpha3,
    /// xi_2 vanishes: the first three LEDs share an in-plane x coordinate.
    Xi2Zero,
    /// Two LEDs of the subset are equidistant from the receiver.
    EquidistantPair,
    /// The LED subset is collinear (or otherwise rank-deficient) so the
    /// planar closed form degenerates.
    ParallelPlaneDegenerate,
}

impl std::fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ConstraintTag::Alpha1Unity => "alpha1_unity",
            ConstraintTag::Alpha3Unity => "alpha3_unity",
            ConstraintTag::Alpha1EqAlpha3 => "alpha1_eq_alpha3",
            ConstraintTag::Xi2Zero => "xi2_zero",
            ConstraintTag::EquidistantPair => "equidistant_pair",
            ConstraintTag::ParallelPlaneDegenerate => "parallel_plane_degenerate",
        };
        f.write_str(s)
    }
}

/// Library error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("points coincide; direction is undefined")]
    CoincidentPoints,

    #[error("received power must be positive (got {0})")]
    NonPositivePower(f64),

    #[error("arrival angle outside the detector field of view")]
    OutOfFov,

    #[error("degenerate LED placement: {tag}")]
    DegeneratePlacement { tag: ConstraintTag },

    #[error("measurements are inconsistent with any receiver position ({0})")]
    InconsistentMeasurements(&'static str),

    #[error("no valid 4-LED subset: {summary}")]
    NoValidSubset { summary: String },

    #[error("fewer than four line-of-sight measurements on a common plane")]
    NotEnoughMeasurements,

    #[error(
        "quadrature did not converge: step {step_deg} deg changes the integral by {rel_change:.3e} (limit {limit:.3e})"
    )]
    QuadratureNotConverged {
        step_deg: f64,
        rel_change: f64,
        limit: f64,
    },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
