//! Optical RSS positioning: distance inversion, closed-form coordinate
//! recovery, placement validity, LED subset selection, and the closed-form
//! error model.
//!
//! The solver works in a canonical frame where the four LEDs sit on the
//! y = 0 plane and emit along +y. Power ratios raised to a model-dependent
//! exponent give the squared-distance ratios
//! alpha_j = d_1^2 / d_{j+1}^2; a chain of linear eliminations then yields
//! the in-plane coordinates and the perpendicular offset. Two geometries are
//! handled:
//!
//! * LEDs in general position on the plane: the full rational chain
//!   (z from the xi coefficients, then x, then the positive y root).
//! * LEDs on a line (the ceiling strip and the RIS-mounted strip are both
//!   of this kind): the distance ratios only fix the coordinate along the
//!   line and the radial distance to it, so the solver recovers those and
//!   splits the radial distance into (perpendicular height, in-plane
//!   offset) using the absolute received power of the reference LED. The
//!   mirror ambiguity inherent to that split is resolved against the room
//!   bounds, or by the residual against a second LED plane when one is
//!   measured.

use crate::error::{ConstraintTag, Error, Result};
use crate::geometry::{CanonicalFrame, Vec3};
use crate::optics::{
    concentrator_gain, concentrator_gain_in_fov, Led, OpticalMeasurement, PhotoDetector,
};
use serde::{Deserialize, Serialize};

/// Which exponent turns power ratios into squared-distance ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExponentModel {
    /// 2 / (m_l + 1): receiver orientation unknown.
    General,
    /// 2 / (m_l + 3): receiver plane parallel to the LED plane, so the
    /// arrival angles equal the departure angles.
    Parallel,
}

impl ExponentModel {
    pub fn exponent(self, m_l: f64) -> f64 {
        match self {
            ExponentModel::General => 2.0 / (m_l + 1.0),
            ExponentModel::Parallel => 2.0 / (m_l + 3.0),
        }
    }
}

/// How the exponent model is chosen per LED group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelPolicy {
    /// Parallel when the angle between the receiver boresight axis and the
    /// LED-plane boresight axis is below the threshold, else general.
    Auto {
        parallel_threshold: f64,
    },
    Fixed(ExponentModel),
}

impl Default for ModelPolicy {
    fn default() -> Self {
        ModelPolicy::Auto {
            parallel_threshold: 1f64.to_radians(),
        }
    }
}

/// The three squared-distance ratios recovered from received powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaTriple {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub model: ExponentModel,
}

/// Computes alpha_j = (q_{j+1} / q_1)^e from four (P_o-normalized) received
/// powers, with e fixed by the exponent model.
pub fn compute_alphas(powers: &[f64; 4], m_l: f64, model: ExponentModel) -> Result<AlphaTriple> {
    for &p in powers {
        if !p.is_finite() || p <= 0.0 {
            return Err(Error::NonPositivePower(p));
        }
    }
    let e = model.exponent(m_l);
    Ok(AlphaTriple {
        a1: (powers[1] / powers[0]).powf(e),
        a2: (powers[2] / powers[0]).powf(e),
        a3: (powers[3] / powers[0]).powf(e),
        model,
    })
}

/// Coefficients of the linear relation xi_2 x = xi_1 z + xi_3 between the
/// in-plane receiver coordinates, obtained from LEDs 1-3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiCoefficients {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
}

/// Canonical in-plane LED coordinates, indexed 1..4 as the solver labels
/// them.
pub type LedXz = [[f64; 2]; 4];

pub fn xi_coefficients(alphas: &AlphaTriple, led_xz: &LedXz) -> XiCoefficients {
    let (a1, a2) = (alphas.a1, alphas.a2);
    let [p1, p2, p3, _] = *led_xz;
    let (x1, z1) = (p1[0], p1[1]);
    let (x2, z2) = (p2[0], p2[1]);
    let (x3, z3) = (p3[0], p3[1]);
    XiCoefficients {
        xi1: 2.0 * (a1 * (z1 - z2) + a2 * (z3 - z1) + a1 * a2 * (z2 - z3)),
        xi2: 2.0 * (a1 * (x2 - x1) + a2 * (x1 - x3) + a1 * a2 * (x3 - x2)),
        xi3: a1 * (x2 * x2 - x1 * x1 + z2 * z2 - z1 * z1)
            + a2 * (x1 * x1 - x3 * x3 + z1 * z1 - z3 * z3)
            + a1 * a2 * (x3 * x3 - x2 * x2 + z3 * z3 - z2 * z2),
    }
}

/// Scale against which |xi_2| is judged nonzero.
fn xi2_scale(alphas: &AlphaTriple, led_xz: &LedXz) -> f64 {
    let m = led_xz
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    2.0 * (alphas.a1 + alphas.a2 + alphas.a1 * alphas.a2) * m
}

/// Perpendicular coordinate from the first Apollonius relation:
/// y = sqrt( (S_1 - a_1 S_2) / (a_1 - 1) ), positive root only.
pub fn solve_y(
    x_hat: f64,
    z_hat: f64,
    alphas: &AlphaTriple,
    led_xz: &LedXz,
    eps: f64,
) -> Result<f64> {
    let a1 = alphas.a1;
    if (a1 - 1.0).abs() <= eps {
        return Err(Error::DegeneratePlacement {
            tag: ConstraintTag::Alpha1Unity,
        });
    }
    let s = |p: [f64; 2]| {
        let dx = x_hat - p[0];
        let dz = z_hat - p[1];
        dx * dx + dz * dz
    };
    let rad = (s(led_xz[0]) - a1 * s(led_xz[1])) / (a1 - 1.0);
    let scale = s(led_xz[0]).max(s(led_xz[1])).max(1.0);
    if rad < -eps * scale {
        return Err(Error::InconsistentMeasurements("negative radicand for y"));
    }
    Ok(rad.max(0.0).sqrt())
}

/// In-plane x from the xi relation once z is known.
pub fn solve_x(z_hat: f64, alphas: &AlphaTriple, led_xz: &LedXz, eps: f64) -> Result<f64> {
    let xis = xi_coefficients(alphas, led_xz);
    if xis.xi2.abs() <= eps * xi2_scale(alphas, led_xz) {
        return Err(Error::DegeneratePlacement {
            tag: ConstraintTag::Xi2Zero,
        });
    }
    Ok((xis.xi1 * z_hat + xis.xi3) / xis.xi2)
}

/// In-plane z from the closed rational form over LEDs 1, 2 and 4.
pub fn solve_z(
    alphas: &AlphaTriple,
    xis: &XiCoefficients,
    led_xz: &LedXz,
    eps: f64,
) -> Result<f64> {
    let (a1, a3) = (alphas.a1, alphas.a3);
    if (a3 - 1.0).abs() <= eps {
        return Err(Error::DegeneratePlacement {
            tag: ConstraintTag::Alpha3Unity,
        });
    }
    if (a1 - a3).abs() <= eps * a1.abs().max(a3.abs()).max(1.0) {
        return Err(Error::DegeneratePlacement {
            tag: ConstraintTag::Alpha1EqAlpha3,
        });
    }
    let c = [a1 - a3, a1 * (a3 - 1.0), -a3 * (a1 - 1.0)];
    let pts = [led_xz[0], led_xz[1], led_xz[3]];
    let mut num = 0.0;
    let mut den = 0.0;
    let mut den_scale = 0.0;
    for (ci, p) in c.iter().zip(pts.iter()) {
        let (x, z) = (p[0], p[1]);
        num += ci * (x * (xis.xi2 * x - 2.0 * xis.xi3) + xis.xi2 * z * z);
        let t = xis.xi1 * x + xis.xi2 * z;
        den += 2.0 * ci * t;
        den_scale += 2.0 * (ci * t).abs();
    }
    if den.abs() <= eps * den_scale.max(1e-300) {
        return Err(Error::DegeneratePlacement {
            tag: ConstraintTag::ParallelPlaneDegenerate,
        });
    }
    Ok(num / den)
}

/// Full planar chain: z, then x, then the positive y root, with the
/// axis-swapped variant attempted when the first three LEDs share an x
/// coordinate (xi_2 = 0).
pub fn solve_planar(alphas: &AlphaTriple, led_xz: &LedXz, eps: f64) -> Result<Vec3> {
    match solve_planar_once(alphas, led_xz, eps) {
        Ok(v) => Ok(v),
        Err(Error::DegeneratePlacement {
            tag: ConstraintTag::Xi2Zero,
        }) => {
            // Shift the constraint to the other in-plane axis.
            let swapped: LedXz = [
                [led_xz[0][1], led_xz[0][0]],
                [led_xz[1][1], led_xz[1][0]],
                [led_xz[2][1], led_xz[2][0]],
                [led_xz[3][1], led_xz[3][0]],
            ];
            let v = solve_planar_once(alphas, &swapped, eps)?;
            Ok(Vec3::new(v.z, v.y, v.x))
        }
        Err(e) => Err(e),
    }
}

fn solve_planar_once(alphas: &AlphaTriple, led_xz: &LedXz, eps: f64) -> Result<Vec3> {
    let xis = xi_coefficients(alphas, led_xz);
    if xis.xi2.abs() <= eps * xi2_scale(alphas, led_xz) {
        return Err(Error::DegeneratePlacement {
            tag: ConstraintTag::Xi2Zero,
        });
    }
    let z = solve_z(alphas, &xis, led_xz, eps)?;
    let x = (xis.xi1 * z + xis.xi3) / xis.xi2;
    let y = solve_y(x, z, alphas, led_xz, eps)?;
    Ok(Vec3::new(x, y, z))
}

/// Estimated LED-receiver distance from one received power (the d-hat
/// inversion), given the perpendicular height of the receiver above the LED
/// plane and the arrival angle.
///
/// `y_hat` is (y_u - y_i) in the canonical frame of the LED plane.
pub fn estimate_distance(
    measurement: &OpticalMeasurement,
    led: &Led,
    pd: &PhotoDetector,
    y_hat: f64,
) -> Result<f64> {
    if !measurement.p_r.is_finite() || measurement.p_r <= 0.0 {
        return Err(Error::NonPositivePower(measurement.p_r));
    }
    let gc = concentrator_gain(measurement.arrival_angle, pd);
    if gc == 0.0 {
        return Err(Error::OutOfFov);
    }
    let m = led.lambertian_order;
    let base = led.optical_power / measurement.p_r * (m + 1.0) * pd.area * y_hat.powf(m)
        / (2.0 * std::f64::consts::PI)
        * pd.filter_gain
        * gc
        * measurement.arrival_angle.cos();
    Ok(base.powf(1.0 / (m + 2.0)))
}

/// Closed-form distance error of the RSS inversion:
/// delta_d = d (1 - (1 / (1 + 1/K + P_n/P_LoS))^(1/(m+2))).
pub fn localization_error_model(d_true: f64, k_opt: f64, pn_over_plos: f64, m_l: f64) -> f64 {
    let denom = 1.0 + 1.0 / k_opt + pn_over_plos;
    d_true * (1.0 - (1.0 / denom).powf(1.0 / (m_l + 2.0)))
}

/// Result of evaluating the placement constraints for one ordered 4-LED
/// subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementValidity {
    pub ok: bool,
    pub violated: Vec<ConstraintTagSer>,
    /// Smallest margin among |a1-1|, |a3-1|, |a1-a3| and the normalized
    /// |xi_2|.
    pub min_margin: f64,
}

/// Serializable mirror of [`ConstraintTag`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintTagSer {
    Alpha1Unity,
    Alpha3Unity,
    Alpha1EqAlpha3,
    Xi2Zero,
    EquidistantPair,
    ParallelPlaneDegenerate,
}

impl From<ConstraintTag> for ConstraintTagSer {
    fn from(t: ConstraintTag) -> Self {
        match t {
            ConstraintTag::Alpha1Unity => ConstraintTagSer::Alpha1Unity,
            ConstraintTag::Alpha3Unity => ConstraintTagSer::Alpha3Unity,
            ConstraintTag::Alpha1EqAlpha3 => ConstraintTagSer::Alpha1EqAlpha3,
            ConstraintTag::Xi2Zero => ConstraintTagSer::Xi2Zero,
            ConstraintTag::EquidistantPair => ConstraintTagSer::EquidistantPair,
            ConstraintTag::ParallelPlaneDegenerate => ConstraintTagSer::ParallelPlaneDegenerate,
        }
    }
}

impl std::fmt::Display for ConstraintTagSer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag: ConstraintTag = match self {
            ConstraintTagSer::Alpha1Unity => ConstraintTag::Alpha1Unity,
            ConstraintTagSer::Alpha3Unity => ConstraintTag::Alpha3Unity,
            ConstraintTagSer::Alpha1EqAlpha3 => ConstraintTag::Alpha1EqAlpha3,
            ConstraintTagSer::Xi2Zero => ConstraintTag::Xi2Zero,
            ConstraintTagSer::EquidistantPair => ConstraintTag::EquidistantPair,
            ConstraintTagSer::ParallelPlaneDegenerate => ConstraintTag::ParallelPlaneDegenerate,
        };
        tag.fmt(f)
    }
}

/// Evaluates the alpha-level constraints with relative tolerance `eps`.
pub fn validate_placement_alphas(
    alphas: &AlphaTriple,
    led_xz: &LedXz,
    eps: f64,
) -> PlacementValidity {
    let mut violated = Vec::new();
    let m1 = (alphas.a1 - 1.0).abs();
    let m3 = (alphas.a3 - 1.0).abs();
    let m13 = (alphas.a1 - alphas.a3).abs() / alphas.a1.abs().max(alphas.a3.abs()).max(1.0);
    if m1 <= eps {
        violated.push(ConstraintTag::Alpha1Unity.into());
    }
    if m3 <= eps {
        violated.push(ConstraintTag::Alpha3Unity.into());
    }
    if m13 <= eps {
        violated.push(ConstraintTag::Alpha1EqAlpha3.into());
    }
    let xis = xi_coefficients(alphas, led_xz);
    let mxi = xis.xi2.abs() / xi2_scale(alphas, led_xz);
    // A collinear subset keeps the planar z equation degenerate even with
    // clean alphas; flag it so the caller routes to the collinear path.
    let collinear = subset_collinear(led_xz);
    if !collinear && mxi <= eps {
        violated.push(ConstraintTag::Xi2Zero.into());
    }
    let min_margin = m1
        .min(m3)
        .min(m13)
        .min(if collinear { f64::MAX } else { mxi });
    PlacementValidity {
        ok: violated.is_empty(),
        violated,
        min_margin,
    }
}

/// Evaluates pairwise distance distinctness: flags any pair of LEDs
/// equidistant from the receiver (within relative `eps`). Meaningful in the
/// parallel-plane configuration, where equal distances make the power
/// ratios collapse.
pub fn validate_placement_distances(distances: &[f64; 4], eps: f64) -> PlacementValidity {
    let mut violated = Vec::new();
    let mut min_margin = f64::MAX;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let scale = distances[i].max(distances[j]).max(1e-300);
            let margin = (distances[i] - distances[j]).abs() / scale;
            min_margin = min_margin.min(margin);
            if margin <= eps {
                violated.push(ConstraintTagSer::EquidistantPair);
            }
        }
    }
    violated.dedup();
    PlacementValidity {
        ok: violated.is_empty(),
        violated,
        min_margin,
    }
}

fn subset_collinear(led_xz: &LedXz) -> bool {
    max_perpendicular_spread(led_xz) < 1e-9
}

fn max_perpendicular_spread(led_xz: &LedXz) -> f64 {
    let p0 = led_xz[0];
    let mut dir = [0.0, 0.0];
    let mut best = 0.0;
    for p in &led_xz[1..] {
        let d = [p[0] - p0[0], p[1] - p0[1]];
        let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if n > best {
            best = n;
            dir = [d[0] / n, d[1] / n];
        }
    }
    if best == 0.0 {
        return 0.0;
    }
    let normal = [-dir[1], dir[0]];
    led_xz
        .iter()
        .map(|p| ((p[0] - p0[0]) * normal[0] + (p[1] - p0[1]) * normal[1]).abs())
        .fold(0.0f64, f64::max)
}

/// A plane-mounted LED group sharing one emission boresight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedGroup {
    pub label: String,
    pub leds: Vec<Led>,
    pub boresight: Vec3,
}

/// Options controlling the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizeOptions {
    pub policy: ModelPolicy,
    /// Relative degeneracy tolerance.
    pub eps: f64,
    /// Receiver position bounds used to discard mirror candidates, as
    /// ((x_min, x_max), (y_min, y_max), (z_min, z_max)).
    pub bounds: Option<[[f64; 2]; 3]>,
}

impl Default for LocalizeOptions {
    fn default() -> Self {
        LocalizeOptions {
            policy: ModelPolicy::default(),
            eps: 1e-6,
            bounds: None,
        }
    }
}

/// Diagnostics attached to a localization estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub validity: PlacementValidity,
    /// Log-power residual of the estimate against every fully-measured
    /// group (lower is better).
    pub residual: f64,
    /// True when the collinear path produced the estimate.
    pub collinear_path: bool,
    /// True when the mirror candidate of a collinear solve was also inside
    /// bounds with an indistinguishable residual.
    pub branch_ambiguous: bool,
    /// Per-LED distance re-estimates from the final y (the optional
    /// refinement pass), as (channel_id, d_hat, geometric_d).
    pub refined_distances: Vec<(u32, f64, f64)>,
}

/// A full localization output.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationEstimate {
    /// Estimated receiver position in world coordinates.
    pub u_hat: Vec3,
    pub alphas: AlphaTriple,
    pub xis: XiCoefficients,
    /// Channel ids of the four LEDs, in solver order.
    pub leds_used: [u32; 4],
    /// Canonical frame of the plane that produced the estimate.
    pub frame: CanonicalFrame,
    pub diagnostics: Diagnostics,
}

struct Candidate {
    score: f64,
    in_bounds: bool,
    estimate: LocalizationEstimate,
}

/// Localizes the receiver from LoS measurements on one or more LED plane
/// groups.
///
/// Group by group, every ordered 4-LED subset whose constraint margins
/// clear `opts.eps` is solved; candidates are scored by their log-power
/// residual against all fully-measured groups (plus a fixed penalty for
/// leaving `opts.bounds`), and the best-scoring candidate wins. Ties fall
/// back to the larger minimum constraint margin and then the larger total
/// received power.
pub fn localize(
    groups: &[(&LedGroup, &[OpticalMeasurement])],
    pd: &PhotoDetector,
    ue_boresight: Option<Vec3>,
    opts: &LocalizeOptions,
) -> Result<LocalizationEstimate> {
    let mut usable: Vec<GroupData> = Vec::new();
    for (group, ms) in groups {
        if let Some(g) = GroupData::build(group, ms, opts)? {
            usable.push(g);
        }
    }
    if usable.is_empty() {
        return Err(Error::NotEnoughMeasurements);
    }

    let mut best: Option<Candidate> = None;
    let mut violations: Vec<String> = Vec::new();

    for g in &usable {
        let model = resolve_model(opts.policy, ue_boresight, g.group.boresight);
        for subset in ordered_subsets(g.leds.len()) {
            match solve_subset(g, &subset, model, pd, opts, &usable) {
                Ok(cands) => {
                    for c in cands {
                        let better = match &best {
                            None => true,
                            Some(b) => (
                                c.in_bounds,
                                -c.score,
                                c.estimate.diagnostics.validity.min_margin,
                            )
                                .partial_cmp(&(
                                    b.in_bounds,
                                    -b.score,
                                    b.estimate.diagnostics.validity.min_margin,
                                ))
                                .map(|o| o == std::cmp::Ordering::Greater)
                                .unwrap_or(false),
                        };
                        if better {
                            best = Some(c);
                        }
                    }
                }
                Err(Error::DegeneratePlacement { tag }) => {
                    violations.push(format!("{}[{:?}]: {}", g.group.label, subset, tag));
                }
                Err(Error::InconsistentMeasurements(m)) => {
                    violations.push(format!("{}[{:?}]: {}", g.group.label, subset, m));
                }
                Err(e) => return Err(e),
            }
        }
    }

    match best {
        Some(b) => Ok(b.estimate),
        None => Err(Error::NoValidSubset {
            summary: if violations.is_empty() {
                "no feasible ordered subset".to_string()
            } else {
                violations.join("; ")
            },
        }),
    }
}

fn resolve_model(
    policy: ModelPolicy,
    ue_boresight: Option<Vec3>,
    plane_boresight: Vec3,
) -> ExponentModel {
    match policy {
        ModelPolicy::Fixed(m) => m,
        ModelPolicy::Auto { parallel_threshold } => match ue_boresight {
            Some(b) => {
                let c = b
                    .normalized()
                    .dot(plane_boresight.normalized())
                    .abs()
                    .min(1.0);
                if c.acos() < parallel_threshold {
                    ExponentModel::Parallel
                } else {
                    ExponentModel::General
                }
            }
            None => ExponentModel::General,
        },
    }
}

struct GroupData<'a> {
    group: &'a LedGroup,
    frame: CanonicalFrame,
    /// LoS LEDs with positive power: (led, measurement, in-plane coords,
    /// normalized power q = P_r / P_o).
    leds: Vec<(&'a Led, &'a OpticalMeasurement, [f64; 2], f64)>,
}

impl<'a> GroupData<'a> {
    fn build(
        group: &'a LedGroup,
        ms: &'a [OpticalMeasurement],
        _opts: &LocalizeOptions,
    ) -> Result<Option<Self>> {
        if group.leds.is_empty() {
            return Ok(None);
        }
        let frame = CanonicalFrame::for_plane(group.boresight, group.leds[0].pose.position);
        let mut rows = Vec::new();
        for led in &group.leds {
            let Some(m) = ms.iter().find(|m| m.led_channel_id == led.channel_id) else {
                continue;
            };
            if !m.has_los || !m.p_r.is_finite() || m.p_r <= 0.0 {
                continue;
            }
            let c = frame.to_canonical(led.pose.position);
            if c.y.abs() > 1e-9 {
                return Err(Error::InvalidScenario(format!(
                    "LED {} is not on the {} plane",
                    led.channel_id, group.label
                )));
            }
            rows.push((led, m, [c.x, c.z], m.p_r / led.optical_power));
        }
        if rows.len() < 4 {
            return Ok(None);
        }
        Ok(Some(GroupData {
            group,
            frame,
            leds: rows,
        }))
    }
}

/// All ordered choices of 4 indices out of n.
fn ordered_subsets(n: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if b == a {
                continue;
            }
            for c in 0..n {
                if c == a || c == b {
                    continue;
                }
                for d in 0..n {
                    if d == a || d == b || d == c {
                        continue;
                    }
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

fn solve_subset(
    g: &GroupData,
    subset: &[usize; 4],
    model: ExponentModel,
    pd: &PhotoDetector,
    opts: &LocalizeOptions,
    all_groups: &[GroupData],
) -> Result<Vec<Candidate>> {
    let rows: Vec<_> = subset.iter().map(|&i| &g.leds[i]).collect();
    let m_l = rows[0].0.lambertian_order;
    let powers = [rows[0].3, rows[1].3, rows[2].3, rows[3].3];
    let led_xz: LedXz = [rows[0].2, rows[1].2, rows[2].2, rows[3].2];
    let alphas = compute_alphas(&powers, m_l, model)?;
    let validity = validate_placement_alphas(&alphas, &led_xz, opts.eps);
    if !validity.ok {
        return Err(Error::DegeneratePlacement {
            tag: ConstraintTag::from_ser(validity.violated[0]),
        });
    }

    let collinear = subset_collinear(&led_xz);
    let canonical_candidates: Vec<Vec3> = if collinear {
        solve_collinear(&led_xz, &powers, m_l, pd, opts.eps)?
    } else {
        vec![solve_planar(&alphas, &led_xz, opts.eps)?]
    };

    let xis = xi_coefficients(&alphas, &led_xz);
    let channel_ids = [
        rows[0].0.channel_id,
        rows[1].0.channel_id,
        rows[2].0.channel_id,
        rows[3].0.channel_id,
    ];
    let total_power: f64 = powers.iter().sum();

    let mut scored: Vec<(Vec3, f64, f64, bool)> = canonical_candidates
        .into_iter()
        .map(|c| {
            let world = g.frame.to_world(c);
            let residual = residual_over_groups(world, all_groups, pd);
            let in_bounds = match opts.bounds {
                Some(b) => {
                    world.x >= b[0][0]
                        && world.x <= b[0][1]
                        && world.y >= b[1][0]
                        && world.y <= b[1][1]
                        && world.z >= b[2][0]
                        && world.z <= b[2][1]
                }
                None => true,
            };
            // out-of-bounds penalty plus a stable tie-break toward larger
            // received power
            let score = residual + if in_bounds { 0.0 } else { 1e3 } - total_power * 1e-12;
            (world, score, residual, in_bounds)
        })
        .collect();
    scored.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let branch_ambiguous = scored.len() == 2
        && scored[0].3
        && scored[1].3
        && (scored[0].1 - scored[1].1).abs() < 1e-12;

    // Only the best-scoring branch of a collinear solve competes; the
    // mirror is kept out so it cannot displace other groups' candidates.
    let mut out = Vec::new();
    if let Some((world, score, residual, in_bounds)) = scored.into_iter().next() {
        let canonical = g.frame.to_canonical(world);
        let refined = rows
            .iter()
            .map(|(led, m, xz, _)| {
                let d_geom = {
                    let dx = canonical.x - xz[0];
                    let dz = canonical.z - xz[1];
                    (dx * dx + canonical.y * canonical.y + dz * dz).sqrt()
                };
                let hypothesized = OpticalMeasurement {
                    arrival_angle: (canonical.y / d_geom).clamp(-1.0, 1.0).acos(),
                    ..**m
                };
                let d_hat =
                    estimate_distance(&hypothesized, led, pd, canonical.y).unwrap_or(f64::NAN);
                (led.channel_id, d_hat, d_geom)
            })
            .collect();
        out.push(Candidate {
            score,
            in_bounds,
            estimate: LocalizationEstimate {
                u_hat: world,
                alphas,
                xis,
                leds_used: channel_ids,
                frame: g.frame,
                diagnostics: Diagnostics {
                    validity: validity.clone(),
                    residual,
                    collinear_path: collinear,
                    branch_ambiguous,
                    refined_distances: refined,
                },
            },
        });
    }
    Ok(out)
}

impl ConstraintTag {
    fn from_ser(s: ConstraintTagSer) -> ConstraintTag {
        match s {
            ConstraintTagSer::Alpha1Unity => ConstraintTag::Alpha1Unity,
            ConstraintTagSer::Alpha3Unity => ConstraintTag::Alpha3Unity,
            ConstraintTagSer::Alpha1EqAlpha3 => ConstraintTag::Alpha1EqAlpha3,
            ConstraintTagSer::Xi2Zero => ConstraintTag::Xi2Zero,
            ConstraintTagSer::EquidistantPair => ConstraintTag::EquidistantPair,
            ConstraintTagSer::ParallelPlaneDegenerate => ConstraintTag::ParallelPlaneDegenerate,
        }
    }
}

/// Sum over groups of the squared log-power misfit of a candidate position
/// under the parallel-arrival hypothesis. Groups seen from behind are
/// heavily penalized.
fn residual_over_groups(world: Vec3, groups: &[GroupData], pd: &PhotoDetector) -> f64 {
    let mut total = 0.0;
    for g in groups {
        let c = g.frame.to_canonical(world);
        if c.y <= 0.0 {
            total += 1e6;
            continue;
        }
        for (led, _m, xz, q) in &g.leds {
            let m_l = led.lambertian_order;
            let dx = c.x - xz[0];
            let dz = c.z - xz[1];
            let d = (dx * dx + c.y * c.y + dz * dz).sqrt();
            let kap = (m_l + 1.0) * pd.area * pd.filter_gain * concentrator_gain_in_fov(pd)
                / (2.0 * std::f64::consts::PI);
            let pred = kap * c.y.powf(m_l + 1.0) / d.powf(m_l + 3.0);
            let r = (pred / q).ln();
            total += r * r;
        }
    }
    total
}

/// Collinear-group solver. Returns up to two canonical-frame candidates
/// (the mirror pair about the LED line), ordered as produced.
fn solve_collinear(
    led_xz: &LedXz,
    powers: &[f64; 4],
    m_l: f64,
    pd: &PhotoDetector,
    eps: f64,
) -> Result<Vec<Vec3>> {
    // Parametrize the line through the LEDs.
    let p0 = led_xz[0];
    let mut dir = [0.0, 0.0];
    let mut best = 0.0;
    for p in &led_xz[1..] {
        let d = [p[0] - p0[0], p[1] - p0[1]];
        let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if n > best {
            best = n;
            dir = [d[0] / n, d[1] / n];
        }
    }
    if best == 0.0 {
        return Err(Error::DegeneratePlacement {
            tag: ConstraintTag::ParallelPlaneDegenerate,
        });
    }
    let normal = [-dir[1], dir[0]];
    let s: Vec<f64> = led_xz
        .iter()
        .map(|p| (p[0] - p0[0]) * dir[0] + (p[1] - p0[1]) * dir[1])
        .collect();

    // alpha_j relations reduce to A_j (t^2 + w) + B_j t + C_j = 0 along the
    // line, with w the squared distance to it.
    let e = 2.0 / (m_l + 3.0);
    let a: Vec<f64> = (1..4).map(|j| (powers[j] / powers[0]).powf(e)).collect();
    let aa: Vec<f64> = a.iter().map(|aj| 1.0 - aj).collect();
    let bb: Vec<f64> = a
        .iter()
        .enumerate()
        .map(|(j, aj)| -2.0 * (s[0] - aj * s[j + 1]))
        .collect();
    let cc: Vec<f64> = a
        .iter()
        .enumerate()
        .map(|(j, aj)| s[0] * s[0] - aj * s[j + 1] * s[j + 1])
        .collect();

    let det = aa[1] * bb[0] - aa[0] * bb[1];
    let det_scale = (aa[1] * bb[0]).abs().max((aa[0] * bb[1]).abs()).max(1e-300);
    if det.abs() <= eps * det_scale || aa[0].abs() <= eps {
        return Err(Error::DegeneratePlacement {
            tag: ConstraintTag::ParallelPlaneDegenerate,
        });
    }
    let t = (aa[0] * cc[1] - aa[1] * cc[0]) / det;
    let mut w_sum = 0.0;
    let mut w_n = 0;
    for j in 0..3 {
        if aa[j].abs() > eps {
            w_sum += (-bb[j] * t - cc[j]) / aa[j] - t * t;
            w_n += 1;
        }
    }
    let w = w_sum / w_n as f64;
    if w <= 0.0 {
        return Err(Error::InconsistentMeasurements(
            "non-positive squared distance to the LED line",
        ));
    }

    // Split w into perpendicular height and in-line offset via the
    // absolute power of the reference LED under the parallel-arrival
    // hypothesis.
    let d1 = ((t - s[0]) * (t - s[0]) + w).sqrt();
    let kap = (m_l + 1.0) * pd.area * pd.filter_gain * concentrator_gain_in_fov(pd)
        / (2.0 * std::f64::consts::PI);
    let y = (powers[0] * d1.powf(m_l + 3.0) / kap).powf(1.0 / (m_l + 1.0));
    let y = y.min(w.sqrt());
    let o = (w - y * y).max(0.0).sqrt();

    let mut cands = Vec::with_capacity(2);
    for sign in [1.0, -1.0] {
        let px = p0[0] + t * dir[0] + sign * o * normal[0];
        let pz = p0[1] + t * dir[1] + sign * o * normal[1];
        cands.push(Vec3::new(px, y, pz));
        if o == 0.0 {
            break;
        }
    }
    Ok(cands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;

    const LERIS_XZ: LedXz = [[4.1, 1.5], [4.7, 1.5], [5.3, 1.5], [5.9, 1.5]];

    fn exact_alphas(ue: [f64; 3], led_xz: &LedXz) -> AlphaTriple {
        let d2 = |p: [f64; 2]| {
            let dx = ue[0] - p[0];
            let dz = ue[2] - p[1];
            dx * dx + ue[1] * ue[1] + dz * dz
        };
        AlphaTriple {
            a1: d2(led_xz[0]) / d2(led_xz[1]),
            a2: d2(led_xz[0]) / d2(led_xz[2]),
            a3: d2(led_xz[0]) / d2(led_xz[3]),
            model: ExponentModel::Parallel,
        }
    }

    #[test]
    fn alphas_from_power_ratio() {
        let powers = [1.0, 8.0, 1.0, 1.0];
        let g = compute_alphas(&powers, 1.0, ExponentModel::General).unwrap();
        assert!((g.a1 - 8.0).abs() < 1e-12);
        let p = compute_alphas(&powers, 1.0, ExponentModel::Parallel).unwrap();
        assert!((p.a1 - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn alphas_reject_nonpositive_power() {
        assert!(compute_alphas(&[1.0, 0.0, 1.0, 1.0], 1.0, ExponentModel::General).is_err());
    }

    #[test]
    fn equal_powers_flagged() {
        let a = compute_alphas(&[1.0; 4], 2.0, ExponentModel::General).unwrap();
        let v = validate_placement_alphas(&a, &LERIS_XZ, 1e-6);
        assert!(!v.ok);
        assert!(v.violated.contains(&ConstraintTagSer::Alpha1Unity));
    }

    #[test]
    fn solve_y_recovers_known_point() {
        // UE at (5, 2.5, 1.5) against the wall-strip LEDs; the first
        // relation alone returns y given the true in-plane coordinates.
        let a = exact_alphas([5.0, 2.5, 1.5], &LERIS_XZ);
        let y = solve_y(5.0, 1.5, &a, &LERIS_XZ, 1e-9).unwrap();
        assert!((y - 2.5).abs() < 1e-9);
    }

    #[test]
    fn solve_y_guards_alpha1_unity() {
        let mut a = exact_alphas([5.0, 2.5, 1.5], &LERIS_XZ);
        a.a1 = 1.0;
        assert!(matches!(
            solve_y(5.0, 1.5, &a, &LERIS_XZ, 1e-9),
            Err(Error::DegeneratePlacement {
                tag: ConstraintTag::Alpha1Unity
            })
        ));
    }

    #[test]
    fn planar_chain_exact_inversion() {
        let led_xz: LedXz = [[-1.2, 0.3], [0.8, -0.9], [1.7, 1.1], [-0.4, 2.0]];
        let ue = [0.45, 1.8, 0.75];
        let a = exact_alphas(ue, &led_xz);
        let v = solve_planar(&a, &led_xz, 1e-9).unwrap();
        assert!((v.x - ue[0]).abs() < 1e-9);
        assert!((v.y - ue[1]).abs() < 1e-9);
        assert!((v.z - ue[2]).abs() < 1e-9);
    }

    #[test]
    fn xi_homogeneity_under_scaling() {
        let led_xz: LedXz = [[-1.2, 0.3], [0.8, -0.9], [1.7, 1.1], [-0.4, 2.0]];
        let ue = [0.45, 1.8, 0.75];
        let a = exact_alphas(ue, &led_xz);
        let xis = xi_coefficients(&a, &led_xz);
        let scaled: LedXz = led_xz.map(|p| [2.0 * p[0], 2.0 * p[1]]);
        let ue2 = [2.0 * ue[0], 2.0 * ue[1], 2.0 * ue[2]];
        let a2 = exact_alphas(ue2, &scaled);
        let xis2 = xi_coefficients(&a2, &scaled);
        assert!((xis2.xi1 - 2.0 * xis.xi1).abs() < 1e-9 * xis.xi1.abs().max(1.0));
        assert!((xis2.xi2 - 2.0 * xis.xi2).abs() < 1e-9 * xis.xi2.abs().max(1.0));
        assert!((xis2.xi3 - 4.0 * xis.xi3).abs() < 1e-9 * xis.xi3.abs().max(1.0));
        let v = solve_planar(&a2, &scaled, 1e-9).unwrap();
        assert!((v.x - ue2[0]).abs() < 1e-8);
    }

    #[test]
    fn shared_x_leds_swap_axes() {
        // First three LEDs share x, so xi_2 = 0 and the solver must shift
        // the constraint to the z coordinate.
        let led_xz: LedXz = [[1.0, -1.0], [1.0, 0.4], [1.0, 1.3], [2.5, 2.0]];
        let ue = [0.3, 2.2, 0.9];
        let a = exact_alphas(ue, &led_xz);
        assert!(matches!(
            solve_x(ue[2], &a, &led_xz, 1e-9),
            Err(Error::DegeneratePlacement {
                tag: ConstraintTag::Xi2Zero
            })
        ));
        let v = solve_planar(&a, &led_xz, 1e-9).unwrap();
        assert!((v.x - ue[0]).abs() < 1e-8);
        assert!((v.z - ue[2]).abs() < 1e-8);
    }

    #[test]
    fn solve_z_guards() {
        let led_xz: LedXz = [[-1.2, 0.3], [0.8, -0.9], [1.7, 1.1], [-0.4, 2.0]];
        let ue = [0.45, 1.8, 0.75];
        let mut a = exact_alphas(ue, &led_xz);
        let xis = xi_coefficients(&a, &led_xz);
        let good_a3 = a.a3;
        a.a3 = 1.0;
        assert!(matches!(
            solve_z(&a, &xis, &led_xz, 1e-9),
            Err(Error::DegeneratePlacement {
                tag: ConstraintTag::Alpha3Unity
            })
        ));
        a.a3 = a.a1;
        assert!(matches!(
            solve_z(&a, &xis, &led_xz, 1e-9),
            Err(Error::DegeneratePlacement {
                tag: ConstraintTag::Alpha1EqAlpha3
            })
        ));
        a.a3 = good_a3;
        assert!(solve_z(&a, &xis, &led_xz, 1e-9).is_ok());
    }

    #[test]
    fn solve_z_collinear_group_degenerates() {
        // All LEDs at one height: the rational z form is 0/0 and must be
        // reported as a degeneracy, not evaluated.
        let a = exact_alphas([4.3, 2.5, 1.2], &LERIS_XZ);
        let xis = xi_coefficients(&a, &LERIS_XZ);
        assert!(matches!(
            solve_z(&a, &xis, &LERIS_XZ, 1e-9),
            Err(Error::DegeneratePlacement {
                tag: ConstraintTag::ParallelPlaneDegenerate
            })
        ));
    }

    #[test]
    fn distance_validity_examples() {
        let d = |ue: [f64; 3], p: [f64; 2]| {
            let dx = ue[0] - p[0];
            let dz = ue[2] - p[1];
            (dx * dx + ue[1] * ue[1] + dz * dz).sqrt()
        };
        let at = |ue: [f64; 3]| {
            let ds = [
                d(ue, LERIS_XZ[0]),
                d(ue, LERIS_XZ[1]),
                d(ue, LERIS_XZ[2]),
                d(ue, LERIS_XZ[3]),
            ];
            validate_placement_distances(&ds, 1e-6)
        };
        assert!(!at([5.0, 2.5, 1.5]).ok); // symmetric about x = 5
        assert!(at([4.0, 2.5, 1.5]).ok);
    }

    #[test]
    fn error_model_examples() {
        assert_eq!(localization_error_model(2.0, f64::INFINITY, 0.0, 2.0), 0.0);
        let dd = localization_error_model(2.0, 100.0, 0.0, 2.0);
        assert!((dd - 2.0 * (1.0 - (1.0f64 / 1.01).powf(0.25))).abs() < 1e-15);
        assert!((dd - 4.97e-3).abs() < 2e-5);
        // monotone decreasing in K
        let mut prev = f64::MAX;
        for k in [10.0, 50.0, 100.0, 1000.0] {
            let v = localization_error_model(2.0, k, 0.0, 2.0);
            assert!(v < prev);
            prev = v;
        }
    }

    fn table_pd(position: Vec3, boresight: Vec3) -> PhotoDetector {
        PhotoDetector {
            pose: Pose::new(position, boresight),
            area: 1e-4,
            filter_gain: 1.0,
            refractive_index: 1.5,
            half_fov: 75f64.to_radians(),
            noise_power: 0.0,
        }
    }

    fn leris_group() -> LedGroup {
        let leds = [4.1, 4.7, 5.3, 5.9]
            .iter()
            .enumerate()
            .map(|(i, &x)| Led {
                pose: Pose::new(Vec3::new(x, 0.0, 1.5), Vec3::new(0.0, 1.0, 0.0)),
                optical_power: 0.05,
                lambertian_order: 2.0,
                channel_id: 5 + i as u32,
            })
            .collect();
        LedGroup {
            label: "leris".into(),
            leds,
            boresight: Vec3::new(0.0, 1.0, 0.0),
        }
    }

    fn measure_group(group: &LedGroup, pd: &PhotoDetector) -> Vec<OpticalMeasurement> {
        use crate::optics::{synthesize_measurement, NlosMode, NoiseMode};
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        group
            .leds
            .iter()
            .map(|led| {
                synthesize_measurement(
                    led,
                    pd,
                    &NlosMode::KRatio {
                        k_pwe: f64::INFINITY,
                        jitter_sigma: None,
                    },
                    NoiseMode::Fixed,
                    &mut rng,
                )
            })
            .collect()
    }

    #[test]
    fn localize_collinear_group_noise_free_exact() {
        // Receiver at wall-strip height facing the wall squarely: the
        // collinear path recovers the position exactly, including the
        // z coordinate the planar chain cannot produce for this geometry.
        let group = leris_group();
        let truth = Vec3::new(4.3, 2.5, 1.5);
        let pd = table_pd(truth, Vec3::new(0.0, -1.0, 0.0));
        let ms = measure_group(&group, &pd);
        let opts = LocalizeOptions {
            bounds: Some([[0.0, 10.0], [0.5, 5.0], [0.5, 2.5]]),
            ..LocalizeOptions::default()
        };
        let est = localize(
            &[(&group, ms.as_slice())],
            &pd,
            Some(Vec3::new(0.0, -1.0, 0.0)),
            &opts,
        )
        .unwrap();
        assert!(crate::geometry::distance(est.u_hat, truth) < 1e-6);
        assert!(est.diagnostics.collinear_path);
        assert!((est.u_hat.z - 1.5).abs() < 1e-6);
    }

    #[test]
    fn localize_rejects_symmetric_position() {
        // x = 5 puts LED pairs (1,4) and (2,3) at equal distances; no
        // ordered subset satisfies the constraints in the parallel pose.
        let group = leris_group();
        let truth = Vec3::new(5.0, 2.5, 1.5);
        let pd = table_pd(truth, Vec3::new(0.0, -1.0, 0.0));
        let ms = measure_group(&group, &pd);
        let err = localize(
            &[(&group, ms.as_slice())],
            &pd,
            Some(Vec3::new(0.0, -1.0, 0.0)),
            &LocalizeOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoValidSubset { .. }));
    }

    #[test]
    fn localize_needs_four_los() {
        let group = leris_group();
        let truth = Vec3::new(4.3, 2.5, 1.5);
        let pd = table_pd(truth, Vec3::new(0.0, -1.0, 0.0));
        let ms = measure_group(&group, &pd);
        let err = localize(
            &[(&group, &ms[..3])],
            &pd,
            None,
            &LocalizeOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotEnoughMeasurements));
    }

    #[test]
    fn estimate_distance_examples() {
        // Noise-free: the inversion returns the true distance.
        let led = Led {
            pose: Pose::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)),
            optical_power: 0.05,
            lambertian_order: 2.0,
            channel_id: 1,
        };
        let truth = Vec3::new(0.0, 2.0, 0.0);
        let pd = table_pd(truth, Vec3::new(0.0, -1.0, 0.0));
        let ms = {
            use crate::optics::{synthesize_measurement, NlosMode, NoiseMode};
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
            synthesize_measurement(
                &led,
                &pd,
                &NlosMode::KRatio {
                    k_pwe: f64::INFINITY,
                    jitter_sigma: None,
                },
                NoiseMode::Fixed,
                &mut rng,
            )
        };
        let d = estimate_distance(&ms, &led, &pd, 2.0).unwrap();
        assert!((d - 2.0).abs() / 2.0 < 1e-9);

        // Doubling the received power scales d by 2^(-1/(m+2)).
        let mut doubled = ms;
        doubled.p_r *= 2.0;
        let d2 = estimate_distance(&doubled, &led, &pd, 2.0).unwrap();
        assert!((d2 / d - 2f64.powf(-0.25)).abs() < 1e-12);

        // Error paths.
        let mut bad = ms;
        bad.p_r = 0.0;
        assert!(matches!(
            estimate_distance(&bad, &led, &pd, 2.0),
            Err(Error::NonPositivePower(_))
        ));
        let mut out = ms;
        out.arrival_angle = 80f64.to_radians();
        assert!(matches!(
            estimate_distance(&out, &led, &pd, 2.0),
            Err(Error::OutOfFov)
        ));
    }

    #[test]
    fn guards_never_return_non_finite() {
        // Near-degenerate alphas either error with a tag or produce finite
        // coordinates; never NaN or infinity.
        let led_xz: LedXz = [[-1.0, 0.0], [1.0, 0.1], [0.5, 1.2], [-0.7, 0.9]];
        for i in 0..2000 {
            let t = i as f64 / 2000.0;
            let a = AlphaTriple {
                a1: 1.0 + (t - 0.5) * 1e-5,
                a2: 1.3,
                a3: 1.0 + (t - 0.5) * 1e-5 + 1e-9,
                model: ExponentModel::General,
            };
            match solve_planar(&a, &led_xz, 1e-6) {
                Ok(v) => {
                    assert!(v.x.is_finite() && v.y.is_finite() && v.z.is_finite());
                }
                Err(Error::DegeneratePlacement { .. })
                | Err(Error::InconsistentMeasurements(_)) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }
}
