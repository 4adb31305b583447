//! RIS far-field synthesis and link budget: element phases, steering
//! profiles with Von Mises hardware imperfection, hemispherical gain
//! normalization, effective area, path loss, and spectral efficiency.
//!
//! The scattered far field is F(theta, phi) = sum_mn exp(j(k0 zeta_mn +
//! omega_mn + Phi_mn)). zeta and omega are evaluated with the panel's
//! actual element positions (center plus any mounting offset), while the
//! steering profile Phi is built from the center the configurator assumes;
//! the mismatch is exactly how position uncertainty degrades the realized
//! pattern. omega's printed form embeds the radiation-direction angles, so
//! profiles substitute the steering angles there and pattern evaluation
//! substitutes the evaluation angles.
//!
//! Both the phase-path term of zeta and omega depend on the element indices
//! only through m and n separately (omega through m alone), so the
//! noise-free field factorizes into an O(M+N) product per direction; with
//! per-element phase noise the evaluation falls back to the full O(MN) sum
//! arranged as a matrix-vector product with precomputed noise phasors.

use crate::error::{Error, Result};
use crate::geometry::{SteeringAngles, Vec3};
use crate::numeric::pairwise_sum;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Reconfigurable panel of M x N square elements on the y = 0 wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisPanel {
    pub rows: usize,
    pub cols: usize,
    /// Element side length D, meters.
    pub element_side: f64,
    /// Center the configurator assumes, (x_c, 0, z_c).
    pub center: Vec3,
    /// Aperture efficiency in (0, 1].
    pub efficiency: f64,
    /// Per-element gain G_e.
    pub element_gain: f64,
    /// Von Mises concentration of the per-element phase error; `None`
    /// disables hardware noise entirely (the ideal-phase switch), while
    /// `Some(0.0)` draws uniformly random phases.
    pub kappa_hw: Option<f64>,
    /// Actual-minus-assumed center displacement. Only the x and z
    /// components enter the phase expressions (the panel plane is x-z).
    pub position_offset: Vec3,
}

impl RisPanel {
    pub fn element_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Center used when evaluating the realized pattern.
    pub fn actual_center(&self) -> Vec3 {
        self.center + self.position_offset
    }
}

/// Relative phase-path term zeta_mn(theta, phi) in meters, evaluated at the
/// panel's actual center. `m`, `n` are 1-based.
pub fn zeta(m: usize, n: usize, theta: f64, phi: f64, panel: &RisPanel) -> f64 {
    let c = panel.actual_center();
    zeta_at(m, n, theta, phi, panel.element_side, c.x, c.z)
}

fn zeta_at(m: usize, n: usize, theta: f64, phi: f64, d: f64, x_c: f64, z_c: f64) -> f64 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    d * st * ((m as f64 - 0.5) * cp + (n as f64 - 0.5) * sp) + x_c * st * cp + z_c * ct
}

/// Impinging phase omega_mn in radians for the given direction angles,
/// evaluated at the center the configurator assumes. Depends on the row
/// index only.
pub fn omega(
    m: usize,
    _n: usize,
    ap_position: Vec3,
    panel: &RisPanel,
    angles: SteeringAngles,
    lambda: f64,
) -> f64 {
    omega_at(
        m,
        ap_position,
        panel.element_side,
        panel.center.x,
        panel.center.z,
        angles.theta,
        angles.phi,
        lambda,
    )
}

#[allow(clippy::too_many_arguments)]
fn omega_at(
    m: usize,
    ap: Vec3,
    d: f64,
    x_c: f64,
    z_c: f64,
    theta: f64,
    phi: f64,
    lambda: f64,
) -> f64 {
    let k0 = 2.0 * PI / lambda;
    let (st, _) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let off = d * (m as f64 - 0.5) * st;
    let ax = ap.x - off * cp - x_c;
    let az = ap.z - off * sp - z_c;
    k0 * (ax * ax + ap.y * ap.y + az * az).sqrt()
}

/// Per-element phase configuration for one steering command.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    rows: usize,
    cols: usize,
    lambda: f64,
    steer: SteeringAngles,
    /// Row part of the steering phase: -k0 D m cos(phi) sin(theta) -
    /// omega_m(steer, assumed center).
    p_m: Vec<f64>,
    /// Column part: -k0 D n sin(phi) sin(theta).
    q_n: Vec<f64>,
    /// Von Mises hardware error theta~_mn, row-major; `None` when the
    /// panel's hardware noise switch is off.
    hw_noise: Vec<f64>,
    has_noise: bool,
    /// exp(-j theta~_mn), precomputed for the full-sum path.
    noise_phasors: Vec<Complex64>,
}

impl PhaseProfile {
    pub fn steer(&self) -> SteeringAngles {
        self.steer
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Materializes Phi_mn (row-major, wrapped into (-pi, pi]).
    pub fn phases(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for m in 0..self.rows {
            for n in 0..self.cols {
                let noise = if self.has_noise {
                    self.hw_noise[m * self.cols + n]
                } else {
                    0.0
                };
                out.push(wrap_angle(self.p_m[m] + self.q_n[n] - noise));
            }
        }
        out
    }
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = a.rem_euclid(two_pi);
    if r > PI {
        r -= two_pi;
    }
    r
}

/// Draws one Von Mises(mu, kappa) sample by the Best-Fisher rejection
/// method. kappa = 0 short-circuits to the uniform distribution on
/// [-pi, pi).
pub fn sample_von_mises<R: Rng + ?Sized>(mu: f64, kappa: f64, rng: &mut R) -> f64 {
    if kappa <= 1e-12 {
        return wrap_angle(mu + rng.gen_range(-PI..PI));
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.gen();
            let angle = if u3 > 0.5 { f.acos() } else { -f.acos() };
            return wrap_angle(mu + angle);
        }
    }
}

/// Builds the steering phase profile for an estimated direction, drawing
/// independent Von Mises hardware errors per element when the panel's
/// noise switch is on. omega is taken at the steering angles and the
/// assumed center, since the configurator subtracts the impinging phase it
/// believes in.
pub fn steering_profile<R: Rng + ?Sized>(
    steer: SteeringAngles,
    panel: &RisPanel,
    ap_position: Vec3,
    lambda: f64,
    rng: &mut R,
) -> PhaseProfile {
    let k0 = 2.0 * PI / lambda;
    let (st, _) = steer.theta.sin_cos();
    let (sp, cp) = steer.phi.sin_cos();
    let p_m = (1..=panel.rows)
        .map(|m| {
            -k0 * panel.element_side * m as f64 * cp * st
                - omega_at(
                    m,
                    ap_position,
                    panel.element_side,
                    panel.center.x,
                    panel.center.z,
                    steer.theta,
                    steer.phi,
                    lambda,
                )
        })
        .collect();
    let q_n = (1..=panel.cols)
        .map(|n| -k0 * panel.element_side * n as f64 * sp * st)
        .collect();
    let (hw_noise, noise_phasors, has_noise) = match panel.kappa_hw {
        Some(kappa) => {
            let noise: Vec<f64> = (0..panel.element_count())
                .map(|_| sample_von_mises(0.0, kappa, rng))
                .collect();
            let phasors = noise
                .iter()
                .map(|&t| Complex64::from_polar(1.0, -t))
                .collect();
            (noise, phasors, true)
        }
        None => (Vec::new(), Vec::new(), false),
    };
    PhaseProfile {
        rows: panel.rows,
        cols: panel.cols,
        lambda,
        steer,
        p_m,
        q_n,
        hw_noise,
        noise_phasors,
        has_noise,
    }
}

/// A uniformly random phase profile (the diffusing fallback configuration).
pub fn diffuse_profile<R: Rng + ?Sized>(
    panel: &RisPanel,
    lambda: f64,
    rng: &mut R,
) -> PhaseProfile {
    let noise: Vec<f64> = (0..panel.element_count())
        .map(|_| rng.gen_range(-PI..PI))
        .collect();
    let noise_phasors = noise
        .iter()
        .map(|&t| Complex64::from_polar(1.0, -t))
        .collect();
    PhaseProfile {
        rows: panel.rows,
        cols: panel.cols,
        lambda,
        steer: SteeringAngles {
            theta: 0.0,
            phi: 0.0,
        },
        p_m: vec![0.0; panel.rows],
        q_n: vec![0.0; panel.cols],
        hw_noise: noise,
        noise_phasors,
        has_noise: true,
    }
}

/// Scattered far-field amplitude F(theta, phi) for a configured panel.
pub fn far_field(
    theta: f64,
    phi: f64,
    profile: &PhaseProfile,
    panel: &RisPanel,
    ap_position: Vec3,
) -> Complex64 {
    let (re, im, common) = field_parts(theta, phi, profile, panel, ap_position);
    Complex64::from_polar(1.0, common) * Complex64::new(re, im)
}

/// |F(theta, phi)|^2, skipping the global phase.
pub fn far_field_power(
    theta: f64,
    phi: f64,
    profile: &PhaseProfile,
    panel: &RisPanel,
    ap_position: Vec3,
) -> f64 {
    let (re, im, _) = field_parts(theta, phi, profile, panel, ap_position);
    re * re + im * im
}

fn field_parts(
    theta: f64,
    phi: f64,
    profile: &PhaseProfile,
    panel: &RisPanel,
    ap_position: Vec3,
) -> (f64, f64, f64) {
    let k0 = 2.0 * PI / profile.lambda;
    let d = panel.element_side;
    let c = panel.actual_center();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let common = k0 * (c.x * st * cp + c.z * ct);

    // a_m = k0 D (m - 1/2) sin(theta) cos(phi) + omega_m(theta, phi) + p_m
    let mut u: Vec<Complex64> = Vec::with_capacity(panel.rows);
    for m in 1..=panel.rows {
        let a = k0 * d * (m as f64 - 0.5) * st * cp
            + omega_at(m, ap_position, d, c.x, c.z, theta, phi, profile.lambda)
            + profile.p_m[m - 1];
        u.push(Complex64::from_polar(1.0, a));
    }
    // b_n = k0 D (n - 1/2) sin(theta) sin(phi) + q_n
    let mut v: Vec<Complex64> = Vec::with_capacity(panel.cols);
    for n in 1..=panel.cols {
        let b = k0 * d * (n as f64 - 0.5) * st * sp + profile.q_n[n - 1];
        v.push(Complex64::from_polar(1.0, b));
    }

    if !profile.has_noise {
        let su: Complex64 = u.iter().sum();
        let sv: Complex64 = v.iter().sum();
        let f = su * sv;
        return (f.re, f.im, common);
    }

    // Full sum with per-element noise phasors: u^T (W v).
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, um) in u.iter().enumerate() {
        let row = &profile.noise_phasors[m * panel.cols..(m + 1) * panel.cols];
        let mut rowsum = Complex64::new(0.0, 0.0);
        for (w, vn) in row.iter().zip(v.iter()) {
            rowsum += w * vn;
        }
        acc += um * rowsum;
    }
    (acc.re, acc.im, common)
}

/// Quadrature configuration for the hemispherical normalization integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Grid step, radians (default 0.5 degrees in theta and phi).
    pub step: f64,
    /// Gauss-Legendre node count in theta; midpoint rule when `None`.
    pub gauss_legendre_theta: Option<usize>,
    /// When set, the integral is recomputed at half the step and the two
    /// values must agree within `tolerance`.
    pub check_convergence: bool,
    /// Relative agreement required by the halving check.
    pub tolerance: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            step: 0.5f64.to_radians(),
            gauss_legendre_theta: None,
            check_convergence: false,
            tolerance: 0.005,
        }
    }
}

fn denominator_once(
    profile: &PhaseProfile,
    panel: &RisPanel,
    ap: Vec3,
    step: f64,
    gl_theta: Option<usize>,
) -> f64 {
    let n_phi = (2.0 * PI / step).round().max(1.0) as usize;
    let h_phi = 2.0 * PI / n_phi as f64;
    let theta_nodes: Vec<(f64, f64)> = match gl_theta {
        Some(n) => crate::numeric::gauss_legendre(n, 0.0, PI / 2.0),
        None => {
            let n_theta = (PI / 2.0 / step).round().max(1.0) as usize;
            let h_theta = PI / 2.0 / n_theta as f64;
            (0..n_theta)
                .map(|i| ((i as f64 + 0.5) * h_theta, h_theta))
                .collect()
        }
    };
    let rows: Vec<f64> = theta_nodes
        .par_iter()
        .map(|&(theta, w_theta)| {
            let mut cells = Vec::with_capacity(n_phi);
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * h_phi;
                cells.push(far_field_power(theta, phi, profile, panel, ap));
            }
            pairwise_sum(&cells) * theta.sin() * w_theta * h_phi
        })
        .collect();
    pairwise_sum(&rows)
}

/// Precomputed per-direction element phasors over the quadrature grid for
/// one (panel, AP, wavelength, step) combination.
///
/// The profile-independent parts of the element phases (the zeta element
/// terms and omega) are evaluated once; each profile's denominator is then
/// a pair of short complex dot products per grid point. Reused across all
/// trials of a sweep point.
pub struct FieldGrid {
    rows: usize,
    cols: usize,
    n_theta: usize,
    n_phi: usize,
    h_theta: f64,
    h_phi: f64,
    /// exp(j(k0 D (m-1/2) sin(t) cos(p) + omega_m(t, p))) per point, m-major
    /// within each point.
    a_re: Vec<f64>,
    a_im: Vec<f64>,
    /// exp(j k0 D (n-1/2) sin(t) sin(p)) per point.
    b_re: Vec<f64>,
    b_im: Vec<f64>,
}

impl FieldGrid {
    pub fn build(panel: &RisPanel, ap: Vec3, lambda: f64, step: f64) -> FieldGrid {
        let n_phi = (2.0 * PI / step).round().max(1.0) as usize;
        let h_phi = 2.0 * PI / n_phi as f64;
        let n_theta = (PI / 2.0 / step).round().max(1.0) as usize;
        let h_theta = PI / 2.0 / n_theta as f64;
        let (rows, cols) = (panel.rows, panel.cols);
        let k0 = 2.0 * PI / lambda;
        let d = panel.element_side;
        let c = panel.actual_center();
        let points = n_theta * n_phi;
        let mut a_re = vec![0.0; points * rows];
        let mut a_im = vec![0.0; points * rows];
        let mut b_re = vec![0.0; points * cols];
        let mut b_im = vec![0.0; points * cols];

        a_re.par_chunks_mut(n_phi * rows)
            .zip(a_im.par_chunks_mut(n_phi * rows))
            .zip(b_re.par_chunks_mut(n_phi * cols))
            .zip(b_im.par_chunks_mut(n_phi * cols))
            .enumerate()
            .for_each(|(i, (((are, aim), bre), bim))| {
                let theta = (i as f64 + 0.5) * h_theta;
                let (st, _) = theta.sin_cos();
                for j in 0..n_phi {
                    let phi = (j as f64 + 0.5) * h_phi;
                    let (sp, cp) = phi.sin_cos();
                    for m in 1..=rows {
                        let a = k0 * d * (m as f64 - 0.5) * st * cp
                            + omega_at(m, ap, d, c.x, c.z, theta, phi, lambda);
                        let (s, co) = a.sin_cos();
                        are[j * rows + m - 1] = co;
                        aim[j * rows + m - 1] = s;
                    }
                    for n in 1..=cols {
                        let b = k0 * d * (n as f64 - 0.5) * st * sp;
                        let (s, co) = b.sin_cos();
                        bre[j * cols + n - 1] = co;
                        bim[j * cols + n - 1] = s;
                    }
                }
            });
        FieldGrid {
            rows,
            cols,
            n_theta,
            n_phi,
            h_theta,
            h_phi,
            a_re,
            a_im,
            b_re,
            b_im,
        }
    }

    /// Hemispherical integral of |F|^2 sin(theta) for one profile.
    pub fn denominator(&self, profile: &PhaseProfile) -> f64 {
        assert_eq!(profile.rows, self.rows);
        assert_eq!(profile.cols, self.cols);
        let (rows, cols) = (self.rows, self.cols);
        let p: Vec<(f64, f64)> = profile
            .p_m
            .iter()
            .map(|&a| {
                let (s, c) = a.sin_cos();
                (c, s)
            })
            .collect();
        let q: Vec<(f64, f64)> = profile
            .q_n
            .iter()
            .map(|&a| {
                let (s, c) = a.sin_cos();
                (c, s)
            })
            .collect();
        let noise: Option<(Vec<f64>, Vec<f64>)> = profile.has_noise.then(|| {
            (
                profile.noise_phasors.iter().map(|z| z.re).collect(),
                profile.noise_phasors.iter().map(|z| z.im).collect(),
            )
        });

        let row_sums: Vec<f64> = (0..self.n_theta)
            .into_par_iter()
            .map(|i| {
                let theta = (i as f64 + 0.5) * self.h_theta;
                let arow = &self.a_re[i * self.n_phi * rows..(i + 1) * self.n_phi * rows];
                let airow = &self.a_im[i * self.n_phi * rows..(i + 1) * self.n_phi * rows];
                let brow = &self.b_re[i * self.n_phi * cols..(i + 1) * self.n_phi * cols];
                let birow = &self.b_im[i * self.n_phi * cols..(i + 1) * self.n_phi * cols];
                let mut cells = Vec::with_capacity(self.n_phi);
                let mut u_re = vec![0.0; rows];
                let mut u_im = vec![0.0; rows];
                let mut v_re = vec![0.0; cols];
                let mut v_im = vec![0.0; cols];
                for j in 0..self.n_phi {
                    let ar = &arow[j * rows..(j + 1) * rows];
                    let ai = &airow[j * rows..(j + 1) * rows];
                    let br = &brow[j * cols..(j + 1) * cols];
                    let bi = &birow[j * cols..(j + 1) * cols];
                    match &noise {
                        None => {
                            // |sum_m A_m P_m|^2 * |sum_n B_n Q_n|^2
                            let (mut sur, mut sui) = (0.0, 0.0);
                            for m in 0..rows {
                                sur += ar[m] * p[m].0 - ai[m] * p[m].1;
                                sui += ar[m] * p[m].1 + ai[m] * p[m].0;
                            }
                            let (mut svr, mut svi) = (0.0, 0.0);
                            for n in 0..cols {
                                svr += br[n] * q[n].0 - bi[n] * q[n].1;
                                svi += br[n] * q[n].1 + bi[n] * q[n].0;
                            }
                            cells.push((sur * sur + sui * sui) * (svr * svr + svi * svi));
                        }
                        Some((wr, wi)) => {
                            for m in 0..rows {
                                u_re[m] = ar[m] * p[m].0 - ai[m] * p[m].1;
                                u_im[m] = ar[m] * p[m].1 + ai[m] * p[m].0;
                            }
                            for n in 0..cols {
                                v_re[n] = br[n] * q[n].0 - bi[n] * q[n].1;
                                v_im[n] = br[n] * q[n].1 + bi[n] * q[n].0;
                            }
                            let (mut fr, mut fi) = (0.0, 0.0);
                            for m in 0..rows {
                                let wr_row = &wr[m * cols..(m + 1) * cols];
                                let wi_row = &wi[m * cols..(m + 1) * cols];
                                let (mut rr, mut ri) = (0.0, 0.0);
                                for n in 0..cols {
                                    rr += wr_row[n] * v_re[n] - wi_row[n] * v_im[n];
                                    ri += wr_row[n] * v_im[n] + wi_row[n] * v_re[n];
                                }
                                fr += u_re[m] * rr - u_im[m] * ri;
                                fi += u_re[m] * ri + u_im[m] * rr;
                            }
                            cells.push(fr * fr + fi * fi);
                        }
                    }
                }
                pairwise_sum(&cells) * theta.sin() * self.h_theta * self.h_phi
            })
            .collect();
        pairwise_sum(&row_sums)
    }
}

/// Hemispherical integral of |F|^2 sin(theta) over phi in [0, 2pi),
/// theta in [0, pi/2]. With `check_convergence` the step is halved and the
/// two results must agree within the configured tolerance.
pub fn hemisphere_denominator(
    profile: &PhaseProfile,
    panel: &RisPanel,
    ap: Vec3,
    quad: &Quadrature,
) -> Result<f64> {
    let coarse = denominator_once(profile, panel, ap, quad.step, quad.gauss_legendre_theta);
    if quad.check_convergence {
        let fine = denominator_once(
            profile,
            panel,
            ap,
            quad.step / 2.0,
            quad.gauss_legendre_theta.map(|n| 2 * n),
        );
        let rel = (coarse - fine).abs() / fine.abs().max(1e-300);
        if rel > quad.tolerance {
            return Err(Error::QuadratureNotConverged {
                step_deg: quad.step.to_degrees(),
                rel_change: rel,
                limit: quad.tolerance,
            });
        }
    }
    Ok(coarse)
}

/// Gain toward (theta_u, phi_u) given a precomputed denominator:
/// eta 4 pi |F|^2 / integral.
pub fn gain_with_denominator(
    theta_u: f64,
    phi_u: f64,
    profile: &PhaseProfile,
    panel: &RisPanel,
    ap: Vec3,
    denominator: f64,
) -> f64 {
    panel.efficiency * 4.0 * PI * far_field_power(theta_u, phi_u, profile, panel, ap) / denominator
}

/// Gain toward (theta_u, phi_u), integrating the denominator with the given
/// quadrature.
pub fn gain(
    theta_u: f64,
    phi_u: f64,
    profile: &PhaseProfile,
    panel: &RisPanel,
    ap: Vec3,
    quad: &Quadrature,
) -> Result<f64> {
    let den = hemisphere_denominator(profile, panel, ap, quad)?;
    Ok(gain_with_denominator(
        theta_u, phi_u, profile, panel, ap, den,
    ))
}

/// |F|^2 over the midpoint grid (phi outer, theta inner), as
/// (phi, theta, |F|^2) rows in deterministic order.
pub fn far_field_power_grid(
    profile: &PhaseProfile,
    panel: &RisPanel,
    ap: Vec3,
    step: f64,
) -> Vec<(f64, f64, f64)> {
    let n_phi = (2.0 * PI / step).round().max(1.0) as usize;
    let h_phi = 2.0 * PI / n_phi as f64;
    let n_theta = (PI / 2.0 / step).round().max(1.0) as usize;
    let h_theta = PI / 2.0 / n_theta as f64;
    let columns: Vec<Vec<(f64, f64, f64)>> = (0..n_phi)
        .into_par_iter()
        .map(|j| {
            let phi = (j as f64 + 0.5) * h_phi;
            (0..n_theta)
                .map(|i| {
                    let theta = (i as f64 + 0.5) * h_theta;
                    (phi, theta, far_field_power(theta, phi, profile, panel, ap))
                })
                .collect()
        })
        .collect();
    columns.into_iter().flatten().collect()
}

/// RIS effective area M N G_e lambda^2 / (4 pi).
pub fn effective_area(panel: &RisPanel, lambda: f64) -> f64 {
    panel.element_count() as f64 * panel.element_gain * lambda * lambda / (4.0 * PI)
}

/// Two-hop path loss (C_0 / (d_1 d_2))^2 with C_0 = lambda^2 / (4 pi d_0)^2.
pub fn path_loss(d1: f64, d2: f64, lambda: f64, d0: f64) -> f64 {
    let c0 = lambda * lambda / (4.0 * PI * d0).powi(2);
    (c0 / (d1 * d2)).powi(2)
}

/// Link-budget inputs for the AP -> RIS -> receiver path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub g_t: f64,
    pub g_r: f64,
    /// AP transmit power, watts.
    pub p_t: f64,
    /// Receiver noise power, watts.
    pub sigma_n2: f64,
    pub lambda: f64,
    pub d0: f64,
    /// AP to RIS center distance.
    pub d1: f64,
    /// RIS center to receiver distance.
    pub d2: f64,
    /// Effective area, m^2.
    pub a_eff: f64,
    /// Two-hop path loss.
    pub l_p: f64,
}

impl LinkBudget {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        g_t: f64,
        g_r: f64,
        p_t: f64,
        sigma_n2: f64,
        lambda: f64,
        d0: f64,
        d1: f64,
        d2: f64,
        panel: &RisPanel,
    ) -> Self {
        LinkBudget {
            g_t,
            g_r,
            p_t,
            sigma_n2,
            lambda,
            d0,
            d1,
            d2,
            a_eff: effective_area(panel, lambda),
            l_p: path_loss(d1, d2, lambda, d0),
        }
    }
}

/// Achievable spectral efficiency
/// R = log2(1 + l_p G_t G_r P_t A_eff G / sigma_n^2).
pub fn spectral_efficiency(budget: &LinkBudget, gain: f64) -> f64 {
    (1.0 + budget.l_p * budget.g_t * budget.g_r * budget.p_t * budget.a_eff * gain
        / budget.sigma_n2)
        .log2()
}
