//! Vector and angle primitives shared by the physics modules.
//!
//! Everything here is a plain value type: positions and boresights in room
//! coordinates (meters), elevation/azimuth angle pairs, and the rigid
//! transform that maps an LED plane into the canonical frame expected by the
//! localization solver (plane at y = 0, emission along +y).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// 3-component vector, in meters for positions and dimensionless for
/// directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction. Panics on the zero vector.
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        self * (1.0 / n)
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Position plus unit boresight of an optical element or of the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub boresight: Vec3,
}

impl Pose {
    /// Builds a pose, normalizing the boresight.
    pub fn new(position: Vec3, boresight: Vec3) -> Self {
        Pose {
            position,
            boresight: boresight.normalized(),
        }
    }
}

/// Receiver boresight from its orientation angles.
///
/// `theta` is the tilt away from the room zenith (+z) and `phi` is the
/// azimuth of the tilt direction, measured from +x toward +y. `theta = 0`
/// faces straight up (detector plane parallel to the ceiling), `theta =
/// pi/2, phi = -pi/2` faces the RIS wall at y = 0 (detector plane parallel
/// to the wall). The room geometry fixes the two reference facings; the
/// split into (theta, phi) is this library's convention.
pub fn ue_boresight_tilt(theta: f64, phi: f64) -> Vec3 {
    Vec3::new(
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    )
}

/// Receiver boresight in the elevation form (cos t cos p, cos t sin p, sin t).
///
/// `theta = pi/2` faces +z; `theta = 0, phi = 0` faces +x. Equivalent to
/// [`ue_boresight_tilt`] with `theta` replaced by `pi/2 - theta`.
pub fn ue_boresight_elevation(theta: f64, phi: f64) -> Vec3 {
    Vec3::new(
        theta.cos() * phi.cos(),
        theta.cos() * phi.sin(),
        theta.sin(),
    )
}

/// Elevation/azimuth pair used for RIS steering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringAngles {
    /// Elevation above the xy plane, in [-pi/2, pi/2].
    pub theta: f64,
    /// Azimuth in the xy plane from +x toward +y, in (-pi, pi].
    pub phi: f64,
}

/// Euclidean distance between two points.
pub fn distance(a: Vec3, b: Vec3) -> f64 {
    (a - b).norm()
}

/// Elevation and azimuth from the RIS center toward an estimated receiver
/// position.
///
/// theta = atan((z_u - z_c) / sqrt((x_u - x_c)^2 + y_u^2)),
/// phi = atan2(y_u, x_u - x_c). atan2 is used for the azimuth to keep the
/// full quadrant; in this room y_u > 0 so it agrees with the plain arctan
/// wherever the latter is defined.
pub fn steering_angles_from_estimate(u_hat: Vec3, ris_center: Vec3) -> Result<SteeringAngles> {
    let dx = u_hat.x - ris_center.x;
    let dy = u_hat.y - ris_center.y;
    let dz = u_hat.z - ris_center.z;
    let horizontal = (dx * dx + dy * dy).sqrt();
    if horizontal == 0.0 && dz == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(SteeringAngles {
        theta: dz.atan2(horizontal),
        phi: dy.atan2(dx),
    })
}

/// Rigid transform mapping an LED plane onto the canonical solver frame.
///
/// The canonical frame puts the plane at y = 0 with the emission boresight
/// along +y, so the planar coordinate-recovery formulas (stated for LEDs on
/// a y = y_i plane) apply to ceiling and wall groups alike. Rows of
/// `rotation` are the canonical axes expressed in world coordinates; the
/// transform is exactly orthonormal by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalFrame {
    rotation: [Vec3; 3],
    origin: Vec3,
}

impl CanonicalFrame {
    /// Frame for a plane with the given unit boresight passing through
    /// `point_on_plane`.
    pub fn for_plane(boresight: Vec3, point_on_plane: Vec3) -> Self {
        let b = boresight.normalized();
        // Gram-Schmidt against a fixed seed axis keeps the frame
        // deterministic; +x is preferred so the identity boresight (+y)
        // yields the identity rotation.
        let seed = if b.x.abs() <= 0.9 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            Vec3::new(0.0, 0.0, 1.0)
        };
        let u = (seed - b * b.dot(seed)).normalized();
        let v = u.cross(b);
        CanonicalFrame {
            rotation: [u, b, v],
            origin: point_on_plane,
        }
    }

    /// World point -> canonical coordinates (plane at y = 0).
    pub fn to_canonical(&self, p: Vec3) -> Vec3 {
        let d = p - self.origin;
        Vec3::new(
            self.rotation[0].dot(d),
            self.rotation[1].dot(d),
            self.rotation[2].dot(d),
        )
    }

    /// Canonical coordinates -> world point.
    pub fn to_world(&self, c: Vec3) -> Vec3 {
        self.origin + self.rotation[0] * c.x + self.rotation[1] * c.y + self.rotation[2] * c.z
    }

    /// World direction -> canonical direction (rotation only).
    pub fn direction_to_canonical(&self, d: Vec3) -> Vec3 {
        Vec3::new(
            self.rotation[0].dot(d),
            self.rotation[1].dot(d),
            self.rotation[2].dot(d),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        assert_eq!(distance(Vec3::ZERO, Vec3::ZERO), 0.0);
        assert_eq!(distance(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)), 1.0);
        let d = distance(Vec3::new(3.5, 5.0, 3.0), Vec3::new(5.0, 2.5, 1.5));
        // sqrt(1.5^2 + 2.5^2 + 1.5^2)
        assert!((d - 10.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn steering_angles_simple_cases() {
        let c = Vec3::new(5.0, 0.0, 1.5);
        let a = steering_angles_from_estimate(Vec3::new(6.0, 1.0, 1.5), c).unwrap();
        assert!(a.theta.abs() < 1e-12);
        assert!((a.phi - std::f64::consts::FRAC_PI_4).abs() < 1e-12);

        let b = steering_angles_from_estimate(Vec3::new(5.0, 1.0, 2.5), c).unwrap();
        assert!((b.theta - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert!((b.phi - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn steering_angles_hand_evaluated() {
        let a = steering_angles_from_estimate(Vec3::new(6.0, 2.5, 2.5), Vec3::new(5.0, 0.0, 1.5))
            .unwrap();
        let expected_theta = (1.0f64 / (1.0f64 + 6.25).sqrt()).atan();
        let expected_phi = 2.5f64.atan2(1.0);
        assert!((a.theta - expected_theta).abs() < 1e-12);
        assert!((a.phi - expected_phi).abs() < 1e-12);
    }

    #[test]
    fn steering_angles_coincident_points_error() {
        let c = Vec3::new(5.0, 0.0, 1.5);
        assert!(matches!(
            steering_angles_from_estimate(c, c),
            Err(Error::CoincidentPoints)
        ));
    }

    #[test]
    fn canonical_frame_identity_for_plus_y() {
        let f = CanonicalFrame::for_plane(Vec3::new(0.0, 1.0, 0.0), Vec3::ZERO);
        let p = Vec3::new(4.1, 0.0, 1.5);
        let c = f.to_canonical(p);
        assert!((c.x - 4.1).abs() < 1e-15);
        assert!(c.y.abs() < 1e-15);
        assert!((c.z - 1.5).abs() < 1e-15);
    }

    #[test]
    fn canonical_frame_ceiling_round_trip() {
        let f = CanonicalFrame::for_plane(Vec3::new(0.0, 0.0, -1.0), Vec3::new(3.5, 5.0, 3.0));
        let b = f.direction_to_canonical(Vec3::new(0.0, 0.0, -1.0));
        assert!((b.y - 1.0).abs() < 1e-12);
        let p = Vec3::new(3.5, 5.0, 3.0);
        let back = f.to_world(f.to_canonical(p));
        assert!(distance(p, back) < 1e-12);
    }

    proptest! {
        #[test]
        fn frame_round_trips(
            bx in -1.0f64..1.0, by in -1.0f64..1.0, bz in -1.0f64..1.0,
            px in -10.0f64..10.0, py in -10.0f64..10.0, pz in -10.0f64..10.0,
            qx in -10.0f64..10.0, qy in -10.0f64..10.0, qz in -10.0f64..10.0,
        ) {
            let b = Vec3::new(bx, by, bz);
            prop_assume!(b.norm() > 1e-3);
            let f = CanonicalFrame::for_plane(b, Vec3::new(px, py, pz));
            let p = Vec3::new(qx, qy, qz);
            let back = f.to_world(f.to_canonical(p));
            prop_assert!(distance(p, back) < 1e-12);
            // boresight maps onto +y
            let m = f.direction_to_canonical(b.normalized());
            prop_assert!((m.y - 1.0).abs() < 1e-12);
        }

        #[test]
        fn triangle_inequality(
            ax in -5.0f64..5.0, ay in -5.0f64..5.0, az in -5.0f64..5.0,
            bx in -5.0f64..5.0, by in -5.0f64..5.0, bz in -5.0f64..5.0,
            cx in -5.0f64..5.0, cy in -5.0f64..5.0, cz in -5.0f64..5.0,
        ) {
            let a = Vec3::new(ax, ay, az);
            let b = Vec3::new(bx, by, bz);
            let c = Vec3::new(cx, cy, cz);
            prop_assert!(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12);
        }

        #[test]
        fn steering_reprojection(
            x in -4.0f64..6.0, y in 0.1f64..6.0, z in -3.0f64..3.0,
        ) {
            let center = Vec3::new(5.0, 0.0, 1.5);
            let u = center + Vec3::new(x, y, z);
            prop_assume!(distance(u, center) > 1e-6);
            let a = steering_angles_from_estimate(u, center).unwrap();
            let d = distance(u, center);
            let dir = Vec3::new(
                a.theta.cos() * a.phi.cos(),
                a.theta.cos() * a.phi.sin(),
                a.theta.sin(),
            );
            prop_assert!(distance(center + dir * d, u) < 1e-9);
        }
    }
}
