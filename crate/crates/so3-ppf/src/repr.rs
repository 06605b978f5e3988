//! Attitude parameterizations and the conversions between them.
//!
//! Angle-axis and the Rodriguez vector are the analytical workhorses; the unit
//! quaternion backs the quaternion filter variants; Euler angles exist only as
//! a reporting convention (intrinsic ZYX, i.e. yaw-pitch-roll) and are never
//! integrated.

use crate::so3::{skew, RotationMatrix};
use crate::{Error, Matrix3, Result, Vector3};

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Unit-norm tolerance for axes and quaternions.
const UNIT_TOL: f64 = 1e-9;

/// Rotation of `angle` radians about a unit `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleAxis {
    pub angle: f64,
    pub axis: Vector3,
}

impl AngleAxis {
    pub fn new(angle: f64, axis: Vector3) -> Result<Self> {
        let norm = axis.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnitAxis);
        }
        Ok(Self {
            angle,
            axis: axis / norm,
        })
    }

    /// Rodrigues rotation formula `I + sin(a) [u] + (1 - cos(a)) [u]^2`.
    pub fn to_rotation(&self) -> RotationMatrix {
        let su = skew(&self.axis);
        let m = Matrix3::identity() + su * self.angle.sin() + su * su * (1.0 - self.angle.cos());
        RotationMatrix::new(m).expect("angle-axis image is a rotation")
    }
}

/// Rodriguez parameter vector `rho = tan(angle/2) * axis`.
///
/// Undefined at half-turns; constructors reject rotations within 1e-6 rad of
/// `angle = pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodriguezVector(pub Vector3);

impl RodriguezVector {
    pub fn new(rho: Vector3) -> Result<Self> {
        if !(rho.x.is_finite() && rho.y.is_finite() && rho.z.is_finite()) {
            return Err(Error::NearHalfTurn);
        }
        Ok(Self(rho))
    }

    pub fn from_angle_axis(aa: &AngleAxis) -> Result<Self> {
        if (aa.angle.abs() - core::f64::consts::PI).abs() < 1e-6 {
            return Err(Error::NearHalfTurn);
        }
        Ok(Self(aa.axis * (aa.angle / 2.0).tan()))
    }

    /// `((1 - |rho|^2) I + 2 rho rho^T + 2 [rho]) / (1 + |rho|^2)`.
    ///
    /// The image has normalized distance `|rho|^2 / (1 + |rho|^2)` and axial
    /// vector `2 rho / (1 + |rho|^2)`.
    pub fn to_rotation(&self) -> RotationMatrix {
        let rho = &self.0;
        let n2 = rho.norm_squared();
        let m = (Matrix3::identity() * (1.0 - n2) + rho * rho.transpose() * 2.0
            + skew(rho) * 2.0)
            / (1.0 + n2);
        RotationMatrix::new(m).expect("Rodriguez image is a rotation")
    }
}

/// Scalar-first unit quaternion on the 3-sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    scalar: f64,
    vector: Vector3,
}

impl UnitQuaternion {
    /// Validates `q0^2 + |q|^2 = 1` within 1e-9, then renormalizes exactly.
    pub fn new(scalar: f64, vector: Vector3) -> Result<Self> {
        let norm = (scalar * scalar + vector.norm_squared()).sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnitQuaternion);
        }
        Ok(Self {
            scalar: scalar / norm,
            vector: vector / norm,
        })
    }

    /// Normalizes arbitrary components onto the sphere. Used by the quaternion
    /// filter integrator after each Euler step.
    pub fn from_parts_renormalized(scalar: f64, vector: Vector3) -> Result<Self> {
        let norm = (scalar * scalar + vector.norm_squared()).sqrt();
        if norm < 1e-12 {
            return Err(Error::DegenerateVector);
        }
        Ok(Self {
            scalar: scalar / norm,
            vector: vector / norm,
        })
    }

    pub fn identity() -> Self {
        Self {
            scalar: 1.0,
            vector: Vector3::zeros(),
        }
    }

    pub fn scalar(&self) -> f64 {
        self.scalar
    }

    pub fn vector(&self) -> Vector3 {
        self.vector
    }

    /// `(q0^2 - |q|^2) I + 2 q q^T + 2 q0 [q]`.
    pub fn to_rotation(&self) -> RotationMatrix {
        let (w, q) = (self.scalar, &self.vector);
        let m = Matrix3::identity() * (w * w - q.norm_squared())
            + q * q.transpose() * 2.0
            + skew(q) * (2.0 * w);
        RotationMatrix::new(m).expect("unit quaternion image is a rotation")
    }

    /// Hamilton product, renormalized.
    pub fn product(&self, rhs: &UnitQuaternion) -> UnitQuaternion {
        let w = self.scalar * rhs.scalar - self.vector.dot(&rhs.vector);
        let v = rhs.vector * self.scalar + self.vector * rhs.scalar + self.vector.cross(&rhs.vector);
        Self::from_parts_renormalized(w, v).expect("product of unit quaternions is unit")
    }

    /// Conjugate `[q0, -q]`.
    pub fn inverse(&self) -> UnitQuaternion {
        Self {
            scalar: self.scalar,
            vector: -self.vector,
        }
    }

    /// Vector part of `Q^-1 (x) [0, v] (x) Q`: the inertial-to-body transform
    /// `R(Q)^T v`.
    pub fn transform_to_body(&self, v: &Vector3) -> Vector3 {
        // [0, v] need not be unit; expand the two products directly.
        let (w, q) = (self.scalar, &self.vector);
        // p = Q^-1 (x) [0, v]
        let pw = q.dot(v);
        let pv = v * w - q.cross(v);
        // vector part of p (x) Q
        q * pw + pv * w + pv.cross(q)
    }
}

impl core::ops::Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    fn mul(self, rhs: UnitQuaternion) -> UnitQuaternion {
        self.product(&rhs)
    }
}

impl core::ops::Neg for UnitQuaternion {
    type Output = UnitQuaternion;

    fn neg(self) -> UnitQuaternion {
        UnitQuaternion {
            scalar: -self.scalar,
            vector: -self.vector,
        }
    }
}

/// Intrinsic ZYX (yaw-pitch-roll) Euler angles, radians. Reporting only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Set when the pitch is within 1e-6 of +/- pi/2; yaw is then fixed to 0
    /// by convention and roll absorbs the remaining rotation.
    pub gimbal_lock: bool,
}

impl EulerAngles {
    /// Recomposes `Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn to_rotation(&self) -> RotationMatrix {
        let rz = crate::so3::exp_so3(&Vector3::new(0.0, 0.0, self.yaw), 1.0);
        let ry = crate::so3::exp_so3(&Vector3::new(0.0, self.pitch, 0.0), 1.0);
        let rx = crate::so3::exp_so3(&Vector3::new(self.roll, 0.0, 0.0), 1.0);
        rz * ry * rx
    }
}

impl RotationMatrix {
    /// Largest-pivot (Shepperd) quaternion extraction; the result has
    /// non-negative scalar part so test outputs are deterministic.
    pub fn to_quaternion(&self) -> UnitQuaternion {
        let m = self.matrix();
        let trace = m.trace();
        let (w, x, y, z);
        if trace >= m[(0, 0)].max(m[(1, 1)]).max(m[(2, 2)]) {
            let s = (1.0 + trace).sqrt() * 2.0;
            w = 0.25 * s;
            x = (m[(2, 1)] - m[(1, 2)]) / s;
            y = (m[(0, 2)] - m[(2, 0)]) / s;
            z = (m[(1, 0)] - m[(0, 1)]) / s;
        } else if m[(0, 0)] >= m[(1, 1)] && m[(0, 0)] >= m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            w = (m[(2, 1)] - m[(1, 2)]) / s;
            x = 0.25 * s;
            y = (m[(0, 1)] + m[(1, 0)]) / s;
            z = (m[(0, 2)] + m[(2, 0)]) / s;
        } else if m[(1, 1)] >= m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            w = (m[(0, 2)] - m[(2, 0)]) / s;
            x = (m[(0, 1)] + m[(1, 0)]) / s;
            y = 0.25 * s;
            z = (m[(1, 2)] + m[(2, 1)]) / s;
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            w = (m[(1, 0)] - m[(0, 1)]) / s;
            x = (m[(0, 2)] + m[(2, 0)]) / s;
            y = (m[(1, 2)] + m[(2, 1)]) / s;
            z = 0.25 * s;
        }
        let q = UnitQuaternion::from_parts_renormalized(w, Vector3::new(x, y, z))
            .expect("Shepperd extraction is well conditioned");
        if q.scalar < 0.0 {
            -q
        } else {
            q
        }
    }

    /// Intrinsic ZYX extraction. Flags gimbal lock when the pitch is within
    /// 1e-6 of +/- pi/2 and fixes yaw to 0 there.
    pub fn to_euler(&self) -> EulerAngles {
        let m = self.matrix();
        let sp = (-m[(2, 0)]).clamp(-1.0, 1.0);
        let pitch = sp.asin();
        if (pitch.abs() - core::f64::consts::FRAC_PI_2).abs() < 1e-6 {
            // c_pitch ~ 0: only roll -+ yaw is observable; put it all in roll.
            let roll = if sp > 0.0 {
                m[(0, 1)].atan2(m[(0, 2)])
            } else {
                (-m[(0, 1)]).atan2(-m[(0, 2)])
            };
            return EulerAngles {
                roll,
                pitch,
                yaw: 0.0,
                gimbal_lock: true,
            };
        }
        EulerAngles {
            roll: m[(2, 1)].atan2(m[(2, 2)]),
            pitch,
            yaw: m[(1, 0)].atan2(m[(0, 0)]),
            gimbal_lock: false,
        }
    }
}
