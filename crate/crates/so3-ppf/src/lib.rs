//! Nonlinear stochastic attitude estimation on SO(3) with prescribed-performance
//! error envelopes.
//!
//! The crate provides the building blocks of two complementary-filter style
//! estimators whose normalized attitude error is forced to evolve inside a
//! user-prescribed, exponentially shrinking envelope:
//!
//! * [`so3`] — skew/vex/axial operators, the normalized Euclidean distance,
//!   the closed-form exponential map and orthonormality repair.
//! * [`repr`] — conversions between angle-axis, Rodriguez-vector, unit
//!   quaternion, rotation matrix and (reporting-only) Euler angles.
//! * [`wahba`] — static attitude reconstruction (SVD and Davenport q-method)
//!   and the measurement-space quantities consumed by the direct estimator.
//! * [`ppf`] — the prescribed performance function, the transformed error and
//!   the dynamic gain it induces.
//! * [`estimators`] — the semi-direct and direct estimators in continuous,
//!   discrete and quaternion forms.
//! * [`sensors`] — ground-truth propagation and seeded stochastic sensor
//!   synthesis (gyro with constant bias and white noise, biased/noisy vector
//!   observations).
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default `std`
//! feature for embedded use. All types are plain values and all operations are
//! pure functions, so everything can be used concurrently without locks.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod estimators;
pub mod ppf;
pub mod repr;
pub mod sensors;
pub mod so3;
pub mod wahba;

/// Scalar 3-vector used throughout (rates in rad/s, axes dimensionless).
pub type Vector3 = nalgebra::Vector3<f64>;
/// Dense 3x3 matrix used throughout.
pub type Matrix3 = nalgebra::Matrix3<f64>;

pub use repr::{AngleAxis, EulerAngles, RodriguezVector, UnitQuaternion};
pub use so3::RotationMatrix;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Error {
    /// `vex` was handed a matrix that is not anti-symmetric within tolerance.
    NotAntiSymmetric,
    /// A matrix failed the rotation invariants (orthonormality / determinant).
    NotOrthonormal,
    /// `project_so3` was handed a rank-deficient matrix.
    SingularInput,
    /// Angle-axis input whose axis is not unit norm.
    NonUnitAxis,
    /// Quaternion components too far from the unit sphere.
    NonUnitQuaternion,
    /// Rodriguez vector requested for a rotation within tolerance of a half-turn.
    NearHalfTurn,
    /// A vector degenerated to (numerically) zero length before normalization.
    DegenerateVector,
    /// Fewer than two usable observations, or every pair is collinear.
    Collinear,
    /// A measurement matrix lost rank (inversion or eigenvalue floor failed).
    RankDeficient,
    /// The observation geometry does not determine a unique rotation.
    Degenerate,
    /// The error-to-envelope ratio reached the shape bound of the transform.
    EnvelopeViolated {
        /// Offending normalized distance.
        dist: f64,
        /// Envelope value at the same instant.
        xi: f64,
    },
    /// A filter denominator approached the unstable set (trace -1 attitudes).
    NearUnstableSet,
    /// Rejected prescribed-performance configuration.
    InvalidConfig(&'static str),
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::NotAntiSymmetric => write!(f, "matrix is not anti-symmetric"),
            Error::NotOrthonormal => write!(f, "matrix violates rotation invariants"),
            Error::SingularInput => write!(f, "matrix is singular"),
            Error::NonUnitAxis => write!(f, "axis is not unit norm"),
            Error::NonUnitQuaternion => write!(f, "quaternion is not unit norm"),
            Error::NearHalfTurn => write!(f, "rotation too close to a half-turn"),
            Error::DegenerateVector => write!(f, "vector is numerically zero"),
            Error::Collinear => write!(f, "observations are collinear"),
            Error::RankDeficient => write!(f, "measurement matrix is rank deficient"),
            Error::Degenerate => write!(f, "observation geometry is degenerate"),
            Error::EnvelopeViolated { dist, xi } => {
                write!(f, "error {dist} breached the performance envelope (xi = {xi})")
            }
            Error::NearUnstableSet => write!(f, "attitude error too close to the unstable set"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
