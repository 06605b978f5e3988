//! Core SO(3)/so(3) primitives.
//!
//! Everything here operates on plain `f64` 3-vectors and 3x3 matrices. The
//! [`RotationMatrix`] newtype carries the group invariants (orthonormality and
//! unit determinant, both checked at 1e-9) so downstream code never has to
//! re-validate its inputs.

use crate::{Error, Matrix3, Result, Vector3};

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Frobenius tolerance for the rotation invariants.
pub const ROTATION_TOL: f64 = 1e-9;

/// Anti-symmetry tolerance accepted by [`vex`].
pub const ANTISYM_TOL: f64 = 1e-9;

/// Angle below which [`exp_so3`] switches to its second-order series.
///
/// Keeps the relative error of both branches below 1e-12.
pub const EXP_SERIES_THRESHOLD: f64 = 1e-6;

/// A 3x3 orthonormal matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3);

impl RotationMatrix {
    /// Validates the rotation invariants and wraps the matrix.
    pub fn new(m: Matrix3) -> Result<Self> {
        let ortho = (m.transpose() * m - Matrix3::identity()).norm();
        if ortho > ROTATION_TOL || (m.determinant() - 1.0).abs() > ROTATION_TOL {
            return Err(Error::NotOrthonormal);
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be a rotation by construction (exp map,
    /// products of rotations, SVD projection).
    pub(crate) fn new_unchecked(m: Matrix3) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3 {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix3 {
        self.0
    }

    /// The inverse rotation (transpose).
    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Frobenius distance from the orthonormality manifold, for drift checks.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).norm()
    }
}

impl core::ops::Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl core::ops::Mul<&Vector3> for &RotationMatrix {
    type Output = Vector3;

    fn mul(self, rhs: &Vector3) -> Vector3 {
        self.0 * rhs
    }
}

/// Maps a vector to its anti-symmetric (cross-product) matrix:
/// `skew(v) * w == v x w`.
pub fn skew(v: &Vector3) -> Matrix3 {
    Matrix3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// Inverse of [`skew`]. Rejects matrices that are not anti-symmetric within
/// [`ANTISYM_TOL`] instead of silently averaging; use [`axial`] for the
/// symmetrize-then-extract composition on general matrices.
pub fn vex(x: &Matrix3) -> Result<Vector3> {
    if (x + x.transpose()).norm() > ANTISYM_TOL {
        return Err(Error::NotAntiSymmetric);
    }
    Ok(Vector3::new(x[(2, 1)], x[(0, 2)], x[(1, 0)]))
}

/// Anti-symmetric projection `(Y - Y^T) / 2` onto so(3).
pub fn antisym_part(y: &Matrix3) -> Matrix3 {
    (y - y.transpose()) * 0.5
}

/// Axial vector of a general matrix: the vex of its anti-symmetric part.
pub fn axial(y: &Matrix3) -> Vector3 {
    0.5 * Vector3::new(
        y[(2, 1)] - y[(1, 2)],
        y[(0, 2)] - y[(2, 0)],
        y[(1, 0)] - y[(0, 1)],
    )
}

/// Normalized Euclidean distance from the identity, `Tr{I - R} / 4`.
///
/// Clamped to `[0, 1]`: downstream log/denominator expressions cannot tolerate
/// a -1e-17 picked up from roundoff.
pub fn dist_identity(r: &RotationMatrix) -> f64 {
    let d = 0.25 * (3.0 - r.matrix().trace());
    d.clamp(0.0, 1.0)
}

/// Closed-form exponential map: the rotation accumulated by turning at `omega`
/// (rad/s) for `dt` seconds.
///
/// Uses the Rodrigues formula, falling back to the second-order series
/// `I + [u] + [u]^2/2` when the total angle is below
/// [`EXP_SERIES_THRESHOLD`] to avoid the 0/0 in `sin(b)/b`.
pub fn exp_so3(omega: &Vector3, dt: f64) -> RotationMatrix {
    let u = omega * dt;
    let angle = u.norm();
    let su = skew(&u);
    let m = if angle < EXP_SERIES_THRESHOLD {
        Matrix3::identity() + su + su * su * 0.5
    } else {
        let x = skew(&(u / angle));
        Matrix3::identity() + x * angle.sin() + x * x * (1.0 - angle.cos())
    };
    RotationMatrix::new_unchecked(m)
}

/// Nearest rotation in the Frobenius norm: the orthogonal polar factor with a
/// determinant correction. Used to repair drift after long integrations.
pub fn project_so3(m: &Matrix3) -> Result<RotationMatrix> {
    let svd = m.svd(true, true);
    let u = svd.u.ok_or(Error::SingularInput)?;
    let v_t = svd.v_t.ok_or(Error::SingularInput)?;
    // SVD::new sorts singular values in descending order.
    if svd.singular_values[2] < 1e-9 {
        return Err(Error::SingularInput);
    }
    let d = u.determinant() * v_t.determinant();
    let r = u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t;
    Ok(RotationMatrix::new_unchecked(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn skew_matches_displayed_definition() {
        let m = skew(&Vector3::new(1.0, 2.0, 3.0));
        let expected = Matrix3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0);
        assert_eq!(m, expected);
        assert_eq!(skew(&Vector3::zeros()), Matrix3::zeros());
    }

    #[test]
    fn skew_is_cross_product() {
        let e1 = Vector3::x();
        let e2 = Vector3::y();
        assert_eq!(skew(&e1) * e2, Vector3::z());
    }

    #[test]
    fn vex_inverts_skew() {
        let v = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(vex(&skew(&v)).unwrap(), v);
        assert_eq!(vex(&Matrix3::zeros()).unwrap(), Vector3::zeros());
    }

    #[test]
    fn vex_rejects_symmetric_input() {
        assert_eq!(vex(&Matrix3::identity()), Err(Error::NotAntiSymmetric));
    }

    #[test]
    fn antisym_part_behaviour() {
        let sym = Matrix3::new(1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0);
        assert_eq!(antisym_part(&sym), Matrix3::zeros());

        let a = skew(&Vector3::new(0.3, -0.2, 0.9));
        assert_eq!(antisym_part(&a), a);

        let y = Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let expected = Matrix3::new(0.0, 0.5, 0.0, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(antisym_part(&y), expected);
    }

    #[test]
    fn axial_of_z_rotation_is_sine() {
        let theta = 0.7;
        let r = exp_so3(&Vector3::new(0.0, 0.0, theta), 1.0);
        let a = axial(r.matrix());
        assert!(approx(a.x, 0.0, 1e-15));
        assert!(approx(a.y, 0.0, 1e-15));
        assert!(approx(a.z, theta.sin(), 1e-14));

        assert_eq!(axial(&Matrix3::identity()), Vector3::zeros());

        let v = Vector3::new(-0.4, 0.1, 2.0);
        assert_eq!(axial(&skew(&v)), v);
    }

    #[test]
    fn dist_identity_examples() {
        assert_eq!(dist_identity(&RotationMatrix::identity()), 0.0);

        let half_turn = RotationMatrix::new(Matrix3::from_diagonal(&Vector3::new(
            1.0, -1.0, -1.0,
        )))
        .unwrap();
        assert_eq!(dist_identity(&half_turn), 1.0);
    }

    #[test]
    fn dist_identity_of_large_initial_error() {
        // R(178 deg about [4,1,5]) has trace -0.99878...; the distance equals
        // sin^2(89 deg) = 0.999695413509548.
        let aa = crate::repr::AngleAxis::new(
            178.0_f64.to_radians(),
            Vector3::new(4.0, 1.0, 5.0).normalize(),
        )
        .unwrap();
        let r = aa.to_rotation();
        assert!(approx(dist_identity(&r), 0.999695413509548, 1e-12));
    }

    #[test]
    fn exp_so3_quarter_and_half_turns() {
        let q = exp_so3(&Vector3::new(0.0, 0.0, core::f64::consts::FRAC_PI_2), 1.0);
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((q.matrix() - expected).norm() < 1e-15);

        assert_eq!(exp_so3(&Vector3::zeros(), 1.0).matrix(), &Matrix3::identity());

        let h = exp_so3(&Vector3::new(core::f64::consts::PI, 0.0, 0.0), 1.0);
        let expected = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0));
        assert!((h.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn exp_so3_series_branch_is_consistent() {
        // Straddle the series switch; both branches must agree and stay valid.
        for &angle in &[1e-8, 9.9e-7, 1.01e-6, 1e-5] {
            let omega = Vector3::new(0.6, -0.48, 0.64).normalize() * angle;
            let r = exp_so3(&omega, 1.0);
            assert!(r.orthonormality_error() < 1e-14);
            let back = exp_so3(&(-omega), 1.0);
            assert!(((r * back).matrix() - Matrix3::identity()).norm() < 1e-14);
        }
    }

    #[test]
    fn project_so3_examples() {
        let r = exp_so3(&Vector3::new(0.3, 1.1, -0.2), 1.0);
        let p = project_so3(r.matrix()).unwrap();
        assert!((p.matrix() - r.matrix()).norm() < 1e-12);

        let scaled = Matrix3::identity() * 1.001;
        let p = project_so3(&scaled).unwrap();
        assert!((p.matrix() - Matrix3::identity()).norm() < 1e-12);

        let mut rank2 = Matrix3::zeros();
        rank2[(0, 0)] = 1.0;
        rank2[(1, 1)] = 1.0;
        assert_eq!(project_so3(&rank2), Err(Error::SingularInput));
    }

    #[test]
    fn rotation_matrix_validation() {
        assert!(RotationMatrix::new(Matrix3::identity()).is_ok());
        assert_eq!(
            RotationMatrix::new(Matrix3::identity() * 1.001),
            Err(Error::NotOrthonormal)
        );
    }
}
