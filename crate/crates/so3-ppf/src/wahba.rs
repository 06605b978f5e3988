//! Static attitude reconstruction from weighted vector pairs, plus the
//! measurement-space quantities the direct estimator consumes.
//!
//! An [`ObservationSet`] holds normalized inertial/body vector pairs with
//! confidence weights summing to 3. Reconstruction is available both through
//! the SVD of the attitude profile matrix and through the Davenport q-method;
//! the two must agree and are cross-checked in the tests.

use crate::so3::RotationMatrix;
use crate::{Error, Matrix3, Result, UnitQuaternion, Vector3};
use alloc::vec::Vec;

/// Cross-product norm below which a pair of unit vectors counts as collinear.
const COLLINEAR_TOL: f64 = 1e-6;

/// Weights are scaled so the set sums to this value, which pins the trace of
/// the body profile matrix.
const WEIGHT_SUM: f64 = 3.0;

/// One weighted pair of a known inertial-frame direction and its body-frame
/// measurement. Both directions are stored normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorObservation {
    ref_inertial: Vector3,
    meas_body: Vector3,
    weight: f64,
}

impl VectorObservation {
    /// Normalizes both directions; rejects numerically zero vectors and
    /// negative weights.
    pub fn new(ref_inertial: Vector3, meas_body: Vector3, weight: f64) -> Result<Self> {
        let rn = ref_inertial.norm();
        let bn = meas_body.norm();
        if rn < 1e-9 || bn < 1e-9 {
            return Err(Error::DegenerateVector);
        }
        if weight.is_nan() || weight < 0.0 {
            return Err(Error::InvalidConfig("negative observation weight"));
        }
        Ok(Self {
            ref_inertial: ref_inertial / rn,
            meas_body: meas_body / bn,
            weight,
        })
    }

    pub fn ref_inertial(&self) -> &Vector3 {
        &self.ref_inertial
    }

    pub fn meas_body(&self) -> &Vector3 {
        &self.meas_body
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

/// An ordered collection of at least two observations whose weights sum to 3.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    observations: Vec<VectorObservation>,
}

impl ObservationSet {
    /// Scales the weights to sum 3 and checks that at least one pair of
    /// observations is non-collinear in both frames.
    pub fn new(observations: Vec<VectorObservation>) -> Result<Self> {
        if observations.len() < 2 {
            return Err(Error::Collinear);
        }
        let total: f64 = observations.iter().map(|o| o.weight).sum();
        if total <= 0.0 {
            return Err(Error::InvalidConfig("observation weights sum to zero"));
        }
        let scale = WEIGHT_SUM / total;
        let observations: Vec<_> = observations
            .into_iter()
            .map(|mut o| {
                o.weight *= scale;
                o
            })
            .collect();
        let some_pair_independent = pairwise_noncollinear(&observations);
        if !some_pair_independent {
            return Err(Error::Collinear);
        }
        Ok(Self { observations })
    }

    pub fn observations(&self) -> &[VectorObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Synthesizes a third observation as the normalized cross product of the
    /// two existing pairs (in each frame) with the given weight. The two
    /// original weights are rescaled to sum `3 - weight`, so their ratio is
    /// preserved and the set total stays 3.
    pub fn augment_with_cross(&self, weight: f64) -> Result<ObservationSet> {
        if self.observations.len() != 2 {
            return Err(Error::InvalidConfig("cross augmentation needs exactly 2 observations"));
        }
        if !(0.0..WEIGHT_SUM).contains(&weight) {
            return Err(Error::InvalidConfig("cross weight must lie in [0, 3)"));
        }
        let (a, b) = (&self.observations[0], &self.observations[1]);
        let cross_i = a.ref_inertial.cross(&b.ref_inertial);
        let cross_b = a.meas_body.cross(&b.meas_body);
        if cross_i.norm() < COLLINEAR_TOL || cross_b.norm() < COLLINEAR_TOL {
            return Err(Error::Collinear);
        }
        let scale = (WEIGHT_SUM - weight) / (a.weight + b.weight);
        let observations = alloc::vec![
            VectorObservation {
                weight: a.weight * scale,
                ..*a
            },
            VectorObservation {
                weight: b.weight * scale,
                ..*b
            },
            VectorObservation {
                ref_inertial: cross_i.normalize(),
                meas_body: cross_b.normalize(),
                weight,
            },
        ];
        Ok(ObservationSet { observations })
    }

    /// Body-frame profile matrix `M^B = sum s_i v_i^B (v_i^B)^T`; symmetric
    /// with trace 3.
    pub fn m_body(&self) -> Matrix3 {
        self.observations
            .iter()
            .map(|o| o.meas_body * o.meas_body.transpose() * o.weight)
            .sum()
    }

    /// Inertial-frame profile matrix `M^I = sum s_i v_i^I (v_i^I)^T`.
    pub fn m_inertial(&self) -> Matrix3 {
        self.observations
            .iter()
            .map(|o| o.ref_inertial * o.ref_inertial.transpose() * o.weight)
            .sum()
    }

    /// Attitude profile matrix `B = sum s_i v_i^I (v_i^B)^T`, shared by the
    /// SVD and Davenport solvers.
    fn profile(&self) -> Matrix3 {
        self.observations
            .iter()
            .map(|o| o.ref_inertial * o.meas_body.transpose() * o.weight)
            .sum()
    }

    /// Least-squares attitude (`v^B ~ R^T v^I` orientation) through the SVD of
    /// the profile matrix, with the determinant correction applied to the
    /// weakest direction.
    pub fn reconstruct_svd(&self) -> Result<RotationMatrix> {
        let svd = self.profile().svd(true, true);
        let u = svd.u.ok_or(Error::Degenerate)?;
        let v_t = svd.v_t.ok_or(Error::Degenerate)?;
        // Singular values come out sorted descending; the geometry is
        // ambiguous if fewer than two are significant.
        if svd.singular_values[1] < 1e-9 {
            return Err(Error::Degenerate);
        }
        let d = u.determinant() * v_t.determinant();
        let r = u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t;
        Ok(RotationMatrix::new_unchecked(r))
    }

    /// The same optimum as [`reconstruct_svd`](Self::reconstruct_svd), found
    /// as the dominant eigenvector of the Davenport matrix. Returned with a
    /// non-negative scalar part.
    pub fn reconstruct_davenport(&self) -> Result<UnitQuaternion> {
        let b = self.profile();
        let svd = b.svd(false, false);
        if svd.singular_values[1] < 1e-9 {
            return Err(Error::Degenerate);
        }
        let sigma = b.trace();
        let z = Vector3::new(
            b[(2, 1)] - b[(1, 2)],
            b[(0, 2)] - b[(2, 0)],
            b[(1, 0)] - b[(0, 1)],
        );
        let s = b + b.transpose();
        let mut k = nalgebra::Matrix4::zeros();
        k[(0, 0)] = sigma;
        for i in 0..3 {
            k[(0, i + 1)] = z[i];
            k[(i + 1, 0)] = z[i];
            for j in 0..3 {
                k[(i + 1, j + 1)] = s[(i, j)] - if i == j { sigma } else { 0.0 };
            }
        }
        let eig = nalgebra::SymmetricEigen::new(k);
        let mut max_idx = 0;
        for i in 1..4 {
            if eig.eigenvalues[i] > eig.eigenvalues[max_idx] {
                max_idx = i;
            }
        }
        let v = eig.eigenvectors.column(max_idx);
        let q = UnitQuaternion::from_parts_renormalized(v[0], Vector3::new(v[1], v[2], v[3]))?;
        Ok(if q.scalar() < 0.0 { -q } else { q })
    }

    /// Axial vector of `M^B R_tilde` assembled from measurements:
    /// `sum (s_i / 2) (vhat_i x v_i^B)` with `vhat_i = R_hat^T v_i^I`.
    pub fn axial_measure(&self, r_hat: &RotationMatrix) -> Vector3 {
        let rt = r_hat.matrix().transpose();
        self.observations
            .iter()
            .map(|o| (rt * o.ref_inertial).cross(&o.meas_body) * (o.weight * 0.5))
            .sum()
    }

    /// Normalized distance of `M^B R_tilde` assembled from measurements:
    /// `sum s_i (1 - vhat_i . v_i^B) / 4`, clamped non-negative.
    pub fn dist_measure(&self, r_hat: &RotationMatrix) -> f64 {
        let rt = r_hat.matrix().transpose();
        let d: f64 = self
            .observations
            .iter()
            .map(|o| o.weight * (1.0 - (rt * o.ref_inertial).dot(&o.meas_body)))
            .sum();
        (0.25 * d).max(0.0)
    }

    /// Trace term `J = Tr{(sum s_i v_i^B (v_i^B)^T)^-1 sum s_i v_i^B vhat_i^T}`;
    /// equals `Tr{R_tilde}` for noise-free measurements.
    pub fn j_measure(&self, r_hat: &RotationMatrix) -> Result<f64> {
        let m = self.m_body();
        let m_inv = invert_3x3(&m)?;
        let rt = r_hat.matrix().transpose();
        let n: Matrix3 = self
            .observations
            .iter()
            .map(|o| o.meas_body * (rt * o.ref_inertial).transpose() * o.weight)
            .sum();
        Ok((m_inv * n).trace())
    }
}

fn pairwise_noncollinear(observations: &[VectorObservation]) -> bool {
    for i in 0..observations.len() {
        for j in (i + 1)..observations.len() {
            let ci = observations[i]
                .ref_inertial
                .cross(&observations[j].ref_inertial)
                .norm();
            let cb = observations[i]
                .meas_body
                .cross(&observations[j].meas_body)
                .norm();
            if ci > COLLINEAR_TOL && cb > COLLINEAR_TOL {
                return true;
            }
        }
    }
    false
}

/// `M_bar = Tr{M} I - M` together with its smallest eigenvalue.
///
/// For a symmetric `M` with eigenvalues `{l1, l2, l3}` the result has
/// eigenvalues `{l2 + l3, l1 + l3, l1 + l2}`, so the minimum is positive
/// whenever `M` has rank at least 2.
pub fn m_bar_lambda_min(m: &Matrix3) -> Result<(Matrix3, f64)> {
    let m_bar = Matrix3::identity() * m.trace() - m;
    let eig = nalgebra::SymmetricEigen::new(m_bar);
    let lambda_min = eig.eigenvalues.min();
    if lambda_min <= 1e-9 {
        return Err(Error::RankDeficient);
    }
    Ok((m_bar, lambda_min))
}

/// Adjugate-based 3x3 inverse with a Frobenius condition-number cap at 1e9.
fn invert_3x3(m: &Matrix3) -> Result<Matrix3> {
    let det = m.determinant();
    if det.abs() < 1e-12 {
        return Err(Error::RankDeficient);
    }
    let adj = Matrix3::new(
        m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)],
        m[(0, 2)] * m[(2, 1)] - m[(0, 1)] * m[(2, 2)],
        m[(0, 1)] * m[(1, 2)] - m[(0, 2)] * m[(1, 1)],
        m[(1, 2)] * m[(2, 0)] - m[(1, 0)] * m[(2, 2)],
        m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)],
        m[(0, 2)] * m[(1, 0)] - m[(0, 0)] * m[(1, 2)],
        m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)],
        m[(0, 1)] * m[(2, 0)] - m[(0, 0)] * m[(2, 1)],
        m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
    );
    let inv = adj / det;
    if m.norm() * inv.norm() > 1e9 {
        return Err(Error::RankDeficient);
    }
    Ok(inv)
}
