//! Prescribed performance function, transformed error and dynamic gain.
//!
//! The envelope `xi(t) = (xi0 - xi_inf) exp(-l t) + xi_inf` confines the
//! normalized attitude error. The transformed error `E` maps the constrained
//! ratio `dist/xi` onto the whole real line through a logistic-type function
//! with equal shape constants, and `mu` is the gain that multiplies every
//! correction term of the estimators.

use crate::{Error, Result};

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Relative guard band applied before the log singularity of the transform.
///
/// The continuous theory precludes a breach, but discrete stepping with noise
/// can graze the boundary; within the band we raise
/// [`Error::EnvelopeViolated`] instead of returning an infinity.
const GUARD_BAND: f64 = 1e-9;

/// Where the saturating transform caps the error-to-envelope ratio, as a
/// fraction of the shape constant. Keeps the saturated gain large (the
/// transform evaluates to about 2.6 there for unit shape constants) without
/// the unbounded blow-up of the guard band itself.
pub const SATURATION_RATIO: f64 = 0.99;

/// Validated envelope and error-transform parameters.
///
/// Both shape constants of the transform are equal by construction (`delta`),
/// which makes the transformed error non-negative with `E = 0` exactly at
/// zero attitude error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpfConfig {
    xi0: f64,
    xi_inf: f64,
    ell: f64,
    delta: f64,
}

impl PpfConfig {
    /// Requires `xi0 > xi_inf > 0`, `ell > 0`, `delta > 0` and `xi0 <= delta`
    /// (so an in-envelope initial error cannot start beyond the transform's
    /// shape bound).
    pub fn new(xi0: f64, xi_inf: f64, ell: f64, delta: f64) -> Result<Self> {
        if !(xi0.is_finite() && xi_inf.is_finite() && ell.is_finite() && delta.is_finite()) {
            return Err(Error::InvalidConfig("non-finite envelope parameter"));
        }
        if xi_inf <= 0.0 || xi0 <= xi_inf {
            return Err(Error::InvalidConfig("requires xi0 > xi_inf > 0"));
        }
        if ell <= 0.0 {
            return Err(Error::InvalidConfig("requires decay rate ell > 0"));
        }
        if delta <= 0.0 {
            return Err(Error::InvalidConfig("requires shape constant delta > 0"));
        }
        if xi0 > delta {
            return Err(Error::InvalidConfig("requires xi0 <= delta"));
        }
        Ok(Self {
            xi0,
            xi_inf,
            ell,
            delta,
        })
    }

    pub fn xi0(&self) -> f64 {
        self.xi0
    }

    pub fn xi_inf(&self) -> f64 {
        self.xi_inf
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// The common shape constant (upper and lower are equal by construction).
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Envelope value and slope at time `t`:
    /// `xi = (xi0 - xi_inf) e^{-l t} + xi_inf`, `xi_dot = -l (xi0 - xi_inf) e^{-l t}`.
    pub fn xi(&self, t: f64) -> (f64, f64) {
        let decay = (-self.ell * t).exp();
        let xi = (self.xi0 - self.xi_inf) * decay + self.xi_inf;
        let xi_dot = -self.ell * (self.xi0 - self.xi_inf) * decay;
        (xi, xi_dot)
    }

    /// Transformed error `E = ln((delta + dist/xi) / (delta - dist/xi)) / 2`.
    ///
    /// With equal shape constants `E >= 0`, and `E = 0` iff `dist = 0`.
    pub fn transformed_error(&self, dist: f64, xi: f64) -> Result<f64> {
        let ratio = dist / xi;
        if ratio >= self.delta * (1.0 - GUARD_BAND) {
            return Err(Error::EnvelopeViolated { dist, xi });
        }
        Ok(0.5 * ((self.delta + ratio) / (self.delta - ratio)).ln())
    }

    /// Saturating variant used inside the running filters: a measured error
    /// at or beyond the shape bound (possible only because measurement noise
    /// corrupts the error estimate) is pulled back to
    /// [`SATURATION_RATIO`]` * delta`, which keeps a large, bounded recovery
    /// gain active instead of leaving the transform undefined. Returns the
    /// error and whether saturation engaged.
    pub fn transformed_error_saturated(&self, dist: f64, xi: f64) -> (f64, bool) {
        let ratio = dist / xi;
        let cap = SATURATION_RATIO * self.delta;
        if ratio >= cap {
            let e = 0.5 * ((self.delta + cap) / (self.delta - cap)).ln();
            (e, true)
        } else {
            (0.5 * ((self.delta + ratio) / (self.delta - ratio)).ln(), false)
        }
    }

    /// Inverse of [`transformed_error`](Self::transformed_error):
    /// `dist = xi (delta e^E - delta e^{-E}) / (e^E + e^{-E})`.
    pub fn inverse_transform(&self, e: f64, xi: f64) -> f64 {
        let (ep, en) = (e.exp(), (-e).exp());
        xi * (self.delta * ep - self.delta * en) / (ep + en)
    }

    /// Dynamic gain in terms of the transformed error:
    /// `mu = (e^{2E} + e^{-2E} + 2) / (8 xi delta)`.
    ///
    /// Satisfies `mu >= 1 / (2 xi delta)` with equality iff `E = 0`.
    pub fn mu(&self, e: f64, xi: f64) -> f64 {
        ((2.0 * e).exp() + (-2.0 * e).exp() + 2.0) / (8.0 * xi * self.delta)
    }

    /// The same gain written against the raw distance,
    /// `mu = (1/(delta + dist/xi) + 1/(delta - dist/xi)) / (4 xi)`.
    ///
    /// Kept as an independent route for cross-checking [`mu`](Self::mu).
    pub fn mu_from_dist(&self, dist: f64, xi: f64) -> f64 {
        let ratio = dist / xi;
        (1.0 / (self.delta + ratio) + 1.0 / (self.delta - ratio)) / (4.0 * xi)
    }

    /// Evaluates the full sample (envelope, transformed error, gain) at `t`
    /// for the current error `dist`.
    pub fn sample(&self, t: f64, dist: f64) -> Result<PpfSample> {
        let (xi, xi_dot) = self.xi(t);
        self.sample_with_xi(t, xi, xi_dot, dist)
    }

    /// As [`sample`](Self::sample) but with the envelope pair supplied by the
    /// caller (the discrete filters use a finite-difference slope).
    pub fn sample_with_xi(&self, t: f64, xi: f64, xi_dot: f64, dist: f64) -> Result<PpfSample> {
        let e = self.transformed_error(dist, xi)?;
        Ok(PpfSample {
            t,
            xi,
            xi_dot,
            e,
            mu: self.mu(e, xi),
        })
    }

    /// Saturating counterpart of [`sample_with_xi`](Self::sample_with_xi);
    /// see [`transformed_error_saturated`](Self::transformed_error_saturated).
    pub fn sample_saturated(&self, t: f64, xi: f64, xi_dot: f64, dist: f64) -> (PpfSample, bool) {
        let (e, saturated) = self.transformed_error_saturated(dist, xi);
        (
            PpfSample {
                t,
                xi,
                xi_dot,
                e,
                mu: self.mu(e, xi),
            },
            saturated,
        )
    }
}

/// Envelope, transformed error and gain evaluated at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpfSample {
    pub t: f64,
    pub xi: f64,
    pub xi_dot: f64,
    pub e: f64,
    pub mu: f64,
}

/// Outcome of scanning an error series against its envelope series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    /// Index of the first sample with `dist >= xi`, if any.
    pub first_breach: Option<usize>,
}

impl EnvelopeReport {
    pub fn passed(&self) -> bool {
        self.first_breach.is_none()
    }
}

/// Scans equal-length series and reports the first index where the error
/// leaves the envelope.
pub fn envelope_check(dist: &[f64], xi: &[f64]) -> EnvelopeReport {
    debug_assert_eq!(dist.len(), xi.len());
    let first_breach = dist
        .iter()
        .zip(xi.iter())
        .position(|(d, x)| *d >= *x);
    EnvelopeReport { first_breach }
}
