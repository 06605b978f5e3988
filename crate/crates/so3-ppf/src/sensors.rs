//! Ground-truth propagation and stochastic sensor synthesis.
//!
//! The gyro reports the true rate plus a constant bias plus white noise; the
//! vector sensors report the body-frame image of a known inertial direction
//! plus a constant bias plus white noise, normalized afterwards. Every random
//! draw comes from a seeded counter-based stream so identical seeds reproduce
//! identical measurement sequences on any platform.

use crate::so3::{exp_so3, RotationMatrix};
use crate::wahba::VectorObservation;
use crate::{Result, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Ground-truth attitude and body rate at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthState {
    pub t: f64,
    pub rotation: RotationMatrix,
    pub omega: Vector3,
}

impl TruthState {
    pub fn new(rotation: RotationMatrix, omega: Vector3) -> Self {
        Self {
            t: 0.0,
            rotation,
            omega,
        }
    }

    /// Advances the attitude by one zero-order-hold step,
    /// `R <- R exp([omega] dt)`. The caller refreshes `omega` afterwards.
    pub fn step(&self, dt: f64) -> TruthState {
        TruthState {
            t: self.t + dt,
            rotation: self.rotation * exp_so3(&self.omega, dt),
            omega: self.omega,
        }
    }
}

/// Benchmark angular-velocity profile
/// `[sin(0.4 t), sin(0.7 t + pi/4), 0.4 cos(0.3 t)]` rad/s.
pub fn omega_profile(t: f64) -> Vector3 {
    Vector3::new(
        (0.4 * t).sin(),
        (0.7 * t + core::f64::consts::FRAC_PI_4).sin(),
        0.4 * (0.3 * t).cos(),
    )
}

/// How the configured standard deviation is interpreted when sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// Each sample is drawn with the configured deviation, independent of the
    /// step size. Matches a sensor spec sheet quoting a per-sample deviation.
    #[default]
    Sampled,
    /// The deviation is scaled by `1/sqrt(dt)`, so the integrated effect is
    /// step-size invariant (diffusion reading of the same number).
    EulerMaruyama,
}

/// Gyroscope with constant bias and per-axis white noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyroModel {
    pub bias: Vector3,
    /// Per-axis standard deviation (rad/s).
    pub noise_std: Vector3,
    pub mode: NoiseMode,
}

impl GyroModel {
    /// Equal deviation on all three axes.
    pub fn isotropic(bias: Vector3, noise_std: f64) -> Self {
        Self {
            bias,
            noise_std: Vector3::from_element(noise_std),
            mode: NoiseMode::Sampled,
        }
    }

    pub fn with_mode(mut self, mode: NoiseMode) -> Self {
        self.mode = mode;
        self
    }
}

/// One vector sensor: a known inertial direction measured in the body frame
/// with constant bias and white noise, weighted for reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorSensorModel {
    pub ref_inertial: Vector3,
    pub bias: Vector3,
    pub noise_std: f64,
    pub weight: f64,
}

/// Deterministic, seedable Gaussian/uniform stream (ChaCha8 keyed by the
/// seed), identical across platforms for the same seed.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream for run `index` of an ensemble keyed by `base`.
    pub fn for_run(base: u64, index: u64) -> Self {
        Self::from_seed(base ^ index)
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Zero-mean Gaussian with the given deviation.
    pub fn gaussian(&mut self, std: f64) -> f64 {
        if std == 0.0 {
            return 0.0;
        }
        std * self.standard_normal()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

/// Gyro reading `omega + bias + noise` for the step of length `dt`.
///
/// Consumes exactly three draws (x, y, z) regardless of the deviations.
pub fn gyro_measure(
    omega_true: &Vector3,
    model: &GyroModel,
    dt: f64,
    rng: &mut RngStream,
) -> Vector3 {
    let scale = match model.mode {
        NoiseMode::Sampled => 1.0,
        NoiseMode::EulerMaruyama => 1.0 / dt.sqrt(),
    };
    let noise = Vector3::new(
        rng.gaussian(model.noise_std.x * scale),
        rng.gaussian(model.noise_std.y * scale),
        rng.gaussian(model.noise_std.z * scale),
    );
    omega_true + model.bias + noise
}

/// Body-frame vector reading `R^T v + bias + noise`, returned as a normalized
/// observation pair. Consumes exactly three draws.
pub fn vector_measure(
    rotation: &RotationMatrix,
    model: &VectorSensorModel,
    rng: &mut RngStream,
) -> Result<VectorObservation> {
    let noise = Vector3::new(
        rng.gaussian(model.noise_std),
        rng.gaussian(model.noise_std),
        rng.gaussian(model.noise_std),
    );
    let body = rotation.matrix().transpose() * model.ref_inertial + model.bias + noise;
    VectorObservation::new(model.ref_inertial, body, model.weight)
}
