//! The experiment runner: one seeded trajectory per estimator, Monte-Carlo
//! ensembles over derived seeds, and summary statistics.

use crate::config::{EstimatorKind, ExperimentConfig, Form, Integrator, ResolvedConfig};
use crate::{Result, SimError};
use rayon::prelude::*;
use serde::Serialize;
use so3_ppf::estimators::{
    self, CorrectionTerms, EstimatorState, QuatEstimatorState,
};
use so3_ppf::ppf::envelope_check;
use so3_ppf::repr::EulerAngles;
use so3_ppf::sensors::{gyro_measure, vector_measure, NoiseMode, RngStream, TruthState};
use so3_ppf::so3::{dist_identity, project_so3};
use so3_ppf::wahba::ObservationSet;
use so3_ppf::{Error, Vector3};

/// One sample of the recorded trajectory. `dist` is the true attitude error;
/// `e`, `mu` and `w_norm` are the filter's internal quantities at the same
/// instant.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryRow {
    pub t: f64,
    pub dist: f64,
    pub xi: f64,
    pub e: f64,
    pub mu: f64,
    pub euler_true: EulerAngles,
    pub euler_est: EulerAngles,
    pub b_hat: Vector3,
    pub sigma_hat: Vector3,
    pub w_norm: f64,
    /// The filter evaluated its transform at the saturation cap this step.
    pub saturated: bool,
}

/// A full run: `floor(duration/dt) + 1` rows.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryRecord {
    pub rows: Vec<TrajectoryRow>,
}

/// Statistics of one run over the configured window, plus the envelope
/// verdict over all samples with `t > 0`.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryStats {
    pub estimator: String,
    pub form: String,
    pub seed: u64,
    pub window_start: f64,
    pub window_end: f64,
    pub n_window_samples: usize,
    /// Arithmetic mean of the true error over the window.
    pub mean_dist: f64,
    /// Population standard deviation of the true error over the window.
    pub std_dist: f64,
    pub final_dist: f64,
    /// True error stayed below the envelope for every sample with t > 0.
    pub envelope_pass: bool,
    pub first_breach_t: Option<f64>,
    /// Steps on which the measured error sat at or beyond the transform's
    /// shape bound, engaging the saturated (capped) transform.
    pub saturated_steps: usize,
}

/// What an experiment returns: the recorded trajectory and its summary.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub tag: String,
    pub record: TrajectoryRecord,
    pub summary: SummaryStats,
}

/// One Monte-Carlo run either completes with statistics or fails with the
/// estimator error that stopped it.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunSummary {
    Completed(SummaryStats),
    Failed {
        seed: u64,
        step: usize,
        t: f64,
        error: String,
    },
}

impl RunSummary {
    pub fn completed(&self) -> Option<&SummaryStats> {
        match self {
            RunSummary::Completed(s) => Some(s),
            RunSummary::Failed { .. } => None,
        }
    }

    /// A run counts as envelope-compliant only if it completed without any
    /// true-error breach.
    pub fn envelope_pass(&self) -> bool {
        matches!(self, RunSummary::Completed(s) if s.envelope_pass)
    }
}

/// Ensemble statistics over Monte-Carlo runs of one estimator. Means are
/// taken over completed runs; the pass rate counts breached and failed runs
/// against the full ensemble.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleStats {
    pub estimator: String,
    pub form: String,
    pub base_seed: u64,
    pub runs: usize,
    pub completed: usize,
    pub mean_of_means: f64,
    pub std_of_means: f64,
    pub envelope_pass_rate: f64,
    pub per_run: Vec<RunSummary>,
}

enum FilterState {
    Matrix(EstimatorState),
    Quat(QuatEstimatorState),
}

impl FilterState {
    fn rotation(&self) -> so3_ppf::RotationMatrix {
        match self {
            FilterState::Matrix(s) => s.r_hat,
            FilterState::Quat(s) => s.q_hat.to_rotation(),
        }
    }

    fn b_hat(&self) -> Vector3 {
        match self {
            FilterState::Matrix(s) => s.b_hat,
            FilterState::Quat(s) => s.b_hat,
        }
    }

    fn sigma_hat(&self) -> Vector3 {
        match self {
            FilterState::Matrix(s) => s.sigma_hat,
            FilterState::Quat(s) => s.sigma_hat,
        }
    }
}

fn kind_tag(kind: EstimatorKind) -> &'static str {
    match kind {
        EstimatorKind::Semi => "semi",
        EstimatorKind::Direct => "direct",
        EstimatorKind::Both => "both",
    }
}

fn form_tag(form: Form) -> &'static str {
    match form {
        Form::Continuous => "cont",
        Form::Discrete => "disc",
        Form::Quaternion => "quat",
    }
}

fn selected_kinds(kind: EstimatorKind) -> Vec<EstimatorKind> {
    match kind {
        EstimatorKind::Both => vec![EstimatorKind::Semi, EstimatorKind::Direct],
        k => vec![k],
    }
}

/// Runs the configured estimator(s) under the base seed. With
/// `estimator = "both"` each filter consumes an identical measurement stream
/// (fresh generator from the same seed, identical draw order), so the two
/// runs differ only through the filter laws.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunOutcome>> {
    let resolved = cfg.resolve()?;
    selected_kinds(resolved.estimator)
        .into_iter()
        .map(|kind| run_single(&resolved, kind, resolved.seed))
        .collect()
}

/// Monte-Carlo ensemble: run `i` uses seed `base ^ i`. Runs execute in
/// parallel; results are ordered by run index, so the ensemble is
/// reproducible. Breaches never abort ensemble runs (every run must yield a
/// full trajectory for its statistics); the per-run verdicts carry them.
pub fn run_monte_carlo(cfg: &ExperimentConfig, n_runs: usize) -> Result<Vec<EnsembleStats>> {
    let mut resolved = cfg.resolve()?;
    resolved.strict = false;
    let mut out = Vec::new();
    for kind in selected_kinds(resolved.estimator) {
        let per_run: Vec<RunSummary> = (0..n_runs)
            .into_par_iter()
            .map(|i| {
                let seed = resolved.seed ^ i as u64;
                match run_single(&resolved, kind, seed) {
                    Ok(o) => RunSummary::Completed(o.summary),
                    Err(SimError::Estimator { step, t, source }) => RunSummary::Failed {
                        seed,
                        step,
                        t,
                        error: source.to_string(),
                    },
                    Err(e) => RunSummary::Failed {
                        seed,
                        step: 0,
                        t: 0.0,
                        error: e.to_string(),
                    },
                }
            })
            .collect();
        let means: Vec<f64> = per_run
            .iter()
            .filter_map(|r| r.completed().map(|s| s.mean_dist))
            .collect();
        let completed = means.len();
        let n = completed.max(1) as f64;
        let mean_of_means = means.iter().sum::<f64>() / n;
        let var = means
            .iter()
            .map(|m| (m - mean_of_means).powi(2))
            .sum::<f64>()
            / n;
        let pass_rate =
            per_run.iter().filter(|r| r.envelope_pass()).count() as f64 / n_runs as f64;
        out.push(EnsembleStats {
            estimator: kind_tag(kind).into(),
            form: form_tag(resolved.form).into(),
            base_seed: resolved.seed,
            runs: n_runs,
            completed,
            mean_of_means: if completed == 0 { f64::NAN } else { mean_of_means },
            std_of_means: if completed == 0 { f64::NAN } else { var.sqrt() },
            envelope_pass_rate: pass_rate,
            per_run,
        });
    }
    Ok(out)
}

/// Mean and population standard deviation of the true error over a window,
/// with the envelope verdict over all rows with `t > 0`.
pub fn summarize(record: &TrajectoryRecord, window: (f64, f64)) -> Result<SummaryStats> {
    summarize_tagged(record, window, "", "", 0)
}

fn summarize_tagged(
    record: &TrajectoryRecord,
    window: (f64, f64),
    estimator: &str,
    form: &str,
    seed: u64,
) -> Result<SummaryStats> {
    let in_window: Vec<f64> = record
        .rows
        .iter()
        .filter(|r| r.t >= window.0 - 1e-12 && r.t <= window.1 + 1e-12)
        .map(|r| r.dist)
        .collect();
    if in_window.is_empty() {
        return Err(SimError::EmptyWindow(window.0, window.1));
    }
    let n = in_window.len() as f64;
    let mean = in_window.iter().sum::<f64>() / n;
    let var = in_window.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;

    // Envelope verdict: every sample after the initial instant.
    let dist: Vec<f64> = record.rows.iter().skip(1).map(|r| r.dist).collect();
    let xi: Vec<f64> = record.rows.iter().skip(1).map(|r| r.xi).collect();
    let report = envelope_check(&dist, &xi);
    let first_breach_t = report.first_breach.map(|i| record.rows[i + 1].t);

    let saturated = record.rows.iter().filter(|r| r.saturated).count();
    Ok(SummaryStats {
        estimator: estimator.into(),
        form: form.into(),
        seed,
        window_start: window.0,
        window_end: window.1,
        n_window_samples: in_window.len(),
        mean_dist: mean,
        std_dist: var.sqrt(),
        final_dist: record.rows.last().map(|r| r.dist).unwrap_or(f64::NAN),
        envelope_pass: report.passed(),
        first_breach_t,
        saturated_steps: saturated,
    })
}

struct StepResult {
    next: FilterState,
    terms: CorrectionTerms,
}

fn run_single(cfg: &ResolvedConfig, kind: EstimatorKind, seed: u64) -> Result<RunOutcome> {
    let mut rng = RngStream::from_seed(seed);
    let mut truth = TruthState::new(cfg.r_true0, cfg.profile.omega(0.0));
    let mut state = match cfg.form {
        Form::Quaternion => FilterState::Quat(QuatEstimatorState::new(
            cfg.r_hat0.to_quaternion(),
            cfg.b_hat0,
            cfg.sigma_hat0,
        )),
        _ => FilterState::Matrix(EstimatorState::new(cfg.r_hat0, cfg.b_hat0, cfg.sigma_hat0)),
    };

    let mut rows = Vec::with_capacity(cfg.steps + 1);
    let mut first_breach: Option<(usize, f64, f64)> = None;

    // Vector-sensor deviations under the configured noise convention. The
    // increment reading scales per-sample noise by sqrt(dt), keeping the
    // integrated effect step-size invariant.
    let sensor_scale = match cfg.sensor_noise_mode {
        NoiseMode::Sampled => 1.0,
        NoiseMode::EulerMaruyama => cfg.dt.sqrt(),
    };
    let sensors: Vec<_> = cfg
        .sensors
        .iter()
        .map(|s| {
            let mut s = *s;
            s.noise_std *= sensor_scale;
            s
        })
        .collect();

    for k in 0..=cfg.steps {
        let t = k as f64 * cfg.dt;

        // Measurement synthesis; identical draw order for every estimator.
        let omega_m = gyro_measure(&truth.omega, &cfg.gyro, cfg.dt, &mut rng);
        let mut observations = Vec::with_capacity(sensors.len());
        for s in &sensors {
            let obs = vector_measure(&truth.rotation, s, &mut rng)
                .map_err(|source| SimError::Estimator { step: k, t, source })?;
            observations.push(obs);
        }
        let set = ObservationSet::new(observations)
            .map_err(|source| SimError::Estimator { step: k, t, source })?;
        let set = if set.len() == 2 {
            set.augment_with_cross(cfg.cross_weight)
                .map_err(|source| SimError::Estimator { step: k, t, source })?
        } else {
            set
        };

        // Snapshot at t_k; the row describes the state before stepping.
        let r_hat = state.rotation();
        let b_hat = state.b_hat();
        let sigma_hat = state.sigma_hat();

        // Filter evaluation and (except at the final sample) the step.
        let terms = match advance(cfg, kind, &state, &omega_m, &set, k, t) {
            Ok(r) => {
                if k < cfg.steps {
                    state = r.next;
                    post_step(cfg, &mut state, k);
                }
                r.terms
            }
            Err(source) => return Err(SimError::Estimator { step: k, t, source }),
        };

        let dist_true = dist_identity(&(truth.rotation.transpose() * r_hat));
        let (xi, _) = cfg.ppf.xi(t);
        if k > 0 && dist_true >= xi && first_breach.is_none() {
            first_breach = Some((k, dist_true, xi));
            if cfg.strict {
                return Err(SimError::EnvelopeBreach {
                    step: k,
                    t,
                    dist: dist_true,
                    xi,
                });
            }
        }
        rows.push(TrajectoryRow {
            t,
            dist: dist_true,
            xi,
            e: terms.e,
            mu: terms.mu,
            euler_true: truth.rotation.to_euler(),
            euler_est: r_hat.to_euler(),
            b_hat,
            sigma_hat,
            w_norm: terms.w.norm(),
            saturated: terms.saturated,
        });

        if k < cfg.steps {
            truth = truth.step(cfg.dt);
            truth.omega = cfg.profile.omega(truth.t);
        }
    }

    let record = TrajectoryRecord { rows };
    let summary = summarize_tagged(
        &record,
        cfg.summary_window,
        kind_tag(kind),
        form_tag(cfg.form),
        seed,
    )?;
    Ok(RunOutcome {
        tag: format!("{}_{}", kind_tag(kind), form_tag(cfg.form)),
        record,
        summary,
    })
}

fn advance(
    cfg: &ResolvedConfig,
    kind: EstimatorKind,
    state: &FilterState,
    omega_m: &Vector3,
    set: &ObservationSet,
    k: usize,
    t: f64,
) -> std::result::Result<StepResult, Error> {
    match (state, cfg.form) {
        (FilterState::Matrix(s), Form::Continuous) => {
            let (next, terms) = match (kind, cfg.integrator) {
                (EstimatorKind::Semi, Integrator::Euler) => {
                    let r_y = set.reconstruct_svd()?;
                    let d = estimators::semi_direct_derivs(s, omega_m, &r_y, &cfg.ppf, t, &cfg.gains)?;
                    (estimators::step_continuous(s, &d, cfg.dt), d.terms)
                }
                (EstimatorKind::Semi, Integrator::Rk4) => {
                    let r_y = set.reconstruct_svd()?;
                    estimators::step_semi_rk4(s, omega_m, &r_y, &cfg.ppf, t, cfg.dt, &cfg.gains)?
                }
                (EstimatorKind::Direct, Integrator::Euler) => {
                    let d = estimators::direct_derivs(s, omega_m, set, &cfg.ppf, t, &cfg.gains)?;
                    (estimators::step_continuous(s, &d, cfg.dt), d.terms)
                }
                (EstimatorKind::Direct, Integrator::Rk4) => {
                    estimators::step_direct_rk4(s, omega_m, set, &cfg.ppf, t, cfg.dt, &cfg.gains)?
                }
                (EstimatorKind::Both, _) => unreachable!("expanded before dispatch"),
            };
            Ok(StepResult {
                next: FilterState::Matrix(next),
                terms,
            })
        }
        (FilterState::Matrix(s), Form::Discrete) => {
            let (next, terms) = match kind {
                EstimatorKind::Semi => {
                    let r_y = set.reconstruct_svd()?;
                    estimators::step_discrete_semi(
                        s,
                        omega_m,
                        &r_y,
                        k as u64,
                        cfg.dt,
                        &cfg.ppf,
                        &cfg.gains,
                        cfg.discrete_mode,
                    )?
                }
                EstimatorKind::Direct => estimators::step_discrete_direct(
                    s,
                    omega_m,
                    set,
                    k as u64,
                    cfg.dt,
                    &cfg.ppf,
                    &cfg.gains,
                    cfg.discrete_mode,
                )?,
                EstimatorKind::Both => unreachable!("expanded before dispatch"),
            };
            Ok(StepResult {
                next: FilterState::Matrix(next),
                terms,
            })
        }
        (FilterState::Quat(s), _) => {
            let d = match kind {
                EstimatorKind::Semi => {
                    let q_y = set.reconstruct_davenport()?;
                    estimators::quat_semi_direct_derivs(s, omega_m, &q_y, &cfg.ppf, t, &cfg.gains)?
                }
                EstimatorKind::Direct => {
                    estimators::quat_direct_derivs(s, omega_m, set, &cfg.ppf, t, &cfg.gains)?
                }
                EstimatorKind::Both => unreachable!("expanded before dispatch"),
            };
            let next = estimators::step_quat_continuous(s, &d, cfg.dt)?;
            Ok(StepResult {
                next: FilterState::Quat(next),
                terms: d.terms,
            })
        }
        (FilterState::Matrix(_), Form::Quaternion) => {
            unreachable!("quaternion form uses quaternion state")
        }
    }
}

fn post_step(cfg: &ResolvedConfig, state: &mut FilterState, k: usize) {
    if cfg.clamp_sigma {
        match state {
            FilterState::Matrix(s) => s.sigma_hat = s.sigma_hat.sup(&Vector3::zeros()),
            FilterState::Quat(s) => s.sigma_hat = s.sigma_hat.sup(&Vector3::zeros()),
        }
    }
    if cfg.reproject_every > 0 && (k + 1).is_multiple_of(cfg.reproject_every) {
        if let FilterState::Matrix(s) = state {
            if let Ok(repaired) = project_so3(s.r_hat.matrix()) {
                s.r_hat = repaired;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use so3_ppf::repr::EulerAngles;

    fn row(t: f64, dist: f64, xi: f64) -> TrajectoryRow {
        let euler = EulerAngles {
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
            gimbal_lock: false,
        };
        TrajectoryRow {
            t,
            dist,
            xi,
            e: 0.0,
            mu: 0.0,
            euler_true: euler,
            euler_est: euler,
            b_hat: Vector3::zeros(),
            sigma_hat: Vector3::zeros(),
            w_norm: 0.0,
            saturated: false,
        }
    }

    #[test]
    fn summarize_constant_series_has_zero_std() {
        let record = TrajectoryRecord {
            rows: (0..5).map(|k| row(k as f64, 0.25, 1.0)).collect(),
        };
        let s = summarize(&record, (0.0, 4.0)).unwrap();
        assert_eq!(s.mean_dist, 0.25);
        assert_eq!(s.std_dist, 0.0);
        assert!(s.envelope_pass);
    }

    #[test]
    fn summarize_two_point_mean() {
        let record = TrajectoryRecord {
            rows: vec![row(0.0, 0.0, 1.0), row(1.0, 0.02, 1.0)],
        };
        let s = summarize(&record, (0.0, 1.0)).unwrap();
        assert!((s.mean_dist - 0.01).abs() < 1e-15);
        assert!((s.std_dist - 0.01).abs() < 1e-15);
    }

    #[test]
    fn summarize_reports_breach_time_and_skips_initial_sample() {
        // A breach at the very first sample is ignored (t = 0), later ones
        // are reported with their time.
        let record = TrajectoryRecord {
            rows: vec![
                row(0.0, 1.5, 1.0),
                row(1.0, 0.5, 1.0),
                row(2.0, 1.2, 1.0),
            ],
        };
        let s = summarize(&record, (0.0, 2.0)).unwrap();
        assert!(!s.envelope_pass);
        assert_eq!(s.first_breach_t, Some(2.0));
    }

    #[test]
    fn summarize_rejects_empty_window() {
        let record = TrajectoryRecord {
            rows: vec![row(0.0, 0.1, 1.0)],
        };
        assert!(matches!(
            summarize(&record, (5.0, 6.0)),
            Err(SimError::EmptyWindow(_, _))
        ));
    }
}
