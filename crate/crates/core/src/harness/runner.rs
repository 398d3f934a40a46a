//! Monte-Carlo benchmark runner: shared truth, per-trial noise streams,
//! per-filter folds and metric aggregation.

use super::config::{ConfigError, FilterKind, FilterSpec, RunConfig};
use super::metrics::{armse, reporting_error, rmse, MetricsError};
use crate::dynamics::{
    average_imu, default_imu_noise, generate_truth, propagate, reference_initial_state,
    reference_scenario,
    synthesize_imu, DynamicsError, ImuSample, NavState, ProcessNoiseSpec, Scenario, StateVector,
    TruthSeries,
};
use crate::filters::{mse_update, BasisMode, EngineKind, SqrtBelief};
use crate::geodesy::{wrap_angle, EarthModel};
use crate::mcc::{mc_update, MccConfig};
use crate::sensors::{
    synthesize_measurements, ApsGeometry, MeasurementNoise, MeasurementVector, ModelKind,
    SensorError,
};
use nalgebra::{DMatrix, DVector, SVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::cell::Cell;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Sub-stream purposes of the counter-based seeding scheme. Streams are
/// `trial * STREAM_STRIDE + purpose` on a single master-seeded cipher,
/// so adding filters or purposes never perturbs existing draws.
const STREAM_STRIDE: u64 = 8;
const PURPOSE_IMU: u64 = 0;
const PURPOSE_MEASUREMENT: u64 = 1;

fn stream_rng(seed: u64, trial: u64, purpose: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(trial * STREAM_STRIDE + purpose);
    rng
}

/// Robustness counters of one filter fold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FoldStats {
    /// Steps where a non-finite factor or a failed solve occurred.
    pub factorization_failures: usize,
    /// Sigma/collocation points that could not be propagated and were
    /// passed through unchanged.
    pub propagation_fallbacks: usize,
    /// Fixed-point iterations that hit the cap without converging.
    pub fpi_nonconverged: usize,
    /// Total fixed-point iterations.
    pub fpi_iterations: usize,
    /// Measurement updates performed.
    pub updates: usize,
}

impl FoldStats {
    fn absorb(&mut self, other: &FoldStats) {
        self.factorization_failures += other.factorization_failures;
        self.propagation_fallbacks += other.propagation_fallbacks;
        self.fpi_nonconverged += other.fpi_nonconverged;
        self.fpi_iterations += other.fpi_iterations;
        self.updates += other.updates;
    }
}

/// The benchmark initialization: biased position, a 25 m depth error
/// (depth is positive down, so the guess sits halfway up the water
/// column) and a diagonal initial covariance.
pub fn initial_belief() -> SqrtBelief {
    let mean = DVector::from_column_slice(&[
        18.944_f64.to_radians(),
        72.853_f64.to_radians(),
        25.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ]);
    let std = [
        0.898_f64.to_radians(),
        0.898_f64.to_radians(),
        10.0,
        2.0,
        2.0,
        2.0,
        1.0_f64.to_radians(),
        1.0_f64.to_radians(),
        5.0_f64.to_radians(),
    ];
    let sqrt = DMatrix::from_diagonal(&DVector::from_iterator(9, std.iter().copied()));
    SqrtBelief::new(mean, sqrt)
}

/// Engine for a filter spec, with the run-level basis as fallback.
pub fn build_engine(spec: &FilterSpec, default_basis: BasisMode) -> EngineKind {
    let basis = spec.basis.unwrap_or(default_basis);
    let kappa = spec.kappa.unwrap_or(3.0 - 9.0);
    match spec.kind {
        FilterKind::Ukf | FilterKind::McUkf => EngineKind::Ukf { kappa },
        FilterKind::Ckf | FilterKind::McCkf => EngineKind::Ckf,
        FilterKind::Pckf | FilterKind::McPckf => EngineKind::Pckf { mode: basis },
    }
}

fn state_selector(kind: ModelKind) -> impl Fn(&DVector<f64>) -> DVector<f64> {
    move |x: &DVector<f64>| {
        let mut v = vec![x[3], x[4], x[5], x[2], x[6], x[7], x[8]];
        if kind == ModelKind::ModelII {
            v.push(x[0]);
            v.push(x[1]);
        }
        DVector::from_vec(v)
    }
}

fn wrap_mean_angles(mean: &mut DVector<f64>) {
    for i in [1usize, 6, 7, 8] {
        mean[i] = wrap_angle(mean[i]);
    }
}

/// Estimate series of one filter over one trial, aligned with the
/// measurement times.
pub struct FilterFold {
    pub estimates: Vec<NavState>,
    pub stats: FoldStats,
}

/// Fold one filter over a trial's IMU and measurement streams.
pub fn run_filter(
    spec: &FilterSpec,
    basis: BasisMode,
    imu: &[ImuSample],
    measurements: &[MeasurementVector],
    noise: &MeasurementNoise,
    earth: &EarthModel,
) -> FilterFold {
    let engine = build_engine(spec, basis);
    let q = ProcessNoiseSpec::standard(earth);
    let sqrt_q = DMatrix::from_diagonal(&DVector::from_iterator(
        9,
        q.diag.iter().map(|v| v.sqrt()),
    ));
    let mcc = spec.sigma.map(MccConfig::with_sigma);
    let mut belief = initial_belief();
    let mut stats = FoldStats::default();
    let mut estimates = Vec::with_capacity(measurements.len());
    let fallbacks = Cell::new(0usize);

    for (k, meas) in measurements.iter().enumerate() {
        let sample = &imu[k];
        let f = |x: &DVector<f64>| {
            let sv: StateVector = SVector::from_iterator(x.iter().copied());
            match propagate(&NavState::from_vector(&sv), sample, 1.0, earth) {
                Ok(next) => next.to_dvector(),
                Err(_) => {
                    fallbacks.set(fallbacks.get() + 1);
                    x.clone()
                }
            }
        };
        let predicted = match engine.predict(&belief, &f, &sqrt_q) {
            Ok(p) if p.is_finite() => p,
            _ => {
                stats.factorization_failures += 1;
                belief.clone()
            }
        };

        let kind = meas.kind;
        let h = state_selector(kind);
        let r_diag = noise.equivalent_cov_diag(kind);
        let angular = kind.angular_mask();
        let updated = match &mcc {
            Some(cfg) => match mc_update(
                &predicted,
                &engine,
                &h,
                &meas.values,
                &r_diag,
                &angular,
                cfg,
            ) {
                Ok(out) => {
                    stats.fpi_iterations += out.iterations;
                    if !out.converged {
                        stats.fpi_nonconverged += 1;
                    }
                    Some(out.belief)
                }
                Err(_) => None,
            },
            None => engine
                .measurement_stats(&predicted, &h, kind.dim())
                .and_then(|s| mse_update(&predicted, &s, &r_diag, &meas.values, &angular))
                .ok(),
        };
        belief = match updated {
            Some(b) if b.is_finite() => b,
            _ => {
                stats.factorization_failures += 1;
                predicted
            }
        };
        wrap_mean_angles(&mut belief.mean);
        stats.updates += 1;
        let sv: StateVector = SVector::from_iterator(belief.mean.iter().copied());
        estimates.push(NavState::from_vector(&sv));
    }
    stats.propagation_fallbacks = fallbacks.get();
    FilterFold { estimates, stats }
}

/// Scenario and noise resolved from the config (built-in references by
/// default).
pub struct ResolvedInputs {
    pub scenario: Scenario,
    pub noise: MeasurementNoise,
    pub earth: EarthModel,
    pub geometry: ApsGeometry,
}

pub fn resolve_inputs(cfg: &RunConfig) -> Result<ResolvedInputs, ConfigError> {
    let earth = EarthModel::default();
    let scenario = match &cfg.scenario {
        Some(path) => super::config::load_scenario(path)?,
        None => reference_scenario(&earth),
    };
    let noise = match &cfg.noise {
        Some(path) => super::config::load_noise(path)?,
        None => MeasurementNoise::benchmark(),
    };
    Ok(ResolvedInputs {
        scenario,
        noise,
        earth,
        geometry: ApsGeometry::reference(),
    })
}

/// Everything one trial shares across filters: the 1 Hz truth decimation
/// and the noisy sensor streams.
pub struct TrialData {
    pub truth_1hz: Vec<NavState>,
    pub imu: Vec<ImuSample>,
    pub measurements: Vec<MeasurementVector>,
}

/// Synthesize the sensor streams of one trial. Every filter in the trial
/// consumes these byte-identical streams.
pub fn make_trial(
    inputs: &ResolvedInputs,
    truth: &TruthSeries,
    cfg: &RunConfig,
    trial: u64,
) -> Result<TrialData, RunError> {
    let truth_1hz = truth.at_one_hz();
    let one_hz = TruthSeries { dt: 1.0, states: truth_1hz.clone() };
    let mut imu_rng = stream_rng(cfg.seed, trial, PURPOSE_IMU);
    let imu_fine = synthesize_imu(
        truth,
        &inputs.scenario,
        default_imu_noise(&inputs.earth),
        &inputs.earth,
        &mut imu_rng,
    );
    let imu = average_imu(&imu_fine, (1.0 / truth.dt).round() as usize);
    let mut meas_rng = stream_rng(cfg.seed, trial, PURPOSE_MEASUREMENT);
    let measurements = synthesize_measurements(
        &one_hz,
        &inputs.noise,
        &inputs.geometry,
        cfg.aps_cutoff,
        &inputs.earth,
        &mut meas_rng,
    )?;
    Ok(TrialData { truth_1hz, imu, measurements })
}

/// Aggregated benchmark output for one filter.
pub struct FilterResult {
    pub spec: FilterSpec,
    pub rmse: Vec<[f64; 9]>,
    pub armse: [f64; 9],
    pub stats: FoldStats,
    pub wall_seconds: f64,
}

/// Whole-benchmark output.
pub struct BenchResult {
    pub filters: Vec<FilterResult>,
    /// Time of the first measurement, seconds.
    pub t0: f64,
    pub steps: usize,
    pub mc_runs: usize,
    pub seed: u64,
}

/// Run the full Monte-Carlo comparison. Trials execute in parallel with
/// independent derived streams; aggregation is ordered by trial index,
/// so the result is independent of scheduling.
pub fn bench(cfg: &RunConfig) -> Result<BenchResult, RunError> {
    cfg.validate()?;
    let inputs = resolve_inputs(cfg)?;
    let truth = generate_truth(
        &inputs.scenario,
        &reference_initial_state(),
        cfg.dt_truth,
        &inputs.earth,
    )?;

    let trials: Vec<TrialData> = (0..cfg.mc_runs as u64)
        .into_par_iter()
        .map(|trial| make_trial(&inputs, &truth, cfg, trial))
        .collect::<Result<_, _>>()?;

    let mut filters = Vec::with_capacity(cfg.filters.len());
    for spec in &cfg.filters {
        let started = std::time::Instant::now();
        let folds: Vec<FilterFold> = trials
            .par_iter()
            .map(|trial| {
                run_filter(
                    spec,
                    cfg.basis,
                    &trial.imu,
                    &trial.measurements,
                    &inputs.noise,
                    &inputs.earth,
                )
            })
            .collect();
        let wall_seconds = started.elapsed().as_secs_f64();

        let mut stats = FoldStats::default();
        let mut errors = Vec::with_capacity(folds.len());
        for (fold, trial) in folds.iter().zip(&trials) {
            stats.absorb(&fold.stats);
            let run_errors: Vec<[f64; 9]> = fold
                .estimates
                .iter()
                .zip(trial.measurements.iter())
                .map(|(est, meas)| {
                    let truth_state = &trial.truth_1hz[meas.t as usize];
                    reporting_error(est, truth_state, &inputs.earth)
                })
                .collect();
            errors.push(run_errors);
        }
        let series = rmse(&errors, cfg.rmse_form)?;
        let table = armse(&series)?;
        filters.push(FilterResult {
            spec: spec.clone(),
            rmse: series,
            armse: table,
            stats,
            wall_seconds,
        });
    }

    let t0 = trials[0].measurements.first().map(|m| m.t).unwrap_or(1.0);
    let steps = trials[0].measurements.len();
    Ok(BenchResult { filters, t0, steps, mc_runs: cfg.mc_runs, seed: cfg.seed })
}
