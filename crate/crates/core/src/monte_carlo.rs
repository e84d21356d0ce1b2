//! Full piecemeal trials and failure-probability estimates.
//!
//! Every trial draws from its own ChaCha stream keyed by
//! `(master seed, domain, M, trial index)`, so results do not depend on
//! thread scheduling and no two trials share random numbers.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{finite, Error, Result};
use crate::interference::{
    expected_record, quadrant, simulate_baseline, AsymptoticDrift, DetectionRecord, NoiseModel,
    PhaseRecovery,
};
use crate::modular::{precision_bounds, reconstruct_observed, wrap_turn, ArrayConfig};

/// Stream domain of plain piecemeal trials.
pub const DOMAIN_PIECEMEAL: u64 = 0;
/// Stream domain of reference-object trials.
pub const DOMAIN_REFERENCE: u64 = 1;

/// Deterministic generator for one trial. Distinct `(master, domain, key,
/// trial)` tuples never share a stream.
pub fn trial_rng(master: u64, domain: u64, key: u64, trial: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master.to_le_bytes());
    seed[8..16].copy_from_slice(&domain.to_le_bytes());
    seed[16..24].copy_from_slice(&key.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(trial);
    rng
}

/// Distance used to decide whether an estimate is close enough.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distance {
    /// Shortest way around the circle.
    #[default]
    Circular,
    /// Plain `|a - b|`, which counts wrap-around estimates as failures.
    Linear,
}

impl Distance {
    pub fn between(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        match self {
            Distance::Circular => {
                let d = d.rem_euclid(TAU);
                d.min(TAU - d)
            }
            Distance::Linear => d,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Distance::Circular => "circular",
            Distance::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "circular" => Some(Distance::Circular),
            "linear" => Some(Distance::Linear),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialOptions {
    pub recovery: PhaseRecovery,
    pub distance: Distance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub true_phi1: f64,
    pub estimated_phi1: f64,
    pub success: bool,
    /// True phases reduced into `[0, 2π)`.
    pub exact_phases: Vec<f64>,
    pub observed_phases: Vec<f64>,
    /// Empty for asymptotic trials.
    pub records: Vec<DetectionRecord>,
}

impl TrialOutcome {
    /// Whether every observed phase sits in the quadrant of its exact value.
    pub fn quadrants_agree(&self) -> bool {
        self.exact_phases
            .iter()
            .zip(&self.observed_phases)
            .all(|(&exact, &obs)| quadrant(exact).ok() == quadrant(obs).ok())
    }
}

fn check_angle(theta: f64, config: &ArrayConfig) -> Result<()> {
    finite("angle", theta)?;
    if theta < 0.0 || theta >= config.theta_bar_rad() {
        return Err(Error::OutOfRange {
            name: "angle",
            value: theta,
            range: "[0, θ̄)",
        });
    }
    Ok(())
}

fn classify(
    theta: f64,
    config: &ArrayConfig,
    observed_phases: Vec<f64>,
    records: Vec<DetectionRecord>,
    opts: TrialOptions,
) -> Result<TrialOutcome> {
    let exact_phases: Vec<f64> = (1..=config.k_count())
        .map(|k| wrap_turn(config.phase_at(k, theta)))
        .collect();
    let recon = reconstruct_observed(&observed_phases, config)?;
    let true_phi1 = exact_phases[0];
    let success = opts.distance.between(recon.phi1_rad, true_phi1) <= recon.delta_phi_bound_rad;
    Ok(TrialOutcome {
        true_phi1,
        estimated_phi1: recon.phi1_rad,
        success,
        exact_phases,
        observed_phases,
        records,
    })
}

/// One finite-sample trial with `m` events per data set on every baseline.
pub fn run_trial<R: Rng + ?Sized>(
    theta: f64,
    config: &ArrayConfig,
    noise: &NoiseModel,
    m: u64,
    opts: TrialOptions,
    rng: &mut R,
) -> Result<TrialOutcome> {
    check_angle(theta, config)?;
    if m == 0 {
        return Err(Error::EmptySample { name: "M" });
    }
    let mut records = Vec::with_capacity(config.k_count());
    let mut observed = Vec::with_capacity(config.k_count());
    for k in 1..=config.k_count() {
        let record = simulate_baseline(config.phase_at(k, theta), m, noise, rng);
        observed.push(record.extract_phase(opts.recovery)?.phase_rad);
        records.push(record);
    }
    classify(theta, config, observed, records, opts)
}

/// Trial with expected counts instead of samples. `drift(k)` gives the drift
/// seen by baseline `k` (1-based).
pub fn run_trial_asymptotic(
    theta: f64,
    config: &ArrayConfig,
    noise: &NoiseModel,
    drift: impl Fn(usize) -> AsymptoticDrift,
    opts: TrialOptions,
) -> Result<TrialOutcome> {
    check_angle(theta, config)?;
    let observed = (1..=config.k_count())
        .map(|k| {
            expected_record(config.phase_at(k, theta), noise, drift(k))
                .extract_phase(opts.recovery)
                .map(|est| est.phase_rad)
        })
        .collect::<Result<Vec<f64>>>()?;
    classify(theta, config, observed, Vec::new(), opts)
}

/// Draws `θ` so that `φ_1` is uniform on `[0, 2π)`.
pub fn uniform_angle<R: Rng + ?Sized>(config: &ArrayConfig, rng: &mut R) -> f64 {
    let theta = rng.random::<f64>() * config.theta_bar_rad();
    if theta >= config.theta_bar_rad() {
        0.0
    } else {
        theta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FailureCount {
    pub failures: u64,
    pub trials: u64,
}

impl FailureCount {
    pub fn eps_mean(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.failures as f64 / self.trials as f64
        }
    }

    /// Binomial standard error of [`eps_mean`](Self::eps_mean).
    pub fn eps_stderr(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let p = self.eps_mean();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Failure fraction over `trials` trials with uniformly drawn `φ_1`.
pub fn average_failure(
    config: &ArrayConfig,
    noise: &NoiseModel,
    m: u64,
    trials: u64,
    seed: u64,
    opts: TrialOptions,
) -> Result<FailureCount> {
    noise.validate()?;
    if trials == 0 {
        return Err(Error::EmptySample { name: "trials" });
    }
    let failures = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, DOMAIN_PIECEMEAL, m, t);
            let theta = uniform_angle(config, &mut rng);
            run_trial(theta, config, noise, m, opts, &mut rng).map(|o| u64::from(!o.success))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(FailureCount { failures, trials })
}

/// Fiber transmittance `η(l) = 10^(-α l / l0)`.
pub fn attenuation(l_m: f64, noise: &NoiseModel) -> Result<f64> {
    finite("fiber length", l_m)?;
    if l_m < 0.0 {
        return Err(Error::OutOfRange {
            name: "fiber length",
            value: l_m,
            range: "[0, ∞)",
        });
    }
    Ok(10f64.powf(-noise.alpha * l_m / noise.l0_m))
}

/// Incident photons needed for `m` detections per data set on every
/// baseline, with the beam splitter halfway along each fiber:
/// `N = Σ_k 2M / η(L_k / 2)`.
pub fn photon_budget(m: u64, config: &ArrayConfig, noise: &NoiseModel) -> f64 {
    config
        .baselines_m()
        .map(|l| {
            let eta = attenuation(0.5 * l, noise).expect("baseline lengths are positive");
            2.0 * m as f64 / eta
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub m: u64,
    pub n_photons: f64,
    pub count: FailureCount,
    pub seed: u64,
}

impl SweepRow {
    pub fn eps_mean(&self) -> f64 {
        self.count.eps_mean()
    }

    pub fn eps_stderr(&self) -> f64 {
        self.count.eps_stderr()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub config: ArrayConfig,
    pub noise: NoiseModel,
    pub options: TrialOptions,
}

impl SweepResult {
    pub fn delta_bounds(&self) -> (f64, f64) {
        precision_bounds(&self.config)
    }
}

/// Checks that a grid of per-data-set counts is non-empty and strictly
/// increasing.
pub fn validate_grid(grid: &[u64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("M grid is empty".into()));
    }
    if grid[0] == 0 {
        return Err(Error::EmptySample { name: "M" });
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "M grid must be strictly increasing, got {grid:?}"
        )));
    }
    Ok(())
}

/// One row per grid value of `M`.
pub fn sweep(
    config: &ArrayConfig,
    noise: &NoiseModel,
    grid: &[u64],
    trials: u64,
    seed: u64,
    opts: TrialOptions,
) -> Result<SweepResult> {
    validate_grid(grid)?;
    let rows = grid
        .iter()
        .map(|&m| {
            Ok(SweepRow {
                m,
                n_photons: photon_budget(m, config, noise),
                count: average_failure(config, noise, m, trials, seed, opts)?,
                seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        rows,
        config: *config,
        noise: *noise,
        options: opts,
    })
}
