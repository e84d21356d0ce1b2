//! Differential measurement of a target against a nearby reference object.
//!
//! The target sits at `Γ = Γ_0 + θ_T` from the reference, with `Γ_0` known
//! and `θ_T ∈ [0, θ_0]` small. Both objects are observed on every baseline
//! and the known offset is removed:
//!
//! `Δ_k = Φ_T,k - Φ_R,k - (2π L_k / λ) sin Γ_0 ≈ (2π L_k / λ) cos Γ_0 sin θ_T`
//!
//! `Δ_k` doubles along the ladder just like the plain phases, so the same
//! reconstruction recovers `Δ_1`. Channel drift common to both objects
//! cancels in the difference.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{finite, in_turn, Error, Result};
use crate::interference::{
    click_probabilities, expected_record, flip_record, gaussian, sample_counts, sample_pair_counts,
    AsymptoticDrift, DetectionRecord, DriftMode, NoiseModel,
};
use crate::modular::{reconstruct_phase, wrap_turn, ArrayConfig};
use crate::monte_carlo::{
    photon_budget, trial_rng, validate_grid, FailureCount, SweepResult, SweepRow, TrialOptions,
    TrialOutcome, DOMAIN_REFERENCE,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceScenario {
    /// Known coarse target-reference angle `Γ_0`.
    pub gamma0_rad: f64,
    /// Unknown small offset `θ_T`.
    pub theta_t_rad: f64,
    /// Known upper bound `θ_0` on the offset.
    pub theta0_rad: f64,
    /// Misalignment `θ_R` of the baselines against the reference wavefront.
    pub theta_r_rad: f64,
}

impl ReferenceScenario {
    pub fn new(
        gamma0_rad: f64,
        theta_t_rad: f64,
        theta0_rad: f64,
        theta_r_rad: f64,
    ) -> Result<Self> {
        let s = Self {
            gamma0_rad,
            theta_t_rad,
            theta0_rad,
            theta_r_rad,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        finite("Γ0", self.gamma0_rad)?;
        finite("θ_T", self.theta_t_rad)?;
        finite("θ0", self.theta0_rad)?;
        finite("θ_R", self.theta_r_rad)?;
        if self.theta0_rad <= 0.0 {
            return Err(Error::OutOfRange {
                name: "θ0",
                value: self.theta0_rad,
                range: "(0, ∞)",
            });
        }
        if !(0.0..=self.theta0_rad).contains(&self.theta_t_rad) {
            return Err(Error::OutOfRange {
                name: "θ_T",
                value: self.theta_t_rad,
                range: "[0, θ0]",
            });
        }
        Ok(())
    }

    pub fn with_offset(mut self, theta_t_rad: f64) -> Self {
        self.theta_t_rad = theta_t_rad;
        self
    }

    /// `Φ_R,k = (2π L_k / λ) sin θ_R`.
    pub fn reference_phase(&self, k: usize, config: &ArrayConfig) -> f64 {
        wavenumber_length(k, config) * self.theta_r_rad.sin()
    }

    /// `Φ_T,k = (2π L_k / λ) sin(Γ_0 + θ_T + θ_R)`.
    pub fn target_phase(&self, k: usize, config: &ArrayConfig) -> f64 {
        wavenumber_length(k, config) * (self.gamma0_rad + self.theta_t_rad + self.theta_r_rad).sin()
    }

    /// `Δ_k` evaluated without cancellation between the large phase terms.
    pub fn exact_delta(&self, k: usize, config: &ArrayConfig) -> f64 {
        let c = wavenumber_length(k, config);
        let a = self.gamma0_rad + self.theta_r_rad;
        let b = self.theta_t_rad;
        // sin(a + b) - sin(a) and sin(a) - sin(Γ0) - sin(θ_R), each by sum-to-product
        let target_step = 2.0 * (a + 0.5 * b).cos() * (0.5 * b).sin();
        let gamma_step =
            2.0 * (self.gamma0_rad + 0.5 * self.theta_r_rad).cos() * (0.5 * self.theta_r_rad).sin();
        c * (target_step + gamma_step - self.theta_r_rad.sin())
    }

    /// Small-angle form `(2π L_k / λ) cos Γ_0 sin θ_T`.
    pub fn small_angle_delta(&self, k: usize, config: &ArrayConfig) -> f64 {
        wavenumber_length(k, config) * self.gamma0_rad.cos() * self.theta_t_rad.sin()
    }

    /// Largest `Δ_1` allowed by the prior, `(2π L_1 / λ) cos Γ_0 sin θ_0`.
    pub fn max_delta1(&self, config: &ArrayConfig) -> f64 {
        wavenumber_length(1, config) * self.gamma0_rad.cos() * self.theta0_rad.sin()
    }

    /// Known phase `(2π L_k / λ) sin Γ_0` removed from each difference.
    fn known_offset(&self, k: usize, config: &ArrayConfig) -> f64 {
        wavenumber_length(k, config) * self.gamma0_rad.sin()
    }
}

fn wavenumber_length(k: usize, config: &ArrayConfig) -> f64 {
    TAU * config.lk_m(k) / config.wavelength_m()
}

/// `Δ_k = Φ_T,k - Φ_R,k - (2π L_k / λ) sin Γ_0` from the two phases.
pub fn delta_k(
    phi_t: f64,
    phi_r: f64,
    k: usize,
    scenario: &ReferenceScenario,
    config: &ArrayConfig,
) -> f64 {
    phi_t - phi_r - scenario.known_offset(k, config)
}

/// Observed `Δ̂_k` in `[0, 2π)` from two wrapped phase estimates.
pub fn observed_delta(
    obs_t: f64,
    obs_r: f64,
    k: usize,
    scenario: &ReferenceScenario,
    config: &ArrayConfig,
) -> Result<f64> {
    in_turn("target phase", obs_t)?;
    in_turn("reference phase", obs_r)?;
    let offset = wrap_turn(scenario.known_offset(k, config));
    Ok(wrap_turn(obs_t - obs_r - offset))
}

/// Recovers `Δ_1` from the wrapped differences; the same iteration as the
/// plain phases.
pub fn reconstruct_delta1(observed_deltas: &[f64]) -> Result<f64> {
    Ok(reconstruct_phase(observed_deltas)?.phi1_rad)
}

/// Inverts `(2π L_1 / λ) cos Γ_0 sin θ_T = Δ_1`.
///
/// Estimates beyond the prior range are unwrapped towards the nearer end and
/// the result is clamped into `[0, θ_0]`.
pub fn theta_t_from_delta1(
    delta1: f64,
    scenario: &ReferenceScenario,
    config: &ArrayConfig,
) -> Result<f64> {
    in_turn("Δ1", delta1)?;
    let max_phase = scenario.max_delta1(config);
    if max_phase.is_nan() || max_phase >= TAU {
        return Err(Error::AmbiguousWrap { max_phase });
    }
    let unwrapped = if delta1 > 0.5 * (max_phase + TAU) {
        delta1 - TAU
    } else {
        delta1
    };
    let scale = wavenumber_length(1, config) * scenario.gamma0_rad.cos();
    let ratio = (unwrapped / scale).clamp(-1.0, 1.0);
    Ok(ratio.asin().clamp(0.0, scenario.theta0_rad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOutcome {
    /// Carries `Δ_1` in place of `φ_1`.
    pub trial: TrialOutcome,
    pub theta_t_rad: f64,
    pub theta_t_estimate_rad: f64,
}

fn finish(
    scenario: &ReferenceScenario,
    config: &ArrayConfig,
    observed: Vec<f64>,
    records: Vec<DetectionRecord>,
    opts: TrialOptions,
) -> Result<ReferenceOutcome> {
    let exact: Vec<f64> = (1..=config.k_count())
        .map(|k| wrap_turn(scenario.exact_delta(k, config)))
        .collect();
    let recon = reconstruct_phase(&observed)?;
    let true_delta1 = exact[0];
    let success = opts.distance.between(recon.phi1_rad, true_delta1) <= recon.delta_phi_bound_rad;
    let theta_t_estimate_rad = theta_t_from_delta1(recon.phi1_rad, scenario, config)?;
    Ok(ReferenceOutcome {
        trial: TrialOutcome {
            true_phi1: true_delta1,
            estimated_phi1: recon.phi1_rad,
            success,
            exact_phases: exact,
            observed_phases: observed,
            records,
        },
        theta_t_rad: scenario.theta_t_rad,
        theta_t_estimate_rad,
    })
}

/// Mixes a common drift with an independent one so that the reference arm
/// keeps correlation `1 - decorrelation` with the target arm.
fn partner_drift<R: Rng + ?Sized>(common: f64, sigma: f64, decorrelation: f64, rng: &mut R) -> f64 {
    if decorrelation == 0.0 {
        return common;
    }
    let rho = 1.0 - decorrelation;
    rho * common + (1.0 - rho * rho).sqrt() * gaussian(sigma, rng)
}

/// Target and reference observed on every baseline with `m` events per data
/// set and arm. Drift hits both arms alike unless `decorrelation > 0`.
pub fn simulate_reference_run<R: Rng + ?Sized>(
    scenario: &ReferenceScenario,
    config: &ArrayConfig,
    noise: &NoiseModel,
    m: u64,
    decorrelation: f64,
    opts: TrialOptions,
    rng: &mut R,
) -> Result<ReferenceOutcome> {
    scenario.validate()?;
    if m == 0 {
        return Err(Error::EmptySample { name: "M" });
    }
    finite("decorrelation", decorrelation)?;
    if !(0.0..=1.0).contains(&decorrelation) {
        return Err(Error::OutOfRange {
            name: "decorrelation",
            value: decorrelation,
            range: "[0, 1]",
        });
    }
    let sigma = noise.sigma_rad;
    let mut observed = Vec::with_capacity(config.k_count());
    let mut records = Vec::with_capacity(2 * config.k_count());
    for k in 1..=config.k_count() {
        let phase_t = wrap_turn(scenario.target_phase(k, config));
        let phase_r = wrap_turn(scenario.reference_phase(k, config));

        let (clicks_t, clicks_r) = match noise.drift {
            DriftMode::PerDataSet | DriftMode::PerBaseline => {
                let d0 = gaussian(sigma, rng);
                let d1 = if noise.drift == DriftMode::PerDataSet {
                    gaussian(sigma, rng)
                } else {
                    d0
                };
                let r0 = partner_drift(d0, sigma, decorrelation, rng);
                let r1 = if noise.drift == DriftMode::PerDataSet {
                    partner_drift(d1, sigma, decorrelation, rng)
                } else {
                    r0
                };
                let t = (
                    sample_counts(click_probabilities(phase_t, d0).0, m, rng),
                    sample_counts(click_probabilities(phase_t, d1).1, m, rng),
                );
                let r = (
                    sample_counts(click_probabilities(phase_r, r0).0, m, rng),
                    sample_counts(click_probabilities(phase_r, r1).1, m, rng),
                );
                (t, r)
            }
            DriftMode::PerPhoton => {
                // photons of the two arms arrive in pairs sharing one drift draw
                let rho = 1.0 - decorrelation;
                let zero = sample_pair_counts((phase_t, phase_r), sigma, rho, m, rng);
                let quarter = sample_pair_counts(
                    (phase_t + FRAC_PI_2, phase_r + FRAC_PI_2),
                    sigma,
                    rho,
                    m,
                    rng,
                );
                ((zero.0, quarter.0), (zero.1, quarter.1))
            }
        };
        let rec_t = flip_record(clicks_t, m, noise, rng);
        let rec_r = flip_record(clicks_r, m, noise, rng);
        let obs_t = rec_t.extract_phase(opts.recovery)?.phase_rad;
        let obs_r = rec_r.extract_phase(opts.recovery)?.phase_rad;
        observed.push(observed_delta(obs_t, obs_r, k, scenario, config)?);
        records.push(rec_t);
        records.push(rec_r);
    }
    finish(scenario, config, observed, records, opts)
}

/// Infinite-count reference run; `common_drift(k)` is added to both arms and
/// both data sets of baseline `k`.
pub fn run_reference_asymptotic(
    scenario: &ReferenceScenario,
    config: &ArrayConfig,
    noise: &NoiseModel,
    common_drift: impl Fn(usize) -> f64,
    opts: TrialOptions,
) -> Result<ReferenceOutcome> {
    scenario.validate()?;
    let observed = (1..=config.k_count())
        .map(|k| {
            let drift = AsymptoticDrift::shared(common_drift(k));
            let obs_t = expected_record(scenario.target_phase(k, config), noise, drift)
                .extract_phase(opts.recovery)?
                .phase_rad;
            let obs_r = expected_record(scenario.reference_phase(k, config), noise, drift)
                .extract_phase(opts.recovery)?
                .phase_rad;
            observed_delta(obs_t, obs_r, k, scenario, config)
        })
        .collect::<Result<Vec<f64>>>()?;
    finish(scenario, config, observed, Vec::new(), opts)
}

/// Failure fraction with `θ_T` drawn uniformly from `[0, θ_0]`.
#[allow(clippy::too_many_arguments)]
pub fn reference_average_failure(
    base: &ReferenceScenario,
    config: &ArrayConfig,
    noise: &NoiseModel,
    m: u64,
    decorrelation: f64,
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
            let mut rng = trial_rng(seed, DOMAIN_REFERENCE, m, t);
            let scenario = base.with_offset(rng.random::<f64>() * base.theta0_rad);
            simulate_reference_run(&scenario, config, noise, m, decorrelation, opts, &mut rng)
                .map(|o| u64::from(!o.trial.success))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(FailureCount { failures, trials })
}

/// Reference-mode sweep. `N` counts photons from both objects.
#[allow(clippy::too_many_arguments)]
pub fn reference_sweep(
    base: &ReferenceScenario,
    config: &ArrayConfig,
    noise: &NoiseModel,
    grid: &[u64],
    decorrelation: f64,
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
                n_photons: 2.0 * photon_budget(m, config, noise),
                count: reference_average_failure(
                    base,
                    config,
                    noise,
                    m,
                    decorrelation,
                    trials,
                    seed,
                    opts,
                )?,
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

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    use crate::modular::precision_bounds;
    use crate::monte_carlo::{average_failure, Distance};
    use crate::units::{arcsec_to_rad, mas_to_rad};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn standard_array() -> ArrayConfig {
        ArrayConfig::new(380e-9, arcsec_to_rad(1.2), 15).unwrap()
    }

    fn scenario(gamma_as: f64, theta_t_mas: f64) -> ReferenceScenario {
        ReferenceScenario::new(
            arcsec_to_rad(gamma_as),
            mas_to_rad(theta_t_mas),
            mas_to_rad(1.0),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn coincident_target_has_zero_delta() {
        let config = standard_array();
        let s = scenario(1.0, 0.0);
        for k in 1..=15 {
            let d = delta_k(
                s.target_phase(k, &config),
                s.reference_phase(k, &config),
                k,
                &s,
                &config,
            );
            assert!(d.abs() < 1e-9 * 2f64.powi(k as i32), "k = {k}: {d}");
            assert_eq!(s.exact_delta(k, &config), 0.0);
        }
    }

    #[test]
    fn delta_doubles_along_ladder() {
        let config = standard_array();
        let s = scenario(2.0, 0.3);
        for k in 1..15 {
            let ratio = s.small_angle_delta(k + 1, &config) / s.small_angle_delta(k, &config);
            assert_eq!(ratio, 2.0);
            let ratio = s.exact_delta(k + 1, &config) / s.exact_delta(k, &config);
            assert!((ratio - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_angle_form_agrees_with_exact() {
        let config = ArrayConfig::new(380e-9, 380e-9 / 0.065, 15).unwrap();
        let s = scenario(1.0, 0.5);
        let exact = s.exact_delta(1, &config);
        let naive = delta_k(
            s.target_phase(1, &config),
            s.reference_phase(1, &config),
            1,
            &s,
            &config,
        );
        let approx = s.small_angle_delta(1, &config);
        assert!((exact / approx - 1.0).abs() < 1e-6);
        assert!((naive / exact - 1.0).abs() < 1e-6);
    }

    #[test]
    fn small_angle_error_is_far_below_resolution() {
        let config = standard_array();
        let (dphi, _) = precision_bounds(&config);
        for gamma in [0.1, 1.0, 5.0, 10.0] {
            for theta in [0.0, 0.25, 1.0] {
                let s = scenario(gamma, theta);
                for k in 1..=15 {
                    let gap = (s.exact_delta(k, &config) - s.small_angle_delta(k, &config)).abs();
                    assert!(
                        gap < 1e-4 * dphi,
                        "Γ0 = {gamma} as, θ_T = {theta} mas, k = {k}: {gap}"
                    );
                }
            }
        }
    }

    #[test]
    fn reconstruct_delta1_matches_plain_reconstruction() {
        let deltas = [0.2, 0.4, 0.8, 1.6];
        let plain = reconstruct_phase(&deltas).unwrap().phi1_rad;
        assert_eq!(reconstruct_delta1(&deltas).unwrap(), plain);
        assert!((plain - 0.2).abs() < 1e-9);
        assert_eq!(reconstruct_delta1(&[1.3]).unwrap(), 1.3);
        assert!(reconstruct_delta1(&[]).is_err());
    }

    #[test]
    fn reconstruct_delta1_bounded_errors() {
        let truth = [1.0, 2.0, 4.0];
        let errors = [0.5, 0.4, 0.2];
        let obs: Vec<f64> = truth.iter().zip(errors).map(|(a, e)| a + e).collect();
        assert!((reconstruct_delta1(&obs).unwrap() - 1.0 - 0.05).abs() < 1e-9);
    }

    #[test]
    fn theta_t_round_trip() {
        let config = standard_array();
        assert_eq!(
            theta_t_from_delta1(0.0, &scenario(1.0, 0.0), &config).unwrap(),
            0.0
        );
        for theta in [1e-3, 0.1, 0.5, 0.999] {
            let s = scenario(3.0, theta);
            let d1 = s.exact_delta(1, &config);
            let back = theta_t_from_delta1(d1, &s, &config).unwrap();
            assert!((back / s.theta_t_rad - 1.0).abs() < 1e-9, "{theta}");
        }
    }

    #[test]
    fn theta_t_reduces_to_plain_relation() {
        let config = standard_array();
        let s = ReferenceScenario::new(0.0, 0.0, mas_to_rad(1.0), 0.0).unwrap();
        let d1 = 0.001;
        let plain = config.wavelength_m() * d1 / (TAU * config.l1_m());
        let got = theta_t_from_delta1(d1, &s, &config).unwrap();
        assert!((got / plain - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ambiguous_prior_rejected() {
        let config = standard_array();
        // θ0 as large as the whole single-baseline range wraps Δ1
        let s = ReferenceScenario::new(0.0, 0.0, arcsec_to_rad(1.3), 0.0).unwrap();
        assert!(matches!(
            theta_t_from_delta1(0.1, &s, &config),
            Err(Error::AmbiguousWrap { .. })
        ));
    }

    #[test]
    fn wrapped_estimate_near_zero_offset() {
        let config = standard_array();
        let s = scenario(1.0, 0.0);
        assert_eq!(theta_t_from_delta1(TAU - 1e-6, &s, &config).unwrap(), 0.0);
    }

    #[test]
    fn common_drift_cancels_asymptotically() {
        let config = standard_array();
        let (_, dtheta) = precision_bounds(&config);
        let s = scenario(2.0, 0.7);
        let o = run_reference_asymptotic(
            &s,
            &config,
            &NoiseModel::noiseless(),
            |k| (k as f64 * 1.7).sin() * 3.0,
            TrialOptions::default(),
        )
        .unwrap();
        assert!(o.trial.success);
        assert!((o.theta_t_estimate_rad - o.theta_t_rad).abs() <= dtheta);
    }

    #[test]
    fn zero_offset_finite_sample() {
        let config = standard_array();
        let (_, dtheta) = precision_bounds(&config);
        let s = scenario(1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let o = simulate_reference_run(
            &s,
            &config,
            &NoiseModel::noiseless(),
            20_000,
            0.0,
            TrialOptions::default(),
            &mut rng,
        )
        .unwrap();
        assert!(o.trial.success);
        assert!(o.theta_t_estimate_rad <= dtheta);
    }

    #[test]
    fn noiseless_reference_matches_plain_at_large_m() {
        let config = standard_array();
        let noise = NoiseModel::noiseless();
        let base = scenario(1.0, 0.0);
        let trials = 1000;
        let m = 2000;
        let plain =
            average_failure(&config, &noise, m, trials, 4, TrialOptions::default()).unwrap();
        let refd = reference_average_failure(
            &base,
            &config,
            &noise,
            m,
            0.0,
            trials,
            4,
            TrialOptions::default(),
        )
        .unwrap();
        let se = (plain.eps_stderr().powi(2) + refd.eps_stderr().powi(2)).sqrt();
        let floor = 3.0 / trials as f64;
        assert!(
            (plain.eps_mean() - refd.eps_mean()).abs() <= 3.0 * se + floor,
            "{} vs {}",
            plain.eps_mean(),
            refd.eps_mean()
        );
    }

    #[test]
    fn decorrelated_drift_hurts() {
        let config = standard_array();
        let noise = NoiseModel::with_fiber(PI / 3.0).with_drift(DriftMode::PerDataSet);
        let base = scenario(1.0, 0.0);
        let opts = TrialOptions {
            distance: Distance::Circular,
            ..Default::default()
        };
        let tight =
            reference_average_failure(&base, &config, &noise, 500, 0.0, 400, 1, opts).unwrap();
        let loose =
            reference_average_failure(&base, &config, &noise, 500, 1.0, 400, 1, opts).unwrap();
        assert!(tight.eps_mean() < loose.eps_mean(), "{tight:?} {loose:?}");
        assert!(reference_average_failure(&base, &config, &noise, 500, 1.5, 4, 1, opts).is_err());
    }
}
