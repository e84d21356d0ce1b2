//! Single-photon detection on one baseline.
//!
//! Each baseline is read out twice: once with no extra phase on the shifter
//! (data set 0) and once with `π/2` (data set 1). In data set 0 detector `D_b`
//! clicks with probability `½(1 - cos(φ + δ))`, in data set 1 with
//! `½(1 + sin(φ + δ))`, where `δ` is channel drift. Detector flipping then
//! moves individual clicks between `D_a` and `D_b`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{finite, in_turn, Error, Result};
use crate::modular::wrap_turn;

/// How often the Gaussian channel drift is redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftMode {
    /// One draw per photon.
    #[default]
    PerPhoton,
    /// One draw per data set, i.e. two independent draws per baseline.
    PerDataSet,
    /// One draw per baseline shared by both data sets.
    PerBaseline,
}

impl DriftMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DriftMode::PerPhoton => "per_photon",
            DriftMode::PerDataSet => "per_data_set",
            DriftMode::PerBaseline => "per_baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "per_photon" => Some(DriftMode::PerPhoton),
            "per_data_set" => Some(DriftMode::PerDataSet),
            "per_baseline" => Some(DriftMode::PerBaseline),
            _ => None,
        }
    }
}

/// Channel and detector noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Standard deviation of the Gaussian phase drift, radians.
    pub sigma_rad: f64,
    /// Flipping rates `D_a → D_b` and `D_b → D_a` for data set 0.
    pub flip_a: f64,
    pub flip_b: f64,
    /// Flipping rates for data set 1.
    pub flip_a2: f64,
    pub flip_b2: f64,
    /// Fiber attenuation coefficient in `η(l) = 10^(-α l / l0)`.
    pub alpha: f64,
    pub l0_m: f64,
    pub drift: DriftMode,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseModel {
    /// No drift, no flipping, no attenuation.
    pub fn noiseless() -> Self {
        Self {
            sigma_rad: 0.0,
            flip_a: 0.0,
            flip_b: 0.0,
            flip_a2: 0.0,
            flip_b2: 0.0,
            alpha: 0.0,
            l0_m: 10_000.0,
            drift: DriftMode::default(),
        }
    }

    /// Gaussian drift `sigma` with fiber loss `α = 0.2` per `l0 = 10 km`.
    pub fn with_fiber(sigma_rad: f64) -> Self {
        Self {
            sigma_rad,
            alpha: 0.2,
            l0_m: 10_000.0,
            ..Self::noiseless()
        }
    }

    /// Same rate in both directions and both data sets.
    pub fn with_symmetric_flips(mut self, rate: f64) -> Self {
        self.flip_a = rate;
        self.flip_b = rate;
        self.flip_a2 = rate;
        self.flip_b2 = rate;
        self
    }

    pub fn with_drift(mut self, drift: DriftMode) -> Self {
        self.drift = drift;
        self
    }

    /// Flip rates up to (but excluding) 1 are accepted so that adversarial
    /// settings above one half can be simulated.
    pub fn validate(&self) -> Result<()> {
        finite("sigma", self.sigma_rad)?;
        if self.sigma_rad < 0.0 {
            return Err(Error::OutOfRange {
                name: "sigma",
                value: self.sigma_rad,
                range: "[0, ∞)",
            });
        }
        for (name, rate) in [
            ("flip_a", self.flip_a),
            ("flip_b", self.flip_b),
            ("flip_a2", self.flip_a2),
            ("flip_b2", self.flip_b2),
        ] {
            finite(name, rate)?;
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::OutOfRange {
                    name,
                    value: rate,
                    range: "[0, 1)",
                });
            }
        }
        finite("alpha", self.alpha)?;
        if self.alpha < 0.0 {
            return Err(Error::OutOfRange {
                name: "alpha",
                value: self.alpha,
                range: "[0, ∞)",
            });
        }
        finite("l0", self.l0_m)?;
        if self.l0_m <= 0.0 {
            return Err(Error::OutOfRange {
                name: "l0",
                value: self.l0_m,
                range: "(0, ∞)",
            });
        }
        Ok(())
    }

    /// All four flipping rates below one half.
    pub fn flips_below_half(&self) -> bool {
        [self.flip_a, self.flip_b, self.flip_a2, self.flip_b2]
            .iter()
            .all(|&p| p < 0.5)
    }

    /// `E[cos δ]` for `δ ~ N(0, σ²)`.
    pub fn drift_visibility(&self) -> f64 {
        (-0.5 * self.sigma_rad * self.sigma_rad).exp()
    }
}

/// `D_b` click probabilities `(p, p̄)` for the two data sets.
pub fn click_probabilities(phi_k: f64, drift: f64) -> (f64, f64) {
    let x = phi_k + drift;
    (0.5 * (1.0 - x.cos()), 0.5 * (1.0 + x.sin()))
}

/// `(p, p̄)` averaged over `δ ~ N(0, σ²)`.
pub fn averaged_click_probabilities(phi_k: f64, sigma: f64) -> (f64, f64) {
    let v = (-0.5 * sigma * sigma).exp();
    (0.5 * (1.0 - v * phi_k.cos()), 0.5 * (1.0 + v * phi_k.sin()))
}

/// Joint click probabilities `[none, reference only, target only, both]`
/// for one pair of photons on two arms. The pair sees drifts `δ` and `δ'`
/// with standard deviation `sigma` and correlation `rho`; arm `i` clicks with
/// probability `½(1 - cos(a_i + δ_i))`.
pub fn pair_click_table(a: (f64, f64), sigma: f64, rho: f64) -> [f64; 4] {
    let s2 = sigma * sigma;
    let v = (-0.5 * s2).exp();
    let p_t = 0.5 * (1.0 - v * a.0.cos());
    let p_r = 0.5 * (1.0 - v * a.1.cos());
    // E[cos(a + δ) cos(b + δ')]
    let cc = 0.5
        * ((-s2 * (1.0 - rho)).exp() * (a.0 - a.1).cos()
            + (-s2 * (1.0 + rho)).exp() * (a.0 + a.1).cos());
    let both = (0.25 * (1.0 - v * a.0.cos() - v * a.1.cos() + cc)).clamp(0.0, p_t.min(p_r));
    let t_only = (p_t - both).max(0.0);
    let r_only = (p_r - both).max(0.0);
    [
        (1.0 - both - t_only - r_only).max(0.0),
        r_only,
        t_only,
        both,
    ]
}

/// Target and reference click counts over `trials` photon pairs, see
/// [`pair_click_table`].
pub(crate) fn sample_pair_counts<R: Rng + ?Sized>(
    a: (f64, f64),
    sigma: f64,
    rho: f64,
    trials: u64,
    rng: &mut R,
) -> (u64, u64) {
    let [_, p01, p10, p11] = pair_click_table(a, sigma, rho);
    let n11 = sample_counts(p11, trials, rng);
    let rest = 1.0 - p11;
    let n10 = if rest > 0.0 {
        sample_counts(p10 / rest, trials - n11, rng)
    } else {
        0
    };
    let rest = rest - p10;
    let n01 = if rest > 0.0 {
        sample_counts(p01 / rest, trials - n11 - n10, rng)
    } else {
        0
    };
    (n11 + n10, n11 + n01)
}

/// Number of successes in `trials` Bernoulli(`p`) events.
pub fn sample_counts<R: Rng + ?Sized>(p: f64, trials: u64, rng: &mut R) -> u64 {
    let p = p.clamp(0.0, 1.0);
    Binomial::new(trials, p)
        .expect("probability clamped to [0, 1]")
        .sample(rng)
}

/// Moves each `a` event to `b` with probability `rates.0` and each `b` event
/// to `a` with probability `rates.1`. The total is preserved.
pub fn apply_flipping<R: Rng + ?Sized>(
    counts: (u64, u64),
    rates: (f64, f64),
    rng: &mut R,
) -> (u64, u64) {
    let (n_a, n_b) = counts;
    let a_to_b = sample_counts(rates.0, n_a, rng);
    let b_to_a = sample_counts(rates.1, n_b, rng);
    (n_a - a_to_b + b_to_a, n_b - b_to_a + a_to_b)
}

/// Expected counts after flipping.
pub fn expected_flipping(counts: (f64, f64), rates: (f64, f64)) -> (f64, f64) {
    let (n_a, n_b) = counts;
    let (p_a, p_b) = rates;
    (n_a * (1.0 - p_a) + n_b * p_b, n_b * (1.0 - p_b) + n_a * p_a)
}

/// How a phase is computed from the two count ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseRecovery {
    /// Two-argument angle of `(q, q̄)`; correct in all four quadrants.
    #[default]
    Quadrant,
    /// `½(acos q + asin q̄) mod 2π`, which is only right in the first quadrant.
    LiteralHalfSum,
}

impl PhaseRecovery {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseRecovery::Quadrant => "quadrant",
            PhaseRecovery::LiteralHalfSum => "literal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "quadrant" => Some(PhaseRecovery::Quadrant),
            "literal" => Some(PhaseRecovery::LiteralHalfSum),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    pub phase_rad: f64,
    /// Both `q` and `q̄` vanished; the phase carries no information.
    pub degenerate: bool,
}

/// Phase from the fraction of `D_b` clicks in each data set.
pub fn phase_from_fractions(
    frac_b: f64,
    frac_b_bar: f64,
    recovery: PhaseRecovery,
) -> Result<PhaseEstimate> {
    finite("click fraction", frac_b)?;
    finite("click fraction", frac_b_bar)?;
    let q = (1.0 - 2.0 * frac_b).clamp(-1.0, 1.0);
    let q_bar = (2.0 * frac_b_bar - 1.0).clamp(-1.0, 1.0);
    if q == 0.0 && q_bar == 0.0 {
        return Ok(PhaseEstimate {
            phase_rad: 0.0,
            degenerate: true,
        });
    }
    let phase_rad = match recovery {
        PhaseRecovery::Quadrant => wrap_turn(q_bar.atan2(q)),
        PhaseRecovery::LiteralHalfSum => wrap_turn(0.5 * (q.acos() + q_bar.asin())),
    };
    Ok(PhaseEstimate {
        phase_rad,
        degenerate: false,
    })
}

/// Click counts of one baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectionRecord {
    /// `D_b` clicks with no phase shift.
    pub m: u64,
    /// One-detector events with no phase shift.
    pub big_m: u64,
    /// `D_b` clicks with the `π/2` shift.
    pub m_bar: u64,
    pub big_m_bar: u64,
}

impl DetectionRecord {
    pub fn new(m: u64, big_m: u64, m_bar: u64, big_m_bar: u64) -> Result<Self> {
        let record = Self {
            m,
            big_m,
            m_bar,
            big_m_bar,
        };
        record.validate()?;
        Ok(record)
    }

    fn validate(&self) -> Result<()> {
        if self.big_m == 0 {
            return Err(Error::EmptySample { name: "M" });
        }
        if self.big_m_bar == 0 {
            return Err(Error::EmptySample { name: "M̄" });
        }
        for (clicks, total) in [(self.m, self.big_m), (self.m_bar, self.big_m_bar)] {
            if clicks > total {
                return Err(Error::InvalidCounts { clicks, total });
            }
        }
        Ok(())
    }

    /// `q = 1 - 2m/M`, an estimate of `cos φ`.
    pub fn q(&self) -> f64 {
        1.0 - 2.0 * self.m as f64 / self.big_m as f64
    }

    /// `q̄ = 2m̄/M̄ - 1`, an estimate of `sin φ`.
    pub fn q_bar(&self) -> f64 {
        2.0 * self.m_bar as f64 / self.big_m_bar as f64 - 1.0
    }

    pub fn extract_phase(&self, recovery: PhaseRecovery) -> Result<PhaseEstimate> {
        self.validate()?;
        phase_from_fractions(
            self.m as f64 / self.big_m as f64,
            self.m_bar as f64 / self.big_m_bar as f64,
            recovery,
        )
    }

    /// Quadrant implied by the signs of `n_b - n_a` in both data sets.
    pub fn quadrant(&self) -> Option<u8> {
        let diff0 = 2 * self.m as i128 - self.big_m as i128;
        let diff1 = 2 * self.m_bar as i128 - self.big_m_bar as i128;
        quadrant_from_signs(diff0.signum() as i8, diff1.signum() as i8)
    }
}

/// Draws the four counts of one baseline with `trials` events per data set.
pub fn simulate_baseline<R: Rng + ?Sized>(
    phi_k: f64,
    trials: u64,
    noise: &NoiseModel,
    rng: &mut R,
) -> DetectionRecord {
    let clicks = sample_clicks(phi_k, trials, noise, rng);
    flip_record(clicks, trials, noise, rng)
}

pub(crate) fn gaussian<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sigma * z
}

/// Raw `D_b` clicks `(data set 0, data set 1)` before flipping.
fn sample_clicks<R: Rng + ?Sized>(
    phi_k: f64,
    trials: u64,
    noise: &NoiseModel,
    rng: &mut R,
) -> (u64, u64) {
    let phi = wrap_turn(phi_k);
    let sigma = noise.sigma_rad;
    match noise.drift {
        DriftMode::PerDataSet => {
            let d0 = gaussian(sigma, rng);
            let d1 = gaussian(sigma, rng);
            let (p, _) = click_probabilities(phi, d0);
            let (_, p_bar) = click_probabilities(phi, d1);
            (
                sample_counts(p, trials, rng),
                sample_counts(p_bar, trials, rng),
            )
        }
        DriftMode::PerBaseline => {
            let d = gaussian(sigma, rng);
            let (p, p_bar) = click_probabilities(phi, d);
            (
                sample_counts(p, trials, rng),
                sample_counts(p_bar, trials, rng),
            )
        }
        DriftMode::PerPhoton => {
            // independent drift per photon makes every click an iid Bernoulli
            // with the drift-averaged probability
            let (p, p_bar) = averaged_click_probabilities(phi, sigma);
            (
                sample_counts(p, trials, rng),
                sample_counts(p_bar, trials, rng),
            )
        }
    }
}

/// Applies detector flipping to raw `D_b` clicks out of `trials` per set.
pub(crate) fn flip_record<R: Rng + ?Sized>(
    clicks: (u64, u64),
    trials: u64,
    noise: &NoiseModel,
    rng: &mut R,
) -> DetectionRecord {
    let (m, m_bar) = clicks;
    let (_, m) = apply_flipping((trials - m, m), (noise.flip_a, noise.flip_b), rng);
    let (_, m_bar) = apply_flipping((trials - m_bar, m_bar), (noise.flip_a2, noise.flip_b2), rng);
    DetectionRecord {
        m,
        big_m: trials,
        m_bar,
        big_m_bar: trials,
    }
}

/// Drift seen by the asymptotic (infinite-count) model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsymptoticDrift {
    /// A fixed offset on each data set.
    Fixed { zero_shift: f64, quarter_shift: f64 },
    /// Per-photon Gaussian drift averaged out, which scales both
    /// quadratures by `exp(-σ²/2)`.
    Averaged,
}

impl AsymptoticDrift {
    pub fn none() -> Self {
        AsymptoticDrift::Fixed {
            zero_shift: 0.0,
            quarter_shift: 0.0,
        }
    }

    pub fn shared(drift: f64) -> Self {
        AsymptoticDrift::Fixed {
            zero_shift: drift,
            quarter_shift: drift,
        }
    }
}

/// Infinite-count limit of a [`DetectionRecord`]: the click fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedRecord {
    /// `m / M`
    pub frac_b: f64,
    /// `m̄ / M̄`
    pub frac_b_bar: f64,
}

impl ExpectedRecord {
    pub fn extract_phase(&self, recovery: PhaseRecovery) -> Result<PhaseEstimate> {
        phase_from_fractions(self.frac_b, self.frac_b_bar, recovery)
    }

    pub fn quadrant(&self) -> Option<u8> {
        let sign = |frac: f64| {
            let diff = 2.0 * frac - 1.0;
            if diff > 0.0 {
                1
            } else if diff < 0.0 {
                -1
            } else {
                0
            }
        };
        quadrant_from_signs(sign(self.frac_b), sign(self.frac_b_bar))
    }
}

/// Click fractions with expected counts in place of samples.
pub fn expected_record(phi_k: f64, noise: &NoiseModel, drift: AsymptoticDrift) -> ExpectedRecord {
    let phi = wrap_turn(phi_k);
    let (p, p_bar) = match drift {
        AsymptoticDrift::Fixed {
            zero_shift,
            quarter_shift,
        } => (
            click_probabilities(phi, zero_shift).0,
            click_probabilities(phi, quarter_shift).1,
        ),
        AsymptoticDrift::Averaged => {
            let v = noise.drift_visibility();
            (0.5 * (1.0 - v * phi.cos()), 0.5 * (1.0 + v * phi.sin()))
        }
    };
    let (_, frac_b) = expected_flipping((1.0 - p, p), (noise.flip_a, noise.flip_b));
    let (_, frac_b_bar) = expected_flipping((1.0 - p_bar, p_bar), (noise.flip_a2, noise.flip_b2));
    ExpectedRecord { frac_b, frac_b_bar }
}

/// Quadrant (1 to 4) of a phase in `[0, 2π)`, with each boundary assigned to
/// the quadrant it opens.
pub fn quadrant(phi: f64) -> Result<u8> {
    in_turn("phase", phi)?;
    Ok(if phi < FRAC_PI_2 {
        1
    } else if phi < PI {
        2
    } else if phi < 1.5 * PI {
        3
    } else {
        4
    })
}

/// Quadrant from the signs of `n_b - n_a` with no shift (the sign of
/// `-cos φ`) and with the `π/2` shift (the sign of `sin φ`). `None` when both
/// differences vanish.
pub fn quadrant_from_signs(zero_diff: i8, quarter_diff: i8) -> Option<u8> {
    // cos φ has the opposite sign of the zero-shift difference
    let cos = -zero_diff;
    let sin = quarter_diff;
    if cos == 0 && sin == 0 {
        return None;
    }
    let upper = sin > 0 || (sin == 0 && cos > 0);
    Some(match (upper, cos > 0) {
        (true, true) => 1,
        (true, false) => 2,
        (false, false) if cos < 0 => 3,
        (false, _) => 4,
    })
}

/// Opening boundary of quadrant `q`.
pub fn quadrant_start(q: u8) -> f64 {
    assert!((1..=4).contains(&q));
    f64::from(q - 1) * FRAC_PI_2
}
