//! Modular phase arithmetic and the bit-by-bit reconstruction.
//!
//! Baseline `k` observes a wrapped phase `φ̂_k = (φ_k + e_k) mod 2π` where
//! `φ_k = 2^(k-1) φ_1`. Whenever consecutive errors satisfy
//! `|e_(k+1) - 2 e_k| < π`, the shifted errors `ψ̊_k = (φ_k - φ̂_k + π) mod 2π`
//! obey `2 ψ̊_k = ψ̊_(k+1) + r̊_(k+1)` with the observable residual
//! `r̊_(k+1) = (φ̂_(k+1) - 2 φ̂_k + π) mod 2π`. Unrolling that relation down to
//! `k = 1` and replacing the unknown `ψ̊_K` by its midpoint `π` leaves an
//! error of `e_K / 2^(K-1)` on `φ_1`.

use std::f64::consts::{PI, TAU};

use crate::error::{finite, in_turn, Error, Result};

/// Largest supported ladder. Beyond this the `2^-K` correction is lost in
/// double precision rounding of the residual sum.
pub const MAX_BASELINES: usize = 40;

/// Reduces `x` into `[0, 2π)`.
pub fn mod_2pi(x: f64) -> Result<f64> {
    finite("phase", x)?;
    Ok(wrap_turn(x))
}

/// Unchecked reduction into `[0, 2π)`. NaN in, NaN out.
#[inline]
pub(crate) fn wrap_turn(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid rounds tiny negatives up to exactly 2π
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// The observation error `e ∈ (-π, π]` with `observed = (exact + e) mod 2π`.
pub fn wrap_error(observed: f64, exact: f64) -> Result<f64> {
    in_turn("observed phase", observed)?;
    in_turn("exact phase", exact)?;
    Ok(signed_error(observed - exact))
}

/// Maps any real onto its representative in `(-π, π]`.
#[inline]
pub(crate) fn signed_error(x: f64) -> f64 {
    PI - wrap_turn(PI - x)
}

/// Residual `r̊_(k+1) = (φ̂_(k+1) - 2 φ̂_k + π) mod 2π`.
pub fn residual(obs_k: f64, obs_next: f64) -> Result<f64> {
    in_turn("observed phase", obs_k)?;
    in_turn("observed phase", obs_next)?;
    Ok(wrap_turn(obs_next - 2.0 * obs_k + PI))
}

/// Whether a pair of consecutive observation errors is small enough for the
/// residual identity to hold: `|e_(k+1) - 2 e_k| < π`.
pub fn check_error_pair(e_k: f64, e_next: f64) -> bool {
    (e_next - 2.0 * e_k).abs() < PI
}

/// Geometry of the doubling ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    wavelength_m: f64,
    theta_bar_rad: f64,
    k_count: usize,
}

impl ArrayConfig {
    pub fn new(wavelength_m: f64, theta_bar_rad: f64, k_count: usize) -> Result<Self> {
        positive("wavelength", wavelength_m)?;
        positive("initial angular bound", theta_bar_rad)?;
        if k_count == 0 {
            return Err(Error::NoBaselines);
        }
        if k_count > MAX_BASELINES {
            return Err(Error::InvalidArray(format!(
                "K = {k_count} exceeds the supported maximum of {MAX_BASELINES}"
            )));
        }
        Ok(Self {
            wavelength_m,
            theta_bar_rad,
            k_count,
        })
    }

    /// Derives `K = log2(L_K / L_1) + 1` from the longest baseline. The ratio
    /// has to sit within 5% (in log2) of a power of two.
    pub fn from_longest_baseline(
        wavelength_m: f64,
        theta_bar_rad: f64,
        longest_m: f64,
    ) -> Result<Self> {
        positive("wavelength", wavelength_m)?;
        positive("initial angular bound", theta_bar_rad)?;
        positive("longest baseline", longest_m)?;
        let l1 = wavelength_m / theta_bar_rad;
        let bits = (longest_m / l1).log2() + 1.0;
        let k = bits.round();
        if k < 1.0 || (bits - k).abs() > 0.05 {
            return Err(Error::InvalidArray(format!(
                "longest baseline {longest_m} m is not a power-of-two multiple of L1 = {l1} m \
                 (log2 ratio + 1 = {bits:.4})"
            )));
        }
        Self::new(wavelength_m, theta_bar_rad, k as usize)
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    pub fn theta_bar_rad(&self) -> f64 {
        self.theta_bar_rad
    }

    pub fn k_count(&self) -> usize {
        self.k_count
    }

    /// Shortest baseline `L_1 = λ / θ̄`.
    pub fn l1_m(&self) -> f64 {
        self.wavelength_m / self.theta_bar_rad
    }

    /// Length of baseline `k` (1-based).
    pub fn lk_m(&self, k: usize) -> f64 {
        assert!(
            (1..=self.k_count).contains(&k),
            "baseline index {k} outside 1..={}",
            self.k_count
        );
        self.l1_m() * f64::powi(2.0, (k - 1) as i32)
    }

    pub fn longest_m(&self) -> f64 {
        self.lk_m(self.k_count)
    }

    pub fn baselines_m(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.k_count).map(|k| self.lk_m(k))
    }

    /// Unreduced phase `2π L_k θ / λ` of baseline `k` for a source at `theta`.
    pub fn phase_at(&self, k: usize, theta_rad: f64) -> f64 {
        TAU * self.lk_m(k) * theta_rad / self.wavelength_m
    }

    /// `(Δφ, Δθ)` after `K` bits.
    pub fn precision_bounds(&self) -> (f64, f64) {
        precision_bounds(self)
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            range: "(0, ∞)",
        })
    }
}

/// Per-baseline true and observed phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    true_phase_rad: Vec<f64>,
    observed_phase_rad: Vec<f64>,
}

impl PhaseVector {
    pub fn new(true_phase_rad: Vec<f64>, observed_phase_rad: Vec<f64>) -> Result<Self> {
        if observed_phase_rad.is_empty() {
            return Err(Error::NoBaselines);
        }
        if true_phase_rad.len() != observed_phase_rad.len() {
            return Err(Error::LengthMismatch {
                expected: true_phase_rad.len(),
                got: observed_phase_rad.len(),
            });
        }
        for &phi in &true_phase_rad {
            finite("true phase", phi)?;
        }
        for &obs in &observed_phase_rad {
            in_turn("observed phase", obs)?;
        }
        Ok(Self {
            true_phase_rad,
            observed_phase_rad,
        })
    }

    /// True phases of a source at `theta`, observed without error.
    pub fn from_angle(theta_rad: f64, config: &ArrayConfig) -> Result<Self> {
        Self::with_errors(theta_rad, config, &vec![0.0; config.k_count()])
    }

    /// True phases of a source at `theta`, observed as `(φ_k + e_k) mod 2π`.
    pub fn with_errors(theta_rad: f64, config: &ArrayConfig, errors: &[f64]) -> Result<Self> {
        finite("angle", theta_rad)?;
        if errors.len() != config.k_count() {
            return Err(Error::LengthMismatch {
                expected: config.k_count(),
                got: errors.len(),
            });
        }
        let true_phase_rad: Vec<f64> = (1..=config.k_count())
            .map(|k| config.phase_at(k, theta_rad))
            .collect();
        let observed_phase_rad = true_phase_rad
            .iter()
            .zip(errors)
            .map(|(&phi, &e)| wrap_turn(wrap_turn(phi) + e))
            .collect();
        Self::new(true_phase_rad, observed_phase_rad)
    }

    pub fn len(&self) -> usize {
        self.observed_phase_rad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed_phase_rad.is_empty()
    }

    pub fn true_phases(&self) -> &[f64] {
        &self.true_phase_rad
    }

    pub fn observed_phases(&self) -> &[f64] {
        &self.observed_phase_rad
    }

    /// Observation errors `e_k ∈ (-π, π]`.
    pub fn errors(&self) -> Vec<f64> {
        self.true_phase_rad
            .iter()
            .zip(&self.observed_phase_rad)
            .map(|(&phi, &obs)| signed_error(obs - wrap_turn(phi)))
            .collect()
    }
}

/// The config-independent part of a reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReconstruction {
    /// Estimate of the first-baseline phase, in `[0, 2π)`.
    pub phi1_rad: f64,
    /// `r̊_k` for `k = 2..=K`.
    pub residuals_rad: Vec<f64>,
    /// `π / 2^K`.
    pub delta_phi_bound_rad: f64,
}

/// Recovers the first-baseline phase from `K` wrapped observations.
///
/// `φ̃_1 = (φ̂_1 - π + Σ_(k=2..K) 2^-(k-1) r̊_k + 2^-(K-1) π) mod 2π`
pub fn reconstruct_phase(observed: &[f64]) -> Result<PhaseReconstruction> {
    let k_count = observed.len();
    if k_count == 0 {
        return Err(Error::NoBaselines);
    }
    for &obs in observed {
        in_turn("observed phase", obs)?;
    }
    let residuals_rad: Vec<f64> = observed
        .windows(2)
        .map(|pair| wrap_turn(pair[1] - 2.0 * pair[0] + PI))
        .collect();

    let mut weight = 1.0;
    let mut correction = 0.0;
    for r in &residuals_rad {
        weight *= 0.5;
        correction += weight * r;
    }
    // weight is now 2^-(K-1)
    let phi1_rad = wrap_turn(observed[0] - PI + correction + weight * PI);

    Ok(PhaseReconstruction {
        phi1_rad,
        residuals_rad,
        delta_phi_bound_rad: PI / f64::powi(2.0, k_count as i32),
    })
}

/// Reconstruction of the source angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub phi1_rad: f64,
    pub theta_rad: f64,
    pub residuals_rad: Vec<f64>,
    pub delta_phi_bound_rad: f64,
    pub delta_theta_bound_rad: f64,
}

pub fn reconstruct_phi1(
    observed: &PhaseVector,
    config: &ArrayConfig,
) -> Result<ReconstructionResult> {
    reconstruct_observed(observed.observed_phases(), config)
}

/// Same as [`reconstruct_phi1`] on a bare slice of observed phases.
pub fn reconstruct_observed(
    observed: &[f64],
    config: &ArrayConfig,
) -> Result<ReconstructionResult> {
    if observed.len() != config.k_count() {
        return Err(Error::LengthMismatch {
            expected: config.k_count(),
            got: observed.len(),
        });
    }
    let phase = reconstruct_phase(observed)?;
    let (_, delta_theta) = precision_bounds(config);
    Ok(ReconstructionResult {
        phi1_rad: phase.phi1_rad,
        theta_rad: phi_to_theta(phase.phi1_rad, config)?,
        residuals_rad: phase.residuals_rad,
        delta_phi_bound_rad: phase.delta_phi_bound_rad,
        delta_theta_bound_rad: delta_theta,
    })
}

/// `θ = λ φ_1 / (2π L_1)`.
pub fn phi_to_theta(phi1: f64, config: &ArrayConfig) -> Result<f64> {
    in_turn("first-baseline phase", phi1)?;
    Ok(config.wavelength_m() * phi1 / (TAU * config.l1_m()))
}

/// `Δφ = π / 2^K` and `Δθ = λ / (4 L_K)`.
pub fn precision_bounds(config: &ArrayConfig) -> (f64, f64) {
    let delta_phi = PI / f64::powi(2.0, config.k_count() as i32);
    let delta_theta = config.wavelength_m() / (4.0 * config.longest_m());
    (delta_phi, delta_theta)
}
