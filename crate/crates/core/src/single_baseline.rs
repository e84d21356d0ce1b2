//! Analytic model of a single-baseline interferometer, used as the
//! comparison curve.
//!
//! With one baseline of length `X = λ / θ̄` the angle follows the phase
//! linearly and its estimate is Gaussian with standard deviation bounded
//! below by `λ (1 + σ) / (2π L_1 √N)`. The failure probability at tolerance
//! `Δθ` is then `2 F(-Δθ; 0, σ_θ)`.

use std::f64::consts::TAU;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{finite, in_turn, Error, Result};
use crate::interference::NoiseModel;
use crate::modular::ArrayConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleBaselineModel {
    pub wavelength_m: f64,
    /// Baseline length `X`.
    pub l1_m: f64,
    pub theta_bar_rad: f64,
    pub sigma_rad: f64,
}

impl SingleBaselineModel {
    pub fn new(wavelength_m: f64, l1_m: f64, theta_bar_rad: f64, sigma_rad: f64) -> Result<Self> {
        for (name, v) in [
            ("wavelength", wavelength_m),
            ("baseline", l1_m),
            ("initial angular bound", theta_bar_rad),
        ] {
            finite(name, v)?;
            if v <= 0.0 {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    range: "(0, ∞)",
                });
            }
        }
        finite("sigma", sigma_rad)?;
        if sigma_rad < 0.0 {
            return Err(Error::OutOfRange {
                name: "sigma",
                value: sigma_rad,
                range: "[0, ∞)",
            });
        }
        // phase must stay inside one turn over the whole prior range
        if l1_m * theta_bar_rad > wavelength_m * (1.0 + 1e-12) {
            return Err(Error::InvalidArray(format!(
                "baseline {l1_m} m times θ̄ exceeds the wavelength; the phase would wrap"
            )));
        }
        Ok(Self {
            wavelength_m,
            l1_m,
            theta_bar_rad,
            sigma_rad,
        })
    }

    /// Longest unambiguous baseline for the same prior as `config`.
    pub fn matching(config: &ArrayConfig, noise: &NoiseModel) -> Self {
        Self {
            wavelength_m: config.wavelength_m(),
            l1_m: config.l1_m(),
            theta_bar_rad: config.theta_bar_rad(),
            sigma_rad: noise.sigma_rad,
        }
    }

    /// `θ = λ φ / (2π X)`.
    pub fn theta(&self, phi: f64) -> Result<f64> {
        in_turn("phase", phi)?;
        Ok(self.wavelength_m * phi / (TAU * self.l1_m))
    }

    /// Best possible angular uncertainty for a phase uncertainty `Δφ`:
    /// `θ̄ Δφ / (2π)`, whatever the baseline.
    pub fn precision_limit(&self, delta_phi: f64) -> Result<f64> {
        finite("phase uncertainty", delta_phi)?;
        if delta_phi < 0.0 {
            return Err(Error::OutOfRange {
                name: "phase uncertainty",
                value: delta_phi,
                range: "[0, ∞)",
            });
        }
        Ok(self.theta_bar_rad * delta_phi / TAU)
    }

    /// `Δθ / θ̄` for a phase uncertainty `Δφ`.
    pub fn compression_factor(&self, delta_phi: f64) -> Result<f64> {
        Ok(self.precision_limit(delta_phi)? / self.theta_bar_rad)
    }

    /// Lower bound `λ (1 + σ) / (2π L_1 √N)` on the estimator spread.
    pub fn sigma_theta(&self, n_photons: f64) -> Result<f64> {
        finite("photon count", n_photons)?;
        if n_photons < 1.0 {
            return Err(Error::OutOfRange {
                name: "photon count",
                value: n_photons,
                range: "[1, ∞)",
            });
        }
        Ok(self.spread_scale() / n_photons.sqrt())
    }

    /// `σ_θ √N`.
    fn spread_scale(&self) -> f64 {
        self.wavelength_m * (1.0 + self.sigma_rad) / (TAU * self.l1_m)
    }

    /// Failure probability at `N` photons for tolerance `Δθ`.
    pub fn failure_at(&self, n_photons: f64, delta_theta: f64) -> Result<f64> {
        single_baseline_failure(delta_theta, self.sigma_theta(n_photons)?)
    }

    /// Smallest integer `N` with failure probability at most `target_eps`.
    pub fn photons_for_failure(&self, target_eps: f64, delta_theta: f64) -> Result<u64> {
        finite("target failure", target_eps)?;
        if !(target_eps > 0.0 && target_eps < 1.0) {
            return Err(Error::OutOfRange {
                name: "target failure",
                value: target_eps,
                range: "(0, 1)",
            });
        }
        finite("angular tolerance", delta_theta)?;
        if delta_theta <= 0.0 {
            return Err(Error::OutOfRange {
                name: "angular tolerance",
                value: delta_theta,
                range: "(0, ∞)",
            });
        }
        // 2 F(-Δθ/σ_θ) = ε  ⇔  Δθ/σ_θ = z with F(-z) = ε/2
        let z = -standard_normal().inverse_cdf(0.5 * target_eps);
        let n_real = (z * self.spread_scale() / delta_theta).powi(2);
        let mut n = (n_real.ceil() as u64).max(1);
        let fails = |n: u64| {
            self.failure_at(n as f64, delta_theta)
                .map(|e| e > target_eps)
        };
        while fails(n)? {
            n += 1;
        }
        while n > 1 && !fails(n - 1)? {
            n -= 1;
        }
        Ok(n)
    }
}

fn standard_normal() -> Normal {
    Normal::standard()
}

/// `2 F(-Δθ; 0, σ_θ)` where `F` is the normal CDF.
pub fn single_baseline_failure(delta_theta: f64, sigma_theta: f64) -> Result<f64> {
    finite("angular tolerance", delta_theta)?;
    finite("angular spread", sigma_theta)?;
    if sigma_theta < 0.0 {
        return Err(Error::OutOfRange {
            name: "angular spread",
            value: sigma_theta,
            range: "[0, ∞)",
        });
    }
    if delta_theta <= 0.0 {
        return Ok(1.0);
    }
    if sigma_theta == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * standard_normal().cdf(-delta_theta / sigma_theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    use crate::units::{arcsec_to_rad, mas_to_rad};

    fn standard_model(sigma: f64) -> SingleBaselineModel {
        let theta_bar = arcsec_to_rad(1.2);
        SingleBaselineModel::new(380e-9, 380e-9 / theta_bar, theta_bar, sigma).unwrap()
    }

    /// Composite Simpson integration of the standard normal density over
    /// `[-12, x]`.
    fn cdf_oracle(x: f64) -> f64 {
        let lo = -12.0;
        let n = 200_000;
        let h = (x - lo) / n as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        let mut s = pdf(lo) + pdf(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * pdf(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn theta_examples() {
        let m = standard_model(0.0);
        assert_eq!(m.theta(0.0).unwrap(), 0.0);
        let top = m.theta(TAU * (1.0 - 1e-12)).unwrap();
        assert!((top / m.theta_bar_rad - 1.0).abs() < 1e-11);

        let x = SingleBaselineModel::new(380e-9, 0.0653, arcsec_to_rad(1.2), 0.0).unwrap();
        let half = x.theta(PI).unwrap();
        assert!((half / arcsec_to_rad(0.6) - 1.0).abs() < 1e-3);
        assert!(x.theta(-0.1).is_err());
    }

    #[test]
    fn baseline_condition() {
        let theta_bar = arcsec_to_rad(1.2);
        assert!(SingleBaselineModel::new(380e-9, 0.07, theta_bar, 0.0).is_err());
        assert!(SingleBaselineModel::new(380e-9, 0.01, theta_bar, 0.0).is_ok());
    }

    #[test]
    fn precision_limit_examples() {
        let m = standard_model(0.0);
        assert_eq!(m.precision_limit(0.0).unwrap(), 0.0);
        let d = m.precision_limit(9.59e-5).unwrap();
        assert!((d - arcsec_to_rad(1.2) * 9.59e-5 / TAU).abs() < 1e-25);
        assert!((m.precision_limit(TAU).unwrap() - m.theta_bar_rad).abs() < 1e-20);
        assert!(m.precision_limit(-1.0).is_err());
    }

    #[test]
    fn precision_limit_ignores_baseline() {
        let theta_bar = arcsec_to_rad(1.2);
        let a = SingleBaselineModel::new(380e-9, 0.0653, theta_bar, 0.0).unwrap();
        let b = SingleBaselineModel::new(380e-9, 0.001, theta_bar, 0.0).unwrap();
        for dphi in [1e-6, 1e-3, 0.5, 3.0] {
            assert_eq!(
                a.precision_limit(dphi).unwrap(),
                b.precision_limit(dphi).unwrap()
            );
            assert!((a.compression_factor(dphi).unwrap() - dphi / TAU).abs() < 1e-15);
        }
    }

    #[test]
    fn sigma_theta_examples() {
        let m = standard_model(0.0);
        let s1 = m.sigma_theta(1.0).unwrap();
        assert!((s1 - m.theta_bar_rad / TAU).abs() < 1e-18);
        assert!(m.sigma_theta(1e30).unwrap() < 1e-20);

        let noisy = standard_model(PI / 3.0);
        let direct = 380e-9 * (1.0 + PI / 3.0) / (TAU * noisy.l1_m * 1e9f64.sqrt());
        assert!((noisy.sigma_theta(1e9).unwrap() / direct - 1.0).abs() < 1e-14);
        assert!(m.sigma_theta(0.5).is_err());
    }

    #[test]
    fn failure_examples() {
        assert_eq!(single_baseline_failure(0.0, 1.0).unwrap(), 1.0);
        let one_sigma = single_baseline_failure(2.0, 2.0).unwrap();
        assert!((one_sigma - 2.0 * cdf_oracle(-1.0)).abs() < 1e-10);
        assert!(
            (one_sigma - 0.3173105078629141).abs() < 1e-10,
            "{one_sigma:e}"
        );
        assert!(single_baseline_failure(40.0, 1.0).unwrap() < 1e-300);
        assert_eq!(single_baseline_failure(1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn cdf_matches_quadrature() {
        for x in [-6.0, -3.3, -2.5758, -1.0, -0.2, 0.0] {
            let got = standard_normal().cdf(x);
            assert!((got - cdf_oracle(x)).abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn photons_for_failure_round_trip() {
        let m = standard_model(PI / 3.0);
        let n0 = 123_457.0;
        let delta = m.sigma_theta(n0).unwrap();
        let eps = m.failure_at(n0, delta).unwrap();
        assert!((eps - 0.3173105078629141).abs() < 1e-9);
        let n = m.photons_for_failure(eps, delta).unwrap();
        assert!((n as f64 - n0).abs() <= 1.0, "{n}");
        assert!(m.failure_at(n as f64, delta).unwrap() <= eps);
        if n > 1 {
            assert!(m.failure_at((n - 1) as f64, delta).unwrap() > eps);
        }
    }

    #[test]
    fn photons_for_failure_monotone_in_target() {
        let m = standard_model(PI / 3.0);
        let delta = mas_to_rad(0.0183);
        let loose = m.photons_for_failure(0.99, delta).unwrap();
        let tight = m.photons_for_failure(0.01, delta).unwrap();
        assert!(loose < tight);
        assert!(m.photons_for_failure(0.0, delta).is_err());
        assert!(m.photons_for_failure(1.0, delta).is_err());
    }

    #[test]
    fn standard_scale_photon_count() {
        let m = standard_model(PI / 3.0);
        let n = m.photons_for_failure(0.01, mas_to_rad(0.0183)).unwrap();
        assert!((1e8..=1e10).contains(&(n as f64)), "{n}");
    }
}
