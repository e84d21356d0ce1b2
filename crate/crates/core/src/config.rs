//! Run files: flat `key = value` text with `#` comments.
//!
//! ```text
//! wavelength_m = 3.8e-7
//! theta_bar_as = 1.2
//! longest_baseline_m = 1070
//! sigma_rad = pi/3
//! m_grid = 1, 2, 4, 8, 16, 32
//! trials = 1000
//! seed = 7
//! ```
//!
//! Angles are given in arcseconds (`*_as`) or milliarcseconds (`*_mas`)
//! except for `sigma_rad`. Exactly one of `k` and `longest_baseline_m` sets
//! the ladder size.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::interference::{DriftMode, NoiseModel, PhaseRecovery};
use crate::modular::{precision_bounds, ArrayConfig};
use crate::monte_carlo::{validate_grid, Distance, TrialOptions};
use crate::reference::ReferenceScenario;
use crate::units::{arcsec_to_rad, mas_to_rad, rad_to_mas};

/// Every accepted key with the unit or form it expects.
pub const KEYS: &[(&str, &str)] = &[
    ("mode", "one of estimate, sweep, compare, reference"),
    ("wavelength_m", "meters, > 0"),
    ("theta_bar_as", "arcseconds, > 0"),
    ("k", "integer baseline count, >= 1"),
    ("longest_baseline_m", "meters, > 0"),
    ("sigma_rad", "radians, >= 0 (pi, pi/3, 2*pi accepted)"),
    ("flip_a", "rate in [0, 1)"),
    ("flip_b", "rate in [0, 1)"),
    ("flip_a2", "rate in [0, 1)"),
    ("flip_b2", "rate in [0, 1)"),
    ("alpha", "dimensionless, >= 0"),
    ("l0_m", "meters, > 0"),
    ("drift", "one of per_photon, per_data_set, per_baseline"),
    ("recovery", "one of quadrant, literal"),
    ("distance", "one of circular, linear"),
    ("m_grid", "comma-separated increasing integers, >= 1"),
    ("trials", "integer, >= 1"),
    ("seed", "unsigned 64-bit integer"),
    ("out", "file path"),
    ("theta_as", "arcseconds in [0, theta_bar_as)"),
    ("gamma0_as", "arcseconds"),
    ("theta0_mas", "milliarcseconds, > 0"),
    ("theta_r_as", "arcseconds"),
    ("decorrelation", "fraction in [0, 1]"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    Estimate,
    #[default]
    Sweep,
    Compare,
    Reference,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Estimate => "estimate",
            Mode::Sweep => "sweep",
            Mode::Compare => "compare",
            Mode::Reference => "reference",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "estimate" => Some(Mode::Estimate),
            "sweep" => Some(Mode::Sweep),
            "compare" => Some(Mode::Compare),
            "reference" => Some(Mode::Reference),
            _ => None,
        }
    }
}

/// How the ladder length was specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LadderSize {
    Count(usize),
    LongestBaseline(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub wavelength_m: f64,
    pub theta_bar_as: f64,
    pub ladder: LadderSize,
    pub noise: NoiseModel,
    pub options: TrialOptions,
    pub m_grid: Vec<u64>,
    pub trials: u64,
    pub seed: Option<u64>,
    pub out: Option<String>,
    /// Source angle for `estimate`; drawn from the seed when absent.
    pub theta_as: Option<f64>,
    pub gamma0_as: f64,
    pub theta0_mas: f64,
    pub theta_r_as: f64,
    pub decorrelation: f64,
}

const DEFAULT_GRID: &[u64] = &[1, 2, 4, 8, 16, 32, 64, 128, 256];

impl RunConfig {
    pub fn array(&self) -> Result<ArrayConfig> {
        let theta_bar = arcsec_to_rad(self.theta_bar_as);
        match self.ladder {
            LadderSize::Count(k) => ArrayConfig::new(self.wavelength_m, theta_bar, k),
            LadderSize::LongestBaseline(l) => {
                ArrayConfig::from_longest_baseline(self.wavelength_m, theta_bar, l)
            }
        }
    }

    pub fn reference_scenario(&self) -> Result<ReferenceScenario> {
        ReferenceScenario::new(
            arcsec_to_rad(self.gamma0_as),
            0.0,
            mas_to_rad(self.theta0_mas),
            arcsec_to_rad(self.theta_r_as),
        )
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::Config(
                "missing key 'seed' (unsigned 64-bit integer); set it or pass --seed".into(),
            )
        })
    }

    fn validate(&self) -> Result<()> {
        let array = self.array()?;
        self.noise.validate()?;
        validate_grid(&self.m_grid)?;
        if self.trials == 0 {
            return Err(bad("trials", "0"));
        }
        if let Some(theta) = self.theta_as {
            let rad = arcsec_to_rad(theta);
            if !(0.0..array.theta_bar_rad()).contains(&rad) {
                return Err(bad("theta_as", &theta.to_string()));
            }
        }
        if !(0.0..=1.0).contains(&self.decorrelation) {
            return Err(bad("decorrelation", &self.decorrelation.to_string()));
        }
        self.reference_scenario()?;
        Ok(())
    }

    /// Derived quantities, one `name = value` per entry.
    pub fn derived_summary(&self) -> Result<Vec<(&'static str, String)>> {
        let array = self.array()?;
        let (dphi, dtheta) = precision_bounds(&array);
        Ok(vec![
            ("l1_m", format!("{:.6}", array.l1_m())),
            ("k", array.k_count().to_string()),
            ("longest_baseline_m", format!("{:.3}", array.longest_m())),
            ("delta_phi_rad", format!("{dphi:.4e}")),
            ("delta_theta_mas", format!("{:.6}", rad_to_mas(dtheta))),
        ])
    }

    /// Serializes back into run-file text that parses to an equal config.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("mode", self.mode.as_str().into());
        line("wavelength_m", self.wavelength_m.to_string());
        line("theta_bar_as", self.theta_bar_as.to_string());
        match self.ladder {
            LadderSize::Count(k) => line("k", k.to_string()),
            LadderSize::LongestBaseline(l) => line("longest_baseline_m", l.to_string()),
        }
        let n = &self.noise;
        line("sigma_rad", n.sigma_rad.to_string());
        line("flip_a", n.flip_a.to_string());
        line("flip_b", n.flip_b.to_string());
        line("flip_a2", n.flip_a2.to_string());
        line("flip_b2", n.flip_b2.to_string());
        line("alpha", n.alpha.to_string());
        line("l0_m", n.l0_m.to_string());
        line("drift", n.drift.as_str().into());
        line("recovery", self.options.recovery.as_str().into());
        line("distance", self.options.distance.as_str().into());
        line(
            "m_grid",
            self.m_grid
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(", "),
        );
        line("trials", self.trials.to_string());
        if let Some(seed) = self.seed {
            line("seed", seed.to_string());
        }
        if let Some(out) = &self.out {
            line("out", out.clone());
        }
        if let Some(theta) = self.theta_as {
            line("theta_as", theta.to_string());
        }
        line("gamma0_as", self.gamma0_as.to_string());
        line("theta0_mas", self.theta0_mas.to_string());
        line("theta_r_as", self.theta_r_as.to_string());
        line("decorrelation", self.decorrelation.to_string());
        s
    }
}

fn unit_of(key: &str) -> &'static str {
    KEYS.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, u)| *u)
        .unwrap_or("?")
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!(
        "invalid value '{value}' for key '{key}' (expected {})",
        unit_of(key)
    ))
}

/// Parses a real number, also accepting `pi`, `pi/<x>`, `<x>*pi` and `<x>pi`.
fn parse_real(key: &str, raw: &str) -> Result<f64> {
    let v = raw.trim();
    let parsed = if let Some(rest) = v.strip_prefix("pi") {
        let rest = rest.trim();
        if rest.is_empty() {
            Some(std::f64::consts::PI)
        } else {
            rest.strip_prefix('/')
                .and_then(|d| d.trim().parse::<f64>().ok())
                .map(|d| std::f64::consts::PI / d)
        }
    } else if let Some(front) = v.strip_suffix("pi") {
        front
            .trim()
            .trim_end_matches('*')
            .trim()
            .parse::<f64>()
            .ok()
            .map(|f| f * std::f64::consts::PI)
    } else {
        v.parse::<f64>().ok()
    };
    match parsed {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(bad(key, raw)),
    }
}

fn parse_int<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim().parse::<T>().map_err(|_| bad(key, raw))
}

/// Parses and validates run-file text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                idx + 1
            ))
        })?;
        let key = key.trim();
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::Config(format!(
                "line {}: unknown key '{key}'",
                idx + 1
            )));
        }
        if entries
            .insert(key.to_string(), (idx + 1, value.trim().to_string()))
            .is_some()
        {
            return Err(Error::Config(format!(
                "line {}: duplicate key '{key}'",
                idx + 1
            )));
        }
    }

    let get = |key: &str| entries.get(key).map(|(_, v)| v.as_str());
    let required = |key: &str| {
        get(key).ok_or_else(|| Error::Config(format!("missing key '{key}' ({})", unit_of(key))))
    };
    let real_or = |key: &str, default: f64| get(key).map_or(Ok(default), |v| parse_real(key, v));

    let mode = match get("mode") {
        Some(v) => Mode::parse(v).ok_or_else(|| bad("mode", v))?,
        None => Mode::default(),
    };
    let wavelength_m = parse_real("wavelength_m", required("wavelength_m")?)?;
    let theta_bar_as = parse_real("theta_bar_as", required("theta_bar_as")?)?;
    let ladder = match (get("k"), get("longest_baseline_m")) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give exactly one of 'k' and 'longest_baseline_m', not both".into(),
            ))
        }
        (Some(k), None) => LadderSize::Count(parse_int("k", k)?),
        (None, Some(l)) => LadderSize::LongestBaseline(parse_real("longest_baseline_m", l)?),
        (None, None) => {
            return Err(Error::Config(
                "missing key 'k' (integer baseline count) or 'longest_baseline_m' (meters)".into(),
            ))
        }
    };

    let noise = NoiseModel {
        sigma_rad: real_or("sigma_rad", 0.0)?,
        flip_a: real_or("flip_a", 0.0)?,
        flip_b: real_or("flip_b", 0.0)?,
        flip_a2: real_or("flip_a2", 0.0)?,
        flip_b2: real_or("flip_b2", 0.0)?,
        alpha: real_or("alpha", 0.2)?,
        l0_m: real_or("l0_m", 10_000.0)?,
        drift: match get("drift") {
            Some(v) => DriftMode::parse(v).ok_or_else(|| bad("drift", v))?,
            None => DriftMode::default(),
        },
    };
    let options = TrialOptions {
        recovery: match get("recovery") {
            Some(v) => PhaseRecovery::parse(v).ok_or_else(|| bad("recovery", v))?,
            None => PhaseRecovery::default(),
        },
        distance: match get("distance") {
            Some(v) => Distance::parse(v).ok_or_else(|| bad("distance", v))?,
            None => Distance::default(),
        },
    };
    let m_grid = match get("m_grid") {
        Some(v) => v
            .split(',')
            .map(|item| parse_int::<u64>("m_grid", item))
            .collect::<Result<Vec<_>>>()?,
        None => DEFAULT_GRID.to_vec(),
    };

    let config = RunConfig {
        mode,
        wavelength_m,
        theta_bar_as,
        ladder,
        noise,
        options,
        m_grid,
        trials: get("trials").map_or(Ok(1000), |v| parse_int("trials", v))?,
        seed: get("seed").map(|v| parse_int("seed", v)).transpose()?,
        out: get("out").map(str::to_string),
        theta_as: get("theta_as")
            .map(|v| parse_real("theta_as", v))
            .transpose()?,
        gamma0_as: real_or("gamma0_as", 1.0)?,
        theta0_mas: real_or("theta0_mas", 1.0)?,
        theta_r_as: real_or("theta_r_as", 0.0)?,
        decorrelation: real_or("decorrelation", 0.0)?,
    };
    config.validate()?;
    Ok(config)
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}
