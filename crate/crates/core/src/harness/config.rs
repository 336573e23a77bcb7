use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::BoundConstants;
use crate::quantize::DitherSpec;
use crate::solvers::ProxParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Dithered multi-level quantization, Frobenius-ball recovery.
    Quantized,
    /// One-bit signs against known thresholds, polyhedron recovery.
    OnebitDithersKnown,
    /// One-bit signs with unknown `U[−Δ/2, Δ/2]` thresholds.
    OnebitStatsOnly,
    /// As `OnebitStatsOnly` with Gaussian noise added before quantization.
    OnebitNoisy,
    /// `OnebitDithersKnown`, then `X̄` perturbed by growing Gaussian noise.
    InconsistencySweep,
    /// `Quantized` repeated over `m_prime_grid`.
    RateSweep,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Quantized => "quantized",
            Scenario::OnebitDithersKnown => "onebit_dithers_known",
            Scenario::OnebitStatsOnly => "onebit_stats_only",
            Scenario::OnebitNoisy => "onebit_noisy",
            Scenario::InconsistencySweep => "inconsistency_sweep",
            Scenario::RateSweep => "rate_sweep",
        }
    }

    pub(crate) fn is_quantized(self) -> bool {
        matches!(self, Scenario::Quantized | Scenario::RateSweep)
    }

    pub(crate) fn is_statistics_only(self) -> bool {
        matches!(self, Scenario::OnebitStatsOnly | Scenario::OnebitNoisy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DitherKind {
    None,
    Uniform,
    Gaussian,
}

/// How the Frobenius-ball radius `δ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRule {
    /// `√(m′(ε + K²Δ²/4))`.
    Theorem,
    /// `(Δ/2)√m′`.
    QuantizationNoise,
    /// The `radius` key.
    Fixed,
}

/// One experiment, read from a flat TOML file whose keys mirror the fields.
/// Solver parameters (`max_iters`, `step_size`, `tol_rel_change`, `tol_feas`)
/// and bound constants (`C`, `c`, `D1`, `C1`) sit at the top level too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
    pub alpha: f64,
    /// Quantizer resolution `Δ`.
    pub resolution: f64,
    /// Alphabet size `K`.
    pub levels: u32,
    pub dither: DitherKind,
    /// Half-width or standard deviation. Defaults to `Δ/2` for quantized
    /// scenarios and `α` for one-bit ones.
    pub dither_param: Option<f64>,
    /// Dither sequences per entry.
    pub m: usize,
    pub m_prime: Option<usize>,
    pub m_prime_fraction: Option<f64>,
    pub noise_sigma: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub delta_rule: DeltaRule,
    pub radius: Option<f64>,
    pub reg_weight: f64,
    /// Noise budget for the noisy bound; estimated from `beta_draws` noise
    /// draws at `beta_quantile` when unset.
    pub beta: Option<f64>,
    pub beta_draws: usize,
    pub beta_quantile: f64,
    pub m_prime_grid: Vec<usize>,
    pub perturbation_grid: Vec<f64>,
    /// Off by default so that reports are byte-reproducible.
    pub record_wall_time: bool,
    pub output: Option<PathBuf>,
    #[serde(flatten)]
    pub solver: ProxParams,
    #[serde(flatten)]
    pub constants: BoundConstants,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Quantized,
            n1: 32,
            n2: 32,
            r: 2,
            alpha: 1.0,
            resolution: 0.25,
            levels: 8,
            dither: DitherKind::Uniform,
            dither_param: None,
            m: 1,
            m_prime: None,
            m_prime_fraction: None,
            noise_sigma: 0.0,
            epsilon: 0.05,
            trials: 1,
            base_seed: 0,
            delta_rule: DeltaRule::QuantizationNoise,
            radius: None,
            reg_weight: 1.0,
            beta: None,
            beta_draws: 1000,
            beta_quantile: 0.99,
            m_prime_grid: Vec::new(),
            perturbation_grid: Vec::new(),
            record_wall_time: false,
            output: None,
            solver: ProxParams::default(),
            constants: BoundConstants::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "scenario",
    "n1",
    "n2",
    "r",
    "alpha",
    "resolution",
    "levels",
    "dither",
    "dither_param",
    "m",
    "m_prime",
    "m_prime_fraction",
    "noise_sigma",
    "epsilon",
    "trials",
    "base_seed",
    "delta_rule",
    "radius",
    "reg_weight",
    "beta",
    "beta_draws",
    "beta_quantile",
    "m_prime_grid",
    "perturbation_grid",
    "record_wall_time",
    "output",
    "max_iters",
    "step_size",
    "tol_rel_change",
    "tol_feas",
    "C",
    "c",
    "D1",
    "C1",
];

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if !table.contains_key("scenario") {
            return Err(Error::Config("missing required key `scenario`".into()));
        }
        if let Some(k) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Number of observed entries, resolved from `m_prime` or
    /// `m_prime_fraction`.
    pub fn resolved_m_prime(&self) -> Result<usize> {
        let total = self.n1 * self.n2;
        let mp = match (self.m_prime, self.m_prime_fraction) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("set only one of `m_prime` and `m_prime_fraction`".into()));
            }
            (Some(v), None) => v,
            (None, Some(f)) if f > 0.0 && f <= 1.0 => ((f * total as f64).round() as usize).max(1),
            (None, Some(f)) => return Err(Error::Config(format!("m_prime_fraction must lie in (0, 1], got {f}"))),
            (None, None) => return Err(Error::Config("one of `m_prime` or `m_prime_fraction` is required".into())),
        };
        if mp == 0 || mp > total {
            return Err(Error::Config(format!("m_prime must lie in 1..={total}, got {mp}")));
        }
        Ok(mp)
    }

    /// Observation sizes the scenario runs over.
    pub fn m_prime_values(&self) -> Result<Vec<usize>> {
        if self.scenario != Scenario::RateSweep {
            return Ok(vec![self.resolved_m_prime()?]);
        }
        let total = self.n1 * self.n2;
        if self.m_prime_grid.is_empty() {
            return Err(Error::Config("rate_sweep needs a non-empty `m_prime_grid`".into()));
        }
        if let Some(&bad) = self.m_prime_grid.iter().find(|&&v| v == 0 || v > total) {
            return Err(Error::Config(format!("m_prime_grid entry {bad} outside 1..={total}")));
        }
        Ok(self.m_prime_grid.clone())
    }

    pub fn dither_spec(&self) -> DitherSpec {
        let default = if self.scenario.is_quantized() {
            self.resolution / 2.0
        } else {
            self.alpha
        };
        let p = self.dither_param.unwrap_or(default);
        match self.dither {
            DitherKind::None => DitherSpec::None,
            DitherKind::Uniform => DitherSpec::Uniform { half_width: p },
            DitherKind::Gaussian => DitherSpec::Gaussian { sigma: p },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n1 == 0 || self.n2 == 0 {
            return bad(format!("dimensions must be positive, got {}x{}", self.n1, self.n2));
        }
        if self.r == 0 || self.r > self.n1.min(self.n2) {
            return bad(format!("rank {} outside 1..={}", self.r, self.n1.min(self.n2)));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        let positive = [("alpha", self.alpha)];
        let nonneg = [
            ("epsilon", self.epsilon),
            ("noise_sigma", self.noise_sigma),
            ("reg_weight", self.reg_weight),
            ("beta", self.beta.unwrap_or(0.0)),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{k} must be positive, got {v}"));
            }
        }
        for (k, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{k} must be nonnegative, got {v}"));
            }
        }
        self.solver.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.m_prime_values()?;

        let s = self.scenario;
        if (s.is_quantized() || s.is_statistics_only()) && !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return bad(format!("{} needs a positive resolution", s.name()));
        }
        if s.is_quantized() {
            if self.levels == 0 {
                return bad("levels must be at least 1".into());
            }
            if self.dither == DitherKind::Gaussian {
                return bad("quantized scenarios take `none` or `uniform` dither".into());
            }
        }
        if matches!(s, Scenario::OnebitDithersKnown | Scenario::InconsistencySweep) {
            if self.dither == DitherKind::None {
                return bad("one-bit scenarios need random thresholds".into());
            }
            if self.m == 0 {
                return bad("m must be at least 1".into());
            }
        }
        if s.is_statistics_only() && self.m != 1 {
            return bad(format!("{} observes a single sequence; m must be 1", s.name()));
        }
        if s == Scenario::InconsistencySweep
            && (self.perturbation_grid.is_empty() || self.perturbation_grid.iter().any(|v| !(*v >= 0.0 && v.is_finite())))
        {
            return bad("inconsistency_sweep needs a non-empty, nonnegative `perturbation_grid`".into());
        }
        if s == Scenario::OnebitNoisy && (self.beta_draws == 0 || !(self.beta_quantile > 0.0 && self.beta_quantile <= 1.0)) {
            return bad("beta estimation needs beta_draws ≥ 1 and beta_quantile in (0, 1]".into());
        }
        if self.dither != DitherKind::None {
            self.dither_spec().validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.delta_rule == DeltaRule::Fixed {
            match self.radius {
                Some(v) if v > 0.0 && v.is_finite() => {}
                _ => return bad("delta_rule = \"fixed\" needs a positive `radius`".into()),
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_list_matches_fields() {
        let mut cfg = ExperimentConfig {
            dither_param: Some(1.0),
            m_prime: Some(1),
            m_prime_fraction: Some(1.0),
            radius: Some(1.0),
            beta: Some(1.0),
            output: Some("x".into()),
            ..Default::default()
        };
        cfg.m_prime_grid = vec![1];
        let table: toml::Table = cfg.to_toml_string().parse().unwrap();
        let mut got: Vec<_> = table.keys().cloned().collect();
        let mut want: Vec<_> = KEYS.iter().map(|s| s.to_string()).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn parses_flat_file() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
scenario = "onebit_dithers_known"
n1 = 16
n2 = 12
r = 2
m = 5
m_prime_fraction = 0.5
max_iters = 500
C = 2.0
"#,
        )
        .unwrap();
        assert_eq!(cfg.scenario, Scenario::OnebitDithersKnown);
        assert_eq!(cfg.resolved_m_prime().unwrap(), 96);
        assert_eq!(cfg.solver.max_iters, 500);
        assert_eq!(cfg.constants.big_c, 2.0);
        assert_eq!(cfg.dither_spec(), DitherSpec::Uniform { half_width: 1.0 });
    }

    #[test]
    fn rejects_bad_configs() {
        let cases = [
            "n1 = 4",
            "scenario = \"quantized\"\nm_prime = 10\nbogus = 1",
            "scenario = \"quantized\"",
            "scenario = \"quantized\"\nm_prime = 10\nm_prime_fraction = 0.5",
            "scenario = \"quantized\"\nm_prime = 5000",
            "scenario = \"quantized\"\nm_prime = 10\ntrials = 0",
            "scenario = \"quantized\"\nm_prime = 10\nr = 40",
            "scenario = \"quantized\"\nm_prime = 10\ndelta_rule = \"fixed\"",
            "scenario = \"quantized\"\nm_prime = 10\ndither = \"gaussian\"",
            "scenario = \"onebit_stats_only\"\nm_prime = 10\nm = 3",
            "scenario = \"rate_sweep\"\nm_prime = 10",
            "scenario = \"inconsistency_sweep\"\nm_prime = 10",
            "scenario = \"quantized\"\nm_prime = 10\nalpha = 0.0",
            "scenario = \"nope\"\nm_prime = 10",
        ];
        for c in cases {
            assert!(ExperimentConfig::from_toml_str(c).is_err(), "{c}");
        }
    }

    #[test]
    fn round_trips() {
        let cfg = ExperimentConfig {
            scenario: Scenario::RateSweep,
            m_prime_grid: vec![100, 200],
            ..Default::default()
        };
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }
}
