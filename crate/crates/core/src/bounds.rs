//! Closed-form recovery bounds and their failure-probability exponents.
//!
//! Every evaluator returns a [`BoundValue`] whose `failure_probability_exponent`
//! is the exponent `E` in a success probability of at least `1 − 2e^E`; the
//! guarantee is informative only when `E < 0`. Covering radii `ρ` inside the
//! exponents are set to the bound value itself.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Absolute constants of the probability statements. They carry no published
/// values and default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundConstants {
    #[serde(rename = "C")]
    pub big_c: f64,
    #[serde(rename = "c")]
    pub small_c: f64,
    #[serde(rename = "D1")]
    pub d1: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            big_c: 1.0,
            small_c: 1.0,
            d1: 1.0,
            c1: 1.0,
        }
    }
}

/// Parameters shared by all bound evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundInputs {
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
    pub alpha: f64,
    /// Quantizer resolution `Δ`.
    pub resolution: f64,
    /// Alphabet size `K`.
    pub levels: u32,
    pub epsilon: f64,
    /// Dither variance `T`.
    pub dither_variance: f64,
    /// Hamming sum `ζ`.
    pub zeta: u64,
    /// Frobenius budget `β` of the pre-quantization noise.
    pub beta: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Sub-gaussian proxy; `max(α, σ₁)` when unset.
    pub k1: Option<f64>,
    /// Sub-exponential proxy; `max(α, σ₂)` when unset.
    pub k2: Option<f64>,
    pub m: usize,
    pub m_prime: usize,
    #[serde(flatten)]
    pub constants: BoundConstants,
}

impl Default for BoundInputs {
    fn default() -> Self {
        Self {
            n1: 10,
            n2: 10,
            r: 1,
            alpha: 1.0,
            resolution: 0.0,
            levels: 1,
            epsilon: 0.05,
            dither_variance: 0.0,
            zeta: 0,
            beta: 0.0,
            sigma1: 0.0,
            sigma2: 0.0,
            k1: None,
            k2: None,
            m: 1,
            m_prime: 1,
            constants: BoundConstants::default(),
        }
    }
}

/// Keys accepted by [`BoundInputs::from_pairs`].
pub const INPUT_KEYS: &[&str] = &[
    "n1",
    "n2",
    "r",
    "alpha",
    "resolution",
    "levels",
    "epsilon",
    "dither_variance",
    "zeta",
    "beta",
    "sigma1",
    "sigma2",
    "k1",
    "k2",
    "m",
    "m_prime",
    "C",
    "c",
    "D1",
    "C1",
];

impl BoundInputs {
    /// Builds inputs from `key=value` pairs on top of the defaults.
    pub fn from_pairs<S: AsRef<str>>(pairs: &[S]) -> Result<Self> {
        let mut table = toml::Table::new();
        for p in pairs {
            let p = p.as_ref();
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::Argument(format!("expected key=value, got `{p}`")))?;
            let k = k.trim();
            if !INPUT_KEYS.contains(&k) {
                return Err(Error::Argument(format!(
                    "unknown bound parameter `{k}` (known: {})",
                    INPUT_KEYS.join(", ")
                )));
            }
            let v = v.trim();
            let value = if let Ok(i) = v.parse::<i64>() {
                toml::Value::Integer(i)
            } else {
                toml::Value::Float(
                    v.parse::<f64>()
                        .map_err(|_| Error::Argument(format!("`{k}` needs a number, got `{v}`")))?,
                )
            };
            table.insert(k.to_string(), value);
        }
        let inputs: Self = table.try_into().map_err(|e: toml::de::Error| Error::Argument(e.to_string()))?;
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::Argument(format!("dimensions must be positive, got {}x{}", self.n1, self.n2)));
        }
        let c = &self.constants;
        let reals = [
            ("alpha", self.alpha),
            ("resolution", self.resolution),
            ("epsilon", self.epsilon),
            ("dither_variance", self.dither_variance),
            ("beta", self.beta),
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
            ("k1", self.k1.unwrap_or(0.0)),
            ("k2", self.k2.unwrap_or(0.0)),
            ("C", c.big_c),
            ("c", c.small_c),
            ("D1", c.d1),
            ("C1", c.c1),
        ];
        for (name, v) in reals {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if c.big_c == 0.0 {
            return Err(Error::Argument("C must be positive".into()));
        }
        Ok(())
    }

    fn size(&self) -> f64 {
        (self.n1 * self.n2) as f64
    }

    fn k1(&self) -> f64 {
        self.k1.unwrap_or(self.alpha.max(self.sigma1))
    }

    fn k2(&self) -> f64 {
        self.k2.unwrap_or(self.alpha.max(self.sigma2))
    }

    /// `2α(n1+n2)r√(n1n2)/ρ`, the log covering number of the rank-`r` ball.
    fn covering(&self, rho: f64) -> f64 {
        let num = 2.0 * self.alpha * (self.n1 + self.n2) as f64 * self.r as f64 * self.size().sqrt();
        if num == 0.0 {
            0.0
        } else {
            num / rho
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    Quantized,
    Subgaussian,
    Uniform,
    Inconsistent,
    StatisticsOnly,
    Noisy,
}

impl FormulaId {
    pub const ALL: [FormulaId; 6] = [
        FormulaId::Quantized,
        FormulaId::Subgaussian,
        FormulaId::Uniform,
        FormulaId::Inconsistent,
        FormulaId::StatisticsOnly,
        FormulaId::Noisy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormulaId::Quantized => "quantized",
            FormulaId::Subgaussian => "subgaussian",
            FormulaId::Uniform => "uniform",
            FormulaId::Inconsistent => "inconsistent",
            FormulaId::StatisticsOnly => "statistics_only",
            FormulaId::Noisy => "noisy",
        }
    }

    pub fn evaluate(self, inputs: &BoundInputs) -> Result<BoundValue> {
        match self {
            FormulaId::Quantized => bound_quantized(inputs),
            FormulaId::Subgaussian => bound_subgaussian(inputs),
            FormulaId::Uniform => bound_uniform(inputs),
            FormulaId::Inconsistent => bound_inconsistent(inputs),
            FormulaId::StatisticsOnly => bound_statistics_only(inputs),
            FormulaId::Noisy => bound_noisy(inputs),
        }
    }
}

impl std::fmt::Display for FormulaId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Why a bound was computed outside its theorem's hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFlag {
    /// `ε = 0`: the exponent is undefined.
    DegenerateEpsilon,
    /// `Δ < 2α` for the statistics-only family.
    ResolutionBelowRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub failure_probability_exponent: f64,
    pub formula_id: FormulaId,
    pub flag: Option<BoundFlag>,
}

impl BoundValue {
    pub fn flagged(&self) -> bool {
        self.flag.is_some()
    }

    /// Lower bound on the success probability, clamped to `[0, 1]`.
    pub fn success_probability(&self) -> f64 {
        (1.0 - 2.0 * self.failure_probability_exponent.exp()).clamp(0.0, 1.0)
    }
}

/// `2√(r·n1·n2·(ε + K²Δ²/4))` for dithered multi-level quantization.
pub fn bound_quantized(inputs: &BoundInputs) -> Result<BoundValue> {
    inputs.validate()?;
    if inputs.r == 0 {
        return Err(Error::Argument("rank must be at least 1".into()));
    }
    let k = inputs.levels as f64;
    let q = k * k * inputs.resolution * inputs.resolution / 4.0;
    let value = 2.0 * (inputs.r as f64 * inputs.size() * (inputs.epsilon + q)).sqrt();
    let exponent = inputs.covering(value) - inputs.epsilon.powi(2) * inputs.m_prime as f64 / inputs.constants.big_c;
    Ok(BoundValue {
        value,
        failure_probability_exponent: exponent,
        formula_id: FormulaId::Quantized,
        flag: None,
    })
}

fn subgaussian_family(inputs: &BoundInputs, zeta_term: f64, id: FormulaId) -> Result<BoundValue> {
    inputs.validate()?;
    if inputs.alpha <= 0.0 {
        return Err(Error::Argument("α must be positive".into()));
    }
    let a2r = 2.0 * inputs.alpha.powi(2) * inputs.r as f64;
    let inner = a2r + zeta_term + 2.0 * inputs.dither_variance + 6.0 * inputs.epsilon;
    let value = (inputs.size() * inner).sqrt();
    let cover = 2.0 * inputs.alpha * (inputs.n1 + inputs.n2) as f64 * inputs.r as f64 / inner.sqrt();
    let gain = inputs.constants.big_c * inputs.epsilon.powi(2) * (inputs.m * inputs.m_prime) as f64;
    Ok(BoundValue {
        value,
        failure_probability_exponent: cover - gain,
        formula_id: id,
        flag: None,
    })
}

/// `√(n1·n2·(2α²r + 2T + 6ε))` for consistent reconstruction under
/// sub-gaussian dithers.
pub fn bound_subgaussian(inputs: &BoundInputs) -> Result<BoundValue> {
    subgaussian_family(inputs, 0.0, FormulaId::Subgaussian)
}

/// `4√(ε·α·n1·n2)` for consistent reconstruction under uniform dithers on
/// `[−α, α]`.
pub fn bound_uniform(inputs: &BoundInputs) -> Result<BoundValue> {
    inputs.validate()?;
    if inputs.alpha <= 0.0 {
        return Err(Error::Argument("α must be positive".into()));
    }
    let (a, e) = (inputs.alpha, inputs.epsilon);
    let value = 4.0 * (e * a * inputs.size()).sqrt();
    if e == 0.0 {
        return Ok(BoundValue {
            value,
            failure_probability_exponent: f64::INFINITY,
            formula_id: FormulaId::Uniform,
            flag: Some(BoundFlag::DegenerateEpsilon),
        });
    }
    let cover = 0.5 * (a / e).sqrt() * (inputs.n1 + inputs.n2) as f64 * inputs.r as f64;
    let gain = e * e * (inputs.m * inputs.m_prime) as f64 / (2.0 * a * a);
    Ok(BoundValue {
        value,
        failure_probability_exponent: cover - gain,
        formula_id: FormulaId::Uniform,
        flag: None,
    })
}

/// `√(n1·n2·(2α²r + 8α²ζ + 2T + 6ε))` for a reconstruction with `ζ` sign
/// disagreements.
pub fn bound_inconsistent(inputs: &BoundInputs) -> Result<BoundValue> {
    let z = 8.0 * inputs.alpha.powi(2) * inputs.zeta as f64;
    subgaussian_family(inputs, z, FormulaId::Inconsistent)
}

/// `2√(r·n1·n2·(ε + Δ²/4))` for recovery from signs alone.
pub fn bound_statistics_only(inputs: &BoundInputs) -> Result<BoundValue> {
    let mut v = bound_quantized(&BoundInputs { levels: 1, ..*inputs })?;
    v.formula_id = FormulaId::StatisticsOnly;
    if inputs.resolution < 2.0 * inputs.alpha {
        v.flag = Some(BoundFlag::ResolutionBelowRange);
    }
    Ok(v)
}

/// Statistics-only bound plus the noise budget `β`.
pub fn bound_noisy(inputs: &BoundInputs) -> Result<BoundValue> {
    let base = bound_statistics_only(inputs)?;
    let d = inputs.k2() + inputs.resolution * inputs.k1() + inputs.resolution.powi(2) / 4.0;
    let (d1, d2) = noisy_deltas(inputs.epsilon, d);
    let gain = inputs.constants.d1 * inputs.m_prime as f64 * d1.min(d2);
    Ok(BoundValue {
        value: base.value + inputs.beta,
        failure_probability_exponent: inputs.covering(base.value) - gain,
        formula_id: FormulaId::Noisy,
        flag: base.flag,
    })
}

/// `(ε²/d², ε/d)`; both vanish when `d = 0` and `ε = 0`.
fn noisy_deltas(epsilon: f64, d: f64) -> (f64, f64) {
    if d == 0.0 {
        return if epsilon == 0.0 {
            (0.0, 0.0)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
    }
    (epsilon * epsilon / (d * d), epsilon / d)
}

/// The two concentration rates of the noisy theorem.
pub fn noisy_rates(inputs: &BoundInputs) -> Result<(f64, f64)> {
    inputs.validate()?;
    let d = inputs.k2() + inputs.resolution * inputs.k1() + inputs.resolution.powi(2) / 4.0;
    Ok(noisy_deltas(inputs.epsilon, d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tightness {
    UniformTighter,
    SubgaussianTighter,
    ConditionViolated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TightnessComparison {
    pub verdict: Tightness,
    /// `q₁² − q₂²`: squared sub-gaussian minus squared uniform bound.
    pub gap: f64,
}

/// Compares the uniform and sub-gaussian bounds with `T = α²/3`.
///
/// When `(r + ⅓)α ≥ 8ε` the uniform bound is provably tighter and the sign of
/// the gap confirms it; otherwise the verdict is `ConditionViolated` and the
/// gap is still reported.
pub fn compare_tightness(inputs: &BoundInputs) -> Result<TightnessComparison> {
    inputs.validate()?;
    let (r, a, e) = (inputs.r as f64, inputs.alpha, inputs.epsilon);
    let gap = inputs.size() * ((2.0 * r + 2.0 / 3.0) * a * a + 6.0 * e - 16.0 * e * a);
    let verdict = if (r + 1.0 / 3.0) * a < 8.0 * e {
        Tightness::ConditionViolated
    } else if gap > 0.0 {
        Tightness::UniformTighter
    } else {
        Tightness::SubgaussianTighter
    };
    Ok(TightnessComparison { verdict, gap })
}

const EPS_LO: f64 = 1e-12;
const EPS_HI: f64 = 1e3;
const EPS_TOL: f64 = 1e-10;
const MAX_EXPANSIONS: usize = 12;

/// Smallest `ε > 0` whose failure exponent is non-positive.
pub fn epsilon_root(inputs: &BoundInputs, family: FormulaId) -> Result<f64> {
    let exponent = |e: f64| -> Result<f64> {
        family
            .evaluate(&BoundInputs { epsilon: e, ..*inputs })
            .map(|v| v.failure_probability_exponent)
    };
    let (mut lo, mut hi) = (EPS_LO, EPS_HI);
    let mut expansions = 0;
    while exponent(hi)? > 0.0 {
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::Numerical(format!("{family} exponent stays positive up to ε = {hi:e}")));
        }
        lo = hi;
        hi *= 1e3;
    }
    expansions = 0;
    while exponent(lo)? <= 0.0 {
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::Numerical(format!("{family} exponent is non-positive down to ε = {lo:e}")));
        }
        hi = lo;
        lo *= 1e-3;
    }
    while hi - lo > EPS_TOL * hi {
        let mid = (lo * hi).sqrt();
        if exponent(mid)? <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Least-squares slope of `log ε*(m′)` against `log m′`, where `ε*` is the
/// root from [`epsilon_root`].
pub fn epsilon_decay_rate(inputs: &BoundInputs, family: FormulaId, m_prime_grid: &[usize]) -> Result<f64> {
    if m_prime_grid.len() < 5 {
        return Err(Error::Argument(format!("grid needs at least 5 points, got {}", m_prime_grid.len())));
    }
    let (min, max) = m_prime_grid.iter().fold((usize::MAX, 0), |(a, b), &v| (a.min(v), b.max(v)));
    if min == 0 || (max as f64) < 100.0 * min as f64 {
        return Err(Error::Argument("grid must be positive and span at least two decades".into()));
    }
    let mut xs = Vec::with_capacity(m_prime_grid.len());
    let mut ys = Vec::with_capacity(m_prime_grid.len());
    for &mp in m_prime_grid {
        let e = epsilon_root(&BoundInputs { m_prime: mp, ..*inputs }, family)?;
        xs.push((mp as f64).ln());
        ys.push(e.ln());
    }
    Ok(line_fit(&xs, &ys)?.slope)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero for two points or an exact fit.
    pub slope_stderr: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Argument("line fit needs at least two paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("line fit needs distinct abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_stderr = if xs.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
    })
}

#[derive(Serialize)]
struct BoundRow<'a> {
    formula_id: &'a str,
    n1: usize,
    n2: usize,
    r: usize,
    alpha: f64,
    resolution: f64,
    levels: u32,
    epsilon: f64,
    dither_variance: f64,
    zeta: u64,
    beta: f64,
    sigma1: f64,
    sigma2: f64,
    k1: f64,
    k2: f64,
    m: usize,
    m_prime: usize,
    #[serde(rename = "C")]
    big_c: f64,
    #[serde(rename = "c")]
    small_c: f64,
    #[serde(rename = "D1")]
    d1: f64,
    #[serde(rename = "C1")]
    c1: f64,
    value: f64,
    exponent: f64,
    flag: &'a str,
}

/// Writes one CSV row per evaluation: formula id, every input, value and
/// exponent.
pub fn write_bound_csv<W: Write>(w: W, rows: &[(BoundInputs, BoundValue)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (i, v) in rows {
        let flag = match v.flag {
            None => "",
            Some(BoundFlag::DegenerateEpsilon) => "degenerate_epsilon",
            Some(BoundFlag::ResolutionBelowRange) => "resolution_below_range",
        };
        out.serialize(BoundRow {
            formula_id: v.formula_id.name(),
            n1: i.n1,
            n2: i.n2,
            r: i.r,
            alpha: i.alpha,
            resolution: i.resolution,
            levels: i.levels,
            epsilon: i.epsilon,
            dither_variance: i.dither_variance,
            zeta: i.zeta,
            beta: i.beta,
            sigma1: i.sigma1,
            sigma2: i.sigma2,
            k1: i.k1(),
            k2: i.k2(),
            m: i.m,
            m_prime: i.m_prime,
            big_c: i.constants.big_c,
            small_c: i.constants.small_c,
            d1: i.constants.d1,
            c1: i.constants.c1,
            value: v.value,
            exponent: v.failure_probability_exponent,
            flag,
        })?;
    }
    out.flush().map_err(|e| Error::Io {
        path: "<bound csv>".into(),
        source: e,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base() -> BoundInputs {
        BoundInputs::default()
    }

    #[test]
    fn quantized_examples() {
        let i = BoundInputs {
            r: 2,
            epsilon: 0.05,
            levels: 4,
            resolution: 0.5,
            ..base()
        };
        let v = bound_quantized(&i).unwrap();
        assert!((v.value - 2.0 * 210f64.sqrt()).abs() < 1e-12);
        assert!((v.value - 28.983).abs() < 1e-3);

        let z = bound_quantized(&BoundInputs {
            epsilon: 0.0,
            resolution: 0.0,
            ..i
        })
        .unwrap();
        assert_eq!(z.value, 0.0);

        let d = bound_quantized(&BoundInputs { r: 4, ..i }).unwrap();
        assert!((d.value / v.value - 2f64.sqrt()).abs() < 1e-12);

        assert!(bound_quantized(&BoundInputs { n1: 0, ..i }).is_err());
        assert!(bound_quantized(&BoundInputs { r: 0, ..i }).is_err());
    }

    #[test]
    fn quantized_exponent() {
        let i = BoundInputs {
            r: 2,
            levels: 4,
            resolution: 0.5,
            m_prime: 1000,
            ..base()
        };
        let v = bound_quantized(&i).unwrap();
        let want = 2.0 * 20.0 * 2.0 * 10.0 / v.value - 0.0025 * 1000.0;
        assert!((v.failure_probability_exponent - want).abs() < 1e-12);
    }

    #[test]
    fn subgaussian_examples() {
        let i = BoundInputs {
            dither_variance: 1.0 / 3.0,
            epsilon: 0.0,
            ..base()
        };
        let v = bound_subgaussian(&i).unwrap();
        assert!((v.value - (800.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((v.value - 16.330).abs() < 1e-3);
        assert!(bound_subgaussian(&BoundInputs { alpha: 0.0, ..i }).is_err());

        let only_eps = BoundInputs {
            alpha: 1e-300,
            dither_variance: 0.0,
            epsilon: 0.1,
            ..base()
        };
        let a = bound_subgaussian(&only_eps).unwrap().value;
        let b = bound_subgaussian(&BoundInputs { epsilon: 0.2, ..only_eps }).unwrap().value;
        assert!((b / a - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn uniform_examples() {
        let i = BoundInputs { epsilon: 0.01, ..base() };
        let v = bound_uniform(&i).unwrap();
        assert!((v.value - 4.0).abs() < 1e-12);
        assert!(!v.flagged());
        let q = bound_uniform(&BoundInputs { epsilon: 0.04, ..i }).unwrap();
        assert!((q.value - 8.0).abs() < 1e-12);
        let z = bound_uniform(&BoundInputs { epsilon: 0.0, ..i }).unwrap();
        assert_eq!(z.value, 0.0);
        assert_eq!(z.flag, Some(BoundFlag::DegenerateEpsilon));
        assert!(bound_uniform(&BoundInputs { epsilon: 1e-14, ..i }).unwrap().value < 1e-5);
    }

    #[test]
    fn inconsistent_examples() {
        let i = BoundInputs {
            dither_variance: 1.0 / 3.0,
            epsilon: 0.0,
            ..base()
        };
        assert_eq!(bound_inconsistent(&i).unwrap().value, bound_subgaussian(&i).unwrap().value);
        let v = bound_inconsistent(&BoundInputs { zeta: 1, ..i }).unwrap();
        assert!((v.value - (100.0f64 * (10.0 + 2.0 / 3.0)).sqrt()).abs() < 1e-12);
        assert!((v.value - 32.660).abs() < 1e-3);
        let w = bound_inconsistent(&BoundInputs { zeta: 2, ..i }).unwrap();
        assert!(w.value > v.value);
    }

    #[test]
    fn statistics_only_and_noisy_examples() {
        let i = BoundInputs {
            epsilon: 0.0,
            resolution: 2.0,
            ..base()
        };
        let s = bound_statistics_only(&i).unwrap();
        assert!((s.value - 20.0).abs() < 1e-12);
        assert!(!s.flagged());
        let z = bound_statistics_only(&BoundInputs { resolution: 0.0, ..i }).unwrap();
        assert_eq!(z.value, 0.0);
        assert_eq!(z.flag, Some(BoundFlag::ResolutionBelowRange));

        assert_eq!(bound_noisy(&i).unwrap().value, s.value);
        let n = bound_noisy(&BoundInputs { beta: 3.0, ..i }).unwrap();
        assert!((n.value - 23.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_rates_cross_at_denominator() {
        // d = K₂ + ΔK₁ + Δ²/4 = 1 + 2 + 1 = 4
        let i = BoundInputs {
            resolution: 2.0,
            sigma1: 0.5,
            sigma2: 0.5,
            epsilon: 4.0,
            ..base()
        };
        let (a, b) = noisy_rates(&i).unwrap();
        assert!((a - b).abs() < 1e-15 && (a - 1.0).abs() < 1e-15);
        let explicit = BoundInputs {
            k1: Some(3.0),
            k2: Some(1.0),
            epsilon: 8.0,
            ..i
        };
        let (a, b) = noisy_rates(&explicit).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn tightness_examples() {
        let i = BoundInputs { epsilon: 0.01, ..base() };
        let t = compare_tightness(&i).unwrap();
        assert_eq!(t.verdict, Tightness::UniformTighter);
        assert!((t.gap - 100.0 * (8.0 / 3.0 + 0.06 - 0.16)).abs() < 1e-9);
        assert!((t.gap - 256.67).abs() < 1e-2);

        let sg = bound_subgaussian(&BoundInputs {
            dither_variance: 1.0 / 3.0,
            ..i
        })
        .unwrap()
        .value;
        let un = bound_uniform(&i).unwrap().value;
        assert!((t.gap - (sg * sg - un * un)).abs() < 1e-9);

        let v = compare_tightness(&BoundInputs { epsilon: 1.0, ..i }).unwrap();
        assert_eq!(v.verdict, Tightness::ConditionViolated);
    }

    #[test]
    fn planted_slope_is_recovered() {
        let xs: Vec<f64> = (3..=7).map(|k| (10f64.powi(k)).ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.7f64.ln() - 0.4 * x).collect();
        let fit = line_fit(&xs, &ys).unwrap();
        assert!((fit.slope + 0.4).abs() < 1e-12);
        assert!(fit.slope_stderr < 1e-12);
        assert!(line_fit(&[1.0], &[1.0]).is_err());
        assert!(line_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    fn decade_grid() -> Vec<usize> {
        (0..=8).map(|k| (1e3 * 10f64.powf(k as f64 / 2.0)).round() as usize).collect()
    }

    #[test]
    fn decay_rates() {
        let q = BoundInputs {
            r: 2,
            levels: 8,
            resolution: 0.0,
            ..base()
        };
        let s = epsilon_decay_rate(&q, FormulaId::Quantized, &decade_grid()).unwrap();
        assert!((s + 0.4).abs() < 1e-6, "{s}");

        let g = BoundInputs {
            alpha: 1e-3,
            m: 10,
            ..base()
        };
        let s = epsilon_decay_rate(&g, FormulaId::Subgaussian, &decade_grid()).unwrap();
        assert!((-0.41..=-0.39).contains(&s), "{s}");

        let u = BoundInputs { m: 10, ..base() };
        let s = epsilon_decay_rate(&u, FormulaId::Uniform, &decade_grid()).unwrap();
        assert!((s + 0.4).abs() < 1e-6, "{s}");
    }

    #[test]
    fn decay_rate_rejects_short_grids() {
        assert!(epsilon_decay_rate(&base(), FormulaId::Quantized, &[1000, 2000, 3000, 4000]).is_err());
        assert!(epsilon_decay_rate(&base(), FormulaId::Quantized, &[1000, 2000, 3000, 4000, 5000]).is_err());
    }

    #[test]
    fn root_is_the_sign_change() {
        let i = BoundInputs {
            r: 2,
            m_prime: 10_000,
            ..base()
        };
        let e = epsilon_root(&i, FormulaId::Quantized).unwrap();
        let at = |x: f64| {
            bound_quantized(&BoundInputs { epsilon: x, ..i })
                .unwrap()
                .failure_probability_exponent
        };
        assert!(at(e) <= 0.0);
        assert!(at(e * (1.0 - 1e-8)) > 0.0);
    }

    #[test]
    fn pairs_parse() {
        let i = BoundInputs::from_pairs(&["n1=20", "r=2", "alpha=1", "epsilon=0.05", "C=2.5", "k1=3"]).unwrap();
        assert_eq!(i.n1, 20);
        assert_eq!(i.n2, 10);
        assert_eq!(i.r, 2);
        assert_eq!(i.constants.big_c, 2.5);
        assert_eq!(i.k1, Some(3.0));
        assert!(BoundInputs::from_pairs(&["bogus=1"]).is_err());
        assert!(BoundInputs::from_pairs(&["alpha"]).is_err());
        assert!(BoundInputs::from_pairs(&["alpha=-1"]).is_err());
        assert!(BoundInputs::from_pairs(&["alpha=abc"]).is_err());
    }

    #[test]
    fn csv_rows() {
        let i = BoundInputs {
            epsilon: 0.0,
            resolution: 2.0,
            ..base()
        };
        let rows: Vec<_> = FormulaId::ALL.iter().map(|f| (i, f.evaluate(&i).unwrap())).collect();
        let mut buf = Vec::new();
        write_bound_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert!(lines[0].starts_with("formula_id,n1,n2,r,alpha"));
        assert!(lines[0].ends_with("value,exponent,flag"));
        assert!(lines[5].starts_with("statistics_only,"));
        assert!(lines[3].ends_with("degenerate_epsilon"));
    }

    fn arb_inputs() -> impl Strategy<Value = BoundInputs> {
        (
            1usize..40,
            1usize..40,
            1usize..6,
            0.01f64..5.0,
            0.0f64..3.0,
            1u32..16,
            0.0f64..2.0,
            0.0f64..3.0,
            0u64..50,
            0.0f64..10.0,
        )
            .prop_map(|(n1, n2, r, alpha, resolution, levels, epsilon, t, zeta, beta)| BoundInputs {
                n1,
                n2,
                r,
                alpha,
                resolution,
                levels,
                epsilon,
                dither_variance: t,
                zeta,
                beta,
                m: 5,
                m_prime: 100,
                ..BoundInputs::default()
            })
    }

    fn values(i: &BoundInputs) -> Vec<f64> {
        FormulaId::ALL.iter().map(|f| f.evaluate(i).unwrap().value).collect()
    }

    proptest! {
        #[test]
        fn values_are_monotone(i in arb_inputs(), bump in 0.0f64..2.0, step in 1u64..5) {
            let b = values(&i);
            let bumped = [
                BoundInputs { epsilon: i.epsilon + bump, ..i },
                BoundInputs { r: i.r + step as usize, ..i },
                BoundInputs { dither_variance: i.dither_variance + bump, ..i },
                BoundInputs { zeta: i.zeta + step, ..i },
                BoundInputs { beta: i.beta + bump, ..i },
                BoundInputs { resolution: i.resolution + bump, ..i },
            ];
            for j in &bumped {
                for (x, y) in b.iter().zip(values(j)) {
                    prop_assert!(y >= *x, "{x} -> {y} for {j:?}");
                }
            }
        }

        #[test]
        fn reductions_hold(i in arb_inputs()) {
            let z = BoundInputs { zeta: 0, ..i };
            prop_assert_eq!(bound_inconsistent(&z).unwrap().value, bound_subgaussian(&z).unwrap().value);
            let nb = BoundInputs { beta: 0.0, ..i };
            prop_assert_eq!(bound_noisy(&nb).unwrap().value, bound_statistics_only(&nb).unwrap().value);
            let k1 = BoundInputs { levels: 1, ..i };
            prop_assert_eq!(bound_statistics_only(&i).unwrap().value, bound_quantized(&k1).unwrap().value);
        }

        #[test]
        fn values_are_nonnegative(i in arb_inputs()) {
            for v in values(&i) {
                prop_assert!(v >= 0.0 && v.is_finite());
            }
        }
    }
}
