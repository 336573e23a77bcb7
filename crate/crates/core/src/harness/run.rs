use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{DeltaRule, ExperimentConfig, Scenario};
use crate::bounds::{
    bound_inconsistent, bound_noisy, bound_quantized, bound_statistics_only, bound_subgaussian, bound_uniform, BoundInputs, BoundValue,
    FormulaId,
};
use crate::matrix::{generate_low_rank, sample_mask_uniform, Dimensions, GroundTruth, SampleMask};
use crate::onebit::{build_polyhedron, consistency_report, observe_one_bit, observe_statistics_only, NoiseSpec};
use crate::quantize::{generate_dither_tensor, quantize_matrix, DitherSpec, QuantizerSpec};
use crate::solvers::{noise_radius, solve_one_bit_mc, solve_quantized_mc, solve_statistics_only, theorem_radius, SolverReport};
use crate::{Matrix, Result};

/// One (trial, bound) outcome. Serializes to exactly the report columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
    pub alpha: f64,
    pub m: usize,
    pub m_prime: usize,
    /// Quantizer resolution `Δ`.
    pub delta: f64,
    #[serde(rename = "K")]
    pub levels: u32,
    pub dither_kind: String,
    pub dither_param: f64,
    /// Pre-quantization noise level, or the perturbation scale applied to
    /// `X̄` in an inconsistency sweep.
    pub noise_sigma: f64,
    pub epsilon: f64,
    pub err_fro: f64,
    pub rel_err: f64,
    pub bound_id: FormulaId,
    pub bound_value: f64,
    pub bound_satisfied: bool,
    pub zeta: Option<u64>,
    pub violation: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub bound_id: FormulaId,
    pub m_prime: usize,
    pub records: usize,
    pub converged: usize,
    pub median_err: f64,
    pub mean_err: f64,
    pub bound_value_median: f64,
    /// Share of all records with `err_fro ≤ bound`.
    pub satisfaction_rate: f64,
    /// The same share over converged records only.
    pub converged_satisfaction_rate: f64,
    pub mean_zeta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<GroupSummary>,
    /// Noise budget used by the noisy bound, when relevant.
    pub beta: Option<f64>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent sub-seed for one stage of a trial.
fn derive(seed: u64, stage: u64) -> u64 {
    splitmix(seed ^ splitmix(stage))
}

const GROUND_TRUTH: u64 = 1;
const MASK: u64 = 2;
const DITHER: u64 = 3;
const NOISE: u64 = 4;
const PERTURB: u64 = 5;
const BETA: u64 = 6;

/// `q`-quantile (nearest rank) of the Frobenius norm of the noise vector.
pub fn noise_norm_quantile(noise: &NoiseSpec, m_prime: usize, draws: usize, q: f64, seed: u64) -> Result<f64> {
    let mut norms = (0..draws)
        .map(|j| {
            let n = noise.draw(m_prime, derive(seed, j as u64))?;
            Ok(n.map_or(0.0, |v| v.iter().map(|e| e * e).sum::<f64>().sqrt()))
        })
        .collect::<Result<Vec<f64>>>()?;
    norms.sort_by(f64::total_cmp);
    let rank = ((q * draws as f64).ceil() as usize).clamp(1, draws);
    Ok(norms[rank - 1])
}

struct Trial<'a> {
    cfg: &'a ExperimentConfig,
    index: usize,
    seed: u64,
    m_prime: usize,
    beta: f64,
}

impl Trial<'_> {
    fn inputs(&self) -> BoundInputs {
        let c = self.cfg;
        BoundInputs {
            n1: c.n1,
            n2: c.n2,
            r: c.r,
            alpha: c.alpha,
            resolution: c.resolution,
            levels: c.levels,
            epsilon: c.epsilon,
            dither_variance: c.dither_spec().variance(),
            zeta: 0,
            beta: self.beta,
            sigma1: c.noise_sigma,
            sigma2: c.noise_sigma,
            k1: None,
            k2: None,
            m: self.observed_m(),
            m_prime: self.m_prime,
            constants: c.constants,
        }
    }

    fn observed_m(&self) -> usize {
        match self.cfg.scenario {
            Scenario::OnebitDithersKnown | Scenario::InconsistencySweep => self.cfg.m,
            _ => 1,
        }
    }

    fn primary_bound(&self) -> FormulaId {
        match self.cfg.scenario {
            Scenario::Quantized | Scenario::RateSweep => FormulaId::Quantized,
            Scenario::OnebitDithersKnown => FormulaId::Subgaussian,
            Scenario::InconsistencySweep => FormulaId::Inconsistent,
            Scenario::OnebitStatsOnly => FormulaId::StatisticsOnly,
            Scenario::OnebitNoisy => FormulaId::Noisy,
        }
    }

    fn record(&self, bound: &BoundValue, err: f64, truth_norm: f64) -> TrialRecord {
        let c = self.cfg;
        let spec = c.dither_spec();
        let (kind, param) = if c.scenario.is_statistics_only() {
            ("uniform".to_string(), c.resolution / 2.0)
        } else {
            (spec.kind_name().to_string(), spec.parameter())
        };
        TrialRecord {
            trial: self.index,
            seed: self.seed,
            n1: c.n1,
            n2: c.n2,
            r: c.r,
            alpha: c.alpha,
            m: self.observed_m(),
            m_prime: self.m_prime,
            delta: c.resolution,
            levels: c.levels,
            dither_kind: kind,
            dither_param: param,
            noise_sigma: c.noise_sigma,
            epsilon: c.epsilon,
            err_fro: err,
            rel_err: if truth_norm > 0.0 { err / truth_norm } else { f64::NAN },
            bound_id: bound.formula_id,
            bound_value: bound.value,
            bound_satisfied: err <= bound.value,
            zeta: None,
            violation: None,
            iterations: 0,
            converged: false,
            wall_time_ms: 0.0,
        }
    }

    fn radius(&self, levels: u32) -> f64 {
        let c = self.cfg;
        match c.delta_rule {
            DeltaRule::Theorem => theorem_radius(self.m_prime, c.epsilon, levels, c.resolution),
            DeltaRule::QuantizationNoise => noise_radius(self.m_prime, c.resolution),
            DeltaRule::Fixed => c.radius.expect("validated"),
        }
    }

    fn setup(&self) -> Result<(GroundTruth, SampleMask)> {
        let c = self.cfg;
        let dims = Dimensions::new(c.n1, c.n2)?;
        let gt = generate_low_rank(dims, c.r, c.alpha, derive(self.seed, GROUND_TRUTH))?;
        // The mask seed ignores m′, so rate sweeps reuse each trial's matrix.
        let mask = sample_mask_uniform(dims, self.m_prime, derive(self.seed, MASK))?;
        Ok((gt, mask))
    }

    fn finish(&self, mut rec: TrialRecord, report: &SolverReport) -> TrialRecord {
        rec.iterations = report.iterations;
        rec.converged = report.converged;
        rec
    }

    fn run(&self) -> Result<Vec<TrialRecord>> {
        let c = self.cfg;
        let (gt, mask) = self.setup()?;
        let x = &gt.matrix;
        let truth_norm = x.norm();
        let inputs = self.inputs();
        let noise = if c.noise_sigma > 0.0 {
            NoiseSpec::gaussian(c.noise_sigma)
        } else {
            NoiseSpec::none()
        };

        match c.scenario {
            Scenario::Quantized | Scenario::RateSweep => {
                let spec = QuantizerSpec::new(c.resolution, c.levels)?;
                let q = quantize_matrix(x, &mask, &spec, c.dither_spec(), derive(self.seed, DITHER))?;
                let report = solve_quantized_mc(&q, &mask, self.radius(c.levels), &c.solver)?;
                let err = (x - &report.x_bar).norm();
                let rec = self.record(&bound_quantized(&inputs)?, err, truth_norm);
                Ok(vec![self.finish(rec, &report)])
            }
            Scenario::OnebitStatsOnly | Scenario::OnebitNoisy => {
                let obs = observe_statistics_only(x, &mask, c.resolution, &noise, derive(self.seed, DITHER))?;
                let report = solve_statistics_only(&obs, c.resolution, self.radius(1), &c.solver)?;
                let err = (x - &report.x_bar).norm();
                let bound = if c.scenario == Scenario::OnebitNoisy {
                    bound_noisy(&inputs)?
                } else {
                    bound_statistics_only(&inputs)?
                };
                let rec = self.record(&bound, err, truth_norm);
                Ok(vec![self.finish(rec, &report)])
            }
            Scenario::OnebitDithersKnown | Scenario::InconsistencySweep => {
                let spec = c.dither_spec();
                let t = generate_dither_tensor(spec, c.m, self.m_prime, derive(self.seed, DITHER))?;
                let obs = observe_one_bit(x, &mask, &t, &noise, derive(self.seed, NOISE))?;
                let report = solve_one_bit_mc(&build_polyhedron(&obs)?, c.reg_weight, &c.solver)?;

                let measure = |x_hat: &Matrix| -> Result<(f64, u64)> {
                    let zeta = consistency_report(x_hat, &obs, x)?.zeta as u64;
                    Ok(((x - x_hat).norm(), zeta))
                };
                let tag = |mut rec: TrialRecord, zeta: u64| {
                    rec.zeta = Some(zeta);
                    rec.violation = Some(report.data_residual);
                    self.finish(rec, &report)
                };

                if c.scenario == Scenario::OnebitDithersKnown {
                    let (err, zeta) = measure(&report.x_bar)?;
                    let mut bounds = vec![bound_subgaussian(&inputs)?];
                    if matches!(spec, DitherSpec::Uniform { .. }) {
                        bounds.push(bound_uniform(&inputs)?);
                    }
                    bounds.push(bound_inconsistent(&BoundInputs { zeta, ..inputs })?);
                    return Ok(bounds.iter().map(|b| tag(self.record(b, err, truth_norm), zeta)).collect());
                }

                let mut rng = ChaCha8Rng::seed_from_u64(derive(self.seed, PERTURB));
                let direction = Matrix::from_fn(c.n1, c.n2, |_, _| rng.sample::<f64, _>(StandardNormal));
                c.perturbation_grid
                    .iter()
                    .map(|&scale| {
                        let x_hat = &report.x_bar + &direction * scale;
                        let (err, zeta) = measure(&x_hat)?;
                        let b = bound_inconsistent(&BoundInputs { zeta, ..inputs })?;
                        let mut rec = tag(self.record(&b, err, truth_norm), zeta);
                        rec.noise_sigma = scale;
                        Ok(rec)
                    })
                    .collect()
            }
        }
    }

    /// Runs the trial; a failure becomes a single non-converged record.
    fn run_recorded(&self) -> Vec<TrialRecord> {
        let start = Instant::now();
        let mut records = self.run().unwrap_or_else(|_| {
            let failed = BoundValue {
                value: f64::NAN,
                failure_probability_exponent: f64::NAN,
                formula_id: self.primary_bound(),
                flag: None,
            };
            vec![self.record(&failed, f64::NAN, f64::NAN)]
        });
        if self.cfg.record_wall_time {
            let ms = start.elapsed().as_secs_f64() * 1e3;
            for r in &mut records {
                r.wall_time_ms = ms;
            }
        }
        records
    }
}

/// Runs every trial of `config` with seeds `base_seed + i`.
///
/// Trials run in parallel; records come back in (m′, trial, bound) order, so
/// the output depends on the config alone.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let grid = config.m_prime_values()?;
    let beta = match config.scenario {
        Scenario::OnebitNoisy => Some(match config.beta {
            Some(b) => b,
            None => noise_norm_quantile(
                &NoiseSpec::gaussian(config.noise_sigma),
                grid[0],
                config.beta_draws,
                config.beta_quantile,
                derive(config.base_seed, BETA),
            )?,
        }),
        _ => None,
    };

    let mut records = Vec::new();
    for &m_prime in &grid {
        let batch: Vec<Vec<TrialRecord>> = (0..config.trials)
            .into_par_iter()
            .map(|i| {
                Trial {
                    cfg: config,
                    index: i,
                    seed: config.base_seed.wrapping_add(i as u64),
                    m_prime,
                    beta: beta.unwrap_or(0.0),
                }
                .run_recorded()
            })
            .collect();
        records.extend(batch.into_iter().flatten());
    }
    let summary = summarize(&records);
    Ok(ExperimentOutput {
        config: config.clone(),
        records,
        summary,
        beta,
    })
}

/// Median of the finite values; NaN when there are none.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per (bound, m′) statistics in first-appearance order.
pub fn summarize(records: &[TrialRecord]) -> Vec<GroupSummary> {
    let mut groups: Vec<((FormulaId, usize), Vec<&TrialRecord>)> = Vec::new();
    for r in records {
        let key = (r.bound_id, r.m_prime);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let rate = |set: &[&TrialRecord]| {
        if set.is_empty() {
            f64::NAN
        } else {
            set.iter().filter(|r| r.bound_satisfied).count() as f64 / set.len() as f64
        }
    };
    groups
        .into_iter()
        .map(|((bound_id, m_prime), rs)| {
            let errs: Vec<f64> = rs.iter().map(|r| r.err_fro).collect();
            let finite: Vec<f64> = errs.iter().copied().filter(|e| e.is_finite()).collect();
            let converged: Vec<&TrialRecord> = rs.iter().copied().filter(|r| r.converged).collect();
            let zetas: Vec<f64> = rs.iter().filter_map(|r| r.zeta.map(|z| z as f64)).collect();
            GroupSummary {
                bound_id,
                m_prime,
                records: rs.len(),
                converged: converged.len(),
                median_err: median(&errs),
                mean_err: if finite.is_empty() {
                    f64::NAN
                } else {
                    finite.iter().sum::<f64>() / finite.len() as f64
                },
                bound_value_median: median(&rs.iter().map(|r| r.bound_value).collect::<Vec<_>>()),
                satisfaction_rate: rate(&rs),
                converged_satisfaction_rate: rate(&converged),
                mean_zeta: (!zetas.is_empty()).then(|| zetas.iter().sum::<f64>() / zetas.len() as f64),
            }
        })
        .collect()
}
