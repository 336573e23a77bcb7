use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::run::{median, ExperimentOutput, GroupSummary, TrialRecord};
use crate::bounds::line_fit;
use crate::{Error, Result};

/// Report columns, in order.
pub const CSV_COLUMNS: [&str; 24] = [
    "trial",
    "seed",
    "n1",
    "n2",
    "r",
    "alpha",
    "m",
    "m_prime",
    "delta",
    "K",
    "dither_kind",
    "dither_param",
    "noise_sigma",
    "epsilon",
    "err_fro",
    "rel_err",
    "bound_id",
    "bound_value",
    "bound_satisfied",
    "zeta",
    "violation",
    "iterations",
    "converged",
    "wall_time_ms",
];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

fn summary_lines(groups: &[GroupSummary]) -> Vec<String> {
    groups
        .iter()
        .map(|g| {
            format!(
                "# bound={} m_prime={} records={} converged={} median_err={} mean_err={} bound_median={} satisfaction_rate={} converged_satisfaction_rate={} mean_zeta={}",
                g.bound_id,
                g.m_prime,
                g.records,
                g.converged,
                g.median_err,
                g.mean_err,
                g.bound_value_median,
                g.satisfaction_rate,
                g.converged_satisfaction_rate,
                opt(g.mean_zeta)
            )
        })
        .collect()
}

/// Writes one CSV row per record followed by `#` summary lines. An empty
/// record list yields the header alone.
pub fn write_report<W: Write>(mut out: W, records: &[TrialRecord], summary: &[GroupSummary], preamble: &[String]) -> Result<()> {
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
        w.write_record(CSV_COLUMNS)?;
        for r in records {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io("<report>", e))?;
    }
    if !records.is_empty() {
        for line in preamble.iter().cloned().chain(summary_lines(summary)) {
            writeln!(out, "{line}").map_err(|e| Error::io("<report>", e))?;
        }
    }
    Ok(())
}

/// Writes the report of `output` to `path`.
pub fn emit_report(output: &ExperimentOutput, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let c = &output.config;
    let mut preamble = vec![format!(
        "# scenario={} trials={} base_seed={} delta_rule={:?} reg_weight={} C={} c={} D1={} C1={}",
        c.scenario.name(),
        c.trials,
        c.base_seed,
        c.delta_rule,
        c.reg_weight,
        c.constants.big_c,
        c.constants.small_c,
        c.constants.d1,
        c.constants.c1
    )];
    if let Some(b) = output.beta {
        preamble.push(format!("# beta={b}"));
    }
    write_report(&mut w, &output.records, &output.summary, &preamble).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// Slope of `log median err_fro` against `log m′`.
    pub slope: f64,
    /// Half-width of the 95% confidence interval of the slope.
    pub half_width: f64,
    /// `(m′, median err_fro)` per group.
    pub points: Vec<(usize, f64)>,
}

/// Log-log least-squares slope of the median error against `m′`.
///
/// Each (trial, m′) pair counts once even when a trial carries several bound
/// rows.
pub fn fit_rate(records: &[TrialRecord]) -> Result<RateFit> {
    let mut groups: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
    for r in records {
        groups.entry(r.m_prime).or_default().entry(r.trial).or_insert(r.err_fro);
    }
    if groups.len() < 4 {
        return Err(Error::Argument(format!(
            "rate fit needs at least 4 distinct m′ groups, got {}",
            groups.len()
        )));
    }
    let points: Vec<(usize, f64)> = groups
        .into_iter()
        .map(|(mp, errs)| (mp, median(&errs.into_values().collect::<Vec<_>>())))
        .collect();
    if let Some((mp, e)) = points.iter().find(|(_, e)| e.is_nan() || *e <= 0.0) {
        return Err(Error::Numerical(format!("median error {e} at m′ = {mp} has no logarithm")));
    }
    let xs: Vec<f64> = points.iter().map(|(mp, _)| (*mp as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    let fit = line_fit(&xs, &ys)?;
    let df = (points.len() - 2) as f64;
    let t = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Numerical(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(RateFit {
        slope: fit.slope,
        half_width: t * fit.slope_stderr,
        points,
    })
}
