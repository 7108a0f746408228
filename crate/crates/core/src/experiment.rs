//! Monte Carlo experiment harness: parameter sweeps over paired channel
//! realizations, deterministic CSV output, and a text summary.
//!
//! Pairing: all randomness of realization `r` derives from `(seed, r)`
//! alone, so every sweep value, scheme, and radiation pattern sees the same
//! small-scale fading, error draws, and initialization phases. Adding sweep
//! values therefore never perturbs existing rows, and paired comparisons
//! (RSMA vs SDMA, idealized vs practical, consecutive sweep values) share
//! their channel realizations.

use crate::bcd::{self, BcdParams};
use crate::channel::{draw_sample_set, gen_realization};
use crate::config::{RadiationPattern, Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::rng::{derive_stream, StreamRole};
use crate::scalar::Scalar;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

/// Swept scenario parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    None,
    /// Transmit power in dBm.
    Power,
    /// CSI uncertainty scalar.
    Delta,
    /// Per-user QoS threshold.
    Rth,
    /// BD-RIS antennas per sector (cells).
    RisAntennas,
    /// Transmit antennas.
    TxAntennas,
}

impl SweepKind {
    /// Column label; matches the CLI flag values.
    pub fn label(self) -> &'static str {
        match self {
            SweepKind::None => "none",
            SweepKind::Power => "power",
            SweepKind::Delta => "delta",
            SweepKind::Rth => "rth",
            SweepKind::RisAntennas => "m",
            SweepKind::TxAntennas => "n",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SweepKind::None),
            "power" => Ok(SweepKind::Power),
            "delta" => Ok(SweepKind::Delta),
            "rth" => Ok(SweepKind::Rth),
            "m" => Ok(SweepKind::RisAntennas),
            "n" => Ok(SweepKind::TxAntennas),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep `{other}` (expected power|delta|rth|m|n|none)"
            ))),
        }
    }
}

/// One experiment: a base scenario, an optional sweep, and the scheme /
/// pattern grid to run at every sweep value.
#[derive(Debug, Clone)]
pub struct ExperimentSpec<T> {
    pub base: SystemConfig<T>,
    pub sweep: SweepKind,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub patterns: Vec<RadiationPattern>,
    pub realizations: usize,
    pub seed: u64,
}

impl<T: Scalar> ExperimentSpec<T> {
    pub fn single_point(base: SystemConfig<T>, realizations: usize, seed: u64) -> Self {
        Self {
            base,
            sweep: SweepKind::None,
            values: vec![f64::NAN],
            schemes: vec![Scheme::Rsma, Scheme::Sdma],
            patterns: vec![RadiationPattern::Idealized],
            realizations,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.realizations < 1 {
            return Err(Error::InvalidConfig("realizations must be >= 1".into()));
        }
        if self.sweep != SweepKind::None && self.values.is_empty() {
            return Err(Error::InvalidConfig(
                "sweep requires a non-empty value list".into(),
            ));
        }
        if self.schemes.is_empty() || self.patterns.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one scheme and one pattern are required".into(),
            ));
        }
        Ok(())
    }

    /// Base config with one sweep value applied.
    fn config_at(&self, value: f64) -> SystemConfig<T> {
        let mut cfg = self.base.clone();
        match self.sweep {
            SweepKind::None => {}
            SweepKind::Power => cfg.power_dbm = T::of(value),
            SweepKind::Delta => cfg.csi_delta = T::of(value),
            SweepKind::Rth => cfg.rate_threshold = vec![T::of(value)],
            SweepKind::RisAntennas => {
                let m = value as usize;
                let (x, y) = planar_factors(m);
                cfg.cells = m;
                cfg.cells_x = x;
                cfg.cells_y = y;
            }
            SweepKind::TxAntennas => cfg.tx_antennas = value as usize,
        }
        cfg
    }
}

/// Most-square factorization for the planar array when sweeping the cell
/// count.
pub fn planar_factors(m: usize) -> (usize, usize) {
    let mut best = (m, 1);
    let mut d = 1;
    while d * d <= m {
        if m % d == 0 {
            best = (m / d, d);
        }
        d += 1;
    }
    best
}

/// One CSV row: a realization result or a per-configuration aggregate.
#[derive(Debug, Clone)]
pub struct Row {
    pub scheme: Scheme,
    pub pattern: RadiationPattern,
    pub sweep_param: &'static str,
    pub sweep_value: f64,
    /// `Some(r)` for detail rows, `None` for the aggregate row.
    pub realization: Option<usize>,
    /// Perfect-channel sum rate; `NaN` for infeasible realizations.
    pub sum_rate: f64,
    pub iterations: f64,
    /// Detail rows: 0/1 convergence flag; aggregates: converged fraction.
    pub converged: f64,
    pub qos_retries: f64,
    pub status: RowStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    QosInfeasible,
    Aggregate,
}

impl RowStatus {
    fn label(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::QosInfeasible => "qos_infeasible",
            RowStatus::Aggregate => "aggregate",
        }
    }
}

/// Run the experiment grid. Realizations are dispatched to a worker pool;
/// rows come back in deterministic `(sweep value, scheme, pattern,
/// realization)` order with one aggregate row per configuration.
pub fn run<T: Scalar>(spec: &ExperimentSpec<T>) -> Result<Vec<Row>> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for (vi, &value) in spec.values.iter().enumerate() {
        for (si, &scheme) in spec.schemes.iter().enumerate() {
            for (pi, &pattern) in spec.patterns.iter().enumerate() {
                for r in 0..spec.realizations {
                    jobs.push((vi, si, pi, r, value, scheme, pattern));
                }
            }
        }
    }

    let mut results: Vec<(usize, Row)> = jobs
        .into_par_iter()
        .map(|(vi, si, pi, r, value, scheme, pattern)| {
            let order = ((vi * spec.schemes.len() + si) * spec.patterns.len() + pi)
                * spec.realizations
                + r;
            let row = run_one(spec, value, scheme, pattern, r);
            row.map(|row| (order, row))
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by_key(|(order, _)| *order);

    // Interleave aggregate rows after each configuration's detail rows.
    let mut rows = Vec::new();
    let per_config = spec.realizations;
    for chunk in results.chunks(per_config) {
        let detail: Vec<&Row> = chunk.iter().map(|(_, row)| row).collect();
        let ok: Vec<&&Row> = detail
            .iter()
            .filter(|row| row.status == RowStatus::Ok)
            .collect();
        let mean = |f: &dyn Fn(&Row) -> f64| {
            if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|row| f(row)).sum::<f64>() / ok.len() as f64
            }
        };
        let aggregate = Row {
            scheme: detail[0].scheme,
            pattern: detail[0].pattern,
            sweep_param: detail[0].sweep_param,
            sweep_value: detail[0].sweep_value,
            realization: None,
            sum_rate: mean(&|row: &Row| row.sum_rate),
            iterations: mean(&|row: &Row| row.iterations),
            converged: mean(&|row: &Row| row.converged),
            qos_retries: mean(&|row: &Row| row.qos_retries),
            status: RowStatus::Aggregate,
        };
        rows.extend(chunk.iter().map(|(_, row)| row.clone()));
        rows.push(aggregate);
    }
    Ok(rows)
}

fn run_one<T: Scalar>(
    spec: &ExperimentSpec<T>,
    value: f64,
    scheme: Scheme,
    pattern: RadiationPattern,
    realization: usize,
) -> Result<Row> {
    let mut cfg_raw = spec.config_at(value);
    cfg_raw.pattern = pattern;
    cfg_raw.seed = spec.seed;
    let cfg = cfg_raw.validate()?;

    let mut rng_fading = derive_stream(spec.seed, realization as u64, StreamRole::Fading);
    let real = gen_realization(&cfg, &mut rng_fading)?;
    let mut rng_err = derive_stream(spec.seed, realization as u64, StreamRole::CsiError);
    let set = draw_sample_set(&real, &cfg, &mut rng_err);

    let params = BcdParams::from_config(&cfg, scheme);
    let mut rng_init = derive_stream(spec.seed, realization as u64, StreamRole::Init);
    let sweep_value = if spec.sweep == SweepKind::None {
        f64::NAN
    } else {
        value
    };
    match bcd::solve(&set, &cfg, &params, &mut rng_init) {
        Ok((ris, prec, trace)) => {
            let report = bcd::evaluate(&ris, &prec, &set.perfect, &cfg);
            Ok(Row {
                scheme,
                pattern,
                sweep_param: spec.sweep.label(),
                sweep_value,
                realization: Some(realization),
                sum_rate: report.sum_rate.as_f64(),
                iterations: trace.outer_iterations() as f64,
                converged: if trace.converged { 1.0 } else { 0.0 },
                qos_retries: trace.qos_retries as f64,
                status: RowStatus::Ok,
            })
        }
        Err(Error::QosInfeasible { retries }) => Ok(Row {
            scheme,
            pattern,
            sweep_param: spec.sweep.label(),
            sweep_value,
            realization: Some(realization),
            sum_rate: f64::NAN,
            iterations: 0.0,
            converged: 0.0,
            qos_retries: retries as f64,
            status: RowStatus::QosInfeasible,
        }),
        Err(other) => Err(other),
    }
}

/// CSV header shared by all outputs.
pub const CSV_HEADER: &str =
    "scheme,pattern,sweep_param,sweep_value,realization,sum_rate_bps_hz,iterations,converged,qos_retries,status";

/// Render rows as CSV text, byte-stable across runs.
pub fn to_csv(rows: &[Row]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let realization = match row.realization {
            Some(r) => r.to_string(),
            None => "mean".to_string(),
        };
        let sum_rate = if row.sum_rate.is_nan() {
            String::new()
        } else {
            format!("{:.9}", row.sum_rate)
        };
        let sweep_value = if row.sweep_value.is_nan() {
            String::new()
        } else {
            format!("{}", row.sweep_value)
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.3},{:.3},{:.3},{}",
            row.scheme.name(),
            row.pattern.name(),
            row.sweep_param,
            sweep_value,
            realization,
            sum_rate,
            row.iterations,
            row.converged,
            row.qos_retries,
            row.status.label()
        );
    }
    out
}

/// Write the CSV to disk.
pub fn write_csv(path: &Path, rows: &[Row]) -> Result<()> {
    std::fs::write(path, to_csv(rows))?;
    Ok(())
}

/// Per-configuration summary plus RSMA-SDMA gaps where both schemes ran.
pub fn report(rows: &[Row]) -> String {
    let mut out = String::new();
    let aggregates: Vec<&Row> = rows
        .iter()
        .filter(|row| row.status == RowStatus::Aggregate)
        .collect();
    for agg in &aggregates {
        let detail: Vec<&Row> = rows
            .iter()
            .filter(|row| {
                row.status != RowStatus::Aggregate
                    && row.scheme == agg.scheme
                    && row.pattern == agg.pattern
                    && same_value(row.sweep_value, agg.sweep_value)
            })
            .collect();
        let infeasible = detail
            .iter()
            .filter(|row| row.status == RowStatus::QosInfeasible)
            .count();
        let _ = writeln!(
            out,
            "{} {} {}={}: ergodic sum-rate {:.4} b/s/Hz, mean iterations {:.1}, converged {:.0}%, infeasible {:.0}%",
            agg.scheme.name(),
            agg.pattern.name(),
            agg.sweep_param,
            if agg.sweep_value.is_nan() { "-".to_string() } else { agg.sweep_value.to_string() },
            agg.sum_rate,
            agg.iterations,
            agg.converged * 100.0,
            100.0 * infeasible as f64 / detail.len().max(1) as f64,
        );
    }
    // paired RSMA-SDMA gaps
    for agg in &aggregates {
        if agg.scheme != Scheme::Rsma {
            continue;
        }
        if let Some(sdma) = aggregates.iter().find(|row| {
            row.scheme == Scheme::Sdma
                && row.pattern == agg.pattern
                && same_value(row.sweep_value, agg.sweep_value)
        }) {
            let _ = writeln!(
                out,
                "gap rsma-sdma {} {}={}: {:+.4} b/s/Hz",
                agg.pattern.name(),
                agg.sweep_param,
                if agg.sweep_value.is_nan() {
                    "-".to_string()
                } else {
                    agg.sweep_value.to_string()
                },
                agg.sum_rate - sdma.sum_rate,
            );
        }
    }
    out
}

fn same_value(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a == b
}
