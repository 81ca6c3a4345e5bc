//! Gain sweeps and their tabular serialization.
//!
//! Every value is kept in nats internally. [`Table::render`] can rescale
//! information quantities to bits at the output boundary.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::nf::{nf_exact, NfConfig};
use crate::report::DecompositionReport;
use crate::sk::{calibrate_gamma, sk_sweep, solve_rho_star, sum_capacity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepMode {
    /// Two-user MAC with the feedback scheme.
    Sk,
    /// Two-user MAC without feedback. The input variance is fixed at
    /// `P / gamma_cal^2`, so both modes deliver received power `P` at the
    /// calibrated gain.
    Nf,
}

impl FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sk" => Ok(Self::Sk),
            "nf" => Ok(Self::Nf),
            other => Err(invalid("mode", format!("unknown mode `{other}`"))),
        }
    }
}

/// One sweep point, normalized per channel use.
///
/// `mmse_term` is the weighted estimation contribution: `mmse / 2` for the
/// feedback scheme and `gamma * mmse` without feedback. Hence
/// `derivative_reconstructed = mmse_term + interference_term + feedback_term`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub mutual_information: f64,
    pub derivative_fd: f64,
    pub derivative_reconstructed: f64,
    pub mmse_term: f64,
    pub interference_term: f64,
    pub feedback_term: f64,
    pub residual: f64,
}

impl SweepRow {
    pub fn from_report(mode: SweepMode, report: &DecompositionReport) -> Self {
        let r = report.per_use();
        let mmse_weight = match mode {
            SweepMode::Sk => 0.5,
            SweepMode::Nf => r.gamma,
        };
        Self {
            gamma: r.gamma,
            mutual_information: r.mutual_information,
            derivative_fd: r.derivative_fd,
            derivative_reconstructed: r.derivative_reconstructed,
            mmse_term: mmse_weight * r.mmse_term,
            interference_term: r.interference_term,
            feedback_term: r.feedback_term,
            residual: r.residual(),
        }
    }
}

/// `points` equally spaced gains from `min` to `max` inclusive.
pub fn gamma_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(invalid(
            "points",
            format!("{points} points, need at least 2"),
        ));
    }
    if !(min > 0.0) || !(max > min) || !max.is_finite() {
        return Err(invalid(
            "gamma range",
            format!("[{min}, {max}] is not a positive interval"),
        ));
    }
    let step = (max - min) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                max
            } else {
                min + i as f64 * step
            }
        })
        .collect())
}

/// `[gamma_cal / 2, 2 gamma_cal]` around the calibrated steady-state gain.
pub fn default_gamma_range(power: f64) -> Result<(f64, f64)> {
    let gamma = calibrate_gamma(power, solve_rho_star(power)?)?;
    Ok((0.5 * gamma, 2.0 * gamma))
}

/// Input variance of the no-feedback sweep, `P / gamma_cal^2`.
pub fn no_feedback_variance(power: f64) -> Result<f64> {
    let gamma = calibrate_gamma(power, solve_rho_star(power)?)?;
    Ok(power / (gamma * gamma))
}

pub fn run_sweep(mode: SweepMode, power: f64, n: usize, grid: &[f64]) -> Result<Vec<SweepRow>> {
    let reports = match mode {
        SweepMode::Sk => sk_sweep(power, n, grid)?,
        SweepMode::Nf => {
            if grid.is_empty() {
                return Err(invalid("gamma_grid", "empty grid"));
            }
            let sigma2 = no_feedback_variance(power)?;
            grid.par_iter()
                .map(|&g| nf_exact(&NfConfig::symmetric(g, sigma2, n)?))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(reports
        .iter()
        .map(|r| SweepRow::from_report(mode, r))
        .collect())
}

/// How a column responds to `--bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    /// Channel gain; never rescaled.
    Gain,
    Nats,
    NatsPerGain,
}

impl Unit {
    pub fn label(self, bits: bool) -> &'static str {
        match (self, bits) {
            (Self::Gain, _) => "gain",
            (Self::Nats, false) => "nats",
            (Self::Nats, true) => "bits",
            (Self::NatsPerGain, false) => "nats per unit gamma",
            (Self::NatsPerGain, true) => "bits per unit gamma",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: &'static str,
    pub unit: Unit,
    pub description: &'static str,
}

const fn col(name: &'static str, unit: Unit, description: &'static str) -> Column {
    Column {
        name,
        unit,
        description,
    }
}

pub const SWEEP_COLUMNS: [Column; 8] = [
    col("gamma", Unit::Gain, "steady-state channel gain"),
    col("mutual_information", Unit::Nats, "I(inputs; Y^n) / n"),
    col(
        "derivative_fd",
        Unit::NatsPerGain,
        "central difference of I / n",
    ),
    col(
        "derivative_reconstructed",
        Unit::NatsPerGain,
        "mmse_term + interference_term + feedback_term",
    ),
    col(
        "mmse_term",
        Unit::NatsPerGain,
        "estimation part: mmse/2 with feedback, gamma*mmse without",
    ),
    col(
        "interference_term",
        Unit::NatsPerGain,
        "cross-correlation of the users' errors",
    ),
    col(
        "feedback_term",
        Unit::NatsPerGain,
        "part induced by feedback (0 without)",
    ),
    col(
        "residual",
        Unit::NatsPerGain,
        "derivative_fd - derivative_reconstructed",
    ),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(invalid("format", format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    columns: Vec<String>,
    units: Vec<String>,
    rows: Vec<Vec<f64>>,
}

/// Rounds to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

impl Table {
    pub fn from_sweep(rows: &[SweepRow]) -> Self {
        Self {
            columns: SWEEP_COLUMNS.to_vec(),
            rows: rows
                .iter()
                .map(|r| {
                    vec![
                        r.gamma,
                        r.mutual_information,
                        r.derivative_fd,
                        r.derivative_reconstructed,
                        r.mmse_term,
                        r.interference_term,
                        r.feedback_term,
                        r.residual,
                    ]
                })
                .collect(),
        }
    }

    /// Keeps the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.columns
                    .iter()
                    .position(|c| c.name == *n)
                    .ok_or_else(|| invalid("column", format!("no column `{n}`")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            columns: idx.iter().map(|&i| self.columns[i]).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&i| r[i]).collect())
                .collect(),
        })
    }

    fn scaled(&self, bits: bool) -> Vec<Vec<f64>> {
        let factor = if bits {
            std::f64::consts::LN_2.recip()
        } else {
            1.0
        };
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&self.columns)
                    .map(|(&v, c)| match c.unit {
                        Unit::Gain => v,
                        _ => v * factor,
                    })
                    .collect()
            })
            .collect()
    }

    /// Serializes with 12 significant digits and LF line endings.
    pub fn render(&self, format: Format, bits: bool) -> String {
        let rows = self.scaled(bits);
        match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_writer(Vec::new());
                let header: Vec<&str> = self.columns.iter().map(|c| c.name).collect();
                w.write_record(&header).expect("in-memory write");
                for r in &rows {
                    w.write_record(r.iter().map(|v| format!("{v:.11e}")))
                        .expect("in-memory write");
                }
                let bytes = w.into_inner().expect("in-memory flush");
                String::from_utf8(bytes).expect("ascii output")
            }
            Format::Json => {
                let table = JsonTable {
                    columns: self.columns.iter().map(|c| c.name.to_string()).collect(),
                    units: self
                        .columns
                        .iter()
                        .map(|c| c.unit.label(bits).to_string())
                        .collect(),
                    rows: rows
                        .iter()
                        .map(|r| r.iter().map(|&v| round12(v)).collect())
                        .collect(),
                };
                let mut out = serde_json::to_string_pretty(&table).expect("finite table");
                out.push('\n');
                out
            }
        }
    }

    /// Column names and values read back from [`Table::render`] output.
    pub fn parse(text: &str, format: Format) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
        let bad = |e: String| invalid("table", e);
        match format {
            Format::Csv => {
                let mut r = csv::Reader::from_reader(text.as_bytes());
                let names = r
                    .headers()
                    .map_err(|e| bad(e.to_string()))?
                    .iter()
                    .map(str::to_string)
                    .collect();
                let rows = r
                    .records()
                    .map(|rec| {
                        rec.map_err(|e| bad(e.to_string()))?
                            .iter()
                            .map(|c| c.parse::<f64>().map_err(|e| bad(e.to_string())))
                            .collect()
                    })
                    .collect::<Result<_>>()?;
                Ok((names, rows))
            }
            Format::Json => {
                let t: JsonTable = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
                Ok((t.columns, t.rows))
            }
        }
    }

    /// `name (unit): description` lines.
    pub fn describe(columns: &[Column]) -> String {
        let mut out = String::new();
        for c in columns {
            let _ = writeln!(
                out,
                "  {} ({}): {}",
                c.name,
                c.unit.label(false),
                c.description
            );
        }
        out
    }
}

/// Figure presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Figure {
    /// Mutual information with and without feedback against the sum capacity.
    Information = 2,
    /// Gradient components without feedback.
    NoFeedbackTerms = 3,
    /// Gradient components with feedback.
    FeedbackTerms = 4,
}

impl Figure {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            2 => Ok(Self::Information),
            3 => Ok(Self::NoFeedbackTerms),
            4 => Ok(Self::FeedbackTerms),
            other => Err(invalid("figure", format!("{other} is not one of 2, 3, 4"))),
        }
    }

    pub fn columns(self) -> Vec<Column> {
        match self {
            Self::Information => vec![
                col("gamma", Unit::Gain, "steady-state channel gain"),
                col("mi_feedback", Unit::Nats, "I / n with the feedback scheme"),
                col("mi_no_feedback", Unit::Nats, "I / n without feedback"),
                col("sum_capacity", Unit::Nats, "sum capacity with feedback"),
            ],
            Self::NoFeedbackTerms => pick(&[
                "gamma",
                "mmse_term",
                "interference_term",
                "derivative_reconstructed",
                "derivative_fd",
            ]),
            Self::FeedbackTerms => pick(&[
                "gamma",
                "mmse_term",
                "interference_term",
                "feedback_term",
                "derivative_reconstructed",
                "derivative_fd",
            ]),
        }
    }
}

fn pick(names: &[&str]) -> Vec<Column> {
    names
        .iter()
        .filter_map(|n| SWEEP_COLUMNS.iter().find(|c| c.name == *n).copied())
        .collect()
}

pub fn figure_table(figure: Figure, power: f64, n: usize, grid: &[f64]) -> Result<Table> {
    match figure {
        Figure::Information => {
            let sk = run_sweep(SweepMode::Sk, power, n, grid)?;
            let nf = run_sweep(SweepMode::Nf, power, n, grid)?;
            let cap = sum_capacity(power)?;
            Ok(Table {
                columns: figure.columns(),
                rows: sk
                    .iter()
                    .zip(&nf)
                    .map(|(s, f)| vec![s.gamma, s.mutual_information, f.mutual_information, cap])
                    .collect(),
            })
        }
        Figure::NoFeedbackTerms => {
            let names: Vec<&str> = figure.columns().iter().map(|c| c.name).collect();
            Table::from_sweep(&run_sweep(SweepMode::Nf, power, n, grid)?).select(&names)
        }
        Figure::FeedbackTerms => {
            let names: Vec<&str> = figure.columns().iter().map(|c| c.name).collect();
            Table::from_sweep(&run_sweep(SweepMode::Sk, power, n, grid)?).select(&names)
        }
    }
}
