//! CSV and JSON emission for counts, curves, batches and reports.
//!
//! Reals in CSV are written with 17 significant digits in scientific
//! notation (`{:.16e}`), which round-trips binary64 and does not depend on
//! locale. JSON goes through `serde_json`, whose shortest round-trip float
//! formatting also parses back to the identical value.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeCountResult;
use crate::laws::{CurveTable, LimitLaw};
use crate::sampling::{ComparisonReport, EmpiricalCf, RhoSpec, SampleBatch, Scenario};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub const COUNT_HEADER: [&str; 8] = [
    "t",
    "count",
    "volume",
    "error",
    "normalized_error",
    "delta",
    "per_axis_delta_tilde",
    "boundary_degenerate",
];

/// One count record. `delta` is empty when the box is not the unit cube;
/// per-axis values are `;`-separated.
pub fn write_count<W: Write>(w: W, r: &LatticeCountResult, format: Format) -> Result<()> {
    match format {
        Format::Json => write_json(w, r),
        Format::Csv => {
            let mut wr = csv_writer(w);
            wr.write_record(COUNT_HEADER)?;
            let per_axis: Vec<String> = r
                .per_axis_delta_tilde
                .iter()
                .map(|&v| fmt_real(v))
                .collect();
            wr.write_record([
                fmt_real(r.t),
                r.count.to_string(),
                fmt_real(r.volume),
                fmt_real(r.error),
                fmt_real(r.normalized_error),
                r.delta.map(fmt_real).unwrap_or_default(),
                per_axis.join(";"),
                r.boundary_degenerate.to_string(),
            ])?;
            wr.flush()?;
            Ok(())
        }
    }
}

pub const BATCH_HEADER: [&str; 4] = ["index", "t", "delta", "normalized_error"];

pub fn write_batch<W: Write>(w: W, batch: &SampleBatch, format: Format) -> Result<()> {
    match format {
        Format::Json => write_json(w, batch),
        Format::Csv => {
            let mut wr = csv_writer(w);
            wr.write_record(BATCH_HEADER)?;
            for (k, ((&t, &d), &e)) in batch
                .t_samples
                .iter()
                .zip(&batch.delta_samples)
                .zip(&batch.normalized_error_samples)
                .enumerate()
            {
                wr.write_record([k.to_string(), fmt_real(t), fmt_real(d), fmt_real(e)])?;
            }
            wr.flush()?;
            Ok(())
        }
    }
}

/// Sidecar describing how a batch was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMetadata {
    pub tool_version: String,
    pub generator: String,
    pub seed: u64,
    pub scenario: Scenario,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub rho: RhoSpec,
}

impl BatchMetadata {
    pub fn of(batch: &SampleBatch) -> Self {
        Self {
            tool_version: TOOL_VERSION.into(),
            generator: batch.generator.clone(),
            seed: batch.seed,
            scenario: batch.scenario,
            horizon: batch.horizon,
            n: batch.n,
            rho: batch.rho.clone(),
        }
    }
}

/// `<output>.meta.json` next to a batch file.
pub fn metadata_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    output.with_file_name(name)
}

pub fn write_metadata<W: Write>(w: W, meta: &BatchMetadata) -> Result<()> {
    write_json(w, meta)
}

pub const CF_HEADER: [&str; 5] = [
    "u",
    "analytic_cf",
    "empirical_cf_real",
    "empirical_cf_imag",
    "abs_gap",
];

/// Row-wise comparison of an empirical CF with a law's CF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfComparison {
    pub u: Vec<f64>,
    pub analytic_cf: Vec<f64>,
    pub empirical_cf_real: Vec<f64>,
    pub empirical_cf_imag: Vec<f64>,
    pub abs_gap: Vec<f64>,
    pub sup_gap: f64,
}

impl CfComparison {
    pub fn new(emp: &EmpiricalCf, law: &LimitLaw) -> Result<Self> {
        let analytic: Vec<f64> = emp.u.iter().map(|&u| law.cf(u)).collect::<Result<_>>()?;
        let abs_gap: Vec<f64> = analytic
            .iter()
            .zip(emp.re.iter().zip(&emp.im))
            .map(|(&a, (&re, &im))| (re - a).hypot(im))
            .collect();
        let sup_gap = abs_gap.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            u: emp.u.clone(),
            analytic_cf: analytic,
            empirical_cf_real: emp.re.clone(),
            empirical_cf_imag: emp.im.clone(),
            abs_gap,
            sup_gap,
        })
    }
}

pub fn write_cf_comparison<W: Write>(w: W, cmp: &CfComparison, format: Format) -> Result<()> {
    match format {
        Format::Json => write_json(w, cmp),
        Format::Csv => {
            let mut wr = csv_writer(w);
            wr.write_record(CF_HEADER)?;
            for i in 0..cmp.u.len() {
                wr.write_record([
                    fmt_real(cmp.u[i]),
                    fmt_real(cmp.analytic_cf[i]),
                    fmt_real(cmp.empirical_cf_real[i]),
                    fmt_real(cmp.empirical_cf_imag[i]),
                    fmt_real(cmp.abs_gap[i]),
                ])?;
            }
            wr.flush()?;
            Ok(())
        }
    }
}

pub const LAW_HEADER: [&str; 3] = ["z", "pdf", "cdf"];

/// Density and CDF tables of one law on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawTables {
    pub law: LimitLaw,
    pub pdf: CurveTable,
    pub cdf: CurveTable,
}

impl LawTables {
    pub fn new(law: LimitLaw, steps: usize) -> Result<Self> {
        Ok(Self {
            law,
            pdf: law.pdf_table(steps)?,
            cdf: law.cdf_table(steps)?,
        })
    }
}

pub fn write_law_tables<W: Write>(w: W, tables: &LawTables, format: Format) -> Result<()> {
    match format {
        Format::Json => write_json(w, tables),
        Format::Csv => {
            let mut wr = csv_writer(w);
            wr.write_record(LAW_HEADER)?;
            for ((&z, &p), &c) in tables
                .pdf
                .abscissae
                .iter()
                .zip(&tables.pdf.values)
                .zip(&tables.cdf.values)
            {
                wr.write_record([fmt_real(z), fmt_real(p), fmt_real(c)])?;
            }
            wr.flush()?;
            Ok(())
        }
    }
}

pub const CONVERGENCE_HEADER: [&str; 9] = [
    "T",
    "N",
    "seed",
    "ks_delta",
    "ks_error",
    "cf_sup_gap",
    "cf_imag_sup",
    "mean",
    "variance",
];

pub fn write_reports<W: Write>(w: W, reports: &[ComparisonReport], format: Format) -> Result<()> {
    match format {
        Format::Json => write_json(w, reports),
        Format::Csv => {
            let mut wr = csv_writer(w);
            wr.write_record(CONVERGENCE_HEADER)?;
            for r in reports {
                wr.write_record([
                    fmt_real(r.horizon),
                    r.n.to_string(),
                    r.seed.to_string(),
                    fmt_real(r.ks_delta),
                    fmt_real(r.ks_error),
                    fmt_real(r.cf_sup_gap),
                    fmt_real(r.cf_imag_sup),
                    fmt_real(r.mean),
                    fmt_real(r.variance),
                ])?;
            }
            wr.flush()?;
            Ok(())
        }
    }
}

/// Read a two-column `knot,value` CSV (with header) as a tabulated density.
pub fn read_rho_csv<R: Read>(r: R) -> Result<RhoSpec> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut knots = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Config(format!(
                "rho row {} has {} fields, expected 2",
                line + 1,
                rec.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| {
                Error::Config(format!("rho row {}: cannot parse `{s}`: {e}", line + 1))
            })
        };
        knots.push(parse(&rec[0])?);
        values.push(parse(&rec[1])?);
    }
    RhoSpec::tabulated(knots, values)
}

/// `uniform` or a path to a rho CSV.
pub fn load_rho(spec: &str) -> Result<RhoSpec> {
    if spec.eq_ignore_ascii_case("uniform") {
        return Ok(RhoSpec::Uniform01);
    }
    read_rho_csv(File::open(spec)?)
}

/// Buffered writer on `path`, creating parent directories.
pub fn create_output(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}
