use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::dynamics::AttitudeState;
use crate::ellipsoid::StateEllipsoid;
use crate::linalg::symmetric_eigen;

pub const CSV_HEADER: [&str; 10] = [
    "step",
    "time",
    "zeta_norm_deg",
    "domega_norm",
    "trace_P",
    "max_eig_P",
    "max_eig_dir_x",
    "max_eig_dir_y",
    "max_eig_dir_z",
    "contains_truth",
];

/// Estimation error and uncertainty size at one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: usize,
    pub time: f64,
    /// ‖ζ‖ in degrees, with `C = Ĉ exp(S(ζ))`.
    pub zeta_norm_deg: f64,
    /// ‖ω − ω̂‖.
    pub domega_norm: f64,
    #[serde(rename = "trace_P")]
    pub trace_p: f64,
    #[serde(rename = "max_eig_P")]
    pub max_eig_p: f64,
    /// Attitude part of the principal eigenvector of P, normalized so the
    /// largest-magnitude component of the full eigenvector is positive.
    pub max_eig_dir: [f64; 3],
    pub contains_truth: bool,
}

impl MetricsRecord {
    pub fn new(step: usize, time: f64, estimate: &StateEllipsoid<f64>, truth: &AttitudeState<f64>) -> Self {
        let err = truth.error_from(&estimate.center);
        let (values, vectors) = symmetric_eigen(&estimate.shape);
        let mut dir = vectors.column(5).into_owned();
        if dir[dir.iamax()] < 0.0 {
            dir = -dir;
        }
        Self {
            step,
            time,
            zeta_norm_deg: err.fixed_rows::<3>(0).norm().to_degrees(),
            domega_norm: err.fixed_rows::<3>(3).norm(),
            trace_p: estimate.trace(),
            max_eig_p: values[5],
            max_eig_dir: [dir[0], dir[1], dir[2]],
            contains_truth: estimate.contains(&truth.attitude, &truth.angular_velocity),
        }
    }
}

#[derive(Serialize)]
struct CsvRow {
    step: usize,
    time: f64,
    zeta_norm_deg: f64,
    domega_norm: f64,
    trace_p: f64,
    max_eig_p: f64,
    max_eig_dir_x: f64,
    max_eig_dir_y: f64,
    max_eig_dir_z: f64,
    contains_truth: u8,
}

impl From<&MetricsRecord> for CsvRow {
    fn from(r: &MetricsRecord) -> Self {
        Self {
            step: r.step,
            time: r.time,
            zeta_norm_deg: r.zeta_norm_deg,
            domega_norm: r.domega_norm,
            trace_p: r.trace_p,
            max_eig_p: r.max_eig_p,
            max_eig_dir_x: r.max_eig_dir[0],
            max_eig_dir_y: r.max_eig_dir[1],
            max_eig_dir_z: r.max_eig_dir[2],
            contains_truth: u8::from(r.contains_truth),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

pub fn write_csv<W: Write>(records: &[MetricsRecord], writer: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush()
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    seed: u64,
    records: &'a [MetricsRecord],
}

pub fn write_json<W: Write>(records: &[MetricsRecord], seed: u64, mut writer: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut writer, &JsonDocument { seed, records })?;
    writer.write_all(b"\n")?;
    writer.flush()
}

/// Writes `<dir>/<stem>.csv` and/or `<dir>/<stem>.json`, returning the paths.
pub fn emit_metrics(
    records: &[MetricsRecord],
    seed: u64,
    format: OutputFormat,
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, SimError> {
    if records.is_empty() {
        return Err(SimError::Config("no records to write".into()));
    }
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SimError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    if format.csv() {
        let path = dir.join(format!("{stem}.csv"));
        let file = File::create(&path).map_err(io(&path))?;
        write_csv(records, BufWriter::new(file)).map_err(io(&path))?;
        written.push(path);
    }
    if format.json() {
        let path = dir.join(format!("{stem}.json"));
        let file = File::create(&path).map_err(io(&path))?;
        write_json(records, seed, BufWriter::new(file)).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}
