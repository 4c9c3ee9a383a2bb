use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One measurement: `x` is a step, sample size or case index depending on
/// the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub seed: u64,
    pub method: String,
    pub metric: String,
    pub x: u64,
    pub value: f64,
}

impl ExperimentRecord {
    pub fn new(
        experiment: &str,
        seed: u64,
        method: &str,
        metric: &str,
        x: u64,
        value: f64,
    ) -> Self {
        Self {
            experiment: experiment.into(),
            seed,
            method: method.into(),
            metric: metric.into(),
            x,
            value,
        }
    }

    /// A failed validator check: metric `pass` with value 0.
    pub fn is_failure(&self) -> bool {
        self.metric == "pass" && self.value == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Stable sort by `(experiment, method, x)`.
pub fn sort_records(records: &mut [ExperimentRecord]) {
    records.sort_by(|a, b| {
        (a.experiment.as_str(), a.method.as_str(), a.x).cmp(&(
            b.experiment.as_str(),
            b.method.as_str(),
            b.x,
        ))
    });
}

/// Writes sorted records; `path` only labels errors.
pub fn write_records<W: Write>(
    records: &[ExperimentRecord],
    out: W,
    format: OutputFormat,
    path: &Path,
) -> Result<()> {
    if let Some(r) = records.iter().find(|r| !r.value.is_finite()) {
        return Err(Error::Serialization {
            path: path.to_path_buf(),
            message: format!(
                "non-finite value for {}/{}/{} at x={}",
                r.experiment, r.method, r.metric, r.x
            ),
        });
    }
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let ser = |message: String| Error::Serialization {
        path: path.to_path_buf(),
        message,
    };
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if sorted.is_empty() {
                w.write_record(["experiment", "seed", "method", "metric", "x", "value"])
                    .map_err(|e| ser(e.to_string()))?;
            }
            for r in &sorted {
                w.serialize(r).map_err(|e| ser(e.to_string()))?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &sorted).map_err(|e| ser(e.to_string()))?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(())
}

pub fn emit(
    records: &[ExperimentRecord],
    path: impl AsRef<Path>,
    format: OutputFormat,
) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = std::io::BufWriter::new(file);
    write_records(records, &mut buf, format, path)?;
    buf.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: impl AsRef<Path>, format: OutputFormat) -> Result<Vec<ExperimentRecord>> {
    let path = path.as_ref();
    let ser = |message: String| Error::Serialization {
        path: path.to_path_buf(),
        message,
    };
    match format {
        OutputFormat::Json => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| ser(e.to_string()))
        }
        OutputFormat::Csv => {
            let mut rdr = csv::Reader::from_path(path).map_err(|e| ser(e.to_string()))?;
            rdr.deserialize()
                .map(|r| r.map_err(|e| ser(e.to_string())))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<ExperimentRecord> {
        vec![
            ExperimentRecord::new("fisher-sim", 0, "nkp", "error", 2, 0.5),
            ExperimentRecord::new("fisher-sim", 0, "dykaf", "error", 2, 1.0 / 3.0),
            ExperimentRecord::new("fisher-sim", 0, "dykaf", "scaled_error", 1, 1e-300),
            ExperimentRecord::new("fisher-sim", 0, "dykaf", "error", 1, 7.25),
        ]
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut buf = Vec::new();
        write_records(&[], &mut buf, OutputFormat::Csv, Path::new("-")).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "experiment,seed,method,metric,x,value\n"
        );
    }

    #[test]
    fn csv_rows_and_ordering() {
        let mut buf = Vec::new();
        write_records(&sample(), &mut buf, OutputFormat::Csv, Path::new("-")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), sample().len() + 1);
        assert_eq!(lines[0], "experiment,seed,method,metric,x,value");
        assert!(lines[1].starts_with("fisher-sim,0,dykaf,scaled_error,1,"));
        assert!(lines[2].starts_with("fisher-sim,0,dykaf,error,1,"));
        assert!(lines[4].starts_with("fisher-sim,0,nkp,"));
    }

    #[test]
    fn roundtrips_are_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut expect = sample();
        sort_records(&mut expect);
        for format in [OutputFormat::Json, OutputFormat::Csv] {
            let path = dir.path().join("out");
            emit(&sample(), &path, format).unwrap();
            assert_eq!(read_records(&path, format).unwrap(), expect);
        }
        let bad = vec![ExperimentRecord::new("e", 0, "m", "v", 0, f64::NAN)];
        assert!(emit(&bad, dir.path().join("nan"), OutputFormat::Json).is_err());
        assert!(matches!(
            emit(
                &sample(),
                dir.path().join("missing/out.csv"),
                OutputFormat::Csv
            ),
            Err(Error::Io { .. })
        ));
    }
}
