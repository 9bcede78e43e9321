use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiments::CurvePoint;
use super::ResultRow;
use crate::error::{Error, Result};

pub const RESULTS_HEADER: &str = "experiment,seed,D,r,value,wall_time_ms";

pub fn write_rows<W: Write>(writer: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(writer);
    if rows.is_empty() {
        w.write_record(RESULTS_HEADER.split(','))
            .map_err(|e| Error::Io(e.into()))?;
    }
    for row in rows {
        if !row.value.is_finite() {
            return Err(Error::NonFinite(format!(
                "{} seed {} D {} r {}: value {}",
                row.experiment, row.seed, row.dim, row.r, row.value
            )));
        }
        w.serialize(row).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curves<W: Write>(writer: W, curves: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for c in curves {
        w.serialize(c).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

/// `<out>` with `suffix` appended to the file name.
pub fn sibling_path(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    rows: usize,
    outputs: Vec<String>,
    config: &'a ExperimentConfig,
}

/// Writes the results CSV to `out` and the resolved config to `<out>.manifest.json`.
pub fn write_outputs(out: &Path, command: &str, cfg: &ExperimentConfig, rows: &[ResultRow], extra: &[PathBuf]) -> Result<PathBuf> {
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    write_rows(std::fs::File::create(out)?, rows)?;
    let manifest_path = sibling_path(out, ".manifest.json");
    let mut outputs = vec![out.display().to_string()];
    outputs.extend(extra.iter().map(|p| p.display().to_string()));
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        rows: rows.len(),
        outputs,
        config: cfg,
    };
    let mut f = std::fs::File::create(&manifest_path)?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(value: f64) -> ResultRow {
        ResultRow {
            experiment: "kl_curve:mercer:gaussian".into(),
            seed: 3,
            dim: 2,
            r: 10,
            value,
            wall_time_ms: 0.0,
        }
    }

    #[test]
    fn csv_has_fixed_header() {
        let mut buf = Vec::new();
        write_rows(&mut buf, &[row(0.25)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "experiment,seed,D,r,value,wall_time_ms\nkl_curve:mercer:gaussian,3,2,10,0.25,0.0\n");
        let mut empty = Vec::new();
        write_rows(&mut empty, &[]).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap(), format!("{RESULTS_HEADER}\n"));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        assert!(matches!(write_rows(Vec::new(), &[row(f64::NAN)]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn sibling_paths_append() {
        assert_eq!(sibling_path(Path::new("a/b.csv"), ".manifest.json"), PathBuf::from("a/b.csv.manifest.json"));
    }
}
