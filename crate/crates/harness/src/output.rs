//! CSV and JSON writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use stace::CcdfCurve;

use crate::runner::RunReport;

pub fn write_ccdf_csv<W: Write>(curve: &CcdfCurve, out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["threshold_db", "ccdf"])?;
    for (t, p) in curve.thresholds_db.iter().zip(&curve.probabilities) {
        w.serialize((t, p))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_json<W: Write>(report: &RunReport, mut out: W) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_report_json(path: &Path) -> anyhow::Result<RunReport> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

/// Report path next to a CSV path: `curve.csv` becomes `curve.json`.
pub fn report_path_for(csv_path: &Path) -> PathBuf {
    if csv_path.extension().is_some_and(|e| e == "json") {
        let mut name = csv_path.as_os_str().to_owned();
        name.push(".report.json");
        PathBuf::from(name)
    } else {
        csv_path.with_extension("json")
    }
}

/// Writes the curve to `csv_path` and the report to `json_path`.
pub fn write_outputs(report: &RunReport, csv_path: &Path, json_path: &Path) -> anyhow::Result<()> {
    let mut csv_out = BufWriter::new(File::create(csv_path)?);
    write_ccdf_csv(&report.curve, &mut csv_out)?;
    csv_out.flush()?;
    let mut json_out = BufWriter::new(File::create(json_path)?);
    write_report_json(report, &mut json_out)?;
    json_out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let curve = stace::metrics::ccdf(&[5.0, 6.0, 7.0, 8.0], &[6.0, 6.5]).unwrap();
        let mut buf = Vec::new();
        write_ccdf_csv(&curve, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "threshold_db,ccdf\n6.0,0.75\n6.5,0.5\n"
        );
    }

    #[test]
    fn report_paths() {
        assert_eq!(report_path_for(Path::new("a/curve.csv")), PathBuf::from("a/curve.json"));
        assert_eq!(report_path_for(Path::new("curve")), PathBuf::from("curve.json"));
        assert_eq!(
            report_path_for(Path::new("x.json")),
            PathBuf::from("x.json.report.json")
        );
    }
}
