//! Read-outs of several runs at one probability, and their pairwise gaps.

use std::io::Write;

use serde::Serialize;

use crate::runner::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Papr,
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// A curve involved does not reach the probability.
    OutOfRange,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub kind: RowKind,
    pub label: String,
    pub reference: Option<String>,
    pub papr_db: Option<f64>,
    /// `papr(label) - papr(reference)`.
    pub delta_db: Option<f64>,
    pub status: RowStatus,
}

/// One `papr` row per report, then a `delta` row for every pair `i < j`
/// with report `i` as the reference.
pub fn compare_runs(reports: &[(String, RunReport)], probability: f64) -> anyhow::Result<Vec<ComparisonRow>> {
    if let Some((first, rest)) = reports.split_first() {
        for (label, r) in rest {
            anyhow::ensure!(
                r.curve.thresholds_db == first.1.curve.thresholds_db,
                "report {label} uses a different threshold grid than {}",
                first.0
            );
        }
    }
    let values: Vec<Option<f64>> = reports.iter().map(|(_, r)| r.papr_at(probability).ok()).collect();
    let status = |ok: bool| if ok { RowStatus::Ok } else { RowStatus::OutOfRange };

    let mut rows: Vec<ComparisonRow> = reports
        .iter()
        .zip(&values)
        .map(|((label, _), v)| ComparisonRow {
            kind: RowKind::Papr,
            label: label.clone(),
            reference: None,
            papr_db: *v,
            delta_db: None,
            status: status(v.is_some()),
        })
        .collect();
    for i in 0..reports.len() {
        for j in i + 1..reports.len() {
            let delta = values[j].zip(values[i]).map(|(b, a)| b - a);
            rows.push(ComparisonRow {
                kind: RowKind::Delta,
                label: reports[j].0.clone(),
                reference: Some(reports[i].0.clone()),
                papr_db: values[j],
                delta_db: delta,
                status: status(delta.is_some()),
            });
        }
    }
    Ok(rows)
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["kind", "label", "reference", "papr_db", "delta_db", "status"])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use stace::metrics::ccdf;

    fn report(samples: &[f64]) -> RunReport {
        let grid: Vec<f64> = (0..=40).map(|i| 4.0 + 0.25 * i as f64).collect();
        RunReport {
            config: ExperimentConfig::default(),
            curve: ccdf(samples, &grid).unwrap(),
            papr_at: vec![],
            mean_delta_power: 0.0,
            fft_call_count: 0,
            bit_errors: None,
            wall_time: 0.0,
        }
    }

    #[test]
    fn identical_reports_have_zero_deltas() {
        let r = report(&[5.0, 6.0, 7.0, 8.0]);
        let rows = compare_runs(
            &[("a".into(), r.clone()), ("b".into(), r.clone()), ("c".into(), r)],
            0.5,
        )
        .unwrap();
        assert_eq!(rows.len(), 6);
        for row in rows.iter().filter(|r| r.kind == RowKind::Delta) {
            assert_eq!(row.delta_db, Some(0.0));
        }
    }

    #[test]
    fn delta_sign_and_flagged_rows() {
        let low = report(&[5.0, 6.0, 7.0, 8.0]);
        let high = report(&[6.0, 7.0, 8.0, 9.0]);
        let rows = compare_runs(&[("low".into(), low.clone()), ("high".into(), high)], 0.75).unwrap();
        assert_eq!(rows[2].delta_db, Some(1.0));
        assert_eq!(rows[2].reference.as_deref(), Some("low"));

        let rows = compare_runs(&[("low".into(), low)], 0.01).unwrap();
        assert_eq!(rows[0].status, RowStatus::OutOfRange);
        let mut buf = Vec::new();
        write_comparison_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "kind,label,reference,papr_db,delta_db,status\npapr,low,,,,out_of_range\n"
        );
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = report(&[5.0]);
        let mut b = a.clone();
        b.curve.thresholds_db[0] = 3.0;
        assert!(compare_runs(&[("a".into(), a), ("b".into(), b)], 0.5).is_err());
    }
}
