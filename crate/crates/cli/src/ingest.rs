//! CSV ingestion: `timestamp,<feature>,...` with time-ascending rows.
//! Interior gaps are filled by linear interpolation, edge gaps by the
//! nearest value, and every fill is reported.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use dtg_core::entity_graph::FeatureSeries;
use dtg_core::Real;

use crate::error::CliError;

/// Which cells were fabricated during gap filling, per feature.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GapReport {
    /// feature id -> 1-based data-line numbers (header is line 1).
    pub filled: BTreeMap<String, Vec<usize>>,
    pub total_filled: usize,
}

/// Parses one sensor CSV into per-feature series plus a gap report.
pub fn ingest(path: &Path) -> Result<(Vec<FeatureSeries>, GapReport), CliError> {
    let err_at = |line: usize, message: String| CliError::Ingest {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| CliError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| err_at(1, e.to_string()))?
        .clone();
    if headers.is_empty() || headers.get(0) != Some("timestamp") {
        return Err(err_at(1, "header must start with `timestamp`".to_string()));
    }
    let feature_names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if feature_names.is_empty() {
        return Err(err_at(1, "no feature columns".to_string()));
    }

    let mut timestamps: Vec<Real> = Vec::new();
    let mut columns: Vec<Vec<Option<Real>>> = vec![Vec::new(); feature_names.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let line = row_idx + 2; // header is line 1
        let record = record.map_err(|e| err_at(line, e.to_string()))?;
        let ts_raw = record.get(0).unwrap_or("");
        let ts: Real = ts_raw
            .trim()
            .parse()
            .map_err(|_| err_at(line, format!("non-numeric timestamp `{ts_raw}`")))?;
        if let Some(&prev) = timestamps.last() {
            if ts == prev {
                return Err(err_at(line, format!("duplicate timestamp {ts_raw}")));
            }
            if ts < prev {
                return Err(err_at(
                    line,
                    format!("timestamps not ascending at {ts_raw}"),
                ));
            }
        }
        timestamps.push(ts);
        for (i, cell) in record.iter().skip(1).enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                columns[i].push(None);
            } else {
                let value: Real = cell.parse().map_err(|_| {
                    err_at(
                        line,
                        format!("non-numeric value `{cell}` in column {}", feature_names[i]),
                    )
                })?;
                if !value.is_finite() {
                    return Err(err_at(
                        line,
                        format!("non-finite value in column {}", feature_names[i]),
                    ));
                }
                columns[i].push(Some(value));
            }
        }
    }

    let mut report = GapReport::default();
    let mut series = Vec::with_capacity(feature_names.len());
    for (name, column) in feature_names.iter().zip(columns) {
        let (values, filled_rows) = fill_gaps(&column)
            .ok_or_else(|| err_at(2, format!("column {name} has no values at all")))?;
        if !filled_rows.is_empty() {
            report.total_filled += filled_rows.len();
            report
                .filled
                .insert(name.clone(), filled_rows.iter().map(|r| r + 2).collect());
        }
        series.push(FeatureSeries::new(name.clone(), values)?);
    }
    Ok((series, report))
}

/// Linear interpolation by index for interior gaps, nearest value at the
/// edges. Returns None when every cell is missing.
fn fill_gaps(column: &[Option<Real>]) -> Option<(Vec<Real>, Vec<usize>)> {
    let known: Vec<(usize, Real)> = column
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    if known.is_empty() {
        return None;
    }
    let mut filled_rows = Vec::new();
    let mut values = Vec::with_capacity(column.len());
    for (i, cell) in column.iter().enumerate() {
        match cell {
            Some(v) => values.push(*v),
            None => {
                filled_rows.push(i);
                let after = known.iter().find(|(k, _)| *k > i);
                let before = known.iter().rev().find(|(k, _)| *k < i);
                let value = match (before, after) {
                    (Some(&(bi, bv)), Some(&(ai, av))) => {
                        let t = (i - bi) as Real / (ai - bi) as Real;
                        bv + t * (av - bv)
                    }
                    (Some(&(_, bv)), None) => bv,
                    (None, Some(&(_, av))) => av,
                    (None, None) => unreachable!("known is non-empty"),
                };
                values.push(value);
            }
        }
    }
    Some((values, filled_rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!(
            "dtg-ingest-{}-{}.csv",
            std::process::id(),
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap()
                .as_nanos()
        ));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn three_column_csv_yields_two_series() {
        let path = write_csv(
            "timestamp,a,b\n0,1,10\n1,2,20\n2,3,30\n3,4,40\n4,5,50\n5,6,60\n6,7,70\n7,8,80\n8,9,90\n9,10,100\n",
        );
        let (series, report) = ingest(&path).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].values.len(), 10);
        assert_eq!(series[1].values[9], 100.0);
        assert_eq!(report.total_filled, 0);
    }

    #[test]
    fn interior_gap_is_linearly_interpolated() {
        let path = write_csv("timestamp,a\n0,1\n1,\n2,3\n3,4\n");
        let (series, report) = ingest(&path).unwrap();
        assert_eq!(series[0].values, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(report.total_filled, 1);
        assert_eq!(report.filled["a"], vec![3]); // line 3 of the file
    }

    #[test]
    fn edge_gaps_take_nearest_value() {
        let path = write_csv("timestamp,a\n0,\n1,5\n2,6\n3,\n");
        let (series, _) = ingest(&path).unwrap();
        assert_eq!(series[0].values, vec![5.0, 5.0, 6.0, 6.0]);
    }

    #[test]
    fn duplicate_timestamp_errors_with_line() {
        let path = write_csv("timestamp,a\n0,1\n1,2\n1,3\n2,4\n");
        match ingest(&path).unwrap_err() {
            CliError::Ingest { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unsorted_rows_error_with_line() {
        let path = write_csv("timestamp,a\n0,1\n2,2\n1,3\n3,4\n");
        match ingest(&path).unwrap_err() {
            CliError::Ingest { line, message, .. } => {
                assert_eq!(line, 4);
                assert!(message.contains("ascending"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_numeric_cell_errors_with_line() {
        let path = write_csv("timestamp,a\n0,1\n1,oops\n2,3\n3,4\n");
        match ingest(&path).unwrap_err() {
            CliError::Ingest { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn interpolation_stays_within_neighbor_hull() {
        // Two known points bracket the gap; fills lie between them.
        let path = write_csv("timestamp,a\n0,2\n1,\n2,\n3,8\n");
        let (series, _) = ingest(&path).unwrap();
        for v in &series[0].values {
            assert!((2.0..=8.0).contains(v));
        }
        assert_eq!(series[0].values, vec![2.0, 4.0, 6.0, 8.0]);
    }
}
