//! Fixture files: recorded list triples with an optional `flagged` marker.
//!
//! The shipped 30-row fixture (`data/table1.csv`) transcribes an
//! experimentally recorded list excerpt. Its `flagged` column records which
//! rows the original bookkeeping marked as errors; the validation report
//! cross-tabulates that marking against the correlation predicate instead of
//! trusting either side. Rows 27 and 29 violate the predicate without being
//! flagged in the source material — the report surfaces both sets and leaves
//! the discrepancy to the reader.

use std::fs::File;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use qdba_core::distribution::is_valid_triple;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("cannot read fixture: {0}")]
    Io(#[from] std::io::Error),
    #[error("fixture line {line}: {message}")]
    Parse { line: u64, message: String },
}

/// One fixture row: a recorded triple plus the source's error marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FixtureRow {
    pub position: u32,
    pub l_a: u8,
    pub l_b: u8,
    pub l_c: u8,
    pub flagged: bool,
}

impl FixtureRow {
    pub fn is_valid(&self) -> bool {
        is_valid_triple(self.l_a, self.l_b, self.l_c)
    }
}

/// Reads `position,lA,lB,lC[,flagged]` rows. Every parse failure names its
/// line.
pub fn read_fixture(path: &Path) -> Result<Vec<FixtureRow>, FixtureError> {
    let file = File::open(path)?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| FixtureError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (p_col, a_col, b_col, c_col) = match (col("position"), col("lA"), col("lB"), col("lC")) {
        (Some(p), Some(a), Some(b), Some(c)) => (p, a, b, c),
        _ => {
            return Err(FixtureError::Parse {
                line: 1,
                message: "expected header columns position,lA,lB,lC".into(),
            })
        }
    };
    let flag_col = col("flagged");

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| FixtureError::Parse {
            line,
            message: e.to_string(),
        })?;
        let parse_u8 = |idx: usize, name: &str| -> Result<u8, FixtureError> {
            record
                .get(idx)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| FixtureError::Parse {
                    line,
                    message: format!("malformed {name} field"),
                })
        };
        let position: u32 = record
            .get(p_col)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| FixtureError::Parse {
                line,
                message: "malformed position field".into(),
            })?;
        let flagged = match flag_col {
            Some(idx) => match record.get(idx).map(str::trim) {
                Some("true") | Some("1") => true,
                Some("false") | Some("0") | Some("") | None => false,
                Some(other) => {
                    return Err(FixtureError::Parse {
                        line,
                        message: format!("malformed flagged field `{other}`"),
                    })
                }
            },
            None => false,
        };
        rows.push(FixtureRow {
            position,
            l_a: parse_u8(a_col, "lA")?,
            l_b: parse_u8(b_col, "lB")?,
            l_c: parse_u8(c_col, "lC")?,
            flagged,
        });
    }
    Ok(rows)
}

/// Validation report: predicate violations cross-tabulated against the
/// fixture's own flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureReport {
    pub rows: usize,
    pub violations: Vec<u32>,
    pub violation_ratio: f64,
    pub flagged: Vec<u32>,
    pub flagged_and_violating: Vec<u32>,
    pub violating_not_flagged: Vec<u32>,
    pub flagged_not_violating: Vec<u32>,
}

pub fn validate_fixture(rows: &[FixtureRow]) -> FixtureReport {
    let violations: Vec<u32> = rows
        .iter()
        .filter(|r| !r.is_valid())
        .map(|r| r.position)
        .collect();
    let flagged: Vec<u32> = rows.iter().filter(|r| r.flagged).map(|r| r.position).collect();
    let both: Vec<u32> = violations
        .iter()
        .copied()
        .filter(|p| flagged.contains(p))
        .collect();
    FixtureReport {
        rows: rows.len(),
        violation_ratio: if rows.is_empty() {
            0.0
        } else {
            violations.len() as f64 / rows.len() as f64
        },
        violating_not_flagged: violations
            .iter()
            .copied()
            .filter(|p| !flagged.contains(p))
            .collect(),
        flagged_not_violating: flagged
            .iter()
            .copied()
            .filter(|p| !violations.contains(p))
            .collect(),
        flagged_and_violating: both,
        violations,
        flagged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file
    }

    #[test]
    fn rows_parse_with_and_without_flags() {
        let file = write_temp("position,lA,lB,lC,flagged\n1,2,1,0,false\n2,2,1,1,true\n");
        let rows = read_fixture(file.path()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].is_valid());
        assert!(!rows[0].flagged);
        assert!(!rows[1].is_valid());
        assert!(rows[1].flagged);

        let file = write_temp("position,lA,lB,lC\n1,1,1,0\n");
        let rows = read_fixture(file.path()).unwrap();
        assert!(!rows[0].flagged);
        assert!(!rows[0].is_valid(), "only 111 is legal for trit 1");
    }

    #[test]
    fn malformed_rows_name_their_line() {
        let file = write_temp("position,lA,lB,lC\n1,0,0,0\n2,zz,0,0\n");
        match read_fixture(file.path()) {
            Err(FixtureError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn report_cross_tabulates_flags_and_violations() {
        let rows = vec![
            FixtureRow { position: 1, l_a: 0, l_b: 0, l_c: 0, flagged: false },
            FixtureRow { position: 2, l_a: 2, l_b: 1, l_c: 1, flagged: true },
            FixtureRow { position: 3, l_a: 1, l_b: 1, l_c: 0, flagged: false },
            FixtureRow { position: 4, l_a: 2, l_b: 1, l_c: 0, flagged: true },
        ];
        let report = validate_fixture(&rows);
        assert_eq!(report.violations, vec![2, 3]);
        assert_eq!(report.flagged_and_violating, vec![2]);
        assert_eq!(report.violating_not_flagged, vec![3]);
        assert_eq!(report.flagged_not_violating, vec![4]);
        assert!((report.violation_ratio - 0.5).abs() < 1e-12);
    }
}
