//! Tab-separated input tables.

use std::collections::HashSet;
use std::path::Path;

use crate::CliError;

/// Columns pulled from an input table, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub pvalues: Vec<f64>,
    pub covariate: Option<Vec<f64>>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.pvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pvalues.is_empty()
    }
}

const MISSING: [&str; 5] = ["", "NA", "N/A", "NaN", "nan"];

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64, CliError> {
    let cell = raw.trim();
    if MISSING.contains(&cell) {
        return Err(CliError::Input(format!(
            "row {row}, column {column:?}: missing value {raw:?}"
        )));
    }
    cell.parse::<f64>().map_err(|_| {
        CliError::Input(format!(
            "row {row}, column {column:?}: cannot parse {raw:?} as a number"
        ))
    })
}

fn column_index(headers: &[String], name: &str) -> Result<usize, CliError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Input(format!("column {name:?} not found in header {headers:?}")))
}

/// Reads the p-value column and optional covariate column. Rows are
/// numbered from 1, excluding the header.
pub fn read_table(
    path: &Path,
    pvalue_col: &str,
    covariate_col: Option<&str>,
) -> Result<Table, CliError> {
    let cannot =
        |e: &dyn std::fmt::Display| CliError::Input(format!("cannot read {}: {e}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| cannot(&e))?;
    if text.trim().is_empty() {
        return Err(CliError::Input(format!("{} is empty", path.display())));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| cannot(&e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut seen = HashSet::new();
    if let Some(dup) = headers.iter().find(|h| !seen.insert(h.as_str())) {
        return Err(CliError::Input(format!("duplicate column name {dup:?}")));
    }
    let p_idx = column_index(&headers, pvalue_col)?;
    let c_idx = covariate_col
        .map(|c| column_index(&headers, c))
        .transpose()?;

    let mut pvalues = Vec::new();
    let mut covariate = c_idx.map(|_| Vec::new());
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| CliError::Input(format!("row {row}: {e}")))?;
        let p = parse_cell(&record[p_idx], row, pvalue_col)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::Input(format!(
                "row {row}, column {pvalue_col:?}: p-value {p} is outside [0, 1]"
            )));
        }
        pvalues.push(p);
        if let (Some(i), Some(values), Some(name)) = (c_idx, covariate.as_mut(), covariate_col) {
            let c = parse_cell(&record[i], row, name)?;
            if !c.is_finite() {
                return Err(CliError::Input(format!(
                    "row {row}, column {name:?}: covariate {c} is not finite"
                )));
            }
            values.push(c);
        }
    }
    if pvalues.is_empty() {
        return Err(CliError::Input(format!(
            "{} has a header but no data rows",
            path.display()
        )));
    }
    Ok(Table { pvalues, covariate })
}

/// Reads one integer group label per line, skipping blank lines.
pub fn read_groups(path: &Path, rows: usize) -> Result<Vec<i64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let labels: Vec<i64> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(k, l)| {
            l.parse().map_err(|_| {
                CliError::Input(format!(
                    "groups file line {}: cannot parse {l:?} as an integer",
                    k + 1
                ))
            })
        })
        .collect::<Result<_, _>>()?;
    if labels.len() != rows {
        return Err(CliError::Input(format!(
            "groups file has {} labels for {rows} data rows",
            labels.len()
        )));
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    fn message(r: Result<Table, CliError>) -> String {
        r.unwrap_err().to_string()
    }

    #[test]
    fn reads_named_columns() {
        let f = file("id\tp\tx\na\t0.1\t3\nb\t0.5\t-1\n");
        let t = read_table(f.path(), "p", Some("x")).unwrap();
        assert_eq!(t.pvalues, vec![0.1, 0.5]);
        assert_eq!(t.covariate, Some(vec![3.0, -1.0]));
    }

    #[test]
    fn reports_row_and_column() {
        let f = file("p\n0.1\nabc\n");
        let msg = message(read_table(f.path(), "p", None));
        assert!(msg.contains("row 2") && msg.contains("\"p\""), "{msg}");
    }

    #[test]
    fn rejects_missing_and_out_of_range() {
        let f = file("p\n0.1\nNA\n");
        assert!(message(read_table(f.path(), "p", None)).contains("missing"));
        let f = file("p\n0.1\n\t\n");
        assert!(read_table(f.path(), "p", None).is_err());
        let f = file("p\n1.5\n");
        assert!(message(read_table(f.path(), "p", None)).contains("outside"));
    }

    #[test]
    fn rejects_bad_headers_and_empty_files() {
        let f = file("p\tp\n0.1\t0.2\n");
        assert!(message(read_table(f.path(), "p", None)).contains("duplicate"));
        let f = file("q\n0.1\n");
        assert!(message(read_table(f.path(), "p", None)).contains("not found"));
        let f = file("");
        assert!(message(read_table(f.path(), "p", None)).contains("empty"));
        let f = file("p\n");
        assert!(message(read_table(f.path(), "p", None)).contains("no data rows"));
    }

    #[test]
    fn groups_must_match_rows() {
        let f = file("1\n1\n\n2\n");
        assert_eq!(read_groups(f.path(), 3).unwrap(), vec![1, 1, 2]);
        assert!(read_groups(f.path(), 4).is_err());
        let f = file("1\nx\n");
        assert!(read_groups(f.path(), 2).is_err());
    }
}
