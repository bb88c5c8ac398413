use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub d: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub time_steps: usize,
    pub expectation: f64,
    pub std_dev: f64,
    pub reference: f64,
    pub rel_l1_error: f64,
    pub std_rel_error: f64,
    pub avg_runtime_s: f64,
    pub preset: String,
    /// Successful runs; fewer than requested marks the row partial.
    pub runs: usize,
    pub partial: bool,
}

impl ResultRow {
    /// Aggregates per-run values and runtimes. Standard deviations are
    /// uncorrected (divide by the number of runs).
    pub fn aggregate(
        preset: &str,
        d: usize,
        horizon: f64,
        time_steps: usize,
        reference: f64,
        values: &[f64],
        runtimes: &[f64],
        requested: usize,
    ) -> Result<Self> {
        if values.is_empty() || values.len() != runtimes.len() {
            return Err(Error::InvalidArgument("no successful runs to aggregate".into()));
        }
        let rel: Vec<f64> = values.iter().map(|v| (v - reference).abs() / reference.abs()).collect();
        let (expectation, std_dev) = mean_std(values);
        let (rel_l1_error, std_rel_error) = mean_std(&rel);
        Ok(ResultRow {
            d,
            horizon,
            time_steps,
            expectation,
            std_dev,
            reference,
            rel_l1_error,
            std_rel_error,
            avg_runtime_s: mean_std(runtimes).0,
            preset: preset.to_string(),
            runs: values.len(),
            partial: values.len() < requested,
        })
    }
}

/// Mean and uncorrected standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::Config(format!("unknown report format '{s}'"))),
        }
    }
}

pub fn emit_report(rows: &[ResultRow], format: ReportFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("report needs at least one row".into()));
    }
    match format {
        ReportFormat::Csv => to_csv(rows),
        ReportFormat::Markdown => Ok(to_markdown(rows)),
    }
}

pub fn to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    from_csv(&std::fs::read_to_string(path)?)
}

pub fn to_markdown(rows: &[ResultRow]) -> String {
    let mut out = String::from(
        "| d | T | N | Expectation | Std. dev. | Ref. value | rel. L1-error | Std. dev. rel. error | avg. runtime (s) |\n\
         |---|---|---|---|---|---|---|---|---|\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {:.4} | {} | {:.6} | {:.6e} | {:.6} | {:.5} | {:.5e} | {:.2} |{}",
            r.d,
            r.horizon,
            r.time_steps,
            r.expectation,
            r.std_dev,
            r.reference,
            r.rel_l1_error,
            r.std_rel_error,
            r.avg_runtime_s,
            if r.partial { " partial" } else { "" }
        );
    }
    out
}

/// Sort contract for N-studies: ascending in `N`, stable otherwise.
pub fn sort_by_steps(rows: &mut [ResultRow]) {
    rows.sort_by_key(|r| r.time_steps);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize) -> ResultRow {
        ResultRow::aggregate("heat", 100, 0.3, n, 0.31674, &[0.318, 0.316, 0.3171], &[1.5, 2.0, 1.25], 3).unwrap()
    }

    #[test]
    fn aggregation() {
        let r = ResultRow::aggregate("x", 1, 1.0, 1, 2.0, &[1.0, 3.0], &[1.0, 2.0], 3).unwrap();
        assert_eq!(r.expectation, 2.0);
        assert_eq!(r.std_dev, 1.0);
        assert_eq!(r.rel_l1_error, 0.5);
        assert_eq!(r.std_rel_error, 0.0);
        assert_eq!(r.avg_runtime_s, 1.5);
        assert!(r.partial);
    }

    #[test]
    fn csv_column_order() {
        let text = to_csv(&[row(4)]).unwrap();
        assert!(text.starts_with(
            "d,T,N,expectation,std_dev,reference,rel_l1_error,std_rel_error,avg_runtime_s,preset,runs,partial\n"
        ));
    }

    #[test]
    fn markdown_sorting_and_empty_input() {
        let mut rows = vec![row(16), row(1), row(4)];
        sort_by_steps(&mut rows);
        assert_eq!(rows.iter().map(|r| r.time_steps).collect::<Vec<_>>(), vec![1, 4, 16]);
        assert_eq!(to_markdown(&rows).lines().count(), 2 + 3);
        assert!(emit_report(&[], ReportFormat::Csv).is_err());
    }
}
