use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 6] = ["sweep_value", "strategy", "p_e", "ci_halfwidth", "n_trials", "seed"];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub strategy: String,
    pub p_e: f64,
    pub ci_halfwidth: f64,
    pub n_trials: usize,
    pub seed: u64,
}

/// Estimated error probabilities, one row per (sweep point, strategy).
///
/// The sweep variable name is not part of the CSV, so results read back
/// from a file carry `None`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentResult {
    pub sweep_variable: Option<String>,
    pub rows: Vec<ResultRow>,
}

impl ExperimentResult {
    pub fn p_e(&self, strategy: &str, sweep_value: f64) -> Option<f64> {
        self.row(strategy, sweep_value).map(|r| r.p_e)
    }

    pub fn row(&self, strategy: &str, sweep_value: f64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy && r.sweep_value == sweep_value)
    }

    /// Strategy names in first-appearance order.
    pub fn strategies(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.strategy.as_str()) {
                out.push(&r.strategy);
            }
        }
        out
    }
}

/// `value` with `digits` significant digits, in the style of C's `%g`.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".into();
    }
    if !value.is_finite() {
        return if value.is_nan() {
            "nan".into()
        } else if value > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{value:.decimals$}"))
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_error(path, source),
        other => Error::Results(format!("{}: {other:?}", path.display())),
    }
}

/// Writes the CSV `sweep_value,strategy,p_e,ci_halfwidth,n_trials,seed`
/// with reals at 6 significant digits.
pub fn write_results(result: &ExperimentResult, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(CSV_HEADER).map_err(|e| csv_error(path, e))?;
    for r in &result.rows {
        w.write_record([
            format_significant(r.sweep_value, 6),
            r.strategy.clone(),
            format_significant(r.p_e, 6),
            format_significant(r.ci_halfwidth, 6),
            r.n_trials.to_string(),
            r.seed.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub fn read_results(path: &Path) -> Result<ExperimentResult> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().map(str::trim).ne(CSV_HEADER) {
        return Err(Error::Results(format!(
            "{}: unexpected header '{}'",
            path.display(),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let field = |k: usize| record.get(k).unwrap_or("").trim();
        let bad = |k: usize| {
            Error::Results(format!(
                "{}: row {}: bad {} '{}'",
                path.display(),
                i + 1,
                CSV_HEADER[k],
                field(k)
            ))
        };
        rows.push(ResultRow {
            sweep_value: field(0).parse().map_err(|_| bad(0))?,
            strategy: field(1).to_string(),
            p_e: field(2).parse().map_err(|_| bad(2))?,
            ci_halfwidth: field(3).parse().map_err(|_| bad(3))?,
            n_trials: field(4).parse().map_err(|_| bad(4))?,
            seed: field(5).parse().map_err(|_| bad(5))?,
        });
    }
    Ok(ExperimentResult {
        sweep_variable: None,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.0, 6), "0");
        assert_eq!(format_significant(2.0, 6), "2");
        assert_eq!(format_significant(0.0123456789, 6), "0.0123457");
        assert_eq!(format_significant(123456.7, 6), "123457");
        assert_eq!(format_significant(1234567.0, 6), "1.23457e+06");
        assert_eq!(format_significant(0.00001234, 6), "1.234e-05");
        assert_eq!(format_significant(0.5, 6), "0.5");
        assert_eq!(format_significant(f64::INFINITY, 6), "inf");
        assert_eq!(format_significant(-0.25, 6), "-0.25");
        assert_eq!(format_significant(9.999999, 6), "10");
    }

    #[test]
    fn empty_result_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_results(&ExperimentResult::default(), &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "sweep_value,strategy,p_e,ci_halfwidth,n_trials,seed\n"
        );
        assert!(read_results(&path).unwrap().rows.is_empty());
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = read_results(Path::new("/nonexistent/dir/r.csv"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("/nonexistent/dir/r.csv"));
    }
}
