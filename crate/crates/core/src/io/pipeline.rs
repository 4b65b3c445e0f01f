use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde_json::Value;

use super::dataset::DatasetBundle;
use crate::error::{Error, Result};
use crate::spd::{standardize_to_correlation, SpdMatrix};

/// Channels to keep, as 0-based column indices.
///
/// Parsed from 1-based inclusive text such as `40-46` or `1,3,5-7`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSelector(pub Vec<usize>);

impl FromStr for ChannelSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |part: &str| Error::config("channels", format!("cannot parse {part:?}"));
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (lo, hi) = match part.split_once('-') {
                Some((a, b)) => (a.trim(), b.trim()),
                None => (part, part),
            };
            let lo: usize = lo.parse().map_err(|_| bad(part))?;
            let hi: usize = hi.parse().map_err(|_| bad(part))?;
            if lo == 0 || hi < lo {
                return Err(bad(part));
            }
            out.extend(lo - 1..hi);
        }
        if out.is_empty() {
            return Err(Error::config("channels", "no channels selected"));
        }
        let mut seen = out.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != out.len() {
            return Err(Error::config("channels", format!("{s:?} selects a channel twice")));
        }
        Ok(ChannelSelector(out))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineOptions {
    /// All columns when absent.
    pub channels: Option<ChannelSelector>,
    /// Keep the first `length` rows of every file; the shortest file's
    /// length when absent.
    pub length: Option<usize>,
    /// Skip the first row of every file.
    pub header: bool,
}

fn delimiter_for(first_line: &str) -> u8 {
    if first_line.contains('\t') {
        b'\t'
    } else if first_line.contains(';') {
        b';'
    } else {
        b','
    }
}

/// Reads a delimited numeric table (rows = time points, columns = channels).
pub fn read_series_table(text: &str, file: &str, header: bool) -> Result<DMatrix<f64>> {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter_for(first))
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("{file}: {e}")))?;
        let row = r + 1 + usize::from(header);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedSeries {
                file: file.into(),
                row,
                expected,
                found: record.len(),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                Error::NonNumericCell {
                    file: file.into(),
                    row,
                    col: c + 1,
                    cell: cell.into(),
                }
            })?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = width.unwrap_or(0);
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// Sample covariance (divisor T − 1) of the selected channels over the first
/// `length` rows, standardized to a correlation matrix.
pub fn series_to_correlation(
    series: &DMatrix<f64>,
    channels: Option<&ChannelSelector>,
    length: usize,
    file: &str,
) -> Result<SpdMatrix> {
    let cols: Vec<usize> = match channels {
        Some(sel) => sel.0.clone(),
        None => (0..series.ncols()).collect(),
    };
    if let Some(&c) = cols.iter().find(|&&c| c >= series.ncols()) {
        return Err(Error::Data(format!(
            "{file}: channel {} requested but the table has {} columns",
            c + 1,
            series.ncols()
        )));
    }
    let p = cols.len();
    let needed = length.max(p + 1).max(2);
    if series.nrows() < needed {
        return Err(Error::InsufficientLength {
            file: file.into(),
            len: series.nrows(),
            needed,
        });
    }
    let x = DMatrix::from_fn(length, p, |t, j| series[(t, cols[j])]);
    let means = x.row_mean();
    let centered = DMatrix::from_fn(length, p, |t, j| x[(t, j)] - means[j]);
    let cov = centered.transpose() * &centered / (length as f64 - 1.0);
    standardize_to_correlation(&cov).map_err(|e| match e {
        Error::ZeroDiagonal { .. } => e,
        other => Error::Data(format!(
            "{file}: correlation matrix is not positive definite ({other}); channels may be collinear"
        )),
    })
}

fn table_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::Io(e.to_string()))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if path.is_file() && matches!(ext, "csv" | "tsv" | "txt") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Data(format!("{}: no .csv/.tsv/.txt tables found", dir.display())));
    }
    Ok(files)
}

/// One correlation matrix per table file in `dir` (sorted by name; the
/// subject id is the file stem).
pub fn run_pipeline(dir: &Path, options: &PipelineOptions) -> Result<DatasetBundle> {
    let files = table_files(dir)?;
    let mut tables = Vec::with_capacity(files.len());
    for path in &files {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{name}: {e}")))?;
        tables.push((name.clone(), read_series_table(&text, &name, options.header)?));
    }
    let length = match options.length {
        Some(t) => t,
        None => tables.iter().map(|(_, t)| t.nrows()).min().unwrap_or(0),
    };
    let data = tables
        .iter()
        .map(|(name, t)| series_to_correlation(t, options.channels.as_ref(), length, name))
        .collect::<Result<Vec<_>>>()?;
    let ids = files
        .iter()
        .map(|f| f.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string())
        .collect();
    let mut prov = BTreeMap::new();
    prov.insert("generator".into(), Value::from("wishmix pipeline"));
    prov.insert("length".into(), Value::from(length));
    prov.insert(
        "channels".into(),
        match &options.channels {
            Some(sel) => Value::from(sel.0.iter().map(|c| c + 1).collect::<Vec<_>>()),
            None => Value::from("all"),
        },
    );
    DatasetBundle::from_matrices(&data, None, Some(ids), prov)
}
