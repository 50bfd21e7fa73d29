//! Matrix and label file formats.
//!
//! Delimited text (CSV/TSV): rows are features, columns are samples. The
//! first row is a header of sample names when any field past the first is
//! not a number; the first column holds feature names when the first field
//! of the first data row is not a number. A header may omit the corner cell.
//! All-numeric sample names are therefore read as data.
//!
//! MatrixMarket: `%%MatrixMarket matrix coordinate real general` (or
//! `integer`), 1-based indices, missing entries are zero, duplicates add up.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::metrics::LabelVector;

use super::LabeledDataset;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Tsv,
    MatrixMarket,
}

impl MatrixFormat {
    /// Guesses the format from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("tsv") | Some("tab") | Some("txt") => MatrixFormat::Tsv,
            Some("mtx") | Some("mm") => MatrixFormat::MatrixMarket,
            _ => MatrixFormat::Csv,
        }
    }

    fn delimiter(self) -> u8 {
        match self {
            MatrixFormat::Tsv => b'\t',
            _ => b',',
        }
    }
}

fn parse_err(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

fn is_number(s: &str) -> bool {
    s.trim().parse::<f64>().is_ok()
}

/// Loads a non-negative expression matrix. Labels are not part of the matrix
/// file; attach them with [`load_labels`].
pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<LabeledDataset> {
    match format {
        MatrixFormat::Csv | MatrixFormat::Tsv => load_delimited(path, format.delimiter()),
        MatrixFormat::MatrixMarket => load_matrix_market(path),
    }
}

fn load_delimited(path: &Path, delimiter: u8) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(path, 0, 0, format!("{other:?}")),
        })?;

    let mut records: Vec<(usize, Vec<String>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, 0, e.to_string())
        })?;
        let line = rec
            .position()
            .map_or(records.len() + 1, |p| p.line() as usize);
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        records.push((line, rec.iter().map(|f| f.trim().to_string()).collect()));
    }
    if records.is_empty() {
        return Err(parse_err(path, 1, 0, "file contains no data"));
    }

    let first_row = &records[0].1;
    let has_header = if first_row.len() == 1 {
        !is_number(&first_row[0])
    } else {
        first_row[1..].iter().any(|f| !is_number(f))
    };
    let header = if has_header {
        Some(records.remove(0))
    } else {
        None
    };
    let Some((first_line, first)) = records.first() else {
        return Err(parse_err(path, 1, 0, "header present but no data rows"));
    };
    let has_row_names = !is_number(&first[0]);
    let width = first.len();
    let offset = usize::from(has_row_names);
    let n = width - offset;
    if n == 0 {
        return Err(parse_err(path, *first_line, 1, "row has no numeric values"));
    }

    let sample_names = match header {
        Some((line, fields)) => {
            let names = if fields.len() == width {
                fields[offset..].to_vec()
            } else if has_row_names && fields.len() == n {
                fields
            } else {
                return Err(parse_err(
                    path,
                    line,
                    0,
                    format!(
                        "header has {} fields but data rows have {width}",
                        fields.len()
                    ),
                ));
            };
            Some(names)
        }
        None => None,
    };

    let p = records.len();
    let mut feature_names = has_row_names.then(|| Vec::with_capacity(p));
    let mut data = vec![0.0; p * n];
    for (i, (line, fields)) in records.iter().enumerate() {
        if fields.len() != width {
            return Err(parse_err(
                path,
                *line,
                0,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        if let Some(names) = feature_names.as_mut() {
            names.push(fields[0].clone());
        }
        for (j, raw) in fields[offset..].iter().enumerate() {
            let column = j + offset + 1;
            let value: f64 = raw
                .parse()
                .map_err(|_| parse_err(path, *line, column, format!("`{raw}` is not a number")))?;
            if !value.is_finite() {
                return Err(parse_err(
                    path,
                    *line,
                    column,
                    format!("non-finite value `{raw}`"),
                ));
            }
            if value < 0.0 {
                return Err(parse_err(
                    path,
                    *line,
                    column,
                    format!("negative value {raw}"),
                ));
            }
            data[j * p + i] = value;
        }
    }
    let x = DenseMatrix::from_col_major(p, n, data)?;
    LabeledDataset::new(x, None, feature_names, sample_names)
}

fn load_matrix_market(path: &Path) -> Result<LabeledDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let (_, banner) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, 0, "empty file"))?;
    let banner = banner.map_err(|e| Error::io(path, e))?;
    let tokens: Vec<String> = banner
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() < 5
        || tokens[0] != "%%matrixmarket"
        || tokens[1] != "matrix"
        || tokens[2] != "coordinate"
        || !(tokens[3] == "real" || tokens[3] == "integer")
        || tokens[4] != "general"
    {
        return Err(parse_err(
            path,
            1,
            1,
            "expected `%%MatrixMarket matrix coordinate real general`",
        ));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut data = Vec::new();
    let mut seen = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse_idx = |k: usize| -> Result<usize> {
            fields
                .get(k)
                .and_then(|f| f.parse::<usize>().ok())
                .ok_or_else(|| parse_err(path, line_no, k + 1, "expected a non-negative integer"))
        };
        match size {
            None => {
                let dims = (parse_idx(0)?, parse_idx(1)?, parse_idx(2)?);
                data = vec![0.0; dims.0 * dims.1];
                size = Some(dims);
            }
            Some((rows, cols, _)) => {
                let i = parse_idx(0)?;
                let j = parse_idx(1)?;
                if i == 0 || i > rows {
                    return Err(parse_err(
                        path,
                        line_no,
                        1,
                        format!("row index {i} out of 1..={rows}"),
                    ));
                }
                if j == 0 || j > cols {
                    return Err(parse_err(
                        path,
                        line_no,
                        2,
                        format!("column index {j} out of 1..={cols}"),
                    ));
                }
                let raw = fields
                    .get(2)
                    .ok_or_else(|| parse_err(path, line_no, 3, "missing value"))?;
                let v: f64 = raw
                    .parse()
                    .map_err(|_| parse_err(path, line_no, 3, format!("`{raw}` is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_err(
                        path,
                        line_no,
                        3,
                        format!("non-finite value `{raw}`"),
                    ));
                }
                if v < 0.0 {
                    return Err(parse_err(path, line_no, 3, format!("negative value {raw}")));
                }
                data[(j - 1) * rows + (i - 1)] += v;
                seen += 1;
            }
        }
    }
    let (rows, cols, nnz) = size.ok_or_else(|| parse_err(path, 2, 0, "missing size line"))?;
    if seen != nnz {
        return Err(parse_err(
            path,
            0,
            0,
            format!("size line declares {nnz} entries, found {seen}"),
        ));
    }
    let x = DenseMatrix::from_col_major(rows, cols, data)?;
    LabeledDataset::new(x, None, None, None)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

/// Writes `m` as delimited text with 17 significant digits, or as a
/// coordinate MatrixMarket file (names are dropped in that case).
pub fn save_matrix(
    path: &Path,
    m: &DenseMatrix,
    row_names: Option<&[String]>,
    col_names: Option<&[String]>,
    format: MatrixFormat,
) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    if format == MatrixFormat::MatrixMarket {
        writeln!(out, "%%MatrixMarket matrix coordinate real general").map_err(io)?;
        let nnz = crate::linalg::l0_norm(m);
        writeln!(out, "{} {} {}", m.rows(), m.cols(), nnz).map_err(io)?;
        for j in 0..m.cols() {
            for (i, v) in m.col(j).iter().enumerate() {
                if *v != 0.0 {
                    writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v).map_err(io)?;
                }
            }
        }
        return out.flush().map_err(io);
    }

    let delim = if format == MatrixFormat::Tsv {
        "\t"
    } else {
        ","
    };
    let mut writer = csv::WriterBuilder::new()
        .delimiter(delim.as_bytes()[0])
        .from_writer(out);
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::InvalidArgument(format!("{other:?}")),
    };
    if let Some(cols) = col_names {
        let mut header: Vec<&str> = Vec::with_capacity(cols.len() + 1);
        if row_names.is_some() {
            header.push("");
        }
        header.extend(cols.iter().map(String::as_str));
        writer.write_record(&header).map_err(csv_err)?;
    }
    for i in 0..m.rows() {
        let mut record: Vec<String> = Vec::with_capacity(m.cols() + 1);
        if let Some(names) = row_names {
            record.push(names[i].clone());
        }
        record.extend((0..m.cols()).map(|j| format!("{:.16e}", m.get(i, j))));
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer.flush().map_err(io)
}

/// Reads one label per line. Integer labels are kept as given; any other
/// text is mapped to ids in order of first appearance.
pub fn load_labels(path: &Path) -> Result<LabelVector> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    let numeric: Option<Vec<usize>> = raw.iter().map(|l| l.parse().ok()).collect();
    Ok(match numeric {
        Some(ids) => LabelVector::new(ids),
        None => LabelVector::from_names(&raw).0,
    })
}

pub fn save_labels(path: &Path, labels: &LabelVector) -> Result<()> {
    let mut out = create(path)?;
    for l in labels.as_slice() {
        writeln!(out, "{l}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
