//! Dense CSV and Matrix Market readers and writers.
//!
//! Numbers are written with the shortest decimal string that round-trips the
//! binary64 value.

use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    MatrixMarket,
}

impl MatrixFormat {
    /// Matrix Market when the text starts with its banner, CSV otherwise.
    pub fn detect(text: &str) -> Self {
        if text.trim_start().starts_with("%%MatrixMarket") {
            MatrixFormat::MatrixMarket
        } else {
            MatrixFormat::Csv
        }
    }
}

/// Shortest round-trip decimal representation, in exponent form outside `[1e-5, 1e16)`.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix(&text)
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    match MatrixFormat::detect(text) {
        MatrixFormat::Csv => parse_csv(text),
        MatrixFormat::MatrixMarket => parse_matrix_market(text),
    }
}

fn parse_number(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("not a number: {:?}", field.trim()),
    })
}

/// Dense row-major CSV. A first line that does not parse as numbers is taken as a header.
pub fn parse_csv(text: &str) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Result<Vec<f64>> = record.iter().map(|f| parse_number(f, line)).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if rows.is_empty() && k == 0 => continue,
            Err(e) => return Err(e),
        }
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NotSquare {
                rows: n,
                row: r,
                cols: row.len(),
            });
        }
    }
    DenseMatrix::new(n, rows.into_iter().flatten().collect())
}

/// Matrix Market `array` (column-major) or `coordinate` (1-based triples) real matrices.
pub fn parse_matrix_market(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    let (_, banner) = lines.next().ok_or(Error::Empty)?;
    let tokens: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            message: format!("bad Matrix Market banner: {banner:?}"),
        });
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unsupported layout {other:?}"),
            })
        }
    };
    if !matches!(tokens[3].as_str(), "real" | "integer" | "double") {
        return Err(Error::Parse {
            line: 1,
            message: format!("unsupported field {:?}", tokens[3]),
        });
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unsupported symmetry {other:?}"),
            })
        }
    };

    let mut body = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (size_line, size) = body.next().ok_or(Error::Empty)?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line: size_line,
                message: format!("bad size entry {t:?}"),
            })
        })
        .collect::<Result<_>>()?;
    let expected = if coordinate { 3 } else { 2 };
    if dims.len() != expected {
        return Err(Error::Parse {
            line: size_line,
            message: format!("expected {expected} size fields, found {}", dims.len()),
        });
    }
    let (rows, cols) = (dims[0], dims[1]);
    if rows == 0 {
        return Err(Error::Empty);
    }
    if rows != cols {
        return Err(Error::NotSquare { rows, row: 0, cols });
    }
    let n = rows;
    let mut m = DenseMatrix::zeros(n);

    if coordinate {
        let nnz = dims[2];
        let mut seen = 0;
        for (line, l) in body {
            let fields: Vec<&str> = l.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 'row col value', found {l:?}"),
                });
            }
            let index = |t: &str| -> Result<usize> {
                match t.parse::<usize>() {
                    Ok(v) if (1..=n).contains(&v) => Ok(v - 1),
                    _ => Err(Error::Parse {
                        line,
                        message: format!("index {t:?} outside 1..={n}"),
                    }),
                }
            };
            let (r, c) = (index(fields[0])?, index(fields[1])?);
            let v = parse_number(fields[2], line)?;
            m.set(r, c, v);
            if symmetric {
                m.set(c, r, v);
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(Error::Parse {
                line: size_line,
                message: format!("declared {nnz} entries, found {seen}"),
            });
        }
    } else {
        let mut values = Vec::with_capacity(n * n);
        for (line, l) in body {
            for t in l.split_whitespace() {
                values.push(parse_number(t, line)?);
            }
        }
        let expected = if symmetric { n * (n + 1) / 2 } else { n * n };
        if values.len() != expected {
            return Err(Error::Parse {
                line: size_line,
                message: format!("declared {expected} entries, found {}", values.len()),
            });
        }
        let mut it = values.into_iter();
        for c in 0..n {
            let start = if symmetric { c } else { 0 };
            for r in start..n {
                let v = it.next().expect("length checked");
                m.set(r, c, v);
                if symmetric {
                    m.set(c, r, v);
                }
            }
        }
    }
    DenseMatrix::new(n, m.into_vec())
}

/// Rows of optional values as CSV; `None` becomes an empty field.
pub fn table_to_csv<S: AsRef<str>>(header: Option<&[S]>, rows: &[Vec<Option<f64>>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(h) = header {
        w.write_record(h.iter().map(|s| s.as_ref())).expect("in-memory write");
    }
    for row in rows {
        w.write_record(row.iter().map(|v| v.map(format_f64).unwrap_or_default()))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Records of preformatted fields as CSV.
pub fn records_to_csv<S: AsRef<str>>(header: &[S], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header.iter().map(|s| s.as_ref())).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 output")
}

pub fn matrix_to_csv(m: &DenseMatrix) -> String {
    let rows: Vec<Vec<Option<f64>>> = m.rows().map(|r| r.iter().copied().map(Some).collect()).collect();
    table_to_csv::<&str>(None, &rows)
}

/// Matrix Market `array real general`.
pub fn matrix_to_matrix_market(m: &DenseMatrix) -> String {
    let n = m.dim();
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    out.push_str(&format!("{n} {n}\n"));
    for c in 0..n {
        for r in 0..n {
            out.push_str(&format_f64(m.get(r, c)));
            out.push('\n');
        }
    }
    out
}
