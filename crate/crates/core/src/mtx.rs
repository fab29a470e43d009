//! Matrix Market (`.mtx`) reader for real matrices.
//!
//! Supports `coordinate` and `array` storage with `real` or `integer`
//! fields and `general`, `symmetric` or `skew-symmetric` symmetry. The
//! result is always a dense matrix.

use std::io::BufRead;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CtgError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

fn parse_err(line: usize, msg: impl Into<String>) -> CtgError {
    CtgError::Parse { line, msg: msg.into() }
}

pub fn read_matrix_market_file<T: Real>(path: impl AsRef<Path>) -> Result<DMatrix<T>> {
    let file =
        std::fs::File::open(path.as_ref()).map_err(|e| CtgError::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_matrix_market(std::io::BufReader::new(file))
}

pub fn read_matrix_market<T: Real, R: BufRead>(reader: R) -> Result<DMatrix<T>> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(1, format!("unsupported format '{other}'"))),
    };
    if !matches!(tokens[3].as_str(), "real" | "integer" | "double") {
        return Err(parse_err(1, format!("unsupported field '{}'", tokens[3])));
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut data = lines.filter_map(|(n, l)| match l {
        Ok(s) => {
            let t = s.trim().to_string();
            (!t.is_empty() && !t.starts_with('%')).then_some(Ok((n, t)))
        }
        Err(e) => Some(Err(CtgError::from(e))),
    });

    let (size_line, size) = data.next().ok_or_else(|| parse_err(1, "missing size line"))??;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(size_line, format!("bad size entry '{t}'"))))
        .collect::<Result<_>>()?;
    let (nrows, ncols) = match (layout, dims.as_slice()) {
        (Layout::Coordinate, [r, c, _]) | (Layout::Array, [r, c]) => (*r, *c),
        _ => return Err(parse_err(size_line, "wrong number of size entries")),
    };
    if symmetry != Symmetry::General && nrows != ncols {
        return Err(parse_err(size_line, "symmetric storage requires a square matrix"));
    }
    let mut m = DMatrix::<T>::zeros(nrows, ncols);
    let parse_value = |line: usize, t: &str| -> Result<T> {
        t.parse::<f64>().map(T::of).map_err(|_| parse_err(line, format!("bad value '{t}'")))
    };

    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            for _ in 0..nnz {
                let (line, text) = data.next().ok_or_else(|| parse_err(size_line, "fewer entries than declared"))??;
                let parts: Vec<&str> = text.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(parse_err(line, "expected 'row col value'"));
                }
                let idx = |t: &str, max: usize| -> Result<usize> {
                    let i: usize = t.parse().map_err(|_| parse_err(line, format!("bad index '{t}'")))?;
                    if i == 0 || i > max {
                        return Err(parse_err(line, format!("index {i} out of range 1..={max}")));
                    }
                    Ok(i - 1)
                };
                let (i, j) = (idx(parts[0], nrows)?, idx(parts[1], ncols)?);
                let v = parse_value(line, parts[2])?;
                m[(i, j)] += v;
                if i != j {
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => m[(j, i)] += v,
                        Symmetry::Skew => m[(j, i)] -= v,
                    }
                } else if symmetry == Symmetry::Skew && v != T::zero() {
                    return Err(parse_err(line, "skew-symmetric matrix with nonzero diagonal"));
                }
            }
        }
        Layout::Array => {
            let mut values = Vec::new();
            for item in data.by_ref() {
                let (line, text) = item?;
                for t in text.split_whitespace() {
                    values.push(parse_value(line, t)?);
                }
            }
            let mut it = values.into_iter();
            let mut next = || it.next().ok_or_else(|| parse_err(size_line, "fewer entries than declared"));
            for j in 0..ncols {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::Skew => j + 1,
                };
                for i in start..nrows {
                    let v = next()?;
                    m[(i, j)] = v;
                    match symmetry {
                        Symmetry::Symmetric if i != j => m[(j, i)] = v,
                        Symmetry::Skew => m[(j, i)] = -v,
                        _ => {}
                    }
                }
            }
            if it.next().is_some() {
                return Err(parse_err(size_line, "more entries than declared"));
            }
        }
    }
    if let Some(extra) = data.next() {
        let (line, _) = extra?;
        return Err(parse_err(line, "trailing data after declared entries"));
    }
    Ok(m)
}
