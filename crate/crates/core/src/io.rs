//! Text formats: Matrix Market (`array` and `coordinate`), whitespace vectors
//! and `u v w` edge lists.
//!
//! Readers are strict: a malformed header, a wrong entry count, an index out
//! of range or a repeated coordinate is reported as [`Error::Parse`] with the
//! 1-based line number. Writers emit shortest round-trip decimal forms, so a
//! write followed by a read reproduces every value exactly.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::laplacian::WeightedGraph;
use crate::matrix::DenseMatrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixFormat {
    Array,
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

#[derive(Debug, Clone, Copy)]
struct Header {
    format: MatrixFormat,
    field: Field,
    symmetry: Symmetry,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_header(line_no: usize, line: &str) -> Result<Header> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(line_no, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    if tokens[1] != "matrix" {
        return Err(parse_err(line_no, format!("unsupported object '{}'", tokens[1])));
    }
    let format = match tokens[2].as_str() {
        "array" => MatrixFormat::Array,
        "coordinate" => MatrixFormat::Coordinate,
        f => return Err(parse_err(line_no, format!("unknown format '{f}'"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" if format == MatrixFormat::Coordinate => Field::Pattern,
        f => return Err(parse_err(line_no, format!("unsupported field '{f}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        s => return Err(parse_err(line_no, format!("unsupported symmetry '{s}'"))),
    };
    Ok(Header { format, field, symmetry })
}

fn parse_usize(line_no: usize, tok: &str, what: &str) -> Result<usize> {
    tok.parse::<usize>().map_err(|_| parse_err(line_no, format!("invalid {what} '{tok}'")))
}

fn parse_value<T: Real>(line_no: usize, tok: &str, field: Field) -> Result<T> {
    let v = match field {
        Field::Integer => tok.parse::<i64>().map(|i| i as f64).map_err(|_| parse_err(line_no, format!("invalid integer '{tok}'")))?,
        _ => tok.parse::<f64>().map_err(|_| parse_err(line_no, format!("invalid real '{tok}'")))?,
    };
    if !v.is_finite() {
        return Err(parse_err(line_no, format!("non-finite value '{tok}'")));
    }
    T::from_f64(v).ok_or_else(|| parse_err(line_no, format!("value '{tok}' not representable")))
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, l)| match l {
        Err(e) => Some(Err(Error::from(e))),
        Ok(s) => {
            let t = s.trim();
            if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, t.to_string())))
            }
        }
    })
}

/// Reads a Matrix Market `array` or `coordinate` file into a dense matrix.
pub fn read_matrix_market<T: Real, R: BufRead>(reader: R) -> Result<DenseMatrix<T>> {
    let mut lines = reader.lines();
    let first = match lines.next() {
        Some(l) => l?,
        None => return Err(parse_err(1, "empty input")),
    };
    let header = parse_header(1, &first)?;
    let rest = lines.enumerate().filter_map(|(i, l)| match l {
        Err(e) => Some(Err(Error::from(e))),
        Ok(s) => {
            let t = s.trim();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok((i + 2, t.to_string())))
            }
        }
    });
    match header.format {
        MatrixFormat::Array => read_array_body(header, rest),
        MatrixFormat::Coordinate => read_coordinate_body(header, rest),
    }
}

fn read_array_body<T: Real>(header: Header, mut lines: impl Iterator<Item = Result<(usize, String)>>) -> Result<DenseMatrix<T>> {
    let (size_line, size) = lines.next().ok_or_else(|| parse_err(2, "missing size line"))??;
    let toks: Vec<&str> = size.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(parse_err(size_line, "array size line must be 'rows cols'"));
    }
    let m = parse_usize(size_line, toks[0], "row count")?;
    let n = parse_usize(size_line, toks[1], "column count")?;
    if header.symmetry != Symmetry::General && m != n {
        return Err(parse_err(size_line, "symmetric matrix must be square"));
    }
    // column-major; symmetric variants store the lower triangle only
    let positions: Vec<(usize, usize)> = match header.symmetry {
        Symmetry::General => (0..n).flat_map(|j| (0..m).map(move |i| (i, j))).collect(),
        Symmetry::Symmetric => (0..n).flat_map(|j| (j..m).map(move |i| (i, j))).collect(),
        Symmetry::SkewSymmetric => (0..n).flat_map(|j| (j + 1..m).map(move |i| (i, j))).collect(),
    };
    let mut a = DenseMatrix::zeros(m, n);
    let mut last_line = size_line;
    for (k, &(i, j)) in positions.iter().enumerate() {
        let (line_no, text) = match lines.next() {
            Some(r) => r?,
            None => return Err(parse_err(last_line + 1, format!("expected {} entries, found {k}", positions.len()))),
        };
        last_line = line_no;
        let mut it = text.split_whitespace();
        let tok = it.next().unwrap_or_default();
        if it.next().is_some() {
            return Err(parse_err(line_no, "array entries must be one per line"));
        }
        let v: T = parse_value(line_no, tok, header.field)?;
        a.set(i, j, v);
        match header.symmetry {
            Symmetry::General => {}
            Symmetry::Symmetric => a.set(j, i, v),
            Symmetry::SkewSymmetric => a.set(j, i, -v),
        }
    }
    if let Some(extra) = lines.next() {
        let (line_no, _) = extra?;
        return Err(parse_err(line_no, "unexpected trailing entry"));
    }
    Ok(a)
}

fn read_coordinate_body<T: Real>(header: Header, mut lines: impl Iterator<Item = Result<(usize, String)>>) -> Result<DenseMatrix<T>> {
    let (size_line, size) = lines.next().ok_or_else(|| parse_err(2, "missing size line"))??;
    let toks: Vec<&str> = size.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(parse_err(size_line, "coordinate size line must be 'rows cols nnz'"));
    }
    let m = parse_usize(size_line, toks[0], "row count")?;
    let n = parse_usize(size_line, toks[1], "column count")?;
    let nnz = parse_usize(size_line, toks[2], "entry count")?;
    if header.symmetry != Symmetry::General && m != n {
        return Err(parse_err(size_line, "symmetric matrix must be square"));
    }
    let mut a = DenseMatrix::zeros(m, n);
    let mut seen = HashSet::with_capacity(nnz);
    let mut last_line = size_line;
    for k in 0..nnz {
        let (line_no, text) = match lines.next() {
            Some(r) => r?,
            None => return Err(parse_err(last_line + 1, format!("expected {nnz} entries, found {k}"))),
        };
        last_line = line_no;
        let toks: Vec<&str> = text.split_whitespace().collect();
        let want = if header.field == Field::Pattern { 2 } else { 3 };
        if toks.len() != want {
            return Err(parse_err(line_no, format!("expected {want} tokens, found {}", toks.len())));
        }
        let i = parse_usize(line_no, toks[0], "row index")?;
        let j = parse_usize(line_no, toks[1], "column index")?;
        if i == 0 || j == 0 || i > m || j > n {
            return Err(parse_err(line_no, format!("index ({i}, {j}) outside 1..={m} x 1..={n}")));
        }
        let (i, j) = (i - 1, j - 1);
        let v: T = if header.field == Field::Pattern { T::one() } else { parse_value(line_no, toks[2], header.field)? };
        let key = match header.symmetry {
            Symmetry::General => (i, j),
            _ => (i.max(j), i.min(j)),
        };
        if header.symmetry == Symmetry::SkewSymmetric && i == j {
            return Err(parse_err(line_no, "skew-symmetric matrix has a diagonal entry"));
        }
        if !seen.insert(key) {
            return Err(parse_err(line_no, format!("duplicate entry ({}, {})", i + 1, j + 1)));
        }
        a.set(i, j, v);
        match header.symmetry {
            Symmetry::General => {}
            Symmetry::Symmetric => a.set(j, i, v),
            Symmetry::SkewSymmetric => a.set(j, i, -v),
        }
    }
    if let Some(extra) = lines.next() {
        let (line_no, _) = extra?;
        return Err(parse_err(line_no, "unexpected trailing entry"));
    }
    Ok(a)
}

pub fn read_matrix_market_str<T: Real>(text: &str) -> Result<DenseMatrix<T>> {
    read_matrix_market(text.as_bytes())
}

pub fn read_matrix_market_file<T: Real>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

fn fmt_value<T: Real>(v: T) -> String {
    format!("{:e}", v.as_f64())
}

/// `array real general`, column-major.
pub fn write_array_string<T: Real>(a: &DenseMatrix<T>) -> String {
    let (m, n) = a.shape();
    let mut s = String::with_capacity(32 + 24 * m * n);
    s.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{m} {n}");
    for j in 0..n {
        for i in 0..m {
            let _ = writeln!(s, "{}", fmt_value(a.get(i, j)));
        }
    }
    s
}

/// `coordinate real general` from explicit 0-based `(row, col, value)` triples.
pub fn write_coordinate_string<T: Real>(shape: (usize, usize), entries: &[(usize, usize, T)]) -> String {
    let mut s = String::with_capacity(48 + 32 * entries.len());
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", shape.0, shape.1, entries.len());
    for &(i, j, v) in entries {
        let _ = writeln!(s, "{} {} {}", i + 1, j + 1, fmt_value(v));
    }
    s
}

/// Nonzero entries of `a` in coordinate format, row by row.
pub fn write_coordinate_dense<T: Real>(a: &DenseMatrix<T>) -> String {
    let (m, n) = a.shape();
    let entries: Vec<(usize, usize, T)> =
        (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).filter_map(|(i, j)| (a.get(i, j) != T::zero()).then(|| (i, j, a.get(i, j)))).collect();
    write_coordinate_string((m, n), &entries)
}

pub fn write_matrix_market_file<T: Real>(path: impl AsRef<Path>, a: &DenseMatrix<T>, format: MatrixFormat) -> Result<()> {
    let body = match format {
        MatrixFormat::Array => write_array_string(a),
        MatrixFormat::Coordinate => write_coordinate_dense(a),
    };
    write_text(path, &body)
}

fn write_text(path: impl AsRef<Path>, body: &str) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(body.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Reads a vector either as a Matrix Market single-column (or single-row)
/// matrix or as whitespace-separated numbers.
pub fn read_vector<T: Real, R: BufRead>(mut reader: R) -> Result<Vec<T>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    if text.trim_start().starts_with("%%MatrixMarket") {
        let a: DenseMatrix<T> = read_matrix_market_str(&text)?;
        return match a.shape() {
            (_, 1) => Ok(a.col(0)),
            (1, _) => Ok(a.row(0).to_vec()),
            (m, n) => Err(parse_err(2, format!("expected a vector, found a {m}x{n} matrix"))),
        };
    }
    let mut out = Vec::new();
    for item in data_lines(text.as_bytes()) {
        let (line_no, line) = item?;
        for tok in line.split_whitespace() {
            out.push(parse_value(line_no, tok, Field::Real)?);
        }
    }
    Ok(out)
}

pub fn read_vector_file<T: Real>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    read_vector(BufReader::new(File::open(path)?))
}

pub fn write_vector_string<T: Real>(x: &[T]) -> String {
    let mut s = String::with_capacity(24 * x.len());
    for &v in x {
        let _ = writeln!(s, "{}", fmt_value(v));
    }
    s
}

/// Reads `u v [w]` lines (0-based vertices, weight defaults to 1). Lines
/// starting with `#` or `%` are comments. The vertex count is `n` when given,
/// otherwise the largest id plus one.
pub fn read_edge_list<T: Real, R: BufRead>(reader: R, n: Option<usize>) -> Result<WeightedGraph<T>> {
    let mut edges = Vec::new();
    let mut max_id = None::<usize>;
    for item in data_lines(reader) {
        let (line_no, line) = item?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 && toks.len() != 3 {
            return Err(parse_err(line_no, "edge line must be 'u v [w]'"));
        }
        let u = parse_usize(line_no, toks[0], "vertex")?;
        let v = parse_usize(line_no, toks[1], "vertex")?;
        let w: T = if toks.len() == 3 { parse_value(line_no, toks[2], Field::Real)? } else { T::one() };
        if u == v {
            return Err(parse_err(line_no, format!("self-loop at vertex {u}")));
        }
        if w <= T::zero() {
            return Err(parse_err(line_no, format!("edge weight must be positive, got {w}")));
        }
        if let Some(n) = n {
            if u >= n || v >= n {
                return Err(parse_err(line_no, format!("vertex out of range for n = {n}")));
            }
        }
        max_id = Some(max_id.unwrap_or(0).max(u).max(v));
        edges.push((u, v, w));
    }
    let n = n.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    WeightedGraph::new(n, edges)
}

pub fn read_edge_list_str<T: Real>(text: &str) -> Result<WeightedGraph<T>> {
    read_edge_list(text.as_bytes(), None)
}

pub fn read_edge_list_file<T: Real>(path: impl AsRef<Path>) -> Result<WeightedGraph<T>> {
    read_edge_list(BufReader::new(File::open(path)?), None)
}

pub fn write_edge_list_string<T: Real>(g: &WeightedGraph<T>) -> String {
    let mut s = String::with_capacity(32 * g.edge_count());
    for &(u, v, w) in g.edges() {
        let _ = writeln!(s, "{u} {v} {}", fmt_value(w));
    }
    s
}

pub fn write_edge_list_file<T: Real>(path: impl AsRef<Path>, g: &WeightedGraph<T>) -> Result<()> {
    write_text(path, &write_edge_list_string(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;

    fn random(m: usize, n: usize, seed: u64) -> DenseMatrix<f64> {
        let mut rng = RngSeed::from_seed(seed).rng();
        DenseMatrix::from_fn(m, n, |_, _| rng.normal() * 10f64.powi(rng.index(20) as i32 - 10))
    }

    #[test]
    fn array_round_trip_is_exact() {
        let a = random(7, 5, 1);
        let b: DenseMatrix<f64> = read_matrix_market_str(&write_array_string(&a)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coordinate_round_trip_and_symmetric() {
        let mut a = random(6, 4, 2);
        a.set(1, 2, 0.0);
        let b: DenseMatrix<f64> = read_matrix_market_str(&write_coordinate_dense(&a)).unwrap();
        assert_eq!(a, b);

        let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n3 3 2\n2 1 4.5\n3 3 -1\n";
        let s: DenseMatrix<f64> = read_matrix_market_str(text).unwrap();
        assert_eq!(s.get(0, 1), 4.5);
        assert_eq!(s.get(1, 0), 4.5);
        assert_eq!(s.get(2, 2), -1.0);
    }

    #[test]
    fn strict_errors_carry_line_numbers() {
        let dup = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n1 1 2.0\n";
        assert_eq!(read_matrix_market_str::<f64>(dup).unwrap_err(), Error::Parse { line: 4, message: "duplicate entry (1, 1)".into() });
        let bad = "%%MatrixMarket matrix array real general\n2 1\n1.0\nfoo\n";
        assert!(matches!(read_matrix_market_str::<f64>(bad), Err(Error::Parse { line: 4, .. })));
        let short = "%%MatrixMarket matrix array real general\n2 1\n1.0\n";
        assert!(matches!(read_matrix_market_str::<f64>(short), Err(Error::Parse { .. })));
        assert!(matches!(read_matrix_market_str::<f64>("%%MatrixMarket matrix coordinate complex general\n"), Err(Error::Parse { line: 1, .. })));
        let oob = "%%MatrixMarket matrix coordinate integer general\n2 2 1\n3 1 7\n";
        assert!(matches!(read_matrix_market_str::<f64>(oob), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn edge_list_inference() {
        let g: WeightedGraph<f64> = read_edge_list_str("0 1 1.0").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.edges(), &[(0, 1, 1.0)]);
        let g2: WeightedGraph<f64> = read_edge_list_str(&write_edge_list_string(&g)).unwrap();
        assert_eq!(g, g2);
        assert!(matches!(read_edge_list_str::<f64>("# c\n1 1 2\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn vectors_plain_and_market() {
        let v: Vec<f64> = read_vector("1 2\n3e-1\n".as_bytes()).unwrap();
        assert_eq!(v, vec![1.0, 2.0, 0.3]);
        let a = DenseMatrix::from_rows(&[vec![1.5], vec![-2.0]]).unwrap();
        let w: Vec<f64> = read_vector(write_array_string(&a).as_bytes()).unwrap();
        assert_eq!(w, vec![1.5, -2.0]);
    }
}
