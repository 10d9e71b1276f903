//! Linear centered kernel alignment between row-aligned embedding matrices.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::language::LanguageTag;
use crate::scalar::{mean, Scalar};

/// Dense row-major matrix of sentence embeddings; row `i` in every file is the same sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    label: String,
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

#[derive(Debug, thiserror::Error)]
pub enum CkaError {
    #[error("{label}: need at least 2 rows, got {rows}")]
    TooFewRows { label: String, rows: usize },
    #[error("{label}: need at least 1 column")]
    NoColumns { label: String },
    #[error("{label}: {len} values do not fill a {rows}x{cols} matrix")]
    Shape { label: String, rows: usize, cols: usize, len: usize },
    #[error("{label}: non-finite value at row {row}, column {col}")]
    NonFinite { label: String, row: usize, col: usize },
    #[error("row counts differ: {left} has {left_rows}, {right} has {right_rows}")]
    RowMismatch { left: String, left_rows: usize, right: String, right_rows: usize },
    #[error("{label} is all zero after column centering")]
    Degenerate { label: String },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no matrix file for base language {0} in {1}")]
    MissingBase(LanguageTag, PathBuf),
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn new(label: impl Into<String>, rows: usize, cols: usize, values: Vec<T>) -> Result<Self, CkaError> {
        let label = label.into();
        if rows < 2 {
            return Err(CkaError::TooFewRows { label, rows });
        }
        if cols == 0 {
            return Err(CkaError::NoColumns { label });
        }
        if values.len() != rows * cols {
            return Err(CkaError::Shape { label, rows, cols, len: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CkaError::NonFinite { label, row: i / cols, col: i % cols });
        }
        Ok(Self { label, rows, cols, values })
    }

    pub fn from_rows(label: impl Into<String>, rows: &[Vec<T>]) -> Result<Self, CkaError> {
        let label = label.into();
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(CkaError::Shape { label, rows: rows.len(), cols, len: bad.len() });
        }
        Self::new(label, rows.len(), cols, rows.concat())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    fn centered(&self) -> Vec<T> {
        let n = T::of_usize(self.rows);
        let means: Vec<T> = (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum::<T>() / n)
            .collect();
        self.values
            .iter()
            .enumerate()
            .map(|(k, &v)| v - means[k % self.cols])
            .collect()
    }

    /// Parses the text format: a header line `n d`, then `n` rows of `d` decimals
    /// separated by whitespace or commas. Blank lines and `#` comments are ignored.
    pub fn parse(label: impl Into<String>, text: &str, path: &Path) -> Result<Self, CkaError> {
        let err = |message: String| CkaError::Parse { path: path.to_owned(), message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines.next().ok_or_else(|| err("empty file".into()))?;
        let dims: Vec<usize> = fields(header)
            .map(|f| f.parse::<usize>().map_err(|_| err(format!("bad header `{header}`, expected `n d`"))))
            .collect::<Result<_, _>>()?;
        let [rows, cols] = dims[..] else {
            return Err(err(format!("bad header `{header}`, expected `n d`")));
        };
        let mut values = Vec::with_capacity(rows * cols);
        let mut seen_rows = 0;
        for (line_no, line) in lines {
            let before = values.len();
            for f in fields(line) {
                let v: f64 = f.parse().map_err(|_| err(format!("line {line_no}: `{f}` is not a number")))?;
                values.push(T::of(v));
            }
            if values.len() - before != cols {
                return Err(err(format!("line {line_no}: expected {cols} values, got {}", values.len() - before)));
            }
            seen_rows += 1;
        }
        if seen_rows != rows {
            return Err(err(format!("header declares {rows} rows, found {seen_rows}")));
        }
        Self::new(label, rows, cols, values)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, CkaError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CkaError::Io { path: path.to_owned(), source })?;
        let label = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        Self::parse(label, &text, path)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty())
}

/// `AᵀB` for centered row-major `a` (n×p) and `b` (n×q), returned row-major p×q.
fn cross<T: Scalar>(a: &[T], p: usize, b: &[T], q: usize, n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); p * q];
    for i in 0..n {
        let ra = &a[i * p..(i + 1) * p];
        let rb = &b[i * q..(i + 1) * q];
        for (j, &x) in ra.iter().enumerate() {
            let dst = &mut out[j * q..(j + 1) * q];
            for (d, &y) in dst.iter_mut().zip(rb) {
                *d = *d + x * y;
            }
        }
    }
    out
}

fn frob_sq<T: Scalar>(m: &[T]) -> T {
    m.iter().map(|&v| v * v).sum()
}

/// `‖YᶜᵀXᶜ‖²_F / (‖XᶜᵀXᶜ‖_F · ‖YᶜᵀYᶜ‖_F)` with column-centered inputs.
pub fn linear_cka<T: Scalar>(x: &EmbeddingMatrix<T>, y: &EmbeddingMatrix<T>) -> Result<T, CkaError> {
    if x.rows != y.rows {
        return Err(CkaError::RowMismatch {
            left: x.label.clone(),
            left_rows: x.rows,
            right: y.label.clone(),
            right_rows: y.rows,
        });
    }
    let n = x.rows;
    let xc = x.centered();
    let yc = y.centered();
    for (m, c) in [(x, &xc), (y, &yc)] {
        if c.iter().all(|v| v.is_zero()) {
            return Err(CkaError::Degenerate { label: m.label.clone() });
        }
    }
    let yx = frob_sq(&cross(&yc, y.cols, &xc, x.cols, n));
    let xx = frob_sq(&cross(&xc, x.cols, &xc, x.cols, n)).sqrt();
    let yy = frob_sq(&cross(&yc, y.cols, &yc, y.cols, n)).sqrt();
    Ok(yx / (xx * yy))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CkaTable<T> {
    pub base: LanguageTag,
    pub scores: BTreeMap<LanguageTag, T>,
    pub avg: Option<T>,
}

/// Compares every `<lang>.txt` / `<lang>.csv` matrix in `dir` against the base language's.
/// Files whose stem is not a language code are ignored.
pub fn cka_table<T: Scalar>(dir: impl AsRef<Path>, base: LanguageTag) -> Result<CkaTable<T>, CkaError> {
    let dir = dir.as_ref();
    let io = |source| CkaError::Io { path: dir.to_owned(), source };
    let mut files: BTreeMap<LanguageTag, PathBuf> = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let ext_ok = matches!(path.extension().and_then(|e| e.to_str()), Some("txt" | "csv"));
        let lang = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse().ok());
        if let (true, Some(lang)) = (ext_ok && path.is_file(), lang) {
            files.entry(lang).or_insert(path);
        }
    }
    let base_path = files.remove(&base).ok_or_else(|| CkaError::MissingBase(base, dir.to_owned()))?;
    let base_matrix = EmbeddingMatrix::read(&base_path)?;
    let mut scores = BTreeMap::new();
    for (lang, path) in files {
        let m = EmbeddingMatrix::read(&path)?;
        scores.insert(lang, linear_cka(&base_matrix, &m)?);
    }
    let avg = mean(scores.values().copied());
    Ok(CkaTable { base, scores, avg })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_example() {
        let x = EmbeddingMatrix::from_rows("x", &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let y = EmbeddingMatrix::from_rows("y", &[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        // Centered X = [[1/3,-2/3],[-2/3,1/3],[1/3,1/3]], centered Y = [-1,0,1].
        // YᵀX = [0, 1]; XᵀX = [[2/3,-1/3],[-1/3,2/3]]; YᵀY = 2.
        // 1 / (sqrt(10/9) * 2) = 3 / (2 sqrt 10).
        let v: f64 = linear_cka(&x, &y).unwrap();
        assert_abs_diff_eq!(v, 3.0 / (2.0 * 10f64.sqrt()), epsilon = 1e-12);
        assert_abs_diff_eq!(linear_cka(&x, &x).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn errors() {
        let a = EmbeddingMatrix::from_rows("a", &[vec![1.0], vec![2.0]]).unwrap();
        let b = EmbeddingMatrix::from_rows("b", &[vec![1.0], vec![2.0], vec![4.0]]).unwrap();
        assert!(matches!(linear_cka(&a, &b), Err(CkaError::RowMismatch { .. })));
        let flat = EmbeddingMatrix::from_rows("flat", &[vec![3.0, 1.0], vec![3.0, 1.0]]).unwrap();
        assert!(matches!(linear_cka(&a, &flat), Err(CkaError::Degenerate { .. })));
        assert!(matches!(
            EmbeddingMatrix::<f64>::from_rows("one", &[vec![1.0]]),
            Err(CkaError::TooFewRows { .. })
        ));
        assert!(matches!(
            EmbeddingMatrix::from_rows("nan", &[vec![1.0], vec![f64::NAN]]),
            Err(CkaError::NonFinite { row: 1, col: 0, .. })
        ));
    }

    #[test]
    fn parses_space_and_comma_rows() {
        let p = Path::new("m.txt");
        let a = EmbeddingMatrix::<f64>::parse("a", "2 3\n1 2 3\n4 5 6\n", p).unwrap();
        let b = EmbeddingMatrix::<f64>::parse("b", "# dump\n2 3\n1,2,3\n4, 5, 6\n", p).unwrap();
        assert_eq!(a.row(1), b.row(1));
        assert!(EmbeddingMatrix::<f64>::parse("c", "2 3\n1 2 3\n", p).is_err());
        assert!(EmbeddingMatrix::<f64>::parse("d", "2 3\n1 2\n4 5 6\n", p).is_err());
        let round = EmbeddingMatrix::<f64>::parse("a", &a.to_text(), p).unwrap();
        assert_eq!(round, a);
    }
}
