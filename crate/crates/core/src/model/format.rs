//! `MG1v1` model files and plain matrix files.
//!
//! ```text
//! MG1 <m> <d>
//! # optional comment lines
//! <m lines of m numbers for A_{-1}>
//! ...
//! <m lines of m numbers for A_{d-1}>
//! ```
//!
//! Numbers are written with 17 significant digits, which round-trips binary64
//! exactly. Matrix files use the header `MAT <rows> <cols>` and the same layout.

use std::io::{BufRead, Write};

use super::MatrixPolynomial;
use crate::error::{Error, Result};
use crate::numkernel::Matrix;

pub const MODEL_MAGIC: &str = "MG1";
const MATRIX_MAGIC: &str = "MAT";

fn write_rows<W: Write>(w: &mut W, a: &Matrix) -> Result<()> {
    for i in 0..a.rows() {
        let line: Vec<String> = a.row(i).iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Writes a model; each entry of `comments` becomes a `# ` line after the header.
pub fn write_model<W: Write>(w: &mut W, p: &MatrixPolynomial, comments: &[String]) -> Result<()> {
    writeln!(w, "{MODEL_MAGIC} {} {}", p.block_size(), p.degree())?;
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    for (k, a) in p.coeffs().iter().enumerate() {
        writeln!(w, "# A_{}", k as isize - 1)?;
        write_rows(w, a)?;
    }
    Ok(())
}

pub fn write_matrix<W: Write>(w: &mut W, a: &Matrix) -> Result<()> {
    writeln!(w, "{MATRIX_MAGIC} {} {}", a.rows(), a.cols())?;
    write_rows(w, a)
}

/// Non-comment, non-blank lines with their 1-based line numbers.
struct DataLines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> DataLines<R> {
    fn new(r: R) -> Self {
        DataLines { inner: r.lines(), line: 0 }
    }

    fn next_line(&mut self) -> Result<Option<(usize, String)>> {
        for l in self.inner.by_ref() {
            self.line += 1;
            let l = l?;
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Ok(Some((self.line, t.to_string())));
        }
        Ok(None)
    }

    fn header(&mut self, magic: &str) -> Result<(usize, usize)> {
        let (line, text) = self.next_line()?.ok_or(Error::Parse { line: self.line, msg: "empty input".into() })?;
        let parts: Vec<&str> = text.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != magic {
            return Err(Error::Parse { line, msg: format!("expected `{magic} <a> <b>` header") });
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse { line, msg: format!("bad integer `{s}`") });
        Ok((parse(parts[1])?, parse(parts[2])?))
    }

    fn block(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (line, text) =
                self.next_line()?.ok_or(Error::Parse { line: self.line, msg: "unexpected end of input".into() })?;
            let before = data.len();
            for tok in text.split_whitespace() {
                let v = tok.parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("bad number `{tok}`") })?;
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {cols} numbers, found {}", data.len() - before),
                });
            }
        }
        Matrix::from_vec(rows, cols, data)
    }

    fn expect_end(&mut self) -> Result<()> {
        match self.next_line()? {
            None => Ok(()),
            Some((line, _)) => Err(Error::Parse { line, msg: "trailing data".into() }),
        }
    }
}

pub fn read_model<R: BufRead>(r: R) -> Result<MatrixPolynomial> {
    let mut lines = DataLines::new(r);
    let (m, d) = lines.header(MODEL_MAGIC)?;
    if m == 0 {
        return Err(Error::Parse { line: 1, msg: "block size must be positive".into() });
    }
    let coeffs = (0..=d).map(|_| lines.block(m, m)).collect::<Result<Vec<_>>>()?;
    lines.expect_end()?;
    MatrixPolynomial::new(coeffs)
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<Matrix> {
    let mut lines = DataLines::new(r);
    let (rows, cols) = lines.header(MATRIX_MAGIC)?;
    if rows == 0 || cols == 0 {
        return Err(Error::Parse { line: 1, msg: "dimensions must be positive".into() });
    }
    let a = lines.block(rows, cols)?;
    lines.expect_end()?;
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let text = "# leading comment\nMG1 1 2\n\n0.5\n# mid\n0.25\n0.25\n";
        let p = read_model(text.as_bytes()).unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.coeffs()[1][(0, 0)], 0.25);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(read_model("MG2 1 0\n1\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_model("MG1 2 0\n1 0\n".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(read_model("MG1 1 0\n1 2\n".as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read_model("MG1 1 0\n1\n2\n".as_bytes()), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(read_model("MG1 1 0\nx\n".as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn matrix_file_round_trip() {
        let a = Matrix::from_rows(&[vec![0.1, 1.0 / 3.0], vec![-2.5e-300, 7.0]]).unwrap();
        let mut buf = Vec::new();
        write_matrix(&mut buf, &a).unwrap();
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), a);
    }
}
