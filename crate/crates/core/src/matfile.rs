//! Plain-text complex matrix files.
//!
//! The first line holds `rows cols`; the following lines hold the entries in
//! row-major order as whitespace-separated `re:im` pairs, one matrix row per
//! line. Values are written with 17 significant digits so reading back is
//! exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{IsacError, Result};
use crate::linalg::{CMatrix, C64};

pub fn format_matrix(m: &CMatrix) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(' ');
            }
            let z = m[(i, j)];
            let _ = write!(out, "{:.16e}:{:.16e}", z.re, z.im);
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<CMatrix> {
    let err = |line: usize, msg: String| IsacError::Parse { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| err(1, "missing `rows cols` header".into()))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(err(hline + 1, format!("expected `rows cols`, got `{header}`")));
    }
    let parse_dim = |s: &str| s.parse::<usize>().map_err(|e| err(hline + 1, format!("bad dimension `{s}`: {e}")));
    let rows = parse_dim(dims[0])?;
    let cols = parse_dim(dims[1])?;
    let mut values = Vec::with_capacity(rows * cols);
    let mut last_line = hline + 1;
    for (idx, line) in lines {
        last_line = idx + 1;
        for token in line.split_whitespace() {
            let (re, im) = token
                .split_once(':')
                .ok_or_else(|| err(idx + 1, format!("entry `{token}` is not `re:im`")))?;
            let re: f64 = re.parse().map_err(|e| err(idx + 1, format!("bad real part `{re}`: {e}")))?;
            let im: f64 = im.parse().map_err(|e| err(idx + 1, format!("bad imaginary part `{im}`: {e}")))?;
            values.push(C64::new(re, im));
        }
    }
    if values.len() != rows * cols {
        return Err(err(last_line, format!("expected {} entries, found {}", rows * cols, values.len())));
    }
    Ok(CMatrix::from_row_slice(rows, cols, &values))
}

pub fn write_matrix(path: &Path, m: &CMatrix) -> Result<()> {
    std::fs::write(path, format_matrix(m)).map_err(|source| IsacError::Io { path: path.to_path_buf(), source })
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    let text = std::fs::read_to_string(path).map_err(|source| IsacError::Io { path: path.to_path_buf(), source })?;
    parse_matrix(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = complex_gaussian(&mut rng, 4, 7) * C64::new(1e-3, 0.0) + complex_gaussian(&mut rng, 4, 7);
        let text = format_matrix(&m);
        assert_eq!(parse_matrix(&text, Path::new("mem")).unwrap(), m);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let m = CMatrix::from_row_slice(1, 2, &[C64::new(1.5, -2.0), C64::new(0.0, 1e-300)]);
        write_matrix(&path, &m).unwrap();
        assert_eq!(read_matrix(&path).unwrap(), m);
    }

    #[test]
    fn reports_line_of_bad_entry() {
        let text = "1 2\n1:0 oops\n";
        match parse_matrix(text, Path::new("x")) {
            Err(IsacError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_matrix("2 2\n1:0 1:0\n", Path::new("x")).is_err());
    }
}
