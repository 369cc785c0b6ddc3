use std::fs;
use std::path::Path;

use super::SymmetricOperator;
use crate::error::{CrsError, Result};

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CrsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> CrsError {
    CrsError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Loads a matrix, choosing Matrix Market when the file starts with the
/// `%%MatrixMarket` banner and the plain dense text format otherwise.
pub fn read_matrix(path: &Path) -> Result<SymmetricOperator> {
    let text = read_to_string(path)?;
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market(path, &text)
    } else {
        parse_dense_text(path, &text)
    }
}

/// Reads a real symmetric (or numerically symmetric general) matrix in
/// Matrix Market coordinate format into CSR storage.
pub fn read_matrix_market(path: &Path) -> Result<SymmetricOperator> {
    let text = read_to_string(path)?;
    parse_matrix_market(path, &text)
}

fn parse_matrix_market(path: &Path, text: &str) -> Result<SymmetricOperator> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(path, 1, "expected '%%MatrixMarket matrix ...' banner"));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(path, 1, "only the coordinate format is supported"));
    }
    let pattern = match tokens[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        other => return Err(parse_err(path, 1, format!("unsupported field '{other}'"))),
    };
    let symmetric = match tokens[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(parse_err(path, 1, format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, raw) in lines {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(path, lineno, "expected 'rows cols nnz'"));
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|e| parse_err(path, lineno, e.to_string()))
                };
                let (m, n, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                if m != n {
                    return Err(parse_err(path, lineno, format!("matrix is {m}x{n}, not square")));
                }
                size = Some((n, nnz));
                triplets.reserve(if symmetric { 2 * nnz } else { nnz });
            }
            Some((n, _)) => {
                let want = if pattern { 2 } else { 3 };
                if fields.len() < want {
                    return Err(parse_err(path, lineno, "truncated entry"));
                }
                let index = |s: &str| -> Result<usize> {
                    let v: usize = s
                        .parse()
                        .map_err(|e: std::num::ParseIntError| parse_err(path, lineno, e.to_string()))?;
                    if v == 0 || v > n {
                        return Err(parse_err(path, lineno, format!("index {v} out of range 1..={n}")));
                    }
                    Ok(v - 1)
                };
                let (i, j) = (index(fields[0])?, index(fields[1])?);
                let v = if pattern {
                    1.0
                } else {
                    fields[2]
                        .parse::<f64>()
                        .map_err(|e| parse_err(path, lineno, e.to_string()))?
                };
                triplets.push((i, j, v));
                if symmetric && i != j {
                    triplets.push((j, i, v));
                }
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    let stored = if symmetric {
        triplets.iter().filter(|(i, j, _)| i >= j).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(parse_err(
            path,
            1,
            format!("size line announces {nnz} entries, found {stored}"),
        ));
    }
    SymmetricOperator::from_triplets(n, &triplets)
}

fn split_numbers(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
}

fn is_comment(line: &str) -> bool {
    line.starts_with('#') || line.starts_with('%')
}

/// Reads a dense square matrix: one row per line, entries separated by
/// commas or whitespace. Lines starting with `#` or `%` are ignored.
pub fn read_dense_text(path: &Path) -> Result<SymmetricOperator> {
    let text = read_to_string(path)?;
    parse_dense_text(path, &text)
}

fn parse_dense_text(path: &Path, text: &str) -> Result<SymmetricOperator> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || is_comment(line) {
            continue;
        }
        let row = split_numbers(line)
            .map(|t| t.parse::<f64>().map_err(|e| parse_err(path, idx + 1, e.to_string())))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(parse_err(
            path,
            i + 1,
            format!("row {} has {} entries, expected {n}", i + 1, r.len()),
        ));
    }
    SymmetricOperator::from_rows(&rows)
}

/// Reads a vector of reals separated by newlines, commas or whitespace.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || is_comment(line) {
            continue;
        }
        for t in split_numbers(line) {
            out.push(
                t.parse::<f64>()
                    .map_err(|e| parse_err(path, idx + 1, e.to_string()))?,
            );
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::LinearOperator;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        let mut f = fs::File::create(&p).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn reads_symmetric_coordinate_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "a.mtx",
            "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 4\n1 1 2.0\n2 1 -1.0\n2 2 2.0\n3 3 -1.5\n",
        );
        let a = read_matrix(&p).unwrap();
        assert_eq!(a.dim(), 3);
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.apply(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0, 1.0, -1.5]);
    }

    #[test]
    fn general_file_must_be_symmetric() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "g.mtx",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.0\n2 1 1.5\n",
        );
        assert!(matches!(
            read_matrix_market(&p).unwrap_err(),
            CrsError::NotSymmetric { .. }
        ));
        let p = write(
            &dir,
            "g2.mtx",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.0\n2 1 1.0\n",
        );
        assert_eq!(read_matrix_market(&p).unwrap().get(1, 0), 1.0);
    }

    #[test]
    fn rejects_bad_headers_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "x.mtx", "%%MatrixMarket matrix array real general\n2 2\n1\n0\n0\n1\n");
        assert!(matches!(read_matrix_market(&p).unwrap_err(), CrsError::Parse { .. }));
        let p = write(
            &dir,
            "y.mtx",
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1.0\n",
        );
        assert!(matches!(read_matrix_market(&p).unwrap_err(), CrsError::Parse { .. }));
        let p = write(
            &dir,
            "z.mtx",
            "%%MatrixMarket matrix coordinate real symmetric\n2 3 1\n1 1 1.0\n",
        );
        assert!(matches!(read_matrix_market(&p).unwrap_err(), CrsError::Parse { .. }));
    }

    #[test]
    fn reads_dense_csv_and_vectors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "# dense\n2, 1\n1, 2\n");
        let a = read_matrix(&p).unwrap();
        assert!(a.is_dense());
        assert_eq!(a.apply(&[1.0, 0.0]).unwrap(), vec![2.0, 1.0]);

        let p = write(&dir, "bad.csv", "1 2\n3\n");
        assert!(read_dense_text(&p).is_err());

        let p = write(&dir, "b.txt", "1.5\n-2\n# skip\n3e-1 4\n");
        assert_eq!(read_vector(&p).unwrap(), vec![1.5, -2.0, 0.3, 4.0]);
    }
}
