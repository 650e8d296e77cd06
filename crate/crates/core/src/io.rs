//! Plain-text vectors: one number per line, `#` comments and blank lines
//! ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_vector(text: &str, source: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.strip_suffix(',').unwrap_or(line).trim();
        let v: f64 = field.parse().map_err(|_| {
            Error::Data(format!(
                "{source}:{}: cannot parse {field:?} as a number",
                lineno + 1
            ))
        })?;
        if !v.is_finite() {
            return Err(Error::Data(format!(
                "{source}:{}: value {field:?} is not finite",
                lineno + 1
            )));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Data(format!("{source}: no values found")));
    }
    Ok(out)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    parse_vector(&text, &path.display().to_string())
}

/// Shortest round-trip representation of each value, one per line.
pub fn format_vector(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    for v in values {
        let _ = writeln!(s, "{v:?}");
    }
    s
}

pub fn write_vector(path: &Path, values: &[f64]) -> Result<()> {
    fs::write(path, format_vector(values))
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let v = vec![0.1, -5.0, 1e-300, 3.527_187_010_650_018, 0.0];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        write_vector(&p, &v).unwrap();
        assert_eq!(read_vector(&p).unwrap(), v);
    }

    #[test]
    fn comments_and_errors() {
        assert_eq!(
            parse_vector("# head\n1\n\n 2.5 \n3,\n", "x").unwrap(),
            vec![1.0, 2.5, 3.0]
        );
        let err = parse_vector("1\n2\nabc\n", "data.txt").unwrap_err();
        assert_eq!(
            err,
            Error::Data("data.txt:3: cannot parse \"abc\" as a number".into())
        );
        assert!(parse_vector("1\nNaN\n", "x").is_err());
        assert!(parse_vector("# nothing\n", "x").is_err());
        assert!(read_vector(Path::new("/definitely/not/here")).is_err());
    }
}
