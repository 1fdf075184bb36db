//! Text format for coefficient files.
//!
//! ```text
//! #meta level=11 weight=2 count=3 normalized=true
//! 1,1.0000000000000000
//! 2,-1.4142135623730951
//! 3,-0.57735026918962573
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Eigenform, FormSource};
use crate::error::{Error, Result};

/// Reads and validates a coefficient file. The form id is the file stem.
pub fn load_coefficients(path: impl AsRef<Path>) -> Result<Eigenform> {
    let path = path.as_ref();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "form".to_string());
    let file = File::open(path)?;
    parse_coefficients(BufReader::new(file), id)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

struct Meta {
    level: u64,
    weight: u32,
    count: usize,
}

fn parse_meta(line: &str) -> Result<Meta> {
    let rest = line
        .strip_prefix("#meta")
        .ok_or_else(|| parse_err(1, "first line must start with `#meta`"))?;
    let (mut level, mut weight, mut count, mut normalized) = (None, None, None, None);
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("malformed meta field `{field}`")))?;
        let bad = |_| parse_err(1, format!("bad value in `{field}`"));
        match key {
            "level" => level = Some(value.parse::<u64>().map_err(bad)?),
            "weight" => weight = Some(value.parse::<u32>().map_err(bad)?),
            "count" => count = Some(value.parse::<usize>().map_err(bad)?),
            "normalized" => normalized = Some(value.to_string()),
            _ => return Err(parse_err(1, format!("unknown meta key `{key}`"))),
        }
    }
    if normalized.as_deref() != Some("true") {
        return Err(parse_err(1, "only normalized=true files are supported"));
    }
    Ok(Meta {
        level: level.ok_or_else(|| parse_err(1, "missing level"))?,
        weight: weight.ok_or_else(|| parse_err(1, "missing weight"))?,
        count: count.ok_or_else(|| parse_err(1, "missing count"))?,
    })
}

/// Parses the coefficient format from any reader.
pub fn parse_coefficients(reader: impl BufRead, id: impl Into<String>) -> Result<Eigenform> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty file"))??;
    let meta = parse_meta(header.trim())?;
    let mut coeffs = Vec::with_capacity(meta.count);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (n, v) = line
            .split_once(',')
            .ok_or_else(|| parse_err(lineno, "expected `<n>,<value>`"))?;
        let n: usize = n.trim().parse().map_err(|_| parse_err(lineno, format!("bad index `{n}`")))?;
        let v: f64 = v.trim().parse().map_err(|_| parse_err(lineno, format!("bad value `{v}`")))?;
        if n != coeffs.len() + 1 {
            return Err(parse_err(lineno, format!("expected n = {}, found {n}", coeffs.len() + 1)));
        }
        coeffs.push(v);
    }
    if coeffs.len() != meta.count {
        return Err(parse_err(
            coeffs.len() + 2,
            format!("header announces {} coefficients, file has {}", meta.count, coeffs.len()),
        ));
    }
    Eigenform::new(id, meta.level, meta.weight, coeffs, FormSource::File)
}

/// Plain decimal with 17 significant digits, enough to round-trip any `f64`.
pub fn format_decimal(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.16}");
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (16 - exp).clamp(1, 340) as usize;
    format!("{x:.decimals$}")
}

/// Writes `f` in the coefficient format.
pub fn write_coefficients(f: &Eigenform, writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(
        w,
        "#meta level={} weight={} count={} normalized=true",
        f.level(),
        f.weight(),
        f.n_max()
    )?;
    for (i, &v) in f.coeffs().iter().enumerate() {
        writeln!(w, "{},{}", i + 1, format_decimal(v))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::builtin_form;

    fn roundtrip(text: &str) -> Result<Eigenform> {
        parse_coefficients(text.as_bytes(), "t")
    }

    #[test]
    fn write_then_read() {
        for id in ["delta12", "level11_weight2", "level1_weight26"] {
            let f = builtin_form(id, 500).unwrap();
            let mut buf = Vec::new();
            write_coefficients(&f, &mut buf).unwrap();
            let g = parse_coefficients(buf.as_slice(), id).unwrap();
            assert_eq!(f.coeffs(), g.coeffs());
            assert_eq!(g.source(), FormSource::File);
        }
    }

    #[test]
    fn decimal_digits() {
        for x in [0.5, -std::f64::consts::SQRT_2, 3.1e-7, 123.456, 0.0] {
            let s = format_decimal(x);
            assert!(!s.contains('e'));
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s.trim_start_matches('-').replace('.', "").trim_start_matches('0').len();
            assert!(x == 0.0 || digits >= 12, "{s}");
        }
    }

    #[test]
    fn rejections() {
        let bad_one = "#meta level=1 weight=12 count=2 normalized=true\n1,0.9\n2,0.1\n";
        match roundtrip(bad_one) {
            Err(Error::Invariant { n: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        let deligne = "#meta level=1 weight=12 count=2 normalized=true\n1,1.0\n2,2.5\n";
        match roundtrip(deligne) {
            Err(Error::Invariant { invariant: "deligne", n: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        let gap = "#meta level=1 weight=12 count=2 normalized=true\n1,1.0\n3,0.1\n";
        assert!(matches!(roundtrip(gap), Err(Error::Parse { line: 3, .. })));
        let short = "#meta level=1 weight=12 count=3 normalized=true\n1,1.0\n2,0.1\n";
        assert!(matches!(roundtrip(short), Err(Error::Parse { .. })));
        let hecke = "#meta level=1 weight=12 count=4 normalized=true\n1,1\n2,0.5\n3,0.1\n4,0.9\n";
        assert!(matches!(roundtrip(hecke), Err(Error::Invariant { invariant: "hecke", n: 4, .. })));
        assert!(matches!(roundtrip("level=1"), Err(Error::Parse { line: 1, .. })));
    }
}
