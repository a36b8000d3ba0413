//! JSON file formats for crystals, self-dual crystals and families.
//!
//! A scalar literal is an integer, a decimal string, or (for `a > 1`) an
//! array of those giving coordinates in the basis `1, x, ..., x^{a-1}` of
//! `W[x] / (f)`. Integers are read modulo `p^N`; negative values are allowed.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::crystal::FCrystal;
use crate::error::{Error, Result};
use crate::family::CrystalFamily;
use crate::matlat::Mat;
use crate::polygon::{format_rational, parse_rational, Rational};
use crate::selfdual::{FormKind, SelfDualCrystal};
use crate::witt::{Ring, RingParams, Witt};

/// Precision used when a file omits `N`.
pub const DEFAULT_PRECISION: u32 = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalFile {
    pub p: u64,
    pub a: usize,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<i64>>,
    pub n: usize,
    pub matrix: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfDualFile {
    pub p: u64,
    pub a: usize,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<i64>>,
    pub n: usize,
    pub matrix: Vec<Vec<Value>>,
    pub form: Vec<Vec<Value>>,
    pub c: Value,
    pub kind: FormKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyShared {
    pub p: u64,
    pub a: usize,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<i64>>,
    pub n: usize,
    pub kind: FormKind,
    pub breakpoint: (usize, Value),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberEntry {
    pub matrix: Vec<Vec<Value>>,
    pub form: Vec<Vec<Value>>,
    pub c: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub shared: FamilyShared,
    pub fibers: Vec<FiberEntry>,
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn ring_from(
    p: u64,
    a: usize,
    precision: Option<u32>,
    modulus: &Option<Vec<i64>>,
    default: u32,
) -> Result<Ring> {
    let precision = precision.unwrap_or(default);
    match modulus {
        Some(m) => {
            let m: Vec<i128> = m.iter().map(|&c| c as i128).collect();
            RingParams::with_modulus(p, a, precision, &m)
        }
        None => RingParams::new(p, a, precision),
    }
}

fn parse_int(v: &Value) -> Result<i128> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(i128::from)
            .or_else(|| n.as_u64().map(i128::from))
            .ok_or_else(|| Error::Parse(format!("not an integer: {n}"))),
        Value::String(s) => s
            .trim()
            .parse::<i128>()
            .map_err(|_| Error::Parse(format!("not a decimal integer: {s:?}"))),
        other => Err(Error::Parse(format!("not an integer literal: {other}"))),
    }
}

pub fn parse_scalar(ring: &Ring, v: &Value) -> Result<Witt> {
    match v {
        Value::Array(items) => {
            let coeffs = items.iter().map(parse_int).collect::<Result<Vec<_>>>()?;
            Witt::from_coeffs(ring, &coeffs)
        }
        _ => Ok(Witt::from_int(ring, parse_int(v)?)),
    }
}

pub fn parse_matrix(ring: &Ring, n: usize, rows: &[Vec<Value>]) -> Result<Mat> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("matrix must be {n}x{n}")));
    }
    let parsed = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| parse_scalar(ring, v))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Mat::from_rows(ring, parsed)
}

fn residue_value(c: u128) -> Value {
    match u64::try_from(c) {
        Ok(c) => Value::from(c),
        Err(_) => Value::from(c.to_string()),
    }
}

/// Canonical literal: residues in `[0, p^N)`, a bare number when `a = 1`.
pub fn scalar_value(w: &Witt) -> Value {
    let coeffs = w.coeffs();
    if coeffs.len() == 1 {
        residue_value(coeffs[0])
    } else {
        Value::Array(coeffs.iter().map(|&c| residue_value(c)).collect())
    }
}

pub fn matrix_value(m: &Mat) -> Vec<Vec<Value>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| scalar_value(m.get(i, j))).collect())
        .collect()
}

fn modulus_value(ring: &Ring) -> Vec<i64> {
    ring.modulus().iter().map(|&c| c as i64).collect()
}

pub fn parse_rational_value(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s),
        _ => Ok(Rational::from_integer(parse_int(v)? as i64)),
    }
}

pub fn read_crystal(text: &str, default_precision: u32) -> Result<FCrystal> {
    let f: CrystalFile = parse_json(text)?;
    let ring = ring_from(f.p, f.a, f.precision, &f.modulus, default_precision)?;
    FCrystal::new(parse_matrix(&ring, f.n, &f.matrix)?)
}

pub fn read_self_dual(text: &str, default_precision: u32) -> Result<SelfDualCrystal> {
    let f: SelfDualFile = parse_json(text)?;
    let ring = ring_from(f.p, f.a, f.precision, &f.modulus, default_precision)?;
    SelfDualCrystal::new(
        FCrystal::new(parse_matrix(&ring, f.n, &f.matrix)?)?,
        parse_matrix(&ring, f.n, &f.form)?,
        parse_scalar(&ring, &f.c)?,
        f.kind,
    )
}

/// Reads either schema; the form is present exactly for self-dual files.
pub fn read_any(text: &str, default_precision: u32) -> Result<(FCrystal, Option<SelfDualCrystal>)> {
    let v: Value = parse_json(text)?;
    if v.get("form").is_some() {
        let s = read_self_dual(text, default_precision)?;
        Ok((s.base().clone(), Some(s)))
    } else {
        Ok((read_crystal(text, default_precision)?, None))
    }
}

pub fn read_family(text: &str, default_precision: u32) -> Result<CrystalFamily> {
    let f: FamilyFile = parse_json(text)?;
    let sh = &f.shared;
    let ring = ring_from(sh.p, sh.a, sh.precision, &sh.modulus, default_precision)?;
    let fibers = f
        .fibers
        .iter()
        .map(|e| {
            SelfDualCrystal::new(
                FCrystal::new(parse_matrix(&ring, sh.n, &e.matrix)?)?,
                parse_matrix(&ring, sh.n, &e.form)?,
                parse_scalar(&ring, &e.c)?,
                sh.kind,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    CrystalFamily::new(
        fibers,
        sh.breakpoint.0,
        parse_rational_value(&sh.breakpoint.1)?,
    )
}

pub fn crystal_file(c: &FCrystal) -> CrystalFile {
    let ring = c.ring();
    CrystalFile {
        p: ring.p(),
        a: ring.degree(),
        precision: Some(ring.precision()),
        modulus: Some(modulus_value(ring)),
        n: c.rank(),
        matrix: matrix_value(c.matrix()),
    }
}

pub fn self_dual_file(s: &SelfDualCrystal) -> SelfDualFile {
    let ring = s.ring();
    SelfDualFile {
        p: ring.p(),
        a: ring.degree(),
        precision: Some(ring.precision()),
        modulus: Some(modulus_value(ring)),
        n: s.rank(),
        matrix: matrix_value(s.matrix()),
        form: matrix_value(s.form()),
        c: scalar_value(s.c()),
        kind: s.kind(),
    }
}

pub fn family_file(family: &CrystalFamily) -> FamilyFile {
    let first = &family.fibers()[0];
    let ring = first.ring();
    let (a, b) = family.break_point();
    FamilyFile {
        shared: FamilyShared {
            p: ring.p(),
            a: ring.degree(),
            precision: Some(ring.precision()),
            modulus: Some(modulus_value(ring)),
            n: first.rank(),
            kind: first.kind(),
            breakpoint: (a, Value::from(format_rational(&b))),
        },
        fibers: family
            .fibers()
            .iter()
            .map(|s| FiberEntry {
                matrix: matrix_value(s.matrix()),
                form: matrix_value(s.form()),
                c: scalar_value(s.c()),
            })
            .collect(),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_literals() {
        let r = RingParams::new(3, 2, 4).unwrap();
        let w = parse_scalar(&r, &serde_json::json!([1, "-1"])).unwrap();
        assert_eq!(w.coeffs(), &[1, 80]);
        assert_eq!(scalar_value(&w), serde_json::json!([1, 80]));
        assert!(parse_scalar(&r, &serde_json::json!([1, 2, 3])).is_err());
        assert!(parse_scalar(&r, &serde_json::json!(1.5)).is_err());
        let big = RingParams::new(2, 1, 100).unwrap();
        let w = parse_scalar(&big, &serde_json::json!("-1")).unwrap();
        assert_eq!(
            scalar_value(&w),
            serde_json::json!(((1u128 << 100) - 1).to_string())
        );
    }

    #[test]
    fn crystal_round_trip() {
        let text = r#"{"p": 3, "a": 1, "N": 10, "n": 2, "matrix": [[3, 1], [0, 3]]}"#;
        let c = read_crystal(text, 32).unwrap();
        let again = read_crystal(&to_pretty(&crystal_file(&c)), 32).unwrap();
        assert_eq!(c, again);
        assert!(read_crystal(r#"{"p": 3, "a": 1, "n": 2, "matrix": [[1]]}"#, 8).is_err());
    }
}
