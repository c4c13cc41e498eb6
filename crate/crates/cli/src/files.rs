//! JSON problem and measure files.
//!
//! Every number read from a file is converted to an exact rational: JSON
//! numbers keep their decimal text (so `0.1` is `1/10`), and strings may hold
//! `"p/q"`, an integer, or a decimal.

use std::str::FromStr;

use cubic_moment::linalg::to_f64;
use cubic_moment::{AtomicMeasure, Monomial, MomentError, MomentSequence3, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde_json::{Map, Number, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON at line {line}, column {column}: {msg}")]
    Json { line: usize, column: usize, msg: String },
    #[error("{key}: {msg}")]
    Field { key: String, msg: String },
    #[error("β00 > 0 required (got {0})")]
    NonpositiveMass(String),
    #[error("{0}")]
    Measure(MomentError),
}

fn field(key: impl Into<String>, msg: impl Into<String>) -> InputError {
    InputError::Field {
        key: key.into(),
        msg: msg.into(),
    }
}

/// Parses decimal text such as `-12`, `3.25`, `1e-3` or `-4.5E+2` exactly.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(k) => (&text[..k], text[k + 1..].parse::<i64>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all = format!("{int_part}{frac_part}");
    let n = BigInt::from_str(if all.is_empty() { "0" } else { &all }).ok()?;
    let shift = exponent - frac_part.len() as i64;
    if shift.unsigned_abs() > 4096 {
        return None;
    }
    let ten = BigInt::from(10);
    let p = num_traits::pow(ten, shift.unsigned_abs() as usize);
    let mut r = if shift >= 0 {
        Rational::from_integer(n * p)
    } else {
        Rational::new(n, p)
    };
    if negative {
        r = -r;
    }
    Some(r)
}

/// Parses `"p/q"` (with `q > 0`), an integer or a decimal.
pub fn parse_rational_str(text: &str) -> Result<Rational, String> {
    match text.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| format!("bad numerator in {text:?}"))?;
            let q = BigInt::from_str(q.trim()).map_err(|_| format!("bad denominator in {text:?}"))?;
            if !q.is_positive() {
                return Err(format!("denominator must be positive in {text:?}"));
            }
            Ok(Rational::new(p, q))
        }
        None => parse_decimal(text).ok_or_else(|| format!("not a number: {text:?}")),
    }
}

pub fn parse_number(key: &str, v: &Value) -> Result<Rational, InputError> {
    match v {
        Value::Number(n) => parse_decimal(&n.to_string()).ok_or_else(|| field(key, format!("unsupported number {n}"))),
        Value::String(s) => parse_rational_str(s).map_err(|m| field(key, m)),
        other => Err(field(key, format!("expected a number or \"p/q\" string, got {other}"))),
    }
}

pub fn read_json(path: &str) -> Result<Value, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.to_string(),
        source,
    })?;
    parse_json(&text)
}

pub fn parse_json(text: &str) -> Result<Value, InputError> {
    serde_json::from_str(text).map_err(|e| InputError::Json {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

fn object<'a>(v: &'a Value, key: &str) -> Result<&'a Map<String, Value>, InputError> {
    v.as_object().ok_or_else(|| field(key, "expected a JSON object"))
}

pub fn moment_key(m: Monomial) -> String {
    format!("{},{}", m.x, m.y)
}

fn parse_key(k: &str) -> Option<Monomial> {
    let (i, j) = k.split_once(',')?;
    let m = Monomial::new(i.trim().parse().ok()?, j.trim().parse().ok()?);
    (m.degree() <= 3).then_some(m)
}

#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub beta: MomentSequence3,
    pub tol: Option<f64>,
}

impl ProblemFile {
    pub fn from_value(v: &Value) -> Result<Self, InputError> {
        let root = object(v, "<root>")?;
        for k in root.keys() {
            if k != "beta" && k != "tol" {
                return Err(field(k.as_str(), "unknown key"));
            }
        }
        let beta_obj = object(root.get("beta").ok_or_else(|| field("beta", "missing"))?, "beta")?;
        let mut values: Vec<Option<Rational>> = vec![None; 10];
        let order = Monomial::up_to(3);
        for (k, v) in beta_obj {
            let key = format!("beta.{k}");
            let m = parse_key(k).ok_or_else(|| field(&key, "expected \"i,j\" with i + j <= 3"))?;
            let pos = order.iter().position(|&o| o == m).expect("cubic monomial");
            if values[pos].is_some() {
                return Err(field(&key, "duplicate moment"));
            }
            values[pos] = Some(parse_number(&key, v)?);
        }
        let mut beta = Vec::with_capacity(10);
        for (m, v) in order.iter().zip(values) {
            beta.push(v.ok_or_else(|| field(format!("beta.{}", moment_key(*m)), "missing moment"))?);
        }
        let beta: [Rational; 10] = beta.try_into().expect("ten moments");
        if !beta[0].is_positive() {
            return Err(InputError::NonpositiveMass(beta[0].to_string()));
        }
        let beta = MomentSequence3::new(beta).map_err(|e| field("beta", e.to_string()))?;
        let tol = match root.get("tol") {
            None => None,
            Some(t) => Some(parse_tol("tol", t)?),
        };
        Ok(ProblemFile { beta, tol })
    }

    pub fn to_value(s: &MomentSequence3) -> Value {
        let mut beta = Map::new();
        for (m, v) in s.iter() {
            beta.insert(moment_key(m), Value::String(exact_string(v)));
        }
        let mut root = Map::new();
        root.insert("beta".into(), Value::Object(beta));
        Value::Object(root)
    }
}

pub fn parse_tol(key: &str, v: &Value) -> Result<f64, InputError> {
    let t = to_f64(&parse_number(key, v)?);
    if t.is_finite() && t >= 0.0 {
        Ok(t)
    } else {
        Err(field(key, "tolerance must be a finite non-negative number"))
    }
}

#[derive(Debug, Clone)]
pub struct MeasureFile {
    pub measure: AtomicMeasure<Rational>,
}

impl MeasureFile {
    pub fn from_value(v: &Value) -> Result<Self, InputError> {
        let root = object(v, "<root>")?;
        let atoms_v = root
            .get("atoms")
            .and_then(Value::as_array)
            .ok_or_else(|| field("atoms", "expected an array of [x, y] pairs"))?;
        let weights_v = root
            .get("weights")
            .and_then(Value::as_array)
            .ok_or_else(|| field("weights", "expected an array of positive numbers"))?;
        if atoms_v.len() != weights_v.len() {
            return Err(field(
                "weights",
                format!("{} weights for {} atoms", weights_v.len(), atoms_v.len()),
            ));
        }
        let mut atoms = Vec::with_capacity(atoms_v.len());
        for (k, a) in atoms_v.iter().enumerate() {
            let pair = a
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| field(format!("atoms[{k}]"), "expected [x, y]"))?;
            atoms.push((
                parse_number(&format!("atoms[{k}][0]"), &pair[0])?,
                parse_number(&format!("atoms[{k}][1]"), &pair[1])?,
            ));
        }
        let mut weights = Vec::with_capacity(weights_v.len());
        for (k, w) in weights_v.iter().enumerate() {
            let w = parse_number(&format!("weights[{k}]"), w)?;
            if !w.is_positive() {
                return Err(field(format!("weights[{k}]"), "weight must be positive"));
            }
            weights.push(w);
        }
        let measure = AtomicMeasure::new(atoms, weights).map_err(InputError::Measure)?;
        Ok(MeasureFile { measure })
    }
}

/// `"p"` or `"p/q"`.
pub fn exact_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Shortest-form rendering of `x` with 17 significant digits: plain
/// notation for decimal exponents in `[-5, 16]`, scientific otherwise.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let sign = if negative { "-" } else { "" };
    if (-5..=16).contains(&exp) {
        let body = if exp >= 0 {
            let e = exp as usize;
            if digits.len() <= e + 1 {
                format!("{digits}{}", "0".repeat(e + 1 - digits.len()))
            } else {
                format!("{}.{}", &digits[..=e], &digits[e + 1..])
            }
        } else {
            format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
        };
        format!("{sign}{body}")
    } else {
        let (head, tail) = digits.split_at(1);
        if tail.is_empty() {
            format!("{sign}{head}e{exp}")
        } else {
            format!("{sign}{head}.{tail}e{exp}")
        }
    }
}

/// JSON number with 17 significant digits; non-finite values become null.
pub fn float_value(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(Number::from_str(&format_f64(x)).expect("valid JSON number"))
}

pub fn rational_value(r: &Rational, exact: bool) -> Value {
    if exact {
        Value::String(exact_string(r))
    } else {
        float_value(to_f64(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cubic_moment::linalg::{int, rat};

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_decimal("0.1"), Some(rat(1, 10)));
        assert_eq!(parse_decimal("-12"), Some(int(-12)));
        assert_eq!(parse_decimal("1e-3"), Some(rat(1, 1000)));
        assert_eq!(parse_decimal("-4.5E+2"), Some(int(-450)));
        assert_eq!(parse_decimal(".5"), Some(rat(1, 2)));
        assert_eq!(parse_decimal("1.2.3"), None);
        assert_eq!(parse_decimal(""), None);
        assert_eq!(parse_decimal("abc"), None);
    }

    #[test]
    fn rational_strings() {
        assert_eq!(parse_rational_str("-3/4"), Ok(rat(-3, 4)));
        assert_eq!(parse_rational_str("6/8"), Ok(rat(3, 4)));
        assert_eq!(parse_rational_str("7"), Ok(int(7)));
        assert!(parse_rational_str("1/0").is_err());
        assert!(parse_rational_str("1/-2").is_err());
        assert!(parse_rational_str("x/2").is_err());
    }

    #[test]
    fn exact_strings_round_trip() {
        for r in [rat(-3, 4), int(5), rat(930018189, 7086244), int(0)] {
            assert_eq!(parse_rational_str(&exact_string(&r)), Ok(r));
        }
    }

    #[test]
    fn float_formatting() {
        assert_eq!(format_f64(3.0), "3");
        assert_eq!(format_f64(-1.5), "-1.5");
        assert_eq!(format_f64(0.1), "0.10000000000000001");
        assert_eq!(format_f64(1.0 / 6.0), "0.16666666666666666");
        assert_eq!(format_f64(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_f64(2f64.powi(-20)), "9.5367431640625e-7");
        assert_eq!(format_f64(2f64.powi(-10)), "0.0009765625");
        assert_eq!(format_f64(1.25e20), "1.25e20");
        assert_eq!(format_f64(123456.0), "123456");
        assert_eq!(format_f64(0.0), "0");
        for x in [0.1, 1.0 / 3.0, -2.5e-9, 6.02e23, 13f64.sqrt()] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    fn problem(text: &str) -> Result<ProblemFile, InputError> {
        ProblemFile::from_value(&parse_json(text).unwrap())
    }

    #[test]
    fn problem_file_schema() {
        let ok = problem(
            r#"{"beta": {"0,0": 5, "1,0": 1, "0,1": 2, "2,0": 5, "1,1": -2, "0,2": 2,
                "3,0": 1, "2,1": 2, "1,2": "-2", "0,3": "4/2"}, "tol": 1e-6}"#,
        )
        .unwrap();
        assert_eq!(ok.beta.get(0, 3), &int(2));
        assert_eq!(ok.tol, Some(1e-6));

        let missing = problem(r#"{"beta": {"0,0": 1}}"#).unwrap_err().to_string();
        assert!(missing.contains("beta.1,0"), "{missing}");

        let zero = problem(
            r#"{"beta": {"0,0": 0, "1,0": 0, "0,1": 0, "2,0": 0, "1,1": 0, "0,2": 0,
                "3,0": 0, "2,1": 0, "1,2": 0, "0,3": 0}}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(zero.contains("β00 > 0 required"), "{zero}");

        let bad_key = problem(r#"{"beta": {"4,0": 1}}"#).unwrap_err().to_string();
        assert!(bad_key.contains("beta.4,0"), "{bad_key}");
        assert!(problem(r#"{"beta": {}, "extra": 1}"#).is_err());
    }

    #[test]
    fn measure_file_schema() {
        let m = MeasureFile::from_value(&parse_json(r#"{"atoms": [[1, 0], ["-1", "1"]], "weights": [3, 2]}"#).unwrap())
            .unwrap();
        assert_eq!(m.measure.len(), 2);
        for bad in [
            r#"{"atoms": [[1, 0]], "weights": [3, 2]}"#,
            r#"{"atoms": [[1, 0]], "weights": [0]}"#,
            r#"{"atoms": [[1]], "weights": [1]}"#,
            r#"{"atoms": [], "weights": []}"#,
        ] {
            assert!(MeasureFile::from_value(&parse_json(bad).unwrap()).is_err(), "{bad}");
        }
    }

    #[test]
    fn json_errors_carry_position() {
        match parse_json("{\n  \"beta\": [1,\n}") {
            Err(InputError::Json { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
