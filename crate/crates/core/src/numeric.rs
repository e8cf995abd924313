use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

pub type Rational = num_rational::BigRational;

/// Parses `"3"`, `"-3"`, `"1/2"` or `"0.25"` exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        let negative = int.trim_start().starts_with('-');
        let int_part: BigInt = match int.trim() {
            "" | "-" | "+" => BigInt::zero(),
            s => s.parse().ok()?,
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac_part: BigInt = frac.parse().ok()?;
        let magnitude = Rational::from_integer(int_part.abs()) + Rational::new(frac_part, scale);
        return Some(if negative { -magnitude } else { magnitude });
    }
    text.parse::<BigInt>().ok().map(Rational::from_integer)
}

/// Renders an exact rational: integers plainly, others as `a/b`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering with 6 significant digits. Display only.
pub fn format_decimal(r: &Rational) -> String {
    let x = to_f64(r);
    if x == 0.0 {
        return "0".to_string();
    }
    let digits = 6 - 1 - x.abs().log10().floor() as i32;
    let s = if digits > 0 {
        format!("{:.*}", digits as usize, x)
    } else {
        format!("{x:.0}")
    };
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub(crate) fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators: scale down both.
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
        let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
        n / d
    })
}

/// A nonnegative rational or infinity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Finite(Rational),
    Infinity,
}

impl Value {
    pub fn zero() -> Self {
        Value::Finite(Rational::zero())
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Value::Finite(r) => Some(r),
            Value::Infinity => None,
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Finite(a), Value::Finite(b)) => a.cmp(b),
            (Value::Finite(_), Value::Infinity) => Ordering::Less,
            (Value::Infinity, Value::Finite(_)) => Ordering::Greater,
            (Value::Infinity, Value::Infinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Finite(r) => f.write_str(&format_rational(r)),
            Value::Infinity => f.write_str("inf"),
        }
    }
}

/// Result of a (conditional) analysis.
///
/// Serialises as `{"kind": "exact", "value": "1/2", "decimal": "0.5"}`,
/// `{"kind": "interval", "lo": .., "hi": ..}` or `{"kind": "undefined"}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AnalysisValue {
    Exact(Rational),
    Interval { lo: Rational, hi: Rational },
    /// The quotient 0/0: no run passes all observations.
    Undefined,
}

impl Serialize for AnalysisValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        match self {
            AnalysisValue::Exact(r) => {
                m.serialize_entry("kind", "exact")?;
                m.serialize_entry("value", &format_rational(r))?;
                m.serialize_entry("decimal", &format_decimal(r))?;
            }
            AnalysisValue::Interval { lo, hi } => {
                m.serialize_entry("kind", "interval")?;
                m.serialize_entry("lo", &format_rational(lo))?;
                m.serialize_entry("hi", &format_rational(hi))?;
            }
            AnalysisValue::Undefined => m.serialize_entry("kind", "undefined")?,
        }
        m.end()
    }
}

impl AnalysisValue {
    pub fn exact_int(n: i64) -> Self {
        AnalysisValue::Exact(Rational::from_integer(n.into()))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        AnalysisValue::Exact(Rational::new(n.into(), d.into()))
    }

    /// `num / den`, with `x / 0` mapped to `Undefined`.
    pub fn quotient(num: &Rational, den: &Rational) -> Self {
        if den.is_zero() {
            AnalysisValue::Undefined
        } else {
            AnalysisValue::Exact(num / den)
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            AnalysisValue::Exact(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_undefined(&self) -> bool {
        matches!(self, AnalysisValue::Undefined)
    }

    /// Width of an interval; zero for exact values.
    pub fn width(&self) -> Option<Rational> {
        match self {
            AnalysisValue::Exact(_) => Some(Rational::zero()),
            AnalysisValue::Interval { lo, hi } => Some(hi - lo),
            AnalysisValue::Undefined => None,
        }
    }

    pub fn contains(&self, r: &Rational) -> bool {
        match self {
            AnalysisValue::Exact(v) => v == r,
            AnalysisValue::Interval { lo, hi } => lo <= r && r <= hi,
            AnalysisValue::Undefined => false,
        }
    }

    /// Total order used by demonic minimisation: `Undefined` sorts below every
    /// rational, intervals compare by their lower end.
    pub fn demonic_cmp(&self, other: &Self) -> Ordering {
        use AnalysisValue::*;
        let key = |v: &AnalysisValue| match v {
            Exact(r) => Some(r.clone()),
            Interval { lo, .. } => Some(lo.clone()),
            Undefined => None,
        };
        match (key(self), key(other)) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(a), Some(b)) => a.cmp(&b),
        }
    }

    /// Human-readable form, e.g. `135/13 (≈10.3846)`.
    pub fn render(&self) -> String {
        match self {
            AnalysisValue::Exact(r) if r.is_integer() => format_rational(r),
            AnalysisValue::Exact(r) => {
                format!("{} (≈{})", format_rational(r), format_decimal(r))
            }
            AnalysisValue::Interval { lo, hi } => format!(
                "[{}, {}] (≈[{}, {}])",
                format_rational(lo),
                format_rational(hi),
                format_decimal(lo),
                format_decimal(hi)
            ),
            AnalysisValue::Undefined => "Undefined".to_string(),
        }
    }

    pub fn is_probability(&self) -> bool {
        match self {
            AnalysisValue::Exact(r) => !r.is_negative() && *r <= Rational::one(),
            AnalysisValue::Interval { lo, .. } => *lo <= Rational::one(),
            AnalysisValue::Undefined => true,
        }
    }
}

impl fmt::Display for AnalysisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisValue::Exact(r) => f.write_str(&format_rational(r)),
            AnalysisValue::Interval { lo, hi } => {
                write!(f, "[{}, {}]", format_rational(lo), format_rational(hi))
            }
            AnalysisValue::Undefined => f.write_str("Undefined"),
        }
    }
}
