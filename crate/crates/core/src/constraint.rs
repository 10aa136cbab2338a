//! Input constraints: membership, seeded sampling, domain sizes and
//! canonical enumeration of finite domains.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rng::StableRng;
use crate::value::{Value, ValueType};

fn default_decimals() -> u32 {
    2
}

/// Constraint on a single parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Constraint {
    Int {
        lo: i64,
        hi: i64,
    },
    /// Doubles on a decimal grid: every value is a multiple of `10^-decimals`.
    Double {
        lo: f64,
        hi: f64,
        #[serde(default = "default_decimals")]
        decimals: u32,
    },
    Bool,
    String {
        charset: String,
        min_len: usize,
        max_len: usize,
    },
    Array {
        element: Box<Constraint>,
        min_len: usize,
        max_len: usize,
    },
    /// Named generator registered in code, for structured inputs.
    Custom {
        generator: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSize {
    Finite(u64),
    Unbounded,
}

impl DomainSize {
    pub fn finite(self) -> Option<u64> {
        match self {
            DomainSize::Finite(n) => Some(n),
            DomainSize::Unbounded => None,
        }
    }
}

impl fmt::Display for DomainSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSize::Finite(n) => write!(f, "{n}"),
            DomainSize::Unbounded => f.write_str("unbounded"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintError {
    #[error("range lower bound exceeds upper bound")]
    EmptyRange,
    #[error("double bounds must be finite and decimals at most 9")]
    BadDouble,
    #[error("charset is empty")]
    EmptyCharset,
    #[error("charset contains duplicate characters")]
    DuplicateCharset,
    #[error("unknown custom generator `{0}`")]
    UnknownGenerator(String),
    #[error("constraint produces {found} but parameter is {expected}")]
    TypeMismatch { expected: ValueType, found: String },
    #[error("expected {expected} constraints (one per parameter), found {found}")]
    Arity { expected: usize, found: usize },
}

impl Constraint {
    pub fn check(&self) -> Result<(), ConstraintError> {
        match self {
            Constraint::Int { lo, hi } if lo > hi => Err(ConstraintError::EmptyRange),
            Constraint::Double { lo, hi, decimals } => {
                if !lo.is_finite() || !hi.is_finite() || *decimals > 9 {
                    Err(ConstraintError::BadDouble)
                } else if lo > hi || double_grid(*lo, *hi, *decimals).is_none() {
                    Err(ConstraintError::EmptyRange)
                } else {
                    Ok(())
                }
            }
            Constraint::String { charset, min_len, max_len } => {
                if charset.is_empty() {
                    return Err(ConstraintError::EmptyCharset);
                }
                let mut chars: Vec<char> = charset.chars().collect();
                chars.sort_unstable();
                chars.dedup();
                if chars.len() != charset.chars().count() {
                    return Err(ConstraintError::DuplicateCharset);
                }
                if min_len > max_len {
                    return Err(ConstraintError::EmptyRange);
                }
                Ok(())
            }
            Constraint::Array { element, min_len, max_len } => {
                if min_len > max_len {
                    return Err(ConstraintError::EmptyRange);
                }
                element.check()
            }
            Constraint::Custom { generator } => custom_generator(generator)
                .map(|_| ())
                .ok_or_else(|| ConstraintError::UnknownGenerator(generator.clone())),
            _ => Ok(()),
        }
    }

    /// The value type this constraint generates.
    pub fn value_type(&self) -> Option<ValueType> {
        Some(match self {
            Constraint::Int { .. } => ValueType::Int,
            Constraint::Double { .. } => ValueType::Double,
            Constraint::Bool => ValueType::Bool,
            Constraint::String { .. } => ValueType::String,
            Constraint::Array { element, .. } => ValueType::array_of(element.value_type()?),
            Constraint::Custom { generator } => custom_generator(generator)?.value_type(),
        })
    }

    /// Membership predicate: the single definition of a valid input.
    pub fn contains(&self, value: &Value) -> bool {
        match (self, value) {
            (Constraint::Int { lo, hi }, Value::Int(v)) => lo <= v && v <= hi,
            (Constraint::Double { lo, hi, decimals }, Value::Double(v)) => {
                if !v.is_finite() || v < lo || v > hi {
                    return false;
                }
                let scaled = v * 10f64.powi(*decimals as i32);
                (scaled - scaled.round()).abs() < 1e-6
            }
            (Constraint::Bool, Value::Bool(_)) => true,
            (Constraint::String { charset, min_len, max_len }, Value::Str(s)) => {
                let len = s.chars().count();
                (*min_len..=*max_len).contains(&len) && s.chars().all(|c| charset.contains(c))
            }
            (Constraint::Array { element, min_len, max_len }, Value::Array(items)) => {
                (*min_len..=*max_len).contains(&items.len()) && items.iter().all(|v| element.contains(v))
            }
            (Constraint::Custom { generator }, v) => custom_generator(generator).is_some_and(|g| g.contains(v)),
            _ => false,
        }
    }

    pub fn sample(&self, rng: &mut StableRng) -> Value {
        match self {
            Constraint::Int { lo, hi } => Value::Int(rng.int_in(*lo, *hi)),
            Constraint::Double { lo, hi, decimals } => {
                let (first, last) = double_grid(*lo, *hi, *decimals).expect("checked double constraint");
                let k = rng.int_in(first, last);
                Value::Double(grid_value(k, *decimals))
            }
            Constraint::Bool => Value::Bool(rng.coin()),
            Constraint::String { charset, min_len, max_len } => {
                let chars: Vec<char> = charset.chars().collect();
                let len = rng.usize_in(*min_len, *max_len);
                Value::Str((0..len).map(|_| chars[rng.below(chars.len() as u64) as usize]).collect())
            }
            Constraint::Array { element, min_len, max_len } => {
                let len = rng.usize_in(*min_len, *max_len);
                Value::Array((0..len).map(|_| element.sample(rng)).collect())
            }
            Constraint::Custom { generator } => custom_generator(generator)
                .expect("checked custom generator")
                .sample(rng),
        }
    }

    pub fn domain_size(&self) -> DomainSize {
        let finite = match self {
            Constraint::Int { lo, hi } => u64::try_from(*hi as i128 - *lo as i128 + 1).ok(),
            Constraint::Bool => Some(2),
            Constraint::Double { .. } | Constraint::Custom { .. } => None,
            Constraint::String { charset, min_len, max_len } => {
                sequences(charset.chars().count() as u64, *min_len, *max_len)
            }
            Constraint::Array { element, min_len, max_len } => match element.domain_size() {
                DomainSize::Finite(n) => sequences(n, *min_len, *max_len),
                DomainSize::Unbounded => None,
            },
        };
        finite.map_or(DomainSize::Unbounded, DomainSize::Finite)
    }

    /// The `index`-th member of a finite domain in canonical order:
    /// ascending integers, `false` before `true`, and sequences ordered by
    /// length then lexicographically by element order.
    pub fn value_at(&self, index: u64) -> Option<Value> {
        match self {
            Constraint::Int { lo, hi } => {
                let v = *lo as i128 + index as i128;
                (v <= *hi as i128).then_some(Value::Int(v as i64))
            }
            Constraint::Bool => match index {
                0 => Some(Value::Bool(false)),
                1 => Some(Value::Bool(true)),
                _ => None,
            },
            Constraint::String { charset, min_len, max_len } => {
                let chars: Vec<char> = charset.chars().collect();
                let digits = sequence_at(chars.len() as u64, *min_len, *max_len, index)?;
                Some(Value::Str(digits.into_iter().map(|d| chars[d as usize]).collect()))
            }
            Constraint::Array { element, min_len, max_len } => {
                let base = element.domain_size().finite()?;
                let digits = sequence_at(base, *min_len, *max_len, index)?;
                digits
                    .into_iter()
                    .map(|d| element.value_at(d))
                    .collect::<Option<Vec<_>>>()
                    .map(Value::Array)
            }
            Constraint::Double { .. } | Constraint::Custom { .. } => None,
        }
    }
}

/// Scaled integer bounds of the decimal grid inside `[lo, hi]`.
fn double_grid(lo: f64, hi: f64, decimals: u32) -> Option<(i64, i64)> {
    let scale = 10f64.powi(decimals as i32);
    let first = (lo * scale - 1e-9).ceil();
    let last = (hi * scale + 1e-9).floor();
    if !(first.abs() < 9e15 && last.abs() < 9e15) || first > last {
        return None;
    }
    Some((first as i64, last as i64))
}

fn grid_value(k: i64, decimals: u32) -> f64 {
    // Division by an exact power of ten yields the correctly rounded
    // (and therefore shortest-printing) decimal.
    k as f64 / 10f64.powi(decimals as i32)
}

fn sequences(base: u64, min_len: usize, max_len: usize) -> Option<u64> {
    let mut total: u64 = 0;
    for len in min_len..=max_len {
        let count = base.checked_pow(u32::try_from(len).ok()?)?;
        total = total.checked_add(count)?;
    }
    Some(total)
}

fn sequence_at(base: u64, min_len: usize, max_len: usize, mut index: u64) -> Option<Vec<u64>> {
    for len in min_len..=max_len {
        let count = base.checked_pow(u32::try_from(len).ok()?)?;
        if index < count {
            let mut digits = vec![0u64; len];
            for slot in digits.iter_mut().rev() {
                *slot = index % base;
                index /= base;
            }
            return Some(digits);
        }
        index -= count;
    }
    None
}

/// One constraint per parameter, in parameter order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConstraintSpec(pub Vec<Constraint>);

impl ConstraintSpec {
    pub fn params(&self) -> &[Constraint] {
        &self.0
    }

    pub fn check_against(&self, params: &[ValueType]) -> Result<(), ConstraintError> {
        if self.0.len() != params.len() {
            return Err(ConstraintError::Arity { expected: params.len(), found: self.0.len() });
        }
        for (c, ty) in self.0.iter().zip(params) {
            c.check()?;
            match c.value_type() {
                Some(found) if &found == ty => {}
                found => {
                    return Err(ConstraintError::TypeMismatch {
                        expected: ty.clone(),
                        found: found.map_or_else(|| "an unknown type".to_string(), |t| t.to_string()),
                    })
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, inputs: &[Value]) -> bool {
        inputs.len() == self.0.len() && self.0.iter().zip(inputs).all(|(c, v)| c.contains(v))
    }

    pub fn sample(&self, rng: &mut StableRng) -> Vec<Value> {
        self.0.iter().map(|c| c.sample(rng)).collect()
    }

    /// Product of per-parameter sizes; unbounded if any parameter is
    /// continuous, custom, or the product overflows.
    pub fn domain_size(&self) -> DomainSize {
        let mut total: u64 = 1;
        for c in &self.0 {
            match c.domain_size() {
                DomainSize::Finite(n) => match total.checked_mul(n) {
                    Some(t) => total = t,
                    None => return DomainSize::Unbounded,
                },
                DomainSize::Unbounded => return DomainSize::Unbounded,
            }
        }
        DomainSize::Finite(total)
    }

    /// Input tuple at `index` in canonical order (last parameter varies fastest).
    pub fn tuple_at(&self, mut index: u64) -> Option<Vec<Value>> {
        let sizes: Vec<u64> = self.0.iter().map(|c| c.domain_size().finite()).collect::<Option<_>>()?;
        let mut out = vec![Value::Bool(false); self.0.len()];
        for (i, c) in self.0.iter().enumerate().rev() {
            out[i] = c.value_at(index % sizes[i])?;
            index /= sizes[i];
        }
        (index == 0).then_some(out)
    }

    pub fn has_custom(&self) -> bool {
        fn custom(c: &Constraint) -> bool {
            match c {
                Constraint::Custom { .. } => true,
                Constraint::Array { element, .. } => custom(element),
                _ => false,
            }
        }
        self.0.iter().any(custom)
    }
}

/// A hand-written input generator for structured inputs.
pub trait CustomGenerator: Send + Sync {
    fn value_type(&self) -> ValueType;
    fn sample(&self, rng: &mut StableRng) -> Value;
    fn contains(&self, value: &Value) -> bool;
}

/// Ascending arrays of 0 to 6 integers in [-50, 50].
struct SortedIntArray;

impl CustomGenerator for SortedIntArray {
    fn value_type(&self) -> ValueType {
        ValueType::array_of(ValueType::Int)
    }

    fn sample(&self, rng: &mut StableRng) -> Value {
        let len = rng.usize_in(0, 6);
        let mut items: Vec<i64> = (0..len).map(|_| rng.int_in(-50, 50)).collect();
        items.sort_unstable();
        Value::Array(items.into_iter().map(Value::Int).collect())
    }

    fn contains(&self, value: &Value) -> bool {
        let Value::Array(items) = value else { return false };
        let ints: Option<Vec<i64>> = items
            .iter()
            .map(|v| match v {
                Value::Int(i) if (-50..=50).contains(i) => Some(*i),
                _ => None,
            })
            .collect();
        ints.is_some_and(|xs| xs.len() <= 6 && xs.windows(2).all(|w| w[0] <= w[1]))
    }
}

/// Strings of `(` and `)` up to length 10; half of the draws are balanced.
struct BracketString;

impl CustomGenerator for BracketString {
    fn value_type(&self) -> ValueType {
        ValueType::String
    }

    fn sample(&self, rng: &mut StableRng) -> Value {
        if rng.coin() {
            let pairs = rng.usize_in(0, 5);
            let mut s = String::new();
            let (mut open, mut close) = (pairs, pairs);
            while open + close > 0 {
                // Only close when an opener is pending.
                let can_close = close > open;
                if open > 0 && (!can_close || rng.coin()) {
                    s.push('(');
                    open -= 1;
                } else {
                    s.push(')');
                    close -= 1;
                }
            }
            Value::Str(s)
        } else {
            let len = rng.usize_in(0, 10);
            Value::Str((0..len).map(|_| if rng.coin() { '(' } else { ')' }).collect())
        }
    }

    fn contains(&self, value: &Value) -> bool {
        matches!(value, Value::Str(s) if s.chars().count() <= 10 && s.chars().all(|c| c == '(' || c == ')'))
    }
}

static SORTED_INT_ARRAY: SortedIntArray = SortedIntArray;
static BRACKET_STRING: BracketString = BracketString;

/// Registered custom generators, by id.
pub fn custom_generator(name: &str) -> Option<&'static dyn CustomGenerator> {
    match name {
        "sorted_int_array" => Some(&SORTED_INT_ARRAY),
        "bracket_string" => Some(&BRACKET_STRING),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(lo: i64, hi: i64) -> Constraint {
        Constraint::Int { lo, hi }
    }

    #[test]
    fn domain_sizes() {
        let sum_check = ConstraintSpec(vec![ints(0, 20), ints(0, 20), ints(0, 20)]);
        // 21 * 21 * 21 by direct multiplication.
        assert_eq!(sum_check.domain_size(), DomainSize::Finite(21 * 21 * 21));
        assert_eq!(sum_check.domain_size(), DomainSize::Finite(9261));
        assert_eq!(ConstraintSpec(vec![Constraint::Bool]).domain_size(), DomainSize::Finite(2));
        let unit = ConstraintSpec(vec![Constraint::Double { lo: 0.0, hi: 1.0, decimals: 2 }]);
        assert_eq!(unit.domain_size(), DomainSize::Unbounded);
        let s = Constraint::String { charset: "ab".into(), min_len: 0, max_len: 2 };
        assert_eq!(s.domain_size(), DomainSize::Finite(1 + 2 + 4));
        let huge = ConstraintSpec(vec![ints(i64::MIN, i64::MAX), ints(0, 1)]);
        assert_eq!(huge.domain_size(), DomainSize::Unbounded);
        let custom = ConstraintSpec(vec![Constraint::Custom { generator: "bracket_string".into() }]);
        assert_eq!(custom.domain_size(), DomainSize::Unbounded);
    }

    #[test]
    fn canonical_order_is_smallest_first() {
        let spec = ConstraintSpec(vec![ints(0, 20), ints(0, 20), ints(0, 20)]);
        assert_eq!(spec.tuple_at(0).unwrap(), vec![Value::Int(0); 3]);
        assert_eq!(spec.tuple_at(1).unwrap(), vec![Value::Int(0), Value::Int(0), Value::Int(1)]);
        assert_eq!(spec.tuple_at(9260).unwrap(), vec![Value::Int(20); 3]);
        assert!(spec.tuple_at(9261).is_none());
        let s = Constraint::String { charset: "ab".into(), min_len: 0, max_len: 2 };
        let all: Vec<Value> = (0..7).map(|i| s.value_at(i).unwrap()).collect();
        let expect: Vec<Value> = ["", "a", "b", "aa", "ab", "ba", "bb"].iter().map(|x| Value::Str(x.to_string())).collect();
        assert_eq!(all, expect);
    }

    #[test]
    fn enumeration_covers_domain_without_repeats() {
        let c = Constraint::Array { element: Box::new(ints(-1, 1)), min_len: 0, max_len: 3 };
        let n = c.domain_size().finite().unwrap();
        assert_eq!(n, 1 + 3 + 9 + 27);
        let mut seen = Vec::new();
        for i in 0..n {
            let v = c.value_at(i).unwrap();
            assert!(c.contains(&v));
            assert!(!seen.contains(&v));
            seen.push(v);
        }
    }

    #[test]
    fn doubles_sit_on_the_grid() {
        let c = Constraint::Double { lo: -1.0, hi: 2.5, decimals: 2 };
        let mut rng = StableRng::new(1);
        for _ in 0..2000 {
            let v = c.sample(&mut rng);
            assert!(c.contains(&v), "{v:?}");
            if let Value::Double(d) = v {
                assert!(format!("{d:?}").len() <= 5, "{d:?}");
            }
        }
        assert!(!c.contains(&Value::Double(0.125)));
        assert!(!c.contains(&Value::Int(1)));
    }

    #[test]
    fn bad_constraints_are_rejected() {
        assert_eq!(ints(3, 1).check(), Err(ConstraintError::EmptyRange));
        let s = Constraint::String { charset: String::new(), min_len: 0, max_len: 1 };
        assert_eq!(s.check(), Err(ConstraintError::EmptyCharset));
        let s = Constraint::String { charset: "aa".into(), min_len: 0, max_len: 1 };
        assert_eq!(s.check(), Err(ConstraintError::DuplicateCharset));
        let c = Constraint::Custom { generator: "nope".into() };
        assert!(matches!(c.check(), Err(ConstraintError::UnknownGenerator(_))));
    }

    #[test]
    fn custom_generators_sample_members() {
        let mut rng = StableRng::new(9);
        for name in ["sorted_int_array", "bracket_string"] {
            let g = custom_generator(name).unwrap();
            for _ in 0..500 {
                let v = g.sample(&mut rng);
                assert!(g.contains(&v), "{name}: {v:?}");
                assert!(v.conforms_to(&g.value_type()));
            }
        }
    }
}
