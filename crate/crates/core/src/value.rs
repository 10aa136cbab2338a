//! Runtime values and their static kinds.
//!
//! Five kinds are supported: `int`, `double`, `bool`, `string` and
//! homogeneous `array<T>` with at most two levels of nesting.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Maximum array nesting depth (`array<array<int>>` is depth 2).
pub const MAX_ARRAY_DEPTH: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Double(f64),
    Str(String),
    Array(Vec<Value>),
}

/// Static kind of a [`Value`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueType {
    Int,
    Double,
    Bool,
    String,
    Array(Box<ValueType>),
}

/// Top-level kind labels, used for io-type categorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindLabel {
    Int,
    Double,
    Bool,
    String,
    Array,
}

impl KindLabel {
    pub const ALL: [KindLabel; 5] = [
        KindLabel::Int,
        KindLabel::Double,
        KindLabel::Bool,
        KindLabel::String,
        KindLabel::Array,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KindLabel::Int => "int",
            KindLabel::Double => "double",
            KindLabel::Bool => "bool",
            KindLabel::String => "string",
            KindLabel::Array => "array",
        }
    }
}

impl fmt::Display for KindLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl ValueType {
    pub fn array_of(elem: ValueType) -> Self {
        ValueType::Array(Box::new(elem))
    }

    pub fn label(&self) -> KindLabel {
        match self {
            ValueType::Int => KindLabel::Int,
            ValueType::Double => KindLabel::Double,
            ValueType::Bool => KindLabel::Bool,
            ValueType::String => KindLabel::String,
            ValueType::Array(_) => KindLabel::Array,
        }
    }

    pub fn array_depth(&self) -> usize {
        match self {
            ValueType::Array(inner) => 1 + inner.array_depth(),
            _ => 0,
        }
    }

    /// Default value returned by hardcoding candidates.
    pub fn default_value(&self) -> Value {
        match self {
            ValueType::Int => Value::Int(0),
            ValueType::Double => Value::Double(0.0),
            ValueType::Bool => Value::Bool(false),
            ValueType::String => Value::Str(String::new()),
            ValueType::Array(_) => Value::Array(Vec::new()),
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueType::Int => f.write_str("int"),
            ValueType::Double => f.write_str("double"),
            ValueType::Bool => f.write_str("bool"),
            ValueType::String => f.write_str("string"),
            ValueType::Array(inner) => write!(f, "array<{inner}>"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid value type `{0}`")]
pub struct ParseTypeError(pub String);

impl FromStr for ValueType {
    type Err = ParseTypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let ty = match t {
            "int" => ValueType::Int,
            "double" => ValueType::Double,
            "bool" => ValueType::Bool,
            "string" => ValueType::String,
            _ => {
                let inner = t
                    .strip_prefix("array<")
                    .and_then(|r| r.strip_suffix('>'))
                    .ok_or_else(|| ParseTypeError(s.to_string()))?;
                ValueType::array_of(inner.parse().map_err(|_| ParseTypeError(s.to_string()))?)
            }
        };
        if ty.array_depth() > MAX_ARRAY_DEPTH {
            return Err(ParseTypeError(s.to_string()));
        }
        Ok(ty)
    }
}

impl Serialize for ValueType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ValueType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Value {
    pub fn label(&self) -> KindLabel {
        match self {
            Value::Int(_) => KindLabel::Int,
            Value::Double(_) => KindLabel::Double,
            Value::Bool(_) => KindLabel::Bool,
            Value::Str(_) => KindLabel::String,
            Value::Array(_) => KindLabel::Array,
        }
    }

    /// True iff the value inhabits `ty`. Empty arrays inhabit every array type.
    pub fn conforms_to(&self, ty: &ValueType) -> bool {
        match (self, ty) {
            (Value::Int(_), ValueType::Int) => true,
            (Value::Double(d), ValueType::Double) => d.is_finite(),
            (Value::Bool(_), ValueType::Bool) => true,
            (Value::Str(_), ValueType::String) => true,
            (Value::Array(items), ValueType::Array(elem)) => items.iter().all(|v| v.conforms_to(elem)),
            _ => false,
        }
    }

    /// Decode a JSON value against an expected type. Integers are accepted
    /// where a double is expected; anything else falls back to an untyped
    /// decode so that kind mismatches surface as unequal values downstream.
    pub fn from_json_typed(json: &serde_json::Value, ty: &ValueType) -> Option<Value> {
        match (json, ty) {
            (serde_json::Value::Number(n), ValueType::Double) => n.as_f64().map(Value::Double),
            (serde_json::Value::Array(items), ValueType::Array(elem)) => items
                .iter()
                .map(|item| Value::from_json_typed(item, elem))
                .collect::<Option<Vec<_>>>()
                .map(Value::Array),
            _ => Value::from_json(json),
        }
    }

    pub fn from_json(json: &serde_json::Value) -> Option<Value> {
        match json {
            serde_json::Value::Bool(b) => Some(Value::Bool(*b)),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Some(Value::Int(i))
                } else {
                    n.as_f64().filter(|f| f.is_finite()).map(Value::Double)
                }
            }
            serde_json::Value::String(s) => Some(Value::Str(s.clone())),
            serde_json::Value::Array(items) => items.iter().map(Value::from_json).collect::<Option<Vec<_>>>().map(Value::Array),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Int(i) => serde_json::Value::from(*i),
            Value::Double(d) => serde_json::Number::from_f64(*d)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Str(s) => serde_json::Value::String(s.clone()),
            Value::Array(items) => serde_json::Value::Array(items.iter().map(Value::to_json).collect()),
        }
    }

    /// Literal rendering shared by prompts and the mini-language printer.
    pub fn literal(&self, style: LiteralStyle) -> String {
        let mut out = String::new();
        self.write_literal(&mut out, style);
        out
    }

    fn write_literal(&self, out: &mut String, style: LiteralStyle) {
        match self {
            Value::Int(i) => out.push_str(&i.to_string()),
            Value::Double(d) => out.push_str(&format_double(*d)),
            Value::Bool(b) => out.push_str(match (style, b) {
                (LiteralStyle::Python, true) => "True",
                (LiteralStyle::Python, false) => "False",
                (_, true) => "true",
                (_, false) => "false",
            }),
            Value::Str(s) => out.push_str(&quote_string(s)),
            Value::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    item.write_literal(out, style);
                }
                out.push(']');
            }
        }
    }
}

/// Shortest round-trip rendering that always keeps a double recognizable
/// as a double (`1.0`, not `1`).
pub fn format_double(d: f64) -> String {
    format!("{d:?}")
}

/// Double-quoted string literal with the escapes the mini-language lexer
/// understands.
pub fn quote_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Literal syntax flavor of a language profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiteralStyle {
    #[default]
    Plain,
    Python,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.literal(LiteralStyle::Plain))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_spelling_round_trips() {
        for s in ["int", "double", "bool", "string", "array<int>", "array<array<string>>"] {
            let ty: ValueType = s.parse().unwrap();
            assert_eq!(ty.to_string(), s);
        }
        assert!("array<array<array<int>>>".parse::<ValueType>().is_err());
        assert!("float".parse::<ValueType>().is_err());
    }

    #[test]
    fn serde_keeps_int_and_double_apart() {
        let v = Value::Array(vec![Value::Double(2.0), Value::Int(2)]);
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(text, "[2.0,2]");
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn typed_decode_coerces_ints_to_doubles() {
        let json: serde_json::Value = serde_json::from_str("[1, 2.5]").unwrap();
        let v = Value::from_json_typed(&json, &ValueType::array_of(ValueType::Double)).unwrap();
        assert_eq!(v, Value::Array(vec![Value::Double(1.0), Value::Double(2.5)]));
    }

    #[test]
    fn literals() {
        let v = Value::Array(vec![Value::Int(1), Value::Int(2)]);
        assert_eq!(v.literal(LiteralStyle::Plain), "[1, 2]");
        assert_eq!(Value::Str("a\"b".into()).to_string(), "\"a\\\"b\"");
        assert_eq!(Value::Double(0.5).to_string(), "0.5");
        assert_eq!(Value::Double(3.0).to_string(), "3.0");
        assert_eq!(Value::Bool(true).literal(LiteralStyle::Python), "True");
    }
}
