use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::value::{LiteralStyle, Value, ValueType};

/// How a profile spells value types in signatures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeStyle {
    Minilang,
    Python,
    CSharp,
}

impl TypeStyle {
    pub fn render(self, ty: &ValueType) -> String {
        match (self, ty) {
            (TypeStyle::Minilang, ty) => ty.to_string(),
            (TypeStyle::Python, ValueType::Int) => "int".into(),
            (TypeStyle::Python, ValueType::Double) => "float".into(),
            (TypeStyle::Python, ValueType::Bool) => "bool".into(),
            (TypeStyle::Python, ValueType::String) => "str".into(),
            (TypeStyle::Python, ValueType::Array(e)) => format!("list[{}]", self.render(e)),
            (TypeStyle::CSharp, ValueType::Int) => "int".into(),
            (TypeStyle::CSharp, ValueType::Double) => "double".into(),
            (TypeStyle::CSharp, ValueType::Bool) => "bool".into(),
            (TypeStyle::CSharp, ValueType::String) => "string".into(),
            (TypeStyle::CSharp, ValueType::Array(e)) => format!("{}[]", self.render(e)),
        }
    }
}

/// Rendering and toolchain bundle for one candidate language.
///
/// Templates use `{placeholder}` substitution. Signature templates see
/// `{name}`, `{params}` and `{returns}`; parameter templates `{name}` and
/// `{type}`; example templates `{call}` and `{output}`; call templates
/// `{name}` and `{args}`. Command templates see `{source}`, `{dir}` and
/// `{name}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguageProfile {
    pub profile_id: String,
    pub code_fence_tag: String,
    pub literal_style: LiteralStyle,
    pub type_style: TypeStyle,
    pub param_template: String,
    pub signature_template: String,
    pub call_template: String,
    pub example_template: String,
    /// Import statements or other text placed before the signature.
    #[serde(default)]
    pub preamble: String,
    /// Regex template (after `{name}` substitution) that a source must match
    /// to count as defining the target function.
    pub definition_pattern: String,
    /// Keywords that open a conditional, for the textual input-matching check.
    pub conditional_keywords: Vec<String>,
    #[serde(default)]
    pub source_file: String,
    #[serde(default)]
    pub compile_command: Option<Vec<String>>,
    #[serde(default)]
    pub run_command: Option<Vec<String>>,
    /// Extra files written next to the candidate in its scratch directory.
    #[serde(default)]
    pub support_files: BTreeMap<String, String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("unknown language profile `{0}`")]
    Unknown(String),
    #[error("cannot read profile {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid profile {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("profile `{0}` must define both compile and run commands, or neither (minilang)")]
    Commands(String),
}

pub const PYTHON_DRIVER: &str = include_str!("python_driver.py");

/// Conventional parameter names: x, y, z, w, v, u, then p6, p7, ...
pub fn param_names(count: usize) -> Vec<String> {
    const NAMES: [&str; 6] = ["x", "y", "z", "w", "v", "u"];
    (0..count)
        .map(|i| NAMES.get(i).map_or_else(|| format!("p{i}"), |n| n.to_string()))
        .collect()
}

pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        match after.find('}') {
            Some(end) if vars.iter().any(|(k, _)| *k == &after[..end]) => {
                let key = &after[..end];
                out.push_str(vars.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).unwrap_or_default());
                rest = &after[end + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

impl LanguageProfile {
    pub fn minilang() -> Self {
        LanguageProfile {
            profile_id: "minilang".into(),
            code_fence_tag: "minilang".into(),
            literal_style: LiteralStyle::Plain,
            type_style: TypeStyle::Minilang,
            param_template: "{name}: {type}".into(),
            signature_template: "fn {name}({params}) -> {returns} {\n    // your code here\n}".into(),
            call_template: "{name}({args})".into(),
            example_template: "{call} = {output}".into(),
            preamble: String::new(),
            definition_pattern: r"\bfn\s+{name}\s*\(".into(),
            conditional_keywords: vec!["if".into(), "while".into()],
            source_file: "candidate.mini".into(),
            compile_command: None,
            run_command: None,
            support_files: BTreeMap::new(),
        }
    }

    pub fn python() -> Self {
        LanguageProfile {
            profile_id: "python".into(),
            code_fence_tag: "python".into(),
            literal_style: LiteralStyle::Python,
            type_style: TypeStyle::Python,
            param_template: "{name}: {type}".into(),
            signature_template: "def {name}({params}) -> {returns}:\n    # your code here\n    ...".into(),
            call_template: "{name}({args})".into(),
            example_template: "{call} == {output}".into(),
            preamble: "import math".into(),
            definition_pattern: r"\bdef\s+{name}\s*\(".into(),
            conditional_keywords: vec!["if".into(), "elif".into(), "while".into()],
            source_file: "candidate.py".into(),
            compile_command: Some(vec!["python3".into(), "-m".into(), "py_compile".into(), "{source}".into()]),
            run_command: Some(vec![
                "python3".into(),
                "-u".into(),
                "{dir}/itercode_driver.py".into(),
                "{source}".into(),
                "{name}".into(),
            ]),
            support_files: BTreeMap::from([("itercode_driver.py".to_string(), PYTHON_DRIVER.to_string())]),
        }
    }

    /// Built-in profile by id.
    pub fn builtin(id: &str) -> Option<Self> {
        match id {
            "minilang" => Some(Self::minilang()),
            "python" => Some(Self::python()),
            _ => None,
        }
    }

    /// A built-in id, or a path to a JSON profile file.
    pub fn resolve(id_or_path: &str) -> Result<Self, ProfileError> {
        if let Some(p) = Self::builtin(id_or_path) {
            return Ok(p);
        }
        let path = Path::new(id_or_path);
        if !path.exists() {
            return Err(ProfileError::Unknown(id_or_path.to_string()));
        }
        let text = std::fs::read_to_string(path).map_err(|source| ProfileError::Io { path: id_or_path.into(), source })?;
        let profile: LanguageProfile =
            serde_json::from_str(&text).map_err(|source| ProfileError::Parse { path: id_or_path.into(), source })?;
        profile.check()?;
        Ok(profile)
    }

    pub fn check(&self) -> Result<(), ProfileError> {
        let ok = match (&self.compile_command, &self.run_command) {
            (None, None) => self.is_minilang(),
            (Some(_), Some(_)) => !self.is_minilang(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(ProfileError::Commands(self.profile_id.clone()))
        }
    }

    pub fn is_minilang(&self) -> bool {
        self.profile_id == "minilang"
    }

    pub fn literal(&self, v: &Value) -> String {
        v.literal(self.literal_style)
    }

    pub fn render_call(&self, name: &str, inputs: &[Value]) -> String {
        let args: Vec<String> = inputs.iter().map(|v| self.literal(v)).collect();
        fill(&self.call_template, &[("name", name), ("args", &args.join(", "))])
    }

    pub fn render_signature(&self, name: &str, params: &[ValueType], returns: &ValueType) -> String {
        let names = param_names(params.len());
        let rendered: Vec<String> = names
            .iter()
            .zip(params)
            .map(|(n, ty)| fill(&self.param_template, &[("name", n), ("type", &self.type_style.render(ty))]))
            .collect();
        fill(
            &self.signature_template,
            &[("name", name), ("params", &rendered.join(", ")), ("returns", &self.type_style.render(returns))],
        )
    }

    pub fn defines_function(&self, source: &str, name: &str) -> bool {
        let pattern = fill(&self.definition_pattern, &[("name", &regex::escape(name))]);
        regex::Regex::new(&pattern).is_ok_and(|re| re.is_match(source))
    }
}
