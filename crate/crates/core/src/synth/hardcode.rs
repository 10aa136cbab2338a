//! A deliberately degenerate backend that hardcodes the visible examples.

use std::collections::HashSet;

use super::{fenced, Answer, BatchMode, FailureReason, GenerationRequest, SynthDescriptor, Synthesizer};
use crate::example_engine::IOExample;
use crate::minilang::{BinOp, Expr, Function, Param, Stmt};
use crate::runner::{param_names, LanguageProfile};
use crate::task::Signature;
use crate::value::LiteralStyle;

/// One `if` per distinct visible input, returning its output; else the
/// return type's default value.
pub fn hardcoded_program(signature: &Signature, examples: &[IOExample], profile: &LanguageProfile) -> Option<String> {
    let names = param_names(signature.params.len());
    let mut seen = HashSet::new();
    let distinct: Vec<&IOExample> = examples
        .iter()
        .filter(|e| seen.insert(serde_json::to_string(&e.inputs).expect("values serialize")))
        .collect();
    if profile.is_minilang() {
        let mut body: Vec<Stmt> = distinct
            .iter()
            .map(|ex| {
                let cond = names
                    .iter()
                    .zip(&ex.inputs)
                    .map(|(n, v)| Expr::binary(BinOp::Eq, Expr::var(n), Expr::literal(v)))
                    .reduce(|a, b| Expr::binary(BinOp::And, a, b))
                    .expect("at least one parameter");
                Stmt::If { cond, then_block: vec![Stmt::Return(Expr::literal(&ex.expected))], else_block: None }
            })
            .collect();
        body.push(Stmt::Return(Expr::literal(&signature.returns.default_value())));
        let function = Function {
            name: signature.name.clone(),
            params: names.iter().zip(&signature.params).map(|(n, t)| Param { name: n.clone(), ty: t.clone() }).collect(),
            ret: signature.returns.clone(),
            body,
        };
        return Some(function.to_string());
    }
    if profile.literal_style == LiteralStyle::Python {
        let lit = |v| profile.literal(v);
        let mut out = format!("def {}({}):\n", signature.name, names.join(", "));
        for ex in distinct {
            let cond: Vec<String> = names.iter().zip(&ex.inputs).map(|(n, v)| format!("{n} == {}", lit(v))).collect();
            out.push_str(&format!("    if {}:\n        return {}\n", cond.join(" and "), lit(&ex.expected)));
        }
        out.push_str(&format!("    return {}\n", lit(&signature.returns.default_value())));
        return Some(out);
    }
    None
}

pub struct InputMatchingSynthesizer;

impl Synthesizer for InputMatchingSynthesizer {
    fn descriptor(&self) -> SynthDescriptor {
        SynthDescriptor { backend: "input-matching".into(), batch_mode: BatchMode::Local, detail: String::new() }
    }

    fn generate(&self, request: &GenerationRequest<'_>, n: usize) -> Vec<Answer> {
        let answer = match hardcoded_program(&request.task.signature, request.visible, request.profile) {
            Some(src) => Answer::Text(fenced(&src, request.profile)),
            None => Answer::failed(FailureReason::Backend, "profile not supported by the input-matching backend"),
        };
        vec![answer; n]
    }
}
