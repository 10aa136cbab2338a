//! Syntactic detection of input matching: conditionals that test for one
//! example's exact input tuple and return that example's literal output.

use std::collections::HashMap;

use super::ast::{BinOp, Expr, Stmt};
use super::Program;
use crate::checker::values_equal;
use crate::example_engine::IOExample;
use crate::value::Value;

pub fn ast_input_matching(program: &Program, visible: &[IOExample]) -> bool {
    let params: Vec<&str> = program.function.params.iter().map(|p| p.name.as_str()).collect();
    let mut found = false;
    visit_ifs(&program.function.body, &mut |cond, then_block| {
        if found {
            return;
        }
        let Some(tests) = equality_tests(cond) else { return };
        found = visible.iter().any(|ex| {
            ex.inputs.len() == params.len()
                && params.iter().zip(&ex.inputs).all(|(p, v)| tests.get(p).is_some_and(|lit| values_equal(lit, v)))
                && returns_literal(then_block, &ex.expected)
        });
    });
    found
}

fn visit_ifs<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Expr, &'a [Stmt])) {
    for s in stmts {
        match s {
            Stmt::If { cond, then_block, else_block } => {
                f(cond, then_block);
                visit_ifs(then_block, f);
                if let Some(b) = else_block {
                    visit_ifs(b, f);
                }
            }
            Stmt::While { body, .. } | Stmt::For { body, .. } => visit_ifs(body, f),
            _ => {}
        }
    }
}

/// `p == lit && q == lit ...` as a map from parameter to literal; `None` if
/// the condition contains anything else.
fn equality_tests(cond: &Expr) -> Option<HashMap<&str, Value>> {
    fn collect<'a>(e: &'a Expr, out: &mut HashMap<&'a str, Value>) -> Option<()> {
        match e {
            Expr::Binary(BinOp::And, l, r) => {
                collect(l, out)?;
                collect(r, out)
            }
            Expr::Binary(BinOp::Eq, l, r) => {
                let (name, lit) = match (&**l, &**r) {
                    (Expr::Var(name), other) | (other, Expr::Var(name)) => (name.as_str(), other.const_value()?),
                    _ => return None,
                };
                out.insert(name, lit);
                Some(())
            }
            _ => None,
        }
    }
    let mut out = HashMap::new();
    collect(cond, &mut out)?;
    Some(out)
}

fn returns_literal(block: &[Stmt], expected: &Value) -> bool {
    block.iter().any(|s| match s {
        Stmt::Return(e) => e.const_value().is_some_and(|v| values_equal(&v, expected)),
        _ => false,
    })
}
