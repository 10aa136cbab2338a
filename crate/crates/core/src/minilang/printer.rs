//! Canonical pretty-printer. Output re-parses to a structurally identical AST.

use std::fmt::{self, Write};

use super::ast::{Expr, Function, Stmt, UnOp};
use crate::value::{format_double, quote_string, Value};

const UNARY_PREC: u8 = 7;
const POSTFIX_PREC: u8 = 8;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, _, _) => op.precedence(),
        Expr::Unary(..) => UNARY_PREC,
        Expr::Lit(Value::Int(i)) if *i < 0 => UNARY_PREC,
        Expr::Lit(Value::Double(d)) if d.is_sign_negative() => UNARY_PREC,
        _ => POSTFIX_PREC,
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Lit(v) => write_scalar(out, v),
        Expr::Var(name) => out.push_str(name),
        Expr::ArrayLit(items) => {
            out.push('[');
            write_list(out, items);
            out.push(']');
        }
        Expr::Unary(op, inner) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            let starts_with_minus = *op == UnOp::Neg && prec(inner) == UNARY_PREC;
            write_child(out, inner, prec(inner) < UNARY_PREC || starts_with_minus);
        }
        Expr::Binary(op, lhs, rhs) => {
            let p = op.precedence();
            write_child(out, lhs, prec(lhs) < p);
            let _ = write!(out, " {} ", op.symbol());
            write_child(out, rhs, prec(rhs) <= p);
        }
        Expr::Index(base, index) => {
            write_child(out, base, prec(base) < POSTFIX_PREC);
            out.push('[');
            write_expr(out, index);
            out.push(']');
        }
        Expr::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            write_list(out, args);
            out.push(')');
        }
    }
}

fn write_child(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_list(out: &mut String, items: &[Expr]) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, item);
    }
}

fn write_scalar(out: &mut String, v: &Value) {
    match v {
        Value::Int(i) => out.push_str(&i.to_string()),
        Value::Double(d) => out.push_str(&format_double(*d)),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Str(s) => out.push_str(&quote_string(s)),
        // Not produced by the parser; print as an array literal.
        Value::Array(_) => write_expr(out, &Expr::literal(v)),
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn write_block(out: &mut String, stmts: &[Stmt], indent: usize) {
    out.push_str("{\n");
    for s in stmts {
        write_stmt(out, s, indent + 1);
    }
    out.push_str(&"    ".repeat(indent));
    out.push('}');
}

fn write_stmt(out: &mut String, s: &Stmt, indent: usize) {
    out.push_str(&"    ".repeat(indent));
    write_stmt_body(out, s, indent);
    out.push('\n');
}

fn write_stmt_body(out: &mut String, s: &Stmt, indent: usize) {
    match s {
        Stmt::Let { name, value } => {
            let _ = write!(out, "let {name} = {};", expr_to_string(value));
        }
        Stmt::Assign { name, value } => {
            let _ = write!(out, "{name} = {};", expr_to_string(value));
        }
        Stmt::AssignIndex { name, index, value } => {
            let _ = write!(out, "{name}[{}] = {};", expr_to_string(index), expr_to_string(value));
        }
        Stmt::If { cond, then_block, else_block } => {
            let _ = write!(out, "if {} ", expr_to_string(cond));
            write_block(out, then_block, indent);
            match else_block.as_deref() {
                None => {}
                Some([nested @ Stmt::If { .. }]) => {
                    out.push_str(" else ");
                    write_stmt_body(out, nested, indent);
                }
                Some(block) => {
                    out.push_str(" else ");
                    write_block(out, block, indent);
                }
            }
        }
        Stmt::While { cond, body } => {
            let _ = write!(out, "while {} ", expr_to_string(cond));
            write_block(out, body, indent);
        }
        Stmt::For { var, start, end, body } => {
            let _ = write!(out, "for {var} in {}..{} ", expr_to_string(start), expr_to_string(end));
            write_block(out, body, indent);
        }
        Stmt::Return(e) => {
            let _ = write!(out, "return {};", expr_to_string(e));
        }
        Stmt::Break => out.push_str("break;"),
        Stmt::Continue => out.push_str("continue;"),
        Stmt::Expr(e) => {
            let _ = write!(out, "{};", expr_to_string(e));
        }
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params.iter().map(|p| format!("{}: {}", p.name, p.ty)).collect();
        let mut out = format!("fn {}({}) -> {} ", self.name, params.join(", "), self.ret);
        write_block(&mut out, &self.body, 0);
        f.write_str(&out)
    }
}
