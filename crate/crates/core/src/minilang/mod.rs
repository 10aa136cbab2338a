//! A small deterministic language for reference programs, hermetic
//! candidates, and the enumerative baseline. The grammar is documented in
//! `docs/minilang.md`.

mod ast;
mod interp;
mod lexer;
mod matching;
mod parser;
mod printer;

pub use ast::{builtin_arity, BinOp, Expr, Function, Param, Stmt, UnOp, BUILTINS};
pub use interp::{evaluate as evaluate_function, ContractViolation, EvalOutcome, RunLimits, RuntimeErrorKind};
pub use lexer::ParseError;
pub use matching::ast_input_matching;
pub use printer::expr_to_string;

pub(crate) use interp::{apply_binary, apply_builtin};

use crate::value::Value;

/// Source text together with its parsed function.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub source: String,
    pub function: Function,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("syntax error at {0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Semantic(String),
}

/// Syntactic parse. Total: arbitrary text yields a program or a located error.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    let function = parser::parse_function(source)?;
    Ok(Program { source: source.to_string(), function })
}

/// Parse plus name resolution: undefined variables, unknown functions,
/// wrong builtin arity and stray `break`/`continue` are rejected.
pub fn compile(source: &str) -> Result<Program, CompileError> {
    let program = parse(source)?;
    resolve(&program.function).map_err(CompileError::Semantic)?;
    Ok(program)
}

pub fn evaluate(program: &Program, inputs: &[Value], limits: &RunLimits) -> Result<EvalOutcome, ContractViolation> {
    interp::evaluate(&program.function, inputs, limits)
}

impl Program {
    pub fn pretty(&self) -> String {
        self.function.to_string()
    }
}

struct Resolver<'a> {
    function: &'a Function,
    scopes: Vec<Vec<String>>,
    loops: usize,
}

fn resolve(function: &Function) -> Result<(), String> {
    let mut seen = Vec::new();
    for p in &function.params {
        if seen.contains(&&p.name) {
            return Err(format!("duplicate parameter `{}`", p.name));
        }
        seen.push(&p.name);
    }
    let mut r = Resolver {
        function,
        scopes: vec![function.params.iter().map(|p| p.name.clone()).collect()],
        loops: 0,
    };
    r.block(&function.body)
}

impl Resolver<'_> {
    fn defined(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.iter().any(|n| n == name))
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<(), String> {
        self.scopes.push(Vec::new());
        for s in stmts {
            self.stmt(s)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), String> {
        match s {
            Stmt::Let { name, value } => {
                self.expr(value)?;
                self.scopes.last_mut().expect("scope").push(name.clone());
            }
            Stmt::Assign { name, value } => {
                if !self.defined(name) {
                    return Err(format!("assignment to undefined variable `{name}`"));
                }
                self.expr(value)?;
            }
            Stmt::AssignIndex { name, index, value } => {
                if !self.defined(name) {
                    return Err(format!("assignment to undefined variable `{name}`"));
                }
                self.expr(index)?;
                self.expr(value)?;
            }
            Stmt::If { cond, then_block, else_block } => {
                self.expr(cond)?;
                self.block(then_block)?;
                if let Some(b) = else_block {
                    self.block(b)?;
                }
            }
            Stmt::While { cond, body } => {
                self.expr(cond)?;
                self.loops += 1;
                self.block(body)?;
                self.loops -= 1;
            }
            Stmt::For { var, start, end, body } => {
                self.expr(start)?;
                self.expr(end)?;
                self.scopes.push(vec![var.clone()]);
                self.loops += 1;
                self.block(body)?;
                self.loops -= 1;
                self.scopes.pop();
            }
            Stmt::Return(e) | Stmt::Expr(e) => self.expr(e)?,
            Stmt::Break | Stmt::Continue => {
                if self.loops == 0 {
                    return Err("`break`/`continue` outside of a loop".into());
                }
            }
        }
        Ok(())
    }

    fn expr(&mut self, e: &Expr) -> Result<(), String> {
        match e {
            Expr::Lit(_) => Ok(()),
            Expr::Var(name) => {
                if self.defined(name) {
                    Ok(())
                } else {
                    Err(format!("undefined variable `{name}`"))
                }
            }
            Expr::ArrayLit(items) => items.iter().try_for_each(|i| self.expr(i)),
            Expr::Unary(_, inner) => self.expr(inner),
            Expr::Binary(_, l, r) | Expr::Index(l, r) => {
                self.expr(l)?;
                self.expr(r)
            }
            Expr::Call(name, args) => {
                let arity = if *name == self.function.name {
                    Some(self.function.params.len())
                } else {
                    builtin_arity(name)
                };
                match arity {
                    None => Err(format!("unknown function `{name}`")),
                    Some(n) if n != args.len() => Err(format!("`{name}` takes {n} arguments, got {}", args.len())),
                    Some(_) => args.iter().try_for_each(|a| self.expr(a)),
                }
            }
        }
    }
}
