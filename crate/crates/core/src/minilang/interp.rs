//! Tree-walking interpreter with a step budget and a wall-clock limit.

use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::ast::{BinOp, Expr, Function, Stmt, UnOp};
use crate::value::{Value, ValueType};

// Deep recursion in the evaluated program must not exhaust the host stack.
const STACK_RED_ZONE: usize = 64 * 1024;
const STACK_SEGMENT: usize = 1024 * 1024;

/// Maximum depth of recursive calls to the program's own function.
const MAX_CALL_DEPTH: usize = 200;
/// How often (in steps) the wall clock is consulted.
const CLOCK_STRIDE: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLimits {
    pub step_budget: u64,
    pub wall_clock_ms: u64,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits { step_budget: 1_000_000, wall_clock_ms: 5000 }
    }
}

impl RunLimits {
    pub fn is_valid(&self) -> bool {
        self.step_budget > 0 && self.wall_clock_ms > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuntimeErrorKind {
    DivisionByZero,
    IndexOutOfRange,
    TypeError,
    Overflow,
    NonFinite,
    InvalidArgument,
    StackOverflow,
    MissingReturn,
    UndefinedVariable,
}

impl fmt::Display for RuntimeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalOutcome {
    Value(Value),
    RuntimeError { kind: RuntimeErrorKind, detail: String },
    Timeout,
}

/// Inputs that do not fit the function's parameter list.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("contract violation: {0}")]
pub struct ContractViolation(pub String);

enum Fault {
    Error(RuntimeErrorKind, String),
    Timeout,
}

type Eval<T> = Result<T, Fault>;

fn err<T>(kind: RuntimeErrorKind, detail: impl Into<String>) -> Eval<T> {
    Err(Fault::Error(kind, detail.into()))
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Value),
}

pub fn evaluate(function: &Function, inputs: &[Value], limits: &RunLimits) -> Result<EvalOutcome, ContractViolation> {
    if inputs.len() != function.params.len() {
        return Err(ContractViolation(format!(
            "expected {} arguments, got {}",
            function.params.len(),
            inputs.len()
        )));
    }
    for (param, value) in function.params.iter().zip(inputs) {
        if !value.conforms_to(&param.ty) {
            return Err(ContractViolation(format!("argument `{}` is not a {}", param.name, param.ty)));
        }
    }
    let mut machine = Machine {
        function,
        steps: 0,
        budget: limits.step_budget,
        deadline: Instant::now() + Duration::from_millis(limits.wall_clock_ms),
        depth: 0,
    };
    Ok(match machine.call(inputs.to_vec()) {
        Ok(v) => EvalOutcome::Value(v),
        Err(Fault::Error(kind, detail)) => EvalOutcome::RuntimeError { kind, detail },
        Err(Fault::Timeout) => EvalOutcome::Timeout,
    })
}

struct Machine<'a> {
    function: &'a Function,
    steps: u64,
    budget: u64,
    deadline: Instant,
    depth: usize,
}

struct Env {
    vars: Vec<(String, Value)>,
}

impl Env {
    fn get(&self, name: &str) -> Eval<&Value> {
        match self.vars.iter().rev().find(|(n, _)| n == name) {
            Some((_, v)) => Ok(v),
            None => err(RuntimeErrorKind::UndefinedVariable, format!("`{name}` is not defined")),
        }
    }

    fn get_mut(&mut self, name: &str) -> Eval<&mut Value> {
        match self.vars.iter_mut().rev().find(|(n, _)| n == name) {
            Some((_, v)) => Ok(v),
            None => err(RuntimeErrorKind::UndefinedVariable, format!("`{name}` is not defined")),
        }
    }
}

fn coerce_return(value: Value, ty: &ValueType) -> Eval<Value> {
    let value = promote(value, ty);
    if value.conforms_to(ty) {
        Ok(value)
    } else {
        err(RuntimeErrorKind::TypeError, format!("returned {} where {} was declared", value.label(), ty))
    }
}

/// Implicit int-to-double widening, applied at return.
fn promote(value: Value, ty: &ValueType) -> Value {
    match (value, ty) {
        (Value::Int(i), ValueType::Double) => Value::Double(i as f64),
        (Value::Array(items), ValueType::Array(elem)) => {
            Value::Array(items.into_iter().map(|v| promote(v, elem)).collect())
        }
        (v, _) => v,
    }
}

fn finite(d: f64) -> Eval<Value> {
    if d.is_finite() {
        Ok(Value::Double(d))
    } else {
        err(RuntimeErrorKind::NonFinite, "non-finite double")
    }
}

fn as_bool(v: &Value, what: &str) -> Eval<bool> {
    match v {
        Value::Bool(b) => Ok(*b),
        other => err(RuntimeErrorKind::TypeError, format!("{what} must be bool, got {}", other.label())),
    }
}

fn as_int(v: &Value, what: &str) -> Eval<i64> {
    match v {
        Value::Int(i) => Ok(*i),
        other => err(RuntimeErrorKind::TypeError, format!("{what} must be int, got {}", other.label())),
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Double(d) => Some(*d),
        _ => None,
    }
}

fn overflow<T>() -> Eval<T> {
    err(RuntimeErrorKind::Overflow, "integer overflow")
}

fn index_of(len: usize, i: i64) -> Eval<usize> {
    if i < 0 || i as u128 >= len as u128 {
        err(RuntimeErrorKind::IndexOutOfRange, format!("index {i} out of range for length {len}"))
    } else {
        Ok(i as usize)
    }
}

/// Structural equality; ints and doubles compare numerically.
fn equal(a: &Value, b: &Value) -> Eval<bool> {
    Ok(match (a, b) {
        (Value::Int(x), Value::Int(y)) => x == y,
        (Value::Int(_) | Value::Double(_), Value::Int(_) | Value::Double(_)) => as_f64(a) == as_f64(b),
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::Array(xs), Value::Array(ys)) => {
            if xs.len() != ys.len() {
                return Ok(false);
            }
            for (x, y) in xs.iter().zip(ys) {
                if !equal(x, y)? {
                    return Ok(false);
                }
            }
            true
        }
        _ => return err(RuntimeErrorKind::TypeError, format!("cannot compare {} with {}", a.label(), b.label())),
    })
}

impl Machine<'_> {
    fn tick(&mut self) -> Eval<()> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(Fault::Timeout);
        }
        if self.steps % CLOCK_STRIDE == 0 && Instant::now() >= self.deadline {
            return Err(Fault::Timeout);
        }
        Ok(())
    }

    fn call(&mut self, args: Vec<Value>) -> Eval<Value> {
        if self.depth >= MAX_CALL_DEPTH {
            return err(RuntimeErrorKind::StackOverflow, "call depth exceeded");
        }
        self.depth += 1;
        let function = self.function;
        let mut env = Env {
            vars: function.params.iter().map(|p| p.name.clone()).zip(args).collect(),
        };
        let flow = self.block(&function.body, &mut env)?;
        self.depth -= 1;
        match flow {
            Flow::Return(v) => coerce_return(v, &function.ret),
            _ => err(RuntimeErrorKind::MissingReturn, "function ended without returning"),
        }
    }

    fn block(&mut self, stmts: &[Stmt], env: &mut Env) -> Eval<Flow> {
        stacker::maybe_grow(STACK_RED_ZONE, STACK_SEGMENT, || self.block_inner(stmts, env))
    }

    fn block_inner(&mut self, stmts: &[Stmt], env: &mut Env) -> Eval<Flow> {
        let mark = env.vars.len();
        let mut flow = Flow::Normal;
        for s in stmts {
            flow = self.stmt(s, env)?;
            if !matches!(flow, Flow::Normal) {
                break;
            }
        }
        env.vars.truncate(mark);
        Ok(flow)
    }

    fn stmt(&mut self, s: &Stmt, env: &mut Env) -> Eval<Flow> {
        self.tick()?;
        match s {
            Stmt::Let { name, value } => {
                let v = self.expr(value, env)?;
                env.vars.push((name.clone(), v));
            }
            Stmt::Assign { name, value } => {
                let v = self.expr(value, env)?;
                *env.get_mut(name)? = v;
            }
            Stmt::AssignIndex { name, index, value } => {
                let i = self.expr(index, env)?;
                let i = as_int(&i, "index")?;
                let v = self.expr(value, env)?;
                match env.get_mut(name)? {
                    Value::Array(items) => {
                        let at = index_of(items.len(), i)?;
                        if let Some(first) = items.iter().find(|x| x.label() != v.label()) {
                            return err(RuntimeErrorKind::TypeError, format!("cannot store {} in array of {}", v.label(), first.label()));
                        }
                        items[at] = v;
                    }
                    other => return err(RuntimeErrorKind::TypeError, format!("cannot index-assign into {}", other.label())),
                }
            }
            Stmt::If { cond, then_block, else_block } => {
                let c = self.expr(cond, env)?;
                if as_bool(&c, "condition")? {
                    return self.block(then_block, env);
                } else if let Some(block) = else_block {
                    return self.block(block, env);
                }
            }
            Stmt::While { cond, body } => loop {
                let c = self.expr(cond, env)?;
                if !as_bool(&c, "condition")? {
                    break;
                }
                match self.block(body, env)? {
                    Flow::Break => break,
                    Flow::Return(v) => return Ok(Flow::Return(v)),
                    Flow::Normal | Flow::Continue => {}
                }
                self.tick()?;
            },
            Stmt::For { var, start, end, body } => {
                let lo = self.expr(start, env)?;
                let lo = as_int(&lo, "range start")?;
                let hi = self.expr(end, env)?;
                let hi = as_int(&hi, "range end")?;
                let mut i = lo;
                while i < hi {
                    env.vars.push((var.clone(), Value::Int(i)));
                    let flow = self.block(body, env);
                    env.vars.pop();
                    match flow? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                    self.tick()?;
                    i += 1;
                }
            }
            Stmt::Return(e) => return Ok(Flow::Return(self.expr(e, env)?)),
            Stmt::Break => return Ok(Flow::Break),
            Stmt::Continue => return Ok(Flow::Continue),
            Stmt::Expr(e) => {
                self.expr(e, env)?;
            }
        }
        Ok(Flow::Normal)
    }

    fn expr(&mut self, e: &Expr, env: &mut Env) -> Eval<Value> {
        stacker::maybe_grow(STACK_RED_ZONE, STACK_SEGMENT, || self.expr_inner(e, env))
    }

    fn expr_inner(&mut self, e: &Expr, env: &mut Env) -> Eval<Value> {
        self.tick()?;
        match e {
            Expr::Lit(v) => Ok(v.clone()),
            Expr::Var(name) => env.get(name).cloned(),
            Expr::ArrayLit(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    let v = self.expr(item, env)?;
                    if let Some(first) = out.first() {
                        if Value::label(first) != v.label() {
                            return err(RuntimeErrorKind::TypeError, "array literal mixes element kinds");
                        }
                    }
                    out.push(v);
                }
                Ok(Value::Array(out))
            }
            Expr::Unary(op, inner) => {
                let v = self.expr(inner, env)?;
                match (op, v) {
                    (UnOp::Not, v) => Ok(Value::Bool(!as_bool(&v, "operand of `!`")?)),
                    (UnOp::Neg, Value::Int(i)) => i.checked_neg().map(Value::Int).map_or_else(overflow, Ok),
                    (UnOp::Neg, Value::Double(d)) => Ok(Value::Double(-d)),
                    (UnOp::Neg, v) => err(RuntimeErrorKind::TypeError, format!("cannot negate {}", v.label())),
                }
            }
            Expr::Binary(BinOp::And, lhs, rhs) => {
                let l = self.expr(lhs, env)?;
                if !as_bool(&l, "operand of `&&`")? {
                    return Ok(Value::Bool(false));
                }
                let r = self.expr(rhs, env)?;
                Ok(Value::Bool(as_bool(&r, "operand of `&&`")?))
            }
            Expr::Binary(BinOp::Or, lhs, rhs) => {
                let l = self.expr(lhs, env)?;
                if as_bool(&l, "operand of `||`")? {
                    return Ok(Value::Bool(true));
                }
                let r = self.expr(rhs, env)?;
                Ok(Value::Bool(as_bool(&r, "operand of `||`")?))
            }
            Expr::Binary(op, lhs, rhs) => {
                let l = self.expr(lhs, env)?;
                let r = self.expr(rhs, env)?;
                binary(*op, l, r)
            }
            Expr::Index(base, index) => {
                let b = self.expr(base, env)?;
                let i = self.expr(index, env)?;
                let i = as_int(&i, "index")?;
                match b {
                    Value::Array(mut items) => {
                        let at = index_of(items.len(), i)?;
                        Ok(items.swap_remove(at))
                    }
                    Value::Str(s) => {
                        let count = s.chars().count();
                        let at = index_of(count, i)?;
                        Ok(Value::Str(s.chars().nth(at).map(String::from).unwrap_or_default()))
                    }
                    other => err(RuntimeErrorKind::TypeError, format!("cannot index into {}", other.label())),
                }
            }
            Expr::Call(name, args) => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.expr(a, env)?);
                }
                if *name == self.function.name {
                    if values.len() != self.function.params.len() {
                        return err(RuntimeErrorKind::TypeError, "wrong number of arguments in recursive call");
                    }
                    for (p, v) in self.function.params.iter().zip(&values) {
                        if !v.conforms_to(&p.ty) {
                            return err(RuntimeErrorKind::TypeError, format!("argument `{}` is not a {}", p.name, p.ty));
                        }
                    }
                    return self.call(values);
                }
                builtin(name, values)
            }
        }
    }
}

fn binary(op: BinOp, l: Value, r: Value) -> Eval<Value> {
    use Value::{Double, Int, Str};
    match op {
        BinOp::Eq => equal(&l, &r).map(Value::Bool),
        BinOp::Ne => equal(&l, &r).map(|b| Value::Bool(!b)),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let ord = match (&l, &r) {
                (Int(a), Int(b)) => a.cmp(b),
                (Str(a), Str(b)) => a.cmp(b),
                _ => match (as_f64(&l), as_f64(&r)) {
                    (Some(a), Some(b)) => a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal),
                    _ => {
                        return err(RuntimeErrorKind::TypeError, format!("cannot order {} and {}", l.label(), r.label()))
                    }
                },
            };
            Ok(Value::Bool(match op {
                BinOp::Lt => ord.is_lt(),
                BinOp::Le => ord.is_le(),
                BinOp::Gt => ord.is_gt(),
                _ => ord.is_ge(),
            }))
        }
        BinOp::Add => match (l, r) {
            (Int(a), Int(b)) => a.checked_add(b).map(Int).map_or_else(overflow, Ok),
            (Str(a), Str(b)) => Ok(Str(a + &b)),
            (Value::Array(mut a), Value::Array(b)) => {
                if let (Some(x), Some(y)) = (a.first(), b.first()) {
                    if x.label() != y.label() {
                        return err(RuntimeErrorKind::TypeError, "cannot concatenate arrays of different kinds");
                    }
                }
                a.extend(b);
                Ok(Value::Array(a))
            }
            (l, r) => numeric(op, &l, &r),
        },
        BinOp::Sub => match (l, r) {
            (Int(a), Int(b)) => a.checked_sub(b).map(Int).map_or_else(overflow, Ok),
            (l, r) => numeric(op, &l, &r),
        },
        BinOp::Mul => match (l, r) {
            (Int(a), Int(b)) => a.checked_mul(b).map(Int).map_or_else(overflow, Ok),
            (l, r) => numeric(op, &l, &r),
        },
        BinOp::Div => match (l, r) {
            (Int(_), Int(0)) => err(RuntimeErrorKind::DivisionByZero, "division by zero"),
            (Int(a), Int(b)) => a.checked_div(b).map(Int).map_or_else(overflow, Ok),
            (l, r) => {
                if as_f64(&r) == Some(0.0) {
                    return err(RuntimeErrorKind::DivisionByZero, "division by zero");
                }
                numeric(op, &l, &r)
            }
        },
        BinOp::Rem => match (l, r) {
            (Int(_), Int(0)) => err(RuntimeErrorKind::DivisionByZero, "remainder by zero"),
            (Int(a), Int(b)) => a.checked_rem(b).map(Int).map_or_else(overflow, Ok),
            (l, r) => err(RuntimeErrorKind::TypeError, format!("`%` needs ints, got {} and {}", l.label(), r.label())),
        },
        BinOp::And | BinOp::Or => unreachable!("short-circuit operators are handled by the evaluator"),
    }
    .and_then(|v| match v {
        Double(d) => finite(d),
        v => Ok(v),
    })
}

fn numeric(op: BinOp, l: &Value, r: &Value) -> Eval<Value> {
    let (Some(a), Some(b)) = (as_f64(l), as_f64(r)) else {
        return err(
            RuntimeErrorKind::TypeError,
            format!("`{}` is not defined for {} and {}", op.symbol(), l.label(), r.label()),
        );
    };
    finite(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => a / b,
        _ => unreachable!(),
    })
}

fn builtin(name: &str, args: Vec<Value>) -> Eval<Value> {
    use Value::{Array, Bool, Double, Int, Str};
    let kinds = || args.iter().map(|a| a.label().to_string()).collect::<Vec<_>>().join(", ");
    let bad = || err(RuntimeErrorKind::TypeError, format!("{name}({}) is not defined", kinds()));
    match (name, args.as_slice()) {
        ("len", [Str(s)]) => Ok(Int(s.chars().count() as i64)),
        ("len", [Array(a)]) => Ok(Int(a.len() as i64)),
        ("substr", [Str(s), Int(start), Int(count)]) => {
            let n = s.chars().count() as i64;
            if *start < 0 || *count < 0 || start.checked_add(*count).is_none_or(|end| end > n) {
                return err(RuntimeErrorKind::IndexOutOfRange, format!("substr({start}, {count}) out of range for length {n}"));
            }
            Ok(Str(s.chars().skip(*start as usize).take(*count as usize).collect()))
        }
        ("push", [Array(a), v]) => {
            if let Some(first) = a.first() {
                if first.label() != v.label() {
                    return err(RuntimeErrorKind::TypeError, "push of mismatched element kind");
                }
            }
            let mut out = a.clone();
            out.push(v.clone());
            Ok(Array(out))
        }
        ("abs", [Int(i)]) => i.checked_abs().map(Int).map_or_else(overflow, Ok),
        ("abs", [Double(d)]) => Ok(Double(d.abs())),
        ("min" | "max", [Int(a), Int(b)]) => Ok(Int(if name == "min" { *a.min(b) } else { *a.max(b) })),
        ("min" | "max", [a, b]) => match (as_f64(a), as_f64(b)) {
            (Some(x), Some(y)) => Ok(Double(if name == "min" { x.min(y) } else { x.max(y) })),
            _ => bad(),
        },
        ("to_int", [Int(i)]) => Ok(Int(*i)),
        ("to_int", [Double(d)]) => {
            let t = d.trunc();
            if t < -9.223_372_036_854_776e18 || t >= 9.223_372_036_854_776e18 {
                overflow()
            } else {
                Ok(Int(t as i64))
            }
        }
        ("to_double", [v]) => as_f64(v).map_or_else(bad, |d| Ok(Double(d))),
        ("str", [Int(i)]) => Ok(Str(i.to_string())),
        ("str", [Double(d)]) => Ok(Str(crate::value::format_double(*d))),
        ("str", [Bool(b)]) => Ok(Str(b.to_string())),
        ("str", [Str(s)]) => Ok(Str(s.clone())),
        ("upper", [Str(s)]) => Ok(Str(s.to_uppercase())),
        ("lower", [Str(s)]) => Ok(Str(s.to_lowercase())),
        ("ord", [Str(s)]) => {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(Int(c as i64)),
                _ => err(RuntimeErrorKind::InvalidArgument, "ord expects a single character"),
            }
        }
        ("chr", [Int(i)]) => u32::try_from(*i)
            .ok()
            .and_then(char::from_u32)
            .map(|c| Str(c.to_string()))
            .map_or_else(|| err(RuntimeErrorKind::InvalidArgument, format!("chr({i}) is not a character")), Ok),
        ("sqrt", [v]) => match as_f64(v) {
            Some(d) if d >= 0.0 => Ok(Double(d.sqrt())),
            Some(_) => err(RuntimeErrorKind::InvalidArgument, "sqrt of a negative number"),
            None => bad(),
        },
        ("floor", [Double(d)]) => builtin("to_int", vec![Double(d.floor())]),
        ("floor", [Int(i)]) => Ok(Int(*i)),
        ("contains", [Str(s), Str(sub)]) => Ok(Bool(s.contains(sub.as_str()))),
        ("contains", [Array(a), v]) => {
            for item in a {
                if equal(item, v)? {
                    return Ok(Bool(true));
                }
            }
            Ok(Bool(false))
        }
        _ => bad(),
    }
    .and_then(|v| match v {
        Double(d) => finite(d),
        v => Ok(v),
    })
}

/// Fault-free view of binary/builtin evaluation for the enumerator, which
/// composes operators over precomputed value vectors.
pub(crate) fn apply_binary(op: BinOp, l: &Value, r: &Value) -> Option<Value> {
    binary(op, l.clone(), r.clone()).ok()
}

pub(crate) fn apply_builtin(name: &str, args: &[Value]) -> Option<Value> {
    builtin(name, args.to_vec()).ok()
}
