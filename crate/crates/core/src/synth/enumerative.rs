//! Bottom-up enumerative synthesis over minilang expressions with
//! observational-equivalence pruning.
//!
//! Every expression is represented by its output vector over the example
//! inputs. Two expressions with the same vector are interchangeable as
//! subterms, so only the first one found is kept. Expressions that fail on
//! any example are dropped.

use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use super::{fenced, Answer, BatchMode, FailureReason, GenerationRequest, SynthDescriptor, Synthesizer};
use crate::checker::values_equal;
use crate::example_engine::IOExample;
use crate::minilang::{self, apply_binary, apply_builtin, BinOp, EvalOutcome, Expr, Function, Param, RunLimits, Stmt, UnOp};
use crate::runner::param_names;
use crate::task::Signature;
use crate::value::{Value, ValueType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumOptions {
    pub max_depth: usize,
    /// Observational-equivalence pruning; off only for testing.
    pub prune: bool,
    /// Stop once this many expressions are stored.
    pub max_entries: usize,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions { max_depth: 3, prune: true, max_entries: 200_000 }
    }
}

/// Output vector with bitwise equality on doubles, usable as a hash key.
#[derive(Debug, Clone)]
struct Key(Vec<Value>);

fn hash_value<H: Hasher>(v: &Value, h: &mut H) {
    std::mem::discriminant(v).hash(h);
    match v {
        Value::Bool(b) => b.hash(h),
        Value::Int(i) => i.hash(h),
        Value::Double(d) => d.to_bits().hash(h),
        Value::Str(s) => s.hash(h),
        Value::Array(items) => {
            items.len().hash(h);
            items.iter().for_each(|i| hash_value(i, h));
        }
    }
}

fn same(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Double(x), Value::Double(y)) => x.to_bits() == y.to_bits(),
        (Value::Array(xs), Value::Array(ys)) => xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| same(x, y)),
        _ => a == b,
    }
}

impl Hash for Key {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.0.iter().for_each(|v| hash_value(v, h));
    }
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| same(a, b))
    }
}

impl Eq for Key {}

struct Entry {
    expr: Expr,
    ty: ValueType,
    values: Vec<Value>,
    depth: usize,
}

fn numeric(t: &ValueType) -> bool {
    matches!(t, ValueType::Int | ValueType::Double)
}

fn arith_type(l: &ValueType, r: &ValueType) -> Option<ValueType> {
    match (l, r) {
        (ValueType::Int, ValueType::Int) => Some(ValueType::Int),
        _ if numeric(l) && numeric(r) => Some(ValueType::Double),
        _ => None,
    }
}

enum Op {
    Unary(UnOp),
    Builtin1(&'static str),
    Binary(BinOp),
    Builtin2(&'static str),
    Index,
}

const UNARY_OPS: [Op; 6] = [
    Op::Unary(UnOp::Neg),
    Op::Unary(UnOp::Not),
    Op::Builtin1("len"),
    Op::Builtin1("abs"),
    Op::Builtin1("upper"),
    Op::Builtin1("lower"),
];

const BINARY_OPS: [Op; 17] = [
    Op::Binary(BinOp::Add),
    Op::Binary(BinOp::Sub),
    Op::Binary(BinOp::Mul),
    Op::Binary(BinOp::Div),
    Op::Binary(BinOp::Rem),
    Op::Binary(BinOp::Eq),
    Op::Binary(BinOp::Ne),
    Op::Binary(BinOp::Lt),
    Op::Binary(BinOp::Le),
    Op::Binary(BinOp::Gt),
    Op::Binary(BinOp::Ge),
    Op::Binary(BinOp::And),
    Op::Binary(BinOp::Or),
    Op::Builtin2("min"),
    Op::Builtin2("max"),
    Op::Builtin2("contains"),
    Op::Index,
];

fn unary_type(op: &Op, t: &ValueType) -> Option<ValueType> {
    match (op, t) {
        (Op::Unary(UnOp::Neg), t) if numeric(t) => Some(t.clone()),
        (Op::Unary(UnOp::Not), ValueType::Bool) => Some(ValueType::Bool),
        (Op::Builtin1("len"), ValueType::String | ValueType::Array(_)) => Some(ValueType::Int),
        (Op::Builtin1("abs"), t) if numeric(t) => Some(t.clone()),
        (Op::Builtin1("upper" | "lower"), ValueType::String) => Some(ValueType::String),
        _ => None,
    }
}

fn binary_type(op: &Op, l: &ValueType, r: &ValueType) -> Option<ValueType> {
    use ValueType as T;
    match op {
        Op::Binary(BinOp::Add) => match (l, r) {
            (T::String, T::String) => Some(T::String),
            (T::Array(a), T::Array(b)) if a == b => Some(l.clone()),
            _ => arith_type(l, r),
        },
        Op::Binary(BinOp::Sub | BinOp::Mul | BinOp::Div) => arith_type(l, r),
        Op::Binary(BinOp::Rem) => (l == &T::Int && r == &T::Int).then_some(T::Int),
        Op::Binary(BinOp::Eq | BinOp::Ne) => (l == r).then_some(T::Bool),
        Op::Binary(BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge) => {
            ((l == r && (numeric(l) || l == &T::String)) || (numeric(l) && numeric(r))).then_some(T::Bool)
        }
        Op::Binary(BinOp::And | BinOp::Or) => (l == &T::Bool && r == &T::Bool).then_some(T::Bool),
        Op::Builtin2("min" | "max") => arith_type(l, r),
        Op::Builtin2("contains") => match (l, r) {
            (T::String, T::String) => Some(T::Bool),
            (T::Array(e), r) if **e == *r => Some(T::Bool),
            _ => None,
        },
        Op::Index => match (l, r) {
            (T::Array(e), T::Int) => Some((**e).clone()),
            (T::String, T::Int) => Some(T::String),
            _ => None,
        },
        _ => None,
    }
}

fn index_value(container: &Value, index: &Value) -> Option<Value> {
    let Value::Int(i) = index else { return None };
    let i = usize::try_from(*i).ok()?;
    match container {
        Value::Array(items) => items.get(i).cloned(),
        Value::Str(s) => s.chars().nth(i).map(|c| Value::Str(c.to_string())),
        _ => None,
    }
}

fn apply_unary(op: &Op, v: &Value) -> Option<Value> {
    match (op, v) {
        (Op::Unary(UnOp::Neg), Value::Int(i)) => i.checked_neg().map(Value::Int),
        (Op::Unary(UnOp::Neg), Value::Double(d)) => Some(Value::Double(-d)),
        (Op::Unary(UnOp::Not), Value::Bool(b)) => Some(Value::Bool(!b)),
        (Op::Builtin1(name), v) => apply_builtin(name, std::slice::from_ref(v)),
        _ => None,
    }
}

fn apply_pair(op: &Op, l: &Value, r: &Value) -> Option<Value> {
    match (op, l, r) {
        (Op::Binary(BinOp::And), Value::Bool(a), Value::Bool(b)) => Some(Value::Bool(*a && *b)),
        (Op::Binary(BinOp::Or), Value::Bool(a), Value::Bool(b)) => Some(Value::Bool(*a || *b)),
        (Op::Binary(BinOp::And | BinOp::Or), _, _) => None,
        (Op::Binary(b), l, r) => apply_binary(*b, l, r),
        (Op::Builtin2(name), l, r) => apply_builtin(name, &[l.clone(), r.clone()]),
        (Op::Index, l, r) => index_value(l, r),
        _ => None,
    }
}

fn build_unary(op: &Op, e: Expr) -> Expr {
    match op {
        Op::Unary(u) => Expr::Unary(*u, Box::new(e)),
        Op::Builtin1(name) => Expr::Call(name.to_string(), vec![e]),
        _ => unreachable!("unary op"),
    }
}

fn build_binary(op: &Op, l: Expr, r: Expr) -> Expr {
    match op {
        Op::Binary(b) => Expr::binary(*b, l, r),
        Op::Builtin2(name) => Expr::Call(name.to_string(), vec![l, r]),
        Op::Index => Expr::Index(Box::new(l), Box::new(r)),
        _ => unreachable!("binary op"),
    }
}

struct Search<'a> {
    examples: &'a [IOExample],
    target: &'a ValueType,
    options: EnumOptions,
    entries: Vec<Entry>,
    seen: HashSet<Key>,
}

enum Step {
    Continue,
    Found(Expr),
    Full,
}

impl Search<'_> {
    fn matches_target(&self, ty: &ValueType, values: &[Value]) -> bool {
        let widen = *self.target == ValueType::Double && *ty == ValueType::Int;
        (ty == self.target || widen)
            && values.iter().zip(self.examples).all(|(v, ex)| match (v, widen) {
                (Value::Int(i), true) => values_equal(&Value::Double(*i as f64), &ex.expected),
                _ => values_equal(v, &ex.expected),
            })
    }

    fn offer(&mut self, expr: Expr, ty: ValueType, values: Vec<Value>, depth: usize) -> Step {
        if self.matches_target(&ty, &values) {
            return Step::Found(expr);
        }
        if self.options.prune && !self.seen.insert(Key(values.clone())) {
            return Step::Continue;
        }
        if self.entries.len() >= self.options.max_entries {
            return Step::Full;
        }
        self.entries.push(Entry { expr, ty, values, depth });
        Step::Continue
    }

    /// Only the final depth restricts result types: nothing built there is
    /// reused as a subterm.
    fn wanted(&self, ty: &ValueType, depth: usize) -> bool {
        depth < self.options.max_depth || ty == self.target || (*self.target == ValueType::Double && *ty == ValueType::Int)
    }

    fn grow(&mut self, depth: usize) -> Step {
        let existing = self.entries.len();
        for op in &UNARY_OPS {
            for i in 0..existing {
                let child = &self.entries[i];
                if child.depth != depth - 1 {
                    continue;
                }
                let Some(ty) = unary_type(op, &child.ty) else { continue };
                if !self.wanted(&ty, depth) {
                    continue;
                }
                let Some(values) = child.values.iter().map(|v| apply_unary(op, v)).collect::<Option<Vec<_>>>() else {
                    continue;
                };
                let expr = build_unary(op, child.expr.clone());
                match self.offer(expr, ty, values, depth) {
                    Step::Continue => {}
                    done => return done,
                }
            }
        }
        for op in &BINARY_OPS {
            for i in 0..existing {
                for j in 0..existing {
                    let (l, r) = (&self.entries[i], &self.entries[j]);
                    if l.depth.max(r.depth) != depth - 1 {
                        continue;
                    }
                    let Some(ty) = binary_type(op, &l.ty, &r.ty) else { continue };
                    if !self.wanted(&ty, depth) {
                        continue;
                    }
                    let Some(values) =
                        l.values.iter().zip(&r.values).map(|(a, b)| apply_pair(op, a, b)).collect::<Option<Vec<_>>>()
                    else {
                        continue;
                    };
                    let expr = build_binary(op, l.expr.clone(), r.expr.clone());
                    match self.offer(expr, ty, values, depth) {
                        Step::Continue => {}
                        done => return done,
                    }
                }
            }
        }
        Step::Continue
    }
}

fn leaves(signature: &Signature, examples: &[IOExample]) -> Vec<(Expr, ValueType, Option<Value>)> {
    let names = param_names(signature.params.len());
    let mut out: Vec<(Expr, ValueType, Option<Value>)> =
        names.iter().zip(&signature.params).map(|(n, t)| (Expr::var(n), t.clone(), None)).collect();
    let mut ints: Vec<i64> = vec![0, 1, 2];
    let mut note = |v: &Value| {
        let mut stack = vec![v];
        while let Some(v) = stack.pop() {
            match v {
                Value::Int(i) if !ints.contains(i) => ints.push(*i),
                Value::Array(items) => stack.extend(items),
                _ => {}
            }
        }
    };
    for ex in examples {
        ex.inputs.iter().for_each(&mut note);
        note(&ex.expected);
    }
    for i in ints {
        out.push((Expr::Lit(Value::Int(i)), ValueType::Int, Some(Value::Int(i))));
    }
    let types: Vec<&ValueType> = signature.params.iter().chain(std::iter::once(&signature.returns)).collect();
    let mentions = |label: &ValueType| types.iter().any(|t| *t == label || matches!(t, ValueType::Array(e) if **e == *label));
    if mentions(&ValueType::Double) {
        for d in [0.0, 1.0, 2.0, 0.5] {
            out.push((Expr::Lit(Value::Double(d)), ValueType::Double, Some(Value::Double(d))));
        }
    }
    for b in [true, false] {
        out.push((Expr::Lit(Value::Bool(b)), ValueType::Bool, Some(Value::Bool(b))));
    }
    if mentions(&ValueType::String) {
        out.push((Expr::Lit(Value::Str(String::new())), ValueType::String, Some(Value::Str(String::new()))));
    }
    out
}

fn program_for(signature: &Signature, expr: Expr) -> Function {
    Function {
        name: signature.name.clone(),
        params: param_names(signature.params.len())
            .into_iter()
            .zip(&signature.params)
            .map(|(name, ty)| Param { name, ty: ty.clone() })
            .collect(),
        ret: signature.returns.clone(),
        body: vec![Stmt::Return(expr)],
    }
}

/// First program consistent with every example, in (depth, enumeration)
/// order, re-checked by actually running it. `None` if the search is exhausted.
pub fn enumerate_synthesize(signature: &Signature, examples: &[IOExample], options: EnumOptions) -> Option<Function> {
    assert!(options.max_depth >= 1, "max_depth must be at least 1");
    let mut search = Search { examples, target: &signature.returns, options, entries: Vec::new(), seen: HashSet::new() };
    let mut found = None;
    for (expr, ty, constant) in leaves(signature, examples) {
        let values = match (&expr, constant) {
            (_, Some(c)) => vec![c; examples.len()],
            (Expr::Var(name), None) => {
                let idx = param_names(signature.params.len()).iter().position(|n| n == name).expect("parameter");
                examples.iter().map(|ex| ex.inputs[idx].clone()).collect()
            }
            _ => unreachable!("leaf"),
        };
        match search.offer(expr, ty, values, 1) {
            Step::Found(e) => {
                found = Some(e);
                break;
            }
            Step::Full => break,
            Step::Continue => {}
        }
    }
    if found.is_none() {
        for depth in 2..=options.max_depth {
            match search.grow(depth) {
                Step::Found(e) => {
                    found = Some(e);
                    break;
                }
                Step::Full => break,
                Step::Continue => {}
            }
        }
    }
    let function = program_for(signature, found?);
    // Soundness post-check through the real interpreter.
    let limits = RunLimits::default();
    let ok = examples.iter().all(|ex| {
        matches!(minilang::evaluate_function(&function, &ex.inputs, &limits),
            Ok(EvalOutcome::Value(v)) if values_equal(&v, &ex.expected))
    });
    ok.then_some(function)
}

/// Distinct output vectors reachable within `max_depth`, for checking that
/// pruning loses nothing.
pub fn observed_vectors(signature: &Signature, examples: &[IOExample], max_depth: usize, prune: bool) -> HashSet<String> {
    // An unreachable target keeps the search from stopping early.
    let never = ValueType::array_of(ValueType::array_of(ValueType::Bool));
    let options = EnumOptions { max_depth: max_depth + 1, prune, max_entries: usize::MAX };
    let mut search = Search { examples, target: &never, options, entries: Vec::new(), seen: HashSet::new() };
    for (expr, ty, constant) in leaves(signature, examples) {
        let values = match (&expr, constant) {
            (_, Some(c)) => vec![c; examples.len()],
            (Expr::Var(name), None) => {
                let idx = param_names(signature.params.len()).iter().position(|n| n == name).expect("parameter");
                examples.iter().map(|ex| ex.inputs[idx].clone()).collect()
            }
            _ => unreachable!("leaf"),
        };
        search.offer(expr, ty, values, 1);
    }
    for depth in 2..=max_depth {
        search.grow(depth);
    }
    search.entries.iter().map(|e| format!("{}:{:?}", e.ty, e.values)).collect()
}

pub struct EnumerativeSynthesizer {
    pub options: EnumOptions,
}

impl Synthesizer for EnumerativeSynthesizer {
    fn descriptor(&self) -> SynthDescriptor {
        SynthDescriptor {
            backend: "enumerative".into(),
            batch_mode: BatchMode::Local,
            detail: format!("max_depth={}", self.options.max_depth),
        }
    }

    fn generate(&self, request: &GenerationRequest<'_>, n: usize) -> Vec<Answer> {
        if !request.profile.is_minilang() {
            return vec![Answer::failed(FailureReason::Backend, "the enumerative backend only emits minilang"); n];
        }
        let answer = match enumerate_synthesize(&request.task.signature, request.visible, self.options) {
            Some(f) => Answer::Text(fenced(&f.to_string(), request.profile)),
            None => Answer::Text(format!(
                "No expression of depth at most {} is consistent with the examples.",
                self.options.max_depth
            )),
        };
        vec![answer; n]
    }
}

/// Source check used by tests and the acceptance suite.
pub fn expr_source(function: &Function) -> Option<String> {
    match function.body.as_slice() {
        [Stmt::Return(e)] => Some(minilang::expr_to_string(e)),
        _ => None,
    }
}
