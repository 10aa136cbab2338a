use crate::value::{Value, ValueType};

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: ValueType,
}

/// A single function definition; the whole of a mini-language program.
#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: ValueType,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Let { name: String, value: Expr },
    Assign { name: String, value: Expr },
    AssignIndex { name: String, index: Expr, value: Expr },
    If { cond: Expr, then_block: Vec<Stmt>, else_block: Option<Vec<Stmt>> },
    While { cond: Expr, body: Vec<Stmt> },
    /// `for var in start..end { body }`, end exclusive.
    For { var: String, start: Expr, end: Expr, body: Vec<Stmt> },
    Return(Expr),
    Break,
    Continue,
    Expr(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }
}

/// Scalar literals live in `Lit`; array literals are `ArrayLit` so that
/// their elements can be arbitrary expressions.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Value),
    Var(String),
    ArrayLit(Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    /// Build the literal expression for a value.
    pub fn literal(value: &Value) -> Expr {
        match value {
            Value::Array(items) => Expr::ArrayLit(items.iter().map(Expr::literal).collect()),
            v => Expr::Lit(v.clone()),
        }
    }

    /// Evaluate a literal-only expression (scalars, arrays of literals and
    /// negated numeric literals).
    pub fn const_value(&self) -> Option<Value> {
        match self {
            Expr::Lit(v) => Some(v.clone()),
            Expr::ArrayLit(items) => items.iter().map(Expr::const_value).collect::<Option<Vec<_>>>().map(Value::Array),
            Expr::Unary(UnOp::Neg, inner) => match inner.const_value()? {
                Value::Int(i) => i.checked_neg().map(Value::Int),
                Value::Double(d) => Some(Value::Double(-d)),
                _ => None,
            },
            _ => None,
        }
    }
}

/// Built-in functions: name and accepted arities.
pub const BUILTINS: &[(&str, usize)] = &[
    ("len", 1),
    ("substr", 3),
    ("push", 2),
    ("abs", 1),
    ("min", 2),
    ("max", 2),
    ("to_int", 1),
    ("to_double", 1),
    ("str", 1),
    ("upper", 1),
    ("lower", 1),
    ("ord", 1),
    ("chr", 1),
    ("sqrt", 1),
    ("floor", 1),
    ("contains", 2),
];

pub fn builtin_arity(name: &str) -> Option<usize> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, a)| *a)
}
