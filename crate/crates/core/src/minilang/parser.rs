use super::ast::{BinOp, Expr, Function, Param, Stmt, UnOp};
use super::lexer::{tokenize, ParseError, Tok, Token};
use crate::value::{Value, ValueType, MAX_ARRAY_DEPTH};

/// Nesting limit for blocks and expressions; keeps parsing total on
/// adversarial input.
const MAX_NESTING: usize = 128;

pub fn parse_function(source: &str) -> Result<Function, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { source, tokens, pos: 0, depth: 0 };
    let function = p.function()?;
    p.expect(Tok::Eof)?;
    Ok(function)
}

struct Parser<'a> {
    source: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].offset
    }

    fn bump(&mut self) -> Tok {
        let tok = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::at(self.source, self.offset(), message)
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        self.error(format!("expected {wanted}, found {}", self.peek()))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            Err(self.error("nesting too deep"))
        } else {
            Ok(())
        }
    }

    fn function(&mut self) -> Result<Function, ParseError> {
        self.expect(Tok::Fn)?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let name = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                params.push(Param { name, ty });
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma)?;
            }
        }
        self.expect(Tok::Arrow)?;
        let ret = self.ty()?;
        let body = self.block()?;
        Ok(Function { name, params, ret, body })
    }

    fn ty(&mut self) -> Result<ValueType, ParseError> {
        let start = self.offset();
        let ty = self.ty_inner(0)?;
        if ty.array_depth() > MAX_ARRAY_DEPTH {
            return Err(ParseError::at(self.source, start, "arrays nest at most two levels"));
        }
        Ok(ty)
    }

    fn ty_inner(&mut self, depth: usize) -> Result<ValueType, ParseError> {
        if depth > MAX_ARRAY_DEPTH {
            return Err(self.error("arrays nest at most two levels"));
        }
        let name = match self.peek() {
            Tok::Ident(name) => name.clone(),
            _ => return Err(self.unexpected("type")),
        };
        let ty = match name.as_str() {
            "int" => ValueType::Int,
            "double" => ValueType::Double,
            "bool" => ValueType::Bool,
            "string" => ValueType::String,
            "array" => {
                self.bump();
                self.expect(Tok::Lt)?;
                let inner = self.ty_inner(depth + 1)?;
                self.expect(Tok::Gt)?;
                return Ok(ValueType::array_of(inner));
            }
            _ => return Err(self.error(format!("unknown type `{name}`"))),
        };
        self.bump();
        Ok(ty)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.enter()?;
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if *self.peek() == Tok::Eof {
                return Err(self.unexpected("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        self.depth -= 1;
        Ok(stmts)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        match self.peek() {
            Tok::Let => {
                self.bump();
                let name = self.ident()?;
                self.expect(Tok::Assign)?;
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                Ok(Stmt::Let { name, value })
            }
            Tok::If => self.if_stmt(),
            Tok::While => {
                self.bump();
                let cond = self.expr()?;
                let body = self.block()?;
                Ok(Stmt::While { cond, body })
            }
            Tok::For => {
                self.bump();
                let var = self.ident()?;
                self.expect(Tok::In)?;
                let start = self.expr()?;
                self.expect(Tok::DotDot)?;
                let end = self.expr()?;
                let body = self.block()?;
                Ok(Stmt::For { var, start, end, body })
            }
            Tok::Return => {
                self.bump();
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                Ok(Stmt::Return(value))
            }
            Tok::Break => {
                self.bump();
                self.expect(Tok::Semi)?;
                Ok(Stmt::Break)
            }
            Tok::Continue => {
                self.bump();
                self.expect(Tok::Semi)?;
                Ok(Stmt::Continue)
            }
            _ => {
                let start = self.offset();
                let target = self.expr()?;
                if self.eat(&Tok::Assign) {
                    let value = self.expr()?;
                    self.expect(Tok::Semi)?;
                    return match target {
                        Expr::Var(name) => Ok(Stmt::Assign { name, value }),
                        Expr::Index(base, index) => match *base {
                            Expr::Var(name) => Ok(Stmt::AssignIndex { name, index: *index, value }),
                            _ => Err(ParseError::at(self.source, start, "invalid assignment target")),
                        },
                        _ => Err(ParseError::at(self.source, start, "invalid assignment target")),
                    };
                }
                self.expect(Tok::Semi)?;
                Ok(Stmt::Expr(target))
            }
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt, ParseError> {
        self.enter()?;
        self.expect(Tok::If)?;
        let cond = self.expr()?;
        let then_block = self.block()?;
        let else_block = if self.eat(&Tok::Else) {
            if *self.peek() == Tok::If {
                Some(vec![self.if_stmt()?])
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        self.depth -= 1;
        Ok(Stmt::If { cond, then_block, else_block })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || self.expr_inner())
    }

    fn expr_inner(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let e = self.binary(1)?;
        self.depth -= 1;
        Ok(e)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    /// Precedence climbing; every binary operator is left-associative.
    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            self.enter()?;
            let rhs = self.binary(prec + 1)?;
            self.depth -= 1;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                self.enter()?;
                // `-` directly before an integer literal forms the literal
                // itself; this is also the only way to write i64::MIN.
                if let Tok::Int(v) = *self.peek() {
                    if !matches!(self.peek_at(1), Tok::LBracket) {
                        self.bump();
                        self.depth -= 1;
                        return Ok(Expr::Lit(Value::Int((v as i128).wrapping_neg() as i64)));
                    }
                }
                let inner = self.unary()?;
                self.depth -= 1;
                Ok(match inner {
                    Expr::Lit(Value::Int(i)) if i != i64::MIN => Expr::Lit(Value::Int(-i)),
                    Expr::Lit(Value::Double(d)) => Expr::Lit(Value::Double(-d)),
                    other => Expr::Unary(UnOp::Neg, Box::new(other)),
                })
            }
            Tok::Bang => {
                self.bump();
                self.enter()?;
                let inner = self.unary()?;
                self.depth -= 1;
                Ok(Expr::Unary(UnOp::Not, Box::new(inner)))
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        while *self.peek() == Tok::LBracket {
            self.bump();
            let index = self.expr()?;
            self.expect(Tok::RBracket)?;
            e = Expr::Index(Box::new(e), Box::new(index));
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.bump() {
            Tok::Int(v) => {
                if v > i64::MAX as u64 {
                    Err(ParseError::at(self.source, offset, "integer literal out of range"))
                } else {
                    Ok(Expr::Lit(Value::Int(v as i64)))
                }
            }
            Tok::Double(d) => Ok(Expr::Lit(Value::Double(d))),
            Tok::Str(s) => Ok(Expr::Lit(Value::Str(s))),
            Tok::True => Ok(Expr::Lit(Value::Bool(true))),
            Tok::False => Ok(Expr::Lit(Value::Bool(false))),
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let args = self.list(Tok::RParen)?;
                    Ok(Expr::Call(name, args))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBracket => Ok(Expr::ArrayLit(self.list(Tok::RBracket)?)),
            tok => Err(ParseError::at(self.source, offset, format!("expected expression, found {tok}"))),
        }
    }

    fn list(&mut self, close: Tok) -> Result<Vec<Expr>, ParseError> {
        let mut items = Vec::new();
        if self.eat(&close) {
            return Ok(items);
        }
        loop {
            items.push(self.expr()?);
            if self.eat(&close) {
                return Ok(items);
            }
            self.expect(Tok::Comma)?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fig5_expression() {
        let f = parse_function("fn Puzzle(x:int)->int { return x + 17; }").unwrap();
        assert_eq!(f.name, "Puzzle");
        assert_eq!(
            f.body,
            vec![Stmt::Return(Expr::binary(BinOp::Add, Expr::var("x"), Expr::Lit(Value::Int(17))))]
        );
    }

    #[test]
    fn empty_source_fails_at_zero() {
        let err = parse_function("").unwrap_err();
        assert_eq!(err.offset, 0);
    }

    #[test]
    fn unbalanced_brace_points_at_the_offending_token() {
        let src = "fn Puzzle(x: int) -> int { if x > 0 { return 1; }";
        let err = parse_function(src).unwrap_err();
        assert_eq!(err.offset, src.len());
        assert!(err.message.contains("`}`"), "{}", err.message);

        let src = "fn Puzzle(x: int) -> int { return x; } }";
        let err = parse_function(src).unwrap_err();
        assert_eq!(err.offset, src.len() - 1);
    }

    #[test]
    fn precedence_and_negative_literals() {
        let f = parse_function("fn P(x: int) -> bool { return x * -3 + 1 < 2 || !(x == -9223372036854775808); }").unwrap();
        let Stmt::Return(e) = &f.body[0] else { panic!() };
        let Expr::Binary(BinOp::Or, lhs, rhs) = e else { panic!("{e:?}") };
        assert!(matches!(**lhs, Expr::Binary(BinOp::Lt, _, _)));
        let Expr::Unary(UnOp::Not, inner) = &**rhs else { panic!() };
        assert_eq!(**inner, Expr::binary(BinOp::Eq, Expr::var("x"), Expr::Lit(Value::Int(i64::MIN))));
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let src = format!("fn P(x: int) -> int {{ return {}x{}; }}", "(".repeat(10_000), ")".repeat(10_000));
        assert!(parse_function(&src).is_err());
        let src = format!("fn P(x: int) -> int {{ return {}x; }}", "-".repeat(10_000));
        assert!(parse_function(&src).is_err());
    }

    #[test]
    fn assignment_targets() {
        let f = parse_function("fn P(a: array<int>) -> array<int> { let b = a; b[0] = 1; b = push(b, 2); return b; }").unwrap();
        assert!(matches!(f.body[1], Stmt::AssignIndex { .. }));
        assert!(matches!(f.body[2], Stmt::Assign { .. }));
        assert!(parse_function("fn P(a: int) -> int { 1 = a; return a; }").is_err());
    }
}
