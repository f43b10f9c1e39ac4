use super::lexer::{Token, TokenKind};
use super::{BinaryOp, Expr, Function, ParseError};

/// Functions rejected because they are not smooth.
const NON_SMOOTH: &[&str] = &["abs", "sign", "floor", "ceil", "min", "max"];

pub fn parse_tokens(tokens: &[Token]) -> Result<Expr, ParseError> {
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expr()?;
    match parser.peek() {
        None => Ok(expr),
        Some(tok) if tok.kind == TokenKind::RParen => Err(ParseError::Unbalanced { offset: tok.offset }),
        Some(tok) => Err(unexpected(tok)),
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

fn describe(kind: &TokenKind) -> String {
    match kind {
        TokenKind::Number(v) => format!("number {v}"),
        TokenKind::Ident(name) => format!("identifier {name}"),
        TokenKind::Plus => "'+'".into(),
        TokenKind::Minus => "'-'".into(),
        TokenKind::Star => "'*'".into(),
        TokenKind::Slash => "'/'".into(),
        TokenKind::Caret => "'^'".into(),
        TokenKind::LParen => "'('".into(),
        TokenKind::RParen => "')'".into(),
        TokenKind::Comma => "','".into(),
    }
}

fn unexpected(tok: &Token) -> ParseError {
    ParseError::Unexpected { offset: tok.offset, found: describe(&tok.kind) }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&'a TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let tok = self.tokens.get(self.pos);
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinaryOp::Add,
                Some(TokenKind::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Star) => BinaryOp::Mul,
                Some(TokenKind::Slash) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek_kind() == Some(&TokenKind::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek_kind() == Some(&TokenKind::Caret) {
            self.pos += 1;
            let exponent = self.exponent()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        if self.peek_kind() == Some(&TokenKind::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.exponent()?)));
        }
        self.power()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let tok = self.next().ok_or(ParseError::UnexpectedEnd)?;
        match &tok.kind {
            TokenKind::Number(v) => Ok(Expr::Const(*v)),
            TokenKind::LParen => {
                let inner = self.expr()?;
                match self.next() {
                    Some(t) if t.kind == TokenKind::RParen => Ok(inner),
                    Some(t) => Err(unexpected(t)),
                    None => Err(ParseError::Unbalanced { offset: tok.offset }),
                }
            }
            TokenKind::Ident(name) => {
                if self.peek_kind() == Some(&TokenKind::LParen) {
                    return self.call(name, tok.offset);
                }
                if Function::from_name(name).is_some() {
                    return Err(ParseError::ReservedName { name: name.clone(), offset: tok.offset });
                }
                Ok(Expr::Ident(name.clone()))
            }
            _ => Err(unexpected(tok)),
        }
    }

    fn call(&mut self, name: &str, offset: usize) -> Result<Expr, ParseError> {
        let func = match Function::from_name(name) {
            Some(f) => f,
            None if NON_SMOOTH.contains(&name) => {
                return Err(ParseError::NonSmooth { name: name.to_string(), offset });
            }
            None => return Err(ParseError::UnknownFunction { name: name.to_string(), offset }),
        };
        let open = self.next().expect("caller checked for '('");
        let mut args = Vec::new();
        if self.peek_kind() == Some(&TokenKind::RParen) {
            self.pos += 1;
        } else {
            loop {
                args.push(self.expr()?);
                match self.next() {
                    Some(t) if t.kind == TokenKind::Comma => continue,
                    Some(t) if t.kind == TokenKind::RParen => break,
                    Some(t) => return Err(unexpected(t)),
                    None => return Err(ParseError::Unbalanced { offset: open.offset }),
                }
            }
        }
        if args.len() != func.arity() {
            return Err(ParseError::Arity {
                name: name.to_string(),
                expected: func.arity(),
                got: args.len(),
                offset,
            });
        }
        Ok(Expr::Call(func, args))
    }
}
