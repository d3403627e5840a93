// SPDX-License-Identifier: Apache-2.0

//! Lexer and recursive-descent parser for `.mrl` sources.

use super::ast::*;
use super::typeck;
use super::LangError;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Fn,
    In,
    Let,
    If,
    Else,
    While,
    Return,
    True,
    False,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Assign,
    Op(BinOp),
    Not,
    Minus,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, LangError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let bump = |i: &mut usize, col: &mut usize, n: usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                bump(&mut i, &mut col, 1);
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            _ => {}
        }
        let peek = chars.get(i + 1).copied();
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            ',' => (Tok::Comma, 1),
            ';' => (Tok::Semi, 1),
            '+' => (Tok::Op(BinOp::Add), 1),
            '-' => (Tok::Minus, 1),
            '*' => (Tok::Op(BinOp::Mul), 1),
            '/' => (Tok::Op(BinOp::Div), 1),
            '%' => (Tok::Op(BinOp::Rem), 1),
            '=' if peek == Some('=') => (Tok::Op(BinOp::Eq), 2),
            '=' => (Tok::Assign, 1),
            '!' if peek == Some('=') => (Tok::Op(BinOp::Ne), 2),
            '!' => (Tok::Not, 1),
            '<' if peek == Some('=') => (Tok::Op(BinOp::Le), 2),
            '<' => (Tok::Op(BinOp::Lt), 1),
            '>' if peek == Some('=') => (Tok::Op(BinOp::Ge), 2),
            '>' => (Tok::Op(BinOp::Gt), 1),
            '&' if peek == Some('&') => (Tok::Op(BinOp::And), 2),
            '|' if peek == Some('|') => (Tok::Op(BinOp::Or), 2),
            c if c.is_ascii_digit() => {
                let start = i;
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let text: String = chars[start..j].iter().collect();
                let v = text.parse::<i64>().map_err(|_| LangError::Syntax {
                    line: tl,
                    col: tc,
                    message: format!("integer literal `{text}` out of range"),
                })?;
                (Tok::Int(v), j - start)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[start..j].iter().collect();
                let tok = match word.as_str() {
                    "fn" => Tok::Fn,
                    "in" => Tok::In,
                    "let" => Tok::Let,
                    "if" => Tok::If,
                    "else" => Tok::Else,
                    "while" => Tok::While,
                    "return" => Tok::Return,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "and" => Tok::Op(BinOp::And),
                    "or" => Tok::Op(BinOp::Or),
                    "not" => Tok::Not,
                    _ => Tok::Ident(word),
                };
                (tok, j - start)
            }
            other => {
                return Err(LangError::Syntax {
                    line: tl,
                    col: tc,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        bump(&mut i, &mut col, len);
        out.push(Token {
            tok,
            line: tl,
            col: tc,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, LangError> {
        let t = &self.toks[self.pos];
        Err(LangError::Syntax {
            line: t.line,
            col: t.col,
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), LangError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, LangError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.next();
                Ok(name)
            }
            _ => self.error(format!("expected {what}")),
        }
    }

    fn signed_int(&mut self) -> Result<i64, LangError> {
        let neg = if *self.peek() == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        match *self.peek() {
            Tok::Int(v) => {
                self.next();
                Ok(if neg { -v } else { v })
            }
            _ => self.error("expected integer"),
        }
    }

    fn program(&mut self) -> Result<Program, LangError> {
        let mut functions = Vec::new();
        while *self.peek() != Tok::Eof {
            functions.push(self.function()?);
        }
        Ok(Program { functions })
    }

    fn function(&mut self) -> Result<FunctionDef, LangError> {
        self.expect(Tok::Fn, "`fn`")?;
        let name = self.ident("function name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let pname = self.ident("parameter name")?;
                self.expect(Tok::In, "`in`")?;
                self.expect(Tok::LBracket, "`[`")?;
                let lo = self.signed_int()?;
                self.expect(Tok::Comma, "`,`")?;
                let hi = self.signed_int()?;
                self.expect(Tok::RBracket, "`]`")?;
                params.push(Param {
                    name: pname,
                    domain: Domain::new(lo, hi),
                });
                if *self.peek() == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        let body = self.block()?;
        Ok(FunctionDef { name, params, body })
    }

    fn block(&mut self) -> Result<Block, LangError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return self.error("unterminated block");
            }
            stmts.push(self.stmt()?);
        }
        self.next();
        Ok(Block::new(stmts))
    }

    fn stmt(&mut self) -> Result<Stmt, LangError> {
        let kind = match self.peek().clone() {
            Tok::Let => {
                self.next();
                let name = self.ident("variable name")?;
                self.expect(Tok::Assign, "`=`")?;
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Let { name, value }
            }
            Tok::Ident(name) => {
                self.next();
                self.expect(Tok::Assign, "`=`")?;
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Assign { name, value }
            }
            Tok::If => {
                self.next();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let then_block = self.block()?;
                let else_block = if *self.peek() == Tok::Else {
                    self.next();
                    Some(self.block()?)
                } else {
                    None
                };
                StmtKind::If {
                    cond,
                    then_block,
                    else_block,
                }
            }
            Tok::While => {
                self.next();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::Return => {
                self.next();
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Return(value)
            }
            _ => return self.error("expected statement"),
        };
        Ok(Stmt::new(kind))
    }

    fn expr(&mut self) -> Result<Expr, LangError> {
        self.binary(1)
    }

    fn binary_op(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Op(op) => Some(*op),
            Tok::Minus => Some(BinOp::Sub),
            _ => None,
        }
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, LangError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.next();
            let rhs = self.binary(prec + 1)?;
            if op.class() == super::ast::OpClass::Comparison
                && self.binary_op().map(|o| o.precedence()) == Some(prec)
            {
                return self.error("comparison operators do not chain");
            }
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        match self.peek().clone() {
            Tok::Not => {
                self.next();
                Ok(Expr::unary(UnOp::Not, self.unary()?))
            }
            Tok::Minus => {
                self.next();
                if let Tok::Int(v) = *self.peek() {
                    self.next();
                    Ok(Expr::int(-v))
                } else {
                    Ok(Expr::unary(UnOp::Neg, self.unary()?))
                }
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr, LangError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(Expr::int(v))
            }
            Tok::True => {
                self.next();
                Ok(Expr::boolean(true))
            }
            Tok::False => {
                self.next();
                Ok(Expr::boolean(false))
            }
            Tok::Ident(name) => {
                self.next();
                Ok(Expr::var(&name))
            }
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => self.error("expected expression"),
        }
    }
}

/// Parse and validate a whole program, numbering nodes in pre-order.
pub fn parse(src: &str) -> Result<Program, LangError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let mut program = p.program()?;
    let mut next = 0;
    for f in &mut program.functions {
        renumber_block(&mut f.body, &mut next);
    }
    typeck::check_program(&program)?;
    Ok(program)
}

/// Parse a standalone expression (ids start at zero; not type checked).
pub fn parse_expr(src: &str) -> Result<Expr, LangError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let mut e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.error("trailing input after expression");
    }
    renumber_expr(&mut e, &mut 0);
    Ok(e)
}

/// Parse a standalone statement (ids start at zero; not type checked).
pub fn parse_stmt(src: &str) -> Result<Stmt, LangError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let mut s = p.stmt()?;
    if *p.peek() != Tok::Eof {
        return p.error("trailing input after statement");
    }
    renumber_stmt(&mut s, &mut 0);
    Ok(s)
}

pub(crate) fn renumber_block(b: &mut Block, next: &mut u32) {
    b.id = NodeId(*next);
    *next += 1;
    for s in &mut b.stmts {
        renumber_stmt(s, next);
    }
}

pub(crate) fn renumber_stmt(s: &mut Stmt, next: &mut u32) {
    s.id = NodeId(*next);
    *next += 1;
    match &mut s.kind {
        StmtKind::Let { value, .. } | StmtKind::Assign { value, .. } | StmtKind::Return(value) => {
            renumber_expr(value, next)
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            renumber_expr(cond, next);
            renumber_block(then_block, next);
            if let Some(b) = else_block {
                renumber_block(b, next);
            }
        }
        StmtKind::While { cond, body } => {
            renumber_expr(cond, next);
            renumber_block(body, next);
        }
    }
}

pub(crate) fn renumber_expr(e: &mut Expr, next: &mut u32) {
    e.id = NodeId(*next);
    *next += 1;
    match &mut e.kind {
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) => {}
        ExprKind::Unary(_, x) => renumber_expr(x, next),
        ExprKind::Binary(_, l, r) => {
            renumber_expr(l, next);
            renumber_expr(r, next);
        }
    }
}
