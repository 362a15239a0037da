//! Parser for the expression and operator DSL.
//!
//! Expressions are rational arithmetic over jet variables (`u_2`, `u1_(2,0)`),
//! independent variables (`x`, `x2`), rationals and declared opaque function
//! calls (`phi{1,0}(u_0,u_1)`). Operators extend expressions with the total
//! derivative symbols (`D`, `D2^3`):
//!
//! - `*` always means coefficient scaling: `u_0*D` is the operator with
//!   coefficient `u_0`, never a composition;
//! - `@` is operator composition: `D@(u_0)` is `u_0*D + u_1`;
//! - a trailing `where name = expr, ...` binding list is substituted at parse
//!   time, so the result is a closed-form operator.
//!
//! Matrix operators are written as a bracketed grid: `[[0, D], [D, 0]]`.
//! Every syntax error carries a 1-based line:column and the tokens that were
//! expected at that point.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::algebra::{AlgebraError, Atom, Expr};
use crate::multiindex::MultiIndex;
use crate::operators::DiffOp;
use crate::session::SessionConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        line: u32,
        col: u32,
        expected: Vec<String>,
        found: String,
    },
    #[error("{line}:{col}: unknown symbol `{name}`")]
    UnknownSymbol { line: u32, col: u32, name: String },
    #[error("{line}:{col}: `{name}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        line: u32,
        col: u32,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{line}:{col}: {message}")]
    Eval {
        line: u32,
        col: u32,
        message: String,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// A parsed operator together with its source text.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub source: String,
    pub op: DiffOp,
}

pub fn parse_expr(src: &str, cfg: &SessionConfig) -> Result<Expr, ParseError> {
    let tokens = lex(src)?;
    if let Some(t) = tokens
        .iter()
        .find(|t| matches!(&t.kind, Tok::Ident(w) if w == "where"))
    {
        return Err(syntax(t, &["expression without a where-clause"]));
    }
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        cfg,
        bindings: BTreeMap::new(),
    };
    let v = p.parse_sum()?;
    p.expect_eof()?;
    match v {
        Val::Scalar(e) => Ok(e),
        Val::Op(_) => {
            let t = &tokens[0];
            Err(syntax(t, &["an expression (no derivative symbols)"]))
        }
    }
}

pub fn parse_operator(src: &str, cfg: &SessionConfig) -> Result<OperatorSpec, ParseError> {
    let tokens = lex(src)?;
    // split the trailing where-clause at bracket depth zero
    let mut depth = 0usize;
    let mut where_at = None;
    for (idx, t) in tokens.iter().enumerate() {
        match &t.kind {
            Tok::LParen | Tok::LBracket | Tok::LBrace => depth += 1,
            Tok::RParen | Tok::RBracket | Tok::RBrace => depth = depth.saturating_sub(1),
            Tok::Ident(w) if w == "where" && depth == 0 => {
                where_at = Some(idx);
                break;
            }
            _ => {}
        }
    }
    let (main, mut bindings) = match where_at {
        None => (&tokens[..], BTreeMap::new()),
        Some(idx) => {
            let bindings = parse_bindings(&tokens[idx + 1..], cfg)?;
            (&tokens[..idx], bindings)
        }
    };
    // re-terminate the main token slice
    let mut main_tokens: Vec<Token> = main.to_vec();
    if !matches!(main_tokens.last().map(|t| &t.kind), Some(Tok::Eof)) {
        let (line, col) = main_tokens
            .last()
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1));
        main_tokens.push(Token {
            kind: Tok::Eof,
            line,
            col,
        });
    }
    let mut p = Parser {
        tokens: &main_tokens,
        pos: 0,
        cfg,
        bindings: std::mem::take(&mut bindings),
    };
    let v = p.parse_sum()?;
    p.expect_eof()?;
    let op = match v {
        Val::Op(op) => op,
        Val::Scalar(e) => {
            // a bare function is the corresponding multiplication operator
            let mut op = DiffOp::zero(1, 1, cfg.m);
            op.add_entry(0, 0, MultiIndex::zero(cfg.m), e);
            op
        }
    };
    Ok(OperatorSpec {
        source: src.to_string(),
        op,
    })
}

fn parse_bindings(
    tokens: &[Token],
    cfg: &SessionConfig,
) -> Result<BTreeMap<String, Expr>, ParseError> {
    let mut bindings: BTreeMap<String, Expr> = BTreeMap::new();
    let mut rest = tokens;
    loop {
        let name_tok = rest.first().ok_or_else(|| ParseError::Syntax {
            line: 0,
            col: 0,
            expected: vec!["binding name".into()],
            found: "end of input".into(),
        })?;
        let name = match &name_tok.kind {
            Tok::Ident(n) => n.clone(),
            _ => return Err(syntax(name_tok, &["binding name"])),
        };
        let eq_tok = rest.get(1).ok_or_else(|| syntax(name_tok, &["="]))?;
        if !matches!(eq_tok.kind, Tok::Equals) {
            return Err(syntax(eq_tok, &["="]));
        }
        // the binding body runs to the next depth-0 comma or to the end
        let mut depth = 0usize;
        let mut end = rest.len() - 1; // index of Eof or the comma
        for (idx, t) in rest.iter().enumerate().skip(2) {
            match &t.kind {
                Tok::LParen | Tok::LBracket | Tok::LBrace => depth += 1,
                Tok::RParen | Tok::RBracket | Tok::RBrace => depth = depth.saturating_sub(1),
                Tok::Comma if depth == 0 => {
                    end = idx;
                    break;
                }
                Tok::Eof => {
                    end = idx;
                    break;
                }
                _ => {}
            }
        }
        let mut body: Vec<Token> = rest[2..end].to_vec();
        let (line, col) = body.last().map(|t| (t.line, t.col)).unwrap_or((0, 0));
        body.push(Token {
            kind: Tok::Eof,
            line,
            col,
        });
        let mut p = Parser {
            tokens: &body,
            pos: 0,
            cfg,
            bindings: bindings.clone(),
        };
        let v = p.parse_sum()?;
        p.expect_eof()?;
        match v {
            Val::Scalar(e) => {
                bindings.insert(name, e);
            }
            Val::Op(_) => {
                return Err(syntax(name_tok, &["a scalar expression in a binding"]));
            }
        }
        match &rest[end].kind {
            Tok::Comma => rest = &rest[end + 1..],
            _ => break,
        }
    }
    Ok(bindings)
}

// ---------------------------------------------------------------------------
// lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    At,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Equals,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::At => "`@`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    line: u32,
    col: u32,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        let advance =
            |chars: &mut std::iter::Peekable<std::str::Chars>, line: &mut u32, col: &mut u32| {
                let c = chars.next().unwrap();
                if c == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
                c
            };
        if c.is_whitespace() {
            advance(&mut chars, &mut line, &mut col);
            continue;
        }
        if c.is_ascii_digit() {
            let mut text = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_digit() {
                    text.push(advance(&mut chars, &mut line, &mut col));
                } else {
                    break;
                }
            }
            let n: BigInt = text.parse().expect("digits parse as an integer");
            out.push(Token {
                kind: Tok::Int(n),
                line: tline,
                col: tcol,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut text = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_alphanumeric() || d == '_' {
                    text.push(advance(&mut chars, &mut line, &mut col));
                } else {
                    break;
                }
            }
            out.push(Token {
                kind: Tok::Ident(text),
                line: tline,
                col: tcol,
            });
            continue;
        }
        let kind = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '@' => Tok::At,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            '=' => Tok::Equals,
            other => {
                return Err(ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    expected: vec!["a token".into()],
                    found: format!("`{other}`"),
                })
            }
        };
        advance(&mut chars, &mut line, &mut col);
        out.push(Token {
            kind,
            line: tline,
            col: tcol,
        });
    }
    out.push(Token {
        kind: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

fn syntax(t: &Token, expected: &[&str]) -> ParseError {
    ParseError::Syntax {
        line: t.line,
        col: t.col,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found: t.kind.describe(),
    }
}

// ---------------------------------------------------------------------------
// parser / evaluator

#[derive(Debug, Clone)]
enum Val {
    Scalar(Expr),
    Op(DiffOp),
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    cfg: &'a SessionConfig,
    bindings: BTreeMap<String, Expr>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &'a Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> &'a Token {
        let t = &self.tokens[self.pos];
        if !matches!(t.kind, Tok::Eof) {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: &Tok) -> bool {
        if &self.peek().kind == kind {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: Tok, what: &str) -> Result<&'a Token, ParseError> {
        if self.peek().kind == kind {
            Ok(self.next())
        } else {
            Err(syntax(self.peek(), &[what]))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        if matches!(self.peek().kind, Tok::Eof) {
            Ok(())
        } else {
            Err(syntax(
                self.peek(),
                &["`+`", "`-`", "`*`", "`/`", "`^`", "`@`", "end of input"],
            ))
        }
    }

    fn parse_sum(&mut self) -> Result<Val, ParseError> {
        let mut acc = self.parse_term()?;
        loop {
            let t = self.peek();
            match t.kind {
                Tok::Plus => {
                    self.next();
                    let rhs = self.parse_term()?;
                    acc = self.combine_add(acc, rhs, t, false)?;
                }
                Tok::Minus => {
                    self.next();
                    let rhs = self.parse_term()?;
                    acc = self.combine_add(acc, rhs, t, true)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Val, ParseError> {
        let mut acc = self.parse_factor()?;
        loop {
            let t = self.peek();
            match t.kind {
                Tok::Star => {
                    self.next();
                    let rhs = self.parse_factor()?;
                    acc = self.combine_mul(acc, rhs, t)?;
                }
                Tok::Slash => {
                    self.next();
                    let rhs = self.parse_factor()?;
                    acc = self.combine_div(acc, rhs, t)?;
                }
                Tok::At => {
                    self.next();
                    let rhs = self.parse_factor()?;
                    acc = self.combine_compose(acc, rhs, t)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Val, ParseError> {
        let base = self.parse_base()?;
        if !self.eat(&Tok::Caret) {
            return Ok(base);
        }
        let at = self.peek();
        let exponent = self.parse_exponent()?;
        match base {
            Val::Scalar(e) => e
                .powi(exponent)
                .map(Val::Scalar)
                .map_err(|err| self.eval_error(at, err)),
            Val::Op(op) => {
                if exponent < 0 {
                    return Err(ParseError::Eval {
                        line: at.line,
                        col: at.col,
                        message: "operators have no negative powers".into(),
                    });
                }
                op.power(exponent as u32)
                    .map(Val::Op)
                    .map_err(|e| ParseError::DimensionMismatch(e.to_string()))
            }
        }
    }

    fn parse_exponent(&mut self) -> Result<i64, ParseError> {
        let parenthesized = self.eat(&Tok::LParen);
        let negative = self.eat(&Tok::Minus);
        let t = self.next();
        let n = match &t.kind {
            Tok::Int(n) => n
                .to_i64()
                .ok_or_else(|| syntax(t, &["a smaller exponent"]))?,
            _ => return Err(syntax(t, &["integer exponent"])),
        };
        if parenthesized {
            self.expect(Tok::RParen, "`)`")?;
        }
        Ok(if negative { -n } else { n })
    }

    fn parse_base(&mut self) -> Result<Val, ParseError> {
        let t = self.next();
        match &t.kind {
            Tok::Int(n) => Ok(Val::Scalar(Expr::from_bigint(n.clone()))),
            Tok::Minus => {
                let inner = self.parse_factor()?;
                Ok(match inner {
                    Val::Scalar(e) => Val::Scalar(e.neg()),
                    Val::Op(op) => Val::Op(op.negated()),
                })
            }
            Tok::LParen => {
                let v = self.parse_sum()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(v)
            }
            Tok::LBracket => self.parse_matrix(t),
            Tok::Ident(name) => self.resolve_ident(t, name),
            _ => Err(syntax(
                t,
                &["integer", "identifier", "`(`", "`[`", "`-`", "`D`"],
            )),
        }
    }

    fn parse_matrix(&mut self, open: &Token) -> Result<Val, ParseError> {
        let mut rows: Vec<Vec<DiffOp>> = Vec::new();
        loop {
            self.expect(Tok::LBracket, "`[` opening a matrix row")?;
            let mut row = Vec::new();
            loop {
                let v = self.parse_sum()?;
                let op = match v {
                    Val::Op(op) => op,
                    Val::Scalar(e) => {
                        let mut op = DiffOp::zero(1, 1, self.cfg.m);
                        op.add_entry(0, 0, MultiIndex::zero(self.cfg.m), e);
                        op
                    }
                };
                if op.rows() != 1 || op.cols() != 1 {
                    return Err(ParseError::DimensionMismatch(
                        "matrix entries must be scalar operator blocks".into(),
                    ));
                }
                row.push(op);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBracket, "`]` closing a matrix row")?;
            rows.push(row);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBracket, "`]` closing the matrix")?;
        let ncols = rows[0].len();
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(ParseError::DimensionMismatch(format!(
                "matrix rows have unequal lengths (first row has {ncols})"
            )));
        }
        if rows.len() != self.cfg.ndep() || ncols != self.cfg.ndep() {
            return Err(ParseError::DimensionMismatch(format!(
                "matrix operator must be {n}x{n} for {n} dependent variable(s), got {}x{}",
                rows.len(),
                ncols,
                n = self.cfg.ndep()
            )));
        }
        let _ = open;
        let mut out = DiffOp::zero(rows.len(), ncols, self.cfg.m);
        for (r, row) in rows.iter().enumerate() {
            for (c, block) in row.iter().enumerate() {
                for ((_, _, index), coeff) in block.entries() {
                    out.add_entry(r, c, index.clone(), coeff.clone());
                }
            }
        }
        Ok(Val::Op(out))
    }

    fn resolve_ident(&mut self, t: &'a Token, name: &str) -> Result<Val, ParseError> {
        // function call shape takes priority: name{..}(..) or name(..)
        if self.cfg.functions.contains_key(name)
            && matches!(self.peek().kind, Tok::LParen | Tok::LBrace)
        {
            return self.parse_call(t, name);
        }
        if let Some(v) = self.parse_reserved(t, name)? {
            return Ok(v);
        }
        if let Some(e) = self.bindings.get(name) {
            return Ok(Val::Scalar(e.clone()));
        }
        if matches!(self.peek().kind, Tok::LParen | Tok::LBrace) {
            // call shape with an undeclared function name
            return Err(ParseError::UnknownSymbol {
                line: t.line,
                col: t.col,
                name: name.to_string(),
            });
        }
        Err(ParseError::UnknownSymbol {
            line: t.line,
            col: t.col,
            name: name.to_string(),
        })
    }

    /// Jet variables, independent variables and derivative symbols.
    fn parse_reserved(&mut self, t: &'a Token, name: &str) -> Result<Option<Val>, ParseError> {
        // derivative symbol: D or D<k>
        if let Some(rest) = name.strip_prefix('D') {
            if rest.is_empty() && self.cfg.m == 1 {
                return Ok(Some(Val::Op(DiffOp::d(1, 0))));
            }
            if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                let k: usize = rest.parse().map_err(|_| syntax(t, &["D<index>"]))?;
                if k == 0 || k > self.cfg.m {
                    return Err(ParseError::UnknownSymbol {
                        line: t.line,
                        col: t.col,
                        name: name.to_string(),
                    });
                }
                return Ok(Some(Val::Op(DiffOp::d(self.cfg.m, k - 1))));
            }
            if rest.is_empty() {
                return Err(syntax(t, &["D<index> (several independent variables)"]));
            }
        }
        // independent variable: x or x<k>
        if let Some(rest) = name.strip_prefix('x') {
            if rest.is_empty() && self.cfg.m == 1 {
                return Ok(Some(Val::Scalar(Expr::indep(0))));
            }
            if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                let k: usize = rest.parse().map_err(|_| syntax(t, &["x<index>"]))?;
                if k == 0 || k > self.cfg.m {
                    return Err(ParseError::UnknownSymbol {
                        line: t.line,
                        col: t.col,
                        name: name.to_string(),
                    });
                }
                return Ok(Some(Val::Scalar(Expr::indep((k - 1) as u32))));
            }
            if rest.is_empty() {
                return Err(syntax(t, &["x<index> (several independent variables)"]));
            }
        }
        // jet variable: <head>_<int> or <head>_( tuple follows )
        if let Some(underscore) = name.rfind('_') {
            let (head, tail) = name.split_at(underscore);
            let tail = &tail[1..];
            if let Some(dep) = self.resolve_dep(head) {
                if tail.is_empty() && matches!(self.peek().kind, Tok::LParen) {
                    let index = self.parse_index_tuple(t)?;
                    return Ok(Some(Val::Scalar(Expr::jet(dep, index))));
                }
                if !tail.is_empty() && tail.chars().all(|c| c.is_ascii_digit()) {
                    if self.cfg.m != 1 {
                        return Err(ParseError::Syntax {
                            line: t.line,
                            col: t.col,
                            expected: vec![format!(
                                "a jet index of arity {} like {head}_(i1,...)",
                                self.cfg.m
                            )],
                            found: format!("`{name}`"),
                        });
                    }
                    let k: u32 = tail.parse().map_err(|_| syntax(t, &["jet index"]))?;
                    return Ok(Some(Val::Scalar(Expr::jet1(dep, k))));
                }
            }
        }
        Ok(None)
    }

    fn resolve_dep(&self, head: &str) -> Option<u32> {
        if let Some(pos) = self.cfg.dep_vars.iter().position(|n| n == head) {
            return Some(pos as u32);
        }
        if head == "u" && self.cfg.ndep() == 1 {
            return Some(0);
        }
        if let Some(rest) = head.strip_prefix('u') {
            if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                let k: usize = rest.parse().ok()?;
                if k >= 1 && k <= self.cfg.ndep() {
                    return Some((k - 1) as u32);
                }
            }
        }
        None
    }

    fn parse_index_tuple(&mut self, at: &Token) -> Result<MultiIndex, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut entries = Vec::new();
        loop {
            let t = self.next();
            match &t.kind {
                Tok::Int(n) => {
                    let v = n.to_u32().ok_or_else(|| syntax(t, &["a small index"]))?;
                    entries.push(v);
                }
                _ => return Err(syntax(t, &["index entry"])),
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        if entries.len() != self.cfg.m {
            return Err(ParseError::Syntax {
                line: at.line,
                col: at.col,
                expected: vec![format!("a jet index of arity {}", self.cfg.m)],
                found: format!("arity {}", entries.len()),
            });
        }
        Ok(MultiIndex::new(entries))
    }

    fn parse_call(&mut self, t: &'a Token, name: &str) -> Result<Val, ParseError> {
        let arity = *self
            .cfg
            .functions
            .get(name)
            .expect("caller checked the declaration");
        let mut derivs = Vec::new();
        if self.eat(&Tok::LBrace) {
            loop {
                let dt = self.next();
                match &dt.kind {
                    Tok::Int(n) => derivs.push(
                        n.to_u32()
                            .ok_or_else(|| syntax(dt, &["a small slot derivative"]))?,
                    ),
                    _ => return Err(syntax(dt, &["slot derivative count"])),
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace, "`}`")?;
            if derivs.len() != arity {
                return Err(ParseError::ArityMismatch {
                    line: t.line,
                    col: t.col,
                    name: name.to_string(),
                    expected: arity,
                    found: derivs.len(),
                });
            }
        } else {
            derivs = vec![0; arity];
        }
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        loop {
            let v = self.parse_sum()?;
            match v {
                Val::Scalar(e) => args.push(e),
                Val::Op(_) => {
                    return Err(syntax(
                        self.peek(),
                        &["a scalar expression as a function argument"],
                    ))
                }
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        if args.len() != arity {
            return Err(ParseError::ArityMismatch {
                line: t.line,
                col: t.col,
                name: name.to_string(),
                expected: arity,
                found: args.len(),
            });
        }
        Ok(Val::Scalar(Expr::atom(Atom::func(name, derivs, args))))
    }

    fn eval_error(&self, t: &Token, err: AlgebraError) -> ParseError {
        ParseError::Eval {
            line: t.line,
            col: t.col,
            message: err.to_string(),
        }
    }

    fn lift(&self, e: Expr) -> DiffOp {
        let mut op = DiffOp::zero(1, 1, self.cfg.m);
        op.add_entry(0, 0, MultiIndex::zero(self.cfg.m), e);
        op
    }

    fn combine_add(&self, a: Val, b: Val, t: &Token, subtract: bool) -> Result<Val, ParseError> {
        let b = if subtract {
            match b {
                Val::Scalar(e) => Val::Scalar(e.neg()),
                Val::Op(op) => Val::Op(op.negated()),
            }
        } else {
            b
        };
        Ok(match (a, b) {
            (Val::Scalar(x), Val::Scalar(y)) => Val::Scalar(x.add(&y)),
            (Val::Op(x), Val::Op(y)) => {
                if (x.rows(), x.cols()) != (y.rows(), y.cols()) {
                    return Err(ParseError::DimensionMismatch(format!(
                        "cannot add a {}x{} operator to a {}x{} operator",
                        x.rows(),
                        x.cols(),
                        y.rows(),
                        y.cols()
                    )));
                }
                Val::Op(x.addition(&y))
            }
            (Val::Scalar(x), Val::Op(y)) => {
                let lifted = self.lift(x);
                if (y.rows(), y.cols()) != (1, 1) {
                    return Err(syntax(t, &["matching operator dimensions"]));
                }
                Val::Op(lifted.addition(&y))
            }
            (Val::Op(x), Val::Scalar(y)) => {
                if (x.rows(), x.cols()) != (1, 1) {
                    return Err(syntax(t, &["matching operator dimensions"]));
                }
                Val::Op(x.addition(&self.lift(y)))
            }
        })
    }

    fn combine_mul(&self, a: Val, b: Val, t: &Token) -> Result<Val, ParseError> {
        Ok(match (a, b) {
            (Val::Scalar(x), Val::Scalar(y)) => Val::Scalar(x.mul(&y)),
            (Val::Scalar(x), Val::Op(op)) | (Val::Op(op), Val::Scalar(x)) => Val::Op(op.scaled(&x)),
            (Val::Op(x), Val::Op(y)) => {
                // multiplication of constant-coefficient derivative monomials
                // coincides with composition and stays unambiguous
                let constant = |op: &DiffOp| op.entries().all(|(_, c)| c.as_rational().is_some());
                if constant(&x) || constant(&y) {
                    Val::Op(
                        x.compose(&y)
                            .map_err(|e| ParseError::DimensionMismatch(e.to_string()))?,
                    )
                } else {
                    return Err(syntax(
                        t,
                        &["`@` to compose operators with non-constant coefficients"],
                    ));
                }
            }
        })
    }

    fn combine_div(&self, a: Val, b: Val, t: &Token) -> Result<Val, ParseError> {
        match (a, b) {
            (Val::Scalar(x), Val::Scalar(y)) => x
                .div(&y)
                .map(Val::Scalar)
                .map_err(|e| self.eval_error(t, e)),
            (Val::Op(op), Val::Scalar(y)) => {
                let inv = Expr::one().div(&y).map_err(|e| self.eval_error(t, e))?;
                Ok(Val::Op(op.scaled(&inv)))
            }
            _ => Err(syntax(t, &["a scalar divisor"])),
        }
    }

    fn combine_compose(&self, a: Val, b: Val, _t: &Token) -> Result<Val, ParseError> {
        let a = match a {
            Val::Op(op) => op,
            Val::Scalar(e) => self.lift(e),
        };
        let b = match b {
            Val::Op(op) => op,
            Val::Scalar(e) => self.lift(e),
        };
        a.compose(&b)
            .map(Val::Op)
            .map_err(|e| ParseError::DimensionMismatch(e.to_string()))
    }
}
