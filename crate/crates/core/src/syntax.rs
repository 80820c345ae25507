//! Tokenizer and term reader shared by the semantic notation (`?p(x)`,
//! `p(a, b)`) and the plan DSL.
//!
//! The grammar is Prolog-flavoured: atoms, compound terms, lists, the `?`
//! question operator and a small condition language (`not`, `and`, `or`,
//! comparisons). `%` starts a comment running to the end of the line.

use std::fmt;

use thiserror::Error;

/// 1-based line/column of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        Self {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Quoted(String),
    Number(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Question,
    Op(CmpOp),
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn eval(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            '?' => Some(Tok::Question),
            '=' => Some(Tok::Op(CmpOp::Eq)),
            _ => None,
        };
        if let Some(tok) = simple {
            bump!();
            out.push(Token { tok, pos });
            continue;
        }
        match c {
            '<' | '>' | '!' => {
                bump!();
                let eq = i < chars.len() && chars[i] == '=';
                if eq {
                    bump!();
                }
                let op = match (c, eq) {
                    ('<', false) => CmpOp::Lt,
                    ('<', true) => CmpOp::Le,
                    ('>', false) => CmpOp::Gt,
                    ('>', true) => CmpOp::Ge,
                    ('!', true) => CmpOp::Ne,
                    _ => return Err(SyntaxError::new(pos, "expected '=' after '!'")),
                };
                out.push(Token {
                    tok: Tok::Op(op),
                    pos,
                });
            }
            '\'' | '"' => {
                let quote = c;
                bump!();
                let mut s = String::new();
                loop {
                    if i >= chars.len() {
                        return Err(SyntaxError::new(pos, "unterminated quoted atom"));
                    }
                    let ch = chars[i];
                    bump!();
                    if ch == quote {
                        break;
                    }
                    if ch == '\\' && i < chars.len() {
                        s.push(chars[i]);
                        bump!();
                    } else {
                        s.push(ch);
                    }
                }
                out.push(Token {
                    tok: Tok::Quoted(s),
                    pos,
                });
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut s = String::new();
                s.push(c);
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    s.push(chars[i]);
                    bump!();
                }
                let n = s
                    .parse()
                    .map_err(|_| SyntaxError::new(pos, format!("bad number {s}")))?;
                out.push(Token {
                    tok: Tok::Number(n),
                    pos,
                });
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    s.push(chars[i]);
                    bump!();
                }
                out.push(Token {
                    tok: Tok::Ident(s),
                    pos,
                });
            }
            other => {
                return Err(SyntaxError::new(pos, format!("unexpected character {other:?}")));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

/// Generic term tree produced by [`Reader`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Atom { name: String, quoted: bool, pos: Pos },
    Number { value: i64, pos: Pos },
    Compound { name: String, args: Vec<Expr>, pos: Pos },
    List { items: Vec<Expr>, pos: Pos },
    Question { body: Box<Expr>, pos: Pos },
    Not { inner: Box<Expr>, pos: Pos },
    And { lhs: Box<Expr>, rhs: Box<Expr>, pos: Pos },
    Or { lhs: Box<Expr>, rhs: Box<Expr>, pos: Pos },
    Cmp { op: CmpOp, lhs: Box<Expr>, rhs: Box<Expr>, pos: Pos },
}

impl Expr {
    pub fn pos(&self) -> Pos {
        match self {
            Expr::Atom { pos, .. }
            | Expr::Number { pos, .. }
            | Expr::Compound { pos, .. }
            | Expr::List { pos, .. }
            | Expr::Question { pos, .. }
            | Expr::Not { pos, .. }
            | Expr::And { pos, .. }
            | Expr::Or { pos, .. }
            | Expr::Cmp { pos, .. } => *pos,
        }
    }

    /// Functor name for atoms and compounds.
    pub fn functor(&self) -> Option<&str> {
        match self {
            Expr::Atom { name, quoted: false, .. } | Expr::Compound { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Expr] {
        match self {
            Expr::Compound { args, .. } => args,
            _ => &[],
        }
    }
}

/// Recursive-descent reader over a token stream.
pub struct Reader {
    toks: Vec<Token>,
    at: usize,
}

impl Reader {
    pub fn new(src: &str) -> Result<Self, SyntaxError> {
        Ok(Self {
            toks: tokenize(src)?,
            at: 0,
        })
    }

    pub fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    pub fn next(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    pub fn expect(&mut self, want: Tok, what: &str) -> Result<Pos, SyntaxError> {
        let t = self.next();
        if t.tok == want {
            Ok(t.pos)
        } else {
            Err(SyntaxError::new(t.pos, format!("expected {what}, found {}", describe(&t.tok))))
        }
    }

    pub fn eat(&mut self, want: &Tok) -> bool {
        if &self.peek().tok == want {
            self.next();
            true
        } else {
            false
        }
    }

    /// Reads a full expression including the condition operators.
    pub fn expr(&mut self) -> Result<Expr, SyntaxError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.and_expr()?;
        while self.peek_keyword("or") {
            let pos = self.next().pos;
            let rhs = self.and_expr()?;
            lhs = Expr::Or {
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                pos,
            };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.not_expr()?;
        while self.peek_keyword("and") {
            let pos = self.next().pos;
            let rhs = self.not_expr()?;
            lhs = Expr::And {
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                pos,
            };
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, SyntaxError> {
        if self.peek_keyword("not") {
            let pos = self.next().pos;
            let inner = self.not_expr()?;
            return Ok(Expr::Not {
                inner: Box::new(inner),
                pos,
            });
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.primary()?;
        if let Tok::Op(op) = self.peek().tok {
            let pos = self.next().pos;
            let rhs = self.primary()?;
            return Ok(Expr::Cmp {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                pos,
            });
        }
        Ok(lhs)
    }

    /// Reads a term without condition operators.
    pub fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let t = self.next();
        match t.tok {
            Tok::Question => {
                let body = self.primary()?;
                Ok(Expr::Question {
                    body: Box::new(body),
                    pos: t.pos,
                })
            }
            Tok::Number(value) => Ok(Expr::Number { value, pos: t.pos }),
            Tok::Quoted(name) => Ok(Expr::Atom {
                name,
                quoted: true,
                pos: t.pos,
            }),
            Tok::LBracket => {
                let items = self.seq(Tok::RBracket, "']'")?;
                Ok(Expr::List { items, pos: t.pos })
            }
            Tok::LParen => {
                // Parenthesised group; a comma-separated group reads as a list.
                let items = self.seq(Tok::RParen, "')'")?;
                if items.len() == 1 {
                    Ok(items.into_iter().next().expect("one item"))
                } else {
                    Ok(Expr::List { items, pos: t.pos })
                }
            }
            Tok::Ident(name) => {
                if self.eat(&Tok::LParen) {
                    let args = self.seq(Tok::RParen, "')'")?;
                    Ok(Expr::Compound {
                        name,
                        args,
                        pos: t.pos,
                    })
                } else {
                    Ok(Expr::Atom {
                        name,
                        quoted: false,
                        pos: t.pos,
                    })
                }
            }
            other => Err(SyntaxError::new(t.pos, format!("unexpected {}", describe(&other)))),
        }
    }

    fn seq(&mut self, close: Tok, what: &str) -> Result<Vec<Expr>, SyntaxError> {
        let mut items = Vec::new();
        if self.eat(&close) {
            return Ok(items);
        }
        loop {
            items.push(self.expr()?);
            if self.eat(&Tok::Comma) {
                continue;
            }
            self.expect(close.clone(), what)?;
            return Ok(items);
        }
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Quoted(s) => format!("quoted atom '{s}'"),
        Tok::Number(n) => format!("number {n}"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::LBracket => "'['".into(),
        Tok::RBracket => "']'".into(),
        Tok::Comma => "','".into(),
        Tok::Dot => "'.'".into(),
        Tok::Question => "'?'".into(),
        Tok::Op(op) => format!("'{}'", op.symbol()),
        Tok::Eof => "end of input".into(),
    }
}

/// Reads exactly one expression from `src`, rejecting trailing input.
pub fn read_one(src: &str) -> Result<Expr, SyntaxError> {
    let mut r = Reader::new(src)?;
    let e = r.expr()?;
    if !r.at_eof() {
        let t = r.peek();
        return Err(SyntaxError::new(t.pos, format!("trailing input: {}", describe(&t.tok))));
    }
    Ok(e)
}
