//! Concrete syntax for formulas.
//!
//! Grammar sketch (precedence loosest to tightest: `->`, `|`, `&`, the
//! until family, unary, atoms; `->` and the untils are right-associative):
//!
//! ```text
//! position  := ... | p | true | false | !f | f & f | f | f | f -> f
//!            | X f | Y f | F f | G f | P f | H f | N f | Nbar f
//!            | f U f | f S f | C[d]{a} class | XX{a,b} f | YY{a,b} f
//!            | @a=X^d@b | @a=Y^d@b
//!            | op U!{a}[d] op | op S!{a}[d] op | F!{a}[d] f | P!{a}[d] f
//! class     := position | @a | !c | c & c | c | c | c -> c
//!            | X= c | Y= c | F= c | G= c | P= c | H= c | c U= c | c S= c
//! op        := position | @b | !=@b | op & op | op | op
//! ```
//!
//! Class operators require their `=` immediately after the letter (`X=`).
//! Shift brackets `[d]` default to 0 when omitted; pair-shift exponents
//! default to 1 (`@a=X@b` is `@a=X^1@b`). Negative shifts on `U!`/`S!` are
//! rewritten away at parse time, so stored shifts are always nonnegative.

use crate::formula::{build, lower_shift, Cls, Pos, Usub};
use std::fmt;
use thiserror::Error;

/// Maximum absolute shift accepted in brackets and exponents.
pub const MAX_SHIFT: i64 = 64;

/// Syntax error with source coordinates.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at {line}:{col}: {message}")]
pub struct ParseError {
    /// 1-based line.
    pub line: usize,
    /// 1-based column.
    pub col: usize,
    /// What went wrong.
    pub message: String,
}

/// A CLTL atom over variables interpreted as attributes of complete words.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CltlAtom {
    /// `x=X^d y`: component x here equals component y d steps ahead.
    ShiftEq {
        /// Left variable.
        x: String,
        /// Step count (nonnegative).
        delta: u64,
        /// Right variable.
        y: String,
    },
    /// `x=<>y`: some strict future position repeats the current x-value on y.
    FutureEq {
        /// Left variable.
        x: String,
        /// Right variable.
        y: String,
    },
}

/// A CLTL formula: atoms, propositions, boolean connectives, and the basic
/// temporal operators.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Cltl {
    /// Constant truth.
    True,
    /// Constant falsity.
    False,
    /// Proposition.
    Prop(String),
    /// Value-comparison atom.
    Atom(CltlAtom),
    /// Negation.
    Not(Box<Cltl>),
    /// Disjunction.
    Or(Box<Cltl>, Box<Cltl>),
    /// Conjunction.
    And(Box<Cltl>, Box<Cltl>),
    /// Next.
    Next(Box<Cltl>),
    /// Previous.
    Prev(Box<Cltl>),
    /// Until.
    Until(Box<Cltl>, Box<Cltl>),
    /// Since.
    Since(Box<Cltl>, Box<Cltl>),
}

impl fmt::Display for CltlAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CltlAtom::ShiftEq { x, delta, y } => write!(f, "{x}=X^{delta}{y}"),
            CltlAtom::FutureEq { x, y } => write!(f, "{x}=<>{y}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Ident(String),
    Int(u64),
    ClassOp(char), // X= Y= U= S= F= G= P= H= carrying the letter
    Bang,
    Amp,
    Pipe,
    Arrow,
    Minus,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    At,
    Eq,
    Caret,
    Comma,
    Diamond, // <>
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier {s:?}"),
            Tok::Int(n) => write!(f, "integer {n}"),
            Tok::ClassOp(c) => write!(f, "class operator {c}="),
            Tok::Bang => write!(f, "'!'"),
            Tok::Amp => write!(f, "'&'"),
            Tok::Pipe => write!(f, "'|'"),
            Tok::Arrow => write!(f, "'->'"),
            Tok::Minus => write!(f, "'-'"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::LBracket => write!(f, "'['"),
            Tok::RBracket => write!(f, "']'"),
            Tok::LBrace => write!(f, "'{{'"),
            Tok::RBrace => write!(f, "'}}'"),
            Tok::At => write!(f, "'@'"),
            Tok::Eq => write!(f, "'='"),
            Tok::Caret => write!(f, "'^'"),
            Tok::Comma => write!(f, "','"),
            Tok::Diamond => write!(f, "'<>'"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

const CLASS_OP_LETTERS: [&str; 8] = ["X", "Y", "U", "S", "F", "G", "P", "H"];

fn lex(text: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    while i < chars.len() {
        let (l, c) = (line, col);
        let ch = chars[i];
        let advance = |k: usize, i: &mut usize, col: &mut usize| {
            *i += k;
            *col += k;
        };
        match ch {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => advance(1, &mut i, &mut col),
            '(' => {
                out.push((Tok::LParen, l, c));
                advance(1, &mut i, &mut col);
            }
            ')' => {
                out.push((Tok::RParen, l, c));
                advance(1, &mut i, &mut col);
            }
            '[' => {
                out.push((Tok::LBracket, l, c));
                advance(1, &mut i, &mut col);
            }
            ']' => {
                out.push((Tok::RBracket, l, c));
                advance(1, &mut i, &mut col);
            }
            '{' => {
                out.push((Tok::LBrace, l, c));
                advance(1, &mut i, &mut col);
            }
            '}' => {
                out.push((Tok::RBrace, l, c));
                advance(1, &mut i, &mut col);
            }
            '@' => {
                out.push((Tok::At, l, c));
                advance(1, &mut i, &mut col);
            }
            '=' => {
                out.push((Tok::Eq, l, c));
                advance(1, &mut i, &mut col);
            }
            '^' => {
                out.push((Tok::Caret, l, c));
                advance(1, &mut i, &mut col);
            }
            ',' => {
                out.push((Tok::Comma, l, c));
                advance(1, &mut i, &mut col);
            }
            '!' => {
                out.push((Tok::Bang, l, c));
                advance(1, &mut i, &mut col);
            }
            '&' => {
                out.push((Tok::Amp, l, c));
                advance(1, &mut i, &mut col);
            }
            '|' => {
                out.push((Tok::Pipe, l, c));
                advance(1, &mut i, &mut col);
            }
            '<' if i + 1 < chars.len() && chars[i + 1] == '>' => {
                out.push((Tok::Diamond, l, c));
                advance(2, &mut i, &mut col);
            }
            '-' => {
                if i + 1 < chars.len() && chars[i + 1] == '>' {
                    out.push((Tok::Arrow, l, c));
                    advance(2, &mut i, &mut col);
                } else {
                    out.push((Tok::Minus, l, c));
                    advance(1, &mut i, &mut col);
                }
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                    col += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let n: u64 = text.parse().map_err(|_| ParseError {
                    line: l,
                    col: c,
                    message: format!("integer {text} out of range"),
                })?;
                out.push((Tok::Int(n), l, c));
            }
            _ if ch.is_ascii_alphabetic() || ch == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                    col += 1;
                }
                let word: String = chars[start..i].iter().collect();
                if CLASS_OP_LETTERS.contains(&word.as_str())
                    && i < chars.len()
                    && chars[i] == '='
                {
                    out.push((Tok::ClassOp(word.chars().next().unwrap()), l, c));
                    i += 1;
                    col += 1;
                } else {
                    out.push((Tok::Ident(word), l, c));
                }
            }
            other => {
                return Err(ParseError {
                    line: l,
                    col: c,
                    message: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    out.push((Tok::End, line, col));
    Ok(out)
}

impl Lexer {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        if self.pos + 1 < self.toks.len() {
            &self.toks[self.pos + 1].0
        } else {
            &self.toks[self.toks.len() - 1].0
        }
    }

    fn here(&self) -> (usize, usize) {
        (self.toks[self.pos].1, self.toks[self.pos].2)
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError {
            line,
            col,
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected {want}, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {other}")),
        }
    }

    /// Signed integer for `[d]` brackets.
    fn signed_int(&mut self) -> Result<i64, ParseError> {
        let negative = if *self.peek() == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                let n = n as i64;
                let val = if negative { -n } else { n };
                if val.abs() > MAX_SHIFT {
                    self.err(format!("shift {val} exceeds the limit {MAX_SHIFT}"))
                } else {
                    Ok(val)
                }
            }
            other => self.err(format!("expected integer, found {other}")),
        }
    }

    /// Optional `[d]` bracket, defaulting to 0.
    fn opt_bracket_shift(&mut self) -> Result<i64, ParseError> {
        if *self.peek() == Tok::LBracket {
            self.next();
            let d = self.signed_int()?;
            self.expect(Tok::RBracket)?;
            Ok(d)
        } else {
            Ok(0)
        }
    }
}

/// Parses a position formula.
pub fn parse_formula(text: &str) -> Result<Pos, ParseError> {
    let mut lx = Lexer {
        toks: lex(text)?,
        pos: 0,
    };
    let f = pos_implies(&mut lx)?;
    match lx.peek() {
        Tok::End => Ok(f),
        other => lx.err(format!("unexpected {other} after formula")),
    }
}

fn pos_implies(lx: &mut Lexer) -> Result<Pos, ParseError> {
    let lhs = pos_or(lx)?;
    if *lx.peek() == Tok::Arrow {
        lx.next();
        let rhs = pos_implies(lx)?;
        Ok(build::implies(lhs, rhs))
    } else {
        Ok(lhs)
    }
}

fn pos_or(lx: &mut Lexer) -> Result<Pos, ParseError> {
    let mut lhs = pos_and(lx)?;
    while *lx.peek() == Tok::Pipe {
        lx.next();
        let rhs = pos_and(lx)?;
        lhs = build::or(lhs, rhs);
    }
    Ok(lhs)
}

fn pos_and(lx: &mut Lexer) -> Result<Pos, ParseError> {
    let mut lhs = pos_until(lx)?;
    while *lx.peek() == Tok::Amp {
        lx.next();
        let rhs = pos_until(lx)?;
        lhs = build::and(lhs, rhs);
    }
    Ok(lhs)
}

fn pos_until(lx: &mut Lexer) -> Result<Pos, ParseError> {
    let op = until_chain_usub(lx)?;
    unlift_usub(lx, op)
}

fn unlift_usub(lx: &mut Lexer, op: Usub) -> Result<Pos, ParseError> {
    op.as_position().map_or_else(
        || lx.err("attribute test is only allowed inside an inequality until"),
        Ok,
    )
}

fn unlift_cls(lx: &mut Lexer, f: Cls) -> Result<Pos, ParseError> {
    f.as_position().map_or_else(
        || lx.err("class operator is only allowed inside a class quantifier"),
        Ok,
    )
}

/// Until-level parser shared by position and operand contexts. Returns an
/// operand; pure position results are wrapped lifts.
fn until_chain_usub(lx: &mut Lexer) -> Result<Usub, ParseError> {
    let lhs = usub_unary(lx)?;
    match lx.peek().clone() {
        Tok::Ident(w) if w == "U" || w == "S" => {
            let is_until = w == "U";
            lx.next();
            if *lx.peek() == Tok::Bang && *lx.peek2() == Tok::LBrace {
                lx.next();
                let (attr, shift) = uneq_suffix(lx)?;
                let rhs = until_chain_usub(lx)?;
                Ok(Usub::Lift(Box::new(make_uneq(
                    lx, is_until, &attr, shift, lhs, rhs,
                )?)))
            } else {
                let l = unlift_usub(lx, lhs)?;
                let rhs = until_chain_usub(lx)?;
                let r = unlift_usub(lx, rhs)?;
                Ok(Usub::Lift(Box::new(if is_until {
                    build::until(l, r)
                } else {
                    build::since(l, r)
                })))
            }
        }
        _ => Ok(lhs),
    }
}

/// Parses `{attr}` and an optional `[d]` after `U!`/`S!`/`F!`/`P!`.
fn uneq_suffix(lx: &mut Lexer) -> Result<(String, i64), ParseError> {
    lx.expect(Tok::LBrace)?;
    let attr = lx.ident()?;
    lx.expect(Tok::RBrace)?;
    let shift = lx.opt_bracket_shift()?;
    Ok((attr, shift))
}

fn make_uneq(
    lx: &mut Lexer,
    is_until: bool,
    attr: &str,
    shift: i64,
    rho: Usub,
    tau: Usub,
) -> Result<Pos, ParseError> {
    if shift >= 0 {
        Ok(if is_until {
            build::uneq_until(attr, shift as u64, rho, tau)
        } else {
            build::uneq_since(attr, shift as u64, rho, tau)
        })
    } else {
        lower_shift(is_until, attr, shift, &rho, &tau).map_err(|m| {
            let (line, col) = lx.here();
            ParseError {
                line,
                col,
                message: m,
            }
        })
    }
}

/// Unary-level parser for operand context; also the entry used by position
/// context (results there must unlift).
fn usub_unary(lx: &mut Lexer) -> Result<Usub, ParseError> {
    match lx.peek().clone() {
        Tok::Bang => {
            if *lx.peek2() == Tok::Eq {
                lx.next();
                lx.next();
                lx.expect(Tok::At)?;
                let b = lx.ident()?;
                Ok(Usub::AttrNeq(b))
            } else {
                lx.next();
                let inner = usub_unary(lx)?;
                match inner.as_position() {
                    Some(f) => Ok(Usub::Lift(Box::new(build::not(f)))),
                    None => lx.err("cannot negate an attribute test in an until operand"),
                }
            }
        }
        Tok::At => {
            let f = pair_shift_atom(lx, true)?;
            Ok(f)
        }
        Tok::Ident(w) => match w.as_str() {
            "X" | "Y" | "F" | "G" | "P" | "H" | "N" | "Nbar" | "C" | "XX" | "YY" => {
                Ok(Usub::Lift(Box::new(pos_unary(lx)?)))
            }
            "true" => {
                lx.next();
                Ok(Usub::Lift(Box::new(Pos::True)))
            }
            "false" => {
                lx.next();
                Ok(Usub::Lift(Box::new(Pos::False)))
            }
            "U" | "S" => lx.err(format!("{w} needs a left operand")),
            _ => {
                lx.next();
                Ok(Usub::Lift(Box::new(Pos::Prop(w))))
            }
        },
        Tok::LParen => {
            lx.next();
            let inner = usub_implies(lx)?;
            lx.expect(Tok::RParen)?;
            Ok(inner)
        }
        Tok::ClassOp(_) => lx.err("class operator is only allowed inside a class quantifier"),
        other => lx.err(format!("expected a formula, found {other}")),
    }
}

fn usub_implies(lx: &mut Lexer) -> Result<Usub, ParseError> {
    let lhs = usub_or(lx)?;
    if *lx.peek() == Tok::Arrow {
        lx.next();
        let rhs = usub_implies(lx)?;
        match lhs.as_position() {
            Some(f) => Ok(build::uor(Usub::Lift(Box::new(build::not(f))), rhs)),
            None => lx.err("implication over an attribute test in an until operand"),
        }
    } else {
        Ok(lhs)
    }
}

fn usub_or(lx: &mut Lexer) -> Result<Usub, ParseError> {
    let mut lhs = usub_and(lx)?;
    while *lx.peek() == Tok::Pipe {
        lx.next();
        let rhs = usub_and(lx)?;
        lhs = build::uor(lhs, rhs);
    }
    Ok(lhs)
}

fn usub_and(lx: &mut Lexer) -> Result<Usub, ParseError> {
    let mut lhs = until_chain_usub(lx)?;
    while *lx.peek() == Tok::Amp {
        lx.next();
        let rhs = until_chain_usub(lx)?;
        lhs = build::uand(lhs, rhs);
    }
    Ok(lhs)
}

/// `@a=X^d@b` or `@a=Y^d@b`; with `allow_attr_test`, a bare `@b` is an
/// operand equality test.
fn pair_shift_atom(lx: &mut Lexer, allow_attr_test: bool) -> Result<Usub, ParseError> {
    lx.expect(Tok::At)?;
    let a = lx.ident()?;
    if *lx.peek() != Tok::Eq {
        if allow_attr_test {
            return Ok(Usub::AttrEq(a));
        }
        return lx.err("attribute test is only allowed inside a class quantifier or until operand");
    }
    lx.next();
    let dir = match lx.peek().clone() {
        Tok::Ident(w) if w == "X" => 1i64,
        Tok::Ident(w) if w == "Y" => -1i64,
        other => return lx.err(format!("expected X or Y in pair shift, found {other}")),
    };
    lx.next();
    let mag = if *lx.peek() == Tok::Caret {
        lx.next();
        match lx.peek().clone() {
            Tok::Int(n) => {
                lx.next();
                if n as i64 > MAX_SHIFT {
                    return lx.err(format!("shift {n} exceeds the limit {MAX_SHIFT}"));
                }
                n as i64
            }
            other => return lx.err(format!("expected integer exponent, found {other}")),
        }
    } else {
        1
    };
    lx.expect(Tok::At)?;
    let b = lx.ident()?;
    Ok(Usub::Lift(Box::new(build::pair_shift(&a, dir * mag, &b))))
}

/// Position-level unary parser.
fn pos_unary(lx: &mut Lexer) -> Result<Pos, ParseError> {
    match lx.peek().clone() {
        Tok::Ident(w) => match w.as_str() {
            "X" => {
                lx.next();
                Ok(build::x(pos_unary(lx)?))
            }
            "Y" => {
                lx.next();
                Ok(build::y(pos_unary(lx)?))
            }
            "F" => {
                lx.next();
                if *lx.peek() == Tok::Bang && *lx.peek2() == Tok::LBrace {
                    lx.next();
                    let (attr, shift) = uneq_suffix(lx)?;
                    let body = pos_unary(lx)?;
                    let tau = Usub::And(
                        Box::new(Usub::AttrNeq(attr.clone())),
                        Box::new(Usub::Lift(Box::new(body))),
                    );
                    make_uneq(lx, true, &attr, shift, Usub::Lift(Box::new(Pos::True)), tau)
                } else {
                    Ok(build::f(pos_unary(lx)?))
                }
            }
            "G" => {
                lx.next();
                Ok(build::g(pos_unary(lx)?))
            }
            "P" => {
                lx.next();
                if *lx.peek() == Tok::Bang && *lx.peek2() == Tok::LBrace {
                    lx.next();
                    let (attr, shift) = uneq_suffix(lx)?;
                    let body = pos_unary(lx)?;
                    let tau = Usub::And(
                        Box::new(Usub::AttrNeq(attr.clone())),
                        Box::new(Usub::Lift(Box::new(body))),
                    );
                    make_uneq(lx, false, &attr, shift, Usub::Lift(Box::new(Pos::True)), tau)
                } else {
                    Ok(build::past(pos_unary(lx)?))
                }
            }
            "H" => {
                lx.next();
                Ok(build::hist(pos_unary(lx)?))
            }
            "N" => {
                lx.next();
                Ok(build::from_now_on(pos_unary(lx)?))
            }
            "Nbar" => {
                lx.next();
                Ok(build::up_to_now(pos_unary(lx)?))
            }
            "C" => {
                lx.next();
                let shift = lx.opt_bracket_shift()?;
                lx.expect(Tok::LBrace)?;
                let attr = lx.ident()?;
                lx.expect(Tok::RBrace)?;
                let body = cls_unary(lx)?;
                Ok(build::class(shift, &attr, body))
            }
            "XX" | "YY" => {
                let forward = w == "XX";
                lx.next();
                lx.expect(Tok::LBrace)?;
                let a = lx.ident()?;
                lx.expect(Tok::Comma)?;
                let b = lx.ident()?;
                lx.expect(Tok::RBrace)?;
                let body = pos_unary(lx)?;
                Ok(if forward {
                    build::pair_next(&a, &b, body)
                } else {
                    build::pair_prev(&a, &b, body)
                })
            }
            "true" => {
                lx.next();
                Ok(Pos::True)
            }
            "false" => {
                lx.next();
                Ok(Pos::False)
            }
            "U" | "S" => lx.err(format!("{w} needs a left operand")),
            _ => {
                lx.next();
                Ok(Pos::Prop(w))
            }
        },
        Tok::Bang => {
            lx.next();
            Ok(build::not(pos_unary(lx)?))
        }
        Tok::At => {
            let f = pair_shift_atom(lx, false)?;
            unlift_usub(lx, f)
        }
        Tok::LParen => {
            lx.next();
            let f = pos_implies(lx)?;
            lx.expect(Tok::RParen)?;
            Ok(f)
        }
        Tok::ClassOp(_) => lx.err("class operator is only allowed inside a class quantifier"),
        other => lx.err(format!("expected a formula, found {other}")),
    }
}

// --- class-formula grammar ----------------------------------------------

fn cls_implies(lx: &mut Lexer) -> Result<Cls, ParseError> {
    let lhs = cls_or(lx)?;
    if *lx.peek() == Tok::Arrow {
        lx.next();
        let rhs = cls_implies(lx)?;
        Ok(build::cimplies(lhs, rhs))
    } else {
        Ok(lhs)
    }
}

fn cls_or(lx: &mut Lexer) -> Result<Cls, ParseError> {
    let mut lhs = cls_and(lx)?;
    while *lx.peek() == Tok::Pipe {
        lx.next();
        let rhs = cls_and(lx)?;
        lhs = build::cor(lhs, rhs);
    }
    Ok(lhs)
}

fn cls_and(lx: &mut Lexer) -> Result<Cls, ParseError> {
    let mut lhs = cls_until(lx)?;
    while *lx.peek() == Tok::Amp {
        lx.next();
        let rhs = cls_until(lx)?;
        lhs = build::cand(lhs, rhs);
    }
    Ok(lhs)
}

/// Converts a class formula into an until operand when possible (attribute
/// tests become operand equality tests; class navigation is rejected).
fn cls_to_usub(lx: &mut Lexer, f: Cls) -> Result<Usub, ParseError> {
    match f {
        Cls::Lift(p) => Ok(Usub::Lift(p)),
        Cls::AttrIs(a) => Ok(Usub::AttrEq(a)),
        Cls::Or(a, b) => Ok(build::uor(cls_to_usub(lx, *a)?, cls_to_usub(lx, *b)?)),
        Cls::And(a, b) => Ok(build::uand(cls_to_usub(lx, *a)?, cls_to_usub(lx, *b)?)),
        Cls::Not(a) => match a.as_position() {
            Some(p) => Ok(Usub::Lift(Box::new(build::not(p)))),
            None => lx.err("cannot negate an attribute test in an until operand"),
        },
        _ => lx.err("class navigation cannot appear in an inequality-until operand"),
    }
}

fn cls_until(lx: &mut Lexer) -> Result<Cls, ParseError> {
    let lhs = cls_unary(lx)?;
    match lx.peek().clone() {
        Tok::ClassOp(c) if c == 'U' || c == 'S' => {
            lx.next();
            let rhs = cls_until(lx)?;
            Ok(if c == 'U' {
                build::ueq(lhs, rhs)
            } else {
                build::seq(lhs, rhs)
            })
        }
        Tok::Ident(w) if w == "U" || w == "S" => {
            let is_until = w == "U";
            lx.next();
            if *lx.peek() == Tok::Bang && *lx.peek2() == Tok::LBrace {
                lx.next();
                let (attr, shift) = uneq_suffix(lx)?;
                let rho = cls_to_usub(lx, lhs)?;
                let rhs = cls_until(lx)?;
                let tau = cls_to_usub(lx, rhs)?;
                Ok(Cls::Lift(Box::new(make_uneq(
                    lx, is_until, &attr, shift, rho, tau,
                )?)))
            } else {
                let l = unlift_cls(lx, lhs)?;
                let rhs = cls_until(lx)?;
                let r = unlift_cls(lx, rhs)?;
                Ok(Cls::Lift(Box::new(if is_until {
                    build::until(l, r)
                } else {
                    build::since(l, r)
                })))
            }
        }
        _ => Ok(lhs),
    }
}

fn cls_unary(lx: &mut Lexer) -> Result<Cls, ParseError> {
    match lx.peek().clone() {
        Tok::ClassOp(c) => {
            lx.next();
            let body = cls_unary(lx)?;
            Ok(match c {
                'X' => build::xeq(body),
                'Y' => build::yeq(body),
                'F' => build::feq(body),
                'G' => build::geq(body),
                'P' => build::peq(body),
                'H' => build::heq(body),
                'U' | 'S' => return lx.err(format!("{c}= needs a left operand")),
                _ => unreachable!("lexer only emits known class operators"),
            })
        }
        Tok::Bang => {
            lx.next();
            Ok(build::cnot(cls_unary(lx)?))
        }
        Tok::At => {
            let a = pair_shift_atom(lx, true)?;
            Ok(match a {
                Usub::AttrEq(b) => Cls::AttrIs(b),
                Usub::Lift(p) => Cls::Lift(p),
                _ => unreachable!("pair_shift_atom returns a test or a lift"),
            })
        }
        Tok::Ident(w) => match w.as_str() {
            "X" | "Y" | "F" | "G" | "P" | "H" | "N" | "Nbar" | "C" | "XX" | "YY" => {
                Ok(Cls::Lift(Box::new(pos_unary(lx)?)))
            }
            "true" => {
                lx.next();
                Ok(Cls::Lift(Box::new(Pos::True)))
            }
            "false" => {
                lx.next();
                Ok(Cls::Lift(Box::new(Pos::False)))
            }
            "U" | "S" => lx.err(format!("{w} needs a left operand")),
            _ => {
                lx.next();
                Ok(Cls::Lift(Box::new(Pos::Prop(w))))
            }
        },
        Tok::LParen => {
            lx.next();
            let f = cls_implies(lx)?;
            lx.expect(Tok::RParen)?;
            Ok(f)
        }
        other => lx.err(format!("expected a class formula, found {other}")),
    }
}

// --- CLTL ----------------------------------------------------------------

/// Parses a CLTL formula (`x=X^d y`, `x=<>y`, propositions, boolean and
/// basic temporal operators).
pub fn parse_cltl(text: &str) -> Result<Cltl, ParseError> {
    let mut lx = Lexer {
        toks: lex(text)?,
        pos: 0,
    };
    let f = cltl_implies(&mut lx)?;
    match lx.peek() {
        Tok::End => Ok(f),
        other => lx.err(format!("unexpected {other} after formula")),
    }
}

fn cltl_implies(lx: &mut Lexer) -> Result<Cltl, ParseError> {
    let lhs = cltl_or(lx)?;
    if *lx.peek() == Tok::Arrow {
        lx.next();
        let rhs = cltl_implies(lx)?;
        Ok(Cltl::Or(Box::new(Cltl::Not(Box::new(lhs))), Box::new(rhs)))
    } else {
        Ok(lhs)
    }
}

fn cltl_or(lx: &mut Lexer) -> Result<Cltl, ParseError> {
    let mut lhs = cltl_and(lx)?;
    while *lx.peek() == Tok::Pipe {
        lx.next();
        lhs = Cltl::Or(Box::new(lhs), Box::new(cltl_and(lx)?));
    }
    Ok(lhs)
}

fn cltl_and(lx: &mut Lexer) -> Result<Cltl, ParseError> {
    let mut lhs = cltl_until(lx)?;
    while *lx.peek() == Tok::Amp {
        lx.next();
        lhs = Cltl::And(Box::new(lhs), Box::new(cltl_until(lx)?));
    }
    Ok(lhs)
}

fn cltl_until(lx: &mut Lexer) -> Result<Cltl, ParseError> {
    let lhs = cltl_unary(lx)?;
    match lx.peek().clone() {
        Tok::Ident(w) if w == "U" || w == "S" => {
            lx.next();
            let rhs = cltl_until(lx)?;
            Ok(if w == "U" {
                Cltl::Until(Box::new(lhs), Box::new(rhs))
            } else {
                Cltl::Since(Box::new(lhs), Box::new(rhs))
            })
        }
        _ => Ok(lhs),
    }
}

fn cltl_unary(lx: &mut Lexer) -> Result<Cltl, ParseError> {
    match lx.peek().clone() {
        Tok::Bang => {
            lx.next();
            Ok(Cltl::Not(Box::new(cltl_unary(lx)?)))
        }
        Tok::Ident(w) => match w.as_str() {
            "X" => {
                lx.next();
                Ok(Cltl::Next(Box::new(cltl_unary(lx)?)))
            }
            "Y" => {
                lx.next();
                Ok(Cltl::Prev(Box::new(cltl_unary(lx)?)))
            }
            "F" => {
                lx.next();
                Ok(Cltl::Until(
                    Box::new(Cltl::True),
                    Box::new(cltl_unary(lx)?),
                ))
            }
            "G" => {
                lx.next();
                Ok(Cltl::Not(Box::new(Cltl::Until(
                    Box::new(Cltl::True),
                    Box::new(Cltl::Not(Box::new(cltl_unary(lx)?))),
                ))))
            }
            "true" => {
                lx.next();
                Ok(Cltl::True)
            }
            "false" => {
                lx.next();
                Ok(Cltl::False)
            }
            _ => {
                lx.next();
                if *lx.peek() == Tok::Eq {
                    lx.next();
                    match lx.peek().clone() {
                        Tok::Diamond => {
                            lx.next();
                            let y = lx.ident()?;
                            Ok(Cltl::Atom(CltlAtom::FutureEq { x: w, y }))
                        }
                        Tok::Ident(dir) if dir == "X" => {
                            lx.next();
                            let delta = if *lx.peek() == Tok::Caret {
                                lx.next();
                                match lx.peek().clone() {
                                    Tok::Int(n) => {
                                        lx.next();
                                        n
                                    }
                                    other => {
                                        return lx
                                            .err(format!("expected integer exponent, found {other}"))
                                    }
                                }
                            } else {
                                1
                            };
                            if delta as i64 > MAX_SHIFT {
                                return lx.err(format!("shift {delta} exceeds the limit {MAX_SHIFT}"));
                            }
                            let y = lx.ident()?;
                            Ok(Cltl::Atom(CltlAtom::ShiftEq { x: w, delta, y }))
                        }
                        other => lx.err(format!("expected X or <> after '=', found {other}")),
                    }
                } else {
                    Ok(Cltl::Prop(w))
                }
            }
        },
        Tok::LParen => {
            lx.next();
            let f = cltl_implies(lx)?;
            lx.expect(Tok::RParen)?;
            Ok(f)
        }
        other => lx.err(format!("expected a CLTL formula, found {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{build::*, classify, FragmentTag};

    fn round_trip(text: &str) -> Pos {
        let ast = parse_formula(text).unwrap();
        let printed = ast.to_string();
        let again = parse_formula(&printed)
            .unwrap_or_else(|e| panic!("reparse of {printed:?} failed: {e}"));
        assert_eq!(ast, again, "round trip changed the AST for {text:?}");
        ast
    }

    #[test]
    fn parses_client_server_property() {
        let ast = round_trip("G(q_A -> C[0]{A}((@A -> !q_A) U= (@A & s_A)))");
        // shape: G over an implication into a class quantifier with U=
        let expected = g(implies(
            p("q_A"),
            class(
                0,
                "A",
                ueq(
                    cor(cnot(attr_is("A")), cl(not(p("q_A")))),
                    cand(attr_is("A"), cl(p("s_A"))),
                ),
            ),
        ));
        assert_eq!(ast, expected);
    }

    #[test]
    fn parses_class_shift_example() {
        let ast = round_trip("C[7]{a} F= chi");
        assert_eq!(ast, class(7, "a", feq(cl(p("chi")))));
    }

    #[test]
    fn true_is_primitive() {
        assert_eq!(parse_formula("true").unwrap(), Pos::True);
        assert_eq!(parse_formula("!false").unwrap(), not(Pos::False));
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            round_trip("p | q & r"),
            or(p("p"), and(p("q"), p("r")))
        );
        assert_eq!(
            round_trip("p U q U r"),
            until(p("p"), until(p("q"), p("r")))
        );
        assert_eq!(
            round_trip("p U q & r"),
            and(until(p("p"), p("q")), p("r"))
        );
        assert_eq!(
            parse_formula("p -> q -> r").unwrap(),
            implies(p("p"), implies(p("q"), p("r")))
        );
        assert_eq!(round_trip("!X p"), not(x(p("p"))));
    }

    #[test]
    fn parses_pair_shift_forms() {
        assert_eq!(round_trip("@a=X^2@b"), pair_shift("a", 2, "b"));
        assert_eq!(parse_formula("@a=X@b").unwrap(), pair_shift("a", 1, "b"));
        assert_eq!(round_trip("@a=Y^3@b"), pair_shift("a", -3, "b"));
        assert_eq!(parse_formula("@a=X^0@a").unwrap(), pair_shift("a", 0, "a"));
    }

    #[test]
    fn parses_extended_until() {
        let ast = round_trip("rho U!{a}[2] (!=@a & tau)");
        assert_eq!(
            ast,
            uneq_until(
                "a",
                2,
                ul(p("rho")),
                Usub::And(Box::new(uneq_attr("a")), Box::new(ul(p("tau"))))
            )
        );
        let beyond = parse_formula("!ifzero1 U!{a}[0] (@a & dec1)").unwrap();
        assert!(matches!(
            classify(&beyond),
            FragmentTag::BeyondDecidable(_)
        ));
    }

    #[test]
    fn parses_mixed_intermediate_shape() {
        let ast = round_trip("(r | @a & re | !=@a & rn) U!{a} (!=@a & t)");
        match &ast {
            Pos::UneqUntil { attr, shift, .. } => {
                assert_eq!(attr, "a");
                assert_eq!(*shift, 0);
            }
            other => panic!("expected inequality until, got {other:?}"),
        }
        assert_eq!(classify(&ast), FragmentTag::ExtendedDataLTL);
    }

    #[test]
    fn negative_until_shift_is_rewritten() {
        let ast = parse_formula("p U!{a}[-1] (!=@a & q)").unwrap();
        let expected = or(
            and(
                uneq_until(
                    "a",
                    0,
                    ul(p("p")),
                    Usub::And(Box::new(uneq_attr("a")), Box::new(ul(p("q")))),
                ),
                y(p("p")),
            ),
            and(not(pair_shift("a", -1, "a")), y(p("q"))),
        );
        assert_eq!(ast, expected);
    }

    #[test]
    fn negative_shift_two_uses_both_offsets() {
        let ast = parse_formula("p S!{a}[-2] (!=@a & q)").unwrap();
        let text = ast.to_string();
        assert!(text.contains("@a=X^1@a") || text.contains("@a=X@a"), "{text}");
        assert!(text.contains("@a=X^2@a"), "{text}");
        round_trip(&text);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify(&parse_formula("p U q").unwrap()),
            FragmentTag::BasicDataLTL
        );
        assert!(matches!(
            classify(&parse_formula("N p").unwrap()),
            FragmentTag::BeyondDecidable(_)
        ));
        assert!(matches!(
            classify(&parse_formula("XX{a,b} p").unwrap()),
            FragmentTag::BeyondDecidable(_)
        ));
        assert_eq!(
            classify(&parse_formula("G(C{a} X= F= @a | p)").unwrap()),
            FragmentTag::BasicDataLTL
        );
    }

    #[test]
    fn extended_abbreviations_expand() {
        let f1 = parse_formula("F!{a}[2] s").unwrap();
        assert_eq!(
            f1,
            uneq_until(
                "a",
                2,
                ul(Pos::True),
                Usub::And(Box::new(uneq_attr("a")), Box::new(ul(p("s"))))
            )
        );
        let f2 = parse_formula("P!{a} s").unwrap();
        assert!(matches!(f2, Pos::UneqSince { shift: 0, .. }));
    }

    #[test]
    fn shift_bounds_are_enforced() {
        assert!(parse_formula("C[65]{a} @a").is_err());
        assert!(parse_formula("C[-64]{a} @a").is_ok());
        assert!(parse_formula("@a=X^65@b").is_err());
    }

    #[test]
    fn error_positions_are_reported() {
        let err = parse_formula("p &\n& q").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.col, 1);
        assert!(parse_formula("@a").is_err());
        assert!(parse_formula("X= p").is_err());
        assert!(parse_formula("C{a} !=@b").is_err());
    }

    #[test]
    fn cltl_parsing() {
        let f = parse_cltl("x=X^2 y & !(x=<>x) U q").unwrap();
        match f {
            Cltl::And(a, b) => {
                assert_eq!(
                    *a,
                    Cltl::Atom(CltlAtom::ShiftEq {
                        x: "x".into(),
                        delta: 2,
                        y: "y".into()
                    })
                );
                assert!(matches!(*b, Cltl::Until(..)));
            }
            other => panic!("unexpected shape {other:?}"),
        }
    }

    #[test]
    fn lower_shift_rejects_nonnegative() {
        assert!(lower_shift(true, "a", 0, &ul(p("p")), &ul(p("q"))).is_err());
    }

    #[test]
    fn printer_distinguishes_until_grouping() {
        let left = until(until(p("a"), p("b")), p("c"));
        let reparsed = parse_formula(&left.to_string()).unwrap();
        assert_eq!(left, reparsed);
        let class_body = class(0, "a", ueq(cl(or(p("p"), p("q"))), attr_is("a")));
        let reparsed = parse_formula(&class_body.to_string()).unwrap();
        assert_eq!(class_body, reparsed);
    }
}
