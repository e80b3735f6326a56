//! Text grammar for STL and parametric STL.
//!
//! ```text
//! formula  := implies
//! implies  := or (('->' | 'implies') implies)?
//! or       := and (('||' | 'or') and)*
//! and      := until (('&&' | 'and') until)*
//! until    := unary ('U' window? unary)?
//! unary    := ('!' | 'not') unary | ('G' | 'F') window? unary | primary
//! primary  := 'true' | 'false' | '(' formula ')' | atom
//! atom     := ident cmp value | value cmp ident | value cmp ident cmp value
//! window   := ('[' | '(') value ',' value (']' | ')')
//! value    := number | 'inf' | '?' ident
//! ```
//!
//! `G`, `F` and `U` are only operators when followed by a window or an
//! operand, so they remain usable as signal names. `false` parses as `!true`.

use thiserror::Error;

use crate::formula::{Atom, Cmp, Expr, Formula, Interval};
use crate::pstl::Term;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown operator `{op}` at byte {pos}")]
    UnknownOperator { pos: usize, op: String },
    #[error("malformed interval at byte {pos}: {msg}")]
    BadInterval { pos: usize, msg: String },
    #[error("parameter `?{name}` in a concrete formula (byte {pos})")]
    UnexpectedParameter { pos: usize, name: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Param(String),
    Num(f64),
    Cmp(Cmp),
    Not,
    And,
    Or,
    Arrow,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eof,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_whitespace() {
            i += c.len_utf8().max(1);
            continue;
        }
        let two = src.get(i..i + 2).unwrap_or("");
        let tok = match two {
            ">=" => Some(Tok::Cmp(Cmp::Ge)),
            "<=" => Some(Tok::Cmp(Cmp::Le)),
            "&&" => Some(Tok::And),
            "||" => Some(Tok::Or),
            "->" => Some(Tok::Arrow),
            _ => None,
        };
        if let Some(t) = tok {
            out.push((t, start));
            i += 2;
            continue;
        }
        let single = match c {
            '>' => Some(Tok::Cmp(Cmp::Gt)),
            '<' => Some(Tok::Cmp(Cmp::Lt)),
            '!' => Some(Tok::Not),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, start));
            i += 1;
            continue;
        }
        if c == '?' {
            i += 1;
            let s = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            if s == i || bytes[s].is_ascii_digit() {
                return Err(ParseError::Syntax {
                    pos: start,
                    msg: "expected parameter name after `?`".into(),
                });
            }
            out.push((Tok::Param(src[s..i].to_string()), start));
            continue;
        }
        if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' {
            i += 1;
            while i < bytes.len() {
                let d = bytes[i];
                let exp_sign =
                    (d == b'-' || d == b'+') && matches!(bytes[i - 1], b'e' | b'E');
                if d.is_ascii_digit() || d == b'.' || d == b'e' || d == b'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let text = &src[start..i];
            let text_num = text.strip_prefix('+').unwrap_or(text);
            let v = match text_num {
                "-inf" => f64::NEG_INFINITY,
                _ if text_num.starts_with('-') && src[i..].starts_with("inf") => {
                    i += 3;
                    f64::NEG_INFINITY
                }
                _ => text_num.parse::<f64>().map_err(|_| ParseError::Syntax {
                    pos: start,
                    msg: format!("bad number `{text}`"),
                })?,
            };
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &src[start..i];
            let t = match word {
                "inf" => Tok::Num(f64::INFINITY),
                _ => Tok::Ident(word.to_string()),
            };
            out.push((t, start));
            continue;
        }
        let op: String = src[i..]
            .chars()
            .take_while(|ch| !ch.is_alphanumeric() && !ch.is_whitespace() && !"()[],?".contains(*ch))
            .collect();
        return Err(ParseError::UnknownOperator {
            pos: start,
            op: if op.is_empty() { c.to_string() } else { op },
        });
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

type PExpr = Expr<Term>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == kw)
    }

    fn implies(&mut self) -> Result<PExpr, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow || self.is_keyword("implies") {
            self.bump();
            let rhs = self.implies()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<PExpr, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or || self.is_keyword("or") {
            self.bump();
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<PExpr, ParseError> {
        let mut lhs = self.until()?;
        while *self.peek() == Tok::And || self.is_keyword("and") {
            self.bump();
            lhs = lhs.and(self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<PExpr, ParseError> {
        let lhs = self.unary()?;
        if self.is_keyword("U") && self.starts_operand_or_window(1) {
            self.bump();
            let iv = self.window_opt()?;
            let rhs = self.unary()?;
            return Ok(Expr::until(iv, lhs, rhs));
        }
        Ok(lhs)
    }

    /// Token `k` ahead starts a window or an operand (not a comparator).
    fn starts_operand_or_window(&self, k: usize) -> bool {
        matches!(
            self.peek_at(k),
            Tok::LBracket | Tok::LParen | Tok::Not | Tok::Ident(_) | Tok::Num(_) | Tok::Param(_)
        )
    }

    fn window_opt(&mut self) -> Result<Interval<Term>, ParseError> {
        let bracket_window = *self.peek() == Tok::LBracket;
        // `(` opens a window only when followed by `value ,`.
        let paren_window = *self.peek() == Tok::LParen
            && matches!(self.peek_at(1), Tok::Num(_) | Tok::Param(_))
            && *self.peek_at(2) == Tok::Comma;
        if !(bracket_window || paren_window) {
            return Ok(Interval {
                lo: Term::Const(0.0),
                hi: Term::Const(f64::INFINITY),
                lo_closed: true,
                hi_closed: false,
            });
        }
        let start = self.offset();
        let lo_closed = self.bump() == Tok::LBracket;
        let lo = self.value()?;
        self.expect(Tok::Comma, "`,` in interval")?;
        let hi = self.value()?;
        let hi_closed = match self.bump() {
            Tok::RBracket => true,
            Tok::RParen => false,
            _ => {
                return Err(ParseError::Syntax {
                    pos: self.toks[self.pos.saturating_sub(1)].1,
                    msg: "expected `]` or `)` closing interval".into(),
                })
            }
        };
        if let (Term::Const(a), Term::Const(b)) = (&lo, &hi) {
            Interval::new(*a, *b, lo_closed, hi_closed).map_err(|e| ParseError::BadInterval {
                pos: start,
                msg: e.to_string(),
            })?;
        }
        Ok(Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        })
    }

    fn value(&mut self) -> Result<Term, ParseError> {
        let term = match self.peek() {
            Tok::Num(v) => Term::Const(*v),
            Tok::Param(p) => Term::Param(p.clone()),
            _ => return self.err("expected a number or `?parameter`"),
        };
        self.bump();
        Ok(term)
    }

    fn unary(&mut self) -> Result<PExpr, ParseError> {
        if *self.peek() == Tok::Not || self.is_keyword("not") {
            self.bump();
            return Ok(self.unary()?.not());
        }
        if (self.is_keyword("G") || self.is_keyword("F")) && self.starts_operand_or_window(1) {
            let globally = self.is_keyword("G");
            self.bump();
            let iv = self.window_opt()?;
            let body = self.unary()?;
            return Ok(if globally {
                Expr::globally(iv, body)
            } else {
                Expr::eventually(iv, body)
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<PExpr, ParseError> {
        if self.is_keyword("true") {
            self.bump();
            return Ok(Expr::True);
        }
        if self.is_keyword("false") {
            self.bump();
            return Ok(Expr::True.not());
        }
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.implies()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                let cmp = self.cmp()?;
                let value = self.value()?;
                Ok(Expr::Atom(Atom {
                    signal: name,
                    cmp,
                    value,
                }))
            }
            Tok::Num(_) | Tok::Param(_) => {
                // `c ~ x` and `a ~ x ~ b`
                let lhs = self.value()?;
                let cmp = self.cmp()?;
                let Tok::Ident(name) = self.peek().clone() else {
                    return self.err("expected a signal name");
                };
                self.bump();
                let first = Expr::atom(name.clone(), cmp.mirror(), lhs);
                if let Tok::Cmp(c2) = *self.peek() {
                    self.bump();
                    let rhs = self.value()?;
                    return Ok(first.and(Expr::atom(name, c2, rhs)));
                }
                Ok(first)
            }
            Tok::Eof => self.err("unexpected end of input"),
            _ => self.err("expected a formula"),
        }
    }

    fn cmp(&mut self) -> Result<Cmp, ParseError> {
        match *self.peek() {
            Tok::Cmp(c) => {
                self.bump();
                Ok(c)
            }
            _ => self.err("expected one of `>=`, `<=`, `>`, `<`"),
        }
    }
}

/// Parse a formula that may contain `?name` parameters.
pub fn parse_template(text: &str) -> Result<Expr<Term>, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let e = p.implies()?;
    if *p.peek() != Tok::Eof {
        return p.err("unexpected trailing input");
    }
    let mut bad = None;
    e.for_each_atom(&mut |a| {
        if let Term::Const(v) = a.value {
            if !v.is_finite() && bad.is_none() {
                bad = Some(a.signal.clone());
            }
        }
    });
    if let Some(sig) = bad {
        return Err(ParseError::Syntax {
            pos: 0,
            msg: format!("atom constant for `{sig}` must be finite"),
        });
    }
    Ok(e)
}

/// Parse a concrete STL formula.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let t = parse_template(text)?;
    t.try_map(&mut |term: &Term| match term {
        Term::Const(v) => Ok(*v),
        Term::Param(name) => Err(ParseError::UnexpectedParameter {
            pos: text.find(&format!("?{name}")).unwrap_or(0),
            name: name.clone(),
        }),
    })
}
