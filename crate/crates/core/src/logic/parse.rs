//! Recursive-descent parser for the concrete formula syntax.
//!
//! ```text
//! formula := quant | iff
//! quant   := ("E" | "A") var formula
//! iff     := imp ("<->" iff)?
//! imp     := or ("->" imp)?
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "~" unary | "(" formula ")" | quant | atom
//! atom    := name "(" var ("," var)* ")" | var "=" var
//! var     := "v" digits
//! ```
//!
//! `|`, `->`, `<->` and `A` are rewritten into the primitive connectives.

use crate::error::{Error, Result};
use crate::logic::formula::{Formula, Signature, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Equals,
    Tilde,
    Amp,
    Bar,
    Arrow,
    DArrow,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let pos = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'=' => Tok::Equals,
            b'~' => Tok::Tilde,
            b'&' => Tok::Amp,
            b'|' => Tok::Bar,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            b'<' if bytes.get(i + 1) == Some(&b'-') && bytes.get(i + 2) == Some(&b'>') => {
                i += 2;
                Tok::DArrow
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(text[start..i].to_string()),
                    pos,
                });
                continue;
            }
            _ => {
                return Err(Error::Syntax {
                    pos,
                    message: format!("unexpected character `{}`", text[i..].chars().next().unwrap()),
                })
            }
        };
        out.push(Token { tok, pos });
        i += 1;
    }
    Ok(out)
}

pub(crate) fn var_index(ident: &str) -> Option<usize> {
    let digits = ident.strip_prefix('v')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

struct Parser<'a> {
    tokens: Vec<Token>,
    at: usize,
    end: usize,
    signature: &'a Signature,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.at).map(|t| &t.tok)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.tokens.get(self.at + offset).map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.at).map_or(self.end, |t| t.pos)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    /// `v<digits>` is always a variable; such names cannot be relations.
    fn is_var_at(&self, offset: usize) -> bool {
        matches!(self.peek_at(offset), Some(Tok::Ident(s)) if var_index(s).is_some())
    }

    fn is_quantifier(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == "E" || s == "A") && self.is_var_at(1)
    }

    fn var(&mut self) -> Result<Var> {
        if let Some(Tok::Ident(s)) = self.peek() {
            if let Some(i) = var_index(s) {
                self.at += 1;
                return Ok(Var(i));
            }
        }
        self.error("expected a variable `v<digits>`")
    }

    fn formula(&mut self) -> Result<Formula> {
        if self.is_quantifier() {
            self.quantifier()
        } else {
            self.iff()
        }
    }

    fn quantifier(&mut self) -> Result<Formula> {
        let universal = matches!(self.peek(), Some(Tok::Ident(s)) if s == "A");
        self.at += 1;
        let v = self.var()?;
        let body = self.formula()?;
        Ok(if universal {
            Formula::forall(v.0, body)
        } else {
            Formula::exists(v.0, body)
        })
    }

    fn iff(&mut self) -> Result<Formula> {
        let left = self.implication()?;
        if self.peek() == Some(&Tok::DArrow) {
            self.at += 1;
            let right = self.iff()?;
            return Ok(left.iff(right));
        }
        Ok(left)
    }

    fn implication(&mut self) -> Result<Formula> {
        let left = self.disjunction()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.at += 1;
            let right = self.implication()?;
            return Ok(left.implies(right));
        }
        Ok(left)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut acc = self.conjunction()?;
        while self.peek() == Some(&Tok::Bar) {
            self.at += 1;
            acc = acc.or(self.conjunction()?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut acc = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.at += 1;
            acc = acc.and(self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(Tok::Tilde) => {
                self.at += 1;
                Ok(self.unary()?.not())
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let inner = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Ident(_)) if self.is_quantifier() => self.quantifier(),
            Some(Tok::Ident(_)) if self.is_var_at(0) => {
                let left = self.var()?;
                self.expect(Tok::Equals, "`=` after a variable")?;
                let right = self.var()?;
                Ok(Formula::Eq(left, right))
            }
            Some(Tok::Ident(_)) => self.relational_atom(),
            Some(_) => self.error("expected a formula"),
            None => self.error("unexpected end of input"),
        }
    }

    fn relational_atom(&mut self) -> Result<Formula> {
        let Some(Tok::Ident(name)) = self.peek().cloned() else {
            return self.error("expected a relation name");
        };
        self.at += 1;
        self.expect(Tok::LParen, "`(` after a relation name")?;
        let mut args = vec![self.var()?];
        while self.peek() == Some(&Tok::Comma) {
            self.at += 1;
            args.push(self.var()?);
        }
        self.expect(Tok::RParen, "`)` closing the argument list")?;
        match self.signature.arity(&name) {
            None => Err(Error::UnknownRelation(name)),
            Some(k) if k != args.len() => Err(Error::ArityMismatch {
                name,
                expected: k,
                found: args.len(),
            }),
            Some(_) => Ok(Formula::Atom { relation: name, args }),
        }
    }
}

/// Parses `text` against `signature`, eliminating derived connectives.
pub fn parse(text: &str, signature: &Signature) -> Result<Formula> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        at: 0,
        end: text.len(),
        signature,
    };
    let formula = parser.formula()?;
    if parser.at != parser.tokens.len() {
        return parser.error("trailing input");
    }
    Ok(formula)
}
