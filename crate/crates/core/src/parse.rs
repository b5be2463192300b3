//! Recursive-descent parser for integer polynomial expressions.
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := base ('^' uint)?
//! base   := int | 'x' uint | '(' expr ')'
//! ```
//!
//! Division and decimal literals are rejected so coefficients stay in Z.

use num_bigint::BigInt;

use crate::arith::Rat;
use crate::error::{Error, Result};
use crate::Poly;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    End,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        let tok = match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'/' => return Err(Error::NonIntegerCoefficient { pos: start }),
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'.' || bytes[i] == b'e' || bytes[i] == b'E') {
                    return Err(Error::NonIntegerCoefficient { pos: start });
                }
                out.push((start, Tok::Int(src[start..i].parse().expect("digits"))));
                continue;
            }
            b'.' => return Err(Error::NonIntegerCoefficient { pos: start }),
            b'x' | b'X' => {
                i += 1;
                let digits = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if digits == i {
                    return Err(Error::Parse {
                        pos: start,
                        msg: "expected variable index after 'x'".into(),
                    });
                }
                let idx: usize = src[digits..i].parse().map_err(|_| Error::Parse {
                    pos: start,
                    msg: "variable index too large".into(),
                })?;
                out.push((start, Tok::Var(idx)));
                continue;
            }
            _ => {
                return Err(Error::Parse {
                    pos: start,
                    msg: format!("unexpected character {:?}", src[start..].chars().next().unwrap()),
                })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    nvars: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = if *self.peek() == Tok::Minus {
            self.bump();
            let t = self.term()?;
            &Poly::zero(self.nvars) - &t
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Poly> {
        let base = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let pos = self.pos();
        match self.bump() {
            Tok::Int(e) => {
                let e: u32 = e.try_into().map_err(|_| Error::Parse {
                    pos,
                    msg: "exponent too large".into(),
                })?;
                Ok(base.pow(e))
            }
            _ => Err(Error::Parse {
                pos,
                msg: "expected unsigned integer exponent".into(),
            }),
        }
    }

    fn base(&mut self) -> Result<Poly> {
        let pos = self.pos();
        match self.bump() {
            Tok::Int(c) => Ok(Poly::constant(self.nvars, Rat::from_integer(c))),
            Tok::Var(i) => {
                if i == 0 || i > self.nvars {
                    return Err(Error::Parse {
                        pos,
                        msg: format!("unknown variable x{i} (expected x1..x{})", self.nvars),
                    });
                }
                Ok(Poly::var(self.nvars, i - 1))
            }
            Tok::LParen => {
                let e = self.expr()?;
                if self.bump() != Tok::RParen {
                    return Err(Error::Parse {
                        pos: self.toks[self.at.saturating_sub(1)].0,
                        msg: "expected ')'".into(),
                    });
                }
                Ok(e)
            }
            Tok::End => Err(Error::Parse {
                pos,
                msg: "unexpected end of input".into(),
            }),
            t => Err(Error::Parse {
                pos,
                msg: format!("unexpected token {t:?}"),
            }),
        }
    }
}

/// Parses one polynomial in the variables `x1..x{nvars}`.
pub fn parse_polynomial(text: &str, nvars: usize) -> Result<Poly> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        nvars,
    };
    let poly = p.expr()?;
    if *p.peek() != Tok::End {
        return p.err("trailing input");
    }
    Ok(poly)
}
