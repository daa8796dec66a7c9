//! Recursive-descent parser for infix arithmetic over `x1 … xk`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := ('+' | '-') factor | power
//! power   := primary ('^' factor)?          right-associative
//! primary := number | 'pi' | xN | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | tanh | exp
//! ```

use super::{ExprError, Func, Node};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, pos: start });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // optional exponent: e[+-]digits
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let s = &text[start..i];
            let v: f64 = s.parse().map_err(|_| ExprError::Syntax {
                position: start,
                message: format!("malformed number `{s}`"),
            })?;
            out.push(Token {
                tok: Tok::Num(v),
                pos: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(text[start..i].to_string()),
                pos: start,
            });
            continue;
        }
        return Err(ExprError::Syntax {
            position: start,
            message: format!(
                "unexpected character `{}`",
                text[start..].chars().next().unwrap_or('?')
            ),
        });
    }
    out.push(Token {
        tok: Tok::End,
        pos: text.len(),
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    arity: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        match self.peek().tok {
            Tok::Minus => {
                self.bump();
                Ok(Node::Neg(Box::new(self.factor()?)))
            }
            Tok::Plus => {
                self.bump();
                self.factor()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        let caret = self.bump().pos;
        let exponent = self.factor()?;
        let n = exponent
            .fold_constant()
            .filter(|v| v.fract() == 0.0 && v.abs() <= 1024.0)
            .ok_or(ExprError::Syntax {
                position: caret,
                message: "exponent must be an integer constant".into(),
            })?;
        Ok(Node::Powi(Box::new(base), n as i32))
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Node::Const(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => self.ident(name, t.pos),
            Tok::End => Err(ExprError::Syntax {
                position: t.pos,
                message: "unexpected end of input".into(),
            }),
            other => Err(ExprError::Syntax {
                position: t.pos,
                message: format!("unexpected token {other:?}"),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        let t = self.bump();
        if t.tok == Tok::RParen {
            Ok(())
        } else {
            Err(ExprError::Syntax {
                position: t.pos,
                message: "expected `)`".into(),
            })
        }
    }

    fn ident(&mut self, name: String, pos: usize) -> Result<Node, ExprError> {
        if name == "pi" {
            return Ok(Node::Const(std::f64::consts::PI));
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = digits.parse().unwrap_or(usize::MAX);
                if index == 0 || index > self.arity {
                    return Err(ExprError::VariableOutOfRange {
                        index,
                        arity: self.arity,
                        position: pos,
                    });
                }
                return Ok(Node::Var(index - 1));
            }
        }
        let func = match name.as_str() {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            _ => {
                return Err(ExprError::UnknownIdentifier {
                    name,
                    position: pos,
                })
            }
        };
        let open = self.bump();
        if open.tok != Tok::LParen {
            return Err(ExprError::Syntax {
                position: open.pos,
                message: format!("expected `(` after `{name}`"),
            });
        }
        let arg = self.expr()?;
        self.expect_rparen()?;
        Ok(Node::Call(func, Box::new(arg)))
    }
}

pub(super) fn parse(text: &str, arity: usize) -> Result<Node, ExprError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, arity };
    let node = p.expr()?;
    let t = p.peek();
    if t.tok != Tok::End {
        return Err(ExprError::Syntax {
            position: t.pos,
            message: "trailing input".into(),
        });
    }
    Ok(node)
}
