//! Term syntax.
//!
//! ```text
//! forest := term | '(' term (',' term)* ')'
//! term   := symbol | symbol '(' arg (',' arg)* ')'
//! arg    := forest | VARIABLE | '_'
//! ```
//!
//! Symbols are lowercase alphanumerics and underscores, variables start with
//! an uppercase letter. Nested conjunctions flatten.

use std::collections::HashMap;

use super::{Arg, Builder, Forest, Functor, NodeId, VarId};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Accept the empty string as the empty forest.
    pub allow_empty: bool,
    /// Replace a top-level `answer(V, Body)` by `Body`.
    pub strip_answer: bool,
}

impl ParseOptions {
    pub fn stripping_answer() -> Self {
        ParseOptions {
            allow_empty: false,
            strip_answer: true,
        }
    }

    pub fn allowing_empty() -> Self {
        ParseOptions {
            allow_empty: true,
            strip_answer: false,
        }
    }
}

pub fn parse_term(text: &str) -> Result<Forest> {
    parse_term_with(text, ParseOptions::default())
}

pub fn parse_term_with(text: &str, opts: ParseOptions) -> Result<Forest> {
    let tokens = lex(text)?;
    if tokens.is_empty() {
        return if opts.allow_empty {
            Ok(Forest::empty())
        } else {
            Err(Error::Syntax {
                pos: 0,
                msg: "empty input".into(),
            })
        };
    }
    let mut p = Parser {
        tokens,
        at: 0,
        b: Builder::default(),
        vars: HashMap::new(),
        len: text.len(),
    };
    let roots = p.conjunction(None)?;
    if let Some(t) = p.tokens.get(p.at) {
        return Err(Error::Syntax {
            pos: t.pos,
            msg: format!("unexpected {}", t.kind.describe()),
        });
    }
    let forest = p.b.finish(roots);
    Ok(if opts.strip_answer {
        forest.strip_wrapper("answer")
    } else {
        forest
    })
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Open,
    Close,
    Comma,
    Symbol(String),
    Variable(String),
    Anon,
}

impl Kind {
    fn describe(&self) -> String {
        match self {
            Kind::Open => "'('".into(),
            Kind::Close => "')'".into(),
            Kind::Comma => "','".into(),
            Kind::Symbol(s) => format!("symbol '{s}'"),
            Kind::Variable(s) => format!("variable '{s}'"),
            Kind::Anon => "'_'".into(),
        }
    }
}

struct Token {
    kind: Kind,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    let mut depth = 0i64;
    while let Some(&(pos, c)) = chars.peek() {
        let word = |chars: &mut std::iter::Peekable<std::str::CharIndices<'_>>| {
            let mut s = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            s
        };
        let kind = match c {
            c if c.is_whitespace() => {
                chars.next();
                continue;
            }
            '(' => {
                chars.next();
                depth += 1;
                Kind::Open
            }
            ')' => {
                chars.next();
                depth -= 1;
                if depth < 0 {
                    return Err(Error::Syntax {
                        pos,
                        msg: "unbalanced ')'".into(),
                    });
                }
                Kind::Close
            }
            ',' => {
                chars.next();
                Kind::Comma
            }
            '_' => {
                let w = word(&mut chars);
                if w == "_" {
                    Kind::Anon
                } else {
                    Kind::Variable(w)
                }
            }
            c if c.is_ascii_uppercase() => Kind::Variable(word(&mut chars)),
            c if c.is_ascii_lowercase() || c.is_ascii_digit() => {
                let w = word(&mut chars);
                if w.chars().any(|c| c.is_ascii_uppercase()) {
                    return Err(Error::Syntax {
                        pos,
                        msg: format!("symbol '{w}' must be lowercase"),
                    });
                }
                Kind::Symbol(w)
            }
            other => {
                return Err(Error::Syntax {
                    pos,
                    msg: format!("unexpected character '{other}'"),
                })
            }
        };
        out.push(Token { kind, pos });
    }
    if depth != 0 {
        return Err(Error::Syntax {
            pos: text.len(),
            msg: "unbalanced '('".into(),
        });
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    b: Builder,
    vars: HashMap<String, VarId>,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Kind> {
        self.tokens.get(self.at).map(|t| &t.kind)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.at).map_or(self.len, |t| t.pos)
    }

    fn expect(&mut self, k: Kind) -> Result<()> {
        match self.peek() {
            Some(found) if *found == k => {
                self.at += 1;
                Ok(())
            }
            Some(found) => Err(Error::Syntax {
                pos: self.pos(),
                msg: format!("expected {}, found {}", k.describe(), found.describe()),
            }),
            None => Err(Error::Syntax {
                pos: self.pos(),
                msg: format!("expected {}, found end of input", k.describe()),
            }),
        }
    }

    /// A single term or a parenthesized conjunction, flattened.
    fn conjunction(&mut self, parent: Option<(NodeId, usize)>) -> Result<Vec<NodeId>> {
        if self.peek() == Some(&Kind::Open) {
            self.at += 1;
            let mut out = self.conjunction(parent)?;
            while self.peek() == Some(&Kind::Comma) {
                self.at += 1;
                out.extend(self.conjunction(parent)?);
            }
            self.expect(Kind::Close)?;
            Ok(out)
        } else {
            Ok(vec![self.term(parent)?])
        }
    }

    fn term(&mut self, parent: Option<(NodeId, usize)>) -> Result<NodeId> {
        let name = match self.peek() {
            Some(Kind::Symbol(s)) => s.clone(),
            Some(k) => {
                return Err(Error::Syntax {
                    pos: self.pos(),
                    msg: format!("expected a symbol, found {}", k.describe()),
                })
            }
            None => {
                return Err(Error::Syntax {
                    pos: self.pos(),
                    msg: "expected a symbol, found end of input".into(),
                })
            }
        };
        self.at += 1;
        if self.peek() != Some(&Kind::Open) {
            return Ok(self.b.push(Functor::new(&name, 0), parent));
        }
        // Arity is only known after the argument list, so parse arguments
        // into a scratch list first and then allocate in preorder.
        let start = self.at;
        let arity = self.count_args()?;
        self.at = start;
        let id = self.b.push(Functor::new(&name, arity), parent);
        self.expect(Kind::Open)?;
        for i in 0..arity {
            if i > 0 {
                self.expect(Kind::Comma)?;
            }
            let arg = match self.peek() {
                Some(Kind::Anon) => {
                    self.at += 1;
                    Arg::Free
                }
                Some(Kind::Variable(v)) => {
                    let v = v.clone();
                    self.at += 1;
                    let next = VarId(self.vars.len() as u32);
                    Arg::Var(*self.vars.entry(v).or_insert(next))
                }
                _ => Arg::Sub(self.conjunction(Some((id, i)))?),
            };
            self.b.set_arg(id, i, arg);
        }
        self.expect(Kind::Close)?;
        Ok(id)
    }

    /// Count top-level commas of the argument list starting at `(`.
    fn count_args(&self) -> Result<usize> {
        let mut depth = 0usize;
        let mut n = 1;
        for t in &self.tokens[self.at..] {
            match t.kind {
                Kind::Open => depth += 1,
                Kind::Close => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(n);
                    }
                }
                Kind::Comma if depth == 1 => n += 1,
                _ => {}
            }
        }
        Err(Error::Syntax {
            pos: self.len,
            msg: "unbalanced '('".into(),
        })
    }
}
