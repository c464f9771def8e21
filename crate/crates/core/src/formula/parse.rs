use super::{Atom, DerivedMacro, Formula, ThreadId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bang,
    Amp,
    Pipe,
    Arrow,
    DArrow,
    Eq,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut push = |tok, len: usize, i: &mut usize, col: &mut usize| {
            out.push(Spanned {
                tok,
                line: l0,
                col: c0,
            });
            *i += len;
            *col += len;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '[' => push(Tok::LBracket, 1, &mut i, &mut col),
            ']' => push(Tok::RBracket, 1, &mut i, &mut col),
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            '!' => push(Tok::Bang, 1, &mut i, &mut col),
            '&' => push(Tok::Amp, 1, &mut i, &mut col),
            '|' => push(Tok::Pipe, 1, &mut i, &mut col),
            '=' => push(Tok::Eq, 1, &mut i, &mut col),
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                push(Tok::DArrow, 3, &mut i, &mut col)
            }
            '-' if chars.get(i + 1) == Some(&'>') => push(Tok::Arrow, 2, &mut i, &mut col),
            '-' | '0'..='9' => {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let s: String = chars[start..j].iter().collect();
                let v: i64 = s
                    .parse()
                    .map_err(|_| Error::syntax(l0, c0, format!("bad integer `{s}`")))?;
                push(Tok::Int(v), j - start, &mut i, &mut col);
            }
            c if is_ident_start(c) => {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                let s: String = chars[start..j].iter().collect();
                push(Tok::Ident(s), j - start, &mut i, &mut col);
            }
            other => return Err(Error::syntax(l0, c0, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

/// Words that cannot name propositions, variables or threads.
pub(crate) const RESERVED: &[&str] = &["S", "Y", "H", "O", "K", "true", "false", "init", "at", "active"];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Arg {
    Thread,
    Var,
    Form,
}

fn macro_signature(name: &str) -> Option<&'static [Arg]> {
    use Arg::*;
    Some(match name {
        "after" => &[Thread],
        "lastA" | "preA" | "est" | "stable" | "presA" => &[Thread, Form],
        "frame" | "write" => &[Thread, Var],
        "chg" => &[Var],
        "pres" => &[Form],
        "prec" | "lastW" | "nsince" => &[Form, Form],
        _ => return None,
    })
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let s = &self.toks[self.pos];
        Error::syntax(s.line, s.col, msg)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}, found {}", describe(self.peek()))))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.next();
                Ok(s)
            }
            other => Err(self.err(format!("expected {what}, found {}", describe(&other)))),
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn iff(&mut self) -> Result<Formula> {
        let mut lhs = self.implies()?;
        while *self.peek() == Tok::DArrow {
            self.next();
            let rhs = self.implies()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.next();
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Pipe {
            self.next();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut lhs = self.since()?;
        while *self.peek() == Tok::Amp {
            self.next();
            let rhs = self.since()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn since(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while self.is_kw("S") {
            self.next();
            let rhs = self.unary()?;
            lhs = Formula::since(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek().clone() {
            Tok::Bang => {
                self.next();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(s) if s == "Y" => {
                self.next();
                Ok(Formula::prev(self.unary()?))
            }
            Tok::Ident(s) if s == "H" => {
                self.next();
                Ok(Formula::always(self.unary()?))
            }
            Tok::Ident(s) if s == "O" => {
                self.next();
                Ok(Formula::sometime(self.unary()?))
            }
            Tok::Ident(s) if s == "K" => {
                self.next();
                self.expect(Tok::LBracket, "`[` after K")?;
                let t = self.ident("thread identifier")?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Formula::knows(ThreadId::new(t), self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula> {
        match self.peek().clone() {
            Tok::LParen => {
                self.next();
                let f = self.iff()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(s) => match s.as_str() {
                "true" => {
                    self.next();
                    Ok(Formula::Top)
                }
                "false" => {
                    self.next();
                    Ok(Formula::Bottom)
                }
                "init" => {
                    self.next();
                    Ok(Formula::init())
                }
                "at" => {
                    self.next();
                    self.expect(Tok::LParen, "`(` after at")?;
                    let t = self.ident("thread identifier")?;
                    self.expect(Tok::Comma, "`,`")?;
                    let loc = self.ident("location")?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Formula::at(ThreadId::new(t), loc))
                }
                "active" => {
                    self.next();
                    self.expect(Tok::LParen, "`(` after active")?;
                    let t = self.ident("thread identifier")?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Formula::active(ThreadId::new(t)))
                }
                "S" | "Y" | "H" | "O" | "K" => Err(self.err(format!("unexpected operator `{s}`"))),
                _ => {
                    self.next();
                    match self.peek().clone() {
                        Tok::Eq => {
                            self.next();
                            self.atom_rhs(s)
                        }
                        Tok::LParen => self.macro_call(s),
                        _ => Ok(Formula::Prop(s)),
                    }
                }
            },
            other => Err(self.err(format!("expected a formula, found {}", describe(&other)))),
        }
    }

    fn atom_rhs(&mut self, var: String) -> Result<Formula> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(Formula::var_eq(var, v))
            }
            Tok::Ident(y) if y == "Y" => {
                self.next();
                let other = self.ident("variable")?;
                if other != var {
                    return Err(self.err(format!(
                        "`{var} = Y {other}`: only `x = Y x` is supported"
                    )));
                }
                Ok(Formula::Atom(Atom::VarEqPrevSelf { var }))
            }
            other => Err(self.err(format!("expected an integer after `=`, found {}", describe(&other)))),
        }
    }

    fn macro_call(&mut self, name: String) -> Result<Formula> {
        let sig = macro_signature(&name).ok_or_else(|| Error::UnknownMacro(name.clone()))?;
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.iff()?);
                if *self.peek() == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        if args.len() != sig.len() {
            return Err(Error::Arity {
                name,
                expected: sig.len(),
                found: args.len(),
            });
        }
        if name == "nsince" {
            let mut it = args.into_iter();
            let a = it.next().unwrap();
            return Ok(Formula::NegSince(Box::new(a), Box::new(it.next().unwrap())));
        }
        build_macro(&name, args).map(Formula::derived)
    }
}

fn name_arg(macro_name: &str, f: Formula, kind: &str) -> Result<String> {
    match f {
        Formula::Prop(s) => Ok(s),
        other => Err(Error::Program(format!(
            "argument of `{macro_name}` must be a {kind} name, found `{other}`"
        ))),
    }
}

fn build_macro(name: &str, args: Vec<Formula>) -> Result<DerivedMacro> {
    let mut it = args.into_iter();
    let mut next = || it.next().expect("arity checked");
    let thread = |f: Formula| name_arg(name, f, "thread").map(ThreadId::new);
    let var = |f: Formula| name_arg(name, f, "variable");
    Ok(match name {
        "after" => DerivedMacro::After(thread(next())?),
        "lastA" => DerivedMacro::LastA(thread(next())?, next()),
        "preA" => DerivedMacro::PreA(thread(next())?, next()),
        "est" => DerivedMacro::Est(thread(next())?, next()),
        "stable" => DerivedMacro::Stable(thread(next())?, next()),
        "presA" => DerivedMacro::PresA(thread(next())?, next()),
        "frame" => DerivedMacro::Frame(thread(next())?, var(next())?),
        "write" => DerivedMacro::WriteBy(thread(next())?, var(next())?),
        "chg" => DerivedMacro::Chg(var(next())?),
        "pres" => DerivedMacro::Pres(next()),
        "prec" => {
            let a = next();
            DerivedMacro::HappensBefore(a, next())
        }
        "lastW" => {
            let a = next();
            DerivedMacro::LastW(a, next())
        }
        other => return Err(Error::UnknownMacro(other.to_string())),
    })
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Amp => "`&`".into(),
        Tok::Pipe => "`|`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::DArrow => "`<->`".into(),
        Tok::Eq => "`=`".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parse a formula in the concrete syntax.
///
/// Precedence, tightest first: the prefix operators `!`, `Y`, `H`, `O`,
/// `K[T]`; then `S` (left-assoc); `&`; `|`; `->` (right-assoc); `<->`.
pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.iff()?;
    if *p.peek() != Tok::Eof {
        return Err(p.err(format!("unexpected {} after formula", describe(p.peek()))));
    }
    Ok(f)
}
