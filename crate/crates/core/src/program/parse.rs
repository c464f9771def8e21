//! Line-oriented parser for the program DSL.
//!
//! ```text
//! shared x : 0..2 = 0
//! thread A {
//!   local r : 0..2 = 0
//!   L0: read r := x goto L1
//!   L1: readbr x = 1 ? L2 : L0
//!   L2: write x := r + 1 goto L3
//!   L3: br r > 0 ? L0 : L4
//!   L4: let r := 0 goto L5
//!   L5: halt
//! }
//! ```
//!
//! `#` and `//` start comments. The first instruction of a thread is its entry.

use std::collections::BTreeMap;

use super::{CmpOp, Expr, Instruction, Program, ThreadDef, VarDecl};
use crate::error::{Error, Result};
use crate::formula::ThreadId;

pub fn parse_program(src: &str) -> Result<Program> {
    let mut shared: Vec<VarDecl> = Vec::new();
    let mut raw_threads: Vec<RawThread> = Vec::new();
    let mut current: Option<RawThread> = None;

    for (i, raw) in src.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::syntax(line_no, 1, msg);
        if let Some(t) = current.as_mut() {
            if line == "}" {
                raw_threads.push(current.take().unwrap());
            } else if let Some(rest) = line.strip_prefix("local ") {
                if !t.instrs.is_empty() {
                    return Err(err("local declarations must precede instructions".into()));
                }
                let d = parse_decl(rest).map_err(err)?;
                if d.name.starts_with("lr_") {
                    return Err(err(format!("`{}`: the lr_ prefix is reserved", d.name)));
                }
                t.locals.push(d);
            } else {
                let (label, body) = line
                    .split_once(':')
                    .ok_or_else(|| err(format!("expected `label: instruction`, found `{line}`")))?;
                let label = label.trim();
                if !is_ident(label) {
                    return Err(err(format!("bad label `{label}`")));
                }
                t.instrs.push((line_no, label.to_string(), body.trim().to_string()));
            }
        } else if let Some(rest) = line.strip_prefix("shared ") {
            shared.push(parse_decl(rest).map_err(err)?);
        } else if let Some(rest) = line.strip_prefix("thread ") {
            let name = rest
                .strip_suffix('{')
                .map(str::trim)
                .ok_or_else(|| err("expected `thread Name {`".into()))?;
            if !is_ident(name) {
                return Err(err(format!("bad thread name `{name}`")));
            }
            current = Some(RawThread {
                name: name.to_string(),
                line: line_no,
                locals: Vec::new(),
                instrs: Vec::new(),
            });
        } else {
            return Err(err(format!("unexpected `{line}`")));
        }
    }
    if let Some(t) = current {
        return Err(Error::syntax(t.line, 1, format!("thread {} is not closed", t.name)));
    }
    if raw_threads.is_empty() {
        return Err(Error::Program("no threads".into()));
    }
    check_unique(shared.iter().map(|d| d.name.as_str()), "shared variable")?;
    check_unique(raw_threads.iter().map(|t| t.name.as_str()), "thread")?;
    raw_threads.sort_by(|a, b| a.name.cmp(&b.name));
    let threads = raw_threads
        .into_iter()
        .map(|t| build_thread(&shared, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Program { shared, threads })
}

struct RawThread {
    name: String,
    line: usize,
    locals: Vec<VarDecl>,
    instrs: Vec<(usize, String, String)>,
}

fn strip_comment(line: &str) -> &str {
    let cut = [line.find('#'), line.find("//")]
        .into_iter()
        .flatten()
        .min()
        .unwrap_or(line.len());
    &line[..cut]
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_unique<'a>(names: impl Iterator<Item = &'a str>, what: &str) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(Error::Program(format!("duplicate {what} `{n}`")));
        }
    }
    Ok(())
}

/// `name : lo..hi = init`
fn parse_decl(s: &str) -> Result<VarDecl, String> {
    let (name, rest) = s.split_once(':').ok_or("expected `name : lo..hi = init`")?;
    let (range, init) = rest.split_once('=').ok_or("missing `= init`")?;
    let (lo, hi) = range.trim().split_once("..").ok_or("expected range `lo..hi`")?;
    let num = |t: &str| {
        t.trim()
            .parse::<i64>()
            .map_err(|_| format!("expected integer, found `{}`", t.trim()))
    };
    let d = VarDecl {
        name: name.trim().to_string(),
        lo: num(lo)?,
        hi: num(hi)?,
        init: num(init)?,
    };
    if !is_ident(&d.name) {
        return Err(format!("bad variable name `{}`", d.name));
    }
    if d.lo > d.hi {
        return Err(format!("empty range {}..{}", d.lo, d.hi));
    }
    if !d.contains(d.init) {
        return Err(format!("initial value {} outside {}..{}", d.init, d.lo, d.hi));
    }
    Ok(d)
}

fn build_thread(shared: &[VarDecl], raw: RawThread) -> Result<ThreadDef> {
    if raw.instrs.is_empty() {
        return Err(Error::Program(format!("thread {} has no instructions", raw.name)));
    }
    check_unique(raw.locals.iter().map(|d| d.name.as_str()), "local")?;
    for d in &raw.locals {
        if shared.iter().any(|s| s.name == d.name) {
            return Err(Error::Program(format!(
                "local `{}` of thread {} shadows a shared variable",
                d.name, raw.name
            )));
        }
    }
    let locations: Vec<String> = raw.instrs.iter().map(|(_, l, _)| l.clone()).collect();
    check_unique(locations.iter().map(String::as_str), "location")?;
    let loc_index: BTreeMap<&str, usize> = locations
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();

    let ctx = Ctx {
        shared,
        locals: &raw.locals,
        locs: &loc_index,
    };
    let mut instrs = Vec::new();
    for (line, label, body) in &raw.instrs {
        let ins = ctx.instruction(body).map_err(|m| Error::syntax(*line, 1, m))?;
        // Constant right-hand sides are checked now rather than at run time.
        let target = match &ins {
            Instruction::WriteShared { var, rhs, .. } => Some((&shared[*var], rhs)),
            Instruction::AssignLocal { dest, rhs, .. } => Some((&raw.locals[*dest], rhs)),
            _ => None,
        };
        if let Some((decl, v)) = target.and_then(|(d, rhs)| rhs.constant().map(|v| (d, v))) {
            if !decl.contains(v) {
                return Err(Error::Domain(format!(
                    "{}.{label}: `{}` := {v} outside {}..{}",
                    raw.name, decl.name, decl.lo, decl.hi
                )));
            }
        }
        instrs.push(ins);
    }

    // One last-read register per shared variable the thread reads.
    let mut locals = raw.locals.clone();
    let mut lr = vec![None; shared.len()];
    for ins in &instrs {
        if let Instruction::ReadShared { var, .. } | Instruction::ReadBranch { var, .. } = ins {
            if lr[*var].is_none() {
                let d = &shared[*var];
                lr[*var] = Some(locals.len());
                locals.push(VarDecl {
                    name: format!("lr_{}", d.name),
                    lo: d.lo,
                    hi: d.hi,
                    init: d.init,
                });
            }
        }
    }
    Ok(ThreadDef {
        id: ThreadId::new(raw.name),
        locals,
        lr,
        locations,
        instrs,
        entry: 0,
    })
}

struct Ctx<'a> {
    shared: &'a [VarDecl],
    locals: &'a [VarDecl],
    locs: &'a BTreeMap<&'a str, usize>,
}

impl Ctx<'_> {
    fn loc(&self, name: &str) -> Result<usize, String> {
        self.locs
            .get(name.trim())
            .copied()
            .ok_or_else(|| format!("unknown location `{}`", name.trim()))
    }

    fn shared_var(&self, name: &str) -> Result<usize, String> {
        self.shared
            .iter()
            .position(|d| d.name == name.trim())
            .ok_or_else(|| format!("unknown shared variable `{}`", name.trim()))
    }

    fn local_var(&self, name: &str) -> Result<usize, String> {
        self.locals
            .iter()
            .position(|d| d.name == name.trim())
            .ok_or_else(|| format!("unknown local `{}`", name.trim()))
    }

    fn expr(&self, s: &str) -> Result<Expr, String> {
        let toks = tokenize(s)?;
        let mut p = ExprParser { toks, pos: 0, ctx: self };
        let e = p.or()?;
        if p.pos != p.toks.len() {
            return Err(format!("trailing input in expression `{s}`"));
        }
        Ok(e)
    }

    /// `rest` is `X goto L`; returns X and the target.
    fn goto<'s>(&self, rest: &'s str) -> Result<(&'s str, usize), String> {
        let (lhs, target) = rest.rsplit_once(" goto ").ok_or("expected `goto <label>`")?;
        Ok((lhs, self.loc(target)?))
    }

    /// `cond ? L1 : L2`
    fn branch<'s>(&self, rest: &'s str) -> Result<(&'s str, usize, usize), String> {
        let (cond, targets) = rest.rsplit_once('?').ok_or("expected `? then : else`")?;
        let (t, e) = targets.split_once(':').ok_or("expected `then : else`")?;
        Ok((cond, self.loc(t)?, self.loc(e)?))
    }

    fn instruction(&self, body: &str) -> Result<Instruction, String> {
        let (op, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest = rest.trim();
        match op {
            "halt" if rest.is_empty() => Ok(Instruction::Halt),
            "write" => {
                let (assign, next) = self.goto(rest)?;
                let (var, rhs) = assign.split_once(":=").ok_or("expected `x := expr`")?;
                Ok(Instruction::WriteShared {
                    var: self.shared_var(var)?,
                    rhs: self.expr(rhs)?,
                    next,
                })
            }
            "read" => {
                let (assign, next) = self.goto(rest)?;
                let (dest, var) = assign.split_once(":=").ok_or("expected `r := x`")?;
                Ok(Instruction::ReadShared {
                    dest: self.local_var(dest)?,
                    var: self.shared_var(var)?,
                    next,
                })
            }
            "let" => {
                let (assign, next) = self.goto(rest)?;
                let (dest, rhs) = assign.split_once(":=").ok_or("expected `r := expr`")?;
                Ok(Instruction::AssignLocal {
                    dest: self.local_var(dest)?,
                    rhs: self.expr(rhs)?,
                    next,
                })
            }
            "readbr" => {
                let (cond, then_loc, else_loc) = self.branch(rest)?;
                let toks = tokenize(cond)?;
                let [Tok::Ident(var), Tok::Op(op), value] = toks.as_slice() else {
                    return Err(format!("expected `x <cmp> value`, found `{}`", cond.trim()));
                };
                let op = cmp_op(op).ok_or_else(|| format!("expected comparison, found `{op}`"))?;
                let value = match value {
                    Tok::Int(v) => *v,
                    Tok::Op(o) if o == "-" => return Err("write negative constants without spaces".into()),
                    _ => return Err("readbr compares against an integer constant".into()),
                };
                Ok(Instruction::ReadBranch {
                    var: self.shared_var(var)?,
                    op,
                    value,
                    then_loc,
                    else_loc,
                })
            }
            "br" => {
                let (cond, then_loc, else_loc) = self.branch(rest)?;
                Ok(Instruction::BranchLocal {
                    cond: self.expr(cond)?,
                    then_loc,
                    else_loc,
                })
            }
            _ => Err(format!("unknown instruction `{body}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Ident(String),
    Op(String),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit()
            || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) && !last_is_operand(&out))
        {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Tok::Int(text.parse().map_err(|_| format!("bad integer `{text}`"))?));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let op = ["==", "!=", "<=", ">=", "&&", "||"]
                .into_iter()
                .find(|o| *o == two)
                .map(str::to_string)
                .or_else(|| "+-<>!=()".contains(c).then(|| c.to_string()))
                .ok_or_else(|| format!("unexpected character `{c}`"))?;
            i += op.len();
            out.push(Tok::Op(op));
        }
    }
    Ok(out)
}

fn last_is_operand(toks: &[Tok]) -> bool {
    match toks.last() {
        Some(Tok::Int(_) | Tok::Ident(_)) => true,
        Some(Tok::Op(o)) => o == ")",
        None => false,
    }
}

fn cmp_op(s: &str) -> Option<CmpOp> {
    Some(match s {
        "=" | "==" => CmpOp::Eq,
        "!=" => CmpOp::Ne,
        "<" => CmpOp::Lt,
        "<=" => CmpOp::Le,
        ">" => CmpOp::Gt,
        ">=" => CmpOp::Ge,
        _ => return None,
    })
}

struct ExprParser<'a, 'c> {
    toks: Vec<Tok>,
    pos: usize,
    ctx: &'a Ctx<'c>,
}

impl ExprParser<'_, '_> {
    fn peek_op(&self) -> Option<&str> {
        match self.toks.get(self.pos) {
            Some(Tok::Op(o)) => Some(o),
            _ => None,
        }
    }

    fn eat(&mut self, op: &str) -> bool {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<Expr, String> {
        let mut e = self.and()?;
        while self.eat("||") {
            e = Expr::Or(Box::new(e), Box::new(self.and()?));
        }
        Ok(e)
    }

    fn and(&mut self) -> Result<Expr, String> {
        let mut e = self.cmp()?;
        while self.eat("&&") {
            e = Expr::And(Box::new(e), Box::new(self.cmp()?));
        }
        Ok(e)
    }

    fn cmp(&mut self) -> Result<Expr, String> {
        let e = self.sum()?;
        if let Some(op) = self.peek_op().and_then(cmp_op) {
            self.pos += 1;
            return Ok(Expr::Cmp(op, Box::new(e), Box::new(self.sum()?)));
        }
        Ok(e)
    }

    fn sum(&mut self) -> Result<Expr, String> {
        let mut e = self.unary()?;
        loop {
            if self.eat("+") {
                e = Expr::Add(Box::new(e), Box::new(self.unary()?));
            } else if self.eat("-") {
                e = Expr::Sub(Box::new(e), Box::new(self.unary()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, String> {
        if self.eat("!") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.eat("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat("(") {
            let e = self.or()?;
            if !self.eat(")") {
                return Err("expected `)`".into());
            }
            return Ok(e);
        }
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.ctx.shared.iter().any(|d| d.name == name) {
                    return Err(format!(
                        "shared variable `{name}` in a local expression; read it into a local first"
                    ));
                }
                Ok(Expr::Local(self.ctx.local_var(&name)?))
            }
            Some(t) => Err(format!("unexpected `{t:?}` in expression")),
            None => Err("unexpected end of expression".into()),
        }
    }
}
