//! Spec files: named formulas, model constraints, rely-guarantee interfaces
//! and check directives.
//!
//! ```text
//! def InCS_0 := at(T0, cs)
//! constraint Code := H (!after(T0) -> flag0 = Y flag0)
//! guarantee T0 : flag1 = Y flag1
//! rely T0 : flag0 = Y flag0
//! check mutex valid-bounded D=14 audit=2 : H !(InCS_0 & InCS_1)
//! check own-flag stepspec env(T0) : flag0 = Y flag0
//! obligation parallel Inductive
//! ```
//!
//! Lines starting with whitespace continue the previous stanza. Names
//! defined with `def` or `constraint` may be used in any later formula.

use std::collections::BTreeMap;

use ptel::formula::{parse_formula, Formula};
use ptel::Error;

/// Largest bound accepted in a directive; the node cap guards memory anyway.
pub const MAX_DEPTH: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScopeSpec {
    Own(String),
    Env(String),
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectiveKind {
    Invariant {
        formula: Formula,
        constraint: Option<String>,
    },
    ValidBounded {
        formula: Formula,
        depth: usize,
        audit: Option<usize>,
        constraint: Option<String>,
    },
    StepSpec {
        scope: ScopeSpec,
        formula: Formula,
    },
    Compat {
        thread: String,
    },
    Preservation {
        invariant: String,
    },
    Parallel {
        invariant: String,
    },
}

impl DirectiveKind {
    pub fn tag(&self) -> &'static str {
        match self {
            DirectiveKind::Invariant { .. } => "invariant",
            DirectiveKind::ValidBounded { .. } => "valid-bounded",
            DirectiveKind::StepSpec { .. } => "stepspec",
            DirectiveKind::Compat { .. } => "compat",
            DirectiveKind::Preservation { .. } => "preservation",
            DirectiveKind::Parallel { .. } => "parallel",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Directive {
    pub name: String,
    pub line: usize,
    pub kind: DirectiveKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpecFile {
    /// Fully resolved: no definition mentions another by name.
    pub defs: BTreeMap<String, Formula>,
    pub constraints: Vec<String>,
    pub guarantees: Vec<(String, Formula)>,
    pub relies: Vec<(String, Formula)>,
    pub directives: Vec<Directive>,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::syntax(line, 1, msg)
}

fn is_name(s: &str) -> bool {
    let mut cs = s.chars();
    cs.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl SpecFile {
    /// Replace every defined name in `f`; names left over are errors.
    pub fn resolve(&self, f: &Formula) -> ptel::Result<Formula> {
        let out = f.substitute(&|name| self.defs.get(name).cloned());
        match out.props().first() {
            Some(name) => Err(Error::UnknownName(name.clone())),
            None => Ok(out),
        }
    }

    pub fn def(&self, name: &str) -> ptel::Result<&Formula> {
        self.defs.get(name).ok_or_else(|| Error::UnknownName(name.to_string()))
    }

    fn formula(&self, line: usize, text: &str) -> ptel::Result<Formula> {
        let f = parse_formula(text).map_err(|e| err(line, format!("in `{}`: {e}", text.trim())))?;
        self.resolve(&f).map_err(|e| err(line, e.to_string()))
    }

    fn defined(&self, line: usize, name: &str) -> ptel::Result<String> {
        if self.defs.contains_key(name) {
            Ok(name.to_string())
        } else {
            Err(err(line, format!("`{name}` is not defined")))
        }
    }
}

/// Join continuation lines and drop comments and blanks.
fn stanzas(src: &str) -> Vec<(usize, String)> {
    let mut out: Vec<(usize, String)> = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        match out.last_mut() {
            Some((_, text)) if line.starts_with(char::is_whitespace) => {
                text.push(' ');
                text.push_str(line.trim());
            }
            _ => out.push((i + 1, line.trim().to_string())),
        }
    }
    out
}

fn scope(line: usize, s: &str) -> ptel::Result<ScopeSpec> {
    let inner = |pre: &str| s.strip_prefix(pre).and_then(|r| r.strip_suffix(')')).map(str::trim);
    if s == "all" {
        Ok(ScopeSpec::All)
    } else if let Some(t) = inner("own(") {
        Ok(ScopeSpec::Own(t.to_string()))
    } else if let Some(t) = inner("env(") {
        Ok(ScopeSpec::Env(t.to_string()))
    } else {
        Err(err(line, format!("bad step scope `{s}`; expected own(T), env(T) or all")))
    }
}

pub fn parse_spec(src: &str) -> ptel::Result<SpecFile> {
    let mut spec = SpecFile::default();
    for (line, text) in stanzas(src) {
        let (kw, rest) = text.split_once(char::is_whitespace).unwrap_or((text.as_str(), ""));
        let rest = rest.trim();
        match kw {
            "def" | "constraint" => {
                let (name, body) = rest
                    .split_once(":=")
                    .ok_or_else(|| err(line, format!("expected `{kw} Name := formula`")))?;
                let name = name.trim();
                if !is_name(name) {
                    return Err(err(line, format!("bad name `{name}`")));
                }
                if spec.defs.contains_key(name) {
                    return Err(err(line, format!("`{name}` defined twice")));
                }
                let f = spec.formula(line, body)?;
                spec.defs.insert(name.to_string(), f);
                if kw == "constraint" {
                    spec.constraints.push(name.to_string());
                }
            }
            "guarantee" | "rely" => {
                let (thread, body) = rest
                    .split_once(':')
                    .ok_or_else(|| err(line, format!("expected `{kw} T : formula`")))?;
                let entry = (thread.trim().to_string(), spec.formula(line, body)?);
                if kw == "guarantee" {
                    spec.guarantees.push(entry);
                } else {
                    spec.relies.push(entry);
                }
            }
            "check" => {
                let (head, body) = rest
                    .split_once(" :")
                    .ok_or_else(|| err(line, "expected `check name mode [params] : formula`"))?;
                let words: Vec<&str> = head.split_whitespace().collect();
                let [name, mode, params @ ..] = words.as_slice() else {
                    return Err(err(line, "expected `check name mode [params] : formula`"));
                };
                let formula = spec.formula(line, body)?;
                let kind = check_kind(&spec, line, mode, params, formula)?;
                push(&mut spec, line, name.to_string(), kind)?;
            }
            "obligation" => {
                let words: Vec<&str> = rest.split_whitespace().collect();
                let kind = match words.as_slice() {
                    ["compat", t] => DirectiveKind::Compat { thread: t.to_string() },
                    ["invariant", i] => DirectiveKind::Preservation {
                        invariant: spec.defined(line, i)?,
                    },
                    ["parallel", i] => DirectiveKind::Parallel {
                        invariant: spec.defined(line, i)?,
                    },
                    _ => {
                        return Err(err(
                            line,
                            "expected `obligation compat T`, `obligation invariant I` or `obligation parallel I`",
                        ))
                    }
                };
                push(&mut spec, line, words.join(" "), kind)?;
            }
            other => return Err(err(line, format!("unknown stanza `{other}`"))),
        }
    }
    Ok(spec)
}

fn push(spec: &mut SpecFile, line: usize, name: String, kind: DirectiveKind) -> ptel::Result<()> {
    if spec.directives.iter().any(|d| d.name == name) {
        return Err(err(line, format!("directive `{name}` appears twice")));
    }
    spec.directives.push(Directive { name, line, kind });
    Ok(())
}

fn check_kind(
    spec: &SpecFile,
    line: usize,
    mode: &str,
    params: &[&str],
    formula: Formula,
) -> ptel::Result<DirectiveKind> {
    let mut depth = None;
    let mut audit = None;
    let mut constraint = None;
    let mut scope_arg = None;
    for p in params {
        let number = |v: &str| {
            v.parse::<usize>()
                .ok()
                .filter(|&n| n <= MAX_DEPTH)
                .ok_or_else(|| err(line, format!("`{p}`: expected a number up to {MAX_DEPTH}")))
        };
        match p.split_once('=') {
            Some(("D", v)) => depth = Some(number(v)?),
            Some(("audit", v)) => audit = Some(number(v)?).filter(|&n| n > 0),
            Some(("constraint", v)) => {
                if !spec.constraints.iter().any(|c| c == v) {
                    return Err(err(line, format!("`{v}` is not a declared constraint")));
                }
                constraint = Some(v.to_string());
            }
            _ if mode == "stepspec" && scope_arg.is_none() => scope_arg = Some(scope(line, p)?),
            _ => return Err(err(line, format!("unexpected parameter `{p}` for {mode}"))),
        }
    }
    let unused = |what: &str, present: bool| {
        if present {
            Err(err(line, format!("{mode} takes no {what}")))
        } else {
            Ok(())
        }
    };
    match mode {
        "invariant" => {
            unused("depth", depth.is_some() || audit.is_some())?;
            Ok(DirectiveKind::Invariant { formula, constraint })
        }
        "valid-bounded" => Ok(DirectiveKind::ValidBounded {
            formula,
            depth: depth.ok_or_else(|| err(line, "valid-bounded needs D=n"))?,
            audit,
            constraint,
        }),
        "stepspec" => {
            unused("depth or constraint", depth.is_some() || audit.is_some() || constraint.is_some())?;
            Ok(DirectiveKind::StepSpec {
                scope: scope_arg.ok_or_else(|| err(line, "stepspec needs a scope: own(T), env(T) or all"))?,
                formula,
            })
        }
        other => Err(err(line, format!("unknown check mode `{other}`"))),
    }
}
