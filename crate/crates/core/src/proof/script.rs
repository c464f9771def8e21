//! S-expression proof scripts.
//!
//! ```text
//! ; comment
//! (rule T (seq ("K[A] p") p)
//!   (rule axiom (seq ("K[A] p") "K[A] p")))
//! ```
//!
//! The `rule` keyword is optional. Formulas are double-quoted strings or bare
//! symbols, both in the formula syntax.

use super::{Derivation, Rule, Sequent};
use crate::error::{Error, Result};
use crate::formula::{parse_formula, Formula};

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Sym(String, usize),
    Str(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn line(&self) -> usize {
        match self {
            Sexp::Sym(_, l) | Sexp::Str(_, l) | Sexp::List(_, l) => *l,
        }
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::syntax(line, 1, msg)
}

fn read_all(src: &str) -> Result<Vec<Sexp>> {
    let chars: Vec<char> = src.chars().collect();
    let mut pos = 0;
    let mut line = 1;
    let mut stack: Vec<(Vec<Sexp>, usize)> = Vec::new();
    let mut top = Vec::new();
    let push = |stack: &mut Vec<(Vec<Sexp>, usize)>, top: &mut Vec<Sexp>, x: Sexp| match stack.last_mut() {
        Some((items, _)) => items.push(x),
        None => top.push(x),
    };
    while pos < chars.len() {
        let c = chars[pos];
        match c {
            '\n' => {
                line += 1;
                pos += 1;
            }
            c if c.is_whitespace() => pos += 1,
            ';' => {
                while pos < chars.len() && chars[pos] != '\n' {
                    pos += 1;
                }
            }
            '(' => {
                stack.push((Vec::new(), line));
                pos += 1;
            }
            ')' => {
                let (items, l) = stack.pop().ok_or_else(|| err(line, "unbalanced `)`"))?;
                push(&mut stack, &mut top, Sexp::List(items, l));
                pos += 1;
            }
            '"' => {
                let start_line = line;
                pos += 1;
                let mut s = String::new();
                loop {
                    match chars.get(pos) {
                        None => return Err(err(start_line, "unterminated string")),
                        Some('"') => break,
                        Some('\\') if chars.get(pos + 1) == Some(&'"') => {
                            s.push('"');
                            pos += 1;
                        }
                        Some(&ch) => {
                            if ch == '\n' {
                                line += 1;
                            }
                            s.push(ch);
                        }
                    }
                    pos += 1;
                }
                pos += 1;
                push(&mut stack, &mut top, Sexp::Str(s, start_line));
            }
            _ => {
                let start = pos;
                while pos < chars.len() && !chars[pos].is_whitespace() && !"()\";".contains(chars[pos]) {
                    pos += 1;
                }
                let sym: String = chars[start..pos].iter().collect();
                push(&mut stack, &mut top, Sexp::Sym(sym, line));
            }
        }
    }
    if let Some((_, l)) = stack.last() {
        return Err(err(*l, "unbalanced `(`"));
    }
    Ok(top)
}

fn formula(x: &Sexp) -> Result<Formula> {
    match x {
        Sexp::Sym(s, l) | Sexp::Str(s, l) => parse_formula(s).map_err(|e| err(*l, format!("in formula `{s}`: {e}"))),
        Sexp::List(_, l) => Err(err(*l, "expected a formula, found a list")),
    }
}

fn sequent(x: &Sexp) -> Result<Sequent> {
    let Sexp::List(items, l) = x else {
        return Err(err(x.line(), "expected `(seq (hyps...) goal)`"));
    };
    match items.as_slice() {
        [Sexp::Sym(kw, _), Sexp::List(hyps, _), goal] if kw == "seq" => Ok(Sequent {
            hyps: hyps.iter().map(formula).collect::<Result<_>>()?,
            goal: formula(goal)?,
        }),
        _ => Err(err(*l, "expected `(seq (hyps...) goal)`")),
    }
}

fn derivation(x: &Sexp) -> Result<Derivation> {
    let Sexp::List(items, l) = x else {
        return Err(err(x.line(), "expected a rule application `(rule name (seq ...) premises...)`"));
    };
    let items = match items.as_slice() {
        [Sexp::Sym(kw, _), rest @ ..] if kw == "rule" => rest,
        all => all,
    };
    let [Sexp::Sym(name, nl), seq, premises @ ..] = items else {
        return Err(err(*l, "expected `(rule name (seq ...) premises...)`"));
    };
    let rule = Rule::from_name(name).ok_or_else(|| err(*nl, format!("unknown rule `{name}`")))?;
    if premises.len() != rule.arity() {
        return Err(err(
            *l,
            format!("rule {name} takes {} premise(s), found {}", rule.arity(), premises.len()),
        ));
    }
    Ok(Derivation {
        rule,
        conclusion: sequent(seq)?,
        premises: premises.iter().map(derivation).collect::<Result<_>>()?,
    })
}

/// Parse every top-level derivation in a script.
pub fn parse_derivations(src: &str) -> Result<Vec<Derivation>> {
    read_all(src)?.iter().map(derivation).collect()
}

fn quote(f: &Formula) -> String {
    format!("\"{}\"", f.to_string().replace('"', "\\\""))
}

/// Render in the long form, one rule application per line.
pub fn render_derivation(d: &Derivation) -> String {
    let mut out = String::new();
    render(d, 0, &mut out);
    out
}

fn render(d: &Derivation, indent: usize, out: &mut String) {
    let hyps: Vec<String> = d.conclusion.hyps.iter().map(quote).collect();
    out.push_str(&" ".repeat(indent));
    out.push_str(&format!(
        "(rule {} (seq ({}) {})",
        d.rule,
        hyps.join(" "),
        quote(&d.conclusion.goal)
    ));
    for p in &d.premises {
        out.push('\n');
        render(p, indent + 2, out);
    }
    out.push(')');
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaf() {
        let ds = parse_derivations("(axiom (seq (p) p))").unwrap();
        assert_eq!(ds[0].rule, Rule::Axiom);
        assert_eq!(ds[0].conclusion.goal, Formula::prop("p"));
    }

    #[test]
    fn round_trip() {
        let src = r#"
            ; T over an axiom
            (rule T (seq ("K[A] p") p)
              (rule axiom (seq ("K[A] p") "K[A] p")))
            (sinceI1 (seq (q) "p S q") (axiom (seq (q) q)))
        "#;
        let ds = parse_derivations(src).unwrap();
        assert_eq!(ds.len(), 2);
        for d in &ds {
            let again = parse_derivations(&render_derivation(d)).unwrap();
            assert_eq!(again, vec![d.clone()]);
        }
    }

    #[test]
    fn errors() {
        assert!(parse_derivations("(axoim (seq (p) p))").unwrap_err().to_string().contains("unknown rule"));
        assert!(parse_derivations("(axiom (seq (p) p)").is_err());
        assert!(parse_derivations("(T (seq (p) p))").unwrap_err().to_string().contains("premise"));
        assert!(parse_derivations("(axiom (seq (\"p &\") p))").is_err());
        assert!(parse_derivations("(axiom (sq (p) p))").is_err());
    }
}
