use super::{Atom, DerivedMacro, Formula, ThreadId};
use crate::error::{Error, Result};

/// Finite domains of the variables a formula may mention.
pub trait VarDomains {
    /// Inclusive `(lo, hi)` range of `var`, if known.
    fn domain(&self, var: &str) -> Option<(i64, i64)>;
}

/// No variables known; `chg`, `frame`, `write` and `x = Y x` fail to expand.
pub struct NoDomains;

impl VarDomains for NoDomains {
    fn domain(&self, _: &str) -> Option<(i64, i64)> {
        None
    }
}

/// State formulas: atoms and letters under Boolean connectives only.
pub fn is_extensional(f: &Formula) -> bool {
    let mut ok = true;
    f.visit(&mut |g| {
        if matches!(
            g,
            Formula::Prev(_)
                | Formula::Since(..)
                | Formula::NegSince(..)
                | Formula::Knows(..)
                | Formula::Active(_)
                | Formula::Derived(_)
                | Formula::Atom(Atom::VarEqPrevSelf { .. })
        ) {
            ok = false;
        }
    });
    ok
}

// Core-only builders; the sugar connectives never appear in their output.
fn not(f: Formula) -> Formula {
    Formula::not(f)
}

fn and(a: Formula, b: Formula) -> Formula {
    Formula::and(a, b)
}

fn or(a: Formula, b: Formula) -> Formula {
    not(and(not(a), not(b)))
}

fn implies(a: Formula, b: Formula) -> Formula {
    not(and(a, not(b)))
}

fn prev(f: Formula) -> Formula {
    Formula::prev(f)
}

fn since(a: Formula, b: Formula) -> Formula {
    Formula::since(a, b)
}

fn always(f: Formula) -> Formula {
    not(since(Formula::Top, not(f)))
}

fn after(t: &ThreadId) -> Formula {
    prev(Formula::Active(t.clone()))
}

fn last_a(t: &ThreadId, f: Formula) -> Formula {
    since(not(after(t)), and(after(t), f))
}

fn big_or(items: Vec<Formula>) -> Formula {
    items.into_iter().reduce(or).unwrap_or_else(|| not(Formula::Top))
}

fn big_and(items: Vec<Formula>) -> Formula {
    items.into_iter().reduce(and).unwrap_or(Formula::Top)
}

fn values(doms: &dyn VarDomains, var: &str) -> Result<Vec<i64>> {
    let (lo, hi) = doms
        .domain(var)
        .ok_or_else(|| Error::UnknownDomain(var.to_string()))?;
    Ok((lo..=hi).collect())
}

/// `x` changed on the last step: some value holds now that did not hold
/// before. False at the initial point.
fn chg(doms: &dyn VarDomains, var: &str) -> Result<Formula> {
    Ok(big_or(
        values(doms, var)?
            .into_iter()
            .map(|v| and(Formula::var_eq(var, v), prev(not(Formula::var_eq(var, v)))))
            .collect(),
    ))
}

/// `x = Y x`: no step has changed `x`, so it also holds at the initial point.
fn unchanged(doms: &dyn VarDomains, var: &str) -> Result<Formula> {
    Ok(not(chg(doms, var)?))
}

fn require_extensional(name: &str, arg: &Formula) -> Result<()> {
    if is_extensional(arg) {
        Ok(())
    } else {
        Err(Error::NotExtensional {
            macro_name: name.to_string(),
            arg: arg.to_string(),
        })
    }
}

/// Rewrite every derived operator and every sugar connective into the core
/// language (`Top`, atoms, letters, `Active`, `!`, `&`, `Y`, `S`, `K`).
pub fn expand_derived(f: &Formula, doms: &dyn VarDomains) -> Result<Formula> {
    let ex = |g: &Formula| expand_derived(g, doms);
    Ok(match f {
        Formula::Top | Formula::Prop(_) | Formula::Active(_) => f.clone(),
        Formula::Bottom => not(Formula::Top),
        Formula::Atom(Atom::VarEqPrevSelf { var }) => unchanged(doms, var)?,
        Formula::Atom(_) => f.clone(),
        Formula::Not(a) => not(ex(a)?),
        Formula::And(a, b) => and(ex(a)?, ex(b)?),
        Formula::Or(a, b) => or(ex(a)?, ex(b)?),
        Formula::Implies(a, b) => implies(ex(a)?, ex(b)?),
        Formula::Iff(a, b) => {
            let (a, b) = (ex(a)?, ex(b)?);
            and(implies(a.clone(), b.clone()), implies(b, a))
        }
        Formula::Prev(a) => prev(ex(a)?),
        Formula::Since(a, b) => since(ex(a)?, ex(b)?),
        Formula::NegSince(a, b) => not(since(ex(a)?, ex(b)?)),
        Formula::Knows(t, a) => Formula::knows(t.clone(), ex(a)?),
        Formula::Derived(m) => expand_macro(m, doms)?,
    })
}

fn expand_macro(m: &DerivedMacro, doms: &dyn VarDomains) -> Result<Formula> {
    let ex = |g: &Formula| expand_derived(g, doms);
    Ok(match m {
        DerivedMacro::Always(a) => always(ex(a)?),
        DerivedMacro::Sometime(a) => since(Formula::Top, ex(a)?),
        DerivedMacro::HappensBefore(a, b) => {
            let (a, b) = (ex(a)?, ex(b)?);
            and(
                since(not(a.clone()), and(b, not(a.clone()))),
                since(Formula::Top, a),
            )
        }
        DerivedMacro::After(t) => after(t),
        DerivedMacro::LastA(t, a) => last_a(t, ex(a)?),
        DerivedMacro::PreA(t, a) => last_a(t, prev(ex(a)?)),
        DerivedMacro::Est(t, a) => last_a(t, Formula::knows(t.clone(), ex(a)?)),
        DerivedMacro::Chg(x) => chg(doms, x)?,
        DerivedMacro::WriteBy(t, x) => and(after(t), chg(doms, x)?),
        DerivedMacro::LastW(w, a) => {
            let w = ex(w)?;
            since(not(w.clone()), and(w, ex(a)?))
        }
        DerivedMacro::Stable(t, a) => {
            require_extensional("stable", a)?;
            let a = ex(a)?;
            always(implies(not(after(t)), implies(prev(a.clone()), a)))
        }
        DerivedMacro::Frame(t, x) => {
            let keep = values(doms, x)?
                .into_iter()
                .map(|v| implies(prev(Formula::var_eq(x.as_str(), v)), Formula::var_eq(x.as_str(), v)))
                .collect();
            always(implies(not(after(t)), big_and(keep)))
        }
        DerivedMacro::Pres(a) => {
            require_extensional("pres", a)?;
            let a = ex(a)?;
            always(implies(prev(Formula::Top), implies(prev(a.clone()), a)))
        }
        DerivedMacro::PresA(t, a) => {
            require_extensional("presA", a)?;
            let a = ex(a)?;
            always(implies(after(t), implies(prev(a.clone()), a)))
        }
        DerivedMacro::Init => not(prev(Formula::Top)),
    })
}
