use super::Formula;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NnfOptions {
    /// How many times a negated `Since` is unfolded before it is left as a
    /// marked `nsince` node.
    pub unfold_depth: usize,
    /// Leave `nsince` residuals instead of failing when the depth runs out.
    pub allow_residual: bool,
}

impl Default for NnfOptions {
    fn default() -> Self {
        NnfOptions {
            unfold_depth: 3,
            allow_residual: true,
        }
    }
}

/// `a S b` becomes `b | (a & Y (a S b))`.
pub fn unfold_since(f: &Formula) -> Result<Formula> {
    match f {
        Formula::Since(a, b) => Ok(Formula::or(
            (**b).clone(),
            Formula::and((**a).clone(), Formula::prev(f.clone())),
        )),
        other => Err(Error::Nnf(format!("unfold_since: top node of `{other}` is not S"))),
    }
}

/// Negation normal form with default options.
pub fn nnf(f: &Formula) -> Result<Formula> {
    nnf_with(f, NnfOptions::default())
}

/// Push negations down to atoms, letters, `active`, `true`, and `Y true`.
///
/// `!Y a` becomes `(Y true & Y !a) | !Y true`; `!(a S b)` is unfolded once
/// per unit of depth and then kept as `nsince(a, b)`.
pub fn nnf_with(f: &Formula, opts: NnfOptions) -> Result<Formula> {
    go(f, false, opts.unfold_depth, opts)
}

fn prev_top() -> Formula {
    Formula::prev(Formula::Top)
}

fn literal(f: &Formula, neg: bool) -> Formula {
    if neg {
        Formula::not(f.clone())
    } else {
        f.clone()
    }
}

fn go(f: &Formula, neg: bool, budget: usize, opts: NnfOptions) -> Result<Formula> {
    let fresh = opts.unfold_depth;
    Ok(match f {
        Formula::Top | Formula::Atom(_) | Formula::Prop(_) | Formula::Active(_) => literal(f, neg),
        Formula::Bottom => literal(&Formula::Top, !neg),
        Formula::Not(a) => go(a, !neg, budget, opts)?,
        Formula::And(a, b) => {
            let (a, b) = (go(a, neg, fresh, opts)?, go(b, neg, fresh, opts)?);
            if neg {
                Formula::or(a, b)
            } else {
                Formula::and(a, b)
            }
        }
        Formula::Or(a, b) => {
            let (a, b) = (go(a, neg, fresh, opts)?, go(b, neg, fresh, opts)?);
            if neg {
                Formula::and(a, b)
            } else {
                Formula::or(a, b)
            }
        }
        Formula::Implies(a, b) => go(
            &Formula::or(Formula::not((**a).clone()), (**b).clone()),
            neg,
            budget,
            opts,
        )?,
        Formula::Iff(a, b) => {
            let (a, b) = ((**a).clone(), (**b).clone());
            let both = Formula::and(a.clone(), b.clone());
            let neither = Formula::and(Formula::not(a), Formula::not(b));
            go(&Formula::or(both, neither), neg, budget, opts)?
        }
        Formula::Prev(a) if neg && **a == Formula::Top => Formula::not(prev_top()),
        Formula::Prev(a) if neg => Formula::or(
            Formula::and(prev_top(), Formula::prev(go(a, true, fresh, opts)?)),
            Formula::not(prev_top()),
        ),
        Formula::Prev(a) => Formula::prev(go(a, false, fresh, opts)?),
        Formula::Since(a, b) if !neg => {
            Formula::since(go(a, false, fresh, opts)?, go(b, false, fresh, opts)?)
        }
        Formula::Since(a, b) => negated_since(f, a, b, budget, opts)?,
        Formula::NegSince(a, b) => {
            let s = Formula::since((**a).clone(), (**b).clone());
            go(&s, !neg, budget, opts)?
        }
        Formula::Knows(..) => {
            return Err(Error::Nnf(format!(
                "knowledge operator in `{f}`: only the pure past-time fragment has a normal form"
            )))
        }
        Formula::Derived(_) => return Err(Error::UnexpandedDerived(f.to_string())),
    })
}

/// `!(a S b)` = `!b & (!a | !Y (a S b))`, recursing on the inner occurrence.
fn negated_since(
    whole: &Formula,
    a: &Formula,
    b: &Formula,
    budget: usize,
    opts: NnfOptions,
) -> Result<Formula> {
    let fresh = opts.unfold_depth;
    if budget == 0 {
        if !opts.allow_residual {
            return Err(Error::Nnf(format!(
                "unfolding depth {} exceeded on `!({whole})`",
                opts.unfold_depth
            )));
        }
        return Ok(Formula::NegSince(
            Box::new(go(a, false, fresh, opts)?),
            Box::new(go(b, false, fresh, opts)?),
        ));
    }
    let not_b = go(b, true, fresh, opts)?;
    let not_a = go(a, true, fresh, opts)?;
    let not_prev = Formula::or(
        Formula::and(prev_top(), Formula::prev(go(whole, true, budget - 1, opts)?)),
        Formula::not(prev_top()),
    );
    Ok(Formula::and(not_b, Formula::or(not_a, not_prev)))
}
