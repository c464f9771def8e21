//! Two-state predicates: formulas of `Y`-depth at most one, read on an edge
//! `s --A--> s'` with plain atoms bound to `s'` and atoms under `Y` bound to `s`.

use crate::error::{Error, Result};
use crate::formula::{expand_derived, DerivedMacro, Formula};
use crate::program::{GlobalState, Program, ResolvedAtom};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepPred {
    Const(bool),
    Atom(ResolvedAtom),
    /// Only below `Prev`: the edge's actor.
    Active(usize),
    Prev(Box<StepPred>),
    Not(Box<StepPred>),
    And(Box<StepPred>, Box<StepPred>),
}

impl StepPred {
    /// Expand `f` against `p` and compile it. Rejects `S`, `K`, nested `Y`,
    /// and `active` outside `Y` (its value would depend on the next step).
    pub fn compile(p: &Program, f: &Formula) -> Result<StepPred> {
        let core = expand_derived(f, p)?;
        compile_core(p, &core, false).map_err(|e| match e {
            Error::StepShape(msg) => Error::StepShape(format!("{msg} in `{f}`")),
            other => other,
        })
    }

    /// Truth at the post-state of `pre --actor--> post`.
    pub fn on_edge(&self, pre: &GlobalState, actor: usize, post: &GlobalState) -> bool {
        self.eval(Some((pre, actor)), post)
    }

    /// Truth at an initial point, where every `Y` is false.
    pub fn at_initial(&self, s: &GlobalState) -> bool {
        self.eval(None, s)
    }

    fn eval(&self, pre: Option<(&GlobalState, usize)>, post: &GlobalState) -> bool {
        match self {
            StepPred::Const(b) => *b,
            StepPred::Atom(a) => a.holds(post),
            StepPred::Active(_) => unreachable!("active outside Y is rejected at compile time"),
            StepPred::Prev(inner) => match pre {
                None => false,
                Some((s, actor)) => inner.eval_pre(s, actor),
            },
            StepPred::Not(a) => !a.eval(pre, post),
            StepPred::And(a, b) => a.eval(pre, post) && b.eval(pre, post),
        }
    }

    fn eval_pre(&self, s: &GlobalState, actor: usize) -> bool {
        match self {
            StepPred::Const(b) => *b,
            StepPred::Atom(a) => a.holds(s),
            StepPred::Active(t) => *t == actor,
            StepPred::Prev(_) => unreachable!("nested Y is rejected at compile time"),
            StepPred::Not(a) => !a.eval_pre(s, actor),
            StepPred::And(a, b) => a.eval_pre(s, actor) && b.eval_pre(s, actor),
        }
    }
}

fn compile_core(p: &Program, f: &Formula, under_prev: bool) -> Result<StepPred> {
    let go = |g: &Formula| compile_core(p, g, under_prev);
    Ok(match f {
        Formula::Top => StepPred::Const(true),
        Formula::Atom(a) => StepPred::Atom(p.resolve_atom(a)?),
        Formula::Prop(name) => return Err(Error::UnresolvedProp(name.clone())),
        Formula::Active(t) if under_prev => StepPred::Active(p.resolve_thread(t)?),
        Formula::Active(t) => {
            return Err(Error::StepShape(format!(
                "active({t}) outside Y refers to the next step; use after({t})"
            )))
        }
        Formula::Not(a) => StepPred::Not(Box::new(go(a)?)),
        Formula::And(a, b) => StepPred::And(Box::new(go(a)?), Box::new(go(b)?)),
        Formula::Prev(_) if under_prev => return Err(Error::StepShape("Y nested under Y".into())),
        Formula::Prev(a) => StepPred::Prev(Box::new(compile_core(p, a, true)?)),
        Formula::Since(..) | Formula::NegSince(..) => {
            return Err(Error::StepShape("S is not a two-state operator".into()))
        }
        Formula::Knows(..) => return Err(Error::StepShape("K is not a two-state operator".into())),
        // Sugar never survives expansion.
        Formula::Bottom
        | Formula::Or(..)
        | Formula::Implies(..)
        | Formula::Iff(..)
        | Formula::Derived(_) => return Err(Error::UnexpandedDerived(f.to_string())),
    })
}

/// The body `b` of `H b`, in either the macro or the expanded `!(true S !b)` form.
pub fn always_body(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Derived(m) => match &**m {
            DerivedMacro::Always(b) => Some(b),
            _ => None,
        },
        Formula::Not(inner) => match &**inner {
            Formula::Since(top, nb) if **top == Formula::Top => match &**nb {
                Formula::Not(b) => Some(b),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

/// Flatten a conjunction of `H`-formulas into their bodies.
pub fn always_conjuncts(f: &Formula) -> Option<Vec<&Formula>> {
    match f {
        Formula::And(a, b) => {
            let mut out = always_conjuncts(a)?;
            out.extend(always_conjuncts(b)?);
            Some(out)
        }
        Formula::Top => Some(Vec::new()),
        _ => always_body(f).map(|b| vec![b]),
    }
}

/// A model constraint: a conjunction of `H(step predicate)` formulas. A run
/// is admissible iff every body holds initially and on every step.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub formula: Formula,
    bodies: Vec<StepPred>,
}

impl Constraint {
    pub fn new(p: &Program, f: &Formula) -> Result<Constraint> {
        let bodies = always_conjuncts(f).ok_or_else(|| {
            Error::ConstraintShape(format!("`{f}` is not a conjunction of H(step predicate) formulas"))
        })?;
        let bodies = bodies
            .into_iter()
            .map(|b| {
                StepPred::compile(p, b).map_err(|e| match e {
                    Error::StepShape(m) => Error::ConstraintShape(m),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Constraint {
            formula: f.clone(),
            bodies,
        })
    }

    pub fn admits_initial(&self, s: &GlobalState) -> bool {
        self.bodies.iter().all(|b| b.at_initial(s))
    }

    pub fn admits_edge(&self, pre: &GlobalState, actor: usize, post: &GlobalState) -> bool {
        self.bodies.iter().all(|b| b.on_edge(pre, actor, post))
    }
}
