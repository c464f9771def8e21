//! The formula language: past-time temporal operators, the scheduling atom,
//! per-thread knowledge, and the derived macros used for rely/guarantee
//! reasoning.

mod expand;
mod nnf;
mod parse;
mod render;

use std::fmt;

pub use expand::{expand_derived, is_extensional, NoDomains, VarDomains};
pub use nnf::{nnf, nnf_with, unfold_since, NnfOptions};
pub use parse::parse_formula;

/// Identifier of a thread. Membership in a program's thread set is checked
/// when a formula is bound to that program.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThreadId(String);

impl ThreadId {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "thread identifiers are nonempty");
        ThreadId(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ThreadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ThreadId {
    fn from(s: &str) -> Self {
        ThreadId::new(s)
    }
}

/// Atomic state predicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// `x = v`; `x` is a shared variable or a thread-qualified local `T.v`.
    VarEq { var: String, value: i64 },
    /// `x = Y x`, removed by [`expand_derived`].
    VarEqPrevSelf { var: String },
    /// `at(T, loc)`
    At { thread: ThreadId, loc: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Top,
    Bottom,
    Atom(Atom),
    /// A named proposition: a spec-level alias or a schematic letter in proofs.
    Prop(String),
    Active(ThreadId),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Prev(Box<Formula>),
    Since(Box<Formula>, Box<Formula>),
    Knows(ThreadId, Box<Formula>),
    /// Marked residual of a negated `Since` left by [`nnf`] once its
    /// unfolding budget runs out. Semantically `!(a S b)`.
    NegSince(Box<Formula>, Box<Formula>),
    Derived(Box<DerivedMacro>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DerivedMacro {
    Always(Formula),
    Sometime(Formula),
    /// `prec(a, b)`: `a` happened before `b` and has not recurred since.
    HappensBefore(Formula, Formula),
    After(ThreadId),
    LastA(ThreadId, Formula),
    PreA(ThreadId, Formula),
    Est(ThreadId, Formula),
    Chg(String),
    WriteBy(ThreadId, String),
    LastW(Formula, Formula),
    Stable(ThreadId, Formula),
    Frame(ThreadId, String),
    Pres(Formula),
    PresA(ThreadId, Formula),
    Init,
}

impl DerivedMacro {
    /// Concrete-syntax name of the macro (prefix operators use `H`/`O`).
    pub fn name(&self) -> &'static str {
        match self {
            DerivedMacro::Always(_) => "H",
            DerivedMacro::Sometime(_) => "O",
            DerivedMacro::HappensBefore(..) => "prec",
            DerivedMacro::After(_) => "after",
            DerivedMacro::LastA(..) => "lastA",
            DerivedMacro::PreA(..) => "preA",
            DerivedMacro::Est(..) => "est",
            DerivedMacro::Chg(_) => "chg",
            DerivedMacro::WriteBy(..) => "write",
            DerivedMacro::LastW(..) => "lastW",
            DerivedMacro::Stable(..) => "stable",
            DerivedMacro::Frame(..) => "frame",
            DerivedMacro::Pres(_) => "pres",
            DerivedMacro::PresA(..) => "presA",
            DerivedMacro::Init => "init",
        }
    }
}

impl Formula {
    pub fn var_eq(var: impl Into<String>, value: i64) -> Formula {
        Formula::Atom(Atom::VarEq {
            var: var.into(),
            value,
        })
    }

    pub fn at(thread: impl Into<ThreadId>, loc: impl Into<String>) -> Formula {
        Formula::Atom(Atom::At {
            thread: thread.into(),
            loc: loc.into(),
        })
    }

    pub fn prop(name: impl Into<String>) -> Formula {
        Formula::Prop(name.into())
    }

    pub fn active(thread: impl Into<ThreadId>) -> Formula {
        Formula::Active(thread.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn prev(f: Formula) -> Formula {
        Formula::Prev(Box::new(f))
    }

    pub fn since(a: Formula, b: Formula) -> Formula {
        Formula::Since(Box::new(a), Box::new(b))
    }

    pub fn knows(thread: impl Into<ThreadId>, f: Formula) -> Formula {
        Formula::Knows(thread.into(), Box::new(f))
    }

    pub fn derived(m: DerivedMacro) -> Formula {
        Formula::Derived(Box::new(m))
    }

    pub fn always(f: Formula) -> Formula {
        Formula::derived(DerivedMacro::Always(f))
    }

    pub fn sometime(f: Formula) -> Formula {
        Formula::derived(DerivedMacro::Sometime(f))
    }

    pub fn after(thread: impl Into<ThreadId>) -> Formula {
        Formula::derived(DerivedMacro::After(thread.into()))
    }

    pub fn last_a(thread: impl Into<ThreadId>, f: Formula) -> Formula {
        Formula::derived(DerivedMacro::LastA(thread.into(), f))
    }

    pub fn stable(thread: impl Into<ThreadId>, f: Formula) -> Formula {
        Formula::derived(DerivedMacro::Stable(thread.into(), f))
    }

    pub fn init() -> Formula {
        Formula::derived(DerivedMacro::Init)
    }

    /// Conjunction of a list; `Top` when empty.
    pub fn conj(items: impl IntoIterator<Item = Formula>) -> Formula {
        items
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::Top)
    }

    /// Disjunction of a list; `Bottom` when empty.
    pub fn disj(items: impl IntoIterator<Item = Formula>) -> Formula {
        items
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or(Formula::Bottom)
    }

    /// Number of syntax-tree nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Pre-order walk over every subformula, descending into macro arguments.
    pub fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Top
            | Formula::Bottom
            | Formula::Atom(_)
            | Formula::Prop(_)
            | Formula::Active(_) => {}
            Formula::Not(a) | Formula::Prev(a) | Formula::Knows(_, a) => a.visit(f),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b)
            | Formula::Since(a, b)
            | Formula::NegSince(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Formula::Derived(m) => match m.as_ref() {
                DerivedMacro::Always(a)
                | DerivedMacro::Sometime(a)
                | DerivedMacro::LastA(_, a)
                | DerivedMacro::PreA(_, a)
                | DerivedMacro::Est(_, a)
                | DerivedMacro::Stable(_, a)
                | DerivedMacro::Pres(a)
                | DerivedMacro::PresA(_, a) => a.visit(f),
                DerivedMacro::HappensBefore(a, b) | DerivedMacro::LastW(a, b) => {
                    a.visit(f);
                    b.visit(f);
                }
                DerivedMacro::After(_)
                | DerivedMacro::Chg(_)
                | DerivedMacro::WriteBy(..)
                | DerivedMacro::Frame(..)
                | DerivedMacro::Init => {}
            },
        }
    }

    /// True when no `Derived`, `Or`, `Implies`, `Iff`, `Bottom`, `NegSince`
    /// or `x = Y x` node remains.
    pub fn is_core(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |g| {
            if matches!(
                g,
                Formula::Derived(_)
                    | Formula::Or(..)
                    | Formula::Implies(..)
                    | Formula::Iff(..)
                    | Formula::Bottom
                    | Formula::NegSince(..)
                    | Formula::Atom(Atom::VarEqPrevSelf { .. })
            ) {
                ok = false;
            }
        });
        ok
    }

    pub fn contains_knows(&self) -> bool {
        let mut found = false;
        self.visit(&mut |g| {
            if matches!(g, Formula::Knows(..)) || matches!(g, Formula::Derived(m) if matches!(**m, DerivedMacro::Est(..))) {
                found = true;
            }
        });
        found
    }

    /// Names of all `Prop` letters, sorted and deduplicated.
    pub fn props(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |g| {
            if let Formula::Prop(p) = g {
                out.push(p.clone());
            }
        });
        out.sort();
        out.dedup();
        out
    }

    /// Thread identifiers mentioned anywhere, sorted and deduplicated.
    pub fn threads(&self) -> Vec<ThreadId> {
        let mut out = Vec::new();
        self.visit(&mut |g| match g {
            Formula::Active(t) | Formula::Knows(t, _) => out.push(t.clone()),
            Formula::Atom(Atom::At { thread, .. }) => out.push(thread.clone()),
            Formula::Derived(m) => match m.as_ref() {
                DerivedMacro::After(t)
                | DerivedMacro::LastA(t, _)
                | DerivedMacro::PreA(t, _)
                | DerivedMacro::Est(t, _)
                | DerivedMacro::WriteBy(t, _)
                | DerivedMacro::Stable(t, _)
                | DerivedMacro::Frame(t, _)
                | DerivedMacro::PresA(t, _) => out.push(t.clone()),
                _ => {}
            },
            _ => {}
        });
        out.sort();
        out.dedup();
        out
    }

    /// Replace `Prop` letters using `lookup`; letters it does not know stay.
    pub fn substitute(&self, lookup: &impl Fn(&str) -> Option<Formula>) -> Formula {
        self.map_bottom_up(&mut |g| match g {
            Formula::Prop(name) => lookup(&name).unwrap_or(Formula::Prop(name)),
            other => other,
        })
    }

    /// Rename thread identifiers everywhere.
    pub fn rename_threads(&self, rename: &impl Fn(&ThreadId) -> ThreadId) -> Formula {
        self.map_bottom_up(&mut |g| match g {
            Formula::Active(t) => Formula::Active(rename(&t)),
            Formula::Knows(t, a) => Formula::Knows(rename(&t), a),
            Formula::Atom(Atom::At { thread, loc }) => Formula::Atom(Atom::At {
                thread: rename(&thread),
                loc,
            }),
            Formula::Derived(m) => Formula::derived(match *m {
                DerivedMacro::After(t) => DerivedMacro::After(rename(&t)),
                DerivedMacro::LastA(t, a) => DerivedMacro::LastA(rename(&t), a),
                DerivedMacro::PreA(t, a) => DerivedMacro::PreA(rename(&t), a),
                DerivedMacro::Est(t, a) => DerivedMacro::Est(rename(&t), a),
                DerivedMacro::WriteBy(t, x) => DerivedMacro::WriteBy(rename(&t), x),
                DerivedMacro::Stable(t, a) => DerivedMacro::Stable(rename(&t), a),
                DerivedMacro::Frame(t, x) => DerivedMacro::Frame(rename(&t), x),
                DerivedMacro::PresA(t, a) => DerivedMacro::PresA(rename(&t), a),
                other => other,
            }),
            other => other,
        })
    }

    fn map_bottom_up(&self, f: &mut impl FnMut(Formula) -> Formula) -> Formula {
        let b = |x: &Formula, f: &mut dyn FnMut(Formula) -> Formula| -> Box<Formula> {
            Box::new(x.map_dyn(f))
        };
        let g = match self {
            Formula::Top
            | Formula::Bottom
            | Formula::Atom(_)
            | Formula::Prop(_)
            | Formula::Active(_) => self.clone(),
            Formula::Not(a) => Formula::Not(b(a, f)),
            Formula::Prev(a) => Formula::Prev(b(a, f)),
            Formula::Knows(t, a) => Formula::Knows(t.clone(), b(a, f)),
            Formula::And(x, y) => Formula::And(b(x, f), b(y, f)),
            Formula::Or(x, y) => Formula::Or(b(x, f), b(y, f)),
            Formula::Implies(x, y) => Formula::Implies(b(x, f), b(y, f)),
            Formula::Iff(x, y) => Formula::Iff(b(x, f), b(y, f)),
            Formula::Since(x, y) => Formula::Since(b(x, f), b(y, f)),
            Formula::NegSince(x, y) => Formula::NegSince(b(x, f), b(y, f)),
            Formula::Derived(m) => {
                let mut m1 = |x: &Formula| x.map_dyn(f);
                Formula::derived(match m.as_ref() {
                    DerivedMacro::Always(a) => DerivedMacro::Always(m1(a)),
                    DerivedMacro::Sometime(a) => DerivedMacro::Sometime(m1(a)),
                    DerivedMacro::HappensBefore(a, c) => {
                        let a = m1(a);
                        DerivedMacro::HappensBefore(a, m1(c))
                    }
                    DerivedMacro::LastA(t, a) => DerivedMacro::LastA(t.clone(), m1(a)),
                    DerivedMacro::PreA(t, a) => DerivedMacro::PreA(t.clone(), m1(a)),
                    DerivedMacro::Est(t, a) => DerivedMacro::Est(t.clone(), m1(a)),
                    DerivedMacro::LastW(a, c) => {
                        let a = m1(a);
                        DerivedMacro::LastW(a, m1(c))
                    }
                    DerivedMacro::Stable(t, a) => DerivedMacro::Stable(t.clone(), m1(a)),
                    DerivedMacro::Pres(a) => DerivedMacro::Pres(m1(a)),
                    DerivedMacro::PresA(t, a) => DerivedMacro::PresA(t.clone(), m1(a)),
                    other => other.clone(),
                })
            }
        };
        f(g)
    }

    fn map_dyn(&self, f: &mut dyn FnMut(Formula) -> Formula) -> Formula {
        self.map_bottom_up(&mut |g| f(g))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render::render_formula(self))
    }
}

pub use render::render_formula;
