//! Sequents, derivations and the rule checker.

mod fuzz;
mod script;

use std::collections::BTreeSet;
use std::fmt;

use crate::formula::{Formula, ThreadId};

pub use fuzz::{soundness_fuzz, FuzzConfig, FuzzReport, Violation};
pub use script::{parse_derivations, render_derivation};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequent {
    pub hyps: BTreeSet<Formula>,
    pub goal: Formula,
}

impl Sequent {
    pub fn new(hyps: impl IntoIterator<Item = Formula>, goal: Formula) -> Sequent {
        Sequent {
            hyps: hyps.into_iter().collect(),
            goal,
        }
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hyps: Vec<String> = self.hyps.iter().map(|h| h.to_string()).collect();
        if hyps.is_empty() {
            write!(f, "|- {}", self.goal)
        } else {
            write!(f, "{} |- {}", hyps.join(", "), self.goal)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Axiom,
    Weaken,
    Mp,
    LemE,
    AndI,
    AndE1,
    AndE2,
    OrI1,
    OrI2,
    OrE,
    NotI,
    NotE,
    Prev,
    SinceI1,
    SinceI2,
    SinceE,
    K,
    T,
    Four,
    Five,
}

impl Rule {
    pub const ALL: [Rule; 20] = [
        Rule::Axiom,
        Rule::Weaken,
        Rule::Mp,
        Rule::LemE,
        Rule::AndI,
        Rule::AndE1,
        Rule::AndE2,
        Rule::OrI1,
        Rule::OrI2,
        Rule::OrE,
        Rule::NotI,
        Rule::NotE,
        Rule::Prev,
        Rule::SinceI1,
        Rule::SinceI2,
        Rule::SinceE,
        Rule::K,
        Rule::T,
        Rule::Four,
        Rule::Five,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Axiom => "axiom",
            Rule::Weaken => "weaken",
            Rule::Mp => "mp",
            Rule::LemE => "lemE",
            Rule::AndI => "andI",
            Rule::AndE1 => "andE1",
            Rule::AndE2 => "andE2",
            Rule::OrI1 => "orI1",
            Rule::OrI2 => "orI2",
            Rule::OrE => "orE",
            Rule::NotI => "notI",
            Rule::NotE => "notE",
            Rule::Prev => "prev",
            Rule::SinceI1 => "sinceI1",
            Rule::SinceI2 => "sinceI2",
            Rule::SinceE => "sinceE",
            Rule::K => "K",
            Rule::T => "T",
            Rule::Four => "4",
            Rule::Five => "5",
        }
    }

    pub fn from_name(s: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            Rule::Axiom => 0,
            Rule::Mp | Rule::LemE | Rule::AndI | Rule::NotE | Rule::SinceI2 => 2,
            Rule::OrE | Rule::SinceE => 3,
            _ => 1,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub rule: Rule,
    pub conclusion: Sequent,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn new(rule: Rule, conclusion: Sequent, premises: Vec<Derivation>) -> Self {
        Derivation {
            rule,
            conclusion,
            premises,
        }
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }

    /// Every node, parents before children.
    pub fn nodes(&self) -> Vec<&Derivation> {
        let mut out = vec![self];
        for p in &self.premises {
            out.extend(p.nodes());
        }
        out
    }

    pub fn rules_used(&self) -> BTreeSet<Rule> {
        self.nodes().into_iter().map(|d| d.rule).collect()
    }
}

/// Why a node failed its schema. `path` lists premise indices from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub path: Vec<usize>,
    pub rule: Rule,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
        write!(
            f,
            "rule {} at node [{}]: expected {}, found {}",
            self.rule,
            path.join("."),
            self.expected,
            self.found
        )
    }
}

impl std::error::Error for Rejection {}

/// The rule checker. `seeded_prev_bug` makes `prev` accept conclusions
/// without the `Y true` hypothesis; it exists to test the fuzzer.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kernel {
    pub seeded_prev_bug: bool,
}

type Check = Result<(), (String, String)>;

fn expect(ok: bool, expected: impl FnOnce() -> String, found: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err((expected(), found()))
    }
}

fn with(gamma: &BTreeSet<Formula>, extra: &[&Formula]) -> BTreeSet<Formula> {
    let mut out = gamma.clone();
    out.extend(extra.iter().map(|f| (*f).clone()));
    out
}

fn show_hyps(h: &BTreeSet<Formula>) -> String {
    let v: Vec<String> = h.iter().map(|f| f.to_string()).collect();
    format!("{{{}}}", v.join(", "))
}

fn same_hyps(c: &Sequent, p: &Sequent) -> Check {
    expect(c.hyps == p.hyps, || format!("premise hypotheses {}", show_hyps(&c.hyps)), || show_hyps(&p.hyps))
}

fn goal_is(p: &Sequent, want: &Formula) -> Check {
    expect(p.goal == *want, || format!("premise goal `{want}`"), || format!("`{}`", p.goal))
}

fn hyps_are(p: &Sequent, want: &BTreeSet<Formula>) -> Check {
    expect(p.hyps == *want, || format!("premise hypotheses {}", show_hyps(want)), || show_hyps(&p.hyps))
}

fn shape<'f, T>(x: Option<T>, what: &str, f: &'f Formula) -> Result<T, (String, String)> {
    x.ok_or_else(|| (what.to_string(), format!("`{f}`")))
}

fn as_and(f: &Formula) -> Option<(&Formula, &Formula)> {
    match f {
        Formula::And(a, b) => Some((a, b)),
        _ => None,
    }
}

fn as_or(f: &Formula) -> Option<(&Formula, &Formula)> {
    match f {
        Formula::Or(a, b) => Some((a, b)),
        _ => None,
    }
}

fn as_not(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Not(a) => Some(a),
        _ => None,
    }
}

fn as_prev(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Prev(a) => Some(a),
        _ => None,
    }
}

fn as_since(f: &Formula) -> Option<(&Formula, &Formula)> {
    match f {
        Formula::Since(a, b) => Some((a, b)),
        _ => None,
    }
}

fn as_knows(f: &Formula) -> Option<(&ThreadId, &Formula)> {
    match f {
        Formula::Knows(t, a) => Some((t, a)),
        _ => None,
    }
}

impl Kernel {
    /// Check every node; the first failing node in preorder is reported.
    pub fn check(&self, d: &Derivation) -> Result<(), Rejection> {
        self.check_at(d, &mut Vec::new())
    }

    fn check_at(&self, d: &Derivation, path: &mut Vec<usize>) -> Result<(), Rejection> {
        let reject = |path: &Vec<usize>, (expected, found): (String, String)| Rejection {
            path: path.clone(),
            rule: d.rule,
            expected,
            found,
        };
        if d.premises.len() != d.rule.arity() {
            return Err(reject(
                path,
                (
                    format!("{} premise(s)", d.rule.arity()),
                    d.premises.len().to_string(),
                ),
            ));
        }
        self.node(d).map_err(|e| reject(path, e))?;
        for (i, p) in d.premises.iter().enumerate() {
            path.push(i);
            self.check_at(p, path)?;
            path.pop();
        }
        Ok(())
    }

    fn node(&self, d: &Derivation) -> Check {
        let c = &d.conclusion;
        let g = &c.hyps;
        let prem: Vec<&Sequent> = d.premises.iter().map(|p| &p.conclusion).collect();
        match d.rule {
            Rule::Axiom => expect(g.contains(&c.goal), || "goal among hypotheses".into(), || c.to_string()),
            Rule::Weaken => {
                let p = prem[0];
                goal_is(p, &c.goal)?;
                expect(p.hyps.is_subset(g), || format!("premise hypotheses within {}", show_hyps(g)), || {
                    show_hyps(&p.hyps)
                })
            }
            Rule::Mp => {
                same_hyps(c, prem[0])?;
                same_hyps(c, prem[1])?;
                goal_is(prem[1], &Formula::implies(prem[0].goal.clone(), c.goal.clone()))
            }
            Rule::LemE => {
                goal_is(prem[0], &c.goal)?;
                goal_is(prem[1], &c.goal)?;
                let fits = |phi: &Formula| {
                    prem[0].hyps == with(g, &[phi]) && prem[1].hyps == with(g, &[&Formula::not(phi.clone())])
                };
                let mut candidates: Vec<Formula> = prem[0].hyps.difference(g).cloned().collect();
                candidates.extend(g.iter().cloned());
                expect(
                    candidates.iter().any(fits),
                    || format!("premises {} , phi and {} , !phi", show_hyps(g), show_hyps(g)),
                    || format!("{} and {}", show_hyps(&prem[0].hyps), show_hyps(&prem[1].hyps)),
                )
            }
            Rule::AndI => {
                let (a, b) = shape(as_and(&c.goal), "conjunction goal", &c.goal)?;
                same_hyps(c, prem[0])?;
                same_hyps(c, prem[1])?;
                goal_is(prem[0], a)?;
                goal_is(prem[1], b)
            }
            Rule::AndE1 | Rule::AndE2 => {
                same_hyps(c, prem[0])?;
                let (a, b) = shape(as_and(&prem[0].goal), "conjunction premise", &prem[0].goal)?;
                let want = if d.rule == Rule::AndE1 { a } else { b };
                expect(*want == c.goal, || format!("goal `{want}`"), || format!("`{}`", c.goal))
            }
            Rule::OrI1 | Rule::OrI2 => {
                let (a, b) = shape(as_or(&c.goal), "disjunction goal", &c.goal)?;
                same_hyps(c, prem[0])?;
                goal_is(prem[0], if d.rule == Rule::OrI1 { a } else { b })
            }
            Rule::OrE => {
                same_hyps(c, prem[0])?;
                let (a, b) = shape(as_or(&prem[0].goal), "disjunction premise", &prem[0].goal)?;
                hyps_are(prem[1], &with(g, &[a]))?;
                hyps_are(prem[2], &with(g, &[b]))?;
                goal_is(prem[1], &c.goal)?;
                goal_is(prem[2], &c.goal)
            }
            Rule::NotI => {
                let a = shape(as_not(&c.goal), "negated goal", &c.goal)?;
                hyps_are(prem[0], &with(g, &[a]))?;
                goal_is(prem[0], &Formula::Bottom)
            }
            Rule::NotE => {
                same_hyps(c, prem[0])?;
                same_hyps(c, prem[1])?;
                goal_is(prem[1], &Formula::not(prem[0].goal.clone()))
            }
            Rule::Prev => {
                let a = shape(as_prev(&c.goal), "goal of the form Y phi", &c.goal)?;
                goal_is(prem[0], a)?;
                let image: BTreeSet<Formula> = prem[0].hyps.iter().map(|h| Formula::prev(h.clone())).collect();
                let full = with(&image, &[&Formula::prev(Formula::Top)]);
                let ok = *g == full || (self.seeded_prev_bug && *g == image);
                expect(ok, || format!("conclusion hypotheses {}", show_hyps(&full)), || show_hyps(g))
            }
            Rule::SinceI1 => {
                let (_, b) = shape(as_since(&c.goal), "goal of the form phi S psi", &c.goal)?;
                same_hyps(c, prem[0])?;
                goal_is(prem[0], b)
            }
            Rule::SinceI2 => {
                let (a, _) = shape(as_since(&c.goal), "goal of the form phi S psi", &c.goal)?;
                same_hyps(c, prem[0])?;
                same_hyps(c, prem[1])?;
                goal_is(prem[0], a)?;
                goal_is(prem[1], &Formula::prev(c.goal.clone()))
            }
            Rule::SinceE => {
                same_hyps(c, prem[0])?;
                let s = &prem[0].goal;
                let (a, b) = shape(as_since(s), "premise of the form phi S psi", s)?;
                hyps_are(prem[1], &with(g, &[b]))?;
                hyps_are(prem[2], &with(g, &[&Formula::prev(s.clone()), a]))?;
                goal_is(prem[1], &c.goal)?;
                goal_is(prem[2], &c.goal)
            }
            Rule::K => {
                let (t, a) = shape(as_knows(&c.goal), "goal of the form K[A] phi", &c.goal)?;
                goal_is(prem[0], a)?;
                let image: BTreeSet<Formula> = prem[0]
                    .hyps
                    .iter()
                    .map(|h| Formula::knows(t.clone(), h.clone()))
                    .collect();
                expect(*g == image, || format!("conclusion hypotheses {}", show_hyps(&image)), || show_hyps(g))
            }
            Rule::T => {
                same_hyps(c, prem[0])?;
                let (_, a) = shape(as_knows(&prem[0].goal), "premise of the form K[A] phi", &prem[0].goal)?;
                expect(*a == c.goal, || format!("goal `{a}`"), || format!("`{}`", c.goal))
            }
            Rule::Four => {
                same_hyps(c, prem[0])?;
                let (t, _) = shape(as_knows(&prem[0].goal), "premise of the form K[A] phi", &prem[0].goal)?;
                let want = Formula::knows(t.clone(), prem[0].goal.clone());
                expect(c.goal == want, || format!("goal `{want}`"), || format!("`{}`", c.goal))
            }
            Rule::Five => {
                same_hyps(c, prem[0])?;
                let inner = shape(as_not(&prem[0].goal), "premise of the form !K[A] phi", &prem[0].goal)?;
                let (t, _) = shape(as_knows(inner), "premise of the form !K[A] phi", &prem[0].goal)?;
                let want = Formula::knows(t.clone(), prem[0].goal.clone());
                expect(c.goal == want, || format!("goal `{want}`"), || format!("`{}`", c.goal))
            }
        }
    }
}

/// Check with the reference kernel.
pub fn check_derivation(d: &Derivation) -> Result<(), Rejection> {
    Kernel::default().check(d)
}
