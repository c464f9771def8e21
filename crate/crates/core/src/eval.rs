//! Satisfaction over a bounded point set.
//!
//! Formulas are hash-consed into a DAG; each node gets one value per point,
//! computed once in tree order and kept for later queries. `active(A)` at the
//! last index of a prefix has no label to test and is indeterminate; the
//! third value propagates through the connectives Kleene-style.

use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::explorer::{Point, PointSet, DEFAULT_NODE_CAP};
use crate::formula::{expand_derived, is_extensional, Formula};
use crate::program::{Program, ResolvedAtom};
use crate::step::Constraint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Tri {
    #[serde(rename = "false")]
    False,
    #[serde(rename = "true")]
    True,
    #[serde(rename = "frontier-indeterminate")]
    Unknown,
}

impl Tri {
    pub fn from_bool(b: bool) -> Tri {
        if b {
            Tri::True
        } else {
            Tri::False
        }
    }

    pub fn not(self) -> Tri {
        match self {
            Tri::False => Tri::True,
            Tri::True => Tri::False,
            Tri::Unknown => Tri::Unknown,
        }
    }

    pub fn and(self, o: Tri) -> Tri {
        match (self, o) {
            (Tri::False, _) | (_, Tri::False) => Tri::False,
            (Tri::True, Tri::True) => Tri::True,
            _ => Tri::Unknown,
        }
    }

    pub fn or(self, o: Tri) -> Tri {
        self.not().and(o.not()).not()
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Tri::False => Some(false),
            Tri::True => Some(true),
            Tri::Unknown => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    Top,
    Atom(ResolvedAtom),
    Active(usize),
    Not(usize),
    And(usize, usize),
    Prev(usize),
    Since(usize, usize),
    Knows(usize, usize),
}

pub struct Evaluator<'a> {
    program: &'a Program,
    ps: &'a PointSet,
    width: usize,
    index: HashMap<Node, usize>,
    nodes: Vec<Node>,
    values: Vec<Option<Vec<Tri>>>,
    /// Per thread: class id -> member nodes.
    members: Vec<Option<Vec<Vec<u32>>>>,
}

/// Outcome of evaluating a formula at every point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sweep {
    pub first_false: Option<(usize, usize)>,
    pub false_count: usize,
    pub first_unknown: Option<(usize, usize)>,
    pub unknown_count: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(program: &'a Program, ps: &'a PointSet) -> Self {
        Evaluator {
            program,
            ps,
            width: ps.thread_count() + 1,
            index: HashMap::new(),
            nodes: Vec::new(),
            values: Vec::new(),
            members: vec![None; ps.thread_count()],
        }
    }

    pub fn point_set(&self) -> &PointSet {
        self.ps
    }

    fn node(&mut self, n: Node) -> usize {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(n);
        self.values.push(None);
        self.index.insert(n, id);
        id
    }

    /// Intern a core formula. Derived operators and sugar must be expanded
    /// first; letters must have been substituted.
    fn intern(&mut self, f: &Formula) -> Result<usize> {
        let n = match f {
            Formula::Top => Node::Top,
            Formula::Atom(a) => Node::Atom(self.program.resolve_atom(a)?),
            Formula::Prop(name) => return Err(Error::UnresolvedProp(name.clone())),
            Formula::Active(t) => Node::Active(self.program.resolve_thread(t)?),
            Formula::Not(a) => Node::Not(self.intern(a)?),
            Formula::And(a, b) => Node::And(self.intern(a)?, self.intern(b)?),
            Formula::Prev(a) => Node::Prev(self.intern(a)?),
            Formula::Since(a, b) => Node::Since(self.intern(a)?, self.intern(b)?),
            Formula::NegSince(a, b) => {
                let since = Node::Since(self.intern(a)?, self.intern(b)?);
                Node::Not(self.node(since))
            }
            Formula::Knows(t, a) => Node::Knows(self.program.resolve_thread(t)?, self.intern(a)?),
            Formula::Bottom
            | Formula::Or(..)
            | Formula::Implies(..)
            | Formula::Iff(..)
            | Formula::Derived(_) => return Err(Error::UnexpandedDerived(f.to_string())),
        };
        Ok(self.node(n))
    }

    fn members(&mut self, t: usize) -> &Vec<Vec<u32>> {
        if self.members[t].is_none() {
            let mut m = vec![Vec::new(); self.ps.class_count(t)];
            for n in 0..self.ps.len() {
                m[self.ps.class(n, t)].push(n as u32);
            }
            self.members[t] = Some(m);
        }
        self.members[t].as_ref().unwrap()
    }

    fn ensure(&mut self, id: usize) {
        if self.values[id].is_some() {
            return;
        }
        let ps = self.ps;
        let w = self.width;
        let len = ps.len() * w;
        let node = self.nodes[id];
        let per_node = |f: &dyn Fn(usize) -> Tri| -> Vec<Tri> {
            (0..ps.len()).flat_map(|n| std::iter::repeat_n(f(n), w)).collect()
        };
        let v = match node {
            Node::Top => vec![Tri::True; len],
            Node::Atom(a) => per_node(&|n| Tri::from_bool(a.holds(ps.state(n)))),
            Node::Active(t) => (0..len)
                .map(|i| match i % w {
                    0 => Tri::Unknown,
                    s => Tri::from_bool(s - 1 == t),
                })
                .collect(),
            Node::Not(a) => {
                self.ensure(a);
                self.vals(a).iter().map(|x| x.not()).collect()
            }
            Node::And(a, b) => {
                self.ensure(a);
                self.ensure(b);
                let (va, vb) = (self.vals(a), self.vals(b));
                va.iter().zip(vb).map(|(x, y)| x.and(*y)).collect()
            }
            Node::Prev(a) => {
                self.ensure(a);
                let va = self.vals(a);
                per_node(&|n| match ps.parent(n) {
                    None => Tri::False,
                    Some(p) => va[p * w + 1 + ps.label(n).unwrap()],
                })
            }
            Node::Since(a, b) => {
                self.ensure(a);
                self.ensure(b);
                let (va, vb) = (self.vals(a), self.vals(b));
                let mut out = vec![Tri::False; len];
                for n in 0..ps.len() {
                    let before = ps.parent(n).map(|p| out[p * w + 1 + ps.label(n).unwrap()]);
                    for s in 0..w {
                        let i = n * w + s;
                        out[i] = match before {
                            None => vb[i],
                            Some(prev) => vb[i].or(va[i].and(prev)),
                        };
                    }
                }
                out
            }
            Node::Knows(t, a) => {
                self.ensure(a);
                self.members(t);
                let va = self.vals(a);
                let members = self.members[t].as_ref().unwrap();
                let class_val: Vec<Tri> = members
                    .iter()
                    .map(|ms| {
                        ms.iter().fold(Tri::True, |acc, &m| {
                            let m = m as usize;
                            (0..w)
                                .filter(|&s| ps.has_slot(m, s))
                                .fold(acc, |acc, s| acc.and(va[m * w + s]))
                        })
                    })
                    .collect();
                per_node(&|n| class_val[ps.class(n, t)])
            }
        };
        self.values[id] = Some(v);
    }

    fn vals(&self, id: usize) -> &[Tri] {
        self.values[id].as_deref().expect("computed")
    }

    /// Values of `f` at every `(node, slot)`, flattened `node * (threads + 1) + slot`.
    pub fn values(&mut self, f: &Formula) -> Result<&[Tri]> {
        let id = self.intern(f)?;
        self.ensure(id);
        Ok(self.vals(id))
    }

    pub fn value_at(&mut self, f: &Formula, node: usize, slot: usize) -> Result<Tri> {
        let w = self.width;
        Ok(self.values(f)?[node * w + slot])
    }

    pub fn satisfies(&mut self, pt: &Point, f: &Formula) -> Result<Tri> {
        let (n, s) = self.ps.locate(pt)?;
        self.value_at(f, n, s)
    }

    /// Evaluate at every point in lexicographic order.
    pub fn sweep(&mut self, f: &Formula) -> Result<Sweep> {
        let w = self.width;
        let ps = self.ps;
        let v = self.values(f)?;
        let mut out = Sweep {
            first_false: None,
            false_count: 0,
            first_unknown: None,
            unknown_count: 0,
        };
        for (n, s) in ps.positions() {
            match v[n * w + s] {
                Tri::True => {}
                Tri::False => {
                    out.false_count += 1;
                    out.first_false.get_or_insert((n, s));
                }
                Tri::Unknown => {
                    out.unknown_count += 1;
                    out.first_unknown.get_or_insert((n, s));
                }
            }
        }
        Ok(out)
    }
}

/// Evaluate a core formula at one point.
pub fn satisfies(p: &Program, ps: &PointSet, pt: &Point, f: &Formula) -> Result<Tri> {
    Evaluator::new(p, ps).satisfies(pt, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Invariant,
    ValidBounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub labels: Vec<String>,
    pub index: usize,
}

impl Witness {
    pub fn new(p: &Program, pt: &Point) -> Witness {
        Witness {
            labels: pt.labels.iter().map(|&t| p.thread_name(t).to_string()).collect(),
            index: pt.index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub points: usize,
    pub classes: usize,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Flip {
    pub witness: Witness,
    pub low: Tri,
    pub high: Tri,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Audit {
    pub depth: usize,
    pub verdict: Tri,
    /// Same overall verdict and no shared point changed value.
    pub stable: bool,
    pub flip: Option<Flip>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub formula: String,
    pub mode: Mode,
    pub depth: Option<usize>,
    pub verdict: Tri,
    pub witness: Option<Witness>,
    /// Points where the formula is frontier-indeterminate; not failures.
    pub indeterminate: usize,
    pub stats: Stats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<Audit>,
}

impl CheckReport {
    pub fn holds(&self) -> bool {
        self.verdict == Tri::True && self.audit.as_ref().is_none_or(|a| a.stable)
    }
}

fn millis(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

fn total_classes(ps: &PointSet) -> usize {
    (0..ps.thread_count()).map(|t| ps.class_count(t)).sum()
}

/// Check `f` at every point of the depth-`depth` point set.
pub fn check_valid_bounded(
    p: &Program,
    f: &Formula,
    depth: usize,
    constraint: Option<&Constraint>,
    node_cap: usize,
) -> Result<CheckReport> {
    let start = Instant::now();
    let core = expand_derived(f, p)?;
    let ps = PointSet::explore(p, depth, constraint, node_cap)?;
    let mut ev = Evaluator::new(p, &ps);
    let sweep = ev.sweep(&core)?;
    Ok(CheckReport {
        formula: f.to_string(),
        mode: Mode::ValidBounded,
        depth: Some(depth),
        verdict: if sweep.first_false.is_some() { Tri::False } else { Tri::True },
        witness: sweep.first_false.map(|(n, s)| Witness::new(p, &ps.point(n, s))),
        indeterminate: sweep.unknown_count,
        stats: Stats {
            points: ps.position_count(),
            classes: total_classes(&ps),
            elapsed_ms: millis(start),
        },
        audit: None,
    })
}

/// Check at `depth` and at `depth + delta`, comparing every shared point.
pub fn stability_audit(
    p: &Program,
    f: &Formula,
    depth: usize,
    delta: usize,
    constraint: Option<&Constraint>,
    node_cap: usize,
) -> Result<CheckReport> {
    if delta == 0 {
        return Err(Error::Domain("audit increment must be at least 1".into()));
    }
    let start = Instant::now();
    let core = expand_derived(f, p)?;
    let lo = PointSet::explore(p, depth, constraint, node_cap)?;
    let hi = PointSet::explore(p, depth + delta, constraint, node_cap)?;
    let mut ev_lo = Evaluator::new(p, &lo);
    let mut ev_hi = Evaluator::new(p, &hi);
    let sweep_lo = ev_lo.sweep(&core)?;
    let sweep_hi = ev_hi.sweep(&core)?;
    let v_lo = ev_lo.values(&core)?;
    let v_hi = ev_hi.values(&core)?;
    let w = p.thread_count() + 1;

    // Low nodes map into the high tree by following the same labels.
    let mut map = vec![0usize; lo.len()];
    for n in 1..lo.len() {
        let parent = map[lo.parent(n).unwrap()];
        map[n] = hi.child(parent, lo.label(n).unwrap()).expect("shallower prefixes are shared");
    }
    let flip = lo.positions().find_map(|(n, s)| {
        let (a, b) = (v_lo[n * w + s], v_hi[map[n] * w + s]);
        (a != b).then(|| Flip {
            witness: Witness::new(p, &lo.point(n, s)),
            low: a,
            high: b,
        })
    });
    let verdict = |sw: &Sweep| if sw.first_false.is_some() { Tri::False } else { Tri::True };
    let (vl, vh) = (verdict(&sweep_lo), verdict(&sweep_hi));
    Ok(CheckReport {
        formula: f.to_string(),
        mode: Mode::ValidBounded,
        depth: Some(depth),
        verdict: vl,
        witness: sweep_lo.first_false.map(|(n, s)| Witness::new(p, &lo.point(n, s))),
        indeterminate: sweep_lo.unknown_count,
        stats: Stats {
            points: lo.position_count(),
            classes: total_classes(&lo),
            elapsed_ms: millis(start),
        },
        audit: Some(Audit {
            depth: depth + delta,
            verdict: vh,
            stable: vl == vh && flip.is_none(),
            flip,
        }),
    })
}

/// Exact check of a state formula on every reachable state.
pub fn check_invariant(p: &Program, f: &Formula, constraint: Option<&Constraint>) -> Result<CheckReport> {
    let start = Instant::now();
    let core = expand_derived(f, p)?;
    if !is_extensional(&core) {
        return Err(Error::NotExtensional {
            macro_name: "invariant".into(),
            arg: f.to_string(),
        });
    }
    let pred = crate::step::StepPred::compile(p, &core)?;
    let g = crate::explorer::TransitionGraph::reachable(p, constraint, DEFAULT_NODE_CAP)?;
    let bad = g.states.iter().position(|s| !pred.at_initial(s));
    Ok(CheckReport {
        formula: f.to_string(),
        mode: Mode::Invariant,
        depth: None,
        verdict: if bad.is_some() { Tri::False } else { Tri::True },
        witness: bad.map(|n| {
            let labels = g.path_to(n);
            Witness::new(p, &Point { index: labels.len(), labels })
        }),
        indeterminate: 0,
        stats: Stats {
            points: g.node_count(),
            classes: 0,
            elapsed_ms: millis(start),
        },
        audit: None,
    })
}
