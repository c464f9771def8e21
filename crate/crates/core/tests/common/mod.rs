//! Brute-force reference implementations used to cross-check the library.

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use ptel::eval::Tri;
use ptel::explorer::{observation_history, Point, RunPrefix};
use ptel::formula::Formula;
use ptel::program::{GlobalState, Program};

/// Reachable states by plain BFS over `step_thread`.
pub fn reachable_states(p: &Program) -> HashSet<GlobalState> {
    let s0 = p.initial_state();
    let mut seen = HashSet::from([s0.clone()]);
    let mut queue = VecDeque::from([s0]);
    while let Some(s) = queue.pop_front() {
        for t in 0..p.thread_count() {
            let n = p.step_thread(&s, t).unwrap();
            if seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    seen
}

/// Every point of every prefix of length at most `depth`, one per
/// distinguishable `(π[..=i], i)`.
pub fn all_points(p: &Program, depth: usize) -> Vec<Point> {
    let mut out = Vec::new();
    let mut layer = vec![Vec::<usize>::new()];
    for d in 0..=depth {
        let mut next = Vec::new();
        for labels in &layer {
            out.push(Point { labels: labels.clone(), index: d });
            if d < depth {
                for t in 0..p.thread_count() {
                    let mut l = labels.clone();
                    l.push(t);
                    out.push(Point { labels: l.clone(), index: d });
                    next.push(l);
                }
            }
        }
        layer = next;
    }
    out
}

pub struct Oracle<'a> {
    pub program: &'a Program,
    pub points: Vec<Point>,
    prefixes: Vec<RunPrefix>,
}

impl<'a> Oracle<'a> {
    pub fn new(program: &'a Program, depth: usize) -> Self {
        let points = all_points(program, depth);
        let prefixes = points.iter().map(|pt| RunPrefix::replay(program, &pt.labels).unwrap()).collect();
        Oracle { program, points, prefixes }
    }

    fn find(&self, labels: &[usize], index: usize) -> usize {
        self.points
            .iter()
            .position(|q| q.index == index && q.labels == labels)
            .expect("point in set")
    }

    /// Truth of a core formula at point `k`, straight from the definitions.
    pub fn eval(&self, k: usize, f: &Formula) -> Tri {
        let pt = &self.points[k];
        let pre = &self.prefixes[k];
        let i = pt.index;
        match f {
            Formula::Top => Tri::True,
            Formula::Atom(a) => {
                let r = self.program.resolve_atom(a).unwrap();
                Tri::from_bool(r.holds(&pre.states[i]))
            }
            Formula::Active(t) => {
                let t = self.program.resolve_thread(t).unwrap();
                match pt.labels.get(i) {
                    None => Tri::Unknown,
                    Some(&l) => Tri::from_bool(l == t),
                }
            }
            Formula::Not(a) => self.eval(k, a).not(),
            Formula::And(a, b) => self.eval(k, a).and(self.eval(k, b)),
            Formula::Prev(a) => {
                if i == 0 {
                    Tri::False
                } else {
                    self.eval(self.find(&pt.labels[..i], i - 1), a)
                }
            }
            Formula::Since(a, b) => {
                // exists j <= i with b at j and a on (j, i]
                let at = |j: usize| self.find(&pt.labels[..(j + 1).min(pt.labels.len())], j);
                let mut acc = Tri::False;
                for j in 0..=i {
                    let mut v = self.eval(at(j), b);
                    for m in j + 1..=i {
                        v = v.and(self.eval(at(m), a));
                    }
                    acc = acc.or(v);
                }
                acc
            }
            Formula::Knows(t, a) => {
                let t = self.program.resolve_thread(t).unwrap();
                let mine = observation_history(pre, i, t);
                let mut acc = Tri::True;
                for (m, q) in self.points.iter().enumerate() {
                    if observation_history(&self.prefixes[m], q.index, t) == mine {
                        acc = acc.and(self.eval(m, a));
                    }
                }
                acc
            }
            other => panic!("oracle takes core formulas, got {other}"),
        }
    }
}
