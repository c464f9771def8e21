//! Bounded enumeration of run prefixes, the exact reachable graph, and
//! perfect-recall observation histories.
//!
//! A point `(π, i)` is stored as a node of the scheduling tree (the labels
//! `π[..i]`) plus a slot: slot 0 when `i` is the last index of `π`, slot
//! `1 + t` when the next label is thread `t`. Every past-time formula and every
//! knowledge formula is a function of that pair.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::program::{GlobalState, LocalState, Program};
use crate::step::Constraint;

pub const DEFAULT_NODE_CAP: usize = 4_000_000;

const NONE: u32 = u32::MAX;

/// Hash-consed global states plus a successor cache.
struct Stepper<'a> {
    program: &'a Program,
    constraint: Option<&'a Constraint>,
    states: Vec<GlobalState>,
    index: HashMap<GlobalState, u32>,
    succ: HashMap<(u32, usize), Option<u32>>,
}

impl<'a> Stepper<'a> {
    fn new(program: &'a Program, constraint: Option<&'a Constraint>) -> Result<Self> {
        let s0 = program.initial_state();
        if let Some(c) = constraint {
            if !c.admits_initial(&s0) {
                return Err(Error::ConstraintFailsInitially);
            }
        }
        let mut st = Stepper {
            program,
            constraint,
            states: Vec::new(),
            index: HashMap::new(),
            succ: HashMap::new(),
        };
        st.intern(s0);
        Ok(st)
    }

    fn intern(&mut self, s: GlobalState) -> u32 {
        if let Some(&id) = self.index.get(&s) {
            return id;
        }
        let id = self.states.len() as u32;
        self.index.insert(s.clone(), id);
        self.states.push(s);
        id
    }

    /// Successor of `s` under a step of `t`, or `None` if the constraint
    /// forbids that step.
    fn step(&mut self, s: u32, t: usize) -> Result<Option<u32>> {
        if let Some(&r) = self.succ.get(&(s, t)) {
            return Ok(r);
        }
        let pre = &self.states[s as usize];
        let post = self.program.step_thread(pre, t)?;
        let ok = self.constraint.is_none_or(|c| c.admits_edge(pre, t, &post));
        let r = if ok { Some(self.intern(post)) } else { None };
        self.succ.insert((s, t), r);
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: usize,
    pub actor: usize,
    pub dst: usize,
}

/// All states reachable from the initial state by admissible steps.
#[derive(Debug, Clone)]
pub struct TransitionGraph {
    pub states: Vec<GlobalState>,
    /// Sorted by source, then actor.
    pub edges: Vec<Edge>,
    /// BFS tree: the edge that discovered each state.
    parent: Vec<Option<(usize, usize)>>,
}

impl TransitionGraph {
    pub fn reachable(p: &Program, constraint: Option<&Constraint>, node_cap: usize) -> Result<Self> {
        let mut st = Stepper::new(p, constraint)?;
        let mut parent = vec![None];
        let mut edges = Vec::new();
        let mut queue = VecDeque::from([0u32]);
        while let Some(s) = queue.pop_front() {
            for t in 0..p.thread_count() {
                let Some(d) = st.step(s, t)? else { continue };
                if d as usize == parent.len() {
                    if parent.len() >= node_cap {
                        return Err(Error::Budget(node_cap));
                    }
                    parent.push(Some((s as usize, t)));
                    queue.push_back(d);
                }
                edges.push(Edge {
                    src: s as usize,
                    actor: t,
                    dst: d as usize,
                });
            }
        }
        Ok(TransitionGraph {
            states: st.states,
            edges,
            parent,
        })
    }

    pub fn node_count(&self) -> usize {
        self.states.len()
    }

    /// Actor labels of a shortest path from the initial state to `node`.
    pub fn path_to(&self, mut node: usize) -> Vec<usize> {
        let mut labels = Vec::new();
        while let Some((src, actor)) = self.parent[node] {
            labels.push(actor);
            node = src;
        }
        labels.reverse();
        labels
    }

    pub fn render(&self, p: &Program) -> String {
        let mut out = String::new();
        for (i, s) in self.states.iter().enumerate() {
            out.push_str(&format!("node {i} {}\n", p.render_state(s)));
        }
        for e in &self.edges {
            out.push_str(&format!("edge {} {} {}\n", e.src, p.thread_name(e.actor), e.dst));
        }
        out
    }
}

/// A finite execution prefix `s_0 .. s_k` with its step labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunPrefix {
    pub states: Vec<GlobalState>,
    pub labels: Vec<usize>,
}

impl RunPrefix {
    /// Execute `labels` from the initial state, ignoring any constraint.
    pub fn replay(p: &Program, labels: &[usize]) -> Result<RunPrefix> {
        let mut states = vec![p.initial_state()];
        for &t in labels {
            if t >= p.thread_count() {
                return Err(Error::UnknownThread(format!("#{t}")));
            }
            let next = p.step_thread(states.last().unwrap(), t)?;
            states.push(next);
        }
        Ok(RunPrefix {
            states,
            labels: labels.to_vec(),
        })
    }
}

/// `(labels, index)`: the prefix `labels` viewed at position `index`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub labels: Vec<usize>,
    pub index: usize,
}

/// The compressed history straight from its definition: the observation at
/// time 0, after each step of `thread` before `i`, and at `i` itself.
pub fn observation_history(prefix: &RunPrefix, i: usize, thread: usize) -> Vec<LocalState> {
    let mut h = vec![prefix.states[0].locals[thread].clone()];
    for k in 0..i {
        if prefix.labels[k] == thread {
            h.push(prefix.states[k + 1].locals[thread].clone());
        }
    }
    h.push(prefix.states[i].locals[thread].clone());
    h
}

#[derive(Debug, Clone, Copy)]
struct Node {
    parent: u32,
    label: u32,
    depth: u32,
    state: u32,
}

/// Per-thread interning of histories.
#[derive(Debug, Clone, Default)]
struct HistTable {
    obs: Vec<LocalState>,
    obs_index: HashMap<LocalState, u32>,
    /// Trie of the history without its final entry: `(parent, obs)`.
    core: Vec<(u32, u32)>,
    core_index: HashMap<(u32, u32), u32>,
    /// Full histories: `(core, current obs)`.
    hist: Vec<(u32, u32)>,
    hist_index: HashMap<(u32, u32), u32>,
}

impl HistTable {
    fn obs_id(&mut self, l: &LocalState) -> u32 {
        if let Some(&id) = self.obs_index.get(l) {
            return id;
        }
        let id = self.obs.len() as u32;
        self.obs.push(l.clone());
        self.obs_index.insert(l.clone(), id);
        id
    }

    fn intern(table: &mut Vec<(u32, u32)>, index: &mut HashMap<(u32, u32), u32>, key: (u32, u32)) -> u32 {
        *index.entry(key).or_insert_with(|| {
            table.push(key);
            (table.len() - 1) as u32
        })
    }

    fn core_id(&mut self, parent: u32, obs: u32) -> u32 {
        Self::intern(&mut self.core, &mut self.core_index, (parent, obs))
    }

    fn hist_id(&mut self, core: u32, obs: u32) -> u32 {
        Self::intern(&mut self.hist, &mut self.hist_index, (core, obs))
    }

    fn sequence(&self, hist: u32) -> Vec<LocalState> {
        let (mut core, last) = self.hist[hist as usize];
        let mut seq = vec![self.obs[last as usize].clone()];
        while core != NONE {
            let (parent, obs) = self.core[core as usize];
            seq.push(self.obs[obs as usize].clone());
            core = parent;
        }
        seq.reverse();
        seq
    }
}

/// Every admissible prefix of length at most `depth`, as a scheduling tree.
///
/// Nodes are numbered in preorder with children visited in thread order, so a
/// parent always precedes its children and [`PointSet::positions`] lists
/// points lexicographically by label sequence, then index.
#[derive(Debug, Clone)]
pub struct PointSet {
    pub depth: usize,
    threads: usize,
    nodes: Vec<Node>,
    children: Vec<u32>,
    states: Vec<GlobalState>,
    /// `core[n * threads + t]`: history trie id without the current entry.
    core: Vec<u32>,
    /// `class[n * threads + t]`: the history id of `t` at `n`.
    class: Vec<u32>,
    hists: Vec<HistTable>,
}

impl PointSet {
    pub fn explore(p: &Program, depth: usize, constraint: Option<&Constraint>, node_cap: usize) -> Result<Self> {
        let threads = p.thread_count();
        let mut st = Stepper::new(p, constraint)?;
        let mut ps = PointSet {
            depth,
            threads,
            nodes: Vec::new(),
            children: Vec::new(),
            states: Vec::new(),
            core: Vec::new(),
            class: Vec::new(),
            hists: vec![HistTable::default(); threads],
        };
        // (parent, label, state)
        let mut stack = vec![(NONE, NONE, 0u32)];
        while let Some((parent, label, state)) = stack.pop() {
            if ps.nodes.len() >= node_cap {
                return Err(Error::Budget(node_cap));
            }
            let id = ps.nodes.len() as u32;
            let d = if parent == NONE {
                0
            } else {
                ps.children[(parent as usize) * threads + label as usize] = id;
                ps.nodes[parent as usize].depth + 1
            };
            ps.nodes.push(Node {
                parent,
                label,
                depth: d,
                state,
            });
            ps.children.extend(std::iter::repeat_n(NONE, threads));
            let s = &st.states[state as usize];
            for t in 0..threads {
                let h = &mut ps.hists[t];
                let obs = h.obs_id(&s.locals[t]);
                let core = if parent == NONE {
                    h.core_id(NONE, obs)
                } else if label as usize == t {
                    let pc = ps.core[(parent as usize) * threads + t];
                    h.core_id(pc, obs)
                } else {
                    ps.core[(parent as usize) * threads + t]
                };
                ps.core.push(core);
                let hist = h.hist_id(core, obs);
                ps.class.push(hist);
            }
            if (d as usize) < depth {
                for t in (0..threads).rev() {
                    if let Some(next) = st.step(state, t)? {
                        stack.push((id, t as u32, next));
                    }
                }
            }
        }
        ps.states = st.states;
        Ok(ps)
    }

    /// Number of scheduling-tree nodes, i.e. distinct labelled prefixes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn thread_count(&self) -> usize {
        self.threads
    }

    pub fn parent(&self, n: usize) -> Option<usize> {
        let p = self.nodes[n].parent;
        (p != NONE).then_some(p as usize)
    }

    /// The label of the step into `n`.
    pub fn label(&self, n: usize) -> Option<usize> {
        let l = self.nodes[n].label;
        (l != NONE).then_some(l as usize)
    }

    pub fn node_depth(&self, n: usize) -> usize {
        self.nodes[n].depth as usize
    }

    pub fn child(&self, n: usize, t: usize) -> Option<usize> {
        let c = self.children[n * self.threads + t];
        (c != NONE).then_some(c as usize)
    }

    pub fn state(&self, n: usize) -> &GlobalState {
        &self.states[self.nodes[n].state as usize]
    }

    pub fn state_id(&self, n: usize) -> usize {
        self.nodes[n].state as usize
    }

    /// Distinct global states occurring at some point.
    pub fn states(&self) -> &[GlobalState] {
        &self.states
    }

    /// The `~_t` class of `n`: equal ids iff equal histories.
    pub fn class(&self, n: usize, t: usize) -> usize {
        self.class[n * self.threads + t] as usize
    }

    pub fn class_count(&self, t: usize) -> usize {
        self.hists[t].hist.len()
    }

    /// The observation history of `t` at `n`, rebuilt from the interned trie.
    pub fn history(&self, n: usize, t: usize) -> Vec<LocalState> {
        self.hists[t].sequence(self.class(n, t) as u32)
    }

    pub fn labels(&self, mut n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.node_depth(n));
        while let Some(l) = self.label(n) {
            out.push(l);
            n = self.parent(n).unwrap();
        }
        out.reverse();
        out
    }

    pub fn run_prefix(&self, mut n: usize) -> RunPrefix {
        let labels = self.labels(n);
        let mut states = vec![self.state(n).clone()];
        while let Some(p) = self.parent(n) {
            states.push(self.state(p).clone());
            n = p;
        }
        states.reverse();
        RunPrefix { states, labels }
    }

    /// Whether slot `s` exists at node `n`.
    pub fn has_slot(&self, n: usize, s: usize) -> bool {
        s == 0 || self.child(n, s - 1).is_some()
    }

    /// All points as `(node, slot)`, in lexicographic order of
    /// `(label sequence, index)`.
    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).flat_map(move |c| {
            let via_parent = self
                .parent(c)
                .map(|p| (p, 1 + self.label(c).unwrap()));
            via_parent.into_iter().chain(std::iter::once((c, 0)))
        })
    }

    pub fn position_count(&self) -> usize {
        2 * self.len() - 1
    }

    pub fn point(&self, n: usize, slot: usize) -> Point {
        let mut labels = self.labels(n);
        let index = labels.len();
        if slot > 0 {
            labels.push(slot - 1);
        }
        Point { labels, index }
    }

    pub fn locate(&self, pt: &Point) -> Result<(usize, usize)> {
        let missing = || Error::PointNotInSet(format!("labels {:?} index {}", pt.labels, pt.index));
        if pt.index > pt.labels.len() || pt.labels.len() > self.depth {
            return Err(missing());
        }
        let mut n = 0;
        let mut at_index = None;
        for (k, &t) in pt.labels.iter().enumerate() {
            if k == pt.index {
                at_index = Some((n, 1 + t));
            }
            if t >= self.threads {
                return Err(missing());
            }
            n = self.child(n, t).ok_or_else(missing)?;
        }
        Ok(at_index.unwrap_or((n, 0)))
    }

    /// Node reached from the root by following `labels`.
    pub fn node_of(&self, labels: &[usize]) -> Option<usize> {
        labels.iter().try_fold(0, |n, &t| self.child(n, t))
    }
}
