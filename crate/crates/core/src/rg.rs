//! Step specifications checked exactly on the reachable transition graph.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::explorer::{Edge, TransitionGraph};
use crate::formula::{expand_derived, is_extensional, Formula, ThreadId};
use crate::program::Program;
use crate::step::StepPred;

/// Which steps a constraint talks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    OnSteps(usize),
    OnEnvSteps(usize),
    AllSteps,
}

impl Scope {
    pub fn includes(self, actor: usize) -> bool {
        match self {
            Scope::OnSteps(t) => actor == t,
            Scope::OnEnvSteps(t) => actor != t,
            Scope::AllSteps => true,
        }
    }

    /// The trace-level guard: `after(A)`, `Y true & !after(A)`, or `Y true`.
    pub fn guard(self, p: &Program) -> Formula {
        let after = |t: usize| Formula::after(ThreadId::new(p.thread_name(t)));
        match self {
            Scope::OnSteps(t) => after(t),
            Scope::OnEnvSteps(t) => Formula::and(Formula::prev(Formula::Top), Formula::not(after(t))),
            Scope::AllSteps => Formula::prev(Formula::Top),
        }
    }

    pub fn describe(self, p: &Program) -> String {
        match self {
            Scope::OnSteps(t) => format!("own({})", p.thread_name(t)),
            Scope::OnEnvSteps(t) => format!("env({})", p.thread_name(t)),
            Scope::AllSteps => "all".into(),
        }
    }
}

/// A two-state constraint on the steps in its scope.
#[derive(Debug, Clone)]
pub struct StepSpec {
    pub scope: Scope,
    pub formula: Formula,
    pred: StepPred,
}

impl StepSpec {
    pub fn new(p: &Program, scope: Scope, formula: Formula) -> Result<StepSpec> {
        let pred = StepPred::compile(p, &formula)?;
        Ok(StepSpec { scope, formula, pred })
    }

    /// `guard -> c` on the edge; vacuous outside the scope.
    pub fn holds_on(&self, g: &TransitionGraph, e: &Edge) -> bool {
        !self.scope.includes(e.actor) || self.pred.on_edge(&g.states[e.src], e.actor, &g.states[e.dst])
    }

    /// The same constraint as a trace formula `H(guard -> c)`.
    pub fn as_always(&self, p: &Program) -> Formula {
        Formula::always(Formula::implies(self.scope.guard(p), self.formula.clone()))
    }

    pub fn describe(&self, p: &Program) -> String {
        format!("{} : {}", self.scope.describe(p), self.formula)
    }
}

#[derive(Debug, Clone)]
pub struct RgInterface {
    pub thread: usize,
    /// Scoped to the thread's own steps.
    pub guarantee: Vec<StepSpec>,
    /// Scoped to environment steps.
    pub rely: Vec<StepSpec>,
}

impl RgInterface {
    pub fn new(p: &Program, thread: usize, guarantee: Vec<Formula>, rely: Vec<Formula>) -> Result<Self> {
        let mk = |scope: Scope, fs: Vec<Formula>| -> Result<Vec<StepSpec>> {
            fs.into_iter().map(|f| StepSpec::new(p, scope, f)).collect()
        };
        Ok(RgInterface {
            thread,
            guarantee: mk(Scope::OnSteps(thread), guarantee)?,
            rely: mk(Scope::OnEnvSteps(thread), rely)?,
        })
    }
}

/// A failing edge, with a schedule from the initial state that reaches it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeWitness {
    /// Labels of a path to `src` followed by `actor`; the failure is visible
    /// at the final index.
    pub labels: Vec<String>,
    pub index: usize,
    pub actor: String,
    pub src: String,
    pub dst: String,
}

impl EdgeWitness {
    fn new(p: &Program, g: &TransitionGraph, e: &Edge) -> EdgeWitness {
        let mut labels: Vec<String> = g
            .path_to(e.src)
            .into_iter()
            .map(|t| p.thread_name(t).to_string())
            .collect();
        labels.push(p.thread_name(e.actor).to_string());
        EdgeWitness {
            index: labels.len(),
            labels,
            actor: p.thread_name(e.actor).to_string(),
            src: p.render_state(&g.states[e.src]),
            dst: p.render_state(&g.states[e.dst]),
        }
    }

    /// Thread indices of the schedule, for replay.
    pub fn schedule(&self, p: &Program) -> Result<Vec<usize>> {
        self.labels
            .iter()
            .map(|l| p.thread_index(l).ok_or_else(|| Error::UnknownThread(l.clone())))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObligationReport {
    pub name: String,
    pub holds: bool,
    pub edges_checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<EdgeWitness>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub premises: Vec<ObligationReport>,
}

impl ObligationReport {
    fn leaf(name: String, edges_checked: usize, witness: Option<EdgeWitness>) -> Self {
        ObligationReport {
            name,
            holds: witness.is_none(),
            edges_checked,
            witness,
            premises: Vec::new(),
        }
    }

    /// First failing report in this tree, premises before the node itself.
    pub fn first_failure(&self) -> Option<&ObligationReport> {
        self.premises
            .iter()
            .find_map(|r| r.first_failure())
            .or_else(|| (!self.holds && self.witness.is_some()).then_some(self))
    }
}

/// Check `spec` on every edge in its scope.
pub fn check_step_spec(p: &Program, g: &TransitionGraph, spec: &StepSpec) -> ObligationReport {
    entails_on_edges(p, g, &[], spec)
}

/// On every edge where each `lhs` spec holds, `rhs` holds.
pub fn entails_on_edges(p: &Program, g: &TransitionGraph, lhs: &[&StepSpec], rhs: &StepSpec) -> ObligationReport {
    let bad = g
        .edges
        .iter()
        .find(|e| lhs.iter().all(|s| s.holds_on(g, e)) && !rhs.holds_on(g, e));
    let name = if lhs.is_empty() {
        rhs.describe(p)
    } else {
        let l: Vec<String> = lhs.iter().map(|s| s.describe(p)).collect();
        format!("[{}] entails {}", l.join("; "), rhs.describe(p))
    };
    ObligationReport::leaf(name, g.edges.len(), bad.map(|e| EdgeWitness::new(p, g, e)))
}

fn state_pred(p: &Program, i: &Formula) -> Result<Formula> {
    let core = expand_derived(i, p)?;
    if !is_extensional(&core) {
        return Err(Error::NotExtensional {
            macro_name: "pres".into(),
            arg: i.to_string(),
        });
    }
    Ok(core)
}

/// `Y I -> I` restricted to `scope`.
pub fn preservation_spec(p: &Program, scope: Scope, i: &Formula) -> Result<StepSpec> {
    let core = state_pred(p, i)?;
    StepSpec::new(p, scope, Formula::implies(Formula::prev(core.clone()), core))
}

/// `I` holds initially and every edge preserves it; then `H I` holds on
/// every run of the system.
pub fn invariant_by_preservation(p: &Program, g: &TransitionGraph, i: &Formula) -> Result<ObligationReport> {
    let core = state_pred(p, i)?;
    let init_ok = StepPred::compile(p, &core)?.at_initial(&g.states[0]);
    let init = ObligationReport {
        name: format!("init : {i}"),
        holds: init_ok,
        edges_checked: 0,
        witness: None,
        premises: Vec::new(),
    };
    let step = check_step_spec(p, g, &preservation_spec(p, Scope::AllSteps, i)?);
    Ok(ObligationReport {
        name: format!("invariant {i}"),
        holds: init.holds && step.holds,
        edges_checked: step.edges_checked,
        witness: None,
        premises: vec![init, step],
    })
}

/// `Pres_A(I)` for each thread, in thread order.
pub fn pres_by_thread(p: &Program, g: &TransitionGraph, i: &Formula) -> Result<Vec<ObligationReport>> {
    (0..p.thread_count())
        .map(|t| Ok(check_step_spec(p, g, &preservation_spec(p, Scope::OnSteps(t), i)?)))
        .collect()
}

/// The derived parallel-composition rule: compatibility of every rely with
/// the other guarantees, local preservation under own guarantee and rely,
/// and the conclusion that the guarantees together preserve `I`.
pub fn parallel_composition(
    p: &Program,
    g: &TransitionGraph,
    ifaces: &[RgInterface],
    i: &Formula,
) -> Result<ObligationReport> {
    for t in 0..p.thread_count() {
        if ifaces.iter().filter(|f| f.thread == t).count() != 1 {
            return Err(Error::Program(format!(
                "parallel composition needs exactly one interface for thread {}",
                p.thread_name(t)
            )));
        }
    }
    let mut premises = Vec::new();
    for a in ifaces {
        let env: Vec<&StepSpec> = ifaces
            .iter()
            .filter(|b| b.thread != a.thread)
            .flat_map(|b| &b.guarantee)
            .collect();
        let parts: Vec<ObligationReport> = a.rely.iter().map(|r| entails_on_edges(p, g, &env, r)).collect();
        premises.push(combine(format!("compat {}", p.thread_name(a.thread)), g, parts));
    }
    for a in ifaces {
        let own: Vec<&StepSpec> = a.guarantee.iter().chain(&a.rely).collect();
        let pres = preservation_spec(p, Scope::OnSteps(a.thread), i)?;
        let mut r = entails_on_edges(p, g, &own, &pres);
        r.name = format!("local {} : {r}", p.thread_name(a.thread), r = r.name);
        premises.push(r);
    }
    let all_g: Vec<&StepSpec> = ifaces.iter().flat_map(|f| &f.guarantee).collect();
    let mut conclusion = entails_on_edges(p, g, &all_g, &preservation_spec(p, Scope::AllSteps, i)?);
    conclusion.name = format!("conclusion : {}", conclusion.name);
    let premises_hold = premises.iter().all(|r| r.holds);
    let holds = premises_hold && conclusion.holds;
    premises.push(conclusion);
    Ok(ObligationReport {
        name: format!("parallel {i}"),
        holds,
        edges_checked: g.edges.len(),
        witness: None,
        premises,
    })
}

/// Interface compatibility for one thread: the other guarantees entail each
/// of its relies.
pub fn compatibility(p: &Program, g: &TransitionGraph, ifaces: &[RgInterface], thread: usize) -> ObligationReport {
    let env: Vec<&StepSpec> = ifaces
        .iter()
        .filter(|b| b.thread != thread)
        .flat_map(|b| &b.guarantee)
        .collect();
    let parts = ifaces
        .iter()
        .filter(|a| a.thread == thread)
        .flat_map(|a| &a.rely)
        .map(|r| entails_on_edges(p, g, &env, r))
        .collect();
    combine(format!("compat {}", p.thread_name(thread)), g, parts)
}

fn combine(name: String, g: &TransitionGraph, parts: Vec<ObligationReport>) -> ObligationReport {
    ObligationReport {
        name,
        holds: parts.iter().all(|r| r.holds),
        edges_checked: g.edges.len(),
        witness: parts.iter().find_map(|r| r.witness.clone()),
        premises: parts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::{RunPrefix, DEFAULT_NODE_CAP};
    use crate::formula::parse_formula;
    use crate::program::parse_program;

    fn prog() -> Program {
        parse_program(
            "shared x : 0..2 = 0\nshared v : 0..1 = 0\nthread A {\n a: write x := 1 goto b\n b: write v := 1 goto c\n c: halt\n}\nthread B {\n local r : 0..2 = 0\n d: read r := x goto d\n}",
        )
        .unwrap()
    }

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn direct_violation_has_replayable_edge() {
        let p = prog();
        let g = TransitionGraph::reachable(&p, None, DEFAULT_NODE_CAP).unwrap();
        let spec = StepSpec::new(&p, Scope::AllSteps, f("!chg(x)")).unwrap();
        let r = check_step_spec(&p, &g, &spec);
        assert!(!r.holds);
        let w = r.witness.unwrap();
        assert_eq!(w.labels, vec!["A"]);
        let run = RunPrefix::replay(&p, &w.schedule(&p).unwrap()).unwrap();
        assert_eq!(p.render_state(run.states.last().unwrap()), w.dst);
    }

    #[test]
    fn env_scope() {
        let p = prog();
        let g = TransitionGraph::reachable(&p, None, DEFAULT_NODE_CAP).unwrap();
        let b = p.thread_index("B").unwrap();
        let own = StepSpec::new(&p, Scope::OnEnvSteps(b), f("!chg(v)")).unwrap();
        assert!(!check_step_spec(&p, &g, &own).holds);
        let a = p.thread_index("A").unwrap();
        let frame = StepSpec::new(&p, Scope::OnEnvSteps(a), f("!chg(x) & !chg(v)")).unwrap();
        assert!(check_step_spec(&p, &g, &frame).holds);
    }

    #[test]
    fn entailment() {
        let p = prog();
        let g = TransitionGraph::reachable(&p, None, DEFAULT_NODE_CAP).unwrap();
        let taut = StepSpec::new(&p, Scope::AllSteps, f("true")).unwrap();
        assert!(entails_on_edges(&p, &g, &[], &taut).holds);
        let x_same = StepSpec::new(&p, Scope::AllSteps, f("!chg(x)")).unwrap();
        let both = StepSpec::new(&p, Scope::AllSteps, f("!chg(x) & !chg(v)")).unwrap();
        let r = entails_on_edges(&p, &g, &[&x_same], &both);
        assert!(!r.holds);
        // The counterexample is the write to v.
        assert!(r.witness.unwrap().dst.contains("v=1"));
    }

    #[test]
    fn preservation_and_partition() {
        let p = prog();
        let g = TransitionGraph::reachable(&p, None, DEFAULT_NODE_CAP).unwrap();
        let i = f("v = 1 -> x = 1");
        assert!(invariant_by_preservation(&p, &g, &i).unwrap().holds);
        assert!(invariant_by_preservation(&p, &g, &f("true")).unwrap().holds);
        let bad = f("x = 0");
        let r = invariant_by_preservation(&p, &g, &bad).unwrap();
        assert!(!r.holds);
        let per: Vec<bool> = pres_by_thread(&p, &g, &bad).unwrap().iter().map(|r| r.holds).collect();
        assert_eq!(per, vec![false, true]);
        assert!(invariant_by_preservation(&p, &g, &f("Y x = 0")).is_err());
    }

    #[test]
    fn single_thread_parallel_is_vacuous_compat() {
        let p = parse_program("shared x : 0..1 = 0\nthread A {\n a: write x := 1 goto b\n b: halt\n}").unwrap();
        let g = TransitionGraph::reachable(&p, None, DEFAULT_NODE_CAP).unwrap();
        let iface = RgInterface::new(&p, 0, vec![f("true")], vec![f("false")]).unwrap();
        let r = parallel_composition(&p, &g, &[iface], &f("x = 0 | x = 1")).unwrap();
        assert!(r.holds, "{r:?}");
        assert_eq!(r.premises[0].name, "compat A");
    }
}
