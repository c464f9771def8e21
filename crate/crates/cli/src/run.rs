//! Executing spec directives and the other subcommands.

use serde::Serialize;

use ptel::eval::{check_invariant, check_valid_bounded, stability_audit, CheckReport, Evaluator, Tri};
use ptel::explorer::{Point, PointSet, RunPrefix, TransitionGraph};
use ptel::formula::{expand_derived, Formula};
use ptel::program::Program;
use ptel::proof::{soundness_fuzz, Derivation, FuzzConfig, FuzzReport, Kernel};
use ptel::rg::{
    check_step_spec, compatibility, invariant_by_preservation, parallel_composition, preservation_spec,
    EdgeWitness, ObligationReport, RgInterface, Scope, StepSpec,
};
use ptel::step::Constraint;
use ptel::{Error, Result};

use crate::spec::{Directive, DirectiveKind, ScopeSpec, SpecFile};

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Check(CheckReport),
    Obligation(ObligationReport),
}

/// How to reproduce a failure with `trace`: evaluating `formula` at
/// `labels`/`index` in the depth-`depth` model gives `false`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Replay {
    pub labels: Vec<String>,
    pub index: usize,
    pub depth: usize,
    pub formula: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectiveResult {
    pub name: String,
    pub kind: &'static str,
    pub holds: bool,
    pub report: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replay: Option<Replay>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub passed: usize,
    pub failed: usize,
    pub results: Vec<DirectiveResult>,
}

impl RunReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }

    pub fn get(&self, name: &str) -> Option<&DirectiveResult> {
        self.results.iter().find(|r| r.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub node_cap: usize,
    /// Run only these directives, if set.
    pub only: Option<Vec<String>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            node_cap: ptel::explorer::DEFAULT_NODE_CAP,
            only: None,
        }
    }
}

fn thread(p: &Program, name: &str) -> Result<usize> {
    p.thread_index(name).ok_or_else(|| Error::UnknownThread(name.to_string()))
}

fn scope(p: &Program, s: &ScopeSpec) -> Result<Scope> {
    Ok(match s {
        ScopeSpec::Own(t) => Scope::OnSteps(thread(p, t)?),
        ScopeSpec::Env(t) => Scope::OnEnvSteps(thread(p, t)?),
        ScopeSpec::All => Scope::AllSteps,
    })
}

/// One interface per thread from the `guarantee`/`rely` stanzas.
pub fn interfaces(p: &Program, spec: &SpecFile) -> Result<Vec<RgInterface>> {
    for (t, _) in spec.guarantees.iter().chain(&spec.relies) {
        thread(p, t)?;
    }
    (0..p.thread_count())
        .map(|t| {
            let name = p.thread_name(t);
            let pick = |v: &[(String, Formula)]| v.iter().filter(|(n, _)| n == name).map(|(_, f)| f.clone()).collect();
            RgInterface::new(p, t, pick(&spec.guarantees), pick(&spec.relies))
        })
        .collect()
}

pub fn constraint(p: &Program, spec: &SpecFile, name: Option<&str>) -> Result<Option<Constraint>> {
    name.map(|n| Constraint::new(p, spec.def(n)?)).transpose()
}

fn edge_replay(w: &EdgeWitness, s: &StepSpec, p: &Program) -> Replay {
    let f = Formula::implies(s.scope.guard(p), s.formula.clone());
    Replay {
        labels: w.labels.clone(),
        index: w.index,
        depth: w.labels.len(),
        formula: f.to_string(),
        constraint: None,
    }
}

struct Ctx<'a> {
    p: &'a Program,
    spec: &'a SpecFile,
    opts: &'a RunOptions,
    graph: Option<TransitionGraph>,
}

impl Ctx<'_> {
    fn graph(&mut self) -> Result<&TransitionGraph> {
        if self.graph.is_none() {
            self.graph = Some(TransitionGraph::reachable(self.p, None, self.opts.node_cap)?);
        }
        Ok(self.graph.as_ref().unwrap())
    }

    fn run(&mut self, d: &Directive) -> Result<DirectiveResult> {
        let (p, spec) = (self.p, self.spec);
        let cap = self.opts.node_cap;
        let (report, replay) = match &d.kind {
            DirectiveKind::Invariant { formula, constraint: c } => {
                let cons = constraint(p, spec, c.as_deref())?;
                let r = check_invariant(p, formula, cons.as_ref())?;
                let replay = r.witness.as_ref().map(|w| Replay {
                    labels: w.labels.clone(),
                    index: w.index,
                    depth: w.labels.len(),
                    formula: r.formula.clone(),
                    constraint: c.clone(),
                });
                (Outcome::Check(r), replay)
            }
            DirectiveKind::ValidBounded {
                formula,
                depth,
                audit,
                constraint: c,
            } => {
                let cons = constraint(p, spec, c.as_deref())?;
                let r = match audit {
                    Some(delta) => stability_audit(p, formula, *depth, *delta, cons.as_ref(), cap)?,
                    None => check_valid_bounded(p, formula, *depth, cons.as_ref(), cap)?,
                };
                let replay = r.witness.as_ref().map(|w| Replay {
                    labels: w.labels.clone(),
                    index: w.index,
                    depth: *depth,
                    formula: r.formula.clone(),
                    constraint: c.clone(),
                });
                (Outcome::Check(r), replay)
            }
            DirectiveKind::StepSpec { scope: s, formula } => {
                let s = StepSpec::new(p, scope(p, s)?, formula.clone())?;
                let r = check_step_spec(p, self.graph()?, &s);
                let replay = r.witness.as_ref().map(|w| edge_replay(w, &s, p));
                (Outcome::Obligation(r), replay)
            }
            DirectiveKind::Compat { thread: t } => {
                let t = thread(p, t)?;
                let ifaces = interfaces(p, spec)?;
                let r = compatibility(p, self.graph()?, &ifaces, t);
                let replay = first_failing(&r.premises, &ifaces[t].rely, p);
                (Outcome::Obligation(r), replay)
            }
            DirectiveKind::Preservation { invariant } => {
                let i = spec.def(invariant)?;
                let r = invariant_by_preservation(p, self.graph()?, i)?;
                let replay = if !r.premises[0].holds {
                    Some(Replay {
                        labels: Vec::new(),
                        index: 0,
                        depth: 0,
                        formula: i.to_string(),
                        constraint: None,
                    })
                } else {
                    let pres = preservation_spec(p, Scope::AllSteps, i)?;
                    r.premises[1].witness.as_ref().map(|w| edge_replay(w, &pres, p))
                };
                (Outcome::Obligation(r), replay)
            }
            DirectiveKind::Parallel { invariant } => {
                let i = spec.def(invariant)?;
                let ifaces = interfaces(p, spec)?;
                let r = parallel_composition(p, self.graph()?, &ifaces, i)?;
                let local: Vec<StepSpec> = ifaces
                    .iter()
                    .map(|a| preservation_spec(p, Scope::OnSteps(a.thread), i))
                    .collect::<Result<_>>()?;
                let all = preservation_spec(p, Scope::AllSteps, i)?;
                // premises: compat per thread, local per thread, conclusion
                let n = ifaces.len();
                let replay = r.premises[..n]
                    .iter()
                    .zip(&ifaces)
                    .find_map(|(c, a)| first_failing(&c.premises, &a.rely, p))
                    .or_else(|| first_failing(&r.premises[n..2 * n], &local, p))
                    .or_else(|| first_failing(&r.premises[2 * n..], std::slice::from_ref(&all), p));
                (Outcome::Obligation(r), replay)
            }
        };
        let holds = match &report {
            Outcome::Check(r) => r.holds(),
            Outcome::Obligation(r) => r.holds,
        };
        Ok(DirectiveResult {
            name: d.name.clone(),
            kind: d.kind.tag(),
            holds,
            report,
            replay,
        })
    }
}

/// Replay for the first failing report, `reports[k]` having checked `specs[k]`.
fn first_failing(reports: &[ObligationReport], specs: &[StepSpec], p: &Program) -> Option<Replay> {
    reports
        .iter()
        .zip(specs)
        .find_map(|(r, s)| r.witness.as_ref().map(|w| edge_replay(w, s, p)))
}

/// Run the directives of `spec` against `p`, in file order.
pub fn run_spec(p: &Program, spec: &SpecFile, opts: &RunOptions) -> Result<RunReport> {
    if let Some(only) = &opts.only {
        if let Some(missing) = only.iter().find(|n| !spec.directives.iter().any(|d| &d.name == *n)) {
            return Err(Error::UnknownName(missing.clone()));
        }
    }
    let mut ctx = Ctx {
        p,
        spec,
        opts,
        graph: None,
    };
    let mut results = Vec::new();
    for d in &spec.directives {
        if opts.only.as_ref().is_some_and(|o| !o.contains(&d.name)) {
            continue;
        }
        results.push(ctx.run(d)?);
    }
    let passed = results.iter().filter(|r| r.holds).count();
    Ok(RunReport {
        passed,
        failed: results.len() - passed,
        results,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub labels: Vec<String>,
    pub index: usize,
    pub depth: usize,
    pub formula: String,
    pub verdict: Tri,
    /// States of the prefix up to and including `index`.
    pub states: Vec<String>,
}

/// Evaluate `f` at one explicit point of the depth-`depth` model.
pub fn trace(
    p: &Program,
    labels: &[String],
    index: Option<usize>,
    f: &Formula,
    depth: Option<usize>,
    cons: Option<&Constraint>,
    node_cap: usize,
) -> Result<TraceReport> {
    let ids: Vec<usize> = labels.iter().map(|l| thread(p, l)).collect::<Result<_>>()?;
    let index = index.unwrap_or(ids.len());
    if index > ids.len() || index + 1 < ids.len() {
        return Err(Error::Domain(format!(
            "index {index} must be the last position ({}) or the one before it",
            ids.len()
        )));
    }
    let depth = depth.unwrap_or(ids.len()).max(ids.len());
    let run = RunPrefix::replay(p, &ids)?;
    let core = expand_derived(f, p)?;
    let ps = PointSet::explore(p, depth, cons, node_cap)?;
    let verdict = Evaluator::new(p, &ps).satisfies(&Point { labels: ids, index }, &core)?;
    Ok(TraceReport {
        labels: labels.to_vec(),
        index,
        depth,
        formula: f.to_string(),
        verdict,
        states: run.states[..=index].iter().map(|s| p.render_state(s)).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProofResult {
    pub index: usize,
    pub conclusion: String,
    pub valid: bool,
    pub nodes: usize,
    pub rules: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProveReport {
    pub derivations: Vec<ProofResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fuzz: Option<FuzzReport>,
}

impl ProveReport {
    pub fn ok(&self) -> bool {
        self.derivations.iter().all(|d| d.valid) && self.fuzz.as_ref().is_none_or(|f| f.violations.is_empty())
    }
}

/// Check every derivation; fuzz the accepted ones if `fuzz` is given.
pub fn prove(ds: &[Derivation], kernel: Kernel, fuzz: Option<&FuzzConfig>) -> ProveReport {
    let mut accepted = Vec::new();
    let derivations = ds
        .iter()
        .enumerate()
        .map(|(index, d)| {
            let r = kernel.check(d);
            if r.is_ok() {
                accepted.push(d.clone());
            }
            ProofResult {
                index,
                conclusion: d.conclusion.to_string(),
                valid: r.is_ok(),
                nodes: d.size(),
                rules: d.rules_used().iter().map(|r| r.to_string()).collect(),
                rejection: r.err().map(|e| e.to_string()),
            }
        })
        .collect();
    ProveReport {
        derivations,
        fuzz: fuzz.map(|cfg| soundness_fuzz(&accepted, cfg)),
    }
}

/// `explore --depth`: one line per point, then per-thread class counts.
pub fn render_points(p: &Program, ps: &PointSet) -> String {
    let mut out = String::new();
    for (n, s) in ps.positions() {
        let pt = ps.point(n, s);
        let labels: Vec<&str> = pt.labels.iter().map(|&t| p.thread_name(t)).collect();
        out.push_str(&format!("point [{}]@{} {}\n", labels.join(","), pt.index, p.render_state(ps.state(n))));
    }
    out.push_str(&format!("points {} nodes {}", ps.position_count(), ps.len()));
    for t in 0..p.thread_count() {
        out.push_str(&format!(" classes({})={}", p.thread_name(t), ps.class_count(t)));
    }
    out.push('\n');
    out
}
