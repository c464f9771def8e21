//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ptel::eval::{check_valid_bounded, Evaluator, Tri};
use ptel::explorer::{observation_history, PointSet, TransitionGraph, DEFAULT_NODE_CAP};
use ptel::formula::{expand_derived, nnf, parse_formula, unfold_since, Formula};
use ptel::program::Program;
use ptel::proof::{check_derivation, soundness_fuzz, FuzzConfig, Kernel};
use ptel::rg::{
    check_step_spec, entails_on_edges, invariant_by_preservation, pres_by_thread, preservation_spec, Scope,
    StepSpec,
};
use ptel::sample::{random_program, FormulaSampler, Fragment, ProgramShape};
use ptel::step::Constraint;
use ptel_cli::run::{run_spec, trace, Replay, RunOptions, RunReport};
use ptel_cli::spec::SpecFile;
use ptel_cli::{load_program, load_proofs, load_spec};

const PETERSON_BUDGET: Duration = Duration::from_secs(60);
const SWEEP_PROGRAMS: usize = 50;
const MAX_SWEEP_DEPTH: usize = 8;
const FUZZ_MODELS: usize = 100;
const MIN_LIBRARY: usize = 10;
const EQUIVALENCE_FORMULAS: usize = 1000;
const HISTORY_DEPTH: usize = 6;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn peterson(victim: i64) -> Program {
    load_program(&corpus("peterson.prog"), &[format!("victim={victim}")]).unwrap()
}

fn peterson_spec() -> SpecFile {
    load_spec(&corpus("peterson.spec")).unwrap()
}

fn run_only(p: &Program, spec: &SpecFile, names: &[&str]) -> RunReport {
    let opts = RunOptions {
        only: Some(names.iter().map(|s| s.to_string()).collect()),
        ..RunOptions::default()
    };
    run_spec(p, spec, &opts).unwrap()
}

fn f(s: &str) -> Formula {
    parse_formula(s).unwrap()
}

/// A failing result's replay evaluates to false through `trace`.
fn replays(p: &Program, spec: &SpecFile, r: &Replay) -> bool {
    let cons = ptel_cli::run::constraint(p, spec, r.constraint.as_deref()).unwrap();
    let formula = spec.resolve(&f(&r.formula)).unwrap();
    let t = trace(p, &r.labels, Some(r.index), &formula, Some(r.depth), cons.as_ref(), DEFAULT_NODE_CAP).unwrap();
    t.verdict == Tri::False
}

fn sweep_models(seed: u64) -> Vec<(Program, usize)> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..SWEEP_PROGRAMS)
        .map(|_| {
            let (_, p) = random_program(&mut rng, ProgramShape::default());
            let depth = rng.gen_range(1..=MAX_SWEEP_DEPTH);
            (p, depth)
        })
        .collect()
}

type Outcome = Result<String, String>;

fn pick(s: &FormulaSampler, rng: &mut StdRng, frag: Fragment, size: std::ops::Range<usize>) -> Formula {
    let n = rng.gen_range(size);
    s.sample(rng, frag, n)
}

fn mutual_exclusion() -> Outcome {
    let spec = peterson_spec();
    let mut notes = Vec::new();
    for victim in [0, 1] {
        let p = peterson(victim);
        let start = Instant::now();
        let r = run_only(&p, &spec, &["mutex-states", "mutex"]);
        let took = start.elapsed();
        let graph = r.get("mutex-states").unwrap();
        let bounded = r.get("mutex").unwrap();
        if !graph.holds || !bounded.holds {
            return Err(format!("victim={victim}: {}", serde_json::to_string(&r.results).unwrap()));
        }
        let audit = serde_json::to_value(&bounded.report).unwrap()["audit"].clone();
        if audit["depth"] != 16 || audit["stable"] != true {
            return Err(format!("victim={victim}: audit {audit}"));
        }
        if took > PETERSON_BUDGET {
            return Err(format!("victim={victim}: took {took:?}"));
        }
        notes.push(format!("victim={victim} in {:.2}s", took.as_secs_f64()));
    }
    Ok(format!("graph and D=14 (audit D=16) hold; {}", notes.join(", ")))
}

fn entry_knowledge() -> Outcome {
    let spec = peterson_spec();
    let p = peterson(0);
    let code = Constraint::new(&p, spec.def("Code").unwrap()).unwrap();
    let free = TransitionGraph::reachable(&p, None, DEFAULT_NODE_CAP).unwrap();
    let constrained = TransitionGraph::reachable(&p, Some(&code), DEFAULT_NODE_CAP).unwrap();
    if free.states != constrained.states || free.edges != constrained.edges {
        return Err("the code-derived constraint changed the reachable graph".into());
    }
    for victim in [0, 1] {
        let r = run_only(&peterson(victim), &spec, &["entry-knowledge-0", "entry-knowledge-1"]);
        if !r.ok() {
            return Err(format!("victim={victim}: {}", serde_json::to_string(&r.results).unwrap()));
        }
    }
    Ok("both threads at D=12 under the code constraint, stable at D=14, both victim initials".into())
}

fn epistemic_corollary() -> Outcome {
    let spec = peterson_spec();
    for victim in [0, 1] {
        let r = run_only(&peterson(victim), &spec, &["knows-exclusion-0", "knows-exclusion-1"]);
        if !r.ok() {
            return Err(format!("victim={victim}: {}", serde_json::to_string(&r.results).unwrap()));
        }
    }
    Ok("H(InCS_i -> K_i !InCS_j) at D=12, stable at D=14".into())
}

fn rg_pipeline() -> Outcome {
    let spec = peterson_spec();
    let p = peterson(0);
    let names = [
        "own-flag-0",
        "own-flag-1",
        "own-victim-0",
        "own-victim-1",
        "victim-frame",
        "compat T0",
        "compat T1",
        "invariant Inductive",
        "parallel Inductive",
    ];
    let r = run_only(&p, &spec, &names);
    if !r.ok() {
        return Err(serde_json::to_string(&r.results).unwrap());
    }
    // the flag part of compatibility on its own: G_j^flag entails R_i^flag
    let g = TransitionGraph::reachable(&p, None, DEFAULT_NODE_CAP).unwrap();
    for (i, j, x) in [(0, 1, "flag0"), (1, 0, "flag1")] {
        let gj = StepSpec::new(&p, Scope::OnSteps(j), f(&format!("{x} = Y {x}"))).unwrap();
        let ri = StepSpec::new(&p, Scope::OnEnvSteps(i), f(&format!("{x} = Y {x}"))).unwrap();
        if !entails_on_edges(&p, &g, &[&gj], &ri).holds {
            return Err(format!("G_{j}^flag does not entail R_{i}^flag"));
        }
    }
    // the parallel conclusion agrees with direct preservation
    let inv = spec.def("Inductive").unwrap();
    let direct = invariant_by_preservation(&p, &g, inv).unwrap();
    if !direct.premises[1].holds {
        return Err("Inductive is not preserved".into());
    }

    let mutants = [
        ("no_victim_write", vec!["mutex-states", "mutex"]),
        ("flag_cleared_early", vec!["mutex-states", "mutex"]),
        ("other_flag_write", vec!["compat T1"]),
    ];
    for (m, designated) in mutants {
        let mp = load_program(&corpus(&format!("mutants/{m}.prog")), &[]).unwrap();
        let ms = load_spec(&corpus(&format!("mutants/{m}.spec"))).unwrap();
        let report = run_spec(&mp, &ms, &RunOptions::default()).unwrap();
        for name in designated {
            let d = report.get(name).ok_or(format!("{m}: no directive {name}"))?;
            if d.holds {
                return Err(format!("{m}: {name} unexpectedly holds"));
            }
            let rep = d.replay.as_ref().ok_or(format!("{m}: {name} has no witness"))?;
            if !replays(&mp, &ms, rep) {
                return Err(format!("{m}: {name} witness does not replay"));
            }
        }
    }
    Ok(format!("{} directives hold; three mutants fail with replayable witnesses", names.len()))
}

fn lemma_suite() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut points = 0usize;
    let mut lemma5_premises = 0usize;
    for (k, (p, depth)) in sweep_models(1).into_iter().enumerate() {
        let ps = PointSet::explore(&p, depth, None, DEFAULT_NODE_CAP).unwrap();
        let g = TransitionGraph::reachable(&p, None, DEFAULT_NODE_CAP).unwrap();
        let mut ev = Evaluator::new(&p, &ps);
        let sampler = FormulaSampler::new(&p);
        for t in 0..p.thread_count() {
            let a = p.thread_name(t);
            for _ in 0..3 {
                let phi = pick(&sampler, &mut rng, Fragment::State, 1..5);
                let psi = pick(&sampler, &mut rng, Fragment::State, 1..5);
                let st = |x: &Formula| Formula::stable(a, x.clone());
                let kphi = Formula::knows(a, phi.clone());
                let laws = [
                    (
                        "closure",
                        Formula::implies(
                            Formula::and(st(&phi), st(&psi)),
                            Formula::and(
                                st(&Formula::and(phi.clone(), psi.clone())),
                                st(&Formula::or(phi.clone(), psi.clone())),
                            ),
                        ),
                    ),
                    (
                        "stability lifting",
                        Formula::implies(Formula::and(st(&phi), Formula::last_a(a, phi.clone())), phi.clone()),
                    ),
                    (
                        "knowledge persistence",
                        Formula::implies(Formula::last_a(a, kphi.clone()), kphi.clone()),
                    ),
                    (
                        "epistemic lifting",
                        Formula::implies(Formula::and(st(&phi), Formula::last_a(a, kphi.clone())), phi.clone()),
                    ),
                ];
                for (name, law) in laws {
                    let core = expand_derived(&law, &p).unwrap();
                    let sw = ev.sweep(&core).unwrap();
                    points += ps.position_count();
                    if sw.false_count + sw.unknown_count > 0 {
                        let (n, s) = sw.first_false.or(sw.first_unknown).unwrap();
                        return Err(format!("model {k}: {name} fails for {law} at {:?}", ps.point(n, s)));
                    }
                }
            }
        }
        for _ in 0..4 {
            let inv = pick(&sampler, &mut rng, Fragment::State, 1..4);
            let r = invariant_by_preservation(&p, &g, &inv).unwrap();
            if r.holds {
                lemma5_premises += 1;
                let h = check_valid_bounded(&p, &Formula::always(inv.clone()), depth, None, DEFAULT_NODE_CAP).unwrap();
                if !h.holds() {
                    return Err(format!("model {k}: {inv} is preserved but H fails at {:?}", h.witness));
                }
            }
            let all = check_step_spec(&p, &g, &preservation_spec(&p, Scope::AllSteps, &inv).unwrap()).holds;
            let parts = pres_by_thread(&p, &g, &inv).unwrap().iter().all(|r| r.holds);
            if all != parts {
                return Err(format!("model {k}: actor partition differs for {inv}"));
            }
        }
    }
    if lemma5_premises == 0 {
        return Err("no sampled invariant met the preservation premise".into());
    }
    Ok(format!(
        "{SWEEP_PROGRAMS} programs, {points} point evaluations, {lemma5_premises} preserved invariants, 0 violations"
    ))
}

fn s5_sweep() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x55);
    let (mut points, mut indeterminate) = (0usize, 0usize);
    for (m, (p, depth)) in sweep_models(1).into_iter().enumerate() {
        let ps = PointSet::explore(&p, depth, None, DEFAULT_NODE_CAP).unwrap();
        let mut ev = Evaluator::new(&p, &ps);
        let sampler = FormulaSampler::new(&p);
        for t in 0..p.thread_count() {
            let a = p.thread_name(t);
            let phi = pick(&sampler, &mut rng, Fragment::Epistemic, 1..6);
            let k = Formula::knows(a, phi.clone());
            for (name, law) in [
                ("T", Formula::implies(k.clone(), phi.clone())),
                ("4", Formula::implies(k.clone(), Formula::knows(a, k.clone()))),
                ("5", Formula::implies(Formula::not(k.clone()), Formula::knows(a, Formula::not(k.clone())))),
            ] {
                let sw = ev.sweep(&expand_derived(&law, &p).unwrap()).unwrap();
                points += ps.position_count();
                indeterminate += sw.unknown_count;
                if let Some((n, s)) = sw.first_false {
                    return Err(format!("model {m}: {name} fails for {law} at {:?}", ps.point(n, s)));
                }
            }
        }
    }
    Ok(format!(
        "{points} point evaluations, 0 false ({indeterminate} frontier-indeterminate, from active)"
    ))
}

fn proof_kernel() -> Outcome {
    let lib = load_proofs(&corpus("proofs/library.proof")).unwrap();
    if lib.len() < MIN_LIBRARY {
        return Err(format!("library has {} derivations", lib.len()));
    }
    for d in &lib {
        check_derivation(d).map_err(|e| format!("{}: {e}", d.conclusion))?;
    }
    let rules: std::collections::BTreeSet<_> = lib.iter().flat_map(|d| d.rules_used()).collect();
    if rules.len() != ptel::proof::Rule::ALL.len() {
        return Err(format!("library covers {} of {} rules", rules.len(), ptel::proof::Rule::ALL.len()));
    }
    let cfg = FuzzConfig {
        models: FUZZ_MODELS,
        seed: 7,
        ..FuzzConfig::default()
    };
    let fuzz = soundness_fuzz(&lib, &cfg);
    if !fuzz.violations.is_empty() {
        return Err(format!("violation: {:?}", fuzz.violations[0]));
    }
    let bad = load_proofs(&corpus("seeded/prev_without_side_condition.proof")).unwrap();
    if check_derivation(&bad[0]).is_ok() {
        return Err("reference kernel accepts the unsound prev".into());
    }
    Kernel { seeded_prev_bug: true }
        .check(&bad[0])
        .map_err(|e| format!("seeded kernel rejects: {e}"))?;
    let caught = soundness_fuzz(&bad, &cfg);
    if caught.violations.is_empty() || caught.violations.iter().any(|v| v.witness.index != 0) {
        return Err("seeded bug not caught at i=0".into());
    }
    Ok(format!(
        "{} derivations, {} rules, {} models / {} sequents clean; seeded bug caught at i=0",
        lib.len(),
        rules.len(),
        fuzz.models,
        fuzz.sequents
    ))
}

fn appendix() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xa);
    let (mut nnf_checked, mut unfold_checked) = (0, 0);
    let models = sweep_models(2);
    while nnf_checked < EQUIVALENCE_FORMULAS || unfold_checked < EQUIVALENCE_FORMULAS {
        let (p, depth) = &models[rng.gen_range(0..models.len())];
        let ps = PointSet::explore(p, *depth, None, DEFAULT_NODE_CAP).unwrap();
        let mut ev = Evaluator::new(p, &ps);
        let sampler = FormulaSampler::new(p);
        for _ in 0..20 {
            let phi = expand_derived(&pick(&sampler, &mut rng, Fragment::Past, 1..10), p).unwrap();
            let want = ev.values(&phi).unwrap().to_vec();
            let n = expand_derived(&nnf(&phi).unwrap(), p).unwrap();
            if ev.values(&n).unwrap() != &want[..] {
                return Err(format!("nnf changes the meaning of {phi}"));
            }
            nnf_checked += 1;
            let a = pick(&sampler, &mut rng, Fragment::Past, 1..5);
            let b = pick(&sampler, &mut rng, Fragment::Past, 1..5);
            let s = expand_derived(&Formula::since(a, b), p).unwrap();
            let u = expand_derived(&unfold_since(&s).unwrap(), p).unwrap();
            let want = ev.values(&s).unwrap().to_vec();
            if ev.values(&u).unwrap() != &want[..] {
                return Err(format!("unfolding changes the meaning of {s}"));
            }
            unfold_checked += 1;
        }
    }
    let p = load_program(&corpus("stability_consequence.prog"), &[]).unwrap();
    let spec = load_spec(&corpus("stability_consequence.spec")).unwrap();
    let r = run_spec(&p, &spec, &RunOptions::default()).unwrap();
    let holds = |n: &str| r.get(n).unwrap().holds;
    if !holds("stable-x0") || !holds("stable-x0-bounded") || holds("stable-x01") || holds("stable-x01-bounded") {
        return Err(serde_json::to_string(&r.results).unwrap());
    }
    let w = serde_json::to_value(&r.get("stable-x01").unwrap().report).unwrap()["witness"].clone();
    let (src, dst) = (w["src"].as_str().unwrap(), w["dst"].as_str().unwrap());
    if w["actor"] != "E" || !src.starts_with("x=1 ") || !dst.starts_with("x=2 ") {
        return Err(format!("unexpected witness {w}"));
    }
    Ok(format!(
        "{nnf_checked} nnf and {unfold_checked} unfolding checks agree; stability fails on E: x=1 -> x=2"
    ))
}

fn histories() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x9);
    let mut extensions = 0usize;
    let mut models: Vec<(Program, usize)> = sweep_models(3).into_iter().map(|(p, d)| (p, d.min(6))).collect();
    models.push((peterson(0), HISTORY_DEPTH));
    for (p, depth) in &models {
        let ps = PointSet::explore(p, *depth, None, DEFAULT_NODE_CAP).unwrap();
        let mut ev = Evaluator::new(p, &ps);
        let sampler = FormulaSampler::new(p);
        let w = p.thread_count() + 1;
        for t in 0..p.thread_count() {
            if p.thread_count() == 1 {
                break;
            }
            let phi = pick(&sampler, &mut rng, Fragment::Epistemic, 1..5);
            let k = expand_derived(&Formula::knows(p.thread_name(t), phi), p).unwrap();
            let v = ev.values(&k).unwrap().to_vec();
            for _ in 0..20 {
                let start = rng.gen_range(0..ps.len());
                let mut n = start;
                while ps.node_depth(n) < *depth {
                    let env = loop {
                        let l = rng.gen_range(0..p.thread_count());
                        if l != t {
                            break l;
                        }
                    };
                    n = ps.child(n, env).unwrap();
                    extensions += 1;
                    if ps.class(n, t) != ps.class(start, t) || v[n * w] != v[start * w] {
                        return Err(format!("env steps changed {}'s view at {:?}", p.thread_name(t), ps.labels(n)));
                    }
                }
            }
        }
    }
    let p = peterson(0);
    let ps = PointSet::explore(&p, HISTORY_DEPTH, None, DEFAULT_NODE_CAP).unwrap();
    let hist: Vec<Vec<_>> = (0..ps.len())
        .map(|n| {
            let run = ps.run_prefix(n);
            (0..2).map(|t| observation_history(&run, ps.node_depth(n), t)).collect()
        })
        .collect();
    let mut pairs = 0usize;
    for a in 0..ps.len() {
        for b in 0..ps.len() {
            for t in 0..2 {
                pairs += 1;
                if (ps.class(a, t) == ps.class(b, t)) != (hist[a][t] == hist[b][t]) {
                    return Err(format!("class mismatch between {:?} and {:?}", ps.labels(a), ps.labels(b)));
                }
            }
        }
    }
    Ok(format!(
        "{extensions} env-step extensions leave history and knowledge unchanged; {pairs} Peterson D=6 pairs consistent"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("Peterson mutual exclusion", mutual_exclusion),
        ("entry-knowledge guarantee", entry_knowledge),
        ("epistemic corollary", epistemic_corollary),
        ("rely-guarantee pipeline", rg_pipeline),
        ("lemma suite", lemma_suite),
        ("S5 sweep", s5_sweep),
        ("proof kernel", proof_kernel),
        ("NNF, Since unfolding, stability counterexample", appendix),
        ("history invariants", histories),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("criterion {} PASS {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
