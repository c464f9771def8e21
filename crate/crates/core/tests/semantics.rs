use ptel::eval::{check_valid_bounded, Evaluator, Tri};
use ptel::explorer::{PointSet, RunPrefix, TransitionGraph};
use ptel::formula::{expand_derived, parse_formula, Formula};
use ptel::program::{parse_program, Program};
use ptel::rg::{check_step_spec, Scope, StepSpec};
use ptel::sample::{random_program, FormulaSampler, Fragment, ProgramShape};
use ptel::step::Constraint;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn f(s: &str) -> Formula {
    parse_formula(s).unwrap()
}

fn models(seed: u64, n: usize) -> Vec<Program> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n).map(|_| random_program(&mut rng, ProgramShape::default()).1).collect()
}

/// Steps of other threads leave a thread's history, and so its knowledge,
/// where it was.
#[test]
fn env_steps_are_stuttering_for_knowledge() {
    let mut rng = StdRng::seed_from_u64(5);
    for p in models(1, 40) {
        let ps = PointSet::explore(&p, 5, None, usize::MAX).unwrap();
        let sampler = FormulaSampler::new(&p);
        let mut ev = Evaluator::new(&p, &ps);
        for t in 0..p.thread_count() {
            let phi = sampler.sample(&mut rng, Fragment::Past, 4);
            let k = expand_derived(&Formula::knows(p.thread_name(t), phi), &p).unwrap();
            let v = ev.values(&k).unwrap().to_vec();
            let w = ps.thread_count() + 1;
            for n in 1..ps.len() {
                let (par, l) = (ps.parent(n).unwrap(), ps.label(n).unwrap());
                if l != t {
                    assert_eq!(ps.class(n, t), ps.class(par, t));
                    assert_eq!(ps.history(n, t), ps.history(par, t));
                    assert_eq!(v[n * w], v[par * w]);
                }
            }
        }
    }
}

#[test]
fn frame_implies_stable() {
    for p in models(9, 60) {
        let g = TransitionGraph::reachable(&p, None, usize::MAX).unwrap();
        for t in 0..p.thread_count() {
            for d in &p.shared {
                let keep = Formula::conj((d.lo..=d.hi).map(|v| {
                    Formula::implies(Formula::prev(Formula::var_eq(d.name.as_str(), v)), Formula::var_eq(d.name.as_str(), v))
                }));
                let frame = StepSpec::new(&p, Scope::OnEnvSteps(t), keep).unwrap();
                if !check_step_spec(&p, &g, &frame).holds {
                    continue;
                }
                for v in d.lo..=d.hi {
                    let a = Formula::var_eq(d.name.as_str(), v);
                    let st = StepSpec::new(&p, Scope::OnEnvSteps(t), Formula::implies(Formula::prev(a.clone()), a)).unwrap();
                    assert!(check_step_spec(&p, &g, &st).holds);
                }
            }
        }
    }
}

/// A step spec holds on the graph iff its Always form holds at every point of
/// a deep enough bounded model.
#[test]
fn step_specs_agree_with_trace_semantics() {
    let mut rng = StdRng::seed_from_u64(17);
    let mut failures = 0;
    for p in models(3, 40) {
        let g = TransitionGraph::reachable(&p, None, usize::MAX).unwrap();
        let radius = (0..g.node_count()).map(|n| g.path_to(n).len()).max().unwrap();
        let ps = PointSet::explore(&p, radius + 1, None, usize::MAX).unwrap();
        let mut ev = Evaluator::new(&p, &ps);
        let sampler = FormulaSampler::new(&p);
        for _ in 0..5 {
            let body = Formula::implies(
                Formula::prev(sampler.sample(&mut rng, Fragment::State, 2)),
                sampler.sample(&mut rng, Fragment::State, 2),
            );
            let scope = match rng.gen_range(0..3) {
                0 => Scope::OnSteps(rng.gen_range(0..p.thread_count())),
                1 => Scope::OnEnvSteps(rng.gen_range(0..p.thread_count())),
                _ => Scope::AllSteps,
            };
            let spec = StepSpec::new(&p, scope, body).unwrap();
            let exact = check_step_spec(&p, &g, &spec);
            let trace = expand_derived(&spec.as_always(&p), &p).unwrap();
            let sw = ev.sweep(&trace).unwrap();
            assert_eq!(sw.false_count == 0, exact.holds, "{}", spec.describe(&p));
            if let Some(w) = &exact.witness {
                failures += 1;
                let labels = w.schedule(&p).unwrap();
                let run = RunPrefix::replay(&p, &labels).unwrap();
                let n = ps.node_of(&labels).unwrap();
                assert_eq!(ev.value_at(&trace, n, 0).unwrap(), Tri::False);
                assert_eq!(run.labels.len(), labels.len());
            }
        }
    }
    assert!(failures > 0);
}

#[test]
fn stability_is_not_closed_under_consequence() {
    let p = parse_program(
        "shared x : 0..2 = 1\nthread A {\n  idle: halt\n}\nthread E {\n  go: write x := 2 goto done\n  done: halt\n}\n",
    )
    .unwrap();
    let quiet = Constraint::new(&p, &f("H !after(A)")).unwrap();
    let g = TransitionGraph::reachable(&p, Some(&quiet), usize::MAX).unwrap();
    let env = |s: &str| StepSpec::new(&p, Scope::OnEnvSteps(0), f(s)).unwrap();
    assert!(check_step_spec(&p, &g, &env("Y x = 0 -> x = 0")).holds);
    let r = check_step_spec(&p, &g, &env("Y (x = 0 | x = 1) -> (x = 0 | x = 1)"));
    assert!(!r.holds);
    let w = r.witness.unwrap();
    assert_eq!(w.actor, "E");
    assert!(w.src.contains("x=1") && w.dst.contains("x=2"), "{} -> {}", w.src, w.dst);

    let phi = check_valid_bounded(&p, &f("stable(A, x = 0)"), 4, Some(&quiet), usize::MAX).unwrap();
    assert!(phi.holds());
    let psi = check_valid_bounded(&p, &f("stable(A, x = 0 | x = 1)"), 4, Some(&quiet), usize::MAX).unwrap();
    assert!(!psi.holds());
    assert_eq!(psi.witness.unwrap().labels, vec!["E".to_string()]);
}
