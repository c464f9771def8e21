use proptest::prelude::*;
use ptel::eval::Evaluator;
use ptel::explorer::PointSet;
use ptel::formula::{
    expand_derived, nnf, parse_formula, render_formula, unfold_since, Atom, DerivedMacro, Formula, NoDomains,
    ThreadId, VarDomains,
};
use ptel::sample::{random_program, FormulaSampler, Fragment, ProgramShape};
use rand::rngs::StdRng;
use rand::SeedableRng;

struct Doms;
impl VarDomains for Doms {
    fn domain(&self, var: &str) -> Option<(i64, i64)> {
        matches!(var, "x" | "y").then_some((0, 2))
    }
}

fn thread() -> impl Strategy<Value = ThreadId> {
    prop_oneof![Just(ThreadId::new("A")), Just(ThreadId::new("B"))]
}

fn var() -> impl Strategy<Value = String> {
    prop_oneof![Just("x".to_string()), Just("y".to_string())]
}

fn leaf() -> impl Strategy<Value = Formula> {
    prop_oneof![
        Just(Formula::Top),
        Just(Formula::Bottom),
        (var(), -2i64..3).prop_map(|(v, n)| Formula::var_eq(v, n)),
        var().prop_map(|var| Formula::Atom(Atom::VarEqPrevSelf { var })),
        (thread(), prop_oneof![Just("l0"), Just("cs")]).prop_map(|(t, l)| Formula::at(t, l)),
        prop_oneof![Just("p"), Just("q"), Just("InCS_0")].prop_map(Formula::prop),
        thread().prop_map(Formula::active),
        thread().prop_map(Formula::after),
        var().prop_map(|x| Formula::derived(DerivedMacro::Chg(x))),
        (thread(), var()).prop_map(|(t, x)| Formula::derived(DerivedMacro::Frame(t, x))),
        (thread(), var()).prop_map(|(t, x)| Formula::derived(DerivedMacro::WriteBy(t, x))),
        Just(Formula::init()),
    ]
}

/// Any formula, derived operators included.
fn formula() -> impl Strategy<Value = Formula> {
    leaf().prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::prev),
            inner.clone().prop_map(Formula::always),
            inner.clone().prop_map(Formula::sometime),
            (thread(), inner.clone()).prop_map(|(t, f)| Formula::knows(t, f)),
            (thread(), inner.clone()).prop_map(|(t, f)| Formula::last_a(t, f)),
            (thread(), inner.clone()).prop_map(|(t, f)| Formula::derived(DerivedMacro::PreA(t, f))),
            (thread(), inner.clone()).prop_map(|(t, f)| Formula::derived(DerivedMacro::Est(t, f))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::iff(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::since(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::NegSince(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Formula::derived(DerivedMacro::HappensBefore(a, b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::derived(DerivedMacro::LastW(a, b))),
        ]
    })
}

fn is_literal(f: &Formula) -> bool {
    match f {
        Formula::Top | Formula::Atom(_) | Formula::Prop(_) | Formula::Active(_) => true,
        Formula::Prev(a) => **a == Formula::Top,
        _ => false,
    }
}

fn negations_at_literals(f: &Formula) -> bool {
    let mut ok = true;
    f.visit(&mut |g| {
        if let Formula::Not(a) = g {
            ok &= is_literal(a);
        }
    });
    ok
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn render_parse_round_trip(f in formula()) {
        let text = render_formula(&f);
        prop_assert_eq!(parse_formula(&text).unwrap(), f.clone(), "{}", text);
        prop_assert_eq!(f.to_string(), text);
    }

    #[test]
    fn expansion_is_core_and_idempotent(f in formula()) {
        let once = expand_derived(&f, &Doms).unwrap();
        prop_assert!(once.is_core());
        prop_assert_eq!(expand_derived(&once, &NoDomains).unwrap(), once);
    }

    #[test]
    fn nnf_shape(f in formula()) {
        let core = expand_derived(&f, &Doms).unwrap();
        if !core.contains_knows() {
            let n = nnf(&core).unwrap();
            prop_assert!(negations_at_literals(&n), "{}", n);
        }
    }
}

/// Semantic agreement of NNF and one-step Since unfolding on random models.
#[test]
fn nnf_and_unfolding_preserve_meaning() {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut checked = 0;
    for _ in 0..60 {
        let (_, p) = random_program(&mut rng, ProgramShape::default());
        let ps = PointSet::explore(&p, 4, None, usize::MAX).unwrap();
        let mut ev = Evaluator::new(&p, &ps);
        let sampler = FormulaSampler::new(&p);
        for _ in 0..10 {
            let size = 1 + checked % 9;
            let f = expand_derived(&sampler.sample(&mut rng, Fragment::Past, size), &p).unwrap();
            let want = ev.values(&f).unwrap().to_vec();
            let n = expand_derived(&nnf(&f).unwrap(), &p).unwrap();
            assert_eq!(ev.values(&n).unwrap(), &want[..], "{f} vs {n}");
            let u = expand_derived(&unfold_since(&Formula::since(f.clone(), Formula::Top)).unwrap(), &p).unwrap();
            let s = ev.values(&Formula::since(f.clone(), Formula::Top)).unwrap().to_vec();
            assert_eq!(ev.values(&u).unwrap(), &s[..]);
            checked += 1;
        }
    }
    assert_eq!(checked, 600);
}
