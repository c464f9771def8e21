//! Semantic cross-check of derivations: every derived sequent must hold at
//! every point of sampled bounded models.

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use super::{Derivation, Sequent};
use crate::eval::{Evaluator, Tri, Witness};
use crate::explorer::PointSet;
use crate::formula::{expand_derived, Formula, ThreadId};
use crate::sample::{random_program, FormulaSampler, Fragment, ProgramShape};

#[derive(Debug, Clone, Copy)]
pub struct FuzzConfig {
    pub models: usize,
    pub seed: u64,
    pub max_depth: usize,
    /// Size bound for the formulas substituted for proposition letters.
    pub letter_size: usize,
    pub shape: ProgramShape,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            models: 100,
            seed: 0,
            max_depth: 8,
            letter_size: 4,
            shape: ProgramShape::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub model: usize,
    pub program: String,
    pub depth: usize,
    /// The derived sequent, then its instance in the sampled model.
    pub sequent: String,
    pub instance: String,
    pub witness: Witness,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FuzzReport {
    pub models: usize,
    pub sequents: usize,
    pub points_checked: usize,
    pub violations: Vec<Violation>,
}

/// Instantiate the letters and thread names of each derived sequent in
/// random models and look for a point where every hypothesis is true and
/// the goal is false. Indeterminate values never count as violations.
pub fn soundness_fuzz(ds: &[Derivation], cfg: &FuzzConfig) -> FuzzReport {
    let sequents: BTreeSet<&Sequent> = ds.iter().flat_map(|d| d.nodes()).map(|n| &n.conclusion).collect();
    let mut letters = BTreeSet::new();
    let mut names = BTreeSet::new();
    for s in &sequents {
        for f in s.hyps.iter().chain([&s.goal]) {
            letters.extend(f.props());
            names.extend(f.threads());
        }
    }
    let mut report = FuzzReport {
        models: cfg.models,
        sequents: sequents.len(),
        ..FuzzReport::default()
    };
    for m in 0..cfg.models {
        let mut rng = StdRng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(m as u64));
        let (text, p) = random_program(&mut rng, cfg.shape);
        let depth = rng.gen_range(1..=cfg.max_depth.max(1));
        let sampler = FormulaSampler::new(&p);
        let subst: BTreeMap<String, Formula> = letters
            .iter()
            .map(|l| {
                let frag = match rng.gen_range(0..10) {
                    0..=4 => Fragment::State,
                    5..=7 => Fragment::Past,
                    _ => Fragment::Epistemic,
                };
                let size = rng.gen_range(1..=cfg.letter_size.max(1));
                (l.clone(), sampler.sample(&mut rng, frag, size))
            })
            .collect();
        let rename: BTreeMap<ThreadId, ThreadId> = names
            .iter()
            .map(|n| (n.clone(), sampler.threads()[rng.gen_range(0..sampler.threads().len())].clone()))
            .collect();
        // Rename first: the letter instances already use the model's threads.
        let instantiate = |f: &Formula| -> Formula {
            f.rename_threads(&|t| rename.get(t).cloned().unwrap_or_else(|| t.clone()))
                .substitute(&|l| subst.get(l).cloned())
        };
        let ps = PointSet::explore(&p, depth, None, usize::MAX).expect("sampled models are small");
        let mut ev = Evaluator::new(&p, &ps);
        let w = ps.thread_count() + 1;
        for s in &sequents {
            let hyps: Vec<Formula> = s.hyps.iter().map(&instantiate).collect();
            let goal = instantiate(&s.goal);
            let core = |f: &Formula| expand_derived(f, &p).expect("instances use the model's vocabulary");
            let mut holds: Vec<bool> = vec![true; ps.len() * w];
            for h in &hyps {
                let v = ev.values(&core(h)).expect("instances evaluate");
                for (i, x) in v.iter().enumerate() {
                    holds[i] &= *x == Tri::True;
                }
            }
            let gv = ev.values(&core(&goal)).expect("instances evaluate");
            let bad = ps.positions().find(|&(n, sl)| {
                let i = n * w + sl;
                holds[i] && gv[i] == Tri::False
            });
            report.points_checked += ps.position_count();
            if let Some((n, sl)) = bad {
                let inst = Sequent::new(hyps, goal);
                report.violations.push(Violation {
                    model: m,
                    program: text.clone(),
                    depth,
                    sequent: s.to_string(),
                    instance: inst.to_string(),
                    witness: Witness::new(&p, &ps.point(n, sl)),
                });
            }
        }
    }
    report
}
