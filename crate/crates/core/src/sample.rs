//! Random programs and formulas for property sweeps and soundness fuzzing.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::formula::{Formula, ThreadId};
use crate::program::{parse_program, Program};

const THREADS: [&str; 3] = ["A", "B", "C"];
const VARS: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Clone, Copy)]
pub struct ProgramShape {
    pub max_threads: usize,
    pub max_vars: usize,
    /// Largest domain size; every variable ranges over `0..k-1`, `k >= 2`.
    pub max_domain: usize,
    pub max_locations: usize,
}

impl Default for ProgramShape {
    fn default() -> Self {
        ProgramShape {
            max_threads: 3,
            max_vars: 3,
            max_domain: 3,
            max_locations: 5,
        }
    }
}

/// Source text of a random well-formed program. Every thread has one local
/// `r` over the shared domain, so no step can leave a domain.
pub fn random_program_text<R: Rng>(rng: &mut R, shape: ProgramShape) -> String {
    let k = rng.gen_range(2..=shape.max_domain.max(2)) as i64;
    let nvars = rng.gen_range(1..=shape.max_vars.clamp(1, VARS.len()));
    let nthreads = rng.gen_range(1..=shape.max_threads.clamp(1, THREADS.len()));
    let mut out = String::new();
    for v in &VARS[..nvars] {
        out.push_str(&format!("shared {v} : 0..{} = {}\n", k - 1, rng.gen_range(0..k)));
    }
    for t in &THREADS[..nthreads] {
        out.push_str(&format!("thread {t} {{\n  local r : 0..{} = 0\n", k - 1));
        let nlocs = rng.gen_range(2..=shape.max_locations.max(2));
        let loc = |rng: &mut R| format!("L{}", rng.gen_range(0..nlocs));
        for i in 0..nlocs {
            let x = VARS[rng.gen_range(0..nvars)];
            let c = rng.gen_range(0..k);
            let instr = match rng.gen_range(0..11) {
                0..=2 => format!("write {x} := {c} goto {}", loc(rng)),
                3 => format!("write {x} := r goto {}", loc(rng)),
                4 | 5 => format!("read r := {x} goto {}", loc(rng)),
                6 | 7 => {
                    let op = ["=", "!="].choose(rng).unwrap();
                    format!("readbr {x} {op} {c} ? {} : {}", loc(rng), loc(rng))
                }
                8 => format!("let r := {c} goto {}", loc(rng)),
                9 => format!("br r == {c} ? {} : {}", loc(rng), loc(rng)),
                _ => "halt".to_string(),
            };
            out.push_str(&format!("  L{i}: {instr}\n"));
        }
        out.push_str("}\n");
    }
    out
}

pub fn random_program<R: Rng>(rng: &mut R, shape: ProgramShape) -> (String, Program) {
    let text = random_program_text(rng, shape);
    let p = parse_program(&text).expect("generated programs are well-formed");
    (text, p)
}

/// Random formulas over a program's vocabulary.
pub struct FormulaSampler {
    atoms: Vec<Formula>,
    threads: Vec<ThreadId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fragment {
    /// Atoms under Boolean connectives.
    State,
    /// Adds `Y`, `S`, `H`, `O`, `after`, `active`.
    Past,
    /// Adds `K`.
    Epistemic,
}

impl FormulaSampler {
    pub fn new(p: &Program) -> Self {
        let mut atoms = Vec::new();
        for d in &p.shared {
            for v in d.lo..=d.hi {
                atoms.push(Formula::var_eq(d.name.as_str(), v));
            }
        }
        for t in &p.threads {
            for l in &t.locations {
                atoms.push(Formula::at(t.id.clone(), l.as_str()));
            }
            for d in &t.locals {
                for v in d.lo..=d.hi {
                    atoms.push(Formula::var_eq(format!("{}.{}", t.id, d.name), v));
                }
            }
        }
        FormulaSampler {
            atoms,
            threads: p.threads.iter().map(|t| t.id.clone()).collect(),
        }
    }

    pub fn threads(&self) -> &[ThreadId] {
        &self.threads
    }

    fn leaf<R: Rng>(&self, rng: &mut R, frag: Fragment) -> Formula {
        let roll = rng.gen_range(0..10);
        if frag != Fragment::State && roll == 0 {
            let t = self.threads.choose(rng).unwrap().clone();
            return if rng.gen_bool(0.7) {
                Formula::after(t)
            } else {
                Formula::active(t)
            };
        }
        match roll {
            1 => Formula::Top,
            2 => Formula::Bottom,
            _ => self.atoms.choose(rng).unwrap().clone(),
        }
    }

    /// A formula with at most `size` operators and atoms.
    pub fn sample<R: Rng>(&self, rng: &mut R, frag: Fragment, size: usize) -> Formula {
        if size <= 1 {
            return self.leaf(rng, frag);
        }
        let ops = match frag {
            Fragment::State => 5,
            Fragment::Past => 10,
            Fragment::Epistemic => 11,
        };
        // Children share the remaining budget, each getting at least one.
        let split = |rng: &mut R| {
            let left = rng.gen_range(1..=(size - 1).saturating_sub(1).max(1));
            (left, (size - 1 - left).max(1))
        };
        match rng.gen_range(0..ops) {
            0 => Formula::not(self.sample(rng, frag, size - 1)),
            1 => {
                let (a, b) = split(rng);
                Formula::and(self.sample(rng, frag, a), self.sample(rng, frag, b))
            }
            2 => {
                let (a, b) = split(rng);
                Formula::or(self.sample(rng, frag, a), self.sample(rng, frag, b))
            }
            3 => {
                let (a, b) = split(rng);
                Formula::implies(self.sample(rng, frag, a), self.sample(rng, frag, b))
            }
            4 => {
                let (a, b) = split(rng);
                Formula::iff(self.sample(rng, frag, a), self.sample(rng, frag, b))
            }
            5 | 6 => Formula::prev(self.sample(rng, frag, size - 1)),
            7 => {
                let (a, b) = split(rng);
                Formula::since(self.sample(rng, frag, a), self.sample(rng, frag, b))
            }
            8 => Formula::always(self.sample(rng, frag, size - 1)),
            9 => Formula::sometime(self.sample(rng, frag, size - 1)),
            _ => {
                let t = self.threads.choose(rng).unwrap().clone();
                Formula::knows(t, self.sample(rng, frag, size - 1))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{expand_derived, is_extensional};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn programs_parse_and_respect_shape() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let (_, p) = random_program(&mut rng, ProgramShape::default());
            assert!((1..=3).contains(&p.thread_count()));
            assert!((1..=3).contains(&p.shared.len()));
            assert!(p.shared.iter().all(|d| d.hi - d.lo < 3));
        }
    }

    #[test]
    fn fragments() {
        let mut rng = StdRng::seed_from_u64(11);
        let (_, p) = random_program(&mut rng, ProgramShape::default());
        let s = FormulaSampler::new(&p);
        for size in 1..8 {
            let f = s.sample(&mut rng, Fragment::State, size);
            assert!(is_extensional(&f), "{f}");
            assert!(f.size() <= 2 * size, "{f}");
            let g = s.sample(&mut rng, Fragment::Past, size);
            assert!(!g.contains_knows());
            expand_derived(&g, &p).unwrap();
        }
    }
}
