//! Shared helpers for the integration tests.
#![allow(dead_code)]

use dpl::formula::{parse, print, rat, Affine, Rational};
use dpl::process::DynamicMarkovProcess;
use dpl::proofs::{self, check_lemma, Lemma, ProofFile, StepFile, System};
use rand::seq::SliceRandom;
use rand::Rng;
use std::cell::Cell;
use std::collections::BTreeMap;

pub fn corpus(name: &str) -> ProofFile {
    let path = format!("{}/corpus/{}", env!("CARGO_MANIFEST_DIR"), name);
    proofs::load(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

pub fn grid() -> Vec<Rational> {
    vec![rat(0, 1), rat(1, 4), rat(1, 3), rat(1, 2), rat(2, 3), rat(3, 4), rat(1, 1)]
}

pub fn frames(system: System, count: u64) -> Vec<DynamicMarkovProcess> {
    (0..count).map(|i| proofs::sample_frame(system, 1000 + i, 2 + (i % 2) as usize, 4)).collect()
}

const RULES: [&str; 7] = ["Axiom", "Assumption", "Theorem", "MP", "NecL1", "NecNext", "GArch"];

fn step_paths(steps: &[StepFile], prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    for (i, s) in steps.iter().enumerate() {
        prefix.push(i);
        out.push(prefix.clone());
        step_paths(&s.sub, prefix, out);
        prefix.pop();
    }
}

fn step_at<'a>(steps: &'a mut [StepFile], path: &[usize]) -> &'a mut StepFile {
    let s = &mut steps[path[0]];
    if path.len() == 1 {
        s
    } else {
        step_at(&mut s.sub, &path[1..])
    }
}

/// One random single-step mutation: a changed rule name, swapped or redirected
/// premises, or a perturbed threshold.
pub fn mutate<R: Rng>(rng: &mut R, lf: &proofs::LemmaFile) -> proofs::LemmaFile {
    let mut out = lf.clone();
    let mut paths = vec![];
    step_paths(&out.steps, &mut vec![], &mut paths);
    let path = paths.choose(rng).unwrap().clone();
    let ids: Vec<u32> = {
        let siblings = if path.len() == 1 { &out.steps } else { &step_at(&mut out.steps, &path[..path.len() - 1]).sub };
        siblings.iter().map(|s| s.id).collect()
    };
    let s = step_at(&mut out.steps, &path);
    match rng.gen_range(0..3) {
        0 => {
            let others: Vec<&str> = RULES.iter().copied().filter(|r| *r != s.rule).collect();
            s.rule = others.choose(rng).unwrap().to_string();
        }
        1 => {
            if s.premises.len() >= 2 {
                s.premises.swap(0, 1);
            } else if !s.premises.is_empty() {
                s.premises[0] = *ids.choose(rng).unwrap();
            } else {
                s.premises = vec![*ids.choose(rng).unwrap(), *ids.choose(rng).unwrap()];
            }
        }
        _ => {
            let f = parse(&s.formula).unwrap();
            let count = Cell::new(0usize);
            f.map_thresholds(&|t| {
                count.set(count.get() + 1);
                t.clone()
            });
            if count.get() == 0 {
                s.rule = "Axiom".into();
                s.axiom = Some(["FA2", "Mono", "M", "Id", "H1"].choose(rng).unwrap().to_string());
            } else {
                let target = rng.gen_range(0..count.get());
                let delta = Affine::constant(rat(rng.gen_range(-4..=4), 8));
                let seen = Cell::new(0usize);
                let g = f.map_thresholds(&|t| {
                    let i = seen.get();
                    seen.set(i + 1);
                    if i == target {
                        t.add(&delta)
                    } else {
                        t.clone()
                    }
                });
                s.formula = print(&g);
            }
        }
    }
    out
}

/// Check every lemma of the file in order, returning the library.
pub fn library(file: &ProofFile) -> BTreeMap<String, Lemma> {
    let (outcomes, lib) = proofs::check_file(file);
    for o in &outcomes {
        assert!(o.ok(), "{}", o.error.as_ref().unwrap());
    }
    lib
}

#[derive(Debug, Default)]
pub struct MutationStats {
    pub total: usize,
    pub rejected: usize,
    pub accepted_valid: usize,
    pub accepted_invalid: Vec<String>,
}

/// `per_lemma` mutations of each lemma, each checked against the library of
/// lemmas before it; accepted mutants are cross-checked on `frames` frames.
pub fn mutation_sweep<R: Rng>(rng: &mut R, file: &ProofFile, per_lemma: usize, frame_count: u64) -> MutationStats {
    let full = library(file);
    let mut stats = MutationStats::default();
    let grid = grid();
    let mut frame_cache: BTreeMap<System, Vec<DynamicMarkovProcess>> = BTreeMap::new();
    for (i, lf) in file.lemmas.iter().enumerate() {
        let lib: BTreeMap<String, Lemma> =
            file.lemmas[..i].iter().map(|l| (l.name.clone(), full[&l.name].clone())).collect();
        for _ in 0..per_lemma {
            let m = mutate(rng, lf);
            stats.total += 1;
            match check_lemma(&m, &lib) {
                Err(_) => stats.rejected += 1,
                Ok(lemma) => {
                    let fs = frame_cache.entry(lemma.system).or_insert_with(|| frames(lemma.system, frame_count));
                    match proofs::cross_check(&lemma, fs, &grid).unwrap() {
                        None => stats.accepted_valid += 1,
                        Some(why) => stats.accepted_invalid.push(format!("{}: {}", lf.name, why)),
                    }
                }
            }
        }
    }
    stats
}

/// Options for [`random_formula`].
#[derive(Clone, Copy, Default)]
pub struct Gen {
    pub init: bool,
    pub nstep: bool,
    pub families: bool,
    pub lim: bool,
}

pub fn random_threshold<R: Rng>(rng: &mut R, max_den: i64) -> Rational {
    let d = rng.gen_range(1..=max_den);
    rat(rng.gen_range(0..=d), d)
}

/// A random formula of depth at most `depth` over `atoms`.
pub fn random_formula<R: Rng>(rng: &mut R, depth: u32, atoms: &[&str], g: Gen) -> dpl::formula::Formula {
    use dpl::formula::*;
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.05) { top() } else { atom(atoms.choose(rng).unwrap()) };
    }
    let sub = |rng: &mut R| random_formula(rng, depth - 1, atoms, g);
    let mut kinds = vec![0, 1, 2, 3, 4];
    if g.init {
        kinds.push(5);
    }
    if g.nstep {
        kinds.push(6);
    }
    if g.families {
        kinds.extend([7, 8, 9]);
    }
    if g.lim {
        kinds.push(10);
    }
    match *kinds.choose(rng).unwrap() {
        0 => neg(sub(rng)),
        1 => and2(sub(rng), sub(rng)),
        2 => l(random_threshold(rng, 8), sub(rng)),
        3 => m(random_threshold(rng, 8), sub(rng)),
        4 => next(sub(rng)),
        5 => init_l(random_threshold(rng, 8), sub(rng)),
        6 => nstep_l(rng.gen_range(2..=3), random_threshold(rng, 8), sub(rng)),
        7 => {
            let k = rng.gen_range(0..=3);
            let fs = (0..k).map(|_| sub(rng)).collect();
            if rng.gen_bool(0.5) {
                Formula::BigAnd(Family::Finite(fs))
            } else {
                Formula::BigOr(Family::Finite(fs))
            }
        }
        8 => {
            let k = rng.gen_range(0..=2);
            let fam = Family::Nat { prefix: (0..k).map(|_| sub(rng)).collect(), tail: Box::new(sub(rng)) };
            if rng.gen_bool(0.5) {
                Formula::BigAnd(fam)
            } else {
                Formula::BigOr(fam)
            }
        }
        9 => {
            let fam = Family::Threshold {
                var: "c".into(),
                template: Box::new(l(Affine::var("c"), sub(rng))),
                bound: Affine::constant(random_threshold(rng, 4)),
                strict: rng.gen_bool(0.5),
            };
            if rng.gen_bool(0.5) {
                Formula::BigAnd(fam)
            } else {
                Formula::BigOr(fam)
            }
        }
        _ => {
            // Iter markers may not nest
            let inner = Gen { lim: false, ..g };
            let body = and2(iter(random_formula(rng, depth - 1, atoms, inner)), random_formula(rng, depth - 1, atoms, inner));
            if rng.gen_bool(0.5) {
                Formula::LimL(random_threshold(rng, 4).into(), Box::new(body))
            } else {
                Formula::LimM(random_threshold(rng, 4).into(), Box::new(body))
            }
        }
    }
}

pub fn random_valuation<R: Rng>(rng: &mut R, n: usize, atoms: &[&str]) -> dpl::process::Valuation {
    atoms.iter().map(|a| (a.to_string(), dpl::process::StateSet(rng.gen_range(0..1u64 << n)))).collect()
}

/// One case of the Archimedean step-function invariant: a random model,
/// formula, threshold chain and final threshold. For a world outside
/// `L_{chain r} φ` the midpoint between `r` and the largest attained value
/// below it is a witness `s < r` that keeps the world outside; and every
/// `s < r` on a grid gives a superset.
pub fn archimedean_case(seed: u64) -> Result<(), String> {
    use dpl::formula::{l_chain, Affine};
    use dpl::semantics::Evaluator;
    let mut rng = dpl::process::rng(seed);
    let n = rng.gen_range(1..=4);
    let p = dpl::process::random_process_with(&mut rng, n, 4, false);
    let atoms = ["p", "q"];
    let val = random_valuation(&mut rng, n, &atoms);
    let phi = random_formula(&mut rng, 2, &atoms, Gen::default());
    let chain: Vec<Affine> = (0..rng.gen_range(0..=2)).map(|_| random_threshold(&mut rng, 8).into()).collect();
    let r = random_threshold(&mut rng, 8);
    let ev = Evaluator::new(&p);
    let with = |t: &Rational| {
        let mut rs = chain.clone();
        rs.push(t.clone().into());
        ev.extension(&l_chain(&rs, phi.clone()), &val).map_err(|e| e.to_string())
    };
    let at_r = with(&r)?;
    let attained = ev.attained(1).map_err(|e| e.to_string())?;
    let below = attained.range(..r.clone()).next_back().cloned().unwrap_or_else(|| rat(0, 1));
    let s = (&below + &r) / rat(2, 1);
    for w in 0..n {
        if !at_r.contains(w) {
            if !(s < r) || with(&s)?.contains(w) {
                return Err(format!("seed {}: world {} has no witness below {} (s = {})", seed, w, r, s));
            }
        }
    }
    for d in 1..=8 {
        for a in 0..=d {
            let t = rat(a, d);
            if t < r && at_r.inter(with(&t)?) != at_r {
                return Err(format!("seed {}: not monotone between {} and {}", seed, t, r));
            }
        }
    }
    Ok(())
}
