mod common;

use common::*;
use dpl::formula::*;
use dpl::process::{random_process_with, StateSet};
use dpl::semantics::{critical_k, critical_l, replays, Evaluator, LiteralNStep, Variant, Verdict, DEFAULT_MODEL_CAP};
use dpl::stochastic::{n_step, NStep, ZeroStep};
use proptest::prelude::*;
use rand::Rng;

fn setup(seed: u64, init: bool) -> (dpl::process::DynamicMarkovProcess, dpl::process::Valuation, rand_chacha::ChaCha8Rng) {
    let mut rng = dpl::process::rng(seed);
    let n = rng.gen_range(1..=4);
    let p = random_process_with(&mut rng, n, 4, init);
    let val = random_valuation(&mut rng, n, &["p", "q"]);
    (p, val, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn boolean_and_next_clauses(seed in any::<u64>()) {
        let (p, val, mut rng) = setup(seed, false);
        let ev = Evaluator::new(&p);
        let a = random_formula(&mut rng, 3, &["p", "q"], Gen::default());
        let b = random_formula(&mut rng, 3, &["p", "q"], Gen::default());
        let ea = ev.extension(&a, &val).unwrap();
        let eb = ev.extension(&b, &val).unwrap();
        prop_assert_eq!(ev.extension(&neg(a.clone()), &val).unwrap(), ea.complement(p.n_states));
        prop_assert_eq!(ev.extension(&and2(a.clone(), b), &val).unwrap(), ea.inter(eb));
        prop_assert_eq!(ev.extension(&next(a), &val).unwrap(), p.preimage(ea));
    }

    #[test]
    fn l_clause_is_a_threshold_on_the_kernel(seed in any::<u64>()) {
        let (p, val, mut rng) = setup(seed, false);
        let ev = Evaluator::new(&p);
        let a = random_formula(&mut rng, 2, &["p", "q"], Gen::default());
        let r = random_threshold(&mut rng, 8);
        let ea = ev.extension(&a, &val).unwrap();
        let want = StateSet::from_states((0..p.n_states).filter(|&w| p.measure(w, ea) >= r));
        prop_assert_eq!(ev.extension(&l(r, a), &val).unwrap(), want);
    }

    #[test]
    fn archimedean_witness(seed in any::<u64>()) {
        prop_assert_eq!(archimedean_case(seed), Ok(()));
    }

    // L_r of an eventually constant conjunction is the intersection over its finite prefixes
    #[test]
    fn nat_family_finite_support(seed in any::<u64>()) {
        let (p, val, mut rng) = setup(seed, false);
        let ev = Evaluator::new(&p);
        let k = rng.gen_range(0..=3);
        let prefix: Vec<Formula> = (0..k).map(|_| random_formula(&mut rng, 2, &["p", "q"], Gen::default())).collect();
        let tail = random_formula(&mut rng, 2, &["p", "q"], Gen::default());
        let r = random_threshold(&mut rng, 8);
        let whole = l(r.clone(), Formula::BigAnd(Family::Nat { prefix: prefix.clone(), tail: Box::new(tail.clone()) }));
        let mut members = prefix.clone();
        members.push(tail);
        let mut acc = p.full();
        for j in 1..=members.len() {
            let part = l(r.clone(), Formula::BigAnd(Family::Finite(members[..j].to_vec())));
            acc = acc.inter(ev.extension(&part, &val).unwrap());
        }
        prop_assert_eq!(ev.extension(&whole, &val).unwrap(), acc);
    }

    #[test]
    fn nstep_is_a_threshold_on_the_power(seed in any::<u64>(), steps in 0u32..=4) {
        let (p, val, mut rng) = setup(seed, true);
        let ev = Evaluator::new(&p);
        let a = random_formula(&mut rng, 2, &["p", "q"], Gen::default());
        let r = random_threshold(&mut rng, 8);
        let ea = ev.extension(&a, &val).unwrap();
        let f = match steps {
            0 => init_l(r.clone(), a),
            1 => l(r.clone(), a),
            n => nstep_l(n, r.clone(), a),
        };
        let want = match n_step(&p, steps, ZeroStep::WithInit).unwrap() {
            NStep::Vector(pi) => {
                if dpl::process::dist_measure(&pi, ea) >= r { p.full() } else { StateSet::EMPTY }
            }
            NStep::Matrix(t) => {
                StateSet::from_states((0..p.n_states).filter(|&w| dpl::process::dist_measure(&t[w], ea) >= r))
            }
        };
        prop_assert_eq!(ev.extension(&f, &val).unwrap(), want);
    }

    #[test]
    fn counterexamples_replay(seed in any::<u64>()) {
        let (p, _, mut rng) = setup(seed, false);
        let f = random_formula(&mut rng, 3, &["p", "q"], Gen::default());
        let v = Evaluator::new(&p).frame_valid(&f, DEFAULT_MODEL_CAP).unwrap();
        if let Verdict::Counterexample { .. } = v {
            prop_assert!(replays(&p, &v));
        }
    }

    // The literal expansion with frame-critical caps equals the closed form.
    #[test]
    fn literal_expansion_with_critical_caps(seed in any::<u64>(), level in 2u32..=3) {
        let (p, _, _) = setup(seed, false);
        let ev = Evaluator::new(&p);
        let thresholds = ev.attained(level).unwrap();
        // frames whose common denominator does not fit the bin counter are out of reach
        let k = critical_k(&ev, level);
        prop_assume!(k.is_ok());
        let k = k.unwrap();
        let l_star = critical_l(&ev, &thresholds, level).unwrap().max(k + 1);
        let grid: Vec<Rational> = ev.attained(1).unwrap().into_iter().collect();
        let mut lit = LiteralNStep::new(&ev, Variant::Repaired, vec![l_star], vec![k], grid);
        for bits in 0..1u64 << p.n_states {
            for r in &thresholds {
                let e = StateSet(bits);
                prop_assert_eq!(lit.eval(level, r, e).unwrap(), ev.level_at_least(level, e, r).unwrap());
            }
        }
    }
}
