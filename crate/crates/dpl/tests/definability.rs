use dpl::definability::*;
use dpl::formula::{atom, int, rat, Rational};
use dpl::process::DynamicMarkovProcess;
use dpl::semantics::{Evaluator, Variant, DEFAULT_MODEL_CAP};
use proptest::prelude::*;
use rand::Rng;

fn exhaustive(id: PropertyId, n: usize, d: u32, variant: Variant) -> Summary {
    let cfg = ExperimentConfig { mode: Mode::Exhaustive, n_states: n, denom_bound: d, samples: 0, seed: 0, variant };
    run_experiment(id, &cfg).unwrap().1
}

#[test]
fn every_property_agrees_on_two_states() {
    for id in PropertyId::ALL {
        let s = exhaustive(id, 2, 2, Variant::Repaired);
        assert!(s.total > 0, "{}", id);
        assert_eq!(s.disagree, 0, "{}: {:?}", id, s.witnesses.first());
    }
}

#[test]
fn harsanyi_exhaustive_up_to_three_states() {
    for (n, d) in [(1, 4), (2, 4), (3, 2)] {
        let s = exhaustive(PropertyId::Harsanyi, n, d, Variant::Repaired);
        assert_eq!(s.disagree, 0, "n={}: {:?}", n, s.witnesses.first());
    }
}

#[test]
fn pure_exhaustive_up_to_three_states() {
    let s = exhaustive(PropertyId::PurelyProbabilistic, 3, 2, Variant::Repaired);
    assert_eq!(s.disagree, 0);
}

#[test]
fn per_world_recurrence_antecedent_is_too_weak() {
    let half = rat(1, 2);
    let (z, o) = (int(0), int(1));
    let p = DynamicMarkovProcess::new(
        vec![vec![z.clone(), o.clone(), z.clone()], vec![half.clone(), z.clone(), half], vec![z.clone(), z.clone(), o.clone()]],
        vec![0, 1, 2],
        Some(vec![z.clone(), z, o]),
    );
    let printed = correspondence_check(PropertyId::Recurrent, &p, Variant::AsPrinted).unwrap();
    let repaired = correspondence_check(PropertyId::Recurrent, &p, Variant::Repaired).unwrap();
    // recurrent, yet the per-world antecedent holds at 0 with p = {0}, which is transient
    assert!(printed.oracle_verdict);
    assert!(!printed.agree);
    assert_eq!(printed.witness.unwrap().world, 0);
    assert!(repaired.agree);
}

#[test]
fn printed_ergodicity_consequent_is_trivial() {
    // uniform measure with the identity map: {0} is invariant with measure 1/2
    let half = rat(1, 2);
    let mu = vec![half.clone(), half];
    let p = DynamicMarkovProcess::new(vec![mu.clone(), mu], vec![0, 1], None);
    let printed = correspondence_check(PropertyId::Ergodic, &p, Variant::AsPrinted).unwrap();
    assert!(!printed.oracle_verdict);
    assert!(printed.frame_verdict);
    assert!(correspondence_check(PropertyId::Ergodic, &p, Variant::Repaired).unwrap().agree);
}

#[test]
fn per_world_invariance_antecedent_is_too_strong() {
    // the uniform 3-cycle is ergodic, but p = {0, 1} has O p <-> p true at 0 only
    let third = rat(1, 3);
    let mu = vec![third.clone(), third.clone(), third];
    let p = DynamicMarkovProcess::new(vec![mu.clone(), mu.clone(), mu], vec![1, 2, 0], None);
    assert!(PropertyId::Ergodic.oracle(&p).unwrap());
    let per_world = dpl::formula::parse("(O p <-> p) -> (M[0] p | L[1] p)").unwrap();
    let v = Evaluator::new(&p).frame_valid(&per_world, DEFAULT_MODEL_CAP).unwrap();
    assert!(!v.is_valid());
    assert!(correspondence_check(PropertyId::Ergodic, &p, Variant::Repaired).unwrap().agree);
}

#[test]
fn literal_expansion_rejects_zero_caps() {
    assert!(expand_nstep_literal(2, &rat(1, 2), &atom("p"), 0, 4, &[], Variant::Repaired).is_err());
    assert!(expand_nstep_literal(3, &rat(1, 2), &atom("p"), 4, 4, &[], Variant::AsPrinted).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    // thresholds beyond the critical set never change the verdict
    #[test]
    fn measure_preserving_needs_only_critical_thresholds(seed in any::<u64>()) {
        let p = sample_class(PropertyId::MeasurePreserving, seed, seed % 7, 4, 4);
        let base = critical_params(PropertyId::MeasurePreserving, &p).unwrap();
        let ev = Evaluator::new(&p);
        let verdict = |params: &Params| {
            let fs = defining_formulas(PropertyId::MeasurePreserving, params, Variant::Repaired).unwrap();
            ev.frame_valid_all(&fs, DEFAULT_MODEL_CAP).unwrap().is_valid()
        };
        let mut rng = dpl::process::rng(seed);
        let mut more = base.clone();
        for _ in 0..4 {
            let d = rng.gen_range(1..=12);
            more.thresholds.push(rat(rng.gen_range(0..=d), d));
        }
        more.thresholds.sort();
        more.thresholds.dedup();
        let v = verdict(&base);
        prop_assert_eq!(v, p.measure_preserving());
        prop_assert_eq!(verdict(&more), v);
    }

    #[test]
    fn random_frames_agree(seed in any::<u64>(), which in 0usize..5) {
        let id = [PropertyId::MeasurePreserving, PropertyId::Ergodic, PropertyId::Mixing, PropertyId::Irreducible, PropertyId::Harsanyi][which];
        let p = sample_class(id, seed, seed % 11, 4, 4);
        let r = correspondence_check(id, &p, Variant::Repaired).unwrap();
        prop_assert!(r.agree, "{} {:?}", id, r.witness);
    }
}

#[test]
fn critical_thresholds_include_endpoints() {
    let p = sample_class(PropertyId::MeasurePreserving, 3, 0, 3, 4);
    let params = critical_params(PropertyId::MeasurePreserving, &p).unwrap();
    assert!(params.thresholds.contains(&Rational::from_integer(0.into())));
    assert!(params.thresholds.contains(&int(1)));
}
