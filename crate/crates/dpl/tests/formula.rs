mod common;

use common::*;
use dpl::formula::*;
use dpl::semantics::Evaluator;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let mut rng = dpl::process::rng(seed);
        let g = Gen { init: true, nstep: true, families: true, lim: true };
        let f = random_formula(&mut rng, 4, &["p", "q", "r1"], g);
        let text = print(&f);
        prop_assert_eq!(parse(&text).map_err(|e| e.to_string()), Ok(f), "{}", text);
    }

    #[test]
    fn formal_negation_complements(seed in any::<u64>()) {
        let mut rng = dpl::process::rng(seed);
        let n = 1 + (seed % 4) as usize;
        let p = dpl::process::random_process_with(&mut rng, n, 4, false);
        let atoms = ["p", "q"];
        let val = random_valuation(&mut rng, n, &atoms);
        let g = Gen { families: true, ..Gen::default() };
        let f = random_formula(&mut rng, 3, &atoms, g);
        let ev = Evaluator::new(&p);
        let pos = ev.extension(&f, &val).unwrap();
        let negf = formal_negation(&f).unwrap();
        prop_assert_eq!(ev.extension(&negf, &val).unwrap(), pos.complement(n), "{}", print(&f));
    }

    #[test]
    fn desugaring(a in 0i64..=8, b in 1i64..=8, c in 0i64..=8) {
        prop_assume!(a <= b && c <= b);
        let r = rat(a, b);
        let f = parse(&format!("M[{}/{}] p", a, b)).unwrap();
        prop_assert_eq!(f, l(int(1) - &r, neg(atom("p"))));
        prop_assert_eq!(l_chain(&[r.clone().into(), rat(c, b).into()], atom("p")), l(r, l(rat(c, b), atom("p"))));
    }
}

#[test]
fn metavariable_thresholds_round_trip() {
    for text in ["L[r - s] (p & !p)", "L[r + 1/4] p -> L[2*s] q", "O L[1/2] L[t] p"] {
        let f = parse(text).unwrap();
        assert_eq!(parse(&print(&f)).unwrap(), f);
    }
}
