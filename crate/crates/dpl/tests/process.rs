use dpl::process::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn classification_is_stable_under_relabeling(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(1..=5);
        let p = match seed % 4 {
            0 => random_process_with(&mut rng, n, 4, false),
            1 => random_measure_preserving(&mut rng, n, 4, false),
            2 => random_ads(&mut rng, n, 4),
            _ => random_harsanyi(&mut rng, n, 4),
        };
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        prop_assert_eq!(p.permute(&perm).classify(), p.classify());
    }

    #[test]
    fn measure_preserving_formulations_agree(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(1..=5);
        let p = if seed % 2 == 0 { random_dps(&mut rng, n, 4) } else { random_measure_preserving(&mut rng, n, 4, false) };
        prop_assert_eq!(p.measure_preserving_exhaustive(), p.measure_preserving_singletons());
        if p.is_dps() {
            // μ(f⁻¹A) = μ(A) for all A
            let mu = &p.kernel[0];
            let direct = (0..1u64 << n).all(|b| dist_measure(mu, p.preimage(StateSet(b))) == dist_measure(mu, StateSet(b)));
            prop_assert_eq!(p.measure_preserving(), direct);
        }
    }

    #[test]
    fn pure_processes_preserve_measure(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(1..=5);
        let p = random_pure(&mut rng, n, 4);
        prop_assert!(p.is_pure() && p.measure_preserving());
    }

    #[test]
    fn preimage_orbit_matches_iterated_preimage(seed in any::<u64>(), bits in 0u64..32) {
        let mut rng = rng(seed);
        let n = 5;
        let p = random_process_with(&mut rng, n, 4, false);
        let a = StateSet(bits);
        let (prefix, cycle) = p.preimage_orbit(a);
        prop_assert!(!cycle.is_empty());
        for k in 0..prefix.len() + 2 * cycle.len() {
            let want = p.preimage_k(a, k);
            let got = if k < prefix.len() { prefix[k] } else { cycle[(k - prefix.len()) % cycle.len()] };
            prop_assert_eq!(got, want, "k = {}", k);
        }
    }

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(1..=5);
        let p = random_process_with(&mut rng, n, 6, seed % 2 == 0);
        let (q, _) = from_json(&to_json(&p, None)).unwrap();
        prop_assert_eq!(q, p);
    }
}
