//! Property suites over randomly generated valid systems.

use effint::energy::energy;
use effint::measure::{Precision, ScaleMeasure};
use effint::merge::tight_partition;
use effint::partition::{partition, RelationKind};
use effint::sample::{random_system, random_step, random_test_function};
use effint::subspace::{check_equality, check_subspace};
use effint::{Error, Window};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn generated_systems_are_valid_and_reflexive(seed in any::<u64>()) {
        let p = Precision::default();
        let s = random_system(&mut rng(seed));
        prop_assert!(s.validate(&p).verdict.is_true(), "{}", s);
        prop_assert!(check_subspace(&s, &s, &p).unwrap().verdict.is_true());
        prop_assert!(check_equality(&s, &s, &p).unwrap().verdict.is_true());
    }

    #[test]
    fn own_tight_partition_is_singletons(seed in any::<u64>()) {
        let s = random_system(&mut rng(seed));
        prop_assert!(tight_partition(&s).unwrap().all_singletons(), "{}", s);
    }

    #[test]
    fn partitions_refine(seed in any::<u64>()) {
        let s = random_system(&mut rng(seed));
        let trivial = ScaleMeasure::lebesgue(Window::full()).restrict_to_complement(&s.entries).unwrap();
        let tight = partition(&s.entries, &s.scale, RelationKind::Tight).unwrap();
        let fs = partition(&s.entries, &s.scale, RelationKind::FScale { trivial: &trivial }).unwrap();
        let loose = partition(&s.entries, &s.scale, RelationKind::Loose).unwrap();
        prop_assert!(tight.refines(&fs) && fs.refines(&loose), "{}", s);
    }

    #[test]
    fn subspace_relation_is_transitive(seed in any::<u64>()) {
        let p = Precision::default();
        let mut r = rng(seed);
        let a = random_system(&mut r);
        let b = random_step(&a, &mut r, &p).unwrap();
        let c = random_step(&b, &mut r, &p).unwrap();
        prop_assert!(b.validate(&p).verdict.is_true() && c.validate(&p).verdict.is_true());
        let ba = check_subspace(&b, &a, &p).unwrap().verdict;
        let cb = check_subspace(&c, &b, &p).unwrap().verdict;
        prop_assert!(ba.is_true() && cb.is_true(), "{} / {} / {}", a, b, c);
        prop_assert!(check_subspace(&c, &a, &p).unwrap().verdict.is_true());
        if check_subspace(&a, &b, &p).unwrap().verdict.is_true() {
            prop_assert!(check_equality(&a, &b, &p).unwrap().verdict.is_true());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    #[test]
    fn energy_agrees_on_subspaces(seed in any::<u64>()) {
        let p = Precision::default();
        let mut r = rng(seed);
        let parent = random_system(&mut r);
        let cand = random_step(&parent, &mut r, &p).unwrap();
        prop_assert!(check_subspace(&cand, &parent, &p).unwrap().verdict.is_true());
        let plain = random_test_function(&mut r);
        let (u, ec) = match energy(&cand, &plain, &p) {
            Ok(e) => (plain, e),
            Err(Error::NotAbsolutelyContinuous(_)) => {
                let u = plain.through(cand.scale.clone());
                let e = energy(&cand, &u, &p).unwrap();
                (u, e)
            }
            Err(e) => panic!("{e}"),
        };
        let ep = energy(&parent, &u, &p).unwrap();
        prop_assert!((ec.value - ep.value).abs() <= 1e-6 * ep.value.abs().max(1.0), "{} vs {} on {} / {}", ec.value, ep.value, cand, parent);
    }
}
