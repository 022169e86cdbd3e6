//! Randomised invariants. Every case is driven by a seed so that failures
//! shrink to a reproducible generator state.

use proptest::prelude::*;

use corrlab::bicat::{find_iso, gamma_multiplicativity, gamma_of_hom};
use corrlab::extension::k0::{k0_of_corr, K0Functor, K0Nerve};
use corrlab::extension::Engine;
use corrlab::hilbert::tensor;
use corrlab::nerve::{fill_inner_horn, HornSpec};
use corrlab::random::{self, Limits};
use corrlab::serial;
use corrlab::subdivision::{enumerate_csd, enumerate_sd};

const SMALL: Limits = Limits {
    max_blocks: 2,
    max_size: 3,
};
const TINY: Limits = Limits {
    max_blocks: 2,
    max_size: 2,
};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn hom_json_round_trip(seed in any::<u64>(), unital in any::<bool>()) {
        let mut r = random::rng(seed);
        let a = random::random_algebra(&mut r, SMALL);
        let phi = random::random_hom_from(&mut r, &a, SMALL, unital);
        let text = serde_json::to_string(&serial::hom_to_json(&phi)).unwrap();
        let back: serial::StarHomJson = serial::parse_as(&text, "star_hom").unwrap();
        let psi = serial::hom_from_json(&back, "$").unwrap();
        prop_assert!(phi.dist(&psi) < 1e-12);
        prop_assert_eq!(phi.mult_matrix(), psi.mult_matrix());
    }

    #[test]
    fn corr_json_round_trip(seed in any::<u64>()) {
        let mut r = random::rng(seed);
        let a = random::random_algebra(&mut r, SMALL);
        let e = random::random_corr(&mut r, &a, SMALL).unwrap();
        let text = serde_json::to_string(&serial::corr_to_json(&e)).unwrap();
        let doc = serial::parse_document(&text).unwrap();
        prop_assert_eq!(doc.kind(), "correspondence");
        let back: serial::CorrJson = serial::parse_as(&text, "correspondence").unwrap();
        prop_assert!(e.dist(&serial::corr_from_json(&back, "$").unwrap()) < 1e-12);
    }

    #[test]
    fn simplex_json_round_trip(seed in any::<u64>(), n in 0usize..=3, gauged in any::<bool>()) {
        let mut r = random::rng(seed);
        let s = random::random_simplex(&mut r, n, if n == 3 { TINY } else { SMALL }, gauged).unwrap();
        let text = serde_json::to_string(&serial::simplex_to_json(&s)).unwrap();
        let back: serial::SimplexJson = serial::parse_as(&text, "ncorr_simplex").unwrap();
        prop_assert!(s.dist(&serial::simplex_from_json(&back, "$").unwrap()) < 1e-12);
    }

    #[test]
    fn gamma_is_multiplicative_up_to_iso(seed in any::<u64>(), unital in any::<bool>()) {
        let mut r = random::rng(seed);
        let chain = random::random_chain(&mut r, 2, SMALL, unital);
        let u = gamma_multiplicativity(&chain[0], &chain[1]).unwrap();
        prop_assert!(u.residuals().max() < 1e-9);
        // an independent search finds an isomorphism between the same two objects
        let t = tensor(&gamma_of_hom(&chain[0]).unwrap().corr, &gamma_of_hom(&chain[1]).unwrap().corr).unwrap();
        let g = gamma_of_hom(&chain[1].compose(&chain[0]).unwrap()).unwrap();
        prop_assert!(find_iso(&t.corr, &g.corr).is_some());
    }

    #[test]
    fn k0_is_invariant_under_twisting(seed in any::<u64>()) {
        let mut r = random::rng(seed);
        let a = random::random_algebra(&mut r, SMALL);
        let e = random::random_corr(&mut r, &a, SMALL).unwrap();
        let (f, _) = random::twist_corr(&mut r, &e).unwrap();
        prop_assert_eq!(k0_of_corr(&e), k0_of_corr(&f));
    }

    #[test]
    fn faces_of_valid_simplices_are_valid(seed in any::<u64>(), gauged in any::<bool>()) {
        let mut r = random::rng(seed);
        let s = random::random_simplex(&mut r, 3, TINY, gauged).unwrap();
        for i in 0..=3 {
            let f = s.face(i).unwrap();
            prop_assert!(f.pentagon_report().is_ok());
            prop_assert!(f.degeneracy(0).unwrap().face(0).unwrap().dist(&f) < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn inner_horn_fills_agree_up_to_iso(seed in any::<u64>(), gauged in any::<bool>()) {
        let mut r = random::rng(seed);
        let s = random::random_simplex(&mut r, 2, SMALL, gauged).unwrap();
        let filled = fill_inner_horn(&HornSpec::of_simplex(&s, 1).unwrap()).unwrap();
        // the missing edge is only determined up to isomorphism
        prop_assert!(filled.face(0).unwrap().dist(&s.face(0).unwrap()) < 1e-12);
        prop_assert!(filled.face(2).unwrap().dist(&s.face(2).unwrap()) < 1e-12);
        prop_assert!(find_iso(filled.corr(0, 2), s.corr(0, 2)).is_some());
        prop_assert!(filled.pentagon_report().is_ok());
    }

    #[test]
    fn k0_extension_of_an_edge_is_k0_of_the_bimodule(seed in any::<u64>(), guided in any::<bool>()) {
        let mut r = random::rng(seed);
        let s = random::random_simplex(&mut r, 1, SMALL, true).unwrap();
        let mut eng = Engine::with_functor(&K0Nerve, &K0Functor, guided);
        let v = eng.bar_f(&s, None).unwrap();
        prop_assert_eq!(v.map(0, 1), &k0_of_corr(s.corr(0, 1)));
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn augmented_chain_identities(n in 0usize..=3, l in 0usize..=3, pick in any::<prop::sample::Index>()) {
        let chains = enumerate_csd(n, l).unwrap();
        let c = pick.get(&chains);
        for j in 0..=l {
            let s = c.degeneracy(j).unwrap();
            prop_assert_eq!(&s.face(j).unwrap(), c);
            prop_assert_eq!(&s.face(j + 1).unwrap(), c);
        }
        if l >= 2 {
            for i in 0..=l {
                for j in i + 1..=l {
                    prop_assert_eq!(
                        c.face(j).unwrap().face(i).unwrap(),
                        c.face(i).unwrap().face(j - 1).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn subset_chains_faces_stay_inside(n in 0usize..=3, l in 1usize..=3, pick in any::<prop::sample::Index>()) {
        let chains = enumerate_sd(n, l).unwrap();
        let below = enumerate_sd(n, l - 1).unwrap();
        let c = pick.get(&chains);
        for j in 0..=l {
            prop_assert!(below.contains(&c.face(j).unwrap()));
        }
    }
}
