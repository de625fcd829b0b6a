//! Property-based invariants.

use proptest::prelude::*;

use sprep::exactnum::{Cyc, ModEmbedding, Rat};
use sprep::repbuild::Tau;
use sprep::ringkit::{charpoly, PrimePower};
use sprep::sympcore::{ad, generators, trace_form, MatZq};

const ORDER: u32 = 72;

fn cyc() -> impl Strategy<Value = Cyc> {
    prop::collection::vec((0u32..ORDER, -4i64..5, 1i64..4), 0..6)
        .prop_map(|t| Cyc::from_terms(ORDER, t.into_iter().map(|(e, a, b)| (e, Rat::new(a, b)))))
}

fn instance() -> impl Strategy<Value = (usize, PrimePower)> {
    prop_oneof![
        Just((1usize, PrimePower::new(3, 3).unwrap())),
        Just((1, PrimePower::new(5, 2).unwrap())),
        Just((2, PrimePower::new(3, 2).unwrap())),
        Just((2, PrimePower::new(7, 1).unwrap())),
    ]
}

fn matrix(d: usize, pp: PrimePower) -> impl Strategy<Value = MatZq> {
    prop::collection::vec(0..pp.q() as i64, d * d)
        .prop_map(move |v| MatZq::from_fn(d, pp, |i, j| v[i * d + j]))
}

fn word(n: usize, pp: PrimePower) -> impl Strategy<Value = MatZq> {
    let count = generators(n, pp).len();
    prop::collection::vec((0..count, 1..pp.q()), 1..12).prop_map(move |w| {
        let gens = generators(n, pp);
        w.into_iter().fold(MatZq::identity(2 * n, pp), |acc, (i, k)| acc.mul(&gens[i].mat().pow(k)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cyc_ring_axioms(a in cyc(), b in cyc(), c in cyc()) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a - &a, Cyc::zero(ORDER));
        prop_assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
    }

    #[test]
    fn cyc_export_round_trip(a in cyc()) {
        let s = a.to_exponent_list();
        prop_assert_eq!(Cyc::parse_exponent_list(ORDER, &s).unwrap(), a);
    }

    #[test]
    fn embedding_is_multiplicative(a in cyc(), b in cyc()) {
        let e = ModEmbedding::new(ORDER);
        prop_assert_eq!(e.embed(&(&a * &b)), e.mul(e.embed(&a), e.embed(&b)));
        prop_assert_eq!(e.embed_conj(&a), e.embed(&a.conj()));
    }

    #[test]
    fn cayley_hamilton((n, pp) in instance(), seed in any::<u64>()) {
        let d = 2 * n;
        let x = MatZq::from_fn(d, pp, |i, j| ((seed >> ((i * d + j) % 60)) % pp.q()) as i64 + (i * 7 + j) as i64);
        prop_assert!(charpoly(&x).eval_matrix(&x).is_zero());
    }

    #[test]
    fn charpoly_and_trace_form_are_conjugation_invariant(
        (x, y, g) in instance().prop_flat_map(|(n, pp)| (matrix(2 * n, pp), matrix(2 * n, pp), word(n, pp)))
    ) {
        prop_assert!(g.is_symplectic());
        prop_assert_eq!(charpoly(&ad(&g, &x)), charpoly(&x));
        prop_assert_eq!(trace_form(&ad(&g, &x), &ad(&g, &y)), trace_form(&x, &y));
    }

    #[test]
    fn tau_is_additive(a in 0u64..729, b in 0u64..729, twist in prop::sample::select(vec![1u64, 2, 4, 5, 7, 8])) {
        let t = Tau::twisted(twist);
        prop_assert_eq!(t.eval(a + b, 3, 3, 216), &t.eval(a, 3, 3, 216) * &t.eval(b, 3, 3, 216));
        prop_assert_eq!(t.eval(a, 3, 3, 216), Tau::standard().eval(a * twist, 3, 3, 216));
    }
}
