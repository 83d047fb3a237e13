use proptest::prelude::*;
use relhyp_core::algebra::{ClassTag, Element, Group, Payload, Syllable};
use relhyp_core::parse_group_spec;

fn group() -> Group {
    Group::new(
        parse_group_spec(
            "name = laws\nfactor = cyclic order=6 peripheral=yes\nfactor = abelian rank=2 peripheral=yes\n\
             factor = free rank=2 peripheral=no\nfactor = cyclic order=2 peripheral=no",
        )
        .unwrap(),
    )
}

fn syllable() -> impl Strategy<Value = Syllable> {
    prop_oneof![
        (0u64..6).prop_map(|r| Syllable::new(0, Payload::Cyclic(r))),
        (-3i64..=3, -3i64..=3).prop_map(|(a, b)| Syllable::new(1, Payload::Abelian(vec![a, b]))),
        prop::collection::vec(prop_oneof![Just(1), Just(-1), Just(2), Just(-2)], 0..4)
            .prop_map(|w| Syllable::new(2, Payload::Free(w))),
        (0u64..2).prop_map(|r| Syllable::new(3, Payload::Cyclic(r))),
    ]
}

fn element() -> impl Strategy<Value = Element> {
    prop::collection::vec(syllable(), 0..7).prop_map(|raw| group().normalize(raw).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn associativity(a in element(), b in element(), c in element()) {
        let g = group();
        prop_assert_eq!(g.mul(&g.mul(&a, &b), &c), g.mul(&a, &g.mul(&b, &c)));
    }

    #[test]
    fn identity_and_inverse(a in element()) {
        let g = group();
        let e = Element::identity();
        prop_assert_eq!(g.mul(&a, &e), a.clone());
        prop_assert_eq!(g.mul(&e, &a), a.clone());
        prop_assert!(g.mul(&a, &g.inverse(&a)).is_identity());
        prop_assert!(g.mul(&g.inverse(&a), &a).is_identity());
        prop_assert_eq!(g.inverse(&g.inverse(&a)), a);
    }

    #[test]
    fn products_are_normal(a in element(), b in element()) {
        let g = group();
        g.check(&g.multiply(&a, &b).unwrap()).unwrap();
    }

    #[test]
    fn length_laws(a in element(), b in element()) {
        let g = group();
        let ab = g.mul(&a, &b);
        prop_assert!(g.word_length(&ab) <= g.word_length(&a) + g.word_length(&b));
        prop_assert_eq!(g.word_length(&g.inverse(&a)), g.word_length(&a));
        prop_assert!(g.relative_length(&a) <= g.word_length(&a));
        prop_assert!(g.relative_length(&ab) <= g.relative_length(&a) + g.relative_length(&b));
        prop_assert_eq!(g.relative_length(&g.inverse(&a)), g.relative_length(&a));
    }

    #[test]
    fn powers(a in element(), i in -4i64..=4, j in -4i64..=4) {
        let g = group();
        prop_assert_eq!(g.mul(&g.pow(&a, i), &g.pow(&a, j)), g.pow(&a, i + j));
    }

    #[test]
    fn serialization_round_trip(a in element()) {
        let g = group();
        prop_assert_eq!(g.parse_element(&g.serialize(&a)).unwrap(), a);
    }

    #[test]
    fn classification_is_conjugation_invariant(a in element(), c in element()) {
        let g = group();
        let x = g.conjugate(&c, &a);
        prop_assert_eq!(g.classify(&x), g.classify(&a));
        let (rx, ra) = (g.cyclic_reduce(&x), g.cyclic_reduce(&a));
        prop_assert_eq!(g.word_length(&rx.core), g.word_length(&ra.core));
        prop_assert_eq!(g.conjugate(&rx.conjugator, &rx.core), x);
    }

    #[test]
    fn hyperbolic_elements_have_infinite_order(a in element()) {
        let g = group();
        let class = g.classify(&a);
        if class.tag == ClassTag::Hyperbolic {
            prop_assert!(class.finite_order.is_none());
            let (root, k) = g.primitive_root(&a).unwrap();
            prop_assert_eq!(g.pow(&root, k as i64), a.clone());
        }
        if let Some(m) = class.finite_order {
            prop_assert!(g.pow(&a, m as i64).is_identity());
        }
    }

    #[test]
    fn centralizer_contains_powers(a in element(), k in -3i64..=3) {
        let g = group();
        let d = g.centralizer_descriptor(&a);
        prop_assert!(d.contains(&g, &a));
        prop_assert!(d.contains(&g, &g.pow(&a, k)));
        prop_assert!(d.contains(&g, &Element::identity()));
    }
}
