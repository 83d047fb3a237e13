//! Cross-checks of normal-form arithmetic and counting against brute-force
//! searches in the Cayley graph.

use std::collections::{HashMap, HashSet, VecDeque};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use relhyp_core::algebra::{ClassTag, Element, Group, Payload};
use relhyp_core::census::{factor_sphere_count, payloads_of_weight, Census};
use relhyp_core::parse_group_spec;

const F2: &str = "name = F2\nfactor = free rank=2 peripheral=no";
const Z2Z: &str = "name = Z2xZ\nfactor = abelian rank=2 peripheral=yes\nfactor = free rank=1 peripheral=no";
const Z6Z: &str = "name = Z6xZ\nfactor = cyclic order=6 peripheral=yes\nfactor = free rank=1 peripheral=no";

fn group(text: &str) -> Group {
    Group::new(parse_group_spec(text).unwrap())
}

/// Breadth-first search from the identity; returns every element of `B(radius)`
/// with its graph distance.
fn bfs_ball(g: &Group, radius: u64) -> HashMap<Element, u64> {
    let gens = g.generators();
    let mut dist = HashMap::new();
    dist.insert(Element::identity(), 0u64);
    let mut queue = VecDeque::from([Element::identity()]);
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        if d == radius {
            continue;
        }
        for s in &gens {
            let y = g.mul(&x, s);
            if !dist.contains_key(&y) {
                dist.insert(y.clone(), d + 1);
                queue.push_back(y);
            }
        }
    }
    dist
}

fn bfs_sphere_counts(dist: &HashMap<Element, u64>, radius: u64) -> Vec<u64> {
    let mut counts = vec![0u64; radius as usize + 1];
    for &d in dist.values() {
        counts[d as usize] += 1;
    }
    counts
}

/// Independent notion of cyclically reduced used by the conjugator search.
fn is_cyclically_reduced(x: &Element) -> bool {
    match x.syllables() {
        [] => true,
        [s] => match &s.payload {
            Payload::Free(w) => w.len() < 2 || w[0] != -w[w.len() - 1],
            _ => true,
        },
        ss => ss[0].factor != ss[ss.len() - 1].factor,
    }
}

#[test]
fn dp_counts_match_bfs_up_to_eight() {
    for text in [F2, Z2Z, Z6Z] {
        let g = group(text);
        let dist = bfs_ball(&g, 8);
        let bfs = bfs_sphere_counts(&dist, 8);
        let census = Census::build(&g, 8).unwrap();
        for n in 0..=8 {
            assert_eq!(census.sphere(n), &BigUint::from(bfs[n]), "{} n={n}", g.spec().name);
        }
    }
}

#[test]
fn word_length_equals_graph_distance() {
    for text in [F2, Z2Z, Z6Z] {
        let g = group(text);
        for (x, d) in bfs_ball(&g, 6) {
            assert_eq!(g.word_length(&x), d, "{}", g.serialize(&x));
        }
    }
    // (A,(1,0))(F,t)(A,(1,0)) sits at distance 3
    let g = group(Z2Z);
    let dist = bfs_ball(&g, 3);
    let x = g.parse_element("A(1,0)·F(t)·A(1,0)").unwrap();
    assert_eq!(dist[&x], 3);
    assert_eq!(g.word_length(&x), 3);
}

#[test]
fn relative_length_against_coned_off_bfs() {
    // Γ(G, X ∪ ℋ) restricted to a finite window: every nontrivial element of the
    // peripheral factor up to length 6 is a single edge.
    let g = group(Z2Z);
    let census = Census::build(&g, 6).unwrap();
    let mut gens = g.generators();
    gens.extend(census.enumerate_ball(6, 1_000_000).unwrap().filter(|x| {
        matches!(x.syllables(), [s] if s.factor == 0)
    }));
    let mut dist: HashMap<Element, u64> = HashMap::from([(Element::identity(), 0)]);
    let mut queue = VecDeque::from([Element::identity()]);
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        if d == 4 {
            continue;
        }
        for s in &gens {
            let y = g.mul(&x, s);
            if g.word_length(&y) <= 12 && !dist.contains_key(&y) {
                dist.insert(y.clone(), d + 1);
                queue.push_back(y);
            }
        }
    }
    let x = g.parse_element("A(5,0)·F(t^3)").unwrap();
    assert_eq!(dist[&x], 4);
    assert_eq!(g.relative_length(&x), 4);
    for (y, d) in dist.iter().filter(|(y, _)| g.word_length(y) <= 5) {
        assert_eq!(g.relative_length(y), *d, "{}", g.serialize(y));
    }
}

#[test]
fn enumeration_is_exact_and_distinct() {
    for text in [F2, Z2Z, Z6Z] {
        let g = group(text);
        let census = Census::build(&g, 6).unwrap();
        let dist = bfs_ball(&g, 6);
        for n in 0..=6 {
            let list: Vec<Element> = census.enumerate_sphere(n, 1_000_000).unwrap().collect();
            let set: HashSet<&Element> = list.iter().collect();
            assert_eq!(set.len(), list.len());
            assert_eq!(BigUint::from(list.len()), *census.sphere(n));
            for x in &list {
                g.check(x).unwrap();
                assert_eq!(dist.get(x), Some(&(n as u64)));
            }
            // deterministic
            let again: Vec<Element> = census.enumerate_sphere(n, 1_000_000).unwrap().collect();
            assert_eq!(list, again);
        }
    }
    let f2 = group(F2);
    let census = Census::build(&f2, 3).unwrap();
    assert_eq!(census.enumerate_sphere(3, 100).unwrap().count(), 36);
}

#[test]
fn enumeration_order_is_by_syllable_count_then_lexicographic() {
    let g = group(Z2Z);
    let census = Census::build(&g, 4).unwrap();
    let list: Vec<Element> = census.enumerate_sphere(4, 100_000).unwrap().collect();
    let key = |x: &Element| -> (usize, Vec<(usize, u64, usize)>) {
        let triples = x
            .syllables()
            .iter()
            .map(|s| {
                let w = g.syllable_length(s);
                let kind = g.kind(s.factor);
                let rank = payloads_of_weight(kind, w as usize).iter().position(|p| *p == s.payload).unwrap();
                (s.factor, w, rank)
            })
            .collect();
        (x.syllable_count(), triples)
    };
    for pair in list.windows(2) {
        assert!(key(&pair[0]) < key(&pair[1]));
    }
}

#[test]
fn free_product_generating_function_identity() {
    // 1/g(z) = Σ_i 1/a_i(z) − (k − 1) as formal power series.
    let texts = [
        F2,
        Z2Z,
        Z6Z,
        "name = m\nfactor = cyclic order=4\nfactor = abelian rank=2\nfactor = free rank=1",
        "name = m\nfactor = cyclic order=2\nfactor = cyclic order=3",
    ];
    let deg = 24;
    let invert = |a: &[BigInt]| -> Vec<BigInt> {
        let mut inv = vec![BigInt::zero(); a.len()];
        inv[0] = BigInt::one();
        for n in 1..a.len() {
            let mut acc = BigInt::zero();
            for j in 1..=n {
                acc += &a[j] * &inv[n - j];
            }
            inv[n] = -acc;
        }
        inv
    };
    for text in texts {
        let g = group(text);
        let census = Census::build(&g, deg).unwrap();
        let series: Vec<BigInt> = (0..=deg).map(|n| BigInt::from(census.sphere(n).clone())).collect();
        let lhs = invert(&series);
        let mut rhs = vec![BigInt::zero(); deg + 1];
        rhs[0] = -BigInt::from(g.factor_count() as i64 - 1);
        for f in &g.spec().factors {
            let a: Vec<BigInt> = (0..=deg).map(|w| BigInt::from(factor_sphere_count(f, w))).collect();
            for (slot, c) in rhs.iter_mut().zip(invert(&a)) {
                *slot += c;
            }
        }
        assert_eq!(lhs, rhs, "{}", g.spec().name);
    }
}

#[test]
fn fekete_submultiplicativity_on_computed_tables() {
    for text in [F2, Z2Z, Z6Z] {
        let t = relhyp_core::sphere_count_table(&group(text), 40).unwrap();
        assert!(t.is_submultiplicative());
        for (n, s) in t.sphere.iter().enumerate() {
            let expected: BigUint = t.sphere[..=n].iter().sum();
            assert_eq!(t.ball[n], expected);
            assert!(n == 0 || !s.is_zero());
        }
    }
}

#[test]
fn f2_balls_have_closed_form() {
    let t = relhyp_core::sphere_count_table(&group(F2), 60).unwrap();
    for n in 0..=60u32 {
        assert_eq!(t.ball[n as usize], BigUint::from(3u32).pow(n) * 2u32 - 1u32);
    }
    // exceeds 64 bits well before n = 60
    assert!(t.ball[60] > BigUint::from(u64::MAX));
}

#[test]
fn cyclic_reduction_has_shortest_conjugator() {
    for text in [Z2Z, Z6Z, F2] {
        let g = group(text);
        let census = Census::build(&g, 5).unwrap();
        let conjugators: Vec<Element> = census.enumerate_ball(4, 100_000).unwrap().collect();
        for x in census.enumerate_ball(5, 100_000).unwrap().step_by(7) {
            let red = g.cyclic_reduce(&x);
            assert!(is_cyclically_reduced(&red.core));
            assert_eq!(g.conjugate(&red.conjugator, &red.core), x);
            let ours = g.word_length(&red.conjugator);
            let best = conjugators
                .iter()
                .filter(|c| is_cyclically_reduced(&g.conjugate(&g.inverse(c), &x)))
                .map(|c| g.word_length(c))
                .min();
            if ours <= 4 {
                assert_eq!(best, Some(ours), "{}", g.serialize(&x));
            } else {
                assert!(best.is_none());
            }
        }
    }
}

#[test]
fn cyclic_reduction_nested_example() {
    let g = group(Z2Z);
    let x = g.parse_element("F(t)·A(1,0)·F(t)·A(-1,0)·F(t^-1)").unwrap();
    let red = g.cyclic_reduce(&x);
    // exhaustive search over conjugators of length <= 4
    let census = Census::build(&g, 4).unwrap();
    let best = census
        .enumerate_ball(4, 100_000)
        .unwrap()
        .filter(|c| is_cyclically_reduced(&g.conjugate(&g.inverse(c), &x)))
        .min_by(|a, b| g.shortlex_cmp(a, b))
        .unwrap();
    assert_eq!(red.conjugator, best);
    assert_eq!(g.serialize(&red.conjugator), "F(t)·A(1,0)");
    assert_eq!(g.serialize(&red.core), "F(t)");
}

#[test]
fn parabolic_classification_matches_conjugator_search() {
    for text in [Z2Z, Z6Z] {
        let g = group(text);
        let census = Census::build(&g, 6).unwrap();
        let conjugators: Vec<Element> = census.enumerate_ball(3, 100_000).unwrap().collect();
        for x in census.enumerate_ball(5, 100_000).unwrap() {
            // a conjugate of x lands in a factor within conjugator length 3
            // whenever x has length at most 5 and is conjugate into a factor
            let into_peripheral = conjugators.iter().any(|c| {
                let y = g.conjugate(&g.inverse(c), &x);
                matches!(y.syllables(), [s] if g.is_peripheral(s.factor))
            });
            let class = g.classify(&x);
            assert_eq!(class.is_parabolic(), into_peripheral, "{}", g.serialize(&x));
        }
    }
    // (A,(1,0))(F,t): nothing of length <= 6 conjugates it into a factor
    let g = group(Z2Z);
    let census = Census::build(&g, 6).unwrap();
    let x = g.parse_element("A(1,0)·F(t)").unwrap();
    let found = census.enumerate_ball(6, 1_000_000).unwrap().any(|c| {
        let y = g.conjugate(&c, &x);
        y.syllable_count() <= 1
    });
    assert!(!found);
    assert_eq!(g.classify(&x).tag, ClassTag::Hyperbolic);
}

#[test]
fn torsion_orders_match_power_search() {
    let g = group("name = x\nfactor = cyclic order=6\nfactor = cyclic order=4 peripheral=no\nfactor = free rank=1");
    let census = Census::build(&g, 4).unwrap();
    for x in census.enumerate_ball(4, 100_000).unwrap() {
        let order = (1..=12i64).find(|&k| g.pow(&x, k).is_identity()).map(|k| k as u64);
        assert_eq!(g.classify(&x).finite_order, order, "{}", g.serialize(&x));
    }
}

#[test]
fn primitive_roots_match_exhaustive_search() {
    for text in [Z2Z, F2] {
        let g = group(text);
        let census = Census::build(&g, 8).unwrap();
        let candidates: Vec<Element> = census.enumerate_ball(4, 100_000).unwrap().collect();
        // powers of short hyperbolic elements, plus every hyperbolic element of B(4)
        let mut targets: Vec<Element> = Vec::new();
        for h in candidates.iter().filter(|h| g.classify(h).is_hyperbolic()).step_by(5) {
            for k in 1..=3 {
                let p = g.pow(h, k);
                if g.word_length(&p) <= 8 {
                    targets.push(p);
                }
            }
        }
        for x in targets {
            let (root, exp) = g.primitive_root(&x).unwrap();
            assert_eq!(g.pow(&root, exp as i64), x);
            assert!(g.classify(&root).is_hyperbolic());
            // no root of x with a larger exponent among short elements
            for h in &candidates {
                for k in (exp as i64 + 1)..=8 {
                    assert_ne!(g.pow(h, k), x, "{} = {}^{k}", g.serialize(&x), g.serialize(h));
                }
            }
        }
    }
}

#[test]
fn centralizers_match_commuting_search() {
    for text in [Z2Z, F2, Z6Z] {
        let g = group(text);
        let census = Census::build(&g, 4).unwrap();
        let ball: Vec<Element> = census.enumerate_ball(4, 100_000).unwrap().collect();
        for x in census.enumerate_ball(3, 100_000).unwrap() {
            let descriptor = g.centralizer_descriptor(&x);
            for y in &ball {
                assert_eq!(
                    g.commutes(&x, y),
                    descriptor.contains(&g, y),
                    "{} vs {}",
                    g.serialize(&x),
                    g.serialize(y)
                );
            }
        }
    }
    // commuting elements of (A,(1,0))(F,t) inside B(4) are its powers
    let g = group(Z2Z);
    let x = g.parse_element("A(1,0)·F(t)").unwrap();
    let census = Census::build(&g, 4).unwrap();
    let powers: HashSet<Element> = (-2..=2).map(|k| g.pow(&x, k)).collect();
    for y in census.enumerate_ball(4, 100_000).unwrap() {
        assert_eq!(g.commutes(&x, &y), powers.contains(&y));
    }
}

#[test]
fn peripheral_factors_are_almost_malnormal() {
    for text in [Z2Z, Z6Z, "name = m\nfactor = cyclic order=4\nfactor = abelian rank=2\nfactor = free rank=1"] {
        let g = group(text);
        let census = Census::build(&g, 8).unwrap();
        for omega in g.spec().peripheral_indices() {
            let members: Vec<Element> = census
                .enumerate_ball(8, 10_000_000)
                .unwrap()
                .filter(|x| x.syllable_count() == 0 || (x.syllable_count() == 1 && x.syllables()[0].factor == omega))
                .collect();
            for seed in 0..40u64 {
                let c = census.sample_sphere_uniform(1 + (seed as usize % 5), seed, 1).unwrap().remove(0);
                if matches!(c.syllables(), [s] if s.factor == omega) {
                    continue;
                }
                let back: Vec<&Element> = members
                    .iter()
                    .filter(|x| {
                        let y = g.conjugate(&c, x);
                        y.syllable_count() == 0 || (y.syllable_count() == 1 && y.syllables()[0].factor == omega)
                    })
                    .collect();
                assert_eq!(back, vec![&Element::identity()], "conjugator {}", g.serialize(&c));
            }
        }
    }
}

#[test]
fn sphere_sampling_is_uniform() {
    // 60 000 draws from S(3) of Z²*Z; every element within 5σ of the mean
    let g = group(Z2Z);
    let census = Census::build(&g, 3).unwrap();
    let size = 110usize;
    assert_eq!(census.sphere(3), &BigUint::from(size));
    let draws = census.sample_sphere_uniform(3, 2024, 60_000).unwrap();
    let mut freq: HashMap<Element, usize> = HashMap::new();
    for x in draws {
        assert_eq!(g.word_length(&x), 3);
        *freq.entry(x).or_default() += 1;
    }
    assert_eq!(freq.len(), size);
    let p = 1.0 / size as f64;
    let mean = 60_000.0 * p;
    let sigma = (60_000.0 * p * (1.0 - p)).sqrt();
    for (x, c) in &freq {
        assert!((*c as f64 - mean).abs() <= 5.0 * sigma, "{} drawn {c} times", g.serialize(x));
    }
    let chi2: f64 = freq.values().map(|&c| (c as f64 - mean).powi(2) / mean).sum();
    // 109 degrees of freedom; 99.99th percentile is about 175
    assert!(chi2 < 175.0, "chi-square {chi2}");
}

#[test]
fn sampling_reaches_large_radii() {
    let g = group(Z2Z);
    let census = Census::build(&g, 200).unwrap();
    for x in census.sample_sphere_uniform(200, 5, 20).unwrap() {
        g.check(&x).unwrap();
        assert_eq!(g.word_length(&x), 200);
    }
}
