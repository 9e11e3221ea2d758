use std::collections::HashSet;

use fricke::farey::*;
use proptest::prelude::*;

/// Unimodular matrices with entries bounded by 50, as short products of
/// generators of GL(2,Z).
fn matrix() -> impl Strategy<Value = IntMatrix> {
    let gens = [
        IntMatrix::new(1, 1, 0, 1),
        IntMatrix::new(1, 0, 1, 1),
        IntMatrix::new(1, -1, 0, 1),
        IntMatrix::new(1, 0, -1, 1),
        IntMatrix::new(0, -1, 1, 0),
        IntMatrix::new(0, 1, 1, 0),
    ];
    prop::collection::vec(0usize..6, 0..8)
        .prop_map(move |ix| {
            ix.iter().fold(IntMatrix::new(1, 0, 0, 1), |m, &i| m.checked_mul(&gens[i]).unwrap())
        })
        .prop_filter("entries at most 50", |m| {
            let (a, b, c, d) = (m.a, m.b, m.c, m.d);
            [a, b, c, d].iter().all(|v| v.abs() <= 50)
        })
}

fn slope() -> impl Strategy<Value = Slope> {
    (-50i64..=50, 0i64..=50)
        .prop_filter("not 0/0", |(p, q)| (*p, *q) != (0, 0))
        .prop_map(|(p, q)| Slope::new(p, q).unwrap())
}

#[test]
fn enumerated_triangles_are_unimodular() {
    for layer in dual_layers(10).unwrap() {
        for e in layer {
            let [a, b, c] = e.far_triangle().vertices;
            for (u, v) in [(a, b), (b, c), (a, c)] {
                assert_eq!(u.cross(&v).abs(), 1, "{u} {v}");
            }
        }
    }
}

#[test]
fn mediant_flip_is_an_involution() {
    for layer in dual_layers(10).unwrap() {
        for e in layer {
            let [a, b, c] = e.far_triangle().vertices;
            for (u, v, w) in [(a, b, c), (b, c, a), (a, c, b)] {
                let edge = FareyEdge::new(u, v).unwrap();
                let across = farey_mediant_flip(edge, w).unwrap();
                assert_eq!(farey_mediant_flip(edge, across).unwrap(), w);
            }
        }
    }
}

#[test]
fn enumeration_is_nested_and_reduced() {
    let mut prev: Option<HashSet<Slope>> = None;
    for d in 0..=12 {
        let slopes = enumerate_slopes(d).unwrap();
        assert_eq!(slopes.len(), 3 << d);
        for s in &slopes {
            assert_eq!(Slope::new(s.numer(), s.denom()).unwrap(), *s);
            let g = gcd(s.numer(), s.denom());
            assert_eq!(g, 1, "{s} not in lowest terms");
        }
        let set: HashSet<Slope> = slopes.into_iter().collect();
        if let Some(p) = &prev {
            assert!(p.is_subset(&set));
        }
        prev = Some(set);
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matrix_action_is_a_group_action(g in matrix(), h in matrix(), s in slope()) {
        let gh = g.checked_mul(&h).unwrap();
        prop_assert_eq!(act_on_slope(&gh, s).unwrap(), act_on_slope(&g, act_on_slope(&h, s).unwrap()).unwrap());
    }

    #[test]
    fn addresses_round_trip(s in slope()) {
        let a = slope_to_address(s, DEFAULT_DEPTH_CAP).unwrap();
        prop_assert_eq!(address_to_slope(&a).unwrap(), s);
        prop_assert_eq!(a.depth(), s.depth());
    }
}
