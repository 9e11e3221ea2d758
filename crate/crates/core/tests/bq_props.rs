mod common;

use common::{triple, triple_in_disk};
use fricke::bq::*;
use fricke::character::*;
use proptest::prelude::*;

const FUEL: u64 = 20_000;

fn witness_is_sound(c: &Character, v: &BqVerdict) -> bool {
    match &v.witness {
        Some(Witness::ForbiddenTrace { slope, trace }) => {
            let t = c.trace_at(*slope).unwrap();
            (t - trace).norm() <= 1e-9 * (1.0 + t.norm()) && is_forbidden(t, v.variant)
        }
        Some(Witness::ReducibleKappa { kappa }) => (kappa - 2.0).norm() <= CLASSIFY_TOL,
        Some(Witness::PeriodicBoundedOrbit { center, center_trace, neighbours, neighbour_traces }) => {
            let t = c.trace_at(*center).unwrap();
            let n = [c.trace_at(neighbours[0]).unwrap(), c.trace_at(neighbours[1]).unwrap()];
            (t - center_trace).norm() <= 1e-9
                && (0..2).all(|i| (n[i] - neighbour_traces[i]).norm() <= 1e-9 * (1.0 + n[i].norm()))
                && (n[0].norm() - n[1].norm()).abs() <= 1e-9 * (1.0 + n[0].norm())
        }
        None => false,
    }
}

fn flip_or_permute(t: &TraceTriple, op: u8) -> TraceTriple {
    let [x, y, z] = t.as_array();
    match op {
        0 => markov_flip(t, Coord::X),
        1 => markov_flip(t, Coord::Y),
        2 => markov_flip(t, Coord::Z),
        3 => TraceTriple::new(y, x, z),
        _ => TraceTriple::new(z, x, y),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn verdicts_are_sound(mut t in triple(4.0), real_x in prop::option::of(-2.5..2.5f64), extended in any::<bool>()) {
        if let Some(x) = real_x {
            t.x = x.into();
        }
        let c = Character::new(t);
        let variant = if extended { BqVariant::Extended } else { BqVariant::Standard };
        let v = decide(&c, variant, FUEL).unwrap();
        match v.status {
            BqStatus::Satisfies => {
                let cert = v.certificate.as_ref().expect("certificate");
                prop_assert_eq!(verify_certificate(&t, variant, cert, &NoQuotient), Ok(()));
            }
            BqStatus::Fails => prop_assert!(witness_is_sound(&c, &v), "{:?}", v.witness),
            BqStatus::Inconclusive => {}
        }
    }

    #[test]
    fn satisfies_is_monotone_in_fuel(t in triple(4.0), f in 1u64..2000) {
        let c = Character::new(t);
        if decide_bq(&c, f).unwrap().status == BqStatus::Satisfies {
            for more in [f + 1, 2 * f, 10 * f] {
                prop_assert_eq!(decide_bq(&c, more).unwrap().status, BqStatus::Satisfies);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn verdict_is_a_property_of_the_orbit(mut t in triple(4.0), real_x in prop::option::of(-2.5..2.5f64), ops in prop::collection::vec(0u8..5, 0..=5)) {
        if let Some(x) = real_x {
            t.x = x.into();
        }
        let moved = ops.iter().fold(t, |acc, &op| flip_or_permute(&acc, op));
        let a = decide_bq(&Character::new(t), FUEL).unwrap().status;
        let b = decide_bq(&Character::new(moved), FUEL).unwrap().status;
        if a != BqStatus::Inconclusive && b != BqStatus::Inconclusive {
            prop_assert_eq!(a, b);
        }
    }

    /// Curves of trace at most K form a connected subgraph.
    #[test]
    fn bounded_curves_are_connected(t in triple_in_disk(5.0)) {
        let r = check_connectivity(&Character::new(t), 2.5, 12).unwrap();
        prop_assert!(r.components <= 1, "{} components", r.components);
    }
}

#[test]
fn status_mix_is_exercised() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let mut runner = TestRunner::deterministic();
    let mut seen = std::collections::HashSet::new();
    for k in 0..200 {
        let mut t = triple(4.0).new_tree(&mut runner).unwrap().current();
        if k % 2 == 0 {
            t.x = (-1.5 + 0.01 * k as f64).into();
        }
        seen.insert(decide_bq(&Character::new(t), FUEL).unwrap().status);
    }
    assert!(seen.contains(&BqStatus::Satisfies) && seen.contains(&BqStatus::Fails), "{seen:?}");
}
