mod common;

use std::collections::HashSet;

use common::{complex_in_disk, triple_in_disk, word};
use fricke::bq::{decide_extended_bq, is_forbidden, BqStatus, BqVariant, Witness};
use fricke::bundle::apply_mapping_class;
use fricke::character::*;
use fricke::ends::*;
use fricke::farey::{act_on_slope, enumerate_slopes, Slope};
use proptest::prelude::*;

const DEPTH: usize = 9;

/// Random characters, half of them with a real `x` in `(−2.2, 2.2)` so
/// that curves of small real trace are common.
fn character() -> impl Strategy<Value = Character> {
    (triple_in_disk(3.0), prop::option::of(-2.2..2.2f64)).prop_map(|(mut t, x)| {
        if let Some(x) = x {
            t.x = x.into();
        }
        Character::new(t)
    })
}

fn reachable(depth: usize) -> HashSet<Slope> {
    enumerate_slopes(depth - 1).unwrap().into_iter().collect()
}

fn rationals(r: &EndInvariantReport) -> HashSet<Slope> {
    r.rational_candidates().map(|(s, _)| s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    /// Empty end sets and curves of trace in (−2, 2) exclude each other.
    #[test]
    fn agrees_with_extended_bq(c in character()) {
        let v = decide_extended_bq(&c, 20_000).unwrap();
        prop_assume!(v.status != BqStatus::Inconclusive);
        let r = classify_end_set(&c, 20_000).unwrap();
        match v.status {
            BqStatus::Satisfies => prop_assert_eq!(r.classification, EndClass::Empty),
            _ => prop_assert_ne!(r.classification, EndClass::Empty),
        }
        if let Some(Witness::ForbiddenTrace { slope, .. }) = v.witness {
            if reachable(DEPTH).contains(&slope) {
                let s = search_end_invariants(&c, CLASSIFY_BOUND, DEPTH).unwrap();
                prop_assert!(rationals(&s).contains(&slope), "witness {} not a candidate", slope);
            }
        }
    }

    /// Raising the bound only prunes less.
    #[test]
    fn monotone_in_the_bound(c in character(), k in 2.1..3.0f64, dk in 0.0..1.5f64) {
        let lo = search_end_invariants(&c, k, DEPTH).unwrap();
        let hi = search_end_invariants(&c, k + dk, DEPTH).unwrap();
        prop_assert!(rationals(&lo).is_subset(&rationals(&hi)));
        for (a, b) in lo.survivors_per_depth.iter().zip(&hi.survivors_per_depth) {
            prop_assert!(a <= b, "{:?} vs {:?}", lo.survivors_per_depth, hi.survivors_per_depth);
        }
    }

    /// Changing the marking by `g` moves the candidates by `g`.
    #[test]
    fn rational_candidates_are_equivariant(c in character(), w in word(3)) {
        let g = w.matrix().unwrap();
        let moved = Character::new(apply_mapping_class(&c.triple, &g).unwrap());
        let before = search_end_invariants(&c, CLASSIFY_BOUND, DEPTH).unwrap();
        let after = rationals(&search_end_invariants(&moved, CLASSIFY_BOUND, DEPTH).unwrap());
        let reach = reachable(DEPTH);
        for (s, t) in before.rational_candidates() {
            prop_assume!((t.norm() - CLASSIFY_BOUND).abs() > 1e-6);
            let gs = act_on_slope(&g, s).unwrap();
            if reach.contains(&gs) {
                prop_assert!(after.contains(&gs), "{} ↦ {} lost", s, gs);
            }
        }
    }

    /// A single-curve classification names a curve of small trace.
    #[test]
    fn single_curve_has_a_small_trace(c in character()) {
        let r = classify_end_set(&c, 20_000).unwrap();
        if r.classification == EndClass::SingleCurve {
            let small = r.rational_candidates().any(|(s, _)| c.trace_at(s).unwrap().norm() < r.bound_used);
            prop_assert!(small, "{:?}", r.candidates);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    /// A hidden curve of trace zero on an imaginary character is reported.
    #[test]
    fn imaginary_zero_curve_is_found(p in 2.0..4.0f64, w in word(3)) {
        let t = TraceTriple::new(0.0.into(), p.into(), num_complex::Complex64::new(0.0, p));
        let g = w.matrix().unwrap();
        let c = Character::new(apply_mapping_class(&t, &g).unwrap());
        let hidden = act_on_slope(&g, Slope::ZERO).unwrap();
        prop_assume!(is_forbidden(c.trace_at(hidden).unwrap(), BqVariant::Extended));
        let r = classify_end_set(&c, 20_000).unwrap();
        prop_assert_ne!(r.classification, EndClass::Empty);
    }

    #[test]
    fn search_rejects_bad_arguments(c in character(), k in complex_in_disk(1.0)) {
        prop_assert!(search_end_invariants(&c, -k.norm(), 4).is_err());
        prop_assert!(search_end_invariants(&c, 2.5, 0).is_err());
        prop_assert!(search_end_invariants(&c, 2.5, MAX_END_DEPTH + 1).is_err());
    }
}
