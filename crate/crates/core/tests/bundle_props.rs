mod common;

use common::{close, triple_in_disk, word};
use fricke::bundle::*;
use fricke::character::*;
use fricke::farey::{act_on_slope, enumerate_slopes, IntMatrix, Slope};
use num_complex::Complex64;
use proptest::prelude::*;

fn cat_map() -> MappingClass {
    MappingClass::new(IntMatrix::new(2, 1, 1, 1)).unwrap()
}

fn scale(t: &TraceTriple) -> f64 {
    1.0 + t.as_array().iter().map(|c| c.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn kappa_is_invariant(t in triple_in_disk(4.0), w in word(8)) {
        let moved = apply_word(&t, &w).unwrap();
        let s = scale(&moved).powi(3);
        prop_assert!((kappa(&moved) - kappa(&t)).norm() <= 1e-12 * s, "{} vs {}", kappa(&moved), kappa(&t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// The new trace at `g·s` is the old trace at `s`.
    #[test]
    fn action_on_slopes_matches_action_on_traces(t in triple_in_disk(2.5), w in word(4)) {
        let g = w.matrix().unwrap();
        let old = Character::new(t);
        let new = Character::new(apply_mapping_class(&t, &g).unwrap());
        for s in enumerate_slopes(8).unwrap() {
            let a = old.trace_at(s).unwrap();
            let b = new.trace_at(act_on_slope(&g, s).unwrap()).unwrap();
            prop_assert!(close(a, b, 1e-6), "slope {}: {} vs {}", s, a, b);
        }
    }
}

fn orbit_index(theta: &IntMatrix, from: Slope, to: Slope, range: i64) -> Option<i64> {
    let inv = theta.inverse().unwrap();
    let (mut fwd, mut back) = (from, from);
    if from == to {
        return Some(0);
    }
    for k in 1..=range {
        fwd = act_on_slope(theta, fwd).ok()?;
        back = act_on_slope(&inv, back).ok()?;
        if fwd == to {
            return Some(k);
        }
        if back == to {
            return Some(-k);
        }
    }
    None
}

#[test]
fn orbit_representatives_cover_each_orbit_once() {
    let theta = cat_map();
    let reps = orbit_representatives(&theta, 8).unwrap();
    for s in enumerate_slopes(8).unwrap() {
        let hits = reps.all.iter().filter(|r| orbit_index(&theta.matrix, **r, s, 30).is_some()).count();
        assert_eq!(hits, 1, "slope {s} meets {hits} representatives");
    }
    for (i, a) in reps.all.iter().enumerate() {
        for b in &reps.all[i + 1..] {
            assert_eq!(orbit_index(&theta.matrix, *a, *b, 30), None, "{a} and {b} share an orbit");
        }
    }
    assert!(reps.left.iter().all(|s| reps.all.contains(s)));
    assert!(!reps.left.is_empty() && reps.left.len() < reps.all.len());
}

#[test]
fn fixed_characters_have_constant_traces_on_orbits() {
    let theta = cat_map();
    let target = Complex64::new(-2.0, 0.1);
    let roots = fixed_characters(theta.word.as_ref().unwrap(), target, &FixedOptions::default()).unwrap();
    assert!(!roots.is_empty());
    for root in roots {
        let c = Character::new(root.triple);
        assert!((c.kappa - target).norm() < 1e-9);
        for s in enumerate_slopes(6).unwrap() {
            let a = c.trace_at(s).unwrap();
            let b = c.trace_at(act_on_slope(&theta.matrix, s).unwrap()).unwrap();
            assert!(close(a, b, 1e-8), "{}: slope {s}: {a} vs {b}", root.triple);
        }
    }
}
