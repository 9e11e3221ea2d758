mod common;

use common::{triple_in_disk, word};
use fricke::bq::{decide_extended_bq, is_forbidden, BqStatus, BqVariant};
use fricke::farey::{act_on_slope, Slope};
use fricke::bundle::apply_word;
use fricke::character::*;
use fricke::series::*;
use num_complex::Complex64;
use proptest::prelude::*;

const TOL: f64 = 1e-8;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// The general term is, to first order in ν, twice the cusp term.
    #[test]
    fn general_term_linearizes_to_cusp_term(t in 2.05..50.0f64) {
        let h = 1e-4;
        let t = Complex64::from(t);
        let g = series_term(t, Complex64::from(h), SeriesVariant::General).unwrap() / h;
        let cusp = series_term(t, Complex64::default(), SeriesVariant::Cusp).unwrap();
        prop_assert!((g - 2.0 * cusp).norm() < 1e-6, "{} vs {}", g, 2.0 * cusp);
    }

    /// Large traces give terms of size O(1/|t|²), with constant 4|sinh ν|.
    #[test]
    fn terms_decay_quadratically(
        r in 10.0..1e4f64,
        arg in 0.0..std::f64::consts::TAU,
        nu_re in 0.0..2.0f64,
        nu_im in -3.0..3.0f64,
    ) {
        let t = Complex64::from_polar(r, arg);
        let nu = Complex64::new(nu_re, nu_im);
        let v = series_term(t, nu, SeriesVariant::General).unwrap();
        let c = 4.0 * nu.sinh().norm() * (1.0 + nu_re.exp() / 10.0);
        prop_assert!(v.norm() * r * r <= c, "|term|·|t|² = {} > {}", v.norm() * r * r, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Characters satisfying the extended conditions never look divergent,
    /// and when the tail is certified the identity holds.
    #[test]
    fn satisfying_characters_converge(t in triple_in_disk(5.0)) {
        let c = Character::new(t);
        prop_assume!((c.kappa - 2.0).norm() > 0.1 && (c.kappa + 2.0).norm() > 0.1);
        prop_assume!(decide_extended_bq(&c, 100_000).unwrap().status == BqStatus::Satisfies);
        let r = evaluate_identity(&c, SeriesVariant::General, 1e-7, 1_000_000).unwrap();
        prop_assert!(!r.diverged);
        if r.converged {
            prop_assert!(r.residual.norm() < 1e-5, "residual {}", r.residual);
        }
    }

    /// A curve with trace in (−2, 2), hidden behind a change of marking,
    /// is always found and reported.
    #[test]
    fn failing_characters_diverge(t in triple_in_disk(5.0), x in -1.95..1.95f64, w in word(6)) {
        let t = apply_word(&TraceTriple::new(x.into(), t.y, t.z), &w).unwrap();
        let c = Character::new(t);
        prop_assume!((c.kappa - 2.0).norm() > 0.1 && (c.kappa + 2.0).norm() > 0.1);
        // Rounding in the change of marking can push the hidden trace off
        // the real axis; such a character no longer carries the curve.
        let hidden = act_on_slope(&w.matrix().unwrap(), Slope::ZERO).unwrap();
        prop_assume!(is_forbidden(c.trace_at(hidden).unwrap(), BqVariant::Extended));
        prop_assert_eq!(decide_extended_bq(&c, 100_000).unwrap().status, BqStatus::Fails);
        let r = evaluate_identity(&c, SeriesVariant::General, 1e-7, 1_000_000).unwrap();
        prop_assert!(r.diverged && !r.converged);
        let w = r.divergence.unwrap();
        prop_assert!((c.trace_at(w.center).unwrap() - w.center_trace).norm() < 1e-9);
    }

    /// Re-marking by a flip changes only the order of summation.
    #[test]
    fn sums_do_not_depend_on_the_marking(t in triple_in_disk(5.0), i in 0usize..3) {
        let c = Character::new(t);
        prop_assume!((c.kappa - 2.0).norm() > 0.1);
        prop_assume!(decide_extended_bq(&c, 100_000).unwrap().status == BqStatus::Satisfies);
        let a = evaluate_identity(&c, SeriesVariant::General, TOL, 1_000_000).unwrap();
        prop_assume!(a.converged);
        let flipped = markov_flip(&t, [Coord::X, Coord::Y, Coord::Z][i]);
        let b = evaluate_identity(&Character::new(flipped), SeriesVariant::General, TOL, 1_000_000).unwrap();
        prop_assume!(b.converged);
        let d = residual_mod_2pi_i(a.partial_sum, b.partial_sum);
        prop_assert!(d.norm() <= 2.0 * TOL, "{} vs {}", a.partial_sum, b.partial_sum);
    }

    /// Once every remaining branch is past the bounded region, the layer
    /// sums of |term| fall strictly.
    #[test]
    fn layer_sums_eventually_decrease(t in triple_in_disk(5.0)) {
        let c = Character::new(t);
        prop_assume!((c.kappa - 2.0).norm() > 0.1 && (c.kappa + 2.0).norm() > 0.1);
        prop_assume!(decide_extended_bq(&c, 100_000).unwrap().status == BqStatus::Satisfies);
        let r = evaluate_identity(&c, SeriesVariant::General, TOL, 1_000_000).unwrap();
        prop_assume!(r.converged);
        let abs: Vec<f64> = r.layers.iter().map(|l| l.layer_abs).filter(|&a| a > 0.0).collect();
        let tail = &abs[abs.len().saturating_sub(4)..];
        prop_assert!(tail.windows(2).all(|w| w[1] < w[0]), "{:?}", tail);
    }
}
