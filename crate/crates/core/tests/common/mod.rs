#![allow(dead_code)]

use fricke::character::TraceTriple;
use fricke::farey::{Letter, LrWord};
use num_complex::Complex64;
use proptest::prelude::*;

/// Complex numbers uniform in the square `[−r, r]²`.
pub fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| Complex64::new(a, b))
}

/// Complex numbers in the closed disk of radius `r`.
pub fn complex_in_disk(r: f64) -> impl Strategy<Value = Complex64> {
    (0.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(move |(u, th)| Complex64::from_polar(r * u.sqrt(), th))
}

pub fn triple(r: f64) -> impl Strategy<Value = TraceTriple> {
    (complex(r), complex(r), complex(r)).prop_map(|(x, y, z)| TraceTriple::new(x, y, z))
}

pub fn triple_in_disk(r: f64) -> impl Strategy<Value = TraceTriple> {
    (complex_in_disk(r), complex_in_disk(r), complex_in_disk(r)).prop_map(|(x, y, z)| TraceTriple::new(x, y, z))
}

pub fn word(max_len: usize) -> impl Strategy<Value = LrWord> {
    prop::collection::vec(prop_oneof![Just(Letter::L), Just(Letter::R)], 0..=max_len).prop_map(LrWord::new)
}

pub fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}
