//! Characters in Fricke trace coordinates.
//!
//! A character is the triple `(x, y, z) = (tr X, tr Y, tr XY)`; with the
//! convention used throughout the crate `x` sits at slope `0/1`, `y` at
//! `1/0` and `z` at `1/1`. The trace at any other slope follows from the
//! triple by repeated Markov flips along the dual-tree path.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::{Mul, Sub};
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::farey::{slope_to_address, DualEdge, Slope, SlopeAddress, DEFAULT_DEPTH_CAP};

pub type Mat2 = Matrix2<Complex64>;

/// Default tolerance for classification tests.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// Traces of `X`, `Y` and `XY`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceTriple {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coord {
    X,
    Y,
    Z,
}

impl TraceTriple {
    pub fn new(x: Complex64, y: Complex64, z: Complex64) -> TraceTriple {
        TraceTriple { x, y, z }
    }

    pub fn real(x: f64, y: f64, z: f64) -> TraceTriple {
        TraceTriple::new(x.into(), y.into(), z.into())
    }

    pub fn as_array(&self) -> [Complex64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [Complex64; 3]) -> TraceTriple {
        TraceTriple::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest coordinatewise distance to another triple.
    pub fn distance(&self, other: &TraceTriple) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for TraceTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{}",
            format_complex(self.x),
            format_complex(self.y),
            format_complex(self.z)
        )
    }
}

/// Formats a complex number in the `a+bi` form accepted by [`parse_complex`].
pub fn format_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.im < 0.0 {
        format!("{}-{}i", c.re, -c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

/// Parses `3`, `-1.5`, `3i`, `-i`, `2+3i`, `1e-3-2i` and similar forms.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || Error::Parse(format!("bad complex number {s:?}"));
    if t.is_empty() {
        return Err(err());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(Complex64::from).map_err(|_| err());
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let imag = |u: &str| -> Result<f64> {
        match u {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => u.parse::<f64>().map_err(|_| err()),
        }
    };
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| err())?;
            Ok(Complex64::new(re, imag(&body[k..])?))
        }
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

impl FromStr for TraceTriple {
    type Err = Error;

    fn from_str(s: &str) -> Result<TraceTriple> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("triple {s:?} needs three comma-separated entries")));
        }
        let t = TraceTriple::new(
            parse_complex(parts[0])?,
            parse_complex(parts[1])?,
            parse_complex(parts[2])?,
        );
        if !t.is_finite() {
            return Err(Error::Parse(format!("triple {s:?} is not finite")));
        }
        Ok(t)
    }
}

#[derive(Serialize, Deserialize)]
struct TripleRepr {
    x: [f64; 2],
    y: [f64; 2],
    z: [f64; 2],
}

impl Serialize for TraceTriple {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        TripleRepr {
            x: [self.x.re, self.x.im],
            y: [self.y.re, self.y.im],
            z: [self.z.re, self.z.im],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TraceTriple {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let r = TripleRepr::deserialize(deserializer)?;
        let c = |a: [f64; 2]| Complex64::new(a[0], a[1]);
        Ok(TraceTriple::new(c(r.x), c(r.y), c(r.z)))
    }
}

/// `x² + y² + z² − xyz − 2`, the trace of the commutator.
pub fn kappa(t: &TraceTriple) -> Complex64 {
    t.x * t.x + t.y * t.y + t.z * t.z - t.x * t.y * t.z - 2.0
}

/// Replaces one coordinate `c` by `(product of the other two) − c`.
pub fn markov_flip(t: &TraceTriple, index: Coord) -> TraceTriple {
    let TraceTriple { x, y, z } = *t;
    match index {
        Coord::X => TraceTriple::new(y * z - x, y, z),
        Coord::Y => TraceTriple::new(x, x * z - y, z),
        Coord::Z => TraceTriple::new(x, y, x * y - z),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassTag {
    Real,
    Imaginary,
    Dihedral,
    Reducible,
    Generic,
}

/// A triple together with its commutator trace and class tags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Character {
    pub triple: TraceTriple,
    pub kappa: Complex64,
    pub class_tags: BTreeSet<ClassTag>,
}

impl Character {
    pub fn new(triple: TraceTriple) -> Character {
        Character::with_tolerance(triple, CLASSIFY_TOL)
    }

    pub fn with_tolerance(triple: TraceTriple, tol: f64) -> Character {
        Character {
            triple,
            kappa: kappa(&triple),
            class_tags: classify_character(&triple, tol),
        }
    }

    pub fn has(&self, tag: ClassTag) -> bool {
        self.class_tags.contains(&tag)
    }

    pub fn trace_at(&self, s: Slope) -> Result<Complex64> {
        trace_at_slope(self, s, &mut TraceCache::new(&self.triple))
    }
}

impl From<TraceTriple> for Character {
    fn from(t: TraceTriple) -> Character {
        Character::new(t)
    }
}

/// Class tags whose defining conditions hold within `tol`.
///
/// `Imaginary` requires two purely imaginary coordinates and a real third
/// one, and is not given to real triples (so `(0,0,3)` is real, not
/// imaginary).
pub fn classify_character(t: &TraceTriple, tol: f64) -> BTreeSet<ClassTag> {
    let c = t.as_array();
    let mut tags = BTreeSet::new();
    let is_real = |v: &Complex64| v.im.abs() <= tol;
    let is_imag = |v: &Complex64| v.re.abs() <= tol;
    let real = c.iter().all(is_real);
    if real {
        tags.insert(ClassTag::Real);
    } else {
        let imaginary = (0..3).any(|k| {
            is_real(&c[k]) && (0..3).filter(|&j| j != k).all(|j| is_imag(&c[j]))
        });
        if imaginary {
            tags.insert(ClassTag::Imaginary);
        }
    }
    if c.iter().filter(|v| v.norm() <= tol).count() >= 2 {
        tags.insert(ClassTag::Dihedral);
    }
    if (kappa(t) - 2.0).norm() <= tol {
        tags.insert(ClassTag::Reducible);
    }
    if tags.is_empty() {
        tags.insert(ClassTag::Generic);
    }
    tags
}

/// Arithmetic needed to run Markov flips. Implemented for complex numbers
/// and for first-order jets (used for Newton's method).
pub trait FlipScalar: Copy + Mul<Output = Self> + Sub<Output = Self> {}

impl<T: Copy + Mul<Output = T> + Sub<Output = T>> FlipScalar for T {}

/// Trace at `addr` of the character whose base traces are `base`.
pub fn trace_by_address<T: FlipScalar>(base: [T; 3], addr: &SlopeAddress) -> Result<T> {
    let [x, y, z] = base;
    match addr {
        SlopeAddress::Zero => Ok(x),
        SlopeAddress::Infinity => Ok(y),
        SlopeAddress::Tree { negative, word } => {
            // Traces at (left, right, apex) of the current step.
            let (mut l, mut r, mut a) = if *negative {
                (x, y, x * y - z)
            } else {
                // Virtual step from -1/1 whose apex is 1/1.
                (x, y, z)
            };
            for letter in word.letters() {
                let (nl, nr, o) = match letter {
                    crate::farey::Letter::L => (l, a, r),
                    crate::farey::Letter::R => (a, r, l),
                };
                l = nl;
                r = nr;
                a = l * r - o;
            }
            Ok(a)
        }
    }
}

/// Memoized traces for one character.
#[derive(Clone, Debug)]
pub struct TraceCache {
    base: [Complex64; 3],
    values: HashMap<Slope, Complex64>,
    depth_cap: usize,
}

impl TraceCache {
    pub fn new(t: &TraceTriple) -> TraceCache {
        TraceCache::with_depth_cap(t, DEFAULT_DEPTH_CAP)
    }

    pub fn with_depth_cap(t: &TraceTriple, depth_cap: usize) -> TraceCache {
        let mut values = HashMap::new();
        values.insert(Slope::ZERO, t.x);
        values.insert(Slope::INFINITY, t.y);
        values.insert(Slope::ONE, t.z);
        TraceCache { base: t.as_array(), values, depth_cap }
    }

    pub fn get(&mut self, s: Slope) -> Result<Complex64> {
        if let Some(v) = self.values.get(&s) {
            return Ok(*v);
        }
        let addr = slope_to_address(s, self.depth_cap)?;
        let v = trace_by_address(self.base, &addr)?;
        self.values.insert(s, v);
        Ok(v)
    }

    pub fn insert(&mut self, s: Slope, v: Complex64) {
        self.values.insert(s, v);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Trace of the curve of slope `s`.
pub fn trace_at_slope(c: &Character, s: Slope, cache: &mut TraceCache) -> Result<Complex64> {
    if cache.base != c.triple.as_array() {
        return Err(Error::InvalidArgument("trace cache belongs to another character".into()));
    }
    cache.get(s)
}

/// Traces at the four slopes of a dual edge, from the traces at its
/// left, right and opposite vertices.
pub fn apex_trace(left: Complex64, right: Complex64, opposite: Complex64) -> Complex64 {
    left * right - opposite
}

/// Traces of the three vertices of a directed edge, computed from scratch.
pub fn edge_traces(t: &TraceTriple, e: &DualEdge) -> Result<[Complex64; 4]> {
    let mut cache = TraceCache::new(t);
    Ok([
        cache.get(e.left)?,
        cache.get(e.right)?,
        cache.get(e.opposite)?,
        cache.get(e.apex)?,
    ])
}

/// `cosh⁻¹(w)` with non-negative real part and imaginary part in `(−π, π]`.
pub fn acosh_branch(w: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let mut v = (w + (w - one).sqrt() * (w + one).sqrt()).ln();
    if v.re < 0.0 || (v.re == 0.0 && v.im < 0.0) {
        v = -v;
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    while v.im > std::f64::consts::PI {
        v.im -= two_pi;
    }
    while v.im <= -std::f64::consts::PI {
        v.im += two_pi;
    }
    v
}

/// Complex length `2·cosh⁻¹(trace/2)`.
pub fn complex_length(trace: Complex64) -> Complex64 {
    2.0 * acosh_branch(trace / 2.0)
}

/// `e^{l/2}` for `l = complex_length(trace)`: the root of `E + 1/E = trace`
/// with `|E| ≥ 1`. Computed without forming `e^l`, so it stays accurate for
/// large traces.
pub fn half_length_exp(trace: Complex64) -> Complex64 {
    let disc = (trace * trace - 4.0).sqrt();
    let a = (trace + disc) / 2.0;
    let b = (trace - disc) / 2.0;
    if a.norm() >= b.norm() {
        a
    } else {
        b
    }
}

/// A pair `(A, B)` in SL(2,C) with `tr A = x`, `tr B = y`, `tr AB = z`.
///
/// Normal form: `A = [[x, 1], [−1, 0]]` and `B = [[0, b], [−1/b, y]]` where
/// `b` is the root of `b² + z·b + 1 = 0` of larger modulus. Every finite
/// triple is realized; the oracle only refuses non-finite input or a result
/// whose traces miss the target by more than `tol`.
pub fn realize_matrices(t: &TraceTriple, tol: f64) -> Result<(Mat2, Mat2)> {
    if !t.is_finite() {
        return Err(Error::OracleUnavailable("non-finite triple".into()));
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let disc = (t.z * t.z - 4.0).sqrt();
    let r1 = (-t.z + disc) / 2.0;
    let r2 = (-t.z - disc) / 2.0;
    let b = if r1.norm() >= r2.norm() { r1 } else { r2 };
    if b.norm() == 0.0 {
        return Err(Error::OracleUnavailable("degenerate normal form".into()));
    }
    let a_mat = Mat2::new(t.x, one, -one, zero);
    let b_mat = Mat2::new(zero, b, -one / b, t.y);
    let check = [
        (a_mat.trace() - t.x).norm(),
        (b_mat.trace() - t.y).norm(),
        ((a_mat * b_mat).trace() - t.z).norm(),
        (a_mat.determinant() - one).norm(),
        (b_mat.determinant() - one).norm(),
    ];
    let scale = 1.0 + t.as_array().iter().map(|c| c.norm()).fold(0.0, f64::max);
    if check.iter().any(|e| *e > tol * scale) {
        return Err(Error::OracleUnavailable(format!("normal form misses target: {check:?}")));
    }
    Ok((a_mat, b_mat))
}

/// Matrix of the group element carried by slope `s`, built directly from
/// the generators: `X` at `0/1`, `Y` at `1/0`, and the product of the two
/// parents at every mediant. Independent of the flip recursion, so it serves
/// as an oracle for [`trace_at_slope`].
pub fn slope_matrix(gen_x: &Mat2, gen_y: &Mat2, s: Slope) -> Result<Mat2> {
    match slope_to_address(s, DEFAULT_DEPTH_CAP)? {
        SlopeAddress::Zero => Ok(*gen_x),
        SlopeAddress::Infinity => Ok(*gen_y),
        SlopeAddress::Tree { negative, word } => {
            let y_side = if negative {
                gen_y.try_inverse().ok_or_else(|| Error::OracleUnavailable("singular Y".into()))?
            } else {
                *gen_y
            };
            let (mut left, mut right) = (*gen_x, y_side);
            let mut current = left * right;
            for letter in word.letters() {
                match letter {
                    crate::farey::Letter::L => {
                        right = current;
                        current = left * current;
                    }
                    crate::farey::Letter::R => {
                        left = current;
                        current *= right;
                    }
                }
            }
            Ok(current)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(&TraceTriple::real(3.0, 3.0, 3.0)), c(-2.0, 0.0));
        assert_eq!(kappa(&TraceTriple::real(2.0, 2.0, 2.0)), c(2.0, 0.0));
        assert_eq!(kappa(&TraceTriple::real(3.0, 3.0, 4.0)), c(-4.0, 0.0));
    }

    #[test]
    fn flip_examples() {
        let t = TraceTriple::real(3.0, 3.0, 3.0);
        let f = markov_flip(&t, Coord::Z);
        assert_eq!(f, TraceTriple::real(3.0, 3.0, 6.0));
        assert_eq!(markov_flip(&f, Coord::Z), t);
        let t = TraceTriple::new(c(0.0, 0.0), c(3.0, 0.0), c(0.0, 3.0));
        assert_eq!(markov_flip(&t, Coord::X), TraceTriple::new(c(0.0, 9.0), c(3.0, 0.0), c(0.0, 3.0)));
    }

    #[test]
    fn traces_at_slopes() {
        let ch = Character::new(TraceTriple::real(3.0, 3.0, 3.0));
        let mut cache = TraceCache::new(&ch.triple);
        let tr = |s: &str, cache: &mut TraceCache| trace_at_slope(&ch, s.parse().unwrap(), cache).unwrap();
        assert_eq!(tr("0/1", &mut cache), c(3.0, 0.0));
        assert_eq!(tr("1/2", &mut cache), c(6.0, 0.0));
        assert_eq!(tr("1/3", &mut cache), c(15.0, 0.0));
        assert_eq!(tr("1/4", &mut cache), c(39.0, 0.0));
        // Flips 3 -> 6 -> 15 -> 87 along L, L, R.
        assert_eq!(tr("2/5", &mut cache), c(87.0, 0.0));
        assert_eq!(tr("-1/1", &mut cache), c(6.0, 0.0));
    }

    #[test]
    fn complex_length_examples() {
        assert!(complex_length(c(2.0, 0.0)).norm() < 1e-15);
        let l3 = complex_length(c(3.0, 0.0));
        assert!((l3 - c(2.0 * ((3.0 + 5f64.sqrt()) / 2.0).ln(), 0.0)).norm() < 1e-12);
        assert!((l3.re - 1.9248473).abs() < 1e-7);
        let lm2 = complex_length(c(-2.0, 0.0));
        assert!((lm2 - c(0.0, 2.0 * std::f64::consts::PI)).norm() < 1e-7);
        // Negative zero imaginary part must not flip the branch.
        let lneg = acosh_branch(c(-1.5, -0.0));
        assert!(lneg.im > 0.0);
        for t in [c(3.0, 1.0), c(-7.0, 2.0), c(0.5, -0.3), c(-2.5, 0.0)] {
            let l = complex_length(t);
            assert!(l.re >= 0.0);
            assert!((2.0 * (l / 2.0).cosh() - t).norm() < 1e-10);
            let e = half_length_exp(t);
            assert!((e - (l / 2.0).exp()).norm() < 1e-9 * e.norm());
        }
    }

    #[test]
    fn classification_examples() {
        use ClassTag::*;
        let tags = |t: TraceTriple| classify_character(&t, 1e-9).into_iter().collect::<Vec<_>>();
        assert_eq!(tags(TraceTriple::real(3.0, 3.0, 3.0)), vec![Real]);
        assert_eq!(tags(TraceTriple::real(0.0, 0.0, 3.0)), vec![Real, Dihedral]);
        let im = TraceTriple::new(c(0.0, 0.0), c(3.0, 0.0), c(0.0, 3.0));
        assert_eq!(tags(im), vec![Imaginary]);
        assert_eq!(kappa(&im), c(-2.0, 0.0));
        assert_eq!(tags(TraceTriple::real(2.0, 2.0, 2.0)), vec![Real, Reducible]);
        assert_eq!(tags(TraceTriple::new(c(1.0, 1.0), c(3.0, 0.0), c(2.0, 0.5))), vec![Generic]);
        let d = TraceTriple::real(0.0, 0.0, 3.0);
        assert!((d.z * d.z - (kappa(&d) + 2.0)).norm() < 1e-9);
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_complex("3").unwrap(), c(3.0, 0.0));
        assert_eq!(parse_complex("3i").unwrap(), c(0.0, 3.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("2-0.5i").unwrap(), c(2.0, -0.5));
        assert_eq!(parse_complex("1e-3+2e2i").unwrap(), c(1e-3, 200.0));
        assert!(parse_complex("abc").is_err());
        let t: TraceTriple = "0,3,3i".parse().unwrap();
        assert_eq!(t, TraceTriple::new(c(0.0, 0.0), c(3.0, 0.0), c(0.0, 3.0)));
        assert!("1,2".parse::<TraceTriple>().is_err());
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"x":[0.0,0.0],"y":[3.0,0.0],"z":[0.0,3.0]}"#);
        assert_eq!(serde_json::from_str::<TraceTriple>(&json).unwrap(), t);
    }

    #[test]
    fn oracle_examples() {
        let t = TraceTriple::real(2.0, 2.0, 2.0);
        let (a, b) = realize_matrices(&t, 1e-12).unwrap();
        assert!(((a * b).trace() - 2.0).norm() < 1e-12);
        let t = TraceTriple::real(3.0, 3.0, 3.0);
        let (a, b) = realize_matrices(&t, 1e-12).unwrap();
        assert!((a.trace() - 3.0).norm() < 1e-12);
        assert!((b.trace() - 3.0).norm() < 1e-12);
        assert!(((a * b).trace() - 3.0).norm() < 1e-12);
        let m = slope_matrix(&a, &b, "2/5".parse().unwrap()).unwrap();
        assert!((m.trace() - 87.0).norm() < 1e-9);
    }
}
