//! Exact combinatorics of the Farey graph.
//!
//! Simple closed curves on the one-holed torus are indexed by slopes `p/q` in
//! the extended rationals, two curves meeting once exactly when their slopes
//! are Farey neighbours (`|p·s − q·r| = 1`). Every search in this crate walks
//! the trivalent tree dual to the Farey tessellation, starting from the base
//! triangle `{0/1, 1/0, 1/1}`.
//!
//! # Addressing convention
//!
//! A slope outside the base triangle is reached by a unique path of mediant
//! steps. Positive slopes form the Stern–Brocot tree rooted at `1/1`: the
//! letter `L` moves toward the left parent (toward `0/1`) and `R` toward the
//! right parent (toward `1/0`), so `1/2 = L`, `2/1 = R` and `2/5 = LLR`.
//! Negative slopes live on the mirror sheet rooted at `−1/1`, which sits one
//! step away from the base triangle across the edge `{0/1, 1/0}`. On that
//! sheet `L` again moves toward `0/1`, so `−1/2` is the negative sheet with
//! word `L`.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest depth accepted by [`enumerate_slopes`].
pub const MAX_ENUMERATION_DEPTH: usize = 24;

/// Default cap on the length of a tree walk to a given slope. Every slope on
/// the walk has entries bounded by the target's, so the cap only bounds work;
/// the walk length is the sum of the continued-fraction digits, which is
/// linear in the entries around a fan.
pub const DEFAULT_DEPTH_CAP: usize = 1 << 20;

/// A reduced slope `p/q` with `q ≥ 0`; `∞` is stored as `1/0`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slope {
    p: i64,
    q: i64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl Slope {
    pub const ZERO: Slope = Slope { p: 0, q: 1 };
    pub const INFINITY: Slope = Slope { p: 1, q: 0 };
    pub const ONE: Slope = Slope { p: 1, q: 1 };
    pub const MINUS_ONE: Slope = Slope { p: -1, q: 1 };

    /// Builds the canonical slope for the vector `(p, q)`.
    pub fn new(p: i64, q: i64) -> Result<Slope> {
        if p == 0 && q == 0 {
            return Err(Error::InvalidSlope { p, q });
        }
        if p == i64::MIN || q == i64::MIN {
            return Err(Error::Overflow);
        }
        let g = gcd(p, q);
        Ok(Self::from_primitive(p / g, q / g))
    }

    /// Canonical sign for a vector already known to be primitive.
    pub(crate) fn from_primitive(p: i64, q: i64) -> Slope {
        if q == 0 {
            Slope::INFINITY
        } else if q < 0 {
            Slope { p: -p, q: -q }
        } else {
            Slope { p, q }
        }
    }

    pub fn numer(&self) -> i64 {
        self.p
    }

    pub fn denom(&self) -> i64 {
        self.q
    }

    pub fn is_infinite(&self) -> bool {
        self.q == 0
    }

    pub fn is_base(&self) -> bool {
        *self == Slope::ZERO || *self == Slope::INFINITY || *self == Slope::ONE
    }

    pub fn to_f64(&self) -> f64 {
        if self.q == 0 {
            f64::INFINITY
        } else {
            self.p as f64 / self.q as f64
        }
    }

    /// `p·q' − q·p'`, the signed intersection number of the two curves.
    pub fn cross(&self, other: &Slope) -> i128 {
        self.p as i128 * other.q as i128 - self.q as i128 * other.p as i128
    }

    pub fn is_adjacent(&self, other: &Slope) -> bool {
        self.cross(other).abs() == 1
    }

    /// Numerical order on the extended real line with `∞` placed last.
    pub fn cmp_value(&self, other: &Slope) -> Ordering {
        match (self.is_infinite(), other.is_infinite()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            _ => (self.p as i128 * other.q as i128).cmp(&(other.p as i128 * self.q as i128)),
        }
    }

    /// Number of mediant steps separating the slope from the base triangle.
    pub fn depth(&self) -> usize {
        if self.is_base() {
            return 0;
        }
        let (mut p, mut q) = (self.p.unsigned_abs(), self.q.unsigned_abs());
        let mut steps: u64 = if self.p < 0 { 1 } else { 0 };
        // Stern–Brocot depth of p/q below 1/1: sum of partial quotients − 1.
        while p != 0 && q != 0 {
            if p >= q {
                steps += p / q;
                p %= q;
            } else {
                steps += q / p;
                q %= p;
            }
        }
        (steps - 1) as usize
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl fmt::Debug for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Slope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Slope> {
        let s = s.trim();
        if s == "inf" || s == "∞" {
            return Ok(Slope::INFINITY);
        }
        let parse = |t: &str| {
            t.trim()
                .parse::<i64>()
                .map_err(|e| Error::Parse(format!("bad slope {s:?}: {e}")))
        };
        match s.split_once('/') {
            Some((p, q)) => Slope::new(parse(p)?, parse(q)?),
            None => Slope::new(parse(s)?, 1),
        }
    }
}

impl Serialize for Slope {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Slope {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An edge of the Farey graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FareyEdge {
    pub a: Slope,
    pub b: Slope,
}

impl FareyEdge {
    pub fn new(a: Slope, b: Slope) -> Result<FareyEdge> {
        if !a.is_adjacent(&b) {
            return Err(Error::NotAdjacent(a, b));
        }
        Ok(FareyEdge { a, b })
    }
}

/// A triangle of the Farey tessellation, stored with its vertices sorted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FareyTriangle {
    pub vertices: [Slope; 3],
}

impl FareyTriangle {
    pub const BASE: FareyTriangle = FareyTriangle {
        vertices: [Slope::ZERO, Slope::ONE, Slope::INFINITY],
    };

    pub fn new(a: Slope, b: Slope, c: Slope) -> Result<FareyTriangle> {
        if !(a.is_adjacent(&b) && b.is_adjacent(&c) && a.is_adjacent(&c)) {
            return Err(Error::InvalidTriangle(a, b, c));
        }
        let mut vertices = [a, b, c];
        vertices.sort();
        Ok(FareyTriangle { vertices })
    }

    pub fn contains(&self, s: &Slope) -> bool {
        self.vertices.contains(s)
    }
}

fn checked_combine(a: &Slope, b: &Slope, sign: i64) -> Result<Slope> {
    let p = a.p.checked_add(sign.checked_mul(b.p).ok_or(Error::Overflow)?);
    let q = a.q.checked_add(sign.checked_mul(b.q).ok_or(Error::Overflow)?);
    match (p, q) {
        (Some(p), Some(q)) => Ok(Slope::from_primitive(p, q)),
        _ => Err(Error::Overflow),
    }
}

/// Crosses the edge `{edge.a, edge.b}` of the triangle with third vertex
/// `third`, returning the third vertex of the triangle on the other side.
pub fn farey_mediant_flip(edge: FareyEdge, third: Slope) -> Result<Slope> {
    flip(edge.a, edge.b, third)
}

pub(crate) fn flip(a: Slope, b: Slope, third: Slope) -> Result<Slope> {
    if !a.is_adjacent(&b) {
        return Err(Error::NotAdjacent(a, b));
    }
    let sum = checked_combine(&a, &b, 1)?;
    let diff = checked_combine(&a, &b, -1)?;
    if third == sum {
        Ok(diff)
    } else if third == diff {
        Ok(sum)
    } else {
        Err(Error::InvalidTriangle(a, b, third))
    }
}

/// A 2×2 integer matrix, acting on slopes by `p/q ↦ (a·p + b·q)/(c·p + d·q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntMatrix {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl IntMatrix {
    pub const IDENTITY: IntMatrix = IntMatrix { a: 1, b: 0, c: 0, d: 1 };
    pub const R: IntMatrix = IntMatrix { a: 1, b: 1, c: 0, d: 1 };
    pub const L: IntMatrix = IntMatrix { a: 1, b: 0, c: 1, d: 1 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> IntMatrix {
        IntMatrix { a, b, c, d }
    }

    pub fn det(&self) -> i128 {
        self.a as i128 * self.d as i128 - self.b as i128 * self.c as i128
    }

    pub fn trace(&self) -> i128 {
        self.a as i128 + self.d as i128
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().abs() == 1
    }

    pub fn checked_mul(&self, o: &IntMatrix) -> Result<IntMatrix> {
        let dot = |x: i64, y: i64, z: i64, w: i64| -> Result<i64> {
            let v = x as i128 * y as i128 + z as i128 * w as i128;
            i64::try_from(v).map_err(|_| Error::Overflow)
        };
        Ok(IntMatrix {
            a: dot(self.a, o.a, self.b, o.c)?,
            b: dot(self.a, o.b, self.b, o.d)?,
            c: dot(self.c, o.a, self.d, o.c)?,
            d: dot(self.c, o.b, self.d, o.d)?,
        })
    }

    /// Inverse of a unimodular matrix.
    pub fn inverse(&self) -> Result<IntMatrix> {
        let det = self.det();
        if det.abs() != 1 {
            return Err(Error::InvalidArgument(format!(
                "matrix {self:?} has determinant {det}, expected ±1"
            )));
        }
        let s = det as i64;
        Ok(IntMatrix {
            a: s * self.d,
            b: -s * self.b,
            c: -s * self.c,
            d: s * self.a,
        })
    }

    pub fn neg(&self) -> IntMatrix {
        IntMatrix::new(-self.a, -self.b, -self.c, -self.d)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.a >= 0 && self.b >= 0 && self.c >= 0 && self.d >= 0
    }
}

impl FromStr for IntMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<IntMatrix> {
        let parts: Vec<i64> = s
            .split(',')
            .map(|t| t.trim().parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("bad matrix {s:?}: {e}")))?;
        match parts.as_slice() {
            [a, b, c, d] => Ok(IntMatrix::new(*a, *b, *c, *d)),
            _ => Err(Error::Parse(format!("matrix {s:?} needs four integers a,b,c,d"))),
        }
    }
}

/// Image of a slope under a matrix with determinant ±1.
pub fn act_on_slope(g: &IntMatrix, s: Slope) -> Result<Slope> {
    if !g.is_unimodular() {
        return Err(Error::InvalidArgument(format!("matrix {g:?} is not unimodular")));
    }
    let p = g.a as i128 * s.p as i128 + g.b as i128 * s.q as i128;
    let q = g.c as i128 * s.p as i128 + g.d as i128 * s.q as i128;
    let p = i64::try_from(p).map_err(|_| Error::Overflow)?;
    let q = i64::try_from(q).map_err(|_| Error::Overflow)?;
    // Unimodular maps send primitive vectors to primitive vectors.
    Ok(Slope::from_primitive(p, q))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    L,
    R,
}

impl Letter {
    pub fn matrix(self) -> IntMatrix {
        match self {
            Letter::L => IntMatrix::L,
            Letter::R => IntMatrix::R,
        }
    }
}

/// A word in the letters `L = [[1,0],[1,1]]` and `R = [[1,1],[0,1]]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LrWord(pub Vec<Letter>);

impl LrWord {
    pub fn new(letters: Vec<Letter>) -> LrWord {
        LrWord(letters)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    /// Product of the letter matrices, left to right.
    pub fn matrix(&self) -> Result<IntMatrix> {
        self.0
            .iter()
            .try_fold(IntMatrix::IDENTITY, |m, l| m.checked_mul(&l.matrix()))
    }

    pub fn rotations(&self) -> impl Iterator<Item = LrWord> + '_ {
        let n = self.0.len().max(1);
        (0..n).map(move |k| {
            if self.0.is_empty() {
                LrWord::default()
            } else {
                let mut v = self.0[k..].to_vec();
                v.extend_from_slice(&self.0[..k]);
                LrWord(v)
            }
        })
    }
}

impl fmt::Display for LrWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            f.write_str(match l {
                Letter::L => "L",
                Letter::R => "R",
            })?;
        }
        Ok(())
    }
}

impl FromStr for LrWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<LrWord> {
        s.trim()
            .chars()
            .map(|c| match c {
                'L' | 'l' => Ok(Letter::L),
                'R' | 'r' => Ok(Letter::R),
                _ => Err(Error::Parse(format!("bad letter {c:?} in word {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(LrWord)
    }
}

impl Serialize for LrWord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LrWord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Location of a slope in the dual tree; see the module docs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SlopeAddress {
    Zero,
    Infinity,
    Tree { negative: bool, word: LrWord },
}

impl SlopeAddress {
    pub fn depth(&self) -> usize {
        match self {
            SlopeAddress::Zero | SlopeAddress::Infinity => 0,
            SlopeAddress::Tree { negative, word } => word.len() + usize::from(*negative),
        }
    }
}

/// Path from the base triangle to `s`, refusing paths longer than `cap`.
pub fn slope_to_address(s: Slope, cap: usize) -> Result<SlopeAddress> {
    if s == Slope::ZERO {
        return Ok(SlopeAddress::Zero);
    }
    if s == Slope::INFINITY {
        return Ok(SlopeAddress::Infinity);
    }
    let negative = s.p < 0;
    let (mut p, mut q) = (s.p.unsigned_abs(), s.q.unsigned_abs());
    let mut word = Vec::new();
    // Continued fraction runs: R^{a0} L^{a1} R^{a2} ..., last run shortened by one.
    while p != q {
        let (letter, run) = if p > q {
            let k = if q == 1 { p - 1 } else { p / q };
            p -= k * q;
            (Letter::R, k)
        } else {
            let k = if p == 1 { q - 1 } else { q / p };
            q -= k * p;
            (Letter::L, k)
        };
        if word.len() as u64 + run + u64::from(negative) > cap as u64 {
            return Err(Error::DepthLimit { limit: cap });
        }
        word.extend(std::iter::repeat_n(letter, run as usize));
    }
    Ok(SlopeAddress::Tree { negative, word: LrWord(word) })
}

/// Inverse of [`slope_to_address`].
pub fn address_to_slope(addr: &SlopeAddress) -> Result<Slope> {
    match addr {
        SlopeAddress::Zero => Ok(Slope::ZERO),
        SlopeAddress::Infinity => Ok(Slope::INFINITY),
        SlopeAddress::Tree { negative, word } => {
            let mut step = if *negative { DualEdge::roots()[2] } else { DualEdge::POSITIVE_ROOT };
            for l in word.letters() {
                step = step.child(*l)?;
            }
            Ok(step.apex)
        }
    }
}

/// Word of a slope on its sheet (the sign of the slope selects the sheet).
pub fn slope_to_word(s: Slope) -> Result<LrWord> {
    match slope_to_address(s, usize::MAX)? {
        SlopeAddress::Tree { word, .. } => Ok(word),
        _ => Ok(LrWord::default()),
    }
}

/// Positive-sheet slope reached by `w` from `1/1`.
pub fn slope_from_word(w: &LrWord) -> Result<Slope> {
    address_to_slope(&SlopeAddress::Tree { negative: false, word: w.clone() })
}

/// A directed edge of the dual tree: crossing the Farey edge
/// `{left, right}` away from `opposite` reaches `apex`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DualEdge {
    pub left: Slope,
    pub right: Slope,
    pub opposite: Slope,
    pub apex: Slope,
}

impl DualEdge {
    /// The step `{0/1, 1/0}` seen from `−1/1`, whose apex is `1/1`; its
    /// children are the first positive steps. Not itself a tree edge.
    const POSITIVE_ROOT: DualEdge = DualEdge {
        left: Slope::ZERO,
        right: Slope::INFINITY,
        opposite: Slope::MINUS_ONE,
        apex: Slope::ONE,
    };

    /// The three edges leaving the base triangle, in enumeration order.
    pub fn roots() -> [DualEdge; 3] {
        [
            DualEdge {
                left: Slope::ZERO,
                right: Slope::ONE,
                opposite: Slope::INFINITY,
                apex: Slope { p: 1, q: 2 },
            },
            DualEdge {
                left: Slope::ONE,
                right: Slope::INFINITY,
                opposite: Slope::ZERO,
                apex: Slope { p: 2, q: 1 },
            },
            DualEdge {
                left: Slope::ZERO,
                right: Slope::INFINITY,
                opposite: Slope::ONE,
                apex: Slope::MINUS_ONE,
            },
        ]
    }

    /// Builds a directed edge, computing the apex.
    pub fn new(left: Slope, right: Slope, opposite: Slope) -> Result<DualEdge> {
        let apex = flip(left, right, opposite)?;
        Ok(DualEdge { left, right, opposite, apex })
    }

    pub fn child(&self, letter: Letter) -> Result<DualEdge> {
        match letter {
            Letter::L => DualEdge::new(self.left, self.apex, self.right),
            Letter::R => DualEdge::new(self.apex, self.right, self.left),
        }
    }

    pub fn children(&self) -> Result<[DualEdge; 2]> {
        Ok([self.child(Letter::L)?, self.child(Letter::R)?])
    }

    /// The triangle entered by this step.
    pub fn far_triangle(&self) -> FareyTriangle {
        let mut vertices = [self.left, self.right, self.apex];
        vertices.sort();
        FareyTriangle { vertices }
    }
}

/// Left and right Farey parents and the opposite vertex of a non-base slope:
/// the directed edge through which it is first reached from the base.
pub fn parent_edge(s: Slope, cap: usize) -> Result<Option<DualEdge>> {
    let addr = slope_to_address(s, cap)?;
    match addr {
        SlopeAddress::Zero | SlopeAddress::Infinity => Ok(None),
        SlopeAddress::Tree { negative: false, ref word } if word.is_empty() => Ok(None),
        SlopeAddress::Tree { negative, word } => {
            let mut step = if negative { DualEdge::roots()[2] } else { DualEdge::POSITIVE_ROOT };
            for l in word.letters() {
                step = step.child(*l)?;
            }
            Ok(Some(step))
        }
    }
}

/// Breadth-first walk of the dual tree to the given depth: layer `d` holds
/// the directed edges whose apex has depth `d`.
pub fn dual_layers(depth: usize) -> Result<Vec<Vec<DualEdge>>> {
    if depth > MAX_ENUMERATION_DEPTH {
        return Err(Error::DepthLimit { limit: MAX_ENUMERATION_DEPTH });
    }
    let mut layers: Vec<Vec<DualEdge>> = Vec::with_capacity(depth);
    if depth == 0 {
        return Ok(layers);
    }
    layers.push(DualEdge::roots().to_vec());
    for _ in 1..depth {
        let last = layers.last().expect("non-empty");
        let mut next = Vec::with_capacity(last.len() * 2);
        for e in last {
            next.extend(e.children()?);
        }
        layers.push(next);
    }
    Ok(layers)
}

/// All slopes within `depth` mediant steps of the base triangle, breadth
/// first with left children before right children. There are exactly
/// `3·2^depth` of them.
pub fn enumerate_slopes(depth: usize) -> Result<Vec<Slope>> {
    let layers = dual_layers(depth)?;
    let mut out = vec![Slope::ZERO, Slope::INFINITY, Slope::ONE];
    for layer in &layers {
        out.extend(layer.iter().map(|e| e.apex));
    }
    debug_assert_eq!(out.iter().collect::<HashSet<_>>().len(), out.len());
    Ok(out)
}
