//! Characters fixed by an Anosov mapping class.
//!
//! A matrix `g` acts on characters by `tr'(s) = tr(g⁻¹·s)`; in coordinates
//! the new triple holds the old traces at `g⁻¹·0/1`, `g⁻¹·1/0`, `g⁻¹·1/1`.
//! For a character fixed by `θ` the traces are constant on `⟨θ⟩`-orbits of
//! slopes, and the relative conditions and bundle identities are taken over
//! one slope (or one triangle) per orbit.
//!
//! Orbits are cut out by fundamental intervals. The fixed points `μ−` and
//! `μ+` split `R̂` into two θ-invariant arcs; on each arc θ moves every
//! point from `μ−` toward `μ+`, and `[s₀, θ·s₀)` meets each orbit once. The
//! anchor `s₀` is the simplest rational between the fixed points on the
//! bounded arc and `1/0` on the other one. The *left* arc is the one swept
//! when moving from `μ−` to `μ+` in increasing direction.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Mul, Sub};
use std::str::FromStr;

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bq::{search, BqVariant, BqVerdict, TriangleQuotient};
use crate::character::{
    complex_length, kappa, realize_matrices, trace_by_address, Character, FlipScalar, Mat2, TraceTriple,
};
use crate::error::{Error, Result};
use crate::farey::{
    act_on_slope, enumerate_slopes, slope_to_address, FareyTriangle, IntMatrix, Letter, LrWord, Slope,
    DEFAULT_DEPTH_CAP,
};
use crate::quadratic::{simplest_between, QuadIrrational};
use crate::series::{layer_rows, nu, residual_mod_2pi_i, sum_series, SeriesReport, SeriesVariant};

/// Largest coordinate mismatch accepted for a fixed character.
pub const FIXED_TOL: f64 = 1e-8;

/// Cap on the number of θ-steps used to reduce one slope.
const REDUCTION_LIMIT: usize = 100_000;

/// An element of GL(2,Z) acting on slopes and characters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingClass {
    pub matrix: IntMatrix,
    /// Canonical LR-word, present for Anosov elements of SL(2,Z).
    pub word: Option<LrWord>,
    pub trace: i64,
}

impl MappingClass {
    pub fn new(matrix: IntMatrix) -> Result<MappingClass> {
        if !matrix.is_unimodular() {
            return Err(Error::InvalidArgument(format!("matrix {matrix:?} has determinant {}", matrix.det())));
        }
        let trace = i64::try_from(matrix.trace()).map_err(|_| Error::Overflow)?;
        let word = if matrix.det() == 1 && trace.abs() > 2 { Some(lr_word(&matrix)?) } else { None };
        Ok(MappingClass { matrix, word, trace })
    }

    pub fn from_word(w: &LrWord) -> Result<MappingClass> {
        MappingClass::new(w.matrix()?)
    }

    /// Hyperbolic and orientation preserving.
    pub fn is_anosov(&self) -> bool {
        self.matrix.det() == 1 && self.trace.abs() > 2
    }

    fn require_anosov(&self) -> Result<()> {
        if self.matrix.det() != 1 {
            return Err(Error::InvalidArgument("mapping class must have determinant 1".into()));
        }
        if self.trace.abs() <= 2 {
            return Err(Error::NotAnosov { trace: self.trace });
        }
        Ok(())
    }
}

impl FromStr for MappingClass {
    type Err = Error;

    /// Accepts `a,b,c,d` or an LR-word such as `RL`.
    fn from_str(s: &str) -> Result<MappingClass> {
        if s.contains(',') {
            MappingClass::new(s.parse()?)
        } else {
            MappingClass::from_word(&s.parse()?)
        }
    }
}

impl fmt::Display for MappingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.matrix;
        write!(f, "[[{},{}],[{},{}]]", m.a, m.b, m.c, m.d)
    }
}

fn not_anosov(m: &IntMatrix) -> Result<i64> {
    if m.det() != 1 {
        return Err(Error::InvalidArgument(format!("matrix {m:?} must have determinant 1")));
    }
    let tr = i64::try_from(m.trace()).map_err(|_| Error::Overflow)?;
    if tr.abs() <= 2 {
        return Err(Error::NotAnosov { trace: tr });
    }
    Ok(tr)
}

/// Factors a nonnegative matrix of determinant 1 into `R` and `L`.
fn factor_nonnegative(m: IntMatrix) -> Result<LrWord> {
    let mut cur = m;
    let mut letters = Vec::new();
    while cur != IntMatrix::IDENTITY {
        if cur.a >= cur.c && cur.b >= cur.d {
            cur = IntMatrix::new(cur.a - cur.c, cur.b - cur.d, cur.c, cur.d);
            letters.push(Letter::R);
        } else if cur.c >= cur.a && cur.d >= cur.b {
            cur = IntMatrix::new(cur.a, cur.b, cur.c - cur.a, cur.d - cur.b);
            letters.push(Letter::L);
        } else {
            return Err(Error::InvalidArgument(format!("{m:?} is not a positive word")));
        }
    }
    Ok(LrWord(letters))
}

fn floor_quad(x: &QuadIrrational) -> i64 {
    let mut n = x.to_f64().floor() as i64;
    while x.cmp_slope(Slope::from_primitive(n, 1)) == Ordering::Less {
        n -= 1;
    }
    while x.cmp_slope(Slope::from_primitive(n + 1, 1)) != Ordering::Less {
        n += 1;
    }
    n
}

fn power(m: &IntMatrix, k: u64) -> Result<IntMatrix> {
    (0..k).try_fold(IntMatrix::IDENTITY, |acc, _| acc.checked_mul(m))
}

/// A cyclic LR-word whose product is conjugate in SL(2,Z) to `±m`.
///
/// Nonnegative `±m` is factored exactly (so `[[2,1],[1,1]]` gives `RL` and
/// `[[1,1],[1,2]]` gives `LR`); otherwise the word is read off the periodic
/// continued fraction of the attracting fixed point and the lexicographically
/// least rotation (`L < R`) is returned.
pub fn lr_word(m: &IntMatrix) -> Result<LrWord> {
    let tr = not_anosov(m)?;
    let pos = if tr > 0 { *m } else { m.neg() };
    if pos.is_nonnegative() {
        return factor_nonnegative(pos);
    }
    let d = (tr as i128) * (tr as i128) - 4;
    // ξ = (P + √D)/Q with Q | D − P²; g tracks ξ_k = g·μ+.
    let (mut p, mut q) = ((pos.a - pos.d) as i128, 2 * pos.c as i128);
    let mut g = IntMatrix::IDENTITY;
    let j = IntMatrix::new(0, 1, 1, 0);
    let step = |p: i128, q: i128| -> (i64, i128, i128) {
        let n = floor_quad(&QuadIrrational::new(p, 1, q, d));
        let np = n as i128 * q - p;
        (n, np, (d - np * np) / q)
    };
    let reduced = |p: i128, q: i128| {
        let x = QuadIrrational::new(p, 1, q, d);
        let conj = QuadIrrational::new(p, -1, q, d);
        x.cmp_slope(Slope::ONE) == Ordering::Greater
            && conj.cmp_slope(Slope::ZERO) == Ordering::Less
            && conj.cmp_slope(Slope::from_primitive(-1, 1)) == Ordering::Greater
    };
    let mut k = 0usize;
    while !(reduced(p, q) && k.is_multiple_of(2)) {
        let (n, np, nq) = step(p, q);
        let shift = IntMatrix::new(1, -n, 0, 1);
        g = j.checked_mul(&shift.checked_mul(&g)?)?;
        p = np;
        q = nq;
        k += 1;
        if k > 10_000 {
            return Err(Error::ResourceLimit("continued fraction did not become periodic".into()));
        }
    }
    let mut period = Vec::new();
    let (p0, q0) = (p, q);
    loop {
        let (n, np, nq) = step(p, q);
        period.push(n);
        p = np;
        q = nq;
        if (p, q) == (p0, q0) {
            break;
        }
    }
    if period.len() % 2 == 1 {
        period.extend(period.clone());
    }
    let mut letters = Vec::new();
    for (i, n) in period.iter().enumerate() {
        let l = if i % 2 == 0 { Letter::R } else { Letter::L };
        letters.extend(std::iter::repeat_n(l, *n as usize));
    }
    let w0 = LrWord(letters.clone()).matrix()?;
    let target = g.checked_mul(&pos)?.checked_mul(&g.inverse()?)?;
    let mut wj = w0;
    let mut reps = 1usize;
    while wj.trace() <= target.trace() {
        if wj == target {
            let word = LrWord(letters.repeat(reps));
            return Ok(word.rotations().min().unwrap_or_default());
        }
        wj = wj.checked_mul(&w0)?;
        reps += 1;
    }
    Err(Error::InvalidArgument(format!("no positive conjugate found for {m:?}")))
}

/// Repelling and attracting fixed points on `R̂`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisPair {
    pub mu_minus: QuadIrrational,
    pub mu_plus: QuadIrrational,
}

/// Solves `c·s² + (d − a)·s − b = 0`; the attracting root is where
/// `|c·s + d| > 1`.
pub fn axis_points(m: &IntMatrix) -> Result<AxisPair> {
    let tr = not_anosov(m)? as i128;
    let disc = tr * tr - 4;
    let sigma = tr.signum();
    let (a, d, c) = (m.a as i128, m.d as i128, m.c as i128);
    Ok(AxisPair {
        mu_plus: QuadIrrational::new(a - d, sigma, 2 * c, disc),
        mu_minus: QuadIrrational::new(a - d, -sigma, 2 * c, disc),
    })
}

/// First-order jet in three complex variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: Complex64,
    pub grad: [Complex64; 3],
}

impl Jet {
    pub fn variable(value: Complex64, index: usize) -> Jet {
        let mut grad = [Complex64::new(0.0, 0.0); 3];
        grad[index] = Complex64::new(1.0, 0.0);
        Jet { value, grad }
    }
}

impl Mul for Jet {
    type Output = Jet;

    // Product rule.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, o: Jet) -> Jet {
        Jet {
            value: self.value * o.value,
            grad: std::array::from_fn(|i| self.value * o.grad[i] + self.grad[i] * o.value),
        }
    }
}

impl std::ops::Add for Jet {
    type Output = Jet;

    fn add(self, o: Jet) -> Jet {
        Jet {
            value: self.value + o.value,
            grad: std::array::from_fn(|i| self.grad[i] + o.grad[i]),
        }
    }
}

impl Sub for Jet {
    type Output = Jet;

    fn sub(self, o: Jet) -> Jet {
        Jet {
            value: self.value - o.value,
            grad: std::array::from_fn(|i| self.grad[i] - o.grad[i]),
        }
    }
}

/// The induced action on any flip-compatible scalar type.
pub fn apply_generic<T: FlipScalar>(base: [T; 3], g: &IntMatrix) -> Result<[T; 3]> {
    let inv = g.inverse()?;
    let mut out = [base[0]; 3];
    for (k, s) in [Slope::ZERO, Slope::INFINITY, Slope::ONE].into_iter().enumerate() {
        let addr = slope_to_address(act_on_slope(&inv, s)?, DEFAULT_DEPTH_CAP)?;
        out[k] = trace_by_address(base, &addr)?;
    }
    Ok(out)
}

/// Triple of the character `[ρ ∘ g⁻¹]`: its trace at `g·s` equals the old
/// trace at `s`.
pub fn apply_mapping_class(t: &TraceTriple, g: &IntMatrix) -> Result<TraceTriple> {
    Ok(TraceTriple::from_array(apply_generic(t.as_array(), g)?))
}

pub fn apply_word(t: &TraceTriple, w: &LrWord) -> Result<TraceTriple> {
    apply_mapping_class(t, &w.matrix()?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedOptions {
    /// Starts per coordinate; `grid³` starts in total.
    pub grid: usize,
    pub radius: f64,
    pub newton_tol: f64,
    pub max_roots: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FixedOptions {
    fn default() -> FixedOptions {
        FixedOptions {
            grid: 13,
            radius: 6.0,
            newton_tol: 1e-11,
            max_roots: 64,
            max_iter: 80,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedCharacter {
    pub triple: TraceTriple,
    pub residual: f64,
}

/// Largest of `|θ(t) − t|` (coordinatewise) and `|κ(t) − κ|`.
pub fn fixed_residual(t: &TraceTriple, theta: &IntMatrix, target_kappa: Complex64) -> Result<f64> {
    let img = apply_mapping_class(t, theta)?;
    Ok(img.distance(t).max((kappa(t) - target_kappa).norm()))
}

fn newton(theta: &IntMatrix, target: Complex64, start: [Complex64; 3], opts: &FixedOptions) -> Option<[Complex64; 3]> {
    let mut t = start;
    for _ in 0..opts.max_iter {
        let jets: [Jet; 3] = std::array::from_fn(|i| Jet::variable(t[i], i));
        let img = apply_generic(jets, theta).ok()?;
        let [x, y, z] = jets;
        let two = Jet { value: Complex64::new(2.0, 0.0), grad: [Complex64::new(0.0, 0.0); 3] };
        let k = x * x + y * y + z * z - x * y * z - two;
        let rows = [img[0] - jets[0], img[1] - jets[1], img[2] - jets[2], k];
        let f = SVector::<Complex64, 4>::from_fn(|i, _| {
            if i == 3 {
                rows[3].value - target
            } else {
                rows[i].value
            }
        });
        let jac = SMatrix::<Complex64, 4, 3>::from_fn(|i, j| rows[i].grad[j]);
        let step = jac.svd(true, true).solve(&(-f), 1e-14).ok()?;
        for (ti, si) in t.iter_mut().zip(step.iter()) {
            *ti += si;
        }
        if t.iter().any(|c| !c.re.is_finite() || !c.im.is_finite() || c.norm() > 1e6) {
            return None;
        }
        if step.norm() <= 1e-15 * (1.0 + t.iter().map(|c| c.norm()).fold(0.0, f64::max)) {
            break;
        }
    }
    Some(t)
}

/// Characters with `θ(t) = t` and `κ(t) = κ`, by multistart Gauss–Newton.
///
/// Starts are drawn from a seeded generator in the polydisk of the given
/// radius, so results are reproducible. Roots closer than `1e-6` (relative)
/// are merged; the list may be incomplete.
pub fn fixed_characters(w: &LrWord, target_kappa: Complex64, opts: &FixedOptions) -> Result<Vec<FixedCharacter>> {
    fixed_characters_of(&w.matrix()?, target_kappa, opts)
}

pub fn fixed_characters_of(theta: &IntMatrix, target_kappa: Complex64, opts: &FixedOptions) -> Result<Vec<FixedCharacter>> {
    not_anosov(theta)?;
    if opts.grid == 0 || !(opts.radius > 0.0) || !(opts.newton_tol > 0.0) {
        return Err(Error::InvalidArgument("grid, radius and newton_tol must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = opts.grid.pow(3);
    let starts: Vec<[Complex64; 3]> = (0..n)
        .map(|_| {
            std::array::from_fn(|_| {
                let r = opts.radius * rng.random::<f64>().sqrt();
                let a = std::f64::consts::TAU * rng.random::<f64>();
                Complex64::from_polar(r, a)
            })
        })
        .collect();
    let found: Vec<FixedCharacter> = starts
        .par_iter()
        .filter_map(|s| {
            let t = TraceTriple::from_array(newton(theta, target_kappa, *s, opts)?);
            let residual = fixed_residual(&t, theta, target_kappa).ok()?;
            (residual < opts.newton_tol).then_some(FixedCharacter { triple: t, residual })
        })
        .collect();
    let mut roots: Vec<FixedCharacter> = Vec::new();
    for f in found {
        let scale = 1.0 + f.triple.as_array().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let merge = (10.0 * opts.newton_tol).max(1e-6 * scale);
        match roots.iter_mut().find(|r| r.triple.distance(&f.triple) <= merge) {
            Some(r) if f.residual < r.residual => *r = f,
            Some(_) => {}
            None => roots.push(f),
        }
    }
    let key = |t: &TraceTriple| {
        let a = t.as_array();
        [a[0].re, a[0].im, a[1].re, a[1].im, a[2].re, a[2].im]
    };
    roots.sort_by(|a, b| {
        key(&a.triple)
            .iter()
            .zip(key(&b.triple).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    roots.truncate(opts.max_roots);
    Ok(roots)
}

/// Which complementary arc of the fixed points a slope lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// The cyclic group generated by an Anosov θ acting on the tessellation.
#[derive(Clone, Debug)]
pub struct ThetaQuotient {
    theta: IntMatrix,
    theta_inv: IntMatrix,
    lo: QuadIrrational,
    hi: QuadIrrational,
    /// `μ−` is the smaller fixed point.
    minus_is_lo: bool,
    inner_anchor: (Slope, Slope),
    outer_anchor: (Slope, Slope),
}

impl ThetaQuotient {
    pub fn new(theta: &MappingClass) -> Result<ThetaQuotient> {
        theta.require_anosov()?;
        let axis = axis_points(&theta.matrix)?;
        let minus_is_lo = axis.mu_minus.cmp_same_radicand(&axis.mu_plus) == Ordering::Less;
        let (lo, hi) = if minus_is_lo { (axis.mu_minus, axis.mu_plus) } else { (axis.mu_plus, axis.mu_minus) };
        let inner = simplest_between(&lo, &hi);
        let m = theta.matrix;
        Ok(ThetaQuotient {
            theta: m,
            theta_inv: m.inverse()?,
            lo,
            hi,
            minus_is_lo,
            inner_anchor: (inner, act_on_slope(&m, inner)?),
            outer_anchor: (Slope::INFINITY, act_on_slope(&m, Slope::INFINITY)?),
        })
    }

    fn inner(&self, s: Slope) -> bool {
        self.lo.cmp_slope(s) == Ordering::Less && self.hi.cmp_slope(s) == Ordering::Greater
    }

    pub fn side(&self, s: Slope) -> Side {
        // Increasing from μ− enters the bounded arc exactly when μ− is smaller.
        if self.inner(s) == self.minus_is_lo {
            Side::Left
        } else {
            Side::Right
        }
    }

    /// Order along the arc holding both slopes, oriented from `μ−` to `μ+`.
    fn arc_cmp(&self, a: Slope, b: Slope) -> Ordering {
        let o = if self.inner(a) {
            a.cmp_value(&b)
        } else {
            let class = |s: Slope| {
                if s.is_infinite() {
                    1
                } else if self.hi.cmp_slope(s) == Ordering::Less {
                    0
                } else {
                    2
                }
            };
            class(a).cmp(&class(b)).then_with(|| a.cmp_value(&b))
        };
        // Inner arc runs lo → hi; outer arc runs hi → ∞ → lo.
        let forward = if self.inner(a) { self.minus_is_lo } else { !self.minus_is_lo };
        if forward {
            o
        } else {
            o.reverse()
        }
    }

    /// `(rep, k)` with `θ^k·s = rep` in the fundamental interval of its arc.
    pub fn reduce(&self, s: Slope) -> Result<(Slope, i64)> {
        let (start, end) = if self.inner(s) { self.inner_anchor } else { self.outer_anchor };
        let (mut v, mut k) = (s, 0i64);
        let mut steps = 0usize;
        while self.arc_cmp(v, start) == Ordering::Less {
            v = act_on_slope(&self.theta, v)?;
            k += 1;
            steps += 1;
            if steps > REDUCTION_LIMIT {
                return Err(Error::ResourceLimit(format!("reducing {s} under θ")));
            }
        }
        while self.arc_cmp(v, end) != Ordering::Less {
            v = act_on_slope(&self.theta_inv, v)?;
            k -= 1;
            steps += 1;
            if steps > REDUCTION_LIMIT {
                return Err(Error::ResourceLimit(format!("reducing {s} under θ")));
            }
        }
        Ok((v, k))
    }

    fn theta_power(&self, k: i64) -> Result<IntMatrix> {
        if k >= 0 {
            power(&self.theta, k as u64)
        } else {
            power(&self.theta_inv, k.unsigned_abs())
        }
    }
}

impl TriangleQuotient for ThetaQuotient {
    fn canonicalize(&self, t: &FareyTriangle) -> Result<IntMatrix> {
        let mut best = i64::MAX;
        for v in t.vertices {
            best = best.min(self.reduce(v)?.1);
        }
        self.theta_power(best)
    }

    fn slope_class(&self, s: Slope) -> Result<Slope> {
        Ok(self.reduce(s)?.0)
    }
}

fn require_fixed(t: &TraceTriple, theta: &IntMatrix) -> Result<()> {
    let img = apply_mapping_class(t, theta)?;
    let scale = 1.0 + t.as_array().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let residual = img.distance(t);
    if residual > FIXED_TOL * scale {
        return Err(Error::NotFixed { residual });
    }
    Ok(())
}

/// The conditions on `𝒞/⟨θ⟩`: same search and certificate format as the
/// absolute decision, with triangles identified along θ-orbits.
pub fn relative_bq(c: &Character, theta: &MappingClass, fuel: u64) -> Result<BqVerdict> {
    if fuel == 0 {
        return Err(Error::InvalidArgument("fuel must be positive".into()));
    }
    let q = ThetaQuotient::new(theta)?;
    require_fixed(&c.triple, &theta.matrix)?;
    search(&c.triple, BqVariant::Standard, fuel, &q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitRepresentatives {
    pub all: Vec<Slope>,
    pub left: Vec<Slope>,
}

/// One slope per `⟨θ⟩`-orbit met by the slopes of depth at most `depth`.
pub fn orbit_representatives(theta: &MappingClass, depth: usize) -> Result<OrbitRepresentatives> {
    let q = ThetaQuotient::new(theta)?;
    let mut reps = BTreeSet::new();
    for s in enumerate_slopes(depth)? {
        reps.insert(q.reduce(s)?.0);
    }
    let mut all: Vec<Slope> = reps.into_iter().collect();
    all.sort_by(|a, b| a.cmp_value(b));
    let left = all.iter().copied().filter(|s| q.side(*s) == Side::Left).collect();
    Ok(OrbitRepresentatives { all, left })
}

/// Elementary factors `(letter, exponent)` with product `g`; `−I` is
/// written as `(R L⁻¹ R)²`.
pub fn sl2z_factors(g: &IntMatrix) -> Result<Vec<(Letter, i64)>> {
    if g.det() != 1 {
        return Err(Error::InvalidArgument(format!("{g:?} is not in SL(2,Z)")));
    }
    let mut ops = Vec::new();
    let mut cur = *g;
    while cur.c != 0 {
        if cur.a == 0 {
            let k = -cur.c;
            cur = IntMatrix::new(cur.a - k * cur.c, cur.b - k * cur.d, cur.c, cur.d);
            ops.push((Letter::R, k));
        } else if cur.a.abs() > cur.c.abs() {
            let k = cur.a / cur.c;
            cur = IntMatrix::new(cur.a - k * cur.c, cur.b - k * cur.d, cur.c, cur.d);
            ops.push((Letter::R, k));
        } else {
            let k = cur.c / cur.a;
            cur = IntMatrix::new(cur.a, cur.b, cur.c - k * cur.a, cur.d - k * cur.b);
            ops.push((Letter::L, k));
        }
    }
    if cur.a == -1 {
        for _ in 0..2 {
            ops.extend([(Letter::R, 1), (Letter::L, -1), (Letter::R, 1)]);
        }
        cur = cur.neg();
    }
    if cur.b != 0 {
        ops.push((Letter::R, cur.b));
    }
    Ok(ops)
}

fn mat_pow(m: &Mat2, k: i64) -> Mat2 {
    let base = if k >= 0 { *m } else { Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) };
    (0..k.unsigned_abs()).fold(Mat2::identity(), |acc, _| acc * base)
}

/// Generators of `ρ ∘ φ` where `φ` is the automorphism inducing `g` on
/// slopes: the trace of the result at `s` is the trace of `(x, y)` at `g·s`.
pub fn substitute(x: &Mat2, y: &Mat2, g: &IntMatrix) -> Result<(Mat2, Mat2)> {
    let (mut p, mut q) = (*x, *y);
    for (letter, k) in sl2z_factors(g)? {
        match letter {
            Letter::L => q *= mat_pow(&p, k),
            Letter::R => p *= mat_pow(&q, k),
        }
    }
    Ok((p, q))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugatorReport {
    /// Trace of `A` normalized to `det A = 1`; sign fixed by `Re ≥ 0`.
    pub trace_a: Complex64,
    pub length_a: Complex64,
    /// Largest `|A·ρ(g)·A⁻¹ − ρ(θ⁻¹ g)|` over the generators.
    pub conjugation_residual: f64,
    pub singular_values: Vec<f64>,
}

/// Solves `A·ρ(α)·A⁻¹ = ρ(θ⁻¹(α))` for the generators.
pub fn recover_conjugator(c: &Character, theta: &MappingClass, tol: f64) -> Result<ConjugatorReport> {
    theta.require_anosov()?;
    require_fixed(&c.triple, &theta.matrix)?;
    let (x, y) = realize_matrices(&c.triple, tol.max(1e-9))?;
    let (px, py) = substitute(&x, &y, &theta.matrix.inverse()?)?;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let basis = |k: usize| {
        let mut e = Mat2::zeros();
        e[(k / 2, k % 2)] = one;
        e
    };
    let mut sys = SMatrix::<Complex64, 8, 4>::from_element(zero);
    for k in 0..4 {
        let e = basis(k);
        let r1 = e * x - px * e;
        let r2 = e * y - py * e;
        for i in 0..4 {
            sys[(i, k)] = r1[(i / 2, i % 2)];
            sys[(4 + i, k)] = r2[(i / 2, i % 2)];
        }
    }
    let svd = sys.svd(false, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let v_t = svd.v_t.ok_or_else(|| Error::OracleUnavailable("SVD failed".into()))?;
    let (imax, imin) = (0..4).fold((0, 0), |(mx, mn), i| {
        (if sv[i] > sv[mx] { i } else { mx }, if sv[i] < sv[mn] { i } else { mn })
    });
    let second = (0..4).filter(|&i| i != imin).map(|i| sv[i]).fold(f64::INFINITY, f64::min);
    if second <= 1e-8 * sv[imax].max(1e-300) {
        return Err(Error::RankDeficient(sv));
    }
    let row = v_t.row(imin);
    let mut a = Mat2::new(row[0].conj(), row[1].conj(), row[2].conj(), row[3].conj());
    let det = a.determinant();
    if det.norm() <= 1e-12 {
        return Err(Error::RankDeficient(sv));
    }
    a /= det.sqrt();
    let inv = a.try_inverse().ok_or_else(|| Error::RankDeficient(sv.clone()))?;
    let residual = (a * x * inv - px).norm().max((a * y * inv - py).norm());
    if residual > tol.max(1e-9) * (1.0 + x.norm() + y.norm()) {
        return Err(Error::NotFixed { residual });
    }
    let mut trace_a = a.trace();
    if trace_a.re < 0.0 || (trace_a.re == 0.0 && trace_a.im < 0.0) {
        trace_a = -trace_a;
    }
    Ok(ConjugatorReport {
        trace_a,
        length_a: complex_length(trace_a),
        conjugation_residual: residual,
        singular_values: sv,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleReport {
    pub full: SeriesReport,
    pub half: SeriesReport,
    pub conjugator: ConjugatorReport,
    /// `+1` when the half sum is nearer `l(A)`, `−1` when nearer `−l(A)`.
    pub sign: i8,
    pub residual_plus: Complex64,
    pub residual_minus: Complex64,
}

fn orbit_series(
    c: &Character,
    q: &ThetaQuotient,
    nu_value: Complex64,
    tol: f64,
    max_terms: usize,
    left_only: bool,
    target: Complex64,
) -> Result<SeriesReport> {
    let raw = sum_series(&c.triple, nu_value, SeriesVariant::General, tol, max_terms, q, |s| {
        Ok(!left_only || q.side(s) == Side::Left)
    })?;
    let residual = |v: Complex64, t: Complex64| residual_mod_2pi_i(v, t);
    Ok(SeriesReport {
        variant: SeriesVariant::General,
        nu: nu_value,
        target,
        partial_sum: raw.sum,
        term_count: raw.term_count,
        tail_bound: raw.tail_bound,
        residual: residual(raw.sum, target),
        converged: raw.divergence.is_none() && raw.tail_bound <= tol,
        diverged: raw.divergence.is_some(),
        divergence: raw.divergence,
        pruned_subtrees: raw.pruned,
        layers: layer_rows(&raw, target, residual),
    })
}

/// Sums over `𝒞/⟨θ⟩` (target `0`) and over its left half (target `±l(A)`).
pub fn evaluate_bundle_identities(c: &Character, theta: &MappingClass, tol: f64, max_terms: usize) -> Result<BundleReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let q = ThetaQuotient::new(theta)?;
    require_fixed(&c.triple, &theta.matrix)?;
    let conjugator = recover_conjugator(c, theta, 1e-6)?;
    let nu_value = nu(c.kappa);
    let zero = Complex64::new(0.0, 0.0);
    let full = orbit_series(c, &q, nu_value, tol, max_terms, false, zero)?;
    let l = conjugator.length_a;
    let mut half = orbit_series(c, &q, nu_value, tol, max_terms, true, l)?;
    let residual_plus = residual_mod_2pi_i(half.partial_sum, l);
    let residual_minus = residual_mod_2pi_i(half.partial_sum, -l);
    let sign = if residual_plus.norm() <= residual_minus.norm() { 1 } else { -1 };
    if sign < 0 {
        half.target = -l;
        half.residual = residual_minus;
        for row in &mut half.layers {
            row.cumulative_residual = residual_mod_2pi_i(row.cumulative_residual + l, -l);
        }
    }
    Ok(BundleReport { full, half, conjugator, sign, residual_plus, residual_minus })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(a: i64, b: i64, c: i64, d: i64) -> IntMatrix {
        IntMatrix::new(a, b, c, d)
    }

    #[test]
    fn words_of_examples() {
        assert_eq!(lr_word(&m(2, 1, 1, 1)).unwrap().to_string(), "RL");
        assert_eq!(lr_word(&m(1, 1, 1, 2)).unwrap().to_string(), "LR");
        assert_eq!(lr_word(&m(5, 2, 2, 1)).unwrap().to_string(), "RRLL");
        assert!(matches!(lr_word(&m(1, 1, 0, 1)), Err(Error::NotAnosov { trace: 2 })));
    }

    #[test]
    fn words_of_non_positive_matrices() {
        // Conjugates of RL and of R²L² by assorted matrices.
        for (w, g) in [("RL", m(1, 2, 0, 1)), ("RRLL", m(2, -1, 1, 0)), ("RRRL", m(3, 1, -1, 0))] {
            let base = w.parse::<LrWord>().unwrap().matrix().unwrap();
            let conj = g.checked_mul(&base).unwrap().checked_mul(&g.inverse().unwrap()).unwrap();
            let word = lr_word(&conj).unwrap();
            let expected = w.parse::<LrWord>().unwrap().rotations().min().unwrap();
            assert_eq!(word, expected, "{conj:?}");
            assert_eq!(lr_word(&conj.neg()).unwrap(), expected);
        }
    }

    #[test]
    fn axis_examples() {
        let a = axis_points(&m(2, 1, 1, 1)).unwrap();
        assert!((a.mu_plus.to_f64() - 1.618033988749895).abs() < 1e-12);
        assert!((a.mu_minus.to_f64() + 0.6180339887498949).abs() < 1e-12);
        let a = axis_points(&m(1, 1, 1, 2)).unwrap();
        assert!((a.mu_plus.to_f64() - 0.6180339887498949).abs() < 1e-12);
        assert!((a.mu_minus.to_f64() + 1.618033988749895).abs() < 1e-12);
        assert!(axis_points(&m(1, 1, 0, 1)).is_err());
    }

    #[test]
    fn factors_recompose() {
        for g in [m(2, 1, 1, 1), m(-1, 0, 0, -1), m(0, 1, -1, 0), m(5, 2, 2, 1), m(-3, 2, 1, -1), m(1, -7, 0, 1)] {
            let prod = sl2z_factors(&g).unwrap().into_iter().fold(IntMatrix::IDENTITY, |acc, (l, k)| {
                let base = if k >= 0 { l.matrix() } else { l.matrix().inverse().unwrap() };
                acc.checked_mul(&power(&base, k.unsigned_abs()).unwrap()).unwrap()
            });
            assert_eq!(prod, g);
        }
    }

    #[test]
    fn substitution_matches_trace_action() {
        let t: TraceTriple = "1.3+0.2i,2.1-0.7i,0.4+1.1i".parse().unwrap();
        let (x, y) = realize_matrices(&t, 1e-9).unwrap();
        for g in [m(2, 1, 1, 1), m(1, 1, 1, 2), m(0, -1, 1, 0), m(-1, 0, 0, -1), m(3, 5, 1, 2)] {
            let (p, q) = substitute(&x, &y, &g).unwrap();
            let expect = apply_mapping_class(&t, &g.inverse().unwrap()).unwrap();
            let got = TraceTriple::new(p.trace(), q.trace(), (p * q).trace());
            assert!(got.distance(&expect) < 1e-9, "{g:?}: {got} vs {expect}");
        }
    }

    #[test]
    fn rl_fixed_set() {
        let theta = m(2, 1, 1, 1);
        // x = z and xy = x + y.
        let x = Complex64::new(1.5, 0.5);
        let t = TraceTriple::new(x, x / (x - 1.0), x);
        assert!(apply_mapping_class(&t, &theta).unwrap().distance(&t) < 1e-12);
    }

    #[test]
    fn orbit_representatives_example() {
        let theta: MappingClass = "2,1,1,1".parse().unwrap();
        let reps = orbit_representatives(&theta, 6).unwrap();
        let set: BTreeSet<Slope> = reps.all.iter().copied().collect();
        assert!(!(set.contains(&Slope::ZERO) && set.contains(&Slope::ONE)));
        for s in &reps.all {
            assert!(!set.contains(&act_on_slope(&theta.matrix, *s).unwrap()));
        }
        let q = ThetaQuotient::new(&theta).unwrap();
        assert_ne!(q.side("-1/1".parse().unwrap()), q.side(Slope::ZERO));
        assert_eq!(q.side(Slope::ZERO), Side::Left);
    }

    #[test]
    fn reducible_conjugator_is_rank_deficient() {
        let c = Character::new("2,2,2".parse().unwrap());
        let theta: MappingClass = "RL".parse().unwrap();
        assert!(matches!(recover_conjugator(&c, &theta, 1e-8), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn non_fixed_character_rejected() {
        let c = Character::new("3,3,4".parse().unwrap());
        let theta: MappingClass = "RL".parse().unwrap();
        assert!(matches!(relative_bq(&c, &theta, 1000), Err(Error::NotFixed { .. })));
    }
}
