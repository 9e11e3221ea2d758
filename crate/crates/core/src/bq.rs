//! Deciding the Bowditch Q-conditions.
//!
//! The search walks the dual tree from the base triangle. A directed edge
//! `{a, b} → s` (away from `c`) is *escaping* when `|tr a|, |tr b| ≥ 2 + μ`
//! and `|tr s| ≥ |tr c|`: then `|tr s| ≥ |tr a|·|tr b|/2`, and by induction
//! every trace behind the edge is larger than `2 + μ` and strictly grows
//! along each path, so the whole subtree can be discarded.
//!
//! Edges next to a curve `a` of small trace never escape, because `a` has
//! infinitely many neighbours. Around such a curve the neighbour traces obey
//! `n_{k+1} = tr(a)·n_k − n_{k−1}`, which is solved in closed form; once the
//! closed form shows the remaining neighbours are all large, the rest of the
//! fan is certified in one step (a *fan* boundary edge).
//!
//! When the explored region closes up, the region together with its boundary
//! edges is a certificate that can be re-checked from scratch by
//! [`verify_certificate`].

use std::collections::{HashMap, HashSet, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::character::{half_length_exp, Character, ClassTag, TraceCache, TraceTriple};
use crate::error::{Error, Result};
use crate::farey::{act_on_slope, flip, DualEdge, FareyTriangle, IntMatrix, Slope, MAX_ENUMERATION_DEPTH};

/// Margin μ in the escaping rule.
pub const ESCAPE_MARGIN: f64 = 1e-6;

/// Tolerance for deciding that a trace lies in the forbidden interval.
pub const WITNESS_TOL: f64 = 1e-9;

const DESCENT_LIMIT: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BqVariant {
    /// Condition (1) forbids traces in the closed interval `[−2, 2]`.
    Standard,
    /// Condition (1′) forbids only the open interval `(−2, 2)`.
    Extended,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BqStatus {
    Satisfies,
    Fails,
    Inconclusive,
}

/// Evidence that the conditions fail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// A curve whose trace lies in the forbidden interval.
    ForbiddenTrace { slope: Slope, trace: Complex64 },
    /// `κ = 2`: reducible characters never satisfy the conditions.
    ReducibleKappa { kappa: Complex64 },
    /// A curve of trace `±2` whose neighbours all share one trace modulus,
    /// so infinitely many curves have bounded trace.
    PeriodicBoundedOrbit {
        center: Slope,
        center_trace: Complex64,
        neighbours: [Slope; 2],
        neighbour_traces: [Complex64; 2],
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryKind {
    Escaping,
    /// The rest of the fan around `center` (one endpoint of the edge).
    Fan { center: Slope },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub edge: DualEdge,
    /// Traces at left, right, opposite and apex.
    pub traces: [Complex64; 4],
    pub kind: BoundaryKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionTriangle {
    pub triangle: FareyTriangle,
    pub traces: [Complex64; 3],
}

/// A finite explored region whose outgoing edges are all certified.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SinkCertificate {
    pub region: Vec<RegionTriangle>,
    pub boundary: Vec<BoundaryEdge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BqVerdict {
    pub status: BqStatus,
    pub variant: BqVariant,
    pub certificate: Option<SinkCertificate>,
    pub witness: Option<Witness>,
    pub fuel_spent: u64,
}

/// Picks one representative triangle per orbit of a symmetry group acting
/// on the Farey tessellation.
pub trait TriangleQuotient {
    /// Returns `g` with `g·t` the canonical representative of the orbit of `t`.
    fn canonicalize(&self, t: &FareyTriangle) -> Result<IntMatrix>;

    /// Representative of the orbit of a slope.
    fn slope_class(&self, s: Slope) -> Result<Slope> {
        Ok(s)
    }

    /// True when every orbit is a single triangle.
    fn is_trivial(&self) -> bool {
        false
    }
}

/// The trivial group: every triangle is its own representative.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoQuotient;

impl TriangleQuotient for NoQuotient {
    fn canonicalize(&self, _t: &FareyTriangle) -> Result<IntMatrix> {
        Ok(IntMatrix::IDENTITY)
    }

    fn is_trivial(&self) -> bool {
        true
    }
}

pub(crate) fn transform_triangle(g: &IntMatrix, t: &FareyTriangle) -> Result<FareyTriangle> {
    let v = t.vertices;
    FareyTriangle::new(act_on_slope(g, v[0])?, act_on_slope(g, v[1])?, act_on_slope(g, v[2])?)
}

pub(crate) fn transform_edge(g: &IntMatrix, e: &DualEdge) -> Result<DualEdge> {
    Ok(DualEdge {
        left: act_on_slope(g, e.left)?,
        right: act_on_slope(g, e.right)?,
        opposite: act_on_slope(g, e.opposite)?,
        apex: act_on_slope(g, e.apex)?,
    })
}

pub fn is_forbidden(t: Complex64, variant: BqVariant) -> bool {
    let real = t.im.abs() <= WITNESS_TOL;
    match variant {
        BqVariant::Standard => real && t.re.abs() <= 2.0 + WITNESS_TOL,
        BqVariant::Extended => real && t.re.abs() < 2.0 - WITNESS_TOL,
    }
}

/// The escaping rule for the step `{left, right} → apex` away from `opposite`.
pub fn is_escaping(left: Complex64, right: Complex64, opposite: Complex64, apex: Complex64) -> bool {
    let m = left.norm().min(right.norm());
    m >= 2.0 + ESCAPE_MARGIN && apex.norm() >= opposite.norm().max(m)
}

/// Closed form of the fan recurrence `n_{k+1} = c·n_k − n_{k−1}` started at
/// `(n0, n1)`.
#[derive(Clone, Copy, Debug)]
pub(crate) enum FanShape {
    /// `n_k = A·λ^k + B·λ^{−k}` with `|λ| > 1`.
    Hyperbolic { lambda: Complex64, a: Complex64, b: Complex64 },
    /// `n_k = σ^k (A + B·k)` with `σ = ±1`.
    Parabolic { a: Complex64, b: Complex64 },
    /// `|λ| = 1`: the neighbour traces stay bounded.
    Elliptic,
}

pub(crate) fn fan_shape(center: Complex64, n0: Complex64, n1: Complex64) -> FanShape {
    let lambda = half_length_exp(center);
    if lambda.norm() > 1.0 + 1e-6 {
        let inv = 1.0 / lambda;
        let a = (n1 - n0 * inv) / (lambda - inv);
        return FanShape::Hyperbolic { lambda, a, b: n0 - a };
    }
    if center.im.abs() <= WITNESS_TOL && (center.re.abs() - 2.0).abs() <= WITNESS_TOL {
        let sigma = center.re.signum();
        return FanShape::Parabolic { a: n0, b: n1 * sigma - n0 };
    }
    FanShape::Elliptic
}

/// Lower bound on `|n_k|` valid for every `k ≥ 1`, when that bound is
/// attained at `k = 1` and grows from there.
pub(crate) fn fan_lower_bound(shape: FanShape) -> Option<f64> {
    match shape {
        FanShape::Hyperbolic { lambda, a, b } => {
            let r = lambda.norm();
            Some(a.norm() * r - b.norm() / r)
        }
        FanShape::Parabolic { a, b, .. } => Some(b.norm() - a.norm()),
        FanShape::Elliptic => None,
    }
}

/// Whether the rest of the fan around `center`, beyond the neighbours
/// `n0, n1`, is certified large: every remaining neighbour and every subtree
/// hanging off the fan has trace above `2 + μ` and grows.
pub fn fan_certified(center: Complex64, n0: Complex64, n1: Complex64) -> bool {
    let Some(bound) = fan_lower_bound(fan_shape(center, n0, n1)) else {
        return false;
    };
    let floor = (2.0 + ESCAPE_MARGIN) * (1.0 + 1e-9);
    let low = bound.min(n0.norm());
    bound >= floor && n0.norm() >= floor && low * low >= 2.0 * center.norm() * (1.0 + 1e-9)
}

/// Whether all neighbours around a `±2` curve share the trace modulus of
/// `n0`, giving infinitely many curves of that trace.
pub(crate) fn fan_is_constant(center: Complex64, n0: Complex64, n1: Complex64) -> bool {
    match fan_shape(center, n0, n1) {
        FanShape::Parabolic { b, .. } => b.norm() <= 1e-12 * (1.0 + n0.norm()),
        _ => false,
    }
}

struct QueueItem {
    edge: DualEdge,
    traces: [Complex64; 3],
    /// Canonicalizing matrix of the triangle the edge leaves.
    source_canon: IntMatrix,
}

/// Shared search over the (possibly quotiented) dual tree.
pub(crate) fn search<Q: TriangleQuotient>(
    triple: &TraceTriple,
    variant: BqVariant,
    fuel: u64,
    quotient: &Q,
) -> Result<BqVerdict> {
    let mut spent = 0u64;
    match search_inner(triple, variant, fuel, quotient, &mut spent) {
        // Slopes past i64 lie beyond any region the fuel could certify.
        Err(Error::Overflow) => Ok(BqVerdict {
            status: BqStatus::Inconclusive,
            variant,
            certificate: None,
            witness: None,
            fuel_spent: spent,
        }),
        r => r,
    }
}

fn search_inner<Q: TriangleQuotient>(
    triple: &TraceTriple,
    variant: BqVariant,
    fuel: u64,
    quotient: &Q,
    spent_out: &mut u64,
) -> Result<BqVerdict> {
    let spent = spent_out;
    let verdict = |status, witness, certificate, spent| BqVerdict {
        status,
        variant,
        certificate,
        witness,
        fuel_spent: spent,
    };

    // Steepest descent toward the small-trace region; finds witnesses early.
    {
        let mut slopes = [Slope::ZERO, Slope::INFINITY, Slope::ONE];
        let mut tr = triple.as_array();
        for (s, t) in slopes.iter().zip(tr) {
            if is_forbidden(t, variant) {
                return Ok(verdict(BqStatus::Fails, Some(Witness::ForbiddenTrace { slope: *s, trace: t }), None, *spent));
            }
        }
        let max_mod = |v: &[Complex64; 3]| v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut steps = 0;
        while steps < DESCENT_LIMIT && *spent < fuel {
            let current = max_mod(&tr);
            let mut best: Option<(usize, Complex64, f64)> = None;
            for k in 0..3 {
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                let nt = tr[i] * tr[j] - tr[k];
                let mut cand = tr;
                cand[k] = nt;
                let m = max_mod(&cand);
                if m < current * (1.0 - 1e-12) && best.is_none_or(|b| m < b.2) {
                    best = Some((k, nt, m));
                }
            }
            *spent += 1;
            let Some((k, nt, _)) = best else { break };
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            slopes[k] = flip(slopes[i], slopes[j], slopes[k])?;
            tr[k] = nt;
            if is_forbidden(nt, variant) {
                return Ok(verdict(BqStatus::Fails, Some(Witness::ForbiddenTrace { slope: slopes[k], trace: nt }), None, *spent));
            }
            steps += 1;
        }
    }

    let base = FareyTriangle::BASE;
    let mut visited: HashSet<FareyTriangle> = HashSet::new();
    let mut region = Vec::new();
    let mut boundary = Vec::new();
    let base_canon = quotient.canonicalize(&base)?;
    let base_key = transform_triangle(&base_canon, &base)?;
    visited.insert(base_key);
    region.push(canonical_traces(&base_canon, &[Slope::ZERO, Slope::INFINITY, Slope::ONE], &triple.as_array())?);

    let mut queue: VecDeque<QueueItem> = VecDeque::new();
    let [x, y, z] = triple.as_array();
    let roots = DualEdge::roots();
    let root_traces = [[x, z, y], [z, y, x], [x, y, z]];
    for (edge, traces) in roots.into_iter().zip(root_traces) {
        queue.push_back(QueueItem { edge, traces, source_canon: base_canon });
    }

    while let Some(item) = queue.pop_front() {
        if *spent >= fuel {
            return Ok(verdict(BqStatus::Inconclusive, None, None, *spent));
        }
        *spent += 1;
        let [tl, tr, to] = item.traces;
        let ta = tl * tr - to;
        let e = item.edge;
        let all = [tl, tr, to, ta];

        // Infinitely many neighbours of one trace around a ±2 curve.
        for (center, ct, n0, n1, other) in [(e.left, tl, tr, ta, e.right), (e.right, tr, tl, ta, e.left)] {
            if fan_is_constant(ct, n0, n1) && !is_forbidden(ct, variant) {
                return Ok(verdict(
                    BqStatus::Fails,
                    Some(Witness::PeriodicBoundedOrbit {
                        center,
                        center_trace: ct,
                        neighbours: [other, e.apex],
                        neighbour_traces: [n0, n1],
                    }),
                    None,
                    *spent,
                ));
            }
        }

        let kind = if is_escaping(tl, tr, to, ta) {
            Some(BoundaryKind::Escaping)
        } else if fan_certified(tl, tr, ta) {
            Some(BoundaryKind::Fan { center: e.left })
        } else if fan_certified(tr, tl, ta) {
            Some(BoundaryKind::Fan { center: e.right })
        } else {
            None
        };
        if let Some(kind) = kind {
            let g = item.source_canon;
            let edge = transform_edge(&g, &e)?;
            let kind = match kind {
                BoundaryKind::Fan { center } => BoundaryKind::Fan { center: act_on_slope(&g, center)? },
                k => k,
            };
            boundary.push(BoundaryEdge { edge, traces: all, kind });
            continue;
        }

        let far = e.far_triangle();
        let canon = quotient.canonicalize(&far)?;
        let key = transform_triangle(&canon, &far)?;
        if !visited.insert(key) {
            continue;
        }
        if is_forbidden(ta, variant) {
            return Ok(verdict(BqStatus::Fails, Some(Witness::ForbiddenTrace { slope: e.apex, trace: ta }), None, *spent));
        }
        let far_slopes = [e.left, e.right, e.apex];
        let far_traces = [tl, tr, ta];
        region.push(canonical_traces(&canon, &far_slopes, &far_traces)?);
        for child in e.children()? {
            let traces = [
                lookup(&far_slopes, &far_traces, child.left),
                lookup(&far_slopes, &far_traces, child.right),
                lookup(&far_slopes, &far_traces, child.opposite),
            ];
            queue.push_back(QueueItem { edge: child, traces, source_canon: canon });
        }
    }

    region.sort_by_key(|r| r.triangle);
    Ok(verdict(
        BqStatus::Satisfies,
        None,
        Some(SinkCertificate { region, boundary }),
        *spent,
    ))
}

fn lookup(slopes: &[Slope; 3], traces: &[Complex64; 3], s: Slope) -> Complex64 {
    let k = slopes.iter().position(|v| *v == s).expect("slope belongs to the triangle");
    traces[k]
}

/// Traces at the vertices of `g·t` in sorted order, given traces at the
/// vertices of `t` in `slopes` order. Traces are invariant under the quotient
/// group, so `tr(g·v) = tr(v)`.
fn canonical_traces(g: &IntMatrix, slopes: &[Slope; 3], traces: &[Complex64; 3]) -> Result<RegionTriangle> {
    let moved = [act_on_slope(g, slopes[0])?, act_on_slope(g, slopes[1])?, act_on_slope(g, slopes[2])?];
    let triangle = FareyTriangle::new(moved[0], moved[1], moved[2])?;
    Ok(RegionTriangle {
        triangle,
        traces: triangle.vertices.map(|v| lookup(&moved, traces, v)),
    })
}

/// Decides the Bowditch Q-conditions.
pub fn decide_bq(c: &Character, fuel: u64) -> Result<BqVerdict> {
    decide(c, BqVariant::Standard, fuel)
}

/// Decides the extended conditions, where traces `±2` are allowed.
pub fn decide_extended_bq(c: &Character, fuel: u64) -> Result<BqVerdict> {
    decide(c, BqVariant::Extended, fuel)
}

pub fn decide(c: &Character, variant: BqVariant, fuel: u64) -> Result<BqVerdict> {
    if fuel == 0 {
        return Err(Error::InvalidArgument("fuel must be positive".into()));
    }
    let reducible = c.has(ClassTag::Reducible);
    if reducible && variant == BqVariant::Standard {
        return Ok(BqVerdict {
            status: BqStatus::Fails,
            variant,
            certificate: None,
            witness: Some(Witness::ReducibleKappa { kappa: c.kappa }),
            fuel_spent: 0,
        });
    }
    let mut v = search(&c.triple, variant, fuel, &NoQuotient)?;
    if reducible && v.status != BqStatus::Fails {
        // The extended conditions also fail at κ = 2: the end-invariant set
        // of a reducible character is never empty.
        v.status = BqStatus::Fails;
        v.certificate = None;
        v.witness = Some(Witness::ReducibleKappa { kappa: c.kappa });
    }
    Ok(v)
}

fn key_edge(left: Slope, right: Slope, opposite: Slope) -> (Slope, Slope, Slope) {
    if left <= right {
        (left, right, opposite)
    } else {
        (right, left, opposite)
    }
}

/// Re-checks a certificate from scratch: every trace is recomputed from the
/// triple, every boundary condition re-evaluated, and the region is checked
/// to be closed (every edge leaving a region triangle either enters another
/// region triangle, up to the quotient, or is a listed boundary edge).
pub fn verify_certificate<Q: TriangleQuotient>(
    triple: &TraceTriple,
    variant: BqVariant,
    cert: &SinkCertificate,
    quotient: &Q,
) -> std::result::Result<(), String> {
    let mut cache = TraceCache::new(triple);
    let mut tr = |s: Slope| cache.get(s).map_err(|e| format!("trace at {s}: {e}"));

    let region: HashSet<FareyTriangle> = cert.region.iter().map(|r| r.triangle).collect();
    let base_canon = quotient.canonicalize(&FareyTriangle::BASE).map_err(|e| e.to_string())?;
    let base_key = transform_triangle(&base_canon, &FareyTriangle::BASE).map_err(|e| e.to_string())?;
    if !region.contains(&base_key) {
        return Err("base triangle missing from region".into());
    }

    let mut boundary: HashMap<(Slope, Slope, Slope), &BoundaryEdge> = HashMap::new();
    for b in &cert.boundary {
        let e = &b.edge;
        let ta = tr(e.apex)?;
        let (tl, trr, to) = (tr(e.left)?, tr(e.right)?, tr(e.opposite)?);
        if flip(e.left, e.right, e.opposite).map_err(|x| x.to_string())? != e.apex {
            return Err(format!("boundary edge {e:?} is not a Farey step"));
        }
        let src = FareyTriangle::new(e.left, e.right, e.opposite).map_err(|x| x.to_string())?;
        if !region.contains(&src) {
            return Err(format!("boundary edge {e:?} does not leave the region"));
        }
        let ok = match b.kind {
            BoundaryKind::Escaping => is_escaping(tl, trr, to, ta),
            BoundaryKind::Fan { center } if center == e.left => fan_certified(tl, trr, ta),
            BoundaryKind::Fan { center } if center == e.right => fan_certified(trr, tl, ta),
            BoundaryKind::Fan { .. } => false,
        };
        if !ok {
            return Err(format!("boundary edge {e:?} fails its {:?} condition", b.kind));
        }
        boundary.insert(key_edge(e.left, e.right, e.opposite), b);
    }

    for r in &cert.region {
        let v = r.triangle.vertices;
        for s in v {
            let t = tr(s)?;
            if is_forbidden(t, variant) {
                return Err(format!("region vertex {s} has forbidden trace {t}"));
            }
        }
        for k in 0..3 {
            let (a, b, c) = (v[(k + 1) % 3], v[(k + 2) % 3], v[k]);
            if boundary.contains_key(&key_edge(a, b, c)) {
                continue;
            }
            let s = flip(a, b, c).map_err(|x| x.to_string())?;
            let far = FareyTriangle::new(a, b, s).map_err(|x| x.to_string())?;
            let g = quotient.canonicalize(&far).map_err(|x| x.to_string())?;
            let key = transform_triangle(&g, &far).map_err(|x| x.to_string())?;
            if !region.contains(&key) {
                return Err(format!("edge {{{a}, {b}}} away from {c} leaves the region uncertified"));
            }
        }
    }
    Ok(())
}

/// The curves of trace modulus at most `bound` within a depth window, with
/// the Farey edges between them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedSubgraph {
    pub bound: f64,
    pub vertices: Vec<Slope>,
    pub traces: Vec<Complex64>,
    pub edges: Vec<(Slope, Slope)>,
    pub truncation_depth: usize,
}

/// Upper limit on the number of tree steps visited by [`bounded_subgraph`].
pub const SUBGRAPH_NODE_CAP: usize = 4_000_000;

pub fn bounded_subgraph(c: &Character, bound: f64, depth: usize) -> Result<BoundedSubgraph> {
    if !(bound > 0.0) {
        return Err(Error::InvalidArgument(format!("bound must be positive, got {bound}")));
    }
    if depth > MAX_ENUMERATION_DEPTH {
        return Err(Error::DepthLimit { limit: MAX_ENUMERATION_DEPTH });
    }
    let inside = |t: Complex64| t.norm() <= bound;
    let mut vertices = Vec::new();
    let mut traces = Vec::new();
    let base = [Slope::ZERO, Slope::INFINITY, Slope::ONE];
    let bt = c.triple.as_array();
    for (s, t) in base.iter().zip(bt) {
        if inside(t) {
            vertices.push(*s);
            traces.push(t);
        }
    }
    let mut edges = Vec::new();
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        if inside(bt[i]) && inside(bt[j]) {
            edges.push((base[i], base[j]));
        }
    }
    let [x, y, z] = bt;
    let mut frontier: Vec<(DualEdge, [Complex64; 3])> = DualEdge::roots()
        .into_iter()
        .zip([[x, z, y], [z, y, x], [x, y, z]])
        .collect();
    let mut visited = 0usize;
    for _ in 0..depth {
        let mut next = Vec::new();
        for (e, [tl, tr, to]) in frontier {
            visited += 1;
            if visited > SUBGRAPH_NODE_CAP {
                return Err(Error::ResourceLimit(format!("more than {SUBGRAPH_NODE_CAP} tree steps")));
            }
            let ta = tl * tr - to;
            // Every trace behind an escaping edge is at least |ta|.
            if is_escaping(tl, tr, to, ta) && ta.norm() > bound {
                continue;
            }
            if inside(ta) {
                vertices.push(e.apex);
                traces.push(ta);
                if inside(tl) {
                    edges.push((e.left, e.apex));
                }
                if inside(tr) {
                    edges.push((e.apex, e.right));
                }
            }
            let [lc, rc] = e.children()?;
            next.push((lc, [tl, ta, tr]));
            next.push((rc, [ta, tr, tl]));
        }
        frontier = next;
    }
    Ok(BoundedSubgraph { bound, vertices, traces, edges, truncation_depth: depth })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub connected_within_truncation: bool,
    pub components: usize,
    pub interior_vertices: usize,
    pub margin: usize,
}

/// Depth margin dropped from the truncation before counting components.
pub const CONNECTIVITY_MARGIN: usize = 2;

/// Counts connected components of the bounded subgraph restricted to slopes
/// at least [`CONNECTIVITY_MARGIN`] steps inside the truncation.
pub fn check_connectivity(c: &Character, bound: f64, depth: usize) -> Result<ConnectivityReport> {
    if !(bound >= 2.0) {
        return Err(Error::InvalidArgument(format!("connectivity needs K ≥ 2, got {bound}")));
    }
    let g = bounded_subgraph(c, bound, depth)?;
    let interior_depth = depth.saturating_sub(CONNECTIVITY_MARGIN);
    let index: HashMap<Slope, usize> = g
        .vertices
        .iter()
        .filter(|s| s.depth() <= interior_depth)
        .enumerate()
        .map(|(i, s)| (*s, i))
        .collect();
    let mut parent: Vec<usize> = (0..index.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (a, b) in &g.edges {
        if let (Some(&i), Some(&j)) = (index.get(a), index.get(b)) {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
            }
        }
    }
    let components = (0..index.len()).filter(|&i| find(&mut parent, i) == i).count();
    Ok(ConnectivityReport {
        connected_within_truncation: components <= 1,
        components,
        interior_vertices: index.len(),
        margin: CONNECTIVITY_MARGIN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(s: &str) -> Character {
        Character::new(s.parse().unwrap())
    }

    #[test]
    fn markov_triple_satisfies() {
        let c = ch("3,3,3");
        let v = decide_bq(&c, 10_000).unwrap();
        assert_eq!(v.status, BqStatus::Satisfies);
        let cert = v.certificate.unwrap();
        assert_eq!(cert.region.len(), 1);
        assert_eq!(cert.boundary.len(), 3);
        verify_certificate(&c.triple, BqVariant::Standard, &cert, &NoQuotient).unwrap();
        assert_eq!(decide_extended_bq(&c, 10_000).unwrap().status, BqStatus::Satisfies);
    }

    #[test]
    fn imaginary_triple_fails_at_zero_slope() {
        let c = ch("0,3,3i");
        for v in [decide_bq(&c, 10_000).unwrap(), decide_extended_bq(&c, 10_000).unwrap()] {
            assert_eq!(v.status, BqStatus::Fails);
            match v.witness.unwrap() {
                Witness::ForbiddenTrace { slope, trace } => {
                    assert_eq!(slope, Slope::ZERO);
                    assert_eq!(trace, Complex64::new(0.0, 0.0));
                }
                w => panic!("unexpected witness {w:?}"),
            }
        }
    }

    #[test]
    fn reducible_triple() {
        let c = ch("2,2,2");
        let v = decide_bq(&c, 10_000).unwrap();
        assert_eq!(v.status, BqStatus::Fails);
        assert!(matches!(v.witness, Some(Witness::ReducibleKappa { .. })));
        let v = decide_extended_bq(&c, 10_000).unwrap();
        assert_eq!(v.status, BqStatus::Fails);
        assert!(matches!(v.witness, Some(Witness::PeriodicBoundedOrbit { .. })), "{v:?}");
    }

    #[test]
    fn zero_fuel_rejected() {
        assert!(decide_bq(&ch("3,3,3"), 0).is_err());
    }

    #[test]
    fn small_nonreal_trace_needs_fan_certificate() {
        // x = 1.5i is small but not in [-2, 2]; y, z chosen large.
        let c = ch("1.5i,4,5");
        let v = decide_bq(&c, 100_000).unwrap();
        assert_eq!(v.status, BqStatus::Satisfies, "{v:?}");
        let cert = v.certificate.unwrap();
        assert!(cert.boundary.iter().any(|b| matches!(b.kind, BoundaryKind::Fan { .. })));
        verify_certificate(&c.triple, BqVariant::Standard, &cert, &NoQuotient).unwrap();
    }

    #[test]
    fn tampered_certificate_rejected() {
        let c = ch("3,3,3");
        let mut cert = decide_bq(&c, 10_000).unwrap().certificate.unwrap();
        cert.boundary.pop();
        assert!(verify_certificate(&c.triple, BqVariant::Standard, &cert, &NoQuotient).is_err());
        // The same region does not certify a different character.
        let cert = decide_bq(&c, 10_000).unwrap().certificate.unwrap();
        assert!(verify_certificate(&ch("3,3,1").triple, BqVariant::Standard, &cert, &NoQuotient).is_err());
    }

    #[test]
    fn bounded_subgraph_examples() {
        assert!(bounded_subgraph(&ch("3,3,3"), 2.0, 12).unwrap().vertices.is_empty());
        let g = bounded_subgraph(&ch("0,3,3i"), 1.0, 12).unwrap();
        assert_eq!(g.vertices, vec![Slope::ZERO]);
        let g = bounded_subgraph(&ch("1,1,1"), 2.0, 6).unwrap();
        assert_eq!(g.vertices.len(), 3 * 64);
        for (a, b) in &g.edges {
            assert!(a.is_adjacent(b));
        }
    }

    #[test]
    fn connectivity_examples() {
        let r = check_connectivity(&ch("0,3,3i"), 2.0, 12).unwrap();
        assert_eq!(r.components, 1);
        let r = check_connectivity(&ch("1,1,1"), 2.0, 8).unwrap();
        assert_eq!(r.components, 1);
        assert!(check_connectivity(&ch("1,1,1"), 1.5, 8).is_err());
    }
}
