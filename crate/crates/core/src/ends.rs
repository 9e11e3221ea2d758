//! End invariants: limits of curves of bounded trace.
//!
//! [`search_end_invariants`] walks the dual tree and drops a subtree once
//! every trace in it is provably at least `K`. What is left at the depth
//! limit comes in two kinds. Branches that close in on a curve whose fan of
//! neighbours stays bounded point at that curve, a rational end invariant.
//! The remaining branches are nested Farey intervals, the finite-depth
//! shadow of irrational end invariants.
//!
//! [`classify_end_set`] combines the class of the character with the
//! matching structure theorem and falls back on the depth pattern only
//! where a theorem restricts the outcome.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bq::{
    bounded_subgraph, decide_extended_bq, fan_is_constant, fan_lower_bound, fan_shape, is_escaping, BqStatus,
    FanShape, ESCAPE_MARGIN, SUBGRAPH_NODE_CAP,
};
use crate::character::{Character, ClassTag};
use crate::error::{Error, Result};
use crate::farey::{DualEdge, Slope};

/// Deepest search accepted by [`search_end_invariants`].
pub const MAX_END_DEPTH: usize = 64;

/// Trace bound used by [`classify_end_set`].
pub const CLASSIFY_BOUND: f64 = 2.5;

/// Depth of the trace table behind the SU(2), reducible and discreteness
/// tests.
pub const TRACE_TABLE_DEPTH: usize = 10;

/// Depth cap for the search of curves with trace in `(−2, 2)`; keeps the
/// walk under the node cap even when nothing is pruned.
pub const REAL_SUBGRAPH_DEPTH: usize = 18;

const TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndClass {
    Empty,
    SingleCurve,
    CantorLike,
    #[serde(rename = "full-pl")]
    FullPL,
    Unknown,
}

/// Which argument produced a classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremBasis {
    /// Finite-depth survivor pattern of the search alone.
    DepthPattern,
    /// Dihedral characters have every lamination as an end invariant.
    Dihedral,
    /// Real triple whose traces all lie in `[−2, 2]` to the table depth.
    Su2Proxy,
    /// Extended Q-conditions hold exactly when there are no end invariants.
    ExtendedBq,
    /// Trichotomy for real characters with `κ ≠ 2`.
    RealCharacter,
    /// `κ = 2`: a single end invariant or all of them.
    Reducible,
    /// Regime split for imaginary characters by `κ`.
    Imaginary,
    /// Discrete trace sets with three or more end invariants.
    DiscreteTraces,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EndCandidate {
    /// A curve of trace below `K` whose neighbours all have bounded trace.
    Rational {
        slope: Slope,
        trace: Complex64,
        /// Traces of two consecutive neighbours in its fan.
        neighbour_traces: [Complex64; 2],
    },
    /// A surviving Farey interval at the depth limit, away from every
    /// rational candidate.
    Interval { left: Slope, right: Slope },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndInvariantReport {
    pub candidates: Vec<EndCandidate>,
    pub classification: EndClass,
    pub bound_used: f64,
    pub depth_used: usize,
    pub theorem_basis: TheoremBasis,
    /// Surviving branches per depth, rational attachments included.
    pub survivors_per_depth: Vec<usize>,
    /// Whether some subtree was discarded.
    pub pruned_any: bool,
}

impl EndInvariantReport {
    pub fn rational_candidates(&self) -> impl Iterator<Item = (Slope, Complex64)> + '_ {
        self.candidates.iter().filter_map(|c| match c {
            EndCandidate::Rational { slope, trace, .. } => Some((*slope, *trace)),
            EndCandidate::Interval { .. } => None,
        })
    }

    pub fn intervals(&self) -> impl Iterator<Item = (Slope, Slope)> + '_ {
        self.candidates.iter().filter_map(|c| match c {
            EndCandidate::Interval { left, right } => Some((*left, *right)),
            EndCandidate::Rational { .. } => None,
        })
    }
}

/// Whether every neighbour of `center` has bounded trace.
fn bounded_fan(center: Complex64, n0: Complex64, n1: Complex64) -> bool {
    matches!(fan_shape(center, n0, n1), FanShape::Elliptic) || fan_is_constant(center, n0, n1)
}

/// Whether every trace behind `{c, n0} → n1`, taken around the fan of `c`,
/// is at least `k`: the neighbours from `n1` on and the subtrees between
/// consecutive neighbours.
fn fan_clear(c: Complex64, n0: Complex64, n1: Complex64, k: f64) -> bool {
    let Some(low) = fan_lower_bound(fan_shape(c, n0, n1)) else {
        return false;
    };
    let floor = 2.0 + ESCAPE_MARGIN;
    let m = low.min(n0.norm());
    // Between neighbours of moduli ≥ m the apex is at least m² − |c|, and
    // that step escapes once it also beats the fan centre.
    low >= k.max(floor) && n0.norm() >= floor && m * m - c.norm() >= k.max(c.norm()).max(floor)
}

/// Angular width of the Farey interval behind an edge, measured on the
/// circle `s ↦ 2·atan(s)`.
fn interval_width(e: &DualEdge) -> f64 {
    let angle = |s: Slope| if s.is_infinite() { PI } else { 2.0 * s.to_f64().atan() };
    let tau = 2.0 * PI;
    let (l, r, o) = (angle(e.left), angle(e.right), angle(e.opposite));
    let d = (r - l).rem_euclid(tau);
    if (o - l).rem_euclid(tau) < d {
        tau - d
    } else {
        d
    }
}

struct Walk {
    rational: BTreeMap<Slope, (Complex64, [Complex64; 2])>,
    /// Free survivors per depth with their total width.
    free_per_depth: Vec<(usize, f64)>,
    survivors_per_depth: Vec<usize>,
    final_free: Vec<DualEdge>,
    pruned_any: bool,
}

fn walk(c: &Character, k: f64, depth: usize) -> Result<Walk> {
    let mut out = Walk {
        rational: BTreeMap::new(),
        free_per_depth: Vec::with_capacity(depth),
        survivors_per_depth: Vec::with_capacity(depth),
        final_free: Vec::new(),
        pruned_any: false,
    };
    let [x, y, z] = c.triple.as_array();
    let mut frontier: Vec<(DualEdge, [Complex64; 3])> =
        DualEdge::roots().into_iter().zip([[x, z, y], [z, y, x], [x, y, z]]).collect();
    let mut visited = 0usize;
    for level in 1..=depth {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        let mut survivors = Vec::with_capacity(frontier.len());
        for (e, [tl, tr, to]) in frontier {
            visited += 1;
            if visited > SUBGRAPH_NODE_CAP {
                return Err(Error::ResourceLimit(format!("more than {SUBGRAPH_NODE_CAP} tree steps")));
            }
            let ta = tl * tr - to;
            // Traces grow along every path behind an escaping edge.
            let escaped = is_escaping(tl, tr, to, ta) && ta.norm() >= k;
            if escaped || fan_clear(tl, tr, ta, k) || fan_clear(tr, tl, ta, k) {
                out.pruned_any = true;
                continue;
            }
            for (s, t, n0) in [(e.left, tl, tr), (e.right, tr, tl)] {
                if t.norm() < k && bounded_fan(t, n0, ta) {
                    out.rational.entry(s).or_insert((t, [n0, ta]));
                }
            }
            survivors.push(e);
            if level < depth {
                let [lc, rc] = e.children()?;
                next.push((lc, [tl, ta, tr]));
                next.push((rc, [ta, tr, tl]));
            }
        }
        out.survivors_per_depth.push(survivors.len());
        let free: Vec<DualEdge> = survivors
            .into_iter()
            .filter(|e| !out.rational.contains_key(&e.left) && !out.rational.contains_key(&e.right))
            .collect();
        out.free_per_depth.push((free.len(), free.iter().map(interval_width).sum()));
        if level == depth {
            out.final_free = free;
        }
        frontier = next;
    }
    Ok(out)
}

/// Finite proxy for a Cantor set: at least two free survivors, their count
/// non-decreasing and their total width strictly shrinking over the last
/// three depth doublings.
fn cantor_pattern(free_per_depth: &[(usize, f64)]) -> bool {
    let d = free_per_depth.len();
    if d < 8 {
        return false;
    }
    let at = |j: usize| free_per_depth[j - 1];
    let probes = [at(d / 8), at(d / 4), at(d / 2), at(d)];
    at(d).0 >= 2
        && probes.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 < w[0].1)
}

fn pattern_class(w: &Walk) -> EndClass {
    let free = w.final_free.len();
    if !w.pruned_any {
        EndClass::FullPL
    } else if free == 0 && w.rational.is_empty() {
        EndClass::Empty
    } else if free == 0 && w.rational.len() == 1 {
        EndClass::SingleCurve
    } else if free > 0 && cantor_pattern(&w.free_per_depth) {
        EndClass::CantorLike
    } else {
        EndClass::Unknown
    }
}

/// Searches for end invariants among curves of trace below `bound`, up to
/// `depth` steps into the dual tree.
///
/// The classification reflects only the survivor pattern at this depth;
/// [`classify_end_set`] applies the structure theorems.
pub fn search_end_invariants(c: &Character, bound: f64, depth: usize) -> Result<EndInvariantReport> {
    if !(bound > 0.0) {
        return Err(Error::InvalidArgument(format!("bound must be positive, got {bound}")));
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    if depth > MAX_END_DEPTH {
        return Err(Error::DepthLimit { limit: MAX_END_DEPTH });
    }
    let w = walk(c, bound, depth)?;
    let classification = pattern_class(&w);
    let mut candidates: Vec<EndCandidate> = w
        .rational
        .iter()
        .map(|(&slope, &(trace, neighbour_traces))| EndCandidate::Rational { slope, trace, neighbour_traces })
        .collect();
    let mut intervals: Vec<(Slope, Slope)> = w.final_free.iter().map(|e| (e.left, e.right)).collect();
    intervals.sort_by(|a, b| a.0.cmp_value(&b.0).then(a.1.cmp_value(&b.1)));
    candidates.extend(intervals.into_iter().map(|(left, right)| EndCandidate::Interval { left, right }));
    Ok(EndInvariantReport {
        candidates,
        classification,
        bound_used: bound,
        depth_used: depth,
        theorem_basis: TheoremBasis::DepthPattern,
        survivors_per_depth: w.survivors_per_depth,
        pruned_any: w.pruned_any,
    })
}

fn is_real(t: Complex64) -> bool {
    t.im.abs() <= TOL * (1.0 + t.norm())
}

fn in_closed_band(t: Complex64) -> bool {
    is_real(t) && t.re.abs() <= 2.0 + TOL
}

fn in_open_band(t: Complex64) -> bool {
    is_real(t) && t.re.abs() < 2.0 - TOL
}

/// Traces of every curve up to [`TRACE_TABLE_DEPTH`].
fn trace_table(c: &Character) -> Result<Vec<(Slope, Complex64)>> {
    let g = bounded_subgraph(c, f64::INFINITY, TRACE_TABLE_DEPTH)?;
    Ok(g.vertices.into_iter().zip(g.traces).collect())
}

/// Real triple with all traces to the table depth in `[−2, 2]`.
pub fn is_su2_proxy(c: &Character) -> Result<bool> {
    Ok(c.has(ClassTag::Real) && trace_table(c)?.iter().all(|&(_, t)| in_closed_band(t)))
}

/// Whether the distinct traces to the table depth are separated by more
/// than ten times the float tolerance.
pub fn is_discrete_proxy(c: &Character) -> Result<bool> {
    let mut t: Vec<Complex64> = trace_table(c)?.into_iter().map(|(_, t)| t).collect();
    t.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut distinct: Vec<Complex64> = Vec::new();
    for v in t {
        if distinct.iter().all(|d| (d - v).norm() > TOL * (1.0 + v.norm())) {
            distinct.push(v);
        }
    }
    for (i, a) in distinct.iter().enumerate() {
        for b in &distinct[i + 1..] {
            if (a - b).norm() <= 10.0 * TOL * (1.0 + a.norm()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Search depth afforded by `fuel` tree steps.
fn depth_for(fuel: u64) -> usize {
    let d = (fuel / 3).max(1).ilog2() as usize;
    d.clamp(2, 30)
}

fn with_class(mut r: EndInvariantReport, class: EndClass, basis: TheoremBasis) -> EndInvariantReport {
    r.classification = class;
    r.theorem_basis = basis;
    r
}

/// Keeps the single curve `s` as the only candidate.
fn single(mut r: EndInvariantReport, s: Slope, t: Complex64, n: [Complex64; 2], basis: TheoremBasis) -> EndInvariantReport {
    r.candidates = vec![EndCandidate::Rational { slope: s, trace: t, neighbour_traces: n }];
    with_class(r, EndClass::SingleCurve, basis)
}

/// Whether a trace-zero curve has a neighbour pair `(p, ±i·p)` with `p`
/// real and `|p| ≥ 2`, the normal form `(0, x, ix)`.
fn zero_normal_form(t: Complex64, n: [Complex64; 2]) -> bool {
    if t.norm() > TOL {
        return false;
    }
    let i = Complex64::i();
    [(n[0], n[1]), (n[1], n[0])].iter().any(|&(p, q)| {
        let close = |a: Complex64, b: Complex64| (a - b).norm() <= 1e-7 * (1.0 + a.norm());
        is_real(p) && p.re.abs() >= 2.0 - TOL && (close(q, i * p) || close(q, -i * p))
    })
}

/// Classifies the set of end invariants, spending about `fuel` tree steps
/// on each search.
pub fn classify_end_set(c: &Character, fuel: u64) -> Result<EndInvariantReport> {
    if fuel == 0 {
        return Err(Error::InvalidArgument("fuel must be positive".into()));
    }
    let depth = depth_for(fuel);
    let search = search_end_invariants(c, CLASSIFY_BOUND, depth)?;
    let kappa = c.kappa;

    if c.has(ClassTag::Dihedral) {
        return Ok(with_class(search, EndClass::FullPL, TheoremBasis::Dihedral));
    }
    if c.has(ClassTag::Reducible) {
        let table = trace_table(c)?;
        if table.iter().all(|&(_, t)| in_closed_band(t)) {
            return Ok(with_class(search, EndClass::FullPL, TheoremBasis::Reducible));
        }
        // Otherwise there is exactly one end invariant; it is a curve when
        // some trace lies in [−2, 2].
        let small: Vec<_> = table.iter().filter(|&&(_, t)| in_closed_band(t)).collect();
        if let [&(s, t)] = small.as_slice() {
            let n = search
                .candidates
                .iter()
                .find_map(|cand| match cand {
                    EndCandidate::Rational { slope, neighbour_traces, .. } if *slope == s => Some(*neighbour_traces),
                    _ => None,
                });
            if let Some(n) = n {
                return Ok(single(search, s, t, n, TheoremBasis::Reducible));
            }
        }
        return Ok(with_class(search, EndClass::Unknown, TheoremBasis::Reducible));
    }
    if is_su2_proxy(c)? {
        return Ok(with_class(search, EndClass::FullPL, TheoremBasis::Su2Proxy));
    }
    let bq = decide_extended_bq(c, fuel)?;
    if bq.status == BqStatus::Satisfies {
        let mut r = with_class(search, EndClass::Empty, TheoremBasis::ExtendedBq);
        r.candidates.clear();
        return Ok(r);
    }
    if c.has(ClassTag::Real) {
        return classify_real(c, search, kappa.re, fuel);
    }
    if c.has(ClassTag::Imaginary) {
        return Ok(classify_imaginary(search, kappa.re));
    }
    let rational = search.rational_candidates().count();
    let total = rational + search.intervals().count();
    if total >= 3 && is_discrete_proxy(c)? {
        let class = if search.classification == EndClass::FullPL { EndClass::FullPL } else { EndClass::CantorLike };
        return Ok(with_class(search, class, TheoremBasis::DiscreteTraces));
    }
    Ok(with_class(search, EndClass::Unknown, TheoremBasis::DepthPattern))
}

fn classify_real(c: &Character, search: EndInvariantReport, kappa: f64, fuel: u64) -> Result<EndInvariantReport> {
    let g = bounded_subgraph(c, 2.0, depth_for(fuel).min(REAL_SUBGRAPH_DEPTH))?;
    let small: Vec<(Slope, Complex64)> =
        g.vertices.iter().zip(&g.traces).filter(|(_, t)| in_open_band(**t)).map(|(s, t)| (*s, *t)).collect();
    match small.as_slice() {
        [] => Ok(with_class(search, EndClass::Unknown, TheoremBasis::RealCharacter)),
        [(s, t)] if kappa >= 6.0 - TOL => {
            let n = neighbour_pair(c, *s)?;
            Ok(single(search, *s, *t, n, TheoremBasis::RealCharacter))
        }
        [_] => Ok(with_class(search, EndClass::Unknown, TheoremBasis::RealCharacter)),
        _ => {
            let root = (kappa + 2.0).max(0.0).sqrt();
            let outside = trace_table(c)?.iter().any(|&(_, t)| {
                !in_open_band(t) && (t.re.abs() - root).abs() > TOL * (1.0 + root)
            });
            let class = if outside && kappa > 2.0 { EndClass::CantorLike } else { EndClass::Unknown };
            Ok(with_class(search, class, TheoremBasis::RealCharacter))
        }
    }
}

fn classify_imaginary(search: EndInvariantReport, kappa: f64) -> EndInvariantReport {
    if (kappa + 2.0).abs() <= TOL {
        let zero = search.candidates.iter().find_map(|cand| match cand {
            EndCandidate::Rational { slope, trace, neighbour_traces } if zero_normal_form(*trace, *neighbour_traces) => {
                Some((*slope, *trace, *neighbour_traces))
            }
            _ => None,
        });
        if let Some((s, t, n)) = zero {
            return single(search, s, t, n, TheoremBasis::Imaginary);
        }
        let class = if search.classification == EndClass::CantorLike { EndClass::CantorLike } else { EndClass::Unknown };
        return with_class(search, class, TheoremBasis::Imaginary);
    }
    let allowed: &[EndClass] = if (-14.0..2.0).contains(&kappa) {
        &[EndClass::CantorLike, EndClass::SingleCurve]
    } else if kappa < -14.0 {
        &[EndClass::CantorLike, EndClass::SingleCurve, EndClass::Empty]
    } else {
        &[]
    };
    let class = if allowed.contains(&search.classification) { search.classification } else { EndClass::Unknown };
    with_class(search, class, TheoremBasis::Imaginary)
}

/// Traces of two consecutive Farey neighbours of `s`.
fn neighbour_pair(c: &Character, s: Slope) -> Result<[Complex64; 2]> {
    let e = match crate::farey::parent_edge(s, crate::farey::DEFAULT_DEPTH_CAP)? {
        Some(e) => e,
        None => {
            // A base slope: its two partners in the base triangle.
            let base = [Slope::ZERO, Slope::INFINITY, Slope::ONE];
            let others: Vec<Slope> = base.into_iter().filter(|b| *b != s).collect();
            return Ok([c.trace_at(others[0])?, c.trace_at(others[1])?]);
        }
    };
    Ok([c.trace_at(e.left)?, c.trace_at(e.right)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(s: &str) -> Character {
        Character::new(s.parse().unwrap())
    }

    #[test]
    fn search_examples() {
        let r = search_end_invariants(&ch("3,3,3"), 2.5, 30).unwrap();
        assert_eq!(r.classification, EndClass::Empty);
        assert!(r.candidates.is_empty());

        let r = search_end_invariants(&ch("0,3,3i"), 2.5, 30).unwrap();
        assert_eq!(r.classification, EndClass::SingleCurve);
        assert_eq!(r.rational_candidates().map(|(s, _)| s).collect::<Vec<_>>(), vec![Slope::ZERO]);

        let r = search_end_invariants(&ch("1,1,1"), 2.5, 12).unwrap();
        assert_eq!(r.classification, EndClass::FullPL);
        assert!(!r.pruned_any);
    }

    #[test]
    fn classify_examples() {
        let r = classify_end_set(&ch("0,0,3"), 10_000).unwrap();
        assert_eq!((r.classification, r.theorem_basis), (EndClass::FullPL, TheoremBasis::Dihedral));
        let r = classify_end_set(&ch("2,2,2"), 10_000).unwrap();
        assert_eq!((r.classification, r.theorem_basis), (EndClass::FullPL, TheoremBasis::Reducible));
        let r = classify_end_set(&ch("0,3,3i"), 10_000).unwrap();
        assert_eq!((r.classification, r.theorem_basis), (EndClass::SingleCurve, TheoremBasis::Imaginary));
        let r = classify_end_set(&ch("3,3,3"), 10_000).unwrap();
        assert_eq!((r.classification, r.theorem_basis), (EndClass::Empty, TheoremBasis::ExtendedBq));
        let r = classify_end_set(&ch("1,1,1"), 10_000).unwrap();
        assert_eq!((r.classification, r.theorem_basis), (EndClass::FullPL, TheoremBasis::Su2Proxy));
        assert!(classify_end_set(&ch("3,3,3"), 0).is_err());
    }

    #[test]
    fn normal_form_check() {
        let three = Complex64::from(3.0);
        assert!(zero_normal_form(Complex64::default(), [three, Complex64::new(0.0, 3.0)]));
        assert!(!zero_normal_form(Complex64::default(), [Complex64::from(1.0), Complex64::new(0.0, 1.0)]));
        let tilted = Complex64::from_polar(3.0, 0.3);
        assert!(!zero_normal_form(Complex64::default(), [tilted, tilted * Complex64::i()]));
    }

    #[test]
    fn widths_cover_the_circle() {
        let total: f64 = DualEdge::roots().iter().map(interval_width).sum();
        // The three root intervals plus the base triangle's arcs cover 2π.
        assert!(total > 0.0 && total <= 2.0 * PI + 1e-12);
    }
}
