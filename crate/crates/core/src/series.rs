//! McShane-type identities summed over the simple closed curves.
//!
//! Terms are accumulated layer by layer in the dual tree. A subtree behind an
//! escaping edge `{a, b} → s` is skipped once a rigorous bound on the sum of
//! its terms drops below its share of the tolerance; the skipped bounds add
//! up to the reported tail bound.
//!
//! Subtree bound. Write `ū(t) = 1/(|t| − 1)²`, which dominates `|e^{−l}|`.
//! Inside the subtree every trace is at least `|s|`, each step away from a
//! curve `p` multiplies `ū` by at most `ū(p)`, and so
//!
//! ```text
//! Σ ū ≤ ū(s) · (1 + (1 + ū(s)/(1 − 2ū(s))) · (ρ_a + ρ_b)),   ρ = ū/(1 − ū)
//! ```
//!
//! and each term is at most `ū(t) · f(|s|)/ū(s)` where `f` bounds a single
//! term of trace modulus `|s|`. Edges next to a curve of small trace never
//! escape; there the closed form of the fan around that curve gives a
//! geometric bound instead.

use std::collections::HashSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bq::{fan_is_constant, fan_shape, is_escaping, transform_triangle, FanShape, NoQuotient, TriangleQuotient, ESCAPE_MARGIN};
use crate::character::{acosh_branch, half_length_exp, Character, TraceTriple};
use crate::error::{Error, Result};
use crate::farey::{DualEdge, IntMatrix, Slope};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Largest `|κ + 2|` accepted for the cusp identity.
pub const CUSP_KAPPA_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesVariant {
    /// Terms `log((e^ν + e^l)/(e^{−ν} + e^l))`, sum `ν mod 2πi`.
    General,
    /// Terms `1/(1 + e^l)`, sum `1/2` (requires `κ = −2`).
    Cusp,
}

impl std::str::FromStr for SeriesVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<SeriesVariant> {
        match s.to_ascii_lowercase().as_str() {
            "general" => Ok(SeriesVariant::General),
            "cusp" => Ok(SeriesVariant::Cusp),
            _ => Err(Error::Parse(format!("unknown series variant {s:?}"))),
        }
    }
}

/// A curve whose neighbours all have bounded trace. Infinitely many terms
/// then stay away from zero and the series cannot converge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceWitness {
    pub center: Slope,
    pub center_trace: Complex64,
}

/// Contribution of one depth of the dual tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRow {
    pub depth: usize,
    pub terms: usize,
    pub layer_sum: Complex64,
    pub layer_abs: f64,
    /// Residual of the partial sum after this layer.
    pub cumulative_residual: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub variant: SeriesVariant,
    pub nu: Complex64,
    pub target: Complex64,
    pub partial_sum: Complex64,
    pub term_count: usize,
    /// Rigorous bound on the omitted terms; infinite when none is available.
    pub tail_bound: f64,
    pub residual: Complex64,
    pub converged: bool,
    pub diverged: bool,
    pub divergence: Option<DivergenceWitness>,
    pub pruned_subtrees: usize,
    pub layers: Vec<LayerRow>,
}

impl SeriesReport {
    /// CSV rows `depth,layer_sum_re,layer_sum_im,cumulative_residual`.
    pub fn csv_rows(&self) -> Vec<String> {
        self.layers
            .iter()
            .map(|l| format!("{},{:?},{:?},{:?}", l.depth, l.layer_sum.re, l.layer_sum.im, l.cumulative_residual.norm()))
            .collect()
    }
}

/// `cosh⁻¹(−κ/2)` with real part `≥ 0` and imaginary part in `(−π, π]`.
pub fn nu(kappa: Complex64) -> Complex64 {
    acosh_branch(-kappa / 2.0)
}

/// `value − target − 2πik` for the integer `k` of least modulus; ties go to
/// the `k` nearer zero.
pub fn residual_mod_2pi_i(value: Complex64, target: Complex64) -> Complex64 {
    let d = value - target;
    let x = d.im / TWO_PI;
    let k = (x.abs() - 0.5).ceil().max(0.0) * x.signum();
    d - Complex64::new(0.0, TWO_PI * k)
}

/// Principal `log(1 + w)`, accurate for small `w`.
fn log1p_complex(w: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * w.re + w.re * w.re + w.im * w.im).ln_1p();
    Complex64::new(re, w.im.atan2(1.0 + w.re))
}

/// One term of the identity for a curve of the given trace.
///
/// Uses `u = e^{−l} = 1/E²` with `E = e^{l/2}`, `|E| ≥ 1`, so large traces
/// never overflow.
pub fn series_term(trace: Complex64, nu: Complex64, variant: SeriesVariant) -> Result<Complex64> {
    let e = half_length_exp(trace);
    let u = 1.0 / (e * e);
    let pole = |z: Complex64| z.norm() <= 1e-14;
    match variant {
        SeriesVariant::Cusp => {
            if pole(1.0 + u) {
                return Err(Error::SingularTrace(trace));
            }
            Ok(u / (1.0 + u))
        }
        SeriesVariant::General => {
            let (ep, em) = (nu.exp(), (-nu).exp());
            let den = 1.0 + em * u;
            if pole(den) || pole(1.0 + ep * u) {
                return Err(Error::SingularTrace(trace));
            }
            Ok(log1p_complex((ep - em) * u / den))
        }
    }
}

/// Bound on `|term|` as a function of the trace modulus.
#[derive(Clone, Copy, Debug)]
pub(crate) struct TermBound {
    variant: SeriesVariant,
    sinh2: f64,
    em: f64,
}

impl TermBound {
    pub(crate) fn new(nu: Complex64, variant: SeriesVariant) -> TermBound {
        TermBound {
            variant,
            sinh2: (2.0 * nu.sinh()).norm(),
            em: (-nu).exp().norm(),
        }
    }

    /// Upper bound on `|term|` for every trace of modulus at least `m`.
    fn at(&self, m: f64) -> Option<f64> {
        if m <= 2.0 {
            return None;
        }
        let ubar = 1.0 / ((m - 1.0) * (m - 1.0));
        match self.variant {
            SeriesVariant::Cusp => Some(ubar / (1.0 - ubar)),
            SeriesVariant::General => {
                let den = 1.0 - self.em * ubar;
                if den <= 0.0 {
                    return None;
                }
                let phi = self.sinh2 * ubar / den;
                (phi < 1.0).then(|| phi / (1.0 - phi))
            }
        }
    }

    /// Bound on the sum of all terms behind the escaping edge `{a, b} → s`.
    pub(crate) fn subtree(&self, ta: Complex64, tb: Complex64, ts: Complex64) -> Option<f64> {
        self.subtree_moduli(ta.norm(), tb.norm(), ts.norm())
    }

    /// [`TermBound::subtree`] from lower bounds on the three moduli; the
    /// bound decreases in each argument.
    fn subtree_moduli(&self, ma: f64, mb: f64, ms: f64) -> Option<f64> {
        let r = |m: f64| (m > 2.0).then(|| 1.0 / ((m - 1.0) * (m - 1.0)));
        let (ra, rb, rs) = (r(ma)?, r(mb)?, r(ms)?);
        if ra >= 1.0 || rb >= 1.0 || 2.0 * rs >= 1.0 {
            return None;
        }
        let fan = ra / (1.0 - ra) + rb / (1.0 - rb);
        let total = 1.0 + (1.0 + rs / (1.0 - 2.0 * rs)) * fan;
        let b = self.at(ms)? * total;
        b.is_finite().then_some(b)
    }

    /// Bound on the sum of all terms behind the edge `{c, n0} → n1`, taken
    /// around the fan of `c`.
    ///
    /// For a hyperbolic centre the neighbours satisfy `|n_k| ≥ L_k` with
    /// `L_k = |A|·r^k − |B|·r^{−k}` and `L_{k+1} ≥ r·L_k`. The `k`-th
    /// neighbour together with the subtree between `n_{k−1}` and `n_k`
    /// therefore contributes at most `h_1 · r^{−2(k−1)}`.
    pub(crate) fn fan(&self, c: Complex64, n0: Complex64, n1: Complex64) -> Option<f64> {
        let FanShape::Hyperbolic { lambda, a, b } = fan_shape(c, n0, n1) else {
            return None;
        };
        let r = lambda.norm();
        let (m0, m1) = (n0.norm(), a.norm() * r - b.norm() / r);
        let floor = 2.0 + ESCAPE_MARGIN;
        let w = m0 * m1 - c.norm();
        if m0 < floor || m1 < floor || w < c.norm() {
            return None;
        }
        let h = self.at(m1)? + self.subtree_moduli(m0, m1, w)?;
        let total = h / (1.0 - 1.0 / (r * r));
        total.is_finite().then_some(total)
    }

    /// Smallest available bound for the subtree behind `{l, r} → apex`.
    pub(crate) fn edge(&self, tl: Complex64, tr: Complex64, to: Complex64, ta: Complex64) -> Option<f64> {
        let esc = if is_escaping(tl, tr, to, ta) { self.subtree(tl, tr, ta) } else { None };
        [esc, self.fan(tl, tr, ta), self.fan(tr, tl, ta)]
            .into_iter()
            .flatten()
            .min_by(|x, y| x.total_cmp(y))
    }
}

/// Result of a raw summation before residuals are attached.
#[derive(Clone, Debug)]
pub(crate) struct SeriesSum {
    pub sum: Complex64,
    pub term_count: usize,
    pub tail_bound: f64,
    pub divergence: Option<DivergenceWitness>,
    pub pruned: usize,
    /// Depth, term count, layer sum and layer absolute sum.
    pub layers: Vec<(usize, usize, Complex64, f64)>,
}

struct Item {
    edge: DualEdge,
    traces: [Complex64; 3],
}

/// Whether every neighbour of `center` has bounded trace.
fn bounded_fan(center: Complex64, n0: Complex64, n1: Complex64) -> bool {
    matches!(fan_shape(center, n0, n1), FanShape::Elliptic) || fan_is_constant(center, n0, n1)
}

/// Sums `term` over one representative of every orbit class of slopes
/// accepted by `keep`, breadth first over the quotient of the dual tree.
pub(crate) fn sum_series<Q, F>(
    triple: &TraceTriple,
    nu: Complex64,
    variant: SeriesVariant,
    tol: f64,
    max_terms: usize,
    quotient: &Q,
    keep: F,
) -> Result<SeriesSum>
where
    Q: TriangleQuotient,
    F: Fn(Slope) -> Result<bool>,
{
    let bound = TermBound::new(nu, variant);
    let trivial = quotient.is_trivial();
    let mut counted: HashSet<Slope> = HashSet::new();
    let mut visited: HashSet<crate::farey::FareyTriangle> = HashSet::new();
    let mut out = SeriesSum {
        sum: Complex64::new(0.0, 0.0),
        term_count: 0,
        tail_bound: 0.0,
        divergence: None,
        pruned: 0,
        layers: Vec::new(),
    };
    // With ν = 0 every general term vanishes and nothing can diverge.
    let terms_vanish = variant == SeriesVariant::General && nu.norm() == 0.0;

    let mut add = |s: Slope, t: Complex64, layer: &mut (usize, Complex64, f64)| -> Result<()> {
        if !trivial {
            let class = quotient.slope_class(s)?;
            if !counted.insert(class) {
                return Ok(());
            }
        }
        if !keep(s)? {
            return Ok(());
        }
        let v = series_term(t, nu, variant).map_err(|_| Error::SingularTerm(s))?;
        layer.0 += 1;
        layer.1 += v;
        layer.2 += v.norm();
        Ok(())
    };

    let base = crate::farey::FareyTriangle::BASE;
    if !trivial {
        let g = quotient.canonicalize(&base)?;
        visited.insert(transform_triangle(&g, &base)?);
    }
    let [x, y, z] = triple.as_array();
    let mut layer = (0usize, Complex64::new(0.0, 0.0), 0.0);
    for (s, t) in [(Slope::ZERO, x), (Slope::INFINITY, y), (Slope::ONE, z)] {
        add(s, t, &mut layer)?;
    }
    out.sum += layer.1;
    out.term_count += layer.0;
    out.layers.push((0, layer.0, layer.1, layer.2));

    let mut frontier: Vec<Item> = DualEdge::roots()
        .into_iter()
        .zip([[x, z, y], [z, y, x], [x, y, z]])
        .map(|(edge, traces)| Item { edge, traces })
        .collect();
    let mut depth = 0usize;
    while !frontier.is_empty() {
        depth += 1;
        if out.term_count >= max_terms {
            break;
        }
        // Kraft share of a subtree rooted at this depth.
        let budget = tol * 0.5f64.powi(depth as i32 - 1) / 3.0;
        let mut layer = (0usize, Complex64::new(0.0, 0.0), 0.0);
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for item in frontier {
            let [tl, tr, to] = item.traces;
            let ta = tl * tr - to;
            let e = item.edge;
            if let Some(b) = bound.edge(tl, tr, to, ta) {
                if b <= budget {
                    out.tail_bound += b;
                    out.pruned += 1;
                    continue;
                }
            }
            if !trivial {
                let far = e.far_triangle();
                let g: IntMatrix = quotient.canonicalize(&far)?;
                if !visited.insert(transform_triangle(&g, &far)?) {
                    continue;
                }
            }
            if !terms_vanish && out.divergence.is_none() {
                if bounded_fan(tl, tr, ta) {
                    out.divergence = Some(DivergenceWitness { center: e.left, center_trace: tl });
                } else if bounded_fan(tr, tl, ta) {
                    out.divergence = Some(DivergenceWitness { center: e.right, center_trace: tr });
                }
            }
            add(e.apex, ta, &mut layer)?;
            let [lc, rc] = e.children()?;
            next.push(Item { edge: lc, traces: [tl, ta, tr] });
            next.push(Item { edge: rc, traces: [ta, tr, tl] });
        }
        out.sum += layer.1;
        out.term_count += layer.0;
        out.layers.push((depth, layer.0, layer.1, layer.2));
            frontier = next;
        if out.divergence.is_some() {
            break;
        }
    }

    // Whatever is left unexplored contributes its bound, if it has one.
    for item in &frontier {
        let [tl, tr, to] = item.traces;
        let ta = tl * tr - to;
        match bound.edge(tl, tr, to, ta) {
            Some(b) => out.tail_bound += b,
            None => {
                out.tail_bound = f64::INFINITY;
                break;
            }
        }
    }
    Ok(out)
}

pub(crate) fn layer_rows(sum: &SeriesSum, target: Complex64, residual: impl Fn(Complex64, Complex64) -> Complex64) -> Vec<LayerRow> {
    let mut acc = Complex64::new(0.0, 0.0);
    sum.layers
        .iter()
        .map(|&(depth, terms, layer_sum, layer_abs)| {
            acc += layer_sum;
            LayerRow {
                depth,
                terms,
                layer_sum,
                layer_abs,
                cumulative_residual: residual(acc, target),
            }
        })
        .collect()
}

/// Evaluates the identity for `c` to within `tol`, summing at most
/// `max_terms` terms.
///
/// The report is `converged` only when the rigorous tail bound is at most
/// `tol`; `diverged` is set once a curve with a bounded fan of neighbours
/// turns up, which rules out convergence.
pub fn evaluate_identity(c: &Character, variant: SeriesVariant, tol: f64, max_terms: usize) -> Result<SeriesReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let kappa = c.kappa;
    let (nu_value, target) = match variant {
        SeriesVariant::Cusp => {
            if (kappa + 2.0).norm() > CUSP_KAPPA_TOL {
                return Err(Error::InvalidArgument(format!(
                    "cusp identity needs kappa = -2, got {}",
                    crate::character::format_complex(kappa)
                )));
            }
            (Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0))
        }
        SeriesVariant::General => {
            if (kappa - 2.0).norm() <= crate::character::CLASSIFY_TOL {
                return Err(Error::InvalidArgument("kappa = 2 is reducible; the identity does not apply".into()));
            }
            let v = nu(kappa);
            (v, v)
        }
    };
    let raw = sum_series(&c.triple, nu_value, variant, tol, max_terms, &NoQuotient, |_| Ok(true))?;
    let residual = |v: Complex64, t: Complex64| match variant {
        SeriesVariant::General => residual_mod_2pi_i(v, t),
        SeriesVariant::Cusp => v - t,
    };
    Ok(SeriesReport {
        variant,
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

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn nu_examples() {
        assert!(nu(c(-2.0, 0.0)).norm() < 1e-12);
        assert!((nu(c(-4.0, 0.0)) - c(1.3169578969248166, 0.0)).norm() < 1e-12);
        assert!((nu(c(2.0, 0.0)) - c(0.0, std::f64::consts::PI)).norm() < 1e-7);
    }

    #[test]
    fn residual_examples() {
        let t = c(1.0, 0.3);
        assert_eq!(residual_mod_2pi_i(t, t), c(0.0, 0.0));
        assert!(residual_mod_2pi_i(t + c(0.0, TWO_PI), t).norm() < 1e-15);
        let half = residual_mod_2pi_i(t + c(0.0, std::f64::consts::PI), t);
        assert!((half - c(0.0, std::f64::consts::PI)).norm() < 1e-15);
        let half = residual_mod_2pi_i(t - c(0.0, std::f64::consts::PI), t);
        assert!((half + c(0.0, std::f64::consts::PI)).norm() < 1e-15);
    }

    #[test]
    fn term_examples() {
        let v = series_term(c(3.0, 0.0), c(0.0, 0.0), SeriesVariant::Cusp).unwrap();
        let el = (7.0 + 3.0 * 5f64.sqrt()) / 2.0;
        assert!((v - c(1.0 / (1.0 + el), 0.0)).norm() < 1e-15);
        assert!((series_term(c(2.0, 0.0), c(0.0, 0.0), SeriesVariant::Cusp).unwrap() - c(0.5, 0.0)).norm() < 1e-7);
        for t in [c(3.0, 0.0), c(0.5, 1.0), c(1e6, 3.0)] {
            assert_eq!(series_term(t, c(0.0, 0.0), SeriesVariant::General).unwrap(), c(0.0, 0.0));
        }
        assert!(matches!(
            series_term(c(0.0, 0.0), c(0.0, 0.0), SeriesVariant::Cusp),
            Err(Error::SingularTrace(_))
        ));
    }

    #[test]
    fn markov_cusp_identity() {
        let r = evaluate_identity(&Character::new("3,3,3".parse().unwrap()), SeriesVariant::Cusp, 1e-8, 10_000_000).unwrap();
        assert!(r.converged, "{:?}", (r.tail_bound, r.term_count));
        assert!(r.residual.norm() < 1e-6, "{}", r.residual);
    }

    #[test]
    fn general_identity_and_marking() {
        let a = evaluate_identity(&Character::new("3,3,4".parse().unwrap()), SeriesVariant::General, 1e-8, 10_000_000).unwrap();
        assert!(a.converged);
        assert!(a.residual.norm() < 1e-6, "{}", a.residual);
        let b = evaluate_identity(&Character::new("3,3,5".parse().unwrap()), SeriesVariant::General, 1e-8, 10_000_000).unwrap();
        assert!((a.partial_sum - b.partial_sum).norm() < 2e-8);
    }

    #[test]
    fn su2_type_triple_diverges() {
        let r = evaluate_identity(&Character::new("1,1,1".parse().unwrap()), SeriesVariant::General, 1e-8, 1_000_000).unwrap();
        assert!(r.diverged && !r.converged);
    }

    #[test]
    fn preconditions() {
        let markov = Character::new("3,3,4".parse().unwrap());
        assert!(evaluate_identity(&markov, SeriesVariant::Cusp, 1e-8, 100).is_err());
        assert!(evaluate_identity(&markov, SeriesVariant::General, 0.0, 100).is_err());
        let red = Character::new("2,2,2".parse().unwrap());
        assert!(evaluate_identity(&red, SeriesVariant::General, 1e-8, 100).is_err());
    }
}
