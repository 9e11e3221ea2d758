//! Exact real quadratic irrationals `(a + b√D)/c`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::farey::Slope;

/// The number `(a + b√d)/c` with `c > 0` and `d > 0` not a perfect square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadIrrational {
    pub a: i128,
    pub b: i128,
    pub c: i128,
    pub d: i128,
}

/// Sign of `x + y·√d`.
fn sign_sqrt(x: i128, y: i128, d: i128) -> Ordering {
    let sx = x.cmp(&0);
    let sy = y.cmp(&0);
    match (sx, sy) {
        (Ordering::Equal, _) => sy,
        (_, Ordering::Equal) => sx,
        _ if sx == sy => sx,
        // Opposite signs: compare x² with y²·d.
        _ => {
            let lhs = x * x;
            let rhs = y * y * d;
            match lhs.cmp(&rhs) {
                Ordering::Greater => sx,
                Ordering::Less => sy,
                Ordering::Equal => Ordering::Equal,
            }
        }
    }
}

impl QuadIrrational {
    pub fn new(a: i128, b: i128, c: i128, d: i128) -> QuadIrrational {
        assert!(c != 0 && d > 0, "invalid quadratic irrational");
        if c < 0 {
            QuadIrrational { a: -a, b: -b, c: -c, d }
        } else {
            QuadIrrational { a, b, c, d }
        }
    }

    pub fn to_f64(&self) -> f64 {
        (self.a as f64 + self.b as f64 * (self.d as f64).sqrt()) / self.c as f64
    }

    /// Exact order of this number relative to a slope; `∞` is above
    /// everything.
    pub fn cmp_slope(&self, s: Slope) -> Ordering {
        if s.is_infinite() {
            return Ordering::Less;
        }
        let (p, q) = (s.numer() as i128, s.denom() as i128);
        // (a + b√d)/c − p/q has the sign of q·a − p·c + q·b·√d.
        sign_sqrt(q * self.a - p * self.c, q * self.b, self.d)
    }

    /// Exact comparison with another irrational of the same radicand.
    pub fn cmp_same_radicand(&self, o: &QuadIrrational) -> Ordering {
        assert_eq!(self.d, o.d);
        sign_sqrt(self.a * o.c - o.a * self.c, self.b * o.c - o.b * self.c, self.d)
    }
}

impl fmt::Display for QuadIrrational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} {}√{})/{}", self.a, if self.b < 0 { '-' } else { '+' }, self.b.abs(), self.d, self.c)
    }
}

/// Rational with the smallest denominator strictly between `lo` and `hi`
/// (ties go to the smaller numerator), found by Stern–Brocot descent.
pub fn simplest_between(lo: &QuadIrrational, hi: &QuadIrrational) -> Slope {
    if lo.cmp_slope(Slope::ZERO) == Ordering::Less && hi.cmp_slope(Slope::ZERO) == Ordering::Greater {
        return Slope::ZERO;
    }
    let negate = |x: &QuadIrrational| QuadIrrational::new(-x.a, -x.b, x.c, x.d);
    let (lo, hi, flip) = if hi.cmp_slope(Slope::ZERO) != Ordering::Greater {
        (negate(hi), negate(lo), true)
    } else {
        (*lo, *hi, false)
    };
    let (mut lp, mut lq, mut rp, mut rq) = (0i64, 1i64, 1i64, 0i64);
    loop {
        let m = Slope::from_primitive(lp + rp, lq + rq);
        if lo.cmp_slope(m) != Ordering::Less {
            lp += rp;
            lq += rq;
        } else if hi.cmp_slope(m) != Ordering::Greater {
            rp += lp;
            rq += lq;
        } else {
            return if flip { Slope::from_primitive(-m.numer(), m.denom()) } else { m };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_ratio_comparisons() {
        let phi = QuadIrrational::new(1, 1, 2, 5);
        let psi = QuadIrrational::new(1, -1, 2, 5);
        assert_eq!(phi.cmp_slope("3/2".parse().unwrap()), Ordering::Greater);
        assert_eq!(phi.cmp_slope("5/3".parse().unwrap()), Ordering::Less);
        assert_eq!(psi.cmp_slope("-2/3".parse().unwrap()), Ordering::Greater);
        assert_eq!(psi.cmp_slope("-3/5".parse().unwrap()), Ordering::Less);
        assert_eq!(psi.cmp_same_radicand(&phi), Ordering::Less);
        assert_eq!(simplest_between(&psi, &phi), Slope::ZERO);
    }

    #[test]
    fn simplest_rational() {
        // (3 ± √5)/2 ≈ 0.38, 2.62.
        let lo = QuadIrrational::new(3, -1, 2, 5);
        let hi = QuadIrrational::new(3, 1, 2, 5);
        assert_eq!(simplest_between(&lo, &hi), Slope::ONE);
        // √2 ≈ 1.414 and (3 + √2)/3 ≈ 1.471: 3/2 is too big, 7/5 too small.
        let lo = QuadIrrational::new(0, 1, 1, 2);
        let hi = QuadIrrational::new(3, 1, 3, 2);
        assert_eq!(simplest_between(&lo, &hi), "10/7".parse().unwrap());
        let nlo = QuadIrrational::new(-3, -1, 3, 2);
        let nhi = QuadIrrational::new(0, -1, 1, 2);
        assert_eq!(simplest_between(&nlo, &nhi), "-10/7".parse().unwrap());
    }
}
