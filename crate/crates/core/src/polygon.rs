//! Convex slope polygons on `[0, n]`.

use std::fmt;

use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::witt::Valuation;

pub type Rational = Ratio<i64>;

/// A convex piecewise-linear graph through `(0, 0)` with nondecreasing
/// slopes `λ_1 <= ... <= λ_n` between consecutive integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SlopePolygon {
    slopes: Vec<Rational>,
}

impl SlopePolygon {
    pub fn new(mut slopes: Vec<Rational>) -> Self {
        slopes.sort();
        SlopePolygon { slopes }
    }

    pub fn from_integers(slopes: &[i64]) -> Self {
        Self::new(slopes.iter().map(|&s| Rational::from_integer(s)).collect())
    }

    /// Lower convex hull of the points `(i, vals[n - i])`, where `vals[j]` is
    /// the valuation of the coefficient of `x^j` in a monic polynomial of
    /// degree `n`.
    pub fn from_valuations(vals: &[Valuation]) -> Result<Self> {
        let n = vals
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::dims("empty coefficient list"))?;
        if vals[n] != Valuation::Finite(0) {
            return Err(Error::InvalidParams(
                "leading coefficient must be a unit".into(),
            ));
        }
        if vals[0] == Valuation::AtLeastN {
            return Err(Error::precision(
                "constant term vanishes modulo p^N; Frobenius not certified injective",
            ));
        }
        let points: Vec<(i64, i64)> = (0..=n)
            .filter_map(|i| vals[n - i].finite().map(|v| (i as i64, v as i64)))
            .collect();
        let mut hull: Vec<(i64, i64)> = Vec::new();
        for &pt in &points {
            while hull.len() >= 2 {
                let (x1, y1) = hull[hull.len() - 2];
                let (x2, y2) = hull[hull.len() - 1];
                // drop the middle point unless it lies strictly below the chord
                if (y2 - y1) * (pt.0 - x1) >= (pt.1 - y1) * (x2 - x1) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(pt);
        }
        let mut slopes = Vec::with_capacity(n);
        for w in hull.windows(2) {
            let s = Rational::new(w[1].1 - w[0].1, w[1].0 - w[0].0);
            for _ in w[0].0..w[1].0 {
                slopes.push(s);
            }
        }
        Ok(SlopePolygon { slopes })
    }

    /// Same as [`from_valuations`](Self::from_valuations), but additionally
    /// certifies that no coefficient known only to be divisible by `p^precision`
    /// could pull the hull down.
    pub fn from_valuations_at(vals: &[Valuation], precision: u32) -> Result<Self> {
        let poly = Self::from_valuations(vals)?;
        let n = vals.len() - 1;
        let bound = Rational::from_integer(precision as i64);
        for i in 0..=n {
            if vals[n - i] == Valuation::AtLeastN && poly.value(i) > bound {
                return Err(Error::precision(format!(
                    "hull at abscissa {i} exceeds the working precision {precision}"
                )));
            }
        }
        Ok(poly)
    }

    pub fn slopes(&self) -> &[Rational] {
        &self.slopes
    }

    pub fn len(&self) -> usize {
        self.slopes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slopes.is_empty()
    }

    /// Height at integer abscissa `i`.
    pub fn value(&self, i: usize) -> Rational {
        self.slopes[..i].iter().copied().sum()
    }

    pub fn endpoint(&self) -> Rational {
        self.value(self.len())
    }

    pub fn lies_on(&self, a: usize, b: Rational) -> bool {
        a <= self.len() && self.value(a) == b
    }

    pub fn is_break_point(&self, a: usize, b: Rational) -> bool {
        a > 0 && a < self.len() && self.value(a) == b && self.slopes[a - 1] < self.slopes[a]
    }

    /// All interior vertices where the slope strictly increases.
    pub fn break_points(&self) -> Vec<(usize, Rational)> {
        (1..self.len())
            .filter(|&i| self.slopes[i - 1] < self.slopes[i])
            .map(|i| (i, self.value(i)))
            .collect()
    }

    /// Whether `self` lies on or above `lower` at every integer abscissa.
    /// Different endpoints are reported as an error rather than `false`.
    pub fn dominates(&self, lower: &SlopePolygon) -> Result<bool> {
        if self.len() != lower.len() {
            return Err(Error::dims("polygons of different length"));
        }
        if self.endpoint() != lower.endpoint() {
            return Err(Error::EndpointMismatch {
                upper: format_rational(&self.endpoint()),
                lower: format_rational(&lower.endpoint()),
            });
        }
        Ok((1..self.len()).all(|i| self.value(i) >= lower.value(i)))
    }

    /// First abscissa where `self` dips below `lower`.
    pub fn first_violation(&self, lower: &SlopePolygon) -> Option<usize> {
        (1..self.len().min(lower.len())).find(|&i| self.value(i) < lower.value(i))
    }

    /// Whether `λ_i + λ_{n+1-i} = m` for all `i`.
    pub fn is_symmetric(&self, m: Rational) -> bool {
        self.symmetry_violation(m).is_none()
    }

    /// First index `i` (0-based) with `λ_i + λ_{n-1-i} != m`.
    pub fn symmetry_violation(&self, m: Rational) -> Option<usize> {
        let n = self.len();
        (0..n).find(|&i| self.slopes[i] + self.slopes[n - 1 - i] != m)
    }

    /// Slopes as `"num/den"` strings.
    pub fn to_strings(&self) -> Vec<String> {
        self.slopes.iter().map(format_rational).collect()
    }
}

impl fmt::Display for SlopePolygon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_strings().join(", "))
    }
}

impl Serialize for SlopePolygon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

/// Always includes the denominator: `"3/1"`, `"-1/2"`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}
