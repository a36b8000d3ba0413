//! F-crystals over `F_{p^a}` given by the matrix of a sigma-linear Frobenius.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matlat::Mat;
use crate::polygon::{Rational, SlopePolygon};
use crate::witt::{Embedding, Ring, Valuation, Witt};

/// A free `W`-module of rank `n` with `F(v) = A * sigma(v)`. The determinant
/// of `A` is required to be nonzero modulo `p^N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FCrystal {
    matrix: Mat,
}

impl FCrystal {
    pub fn new(matrix: Mat) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::dims("Frobenius matrix must be square and nonempty"));
        }
        if matrix.det()?.val() == Valuation::AtLeastN {
            return Err(Error::precision(
                "det A vanishes modulo p^N; F is not certified injective",
            ));
        }
        Ok(FCrystal { matrix })
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn ring(&self) -> &Ring {
        self.matrix.ring()
    }

    pub fn rank(&self) -> usize {
        self.matrix.rows()
    }

    pub fn det_val(&self) -> Result<u32> {
        self.matrix
            .det()?
            .val()
            .finite()
            .ok_or_else(|| Error::precision("det A vanishes modulo p^N"))
    }

    pub fn hodge_slopes(&self) -> Result<SlopePolygon> {
        let exps = self.matrix.smith()?.finite_exps()?;
        Ok(SlopePolygon::from_integers(
            &exps.iter().map(|&e| e as i64).collect::<Vec<_>>(),
        ))
    }

    /// `A * sigma(A) * ... * sigma^{a-1}(A)`, the matrix of the linear map `F^a`.
    pub fn twisted_power(&self) -> Mat {
        let a = self.ring().degree();
        let mut prod = self.matrix.clone();
        for k in 1..a {
            prod = prod
                .mul(&self.matrix.frobenius_pow(k))
                .expect("square matrices");
        }
        prod
    }

    /// Coefficients (low to high) of the characteristic polynomial of `F^a`.
    pub fn twisted_charpoly(&self) -> Result<Vec<Witt>> {
        self.twisted_power().charpoly()
    }

    pub fn newton_slopes(&self) -> Result<SlopePolygon> {
        let cp = self.twisted_charpoly()?;
        let vals: Vec<Valuation> = cp.iter().map(Witt::val).collect();
        let poly = SlopePolygon::from_valuations_at(&vals, self.ring().precision())?;
        let a = self.ring().degree() as i64;
        Ok(SlopePolygon::new(
            poly.slopes().iter().map(|s| s / a).collect(),
        ))
    }

    /// The crystal with matrix `U^{-1} A sigma(U)`, i.e. `F` written in the
    /// basis given by the columns of `U`.
    pub fn conjugate(&self, u: &Mat) -> Result<Self> {
        if !u.is_square() || u.rows() != self.rank() {
            return Err(Error::dims("change of basis has the wrong shape"));
        }
        if !u.det()?.is_unit() {
            return Err(Error::NotAUnit);
        }
        let inv = u.inverse()?;
        let m = inv.mat.mul(&self.matrix)?.mul(&u.frobenius())?;
        Ok(FCrystal { matrix: m })
    }

    /// The dual crystal `c (A^{-1})^t`. Inverting `A` costs precision, so the
    /// result lives over `W / p^{N''}` with `N'' = N - 2k + val(c)` (capped at
    /// `N`), where `p^k` is the largest elementary divisor of `A`.
    pub fn dual(&self, c: &Witt) -> Result<Self> {
        let (m, u) = c
            .split_unit()
            .ok_or_else(|| Error::precision("similitude factor vanishes modulo p^N"))?;
        let inv = self.matrix.inverse()?;
        let k = inv.denom_exp;
        let precision = self.ring().precision() as i64;
        let target = (precision - 2 * k as i64 + m as i64).min(precision);
        if target <= 0 {
            return Err(Error::precision(format!(
                "dual crystal needs more than N = {precision}"
            )));
        }
        let xt = inv.mat.transpose();
        let body = if m >= k {
            xt.scale(&u.mul_p_pow(m - k))
        } else {
            let known = xt.reduce_to(&self.ring().with_precision(inv.precision)?);
            known
                .div_p_pow(k - m)
                .ok_or_else(|| {
                    Error::NotIntegral(format!(
                        "c (A^-1)^t has an entry of negative valuation (v(c) = {m}, largest divisor p^{k})"
                    ))
                })?
                .scale(&u.reduce_to(known.ring()))
        };
        let ring = self.ring().with_precision(target as u32)?;
        FCrystal::new(body.reduce_to(&ring))
    }

    /// Rereads the matrix over a larger residue field.
    pub fn base_extend(&self, embedding: &Embedding) -> Result<Self> {
        let n = self.rank();
        FCrystal::new(Mat::from_fn(embedding.target(), n, n, |i, j| {
            embedding.map(self.matrix.get(i, j))
        }))
    }

    /// Mazur's inequality: the Newton polygon lies on or above the Hodge
    /// polygon, and both end at `val(det A)`.
    pub fn mazur_check(&self) -> Result<MazurReport> {
        let hodge = self.hodge_slopes()?;
        let newton = self.newton_slopes()?;
        let det_val = self.det_val()?;
        let d = Rational::from_integer(det_val as i64);
        let endpoints_match = hodge.endpoint() == d && newton.endpoint() == d;
        let violation = newton.first_violation(&hodge);
        Ok(MazurReport {
            passed: endpoints_match && violation.is_none(),
            endpoints_match,
            violation,
            det_val,
            hodge,
            newton,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MazurReport {
    pub passed: bool,
    pub endpoints_match: bool,
    /// First abscissa where Newton dips below Hodge.
    pub violation: Option<usize>,
    pub det_val: u32,
    pub hodge: SlopePolygon,
    pub newton: SlopePolygon,
}
