//! Self-dual F-crystals: a crystal `(M, F)` with a perfect pairing
//! `<x, y> = x^t G y` satisfying `<Fx, Fy> = c sigma(<x, y>)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::crystal::FCrystal;
use crate::error::{Error, Result};
use crate::matlat::{Lattice, Mat};
use crate::polygon::Rational;
use crate::report::Verdict;
use crate::witt::{Ring, Witt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    Symplectic,
    Orthogonal,
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormKind::Symplectic => "symplectic",
            FormKind::Orthogonal => "orthogonal",
        })
    }
}

impl FormKind {
    /// Antidiagonal form. Symplectic: `+1` in the top half, `-1` below.
    /// Orthogonal: all ones.
    pub fn standard_form(self, ring: &Ring, n: usize) -> Mat {
        Mat::from_fn(ring, n, n, |i, j| {
            if i + j + 1 != n {
                Witt::zero(ring)
            } else if self == FormKind::Symplectic && 2 * i >= n {
                Witt::from_int(ring, -1)
            } else {
                Witt::one(ring)
            }
        })
    }
}

/// The quintuple `(M, F, F*, Psi, c)` collapsed to `(A, G, c)`; the dual
/// Frobenius is recovered as `c (A^{-1})^t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelfDualCrystal {
    base: FCrystal,
    form: Mat,
    c: Witt,
    kind: FormKind,
}

impl SelfDualCrystal {
    /// Only shapes are checked here; see [`validate`](Self::validate).
    pub fn new(base: FCrystal, form: Mat, c: Witt, kind: FormKind) -> Result<Self> {
        if form.rows() != base.rank() || form.cols() != base.rank() {
            return Err(Error::dims("form and Frobenius have different sizes"));
        }
        if c.split_unit().is_none() {
            return Err(Error::precision("similitude factor vanishes modulo p^N"));
        }
        Ok(SelfDualCrystal {
            base,
            form,
            c,
            kind,
        })
    }

    pub fn base(&self) -> &FCrystal {
        &self.base
    }

    pub fn matrix(&self) -> &Mat {
        self.base.matrix()
    }

    pub fn form(&self) -> &Mat {
        &self.form
    }

    pub fn c(&self) -> &Witt {
        &self.c
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn ring(&self) -> &Ring {
        self.base.ring()
    }

    pub fn rank(&self) -> usize {
        self.base.rank()
    }

    /// `val(c)`.
    pub fn nu(&self) -> u32 {
        self.c.split_unit().expect("checked at construction").0
    }

    /// The same structure written in the basis given by the columns of `U`.
    pub fn conjugate(&self, u: &Mat) -> Result<Self> {
        Ok(SelfDualCrystal {
            base: self.base.conjugate(u)?,
            form: u.transpose().mul(&self.form)?.mul(u)?,
            c: self.c.clone(),
            kind: self.kind,
        })
    }

    pub fn kind_verdict(&self) -> Verdict {
        let gt = self.form.transpose();
        let ok = match self.kind {
            FormKind::Symplectic => gt == self.form.neg(),
            FormKind::Orthogonal => gt == self.form,
        };
        let want = match self.kind {
            FormKind::Symplectic => "G^t = -G",
            FormKind::Orthogonal => "G^t = G",
        };
        Verdict::new("kind", ok, format!("{} form: {want}", self.kind))
    }

    pub fn form_unit_verdict(&self) -> Result<Verdict> {
        let det = self.form.det()?;
        Ok(Verdict::new(
            "form_unit",
            det.is_unit(),
            format!("val(det G) = {}", det.val()),
        ))
    }

    /// `A^t G A = c sigma(G)` entrywise.
    pub fn similitude_verdict(&self) -> Result<Verdict> {
        let a = self.matrix();
        let lhs = a.transpose().mul(&self.form)?.mul(a)?;
        let rhs = self.form.frobenius().scale(&self.c);
        let diff = lhs.sub(&rhs)?;
        Ok(Verdict::new(
            "similitude",
            diff.is_zero(),
            format!(
                "A^t G A - c sigma(G) has minimum valuation {}",
                diff.min_val()
            ),
        ))
    }

    pub fn dual_integral_verdict(&self) -> Verdict {
        match self.base.dual(&self.c) {
            Ok(d) => Verdict::pass(
                "dual_integral",
                format!("c (A^-1)^t integral to precision {}", d.ring().precision()),
            ),
            Err(e) => Verdict::fail("dual_integral", e.to_string()),
        }
    }

    /// `a_i + a_{n+1-i} = val(c)` and `λ_i + λ_{n+1-i} = val(c)`.
    pub fn slope_symmetry_check(&self) -> Result<Vec<Verdict>> {
        let m = Rational::from_integer(self.nu() as i64);
        let mut out = Vec::new();
        for (name, poly) in [
            ("hodge_symmetry", self.base.hodge_slopes()?),
            ("newton_symmetry", self.base.newton_slopes()?),
        ] {
            out.push(match poly.symmetry_violation(m) {
                None => Verdict::pass(name, format!("{poly}: pairs sum to {m}")),
                Some(i) => Verdict::fail(
                    name,
                    format!(
                        "{poly}: slopes {} and {} do not sum to {m}",
                        i + 1,
                        poly.len() - i
                    ),
                ),
            });
        }
        Ok(out)
    }

    /// `F(M)^⊥ = c^{-1} F(M)`, checked by mutual containment.
    pub fn frobenius_lattice_perp(&self) -> Result<Verdict> {
        let image = Lattice::span(self.matrix().clone())?;
        let perp = image.perp(&self.form)?;
        let scaled = image.scale_inv(&self.c)?;
        let ok = perp.equals(&scaled)?;
        Ok(Verdict::new(
            "frobenius_lattice_perp",
            ok,
            if ok {
                "F(M)^perp = c^-1 F(M)".to_string()
            } else {
                format!("F(M)^perp = {perp:?} differs from c^-1 F(M) = {scaled:?}")
            },
        ))
    }

    /// All defining identities, one verdict each.
    pub fn validate(&self) -> Result<Vec<Verdict>> {
        let mut out = vec![
            self.kind_verdict(),
            self.form_unit_verdict()?,
            self.similitude_verdict()?,
            self.dual_integral_verdict(),
        ];
        out.extend(self.slope_symmetry_check()?);
        Ok(out)
    }

    pub fn bilinear_form(&self) -> BilinearForm<'_> {
        BilinearForm { crystal: self }
    }
}

/// `(x, y) -> x^t G y` for a fixed self-dual crystal.
#[derive(Debug, Clone, Copy)]
pub struct BilinearForm<'a> {
    crystal: &'a SelfDualCrystal,
}

impl BilinearForm<'_> {
    pub fn pair(&self, x: &[Witt], y: &[Witt]) -> Result<Witt> {
        let gy = self.crystal.form.mul_vec(y)?;
        if x.len() != gy.len() {
            return Err(Error::dims("vector length differs from rank"));
        }
        let ring = self.crystal.ring();
        Ok(x.iter()
            .zip(&gy)
            .fold(Witt::zero(ring), |acc, (a, b)| &acc + &(a * b)))
    }

    /// `F(x) = A sigma(x)`.
    pub fn frobenius(&self, x: &[Witt]) -> Result<Vec<Witt>> {
        let sx: Vec<Witt> = x.iter().map(Witt::frobenius).collect();
        self.crystal.matrix().mul_vec(&sx)
    }

    /// `<Fx, Fy> = c sigma(<x, y>)` for the given vectors.
    pub fn similitude_holds(&self, x: &[Witt], y: &[Witt]) -> Result<bool> {
        let lhs = self.pair(&self.frobenius(x)?, &self.frobenius(y)?)?;
        let rhs = self.crystal.c() * &self.pair(x, y)?.frobenius();
        Ok(lhs == rhs)
    }
}
