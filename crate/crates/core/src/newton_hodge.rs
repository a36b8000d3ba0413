//! The Newton-Hodge decomposition at a break point of the Newton polygon
//! lying on the Hodge polygon, for plain and self-dual crystals.
//!
//! The characteristic polynomial of `Π = A sigma(A) ... sigma^{a-1}(A)` is split
//! by Newton iteration into factors carrying the slopes on either side of the
//! break; each summand is the kernel of a factor evaluated at `Π`. Everything
//! claimed by the theorem is then checked on the result rather than assumed.

use rand::Rng;
use serde::Serialize;

use crate::crystal::FCrystal;
use crate::error::{Error, Result};
use crate::matlat::{Lattice, Mat};
use crate::polygon::{format_rational, Rational, SlopePolygon};
use crate::report::Verdict;
use crate::sample::random_unit_matrix;
use crate::selfdual::{FormKind, SelfDualCrystal};
use crate::witt::{Ring, Valuation, Witt};

/// How much precision the kernel computation may give up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitOptions {
    /// Kernel directions must be certified modulo `p^{N - budget}`; defaults to `N/4`.
    pub loss_budget: Option<u32>,
    /// Refuse up front unless `N > val(det A) * n + 2`.
    pub preflight: bool,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            loss_budget: None,
            preflight: true,
        }
    }
}

impl SplitOptions {
    pub fn budget(&self, precision: u32) -> u32 {
        self.loss_budget.unwrap_or(precision / 4)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BreakPointHypothesis {
    pub a: usize,
    #[serde(serialize_with = "ser_rational")]
    pub b: Rational,
    pub newton_break: bool,
    pub on_hodge: bool,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

impl BreakPointHypothesis {
    pub fn check(crystal: &FCrystal, a: usize, b: Rational) -> Result<Self> {
        let newton = crystal.newton_slopes()?;
        let hodge = crystal.hodge_slopes()?;
        Ok(BreakPointHypothesis {
            a,
            b,
            newton_break: newton.is_break_point(a, b),
            on_hodge: hodge.lies_on(a, b),
        })
    }

    pub fn holds(&self) -> bool {
        self.newton_break && self.on_hodge
    }

    /// `NoBreak` when the Newton polygon has no corner at `A`, otherwise
    /// `HypothesisFailed` naming what is wrong.
    fn require(&self, newton: &SlopePolygon) -> Result<()> {
        let n = newton.len();
        if self.a == 0 || self.a >= n {
            return Err(Error::HypothesisFailed(format!(
                "break abscissa {} outside 0 < A < {n}",
                self.a
            )));
        }
        if newton.slopes()[self.a - 1] == newton.slopes()[self.a] {
            return Err(Error::NoBreak(self.a));
        }
        if !self.newton_break {
            return Err(Error::HypothesisFailed(format!(
                "Newton polygon passes through ({}, {}), not ({}, {})",
                self.a,
                format_rational(&newton.value(self.a)),
                self.a,
                format_rational(&self.b)
            )));
        }
        if !self.on_hodge {
            return Err(Error::HypothesisFailed(format!(
                "({}, {}) is not on the Hodge polygon",
                self.a,
                format_rational(&self.b)
            )));
        }
        Ok(())
    }
}

/// `f = low * high` with `low` monic of degree `d` carrying the `d` smallest
/// root valuations; the identity holds modulo `p^precision`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlopeFactor {
    pub low: Vec<Witt>,
    pub high: Vec<Witt>,
    pub precision: u32,
}

/// Division by a monic polynomial.
fn poly_divrem(f: &[Witt], h: &[Witt]) -> (Vec<Witt>, Vec<Witt>) {
    let m = h.len() - 1;
    let ring = f[0].ring();
    let mut r = f.to_vec();
    if f.len() <= m {
        return (vec![Witt::zero(ring)], r);
    }
    let mut q = vec![Witt::zero(ring); f.len() - m];
    for k in (0..q.len()).rev() {
        let lead = r[k + m].clone();
        if !lead.is_zero() {
            for (j, hj) in h.iter().enumerate() {
                r[k + j] = &r[k + j] - &(&lead * hj);
            }
        }
        q[k] = lead;
    }
    r.truncate(m);
    (q, r)
}

fn poly_min_val(f: &[Witt]) -> Valuation {
    f.iter().map(Witt::val).min().unwrap_or(Valuation::AtLeastN)
}

/// Matrix of multiplication by `q` on `W[x] / (h)` in the basis `1, x, ...`.
fn mult_matrix(q: &[Witt], h: &[Witt]) -> Mat {
    let m = h.len() - 1;
    let ring = h[0].ring();
    let mut cols = Vec::with_capacity(m);
    let (_, mut t) = poly_divrem(q, h);
    t.resize(m, Witt::zero(ring));
    for _ in 0..m {
        cols.push(t.clone());
        // t <- x t mod h
        let top = t[m - 1].clone();
        let mut next = vec![Witt::zero(ring); m];
        for j in (1..m).rev() {
            next[j] = t[j - 1].clone();
        }
        for (j, nj) in next.iter_mut().enumerate() {
            *nj = &*nj - &(&top * &h[j]);
        }
        t = next;
    }
    Mat::from_fn(ring, m, m, |i, j| cols[j][i].clone())
}

/// Splits a monic `f` (coefficients low to high) at a corner of its Newton
/// polygon by Newton iteration on the high-slope factor.
pub fn slope_factor(f: &[Witt], d: usize) -> Result<SlopeFactor> {
    let n = f
        .len()
        .checked_sub(1)
        .ok_or_else(|| Error::dims("empty polynomial"))?;
    let ring = f[0].ring().clone();
    let precision = ring.precision();
    let vals: Vec<Valuation> = f.iter().map(Witt::val).collect();
    let poly = SlopePolygon::from_valuations_at(&vals, precision)?;
    if d == 0 || d >= n || poly.slopes()[d - 1] == poly.slopes()[d] {
        return Err(Error::NoBreak(d));
    }
    let m = n - d;
    let (v, u) = f[m]
        .split_unit()
        .ok_or_else(|| Error::precision("break coefficient vanishes modulo p^N"))?;
    let uinv = u.inverse()?;
    let mut h: Vec<Witt> = Vec::with_capacity(m + 1);
    for c in &f[..m] {
        let c = c
            .div_p_pow(v)
            .ok_or_else(|| Error::precision("coefficient below the break point"))?;
        h.push(&c * &uinv);
    }
    h.push(Witt::one(&ring));

    let mut best = Valuation::Finite(0);
    let mut best_h = h.clone();
    let mut loss = 0;
    for _ in 0..2 * precision + 8 {
        let (q, r) = poly_divrem(f, &h);
        let rv = poly_min_val(&r);
        if rv <= best {
            break;
        }
        best = rv;
        best_h = h.clone();
        let snf = mult_matrix(&q, &h).smith()?;
        let exps = snf
            .finite_exps()
            .map_err(|_| Error::precision("factors not coprime modulo p^N"))?;
        loss = exps.iter().copied().max().unwrap_or(0);
        if rv == Valuation::AtLeastN {
            break;
        }
        let y = snf.left.mul_vec(&r)?;
        let mut z = Vec::with_capacity(m);
        for (yi, &di) in y.iter().zip(&exps) {
            z.push(yi.div_p_pow(di).ok_or_else(|| {
                Error::precision("Newton step for the slope factor is not integral")
            })?);
        }
        let delta = snf.right.mul_vec(&z)?;
        for (hj, dj) in h.iter_mut().zip(&delta) {
            *hj = &*hj + dj;
        }
    }
    let h = best_h;
    let (q, _) = poly_divrem(f, &h);
    let rv = best.finite().unwrap_or(precision);
    let achieved = rv as i64 - loss as i64;
    if achieved <= 0 {
        return Err(Error::precision(format!(
            "slope factorization at {d} not certified: residual p^{rv}, loss {loss}"
        )));
    }
    Ok(SlopeFactor {
        low: q,
        high: h,
        precision: achieved as u32,
    })
}

/// Lattices spanned by the kernels of `factor(Π)`, with the resulting blocks.
struct Split {
    bases: Vec<Mat>,
    blocks: Vec<FCrystal>,
    ring: Ring,
    min_factor_precision: u32,
}

/// Kernel of `k` of the given rank: the columns of the right Smith transform
/// belonging to the largest exponents. Returns the basis and the precision
/// to which it is a kernel.
fn kernel(k: &Mat, rank: usize, budget: u32) -> Result<(Mat, u32)> {
    let n = k.rows();
    let precision = k.ring().precision();
    let snf = k.smith()?;
    let exp = |v: &Valuation| v.finite().unwrap_or(precision);
    let image_max = snf.exps[..n - rank].iter().map(exp).max().unwrap_or(0);
    let kernel_min = snf.exps[n - rank..]
        .iter()
        .map(exp)
        .min()
        .unwrap_or(precision);
    let threshold = precision.saturating_sub(budget);
    if kernel_min < threshold || image_max >= threshold {
        return Err(Error::precision(format!(
            "kernel of rank {rank} not separated: kernel divisors from p^{kernel_min}, \
             image divisors up to p^{image_max}, threshold p^{threshold}"
        )));
    }
    let cols: Vec<usize> = (n - rank..n).collect();
    Ok((snf.right.select_cols(&cols), kernel_min - image_max))
}

/// Splits `crystal` along the factors of its twisted characteristic
/// polynomial (in order of increasing slopes).
fn split(
    crystal: &FCrystal,
    factors: &[Vec<Witt>],
    factor_prec: u32,
    budget: u32,
) -> Result<Split> {
    let pi = crystal.twisted_power();
    let mut raw = Vec::with_capacity(factors.len());
    let mut achieved = factor_prec;
    for f in factors {
        let (basis, prec) = kernel(&pi.eval_poly(f)?, f.len() - 1, budget)?;
        achieved = achieved.min(prec);
        raw.push(basis);
    }
    let ring = crystal.ring().with_precision(achieved)?;
    let mut bases = Vec::with_capacity(raw.len());
    for b in &raw {
        bases.push(Lattice::span(b.reduce_to(&ring))?.hermite().basis().clone());
    }
    let p = Mat::hcat(&bases.iter().collect::<Vec<_>>())?;
    let det = p.det()?;
    if !det.is_unit() {
        return Err(Error::precision(format!(
            "summands do not span M: val(det P) = {}",
            det.val()
        )));
    }
    let conj = FCrystal::new(crystal.matrix().reduce_to(&ring))?.conjugate(&p)?;
    let a = conj.matrix();
    let mut offsets = vec![0];
    for b in &bases {
        offsets.push(offsets.last().unwrap() + b.cols());
    }
    let mut blocks = Vec::with_capacity(bases.len());
    for i in 0..bases.len() {
        for j in 0..bases.len() {
            let blk = a.block(offsets[i]..offsets[i + 1], offsets[j]..offsets[j + 1]);
            if i == j {
                blocks.push(FCrystal::new(blk)?);
            } else if !blk.is_zero() {
                return Err(Error::precision(format!(
                    "summand {j} is not F-stable modulo p^{achieved}: block ({i},{j}) has valuation {}",
                    blk.min_val()
                )));
            }
        }
    }
    Ok(Split {
        bases,
        blocks,
        ring,
        min_factor_precision: factor_prec,
    })
}

fn preflight(crystal: &FCrystal, opts: &SplitOptions) -> Result<()> {
    let need = crystal.det_val()? as u64 * crystal.rank() as u64 + 2;
    let n = crystal.ring().precision() as u64;
    if opts.preflight && n <= need {
        return Err(Error::precision(format!(
            "precision N = {n} below the working minimum val(det A) * n + 2 = {need}"
        )));
    }
    Ok(())
}

fn slope_verdict(name: &str, got: &SlopePolygon, want: &[Rational]) -> Verdict {
    let want = SlopePolygon::new(want.to_vec());
    Verdict::new(name, *got == want, format!("got {got}, expected {want}"))
}

/// `M = M1 ⊕ M2` with `F`-stable summands; `m1` carries the low slopes.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub hypothesis: BreakPointHypothesis,
    pub m1: Lattice,
    pub m2: Lattice,
    pub f1: FCrystal,
    pub f2: FCrystal,
    /// Precision of the slope factorization.
    pub factor_precision: u32,
    /// Precision to which `m1`, `m2`, `f1`, `f2` are certified.
    pub precision: u32,
    pub certificates: Vec<Verdict>,
}

impl Decomposition {
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(|v| v.passed)
    }
}

/// Katz's decomposition at `(A, B)`.
pub fn decompose(
    crystal: &FCrystal,
    a: usize,
    b: Rational,
    opts: &SplitOptions,
) -> Result<Decomposition> {
    let hyp = BreakPointHypothesis::check(crystal, a, b)?;
    let newton = crystal.newton_slopes()?;
    let hodge = crystal.hodge_slopes()?;
    hyp.require(&newton)?;
    preflight(crystal, opts)?;
    let precision = crystal.ring().precision();
    let budget = opts.budget(precision);
    let f = crystal.twisted_charpoly()?;
    let sf = slope_factor(&f, a)?;
    if precision - sf.precision > budget {
        return Err(Error::precision(format!(
            "slope factorization lost {} digits, budget {budget}",
            precision - sf.precision
        )));
    }
    let split = split(
        crystal,
        &[sf.low.clone(), sf.high.clone()],
        sf.precision,
        budget,
    )?;
    let n = crystal.rank();
    let (f1, f2) = (split.blocks[0].clone(), split.blocks[1].clone());
    let ns = newton.slopes();
    let hs = hodge.slopes();
    let certificates = vec![
        Verdict::pass(
            "direct_sum",
            format!(
                "[M1 | M2] has unit determinant modulo p^{}",
                split.ring.precision()
            ),
        ),
        Verdict::pass(
            "f_stable",
            format!(
                "off-diagonal blocks vanish modulo p^{}",
                split.ring.precision()
            ),
        ),
        slope_verdict("newton_m1", &f1.newton_slopes()?, &ns[..a]),
        slope_verdict("newton_m2", &f2.newton_slopes()?, &ns[a..n]),
        slope_verdict("hodge_m1", &f1.hodge_slopes()?, &hs[..a]),
        slope_verdict("hodge_m2", &f2.hodge_slopes()?, &hs[a..n]),
    ];
    Ok(Decomposition {
        hypothesis: hyp,
        m1: Lattice::span(split.bases[0].clone())?,
        m2: Lattice::span(split.bases[1].clone())?,
        f1,
        f2,
        factor_precision: split.min_factor_precision,
        precision: split.ring.precision(),
        certificates,
    })
}

/// `M = MS1 ⊕ MS2` with `MS1 = M1 ⊕ M3` the outer piece of rank `2A` and
/// `MS2` the self-dual middle piece, plus the flag `0 ⊂ M1 ⊂ M1 ⊕ MS2 ⊂ M`.
#[derive(Debug, Clone)]
pub struct SelfDualDecomposition {
    pub hypothesis: BreakPointHypothesis,
    /// `(n - A, val(c) (n/2 - A) + B)`.
    pub symmetric_break: (usize, Rational),
    pub m1: Lattice,
    pub m3: Lattice,
    pub ms1: Lattice,
    pub ms2: Lattice,
    /// `M1 ⊕ MS2`, the second step of the flag.
    pub flag: Lattice,
    pub outer: SelfDualCrystal,
    pub middle: SelfDualCrystal,
    pub factor_precision: u32,
    pub precision: u32,
    pub certificates: Vec<Verdict>,
}

impl SelfDualDecomposition {
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(|v| v.passed)
    }
}

fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let ring = a.ring();
    let n = a.rows() + b.rows();
    Mat::from_fn(ring, n, n, |i, j| {
        let ra = a.rows();
        if i < ra && j < ra {
            a.get(i, j).clone()
        } else if i >= ra && j >= ra {
            b.get(i - ra, j - ra).clone()
        } else {
            Witt::zero(ring)
        }
    })
}

fn pairing(x: &Mat, g: &Mat, y: &Mat) -> Result<Mat> {
    x.transpose().mul(g)?.mul(y)
}

pub fn self_dual_decompose(
    s: &SelfDualCrystal,
    a: usize,
    b: Rational,
    opts: &SplitOptions,
) -> Result<SelfDualDecomposition> {
    let n = s.rank();
    if s.kind() == FormKind::Orthogonal && n % 2 == 1 {
        return Err(Error::Unsupported(
            "self-dual decomposition of odd-rank orthogonal crystals".into(),
        ));
    }
    if 2 * a >= n {
        return Err(Error::RankTooLarge { a, n });
    }
    preflight(s.base(), opts)?;
    // a dual that cannot be certified is a precision problem, not an invalid input
    if let Err(e @ Error::PrecisionExhausted(_)) = s.base().dual(s.c()) {
        return Err(e);
    }
    let invalid: Vec<String> = s
        .validate()?
        .into_iter()
        .filter(|v| !v.passed)
        .map(|v| v.name)
        .collect();
    if !invalid.is_empty() {
        return Err(Error::HypothesisFailed(format!(
            "not a valid self-dual crystal: {}",
            invalid.join(", ")
        )));
    }
    let crystal = s.base();
    let hyp = BreakPointHypothesis::check(crystal, a, b)?;
    let newton = crystal.newton_slopes()?;
    let hodge = crystal.hodge_slopes()?;
    hyp.require(&newton)?;

    let nu = s.nu() as i64;
    let sym_a = n - a;
    let sym_b = Rational::new(nu * (n as i64 - 2 * a as i64), 2) + b;
    let sym = BreakPointHypothesis {
        a: sym_a,
        b: sym_b,
        newton_break: newton.is_break_point(sym_a, sym_b),
        on_hodge: hodge.lies_on(sym_a, sym_b),
    };
    sym.require(&newton)?;

    let precision = crystal.ring().precision();
    let budget = opts.budget(precision);
    let f = crystal.twisted_charpoly()?;
    let outer_split = slope_factor(&f, a)?;
    let inner_split = slope_factor(&outer_split.high, n - 2 * a)?;
    let factor_prec = outer_split.precision.min(inner_split.precision);
    if precision - factor_prec > budget {
        return Err(Error::precision(format!(
            "slope factorization lost {} digits, budget {budget}",
            precision - factor_prec
        )));
    }
    let split = split(
        crystal,
        &[outer_split.low, inner_split.low, inner_split.high],
        factor_prec,
        budget,
    )?;
    let ring = &split.ring;
    let g = s.form().reduce_to(ring);
    let c = s.c().reduce_to(ring);
    let (b1, bm, b3) = (&split.bases[0], &split.bases[1], &split.bases[2]);
    let (f1, fm, f3) = (&split.blocks[0], &split.blocks[1], &split.blocks[2]);
    let outer_basis = Mat::hcat(&[b1, b3])?;
    let flag_basis = Mat::hcat(&[b1, bm])?;

    let mut certificates = vec![Verdict::pass(
        "direct_sum",
        format!(
            "[M1 | Mmid | M3] is F-stable with unit determinant modulo p^{}",
            ring.precision()
        ),
    )];
    let rank_ok = outer_basis.cols() == 2 * a;
    certificates.push(Verdict::new(
        "rank_ms1",
        rank_ok,
        format!("rank MS1 = {}, 2A = {}", outer_basis.cols(), 2 * a),
    ));
    let iso = pairing(b1, &g, &flag_basis)?;
    certificates.push(Verdict::new(
        "m1_perp_flag",
        iso.is_zero(),
        format!("<M1, M1 + MS2> has minimum valuation {}", iso.min_val()),
    ));
    let cross = pairing(&outer_basis, &g, bm)?;
    certificates.push(Verdict::new(
        "ms1_perp_ms2",
        cross.is_zero(),
        format!("<MS1, MS2> has minimum valuation {}", cross.min_val()),
    ));
    let g_outer = pairing(&outer_basis, &g, &outer_basis)?;
    let g_mid = pairing(bm, &g, bm)?;
    for (name, form) in [("ms1_form_unit", &g_outer), ("ms2_form_unit", &g_mid)] {
        let det = form.det()?;
        certificates.push(Verdict::new(
            name,
            det.is_unit(),
            format!("val(det) = {}", det.val()),
        ));
    }
    let outer_pair = pairing(b1, &g, b3)?.det()?;
    certificates.push(Verdict::new(
        "outer_pieces_dual",
        outer_pair.is_unit(),
        format!(
            "<M1, M3> has val(det) = {}; M1 and M/M2 are dual",
            outer_pair.val()
        ),
    ));

    let outer = SelfDualCrystal::new(
        FCrystal::new(block_diag(f1.matrix(), f3.matrix()))?,
        g_outer,
        c.clone(),
        s.kind(),
    )?;
    let middle = SelfDualCrystal::new(fm.clone(), g_mid, c, s.kind())?;
    for (label, piece) in [("ms1", &outer), ("ms2", &middle)] {
        let sim = piece.similitude_verdict()?;
        certificates.push(Verdict::new(
            format!("{label}_similitude"),
            sim.passed,
            sim.details,
        ));
    }

    let ns = newton.slopes();
    let hs = hodge.slopes();
    let outer_slopes =
        |s: &[Rational]| -> Vec<Rational> { s[..a].iter().chain(&s[n - a..]).copied().collect() };
    certificates.push(slope_verdict("newton_m1", &f1.newton_slopes()?, &ns[..a]));
    certificates.push(slope_verdict("hodge_m1", &f1.hodge_slopes()?, &hs[..a]));
    certificates.push(slope_verdict(
        "newton_ms1",
        &outer.base().newton_slopes()?,
        &outer_slopes(ns),
    ));
    certificates.push(slope_verdict(
        "hodge_ms1",
        &outer.base().hodge_slopes()?,
        &outer_slopes(hs),
    ));
    certificates.push(slope_verdict(
        "newton_ms2",
        &middle.base().newton_slopes()?,
        &ns[a..n - a],
    ));
    certificates.push(slope_verdict(
        "hodge_ms2",
        &middle.base().hodge_slopes()?,
        &hs[a..n - a],
    ));

    Ok(SelfDualDecomposition {
        hypothesis: hyp,
        symmetric_break: (sym_a, sym_b),
        m1: Lattice::span(b1.clone())?,
        m3: Lattice::span(b3.clone())?,
        ms1: Lattice::span(outer_basis)?,
        ms2: Lattice::span(bm.clone())?,
        flag: Lattice::span(flag_basis)?,
        outer,
        middle,
        factor_precision: split.min_factor_precision,
        precision: ring.precision(),
        certificates,
    })
}

/// Outcome of re-running the decomposition in random bases.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub trials: usize,
    pub verdicts: Vec<Verdict>,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// Conjugates by random units, decomposes, transports `M1` back, and compares
/// with the `M1` of the original basis at the common precision.
pub fn uniqueness_probe<R: Rng + ?Sized>(
    crystal: &FCrystal,
    a: usize,
    b: Rational,
    trials: usize,
    opts: &SplitOptions,
    rng: &mut R,
) -> Result<ProbeReport> {
    let reference = decompose(crystal, a, b, opts)?;
    let mut verdicts = Vec::with_capacity(trials);
    for t in 0..trials {
        let u = random_unit_matrix(crystal.ring(), crystal.rank(), rng);
        let name = format!("trial_{t}");
        let verdict = match decompose(&crystal.conjugate(&u)?, a, b, opts) {
            Ok(d) => {
                let prec = d.precision.min(reference.precision);
                let ring = crystal.ring().with_precision(prec)?;
                let back = Lattice::span(u.reduce_to(&ring).mul(&d.m1.basis().reduce_to(&ring))?)?;
                let ok = back.equals(&reference.m1.reduce_to(&ring)?)?;
                Verdict::new(
                    name,
                    ok,
                    if ok {
                        format!("M1 agrees modulo p^{prec}")
                    } else {
                        format!("M1 differs modulo p^{prec} for conjugator {u}")
                    },
                )
            }
            Err(e) => Verdict::fail(
                name,
                format!("decomposition failed for conjugator {u}: {e}"),
            ),
        };
        verdicts.push(verdict);
    }
    Ok(ProbeReport { trials, verdicts })
}
