//! Truncated arithmetic in the Witt vectors of a finite field.
//!
//! `W(F_{p^a})` is realized as `Z_p[x]/(f)` for a monic lift `f` of an
//! irreducible polynomial of degree `a` over `F_p`, and every element is kept
//! modulo `p^N`. The Frobenius automorphism sends `x` to the unique root of `f`
//! congruent to `x^p` modulo `p`; that root is Hensel-lifted once per ring and
//! cached as a coordinate matrix.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};

/// Largest supported `p^N`; keeps every sum of two residues inside `u128`.
const MAX_MODULUS_BITS: u32 = 126;

pub(crate) mod zmod {
    #[inline]
    pub fn add(a: u128, b: u128, m: u128) -> u128 {
        let s = a + b;
        if s >= m {
            s - m
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(a: u128, b: u128, m: u128) -> u128 {
        if a >= b {
            a - b
        } else {
            a + (m - b)
        }
    }

    #[inline]
    pub fn neg(a: u128, m: u128) -> u128 {
        if a == 0 {
            0
        } else {
            m - a
        }
    }

    #[inline]
    pub fn mul(a: u128, b: u128, m: u128) -> u128 {
        if m <= 1u128 << 64 {
            return (a * b) % m;
        }
        // m < 2^126, so doubling never overflows.
        let (mut x, mut y) = if a < b { (b, a) } else { (a, b) };
        let mut acc = 0u128;
        while y > 0 {
            if y & 1 == 1 {
                acc = add(acc, x, m);
            }
            x = add(x, x, m);
            y >>= 1;
        }
        acc
    }

    pub fn from_signed(v: i128, m: u128) -> u128 {
        if v >= 0 {
            (v as u128) % m
        } else {
            let r = (v.unsigned_abs()) % m;
            neg(r, m)
        }
    }

    /// p-adic valuation of a residue; `None` for zero.
    pub fn val(mut c: u128, p: u128) -> Option<u32> {
        if c == 0 {
            return None;
        }
        let mut v = 0;
        while c.is_multiple_of(p) {
            c /= p;
            v += 1;
        }
        Some(v)
    }

    pub fn inv_mod_prime(a: u128, p: u128) -> Option<u128> {
        let a = a % p;
        if a == 0 {
            return None;
        }
        // p < 2^32 so Fermat with u128 products is safe.
        let mut result = 1u128;
        let mut base = a;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        Some(result)
    }
}

/// Polynomials over `F_p` (coefficients low to high), only used to certify
/// irreducibility of the defining polynomial.
mod fp_poly {
    use super::zmod;

    pub fn trim(mut f: Vec<u128>) -> Vec<u128> {
        while f.last() == Some(&0) {
            f.pop();
        }
        f
    }

    pub fn rem(a: &[u128], b: &[u128], p: u128) -> Vec<u128> {
        let b = trim(b.to_vec());
        let mut r = trim(a.to_vec());
        let db = b.len() - 1;
        let lead_inv = zmod::inv_mod_prime(b[db], p).expect("nonzero leading coefficient");
        while r.len() > db && !r.is_empty() {
            let shift = r.len() - 1 - db;
            let q = r[r.len() - 1] * lead_inv % p;
            for (i, &bc) in b.iter().enumerate() {
                r[shift + i] = zmod::sub(r[shift + i], q * bc % p, p);
            }
            r = trim(r);
        }
        r
    }

    pub fn mul_mod(a: &[u128], b: &[u128], f: &[u128], p: u128) -> Vec<u128> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u128; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y) % p;
            }
        }
        rem(&out, f, p)
    }

    pub fn gcd(a: &[u128], b: &[u128], p: u128) -> Vec<u128> {
        let mut x = trim(a.to_vec());
        let mut y = trim(b.to_vec());
        while !y.is_empty() {
            let r = rem(&x, &y, p);
            x = y;
            y = r;
        }
        x
    }

    /// Ben-Or: `f` of degree `d` is irreducible iff `gcd(f, x^{p^i} - x) = 1`
    /// for every `i <= d/2`.
    pub fn is_irreducible(f: &[u128], p: u128) -> bool {
        let f = trim(f.to_vec());
        let d = f.len() - 1;
        if d == 0 {
            return false;
        }
        if d == 1 {
            return true;
        }
        let mut h = vec![0, 1];
        for _ in 1..=d / 2 {
            // h <- h^p mod f
            let mut acc = vec![1u128];
            let mut base = h.clone();
            let mut e = p;
            while e > 0 {
                if e & 1 == 1 {
                    acc = mul_mod(&acc, &base, &f, p);
                }
                base = mul_mod(&base, &base, &f, p);
                e >>= 1;
            }
            h = acc;
            let mut diff = h.clone();
            if diff.len() < 2 {
                diff.resize(2, 0);
            }
            diff[1] = zmod::sub(diff[1], 1, p);
            let g = gcd(&f, &trim(diff), p);
            if g.len() > 1 {
                return false;
            }
        }
        true
    }
}

/// Valuation of a truncated element: a finite value below `N`, or the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(u32),
    /// Indistinguishable from zero at the working precision.
    AtLeastN,
}

impl Valuation {
    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::AtLeastN => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Valuation::Finite(_))
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::AtLeastN => write!(f, ">=N"),
        }
    }
}

/// Parameters of `W(F_{p^a})` modulo `p^N`.
#[derive(Debug, Clone)]
pub struct RingParams {
    p: u128,
    degree: usize,
    precision: u32,
    modulus: Vec<u128>,
    pn: u128,
    /// `frob[i][j]` is coordinate `i` of `sigma(x^j)`.
    frob: Vec<Vec<u128>>,
}

/// Shared handle to ring parameters; all scalars of one ring point here.
pub type Ring = Arc<RingParams>;

impl PartialEq for RingParams {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
            && self.degree == other.degree
            && self.precision == other.precision
            && self.modulus == other.modulus
    }
}

impl Eq for RingParams {}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn checked_pow(p: u128, n: u32) -> Option<u128> {
    let mut acc = 1u128;
    for _ in 0..n {
        acc = acc.checked_mul(p)?;
        if acc > 1u128 << MAX_MODULUS_BITS {
            return None;
        }
    }
    Some(acc)
}

impl RingParams {
    /// Ring with the default modulus: the monic irreducible polynomial of
    /// degree `a` over `F_p` whose coefficient vector `[c_0, ..., c_{a-1}]`
    /// is lexicographically smallest, read as an integer polynomial.
    pub fn new(p: u64, a: usize, precision: u32) -> Result<Ring> {
        Self::check_basic(p, a, precision)?;
        let modulus = default_modulus(p as u128, a)?;
        Self::build(p, a, precision, &modulus)
    }

    /// Ring with a user-supplied monic modulus (coefficients low to high,
    /// length `a + 1`, last entry 1). Negative coefficients are reduced.
    pub fn with_modulus(p: u64, a: usize, precision: u32, modulus: &[i128]) -> Result<Ring> {
        Self::check_basic(p, a, precision)?;
        if modulus.len() != a + 1 {
            return Err(Error::InvalidParams(format!(
                "modulus must have {} coefficients, got {}",
                a + 1,
                modulus.len()
            )));
        }
        if modulus[a] != 1 {
            return Err(Error::InvalidParams("modulus must be monic".into()));
        }
        let pn = checked_pow(p as u128, precision).expect("checked above");
        let reduced: Vec<u128> = modulus.iter().map(|&c| zmod::from_signed(c, pn)).collect();
        let mod_p: Vec<u128> = reduced.iter().map(|&c| c % p as u128).collect();
        if !fp_poly::is_irreducible(&mod_p, p as u128) {
            return Err(Error::InvalidParams(
                "modulus is not irreducible modulo p".into(),
            ));
        }
        Self::build(p, a, precision, &reduced)
    }

    fn check_basic(p: u64, a: usize, precision: u32) -> Result<()> {
        if !is_prime(p) || p >= 1 << 32 {
            return Err(Error::InvalidParams(format!(
                "p = {p} must be a prime below 2^32"
            )));
        }
        if a == 0 {
            return Err(Error::InvalidParams("degree a must be at least 1".into()));
        }
        if precision == 0 {
            return Err(Error::InvalidParams(
                "precision N must be at least 1".into(),
            ));
        }
        if checked_pow(p as u128, precision).is_none() {
            return Err(Error::InvalidParams(format!(
                "p^N = {p}^{precision} exceeds 2^{MAX_MODULUS_BITS}"
            )));
        }
        Ok(())
    }

    fn build(p: u64, a: usize, precision: u32, modulus: &[u128]) -> Result<Ring> {
        let pn = checked_pow(p as u128, precision).expect("checked");
        let identity: Vec<Vec<u128>> = (0..a)
            .map(|i| (0..a).map(|j| u128::from(i == j)).collect())
            .collect();
        let provisional = Arc::new(RingParams {
            p: p as u128,
            degree: a,
            precision,
            modulus: modulus.to_vec(),
            pn,
            frob: identity,
        });
        let root = frobenius_root(&provisional)?;
        // Columns are powers of the lifted root.
        let mut frob = vec![vec![0u128; a]; a];
        let mut power = Witt::one(&provisional);
        for j in 0..a {
            for (i, row) in frob.iter_mut().enumerate() {
                row[j] = power.coeffs[i];
            }
            power = &power * &root;
        }
        Ok(Arc::new(RingParams {
            frob,
            ..(*provisional).clone()
        }))
    }

    pub fn p(&self) -> u64 {
        self.p as u64
    }

    /// Extension degree `a`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Working precision `N`.
    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn modulus(&self) -> &[u128] {
        &self.modulus
    }

    pub fn p_pow_n(&self) -> u128 {
        self.pn
    }

    /// The same ring truncated to a lower precision.
    pub fn with_precision(&self, precision: u32) -> Result<Ring> {
        if precision == 0 || precision > self.precision {
            return Err(Error::InvalidParams(format!(
                "cannot change precision from {} to {precision}",
                self.precision
            )));
        }
        let pn = checked_pow(self.p, precision).expect("smaller than current");
        Ok(Arc::new(RingParams {
            p: self.p,
            degree: self.degree,
            precision,
            modulus: self.modulus.iter().map(|c| c % pn).collect(),
            pn,
            frob: self
                .frob
                .iter()
                .map(|row| row.iter().map(|c| c % pn).collect())
                .collect(),
        }))
    }
}

fn default_modulus(p: u128, a: usize) -> Result<Vec<u128>> {
    let total = (p as f64).powi(a as i32);
    if total > 1e9 {
        return Err(Error::InvalidParams(
            "default modulus search space too large; supply a modulus".into(),
        ));
    }
    let count = p.pow(a as u32);
    for k in 0..count {
        // c_0 is the most significant digit of k, so k enumerates
        // coefficient vectors in lexicographic order.
        let mut coeffs = vec![0u128; a + 1];
        let mut rest = k;
        for i in (0..a).rev() {
            coeffs[i] = rest % p;
            rest /= p;
        }
        coeffs[a] = 1;
        if fp_poly::is_irreducible(&coeffs, p) {
            return Ok(coeffs);
        }
    }
    Err(Error::InvalidParams(format!(
        "no irreducible polynomial of degree {a} mod {p}"
    )))
}

fn eval_modulus(ring: &Ring, modulus: &[u128], at: &Witt) -> Witt {
    let mut acc = Witt::zero(ring);
    for &c in modulus.iter().rev() {
        acc = &(&acc * at) + &Witt::from_residue(ring, c);
    }
    acc
}

fn eval_modulus_derivative(ring: &Ring, modulus: &[u128], at: &Witt) -> Witt {
    let mut acc = Witt::zero(ring);
    for (i, &c) in modulus.iter().enumerate().skip(1).rev() {
        let coeff = zmod::mul(c, i as u128 % ring.pn, ring.pn);
        acc = &(&acc * at) + &Witt::from_residue(ring, coeff);
    }
    acc
}

/// Newton iteration for the root of `modulus` congruent to `x^p` mod `p`.
fn frobenius_root(ring: &Ring) -> Result<Witt> {
    let x = Witt::generator(ring);
    let mut r = x.pow(ring.p);
    for _ in 0..=ring.precision + 1 {
        let value = eval_modulus(ring, &ring.modulus, &r);
        if value.is_zero() {
            return Ok(r);
        }
        let deriv = eval_modulus_derivative(ring, &ring.modulus, &r);
        let inv = deriv.inverse().map_err(|_| Error::HenselFailure)?;
        r = &r - &(&value * &inv);
    }
    Err(Error::HenselFailure)
}

/// An element of `W(F_{p^a})` modulo `p^N`, in the power basis `1, x, ..., x^{a-1}`.
#[derive(Clone)]
pub struct Witt {
    ring: Ring,
    coeffs: Vec<u128>,
}

impl PartialEq for Witt {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.ring, &other.ring) || *self.ring == *other.ring)
            && self.coeffs == other.coeffs
    }
}

impl Eq for Witt {}

impl fmt::Debug for Witt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Witt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.len() == 1 {
            write!(f, "{}", self.coeffs[0])
        } else {
            let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
            write!(f, "[{}]", parts.join(", "))
        }
    }
}

impl Witt {
    pub fn zero(ring: &Ring) -> Self {
        Witt {
            ring: ring.clone(),
            coeffs: vec![0; ring.degree],
        }
    }

    pub fn one(ring: &Ring) -> Self {
        Self::from_residue(ring, 1)
    }

    /// The class of `x`.
    pub fn generator(ring: &Ring) -> Self {
        if ring.degree == 1 {
            // x is the root of the linear modulus x + c_0.
            return Self::from_residue(ring, zmod::neg(ring.modulus[0], ring.pn));
        }
        let mut coeffs = vec![0; ring.degree];
        coeffs[1] = 1;
        Witt {
            ring: ring.clone(),
            coeffs,
        }
    }

    fn from_residue(ring: &Ring, c: u128) -> Self {
        let mut coeffs = vec![0; ring.degree];
        coeffs[0] = c % ring.pn;
        Witt {
            ring: ring.clone(),
            coeffs,
        }
    }

    pub fn from_int(ring: &Ring, v: i128) -> Self {
        Self::from_residue(ring, zmod::from_signed(v, ring.pn))
    }

    /// Builds `sum c_i x^i`; fewer than `a` coefficients are zero-padded.
    pub fn from_coeffs(ring: &Ring, coeffs: &[i128]) -> Result<Self> {
        if coeffs.len() > ring.degree {
            return Err(Error::Parse(format!(
                "scalar has {} coordinates but the extension degree is {}",
                coeffs.len(),
                ring.degree
            )));
        }
        let mut out = vec![0; ring.degree];
        for (slot, &c) in out.iter_mut().zip(coeffs) {
            *slot = zmod::from_signed(c, ring.pn);
        }
        Ok(Witt {
            ring: ring.clone(),
            coeffs: out,
        })
    }

    pub fn from_residues(ring: &Ring, coeffs: &[u128]) -> Result<Self> {
        if coeffs.len() != ring.degree {
            return Err(Error::Parse(format!(
                "expected {} coordinates, got {}",
                ring.degree,
                coeffs.len()
            )));
        }
        if let Some(bad) = coeffs.iter().find(|&&c| c >= ring.pn) {
            return Err(Error::Parse(format!("coordinate {bad} is not below p^N")));
        }
        Ok(Witt {
            ring: ring.clone(),
            coeffs: coeffs.to_vec(),
        })
    }

    /// `p^k`, zero when `k >= N`.
    pub fn p_pow(ring: &Ring, k: u32) -> Self {
        if k >= ring.precision {
            return Self::zero(ring);
        }
        Self::from_residue(ring, ring.p.pow(k))
    }

    pub fn random<R: Rng + ?Sized>(ring: &Ring, rng: &mut R) -> Self {
        let coeffs = (0..ring.degree)
            .map(|_| rng.gen_range(0..ring.pn))
            .collect();
        Witt {
            ring: ring.clone(),
            coeffs,
        }
    }

    /// Uniformly random unit.
    pub fn random_unit<R: Rng + ?Sized>(ring: &Ring, rng: &mut R) -> Self {
        loop {
            let s = Self::random(ring, rng);
            if s.is_unit() {
                return s;
            }
        }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn coeffs(&self) -> &[u128] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0] == 1 % self.ring.pn && self.coeffs[1..].iter().all(|&c| c == 0)
    }

    /// True when the element lies in the prime subring `Z/p^N`.
    pub fn is_rational(&self) -> bool {
        self.coeffs[1..].iter().all(|&c| c == 0)
    }

    pub fn val(&self) -> Valuation {
        self.coeffs
            .iter()
            .filter_map(|&c| zmod::val(c, self.ring.p))
            .min()
            .map_or(Valuation::AtLeastN, Valuation::Finite)
    }

    pub fn is_unit(&self) -> bool {
        self.val() == Valuation::Finite(0)
    }

    /// True when `val(self) >= k` (every element when `k == 0`).
    pub fn divisible_by_p_pow(&self, k: u32) -> bool {
        match self.val() {
            Valuation::AtLeastN => true,
            Valuation::Finite(v) => v >= k,
        }
    }

    fn check_ring(&self, other: &Witt) {
        assert!(
            Arc::ptr_eq(&self.ring, &other.ring) || *self.ring == *other.ring,
            "scalars from different rings"
        );
    }

    pub fn pow(&self, mut e: u128) -> Witt {
        let mut acc = Witt::one(&self.ring);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Multiplication by `p^k`.
    pub fn mul_p_pow(&self, k: u32) -> Witt {
        self * &Witt::p_pow(&self.ring, k)
    }

    /// Exact division by `p^k`; `None` unless `val(self) >= k`. The quotient
    /// is only meaningful modulo `p^{N-k}`; its upper digits are zero.
    pub fn div_p_pow(&self, k: u32) -> Option<Witt> {
        if !self.divisible_by_p_pow(k) {
            return None;
        }
        if k >= self.ring.precision {
            return Some(Witt::zero(&self.ring));
        }
        let d = self.ring.p.pow(k);
        Some(Witt {
            ring: self.ring.clone(),
            coeffs: self.coeffs.iter().map(|c| c / d).collect(),
        })
    }

    /// Splits `self = p^v * u` with `u` a unit; `None` for zero.
    pub fn split_unit(&self) -> Option<(u32, Witt)> {
        let v = self.val().finite()?;
        Some((v, self.div_p_pow(v).expect("valuation")))
    }

    pub fn inverse(&self) -> Result<Witt> {
        if !self.is_unit() {
            return Err(Error::NotAUnit);
        }
        let ring = &self.ring;
        let a = ring.degree;
        let p = ring.p;
        // Inverse modulo p from the multiplication matrix over F_p.
        let mut columns = Vec::with_capacity(a);
        let mut basis = Witt::one(ring);
        let x = Witt::generator(ring);
        for _ in 0..a {
            let prod = self * &basis;
            columns.push(prod.coeffs.iter().map(|c| c % p).collect::<Vec<_>>());
            basis = &basis * &x;
        }
        let mut target = vec![0u128; a];
        target[0] = 1;
        let sol = solve_mod_prime(&columns, &target, p).ok_or(Error::NotAUnit)?;
        let mut u = Witt {
            ring: ring.clone(),
            coeffs: sol,
        };
        let two = Witt::from_int(ring, 2);
        for _ in 0..=64 {
            let prod = self * &u;
            if prod.is_one() {
                return Ok(u);
            }
            u = &u * &(&two - &prod);
        }
        Err(Error::NotAUnit)
    }

    pub fn frobenius(&self) -> Witt {
        let ring = &self.ring;
        let pn = ring.pn;
        let coeffs = (0..ring.degree)
            .map(|i| {
                let row = &ring.frob[i];
                row.iter().zip(&self.coeffs).fold(0u128, |acc, (&f, &c)| {
                    zmod::add(acc, zmod::mul(f, c, pn), pn)
                })
            })
            .collect();
        Witt {
            ring: ring.clone(),
            coeffs,
        }
    }

    /// `sigma^k`, with `k` taken modulo `a`.
    pub fn frobenius_pow(&self, k: usize) -> Witt {
        let mut out = self.clone();
        for _ in 0..k % self.ring.degree {
            out = out.frobenius();
        }
        out
    }

    pub fn frobenius_inv(&self) -> Witt {
        self.frobenius_pow(self.ring.degree - 1)
    }

    /// Re-reads the element in a ring of lower precision.
    pub fn reduce_to(&self, ring: &Ring) -> Witt {
        assert_eq!(ring.p, self.ring.p);
        assert_eq!(ring.modulus.len(), self.ring.modulus.len());
        Witt {
            ring: ring.clone(),
            coeffs: self.coeffs.iter().map(|c| c % ring.pn).collect(),
        }
    }
}

/// Gaussian elimination over `F_p`; `columns[j]` is column `j`.
#[allow(clippy::needless_range_loop)]
fn solve_mod_prime(columns: &[Vec<u128>], target: &[u128], p: u128) -> Option<Vec<u128>> {
    let n = target.len();
    let mut m: Vec<Vec<u128>> = (0..n)
        .map(|i| {
            let mut row: Vec<u128> = columns.iter().map(|col| col[i] % p).collect();
            row.push(target[i] % p);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| m[r][col] != 0)?;
        m.swap(col, pivot);
        let inv = zmod::inv_mod_prime(m[col][col], p)?;
        for v in m[col].iter_mut() {
            *v = *v * inv % p;
        }
        for r in 0..n {
            if r != col && m[r][col] != 0 {
                let factor = m[r][col];
                for c in 0..=n {
                    let sub = factor * m[col][c] % p;
                    m[r][c] = zmod::sub(m[r][c], sub, p);
                }
            }
        }
    }
    Some(m.iter().map(|row| row[n]).collect())
}

impl Add for &Witt {
    type Output = Witt;
    fn add(self, rhs: &Witt) -> Witt {
        self.check_ring(rhs);
        let pn = self.ring.pn;
        Witt {
            ring: self.ring.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(&a, &b)| zmod::add(a, b, pn))
                .collect(),
        }
    }
}

impl Sub for &Witt {
    type Output = Witt;
    fn sub(self, rhs: &Witt) -> Witt {
        self.check_ring(rhs);
        let pn = self.ring.pn;
        Witt {
            ring: self.ring.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(&a, &b)| zmod::sub(a, b, pn))
                .collect(),
        }
    }
}

impl Neg for &Witt {
    type Output = Witt;
    fn neg(self) -> Witt {
        let pn = self.ring.pn;
        Witt {
            ring: self.ring.clone(),
            coeffs: self.coeffs.iter().map(|&a| zmod::neg(a, pn)).collect(),
        }
    }
}

impl Mul for &Witt {
    type Output = Witt;
    fn mul(self, rhs: &Witt) -> Witt {
        self.check_ring(rhs);
        let ring = &self.ring;
        let pn = ring.pn;
        let a = ring.degree;
        if a == 1 {
            return Witt {
                ring: ring.clone(),
                coeffs: vec![zmod::mul(self.coeffs[0], rhs.coeffs[0], pn)],
            };
        }
        let mut prod = vec![0u128; 2 * a - 1];
        for (i, &x) in self.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in rhs.coeffs.iter().enumerate() {
                prod[i + j] = zmod::add(prod[i + j], zmod::mul(x, y, pn), pn);
            }
        }
        for k in (a..2 * a - 1).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            for i in 0..a {
                let sub = zmod::mul(c, ring.modulus[i], pn);
                prod[k - a + i] = zmod::sub(prod[k - a + i], sub, pn);
            }
            prod[k] = 0;
        }
        prod.truncate(a);
        Witt {
            ring: ring.clone(),
            coeffs: prod,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Witt {
            type Output = Witt;
            fn $method(self, rhs: Witt) -> Witt {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Witt> for Witt {
            type Output = Witt;
            fn $method(self, rhs: &Witt) -> Witt {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Witt {
    type Output = Witt;
    fn neg(self) -> Witt {
        -&self
    }
}

/// A ring embedding `W(F_{p^a}) -> W(F_{p^b})` for `a | b`, determined by
/// the image of the generator.
#[derive(Debug, Clone)]
pub struct Embedding {
    source: Ring,
    target: Ring,
    image: Witt,
}

impl Embedding {
    pub fn new(source: &Ring, target: &Ring) -> Result<Self> {
        if source.p != target.p || source.precision != target.precision {
            return Err(Error::InvalidParams(
                "embedding needs equal p and precision".into(),
            ));
        }
        if !target.degree.is_multiple_of(source.degree) {
            return Err(Error::InvalidParams(format!(
                "degree {} does not divide {}",
                source.degree, target.degree
            )));
        }
        let p = target.p;
        let space = p.checked_pow(target.degree as u32).unwrap_or(u128::MAX);
        if space > 1 << 20 {
            return Err(Error::Unsupported(
                "root search space too large for embedding".into(),
            ));
        }
        let mut start = None;
        for k in 0..space {
            let mut rest = k;
            let coeffs: Vec<u128> = (0..target.degree)
                .map(|_| {
                    let c = rest % p;
                    rest /= p;
                    c
                })
                .collect();
            let cand = Witt::from_residues(target, &coeffs)?;
            if !eval_modulus(target, &source.modulus, &cand).is_unit() {
                start = Some(cand);
                break;
            }
        }
        let mut r = start.ok_or_else(|| {
            Error::InvalidParams("source modulus has no root in the target".into())
        })?;
        for _ in 0..=target.precision + 1 {
            let value = eval_modulus(target, &source.modulus, &r);
            if value.is_zero() {
                return Ok(Embedding {
                    source: source.clone(),
                    target: target.clone(),
                    image: r,
                });
            }
            let deriv = eval_modulus_derivative(target, &source.modulus, &r);
            let inv = deriv.inverse().map_err(|_| Error::HenselFailure)?;
            r = &r - &(&value * &inv);
        }
        Err(Error::HenselFailure)
    }

    pub fn source(&self) -> &Ring {
        &self.source
    }

    pub fn target(&self) -> &Ring {
        &self.target
    }

    pub fn map(&self, s: &Witt) -> Witt {
        let mut acc = Witt::zero(&self.target);
        let mut power = Witt::one(&self.target);
        for &c in &s.coeffs {
            acc = &acc + &(&power * &Witt::from_residue(&self.target, c));
            power = &power * &self.image;
        }
        acc
    }
}
