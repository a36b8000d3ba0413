//! Matrices over `W(F_{p^a})` modulo `p^N`, Smith normal form over the local
//! ring, division-free characteristic polynomials, and lattices in the
//! isocrystal `V = M ⊗ K`.
//!
//! Nothing with negative valuation is ever stored in a [`Mat`]: objects that
//! live over `K` are pairs `(e, B)` meaning `p^{-e} B`.

use std::fmt;

use crate::error::{Error, Result};
use crate::witt::{Ring, Valuation, Witt};

#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    ring: Ring,
    rows: usize,
    cols: usize,
    data: Vec<Witt>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl Mat {
    pub fn zeros(ring: &Ring, rows: usize, cols: usize) -> Self {
        Mat {
            ring: ring.clone(),
            rows,
            cols,
            data: vec![Witt::zero(ring); rows * cols],
        }
    }

    pub fn identity(ring: &Ring, n: usize) -> Self {
        let mut m = Self::zeros(ring, n, n);
        for i in 0..n {
            m.set(i, i, Witt::one(ring));
        }
        m
    }

    pub fn from_fn(
        ring: &Ring,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Witt,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat {
            ring: ring.clone(),
            rows,
            cols,
            data,
        }
    }

    pub fn from_rows(ring: &Ring, rows: Vec<Vec<Witt>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::dims("ragged matrix rows"));
        }
        Ok(Mat {
            ring: ring.clone(),
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Integer matrix read into the prime subring.
    pub fn from_ints(ring: &Ring, rows: &[Vec<i128>]) -> Self {
        let c = rows.first().map_or(0, Vec::len);
        Self::from_fn(ring, rows.len(), c, |i, j| Witt::from_int(ring, rows[i][j]))
    }

    pub fn diagonal(ring: &Ring, diag: &[Witt]) -> Self {
        let n = diag.len();
        Self::from_fn(ring, n, n, |i, j| {
            if i == j {
                diag[i].clone()
            } else {
                Witt::zero(ring)
            }
        })
    }

    /// `diag(p^{e_1}, ..., p^{e_n})`.
    pub fn p_power_diagonal(ring: &Ring, exps: &[u32]) -> Self {
        let diag: Vec<Witt> = exps.iter().map(|&e| Witt::p_pow(ring, e)).collect();
        Self::diagonal(ring, &diag)
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Witt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Witt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> impl Iterator<Item = &Witt> {
        self.data.iter()
    }

    pub fn row_vec(&self, i: usize) -> Vec<Witt> {
        (0..self.cols).map(|j| self.get(i, j).clone()).collect()
    }

    pub fn col_vec(&self, j: usize) -> Vec<Witt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn column_matrix(v: &[Witt]) -> Self {
        let ring = v[0].ring().clone();
        Self::from_fn(&ring, v.len(), 1, |i, _| v[i].clone())
    }

    pub fn select_cols(&self, cols: &[usize]) -> Self {
        Self::from_fn(&self.ring, self.rows, cols.len(), |i, j| {
            self.get(i, cols[j]).clone()
        })
    }

    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let (r0, c0) = (rows.start, cols.start);
        Self::from_fn(&self.ring, rows.len(), cols.len(), |i, j| {
            self.get(r0 + i, c0 + j).clone()
        })
    }

    /// Horizontal concatenation.
    pub fn hcat(parts: &[&Mat]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::dims("empty hcat"))?;
        let rows = first.rows;
        if parts.iter().any(|m| m.rows != rows) {
            return Err(Error::dims("hcat with different row counts"));
        }
        let cols: usize = parts.iter().map(|m| m.cols).sum();
        let mut out = Self::zeros(&first.ring, rows, cols);
        let mut offset = 0;
        for m in parts {
            for i in 0..rows {
                for j in 0..m.cols {
                    out.set(i, offset + j, m.get(i, j).clone());
                }
            }
            offset += m.cols;
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(&self.ring, self.cols, self.rows, |i, j| {
            self.get(j, i).clone()
        })
    }

    pub fn map(&self, f: impl Fn(&Witt) -> Witt) -> Self {
        Mat {
            ring: self.ring.clone(),
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Entrywise `sigma`.
    pub fn frobenius(&self) -> Self {
        self.map(Witt::frobenius)
    }

    pub fn frobenius_pow(&self, k: usize) -> Self {
        self.map(|w| w.frobenius_pow(k))
    }

    pub fn frobenius_inv(&self) -> Self {
        self.map(Witt::frobenius_inv)
    }

    pub fn scale(&self, s: &Witt) -> Self {
        self.map(|w| w * s)
    }

    pub fn neg(&self) -> Self {
        self.map(|w| -w)
    }

    pub fn reduce_to(&self, ring: &Ring) -> Self {
        Mat {
            ring: ring.clone(),
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|w| w.reduce_to(ring)).collect(),
        }
    }

    pub fn add(&self, other: &Mat) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims("matrix addition"));
        }
        Ok(Mat {
            ring: self.ring.clone(),
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Mat) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims("matrix subtraction"));
        }
        Ok(Mat {
            ring: self.ring.clone(),
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn mul(&self, other: &Mat) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dims(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(&self.ring, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx] = &out.data[idx] + &(a * b);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Witt]) -> Result<Vec<Witt>> {
        Ok(self.mul(&Mat::column_matrix(v))?.col_vec(0))
    }

    /// Minimum entry valuation.
    pub fn min_val(&self) -> Valuation {
        self.data
            .iter()
            .map(Witt::val)
            .min()
            .unwrap_or(Valuation::AtLeastN)
    }

    /// True when every entry is divisible by `p^k`.
    pub fn divisible_by_p_pow(&self, k: u32) -> bool {
        self.data.iter().all(|w| w.divisible_by_p_pow(k))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Witt::is_zero)
    }

    /// Entrywise exact division by `p^k`.
    pub fn div_p_pow(&self, k: u32) -> Option<Self> {
        let data: Option<Vec<Witt>> = self.data.iter().map(|w| w.div_p_pow(k)).collect();
        Some(Mat {
            ring: self.ring.clone(),
            rows: self.rows,
            cols: self.cols,
            data: data?,
        })
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    fn scale_row(&mut self, i: usize, s: &Witt) {
        for j in 0..self.cols {
            let idx = i * self.cols + j;
            self.data[idx] = &self.data[idx] * s;
        }
    }

    fn scale_col(&mut self, j: usize, s: &Witt) {
        for i in 0..self.rows {
            let idx = i * self.cols + j;
            self.data[idx] = &self.data[idx] * s;
        }
    }

    /// row[target] -= q * row[source]
    fn row_axpy(&mut self, target: usize, source: usize, q: &Witt) {
        for j in 0..self.cols {
            let s = &self.data[source * self.cols + j] * q;
            let idx = target * self.cols + j;
            self.data[idx] = &self.data[idx] - &s;
        }
    }

    /// col[target] -= q * col[source]
    fn col_axpy(&mut self, target: usize, source: usize, q: &Witt) {
        for i in 0..self.rows {
            let s = &self.data[i * self.cols + source] * q;
            let idx = i * self.cols + target;
            self.data[idx] = &self.data[idx] - &s;
        }
    }

    /// Coefficients (low to high) of `det(x I - A)`, via the division-free
    /// Samuelson-Berkowitz recursion.
    pub fn charpoly(&self) -> Result<Vec<Witt>> {
        if !self.is_square() {
            return Err(Error::dims("charpoly of a non-square matrix"));
        }
        let n = self.rows;
        let ring = &self.ring;
        // Highest degree first while iterating.
        let mut poly = vec![Witt::one(ring)];
        for k in (0..n).rev() {
            let m = n - k;
            let a11 = self.get(k, k).clone();
            let row: Vec<Witt> = (k + 1..n).map(|j| self.get(k, j).clone()).collect();
            let mut col: Vec<Witt> = (k + 1..n).map(|i| self.get(i, k).clone()).collect();
            let mut t = Vec::with_capacity(m + 1);
            t.push(Witt::one(ring));
            t.push(-&a11);
            for _ in 2..=m {
                let dot = row
                    .iter()
                    .zip(&col)
                    .fold(Witt::zero(ring), |acc, (r, c)| &acc + &(r * c));
                t.push(-&dot);
                // col <- A1 * col
                col = (k + 1..n)
                    .map(|i| {
                        (k + 1..n).fold(Witt::zero(ring), |acc, j| {
                            &acc + &(self.get(i, j) * &col[j - k - 1])
                        })
                    })
                    .collect();
            }
            let mut next = Vec::with_capacity(m + 1);
            for i in 0..=m {
                let mut acc = Witt::zero(ring);
                for (j, pj) in poly.iter().enumerate().take(i.min(m - 1) + 1) {
                    acc = &acc + &(&t[i - j] * pj);
                }
                next.push(acc);
            }
            poly = next;
        }
        poly.reverse();
        Ok(poly)
    }

    pub fn det(&self) -> Result<Witt> {
        let cp = self.charpoly()?;
        let c0 = cp[0].clone();
        Ok(if self.rows % 2 == 1 { -&c0 } else { c0 })
    }

    /// Evaluates a polynomial (coefficients low to high) at a square matrix.
    pub fn eval_poly(&self, coeffs: &[Witt]) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::dims("polynomial of a non-square matrix"));
        }
        let n = self.rows;
        let mut acc = Mat::zeros(&self.ring, n, n);
        for c in coeffs.iter().rev() {
            acc = acc.mul(self)?;
            for i in 0..n {
                let v = acc.get(i, i) + c;
                acc.set(i, i, v);
            }
        }
        Ok(acc)
    }

    /// Smith normal form over the local ring. The pivot at each step is the
    /// entry of least valuation, ties broken in row-major order.
    pub fn smith(&self) -> Result<SmithForm> {
        let (r, c) = (self.rows, self.cols);
        let ring = &self.ring;
        let mut work = self.clone();
        let mut left = Mat::identity(ring, r);
        let mut left_inv = Mat::identity(ring, r);
        let mut right = Mat::identity(ring, c);
        let mut right_inv = Mat::identity(ring, c);
        let mut exps = Vec::with_capacity(r.min(c));
        for k in 0..r.min(c) {
            let mut best: Option<(Valuation, usize, usize)> = None;
            for i in k..r {
                for j in k..c {
                    let v = work.get(i, j).val();
                    if best.is_none_or(|(bv, _, _)| v < bv) {
                        best = Some((v, i, j));
                    }
                }
            }
            let (v, pi, pj) = best.expect("nonempty block");
            let d = match v {
                Valuation::AtLeastN => {
                    exps.resize(r.min(c), Valuation::AtLeastN);
                    break;
                }
                Valuation::Finite(d) => d,
            };
            work.swap_rows(k, pi);
            left.swap_rows(k, pi);
            left_inv.swap_cols(k, pi);
            work.swap_cols(k, pj);
            right.swap_cols(k, pj);
            right_inv.swap_rows(k, pj);

            let unit = work.get(k, k).div_p_pow(d).expect("pivot valuation");
            let unit_inv = unit
                .inverse()
                .map_err(|_| Error::precision("Smith pivot has no unit part"))?;
            work.scale_row(k, &unit_inv);
            left.scale_row(k, &unit_inv);
            left_inv.scale_col(k, &unit);

            for i in k + 1..r {
                if work.get(i, k).is_zero() {
                    continue;
                }
                let q = work
                    .get(i, k)
                    .div_p_pow(d)
                    .ok_or_else(|| Error::precision("Smith elimination lost divisibility"))?;
                work.row_axpy(i, k, &q);
                left.row_axpy(i, k, &q);
                left_inv.col_axpy(k, i, &-&q);
            }
            for j in k + 1..c {
                if work.get(k, j).is_zero() {
                    continue;
                }
                let q = work
                    .get(k, j)
                    .div_p_pow(d)
                    .ok_or_else(|| Error::precision("Smith elimination lost divisibility"))?;
                work.col_axpy(j, k, &q);
                right.col_axpy(j, k, &q);
                right_inv.row_axpy(k, j, &-&q);
            }
            exps.push(Valuation::Finite(d));
        }
        Ok(SmithForm {
            exps,
            left,
            left_inv,
            right,
            right_inv,
        })
    }

    /// Inverse over `K`, returned as `p^{-k} X`.
    pub fn inverse(&self) -> Result<ScaledInverse> {
        if !self.is_square() {
            return Err(Error::dims("inverse of a non-square matrix"));
        }
        let snf = self.smith()?;
        let n = self.rows;
        let mut finite = Vec::with_capacity(n);
        for e in &snf.exps {
            match e {
                Valuation::Finite(d) => finite.push(*d),
                Valuation::AtLeastN => {
                    return Err(Error::precision(
                        "matrix is singular modulo p^N; inverse not certifiable",
                    ))
                }
            }
        }
        let k = finite.iter().copied().max().unwrap_or(0);
        let precision = self.ring.precision();
        if k >= precision {
            return Err(Error::precision(format!(
                "elementary divisor p^{k} leaves no precision at N = {precision}"
            )));
        }
        let scales: Vec<u32> = finite.iter().map(|d| k - d).collect();
        let mid = Mat::p_power_diagonal(&self.ring, &scales);
        let mat = snf.right.mul(&mid)?.mul(&snf.left)?;
        Ok(ScaledInverse {
            denom_exp: k,
            mat,
            precision: precision - k,
        })
    }
}

/// Inverse over the fraction field: `A^{-1} = p^{-denom_exp} * mat`, with
/// `mat` meaningful modulo `p^precision`.
#[derive(Debug, Clone)]
pub struct ScaledInverse {
    pub denom_exp: u32,
    pub mat: Mat,
    pub precision: u32,
}

/// `left * A * right = D`, with `D` diagonal of powers of `p` (padded with
/// zero rows or columns) and nondecreasing exponents.
#[derive(Debug, Clone)]
pub struct SmithForm {
    pub exps: Vec<Valuation>,
    pub left: Mat,
    pub left_inv: Mat,
    pub right: Mat,
    pub right_inv: Mat,
}

impl SmithForm {
    /// Exponents as integers, or an error when any is not certified.
    pub fn finite_exps(&self) -> Result<Vec<u32>> {
        self.exps
            .iter()
            .map(|e| {
                e.finite()
                    .ok_or_else(|| Error::precision("elementary divisor indistinguishable from 0"))
            })
            .collect()
    }

    /// The diagonal matrix `D` with the shape of the original matrix.
    pub fn diagonal(&self) -> Mat {
        let ring = self.left.ring();
        let (r, c) = (self.left.rows(), self.right.rows());
        Mat::from_fn(ring, r, c, |i, j| {
            if i == j {
                match self.exps[i] {
                    Valuation::Finite(d) => Witt::p_pow(ring, d),
                    Valuation::AtLeastN => Witt::zero(ring),
                }
            } else {
                Witt::zero(ring)
            }
        })
    }
}

/// The lattice `p^{-denom_exp} * span(columns of basis)` inside `V`.
#[derive(Clone, PartialEq, Eq)]
pub struct Lattice {
    denom_exp: u32,
    basis: Mat,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p^-{} * {}", self.denom_exp, self.basis)
    }
}

impl Lattice {
    /// Fails unless the columns are independent at the working precision.
    pub fn new(denom_exp: u32, basis: Mat) -> Result<Self> {
        let precision = basis.ring().precision();
        if basis.cols() > basis.rows() {
            return Err(Error::dims("lattice basis has more columns than rows"));
        }
        if denom_exp >= precision {
            return Err(Error::precision("lattice denominator exceeds precision"));
        }
        let snf = basis.smith()?;
        for e in &snf.exps {
            match e {
                Valuation::Finite(d) if *d < precision - denom_exp => {}
                _ => {
                    return Err(Error::precision(
                        "lattice basis columns not independent at this precision",
                    ))
                }
            }
        }
        Ok(Lattice { denom_exp, basis })
    }

    /// `M` itself: the standard lattice `W^n`.
    pub fn standard(ring: &Ring, n: usize) -> Self {
        Lattice {
            denom_exp: 0,
            basis: Mat::identity(ring, n),
        }
    }

    pub fn span(basis: Mat) -> Result<Self> {
        Self::new(0, basis)
    }

    pub fn denom_exp(&self) -> u32 {
        self.denom_exp
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn ring(&self) -> &Ring {
        self.basis.ring()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.ambient_dim()
    }

    /// The same generators read modulo a lower power of `p`.
    pub fn reduce_to(&self, ring: &Ring) -> Result<Self> {
        Lattice::new(self.denom_exp, self.basis.reduce_to(ring))
    }

    /// Multiplies the lattice by `p^k` for a possibly negative `k`.
    pub fn scale_p_pow(&self, k: i64) -> Result<Self> {
        let e = self.denom_exp as i64 - k;
        if e >= 0 {
            Self::new(e as u32, self.basis.clone())
        } else {
            Self::new(0, self.basis.scale(&Witt::p_pow(self.ring(), (-e) as u32)))
        }
    }

    /// `s^{-1} * self` for a nonzero scalar `s = p^m u`.
    pub fn scale_inv(&self, s: &Witt) -> Result<Self> {
        let (m, u) = s
            .split_unit()
            .ok_or_else(|| Error::precision("scaling by a scalar indistinguishable from 0"))?;
        let uinv = u.inverse()?;
        Lattice::new(self.denom_exp, self.basis.scale(&uinv))?.scale_p_pow(-(m as i64))
    }

    /// Removes common factors of `p` from the denominator.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        while out.denom_exp > 0 && out.basis.divisible_by_p_pow(1) {
            out.basis = out.basis.div_p_pow(1).expect("divisible");
            out.denom_exp -= 1;
        }
        out
    }

    /// Whether every generator of `other` lies in `self`; coordinates outside
    /// the span of `self` count as zero when their valuation reaches `zero_at`.
    #[allow(clippy::needless_range_loop)]
    pub fn contains_within(&self, other: &Lattice, zero_at: u32) -> Result<bool> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::dims("lattices in different ambient spaces"));
        }
        let snf = self.basis.smith()?;
        let exps = snf.finite_exps_prefix(self.rank())?;
        let coords = snf.left.mul(&other.basis)?;
        let shift = self.denom_exp as i64 - other.denom_exp as i64;
        for j in 0..coords.cols() {
            for i in 0..coords.rows() {
                let v = coords.get(i, j).val();
                if i < self.rank() {
                    if let Valuation::Finite(v) = v {
                        if (v as i64) + shift < exps[i] as i64 {
                            return Ok(false);
                        }
                    }
                } else if let Valuation::Finite(v) = v {
                    if v < zero_at {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    pub fn contains(&self, other: &Lattice) -> Result<bool> {
        self.contains_within(other, self.ring().precision())
    }

    /// Equality by mutual containment.
    pub fn equals_within(&self, other: &Lattice, zero_at: u32) -> Result<bool> {
        Ok(self.rank() == other.rank()
            && self.contains_within(other, zero_at)?
            && other.contains_within(self, zero_at)?)
    }

    pub fn equals(&self, other: &Lattice) -> Result<bool> {
        self.equals_within(other, self.ring().precision())
    }

    /// The invariants `a_1 <= ... <= a_n` of `self` with respect to `reference`:
    /// some basis `e_i` of `reference` has `p^{a_i} e_i` as a basis of `self`.
    pub fn invariants(&self, reference: &Lattice) -> Result<Vec<i64>> {
        if !self.is_full_rank() || !reference.is_full_rank() {
            return Err(Error::dims("invariants need full-rank lattices"));
        }
        if self.ambient_dim() != reference.ambient_dim() {
            return Err(Error::dims("lattices in different ambient spaces"));
        }
        let inv = reference.basis.inverse()?;
        let coords = inv.mat.mul(&self.basis)?;
        let snf = coords.smith()?;
        let offset = reference.denom_exp as i64 - self.denom_exp as i64 - inv.denom_exp as i64;
        snf.exps
            .iter()
            .map(|e| match e {
                Valuation::Finite(d) if *d < inv.precision => Ok(*d as i64 + offset),
                _ => Err(Error::precision("lattice invariants not certified")),
            })
            .collect()
    }

    /// `self^⊥ = { x : x^t G y ∈ W for all y in self }`.
    pub fn perp(&self, form: &Mat) -> Result<Self> {
        if !self.is_full_rank() {
            return Err(Error::dims("perpendicular lattice needs full rank"));
        }
        let pairing = form.mul(&self.basis)?.transpose();
        let inv = pairing.inverse()?;
        let k = inv.denom_exp;
        let e = self.denom_exp;
        let lattice = if e >= k {
            Lattice::new(0, inv.mat.scale(&Witt::p_pow(self.ring(), e - k)))?
        } else {
            Lattice::new(k - e, inv.mat)?
        };
        Ok(lattice.normalized())
    }

    /// The largest sublattice of `ambient` spanning the same `K`-subspace.
    pub fn saturate(&self, ambient: &Lattice) -> Result<Self> {
        if !ambient.is_full_rank() || self.ambient_dim() != ambient.ambient_dim() {
            return Err(Error::dims("saturation needs a full-rank ambient lattice"));
        }
        let inv = ambient.basis.inverse()?;
        let coords = inv.mat.mul(&self.basis)?;
        let snf = coords.smith()?;
        let r = self.rank();
        for e in snf.exps.iter().take(r) {
            match e {
                Valuation::Finite(d) if *d < inv.precision => {}
                _ => return Err(Error::precision("subspace not certified at this precision")),
            }
        }
        let cols: Vec<usize> = (0..r).collect();
        let directions = snf.left_inv.select_cols(&cols);
        Lattice::new(ambient.denom_exp, ambient.basis.mul(&directions)?)
    }

    /// Canonical column-echelon basis: pivots are exact powers of `p`, found
    /// scanning rows from the bottom, with entries in later pivot rows reduced
    /// coefficientwise modulo the pivot. Columns are ordered by pivot row.
    pub fn hermite(&self) -> Self {
        let base = self.normalized();
        let mut h = base.basis.clone();
        let (n, r) = (h.rows(), h.cols());
        let p = self.ring().p() as u128;
        let mut placed = 0;
        for i in (0..n).rev() {
            if placed == r {
                break;
            }
            let mut best: Option<(Valuation, usize)> = None;
            for t in placed..r {
                let v = h.get(i, t).val();
                if best.is_none_or(|(bv, _)| v < bv) {
                    best = Some((v, t));
                }
            }
            let (v, t) = best.expect("column available");
            let d = match v {
                Valuation::Finite(d) => d,
                Valuation::AtLeastN => continue,
            };
            h.swap_cols(placed, t);
            let unit = h.get(i, placed).div_p_pow(d).expect("valuation");
            let unit_inv = unit.inverse().expect("unit part");
            h.scale_col(placed, &unit_inv);
            for t in placed + 1..r {
                if let Some(q) = h.get(i, t).div_p_pow(d) {
                    if !q.is_zero() {
                        h.col_axpy(t, placed, &q);
                    }
                }
            }
            let pd = p.pow(d);
            for t in 0..placed {
                let entry = h.get(i, t);
                let quotient: Vec<u128> = entry.coeffs().iter().map(|c| c / pd).collect();
                let q = Witt::from_residues(self.ring(), &quotient).expect("in range");
                if !q.is_zero() {
                    h.col_axpy(t, placed, &q);
                }
            }
            placed += 1;
        }
        let order: Vec<usize> = (0..r).rev().collect();
        Lattice {
            denom_exp: base.denom_exp,
            basis: h.select_cols(&order),
        }
    }
}

impl SmithForm {
    fn finite_exps_prefix(&self, r: usize) -> Result<Vec<u32>> {
        self.exps[..r]
            .iter()
            .map(|e| {
                e.finite()
                    .ok_or_else(|| Error::precision("lattice basis degenerate at this precision"))
            })
            .collect()
    }
}
