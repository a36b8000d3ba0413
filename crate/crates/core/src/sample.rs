//! Seeded random instances: unit matrices, elements of the symplectic and
//! orthogonal groups of the standard forms, and self-dual crystals in Cartan
//! form `K1 p^mu K2`.

use rand::Rng;

use crate::crystal::FCrystal;
use crate::error::{Error, Result};
use crate::matlat::{Lattice, Mat};
use crate::selfdual::{FormKind, SelfDualCrystal};
use crate::witt::{Ring, Witt};

pub fn random_matrix<R: Rng + ?Sized>(ring: &Ring, rows: usize, cols: usize, rng: &mut R) -> Mat {
    Mat::from_fn(ring, rows, cols, |_, _| Witt::random(ring, rng))
}

/// Uniform among matrices with unit determinant (rejection sampling).
pub fn random_unit_matrix<R: Rng + ?Sized>(ring: &Ring, n: usize, rng: &mut R) -> Mat {
    loop {
        let m = random_matrix(ring, n, n, rng);
        if m.det().expect("square").is_unit() {
            return m;
        }
    }
}

/// `x -> x + λ <v, x> v`, a symplectic transvection for the form `J`.
pub fn transvection(j: &Mat, v: &[Witt], lambda: &Witt) -> Mat {
    let ring = j.ring();
    let col = Mat::column_matrix(v);
    let vvt = col.mul(&col.transpose()).expect("outer product");
    let step = vvt.mul(j).expect("square").scale(lambda);
    Mat::identity(ring, v.len()).add(&step).expect("same shape")
}

/// A random element of `Sp(J)` for the standard antidiagonal `J`.
pub fn random_symplectic<R: Rng + ?Sized>(ring: &Ring, n: usize, rng: &mut R) -> Mat {
    let j = FormKind::Symplectic.standard_form(ring, n);
    let mut g = Mat::identity(ring, n);
    for _ in 0..2 * n + 2 {
        let v: Vec<Witt> = (0..n).map(|_| Witt::random(ring, rng)).collect();
        let t = transvection(&j, &v, &Witt::random(ring, rng));
        g = g.mul(&t).expect("square");
    }
    g
}

/// A random element of `O(W)` for the standard antidiagonal `W`, `n` even,
/// as a product of Levi and unipotent elements of the Siegel parabolics.
pub fn random_orthogonal<R: Rng + ?Sized>(ring: &Ring, n: usize, rng: &mut R) -> Result<Mat> {
    if n % 2 == 1 {
        return Err(Error::Unsupported(
            "orthogonal generator needs even rank".into(),
        ));
    }
    let h = n / 2;
    let w = FormKind::Orthogonal.standard_form(ring, h);
    let mut out = Mat::identity(ring, n);
    for round in 0..4 {
        let g = random_unit_matrix(ring, h, rng);
        let ginv_t = g.inverse()?.mat.transpose();
        let partner = w.mul(&ginv_t)?.mul(&w)?;
        let levi = block_diag(&g, &partner);
        let t = random_alternating(ring, h, rng);
        let x = w.mul(&t)?;
        let mut unip = Mat::identity(ring, n);
        for i in 0..h {
            for k in 0..h {
                let (r, c) = if round % 2 == 0 {
                    (i, h + k)
                } else {
                    (h + i, k)
                };
                unip.set(r, c, x.get(i, k).clone());
            }
        }
        out = out.mul(&levi)?.mul(&unip)?;
    }
    Ok(out)
}

fn random_alternating<R: Rng + ?Sized>(ring: &Ring, n: usize, rng: &mut R) -> Mat {
    let mut t = Mat::zeros(ring, n, n);
    for i in 0..n {
        for j in i + 1..n {
            let x = Witt::random(ring, rng);
            t.set(j, i, -&x);
            t.set(i, j, x);
        }
    }
    t
}

fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let ring = a.ring();
    let n = a.rows() + b.rows();
    Mat::from_fn(ring, n, n, |i, j| {
        let (ra, ca) = (a.rows(), a.cols());
        if i < ra && j < ca {
            a.get(i, j).clone()
        } else if i >= ra && j >= ca {
            b.get(i - ra, j - ca).clone()
        } else {
            Witt::zero(ring)
        }
    })
}

/// A random automorphism of the standard form of the given kind.
pub fn random_isometry<R: Rng + ?Sized>(
    ring: &Ring,
    kind: FormKind,
    n: usize,
    rng: &mut R,
) -> Result<Mat> {
    match kind {
        FormKind::Symplectic => Ok(random_symplectic(ring, n, rng)),
        FormKind::Orthogonal => random_orthogonal(ring, n, rng),
    }
}

/// Shape of the Cartan decomposition used by [`generate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMode {
    /// Independent `K1`, `K2`: Hodge slopes are `mu`, Newton slopes are generic.
    Cartan,
    /// `K2 = sigma(K1^{-1})`, so `A` is sigma-conjugate to `p^mu` and the
    /// Newton slopes equal the Hodge slopes.
    Ordinary,
}

/// Checks `mu` and returns `m` with `mu_i + mu_{n+1-i} = m`.
pub fn check_mu(mu: &[u32]) -> Result<u32> {
    let n = mu.len();
    if n == 0 {
        return Err(Error::InvalidMu("empty exponent list".into()));
    }
    if n % 2 == 1 {
        return Err(Error::InvalidMu(format!("rank {n} is odd")));
    }
    if mu.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidMu(format!("{mu:?} is not nondecreasing")));
    }
    let m = mu[0] + mu[n - 1];
    if (0..n).any(|i| mu[i] + mu[n - 1 - i] != m) {
        return Err(Error::InvalidMu(format!("{mu:?} is not symmetric")));
    }
    Ok(m)
}

/// A self-dual crystal `A = K1 p^mu K2` with the standard form and `c = p^m`.
pub fn generate<R: Rng + ?Sized>(
    ring: &Ring,
    kind: FormKind,
    mu: &[u32],
    mode: GenMode,
    rng: &mut R,
) -> Result<SelfDualCrystal> {
    let m = check_mu(mu)?;
    let n = mu.len();
    if mu[n - 1] >= ring.precision() {
        return Err(Error::InvalidMu(format!(
            "exponent {} does not fit in precision {}",
            mu[n - 1],
            ring.precision()
        )));
    }
    let d = Mat::p_power_diagonal(ring, mu);
    let k1 = random_isometry(ring, kind, n, rng)?;
    let k2 = match mode {
        GenMode::Cartan => random_isometry(ring, kind, n, rng)?,
        GenMode::Ordinary => k1.inverse()?.mat.frobenius(),
    };
    let a = k1.mul(&d)?.mul(&k2)?;
    SelfDualCrystal::new(
        FCrystal::new(a)?,
        kind.standard_form(ring, n),
        Witt::p_pow(ring, m),
        kind,
    )
}

/// `K1 diag(p^e) K2` with exponents drawn from `0..=max_exp`.
pub fn random_crystal<R: Rng + ?Sized>(
    ring: &Ring,
    n: usize,
    max_exp: u32,
    rng: &mut R,
) -> Result<FCrystal> {
    let exps: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=max_exp)).collect();
    let k1 = random_unit_matrix(ring, n, rng);
    let k2 = random_unit_matrix(ring, n, rng);
    FCrystal::new(k1.mul(&Mat::p_power_diagonal(ring, &exps))?.mul(&k2)?)
}

/// `p^{-denom} U diag(p^e)` with `U` a random unit matrix.
pub fn random_lattice<R: Rng + ?Sized>(
    ring: &Ring,
    n: usize,
    max_denom: u32,
    max_exp: u32,
    rng: &mut R,
) -> Result<Lattice> {
    let exps: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=max_exp)).collect();
    let u = random_unit_matrix(ring, n, rng);
    Lattice::new(
        rng.gen_range(0..=max_denom),
        u.mul(&Mat::p_power_diagonal(ring, &exps))?,
    )
}
