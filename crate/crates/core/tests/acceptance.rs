//! Acceptance suite. Run with
//! `cargo test -p fcrystal --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;

use fcrystal::family::FiberStatus;
use fcrystal::io::{self_dual_file, to_pretty};
use fcrystal::newton_hodge::{decompose, self_dual_decompose, uniqueness_probe};
use fcrystal::polygon::Rational;
use fcrystal::sample::{generate, random_isometry, random_lattice, random_unit_matrix, GenMode};
use fcrystal::{
    CrystalFamily, Error, FCrystal, FormKind, Lattice, Mat, Ring, RingParams, SelfDualCrystal,
    SlopePolygon, SplitOptions, Witt,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const PRIMES: [u64; 3] = [2, 3, 5];

fn q(n: i64) -> Rational {
    Rational::from_integer(n)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Largest `N <= 126` with `p^N < 2^126`.
fn max_precision(p: u64) -> u32 {
    let mut n = 0;
    let mut acc: u128 = 1;
    while let Some(next) = acc.checked_mul(p as u128) {
        if next > 1u128 << 126 {
            break;
        }
        acc = next;
        n += 1;
    }
    n
}

fn ring(p: u64, a: usize, n: u32) -> Ring {
    RingParams::new(p, a, n.min(max_precision(p))).unwrap()
}

fn prefix_sums(slopes: &[Rational]) -> Vec<Rational> {
    let mut out = vec![q(0)];
    for s in slopes {
        out.push(*out.last().unwrap() + s);
    }
    out
}

fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let (n1, n2) = (a.rows(), b.rows());
    Mat::from_fn(a.ring(), n1 + n2, n1 + n2, |i, j| {
        if i < n1 && j < n1 {
            a.get(i, j).clone()
        } else if i >= n1 && j >= n1 {
            b.get(i - n1, j - n1).clone()
        } else {
            Witt::zero(a.ring())
        }
    })
}

fn cartan(ring: &Ring, exps: &[u32], rng: &mut ChaCha8Rng) -> Mat {
    let n = exps.len();
    random_unit_matrix(ring, n, rng)
        .mul(&Mat::p_power_diagonal(ring, exps))
        .unwrap()
        .mul(&random_unit_matrix(ring, n, rng))
        .unwrap()
}

fn sorted_ints(exps: &[u32]) -> SlopePolygon {
    SlopePolygon::from_integers(&exps.iter().map(|&e| e as i64).collect::<Vec<_>>())
}

/// 1. Newton lies on or above Hodge, both ending at `val(det A)`.
fn mazur_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut strict = 0;
    for t in 0..200 {
        let p = PRIMES[t % 3];
        let a = 1 + (t / 3) % 3;
        let n = rng.gen_range(1..=6);
        let exps: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=2)).collect();
        let det: u32 = exps.iter().sum();
        let r = ring(p, a, (a as u32 * det + 4).max(32));
        let c = FCrystal::new(cartan(&r, &exps, &mut rng)).map_err(|e| e.to_string())?;
        let newton = c
            .newton_slopes()
            .map_err(|e| format!("instance {t}: {e}"))?;
        let hodge = c.hodge_slopes().map_err(|e| e.to_string())?;
        let mut want = exps.clone();
        want.sort();
        ensure(hodge == sorted_ints(&want), || {
            format!("instance {t}: Hodge {hodge}, built from {want:?}")
        })?;
        let (nv, hv) = (prefix_sums(newton.slopes()), prefix_sums(hodge.slopes()));
        ensure(nv[n] == q(det as i64) && hv[n] == q(det as i64), || {
            format!(
                "instance {t}: endpoints {} / {} vs val(det) {det}",
                nv[n], hv[n]
            )
        })?;
        ensure((0..=n).all(|i| nv[i] >= hv[i]), || {
            format!("instance {t}: Newton {newton} below Hodge {hodge}")
        })?;
        if newton != hodge {
            strict += 1;
        }
    }
    Ok(format!(
        "200 crystals, {strict} with Newton strictly above Hodge"
    ))
}

fn random_mu(rng: &mut ChaCha8Rng, half: usize, m: u32) -> Vec<u32> {
    let mut low: Vec<u32> = (0..half).map(|_| rng.gen_range(0..=m)).collect();
    low.sort();
    let mut mu = low.clone();
    mu.extend(low.iter().map(|x| m - x));
    mu.sort();
    mu
}

/// 2. Slopes pair up to `val(c)` on generated self-dual instances.
fn symmetry_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for t in 0..100 {
        let p = PRIMES[t % 3];
        let a = 1 + (t / 3) % 3;
        let kind = if t % 2 == 0 {
            FormKind::Symplectic
        } else {
            FormKind::Orthogonal
        };
        let mode = if t % 4 < 2 {
            GenMode::Cartan
        } else {
            GenMode::Ordinary
        };
        let half = rng.gen_range(1..=3);
        let m = rng.gen_range(0..=3);
        let mu = random_mu(&mut rng, half, m);
        let det = half as u32 * m;
        let r = ring(p, a, (a as u32 * det + 4).max(32));
        let s = generate(&r, kind, &mu, mode, &mut rng).map_err(|e| e.to_string())?;
        let n = mu.len();
        let nu = q(m as i64);
        for poly in [s.base().hodge_slopes(), s.base().newton_slopes()] {
            let poly = poly.map_err(|e| format!("instance {t}: {e}"))?;
            let sl = poly.slopes();
            ensure((0..n).all(|i| sl[i] + sl[n - 1 - i] == nu), || {
                format!("instance {t} ({kind}, mu {mu:?}): {poly} not symmetric about {m}")
            })?;
        }
    }
    Ok("100 instances, Hodge and Newton slopes pair to val(c)".into())
}

/// 3. Perpendicular lattices and the Frobenius image lemma.
fn lattice_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for t in 0..100 {
        let p = PRIMES[t % 3];
        let a = 1 + (t / 3) % 3;
        let r = ring(p, a, 24);
        let n = rng.gen_range(1..=6);
        let g = random_unit_matrix(&r, n, &mut rng);
        let lat = random_lattice(&r, n, 3, 4, &mut rng).map_err(|e| e.to_string())?;
        let m = Lattice::standard(&r, n);
        let inv = lat.invariants(&m).map_err(|e| e.to_string())?;
        let perp = lat.perp(&g).map_err(|e| e.to_string())?;
        let mut want: Vec<i64> = inv.iter().rev().map(|x| -x).collect();
        want.sort();
        let got = perp.invariants(&m).map_err(|e| e.to_string())?;
        ensure(got == want, || {
            format!("lattice {t}: perp invariants {got:?}, expected {want:?}")
        })?;
    }
    for t in 0..100 {
        let p = PRIMES[t % 3];
        let a = 1 + (t / 3) % 3;
        let kind = if t % 2 == 0 {
            FormKind::Symplectic
        } else {
            FormKind::Orthogonal
        };
        let (half, m) = (rng.gen_range(1..=3), rng.gen_range(0..=3));
        let mu = random_mu(&mut rng, half, m);
        let r = ring(p, a, 32);
        let s = generate(&r, kind, &mu, GenMode::Cartan, &mut rng).map_err(|e| e.to_string())?;
        let v = s.frobenius_lattice_perp().map_err(|e| e.to_string())?;
        ensure(v.passed, || format!("instance {t}: {}", v.details))?;
    }
    Ok("100 perp-invariant checks, 100 F(M)^perp = c^-1 F(M) checks".into())
}

/// `-(1 + p^3 + p^6 + ...)` summed term by term.
fn geometric_alpha(r: &Ring) -> Witt {
    let p3 = Witt::from_int(r, (r.p() as i128).pow(3));
    let mut sum = Witt::zero(r);
    let mut term = Witt::one(r);
    for _ in 0..=r.precision() {
        sum = &sum + &term;
        term = &term * &p3;
    }
    -sum
}

/// 4. Conjugated block models split back into their blocks.
///
/// The high block is `p^high` times a unit. Returns how many instances ran
/// out of precision.
fn decomposition_oracle(
    precision: u32,
    high: u32,
    opts: &SplitOptions,
    count: usize,
    seed: u64,
) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exhausted = 0;
    for t in 0..count {
        let p = PRIMES[t % 3];
        let a = 1 + (t / 3) % 3;
        let r = ring(p, a, precision);
        let d1 = rng.gen_range(1..=2);
        let d2 = rng.gen_range(1..=2);
        // low block: slopes in [0, 1]
        let e1: Vec<u32> = (0..d1).map(|_| rng.gen_range(0..=1)).collect();
        let b1 = cartan(&r, &e1, &mut rng);
        let b2 = random_unit_matrix(&r, d2, &mut rng).scale(&Witt::p_pow(&r, high));
        let model = match FCrystal::new(block_diag(&b1, &b2)) {
            Ok(m) => m,
            Err(Error::PrecisionExhausted(_)) => {
                exhausted += 1;
                continue;
            }
            Err(e) => return Err(format!("instance {t}: {e}")),
        };
        let low = FCrystal::new(b1).map_err(|e| e.to_string())?;
        let low_newton = low.newton_slopes().map_err(|e| e.to_string())?;
        let u = random_unit_matrix(&r, d1 + d2, &mut rng);
        let c = model.conjugate(&u).map_err(|e| e.to_string())?;
        let b: i64 = e1.iter().map(|&e| e as i64).sum();
        let d = match decompose(&c, d1, q(b), opts) {
            Ok(d) => d,
            Err(Error::PrecisionExhausted(_)) => {
                exhausted += 1;
                continue;
            }
            Err(e) => return Err(format!("instance {t}: {e}")),
        };
        ensure(d.passed(), || format!("instance {t}: {:?}", d.certificates))?;
        let rd = r.with_precision(d.precision).map_err(|e| e.to_string())?;
        let uinv = u.inverse().map_err(|e| e.to_string())?.mat;
        let cols1: Vec<usize> = (0..d1).collect();
        let cols2: Vec<usize> = (d1..d1 + d2).collect();
        let want1 = Lattice::span(uinv.select_cols(&cols1)).and_then(|l| l.reduce_to(&rd));
        let want2 = Lattice::span(uinv.select_cols(&cols2)).and_then(|l| l.reduce_to(&rd));
        let (want1, want2) = (
            want1.map_err(|e| e.to_string())?,
            want2.map_err(|e| e.to_string())?,
        );
        ensure(d.m1.equals(&want1).unwrap_or(false), || {
            format!("instance {t}: wrong M1 at precision {}", d.precision)
        })?;
        ensure(d.m2.equals(&want2).unwrap_or(false), || {
            format!("instance {t}: wrong M2 at precision {}", d.precision)
        })?;
        let mut e1s = e1.clone();
        e1s.sort();
        let polys = (
            d.f1.newton_slopes().map_err(|e| e.to_string())?,
            d.f1.hodge_slopes().map_err(|e| e.to_string())?,
            d.f2.newton_slopes().map_err(|e| e.to_string())?,
            d.f2.hodge_slopes().map_err(|e| e.to_string())?,
        );
        ensure(polys.0 == low_newton, || {
            format!("instance {t}: Newton(M1) {} vs {low_newton}", polys.0)
        })?;
        ensure(polys.1 == sorted_ints(&e1s), || {
            format!("instance {t}: Hodge(M1) {}", polys.1)
        })?;
        ensure(polys.2 == sorted_ints(&vec![high; d2]), || {
            format!("instance {t}: Newton(M2) {}", polys.2)
        })?;
        ensure(polys.3 == sorted_ints(&vec![high; d2]), || {
            format!("instance {t}: Hodge(M2) {}", polys.3)
        })?;
    }
    Ok(exhausted)
}

fn decomposition_suite() -> Outcome {
    let exhausted = decomposition_oracle(40, 2, &SplitOptions::default(), 50, 4)?;
    ensure(exhausted == 0, || {
        format!("{exhausted} of 50 instances ran out of precision at N = 40")
    })?;
    let r = ring(3, 1, 32);
    let c =
        FCrystal::new(Mat::from_ints(&r, &[vec![1, 1], vec![0, 27]])).map_err(|e| e.to_string())?;
    let d = decompose(&c, 1, q(0), &SplitOptions::default()).map_err(|e| e.to_string())?;
    ensure(d.precision == 32, || {
        format!("worked instance certified only to {}", d.precision)
    })?;
    let want = Lattice::span(Mat::column_matrix(&[geometric_alpha(&r), Witt::one(&r)]))
        .map_err(|e| e.to_string())?;
    ensure(d.m2.equals(&want).unwrap_or(false), || {
        "worked instance: wrong M2".into()
    })?;
    Ok(
        "50 conjugated block models recovered at N = 40; [[1,1],[0,27]] gives M2 to precision 32"
            .into(),
    )
}

/// 5. Conjugated diagonal models with the standard forms.
fn self_dual_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shapes: [(&[u32], usize); 5] = [
        (&[0, 1, 2, 3], 1),
        (&[0, 2, 2, 4], 1),
        (&[0, 1, 1, 2], 1),
        (&[0, 1, 1, 1, 1, 2], 1),
        (&[0, 0, 1, 1, 2, 2], 2),
    ];
    for t in 0..30 {
        let p = PRIMES[t % 3];
        let a = 1 + (t / 3) % 3;
        let kind = if t % 2 == 0 {
            FormKind::Symplectic
        } else {
            FormKind::Orthogonal
        };
        let (mu, big_a) = shapes[t % shapes.len()];
        let n = mu.len();
        let m = mu[0] + mu[n - 1];
        let det = m * n as u32 / 2;
        // the middle factor costs about a * val(resultant) digits
        let r = ring(p, a, (det * n as u32 + 6).max(64));
        let s = SelfDualCrystal::new(
            FCrystal::new(Mat::p_power_diagonal(&r, mu)).map_err(|e| e.to_string())?,
            kind.standard_form(&r, n),
            Witt::p_pow(&r, m),
            kind,
        )
        .map_err(|e| e.to_string())?;
        let u = random_isometry(&r, kind, n, &mut rng).map_err(|e| e.to_string())?;
        let s = s.conjugate(&u).map_err(|e| e.to_string())?;
        let b: i64 = mu[..big_a].iter().map(|&e| e as i64).sum();
        let d = self_dual_decompose(&s, big_a, q(b), &SplitOptions::default())
            .map_err(|e| format!("instance {t} ({kind}, mu {mu:?}): {e}"))?;
        ensure(d.passed(), || {
            let bad: Vec<_> = d.certificates.iter().filter(|v| !v.passed).collect();
            format!("instance {t} ({kind}, mu {mu:?}): {bad:?}")
        })?;
        ensure(d.ms1.rank() == 2 * big_a, || {
            format!("instance {t}: rank MS1 = {}", d.ms1.rank())
        })?;
        // MS1 and MS2 orthogonal, independently of the certificates
        let pair = d
            .ms1
            .basis()
            .transpose()
            .mul(&s.form().reduce_to(d.ms1.ring()))
            .and_then(|x| x.mul(d.ms2.basis()));
        ensure(pair.map(|x| x.is_zero()).unwrap_or(false), || {
            format!("instance {t}: <MS1, MS2> != 0")
        })?;
        let rd = r.with_precision(d.precision).map_err(|e| e.to_string())?;
        let uinv = u.inverse().map_err(|e| e.to_string())?.mat;
        let outer: Vec<usize> = (0..big_a).chain(n - big_a..n).collect();
        let want = Lattice::span(uinv.select_cols(&outer))
            .and_then(|l| l.reduce_to(&rd))
            .map_err(|e| e.to_string())?;
        ensure(d.ms1.equals(&want).unwrap_or(false), || {
            format!("instance {t}: MS1 differs from the model")
        })?;
    }
    Ok("30 conjugated models: all certificates pass, MS1 recovered".into())
}

/// 6. Repeated splits under random changes of basis agree.
fn uniqueness_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for t in 0..10 {
        let p = PRIMES[t % 3];
        let a = 1 + t % 3;
        let r = ring(p, a, 32);
        let kind = if t % 2 == 0 {
            FormKind::Symplectic
        } else {
            FormKind::Orthogonal
        };
        let s = generate(&r, kind, &[0, 1, 2, 3], GenMode::Ordinary, &mut rng)
            .map_err(|e| e.to_string())?;
        let rep = uniqueness_probe(s.base(), 1, q(0), 10, &SplitOptions::default(), &mut rng)
            .map_err(|e| format!("instance {t}: {e}"))?;
        ensure(rep.passed() && rep.verdicts.len() == 10, || {
            format!("instance {t}: {:?}", rep.verdicts)
        })?;
    }
    Ok("10 instances x 10 conjugations, M1 always the same".into())
}

/// Two supersingular planes with `c = p` for the symplectic form.
fn supersingular(r: &Ring) -> SelfDualCrystal {
    let p = r.p() as i128;
    let a = Mat::from_ints(
        r,
        &[
            vec![0, 0, 0, -1],
            vec![0, 0, -1, 0],
            vec![0, p, 0, 0],
            vec![p, 0, 0, 0],
        ],
    );
    SelfDualCrystal::new(
        FCrystal::new(a).unwrap(),
        FormKind::Symplectic.standard_form(r, 4),
        Witt::p_pow(r, 1),
        FormKind::Symplectic,
    )
    .unwrap()
}

/// 7. Pure slope 1/2 pieces and oversized breaks are refused.
fn rejection_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = SplitOptions::default();
    for p in PRIMES {
        for a in 1..=3 {
            let r = ring(p, a, 64);
            let s = supersingular(&r);
            let half = Rational::new(1, 2);
            let newton = s.base().newton_slopes().map_err(|e| e.to_string())?;
            ensure(newton == SlopePolygon::new(vec![half; 4]), || {
                format!("p={p} a={a}: Newton {newton}")
            })?;
            for (big_a, b) in [(1, half), (1, q(0)), (2, q(1))] {
                match decompose(s.base(), big_a, b, &opts) {
                    Err(Error::NoBreak(_)) | Err(Error::HypothesisFailed(_)) => {}
                    other => {
                        return Err(format!(
                            "p={p} a={a} ({big_a},{b}): {:?}",
                            other.map(|d| d.precision)
                        ))
                    }
                }
            }
            match self_dual_decompose(&s, 1, q(0), &opts) {
                Err(Error::NoBreak(_)) | Err(Error::HypothesisFailed(_)) => {}
                other => {
                    return Err(format!(
                        "p={p} a={a}: self-dual split returned {:?}",
                        other.map(|d| d.precision)
                    ))
                }
            }
            // a slope-1/2 plane between slopes 0 and 1: no break in the middle
            let mixed = FCrystal::new(block_diag(
                &Mat::p_power_diagonal(&r, &[0]),
                &block_diag(
                    &Mat::from_ints(&r, &[vec![0, 1], vec![p as i128, 0]]),
                    &Mat::p_power_diagonal(&r, &[1]),
                ),
            ))
            .unwrap()
            .conjugate(&random_unit_matrix(&r, 4, &mut rng))
            .unwrap();
            ensure(
                matches!(decompose(&mixed, 2, half, &opts), Err(Error::NoBreak(2))),
                || format!("p={p} a={a}: slope-1/2 block split at abscissa 2"),
            )?;
            ensure(
                decompose(&mixed, 1, q(0), &opts)
                    .map(|d| d.passed())
                    .unwrap_or(false),
                || format!("p={p} a={a}: genuine break at abscissa 1 not split"),
            )?;
            // p times the same planes: slopes 3/2 with c = p^3
            let ss3 = SelfDualCrystal::new(
                FCrystal::new(s.matrix().scale(&Witt::p_pow(&r, 1))).unwrap(),
                s.form().clone(),
                Witt::p_pow(&r, 3),
                FormKind::Symplectic,
            )
            .unwrap();
            let ss3 = ss3
                .conjugate(&random_isometry(&r, FormKind::Symplectic, 4, &mut rng).unwrap())
                .unwrap();
            let ordinary = generate(
                &r,
                FormKind::Symplectic,
                &[0, 1, 2, 3],
                GenMode::Ordinary,
                &mut rng,
            )
            .unwrap();
            let family =
                CrystalFamily::new(vec![ordinary, ss3], 1, q(0)).map_err(|e| e.to_string())?;
            let rep = family.filter_check(&opts);
            ensure(rep.hypothesis_violations == vec![1], || {
                format!("p={p} a={a}: family {:?}", rep.hypothesis_violations)
            })?;
            ensure(rep.fibers[0].status == FiberStatus::Decomposed, || {
                format!("p={p} a={a}: ordinary fiber not split")
            })?;
            let g = generate(
                &r,
                FormKind::Symplectic,
                &[0, 1, 2, 3],
                GenMode::Ordinary,
                &mut rng,
            )
            .unwrap();
            for (big_a, b) in [(2, q(1)), (3, q(3))] {
                ensure(
                    matches!(
                        self_dual_decompose(&g, big_a, b, &opts),
                        Err(Error::RankTooLarge { .. })
                    ),
                    || format!("p={p} a={a}: A = {big_a} not refused"),
                )?;
            }
        }
    }
    Ok("supersingular fibers get no-break verdicts; A >= n/2 gives RankTooLarge".into())
}

fn golden_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden"))
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_fcrystal"))
        .args(args)
        .env_remove("FCRYSTAL_DEFAULT_PRECISION")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

/// 8. Seeds reproduce files and reports; golden reports match byte for byte.
fn determinism_suite() -> Outcome {
    for seed in 0..5u64 {
        let r = ring(3, 2, 32);
        let make = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            to_pretty(&self_dual_file(
                &generate(
                    &r,
                    FormKind::Symplectic,
                    &[0, 1, 2, 3],
                    GenMode::Cartan,
                    &mut rng,
                )
                .unwrap(),
            ))
        };
        ensure(make() == make(), || {
            format!("library generator differs for seed {seed}")
        })?;
        let s = seed.to_string();
        let args = [
            "generate", "--p", "3", "--a", "2", "--N", "32", "--mu", "0,1,2,3", "--seed", &s,
        ];
        let (c1, o1) = run_cli(&args);
        let (c2, o2) = run_cli(&args);
        ensure(c1 == 0 && c2 == 0 && o1 == o2, || {
            format!("CLI generate differs for seed {seed}")
        })?;
        ensure(o1 == make().into_bytes(), || {
            format!("CLI and library disagree for seed {seed}")
        })?;
    }
    let d4 = golden_dir().join("diagonal4.json");
    let d4 = d4.to_str().unwrap();
    let probe = [
        "decompose",
        d4,
        "--break",
        "1,0",
        "--self-dual",
        "--probe",
        "3",
        "--seed",
        "4",
    ];
    ensure(run_cli(&probe) == run_cli(&probe), || {
        "decompose report differs between runs".into()
    })?;
    let mut checked = 0;
    for m in ["identity", "jordan", "diagonal4"] {
        let input = golden_dir().join(format!("{m}.json"));
        let input = input.to_str().unwrap();
        for cmd in ["info", "validate"] {
            let want = fs::read(golden_dir().join(format!("{m}.{cmd}.expected.json")))
                .map_err(|e| e.to_string())?;
            let (code, got) = run_cli(&[cmd, input]);
            ensure(code == 0 && got == want, || {
                format!("{cmd} {m} differs from its golden report")
            })?;
            checked += 1;
        }
    }
    let want = fs::read(golden_dir().join("diagonal4.decompose.expected.json"))
        .map_err(|e| e.to_string())?;
    let (code, got) = run_cli(&["decompose", d4, "--break", "1,0", "--self-dual"]);
    ensure(code == 0 && got == want, || {
        "decompose diagonal4 differs from its golden report".into()
    })?;
    Ok(format!(
        "5 seeds reproduced; {} golden reports match",
        checked + 1
    ))
}

/// 9. Too little precision is reported, never answered wrongly.
fn precision_suite() -> Outcome {
    // the high block has slope 7, so val(det A) * n + 2 >= 16
    let with = decomposition_oracle(8, 7, &SplitOptions::default(), 50, 9)?;
    ensure(with == 50, || {
        format!("only {with} of 50 instances reported PrecisionExhausted at N = 8")
    })?;
    // without the preflight, whatever comes back must still be right
    let without = decomposition_oracle(
        8,
        7,
        &SplitOptions {
            preflight: false,
            ..Default::default()
        },
        50,
        9,
    )?;
    let dir = std::env::temp_dir().join(format!("fcrystal-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let path = dir.join("low.json");
    fs::write(&path, r#"{"p": 3, "a": 1, "N": 8, "n": 4, "matrix": [[1,0,0,0],[0,3,0,0],[0,0,9,0],[0,0,0,27]], "form": [[0,0,0,1],[0,0,1,0],[0,-1,0,0],[-1,0,0,0]], "c": 27, "kind": "symplectic"}"#)
        .map_err(|e| e.to_string())?;
    let (code, _) = run_cli(&[
        "decompose",
        path.to_str().unwrap(),
        "--break",
        "1,0",
        "--self-dual",
    ]);
    let _ = fs::remove_dir_all(&dir);
    ensure(code == 3, || {
        format!("CLI exit code {code} at N = 8, expected 3")
    })?;
    Ok(format!(
        "N = 8: 50/50 PrecisionExhausted; without preflight {without}/50 exhausted and the rest correct; CLI exit 3"
    ))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("Mazur inequality", mazur_suite),
        ("slope symmetry", symmetry_suite),
        ("lattice lemmas", lattice_suite),
        ("decomposition oracle", decomposition_suite),
        ("self-dual decomposition oracle", self_dual_suite),
        ("uniqueness probes", uniqueness_suite),
        ("hypothesis rejection", rejection_suite),
        ("determinism", determinism_suite),
        ("precision honesty", precision_suite),
    ];
    let mut failures = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(format!(
                "panicked: {:?}",
                e.downcast_ref::<String>()
                    .map(String::as_str)
                    .or(e.downcast_ref::<&str>().copied())
            ))
        });
        match outcome {
            Ok(details) => println!("PASS criterion {}: {name}: {details}", k + 1),
            Err(details) => {
                println!("FAIL criterion {}: {name}: {details}", k + 1);
                failures.push(k + 1);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
