use fcrystal::sample::{generate, random_isometry, GenMode};
use fcrystal::{FCrystal, FormKind, Mat, Ring, RingParams, SelfDualCrystal, SlopePolygon, Witt};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ring(idx: usize) -> Ring {
    let (p, a, n) = [(3, 1, 24), (2, 2, 30), (5, 1, 20), (3, 2, 24)][idx];
    RingParams::new(p, a, n).unwrap()
}

fn diag_model(r: &Ring, exps: &[u32], c: Witt, kind: FormKind) -> SelfDualCrystal {
    let n = exps.len();
    SelfDualCrystal::new(
        FCrystal::new(Mat::p_power_diagonal(r, exps)).unwrap(),
        kind.standard_form(r, n),
        c,
        kind,
    )
    .unwrap()
}

fn verdict(s: &SelfDualCrystal, name: &str) -> bool {
    s.validate()
        .unwrap()
        .into_iter()
        .find(|v| v.name == name)
        .unwrap_or_else(|| panic!("no verdict {name}"))
        .passed
}

fn mu_strategy() -> impl Strategy<Value = Vec<u32>> {
    (1usize..4, 0u32..3).prop_flat_map(|(half, m)| {
        prop::collection::vec(0u32..=m, half).prop_map(move |mut low| {
            low.sort();
            let mut mu = low.clone();
            mu.extend(low.iter().rev().map(|x| m + 1 - x));
            mu.sort();
            mu
        })
    })
}

#[test]
fn diagonal_model_is_valid() {
    let r = ring(0);
    let s = diag_model(&r, &[0, 1], Witt::p_pow(&r, 1), FormKind::Symplectic);
    assert!(s.validate().unwrap().iter().all(|v| v.passed));
    assert!(s.frobenius_lattice_perp().unwrap().passed);
    assert_eq!(s.nu(), 1);
}

#[test]
fn wrong_similitude_factor_fails() {
    let r = ring(0);
    let s = diag_model(&r, &[0, 1], Witt::one(&r), FormKind::Symplectic);
    assert!(!verdict(&s, "similitude"));
    assert!(!verdict(&s, "hodge_symmetry"));
    assert!(!s.frobenius_lattice_perp().unwrap().passed);
}

#[test]
fn kind_must_match_the_form() {
    let r = ring(0);
    let s = SelfDualCrystal::new(
        FCrystal::new(Mat::p_power_diagonal(&r, &[0, 1])).unwrap(),
        FormKind::Symplectic.standard_form(&r, 2),
        Witt::p_pow(&r, 1),
        FormKind::Orthogonal,
    )
    .unwrap();
    assert!(!verdict(&s, "kind"));
    let degenerate = SelfDualCrystal::new(
        FCrystal::new(Mat::p_power_diagonal(&r, &[0, 1])).unwrap(),
        Mat::from_ints(&r, &[vec![0, 3], vec![-3, 0]]),
        Witt::p_pow(&r, 1),
        FormKind::Symplectic,
    )
    .unwrap();
    assert!(!verdict(&degenerate, "form_unit"));
}

#[test]
fn zero_similitude_factor_is_rejected() {
    let r = ring(0);
    let base = FCrystal::new(Mat::identity(&r, 2)).unwrap();
    let g = FormKind::Symplectic.standard_form(&r, 2);
    assert!(SelfDualCrystal::new(base, g, Witt::zero(&r), FormKind::Symplectic).is_err());
}

#[test]
fn standard_forms() {
    let r = ring(0);
    let j = FormKind::Symplectic.standard_form(&r, 4);
    assert_eq!(j.transpose(), j.neg());
    assert_eq!(j.get(0, 3), &Witt::one(&r));
    assert_eq!(j.get(3, 0), &Witt::from_int(&r, -1));
    let w = FormKind::Orthogonal.standard_form(&r, 3);
    assert_eq!(w.transpose(), w);
    assert!(w.det().unwrap().is_unit());
}

#[test]
fn generator_is_deterministic() {
    let r = ring(3);
    for kind in [FormKind::Symplectic, FormKind::Orthogonal] {
        for mode in [GenMode::Cartan, GenMode::Ordinary] {
            let a = generate(
                &r,
                kind,
                &[0, 1, 2, 3],
                mode,
                &mut ChaCha8Rng::seed_from_u64(9),
            )
            .unwrap();
            let b = generate(
                &r,
                kind,
                &[0, 1, 2, 3],
                mode,
                &mut ChaCha8Rng::seed_from_u64(9),
            )
            .unwrap();
            let c = generate(
                &r,
                kind,
                &[0, 1, 2, 3],
                mode,
                &mut ChaCha8Rng::seed_from_u64(10),
            )
            .unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }
}

#[test]
fn generator_rejects_bad_exponents() {
    let r = ring(0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for mu in [
        &[][..],
        &[0, 1, 2][..],
        &[1, 0][..],
        &[0, 1, 1, 3][..],
        &[0, 30][..],
    ] {
        assert!(generate(&r, FormKind::Symplectic, mu, GenMode::Cartan, &mut rng).is_err());
    }
    assert!(generate(&r, FormKind::Orthogonal, &[0, 0], GenMode::Cartan, &mut rng).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_instances_validate(
        idx in 0usize..4,
        mu in mu_strategy(),
        orth in any::<bool>(),
        ordinary in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let r = ring(idx);
        let kind = if orth { FormKind::Orthogonal } else { FormKind::Symplectic };
        let mode = if ordinary { GenMode::Ordinary } else { GenMode::Cartan };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = generate(&r, kind, &mu, mode, &mut rng).unwrap();
        for v in s.validate().unwrap() {
            prop_assert!(v.passed, "{}: {}", v.name, v.details);
        }
        prop_assert!(s.frobenius_lattice_perp().unwrap().passed);
        let hodge: Vec<i64> = mu.iter().map(|&e| e as i64).collect();
        prop_assert_eq!(s.base().hodge_slopes().unwrap(), SlopePolygon::from_integers(&hodge));
        if ordinary {
            prop_assert_eq!(s.base().newton_slopes().unwrap(), SlopePolygon::from_integers(&hodge));
        }
    }

    #[test]
    fn similitude_law_on_vectors(idx in 0usize..4, mu in mu_strategy(), seed in any::<u64>()) {
        let r = ring(idx);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = generate(&r, FormKind::Symplectic, &mu, GenMode::Cartan, &mut rng).unwrap();
        let n = s.rank();
        let form = s.bilinear_form();
        for _ in 0..4 {
            let x: Vec<Witt> = (0..n).map(|_| Witt::random(&r, &mut rng)).collect();
            let y: Vec<Witt> = (0..n).map(|_| Witt::random(&r, &mut rng)).collect();
            prop_assert!(form.similitude_holds(&x, &y).unwrap());
            // alternating
            prop_assert!(form.pair(&x, &x).unwrap().is_zero());
        }
    }

    #[test]
    fn form_identifies_crystal_with_its_dual(idx in 0usize..4, mu in mu_strategy(), orth in any::<bool>(), seed in any::<u64>()) {
        let r = ring(idx);
        let kind = if orth { FormKind::Orthogonal } else { FormKind::Symplectic };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = generate(&r, kind, &mu, GenMode::Cartan, &mut rng).unwrap();
        let dual = s.base().dual(s.c()).unwrap();
        let lr = dual.ring();
        let g = s.form().reduce_to(lr);
        let ginv = g.inverse().unwrap();
        prop_assert_eq!(ginv.denom_exp, 0);
        let lhs = ginv.mat.mul(dual.matrix()).unwrap().mul(&g.frobenius()).unwrap();
        prop_assert_eq!(lhs, s.matrix().reduce_to(lr));
    }

    #[test]
    fn isometric_change_of_basis_preserves_structure(idx in 0usize..4, mu in mu_strategy(), orth in any::<bool>(), seed in any::<u64>()) {
        let r = ring(idx);
        let kind = if orth { FormKind::Orthogonal } else { FormKind::Symplectic };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = generate(&r, kind, &mu, GenMode::Cartan, &mut rng).unwrap();
        let u = random_isometry(&r, kind, s.rank(), &mut rng).unwrap();
        let t = s.conjugate(&u).unwrap();
        prop_assert_eq!(t.form(), s.form());
        for v in t.validate().unwrap() {
            prop_assert!(v.passed, "{}: {}", v.name, v.details);
        }
        prop_assert!(t.frobenius_lattice_perp().unwrap().passed);
    }
}
