use cmalab::config::Config;
use cmalab::linalg::{embed, inverse_embed, j_conjugate, j_project, ComplexStructure, HermitianMatrix, SymMatrix};
use cmalab::operator::{check_h1, eval_f};
use cmalab::solver::BoundaryProfile;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn sym(dim: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-2.0..2.0_f64, dim * dim).prop_map(move |v| {
        SymMatrix::from_fn(dim, |i, j| v[i * dim + j])
    })
}

fn hermitian(n: usize) -> impl Strategy<Value = HermitianMatrix> {
    prop::collection::vec(-2.0..2.0_f64, 2 * n * n).prop_map(move |v| {
        let a = DMatrix::from_fn(n, n, |i, j| v[i * n + j]);
        let b = DMatrix::from_fn(n, n, |i, j| v[n * n + i * n + j]);
        let re = (&a + a.transpose()) * 0.5;
        let im = (&b - b.transpose()) * 0.5;
        HermitianMatrix::new(re, im).unwrap()
    })
}

fn gram(m: &SymMatrix) -> SymMatrix {
    let d = m.to_dmatrix();
    SymMatrix::from_dmatrix(&(d.transpose() * &d))
}

fn max_diff(a: &SymMatrix, b: &SymMatrix) -> f64 {
    (a - b).max_abs()
}

proptest! {
    #[test]
    fn embedding_round_trips(h in (1usize..=3).prop_flat_map(hermitian)) {
        let back = inverse_embed(&embed(&h), 1e-12).unwrap();
        prop_assert!(back.max_abs_diff(&h) <= 1e-14);
    }

    #[test]
    fn embedding_commutes_with_j(h in (1usize..=3).prop_flat_map(hermitian)) {
        let m = embed(&h);
        prop_assert!(ComplexStructure::new(h.n()).commutator_norm(&m) <= 1e-14);
        prop_assert_eq!(j_conjugate(&m), m);
    }

    #[test]
    fn j_projection_is_idempotent_and_invariant(m in (1usize..=3).prop_flat_map(|n| sym(2 * n))) {
        let p = j_project(&m);
        prop_assert!(max_diff(&j_project(&p), &p) <= 1e-12);
        prop_assert!(ComplexStructure::new(m.dim() / 2).commutator_norm(&p) <= 1e-12);
        prop_assert!(inverse_embed(&p, 1e-12).is_ok());
    }

    #[test]
    fn conjugate_sum_norm_is_at_most_double(m in (1usize..=3).prop_flat_map(|n| sym(2 * n))) {
        let s = &m + &j_conjugate(&m);
        prop_assert!(s.spectral_norm() <= 2.0 * m.spectral_norm() * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn operator_is_monotone(
        (m, g) in (1usize..=2).prop_flat_map(|n| (sym(2 * n), sym(2 * n))),
        scale in 0.0..1.0_f64,
    ) {
        let m = m.scale(0.25);
        let p = gram(&g).scale(scale / 4.0);
        prop_assert!(check_h1(&m, &p).unwrap());
    }

    #[test]
    fn pluriharmonic_part_is_invisible(
        (m, a, b) in (1usize..=2).prop_flat_map(|n| (sym(2 * n), sym(n), sym(n))),
    ) {
        let n = a.dim();
        let q = SymMatrix::from_fn(2 * n, |i, j| match (i < n, j < n) {
            (true, true) => a.get(i, j),
            (false, false) => -a.get(i - n, j - n),
            (true, false) => b.get(i, j - n),
            (false, true) => b.get(i - n, j),
        });
        prop_assert!(max_diff(&(&q + &j_conjugate(&q)), &SymMatrix::zeros(2 * n)) == 0.0);
        let m = m.scale(0.2);
        let lhs = eval_f(&(&m + &q)).value;
        let rhs = eval_f(&m).value;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn operator_is_bounded_below(m in (1usize..=2).prop_flat_map(|n| sym(2 * n))) {
        prop_assert!(eval_f(&m.scale(3.0)).value >= -1.0);
    }

    #[test]
    fn config_round_trips(
        c in -1.0..1.0_f64,
        alpha in 0.01..1.99_f64,
        m in 1usize..20,
        seed in any::<u64>(),
        scales in prop::collection::btree_set(1u32..1000, 1..6),
    ) {
        let mut cfg = Config::default();
        cfg.c = c;
        cfg.alpha = alpha;
        cfg.points_per_axis = 2 * m + 1;
        cfg.seed = seed;
        cfg.scales = scales.into_iter().map(|s| s as f64 / 8.0 + 1.0).collect();
        let text = cfg.serialize();
        let parsed = Config::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &cfg);
        prop_assert_eq!(parsed.serialize(), text);
    }

    #[test]
    fn power_profile_rescales_homogeneously(
        c in 0.0..0.5_f64,
        alpha in 0.1..1.9_f64,
        r in 1.0..50.0_f64,
        x in prop::collection::vec(-1.0..1.0_f64, 4),
    ) {
        let p = BoundaryProfile::Power { c, alpha };
        let expected = p.perturbation(&x) * r.powf(alpha - 2.0);
        prop_assert!((p.rescaled_perturbation(&x, r) - expected).abs() <= 1e-13 * (1.0 + expected.abs()));
    }
}
