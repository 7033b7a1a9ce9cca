mod common;

use approx::assert_abs_diff_eq;
use coord_forge::data::parse_libsvm_str;
use coord_forge::objective::{
    certify_dual, certify_primal, closed_form_solution, dual_objective, dual_partial, dual_to_primal_map,
    duality_gap_dual, duality_gap_primal, primal_objective, primal_objective_at, primal_partial, primal_to_dual_map,
    DEFAULT_ORACLE_CAP,
};
use coord_forge::RidgeProblem;
use proptest::prelude::*;

use common::{max_abs_diff, synthetic};

fn small_problem() -> impl Strategy<Value = (RidgeProblem<f64>, u64)> {
    (2usize..25, 1usize..12, 0.2f64..1.0, any::<u64>(), prop::sample::select(vec![1e-3, 0.1, 1.0]))
        .prop_map(|(n, m, density, seed, lambda)| (synthetic(n, m, density, seed, lambda), seed))
}

fn vector(len: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn hand_values() {
    let p = RidgeProblem::<f64>::new(parse_libsvm_str("1 1:1\n1 1:1", None).unwrap(), 0.5).unwrap();
    assert_abs_diff_eq!(primal_objective(&p, &[0.0]).unwrap(), 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(primal_objective(&p, &[2.0 / 3.0]).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
    assert_abs_diff_eq!(primal_objective_at(&p, &[0.0], &[1.0, 1.0]).unwrap(), 0.0);
    let alpha = primal_to_dual_map(&p, &[2.0 / 3.0]).unwrap();
    assert_abs_diff_eq!(alpha[0], 1.0 / 6.0, epsilon = 1e-15);
    assert_abs_diff_eq!(alpha[1], 1.0 / 6.0, epsilon = 1e-15);
    assert!(duality_gap_primal(&p, &[2.0 / 3.0]).unwrap() <= 1e-15);

    let q = RidgeProblem::<f64>::new(parse_libsvm_str("1 1:1", None).unwrap(), 1.0).unwrap();
    assert_abs_diff_eq!(dual_objective(&q, &[0.5]).unwrap(), 0.25, epsilon = 1e-15);
    assert!(dual_objective(&q, &[0.49]).unwrap() < 0.25);
    assert!(dual_objective(&q, &[0.51]).unwrap() < 0.25);
    assert_eq!(dual_to_primal_map(&q, &[0.5]).unwrap(), vec![0.5]);
    assert_eq!(duality_gap_dual(&q, &[0.5]).unwrap(), 0.0);
    let q2 = RidgeProblem::<f64>::new(parse_libsvm_str("1 1:1", None).unwrap(), 2.0).unwrap();
    assert_eq!(dual_to_primal_map(&q2, &[0.5]).unwrap(), vec![0.25]);
}

#[test]
fn zero_labels_have_zero_gap() {
    let p = RidgeProblem::<f64>::new(parse_libsvm_str("0 1:1 2:3\n0 2:1", None).unwrap(), 0.1).unwrap();
    assert_eq!(duality_gap_primal(&p, &[0.0, 0.0]).unwrap(), 0.0);
    assert_eq!(duality_gap_dual(&p, &[0.0, 0.0]).unwrap(), 0.0);
    assert_eq!(primal_objective(&p, &[0.0, 0.0]).unwrap(), 0.0);
}

#[test]
fn closed_form_is_certified_on_random_20x5() {
    for seed in 0..5 {
        let p = synthetic::<f64>(20, 5, 0.6, seed, 0.1);
        let beta = closed_form_solution(&p, DEFAULT_ORACLE_CAP).unwrap();
        assert!(duality_gap_primal(&p, &beta).unwrap() <= 1e-10);
        for m in 0..p.m() {
            assert!(primal_partial(&p, &beta, m).unwrap().abs() <= 1e-8);
        }
        // The mapped dual point is the dual maximizer.
        let alpha = primal_to_dual_map(&p, &beta).unwrap();
        for n in 0..p.n() {
            assert!(dual_partial(&p, &alpha, n).unwrap().abs() <= 1e-8);
        }
        assert!(max_abs_diff(&dual_to_primal_map(&p, &alpha).unwrap(), &beta) <= 1e-8);
    }
}

#[test]
fn oracle_refuses_above_cap() {
    let p = synthetic::<f64>(10, 20, 0.5, 0, 0.1);
    assert!(closed_form_solution(&p, 10).is_err());
}

#[test]
fn length_mismatch_is_an_error() {
    let p = synthetic::<f64>(10, 4, 0.5, 0, 0.1);
    assert!(primal_objective(&p, &[0.0; 3]).is_err());
    assert!(dual_objective(&p, &[0.0; 4]).is_err());
    assert!(primal_objective_at(&p, &[0.0; 4], &[0.0; 9]).is_err());
    assert!(dual_to_primal_map(&p, &[0.0; 11]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weak_duality((p, seed) in small_problem()) {
        let beta = vector(p.m(), seed ^ 1);
        let alpha = vector(p.n(), seed ^ 2);
        let primal = primal_objective(&p, &beta).unwrap();
        let dual = dual_objective(&p, &alpha).unwrap();
        prop_assert!(primal >= dual - 1e-12 * primal.abs().max(1.0));
        let cp = certify_primal(&p, &beta).unwrap();
        prop_assert!(cp.primal_obj - cp.dual_obj >= -1e-9);
        let cd = certify_dual(&p, &alpha).unwrap();
        prop_assert!(cd.primal_obj - cd.dual_obj >= -1e-9);
    }

    #[test]
    fn objective_at_exact_shared_agrees((p, seed) in small_problem()) {
        let beta = vector(p.m(), seed);
        let w = p.by_col().mul_vec(&beta);
        let a = primal_objective(&p, &beta).unwrap();
        let b = primal_objective_at(&p, &beta, &w).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn analytic_partials_match_finite_differences((p, seed) in small_problem()) {
        let beta = vector(p.m(), seed);
        let alpha = vector(p.n(), seed.wrapping_add(7));
        let h = 1e-5;
        for m in 0..p.m() {
            let mut plus = beta.clone();
            let mut minus = beta.clone();
            plus[m] += h;
            minus[m] -= h;
            let fd = (primal_objective(&p, &plus).unwrap() - primal_objective(&p, &minus).unwrap()) / (2.0 * h);
            let an = primal_partial(&p, &beta, m).unwrap();
            prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "primal m={} fd={} an={}", m, fd, an);
        }
        for n in 0..p.n() {
            let mut plus = alpha.clone();
            let mut minus = alpha.clone();
            plus[n] += h;
            minus[n] -= h;
            let fd = (dual_objective(&p, &plus).unwrap() - dual_objective(&p, &minus).unwrap()) / (2.0 * h);
            let an = dual_partial(&p, &alpha, n).unwrap();
            prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "dual n={} fd={} an={}", n, fd, an);
        }
    }

    #[test]
    fn maps_are_linear_and_agree_with_products((p, seed) in small_problem()) {
        let alpha = vector(p.n(), seed);
        let beta = dual_to_primal_map(&p, &alpha).unwrap();
        let direct: Vec<f64> = p.by_row().tmul_vec(&alpha).iter().map(|v| v / p.lambda()).collect();
        prop_assert!(max_abs_diff(&beta, &direct) <= 1e-14);
        let back = primal_to_dual_map(&p, &vec![0.0; p.m()]).unwrap();
        let y_over_n: Vec<f64> = p.labels().iter().map(|y| y / p.n() as f64).collect();
        prop_assert!(max_abs_diff(&back, &y_over_n) == 0.0);
    }
}
