//! Ridge regression objectives and their duality certificate.
//!
//! Primal: `P(beta) = 1/(2N) ||A beta - y||^2 + lambda/2 ||beta||^2`.
//! Dual:   `D(alpha) = -N/2 ||alpha||^2 - 1/(2 lambda) ||A^T alpha||^2 + alpha^T y`.
//!
//! At the optimum `beta = A^T alpha / lambda` and `alpha = (y - A beta) / N`;
//! the gap between the two objectives evaluated through these maps
//! certifies how far a point is from optimal. Everything here accumulates
//! in `f64` and recomputes matrix products from scratch.

mod model;
mod problem;

pub use model::Model;
pub use problem::{Form, RidgeProblem};

use nalgebra::{DMatrix, DVector};

use crate::{Error, Real, Result};

/// Largest feature count [`closed_form_solution`] accepts by default.
pub const DEFAULT_ORACLE_CAP: usize = 512;

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::arg(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

fn sqnorm<W: Real>(v: &[W]) -> f64 {
    v.iter().map(|x| x.to_f64() * x.to_f64()).sum()
}

/// `P(beta)`.
pub fn primal_objective<T: Real, W: Real>(p: &RidgeProblem<T>, beta: &[W]) -> Result<f64> {
    check_len("beta", beta.len(), p.m())?;
    let ab = p.by_col().mul_vec(beta);
    primal_objective_at(p, beta, &ab)
}

/// `P` evaluated with `w` standing in for `A beta`; `w` is trusted, not
/// recomputed.
pub fn primal_objective_at<T: Real, W: Real, S: Real>(p: &RidgeProblem<T>, beta: &[W], w: &[S]) -> Result<f64> {
    check_len("beta", beta.len(), p.m())?;
    check_len("w", w.len(), p.n())?;
    let n = p.n() as f64;
    let resid: f64 = w
        .iter()
        .zip(p.labels())
        .map(|(w, y)| {
            let r = w.to_f64() - y.to_f64();
            r * r
        })
        .sum();
    Ok(resid / (2.0 * n) + 0.5 * p.lambda() * sqnorm(beta))
}

/// `D(alpha)`.
pub fn dual_objective<T: Real, W: Real>(p: &RidgeProblem<T>, alpha: &[W]) -> Result<f64> {
    check_len("alpha", alpha.len(), p.n())?;
    let ata = p.by_row().tmul_vec(alpha);
    dual_objective_at(p, alpha, &ata)
}

/// `D` evaluated with `shared` standing in for `A^T alpha`.
pub fn dual_objective_at<T: Real, W: Real, S: Real>(p: &RidgeProblem<T>, alpha: &[W], shared: &[S]) -> Result<f64> {
    check_len("alpha", alpha.len(), p.n())?;
    check_len("shared", shared.len(), p.m())?;
    let n = p.n() as f64;
    let ay: f64 = alpha.iter().zip(p.labels()).map(|(a, y)| a.to_f64() * y.to_f64()).sum();
    Ok(-0.5 * n * sqnorm(alpha) - sqnorm(shared) / (2.0 * p.lambda()) + ay)
}

/// `beta = A^T alpha / lambda`.
pub fn dual_to_primal_map<T: Real, W: Real>(p: &RidgeProblem<T>, alpha: &[W]) -> Result<Vec<f64>> {
    check_len("alpha", alpha.len(), p.n())?;
    let lambda = p.lambda();
    Ok(p.by_row().tmul_vec(alpha).into_iter().map(|v| v / lambda).collect())
}

/// `alpha = (y - A beta) / N`.
pub fn primal_to_dual_map<T: Real, W: Real>(p: &RidgeProblem<T>, beta: &[W]) -> Result<Vec<f64>> {
    check_len("beta", beta.len(), p.m())?;
    let n = p.n() as f64;
    Ok(p.by_col().mul_vec(beta).into_iter().zip(p.labels()).map(|(ab, y)| (y.to_f64() - ab) / n).collect())
}

/// Objective values and gap at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub gap: f64,
}

/// Certificate for primal weights: `P(beta)` against `D((y - A beta)/N)`.
pub fn certify_primal<T: Real, W: Real>(p: &RidgeProblem<T>, beta: &[W]) -> Result<Certificate> {
    let primal_obj = primal_objective(p, beta)?;
    let dual_obj = dual_objective(p, &primal_to_dual_map(p, beta)?)?;
    Ok(Certificate { primal_obj, dual_obj, gap: (primal_obj - dual_obj).abs() })
}

/// Certificate for dual weights: `P(A^T alpha / lambda)` against `D(alpha)`.
pub fn certify_dual<T: Real, W: Real>(p: &RidgeProblem<T>, alpha: &[W]) -> Result<Certificate> {
    let primal_obj = primal_objective(p, &dual_to_primal_map(p, alpha)?)?;
    let dual_obj = dual_objective(p, alpha)?;
    Ok(Certificate { primal_obj, dual_obj, gap: (primal_obj - dual_obj).abs() })
}

/// Certificate for weights of either form.
pub fn certify<T: Real, W: Real>(p: &RidgeProblem<T>, form: Form, weights: &[W]) -> Result<Certificate> {
    match form {
        Form::Primal => certify_primal(p, weights),
        Form::Dual => certify_dual(p, weights),
    }
}

/// `G_P(beta) = |P(beta) - D((y - A beta)/N)|`.
pub fn duality_gap_primal<T: Real, W: Real>(p: &RidgeProblem<T>, beta: &[W]) -> Result<f64> {
    Ok(certify_primal(p, beta)?.gap)
}

/// `G_D(alpha) = |P(A^T alpha / lambda) - D(alpha)|`.
pub fn duality_gap_dual<T: Real, W: Real>(p: &RidgeProblem<T>, alpha: &[W]) -> Result<f64> {
    Ok(certify_dual(p, alpha)?.gap)
}

/// `dP/dbeta_m = <A beta - y, a_m>/N + lambda beta_m`.
pub fn primal_partial<T: Real, W: Real>(p: &RidgeProblem<T>, beta: &[W], m: usize) -> Result<f64> {
    check_len("beta", beta.len(), p.m())?;
    if m >= p.m() {
        return Err(Error::arg(format!("coordinate {m} out of range")));
    }
    let resid = p.by_col().mul_vec(beta);
    let (idx, vals) = p.by_col().outer(m);
    let dot: f64 = idx.iter().zip(vals).map(|(&i, a)| (resid[i] - p.labels()[i].to_f64()) * a.to_f64()).sum();
    Ok(dot / p.n() as f64 + p.lambda() * beta[m].to_f64())
}

/// `dD/dalpha_n = -N alpha_n - <A^T alpha, a_n>/lambda + y_n`.
pub fn dual_partial<T: Real, W: Real>(p: &RidgeProblem<T>, alpha: &[W], n: usize) -> Result<f64> {
    check_len("alpha", alpha.len(), p.n())?;
    if n >= p.n() {
        return Err(Error::arg(format!("coordinate {n} out of range")));
    }
    let shared = p.by_row().tmul_vec(alpha);
    let (idx, vals) = p.by_row().outer(n);
    let dot: f64 = idx.iter().zip(vals).map(|(&j, a)| shared[j] * a.to_f64()).sum();
    Ok(-(p.n() as f64) * alpha[n].to_f64() - dot / p.lambda() + p.labels()[n].to_f64())
}

/// Exact minimizer `(A^T A + N lambda I)^{-1} A^T y` by dense Cholesky.
///
/// A test oracle: refuses problems wider than `cap` features.
pub fn closed_form_solution<T: Real>(p: &RidgeProblem<T>, cap: usize) -> Result<Vec<f64>> {
    let m = p.m();
    if m > cap {
        return Err(Error::OracleCap { n_cols: m, cap });
    }
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for row in 0..p.n() {
        let (idx, vals) = p.by_row().outer(row);
        for (a, (&i, vi)) in idx.iter().zip(vals).enumerate() {
            for (&j, vj) in idx[a..].iter().zip(&vals[a..]) {
                let prod = vi.to_f64() * vj.to_f64();
                gram[(i, j)] += prod;
                if i != j {
                    gram[(j, i)] += prod;
                }
            }
        }
    }
    let shift = p.n() as f64 * p.lambda();
    for i in 0..m {
        gram[(i, i)] += shift;
    }
    let rhs = DVector::from_vec(p.by_row().tmul_vec(p.labels()));
    let chol = gram.cholesky().ok_or(Error::Singular)?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, parse_libsvm_str, SyntheticSpec};
    use approx::assert_abs_diff_eq;

    fn problem(text: &str, lambda: f64) -> RidgeProblem<f64> {
        RidgeProblem::new(parse_libsvm_str(text, None).unwrap(), lambda).unwrap()
    }

    /// A = [[1],[1]], y = (1, 1), lambda = 0.5.
    fn two_by_one() -> RidgeProblem<f64> {
        problem("1 1:1\n1 1:1", 0.5)
    }

    /// A = [[1]], y = (1), lambda = 1.
    fn one_by_one() -> RidgeProblem<f64> {
        problem("1 1:1", 1.0)
    }

    fn random(n: usize, m: usize, seed: u64, lambda: f64) -> RidgeProblem<f64> {
        let spec = SyntheticSpec { n_rows: n, n_cols: m, density: 0.4, noise_std: 0.5, seed };
        RidgeProblem::new(generate_synthetic(&spec).unwrap().0, lambda).unwrap()
    }

    #[test]
    fn primal_objective_examples() {
        let p = two_by_one();
        assert_abs_diff_eq!(primal_objective(&p, &[0.0]).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(primal_objective(&p, &[2.0 / 3.0]).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
        let zero_y = problem("0 1:1\n0 1:3", 0.5);
        assert_eq!(primal_objective(&zero_y, &[0.0]).unwrap(), 0.0);
        assert!(primal_objective(&p, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn primal_objective_at_examples() {
        let p = two_by_one();
        let beta = [0.3];
        let w = p.by_col().mul_vec(&beta);
        assert_abs_diff_eq!(
            primal_objective_at(&p, &beta, &w).unwrap(),
            primal_objective(&p, &beta).unwrap(),
            epsilon = 1e-12
        );
        assert_eq!(primal_objective_at(&p, &[0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(primal_objective_at(&p, &[0.0], &[0.0, 0.0]).unwrap(), 0.5);
        assert!(primal_objective_at(&p, &[0.0], &[0.0]).is_err());
    }

    #[test]
    fn dual_objective_examples() {
        let p = one_by_one();
        assert_eq!(dual_objective(&p, &[0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(dual_objective(&p, &[0.5]).unwrap(), 0.25, epsilon = 1e-15);
        // 1-D scan around the maximizer.
        let best = dual_objective(&p, &[0.5]).unwrap();
        for k in 1..=100 {
            let d = 0.01 * k as f64 / 10.0;
            assert!(dual_objective(&p, &[0.5 + d]).unwrap() < best);
            assert!(dual_objective(&p, &[0.5 - d]).unwrap() < best);
        }
    }

    #[test]
    fn duality_maps() {
        let p = one_by_one();
        assert_eq!(dual_to_primal_map(&p, &[0.0]).unwrap(), vec![0.0]);
        assert_eq!(dual_to_primal_map(&p, &[0.5]).unwrap(), vec![0.5]);
        let p2 = problem("1 1:1", 2.0);
        assert_eq!(dual_to_primal_map(&p2, &[0.5]).unwrap(), vec![0.25]);

        let q = two_by_one();
        assert_eq!(primal_to_dual_map(&q, &[0.0]).unwrap(), vec![0.5, 0.5]);
        let alpha = primal_to_dual_map(&q, &[2.0 / 3.0]).unwrap();
        assert_abs_diff_eq!(alpha[0], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(alpha[1], 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn mapped_optimum_is_dual_optimum() {
        let p = random(30, 6, 3, 0.1);
        let beta = closed_form_solution(&p, DEFAULT_ORACLE_CAP).unwrap();
        let alpha = primal_to_dual_map(&p, &beta).unwrap();
        for n in 0..p.n() {
            assert!(dual_partial(&p, &alpha, n).unwrap().abs() < 1e-10);
        }
        let back = dual_to_primal_map(&p, &alpha).unwrap();
        for (a, b) in back.iter().zip(&beta) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn gap_examples() {
        let p = random(20, 5, 1, 0.1);
        let beta = closed_form_solution(&p, DEFAULT_ORACLE_CAP).unwrap();
        assert!(duality_gap_primal(&p, &beta).unwrap() <= 1e-10);

        let zero_y = problem("0 1:1\n0 1:3", 0.5);
        assert_eq!(duality_gap_primal(&zero_y, &[0.0]).unwrap(), 0.0);
        assert_eq!(duality_gap_dual(&zero_y, &[0.0, 0.0]).unwrap(), 0.0);

        // P(0) = 0.5; alpha = (0.5, 0.5): D = -0.5 - 1 + 1 = -0.5.
        let q = two_by_one();
        let c = certify_primal(&q, &[0.0]).unwrap();
        assert_abs_diff_eq!(c.primal_obj, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.dual_obj, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.gap, 1.0, epsilon = 1e-15);
        // Optimal value is P(2/3) = 1/6, so the gap must exceed P(0) - 1/6.
        assert!(c.gap >= 0.5 - 1.0 / 6.0);

        assert!(duality_gap_dual(&one_by_one(), &[0.5]).unwrap() <= 1e-15);
        let alpha: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        assert!(duality_gap_dual(&p, &alpha).unwrap() >= 0.0);
    }

    #[test]
    fn closed_form_examples() {
        let beta = closed_form_solution(&two_by_one(), 512).unwrap();
        assert_abs_diff_eq!(beta[0], 2.0 / 3.0, epsilon = 1e-14);

        let eye = problem("1 1:1\n0 2:1", 0.5);
        let beta = closed_form_solution(&eye, 512).unwrap();
        assert_abs_diff_eq!(beta[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(beta[1], 0.0, epsilon = 1e-14);

        let zero_y = problem("0 1:1 2:2\n0 1:3", 0.5);
        assert_eq!(closed_form_solution(&zero_y, 512).unwrap(), vec![0.0, 0.0]);

        let wide = random(10, 20, 2, 1.0);
        assert!(matches!(closed_form_solution(&wide, 10), Err(Error::OracleCap { .. })));
    }

    #[test]
    fn closed_form_is_stationary() {
        for seed in 0..5 {
            let p = random(60, 15, seed, 1e-3);
            let beta = closed_form_solution(&p, 512).unwrap();
            for m in 0..p.m() {
                assert!(primal_partial(&p, &beta, m).unwrap().abs() <= 1e-8);
            }
        }
    }
}
