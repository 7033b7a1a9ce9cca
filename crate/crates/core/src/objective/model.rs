use super::{Form, RidgeProblem};
use crate::Real;

/// Model weights together with the shared vector they induce.
///
/// For [`Form::Primal`] the weights are `beta` (length `M`) and the shared
/// vector is `w = A beta` (length `N`). For [`Form::Dual`] the weights are
/// `alpha` (length `N`) and the shared vector is `A^T alpha` (length `M`).
/// Solvers update the shared vector incrementally; the two are expected to
/// agree within [`Real::CONSISTENCY_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub form: Form,
    pub weights: Vec<T>,
    pub shared: Vec<T>,
}

impl<T: Real> Model<T> {
    /// The all-zero starting point, which is trivially consistent.
    pub fn zeros(problem: &RidgeProblem<T>, form: Form) -> Self {
        Model { form, weights: vec![T::ZERO; problem.n_coords(form)], shared: vec![T::ZERO; problem.shared_len(form)] }
    }

    /// Builds a model from weights, computing the shared vector exactly.
    pub fn from_weights(problem: &RidgeProblem<T>, form: Form, weights: Vec<T>) -> Self {
        let mut model = Model { form, weights, shared: Vec::new() };
        model.shared = model.exact_shared(problem).into_iter().map(T::from_f64).collect();
        model
    }

    /// `A beta` or `A^T alpha` computed from scratch in `f64`.
    pub fn exact_shared(&self, problem: &RidgeProblem<T>) -> Vec<f64> {
        match self.form {
            Form::Primal => problem.by_col().mul_vec(&self.weights),
            Form::Dual => problem.by_row().tmul_vec(&self.weights),
        }
    }

    /// `||shared - exact_shared||_inf`.
    pub fn consistency_residual(&self, problem: &RidgeProblem<T>) -> f64 {
        self.exact_shared(problem).iter().zip(&self.shared).map(|(e, s)| (e - s.to_f64()).abs()).fold(0.0, f64::max)
    }

    pub fn is_consistent(&self, problem: &RidgeProblem<T>) -> bool {
        self.consistency_residual(problem) <= T::CONSISTENCY_TOL
    }

    /// Replaces the shared vector with its exact value.
    pub fn recompute_shared(&mut self, problem: &RidgeProblem<T>) {
        let exact = self.exact_shared(problem);
        for (s, e) in self.shared.iter_mut().zip(exact) {
            *s = T::from_f64(e);
        }
    }
}
