use crate::objective::{dual_objective, primal_objective, Certificate, Form, RidgeProblem};
use crate::{Error, Real, Result};

use super::{AggregationMode, WorkerUpdate};

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Step minimizing `P(beta + gamma dbeta, w + gamma dw)` over `gamma`:
///
/// `-(<w - y, dw> + N lambda <beta, dbeta>) / (||dw||^2 + N lambda ||dbeta||^2)`.
///
/// `cross` is `<beta, dbeta>` and `sqnorm` is `||dbeta||^2`. A zero
/// direction returns 0.
pub fn optimal_gamma_primal<T: Real>(
    base_shared: &[T],
    labels: &[T],
    lambda: f64,
    n: usize,
    delta_shared: &[f64],
    cross: f64,
    sqnorm: f64,
) -> f64 {
    let nl = n as f64 * lambda;
    let mut resid_dot = 0.0;
    let mut dw_sq = 0.0;
    for ((w, y), dw) in base_shared.iter().zip(labels).zip(delta_shared) {
        resid_dot += (w.to_f64() - y.to_f64()) * dw;
        dw_sq += dw * dw;
    }
    ratio(-(resid_dot + nl * cross), dw_sq + nl * sqnorm)
}

/// Step maximizing `D(alpha + gamma dalpha)` over `gamma`:
///
/// `(<dalpha, y> - N <dalpha, alpha> - <dw, w>/lambda) / (||dw||^2/lambda + N ||dalpha||^2)`.
///
/// `label_term` is `<dalpha, y>`, `cross` is `<alpha, dalpha>` and `sqnorm`
/// is `||dalpha||^2`. A zero direction returns 0.
pub fn optimal_gamma_dual<T: Real>(
    base_shared: &[T],
    lambda: f64,
    n: usize,
    delta_shared: &[f64],
    label_term: f64,
    cross: f64,
    sqnorm: f64,
) -> f64 {
    let n = n as f64;
    let mut shared_dot = 0.0;
    let mut dw_sq = 0.0;
    for (w, dw) in base_shared.iter().zip(delta_shared) {
        shared_dot += w.to_f64() * dw;
        dw_sq += dw * dw;
    }
    ratio(label_term - n * cross - shared_dot / lambda, dw_sq / lambda + n * sqnorm)
}

/// The master's copy of the shared vector and the scalars it can track
/// without seeing worker weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterState<T> {
    pub form: Form,
    pub shared: Vec<T>,
    /// `||beta||^2` or `||alpha||^2`.
    pub weights_sqnorm: f64,
    /// `<alpha, y>`; unused for the primal.
    pub weights_dot_labels: f64,
}

impl<T: Real> MasterState<T> {
    /// State for the zero model.
    pub fn new(p: &RidgeProblem<T>, form: Form) -> Self {
        MasterState { form, shared: vec![T::ZERO; p.shared_len(form)], weights_sqnorm: 0.0, weights_dot_labels: 0.0 }
    }

    /// Combines one round of updates and returns the step applied. Nothing
    /// is modified if the updates are inconsistent with the state.
    pub fn aggregate(&mut self, p: &RidgeProblem<T>, updates: &[WorkerUpdate], mode: AggregationMode) -> Result<f64> {
        if updates.is_empty() {
            return Err(Error::arg("aggregation needs at least one update"));
        }
        let len = self.shared.len();
        let mut delta = vec![0.0; len];
        let (mut cross, mut sqnorm, mut label) = (0.0, 0.0, 0.0);
        for u in updates {
            if u.delta_shared.len() != len {
                return Err(super::ProtocolError::VectorLength { expected: len, got: u.delta_shared.len() }.into());
            }
            for (d, x) in delta.iter_mut().zip(&u.delta_shared) {
                *d += x;
            }
            cross += u.cross_term;
            sqnorm += u.delta_sqnorm;
            label += u.label_term;
        }
        let gamma = match (mode, self.form) {
            (AggregationMode::Average, _) => 1.0 / updates.len() as f64,
            (AggregationMode::Adaptive, Form::Primal) => {
                optimal_gamma_primal(&self.shared, p.labels(), p.lambda(), p.n(), &delta, cross, sqnorm)
            }
            (AggregationMode::Adaptive, Form::Dual) => {
                optimal_gamma_dual(&self.shared, p.lambda(), p.n(), &delta, label, cross, sqnorm)
            }
        };
        for (w, d) in self.shared.iter_mut().zip(&delta) {
            *w = T::from_f64(w.to_f64() + gamma * d);
        }
        self.weights_sqnorm += 2.0 * gamma * cross + gamma * gamma * sqnorm;
        self.weights_dot_labels += gamma * label;
        Ok(gamma)
    }

    /// Certificate computed from the shared vector and the tracked scalars
    /// instead of the weights.
    pub fn tracked_certificate(&self, p: &RidgeProblem<T>) -> Result<Certificate> {
        let n = p.n() as f64;
        let lambda = p.lambda();
        let (primal_obj, dual_obj) = match self.form {
            Form::Primal => {
                let mut resid = 0.0;
                let mut alpha = Vec::with_capacity(p.n());
                for (w, y) in self.shared.iter().zip(p.labels()) {
                    let r = y.to_f64() - w.to_f64();
                    resid += r * r;
                    alpha.push(r / n);
                }
                let primal = resid / (2.0 * n) + 0.5 * lambda * self.weights_sqnorm;
                (primal, dual_objective(p, &alpha)?)
            }
            Form::Dual => {
                let beta: Vec<f64> = self.shared.iter().map(|w| w.to_f64() / lambda).collect();
                let shared_sq: f64 = self.shared.iter().map(|w| w.to_f64() * w.to_f64()).sum();
                let dual = -0.5 * n * self.weights_sqnorm - shared_sq / (2.0 * lambda) + self.weights_dot_labels;
                (primal_objective(p, &beta)?, dual)
            }
        };
        Ok(Certificate { primal_obj, dual_obj, gap: (primal_obj - dual_obj).abs() })
    }
}
