//! Sequential stochastic coordinate descent.
//!
//! Each coordinate step minimizes the primal (or maximizes the dual) exactly
//! along one coordinate, reading the shared vector for the one sparse inner
//! product it needs and writing the change back into it. An epoch visits
//! every coordinate once in a fresh random order.

mod plan;

pub use plan::EpochPlan;

use std::time::Instant;

use crate::metrics::{is_check_epoch, EpochMetrics};
use crate::objective::{certify, Form, Model, RidgeProblem};
use crate::{Error, Real, Result};

/// Options for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    pub n_epochs: usize,
    pub seed: u64,
    pub form: Form,
    /// Epochs between duality-gap evaluations; 0 checks only the first and
    /// last point.
    pub gap_check_every: usize,
    /// Epochs between exact recomputations of the shared vector; 0 is off.
    pub shared_recompute_every: usize,
}

impl SolverConfig {
    pub fn new(form: Form, n_epochs: usize, seed: u64) -> Self {
        SolverConfig { n_epochs, seed, form, gap_check_every: 1, shared_recompute_every: 0 }
    }
}

/// One term of the coordinate inner product: `(y_i - w_i) a_i` for the
/// primal, `w_j a_j` for the dual.
#[inline(always)]
pub(crate) fn dot_term<T: Real>(form: Form, labels: &[T], idx: usize, shared: T, a: T) -> f64 {
    match form {
        Form::Primal => (labels[idx].to_f64() - shared.to_f64()) * a.to_f64(),
        Form::Dual => shared.to_f64() * a.to_f64(),
    }
}

/// Closed-form coordinate step given the inner product from [`dot_term`].
///
/// Primal: `(<y - w, a_m> - N lambda beta_m) / (||a_m||^2 + N lambda)`.
/// Dual: `(lambda y_n - <w, a_n> - lambda N alpha_n) / (lambda N + ||a_n||^2)`.
#[inline(always)]
pub(crate) fn coordinate_step<T: Real>(
    p: &RidgeProblem<T>,
    form: Form,
    coord: usize,
    dot: f64,
    weight: T,
    sqnorm: f64,
) -> f64 {
    let nl = p.n() as f64 * p.lambda();
    match form {
        Form::Primal => (dot - nl * weight.to_f64()) / (sqnorm + nl),
        Form::Dual => (p.lambda() * p.labels()[coord].to_f64() - dot - nl * weight.to_f64()) / (nl + sqnorm),
    }
}

#[inline]
fn update_unchecked<T: Real>(p: &RidgeProblem<T>, model: &mut Model<T>, coord: usize, sqnorm: f64) -> T {
    let form = model.form;
    let (idx, vals) = p.coordinate_vector(form, coord);
    let labels = p.labels();
    let mut dot = 0.0;
    for (&i, &a) in idx.iter().zip(vals) {
        dot += dot_term(form, labels, i, model.shared[i], a);
    }
    let delta = T::from_f64(coordinate_step(p, form, coord, dot, model.weights[coord], sqnorm));
    model.weights[coord] = model.weights[coord] + delta;
    for (&i, &a) in idx.iter().zip(vals) {
        model.shared[i] = model.shared[i] + a * delta;
    }
    delta
}

fn check_update<T: Real>(p: &RidgeProblem<T>, model: &Model<T>, form: Form, coord: usize) -> Result<()> {
    if model.form != form {
        return Err(Error::arg(format!("{} update on a {} model", form, model.form)));
    }
    if model.weights.len() != p.n_coords(form) || model.shared.len() != p.shared_len(form) {
        return Err(Error::arg("model shape does not match problem"));
    }
    if coord >= p.n_coords(form) {
        return Err(Error::arg(format!("coordinate {coord} out of range")));
    }
    Ok(())
}

/// Exact minimization of the primal along feature `m`. Updates `beta_m` and
/// the shared vector `w += a_m * delta`, and returns the step.
pub fn primal_coordinate_update<T: Real>(
    p: &RidgeProblem<T>,
    model: &mut Model<T>,
    m: usize,
    col_sqnorm: f64,
) -> Result<T> {
    check_update(p, model, Form::Primal, m)?;
    Ok(update_unchecked(p, model, m, col_sqnorm))
}

/// Exact maximization of the dual along example `n`. Updates `alpha_n` and
/// the shared vector `w += a_n * delta`, and returns the step.
pub fn dual_coordinate_update<T: Real>(
    p: &RidgeProblem<T>,
    model: &mut Model<T>,
    n: usize,
    row_sqnorm: f64,
) -> Result<T> {
    check_update(p, model, Form::Dual, n)?;
    Ok(update_unchecked(p, model, n, row_sqnorm))
}

/// One pass over the plan's coordinates, in order.
pub fn run_epoch<T: Real>(p: &RidgeProblem<T>, model: &mut Model<T>, plan: &EpochPlan) -> Result<()> {
    let n_coords = p.n_coords(model.form);
    if plan.permutation.iter().any(|&c| c >= n_coords) {
        return Err(Error::arg("plan references a coordinate out of range"));
    }
    let sqnorms = p.coordinate_sqnorms(model.form);
    for &coord in &plan.permutation {
        update_unchecked(p, model, coord, sqnorms[coord]);
    }
    Ok(())
}

/// Shared outer loop: epochs, periodic shared-vector recomputation and
/// certification. `epoch_fn` runs epoch `t` (1-based) on the model.
pub(crate) fn run_trace<T: Real>(
    p: &RidgeProblem<T>,
    model: &mut Model<T>,
    n_epochs: usize,
    gap_check_every: usize,
    shared_recompute_every: usize,
    mut epoch_fn: impl FnMut(&mut Model<T>, usize) -> Result<()>,
) -> Result<Vec<EpochMetrics>> {
    let mut trace = vec![EpochMetrics::new(0, 0.0, certify(p, model.form, &model.weights)?)];
    let mut elapsed = 0.0;
    for epoch in 1..=n_epochs {
        let start = Instant::now();
        epoch_fn(model, epoch)?;
        if shared_recompute_every > 0 && epoch % shared_recompute_every == 0 {
            model.recompute_shared(p);
        }
        let took = start.elapsed().as_secs_f64();
        elapsed += took;
        if is_check_epoch(epoch, gap_check_every, n_epochs) {
            let mut row = EpochMetrics::new(epoch, elapsed, certify(p, model.form, &model.weights)?);
            row.t_compute_s = took;
            log::debug!("epoch {epoch}: gap {:.3e}", row.duality_gap);
            trace.push(row);
        }
    }
    Ok(trace)
}

/// Runs sequential SCD from zero for `config.n_epochs` epochs.
pub fn solve<T: Real>(p: &RidgeProblem<T>, config: &SolverConfig) -> Result<(Model<T>, Vec<EpochMetrics>)> {
    let mut model = Model::zeros(p, config.form);
    let count = p.n_coords(config.form);
    let trace = run_trace(
        p,
        &mut model,
        config.n_epochs,
        config.gap_check_every,
        config.shared_recompute_every,
        |model, epoch| run_epoch(p, model, &EpochPlan::full(count, config.seed, epoch as u64)),
    )?;
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_libsvm_str;
    use crate::objective::{closed_form_solution, dual_partial, duality_gap_primal, primal_partial};
    use approx::assert_abs_diff_eq;

    fn problem(text: &str, lambda: f64) -> RidgeProblem<f64> {
        RidgeProblem::new(parse_libsvm_str(text, None).unwrap(), lambda).unwrap()
    }

    #[test]
    fn primal_update_two_by_one() {
        let p = problem("1 1:1\n1 1:1", 0.5);
        let mut model = Model::zeros(&p, Form::Primal);
        let delta = primal_coordinate_update(&p, &mut model, 0, 2.0).unwrap();
        assert_abs_diff_eq!(delta, 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(model.shared, vec![delta, delta]);
        assert!(primal_partial(&p, &model.weights, 0).unwrap().abs() < 1e-15);
        // Central finite difference of P along the coordinate vanishes too.
        let h = 1e-6;
        let f = |b: f64| crate::objective::primal_objective(&p, &[b]).unwrap();
        assert!(((f(delta + h) - f(delta - h)) / (2.0 * h)).abs() < 1e-8);
    }

    #[test]
    fn primal_update_at_exact_residual_is_zero() {
        let p = problem("1 1:1\n1 1:1", 0.5);
        let mut model = Model { form: Form::Primal, weights: vec![0.0], shared: vec![1.0, 1.0] };
        assert_eq!(primal_coordinate_update(&p, &mut model, 0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn empty_column_shrinks_to_zero() {
        let d = parse_libsvm_str("1 1:1\n1 1:1", Some(2)).unwrap();
        let p = RidgeProblem::new(d, 0.5).unwrap();
        let mut model = Model { form: Form::Primal, weights: vec![0.0, 1.75], shared: vec![0.0, 0.0] };
        let delta = primal_coordinate_update(&p, &mut model, 1, 0.0).unwrap();
        assert_eq!(delta, -1.75);
        assert_eq!(model.weights[1], 0.0);
    }

    #[test]
    fn dual_update_one_by_one() {
        let p = problem("1 1:1", 1.0);
        let mut model = Model::zeros(&p, Form::Dual);
        let delta = dual_coordinate_update(&p, &mut model, 0, 1.0).unwrap();
        assert_eq!(delta, 0.5);
        assert_eq!(model.shared, vec![0.5]);
        assert_eq!(dual_partial(&p, &model.weights, 0).unwrap(), 0.0);
        assert_eq!(dual_coordinate_update(&p, &mut model, 0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn empty_row_lands_on_label_over_n() {
        // Row 1 is empty; N = 2, y_1 = 3.
        let p = problem("1 1:1\n3", 0.7);
        let mut model = Model { form: Form::Dual, weights: vec![0.0, -2.0], shared: vec![0.0] };
        let delta = dual_coordinate_update(&p, &mut model, 1, 0.0).unwrap();
        assert_abs_diff_eq!(delta, 1.5 + 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(model.weights[1], 1.5, epsilon = 1e-15);
    }

    #[test]
    fn update_argument_errors() {
        let p = problem("1 1:1\n1 1:1", 0.5);
        let mut model = Model::zeros(&p, Form::Primal);
        assert!(primal_coordinate_update(&p, &mut model, 1, 0.0).is_err());
        assert!(dual_coordinate_update(&p, &mut model, 0, 0.0).is_err());
    }

    #[test]
    fn one_epoch_solves_single_feature() {
        let p = problem("1 1:1\n1 1:1", 0.5);
        let (model, trace) = solve(&p, &SolverConfig::new(Form::Primal, 1, 0)).unwrap();
        let beta = closed_form_solution(&p, 512).unwrap();
        assert_abs_diff_eq!(model.weights[0], beta[0], epsilon = 1e-15);
        assert!(trace.last().unwrap().duality_gap <= 1e-12);
        assert!(duality_gap_primal(&p, &model.weights).unwrap() <= 1e-12);
    }

    #[test]
    fn zero_epochs_records_initial_point() {
        let p = problem("1 1:1\n1 1:1", 0.5);
        let (model, trace) = solve(&p, &SolverConfig::new(Form::Dual, 0, 0)).unwrap();
        assert_eq!(model, Model::zeros(&p, Form::Dual));
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].epoch, 0);
    }

    #[test]
    fn rejects_out_of_range_plan() {
        let p = problem("1 1:1\n1 1:1", 0.5);
        let mut model = Model::zeros(&p, Form::Primal);
        let plan = EpochPlan { permutation: vec![3], seed: 0, epoch: 1, stream: 0 };
        assert!(run_epoch(&p, &mut model, &plan).is_err());
    }
}
