//! Asynchronous multi-threaded coordinate descent.
//!
//! Worker threads pull coordinates from the epoch permutation through a
//! shared cursor, so each coordinate is processed by exactly one task. A
//! task reads whatever the shared vector currently holds (possibly stale),
//! computes the exact coordinate step, writes its own weight (it is the only
//! writer of that weight during the epoch) and accumulates the step into the
//! shared vector. The variants differ only in that accumulation:
//!
//! * [`AsyncVariant::Atomic`]: compare-and-swap addition, no contribution is
//!   ever lost.
//! * [`AsyncVariant::Wild`]: plain load then store; concurrent contributions
//!   to the same entry can overwrite each other.
//! * [`AsyncVariant::Tpa`]: two-level parallelism. Inside a task the inner
//!   product is split over `n_lanes` strided lanes whose partial sums are
//!   combined by a halving tree reduction; all lanes then write back with
//!   atomic additions.

mod shared;

pub use shared::SharedModel;

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::metrics::EpochMetrics;
use crate::objective::{Form, Model, RidgeProblem};
use crate::solver::{self, coordinate_step, dot_term, run_trace, EpochPlan};
use crate::{Error, Real, Result};

/// Columns with at least this many nonzeros run their lanes on the rayon
/// pool; shorter ones evaluate the lanes in lockstep on the task's thread.
/// The result is identical either way.
pub const PARALLEL_LANES_MIN_NNZ: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AsyncVariant {
    Atomic,
    Wild,
    Tpa,
}

impl std::str::FromStr for AsyncVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "atomic" => Ok(AsyncVariant::Atomic),
            "wild" => Ok(AsyncVariant::Wild),
            "tpa" => Ok(AsyncVariant::Tpa),
            other => Err(Error::arg(format!("unknown async variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AsyncConfig {
    pub variant: AsyncVariant,
    /// Concurrent coordinate tasks.
    pub n_workers: usize,
    /// Lanes inside one task; a power of two. Only used by `Tpa`.
    pub n_lanes: usize,
    /// Epochs between exact shared-vector recomputations; 0 is off.
    pub shared_recompute_every: usize,
    pub seed: u64,
    pub n_epochs: usize,
    pub form: Form,
    pub gap_check_every: usize,
}

impl AsyncConfig {
    /// Defaults: one lane, certification every epoch, and shared-vector
    /// recomputation every 10 epochs for `Wild` (off otherwise).
    pub fn new(variant: AsyncVariant, form: Form, n_workers: usize, n_epochs: usize, seed: u64) -> Self {
        AsyncConfig {
            variant,
            n_workers,
            n_lanes: 1,
            shared_recompute_every: if variant == AsyncVariant::Wild { 10 } else { 0 },
            seed,
            n_epochs,
            form,
            gap_check_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_workers == 0 {
            return Err(Error::arg("n_workers must be at least 1"));
        }
        if self.n_lanes == 0 || !self.n_lanes.is_power_of_two() {
            return Err(Error::arg(format!("n_lanes must be a power of two, got {}", self.n_lanes)));
        }
        Ok(())
    }
}

/// The engine a node uses to run one epoch over a set of coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Sequential,
    Async { variant: AsyncVariant, n_workers: usize, n_lanes: usize },
}

impl Engine {
    /// Runs the plan on `model` with this engine.
    pub fn run_epoch<T: Real>(&self, p: &RidgeProblem<T>, model: &mut Model<T>, plan: &EpochPlan) -> Result<()> {
        match *self {
            Engine::Sequential => solver::run_epoch(p, model, plan),
            Engine::Async { variant, n_workers, n_lanes } => {
                let mut config = AsyncConfig::new(variant, model.form, n_workers, 0, plan.seed);
                config.n_lanes = n_lanes;
                run_epoch_async(p, model, plan, &config).map(|_| ())
            }
        }
    }
}

/// Inner product of one coordinate split over `cache.len()` strided lanes,
/// combined by halving tree reduction. The summation order depends only on
/// the lane count, so the result is deterministic for a fixed snapshot of
/// the shared vector.
fn lane_dot<T: Real>(
    p: &RidgeProblem<T>,
    form: Form,
    idx: &[usize],
    vals: &[T],
    shared: &[T::Atomic],
    cache: &mut [f64],
) -> f64 {
    let n_lanes = cache.len();
    let labels = p.labels();
    let partial = |lane: usize| {
        let mut dp = 0.0;
        let mut k = lane;
        while k < idx.len() {
            dp += dot_term(form, labels, idx[k], T::load(&shared[idx[k]]), vals[k]);
            k += n_lanes;
        }
        dp
    };
    if n_lanes > 1 && idx.len() >= PARALLEL_LANES_MIN_NNZ {
        cache.par_iter_mut().enumerate().for_each(|(u, c)| *c = partial(u));
    } else {
        for (u, c) in cache.iter_mut().enumerate() {
            *c = partial(u);
        }
    }
    let mut v = n_lanes / 2;
    while v != 0 {
        for u in 0..v {
            cache[u] += cache[u + v];
        }
        v /= 2;
    }
    cache[0]
}

/// One two-level task on coordinate `coord`: strided partial inner products,
/// tree reduction, the closed-form step, and an all-lane atomic writeback
/// to the shared vector. Returns the step.
///
/// `n_lanes` must be a power of two.
pub fn tpa_coordinate_task<T: Real>(
    p: &RidgeProblem<T>,
    model: &SharedModel<T>,
    coord: usize,
    sqnorm: f64,
    n_lanes: usize,
) -> Result<T> {
    if n_lanes == 0 || !n_lanes.is_power_of_two() {
        return Err(Error::arg(format!("n_lanes must be a power of two, got {n_lanes}")));
    }
    if coord >= model.weights.len() {
        return Err(Error::arg(format!("coordinate {coord} out of range")));
    }
    let mut cache = vec![0.0; n_lanes];
    Ok(tpa_task(p, model, coord, sqnorm, &mut cache))
}

fn tpa_task<T: Real>(p: &RidgeProblem<T>, model: &SharedModel<T>, coord: usize, sqnorm: f64, cache: &mut [f64]) -> T {
    let form = model.form;
    let (idx, vals) = p.coordinate_vector(form, coord);
    let dot = lane_dot(p, form, idx, vals, &model.shared, cache);
    let weight = T::load(&model.weights[coord]);
    let delta = T::from_f64(coordinate_step(p, form, coord, dot, weight, sqnorm));
    T::store(&model.weights[coord], weight + delta);
    let n_lanes = cache.len();
    let write_lane = |lane: usize| {
        let mut k = lane;
        while k < idx.len() {
            T::fetch_add(&model.shared[idx[k]], vals[k] * delta);
            k += n_lanes;
        }
    };
    if n_lanes > 1 && idx.len() >= PARALLEL_LANES_MIN_NNZ {
        (0..n_lanes).into_par_iter().for_each(write_lane);
    } else {
        (0..n_lanes).for_each(write_lane);
    }
    delta
}

/// Single-lane task for the atomic and wild variants.
fn scalar_task<T: Real>(p: &RidgeProblem<T>, model: &SharedModel<T>, coord: usize, sqnorm: f64, wild: bool) -> T {
    let form = model.form;
    let (idx, vals) = p.coordinate_vector(form, coord);
    let labels = p.labels();
    let mut dot = 0.0;
    for (&i, &a) in idx.iter().zip(vals) {
        dot += dot_term(form, labels, i, T::load(&model.shared[i]), a);
    }
    let weight = T::load(&model.weights[coord]);
    let delta = T::from_f64(coordinate_step(p, form, coord, dot, weight, sqnorm));
    T::store(&model.weights[coord], weight + delta);
    if wild {
        for (&i, &a) in idx.iter().zip(vals) {
            let old = T::load(&model.shared[i]);
            T::store(&model.shared[i], old + a * delta);
        }
    } else {
        for (&i, &a) in idx.iter().zip(vals) {
            T::fetch_add(&model.shared[i], a * delta);
        }
    }
    delta
}

/// Runs one asynchronous epoch over `plan` with `config.n_workers` threads.
///
/// Returns the step taken for each entry of `plan.permutation`, in plan
/// order.
pub fn run_epoch_async<T: Real>(
    p: &RidgeProblem<T>,
    model: &mut Model<T>,
    plan: &EpochPlan,
    config: &AsyncConfig,
) -> Result<Vec<T>> {
    config.validate()?;
    let n_coords = p.n_coords(model.form);
    if plan.permutation.iter().any(|&c| c >= n_coords) {
        return Err(Error::arg("plan references a coordinate out of range"));
    }
    let shared_model = SharedModel::from_model(model);
    let deltas: Vec<T::Atomic> = (0..plan.permutation.len()).map(|_| T::new_atomic(T::ZERO)).collect();
    let sqnorms = p.coordinate_sqnorms(model.form);
    let cursor = AtomicUsize::new(0);
    let lanes = if config.variant == AsyncVariant::Tpa { config.n_lanes } else { 1 };

    let work = || {
        let mut cache = vec![0.0; lanes];
        loop {
            let slot = cursor.fetch_add(1, Ordering::Relaxed);
            let Some(&coord) = plan.permutation.get(slot) else {
                break;
            };
            let delta = match config.variant {
                AsyncVariant::Atomic => scalar_task(p, &shared_model, coord, sqnorms[coord], false),
                AsyncVariant::Wild => scalar_task(p, &shared_model, coord, sqnorms[coord], true),
                AsyncVariant::Tpa => tpa_task(p, &shared_model, coord, sqnorms[coord], &mut cache),
            };
            T::store(&deltas[slot], delta);
        }
    };
    if config.n_workers == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..config.n_workers {
                s.spawn(work);
            }
        });
    }
    shared_model.write_into(model);
    Ok(deltas.iter().map(T::load).collect())
}

/// Replaces the shared vector with `A beta` (or `A^T alpha`) computed
/// exactly, discarding any drift accumulated by asynchronous updates.
pub fn recompute_shared_vector<T: Real>(p: &RidgeProblem<T>, model: &mut Model<T>) {
    model.recompute_shared(p);
}

/// Runs an asynchronous engine from zero for `config.n_epochs` epochs.
pub fn solve_async<T: Real>(p: &RidgeProblem<T>, config: &AsyncConfig) -> Result<(Model<T>, Vec<EpochMetrics>)> {
    config.validate()?;
    let mut model = Model::zeros(p, config.form);
    let count = p.n_coords(config.form);
    let trace = run_trace(
        p,
        &mut model,
        config.n_epochs,
        config.gap_check_every,
        config.shared_recompute_every,
        |model, epoch| {
            run_epoch_async(p, model, &EpochPlan::full(count, config.seed, epoch as u64), config).map(|_| ())
        },
    )?;
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, parse_libsvm_str, SyntheticSpec};
    use crate::solver::primal_coordinate_update;

    fn random(n: usize, m: usize, density: f64, seed: u64) -> RidgeProblem<f64> {
        let spec = SyntheticSpec { n_rows: n, n_cols: m, density, noise_std: 0.1, seed };
        RidgeProblem::new(generate_synthetic(&spec).unwrap().0, 0.01).unwrap()
    }

    #[test]
    fn config_validation() {
        let mut c = AsyncConfig::new(AsyncVariant::Tpa, Form::Primal, 0, 1, 0);
        assert!(c.validate().is_err());
        c.n_workers = 2;
        c.n_lanes = 3;
        assert!(c.validate().is_err());
        c.n_lanes = 4;
        assert!(c.validate().is_ok());
        assert_eq!(AsyncConfig::new(AsyncVariant::Wild, Form::Dual, 1, 1, 0).shared_recompute_every, 10);
    }

    #[test]
    fn single_lane_task_matches_sequential_update() {
        let p = random(40, 10, 0.5, 1);
        let mut seq = Model::zeros(&p, Form::Primal);
        seq.weights[3] = 0.25;
        seq.recompute_shared(&p);
        let shared = SharedModel::from_model(&seq);
        let sq = p.coordinate_sqnorms(Form::Primal)[3];
        let tpa = tpa_coordinate_task(&p, &shared, 3, sq, 1).unwrap();
        let expected = primal_coordinate_update(&p, &mut seq, 3, sq).unwrap();
        assert_eq!(tpa, expected);
        assert_eq!(shared.to_model(), seq);
    }

    #[test]
    fn four_lanes_on_seven_nonzeros() {
        // One column with 7 nonzeros.
        let text = "1 1:0.5\n2 1:-1\n0.5 1:2\n-1 1:0.25\n3 1:1.5\n0 1:-0.75\n1 1:1";
        let p64: RidgeProblem<f64> = RidgeProblem::new(parse_libsvm_str(text, None).unwrap(), 0.1).unwrap();
        let p32: RidgeProblem<f32> = RidgeProblem::new(parse_libsvm_str(text, None).unwrap(), 0.1).unwrap();
        let shared_vals: Vec<f64> = (0..7).map(|i| 0.1 * i as f64 - 0.2).collect();

        let m64 = Model { form: Form::Primal, weights: vec![0.3], shared: shared_vals.clone() };
        let one =
            tpa_coordinate_task(&p64, &SharedModel::from_model(&m64), 0, p64.coordinate_sqnorms(Form::Primal)[0], 1)
                .unwrap();
        let four =
            tpa_coordinate_task(&p64, &SharedModel::from_model(&m64), 0, p64.coordinate_sqnorms(Form::Primal)[0], 4)
                .unwrap();
        assert!((one - four).abs() <= 1e-12);

        let m32 = Model {
            form: Form::Primal,
            weights: vec![0.3f32],
            shared: shared_vals.iter().map(|&v| v as f32).collect(),
        };
        let sq = p32.coordinate_sqnorms(Form::Primal)[0];
        let one = tpa_coordinate_task(&p32, &SharedModel::from_model(&m32), 0, sq, 1).unwrap();
        let four = tpa_coordinate_task(&p32, &SharedModel::from_model(&m32), 0, sq, 4).unwrap();
        assert!((one - four).abs() <= 1e-6);
    }

    #[test]
    fn zero_column_task() {
        let p: RidgeProblem<f64> = RidgeProblem::new(parse_libsvm_str("1 1:1", Some(2)).unwrap(), 0.5).unwrap();
        let m = Model { form: Form::Primal, weights: vec![0.0, 0.8], shared: vec![0.0] };
        let shared = SharedModel::from_model(&m);
        let delta = tpa_coordinate_task(&p, &shared, 1, 0.0, 2).unwrap();
        assert_eq!(delta, -0.8);
        let after = shared.to_model();
        assert_eq!(after.weights[1], 0.0);
        assert_eq!(after.shared, vec![0.0]);
    }

    #[test]
    fn tpa_task_rejects_bad_lanes() {
        let p: RidgeProblem<f64> = RidgeProblem::new(parse_libsvm_str("1 1:1", None).unwrap(), 0.5).unwrap();
        let shared = SharedModel::from_model(&Model::zeros(&p, Form::Primal));
        assert!(tpa_coordinate_task(&p, &shared, 0, 1.0, 3).is_err());
        assert!(tpa_coordinate_task(&p, &shared, 1, 1.0, 2).is_err());
    }

    #[test]
    fn every_coordinate_updated_once() {
        // With a fresh zero model and a dense problem, every step is nonzero,
        // and each weight equals the single step recorded for it.
        let p = random(30, 25, 1.0, 4);
        for variant in [AsyncVariant::Atomic, AsyncVariant::Wild, AsyncVariant::Tpa] {
            let mut model = Model::zeros(&p, Form::Primal);
            let mut config = AsyncConfig::new(variant, Form::Primal, 4, 1, 0);
            config.n_lanes = 2;
            let plan = EpochPlan::full(25, 9, 1);
            let deltas = run_epoch_async(&p, &mut model, &plan, &config).unwrap();
            for (slot, &coord) in plan.permutation.iter().enumerate() {
                assert_eq!(model.weights[coord], deltas[slot]);
                assert!(deltas[slot] != 0.0);
            }
        }
    }

    #[test]
    fn recompute_restores_perturbed_shared_vector() {
        let p = random(20, 8, 0.5, 2);
        let (mut model, _) = crate::solver::solve(&p, &crate::solver::SolverConfig::new(Form::Primal, 3, 1)).unwrap();
        let before = model.clone();
        recompute_shared_vector(&p, &mut model);
        let change = before.shared.iter().zip(&model.shared).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(change <= 1e-12);
        model.shared[5] += 1.0;
        recompute_shared_vector(&p, &mut model);
        assert_eq!(model.consistency_residual(&p), 0.0);
    }
}
