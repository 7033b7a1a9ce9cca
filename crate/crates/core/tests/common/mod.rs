#![allow(dead_code)]

use coord_forge::data::{generate_synthetic, SyntheticSpec};
use coord_forge::{Real, RidgeProblem};

pub fn synthetic<T: Real>(n: usize, m: usize, density: f64, seed: u64, lambda: f64) -> RidgeProblem<T> {
    let spec = SyntheticSpec { n_rows: n, n_cols: m, density, noise_std: 0.1, seed };
    RidgeProblem::new(generate_synthetic(&spec).unwrap().0, lambda).unwrap()
}

/// Minimizer of a unimodal `f` on `[lo, hi]` by golden-section search.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - invphi * (hi - lo);
    let mut d = lo + invphi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn to_f64<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64()).collect()
}

use std::sync::Arc;

use coord_forge::distributed::{partition_for, AggregationMode, Broadcast, MasterState, WorkerState, WorkerUpdate};
use coord_forge::parallel::Engine;
use coord_forge::Form;

/// A master about to aggregate one round, with the global base point and
/// global direction the updates correspond to.
pub struct AggState {
    pub base: Vec<f64>,
    pub delta: Vec<f64>,
    pub master: MasterState<f64>,
    pub updates: Vec<WorkerUpdate>,
}

fn assemble(workers: &[WorkerState<f64>], count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    for w in workers {
        for (&c, v) in w.coords.iter().zip(w.owned_weights()) {
            out[c] = v;
        }
    }
    out
}

/// Runs `warm` rounds alternating averaging and adaptive steps, then
/// collects the next round's updates without aggregating them.
pub fn aggregation_state(p: &RidgeProblem<f64>, form: Form, k: usize, seed: u64, warm: usize) -> AggState {
    let count = p.n_coords(form);
    let partition = partition_for(p, form, k, seed).unwrap();
    let mut workers: Vec<_> =
        (0..k).map(|id| WorkerState::new(p, form, id as u32, partition.block(id).to_vec()).unwrap()).collect();
    let mut master = MasterState::new(p, form);
    for epoch in 1..=warm as u32 + 1 {
        let base = assemble(&workers, count);
        let updates: Vec<_> =
            workers.iter_mut().map(|w| w.worker_epoch(p, &Engine::Sequential, seed, epoch).unwrap()).collect();
        if epoch as usize == warm + 1 {
            let after = assemble(&workers, count);
            let delta = after.iter().zip(&base).map(|(a, b)| a - b).collect();
            return AggState { base, delta, master, updates };
        }
        let mode = if epoch % 2 == 0 { AggregationMode::Adaptive } else { AggregationMode::Average };
        let gamma = master.aggregate(p, &updates, mode).unwrap();
        let b = Broadcast { epoch, gamma, shared: Arc::new(master.shared.clone()) };
        for w in &mut workers {
            w.apply_broadcast(&b).unwrap();
        }
    }
    unreachable!()
}
