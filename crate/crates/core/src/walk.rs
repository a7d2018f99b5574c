//! Simulation of the plain walk and the conditioned h-process, boundary
//! sampling, stopping times and exact sphere-exit distributions.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::MartinKernelHandle;
use crate::tree::{BoundaryRay, TreeModel, VertexId};

/// Counter-based plan of independent RNG streams: identical
/// `(seed, task index)` always yields the identical path.
#[derive(Clone, Copy, Debug)]
pub struct RngPlan {
    pub seed: u64,
}

impl RngPlan {
    pub fn new(seed: u64) -> Self {
        RngPlan { seed }
    }

    pub fn stream(&self, task: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(task);
        rng
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Ran the full horizon.
    Horizon,
    /// Reached the edge of the certified ball; remaining steps dropped.
    Truncated,
    /// Hit an absorbing target (e.g. a sphere).
    Absorbed,
}

/// A realized trajectory `X_0, ..., X_n`.
#[derive(Clone, Debug)]
pub struct WalkPath {
    pub steps: Vec<VertexId>,
    pub stream: u64,
    pub termination: Termination,
}

impl WalkPath {
    pub fn start(&self) -> &VertexId {
        &self.steps[0]
    }

    pub fn len_steps(&self) -> usize {
        self.steps.len() - 1
    }

    /// First index `k` with `X_k` outside the set, or `None` within horizon.
    pub fn exit_time<F: Fn(&VertexId) -> bool>(&self, inside: F) -> Option<usize> {
        self.steps.iter().position(|v| !inside(v))
    }
}

fn sample_index(weights: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last // u landed in the rounding slack of the final cumulative step
}

/// `horizon` steps of the plain Markov chain with kernel `p`.
pub fn simulate(
    tree: &TreeModel,
    x0: &VertexId,
    horizon: usize,
    rng: &mut ChaCha8Rng,
    stream: u64,
) -> Result<WalkPath> {
    tree.record(x0)?;
    let mut steps = Vec::with_capacity(horizon + 1);
    steps.push(x0.clone());
    let mut current = x0.clone();
    for _ in 0..horizon {
        let rec = tree.record_unchecked(&current);
        let u: f64 = rng.random();
        let next = if current.is_root() {
            let i = sample_index(rec.p_children.iter().copied(), u);
            current.child(i as u32)
        } else {
            let i = sample_index(
                std::iter::once(rec.p_parent).chain(rec.p_children.iter().copied()),
                u,
            );
            if i == 0 {
                current.parent().unwrap()
            } else {
                current.child((i - 1) as u32)
            }
        };
        steps.push(next.clone());
        current = next;
    }
    Ok(WalkPath {
        steps,
        stream,
        termination: Termination::Horizon,
    })
}

/// `horizon` steps of the theta-conditioned h-process. The path is cut with
/// an explicit `Truncated` flag when it reaches the edge of the certified
/// ball, so uncertified kernel values are never used silently.
pub fn simulate_conditioned(
    handle: &MartinKernelHandle,
    x0: &VertexId,
    horizon: usize,
    rng: &mut ChaCha8Rng,
    stream: u64,
) -> Result<WalkPath> {
    handle.tree().record(x0)?;
    let ball_depth = handle.table().depth();
    let mut steps = Vec::with_capacity(horizon + 1);
    steps.push(x0.clone());
    let mut current = x0.clone();
    let mut termination = Termination::Horizon;
    for _ in 0..horizon {
        if current.depth() + 1 > ball_depth {
            termination = Termination::Truncated;
            break;
        }
        let step = handle.conditioned_kernel(&current)?;
        let u: f64 = rng.random();
        let i = sample_index(step.probs.iter().map(|(_, p)| *p), u);
        current = step.probs[i].0.clone();
        steps.push(current.clone());
    }
    Ok(WalkPath {
        steps,
        stream,
        termination,
    })
}

/// Exact first-hitting distribution on the radius-`radius` sphere around the
/// root, for the walk started at `x` strictly inside the ball.
///
/// Solved by harmonic iteration with the sphere absorbing; on a tree every
/// escape to the boundary crosses the sphere, so the masses sum to 1.
pub fn sphere_exit_distribution(
    tree: &TreeModel,
    x: &VertexId,
    radius: usize,
) -> Result<Vec<(VertexId, f64)>> {
    const BALL_CAP: usize = 200_000;
    const ITER_CAP: usize = 200_000;
    const TOL: f64 = 1e-13;
    if radius == 0 {
        return Err(Error::Config("sphere radius must be >= 1".into()));
    }
    tree.record(x)?;
    if x.depth() >= radius {
        return Err(Error::Config(format!(
            "start {x} must lie strictly inside the radius-{radius} ball"
        )));
    }
    let ball = tree.ball(radius, BALL_CAP)?;
    let sphere: Vec<VertexId> = ball.iter().filter(|v| v.depth() == radius).cloned().collect();
    let interior: Vec<VertexId> = ball.iter().filter(|v| v.depth() < radius).cloned().collect();
    let int_index: std::collections::HashMap<&VertexId, usize> =
        interior.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let sph_index: std::collections::HashMap<&VertexId, usize> =
        sphere.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let n_sph = sphere.len();
    // Row structure: interior-to-interior and interior-to-sphere moves.
    enum Target {
        Interior(usize),
        Sphere(usize),
    }
    let mut rows: Vec<Vec<(Target, f64)>> = Vec::with_capacity(interior.len());
    for v in &interior {
        let rec = tree.record_unchecked(v);
        let mut row = Vec::with_capacity(rec.degree as usize);
        for (w, p) in tree.neighbors_from_record(v, &rec) {
            if let Some(&j) = int_index.get(&w) {
                row.push((Target::Interior(j), p));
            } else if let Some(&j) = sph_index.get(&w) {
                row.push((Target::Sphere(j), p));
            }
        }
        rows.push(row);
    }
    // M(v) = sum_w p(v, w) M(w), with M on the sphere the point mass.
    let mut m = vec![0.0f64; interior.len() * n_sph];
    for it in 0..=ITER_CAP {
        let mut next = vec![0.0f64; interior.len() * n_sph];
        for (i, row) in rows.iter().enumerate() {
            let out = i * n_sph;
            for (target, p) in row {
                match target {
                    Target::Interior(j) => {
                        let src = j * n_sph;
                        for s in 0..n_sph {
                            next[out + s] += p * m[src + s];
                        }
                    }
                    Target::Sphere(s) => next[out + s] += p,
                }
            }
        }
        let delta = m
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        m = next;
        if delta < TOL {
            let ix = int_index[&x];
            return Ok(sphere
                .iter()
                .enumerate()
                .map(|(s, v)| (v.clone(), m[ix * n_sph + s]))
                .collect());
        }
        if it == ITER_CAP {
            break;
        }
    }
    Err(Error::Solver(format!(
        "sphere-exit iteration did not reach {TOL} within {ITER_CAP} sweeps"
    )))
}

/// Samples a boundary direction: runs the plain walk to first passage at
/// distance `depth` from the root and records the geodesic as a ray prefix.
pub fn sample_boundary(
    tree: &TreeModel,
    x0: &VertexId,
    depth: usize,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BoundaryRay> {
    tree.record(x0)?;
    let mut current = x0.clone();
    for _ in 0..horizon {
        if current.depth() == depth {
            return Ok(BoundaryRay::from_prefix(current.word().to_vec()));
        }
        let rec = tree.record_unchecked(&current);
        let u: f64 = rng.random();
        current = if current.is_root() {
            let i = sample_index(rec.p_children.iter().copied(), u);
            current.child(i as u32)
        } else {
            let i = sample_index(
                std::iter::once(rec.p_parent).chain(rec.p_children.iter().copied()),
                u,
            );
            if i == 0 {
                current.parent().unwrap()
            } else {
                current.child((i - 1) as u32)
            }
        };
    }
    if current.depth() == depth {
        return Ok(BoundaryRay::from_prefix(current.word().to_vec()));
    }
    Err(Error::Resource(format!(
        "first passage to depth {depth} not reached within horizon {horizon}; retry with a larger horizon"
    )))
}

/// Mean, standard error and count of a Monte Carlo estimate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct McStat {
    pub estimate: f64,
    pub stderr: f64,
    pub n_paths: u64,
}

impl McStat {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        McStat {
            estimate: mean,
            stderr: (var / n).sqrt(),
            n_paths: samples.len() as u64,
        }
    }

    /// Whether `target` lies within `k` standard errors of the estimate.
    pub fn within_sigma(&self, target: f64, k: f64) -> bool {
        (self.estimate - target).abs() <= k * self.stderr.max(f64::MIN_POSITIVE)
    }
}

/// Runs `n` independent tasks over the plan's streams in parallel and
/// collects the per-task results in stream order, so parallel and serial
/// runs produce identical output.
pub fn monte_carlo<T, F>(plan: &RngPlan, n: u64, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = plan.stream(i);
            task(i, &mut rng)
        })
        .collect()
}
