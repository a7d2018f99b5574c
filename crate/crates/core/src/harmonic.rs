//! Harmonic functions, the Laplacian, radial / non-tangential / stochastic
//! energies, sup-over-tube diagnostics and the stopped martingale
//! `M_n = u^2(X_n) - sum_{k<n} (Delta u^2)(X_k)`.

use std::collections::HashMap;
use std::sync::Arc;

use dashmap::DashMap;

use crate::error::{Error, Result};
use crate::potential::MartinKernelHandle;
use crate::tree::{BoundaryRay, TreeModel, VertexId};
use crate::walk::WalkPath;

/// A real function on (part of) the tree.
pub trait TreeFunction: Sync {
    fn value(&self, x: &VertexId) -> Result<f64>;
}

/// Adapter for ad-hoc functions (test oracles, indicator functions).
pub struct FnFunction<F>(pub F);

impl<F: Fn(&VertexId) -> Result<f64> + Sync> TreeFunction for FnFunction<F> {
    fn value(&self, x: &VertexId) -> Result<f64> {
        (self.0)(x)
    }
}

enum Repr {
    /// `constant + sum_i w_i K_{theta_i}`; harmonic wherever every kernel is
    /// certified.
    Martin {
        constant: f64,
        terms: Vec<(f64, Arc<MartinKernelHandle>)>,
    },
    /// Solution of the Dirichlet problem on a ball; harmonic strictly inside.
    Dirichlet(Arc<DirichletSolution>),
}

/// Evaluable harmonic function with a read-through value cache.
pub struct HarmonicFunction {
    tree: Arc<TreeModel>,
    repr: Repr,
    cache: DashMap<VertexId, f64>,
}

impl HarmonicFunction {
    pub fn martin_combination(
        tree: Arc<TreeModel>,
        constant: f64,
        terms: Vec<(f64, Arc<MartinKernelHandle>)>,
    ) -> Self {
        HarmonicFunction {
            tree,
            repr: Repr::Martin { constant, terms },
            cache: DashMap::new(),
        }
    }

    pub fn kernel(handle: Arc<MartinKernelHandle>) -> Self {
        let tree = handle.tree().clone();
        Self::martin_combination(tree, 0.0, vec![(1.0, handle)])
    }

    pub fn constant(tree: Arc<TreeModel>, c: f64) -> Self {
        Self::martin_combination(tree, c, Vec::new())
    }

    pub fn dirichlet(solution: Arc<DirichletSolution>) -> Self {
        HarmonicFunction {
            tree: solution.tree.clone(),
            repr: Repr::Dirichlet(solution),
            cache: DashMap::new(),
        }
    }

    pub fn tree(&self) -> &Arc<TreeModel> {
        &self.tree
    }

    /// Deepest vertex depth at which the function is defined.
    pub fn max_eval_depth(&self) -> usize {
        match &self.repr {
            Repr::Martin { terms, .. } => terms
                .iter()
                .map(|(_, h)| h.table().depth())
                .min()
                .unwrap_or(usize::MAX),
            Repr::Dirichlet(sol) => sol.radius,
        }
    }

    pub fn evaluate(&self, x: &VertexId) -> Result<f64> {
        if let Some(v) = self.cache.get(x) {
            return Ok(*v);
        }
        let v = match &self.repr {
            Repr::Martin { constant, terms } => {
                let mut acc = *constant;
                for (w, h) in terms {
                    acc += w * h.martin_kernel_point(x)?;
                }
                acc
            }
            Repr::Dirichlet(sol) => sol.value(x)?,
        };
        self.cache.insert(x.clone(), v);
        Ok(v)
    }
}

impl TreeFunction for HarmonicFunction {
    fn value(&self, x: &VertexId) -> Result<f64> {
        self.evaluate(x)
    }
}

/// Dirichlet problem on the radius-`radius` ball: boundary data on the
/// sphere, harmonic extension inside.
pub struct DirichletSolution {
    tree: Arc<TreeModel>,
    radius: usize,
    values: HashMap<VertexId, f64>,
}

impl DirichletSolution {
    /// Solves by harmonic (Jacobi) iteration with the sphere clamped.
    pub fn solve<G: Fn(&VertexId) -> f64>(
        tree: Arc<TreeModel>,
        radius: usize,
        boundary: G,
    ) -> Result<Arc<Self>> {
        const BALL_CAP: usize = 200_000;
        const ITER_CAP: usize = 200_000;
        const TOL: f64 = 1e-13;
        if radius == 0 {
            return Err(Error::Config("ball radius must be >= 1".into()));
        }
        let ball = tree.ball(radius, BALL_CAP)?;
        let interior: Vec<&VertexId> = ball.iter().filter(|v| v.depth() < radius).collect();
        let mut values: HashMap<VertexId, f64> = HashMap::with_capacity(ball.len());
        let mut scale = 1.0f64;
        for v in &ball {
            if v.depth() == radius {
                let g = boundary(v);
                scale = scale.max(g.abs());
                values.insert(v.clone(), g);
            } else {
                values.insert(v.clone(), 0.0);
            }
        }
        for it in 0..=ITER_CAP {
            let mut delta = 0.0f64;
            let mut next = values.clone();
            for v in &interior {
                let rec = tree.record_unchecked(v);
                let mut acc = 0.0;
                for (w, p) in tree.neighbors_from_record(v, &rec) {
                    acc += p * values[&w];
                }
                delta = delta.max((acc - values[*v]).abs());
                next.insert((*v).clone(), acc);
            }
            values = next;
            if delta < TOL * scale {
                return Ok(Arc::new(DirichletSolution {
                    tree,
                    radius,
                    values,
                }));
            }
            if it == ITER_CAP {
                break;
            }
        }
        Err(Error::Solver(format!(
            "Dirichlet iteration did not reach {TOL} within {ITER_CAP} sweeps"
        )))
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn value(&self, x: &VertexId) -> Result<f64> {
        self.values.get(x).copied().ok_or_else(|| Error::OutOfRange {
            word: x.to_string(),
            depth: x.depth(),
            max_depth: self.radius,
        })
    }
}

/// `Delta f(x) = sum_y p(x, y) f(y) - f(x)`.
pub fn laplacian(tree: &TreeModel, f: &dyn TreeFunction, x: &VertexId) -> Result<f64> {
    let rec = tree.record(x)?;
    let mut acc = 0.0;
    for (y, p) in tree.neighbors_from_record(x, &rec) {
        acc += p * f.value(&y)?;
    }
    Ok(acc - f.value(x)?)
}

/// The energy density `(Delta u^2)(x)`: the Laplacian of the squared
/// function, non-negative wherever `u` is harmonic.
pub fn energy_density(tree: &TreeModel, u: &dyn TreeFunction, x: &VertexId) -> Result<f64> {
    let rec = tree.record(x)?;
    let mut acc = 0.0;
    for (y, p) in tree.neighbors_from_record(x, &rec) {
        acc += p * u.value(&y)?.powi(2);
    }
    Ok(acc - u.value(x)?.powi(2))
}

/// Partial sums of the radial energy `sum_{k<=depth} (Delta u^2)(gamma(k))`.
pub fn radial_energy(
    tree: &TreeModel,
    u: &dyn TreeFunction,
    ray: &BoundaryRay,
    depth: usize,
) -> Result<Vec<f64>> {
    let mut sums = Vec::with_capacity(depth + 1);
    let mut acc = 0.0;
    for k in 0..=depth {
        acc += energy_density(tree, u, &ray.vertex(k))?;
        sums.push(acc);
    }
    Ok(sums)
}

/// Partial sums (by vertex depth) of the `c`-non-tangential energy
/// `sum_{y in tube, d(o,y) <= k} (Delta u^2)(y)`.
pub fn nt_energy(
    tree: &TreeModel,
    u: &dyn TreeFunction,
    ray: &BoundaryRay,
    c: usize,
    depth: usize,
) -> Result<Vec<f64>> {
    let mut by_depth = vec![0.0f64; depth + 1];
    for y in tree.tube_enumerate(ray, c, depth)? {
        by_depth[y.depth()] += energy_density(tree, u, &y)?;
    }
    let mut acc = 0.0;
    Ok(by_depth
        .into_iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect())
}

/// Cumulative sums of `(Delta u^2)(X_k)` along a path.
pub fn stochastic_energy(
    tree: &TreeModel,
    u: &dyn TreeFunction,
    path: &WalkPath,
) -> Result<Vec<f64>> {
    let mut sums = Vec::with_capacity(path.steps.len());
    let mut acc = 0.0;
    for x in &path.steps {
        acc += energy_density(tree, u, x)?;
        sums.push(acc);
    }
    Ok(sums)
}

/// The martingale track `M_n = u^2(X_n) - sum_{k<n} (Delta u^2)(X_k)`.
pub fn martingale_track(
    tree: &TreeModel,
    u: &dyn TreeFunction,
    path: &WalkPath,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(path.steps.len());
    let mut acc = 0.0;
    for (n, x) in path.steps.iter().enumerate() {
        out.push(u.value(x)?.powi(2) - acc);
        if n + 1 < path.steps.len() {
            acc += energy_density(tree, u, x)?;
        }
    }
    Ok(out)
}

/// `max |u|` over the tube within distance `depth` of the root.
pub fn nt_sup(
    tree: &TreeModel,
    u: &dyn TreeFunction,
    ray: &BoundaryRay,
    c: usize,
    depth: usize,
) -> Result<f64> {
    let mut sup = 0.0f64;
    for y in tree.tube_enumerate(ray, c, depth)? {
        sup = sup.max(u.value(&y)?.abs());
    }
    Ok(sup)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    Positive,
    Negative,
    /// Insufficient depth or horizon to decide; never counted as agreement.
    Indeterminate,
}

impl Flag {
    pub fn of(b: bool) -> Flag {
        if b {
            Flag::Positive
        } else {
            Flag::Negative
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ClassifyThresholds {
    /// Relative tail-oscillation threshold for convergence.
    pub delta_conv: f64,
    /// Allowed sup growth ratio minus one for boundedness.
    pub delta_bound: f64,
    /// Relative tail-energy threshold for finiteness.
    pub delta_energy: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        ClassifyThresholds {
            delta_conv: 1e-3,
            delta_bound: 0.05,
            delta_energy: 1e-4,
        }
    }
}

/// Truncated two-scale diagnostics of the asymptotic behavior of `u` along a
/// tube (depths `d` versus `2d`), with the raw tails kept for auditing.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct TubeDiagnostics {
    pub converging: Flag,
    pub bounded: Flag,
    pub energy_finite: Flag,
    pub tail_oscillation: f64,
    pub sup_near: f64,
    pub sup_far: f64,
    pub energy_near: f64,
    pub energy_far: f64,
}

pub fn classify_tube(
    tree: &TreeModel,
    u: &dyn TreeFunction,
    ray: &BoundaryRay,
    c: usize,
    d: usize,
    th: &ClassifyThresholds,
) -> Result<TubeDiagnostics> {
    let indeterminate = |e: &Error| matches!(e, Error::OutOfRange { .. });
    let far = 2 * d;
    let mut sup_near = 0.0f64;
    let mut sup_far = 0.0f64;
    let mut tail_min = f64::INFINITY;
    let mut tail_max = f64::NEG_INFINITY;
    for y in tree.tube_enumerate(ray, c, far)? {
        let v = match u.value(&y) {
            Ok(v) => v,
            Err(e) if indeterminate(&e) => {
                return Ok(TubeDiagnostics {
                    converging: Flag::Indeterminate,
                    bounded: Flag::Indeterminate,
                    energy_finite: Flag::Indeterminate,
                    tail_oscillation: f64::NAN,
                    sup_near: f64::NAN,
                    sup_far: f64::NAN,
                    energy_near: f64::NAN,
                    energy_far: f64::NAN,
                })
            }
            Err(e) => return Err(e),
        };
        sup_far = sup_far.max(v.abs());
        if y.depth() <= d {
            sup_near = sup_near.max(v.abs());
        } else {
            tail_min = tail_min.min(v);
            tail_max = tail_max.max(v);
        }
    }
    let energy = match nt_energy(tree, u, ray, c, far) {
        Ok(e) => e,
        Err(e) if indeterminate(&e) => {
            return Ok(TubeDiagnostics {
                converging: Flag::Indeterminate,
                bounded: Flag::Indeterminate,
                energy_finite: Flag::Indeterminate,
                tail_oscillation: tail_max - tail_min,
                sup_near,
                sup_far,
                energy_near: f64::NAN,
                energy_far: f64::NAN,
            })
        }
        Err(e) => return Err(e),
    };
    let (energy_near, energy_far) = (energy[d], energy[far]);
    let tail_oscillation = if tail_max >= tail_min {
        tail_max - tail_min
    } else {
        0.0
    };
    let scale = 1.0 + sup_near;
    Ok(TubeDiagnostics {
        converging: Flag::of(tail_oscillation <= th.delta_conv * scale),
        bounded: Flag::of(sup_far <= (1.0 + th.delta_bound) * sup_near + 1e-12),
        energy_finite: Flag::of(energy_far - energy_near <= th.delta_energy * (1.0 + energy_far)),
        tail_oscillation,
        sup_near,
        sup_far,
        energy_near,
        energy_far,
    })
}

/// Path-based counterpart of [`classify_tube`]: diagnostics of `u(X_k)`
/// along a single conditioned trajectory.
///
/// The split point is the three-quarter mark, not the midpoint: path depth
/// fluctuates around its drift line, and a midpoint tail regularly starts
/// shallow enough that a decaying `u` has not yet dropped below the
/// oscillation threshold, misflagging convergent rays.
pub fn classify_path(
    tree: &TreeModel,
    u: &dyn TreeFunction,
    path: &WalkPath,
    min_len: usize,
    th: &ClassifyThresholds,
) -> Result<TubeDiagnostics> {
    let n = path.steps.len();
    let indeterminate = TubeDiagnostics {
        converging: Flag::Indeterminate,
        bounded: Flag::Indeterminate,
        energy_finite: Flag::Indeterminate,
        tail_oscillation: f64::NAN,
        sup_near: f64::NAN,
        sup_far: f64::NAN,
        energy_near: f64::NAN,
        energy_far: f64::NAN,
    };
    if n < min_len.max(4) {
        return Ok(indeterminate);
    }
    let split = 3 * n / 4;
    let mut values = Vec::with_capacity(n);
    for x in &path.steps {
        match u.value(x) {
            Ok(v) => values.push(v),
            Err(Error::OutOfRange { .. }) => return Ok(indeterminate),
            Err(e) => return Err(e),
        }
    }
    let sup_near = values[..split].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let sup_far = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tail = &values[split..];
    let tail_oscillation = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - tail.iter().cloned().fold(f64::INFINITY, f64::min);
    // Energy terms need the neighbors of each visited vertex; the last
    // vertex of a truncated path may sit on the ball edge, so stop before it.
    let mut energy_near = 0.0;
    let mut energy_far = 0.0;
    for (k, x) in path.steps[..n - 1].iter().enumerate() {
        let t = match energy_density(tree, u, x) {
            Ok(t) => t,
            Err(Error::OutOfRange { .. }) => return Ok(indeterminate),
            Err(e) => return Err(e),
        };
        if k < split {
            energy_near += t;
        }
        energy_far += t;
    }
    let scale = 1.0 + sup_near;
    Ok(TubeDiagnostics {
        converging: Flag::of(tail_oscillation <= th.delta_conv * scale),
        bounded: Flag::of(sup_far <= (1.0 + th.delta_bound) * sup_near + 1e-12),
        energy_finite: Flag::of(energy_far - energy_near <= th.delta_energy * (1.0 + energy_far)),
        tail_oscillation,
        sup_near,
        sup_far,
        energy_near,
        energy_far,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialTable;
    use crate::tree::TreeSpec;
    use crate::walk::{simulate, RngPlan};

    fn ternary() -> Arc<TreeModel> {
        TreeModel::new(TreeSpec::ternary_uniform()).unwrap()
    }

    fn v(word: &[u32]) -> VertexId {
        VertexId::from_word(word.to_vec())
    }

    fn kernel_fn(t: &Arc<TreeModel>, depth: usize, ray_word: Vec<u32>) -> HarmonicFunction {
        let table = PotentialTable::solve(t.clone(), depth, 1e-10).unwrap();
        let ray = t.ray(ray_word).unwrap();
        HarmonicFunction::kernel(Arc::new(MartinKernelHandle::new(table, ray)))
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let t = ternary();
        let u = HarmonicFunction::constant(t.clone(), 5.0);
        assert_eq!(laplacian(&t, &u, &VertexId::root()).unwrap(), 0.0);
        assert_eq!(u.evaluate(&v(&[0, 1])).unwrap(), 5.0);
    }

    #[test]
    fn laplacian_of_indicator() {
        let t = ternary();
        let o = VertexId::root();
        let ind = FnFunction(|x: &VertexId| Ok(if x.is_root() { 1.0 } else { 0.0 }));
        assert!((laplacian(&t, &ind, &o).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn martin_kernel_is_harmonic() {
        let t = ternary();
        let u = kernel_fn(&t, 12, vec![0; 12]);
        // Delta u(o) = (1/3)(2) + (1/3)(1/2) + (1/3)(1/2) - 1 = 0
        assert!(laplacian(&t, &u, &VertexId::root()).unwrap().abs() < 1e-12);
        for x in t.ball(6, 10_000).unwrap() {
            assert!(
                laplacian(&t, &u, &x).unwrap().abs() < 1e-10,
                "defect at {x}"
            );
        }
    }

    #[test]
    fn dirichlet_constant_boundary() {
        let t = ternary();
        let sol = DirichletSolution::solve(t.clone(), 4, |_| 5.0).unwrap();
        let u = HarmonicFunction::dirichlet(sol);
        for x in t.ball(4, 10_000).unwrap() {
            assert!((u.evaluate(&x).unwrap() - 5.0).abs() < 1e-9);
        }
        assert!(u.evaluate(&v(&[0; 5])).is_err());
    }

    #[test]
    fn dirichlet_is_harmonic_inside() {
        let t = ternary();
        let sol =
            DirichletSolution::solve(t.clone(), 5, |x| x.word().iter().sum::<u32>() as f64).unwrap();
        let u = HarmonicFunction::dirichlet(sol);
        for x in t.ball(4, 10_000).unwrap() {
            assert!(laplacian(&t, &u, &x).unwrap().abs() < 1e-8, "at {x}");
        }
    }

    #[test]
    fn evaluate_linearity() {
        let t = ternary();
        let table = PotentialTable::solve(t.clone(), 10, 1e-10).unwrap();
        let h1 = Arc::new(MartinKernelHandle::new(table.clone(), t.ray(vec![0; 10]).unwrap()));
        let h2 = Arc::new(MartinKernelHandle::new(table, t.ray(vec![1, 0, 0, 0, 0, 0, 0, 0, 0, 0]).unwrap()));
        let u1 = HarmonicFunction::kernel(h1.clone());
        let u2 = HarmonicFunction::kernel(h2.clone());
        let mix = HarmonicFunction::martin_combination(t.clone(), 0.25, vec![(2.0, h1), (-0.5, h2)]);
        for x in t.ball(4, 10_000).unwrap() {
            let lhs = mix.evaluate(&x).unwrap();
            let rhs = 0.25 + 2.0 * u1.evaluate(&x).unwrap() - 0.5 * u2.evaluate(&x).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_energy_matches_hand_rolled_loop() {
        let t = ternary();
        let ray = t.ray(vec![0; 8]).unwrap();
        // non-harmonic test function: distance to the root
        let f = FnFunction(|x: &VertexId| Ok(x.depth() as f64));
        let sums = radial_energy(&t, &f, &ray, 6).unwrap();
        let mut acc = 0.0;
        for (k, s) in sums.iter().enumerate() {
            acc += energy_density(&t, &f, &ray.vertex(k)).unwrap();
            assert!((s - acc).abs() < 1e-12);
        }
        // depth 0: a single term
        let first = radial_energy(&t, &f, &ray, 0).unwrap();
        assert_eq!(first.len(), 1);
        assert!((first[0] - energy_density(&t, &f, &VertexId::root()).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn nt_energy_c0_equals_radial_and_grows_with_c() {
        let t = ternary();
        let ray = t.ray(vec![0; 8]).unwrap();
        let f = FnFunction(|x: &VertexId| Ok((x.depth() as f64).sqrt()));
        let radial = radial_energy(&t, &f, &ray, 6).unwrap();
        let nt0 = nt_energy(&t, &f, &ray, 0, 6).unwrap();
        for (a, b) in radial.iter().zip(nt0.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let nt1 = nt_energy(&t, &f, &ray, 1, 6).unwrap();
        let nt2 = nt_energy(&t, &f, &ray, 2, 6).unwrap();
        assert!(nt1.last().unwrap() >= nt0.last().unwrap());
        assert!(nt2.last().unwrap() >= nt1.last().unwrap());
        // brute-force ball-scan oracle
        let mut brute = 0.0;
        for y in t.ball(6, 100_000).unwrap() {
            if t.tube_contains(&ray, 1, &y) {
                brute += energy_density(&t, &f, &y).unwrap();
            }
        }
        assert!((brute - nt1.last().unwrap()).abs() < 1e-10);
    }

    #[test]
    fn stochastic_energy_and_martingale_basics() {
        let t = ternary();
        let u = HarmonicFunction::constant(t.clone(), 3.0);
        let mut rng = RngPlan::new(9).stream(0);
        let path = simulate(&t, &VertexId::root(), 50, &mut rng, 0).unwrap();
        let sums = stochastic_energy(&t, &u, &path).unwrap();
        assert!(sums.iter().all(|s| s.abs() < 1e-12));
        let m = martingale_track(&t, &u, &path).unwrap();
        assert!(m.iter().all(|v| (v - 9.0).abs() < 1e-12));
        // hand-rolled loop on a non-constant function
        let f = FnFunction(|x: &VertexId| Ok(x.depth() as f64));
        let sums = stochastic_energy(&t, &f, &path).unwrap();
        let mut acc = 0.0;
        for (k, s) in sums.iter().enumerate() {
            acc += energy_density(&t, &f, &path.steps[k]).unwrap();
            assert!((s - acc).abs() < 1e-12);
        }
        // M_0 = u^2(X_0)
        let m = martingale_track(&t, &f, &path).unwrap();
        assert!((m[0] - (path.steps[0].depth() as f64).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn nt_sup_growth_of_kernel_on_own_ray() {
        let t = ternary();
        let u = kernel_fn(&t, 10, vec![0; 10]);
        let ray = t.ray(vec![0; 10]).unwrap();
        let sup = nt_sup(&t, &u, &ray, 0, 8).unwrap();
        assert!((sup - 256.0).abs() < 1e-6, "2^8 growth, got {sup}");
        let sup5 = nt_sup(&t, &u, &ray, 0, 5).unwrap();
        assert!(sup5 <= sup);
    }

    #[test]
    fn classify_constant_all_positive() {
        let t = ternary();
        let u = HarmonicFunction::constant(t.clone(), 2.0);
        let ray = t.ray(vec![0; 16]).unwrap();
        let d = classify_tube(&t, &u, &ray, 1, 6, &ClassifyThresholds::default()).unwrap();
        assert_eq!(d.converging, Flag::Positive);
        assert_eq!(d.bounded, Flag::Positive);
        assert_eq!(d.energy_finite, Flag::Positive);
    }

    #[test]
    fn classify_kernel_on_own_ray_negative() {
        let t = ternary();
        let u = kernel_fn(&t, 14, vec![0; 14]);
        let ray = t.ray(vec![0; 14]).unwrap();
        let d = classify_tube(&t, &u, &ray, 0, 6, &ClassifyThresholds::default()).unwrap();
        assert_eq!(d.bounded, Flag::Negative, "sup doubles per level");
        assert_eq!(d.converging, Flag::Negative);
    }

    #[test]
    fn classify_kernel_off_ray_positive() {
        let t = ternary();
        // theta_0 through child 0, diagnose along a ray splitting at level 1
        let u = kernel_fn(&t, 26, vec![0; 26]);
        let mut other = vec![1u32];
        other.extend(std::iter::repeat(0).take(25));
        let ray = t.ray(other).unwrap();
        let d = classify_tube(&t, &u, &ray, 1, 12, &ClassifyThresholds::default()).unwrap();
        assert_eq!(d.converging, Flag::Positive, "{d:?}");
        assert_eq!(d.bounded, Flag::Positive);
        assert_eq!(d.energy_finite, Flag::Positive);
    }

    #[test]
    fn classify_indeterminate_when_too_shallow() {
        let t = ternary();
        let u = kernel_fn(&t, 6, vec![0; 6]);
        let ray = t.ray(vec![0; 6]).unwrap();
        // 2d = 12 exceeds the certified depth 6
        let d = classify_tube(&t, &u, &ray, 0, 6, &ClassifyThresholds::default()).unwrap();
        assert_eq!(d.converging, Flag::Indeterminate);
    }
}
