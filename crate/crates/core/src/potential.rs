//! Certified computation of hitting probabilities, Green functions and
//! Martin kernels via a monotone bracketing fixed point on directed edges.
//!
//! Every directed neighbor edge `(x, y)` carries the probability
//! `F(x -> y)` that the walk started at `x` ever hits `y`. On a tree these
//! satisfy
//!
//! ```text
//! F(x -> y) = p(x, y) / (1 - sum_{z ~ x, z != y} p(x, z) F(z -> x))
//! ```
//!
//! and every other quantity reduces to them: `H(x, y)` is the product of the
//! edge values along the geodesic, `G(y, y) = 1 / (1 - U(y))` with the return
//! probability `U(y) = sum_z p(y, z) F(z -> y)`, and `G(x, y) = H(x, y) G(y, y)`.
//!
//! The dependency graph of these equations is acyclic once oriented by the
//! tree, so the truncated system is solved exactly by two ordered passes
//! (up-edges from the truncation boundary inward, then down-edges from the
//! root outward) instead of unordered sweeps. Truncated edges are frozen at
//! the pair `[0, rho]`, `rho = (1/2 - eta)/(1/2 + eta)`: the distance to any
//! target decreases with probability at most `1/2 - eta` per step, so the
//! gambler's-ruin bound caps every edge value by `rho`. Solving once from the
//! `0` side and once from the `rho` side brackets the true minimal fixed
//! point.
//!
//! The upper solution doubles as the table's point estimate: it satisfies
//! the edge equations exactly wherever the truncation is not in play, which
//! makes the derived Martin kernels harmonic to rounding accuracy and the
//! h-transform stochastic to rounding accuracy.

use std::sync::Arc;

use dashmap::DashMap;

use crate::bracket::Bracket;
use crate::error::{Error, Result};
use crate::tree::{BoundaryRay, TreeModel, VertexId};

/// Hard cap on the work (and, via memoization, memory) of a single lazy
/// edge solve: the local dependency cone holds at most `2^WORK_BUDGET_LOG2`
/// edges.
const WORK_BUDGET_LOG2: f64 = 24.0;

fn local_depth_cap(tol: f64, rho: f64, max_branching: u32) -> usize {
    let by_tol = if tol >= 1.0 {
        1.0
    } else {
        (tol.ln() / rho.ln()).ceil()
    };
    let by_work = if max_branching <= 1 {
        f64::INFINITY
    } else {
        (WORK_BUDGET_LOG2 * 2f64.ln() / (max_branching as f64).ln()).floor()
    };
    by_tol.min(by_work).max(1.0) as usize
}

/// Certified brackets for all directed-edge hitting probabilities within the
/// depth-`depth` ball, resolved lazily per queried edge.
pub struct PotentialTable {
    tree: Arc<TreeModel>,
    depth: usize,
    tol: f64,
    rho: f64,
    /// Cap on the subtree depth of a single edge solve.
    r_cap: usize,
    /// `F(x -> parent(x))`, keyed by `x` and the local truncation depth it
    /// was solved at (interior queries reuse shallower intermediate values).
    up: DashMap<(VertexId, usize), Bracket>,
    /// `F(parent(x) -> x)`, keyed by `x`.
    down: DashMap<VertexId, Bracket>,
    /// For homogeneous uniform trees all depth-`r` truncated subtrees are
    /// isomorphic; `lut[r]` is the shared up-edge bracket.
    uniform_lut: Option<Vec<Bracket>>,
}

impl PotentialTable {
    /// Solves the bracketing fixed point for the depth-`depth` ball.
    pub fn solve(tree: Arc<TreeModel>, depth: usize, tol: f64) -> Result<Arc<Self>> {
        if depth == 0 {
            return Err(Error::Config("solve depth must be >= 1".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::Config("tol must be > 0".into()));
        }
        let spec = tree.spec().clone();
        let rho = spec.rho();
        let max_branching = match spec.kind {
            crate::tree::TreeKind::Homogeneous => spec.degree.unwrap() - 1,
            crate::tree::TreeKind::SeededRandom => spec.d_max.unwrap() - 1,
        };
        let r_cap = local_depth_cap(tol, rho, max_branching);
        let uniform_lut = if tree.is_uniform_homogeneous() {
            let d = spec.degree.unwrap() as f64;
            let p = 1.0 / d;
            let n = (depth + 1).min(r_cap);
            let mut lut = vec![Bracket::new(0.0, rho)];
            for r in 1..=n {
                let prev = lut[r - 1];
                lut.push(Bracket::new(
                    p / (1.0 - (d - 1.0) * p * prev.lo),
                    p / (1.0 - (d - 1.0) * p * prev.hi),
                ));
            }
            Some(lut)
        } else {
            None
        };
        Ok(Arc::new(PotentialTable {
            tree,
            depth,
            tol,
            rho,
            r_cap,
            up: DashMap::new(),
            down: DashMap::new(),
            uniform_lut,
        }))
    }

    pub fn tree(&self) -> &Arc<TreeModel> {
        &self.tree
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn frozen(&self) -> Bracket {
        Bracket::new(0.0, self.rho)
    }

    /// Remaining certified subtree depth below a vertex at `vdepth`.
    fn local_depth(&self, vdepth: usize) -> usize {
        if vdepth > self.depth {
            0
        } else {
            (self.depth - vdepth + 1).min(self.r_cap)
        }
    }

    fn check_in_ball(&self, x: &VertexId) -> Result<()> {
        if x.depth() > self.depth {
            return Err(Error::OutOfRange {
                word: x.to_string(),
                depth: x.depth(),
                max_depth: self.depth,
            });
        }
        Ok(())
    }

    fn f_up_transient(&self, x: &VertexId, r: usize) -> Bracket {
        if r == 0 {
            return self.frozen();
        }
        if let Some(lut) = &self.uniform_lut {
            return lut[r.min(lut.len() - 1)];
        }
        if let Some(b) = self.up.get(&(x.clone(), r)) {
            return *b;
        }
        let rec = self.tree.record_unchecked(x);
        let mut s_lo = 0.0;
        let mut s_hi = 0.0;
        for (i, &p) in rec.p_children.iter().enumerate() {
            let f = self.f_up_transient(&x.child(i as u32), r - 1);
            s_lo += p * f.lo;
            s_hi += p * f.hi;
        }
        let b = Bracket::new(rec.p_parent / (1.0 - s_lo), rec.p_parent / (1.0 - s_hi));
        *self.up.entry((x.clone(), r)).or_insert(b)
    }

    /// Bracket for the up edge `F(x -> parent(x))`; `x` must not be the root.
    /// Outside the ball the frozen pair `[0, rho]` is returned.
    pub fn f_up(&self, x: &VertexId) -> Bracket {
        debug_assert!(!x.is_root(), "no up edge at the root");
        let r = self.local_depth(x.depth());
        if r == 0 {
            return self.frozen();
        }
        if let Some(lut) = &self.uniform_lut {
            return lut[r.min(lut.len() - 1)];
        }
        self.f_up_transient(x, r)
    }

    /// Bracket for the down edge `F(parent(x) -> x)`; `x` must not be the
    /// root and must lie in the ball.
    pub fn f_down(&self, x: &VertexId) -> Result<Bracket> {
        debug_assert!(!x.is_root(), "no down edge into the root");
        self.check_in_ball(x)?;
        if let Some(b) = self.down.get(x) {
            return Ok(*b);
        }
        // Resolve ancestors root-down; each level only needs the level above.
        for k in 1..=x.depth() {
            let v = x.prefix(k);
            if self.down.contains_key(&v) {
                continue;
            }
            let u = x.prefix(k - 1);
            let urec = self.tree.record_unchecked(&u);
            let vi = v.last_index().unwrap() as usize;
            let mut s_lo = 0.0;
            let mut s_hi = 0.0;
            if k >= 2 {
                let fd = *self.down.get(&u).expect("ancestor resolved");
                s_lo += urec.p_parent * fd.lo;
                s_hi += urec.p_parent * fd.hi;
            }
            for (i, &p) in urec.p_children.iter().enumerate() {
                if i == vi {
                    continue;
                }
                let f = self.f_up(&u.child(i as u32));
                s_lo += p * f.lo;
                s_hi += p * f.hi;
            }
            let p = urec.p_children[vi];
            let b = Bracket::new(p / (1.0 - s_lo), p / (1.0 - s_hi));
            self.down.entry(v).or_insert(b);
        }
        Ok(*self.down.get(x).unwrap())
    }

    /// Hitting probability `H(x, y)`: product of the directed-edge brackets
    /// along the geodesic. `H(x, x) = 1`.
    pub fn hitting(&self, x: &VertexId, y: &VertexId) -> Result<Bracket> {
        self.tree.record(x)?;
        self.tree.record(y)?;
        self.check_in_ball(x)?;
        self.check_in_ball(y)?;
        let l = x.common_prefix_len(y);
        let mut b = Bracket::exact(1.0);
        for k in ((l + 1)..=x.depth()).rev() {
            b = b.mul(&self.f_up(&x.prefix(k)));
        }
        for k in (l + 1)..=y.depth() {
            b = b.mul(&self.f_down(&y.prefix(k))?);
        }
        Ok(b)
    }

    /// Point estimate of `H(x, y)` from the consistent upper solution.
    pub fn hitting_point(&self, x: &VertexId, y: &VertexId) -> Result<f64> {
        Ok(self.hitting(x, y)?.hi)
    }

    /// Return probability `U(y)`: one-step exit followed by a return.
    pub fn return_probability(&self, y: &VertexId) -> Result<Bracket> {
        self.tree.record(y)?;
        self.check_in_ball(y)?;
        let rec = self.tree.record_unchecked(y);
        let mut s_lo = 0.0;
        let mut s_hi = 0.0;
        if !y.is_root() {
            let fd = self.f_down(y)?;
            s_lo += rec.p_parent * fd.lo;
            s_hi += rec.p_parent * fd.hi;
        }
        for (i, &p) in rec.p_children.iter().enumerate() {
            let f = self.f_up(&y.child(i as u32));
            s_lo += p * f.lo;
            s_hi += p * f.hi;
        }
        Ok(Bracket::new(s_lo, s_hi))
    }

    /// Diagonal Green value `G(y, y) = 1 / (1 - U(y))`.
    pub fn green_diagonal(&self, y: &VertexId) -> Result<Bracket> {
        let u = self.return_probability(y)?;
        if u.hi >= 1.0 {
            return Err(Error::BracketInsufficient(format!(
                "return probability upper bound {} >= 1 at {y}; increase depth",
                u.hi
            )));
        }
        Ok(u.geometric_sum())
    }

    /// `G(x, y) = H(x, y) G(y, y)`.
    pub fn green(&self, x: &VertexId, y: &VertexId) -> Result<Bracket> {
        Ok(self.hitting(x, y)?.mul(&self.green_diagonal(y)?))
    }

    pub fn green_point(&self, x: &VertexId, y: &VertexId) -> Result<f64> {
        Ok(self.green(x, y)?.hi)
    }

    /// Directed-edge rows `(from, to, F_low, F_high)` for every edge with
    /// both endpoints within `depth` of the root (for export).
    pub fn edge_rows(&self, depth: usize, cap: usize) -> Result<Vec<(VertexId, VertexId, Bracket)>> {
        let depth = depth.min(self.depth);
        let mut rows = Vec::new();
        for x in self.tree.ball(depth, cap)? {
            if x.is_root() {
                continue;
            }
            let parent = x.parent().unwrap();
            rows.push((x.clone(), parent.clone(), self.f_up(&x)));
            rows.push((parent, x.clone(), self.f_down(&x)?));
        }
        Ok(rows)
    }
}

/// Martin kernel `K_theta` tied to a solved table and a boundary ray, with a
/// cache of conditioned one-step laws.
pub struct MartinKernelHandle {
    table: Arc<PotentialTable>,
    ray: BoundaryRay,
    cond_cache: DashMap<VertexId, Arc<ConditionedStep>>,
}

/// The h-transformed one-step law at a vertex.
#[derive(Clone, Debug)]
pub struct ConditionedStep {
    /// Neighbors with their renormalized probabilities.
    pub probs: Vec<(VertexId, f64)>,
    /// `|sum - 1|` before renormalization: the harmonicity defect of the
    /// kernel point estimate.
    pub defect: f64,
}

impl MartinKernelHandle {
    pub fn new(table: Arc<PotentialTable>, ray: BoundaryRay) -> Self {
        MartinKernelHandle {
            table,
            ray,
            cond_cache: DashMap::new(),
        }
    }

    pub fn table(&self) -> &Arc<PotentialTable> {
        &self.table
    }

    pub fn ray(&self) -> &BoundaryRay {
        &self.ray
    }

    pub fn tree(&self) -> &Arc<TreeModel> {
        self.table.tree()
    }

    /// `K_theta(y) = H(y, pi(y)) / H(o, pi(y))` as a bracket.
    pub fn martin_kernel(&self, y: &VertexId) -> Result<Bracket> {
        let pi = self.table.tree().project(&self.ray, y)?;
        let num = self.table.hitting(y, &pi)?;
        let den = self.table.hitting(&VertexId::root(), &pi)?;
        Ok(num.div(&den))
    }

    /// Point estimate of `K_theta(y)` from the consistent upper solution.
    pub fn martin_kernel_point(&self, y: &VertexId) -> Result<f64> {
        let pi = self.table.tree().project(&self.ray, y)?;
        let num = self.table.hitting_point(y, &pi)?;
        let den = self.table.hitting_point(&VertexId::root(), &pi)?;
        Ok(num / den)
    }

    /// The h-transformed one-step law `p^theta(x, .)`; requires `x` and all
    /// its neighbors inside the certified ball.
    pub fn conditioned_kernel(&self, x: &VertexId) -> Result<Arc<ConditionedStep>> {
        if let Some(c) = self.cond_cache.get(x) {
            return Ok(c.clone());
        }
        let tree = self.table.tree();
        tree.record(x)?;
        if x.depth() + 1 > self.table.depth() {
            return Err(Error::OutOfRange {
                word: x.to_string(),
                depth: x.depth() + 1,
                max_depth: self.table.depth(),
            });
        }
        let rec = tree.record_unchecked(x);
        let m = tree.projection_level(&self.ray, x);
        let on_ray = x.depth() == m;
        let mut raw: Vec<(VertexId, f64)> = Vec::with_capacity(rec.degree as usize);
        if let Some(parent) = x.parent() {
            // Toward the root: on the ray the kernel shrinks by the down-edge
            // value; off the ray the parent is one step toward the
            // projection, so the kernel grows by 1/F(x -> parent).
            let ratio = if on_ray {
                self.table.f_down(x)?.hi
            } else {
                1.0 / self.table.f_up(x).hi
            };
            raw.push((parent, rec.p_parent * ratio));
        }
        for (i, &p) in rec.p_children.iter().enumerate() {
            let child = x.child(i as u32);
            let ratio = if on_ray && i as u32 == self.ray.index(m) {
                1.0 / self.table.f_down(&child)?.hi
            } else {
                self.table.f_up(&child).hi
            };
            raw.push((child, p * ratio));
        }
        let sum: f64 = raw.iter().map(|(_, p)| p).sum();
        let defect = (sum - 1.0).abs();
        let probs = raw
            .into_iter()
            .map(|(v, p)| (v, p / sum))
            .collect::<Vec<_>>();
        let step = Arc::new(ConditionedStep { probs, defect });
        Ok(self
            .cond_cache
            .entry(x.clone())
            .or_insert(step)
            .clone())
    }

    /// `G(o, y) K_theta(y)` computed directly and via the identity
    /// `H(y, pi(y)) H(pi(y), y) G(y, y)`, with the uniformity lower bound
    /// `3 eps^2 * eps^(2 d(y, pi(y)))`.
    pub fn lower_bound_product(&self, y: &VertexId) -> Result<LowerBoundCheck> {
        let tree = self.table.tree();
        let o = VertexId::root();
        let pi = tree.project(&self.ray, y)?;
        let direct = self.table.green_point(&o, y)? * self.martin_kernel_point(y)?;
        let via_identity = self.table.hitting_point(y, &pi)?
            * self.table.hitting_point(&pi, y)?
            * self.table.green_diagonal(y)?.hi;
        let eps = tree.spec().epsilon;
        let k = tree.tube_distance(&self.ray, y);
        let bound = 3.0 * eps.powi(2) * eps.powi(2 * k as i32);
        Ok(LowerBoundCheck {
            direct,
            via_identity,
            bound,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LowerBoundCheck {
    pub direct: f64,
    pub via_identity: f64,
    pub bound: f64,
}

/// Green function of an explicit finite vertex set: `G_U(x, y)` is the
/// expected number of visits to `y` before exiting `U`, starting from `x`.
///
/// Solved by Neumann iteration `g <- e_y + P_U g`; the restriction is
/// strictly substochastic so the series is geometric.
pub fn green_restricted(
    tree: &TreeModel,
    set: &[VertexId],
    x: &VertexId,
    y: &VertexId,
) -> Result<f64> {
    const SIZE_CAP: usize = 5000;
    const ITER_CAP: usize = 1_000_000;
    const TOL: f64 = 1e-13;
    if set.len() > SIZE_CAP {
        return Err(Error::Resource(format!(
            "restricted Green set of {} vertices exceeds cap {SIZE_CAP}",
            set.len()
        )));
    }
    let index: std::collections::HashMap<&VertexId, usize> =
        set.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let ix = *index.get(x).ok_or_else(|| Error::Config(format!("{x} not in U")))?;
    let iy = *index.get(y).ok_or_else(|| Error::Config(format!("{y} not in U")))?;
    // Row-compressed restricted kernel.
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(set.len());
    for v in set {
        let nbrs = tree.neighbors(v)?;
        rows.push(
            nbrs.into_iter()
                .filter_map(|(w, p)| index.get(&w).map(|&j| (j, p)))
                .collect(),
        );
    }
    let mut g = vec![0.0f64; set.len()];
    for it in 0..ITER_CAP {
        let mut next = vec![0.0f64; set.len()];
        next[iy] = 1.0;
        for (i, row) in rows.iter().enumerate() {
            let mut acc = next[i];
            for &(j, p) in row {
                acc += p * g[j];
            }
            next[i] = acc;
        }
        let delta = g
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        g = next;
        if delta < TOL {
            return Ok(g[ix]);
        }
        if it == ITER_CAP - 1 {
            break;
        }
    }
    Err(Error::Solver(format!(
        "restricted Green iteration did not reach {TOL} within {ITER_CAP} sweeps"
    )))
}

/// Bracketing fixed point with the walk killed on exiting a non-tangential
/// tube: yields `G_U(o, y)` for `U = Gamma_c^theta`.
pub struct TubePotential {
    tree: Arc<TreeModel>,
    ray: BoundaryRay,
    c: usize,
    depth: usize,
    rho: f64,
    r_cap: usize,
    up: DashMap<VertexId, Bracket>,
    down: DashMap<VertexId, Bracket>,
}

impl TubePotential {
    pub fn solve(
        tree: Arc<TreeModel>,
        ray: BoundaryRay,
        c: usize,
        depth: usize,
        tol: f64,
    ) -> Result<Arc<Self>> {
        if depth == 0 {
            return Err(Error::Config("solve depth must be >= 1".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::Config("tol must be > 0".into()));
        }
        let rho = tree.spec().rho();
        // Off-ray branching inside the tube is cut at distance c, so the
        // dependency cone of an edge is linear in depth; the tol-implied cap
        // still bounds the ray-direction recursion.
        let r_cap = if tol >= 1.0 {
            1
        } else {
            ((tol.ln() / rho.ln()).ceil() as usize).max(1)
        };
        Ok(Arc::new(TubePotential {
            tree,
            ray,
            c,
            depth,
            rho,
            r_cap,
            up: DashMap::new(),
            down: DashMap::new(),
        }))
    }

    fn frozen(&self) -> Bracket {
        Bracket::new(0.0, self.rho)
    }

    fn local_depth(&self, vdepth: usize) -> usize {
        if vdepth > self.depth {
            0
        } else {
            (self.depth - vdepth + 1).min(self.r_cap)
        }
    }

    fn in_tube(&self, v: &VertexId) -> bool {
        self.tree.tube_distance(&self.ray, v) <= self.c
    }

    /// `F_U(x -> parent(x))`: hit the parent before leaving the tube.
    fn f_up(&self, x: &VertexId) -> Bracket {
        let r = self.local_depth(x.depth());
        if r == 0 {
            return self.frozen();
        }
        if let Some(b) = self.up.get(x) {
            return *b;
        }
        let rec = self.tree.record_unchecked(x);
        let mut s_lo = 0.0;
        let mut s_hi = 0.0;
        for (i, &p) in rec.p_children.iter().enumerate() {
            let child = x.child(i as u32);
            if !self.in_tube(&child) {
                continue; // stepping there kills the walk
            }
            let f = self.f_up(&child);
            s_lo += p * f.lo;
            s_hi += p * f.hi;
        }
        let b = Bracket::new(rec.p_parent / (1.0 - s_lo), rec.p_parent / (1.0 - s_hi));
        *self.up.entry(x.clone()).or_insert(b)
    }

    fn f_down(&self, x: &VertexId) -> Result<Bracket> {
        if x.depth() > self.depth {
            return Err(Error::OutOfRange {
                word: x.to_string(),
                depth: x.depth(),
                max_depth: self.depth,
            });
        }
        if let Some(b) = self.down.get(x) {
            return Ok(*b);
        }
        for k in 1..=x.depth() {
            let v = x.prefix(k);
            if self.down.contains_key(&v) {
                continue;
            }
            let u = x.prefix(k - 1);
            let urec = self.tree.record_unchecked(&u);
            let vi = v.last_index().unwrap() as usize;
            let mut s_lo = 0.0;
            let mut s_hi = 0.0;
            if k >= 2 {
                let fd = *self.down.get(&u).expect("ancestor resolved");
                s_lo += urec.p_parent * fd.lo;
                s_hi += urec.p_parent * fd.hi;
            }
            for (i, &p) in urec.p_children.iter().enumerate() {
                if i == vi {
                    continue;
                }
                let sib = u.child(i as u32);
                if !self.in_tube(&sib) {
                    continue;
                }
                let f = self.f_up(&sib);
                s_lo += p * f.lo;
                s_hi += p * f.hi;
            }
            let p = urec.p_children[vi];
            let b = Bracket::new(p / (1.0 - s_lo), p / (1.0 - s_hi));
            self.down.entry(v).or_insert(b);
        }
        Ok(*self.down.get(x).unwrap())
    }

    /// `G_U(o, y)` bracket for a tube vertex `y` within the solve depth.
    pub fn green_from_root(&self, y: &VertexId) -> Result<Bracket> {
        self.tree.record(y)?;
        if !self.in_tube(y) {
            return Err(Error::Config(format!("{y} not in the c={} tube", self.c)));
        }
        // Geodesic from o to y runs along the ray to pi(y), then down into
        // the branch; every intermediate vertex stays in the tube.
        let mut h = Bracket::exact(1.0);
        for k in 1..=y.depth() {
            h = h.mul(&self.f_down(&y.prefix(k))?);
        }
        // Diagonal within the tube.
        let rec = self.tree.record_unchecked(y);
        let mut s_lo = 0.0;
        let mut s_hi = 0.0;
        if !y.is_root() {
            let fd = self.f_down(y)?;
            s_lo += rec.p_parent * fd.lo;
            s_hi += rec.p_parent * fd.hi;
        }
        for (i, &p) in rec.p_children.iter().enumerate() {
            let child = y.child(i as u32);
            if !self.in_tube(&child) {
                continue;
            }
            let f = self.f_up(&child);
            s_lo += p * f.lo;
            s_hi += p * f.hi;
        }
        let diag = Bracket::new(s_lo, s_hi).geometric_sum();
        Ok(h.mul(&diag))
    }
}
