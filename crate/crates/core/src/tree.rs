//! Lazily generated rooted trees with vertex addressing, geodesics,
//! boundary rays, projections and non-tangential tubes.
//!
//! A vertex is addressed by its word: the sequence of child indices on the
//! geodesic from the root. The tree and its transition kernel are pure
//! functions of `(TreeSpec, word)`, so nothing is ever stored beyond a
//! read-through cache.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use dashmap::DashMap;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vertex of the tree, identified by its child-index word from the root.
/// The empty word is the root `o`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId {
    word: Vec<u32>,
}

impl VertexId {
    pub fn root() -> Self {
        VertexId { word: Vec::new() }
    }

    pub fn from_word(word: Vec<u32>) -> Self {
        VertexId { word }
    }

    pub fn word(&self) -> &[u32] {
        &self.word
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }

    pub fn is_root(&self) -> bool {
        self.word.is_empty()
    }

    pub fn parent(&self) -> Option<VertexId> {
        if self.word.is_empty() {
            None
        } else {
            Some(VertexId {
                word: self.word[..self.word.len() - 1].to_vec(),
            })
        }
    }

    pub fn child(&self, index: u32) -> VertexId {
        let mut word = self.word.clone();
        word.push(index);
        VertexId { word }
    }

    /// Last child index, i.e. which child of its parent this vertex is.
    pub fn last_index(&self) -> Option<u32> {
        self.word.last().copied()
    }

    pub fn is_prefix_of(&self, other: &VertexId) -> bool {
        other.word.len() >= self.word.len() && other.word[..self.word.len()] == self.word[..]
    }

    pub fn common_prefix_len(&self, other: &VertexId) -> usize {
        self.word
            .iter()
            .zip(other.word.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    pub fn prefix(&self, len: usize) -> VertexId {
        VertexId {
            word: self.word[..len].to_vec(),
        }
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return write!(f, "/");
        }
        for i in &self.word {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for VertexId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "/" {
            return Ok(VertexId::root());
        }
        let s = s.strip_prefix('/').ok_or_else(|| Error::InvalidAddress {
            word: s.to_string(),
            reason: "vertex words start with '/'".into(),
        })?;
        let word = s
            .split('/')
            .map(|p| {
                p.parse::<u32>().map_err(|_| Error::InvalidAddress {
                    word: format!("/{s}"),
                    reason: format!("bad child index {p:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(VertexId { word })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeKind {
    Homogeneous,
    SeededRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelRule {
    Uniform,
    SeededRandom,
}

/// Deterministic description of a tree and its transition kernel.
///
/// Every generated probability satisfies `epsilon <= p(x,y) <= 1/2 - eta`
/// with `sum_y p(x,y) = 1`, and every degree is at least 3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub kind: TreeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_min: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max: Option<u32>,
    pub kernel: KernelRule,
    pub epsilon: f64,
    pub eta: f64,
    #[serde(default)]
    pub seed: u64,
}

impl TreeSpec {
    /// Homogeneous degree-`d` tree with the uniform kernel `p = 1/d`.
    pub fn homogeneous_uniform(d: u32, epsilon: f64, eta: f64) -> Self {
        TreeSpec {
            kind: TreeKind::Homogeneous,
            degree: Some(d),
            d_min: None,
            d_max: None,
            kernel: KernelRule::Uniform,
            epsilon,
            eta,
            seed: 0,
        }
    }

    /// The homogeneous 3-regular tree with `p = 1/3` everywhere.
    ///
    /// `epsilon = 1/3` and `eta = 1/6` are the tightest admissible
    /// uniformity constants, giving the escape bound `rho = 1/2`.
    pub fn ternary_uniform() -> Self {
        Self::homogeneous_uniform(3, 1.0 / 3.0, 1.0 / 6.0)
    }

    pub fn seeded_random(d_min: u32, d_max: u32, epsilon: f64, eta: f64, seed: u64) -> Self {
        TreeSpec {
            kind: TreeKind::SeededRandom,
            degree: None,
            d_min: Some(d_min),
            d_max: Some(d_max),
            kernel: KernelRule::SeededRandom,
            epsilon,
            eta,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (eps, eta) = (self.epsilon, self.eta);
        if !(eps > 0.0) || !(eta > 0.0) {
            return Err(Error::Config("epsilon and eta must be positive".into()));
        }
        let hi = 0.5 - eta;
        if eps > hi {
            return Err(Error::Config(format!(
                "empty probability band: epsilon={eps} > 1/2 - eta={hi}"
            )));
        }
        let (dmin, dmax) = self.degree_bounds()?;
        if dmin < 3 {
            return Err(Error::Config(format!(
                "degrees must be >= 3 (got minimum {dmin})"
            )));
        }
        // A stochastic vector with all entries in [eps, 1/2 - eta] must exist
        // for every admissible degree.
        if dmax as f64 * eps > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "infeasible: degree {dmax} * epsilon {eps} > 1"
            )));
        }
        if (dmin as f64) * hi < 1.0 - 1e-12 {
            return Err(Error::Config(format!(
                "infeasible: degree {dmin} * (1/2 - eta) {hi} < 1"
            )));
        }
        Ok(())
    }

    fn degree_bounds(&self) -> Result<(u32, u32)> {
        match self.kind {
            TreeKind::Homogeneous => {
                let d = self
                    .degree
                    .ok_or_else(|| Error::Config("homogeneous spec needs `degree`".into()))?;
                Ok((d, d))
            }
            TreeKind::SeededRandom => {
                let lo = self
                    .d_min
                    .ok_or_else(|| Error::Config("seeded-random spec needs `d_min`".into()))?;
                let hi = self
                    .d_max
                    .ok_or_else(|| Error::Config("seeded-random spec needs `d_max`".into()))?;
                if lo > hi {
                    return Err(Error::Config("d_min > d_max".into()));
                }
                Ok((lo, hi))
            }
        }
    }

    /// Escape bound `rho = (1/2 - eta) / (1/2 + eta) < 1`: the gambler's-ruin
    /// bound on any single-edge hitting probability under the uniformity
    /// hypothesis.
    pub fn rho(&self) -> f64 {
        (0.5 - self.eta) / (0.5 + self.eta)
    }
}

/// Per-vertex kernel record. Neighbor order is: parent edge first (absent at
/// the root), then children `0..n_children`.
#[derive(Clone, Debug)]
pub struct VertexRecord {
    pub degree: u32,
    /// `p(x, parent)`; 0.0 at the root (no parent edge).
    pub p_parent: f64,
    /// `p(x, child_i)` for `i` in `0..n_children`.
    pub p_children: Vec<f64>,
}

impl VertexRecord {
    pub fn n_children(&self) -> u32 {
        self.p_children.len() as u32
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Stable per-vertex hash of `(seed, word)`.
fn vertex_hash(seed: u64, word: &[u32]) -> u64 {
    let mut h = splitmix64(seed ^ 0x243f6a8885a308d3);
    for &i in word {
        h = splitmix64(h ^ ((i as u64).wrapping_add(0x9e3779b97f4a7c15)));
    }
    h
}

/// Projects `w` onto the box `[lo, hi]^n` intersected with the simplex
/// `sum = 1` by additive water-filling. Requires `n*lo <= 1 <= n*hi`.
fn project_box_simplex(w: &mut [f64], lo: f64, hi: f64) {
    for v in w.iter_mut() {
        *v = v.clamp(lo, hi);
    }
    for _ in 0..64 {
        let delta = 1.0 - w.iter().sum::<f64>();
        if delta.abs() < 1e-15 {
            break;
        }
        let movable: Vec<usize> = (0..w.len())
            .filter(|&i| {
                if delta > 0.0 {
                    w[i] < hi - 1e-18
                } else {
                    w[i] > lo + 1e-18
                }
            })
            .collect();
        if movable.is_empty() {
            break;
        }
        let step = delta / movable.len() as f64;
        for &i in &movable {
            w[i] = (w[i] + step).clamp(lo, hi);
        }
    }
}

/// Immutable lazily generated tree with its transition kernel.
///
/// The cache is read-through and idempotent: answers never depend on what has
/// been cached, and concurrent readers are safe.
pub struct TreeModel {
    spec: TreeSpec,
    cache: DashMap<VertexId, Arc<VertexRecord>>,
    uniform: bool,
    uniform_record: Option<Arc<VertexRecord>>,
}

impl TreeModel {
    pub fn new(spec: TreeSpec) -> Result<Arc<Self>> {
        spec.validate()?;
        let uniform =
            spec.kind == TreeKind::Homogeneous && spec.kernel == KernelRule::Uniform;
        let uniform_record = if uniform {
            let d = spec.degree.unwrap();
            let p = 1.0 / d as f64;
            if p < spec.epsilon - 1e-15 || p > 0.5 - spec.eta + 1e-15 {
                return Err(Error::Config(format!(
                    "uniform kernel 1/{d} outside [epsilon, 1/2 - eta]"
                )));
            }
            Some(Arc::new(VertexRecord {
                degree: d,
                p_parent: p,
                p_children: vec![p; (d - 1) as usize],
            }))
        } else {
            None
        };
        Ok(Arc::new(TreeModel {
            spec,
            cache: DashMap::new(),
            uniform,
            uniform_record,
        }))
    }

    pub fn spec(&self) -> &TreeSpec {
        &self.spec
    }

    /// True for homogeneous trees with the uniform kernel, where every
    /// subtree of equal truncation depth is isomorphic.
    pub fn is_uniform_homogeneous(&self) -> bool {
        self.uniform
    }

    fn generate_record(&self, x: &VertexId) -> Arc<VertexRecord> {
        if self.uniform && !x.is_root() {
            return self.uniform_record.as_ref().unwrap().clone();
        }
        let degree = match self.spec.kind {
            TreeKind::Homogeneous => self.spec.degree.unwrap(),
            TreeKind::SeededRandom => {
                let (lo, hi) = (self.spec.d_min.unwrap(), self.spec.d_max.unwrap());
                if lo == hi {
                    lo
                } else {
                    let h = vertex_hash(self.spec.seed, x.word());
                    lo + (h % (hi - lo + 1) as u64) as u32
                }
            }
        };
        let n_nbrs = degree as usize;
        let probs = match self.spec.kernel {
            KernelRule::Uniform => vec![1.0 / degree as f64; n_nbrs],
            KernelRule::SeededRandom => {
                let h = vertex_hash(self.spec.seed ^ 0x5851f42d4c957f2d, x.word());
                let mut rng = ChaCha8Rng::seed_from_u64(h);
                let lo = self.spec.epsilon;
                let hi = 0.5 - self.spec.eta;
                let mut w: Vec<f64> =
                    (0..n_nbrs).map(|_| rng.random_range(lo..hi)).collect();
                project_box_simplex(&mut w, lo, hi);
                w
            }
        };
        let (p_parent, p_children) = if x.is_root() {
            (0.0, probs)
        } else {
            (probs[0], probs[1..].to_vec())
        };
        Arc::new(VertexRecord {
            degree,
            p_parent,
            p_children,
        })
    }

    /// Kernel record of a vertex assumed valid (e.g. obtained from neighbor
    /// enumeration). Does not re-validate the ancestor chain.
    pub fn record_unchecked(&self, x: &VertexId) -> Arc<VertexRecord> {
        if self.uniform && !x.is_root() {
            return self.uniform_record.as_ref().unwrap().clone();
        }
        if let Some(r) = self.cache.get(x) {
            return r.clone();
        }
        let rec = self.generate_record(x);
        // Records are pure functions of the spec seed, so the cache is only
        // an optimization; stop growing it once long-range simulations have
        // roamed far enough to make it a memory hazard.
        const CACHE_CAP: usize = 1 << 20;
        if self.cache.len() < CACHE_CAP {
            self.cache.entry(x.clone()).or_insert(rec.clone());
        }
        rec
    }

    /// Validates the full word and returns the kernel record.
    pub fn record(&self, x: &VertexId) -> Result<Arc<VertexRecord>> {
        // Each prefix must be a valid vertex and each index within range.
        let mut prefix = VertexId::root();
        for &idx in x.word() {
            let rec = self.record_unchecked(&prefix);
            if idx >= rec.n_children() {
                return Err(Error::InvalidAddress {
                    word: x.to_string(),
                    reason: format!(
                        "child index {idx} out of range at {prefix} (has {} children)",
                        rec.n_children()
                    ),
                });
            }
            prefix = prefix.child(idx);
        }
        Ok(self.record_unchecked(x))
    }

    pub fn degree(&self, x: &VertexId) -> Result<u32> {
        Ok(self.record(x)?.degree)
    }

    /// All neighbors of `x` with their transition probabilities, parent edge
    /// first.
    pub fn neighbors(&self, x: &VertexId) -> Result<Vec<(VertexId, f64)>> {
        let rec = self.record(x)?;
        Ok(self.neighbors_from_record(x, &rec))
    }

    pub fn neighbors_from_record(
        &self,
        x: &VertexId,
        rec: &VertexRecord,
    ) -> Vec<(VertexId, f64)> {
        let mut out = Vec::with_capacity(rec.degree as usize);
        if let Some(p) = x.parent() {
            out.push((p, rec.p_parent));
        }
        for (i, &p) in rec.p_children.iter().enumerate() {
            out.push((x.child(i as u32), p));
        }
        out
    }

    /// `p(x, y)` for neighbors, 0 otherwise.
    pub fn transition(&self, x: &VertexId, y: &VertexId) -> Result<f64> {
        let rec = self.record(x)?;
        self.record(y)?;
        if y.parent().as_ref() == Some(x) {
            Ok(rec.p_children[y.last_index().unwrap() as usize])
        } else if x.parent().as_ref() == Some(y) {
            Ok(rec.p_parent)
        } else {
            Ok(0.0)
        }
    }

    pub fn distance(&self, x: &VertexId, y: &VertexId) -> usize {
        let l = x.common_prefix_len(y);
        x.depth() + y.depth() - 2 * l
    }

    /// The unique simple path from `x` to `y`, inclusive.
    pub fn geodesic(&self, x: &VertexId, y: &VertexId) -> Result<Vec<VertexId>> {
        self.record(x)?;
        self.record(y)?;
        let l = x.common_prefix_len(y);
        let mut path = Vec::with_capacity(x.depth() + y.depth() - 2 * l + 1);
        for k in (l..=x.depth()).rev() {
            path.push(x.prefix(k));
        }
        for k in (l + 1)..=y.depth() {
            path.push(y.prefix(k));
        }
        Ok(path)
    }

    /// Validates a ray prefix and wraps it.
    pub fn ray(&self, prefix: Vec<u32>) -> Result<BoundaryRay> {
        self.record(&VertexId::from_word(prefix.clone()))?;
        Ok(BoundaryRay { prefix })
    }

    /// Projection of `y` onto the ray: the deepest ray vertex that is an
    /// ancestor-or-self of `y`, which is the ray vertex closest to `y`.
    pub fn project(&self, ray: &BoundaryRay, y: &VertexId) -> Result<VertexId> {
        self.record(y)?;
        Ok(ray.vertex(self.projection_level(ray, y)))
    }

    /// Ray depth of the projection of `y` (no validation).
    pub fn projection_level(&self, ray: &BoundaryRay, y: &VertexId) -> usize {
        let mut m = 0;
        for (i, &w) in y.word().iter().enumerate() {
            if ray.index(i) == w {
                m = i + 1;
            } else {
                break;
            }
        }
        m
    }

    /// Distance from `y` to the ray, `d(y, gamma_theta)`.
    pub fn tube_distance(&self, ray: &BoundaryRay, y: &VertexId) -> usize {
        y.depth() - self.projection_level(ray, y)
    }

    pub fn tube_contains(&self, ray: &BoundaryRay, c: usize, y: &VertexId) -> bool {
        self.tube_distance(ray, y) <= c
    }

    /// All tube vertices `d(y, gamma_theta) <= c` within distance `depth` of
    /// the root, each exactly once.
    pub fn tube_enumerate(
        &self,
        ray: &BoundaryRay,
        c: usize,
        depth: usize,
    ) -> Result<Vec<VertexId>> {
        let mut out = Vec::new();
        for m in 0..=depth {
            let base = ray.vertex(m);
            self.record(&base)?;
            out.push(base.clone());
            if c == 0 || m == depth {
                continue;
            }
            // Off-ray descendants of gamma(m): first step avoids the ray
            // child so the projection stays at gamma(m).
            let avoid = ray.index(m);
            let mut stack: Vec<VertexId> = Vec::new();
            let rec = self.record_unchecked(&base);
            for i in 0..rec.n_children() {
                if i != avoid {
                    stack.push(base.child(i));
                }
            }
            while let Some(v) = stack.pop() {
                if v.depth() <= depth && v.depth() - m <= c {
                    if v.depth() - m < c && v.depth() < depth {
                        let rec = self.record_unchecked(&v);
                        for i in 0..rec.n_children() {
                            stack.push(v.child(i));
                        }
                    }
                    out.push(v);
                }
            }
        }
        Ok(out)
    }

    /// Enumerates the closed ball `d(o, x) <= radius`.
    pub fn ball(&self, radius: usize, cap: usize) -> Result<Vec<VertexId>> {
        let mut out = vec![VertexId::root()];
        let mut frontier = vec![VertexId::root()];
        for _ in 0..radius {
            let mut next = Vec::new();
            for v in &frontier {
                let rec = self.record_unchecked(v);
                for i in 0..rec.n_children() {
                    next.push(v.child(i));
                }
            }
            out.extend(next.iter().cloned());
            if out.len() > cap {
                return Err(Error::Resource(format!(
                    "ball of radius {radius} exceeds cap {cap}"
                )));
            }
            frontier = next;
        }
        Ok(out)
    }
}

/// A boundary point, represented by its geodesic ray from the root.
///
/// Beyond the recorded prefix the ray extends by always taking child index 0
/// (a fixed total rule; every vertex has at least two children).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryRay {
    prefix: Vec<u32>,
}

impl BoundaryRay {
    pub fn from_prefix(prefix: Vec<u32>) -> Self {
        BoundaryRay { prefix }
    }

    pub fn recorded_prefix(&self) -> &[u32] {
        &self.prefix
    }

    pub fn recorded_depth(&self) -> usize {
        self.prefix.len()
    }

    /// Child index taken at ray depth `i`.
    pub fn index(&self, i: usize) -> u32 {
        self.prefix.get(i).copied().unwrap_or(0)
    }

    /// The ray vertex `gamma_theta(k)`.
    pub fn vertex(&self, k: usize) -> VertexId {
        let mut word = Vec::with_capacity(k);
        for i in 0..k {
            word.push(self.index(i));
        }
        VertexId::from_word(word)
    }

    /// Whether `x` lies on the ray.
    pub fn contains(&self, x: &VertexId) -> bool {
        x.word()
            .iter()
            .enumerate()
            .all(|(i, &w)| self.index(i) == w)
    }
}
