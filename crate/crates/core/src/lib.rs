//! Certified discrete potential theory on infinite trees.
//!
//! A nearest-neighbor random walk on a locally finite rooted tree is assumed
//! to satisfy the uniformity hypothesis: every transition probability lies in
//! `[epsilon, 1/2 - eta]` and every vertex has degree at least 3.  Under that
//! hypothesis the walk is transient and hitting probabilities contract
//! geometrically, which is what makes certified (two-sided) numerics possible
//! on a lazily explored infinite tree.
//!
//! Module map:
//! - [`tree`]: vertex addressing, lazy tree models, geodesics, rays,
//!   projections and tubes;
//! - [`bracket`]: two-sided enclosures;
//! - [`potential`]: directed-edge hitting probabilities, Green functions,
//!   Martin kernels, conditioned (Doob-transformed) kernels, restricted and
//!   tube Green functions;
//! - [`walk`]: plain and conditioned simulation, sphere-exit distributions,
//!   boundary sampling, deterministic parallel Monte Carlo;
//! - [`harmonic`]: harmonic functions, Laplacian, energies, the associated
//!   martingale and asymptotic-behavior diagnostics.

pub mod bracket;
pub mod error;
pub mod harmonic;
pub mod potential;
pub mod tree;
pub mod walk;

pub use bracket::Bracket;
pub use error::{Error, Result};
pub use harmonic::{
    classify_path, classify_tube, energy_density, laplacian, martingale_track, nt_energy, nt_sup,
    radial_energy, stochastic_energy, ClassifyThresholds, DirichletSolution, Flag, FnFunction,
    HarmonicFunction, TreeFunction, TubeDiagnostics,
};
pub use potential::{
    green_restricted, LowerBoundCheck, MartinKernelHandle, PotentialTable, TubePotential,
};
pub use tree::{BoundaryRay, KernelRule, TreeKind, TreeModel, TreeSpec, VertexId};
pub use walk::{
    monte_carlo, sample_boundary, simulate, simulate_conditioned, sphere_exit_distribution, McStat,
    RngPlan, Termination, WalkPath,
};
