//! Experiment configuration. Together with the build, a config fully
//! determines every output byte.

use std::path::Path;

use serde::{Deserialize, Serialize};

use arbor_core::tree::TreeSpec;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub tree: TreeSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Check names to run; `null` means all, `[]` means none.
    #[serde(default)]
    pub selection: Option<Vec<String>>,
    #[serde(default)]
    pub fatou: FatouConfig,
    #[serde(default)]
    pub lemmas: LemmaConfig,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub depth: usize,
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            depth: 13,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_paths: u64,
    pub horizon: usize,
    pub seed: u64,
    /// Certified-ball depth used for conditioned simulation; conditioned
    /// paths are truncated when they reach it.
    pub ball_depth: usize,
    /// Conditioned runs follow the ray `0^ball_depth` unless a ray is given.
    #[serde(default)]
    pub ray: Option<Vec<u32>>,
    /// `plain` or `conditioned`; only used by the `simulate` subcommand.
    #[serde(default = "default_walk_kind")]
    pub kind: String,
}

fn default_walk_kind() -> String {
    "plain".to_string()
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_paths: 100_000,
            horizon: 400,
            seed: 42,
            ball_depth: 12,
            ray: None,
            kind: default_walk_kind(),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Statistical gate in standard errors.
    pub sigma: f64,
    /// Exact-identity gate for residuals.
    pub identity_tol: f64,
    /// Required flag-agreement fraction in the Fatou suite.
    pub agreement: f64,
    pub delta_conv: f64,
    pub delta_bound: f64,
    pub delta_energy: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            sigma: 3.0,
            identity_tol: 1e-9,
            agreement: 0.95,
            delta_conv: 1e-3,
            delta_bound: 0.05,
            delta_energy: 1e-4,
        }
    }
}

impl Thresholds {
    pub fn classify(&self) -> arbor_core::harmonic::ClassifyThresholds {
        arbor_core::harmonic::ClassifyThresholds {
            delta_conv: self.delta_conv,
            delta_bound: self.delta_bound,
            delta_energy: self.delta_energy,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FatouConfig {
    pub n_rays: u64,
    /// Sampled ray prefix depth.
    pub ray_depth: usize,
    /// Tube width for the non-tangential flags.
    pub tube_c: usize,
    /// Two-scale diagnostic depth (tube flags compare depth d with 2d).
    pub diag_depth: usize,
}

impl Default for FatouConfig {
    fn default() -> Self {
        FatouConfig {
            n_rays: 500,
            ray_depth: 16,
            tube_c: 1,
            diag_depth: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    /// Radius of the ball Gamma in the Lemma 2 occupation identity.
    pub gamma_radius: usize,
    /// Tube depth scanned in the Lemma 3 bound.
    pub tube_depth: usize,
    /// Ray index n of gamma_theta(n) in the Lemma 4 ratio.
    pub ratio_level: usize,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        LemmaConfig {
            gamma_radius: 4,
            tube_depth: 12,
            ratio_level: 10,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))?;
        cfg.tree.validate()?;
        if cfg.solver.depth == 0 || !(cfg.solver.tol > 0.0) {
            anyhow::bail!("solver.depth must be >= 1 and solver.tol > 0");
        }
        if cfg.simulation.ball_depth > cfg.solver.depth {
            anyhow::bail!("simulation.ball_depth must not exceed solver.depth");
        }
        if !matches!(cfg.simulation.kind.as_str(), "plain" | "conditioned") {
            anyhow::bail!("simulation.kind must be \"plain\" or \"conditioned\"");
        }
        Ok(cfg)
    }

    /// The ray used for conditioning: explicit, or `0^ball_depth`.
    pub fn conditioning_ray_prefix(&self) -> Vec<u32> {
        self.simulation
            .ray
            .clone()
            .unwrap_or_else(|| vec![0; self.simulation.ball_depth])
    }

    pub fn selected(&self, name: &str) -> bool {
        match &self.selection {
            None => true,
            Some(list) => list.iter().any(|s| s == name),
        }
    }
}
