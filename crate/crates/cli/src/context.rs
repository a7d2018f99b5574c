//! Shared setup for the experiment suites: solved tables, conditioning
//! handle and CSV plumbing.

use std::path::Path;
use std::sync::Arc;

use arbor_core::potential::{MartinKernelHandle, PotentialTable};
use arbor_core::tree::TreeModel;

use crate::config::ExperimentConfig;

pub struct SuiteContext {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub tree: Arc<TreeModel>,
    pub table: Arc<PotentialTable>,
    pub handle: Arc<MartinKernelHandle>,
}

impl SuiteContext {
    pub fn build(config: ExperimentConfig, seed: u64) -> anyhow::Result<Self> {
        let tree = TreeModel::new(config.tree.clone())?;
        let table = PotentialTable::solve(tree.clone(), config.solver.depth, config.solver.tol)?;
        let ray = tree.ray(config.conditioning_ray_prefix())?;
        let handle = Arc::new(MartinKernelHandle::new(table.clone(), ray));
        Ok(SuiteContext {
            config,
            seed,
            tree,
            table,
            handle,
        })
    }
}

pub fn write_csv<I, R>(out_dir: &Path, name: &str, header: &[&str], rows: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    std::fs::create_dir_all(out_dir)?;
    let mut w = csv::Writer::from_path(out_dir.join(name))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-precision float formatting for CSV cells, stable across runs.
pub fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}
