//! Ad-hoc simulation runs: writes the realized paths and a summary
//! statistics file.

use std::path::Path;

use serde::Serialize;

use arbor_core::tree::VertexId;
use arbor_core::walk::{monte_carlo, simulate, simulate_conditioned, McStat, RngPlan, Termination, WalkPath};

use crate::context::{fmt, write_csv, SuiteContext};
use crate::report::{CheckRecord, SuiteReport};

#[derive(Serialize)]
struct Stats {
    estimate: f64,
    stderr: f64,
    n_paths: u64,
    seed: u64,
}

fn term_str(t: Termination) -> &'static str {
    match t {
        Termination::Horizon => "horizon",
        Termination::Truncated => "truncated",
        Termination::Absorbed => "absorbed",
    }
}

pub fn run(ctx: &SuiteContext, out_dir: &Path) -> anyhow::Result<SuiteReport> {
    let cfg = &ctx.config;
    let sim = &cfg.simulation;
    let plan = RngPlan::new(ctx.seed);
    let conditioned = sim.kind == "conditioned";
    let paths: Vec<arbor_core::Result<WalkPath>> = monte_carlo(&plan, sim.n_paths, |i, rng| {
        if conditioned {
            simulate_conditioned(&ctx.handle, &VertexId::root(), sim.horizon, rng, i)
        } else {
            simulate(&ctx.tree, &VertexId::root(), sim.horizon, rng, i)
        }
    });

    let mut rows: Vec<[String; 4]> = Vec::new();
    let mut finals = Vec::with_capacity(paths.len());
    let mut checks = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        match p {
            Ok(p) => {
                for (k, v) in p.steps.iter().enumerate() {
                    rows.push([
                        i.to_string(),
                        k.to_string(),
                        v.to_string(),
                        term_str(p.termination).to_string(),
                    ]);
                }
                finals.push(p.steps.last().unwrap().depth() as f64);
            }
            Err(e) => checks.push(CheckRecord::error(&format!("simulate-path-{i}"), "plumbing", e)),
        }
    }
    write_csv(
        out_dir,
        "paths.csv",
        &["path", "step", "vertex", "termination"],
        rows.iter().map(|r| r.iter().cloned()),
    )?;
    let stat = if finals.is_empty() {
        McStat {
            estimate: f64::NAN,
            stderr: f64::NAN,
            n_paths: 0,
        }
    } else {
        McStat::from_samples(&finals)
    };
    let stats = Stats {
        estimate: stat.estimate,
        stderr: stat.stderr,
        n_paths: stat.n_paths,
        seed: ctx.seed,
    };
    std::fs::create_dir_all(out_dir)?;
    let mut text = serde_json::to_string_pretty(&stats)?;
    text.push('\n');
    std::fs::write(out_dir.join("stats.json"), text)?;

    checks.push(CheckRecord::ge(
        "simulate-paths-written",
        "plumbing",
        stat.n_paths as f64,
        sim.n_paths as f64,
        format!("final-depth mean {} (stderr {})", fmt(stat.estimate), fmt(stat.stderr)),
    ));
    Ok(SuiteReport::new("simulate", ctx.seed, checks))
}
