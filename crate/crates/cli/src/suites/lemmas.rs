//! Lemma suites: the conditioned hitting product, the occupation identity,
//! the Green-kernel lower bound and the tube-restricted Green ratio.

use std::path::Path;

use arbor_core::potential::TubePotential;
use arbor_core::tree::VertexId;
use arbor_core::walk::{monte_carlo, simulate_conditioned, McStat, RngPlan};

use crate::context::{fmt, write_csv, SuiteContext};
use crate::report::{CheckRecord, SuiteReport};

const ANCHOR_L1: &str = "Lemma 1: H^theta(o,x_n) = H(x_n,y_n) H(y_n,x_n)";
const ANCHOR_L2: &str = "Lemma 2: sum phi(y) G_Gamma(o,y) K_theta(y)";
const ANCHOR_L3: &str = "Lemma 3: G(o,y) K_theta(y) >= alpha, alpha = 3 eps^(2c+2)";
const ANCHOR_L4: &str = "Lemma 4: G_U(o,x_n)/G(o,x_n) -> P_o^theta[tau = +infinity]";

fn sub_plan(seed: u64, suite: u64) -> RngPlan {
    RngPlan::new(seed ^ suite.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn run(ctx: &SuiteContext, out_dir: &Path) -> anyhow::Result<SuiteReport> {
    let cfg = &ctx.config;
    let tree = &ctx.tree;
    let table = &ctx.table;
    let handle = &ctx.handle;
    let ray = handle.ray().clone();
    let sigma = cfg.thresholds.sigma;
    let n = cfg.simulation.n_paths;
    let horizon = cfg.simulation.horizon;
    let mut checks = Vec::new();

    if cfg.selected("lemma1-hitting") {
        let result = (|| -> arbor_core::Result<(CheckRecord, CheckRecord)> {
            // off-ray target at tube distance 1: sibling child of gamma(1)
            let g1 = ray.vertex(1);
            let off_index = if ray.index(1) == 0 { 1 } else { 0 };
            let x = g1.child(off_index);
            let pi = tree.project(&ray, &x)?;
            let exact = table.hitting_point(&x, &pi)? * table.hitting_point(&pi, &x)?;
            let g5 = ray.vertex(5);
            let plan = sub_plan(ctx.seed, 1);
            let samples = monte_carlo(&plan, n, |i, rng| {
                let path = simulate_conditioned(handle, &VertexId::root(), horizon, rng, i)
                    .expect("start vertex is certified");
                let hit_x = path.steps.contains(&x);
                let hit_g5 = path.steps.contains(&g5);
                (hit_x as u8 as f64, hit_g5 as u8 as f64)
            });
            let hit_stat = McStat::from_samples(&samples.iter().map(|s| s.0).collect::<Vec<_>>());
            let g5_stat = McStat::from_samples(&samples.iter().map(|s| s.1).collect::<Vec<_>>());
            let a = CheckRecord::le(
                "lemma1-hitting-product",
                ANCHOR_L1,
                (hit_stat.estimate - exact).abs(),
                sigma * hit_stat.stderr,
                format!(
                    "conditioned hit frequency {} vs exact product {} at {x}",
                    hit_stat.estimate, exact
                ),
            );
            let b = CheckRecord::ge(
                "lemma1-ray-hit",
                ANCHOR_L1,
                g5_stat.estimate,
                0.999,
                format!("conditioned hit frequency of {g5}"),
            );
            Ok((a, b))
        })();
        match result {
            Ok((a, b)) => {
                checks.push(a);
                checks.push(b);
            }
            Err(e) => checks.push(CheckRecord::error("lemma1-hitting", ANCHOR_L1, e)),
        }
    }

    if cfg.selected("lemma2-occupation") {
        let radius = cfg.lemmas.gamma_radius;
        let result = (|| -> arbor_core::Result<Vec<(VertexId, f64, McStat)>> {
            let gamma = tree.ball(radius, 1_000_000)?;
            let targets: Vec<VertexId> = [
                vec![],
                vec![0],
                vec![0, 0],
                vec![0, 0, 0],
                vec![0, 0, 0, 0],
                vec![1],
                vec![1, 0],
                vec![0, 1],
                vec![0, 0, 1],
                vec![1, 1],
            ]
            .into_iter()
            .map(VertexId::from_word)
            .collect();
            let mut exact = Vec::with_capacity(targets.len());
            for y in &targets {
                let g = arbor_core::potential::green_restricted(tree, &gamma, &VertexId::root(), y)?;
                exact.push(g * handle.martin_kernel_point(y)?);
            }
            let plan = sub_plan(ctx.seed, 2);
            let counts = monte_carlo(&plan, n, |i, rng| {
                let path = simulate_conditioned(handle, &VertexId::root(), horizon, rng, i)
                    .expect("start vertex is certified");
                let mut visits = vec![0.0f64; targets.len()];
                for x in &path.steps {
                    if x.depth() > radius {
                        break; // first exit of Gamma
                    }
                    if let Some(j) = targets.iter().position(|t| t == x) {
                        visits[j] += 1.0;
                    }
                }
                visits
            });
            let mut out = Vec::with_capacity(targets.len());
            for (j, y) in targets.iter().enumerate() {
                let per: Vec<f64> = counts.iter().map(|c| c[j]).collect();
                out.push((y.clone(), exact[j], McStat::from_samples(&per)));
            }
            Ok(out)
        })();
        match result {
            Ok(rows) => {
                for (y, exact, stat) in &rows {
                    checks.push(CheckRecord::le(
                        &format!("lemma2-occupation-{y}"),
                        ANCHOR_L2,
                        (stat.estimate - exact).abs(),
                        sigma * stat.stderr,
                        format!("mean conditioned visits {} vs exact {}", stat.estimate, exact),
                    ));
                }
                write_csv(
                    out_dir,
                    "occupation.csv",
                    &["vertex", "exact", "mc_mean", "mc_stderr"],
                    rows.iter().map(|(y, e, s)| {
                        [y.to_string(), fmt(*e), fmt(s.estimate), fmt(s.stderr)]
                    }),
                )?;
            }
            Err(e) => checks.push(CheckRecord::error("lemma2-occupation", ANCHOR_L2, e)),
        }
    }

    if cfg.selected("lemma3-bound") {
        let depth = cfg.lemmas.tube_depth.min(cfg.solver.depth);
        let eps = tree.spec().epsilon;
        let mut rows = Vec::new();
        for c in 0..=2usize {
            let result = (|| -> arbor_core::Result<(f64, f64)> {
                let mut max_residual = 0.0f64;
                let mut min_product = f64::INFINITY;
                for y in tree.tube_enumerate(&ray, c, depth)? {
                    let lb = handle.lower_bound_product(&y)?;
                    max_residual = max_residual.max((lb.direct - lb.via_identity).abs());
                    min_product = min_product.min(lb.direct);
                    rows.push([
                        c.to_string(),
                        y.to_string(),
                        fmt(lb.direct),
                        fmt(lb.via_identity),
                        fmt(lb.bound),
                    ]);
                }
                Ok((max_residual, min_product))
            })();
            let alpha = 3.0 * eps.powi(2 * c as i32 + 2);
            match result {
                Ok((residual, min_product)) => {
                    checks.push(CheckRecord::le(
                        &format!("lemma3-identity-c{c}"),
                        ANCHOR_L3,
                        residual,
                        cfg.thresholds.identity_tol,
                        format!("max |G(o,y)K(y) - H(y,pi)H(pi,y)G(y,y)| over the c={c} tube"),
                    ));
                    checks.push(CheckRecord::ge(
                        &format!("lemma3-bound-c{c}"),
                        ANCHOR_L3,
                        min_product,
                        alpha,
                        format!("min of G(o,y)K_theta(y) over the depth-{depth} tube"),
                    ));
                }
                Err(e) => checks.push(CheckRecord::error(&format!("lemma3-c{c}"), ANCHOR_L3, e)),
            }
        }
        write_csv(
            out_dir,
            "lemma3.csv",
            &["c", "vertex", "direct", "via_identity", "bound"],
            rows.iter().cloned(),
        )?;
    }

    if cfg.selected("lemma4-ratio") {
        let level = cfg.lemmas.ratio_level;
        let result = (|| -> arbor_core::Result<CheckRecord> {
            let y = ray.vertex(level);
            let tube = TubePotential::solve(
                tree.clone(),
                ray.clone(),
                1,
                cfg.solver.depth.max(2 * level),
                cfg.solver.tol,
            )?;
            let ratio = tube.green_from_root(&y)?.hi / table.green_point(&VertexId::root(), &y)?;
            let plan = sub_plan(ctx.seed, 4);
            let survived = monte_carlo(&plan, n, |i, rng| {
                let path = simulate_conditioned(handle, &VertexId::root(), horizon, rng, i)
                    .expect("start vertex is certified");
                let stays = path.steps.iter().all(|x| tree.tube_contains(&ray, 1, x));
                stays as u8 as f64
            });
            let stat = McStat::from_samples(&survived);
            Ok(CheckRecord::le(
                "lemma4-ratio",
                ANCHOR_L4,
                (ratio - stat.estimate).abs(),
                0.02 + sigma * stat.stderr,
                format!(
                    "G_U/G ratio {} at n={level} vs conditioned survival proxy {}",
                    ratio, stat.estimate
                ),
            ))
        })();
        match result {
            Ok(c) => checks.push(c),
            Err(e) => checks.push(CheckRecord::error("lemma4-ratio", ANCHOR_L4, e)),
        }
    }

    Ok(SuiteReport::new("lemmas", ctx.seed, checks))
}
