//! Identity suite: multiplicativity along geodesics, Martin normalization,
//! h-transform stochasticity, the Green diagonal bound and restriction
//! monotonicity.

use std::path::Path;

use rand::Rng;

use arbor_core::tree::{TreeModel, VertexId};
use arbor_core::walk::RngPlan;

use crate::context::{fmt, write_csv, SuiteContext};
use crate::report::{CheckRecord, SuiteReport};

const ANCHOR_EQ1: &str = "Eq. (1): H(x,y)=H(x,z)H(z,y), G(x,y)=H(x,z)G(z,y)";
const ANCHOR_KERNEL: &str = "Sec. 3: p^theta(x,y)=K_theta(y)/K_theta(x) p(x,y)";
const ANCHOR_DIAG: &str = "G(y,y) >= p_2(y,y) >= 3 eps^2";

fn random_vertex(tree: &TreeModel, max_depth: usize, rng: &mut impl Rng) -> VertexId {
    let depth = rng.random_range(0..=max_depth);
    let mut v = VertexId::root();
    for _ in 0..depth {
        let rec = tree.record_unchecked(&v);
        v = v.child(rng.random_range(0..rec.n_children()));
    }
    v
}

pub fn run(ctx: &SuiteContext, out_dir: &Path) -> anyhow::Result<SuiteReport> {
    let cfg = &ctx.config;
    let tree = &ctx.tree;
    let table = &ctx.table;
    let tol = cfg.thresholds.identity_tol;
    let mut checks = Vec::new();
    let plan = RngPlan::new(ctx.seed);

    if cfg.selected("eq1-triples") {
        let mut rng = plan.stream(0);
        let mut max_h = 0.0f64;
        let mut max_g = 0.0f64;
        let mut max_analytic = 0.0f64;
        let mut rows = Vec::new();
        let uniform3 = tree.is_uniform_homogeneous() && tree.spec().degree == Some(3);
        let result = (|| -> arbor_core::Result<()> {
            for _ in 0..1000 {
                let x = random_vertex(tree, cfg.solver.depth, &mut rng);
                let y = random_vertex(tree, cfg.solver.depth, &mut rng);
                let geo = tree.geodesic(&x, &y)?;
                let z = geo[rng.random_range(0..geo.len())].clone();
                let hxy = table.hitting_point(&x, &y)?;
                let hxz = table.hitting_point(&x, &z)?;
                let hzy = table.hitting_point(&z, &y)?;
                let gxy = table.green_point(&x, &y)?;
                let gzy = table.green_point(&z, &y)?;
                let rh = (hxy - hxz * hzy).abs();
                let rg = (gxy - hxz * gzy).abs();
                max_h = max_h.max(rh);
                max_g = max_g.max(rg);
                if uniform3 {
                    let b = table.hitting(&x, &y)?;
                    let analytic = 0.5f64.powi(tree.distance(&x, &y) as i32);
                    let excess = (hxy - analytic).abs() - (b.hi - b.lo);
                    max_analytic = max_analytic.max(excess);
                }
                rows.push([
                    x.to_string(),
                    z.to_string(),
                    y.to_string(),
                    fmt(rh),
                    fmt(rg),
                ]);
            }
            Ok(())
        })();
        match result {
            Ok(()) => {
                checks.push(CheckRecord::le(
                    "eq1-triples-hitting",
                    ANCHOR_EQ1,
                    max_h,
                    tol,
                    "max |H(x,y) - H(x,z)H(z,y)| over 1000 sampled triples".into(),
                ));
                checks.push(CheckRecord::le(
                    "eq1-triples-green",
                    ANCHOR_EQ1,
                    max_g,
                    tol,
                    "max |G(x,y) - H(x,z)G(z,y)| over 1000 sampled triples".into(),
                ));
                if uniform3 {
                    checks.push(CheckRecord::le(
                        "eq1-analytic-hitting",
                        ANCHOR_EQ1,
                        max_analytic,
                        0.0,
                        "max excess of |H(x,y) - 2^-d(x,y)| over the bracket width".into(),
                    ));
                }
                write_csv(
                    out_dir,
                    "triples.csv",
                    &["x", "z", "y", "residual_h", "residual_g"],
                    rows.iter().map(|r| r.iter().cloned()),
                )?;
            }
            Err(e) => checks.push(CheckRecord::error("eq1-triples", ANCHOR_EQ1, e)),
        }
    }

    if cfg.selected("martin-normalization") {
        match ctx.handle.martin_kernel_point(&VertexId::root()) {
            Ok(k) => checks.push(CheckRecord::le(
                "martin-normalization",
                "K_theta(o) = 1",
                (k - 1.0).abs(),
                tol,
                "|K_theta(o) - 1|".into(),
            )),
            Err(e) => checks.push(CheckRecord::error("martin-normalization", "K_theta(o) = 1", e)),
        }
    }

    if cfg.selected("h-transform-stochastic") {
        let depth = cfg.simulation.ball_depth.min(cfg.solver.depth - 1);
        let result = (|| -> arbor_core::Result<f64> {
            let mut max_defect = 0.0f64;
            for x in tree.ball(depth, 2_000_000)? {
                max_defect = max_defect.max(ctx.handle.conditioned_kernel(&x)?.defect);
            }
            Ok(max_defect)
        })();
        match result {
            Ok(d) => checks.push(CheckRecord::le(
                "h-transform-stochastic",
                ANCHOR_KERNEL,
                d,
                1e-8,
                format!("max |sum_y p^theta(x,y) - 1| over the depth-{depth} ball"),
            )),
            Err(e) => checks.push(CheckRecord::error("h-transform-stochastic", ANCHOR_KERNEL, e)),
        }
    }

    if cfg.selected("h-transform-law-root")
        && tree.is_uniform_homogeneous()
        && tree.spec().degree == Some(3)
    {
        match ctx.handle.conditioned_kernel(&VertexId::root()) {
            Ok(step) => {
                // derived oracle for the ternary uniform tree
                let oracle = [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
                let diff = step
                    .probs
                    .iter()
                    .zip(oracle.iter())
                    .map(|((_, p), o)| (p - o).abs())
                    .fold(0.0f64, f64::max);
                checks.push(CheckRecord::le(
                    "h-transform-law-root",
                    ANCHOR_KERNEL,
                    diff,
                    1e-8,
                    "max deviation of p^theta(o, .) from (2/3, 1/6, 1/6)".into(),
                ));
            }
            Err(e) => checks.push(CheckRecord::error("h-transform-law-root", ANCHOR_KERNEL, e)),
        }
    }

    if cfg.selected("green-diagonal") {
        let mut rng = plan.stream(1);
        let result = (|| -> arbor_core::Result<(f64, f64)> {
            let mut min_margin = f64::INFINITY;
            let mut max_dev2 = 0.0f64;
            let bound = 3.0 * tree.spec().epsilon.powi(2);
            let sample_depth = cfg.solver.depth.saturating_sub(6).max(1);
            for _ in 0..200 {
                let y = random_vertex(tree, sample_depth, &mut rng);
                let g = table.green_diagonal(&y)?;
                min_margin = min_margin.min(g.lo - bound);
                if tree.is_uniform_homogeneous() && tree.spec().degree == Some(3) {
                    max_dev2 = max_dev2.max((g.hi - 2.0).abs());
                }
            }
            Ok((min_margin, max_dev2))
        })();
        match result {
            Ok((margin, dev2)) => {
                checks.push(CheckRecord::ge(
                    "green-diagonal-bound",
                    ANCHOR_DIAG,
                    margin,
                    0.0,
                    "min of G(y,y) - 3 eps^2 over 200 sampled vertices".into(),
                ));
                if tree.is_uniform_homogeneous() && tree.spec().degree == Some(3) {
                    checks.push(CheckRecord::le(
                        "green-diagonal-value",
                        ANCHOR_DIAG,
                        dev2,
                        1e-8,
                        "max |G(y,y) - 2| on the ternary uniform tree".into(),
                    ));
                }
            }
            Err(e) => checks.push(CheckRecord::error("green-diagonal", ANCHOR_DIAG, e)),
        }
    }

    if cfg.selected("restriction-monotonicity") {
        let result = (|| -> arbor_core::Result<f64> {
            let o = VertexId::root();
            let b1 = tree.ball(1, 1_000_000)?;
            let b2 = tree.ball(2, 1_000_000)?;
            let g1 = arbor_core::potential::green_restricted(tree, &b1, &o, &o)?;
            let g2 = arbor_core::potential::green_restricted(tree, &b2, &o, &o)?;
            let g = table.green(&o, &o)?;
            // smallest slack in 1 <= G_B1 <= G_B2 <= G
            Ok((g1 - 1.0).min(g2 - g1).min(g.hi + 1e-12 - g2))
        })();
        match result {
            Ok(slack) => checks.push(CheckRecord::ge(
                "restriction-monotonicity",
                "G_U increases with U; G_U <= G",
                slack,
                -1e-10,
                "min slack in 1 <= G_B1(o,o) <= G_B2(o,o) <= G(o,o)".into(),
            )),
            Err(e) => checks.push(CheckRecord::error(
                "restriction-monotonicity",
                "G_U increases with U; G_U <= G",
                e,
            )),
        }
    }

    // bracketed-table exports
    let export_depth = cfg.solver.depth.min(6);
    let rows = table.edge_rows(export_depth, 1_000_000)?;
    write_csv(
        out_dir,
        "edges.csv",
        &["from_vertex", "to_vertex", "F_low", "F_high"],
        rows.iter().map(|(a, b, f)| {
            [a.to_string(), b.to_string(), fmt(f.lo), fmt(f.hi)]
        }),
    )?;
    let mut kernel_rows = Vec::new();
    for y in tree.ball(export_depth, 1_000_000)? {
        let k = ctx.handle.martin_kernel(&y)?;
        kernel_rows.push([y.to_string(), fmt(k.lo), fmt(k.hi)]);
    }
    write_csv(
        out_dir,
        "kernel.csv",
        &["vertex", "K_low", "K_high"],
        kernel_rows.iter().cloned(),
    )?;

    Ok(SuiteReport::new("identities", ctx.seed, checks))
}
