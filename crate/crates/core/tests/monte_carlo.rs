//! Monte Carlo cross-validation of the certified numerics: every closed-form
//! or bracketed quantity is re-estimated by direct simulation with an
//! independent code path and compared at 4 standard errors.

use std::sync::Arc;

use arbor_core::potential::{MartinKernelHandle, PotentialTable, TubePotential};
use arbor_core::tree::{TreeModel, TreeSpec, VertexId};
use arbor_core::walk::{
    monte_carlo, sample_boundary, simulate, simulate_conditioned, sphere_exit_distribution,
    McStat, RngPlan,
};

fn ternary() -> Arc<TreeModel> {
    TreeModel::new(TreeSpec::ternary_uniform()).unwrap()
}

fn random_tree(seed: u64) -> Arc<TreeModel> {
    TreeModel::new(TreeSpec::seeded_random(3, 5, 0.12, 1.0 / 8.0, seed)).unwrap()
}

fn v(word: &[u32]) -> VertexId {
    VertexId::root().descend(word)
}

trait Descend {
    fn descend(&self, word: &[u32]) -> VertexId;
}

impl Descend for VertexId {
    fn descend(&self, word: &[u32]) -> VertexId {
        let mut out = self.clone();
        for &i in word {
            out = out.child(i);
        }
        out
    }
}

#[test]
fn hitting_bracket_vs_simulated_frequency() {
    // H(o, y) for a depth-3 vertex of a seeded-random tree, estimated as the
    // frequency of ever visiting y. The horizon tail that the estimate
    // misses is bounded by rho^horizon-ish and is far below 4 sigma.
    for (t, depth, max_width) in [
        (random_tree(7), 9usize, 0.05f64),
        (ternary(), 16, 1e-4),
    ] {
        let table = PotentialTable::solve(t.clone(), depth, 1e-10).unwrap();
        let y = v(&[0, 1, 0]);
        let h = table.hitting(&VertexId::root(), &y).unwrap();
        let plan = RngPlan::new(1101);
        let n = 40_000u64;
        let hits = monte_carlo(&plan, n, |i, rng| {
            let path = simulate(&t, &VertexId::root(), 300, rng, i).unwrap();
            if path.steps.contains(&y) {
                1.0
            } else {
                0.0
            }
        });
        let stat = McStat::from_samples(&hits);
        assert!(
            stat.estimate + 4.0 * stat.stderr >= h.lo
                && stat.estimate - 4.0 * stat.stderr <= h.hi,
            "MC {} +- {} outside bracket [{}, {}]",
            stat.estimate,
            stat.stderr,
            h.lo,
            h.hi
        );
        assert!(h.hi - h.lo < max_width, "bracket width {}", h.hi - h.lo);
    }
}

#[test]
fn escape_drift_at_least_two_eta() {
    // Away from the root the depth drifts outward by at least 2 eta per
    // step; the root only helps.
    let t = random_tree(3);
    let eta = t.spec().eta;
    let n_steps = 200usize;
    let plan = RngPlan::new(22);
    let finals = monte_carlo(&plan, 4_000, |i, rng| {
        let path = simulate(&t, &VertexId::root(), n_steps, rng, i).unwrap();
        path.steps.last().unwrap().depth() as f64
    });
    let stat = McStat::from_samples(&finals);
    let bound = 2.0 * eta * n_steps as f64;
    assert!(
        stat.estimate + 4.0 * stat.stderr >= bound,
        "mean final depth {} +- {} below drift bound {}",
        stat.estimate,
        stat.stderr,
        bound
    );
}

#[test]
fn sphere_exit_masses_match_sampled_frequencies() {
    let t = random_tree(11);
    let radius = 3usize;
    let exact = sphere_exit_distribution(&t, &VertexId::root(), radius).unwrap();
    let total: f64 = exact.iter().map(|(_, m)| m).sum();
    assert!((total - 1.0).abs() < 1e-10, "masses must sum to 1");
    // aggregate by top-level subtree so each sector has enough mass for a
    // clean frequency comparison
    let rec = t.record_unchecked(&VertexId::root());
    let sectors = rec.n_children() as usize;
    let mut exact_sector = vec![0.0f64; sectors];
    for (y, m) in &exact {
        exact_sector[y.word()[0] as usize] += m;
    }
    let plan = RngPlan::new(501);
    let n = 20_000u64;
    // first passage at depth `radius` is exactly the sphere-exit vertex, and
    // sampling it never explores outside the small ball
    let samples = monte_carlo(&plan, n, |_, rng| {
        let ray = sample_boundary(&t, &VertexId::root(), radius, 100_000, rng).unwrap();
        ray.recorded_prefix()[0] as usize
    });
    for (s, &target) in exact_sector.iter().enumerate() {
        let ind: Vec<f64> = samples.iter().map(|&w| if w == s { 1.0 } else { 0.0 }).collect();
        let stat = McStat::from_samples(&ind);
        assert!(
            stat.within_sigma(target, 4.0),
            "sector {s}: {} +- {} vs exact {}",
            stat.estimate,
            stat.stderr,
            target
        );
    }
}

#[test]
fn conditioned_first_step_frequencies() {
    let t = ternary();
    let table = PotentialTable::solve(t.clone(), 12, 1e-10).unwrap();
    let handle = Arc::new(MartinKernelHandle::new(table, t.ray(vec![0; 12]).unwrap()));
    let plan = RngPlan::new(77);
    let n = 30_000u64;
    let firsts = monte_carlo(&plan, n, |i, rng| {
        let path = simulate_conditioned(&handle, &VertexId::root(), 1, rng, i).unwrap();
        path.steps[1].word()[0] as usize
    });
    for (child, target) in [(0usize, 2.0 / 3.0), (1, 1.0 / 6.0), (2, 1.0 / 6.0)] {
        let ind: Vec<f64> = firsts
            .iter()
            .map(|&w| if w == child { 1.0 } else { 0.0 })
            .collect();
        let stat = McStat::from_samples(&ind);
        assert!(
            stat.within_sigma(target, 4.0),
            "child {child}: {} +- {} vs {}",
            stat.estimate,
            stat.stderr,
            target
        );
    }
}

#[test]
fn tube_green_vs_killed_walk_occupation() {
    // G_U(o, y) for the c=1 tube: certified bracket versus the mean number
    // of visits to y before the walk first leaves the tube.
    let t = ternary();
    let ray = t.ray(vec![0; 30]).unwrap();
    let c = 1usize;
    let tube = TubePotential::solve(t.clone(), ray.clone(), c, 30, 1e-10).unwrap();
    let y = v(&[0]);
    let g = tube.green_from_root(&y).unwrap();
    let plan = RngPlan::new(909);
    let n = 30_000u64;
    let occupations = monte_carlo(&plan, n, |i, rng| {
        let path = simulate(&t, &VertexId::root(), 400, rng, i).unwrap();
        let mut visits = 0.0;
        for x in &path.steps {
            if !t.tube_contains(&ray, c, x) {
                break;
            }
            if *x == y {
                visits += 1.0;
            }
        }
        visits
    });
    let stat = McStat::from_samples(&occupations);
    assert!(
        stat.estimate + 4.0 * stat.stderr >= g.lo && stat.estimate - 4.0 * stat.stderr <= g.hi,
        "occupation {} +- {} outside [{}, {}]",
        stat.estimate,
        stat.stderr,
        g.lo,
        g.hi
    );
}

#[test]
fn boundary_sampling_sector_frequencies() {
    // First-passage directions from the root of the ternary tree are
    // symmetric across the three subtrees.
    let t = ternary();
    let plan = RngPlan::new(404);
    let n = 9_000u64;
    let firsts = monte_carlo(&plan, n, |i, _| {
        let mut rng = plan.stream(i);
        let ray = sample_boundary(&t, &VertexId::root(), 8, 100_000, &mut rng).unwrap();
        ray.recorded_prefix()[0] as usize
    });
    for child in 0..3usize {
        let ind: Vec<f64> = firsts
            .iter()
            .map(|&w| if w == child { 1.0 } else { 0.0 })
            .collect();
        let stat = McStat::from_samples(&ind);
        assert!(
            stat.within_sigma(1.0 / 3.0, 4.0),
            "child {child}: {} +- {}",
            stat.estimate,
            stat.stderr
        );
    }
}

#[test]
fn martingale_mean_is_conserved_for_harmonic_u() {
    // E[M_{tau and n}] = u^2(X_0) for u = K_theta under the plain walk,
    // stopped on leaving the radius-5 ball.
    use arbor_core::harmonic::{martingale_track, HarmonicFunction};
    let t = ternary();
    let table = PotentialTable::solve(t.clone(), 12, 1e-10).unwrap();
    let handle = Arc::new(MartinKernelHandle::new(table, t.ray(vec![0; 12]).unwrap()));
    let u = HarmonicFunction::kernel(handle);
    let radius = 5usize;
    let n_cap = 120usize;
    let plan = RngPlan::new(313);
    let samples = monte_carlo(&plan, 20_000, |i, rng| {
        let mut path = simulate(&t, &VertexId::root(), n_cap, rng, i).unwrap();
        let stop = path
            .exit_time(|x| x.depth() < radius)
            .map(|k| k.min(n_cap))
            .unwrap_or(n_cap);
        // the unstopped tail can leave the certified ball; discard it
        path.steps.truncate(stop + 1);
        let m = martingale_track(&t, &u, &path).unwrap();
        m[stop]
    });
    let stat = McStat::from_samples(&samples);
    let target = u.evaluate(&VertexId::root()).unwrap().powi(2);
    assert!(
        stat.within_sigma(target, 4.0),
        "E[M] = {} +- {} vs u^2(o) = {}",
        stat.estimate,
        stat.stderr,
        target
    );
}
