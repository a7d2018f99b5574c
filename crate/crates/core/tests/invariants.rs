//! Structural invariants checked against brute-force oracles, mostly on
//! seeded-random trees so the uniform fast paths are not the only thing
//! exercised.

use std::sync::Arc;

use proptest::prelude::*;

use arbor_core::potential::{green_restricted, PotentialTable};
use arbor_core::tree::{TreeModel, TreeSpec, VertexId};

fn random_spec(seed: u64) -> TreeSpec {
    TreeSpec::seeded_random(3, 5, 0.12, 1.0 / 8.0, seed)
}

/// Clamp an arbitrary word into a valid vertex of `tree`.
fn clamp_word(tree: &TreeModel, raw: &[u32]) -> VertexId {
    let mut v = VertexId::root();
    for &i in raw {
        let rec = tree.record_unchecked(&v);
        v = v.child(i % rec.n_children());
    }
    v
}

fn word_strategy() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..8, 0..7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(seed in 0u64..32, a in word_strategy(), b in word_strategy(), c in word_strategy()) {
        let t = TreeModel::new(random_spec(seed)).unwrap();
        let (x, y, z) = (clamp_word(&t, &a), clamp_word(&t, &b), clamp_word(&t, &c));
        prop_assert_eq!(t.distance(&x, &x), 0);
        prop_assert_eq!(t.distance(&x, &y), t.distance(&y, &x));
        prop_assert!((t.distance(&x, &y) == 0) == (x == y));
        prop_assert!(t.distance(&x, &z) <= t.distance(&x, &y) + t.distance(&y, &z));
    }

    #[test]
    fn geodesic_structure(seed in 0u64..32, a in word_strategy(), b in word_strategy()) {
        let t = TreeModel::new(random_spec(seed)).unwrap();
        let (x, y) = (clamp_word(&t, &a), clamp_word(&t, &b));
        let path = t.geodesic(&x, &y).unwrap();
        prop_assert_eq!(path.len(), t.distance(&x, &y) + 1);
        prop_assert_eq!(path.first().unwrap(), &x);
        prop_assert_eq!(path.last().unwrap(), &y);
        for w in path.windows(2) {
            prop_assert_eq!(t.distance(&w[0], &w[1]), 1);
            // consecutive vertices really are tree neighbors
            prop_assert!(t.transition(&w[0], &w[1]).unwrap() > 0.0);
        }
        // no vertex repeats on a simple path
        for (i, u) in path.iter().enumerate() {
            for v in &path[i + 1..] {
                prop_assert!(u != v);
            }
        }
    }

    #[test]
    fn seeded_tree_is_deterministic(seed in 0u64..32, a in word_strategy()) {
        let t1 = TreeModel::new(random_spec(seed)).unwrap();
        let t2 = TreeModel::new(random_spec(seed)).unwrap();
        let x = clamp_word(&t1, &a);
        let r1 = t1.record(&x).unwrap();
        let r2 = t2.record(&x).unwrap();
        prop_assert_eq!(r1.degree, r2.degree);
        prop_assert_eq!(r1.p_parent, r2.p_parent);
        prop_assert_eq!(&r1.p_children, &r2.p_children);
    }

    #[test]
    fn projection_minimizes_distance_to_ray(seed in 0u64..16, a in word_strategy(), ray_raw in prop::collection::vec(0u32..8, 8)) {
        let t = TreeModel::new(random_spec(seed)).unwrap();
        let y = clamp_word(&t, &a);
        let ray_tip = clamp_word(&t, &ray_raw);
        let ray = t.ray(ray_tip.word().to_vec()).unwrap();
        let pi = t.project(&ray, &y).unwrap();
        let d_pi = t.distance(&y, &pi);
        prop_assert_eq!(d_pi, t.tube_distance(&ray, &y));
        // brute force over the recorded ray segment
        for k in 0..=ray.recorded_depth() {
            prop_assert!(d_pi <= t.distance(&y, &ray.vertex(k)));
        }
        // the projection is itself on the ray
        prop_assert!(ray.contains(&pi));
    }

    #[test]
    fn tube_enumeration_matches_ball_filter(seed in 0u64..8, c in 0usize..3, depth in 1usize..5) {
        let t = TreeModel::new(random_spec(seed)).unwrap();
        let tip = clamp_word(&t, &[0; 8]);
        let ray = t.ray(tip.word().to_vec()).unwrap();
        let mut tube: Vec<String> = t
            .tube_enumerate(&ray, c, depth)
            .unwrap()
            .into_iter()
            .map(|v| v.to_string())
            .collect();
        let mut brute: Vec<String> = t
            .ball(depth, 1_000_000)
            .unwrap()
            .into_iter()
            .filter(|v| t.tube_contains(&ray, c, v))
            .map(|v| v.to_string())
            .collect();
        tube.sort();
        brute.sort();
        prop_assert_eq!(tube, brute);
    }

    #[test]
    fn brackets_are_nested_under_deeper_solves(seed in 0u64..16, a in word_strategy()) {
        let t = TreeModel::new(random_spec(seed)).unwrap();
        let mut x = clamp_word(&t, &a).prefix(a.len().min(5));
        if x.is_root() {
            x = x.child(0);
        }
        let shallow = PotentialTable::solve(t.clone(), 5, 1e-2).unwrap();
        let deep = PotentialTable::solve(t.clone(), 8, 1e-9).unwrap();
        let rho = t.spec().rho();
        let (fs, fd) = (shallow.f_up(&x), deep.f_up(&x));
        prop_assert!(0.0 <= fs.lo && fs.hi <= rho + 1e-12);
        // monotone refinement: deeper certification never widens
        prop_assert!(fd.lo >= fs.lo - 1e-12);
        prop_assert!(fd.hi <= fs.hi + 1e-12);
        let (ds, dd) = (shallow.f_down(&x).unwrap(), deep.f_down(&x).unwrap());
        prop_assert!(dd.lo >= ds.lo - 1e-12);
        prop_assert!(dd.hi <= ds.hi + 1e-12);
    }

    #[test]
    fn multiplicativity_through_geodesic_vertices(seed in 0u64..16, a in word_strategy(), b in word_strategy()) {
        let t = TreeModel::new(random_spec(seed)).unwrap();
        let table = PotentialTable::solve(t.clone(), 8, 1e-9).unwrap();
        let (x, y) = (clamp_word(&t, &a), clamp_word(&t, &b));
        let hxy = table.hitting_point(&x, &y).unwrap();
        let gxy = table.green_point(&x, &y).unwrap();
        for z in table.tree().geodesic(&x, &y).unwrap() {
            let hxz = table.hitting_point(&x, &z).unwrap();
            let hzy = table.hitting_point(&z, &y).unwrap();
            prop_assert!((hxy - hxz * hzy).abs() < 1e-12 * (1.0 + hxy));
            let gzy = table.green_point(&z, &y).unwrap();
            prop_assert!((gxy - hxz * gzy).abs() < 1e-11 * (1.0 + gxy));
        }
    }

    #[test]
    fn restricted_green_matches_dense_solve(seed in 0u64..16, a in word_strategy()) {
        let t = TreeModel::new(random_spec(seed)).unwrap();
        let set = t.ball(2, 10_000).unwrap();
        let y = clamp_word(&t, &a).prefix(1.min(clamp_word(&t, &a).depth()));
        let y = if set.contains(&y) { y } else { VertexId::root() };
        let o = VertexId::root();
        let fast = green_restricted(&t, &set, &o, &y).unwrap();
        let slow = dense_restricted_green(&t, &set, &o, &y);
        prop_assert!((fast - slow).abs() < 1e-9 * (1.0 + slow), "{fast} vs {slow}");
    }
}

/// Independent oracle: assemble `I - P_U` densely and solve by Gaussian
/// elimination with partial pivoting.
fn dense_restricted_green(t: &Arc<TreeModel>, set: &[VertexId], x: &VertexId, y: &VertexId) -> f64 {
    let n = set.len();
    let index: std::collections::HashMap<&VertexId, usize> =
        set.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut a = vec![vec![0.0f64; n]; n];
    let mut rhs = vec![0.0f64; n];
    rhs[index[y]] = 1.0;
    for (i, v) in set.iter().enumerate() {
        a[i][i] = 1.0;
        for (w, p) in t.neighbors(v).unwrap() {
            if let Some(&j) = index.get(&w) {
                a[i][j] -= p;
            }
        }
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        a.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for cc in col..n {
                a[r][cc] -= f * a[col][cc];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut g = vec![0.0f64; n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for cc in r + 1..n {
            acc -= a[r][cc] * g[cc];
        }
        g[r] = acc / a[r][r];
    }
    g[index[x]]
}
