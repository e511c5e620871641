//! Exact machinery checked against dense, brute-force rebuilds.

use nalgebra::{DMatrix, DVector};
use pclab::chains::Ladder;
use pclab::exact::{
    bottleneck_ratio_large_clique, census, enumerate_cliques, exact_stationary_and_balance,
    expected_hitting_time, metropolis_kernel, partition_functions, st_kernel, SparseKernel,
    StateSpaceIndex,
};
use pclab::{GibbsContext, HamiltonianSpec, PlantedGraph, VertexSet};
use proptest::prelude::*;

/// Every clique, found by scanning all `2^n` vertex subsets.
fn brute_cliques(g: &PlantedGraph) -> Vec<VertexSet> {
    let n = g.n();
    (0u32..1 << n)
        .map(|mask| VertexSet::from_indices(n, (0..n).filter(|&v| mask >> v & 1 == 1)))
        .filter(|s| {
            let v = s.to_vec();
            v.iter()
                .enumerate()
                .all(|(i, &a)| v[i + 1..].iter().all(|&b| g.has_edge(a, b)))
        })
        .collect()
}

/// Metropolis matrix straight from the move rule, over `idx`'s ordering.
fn dense_metropolis(
    g: &PlantedGraph,
    idx: &StateSpaceIndex,
    beta: f64,
    h: &HamiltonianSpec,
) -> DMatrix<f64> {
    let n = g.n();
    let len = idx.len();
    let mut p = DMatrix::<f64>::zeros(len, len);
    for i in 0..len {
        let c = idx.clique(i);
        for v in 0..n {
            let mut d = c.clone();
            if d.contains(v) {
                d.remove(v);
            } else {
                d.insert(v);
            }
            let j = match idx.index_of(&d) {
                Some(j) => j,
                None => continue,
            };
            let acc = (beta * (h.get(d.len()) - h.get(c.len()))).min(0.0).exp();
            p[(i, j)] += acc / n as f64;
        }
        let out: f64 = p.row(i).sum();
        p[(i, i)] = 1.0 - out;
    }
    p
}

fn dense_of(k: &SparseKernel) -> DMatrix<f64> {
    let len = k.len();
    DMatrix::from_fn(len, len, |i, j| k.prob(i, j))
}

/// Solves `pi P = pi`, `sum pi = 1`.
fn dense_stationary(p: &DMatrix<f64>) -> DVector<f64> {
    let len = p.nrows();
    let mut a = p.transpose() - DMatrix::identity(len, len);
    for j in 0..len {
        a[(len - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(len);
    b[len - 1] = 1.0;
    a.lu().solve(&b).unwrap()
}

#[test]
fn enumeration_matches_subset_scan() {
    for (n, k, seed) in [(8, 3, 1), (10, 4, 2), (12, 0, 3), (12, 6, 4)] {
        let g = PlantedGraph::generate(n, k, seed).unwrap();
        let idx = enumerate_cliques(&g, None, 1 << 20).unwrap();
        let mut mine: Vec<VertexSet> = brute_cliques(&g);
        let mut theirs: Vec<VertexSet> = idx.cliques().to_vec();
        mine.sort();
        theirs.sort();
        assert_eq!(mine, theirs);
        let c = census(&idx, &g).unwrap();
        for s in &mine {
            assert!(c.get(s.len(), s.intersection_len(g.planted())) > 0);
        }
        assert_eq!(c.total, mine.len() as u64);
    }
}

#[test]
fn sparse_kernel_equals_dense_rebuild() {
    let g = PlantedGraph::generate(10, 4, 5).unwrap();
    let idx = enumerate_cliques(&g, None, 1 << 20).unwrap();
    let h = HamiltonianSpec::identity(10).unwrap();
    for beta in [0.0, 0.8, 3.0] {
        let ctx = GibbsContext::new(beta, h.clone()).unwrap();
        let sparse = dense_of(&metropolis_kernel(&idx, &g, &ctx));
        let dense = dense_metropolis(&g, &idx, beta, &h);
        assert!((sparse - &dense).abs().max() < 1e-15);

        let pi = dense_stationary(&dense);
        let rep = exact_stationary_and_balance(&idx, &g, &ctx, 1 << 20).unwrap();
        for i in 0..idx.len() {
            assert!((pi[i] - rep.pi[i]).abs() < 1e-10, "beta {beta} state {i}");
        }
    }
}

#[test]
fn hitting_time_equals_dense_solve() {
    let g = PlantedGraph::generate(10, 4, 8).unwrap();
    let idx = enumerate_cliques(&g, None, 1 << 20).unwrap();
    let h = HamiltonianSpec::identity(10).unwrap();
    let beta = 1.2;
    let ctx = GibbsContext::new(beta, h.clone()).unwrap();
    let target = |i: usize| idx.overlap(i) >= 3;
    let t = expected_hitting_time(&idx, &g, &ctx, idx.empty_index(), target).unwrap();

    // (I - Q) x = 1 on the non-target states.
    let p = dense_metropolis(&g, &idx, beta, &h);
    let free: Vec<usize> = (0..idx.len()).filter(|&i| !target(i)).collect();
    let m = free.len();
    let a = DMatrix::from_fn(m, m, |r, c| {
        let delta = if r == c { 1.0 } else { 0.0 };
        delta - p[(free[r], free[c])]
    });
    let x = a.lu().solve(&DVector::from_element(m, 1.0)).unwrap();
    let start = free.iter().position(|&i| i == idx.empty_index()).unwrap();
    assert!(
        (t - x[start]).abs() <= 1e-6 * x[start],
        "{t} vs {}",
        x[start]
    );
}

#[test]
fn tempering_kernel_stationary_is_level_uniform() {
    let g = PlantedGraph::generate(9, 3, 11).unwrap();
    let idx = enumerate_cliques(&g, None, 1 << 20).unwrap();
    let h = HamiltonianSpec::identity(9).unwrap();
    let betas = vec![0.0, 0.6, 1.4];
    let c = census(&idx, &g).unwrap();
    let log_z: Vec<f64> = betas
        .iter()
        .map(|&b| partition_functions(&c, &GibbsContext::new(b, h.clone()).unwrap()).log_z)
        .collect();
    let ladder = Ladder::new(betas.clone(), log_z.clone(), 0.3, h.clone()).unwrap();
    let pi = dense_stationary(&dense_of(&st_kernel(&idx, &g, &ladder)));
    let levels = betas.len();
    for ci in 0..idx.len() {
        for (i, b) in betas.iter().enumerate() {
            let want = (b * h.get(idx.size(ci)) - log_z[i]).exp() / levels as f64;
            assert!((pi[ci * levels + i] - want).abs() < 1e-12);
        }
    }
}

/// With boundary `B` of `A`, the `pi`-weighted chance of leaving `A` within
/// `t` steps from inside `A` is at most `t pi(B) / pi(A)`; so some start in
/// `A` meets the same bound.
fn check_escape_bound(p: &SparseKernel, pi: &[f64], in_a: &[bool], in_b: &[bool], t: usize) {
    let esc = p.escape_probabilities(in_a, t);
    let pa: f64 = (0..pi.len()).filter(|&i| in_a[i]).map(|i| pi[i]).sum();
    let pb: f64 = (0..pi.len()).filter(|&i| in_b[i]).map(|i| pi[i]).sum();
    let bound = t as f64 * pb / pa;
    let avg: f64 = (0..pi.len())
        .filter(|&i| in_a[i])
        .map(|i| pi[i] * esc[i])
        .sum::<f64>()
        / pa;
    let best = (0..pi.len())
        .filter(|&i| in_a[i])
        .map(|i| esc[i])
        .fold(f64::INFINITY, f64::min);
    assert!(avg <= bound + 1e-12, "average escape {avg} above {bound}");
    assert!(best <= bound + 1e-12);
}

#[test]
fn escape_probabilities_respect_the_conductance_bound() {
    let g = PlantedGraph::generate(12, 5, 21).unwrap();
    let idx = enumerate_cliques(&g, None, 1 << 20).unwrap();
    let h = HamiltonianSpec::identity(12).unwrap();
    for beta in [0.0, 1.0] {
        let ctx = GibbsContext::new(beta, h.clone()).unwrap();
        let p = metropolis_kernel(&idx, &g, &ctx);
        let pi = exact_stationary_and_balance(&idx, &g, &ctx, 1 << 20)
            .unwrap()
            .pi;

        // Overlap bottleneck: A = overlap <= r, B = overlap == r.
        for r in 1..=3 {
            let in_a: Vec<bool> = (0..idx.len()).map(|i| idx.overlap(i) <= r).collect();
            let in_b: Vec<bool> = (0..idx.len()).map(|i| idx.overlap(i) == r).collect();
            for t in [1, 10, 100] {
                check_escape_bound(&p, &pi, &in_a, &in_b, t);
            }
        }

        // Gateway bottleneck.
        let top = idx.max_size();
        let rep = bottleneck_ratio_large_clique(&idx, &g, &ctx, top, top - 1, 3).unwrap();
        assert!(rep.claims_verified);
        for t in [1, 10, 100] {
            check_escape_bound(&p, &pi, &rep.in_a, &rep.in_b, t);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_instances_are_reversible(n in 4usize..=10, k in 0usize..=4, seed in any::<u64>(), beta in 0.0f64..4.0) {
        let k = k.min(n);
        let g = PlantedGraph::generate(n, k, seed).unwrap();
        let idx = enumerate_cliques(&g, None, 1 << 20).unwrap();
        prop_assert_eq!(idx.len(), brute_cliques(&g).len());
        let h = HamiltonianSpec::identity(n).unwrap();
        let ctx = GibbsContext::new(beta, h.clone()).unwrap();
        let p = metropolis_kernel(&idx, &g, &ctx);
        let logw: Vec<f64> = (0..idx.len()).map(|i| beta * idx.size(i) as f64).collect();
        let z: f64 = logw.iter().map(|l| l.exp()).sum();
        let pi: Vec<f64> = logw.iter().map(|l| l.exp() / z).collect();
        prop_assert!(p.balance_residual(&pi) < 1e-12);
        for i in 0..p.len() {
            let s: f64 = p.row(i).1.iter().sum::<f64>() + p.diag(i);
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(p.diag(i) >= -1e-15);
        }
    }
}
