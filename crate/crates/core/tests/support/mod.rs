//! Independent reference implementations used only by tests.
#![allow(dead_code)]

use cdo_xai::forest::{Node, Tree};
use rand::Rng;

/// Conditional expectation of the tree output given only the features in
/// `known` (bit mask): known features follow `row`, unknown features split
/// the mass by child cover.
pub fn cond_expectation(tree: &Tree, row: &[f64], known: u32, out: usize) -> f64 {
    fn go(t: &Tree, i: usize, row: &[f64], known: u32, out: usize) -> f64 {
        match &t.nodes[i] {
            Node::Leaf { value, .. } => value[out],
            Node::Split {
                feature,
                threshold,
                left,
                right,
                cover,
            } => {
                if known & (1 << feature) != 0 {
                    let next = if row[*feature] <= *threshold { *left } else { *right };
                    go(t, next, row, known, out)
                } else {
                    let wl = t.nodes[*left].cover() / cover;
                    let wr = t.nodes[*right].cover() / cover;
                    wl * go(t, *left, row, known, out) + wr * go(t, *right, row, known, out)
                }
            }
        }
    }
    go(tree, 0, row, known, out)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Shapley values by enumerating all feature subsets; `[feature][output]`.
pub fn brute_force_shap(tree: &Tree, row: &[f64]) -> Vec<f64> {
    let m = row.len();
    assert!(m <= 16);
    let k = tree.n_outputs();
    let mut phi = vec![0.0; m * k];
    let mf = factorial(m);
    for i in 0..m {
        for s in 0u32..(1 << m) {
            if s & (1 << i) != 0 {
                continue;
            }
            let size = s.count_ones() as usize;
            let w = factorial(size) * factorial(m - size - 1) / mf;
            for o in 0..k {
                let with = cond_expectation(tree, row, s | (1 << i), o);
                let without = cond_expectation(tree, row, s, o);
                phi[i * k + o] += w * (with - without);
            }
        }
    }
    phi
}

/// A random tree over `n_features` with depth at most `max_depth`,
/// integer leaf covers and covers summed upward.
pub fn random_tree<R: Rng>(rng: &mut R, n_features: usize, max_depth: usize, n_outputs: usize) -> Tree {
    fn build<R: Rng>(rng: &mut R, nodes: &mut Vec<Node>, depth: usize, nf: usize, no: usize) -> usize {
        let id = nodes.len();
        let split = depth > 0 && (id == 0 || rng.random_bool(0.7));
        if !split {
            let value = (0..no).map(|_| rng.random_range(-2.0..2.0)).collect();
            nodes.push(Node::Leaf {
                value,
                cover: rng.random_range(1..20) as f64,
            });
            return id;
        }
        nodes.push(Node::Leaf {
            value: vec![],
            cover: 0.0,
        });
        let feature = rng.random_range(0..nf);
        let threshold = rng.random_range(-1.0..1.0);
        let left = build(rng, nodes, depth - 1, nf, no);
        let right = build(rng, nodes, depth - 1, nf, no);
        let cover = nodes[left].cover() + nodes[right].cover();
        nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
            cover,
        };
        id
    }
    let mut nodes = Vec::new();
    build(rng, &mut nodes, max_depth, n_features, n_outputs);
    Tree { nodes }
}

/// 1-Wasserstein distance as the integral over u in (0,1) of
/// |Q_a(u) - Q_b(u)|, with both quantile functions piecewise constant
/// between the breakpoints i/n_a and j/n_b.
pub fn wasserstein_quantile(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let mut cuts: Vec<(usize, usize)> = (0..=na).map(|i| (i * nb, na * nb)).collect();
    cuts.extend((0..=nb).map(|j| (j * na, na * nb)));
    // exact rational breakpoints with common denominator na*nb
    let mut num: Vec<usize> = cuts.into_iter().map(|(n, _)| n).collect();
    num.sort_unstable();
    num.dedup();
    let den = (na * nb) as f64;
    let mut total = 0.0;
    for w in num.windows(2) {
        // quantile index for u in (w0, w1]: ceil(u * n) - 1 = floor(w0 * n / den)
        let ia = w[0] / nb;
        let ib = w[0] / na;
        total += (a[ia] - b[ib]).abs() * (w[1] - w[0]) as f64 / den;
    }
    total
}
