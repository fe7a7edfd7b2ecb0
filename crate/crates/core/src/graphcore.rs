//! Orthogonality graphs and exact combinatorics on them.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};

use crate::qcore::{max_abs, Ket, Projector};
use crate::{Error, Result};

/// Default tolerance on normalized overlaps when building a graph from kets.
pub const GRAPH_TOL: f64 = 1e-9;

/// Vertex-weighted simple graph; an edge marks a compatible (orthogonal) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CompatGraph {
    n: usize,
    adj: Vec<FixedBitSet>,
    weights: Vec<Rational64>,
}

impl CompatGraph {
    /// Edgeless graph with unit weights.
    pub fn empty(n: usize) -> CompatGraph {
        CompatGraph {
            n,
            adj: vec![FixedBitSet::with_capacity(n); n],
            weights: vec![Rational64::one(); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<CompatGraph> {
        let mut g = CompatGraph::empty(n);
        for &(i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidInput(format!("bad edge ({i}, {j}) for n = {n}")));
            }
            g.add_edge(i, j);
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i != j, "self-loop at {i}");
        self.adj[i].insert(j);
        self.adj[j].insert(i);
    }

    pub fn with_weights(mut self, w: Vec<Rational64>) -> Result<CompatGraph> {
        if w.len() != self.n {
            return Err(Error::DimMismatch {
                expected: self.n,
                found: w.len(),
            });
        }
        if w.iter().any(|x| *x <= Rational64::zero()) {
            return Err(Error::InvalidInput("weights must be positive".into()));
        }
        self.weights = w;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[Rational64] {
        &self.weights
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.to_f64().unwrap()).collect()
    }

    pub fn is_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].contains(j)
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[i].ones()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].count_ones(..)
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in self.adj[i].ones().filter(|&j| j > i) {
                out.push((i, j));
            }
        }
        out
    }

    /// Non-adjacent pairs `(i, j)` with `i < j`.
    pub fn non_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if !self.is_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.count_ones(..)).sum::<usize>() / 2
    }

    /// Induced subgraph on `keep`, relabelled in the given order.
    pub fn induced(&self, keep: &[usize]) -> CompatGraph {
        let mut g = CompatGraph::empty(keep.len());
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate().skip(a + 1) {
                if self.is_edge(i, j) {
                    g.add_edge(a, b);
                }
            }
        }
        g.weights = keep.iter().map(|&i| self.weights[i]).collect();
        g
    }

    fn adjacency_u64(&self) -> Result<Vec<u64>> {
        if self.n > 64 {
            return Err(Error::SizeLimit(format!("{} vertices, at most 64 supported", self.n)));
        }
        Ok(self
            .adj
            .iter()
            .map(|a| a.ones().fold(0u64, |m, j| m | (1u64 << j)))
            .collect())
    }
}

/// Edge iff the normalized overlap is at most `tol`. Weights are all one.
pub fn orthogonality_graph(kets: &[Ket], tol: f64) -> CompatGraph {
    let n = kets.len();
    let unit: Vec<_> = kets.iter().map(|k| k.normalized()).collect();
    let mut g = CompatGraph::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if unit[i].dotc(&unit[j]).norm() <= tol {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// Edge iff `max |(P_i P_j)_kl| <= tol`; used for projectors of any rank.
pub fn projector_graph(projectors: &[Projector], tol: f64) -> CompatGraph {
    let n = projectors.len();
    let mut g = CompatGraph::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if max_abs(&(projectors[i].matrix() * projectors[j].matrix())) <= tol {
                g.add_edge(i, j);
            }
        }
    }
    g
}

#[derive(Clone, Debug, PartialEq)]
pub struct Independence {
    pub value: Rational64,
    /// One maximizing independent set, ascending.
    pub set: Vec<usize>,
}

/// Exact weighted independence number by branch and bound.
///
/// Weights are scaled to integers by the lcm of their denominators. The bound
/// at each node is a greedy clique cover of the candidates: an independent set
/// takes at most one vertex per clique, so the sum of per-clique maxima bounds
/// what remains.
pub fn independence_number(g: &CompatGraph) -> Result<Independence> {
    let adj = g.adjacency_u64()?;
    let lcm = g
        .weights
        .iter()
        .fold(1i64, |acc, w| acc.lcm(w.denom()));
    let w: Vec<i64> = g
        .weights
        .iter()
        .map(|x| (x * Rational64::from_integer(lcm)).to_integer())
        .collect();
    // Visit order: heaviest first, lowest index on ties.
    let mut order: Vec<usize> = (0..g.n).collect();
    order.sort_by(|&a, &b| w[b].cmp(&w[a]).then(a.cmp(&b)));
    let mut bb = Bb {
        adj: &adj,
        w: &w,
        order: &order,
        best: -1,
        best_set: 0,
    };
    let all = if g.n == 64 { u64::MAX } else { (1u64 << g.n) - 1 };
    bb.search(all, 0, 0);
    let set: Vec<usize> = (0..g.n).filter(|&i| bb.best_set >> i & 1 == 1).collect();
    Ok(Independence {
        value: Rational64::new(bb.best, lcm),
        set,
    })
}

struct Bb<'a> {
    adj: &'a [u64],
    w: &'a [i64],
    order: &'a [usize],
    best: i64,
    best_set: u64,
}

impl Bb<'_> {
    fn first(&self, p: u64) -> usize {
        *self.order.iter().find(|&&v| p >> v & 1 == 1).unwrap()
    }

    fn cover_bound(&self, mut p: u64) -> i64 {
        let mut bound = 0;
        while p != 0 {
            let v = self.first(p);
            bound += self.w[v];
            let mut clique = 1u64 << v;
            let mut cand = p & self.adj[v];
            while cand != 0 {
                let u = self.first(cand);
                clique |= 1u64 << u;
                cand &= self.adj[u];
            }
            p &= !clique;
        }
        bound
    }

    fn search(&mut self, p: u64, cur: i64, chosen: u64) {
        if p == 0 {
            if cur > self.best {
                self.best = cur;
                self.best_set = chosen;
            }
            return;
        }
        if cur + self.cover_bound(p) <= self.best {
            return;
        }
        let v = self.first(p);
        let bit = 1u64 << v;
        self.search(p & !self.adj[v] & !bit, cur + self.w[v], chosen | bit);
        self.search(p & !bit, cur, chosen);
    }
}

/// All maximal cliques (Bron-Kerbosch with pivoting), each sorted ascending,
/// the list sorted lexicographically.
pub fn maximal_cliques(g: &CompatGraph) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut r = Vec::new();
    let mut p = FixedBitSet::with_capacity(g.n);
    p.insert_range(..);
    let x = FixedBitSet::with_capacity(g.n);
    bron_kerbosch(g, &mut r, p, x, &mut out);
    for c in &mut out {
        c.sort_unstable();
    }
    out.sort();
    out
}

fn bron_kerbosch(
    g: &CompatGraph,
    r: &mut Vec<usize>,
    mut p: FixedBitSet,
    mut x: FixedBitSet,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_clear() {
        if x.is_clear() {
            out.push(r.clone());
        }
        return;
    }
    // Pivot maximizing |P ∩ N(u)| over u in P ∪ X.
    let pivot = p
        .ones()
        .chain(x.ones())
        .max_by_key(|&u| (p.intersection(&g.adj[u]).count(), std::cmp::Reverse(u)))
        .unwrap();
    let cand: Vec<usize> = p.difference(&g.adj[pivot]).collect();
    for v in cand {
        r.push(v);
        let mut np = p.clone();
        np.intersect_with(&g.adj[v]);
        let mut nx = x.clone();
        nx.intersect_with(&g.adj[v]);
        bron_kerbosch(g, r, np, nx, out);
        r.pop();
        p.set(v, false);
        x.insert(v);
    }
}

/// Maximal cliques whose projectors sum to the identity within `1e-9`.
pub fn basis_cliques(projectors: &[Projector], g: &CompatGraph) -> Vec<Vec<usize>> {
    if projectors.is_empty() {
        return Vec::new();
    }
    let d = projectors[0].dim();
    let id = crate::qcore::identity(d);
    maximal_cliques(g)
        .into_iter()
        .filter(|c| {
            let rank: usize = c.iter().map(|&i| projectors[i].rank()).sum();
            if rank != d {
                return false;
            }
            let mut s = id.clone() * crate::qcore::c(-1.0, 0.0);
            for &i in c {
                s += projectors[i].matrix();
            }
            max_abs(&s) <= 1e-9
        })
        .collect()
}

/// Basis cliques of a rank-one set given as kets.
pub fn basis_cliques_of_kets(kets: &[Ket], g: &CompatGraph) -> Vec<Vec<usize>> {
    let p: Vec<_> = kets.iter().map(crate::qcore::projector_from_ket).collect();
    basis_cliques(&p, g)
}

/// Whether the complement graph is connected (breadth-first search).
pub fn complement_connected(g: &CompatGraph) -> bool {
    if g.n <= 1 {
        return true;
    }
    let mut seen = FixedBitSet::with_capacity(g.n);
    let mut queue = VecDeque::from([0usize]);
    seen.insert(0);
    while let Some(v) = queue.pop_front() {
        for u in 0..g.n {
            if u != v && !seen.contains(u) && !g.is_edge(u, v) {
                seen.insert(u);
                queue.push_back(u);
            }
        }
    }
    seen.count_ones(..) == g.n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_vectors;
    use proptest::prelude::*;

    fn catalog_graph(name: &str) -> (CompatGraph, Vec<Projector>) {
        let s = builtin_vectors(name).unwrap();
        let g = orthogonality_graph(&s.kets(), GRAPH_TOL)
            .with_weights(s.weights_rational())
            .unwrap();
        (g, s.projectors())
    }

    #[test]
    fn alpha_of_catalog_sets() {
        for (name, a) in [
            ("bbc21", 36),
            ("ceg18", 4),
            ("peres24", 5),
            ("yo13", 11),
            ("peres39", 46),
            ("peres33", 12),
        ] {
            let (g, _) = catalog_graph(name);
            let r = independence_number(&g).unwrap();
            assert_eq!(r.value, Rational64::from_integer(a), "{name}");
            let w: Rational64 = r.set.iter().map(|&i| g.weights()[i]).sum();
            assert_eq!(w, r.value);
            for (k, &i) in r.set.iter().enumerate() {
                for &j in &r.set[k + 1..] {
                    assert!(!g.is_edge(i, j));
                }
            }
        }
    }

    #[test]
    fn small_cases() {
        let g = CompatGraph::empty(3)
            .with_weights(vec![Rational64::new(1, 2), Rational64::from_integer(2), Rational64::new(1, 3)])
            .unwrap();
        assert_eq!(independence_number(&g).unwrap().value, Rational64::new(17, 6));
        let k1 = orthogonality_graph(&[Ket::basis(2, 0)], GRAPH_TOL);
        assert_eq!((k1.n(), k1.edge_count()), (1, 0));
        let tri = CompatGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(maximal_cliques(&tri), vec![vec![0, 1, 2]]);
        assert!(!complement_connected(&tri));
        assert!(complement_connected(&CompatGraph::empty(2)));
        assert!(matches!(
            independence_number(&CompatGraph::empty(65)),
            Err(Error::SizeLimit(_))
        ));
    }

    #[test]
    fn clique_counts() {
        let (g, p) = catalog_graph("ceg18");
        assert_eq!(maximal_cliques(&g).iter().filter(|c| c.len() == 4).count(), 9);
        assert_eq!(basis_cliques(&p, &g).len(), 9);
        let (g, p) = catalog_graph("peres39");
        assert_eq!(maximal_cliques(&g).iter().filter(|c| c.len() == 5).count(), 50);
        assert_eq!(basis_cliques(&p, &g).len(), 50);
        let (g, p) = catalog_graph("peres24");
        let four: Vec<_> = maximal_cliques(&g).into_iter().filter(|c| c.len() == 4).collect();
        assert_eq!(basis_cliques(&p, &g), four);
    }

    #[test]
    fn yo13_bases_include_normalization_triples() {
        let s = builtin_vectors("yo13").unwrap();
        let (g, p) = catalog_graph("yo13");
        let b = basis_cliques(&p, &g);
        for t in &s.extra_constraints {
            assert!(b.contains(t), "{t:?}");
        }
    }

    #[test]
    fn two_orthogonal_vectors_in_three_dims_form_no_basis() {
        let k = vec![Ket::basis(3, 0), Ket::basis(3, 1)];
        let g = orthogonality_graph(&k, GRAPH_TOL);
        assert!(basis_cliques_of_kets(&k, &g).is_empty());
    }

    #[test]
    fn catalog_complements_are_connected() {
        for name in ["bbc21", "ceg18", "peres24", "peres39", "yo13", "peres33"] {
            assert!(complement_connected(&catalog_graph(name).0), "{name}");
        }
    }

    fn brute_alpha(g: &CompatGraph) -> Rational64 {
        let n = g.n();
        let mut best = Rational64::zero();
        for m in 0u32..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|&i| m >> i & 1 == 1).collect();
            let indep = set
                .iter()
                .enumerate()
                .all(|(k, &i)| set[k + 1..].iter().all(|&j| !g.is_edge(i, j)));
            if indep {
                best = best.max(set.iter().map(|&i| g.weights()[i]).sum());
            }
        }
        best
    }

    fn naive_maximal_cliques(g: &CompatGraph) -> Vec<Vec<usize>> {
        let n = g.n();
        let mut out = Vec::new();
        for m in 1u32..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|&i| m >> i & 1 == 1).collect();
            let clique = set
                .iter()
                .enumerate()
                .all(|(k, &i)| set[k + 1..].iter().all(|&j| g.is_edge(i, j)));
            let maximal = (0..n)
                .filter(|v| !set.contains(v))
                .all(|v| !set.iter().all(|&i| g.is_edge(i, v)));
            if clique && maximal {
                out.push(set);
            }
        }
        out.sort();
        out
    }

    fn arb_graph(max_n: usize) -> impl Strategy<Value = CompatGraph> {
        (1..=max_n).prop_flat_map(|n| {
            (
                prop::collection::vec(any::<bool>(), n * (n - 1) / 2),
                prop::collection::vec((1i64..12, 1i64..4), n),
            )
                .prop_map(move |(bits, ws)| {
                    let mut g = CompatGraph::empty(n);
                    let mut k = 0;
                    for i in 0..n {
                        for j in i + 1..n {
                            if bits[k] {
                                g.add_edge(i, j);
                            }
                            k += 1;
                        }
                    }
                    g.with_weights(ws.into_iter().map(|(a, b)| Rational64::new(a, b)).collect())
                        .unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn alpha_matches_brute_force(g in arb_graph(18)) {
            let r = independence_number(&g).unwrap();
            prop_assert_eq!(r.value, brute_alpha(&g));
            let w: Rational64 = r.set.iter().map(|&i| g.weights()[i]).sum();
            prop_assert_eq!(w, r.value);
        }

        #[test]
        fn cliques_match_naive(g in arb_graph(18)) {
            prop_assert_eq!(maximal_cliques(&g), naive_maximal_cliques(&g));
        }
    }
}
