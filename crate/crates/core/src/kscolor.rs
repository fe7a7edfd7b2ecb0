//! Kochen-Specker 0/1 assignments and completion of KS sets.

use crate::catalog::VectorSet;
use crate::graphcore::{basis_cliques, projector_graph, CompatGraph, GRAPH_TOL};
use crate::qcore::{identity, max_abs, Projector};
use crate::{Error, Result};

/// Largest set `complete_ks` will grow to.
pub const COMPLETION_LIMIT: usize = 2048;

#[derive(Clone, Debug)]
pub struct KsInstance {
    pub graph: CompatGraph,
    /// Vertex sets that must contain exactly one 1.
    pub bases: Vec<Vec<usize>>,
    pub ranks: Vec<usize>,
}

impl KsInstance {
    pub fn from_projectors(projectors: &[Projector]) -> KsInstance {
        let graph = projector_graph(projectors, GRAPH_TOL);
        let bases = basis_cliques(projectors, &graph);
        KsInstance {
            graph,
            bases,
            ranks: projectors.iter().map(|p| p.rank()).collect(),
        }
    }

    pub fn from_set(set: &VectorSet) -> KsInstance {
        KsInstance::from_projectors(&set.projectors())
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Both conditions: no edge with two 1s, exactly one 1 per basis.
    pub fn verify(&self, a: &[bool]) -> bool {
        a.len() == self.n()
            && self.graph.edges().iter().all(|&(i, j)| !(a[i] && a[j]))
            && self.bases.iter().all(|b| b.iter().filter(|&&i| a[i]).count() == 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KsResult {
    Sat(Vec<bool>),
    Unsat,
}

impl KsResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, KsResult::Sat(_))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Val {
    Free,
    Zero,
    One,
}

struct Search<'a> {
    inst: &'a KsInstance,
    /// Bases each vertex belongs to.
    member: Vec<Vec<usize>>,
    val: Vec<Val>,
    trail: Vec<usize>,
}

impl Search<'_> {
    fn assign(&mut self, v: usize, x: Val, queue: &mut Vec<usize>) -> bool {
        match self.val[v] {
            Val::Free => {
                self.val[v] = x;
                self.trail.push(v);
                queue.push(v);
                true
            }
            cur => cur == x,
        }
    }

    fn propagate(&mut self, mut queue: Vec<usize>) -> bool {
        while let Some(v) = queue.pop() {
            if self.val[v] == Val::One {
                let nbrs: Vec<usize> = self.inst.graph.neighbors(v).collect();
                for u in nbrs {
                    if !self.assign(u, Val::Zero, &mut queue) {
                        return false;
                    }
                }
            }
            for bi in 0..self.member[v].len() {
                let b = &self.inst.bases[self.member[v][bi]];
                let ones = b.iter().filter(|&&u| self.val[u] == Val::One).count();
                let free: Vec<usize> = b.iter().copied().filter(|&u| self.val[u] == Val::Free).collect();
                match (ones, free.len()) {
                    (0, 0) => return false,
                    (0, 1) => {
                        if !self.assign(free[0], Val::One, &mut queue) {
                            return false;
                        }
                    }
                    (1, _) => {
                        for u in free {
                            if !self.assign(u, Val::Zero, &mut queue) {
                                return false;
                            }
                        }
                    }
                    (o, _) if o > 1 => return false,
                    _ => {}
                }
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            self.val[v] = Val::Free;
        }
    }

    /// Open basis with the fewest free members, ties to the lowest index.
    fn pick(&self) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for (k, b) in self.inst.bases.iter().enumerate() {
            if b.iter().any(|&u| self.val[u] == Val::One) {
                continue;
            }
            let free = b.iter().filter(|&&u| self.val[u] == Val::Free).count();
            if best.is_none_or(|(f, _)| free < f) {
                best = Some((free, k));
            }
        }
        best.map(|(_, k)| k)
    }

    fn solve(&mut self) -> bool {
        let Some(k) = self.pick() else {
            return true;
        };
        let cands: Vec<usize> = self.inst.bases[k]
            .iter()
            .copied()
            .filter(|&u| self.val[u] == Val::Free)
            .collect();
        for u in cands {
            let mark = self.trail.len();
            let mut q = Vec::new();
            if self.assign(u, Val::One, &mut q) && self.propagate(q) && self.solve() {
                return true;
            }
            self.undo(mark);
        }
        false
    }
}

/// Backtracking over the bases with unit propagation. Vertices left free once
/// every basis holds a 1 are set to 0.
pub fn ks_assignments(inst: &KsInstance) -> KsResult {
    let n = inst.n();
    let mut member = vec![Vec::new(); n];
    for (k, b) in inst.bases.iter().enumerate() {
        for &i in b {
            member[i].push(k);
        }
    }
    let mut s = Search {
        inst,
        member,
        val: vec![Val::Free; n],
        trail: Vec::new(),
    };
    // An empty basis can never hold a 1.
    if inst.bases.iter().any(|b| b.is_empty()) {
        return KsResult::Unsat;
    }
    if s.solve() {
        let a: Vec<bool> = s.val.iter().map(|&v| v == Val::One).collect();
        debug_assert!(inst.verify(&a));
        KsResult::Sat(a)
    } else {
        KsResult::Unsat
    }
}

/// Exhaustive check over all `2^n` assignments (small `n` only).
pub fn ks_brute_force(inst: &KsInstance) -> Result<KsResult> {
    let n = inst.n();
    if n > 24 {
        return Err(Error::SizeLimit(format!("{n} vertices for exhaustive search")));
    }
    for mask in 0u32..1 << n {
        let a: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        if inst.verify(&a) {
            return Ok(KsResult::Sat(a));
        }
    }
    Ok(KsResult::Unsat)
}

fn contains(set: &[Projector], p: &Projector) -> bool {
    set.iter()
        .any(|q| q.dim() == p.dim() && max_abs(&(q.matrix() - p.matrix())) <= 1e-9)
}

/// One round of completion: `1 - Pi_i - Pi_j` for every orthogonal pair that no
/// basis clique contains, skipping zeros and duplicates.
pub fn completion_additions(projectors: &[Projector]) -> Result<Vec<Projector>> {
    let g = projector_graph(projectors, GRAPH_TOL);
    let bases = basis_cliques(projectors, &g);
    let n = projectors.len();
    let mut covered = vec![false; n * n];
    for b in &bases {
        for &i in b {
            for &j in b {
                covered[i * n + j] = true;
            }
        }
    }
    let mut out: Vec<Projector> = Vec::new();
    for (i, j) in g.edges() {
        if covered[i * n + j] {
            continue;
        }
        let d = projectors[i].dim();
        if projectors[i].rank() + projectors[j].rank() >= d {
            continue;
        }
        let m = identity(d) - projectors[i].matrix() - projectors[j].matrix();
        let p = Projector::new(m)?;
        if !contains(projectors, &p) && !contains(&out, &p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// The set followed by everything completion adds, repeated until nothing
/// new appears.
pub fn complete_ks(projectors: &[Projector]) -> Result<Vec<Projector>> {
    let mut cur = projectors.to_vec();
    loop {
        let add = completion_additions(&cur)?;
        if add.is_empty() {
            return Ok(cur);
        }
        cur.extend(add);
        if cur.len() > COMPLETION_LIMIT {
            return Err(Error::SizeLimit(format!("completion exceeded {COMPLETION_LIMIT} projectors")));
        }
    }
}

pub fn is_complete(projectors: &[Projector]) -> Result<bool> {
    Ok(completion_additions(projectors)?.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_vectors;
    use crate::qcore::{projector_from_ket, Ket};

    fn verdict(name: &str) -> bool {
        ks_assignments(&KsInstance::from_set(&builtin_vectors(name).unwrap())).is_sat()
    }

    #[test]
    fn catalog_verdicts() {
        assert!(verdict("bbc21"));
        assert!(verdict("yo13"));
        for name in ["ceg18", "peres24", "peres33", "peres39"] {
            assert!(!verdict(name), "{name}");
        }
    }

    #[test]
    fn sat_assignments_verify() {
        for name in ["bbc21", "yo13"] {
            let inst = KsInstance::from_set(&builtin_vectors(name).unwrap());
            match ks_assignments(&inst) {
                KsResult::Sat(a) => assert!(inst.verify(&a)),
                KsResult::Unsat => panic!("{name}"),
            }
        }
    }

    #[test]
    fn ceg18_matches_exhaustive_search() {
        let inst = KsInstance::from_set(&builtin_vectors("ceg18").unwrap());
        assert_eq!(ks_brute_force(&inst).unwrap(), KsResult::Unsat);
    }

    #[test]
    fn completeness() {
        let p24 = builtin_vectors("peres24").unwrap().projectors();
        assert!(is_complete(&p24).unwrap());
        assert_eq!(complete_ks(&p24).unwrap().len(), 24);
        let ceg = builtin_vectors("ceg18").unwrap().projectors();
        let add = completion_additions(&ceg).unwrap();
        assert!(!add.is_empty());
        assert!(add.iter().all(|p| p.rank() == 2));
        assert!(!is_complete(&builtin_vectors("peres33").unwrap().projectors()).unwrap());
        let once = complete_ks(&ceg).unwrap();
        assert_eq!(complete_ks(&once).unwrap().len(), once.len());
    }

    #[test]
    fn trivial_sets() {
        let basis: Vec<Projector> = (0..3).map(|i| projector_from_ket(&Ket::basis(3, i))).collect();
        assert!(is_complete(&basis).unwrap());
        let lone = vec![projector_from_ket(&Ket::from_real(&[1.0, 1.0, 0.0]).unwrap())];
        assert_eq!(complete_ks(&lone).unwrap().len(), 1);
    }
}
