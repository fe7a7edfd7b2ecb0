//! Derived realizations: the Peres-24 dimension ladder, the inequivalent
//! Peres-33 realization, block embeddings and seeded perturbations.

use num_rational::Rational64;

use crate::catalog::{builtin_vectors, SymbolicEntry, VectorSet, Weight, WitnessKind, PERES33_YO13_COPIES};
use crate::graphcore::{basis_cliques_of_kets, orthogonality_graph, GRAPH_TOL};
use crate::qcore::{conj, dsum, expi_hermitian, identity, rand_hermitian_unit, rng, tensor, Ket, Projector};
use crate::witness::clique_frequencies;
use crate::{Error, Result};

/// Collinearity threshold used when merging lifted copies.
pub const COLLINEAR_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Lift {
    pub set: VectorSet,
    /// For each output vector, every `(copy, Peres-24 index)` that produced it.
    pub sources: Vec<Vec<(usize, usize)>>,
}

impl Lift {
    /// Pairs of sources merged into one vector, as `((copy, index), (copy, index))`.
    pub fn identifications(&self) -> Vec<((usize, usize), (usize, usize))> {
        self.sources
            .iter()
            .filter(|s| s.len() > 1)
            .flat_map(|s| s[1..].iter().map(move |&b| (s[0], b)))
            .collect()
    }
}

fn collinear(a: &Ket, b: &Ket) -> bool {
    let ov = a.overlap(b).norm();
    let na = a.overlap(a).re.sqrt();
    let nb = b.overlap(b).re.sqrt();
    (1.0 - ov / (na * nb)).abs() <= COLLINEAR_TOL
}

/// `d - 3` copies of Peres-24, copy `k` on coordinates `k..k+4`, merged up to
/// collinearity. Weights are size-`d` basis-clique frequencies.
pub fn lift_peres(d: usize) -> Result<Lift> {
    if d < 4 {
        return Err(Error::InvalidInput(format!("lift needs d >= 4, got {d}")));
    }
    let base = builtin_vectors("peres24")?;
    if d == 4 {
        let sources = (0..base.len()).map(|i| vec![(0, i)]).collect();
        return Ok(Lift { set: base, sources });
    }
    let zero = SymbolicEntry::int(0);
    let mut vectors: Vec<Vec<SymbolicEntry>> = Vec::new();
    let mut kets: Vec<Ket> = Vec::new();
    let mut sources: Vec<Vec<(usize, usize)>> = Vec::new();
    for k in 0..d - 3 {
        for (i, v) in base.vectors.iter().enumerate() {
            let mut w = vec![zero.clone(); d];
            w[k..k + 4].clone_from_slice(v);
            let ket = Ket::new(w.iter().map(|e| e.value()).collect())?;
            match kets.iter().position(|x| collinear(x, &ket)) {
                Some(p) => sources[p].push((k, i)),
                None => {
                    vectors.push(w);
                    kets.push(ket);
                    sources.push(vec![(k, i)]);
                }
            }
        }
    }
    let g = orthogonality_graph(&kets, GRAPH_TOL);
    let cliques: Vec<Vec<usize>> = basis_cliques_of_kets(&kets, &g)
        .into_iter()
        .filter(|c| c.len() == d)
        .collect();
    let m = cliques.len() as i64;
    let weights = clique_frequencies(kets.len(), &cliques).into_iter().map(Weight).collect();
    let set = VectorSet {
        name: format!("peres24-lift{d}"),
        dim: d,
        vectors,
        weights,
        edge_weight_rule: Default::default(),
        extra_constraints: vec![],
        witness: WitnessKind::CliqueSum,
        metadata: Some(crate::catalog::Metadata {
            expected_q: Weight(Rational64::from_integer(m)),
            expected_alpha: -1,
            is_ks_expected: true,
            is_complete_ks_expected: false,
            cfr_capable: crate::catalog::CfrCapable::Yes,
        }),
    };
    Ok(Lift { set, sources })
}

/// `w_i` = number of size-`dim` basis cliques containing `i`.
pub fn clique_frequency_weights(set: &VectorSet) -> Vec<Rational64> {
    let kets = set.kets();
    let g = orthogonality_graph(&kets, GRAPH_TOL);
    let cliques: Vec<Vec<usize>> = basis_cliques_of_kets(&kets, &g)
        .into_iter()
        .filter(|c| c.len() == set.dim)
        .collect();
    clique_frequencies(kets.len(), &cliques)
}

/// Peres-33 with the third component multiplied by `i` on the second YO-13
/// copy and the second component by `-i` on the third, the shared vectors
/// `v_1, v_2, v_3` untouched.
pub fn peres33_alternate() -> Result<VectorSet> {
    let mut set = builtin_vectors("peres33")?;
    let shared = [0usize, 1, 2];
    for &i in PERES33_YO13_COPIES[1].iter().filter(|i| !shared.contains(i)) {
        set.vectors[i][2] = set.vectors[i][2].times_i();
    }
    for &i in PERES33_YO13_COPIES[2].iter().filter(|i| !shared.contains(i)) {
        set.vectors[i][1] = set.vectors[i][1].times_i().neg();
    }
    set.name = "peres33-alt".into();
    Ok(set)
}

/// `Pi_i (x) 1_{d1} (+) conj(Pi_i) (x) 1_{d2}`.
pub fn embed_realization(projectors: &[Projector], d1: usize, d2: usize) -> Result<Vec<Projector>> {
    if d1 + d2 == 0 {
        return Err(Error::InvalidInput("embedding needs d1 + d2 >= 1".into()));
    }
    projectors
        .iter()
        .map(|p| {
            let a = tensor(p.matrix(), &identity(d1));
            let b = tensor(&conj(p.matrix()), &identity(d2));
            let m = match (d1, d2) {
                (0, _) => b,
                (_, 0) => a,
                _ => dsum(&a, &b),
            };
            Projector::new(m)
        })
        .collect()
}

/// Each projector conjugated by its own `exp(i sigma H)`, `H` a seeded random
/// Hermitian matrix of unit spectral norm.
pub fn perturb_realization(projectors: &[Projector], sigma: f64, seed: u64) -> Result<Vec<Projector>> {
    if sigma < 0.0 {
        return Err(Error::InvalidInput("perturbation magnitude must be >= 0".into()));
    }
    let mut r = rng(seed);
    Ok(projectors
        .iter()
        .map(|p| {
            let h = rand_hermitian_unit(&mut r, p.dim());
            if sigma == 0.0 {
                p.clone()
            } else {
                p.conjugate_by(&expi_hermitian(&h, sigma))
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::projector_graph;
    use crate::kscolor::{ks_assignments, KsInstance};
    use crate::qcore::{max_abs, rand_state, StateKind};
    use crate::witness::{default_witness, quantum_value, state_independence_scan};

    #[test]
    fn lift_to_five_is_peres39() {
        let l = lift_peres(5).unwrap();
        assert_eq!(l.set.len(), 39);
        let ids = l.identifications();
        assert_eq!(ids.len(), 9);
        // mu_2 = nu_1 and mu_15 = nu_23 (1-based).
        assert!(ids.contains(&((0, 1), (1, 0))));
        assert!(ids.contains(&((0, 14), (1, 22))));
        let p39 = builtin_vectors("peres39").unwrap();
        let ours = l.set.kets();
        for k in p39.kets() {
            let pos = ours.iter().position(|x| collinear(x, &k)).expect("vector of the table");
            let w_ours = l.set.weights[pos].0;
            let w_table = p39.weights[p39.kets().iter().position(|x| collinear(x, &k)).unwrap()].0;
            assert_eq!(w_ours, w_table);
        }
        assert_eq!(l.set.weight_sum(), Rational64::from_integer(250));
    }

    #[test]
    fn peres39_frequencies_match_table() {
        let p39 = builtin_vectors("peres39").unwrap();
        assert_eq!(clique_frequency_weights(&p39), p39.weights_rational());
    }

    #[test]
    fn lifts_are_uncolorable_and_state_independent() {
        for d in [4, 5, 6] {
            let l = lift_peres(d).unwrap();
            assert!(!ks_assignments(&KsInstance::from_set(&l.set)).is_sat(), "d = {d}");
        }
        let l = lift_peres(5).unwrap();
        let w = default_witness(&l.set).unwrap();
        assert!(state_independence_scan(&l.set.projectors(), &w, 12, 2).unwrap() < 1e-9);
        assert!(lift_peres(3).is_err());
    }

    #[test]
    fn alternate_peres33() {
        let v = builtin_vectors("peres33").unwrap();
        let u = peres33_alternate().unwrap();
        let gv = orthogonality_graph(&v.kets(), GRAPH_TOL);
        let gu = orthogonality_graph(&u.kets(), GRAPH_TOL);
        assert_eq!(gv.edges(), gu.edges());
        for &i in &PERES33_YO13_COPIES[0] {
            assert_eq!(u.vectors[i], v.vectors[i]);
        }
    }

    #[test]
    fn embeddings() {
        let set = builtin_vectors("bbc21").unwrap();
        let p = set.projectors();
        let same = embed_realization(&p, 1, 0).unwrap();
        assert!(p.iter().zip(&same).all(|(a, b)| max_abs(&(a.matrix() - b.matrix())) == 0.0));
        let big = embed_realization(&p, 1, 2).unwrap();
        assert_eq!(big[0].dim(), 9);
        assert_eq!(projector_graph(&big, GRAPH_TOL).edges(), projector_graph(&p, GRAPH_TOL).edges());
        let w = default_witness(&set).unwrap();
        let rho = rand_state(5, StateKind::FullRank, 9);
        assert!((quantum_value(&w, &big, &rho).unwrap().value - 40.0).abs() < 1e-9);
    }

    #[test]
    fn perturbations() {
        let p = builtin_vectors("peres24").unwrap().projectors();
        let same = perturb_realization(&p, 0.0, 4).unwrap();
        assert!(p.iter().zip(&same).all(|(a, b)| max_abs(&(a.matrix() - b.matrix())) == 0.0));
        let q = perturb_realization(&p, 0.01, 4).unwrap();
        for x in &q {
            assert!(max_abs(&(x.matrix() * x.matrix() - x.matrix())) < 1e-12);
            assert_eq!(x.rank(), 1);
        }
    }
}
