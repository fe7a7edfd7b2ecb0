//! Unitary and antiunitary equivalence of realizations, and the alignment
//! isometry that maps a candidate onto `Pi_i (x) 1_{d1} (+) conj(Pi_i) (x) 1_{d2}`.
//!
//! The alignment follows the constructive uniqueness argument numerically:
//! the ranges of a complete basis clique fix a block coordinate system, the
//! per-block gauge freedom is removed along a spanning tree of blocks, and the
//! leftover common unitary is split into its plain and conjugate parts from
//! the kernels of two positive matrices built from all the blocks.

use std::collections::VecDeque;

use crate::catalog::VectorSet;
use crate::graphcore::{basis_cliques_of_kets, orthogonality_graph, CompatGraph, GRAPH_TOL};
use crate::qcore::{c, conj, dsum, eig_hermitian, max_abs, numeric_rank, tensor, identity, CMat, CVec, Ket, Projector, C64};
use crate::{Error, Result};

/// Eigenvalue threshold for numerical ranks.
pub const RANK_THRESHOLD: f64 = 1e-7;
/// Rounding applied to `|<v_i|v_j>|` before comparing profiles.
pub const PROFILE_ROUND: f64 = 1e-8;
/// Residual below which an alignment counts as exact.
pub const EQUIV_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct InvariantProfile {
    /// `|<v_i|v_j>|` for `i < j`, in pair order (rounded).
    pub gram_pairs: Vec<f64>,
    /// The same values sorted.
    pub gram_abs: Vec<f64>,
    /// `<v_i|v_j><v_j|v_k><v_k|v_i>` for `i < j < k`, in triple order.
    pub bargmann: Vec<((usize, usize, usize), C64)>,
}

fn round(x: f64) -> f64 {
    (x / PROFILE_ROUND).round() * PROFILE_ROUND
}

pub fn invariant_profile(kets: &[Ket]) -> Result<InvariantProfile> {
    if kets.len() < 2 {
        return Err(Error::InvalidInput("profile needs at least two vectors".into()));
    }
    let v: Vec<CVec> = kets.iter().map(|k| k.normalized()).collect();
    let n = v.len();
    let ip = |a: usize, b: usize| v[a].dotc(&v[b]);
    let mut gram_pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            gram_pairs.push(round(ip(i, j).norm()));
        }
    }
    let mut gram_abs = gram_pairs.clone();
    gram_abs.sort_by(f64::total_cmp);
    let mut bargmann = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                bargmann.push(((i, j, k), ip(i, j) * ip(j, k) * ip(k, i)));
            }
        }
    }
    Ok(InvariantProfile {
        gram_pairs,
        gram_abs,
        bargmann,
    })
}

fn bargmann_distance(a: &InvariantProfile, b: &InvariantProfile, conjugate: bool) -> f64 {
    a.bargmann
        .iter()
        .zip(&b.bargmann)
        .map(|((_, x), (_, y))| if conjugate { (x.conj() - y).norm() } else { (x - y).norm() })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RankViolation {
    /// `rank(Pi_j Pi_i Pi_j) < rank(Pi_j)` on a non-edge.
    Product { i: usize, j: usize, rank: usize, expected: usize },
    /// A projector whose rank differs from the first one's.
    Rank { i: usize, rank: usize, kappa: usize },
}

impl std::fmt::Display for RankViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RankViolation::Product { i, j, rank, expected } => {
                write!(f, "rank(P{j} P{i} P{j}) = {rank}, expected {expected}")
            }
            RankViolation::Rank { i, rank, kappa } => write!(f, "rank(P{i}) = {rank}, expected {kappa}"),
        }
    }
}

/// Checks that every projector has the same rank `kappa` and that
/// `rank(Pi_j Pi_i Pi_j) = rank(Pi_j)` on every non-edge of `g`.
pub fn rank_conditions(projectors: &[Projector], g: &CompatGraph) -> std::result::Result<usize, RankViolation> {
    let ranks: Vec<usize> = projectors
        .iter()
        .map(|p| numeric_rank(p.matrix(), RANK_THRESHOLD))
        .collect();
    let kappa = ranks.first().copied().unwrap_or(0);
    if let Some(i) = ranks.iter().position(|&r| r != kappa) {
        return Err(RankViolation::Rank {
            i,
            rank: ranks[i],
            kappa,
        });
    }
    let n = projectors.len();
    for i in 0..n {
        for j in 0..n {
            if i == j || g.is_edge(i, j) {
                continue;
            }
            let pj = projectors[j].matrix();
            let m = pj * projectors[i].matrix() * pj;
            let r = numeric_rank(&m, RANK_THRESHOLD);
            if r != ranks[j] {
                return Err(RankViolation::Product {
                    i,
                    j,
                    rank: r,
                    expected: ranks[j],
                });
            }
        }
    }
    Ok(kappa)
}

#[derive(Clone, Debug)]
pub struct AlignmentResult {
    pub u: CMat,
    pub split: (usize, usize),
    pub kappa: usize,
    pub residual: f64,
    /// The basis clique used as block coordinates.
    pub basis: Vec<usize>,
    /// `L_i`: the range of each candidate in the aligned block coordinates
    /// (`kappa x D`).
    pub l_blocks: Vec<CMat>,
}

/// Unitary factor of the polar decomposition.
fn polar(m: &CMat) -> CMat {
    let svd = m.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// The ideal block projectors `Pi (x) 1_{d1} (+) conj(Pi) (x) 1_{d2}`.
pub fn target_projectors(reference: &[Ket], d1: usize, d2: usize) -> Vec<CMat> {
    reference
        .iter()
        .map(|k| {
            let v = k.normalized();
            let p = &v * v.adjoint();
            let a = tensor(&p, &identity(d1));
            let b = tensor(&conj(&p), &identity(d2));
            match (d1, d2) {
                (_, 0) => a,
                (0, _) => b,
                _ => dsum(&a, &b),
            }
        })
        .collect()
}

pub fn align(candidate: &[Projector], reference: &VectorSet) -> Result<AlignmentResult> {
    align_kets(candidate, &reference.kets())
}

pub fn align_kets(candidate: &[Projector], reference: &[Ket]) -> Result<AlignmentResult> {
    let n = reference.len();
    if candidate.len() != n || n == 0 {
        return Err(Error::Alignment(format!(
            "{} candidate projectors for {n} reference vectors",
            candidate.len()
        )));
    }
    let d = reference[0].dim();
    let big = candidate[0].dim();
    if !big.is_multiple_of(d) || candidate.iter().any(|p| p.dim() != big) {
        return Err(Error::Alignment(format!("dimension {big} is not a multiple of {d}")));
    }
    let kappa = big / d;
    if let Some(i) = candidate.iter().position(|p| p.rank() != kappa) {
        return Err(Error::Alignment(format!(
            "projector {i} has rank {}, expected {kappa}",
            candidate[i].rank()
        )));
    }
    let g = orthogonality_graph(reference, GRAPH_TOL);
    let basis = basis_cliques_of_kets(reference, &g)
        .into_iter()
        .next()
        .ok_or_else(|| Error::Alignment("no complete basis clique".into()))?;

    // Reference components in the basis clique.
    let v: Vec<CVec> = reference.iter().map(|k| k.normalized()).collect();
    let b: Vec<&CVec> = basis.iter().map(|&t| &v[t]).collect();
    let comp: Vec<Vec<C64>> = v.iter().map(|vi| b.iter().map(|bt| bt.dotc(vi)).collect()).collect();

    // Spanning tree over blocks: (parent, child, vertex linking them).
    let mut tree = Vec::new();
    let mut seen = vec![false; d];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(p) = queue.pop_front() {
        for s in 0..d {
            if seen[s] {
                continue;
            }
            let best = (0..n)
                .map(|i| (i, (comp[i][p] * comp[i][s].conj()).norm()))
                .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)))
                .unwrap();
            if best.1 > 1e-6 {
                seen[s] = true;
                tree.push((p, s, best.0));
                queue.push_back(s);
            }
        }
    }
    if seen.iter().any(|&x| !x) {
        return Err(Error::Alignment("blocks of the basis clique are not linked".into()));
    }

    // Reference gauge: phases making the tree entries real and positive.
    let mut theta = vec![c(1.0, 0.0); d];
    for &(p, s, i) in &tree {
        let z = comp[i][p] * comp[i][s].conj();
        theta[s] = theta[p] * z.conj() / z.norm();
    }
    let r = |i: usize, t: usize, s: usize| theta[t].conj() * theta[s] * comp[i][t] * comp[i][s].conj();

    // Candidate block coordinates from the basis clique ranges.
    let mut w = CMat::zeros(big, big);
    for (t, &ct) in basis.iter().enumerate() {
        let e = candidate[ct].range_basis();
        w.view_mut((0, t * kappa), (big, kappa)).copy_from(&e);
    }
    let w = polar(&w);
    let e: Vec<CMat> = (0..d).map(|t| w.columns(t * kappa, kappa).into_owned()).collect();
    let block = |i: usize, t: usize, s: usize| e[t].adjoint() * candidate[i].matrix() * &e[s];

    let mut gauge = vec![identity(kappa); d];
    for &(p, s, i) in &tree {
        let m = gauge[p].adjoint() * block(i, p, s);
        gauge[s] = polar(&m).adjoint();
    }

    // Kernels of S1 = sum |K - r|^2 and S2 = sum |K - conj r|^2 separate the
    // plain and conjugate summands.
    let mut diff = CMat::zeros(kappa, kappa);
    let mut weight = 0.0;
    let id = identity(kappa);
    for i in 0..n {
        for t in 0..d {
            for s in 0..d {
                let k = gauge[t].adjoint() * block(i, t, s) * &gauge[s];
                let z = r(i, t, s);
                let a = &k - &id * z;
                let bb = &k - &id * z.conj();
                diff += a.adjoint() * a - bb.adjoint() * bb;
                weight += (z - z.conj()).norm_sqr();
            }
        }
    }
    let diff = (&diff + diff.adjoint()) * c(0.5, 0.0);
    let (vals, vecs) = eig_hermitian(&diff)?;
    let plain: Vec<usize> = if weight < 1e-12 {
        (0..kappa).collect()
    } else {
        (0..kappa).filter(|&a| vals[a] <= 0.0).collect()
    };
    let conj_part: Vec<usize> = (0..kappa).filter(|a| !plain.contains(a)).collect();
    let (d1, d2) = (plain.len(), conj_part.len());
    let order: Vec<usize> = plain.iter().chain(&conj_part).copied().collect();
    let y = CMat::from_fn(kappa, kappa, |row, col| vecs[(row, order[col])]);

    // U maps each aligned candidate column to its target basis vector.
    let mut u = CMat::zeros(big, big);
    for t in 0..d {
        let bt: CVec = b[t] * theta[t];
        let cols = &e[t] * &gauge[t] * &y;
        for a in 0..kappa {
            let mut target = CVec::zeros(big);
            if a < d1 {
                for k in 0..d {
                    target[k * d1 + a] = bt[k];
                }
            } else {
                for k in 0..d {
                    target[d * d1 + k * d2 + (a - d1)] = bt[k].conj();
                }
            }
            u += target * cols.column(a).adjoint();
        }
    }
    let targets = target_projectors(reference, d1, d2);
    let residual = candidate
        .iter()
        .zip(&targets)
        .map(|(p, tp)| max_abs(&(&u * p.matrix() * u.adjoint() - tp)))
        .fold(0.0, f64::max);
    let aligned = u.adjoint();
    let l_blocks = candidate
        .iter()
        .map(|p| p.range_basis().adjoint() * &aligned)
        .collect();
    Ok(AlignmentResult {
        u,
        split: (d1, d2),
        kappa,
        residual,
        basis,
        l_blocks,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Equivalence {
    Unitary,
    Antiunitary,
    Inequivalent,
}

/// Decides how `a` relates to `b` with vertices matched by position: the
/// `|Gram|` pattern must agree, the Bargmann invariants must agree directly
/// (unitary) or after conjugation (antiunitary), and the alignment must
/// confirm it.
pub fn equivalent(a: &[Ket], b: &[Ket]) -> Result<Equivalence> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput("sets differ in size".into()));
    }
    if a.first().map(|k| k.dim()) != b.first().map(|k| k.dim()) {
        return Ok(Equivalence::Inequivalent);
    }
    let pa = invariant_profile(a)?;
    let pb = invariant_profile(b)?;
    let close = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(p, q)| (p - q).abs() <= 10.0 * PROFILE_ROUND);
    if !close(&pa.gram_pairs, &pb.gram_pairs) {
        return Ok(Equivalence::Inequivalent);
    }
    let proj: Vec<Projector> = a.iter().map(crate::qcore::projector_from_ket).collect();
    if bargmann_distance(&pa, &pb, false) <= 1e-8 {
        if let Ok(r) = align_kets(&proj, b) {
            if r.residual <= EQUIV_TOL {
                return Ok(Equivalence::Unitary);
            }
        }
    }
    if bargmann_distance(&pa, &pb, true) <= 1e-8 {
        let conj_proj: Vec<Projector> = proj.iter().map(|p| p.conj()).collect();
        if let Ok(r) = align_kets(&conj_proj, b) {
            if r.residual <= EQUIV_TOL {
                return Ok(Equivalence::Antiunitary);
            }
        }
    }
    Ok(Equivalence::Inequivalent)
}
