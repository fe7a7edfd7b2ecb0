//! Witnesses: construction, quantum and noncontextual values, the exclusivity
//! bound and state-independence scans.

use std::collections::BTreeMap;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::catalog::{ObservableSet, VectorSet, WitnessKind, PM_CONTEXTS};
use crate::graphcore::{
    basis_cliques, independence_number, maximal_cliques, orthogonality_graph, projector_graph, CompatGraph,
    GRAPH_TOL,
};
use crate::kscolor;
use crate::qcore::{c, identity, max_abs, rand_state, sequential_prob, CMat, DensityState, Projector, StateKind};
use crate::sdpsolve::lovasz_theta;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessForm {
    /// `sum w_i P_i - sum_E w_ij P_ij`
    Pairwise,
    /// The Peres-Mermin combination of six context correlators.
    Pm,
    /// `sum_C sum_{i in C} P_i` over a clique family.
    CliqueSum,
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub form: WitnessForm,
    /// Carries the vertex weights `w_i`; for the clique-sum form these are the
    /// clique frequencies.
    pub graph: CompatGraph,
    /// `w_ij` keyed by `(i, j)` with `i < j`; empty unless pairwise.
    pub edge_weights: BTreeMap<(usize, usize), Rational64>,
    pub cliques: Vec<Vec<usize>>,
    /// The value every ideal realization attains on every state.
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct WitnessValue {
    pub value: f64,
    pub vertex_term: f64,
    pub edge_term: f64,
    /// Largest `|P(i then j) - P(j then i)|` over the edges.
    pub order_asymmetry: f64,
}

impl Witness {
    /// Pairwise witness on `g` with `w_ij` from `rule`.
    pub fn pairwise(g: CompatGraph, rule: crate::catalog::EdgeWeightRule, q: f64) -> Witness {
        let w = g.weights().to_vec();
        let edge_weights = g.edges().into_iter().map(|(i, j)| ((i, j), rule.apply(w[i], w[j]))).collect();
        Witness {
            form: WitnessForm::Pairwise,
            graph: g,
            edge_weights,
            cliques: vec![],
            q,
        }
    }

    /// Clique-sum witness; vertex weights become clique frequencies and the
    /// ideal value is the number of cliques.
    pub fn clique_sum(g: CompatGraph, cliques: Vec<Vec<usize>>) -> Witness {
        let w = clique_frequencies(g.n(), &cliques);
        let q = cliques.len() as f64;
        Witness {
            form: WitnessForm::CliqueSum,
            graph: g.with_weights(w).expect("one frequency per vertex"),
            edge_weights: BTreeMap::new(),
            cliques,
            q,
        }
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn edge_weight_sum(&self) -> Rational64 {
        self.edge_weights.values().fold(Rational64::zero(), |a, &b| a + b)
    }
}

/// Number of cliques containing each vertex.
pub fn clique_frequencies(n: usize, cliques: &[Vec<usize>]) -> Vec<Rational64> {
    let mut w = vec![0i64; n];
    for cl in cliques {
        for &i in cl {
            w[i] += 1;
        }
    }
    w.into_iter().map(Rational64::from_integer).collect()
}

/// The witness a set is published with.
pub fn default_witness(set: &VectorSet) -> Result<Witness> {
    set.validate()?;
    let g = orthogonality_graph(&set.kets(), GRAPH_TOL).with_weights(set.weights_rational())?;
    match set.witness {
        WitnessKind::Pairwise => {
            let q = set
                .expected_q()
                .unwrap_or_else(|| set.weight_sum().to_f64().unwrap() / set.dim as f64);
            Ok(Witness::pairwise(g, set.edge_weight_rule, q))
        }
        WitnessKind::CliqueSum => {
            let cliques: Vec<Vec<usize>> = maximal_cliques(&g).into_iter().filter(|c| c.len() == set.dim).collect();
            Ok(Witness::clique_sum(g, cliques))
        }
    }
}

/// The PM witness over the nine observables, compatibility inside contexts.
pub fn pm_witness() -> Witness {
    let mut g = CompatGraph::empty(9);
    for (ctx, _) in PM_CONTEXTS {
        for a in 0..3 {
            for b in a + 1..3 {
                g.add_edge(ctx[a], ctx[b]);
            }
        }
    }
    Witness {
        form: WitnessForm::Pm,
        graph: g,
        edge_weights: BTreeMap::new(),
        cliques: PM_CONTEXTS.iter().map(|(c, _)| c.to_vec()).collect(),
        q: 6.0,
    }
}

/// Noncontextual bound: the weighted independence number, or for the PM form
/// the best +-1 assignment.
pub fn nc_bound(w: &Witness) -> Result<Rational64> {
    match w.form {
        WitnessForm::Pairwise | WitnessForm::CliqueSum => Ok(independence_number(&w.graph)?.value),
        WitnessForm::Pm => {
            let mut best = i64::MIN;
            for mask in 0u32..1 << 9 {
                let v = |k: usize| if mask >> k & 1 == 1 { -1i64 } else { 1 };
                let s: i64 = PM_CONTEXTS
                    .iter()
                    .map(|(ctx, sign)| *sign as i64 * ctx.iter().map(|&k| v(k)).product::<i64>())
                    .sum();
                best = best.max(s);
            }
            Ok(Rational64::from_integer(best))
        }
    }
}

fn check_dims(w: &Witness, projectors: &[Projector], rho: &DensityState) -> Result<()> {
    if projectors.len() != w.n() {
        return Err(Error::DimMismatch {
            expected: w.n(),
            found: projectors.len(),
        });
    }
    for p in projectors {
        if p.dim() != rho.dim() {
            return Err(Error::DimMismatch {
                expected: rho.dim(),
                found: p.dim(),
            });
        }
    }
    Ok(())
}

/// Value of a pairwise or clique-sum witness on `rho`. Pair terms use the
/// Lüders sequence in listed order (`i` then `j` for `i < j`).
pub fn quantum_value(w: &Witness, projectors: &[Projector], rho: &DensityState) -> Result<WitnessValue> {
    if w.form == WitnessForm::Pm {
        return Err(Error::Unsupported("use pm_value for the PM witness".into()));
    }
    check_dims(w, projectors, rho)?;
    let r = rho.matrix();
    let wf = w.graph.weights_f64();
    let vertex_term: f64 = projectors.iter().zip(&wf).map(|(p, wi)| wi * rho.expect(p.matrix())).sum();
    let mut edge_term = 0.0;
    let mut order_asymmetry: f64 = 0.0;
    for (&(i, j), wij) in &w.edge_weights {
        let (a, b) = (projectors[i].matrix(), projectors[j].matrix());
        let pij = sequential_prob(r, a, b);
        let pji = sequential_prob(r, b, a);
        edge_term += wij.to_f64().unwrap() * pij;
        order_asymmetry = order_asymmetry.max((pij - pji).abs());
    }
    Ok(WitnessValue {
        value: vertex_term - edge_term,
        vertex_term,
        edge_term,
        order_asymmetry,
    })
}

/// `Q = sum w / d` and `||sum w_i Pi_i - Q 1||_inf`.
pub fn egalitarian_check(set: &VectorSet) -> (f64, f64) {
    let q = set.weight_sum().to_f64().unwrap() / set.dim as f64;
    let s = weighted_sum(&set.projectors(), &set.weights_f64());
    (q, max_abs(&(s - identity(set.dim) * c(q, 0.0))))
}

pub fn weighted_sum(projectors: &[Projector], w: &[f64]) -> CMat {
    let d = projectors.first().map_or(0, |p| p.dim());
    projectors
        .iter()
        .zip(w)
        .fold(CMat::zeros(d, d), |acc, (p, &wi)| acc + p.matrix() * c(wi, 0.0))
}

/// `<ABC> + <abc> + <alpha beta gamma> + <A a alpha> + <B b beta> - <C c gamma>`.
pub fn pm_value(obs: &ObservableSet, rho: &DensityState) -> Result<f64> {
    if obs.operators.len() != 9 {
        return Err(Error::InvalidInput("a PM square has nine observables".into()));
    }
    if obs.dim != rho.dim() {
        return Err(Error::DimMismatch {
            expected: obs.dim,
            found: rho.dim(),
        });
    }
    Ok(PM_CONTEXTS
        .iter()
        .map(|(ctx, sign)| {
            let prod = &obs.operators[ctx[0]] * &obs.operators[ctx[1]] * &obs.operators[ctx[2]];
            *sign as f64 * rho.expect(&prod)
        })
        .sum())
}

/// Witness of a complete KS set: `w_i` counts the basis cliques containing
/// `i`, and `m` is the number of basis cliques.
pub fn ks_witness(projectors: &[Projector]) -> Result<(Witness, usize)> {
    let added = kscolor::completion_additions(projectors)?;
    if !added.is_empty() {
        return Err(Error::NotComplete(format!("{} projectors missing", added.len())));
    }
    let g = projector_graph(projectors, GRAPH_TOL);
    let bases = basis_cliques(projectors, &g);
    let m = bases.len();
    let w = clique_frequencies(projectors.len(), &bases);
    let wf: Vec<f64> = w.iter().map(|x| x.to_f64().unwrap()).collect();
    let d = projectors.first().map_or(0, |p| p.dim());
    let defect = max_abs(&(weighted_sum(projectors, &wf) - identity(d) * c(m as f64, 0.0)));
    if defect > 1e-9 {
        return Err(Error::NotComplete(format!("weighted sum differs from m * 1 by {defect:.3e}")));
    }
    Ok((Witness::clique_sum(g, bases), m))
}

/// Vertex layout of the exclusivity graph: `(1|i)` events first, then for
/// each edge the events `(00|ij)`, `(01|ij)`, `(10|ij)`.
#[derive(Clone, Debug)]
pub struct ExclusivityGraph {
    pub graph: CompatGraph,
    /// Per vertex: the measurements it involves with their outcomes.
    pub events: Vec<Vec<(usize, u8)>>,
}

/// Events are adjacent when some measurement they share gets different
/// outcomes.
pub fn exclusivity_graph(w: &Witness) -> Result<ExclusivityGraph> {
    if w.form != WitnessForm::Pairwise {
        return Err(Error::Unsupported("exclusivity bound needs a pairwise witness".into()));
    }
    let mut events: Vec<Vec<(usize, u8)>> = (0..w.n()).map(|i| vec![(i, 1)]).collect();
    let mut weights: Vec<Rational64> = w.graph.weights().to_vec();
    for (&(i, j), &wij) in &w.edge_weights {
        for (a, b) in [(0, 0), (0, 1), (1, 0)] {
            events.push(vec![(i, a), (j, b)]);
            weights.push(wij);
        }
    }
    let n = events.len();
    let mut g = CompatGraph::empty(n);
    for a in 0..n {
        for b in a + 1..n {
            let clash = events[a]
                .iter()
                .any(|&(m, o)| events[b].iter().any(|&(m2, o2)| m == m2 && o != o2));
            if clash {
                g.add_edge(a, b);
            }
        }
    }
    Ok(ExclusivityGraph {
        graph: g.with_weights(weights)?,
        events,
    })
}

/// `theta(G', w') - sum w_ij`.
pub fn exclusivity_bound(w: &Witness) -> Result<f64> {
    let eg = exclusivity_graph(w)?;
    Ok(lovasz_theta(&eg.graph)? - w.edge_weight_sum().to_f64().unwrap())
}

/// Kind of the `t`-th scan state: pure, full rank, maximally mixed in turn.
pub fn scan_kind(t: usize) -> StateKind {
    match t % 3 {
        0 => StateKind::Pure,
        1 => StateKind::FullRank,
        _ => StateKind::MaxMixed,
    }
}

/// Largest `|W(rho) - Q|` over `trials` seeded states.
pub fn state_independence_scan(projectors: &[Projector], w: &Witness, trials: usize, seed: u64) -> Result<f64> {
    let d = projectors.first().map_or(0, |p| p.dim());
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let rho = rand_state(seed.wrapping_add(t as u64), scan_kind(t), d);
            quantum_value(w, projectors, &rho).map(|v| (v.value - w.q).abs())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Largest `|PM(rho) - 6|` over `trials` seeded states.
pub fn pm_scan(obs: &ObservableSet, trials: usize, seed: u64) -> Result<f64> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let rho = rand_state(seed.wrapping_add(t as u64), scan_kind(t), obs.dim);
            pm_value(obs, &rho).map(|v| (v - 6.0).abs())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}
