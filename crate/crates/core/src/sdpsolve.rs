//! The semidefinite programs behind the witness bounds and the robustness
//! thresholds, built on the dense solver in `kscert_sdp`.
//!
//! Every program here lives on a Gram-type matrix `X` indexed by `0..=n`, with
//! row 0 standing for the state and rows `1..=n` for the projectors applied to
//! it. Vertex `k` of the graph is row `k + 1`.

use rayon::prelude::*;

use crate::catalog::VectorSet;
use crate::graphcore::{basis_cliques_of_kets, orthogonality_graph, CompatGraph, GRAPH_TOL};
use crate::sdp::{self, Coeff, SdpProblem, SdpSolution, Sense, Status};
use crate::{Error, Result};

pub const SDP_TOL: f64 = 1e-8;
pub const SDP_MAX_ITER: usize = 200;

/// Width at which the critical-noise bisections stop.
pub const BISECTION_WIDTH: f64 = 1e-4;

/// Whether `X` is real symmetric or complex Hermitian. Hermitian matrices are
/// carried by the real embedding `[[Re, -Im], [Im, Re]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Field {
    #[default]
    Real,
    Hermitian,
}

/// Linear functionals on the entries of a logical `N x N` matrix.
#[derive(Clone, Copy, Debug)]
struct Gram {
    n: usize,
    field: Field,
}

impl Gram {
    fn block_dim(&self) -> usize {
        match self.field {
            Field::Real => self.n,
            Field::Hermitian => 2 * self.n,
        }
    }

    fn re(&self, p: usize, q: usize) -> Coeff {
        match self.field {
            Field::Real => Coeff::entry(0, p, q, 1.0),
            Field::Hermitian => {
                let n = self.n;
                Coeff::entry(0, p, q, 0.5).with(0, n + p, n + q, 0.5)
            }
        }
    }

    fn im(&self, p: usize, q: usize) -> Option<Coeff> {
        match self.field {
            Field::Hermitian if p != q => {
                let n = self.n;
                Some(Coeff::entry(0, n + p, q, 0.5).with(0, p, n + q, -0.5))
            }
            _ => None,
        }
    }

    /// `|Re X_pq| <= eps` and `|Im X_pq| <= eps`; equalities when `eps == 0`.
    fn bound(&self, prob: &mut SdpProblem, p: usize, q: usize, eps: f64) {
        prob.add_box(self.re(p, q), -eps, eps);
        if let Some(im) = self.im(p, q) {
            prob.add_box(im, -eps, eps);
        }
    }

    /// `X_pq - X_rs = 0` on both parts.
    fn equal(&self, prob: &mut SdpProblem, (p, q): (usize, usize), (r, s): (usize, usize)) {
        prob.add_eq(sub(self.re(p, q), &self.re(r, s)), 0.0);
        match (self.im(p, q), self.im(r, s)) {
            (Some(a), Some(b)) => prob.add_eq(sub(a, &b), 0.0),
            (Some(a), None) | (None, Some(a)) => prob.add_eq(a, 0.0),
            (None, None) => {}
        }
    }

    #[cfg(test)]
    fn extract(&self, x: &nalgebra::DMatrix<f64>) -> crate::qcore::CMat {
        use crate::qcore::{c, CMat};
        let n = self.n;
        match self.field {
            Field::Real => CMat::from_fn(n, n, |p, q| c(x[(p, q)], 0.0)),
            Field::Hermitian => CMat::from_fn(n, n, |p, q| {
                c(
                    0.5 * (x[(p, q)] + x[(n + p, n + q)]),
                    0.5 * (x[(n + p, q)] - x[(p, n + q)]),
                )
            }),
        }
    }
}

/// Map from the full index space `0..=n` to rows of the reduced matrix.
#[derive(Clone, Debug)]
struct Layout {
    /// `None` marks a row forced to zero.
    rows: Vec<Option<usize>>,
    gram: Gram,
}

impl Layout {
    /// `Re X_pq` in full indices; `None` when the entry is identically zero.
    fn re(&self, p: usize, q: usize) -> Option<Coeff> {
        Some(self.gram.re(self.rows[p]?, self.rows[q]?))
    }
}

fn sub(mut a: Coeff, b: &Coeff) -> Coeff {
    for t in &b.terms {
        a.push(t.block, t.i, t.j, -t.v);
    }
    a
}

fn sum(parts: impl IntoIterator<Item = (Coeff, f64)>) -> Coeff {
    let mut out = Coeff::new();
    for (cf, s) in parts {
        for t in cf.terms {
            out.push(t.block, t.i, t.j, s * t.v);
        }
    }
    out
}

fn run(p: &SdpProblem) -> Result<SdpSolution> {
    let st = sdp::Settings { tol: SDP_TOL, max_iter: SDP_MAX_ITER, verbose: false };
    Ok(sdp::solve_with(p, &st)?)
}

/// The graph data the threshold programs need, taken from a vector set.
#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub graph: CompatGraph,
    pub weights: Vec<f64>,
    /// The quantum value the thresholds are measured from.
    pub q: f64,
    /// Groups of vertices whose probabilities sum to one (YO-13).
    pub extras: Vec<Vec<usize>>,
    /// The complete context used by the completeness function.
    pub context: Vec<usize>,
    pub field: Field,
}

impl Instance {
    /// Graph and weights of the set; `q` is the expected value from the
    /// metadata, or `sum w / d` when absent. The context is the first basis
    /// clique.
    pub fn from_set(set: &VectorSet) -> Result<Instance> {
        set.validate()?;
        let kets = set.kets();
        let graph = orthogonality_graph(&kets, GRAPH_TOL).with_weights(set.weights_rational())?;
        let weights = set.weights_f64();
        let q = set
            .expected_q()
            .unwrap_or_else(|| weights.iter().sum::<f64>() / set.dim as f64);
        let bases = basis_cliques_of_kets(&kets, &graph);
        let context = bases.first().cloned().unwrap_or_default();
        Ok(Instance {
            name: set.name.clone(),
            graph,
            weights,
            q,
            extras: set.extra_constraints.clone(),
            context,
            field: Field::Real,
        })
    }

    pub fn with_field(mut self, field: Field) -> Instance {
        self.field = field;
        self
    }

    pub fn with_context(mut self, context: Vec<usize>) -> Instance {
        self.context = context;
        self
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Ordered pairs `(i, j)`, `i != j`, that are not edges.
    pub fn ordered_non_edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && !self.graph.is_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Substitute the pins before building a program. Vertex `one` has
    /// `X_kk = X_0k = 1`, so its row equals the state row and is merged into
    /// it; vertices in `zero` have `X_kk = 0`, so their rows vanish. With
    /// `eps = 0` the neighbours of `one` vanish as well. Leaving these rows in
    /// would remove every strictly feasible point.
    fn layout(&self, eps: f64, one: Option<usize>, zero: &[usize]) -> Layout {
        let n = self.n();
        let mut dead = vec![false; n];
        for &k in zero {
            dead[k] = true;
        }
        if let (Some(i), true) = (one, eps == 0.0) {
            for t in self.graph.neighbors(i) {
                dead[t] = true;
            }
        }
        let mut rows = Vec::with_capacity(n + 1);
        rows.push(Some(0));
        let mut next = 1;
        for k in 0..n {
            if Some(k) == one {
                rows.push(Some(0));
            } else if dead[k] {
                rows.push(None);
            } else {
                rows.push(Some(next));
                next += 1;
            }
        }
        Layout {
            rows,
            gram: Gram {
                n: next,
                field: self.field,
            },
        }
    }

    /// `sum_k w_k X_kk` over the surviving rows.
    fn witness(&self, l: &Layout) -> Coeff {
        sum(self
            .weights
            .iter()
            .enumerate()
            .filter_map(|(k, &w)| l.re(k + 1, k + 1).map(|c| (c, w))))
    }

    /// `X_00 = 1`, `X_0k = X_kk`, `|X_kt| <= eps` on edges, and the
    /// normalization groups on the diagonal.
    fn base(&self, l: &Layout, eps: f64, sense: Sense) -> SdpProblem {
        let g = l.gram;
        let mut p = SdpProblem::new(vec![g.block_dim()], sense);
        p.add_eq(g.re(0, 0), 1.0);
        for r in 1..g.n {
            g.equal(&mut p, (0, r), (r, r));
        }
        for (a, b) in self.graph.edges() {
            if let (Some(r), Some(s)) = (l.rows[a + 1], l.rows[b + 1]) {
                g.bound(&mut p, r, s, eps);
            }
        }
        for e in &self.extras {
            p.add_eq(sum(e.iter().filter_map(|&k| l.re(k + 1, k + 1).map(|c| (c, 1.0)))), 1.0);
        }
        p
    }

    fn check_pair(&self, (i, j): (usize, usize)) -> Result<()> {
        let n = self.n();
        if i >= n || j >= n || i == j {
            return Err(Error::InvalidInput(format!("bad pair ({i}, {j})")));
        }
        if self.graph.is_edge(i, j) {
            return Err(Error::PairIsEdge(i, j));
        }
        Ok(())
    }
}

/// Weighted Lovász number: maximize `sum_ij sqrt(w_i w_j) X_ij` subject to
/// `tr X = 1`, `X_ij = 0` on edges and `X` PSD.
pub fn lovasz_theta(g: &CompatGraph) -> Result<f64> {
    let sol = run(&theta_problem(g))?;
    if usable(&sol) {
        Ok(sol.value)
    } else {
        Err(Error::Solver(format!("theta solve ended {:?}", sol.status)))
    }
}

pub fn theta_problem(g: &CompatGraph) -> SdpProblem {
    let n = g.n();
    let w = g.weights_f64();
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let mut p = SdpProblem::new(vec![n], Sense::Maximize);
    let mut obj = Coeff::new();
    let mut tr = Coeff::new();
    for i in 0..n {
        obj.push(0, i, i, w[i]);
        tr.push(0, i, i, 1.0);
        for j in i + 1..n {
            if g.is_edge(i, j) {
                p.add_eq(Coeff::entry(0, i, j, 1.0), 0.0);
            } else {
                obj.push(0, i, j, 2.0 * sw[i] * sw[j]);
            }
        }
    }
    p.objective = obj;
    p.add_eq(tr, 1.0);
    p
}

/// Feasibility of the Hermitian rank relaxation for the non-edge `(i, j)`:
/// `T_00 = 1`, `T_0k = T_kk`, `T_kl = 0` on edges, `T_0j = 1`, `T_0i = 0`,
/// `sum w_k T_0k = q`, plus the normalization groups.
pub fn rank_feasibility(inst: &Instance, q: f64, pair: (usize, usize)) -> Result<SdpSolution> {
    run(&rank_feasibility_problem(inst, q, pair)?)
}

pub fn rank_feasibility_problem(inst: &Instance, q: f64, pair: (usize, usize)) -> Result<SdpProblem> {
    inst.check_pair(pair)?;
    let h = Instance {
        field: Field::Hermitian,
        ..inst.clone()
    };
    let (i, j) = pair;
    let l = h.layout(0.0, Some(j), &[i]);
    let mut p = h.base(&l, 0.0, Sense::Minimize);
    p.add_eq(h.witness(&l), q);
    Ok(p)
}

/// Largest certificate violation allowed by [`rank_infeasible`].
pub const CERT_TOL: f64 = 1e-6;

/// Whether the rank relaxation of `pair` is infeasible at `q`, with the
/// infeasibility certificate checked against the problem.
pub fn rank_infeasible(inst: &Instance, q: f64, pair: (usize, usize)) -> Result<RankCheck> {
    let p = rank_feasibility_problem(inst, q, pair)?;
    let sol = run(&p)?;
    let violation = sol.certificate.as_ref().map(|c| sdp::verify_certificate(&p, c));
    Ok(RankCheck {
        infeasible: sol.status == Status::PrimalInfeasible && violation.is_some_and(|v| v <= CERT_TOL),
        status: sol.status,
        violation,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankCheck {
    pub status: Status,
    /// Verified certificate violation, when a certificate was produced.
    pub violation: Option<f64>,
    pub infeasible: bool,
}

/// Tolerance function: `min X_ij` subject to `sum w_k X_kk = theta`,
/// `X_kk = X_0k`, `X_ij >= 0`, `X_00 = X_0i = 1`, `|X_kt| <= eps` on edges.
pub fn tolerance_tau(inst: &Instance, theta: f64, eps: f64, pair: (usize, usize)) -> Result<SdpSolution> {
    inst.check_pair(pair)?;
    let (i, j) = pair;
    let l = inst.layout(eps, Some(i), &[]);
    let mut p = inst.base(&l, eps, Sense::Minimize);
    p.add_eq(inst.witness(&l), theta);
    // Row i is the state row, so X_ij = X_0j.
    let xij = l.re(0, j + 1).expect("a non-neighbour of i survives");
    p.add_box(xij.clone(), 0.0, f64::INFINITY);
    p.objective = xij;
    run(&p)
}

/// Completeness function: `min sum_{k in context} X_0k` subject to the same
/// constraints without the pinned row.
pub fn completeness_nu(inst: &Instance, theta: f64, eps: f64) -> Result<SdpSolution> {
    if inst.context.is_empty() {
        return Err(Error::InvalidInput("no complete context".into()));
    }
    let l = inst.layout(eps, None, &[]);
    let mut p = inst.base(&l, eps, Sense::Minimize);
    p.add_eq(inst.witness(&l), theta);
    p.objective = sum(inst.context.iter().filter_map(|&k| l.re(0, k + 1).map(|c| (c, 1.0))));
    run(&p)
}

/// Largest witness value compatible with `tau_ij = 0`: the maximum of
/// `sum w_k X_kk` with `X_ii = X_0i = 1` and `X_ij = 0`. Then
/// `tau_ij(theta, eps) > 0` exactly when `theta` exceeds it. `None` when no
/// such `X` exists.
pub fn tau_zero_level(inst: &Instance, eps: f64, pair: (usize, usize)) -> Result<Option<f64>> {
    inst.check_pair(pair)?;
    let (i, j) = pair;
    let l = inst.layout(eps, Some(i), &[j]);
    let mut p = inst.base(&l, eps, Sense::Maximize);
    p.objective = inst.witness(&l);
    level(run(&p)?)
}

/// Largest witness value compatible with `nu = 0` (the context never fires).
pub fn nu_zero_level(inst: &Instance, eps: f64) -> Result<Option<f64>> {
    if inst.context.is_empty() {
        return Err(Error::InvalidInput("no complete context".into()));
    }
    // The context's own normalization is what the program tests, so it is
    // not imposed.
    let mut inst = inst.clone();
    let ctx = inst.context.clone();
    inst.extras.retain(|e| !same_members(e, &ctx));
    let l = inst.layout(eps, None, &inst.context);
    let mut p = inst.base(&l, eps, Sense::Maximize);
    p.objective = inst.witness(&l);
    level(run(&p)?)
}

fn same_members(a: &[usize], b: &[usize]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

/// Residual level at which a stalled solve is still taken at face value.
pub const USABLE_RESIDUAL: f64 = 1e-6;

/// Optimal, or stopped on a point whose residuals are all below
/// [`USABLE_RESIDUAL`]. Programs without strictly feasible points often end
/// this way.
pub fn usable(sol: &SdpSolution) -> bool {
    let r = sol.residuals;
    sol.status == Status::Optimal
        || (sol.status == Status::Inaccurate && r.primal.max(r.dual).max(r.gap) <= USABLE_RESIDUAL)
}

fn level(sol: SdpSolution) -> Result<Option<f64>> {
    if usable(&sol) {
        return Ok(Some(sol.value));
    }
    match sol.status {
        Status::PrimalInfeasible => Ok(None),
        s => Err(Error::Solver(format!(
            "level solve ended {s:?} after {} iterations, value {}, residuals {:?}",
            sol.iterations, sol.value, sol.residuals
        ))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TracePoint {
    pub eps: f64,
    /// `(q - eps) - level`; positive means the function is still positive.
    pub margin: f64,
}

#[derive(Clone, Debug)]
pub struct Critical {
    /// Midpoint of the final bracket.
    pub eps: f64,
    pub lower: f64,
    pub upper: f64,
    /// The pair whose level was highest at the last failing point (tau only).
    pub worst_pair: Option<(usize, usize)>,
    pub trace: Vec<TracePoint>,
}

/// Solver slack when comparing a level against `q - eps`.
const LEVEL_SLACK: f64 = 1e-7;

fn bisect<F>(q: f64, mut margin: F) -> Result<Critical>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut trace = Vec::new();
    let m0 = margin(0.0)?;
    trace.push(TracePoint { eps: 0.0, margin: m0 });
    if m0 <= LEVEL_SLACK {
        return Err(Error::Bracket(format!("function already vanishes at eps = 0 (margin {m0:.3e})")));
    }
    let mut lo = 0.0;
    let mut hi = 0.0125;
    loop {
        let m = margin(hi)?;
        trace.push(TracePoint { eps: hi, margin: m });
        if m <= LEVEL_SLACK {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > q.max(1.0) {
            return Err(Error::Bracket(format!("still positive at eps = {lo}")));
        }
    }
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        let m = margin(mid)?;
        trace.push(TracePoint { eps: mid, margin: m });
        if m > LEVEL_SLACK {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Critical {
        eps: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        worst_pair: None,
        trace,
    })
}

/// Critical noise for the tolerance function: the supremum of `eps` with
/// `min_{(i,j) not in E} tau_ij(q - eps, eps) > 0`, bisected to width `1e-4`.
pub fn critical_eps_tau(inst: &Instance) -> Result<Critical> {
    let pairs = inst.ordered_non_edges();
    let mut hot: Option<(usize, usize)> = None;
    let mut worst = None;
    let q = inst.q;
    let mut crit = bisect(q, |eps| {
        let bound = q - eps;
        // The previously worst pair usually decides the point on its own.
        if let Some(pair) = hot {
            if let Some(l) = tau_zero_level(inst, eps, pair)? {
                if bound - l <= LEVEL_SLACK {
                    worst = Some(pair);
                    return Ok(bound - l);
                }
            }
        }
        let levels: Vec<Option<f64>> = pairs
            .par_iter()
            .map(|&pr| tau_zero_level(inst, eps, pr))
            .collect::<Result<_>>()?;
        let (k, top) = levels
            .iter()
            .enumerate()
            .filter_map(|(k, l)| l.map(|v| (k, v)))
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
        if k == usize::MAX {
            return Ok(f64::INFINITY);
        }
        hot = Some(pairs[k]);
        if bound - top <= LEVEL_SLACK {
            worst = Some(pairs[k]);
        }
        Ok(bound - top)
    })?;
    crit.worst_pair = worst;
    Ok(crit)
}

/// Critical noise for the completeness function on the instance's context.
pub fn critical_eps_nu(inst: &Instance) -> Result<Critical> {
    let q = inst.q;
    bisect(q, |eps| {
        Ok(match nu_zero_level(inst, eps)? {
            Some(l) => q - eps - l,
            None => f64::INFINITY,
        })
    })
}

#[derive(Clone, Debug)]
pub struct Lemma2 {
    pub threshold: f64,
    pub worst_pair: (usize, usize),
    pub max_level: f64,
}

/// `M_ij`: maximize `sum w_k X_kk` with `X_00 = 1`, `X_0k = X_kk`, edge
/// entries zero, `X_jj = X_0j = 1` and `X_ii = X_0i = 0`.
pub fn lemma2_level(inst: &Instance, pair: (usize, usize)) -> Result<Option<f64>> {
    inst.check_pair(pair)?;
    let (i, j) = pair;
    let l = inst.layout(0.0, Some(j), &[i]);
    let mut p = inst.base(&l, 0.0, Sense::Maximize);
    p.objective = inst.witness(&l);
    level(run(&p)?)
}

/// `q - max_{(i,j) not in E} M_ij`.
pub fn lemma2_threshold(inst: &Instance) -> Result<Lemma2> {
    let pairs = inst.ordered_non_edges();
    let levels: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&pr| lemma2_level(inst, pr))
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, (usize, usize))> = None;
    for (l, &pr) in levels.iter().zip(&pairs) {
        if let Some(v) = *l {
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, pr));
            }
        }
    }
    let (m, pr) = best.ok_or_else(|| Error::Solver("every single-defect program is infeasible".into()))?;
    Ok(Lemma2 {
        threshold: inst.q - m,
        worst_pair: pr,
        max_level: m,
    })
}

/// The published critical noise values, used when the reconstructed
/// programs are not trusted (see the notes in the README).
pub fn published_thresholds(name: &str) -> Option<PublishedThresholds> {
    let (t, v, l) = match name {
        "bbc21" => (0.00359, 0.00832, 0.13159),
        "ceg18" => (0.00557, 0.01527, 0.13397),
        "peres24" => (0.00562, 0.01954, 0.17712),
        "yo13" => (0.00296, 0.02325, 0.20808),
        _ => return None,
    };
    Some(PublishedThresholds {
        eps_tau: t,
        eps_nu: v,
        lemma2: l,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PublishedThresholds {
    pub eps_tau: f64,
    pub eps_nu: f64,
    pub lemma2: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_vectors;
    use crate::qcore::{c, CMat};
    use nalgebra::DMatrix;

    fn inst(name: &str) -> Instance {
        Instance::from_set(&builtin_vectors(name).unwrap()).unwrap()
    }

    #[test]
    fn theta_of_five_cycle() {
        let g = CompatGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        assert!((lovasz_theta(&g).unwrap() - 5f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn theta_of_small_catalog_sets() {
        for (name, v, tol) in [("ceg18", 4.5, 1e-5), ("peres24", 6.0, 1e-5), ("bbc21", 40.0, 1e-4)] {
            let t = lovasz_theta(&inst(name).graph).unwrap();
            assert!((t - v).abs() < tol, "{name}: {t}");
        }
    }

    #[test]
    fn theta_of_single_vertex() {
        let g = CompatGraph::empty(1)
            .with_weights(vec![num_rational::Rational64::from_integer(5)])
            .unwrap();
        assert!((lovasz_theta(&g).unwrap() - 5.0).abs() < 1e-7);
    }

    #[test]
    fn hermitian_embedding_round_trip() {
        let g = Gram {
            n: 2,
            field: Field::Hermitian,
        };
        // Embed T = [[1, i/2], [-i/2, 1]].
        let t = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.5), c(0.0, -0.5), c(1.0, 0.0)]);
        let mut y = DMatrix::zeros(4, 4);
        for p in 0..2 {
            for q in 0..2 {
                y[(p, q)] = t[(p, q)].re;
                y[(p + 2, q + 2)] = t[(p, q)].re;
                y[(p + 2, q)] = t[(p, q)].im;
                y[(p, q + 2)] = -t[(p, q)].im;
            }
        }
        let back = g.extract(&y);
        assert!(crate::qcore::max_abs(&(back - &t)) < 1e-15);
        assert!((g.im(0, 1).unwrap().eval(&[y.clone()]) - 0.5).abs() < 1e-15);
        assert!((g.re(1, 1).eval(&[y]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_relaxation_infeasible_on_ceg18() {
        let i = inst("ceg18");
        for pair in i.ordered_non_edges().into_iter().take(12) {
            let s = rank_feasibility(&i, 4.5, pair).unwrap();
            assert_eq!(s.status, Status::PrimalInfeasible, "{pair:?}");
        }
        let s = rank_feasibility(&i, 3.5, i.ordered_non_edges()[0]).unwrap();
        assert_eq!(s.status, Status::Optimal);
        let (a, b) = i.graph.edges()[0];
        assert!(matches!(rank_feasibility(&i, 4.5, (a, b)), Err(Error::PairIsEdge(..))));
    }

    #[test]
    fn tau_positive_at_ideal_point() {
        let i = inst("ceg18");
        let pair = i.ordered_non_edges()[0];
        // theta = q sits on the boundary of the feasible set, so the solver
        // may stop short of its tolerance; the value is still well resolved.
        let s = tolerance_tau(&i, i.q, 0.0, pair).unwrap();
        assert!(matches!(s.status, Status::Optimal | Status::Inaccurate));
        assert!(s.residuals.primal < 1e-6);
        assert!(s.value > 1e-3, "{}", s.value);
        let s = completeness_nu(&i, i.q, 0.0).unwrap();
        assert!(s.value > 1e-3, "{}", s.value);
    }

    #[test]
    fn large_eps_lets_tau_vanish() {
        let i = inst("ceg18");
        let min = i
            .ordered_non_edges()
            .iter()
            .map(|&p| tolerance_tau(&i, i.q - 0.5, 0.5, p).unwrap().value)
            .fold(f64::INFINITY, f64::min);
        assert!(min <= 1e-6, "{min}");
    }

    #[test]
    fn lemma2_levels_never_exceed_theta() {
        let i = inst("ceg18");
        for pair in i.ordered_non_edges().into_iter().take(20) {
            if let Some(m) = lemma2_level(&i, pair).unwrap() {
                assert!(m <= 4.5 + 1e-6);
            }
        }
    }
}
