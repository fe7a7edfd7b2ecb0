//! The context-projector game built from a complete KS set: Alice gets a
//! context and names one of its projectors, Bob gets a projector and says
//! whether it was named.

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::VectorSet;
use crate::graphcore::{basis_cliques, projector_graph, GRAPH_TOL};
use crate::kscolor::completion_additions;
use crate::qcore::{conj, identity, lambda_min, max_abs, max_entangled, tensor, CMat, DensityState, Projector};
use crate::{Error, Result};

/// Largest projector count `classical_value` enumerates.
pub const CLASSICAL_LIMIT: usize = 30;
/// Default tolerance of the self-test conditions.
pub const SELFTEST_TOL: f64 = 1e-8;
/// Bits of Bob's assignment fixed per parallel task.
const PREFIX_BITS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct GameSpec {
    pub n: usize,
    pub dim: usize,
    /// Contexts `T_x`, each a basis clique.
    pub contexts: Vec<Vec<usize>>,
}

impl GameSpec {
    /// `c_{a,b,x,y}` for `y` in `T_x`: Bob must answer 1 exactly on the
    /// projector Alice named.
    pub fn coefficient(&self, a: usize, b: u8, x: usize, y: usize) -> u8 {
        let named = self.contexts[x][a];
        u8::from((y == named && b == 1) || (y != named && b == 0))
    }

    /// Number of valid inputs `(x, y)` with `y` in `T_x`.
    pub fn input_count(&self) -> usize {
        self.contexts.iter().map(|t| t.len()).sum()
    }

    fn value(&self, raw: f64) -> GameValue {
        GameValue {
            raw,
            normalized: raw / self.input_count() as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GameValue {
    /// Sum of winning probabilities over the valid inputs.
    pub raw: f64,
    /// Win probability under uniform valid inputs.
    pub normalized: f64,
}

pub fn from_complete_ks(projectors: &[Projector]) -> Result<GameSpec> {
    if projectors.is_empty() {
        return Err(Error::InvalidInput("empty set".into()));
    }
    let missing = completion_additions(projectors)?.len();
    if missing > 0 {
        return Err(Error::NotComplete(format!("{missing} projectors missing")));
    }
    let g = projector_graph(projectors, GRAPH_TOL);
    Ok(GameSpec {
        n: projectors.len(),
        dim: projectors[0].dim(),
        contexts: basis_cliques(projectors, &g),
    })
}

pub fn from_set(set: &VectorSet) -> Result<GameSpec> {
    from_complete_ks(&set.projectors())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalValue {
    pub value: GameValue,
    /// Bob's answer for each projector.
    pub bob: Vec<bool>,
    /// Position in `T_x` Alice names for each context.
    pub alice: Vec<usize>,
}

/// Alice's best score on one context given the number of Bob's 1s in it:
/// `|T|` with exactly one 1, `|T| - o + 1` with `o > 1`, `|T| - 1` with none.
fn context_score(size: u32, ones: u32) -> u32 {
    if ones == 0 {
        size - 1
    } else {
        size - ones + 1
    }
}

/// Exhaustive search over Bob's `2^n` assignments with Alice's best response
/// per context. Ties go to the lexicographically smallest assignment.
pub fn classical_value(g: &GameSpec) -> Result<ClassicalValue> {
    if g.n > CLASSICAL_LIMIT {
        return Err(Error::SizeLimit(format!("{} projectors for exhaustive search", g.n)));
    }
    // Projector i sits at bit n - 1 - i so integer order is lexicographic.
    let masks: Vec<(u32, u32)> = g
        .contexts
        .iter()
        .map(|t| (t.iter().map(|&i| 1u32 << (g.n - 1 - i)).sum(), t.len() as u32))
        .collect();
    let score = |beta: u32| -> u32 {
        masks
            .iter()
            .map(|&(m, size)| context_score(size, (beta & m).count_ones()))
            .sum()
    };
    let low = g.n.saturating_sub(PREFIX_BITS);
    let (best, beta) = (0u32..1 << (g.n - low))
        .into_par_iter()
        .map(|prefix| {
            let base = prefix << low;
            let mut best = (0u32, base);
            for rest in 0u32..1 << low {
                let s = score(base | rest);
                if s > best.0 {
                    best = (s, base | rest);
                }
            }
            best
        })
        .reduce(
            || (0, u32::MAX),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let bob: Vec<bool> = (0..g.n).map(|i| beta >> (g.n - 1 - i) & 1 == 1).collect();
    let alice = g
        .contexts
        .iter()
        .map(|t| t.iter().position(|&i| bob[i]).unwrap_or(0))
        .collect();
    Ok(ClassicalValue {
        value: g.value(best as f64),
        bob,
        alice,
    })
}

#[derive(Clone, Debug)]
pub struct QuantumStrategy {
    pub state: DensityState,
    /// Alice's measurement per context, one element per position in `T_x`.
    pub alice: Vec<Vec<CMat>>,
    /// Bob's measurement per projector, indexed by outcome.
    pub bob: Vec<[CMat; 2]>,
}

/// `|phi+_d>`, Alice measuring the conjugate projectors of each context and
/// Bob measuring `{1 - Pi_y, Pi_y}`.
pub fn canonical_quantum_strategy(g: &GameSpec, projectors: &[Projector]) -> Result<QuantumStrategy> {
    if projectors.len() != g.n {
        return Err(Error::DimMismatch {
            expected: g.n,
            found: projectors.len(),
        });
    }
    let id = identity(g.dim);
    Ok(QuantumStrategy {
        state: DensityState::pure(&max_entangled(g.dim)?),
        alice: g
            .contexts
            .iter()
            .map(|t| t.iter().map(|&i| conj(projectors[i].matrix())).collect())
            .collect(),
        bob: projectors.iter().map(|p| [&id - p.matrix(), p.matrix().clone()]).collect(),
    })
}

fn check_povm(elems: &[&CMat], what: &str) -> Result<()> {
    let d = elems[0].nrows();
    let mut sum = CMat::zeros(d, d);
    for e in elems {
        if e.nrows() != d || max_abs(&(*e - e.adjoint())) > 1e-9 || lambda_min(e) < -1e-9 {
            return Err(Error::InvalidInput(format!("invalid POVM element in {what}")));
        }
        sum += *e;
    }
    if max_abs(&(sum - identity(d))) > 1e-9 {
        return Err(Error::InvalidInput(format!("{what} does not sum to the identity")));
    }
    Ok(())
}

/// Expected payoff of a strategy, `p(a, b | x, y) = tr((A_x^a (x) B_y^b) rho)`.
pub fn quantum_value(g: &GameSpec, s: &QuantumStrategy) -> Result<GameValue> {
    if s.alice.len() != g.contexts.len() || s.bob.len() != g.n {
        return Err(Error::InvalidInput("strategy does not match the game".into()));
    }
    for (x, a) in s.alice.iter().enumerate() {
        if a.len() != g.contexts[x].len() {
            return Err(Error::InvalidInput(format!("Alice's measurement {x} has the wrong size")));
        }
        check_povm(&a.iter().collect::<Vec<_>>(), &format!("Alice's measurement {x}"))?;
    }
    for (y, b) in s.bob.iter().enumerate() {
        check_povm(&[&b[0], &b[1]], &format!("Bob's measurement {y}"))?;
    }
    let da = s.alice[0][0].nrows();
    let db = s.bob[0][0].nrows();
    if s.state.dim() != da * db {
        return Err(Error::DimMismatch {
            expected: da * db,
            found: s.state.dim(),
        });
    }
    let rho = s.state.matrix();
    let raw: f64 = g
        .contexts
        .par_iter()
        .enumerate()
        .map(|(x, t)| {
            let mut total = 0.0;
            for &y in t {
                for (a, ax) in s.alice[x].iter().enumerate() {
                    for b in 0..2u8 {
                        if g.coefficient(a, b, x, y) == 1 {
                            let op = tensor(ax, &s.bob[y][b as usize]);
                            total += (&op * rho).trace().re;
                        }
                    }
                }
            }
            total
        })
        .sum();
    Ok(g.value(raw))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelfTestReport {
    /// Contexts whose vectors have all mutual overlaps nonzero.
    pub basis_pair: (usize, usize),
    /// Largest `tr(rho (Pi*_y (x) Pi_y'))` over orthogonal pairs.
    pub support: f64,
    /// Weight outside the span of `|e_i* e_i>` in the first basis.
    pub off_diagonal: f64,
    /// Largest deviation of a Schmidt weight from `1/d`, in either basis.
    pub weights: f64,
    pub tol: f64,
    pub support_ok: bool,
    pub off_diagonal_ok: bool,
    pub weights_ok: bool,
    pub pass: bool,
}

/// The first pair of rank-one contexts with every mutual overlap above `1e-9`.
pub fn find_basis_pair(g: &GameSpec, projectors: &[Projector]) -> Option<(usize, usize)> {
    let rank_one: Vec<usize> = (0..g.contexts.len())
        .filter(|&x| g.contexts[x].len() == g.dim && g.contexts[x].iter().all(|&i| projectors[i].rank() == 1))
        .collect();
    for (k, &x1) in rank_one.iter().enumerate() {
        for &x2 in &rank_one[k + 1..] {
            let all = g.contexts[x1].iter().all(|&i| {
                g.contexts[x2]
                    .iter()
                    .all(|&j| (projectors[i].matrix() * projectors[j].matrix()).trace().norm() > 1e-9)
            });
            if all {
                return Some((x1, x2));
            }
        }
    }
    None
}

pub fn selftest_conditions(rho: &DensityState, projectors: &[Projector], tol: f64) -> Result<SelfTestReport> {
    let g = from_complete_ks(projectors)?;
    let d = g.dim;
    if rho.dim() != d * d {
        return Err(Error::DimMismatch {
            expected: d * d,
            found: rho.dim(),
        });
    }
    let (x1, x2) = find_basis_pair(&g, projectors)
        .ok_or_else(|| Error::Unsupported("no pair of bases with all overlaps nonzero".into()))?;
    let r = rho.matrix();
    let expect = |a: &CMat, b: &CMat| (&tensor(a, b) * r).trace().re;

    let graph = projector_graph(projectors, GRAPH_TOL);
    let support = graph
        .edges()
        .into_iter()
        .flat_map(|(i, j)| [(i, j), (j, i)])
        .map(|(i, j)| expect(&conj(projectors[i].matrix()), projectors[j].matrix()))
        .fold(0.0, f64::max);

    let first = &g.contexts[x1];
    let diag_weights: Vec<f64> = first
        .iter()
        .map(|&i| expect(&conj(projectors[i].matrix()), projectors[i].matrix()))
        .collect();
    let off_diagonal = (1.0 - diag_weights.iter().sum::<f64>()).abs();

    let second: Vec<f64> = g.contexts[x2]
        .iter()
        .map(|&j| expect(&conj(projectors[j].matrix()), projectors[j].matrix()))
        .collect();
    let weights = diag_weights
        .iter()
        .chain(&second)
        .map(|w| (w - 1.0 / d as f64).abs())
        .fold(0.0, f64::max);

    let (support_ok, off_diagonal_ok, weights_ok) = (support <= tol, off_diagonal <= tol, weights <= tol);
    Ok(SelfTestReport {
        basis_pair: (x1, x2),
        support,
        off_diagonal,
        weights,
        tol,
        support_ok,
        off_diagonal_ok,
        weights_ok,
        pass: support_ok && off_diagonal_ok && weights_ok,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalSummary {
    pub value: f64,
    pub raw: f64,
    pub strategy: ClassicalValue,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantumSummary {
    pub value: f64,
    pub raw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameReport {
    pub classical: ClassicalSummary,
    pub quantum: QuantumSummary,
    pub gap: f64,
}

/// Classical and canonical quantum values of the game of a complete set.
pub fn play(projectors: &[Projector]) -> Result<GameReport> {
    let g = from_complete_ks(projectors)?;
    let cl = classical_value(&g)?;
    let qv = quantum_value(&g, &canonical_quantum_strategy(&g, projectors)?)?;
    Ok(GameReport {
        classical: ClassicalSummary {
            value: cl.value.normalized,
            raw: cl.value.raw,
            strategy: cl.clone(),
        },
        quantum: QuantumSummary {
            value: qv.normalized,
            raw: qv.raw,
        },
        gap: qv.normalized - cl.value.normalized,
    })
}
