//! Sequential-measurement experiments: exact outcome distributions, seeded
//! sampling with noise, witness estimates and the `(theta, eps)` quality of a
//! realization.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructor::perturb_realization;
use crate::graphcore::CompatGraph;
use crate::qcore::{c, identity, lambda_max, lambda_min, CMat, DensityState, Projector};
use crate::witness::{weighted_sum, Witness, WitnessForm};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Weight of the maximally mixed state mixed into the input.
    pub depolarize: f64,
    /// Magnitude of the per-run projector rotation.
    pub rotation: f64,
    /// Probability that a recorded outcome is flipped.
    pub readout_flip: f64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.depolarize) {
            return Err(Error::InvalidInput("depolarize must lie in [0, 1]".into()));
        }
        if self.rotation < 0.0 || !self.rotation.is_finite() {
            return Err(Error::InvalidInput("rotation must be >= 0".into()));
        }
        if !(0.0..0.5).contains(&self.readout_flip) {
            return Err(Error::InvalidInput("readout flip must lie in [0, 1/2)".into()));
        }
        Ok(())
    }
}

/// Outcome distributions: `singles[i] = [P(0), P(1)]`, `pairs[(i, j)]` over
/// `00, 01, 10, 11` with `i` measured first.
#[derive(Clone, Debug, PartialEq)]
pub struct Probabilities {
    pub singles: BTreeMap<usize, [f64; 2]>,
    pub pairs: BTreeMap<(usize, usize), [f64; 4]>,
    /// Shots behind each distribution, `None` for exact values.
    pub shots: Option<u64>,
}

/// Counts from a simulated run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeqStats {
    pub shots: u64,
    pub singles: BTreeMap<usize, [u64; 2]>,
    pub pairs: BTreeMap<(usize, usize), [u64; 4]>,
}

#[derive(Serialize, Deserialize)]
struct SeqStatsJson {
    shots: u64,
    singles: BTreeMap<String, BTreeMap<String, u64>>,
    pairs: BTreeMap<String, BTreeMap<String, u64>>,
}

const PAIR_KEYS: [&str; 4] = ["00", "01", "10", "11"];

impl Serialize for SeqStats {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let singles = self
            .singles
            .iter()
            .map(|(i, n)| (i.to_string(), BTreeMap::from([("0".to_string(), n[0]), ("1".to_string(), n[1])])))
            .collect();
        let pairs = self
            .pairs
            .iter()
            .map(|((i, j), n)| {
                (
                    format!("{i},{j}"),
                    PAIR_KEYS.iter().zip(n).map(|(k, v)| (k.to_string(), *v)).collect(),
                )
            })
            .collect();
        SeqStatsJson {
            shots: self.shots,
            singles,
            pairs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SeqStats {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = SeqStatsJson::deserialize(d)?;
        let get = |m: &BTreeMap<String, u64>, k: &str| m.get(k).copied().unwrap_or(0);
        let mut singles = BTreeMap::new();
        for (k, m) in &raw.singles {
            let i: usize = k.parse().map_err(|_| D::Error::custom(format!("bad observable index {k:?}")))?;
            singles.insert(i, [get(m, "0"), get(m, "1")]);
        }
        let mut pairs = BTreeMap::new();
        for (k, m) in &raw.pairs {
            let (a, b) = k
                .split_once(',')
                .ok_or_else(|| D::Error::custom(format!("bad pair key {k:?}")))?;
            let i: usize = a.trim().parse().map_err(|_| D::Error::custom(format!("bad pair key {k:?}")))?;
            let j: usize = b.trim().parse().map_err(|_| D::Error::custom(format!("bad pair key {k:?}")))?;
            pairs.insert((i, j), [get(m, "00"), get(m, "01"), get(m, "10"), get(m, "11")]);
        }
        Ok(SeqStats {
            shots: raw.shots,
            singles,
            pairs,
        })
    }
}

impl SeqStats {
    pub fn probabilities(&self) -> Probabilities {
        let n = self.shots.max(1) as f64;
        Probabilities {
            singles: self
                .singles
                .iter()
                .map(|(&i, c)| (i, [c[0] as f64 / n, c[1] as f64 / n]))
                .collect(),
            pairs: self
                .pairs
                .iter()
                .map(|(&k, c)| (k, [0, 1, 2, 3].map(|a| c[a] as f64 / n)))
                .collect(),
            shots: Some(self.shots),
        }
    }
}

/// Ordered pairs measured for a witness: every edge in listed order, and the
/// reverse order too when `both_orders` is set.
pub fn measured_pairs(w: &Witness, both_orders: bool) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = w.edge_weights.keys().copied().collect();
    if both_orders {
        out.extend(w.edge_weights.keys().map(|&(i, j)| (j, i)));
    }
    out
}

fn single_dist(rho: &CMat, p: &CMat) -> [f64; 2] {
    let p1 = (rho * p).trace().re.clamp(0.0, 1.0);
    [1.0 - p1, p1]
}

fn pair_dist(rho: &CMat, p: &CMat, q: &CMat) -> [f64; 4] {
    let d = p.nrows();
    let id = identity(d);
    let pp = [&id - p, p.clone()];
    let qq = [&id - q, q.clone()];
    let mut out = [0.0; 4];
    for a in 0..2 {
        let post = &pp[a] * rho * &pp[a];
        for b in 0..2 {
            out[2 * a + b] = (&qq[b] * &post).trace().re.max(0.0);
        }
    }
    let s: f64 = out.iter().sum();
    out.map(|x| x / s)
}

fn check(w: &Witness, projectors: &[Projector], rho: &DensityState) -> Result<()> {
    if w.form == WitnessForm::Pm {
        return Err(Error::Unsupported("simulation covers projector witnesses".into()));
    }
    if projectors.len() != w.n() {
        return Err(Error::DimMismatch {
            expected: w.n(),
            found: projectors.len(),
        });
    }
    if let Some(p) = projectors.iter().find(|p| p.dim() != rho.dim()) {
        return Err(Error::DimMismatch {
            expected: rho.dim(),
            found: p.dim(),
        });
    }
    Ok(())
}

/// Exact single and listed-order pair distributions.
pub fn exact_stats(projectors: &[Projector], w: &Witness, rho: &DensityState) -> Result<Probabilities> {
    exact_stats_with(projectors, w, rho, false)
}

pub fn exact_stats_with(
    projectors: &[Projector],
    w: &Witness,
    rho: &DensityState,
    both_orders: bool,
) -> Result<Probabilities> {
    check(w, projectors, rho)?;
    let r = rho.matrix();
    Ok(Probabilities {
        singles: projectors
            .iter()
            .enumerate()
            .map(|(i, p)| (i, single_dist(r, p.matrix())))
            .collect(),
        pairs: measured_pairs(w, both_orders)
            .into_iter()
            .map(|(i, j)| ((i, j), pair_dist(r, projectors[i].matrix(), projectors[j].matrix())))
            .collect(),
        shots: None,
    })
}

fn flip_single(p: [f64; 2], q: f64) -> [f64; 2] {
    [p[0] * (1.0 - q) + p[1] * q, p[1] * (1.0 - q) + p[0] * q]
}

fn flip_pair(p: [f64; 4], q: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (src, &pr) in p.iter().enumerate() {
        for (dst, o) in out.iter_mut().enumerate() {
            let flips = (src ^ dst).count_ones() as i32;
            *o += pr * q.powi(flips) * (1.0 - q).powi(2 - flips);
        }
    }
    out
}

/// Multinomial counts by successive binomial draws.
fn multinomial<const K: usize>(rng: &mut ChaCha8Rng, shots: u64, p: [f64; K]) -> [u64; K] {
    let mut out = [0u64; K];
    let mut left = shots;
    let mut mass = 1.0;
    for k in 0..K - 1 {
        if left == 0 {
            break;
        }
        let pk = if mass > 0.0 { (p[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let n = Binomial::new(left, pk).expect("probability in [0, 1]").sample(rng);
        out[k] = n;
        left -= n;
        mass -= p[k];
    }
    out[K - 1] += left;
    out
}

/// A term's own random stream, so counts do not depend on scheduling.
fn stream(seed: u64, term: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(term + 1);
    r
}

/// Monte Carlo run: `shots` single measurements of every observable and
/// `shots` sequences for every measured pair. The state is depolarized, the
/// projectors rotated once, and outcomes flipped independently. Sampling
/// each term's multinomial directly is exact in distribution.
pub fn sample_stats(
    projectors: &[Projector],
    w: &Witness,
    rho: &DensityState,
    shots: u64,
    seed: u64,
    noise: &NoiseModel,
) -> Result<SeqStats> {
    sample_stats_with(projectors, w, rho, shots, seed, noise, false)
}

pub fn sample_stats_with(
    projectors: &[Projector],
    w: &Witness,
    rho: &DensityState,
    shots: u64,
    seed: u64,
    noise: &NoiseModel,
    both_orders: bool,
) -> Result<SeqStats> {
    if shots == 0 {
        return Err(Error::InvalidInput("shots must be >= 1".into()));
    }
    noise.validate()?;
    check(w, projectors, rho)?;
    let rho = rho.depolarize(noise.depolarize);
    let rotated = perturb_realization(projectors, noise.rotation, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let exact = exact_stats_with(&rotated, w, &rho, both_orders)?;
    let n = projectors.len() as u64;
    let singles = exact
        .singles
        .par_iter()
        .map(|(&i, &p)| (i, multinomial(&mut stream(seed, i as u64), shots, flip_single(p, noise.readout_flip))))
        .collect();
    let pairs = exact
        .pairs
        .into_iter()
        .collect::<Vec<_>>()
        .par_iter()
        .enumerate()
        .map(|(k, &(key, p))| {
            (key, multinomial(&mut stream(seed, n + k as u64), shots, flip_pair(p, noise.readout_flip)))
        })
        .collect();
    Ok(SeqStats {
        shots,
        singles,
        pairs,
    })
}

/// Plug-in witness estimate with an independent-binomial standard error.
pub fn estimate_witness(p: &Probabilities, w: &Witness) -> Result<(f64, f64)> {
    let wf = w.graph.weights_f64();
    let mut value = 0.0;
    let mut var = 0.0;
    for (i, wi) in wf.iter().enumerate() {
        let s = p
            .singles
            .get(&i)
            .ok_or_else(|| Error::MissingTerm(format!("single {i}")))?;
        value += wi * s[1];
        var += wi * wi * s[1] * (1.0 - s[1]);
    }
    for (&(i, j), wij) in &w.edge_weights {
        let pr = p
            .pairs
            .get(&(i, j))
            .ok_or_else(|| Error::MissingTerm(format!("pair ({i}, {j})")))?;
        let wij = num_traits::ToPrimitive::to_f64(wij).unwrap();
        value -= wij * pr[3];
        var += wij * wij * pr[3] * (1.0 - pr[3]);
    }
    let se = match p.shots {
        Some(n) => (var / n as f64).sqrt(),
        None => 0.0,
    };
    Ok((value, se))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealizationQuality {
    pub theta: f64,
    pub eps: f64,
    pub per_edge: Vec<((usize, usize), f64)>,
}

/// `theta = lambda_min(sum w_i Pi_i)` and `eps = max_E lambda_max(Pi_i Pi_j Pi_i)`,
/// the worst cases over all states.
pub fn quality(projectors: &[Projector], g: &CompatGraph) -> Result<RealizationQuality> {
    if projectors.len() != g.n() {
        return Err(Error::DimMismatch {
            expected: g.n(),
            found: projectors.len(),
        });
    }
    let s = weighted_sum(projectors, &g.weights_f64());
    let s = (&s + s.adjoint()) * c(0.5, 0.0);
    let theta = lambda_min(&s);
    let per_edge: Vec<((usize, usize), f64)> = g
        .edges()
        .into_iter()
        .map(|(i, j)| {
            let pi = projectors[i].matrix();
            let m = pi * projectors[j].matrix() * pi;
            ((i, j), lambda_max(&((&m + m.adjoint()) * c(0.5, 0.0))).max(0.0))
        })
        .collect();
    let eps = per_edge.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(RealizationQuality { theta, eps, per_edge })
}
