//! Certification verdicts from realization quality or measured statistics,
//! and the empirical robustness curve.

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::VectorSet;
use crate::constructor::perturb_realization;
use crate::equiv::align;
use crate::graphcore::{orthogonality_graph, CompatGraph, GRAPH_TOL};
use crate::qcore::{identity, lambda_max, lambda_min, Projector};
use crate::sdpsolve::{published_thresholds, PublishedThresholds};
use crate::simulate::{quality, RealizationQuality, SeqStats};
use crate::{Error, Result};

/// Pair residuals at or below this count as exact orthogonality.
pub const EXACT_EPS: f64 = 1e-9;
/// Standard errors subtracted (or added) in stats mode.
pub const STATS_SIGMAS: f64 = 3.0;
/// Normalization groups may be off by this multiple of `eps`.
pub const EXTRA_TOL_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ExactOrthogonality,
    Noisy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    CertifiedIdeal,
    CertifiedRobust,
    /// Would be `CertifiedIdeal` given a full-rank input state.
    ConditionalIdeal,
    /// Would be `CertifiedRobust` given a full-rank input state.
    ConditionalRobust,
    Rejected,
}

impl Verdict {
    pub fn is_rejected(self) -> bool {
        self == Verdict::Rejected
    }
}

/// An inequality that failed: `lhs <relation> rhs` was required.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub condition: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    pub q: f64,
    pub lemma2: f64,
    pub eps_tau: f64,
    pub eps_nu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertReport {
    pub set: String,
    pub mode: Mode,
    pub theta: f64,
    pub eps: f64,
    pub thresholds: Thresholds,
    pub full_rank_attested: bool,
    pub verdict: Verdict,
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

/// What the verdict is computed from.
#[derive(Clone, Debug)]
pub enum Evidence {
    /// `theta` and `eps` as in [`RealizationQuality`]; `extra_defects` holds
    /// one deviation per normalization group when known.
    Quality {
        theta: f64,
        eps: f64,
        extra_defects: Option<Vec<f64>>,
    },
    Stats(SeqStats),
}

impl Evidence {
    pub fn from_quality(q: &RealizationQuality) -> Evidence {
        Evidence::Quality {
            theta: q.theta,
            eps: q.eps,
            extra_defects: None,
        }
    }
}

fn thresholds(set: &VectorSet) -> Result<(PublishedThresholds, f64)> {
    let t = published_thresholds(&set.name)
        .ok_or_else(|| Error::Unsupported(format!("no certification thresholds for {:?}", set.name)))?;
    let q = set
        .expected_q()
        .ok_or_else(|| Error::Unsupported(format!("{:?} has no expected value", set.name)))?;
    Ok((t, q))
}

/// `||sum_{k in g} Pi_k - 1||` for each normalization group of the set.
pub fn extra_defects(projectors: &[Projector], set: &VectorSet) -> Vec<f64> {
    set.extra_constraints
        .iter()
        .map(|g| {
            let d = projectors[g[0]].dim();
            let mut s = -identity(d);
            for &k in g {
                s += projectors[k].matrix();
            }
            lambda_max(&s).abs().max(lambda_min(&s).abs())
        })
        .collect()
}

/// Point estimates with their conservative shift.
struct Observed {
    theta: f64,
    eps: f64,
    extra: Option<Vec<(f64, f64)>>,
}

fn from_stats(stats: &SeqStats, set: &VectorSet) -> Result<Observed> {
    let g = orthogonality_graph(&set.kets(), GRAPH_TOL);
    let w = set.weights_f64();
    let n = stats.shots.max(1) as f64;
    let single = |i: usize| -> Result<f64> {
        let c = stats
            .singles
            .get(&i)
            .ok_or_else(|| Error::MissingTerm(format!("single {i}")))?;
        Ok(c[1] as f64 / n)
    };
    let mut value = 0.0;
    let mut var = 0.0;
    for (i, wi) in w.iter().enumerate() {
        let p = single(i)?;
        value += wi * p;
        var += wi * wi * p * (1.0 - p);
    }
    let theta = value - STATS_SIGMAS * (var / n).sqrt();

    // Conditional P(j = 1 | i = 1) over every measured order of each edge.
    let mut eps: f64 = 0.0;
    for (i, j) in g.edges() {
        let mut any = false;
        for key in [(i, j), (j, i)] {
            if let Some(c) = stats.pairs.get(&key) {
                any = true;
                let first = (c[2] + c[3]) as f64;
                if first > 0.0 {
                    let p = c[3] as f64 / first;
                    eps = eps.max(p + STATS_SIGMAS * (p * (1.0 - p) / first).sqrt());
                }
            }
        }
        if !any {
            return Err(Error::MissingTerm(format!("pair ({i}, {j})")));
        }
    }
    let extra = if set.extra_constraints.is_empty() {
        None
    } else {
        let mut out = Vec::new();
        for grp in &set.extra_constraints {
            let mut s = 0.0;
            let mut v = 0.0;
            for &k in grp {
                let p = single(k)?;
                s += p;
                v += p * (1.0 - p);
            }
            out.push(((s - 1.0).abs(), STATS_SIGMAS * (v / n).sqrt()));
        }
        Some(out)
    };
    Ok(Observed { theta, eps, extra })
}

pub fn certify(evidence: &Evidence, set: &VectorSet, full_rank_attested: bool) -> Result<CertReport> {
    let (t, q) = thresholds(set)?;
    let obs = match evidence {
        Evidence::Quality {
            theta,
            eps,
            extra_defects,
        } => {
            if !theta.is_finite() || !eps.is_finite() || *eps < 0.0 {
                return Err(Error::InvalidInput(format!("bad quality ({theta}, {eps})")));
            }
            Observed {
                theta: *theta,
                eps: *eps,
                extra: extra_defects.as_ref().map(|v| v.iter().map(|&x| (x, 0.0)).collect()),
            }
        }
        Evidence::Stats(s) => from_stats(s, set)?,
    };
    let mut notes = Vec::new();
    let mut violations = Vec::new();
    let mode = if obs.eps <= EXACT_EPS {
        Mode::ExactOrthogonality
    } else {
        Mode::Noisy
    };
    match mode {
        Mode::ExactOrthogonality => {
            let bound = q - t.lemma2;
            if !(obs.theta > bound) {
                violations.push(Violation {
                    condition: "theta > Q - lemma2".into(),
                    lhs: obs.theta,
                    rhs: bound,
                });
            }
        }
        Mode::Noisy => {
            let cap = (t.eps_tau / 2.0).min(t.eps_nu);
            if !(obs.eps < cap) {
                violations.push(Violation {
                    condition: "eps < min(eps_tau / 2, eps_nu)".into(),
                    lhs: obs.eps,
                    rhs: cap,
                });
            }
            if !(obs.theta >= q - obs.eps) {
                violations.push(Violation {
                    condition: "theta >= Q - eps".into(),
                    lhs: obs.theta,
                    rhs: q - obs.eps,
                });
            }
        }
    }
    if !set.extra_constraints.is_empty() {
        match &obs.extra {
            Some(defects) => {
                let tol = (EXTRA_TOL_FACTOR * obs.eps).max(EXACT_EPS);
                for (g, &(dev, slack)) in set.extra_constraints.iter().zip(defects) {
                    if !(dev <= tol + slack) {
                        violations.push(Violation {
                            condition: format!("|sum of group {g:?} - 1| <= 10 eps"),
                            lhs: dev,
                            rhs: tol + slack,
                        });
                    }
                }
                notes.push("normalization groups checked".into());
            }
            None => notes.push("normalization groups assumed, not measured".into()),
        }
    }
    let verdict = if !violations.is_empty() {
        Verdict::Rejected
    } else {
        match (mode, full_rank_attested) {
            (Mode::ExactOrthogonality, true) => Verdict::CertifiedIdeal,
            (Mode::Noisy, true) => Verdict::CertifiedRobust,
            (Mode::ExactOrthogonality, false) => Verdict::ConditionalIdeal,
            (Mode::Noisy, false) => Verdict::ConditionalRobust,
        }
    };
    if !full_rank_attested && !verdict.is_rejected() {
        notes.push("conditional on a full-rank input state".into());
    }
    if matches!(evidence, Evidence::Stats(_)) {
        notes.push(format!("estimates shifted by {STATS_SIGMAS} standard errors"));
    }
    Ok(CertReport {
        set: set.name.clone(),
        mode,
        theta: obs.theta,
        eps: obs.eps,
        thresholds: Thresholds {
            q,
            lemma2: t.lemma2,
            eps_tau: t.eps_tau,
            eps_nu: t.eps_nu,
        },
        full_rank_attested,
        verdict,
        violations,
        notes,
    })
}

/// Quality, normalization defects and verdict for a candidate realization.
pub fn certify_realization(projectors: &[Projector], set: &VectorSet, full_rank_attested: bool) -> Result<CertReport> {
    let g = orthogonality_graph(&set.kets(), GRAPH_TOL).with_weights(set.weights_rational())?;
    let qual = quality(projectors, &g)?;
    let e = Evidence::Quality {
        theta: qual.theta,
        eps: qual.eps,
        extra_defects: Some(extra_defects(projectors, set)),
    };
    certify(&e, set, full_rank_attested)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub sigma: f64,
    pub eps: f64,
    pub residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessCurve {
    pub set: String,
    pub points: Vec<CurvePoint>,
    /// Least-squares slope of `ln residual` against `ln eps`, perturbed
    /// points only.
    pub slope: Option<f64>,
}

impl RobustnessCurve {
    /// `max / min` of `residual / sqrt(eps)` over the perturbed points.
    pub fn sqrt_ratio(&self) -> Option<f64> {
        let r: Vec<f64> = self
            .points
            .iter()
            .filter(|p| p.sigma > 0.0 && p.eps > 0.0)
            .filter_map(|p| p.residual.map(|x| x / p.eps.sqrt()))
            .collect();
        if r.len() < 2 {
            return None;
        }
        let max = r.iter().cloned().fold(f64::MIN, f64::max);
        let min = r.iter().cloned().fold(f64::MAX, f64::min);
        Some(max / min)
    }
}

fn slope(xy: &[(f64, f64)]) -> Option<f64> {
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// For each magnitude: perturb the ideal realization, measure `eps`, align
/// against the ideal set and record the residual.
pub fn robustness_curve(set: &VectorSet, magnitudes: &[f64], seed: u64) -> Result<RobustnessCurve> {
    if magnitudes.iter().any(|s| !(*s >= 0.0)) || magnitudes.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("magnitudes must be nonnegative and ascending".into()));
    }
    let ideal = set.projectors();
    let g: CompatGraph = orthogonality_graph(&set.kets(), GRAPH_TOL);
    let points: Vec<CurvePoint> = magnitudes
        .par_iter()
        .map(|&sigma| {
            let run = || -> Result<(f64, f64)> {
                let p = perturb_realization(&ideal, sigma, seed)?;
                let eps = quality(&p, &g)?.eps;
                Ok((eps, align(&p, set)?.residual))
            };
            match run() {
                Ok((eps, r)) => CurvePoint {
                    sigma,
                    eps,
                    residual: Some(r),
                    error: None,
                },
                Err(e) => CurvePoint {
                    sigma,
                    eps: f64::NAN,
                    residual: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.sigma > 0.0 && p.eps > 0.0)
        .filter_map(|p| p.residual.filter(|&r| r > 0.0).map(|r| (p.eps.ln(), r.ln())))
        .collect();
    Ok(RobustnessCurve {
        set: set.name.clone(),
        slope: slope(&xy),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_vectors;
    use crate::qcore::DensityState;
    use crate::simulate::{exact_stats_with, sample_stats, NoiseModel};
    use crate::witness::default_witness;

    fn q(theta: f64, eps: f64) -> Evidence {
        Evidence::Quality {
            theta,
            eps,
            extra_defects: None,
        }
    }

    #[test]
    fn ideal_is_certified() {
        for name in ["bbc21", "ceg18", "peres24", "yo13"] {
            let set = builtin_vectors(name).unwrap();
            let r = certify_realization(&set.projectors(), &set, true).unwrap();
            assert_eq!(r.verdict, Verdict::CertifiedIdeal, "{name}");
            assert_eq!(r.mode, Mode::ExactOrthogonality);
            let r = certify_realization(&set.projectors(), &set, false).unwrap();
            assert_eq!(r.verdict, Verdict::ConditionalIdeal, "{name}");
        }
    }

    #[test]
    fn yo13_below_lemma2_is_rejected() {
        let set = builtin_vectors("yo13").unwrap();
        let qv = 35.0 / 3.0;
        let r = certify(&q(qv - 0.25, 0.0), &set, true).unwrap();
        assert_eq!(r.verdict, Verdict::Rejected);
        let v = &r.violations[0];
        assert!((v.lhs - (qv - 0.25)).abs() < 1e-12 && (v.rhs - (qv - 0.20808)).abs() < 1e-12);
        let r = certify(&q(11.40, 0.0), &set, true).unwrap();
        assert_eq!(r.verdict, Verdict::Rejected);
    }

    #[test]
    fn bbc21_noisy() {
        let set = builtin_vectors("bbc21").unwrap();
        let r = certify(&q(40.0 - 1e-3, 1e-3), &set, true).unwrap();
        assert_eq!(r.verdict, Verdict::CertifiedRobust);
        assert_eq!(r.mode, Mode::Noisy);
        let r = certify(&q(40.0 - 2e-3, 2e-3), &set, true).unwrap();
        assert_eq!(r.verdict, Verdict::Rejected);
        assert!(r.violations[0].condition.contains("eps_tau"));
    }

    #[test]
    fn monotone_in_eps() {
        for name in ["bbc21", "ceg18", "peres24", "yo13"] {
            let set = builtin_vectors(name).unwrap();
            let qv = set.expected_q().unwrap();
            let mut last_ok = false;
            for k in 0..60 {
                let eps = 0.02 * (1.0 - k as f64 / 59.0);
                let ok = !certify(&q(qv - eps, eps), &set, true).unwrap().verdict.is_rejected();
                assert!(ok || !last_ok, "{name} at {eps}");
                last_ok = ok;
            }
            assert!(last_ok);
        }
    }

    #[test]
    fn yo13_groups_checked() {
        let set = builtin_vectors("yo13").unwrap();
        let qv = 35.0 / 3.0;
        let e = Evidence::Quality {
            theta: qv - 1e-4,
            eps: 1e-4,
            extra_defects: Some(vec![0.0, 0.0, 0.05, 0.0]),
        };
        let r = certify(&e, &set, true).unwrap();
        assert_eq!(r.verdict, Verdict::Rejected);
        assert!(r.violations.iter().any(|v| v.condition.contains("group")));
    }

    #[test]
    fn stats_path_agrees_with_quality_path() {
        for name in ["bbc21", "ceg18", "peres24", "yo13"] {
            let set = builtin_vectors(name).unwrap();
            let w = default_witness(&set).unwrap();
            let p = set.projectors();
            let ex = exact_stats_with(&p, &w, &DensityState::maximally_mixed(set.dim), false).unwrap();
            // Exact probabilities as counts over a large shot number.
            let shots = 1u64 << 40;
            let stats = SeqStats {
                shots,
                singles: ex.singles.iter().map(|(&i, s)| (i, s.map(|x| (x * shots as f64).round() as u64))).collect(),
                pairs: ex.pairs.iter().map(|(&k, s)| (k, s.map(|x| (x * shots as f64).round() as u64))).collect(),
            };
            let a = certify(&Evidence::Stats(stats), &set, true).unwrap();
            let b = certify_realization(&p, &set, true).unwrap();
            assert_eq!(a.verdict, b.verdict, "{name}");
        }
    }

    #[test]
    fn sampled_stats_certify_ceg18() {
        let set = builtin_vectors("ceg18").unwrap();
        let w = default_witness(&set).unwrap();
        let s = sample_stats(
            &set.projectors(),
            &w,
            &DensityState::maximally_mixed(4),
            100_000,
            1,
            &NoiseModel::default(),
        )
        .unwrap();
        let r = certify(&Evidence::Stats(s.clone()), &set, true).unwrap();
        assert_eq!(r.verdict, Verdict::CertifiedIdeal);
        let mut partial = s;
        partial.pairs.clear();
        assert!(matches!(certify(&Evidence::Stats(partial), &set, true), Err(Error::MissingTerm(_))));
    }

    #[test]
    fn unsupported_set() {
        let set = builtin_vectors("peres33").unwrap();
        assert!(matches!(certify(&q(13.0, 0.0), &set, true), Err(Error::Unsupported(_))));
    }

    #[test]
    fn curve_zero_point_and_slope() {
        let set = builtin_vectors("ceg18").unwrap();
        let c = robustness_curve(&set, &[0.0, 1e-4, 1e-3, 1e-2], 3).unwrap();
        assert!(c.points[0].eps <= 1e-12);
        assert!(c.points[0].residual.unwrap() <= 1e-7);
        let s = c.slope.unwrap();
        assert!((0.4..=1.1).contains(&s), "{s}");
        assert!(c.sqrt_ratio().unwrap() <= 10.0);
        assert!(robustness_curve(&set, &[1e-2, 1e-3], 3).is_err());
    }
}
