use std::fmt::Write as _;
use std::io::Write as _;
use std::time::Instant;

use num_rational::Rational64;
use serde_json::{json, Value};

use kscert::catalog::{builtin, pm_square, serialize, Builtin, VectorSet, BUILTIN_NAMES};
use kscert::certify::{certify, certify_realization, robustness_curve, CertReport, Evidence};
use kscert::constructor::{lift_peres, perturb_realization};
use kscert::equiv::equivalent;
use kscert::graphcore::{independence_number, orthogonality_graph, CompatGraph, GRAPH_TOL};
use kscert::kscolor::{complete_ks, completion_additions, ks_assignments, KsInstance, KsResult};
use kscert::ksgame::{play, selftest_conditions, SELFTEST_TOL};
use kscert::qcore::{max_entangled, rand_state, DensityState, StateKind};
use kscert::sdpsolve::{
    critical_eps_nu, critical_eps_tau, lemma2_threshold, lovasz_theta, published_thresholds, Instance,
};
use kscert::simulate::{estimate_witness, quality, sample_stats_with, NoiseModel, SeqStats};
use kscert::witness::{
    default_witness, exclusivity_bound, nc_bound, pm_scan, pm_value, pm_witness, quantum_value,
    state_independence_scan,
};

use crate::input::{read_file, resolve, set_name, usage, vector_set, CliError, CliResult};
use crate::{CatalogCmd, Cli, Cmd, Opts, StateArg, WitnessCmd, EXIT_OK, EXIT_REJECTED, EXIT_UNSAT};

pub struct Output {
    pub command: &'static str,
    pub text: String,
    pub result: Value,
    pub code: u8,
}

impl Output {
    pub fn new(command: &'static str, text: String, result: Value) -> Output {
        Output {
            command,
            text,
            result,
            code: EXIT_OK,
        }
    }

    fn with_code(mut self, code: u8) -> Output {
        self.code = code;
        self
    }

    /// JSON carries the full-precision result and the rounded text as `echo`.
    pub fn emit(&self, opts: &Opts) -> std::io::Result<()> {
        let mut body = if opts.json {
            serde_json::to_string_pretty(&json!({
                "command": self.command,
                "exit_code": self.code,
                "result": self.result,
                "echo": self.text,
            }))
            .expect("output serializes")
        } else {
            self.text.clone()
        };
        if !body.ends_with('\n') {
            body.push('\n');
        }
        match &opts.out {
            Some(p) => std::fs::write(p, body),
            None => std::io::stdout().write_all(body.as_bytes()),
        }
    }
}

pub fn ratio_text(r: Rational64) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn ratio_json(r: Rational64) -> Value {
    json!({"exact": ratio_text(r), "value": *r.numer() as f64 / *r.denom() as f64})
}

pub fn weighted_graph(set: &VectorSet) -> CliResult<CompatGraph> {
    Ok(orthogonality_graph(&set.kets(), GRAPH_TOL).with_weights(set.weights_rational())?)
}

fn state(kind: StateArg, seed: u64, dim: usize) -> DensityState {
    match kind {
        StateArg::Mixed => DensityState::maximally_mixed(dim),
        StateArg::Pure => rand_state(seed, StateKind::Pure, dim),
        StateArg::Full => rand_state(seed, StateKind::FullRank, dim),
    }
}

fn is_pm(opts: &Opts) -> bool {
    set_name(opts) == Some("pm")
}

pub fn run(cli: &Cli) -> CliResult<Output> {
    let o = &cli.opts;
    match &cli.cmd {
        Cmd::Catalog { action } => catalog(action, o),
        Cmd::Alpha => alpha(o),
        Cmd::Theta => theta(o),
        Cmd::Witness {
            action: WitnessCmd::Eval { state: s },
        } => witness_eval(o, *s),
        Cmd::Scan { trials } => scan(o, *trials),
        Cmd::Kscolor => kscolor(o),
        Cmd::Complete => complete(o),
        Cmd::Lift => lift(o),
        Cmd::Equiv { a, b } => equiv(a, b),
        Cmd::Simulate {
            state: s,
            noise,
            both_orders,
        } => {
            let noise = NoiseModel {
                depolarize: noise.depolarize,
                rotation: noise.rotation,
                readout_flip: noise.readout_flip,
            };
            simulate(o, *s, &noise, *both_orders)
        }
        Cmd::Quality { rotation } => quality_cmd(o, *rotation),
        Cmd::Certify { stats, rotation } => certify_cmd(o, stats.as_deref(), *rotation),
        Cmd::Robustness { magnitudes } => robustness(o, magnitudes.as_deref()),
        Cmd::Game => game(o),
        Cmd::ExclusivityBound => exclusivity(o),
        Cmd::Thresholds => thresholds(o),
        Cmd::Report { quick } => crate::report::report(*quick, o.seed),
    }
}

fn catalog(action: &CatalogCmd, o: &Opts) -> CliResult<Output> {
    match action {
        CatalogCmd::List => {
            let mut text = String::new();
            let mut rows = Vec::new();
            for name in BUILTIN_NAMES {
                match builtin(name)? {
                    Builtin::Vectors(s) => {
                        let q = s.expected_q().unwrap_or(f64::NAN);
                        let _ = writeln!(text, "{name:<8} d={} n={:<3} Q={q:.6}", s.dim, s.len());
                        rows.push(json!({"name": name, "dim": s.dim, "n": s.len(), "q": q}));
                    }
                    Builtin::Observables(obs) => {
                        let _ = writeln!(text, "{name:<8} d={} {} observables", obs.dim, obs.labels.len());
                        rows.push(json!({"name": name, "dim": obs.dim, "n": obs.labels.len(), "q": 6.0}));
                    }
                }
            }
            Ok(Output::new("catalog list", text, Value::Array(rows)))
        }
        CatalogCmd::Show => {
            if is_pm(o) {
                let obs = pm_square();
                let text = format!("Peres-Mermin square, d = {}: {}", obs.dim, obs.labels.join(" "));
                return Ok(Output::new("catalog show", text, json!({"name": "pm", "labels": obs.labels})));
            }
            let s = vector_set(o)?;
            let text = serialize(&s);
            let value: Value = serde_json::from_str(&text).expect("serialized set is JSON");
            Ok(Output::new("catalog show", text, value))
        }
    }
}

fn alpha(o: &Opts) -> CliResult<Output> {
    let (value, set) = if is_pm(o) {
        (nc_bound(&pm_witness())?, vec![])
    } else {
        let ind = independence_number(&weighted_graph(&vector_set(o)?)?)?;
        (ind.value, ind.set)
    };
    Ok(Output::new(
        "alpha",
        ratio_text(value),
        json!({"alpha": ratio_json(value), "independent_set": set}),
    ))
}

fn theta(o: &Opts) -> CliResult<Output> {
    let v = lovasz_theta(&weighted_graph(&vector_set(o)?)?)?;
    Ok(Output::new("theta", format!("{v:.6}"), json!({"theta": v})))
}

fn witness_eval(o: &Opts, kind: StateArg) -> CliResult<Output> {
    if is_pm(o) {
        let obs = pm_square();
        let v = pm_value(&obs, &state(kind, o.seed, obs.dim))?;
        return Ok(Output::new(
            "witness eval",
            format!("value {v:.6} (Q = 6, noncontextual bound 4)"),
            json!({"value": v, "q": 6.0, "nc_bound": 4.0}),
        ));
    }
    let s = vector_set(o)?;
    let w = default_witness(&s)?;
    let v = quantum_value(&w, &s.projectors(), &state(kind, o.seed, s.dim))?;
    let nc = nc_bound(&w)?;
    Ok(Output::new(
        "witness eval",
        format!(
            "value {:.6} (vertex {:.6}, edge {:.6}); Q = {:.6}, noncontextual bound {}",
            v.value,
            v.vertex_term,
            v.edge_term,
            w.q,
            ratio_text(nc)
        ),
        json!({
            "value": v.value,
            "vertex_term": v.vertex_term,
            "edge_term": v.edge_term,
            "order_asymmetry": v.order_asymmetry,
            "q": w.q,
            "nc_bound": ratio_json(nc),
        }),
    ))
}

fn scan(o: &Opts, trials: usize) -> CliResult<Output> {
    let tol = o.tol.unwrap_or(1e-9);
    let dev = if is_pm(o) {
        pm_scan(&pm_square(), trials, o.seed)?
    } else {
        let s = vector_set(o)?;
        state_independence_scan(&s.projectors(), &default_witness(&s)?, trials, o.seed)?
    };
    let ok = dev <= tol;
    Ok(Output::new(
        "scan",
        format!(
            "max |W - Q| over {trials} states: {dev:.3e} ({})",
            if ok { "state-independent" } else { "state-dependent" }
        ),
        json!({"trials": trials, "max_deviation": dev, "tol": tol, "state_independent": ok}),
    ))
}

fn kscolor(o: &Opts) -> CliResult<Output> {
    let s = vector_set(o)?;
    let inst = KsInstance::from_set(&s);
    let t = Instant::now();
    let r = ks_assignments(&inst);
    let ms = t.elapsed().as_secs_f64() * 1e3;
    Ok(match r {
        KsResult::Sat(a) => {
            let ones: Vec<usize> = (0..a.len()).filter(|&i| a[i]).collect();
            Output::new(
                "kscolor",
                format!("SAT; vectors assigned 1: {ones:?}"),
                json!({"verdict": "SAT", "ones": ones, "assignment": a, "millis": ms}),
            )
        }
        KsResult::Unsat => Output::new("kscolor", "UNSAT".into(), json!({"verdict": "UNSAT", "millis": ms}))
            .with_code(EXIT_UNSAT),
    })
}

fn complete(o: &Opts) -> CliResult<Output> {
    let s = vector_set(o)?;
    let p = s.projectors();
    let first = completion_additions(&p)?.len();
    let closed = complete_ks(&p)?;
    let ranks: Vec<usize> = closed.iter().map(|q| q.rank()).collect();
    Ok(Output::new(
        "complete",
        format!(
            "{}: {} projectors, {} added in the first round, {} after closure ({})",
            s.name,
            p.len(),
            first,
            closed.len(),
            if first == 0 { "complete" } else { "not complete" }
        ),
        json!({"n": p.len(), "complete": first == 0, "first_round": first, "closure_size": closed.len(), "ranks": ranks}),
    ))
}

fn lift(o: &Opts) -> CliResult<Output> {
    let Some(d) = o.dim else {
        return usage("lift needs --dim");
    };
    let l = lift_peres(d)?;
    let ids = l.identifications();
    let set: Value = serde_json::from_str(&serialize(&l.set)).expect("serialized set is JSON");
    Ok(Output::new(
        "lift",
        format!(
            "{}: {} vectors in d = {}, {} identifications, weight sum {}",
            l.set.name,
            l.set.len(),
            d,
            ids.len(),
            ratio_text(l.set.weight_sum())
        ),
        json!({"set": set, "identifications": ids, "sources": l.sources}),
    ))
}

fn equiv(a: &str, b: &str) -> CliResult<Output> {
    let (sa, sb) = (resolve(a)?, resolve(b)?);
    let v = equivalent(&sa.kets(), &sb.kets())?;
    Ok(Output::new(
        "equiv",
        format!("{v:?}"),
        json!({"a": sa.name, "b": sb.name, "verdict": format!("{v:?}")}),
    ))
}

fn simulate(o: &Opts, kind: StateArg, noise: &NoiseModel, both: bool) -> CliResult<Output> {
    let s = vector_set(o)?;
    let w = default_witness(&s)?;
    let rho = state(kind, o.seed, s.dim);
    let stats = sample_stats_with(&s.projectors(), &w, &rho, o.shots, o.seed, noise, both)?;
    let (v, se) = estimate_witness(&stats.probabilities(), &w)?;
    let stats_json = serde_json::to_value(&stats).expect("stats serialize");
    let text = if o.json {
        format!("estimate {v:.6} +- {se:.6} from {} shots per term", o.shots)
    } else {
        serde_json::to_string_pretty(&stats_json).expect("stats serialize")
    };
    Ok(Output::new(
        "simulate",
        text,
        json!({"stats": stats_json, "estimate": v, "stderr": se, "noise": noise}),
    ))
}

fn quality_cmd(o: &Opts, rotation: f64) -> CliResult<Output> {
    let s = vector_set(o)?;
    let p = perturb_realization(&s.projectors(), rotation, o.seed)?;
    let q = quality(&p, &weighted_graph(&s)?)?;
    let worst = q.per_edge.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1));
    Ok(Output::new(
        "quality",
        format!("theta {:.6}, eps {:.3e}", q.theta, q.eps),
        json!({"theta": q.theta, "eps": q.eps, "worst_edge": worst.map(|w| w.0), "per_edge": q.per_edge}),
    ))
}

fn load_stats(path: &std::path::Path) -> CliResult<SeqStats> {
    let text = read_file(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad stats file: {e}")))?;
    // Accept both bare counts and the `--json` envelope of `simulate`.
    let inner = v.pointer("/result/stats").cloned().unwrap_or(v);
    serde_json::from_value(inner).map_err(|e| CliError::Usage(format!("bad stats file: {e}")))
}

fn report_text(r: &CertReport) -> String {
    let mut t = format!(
        "{}: {:?} ({:?} mode, theta {:.6}, eps {:.3e}, Q {:.6})",
        r.set, r.verdict, r.mode, r.theta, r.eps, r.thresholds.q
    );
    for v in &r.violations {
        let _ = write!(t, "\n  violated: {} ({:.6} vs {:.6})", v.condition, v.lhs, v.rhs);
    }
    for n in &r.notes {
        let _ = write!(t, "\n  note: {n}");
    }
    t
}

fn certify_cmd(o: &Opts, stats: Option<&std::path::Path>, rotation: f64) -> CliResult<Output> {
    let s = vector_set(o)?;
    let r = match (o.theta, stats) {
        (Some(_), Some(_)) => return usage("give either --theta/--eps or --stats"),
        (Some(theta), None) => {
            let e = Evidence::Quality {
                theta,
                eps: o.eps.unwrap_or(0.0),
                extra_defects: None,
            };
            certify(&e, &s, o.attest_full_rank)?
        }
        (None, Some(path)) => certify(&Evidence::Stats(load_stats(path)?), &s, o.attest_full_rank)?,
        (None, None) => {
            if o.eps.is_some() {
                return usage("--eps needs --theta");
            }
            let p = perturb_realization(&s.projectors(), rotation, o.seed)?;
            certify_realization(&p, &s, o.attest_full_rank)?
        }
    };
    let code = if r.verdict.is_rejected() { EXIT_REJECTED } else { EXIT_OK };
    Ok(Output::new("certify", report_text(&r), serde_json::to_value(&r).expect("report serializes")).with_code(code))
}

fn robustness(o: &Opts, mags: Option<&[f64]>) -> CliResult<Output> {
    let s = vector_set(o)?;
    let default: Vec<f64> = (0..9).map(|k| 1e-4 * 10f64.powf(k as f64 / 4.0)).collect();
    let c = robustness_curve(&s, mags.unwrap_or(&default), o.seed)?;
    let mut text = String::new();
    for p in &c.points {
        match (p.residual, &p.error) {
            (Some(r), _) => {
                let _ = writeln!(text, "sigma {:.3e}  eps {:.3e}  residual {:.3e}", p.sigma, p.eps, r);
            }
            (None, Some(e)) => {
                let _ = writeln!(text, "sigma {:.3e}  failed: {e}", p.sigma);
            }
            _ => {}
        }
    }
    match c.slope {
        Some(sl) => {
            let _ = write!(text, "log-log slope {sl:.4}");
        }
        None => text.push_str("log-log slope undefined"),
    }
    let mut v = serde_json::to_value(&c).expect("curve serializes");
    v["sqrt_ratio"] = json!(c.sqrt_ratio());
    Ok(Output::new("robustness", text, v))
}

fn game(o: &Opts) -> CliResult<Output> {
    let s = vector_set(o)?;
    let p = s.projectors();
    let r = play(&p)?;
    let tol = o.tol.unwrap_or(SELFTEST_TOL);
    let st = selftest_conditions(&DensityState::pure(&max_entangled(s.dim)?), &p, tol).ok();
    let mut v = serde_json::to_value(&r).expect("game serializes");
    v["selftest_phi_plus"] = serde_json::to_value(&st).expect("self-test serializes");
    Ok(Output::new(
        "game",
        format!(
            "classical {:.6} ({} / {}), quantum {:.10}, gap {:.6}",
            r.classical.value,
            r.classical.raw,
            (r.classical.raw / r.classical.value).round(),
            r.quantum.value,
            r.gap
        ),
        v,
    ))
}

fn exclusivity(o: &Opts) -> CliResult<Output> {
    let s = vector_set(o)?;
    let b = exclusivity_bound(&default_witness(&s)?)?;
    Ok(Output::new("exclusivity-bound", format!("{b:.6}"), json!({"bound": b})))
}

pub fn threshold_values(s: &VectorSet) -> CliResult<Value> {
    let inst = Instance::from_set(s)?;
    let tau = critical_eps_tau(&inst)?;
    let nu = critical_eps_nu(&inst)?;
    let l2 = lemma2_threshold(&inst)?;
    let published = published_thresholds(&s.name).map(|p| json!({"eps_tau": p.eps_tau, "eps_nu": p.eps_nu, "lemma2": p.lemma2}));
    Ok(json!({
        "eps_tau": tau.eps,
        "eps_tau_bracket": [tau.lower, tau.upper],
        "eps_nu": nu.eps,
        "eps_nu_bracket": [nu.lower, nu.upper],
        "lemma2": l2.threshold,
        "published": published,
    }))
}

fn thresholds(o: &Opts) -> CliResult<Output> {
    let s = vector_set(o)?;
    let v = threshold_values(&s)?;
    let f = |k: &str| v[k].as_f64().unwrap_or(f64::NAN);
    Ok(Output::new(
        "thresholds",
        format!(
            "eps_tau {:.5}, eps_nu {:.5}, lemma2 {:.5}",
            f("eps_tau"),
            f("eps_nu"),
            f("lemma2")
        ),
        v,
    ))
}
