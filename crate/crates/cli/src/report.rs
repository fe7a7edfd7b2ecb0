//! The `report` battery. Its output follows `schema/report.schema.json`.

use std::fmt::Write as _;

use serde_json::{json, Value};

use kscert::catalog::{builtin_vectors, pm_square};
use kscert::constructor::peres33_alternate;
use kscert::equiv::equivalent;
use kscert::graphcore::independence_number;
use kscert::kscolor::{ks_assignments, KsInstance};
use kscert::ksgame::play;
use kscert::qcore::DensityState;
use kscert::sdpsolve::lovasz_theta;
use kscert::simulate::{estimate_witness, sample_stats, NoiseModel};
use kscert::witness::{default_witness, exclusivity_bound, pm_scan, state_independence_scan};

use crate::commands::{ratio_text, threshold_values, weighted_graph, Output};
use crate::input::CliResult;

pub const REPORT_SCHEMA: &str = "kscert-report/1";

const SETS: [&str; 6] = ["bbc21", "ceg18", "peres24", "yo13", "peres39", "peres33"];
const THRESHOLD_SETS: [&str; 4] = ["bbc21", "ceg18", "peres24", "yo13"];
const EXCLUSIVITY_SETS: [&str; 3] = ["bbc21", "ceg18", "peres24"];
const SCAN_TRIALS: usize = 100;
const SIM_SHOTS: u64 = 1_000_000;

pub fn report(quick: bool, seed: u64) -> CliResult<Output> {
    let mut text = String::new();
    let mut sets = Vec::new();
    for name in SETS {
        let s = builtin_vectors(name)?;
        let g = weighted_graph(&s)?;
        let alpha = independence_number(&g)?.value;
        let theta = lovasz_theta(&g)?;
        let w = default_witness(&s)?;
        let dev = state_independence_scan(&s.projectors(), &w, SCAN_TRIALS, seed)?;
        let sat = ks_assignments(&KsInstance::from_set(&s)).is_sat();
        let excl = if !quick && EXCLUSIVITY_SETS.contains(&name) {
            Some(exclusivity_bound(&w)?)
        } else {
            None
        };
        let thresholds = if !quick && THRESHOLD_SETS.contains(&name) {
            Some(threshold_values(&s)?)
        } else {
            None
        };
        let _ = writeln!(
            text,
            "{name:<8} Q {:>9.6}  alpha {:>3}  theta {theta:>10.6}  |W-Q| {dev:.1e}  {}{}",
            w.q,
            ratio_text(alpha),
            if sat { "SAT" } else { "UNSAT" },
            excl.map(|b| format!("  exclusivity {b:.6}")).unwrap_or_default()
        );
        if let Some(t) = &thresholds {
            let f = |k: &str| t[k].as_f64().unwrap_or(f64::NAN);
            let _ = writeln!(
                text,
                "         eps_tau {:.5}  eps_nu {:.5}  lemma2 {:.5}",
                f("eps_tau"),
                f("eps_nu"),
                f("lemma2")
            );
        }
        sets.push(json!({
            "name": name,
            "dim": s.dim,
            "n": s.len(),
            "q": w.q,
            "alpha": {"exact": ratio_text(alpha), "value": *alpha.numer() as f64 / *alpha.denom() as f64},
            "theta": theta,
            "state_independence": dev,
            "ks": if sat { "SAT" } else { "UNSAT" },
            "exclusivity_bound": excl,
            "thresholds": thresholds,
        }));
    }

    let pm_dev = pm_scan(&pm_square(), SCAN_TRIALS, seed)?;
    let _ = writeln!(text, "pm       Q  6.000000  |W-Q| {pm_dev:.1e}");

    let game = play(&builtin_vectors("peres24")?.projectors())?;
    let _ = writeln!(
        text,
        "peres24 game: classical {:.6}, quantum {:.10}",
        game.classical.value, game.quantum.value
    );

    let p33 = builtin_vectors("peres33")?.kets();
    let alt = equivalent(&p33, &peres33_alternate()?.kets())?;
    let _ = writeln!(text, "peres33 vs alternate: {alt:?}");

    let ceg = builtin_vectors("ceg18")?;
    let w = default_witness(&ceg)?;
    let st = sample_stats(
        &ceg.projectors(),
        &w,
        &DensityState::maximally_mixed(ceg.dim),
        SIM_SHOTS,
        seed,
        &NoiseModel::default(),
    )?;
    let (est, se) = estimate_witness(&st.probabilities(), &w)?;
    let _ = write!(text, "ceg18 simulation: {est:.6} +- {se:.6} ({SIM_SHOTS} shots)");

    let result: Value = json!({
        "schema": REPORT_SCHEMA,
        "seed": seed,
        "quick": quick,
        "sets": sets,
        "pm": {"max_deviation": pm_dev, "q": 6.0, "nc_bound": 4.0},
        "game": {
            "set": "peres24",
            "classical": {"value": game.classical.value, "strategy": game.classical.strategy},
            "quantum": {"value": game.quantum.value},
            "gap": game.gap,
        },
        "equivalence": {"a": "peres33", "b": "peres33-alt", "verdict": format!("{alt:?}")},
        "simulation": {"set": "ceg18", "shots": SIM_SHOTS, "estimate": est, "stderr": se},
    });
    Ok(Output::new("report", text, result))
}
