use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use sigdelta::filters::FirFilter;
use sigdelta::quantizer::{max_abs, run, Rule};
use sigdelta::signals::SignalSpec;
use sigdelta::stability::{classical_criterion, classical_limit, StabilityReport};

use crate::config::{load, InitSpec};
use crate::error::CliResult;
use crate::output::Output;

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizeConfig {
    pub filter: FirFilter,
    #[serde(default)]
    pub rule: Option<Rule>,
    pub signal: SignalSpec,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default = "yes")]
    pub unit_band: bool,
}

pub fn execute(config: &Path, out: &Path, seed: u64) -> CliResult<()> {
    let cfg: QuantizeConfig = load(config)?;
    let o = Output::new(out, "quantize", seed, &cfg)?;
    let (y, start, stretch) = super::input_samples(&cfg.signal, cfg.lambda, cfg.horizon, cfg.unit_band)?;
    let k = cfg.filter.minimal_k();
    let init = cfg.init.resolve(cfg.filter.len(), k, &mut super::rng(seed, 0))?;
    let rule = cfg.rule.clone().unwrap_or(Rule::Greedy);
    let trace = run(&cfg.filter, &init, &y, rule)?;

    o.write_with("trace.csv", |w| {
        o.csv_preamble(w)?;
        trace.write_csv(w)?;
        Ok(())
    })?;

    let amp = max_abs(&y);
    let min_v = trace.states.iter().copied().fold(f64::INFINITY, f64::min);
    let max_v = trace.states.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let large = k.map(classical_limit);
    let excursions: Vec<_> = trace
        .excursions()
        .iter()
        .map(|e| {
            let y0 = y[e.start];
            json!({
                "start": e.start,
                "end": e.end,
                "side": e.side,
                "len": e.len(),
                "peak": max_abs(&trace.states[e.start..=e.end]),
                "y_start": y0,
                "large_input": large.map(|l| y0.abs() > l),
            })
        })
        .collect();
    let report = match k {
        Some(k) if k >= 3 && amp < 1.0 => Some(StabilityReport::new(k, amp)?),
        _ => None,
    };
    let within = report.as_ref().map(|r| min_v >= -1.0 && max_v <= r.m);
    o.json(
        "summary.json",
        json!({
            "samples": y.len(),
            "start": start,
            "time_stretch": stretch,
            "init": init,
            "input_sup": amp,
            "max_abs_v": trace.max_abs_state(),
            "min_v": min_v,
            "max_v": max_v,
            "classical_criterion": classical_criterion(&cfg.filter, amp),
            "within_unit_interval": trace.max_abs_state() <= 1.0,
            "within_theoretical_bound": within,
            "stability": report,
            "sign_coupling_violations": trace.sign_coupling_violations(),
            "excursions": excursions,
        }),
    )?;
    Ok(())
}
