use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use sigdelta::adversary::{
    default_window, divergence_detector, smoothness_cap, AdversaryMode, AdversarySpec,
};
use sigdelta::stability::{classical_limit, StabilityReport};

use crate::config::load;
use crate::error::{usage, CliResult};
use crate::output::{num, Output};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedRun {
    pub name: String,
    /// Replaces `max_step` of a peak-flip run with the smoothness cap.
    #[serde(default)]
    pub smooth_cap: bool,
    #[serde(flatten)]
    pub spec: AdversarySpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    pub runs: Vec<NamedRun>,
    /// Divergence threshold; defaults to `M(|amplitude|, k)`.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub window: Option<usize>,
}

pub fn execute(config: &Path, out: &Path, seed: u64) -> CliResult<()> {
    let cfg: AdversaryConfig = load(config)?;
    let o = Output::new(out, "adversary", seed, &cfg)?;
    let mut names: Vec<&str> = cfg.runs.iter().map(|r| r.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(usage("run names must be unique"));
    }
    if let Some(bad) = names.iter().find(|n| n.is_empty() || n.contains(['/', '\\'])) {
        return Err(usage(format!("run name {bad:?} is not a plain file name")));
    }
    let mut results = Vec::new();
    for r in &cfg.runs {
        let mut spec = r.spec.clone();
        let (k, a) = (spec.k, spec.amplitude.abs());
        let mut cap = None;
        if r.smooth_cap {
            match &mut spec.mode {
                AdversaryMode::PeakFlip { max_step, .. } => {
                    let c = smoothness_cap(k, a)?;
                    *max_step = Some(c);
                    cap = Some(c);
                }
                _ => {
                    return Err(usage(format!(
                        "run {}: smooth_cap applies to peak_flip only",
                        r.name
                    )))
                }
            }
        }
        let trace = spec.run()?;
        let threshold = match cfg.threshold {
            Some(t) => t,
            None if a > classical_limit(k) => StabilityReport::new(k, a)?.m,
            None => 1.0 + 1e-9,
        };
        let window = match cfg.window {
            Some(w) => w,
            None => default_window(k, a).unwrap_or(10 * (k + 1)),
        };
        let verdict = divergence_detector(&trace.states, threshold, window)?;
        let rows: Vec<Vec<String>> = (0..trace.len())
            .map(|n| vec![n.to_string(), num(trace.inputs[n]), num(trace.states[n])])
            .collect();
        o.csv(&format!("{}.csv", r.name), &["n", "y", "v"], &rows)?;
        let min_v = trace.states.iter().copied().fold(f64::INFINITY, f64::min);
        let max_v = trace.states.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        results.push(json!({
            "name": r.name,
            "steps": trace.len(),
            "init": trace.init,
            "max_abs_v": trace.max_abs_state(),
            "min_v": min_v,
            "max_v": max_v,
            "first_below_minus_one": trace.states.iter().position(|&v| v < -1.0),
            "excursions": trace.excursions().len(),
            "smoothness_cap": cap,
            "threshold": threshold,
            "window": window,
            "verdict": verdict,
        }));
    }
    o.json("adversary.json", json!({ "runs": results }))?;
    Ok(())
}
