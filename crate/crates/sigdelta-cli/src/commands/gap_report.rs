use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use sigdelta::stability::{classical_limit, gap, lambda0, theorem_limit, y_star, StabilityReport};

use crate::config::load;
use crate::error::CliResult;
use crate::output::{num, Output};

fn default_y_points() -> usize {
    200
}

fn default_lambda_points() -> usize {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapReportConfig {
    pub k: Vec<usize>,
    #[serde(default = "default_y_points")]
    pub y_points: usize,
    #[serde(default = "default_lambda_points")]
    pub lambda_points: usize,
    /// Amplitudes for full stability reports at every k.
    #[serde(default)]
    pub amplitudes: Vec<f64>,
}

pub fn execute(config: &Path, out: &Path, seed: u64) -> CliResult<()> {
    let cfg: GapReportConfig = load(config)?;
    let o = Output::new(out, "gap-report", seed, &cfg)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut curve = Vec::new();
    let mut l0 = Vec::new();
    let mut ks = cfg.k.clone();
    ks.sort_unstable();
    ks.dedup();
    for &k in &ks {
        let lo = classical_limit(k);
        let ys = y_star(k)?;
        let g_lo = gap(k, lo)?.g;
        let lim = theorem_limit(k);
        rows.push(vec![k.to_string(), num(ys), num(lim), num(lo), num(g_lo)]);
        for j in 0..cfg.y_points {
            let y = lo + (1.0 - lo) * j as f64 / cfg.y_points as f64;
            let v = gap(k, y)?;
            curve.push(vec![k.to_string(), num(y), num(v.g), num(v.m)]);
        }
        let mut lcurve = Vec::new();
        for j in 1..=cfg.lambda_points {
            let f = lim * j as f64 / (cfg.lambda_points + 1) as f64;
            let l = lambda0(k, f)?;
            l0.push(vec![k.to_string(), num(f), num(l)]);
            lcurve.push([f, l]);
        }
        let reports = cfg
            .amplitudes
            .iter()
            .map(|&a| StabilityReport::new(k, a))
            .collect::<Result<Vec<_>, _>>()?;
        summary.push(json!({
            "k": k,
            "y_star": ys,
            "theorem_limit": lim,
            "classical_limit": lo,
            "g_at_classical_limit": g_lo,
            "lambda0_curve": lcurve,
            "reports": reports,
        }));
    }
    o.json("gap_report.json", json!({ "rows": summary }))?;
    o.csv(
        "gap_report.csv",
        &[
            "k",
            "y_star",
            "theorem_limit",
            "classical_limit",
            "g_at_classical_limit",
        ],
        &rows,
    )?;
    o.csv("gap_curve.csv", &["k", "y", "g", "m"], &curve)?;
    o.csv("lambda0.csv", &["k", "f_sup", "lambda0"], &l0)?;
    Ok(())
}
