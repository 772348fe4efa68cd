use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use sigdelta::filters::FirFilter;
use sigdelta::stability::{classical_limit, theorem_limit, y_star, StabilityReport};
use sigdelta::trajectory::{coefficient_table, coverage_upper_bound, critical_trajectory, delta_h1_bounds};

use crate::config::load;
use crate::error::CliResult;
use crate::output::Output;

fn default_rows() -> usize {
    40
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeFilterConfig {
    pub filter: FirFilter,
    /// Moment order to check; defaults to the filter's declared order, else 2.
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default = "default_rows")]
    pub table_rows: usize,
    /// Constant amplitudes for critical-trigger analyses.
    #[serde(default)]
    pub amplitudes: Vec<f64>,
}

pub fn execute(config: &Path, out: &Path, seed: u64) -> CliResult<()> {
    let cfg: AnalyzeFilterConfig = load(config)?;
    let o = Output::new(out, "analyze-filter", seed, &cfg)?;
    let f = &cfg.filter;
    let r = cfg.order.unwrap_or(match f.declared_order() {
        0 => 2,
        n => n,
    });
    let moments = f.check_moment_conditions(r);
    let g = if moments.satisfied {
        Some(f.solve_g(r)?)
    } else {
        None
    };
    let mut doc = json!({
        "taps": f.taps(),
        "l1_norm": f.l1_norm(),
        "order": r,
        "moments": moments,
        "g": g.as_ref().map(|g| json!({
            "values": g.values,
            "support": g.support,
            "l1_norm": g.l1_norm(),
            "forward_residual": g.forward_residual(f),
        })),
        "minimal_k": f.minimal_k(),
    });
    if let Some(k) = f.minimal_k() {
        let table = coefficient_table(k, cfg.table_rows)?;
        o.write_with("coefficient_table.csv", |w| {
            o.csv_preamble(w)?;
            table.write_csv(w)?;
            Ok(())
        })?;
        let mut m = json!({ "classical_limit": classical_limit(k) });
        if k >= 3 {
            m["delta_h1_bounds"] = serde_json::to_value(delta_h1_bounds(k)?)?;
            m["theorem_limit"] = json!(theorem_limit(k));
            m["y_star"] = json!(y_star(k)?);
        }
        let mut runs = Vec::new();
        for &y in &cfg.amplitudes {
            let mut e = json!({ "amplitude": y, "critical": critical_trajectory(k, y)? });
            if k >= 3 && y > classical_limit(k) && y < 1.0 {
                e["coverage_bounds"] = serde_json::to_value(coverage_upper_bound(k, y)?)?;
                e["stability"] = serde_json::to_value(StabilityReport::new(k, y)?)?;
            }
            runs.push(e);
        }
        m["amplitudes"] = Value::Array(runs);
        doc["minimal"] = m;
    }
    o.json("filter.json", doc)?;
    Ok(())
}
