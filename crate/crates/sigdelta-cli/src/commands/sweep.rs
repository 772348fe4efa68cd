use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sigdelta::filters::make_minimal_filter;
use sigdelta::quantizer::Quantizer;
use sigdelta::signals::{SignalSpec, BAND_EDGE};
use sigdelta::stability::{lambda0, theorem_limit, y_star, StabilityReport};
use sigdelta::trajectory::critical_trigger;

use crate::config::{load, InitKind, InitSpec};
use crate::error::{usage, CliResult};
use crate::output::{num, opt_num, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Constant,
    Blsum,
}

fn default_horizon() -> usize {
    10_000
}

fn default_inits() -> usize {
    10
}

fn default_tones() -> usize {
    6
}

fn default_spectra() -> usize {
    5
}

fn default_interval() -> [f64; 2] {
    [0.0, 50.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: Family,
    pub k: Vec<usize>,
    pub amplitudes: Vec<f64>,
    /// Sampling rates for the blsum family; empty means `⌈λ₀⌉` per cell.
    #[serde(default)]
    pub lambdas: Vec<f64>,
    /// Steps per run for the constant family.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Random initial histories per cell, besides the critical trigger.
    #[serde(default = "default_inits")]
    pub inits: usize,
    #[serde(default = "default_tones")]
    pub tones: usize,
    #[serde(default = "default_spectra")]
    pub spectra: usize,
    #[serde(default = "default_interval")]
    pub interval: [f64; 2],
}

pub const HEADER: [&str; 13] = [
    "k",
    "amplitude",
    "lambda",
    "runs",
    "max_abs_v",
    "min_v",
    "max_v",
    "m",
    "certified",
    "violations",
    "lambda0",
    "y_star",
    "classical",
];

#[derive(Debug, Clone, Copy)]
struct Cell {
    index: usize,
    k: usize,
    amplitude: f64,
    lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Extremes {
    min: f64,
    max: f64,
    violations: usize,
}

fn track(q: &mut Quantizer<'_>, y: impl Iterator<Item = f64>, m: f64) -> CliResult<Extremes> {
    let mut e = Extremes {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        violations: 0,
    };
    let mut bad = false;
    for yn in y {
        let (_, v) = q.step(yn)?;
        e.min = e.min.min(v);
        e.max = e.max.max(v);
        bad |= v < -1.0 || v > m;
    }
    e.violations = bad as usize;
    Ok(e)
}

fn run_cell(cfg: &SweepConfig, cell: Cell, seed: u64) -> CliResult<Vec<String>> {
    let Cell { k, amplitude: a, .. } = cell;
    let mut rng = super::rng(seed, cell.index as u64 + 1);
    let report = StabilityReport::new(k, a)?;
    let filter = make_minimal_filter(k)?;
    let mut inits = vec![critical_trigger(k)?];
    for _ in 0..cfg.inits {
        inits.push(InitSpec::Named(InitKind::Random).resolve(k + 1, Some(k), &mut rng)?);
    }
    let mut all = Extremes {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        violations: 0,
    };
    let mut runs = 0;
    let mut merge = |e: Extremes| {
        all.min = all.min.min(e.min);
        all.max = all.max.max(e.max);
        all.violations += e.violations;
    };
    match cfg.family {
        Family::Constant => {
            for init in &inits {
                let mut q = Quantizer::greedy(filter.filter(), init)?;
                merge(track(&mut q, std::iter::repeat_n(a, cfg.horizon), report.m)?);
                runs += 1;
            }
        }
        Family::Blsum => {
            let lambda = cell.lambda.unwrap_or(f64::NAN);
            for s in 0..cfg.spectra {
                let f = SignalSpec::random_blsum(&mut rng, cfg.tones, BAND_EDGE, cfg.interval, a)?;
                let y = f.sample(lambda)?.values;
                let init = &inits[s % inits.len()];
                let mut q = Quantizer::greedy(filter.filter(), init)?;
                merge(track(&mut q, y.into_iter(), report.m)?);
                runs += 1;
            }
        }
    }
    let certified = a < theorem_limit(k) || a <= y_star(k)?;
    Ok(vec![
        k.to_string(),
        num(a),
        opt_num(cell.lambda),
        runs.to_string(),
        num(all.min.abs().max(all.max.abs())),
        num(all.min),
        num(all.max),
        num(report.m),
        certified.to_string(),
        all.violations.to_string(),
        opt_num(report.lambda0),
        num(report.y_star),
        report.classical_ok.to_string(),
    ])
}

pub fn execute(config: &Path, out: &Path, seed: u64) -> CliResult<()> {
    let cfg: SweepConfig = load(config)?;
    let o = Output::new(out, "sweep", seed, &cfg)?;
    if let Some(a) = cfg.amplitudes.iter().find(|a| !(**a >= 0.0 && **a < 1.0)) {
        return Err(usage(format!("amplitude {a} outside [0, 1)")));
    }
    let mut ks = cfg.k.clone();
    ks.sort_unstable();
    ks.dedup();
    let mut amps = cfg.amplitudes.clone();
    amps.sort_by(f64::total_cmp);
    amps.dedup();
    let mut lambdas = cfg.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let mut cells = Vec::new();
    for &k in &ks {
        for &a in &amps {
            match cfg.family {
                Family::Constant => cells.push(Cell {
                    index: cells.len(),
                    k,
                    amplitude: a,
                    lambda: None,
                }),
                Family::Blsum if cfg.lambdas.is_empty() => {
                    let l = lambda0(k, a).map_err(|e| {
                        usage(format!(
                            "no λ₀ at k = {k}, amplitude {a} ({e}); give `lambdas` explicitly"
                        ))
                    })?;
                    cells.push(Cell {
                        index: cells.len(),
                        k,
                        amplitude: a,
                        lambda: Some(l.ceil()),
                    });
                }
                Family::Blsum => {
                    for &l in &lambdas {
                        cells.push(Cell {
                            index: cells.len(),
                            k,
                            amplitude: a,
                            lambda: Some(l),
                        });
                    }
                }
            }
        }
    }
    let rows: Vec<Vec<String>> = cells
        .par_iter()
        .map(|&c| run_cell(&cfg, c, seed))
        .collect::<CliResult<_>>()?;
    o.csv("sweep.csv", &HEADER, &rows)?;
    Ok(())
}
