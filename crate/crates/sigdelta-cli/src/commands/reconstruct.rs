use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use sigdelta::filters::FirFilter;
use sigdelta::quantizer::{run, Rule};
use sigdelta::signals::{
    reconstruct, second_order_error_bound, sup_error, ReconstructionKernel, SignalSpec, DEFAULT_HALF_WIDTH,
    DEFAULT_KERNEL_STEP, DEFAULT_MARGIN,
};

use crate::config::{load, InitSpec};
use crate::error::{usage, CliResult};
use crate::output::{num, Output};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub margin: f64,
    pub step: f64,
    pub half_width: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            margin: DEFAULT_MARGIN,
            step: DEFAULT_KERNEL_STEP,
            half_width: DEFAULT_HALF_WIDTH,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Quantized bits.
    #[default]
    Bits,
    /// The samples themselves, as a check on the kernel.
    Samples,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    pub signal: SignalSpec,
    pub filter: FirFilter,
    pub lambda: f64,
    #[serde(default)]
    pub kernel: KernelConfig,
    /// Truncation radius; defaults to the kernel half width.
    #[serde(default)]
    pub radius: Option<f64>,
    /// Error grid step; defaults to `1/(10λ)`.
    #[serde(default)]
    pub grid_step: Option<f64>,
    /// Range where the error is measured, clipped to the well-covered part.
    #[serde(default)]
    pub interior: Option<[f64; 2]>,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub source: Source,
    /// Keep every n-th grid point in the CSV.
    #[serde(default = "one")]
    pub csv_stride: usize,
}

pub fn execute(config: &Path, out: &Path, seed: u64) -> CliResult<()> {
    let cfg: ReconstructConfig = load(config)?;
    let o = Output::new(out, "reconstruct", seed, &cfg)?;
    if cfg.signal.eval(cfg.signal.interval[0]).is_none() {
        return Err(usage("reconstruct needs a continuous-time signal"));
    }
    if cfg.csv_stride == 0 {
        return Err(usage("csv_stride must be positive"));
    }
    let lambda = cfg.lambda;
    let s = cfg.signal.sample(lambda)?;
    let kc = cfg.kernel;
    let kernel = ReconstructionKernel::new(kc.margin, kc.step, kc.half_width)?;
    let radius = cfg.radius.unwrap_or(kernel.half_width());
    let k = cfg.filter.minimal_k();
    let init = cfg.init.resolve(cfg.filter.len(), k, &mut super::rng(seed, 0))?;
    let trace = run(&cfg.filter, &init, &s.values, Rule::Greedy)?;
    let coeffs: Vec<f64> = match cfg.source {
        Source::Bits => trace.bits.iter().map(|b| b.value()).collect(),
        Source::Samples => s.values.clone(),
    };
    let fq = reconstruct(&coeffs, s.start, lambda, &kernel, radius)?;
    let grid = cfg.grid_step.unwrap_or(1.0 / (10.0 * lambda));
    let want = cfg.interior.unwrap_or(cfg.signal.interval);
    let err = sup_error(&cfg.signal, &fq, (want[0], want[1]), grid)?;

    // the same grid as the error measurement, written out for plotting
    let (ca, cb) = fq.interior();
    let (a, b) = (want[0].max(ca), want[1].min(cb));
    let ratio = 1.0 / (grid * lambda);
    let m = ratio.round();
    let pts: Vec<(f64, f64)> = if m >= 1.0 && (ratio - m).abs() < 1e-9 {
        let m = m as usize;
        let fine = lambda * m as f64;
        let lo = ((a - s.start) * fine - 1e-9).ceil().max(0.0) as usize;
        let hi = ((b - s.start) * fine + 1e-9).floor() as usize;
        fq.eval_fine_grid(m, lo, hi)
            .into_iter()
            .enumerate()
            .map(|(i, v)| (s.start + (lo + i) as f64 / fine, v))
            .collect()
    } else {
        let n = ((b - a) / grid).floor() as usize;
        (0..=n)
            .map(|j| {
                let t = a + j as f64 * grid;
                (t, fq.eval(t).value)
            })
            .collect()
    };
    let rows: Vec<Vec<String>> = pts
        .iter()
        .step_by(cfg.csv_stride)
        .map(|&(t, q)| {
            let f = cfg.signal.eval(t).unwrap_or(f64::NAN);
            vec![num(t), num(f), num(q), num(f - q)]
        })
        .collect();
    o.csv("reconstruction.csv", &["t", "f", "f_q", "error"], &rows)?;

    let bound = match (cfg.source, cfg.filter.check_moment_conditions(2).satisfied) {
        (Source::Bits, true) => {
            let g = cfg.filter.solve_g(2)?;
            Some(second_order_error_bound(
                lambda,
                &kernel,
                trace.max_abs_state(),
                g.l1_norm(),
            ))
        }
        _ => None,
    };
    o.json(
        "summary.json",
        json!({
            "samples": s.values.len(),
            "source": cfg.source,
            "sup_error": err,
            "error_bound": bound,
            "within_bound": bound.map(|b| err.value <= b),
            "max_abs_v": trace.max_abs_state(),
            "kernel": {
                "margin": kernel.margin(),
                "table_step": kernel.grid_step(),
                "half_width": kernel.half_width(),
                "radius": radius,
                "deriv1_l1": kernel.deriv1_l1(),
                "deriv2_l1": kernel.deriv2_l1(),
            },
        }),
    )?;
    Ok(())
}
