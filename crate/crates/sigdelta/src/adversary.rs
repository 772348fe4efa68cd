//! Inputs that drive the minimal second-order scheme out of `[−1, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::make_minimal_filter;
use crate::quantizer::{run, Bit, QuantizerState, QuantizerTrace, Rule};
use crate::stability::{classical_limit, gap};
use crate::trajectory::coverage_upper_bound;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AdversaryMode {
    /// `hi` before `change_index`, `new_level` from it on.
    FixedStep {
        change_index: usize,
        new_level: f64,
        horizon: usize,
    },
    PeakFlip {
        horizon: usize,
        /// Largest change of the input between consecutive samples.
        #[serde(default)]
        max_step: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarySpec {
    pub k: usize,
    pub amplitude: f64,
    #[serde(flatten)]
    pub mode: AdversaryMode,
    /// Defaults to the critical trigger.
    #[serde(default)]
    pub init: Option<Vec<f64>>,
}

impl AdversarySpec {
    pub fn run(&self) -> Result<QuantizerTrace> {
        if !(self.amplitude.abs() < 1.0) {
            return Err(Error::InvalidParameter(
                "adversary amplitude must be below 1".into(),
            ));
        }
        let init = match &self.init {
            Some(v) => v.clone(),
            None => crate::trajectory::critical_trigger(self.k)?,
        };
        match self.mode {
            AdversaryMode::FixedStep {
                change_index,
                new_level,
                horizon,
            } => step_counterexample(self.k, self.amplitude, new_level, change_index, horizon, &init),
            AdversaryMode::PeakFlip { horizon, max_step } => {
                peak_flip_generator(self.k, self.amplitude, horizon, &init, max_step)
            }
        }
    }
}

/// Greedy run with input `hi` for `n < change_index` and `lo` afterwards.
pub fn step_counterexample(
    k: usize,
    hi: f64,
    lo: f64,
    change_index: usize,
    horizon: usize,
    init: &[f64],
) -> Result<QuantizerTrace> {
    if !(hi > classical_limit(k) && hi < 1.0) {
        return Err(Error::Domain(format!(
            "high level {hi} outside ({}, 1)",
            classical_limit(k)
        )));
    }
    let f = make_minimal_filter(k)?;
    let y: Vec<f64> = (0..horizon)
        .map(|n| if n < change_index { hi } else { lo })
        .collect();
    run(f.filter(), init, &y, Rule::Greedy)
}

/// `g(A,k) / (N̂ + k + 1)` with `N̂` the larger coverage bound.
pub fn smoothness_cap(k: usize, amplitude: f64) -> Result<f64> {
    let g = gap(k, amplitude)?.g;
    if g <= 0.0 {
        return Err(Error::Domain(format!(
            "gap at amplitude {amplitude} is not positive"
        )));
    }
    let b = coverage_upper_bound(k, amplitude)?.max();
    Ok(g / (b + k as f64 + 1.0))
}

fn side(v: f64) -> i8 {
    if v > 1.0 {
        1
    } else if v < -1.0 {
        -1
    } else {
        0
    }
}

/// Input `±amplitude` whose sign flips once per excursion, at the step where
/// `|v|` would first decrease; with `max_step`, the input slews toward its target.
pub fn peak_flip_generator(
    k: usize,
    amplitude: f64,
    horizon: usize,
    init: &[f64],
    max_step: Option<f64>,
) -> Result<QuantizerTrace> {
    if !(amplitude > 0.0 && amplitude < 1.0) {
        return Err(Error::Domain(format!("amplitude {amplitude} outside (0, 1)")));
    }
    if let Some(c) = max_step {
        if !(c > 0.0) {
            return Err(Error::InvalidParameter("max_step must be positive".into()));
        }
    }
    let m = make_minimal_filter(k)?;
    let f = m.filter();
    if init.len() != f.len() {
        return Err(Error::InvalidParameter(format!(
            "init has length {}, filter length is {}",
            init.len(),
            f.len()
        )));
    }
    let mut state = QuantizerState::new(init)?;
    let mut target = 1.0;
    let mut flipped = false;
    let mut prev_y: Option<f64> = None;
    let mut prev_v = init[init.len() - 1];
    let mut prev_side = side(prev_v);
    let next_input = |target: f64, prev: Option<f64>| match (prev, max_step) {
        (Some(p), Some(c)) => p + (target * amplitude - p).clamp(-c, c),
        _ => target * amplitude,
    };
    let mut y = Vec::with_capacity(horizon);
    let mut bits: Vec<Bit> = Vec::with_capacity(horizon);
    let mut states = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut yn = next_input(target, prev_y);
        if prev_side != 0 && !flipped {
            let mut probe = state.clone();
            let (_, v) = crate::quantizer::step(&mut probe, f, yn, &Rule::Greedy)?;
            if side(v) == prev_side && v.abs() < prev_v.abs() {
                target = -target;
                flipped = true;
                yn = next_input(target, prev_y);
            }
        }
        let (q, v) = crate::quantizer::step(&mut state, f, yn, &Rule::Greedy)?;
        let s = side(v);
        if s != prev_side {
            flipped = false;
        }
        prev_side = s;
        prev_v = v;
        prev_y = Some(yn);
        y.push(yn);
        bits.push(q);
        states.push(v);
    }
    Ok(QuantizerTrace {
        filter: f.clone(),
        rule: Rule::Greedy,
        init: init.to_vec(),
        inputs: y,
        bits,
        states,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Diverging,
    Bounded,
    Undecided,
}

/// `10 × ⌈coverage bound⌉` at amplitude `y`.
pub fn default_window(k: usize, y: f64) -> Result<usize> {
    Ok(10 * coverage_upper_bound(k, y)?.max().ceil().max(1.0) as usize)
}

/// Classifies a state sequence from its maxima over consecutive windows.
pub fn divergence_detector(states: &[f64], threshold: f64, window: usize) -> Result<Verdict> {
    if !(threshold > 1.0) || window == 0 {
        return Err(Error::InvalidParameter(
            "need threshold > 1 and a nonempty window".into(),
        ));
    }
    let maxima: Vec<f64> = states
        .chunks_exact(window)
        .map(crate::quantizer::max_abs)
        .collect();
    if maxima.len() < 3 {
        return Ok(Verdict::Undecided);
    }
    let mut run = 1;
    for i in 1..maxima.len() {
        run = if maxima[i] > maxima[i - 1] { run + 1 } else { 1 };
        if run >= 3 && maxima[i] > threshold {
            return Ok(Verdict::Diverging);
        }
    }
    if crate::quantizer::max_abs(states) <= threshold {
        Ok(Verdict::Bounded)
    } else {
        Ok(Verdict::Undecided)
    }
}
