//! Trajectories of the minimal second-order scheme under constant input:
//! the coefficients `h_iⁿ`, the critical trigger and the parabolic envelope.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::filters::make_minimal_filter;
use crate::quantizer::Quantizer;

fn check_k(k: usize, min: usize) -> Result<f64> {
    if k < min {
        return Err(Error::Domain(format!("k = {k} but at least {min} is required")));
    }
    Ok(k as f64)
}

fn check_y(k: usize, y: f64) -> Result<()> {
    let lo = 1.0 - 2.0 / k as f64;
    if !(y > lo && y < 1.0) {
        return Err(Error::Domain(format!("y = {y} outside ({lo}, 1) for k = {k}")));
    }
    Ok(())
}

/// Rows `(h_1ⁿ, ..., h_{k+1}ⁿ)` for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    k: usize,
    rows: Vec<f64>,
}

impl CoefficientTable {
    /// Rows from `h_iⁿ = h_i h_1ⁿ⁻¹ + h_{i+1}ⁿ⁻¹` and `h_{k+1}ⁿ = h_{k+1} h_1ⁿ⁻¹`.
    pub fn new(k: usize, n_max: usize) -> Result<Self> {
        check_k(k, 1)?;
        let taps = make_minimal_filter(k)?.filter().taps().to_vec();
        let w = k + 1;
        let mut rows = Vec::with_capacity(w * (n_max + 1));
        rows.extend_from_slice(&taps);
        for n in 1..=n_max {
            let prev = (n - 1) * w;
            let h1 = rows[prev];
            for i in 0..w {
                let next = if i + 1 < w { rows[prev + i + 1] } else { 0.0 };
                rows.push(taps[i] * h1 + next);
            }
        }
        Ok(CoefficientTable { k, rows })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_max(&self) -> usize {
        self.rows.len() / (self.k + 1) - 1
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let w = self.k + 1;
        &self.rows[n * w..(n + 1) * w]
    }

    /// `h_iⁿ` for 1-based `i`; `h_1⁻¹ = 1` by convention.
    pub fn get(&self, i: usize, n: isize) -> f64 {
        if n < 0 {
            return if i == 1 && n == -1 { 1.0 } else { 0.0 };
        }
        self.row(n as usize)[i - 1]
    }

    pub fn h1(&self, n: isize) -> f64 {
        self.get(1, n)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let cols: Vec<String> = (1..=self.k + 1).map(|i| format!("h{i}")).collect();
        writeln!(w, "n,{}", cols.join(","))?;
        for n in 0..=self.n_max() {
            let vals: Vec<String> = self.row(n).iter().map(|&x| fmt_f64(x)).collect();
            writeln!(w, "{},{}", n, vals.join(","))?;
        }
        Ok(())
    }
}

pub fn coefficient_table(k: usize, n_max: usize) -> Result<CoefficientTable> {
    CoefficientTable::new(k, n_max)
}

/// First row of `H^{n+1}` for the companion matrix `H` of the minimal filter.
pub fn matrix_power_oracle(k: usize, n: usize) -> Result<Vec<f64>> {
    check_k(k, 1)?;
    if k + 1 > 64 {
        return Err(Error::Domain("matrix oracle limited to k + 1 <= 64".into()));
    }
    let taps = make_minimal_filter(k)?.filter().taps().to_vec();
    let w = k + 1;
    let mut h = DMatrix::<f64>::zeros(w, w);
    for j in 0..w {
        h[(0, j)] = taps[j];
    }
    for j in 1..w {
        h[(j, j - 1)] = 1.0;
    }
    let mut p = h.clone();
    for _ in 0..n {
        p = &p * &h;
    }
    Ok(p.row(0).iter().copied().collect())
}

/// `h_1ⁿ` for `n = 0, 1, ...` from the closed form below `k` and the
/// recursion `h_1ⁿ = (1+1/k)h_1ⁿ⁻¹ − (1/k)h_1ⁿ⁻¹⁻ᵏ` from `k` on.
#[derive(Debug, Clone)]
pub struct H1Sequence {
    k: usize,
    n: usize,
    // h_1^{n-1-k}, ..., h_1^{n-1}
    window: std::collections::VecDeque<f64>,
}

impl H1Sequence {
    pub fn new(k: usize) -> Result<Self> {
        check_k(k, 1)?;
        let mut window = std::collections::VecDeque::with_capacity(k + 2);
        window.push_back(1.0);
        Ok(H1Sequence { k, n: 0, window })
    }
}

impl Iterator for H1Sequence {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let kf = self.k as f64;
        let r = 1.0 + 1.0 / kf;
        let v = if self.n < self.k {
            r.powi(self.n as i32 + 1)
        } else {
            r * self.window[self.window.len() - 1] - self.window[0] / kf
        };
        self.window.push_back(v);
        if self.window.len() > self.k + 1 {
            self.window.pop_front();
        }
        self.n += 1;
        Some(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaBounds {
    pub alpha: f64,
    pub beta: f64,
}

/// `α = (1/k)(1+1/k)` and `β = (1/k)(1+1/k)^{k−1}` bounding `Δh_1ⁿ`.
pub fn delta_h1_bounds(k: usize) -> Result<DeltaBounds> {
    let kf = check_k(k, 3)?;
    let r = 1.0 + 1.0 / kf;
    Ok(DeltaBounds {
        alpha: r / kf,
        beta: r.powi(k as i32 - 1) / kf,
    })
}

/// `(−1, ..., −1, 1)` ordered `(v_{−(k+1)}, ..., v_{−1})`.
pub fn critical_trigger(k: usize) -> Result<Vec<f64>> {
    check_k(k, 2)?;
    let mut t = vec![-1.0; k + 1];
    t[k] = 1.0;
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerAnalysis {
    pub k: usize,
    pub y: f64,
    pub trigger: Vec<f64>,
    /// Number of consecutive states above 1 starting at n = 0.
    pub coverage: usize,
    /// States `v_0 .. v_{coverage−1}`.
    pub trajectory: Vec<f64>,
    /// The first state at or below 1, when a trajectory exists.
    pub exit_value: Option<f64>,
}

impl TriggerAnalysis {
    /// Largest index with a state above 1.
    pub fn last_index(&self) -> Option<usize> {
        self.coverage.checked_sub(1)
    }

    /// Maximum of the trajectory, the sharp bound `M_s(y,k)` for the critical trigger.
    pub fn peak(&self) -> Option<f64> {
        self.trajectory.iter().copied().reduce(f64::max)
    }
}

fn safety_horizon(k: usize, y: f64) -> usize {
    let b = if k >= 3 {
        coverage_upper_bound(k, y).map(|b| b.max()).unwrap_or(0.0)
    } else {
        64.0 / (1.0 - y)
    };
    b.ceil() as usize + 10
}

/// The critical trajectory `ξ_n = 2h_1ⁿ − 1 + (y−1)Σ_{i=0}^{n} h_1^{i−1}`, followed until it drops to 1.
pub fn critical_trajectory(k: usize, y: f64) -> Result<TriggerAnalysis> {
    let trigger = critical_trigger(k)?;
    if !(y < 1.0) || !y.is_finite() {
        return Err(Error::Domain(format!("y = {y} must be below 1")));
    }
    let mut out = TriggerAnalysis {
        k,
        y,
        trigger,
        coverage: 0,
        trajectory: Vec::new(),
        exit_value: None,
    };
    if y <= 1.0 - 2.0 / k as f64 {
        return Ok(out);
    }
    let horizon = safety_horizon(k, y);
    let mut sum = 1.0; // h_1^{-1}
    for h1 in H1Sequence::new(k)?.take(horizon) {
        let xi = 2.0 * h1 - 1.0 + (y - 1.0) * sum;
        if xi <= 1.0 {
            out.exit_value = Some(xi);
            out.coverage = out.trajectory.len();
            return Ok(out);
        }
        out.trajectory.push(xi);
        sum += h1;
    }
    Err(Error::HorizonExceeded { horizon })
}

/// `v_n = Σ_i h_iⁿ v_{−i} + (y−1)Σ_{i=0}^{n} h_1^{i−1}`, valid while the trajectory stays above 1.
pub fn closed_form_state(table: &CoefficientTable, trigger: &[f64], y: f64, n: usize) -> f64 {
    let w = table.k() + 1;
    let row = table.row(n);
    let mut v = 0.0;
    for i in 1..=w {
        v += row[i - 1] * trigger[w - i];
    }
    let s: f64 = (0..=n as isize).map(|i| table.h1(i - 1)).sum();
    v + (y - 1.0) * s
}

/// Excursion of the greedy scheme from `trigger` under constant `y`, by direct simulation.
pub fn simulate_trigger(k: usize, trigger: &[f64], y: f64, cap: usize) -> Result<TriggerAnalysis> {
    let m = make_minimal_filter(k)?;
    let mut qz = Quantizer::greedy(m.filter(), trigger)?;
    let mut out = TriggerAnalysis {
        k,
        y,
        trigger: trigger.to_vec(),
        coverage: 0,
        trajectory: Vec::new(),
        exit_value: None,
    };
    for _ in 0..cap {
        let (_, v) = qz.step(y)?;
        if v <= 1.0 {
            out.exit_value = Some(v);
            out.coverage = out.trajectory.len();
            return Ok(out);
        }
        out.trajectory.push(v);
    }
    Err(Error::HorizonExceeded { horizon: cap })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolaParams {
    pub alpha: f64,
    pub gamma: f64,
    pub mu: f64,
}

impl ParabolaParams {
    pub fn new(k: usize) -> Result<Self> {
        let kf = check_k(k, 3)?;
        let r = 1.0 + 1.0 / kf;
        Ok(ParabolaParams {
            alpha: r / kf,
            gamma: r * (1.0 - 1.0 / (2.0 * kf)),
            mu: (2.0 / kf) * r.powi(k as i32 - 1),
        })
    }
}

/// Upper bound on the state at step `n` of any positive trajectory under constant `y`.
pub fn parabola_bound(k: usize, y: f64, n: usize) -> Result<f64> {
    check_y(k, y)?;
    let n = n as f64;
    let p = ParabolaParams::new(k)?;
    let kf = k as f64;
    Ok((y - 1.0) * p.alpha / 2.0 * n * n + (p.gamma * (y - 1.0) + p.mu) * n + 2.0 / kf + y)
}

/// Vertex value `M(y,k) = y + 2/k − [γ(y−1)+μ]² / (2α(y−1))`.
pub fn parabola_max(k: usize, y: f64) -> Result<f64> {
    check_y(k, y)?;
    parabola_vertex(k, y)
}

// also used at the closed end y = 1 − 2/k
pub(crate) fn parabola_vertex(k: usize, y: f64) -> Result<f64> {
    let p = ParabolaParams::new(k)?;
    let b = p.gamma * (y - 1.0) + p.mu;
    Ok(y + 2.0 / k as f64 - b * b / (2.0 * p.alpha * (y - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageBounds {
    /// `(4k/(k+1))(1+1/k)^{k−1}/(1−y) − (2k−2)`
    pub root: f64,
    /// `4e/(1−y) − (k+1)`
    pub simplified: f64,
}

impl CoverageBounds {
    pub fn max(&self) -> f64 {
        self.root.max(self.simplified)
    }
}

pub fn coverage_upper_bound(k: usize, y: f64) -> Result<CoverageBounds> {
    let kf = check_k(k, 3)?;
    if !(y < 1.0) {
        return Err(Error::Domain(format!("y = {y} must be below 1")));
    }
    let r = 1.0 + 1.0 / kf;
    Ok(CoverageBounds {
        root: 4.0 * kf / (kf + 1.0) * r.powi(k as i32 - 1) / (1.0 - y) - (2.0 * kf - 2.0),
        simplified: 4.0 * std::f64::consts::E / (1.0 - y) - (kf + 1.0),
    })
}
