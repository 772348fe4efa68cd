//! Input signals, sampling at rate λ, and reconstruction
//! `f_q(t) = (1/λ) Σ c_n φ(t − t_n)` with a smooth low-pass kernel φ.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest frequency in the normalized band.
pub const BAND_EDGE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Tone {
    fn eval(&self, t: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.frequency * t + self.phase).sin()
    }

    fn derivative(&self, t: f64) -> f64 {
        let w = 2.0 * PI * self.frequency;
        self.amplitude * w * (w * t + self.phase).cos()
    }

    fn curvature_bound(&self) -> f64 {
        let w = 2.0 * PI * self.frequency;
        self.amplitude.abs() * w * w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalKind {
    Constant {
        value: f64,
    },
    /// `levels[j]` from sample index `change_indices[j−1]` on.
    Step {
        levels: Vec<f64>,
        change_indices: Vec<usize>,
    },
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `A sinc(scale (t − shift))` with `sinc(x) = sin(πx)/(πx)`.
    Sinc {
        amplitude: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        shift: f64,
    },
    Blsum {
        components: Vec<Tone>,
    },
    /// One sample per row; the `y` column if present, else the first column.
    SamplesFile {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn unit_interval() -> [f64; 2] {
    [0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    #[serde(flatten)]
    pub kind: SignalKind,
    #[serde(default = "unit_interval")]
    pub interval: [f64; 2],
}

/// Uniform samples `values[n] = f(start + n/rate)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Samples {
    pub start: f64,
    pub rate: f64,
    pub values: Vec<f64>,
}

impl Samples {
    pub fn time(&self, n: usize) -> f64 {
        self.start + n as f64 / self.rate
    }

    pub fn end(&self) -> f64 {
        self.time(self.values.len().saturating_sub(1))
    }

    pub fn max_abs(&self) -> f64 {
        crate::quantizer::max_abs(&self.values)
    }
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - (PI * x).powi(2) / 6.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn sinc_derivative(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let p2 = PI * PI;
        -p2 * x / 3.0 + p2 * p2 * x.powi(3) / 30.0
    } else {
        let px = PI * x;
        (px * px.cos() - px.sin()) / (PI * x * x)
    }
}

impl SignalSpec {
    pub fn new(kind: SignalKind, interval: [f64; 2]) -> Self {
        SignalSpec { kind, interval }
    }

    pub fn constant(value: f64, interval: [f64; 2]) -> Self {
        SignalSpec::new(SignalKind::Constant { value }, interval)
    }

    pub fn blsum(components: Vec<Tone>, interval: [f64; 2]) -> Self {
        SignalSpec::new(SignalKind::Blsum { components }, interval)
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.interval;
        if !(a.is_finite() && b.is_finite() && b >= a) {
            return Err(Error::InvalidParameter(format!("bad interval [{a}, {b}]")));
        }
        match &self.kind {
            SignalKind::Step {
                levels,
                change_indices,
            } => {
                if levels.len() != change_indices.len() + 1 {
                    return Err(Error::InvalidParameter(
                        "step needs one more level than change indices".into(),
                    ));
                }
                if change_indices.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidParameter(
                        "step change indices must increase".into(),
                    ));
                }
            }
            SignalKind::Sinusoid { frequency, .. } if *frequency < 0.0 => {
                return Err(Error::InvalidParameter("negative frequency".into()));
            }
            SignalKind::Blsum { components } if components.iter().any(|c| c.frequency < 0.0) => {
                return Err(Error::InvalidParameter("negative frequency".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// Highest frequency of a continuous-time signal; `None` for index-based kinds.
    pub fn max_frequency(&self) -> Option<f64> {
        match &self.kind {
            SignalKind::Constant { .. } => Some(0.0),
            SignalKind::Sinusoid { frequency, .. } => Some(*frequency),
            SignalKind::Sinc { scale, .. } => Some(scale.abs() / 2.0),
            SignalKind::Blsum { components } => {
                Some(components.iter().map(|c| c.frequency).fold(0.0, f64::max))
            }
            _ => None,
        }
    }

    /// Whether the spectrum lies in `[−1/2, 1/2]`.
    pub fn is_bandlimited(&self) -> bool {
        self.max_frequency().is_some_and(|f| f <= BAND_EDGE)
    }

    /// Upper bound on `|f|` read off the parameters.
    pub fn amplitude_bound(&self) -> Result<f64> {
        Ok(match &self.kind {
            SignalKind::Constant { value } => value.abs(),
            SignalKind::Step { levels, .. } => levels.iter().fold(0.0, |m, x| m.max(x.abs())),
            SignalKind::Sinusoid { amplitude, .. } | SignalKind::Sinc { amplitude, .. } => amplitude.abs(),
            SignalKind::Blsum { components } => components.iter().map(|c| c.amplitude.abs()).sum(),
            SignalKind::SamplesFile { path } => crate::quantizer::max_abs(&read_samples_file(path)?),
        })
    }

    /// `f(t)` for continuous-time kinds.
    pub fn eval(&self, t: f64) -> Option<f64> {
        match &self.kind {
            SignalKind::Constant { value } => Some(*value),
            SignalKind::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => Some(
                Tone {
                    amplitude: *amplitude,
                    frequency: *frequency,
                    phase: *phase,
                }
                .eval(t),
            ),
            SignalKind::Sinc {
                amplitude,
                scale,
                shift,
            } => Some(amplitude * sinc(scale * (t - shift))),
            SignalKind::Blsum { components } => Some(components.iter().map(|c| c.eval(t)).sum()),
            _ => None,
        }
    }

    /// `f'(t)` for continuous-time kinds.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        match &self.kind {
            SignalKind::Constant { .. } => Some(0.0),
            SignalKind::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => Some(
                Tone {
                    amplitude: *amplitude,
                    frequency: *frequency,
                    phase: *phase,
                }
                .derivative(t),
            ),
            SignalKind::Sinc {
                amplitude,
                scale,
                shift,
            } => Some(amplitude * scale * sinc_derivative(scale * (t - shift))),
            SignalKind::Blsum { components } => Some(components.iter().map(|c| c.derivative(t)).sum()),
            _ => None,
        }
    }

    /// Upper bound on `sup |f|` over the interval: the maximum over a grid of
    /// step `h` plus `‖f''‖_∞ h²/8`.
    pub fn sup_bound(&self, h: f64) -> Result<f64> {
        let curv = match &self.kind {
            SignalKind::Constant { .. } => 0.0,
            SignalKind::Sinusoid {
                amplitude, frequency, ..
            } => Tone {
                amplitude: *amplitude,
                frequency: *frequency,
                phase: 0.0,
            }
            .curvature_bound(),
            // |sinc''| ≤ π²/3
            SignalKind::Sinc { amplitude, scale, .. } => amplitude.abs() * scale * scale * PI * PI / 3.0,
            SignalKind::Blsum { components } => components.iter().map(Tone::curvature_bound).sum(),
            _ => return self.amplitude_bound(),
        };
        let [a, b] = self.interval;
        let n = ((b - a) / h).ceil() as usize;
        let h = if n == 0 { 0.0 } else { (b - a) / n as f64 };
        let m = (0..=n)
            .map(|j| self.eval(a + j as f64 * h).unwrap_or(0.0).abs())
            .fold(0.0, f64::max);
        Ok(m + curv * h * h / 8.0)
    }

    /// Blsum with random tones in `[0, f_max]`, scaled so that [`sup_bound`](Self::sup_bound)
    /// over the interval equals `target`.
    pub fn random_blsum<R: Rng + ?Sized>(
        rng: &mut R,
        tones: usize,
        f_max: f64,
        interval: [f64; 2],
        target: f64,
    ) -> Result<Self> {
        if tones == 0 || !(f_max > 0.0 && f_max <= BAND_EDGE) || !(target > 0.0) {
            return Err(Error::InvalidParameter("bad random blsum parameters".into()));
        }
        let components = (0..tones)
            .map(|_| Tone {
                amplitude: rng.random_range(0.2..1.0),
                frequency: rng.random_range(0.0..f_max),
                phase: rng.random_range(0.0..2.0 * PI),
            })
            .collect();
        SignalSpec::blsum(components, interval).normalized(target)
    }

    /// Rescales a continuous signal so that its sup bound equals `target`.
    pub fn normalized(&self, target: f64) -> Result<Self> {
        let h = 1e-3;
        let s = self.sup_bound(h)?;
        if !(s > 0.0) {
            return Err(Error::InvalidParameter("cannot normalize a zero signal".into()));
        }
        let c = target / s;
        let mut out = self.clone();
        match &mut out.kind {
            SignalKind::Constant { value } => *value *= c,
            SignalKind::Sinusoid { amplitude, .. } | SignalKind::Sinc { amplitude, .. } => *amplitude *= c,
            SignalKind::Blsum { components } => {
                for t in components.iter_mut() {
                    t.amplitude *= c;
                }
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "only continuous signals can be normalized".into(),
                ))
            }
        }
        Ok(out)
    }

    /// A sinusoid above the band written as frequency 1/2 on a stretched interval,
    /// together with the time stretch factor.
    pub fn to_unit_band(&self) -> Option<(SignalSpec, f64)> {
        match self.kind {
            SignalKind::Sinusoid {
                amplitude,
                frequency,
                phase,
            } if frequency > BAND_EDGE => {
                let c = frequency / BAND_EDGE;
                let [a, b] = self.interval;
                Some((
                    SignalSpec::new(
                        SignalKind::Sinusoid {
                            amplitude,
                            frequency: BAND_EDGE,
                            phase,
                        },
                        [a * c, b * c],
                    ),
                    c,
                ))
            }
            _ => None,
        }
    }

    /// Samples at `t_n = t_start + n/λ`, `n = 0..=⌊(t_end − t_start)λ⌋`.
    pub fn sample(&self, lambda: f64) -> Result<Samples> {
        self.validate()?;
        if !(lambda > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sampling rate {lambda} must exceed 1"
            )));
        }
        if !self.is_bandlimited() && self.max_frequency().is_some() {
            log::warn!(
                "signal frequency {} exceeds the band edge {BAND_EDGE}",
                self.max_frequency().unwrap_or(0.0)
            );
        }
        let [a, b] = self.interval;
        let len = ((b - a) * lambda + 1e-9).floor() as usize + 1;
        let values = match &self.kind {
            SignalKind::Step {
                levels,
                change_indices,
            } => (0..len)
                .map(|n| levels[change_indices.iter().take_while(|&&c| c <= n).count()])
                .collect(),
            SignalKind::SamplesFile { path } => read_samples_file(path)?,
            _ => (0..len)
                .map(|n| self.eval(a + n as f64 / lambda).unwrap_or(0.0))
                .collect(),
        };
        Ok(Samples {
            start: a,
            rate: lambda,
            values,
        })
    }
}

/// Reads one sample per row, skipping `#` lines; uses the `y` column when there is a header.
pub fn read_samples_file(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut col = 0;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if i == 0 {
            if let Some(j) = rec.iter().position(|f| f == "y") {
                col = j;
                continue;
            }
            if rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
                continue;
            }
        }
        let field = rec.get(col).unwrap_or("");
        let v: f64 = field.parse().map_err(|_| {
            Error::InvalidParameter(format!(
                "{}: row {} is not a number: {field:?}",
                path.display(),
                i + 1
            ))
        })?;
        out.push(v);
    }
    Ok(out)
}

/// Smooth step falling from 1 at `x = 0` to 0 at `x = 1`, with all derivatives vanishing at both ends.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        1.0 / (1.0 + (1.0 / (1.0 - x) - 1.0 / x).exp())
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

pub const DEFAULT_MARGIN: f64 = 2.0;
pub const DEFAULT_KERNEL_STEP: f64 = 1.0 / 1024.0;
pub const DEFAULT_HALF_WIDTH: f64 = 40.0;

/// φ with `φ̂ = 1` on `|ξ| ≤ 1/2`, a smooth step down to 0 at `|ξ| = margin/2`,
/// tabulated with its derivative on `[0, half_width]`.
#[derive(Debug, Clone)]
pub struct ReconstructionKernel {
    margin: f64,
    step: f64,
    half_width: f64,
    // transition part of the inverse transform: nodes ξ_j and weights
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    deriv1_l1: f64,
    deriv2_l1: f64,
}

pub fn build_kernel(margin: f64, grid_step: f64, half_width: f64) -> Result<ReconstructionKernel> {
    ReconstructionKernel::new(margin, grid_step, half_width)
}

impl ReconstructionKernel {
    pub fn new(margin: f64, grid_step: f64, half_width: f64) -> Result<Self> {
        if !(margin > 1.0 && margin.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel margin {margin} must exceed 1"
            )));
        }
        if !(half_width > 0.0 && grid_step > 0.0) {
            return Err(Error::InvalidParameter(
                "kernel grid step and half width must be positive".into(),
            ));
        }
        let limit = 1.0 / margin;
        if grid_step > limit {
            return Err(Error::Aliasing {
                step: grid_step,
                limit,
            });
        }
        let a = 0.5;
        let w = margin / 2.0 - a;
        let panels = (2.0 * w * half_width).ceil() as usize + 16;
        let (gx, gw) = gauss_legendre(16);
        let mut nodes = Vec::with_capacity(panels * 16);
        let mut weights = Vec::with_capacity(panels * 16);
        for p in 0..panels {
            let lo = p as f64 / panels as f64;
            let half = 0.5 / panels as f64;
            for (x, wq) in gx.iter().zip(&gw) {
                let u = lo + half * (x + 1.0);
                nodes.push(a + w * u);
                weights.push(2.0 * w * half * wq * smooth_step(u));
            }
        }
        let n = (half_width / grid_step).round() as usize;
        let mut k = ReconstructionKernel {
            margin,
            step: half_width / n as f64,
            half_width,
            nodes,
            weights,
            values: Vec::with_capacity(n + 1),
            slopes: Vec::with_capacity(n + 1),
            deriv1_l1: 0.0,
            deriv2_l1: 0.0,
        };
        for j in 0..=n {
            let (v, d) = k.direct(j as f64 * k.step);
            k.values.push(v);
            k.slopes.push(d);
        }
        // trapezoid on [0, H], doubled by symmetry
        let h = k.step;
        let trap = |f: &dyn Fn(usize) -> f64| {
            let s: f64 = (0..=n)
                .map(|j| if j == 0 || j == n { 0.5 * f(j) } else { f(j) })
                .sum();
            2.0 * h * s
        };
        k.deriv1_l1 = trap(&|j| k.slopes[j].abs());
        let second = |j: usize| {
            if j == 0 {
                (k.slopes[1] - (-k.slopes[1])) / (2.0 * h)
            } else if j == n {
                (k.slopes[n] - k.slopes[n - 1]) / h
            } else {
                (k.slopes[j + 1] - k.slopes[j - 1]) / (2.0 * h)
            }
        };
        k.deriv2_l1 = trap(&|j| second(j).abs());
        Ok(k)
    }

    pub fn with_defaults() -> Result<Self> {
        ReconstructionKernel::new(DEFAULT_MARGIN, DEFAULT_KERNEL_STEP, DEFAULT_HALF_WIDTH)
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn grid_step(&self) -> f64 {
        self.step
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Numerical `‖φ'‖_L¹`.
    pub fn deriv1_l1(&self) -> f64 {
        self.deriv1_l1
    }

    /// Numerical `‖φ''‖_L¹`.
    pub fn deriv2_l1(&self) -> f64 {
        self.deriv2_l1
    }

    /// `φ̂(ξ)`.
    pub fn frequency_response(&self, xi: f64) -> f64 {
        let a = 0.5;
        let b = self.margin / 2.0;
        smooth_step((xi.abs() - a) / (b - a))
    }

    /// `(φ(t), φ'(t))` by quadrature of the inverse transform.
    pub fn direct(&self, t: f64) -> (f64, f64) {
        let mut v = sinc(t);
        let mut d = sinc_derivative(t);
        for (&xi, &w) in self.nodes.iter().zip(&self.weights) {
            let (s, c) = (2.0 * PI * xi * t).sin_cos();
            v += w * c;
            d -= w * 2.0 * PI * xi * s;
        }
        (v, d)
    }

    /// `φ(t)` by cubic Hermite interpolation of the table; zero beyond the half width.
    pub fn eval(&self, t: f64) -> f64 {
        let x = t.abs();
        if x > self.half_width {
            return 0.0;
        }
        let h = self.step;
        let j = ((x / h) as usize).min(self.values.len() - 2);
        let s = x / h - j as f64;
        let (p0, p1) = (self.values[j], self.values[j + 1]);
        let (m0, m1) = (self.slopes[j] * h, self.slopes[j + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * p0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * p1
            + (s3 - s2) * m1
    }

    /// `∫ φ(t) e^{−2πiξt} dt` by the trapezoid rule on the table.
    pub fn measured_response(&self, xi: f64) -> f64 {
        let n = self.values.len() - 1;
        let s: f64 = (0..=n)
            .map(|j| {
                let t = j as f64 * self.step;
                let c = self.values[j] * (2.0 * PI * xi * t).cos();
                if j == 0 || j == n {
                    0.5 * c
                } else {
                    c
                }
            })
            .sum();
        2.0 * self.step * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    /// The full truncation window lies inside the sampled range.
    pub well_covered: bool,
}

/// `f_q(t) = (1/λ) Σ_{|t − t_n| ≤ R} c_n φ(t − t_n)`.
#[derive(Debug, Clone)]
pub struct Reconstruction<'a> {
    kernel: &'a ReconstructionKernel,
    start: f64,
    rate: f64,
    coeffs: Vec<f64>,
    radius: f64,
}

pub fn reconstruct<'a>(
    coeffs: &[f64],
    start: f64,
    lambda: f64,
    kernel: &'a ReconstructionKernel,
    radius: f64,
) -> Result<Reconstruction<'a>> {
    Reconstruction::new(coeffs, start, lambda, kernel, radius)
}

impl<'a> Reconstruction<'a> {
    pub fn new(
        coeffs: &[f64],
        start: f64,
        lambda: f64,
        kernel: &'a ReconstructionKernel,
        radius: f64,
    ) -> Result<Self> {
        if !(kernel.margin() <= lambda) {
            return Err(Error::InvalidParameter(format!(
                "kernel margin {} exceeds the sampling rate {lambda}",
                kernel.margin()
            )));
        }
        if !(radius > 0.0 && radius <= kernel.half_width()) {
            return Err(Error::InvalidParameter(format!(
                "truncation radius {radius} outside (0, {}]",
                kernel.half_width()
            )));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("no samples to reconstruct from".into()));
        }
        Ok(Reconstruction {
            kernel,
            start,
            rate: lambda,
            coeffs: coeffs.to_vec(),
            radius,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    fn last_time(&self) -> f64 {
        self.start + (self.coeffs.len() - 1) as f64 / self.rate
    }

    /// Points whose truncation window lies inside the sampled range.
    pub fn interior(&self) -> (f64, f64) {
        (self.start + self.radius, self.last_time() - self.radius)
    }

    pub fn eval(&self, t: f64) -> Evaluation {
        let lam = self.rate;
        let lo = ((t - self.radius - self.start) * lam).ceil().max(0.0) as usize;
        let hi_f = ((t + self.radius - self.start) * lam).floor();
        let mut value = 0.0;
        if hi_f >= 0.0 {
            let hi = (hi_f as usize).min(self.coeffs.len() - 1);
            for n in lo..=hi {
                value += self.coeffs[n] * self.kernel.eval(t - (self.start + n as f64 / lam));
            }
        }
        let (a, b) = self.interior();
        Evaluation {
            value: value / lam,
            well_covered: t >= a - 1e-12 && t <= b + 1e-12,
        }
    }

    /// `f_q` at `t_j = start + j/(mλ)` for `j_lo ≤ j ≤ j_hi`, by FFT convolution.
    pub fn eval_fine_grid(&self, upsample: usize, j_lo: usize, j_hi: usize) -> Vec<f64> {
        let m = upsample.max(1);
        let fine = self.rate * m as f64;
        let d = (self.radius * fine).floor() as usize;
        let nx = (self.coeffs.len() - 1) * m + 1;
        let size = (nx + 2 * d).next_power_of_two();
        let mut x = vec![Complex::new(0.0, 0.0); size];
        for (n, &c) in self.coeffs.iter().enumerate() {
            x[n * m] = Complex::new(c, 0.0);
        }
        // kernel taps for offsets −d..=d, stored with offset d at index 0 after a circular shift
        let mut kk = vec![Complex::new(0.0, 0.0); size];
        for off in 0..=d {
            let v = self.kernel.eval(off as f64 / fine);
            kk[off] = Complex::new(v, 0.0);
            if off > 0 {
                kk[size - off] = Complex::new(v, 0.0);
            }
        }
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        fwd.process(&mut x);
        fwd.process(&mut kk);
        for (a, b) in x.iter_mut().zip(&kk) {
            *a *= *b;
        }
        inv.process(&mut x);
        let scale = 1.0 / (size as f64 * self.rate);
        (j_lo..=j_hi).map(|j| x[j].re * scale).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupError {
    pub value: f64,
    pub at: f64,
    /// Width removed from each end of the sampled range.
    pub trim: f64,
    pub grid_step: f64,
    pub points: usize,
}

/// `max |f − f_q|` on a grid over `interior`, clipped to the well-covered range.
pub fn sup_error(
    f: &SignalSpec,
    fq: &Reconstruction<'_>,
    interior: (f64, f64),
    grid_step: f64,
) -> Result<SupError> {
    let lam = fq.rate();
    if !(grid_step > 0.0 && grid_step <= 1.0 / (10.0 * lam) * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "error grid step {grid_step} exceeds 1/(10λ) = {}",
            1.0 / (10.0 * lam)
        )));
    }
    if f.eval(0.0).is_none() {
        return Err(Error::InvalidParameter(
            "sup error needs a continuous-time signal".into(),
        ));
    }
    let (ca, cb) = fq.interior();
    let a = interior.0.max(ca);
    let b = interior.1.min(cb);
    if !(b >= a) {
        return Err(Error::InvalidParameter("empty interior after trimming".into()));
    }
    let ratio = 1.0 / (grid_step * lam);
    let m = ratio.round();
    let aligned = m >= 1.0 && (ratio - m).abs() < 1e-9;
    let mut best = SupError {
        value: 0.0,
        at: a,
        trim: fq.radius(),
        grid_step,
        points: 0,
    };
    let mut record = |t: f64, q: f64| {
        let e = (f.eval(t).unwrap_or(0.0) - q).abs();
        if e > best.value {
            best.value = e;
            best.at = t;
        }
        best.points += 1;
    };
    if aligned {
        let m = m as usize;
        let fine = lam * m as f64;
        let j_lo = ((a - fq.start) * fine - 1e-9).ceil().max(0.0) as usize;
        let j_hi = ((b - fq.start) * fine + 1e-9).floor() as usize;
        let vals = fq.eval_fine_grid(m, j_lo, j_hi);
        for (i, q) in vals.into_iter().enumerate() {
            record(fq.start + (j_lo + i) as f64 / fine, q);
        }
    } else {
        let n = ((b - a) / grid_step).floor() as usize;
        for j in 0..=n {
            let t = a + j as f64 * grid_step;
            record(t, fq.eval(t).value);
        }
    }
    Ok(best)
}

/// `(1/λ²) ‖φ''‖_L¹ ‖v‖_∞ ‖g‖₁`.
pub fn second_order_error_bound(lambda: f64, kernel: &ReconstructionKernel, v_inf: f64, g_l1: f64) -> f64 {
    kernel.deriv2_l1() * v_inf * g_l1 / (lambda * lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_samples() {
        let s = SignalSpec::constant(0.7, [0.0, 2.0]).sample(10.0).unwrap();
        assert_eq!(s.values.len(), 21);
        assert!(s.values.iter().all(|&v| v == 0.7));
    }

    #[test]
    fn step_samples() {
        let spec = SignalSpec::new(
            SignalKind::Step {
                levels: vec![0.7, -0.7],
                change_indices: vec![6],
            },
            [0.0, 1.0],
        );
        let s = spec.sample(9.0).unwrap();
        assert_eq!(
            s.values,
            vec![0.7, 0.7, 0.7, 0.7, 0.7, 0.7, -0.7, -0.7, -0.7, -0.7]
        );
    }

    #[test]
    fn figure_sinusoid() {
        let spec = SignalSpec::new(
            SignalKind::Sinusoid {
                amplitude: 0.785,
                frequency: 2.0,
                phase: 0.0,
            },
            [0.0, 1.0],
        );
        assert!(!spec.is_bandlimited());
        let s = spec.sample(500.0).unwrap();
        assert_eq!(s.values.len(), 501);
        assert!(s.max_abs() <= 0.785);
        let (unit, c) = spec.to_unit_band().unwrap();
        assert_eq!(c, 4.0);
        assert!(unit.is_bandlimited());
        assert_eq!(unit.interval, [0.0, 4.0]);
    }

    #[test]
    fn sinc_figure() {
        let spec = SignalSpec::new(
            SignalKind::Sinc {
                amplitude: 0.5,
                scale: 1.0,
                shift: 0.0,
            },
            [-3.0, 3.0],
        );
        let s = spec.sample(100.0).unwrap();
        assert_eq!(s.values.len(), 601);
        assert_relative_eq!(s.values[300], 0.5, max_relative = 1e-15);
        assert!(s.values[200].abs() < 1e-15);
        assert!(spec.is_bandlimited());
    }

    #[test]
    fn rejects_undersampling() {
        assert!(SignalSpec::constant(0.1, [0.0, 1.0]).sample(1.0).is_err());
    }

    #[test]
    fn spec_json() {
        let s: SignalSpec = serde_json::from_str(
            r#"{"kind":"blsum","components":[{"amplitude":0.2,"frequency":0.3}],"interval":[0,5]}"#,
        )
        .unwrap();
        assert_eq!(s.max_frequency(), Some(0.3));
        let back: SignalSpec = serde_json::from_value(serde_json::to_value(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert_relative_eq!(i, 2.0 / 31.0, max_relative = 1e-13);
    }

    #[test]
    fn smooth_step_symmetry() {
        for j in 0..=100 {
            let x = j as f64 / 100.0;
            assert!((smooth_step(x) + smooth_step(1.0 - x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn kernel_rejects_coarse_grid() {
        assert!(matches!(
            build_kernel(2.0, 0.6, 10.0),
            Err(Error::Aliasing { .. })
        ));
        assert!(build_kernel(1.0, 0.01, 10.0).is_err());
    }

    #[test]
    fn zero_input_reconstructs_zero() {
        let k = build_kernel(2.0, 1.0 / 256.0, 10.0).unwrap();
        let r = reconstruct(&[0.0; 500], 0.0, 20.0, &k, 8.0).unwrap();
        for j in 0..50 {
            assert_eq!(r.eval(j as f64 * 0.5).value, 0.0);
        }
    }
}
