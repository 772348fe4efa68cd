//! FIR feedback filters `h = (h_1, ..., h_L)` with `h_0 = 0`, the minimal-support
//! second-order family and the `g` sequence solving `δ₀ − h = Δʳ g`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MOMENT_TOL: f64 = 1e-12;
pub const G_TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FilterRepr", into = "FilterRepr")]
pub struct FirFilter {
    taps: Vec<f64>,
    order: usize,
    k: Option<usize>,
    // (lag, tap) for the nonzero taps, in increasing lag order
    sparse: Vec<(usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct FilterRepr {
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    taps: Vec<f64>,
    #[serde(default)]
    order: usize,
}

impl TryFrom<FilterRepr> for FirFilter {
    type Error = Error;

    fn try_from(r: FilterRepr) -> Result<Self> {
        match r.k {
            Some(k) => {
                let f = minimal_taps(k)?;
                if !r.taps.is_empty() && r.taps != f.taps {
                    return Err(Error::InvalidParameter(format!(
                        "taps do not match the minimal filter for k = {k}"
                    )));
                }
                Ok(f)
            }
            None => FirFilter::with_order(r.taps, r.order),
        }
    }
}

impl From<FirFilter> for FilterRepr {
    fn from(f: FirFilter) -> Self {
        FilterRepr {
            k: f.k,
            taps: f.taps,
            order: f.order,
        }
    }
}

impl FirFilter {
    /// Filter with taps `h_1..h_L` and no declared order.
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidParameter("filter needs at least one tap".into()));
        }
        if let Some(i) = taps.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(format!("tap h_{} is not finite", i + 1)));
        }
        let sparse = taps
            .iter()
            .enumerate()
            .filter(|(_, &t)| t != 0.0)
            .map(|(i, &t)| (i + 1, t))
            .collect();
        Ok(FirFilter {
            taps,
            order: 0,
            k: None,
            sparse,
        })
    }

    /// Filter whose moment conditions of order `order` are checked at construction.
    pub fn with_order(taps: Vec<f64>, order: usize) -> Result<Self> {
        let mut f = FirFilter::new(taps)?;
        if order > 0 {
            let check = f.check_moment_conditions(order);
            if !check.satisfied {
                return Err(Error::MomentConditions {
                    order,
                    residuals: check.residuals,
                });
            }
        }
        f.order = order;
        Ok(f)
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Filter length L.
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn declared_order(&self) -> usize {
        self.order
    }

    /// `Some(k)` when this is the minimal second-order filter with parameter k.
    pub fn minimal_k(&self) -> Option<usize> {
        self.k
    }

    /// Tap `h_i` for 1-based `i`, zero outside `1..=L`.
    pub fn tap(&self, i: usize) -> f64 {
        if i == 0 || i > self.taps.len() {
            0.0
        } else {
            self.taps[i - 1]
        }
    }

    pub(crate) fn nonzero(&self) -> &[(usize, f64)] {
        &self.sparse
    }

    pub fn l1_norm(&self) -> f64 {
        self.taps.iter().map(|t| t.abs()).sum()
    }

    /// Residuals `Σ_i (δ₀ − h)_i · i^m` for `m = 0..r`.
    pub fn check_moment_conditions(&self, r: usize) -> MomentCheck {
        let residuals: Vec<f64> = (0..r)
            .map(|m| {
                // the i = 0 term contributes 1·0^m, which is 1 only for m = 0
                let mut s = if m == 0 { 1.0 } else { 0.0 };
                for (i, &h) in self.taps.iter().enumerate() {
                    s -= h * ((i + 1) as f64).powi(m as i32);
                }
                s
            })
            .collect();
        let satisfied = r >= 1 && residuals.iter().all(|x| x.abs() < MOMENT_TOL);
        MomentCheck { satisfied, residuals }
    }

    /// `g` with `δ₀ − h = Δʳ g`, over the default horizon `4L`.
    pub fn solve_g(&self, r: usize) -> Result<GSequence> {
        self.solve_g_with_horizon(r, 4 * self.len())
    }

    /// The first `horizon` entries of `g`, by `r` cumulative sums of `δ₀ − h`.
    pub fn solve_g_with_horizon(&self, r: usize, horizon: usize) -> Result<GSequence> {
        if r == 0 {
            return Err(Error::InvalidParameter("order r must be at least 1".into()));
        }
        let check = self.check_moment_conditions(r);
        if !check.satisfied {
            return Err(Error::MomentConditions {
                order: r,
                residuals: check.residuals,
            });
        }
        let n = horizon.max(self.len() + 1);
        let mut g = vec![0.0; n];
        g[0] = 1.0;
        for (x, t) in g[1..].iter_mut().zip(&self.taps) {
            *x = -t;
        }
        for _ in 0..r {
            let mut acc = 0.0;
            for x in g.iter_mut() {
                acc += *x;
                *x = acc;
            }
        }
        // beyond the support of h the sums are constant zero up to rounding
        let support = g.iter().rposition(|x| x.abs() > G_TAIL_TOL).map_or(0, |i| i + 1);
        for x in g.iter_mut().skip(support) {
            *x = 0.0;
        }
        g.truncate(horizon);
        Ok(GSequence {
            values: g,
            order: r,
            support,
        })
    }
}

fn minimal_taps(k: usize) -> Result<FirFilter> {
    if k < 1 {
        return Err(Error::InvalidParameter("minimal filter needs k >= 1".into()));
    }
    let kf = k as f64;
    let mut taps = vec![0.0; k + 1];
    taps[0] = (kf + 1.0) / kf;
    taps[k] = -1.0 / kf;
    let mut f = FirFilter::with_order(taps, 2)?;
    f.k = Some(k);
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub satisfied: bool,
    pub residuals: Vec<f64>,
}

/// `h_1 = (k+1)/k`, `h_{k+1} = −1/k`, all other taps zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FirFilter", into = "FirFilter")]
pub struct MinimalFilter {
    k: usize,
    filter: FirFilter,
}

impl MinimalFilter {
    pub fn new(k: usize) -> Result<Self> {
        Ok(MinimalFilter {
            k,
            filter: minimal_taps(k)?,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn filter(&self) -> &FirFilter {
        &self.filter
    }
}

impl TryFrom<FirFilter> for MinimalFilter {
    type Error = Error;

    fn try_from(f: FirFilter) -> Result<Self> {
        match f.k {
            Some(k) => Ok(MinimalFilter { k, filter: f }),
            None => Err(Error::InvalidParameter("filter is not a minimal filter".into())),
        }
    }
}

impl From<MinimalFilter> for FirFilter {
    fn from(m: MinimalFilter) -> Self {
        m.filter
    }
}

impl AsRef<FirFilter> for MinimalFilter {
    fn as_ref(&self) -> &FirFilter {
        &self.filter
    }
}

pub fn make_minimal_filter(k: usize) -> Result<MinimalFilter> {
    MinimalFilter::new(k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GSequence {
    pub values: Vec<f64>,
    pub order: usize,
    /// Length of the prefix holding every entry above the tail threshold.
    pub support: usize,
}

impl GSequence {
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|x| x.abs()).sum()
    }

    /// `‖Δʳ g − (δ₀ − h)‖_∞` over the computed prefix.
    pub fn forward_residual(&self, f: &FirFilter) -> f64 {
        let mut d = self.values.clone();
        for _ in 0..self.order {
            for i in (1..d.len()).rev() {
                d[i] -= d[i - 1];
            }
        }
        d.iter()
            .enumerate()
            .map(|(i, &x)| {
                let target = if i == 0 { 1.0 } else { -f.tap(i) };
                (x - target).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `(v ∗ g)_n` for a state sequence starting at index 0, with zero history.
    pub fn convolve(&self, v: &[f64]) -> Vec<f64> {
        let g = &self.values[..self.support.min(self.values.len())];
        (0..v.len())
            .map(|n| {
                g.iter()
                    .enumerate()
                    .take(n + 1)
                    .map(|(j, &gj)| gj * v[n - j])
                    .sum()
            })
            .collect()
    }
}
