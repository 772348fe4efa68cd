//! Stability certificates for the minimal second-order scheme.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FirFilter;
use crate::trajectory::{critical_trajectory, parabola_vertex};

/// Slack on the ℓ¹ criterion for rounding in `‖h‖₁ + ‖y‖_∞`.
pub const CLASSICAL_TOL: f64 = 1e-12;
pub const ROOT_TOL: f64 = 1e-12;
pub const ROOT_MAX_ITER: usize = 200;

/// `‖h‖₁ + amplitude ≤ 2`, up to rounding.
pub fn classical_criterion(f: &FirFilter, amplitude: f64) -> bool {
    f.l1_norm() + amplitude <= 2.0 + CLASSICAL_TOL
}

/// Largest amplitude covered by the constant-input theorem, `1 − e²/(k+1)²`.
pub fn theorem_limit(k: usize) -> f64 {
    let kp = k as f64 + 1.0;
    1.0 - E * E / (kp * kp)
}

/// Upper end of the classical regime for the minimal filter, `1 − 2/k`.
pub fn classical_limit(k: usize) -> f64 {
    1.0 - 2.0 / k as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapValue {
    pub m: f64,
    pub y_tilde: f64,
    pub g: f64,
}

/// `M(y,k)`, `ỹ = 1/k − 1 + M/k` and `g = y − ỹ` on `[1 − 2/k, 1)`.
pub fn gap(k: usize, y: f64) -> Result<GapValue> {
    if k < 3 {
        return Err(Error::Domain(format!("gap needs k >= 3, got {k}")));
    }
    if !(y >= classical_limit(k) && y < 1.0) {
        return Err(Error::Domain(format!(
            "y = {y} outside [{}, 1) for k = {k}",
            classical_limit(k)
        )));
    }
    let kf = k as f64;
    let m = parabola_vertex(k, y)?;
    let y_tilde = 1.0 / kf - 1.0 + m / kf;
    Ok(GapValue {
        m,
        y_tilde,
        g: y - y_tilde,
    })
}

/// Root of `f` on `[lo, hi]` by bisection, returned as the end of the
/// final bracket where `f` has the sign of `f(lo)`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let fa = f(a);
    let fb = f(b);
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::NoBracket { lo, hi });
    }
    for _ in 0..max_iter {
        if b - a <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(a)
}

/// The root `y(k)` of the gap function; `g(y_star) ≥ 0`.
pub fn y_star(k: usize) -> Result<f64> {
    if k < 3 {
        return Err(Error::Domain(format!("y_star needs k >= 3, got {k}")));
    }
    let lo = classical_limit(k) + 1e-9;
    let hi = 1.0 - 1e-9;
    let g = |y: f64| gap(k, y).map(|v| v.g).unwrap_or(f64::NAN);
    bisect(g, lo, hi, ROOT_TOL, ROOT_MAX_ITER)
}

/// `−(k+1)/k − M/k + y + 1 ≥ −1`, evaluated as `y ≥ ỹ(y,k)` so that it agrees with `g ≥ 0`.
pub fn stabilizing_check(k: usize, y: f64) -> Result<bool> {
    let v = gap(k, y)?;
    Ok(y >= v.y_tilde)
}

/// The stabilizing inequality in the order written, for cross-checks away from the boundary.
pub fn stabilizing_lhs(k: usize, y: f64) -> Result<f64> {
    let v = gap(k, y)?;
    let kf = k as f64;
    Ok(-(kf + 1.0) / kf - v.m / kf + y + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundVariant {
    /// Amplitudes up to `1 − e²/(k+1)²`, bound `M(y,k)`.
    Theorem,
    /// Amplitudes up to `y(k)`, bound `M_s(y,k)` from the critical trajectory.
    Sharp,
}

/// Upper bound on the states for constant input `y` and any init in `[−1,1]^{k+1}`.
pub fn constant_input_bound(k: usize, y: f64) -> Result<f64> {
    constant_input_bound_with(k, y, BoundVariant::Theorem)
}

pub fn constant_input_bound_with(k: usize, y: f64, variant: BoundVariant) -> Result<f64> {
    if k < 3 {
        return Err(Error::Domain(format!("k = {k} but at least 3 is required")));
    }
    let limit = match variant {
        BoundVariant::Theorem => theorem_limit(k),
        BoundVariant::Sharp => y_star(k)?,
    };
    if !(y > 0.0 && y <= limit) {
        return Err(Error::Domain(format!("y = {y} outside (0, {limit}] for k = {k}")));
    }
    if y <= classical_limit(k) {
        return Ok(1.0);
    }
    match variant {
        BoundVariant::Theorem => Ok(gap(k, y)?.m),
        BoundVariant::Sharp => Ok(critical_trajectory(k, y)?.peak().unwrap_or(1.0).max(1.0)),
    }
}

/// `λ₀ = 16e‖f‖ / (k(1−‖f‖)(1 − e²/(k+1)² − ‖f‖))`.
pub fn lambda0(k: usize, f_inf: f64) -> Result<f64> {
    if k < 3 {
        return Err(Error::Domain(format!("k = {k} but at least 3 is required")));
    }
    let lim = theorem_limit(k);
    if !(f_inf > 0.0 && f_inf < lim) {
        return Err(Error::Domain(format!(
            "f_inf = {f_inf} outside (0, {lim}) for k = {k}"
        )));
    }
    let kf = k as f64;
    Ok(16.0 * E * f_inf / (kf * (1.0 - f_inf) * (lim - f_inf)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum OversamplingThreshold {
    /// `‖f‖_∞ ≤ 1 − 2/k`: the ℓ¹ criterion applies at any rate.
    Classical,
    /// `L(N+k+1)/g` with `N` the last index of the critical excursion.
    Required {
        lipschitz: f64,
        last_index: usize,
        gap: f64,
        lambda: f64,
    },
}

/// Rate from `λ ≥ L(N(v̄,‖f‖)+k+1)/g(‖f‖)`, requiring a positive gap.
pub fn prop_threshold(k: usize, f_inf: f64, lipschitz: f64) -> Result<OversamplingThreshold> {
    if k < 3 {
        return Err(Error::Domain(format!("k = {k} but at least 3 is required")));
    }
    if !(f_inf > 0.0 && f_inf < 1.0) {
        return Err(Error::Domain(format!("f_inf = {f_inf} outside (0, 1)")));
    }
    if f_inf <= classical_limit(k) {
        return Ok(OversamplingThreshold::Classical);
    }
    let g = gap(k, f_inf)?.g;
    if g <= 0.0 {
        return Err(Error::Domain(format!(
            "gap g({f_inf}, {k}) = {g} is not positive"
        )));
    }
    let n = critical_trajectory(k, f_inf)?.last_index().unwrap_or(0);
    Ok(OversamplingThreshold::Required {
        lipschitz,
        last_index: n,
        gap: g,
        lambda: lipschitz * (n + k + 1) as f64 / g,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Classical,
    GapStable,
    UnstableRegion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub k: usize,
    pub amplitude: f64,
    /// `M(y,k)`, or 1 in the classical regime.
    pub m: f64,
    pub m_sharp: Option<f64>,
    pub y_tilde: Option<f64>,
    pub gap: Option<f64>,
    pub y_star: f64,
    pub theorem_limit: f64,
    pub lambda0: Option<f64>,
    pub classical_ok: bool,
    pub regime: Regime,
}

impl StabilityReport {
    pub fn new(k: usize, amplitude: f64) -> Result<Self> {
        if k < 3 {
            return Err(Error::Domain(format!("k = {k} but at least 3 is required")));
        }
        if !(0.0..1.0).contains(&amplitude) {
            return Err(Error::Domain(format!("amplitude {amplitude} outside [0, 1)")));
        }
        let filter = crate::filters::make_minimal_filter(k)?;
        let classical_ok = classical_criterion(filter.filter(), amplitude);
        let ys = y_star(k)?;
        let lambda0 = lambda0(k, amplitude).ok();
        let mut r = StabilityReport {
            k,
            amplitude,
            m: 1.0,
            m_sharp: None,
            y_tilde: None,
            gap: None,
            y_star: ys,
            theorem_limit: theorem_limit(k),
            lambda0,
            classical_ok,
            regime: Regime::Classical,
        };
        if amplitude > classical_limit(k) {
            let v = gap(k, amplitude)?;
            r.m = v.m;
            r.y_tilde = Some(v.y_tilde);
            r.gap = Some(v.g);
            r.m_sharp = critical_trajectory(k, amplitude)?.peak();
            r.regime = if v.g >= 0.0 {
                Regime::GapStable
            } else {
                Regime::UnstableRegion
            };
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::make_minimal_filter;

    #[test]
    fn classical_boundary() {
        let f = make_minimal_filter(3).unwrap();
        assert!(classical_criterion(f.filter(), 1.0 / 3.0));
        assert!(!classical_criterion(f.filter(), 0.5));
        for k in 2..40 {
            let f = make_minimal_filter(k).unwrap();
            assert!(classical_criterion(f.filter(), classical_limit(k).max(0.0)));
        }
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(matches!(
            bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-12, 10),
            Err(Error::NoBracket { .. })
        ));
    }

    #[test]
    fn gap_domain() {
        assert!(gap(3, 0.2).is_err());
        assert!(gap(3, 1.0).is_err());
        assert!(gap(2, 0.5).is_err());
        assert!(gap(3, classical_limit(3)).is_ok());
    }

    #[test]
    fn stabilizing_examples() {
        for k in [3, 5, 10, 40] {
            let ys = y_star(k).unwrap();
            assert!(stabilizing_check(k, classical_limit(k) + 1e-6).unwrap());
            assert!(stabilizing_check(k, ys).unwrap());
            assert!(!stabilizing_check(k, 0.5 * (1.0 + ys)).unwrap());
        }
    }

    #[test]
    fn constant_bound_regimes() {
        assert_eq!(constant_input_bound(3, 0.3).unwrap(), 1.0);
        assert_eq!(constant_input_bound(3, 0.5).unwrap(), gap(3, 0.5).unwrap().m);
        assert!(constant_input_bound(3, 0.6).is_err());
        assert!(constant_input_bound(3, 0.0).is_err());
        let sharp = constant_input_bound_with(3, 0.7, BoundVariant::Sharp).unwrap();
        assert!(sharp <= gap(3, 0.7).unwrap().m);
        assert!(constant_input_bound_with(3, 0.71, BoundVariant::Sharp).is_err());
    }

    #[test]
    fn lambda0_domain() {
        assert!(lambda0(3, 0.6).is_err());
        assert!(lambda0(3, 0.0).is_err());
        assert!(lambda0(2, 0.1).is_err());
        assert_eq!(
            prop_threshold(3, 0.2, 0.2).unwrap(),
            OversamplingThreshold::Classical
        );
    }

    #[test]
    fn report_classical() {
        let r = StabilityReport::new(3, 0.3).unwrap();
        assert_eq!(r.regime, Regime::Classical);
        assert_eq!(r.m, 1.0);
        assert!(r.classical_ok);
        let r = StabilityReport::new(3, 0.69).unwrap();
        assert_eq!(r.regime, Regime::GapStable);
        assert_eq!(r.gap.unwrap(), r.amplitude - r.y_tilde.unwrap());
        assert_eq!(
            StabilityReport::new(3, 0.8).unwrap().regime,
            Regime::UnstableRegion
        );
        let j = serde_json::to_value(StabilityReport::new(3, 0.8).unwrap()).unwrap();
        assert_eq!(j["regime"], "unstable-region");
    }
}
