//! The generalized 1-bit recurrence `v_n = (h∗v)_n + y_n − q_n`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::filters::FirFilter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Bit {
    Minus,
    Plus,
}

impl Bit {
    /// `sign(a)` with the convention `sign(0) = +1`.
    #[inline]
    pub fn sign(a: f64) -> Bit {
        if a >= 0.0 {
            Bit::Plus
        } else {
            Bit::Minus
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Bit::Plus => 1.0,
            Bit::Minus => -1.0,
        }
    }
}

impl From<Bit> for i8 {
    fn from(b: Bit) -> i8 {
        match b {
            Bit::Plus => 1,
            Bit::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Bit {
    type Error = String;

    fn try_from(x: i8) -> std::result::Result<Bit, String> {
        match x {
            1 => Ok(Bit::Plus),
            -1 => Ok(Bit::Minus),
            _ => Err(format!("bit must be +1 or -1, got {x}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    Greedy,
    /// `q_n = sign(γ u_{n−1} + Δu_{n−1})` on the standard second-order form.
    Yilmaz {
        gamma: f64,
    },
    /// Bits replayed from a fixed source.
    External {
        bits: Vec<Bit>,
    },
}

impl Rule {
    fn validate(&self, f: &FirFilter) -> Result<()> {
        match self {
            Rule::Greedy => Ok(()),
            Rule::Yilmaz { gamma } => {
                if !(*gamma > 0.0) {
                    return Err(Error::InvalidParameter("yilmaz rule needs gamma > 0".into()));
                }
                if f.taps() != [2.0, -1.0] {
                    return Err(Error::InvalidParameter(
                        "yilmaz rule runs on the standard second-order filter (2, -1) only".into(),
                    ));
                }
                Ok(())
            }
            Rule::External { .. } => Ok(()),
        }
    }
}

/// The last `L` states, with `v_{n−1}` at `head`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerState {
    buf: Vec<f64>,
    head: usize,
    step: usize,
    warned: bool,
}

impl QuantizerState {
    /// `init` holds `(v_{−L}, ..., v_{−1})`, oldest first.
    pub fn new(init: &[f64]) -> Result<Self> {
        if init.is_empty() {
            return Err(Error::InvalidParameter("initial history is empty".into()));
        }
        if init.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { step: 0 });
        }
        Ok(QuantizerState {
            buf: init.to_vec(),
            head: init.len() - 1,
            step: 0,
            warned: false,
        })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        QuantizerState::new(&vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Index n of the next state to be produced.
    pub fn step_index(&self) -> usize {
        self.step
    }

    /// `v_{n−i}` for `1 ≤ i ≤ L`.
    #[inline]
    pub fn past(&self, i: usize) -> f64 {
        let l = self.buf.len();
        let idx = self.head + l - (i - 1);
        self.buf[if idx >= l { idx - l } else { idx }]
    }

    /// Current history, oldest first.
    pub fn history(&self) -> Vec<f64> {
        (1..=self.buf.len()).rev().map(|i| self.past(i)).collect()
    }

    #[inline]
    fn push(&mut self, v: f64) {
        self.head += 1;
        if self.head == self.buf.len() {
            self.head = 0;
        }
        self.buf[self.head] = v;
        self.step += 1;
    }
}

/// `(h∗v)_n` summed left to right over increasing lag.
#[inline]
fn feedback(state: &QuantizerState, f: &FirFilter) -> f64 {
    let mut acc = 0.0;
    for &(i, h) in f.nonzero() {
        acc += h * state.past(i);
    }
    acc
}

/// One step of the recurrence; advances `state` and returns `(q_n, v_n)`.
pub fn step(state: &mut QuantizerState, f: &FirFilter, y: f64, rule: &Rule) -> Result<(Bit, f64)> {
    let n = state.step;
    if state.len() != f.len() {
        return Err(Error::InvalidParameter(format!(
            "history length {} does not match filter length {}",
            state.len(),
            f.len()
        )));
    }
    if !y.is_finite() {
        return Err(Error::NonFinite { step: n });
    }
    if y.abs() > 1.0 && !state.warned {
        log::warn!("input |y_{n}| = {} exceeds 1", y.abs());
        state.warned = true;
    }
    let a = feedback(state, f) + y;
    let q = match rule {
        Rule::Greedy => Bit::sign(a),
        Rule::Yilmaz { gamma } => {
            let u1 = state.past(1);
            let u2 = state.past(2);
            Bit::sign(gamma * u1 + (u1 - u2))
        }
        Rule::External { bits } => *bits
            .get(n)
            .ok_or_else(|| Error::InvalidParameter(format!("external bit source exhausted at step {n}")))?,
    };
    let v = a - q.value();
    if !v.is_finite() {
        return Err(Error::NonFinite { step: n });
    }
    state.push(v);
    Ok((q, v))
}

/// A filter, a rule and a running state.
#[derive(Debug, Clone)]
pub struct Quantizer<'a> {
    filter: &'a FirFilter,
    rule: Rule,
    state: QuantizerState,
}

impl<'a> Quantizer<'a> {
    pub fn new(filter: &'a FirFilter, init: &[f64], rule: Rule) -> Result<Self> {
        if init.len() != filter.len() {
            return Err(Error::InvalidParameter(format!(
                "init has length {}, filter length is {}",
                init.len(),
                filter.len()
            )));
        }
        rule.validate(filter)?;
        Ok(Quantizer {
            filter,
            rule,
            state: QuantizerState::new(init)?,
        })
    }

    pub fn greedy(filter: &'a FirFilter, init: &[f64]) -> Result<Self> {
        Quantizer::new(filter, init, Rule::Greedy)
    }

    #[inline]
    pub fn step(&mut self, y: f64) -> Result<(Bit, f64)> {
        step(&mut self.state, self.filter, y, &self.rule)
    }

    pub fn state(&self) -> &QuantizerState {
        &self.state
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Positive,
    Negative,
}

/// A maximal run `start..=end` of states beyond ±1 on one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Excursion {
    pub start: usize,
    pub end: usize,
    pub side: Side,
}

impl Excursion {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerTrace {
    pub filter: FirFilter,
    pub rule: Rule,
    pub init: Vec<f64>,
    pub inputs: Vec<f64>,
    pub bits: Vec<Bit>,
    pub states: Vec<f64>,
}

pub fn run(f: &FirFilter, init: &[f64], y: &[f64], rule: Rule) -> Result<QuantizerTrace> {
    let mut qz = Quantizer::new(f, init, rule.clone())?;
    let mut bits = Vec::with_capacity(y.len());
    let mut states = Vec::with_capacity(y.len());
    for &yn in y {
        let (q, v) = qz.step(yn)?;
        bits.push(q);
        states.push(v);
    }
    Ok(QuantizerTrace {
        filter: f.clone(),
        rule,
        init: init.to_vec(),
        inputs: y.to_vec(),
        bits,
        states,
    })
}

impl QuantizerTrace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn max_abs_state(&self) -> f64 {
        max_abs(&self.states)
    }

    pub fn excursions(&self) -> Vec<Excursion> {
        excursions(&self.states)
    }

    /// State `v_n` for `n ≥ −L`, reading negative indices from `init`.
    pub fn state_at(&self, n: isize) -> f64 {
        if n >= 0 {
            self.states[n as usize]
        } else {
            self.init[(self.init.len() as isize + n) as usize]
        }
    }

    /// Steps whose stored state differs from a recomputation of the recurrence.
    pub fn replay_mismatches(&self) -> usize {
        (0..self.len())
            .filter(|&n| {
                let mut acc = 0.0;
                for &(i, h) in self.filter.nonzero() {
                    acc += h * self.state_at(n as isize - i as isize);
                }
                let v = acc + self.inputs[n] - self.bits[n].value();
                v.to_bits() != self.states[n].to_bits()
            })
            .count()
    }

    /// Steps violating `v > 1 ⇒ q = +1`, `v < −1 ⇒ q = −1`, `q = +1 ⇒ v ≥ −1`, `q = −1 ⇒ v < 1`.
    pub fn sign_coupling_violations(&self) -> usize {
        self.states
            .iter()
            .zip(&self.bits)
            .filter(|(&v, &q)| match q {
                Bit::Plus => v < -1.0,
                Bit::Minus => v >= 1.0,
            })
            .count()
    }

    /// Metadata written as the header line of the CSV export.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "filter": self.filter,
            "rule": self.rule,
            "init": self.init,
            "len": self.len(),
        })
    }

    /// `n,y,q,v` rows preceded by a `#` line holding [`metadata`](Self::metadata).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# {}", self.metadata())?;
        writeln!(w, "n,y,q,v")?;
        for n in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{}",
                n,
                fmt_f64(self.inputs[n]),
                i8::from(self.bits[n]),
                fmt_f64(self.states[n])
            )?;
        }
        Ok(())
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximal runs of `v > 1` or `v < −1`.
pub fn excursions(v: &[f64]) -> Vec<Excursion> {
    let side_of = |x: f64| {
        if x > 1.0 {
            Some(Side::Positive)
        } else if x < -1.0 {
            Some(Side::Negative)
        } else {
            None
        }
    };
    let mut out = Vec::new();
    let mut cur: Option<Excursion> = None;
    for (n, &x) in v.iter().enumerate() {
        let s = side_of(x);
        match (cur.as_mut(), s) {
            (Some(e), Some(s)) if e.side == s => e.end = n,
            (_, s) => {
                if let Some(e) = cur.take() {
                    out.push(e);
                }
                cur = s.map(|side| Excursion {
                    start: n,
                    end: n,
                    side,
                });
            }
        }
    }
    out.extend(cur);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::make_minimal_filter;
    use approx::assert_relative_eq;

    fn k3() -> FirFilter {
        make_minimal_filter(3).unwrap().into()
    }

    #[test]
    fn zero_history_half_input() {
        let f = k3();
        let mut s = QuantizerState::zeros(4).unwrap();
        let (q, v) = step(&mut s, &f, 0.5, &Rule::Greedy).unwrap();
        assert_eq!(q, Bit::Plus);
        assert_eq!(v, -0.5);
    }

    #[test]
    fn sign_of_zero_is_plus() {
        let f = k3();
        let mut s = QuantizerState::zeros(4).unwrap();
        let (q, v) = step(&mut s, &f, 0.0, &Rule::Greedy).unwrap();
        assert_eq!(q, Bit::Plus);
        assert_eq!(v, -1.0);
    }

    #[test]
    fn critical_trigger_first_step() {
        let f = k3();
        let mut s = QuantizerState::new(&[-1.0, -1.0, -1.0, 1.0]).unwrap();
        let (q, v) = step(&mut s, &f, 0.8, &Rule::Greedy).unwrap();
        assert_eq!(q, Bit::Plus);
        assert_relative_eq!(v, 4.0 / 3.0 + 1.0 / 3.0 + 0.8 - 1.0, epsilon = 1e-15);
        assert_eq!(s.history(), vec![-1.0, -1.0, 1.0, v]);
    }

    #[test]
    fn non_finite_input_reports_step() {
        let f = k3();
        let y = [0.1, 0.2, f64::NAN];
        match run(&f, &[0.0; 4], &y, Rule::Greedy) {
            Err(Error::NonFinite { step }) => assert_eq!(step, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn init_length_checked() {
        assert!(run(&k3(), &[0.0; 3], &[0.1], Rule::Greedy).is_err());
    }

    #[test]
    fn external_bits_replay() {
        let f = k3();
        let y: Vec<f64> = (0..50).map(|n| 0.6 * (n as f64 * 0.3).sin()).collect();
        let t = run(&f, &[0.0; 4], &y, Rule::Greedy).unwrap();
        let r = run(&f, &[0.0; 4], &y, Rule::External { bits: t.bits.clone() }).unwrap();
        assert_eq!(t.states, r.states);
        assert!(run(
            &f,
            &[0.0; 4],
            &y,
            Rule::External {
                bits: vec![Bit::Plus]
            }
        )
        .is_err());
    }

    #[test]
    fn yilmaz_needs_standard_filter() {
        assert!(run(&k3(), &[0.0; 4], &[0.1], Rule::Yilmaz { gamma: 0.5 }).is_err());
        let f = FirFilter::new(vec![2.0, -1.0]).unwrap();
        let y = vec![0.5; 200];
        let t = run(&f, &[0.0; 2], &y, Rule::Yilmaz { gamma: 0.5 }).unwrap();
        assert_eq!(t.replay_mismatches(), 0);
    }

    #[test]
    fn zero_trace_has_no_excursions() {
        assert_eq!(max_abs(&[0.0; 10]), 0.0);
        assert!(excursions(&[0.0; 10]).is_empty());
    }

    #[test]
    fn excursion_partition() {
        let v = [0.0, 1.5, 2.0, -1.5, -1.2, 0.3, 1.0, -1.0, 1.1];
        let e = excursions(&v);
        assert_eq!(
            e,
            vec![
                Excursion {
                    start: 1,
                    end: 2,
                    side: Side::Positive
                },
                Excursion {
                    start: 3,
                    end: 4,
                    side: Side::Negative
                },
                Excursion {
                    start: 8,
                    end: 8,
                    side: Side::Positive
                },
            ]
        );
    }

    #[test]
    fn bit_json() {
        assert_eq!(
            serde_json::to_string(&vec![Bit::Plus, Bit::Minus]).unwrap(),
            "[1,-1]"
        );
        assert!(serde_json::from_str::<Bit>("0").is_err());
        let r: Rule = serde_json::from_str(r#"{"rule":"yilmaz","gamma":0.3}"#).unwrap();
        assert_eq!(r, Rule::Yilmaz { gamma: 0.3 });
    }
}
