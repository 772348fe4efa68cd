mod common;

use sigdelta::adversary::*;
use sigdelta::stability::{constant_input_bound_with, gap, BoundVariant};
use sigdelta::trajectory::{coefficient_table, critical_trigger, parabola_max};

/// `v_n` from the trigger and the input/output history through the coefficient table.
fn substituted(k: usize, trigger: &[f64], y: &[f64], q: &[f64], n: usize) -> f64 {
    let t = coefficient_table(k, n).unwrap();
    let w = k + 1;
    let row = t.row(n);
    let mut v: f64 = (1..=w).map(|i| row[i - 1] * trigger[w - i]).sum();
    for m in 0..=n {
        v += t.h1(n as isize - m as isize - 1) * (y[m] - q[m]);
    }
    v
}

#[test]
fn step_example_leaves_the_interval() {
    let trig = critical_trigger(3).unwrap();
    let t = step_counterexample(3, 0.7, -0.7, 6, 12, &trig).unwrap();
    let first = t.states.iter().position(|&v| v < -1.0).unwrap();
    assert_eq!(first, 8);
    assert!((t.states[5] - 2.891632).abs() < 1e-5);
    let q: Vec<f64> = t.bits.iter().map(|b| b.value()).collect();
    for n in 0..t.len() {
        let v = substituted(3, &trig, &t.inputs, &q, n);
        assert!((v - t.states[n]).abs() < 1e-12, "n={n}");
    }
}

#[test]
fn milder_step_stays_above_minus_one() {
    let trig = critical_trigger(3).unwrap();
    let t = step_counterexample(3, 0.7, 0.35, 6, 10_000, &trig).unwrap();
    let min = t.states.iter().copied().fold(f64::INFINITY, f64::min);
    let max = t.states.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(min >= -1.0, "min {min}");
    assert!((2.88..=2.90).contains(&max), "max {max}");
}

#[test]
fn equal_levels_reduce_to_constant_input() {
    let trig = critical_trigger(5).unwrap();
    let a = step_counterexample(5, 0.8, 0.8, 3, 500, &trig).unwrap();
    let b = step_counterexample(5, 0.8, 0.8, 400, 500, &trig).unwrap();
    assert_eq!(a.states, b.states);
    assert!(a.max_abs_state() <= constant_input_bound_with(5, 0.8, BoundVariant::Sharp).unwrap() + 1e-12);
}

#[test]
fn peak_flip_grows() {
    for (k, a) in [(3usize, 0.7), (5, 0.8)] {
        let trig = critical_trigger(k).unwrap();
        let t = peak_flip_generator(k, a, 2000, &trig, None).unwrap();
        let h = t.len() / 2;
        let m1 = sigdelta::quantizer::max_abs(&t.states[..h]);
        let m2 = sigdelta::quantizer::max_abs(&t.states[h..]);
        assert!(m2 > m1, "k={k} {m1} {m2}");
        assert!(t.inputs.iter().all(|y| y.abs() == a));
        assert_eq!(t.sign_coupling_violations(), 0);
        let w = default_window(k, a).unwrap();
        assert_eq!(
            divergence_detector(&t.states, parabola_max(k, a).unwrap(), w).unwrap(),
            Verdict::Diverging
        );
    }
}

#[test]
fn flips_land_on_peaks() {
    let trig = critical_trigger(3).unwrap();
    let t = peak_flip_generator(3, 0.7, 300, &trig, None).unwrap();
    for n in 1..t.len() {
        if t.inputs[n] != t.inputs[n - 1] {
            // the state before the flip is a local extremum of |v|
            assert!(t.states[n - 1].abs() > 1.0);
        }
    }
}

#[test]
fn capped_flip_stays_bounded() {
    let (k, a) = (3usize, 0.7);
    let cap = smoothness_cap(k, a).unwrap();
    assert!(
        (cap - gap(k, a).unwrap().g
            / (sigdelta::trajectory::coverage_upper_bound(k, a).unwrap().max() + 4.0))
            .abs()
            < 1e-15
    );
    let trig = critical_trigger(k).unwrap();
    let t = peak_flip_generator(k, a, 100_000, &trig, Some(cap)).unwrap();
    for w in t.inputs.windows(2) {
        assert!((w[1] - w[0]).abs() <= cap * (1.0 + 1e-12));
    }
    let m = parabola_max(k, a).unwrap();
    assert!(t.max_abs_state() <= m);
    assert_eq!(
        divergence_detector(&t.states, m, default_window(k, a).unwrap()).unwrap(),
        Verdict::Bounded
    );
}

#[test]
fn detector_verdicts() {
    let grow: Vec<f64> = (0..300).map(|n| 1.0 + n as f64 * 0.1).collect();
    assert_eq!(divergence_detector(&grow, 5.0, 50).unwrap(), Verdict::Diverging);
    let flat: Vec<f64> = (0..300).map(|n| ((n as f64) * 0.3).sin() * 2.0).collect();
    assert_eq!(divergence_detector(&flat, 5.0, 50).unwrap(), Verdict::Bounded);
    assert_eq!(
        divergence_detector(&flat[..120], 5.0, 50).unwrap(),
        Verdict::Undecided
    );
    let mut burst = flat.clone();
    burst[10] = 9.0;
    assert_eq!(divergence_detector(&burst, 5.0, 50).unwrap(), Verdict::Undecided);
}

#[test]
fn spec_round_trip() {
    let s = AdversarySpec {
        k: 3,
        amplitude: 0.7,
        mode: AdversaryMode::FixedStep {
            change_index: 6,
            new_level: -0.7,
            horizon: 12,
        },
        init: None,
    };
    let j = serde_json::to_string(&s).unwrap();
    let back: AdversarySpec = serde_json::from_str(&j).unwrap();
    assert_eq!(back, s);
    let t = back.run().unwrap();
    assert!(t.states[8] < -1.0);
}
