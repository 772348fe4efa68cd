pub mod adversary;
pub mod analyze_filter;
pub mod gap_report;
pub mod quantize;
pub mod reconstruct;
pub mod sweep;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sigdelta::signals::{SignalKind, SignalSpec};

use crate::error::{usage, CliResult};

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Input samples: by index for constant, step and file signals when `horizon` is set,
/// otherwise at rate `lambda`. Sinusoids above the band are first moved onto it.
pub fn input_samples(
    signal: &SignalSpec,
    lambda: Option<f64>,
    horizon: Option<usize>,
    unit_band: bool,
) -> CliResult<(Vec<f64>, f64, Option<f64>)> {
    signal.validate()?;
    if let Some(n) = horizon {
        let values = match &signal.kind {
            SignalKind::Constant { value } => vec![*value; n],
            SignalKind::Step {
                levels,
                change_indices,
            } => (0..n)
                .map(|i| levels[change_indices.iter().take_while(|&&c| c <= i).count()])
                .collect(),
            SignalKind::SamplesFile { path } => {
                let mut v = sigdelta::signals::read_samples_file(path)?;
                v.truncate(n);
                v
            }
            _ => {
                return Err(usage(
                    "`horizon` applies to constant, step and samples_file signals; use `lambda`",
                ))
            }
        };
        return Ok((values, signal.interval[0], None));
    }
    let lambda = match (lambda, &signal.kind) {
        (Some(l), _) => l,
        (None, SignalKind::SamplesFile { path }) => {
            return Ok((
                sigdelta::signals::read_samples_file(path)?,
                signal.interval[0],
                None,
            ))
        }
        (None, _) => return Err(usage("config needs `lambda` or `horizon`")),
    };
    let (spec, stretch) = match signal.to_unit_band() {
        Some((s, c)) if unit_band => (s, Some(c)),
        _ => (signal.clone(), None),
    };
    let s = spec.sample(lambda)?;
    Ok((s.values, s.start, stretch))
}
