use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::average_fidelity;
use crate::error::{Error, Result};
use crate::readout::Mode;
use crate::rng::{derive_key, substream};
use crate::stats::{bootstrap_mean_ci90, ci90_half_width, mean};

use super::estimate::{draw_operators, draw_ratios, exact_ratios, Experiment};
use super::relevant::RelevantSet;

const SWEEP_STREAM: u64 = 5;
const SUBSET_STREAM: u64 = 6;
const BOOTSTRAP_STREAM: u64 = 7;
const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Repeated-trial statistics of the estimator at one sample count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub samples: usize,
    pub trials: usize,
    pub mean_fidelity: f64,
    pub mean_average_fidelity: f64,
    /// Half the 5th–95th percentile spread of F̄ over trials.
    pub half_width: f64,
    /// Same quantities for K distinct operators drawn without replacement.
    pub mean_average_fidelity_without_replacement: f64,
    pub half_width_without_replacement: f64,
    /// 90% bootstrap half-width of a single trial's mean ratio, mapped to F̄.
    pub bootstrap_half_width: f64,
}

/// For each `K` in `counts`, runs `trials` independent estimates with `K`
/// i.i.d. draws, plus a without-replacement counterpart
/// `F = Σ_{i∈S} Pr(i) s_i/w_i / Σ_{i∈S} Pr(i)` over a uniform K-subset `S`,
/// which equals the exhaustive sum once `S` covers every operator.
pub fn subsample_sweep(
    exp: &Experiment,
    relevant: &RelevantSet,
    counts: &[usize],
    trials: usize,
    mode: Mode,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if trials == 0 || counts.contains(&0) {
        return Err(Error::InvalidArgument("sample counts and trials must be positive".into()));
    }
    let table = exact_ratios(exp, relevant)?;
    let d = relevant.d();
    let m = relevant.len();
    counts
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let per_trial = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let trial_seed = derive_key(seed, &[SWEEP_STREAM, ki as u64, t as u64]);
                    let draws = draw_operators(relevant, k, trial_seed)?;
                    let ratios: Vec<f64> = if mode.is_exact() {
                        draws.iter().map(|&i| table[i]).collect()
                    } else {
                        draw_ratios(exp, relevant, &draws, false, mode, trial_seed, None)?
                            .into_iter()
                            .map(|r| r.0)
                            .collect()
                    };
                    let kk = k.min(m);
                    let mut rng = substream(trial_seed, &[SUBSET_STREAM]);
                    let subset = sample(&mut rng, m, kk);
                    let (num, den) = subset.iter().fold((0.0, 0.0), |(num, den), i| {
                        let pr = relevant.operators[i].relevance;
                        (num + pr * table[i], den + pr)
                    });
                    let without = num / den;
                    Ok((ratios, without))
                })
                .collect::<Result<Vec<_>>>()?;

            let fidelities: Vec<f64> = per_trial.iter().map(|(r, _)| mean(r)).collect();
            let avg: Vec<f64> = fidelities.iter().map(|&f| average_fidelity(f, d)).collect();
            let avg_without: Vec<f64> = per_trial.iter().map(|(_, f)| average_fidelity(*f, d)).collect();
            let mut rng = substream(seed, &[BOOTSTRAP_STREAM, ki as u64]);
            let (lo, hi) = bootstrap_mean_ci90(&per_trial[0].0, BOOTSTRAP_RESAMPLES, &mut rng);
            Ok(SweepRow {
                samples: k,
                trials,
                mean_fidelity: mean(&fidelities),
                mean_average_fidelity: mean(&avg),
                half_width: ci90_half_width(&avg),
                mean_average_fidelity_without_replacement: mean(&avg_without),
                half_width_without_replacement: ci90_half_width(&avg_without),
                bootstrap_half_width: (average_fidelity(hi, d) - average_fidelity(lo, d)) / 2.0,
            })
        })
        .collect()
}
