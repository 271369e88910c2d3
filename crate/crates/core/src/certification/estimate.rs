use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{average_fidelity, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::StateVector;
use crate::pauli::PauliWord;
use crate::readout::{measure_pauli, Mode, ReadoutCalibration, Reading};
use crate::rng::{derive_key, substream};
use crate::stats::{mean, sample_std, Z90};

use super::plan::settings_for;
use super::relevant::RelevantSet;

const OPERATOR_STREAM: u64 = 1;
const DRAW_STREAM: u64 = 2;
const INPUT_STREAM: u64 = 3;
const MEASURE_STREAM: u64 = 4;

/// Ratios `s/w` beyond this magnitude are flagged in reports.
pub const RATIO_WARN: f64 = 3.0;

/// The simulated lab: the implemented process and its readout.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub channel: QuantumChannel,
    pub calibration: ReadoutCalibration,
}

impl Experiment {
    pub fn new(channel: QuantumChannel, calibration: ReadoutCalibration) -> Result<Self> {
        if channel.n() != calibration.n() {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit channel with a {}-qubit calibration",
                channel.n(),
                calibration.n()
            )));
        }
        Ok(Self { channel, calibration })
    }

    pub fn with_default_readout(channel: QuantumChannel) -> Result<Self> {
        let calibration = ReadoutCalibration::default_for(channel.n())?;
        Self::new(channel, calibration)
    }

    pub fn n(&self) -> usize {
        self.channel.n()
    }

    /// Prepares `input`, runs the channel and reads out `observable`.
    pub fn run(&self, input: &StateVector, observable: &PauliWord, mode: Mode) -> Result<Reading> {
        let out = self.channel.apply(&input.density())?;
        if observable.is_identity() {
            let tr = out.trace()?.re;
            return Ok(Reading::exact(observable.sign() * tr));
        }
        measure_pauli(&out, observable, &self.calibration, mode)
    }
}

fn mode_seed(mode: Mode) -> u64 {
    match mode {
        Mode::Exact => 0,
        Mode::Shots { seed, .. } => seed,
    }
}

fn split_word(exp: &Experiment, word: &PauliWord) -> Result<(PauliWord, PauliWord)> {
    let n = exp.n();
    if word.len() != 2 * n {
        return Err(Error::LengthMismatch(word.len(), 2 * n));
    }
    word.split(n)
}

/// `tr[(A⊗B)ρ_E] = (1/d) Σ_j a_j tr[B E(|a_j*⟩⟨a_j*|)]`, averaging over every
/// conjugated eigenvector of the copy-register factor `A`.
pub fn expectation_via_inputs(exp: &Experiment, word: &PauliWord, mode: Mode) -> Result<Reading> {
    let (copy, output) = split_word(exp, word)?;
    let inputs = copy.eigenbasis().conjugated_inputs();
    let d = inputs.len() as f64;
    let seed = mode_seed(mode);
    let (mut value, mut variance) = (0.0, 0.0);
    for (j, (a, state)) in inputs.iter().enumerate() {
        let r = exp.run(state, &output, mode.with_seed(derive_key(seed, &[j as u64])))?;
        value += a * r.value;
        variance += r.variance;
    }
    Ok(Reading { value: value / d, variance: variance / (d * d) })
}

/// Unbiased single-input estimate `a_j ⟨B⟩_j` for input `j`.
pub fn expectation_single_input(exp: &Experiment, word: &PauliWord, input: usize, mode: Mode) -> Result<Reading> {
    let (copy, output) = split_word(exp, word)?;
    let basis = copy.eigenbasis();
    if input >= basis.len() {
        return Err(Error::InvalidArgument(format!("input {input} out of range")));
    }
    let (a, state) = (basis.eigenvalues[input], basis.vectors[input].conj());
    let r = exp.run(&state, &output, mode.with_seed(derive_key(mode_seed(mode), &[input as u64])))?;
    Ok(Reading { value: a * r.value, variance: r.variance })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub method: Method,
    pub process_fidelity: f64,
    pub average_fidelity: f64,
    pub std_error: f64,
    pub ci90: [f64; 2],
    /// Hilbert-space dimension of the gate.
    pub d: usize,
    pub n_operators_sampled: usize,
    pub n_settings: usize,
    pub shots_per_setting: u32,
    pub eigenstate_sampling: bool,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl CertificationReport {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        method: Method,
        fidelity: f64,
        std_error: f64,
        d: usize,
        n_operators_sampled: usize,
        n_settings: usize,
        mode: Mode,
        eigenstate_sampling: bool,
        seed: u64,
        warnings: Vec<String>,
    ) -> Self {
        let half = Z90 * std_error;
        Self {
            method,
            process_fidelity: fidelity,
            average_fidelity: average_fidelity(fidelity, d),
            std_error,
            ci90: [fidelity - half, fidelity + half],
            d,
            n_operators_sampled,
            n_settings,
            shots_per_setting: mode.shots(),
            eigenstate_sampling,
            seed,
            warnings,
        }
    }

    /// `|F̄ − (dF + 1)/(d + 1)|`.
    pub fn average_fidelity_error(&self) -> f64 {
        (self.average_fidelity - average_fidelity(self.process_fidelity, self.d)).abs()
    }
}

fn ratio_warning(word: &PauliWord, ratio: f64) -> Option<String> {
    (ratio.abs() > RATIO_WARN).then(|| format!("{word}: measured/ideal ratio {ratio:.3} exceeds {RATIO_WARN}"))
}

/// Full weighted sum `F = Σ_i Pr(i) s_i/w_i` with Gaussian error propagation.
pub fn estimate_exhaustive(exp: &Experiment, relevant: &RelevantSet, mode: Mode) -> Result<CertificationReport> {
    check_sizes(exp, relevant)?;
    let seed = mode_seed(mode);
    let readings = relevant
        .operators
        .par_iter()
        .enumerate()
        .map(|(i, op)| {
            if op.is_identity() {
                return Ok(Reading::exact(op.ideal_expectation));
            }
            expectation_via_inputs(exp, &op.word, mode.with_seed(derive_key(seed, &[OPERATOR_STREAM, i as u64])))
        })
        .collect::<Result<Vec<_>>>()?;

    let (mut fidelity, mut variance) = (0.0, 0.0);
    let mut warnings = relevant.warnings.clone();
    let mut n_settings = 0;
    for (op, r) in relevant.iter().zip(&readings) {
        let w = op.ideal_expectation;
        let ratio = r.value / w;
        fidelity += op.relevance * ratio;
        variance += (op.relevance / w).powi(2) * r.variance;
        warnings.extend(ratio_warning(&op.word, ratio));
        n_settings += settings_for(&op.word, relevant.n, relevant.d());
    }
    Ok(CertificationReport::assemble(
        Method::Exhaustive,
        fidelity,
        variance.sqrt(),
        relevant.d(),
        relevant.len(),
        n_settings,
        mode,
        false,
        seed,
        warnings,
    ))
}

fn check_sizes(exp: &Experiment, relevant: &RelevantSet) -> Result<()> {
    if exp.n() != relevant.n {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit experiment for a {}-qubit operator list",
            exp.n(),
            relevant.n
        )));
    }
    if relevant.is_empty() {
        return Err(Error::InvalidArgument("empty relevant operator list".into()));
    }
    Ok(())
}

/// Operator indices drawn i.i.d. from the relevance distribution.
pub(crate) fn draw_operators(relevant: &RelevantSet, count: usize, seed: u64) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(relevant.relevances())
        .map_err(|e| Error::InvalidArgument(format!("relevance distribution: {e}")))?;
    let mut rng = substream(seed, &[DRAW_STREAM]);
    Ok((0..count).map(|_| dist.sample(&mut rng)).collect())
}

/// Exact `s_i/w_i` for every relevant operator.
pub fn exact_ratios(exp: &Experiment, relevant: &RelevantSet) -> Result<Vec<f64>> {
    check_sizes(exp, relevant)?;
    relevant
        .operators
        .par_iter()
        .map(|op| {
            if op.is_identity() {
                return Ok(1.0);
            }
            Ok(expectation_via_inputs(exp, &op.word, Mode::Exact)?.value / op.ideal_expectation)
        })
        .collect()
}

/// Ratio sample for each draw, with the settings it consumed.
pub(crate) fn draw_ratios(
    exp: &Experiment,
    relevant: &RelevantSet,
    draws: &[usize],
    eigenstate_sampling: bool,
    mode: Mode,
    seed: u64,
    exact_table: Option<&[f64]>,
) -> Result<Vec<(f64, usize)>> {
    let n = relevant.n;
    let d = relevant.d();
    let measure_seed = derive_key(mode_seed(mode), &[seed]);
    draws
        .par_iter()
        .enumerate()
        .map(|(k, &i)| {
            let op = &relevant.operators[i];
            if op.is_identity() {
                return Ok((1.0, 0));
            }
            let child = mode.with_seed(derive_key(measure_seed, &[MEASURE_STREAM, k as u64]));
            if eigenstate_sampling {
                let input = substream(seed, &[INPUT_STREAM, k as u64]).random_range(0..d);
                let r = expectation_single_input(exp, &op.word, input, child)?;
                return Ok((r.value / op.ideal_expectation, settings_for(&op.word, n, 1)));
            }
            let settings = settings_for(&op.word, n, d);
            match (mode, exact_table) {
                (Mode::Exact, Some(table)) => Ok((table[i], settings)),
                _ => {
                    let r = expectation_via_inputs(exp, &op.word, child)?;
                    Ok((r.value / op.ideal_expectation, settings))
                }
            }
        })
        .collect()
}

/// `F ≈ (1/N) Σ_k s_{i_k}/w_{i_k}` with `i_k ~ Pr`; standard error is the
/// sample standard deviation over `√N`.
pub fn estimate_monte_carlo(
    exp: &Experiment,
    relevant: &RelevantSet,
    n_samples: usize,
    eigenstate_sampling: bool,
    mode: Mode,
    seed: u64,
) -> Result<CertificationReport> {
    check_sizes(exp, relevant)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let draws = draw_operators(relevant, n_samples, seed)?;
    let table = if mode.is_exact() && !eigenstate_sampling {
        let mut unique = draws.clone();
        unique.sort_unstable();
        unique.dedup();
        let mut table = vec![f64::NAN; relevant.len()];
        let values = unique
            .par_iter()
            .map(|&i| {
                let op = &relevant.operators[i];
                if op.is_identity() {
                    return Ok(1.0);
                }
                Ok(expectation_via_inputs(exp, &op.word, Mode::Exact)?.value / op.ideal_expectation)
            })
            .collect::<Result<Vec<_>>>()?;
        for (&i, v) in unique.iter().zip(values) {
            table[i] = v;
        }
        Some(table)
    } else {
        None
    };
    let samples = draw_ratios(exp, relevant, &draws, eigenstate_sampling, mode, seed, table.as_deref())?;
    let ratios: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let n_settings = samples.iter().map(|s| s.1).sum();

    let mut warnings = relevant.warnings.clone();
    for (&i, &r) in draws.iter().zip(&ratios) {
        if !eigenstate_sampling {
            warnings.extend(ratio_warning(&relevant.operators[i].word, r));
        }
    }
    warnings.dedup();
    let std_error = sample_std(&ratios) / (n_samples as f64).sqrt();
    Ok(CertificationReport::assemble(
        Method::MonteCarlo,
        mean(&ratios),
        std_error,
        relevant.d(),
        n_samples,
        n_settings,
        mode,
        eigenstate_sampling,
        seed,
        warnings,
    ))
}
