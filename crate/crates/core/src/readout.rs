//! Joint dispersive readout model.
//!
//! A single shot returns the level response `α_i` of the computational-basis
//! outcome `i`, so the measured operator is `M = Σ_i α_i |i⟩⟨i|`. Expanded in
//! identity/σ_z products, `M = Σ_s β_s Z^s` with `β = WHT(α)/2^n`.
//!
//! To read out one Pauli term `B`, each supported qubit is rotated so that
//! `σ_z` maps onto its factor of `B`, and the measurement is repeated with
//! π pulses (sign flips of `σ_z`) on every toggle pattern of the even-parity
//! subgroup. Averaging over the `2^{n-1}` patterns cancels every β term except
//! the identity and the target.
//!
//! Basis rotations (applied to the state before readout, `R†ZR = P`):
//! X uses `Ry(−π/2)`, Y uses `Rx(+π/2)`, with `R_a(θ) = exp(−iθσ_a/2)`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, I};
use crate::pauli::{Pauli, PauliWord};
use crate::rng::substream;

/// Smallest |β| for which a term is considered extractable.
pub const MIN_BETA: f64 = 1e-12;
/// Minimum |β| accepted when drawing randomized calibrations.
const RANDOM_MIN_BETA: f64 = 0.02;

/// Exact expectations, or `shots` simulated single-shot readouts per setting.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Mode {
    Exact,
    Shots { shots: u32, seed: u64 },
}

impl Mode {
    pub fn is_exact(&self) -> bool {
        matches!(self, Mode::Exact)
    }

    pub fn shots(&self) -> u32 {
        match self {
            Mode::Exact => 0,
            Mode::Shots { shots, .. } => *shots,
        }
    }

    /// Same mode with the seed replaced by a child key.
    pub fn with_seed(self, seed: u64) -> Mode {
        match self {
            Mode::Exact => Mode::Exact,
            Mode::Shots { shots, .. } => Mode::Shots { shots, seed },
        }
    }
}

/// Estimated expectation value with the variance of that estimate.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub value: f64,
    pub variance: f64,
}

impl Reading {
    pub fn exact(value: f64) -> Self {
        Self { value, variance: 0.0 }
    }
}

/// `β_s = (1/2^n) Σ_i (−1)^{popcount(i & s)} α_i`, via the fast Walsh–Hadamard transform.
pub fn walsh_beta(alpha: &[f64]) -> Result<Vec<f64>> {
    let mut out = alpha.to_vec();
    fwht(&mut out)?;
    let scale = 1.0 / alpha.len() as f64;
    out.iter_mut().for_each(|b| *b *= scale);
    Ok(out)
}

/// Inverse of [`walsh_beta`].
pub fn walsh_alpha(beta: &[f64]) -> Result<Vec<f64>> {
    let mut out = beta.to_vec();
    fwht(&mut out)?;
    Ok(out)
}

fn fwht(data: &mut [f64]) -> Result<()> {
    let len = data.len();
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    let mut h = 1;
    while h < len {
        for block in data.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutCalibration {
    n: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl ReadoutCalibration {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("calibration levels must be finite".into()));
        }
        let beta = walsh_beta(&alpha)?;
        let n = alpha.len().trailing_zeros() as usize;
        if n == 0 {
            return Err(Error::QubitCount(0));
        }
        Ok(Self { n, alpha, beta })
    }

    /// Unit response on every level except a sign flip on `|1…1⟩`, so that
    /// `|β_s| = 2/2^n` for every `s ≠ 0`.
    pub fn default_for(n: usize) -> Result<Self> {
        if n == 0 || n > 6 {
            return Err(Error::QubitCount(n));
        }
        let dim = 1usize << n;
        let alpha = (0..dim).map(|i| if i == dim - 1 { -1.0 } else { 1.0 }).collect();
        Self::new(alpha)
    }

    /// Levels drawn uniformly from [−1, 1], redrawn until every |β| ≥ 0.02.
    pub fn randomized(n: usize, seed: u64) -> Result<Self> {
        if n == 0 || n > 6 {
            return Err(Error::QubitCount(n));
        }
        for attempt in 0u64.. {
            let mut rng = substream(seed, &[n as u64, attempt]);
            let alpha: Vec<f64> = (0..1usize << n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let cal = Self::new(alpha)?;
            if cal.beta.iter().all(|b| b.abs() >= RANDOM_MIN_BETA) {
                return Ok(cal);
            }
        }
        unreachable!()
    }

    /// Parses a JSON array or a whitespace/comma separated list of levels.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        let alpha: Vec<f64> = if trimmed.starts_with('[') {
            serde_json::from_str(trimmed)?
        } else {
            trimmed
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("invalid calibration level '{t}'"))))
                .collect::<Result<_>>()?
        };
        Self::new(alpha)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }
}

/// Where a readout calibration comes from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationSource {
    #[default]
    Default,
    Randomized(u64),
    File(std::path::PathBuf),
}

impl CalibrationSource {
    pub fn build(&self, n: usize) -> Result<ReadoutCalibration> {
        let cal = match self {
            CalibrationSource::Default => ReadoutCalibration::default_for(n)?,
            CalibrationSource::Randomized(seed) => ReadoutCalibration::randomized(n, *seed)?,
            CalibrationSource::File(path) => ReadoutCalibration::load(path)?,
        };
        if cal.n() != n {
            return Err(Error::DimensionMismatch(format!("calibration is for {} qubits, gate has {n}", cal.n())));
        }
        Ok(cal)
    }
}

impl std::fmt::Display for CalibrationSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CalibrationSource::Default => f.write_str("default"),
            CalibrationSource::Randomized(seed) => write!(f, "randomized:{seed}"),
            CalibrationSource::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

impl std::str::FromStr for CalibrationSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "default" => Ok(CalibrationSource::Default),
            Some(("randomized", seed)) => seed
                .parse()
                .map(CalibrationSource::Randomized)
                .map_err(|_| Error::Parse(format!("invalid calibration seed '{seed}'"))),
            Some(("file", path)) if !path.is_empty() => Ok(CalibrationSource::File(path.into())),
            _ => Err(Error::Parse(format!("unknown calibration source '{s}'"))),
        }
    }
}

/// π-pulse patterns that isolate one σ_z product term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToggleScheme {
    pub n: usize,
    pub target_support: u32,
    pub patterns: Vec<u32>,
}

/// All masks with even parity on the target's support, ascending.
pub fn toggle_scheme(target: &PauliWord) -> Result<ToggleScheme> {
    if target.is_identity() {
        return Err(Error::IdentityTarget);
    }
    let n = target.len();
    let support = target.support();
    let patterns = (0..1u32 << n).filter(|m| (m & support).count_ones() % 2 == 0).collect();
    Ok(ToggleScheme { n, target_support: support, patterns })
}

fn rotation(p: Pauli) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = Complex64::new(s, 0.0);
    match p {
        Pauli::I | Pauli::Z => ComplexMatrix::identity(2),
        // Ry(−π/2) = cos(π/4) I + i sin(π/4) Y
        Pauli::X => ComplexMatrix::from_rows(&[&[c, c], &[-c, c]]),
        // Rx(+π/2) = cos(π/4) I − i sin(π/4) X
        Pauli::Y => ComplexMatrix::from_rows(&[&[c, -I * s], &[-I * s, c]]),
    }
}

/// Single-qubit pre-measurement rotations for `target`, as one unitary.
pub fn basis_rotation(target: &PauliWord) -> ComplexMatrix {
    target.factors().into_iter().fold(ComplexMatrix::identity(1), |acc, p| acc.kron(&rotation(p)))
}

/// Computational-basis populations after the basis rotation.
fn rotated_populations(rho: &ComplexMatrix, target: &PauliWord) -> Result<Vec<f64>> {
    let d = 1usize << target.len();
    if rho.rows() != d || rho.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} state for a {}-qubit readout",
            rho.rows(),
            rho.cols(),
            target.len()
        )));
    }
    let u = basis_rotation(target);
    let rotated = &(&u * rho) * &u.dagger();
    Ok((0..d).map(|i| rotated[(i, i)].re.max(0.0)).collect())
}

/// Exact expectation of `M` for each toggle pattern, in scheme order.
pub fn pattern_expectations(rho: &ComplexMatrix, target: &PauliWord, cal: &ReadoutCalibration) -> Result<Vec<f64>> {
    let scheme = toggle_scheme(target)?;
    let pops = rotated_populations(rho, target)?;
    Ok(scheme
        .patterns
        .iter()
        .map(|&g| pops.iter().enumerate().map(|(i, p)| p * cal.alpha[i ^ g as usize]).sum())
        .collect())
}

/// Extracts `tr[ρ·target]` from joint readouts over the toggle scheme.
pub fn measure_pauli(rho: &ComplexMatrix, target: &PauliWord, cal: &ReadoutCalibration, mode: Mode) -> Result<Reading> {
    if cal.n() != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit calibration for a {}-qubit target",
            cal.n(),
            target.len()
        )));
    }
    let scheme = toggle_scheme(target)?;
    let beta_target = cal.beta[scheme.target_support as usize];
    if beta_target.abs() <= MIN_BETA {
        return Err(Error::Uncalibratable(target.unsigned().to_string(), beta_target));
    }
    let pops = rotated_populations(rho, target)?;
    let total: f64 = pops.iter().sum();
    let count = scheme.patterns.len() as f64;

    let (mean, variance) = match mode {
        Mode::Exact => {
            let sum: f64 = scheme
                .patterns
                .iter()
                .map(|&g| pops.iter().enumerate().map(|(i, p)| p * cal.alpha[i ^ g as usize]).sum::<f64>())
                .sum();
            (sum / (count * total), 0.0)
        }
        Mode::Shots { shots, seed } => {
            if shots == 0 {
                return Err(Error::InvalidArgument("shot count must be positive".into()));
            }
            let mut cumulative = Vec::with_capacity(pops.len());
            let mut acc = 0.0;
            for p in &pops {
                acc += p / total;
                cumulative.push(acc);
            }
            let (mut sum, mut var_sum) = (0.0, 0.0);
            for (k, &g) in scheme.patterns.iter().enumerate() {
                let mut rng = substream(seed, &[k as u64]);
                let mut counts = vec![0u64; pops.len()];
                for _ in 0..shots {
                    let u: f64 = rng.random();
                    let idx = cumulative.partition_point(|&c| c <= u).min(pops.len() - 1);
                    counts[idx] += 1;
                }
                let r = shots as f64;
                let mut m1 = 0.0;
                let mut m2 = 0.0;
                for (i, &c) in counts.iter().enumerate() {
                    let level = cal.alpha[i ^ g as usize];
                    m1 += c as f64 * level;
                    m2 += c as f64 * level * level;
                }
                let mean = m1 / r;
                let sample_var = if shots > 1 { (m2 - r * mean * mean).max(0.0) / (r - 1.0) } else { 0.0 };
                sum += mean;
                var_sum += sample_var / r;
            }
            (sum / count, var_sum / (count * count))
        }
    };

    let value = target.sign() * (mean - cal.beta[0]) / beta_target;
    Ok(Reading { value, variance: variance / (beta_target * beta_target) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{StateVector, ARITH_TOL, ONE};
    use crate::pauli::enumerate_words;
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> PauliWord {
        s.parse().unwrap()
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let d = 1 << n;
        let g = ComplexMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let m = &g * &g.dagger();
        let tr = m.trace().unwrap();
        m.scale(ONE / tr)
    }

    fn sign_matrix_oracle(alpha: &[f64]) -> Vec<f64> {
        let len = alpha.len();
        (0..len)
            .map(|s| {
                alpha
                    .iter()
                    .enumerate()
                    .map(|(i, a)| if (i & s).count_ones() % 2 == 0 { *a } else { -*a })
                    .sum::<f64>()
                    / len as f64
            })
            .collect()
    }

    #[test]
    fn walsh_examples() {
        let beta = walsh_beta(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(beta, sign_matrix_oracle(&[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(beta, vec![0.25; 4]);

        let beta = walsh_beta(&[1.0; 8]).unwrap();
        assert_eq!(beta, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

        let (a00, a01, a10, a11) = (0.9, 0.4, -0.3, 0.15);
        let beta = walsh_beta(&[a00, a01, a10, a11]).unwrap();
        assert!((beta[3] - (a00 - a01 - a10 + a11) / 4.0).abs() < ARITH_TOL);

        assert!(matches!(walsh_beta(&[1.0, 2.0, 3.0]), Err(Error::NotPowerOfTwo(3))));
        assert!(matches!(walsh_beta(&[]), Err(Error::NotPowerOfTwo(0))));
    }

    #[test]
    fn walsh_involution_and_oracle() {
        let mut rng = substream(3, &[]);
        for len in [2usize, 4, 8, 16, 64] {
            let alpha: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let beta = walsh_beta(&alpha).unwrap();
            let oracle = sign_matrix_oracle(&alpha);
            assert!(beta.iter().zip(&oracle).all(|(a, b)| (a - b).abs() < ARITH_TOL));
            let back = walsh_alpha(&beta).unwrap();
            assert!(back.iter().zip(&alpha).all(|(a, b)| (a - b).abs() < ARITH_TOL));
        }
    }

    #[test]
    fn beta_reproduces_measurement_operator() {
        // M = Σ α_i |i⟩⟨i| = Σ_s β_s Z^s as dense matrices.
        let cal = ReadoutCalibration::randomized(3, 9).unwrap();
        let mut m = ComplexMatrix::zeros(8, 8);
        for s in 0..8u32 {
            let z = PauliWord::from_masks(3, 0, s).unwrap().dense();
            m = &m + &z.scale(Complex64::new(cal.beta()[s as usize], 0.0));
        }
        let alpha: Vec<Complex64> = cal.alpha().iter().map(|&a| Complex64::new(a, 0.0)).collect();
        assert!(m.approx_eq(&ComplexMatrix::diag(&alpha), ARITH_TOL));
    }

    #[test]
    fn toggle_examples() {
        assert_eq!(toggle_scheme(&w("YX")).unwrap().patterns, vec![0b00, 0b11]);
        assert_eq!(toggle_scheme(&w("XYZ")).unwrap().patterns, vec![0b000, 0b011, 0b101, 0b110]);
        let mut partial = toggle_scheme(&w("ZIX")).unwrap().patterns;
        partial.sort_unstable();
        assert_eq!(partial, vec![0b000, 0b010, 0b101, 0b111]);
        assert!(matches!(toggle_scheme(&w("II")), Err(Error::IdentityTarget)));
    }

    #[test]
    fn toggle_patterns_form_even_parity_group() {
        for n in 1..=4 {
            for target in enumerate_words(n).unwrap().into_iter().filter(|t| !t.is_identity()) {
                let scheme = toggle_scheme(&target).unwrap();
                assert_eq!(scheme.patterns.len(), 1 << (n - 1));
                for &a in &scheme.patterns {
                    assert_eq!((a & scheme.target_support).count_ones() % 2, 0);
                    for &b in &scheme.patterns {
                        assert!(scheme.patterns.contains(&(a ^ b)));
                    }
                }
            }
        }
    }

    #[test]
    fn rotations_map_z_onto_target() {
        let z = Pauli::Z.matrix();
        for p in Pauli::ALL.into_iter().filter(|p| *p != Pauli::I) {
            let r = rotation(p);
            assert!(r.is_unitary(ARITH_TOL));
            let mapped = &(&r.dagger() * &z) * &r;
            assert!(mapped.approx_eq(&p.matrix(), ARITH_TOL), "{p:?}");
        }
    }

    #[test]
    fn basis_state_zz() {
        let rho = StateVector::basis(4, 3).density();
        for seed in 0..3 {
            let cal = ReadoutCalibration::randomized(2, seed).unwrap();
            let r = measure_pauli(&rho, &w("ZZ"), &cal, Mode::Exact).unwrap();
            assert!((r.value - 1.0).abs() < 1e-9);
            assert_eq!(r.variance, 0.0);
        }
    }

    #[test]
    fn two_qubit_worked_example() {
        // Known ⟨Y⊗X⟩: |ψ⟩ = |+i⟩ ⊗ (cos t|+⟩ + sin t|−⟩).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let t: f64 = 0.3;
        let first = StateVector::new(vec![Complex64::new(s, 0.0), Complex64::new(0.0, s)]);
        let plus = [s, s];
        let minus = [s, -s];
        let second = StateVector::new(
            (0..2).map(|i| Complex64::new(t.cos() * plus[i] + t.sin() * minus[i], 0.0)).collect(),
        );
        let rho = first.kron(&second).density();
        let target = w("YX");
        let dense = target.dense().trace_product(&rho).unwrap().re;
        assert!((dense - (2.0 * t).cos()).abs() < 1e-12);

        let cal = ReadoutCalibration::new(vec![1.0, 0.62, 0.55, 0.2]).unwrap();
        let settings = pattern_expectations(&rho, &target, &cal).unwrap();
        assert_eq!(settings.len(), 2);
        // Sum of the two settings = 2(β00 + β11⟨YX⟩).
        let beta = cal.beta();
        let extracted = ((settings[0] + settings[1]) / 2.0 - beta[0]) / beta[3];
        assert!((extracted - dense).abs() < 1e-9);
        let r = measure_pauli(&rho, &target, &cal, Mode::Exact).unwrap();
        assert!((r.value - dense).abs() < 1e-9);
    }

    #[test]
    fn extraction_is_exact_for_random_states() {
        let mut rng = substream(21, &[]);
        for n in 1..=3 {
            for c in 0..3 {
                let cal = ReadoutCalibration::randomized(n, 100 + c).unwrap();
                for _ in 0..5 {
                    let rho = random_state(n, &mut rng);
                    for target in enumerate_words(n).unwrap().into_iter().filter(|t| !t.is_identity()) {
                        let dense = target.dense().trace_product(&rho).unwrap().re;
                        let r = measure_pauli(&rho, &target, &cal, Mode::Exact).unwrap();
                        assert!((r.value - dense).abs() < 1e-9, "{target}");
                        let neg = measure_pauli(&rho, &target.negated(), &cal, Mode::Exact).unwrap();
                        assert!((neg.value + dense).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn default_calibration_has_no_vanishing_terms() {
        for n in 1..=6 {
            let cal = ReadoutCalibration::default_for(n).unwrap();
            assert!(cal.beta()[1..].iter().all(|b| (b.abs() - 2.0 / (1 << n) as f64).abs() < 1e-12), "n = {n}");
        }
    }

    #[test]
    fn uncalibratable_term_is_rejected() {
        // Linear response in the number of excitations: β_ZZ vanishes.
        let cal = ReadoutCalibration::new(vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(cal.beta()[3].abs() < MIN_BETA);
        let rho = StateVector::basis(4, 0).density();
        assert!(matches!(measure_pauli(&rho, &w("ZZ"), &cal, Mode::Exact), Err(Error::Uncalibratable(_, _))));
        assert!(measure_pauli(&rho, &w("ZI"), &cal, Mode::Exact).is_ok());
    }

    #[test]
    fn shot_variance_matches_spread() {
        let mut rng = substream(4, &[]);
        let rho = random_state(2, &mut rng);
        let cal = ReadoutCalibration::default_for(2).unwrap();
        let target = w("XY");
        let reps = 200;
        let readings: Vec<Reading> = (0..reps)
            .map(|k| measure_pauli(&rho, &target, &cal, Mode::Shots { shots: 1000, seed: k }).unwrap())
            .collect();
        let mean = readings.iter().map(|r| r.value).sum::<f64>() / reps as f64;
        let spread = readings.iter().map(|r| (r.value - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let reported = readings.iter().map(|r| r.variance).sum::<f64>() / reps as f64;
        let ratio = spread / reported;
        assert!((0.5..2.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn shots_converge_to_exact() {
        let mut rng = substream(5, &[]);
        let cal = ReadoutCalibration::default_for(3).unwrap();
        let target = w("YZX");
        let mut total_err = 0.0;
        let trials = 50;
        for k in 0..trials {
            let rho = random_state(3, &mut rng);
            let exact = measure_pauli(&rho, &target, &cal, Mode::Exact).unwrap().value;
            let shot = measure_pauli(&rho, &target, &cal, Mode::Shots { shots: 100_000, seed: k }).unwrap().value;
            total_err += (shot - exact).abs();
        }
        assert!(total_err / (trials as f64) < 0.01);
    }

    #[test]
    fn calibration_parsing() {
        let a = ReadoutCalibration::parse("[1.0, 0.5, 0.25, -1]").unwrap();
        let b = ReadoutCalibration::parse("1.0 0.5\n0.25,-1").unwrap();
        assert_eq!(a, b);
        assert!(ReadoutCalibration::parse("1 2 3").is_err());
        assert!(ReadoutCalibration::parse("1 x").is_err());
        assert_eq!("randomized:5".parse::<CalibrationSource>().unwrap(), CalibrationSource::Randomized(5));
        assert_eq!("default".parse::<CalibrationSource>().unwrap(), CalibrationSource::Default);
        assert!("file:".parse::<CalibrationSource>().is_err());
        assert!(CalibrationSource::Default.build(2).unwrap().n() == 2);
    }
}
