//! Kraus-map channels, the gate and noise libraries, and Choi matrices.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ARITH_TOL, I, ONE, STRUCTURAL_TOL, ZERO};
use crate::pauli::{enumerate_words, Pauli, PauliWord};

/// Kraus operators with Frobenius norm below this are dropped on construction.
const KRAUS_PRUNE: f64 = 1e-15;

/// Completely positive trace-preserving map on `n` qubits.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    n: usize,
    kraus: Vec<ComplexMatrix>,
}

impl QuantumChannel {
    /// Validates shapes and the completeness relation `Σ K†K = I`.
    pub fn new(n: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if n == 0 || n > 6 {
            return Err(Error::QubitCount(n));
        }
        let d = 1usize << n;
        if let Some(k) = kraus.iter().find(|k| k.rows() != d || k.cols() != d) {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operator {}x{} on {n} qubits",
                k.rows(),
                k.cols()
            )));
        }
        let kraus: Vec<_> = kraus.into_iter().filter(|k| k.frobenius_norm() > KRAUS_PRUNE).collect();
        if kraus.is_empty() {
            return Err(Error::InvalidArgument("channel needs at least one Kraus operator".into()));
        }
        let channel = Self { n, kraus };
        let err = channel.completeness_error();
        if err > STRUCTURAL_TOL {
            return Err(Error::InvalidArgument(format!("Kraus set is not trace preserving (deviation {err:.3e})")));
        }
        Ok(channel)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, vec![ComplexMatrix::identity(1 << n)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn completeness_error(&self) -> f64 {
        let d = self.dim();
        let mut sum = ComplexMatrix::zeros(d, d);
        for k in &self.kraus {
            sum = &sum + &(&k.dagger() * k);
        }
        sum.max_abs_diff(&ComplexMatrix::identity(d))
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.dim();
        if rho.rows() != d || rho.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} state through a {}-qubit channel",
                rho.rows(),
                rho.cols(),
                self.n
            )));
        }
        let mut out = ComplexMatrix::zeros(d, d);
        for k in &self.kraus {
            let term = &(k * rho) * &k.dagger();
            out = &out + &term;
        }
        Ok(out)
    }
}

/// Single-Kraus channel for a unitary.
pub fn unitary_channel(u: &ComplexMatrix) -> Result<QuantumChannel> {
    let err = u.unitarity_error();
    if err > STRUCTURAL_TOL {
        return Err(Error::NotUnitary(err));
    }
    let d = u.rows();
    if !d.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(d));
    }
    QuantumChannel::new(d.trailing_zeros() as usize, vec![u.clone()])
}

/// `second ∘ first`: Kraus set of all products `second_j · first_i`.
pub fn compose(first: &QuantumChannel, second: &QuantumChannel) -> Result<QuantumChannel> {
    if first.n != second.n {
        return Err(Error::DimensionMismatch(format!(
            "composing {}-qubit and {}-qubit channels",
            first.n, second.n
        )));
    }
    let mut kraus = Vec::with_capacity(first.kraus.len() * second.kraus.len());
    for b in &second.kraus {
        for a in &first.kraus {
            kraus.push(b * a);
        }
    }
    QuantumChannel::new(first.n, kraus)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Cnot,
    Cphase,
    Toffoli,
    CphaseChain,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Cnot, Gate::Cphase, Gate::Toffoli, Gate::CphaseChain];

    pub fn name(self) -> &'static str {
        match self {
            Gate::Cnot => "cnot",
            Gate::Cphase => "cphase",
            Gate::Toffoli => "toffoli",
            Gate::CphaseChain => "cphase_chain",
        }
    }

    pub fn qubits(self) -> usize {
        match self {
            Gate::Cnot | Gate::Cphase => 2,
            Gate::Toffoli | Gate::CphaseChain => 3,
        }
    }

    pub fn is_clifford(self) -> bool {
        !matches!(self, Gate::Toffoli)
    }

    /// Unitary with qubit 1 as the most significant bit.
    pub fn unitary(self) -> ComplexMatrix {
        match self {
            // control qubit 1, target qubit 2
            Gate::Cnot => permutation(&[0, 1, 3, 2]),
            Gate::Cphase => ComplexMatrix::diag(&[ONE, ONE, ONE, -ONE]),
            // controls 1 and 2, target 3
            Gate::Toffoli => permutation(&[0, 1, 2, 3, 4, 5, 7, 6]),
            Gate::CphaseChain => {
                let cz = Gate::Cphase.unitary();
                let first = cz.kron(&ComplexMatrix::identity(2));
                let second = ComplexMatrix::identity(2).kron(&cz);
                &second * &first
            }
        }
    }

    pub fn channel(self) -> QuantumChannel {
        unitary_channel(&self.unitary()).expect("library gates are unitary")
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Gate::ALL
            .into_iter()
            .find(|g| g.name() == s.trim())
            .ok_or_else(|| Error::UnknownGate(s.to_string()))
    }
}

pub fn gate_library(name: &str) -> Result<QuantumChannel> {
    Ok(name.parse::<Gate>()?.channel())
}

fn permutation(targets: &[usize]) -> ComplexMatrix {
    let d = targets.len();
    let mut m = ComplexMatrix::zeros(d, d);
    for (col, &row) in targets.iter().enumerate() {
        m[(row, col)] = ONE;
    }
    m
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }

    fn symbol(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

/// One elementary noise process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum NoiseSpec {
    /// `ρ → (1−p)ρ + p·I/2^n` on the whole register.
    Depolarizing(f64),
    /// Independent amplitude damping with decay probability γ on every qubit.
    AmplitudeDamping(f64),
    /// `exp(−iθσ/2)` on one qubit (1-based) or on every qubit.
    Overrotation { axis: Axis, theta: f64, qubit: Option<usize> },
}

impl NoiseSpec {
    pub fn channel(&self, n: usize) -> Result<QuantumChannel> {
        match *self {
            NoiseSpec::Depolarizing(p) => depolarizing(p, n),
            NoiseSpec::AmplitudeDamping(g) => amplitude_damping(g, n),
            NoiseSpec::Overrotation { axis, theta, qubit } => overrotation(axis, theta, qubit, n),
        }
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::Depolarizing(p) => write!(f, "depolarizing:{p}"),
            NoiseSpec::AmplitudeDamping(g) => write!(f, "amp_damp:{g}"),
            NoiseSpec::Overrotation { axis, theta, qubit: None } => write!(f, "overrot:{}:{theta}", axis.symbol()),
            NoiseSpec::Overrotation { axis, theta, qubit: Some(q) } => {
                write!(f, "overrot:{}:{theta}:{q}", axis.symbol())
            }
        }
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let number = |text: &str| {
            text.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse(format!("invalid number '{text}' in noise descriptor '{s}'")))
        };
        match parts.as_slice() {
            ["depolarizing", p] => {
                let p = number(p)?;
                check_probability("p", p)?;
                Ok(NoiseSpec::Depolarizing(p))
            }
            ["amp_damp", g] => {
                let gamma = number(g)?;
                check_probability("gamma", gamma)?;
                Ok(NoiseSpec::AmplitudeDamping(gamma))
            }
            ["overrot", axis, theta, rest @ ..] if rest.len() <= 1 => {
                let axis = match *axis {
                    "x" => Axis::X,
                    "y" => Axis::Y,
                    "z" => Axis::Z,
                    other => return Err(Error::Parse(format!("unknown rotation axis '{other}'"))),
                };
                let qubit = match rest.first() {
                    Some(q) => Some(
                        q.parse::<usize>()
                            .ok()
                            .filter(|&q| q >= 1)
                            .ok_or_else(|| Error::Parse(format!("invalid qubit '{q}' in '{s}'")))?,
                    ),
                    None => None,
                };
                Ok(NoiseSpec::Overrotation { axis, theta: number(theta)?, qubit })
            }
            _ => Err(Error::Parse(format!("unrecognized noise descriptor '{s}'"))),
        }
    }
}

/// A `+`-separated sequence of noise processes, applied left to right.
/// The empty model renders as `none`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel(pub Vec<NoiseSpec>);

impl NoiseModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_none(&self) -> bool {
        self.0.is_empty()
    }

    pub fn channel(&self, n: usize) -> Result<QuantumChannel> {
        let mut acc = QuantumChannel::identity(n)?;
        for spec in &self.0 {
            acc = compose(&acc, &spec.channel(n)?)?;
        }
        Ok(acc)
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("none");
        }
        for (i, spec) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{spec}")?;
        }
        Ok(())
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(Self::none());
        }
        s.split('+').map(str::parse).collect::<Result<Vec<_>>>().map(NoiseModel)
    }
}

/// Where the noise sits relative to the ideal gate.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoisePlacement {
    Before,
    #[default]
    After,
}

/// The implemented process: the ideal gate with the noise model attached.
pub fn noisy_gate(gate: Gate, noise: &NoiseModel, placement: NoisePlacement) -> Result<QuantumChannel> {
    let ideal = gate.channel();
    if noise.is_none() {
        return Ok(ideal);
    }
    let noise = noise.channel(gate.qubits())?;
    match placement {
        NoisePlacement::After => compose(&ideal, &noise),
        NoisePlacement::Before => compose(&noise, &ideal),
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange { name, value })
    }
}

pub fn depolarizing(p: f64, n: usize) -> Result<QuantumChannel> {
    check_probability("p", p)?;
    let words = enumerate_words(n)?;
    let total = words.len() as f64;
    let kraus = words
        .iter()
        .map(|w| {
            let weight = if w.is_identity() { 1.0 - p + p / total } else { p / total };
            w.dense().scale(Complex64::new(weight.sqrt(), 0.0))
        })
        .collect();
    QuantumChannel::new(n, kraus)
}

pub fn amplitude_damping(gamma: f64, n: usize) -> Result<QuantumChannel> {
    check_probability("gamma", gamma)?;
    let k0 = ComplexMatrix::diag(&[ONE, Complex64::new((1.0 - gamma).sqrt(), 0.0)]);
    let mut k1 = ComplexMatrix::zeros(2, 2);
    k1[(0, 1)] = Complex64::new(gamma.sqrt(), 0.0);
    let single = [k0, k1];
    let mut kraus = vec![ComplexMatrix::identity(1)];
    for _ in 0..n {
        kraus = kraus.iter().flat_map(|k| single.iter().map(move |s| k.kron(s))).collect();
    }
    QuantumChannel::new(n, kraus)
}

pub fn overrotation(axis: Axis, theta: f64, qubit: Option<usize>, n: usize) -> Result<QuantumChannel> {
    if let Some(q) = qubit {
        if q == 0 || q > n {
            return Err(Error::ParameterOutOfRange { name: "qubit", value: q as f64 });
        }
    }
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let rot = &ComplexMatrix::identity(2).scale(Complex64::new(c, 0.0)) + &axis.pauli().matrix().scale(-I * s);
    let mut u = ComplexMatrix::identity(1);
    for k in 1..=n {
        let factor = if qubit.map_or(true, |q| q == k) { rot.clone() } else { ComplexMatrix::identity(2) };
        u = u.kron(&factor);
    }
    unitary_channel(&u)
}

/// Trace-one Choi matrix `(I ⊗ E)(|φ⟩⟨φ|)` with `|φ⟩ = Σ|i⟩|i⟩/√d`.
/// The first `n` qubits are the untouched copy, the last `n` carry E's output.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    n: usize,
    matrix: ComplexMatrix,
}

impl ChoiMatrix {
    /// Wraps a matrix after checking the Choi invariants.
    pub fn from_matrix(n: usize, matrix: ComplexMatrix) -> Result<Self> {
        let choi = Self::from_matrix_unchecked(n, matrix)?;
        choi.validate()?;
        Ok(choi)
    }

    pub(crate) fn from_matrix_unchecked(n: usize, matrix: ComplexMatrix) -> Result<Self> {
        let dd = 1usize << (2 * n);
        if matrix.rows() != dd || matrix.cols() != dd {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not a {n}-qubit Choi matrix",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self { n, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// State-space dimension `d = 2^n`.
    pub fn d(&self) -> usize {
        1 << self.n
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `tr[ρ_E · P]` for a 2n-qubit word, real part.
    pub fn expectation(&self, word: &PauliWord) -> Result<f64> {
        if word.len() != 2 * self.n {
            return Err(Error::LengthMismatch(word.len(), 2 * self.n));
        }
        let value = word.expectation(&self.matrix)?;
        if value.im.abs() > STRUCTURAL_TOL {
            return Err(Error::ImaginaryResidue(value.im.abs()));
        }
        Ok(value.re)
    }

    /// Reduced state on the copy register; equals `I/d` for trace-preserving maps.
    pub fn copy_marginal(&self) -> Result<ComplexMatrix> {
        self.matrix.partial_trace(&[0], &[self.d(), self.d()])
    }

    /// Checks Hermiticity, unit trace, positivity and trace preservation.
    pub fn validate(&self) -> Result<()> {
        let herm = self.matrix.hermiticity_error();
        if herm > STRUCTURAL_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = self.matrix.trace()?;
        if (tr - ONE).norm() > STRUCTURAL_TOL {
            return Err(Error::InvalidArgument(format!("Choi matrix trace {tr}")));
        }
        if !self.matrix.is_psd(STRUCTURAL_TOL) {
            return Err(Error::InvalidArgument("Choi matrix is not positive semidefinite".into()));
        }
        let d = self.d();
        let expected = ComplexMatrix::identity(d).scale(Complex64::new(1.0 / d as f64, 0.0));
        let marginal = self.copy_marginal()?;
        let err = marginal.max_abs_diff(&expected);
        if err > STRUCTURAL_TOL {
            return Err(Error::InvalidArgument(format!("Choi marginal deviates from I/d by {err:.3e}")));
        }
        Ok(())
    }
}

pub fn choi(ch: &QuantumChannel) -> ChoiMatrix {
    let d = ch.dim();
    let dd = d * d;
    let norm = 1.0 / d as f64;
    // Entry ((i,a),(j,b)) = (1/d) Σ_k K[a][i] · conj(K[b][j]).
    let mut m = ComplexMatrix::zeros(dd, dd);
    for k in ch.kraus() {
        for i in 0..d {
            for a in 0..d {
                let left = k[(a, i)];
                if left == ZERO {
                    continue;
                }
                for j in 0..d {
                    for b in 0..d {
                        let right = k[(b, j)];
                        if right != ZERO {
                            m[(i * d + a, j * d + b)] += left * right.conj() * norm;
                        }
                    }
                }
            }
        }
    }
    ChoiMatrix { n: ch.n(), matrix: m }
}

/// Process fidelity `Re tr[a·b]`; `a` is expected to be a pure (unitary) Choi matrix.
pub fn choi_overlap(a: &ChoiMatrix, b: &ChoiMatrix) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch(format!("{}-qubit vs {}-qubit Choi matrices", a.n, b.n)));
    }
    let value = a.matrix.trace_product(&b.matrix)?;
    if value.im.abs() > STRUCTURAL_TOL {
        return Err(Error::ImaginaryResidue(value.im.abs()));
    }
    Ok(value.re)
}

/// `F̄ = (dF + 1)/(d + 1)`.
pub fn average_fidelity(process_fidelity: f64, d: usize) -> f64 {
    let d = d as f64;
    (d * process_fidelity + 1.0) / (d + 1.0)
}

/// Whether two channels act identically on `rho` (used by tests and examples).
pub fn agree_on(a: &QuantumChannel, b: &QuantumChannel, rho: &ComplexMatrix) -> Result<bool> {
    Ok(a.apply(rho)?.approx_eq(&b.apply(rho)?, ARITH_TOL))
}
