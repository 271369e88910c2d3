//! Signed n-qubit Pauli words in bit-packed (x, z) form.
//!
//! Qubit 1 is the leftmost factor and maps to the most significant bit of
//! both masks, so the masks line up with computational-basis indices.
//! A `Y` factor sets both bits: `Y = i·X·Z`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, StateVector, I, ONE, ZERO};

/// Longest word the bit masks are sized for (the doubled space of a 6-qubit gate).
pub const MAX_WORD_LEN: usize = 12;
/// Largest qubit count accepted by [`enumerate_words`].
pub const MAX_ENUMERATE_QUBITS: usize = 6;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// Base-4 digit: I=0, X=1, Y=2, Z=3.
    pub fn digit(self) -> usize {
        self as usize
    }

    pub fn from_digit(d: usize) -> Option<Pauli> {
        Self::ALL.get(d).copied()
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => ComplexMatrix::identity(2),
            Pauli::X => ComplexMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]),
            Pauli::Y => ComplexMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]]),
            Pauli::Z => ComplexMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]]),
        }
    }

    /// Eigenvectors ordered (+1, −1). The identity gets the computational
    /// basis with both eigenvalues +1.
    fn eigenpairs(self) -> [(f64, [Complex64; 2]); 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = |x: f64| Complex64::new(x, 0.0);
        match self {
            Pauli::I => [(1.0, [ONE, ZERO]), (1.0, [ZERO, ONE])],
            Pauli::Z => [(1.0, [ONE, ZERO]), (-1.0, [ZERO, ONE])],
            Pauli::X => [(1.0, [r(s), r(s)]), (-1.0, [r(s), r(-s)])],
            Pauli::Y => [(1.0, [r(s), Complex64::new(0.0, s)]), (-1.0, [r(s), Complex64::new(0.0, -s)])],
        }
    }
}

/// Scalar phases arising in Pauli products.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    fn from_power(k: u32) -> Phase {
        match k % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            Phase::PlusOne => ONE,
            Phase::PlusI => I,
            Phase::MinusOne => -ONE,
            Phase::MinusI => -I,
        }
    }

    pub fn is_real(self) -> bool {
        matches!(self, Phase::PlusOne | Phase::MinusOne)
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Hash)]
pub struct PauliWord {
    len: u8,
    x: u32,
    z: u32,
    negative: bool,
}

impl PauliWord {
    pub fn new(factors: &[Pauli], negative: bool) -> Result<Self> {
        if factors.is_empty() || factors.len() > MAX_WORD_LEN {
            return Err(Error::QubitCount(factors.len()));
        }
        let n = factors.len();
        let (mut x, mut z) = (0u32, 0u32);
        for (k, p) in factors.iter().enumerate() {
            let bit = 1u32 << (n - 1 - k);
            let (px, pz) = p.bits();
            if px {
                x |= bit;
            }
            if pz {
                z |= bit;
            }
        }
        Ok(Self { len: n as u8, x, z, negative })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(&vec![Pauli::I; n], false)
    }

    /// Builds a word from masks where bit `n-1-k` addresses qubit `k`.
    pub fn from_masks(n: usize, x: u32, z: u32) -> Result<Self> {
        if n == 0 || n > MAX_WORD_LEN || (x | z) >> n != 0 {
            return Err(Error::QubitCount(n));
        }
        Ok(Self { len: n as u8, x, z, negative: false })
    }

    /// Word at position `index` of the base-4 ordering (qubit 1 most significant).
    pub fn from_index(n: usize, index: usize) -> Result<Self> {
        if n == 0 || n > MAX_WORD_LEN || index >= 1usize << (2 * n) {
            return Err(Error::QubitCount(n));
        }
        let mut factors = vec![Pauli::I; n];
        let mut rem = index;
        for k in (0..n).rev() {
            factors[k] = Pauli::from_digit(rem % 4).expect("digit < 4");
            rem /= 4;
        }
        Self::new(&factors, false)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn x_mask(&self) -> u32 {
        self.x
    }

    pub fn z_mask(&self) -> u32 {
        self.z
    }

    /// Mask of non-identity positions.
    pub fn support(&self) -> u32 {
        self.x | self.z
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }

    pub fn with_sign(self, negative: bool) -> Self {
        Self { negative, ..self }
    }

    pub fn negated(self) -> Self {
        Self { negative: !self.negative, ..self }
    }

    pub fn unsigned(self) -> Self {
        self.with_sign(false)
    }

    /// Ignores the sign.
    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    pub fn factor(&self, k: usize) -> Pauli {
        let bit = 1u32 << (self.len() - 1 - k);
        Pauli::from_bits(self.x & bit != 0, self.z & bit != 0)
    }

    pub fn factors(&self) -> Vec<Pauli> {
        (0..self.len()).map(|k| self.factor(k)).collect()
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Position in the base-4 ordering, ignoring the sign.
    pub fn index(&self) -> usize {
        self.factors().iter().fold(0usize, |acc, p| acc * 4 + p.digit())
    }

    /// Splits into the first `head` factors and the remainder. The sign stays
    /// on the head.
    pub fn split(&self, head: usize) -> Result<(PauliWord, PauliWord)> {
        let n = self.len();
        if head == 0 || head >= n {
            return Err(Error::QubitCount(head));
        }
        let tail = n - head;
        let tail_mask = (1u32 << tail) - 1;
        let first = PauliWord { len: head as u8, x: self.x >> tail, z: self.z >> tail, negative: self.negative };
        let second = PauliWord { len: tail as u8, x: self.x & tail_mask, z: self.z & tail_mask, negative: false };
        Ok((first, second))
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &PauliWord) -> Result<PauliWord> {
        let n = self.len() + other.len();
        if n > MAX_WORD_LEN {
            return Err(Error::QubitCount(n));
        }
        let shift = other.len();
        Ok(PauliWord {
            len: n as u8,
            x: (self.x << shift) | other.x,
            z: (self.z << shift) | other.z,
            negative: self.negative != other.negative,
        })
    }

    pub fn commutes_with(&self, other: &PauliWord) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Factorwise product `self · other`. Real phases are folded into the
    /// returned word's sign; the residual phase is `+1` or `+i`, so that
    /// `dense(self)·dense(other) = phase · dense(word)`.
    pub fn product(&self, other: &PauliWord) -> Result<(PauliWord, Phase)> {
        if self.len != other.len {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // X^a Z^b · X^c Z^d = (-1)^{b·c} X^{a⊕c} Z^{b⊕d}, with Y = i X Z.
        let y1 = (self.x & self.z).count_ones();
        let y2 = (other.x & other.z).count_ones();
        let y3 = (x & z).count_ones();
        let swaps = (self.z & other.x).count_ones();
        let power = (y1 + y2 + 2 * swaps + 4 * MAX_WORD_LEN as u32 - y3) % 4;
        let mut negative = self.negative != other.negative;
        if power >= 2 {
            negative = !negative;
        }
        let word = PauliWord { len: self.len, x, z, negative };
        Ok((word, Phase::from_power(power % 2)))
    }

    /// Product that must be a signed Pauli word (real phase).
    pub fn mul_signed(&self, other: &PauliWord) -> Result<PauliWord> {
        let (word, phase) = self.product(other)?;
        if !phase.is_real() {
            return Err(Error::ImaginaryPhase);
        }
        Ok(word)
    }

    /// Coefficient and row of `P|col⟩`.
    pub fn apply_basis(&self, col: usize) -> (usize, Complex64) {
        let col32 = col as u32;
        let row = (col32 ^ self.x) as usize;
        let mut coeff = match self.y_count() % 4 {
            0 => ONE,
            1 => I,
            2 => -ONE,
            _ => -I,
        };
        if (self.z & col32).count_ones() % 2 == 1 {
            coeff = -coeff;
        }
        if self.negative {
            coeff = -coeff;
        }
        (row, coeff)
    }

    pub fn dense(&self) -> ComplexMatrix {
        let d = 1usize << self.len();
        let mut m = ComplexMatrix::zeros(d, d);
        for col in 0..d {
            let (row, coeff) = self.apply_basis(col);
            m[(row, col)] = coeff;
        }
        m
    }

    /// `tr[self · rho]` using the one-nonzero-per-column structure.
    pub fn expectation(&self, rho: &ComplexMatrix) -> Result<Complex64> {
        let d = 1usize << self.len();
        if rho.rows() != d || rho.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit word against a {}x{} matrix",
                self.len(),
                rho.rows(),
                rho.cols()
            )));
        }
        // tr[P ρ] = Σ_c Σ_r P[c][r] ρ[r][c]; P[row(r)][r] is the only nonzero in column r.
        let mut acc = ZERO;
        for col in 0..d {
            let (row, coeff) = self.apply_basis(col);
            acc += coeff * rho[(col, row)];
        }
        Ok(acc)
    }

    pub fn eigenbasis(&self) -> PauliEigenbasis {
        let n = self.len();
        let factors = self.factors();
        let dim = 1usize << n;
        let mut vectors = Vec::with_capacity(dim);
        let mut eigenvalues = Vec::with_capacity(dim);
        for j in 0..dim {
            let mut v = StateVector::new(vec![ONE]);
            let mut value = self.sign();
            for (k, p) in factors.iter().enumerate() {
                let which = (j >> (n - 1 - k)) & 1;
                let (lambda, amps) = p.eigenpairs()[which];
                value *= lambda;
                v = v.kron(&StateVector::new(amps.to_vec()));
            }
            vectors.push(v);
            eigenvalues.push(value);
        }
        PauliEigenbasis { word: *self, vectors, eigenvalues }
    }
}

/// All `4^n` unsigned words in base-4 order.
pub fn enumerate_words(n: usize) -> Result<Vec<PauliWord>> {
    if n == 0 || n > MAX_ENUMERATE_QUBITS {
        return Err(Error::QubitCount(n));
    }
    (0..1usize << (2 * n)).map(|i| PauliWord::from_index(n, i)).collect()
}

/// Entrywise conjugation in the computational basis.
pub fn conjugate_state(v: &StateVector) -> StateVector {
    v.conj()
}

/// Product eigenvectors of a Pauli word with their ±1 eigenvalues.
#[derive(Clone, Debug)]
pub struct PauliEigenbasis {
    pub word: PauliWord,
    pub vectors: Vec<StateVector>,
    pub eigenvalues: Vec<f64>,
}

impl PauliEigenbasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `(eigenvalue, conjugated eigenvector)` pairs: the input states of the
    /// reduced measurement `tr[(A⊗B)ρ] = (1/d) Σ a_j tr[B E(|a_j*⟩⟨a_j*|)]`.
    pub fn conjugated_inputs(&self) -> Vec<(f64, StateVector)> {
        self.eigenvalues.iter().zip(&self.vectors).map(|(&a, v)| (a, conjugate_state(v))).collect()
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            write!(f, "-")?;
        }
        for p in self.factors() {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliWord({self})")
    }
}

impl FromStr for PauliWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let factors = body
            .chars()
            .map(|ch| match ch {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::Parse(format!("invalid Pauli symbol '{other}' in '{s}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        PauliWord::new(&factors, negative)
    }
}

impl Serialize for PauliWord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliWord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
