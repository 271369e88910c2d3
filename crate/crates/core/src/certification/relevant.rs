use serde::{Deserialize, Serialize};

use crate::channels::{ChoiMatrix, Gate};
use crate::error::{Error, Result};
use crate::linalg::STRUCTURAL_TOL;
use crate::pauli::PauliWord;

/// Default magnitude below which an ideal expectation counts as zero.
pub const RELEVANCE_TOL: f64 = 1e-9;
/// Expectations between [`RELEVANCE_TOL`] and this are suspicious for ideal gates.
pub const SUSPICIOUS_BELOW: f64 = 1e-6;
const NORMALIZATION_TOL: f64 = 1e-6;

/// A Pauli word with non-zero expectation on the ideal Choi matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelevantOperator {
    /// Position in the base-4 ordering over 2n qubits.
    pub index: usize,
    /// Unsigned 2n-qubit word; the first n factors act on the copy register.
    pub word: PauliWord,
    /// `tr[ρ_ideal · word]`.
    pub ideal_expectation: f64,
    /// Sampling weight `w²/4^n`.
    pub relevance: f64,
}

impl RelevantOperator {
    /// The word carrying the sign of its ideal expectation, as printed in tables.
    pub fn signed_word(&self) -> PauliWord {
        self.word.with_sign(self.ideal_expectation < 0.0)
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_identity()
    }
}

/// The relevant operators of an ideal gate in base-4 order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelevantSet {
    pub n: usize,
    pub operators: Vec<RelevantOperator>,
    pub warnings: Vec<String>,
}

impl RelevantSet {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RelevantOperator> {
        self.operators.iter()
    }

    pub fn d(&self) -> usize {
        1 << self.n
    }

    pub fn relevances(&self) -> Vec<f64> {
        self.operators.iter().map(|op| op.relevance).collect()
    }

    /// Position of an unsigned word in the list.
    pub fn position(&self, word: &PauliWord) -> Option<usize> {
        let index = word.index();
        self.operators.binary_search_by_key(&index, |op| op.index).ok()
    }

    /// Signed words, one per line, in table order.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        for op in &self.operators {
            out.push_str(&op.signed_word().to_string());
            out.push('\n');
        }
        out
    }
}

impl<'a> IntoIterator for &'a RelevantSet {
    type Item = &'a RelevantOperator;
    type IntoIter = std::slice::Iter<'a, RelevantOperator>;

    fn into_iter(self) -> Self::IntoIter {
        self.operators.iter()
    }
}

/// Scans all `4^{2n}` words and keeps those with `|w| > tolerance`.
pub fn enumerate_relevant(ideal: &ChoiMatrix, tolerance: f64) -> Result<RelevantSet> {
    let n = ideal.n();
    let len = 2 * n;
    let total = 1usize << (2 * len);
    let norm = (1usize << (2 * n)) as f64;
    let mut operators = Vec::new();
    let mut warnings = Vec::new();
    for index in 0..total {
        let word = PauliWord::from_index(len, index)?;
        let w = ideal.expectation(&word)?;
        if w.abs() <= tolerance {
            continue;
        }
        if w.abs() < SUSPICIOUS_BELOW {
            warnings.push(format!("{word}: tiny ideal expectation {w:.3e}"));
        }
        if w.abs() > 1.0 + STRUCTURAL_TOL {
            return Err(Error::InvalidArgument(format!("{word}: ideal expectation {w} exceeds 1")));
        }
        operators.push(RelevantOperator { index, word, ideal_expectation: w, relevance: w * w / norm });
    }
    let sum: f64 = operators.iter().map(|op| op.relevance).sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Normalization(sum));
    }
    Ok(RelevantSet { n, operators, warnings })
}

/// Generators of the stabilizer group of a Clifford gate's Choi state.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerGeneratorSet {
    pub generators: Vec<PauliWord>,
}

impl StabilizerGeneratorSet {
    /// Qubits of the gate (half the word length).
    pub fn n(&self) -> usize {
        self.generators.first().map_or(0, |g| g.len() / 2)
    }

    pub fn mutually_commute(&self) -> bool {
        self.generators.iter().enumerate().all(|(i, a)| self.generators[i + 1..].iter().all(|b| a.commutes_with(b)))
    }

    /// Products over every subset of the generators, indexed by subset bitmask.
    pub fn subset_products(&self) -> Result<Vec<PauliWord>> {
        let len = self.generators.first().map(|g| g.len()).ok_or(Error::QubitCount(0))?;
        let count = self.generators.len();
        let mut out = Vec::with_capacity(1 << count);
        for subset in 0..1usize << count {
            let mut acc = PauliWord::identity(len)?;
            for (k, g) in self.generators.iter().enumerate() {
                if subset >> k & 1 == 1 {
                    acc = acc.mul_signed(g)?;
                }
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Checks the group structure against an enumerated relevant set: every
    /// subset product is relevant with expectation +1 after sign folding.
    pub fn validate(&self, relevant: &RelevantSet) -> Result<()> {
        if !self.mutually_commute() {
            return Err(Error::InvalidArgument("stabilizer generators do not commute".into()));
        }
        let products = self.subset_products()?;
        let mut indices: Vec<usize> = products.iter().map(|p| p.index()).collect();
        indices.sort_unstable();
        indices.dedup();
        if indices.len() != 1 << (2 * self.n()) {
            return Err(Error::InvalidArgument("subset products are not distinct".into()));
        }
        for p in &products {
            let pos = relevant
                .position(p)
                .ok_or_else(|| Error::InvalidArgument(format!("{p} is not a relevant operator")))?;
            let folded = p.sign() * relevant.operators[pos].ideal_expectation;
            if (folded - 1.0).abs() > STRUCTURAL_TOL {
                return Err(Error::InvalidArgument(format!("{p} has stabilizer expectation {folded}")));
            }
        }
        Ok(())
    }
}

pub fn stabilizer_generators(gate: Gate) -> Result<StabilizerGeneratorSet> {
    let words: &[&str] = match gate {
        Gate::Cnot => &["XIXX", "ZIZI", "IXIX", "IZZZ"],
        Gate::Cphase => &["XIXZ", "ZIZI", "IXZX", "IZIZ"],
        Gate::CphaseChain => &["XIIXZI", "ZIIZII", "IXIZXZ", "IZIIZI", "IIXIZX", "IIZIIZ"],
        Gate::Toffoli => return Err(Error::NonClifford(gate.name().into())),
    };
    let generators = words.iter().map(|w| w.parse()).collect::<Result<_>>()?;
    Ok(StabilizerGeneratorSet { generators })
}
