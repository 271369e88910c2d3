//! Linear-inversion process tomography with a trace-preserving physicality projection.
//!
//! Each qubit is prepared in one of `|0⟩`, `(|0⟩+|1⟩)/√2`, `(|0⟩−i|1⟩)/√2`, `|1⟩`
//! and every n-qubit Pauli observable is read out through the joint readout.

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certification::Experiment;
use crate::channels::ChoiMatrix;
use crate::error::{Error, Result};
use crate::linalg::{eigh, ComplexMatrix, StateVector, STRUCTURAL_TOL};
use crate::pauli::{enumerate_words, PauliWord};
use crate::readout::{Mode, Reading};
use crate::rng::derive_key;

pub const MAX_TOMOGRAPHY_QUBITS: usize = 3;

const FRAC: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// `tr(ρ_a P)/2` for the four preparations (rows) and I, X, Y, Z (columns).
const MENU_COEFFS: [[f64; 4]; 4] =
    [[0.5, 0.0, 0.0, 0.5], [0.5, 0.5, 0.0, 0.0], [0.5, 0.0, -0.5, 0.0], [0.5, 0.0, 0.0, -0.5]];

/// Single-qubit preparation `k` of the menu.
pub fn menu_state(k: usize) -> StateVector {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let amps = match k {
        0 => [c(1.0, 0.0), c(0.0, 0.0)],
        1 => [c(FRAC, 0.0), c(FRAC, 0.0)],
        2 => [c(FRAC, 0.0), c(0.0, -FRAC)],
        3 => [c(0.0, 0.0), c(1.0, 0.0)],
        _ => panic!("menu index {k} out of range"),
    };
    StateVector::new(amps.to_vec())
}

/// Base-4 label, qubit 1 first.
pub fn input_label(n: usize, index: usize) -> String {
    (0..n).map(|k| char::from(b'0' + (index >> (2 * (n - 1 - k)) & 3) as u8)).collect()
}

pub fn parse_input_label(label: &str) -> Result<usize> {
    label.chars().try_fold(0usize, |acc, ch| match ch.to_digit(4) {
        Some(d) => Ok(acc * 4 + d as usize),
        None => Err(Error::Parse(format!("bad input label {label:?}"))),
    })
}

/// Product state selected by a base-4 input index.
pub fn input_state(n: usize, index: usize) -> StateVector {
    (0..n)
        .map(|k| menu_state(index >> (2 * (n - 1 - k)) & 3))
        .reduce(|acc, s| acc.kron(&s))
        .expect("at least one qubit")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyRecord {
    pub input_index: String,
    pub input_state: StateVector,
    pub observable: PauliWord,
    pub value: f64,
    pub variance: f64,
}

/// All `4^n` inputs × `4^n` observables, each pair on its own seed substream.
pub fn collect(exp: &Experiment, mode: Mode) -> Result<Vec<TomographyRecord>> {
    let n = exp.n();
    if n > MAX_TOMOGRAPHY_QUBITS {
        return Err(Error::QubitCount(n));
    }
    let observables = enumerate_words(n)?;
    let size = observables.len();
    let seed = match mode {
        Mode::Exact => 0,
        Mode::Shots { seed, .. } => seed,
    };
    (0..size * size)
        .into_par_iter()
        .map(|pair| {
            let (a, q) = (pair / size, pair % size);
            let state = input_state(n, a);
            let observable = observables[q];
            let Reading { value, variance } =
                exp.run(&state, &observable, mode.with_seed(derive_key(seed, &[a as u64, q as u64])))?;
            Ok(TomographyRecord { input_index: input_label(n, a), input_state: state, observable, value, variance })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiEstimate {
    pub n: usize,
    pub matrix: ComplexMatrix,
    pub physical: bool,
}

impl ChoiEstimate {
    pub fn d(&self) -> usize {
        1 << self.n
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().map(|t| t.re).unwrap_or(f64::NAN)
    }
}

/// Inverse of the single-qubit menu coefficient matrix, by Gauss–Jordan.
fn menu_inverse() -> Result<[[f64; 4]; 4]> {
    let mut a = MENU_COEFFS;
    let mut inv = [[0.0; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::Singular);
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for k in 0..4 {
            a[col][k] /= p;
            inv[col][k] /= p;
        }
        for r in 0..4 {
            if r != col {
                let f = a[r][col];
                for k in 0..4 {
                    a[r][k] -= f * a[col][k];
                    inv[r][k] -= f * inv[col][k];
                }
            }
        }
    }
    Ok(inv)
}

/// Solves `T = C⁻¹ M` with `C = ⊗ c` and assembles
/// `ρ_E = (1/d³) Σ_{P,Q} T_{P,Q} Pᵀ ⊗ Q`, where `T_{P,Q} = tr[Q E(P)]`.
pub fn invert(records: &[TomographyRecord]) -> Result<ChoiEstimate> {
    let size = (records.len() as f64).sqrt().round() as usize;
    if size * size != records.len() || !size.is_power_of_two() || size < 4 {
        return Err(Error::IncompleteRecords(format!("{} records", records.len())));
    }
    let n = size.trailing_zeros() as usize / 2;
    if 4usize.pow(n as u32) != size {
        return Err(Error::IncompleteRecords(format!("{} records", records.len())));
    }
    let mut m = vec![f64::NAN; size * size];
    for r in records {
        if r.observable.len() != n {
            return Err(Error::LengthMismatch(r.observable.len(), n));
        }
        let a = parse_input_label(&r.input_index)?;
        if a >= size {
            return Err(Error::IncompleteRecords(format!("input {} out of range", r.input_index)));
        }
        let slot = &mut m[a * size + r.observable.index()];
        *slot = r.observable.sign() * r.value;
    }
    if let Some(pos) = m.iter().position(|v| v.is_nan()) {
        return Err(Error::IncompleteRecords(format!(
            "missing input {} observable {}",
            input_label(n, pos / size),
            PauliWord::from_index(n, pos % size)?
        )));
    }

    let cinv = menu_inverse()?;
    let cinv_entry = |p: usize, a: usize| -> f64 {
        (0..n).map(|k| cinv[p >> (2 * k) & 3][a >> (2 * k) & 3]).product()
    };
    let d = 1usize << n;
    let mut rho = ComplexMatrix::zeros(d * d, d * d);
    let scale = 1.0 / (d * d * d) as f64;
    for p in 0..size {
        let pw = PauliWord::from_index(n, p)?;
        let transpose_sign = if pw.y_count() % 2 == 1 { -1.0 } else { 1.0 };
        for q in 0..size {
            let t: f64 = (0..size).map(|a| cinv_entry(p, a) * m[a * size + q]).sum();
            if t == 0.0 {
                continue;
            }
            let word = pw.tensor(&PauliWord::from_index(n, q)?)?;
            let coeff = t * transpose_sign * scale;
            for col in 0..d * d {
                let (row, phase) = word.apply_basis(col);
                rho[(row, col)] += phase * coeff;
            }
        }
    }
    Ok(ChoiEstimate { n, matrix: rho, physical: false })
}

/// Trace-preserving eigenvalue truncation: negative eigenvalues are zeroed and
/// their mass is removed evenly from the rest, repeating until none is negative.
pub fn truncate_eigenvalues(values: &[f64], target_trace: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let shift = (target_trace - sorted.iter().sum::<f64>()) / sorted.len() as f64;
    let mut kept = sorted.len();
    let mut deficit = 0.0;
    let mut out = vec![0.0; values.len()];
    let mut shifted: Vec<f64> = sorted.iter().map(|v| v + shift).collect();
    while kept > 0 {
        let last = shifted[kept - 1];
        if last + deficit / kept as f64 >= 0.0 {
            break;
        }
        deficit += last;
        shifted[kept - 1] = 0.0;
        kept -= 1;
    }
    for v in shifted.iter_mut().take(kept) {
        *v += deficit / kept as f64;
    }
    for (slot, &i) in order.iter().enumerate() {
        out[i] = shifted[slot];
    }
    out
}

pub fn project_physical(est: &ChoiEstimate) -> Result<ChoiEstimate> {
    let herm = est.matrix.hermiticity_error();
    if herm > STRUCTURAL_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let dec = eigh(&est.matrix)?;
    let values = truncate_eigenvalues(&dec.values, 1.0);
    Ok(ChoiEstimate { n: est.n, matrix: dec.reassemble(&values), physical: true })
}

/// `Re tr[ideal · est]`.
pub fn fidelity_from_tomography(ideal: &ChoiMatrix, est: &ChoiEstimate) -> Result<f64> {
    if ideal.n() != est.n {
        return Err(Error::DimensionMismatch(format!("{}-qubit ideal, {}-qubit estimate", ideal.n(), est.n)));
    }
    Ok(ideal.matrix().trace_product(&est.matrix)?.re)
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    input_index: String,
    observable: String,
    value: f64,
    variance: f64,
}

/// Writes `input_index,observable,value,variance` rows.
pub fn write_records_csv<W: Write>(records: &[TomographyRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(CsvRow {
            input_index: r.input_index.clone(),
            observable: r.observable.to_string(),
            value: r.value,
            variance: r.variance,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<TomographyRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        let n = row.input_index.len();
        let index = parse_input_label(&row.input_index)?;
        if n == 0 {
            return Err(Error::Parse("empty input label".into()));
        }
        out.push(TomographyRecord {
            input_state: input_state(n, index),
            input_index: row.input_index,
            observable: row.observable.parse()?,
            value: row.value,
            variance: row.variance,
        });
    }
    Ok(out)
}
