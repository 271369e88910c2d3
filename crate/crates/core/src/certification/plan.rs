use serde::Serialize;

use crate::error::Result;
use crate::linalg::StateVector;
use crate::pauli::PauliWord;
use crate::readout::toggle_scheme;

use super::relevant::RelevantSet;

/// One experimental configuration: prepare, run the gate, read out once.
#[derive(Clone, Debug, Serialize)]
pub struct MeasurementSetting {
    /// Index into the relevant operator list.
    pub operator_index: usize,
    /// Conjugated eigenvector of the copy-register factor.
    pub input_state: StateVector,
    pub input_eigenvalue: f64,
    /// Output-register factor to read out.
    pub measured_word: PauliWord,
    /// Index into the toggle scheme of `measured_word`.
    pub readout_variant: usize,
    /// π-pulse mask of that variant.
    pub toggle_mask: u32,
}

/// `d × 2^{n−1}` settings per non-identity relevant word; the identity word
/// is never measured.
pub fn build_plan(relevant: &RelevantSet) -> Result<Vec<MeasurementSetting>> {
    let n = relevant.n;
    let mut plan = Vec::new();
    for (operator_index, op) in relevant.iter().enumerate() {
        if op.is_identity() {
            continue;
        }
        let (copy, output) = op.word.split(n)?;
        let patterns = if output.is_identity() { vec![0] } else { toggle_scheme(&output)?.patterns };
        for (eigenvalue, state) in copy.eigenbasis().conjugated_inputs() {
            for (variant, &mask) in patterns.iter().enumerate() {
                plan.push(MeasurementSetting {
                    operator_index,
                    input_state: state.clone(),
                    input_eigenvalue: eigenvalue,
                    measured_word: output,
                    readout_variant: variant,
                    toggle_mask: mask,
                });
            }
        }
    }
    Ok(plan)
}

/// Settings needed to estimate one operator: `inputs × readout variants`.
pub(crate) fn settings_for(word: &PauliWord, n: usize, inputs: usize) -> usize {
    if word.is_identity() {
        return 0;
    }
    let output_supported = word.support() & ((1u32 << n) - 1) != 0;
    let variants = if output_supported { 1 << (n - 1) } else { 1 };
    inputs * variants
}
