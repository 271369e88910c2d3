//! Relevant-operator enumeration, measurement plans and fidelity estimators.

mod estimate;
mod plan;
mod relevant;
mod sweep;

pub use estimate::{
    estimate_exhaustive, estimate_monte_carlo, exact_ratios, expectation_single_input, expectation_via_inputs,
    CertificationReport, Experiment, Method, RATIO_WARN,
};
pub use plan::{build_plan, MeasurementSetting};
pub use relevant::{
    enumerate_relevant, stabilizer_generators, RelevantOperator, RelevantSet, StabilizerGeneratorSet,
    RELEVANCE_TOL, SUSPICIOUS_BELOW,
};
pub use sweep::{subsample_sweep, SweepRow};

use crate::channels::{choi, Gate};
use crate::error::Result;

/// Relevant operators of a library gate at the default tolerance.
pub fn relevant_for_gate(gate: Gate) -> Result<RelevantSet> {
    enumerate_relevant(&choi(&gate.channel()), RELEVANCE_TOL)
}
