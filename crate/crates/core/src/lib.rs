//! Monte Carlo process certification of quantum gates on simulated channels.
//!
//! The crate builds Choi matrices for a small gate library, enumerates the
//! Pauli observables with non-zero ideal expectation, simulates the joint
//! readout used to measure them and estimates process fidelity either
//! exhaustively or by importance sampling. Linear-inversion tomography serves
//! as an independent baseline.

pub mod certification;
pub mod channels;
pub mod error;
pub mod linalg;
pub mod pauli;
pub mod readout;
pub mod rng;
pub mod stats;
pub mod tomography;

pub use error::{Error, Result};

/// Bundled reference operator tables, one signed word per line.
pub mod golden {
    use crate::channels::Gate;
    use crate::pauli::PauliWord;

    pub fn raw(gate: Gate) -> &'static str {
        match gate {
            Gate::Cnot => include_str!("../data/tables/cnot.txt"),
            Gate::Cphase => include_str!("../data/tables/cphase.txt"),
            Gate::CphaseChain => include_str!("../data/tables/cphase_chain.txt"),
            Gate::Toffoli => include_str!("../data/tables/toffoli.txt"),
        }
    }

    /// Whether the bundled table carries signs.
    pub fn is_signed(gate: Gate) -> bool {
        gate != Gate::Toffoli
    }

    pub fn table(gate: Gate) -> Vec<PauliWord> {
        raw(gate)
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse().expect("bundled table is well formed"))
            .collect()
    }
}
