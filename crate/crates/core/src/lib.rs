//! Iterated LOCC distillation of three-qubit GHZ states.
//!
//! Two noisy copies of a three-qubit state are shared by three parties; each
//! party applies the same two-qubit unitary to its (kept, flag) pair and
//! measures the flag in the computational basis. The kept qubits survive
//! only when every flag reads zero. Iterating this post-selection map, with
//! the CNOT-X / CNOT-H pair or the phased CNOT-H family applied in double
//! steps, drives moderately distorted inputs to the GHZ state with an error
//! that squares every double step.
//!
//! The crate is `no_std` with `alloc`. IO, file formats and the command
//! line live in the `ghz-distill` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
mod error;
pub mod protocol;
pub mod qmat;
pub mod states;
pub mod unitaries;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use protocol::{
    iterate_once, resource_count, run_schedule, IterationRecord, NoiseParams, Schedule,
    StepOutcome,
};
pub use qmat::{ComplexMatrix, QubitIndex};
pub use states::{fidelity, DensityMatrix, NoiseSpec, PureState};
pub use unitaries::TwoQubitUnitary;
