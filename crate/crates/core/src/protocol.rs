//! One round of the post-selection map and iterated schedules.
//!
//! Layout: the kept copy occupies qubits `(A, B, C)` and the flag copy
//! `(A', B', C')`, so the joint state is `rho_keep ⊗ rho_flag` on
//! `(A, B, C, A', B', C')`. It is reordered with [`PARTY_INTERLEAVE`] into
//! `(A, A', B, B', C, C')` so every party's (kept, flag) pair is adjacent and
//! the local unitary acts on qubits `2p, 2p + 1`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::qmat::{self, ComplexMatrix, QubitIndex};
use crate::states::{fidelity_of, DensityMatrix, DIM};
use crate::unitaries::{self, TwoQubitUnitary};

/// `perm[k]` = source qubit landing at position `k`.
pub const PARTY_INTERLEAVE: [QubitIndex; 6] = [
    QubitIndex(0),
    QubitIndex(3),
    QubitIndex(1),
    QubitIndex(4),
    QubitIndex(2),
    QubitIndex(5),
];

/// Keep probabilities below this abort the run.
pub const SUCCESS_FLOOR: f64 = 1e-14;

const PARTIES: usize = 3;
const REGISTER: usize = 6;

/// Readout flip probability `p_m` and two-qubit depolarizing parameter
/// `p_g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    p_m: f64,
    p_g: f64,
}

impl NoiseParams {
    pub const NONE: NoiseParams = NoiseParams { p_m: 0.0, p_g: 0.0 };
    /// Largest `p_g` keeping `1 - 16 p_g / 15` non-negative.
    pub const MAX_P_G: f64 = 15.0 / 16.0;

    pub fn new(p_m: f64, p_g: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_m) {
            return Err(Error::ParameterOutOfRange {
                name: "p_m",
                value: p_m,
                min: 0.0,
                max: 1.0,
            });
        }
        if !(0.0..=Self::MAX_P_G).contains(&p_g) {
            return Err(Error::ParameterOutOfRange {
                name: "p_g",
                value: p_g,
                min: 0.0,
                max: Self::MAX_P_G,
            });
        }
        Ok(Self { p_m, p_g })
    }

    pub fn measurement(p_m: f64) -> Result<Self> {
        Self::new(p_m, 0.0)
    }

    pub fn gate(p_g: f64) -> Result<Self> {
        Self::new(0.0, p_g)
    }

    pub fn p_m(&self) -> f64 {
        self.p_m
    }

    pub fn p_g(&self) -> f64 {
        self.p_g
    }

    /// Weight of the full-mixing term, `16 p_g / 15`.
    fn depolarizing_weight(&self) -> f64 {
        16.0 * self.p_g / 15.0
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self::NONE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Single(TwoQubitUnitary),
    /// `first` then `second` in each double step.
    AlternatingDouble(TwoQubitUnitary, TwoQubitUnitary),
    /// The same unitary twice per double step.
    UniformDouble(TwoQubitUnitary),
}

impl Schedule {
    /// CNOT-X followed by CNOT-H.
    pub fn alternating() -> Self {
        Schedule::AlternatingDouble(unitaries::u1(), unitaries::u2())
    }

    pub fn uniform(n: i64) -> Self {
        Schedule::UniformDouble(unitaries::u3(n))
    }

    /// Unitaries applied, in order, within one record.
    pub fn elementary(&self) -> Vec<&TwoQubitUnitary> {
        match self {
            Schedule::Single(u) => alloc::vec![u],
            Schedule::AlternatingDouble(a, b) => alloc::vec![a, b],
            Schedule::UniformDouble(u) => alloc::vec![u, u],
        }
    }

    pub fn steps_per_record(&self) -> usize {
        match self {
            Schedule::Single(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: DensityMatrix,
    pub keep_probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryStep {
    pub unitary: String,
    pub fidelity: f64,
    pub keep_probability: f64,
}

/// Per-record summary of a schedule run.
///
/// Two success conventions are reported. `success_probability` is the
/// product of the elementary keep probabilities along one chain.
/// `tree_success_probability` counts every elementary round needed to feed
/// the last one: in a double step the first round runs twice (once per
/// copy), giving `p1² p2`, which is 1/16 for GHZ under CNOT-X/CNOT-H.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based record index.
    pub step: usize,
    pub fidelity: f64,
    pub success_probability: f64,
    pub tree_success_probability: f64,
    pub elementary: Vec<ElementaryStep>,
    /// `2^(elementary rounds so far)`, saturating at `u128::MAX`.
    pub cumulative_min_inputs: u128,
    /// Expected inputs consumed per surviving output: `E_k = 2 E_(k-1) / p_k`.
    pub cumulative_expected_inputs: f64,
}

/// One application of the map to a kept copy and a flag copy.
///
/// With `p_m > 0` the output is the mixture over all eight true flag
/// outcomes weighted by the chance that every readout still reports zero.
pub fn iterate_once(
    rho_keep: &DensityMatrix,
    rho_flag: &DensityMatrix,
    u: &TwoQubitUnitary,
    noise: NoiseParams,
) -> Result<StepOutcome> {
    for rho in [rho_keep, rho_flag] {
        if rho.dim() != DIM {
            return Err(Error::InvalidInput("inputs must be three-qubit states"));
        }
    }
    NoiseParams::new(noise.p_m, noise.p_g)?;
    let (state, keep_probability) = apply_map(rho_keep.matrix(), rho_flag.matrix(), u, noise)?;
    Ok(StepOutcome {
        state: DensityMatrix::from_matrix_unchecked(state),
        keep_probability,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum GateNoisePlacement {
    /// Channel right after each party's gate.
    AfterEachGate,
    /// All gates, then all channels. Equivalent because the pairs are
    /// disjoint.
    AfterAllGates,
}

/// The map on bare matrices. Used directly for formal perturbations that
/// need not be positive.
pub(crate) fn apply_map(
    keep: &ComplexMatrix,
    flag: &ComplexMatrix,
    u: &TwoQubitUnitary,
    noise: NoiseParams,
) -> Result<(ComplexMatrix, f64)> {
    apply_map_with(keep, flag, u, noise, GateNoisePlacement::AfterEachGate)
}

pub(crate) fn apply_map_with(
    keep: &ComplexMatrix,
    flag: &ComplexMatrix,
    u: &TwoQubitUnitary,
    noise: NoiseParams,
    placement: GateNoisePlacement,
) -> Result<(ComplexMatrix, f64)> {
    let joint = qmat::tensor(keep, flag);
    let mut state = qmat::permute_qubits(&joint, &PARTY_INTERLEAVE, REGISTER)?;
    let lambda = noise.depolarizing_weight();
    for party in 0..PARTIES {
        state = qmat::conjugate_local(&state, u.matrix(), 2 * party, REGISTER)?;
        if lambda > 0.0 && placement == GateNoisePlacement::AfterEachGate {
            state = qmat::depolarize_block(&state, 2 * party, 2, REGISTER, lambda)?;
        }
    }
    if lambda > 0.0 && placement == GateNoisePlacement::AfterAllGates {
        for party in 0..PARTIES {
            state = qmat::depolarize_block(&state, 2 * party, 2, REGISTER, lambda)?;
        }
    }
    post_select(&state, noise.p_m)
}

/// Index in the interleaved register of kept bits `kept` and flag bits
/// `flags` (both 3-bit, party A most significant).
#[inline]
fn interleaved_index(kept: usize, flags: usize) -> usize {
    (0..PARTIES).fold(0, |acc, p| {
        let shift = PARTIES - 1 - p;
        let k = (kept >> shift) & 1;
        let f = (flags >> shift) & 1;
        acc | (k << (2 * shift + 1)) | (f << (2 * shift))
    })
}

fn post_select(state: &ComplexMatrix, p_m: f64) -> Result<(ComplexMatrix, f64)> {
    let mut kept = ComplexMatrix::zeros(DIM, DIM);
    for outcome in 0..DIM {
        let flips = outcome.count_ones() as i32;
        // every readout must report zero: true zeros survive with 1 - p_m,
        // true ones must flip
        let weight = libm::pow(1.0 - p_m, (PARTIES as i32 - flips) as f64) * libm::pow(p_m, flips as f64);
        if weight == 0.0 {
            continue;
        }
        for r in 0..DIM {
            let ri = interleaved_index(r, outcome);
            for c in 0..DIM {
                kept[(r, c)] += state[(ri, interleaved_index(c, outcome))] * weight;
            }
        }
    }
    let probability = kept.trace().re;
    if !(probability >= SUCCESS_FLOOR) {
        return Err(Error::ZeroSuccessProbability { probability });
    }
    Ok((kept.scale_real(1.0 / probability), probability))
}

/// Iterates `schedule` from `rho0`, feeding identical copies at every
/// elementary round. Yields one record per single or double step.
#[derive(Debug, Clone)]
pub struct ScheduleRun<'a> {
    schedule: &'a Schedule,
    noise: NoiseParams,
    state: DensityMatrix,
    step: usize,
    rounds: u32,
    expected_inputs: f64,
    failed: bool,
}

impl<'a> ScheduleRun<'a> {
    pub fn new(rho0: DensityMatrix, schedule: &'a Schedule, noise: NoiseParams) -> Result<Self> {
        if rho0.dim() != DIM {
            return Err(Error::InvalidInput("inputs must be three-qubit states"));
        }
        NoiseParams::new(noise.p_m, noise.p_g)?;
        Ok(Self {
            schedule,
            noise,
            state: rho0,
            step: 0,
            rounds: 0,
            expected_inputs: 1.0,
            failed: false,
        })
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    fn advance(&mut self) -> Result<IterationRecord> {
        let mut elementary = Vec::with_capacity(2);
        for u in self.schedule.elementary() {
            let out = iterate_once(&self.state, &self.state, u, self.noise)?;
            self.rounds += 1;
            self.expected_inputs = 2.0 * self.expected_inputs / out.keep_probability;
            elementary.push(ElementaryStep {
                unitary: u.label().into(),
                fidelity: fidelity_of(out.state.matrix()),
                keep_probability: out.keep_probability,
            });
            self.state = out.state;
        }
        self.step += 1;
        let success_probability = elementary.iter().map(|e| e.keep_probability).product();
        let last = elementary.len() - 1;
        let tree_success_probability = elementary
            .iter()
            .enumerate()
            .map(|(k, e)| libm::pow(e.keep_probability, (1u32 << (last - k)) as f64))
            .product();
        Ok(IterationRecord {
            step: self.step,
            fidelity: fidelity_of(self.state.matrix()),
            success_probability,
            tree_success_probability,
            elementary,
            cumulative_min_inputs: 1u128.checked_shl(self.rounds).unwrap_or(u128::MAX),
            cumulative_expected_inputs: self.expected_inputs,
        })
    }
}

impl Iterator for ScheduleRun<'_> {
    type Item = Result<IterationRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let rec = self.advance();
        self.failed = rec.is_err();
        Some(rec)
    }
}

pub fn run_schedule(
    rho0: &DensityMatrix,
    schedule: &Schedule,
    n_steps: usize,
    noise: NoiseParams,
) -> Result<Vec<IterationRecord>> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1"));
    }
    ScheduleRun::new(rho0.clone(), schedule, noise)?
        .take(n_steps)
        .collect()
}

/// Minimum number of inputs for `n` double steps, `4^n`. `n <= 31`.
pub fn resource_count(n_double_steps: u32) -> Result<u64> {
    if n_double_steps > 31 {
        return Err(Error::ParameterOutOfRange {
            name: "n_double_steps",
            value: n_double_steps as f64,
            min: 0.0,
            max: 31.0,
        });
    }
    Ok(1u64 << (2 * n_double_steps))
}
