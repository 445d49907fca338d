//! First-order response, convergence order, attraction-basin thresholds and
//! schedule equivalence.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::protocol::{self, NoiseParams, Schedule, ScheduleRun};
use crate::qmat::ComplexMatrix;
use crate::states::{self, DensityMatrix, NoiseSpec};
use crate::unitaries::TwoQubitUnitary;

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Numerically extracted first-order output error `M̃` for an input
/// `rho_GHZ + eps M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    pub matrix: ComplexMatrix,
    pub step: f64,
}

/// Central difference `(P[rho_GHZ + hM] - P[rho_GHZ - hM]) / 2h`.
///
/// The map is evaluated on the Hermitian unit-trace matrices `rho_GHZ ± hM`
/// without a positivity check: for a generic `M` one of the two sides lies
/// outside the state space, but the map is a rational function of the
/// entries and its derivative at `rho_GHZ` is what is wanted.
pub fn first_order_response(u: &TwoQubitUnitary, m: &ComplexMatrix, h: f64) -> Result<ResponseMatrix> {
    states::check_traceless_hermitian(m)?;
    if !(1e-6..=1e-2).contains(&h) {
        return Err(Error::ParameterOutOfRange {
            name: "h",
            value: h,
            min: 1e-6,
            max: 1e-2,
        });
    }
    let g = states::ghz_density();
    let eval = |sign: f64| -> Result<ComplexMatrix> {
        let rho = g.matrix() + &m.scale_real(sign * h);
        Ok(protocol::apply_map(&rho, &rho, u, NoiseParams::NONE)?.0)
    };
    let diff = &eval(1.0)? - &eval(-1.0)?;
    Ok(ResponseMatrix {
        matrix: diff.scale_real(0.5 / h),
        step: h,
    })
}

/// The CNOT-X first-order error: `-2 <GHZ-|M|GHZ-> |000><111| + h.c.`.
pub fn closed_form_response_u1(m: &ComplexMatrix) -> ComplexMatrix {
    let c = states::ghz_minus().expectation(m) * -2.0;
    let mut out = ComplexMatrix::zeros(states::DIM, states::DIM);
    out[(0, 7)] = c;
    out[(7, 0)] += c.conj();
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two paired samples"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("log-log fit needs positive samples"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| libm::log(*x)).collect();
    let ly: Vec<f64> = ys.iter().map(|y| libm::log(*y)).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Infidelity `1 - F` after one record (single or double step) of
/// `schedule` applied to `rho_GHZ + eps M`.
pub fn infidelity_after_record(schedule: &Schedule, m: &ComplexMatrix, eps: f64) -> Result<f64> {
    let rho = states::perturbed_input(&NoiseSpec::Custom {
        epsilon: eps,
        m: m.clone(),
    })?;
    let rec = protocol::run_schedule(&rho, schedule, 1, NoiseParams::NONE)?;
    Ok(1.0 - rec[0].fidelity)
}

/// Log-log slope of `1 - F` after one record against `eps`, fitted on the
/// three smallest values of `eps_list` (strictly decreasing, positive).
pub fn convergence_order(schedule: &Schedule, m: &ComplexMatrix, eps_list: &[f64]) -> Result<f64> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidArgument("need at least three eps values"));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("eps values must be positive and strictly decreasing"));
    }
    let tail = &eps_list[eps_list.len() - 3..];
    let ys = tail
        .iter()
        .map(|&eps| infidelity_after_record(schedule, m, eps))
        .collect::<Result<Vec<_>>>()?;
    loglog_slope(tail, &ys)
}

/// "Converges" means some record's fidelity exceeds `min_fidelity` within
/// `max_steps` records. A post-selection failure counts as divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRule {
    pub min_fidelity: f64,
    pub max_steps: usize,
}

impl Default for ConvergenceRule {
    fn default() -> Self {
        Self {
            min_fidelity: 0.999,
            max_steps: 60,
        }
    }
}

impl core::fmt::Display for ConvergenceRule {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "F > {} within {} steps", self.min_fidelity, self.max_steps)
    }
}

impl ConvergenceRule {
    pub fn converges(&self, rho0: &DensityMatrix, schedule: &Schedule, noise: NoiseParams) -> Result<bool> {
        for rec in ScheduleRun::new(rho0.clone(), schedule, noise)?.take(self.max_steps) {
            match rec {
                Ok(r) if r.fidelity > self.min_fidelity => return Ok(true),
                Ok(_) => {}
                Err(Error::ZeroSuccessProbability { .. }) => return Ok(false),
                Err(e) => return Err(e),
            }
        }
        Ok(false)
    }
}

/// A one-parameter set of experiments: input state and noise as a function
/// of `x`.
pub trait InputFamily {
    fn name(&self) -> String;

    fn instantiate(&self, x: f64, base: NoiseParams) -> Result<(DensityMatrix, NoiseParams)>;
}

/// `N(|GHZ> + x Σ w_k |k>)`, default components `|001>`, `|110>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentFamily {
    pub components: Vec<(usize, Complex64)>,
}

impl Default for CoherentFamily {
    fn default() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            components: vec![(1, one), (6, one)],
        }
    }
}

impl InputFamily for CoherentFamily {
    fn name(&self) -> String {
        let idx: Vec<String> = self.components.iter().map(|(i, _)| format!("{i}")).collect();
        format!("coherent[{}]", idx.join(","))
    }

    fn instantiate(&self, x: f64, base: NoiseParams) -> Result<(DensityMatrix, NoiseParams)> {
        Ok((states::coherent_input(x, &self.components)?, base))
    }
}

/// `(1 - x) rho_GHZ + x I/8`
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WhiteFamily;

impl InputFamily for WhiteFamily {
    fn name(&self) -> String {
        "white".into()
    }

    fn instantiate(&self, x: f64, base: NoiseParams) -> Result<(DensityMatrix, NoiseParams)> {
        Ok((states::white_noise_input(x)?, base))
    }
}

/// Fixed input, readout error `p_m = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementErrorFamily {
    pub input: DensityMatrix,
}

impl InputFamily for MeasurementErrorFamily {
    fn name(&self) -> String {
        "pm".into()
    }

    fn instantiate(&self, x: f64, base: NoiseParams) -> Result<(DensityMatrix, NoiseParams)> {
        Ok((self.input.clone(), NoiseParams::new(x, base.p_g())?))
    }
}

/// Fixed input, gate error `p_g = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateErrorFamily {
    pub input: DensityMatrix,
}

impl InputFamily for GateErrorFamily {
    fn name(&self) -> String {
        "pg".into()
    }

    fn instantiate(&self, x: f64, base: NoiseParams) -> Result<(DensityMatrix, NoiseParams)> {
        Ok((self.input.clone(), NoiseParams::new(base.p_m(), x)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    pub family: String,
    pub threshold: f64,
    pub lo: f64,
    pub hi: f64,
    pub rule: ConvergenceRule,
}

/// Bisects the boundary between converging (`lo`) and non-converging (`hi`)
/// family members until `hi - lo <= resolution`. The threshold is the
/// bracket midpoint.
pub fn threshold_bisect(
    family: &dyn InputFamily,
    lo: f64,
    hi: f64,
    resolution: f64,
    schedule: &Schedule,
    noise: NoiseParams,
    rule: ConvergenceRule,
) -> Result<ThresholdResult> {
    if !(resolution > 0.0) || !(lo < hi) {
        return Err(Error::InvalidArgument("need lo < hi and a positive resolution"));
    }
    let converges = |x: f64| -> Result<bool> {
        let (rho, params) = family.instantiate(x, noise)?;
        rule.converges(&rho, schedule, params)
    };
    if !converges(lo)? || converges(hi)? {
        return Err(Error::BracketInvalid { lo, hi });
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if converges(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult {
        family: family.name(),
        threshold: 0.5 * (lo + hi),
        lo,
        hi,
        rule,
    })
}

/// Largest per-step fidelity gap between CNOT-X/CNOT-H alternation and the
/// uniform `U3(0)` schedule over `n_double_steps` double steps.
pub fn protocol_equivalence(rho0: &DensityMatrix, n_double_steps: usize) -> Result<f64> {
    let alternating = protocol::run_schedule(rho0, &Schedule::alternating(), n_double_steps, NoiseParams::NONE)?;
    let uniform = protocol::run_schedule(rho0, &Schedule::uniform(0), n_double_steps, NoiseParams::NONE)?;
    Ok(alternating
        .iter()
        .zip(&uniform)
        .map(|(a, b)| (a.fidelity - b.fidelity).abs())
        .fold(0.0, f64::max))
}
