//! The local two-qubit operations and algebraic checks on them.
//!
//! Matrices are written in the ordered basis `|00>, |01>, |10>, |11>` of
//! (kept, flag). The fixed-point and coherent-error conditions are phrased
//! with 1-based row/column labels `U_rc`; internally
//!
//! | label | row | meaning                        |
//! |-------|-----|--------------------------------|
//! | `U_1c` | 0  | output `|kept=0, flag=0>`      |
//! | `U_3c` | 2  | output `|kept=1, flag=0>`      |
//!
//! and column `c` maps to index `c - 1`. Only these two rows matter because
//! the flag must read zero. No conjugates appear in the conditions: they
//! come from products of amplitudes of the three parties.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};
use core::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qmat::{self, ComplexMatrix, ONE, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitUnitary {
    matrix: ComplexMatrix,
    label: String,
}

impl TwoQubitUnitary {
    /// Checks unitarity at `1e-10`.
    pub fn new(matrix: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        if matrix.shape() != (4, 4) {
            return Err(Error::DimensionMismatch {
                expected: (4, 4),
                found: matrix.shape(),
            });
        }
        let residual = qmat::unitarity_residual(&matrix).unwrap_or(f64::INFINITY);
        if residual >= qmat::DEFAULT_TOL {
            return Err(Error::NotUnitary { residual });
        }
        Ok(Self {
            matrix,
            label: label.into(),
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `U_rc` with 1-based labels.
    #[inline]
    fn el(&self, r: usize, c: usize) -> Complex64 {
        self.matrix[(r - 1, c - 1)]
    }
}

fn real4(rows: [[f64; 4]; 4], scale: f64) -> ComplexMatrix {
    ComplexMatrix::from_real_rows(rows).scale_real(scale)
}

/// CNOT-X: swaps `|00>` and `|01>`, fixes `|10>` and `|11>`.
pub fn u1() -> TwoQubitUnitary {
    TwoQubitUnitary {
        matrix: real4(
            [
                [0.0, 1.0, 0.0, 0.0],
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ],
            1.0,
        ),
        label: "u1".into(),
    }
}

/// CNOT-H.
pub fn u2() -> TwoQubitUnitary {
    TwoQubitUnitary {
        matrix: real4(
            [
                [1.0, 0.0, 0.0, 1.0],
                [1.0, 0.0, 0.0, -1.0],
                [0.0, 1.0, 1.0, 0.0],
                [0.0, -1.0, 1.0, 0.0],
            ],
            FRAC_1_SQRT_2,
        ),
        label: "u2".into(),
    }
}

/// Phased family for the uniform double iteration, any integer `n`.
pub fn u3(n: i64) -> TwoQubitUnitary {
    let angle = (n.rem_euclid(6) as f64) * PI / 3.0;
    let minus = Complex64::from_polar(1.0, -angle);
    let plus = Complex64::from_polar(1.0, angle);
    let matrix = ComplexMatrix::from_complex_rows([
        [minus, ZERO, ZERO, ONE],
        [ZERO, minus, ONE, ZERO],
        [ONE, ZERO, ZERO, -plus],
        [ZERO, ONE, -plus, ZERO],
    ])
    .scale_real(FRAC_1_SQRT_2);
    TwoQubitUnitary {
        matrix,
        label: format!("u3:{n}"),
    }
}

/// Identifies one scalar condition, e.g. `eq8.r3[x=2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionId {
    pub family: &'static str,
    pub relation: &'static str,
    pub x: Option<u8>,
    pub i: Option<u8>,
}

impl ConditionId {
    const fn new(family: &'static str, relation: &'static str) -> Self {
        Self {
            family,
            relation,
            x: None,
            i: None,
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.family, self.relation)?;
        match (self.x, self.i) {
            (Some(x), Some(i)) => write!(f, "[x={x},i={i}]"),
            (Some(x), None) => write!(f, "[x={x}]"),
            (None, Some(i)) => write!(f, "[i={i}]"),
            (None, None) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub residuals: Vec<(ConditionId, f64)>,
    pub passed: bool,
    pub tolerance: f64,
}

impl ConditionReport {
    fn from_residuals(residuals: Vec<(ConditionId, f64)>, tolerance: f64) -> Self {
        let passed = residuals.iter().all(|(_, r)| *r < tolerance);
        Self {
            residuals,
            passed,
            tolerance,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &(ConditionId, f64)> {
        self.residuals.iter().filter(move |(_, r)| *r >= self.tolerance)
    }

    pub fn merge(mut self, other: ConditionReport) -> ConditionReport {
        self.residuals.extend(other.residuals);
        ConditionReport::from_residuals(self.residuals, self.tolerance.min(other.tolerance))
    }
}

/// `Σ_j U_ij U*_kj = δ_ik`, one residual per `(i, k)` with `i <= k`.
pub fn check_unitarity(u: &TwoQubitUnitary, tol: f64) -> ConditionReport {
    check_unitarity_matrix(&u.matrix, tol)
}

fn check_unitarity_matrix(m: &ComplexMatrix, tol: f64) -> ConditionReport {
    const NAMES: [[&str; 4]; 4] = [
        ["u11", "u12", "u13", "u14"],
        ["", "u22", "u23", "u24"],
        ["", "", "u33", "u34"],
        ["", "", "", "u44"],
    ];
    let prod = m * &m.adjoint();
    let mut residuals = Vec::new();
    for i in 0..4 {
        for k in i..4 {
            let target = if i == k { ONE } else { ZERO };
            residuals.push((ConditionId::new("eq6", NAMES[i][k]), (prod[(i, k)] - target).norm()));
        }
    }
    ConditionReport::from_residuals(residuals, tol)
}

/// Conditions for `rho_GHZ` to be a fixed point:
/// `Σ U_1i^3 = Σ U_3i^3 ≠ 0` and `Σ U_1i^2 U_3i = Σ U_3i^2 U_1i = 0`.
///
/// The `≠ 0` clause is reported as `tol² / |Σ U_1i^3|`, which is below
/// `tol` exactly when `|Σ U_1i^3| > tol`.
pub fn check_fixed_point(u: &TwoQubitUnitary, tol: f64) -> ConditionReport {
    let r1: Vec<Complex64> = (1..=4).map(|c| u.el(1, c)).collect();
    let r3: Vec<Complex64> = (1..=4).map(|c| u.el(3, c)).collect();
    let cube1: Complex64 = r1.iter().map(|a| a * a * a).sum();
    let cube3: Complex64 = r3.iter().map(|a| a * a * a).sum();
    let mixed13: Complex64 = r1.iter().zip(&r3).map(|(a, b)| a * a * b).sum();
    let mixed31: Complex64 = r1.iter().zip(&r3).map(|(a, b)| b * b * a).sum();
    let residuals = alloc::vec![
        (ConditionId::new("eq7", "cubes_equal"), (cube1 - cube3).norm()),
        (ConditionId::new("eq7", "cubes_nonzero"), tol * tol / cube1.norm()),
        (ConditionId::new("eq7", "mixed_13"), mixed13.norm()),
        (ConditionId::new("eq7", "mixed_31"), mixed31.norm()),
    ];
    ConditionReport::from_residuals(residuals, tol)
}

/// The coherent-error cancellation conditions, one residual per distinct
/// instance over `x ∈ {1, 2}` and `i ∈ {1, 3}`.
///
/// Relations `r1`, `r2` depend on `i` only; `r3`..`r5` and `r7` on `x` only;
/// `r6` on neither.
pub fn check_coherent_conditions(u: &TwoQubitUnitary, tol: f64) -> ConditionReport {
    let e = |r: usize, c: usize| u.el(r, c);
    let pw = |z: Complex64, k: u8| -> Complex64 { (0..k).fold(ONE, |acc, _| acc * z) };
    let s = e(1, 2) * e(3, 2) + e(1, 3) * e(3, 3);
    let mut residuals = Vec::new();
    let with_i = |rel: &'static str, i: u8| ConditionId {
        i: Some(i),
        ..ConditionId::new("eq8", rel)
    };
    let with_x = |rel: &'static str, x: u8| ConditionId {
        x: Some(x),
        ..ConditionId::new("eq8", rel)
    };

    for i in [1u8, 3] {
        let iu = i as usize;
        let r1 = e(1, 1) * e(3, 1) * (e(iu, 2) + e(iu, 3)) + e(iu, 4) * s;
        residuals.push((with_i("r1", i), r1.norm()));
    }
    for i in [1u8, 3] {
        let iu = i as usize;
        let r2 = e(1, 4) * e(3, 4) * (e(iu, 2) + e(iu, 3)) + e(iu, 1) * s;
        residuals.push((with_i("r2", i), r2.norm()));
    }
    for x in [1u8, 2] {
        let y = 3 - x;
        let r3 = pw(e(1, 1), x) * (pw(e(3, 2), y) + pw(e(3, 3), y))
            + pw(e(3, 4), y) * (pw(e(1, 2), x) + pw(e(1, 3), x));
        residuals.push((with_x("r3", x), r3.norm()));
    }
    for x in [1u8, 2] {
        let y = 3 - x;
        let r4 = pw(e(3, 1), x) * (pw(e(1, 2), y) + pw(e(1, 3), y))
            + pw(e(1, 4), y) * (pw(e(3, 2), x) + pw(e(3, 3), x));
        residuals.push((with_x("r4", x), r4.norm()));
    }
    for x in [1u8, 2] {
        let y = 3 - x;
        let lhs = pw(e(1, 1), x) * (pw(e(1, 2), y) + pw(e(1, 3), y))
            + pw(e(1, 4), y) * (pw(e(1, 2), x) + pw(e(1, 3), x));
        let rhs = pw(e(3, 1), x) * (pw(e(3, 2), y) + pw(e(3, 3), y))
            + pw(e(3, 4), y) * (pw(e(3, 2), x) + pw(e(3, 3), x));
        residuals.push((with_x("r5", x), (lhs - rhs).norm()));
    }
    let r6 = pw(e(1, 1), 3) - pw(e(3, 1), 3) + pw(e(3, 4), 3) - pw(e(1, 4), 3);
    residuals.push((ConditionId::new("eq8", "r6"), r6.norm()));
    for x in [1u8, 2] {
        let y = 3 - x;
        let r7 = pw(e(1, 1), x) * pw(e(3, 1), y) - pw(e(1, 4), x) * pw(e(3, 4), y);
        residuals.push((with_x("r7", x), r7.norm()));
    }
    ConditionReport::from_residuals(residuals, tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolutionClass {
    /// `|U_12| = |U_33| = 1`, rest of rows 1 and 3 zero.
    TypeA { relative_phase: f64 },
    /// `|U_13| = |U_32| = 1`, rest of rows 1 and 3 zero.
    TypeB { relative_phase: f64 },
    None,
}

const ALLOWED_PHASES: [f64; 3] = [0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0];

/// Matches `U` against the two single-entry solution patterns. The relative
/// phase `arg(second / first)` must be 0 or ±2π/3.
pub fn classify_solution(u: &TwoQubitUnitary, tol: f64) -> SolutionClass {
    let pattern = |first: (usize, usize), second: (usize, usize)| -> Option<f64> {
        for r in [1, 3] {
            for c in 1..=4 {
                let z = u.el(r, c);
                let expect_unit = (r, c) == first || (r, c) == second;
                let target = if expect_unit { 1.0 } else { 0.0 };
                if (z.norm() - target).abs() >= tol {
                    return None;
                }
            }
        }
        let a = u.el(first.0, first.1);
        let b = u.el(second.0, second.1);
        let phase = (b / a).arg();
        ALLOWED_PHASES
            .iter()
            .find(|&&p| {
                // wrapped angular distance
                let d = libm::remainder(phase - p, 2.0 * PI);
                d.abs() < tol
            })
            .copied()
    };
    if let Some(relative_phase) = pattern((1, 2), (3, 3)) {
        SolutionClass::TypeA { relative_phase }
    } else if let Some(relative_phase) = pattern((1, 3), (3, 2)) {
        SolutionClass::TypeB { relative_phase }
    } else {
        SolutionClass::None
    }
}

/// Max-norm distance between `U` and `factors[0] · factors[1] · …` (the last
/// factor acts first), minimized over a global phase fixed by aligning the
/// largest-magnitude entry of `U`.
pub fn verify_decomposition(u: &TwoQubitUnitary, factors: &[ComplexMatrix]) -> Result<f64> {
    let mut product = ComplexMatrix::identity(4);
    for f in factors {
        if f.shape() != (4, 4) {
            return Err(Error::DimensionMismatch {
                expected: (4, 4),
                found: f.shape(),
            });
        }
        product = product.matmul(f)?;
    }
    let m = &u.matrix;
    let (pivot, _) = m
        .as_slice()
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (k, z)| if z.norm() > best.1 { (k, z.norm()) } else { best });
    let (r, c) = (pivot / 4, pivot % 4);
    let phase = if product[(r, c)].norm() > 1e-12 {
        let ratio = m[(r, c)] / product[(r, c)];
        ratio / ratio.norm()
    } else {
        ONE
    };
    Ok(m.max_diff(&product.scale(phase)))
}

/// Standard gates in the (kept, flag) basis.
pub mod gates {
    use super::*;

    /// CNOT with the kept qubit as control.
    pub fn cnot_keep_to_flag() -> ComplexMatrix {
        real4(
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, 1.0, 0.0],
            ],
            1.0,
        )
    }

    /// CNOT with the flag qubit as control.
    pub fn cnot_flag_to_keep() -> ComplexMatrix {
        real4(
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
            ],
            1.0,
        )
    }

    pub fn hadamard() -> ComplexMatrix {
        ComplexMatrix::from_real_rows([[1.0, 1.0], [1.0, -1.0]]).scale_real(FRAC_1_SQRT_2)
    }

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows([[0.0, 1.0], [1.0, 0.0]])
    }

    /// `diag(e^{-iθ/2}, e^{iθ/2})`
    pub fn rz(theta: f64) -> ComplexMatrix {
        ComplexMatrix::from_complex_rows([
            [Complex64::from_polar(1.0, -theta / 2.0), ZERO],
            [ZERO, Complex64::from_polar(1.0, theta / 2.0)],
        ])
    }

    pub fn on_keep(g: &ComplexMatrix) -> ComplexMatrix {
        qmat::tensor(g, &ComplexMatrix::identity(2))
    }

    pub fn on_flag(g: &ComplexMatrix) -> ComplexMatrix {
        qmat::tensor(&ComplexMatrix::identity(2), g)
    }
}
