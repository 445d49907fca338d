//! Input states, perturbations and the GHZ fidelity.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::qmat::{self, ComplexMatrix, DEFAULT_TOL, PSD_TOL, ZERO};

/// Dimension of the three-qubit Hilbert space.
pub const DIM: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Normalizes `amplitudes`; fails on a zero vector.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = libm::sqrt(amplitudes.iter().map(|a| a.norm_sqr()).sum());
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.inner(self).re)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix(ComplexMatrix::outer(&self.amplitudes, &self.amplitudes))
    }

    /// `<self|m|self>`
    pub fn expectation(&self, m: &ComplexMatrix) -> Complex64 {
        let mut acc = ZERO;
        for (i, a) in self.amplitudes.iter().enumerate() {
            for (j, b) in self.amplitudes.iter().enumerate() {
                acc += a.conj() * m[(i, j)] * b;
            }
        }
        acc
    }
}

/// `(|000> + |111>)/√2`
pub fn ghz() -> PureState {
    let mut amplitudes = vec![ZERO; DIM];
    amplitudes[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amplitudes[7] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    PureState { amplitudes }
}

/// `(|000> - |111>)/√2`
pub fn ghz_minus() -> PureState {
    let mut amplitudes = vec![ZERO; DIM];
    amplitudes[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amplitudes[7] = Complex64::new(-FRAC_1_SQRT_2, 0.0);
    PureState { amplitudes }
}

pub fn ghz_density() -> DensityMatrix {
    ghz().to_density()
}

/// A validated density matrix: Hermitian and unit trace within
/// [`DEFAULT_TOL`], no eigenvalue below `-PSD_TOL`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() || !m.rows().is_power_of_two() {
            return Err(Error::InvalidInput("density matrix must be 2^n x 2^n"));
        }
        let herm = m.hermiticity_residual();
        if herm >= DEFAULT_TOL {
            return Err(Error::InvalidInput("not Hermitian"));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() >= DEFAULT_TOL || tr.im.abs() >= DEFAULT_TOL {
            return Err(Error::InvalidInput("trace differs from 1"));
        }
        let min_eigenvalue = qmat::hermitian_eigenvalues(&m)[0];
        if min_eigenvalue < -PSD_TOL {
            return Err(Error::NonPositiveState { min_eigenvalue });
        }
        Ok(Self(m))
    }

    /// For outputs of maps that provably preserve validity.
    pub(crate) fn from_matrix_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }
}

impl AsRef<ComplexMatrix> for DensityMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// `<GHZ|rho|GHZ>` for a three-qubit matrix.
pub fn fidelity(rho: &DensityMatrix) -> f64 {
    fidelity_of(rho.matrix())
}

pub(crate) fn fidelity_of(m: &ComplexMatrix) -> f64 {
    debug_assert_eq!(m.shape(), (DIM, DIM));
    0.5 * (m[(0, 0)] + m[(0, 7)] + m[(7, 0)] + m[(7, 7)]).re
}

/// Normalized `|GHZ> + eps_c Σ w_k |k>`, returned as a density matrix.
pub fn coherent_input(eps_c: f64, components: &[(usize, Complex64)]) -> Result<DensityMatrix> {
    if !(eps_c >= 0.0) || !eps_c.is_finite() {
        return Err(Error::ParameterOutOfRange {
            name: "eps_c",
            value: eps_c,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    let mut amplitudes = ghz().amplitudes;
    for &(idx, w) in components {
        if idx >= DIM {
            return Err(Error::BasisIndexOutOfRange(idx));
        }
        amplitudes[idx] += w * eps_c;
    }
    Ok(PureState::normalized(amplitudes)?.to_density())
}

/// The default coherent family: `N(|GHZ> + eps_c|001> + eps_c|110>)`.
pub fn coherent_pair_input(eps_c: f64) -> Result<DensityMatrix> {
    coherent_input(eps_c, &[(1, Complex64::new(1.0, 0.0)), (6, Complex64::new(1.0, 0.0))])
}

/// `(1 - eps_w) rho_GHZ + (eps_w / 8) I`
pub fn white_noise_input(eps_w: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eps_w) {
        return Err(Error::ParameterOutOfRange {
            name: "eps_w",
            value: eps_w,
            min: 0.0,
            max: 1.0,
        });
    }
    Ok(DensityMatrix(ghz_identity_matrix(1.0 - eps_w, eps_w / DIM as f64)))
}

fn ghz_identity_matrix(w_ghz: f64, w_id: f64) -> ComplexMatrix {
    &ghz_density().0.scale_real(w_ghz) + &ComplexMatrix::identity(DIM).scale_real(w_id)
}

/// `w_ghz rho_GHZ + w_id I`, e.g. `0.8 rho_GHZ + 0.025 I`. The weights must
/// give a valid state (`w_ghz + 8 w_id = 1`).
pub fn ghz_identity_mixture(w_ghz: f64, w_id: f64) -> Result<DensityMatrix> {
    DensityMatrix::new(ghz_identity_matrix(w_ghz, w_id))
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    /// `N(|GHZ> + eps |direction>)` with `direction` orthogonal to GHZ.
    Coherent { epsilon: f64, direction: PureState },
    /// `(1 - eps) rho_GHZ + eps I/8`
    White { epsilon: f64 },
    /// `rho_GHZ + eps M` with `M` traceless Hermitian.
    Custom { epsilon: f64, m: ComplexMatrix },
}

impl NoiseSpec {
    pub fn epsilon(&self) -> f64 {
        match self {
            NoiseSpec::Coherent { epsilon, .. }
            | NoiseSpec::White { epsilon }
            | NoiseSpec::Custom { epsilon, .. } => *epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.epsilon();
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::ParameterOutOfRange {
                name: "epsilon",
                value: eps,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
        match self {
            NoiseSpec::Coherent { direction, .. } => {
                if direction.dim() != DIM {
                    return Err(Error::InvalidPerturbation("coherent direction must be 8-dimensional"));
                }
                if ghz().inner(direction).norm() >= DEFAULT_TOL {
                    return Err(Error::InvalidPerturbation("coherent direction not orthogonal to GHZ"));
                }
            }
            NoiseSpec::White { epsilon } => {
                if *epsilon > 1.0 {
                    return Err(Error::ParameterOutOfRange {
                        name: "eps_w",
                        value: *epsilon,
                        min: 0.0,
                        max: 1.0,
                    });
                }
            }
            NoiseSpec::Custom { m, .. } => check_traceless_hermitian(m)?,
        }
        Ok(())
    }

    /// The first-order perturbation `M_eps`. For coherent noise this is
    /// `|Ψ><GHZ| + h.c.`; for white noise `I/8 - rho_GHZ`.
    pub fn perturbation_matrix(&self) -> ComplexMatrix {
        match self {
            NoiseSpec::Coherent { direction, .. } => coherent_perturbation(direction),
            NoiseSpec::White { .. } => white_perturbation(),
            NoiseSpec::Custom { m, .. } => m.clone(),
        }
    }
}

/// `|Ψ><GHZ| + |GHZ><Ψ|`
pub fn coherent_perturbation(direction: &PureState) -> ComplexMatrix {
    let g = ghz();
    let a = ComplexMatrix::outer(direction.amplitudes(), g.amplitudes());
    &a + &a.adjoint()
}

/// `I/8 - rho_GHZ`
pub fn white_perturbation() -> ComplexMatrix {
    &ComplexMatrix::identity(DIM).scale_real(1.0 / DIM as f64) - ghz_density().matrix()
}

pub fn check_traceless_hermitian(m: &ComplexMatrix) -> Result<()> {
    if m.shape() != (DIM, DIM) {
        return Err(Error::DimensionMismatch {
            expected: (DIM, DIM),
            found: m.shape(),
        });
    }
    if m.hermiticity_residual() >= DEFAULT_TOL {
        return Err(Error::InvalidPerturbation("M is not Hermitian"));
    }
    if m.trace().norm() >= DEFAULT_TOL {
        return Err(Error::InvalidPerturbation("M is not traceless"));
    }
    Ok(())
}

/// Builds the perturbed input. Coherent inputs are exact normalized pure
/// states, not the first-order `rho_GHZ + eps M` approximation.
pub fn perturbed_input(spec: &NoiseSpec) -> Result<DensityMatrix> {
    spec.validate()?;
    match spec {
        NoiseSpec::Coherent { epsilon, direction } => {
            let amplitudes = ghz()
                .amplitudes
                .iter()
                .zip(direction.amplitudes())
                .map(|(g, d)| g + d * *epsilon)
                .collect();
            Ok(PureState::normalized(amplitudes)?.to_density())
        }
        NoiseSpec::White { epsilon } => white_noise_input(*epsilon),
        NoiseSpec::Custom { epsilon, m } => {
            DensityMatrix::new(&ghz_density().0 + &m.scale_real(*epsilon))
        }
    }
}

fn gaussian_hermitian(rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let mut x = ComplexMatrix::zeros(DIM, DIM);
    for i in 0..DIM {
        for j in 0..DIM {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            x[(i, j)] = Complex64::new(re, im);
        }
    }
    (&x + &x.adjoint()).scale_real(0.5)
}

/// Deterministic traceless Hermitian 8x8 matrix with max-norm `scale`.
///
/// Entries are standard normal draws from a ChaCha8 stream seeded with
/// `seed`; the matrix is Hermitized, de-traced, then rescaled.
pub fn random_traceless_hermitian(seed: u64, scale: f64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = gaussian_hermitian(&mut rng);
    let shift = h.trace() / DIM as f64;
    let h = &h - &ComplexMatrix::identity(DIM).scale(shift);
    let norm = h.max_norm();
    if norm == 0.0 {
        return h;
    }
    let h = h.scale_real(scale / norm);
    // exact Hermitian symmetry after rounding
    (&h + &h.adjoint()).scale_real(0.5)
}

/// Traceless Hermitian `M` for which `rho_GHZ + eps M` stays a valid state
/// for small `eps`.
///
/// Starts from [`random_traceless_hermitian`], then lifts the block
/// orthogonal to GHZ until its smallest eigenvalue is `scale`, removing the
/// added trace from the GHZ population. Coherent (GHZ/orthogonal coupling)
/// and incoherent parts are both generic. At `scale = 1` the perturbed state
/// is valid at least up to `eps = 0.01`.
pub fn random_feasible_perturbation(seed: u64, scale: f64) -> ComplexMatrix {
    let h = random_traceless_hermitian(seed, scale);
    let g = ghz_density().0;
    let id = ComplexMatrix::identity(DIM);
    let perp = &id - &g;
    let block = &(&perp * &h) * &perp;
    // block has a zero eigenvalue along GHZ, so its minimum is <= 0
    let lowest = qmat::hermitian_eigenvalues(&block)[0].min(0.0);
    let lift = -lowest + scale;
    let lifted = &(&h + &perp.scale_real(lift)) - &g.scale_real(lift * (DIM - 1) as f64);
    (&lifted + &lifted.adjoint()).scale_real(0.5)
}
