//! Dense complex matrices with qubit-indexed tensor operations.
//!
//! Basis convention: qubit 0 is the most significant bit of a basis label, so
//! `|q0 q1 ... q(n-1)>` maps to the integer `q0*2^(n-1) + ... + q(n-1)`.
//! Matrices here never exceed 64x64, so storage is dense and row-major.

mod eigen;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

pub use eigen::hermitian_eigenvalues;

use crate::error::{Error, Result};

/// Tolerance used by validity checks unless the caller supplies one.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Lowest eigenvalue accepted as positive semidefinite. Never clipped.
pub const PSD_TOL: f64 = 1e-9;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: (rows, cols),
                found: (data.len(), 1),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Square matrix from nested real rows. Panics on ragged input; meant for
    /// literals.
    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self {
            rows: N,
            cols: N,
            data,
        }
    }

    pub fn from_complex_rows<const N: usize>(rows: [[Complex64; N]; N]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self {
            rows: N,
            cols: N,
            data,
        }
    }

    /// `|v><w|`
    pub fn outer(v: &[Complex64], w: &[Complex64]) -> Self {
        let mut m = Self::zeros(v.len(), w.len());
        for (i, vi) in v.iter().enumerate() {
            for (j, wj) in w.iter().enumerate() {
                m[(i, j)] = vi * wj.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    /// Max-norm of `self - other`; dimensions must agree.
    pub fn max_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: (self.cols, rhs.cols),
                found: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, a) in self.row(i).iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Max-norm distance of `self` from its conjugate transpose.
    pub fn hermiticity_residual(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    fn check_square_qubits(&self, n: usize) -> Result<()> {
        let dim = 1usize << n;
        if self.rows != dim || self.cols != dim {
            return Err(Error::DimensionMismatch {
                expected: (dim, dim),
                found: self.shape(),
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in mul")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// A qubit position in an n-qubit register; 0 is the leftmost tensor factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitIndex(pub usize);

impl From<usize> for QubitIndex {
    fn from(v: usize) -> Self {
        QubitIndex(v)
    }
}

/// Kronecker product. Combined index is `i_a * b.rows + i_b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for ia in 0..a.rows {
        for ja in 0..a.cols {
            let x = a[(ia, ja)];
            if x == ZERO {
                continue;
            }
            for ib in 0..b.rows {
                for jb in 0..b.cols {
                    out[(ia * b.rows + ib, ja * b.cols + jb)] = x * b[(ib, jb)];
                }
            }
        }
    }
    out
}

#[inline]
fn bit(index: usize, pos: usize, n: usize) -> usize {
    (index >> (n - 1 - pos)) & 1
}

/// Reorders qubits: `perm[k]` is the source position of the qubit that ends
/// up at position `k`. Entries are moved, never combined.
pub fn permute_qubits(m: &ComplexMatrix, perm: &[QubitIndex], n: usize) -> Result<ComplexMatrix> {
    m.check_square_qubits(n)?;
    if perm.len() != n {
        return Err(Error::InvalidPermutation);
    }
    let mut seen = vec![false; n];
    for p in perm {
        if p.0 >= n || seen[p.0] {
            return Err(Error::InvalidPermutation);
        }
        seen[p.0] = true;
    }
    let dim = 1usize << n;
    // target[src] = index of the same basis state after relabeling
    let target: Vec<usize> = (0..dim)
        .map(|src| {
            perm.iter()
                .enumerate()
                .fold(0usize, |acc, (k, p)| acc | (bit(src, p.0, n) << (n - 1 - k)))
        })
        .collect();
    let mut out = ComplexMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            out[(target[r], target[c])] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Inverse of a qubit permutation in the `permute_qubits` convention.
pub fn invert_permutation(perm: &[QubitIndex]) -> Vec<QubitIndex> {
    let mut inv = vec![QubitIndex(0); perm.len()];
    for (k, p) in perm.iter().enumerate() {
        inv[p.0] = QubitIndex(k);
    }
    inv
}

/// Traces out every qubit not in `keep`. Kept qubits retain their relative
/// order.
pub fn partial_trace(rho: &ComplexMatrix, keep: &[QubitIndex], n: usize) -> Result<ComplexMatrix> {
    rho.check_square_qubits(n)?;
    let mut kept: Vec<usize> = keep.iter().map(|q| q.0).collect();
    kept.sort_unstable();
    kept.dedup();
    if kept.iter().any(|&q| q >= n) {
        return Err(Error::QubitOutOfRange { qubit: *kept.last().unwrap_or(&n), n });
    }
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let compose = |k_bits: usize, t_bits: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in kept.iter().enumerate() {
            idx |= ((k_bits >> (kept.len() - 1 - pos)) & 1) << (n - 1 - q);
        }
        for (pos, &q) in traced.iter().enumerate() {
            idx |= ((t_bits >> (traced.len() - 1 - pos)) & 1) << (n - 1 - q);
        }
        idx
    };
    let out_dim = 1usize << kept.len();
    let tr_dim = 1usize << traced.len();
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for r in 0..out_dim {
        for c in 0..out_dim {
            out[(r, c)] = (0..tr_dim).map(|t| rho[(compose(r, t), compose(c, t))]).sum();
        }
    }
    Ok(out)
}

fn check_local(m: &ComplexMatrix, gate: &ComplexMatrix, first: usize, n: usize) -> Result<usize> {
    m.check_square_qubits(n)?;
    let k = gate.rows.trailing_zeros() as usize;
    if !gate.is_square() || gate.rows != 1 << k {
        return Err(Error::DimensionMismatch {
            expected: (1 << k, 1 << k),
            found: gate.shape(),
        });
    }
    if first + k > n {
        return Err(Error::QubitOutOfRange { qubit: first + k - 1, n });
    }
    Ok(k)
}

/// `(I ⊗ gate ⊗ I) · m` where `gate` acts on the contiguous qubits starting
/// at `first`.
pub fn apply_local_left(
    m: &ComplexMatrix,
    gate: &ComplexMatrix,
    first: usize,
    n: usize,
) -> Result<ComplexMatrix> {
    let k = check_local(m, gate, first, n)?;
    let dim = 1usize << n;
    let gdim = 1usize << k;
    let shift = n - first - k;
    let mask = (gdim - 1) << shift;
    let mut out = ComplexMatrix::zeros(dim, m.cols);
    let mut rows_idx = vec![0usize; gdim];
    for base in (0..dim).filter(|r| r & mask == 0) {
        for (s, slot) in rows_idx.iter_mut().enumerate() {
            *slot = base | (s << shift);
        }
        for c in 0..m.cols {
            for (a, &ra) in rows_idx.iter().enumerate() {
                let mut acc = ZERO;
                for (b, &rb) in rows_idx.iter().enumerate() {
                    acc += gate[(a, b)] * m[(rb, c)];
                }
                out[(ra, c)] = acc;
            }
        }
    }
    Ok(out)
}

/// `G m G†` for `G = I ⊗ gate ⊗ I`.
pub fn conjugate_local(
    m: &ComplexMatrix,
    gate: &ComplexMatrix,
    first: usize,
    n: usize,
) -> Result<ComplexMatrix> {
    let left = apply_local_left(m, gate, first, n)?;
    // X G† = (G X†)†
    Ok(apply_local_left(&left.adjoint(), gate, first, n)?.adjoint())
}

/// Depolarizes the contiguous block of `k` qubits starting at `first`:
/// `rho -> (1 - lambda) rho + lambda (I/2^k ⊗ Tr_block rho)`.
pub fn depolarize_block(
    rho: &ComplexMatrix,
    first: usize,
    k: usize,
    n: usize,
    lambda: f64,
) -> Result<ComplexMatrix> {
    rho.check_square_qubits(n)?;
    if k == 0 || first + k > n {
        return Err(Error::QubitOutOfRange { qubit: first + k, n });
    }
    let dim = 1usize << n;
    let bdim = 1usize << k;
    let shift = n - first - k;
    let mask = (bdim - 1) << shift;
    let mut out = rho.scale_real(1.0 - lambda);
    let weight = lambda / bdim as f64;
    for r in (0..dim).filter(|r| r & mask == 0) {
        for c in (0..dim).filter(|c| c & mask == 0) {
            let reduced: Complex64 = (0..bdim)
                .map(|s| rho[(r | (s << shift), c | (s << shift))])
                .sum();
            let add = reduced * weight;
            for s in 0..bdim {
                out[(r | (s << shift), c | (s << shift))] += add;
            }
        }
    }
    Ok(out)
}

/// True iff the max-norm of `m m† - I` is below `tol`.
pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> bool {
    unitarity_residual(m).is_some_and(|r| r < tol)
}

/// Max-norm of `m m† - I`; `None` for non-square input.
pub fn unitarity_residual(m: &ComplexMatrix) -> Option<f64> {
    if !m.is_square() {
        return None;
    }
    let prod = m * &m.adjoint();
    Some(prod.max_diff(&ComplexMatrix::identity(m.rows)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityReport {
    pub hermitian: bool,
    pub unit_trace: bool,
    pub positive: bool,
    pub min_eigenvalue: f64,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.hermitian && self.unit_trace && self.positive
    }
}

/// Checks Hermiticity and unit trace at `tol`, and eigenvalues `>= -tol`.
pub fn validate_density(rho: &ComplexMatrix, tol: f64) -> ValidityReport {
    assert!(rho.is_square(), "validate_density needs a square matrix");
    let hermitian = rho.hermiticity_residual() < tol;
    let tr = rho.trace();
    let unit_trace = (tr.re - 1.0).abs() < tol && tr.im.abs() < tol;
    // eigenvalues of the Hermitian part; a non-Hermitian input is already
    // flagged above
    let herm = (&rho.clone() + &rho.adjoint()).scale_real(0.5);
    let min_eigenvalue = hermitian_eigenvalues(&herm)
        .first()
        .copied()
        .unwrap_or(f64::NAN);
    ValidityReport {
        hermitian,
        unit_trace,
        positive: min_eigenvalue >= -tol,
        min_eigenvalue,
    }
}
