//! Dense complex matrices, Hermitian operators and their spectral calculus.
//!
//! Every other module reduces to the primitives here: eigendecompositions of
//! Hermitian operators, real functional calculus `f(A) = V diag(f(λ)) V*`,
//! operator-order certification with an eigenvector witness, Kronecker
//! products and the swap unitary on `C^n ⊗ C^n`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Relative tolerance on `‖A − A*‖ / ‖A‖` accepted at construction.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Relative tolerance on `‖V diag(λ) V* − A‖` and `‖V*V − 1‖`.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
/// Largest row or column count `kron` and `flip_operator` will build.
pub const DEFAULT_SIZE_LIMIT: usize = 4096;

const EIG_MAX_ITER: usize = 100_000;

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn check_finite(m: &ComplexMatrix) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

/// Hilbert–Schmidt (Frobenius) norm.
pub fn hs_norm(m: &ComplexMatrix) -> f64 {
    m.norm()
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn real_diagonal(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c64(v, 0.0)),
    ))
}

/// A square matrix equal to its adjoint, stored symmetrized as `(A + A*)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, HERMITICITY_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        check_finite(&matrix)?;
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let adj = matrix.adjoint();
        let scale = matrix.norm().max(f64::MIN_POSITIVE);
        let residual = (&matrix - &adj).norm() / scale;
        if residual > tol {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self::symmetrized(matrix))
    }

    /// Symmetrizes without checking; for products of commuting Hermitian
    /// operators and other cases Hermitian by construction.
    pub(crate) fn symmetrized(matrix: ComplexMatrix) -> Self {
        let adj = matrix.adjoint();
        Self {
            matrix: (matrix + adj) * c64(0.5, 0.0),
        }
    }

    pub fn from_real_diagonal(values: &[f64]) -> Self {
        Self {
            matrix: real_diagonal(values),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn norm(&self) -> f64 {
        operator_norm(&self.matrix)
    }

    pub fn eig(&self) -> Result<SpectralDecomposition> {
        eig_hermitian(self)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            matrix: &self.matrix * c64(s, 0.0),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self {
            matrix: &self.matrix - &other.matrix,
        })
    }

    /// Conjugation `W* A W` by an isometry (or any matrix) `W`.
    pub fn compress(&self, w: &ComplexMatrix) -> Self {
        Self::symmetrized(w.adjoint() * &self.matrix * w)
    }

    /// Quadratic form `⟨A ξ, ξ⟩`, real for Hermitian `A`.
    pub fn expectation(&self, xi: &ComplexVector) -> f64 {
        xi.dotc(&(&self.matrix * xi)).re
    }
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Eigenvalues ascending, eigenvectors as the columns of a unitary matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> ComplexVector {
        self.eigenvectors.column(i).into_owned()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.weighted(|l| c64(l, 0.0))
    }

    /// `V diag(f(λ)) V*` for a complex-valued `f`; the result is normal but
    /// generally not Hermitian (e.g. `e^{itA}`).
    pub fn apply_complex<F: Fn(f64) -> C64>(&self, f: F) -> ComplexMatrix {
        self.weighted(f)
    }

    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> Result<HermitianOperator> {
        apply_function(self, f)
    }

    fn weighted<F: Fn(f64) -> C64>(&self, f: F) -> ComplexMatrix {
        let weights: Vec<C64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.weighted_values(&weights)
    }

    fn weighted_values(&self, weights: &[C64]) -> ComplexMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &w) in weights.iter().enumerate() {
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= w);
        }
        scaled * self.eigenvectors.adjoint()
    }

    /// `‖V*V − 1‖` in Frobenius norm.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.dim();
        (self.eigenvectors.adjoint() * &self.eigenvectors - ComplexMatrix::identity(n, n)).norm()
    }

    /// Orthogonal projection onto the span of eigenvectors whose eigenvalue
    /// satisfies `keep`.
    pub fn spectral_projection<F: Fn(f64) -> bool>(&self, keep: F) -> HermitianOperator {
        HermitianOperator {
            matrix: self.weighted(|l| if keep(l) { c64(1.0, 0.0) } else { C64::default() }),
        }
    }
}

pub fn eig_hermitian(a: &HermitianOperator) -> Result<SpectralDecomposition> {
    check_finite(a.matrix())?;
    let n = a.dim();
    let eig = SymmetricEigen::try_new(a.matrix().clone(), f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::NoConvergence);
    }
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        fix_phase(&mut col);
        eigenvectors.set_column(dst, &col);
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Rotates the global phase so the first component of non-negligible
/// magnitude is real and positive.
pub(crate) fn fix_phase(v: &mut ComplexVector) {
    let scale = v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if scale == 0.0 {
        return;
    }
    if let Some(pivot) = v.iter().find(|z| z.norm() > 1e-8 * scale) {
        let phase = pivot.conj() / pivot.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

pub fn apply_function<F: Fn(f64) -> f64>(
    dec: &SpectralDecomposition,
    f: F,
) -> Result<HermitianOperator> {
    let mut values = Vec::with_capacity(dec.dim());
    for &l in dec.eigenvalues() {
        let v = f(l);
        if !v.is_finite() {
            return Err(Error::DomainError { eigenvalue: l });
        }
        values.push(v);
    }
    let weights: Vec<C64> = values.into_iter().map(|v| c64(v, 0.0)).collect();
    Ok(HermitianOperator::symmetrized(dec.weighted_values(&weights)))
}

/// Outcome of an operator-order test `A ≤ B`.
#[derive(Debug, Clone)]
pub struct PsdWitness {
    pub holds: bool,
    /// Smallest eigenvalue of `B − A`.
    pub min_eigenvalue: f64,
    /// Eigenvector attaining `min_eigenvalue`.
    pub eigenvector: ComplexVector,
    /// Acceptance floor `−tol · max(1, ‖B − A‖)`.
    pub threshold: f64,
}

/// Certifies `A ≤ B` in operator order: the minimum eigenvalue of `B − A`
/// must be at least `−tol · max(1, ‖B − A‖)`.
pub fn psd_leq(a: &HermitianOperator, b: &HermitianOperator, tol: f64) -> Result<PsdWitness> {
    let diff = b.sub(a)?;
    let dec = diff.eig()?;
    let scale = dec.max().abs().max(dec.min().abs()).max(1.0);
    let threshold = -tol * scale;
    let min_eigenvalue = dec.min();
    Ok(PsdWitness {
        holds: min_eigenvalue >= threshold,
        min_eigenvalue,
        eigenvector: dec.eigenvector(0),
        threshold,
    })
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron_with_limit(a, b, DEFAULT_SIZE_LIMIT)
}

pub fn kron_with_limit(a: &ComplexMatrix, b: &ComplexMatrix, limit: usize) -> Result<ComplexMatrix> {
    check_finite(a)?;
    check_finite(b)?;
    let rows = a.nrows().saturating_mul(b.nrows());
    let cols = a.ncols().saturating_mul(b.ncols());
    let dim = rows.max(cols);
    if dim > limit {
        return Err(Error::SizeOverflow { dim, limit });
    }
    Ok(a.kronecker(b))
}

/// The swap unitary `F(ξ ⊗ η) = η ⊗ ξ` on `C^n ⊗ C^n`.
pub fn flip_operator(n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("flip_operator needs n >= 1".into()));
    }
    let dim = n.saturating_mul(n);
    if dim > DEFAULT_SIZE_LIMIT {
        return Err(Error::SizeOverflow {
            dim,
            limit: DEFAULT_SIZE_LIMIT,
        });
    }
    let mut f = ComplexMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            f[(j * n + i, i * n + j)] = c64(1.0, 0.0);
        }
    }
    Ok(f)
}

/// Row-major vectorization `vec(Y)[i·n + j] = Y[i, j]`.
pub fn vectorize(y: &ComplexMatrix) -> ComplexVector {
    let (r, c) = y.shape();
    ComplexVector::from_iterator(r * c, (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).map(|ij| y[ij]))
}

pub fn unvectorize(v: &ComplexVector, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// Moore–Penrose style inverse on the support: eigenvalues with
/// `|λ| ≤ cutoff` map to zero.
pub fn pseudo_inverse(a: &HermitianOperator, cutoff: f64) -> Result<HermitianOperator> {
    a.eig()?
        .apply(|l| if l.abs() > cutoff { 1.0 / l } else { 0.0 })
}

pub(crate) fn real_matrix_min_eigen(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    if m.nrows() == 0 {
        return Ok((f64::INFINITY, DVector::zeros(0)));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, EIG_MAX_ITER).ok_or(Error::NoConvergence)?;
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    Ok((val, eig.eigenvectors.column(idx).into_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_contraction, random_selfadjoint};

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)])
    }

    #[test]
    fn diagonal_spectrum() {
        let a = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let dec = a.eig().unwrap();
        assert_eq!(dec.eigenvalues(), &[0.0, 1.0]);
        assert!((dec.eigenvectors() - ComplexMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn pauli_x_spectrum() {
        let dec = HermitianOperator::new(pauli_x()).unwrap().eig().unwrap();
        assert!((dec.eigenvalues()[0] + 1.0).abs() < 1e-15);
        assert!((dec.eigenvalues()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_reconstruction() {
        let a = random_selfadjoint(4, 7);
        let dec = a.eig().unwrap();
        assert!((dec.reconstruct() - a.matrix()).norm() < 1e-12);
        assert!(dec.orthonormality_residual() < 1e-12);
        assert!(dec.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = ComplexMatrix::identity(2, 2);
        m[(0, 0)] = c64(f64::NAN, 0.0);
        assert_eq!(HermitianOperator::new(m).unwrap_err(), Error::NonFinite);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn exp_of_diagonal() {
        let dec = HermitianOperator::from_real_diagonal(&[0.0, 1.0]).eig().unwrap();
        let e = apply_function(&dec, f64::exp).unwrap();
        let expected = real_diagonal(&[1.0, std::f64::consts::E]);
        assert!((e.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn identity_function_reproduces_input() {
        let a = random_selfadjoint(3, 1);
        let out = apply_function(&a.eig().unwrap(), |l| l).unwrap();
        assert!((out.matrix() - a.matrix()).norm() < 1e-14 * a.norm().max(1.0) * 10.0);
    }

    #[test]
    fn inverse_pair_round_trip() {
        let a = random_selfadjoint(4, 2);
        let dec = a.eig().unwrap();
        let down = apply_function(&dec, |l| (-l).exp()).unwrap();
        let up = apply_function(&dec, f64::exp).unwrap();
        let prod = down.matrix() * up.matrix();
        assert!((prod - ComplexMatrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn log_of_zero_is_domain_error() {
        let dec = HermitianOperator::from_real_diagonal(&[0.0, 1.0]).eig().unwrap();
        assert!(matches!(apply_function(&dec, f64::ln), Err(Error::DomainError { eigenvalue }) if eigenvalue == 0.0));
    }

    #[test]
    fn psd_leq_basic() {
        let zero = HermitianOperator::zeros(2);
        let one = HermitianOperator::identity(2);
        let w = psd_leq(&zero, &one, 1e-12).unwrap();
        assert!(w.holds);
        assert!((w.min_eigenvalue - 1.0).abs() < 1e-15);
        let w = psd_leq(&one, &zero, 1e-12).unwrap();
        assert!(!w.holds);
        assert!((w.min_eigenvalue + 1.0).abs() < 1e-15);
        assert!(matches!(
            psd_leq(&one, &HermitianOperator::identity(3), 1e-12),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kron_examples() {
        let i2 = ComplexMatrix::identity(2, 2);
        assert_eq!(kron(&i2, &i2).unwrap(), ComplexMatrix::identity(4, 4));
        let (a, b, c, d) = (2.0, 3.0, 5.0, 7.0);
        let k = kron(&real_diagonal(&[a, b]), &real_diagonal(&[c, d])).unwrap();
        assert_eq!(k, real_diagonal(&[a * c, a * d, b * c, b * d]));
    }

    #[test]
    fn kron_mixed_product() {
        let m: Vec<_> = (0..4).map(|i| random_contraction(2, 3 + i)).collect();
        let lhs = kron(&m[0], &m[1]).unwrap() * kron(&m[2], &m[3]).unwrap();
        let rhs = kron(&(&m[0] * &m[2]), &(&m[1] * &m[3])).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn kron_overflow() {
        let a = ComplexMatrix::identity(100, 100);
        assert!(matches!(kron(&a, &a), Err(Error::SizeOverflow { dim: 10000, .. })));
    }

    #[test]
    fn flip_examples() {
        assert_eq!(flip_operator(1).unwrap(), ComplexMatrix::identity(1, 1));
        let f = flip_operator(2).unwrap();
        // |01> <-> |10>, i.e. indices 1 and 2
        let mut expected = ComplexMatrix::identity(4, 4);
        expected.swap_rows(1, 2);
        assert_eq!(f, expected);
        assert!(flip_operator(0).is_err());
        assert!(matches!(flip_operator(70), Err(Error::SizeOverflow { .. })));
    }

    #[test]
    fn flip_intertwines_tensor_factors() {
        let f = flip_operator(3).unwrap();
        let x = random_contraction(3, 5);
        let y = random_contraction(3, 6);
        let lhs = &f * kron(&x, &y).unwrap();
        let rhs = kron(&y, &x).unwrap() * &f;
        assert!((lhs - rhs).norm() < 1e-12);
        assert!((&f * &f - ComplexMatrix::identity(9, 9)).norm() == 0.0);
    }

    #[test]
    fn vectorize_left_and_right_multiplication() {
        let x = random_contraction(3, 11);
        let y = random_contraction(3, 12);
        let b = random_contraction(3, 13);
        let i3 = ComplexMatrix::identity(3, 3);
        let left = kron(&x, &i3).unwrap() * vectorize(&y);
        assert!((left - vectorize(&(&x * &y))).norm() < 1e-14);
        let right = kron(&i3, &b.transpose()).unwrap() * vectorize(&y);
        assert!((right - vectorize(&(&y * &b))).norm() < 1e-14);
        assert_eq!(unvectorize(&vectorize(&y), 3, 3), y);
    }
}
