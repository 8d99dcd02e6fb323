//! Complex spaces viewed as real ones: `C^m ≅ R^{2m}` via `v ↦ (Re v, Im v)`.
//! Real-linear maps (antiunitaries, real subspaces, quadratic forms on
//! real subspaces) are handled in this picture.

use nalgebra::{DMatrix, DVector};

use crate::operator::{c64, ComplexMatrix, ComplexVector};

pub fn to_real(v: &ComplexVector) -> DVector<f64> {
    let m = v.len();
    DVector::from_fn(2 * m, |i, _| if i < m { v[i].re } else { v[i - m].im })
}

pub fn from_real(x: &DVector<f64>) -> ComplexVector {
    let m = x.len() / 2;
    ComplexVector::from_fn(m, |i, _| c64(x[i], x[i + m]))
}

/// Real matrix of the complex-linear map `A`.
pub fn linear_rep(a: &ComplexMatrix) -> DMatrix<f64> {
    let (r, c) = a.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = a[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + c)] = -z.im;
            out[(i + r, j)] = z.im;
            out[(i + r, j + c)] = z.re;
        }
    }
    out
}

/// Real matrix of the antilinear map `x ↦ M conj(x)`.
pub fn antilinear_rep(m: &ComplexMatrix) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + c)] = z.im;
            out[(i + r, j)] = z.im;
            out[(i + r, j + c)] = -z.re;
        }
    }
    out
}

/// Multiplication by `i` on every column of a real-form basis.
pub fn times_i(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let m = basis.nrows() / 2;
    DMatrix::from_fn(basis.nrows(), basis.ncols(), |i, j| {
        if i < m {
            -basis[(i + m, j)]
        } else {
            basis[(i - m, j)]
        }
    })
}

/// Orthonormal basis (columns) of the column span of `a`, keeping singular
/// directions above `rel_tol · σ_max`.
pub fn orthonormal_span(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    if smax == 0.0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let mut idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel_tol * smax)
        .collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    DMatrix::from_fn(a.nrows(), idx.len(), |r, c| u[(r, idx[c])])
}

/// Orthonormal basis (columns) of the null space of a square real matrix,
/// keeping singular values `≤ abs_tol`.
pub fn kernel_basis(a: &DMatrix<f64>, abs_tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    // pad to square so V^T is complete
    let sq = if a.nrows() >= n {
        a.clone()
    } else {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    };
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= abs_tol)
        .collect();
    DMatrix::from_fn(n, idx.len(), |r, c| vt[(idx[c], r)])
}

/// `‖(1 − P_B) A‖_F` for orthonormal `B`: how far the columns of `A` stick
/// out of `span(B)`.
pub fn containment_residual(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() == 0 {
        return 0.0;
    }
    if b.ncols() == 0 {
        return a.norm();
    }
    let proj = b * (b.transpose() * a);
    (a - proj).norm()
}

/// Cosines of the principal angles between two subspaces with orthonormal
/// bases, descending.
pub fn principal_cosines(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    if a.ncols() == 0 || b.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = (a.transpose() * b).singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}
