//! Dense helpers on top of nalgebra's SVD.

use nalgebra::{DMatrix, DVector, SVD};

fn svd_square_or_tall(a: &DMatrix<f64>) -> SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    // Pad with zero rows so that V^T is n x n and the whole kernel is visible.
    let (m, n) = a.shape();
    if m >= n {
        SVD::new(a.clone(), true, true)
    } else {
        let mut padded = DMatrix::zeros(n, n);
        padded.view_mut((0, 0), (m, n)).copy_from(a);
        SVD::new(padded, true, true)
    }
}

fn threshold(sv: &DVector<f64>, tol: f64) -> f64 {
    tol * sv.iter().copied().fold(0.0, f64::max)
}

/// Numerical rank: singular values above `tol * sigma_max`.
pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = SVD::new(a.clone(), false, false).singular_values;
    let t = threshold(&sv, tol);
    sv.iter().filter(|&&s| s > t && s > 0.0).count()
}

/// Orthonormal basis of `{x : A x = 0}` as columns.
pub fn nullspace(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return DMatrix::identity(n, n);
    }
    let svd = svd_square_or_tall(a);
    let t = threshold(&svd.singular_values, tol);
    let v_t = svd.v_t.as_ref().expect("V computed");
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&i| !(svd.singular_values[i] > t && svd.singular_values[i] > 0.0))
        .map(|i| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormal basis of the column space of `a`.
pub fn range_basis(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let m = a.nrows();
    if a.ncols() == 0 || m == 0 {
        return DMatrix::zeros(m, 0);
    }
    let svd = SVD::new(a.clone(), true, false);
    let t = threshold(&svd.singular_values, tol);
    let u = svd.u.as_ref().expect("U computed");
    let cols: Vec<DVector<f64>> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > t && svd.singular_values[i] > 0.0)
        .map(|i| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(m, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Minimum-norm least-squares solution of `A x = b`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> DVector<f64> {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return DVector::zeros(n);
    }
    let svd = SVD::new(a.clone(), true, true);
    let eps = threshold(&svd.singular_values, tol);
    svd.solve(b, eps).expect("U and V computed")
}

/// `|| Q2 - Q1 Q1^T Q2 ||_F` for orthonormal bases `q1`, `q2`; zero iff
/// `span(q2)` lies inside `span(q1)`.
pub fn span_gap(q1: &DMatrix<f64>, q2: &DMatrix<f64>) -> f64 {
    if q2.ncols() == 0 {
        return 0.0;
    }
    if q1.ncols() == 0 {
        return q2.norm();
    }
    (q2 - q1 * (q1.transpose() * q2)).norm()
}

/// Whether two orthonormal bases span the same subspace.
pub fn same_span(q1: &DMatrix<f64>, q2: &DMatrix<f64>, tol: f64) -> bool {
    q1.ncols() == q2.ncols() && span_gap(q1, q2) <= tol && span_gap(q2, q1) <= tol
}

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.amax()
}
