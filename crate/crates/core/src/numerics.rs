//! Dense linear-algebra kernels shared by the solvers.
//!
//! Everything here is dense and sized for desk-scale problems (a few hundred
//! unknowns at most). Rank decisions are made from singular values against a
//! relative threshold `tol * sigma_max`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{OrexError, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default relative threshold for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative asymmetry accepted by the symmetric routines.
const SYMMETRY_TOL: f64 = 1e-12;

/// An eigenvalue together with a unit-norm eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigPair {
    pub value: f64,
    pub vector: Vector,
}

pub fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(OrexError::InvalidInput(format!("{what} has non-finite entries")))
    }
}

pub fn ensure_finite_vec(v: &Vector, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(OrexError::InvalidInput(format!("{what} has non-finite entries")))
    }
}

/// Build a matrix from row-major entries.
pub fn from_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<Matrix> {
    if rows * cols != entries.len() {
        return Err(OrexError::InvalidInput(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            entries.len()
        )));
    }
    let m = Matrix::from_row_slice(rows, cols, entries);
    ensure_finite(&m, "matrix")?;
    Ok(m)
}

/// Row-major copy of the entries.
pub fn to_rows(m: &Matrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Singular values of `m`, sorted in descending order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral norm (largest singular value); zero for empty matrices.
pub fn op_norm(m: &Matrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Vertically stack two matrices with the same column count.
pub fn vstack(top: &Matrix, bottom: &Matrix) -> Matrix {
    debug_assert_eq!(top.ncols(), bottom.ncols());
    let mut out = Matrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

/// Horizontally stack two matrices with the same row count.
pub fn hstack(left: &Matrix, right: &Matrix) -> Matrix {
    debug_assert_eq!(left.nrows(), right.nrows());
    let mut out = Matrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.columns_mut(0, left.ncols()).copy_from(left);
    out.columns_mut(left.ncols(), right.ncols()).copy_from(right);
    out
}

/// Block-diagonal matrix `[a 0; 0 b]`.
pub fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    out
}

/// Orthonormal basis of the numerical null space of `m`.
///
/// The returned matrix has `cols(m) - rank(m)` orthonormal columns, where the
/// rank counts singular values above `tol * sigma_max`.
pub fn nullspace_basis(m: &Matrix, tol: f64) -> Result<Matrix> {
    if !(tol > 0.0) {
        return Err(OrexError::InvalidInput("rank tolerance must be positive".into()));
    }
    ensure_finite(m, "matrix")?;
    let n = m.ncols();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    if m.nrows() == 0 {
        return Ok(Matrix::identity(n, n));
    }
    // Pad with zero rows so the SVD returns a full n x n right factor.
    let padded = if m.nrows() < n {
        let mut p = Matrix::zeros(n, n);
        p.rows_mut(0, m.nrows()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sigma = &svd.singular_values;
    let smax = sigma.iter().fold(0.0_f64, |a, &b| a.max(b));
    let threshold = tol * smax;
    let null_rows: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] <= threshold).collect();
    let mut basis = Matrix::zeros(n, null_rows.len());
    for (j, &i) in null_rows.iter().enumerate() {
        basis.set_column(j, &v_t.row(i).transpose());
    }
    Ok(basis)
}

/// Moore-Penrose pseudo-inverse with rank threshold `tol * sigma_max`.
pub fn pseudo_inverse(m: &Matrix, tol: f64) -> Result<Matrix> {
    ensure_finite(m, "matrix")?;
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok(Matrix::zeros(c, r));
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &b| a.max(b));
    let threshold = tol * smax;
    let u = svd.u.expect("requested left singular vectors");
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut pinv = Matrix::zeros(c, r);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > threshold && s > 0.0 {
            pinv += (v_t.row(i).transpose() * u.column(i).transpose()) / s;
        }
    }
    Ok(pinv)
}

/// Minimum-norm solution of `m x = y`.
///
/// Fails with [`OrexError::InconsistentData`] when `y` is not in the range of `m`
/// (relative residual above `1e-8`).
pub fn min_norm_solve(m: &Matrix, y: &Vector) -> Result<Vector> {
    if m.nrows() != y.len() {
        return Err(OrexError::InvalidInput(format!(
            "right-hand side has length {} but the matrix has {} rows",
            y.len(),
            m.nrows()
        )));
    }
    ensure_finite_vec(y, "right-hand side")?;
    let pinv = pseudo_inverse(m, DEFAULT_RANK_TOL)?;
    let x = &pinv * y;
    check_consistent(m, &x, y)?;
    Ok(x)
}

pub(crate) fn check_consistent(m: &Matrix, x: &Vector, y: &Vector) -> Result<()> {
    let residual = (m * x - y).norm();
    if residual > 1e-8 * (1.0 + y.norm()) {
        return Err(OrexError::InconsistentData(format!(
            "data lies outside the range of the observation map (residual {residual:.3e})"
        )));
    }
    Ok(())
}

fn check_symmetric(a: &Matrix, what: &str) -> Result<()> {
    if !a.is_square() {
        return Err(OrexError::InvalidInput(format!("{what} is not square")));
    }
    ensure_finite(a, what)?;
    let scale = a.amax().max(1.0);
    let asym = (a - a.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(OrexError::InvalidInput(format!(
            "{what} is not symmetric (asymmetry {asym:.3e})"
        )));
    }
    Ok(())
}

fn symmetrize(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix (zero for the empty matrix).
pub fn min_eig_sym(a: &Matrix) -> Result<f64> {
    check_symmetric(a, "matrix")?;
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let eig = SymmetricEigen::new(symmetrize(a));
    Ok(eig.eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v)))
}

/// Largest eigenpair of the symmetric-definite pencil `A v = lambda B v`.
///
/// `B` is whitened by its Cholesky factor `L` and the symmetric matrix
/// `L^-1 A L^-T` is diagonalized; the returned vector has unit Euclidean norm.
pub fn gen_eig_max(a: &Matrix, b: &Matrix) -> Result<EigPair> {
    check_symmetric(a, "A")?;
    check_symmetric(b, "B")?;
    if a.shape() != b.shape() {
        return Err(OrexError::InvalidInput("A and B have different shapes".into()));
    }
    let n = a.nrows();
    if n == 0 {
        return Err(OrexError::InvalidInput("empty pencil".into()));
    }
    let bs = symmetrize(b);
    let bmax = bs.amax();
    let chol = nalgebra::Cholesky::new(bs.clone()).ok_or_else(|| {
        OrexError::ModelDegeneracy("B is not positive definite".into())
    })?;
    let l = chol.l();
    let dmin = l.diagonal().iter().fold(f64::INFINITY, |m, &v| m.min(v.abs()));
    if dmin * dmin <= DEFAULT_RANK_TOL * bmax {
        return Err(OrexError::ModelDegeneracy("B is numerically singular".into()));
    }
    // C = L^-1 A L^-T
    let linv_a = l
        .solve_lower_triangular(&symmetrize(a))
        .expect("nonsingular triangular factor");
    let c = l
        .solve_lower_triangular(&linv_a.transpose())
        .expect("nonsingular triangular factor");
    let eig = SymmetricEigen::new(symmetrize(&c));
    let (imax, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty spectrum");
    let w = eig.eigenvectors.column(imax).into_owned();
    let v = l
        .transpose()
        .solve_upper_triangular(&w)
        .expect("nonsingular triangular factor");
    let norm = v.norm();
    Ok(EigPair { value, vector: v / norm })
}

/// Leading eigenpair of `(Y^T Y) v = lambda (X^T X) v`, given the factors `Y`, `X`.
///
/// The pencil is whitened through a QR factorization of `X`, so no Gram
/// matrix is ever formed. The vector is normalized so that `||X v|| = 1`.
#[derive(Debug, Clone)]
pub struct FactoredPencil {
    /// Upper-triangular factor of `X`, i.e. the Cholesky factor of `X^T X`.
    r: Matrix,
    /// Leading eigenvalue.
    pub value: f64,
    /// Second eigenvalue (zero when the dimension is one).
    pub second: f64,
    /// Leading eigenvector with `||X v|| = 1`.
    pub vector: Vector,
}

impl FactoredPencil {
    /// Factor the pencil; fails when `X` does not have full column rank.
    pub fn new(y: &Matrix, x: &Matrix, tol: f64) -> Result<Self> {
        let k = x.ncols();
        debug_assert_eq!(y.ncols(), k);
        if k == 0 {
            return Ok(Self {
                r: Matrix::zeros(0, 0),
                value: 0.0,
                second: 0.0,
                vector: Vector::zeros(0),
            });
        }
        let sv = singular_values(x);
        let smax = sv.first().copied().unwrap_or(0.0);
        let smin = if x.nrows() < k { 0.0 } else { sv.last().copied().unwrap_or(0.0) };
        if smax == 0.0 || smin <= tol * smax {
            return Err(OrexError::ModelDegeneracy(
                "the weighting operator is singular on the kernel".into(),
            ));
        }
        let r = x.clone().qr().r();
        // W = Y R^-1  <=>  R^T W^T = Y^T
        let wt = r
            .transpose()
            .solve_lower_triangular(&y.transpose())
            .expect("nonsingular triangular factor");
        let w = wt.transpose();
        let (value, second, u) = if w.nrows() == 0 {
            let mut e = Vector::zeros(k);
            e[0] = 1.0;
            (0.0, 0.0, e)
        } else {
            // Right singular vectors of W come from the padded SVD.
            let padded = if w.nrows() < k {
                let mut p = Matrix::zeros(k, k);
                p.rows_mut(0, w.nrows()).copy_from(&w);
                p
            } else {
                w
            };
            let svd = padded.svd(false, true);
            let v_t = svd.v_t.expect("requested right singular vectors");
            let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
            order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
            let s1 = svd.singular_values[order[0]];
            let s2 = order.get(1).map(|&i| svd.singular_values[i]).unwrap_or(0.0);
            (s1 * s1, s2 * s2, v_t.row(order[0]).transpose())
        };
        let vector = r
            .solve_upper_triangular(&u)
            .expect("nonsingular triangular factor");
        Ok(Self { r, value, second, vector })
    }

    /// Solve `(X^T X) z = rhs`.
    pub fn solve_gram(&self, rhs: &Vector) -> Vector {
        let tmp = self
            .r
            .transpose()
            .solve_lower_triangular(rhs)
            .expect("nonsingular triangular factor");
        self.r.solve_upper_triangular(&tmp).expect("nonsingular triangular factor")
    }

    /// True when the leading eigenvalue is numerically repeated.
    pub fn is_degenerate(&self) -> bool {
        self.value > 0.0 && self.value - self.second < 1e-8 * self.value
    }
}

/// Least-squares solution of `min ||x c - rhs||` for `x` with full column rank.
pub fn least_squares(x: &Matrix, rhs: &Vector, tol: f64) -> Result<Vector> {
    let k = x.ncols();
    if k == 0 {
        return Ok(Vector::zeros(0));
    }
    let sv = singular_values(x);
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = if x.nrows() < k { 0.0 } else { sv.last().copied().unwrap_or(0.0) };
    if smax == 0.0 || smin <= tol * smax {
        return Err(OrexError::ModelDegeneracy("least-squares matrix is rank deficient".into()));
    }
    let qr = x.clone().qr();
    let qtb = qr.q().transpose() * rhs;
    Ok(qr.r().solve_upper_triangular(&qtb).expect("nonsingular triangular factor"))
}
