//! Dense complex matrix foundations.
//!
//! Vectorization is column-stacking throughout: `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Hermiticity residual above which symmetrization is refused.
pub const HERMITIAN_REFUSAL: f64 = 1e-6;

/// Absolute distance to the closed negative real axis below which the
/// principal logarithm is refused.
pub const LOG_BRANCH_GUARD: f64 = 1e-12;

/// Absolute plus relative tolerance pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_eps: f64,
    pub rel_eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_eps: 1e-9,
            rel_eps: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn new(abs_eps: f64, rel_eps: f64) -> Result<Self> {
        if !(abs_eps >= 0.0 && rel_eps >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerances must be nonnegative (abs {abs_eps}, rel {rel_eps})"
            )));
        }
        Ok(Tolerance { abs_eps, rel_eps })
    }

    /// A tolerance with the same absolute and relative part.
    pub fn uniform(eps: f64) -> Self {
        Tolerance {
            abs_eps: eps,
            rel_eps: eps,
        }
    }

    /// `abs_eps + rel_eps * scale`.
    pub fn bound(&self, scale: f64) -> f64 {
        self.abs_eps + self.rel_eps * scale
    }
}

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Matrix unit `e_ij` (0-based).
pub fn e_ij(d: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(i, j)] = cr(1.0);
    m
}

/// Builds a complex matrix from real row-major data.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| cr(x)))
}

pub fn fro_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `abs_eps + rel_eps * sigma_max`.
pub fn numerical_rank(m: &CMatrix, tol: Tolerance) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    let thr = tol.bound(top);
    s.iter().filter(|&&x| x > thr).count()
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
///
/// The input is symmetrized first; inputs farther than `HERMITIAN_REFUSAL`
/// from Hermitian are rejected.
pub fn eig_hermitian(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let d = ensure_square(m)?;
    let residual = hermiticity_residual(m);
    if residual > HERMITIAN_REFUSAL {
        return Err(Error::NotHermitian { residual });
    }
    if d == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig_hermitian(m: &CMatrix) -> Result<f64> {
    let (values, _) = eig_hermitian(m)?;
    Ok(values.first().copied().unwrap_or(0.0))
}

/// PSD test: `min_eig >= -(abs_eps + rel_eps * ||m||)` with the spectral norm.
pub fn is_psd(m: &CMatrix, tol: Tolerance) -> Result<(bool, f64)> {
    let (values, _) = eig_hermitian(m)?;
    let Some(&lo) = values.first() else {
        return Ok((true, 0.0));
    };
    let hi = values.last().copied().unwrap_or(0.0);
    let scale = lo.abs().max(hi.abs());
    Ok((lo >= -tol.bound(scale), lo))
}

/// Matrix exponential (Padé scaling and squaring).
pub fn mat_exp(m: &CMatrix) -> Result<CMatrix> {
    let d = ensure_square(m)?;
    if d == 0 {
        return Ok(m.clone());
    }
    Ok(m.exp())
}

/// Principal matrix logarithm by inverse scaling and squaring on the
/// complex Schur form.
///
/// Refuses matrices with an eigenvalue within `LOG_BRANCH_GUARD` of the
/// closed negative real axis (which includes singular matrices).
pub fn mat_log_principal(m: &CMatrix) -> Result<CMatrix> {
    let d = ensure_square(m)?;
    if d == 0 {
        return Ok(m.clone());
    }
    if !all_finite(m) {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    let (q, mut t) = Schur::new(m.clone()).unpack();
    for i in 0..d {
        for j in 0..i {
            t[(i, j)] = cr(0.0);
        }
    }
    for i in 0..d {
        let lam = t[(i, i)];
        if lam.im.abs() <= LOG_BRANCH_GUARD && lam.re <= LOG_BRANCH_GUARD {
            return Err(Error::NoPrincipalLog(format!(
                "eigenvalue {:.6e}{:+.6e}i on or near the closed negative real axis",
                lam.re, lam.im
            )));
        }
    }

    let id = identity(d);
    let mut squarings = 0u32;
    while fro_norm(&(&t - &id)) > 0.25 {
        if squarings >= 64 {
            return Err(Error::NoPrincipalLog(
                "square-root iteration did not approach the identity".into(),
            ));
        }
        t = sqrt_upper_triangular(&t);
        squarings += 1;
    }

    let x = &t - &id;
    let mut log = CMatrix::zeros(d, d);
    let mut power = x.clone();
    for k in 1..=200u32 {
        let term = power.scale(1.0 / f64::from(k));
        if k % 2 == 1 {
            log += &term;
        } else {
            log -= &term;
        }
        if fro_norm(&term) < 1e-18 * (1.0 + fro_norm(&log)) {
            break;
        }
        power = &power * &x;
    }
    log *= cr(2f64.powi(squarings as i32));
    let out = &q * log * q.adjoint();
    if !all_finite(&out) {
        return Err(Error::NoPrincipalLog("non-finite logarithm".into()));
    }
    Ok(out)
}

/// Principal square root of an upper-triangular matrix (Björck–Hammarling).
fn sqrt_upper_triangular(t: &CMatrix) -> CMatrix {
    let d = t.nrows();
    let mut r = CMatrix::zeros(d, d);
    for i in 0..d {
        r[(i, i)] = t[(i, i)].sqrt();
    }
    for gap in 1..d {
        for i in 0..d - gap {
            let j = i + gap;
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = s / (r[(i, i)] + r[(j, j)]);
        }
    }
    r
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vec(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`] for a `d x d` matrix.
pub fn unvec(v: &CVector, d: usize) -> Result<CMatrix> {
    if v.len() != d * d {
        return Err(Error::ShapeMismatch(format!(
            "vector of length {} cannot be reshaped to {d}x{d}",
            v.len()
        )));
    }
    Ok(CMatrix::from_column_slice(d, d, v.as_slice()))
}

/// Superoperator of `x -> a x b`.
pub fn sandwich_superop(a: &CMatrix, b: &CMatrix) -> CMatrix {
    kron(&b.transpose(), a)
}

pub fn mat_pow(m: &CMatrix, k: usize) -> CMatrix {
    let mut result = CMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Smallest `k <= p` with `||m^k|| <= abs_eps + rel_eps * ||m||^k`
/// (Frobenius norms).
pub fn nilpotency_order(m: &CMatrix, tol: Tolerance) -> Result<usize> {
    let p = ensure_square(m)?;
    let norm = op_norm(m);
    if norm <= tol.abs_eps || p == 0 {
        return Ok(1);
    }
    let mut power = m.clone();
    let mut last = norm;
    for k in 1..=p {
        if k > 1 {
            power = &power * m;
            last = op_norm(&power);
        }
        if last <= tol.bound(norm.powi(k as i32)) {
            return Ok(k);
        }
    }
    Err(Error::NotNilpotent { residual: last })
}

/// Jordan block `J_k(lambda)` with ones on the superdiagonal.
pub fn jordan_block(k: usize, lambda: f64) -> CMatrix {
    let mut j = CMatrix::zeros(k, k);
    for i in 0..k {
        j[(i, i)] = cr(lambda);
        if i + 1 < k {
            j[(i, i + 1)] = cr(1.0);
        }
    }
    j
}

/// Complex eigenvalues of a general square matrix.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    ensure_square(m)?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let (_, t) = Schur::new(m.clone()).unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// `a * b`, skipping the zero entries of `a`.
pub fn mul_sparse_left(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.nrows(), b.ncols());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if z.re != 0.0 || z.im != 0.0 {
                for k in 0..b.ncols() {
                    out[(i, k)] += z * b[(j, k)];
                }
            }
        }
    }
    out
}
