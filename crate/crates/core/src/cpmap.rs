//! Linear maps on `M_d` in the Heisenberg picture.
//!
//! A map is stored as its `d² x d²` superoperator together with its Choi
//! matrix and, when known, a Kraus family with `phi(x) = Σ L_i* x L_i`.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{
    cr, e_ij, eig_hermitian, fro_norm, hermiticity_residual, identity, kron, max_abs,
    numerical_rank, singular_values, unvec, vec, CMatrix, Tolerance,
};

/// Relative singular-value cut used to decide the rank of Kraus ranges.
pub const SUPPORT_RANK_CUT: f64 = 1e-9;

/// Eigenvalue threshold deciding the support rank of a density matrix.
pub const STATE_RANK_TOL: f64 = 1e-9;

/// Structural flags, computed on first use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapFlags {
    pub unital: bool,
    pub cp: bool,
    pub idempotent: bool,
    pub choi_min_eig: f64,
    pub tol: Tolerance,
}

#[derive(Debug, Clone)]
pub struct CMap {
    dim: usize,
    superop: CMatrix,
    kraus: Option<Vec<CMatrix>>,
    choi: CMatrix,
    flags: OnceLock<MapFlags>,
}

fn isqrt_exact(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// Choi matrix from a superoperator: block `(i, j)` is `phi(e_ij)`.
pub fn choi_from_superop(s: &CMatrix, d: usize) -> CMatrix {
    let mut choi = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let col = j * d + i;
            for a in 0..d {
                for b in 0..d {
                    choi[(i * d + a, j * d + b)] = s[(b * d + a, col)];
                }
            }
        }
    }
    choi
}

/// Inverse of [`choi_from_superop`].
pub fn superop_from_choi(choi: &CMatrix, d: usize) -> CMatrix {
    let mut s = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let col = j * d + i;
            for a in 0..d {
                for b in 0..d {
                    s[(b * d + a, col)] = choi[(i * d + a, j * d + b)];
                }
            }
        }
    }
    s
}

/// Superoperator of `x -> Σ L_i* x L_i`, which is `Σ L_iᵀ ⊗ L_i*`.
pub fn superop_from_kraus(kraus: &[CMatrix], d: usize) -> CMatrix {
    let mut s = CMatrix::zeros(d * d, d * d);
    for l in kraus {
        s += kron(&l.transpose(), &l.adjoint());
    }
    s
}

impl CMap {
    fn build(dim: usize, superop: CMatrix, kraus: Option<Vec<CMatrix>>) -> Self {
        let choi = choi_from_superop(&superop, dim);
        CMap {
            dim,
            superop,
            kraus,
            choi,
            flags: OnceLock::new(),
        }
    }

    fn compute_flags(&self) -> MapFlags {
        let tol = Tolerance::default();
        let (cp, choi_min_eig) = cp_status(&self.choi, tol);
        let unital = unital_residual_of(&self.superop, self.dim) <= tol.bound((self.dim as f64).sqrt());
        let sq = &self.superop * &self.superop;
        let idempotent = fro_norm(&(sq - &self.superop)) <= tol.bound(fro_norm(&self.superop));
        MapFlags {
            unital,
            cp,
            idempotent,
            choi_min_eig,
            tol,
        }
    }

    pub fn from_kraus(kraus: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::InvalidInput(
                "empty Kraus family; use CMap::zero for the zero map".into(),
            ));
        };
        let d = first.nrows();
        for l in &kraus {
            if l.nrows() != d || l.ncols() != d {
                return Err(Error::ShapeMismatch(format!(
                    "Kraus operator of shape {}x{} in a family of {d}x{d}",
                    l.nrows(),
                    l.ncols()
                )));
            }
        }
        let s = superop_from_kraus(&kraus, d);
        Ok(Self::build(d, s, Some(kraus)))
    }

    pub fn from_superop(superop: CMatrix) -> Result<Self> {
        if superop.nrows() != superop.ncols() {
            return Err(Error::NonSquare {
                rows: superop.nrows(),
                cols: superop.ncols(),
            });
        }
        let d = isqrt_exact(superop.nrows()).ok_or_else(|| {
            Error::ShapeMismatch(format!(
                "superoperator size {} is not a perfect square",
                superop.nrows()
            ))
        })?;
        if d == 0 {
            return Err(Error::ShapeMismatch("empty superoperator".into()));
        }
        Ok(Self::build(d, superop, None))
    }

    pub fn from_choi(choi: CMatrix) -> Result<Self> {
        let m = CMap::from_superop(choi.clone())?;
        let d = m.dim;
        Ok(Self::build(d, superop_from_choi(&choi, d), None))
    }

    /// Map given by its action on matrices (evaluated on matrix units).
    pub fn from_action(d: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let mut s = CMatrix::zeros(d * d, d * d);
        for j in 0..d {
            for i in 0..d {
                let y = f(&e_ij(d, i, j));
                s.set_column(j * d + i, &vec(&y));
            }
        }
        Self::build(d, s, None)
    }

    pub fn identity(d: usize) -> Self {
        Self::build(d, identity(d * d), Some(vec![identity(d)]))
    }

    pub fn zero(d: usize) -> Self {
        Self::build(d, CMatrix::zeros(d * d, d * d), None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn superop(&self) -> &CMatrix {
        &self.superop
    }

    pub fn kraus(&self) -> Option<&[CMatrix]> {
        self.kraus.as_deref()
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    pub fn flags(&self) -> MapFlags {
        *self.flags.get_or_init(|| self.compute_flags())
    }

    /// Whether the cached flags say unital and CP.
    pub fn is_uncp(&self) -> bool {
        let f = self.flags();
        f.unital && f.cp
    }

    /// Kraus family, derived from the Choi matrix when none is stored.
    pub fn kraus_family(&self, tol: Tolerance) -> Result<Vec<CMatrix>> {
        match &self.kraus {
            Some(k) => Ok(k.clone()),
            None => kraus_from_choi(&self.choi, tol),
        }
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "input {}x{} for a map on M_{}",
                x.nrows(),
                x.ncols(),
                self.dim
            )));
        }
        unvec(&(&self.superop * vec(x)), self.dim)
    }

    /// `self ∘ other`, i.e. `x -> self(other(x))`.
    pub fn compose(&self, other: &CMap) -> Result<CMap> {
        if self.dim != other.dim {
            return Err(Error::ShapeMismatch(format!(
                "composing maps on M_{} and M_{}",
                self.dim, other.dim
            )));
        }
        let kraus = match (&self.kraus, &other.kraus) {
            (Some(a), Some(b)) if a.len() * b.len() <= 4 * self.dim * self.dim => Some(
                b.iter()
                    .flat_map(|lb| a.iter().map(move |la| lb * la))
                    .collect(),
            ),
            _ => None,
        };
        Ok(Self::build(self.dim, &self.superop * &other.superop, kraus))
    }

    pub fn power(&self, k: usize) -> CMap {
        if k == 0 {
            return CMap::identity(self.dim);
        }
        Self::build(self.dim, crate::numerics::mat_pow(&self.superop, k), None)
    }

    pub fn scaled_sum(&self, other: &CMap, eps: f64) -> Result<CMap> {
        if self.dim != other.dim {
            return Err(Error::ShapeMismatch("dimension mismatch in sum".into()));
        }
        Ok(Self::build(
            self.dim,
            &self.superop + other.superop.scale(eps),
            None,
        ))
    }

    /// Same map with a Kraus family attached (checked against the superoperator).
    pub fn with_kraus(self, kraus: Vec<CMatrix>) -> Result<CMap> {
        let s = superop_from_kraus(&kraus, self.dim);
        let err = fro_norm(&(&s - &self.superop));
        if err > 1e-9 * (1.0 + fro_norm(&self.superop)) {
            return Err(Error::VerificationFailed(format!(
                "Kraus family reproduces the superoperator only to {err:.3e}"
            )));
        }
        Ok(CMap { kraus: Some(kraus), ..self })
    }

    /// Superoperator distance (Frobenius) to another map.
    pub fn distance(&self, other: &CMap) -> f64 {
        fro_norm(&(&self.superop - &other.superop))
    }
}

fn unital_residual_of(s: &CMatrix, d: usize) -> f64 {
    let v = s * vec(&identity(d));
    let m = unvec(&v, d).expect("square by construction");
    fro_norm(&(m - identity(d)))
}

fn cp_status(choi: &CMatrix, tol: Tolerance) -> (bool, f64) {
    let scale = fro_norm(choi);
    let herm = hermiticity_residual(choi);
    let herm_part = crate::numerics::hermitian_part(choi);
    let lo = match eig_hermitian(&herm_part) {
        Ok((v, _)) => v.first().copied().unwrap_or(0.0),
        Err(_) => f64::NEG_INFINITY,
    };
    let ok = herm <= tol.bound(scale) && lo >= -tol.bound(scale);
    (ok, lo)
}

pub fn choi_of(map: &CMap) -> CMatrix {
    map.choi.clone()
}

/// CP test through Choi positivity; also requires a Hermitian Choi matrix.
pub fn is_cp(map: &CMap, tol: Tolerance) -> (bool, f64) {
    cp_status(&map.choi, tol)
}

pub fn unital_residual(map: &CMap) -> f64 {
    unital_residual_of(&map.superop, map.dim)
}

pub fn is_unital(map: &CMap, tol: Tolerance) -> bool {
    unital_residual(map) <= tol.bound((map.dim as f64).sqrt())
}

pub fn idempotency_residual(map: &CMap) -> f64 {
    fro_norm(&(&map.superop * &map.superop - &map.superop))
}

pub fn is_idempotent(map: &CMap, tol: Tolerance) -> bool {
    idempotency_residual(map) <= tol.bound(fro_norm(&map.superop))
}

pub fn ensure_uncp(map: &CMap, tol: Tolerance) -> Result<()> {
    let (cp, lo) = is_cp(map, tol);
    if !cp {
        return Err(Error::NotUncp(format!("Choi min eigenvalue {lo:.3e}")));
    }
    if !is_unital(map, tol) {
        return Err(Error::NotUncp(format!(
            "unitality residual {:.3e}",
            unital_residual(map)
        )));
    }
    Ok(())
}

/// Kraus family from the spectral decomposition of a PSD Choi matrix.
///
/// With `C = Σ λ_k v_k v_k*`, the operator is `L_k[i, a] = conj(v_k[i d + a]) √λ_k`.
pub fn kraus_from_choi(choi: &CMatrix, tol: Tolerance) -> Result<Vec<CMatrix>> {
    let n = choi.nrows();
    let d = isqrt_exact(n)
        .filter(|_| choi.ncols() == n)
        .ok_or_else(|| Error::ShapeMismatch(format!("Choi matrix of size {n}x{}", choi.ncols())))?;
    let (values, vectors) = eig_hermitian(choi)?;
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = tol.bound(top);
    if let Some(&lo) = values.first() {
        if lo < -cut {
            return Err(Error::NotPsd { min_eig: lo });
        }
    }
    let mut out = Vec::new();
    for (k, &lam) in values.iter().enumerate() {
        if lam <= cut {
            continue;
        }
        let s = lam.sqrt();
        let v = vectors.column(k);
        let l = CMatrix::from_fn(d, d, |i, a| v[i * d + a].conj() * s);
        out.push(l);
    }
    Ok(out)
}

/// Orthogonal projection with an orthonormal basis adapted to `ran p ⊕ ran p'`.
#[derive(Debug, Clone)]
pub struct Projection {
    dim: usize,
    matrix: CMatrix,
    rank: usize,
    basis: CMatrix,
}

fn gram_schmidt_columns(candidates: &[nalgebra::DVector<Complex64>], keep: usize) -> Vec<nalgebra::DVector<Complex64>> {
    let mut out: Vec<nalgebra::DVector<Complex64>> = Vec::new();
    for v in candidates {
        if out.len() == keep {
            break;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &out {
                let coef = u.dotc(&w);
                w -= u * coef;
            }
        }
        let n = w.norm();
        if n > 1e-8 {
            out.push(w / cr(n));
        }
    }
    out
}

impl Projection {
    /// Projection from a matrix that is Hermitian and idempotent within 1e-10.
    pub fn from_matrix(p: CMatrix) -> Result<Self> {
        let d = crate::numerics::ensure_square(&p)?;
        let herm = hermiticity_residual(&p);
        let idem = max_abs(&(&p * &p - &p));
        if herm > 1e-10 || idem > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "not an orthogonal projection (hermiticity {herm:.3e}, idempotency {idem:.3e})"
            )));
        }
        let rank = p.trace().re.round().max(0.0) as usize;
        let id = identity(d);
        let q = &id - &p;
        let range: Vec<_> = (0..d).map(|k| p.column(k).into_owned()).collect();
        let co: Vec<_> = (0..d).map(|k| q.column(k).into_owned()).collect();
        let mut cols = gram_schmidt_columns(&range, rank);
        let rest = gram_schmidt_columns(&co, d - rank);
        if cols.len() != rank || rest.len() != d - rank {
            return Err(Error::InvalidInput("could not build an adapted basis".into()));
        }
        cols.extend(rest);
        let basis = CMatrix::from_columns(&cols);
        Ok(Projection {
            dim: d,
            matrix: p,
            rank,
            basis,
        })
    }

    /// Projection onto the span of the orthonormal columns of `v`; the
    /// adapted basis starts with exactly those columns.
    pub fn from_isometry(v: &CMatrix) -> Result<Self> {
        let d = v.nrows();
        let r = v.ncols();
        let gram = v.adjoint() * v;
        if fro_norm(&(gram - identity(r))) > 1e-10 {
            return Err(Error::InvalidInput("columns are not orthonormal".into()));
        }
        let p = v * v.adjoint();
        let q = identity(d) - &p;
        let co: Vec<_> = (0..d).map(|k| q.column(k).into_owned()).collect();
        let mut cols: Vec<_> = (0..r).map(|k| v.column(k).into_owned()).collect();
        cols.extend(gram_schmidt_columns(&co, d - r));
        if cols.len() != d {
            return Err(Error::InvalidInput("could not complete the basis".into()));
        }
        Ok(Projection {
            dim: d,
            matrix: p,
            rank: r,
            basis: CMatrix::from_columns(&cols),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Unitary whose first `rank` columns span the range.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn range_basis(&self) -> CMatrix {
        self.basis.columns(0, self.rank).into_owned()
    }

    pub fn complement_basis(&self) -> CMatrix {
        self.basis.columns(self.rank, self.dim - self.rank).into_owned()
    }
}

/// The four corners of `x` with respect to `p` and `p' = 1 - p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub x11: CMatrix,
    pub x12: CMatrix,
    pub x21: CMatrix,
    pub x22: CMatrix,
}

pub fn block_decompose(x: &CMatrix, p: &Projection) -> Result<Blocks> {
    if x.nrows() != p.dim || x.ncols() != p.dim {
        return Err(Error::ShapeMismatch("matrix and projection dimensions differ".into()));
    }
    let v = p.range_basis();
    let w = p.complement_basis();
    Ok(Blocks {
        x11: v.adjoint() * x * &v,
        x12: v.adjoint() * x * &w,
        x21: w.adjoint() * x * &v,
        x22: w.adjoint() * x * &w,
    })
}

pub fn reassemble(blocks: &Blocks, p: &Projection) -> CMatrix {
    let v = p.range_basis();
    let w = p.complement_basis();
    &v * &blocks.x11 * v.adjoint()
        + &v * &blocks.x12 * w.adjoint()
        + &w * &blocks.x21 * v.adjoint()
        + &w * &blocks.x22 * w.adjoint()
}

/// Support projection: the projection onto the span of all Kraus ranges.
pub fn support_projection(map: &CMap, tol: Tolerance) -> Result<Projection> {
    ensure_uncp(map, tol)?;
    let d = map.dim;
    let kraus = map.kraus_family(tol)?;
    let mut stacked = CMatrix::zeros(d, d * kraus.len().max(1));
    for (k, l) in kraus.iter().enumerate() {
        stacked.view_mut((0, k * d), (d, d)).copy_from(l);
    }
    let svd = stacked.svd(true, false);
    let u = svd.u.expect("requested U");
    let top = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let cols: Vec<_> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > SUPPORT_RANK_CUT * top)
        .map(|(k, _)| u.column(k).into_owned())
        .collect();
    let v = CMatrix::from_columns(&cols);
    let p = Projection::from_isometry(&v)?;
    let residual = fro_norm(&(map.apply(p.matrix())? - identity(d)));
    if residual > tol.bound((d as f64).sqrt()) {
        return Err(Error::VerificationFailed(format!(
            "phi(p) differs from the identity by {residual:.3e}"
        )));
    }
    Ok(p)
}

/// Compression `x -> V* tau(V x V*) V` onto the range of `p`.
pub fn compress(map: &CMap, p: &Projection, tol: Tolerance) -> Result<CMap> {
    if map.dim != p.dim {
        return Err(Error::ShapeMismatch("map and projection dimensions differ".into()));
    }
    let gap = map.apply(p.matrix())? - p.matrix();
    let lo = crate::numerics::min_eig_hermitian(&gap)?;
    if lo < -tol.bound(1.0) {
        return Err(Error::SupportNotAbsorbed { min_eig: lo });
    }
    let v = p.range_basis();
    let outer = kron(&v.transpose(), &v.adjoint());
    let inner = kron(&v.map(|z| z.conj()), &v);
    let s = outer * &map.superop * inner;
    let kraus = map
        .kraus
        .as_ref()
        .map(|ks| ks.iter().map(|l| v.adjoint() * l * &v).collect::<Vec<_>>());
    let out = CMap::build(p.rank, s, kraus);
    if !is_unital(&out, tol) {
        return Err(Error::VerificationFailed(format!(
            "compressed map not unital (residual {:.3e})",
            unital_residual(&out)
        )));
    }
    Ok(out)
}

/// A normal state on `M_d`, given by its density matrix.
#[derive(Debug, Clone)]
pub struct StateSpec {
    dim: usize,
    density: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    support_rank: usize,
}

impl StateSpec {
    pub fn from_density(density: CMatrix) -> Result<Self> {
        let d = crate::numerics::ensure_square(&density)?;
        if d == 0 {
            return Err(Error::InvalidInput("empty density matrix".into()));
        }
        let tr = density.trace();
        if (tr - cr(1.0)).norm() > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "density trace {:.12} differs from 1",
                tr.re
            )));
        }
        let (values, vectors) = eig_hermitian(&density)?;
        if values[0] < -1e-10 {
            return Err(Error::NotPsd { min_eig: values[0] });
        }
        let mut eigenvalues = Vec::with_capacity(d);
        let mut cols = Vec::with_capacity(d);
        for k in (0..d).rev() {
            eigenvalues.push(values[k].max(0.0));
            cols.push(vectors.column(k).into_owned());
        }
        let support_rank = eigenvalues.iter().filter(|&&l| l > STATE_RANK_TOL).count();
        Ok(StateSpec {
            dim: d,
            density: crate::numerics::hermitian_part(&density),
            eigenvalues,
            eigenvectors: CMatrix::from_columns(&cols),
            support_rank,
        })
    }

    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        let d = weights.len();
        let mut m = CMatrix::zeros(d, d);
        for (k, &w) in weights.iter().enumerate() {
            m[(k, k)] = cr(w);
        }
        Self::from_density(m)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::diagonal(&vec![1.0 / d as f64; d]).expect("valid state")
    }

    /// Pure state `|e_k><e_k|`.
    pub fn pure(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::InvalidInput(format!("basis index {k} out of range for d = {d}")));
        }
        let mut w = vec![0.0; d];
        w[k] = 1.0;
        Self::diagonal(&w)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn density(&self) -> &CMatrix {
        &self.density
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvectors as columns, matching [`StateSpec::eigenvalues`].
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn support_rank(&self) -> usize {
        self.support_rank
    }

    pub fn is_faithful(&self) -> bool {
        self.support_rank == self.dim
    }

    /// `tr(D x)`.
    pub fn expectation(&self, x: &CMatrix) -> Complex64 {
        (&self.density * x).trace()
    }

    /// The state map `x -> tr(D x) 1`, with Kraus operators `√λ_k |v_k><e_m|`.
    pub fn state_map(&self) -> CMap {
        let d = self.dim;
        let s = vec(&identity(d)) * vec(&self.density.transpose()).transpose();
        let mut kraus = Vec::new();
        for k in 0..self.support_rank {
            let v = self.eigenvectors.column(k);
            let w = self.eigenvalues[k].sqrt();
            for m in 0..d {
                let mut l = CMatrix::zeros(d, d);
                for a in 0..d {
                    l[(a, m)] = v[a] * w;
                }
                kraus.push(l);
            }
        }
        CMap::build(d, s, Some(kraus))
    }

    /// Projection onto the support of the density matrix.
    pub fn support_projection(&self) -> Projection {
        let v = self.eigenvectors.columns(0, self.support_rank).into_owned();
        Projection::from_isometry(&v).expect("eigenvectors are orthonormal")
    }
}

/// Recognizes a state map `x -> tr(D x) 1` and returns `D`.
pub fn as_state_map(map: &CMap, tol: Tolerance) -> Option<CMatrix> {
    if numerical_rank(map.superop(), tol) != 1 || !is_unital(map, tol) {
        return None;
    }
    let d = map.dim;
    let row = map.superop().row(0).transpose();
    let dt = unvec(&row, d).ok()?;
    let density = dt.transpose();
    let rebuilt = vec(&identity(d)) * vec(&density.transpose()).transpose();
    (fro_norm(&(rebuilt - map.superop())) <= tol.bound(fro_norm(map.superop()))).then_some(density)
}

/// Singular values of the superoperator, descending.
pub fn superop_singular_values(map: &CMap) -> Vec<f64> {
    singular_values(map.superop())
}
