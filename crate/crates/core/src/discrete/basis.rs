use crate::cpmap::StateSpec;
use crate::error::{Error, Result};
use crate::numerics::{c, cr, CMatrix};

/// Hermitian matrices with vanishing expectation in a faithful state,
/// orthonormal for the Hilbert–Schmidt inner product.
#[derive(Debug, Clone)]
pub struct PhiBasis {
    pub density: CMatrix,
    pub elements: Vec<CMatrix>,
}

impl PhiBasis {
    /// Real HS Gram matrix `tr(Y_i Y_j)`.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let k = self.elements.len();
        let mut g = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..k {
                g[i][j] = hs(&self.elements[i], &self.elements[j]);
            }
        }
        g
    }
}

/// `Re tr(a* b)`.
pub(crate) fn hs(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// `{e_ii} ∪ {(e_ij + e_ji)/√2, i(e_ij - e_ji)/√2 : i < j}`.
pub(crate) fn canonical_hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(crate::numerics::e_ij(d, i, i));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in i + 1..d {
            let mut re = CMatrix::zeros(d, d);
            re[(i, j)] = cr(s);
            re[(j, i)] = cr(s);
            out.push(re);
            let mut im = CMatrix::zeros(d, d);
            im[(i, j)] = c(0.0, s);
            im[(j, i)] = c(0.0, -s);
            out.push(im);
        }
    }
    out
}

/// Gram–Schmidt over the canonical Hermitian basis after projecting out the
/// state mean (`Y -> Y - tr(D Y) 1`). Yields `d² - 1` elements.
pub fn phi_orthogonal_basis(state: &StateSpec) -> Result<PhiBasis> {
    if !state.is_faithful() {
        return Err(Error::NotFaithful {
            rank: state.support_rank(),
            dim: state.dim(),
        });
    }
    let d = state.dim();
    let density = state.density().clone();
    let id = CMatrix::identity(d, d);
    let mut elements: Vec<CMatrix> = Vec::with_capacity(d * d - 1);
    for y in canonical_hermitian_basis(d) {
        let mean = state.expectation(&y).re;
        let mut v = &y - &id * cr(mean);
        for _ in 0..2 {
            for u in &elements {
                let coef = hs(u, &v);
                v -= u * cr(coef);
            }
        }
        let norm = hs(&v, &v).sqrt();
        if norm > 1e-8 {
            elements.push(crate::numerics::hermitian_part(&v) * cr(1.0 / norm));
        }
    }
    if elements.len() != d * d - 1 {
        return Err(Error::VerificationFailed(format!(
            "expected {} basis elements, got {}",
            d * d - 1,
            elements.len()
        )));
    }
    Ok(PhiBasis { density, elements })
}
