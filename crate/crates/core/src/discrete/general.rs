//! Roots of state maps with support rank `r < d`.
//!
//! In the eigenbasis of the density matrix write `C^d = P ⊕ Q` with `P` the
//! support. The root acts as
//!
//! ```text
//! tau(x) = tau_P(x_11) ⊕ diag_m <g_m, x g_m>,
//! ```
//!
//! where `tau_P` is a proper root of order `n1` of the compressed faithful
//! state map and the vectors `g_m` route the transient basis vectors `f_m`
//! along a chain `f_{n2} -> ... -> f_1 -> h` that ends at a vector `h ∈ P`.
//! Its Kraus operators are `A_i ⊕ 0` and `|g_m><f_m|`, so the support blocks
//! carry `A_i`, the hand-over blocks are `|h><f_m|` and the transient blocks
//! are partial shifts.

use super::chain::{faithful_root_map, kraus_unitality_residual, ChainOptions};
use super::{check_state_order, verify_proper_root, StateRoot, PROPERNESS_FLOOR};
use crate::cpmap::{CMap, StateSpec};
use crate::error::{Error, Result};
use crate::numerics::{cr, eig_hermitian, fro_norm, hermitian_part, mat_pow, unvec, CMatrix};

/// Vector of the support receiving the transient chain.
#[derive(Debug, Clone, PartialEq)]
pub enum RowChoice {
    /// Eigenbasis vector `e_l` (0-based) of the support.
    Basis(usize),
    /// A general unit vector, used when no basis vector separates the
    /// consecutive powers of the support root.
    Vector(Vec<(f64, f64)>),
}

/// Norm of the functional `x -> <h, delta(x) h>` for a superoperator `delta` on `M_r`.
fn row_score(delta: &CMatrix, h: &[num_complex::Complex64]) -> f64 {
    let r = h.len();
    let mut row = nalgebra::RowDVector::<num_complex::Complex64>::zeros(r * r);
    for a in 0..r {
        for b in 0..r {
            let coef = h[a].conj() * h[b];
            if coef.norm() == 0.0 {
                continue;
            }
            row += delta.row(b * r + a) * coef;
        }
    }
    row.norm()
}

fn choose_row(delta: &CMatrix, r: usize) -> Result<(RowChoice, Vec<num_complex::Complex64>)> {
    for l in 0..r {
        let mut h = vec![cr(0.0); r];
        h[l] = cr(1.0);
        if row_score(delta, &h) > PROPERNESS_FLOOR {
            return Ok((RowChoice::Basis(l), h));
        }
    }
    // Fallback: eigenvectors of the dominant output direction of delta.
    let svd = delta.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let top = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let z = unvec(&u.column(top).into_owned(), r)?;
    let (_, vecs) = eig_hermitian(&hermitian_part(&z))?;
    let mut best: Option<(f64, Vec<num_complex::Complex64>)> = None;
    for k in 0..r {
        let h: Vec<_> = vecs.column(k).iter().copied().collect();
        let s = row_score(delta, &h);
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, h));
        }
    }
    match best {
        Some((s, h)) if s > PROPERNESS_FLOOR => {
            let coords = h.iter().map(|z| (z.re, z.im)).collect();
            Ok((RowChoice::Vector(coords), h))
        }
        _ => Err(Error::ConstructionFailed(
            "no support vector separates consecutive powers of the support root".into(),
        )),
    }
}

/// Proper `n`-th root of the state map of a non-faithful state.
pub fn construct_state_root_general(
    state: &StateSpec,
    n: usize,
    opts: &ChainOptions,
) -> Result<StateRoot> {
    let d = state.dim();
    let r = state.support_rank();
    if r == d {
        return super::construct_state_root_faithful(state, n, opts);
    }
    check_state_order(state, n)?;
    let rq = d - r;
    let n1 = (n - 1).min(r * r - 1);
    let n2 = n - n1;
    if n2 == 0 || n2 > rq {
        return Err(Error::OrderOutOfRange {
            n,
            range: format!("split ({n1}, {n2}) infeasible"),
        });
    }

    let lambdas = &state.eigenvalues()[..r];
    let support_state = StateSpec::diagonal(lambdas)?;
    let phi_p = support_state.state_map();
    let (tau_p, epsilon) = if n1 >= 2 {
        let (m, e) = faithful_root_map(&support_state, n1, opts)?;
        (m, Some(e.epsilon))
    } else {
        (phi_p.clone(), None)
    };
    let a_kraus = tau_p.kraus_family(opts.tol)?;

    let (row, h) = if r == 1 {
        (RowChoice::Basis(0), vec![cr(1.0)])
    } else {
        let delta = mat_pow(tau_p.superop(), n1.saturating_sub(1)) - phi_p.superop();
        choose_row(&delta, r)?
    };

    // Kraus operators in the eigenbasis.
    let mut kraus = Vec::with_capacity(a_kraus.len() + rq);
    for a in &a_kraus {
        let mut l = CMatrix::zeros(d, d);
        l.view_mut((0, 0), (r, r)).copy_from(a);
        kraus.push(l);
    }
    let mut transient_blocks = Vec::with_capacity(rq);
    for m in 0..rq {
        let mut l = CMatrix::zeros(d, d);
        if m >= 1 && m < n2 {
            l[(r + m - 1, r + m)] = cr(1.0);
        } else {
            for (k, &z) in h.iter().enumerate() {
                l[(k, r + m)] = z;
            }
        }
        transient_blocks.push(l.view((r, r), (rq, rq)).into_owned());
        kraus.push(l);
    }

    // Transient products of length d - r vanish iff (Σ|D_i|)^(d-r) = 0.
    let mut total = CMatrix::zeros(rq, rq);
    for b in &transient_blocks {
        total += b.map(|z| cr(z.norm()));
    }
    let transient_nilpotent = fro_norm(&mat_pow(&total, rq)) == 0.0;

    let u = state.eigenvectors();
    let kraus: Vec<CMatrix> = kraus.iter().map(|l| u * l * u.adjoint()).collect();
    let tau = CMap::from_kraus(kraus)?;
    let phi = state.state_map();
    let certificate = verify_proper_root(&tau, &phi, n, opts.tol)?;
    if let Some(reason) = certificate.reason() {
        return Err(Error::ConstructionFailed(reason.to_string()));
    }
    Ok(StateRoot {
        tau,
        certificate,
        support_order: n1,
        transient_order: n2,
        epsilon,
        row: Some(row),
        support_kraus_residual: kraus_unitality_residual(&a_kraus, r),
        transient_nilpotent,
    })
}
