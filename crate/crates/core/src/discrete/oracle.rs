//! Exact root analysis for maps on `M_2` that swap the diagonal.
//!
//! Let `phi(e11) = e22`, `phi(e22) = e11` and let `phi` map the off-diagonal
//! span into itself with action `F` such that `F²` has no eigenvalue 1. Any
//! `tau` with `tau^n = phi` commutes with `phi`. Commutation and unitality
//! force `tau(e11) = diag(t, 1-t)` and `tau(e22) = diag(1-t, t)`, so on the
//! diagonal `tau^n` acts by the symmetric stochastic matrix `T_t^n` with
//! `(T_t^n)_{11} = (1 + (2t-1)^n) / 2`. Matching `phi(e11) = e22` needs this
//! entry to vanish: impossible for even `n`, and forcing `t = 0` for odd `n`.
//! With `t = 0` the Choi matrix of `tau` has two zero diagonal entries,
//! which pins `tau(e12) = z e21` and `tau(e21) = conj(z) e12`, and then
//! `tau^n(e12) = |z|^{n-1} z e21` must equal `phi(e12)`.

use crate::cpmap::CMap;
use crate::error::Result;
use crate::numerics::{cr, eigenvalues, CMatrix};

#[derive(Debug, Clone)]
pub enum CommutantVerdict {
    /// The map is outside the family covered by the analysis.
    NotApplicable(String),
    /// No UNCP `tau` satisfies `tau^n = phi`.
    NoRoot {
        /// `min_t (T_t^n)_{11}` on the grid (the exact minimum is 1/2).
        grid_min: f64,
    },
    /// The only solution is `tau = phi`, so no proper root exists.
    OnlyTrivialRoot,
    /// A unique proper root exists.
    UniqueRoot { tau: CMap, z: (f64, f64) },
}

impl CommutantVerdict {
    /// Whether existence of a proper root is refuted.
    pub fn refutes_proper_root(&self) -> bool {
        matches!(self, CommutantVerdict::NoRoot { .. } | CommutantVerdict::OnlyTrivialRoot)
    }
}

const GRID: usize = 2000;

fn diagonal_entry_on_grid(n: usize) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut worst_gap: f64 = 0.0;
    for k in 0..=GRID {
        let t = k as f64 / GRID as f64;
        let m = nalgebra::Matrix2::new(t, 1.0 - t, 1.0 - t, t);
        let v = m.pow(n as u32)[(0, 0)];
        let closed = 0.5 * (1.0 + (2.0 * t - 1.0).powi(n as i32));
        worst_gap = worst_gap.max((v - closed).abs());
        min = min.min(v);
    }
    (min, worst_gap)
}

/// Analyzes `tau^n = phi` for `phi` in the diagonal-swap family.
pub fn swap_commutant_oracle(phi: &CMap, n: usize) -> Result<CommutantVerdict> {
    if phi.dim() != 2 {
        return Ok(CommutantVerdict::NotApplicable("map is not on M_2".into()));
    }
    if n < 2 {
        return Ok(CommutantVerdict::NotApplicable("order below 2".into()));
    }
    let s = phi.superop();
    // vec positions: e11 -> 0, e21 -> 1, e12 -> 2, e22 -> 3.
    let close = |a: num_complex::Complex64, b: f64| (a - cr(b)).norm() <= 1e-12;
    for row in 0..4 {
        let want0 = if row == 3 { 1.0 } else { 0.0 };
        let want3 = if row == 0 { 1.0 } else { 0.0 };
        if !close(s[(row, 0)], want0) || !close(s[(row, 3)], want3) {
            return Ok(CommutantVerdict::NotApplicable(
                "diagonal action is not the swap".into(),
            ));
        }
    }
    for col in [1, 2] {
        if !close(s[(0, col)], 0.0) || !close(s[(3, col)], 0.0) {
            return Ok(CommutantVerdict::NotApplicable(
                "off-diagonal inputs leak into the diagonal".into(),
            ));
        }
    }
    let f = CMatrix::from_fn(2, 2, |i, j| s[(1 + i, 1 + j)]);
    if eigenvalues(&(&f * &f))?.iter().any(|z| (z - cr(1.0)).norm() < 1e-9) {
        return Ok(CommutantVerdict::NotApplicable(
            "squared off-diagonal action has eigenvalue 1".into(),
        ));
    }

    let (grid_min, gap) = diagonal_entry_on_grid(n);
    if gap > 1e-12 {
        return Ok(CommutantVerdict::NotApplicable(format!(
            "grid disagrees with the closed form by {gap:.3e}"
        )));
    }
    if n.is_multiple_of(2) {
        return Ok(CommutantVerdict::NoRoot { grid_min });
    }

    // Odd n: t = 0. phi(e12) = beta e21 (+ gamma e12 must vanish).
    let beta = s[(1, 2)];
    let gamma = s[(2, 2)];
    let beta_adj = s[(2, 1)];
    let delta = s[(1, 1)];
    if gamma.norm() > 1e-12 || delta.norm() > 1e-12 || (beta_adj - beta.conj()).norm() > 1e-12 {
        return Ok(CommutantVerdict::NoRoot { grid_min });
    }
    if beta.norm() <= 1e-12 {
        return Ok(CommutantVerdict::OnlyTrivialRoot);
    }
    let modulus = beta.norm().powf(1.0 / n as f64);
    let z = beta / cr(beta.norm()) * cr(modulus);
    if (modulus - beta.norm()).abs() <= 1e-12 {
        return Ok(CommutantVerdict::OnlyTrivialRoot);
    }
    let tau = CMap::from_action(2, |x| {
        let mut y = CMatrix::zeros(2, 2);
        y[(0, 0)] = x[(1, 1)];
        y[(1, 1)] = x[(0, 0)];
        y[(1, 0)] = x[(0, 1)] * z;
        y[(0, 1)] = x[(1, 0)] * z.conj();
        y
    });
    Ok(CommutantVerdict::UniqueRoot {
        tau,
        z: (z.re, z.im),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::verify_proper_root;
    use crate::fixtures;
    use crate::numerics::Tolerance;

    #[test]
    fn swap_has_no_square_root() {
        let v = swap_commutant_oracle(&fixtures::diagonal_swap(), 2).unwrap();
        assert!(matches!(v, CommutantVerdict::NoRoot { grid_min } if (grid_min - 0.5).abs() < 1e-12));
        for n in [3, 5, 7] {
            let v = swap_commutant_oracle(&fixtures::diagonal_swap(), n).unwrap();
            assert!(matches!(v, CommutantVerdict::OnlyTrivialRoot));
        }
    }

    #[test]
    fn swap_scale_odd_and_even() {
        let phi = fixtures::swap_halving();
        for n in [2, 4, 6] {
            assert!(swap_commutant_oracle(&phi, n).unwrap().refutes_proper_root());
        }
        for n in [3, 5] {
            match swap_commutant_oracle(&phi, n).unwrap() {
                CommutantVerdict::UniqueRoot { tau, z } => {
                    assert!((z.0 - 2f64.powf(-1.0 / n as f64)).abs() < 1e-12);
                    let cert = verify_proper_root(&tau, &phi, n, Tolerance::default()).unwrap();
                    assert!(cert.is_accepted());
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn other_maps_not_applicable() {
        assert!(matches!(
            swap_commutant_oracle(&fixtures::offdiag_scale(0.5), 2).unwrap(),
            CommutantVerdict::NotApplicable(_)
        ));
        assert!(matches!(
            swap_commutant_oracle(&CMap::identity(3), 2).unwrap(),
            CommutantVerdict::NotApplicable(_)
        ));
    }
}
