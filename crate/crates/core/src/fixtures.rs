//! Small named maps on `M_2` and `M_3` used as worked examples.

use crate::cpmap::CMap;
use crate::numerics::{cr, CMatrix};

/// `(a b; c d) -> (d 0; 0 a)`.
pub fn diagonal_swap() -> CMap {
    CMap::from_action(2, |x| {
        let mut y = CMatrix::zeros(2, 2);
        y[(0, 0)] = x[(1, 1)];
        y[(1, 1)] = x[(0, 0)];
        y
    })
}

/// Conditional expectation onto the diagonal.
pub fn diagonal_restriction(d: usize) -> CMap {
    CMap::from_action(d, |x| CMatrix::from_diagonal(&x.diagonal()))
}

/// `(a b; c d) -> (a sb; sc d)`; `s = 1/2` is the halving map.
pub fn offdiag_scale(s: f64) -> CMap {
    CMap::from_action(2, |x| {
        let mut y = x.clone();
        y[(0, 1)] *= cr(s);
        y[(1, 0)] *= cr(s);
        y
    })
}

/// `(a b; c d) -> (d sc; sb a)`.
pub fn swap_scale(s: f64) -> CMap {
    CMap::from_action(2, |x| {
        let mut y = CMatrix::zeros(2, 2);
        y[(0, 0)] = x[(1, 1)];
        y[(1, 1)] = x[(0, 0)];
        y[(0, 1)] = x[(1, 0)] * cr(s);
        y[(1, 0)] = x[(0, 1)] * cr(s);
        y
    })
}

/// `(a b; c d) -> (d c/2; b/2 a)`.
pub fn swap_halving() -> CMap {
    swap_scale(0.5)
}

/// Odd roots of [`swap_halving`]: `swap_scale(2^{-1/n})`.
pub fn swap_halving_root(n: usize) -> CMap {
    swap_scale(2f64.powf(-1.0 / n as f64))
}

/// Proper `n`-th root of the halving map.
pub fn halving_root(n: usize) -> CMap {
    offdiag_scale(2f64.powf(-1.0 / n as f64))
}

pub fn transpose_map(d: usize) -> CMap {
    CMap::from_action(d, |x| x.transpose())
}

/// On `M_3`: keeps `x_11` and the lower-right 2x2 block, kills the rest.
pub fn corner_expectation_m3() -> CMap {
    CMap::from_action(3, |x| {
        let mut y = CMatrix::zeros(3, 3);
        y[(0, 0)] = x[(0, 0)];
        for i in 1..3 {
            for j in 1..3 {
                y[(i, j)] = x[(i, j)];
            }
        }
        y
    })
}
