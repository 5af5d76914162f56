//! Roots of rank-one stochastic matrices `|1><p|`.
//!
//! Stochastic matrices act on column vectors (functions on `{1..d}`), so row
//! `k` of `tau^m` is the distribution after `m` steps started at `k`.

use nalgebra::{DMatrix, DVector};

use crate::discrete::{certify, RootCertificate, PROPERNESS_FLOOR};
use crate::error::{Error, Result};
use crate::numerics::{c, numerical_rank, CMatrix, Tolerance};

/// Entries at or below this are outside the support.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    entries: Vec<f64>,
}

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("empty probability vector".into()));
        }
        if entries.iter().any(|x| !x.is_finite() || *x < -1e-15) {
            return Err(Error::InvalidInput("negative or non-finite probability".into()));
        }
        let s: f64 = entries.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("probabilities sum to {s}")));
        }
        Ok(ProbVector { entries })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let s: f64 = w.iter().sum();
        if !(s > 0.0) || w.iter().any(|x| *x < 0.0) {
            return Err(Error::InvalidInput("weights must be nonnegative with positive sum".into()));
        }
        Self::new(w.iter().map(|x| x / s).collect())
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.entries[i] > SUPPORT_TOL).collect()
    }

    pub fn support_rank(&self) -> usize {
        self.support().len()
    }

    pub fn is_faithful(&self) -> bool {
        self.support_rank() == self.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochMatrix {
    entries: DMatrix<f64>,
}

impl StochMatrix {
    /// Checks row sums (1e-10) and entry signs (-1e-12).
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NonSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        let m = StochMatrix { entries };
        if m.row_sum_residual() > 1e-10 || m.min_entry() < -1e-12 {
            return Err(Error::InvalidInput(format!(
                "not stochastic: row sum residual {:.3e}, min entry {:.3e}",
                m.row_sum_residual(),
                m.min_entry()
            )));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn row_sum_residual(&self) -> f64 {
        self.entries
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.min()
    }

    /// `p^T tau` for a row vector `p`.
    pub fn left_apply(&self, p: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(p);
        (self.entries.transpose() * v).iter().copied().collect()
    }

    pub fn to_complex(&self) -> CMatrix {
        self.entries.map(|x| c(x, 0.0))
    }
}

/// The rank-one stochastic matrix with every row equal to `p`.
pub fn state_to_stochastic(p: &ProbVector) -> StochMatrix {
    let d = p.dim();
    StochMatrix {
        entries: DMatrix::from_fn(d, d, |_, j| p.entries[j]),
    }
}

/// Inclusive range of orders with proper roots, `None` for `d <= 2`.
pub fn commutative_root_range(d: usize) -> Option<(usize, usize)> {
    (d > 2).then_some((2, d - 1))
}

/// The partial shift on `C^{d-r}`: `e_i -> e_{i+1}` for `d-n <= i <= d-r-1`
/// (1-based), every other basis vector to 0. Requires `r <= n <= d - 1`.
pub fn shift_matrix(d_minus_r: usize, n: usize, r: usize) -> Result<DMatrix<f64>> {
    let d = d_minus_r + r;
    if r == 0 || d_minus_r == 0 || n < r || n + 1 > d {
        return Err(Error::BadIndices(format!(
            "need 1 <= r <= n <= d - 1 with d - r >= 1, got d - r = {d_minus_r}, n = {n}, r = {r}"
        )));
    }
    let mut s = DMatrix::zeros(d_minus_r, d_minus_r);
    for i in (d - n)..d_minus_r {
        // 1-based column i maps to row i + 1.
        s[(i, i - 1)] = 1.0;
    }
    Ok(s)
}

/// `(1^{(d-n)}, 0^{(n-r)})` in `C^{d-r}`.
fn jump_vector(d: usize, n: usize, r: usize) -> Vec<f64> {
    (0..d - r).map(|i| if i < d - n { 1.0 } else { 0.0 }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommutativeCase {
    Faithful,
    SmallSupport,
    LargeSupport,
}

#[derive(Debug, Clone)]
pub struct CommutativeRoot {
    pub tau: StochMatrix,
    pub certificate: RootCertificate,
    pub case: CommutativeCase,
    /// Orders of the support root and of the transient chain.
    pub split: (usize, usize),
    /// Support state (0-based, in the original labelling) receiving the chain.
    pub row: Option<usize>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CommutativeOptions {
    pub tol: Tolerance,
}

/// Orthonormal basis of `{u : <p, u> = 0}` for `<u, v>_p = Σ p_j u_j v_j`.
fn weighted_kernel_basis(p: &[f64]) -> Vec<DVector<f64>> {
    let d = p.len();
    let ip = |u: &DVector<f64>, v: &DVector<f64>| (0..d).map(|j| p[j] * u[j] * v[j]).sum::<f64>();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(d - 1);
    for k in 0..d {
        let mut v = DVector::from_fn(d, |j, _| if j == k { 1.0 } else { 0.0 });
        v.add_scalar_mut(-p[k]);
        for _ in 0..2 {
            for u in &out {
                let a = ip(u, &v);
                v -= u * a;
            }
        }
        let norm = ip(&v, &v).sqrt();
        if norm > 1e-10 && out.len() + 1 < d {
            out.push(v / norm);
        }
    }
    out
}

/// Chain weights maximizing `Σ log w_i` subject to a log barrier on the
/// entries of `1 + Σ w_i c_i`, by damped Newton along a decreasing barrier.
fn chain_weights(coeffs: &[DMatrix<f64>]) -> Vec<f64> {
    let k = coeffs.len();
    let h_of = |w: &[f64]| {
        let mut h = DMatrix::from_element(coeffs[0].nrows(), coeffs[0].ncols(), 1.0);
        for (wi, ci) in w.iter().zip(coeffs) {
            h += ci * *wi;
        }
        h
    };
    let objective = |w: &[f64], mu: f64| -> Option<f64> {
        if w.iter().any(|x| *x <= 0.0) {
            return None;
        }
        let h = h_of(w);
        if h.min() <= 0.0 {
            return None;
        }
        Some(w.iter().map(|x| x.ln()).sum::<f64>() + mu * h.iter().map(|x| x.ln()).sum::<f64>())
    };
    let mut w = vec![1e-2; k];
    while h_of(&w).min() <= 0.5 {
        w.iter_mut().for_each(|x| *x *= 0.5);
    }
    for mu in [1.0, 0.1, 1e-2, 1e-3, 1e-4] {
        for _ in 0..60 {
            let h = h_of(&w);
            let mut g = DVector::from_fn(k, |i, _| 1.0 / w[i]);
            let mut hess = DMatrix::from_fn(k, k, |i, l| if i == l { -1.0 / (w[i] * w[i]) } else { 0.0 });
            for i in 0..k {
                g[i] += mu * coeffs[i].component_div(&h).sum();
                for l in 0..k {
                    let t = coeffs[i]
                        .component_mul(&coeffs[l])
                        .component_div(&h.component_mul(&h))
                        .sum();
                    hess[(i, l)] -= mu * t;
                }
            }
            let Some(step) = (-hess).cholesky().map(|ch| ch.solve(&g)) else {
                break;
            };
            let f0 = objective(&w, mu).expect("iterate stays feasible");
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-12 {
                let cand: Vec<f64> = (0..k).map(|i| w[i] + t * step[i]).collect();
                if let Some(f1) = objective(&cand, mu) {
                    if f1 >= f0 {
                        w = cand;
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            let decrement = g.dot(&step);
            if !moved || decrement < 1e-12 {
                break;
            }
        }
    }
    w
}

/// Root of order `n` of `|1><p|` for faithful `p` (entries in place).
fn faithful_root(p: &[f64], n: usize) -> Result<(DMatrix<f64>, f64)> {
    let d = p.len();
    let phi = DMatrix::from_fn(d, d, |_, j| p[j]);
    if n < 2 {
        return Ok((phi, 1.0));
    }
    let u = weighted_kernel_basis(p);
    if u.len() < n {
        return Err(Error::OrderOutOfRange {
            n,
            range: format!("[2, {}]", d - 1),
        });
    }
    // alpha = Σ w_i |u_{i+1}><p∘u_i|, entries p_j w_i u_{i+1}[k] u_i[j].
    let coeffs: Vec<DMatrix<f64>> = (0..n - 1)
        .map(|i| DMatrix::from_fn(d, d, |k, j| u[i + 1][k] * u[i][j]))
        .collect();
    let w = chain_weights(&coeffs);
    let mut alpha = DMatrix::zeros(d, d);
    for (i, ci) in coeffs.iter().enumerate() {
        alpha += DMatrix::from_fn(d, d, |k, j| ci[(k, j)] * p[j]) * w[i];
    }
    let mut eps = 1.0;
    for _ in 0..=40 {
        let tau = &phi + &alpha * eps;
        if tau.min() >= 0.0 {
            return Ok((tau, eps));
        }
        eps *= 0.5;
    }
    Err(Error::EpsilonNotFound)
}

fn matrix_power(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Proper `n`-th root of `|1><p|` as a stochastic matrix.
pub fn construct_commutative_root(
    p: &ProbVector,
    n: usize,
    opts: &CommutativeOptions,
) -> Result<CommutativeRoot> {
    let d = p.dim();
    match commutative_root_range(d) {
        Some((lo, hi)) if (lo..=hi).contains(&n) => {}
        Some((lo, hi)) => {
            return Err(Error::OrderOutOfRange {
                n,
                range: format!("[{lo}, {hi}]"),
            })
        }
        None => {
            return Err(Error::OrderOutOfRange {
                n,
                range: "empty".into(),
            })
        }
    }
    let support = p.support();
    let r = support.len();
    let (tau, case, split, row, epsilon) = if r == d {
        let (tau, eps) = faithful_root(p.entries(), n)?;
        (tau, CommutativeCase::Faithful, (n, 0), None, Some(eps))
    } else {
        let n1 = (r - 1).min(n - 1);
        let n2 = n - n1;
        if n2 < 1 || n2 > d - r {
            return Err(Error::CaseInfeasible(format!(
                "no split of n = {n} with n1 <= {} and 1 <= n2 <= {}",
                r - 1,
                d - r
            )));
        }
        let ps: Vec<f64> = support.iter().map(|&i| p.entries[i]).collect();
        let (tau_p, eps) = if n1 >= 2 {
            let (t, e) = faithful_root(&ps, n1)?;
            (t, Some(e))
        } else {
            (DMatrix::from_fn(r, r, |_, j| ps[j]), None)
        };
        let j = if n1 <= 1 {
            0
        } else {
            let pw = matrix_power(&tau_p, n1 - 1);
            let dev: Vec<f64> = (0..r)
                .map(|k| (0..r).map(|l| (pw[(k, l)] - ps[l]).powi(2)).sum::<f64>().sqrt())
                .collect();
            dev.iter()
                .position(|&x| x > PROPERNESS_FLOOR)
                .unwrap_or_else(|| {
                    (0..r).max_by(|a, b| dev[*a].total_cmp(&dev[*b])).unwrap_or(0)
                })
        };
        // Shift of length n2: the chain leaves the transient part after n2 steps.
        let m = n2 + r - 1;
        let s = shift_matrix(d - r, m, r)?;
        let y = jump_vector(d, m, r);
        let mut t = DMatrix::zeros(d, d);
        t.view_mut((0, 0), (r, r)).copy_from(&tau_p);
        for a in 0..d - r {
            t[(r + a, j)] = y[a];
        }
        t.view_mut((r, r), (d - r, d - r)).copy_from(&s);
        // Undo the support-first relabelling.
        let mut order = support.clone();
        order.extend((0..d).filter(|i| !support.contains(i)));
        let mut tau = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                tau[(order[a], order[b])] = t[(a, b)];
            }
        }
        let case = if r <= 2 {
            CommutativeCase::SmallSupport
        } else {
            CommutativeCase::LargeSupport
        };
        (tau, case, (n1, n2), Some(support[j]), eps)
    };

    let tau = StochMatrix { entries: tau };
    let phi = state_to_stochastic(p);
    let certificate = certify(
        &tau.to_complex(),
        &phi.to_complex(),
        n,
        tau.min_entry(),
        tau.row_sum_residual(),
        opts.tol,
    );
    if let Some(reason) = certificate.reason() {
        return Err(Error::ConstructionFailed(reason.to_string()));
    }
    Ok(CommutativeRoot {
        tau,
        certificate,
        case,
        split,
        row,
        epsilon,
    })
}

/// Dimension of the generalized kernel of a `d x d` matrix.
pub fn zero_eigen_multiplicity(m: &DMatrix<f64>) -> usize {
    let d = m.nrows();
    let pw = matrix_power(m, d).map(|x| c(x, 0.0));
    d - numerical_rank(&pw, Tolerance::uniform(1e-9))
}
