//! Roots of faithful state maps: `tau = phi + alpha` with `alpha` a weighted
//! nilpotent chain `Y_1 -> Y_2 -> ... -> Y_n -> 0` on the mean-zero
//! Hermitian matrices.
//!
//! The chain directions and weights are chosen by a log-barrier ascent that
//! maximizes `Σ log w_i` while keeping the Choi matrix of `tau` above the
//! PSD floor; the directions are an orthonormal frame rotated on a Stiefel
//! manifold starting from the Gram–Schmidt basis.

use nalgebra::{Cholesky, DMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::basis::{hs, phi_orthogonal_basis};
use super::{check_state_order, verify_proper_root, StateRoot, PSD_FLOOR};
use crate::cpmap::{kraus_from_choi, CMap, StateSpec};
use crate::error::{Error, Result};
use crate::numerics::{cr, fro_norm, identity, is_psd, kron, vec, CMatrix, Tolerance};

/// Options for the chain constructions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOptions {
    pub seed: u64,
    /// Additional seeded random frames tried when the first one ends with a
    /// margin below `target_margin`.
    pub extra_starts: usize,
    /// Ascent iterations per barrier stage.
    pub iterations: usize,
    pub target_margin: f64,
    pub tol: Tolerance,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            seed: 0,
            extra_starts: 3,
            iterations: 400,
            target_margin: 1e-5,
            tol: Tolerance::default(),
        }
    }
}

const BARRIER_SCHEDULE: [f64; 5] = [1.0, 0.3, 0.1, 0.03, 0.01];

/// Result of the dyadic search for the perturbation scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonChoice {
    /// Largest `2^-k` (k <= 40) keeping the Choi minimum above the floor.
    pub epsilon: f64,
    /// One bisection step between `epsilon` and `2 * epsilon`.
    pub refined: f64,
    pub choi_min_eig: f64,
}

fn choi_min(s: &CMatrix, d: usize) -> f64 {
    let choi = crate::cpmap::choi_from_superop(s, d);
    is_psd(&choi, Tolerance::default()).map(|r| r.1).unwrap_or(f64::NEG_INFINITY)
}

/// Largest `ε` on `{1, 1/2, ..., 2^-40}` with `C(phi + ε alpha) >= PSD_FLOOR`.
pub fn epsilon_tune(phi: &CMap, alpha: &CMatrix) -> Result<EpsilonChoice> {
    let d = phi.dim();
    if alpha.nrows() != d * d || alpha.ncols() != d * d {
        return Err(Error::ShapeMismatch("alpha has the wrong size".into()));
    }
    if fro_norm(alpha) == 0.0 {
        let lo = choi_min(phi.superop(), d);
        return Ok(EpsilonChoice {
            epsilon: 1.0,
            refined: 1.0,
            choi_min_eig: lo,
        });
    }
    let mut eps = 1.0;
    for _ in 0..=40 {
        let lo = choi_min(&(phi.superop() + alpha * cr(eps)), d);
        if lo >= PSD_FLOOR {
            let mut refined = eps;
            if eps < 1.0 {
                let mid = 1.5 * eps;
                if choi_min(&(phi.superop() + alpha * cr(mid)), d) >= PSD_FLOOR {
                    refined = mid;
                }
            }
            return Ok(EpsilonChoice {
                epsilon: eps,
                refined,
                choi_min_eig: lo,
            });
        }
        eps *= 0.5;
    }
    Err(Error::EpsilonNotFound)
}

/// Optimized chain: orthonormal frame `q` (columns are coefficients of
/// `Y_i` in the basis) and log-weights.
struct Chain {
    q: DMatrix<f64>,
    logw: Vec<f64>,
}

struct Problem<'a> {
    d: usize,
    basis: &'a [CMatrix],
    hat: Vec<CMatrix>,
    choi_phi: CMatrix,
    floor: f64,
}

impl<'a> Problem<'a> {
    fn new(basis: &'a [CMatrix], density: &CMatrix) -> Self {
        let d = density.nrows();
        let hat = basis
            .iter()
            .map(|b| b - density * b.trace())
            .collect();
        Problem {
            d,
            basis,
            hat,
            choi_phi: kron(&density.transpose(), &identity(d)),
            floor: PSD_FLOOR,
        }
    }

    fn combine(&self, set: &[CMatrix], coef: nalgebra::DVectorView<f64>) -> CMatrix {
        let mut out = CMatrix::zeros(self.d, self.d);
        for (b, &x) in set.iter().zip(coef.iter()) {
            out += b * cr(x);
        }
        out
    }

    fn elements(&self, q: &DMatrix<f64>) -> (Vec<CMatrix>, Vec<CMatrix>) {
        let n = q.ncols();
        let y = (0..n).map(|i| self.combine(self.basis, q.column(i))).collect();
        let yh = (0..n).map(|i| self.combine(&self.hat, q.column(i))).collect();
        (y, yh)
    }

    fn choi(&self, y: &[CMatrix], yh: &[CMatrix], logw: &[f64]) -> CMatrix {
        let mut m = self.choi_phi.clone();
        for (i, &s) in logw.iter().enumerate() {
            m += kron(&yh[i].transpose(), &y[i + 1]) * cr(s.exp());
        }
        m
    }

    /// Barrier value and the inverse of the shifted Choi matrix.
    fn value(&self, m: &CMatrix, logw: &[f64], mu: f64) -> Option<(f64, CMatrix)> {
        let p = m.nrows();
        let shifted = crate::numerics::hermitian_part(m) - identity(p) * cr(self.floor);
        let chol = Cholesky::new(shifted)?;
        let l = chol.l_dirty();
        let mut logdet = 0.0;
        for k in 0..p {
            logdet += 2.0 * l[(k, k)].re.ln();
        }
        let f = logw.iter().sum::<f64>() + mu * logdet;
        f.is_finite().then(|| (f, chol.inverse()))
    }

    /// Gradient in (log-weights, frame) at a feasible point.
    fn gradient(
        &self,
        g: &CMatrix,
        y: &[CMatrix],
        yh: &[CMatrix],
        logw: &[f64],
        mu: f64,
    ) -> (Vec<f64>, DMatrix<f64>) {
        let d = self.d;
        let k = self.basis.len();
        let n = y.len();
        let mut gs = vec![0.0; logw.len()];
        let mut gq = DMatrix::<f64>::zeros(k, n);
        for i in 0..logw.len() {
            let w = logw[i].exp();
            let a = &y[i + 1];
            let x = &yh[i];
            let mut r = CMatrix::zeros(d, d);
            let mut lm = CMatrix::zeros(d, d);
            for xr in 0..d {
                for yc in 0..d {
                    let mut acc = cr(0.0);
                    let xv = x[(xr, yc)];
                    for pp in 0..d {
                        for qq in 0..d {
                            let gv = g[(xr * d + pp, yc * d + qq)];
                            acc += gv * a[(qq, pp)];
                            lm[(pp, qq)] += xv * gv;
                        }
                    }
                    r[(xr, yc)] = acc;
                }
            }
            let t: f64 = x.iter().zip(r.iter()).map(|(u, v)| (u * v).re).sum();
            gs[i] = 1.0 + mu * w * t;
            for j in 0..k {
                let left: f64 = self.hat[j].iter().zip(r.iter()).map(|(u, v)| (u * v).re).sum();
                let right: f64 = (&lm * &self.basis[j]).trace().re;
                gq[(j, i)] += mu * w * left;
                gq[(j, i + 1)] += mu * w * right;
            }
        }
        (gs, gq)
    }
}

fn retract(q: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = q.clone().qr();
    let mut out = qr.q();
    let r = qr.r();
    for j in 0..out.ncols() {
        if r[(j, j)] < 0.0 {
            out.column_mut(j).neg_mut();
        }
    }
    out
}

fn optimize(problem: &Problem, start: DMatrix<f64>, iterations: usize) -> Option<Chain> {
    let n = start.ncols();
    let mut q = start;
    let mut logw = vec![(0.01f64).ln(); n - 1];
    let (y, yh) = problem.elements(&q);
    let mut tries = 0;
    while problem.value(&problem.choi(&y, &yh, &logw), &logw, 1.0).is_none() {
        logw.iter_mut().for_each(|s| *s -= std::f64::consts::LN_2);
        tries += 1;
        if tries > 60 {
            return None;
        }
    }

    let mut step = 0.1;
    for &mu in &BARRIER_SCHEDULE {
        let (mut y, mut yh) = problem.elements(&q);
        let (mut f, mut g) = problem.value(&problem.choi(&y, &yh, &logw), &logw, mu)?;
        for _ in 0..iterations {
            let (gs, gq) = problem.gradient(&g, &y, &yh, &logw, mu);
            let sym = {
                let a = q.transpose() * &gq;
                (&a + a.transpose()) * 0.5
            };
            let xi = &gq - &q * sym;
            let mut accepted = false;
            for _ in 0..40 {
                let cand_w: Vec<f64> = logw.iter().zip(&gs).map(|(s, g)| s + step * g).collect();
                let cand_q = retract(&(&q + &xi * step));
                let (cy, cyh) = problem.elements(&cand_q);
                if let Some((cf, cg)) = problem.value(&problem.choi(&cy, &cyh, &cand_w), &cand_w, mu) {
                    if cf > f {
                        logw = cand_w;
                        q = cand_q;
                        y = cy;
                        yh = cyh;
                        f = cf;
                        g = cg;
                        accepted = true;
                        step *= 1.5;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
    }
    Some(Chain { q, logw })
}

fn random_frame(k: usize, n: usize, seed: u64) -> DMatrix<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::<f64>::from_fn(k, n, |_, _| StandardNormal.sample(&mut rng));
    retract(&m)
}

/// Superoperator of the weighted chain and its properness margin estimate.
fn chain_superop(problem: &Problem, chain: &Chain) -> (CMatrix, f64) {
    let (y, yh) = problem.elements(&chain.q);
    let d = problem.d;
    let mut alpha = CMatrix::zeros(d * d, d * d);
    for (i, &s) in chain.logw.iter().enumerate() {
        alpha += vec(&y[i + 1]) * vec(&yh[i].transpose()).transpose() * cr(s.exp());
    }
    let margin = chain.logw.iter().map(|s| s.exp()).product::<f64>() * hs(&yh[0], &yh[0]).sqrt();
    (alpha, margin)
}

/// Builds the chain perturbation `alpha` of order `n` for a faithful state.
pub(crate) fn faithful_alpha(state: &StateSpec, n: usize, opts: &ChainOptions) -> Result<CMatrix> {
    let basis = phi_orthogonal_basis(state)?;
    let problem = Problem::new(&basis.elements, &basis.density);
    let k = basis.elements.len();
    let mut best: Option<(CMatrix, f64)> = None;
    for start in 0..=opts.extra_starts {
        let frame = if start == 0 {
            DMatrix::<f64>::identity(k, n)
        } else {
            random_frame(k, n, opts.seed.wrapping_mul(0x9E37_79B9).wrapping_add(start as u64))
        };
        if let Some(chain) = optimize(&problem, frame, opts.iterations) {
            let (alpha, margin) = chain_superop(&problem, &chain);
            if best.as_ref().is_none_or(|(_, m)| margin > *m) {
                best = Some((alpha, margin));
            }
        }
        if best.as_ref().is_some_and(|(_, m)| *m >= opts.target_margin) {
            break;
        }
    }
    best.map(|(a, _)| a)
        .ok_or_else(|| Error::ConstructionFailed("no feasible starting point for the chain".into()))
}

/// Root of a faithful state map of order `n` (`2 <= n <= d² - 1`).
pub(crate) fn faithful_root_map(
    state: &StateSpec,
    n: usize,
    opts: &ChainOptions,
) -> Result<(CMap, EpsilonChoice)> {
    let phi = state.state_map();
    let alpha = faithful_alpha(state, n, opts)?;
    let eps = epsilon_tune(&phi, &alpha)?;
    let s = phi.superop() + alpha * cr(eps.epsilon);
    let tau = CMap::from_superop(s)?;
    let kraus = kraus_from_choi(tau.choi(), Tolerance::new(1e-14, 1e-14)?)?;
    let tau = tau.with_kraus(kraus)?;
    Ok((tau, eps))
}

pub(crate) fn kraus_unitality_residual(kraus: &[CMatrix], d: usize) -> f64 {
    let mut s = CMatrix::zeros(d, d);
    for l in kraus {
        s += l.adjoint() * l;
    }
    fro_norm(&(s - identity(d)))
}

/// Proper `n`-th root of the state map of a faithful state.
pub fn construct_state_root_faithful(
    state: &StateSpec,
    n: usize,
    opts: &ChainOptions,
) -> Result<StateRoot> {
    if !state.is_faithful() {
        return Err(Error::NotFaithful {
            rank: state.support_rank(),
            dim: state.dim(),
        });
    }
    check_state_order(state, n)?;
    let (tau, eps) = faithful_root_map(state, n, opts)?;
    let phi = state.state_map();
    let certificate = verify_proper_root(&tau, &phi, n, opts.tol)?;
    if let Some(reason) = certificate.reason() {
        return Err(Error::ConstructionFailed(reason.to_string()));
    }
    let residual = tau
        .kraus()
        .map(|k| kraus_unitality_residual(k, state.dim()))
        .unwrap_or(f64::NAN);
    Ok(StateRoot {
        tau,
        certificate,
        support_order: n,
        transient_order: 0,
        epsilon: Some(eps.epsilon),
        row: None,
        support_kraus_residual: residual,
        transient_nilpotent: true,
    })
}
