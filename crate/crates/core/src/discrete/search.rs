//! Heuristic search for proper roots of arbitrary UNCP maps.
//!
//! Minimizes `||S(K)^n - S_phi||²` over stacked Kraus matrices `K` with
//! `K* K = 1` (unital maps) by Riemannian gradient descent on the complex
//! Stiefel manifold. Deciding existence of roots is hard in general, so a
//! failed search proves nothing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{verify_proper_root, RootCertificate};
use crate::cpmap::{superop_from_kraus, CMap};
use crate::error::{Error, Result};
use crate::numerics::{c, cr, mat_pow, CMatrix, Tolerance};

const POLISH_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub restarts: usize,
    /// Gradient iterations before the Levenberg–Marquardt polish.
    pub max_iters: usize,
    pub seed: u64,
    /// Number of Kraus operators; defaults to `d²`.
    pub kraus_count: Option<usize>,
    pub tol: Tolerance,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            restarts: 8,
            max_iters: 500,
            seed: 0,
            kraus_count: None,
            tol: Tolerance::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Found {
        tau: CMap,
        certificate: RootCertificate,
        restart: usize,
    },
    /// No accepted root was found. This says nothing about existence.
    Inconclusive {
        best_residual: f64,
        best_certificate: Option<RootCertificate>,
        restarts: usize,
    },
}

impl SearchOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, SearchOutcome::Found { .. })
    }
}

fn blocks(k: &CMatrix, d: usize) -> Vec<CMatrix> {
    (0..k.nrows() / d)
        .map(|i| k.view((i * d, 0), (d, d)).into_owned())
        .collect()
}

fn retract(m: &CMatrix) -> CMatrix {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        let z = r[(j, j)];
        if z.norm() > 0.0 {
            let ph = z / cr(z.norm());
            let mut col = q.column_mut(j);
            col *= ph;
        }
    }
    q
}

struct Objective<'a> {
    phi: &'a CMatrix,
    n: usize,
    d: usize,
}

impl Objective<'_> {
    fn value(&self, k: &CMatrix) -> f64 {
        let s = superop_from_kraus(&blocks(k, self.d), self.d);
        let e = mat_pow(&s, self.n) - self.phi;
        e.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Euclidean gradient with respect to the complex entries of `K`.
    fn gradient(&self, k: &CMatrix) -> CMatrix {
        let d = self.d;
        let ls = blocks(k, d);
        let s = superop_from_kraus(&ls, d);
        let mut powers = vec![CMatrix::identity(d * d, d * d)];
        for i in 1..=self.n {
            let next = &powers[i - 1] * &s;
            powers.push(next);
        }
        let e_adj = (&powers[self.n] - self.phi).adjoint();
        let mut h = CMatrix::zeros(d * d, d * d);
        for j in 0..self.n {
            h += &powers[self.n - 1 - j] * &e_adj * &powers[j];
        }
        let mut grad = CMatrix::zeros(k.nrows(), d);
        for (i, l) in ls.iter().enumerate() {
            let a = l.adjoint();
            let mut g = CMatrix::zeros(d, d);
            for x in 0..d {
                for y in 0..d {
                    let mut r1 = cr(0.0);
                    for p in 0..d {
                        for q in 0..d {
                            let hv = h[(x * d + p, y * d + q)];
                            r1 += hv * a[(q, p)];
                            g[(p, q)] += l[(x, y)] * hv;
                        }
                    }
                    g[(x, y)] += r1.conj();
                }
            }
            grad.view_mut((i * d, 0), (d, d)).copy_from(&(g * cr(2.0)));
        }
        grad
    }
}

fn descend(obj: &Objective, mut k: CMatrix, max_iters: usize) -> (CMatrix, f64) {
    let mut f = obj.value(&k);
    let mut step = 0.1;
    for _ in 0..max_iters {
        if f < 1e-26 {
            break;
        }
        let g = obj.gradient(&k);
        let kg = k.adjoint() * &g;
        let xi = &g - &k * ((&kg + kg.adjoint()) * cr(0.5));
        let mut moved = false;
        for _ in 0..50 {
            let cand = retract(&(&k - &xi * cr(step)));
            let cf = obj.value(&cand);
            if cf < f {
                k = cand;
                f = cf;
                step *= 1.5;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (k, f)
}

/// Real Jacobian of `vec(S(K)^n - S_phi)` (real and imaginary parts stacked)
/// with respect to the real and imaginary parts of the entries of `K`.
fn jacobian(obj: &Objective, k: &CMatrix) -> nalgebra::DMatrix<f64> {
    let d = obj.d;
    let ls = blocks(k, d);
    let s = superop_from_kraus(&ls, d);
    let mut powers = vec![CMatrix::identity(d * d, d * d)];
    for i in 1..obj.n {
        let next = &powers[i - 1] * &s;
        powers.push(next);
    }
    let m = d * d * d * d;
    let params = 2 * k.nrows() * d;
    let mut jac = nalgebra::DMatrix::<f64>::zeros(2 * m, params);
    let mut col = 0;
    for l in &ls {
        let lt = l.transpose();
        let la = l.adjoint();
        for a in 0..d {
            for b in 0..d {
                for unit in [cr(1.0), c(0.0, 1.0)] {
                    let mut delta = CMatrix::zeros(d, d);
                    delta[(a, b)] = unit;
                    let ds = crate::numerics::kron(&delta.transpose(), &la)
                        + crate::numerics::kron(&lt, &delta.adjoint());
                    let mut dr = CMatrix::zeros(d * d, d * d);
                    for j in 0..obj.n {
                        dr += &powers[j] * &ds * &powers[obj.n - 1 - j];
                    }
                    for (idx, z) in dr.iter().enumerate() {
                        jac[(idx, col)] = z.re;
                        jac[(m + idx, col)] = z.im;
                    }
                    col += 1;
                }
            }
        }
    }
    jac
}

fn residual_vector(obj: &Objective, k: &CMatrix) -> nalgebra::DVector<f64> {
    let s = superop_from_kraus(&blocks(k, obj.d), obj.d);
    let e = mat_pow(&s, obj.n) - obj.phi;
    let m = e.len();
    let mut r = nalgebra::DVector::<f64>::zeros(2 * m);
    for (idx, z) in e.iter().enumerate() {
        r[idx] = z.re;
        r[m + idx] = z.im;
    }
    r
}

/// Levenberg–Marquardt steps projected onto the tangent space.
fn polish(obj: &Objective, mut k: CMatrix, max_iters: usize) -> (CMatrix, f64) {
    let d = obj.d;
    let mut f = obj.value(&k);
    let mut lambda = 1e-3;
    for _ in 0..max_iters {
        if f < 1e-26 {
            break;
        }
        let jac = jacobian(obj, &k);
        let r = residual_vector(obj, &k);
        let jjt = &jac * jac.transpose();
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jjt.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda;
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = -(jac.transpose() * chol.solve(&r));
            let mut xi = CMatrix::zeros(k.nrows(), d);
            let mut idx = 0;
            for blk in 0..k.nrows() / d {
                for a in 0..d {
                    for b in 0..d {
                        xi[(blk * d + a, b)] = c(step[idx], step[idx + 1]);
                        idx += 2;
                    }
                }
            }
            let kx = k.adjoint() * &xi;
            let xi = &xi - &k * ((&kx + kx.adjoint()) * cr(0.5));
            let cand = retract(&(&k + xi));
            let cf = obj.value(&cand);
            if cf < f {
                k = cand;
                f = cf;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (k, f)
}

fn random_isometry(rows: usize, cols: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = CMatrix::from_fn(rows, cols, |_, _| {
        c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    retract(&m)
}

/// Multi-restart local search for a proper `n`-th root of `phi`.
pub fn search_root_numeric(phi: &CMap, n: usize, opts: &SearchOptions) -> Result<SearchOutcome> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("root order must be at least 2, got {n}")));
    }
    let d = phi.dim();
    let count = opts.kraus_count.unwrap_or(d * d).max(1);
    let obj = Objective {
        phi: phi.superop(),
        n,
        d,
    };
    let runs: Vec<(usize, f64, Option<(CMap, RootCertificate)>)> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|restart| {
            let seed = opts.seed.wrapping_mul(1_000_003).wrapping_add(restart as u64);
            let k0 = random_isometry(count * d, d, seed);
            let (k, _) = descend(&obj, k0, opts.max_iters);
            let (k, f) = polish(&obj, k, POLISH_ITERS);
            let verified = CMap::from_kraus(blocks(&k, d))
                .ok()
                .and_then(|tau| verify_proper_root(&tau, phi, n, opts.tol).ok().map(|c| (tau, c)));
            (restart, f.sqrt(), verified)
        })
        .collect();

    let mut best_residual = f64::INFINITY;
    let mut best_certificate = None;
    for (restart, residual, verified) in runs {
        if let Some((tau, cert)) = verified {
            if cert.is_accepted() {
                return Ok(SearchOutcome::Found {
                    tau,
                    certificate: cert,
                    restart,
                });
            }
            if residual < best_residual {
                best_residual = residual;
                best_certificate = Some(cert);
            }
        }
    }
    Ok(SearchOutcome::Inconclusive {
        best_residual,
        best_certificate,
        restarts: opts.restarts.max(1),
    })
}
