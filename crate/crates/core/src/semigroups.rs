//! Continuous-time roots: generators, rate laws, refutations and the grid
//! realization of the shift construction for pure states.

use crate::cpmap::{choi_from_superop, ensure_uncp, is_idempotent, CMap, StateSpec};
use crate::discrete::PROPERNESS_FLOOR;
use crate::error::{Error, Result};
use crate::numerics::{
    cr, e_ij, eig_hermitian, fro_norm, hermiticity_residual, mat_exp, mat_log_principal,
    mul_sparse_left, op_norm, singular_values, vec, CMatrix, Tolerance,
};

/// Times at which properness of a continuous root is sampled.
pub const PROPERNESS_TIMES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Generator `L` of a semigroup `t -> exp(tL)` on `M_d`.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub dim: usize,
    pub generator: CMatrix,
    pub ccp: bool,
    /// Smallest eigenvalue of the compressed Choi matrix of `L`.
    pub ccp_witness: f64,
    /// `||L(1)||_F`.
    pub unital_residual: f64,
}

impl GeneratorSpec {
    pub fn new(generator: CMatrix, tol: Tolerance) -> Result<Self> {
        let n = generator.nrows();
        let d = (n as f64).sqrt().round() as usize;
        if generator.ncols() != n || d * d != n || d == 0 {
            return Err(Error::ShapeMismatch(format!(
                "generator of shape {}x{} is not a superoperator",
                n,
                generator.ncols()
            )));
        }
        let (ccp, ccp_witness) = is_ccp(&generator, tol);
        let unital_residual = (&generator * vec(&CMatrix::identity(d, d))).norm();
        Ok(GeneratorSpec {
            dim: d,
            generator,
            ccp,
            ccp_witness,
            unital_residual,
        })
    }

    /// Superoperator eigenvalues of the generator.
    pub fn eigenvalues(&self) -> Result<Vec<num_complex::Complex64>> {
        crate::numerics::eigenvalues(&self.generator)
    }
}

/// Conditional complete positivity of a superoperator `L`: Hermiticity
/// preservation, `L(1) = 0`, and positivity of the Choi matrix compressed
/// to the complement of the maximally entangled vector. Returns the flag and
/// the smallest eigenvalue of the compressed Choi matrix.
pub fn is_ccp(l: &CMatrix, tol: Tolerance) -> (bool, f64) {
    let n = l.nrows();
    let d = (n as f64).sqrt().round() as usize;
    if l.ncols() != n || d * d != n {
        return (false, f64::NEG_INFINITY);
    }
    let choi = choi_from_superop(l, d);
    let scale = fro_norm(&choi).max(1.0);
    let herm = hermiticity_residual(&choi) <= tol.bound(scale);
    let unital = (l * vec(&CMatrix::identity(d, d))).norm() <= tol.bound(scale);
    let mut omega = crate::numerics::CVector::zeros(n);
    for i in 0..d {
        omega[i * d + i] = cr(1.0 / (d as f64).sqrt());
    }
    let q = CMatrix::identity(n, n) - &omega * omega.adjoint();
    let compressed = crate::numerics::hermitian_part(&(&q * &choi * &q));
    let witness = eig_hermitian(&compressed)
        .map(|(v, _)| v[0])
        .unwrap_or(f64::NEG_INFINITY);
    (herm && unital && witness >= -tol.bound(scale), witness)
}

/// Asymptotic continuous root `exp(t(phi - id))` of an idempotent UNCP map.
pub fn asymptotic_root(phi: &CMap, tol: Tolerance) -> Result<GeneratorSpec> {
    ensure_uncp(phi, tol)?;
    if !is_idempotent(phi, tol) {
        return Err(Error::NotIdempotent {
            residual: crate::cpmap::idempotency_residual(phi),
        });
    }
    let n = phi.superop().nrows();
    GeneratorSpec::new(phi.superop() - CMatrix::identity(n, n), tol)
}

/// `exp(tL)` as a map.
pub fn evaluate(gen: &GeneratorSpec, t: f64) -> Result<CMap> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("time must be finite and nonnegative, got {t}")));
    }
    CMap::from_superop(mat_exp(&(&gen.generator * cr(t)))?)
}

/// `| ||tau_t(x) - phi(x)|| - e^{-t} ||x - phi(x)|| |` per time (Frobenius norm).
pub fn asymptotic_rate_check(
    gen: &GeneratorSpec,
    phi: &CMap,
    x: &CMatrix,
    ts: &[f64],
) -> Result<Vec<f64>> {
    let fx = phi.apply(x)?;
    let base = fro_norm(&(x - &fx));
    ts.iter()
        .map(|&t| {
            let y = evaluate(gen, t)?.apply(x)?;
            Ok((fro_norm(&(&y - &fx)) - (-t).exp() * base).abs())
        })
        .collect()
}

/// `(|psi(tau_t(x)) - psi(phi(x))|, 2 e^{-t} ||x||)` for a density `psi`,
/// with the operator norm. For a state map `phi` this is the absorbing bound.
pub fn absorbing_bound(
    gen: &GeneratorSpec,
    phi: &CMap,
    psi: &StateSpec,
    x: &CMatrix,
    t: f64,
) -> Result<(f64, f64)> {
    let y = evaluate(gen, t)?.apply(x)?;
    let fx = phi.apply(x)?;
    let lhs = (psi.expectation(&y) - psi.expectation(&fx)).norm();
    Ok((lhs, 2.0 * (-t).exp() * op_norm(x)))
}

/// Why no continuous root was extracted.
#[derive(Debug, Clone, PartialEq)]
pub enum Refutation {
    /// The superoperator is singular, so no semigroup reaches it.
    NotBijective { sigma_min: f64 },
    /// The principal logarithm does not exist. Other branches are not tried.
    NoPrincipalBranch(String),
    /// The principal logarithm is not conditionally completely positive.
    NotCcp { witness: f64 },
    /// The principal generator reaches `phi` before time 1.
    NotProper { t: f64, distance: f64 },
}

impl Refutation {
    /// Whether the refutation only concerns the principal branch.
    pub fn is_heuristic(&self) -> bool {
        !matches!(self, Refutation::NotBijective { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Refutation::NotBijective { .. } => "NotBijective",
            Refutation::NoPrincipalBranch(_) => "NoPrincipalBranch",
            Refutation::NotCcp { .. } => "NotCCP",
            Refutation::NotProper { .. } => "NotProper",
        }
    }
}

#[derive(Debug, Clone)]
pub enum CandidateOutcome {
    Generator(GeneratorSpec),
    Refuted(Refutation),
}

/// Principal-branch candidate for a proper continuous root of `phi`.
pub fn continuous_root_candidate(phi: &CMap, tol: Tolerance) -> Result<CandidateOutcome> {
    ensure_uncp(phi, tol)?;
    let s = phi.superop();
    let sigma_min = singular_values(s).last().copied().unwrap_or(0.0);
    if sigma_min <= tol.bound(1.0) {
        return Ok(CandidateOutcome::Refuted(Refutation::NotBijective { sigma_min }));
    }
    let l = match mat_log_principal(s) {
        Ok(l) => l,
        Err(Error::NoPrincipalLog(msg)) => {
            return Ok(CandidateOutcome::Refuted(Refutation::NoPrincipalBranch(msg)))
        }
        Err(e) => return Err(e),
    };
    let gen = GeneratorSpec::new(l, tol)?;
    if !gen.ccp || gen.unital_residual > tol.bound(1.0) {
        return Ok(CandidateOutcome::Refuted(Refutation::NotCcp {
            witness: gen.ccp_witness,
        }));
    }
    let back = mat_exp(&gen.generator)?;
    if fro_norm(&(&back - s)) > 1e-8 {
        return Err(Error::VerificationFailed(format!(
            "exp(log(phi)) differs from phi by {:.3e}",
            fro_norm(&(&back - s))
        )));
    }
    for &t in &PROPERNESS_TIMES {
        let distance = evaluate(&gen, t)?.distance(phi);
        if distance <= PROPERNESS_FLOOR {
            return Ok(CandidateOutcome::Refuted(Refutation::NotProper { t, distance }));
        }
    }
    Ok(CandidateOutcome::Generator(gen))
}

/// `||phi ∘ tau_t - phi||` for each `t` (composition in the Heisenberg picture).
pub fn state_invariance_check(
    family: impl Fn(f64) -> Result<CMap>,
    phi: &CMap,
    ts: &[f64],
) -> Result<Vec<f64>> {
    ts.iter()
        .map(|&t| Ok(fro_norm(&(mul_sparse_left(phi.superop(), family(t)?.superop()) - phi.superop()))))
        .collect()
}

/// `||psi ∘ tau_t - phi||` for each `t >= 1`.
pub fn absorption_check(
    psi: &CMap,
    family: impl Fn(f64) -> Result<CMap>,
    phi: &CMap,
    ts: &[f64],
) -> Result<Vec<f64>> {
    ts.iter()
        .map(|&t| {
            if t < 1.0 {
                return Err(Error::InvalidInput(format!("absorption is checked for t >= 1, got {t}")));
            }
            Ok(fro_norm(&(mul_sparse_left(psi.superop(), family(t)?.superop()) - phi.superop())))
        })
        .collect()
}

/// Grid of `m` cells discretizing `[0, 1]`; the algebra is `M_{1+m}` and the
/// state is the vector state of `e_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridShiftSpec {
    pub m: usize,
}

impl GridShiftSpec {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::BadGrid(m));
        }
        Ok(GridShiftSpec { m })
    }

    pub fn dim(&self) -> usize {
        self.m + 1
    }

    /// The one-cell right shift on the grid cells.
    pub fn step(&self) -> CMatrix {
        let mut s = CMatrix::zeros(self.m, self.m);
        for i in 0..self.m - 1 {
            s[(i + 1, i)] = cr(1.0);
        }
        s
    }

    /// The vector state of `e_1` as a map.
    pub fn state_map(&self) -> CMap {
        StateSpec::pure(self.dim(), 0)
            .expect("grid dimension is at least 3")
            .state_map()
    }
}

/// `tau_{k/m}(x) = V x V* + x_11 (1 - V V*)` with `V = 1 ⊕ S^k`, and `phi` for `t >= 1`.
#[derive(Debug, Clone)]
pub struct GridShiftFamily {
    pub spec: GridShiftSpec,
    maps: Vec<CMap>,
}

impl GridShiftFamily {
    /// Map at grid step `k`; `k >= m` gives the state map.
    pub fn at_step(&self, k: usize) -> &CMap {
        &self.maps[k.min(self.spec.m)]
    }

    /// Map at time `t`, which must be a grid time when `t < 1`.
    pub fn at(&self, t: f64) -> Result<CMap> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("time must be finite and nonnegative, got {t}")));
        }
        if t >= 1.0 {
            return Ok(self.maps[self.spec.m].clone());
        }
        let k = (t * self.spec.m as f64).round();
        if (k - t * self.spec.m as f64).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "time {t} is not on the grid of resolution {}",
                self.spec.m
            )));
        }
        Ok(self.maps[k as usize].clone())
    }
}

impl GridShiftFamily {
    /// `max ||S_j S_k - S_{j+k}||_F` over `j + k <= m`.
    pub fn semigroup_residual(&self) -> f64 {
        let m = self.spec.m;
        let mut worst: f64 = 0.0;
        for j in 0..=m {
            for k in 0..=m - j {
                let prod = mul_sparse_left(self.maps[j].superop(), self.maps[k].superop());
                worst = worst.max(fro_norm(&(prod - self.maps[j + k].superop())));
            }
        }
        worst
    }
}

pub fn grid_shift_root(spec: GridShiftSpec) -> Result<GridShiftFamily> {
    let GridShiftSpec { m } = GridShiftSpec::new(spec.m)?;
    let d = m + 1;
    let step = spec.step();
    let mut shift = CMatrix::identity(m, m);
    let mut maps = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let mut v = CMatrix::zeros(d, d);
        v[(0, 0)] = cr(1.0);
        v.view_mut((1, 1), (m, m)).copy_from(&shift);
        let mut kraus = vec![v.adjoint()];
        // S^k misses the first k cells.
        for cell in 0..k {
            kraus.push(e_ij(d, 0, 1 + cell));
        }
        maps.push(CMap::from_kraus(kraus)?);
        shift = &step * &shift;
    }
    Ok(GridShiftFamily { spec, maps })
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateRefutation {
    /// The compression of the state map to its support is not bijective.
    Refuted {
        sigma_min: f64,
        rank: usize,
        superop_dim: usize,
    },
    /// Pure states have proper continuous roots.
    NotApplicable,
}

/// Non-existence witness for proper continuous roots of mixed state maps.
pub fn refute_continuous_root_state(state: &StateSpec) -> Result<StateRefutation> {
    let r = state.support_rank();
    if r <= 1 {
        return Ok(StateRefutation::NotApplicable);
    }
    let tol = Tolerance::default();
    let compressed = crate::cpmap::compress(&state.state_map(), &state.support_projection(), tol)?;
    let s = compressed.superop();
    let sv = singular_values(s);
    let rank = crate::numerics::numerical_rank(s, tol);
    Ok(StateRefutation::Refuted {
        sigma_min: sv.last().copied().unwrap_or(0.0),
        rank,
        superop_dim: s.nrows(),
    })
}
