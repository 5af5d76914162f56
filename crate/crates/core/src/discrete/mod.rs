//! Proper discrete roots: certificates, structural characterizations of
//! roots of state maps, constructions and a heuristic search.

mod basis;
mod chain;
mod general;
mod oracle;
mod search;

pub use basis::{phi_orthogonal_basis, PhiBasis};
pub use chain::{construct_state_root_faithful, epsilon_tune, ChainOptions, EpsilonChoice};
pub use general::{construct_state_root_general, RowChoice};
pub use oracle::{swap_commutant_oracle, CommutantVerdict};
pub use search::{search_root_numeric, SearchOptions, SearchOutcome};

use crate::cpmap::{as_state_map, ensure_uncp, is_unital, CMap, StateSpec};
use crate::error::{Error, Result};
use crate::numerics::{
    cr, fro_norm, mat_pow, nilpotency_order, numerical_rank, CMatrix, Tolerance,
};

/// `||tau^k - phi||` must exceed this for `tau^k` to count as distinct from `phi`.
pub const PROPERNESS_FLOOR: f64 = 1e-6;

/// Choi floor used when tuning perturbations.
pub const PSD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Accepted,
    Rejected(String),
}

/// Verification record for a claimed proper `n`-th root.
#[derive(Debug, Clone, PartialEq)]
pub struct RootCertificate {
    pub n: usize,
    /// `||tau^n - phi||` (Frobenius norm of superoperators).
    pub residual_power: f64,
    /// `||tau^k - phi||` for `k = 1..n-1`.
    pub properness_margins: Vec<f64>,
    pub choi_min_eig: f64,
    pub unitality_residual: f64,
    pub verdict: Verdict,
}

impl RootCertificate {
    pub fn is_accepted(&self) -> bool {
        self.verdict == Verdict::Accepted
    }

    pub fn min_margin(&self) -> f64 {
        self.properness_margins
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn reason(&self) -> Option<&str> {
        match &self.verdict {
            Verdict::Accepted => None,
            Verdict::Rejected(r) => Some(r),
        }
    }
}

fn fmt_small(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.3e}")
    }
}

/// Shared certification logic for a root given by matrices acting on
/// vectorized observables (superoperators, or stochastic matrices).
pub(crate) fn certify(
    tau: &CMatrix,
    phi: &CMatrix,
    n: usize,
    positivity: f64,
    unitality_residual: f64,
    tol: Tolerance,
) -> RootCertificate {
    let mut margins = Vec::with_capacity(n.saturating_sub(1));
    let mut power = tau.clone();
    for _ in 1..n {
        margins.push(fro_norm(&(&power - phi)));
        power = &power * tau;
    }
    let residual = fro_norm(&(&power - phi));
    let bound = tol.bound(fro_norm(phi));
    let verdict = if let Some((k, m)) = margins
        .iter()
        .enumerate()
        .find(|(_, &m)| m <= PROPERNESS_FLOOR)
    {
        Verdict::Rejected(format!("properness margin {} at k={}", fmt_small(*m), k + 1))
    } else if residual > bound {
        Verdict::Rejected(format!(
            "residual ||tau^{n} - phi|| = {residual:.3e} exceeds {bound:.3e}"
        ))
    } else if positivity < -tol.bound(1.0) {
        Verdict::Rejected(format!("positivity witness {positivity:.3e} is negative"))
    } else if unitality_residual > tol.bound(1.0) {
        Verdict::Rejected(format!("unitality residual {unitality_residual:.3e}"))
    } else {
        Verdict::Accepted
    };
    RootCertificate {
        n,
        residual_power: residual,
        properness_margins: margins,
        choi_min_eig: positivity,
        unitality_residual,
        verdict,
    }
}

/// Checks `tau^n = phi` and `tau^k != phi` for `k < n`, plus CP and unitality of `tau`.
pub fn verify_proper_root(tau: &CMap, phi: &CMap, n: usize, tol: Tolerance) -> Result<RootCertificate> {
    if tau.dim() != phi.dim() {
        return Err(Error::ShapeMismatch(format!(
            "tau acts on M_{} but phi on M_{}",
            tau.dim(),
            phi.dim()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!("root order must be at least 2, got {n}")));
    }
    let (_, choi_min) = crate::cpmap::is_cp(tau, tol);
    let unit = crate::cpmap::unital_residual(tau);
    Ok(certify(tau.superop(), phi.superop(), n, choi_min, unit, tol))
}

/// Largest order of a proper root of a state map of support rank `r` on `M_d`.
pub fn max_root_order_state(d: usize, r: usize) -> Result<usize> {
    if r == 0 || r > d {
        return Err(Error::BadRank { d, r });
    }
    Ok(d + r * r - r - 1)
}

/// Splits a root of a state map as `tau = phi + alpha` with `alpha` nilpotent
/// and `alpha∘phi = 0 = phi∘alpha`. Returns the superoperator of `alpha` and
/// its nilpotency order.
pub fn state_root_decompose(tau: &CMap, phi: &CMap, tol: Tolerance) -> Result<(CMatrix, usize)> {
    if tau.dim() != phi.dim() {
        return Err(Error::ShapeMismatch("tau and phi act on different algebras".into()));
    }
    if as_state_map(phi, tol).is_none() {
        return Err(Error::NotAStateRoot("phi is not a rank-one unital state map".into()));
    }
    let s_phi = phi.superop();
    let alpha = tau.superop() - s_phi;
    let order = nilpotency_order(&alpha, tol)
        .map_err(|_| Error::NotAStateRoot("tau - phi is not nilpotent".into()))?;
    let left = fro_norm(&(&alpha * s_phi));
    if left > tol.bound(fro_norm(&alpha)) {
        return Err(Error::NotAStateRoot(format!("alpha∘phi has norm {left:.3e}")));
    }
    let right = fro_norm(&(s_phi * &alpha));
    if right > tol.bound(fro_norm(&alpha)) {
        return Err(Error::NotAStateRoot(format!("phi∘alpha has norm {right:.3e}")));
    }
    Ok((alpha, order))
}

/// [`state_root_decompose`] against the state map of `state`.
pub fn state_root_decompose_for(
    tau: &CMap,
    state: &StateSpec,
    tol: Tolerance,
) -> Result<(CMatrix, usize)> {
    state_root_decompose(tau, &state.state_map(), tol)
}

/// Four equivalent characterizations of "tau is a root of some state map".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateRootConditions {
    /// Some power `tau^n`, `n <= p - 1`, is a rank-one unital map.
    pub rank_one_power: bool,
    /// The nilpotent decomposition succeeds against `tau^p`.
    pub nilpotent_decomposition: bool,
    /// Eigenvalue 0 has algebraic multiplicity `p - 1`.
    pub zero_multiplicity: bool,
    /// `tr tau^k = 1` for `k = 1..p`.
    pub unit_traces: bool,
    /// First power found to be rank one, if any.
    pub first_rank_one_power: Option<usize>,
    /// Algebraic multiplicity of the eigenvalue 0.
    pub zero_eigen_multiplicity: usize,
}

impl StateRootConditions {
    pub fn all(&self) -> bool {
        self.rank_one_power && self.nilpotent_decomposition && self.zero_multiplicity && self.unit_traces
    }

    pub fn none(&self) -> bool {
        !self.rank_one_power && !self.nilpotent_decomposition && !self.zero_multiplicity && !self.unit_traces
    }
}

/// Evaluates the four conditions for a UNCP map on `M_d` with `p = d²`.
///
/// The multiplicity of the eigenvalue 0 is computed as `p - rank(S^p)`,
/// the dimension of the generalized kernel.
pub fn state_root_conditions(tau: &CMap, tol: Tolerance) -> Result<StateRootConditions> {
    ensure_uncp(tau, tol)?;
    let s = tau.superop();
    let p = s.nrows();

    let mut first_rank_one = None;
    let mut power = s.clone();
    for k in 1..p {
        if k > 1 {
            power = &power * s;
        }
        if numerical_rank(&power, tol) == 1 {
            let m = CMap::from_superop(power.clone())?;
            if is_unital(&m, tol) {
                first_rank_one = Some(k);
                break;
            }
        }
    }

    let s_p = mat_pow(s, p);
    let phi = CMap::from_superop(s_p.clone())?;
    let decomposition = state_root_decompose(tau, &phi, tol).is_ok();

    let zero_mult = p - numerical_rank(&s_p, tol);

    let mut traces_ok = true;
    let mut power = s.clone();
    for k in 1..=p {
        if k > 1 {
            power = &power * s;
        }
        let tr = power.trace();
        if (tr - cr(1.0)).norm() > tol.bound(1.0) {
            traces_ok = false;
            break;
        }
    }

    Ok(StateRootConditions {
        rank_one_power: first_rank_one.is_some(),
        nilpotent_decomposition: decomposition,
        zero_multiplicity: zero_mult == p - 1,
        unit_traces: traces_ok,
        first_rank_one_power: first_rank_one,
        zero_eigen_multiplicity: zero_mult,
    })
}

/// A constructed root of a state map with its certificate.
#[derive(Debug, Clone)]
pub struct StateRoot {
    pub tau: CMap,
    pub certificate: RootCertificate,
    /// Order of the faithful root on the support (`n` itself when faithful).
    pub support_order: usize,
    /// Length of the transient chain outside the support (0 when faithful).
    pub transient_order: usize,
    /// Perturbation scale selected by [`epsilon_tune`], when one was used.
    pub epsilon: Option<f64>,
    /// Row used to hand the transient chain over to the support.
    pub row: Option<RowChoice>,
    /// `||Σ A_i* A_i - 1||` for the support blocks.
    pub support_kraus_residual: f64,
    /// Whether all products of `d - r` transient blocks vanish.
    pub transient_nilpotent: bool,
}

/// Admissible range check shared by the constructors.
pub(crate) fn check_state_order(state: &StateSpec, n: usize) -> Result<()> {
    let max = max_root_order_state(state.dim(), state.support_rank())?;
    if n < 2 || n > max {
        return Err(Error::OrderOutOfRange {
            n,
            range: if max >= 2 {
                format!("[2, {max}]")
            } else {
                "empty".to_string()
            },
        });
    }
    Ok(())
}

/// Proper `n`-th root of the state map of `state`; dispatches on faithfulness.
pub fn construct_state_root(state: &StateSpec, n: usize, opts: &ChainOptions) -> Result<StateRoot> {
    if state.is_faithful() {
        construct_state_root_faithful(state, n, opts)
    } else {
        construct_state_root_general(state, n, opts)
    }
}
