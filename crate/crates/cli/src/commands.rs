use std::path::PathBuf;

use cproots_core::commutative::{
    commutative_root_range, construct_commutative_root, zero_eigen_multiplicity, CommutativeOptions,
};
use cproots_core::cpmap::{as_state_map, idempotency_residual, is_cp, is_unital, unital_residual};
use cproots_core::discrete::{
    max_root_order_state, search_root_numeric, swap_commutant_oracle, ChainOptions, CommutantVerdict,
    SearchOptions, SearchOutcome,
};
use cproots_core::numerics::{e_ij, fro_norm};
use cproots_core::semigroups::{
    absorption_check, asymptotic_rate_check, asymptotic_root, continuous_root_candidate, evaluate,
    grid_shift_root, refute_continuous_root_state, state_invariance_check, CandidateOutcome,
    GeneratorSpec, GridShiftSpec, StateRefutation, PROPERNESS_TIMES,
};
use cproots_core::{
    construct_state_root, fixtures, support_projection, verify_proper_root, CMap, CMatrix, Error,
    StateSpec, Tolerance,
};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::input::{load_density, load_map, load_prob};
use crate::matrix_file;
use crate::report::{Outcome, Report};

pub type CmdResult = Result<Report, CliError>;

pub struct Context {
    pub out: Option<PathBuf>,
    pub tol: Tolerance,
}

impl Context {
    fn report(&self, command: &str) -> Report {
        let mut r = Report::new(command);
        r.input("tol", json!({ "abs": self.tol.abs_eps, "rel": self.tol.rel_eps }));
        r
    }

    /// Writes a matrix artifact when `--out` is set.
    fn emit(&self, report: &mut Report, name: &str, m: &CMatrix) -> Result<(), CliError> {
        if let Some(dir) = &self.out {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
            let path = dir.join(name);
            matrix_file::write(&path, m)?;
            report.artifacts.push(path.display().to_string());
        }
        Ok(())
    }
}

fn complex_list(zs: &[num_complex::Complex64]) -> Vec<[f64; 2]> {
    zs.iter().map(|z| [z.re, z.im]).collect()
}

fn sorted_eigenvalues(gen: &GeneratorSpec) -> Result<Vec<[f64; 2]>, CliError> {
    let mut ev = gen.eigenvalues()?;
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(complex_list(&ev))
}

fn refuted(report: &mut Report, e: &Error) {
    report.verdict = Outcome::Refuted;
    report.reason = Some(e.to_string());
}

pub fn check_cp(ctx: &Context, map: &str) -> CmdResult {
    let map = load_map(map)?;
    let phi = &map.value;
    let mut r = ctx.report("check-cp");
    r.input("map", map.record);
    let (cp, lo) = is_cp(phi, ctx.tol);
    r.residual("choi_min_eig", lo)
        .residual("unitality", unital_residual(phi))
        .residual("idempotency", idempotency_residual(phi));
    r.detail("dim", phi.dim())
        .detail("cp", cp)
        .detail("unital", is_unital(phi, ctx.tol))
        .detail("idempotent", idempotency_residual(phi) <= ctx.tol.bound(fro_norm(phi.superop())));
    r.verdict = Outcome::from_flag(cp);
    if !cp {
        r.reason = Some(format!("Choi matrix has eigenvalue {lo:.3e}"));
    }
    Ok(r)
}

pub fn support(ctx: &Context, map: &str) -> CmdResult {
    let map = load_map(map)?;
    let mut r = ctx.report("support");
    r.input("map", map.record);
    let p = support_projection(&map.value, ctx.tol)?;
    let m = p.matrix();
    r.residual("idempotency", fro_norm(&(m * m - m)))
        .residual("hermiticity", fro_norm(&(m - m.adjoint())));
    r.detail("dim", p.dim())
        .detail("rank", p.rank())
        .detail("projection", matrix_file::to_value(m));
    ctx.emit(&mut r, "projection.json", m)?;
    Ok(r)
}

pub fn root_state(ctx: &Context, density: &str, n: usize, seed: u64) -> CmdResult {
    let st = load_density(density)?;
    let state: &StateSpec = &st.value;
    let mut r = ctx.report("root state");
    r.input("density", st.record).input("n", n);
    r.seed = Some(seed);
    let (d, rank) = (state.dim(), state.support_rank());
    r.detail("dim", d)
        .detail("support_rank", rank)
        .detail("max_order", max_root_order_state(d, rank)?);
    let opts = ChainOptions {
        seed,
        tol: ctx.tol,
        ..ChainOptions::default()
    };
    let root = match construct_state_root(state, n, &opts) {
        Ok(root) => root,
        Err(e @ Error::OrderOutOfRange { .. }) => {
            refuted(&mut r, &e);
            return Ok(r);
        }
        Err(e) => return Err(e.into()),
    };
    r.certify(&root.certificate);
    r.detail("support_order", root.support_order)
        .detail("transient_order", root.transient_order)
        .detail("epsilon", root.epsilon)
        .detail("row", root.row.map(|row| format!("{row:?}")))
        .detail("transient_nilpotent", root.transient_nilpotent);
    r.residual("support_kraus", root.support_kraus_residual);
    ctx.emit(&mut r, "tau.json", root.tau.superop())?;
    Ok(r)
}

pub fn root_stochastic(ctx: &Context, p: &str, n: usize) -> CmdResult {
    let p = load_prob(p)?;
    let prob = &p.value;
    let mut r = ctx.report("root stochastic");
    r.input("p", p.record).input("n", n);
    r.detail("dim", prob.dim())
        .detail("support_rank", prob.support_rank())
        .detail("admissible_orders", commutative_root_range(prob.dim()));
    let opts = CommutativeOptions { tol: ctx.tol };
    let root = match construct_commutative_root(prob, n, &opts) {
        Ok(root) => root,
        Err(e @ Error::OrderOutOfRange { .. }) => {
            refuted(&mut r, &e);
            return Ok(r);
        }
        Err(e) => return Err(e.into()),
    };
    r.certify(&root.certificate);
    let stationarity = root
        .tau
        .left_apply(prob.entries())
        .iter()
        .zip(prob.entries())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    r.residual("row_sums", root.tau.row_sum_residual())
        .residual("stationarity", stationarity)
        .residual("min_entry", root.tau.min_entry());
    r.detail("case", format!("{:?}", root.case))
        .detail("split", root.split)
        .detail("row", root.row)
        .detail("epsilon", root.epsilon)
        .detail("zero_eigen_multiplicity", zero_eigen_multiplicity(root.tau.matrix()));
    ctx.emit(&mut r, "tau.json", &root.tau.to_complex())?;
    Ok(r)
}

fn oracle_value(v: &CommutantVerdict) -> Value {
    match v {
        CommutantVerdict::NotApplicable(why) => json!({ "verdict": "not applicable", "why": why }),
        CommutantVerdict::NoRoot { grid_min } => json!({ "verdict": "no root", "grid_min": grid_min }),
        CommutantVerdict::OnlyTrivialRoot => json!({ "verdict": "only the trivial root" }),
        CommutantVerdict::UniqueRoot { z, .. } => json!({ "verdict": "unique proper root", "z": [z.0, z.1] }),
    }
}

pub fn root_search(ctx: &Context, map: &str, n: usize, restarts: usize, seed: u64) -> CmdResult {
    let map = load_map(map)?;
    let phi = &map.value;
    let mut r = ctx.report("root search");
    r.input("map", map.record).input("n", n).input("restarts", restarts);
    r.seed = Some(seed);
    let opts = SearchOptions {
        restarts,
        seed,
        tol: ctx.tol,
        ..SearchOptions::default()
    };
    match search_root_numeric(phi, n, &opts)? {
        SearchOutcome::Found {
            tau,
            certificate,
            restart,
        } => {
            r.certify(&certificate);
            r.detail("restart", restart);
            ctx.emit(&mut r, "tau.json", tau.superop())?;
        }
        SearchOutcome::Inconclusive {
            best_residual,
            best_certificate,
            restarts,
        } => {
            r.verdict = Outcome::Inconclusive;
            r.reason = Some(format!(
                "no accepted root in {restarts} restarts; this does not refute existence"
            ));
            r.residual("best", best_residual);
            r.detail(
                "best_certificate",
                best_certificate.as_ref().map(crate::report::certificate_value),
            );
        }
    }
    r.detail("oracle", oracle_value(&swap_commutant_oracle(phi, n)?));
    Ok(r)
}

pub fn verify_root(ctx: &Context, tau: &str, phi: &str, n: usize) -> CmdResult {
    let tau = load_map(tau)?;
    let phi = load_map(phi)?;
    let mut r = ctx.report("verify-root");
    r.input("tau", tau.record).input("phi", phi.record).input("n", n);
    let cert = verify_proper_root(&tau.value, &phi.value, n, ctx.tol)?;
    r.certify(&cert);
    Ok(r)
}

const DEFAULT_TIMES: [f64; 5] = [0.1, 0.5, 1.0, 5.0, 20.0];

pub fn asymptotic(ctx: &Context, map: &str, times: &[f64]) -> CmdResult {
    let map = load_map(map)?;
    let phi = &map.value;
    let times = if times.is_empty() { &DEFAULT_TIMES[..] } else { times };
    let mut r = ctx.report("asymptotic");
    r.input("map", map.record).input("times", times);
    let gen = match asymptotic_root(phi, ctx.tol) {
        Ok(g) => g,
        Err(e @ Error::NotIdempotent { .. }) => {
            refuted(&mut r, &e);
            return Ok(r);
        }
        Err(e) => return Err(e.into()),
    };
    let d = phi.dim();
    let units: Vec<CMatrix> = (0..d * d).map(|k| e_ij(d, k % d, k / d)).collect();
    let mut rows = Vec::new();
    let (mut worst_choi, mut worst_unital, mut worst_rate) = (f64::INFINITY, 0.0f64, 0.0f64);
    for &t in times {
        let m = evaluate(&gen, t)?;
        let choi = is_cp(&m, ctx.tol).1;
        let unital = unital_residual(&m);
        let mut rate: f64 = 0.0;
        for x in &units {
            let res = asymptotic_rate_check(&gen, phi, x, &[t])?[0];
            rate = rate.max(res / (1.0 + fro_norm(x)));
        }
        worst_choi = worst_choi.min(choi);
        worst_unital = worst_unital.max(unital);
        worst_rate = worst_rate.max(rate);
        rows.push(json!({
            "t": t,
            "choi_min_eig": choi,
            "unitality": unital,
            "distance_to_phi": m.distance(phi),
            "rate_residual": rate,
        }));
    }
    r.residual("choi_min_eig", worst_choi)
        .residual("unitality", worst_unital)
        .residual("rate", worst_rate)
        .residual("generator_unitality", gen.unital_residual);
    r.detail("ccp", gen.ccp)
        .detail("eigenvalues", sorted_eigenvalues(&gen)?)
        .detail("times", rows);
    let ok = gen.ccp
        && worst_choi >= -ctx.tol.bound(1.0)
        && worst_unital <= ctx.tol.bound(1.0)
        && worst_rate <= 1e-9;
    r.verdict = Outcome::from_flag(ok);
    ctx.emit(&mut r, "generator.json", &gen.generator)?;
    Ok(r)
}

pub fn continuous(ctx: &Context, map: &str) -> CmdResult {
    let map = load_map(map)?;
    let phi = &map.value;
    let mut r = ctx.report("continuous");
    r.input("map", map.record);
    if let Some(density) = as_state_map(phi, ctx.tol) {
        let state = StateSpec::from_density(density)?;
        if let StateRefutation::Refuted {
            sigma_min,
            rank,
            superop_dim,
        } = refute_continuous_root_state(&state)?
        {
            r.detail(
                "state_refutation",
                json!({ "sigma_min": sigma_min, "rank": rank, "superop_dim": superop_dim }),
            );
        }
    }
    match continuous_root_candidate(phi, ctx.tol)? {
        CandidateOutcome::Generator(gen) => {
            r.verdict = Outcome::Accepted;
            let distances: Vec<Value> = PROPERNESS_TIMES
                .iter()
                .map(|&t| Ok(json!({ "t": t, "distance_to_phi": evaluate(&gen, t)?.distance(phi) })))
                .collect::<Result<_, Error>>()?;
            r.residual("ccp_witness", gen.ccp_witness)
                .residual("generator_unitality", gen.unital_residual)
                .residual("endpoint", evaluate(&gen, 1.0)?.distance(phi));
            r.detail("eigenvalues", sorted_eigenvalues(&gen)?)
                .detail("properness", distances);
            ctx.emit(&mut r, "generator.json", &gen.generator)?;
        }
        CandidateOutcome::Refuted(why) => {
            r.verdict = Outcome::Refuted;
            r.reason = Some(format!("{why:?}"));
            r.detail("refutation", why.label())
                .detail("heuristic", why.is_heuristic());
        }
    }
    Ok(r)
}

pub fn shift_demo(ctx: &Context, m: usize, times: &[f64]) -> CmdResult {
    let mut r = ctx.report("shift-demo");
    r.input("m", m).input("times", times);
    let fam = grid_shift_root(GridShiftSpec::new(m)?)?;
    let phi = fam.spec.state_map();
    let grid: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
    let mut min_choi = f64::INFINITY;
    for k in 0..=m {
        min_choi = min_choi.min(is_cp(fam.at_step(k), ctx.tol).1);
    }
    let law = fam.semigroup_residual();
    let endpoint = fam.at(1.0)?.distance(&phi);
    let invariance = state_invariance_check(|t| fam.at(t), &phi, &grid)?
        .into_iter()
        .fold(0.0, f64::max);
    let d = fam.spec.dim();
    let late = [1.0, 1.5, 2.0];
    let mut absorption: f64 = 0.0;
    for psi in [CMap::identity(d), fixtures::diagonal_restriction(d)] {
        for v in absorption_check(&psi, |t| fam.at(t), &phi, &late)? {
            absorption = absorption.max(v);
        }
    }
    let rows: Vec<Value> = times
        .iter()
        .map(|&t| {
            let tau = fam.at(t)?;
            Ok(json!({
                "t": t,
                "choi_min_eig": is_cp(&tau, ctx.tol).1,
                "distance_to_phi": tau.distance(&phi),
            }))
        })
        .collect::<Result<_, Error>>()?;
    r.residual("choi_min_eig", min_choi)
        .residual("semigroup_law", law)
        .residual("endpoint", endpoint)
        .residual("invariance", invariance)
        .residual("absorption", absorption);
    r.detail("dim", d).detail("times", rows);
    let ok = min_choi >= -1e-10 && law <= 1e-12 && endpoint <= 1e-14 && invariance <= 1e-10 && absorption <= 1e-10;
    r.verdict = Outcome::from_flag(ok);
    Ok(r)
}
