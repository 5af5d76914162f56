//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::time::Instant;

use cproots_core::commutative::{
    commutative_root_range, construct_commutative_root, CommutativeOptions, ProbVector,
};
use cproots_core::cpmap::{is_cp, CMap, StateSpec};
use cproots_core::discrete::{
    construct_state_root, state_root_conditions, max_root_order_state, search_root_numeric,
    swap_commutant_oracle, verify_proper_root, ChainOptions, CommutantVerdict, SearchOptions,
    SearchOutcome,
};
use cproots_core::fixtures;
use cproots_core::numerics::{c, cr, e_ij, fro_norm, CMatrix, Tolerance};
use cproots_core::semigroups::{
    absorbing_bound, absorption_check, asymptotic_rate_check, asymptotic_root,
    continuous_root_candidate, evaluate, grid_shift_root, refute_continuous_root_state,
    state_invariance_check, CandidateOutcome, GridShiftSpec, Refutation, StateRefutation,
};
use cproots_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, k: usize) -> CMatrix {
    CMatrix::from_fn(r, k, |_, _| {
        c(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
    })
}

fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    gaussian(rng, d, d).qr().q()
}

/// Random density on `M_d` with support rank `r`.
fn random_state(rng: &mut ChaCha8Rng, d: usize, r: usize) -> StateSpec {
    let mut w: Vec<f64> = (0..r).map(|_| rng.gen_range(0.2..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    let mut diag = CMatrix::zeros(d, d);
    for (i, x) in w.iter().enumerate() {
        diag[(i, i)] = cr(*x);
    }
    let u = random_unitary(rng, d);
    let rho = &u * diag * u.adjoint();
    StateSpec::from_density((&rho + rho.adjoint()) * cr(0.5)).expect("valid density")
}

fn admissible() -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for d in 2..=4 {
        for r in 1..=d {
            let max = max_root_order_state(d, r).unwrap();
            for n in 2..=max {
                out.push((d, r, n));
            }
        }
    }
    out
}

fn criterion_attainability() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opts = ChainOptions::default();
    let cases = admissible();
    let (mut worst_res, mut worst_margin, mut worst_choi) = (0.0f64, f64::INFINITY, f64::INFINITY);
    let mut failures = Vec::new();
    for &(d, r, n) in &cases {
        let st = random_state(&mut rng, d, r);
        match construct_state_root(&st, n, &opts) {
            Ok(root) => {
                let c = &root.certificate;
                worst_res = worst_res.max(c.residual_power);
                worst_margin = worst_margin.min(c.min_margin());
                worst_choi = worst_choi.min(c.choi_min_eig);
                if !(c.is_accepted()
                    && c.residual_power <= 1e-8
                    && c.min_margin() > 1e-6
                    && c.choi_min_eig >= -1e-8)
                {
                    failures.push(format!("({d},{r},{n})"));
                }
            }
            Err(e) => failures.push(format!("({d},{r},{n}): {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: failures.is_empty() && secs < 60.0,
        detail: format!(
            "{} cases, residual <= {worst_res:.1e}, margin >= {worst_margin:.1e}, choi >= {worst_choi:.1e}, {secs:.1}s{}",
            cases.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!(", failed {}", failures.join(" "))
            }
        ),
    }
}

fn criterion_upper_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let opts = ChainOptions::default();
    let mut failures = Vec::new();
    for d in 2..=4 {
        for r in 1..=d {
            let n = d + r * r - r;
            let st = random_state(&mut rng, d, r);
            if !matches!(construct_state_root(&st, n, &opts), Err(Error::OrderOutOfRange { .. })) {
                failures.push(format!("n={n} accepted for (d,r)=({d},{r})"));
            }
        }
    }
    let cases = admissible();
    let tol = Tolerance::uniform(1e-8);
    let mut checked = 0;
    while checked < 50 {
        let (d, r, n) = cases[rng.gen_range(0..cases.len())];
        let st = random_state(&mut rng, d, r);
        let Ok(root) = construct_state_root(&st, n, &opts) else {
            failures.push(format!("construction ({d},{r},{n})"));
            checked += 1;
            continue;
        };
        match state_root_conditions(&root.tau, tol) {
            Ok(rep) if rep.all() => {}
            Ok(rep) => failures.push(format!("({d},{r},{n}): {rep:?}")),
            Err(e) => failures.push(format!("({d},{r},{n}): {e}")),
        }
        checked += 1;
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "OrderOutOfRange at n = d + r^2 - r for 10 (d,r) pairs; four conditions on {checked} roots{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!(", failed {}", failures.join("; "))
            }
        ),
    }
}

fn criterion_commutative() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = CommutativeOptions::default();
    let mut failures = Vec::new();
    let mut built = 0;
    let mut worst: f64 = 0.0;
    for d in 3..=7 {
        let (lo, hi) = commutative_root_range(d).unwrap();
        for r in 1..=d {
            for _ in 0..5 {
                let mut w: Vec<f64> = (0..d)
                    .map(|i| if i < r { rng.gen_range(0.05..1.0) } else { 0.0 })
                    .collect();
                // Shuffle the support among the coordinates.
                for i in (1..d).rev() {
                    w.swap(i, rng.gen_range(0..=i));
                }
                let p = ProbVector::from_weights(&w).unwrap();
                for n in lo..=hi {
                    match construct_commutative_root(&p, n, &opts) {
                        Ok(root) => {
                            built += 1;
                            worst = worst.max(root.tau.row_sum_residual());
                            if !root.certificate.is_accepted()
                                || root.tau.row_sum_residual() > 1e-10
                                || root.tau.min_entry() < -1e-12
                            {
                                failures.push(format!("d={d} r={r} n={n}"));
                            }
                        }
                        Err(e) => failures.push(format!("d={d} r={r} n={n}: {e}")),
                    }
                }
                for n in [0, 1, d, d + 1] {
                    if !matches!(
                        construct_commutative_root(&p, n, &opts),
                        Err(Error::OrderOutOfRange { .. })
                    ) {
                        failures.push(format!("d={d} accepted n={n}"));
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: failures.is_empty() && secs < 10.0,
        detail: format!(
            "{built} roots, row-sum residual <= {worst:.1e}, {secs:.2}s{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!(", failed {}", failures.join("; "))
            }
        ),
    }
}

/// Conditional expectation onto a rotated block-diagonal subalgebra.
fn random_pinching(rng: &mut ChaCha8Rng, d: usize) -> CMap {
    let u = random_unitary(rng, d);
    let mut cuts = vec![0];
    for i in 1..d {
        if rng.gen_bool(0.5) {
            cuts.push(i);
        }
    }
    cuts.push(d);
    let kraus = cuts
        .windows(2)
        .map(|w| {
            let mut p = CMatrix::zeros(d, d);
            for i in w[0]..w[1] {
                p[(i, i)] = cr(1.0);
            }
            &u * p * u.adjoint()
        })
        .collect();
    CMap::from_kraus(kraus).unwrap()
}

fn criterion_rate() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tol = Tolerance::default();
    let (mut worst_rate, mut rate_viol, mut abs_viol) = (0.0f64, 0, 0);
    for _ in 0..100 {
        let d = rng.gen_range(2..=4);
        let phi = random_pinching(&mut rng, d);
        let gen = asymptotic_root(&phi, tol).unwrap();
        let x = gaussian(&mut rng, d, d);
        let t = rng.gen_range(0.0..20.0);
        let res = asymptotic_rate_check(&gen, &phi, &x, &[t]).unwrap()[0];
        let bound = 1e-9 * (1.0 + fro_norm(&x));
        worst_rate = worst_rate.max(res / bound);
        if res > bound {
            rate_viol += 1;
        }
        let rank = rng.gen_range(1..=d);
        let psi = random_state(&mut rng, d, rank);
        let (lhs, rhs) = absorbing_bound(&gen, &phi, &psi, &x, t).unwrap();
        if lhs > rhs {
            abs_viol += 1;
        }
    }
    Outcome {
        pass: rate_viol == 0 && abs_viol == 0,
        detail: format!(
            "100 triples, worst rate residual {worst_rate:.2e} of its bound, {rate_viol} rate and {abs_viol} absorbing violations"
        ),
    }
}

fn criterion_fixtures() -> Outcome {
    let tol = Tolerance::default();
    let mut notes = Vec::new();
    let mut ok = true;

    let cert = verify_proper_root(&fixtures::diagonal_swap(), &fixtures::diagonal_restriction(2), 2, tol)
        .unwrap();
    ok &= cert.is_accepted();
    notes.push(format!("swap square root {}", if cert.is_accepted() { "ok" } else { "rejected" }));

    let halving = fixtures::offdiag_scale(0.5);
    let gen = match continuous_root_candidate(&halving, tol).unwrap() {
        CandidateOutcome::Generator(g) => Some(g),
        CandidateOutcome::Refuted(_) => None,
    };
    let mut worst_factor: f64 = 0.0;
    for n in 2..=6 {
        let root = fixtures::halving_root(n);
        ok &= verify_proper_root(&root, &halving, n, tol).unwrap().is_accepted();
        // Off-diagonal factor read off the principal generator at t = 1/n.
        if let Some(g) = &gen {
            let y = evaluate(g, 1.0 / n as f64).unwrap().apply(&e_ij(2, 0, 1)).unwrap();
            worst_factor = worst_factor.max((y[(0, 1)].norm() - 2f64.powf(-1.0 / n as f64)).abs());
            let fixture = root.apply(&e_ij(2, 0, 1)).unwrap();
            worst_factor = worst_factor.max((fixture[(0, 1)] - y[(0, 1)]).norm());
        } else {
            ok = false;
        }
    }
    ok &= worst_factor <= 1e-12;
    notes.push(format!("halving roots n=2..6, factor error {worst_factor:.1e}"));

    let swap_halving = fixtures::swap_halving();
    let cube = search_root_numeric(&swap_halving, 3, &SearchOptions::default()).unwrap();
    ok &= cube.is_found();
    notes.push(format!("cube root search {}", if cube.is_found() { "found" } else { "missed" }));
    let square = search_root_numeric(&swap_halving, 2, &SearchOptions::default()).unwrap();
    let inconclusive = matches!(square, SearchOutcome::Inconclusive { .. });
    let oracle = swap_commutant_oracle(&swap_halving, 2).unwrap();
    let refuted = matches!(oracle, CommutantVerdict::NoRoot { .. });
    ok &= inconclusive && refuted;
    notes.push(format!(
        "square root search {}, oracle {}",
        if inconclusive { "inconclusive" } else { "found" },
        if refuted { "refutes" } else { "does not refute" }
    ));

    let mut eig_err = f64::INFINITY;
    if let Some(g) = &gen {
        let mut ev: Vec<_> = g.eigenvalues().unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        let l2 = 2f64.ln();
        eig_err = ev
            .iter()
            .zip([-l2, -l2, 0.0, 0.0])
            .map(|(z, w)| (z - cr(w)).norm())
            .fold(0.0, f64::max);
    }
    ok &= eig_err <= 1e-9;
    notes.push(format!("generator eigenvalue error {eig_err:.1e}"));
    Outcome {
        pass: ok,
        detail: notes.join("; "),
    }
}

fn criterion_grid_shift() -> Outcome {
    let start = Instant::now();
    let fam = grid_shift_root(GridShiftSpec::new(16).unwrap()).unwrap();
    let phi = fam.spec.state_map();
    let tol = Tolerance::default();
    let mut min_choi = f64::INFINITY;
    for k in 0..=16 {
        min_choi = min_choi.min(is_cp(fam.at_step(k), tol).1);
    }
    let law = fam.semigroup_residual();
    let end = fam.at(1.0).unwrap().distance(&phi);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = fam.spec.dim();
    let kraus: Vec<CMatrix> = {
        let v = gaussian(&mut rng, 3 * d, d).qr().q();
        (0..3).map(|i| v.view((i * d, 0), (d, d)).into_owned()).collect()
    };
    let psi = CMap::from_kraus(kraus).unwrap();
    let grid: Vec<f64> = (0..=16).map(|k| k as f64 / 16.0).collect();
    let inv = state_invariance_check(|t| fam.at(t), &phi, &grid)
        .unwrap()
        .into_iter()
        .fold(0.0, f64::max);
    let abs = absorption_check(&psi, |t| fam.at(t), &phi, &[1.0, 1.5, 2.0])
        .unwrap()
        .into_iter()
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: min_choi >= -1e-10 && law <= 1e-12 && end <= 1e-14 && inv <= 1e-10 && abs <= 1e-10 && secs < 5.0,
        detail: format!(
            "m=16: choi >= {min_choi:.1e}, law {law:.1e}, tau_1 - phi {end:.1e}, invariance {inv:.1e}, absorption {abs:.1e}, {secs:.2}s"
        ),
    }
}

fn criterion_refutations() -> Outcome {
    let tol = Tolerance::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for d in 2..=4 {
        for r in 2..=d {
            match refute_continuous_root_state(&random_state(&mut rng, d, r)).unwrap() {
                StateRefutation::Refuted { sigma_min, .. } => worst = worst.max(sigma_min),
                StateRefutation::NotApplicable => ok = false,
            }
        }
    }
    ok &= worst <= 1e-12;
    let corner = continuous_root_candidate(&fixtures::corner_expectation_m3(), tol).unwrap();
    let swap = continuous_root_candidate(&fixtures::swap_halving(), tol).unwrap();
    let corner_ok = matches!(corner, CandidateOutcome::Refuted(Refutation::NotBijective { .. }));
    let swap_ok = matches!(swap, CandidateOutcome::Refuted(Refutation::NoPrincipalBranch(_)));
    Outcome {
        pass: ok && corner_ok && swap_ok,
        detail: format!(
            "mixed states sigma_min <= {worst:.1e}; corner map {}; swap-scale map {}",
            if corner_ok { "NotBijective" } else { "unexpected" },
            if swap_ok { "NoPrincipalBranch" } else { "unexpected" }
        ),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 state-root attainability", criterion_attainability),
        ("2 state-root order bound", criterion_upper_bound),
        ("3 commutative roots", criterion_commutative),
        ("4 asymptotic rate law", criterion_rate),
        ("5 fixtures", criterion_fixtures),
        ("6 grid-shift root", criterion_grid_shift),
        ("7 continuous-root refutations", criterion_refutations),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let out = run();
        if !out.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
