//! The worked examples replayed end to end.

use cproots_core::commutative::{construct_commutative_root, CommutativeOptions, ProbVector};
use cproots_core::discrete::{
    search_root_numeric, swap_commutant_oracle, CommutantVerdict, SearchOptions, SearchOutcome,
};
use cproots_core::numerics::{cr, e_ij};
use cproots_core::semigroups::{continuous_root_candidate, evaluate, CandidateOutcome};
use cproots_core::{fixtures, verify_proper_root, Result, Tolerance};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Row {
    pub fixture: &'static str,
    pub expectation: &'static str,
    pub observed: String,
    pub pass: bool,
}

fn search_label(out: &SearchOutcome) -> &'static str {
    if out.is_found() {
        "found by search"
    } else {
        "inconclusive by search"
    }
}

fn swap_row(opts: &SearchOptions) -> Result<Row> {
    let phi = fixtures::diagonal_swap();
    let search = search_root_numeric(&phi, 2, opts)?;
    let square = swap_commutant_oracle(&phi, 2)?;
    let odd: Vec<bool> = [3, 5]
        .iter()
        .map(|&n| swap_commutant_oracle(&phi, n).map(|v| matches!(v, CommutantVerdict::OnlyTrivialRoot)))
        .collect::<Result<_>>()?;
    let refuted = matches!(square, CommutantVerdict::NoRoot { .. });
    Ok(Row {
        fixture: "swap",
        expectation: "no square root: inconclusive by search and refuted by oracle; odd orders trivial only",
        observed: format!(
            "square root {}, oracle {}; odd orders trivial only: {}",
            search_label(&search),
            if refuted { "refutes" } else { "does not refute" },
            odd.iter().all(|&b| b)
        ),
        pass: !search.is_found() && refuted && odd.iter().all(|&b| b),
    })
}

fn diagonal_row(tol: Tolerance) -> Result<Row> {
    let cert = verify_proper_root(&fixtures::diagonal_swap(), &fixtures::diagonal_restriction(2), 2, tol)?;
    Ok(Row {
        fixture: "diagonal",
        expectation: "the swap is a proper square root",
        observed: match cert.reason() {
            None => format!("accepted, residual {:.1e}", cert.residual_power),
            Some(why) => format!("rejected: {why}"),
        },
        pass: cert.is_accepted(),
    })
}

fn halving_row(tol: Tolerance) -> Result<Row> {
    let phi = fixtures::offdiag_scale(0.5);
    let mut accepted = Vec::new();
    let mut worst_factor: f64 = 0.0;
    for n in 2..=6 {
        let root = fixtures::halving_root(n);
        if verify_proper_root(&root, &phi, n, tol)?.is_accepted() {
            accepted.push(n);
        }
        let z = root.apply(&e_ij(2, 0, 1))?[(0, 1)];
        worst_factor = worst_factor.max((z - cr(2f64.powf(-1.0 / n as f64))).norm());
    }
    Ok(Row {
        fixture: "halving",
        expectation: "roots n=2..6 accepted",
        observed: format!("accepted for n in {accepted:?}, factor error {worst_factor:.1e}"),
        pass: accepted.len() == 5 && worst_factor <= 1e-12,
    })
}

fn swap_halving_row(opts: &SearchOptions) -> Result<Row> {
    let phi = fixtures::swap_halving();
    let cube = search_root_numeric(&phi, 3, opts)?;
    let square = search_root_numeric(&phi, 2, opts)?;
    let refuted = swap_commutant_oracle(&phi, 2)?.refutes_proper_root();
    Ok(Row {
        fixture: "swap-halving",
        expectation: "cube root found by search; no square root: inconclusive by search and refuted by oracle",
        observed: format!(
            "cube root {}; square root {}, oracle {}",
            search_label(&cube),
            search_label(&square),
            if refuted { "refutes" } else { "does not refute" }
        ),
        pass: cube.is_found() && !square.is_found() && refuted,
    })
}

fn stochastic_row(tol: Tolerance) -> Result<Row> {
    let p = ProbVector::new(vec![0.5, 1.0 / 3.0, 1.0 / 6.0])?;
    let opts = CommutativeOptions { tol };
    let square = construct_commutative_root(&p, 2, &opts)?;
    let cube_refused = construct_commutative_root(&p, 3, &opts).is_err();
    Ok(Row {
        fixture: "stochastic (1/2,1/3,1/6)",
        expectation: "square root accepted; cube root refused",
        observed: format!(
            "square root {}; cube root {}",
            if square.certificate.is_accepted() { "accepted" } else { "rejected" },
            if cube_refused { "refused" } else { "constructed" }
        ),
        pass: square.certificate.is_accepted() && cube_refused,
    })
}

fn semigroup_row(tol: Tolerance) -> Result<Row> {
    let phi = fixtures::offdiag_scale(0.5);
    let (observed, pass) = match continuous_root_candidate(&phi, tol)? {
        CandidateOutcome::Generator(gen) => {
            let mut ev = gen.eigenvalues()?;
            ev.sort_by(|a, b| a.re.total_cmp(&b.re));
            let l2 = 2f64.ln();
            let err = ev
                .iter()
                .zip([-l2, -l2, 0.0, 0.0])
                .map(|(z, w)| (z - cr(w)).norm())
                .fold(0.0, f64::max);
            let end = evaluate(&gen, 1.0)?.distance(&phi);
            (
                format!("generator eigenvalue error {err:.1e}, endpoint error {end:.1e}"),
                err <= 1e-9 && end <= 1e-9,
            )
        }
        CandidateOutcome::Refuted(why) => (format!("refuted: {}", why.label()), false),
    };
    Ok(Row {
        fixture: "halving semigroup",
        expectation: "generator with eigenvalues {0, 0, -ln 2, -ln 2}",
        observed,
        pass,
    })
}

pub fn run(tol: Tolerance) -> Result<Vec<Row>> {
    let opts = SearchOptions {
        tol,
        ..SearchOptions::default()
    };
    Ok(vec![
        swap_row(&opts)?,
        diagonal_row(tol)?,
        halving_row(tol)?,
        swap_halving_row(&opts)?,
        stochastic_row(tol)?,
        semigroup_row(tol)?,
    ])
}

pub fn render(rows: &[Row]) -> String {
    let w0 = rows.iter().map(|r| r.fixture.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!(
            "{:<4} {:<w0$}  {}\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.fixture,
            r.observed
        ));
    }
    out
}
