use cproots_core::commutative::{
    construct_commutative_root, zero_eigen_multiplicity, CommutativeOptions, ProbVector,
};
use cproots_core::cpmap::{
    is_cp, kraus_from_choi, support_projection, unital_residual, CMap, Projection, StateSpec,
};
use cproots_core::discrete::{
    construct_state_root, state_root_conditions, max_root_order_state, phi_orthogonal_basis,
    search_root_numeric, swap_commutant_oracle, ChainOptions, CommutantVerdict, SearchOptions,
    PROPERNESS_FLOOR,
};
use cproots_core::fixtures;
use cproots_core::numerics::{
    c, cr, e_ij, eig_hermitian, fro_norm, jordan_block, mat_exp, mat_log_principal, min_eig_hermitian,
    nilpotency_order, unvec, vec, CMatrix, Tolerance,
};
use cproots_core::semigroups::{
    asymptotic_rate_check, asymptotic_root, evaluate, grid_shift_root, is_ccp, GridShiftSpec,
};
use proptest::prelude::*;

fn matrix(d: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| {
        let k = 2 * (i * d + j);
        c(data[k % data.len()], data[(k + 1) % data.len()])
    })
}

fn dim_and_data(max_d: usize, copies: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1..=max_d).prop_flat_map(move |d| (Just(d), prop::collection::vec(-1.0..1.0f64, 2 * d * d * copies)))
}

/// Random unital Kraus family: blocks of a stacked isometry.
fn unital_kraus(d: usize, count: usize, data: &[f64]) -> Vec<CMatrix> {
    let stacked = CMatrix::from_fn(count * d, d, |i, j| {
        let k = 2 * (i * d + j);
        c(data[k % data.len()], data[(k + 1) % data.len()]) + if i == j { cr(2.0) } else { cr(0.0) }
    });
    let q = stacked.qr().q();
    (0..count).map(|i| q.view((i * d, 0), (d, d)).into_owned()).collect()
}

fn density(d: usize, r: usize, data: &[f64]) -> StateSpec {
    let g = matrix(d, data) + CMatrix::identity(d, d) * cr(0.5);
    let u = g.qr().q();
    let mut w = CMatrix::zeros(d, d);
    let total: f64 = (0..r).map(|i| 1.0 + data[i % data.len()].abs()).sum();
    for i in 0..r {
        w[(i, i)] = cr((1.0 + data[i % data.len()].abs()) / total);
    }
    let rho = &u * w * u.adjoint();
    StateSpec::from_density((&rho + rho.adjoint()) * cr(0.5)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hermitian_eigendecomposition_reconstructs((d, data) in dim_and_data(6, 1)) {
        let a = matrix(d, &data);
        let m = &a + a.adjoint();
        let (vals, vecs) = eig_hermitian(&m).unwrap();
        let mut diag = CMatrix::zeros(d, d);
        for (i, v) in vals.iter().enumerate() {
            diag[(i, i)] = cr(*v);
        }
        let rec = &vecs * diag * vecs.adjoint();
        prop_assert!(fro_norm(&(rec - &m)) <= 1e-10 * fro_norm(&m).max(1e-300));
        prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn exp_log_round_trip((d, data) in dim_and_data(5, 1)) {
        let m = mat_exp(&matrix(d, &data)).unwrap();
        let back = mat_exp(&mat_log_principal(&m).unwrap()).unwrap();
        prop_assert!(fro_norm(&(back - &m)) <= 1e-9 * fro_norm(&m));
    }

    #[test]
    fn vec_unvec_exact((d, data) in dim_and_data(6, 1)) {
        let m = matrix(d, &data);
        prop_assert_eq!(unvec(&vec(&m), d).unwrap(), m);
    }

    #[test]
    fn kraus_maps_are_cp_and_round_trip((d, data) in dim_and_data(4, 3), count in 1usize..4) {
        let kraus: Vec<CMatrix> = (0..count)
            .map(|i| matrix(d, &data[i * 2 * d * d..]))
            .collect();
        let map = CMap::from_kraus(kraus).unwrap();
        let (cp, lo) = is_cp(&map, Tolerance::default());
        prop_assert!(cp && lo >= -1e-10 * fro_norm(map.choi()).max(1.0));
        let from_s = CMap::from_superop(map.superop().clone()).unwrap();
        let from_c = CMap::from_choi(map.choi().clone()).unwrap();
        let from_k = CMap::from_kraus(kraus_from_choi(map.choi(), Tolerance::uniform(1e-14)).unwrap()).unwrap();
        for i in 0..d {
            for j in 0..d {
                let x = e_ij(d, i, j);
                let y = map.apply(&x).unwrap();
                for other in [&from_s, &from_c, &from_k] {
                    prop_assert!(fro_norm(&(other.apply(&x).unwrap() - &y)) <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn projections_from_isometries((d, data) in dim_and_data(5, 1), k in 1usize..5) {
        let k = k.min(d);
        let g = matrix(d, &data) + CMatrix::identity(d, d) * cr(0.5);
        let q = g.qr().q();
        let p = Projection::from_isometry(&q.columns(0, k).into_owned()).unwrap();
        let m = p.matrix();
        prop_assert!(fro_norm(&(m * m - m)) <= 1e-10);
        prop_assert!(fro_norm(&(m - m.adjoint())) <= 1e-10);
        prop_assert_eq!(p.rank(), m.trace().re.round() as usize);
    }

    #[test]
    fn state_spec_invariants((d, data) in dim_and_data(5, 1), r in 1usize..6) {
        let r = r.min(d);
        let st = density(d, r, &data);
        prop_assert!((st.density().trace() - cr(1.0)).norm() <= 1e-10);
        prop_assert!(st.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(st.support_rank(), r);
        prop_assert!(min_eig_hermitian(st.density()).unwrap() >= -1e-12);
    }

    #[test]
    fn phi_basis_invariants((d, data) in dim_and_data(4, 1)) {
        let st = density(d, d, &data);
        let b = phi_orthogonal_basis(&st).unwrap();
        prop_assert_eq!(b.elements.len(), d * d - 1);
        for y in &b.elements {
            prop_assert!(fro_norm(&(y - y.adjoint())) <= 1e-10);
            prop_assert!((st.density() * y).trace().norm() <= 1e-10);
        }
        for (i, row) in b.gram().iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((v - want).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn ccp_generators_give_cp_semigroups((d, data) in dim_and_data(3, 3), jumps in 1usize..3) {
        // Heisenberg Lindbladian: i[H, x] + Σ A* x A - {A* A, x}/2.
        let h = matrix(d, &data);
        let h = (&h + h.adjoint()) * cr(0.5);
        let mut l = CMatrix::zeros(d * d, d * d);
        let id = CMatrix::identity(d, d);
        let sand = |a: &CMatrix, b: &CMatrix| cproots_core::numerics::sandwich_superop(a, b);
        l += (sand(&h, &id) - sand(&id, &h)) * c(0.0, 1.0);
        for k in 0..jumps {
            let a = matrix(d, &data[(k + 1) * 2 * d * d % data.len()..]);
            let aa = a.adjoint() * &a;
            l += sand(&a.adjoint(), &a) - (sand(&aa, &id) + sand(&id, &aa)) * cr(0.5);
        }
        let (ok, _) = is_ccp(&l, Tolerance::default());
        prop_assert!(ok);
        for e in 0..=10 {
            let t = 2f64.powi(-e);
            let m = CMap::from_superop(mat_exp(&(&l * cr(t))).unwrap()).unwrap();
            prop_assert!(is_cp(&m, Tolerance::default()).0);
            prop_assert!(unital_residual(&m) <= 1e-9);
        }
    }

    #[test]
    fn rate_law_on_pinchings((d, data) in dim_and_data(4, 2), t in 0.0..20.0f64) {
        let u = (matrix(d, &data) + CMatrix::identity(d, d) * cr(0.5)).qr().q();
        let kraus: Vec<CMatrix> = (0..d)
            .map(|i| {
                let v = u.column(i).into_owned();
                &v * v.adjoint()
            })
            .collect();
        let phi = CMap::from_kraus(kraus).unwrap();
        let gen = asymptotic_root(&phi, Tolerance::default()).unwrap();
        let x = matrix(d, &data[2 * d * d..]);
        let r = asymptotic_rate_check(&gen, &phi, &x, &[t]).unwrap()[0];
        prop_assert!(r <= 1e-9 * (1.0 + fro_norm(&x)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn state_roots_are_certified((d, data) in dim_and_data(4, 2), r in 1usize..5, n in 2usize..16, ksz in 1usize..4) {
        let r = r.min(d);
        let max = max_root_order_state(d, r).unwrap();
        prop_assume!(max >= 2);
        let n = 2 + (n - 2) % (max - 1);
        let st = density(d, r, &data);
        let root = construct_state_root(&st, n, &ChainOptions::default()).unwrap();
        let c = &root.certificate;
        let tol = Tolerance::default();
        prop_assert!(c.is_accepted());
        prop_assert!(c.residual_power <= tol.bound(fro_norm(st.state_map().superop())));
        prop_assert!(c.properness_margins.iter().all(|m| *m > PROPERNESS_FLOOR));
        prop_assert!(c.choi_min_eig >= -tol.bound(1.0));
        prop_assert!(c.unitality_residual <= tol.bound(1.0));
        prop_assert!(state_root_conditions(&root.tau, Tolerance::uniform(1e-8)).unwrap().all());

        // Hermiticity preservation.
        let x = matrix(d, &data[2 * d * d..]);
        let lhs = root.tau.apply(&x.adjoint()).unwrap();
        let rhs = root.tau.apply(&x).unwrap().adjoint();
        prop_assert!(fro_norm(&(lhs - rhs)) <= 1e-10);

        // The support projection is not decreased.
        let phi = st.state_map();
        let p = support_projection(&phi, tol).unwrap();
        let gap = root.tau.apply(p.matrix()).unwrap() - p.matrix();
        prop_assert!(min_eig_hermitian(&((&gap + gap.adjoint()) * cr(0.5))).unwrap() >= -1e-9);

        // Absorption of an arbitrary UNCP map.
        let psi = CMap::from_kraus(unital_kraus(d, ksz, &data)).unwrap();
        for k in n..n + 3 {
            let lhs = psi.superop() * root.tau.power(k).superop().clone();
            prop_assert!(fro_norm(&(lhs - phi.superop())) <= 1e-8);
        }
    }

    #[test]
    fn commutative_roots_are_stationary(w in prop::collection::vec(0.0..1.0f64, 3..8), zeros in 0usize..7, n in 2usize..7) {
        let d = w.len();
        let mut w = w;
        for i in 0..zeros.min(d - 1) {
            w[i] = 0.0;
        }
        prop_assume!(w.iter().sum::<f64>() > 0.1);
        let p = ProbVector::from_weights(&w).unwrap();
        let n = 2 + (n - 2) % (d - 2);
        let root = construct_commutative_root(&p, n, &CommutativeOptions::default()).unwrap();
        prop_assert!(root.tau.min_entry() >= -1e-12);
        for (a, b) in root.tau.left_apply(p.entries()).iter().zip(p.entries()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        prop_assert_eq!(zero_eigen_multiplicity(root.tau.matrix()), d - 1);
        for bad in [d, d + 1] {
            prop_assert!(construct_commutative_root(&p, bad, &CommutativeOptions::default()).is_err());
        }
    }
}

#[test]
fn jordan_nilpotency_orders() {
    for k in 1..=8 {
        assert_eq!(nilpotency_order(&jordan_block(k, 0.0), Tolerance::default()).unwrap(), k);
    }
}

#[test]
fn swap_square_root_oracle_and_search_agree() {
    let phi = fixtures::diagonal_swap();
    assert!(matches!(swap_commutant_oracle(&phi, 2).unwrap(), CommutantVerdict::NoRoot { .. }));
    assert!(!search_root_numeric(&phi, 2, &SearchOptions::default()).unwrap().is_found());
}

#[test]
fn idempotent_fixtures_have_cp_asymptotic_roots() {
    let tol = Tolerance::default();
    let idempotents = [
        fixtures::diagonal_restriction(2),
        fixtures::diagonal_restriction(3),
        fixtures::corner_expectation_m3(),
        StateSpec::diagonal(&[0.6, 0.4]).unwrap().state_map(),
        StateSpec::pure(3, 2).unwrap().state_map(),
        CMap::identity(2),
    ];
    for phi in &idempotents {
        let gen = asymptotic_root(phi, tol).unwrap();
        for t in [0.1, 0.5, 1.0, 5.0, 20.0] {
            let m = evaluate(&gen, t).unwrap();
            assert!(is_cp(&m, tol).0);
            assert!(unital_residual(&m) <= 1e-9);
        }
    }
}

#[test]
fn non_idempotent_fixtures_do_not_converge_to_themselves() {
    let tol = Tolerance::default();
    let maps = [
        fixtures::offdiag_scale(0.5),
        fixtures::diagonal_swap(),
        fixtures::swap_halving(),
        fixtures::halving_root(3),
        fixtures::swap_halving_root(3),
    ];
    for phi in &maps {
        assert!(asymptotic_root(phi, tol).is_err());
        let p64 = phi.power(64);
        let p65 = phi.power(65);
        if p65.distance(&p64) <= 1e-6 {
            let lim = phi.power(128);
            let sq = lim.superop() * lim.superop();
            assert!(fro_norm(&(sq - lim.superop())) <= 1e-6);
            assert!(lim.distance(phi) > 1e-3);
        }
    }
}

#[test]
fn transpose_generator_is_not_ccp_and_not_cp() {
    let l = -fixtures::transpose_map(2).superop().clone();
    assert!(!is_ccp(&l, Tolerance::default()).0);
    for e in 0..=10 {
        let t = 2f64.powi(-e);
        let m = CMap::from_superop(mat_exp(&(&l * cr(t))).unwrap()).unwrap();
        assert!(!is_cp(&m, Tolerance::default()).0);
    }
}

#[test]
fn grid_shift_step_is_nilpotent_of_order_m() {
    for m in 2..=20 {
        let spec = GridShiftSpec::new(m).unwrap();
        assert_eq!(nilpotency_order(&spec.step(), Tolerance::default()).unwrap(), m);
        let fam = grid_shift_root(spec).unwrap();
        assert_eq!(fam.at(1.0).unwrap().distance(&spec.state_map()), 0.0);
    }
}
