//! Property tests for the algebraic and dynamical invariants.

use gaudin_core::C64;
use gaudin_core::algebra::{RootOfUnity, SquareMatrix, grade_component, grade_defect};
use gaudin_core::dynamics::{Schedule, commutativity_defect, integrate, invariant_drift, involutivity_matrix};
use gaudin_core::gaudin::{FlowId, assemble_lax, hamiltonian, hamiltonian_at_infinity};
use gaudin_core::models::{
    CoupledState, DstState, PhaseState, TodaState, dst_from_orbit, dst_gauge_residual, max_dist, toda_gauge_residual,
};
use gaudin_core::ratmat::check_equivariance;
use gaudin_core::rmatrix::{averaging_residual, cybe_residual};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

fn annulus_point() -> impl Strategy<Value = C64> {
    (0.4f64..1.6, 0.0f64..std::f64::consts::TAU).prop_map(|(r, a)| C64::from_polar(r, a))
}

fn matrix(t: usize) -> impl Strategy<Value = SquareMatrix<C64>> {
    proptest::collection::vec(complex(), t * t).prop_map(move |v| SquareMatrix::from_fn(t, |i, j| v[i * t + j]))
}

fn order_and_matrices(max_t: usize) -> impl Strategy<Value = (usize, SquareMatrix<C64>, SquareMatrix<C64>)> {
    (1..=max_t).prop_flat_map(|t| (Just(t), matrix(t), matrix(t)))
}

fn toda_state(t: usize) -> impl Strategy<Value = TodaState> {
    (proptest::collection::vec(-0.5f64..0.5, t), proptest::collection::vec(-0.5f64..0.5, t))
        .prop_map(|(q, p)| TodaState::new(q, p).unwrap())
}

fn dst_state(t: usize) -> impl Strategy<Value = DstState> {
    (matrix(t), proptest::collection::vec(complex(), t), 0.3f64..0.4, 0.0f64..std::f64::consts::TAU).prop_map(
        move |(m, c, r, a)| {
            let dressing = &SquareMatrix::identity(t) + &m.scale_c(C64::new(0.3, 0.0));
            let c = c.iter().map(|v| v * 0.1).collect();
            dst_from_orbit(&dressing, c, C64::from_polar(r, a)).unwrap()
        },
    )
}

fn separated(pts: &[C64], t: usize, gap: f64) -> bool {
    let pw: Vec<C64> = pts.iter().map(|z| z.powi(t as i32)).collect();
    (0..pw.len()).all(|i| (i + 1..pw.len()).all(|j| (pw[i] - pw[j]).norm() > gap))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sigma_has_order_t_and_is_multiplicative((t, x, y) in order_and_matrices(5)) {
        let root = RootOfUnity::new(t).unwrap();
        prop_assert!(root.sigma_pow(&x, t as i64).dist(&x) <= 1e-13);
        let lhs = root.sigma(&(&x * &y));
        let rhs = &root.sigma(&x) * &root.sigma(&y);
        prop_assert!(lhs.dist(&rhs) <= 1e-13);
    }

    #[test]
    fn grading_is_a_decomposition((t, x, y) in order_and_matrices(5)) {
        let tt = t as i64;
        let mut acc = SquareMatrix::zeros(t);
        for n in 0..tt {
            acc = &acc + &grade_component(&x, n);
        }
        prop_assert!(acc.dist(&x) <= 1e-14);
        for m in 0..tt {
            for n in 0..tt {
                let prod = &grade_component(&x, m) * &grade_component(&y, n);
                let bracket = &prod - &(&grade_component(&y, n) * &grade_component(&x, m));
                prop_assert!(grade_defect(&prod, m + n) <= 1e-13);
                prop_assert!(grade_defect(&bracket, m + n) <= 1e-13);
            }
        }
    }

    #[test]
    fn averaging_identity(t in 1usize..=6, l in -12i64..=12, z1 in annulus_point(), z2 in annulus_point()) {
        prop_assume!(separated(&[z1, z2], t, 0.1));
        let root = RootOfUnity::new(t).unwrap();
        prop_assert!(averaging_residual(z1, z2, l, &root).unwrap() <= 1e-12);
    }

    #[test]
    fn classical_yang_baxter(t in 1usize..=3, a in annulus_point(), b in annulus_point(), c in annulus_point()) {
        prop_assume!(separated(&[a, b, c], t, 0.2));
        let root = RootOfUnity::new(t).unwrap();
        prop_assert!(cybe_residual(a, b, c, &root).unwrap() <= 1e-12);
    }

    #[test]
    fn toda_gauge_form(s in toda_state(3), lam in annulus_point()) {
        prop_assert!(toda_gauge_residual(&s, lam).unwrap() <= 1e-11);
    }

    #[test]
    fn coupled_q_is_compared_modulo_2_pi_i(s in dst_state(3), q in toda_state(3), k in -3i32..=3) {
        let lift = |v: &[f64]| v.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>();
        let base = CoupledState::new(lift(&q.q), lift(&q.p), s.x.clone(), s.big_x.clone(), s.c.clone(), s.zeta, 0.5).unwrap();
        let mut shifted = base.clone();
        shifted.q[1] += C64::new(0.0, std::f64::consts::TAU * k as f64);
        let (a, b) = (PhaseState::Coupled(base), PhaseState::Coupled(shifted));
        prop_assert!(a.distance(&b) <= 1e-14);
        prop_assert!((a.hamiltonian(FlowId::new(2, 1)).unwrap() - b.hamiltonian(FlowId::new(2, 1)).unwrap()).norm() <= 1e-12);
    }

    #[test]
    fn dst_gauge_form(s in dst_state(3), lam in annulus_point()) {
        let config = PhaseState::Dst(s.clone()).pole_config().unwrap();
        prop_assume!(config.distance_to_poles(lam) > 0.1);
        prop_assert!(dst_gauge_residual(&s, lam).unwrap() <= 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lax_matrices_are_equivariant(s in dst_state(3)) {
        let st = PhaseState::Dst(s);
        let l = st.lax().unwrap();
        let config = st.pole_config().unwrap();
        prop_assert!(check_equivariance(&l, 1, config.root()).unwrap() / (1.0 + l.max_coeff()) <= 1e-12);
        let dressed = assemble_lax(&st.coefficients_at(&st.coords()), &config).unwrap();
        prop_assert!(dressed.eval(C64::new(0.7, 0.2)).unwrap().dist(&l.eval(C64::new(0.7, 0.2)).unwrap()) <= 1e-12);
    }

    #[test]
    fn toda_residues_mirror_infinity(s in toda_state(3)) {
        let st = PhaseState::Toda(s);
        let l = st.lax().unwrap();
        let config = st.pole_config().unwrap();
        for p in 1..=3 {
            let h0 = hamiltonian(FlowId::new(p, 0), &l, &config).unwrap();
            prop_assert!((hamiltonian_at_infinity(p, &l).unwrap() + h0).norm() <= 1e-10);
        }
    }

    #[test]
    fn residue_flows_match_printed_first_flows(s in toda_state(3)) {
        let st = PhaseState::Toda(s);
        let f = FlowId::new(1, 0);
        prop_assert!(max_dist(&st.flow_field(f).unwrap(), &st.printed_flow_field(f).unwrap()) <= 1e-11);
        prop_assert!((st.hamiltonian(f).unwrap() - st.printed_hamiltonian(f).unwrap()).norm() <= 1e-11);
    }

    #[test]
    fn hamiltonians_are_in_involution(s in dst_state(3)) {
        let st = PhaseState::Dst(s);
        let flows = st.admissible_flows(3);
        let m = involutivity_matrix(&st, &flows).unwrap();
        prop_assert!(m.iter().flatten().all(|&v| v <= 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn toda_flows_commute_and_conserve(s in toda_state(3)) {
        let st = PhaseState::Toda(s);
        let (a, b) = (FlowId::new(1, 0), FlowId::new(2, 0));
        prop_assert!(commutativity_defect(&st, a, b, 0.5, 1e-3).unwrap() <= 1e-9);
        let traj = integrate(&st, &Schedule::with_step(&[(a, 0.5), (b, 0.5)], 1e-3).unwrap()).unwrap();
        for (name, drift) in invariant_drift(&traj) {
            prop_assert!(drift <= 1e-12, "{name}: {drift}");
        }
    }
}
