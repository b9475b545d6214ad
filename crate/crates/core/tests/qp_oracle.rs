mod common;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support_constraints::config::Tolerances;
use support_constraints::solver::{QpOutcome, QuadraticProgram};

use common::{brute_force_qp, random_qp, RandomQp};

fn to_program(p: &RandomQp) -> QuadraticProgram {
    QuadraticProgram::new(p.q.clone(), p.c.clone())
        .with_inequalities(p.a.clone(), p.b.clone())
        .with_equalities(p.e.clone(), p.d.clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(80))]

    #[test]
    fn active_set_matches_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_qp(&mut rng);
        let (x_ref, f_ref) = brute_force_qp(&p).expect("feasible by construction");
        let QpOutcome::Optimal(s) = to_program(&p).solve(&Tolerances::default()).unwrap() else {
            panic!("solver did not return an optimum");
        };
        prop_assert!((s.objective - f_ref).abs() <= 1e-6, "{} vs {}", s.objective, f_ref);
        prop_assert!((&s.x - &x_ref).amax() <= 1e-6);
        prop_assert!(s.kkt.stationarity <= 1e-7, "{:?}", s.kkt);
        prop_assert!(s.kkt.feasibility <= 1e-9, "{:?}", s.kkt);
        prop_assert!(s.kkt.complementarity <= 1e-7, "{:?}", s.kkt);
        prop_assert!(s.kkt.dual_infeasibility <= 1e-9, "{:?}", s.kkt);
    }

    #[test]
    fn constraint_order_does_not_move_the_minimizer(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_qp(&mut rng);
        let m = p.a.nrows();
        let perm: Vec<usize> = (0..m).rev().collect();
        let permuted = RandomQp {
            a: p.a.select_rows(&perm),
            b: DVector::from_iterator(m, perm.iter().map(|&i| p.b[i])),
            ..p.clone()
        };
        let tol = Tolerances::default();
        let (QpOutcome::Optimal(s1), QpOutcome::Optimal(s2)) =
            (to_program(&p).solve(&tol).unwrap(), to_program(&permuted).solve(&tol).unwrap())
        else {
            panic!("expected optima");
        };
        prop_assert!((&s1.x - &s2.x).amax() <= 1e-8);
    }
}
