//! The active-set solver on its own: a small strictly convex QP with
//! inequality and equality constraints.

use nalgebra::{DMatrix, DVector};
use support_constraints::config::Tolerances;
use support_constraints::solver::{QpOutcome, QuadraticProgram};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // minimize x^2 + y^2 - 2x - 5y  s.t.  x + y - 2 <= 0,  -x <= 0,  x - y = -1
    let qp = QuadraticProgram::new(DMatrix::identity(2, 2) * 2.0, DVector::from_vec(vec![-2.0, -5.0]))
        .with_inequalities(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 0.0]), DVector::from_vec(vec![-2.0, 0.0]))
        .with_equalities(DMatrix::from_row_slice(1, 2, &[1.0, -1.0]), DVector::from_vec(vec![-1.0]));
    match qp.solve(&Tolerances::default())? {
        QpOutcome::Optimal(s) => {
            println!("x = {:?}", s.x.as_slice());
            println!("objective {:.6}, {} iterations", s.objective, s.iterations);
            println!("inequality multipliers {:?}", s.mu.as_slice());
            println!("equality multipliers {:?}", s.nu.as_slice());
            println!("kkt {:?}", s.kkt);
        }
        other => println!("{other:?}"),
    }
    Ok(())
}
