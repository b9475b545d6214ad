//! Primal active-set method for convex quadratic programs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::linalg::{lstsq, nullspace, rank};
use super::lp::{LinearProgram, LpOutcome};
use super::SolverError;
use crate::config::Tolerances;

/// `min 1/2 x'Qx + c'x` subject to `A x + b <= 0` and `E x = d`, with `Q`
/// symmetric positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub e: DMatrix<f64>,
    pub d: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktResiduals {
    /// `|Qx + c + A'mu + E'nu|_inf`
    pub stationarity: f64,
    /// Largest violation of `A x + b <= 0` or `E x = d`.
    pub feasibility: f64,
    /// `max_i |mu_i (A x + b)_i|`
    pub complementarity: f64,
    /// Most negative inequality multiplier (0 when none is negative).
    pub dual_infeasibility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// One multiplier per row of `A`; zero outside the final working set.
    pub mu: DVector<f64>,
    pub nu: DVector<f64>,
    /// Rows of `A` in the final working set, in increasing order.
    pub working_set: Vec<usize>,
    pub iterations: usize,
    pub kkt: KktResiduals,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QpOutcome {
    Optimal(QpSolution),
    Infeasible { phase_one_value: f64 },
    Unbounded,
}

impl QuadraticProgram {
    pub fn new(q: DMatrix<f64>, c: DVector<f64>) -> Self {
        let n = c.len();
        QuadraticProgram {
            q,
            c,
            a: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
            e: DMatrix::zeros(0, n),
            d: DVector::zeros(0),
        }
    }

    pub fn with_inequalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a = a;
        self.b = b;
        self
    }

    pub fn with_equalities(mut self, e: DMatrix<f64>, d: DVector<f64>) -> Self {
        self.e = e;
        self.d = d;
        self
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.c.dot(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x + &self.c
    }

    pub fn kkt(&self, x: &DVector<f64>, mu: &DVector<f64>, nu: &DVector<f64>) -> KktResiduals {
        let r = self.gradient(x) + self.a.transpose() * mu + self.e.transpose() * nu;
        let slack = &self.a * x + &self.b;
        let eq = &self.e * x - &self.d;
        KktResiduals {
            stationarity: r.amax(),
            feasibility: slack.iter().fold(0.0f64, |m, s| m.max(*s)).max(eq.amax()),
            complementarity: mu.iter().zip(slack.iter()).fold(0.0f64, |m, (u, s)| m.max((u * s).abs())),
            dual_infeasibility: mu.iter().fold(0.0f64, |m, u| m.max(-u)),
        }
    }

    fn check(&self) -> Result<(), SolverError> {
        let n = self.dim();
        let ok = self.q.shape() == (n, n)
            && self.a.ncols() == n
            && self.a.nrows() == self.b.len()
            && self.e.ncols() == n
            && self.e.nrows() == self.d.len();
        if ok {
            Ok(())
        } else {
            Err(SolverError::Shape("quadratic program blocks do not agree".into()))
        }
    }

    /// A feasible point from a phase-one LP over free variables.
    fn feasible_start(&self, tol: &Tolerances) -> Result<Result<DVector<f64>, f64>, SolverError> {
        let n = self.dim();
        let mut lp = LinearProgram::new(n).all_free();
        for i in 0..self.a.nrows() {
            lp.add_le(self.a.row(i).iter().copied().collect(), -self.b[i]);
        }
        for i in 0..self.e.nrows() {
            lp.add_eq(self.e.row(i).iter().copied().collect(), self.d[i]);
        }
        match lp.solve(tol.lp, tol.max_iterations.max(50 * (n + lp.le.len() + lp.eq.len())))? {
            LpOutcome::Optimal { x, .. } => Ok(Ok(DVector::from_vec(x))),
            LpOutcome::Infeasible { phase_one_value } => Ok(Err(phase_one_value)),
            LpOutcome::Unbounded => unreachable!("zero objective"),
        }
    }

    pub fn solve(&self, tol: &Tolerances) -> Result<QpOutcome, SolverError> {
        self.check()?;
        let x0 = match self.feasible_start(tol)? {
            Ok(x) => x,
            Err(phase_one_value) => return Ok(QpOutcome::Infeasible { phase_one_value }),
        };
        self.solve_from(x0, tol)
    }

    /// Active-set iterations from a feasible `x0`.
    pub fn solve_from(&self, mut x: DVector<f64>, tol: &Tolerances) -> Result<QpOutcome, SolverError> {
        self.check()?;
        let n = self.dim();
        let m = self.a.nrows();
        let p = self.e.nrows();
        let scale = 1.0 + self.q.amax() + self.c.amax() + self.a.amax();

        let stacked = |ws: &[usize], extra: Option<usize>| -> DMatrix<f64> {
            let rows: Vec<_> = (0..p)
                .map(|i| self.e.row(i).into_owned())
                .chain(ws.iter().chain(extra.iter()).map(|&i| self.a.row(i).into_owned()))
                .collect();
            if rows.is_empty() {
                DMatrix::zeros(0, n)
            } else {
                DMatrix::from_rows(&rows)
            }
        };

        // greedy independent initial working set from the active rows
        let mut ws: Vec<usize> = Vec::new();
        let mut current_rank = rank(&stacked(&ws, None), tol.nullspace);
        for i in 0..m {
            let s = self.a.row(i).dot(&x.transpose()) + self.b[i];
            if s.abs() <= tol.activity.min(1e-7) {
                let r = rank(&stacked(&ws, Some(i)), tol.nullspace);
                if r > current_rank {
                    ws.push(i);
                    current_rank = r;
                }
            }
        }

        let mut iterations = 0;
        loop {
            iterations += 1;
            if iterations > tol.max_iterations {
                return Err(SolverError::IterationLimit(tol.max_iterations));
            }
            let aw = stacked(&ws, None);
            let z = nullspace(&aw, tol.nullspace);
            let g = self.gradient(&x);
            let gscale = 1.0 + g.amax();

            let mut step: Option<(DVector<f64>, bool)> = None;
            if z.ncols() > 0 {
                let r = z.transpose() * &g;
                if r.amax() > tol.qp * gscale {
                    let h = z.transpose() * &self.q * &z;
                    let eig = SymmetricEigen::new(h);
                    let rho = eig.eigenvectors.transpose() * &r;
                    let curv_eps = tol.nullspace.max(1e-12) * scale;
                    let flat: Vec<usize> = (0..rho.len())
                        .filter(|&k| eig.eigenvalues[k] <= curv_eps && rho[k].abs() > tol.qp * gscale)
                        .collect();
                    let y = if !flat.is_empty() {
                        let mut y = DVector::zeros(rho.len());
                        for &k in &flat {
                            y -= eig.eigenvectors.column(k) * rho[k];
                        }
                        step = Some((&z * y, true));
                        None
                    } else {
                        let mut y = DVector::zeros(rho.len());
                        for k in 0..rho.len() {
                            if eig.eigenvalues[k] > curv_eps {
                                y -= eig.eigenvectors.column(k) * (rho[k] / eig.eigenvalues[k]);
                            }
                        }
                        Some(y)
                    };
                    if let Some(y) = y {
                        let d = &z * y;
                        if d.amax() > tol.qp * (1.0 + x.amax()) * 1e-3 {
                            step = Some((d, false));
                        }
                    }
                }
            }

            match step {
                None => {
                    // stationary on the working set: multipliers from g + Aw' lambda = 0
                    let lambda = lstsq(&aw.transpose(), &(-&g), tol.nullspace);
                    let worst = ws
                        .iter()
                        .enumerate()
                        .map(|(k, &i)| (lambda[p + k], i, k))
                        .filter(|&(l, _, _)| l < -tol.qp * gscale)
                        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    match worst {
                        Some((_, _, k)) => {
                            ws.remove(k);
                        }
                        None => {
                            let mut mu = DVector::zeros(m);
                            for (k, &i) in ws.iter().enumerate() {
                                mu[i] = lambda[p + k];
                            }
                            let nu = DVector::from_iterator(p, (0..p).map(|i| lambda[i]));
                            let kkt = self.kkt(&x, &mu, &nu);
                            let mut working_set = ws.clone();
                            working_set.sort_unstable();
                            return Ok(QpOutcome::Optimal(QpSolution {
                                objective: self.objective(&x),
                                x,
                                mu,
                                nu,
                                working_set,
                                iterations,
                                kkt,
                            }));
                        }
                    }
                }
                Some((d, is_ray)) => {
                    let mut alpha = if is_ray { f64::INFINITY } else { 1.0 };
                    let mut blocking = None;
                    let dscale = d.amax();
                    for i in (0..m).filter(|i| !ws.contains(i)) {
                        let ad = self.a.row(i).dot(&d.transpose());
                        if ad > 1e-12 * dscale * (1.0 + self.a.row(i).amax()) {
                            let s = self.a.row(i).dot(&x.transpose()) + self.b[i];
                            let t = (-s).max(0.0) / ad;
                            if t < alpha {
                                alpha = t;
                                blocking = Some(i);
                            }
                        }
                    }
                    if alpha.is_infinite() {
                        return Ok(QpOutcome::Unbounded);
                    }
                    x += &d * alpha;
                    if let Some(i) = blocking {
                        ws.push(i);
                    }
                }
            }
        }
    }
}
