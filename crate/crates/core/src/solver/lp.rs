//! Dense two-phase tableau simplex with Bland's rule.

use super::SolverError;

/// `min c . x` subject to `le` rows (`a . x <= b`), `eq` rows (`a . x = b`)
/// and `x_j >= 0` unless `j` is marked free.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub free: Vec<bool>,
    pub le: Vec<(Vec<f64>, f64)>,
    pub eq: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible { phase_one_value: f64 },
    Unbounded,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible { .. })
    }
}

impl LinearProgram {
    /// `n` non-negative variables, zero objective, no rows.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; n],
            free: vec![false; n],
            le: vec![],
            eq: vec![],
        }
    }

    pub fn len(&self) -> usize {
        self.objective.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objective.is_empty()
    }

    pub fn minimize(mut self, c: Vec<f64>) -> Self {
        assert_eq!(c.len(), self.len());
        self.objective = c;
        self
    }

    pub fn all_free(mut self) -> Self {
        self.free = vec![true; self.len()];
        self
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        assert_eq!(row.len(), self.len());
        self.le.push((row, rhs));
    }

    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) {
        self.add_le(row.into_iter().map(|x| -x).collect(), -rhs);
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        assert_eq!(row.len(), self.len());
        self.eq.push((row, rhs));
    }

    /// Solves the program. A phase-one optimum above `tol` means infeasible.
    pub fn solve(&self, tol: f64, max_iterations: usize) -> Result<LpOutcome, SolverError> {
        Simplex::build(self).run(self, tol, max_iterations)
    }
}

/// Whether `{x : le, eq, bounds}` is non-empty.
pub fn lp_feasible(lp: &LinearProgram, tol: f64, max_iterations: usize) -> Result<bool, SolverError> {
    let mut probe = lp.clone();
    probe.objective = vec![0.0; lp.len()];
    Ok(probe.solve(tol, max_iterations)?.is_feasible())
}

const PIVOT_EPS: f64 = 1e-11;

struct Simplex {
    /// rows: constraint coefficients followed by rhs
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
    /// standard column -> (original variable, sign)
    origin: Vec<Option<(usize, f64)>>,
    first_artificial: usize,
}

impl Simplex {
    fn build(lp: &LinearProgram) -> Simplex {
        let n = lp.len();
        let mut origin: Vec<Option<(usize, f64)>> = Vec::new();
        let mut var_cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut cols = vec![(origin.len(), 1.0)];
            origin.push(Some((j, 1.0)));
            if lp.free[j] {
                cols.push((origin.len(), -1.0));
                origin.push(Some((j, -1.0)));
            }
            var_cols.push(cols);
        }
        let n_struct = origin.len();
        let n_slack = lp.le.len();
        let m = lp.le.len() + lp.eq.len();
        // artificial for every eq row and every le row with negative rhs
        let needs_art: Vec<bool> = lp
            .le
            .iter()
            .map(|(_, b)| *b < 0.0)
            .chain(lp.eq.iter().map(|_| true))
            .collect();
        let n_art = needs_art.iter().filter(|&&x| x).count();
        let ncols = n_struct + n_slack + n_art;
        origin.extend(std::iter::repeat_n(None, n_slack + n_art));

        let mut t = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_art = n_struct + n_slack;
        let rows = lp.le.iter().map(|r| (r, true)).chain(lp.eq.iter().map(|r| (r, false)));
        for (r, ((a, b), is_le)) in rows.enumerate() {
            let mut row = vec![0.0; ncols + 1];
            for (j, cols) in var_cols.iter().enumerate() {
                for &(c, s) in cols {
                    row[c] = s * a[j];
                }
            }
            if is_le {
                row[n_struct + r] = 1.0;
            }
            row[ncols] = *b;
            if needs_art[r] {
                if *b < 0.0 {
                    row.iter_mut().for_each(|x| *x = -*x);
                }
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(n_struct + r);
            }
            t.push(row);
        }
        Simplex {
            t,
            basis,
            ncols,
            origin,
            first_artificial: n_struct + n_slack,
        }
    }

    fn pivot(&mut self, obj: &mut [f64], r: usize, j: usize) {
        let p = self.t[r][j];
        self.t[r].iter_mut().for_each(|x| *x /= p);
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r && row[j] != 0.0 {
                let f = row[j];
                row.iter_mut().zip(&pivot_row).for_each(|(x, y)| *x -= f * y);
                row[j] = 0.0;
            }
        }
        let f = obj[j];
        if f != 0.0 {
            obj.iter_mut().zip(&pivot_row).for_each(|(x, y)| *x -= f * y);
            obj[j] = 0.0;
        }
        self.basis[r] = j;
    }

    /// Bland's rule. Returns `Ok(false)` when unbounded.
    fn iterate(
        &mut self,
        obj: &mut [f64],
        allowed: usize,
        iterations: &mut usize,
        max_iterations: usize,
    ) -> Result<bool, SolverError> {
        let scale = |v: &[f64]| v.iter().take(allowed).fold(1.0f64, |m, x| m.max(x.abs()));
        loop {
            let eps = 1e-10 * scale(obj);
            let Some(j) = (0..allowed).find(|&j| obj[j] < -eps) else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for (r, row) in self.t.iter().enumerate() {
                if row[j] > PIVOT_EPS {
                    let ratio = row[self.ncols].max(0.0) / row[j];
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - 1e-12 * bratio.abs().max(1.0)
                                || (ratio <= bratio + 1e-12 * bratio.abs().max(1.0) && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = best else {
                return Ok(false);
            };
            *iterations += 1;
            if *iterations > max_iterations {
                return Err(SolverError::IterationLimit(max_iterations));
            }
            self.pivot(obj, r, j);
        }
    }

    fn run(mut self, lp: &LinearProgram, tol: f64, max_iterations: usize) -> Result<LpOutcome, SolverError> {
        let mut iterations = 0;
        let nc = self.ncols;
        let fa = self.first_artificial;
        if fa < nc {
            let mut obj = vec![0.0; nc + 1];
            obj[fa..nc].iter_mut().for_each(|x| *x = 1.0);
            for (r, &b) in self.basis.iter().enumerate() {
                if b >= fa {
                    obj.iter_mut().zip(&self.t[r]).for_each(|(x, y)| *x -= y);
                }
            }
            self.iterate(&mut obj, nc, &mut iterations, max_iterations)?;
            let phase_one_value = -obj[nc];
            if phase_one_value > tol {
                return Ok(LpOutcome::Infeasible { phase_one_value });
            }
            // drive remaining artificials out where possible
            for r in 0..self.t.len() {
                if self.basis[r] >= fa {
                    if let Some(j) = (0..fa).find(|&j| self.t[r][j].abs() > 1e-9) {
                        let mut dummy = vec![0.0; nc + 1];
                        self.pivot(&mut dummy, r, j);
                    }
                }
            }
        }
        let mut obj = vec![0.0; nc + 1];
        for (c, o) in self.origin.iter().enumerate() {
            if let Some((j, s)) = o {
                obj[c] = s * lp.objective[*j];
            }
        }
        for r in 0..self.t.len() {
            let b = self.basis[r];
            let f = obj[b];
            if f != 0.0 {
                obj.iter_mut().zip(&self.t[r]).for_each(|(x, y)| *x -= f * y);
            }
        }
        if !self.iterate(&mut obj, fa, &mut iterations, max_iterations)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![0.0; lp.len()];
        for (r, &b) in self.basis.iter().enumerate() {
            if let Some(Some((j, s))) = self.origin.get(b) {
                x[*j] += s * self.t[r][nc];
            }
        }
        let value = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        Ok(LpOutcome::Optimal { x, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(lp: &LinearProgram) -> LpOutcome {
        lp.solve(1e-9, 10_000).unwrap()
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
        let mut lp = LinearProgram::new(2).minimize(vec![-3.0, -5.0]);
        lp.add_le(vec![1.0, 0.0], 4.0);
        lp.add_le(vec![0.0, 2.0], 12.0);
        lp.add_le(vec![3.0, 2.0], 18.0);
        let LpOutcome::Optimal { x, value } = solve(&lp) else { panic!() };
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
        assert!((value + 36.0).abs() < 1e-12);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x subject to x + y = 1, y <= 3, x, y free  ->  x = -2
        let mut lp = LinearProgram::new(2).minimize(vec![1.0, 0.0]).all_free();
        lp.add_eq(vec![1.0, 1.0], 1.0);
        lp.add_le(vec![0.0, 1.0], 3.0);
        let LpOutcome::Optimal { x, .. } = solve(&lp) else { panic!() };
        assert!((x[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add_le(vec![1.0], -1.0);
        match solve(&lp) {
            LpOutcome::Infeasible { phase_one_value } => assert!((phase_one_value - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let mut lp = LinearProgram::new(2).minimize(vec![-1.0, 0.0]);
        lp.add_le(vec![-1.0, 1.0], 1.0);
        assert_eq!(solve(&lp), LpOutcome::Unbounded);
        assert!(!lp_feasible(&LinearProgram { le: vec![(vec![1.0, 1.0], -0.5)], ..LinearProgram::new(2) }, 1e-9, 100).unwrap());
    }

    #[test]
    fn negative_rhs_ge_rows() {
        // min x + y, x + y >= 2, x >= 0.5
        let mut lp = LinearProgram::new(2).minimize(vec![1.0, 1.0]);
        lp.add_ge(vec![1.0, 1.0], 2.0);
        lp.add_ge(vec![1.0, 0.0], 0.5);
        let LpOutcome::Optimal { value, x } = solve(&lp) else { panic!() };
        assert!((value - 2.0).abs() < 1e-12);
        assert!(x[0] >= 0.5 - 1e-12);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Beale's classic degenerate LP that cycles under Dantzig's rule.
        let mut lp = LinearProgram::new(4).minimize(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_le(vec![0.25, -60.0, -0.04, 9.0], 0.0);
        lp.add_le(vec![0.5, -90.0, -0.02, 3.0], 0.0);
        lp.add_le(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let LpOutcome::Optimal { value, .. } = solve(&lp) else { panic!() };
        assert!((value + 0.05).abs() < 1e-10);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2).minimize(vec![1.0, 2.0]);
        lp.add_eq(vec![1.0, 1.0], 1.0);
        lp.add_eq(vec![2.0, 2.0], 2.0);
        let LpOutcome::Optimal { x, value } = solve(&lp) else { panic!() };
        assert!((value - 1.0).abs() < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12);
    }
}
