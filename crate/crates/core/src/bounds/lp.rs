//! Exact rational two-phase simplex for `max c.x  s.t.  A x = b, x >= 0`,
//! with Bland's rule for both the entering and the leaving variable.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::ratio::{self, Rational};

#[derive(Clone, Debug)]
pub struct LinearProgram {
    /// Sparse rows: `(column, coefficient)`.
    pub rows: Vec<Vec<(usize, Rational)>>,
    pub rhs: Vec<Rational>,
    pub objective: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub value: Rational,
    pub x: Vec<Rational>,
    /// Dual multipliers, one per constraint row; `y.b = value` and
    /// `c - A^T y <= 0` hold exactly.
    pub duals: Vec<Rational>,
    pub pivots: usize,
    pub warm_started: bool,
}

impl LinearProgram {
    pub fn new(columns: usize) -> Self {
        LinearProgram {
            rows: Vec::new(),
            rhs: Vec::new(),
            objective: vec![Rational::zero(); columns],
        }
    }

    pub fn columns(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, row: Vec<(usize, Rational)>, rhs: Rational) {
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    fn row_dot(row: &[(usize, Rational)], x: &[Rational]) -> Rational {
        row.iter().fold(Rational::zero(), |acc, (j, a)| acc + a * &x[*j])
    }

    /// Exact primal feasibility of `x`.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.columns()
            && x.iter().all(|v| !v.is_negative())
            && self.rows.iter().zip(&self.rhs).all(|(r, b)| &Self::row_dot(r, x) == b)
    }

    pub fn value(&self, x: &[Rational]) -> Rational {
        self.objective.iter().zip(x).fold(Rational::zero(), |acc, (c, v)| acc + c * v)
    }

    /// Checks the optimality certificate: primal feasibility, dual
    /// feasibility `A^T y >= c`, and equal objectives.
    pub fn certifies(&self, sol: &LpSolution) -> bool {
        if !self.is_feasible(&sol.x) || sol.duals.len() != self.rows.len() {
            return false;
        }
        let mut aty = vec![Rational::zero(); self.columns()];
        for (row, y) in self.rows.iter().zip(&sol.duals) {
            if y.is_zero() {
                continue;
            }
            for (j, a) in row {
                aty[*j] += a * y;
            }
        }
        let dual_feasible = aty.iter().zip(&self.objective).all(|(l, c)| l >= c);
        let dual_value = self.rhs.iter().zip(&sol.duals).fold(Rational::zero(), |acc, (b, y)| acc + b * y);
        dual_feasible && dual_value == sol.value && self.value(&sol.x) == sol.value
    }
}

#[derive(Clone)]
struct Tableau {
    /// Dense rows over all columns (structural then artificial), rhs last.
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    width: usize,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        self.pivot_with(r, c, None);
    }

    fn pivot_with(&mut self, r: usize, c: usize, obj: Option<&mut Vec<Rational>>) {
        let inv = self.t[r][c].recip();
        let nz: Vec<usize> = (0..=self.width).filter(|&j| !self.t[r][j].is_zero()).collect();
        for &j in &nz {
            self.t[r][j] = &self.t[r][j] * &inv;
        }
        let pivot_row: Vec<(usize, Rational)> = nz.iter().map(|&j| (j, self.t[r][j].clone())).collect();
        for i in 0..self.t.len() {
            if i == r || self.t[i][c].is_zero() {
                continue;
            }
            let f = self.t[i][c].clone();
            for (j, v) in &pivot_row {
                let d = &f * v;
                self.t[i][*j] -= d;
            }
        }
        if let Some(obj) = obj {
            if !obj[c].is_zero() {
                let f = obj[c].clone();
                for (j, v) in &pivot_row {
                    let d = &f * v;
                    obj[*j] -= d;
                }
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut d: Vec<Rational> = cost.to_vec();
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = &cost[bv];
            if cb.is_zero() {
                continue;
            }
            for (j, dj) in d.iter_mut().enumerate() {
                if !self.t[i][j].is_zero() {
                    *dj -= cb * &self.t[i][j];
                }
            }
        }
        d
    }

    /// Bland's rule iterations on `cost` over columns `< allowed`.
    fn optimize(&mut self, cost: &[Rational], allowed: usize, pivot_limit: usize) -> Result<bool> {
        let mut d = self.reduced_costs(cost);
        d.push(Rational::zero());
        loop {
            let entering = (0..allowed).find(|&j| d[j].is_positive());
            let c = match entering {
                Some(c) => c,
                None => return Ok(true),
            };
            let mut best: Option<(Rational, usize, usize)> = None;
            for i in 0..self.t.len() {
                let a = &self.t[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.t[i][self.width] / a;
                let better = match &best {
                    None => true,
                    Some((br, _, bvar)) => ratio < *br || (ratio == *br && self.basis[i] < *bvar),
                };
                if better {
                    best = Some((ratio, i, self.basis[i]));
                }
            }
            match best {
                None => return Ok(false),
                Some((_, r, _)) => self.pivot_with(r, c, Some(&mut d)),
            }
            if self.pivots > pivot_limit {
                return Err(Error::Capacity {
                    what: "simplex pivots",
                    required: self.pivots as u128,
                    limit: pivot_limit as u128,
                });
            }
        }
    }
}

pub const PIVOT_LIMIT: usize = 1_000_000;

const FLOAT_ZERO: f64 = 1e-7;

/// Basis hint from floating-point primal and dual optima: the primal
/// support, then the remaining columns by increasing dual slack. Empty if
/// the floating solver fails.
pub fn float_basis_hint(lp: &LinearProgram) -> Vec<usize> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let n = lp.columns();
    let mut primal = Problem::new(OptimizationDirection::Maximize);
    let xs: Vec<_> = lp
        .objective
        .iter()
        .map(|c| primal.add_var(ratio::to_f64(c), (0.0, f64::INFINITY)))
        .collect();
    for (row, b) in lp.rows.iter().zip(&lp.rhs) {
        let expr: Vec<_> = row.iter().map(|(j, a)| (xs[*j], ratio::to_f64(a))).collect();
        primal.add_constraint(expr.as_slice(), ComparisonOp::Eq, ratio::to_f64(b));
    }
    let x = match primal.solve().ok().and_then(|o| o.into_solution().ok()) {
        Some(s) => s,
        None => return Vec::new(),
    };
    let mut hint: Vec<usize> = (0..n).filter(|&j| x.var_value(xs[j]) > FLOAT_ZERO).collect();

    // min b.y  s.t.  A^T y >= c with y = u - v, u, v >= 0
    let mut dual = Problem::new(OptimizationDirection::Minimize);
    let ys: Vec<_> = lp
        .rhs
        .iter()
        .map(|b| {
            let b = ratio::to_f64(b);
            (dual.add_var(b, (0.0, f64::INFINITY)), dual.add_var(-b, (0.0, f64::INFINITY)))
        })
        .collect();
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in lp.rows.iter().enumerate() {
        for (j, a) in row {
            columns[*j].push((i, ratio::to_f64(a)));
        }
    }
    for (j, col) in columns.iter().enumerate() {
        let expr: Vec<_> = col.iter().flat_map(|(i, a)| [(ys[*i].0, *a), (ys[*i].1, -*a)]).collect();
        dual.add_constraint(expr.as_slice(), ComparisonOp::Ge, ratio::to_f64(&lp.objective[j]));
    }
    if let Some(y) = dual.solve().ok().and_then(|o| o.into_solution().ok()) {
        let in_support: std::collections::HashSet<usize> = hint.iter().copied().collect();
        let mut rest: Vec<(f64, usize)> = columns
            .iter()
            .enumerate()
            .filter(|(j, _)| !in_support.contains(j))
            .map(|(j, col)| {
                let ay: f64 = col.iter().map(|(i, a)| a * (y.var_value(ys[*i].0) - y.var_value(ys[*i].1))).sum();
                ((ay - ratio::to_f64(&lp.objective[j])).abs(), j)
            })
            .collect();
        rest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        hint.extend(rest.into_iter().map(|(_, j)| j));
    }
    hint
}

pub fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    solve_with_hint(lp, &[])
}

/// As [`solve`], first pivoting the hinted columns into the basis. A hint
/// that does not lead to a feasible basis is discarded.
pub fn solve_with_hint(lp: &LinearProgram, hint: &[usize]) -> Result<LpOutcome> {
    let n = lp.columns();
    let m = lp.rows.len();
    let width = n + m;
    if let Some(&j) = hint.iter().find(|&&j| j >= n) {
        return Err(Error::Internal(format!("hint column {j} out of range")));
    }
    let mut t = Vec::with_capacity(m);
    let mut sign = Vec::with_capacity(m);
    for (i, (row, b)) in lp.rows.iter().zip(&lp.rhs).enumerate() {
        let s = if b.is_negative() { -Rational::one() } else { Rational::one() };
        let mut dense = vec![Rational::zero(); width + 1];
        for (j, a) in row {
            if *j >= n {
                return Err(Error::Internal(format!("row {i} references column {j} of {n}")));
            }
            dense[*j] += a * &s;
        }
        dense[n + i] = Rational::one();
        dense[width] = b * &s;
        t.push(dense);
        sign.push(s);
    }
    let fresh = Tableau {
        t,
        basis: (n..n + m).collect(),
        width,
        pivots: 0,
    };
    let mut tab = fresh.clone();
    let mut warm_started = false;
    if !hint.is_empty() {
        for &j in hint {
            if let Some(i) = (0..tab.t.len()).find(|&i| tab.basis[i] >= n && !tab.t[i][j].is_zero()) {
                tab.pivot(i, j);
            }
        }
        if tab.t.iter().any(|row| row[width].is_negative()) {
            tab = fresh;
        } else {
            warm_started = true;
        }
    }

    let mut phase1 = vec![Rational::zero(); width];
    for c in phase1.iter_mut().skip(n) {
        *c = -Rational::one();
    }
    let infeasibility = |tab: &Tableau| {
        tab.basis
            .iter()
            .enumerate()
            .filter(|(_, &bv)| bv >= n)
            .fold(Rational::zero(), |acc, (i, _)| acc + &tab.t[i][width])
    };
    if infeasibility(&tab).is_positive() {
        tab.optimize(&phase1, width, PIVOT_LIMIT)?;
    }
    if infeasibility(&tab).is_positive() {
        return Ok(LpOutcome::Infeasible);
    }

    // Drive zero-level artificials out of the basis; rows where that is
    // impossible are linear combinations of the others.
    let mut i = 0;
    while i < tab.t.len() {
        if tab.basis[i] >= n {
            match (0..n).find(|&j| !tab.t[i][j].is_zero()) {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let mut cost = vec![Rational::zero(); width];
    cost[..n].clone_from_slice(&lp.objective);
    if !tab.optimize(&cost, n, PIVOT_LIMIT)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![Rational::zero(); n];
    for (i, &bv) in tab.basis.iter().enumerate() {
        x[bv] = tab.t[i][width].clone();
    }
    // Every tableau row is a combination of the sign-adjusted input rows
    // with coefficients in the artificial columns, so the reduced cost of
    // artificial k is -y_k. Dropped rows are covered too.
    let d = tab.reduced_costs(&cost);
    let duals: Vec<Rational> = (0..m).map(|k| -&d[n + k] * &sign[k]).collect();
    let value = lp.value(&x);
    let sol = LpSolution {
        value,
        x,
        duals,
        pivots: tab.pivots,
        warm_started,
    };
    if !lp.certifies(&sol) {
        return Err(Error::Internal("simplex result failed its exact optimality certificate".into()));
    }
    Ok(LpOutcome::Optimal(sol))
}
