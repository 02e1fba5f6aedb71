//! Exact linear programming over inequality systems `A x <= b` with free
//! variables.
//!
//! The solver works on the dual standard form `min b.y, A^T y = c, y >= 0`,
//! whose tableau has one row per variable instead of one per constraint. In
//! this crate constraint counts (ball vertices, facet functionals) are much
//! larger than dimensions, so this is the cheap side. Pivoting follows
//! Bland's rule, which guarantees termination. An optimal dual basis picks
//! `n` linearly independent constraints; the primal optimum is the vertex
//! where they are tight.

use super::{dot, Field, Matrix};
use crate::error::{dim_mismatch, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// The halfspace `coeffs . x <= bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub bound: T,
}

impl<T: Field> Constraint<T> {
    pub fn new(coeffs: Vec<T>, bound: T) -> Self {
        Constraint { coeffs, bound }
    }

    /// The pair of halfspaces `coeffs . x = value`.
    pub fn equality(coeffs: Vec<T>, value: T) -> [Self; 2] {
        let neg = coeffs.iter().map(|x| -x.clone()).collect();
        [
            Constraint::new(coeffs, value.clone()),
            Constraint::new(neg, -value),
        ]
    }

    pub fn holds(&self, x: &[T]) -> bool {
        dot(&self.coeffs, x) <= self.bound
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpSolution<T> {
    pub value: T,
    pub point: Vec<T>,
    /// Nonnegative multipliers `y`, one per constraint, with
    /// `sum y_i a_i = s c` and `sum y_i b_i = s value`, where `s = 1` when
    /// maximizing and `s = -1` when minimizing.
    pub multipliers: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome<T> {
    Optimal(LpSolution<T>),
    Infeasible,
    Unbounded,
}

impl<T: Field> LpOutcome<T> {
    pub fn optimal(self) -> Option<LpSolution<T>> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

impl<T: Field> LpSolution<T> {
    /// Check primal feasibility of the point and the dual certificate,
    /// exactly.
    pub fn certifies(&self, objective: &[T], constraints: &[Constraint<T>], sense: Sense) -> bool {
        if !constraints.iter().all(|c| c.holds(&self.point)) {
            return false;
        }
        if dot(objective, &self.point) != self.value {
            return false;
        }
        if self.multipliers.len() != constraints.len()
            || self.multipliers.iter().any(|y| y.is_negative())
        {
            return false;
        }
        let sign = match sense {
            Sense::Maximize => T::one(),
            Sense::Minimize => -T::one(),
        };
        let mut combo = vec![T::zero(); objective.len()];
        let mut rhs = T::zero();
        for (y, c) in self.multipliers.iter().zip(constraints) {
            if y.is_zero() {
                continue;
            }
            for (acc, a) in combo.iter_mut().zip(&c.coeffs) {
                *acc = acc.clone() + y.clone() * a.clone();
            }
            rhs = rhs + y.clone() * c.bound.clone();
        }
        combo
            .iter()
            .zip(objective)
            .all(|(a, c)| *a == sign.clone() * c.clone())
            && rhs == sign * self.value.clone()
    }
}

/// Optimize `objective . x` over `{x : a_i . x <= b_i}`.
pub fn lp_solve<T: Field>(
    objective: &[T],
    constraints: &[Constraint<T>],
    sense: Sense,
) -> Result<LpOutcome<T>> {
    let n = objective.len();
    for (i, c) in constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(dim_mismatch(&format!("constraint {i}"), n, c.coeffs.len()));
        }
    }
    let c: Vec<T> = match sense {
        Sense::Maximize => objective.to_vec(),
        Sense::Minimize => objective.iter().map(|x| -x.clone()).collect(),
    };
    let a = Matrix::from_rows(n, constraints.iter().map(|c| c.coeffs.clone()).collect())?;
    let b: Vec<T> = constraints.iter().map(|c| c.bound.clone()).collect();
    Ok(match maximize(&c, &a, &b) {
        LpOutcome::Optimal(mut s) => {
            if sense == Sense::Minimize {
                s.value = -s.value;
            }
            LpOutcome::Optimal(s)
        }
        other => other,
    })
}

/// Decide whether `{x : a_i . x <= b_i}` is nonempty; returns a point if so.
pub fn feasible_point<T: Field>(
    dim: usize,
    constraints: &[Constraint<T>],
) -> Result<Option<Vec<T>>> {
    let zero = vec![T::zero(); dim];
    Ok(lp_solve(&zero, constraints, Sense::Maximize)?
        .optimal()
        .map(|s| s.point))
}

/// Lexicographically smallest point of a bounded polyhedron, found by
/// minimizing one coordinate at a time and freezing it. `None` if empty.
pub fn lexmin<T: Field>(dim: usize, constraints: &[Constraint<T>]) -> Result<Option<Vec<T>>> {
    let mut cons = constraints.to_vec();
    let mut point = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut e = vec![T::zero(); dim];
        e[k] = T::one();
        match lp_solve(&e, &cons, Sense::Minimize)? {
            LpOutcome::Infeasible => return Ok(None),
            LpOutcome::Unbounded => {
                return Err(Error::Input(format!(
                    "lexmin: coordinate {k} unbounded below"
                )))
            }
            LpOutcome::Optimal(s) => {
                cons.extend(Constraint::equality(e, s.value.clone()));
                point.push(s.value);
            }
        }
    }
    if dim == 0 && feasible_point(0, constraints)?.is_none() {
        return Ok(None);
    }
    Ok(Some(point))
}

fn maximize<T: Field>(c: &[T], a: &Matrix<T>, b: &[T]) -> LpOutcome<T> {
    let (m, n) = a.shape();
    let ech = a.echelon();
    let rank = ech.pivots.len();
    if rank == n {
        return solve_full_rank(c, a, b);
    }
    // Columns outside the pivot set are combinations of pivot columns, so
    // reduce to them. If c is outside the row space of A the objective is
    // unbounded along the lineality space whenever the region is nonempty.
    let cols = ech.pivots.clone();
    let reduced = a.select_cols(&cols);
    let c_row = Matrix::from_rows(n, vec![c.to_vec()]).expect("objective row");
    let in_rowspace = a.vstack(&c_row).expect("same width").rank() == rank;
    let c_reduced: Vec<T> = cols.iter().map(|&j| c[j].clone()).collect();
    if !in_rowspace {
        let zero = vec![T::zero(); cols.len()];
        return match solve_full_rank(&zero, &reduced, b) {
            LpOutcome::Optimal(_) => LpOutcome::Unbounded,
            other => other,
        };
    }
    match solve_full_rank(&c_reduced, &reduced, b) {
        LpOutcome::Optimal(s) => {
            let mut point = vec![T::zero(); n];
            for (k, &j) in cols.iter().enumerate() {
                point[j] = s.point[k].clone();
            }
            debug_assert_eq!(s.multipliers.len(), m);
            LpOutcome::Optimal(LpSolution {
                value: s.value,
                point,
                multipliers: s.multipliers,
            })
        }
        other => other,
    }
}

/// Requires `a` to have full column rank.
fn solve_full_rank<T: Field>(c: &[T], a: &Matrix<T>, b: &[T]) -> LpOutcome<T> {
    let (m, n) = a.shape();
    if n == 0 {
        return if b.iter().all(|x| !x.is_negative()) {
            LpOutcome::Optimal(LpSolution {
                value: T::zero(),
                point: vec![],
                multipliers: vec![T::zero(); m],
            })
        } else {
            LpOutcome::Infeasible
        };
    }
    match DualTableau::new(c, a).run(b) {
        DualOutcome::Optimal(basis, y) => {
            let rows = a.select_rows(&basis);
            let rhs: Vec<T> = basis.iter().map(|&i| b[i].clone()).collect();
            let point = rows.solve(&rhs).expect("optimal dual basis is nonsingular");
            let value = dot(c, &point);
            LpOutcome::Optimal(LpSolution {
                value,
                point,
                multipliers: y,
            })
        }
        DualOutcome::Unbounded => LpOutcome::Infeasible,
        DualOutcome::Infeasible => {
            // Either the primal is infeasible or unbounded; c = 0 is always
            // dual feasible, so this recursion bottoms out immediately.
            let zero = vec![T::zero(); n];
            match solve_full_rank(&zero, a, b) {
                LpOutcome::Optimal(_) => LpOutcome::Unbounded,
                _ => LpOutcome::Infeasible,
            }
        }
    }
}

enum DualOutcome<T> {
    /// Basic constraint indices and the full dual vector.
    Optimal(Vec<usize>, Vec<T>),
    Infeasible,
    Unbounded,
}

/// Tableau for `min b.y  s.t.  A^T y = c, y >= 0` with artificial columns
/// `m..m+n`.
struct DualTableau<T> {
    m: usize,
    n: usize,
    /// `n` rows of `m + n` coefficients followed by the right-hand side.
    t: Vec<Vec<T>>,
    basis: Vec<usize>,
}

impl<T: Field> DualTableau<T> {
    fn new(c: &[T], a: &Matrix<T>) -> Self {
        let (m, n) = a.shape();
        let mut t = Vec::with_capacity(n);
        for k in 0..n {
            let flip = c[k].is_negative();
            let mut row = Vec::with_capacity(m + n + 1);
            for i in 0..m {
                let v = a[(i, k)].clone();
                row.push(if flip { -v } else { v });
            }
            for j in 0..n {
                row.push(if j == k { T::one() } else { T::zero() });
            }
            row.push(c[k].abs());
            t.push(row);
        }
        DualTableau {
            m,
            n,
            t,
            basis: (m..m + n).collect(),
        }
    }

    fn rhs(&self, k: usize) -> &T {
        &self.t[k][self.m + self.n]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let width = self.m + self.n + 1;
        let inv = T::one() / self.t[r][j].clone();
        for x in self.t[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        let pivot_row = self.t[r].clone();
        for (k, row) in self.t.iter_mut().enumerate() {
            if k == r || row[j].is_zero() {
                continue;
            }
            let f = row[j].clone();
            for col in 0..width {
                if !pivot_row[col].is_zero() {
                    row[col] = row[col].clone() - f.clone() * pivot_row[col].clone();
                }
            }
        }
        self.basis[r] = j;
    }

    /// Reduced costs `cost_j - sum_k cost(basis_k) t[k][j]` for every column.
    fn reduced_costs(&self, cost: &dyn Fn(usize) -> T) -> Vec<T> {
        let width = self.m + self.n;
        let mut z: Vec<T> = (0..width).map(cost).collect();
        for k in 0..self.n {
            let cb = cost(self.basis[k]);
            if cb.is_zero() {
                continue;
            }
            for (zj, tkj) in z.iter_mut().zip(&self.t[k]) {
                if !tkj.is_zero() {
                    *zj = zj.clone() - cb.clone() * tkj.clone();
                }
            }
        }
        z
    }

    /// Bland-rule simplex on columns `0..limit` for the given cost vector.
    /// Returns `false` if the objective is unbounded below.
    fn simplex(&mut self, cost: &dyn Fn(usize) -> T, limit: usize) -> bool {
        let mut z = self.reduced_costs(cost);
        loop {
            let Some(j) = (0..limit).find(|&j| z[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, T)> = None;
            for k in 0..self.n {
                let tk = &self.t[k][j];
                if !tk.is_positive() {
                    continue;
                }
                let ratio = self.rhs(k).clone() / tk.clone();
                let better = match &best {
                    None => true,
                    Some((bk, br)) => {
                        ratio < *br || (ratio == *br && self.basis[k] < self.basis[*bk])
                    }
                };
                if better {
                    best = Some((k, ratio));
                }
            }
            let Some((r, _)) = best else {
                return false;
            };
            self.pivot(r, j);
            let f = z[j].clone();
            for (zc, tc) in z.iter_mut().zip(&self.t[r]) {
                if !tc.is_zero() {
                    *zc = zc.clone() - f.clone() * tc.clone();
                }
            }
        }
    }

    fn run(mut self, b: &[T]) -> DualOutcome<T> {
        let (m, n) = (self.m, self.n);
        let phase1 = |j: usize| if j >= m { T::one() } else { T::zero() };
        self.simplex(&phase1, m + n);
        let infeasibility = (0..n)
            .filter(|&k| self.basis[k] >= m)
            .fold(T::zero(), |acc, k| acc + self.rhs(k).clone());
        if infeasibility.is_positive() {
            return DualOutcome::Infeasible;
        }
        for k in 0..n {
            if self.basis[k] < m {
                continue;
            }
            let j = (0..m)
                .find(|&j| !self.t[k][j].is_zero() && !self.basis.contains(&j))
                .expect("full column rank leaves no redundant rows");
            self.pivot(k, j);
        }
        let phase2 = |j: usize| if j < m { b[j].clone() } else { T::zero() };
        if !self.simplex(&phase2, m) {
            return DualOutcome::Unbounded;
        }
        let mut y = vec![T::zero(); m];
        for k in 0..n {
            y[self.basis[k]] = self.rhs(k).clone();
        }
        DualOutcome::Optimal(self.basis.clone(), y)
    }
}
