//! Exact linear programming: two-phase dense simplex over rationals with
//! Bland's rule.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::rational::{format_rational, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    fn lhs(&self, x: &[Rational]) -> Rational {
        self.coeffs.iter().map(|(j, c)| c * &x[*j]).sum()
    }

    fn holds(&self, x: &[Rational]) -> bool {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Ge => lhs >= self.rhs,
            Relation::Eq => lhs == self.rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearProgram {
    pub variables: Vec<String>,
    pub direction: Direction,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<Option<Rational>>,
    pub upper: Vec<Option<Rational>>,
}

impl LinearProgram {
    pub fn new(direction: Direction) -> Self {
        LinearProgram {
            variables: Vec::new(),
            direction,
            objective: Vec::new(),
            constraints: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }

    /// Adds a variable with objective coefficient zero; returns its index.
    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: Option<Rational>,
        upper: Option<Rational>,
    ) -> usize {
        self.variables.push(name.into());
        self.objective.push(Rational::zero());
        self.lower.push(lower);
        self.upper.push(upper);
        self.variables.len() - 1
    }

    pub fn set_objective(&mut self, var: usize, coeff: Rational) {
        self.objective[var] = coeff;
    }

    pub fn add_constraint(
        &mut self,
        coeffs: Vec<(usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) -> usize {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.variables.len();
        if self.objective.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed(
                "objective or bound vectors do not match the variable list".into(),
            ));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if let Some((j, _)) = c.coeffs.iter().find(|(j, _)| *j >= n) {
                return Err(LpError::Malformed(format!(
                    "constraint {i} references undeclared variable {j}"
                )));
            }
        }
        Ok(())
    }

    /// Exact feasibility check of a full assignment.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.variables.len()
            && self.constraints.iter().all(|c| c.holds(x))
            && x.iter().enumerate().all(|(j, v)| {
                self.lower[j].as_ref().map_or(true, |l| v >= l)
                    && self.upper[j].as_ref().map_or(true, |u| v <= u)
            })
    }

    pub fn objective_at(&self, x: &[Rational]) -> Rational {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpError {
    Malformed(String),
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::Malformed(m) => write!(f, "malformed linear program: {m}"),
        }
    }
}

impl std::error::Error for LpError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `assignment` is empty and `objective_value` zero unless the status is `Optimal`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub assignment: Vec<Rational>,
    pub objective_value: Rational,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        LpSolution {
            status,
            assignment: Vec::new(),
            objective_value: Rational::zero(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Column of the standard-form problem and how it maps back:
/// `x[var] += sign * y`.
struct Column {
    var: Option<usize>,
    negated: bool,
}

struct Tableau {
    /// Rows of `[a_1 .. a_n | rhs]`, kept in canonical form for `basis`.
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rational {
        &self.rows[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c].clone();
        if !piv.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &piv;
                }
            }
        }
        let prow = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, p) in row.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
        self.rows[r] = prow;
        self.basis[r] = c;
    }

    fn reduced_cost(&self, cost: &[Rational], j: usize) -> Rational {
        let mut r = cost[j].clone();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &cost[self.basis[i]];
            if !cb.is_zero() && !row[j].is_zero() {
                r -= cb * &row[j];
            }
        }
        r
    }

    fn value(&self, cost: &[Rational]) -> Rational {
        (0..self.rows.len())
            .map(|i| &cost[self.basis[i]] * self.rhs(i))
            .sum()
    }

    /// Minimizes `cost . y` over columns with `allowed[j]`. Returns false if unbounded.
    fn minimize(&mut self, cost: &[Rational], allowed: &[bool]) -> bool {
        loop {
            let entering = (0..self.ncols)
                .find(|&j| allowed[j] && !self.basis.contains(&j) && self.reduced_cost(cost, j).is_negative());
            let Some(c) = entering else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &leave {
                    None => true,
                    Some((k, best)) => {
                        ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

/// Solves `lp` exactly. The returned optimal vertex depends only on the
/// input, so repeated calls give identical assignments.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.check()?;
    let n = lp.num_variables();

    // Standard form: x = offset + sum(sign * y), y >= 0.
    let mut columns: Vec<Column> = Vec::new();
    let mut offset = vec![Rational::zero(); n];
    let mut var_cols: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    // Extra rows y <= u - l for doubly bounded variables.
    let mut bound_rows: Vec<(usize, Rational)> = Vec::new();
    for j in 0..n {
        match (&lp.lower[j], &lp.upper[j]) {
            (Some(l), u) => {
                offset[j] = l.clone();
                var_cols[j].push((columns.len(), false));
                if let Some(u) = u {
                    bound_rows.push((columns.len(), u - l));
                }
                columns.push(Column {
                    var: Some(j),
                    negated: false,
                });
            }
            (None, Some(u)) => {
                offset[j] = u.clone();
                var_cols[j].push((columns.len(), true));
                columns.push(Column {
                    var: Some(j),
                    negated: true,
                });
            }
            (None, None) => {
                for negated in [false, true] {
                    var_cols[j].push((columns.len(), negated));
                    columns.push(Column {
                        var: Some(j),
                        negated,
                    });
                }
            }
        }
    }
    let nstruct = columns.len();

    struct Row {
        coeffs: Vec<(usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    }
    let mut rows: Vec<Row> = Vec::new();
    for c in &lp.constraints {
        let mut coeffs: Vec<(usize, Rational)> = Vec::new();
        let mut rhs = c.rhs.clone();
        for (j, a) in &c.coeffs {
            rhs -= a * &offset[*j];
            for &(col, neg) in &var_cols[*j] {
                coeffs.push((col, if neg { -a.clone() } else { a.clone() }));
            }
        }
        rows.push(Row {
            coeffs,
            relation: c.relation,
            rhs,
        });
    }
    for (col, cap) in bound_rows {
        rows.push(Row {
            coeffs: vec![(col, Rational::one())],
            relation: Relation::Le,
            rhs: cap,
        });
    }

    // Slack / surplus columns.
    let mut slack_of = vec![None; rows.len()];
    for (i, r) in rows.iter().enumerate() {
        if r.relation != Relation::Eq {
            slack_of[i] = Some(columns.len());
            columns.push(Column {
                var: None,
                negated: false,
            });
        }
    }
    let nreal = columns.len();
    let m = rows.len();

    let mut dense: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut needs_artificial = Vec::with_capacity(m);
    let mut basis = vec![usize::MAX; m];
    for (i, r) in rows.iter().enumerate() {
        let mut row = vec![Rational::zero(); nreal + 1];
        for (col, a) in &r.coeffs {
            row[*col] += a;
        }
        if let Some(sc) = slack_of[i] {
            row[sc] = match r.relation {
                Relation::Le => Rational::one(),
                _ => -Rational::one(),
            };
        }
        row[nreal] = r.rhs.clone();
        if row[nreal].is_negative() {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
        }
        let slack_basic = slack_of[i].filter(|&sc| row[sc].is_one());
        match slack_basic {
            Some(sc) => basis[i] = sc,
            None => needs_artificial.push(i),
        }
        dense.push(row);
    }
    let nart = needs_artificial.len();
    let ncols = nreal + nart;
    for row in dense.iter_mut() {
        let rhs = row.pop().expect("row has rhs");
        row.extend(std::iter::repeat_with(Rational::zero).take(nart));
        row.push(rhs);
    }
    for (k, &i) in needs_artificial.iter().enumerate() {
        dense[i][nreal + k] = Rational::one();
        basis[i] = nreal + k;
    }
    let mut tab = Tableau {
        rows: dense,
        basis,
        ncols,
    };

    // Phase 1.
    if nart > 0 {
        let mut cost = vec![Rational::zero(); ncols];
        for c in cost.iter_mut().skip(nreal) {
            *c = Rational::one();
        }
        let allowed = vec![true; ncols];
        tab.minimize(&cost, &allowed);
        if tab.value(&cost).is_positive() {
            return Ok(LpSolution::without_point(LpStatus::Infeasible));
        }
        // Drive zero-level artificials out; drop rows that cannot be pivoted.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= nreal {
                match (0..nreal).find(|&j| !tab.rows[i][j].is_zero()) {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    // Phase 2.
    let sign = match lp.direction {
        Direction::Minimize => Rational::one(),
        Direction::Maximize => -Rational::one(),
    };
    let mut cost = vec![Rational::zero(); ncols];
    for (col, c) in columns.iter().enumerate().take(nstruct) {
        let j = c.var.expect("structural column");
        let coef = &lp.objective[j] * &sign;
        cost[col] = if c.negated { -coef } else { coef };
    }
    let allowed: Vec<bool> = (0..ncols).map(|j| j < nreal).collect();
    if !tab.minimize(&cost, &allowed) {
        return Ok(LpSolution::without_point(LpStatus::Unbounded));
    }

    let mut y = vec![Rational::zero(); ncols];
    for (i, &b) in tab.basis.iter().enumerate() {
        y[b] = tab.rhs(i).clone();
    }
    let mut x = offset;
    for (col, c) in columns.iter().enumerate().take(nstruct) {
        let j = c.var.expect("structural column");
        if c.negated {
            x[j] -= &y[col];
        } else {
            x[j] += &y[col];
        }
    }
    assert!(
        lp.is_feasible(&x),
        "simplex returned an infeasible point: {:?}",
        x.iter().map(format_rational).collect::<Vec<_>>()
    );
    let objective_value = lp.objective_at(&x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        assignment: x,
        objective_value,
    })
}

/// Result of [`solve_max_slack`]. `t` is the largest uniform slack; the
/// strict system is satisfiable iff the status is `Optimal` and `t > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlackSolution {
    pub status: LpStatus,
    pub t: Rational,
    pub assignment: Vec<Rational>,
}

impl SlackSolution {
    pub fn strictly_feasible(&self) -> bool {
        self.status == LpStatus::Optimal && self.t.is_positive()
    }
}

/// Replaces each listed `lhs >= rhs` constraint by `lhs >= rhs + t` and
/// maximizes `t` over `0 <= t <= 1`; the original objective is ignored.
pub fn solve_max_slack(lp: &LinearProgram, strict: &[usize]) -> Result<SlackSolution, LpError> {
    lp.check()?;
    for &i in strict {
        match lp.constraints.get(i) {
            None => {
                return Err(LpError::Malformed(format!("no constraint with index {i}")));
            }
            Some(c) if c.relation != Relation::Ge => {
                return Err(LpError::Malformed(format!(
                    "strict constraint {i} must use the >= relation"
                )));
            }
            Some(_) => {}
        }
    }
    let mut aug = lp.clone();
    aug.direction = Direction::Maximize;
    for c in aug.objective.iter_mut() {
        *c = Rational::zero();
    }
    let t = aug.add_variable("t", Some(Rational::zero()), Some(Rational::one()));
    aug.set_objective(t, Rational::one());
    for &i in strict {
        aug.constraints[i].coeffs.push((t, -Rational::one()));
    }
    let sol = solve_lp(&aug)?;
    Ok(match sol.status {
        LpStatus::Optimal => {
            let mut assignment = sol.assignment;
            let t = assignment.pop().expect("slack variable");
            SlackSolution {
                status: LpStatus::Optimal,
                t,
                assignment,
            }
        }
        status => SlackSolution {
            status,
            t: Rational::zero(),
            assignment: Vec::new(),
        },
    })
}
