use serde::{Deserialize, Serialize};

use super::{Constraint, LpError, LpScalar, LpStatus, Relation};

/// Entering-variable selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PivotRule {
    /// Lowest-index improving column, lowest-index leaving row on ties. Never cycles.
    Bland,
    /// Most positive reduced cost.
    Dantzig,
    /// Dantzig pricing that falls back to Bland during long runs of degenerate pivots.
    DantzigThenBland,
    /// Dantzig pricing with a lexicographic ratio test; cannot cycle and copes
    /// with heavily degenerate programs.
    #[default]
    Lexicographic,
}

const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

pub(super) struct RawSolution<T> {
    pub status: LpStatus,
    pub x: Vec<T>,
    pub duals: Vec<T>,
    pub objective: T,
    pub pivots: usize,
    /// Basic column of each row at termination, `None` for dropped redundant rows.
    /// Slack columns follow the structural ones in row order; empty unless optimal.
    pub basis: Vec<Option<usize>>,
}

struct Tableau<'a, T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    active: Vec<bool>,
    reduced: Vec<T>,
    value: T,
    is_artificial: Vec<bool>,
    home_cols: Vec<usize>,
    tol: &'a T,
    rule: PivotRule,
    pivots: usize,
    max_pivots: usize,
    degenerate_run: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl<T: LpScalar> Tableau<'_, T> {
    fn entering(&self) -> Option<usize> {
        let bland = match self.rule {
            PivotRule::Bland => true,
            PivotRule::Dantzig | PivotRule::Lexicographic => false,
            PivotRule::DantzigThenBland => self.degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND,
        };
        let mut best: Option<usize> = None;
        for (j, d) in self.reduced.iter().enumerate() {
            if self.is_artificial[j] || d <= self.tol {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.is_none_or(|b| d > &self.reduced[b]) {
                best = Some(j);
            }
        }
        best
    }

    fn leaving(&self, col: usize) -> Option<usize> {
        let bland = self.rule == PivotRule::Bland
            || (self.rule == PivotRule::DantzigThenBland
                && self.degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND);
        let mut best: Option<(usize, T)> = None;
        let mut tied: Vec<usize> = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            if !self.active[r] || row[col] <= *self.tol {
                continue;
            }
            let ratio = self.rhs[r].clone() / &row[col];
            match &best {
                None => {
                    best = Some((r, ratio));
                    tied = vec![r];
                }
                Some((_, bratio)) => {
                    let diff = ratio.clone() - bratio;
                    if diff < -self.tol.clone() {
                        best = Some((r, ratio));
                        tied = vec![r];
                    } else if diff.abs() <= *self.tol {
                        tied.push(r);
                    }
                }
            }
        }
        if tied.len() <= 1 {
            return tied.first().copied();
        }
        let chosen = match self.rule {
            _ if bland => tied.iter().copied().min_by_key(|&r| self.basis[r]),
            PivotRule::Lexicographic => {
                tied.iter()
                    .copied()
                    .reduce(|a, b| if self.lex_less(b, a, col) { b } else { a })
            }
            // prefer the larger pivot element among tied rows
            _ => tied.iter().copied().reduce(|a, b| {
                if self.rows[b][col] > self.rows[a][col] {
                    b
                } else {
                    a
                }
            }),
        };
        chosen
    }

    /// Lexicographic comparison of rows `a` and `b` of `B⁻¹`, each scaled by its pivot-column entry.
    fn lex_less(&self, a: usize, b: usize, col: usize) -> bool {
        for &h in &self.home_cols {
            let va = self.rows[a][h].clone() / &self.rows[a][col];
            let vb = self.rows[b][h].clone() / &self.rows[b][col];
            let diff = va - vb;
            if diff < -self.tol.clone() {
                return true;
            }
            if diff > *self.tol {
                return false;
            }
        }
        false
    }

    fn pivot(&mut self, r: usize, col: usize) -> Result<(), LpError> {
        if self.pivots >= self.max_pivots {
            return Err(LpError::IterationLimit(self.max_pivots));
        }
        self.pivots += 1;
        let piv = self.rows[r][col].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &piv;
        }
        self.rhs[r] /= &piv;
        if self.rhs[r].is_zero() || self.rhs[r] <= *self.tol {
            self.degenerate_run += 1;
        } else {
            self.degenerate_run = 0;
        }
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || !self.active[i] || self.rows[i][col].is_zero() {
                continue;
            }
            let f = self.rows[i][col].clone();
            for (v, p) in self.rows[i].iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *v -= f.clone() * p;
                }
            }
            self.rows[i][col] = T::zero();
            self.rhs[i] -= f * &prhs;
            if self.rhs[i].is_negative() && -self.rhs[i].clone() <= *self.tol {
                self.rhs[i] = T::zero();
            }
        }
        let f = self.reduced[col].clone();
        if !f.is_zero() {
            for (v, p) in self.reduced.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *v -= f.clone() * p;
                }
            }
            self.value += f * &prhs;
        }
        self.reduced[col] = T::zero();
        self.basis[r] = col;
        Ok(())
    }

    fn run(&mut self) -> Result<Step, LpError> {
        loop {
            let Some(col) = self.entering() else {
                return Ok(Step::Optimal);
            };
            let Some(r) = self.leaving(col) else {
                return Ok(Step::Unbounded);
            };
            self.pivot(r, col)?;
        }
    }

    /// Reduced costs and objective value of `costs` at the current basis.
    fn price(&mut self, costs: &[T]) {
        let mut reduced = costs.to_vec();
        let mut value = T::zero();
        for (r, row) in self.rows.iter().enumerate() {
            if !self.active[r] {
                continue;
            }
            let cb = &costs[self.basis[r]];
            if cb.is_zero() {
                continue;
            }
            for (d, a) in reduced.iter_mut().zip(row) {
                if !a.is_zero() {
                    *d -= cb.clone() * a;
                }
            }
            value += cb.clone() * &self.rhs[r];
        }
        self.reduced = reduced;
        self.value = value;
    }
}

/// Maximizes `c·x` over `x >= 0` subject to `rows`.
pub(super) fn solve<T: LpScalar>(
    c: &[T],
    rows: &[Constraint<T>],
    tol: &T,
    rule: PivotRule,
    max_pivots: usize,
) -> Result<RawSolution<T>, LpError> {
    let n = c.len();
    let m = rows.len();

    // normalize to nonnegative right-hand sides
    let mut flipped = vec![false; m];
    let mut rels = Vec::with_capacity(m);
    for (i, row) in rows.iter().enumerate() {
        let rel = if row.rhs.is_negative() {
            flipped[i] = true;
            match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            }
        } else {
            row.relation
        };
        rels.push(rel);
    }
    let n_slack = rels.iter().filter(|r| **r != Relation::Eq).count();
    let n_art = rels.iter().filter(|r| **r != Relation::Le).count();
    let ncols = n + n_slack + n_art;

    let mut tab_rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut home_col = Vec::with_capacity(m);
    let mut is_artificial = vec![false; ncols];
    let (mut next_slack, mut next_art) = (n, n + n_slack);
    for (i, row) in rows.iter().enumerate() {
        let mut t = vec![T::zero(); ncols];
        for (j, a) in row.coeffs.iter().enumerate() {
            t[j] = if flipped[i] { -a.clone() } else { a.clone() };
        }
        rhs.push(if flipped[i] {
            -row.rhs.clone()
        } else {
            row.rhs.clone()
        });
        match rels[i] {
            Relation::Le => {
                t[next_slack] = T::one();
                basis.push(next_slack);
                home_col.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                t[next_slack] = -T::one();
                next_slack += 1;
                t[next_art] = T::one();
                is_artificial[next_art] = true;
                basis.push(next_art);
                home_col.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                t[next_art] = T::one();
                is_artificial[next_art] = true;
                basis.push(next_art);
                home_col.push(next_art);
                next_art += 1;
            }
        }
        tab_rows.push(t);
    }

    let mut tab = Tableau {
        rows: tab_rows,
        rhs,
        basis,
        active: vec![true; m],
        reduced: Vec::new(),
        value: T::zero(),
        is_artificial,
        home_cols: home_col.clone(),
        tol,
        rule,
        pivots: 0,
        max_pivots,
        degenerate_run: 0,
    };

    if n_art > 0 {
        let phase1: Vec<T> = (0..ncols)
            .map(|j| {
                if tab.is_artificial[j] {
                    -T::one()
                } else {
                    T::zero()
                }
            })
            .collect();
        tab.price(&phase1);
        // artificial columns may not enter, so phase 1 treats them as already-priced basics
        tab.run()?;
        let scale = tab
            .rhs
            .iter()
            .fold(T::one(), |acc, b| if b.abs() > acc { b.abs() } else { acc });
        if tab.value < -(tol.clone() * scale) {
            return Ok(RawSolution {
                status: LpStatus::Infeasible,
                x: vec![T::zero(); n],
                duals: vec![T::zero(); m],
                objective: T::zero(),
                pivots: tab.pivots,
                basis: Vec::new(),
            });
        }
        // drive remaining (zero-valued) artificials out of the basis
        for r in 0..m {
            if !tab.is_artificial[tab.basis[r]] {
                continue;
            }
            let col = (0..ncols).find(|&j| !tab.is_artificial[j] && tab.rows[r][j].abs() > *tol);
            match col {
                Some(j) => tab.pivot(r, j)?,
                None => tab.active[r] = false,
            }
        }
    }

    let mut costs = vec![T::zero(); ncols];
    costs[..n].clone_from_slice(c);
    tab.price(&costs);
    let step = tab.run()?;
    if let Step::Unbounded = step {
        return Ok(RawSolution {
            status: LpStatus::Unbounded,
            x: vec![T::zero(); n],
            duals: vec![T::zero(); m],
            objective: T::zero(),
            pivots: tab.pivots,
            basis: Vec::new(),
        });
    }

    let mut x = vec![T::zero(); n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if tab.active[r] && b < n {
            x[b] = tab.rhs[r].clone();
        }
    }
    let duals = (0..m)
        .map(|i| {
            if !tab.active[i] {
                return T::zero();
            }
            let y = -tab.reduced[home_col[i]].clone();
            if flipped[i] {
                -y
            } else {
                y
            }
        })
        .collect();
    Ok(RawSolution {
        status: LpStatus::Optimal,
        x,
        duals,
        objective: tab.value,
        pivots: tab.pivots,
        basis: (0..m)
            .map(|r| tab.active[r].then_some(tab.basis[r]))
            .collect(),
    })
}
