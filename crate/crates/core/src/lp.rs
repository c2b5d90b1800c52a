//! Exact-rational linear programming.
//!
//! A dense two-phase simplex over [`Rat`] with Bland's rule. Variables are
//! implicitly nonnegative. Phase one is solved once per [`FeasibleRegion`];
//! any number of objectives can then be maximized from that basis.

use crate::rational::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub relation: Relation,
    pub rhs: Rat,
}

impl Constraint {
    pub fn new(coeffs: Vec<Rat>, relation: Relation, rhs: Rat) -> Self {
        Constraint {
            coeffs,
            relation,
            rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: Rat, point: Vec<Rat> },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
struct Tableau {
    /// Constraint rows; the last entry of each row is the right-hand side.
    rows: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &Rat {
        &self.rows[r][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize, objective: Option<&mut Vec<Rat>>) {
        let inv = Rat::one() / &self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v = &*v * &inv;
            }
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &(&factor * p);
                }
            }
        }
        if let Some(obj) = objective {
            if !obj[c].is_zero() {
                let factor = obj[c].clone();
                for (v, p) in obj.iter_mut().zip(&pivot_row) {
                    if !p.is_zero() {
                        *v -= &(&factor * p);
                    }
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes over columns `< active`, with `reduced` holding reduced
    /// costs (length `cols + 1`, last entry = minus the current value).
    /// Bland's rule: lowest-index entering column, lowest-index leaving
    /// basic variable on ties.
    fn run(&mut self, reduced: &mut Vec<Rat>, active: usize) -> bool {
        loop {
            let Some(enter) = (0..active).find(|&j| reduced[j].is_positive()) else {
                return true;
            };
            let mut leave: Option<(usize, Rat)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(r) / a;
                let better = match &leave {
                    None => true,
                    Some((best_r, best)) => {
                        ratio < *best || (ratio == *best && self.basis[r] < self.basis[*best_r])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return false;
            };
            self.pivot(r, enter, Some(reduced));
        }
    }
}

/// The feasible polytope of a constraint system, with a feasible basis.
#[derive(Debug, Clone)]
pub struct FeasibleRegion {
    tableau: Tableau,
    vars: usize,
}

impl FeasibleRegion {
    /// Runs phase one. Returns `None` when the constraints are infeasible.
    pub fn new(vars: usize, constraints: &[Constraint]) -> Option<FeasibleRegion> {
        let m = constraints.len();
        let slack_count = constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let art_start = vars + slack_count;
        // Rows are normalized to a nonnegative right-hand side; every row then
        // gets an artificial unless its slack can start in the basis.
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut needs_artificial = Vec::with_capacity(m);
        let mut slack = vars;
        for c in constraints {
            assert_eq!(c.coeffs.len(), vars, "constraint width mismatch");
            let flip = c.rhs.is_negative();
            let sign = |v: &Rat| if flip { -v } else { v.clone() };
            let mut row: Vec<Rat> = c.coeffs.iter().map(sign).collect();
            row.resize(art_start, Rat::zero());
            let mut slack_basic = None;
            match c.relation {
                Relation::Eq => {}
                rel => {
                    let coef = match (rel, flip) {
                        (Relation::Le, false) | (Relation::Ge, true) => Rat::one(),
                        _ => -Rat::one(),
                    };
                    if coef.is_one() {
                        slack_basic = Some(slack);
                    }
                    row[slack] = coef;
                    slack += 1;
                }
            }
            row.push(sign(&c.rhs));
            needs_artificial.push(slack_basic.is_none());
            basis.push(slack_basic.unwrap_or(usize::MAX));
            rows.push(row);
        }
        let art_count = needs_artificial.iter().filter(|&&b| b).count();
        let cols = art_start + art_count;
        let mut next_art = art_start;
        for (r, row) in rows.iter_mut().enumerate() {
            let rhs = row.pop().expect("rhs");
            row.resize(cols, Rat::zero());
            if needs_artificial[r] {
                row[next_art] = Rat::one();
                basis[r] = next_art;
                next_art += 1;
            }
            row.push(rhs);
        }
        let mut tableau = Tableau { rows, basis, cols };

        if art_count > 0 {
            // maximize -(sum of artificials)
            let mut reduced = vec![Rat::zero(); cols + 1];
            for (r, row) in tableau.rows.iter().enumerate() {
                if tableau.basis[r] >= art_start {
                    for (j, v) in row.iter().enumerate() {
                        if j < art_start || j == cols {
                            reduced[j] += v;
                        }
                    }
                }
            }
            let bounded = tableau.run(&mut reduced, cols);
            debug_assert!(bounded, "phase one is bounded");
            if reduced[cols].is_positive() {
                return None;
            }
            // Drive remaining (zero-valued) artificials out of the basis.
            let mut r = 0;
            while r < tableau.rows.len() {
                if tableau.basis[r] >= art_start {
                    match (0..art_start).find(|&j| !tableau.rows[r][j].is_zero()) {
                        Some(j) => {
                            tableau.pivot(r, j, None);
                            r += 1;
                        }
                        None => {
                            tableau.rows.remove(r);
                            tableau.basis.remove(r);
                        }
                    }
                } else {
                    r += 1;
                }
            }
            for row in tableau.rows.iter_mut() {
                let rhs = row.pop().expect("rhs");
                row.truncate(art_start);
                row.push(rhs);
            }
            tableau.cols = art_start;
        }
        Some(FeasibleRegion { tableau, vars })
    }

    /// Maximizes `objective` (one coefficient per variable) over the region.
    pub fn maximize(&self, objective: &[Rat]) -> LpOutcome {
        assert_eq!(objective.len(), self.vars, "objective width mismatch");
        let mut t = self.tableau.clone();
        let cols = t.cols;
        let cost = |j: usize| -> Rat {
            if j < self.vars {
                objective[j].clone()
            } else {
                Rat::zero()
            }
        };
        let mut reduced: Vec<Rat> = (0..cols).map(cost).collect();
        reduced.push(Rat::zero());
        for (r, row) in t.rows.iter().enumerate() {
            let cb = cost(t.basis[r]);
            if cb.is_zero() {
                continue;
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    reduced[j] -= &(&cb * v);
                }
            }
        }
        if !t.run(&mut reduced, cols) {
            return LpOutcome::Unbounded;
        }
        let mut point = vec![Rat::zero(); self.vars];
        for (r, &b) in t.basis.iter().enumerate() {
            if b < self.vars {
                point[b] = t.rhs(r).clone();
            }
        }
        LpOutcome::Optimal {
            value: -reduced[cols].clone(),
            point,
        }
    }

    /// Some feasible point (the phase-one vertex).
    pub fn vertex(&self) -> Vec<Rat> {
        let mut point = vec![Rat::zero(); self.vars];
        for (r, &b) in self.tableau.basis.iter().enumerate() {
            if b < self.vars {
                point[b] = self.tableau.rhs(r).clone();
            }
        }
        point
    }
}

/// Maximizes `objective` subject to `constraints`, all variables `>= 0`.
pub fn solve_lp(objective: &[Rat], constraints: &[Constraint]) -> LpOutcome {
    match FeasibleRegion::new(objective.len(), constraints) {
        None => LpOutcome::Infeasible,
        Some(region) => region.maximize(objective),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    fn simplex_constraint(n: usize) -> Constraint {
        Constraint::new(vec![Rat::one(); n], Relation::Eq, Rat::one())
    }

    fn value(outcome: LpOutcome) -> Rat {
        match outcome {
            LpOutcome::Optimal { value, .. } => value,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn probability_with_upper_bound() {
        let cons = vec![
            simplex_constraint(2),
            Constraint::new(vec![r(1, 1), r(0, 1)], Relation::Le, r(1, 2)),
        ];
        assert_eq!(value(solve_lp(&[r(1, 1), r(0, 1)], &cons)), r(1, 2));
    }

    #[test]
    fn empty_polytope_is_infeasible() {
        let cons = vec![
            simplex_constraint(2),
            Constraint::new(vec![r(1, 1), r(0, 1)], Relation::Le, r(1, 4)),
            Constraint::new(vec![r(0, 1), r(1, 1)], Relation::Le, r(1, 4)),
        ];
        assert_eq!(solve_lp(&[r(1, 1), r(0, 1)], &cons), LpOutcome::Infeasible);
    }

    #[test]
    fn three_atom_bounds() {
        let unit = |i: usize| {
            let mut v = vec![Rat::zero(); 3];
            v[i] = Rat::one();
            v
        };
        let cons = vec![
            simplex_constraint(3),
            Constraint::new(unit(0), Relation::Le, r(1, 3)),
            Constraint::new(unit(1), Relation::Le, r(1, 3)),
            Constraint::new(unit(2), Relation::Le, r(1, 2)),
        ];
        let out = solve_lp(&[r(1, 1), r(1, 1), r(0, 1)], &cons);
        assert_eq!(value(out), r(2, 3));
    }

    #[test]
    fn unbounded_is_reported() {
        let cons = vec![Constraint::new(vec![r(1, 1), r(-1, 1)], Relation::Le, r(1, 1))];
        assert_eq!(solve_lp(&[r(1, 1), r(0, 1)], &cons), LpOutcome::Unbounded);
    }

    #[test]
    fn ge_constraints_and_negative_rhs() {
        // x + y >= 2, -x >= -3 (x <= 3), maximize -y  => y = 0 with x in [2,3]
        let cons = vec![
            Constraint::new(vec![r(1, 1), r(1, 1)], Relation::Ge, r(2, 1)),
            Constraint::new(vec![r(-1, 1), r(0, 1)], Relation::Ge, r(-3, 1)),
        ];
        let out = solve_lp(&[r(0, 1), r(-1, 1)], &cons);
        match out {
            LpOutcome::Optimal { value, point } => {
                assert_eq!(value, Rat::zero());
                assert!(point[0] >= r(2, 1) && point[0] <= r(3, 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let cons = vec![simplex_constraint(2), simplex_constraint(2)];
        assert_eq!(value(solve_lp(&[r(1, 1), r(2, 1)], &cons)), r(2, 1));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling example (maximization form).
        let cons = vec![
            Constraint::new(vec![r(1, 4), r(-8, 1), r(-1, 1), r(9, 1)], Relation::Le, r(0, 1)),
            Constraint::new(vec![r(1, 2), r(-12, 1), r(-1, 2), r(3, 1)], Relation::Le, r(0, 1)),
            Constraint::new(vec![r(0, 1), r(0, 1), r(1, 1), r(0, 1)], Relation::Le, r(1, 1)),
        ];
        let out = solve_lp(&[r(3, 4), r(-20, 1), r(1, 2), r(-6, 1)], &cons);
        assert_eq!(value(out), r(5, 4));
    }
}
