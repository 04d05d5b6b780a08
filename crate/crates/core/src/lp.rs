//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! Variables are nonnegative unless marked free. Every row carries an
//! artificial column during phase 1, so both optimal duals and Farkas
//! certificates can be read off reduced costs.

use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::rational::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, Default)]
pub struct Lp {
    pub n: usize,
    pub rows: Vec<(Vec<Q>, Rel, Q)>,
    /// Maximized.
    pub objective: Vec<Q>,
    pub free: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpResult {
    Optimal { x: Vec<Q>, value: Q, duals: Vec<Q> },
    /// `y` with `y^T A >= 0` on nonnegative columns, `= 0` on free columns,
    /// `y_i >= 0` on `<=` rows, `y_i <= 0` on `>=` rows, and `y^T b < 0`.
    Infeasible { farkas: Vec<Q> },
    Unbounded,
}

impl Lp {
    pub fn new(n: usize) -> Self {
        Lp { n, rows: Vec::new(), objective: alloc::vec![Q::zero(); n], free: alloc::vec![false; n] }
    }

    pub fn row(&mut self, a: Vec<Q>, rel: Rel, b: Q) {
        assert_eq!(a.len(), self.n);
        self.rows.push((a, rel, b));
    }

    pub fn solve(&self) -> LpResult {
        // Column layout: split variables, then one slack per inequality row,
        // then one artificial per row.
        let m = self.rows.len();
        let mut col_of = Vec::with_capacity(self.n);
        let mut ncols = 0usize;
        for j in 0..self.n {
            col_of.push(ncols);
            ncols += if self.free[j] { 2 } else { 1 };
        }
        let mut slack_of = alloc::vec![None; m];
        for (i, (_, rel, _)) in self.rows.iter().enumerate() {
            if *rel != Rel::Eq {
                slack_of[i] = Some(ncols);
                ncols += 1;
            }
        }
        let art0 = ncols;
        ncols += m;
        let width = ncols + 1;
        let mut t = alloc::vec![alloc::vec![Q::zero(); width]; m];
        let mut sign = alloc::vec![Q::one(); m];
        for (i, (a, rel, b)) in self.rows.iter().enumerate() {
            for j in 0..self.n {
                t[i][col_of[j]] = a[j].clone();
                if self.free[j] {
                    t[i][col_of[j] + 1] = -a[j].clone();
                }
            }
            if let Some(s) = slack_of[i] {
                t[i][s] = if *rel == Rel::Le { Q::one() } else { -Q::one() };
            }
            t[i][ncols] = b.clone();
            if b.is_negative() {
                sign[i] = -Q::one();
                for x in t[i].iter_mut() {
                    *x = -x.clone();
                }
            }
            t[i][art0 + i] = Q::one();
        }
        let mut basis: Vec<usize> = (art0..art0 + m).collect();

        // Phase 1: maximize -sum(artificials).
        let mut cost1 = alloc::vec![Q::zero(); ncols];
        for c in cost1.iter_mut().skip(art0) {
            *c = -Q::one();
        }
        let allowed1 = |_: usize| true;
        if simplex(&mut t, &mut basis, &cost1, &allowed1).is_err() {
            unreachable!("phase 1 is bounded");
        }
        let d1 = reduced_costs(&t, &basis, &cost1);
        let infeas: Q = basis.iter().enumerate().filter(|(_, &b)| b >= art0).map(|(i, _)| t[i][ncols].clone()).sum();
        if infeas.is_positive() {
            // y_i = -1 - d_{art_i}; undo row sign flips.
            let farkas = (0..m).map(|i| (-Q::one() - &d1[art0 + i]) * &sign[i]).collect();
            return LpResult::Infeasible { farkas };
        }
        // Drive zero-level artificials out where possible.
        for i in 0..m {
            if basis[i] >= art0 {
                if let Some(j) = (0..art0).find(|&j| !t[i][j].is_zero()) {
                    pivot(&mut t, &mut basis, i, j);
                }
            }
        }

        // Phase 2.
        let mut cost2 = alloc::vec![Q::zero(); ncols];
        for j in 0..self.n {
            cost2[col_of[j]] = self.objective[j].clone();
            if self.free[j] {
                cost2[col_of[j] + 1] = -self.objective[j].clone();
            }
        }
        let allowed2 = |j: usize| j < art0;
        if simplex(&mut t, &mut basis, &cost2, &allowed2).is_err() {
            return LpResult::Unbounded;
        }
        let d2 = reduced_costs(&t, &basis, &cost2);
        let mut xs = alloc::vec![Q::zero(); ncols];
        for (i, &b) in basis.iter().enumerate() {
            xs[b] = t[i][ncols].clone();
        }
        let x: Vec<Q> = (0..self.n)
            .map(|j| {
                let v = xs[col_of[j]].clone();
                if self.free[j] {
                    v - &xs[col_of[j] + 1]
                } else {
                    v
                }
            })
            .collect();
        let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        let duals = (0..m).map(|i| -&d2[art0 + i] * &sign[i]).collect();
        LpResult::Optimal { x, value, duals }
    }
}

fn reduced_costs(t: &[Vec<Q>], basis: &[usize], cost: &[Q]) -> Vec<Q> {
    let mut d = cost.to_vec();
    for (i, &b) in basis.iter().enumerate() {
        if cost[b].is_zero() {
            continue;
        }
        for (j, dj) in d.iter_mut().enumerate() {
            if !t[i][j].is_zero() {
                *dj -= &cost[b] * &t[i][j];
            }
        }
    }
    d
}

fn pivot(t: &mut [Vec<Q>], basis: &mut [usize], r: usize, c: usize) {
    let p = t[r][c].clone();
    for x in t[r].iter_mut() {
        if !x.is_zero() {
            *x /= &p;
        }
    }
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r || row[c].is_zero() {
            continue;
        }
        let f = row[c].clone();
        for (x, y) in row.iter_mut().zip(&prow) {
            if !y.is_zero() {
                *x -= &f * y;
            }
        }
    }
    basis[r] = c;
}

/// Maximizes `cost` from a feasible basis; `Err` when unbounded.
fn simplex(t: &mut [Vec<Q>], basis: &mut [usize], cost: &[Q], allowed: &dyn Fn(usize) -> bool) -> Result<(), ()> {
    let ncols = cost.len();
    loop {
        let d = reduced_costs(t, basis, cost);
        let Some(enter) = (0..ncols).find(|&j| allowed(j) && d[j].is_positive() && !basis.contains(&j)) else {
            return Ok(());
        };
        let mut best: Option<(usize, Q)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[enter].is_positive() {
                let ratio = &row[ncols] / &row[enter];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && basis[i] < basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = best else {
            return Err(());
        };
        pivot(t, basis, r, enter);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn small_optimum() {
        // max x + y, x + 2y <= 4, 3x + y <= 6
        let mut lp = Lp::new(2);
        lp.objective = alloc::vec![qi(1), qi(1)];
        lp.row(alloc::vec![qi(1), qi(2)], Rel::Le, qi(4));
        lp.row(alloc::vec![qi(3), qi(1)], Rel::Le, qi(6));
        match lp.solve() {
            LpResult::Optimal { x, value, duals } => {
                assert_eq!(x, alloc::vec![q(8, 5), q(6, 5)]);
                assert_eq!(value, q(14, 5));
                // strong duality
                assert_eq!(&duals[0] * qi(4) + &duals[1] * qi(6), q(14, 5));
            }
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn farkas_certificate() {
        // x + y = 1, x + y = 2
        let mut lp = Lp::new(2);
        lp.row(alloc::vec![qi(1), qi(1)], Rel::Eq, qi(1));
        lp.row(alloc::vec![qi(1), qi(1)], Rel::Eq, qi(2));
        let LpResult::Infeasible { farkas } = lp.solve() else { panic!() };
        let ya: Vec<Q> = (0..2).map(|j| farkas[0].clone() * lp.rows[0].0[j].clone() + &farkas[1] * &lp.rows[1].0[j]).collect();
        assert!(ya.iter().all(|v| !v.is_negative()));
        assert!((&farkas[0] * qi(1) + &farkas[1] * qi(2)).is_negative());
    }

    #[test]
    fn free_and_unbounded() {
        let mut lp = Lp::new(1);
        lp.free[0] = true;
        lp.objective = alloc::vec![qi(-1)];
        lp.row(alloc::vec![qi(1)], Rel::Ge, qi(-3));
        assert!(matches!(lp.solve(), LpResult::Optimal { ref x, .. } if x[0] == qi(-3)));
        let mut lp = Lp::new(1);
        lp.objective = alloc::vec![qi(1)];
        lp.row(alloc::vec![qi(-1)], Rel::Le, qi(1));
        assert_eq!(lp.solve(), LpResult::Unbounded);
    }
}
