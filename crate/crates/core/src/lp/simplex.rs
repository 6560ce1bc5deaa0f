//! Dense revised primal simplex for `min cᵀx, Ax = b` with columns added on the fly. Columns are
//! nonnegative unless marked free; a free column never leaves the basis once it enters.
//!
//! The basis inverse is kept explicitly and updated by elementary row operations; it is
//! rebuilt from scratch every [`SimplexOptions::refactor_every`] pivots. Pricing is Devex
//! with a switch to Bland's rule after a run of degenerate pivots.

use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Reduced costs above `-opt_tol` count as optimal.
    pub opt_tol: f64,
    /// Slack allowed in the Harris ratio test.
    pub feas_tol: f64,
    /// Smallest acceptable pivot element.
    pub pivot_tol: f64,
    pub refactor_every: usize,
    pub degenerate_streak_for_bland: usize,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            opt_tol: 1e-12,
            feas_tol: 1e-12,
            pivot_tol: 1e-9,
            refactor_every: 64,
            degenerate_streak_for_bland: 50,
            max_iterations: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Unbounded,
    IterationLimit,
    Singular,
}

#[derive(Debug, Clone)]
pub struct RevisedSimplex {
    m: usize,
    cols: Vec<Vec<f64>>,
    cost: Vec<f64>,
    free: Vec<bool>,
    b: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    x: Vec<f64>,
    since_refactor: usize,
    iterations: usize,
    bland_iterations: usize,
    rc: Vec<f64>,
    devex: Vec<f64>,
    opts: SimplexOptions,
}

impl RevisedSimplex {
    /// `basis` must index `m` columns forming a nonsingular, primal feasible basis.
    pub fn new(
        b: Vec<f64>,
        cols: Vec<Vec<f64>>,
        cost: Vec<f64>,
        basis: Vec<usize>,
        opts: SimplexOptions,
    ) -> Option<Self> {
        let m = b.len();
        assert_eq!(basis.len(), m, "basis size must equal row count");
        assert_eq!(cols.len(), cost.len());
        let free = vec![false; cols.len()];
        let mut is_basic = vec![false; cols.len()];
        for &j in &basis {
            is_basic[j] = true;
        }
        let mut s = Self {
            m,
            cols,
            cost,
            free,
            b,
            basis,
            is_basic,
            binv: vec![0.0; m * m],
            x: vec![0.0; m],
            since_refactor: 0,
            iterations: 0,
            bland_iterations: 0,
            rc: Vec::new(),
            devex: Vec::new(),
            opts,
        };
        if s.refactor() {
            Some(s)
        } else {
            None
        }
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn num_columns(&self) -> usize {
        self.cols.len()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Iterations taken under Bland's rule.
    pub fn bland_iterations(&self) -> usize {
        self.bland_iterations
    }

    pub fn add_column(&mut self, col: Vec<f64>, cost: f64) -> usize {
        assert_eq!(col.len(), self.m);
        self.cols.push(col);
        self.cost.push(cost);
        self.free.push(false);
        self.is_basic.push(false);
        self.cols.len() - 1
    }

    /// Reduced costs from the last solve.
    pub fn reduced_costs(&self) -> &[f64] {
        &self.rc
    }

    pub fn is_basic(&self, j: usize) -> bool {
        self.is_basic[j]
    }

    /// Drops nonbasic columns at or after `from` for which `drop(j)` holds; returns the
    /// surviving old indices in order.
    pub fn remove_nonbasic_columns(&mut self, from: usize, drop: impl Fn(usize) -> bool) -> Vec<usize> {
        let n = self.cols.len();
        let keep: Vec<bool> = (0..n).map(|j| j < from || self.is_basic[j] || !drop(j)).collect();
        let mut new_index = vec![usize::MAX; n];
        let mut next = 0;
        for j in 0..n {
            if keep[j] {
                new_index[j] = next;
                next += 1;
            }
        }
        let mut k = 0;
        self.cols.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        let filt = |v: &mut Vec<f64>| {
            let mut k = 0;
            v.retain(|_| {
                k += 1;
                keep[k - 1]
            });
        };
        filt(&mut self.cost);
        filt(&mut self.rc);
        filt(&mut self.devex);
        let mut k = 0;
        self.free.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        let mut k = 0;
        self.is_basic.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        for b in &mut self.basis {
            *b = new_index[*b];
        }
        (from..n).filter(|&j| keep[j]).collect()
    }

    /// Lets column `j` take either sign.
    pub fn set_free(&mut self, j: usize) {
        self.free[j] = true;
    }

    fn refactor(&mut self) -> bool {
        let m = self.m;
        let bmat = DMatrix::from_fn(m, m, |r, c| self.cols[self.basis[c]][r]);
        let Some(inv) = bmat.try_inverse() else {
            return false;
        };
        for r in 0..m {
            for c in 0..m {
                self.binv[r * m + c] = inv[(r, c)];
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            self.x[r] = row.iter().zip(&self.b).map(|(a, b)| a * b).sum();
        }
        self.since_refactor = 0;
        true
    }

    /// Simplex multipliers `π = c_Bᵀ B⁻¹`.
    pub fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            let c = self.cost[j];
            if c != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (p, v) in pi.iter_mut().zip(row) {
                    *p += c * v;
                }
            }
        }
        pi
    }

    /// Full primal vector.
    pub fn primal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols.len()];
        for (r, &j) in self.basis.iter().enumerate() {
            out[j] = self.x[r];
        }
        out
    }

    pub fn objective(&self) -> f64 {
        self.basis.iter().zip(&self.x).map(|(&j, x)| self.cost[j] * x).sum()
    }

    fn recompute_reduced_costs(&mut self) {
        let pi = self.duals();
        let nz: Vec<(usize, f64)> = pi.iter().enumerate().filter(|(_, &p)| p != 0.0).map(|(i, &p)| (i, p)).collect();
        let n = self.cols.len();
        self.rc.resize(n, 0.0);
        self.devex.resize(n, 1.0);
        for j in 0..n {
            self.rc[j] = if self.is_basic[j] {
                0.0
            } else {
                let col = &self.cols[j];
                self.cost[j] - nz.iter().map(|&(i, p)| col[i] * p).sum::<f64>()
            };
        }
    }

    /// Entering column and direction: Devex pricing, or the lowest improving index under Bland.
    fn price(&self, bland: bool, rejected: &[usize]) -> Option<(usize, f64)> {
        let tol = self.opts.opt_tol;
        let mut entering = None;
        let mut best = 0.0;
        for j in 0..self.cols.len() {
            if self.is_basic[j] {
                continue;
            }
            let rc = self.rc[j];
            let (viol, dir) = if rc < -tol {
                (-rc, 1.0)
            } else if self.free[j] && rc > tol {
                (rc, -1.0)
            } else {
                continue;
            };
            if rejected.contains(&j) {
                continue;
            }
            if bland {
                return Some((j, dir));
            }
            let score = viol * viol / self.devex[j];
            if score > best {
                best = score;
                entering = Some((j, dir));
            }
        }
        entering
    }

    pub fn solve(&mut self) -> SimplexStatus {
        let m = self.m;
        self.recompute_reduced_costs();
        let mut fresh = self.since_refactor == 0;
        let mut degenerate_streak = 0usize;
        let mut w = vec![0.0; m];
        let mut d = vec![0.0; m];
        let mut rho = vec![0.0; m];
        // Columns whose pivot candidates are all too small to trust; cleared after each pivot.
        let mut rejected: Vec<usize> = Vec::new();
        loop {
            if self.iterations >= self.opts.max_iterations {
                return SimplexStatus::IterationLimit;
            }
            if self.since_refactor >= self.opts.refactor_every {
                if !self.refactor() {
                    return SimplexStatus::Singular;
                }
                self.recompute_reduced_costs();
                fresh = true;
            }
            let bland = degenerate_streak >= self.opts.degenerate_streak_for_bland;
            let Some((q, dir)) = self.price(bland, &rejected) else {
                if !fresh {
                    // Confirm optimality, and retry rejected columns, with a fresh inverse.
                    if !self.refactor() {
                        return SimplexStatus::Singular;
                    }
                    self.recompute_reduced_costs();
                    fresh = true;
                    rejected.clear();
                    continue;
                }
                return SimplexStatus::Optimal;
            };

            for (r, wr) in w.iter_mut().enumerate() {
                let row = &self.binv[r * m..(r + 1) * m];
                *wr = row.iter().zip(&self.cols[q]).map(|(a, b)| a * b).sum::<f64>();
            }
            for (dr, wr) in d.iter_mut().zip(&w) {
                *dr = dir * wr;
            }

            let eligible = |r: usize| d[r] > self.opts.pivot_tol && !self.free[self.basis[r]];
            let mut theta_max = f64::INFINITY;
            for r in 0..m {
                if eligible(r) {
                    theta_max = theta_max.min((self.x[r].max(0.0) + self.opts.feas_tol) / d[r]);
                }
            }
            if theta_max.is_infinite() {
                if d.iter().zip(&self.basis).all(|(&x, &j)| x <= 1e-14 || self.free[j]) {
                    return SimplexStatus::Unbounded;
                }
                rejected.push(q);
                continue;
            }
            let mut leave: Option<usize> = None;
            for r in 0..m {
                if eligible(r) && self.x[r].max(0.0) / d[r] <= theta_max {
                    leave = match leave {
                        None => Some(r),
                        Some(l) if bland => Some(if self.basis[r] < self.basis[l] { r } else { l }),
                        Some(l) => Some(if d[r] > d[l] { r } else { l }),
                    };
                }
            }
            let r = leave.expect("theta_max is finite, so some row qualifies");
            let theta = self.x[r].max(0.0) / d[r];

            if bland {
                self.bland_iterations += 1;
            }
            if theta * d[r] <= 1e-14 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }

            for i in 0..m {
                self.x[i] -= theta * d[i];
            }
            self.x[r] = dir * theta;

            // Pivot row of B⁻¹A updates reduced costs and Devex weights.
            rho.copy_from_slice(&self.binv[r * m..(r + 1) * m]);
            let piv = w[r];
            let rc_q = self.rc[q];
            let w_q = self.devex[q];
            let leaving = self.basis[r];
            let mut max_weight: f64 = 0.0;
            for j in 0..self.cols.len() {
                if self.is_basic[j] || j == q {
                    continue;
                }
                let alpha: f64 = rho.iter().zip(&self.cols[j]).map(|(a, b)| a * b).sum();
                if alpha != 0.0 {
                    let ratio = alpha / piv;
                    self.rc[j] -= rc_q * ratio;
                    self.devex[j] = self.devex[j].max(ratio * ratio * w_q);
                    max_weight = max_weight.max(self.devex[j]);
                }
            }
            self.rc[leaving] = -rc_q / piv;
            self.devex[leaving] = (w_q / (piv * piv)).max(1.0);
            self.rc[q] = 0.0;
            if max_weight > 1e8 {
                self.devex.iter_mut().for_each(|x| *x = 1.0);
            }

            let (before, rest) = self.binv.split_at_mut(r * m);
            let (prow, after) = rest.split_at_mut(m);
            for v in prow.iter_mut() {
                *v /= piv;
            }
            for (i, chunk) in before.chunks_mut(m).enumerate() {
                let f = w[i];
                if f != 0.0 {
                    for (v, p) in chunk.iter_mut().zip(prow.iter()) {
                        *v -= f * p;
                    }
                }
            }
            for (k, chunk) in after.chunks_mut(m).enumerate() {
                let f = w[r + 1 + k];
                if f != 0.0 {
                    for (v, p) in chunk.iter_mut().zip(prow.iter()) {
                        *v -= f * p;
                    }
                }
            }

            rejected.clear();
            self.is_basic[leaving] = false;
            self.is_basic[q] = true;
            self.basis[r] = q;
            self.since_refactor += 1;
            self.iterations += 1;
            fresh = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min -x1 - x2 s.t. x1 + 2x2 + s1 = 4, 3x1 + x2 + s2 = 6.
    #[test]
    fn textbook_problem() {
        let cols = vec![vec![1.0, 3.0], vec![2.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let cost = vec![-1.0, -1.0, 0.0, 0.0];
        let mut s = RevisedSimplex::new(vec![4.0, 6.0], cols, cost, vec![2, 3], SimplexOptions::default()).unwrap();
        assert_eq!(s.solve(), SimplexStatus::Optimal);
        let x = s.primal();
        assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
        assert!((s.objective() + 2.8).abs() < 1e-12);
        let pi = s.duals();
        // Dual objective equals primal objective.
        assert!((pi[0] * 4.0 + pi[1] * 6.0 + 2.8).abs() < 1e-12);
    }

    #[test]
    fn detects_unboundedness() {
        // min -x1 s.t. x1 - x2 + s = 1.
        let cols = vec![vec![1.0], vec![-1.0], vec![1.0]];
        let mut s = RevisedSimplex::new(vec![1.0], cols, vec![-1.0, 0.0, 0.0], vec![2], SimplexOptions::default()).unwrap();
        assert_eq!(s.solve(), SimplexStatus::Unbounded);
    }

    #[test]
    fn columns_can_be_added_after_solving() {
        let cols = vec![vec![1.0, 3.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let cost = vec![-1.0, 0.0, 0.0];
        let mut s = RevisedSimplex::new(vec![4.0, 6.0], cols, cost, vec![1, 2], SimplexOptions::default()).unwrap();
        assert_eq!(s.solve(), SimplexStatus::Optimal);
        assert!((s.objective() + 2.0).abs() < 1e-12);
        s.add_column(vec![2.0, 1.0], -1.0);
        assert_eq!(s.solve(), SimplexStatus::Optimal);
        assert!((s.objective() + 2.8).abs() < 1e-12);
    }
}
