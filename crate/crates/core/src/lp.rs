//! Dense two-phase simplex for the small linear programs behind polyhedral
//! projections. Minimizes `cᵀx` over rows `aᵀx {≤,≥,=} b` with each variable
//! either free or nonnegative.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-10;
const COST_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Free,
    NonNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    bounds: Vec<Bound>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LinearProgram {
    /// `n_vars` free variables with a zero objective.
    pub fn new(n_vars: usize) -> Self {
        Self {
            objective: vec![0.0; n_vars],
            bounds: vec![Bound::Free; n_vars],
            rows: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_cost(&mut self, var: usize, c: f64) -> &mut Self {
        self.objective[var] = c;
        self
    }

    pub fn set_bound(&mut self, var: usize, b: Bound) -> &mut Self {
        self.bounds[var] = b;
        self
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.n_vars(), "constraint width");
        self.rows.push((coeffs, rel, rhs));
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).run(self)
    }
}

/// Column bookkeeping: which structural variable a tableau column belongs to.
#[derive(Debug, Clone, Copy)]
enum Col {
    Pos(usize),
    Neg(usize),
    Slack,
    Artificial,
}

struct Tableau {
    m: usize,
    width: usize,
    a: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    cols: Vec<Col>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let mut cols = Vec::new();
        for (j, b) in lp.bounds.iter().enumerate() {
            cols.push(Col::Pos(j));
            if *b == Bound::Free {
                cols.push(Col::Neg(j));
            }
        }
        let structural = cols.len();
        // Normalize right-hand sides to be nonnegative.
        let rows: Vec<(Vec<f64>, Relation, f64)> = lp
            .rows
            .iter()
            .map(|(c, rel, b)| {
                if *b < 0.0 {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.iter().map(|v| -v).collect(), flipped, -b)
                } else {
                    (c.clone(), *rel, *b)
                }
            })
            .collect();
        let m = rows.len();
        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let ncols = structural + n_slack + n_art;
        let width = ncols + 1;
        let mut a = vec![0.0; m * width];
        let mut basis = vec![0; m];
        cols.extend(std::iter::repeat_n(Col::Slack, n_slack));
        cols.extend(std::iter::repeat_n(Col::Artificial, n_art));

        let mut slack = structural;
        let mut art = structural + n_slack;
        for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
            let row = &mut a[i * width..(i + 1) * width];
            let mut c = 0;
            for (j, b) in lp.bounds.iter().enumerate() {
                row[c] = coeffs[j];
                c += 1;
                if *b == Bound::Free {
                    row[c] = -coeffs[j];
                    c += 1;
                }
            }
            row[ncols] = *rhs;
            match rel {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        Tableau {
            m,
            width,
            a,
            cost: vec![0.0; width],
            basis,
            cols,
        }
    }

    fn ncols(&self) -> usize {
        self.width - 1
    }

    fn is_artificial(&self, j: usize) -> bool {
        matches!(self.cols[j], Col::Artificial)
    }

    /// Loads `c` as the cost row and prices out the current basis.
    fn set_cost(&mut self, c: &[f64]) {
        self.cost.iter_mut().for_each(|v| *v = 0.0);
        self.cost[..c.len()].copy_from_slice(c);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..self.width {
                    self.cost[j] -= cb * self.a[i * self.width + j];
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width;
        let piv = self.a[r * w + e];
        for j in 0..w {
            self.a[r * w + j] /= piv;
        }
        let prow: Vec<f64> = self.a[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * w + e];
            if f != 0.0 {
                let row = &mut self.a[i * w..(i + 1) * w];
                for j in 0..w {
                    row[j] -= f * prow[j];
                }
                row[e] = 0.0;
            }
        }
        let f = self.cost[e];
        if f != 0.0 {
            for (c, pv) in self.cost.iter_mut().zip(&prow[..w]) {
                *c -= f * pv;
            }
            self.cost[e] = 0.0;
        }
        self.basis[r] = e;
    }

    /// Runs simplex iterations on the loaded cost row.
    fn optimize(&mut self, allow_artificial: bool, max_iter: usize) -> Result<usize> {
        let w = self.width;
        let mut degenerate_run = 0usize;
        for it in 0..max_iter {
            let bland = degenerate_run > 50;
            let mut enter = None;
            let mut best = -COST_EPS;
            for j in 0..self.ncols() {
                if !allow_artificial && self.is_artificial(j) {
                    continue;
                }
                let c = self.cost[j];
                if c < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = c;
                }
            }
            let Some(e) = enter else {
                return Ok(it);
            };
            let mut leave: Option<usize> = None;
            let mut ratio = f64::INFINITY;
            for i in 0..self.m {
                let a = self.a[i * w + e];
                if a > PIVOT_EPS {
                    let t = self.a[i * w + w - 1] / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            t < ratio - 1e-12
                                || (t <= ratio + 1e-12 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        ratio = t;
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else {
                return Err(Error::Lp("problem is unbounded".into()));
            };
            degenerate_run = if ratio <= 1e-12 {
                degenerate_run + 1
            } else {
                0
            };
            self.pivot(r, e);
        }
        Err(Error::Lp(format!("iteration limit {max_iter} reached")))
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let max_iter = 50 * (self.m + self.ncols()) + 1000;
        let n = self.ncols();

        let phase1: Vec<f64> = (0..n)
            .map(|j| if self.is_artificial(j) { 1.0 } else { 0.0 })
            .collect();
        self.set_cost(&phase1);
        let it1 = self.optimize(true, max_iter)?;
        let infeasibility = -self.cost[self.width - 1];
        let rhs_scale = 1.0 + lp.rows.iter().map(|r| r.2.abs()).fold(0.0f64, f64::max);
        if infeasibility > FEAS_EPS * rhs_scale {
            return Err(Error::Lp(format!(
                "problem is infeasible (phase one residual {infeasibility:.3e})"
            )));
        }
        // Drive remaining artificials out of the basis where possible.
        for i in 0..self.m {
            if self.is_artificial(self.basis[i]) {
                let w = self.width;
                if let Some(e) = (0..n)
                    .filter(|&j| !self.is_artificial(j))
                    .max_by(|&a, &b| self.a[i * w + a].abs().total_cmp(&self.a[i * w + b].abs()))
                    .filter(|&j| self.a[i * w + j].abs() > PIVOT_EPS)
                {
                    self.pivot(i, e);
                }
            }
        }

        let mut phase2 = vec![0.0; n];
        for (j, col) in self.cols.iter().enumerate() {
            match *col {
                Col::Pos(v) => phase2[j] = lp.objective[v],
                Col::Neg(v) => phase2[j] = -lp.objective[v],
                _ => {}
            }
        }
        self.set_cost(&phase2);
        let it2 = self.optimize(false, max_iter)?;

        let mut x = vec![0.0; lp.n_vars()];
        for i in 0..self.m {
            let v = self.a[i * self.width + self.width - 1];
            match self.cols[self.basis[i]] {
                Col::Pos(j) => x[j] += v,
                Col::Neg(j) => x[j] -= v,
                _ => {}
            }
        }
        let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution {
            x,
            objective,
            iterations: it1 + it2,
        })
    }
}
