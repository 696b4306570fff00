//! Convex minimization of `sum nu f^p` under `Af >= 1`, `f >= 0`.
//!
//! The primary path is a log-barrier method with damped Newton steps, kept
//! strictly feasible and driven along the central path. Optimality is
//! certified by a measured duality gap: the barrier multipliers
//! `lambda_x = 1/(t s_x)` are dual feasible, the dual function has a closed
//! form for p-th power objectives, and the iterate is accepted once
//! `F(f) - g(lambda) <= tol`. Since the iterate is strictly primal feasible
//! the gap bounds the distance to the true infimum from above. For `p = 2`
//! an independent active-set quadratic-program path is provided as a
//! cross-check.

use super::PotentialError;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// KKT residual target.
    pub tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    pub barrier_t0: f64,
    pub barrier_mu: f64,
    /// Multiplier applied to the feasible starting point; exercised by the
    /// minimizer-uniqueness checks.
    pub start_scale: f64,
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_outer: 80,
            max_newton: 120,
            barrier_t0: 1.0,
            barrier_mu: 12.0,
            start_scale: 1.0,
            trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub barrier: f64,
    pub kkt_residual: f64,
}

#[derive(Debug, Clone)]
pub struct BarrierSolution {
    pub f: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub duality_gap: f64,
    pub newton_iterations: usize,
    pub barrier_t: f64,
    pub trace: Vec<TraceRow>,
}

struct Problem<'a> {
    /// Constraint rows `a_x^T f >= 1`.
    rows: &'a [Vec<f64>],
    nu: &'a [f64],
    p: f64,
}

impl Problem<'_> {
    fn objective(&self, f: &DVector<f64>) -> f64 {
        self.nu
            .iter()
            .zip(f.iter())
            .map(|(&w, &v)| w * v.powf(self.p))
            .sum()
    }

    fn slacks(&self, f: &DVector<f64>) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(f.iter()).map(|(a, v)| a * v).sum::<f64>() - 1.0)
            .collect()
    }

    fn phi(&self, t: f64, f: &DVector<f64>) -> f64 {
        let slacks = self.slacks(f);
        if slacks.iter().any(|&s| s <= 0.0) || f.iter().any(|&v| v <= 0.0) {
            return f64::INFINITY;
        }
        t * self.objective(f)
            - slacks.iter().map(|s| s.ln()).sum::<f64>()
            - f.iter().map(|v| v.ln()).sum::<f64>()
    }

    fn gradient(&self, t: f64, f: &DVector<f64>, slacks: &[f64]) -> DVector<f64> {
        let n = f.len();
        let mut g = DVector::zeros(n);
        for y in 0..n {
            g[y] = t * self.nu[y] * self.p * f[y].powf(self.p - 1.0) - 1.0 / f[y];
        }
        for (row, &s) in self.rows.iter().zip(slacks) {
            for y in 0..n {
                g[y] -= row[y] / s;
            }
        }
        g
    }

    fn hessian(&self, t: f64, f: &DVector<f64>, slacks: &[f64]) -> DMatrix<f64> {
        let n = f.len();
        let mut h = DMatrix::zeros(n, n);
        for y in 0..n {
            let curvature = if self.p > 1.0 {
                t * self.nu[y] * self.p * (self.p - 1.0) * f[y].powf(self.p - 2.0)
            } else {
                0.0
            };
            h[(y, y)] = curvature + 1.0 / (f[y] * f[y]);
        }
        for (row, &s) in self.rows.iter().zip(slacks) {
            let inv_s2 = 1.0 / (s * s);
            for i in 0..n {
                if row[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    h[(i, j)] += inv_s2 * row[i] * row[j];
                }
            }
        }
        h
    }
}

fn solve_newton_system(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(chol) = h.clone().cholesky() {
        return Some(chol.solve(&(-g)));
    }
    // ridge fallback for near-singular Hessians
    let n = h.nrows();
    let mut ridge = 1e-12;
    for _ in 0..8 {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += ridge;
        }
        if let Some(chol) = hr.cholesky() {
            return Some(chol.solve(&(-g)));
        }
        ridge *= 100.0;
    }
    None
}

/// Largest step along `d` keeping `f > 0` and all slacks positive, shrunk by
/// a 0.99 safety factor.
fn max_feasible_step(problem: &Problem<'_>, f: &DVector<f64>, d: &DVector<f64>) -> f64 {
    let mut alpha: f64 = 1.0;
    for (v, dv) in f.iter().zip(d.iter()) {
        if *dv < 0.0 {
            alpha = alpha.min(-0.99 * v / dv);
        }
    }
    let slacks = problem.slacks(f);
    for (row, s) in problem.rows.iter().zip(&slacks) {
        let ds: f64 = row.iter().zip(d.iter()).map(|(a, dv)| a * dv).sum();
        if ds < 0.0 {
            alpha = alpha.min(-0.99 * s / ds);
        }
    }
    alpha
}

/// Value of the Lagrange dual at the multipliers `lambda` (for `Af >= 1`).
///
/// `g(lambda) = sum lambda - (1 - 1/p) sum_y c_y f*_y` with `c = A^T lambda`
/// and `f*_y = (c_y / (p nu_y))^{1/(p-1)}`; for `p = 1` the multipliers are
/// rescaled into the dual-feasible region `A^T lambda <= nu` first.
fn dual_value(rows: &[Vec<f64>], nu: &[f64], p: f64, lambda: &[f64]) -> f64 {
    let n = nu.len();
    let mut c = vec![0.0f64; n];
    for (row, &l) in rows.iter().zip(lambda) {
        for (cy, a) in c.iter_mut().zip(row) {
            *cy += l * a;
        }
    }
    let lambda_sum: f64 = lambda.iter().sum();
    if p == 1.0 {
        let scale = c
            .iter()
            .zip(nu)
            .filter(|(&cy, _)| cy > 0.0)
            .map(|(&cy, &w)| w / cy)
            .fold(1.0f64, f64::min);
        return scale * lambda_sum;
    }
    let mut value = lambda_sum;
    for (&cy, &w) in c.iter().zip(nu) {
        if cy > 0.0 {
            let f_star = (cy / (p * w)).powf(1.0 / (p - 1.0));
            value -= (1.0 - 1.0 / p) * cy * f_star;
        }
    }
    value
}

/// Minimizes `sum nu f^p` over `{f > 0 : Af > 1}`, starting from the
/// strictly feasible `start`, until the measured duality gap is below the
/// requested tolerance.
pub fn solve_barrier(
    rows: &[Vec<f64>],
    nu: &[f64],
    p: f64,
    start: Vec<f64>,
    options: &SolverOptions,
) -> Result<BarrierSolution, PotentialError> {
    let problem = Problem { rows, nu, p };
    let mut f = DVector::from_vec(start);
    debug_assert!(problem.slacks(&f).iter().all(|&s| s > 0.0));

    let gap_target = options.tol;
    let mut t = options.barrier_t0;
    let mut newton_total = 0usize;
    let mut trace = Vec::new();
    let mut best_gap = f64::INFINITY;

    for _ in 0..options.max_outer {
        // center at the current t
        for _ in 0..options.max_newton {
            let slacks = problem.slacks(&f);
            let g = problem.gradient(t, &f, &slacks);
            let h = problem.hessian(t, &f, &slacks);
            let d = solve_newton_system(&h, &g).ok_or_else(|| PotentialError::NoConvergence {
                best_value: problem.objective(&f),
                residual: f64::NAN,
                best_iterate: f.iter().copied().collect(),
            })?;
            let decrement = -0.5 * g.dot(&d);
            newton_total += 1;
            let phi0 = problem.phi(t, &f);
            if decrement.abs() <= 1e-12 + 1e-13 * phi0.abs() {
                break;
            }
            let mut alpha = max_feasible_step(&problem, &f, &d);
            let slope = g.dot(&d);
            let noise = phi0.abs() * 1e-15;
            let mut accepted = false;
            for _ in 0..60 {
                let candidate = &f + alpha * &d;
                if problem.phi(t, &candidate) <= phi0 + 1e-4 * alpha * slope + noise {
                    f = candidate;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break; // at rounding noise; centering is as good as it gets
            }
        }
        let slacks = problem.slacks(&f);
        let lambda: Vec<f64> = slacks.iter().map(|&s| 1.0 / (t * s)).collect();
        let objective = problem.objective(&f);
        let gap = objective - dual_value(rows, nu, p, &lambda);
        best_gap = best_gap.min(gap);
        if options.trace {
            trace.push(TraceRow {
                iteration: newton_total,
                objective,
                barrier: t,
                kkt_residual: gap,
            });
        }
        if gap <= gap_target {
            return Ok(BarrierSolution {
                f: f.iter().copied().collect(),
                objective,
                kkt_residual: gap,
                duality_gap: gap,
                newton_iterations: newton_total,
                barrier_t: t,
                trace,
            });
        }
        t *= options.barrier_mu;
    }
    Err(PotentialError::NoConvergence {
        best_value: problem.objective(&f),
        residual: best_gap,
        best_iterate: f.iter().copied().collect(),
    })
}

/// Active-set solver for the `p = 2` case: `min sum nu f^2` subject to
/// `Af >= 1` and `f >= 0`. Returns the optimal value.
pub fn solve_qp_p2(
    rows: &[Vec<f64>],
    nu: &[f64],
    start: Vec<f64>,
) -> Result<f64, PotentialError> {
    let n = nu.len();
    let m = rows.len();
    // constraints G f >= h: the m potential rows, then f >= 0
    let total = m + n;
    let g_row = |i: usize, j: usize| -> f64 {
        if i < m {
            rows[i][j]
        } else if i - m == j {
            1.0
        } else {
            0.0
        }
    };
    let h = |i: usize| -> f64 { if i < m { 1.0 } else { 0.0 } };

    let mut x = DVector::from_vec(start);
    let mut working: Vec<usize> = Vec::new();

    for _ in 0..200 * (total + 1) {
        // equality-constrained subproblem on the working set:
        // minimize z^T Q z / 2 with Q = 2 diag(nu), subject to G_W z = h_W
        let k = working.len();
        let dim = n + k;
        let mut kkt = DMatrix::zeros(dim, dim);
        let mut rhs = DVector::zeros(dim);
        for j in 0..n {
            kkt[(j, j)] = 2.0 * nu[j];
        }
        for (wi, &ci) in working.iter().enumerate() {
            for j in 0..n {
                kkt[(n + wi, j)] = g_row(ci, j);
                kkt[(j, n + wi)] = -g_row(ci, j);
            }
            rhs[n + wi] = h(ci);
        }
        let solution = kkt.lu().solve(&rhs).ok_or_else(|| PotentialError::NoConvergence {
            best_value: f64::NAN,
            residual: f64::NAN,
            best_iterate: x.iter().copied().collect(),
        })?;
        let z = solution.rows(0, n).into_owned();
        let lambda = solution.rows(n, k).into_owned();
        let step = &z - &x;

        if step.amax() <= 1e-11 {
            // multipliers decide optimality
            match lambda
                .iter()
                .enumerate()
                .filter(|(_, &l)| l < -1e-9)
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            {
                None => {
                    let value = x.iter().zip(nu).map(|(v, w)| w * v * v).sum();
                    return Ok(value);
                }
                Some((drop_idx, _)) => {
                    working.remove(drop_idx);
                }
            }
        } else {
            // longest step keeping all non-working constraints satisfied
            let mut alpha: f64 = 1.0;
            let mut blocking = None;
            for ci in 0..total {
                if working.contains(&ci) {
                    continue;
                }
                let gp: f64 = (0..n).map(|j| g_row(ci, j) * step[j]).sum();
                if gp < -1e-14 {
                    let gx: f64 = (0..n).map(|j| g_row(ci, j) * x[j]).sum();
                    let ratio = (h(ci) - gx) / gp;
                    if ratio < alpha {
                        alpha = ratio;
                        blocking = Some(ci);
                    }
                }
            }
            x += alpha * step;
            if let Some(ci) = blocking {
                if alpha < 1.0 {
                    working.push(ci);
                }
            }
        }
    }
    Err(PotentialError::NoConvergence {
        best_value: x.iter().zip(nu).map(|(v, w)| w * v * v).sum(),
        residual: f64::NAN,
        best_iterate: x.iter().copied().collect(),
    })
}
