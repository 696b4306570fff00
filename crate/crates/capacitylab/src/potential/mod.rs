//! Discrete kernel potential spaces and the capacities they induce.
//!
//! A [`DiscretePotentialSpace`] carries a measure space `(M, nu)` and a grid
//! of evaluation points. A [`Kernel`] turns it into the potential operator
//! `Gf(x) = sum_y g(x, y) f(y) nu_y`, and the capacity of a set `E` of
//! evaluation points is the least `sum nu f^p` over nonnegative `f` with
//! `Gf >= 1` on `E`. The minimizer is the potential function of `E`; its
//! level set `Gf >= 1` yields the tilde operation and the stability
//! biconditional `c(A) < c(B) <=> c(B \ tilde A) > 0`.

mod kernel;
mod solver;

pub use kernel::{bessel_kernel_value, kernel_eval, Kernel, DEFAULT_SINGULARITY_CAP};
pub use solver::{solve_barrier, solve_qp_p2, BarrierSolution, SolverOptions, TraceRow};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("kernel is singular at coincident points and no cap is configured")]
    SingularKernel,
    #[error("constraint row {row} is identically zero; no f can satisfy Gf >= 1 there")]
    Infeasible { row: usize },
    #[error("solver failed to reach tolerance (best value {best_value}, residual {residual})")]
    NoConvergence {
        best_value: f64,
        residual: f64,
        best_iterate: Vec<f64>,
    },
    #[error("invalid input: {0}")]
    BadInput(String),
}

/// Finite measure space plus evaluation grid.
#[derive(Debug, Clone)]
pub struct DiscretePotentialSpace {
    m_coords: Vec<Vec<f64>>,
    nu: Vec<f64>,
    eval_coords: Vec<Vec<f64>>,
}

impl DiscretePotentialSpace {
    pub fn new(
        m_coords: Vec<Vec<f64>>,
        nu: Vec<f64>,
        eval_coords: Vec<Vec<f64>>,
    ) -> Result<Self, PotentialError> {
        if m_coords.is_empty() {
            return Err(PotentialError::BadInput("M must be nonempty".into()));
        }
        if m_coords.len() != nu.len() {
            return Err(PotentialError::BadInput(format!(
                "{} points in M but {} weights",
                m_coords.len(),
                nu.len()
            )));
        }
        if nu.iter().any(|&w| !(w > 0.0)) {
            return Err(PotentialError::BadInput(
                "all nu weights must be positive".into(),
            ));
        }
        Ok(DiscretePotentialSpace {
            m_coords,
            nu,
            eval_coords,
        })
    }

    pub fn m_len(&self) -> usize {
        self.m_coords.len()
    }

    pub fn eval_len(&self) -> usize {
        self.eval_coords.len()
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// `nu(E)` for a set of M-point indices; the diagonal-kernel oracle.
    pub fn nu_of(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&i| self.nu[i]).sum()
    }
}

/// The minimizer of the capacity problem with its certificate data.
#[derive(Debug, Clone)]
pub struct PotentialFunction {
    pub values: Vec<f64>,
    pub achieved_norm: f64,
    pub kkt_residual: f64,
}

#[derive(Debug, Clone)]
pub struct KktCertificate {
    pub residual: f64,
    pub duality_gap: f64,
    pub newton_iterations: usize,
    pub barrier_t: f64,
}

#[derive(Debug, Clone)]
pub struct CapacityResult {
    pub value: f64,
    pub potential: PotentialFunction,
    pub certificate: KktCertificate,
    pub trace: Vec<TraceRow>,
}

/// Per-direction verdict of the stability biconditional for `A ⊆ B`.
#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub c_a: f64,
    pub c_b: f64,
    pub c_b_minus_tilde: f64,
    /// `c(B \ tilde A) <= tol` implies `|c(B) - c(A)| <= 10 tol`.
    pub equal_direction: bool,
    /// `c(B) > c(A) + 10 tol` implies `c(B \ tilde A) > tol`.
    pub growth_direction: bool,
}

impl StabilityVerdict {
    pub fn passed(&self) -> bool {
        self.equal_direction && self.growth_direction
    }
}

/// A kernel bound to a space: the matrix `g(x, y)` over eval x M, with the
/// `nu`-scaled constraint rows used by the solver.
#[derive(Debug, Clone)]
pub struct PotentialOperator {
    space: DiscretePotentialSpace,
    kernel_matrix: Vec<Vec<f64>>,
    scaled_rows: Vec<Vec<f64>>,
    capped_entries: usize,
}

impl PotentialOperator {
    pub fn new(space: DiscretePotentialSpace, kernel: &Kernel) -> Result<Self, PotentialError> {
        let m = space.m_len();
        let x_count = space.eval_len();
        let mut capped = 0usize;
        let kernel_matrix: Vec<Vec<f64>> = match kernel {
            Kernel::Diagonal => {
                if x_count != m {
                    return Err(PotentialError::BadInput(format!(
                        "diagonal kernel identifies eval points with M, got {x_count} vs {m}"
                    )));
                }
                (0..x_count)
                    .map(|x| {
                        (0..m)
                            .map(|y| if x == y { 1.0 / space.nu[y] } else { 0.0 })
                            .collect()
                    })
                    .collect()
            }
            Kernel::ExplicitMatrix { values } => {
                if values.len() != x_count || values.iter().any(|row| row.len() != m) {
                    return Err(PotentialError::BadInput(format!(
                        "explicit matrix must be {x_count} x {m}"
                    )));
                }
                if values.iter().flatten().any(|&v| v < 0.0) {
                    return Err(PotentialError::BadInput(
                        "kernel values must be nonnegative".into(),
                    ));
                }
                values.clone()
            }
            _ => {
                let mut rows = Vec::with_capacity(x_count);
                for x in &space.eval_coords {
                    let mut row = Vec::with_capacity(m);
                    for y in &space.m_coords {
                        let v = kernel_eval(kernel, x, y)?;
                        if v >= DEFAULT_SINGULARITY_CAP {
                            capped += 1;
                        }
                        row.push(v);
                    }
                    rows.push(row);
                }
                rows
            }
        };
        let scaled_rows = kernel_matrix
            .iter()
            .map(|row| row.iter().zip(&space.nu).map(|(g, w)| g * w).collect())
            .collect();
        Ok(PotentialOperator {
            space,
            kernel_matrix,
            scaled_rows,
            capped_entries: capped,
        })
    }

    pub fn space(&self) -> &DiscretePotentialSpace {
        &self.space
    }

    pub fn kernel_matrix(&self) -> &[Vec<f64>] {
        &self.kernel_matrix
    }

    /// Number of entries that hit the singularity cap during assembly.
    pub fn capped_entries(&self) -> usize {
        self.capped_entries
    }

    /// `Gf(x) = sum_y g(x, y) f(y) nu_y` on every evaluation point.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.scaled_rows
            .iter()
            .map(|row| row.iter().zip(f).map(|(a, v)| a * v).sum())
            .collect()
    }

    /// `c_{g,p}(E)` with minimizer and KKT certificate. `E` is a set of
    /// evaluation-point indices.
    pub fn capacity(
        &self,
        p: f64,
        e: &[usize],
        options: &SolverOptions,
    ) -> Result<CapacityResult, PotentialError> {
        if !(p >= 1.0) {
            return Err(PotentialError::BadInput(format!(
                "exponent p must be >= 1, got {p}"
            )));
        }
        let m = self.space.m_len();
        if e.is_empty() {
            return Ok(CapacityResult {
                value: 0.0,
                potential: PotentialFunction {
                    values: vec![0.0; m],
                    achieved_norm: 0.0,
                    kkt_residual: 0.0,
                },
                certificate: KktCertificate {
                    residual: 0.0,
                    duality_gap: 0.0,
                    newton_iterations: 0,
                    barrier_t: 0.0,
                },
                trace: Vec::new(),
            });
        }
        let rows = self.constraint_rows(e)?;
        let start = self.feasible_start(&rows, options.start_scale);
        let solution = solve_barrier(&rows, &self.space.nu, p, start, options)?;
        Ok(CapacityResult {
            value: solution.objective,
            potential: PotentialFunction {
                values: solution.f,
                achieved_norm: solution.objective,
                kkt_residual: solution.kkt_residual,
            },
            certificate: KktCertificate {
                residual: solution.kkt_residual,
                duality_gap: solution.duality_gap,
                newton_iterations: solution.newton_iterations,
                barrier_t: solution.barrier_t,
            },
            trace: solution.trace,
        })
    }

    /// The `p = 2` active-set value, used as an independent route.
    pub fn capacity_qp2(&self, e: &[usize]) -> Result<f64, PotentialError> {
        if e.is_empty() {
            return Ok(0.0);
        }
        let rows = self.constraint_rows(e)?;
        let start = self.feasible_start(&rows, 1.0);
        solve_qp_p2(&rows, &self.space.nu, start)
    }

    fn constraint_rows(&self, e: &[usize]) -> Result<Vec<Vec<f64>>, PotentialError> {
        let mut rows = Vec::with_capacity(e.len());
        for &x in e {
            if x >= self.space.eval_len() {
                return Err(PotentialError::BadInput(format!(
                    "evaluation index {x} out of range"
                )));
            }
            let row = &self.scaled_rows[x];
            if row.iter().all(|&v| v == 0.0) {
                return Err(PotentialError::Infeasible { row: x });
            }
            rows.push(row.clone());
        }
        Ok(rows)
    }

    fn feasible_start(&self, rows: &[Vec<f64>], scale: f64) -> Vec<f64> {
        let m = self.space.m_len();
        let min_row: f64 = rows
            .iter()
            .map(|r| r.iter().sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let level = 2.0 / min_row * scale.max(0.01);
        vec![level; m]
    }

    /// `tilde A = A ∪ {x : G f_A(x) >= 1 - tol}` as evaluation indices.
    pub fn tilde(
        &self,
        p: f64,
        a: &[usize],
        tol: f64,
        options: &SolverOptions,
    ) -> Result<Vec<usize>, PotentialError> {
        if a.is_empty() {
            return Ok(Vec::new());
        }
        let result = self.capacity(p, a, options)?;
        let potential_values = self.apply(&result.potential.values);
        let mut out: Vec<usize> = (0..self.space.eval_len())
            .filter(|&x| a.contains(&x) || potential_values[x] >= 1.0 - tol)
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Checks both directions of the stability biconditional for `A ⊆ B`.
    pub fn stability(
        &self,
        p: f64,
        a: &[usize],
        b: &[usize],
        tol: f64,
        options: &SolverOptions,
    ) -> Result<StabilityVerdict, PotentialError> {
        if !a.iter().all(|x| b.contains(x)) {
            return Err(PotentialError::BadInput("A must be a subset of B".into()));
        }
        let c_a = self.capacity(p, a, options)?.value;
        let c_b = self.capacity(p, b, options)?.value;
        let tilde_a = self.tilde(p, a, tol, options)?;
        let remainder: Vec<usize> = b
            .iter()
            .copied()
            .filter(|x| !tilde_a.contains(x))
            .collect();
        let c_rem = self.capacity(p, &remainder, options)?.value;
        let equal_direction = !(c_rem <= tol) || (c_b - c_a).abs() <= 10.0 * tol;
        let growth_direction = !(c_b > c_a + 10.0 * tol) || c_rem > tol;
        Ok(StabilityVerdict {
            c_a,
            c_b,
            c_b_minus_tilde: c_rem,
            equal_direction,
            growth_direction,
        })
    }
}

/// Exhaustive stability sweep over all pairs `A ⊆ B` of evaluation points.
pub fn stability_exhaustive(
    operator: &PotentialOperator,
    p: f64,
    tol: f64,
    options: &SolverOptions,
) -> Result<StabilitySweep, PotentialError> {
    let n = operator.space().eval_len();
    if n > 8 {
        return Err(PotentialError::BadInput(format!(
            "exhaustive stability sweep needs <= 8 evaluation points, got {n}"
        )));
    }
    let indices = |mask: u32| -> Vec<usize> { (0..n).filter(|&i| mask >> i & 1 == 1).collect() };
    // capacity and tilde per subset, computed once
    let mut cap = vec![0.0f64; 1 << n];
    let mut tilde_mask = vec![0u32; 1 << n];
    for mask in 0..(1u32 << n) {
        let e = indices(mask);
        cap[mask as usize] = operator.capacity(p, &e, options)?.value;
        let tilde = operator.tilde(p, &e, tol, options)?;
        tilde_mask[mask as usize] = tilde.iter().fold(0u32, |acc, &i| acc | 1 << i);
    }
    let mut pairs = 0usize;
    let mut failures = Vec::new();
    for b in 0..(1u32 << n) {
        let mut a = b;
        loop {
            pairs += 1;
            let rem = b & !tilde_mask[a as usize];
            let c_a = cap[a as usize];
            let c_b = cap[b as usize];
            let c_rem = cap[rem as usize];
            let equal_dir = !(c_rem <= tol) || (c_b - c_a).abs() <= 10.0 * tol;
            let growth_dir = !(c_b > c_a + 10.0 * tol) || c_rem > tol;
            if !(equal_dir && growth_dir) {
                failures.push(StabilityFailure {
                    a_mask: a,
                    b_mask: b,
                    c_a,
                    c_b,
                    c_remainder: c_rem,
                });
            }
            if a == 0 {
                break;
            }
            a = (a - 1) & b;
        }
    }
    Ok(StabilitySweep { pairs, failures })
}

#[derive(Debug, Clone)]
pub struct StabilityFailure {
    pub a_mask: u32,
    pub b_mask: u32,
    pub c_a: f64,
    pub c_b: f64,
    pub c_remainder: f64,
}

#[derive(Debug, Clone)]
pub struct StabilitySweep {
    pub pairs: usize,
    pub failures: Vec<StabilityFailure>,
}

impl StabilitySweep {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diagonal_operator(nu: Vec<f64>) -> PotentialOperator {
        let n = nu.len();
        let coords: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let space = DiscretePotentialSpace::new(coords.clone(), nu, coords).unwrap();
        PotentialOperator::new(space, &Kernel::Diagonal).unwrap()
    }

    #[test]
    fn apply_potential_basics() {
        let op = diagonal_operator(vec![0.25, 0.5, 0.25]);
        assert_eq!(op.apply(&[0.0, 0.0, 0.0]), vec![0.0, 0.0, 0.0]);
        // diagonal kernel: Gf = f pointwise
        let f = [0.3, 1.7, 0.2];
        let gf = op.apply(&f);
        for (a, b) in gf.iter().zip(&f) {
            assert!((a - b).abs() < 1e-12);
        }
        // constant kernel with probability weights: Gf = mean, so G1 = 1
        let coords: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let space =
            DiscretePotentialSpace::new(coords.clone(), vec![0.25; 4], coords).unwrap();
        let c = PotentialOperator::new(space, &Kernel::Constant { value: 1.0 }).unwrap();
        let gf = c.apply(&[1.0; 4]);
        assert!(gf.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn empty_constraint_set_has_zero_capacity() {
        let op = diagonal_operator(vec![0.5, 0.5]);
        let r = op.capacity(2.0, &[], &SolverOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.potential.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn diagonal_kernel_capacity_is_nu_of_e() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [1.5, 2.0, 3.0] {
            let n = rng.gen_range(3..8);
            let nu: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
            let op = diagonal_operator(nu.clone());
            for _ in 0..5 {
                let e: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
                let r = op.capacity(p, &e, &SolverOptions::default()).unwrap();
                let expected: f64 = e.iter().map(|&i| nu[i]).sum();
                assert!(
                    (r.value - expected).abs() <= 1e-6,
                    "p={p} value {} vs nu(E) {expected}",
                    r.value
                );
                // minimizer approximates the indicator of E (interior iterate)
                for (i, &v) in r.potential.values.iter().enumerate() {
                    let target = if e.contains(&i) { 1.0 } else { 0.0 };
                    assert!((v - target).abs() < 2e-2, "f[{i}] = {v}");
                }
            }
        }
    }

    #[test]
    fn constant_kernel_capacity_is_one_by_jensen() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let n = rng.gen_range(2..7);
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let nu: Vec<f64> = raw.into_iter().map(|w| w / total).collect();
            let coords: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
            let space = DiscretePotentialSpace::new(coords.clone(), nu, coords).unwrap();
            let op = PotentialOperator::new(space, &Kernel::Constant { value: 1.0 }).unwrap();
            for p in [1.5, 2.0, 3.0] {
                let e: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
                if e.is_empty() {
                    continue;
                }
                let r = op.capacity(p, &e, &SolverOptions::default()).unwrap();
                assert!((r.value - 1.0).abs() <= 1e-6, "p={p} value {}", r.value);
            }
        }
    }

    #[test]
    fn infeasible_row_is_detected() {
        let coords: Vec<Vec<f64>> = (0..2).map(|i| vec![i as f64]).collect();
        let space = DiscretePotentialSpace::new(coords.clone(), vec![1.0, 1.0], coords).unwrap();
        let op = PotentialOperator::new(
            space,
            &Kernel::ExplicitMatrix {
                values: vec![vec![1.0, 0.5], vec![0.0, 0.0]],
            },
        )
        .unwrap();
        assert!(matches!(
            op.capacity(2.0, &[1], &SolverOptions::default()),
            Err(PotentialError::Infeasible { row: 1 })
        ));
    }

    #[test]
    fn tilde_for_diagonal_and_constant_kernels() {
        let op = diagonal_operator(vec![0.3, 0.3, 0.4]);
        let opts = SolverOptions::default();
        assert_eq!(op.tilde(2.0, &[], 1e-6, &opts).unwrap(), Vec::<usize>::new());
        assert_eq!(op.tilde(2.0, &[0, 2], 1e-6, &opts).unwrap(), vec![0, 2]);

        let coords: Vec<Vec<f64>> = (0..3).map(|i| vec![i as f64]).collect();
        let space = DiscretePotentialSpace::new(
            coords.clone(),
            vec![1.0 / 3.0; 3],
            coords,
        )
        .unwrap();
        let c = PotentialOperator::new(space, &Kernel::Constant { value: 1.0 }).unwrap();
        // f_A is constant 1, so Gf_A = 1 everywhere: tilde is everything
        assert_eq!(c.tilde(2.0, &[1], 1e-6, &opts).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn stability_trivial_and_diagonal_cases() {
        let op = diagonal_operator(vec![0.4, 0.3, 0.3]);
        let opts = SolverOptions::default();
        // A = B: both directions trivially pass
        let v = op.stability(2.0, &[0, 1], &[0, 1], 1e-6, &opts).unwrap();
        assert!(v.passed());
        assert!(v.c_b_minus_tilde.abs() <= 1e-9);
        // strict inclusion: c(B \ tilde A) = nu(B \ A) > 0
        let v = op.stability(2.0, &[0], &[0, 2], 1e-6, &opts).unwrap();
        assert!(v.passed());
        assert!((v.c_b_minus_tilde - 0.3).abs() < 1e-6);
        assert!(v.c_a < v.c_b);
        // subset validation
        assert!(op.stability(2.0, &[1], &[0], 1e-6, &opts).is_err());
    }

    #[test]
    fn capacity_monotone_and_subadditive_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let opts = SolverOptions::default();
        for _ in 0..10 {
            let n = rng.gen_range(2..5);
            let m = rng.gen_range(2..5);
            let nu: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..1.5)).collect();
            let values: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| rng.gen_range(0.5..1.5)).collect())
                .collect();
            let coords: Vec<Vec<f64>> = (0..m).map(|i| vec![i as f64]).collect();
            let eval: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
            let space = DiscretePotentialSpace::new(coords, nu, eval).unwrap();
            let op = PotentialOperator::new(space, &Kernel::ExplicitMatrix { values }).unwrap();
            let cap_of = |mask: u32| -> f64 {
                let e: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
                op.capacity(2.0, &e, &opts).unwrap().value
            };
            let caps: Vec<f64> = (0..(1u32 << n)).map(cap_of).collect();
            for a in 0..(1u32 << n) {
                for b in 0..(1u32 << n) {
                    if a & b == a {
                        assert!(caps[a as usize] <= caps[b as usize] + 1e-6);
                    }
                    assert!(
                        caps[(a | b) as usize] <= caps[a as usize] + caps[b as usize] + 1e-6
                    );
                }
            }
        }
    }

    #[test]
    fn minimizer_unique_from_different_starts() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let nu: Vec<f64> = (0..4).map(|_| rng.gen_range(0.5..1.5)).collect();
        let values: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..4).map(|_| rng.gen_range(0.5..1.5)).collect())
            .collect();
        let coords: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let eval: Vec<Vec<f64>> = (0..3).map(|i| vec![i as f64]).collect();
        let space = DiscretePotentialSpace::new(coords, nu, eval).unwrap();
        let op = PotentialOperator::new(space, &Kernel::ExplicitMatrix { values }).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let base = op
                .capacity(p, &[0, 1, 2], &SolverOptions::default())
                .unwrap();
            let other = op
                .capacity(
                    p,
                    &[0, 1, 2],
                    &SolverOptions {
                        start_scale: 37.0,
                        ..SolverOptions::default()
                    },
                )
                .unwrap();
            let max_diff = base
                .potential
                .values
                .iter()
                .zip(&other.potential.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(max_diff <= 1e-6, "p={p} minimizers differ by {max_diff}");
        }
    }

    #[test]
    fn potential_operator_monotone_in_f() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let op = diagonal_operator(vec![0.5, 0.25, 0.25]);
        for _ in 0..50 {
            let f: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..2.0)).collect();
            let g: Vec<f64> = f.iter().map(|&v| v + rng.gen_range(0.0..1.0)).collect();
            let gf = op.apply(&f);
            let gg = op.apply(&g);
            for (a, b) in gf.iter().zip(&gg) {
                assert!(a <= b);
            }
        }
    }

    #[test]
    fn exhaustive_stability_on_diagonal_instance() {
        let op = diagonal_operator(vec![0.4, 0.35, 0.25]);
        let sweep = stability_exhaustive(&op, 2.0, 1e-6, &SolverOptions::default()).unwrap();
        assert!(sweep.passed());
        assert_eq!(sweep.pairs, 27); // sum over B of 2^|B| = 3^n
    }

    #[test]
    fn accepted_results_meet_their_certificates() {
        let op = diagonal_operator(vec![0.5, 0.5]);
        let opts = SolverOptions {
            tol: 1e-7,
            ..SolverOptions::default()
        };
        let r = op.capacity(2.0, &[0, 1], &opts).unwrap();
        assert!(r.certificate.residual <= 1e-7);
        assert!((r.value - r.potential.achieved_norm).abs() <= 1e-12);
        let gf = op.apply(&r.potential.values);
        assert!(gf.iter().all(|&v| v >= 1.0 - 1e-7));
    }
}
