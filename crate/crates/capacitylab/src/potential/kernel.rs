//! Kernel evaluation: Riesz and Bessel closed/quadrature forms plus the
//! structural kernels used for oracles.

use super::PotentialError;
use std::f64::consts::PI;

/// Default cap applied to diagonal singularities of metric kernels.
pub const DEFAULT_SINGULARITY_CAP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `g(x, y) = gamma * |x - y|^(alpha - dim)` with `0 < alpha < dim`.
    Riesz {
        alpha: f64,
        dim: usize,
        gamma: f64,
        /// Value substituted at `x = y`; `None` makes coincidence an error.
        singularity_cap: Option<f64>,
    },
    /// `g(x, y) = a * \int_0^inf t^{(alpha-dim)/2} e^{-pi|x-y|^2/t - t/(4 pi)} dt/t`.
    Bessel {
        alpha: f64,
        dim: usize,
        a: f64,
        quad_tol: f64,
        singularity_cap: Option<f64>,
    },
    Constant {
        value: f64,
    },
    /// `g(x_i, y_j) = delta_ij / nu_j`, so that `Gf = f` pointwise.
    Diagonal,
    /// Explicit nonnegative matrix, `values[x][y]` over eval x M.
    ExplicitMatrix {
        values: Vec<Vec<f64>>,
    },
}

impl Kernel {
    pub fn riesz(alpha: f64, dim: usize, gamma: f64) -> Result<Self, PotentialError> {
        if !(alpha > 0.0 && alpha < dim as f64) {
            return Err(PotentialError::BadInput(format!(
                "Riesz kernel needs 0 < alpha < dim, got alpha={alpha} dim={dim}"
            )));
        }
        if !(gamma > 0.0) {
            return Err(PotentialError::BadInput("gamma must be positive".into()));
        }
        Ok(Kernel::Riesz {
            alpha,
            dim,
            gamma,
            singularity_cap: Some(DEFAULT_SINGULARITY_CAP),
        })
    }

    pub fn bessel(alpha: f64, dim: usize, a: f64) -> Result<Self, PotentialError> {
        if !(alpha > 0.0) || !(a > 0.0) {
            return Err(PotentialError::BadInput(
                "Bessel kernel needs alpha > 0 and a > 0".into(),
            ));
        }
        Ok(Kernel::Bessel {
            alpha,
            dim,
            a,
            quad_tol: 1e-8,
            singularity_cap: Some(DEFAULT_SINGULARITY_CAP),
        })
    }
}

fn euclidean_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Pointwise kernel value for coordinate kernels. Index-based kernels
/// (Diagonal, ExplicitMatrix) are evaluated through the operator matrix.
pub fn kernel_eval(kernel: &Kernel, x: &[f64], y: &[f64]) -> Result<f64, PotentialError> {
    match kernel {
        Kernel::Constant { value } => Ok(*value),
        Kernel::Riesz {
            alpha,
            dim,
            gamma,
            singularity_cap,
        } => {
            let r = euclidean_distance(x, y);
            if r == 0.0 {
                return singularity_cap.ok_or(PotentialError::SingularKernel);
            }
            Ok(gamma * r.powf(alpha - *dim as f64))
        }
        Kernel::Bessel {
            alpha,
            dim,
            a,
            quad_tol,
            singularity_cap,
        } => {
            let r = euclidean_distance(x, y);
            if r == 0.0 && *alpha <= *dim as f64 {
                return singularity_cap.ok_or(PotentialError::SingularKernel);
            }
            Ok(bessel_kernel_value(*alpha, *dim, *a, r, *quad_tol, 1))
        }
        Kernel::Diagonal | Kernel::ExplicitMatrix { .. } => Err(PotentialError::BadInput(
            "index-based kernel has no coordinate evaluation".into(),
        )),
    }
}

/// Bessel kernel by trapezoid quadrature after `t = e^u`:
/// the integrand becomes `exp((alpha-dim)/2 * u - pi r^2 e^{-u} - e^u / (4 pi))`,
/// which decays double-exponentially on both sides. `refinement` multiplies
/// the point count and widens the window; successive doublings run until the
/// relative change drops below `tol`.
pub fn bessel_kernel_value(
    alpha: f64,
    dim: usize,
    a: f64,
    r: f64,
    tol: f64,
    refinement: u32,
) -> f64 {
    let mut points = 400 * refinement.max(1) as usize;
    let mut value = bessel_trapezoid(alpha, dim, a, r, points, refinement.max(1));
    for _ in 0..6 {
        points *= 2;
        let refined = bessel_trapezoid(alpha, dim, a, r, points, refinement.max(1));
        let scale = refined.abs().max(1e-300);
        let done = (refined - value).abs() / scale <= tol;
        value = refined;
        if done {
            break;
        }
    }
    value
}

fn bessel_trapezoid(alpha: f64, dim: usize, a: f64, r: f64, points: usize, widen: u32) -> f64 {
    let pad = 3.0 + f64::from(widen).ln();
    let left_cut = if r > 0.0 {
        (PI * r * r / 45.0).ln().min(0.0)
    } else {
        // only reachable when alpha > dim; the u -> -inf tail then decays
        -45.0 / (alpha - dim as f64).max(0.1)
    };
    let u_lo = left_cut - pad;
    let u_hi = (45.0 * 4.0 * PI).ln() + pad;
    let h = (u_hi - u_lo) / points as f64;
    let half = 0.5 * (alpha - dim as f64);
    let g = |u: f64| (half * u - PI * r * r * (-u).exp() - u.exp() / (4.0 * PI)).exp();
    let mut sum = 0.5 * (g(u_lo) + g(u_hi));
    for i in 1..points {
        sum += g(u_lo + i as f64 * h);
    }
    a * sum * h
}
