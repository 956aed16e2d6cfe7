//! Trace infidelity between unitaries and a BFGS minimizer with restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{trace_overlap, CMatrix};

/// Costs below this are reported as exact zero.
pub const ZERO_FLOOR: f64 = 1e-15;

/// `1 − |tr(W_L W_R†)|² / D²`, clamped into `[0, 1]`.
pub fn infidelity(w_left: &CMatrix, w_right: &CMatrix) -> Result<f64> {
    if w_left.shape() != w_right.shape() || w_left.nrows() != w_left.ncols() {
        return Err(Error::DimensionMismatch {
            expected: w_left.nrows(),
            found: w_right.nrows(),
        });
    }
    let d = w_left.nrows() as f64;
    Ok(infidelity_unchecked(w_left, w_right, d))
}

pub(crate) fn infidelity_unchecked(w_left: &CMatrix, w_right: &CMatrix, d: f64) -> f64 {
    let overlap = trace_overlap(w_left, w_right).norm_sqr() / (d * d);
    (1.0 - overlap).clamp(0.0, 1.0)
}

pub fn matrix_power(m: &CMatrix, n: usize) -> CMatrix {
    let mut out = CMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..n {
        out = &out * m;
    }
    out
}

/// Infidelity of `n_b` repetitions, `1 − |tr(W_L^{n_b} (W_R†)^{n_b})|² / D²`.
///
/// The normalization stays `1/D²` for every `n_b`: the trace is over a
/// single `D × D` matrix, so this is the only choice that vanishes for
/// `W_L = W_R`.
pub fn multi_step_infidelity(w_left: &CMatrix, w_right: &CMatrix, n_b: usize) -> Result<f64> {
    if n_b == 0 {
        return Err(Error::Precondition("n_b must be at least 1".into()));
    }
    infidelity(&matrix_power(w_left, n_b), &matrix_power(w_right, n_b))
}

/// `1 − (1 − C₁)^{n_b}`.
pub fn lower_bound(c1: f64, n_b: usize) -> f64 {
    1.0 - (1.0 - c1).powi(n_b as i32)
}

/// Worst-case infidelity of a product in which `k` factors each carry
/// infidelity at most `c`: `sin²(min(k·asin √c, π/2))`.
///
/// `arccos(|tr(U V†)| / D)` is a metric on unitaries up to phase and is
/// invariant under common left or right factors, so the angles of the
/// factors add.
pub fn composed_infidelity_bound(c: f64, k: usize) -> f64 {
    let angle = (k as f64 * c.clamp(0.0, 1.0).sqrt().asin()).min(std::f64::consts::FRAC_PI_2);
    angle.sin().powi(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Central finite-difference step, radians.
    pub gradient_step: f64,
    /// Gradient-norm threshold.
    pub convergence_tol: f64,
    pub restarts: usize,
    /// Half-width of the uniform init perturbation for restarts after the first.
    pub perturbation_scale: f64,
    pub rng_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            gradient_step: 1e-6,
            convergence_tol: 1e-9,
            restarts: 16,
            perturbation_scale: 0.5,
            rng_seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0
            || self.restarts == 0
            || !(self.gradient_step > 0.0)
            || !(self.convergence_tol > 0.0)
            || !(self.perturbation_scale > 0.0)
        {
            return Err(Error::Precondition(format!("invalid optimizer config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best_params: Vec<f64>,
    pub best_infidelity: f64,
    /// Iterations spent by the restart that produced the best point.
    pub iterations_used: usize,
    pub converged: bool,
    pub restart_infidelities: Vec<f64>,
    /// Restarts that ended on a failed line search.
    pub line_search_failures: usize,
}

#[derive(Clone, Debug)]
struct RunOutcome {
    params: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
    line_search_failed: bool,
}

fn gradient(cost: &(dyn Fn(&[f64]) -> f64 + Sync), x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let fp = cost(&probe);
            probe[i] = x[i] - h;
            let fm = cost(&probe);
            probe[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bfgs(cost: &(dyn Fn(&[f64]) -> f64 + Sync), init: Vec<f64>, cfg: &OptimizerConfig) -> RunOutcome {
    let n = init.len();
    let mut x = init;
    let mut f = cost(&x);
    let mut g = gradient(cost, &x, cfg.gradient_step);
    // inverse Hessian, row-major
    let mut h = identity_flat(n);
    let mut fresh = true;
    let mut iterations = 0;
    let mut converged = false;
    let mut line_search_failed = false;

    while iterations < cfg.max_iterations {
        if dot(&g, &g).sqrt() < cfg.convergence_tol || f == 0.0 {
            converged = true;
            break;
        }
        iterations += 1;

        let mut p: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&g, &p);
        if slope >= 0.0 {
            h = identity_flat(n);
            fresh = true;
            p = g.iter().map(|v| -v).collect();
            slope = dot(&g, &p);
        }

        let Some((step, x_new, f_new)) = backtrack(cost, &x, f, &p, slope) else {
            if fresh {
                line_search_failed = true;
                break;
            }
            h = identity_flat(n);
            fresh = true;
            continue;
        };

        let g_new = gradient(cost, &x_new, cfg.gradient_step);
        let s: Vec<f64> = p.iter().map(|v| v * step).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 0.0 {
            if fresh {
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }
        let moved = dot(&s, &s).sqrt();
        x = x_new;
        f = f_new;
        g = g_new;
        if moved < 1e-14 {
            break;
        }
    }
    RunOutcome {
        params: x,
        value: f,
        iterations,
        converged,
        line_search_failed,
    }
}

fn identity_flat(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Armijo backtracking; `None` when no acceptable step exists above `1e-20`.
fn backtrack(
    cost: &(dyn Fn(&[f64]) -> f64 + Sync),
    x: &[f64],
    f: f64,
    p: &[f64],
    slope: f64,
) -> Option<(f64, Vec<f64>, f64)> {
    const ARMIJO: f64 = 1e-4;
    let mut step = 1.0;
    while step > 1e-20 {
        let trial: Vec<f64> = x.iter().zip(p).map(|(a, b)| a + step * b).collect();
        let ft = cost(&trial);
        if ft.is_finite() && ft <= f + ARMIJO * step * slope && ft < f {
            return Some((step, trial, ft));
        }
        step *= 0.5;
    }
    None
}

/// Minimize `cost` with BFGS from `init` and from `restarts − 1` uniformly
/// perturbed copies of it; returns the best point found.
///
/// Restarts run concurrently. Perturbations are drawn up front from a
/// ChaCha stream seeded with `rng_seed`, so results do not depend on
/// scheduling.
pub fn minimize(
    cost: &(dyn Fn(&[f64]) -> f64 + Sync),
    init: &[f64],
    cfg: &OptimizerConfig,
) -> Result<OptResult> {
    cfg.validate()?;
    if init.iter().any(|v| !v.is_finite()) || !cost(init).is_finite() {
        return Err(Error::NonFiniteCost);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let starts: Vec<Vec<f64>> = (0..cfg.restarts)
        .map(|r| {
            if r == 0 {
                init.to_vec()
            } else {
                init.iter()
                    .map(|v| v + rng.random_range(-cfg.perturbation_scale..=cfg.perturbation_scale))
                    .collect()
            }
        })
        .collect();

    let outcomes: Vec<RunOutcome> = starts.into_par_iter().map(|s| bfgs(cost, s, cfg)).collect();

    let best = outcomes
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.value.total_cmp(&b.value).then(ia.cmp(ib)))
        .map(|(_, o)| o)
        .expect("at least one restart");
    let floor = |v: f64| if v < ZERO_FLOOR { 0.0 } else { v };
    Ok(OptResult {
        best_params: best.params.clone(),
        best_infidelity: floor(best.value),
        iterations_used: best.iterations,
        converged: outcomes.iter().any(|o| o.converged),
        restart_infidelities: outcomes.iter().map(|o| floor(o.value)).collect(),
        line_search_failures: outcomes.iter().filter(|o| o.line_search_failed).count(),
    })
}
