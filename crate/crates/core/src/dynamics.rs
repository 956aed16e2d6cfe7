//! Time evolution of the spin-1 XY chain and the return probability of
//! `|202⟩`, exactly and through (compressed) Trotter circuits.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{identity, kron, pow3, re, to_dynamic, CMatrix, HermitianEigen, C64, MAX_SITES};
use crate::optimizer::OptimizerConfig;
use crate::spin::{spin_operator, Axis, Representation};
use crate::trotter::{compressed_circuit, optimize_reflection, step_angle, trotter_circuit, Scheme, N_QUTRITS};

/// Basis levels of the initial and final state.
pub const RETURN_STATE: [usize; 3] = [2, 0, 2];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    #[serde(rename = "J")]
    pub j: f64,
    pub n_sites: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

impl HamiltonianSpec {
    pub fn open(j: f64) -> Self {
        Self {
            j,
            n_sites: N_QUTRITS,
            boundary: Boundary::Open,
        }
    }

    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut b: Vec<_> = (0..self.n_sites.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        if self.boundary == Boundary::Periodic && self.n_sites > 2 {
            b.push((self.n_sites - 1, 0));
        }
        b
    }
}

fn on_site(op: &CMatrix, site: usize, n: usize) -> CMatrix {
    kron(&kron(&identity(pow3(site)), op), &identity(pow3(n - site - 1)))
}

/// `H = −J Σ_bonds (S̃ˣ_i S̃ˣ_j + S̃ʸ_i S̃ʸ_j)`.
pub fn hamiltonian_xy(spec: &HamiltonianSpec) -> Result<CMatrix> {
    if spec.n_sites > MAX_SITES {
        return Err(Error::RegisterTooLarge(spec.n_sites));
    }
    if spec.n_sites < 2 {
        return Err(Error::Precondition("a chain needs at least two sites".into()));
    }
    let n = spec.n_sites;
    let dim = pow3(n);
    let sx = to_dynamic(&spin_operator(Axis::X, Representation::Adjoint));
    let sy = to_dynamic(&spin_operator(Axis::Y, Representation::Adjoint));
    let mut h = CMatrix::zeros(dim, dim);
    for (i, j) in spec.bonds() {
        h += on_site(&sx, i, n) * on_site(&sx, j, n);
        h += on_site(&sy, i, n) * on_site(&sy, j, n);
    }
    Ok(h * re(-spec.j))
}

/// `exp(−i t H)`.
pub fn exact_propagator(h: &CMatrix, t: f64) -> CMatrix {
    HermitianEigen::new(h).propagator(t)
}

fn return_index() -> usize {
    RETURN_STATE.iter().fold(0, |acc, &l| 3 * acc + l)
}

/// Uniform grid `0, dt, 2dt, …` strictly below `t_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub dt: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { t_max: 5.0, dt: 0.025 }
    }
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = (self.t_max / self.dt - 1e-9).ceil() as usize;
        (0..n).map(|k| k as f64 * self.dt).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    Exact,
    /// `n_steps` Trotter steps spanning `[0, t_max]`, truncated at the step
    /// reached by `t`.
    Trotter { scheme: Scheme, n_steps: usize },
    /// As [`Method::Trotter`], with blocks substituted by fitted mirrored
    /// steps.
    Compressed { scheme: Scheme, n_steps: usize, n_b: usize },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Exact => f.write_str("exact"),
            Method::Trotter { scheme, n_steps } => write!(f, "trotter:{scheme}:{n_steps}"),
            Method::Compressed { scheme, n_steps, n_b } => write!(f, "compressed:{scheme}:{n_steps}:{n_b}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Precondition(format!("bad method {s:?}; expected exact, trotter:S:N or compressed:S:N:NB"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| p.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["exact"] => Ok(Method::Exact),
            ["trotter", sc, n] => Ok(Method::Trotter {
                scheme: sc.parse()?,
                n_steps: num(n)?,
            }),
            ["compressed", sc, n, nb] => Ok(Method::Compressed {
                scheme: sc.parse()?,
                n_steps: num(n)?,
                n_b: num(nb)?,
            }),
            _ => Err(bad()),
        }
    }
}

/// A method bound to one Hamiltonian, ready to evaluate `p(t)`.
pub struct Evaluator {
    spec: HamiltonianSpec,
    method: Method,
    t_max: f64,
    eigen: Option<HermitianEigen>,
    /// Fitted mirrored-step parameters and their infidelity.
    pub fitted: Option<(Vec<f64>, f64)>,
}

impl Evaluator {
    /// Compressed methods fit their mirrored step here with `cfg`.
    pub fn new(spec: HamiltonianSpec, method: Method, t_max: f64, cfg: &OptimizerConfig) -> Result<Self> {
        let mut eval = Self {
            spec,
            method: method.clone(),
            t_max,
            eigen: None,
            fitted: None,
        };
        match method {
            Method::Exact => eval.eigen = Some(HermitianEigen::new(&hamiltonian_xy(&spec)?)),
            Method::Trotter { n_steps, .. } => eval.check_circuit(n_steps)?,
            Method::Compressed { scheme, n_steps, n_b } => {
                eval.check_circuit(n_steps)?;
                if n_b == 0 {
                    return Err(Error::Precondition("n_b must be at least 1".into()));
                }
                let res = optimize_reflection(scheme, eval.theta(n_steps), n_b, cfg)?;
                eval.fitted = Some((res.best_params, res.best_infidelity));
            }
        }
        Ok(eval)
    }

    /// Use given mirrored-step parameters instead of fitting them.
    pub fn with_params(spec: HamiltonianSpec, scheme: Scheme, n_steps: usize, n_b: usize, t_max: f64, params: Vec<f64>) -> Result<Self> {
        let eval = Self {
            spec,
            method: Method::Compressed { scheme, n_steps, n_b },
            t_max,
            eigen: None,
            fitted: Some((params, f64::NAN)),
        };
        eval.check_circuit(n_steps)?;
        Ok(eval)
    }

    fn check_circuit(&self, n_steps: usize) -> Result<()> {
        if self.spec.n_sites != N_QUTRITS || self.spec.boundary != Boundary::Open {
            return Err(Error::Precondition("Trotter circuits cover the open 3-site chain only".into()));
        }
        if n_steps == 0 || !(self.t_max > 0.0) {
            return Err(Error::Precondition("n_steps and t_max must be positive".into()));
        }
        Ok(())
    }

    fn theta(&self, n_steps: usize) -> f64 {
        step_angle(self.spec.j, self.t_max, n_steps)
    }

    pub fn method(&self) -> &Method {
        &self.method
    }

    /// Number of whole steps of size `t_max / n_steps` that fit in `t`.
    pub fn step_index(&self, t: f64, n_steps: usize) -> usize {
        let dt = self.t_max / n_steps as f64;
        ((t / dt + 1e-9).floor() as usize).min(n_steps)
    }

    /// The circuit evaluated at time `t`, for circuit-based methods.
    pub fn circuit_at(&self, t: f64) -> Result<Option<Circuit>> {
        Ok(match self.method {
            Method::Exact => None,
            Method::Trotter { scheme, n_steps } => Some(steps_or_empty(scheme, self.theta(n_steps), self.step_index(t, n_steps))?),
            Method::Compressed { scheme, n_steps, n_b } => {
                let m = self.step_index(t, n_steps);
                let theta = self.theta(n_steps);
                if m < n_b + 1 {
                    Some(steps_or_empty(scheme, theta, m)?)
                } else {
                    let params = &self.fitted.as_ref().expect("compressed evaluators carry parameters").0;
                    Some(compressed_circuit(scheme, theta, m, n_b, params)?.0)
                }
            }
        })
    }

    /// `(p(t), gate count)`; the gate count is zero for the exact method.
    pub fn evaluate(&self, t: f64) -> Result<(f64, usize)> {
        if !(t >= 0.0) {
            return Err(Error::Precondition(format!("t must be non-negative, got {t}")));
        }
        match &self.eigen {
            Some(eig) => Ok((eigen_return_probability(eig, t), 0)),
            None => {
                let c = self.circuit_at(t)?.expect("circuit method");
                Ok((circuit_return_probability(&c)?, c.len()))
            }
        }
    }

    /// Evaluate every grid point; output order follows `ts`.
    pub fn evaluate_all(&self, ts: &[f64]) -> Result<Vec<(f64, usize)>> {
        ts.par_iter().map(|&t| self.evaluate(t)).collect()
    }
}

fn steps_or_empty(scheme: Scheme, theta: f64, m: usize) -> Result<Circuit> {
    if m == 0 {
        Ok(Circuit::new(N_QUTRITS))
    } else {
        trotter_circuit(scheme, theta, m)
    }
}

/// `|Σ_k |⟨202|v_k⟩|² e^{−iE_k t}|²`.
pub fn eigen_return_probability(eig: &HermitianEigen, t: f64) -> f64 {
    if t == 0.0 {
        // the propagator is exactly the identity; skip the roundoff of Σ|v_k|²
        return 1.0;
    }
    let idx = return_index();
    let amp: C64 = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &e)| C64::from_polar(eig.eigenvectors[(idx, k)].norm_sqr(), -e * t))
        .sum();
    amp.norm_sqr().min(1.0)
}

pub fn circuit_return_probability(c: &Circuit) -> Result<f64> {
    let psi = StateVector::basis(&RETURN_STATE)?.apply(c)?;
    Ok(psi.amplitude(return_index()).norm_sqr().min(1.0))
}

/// `p(t)` from `n_steps` Trotter steps of size `t / n_steps`, so that the
/// circuit always spans exactly `[0, t]`.
pub fn spanning_trotter_probability(j: f64, scheme: Scheme, t: f64, n_steps: usize) -> Result<f64> {
    if t == 0.0 {
        return Ok(1.0);
    }
    circuit_return_probability(&trotter_circuit(scheme, step_angle(j, t, n_steps), n_steps)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsRow {
    pub j: f64,
    pub t: f64,
    pub method: String,
    pub p: f64,
    pub gate_count: usize,
}

#[derive(Clone, Debug)]
pub struct DynamicsConfig {
    pub j_values: Vec<f64>,
    pub methods: Vec<Method>,
    pub grid: TimeGrid,
    pub boundary: Boundary,
    pub optimizer: OptimizerConfig,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            j_values: vec![0.1, 0.55, 1.0],
            methods: vec![Method::Exact],
            grid: TimeGrid::default(),
            boundary: Boundary::Open,
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// Rows ordered by J, then method, then t.
pub fn dynamics_sweep(cfg: &DynamicsConfig) -> Result<Vec<DynamicsRow>> {
    let ts = cfg.grid.points();
    let mut rows = Vec::new();
    for &j in &cfg.j_values {
        let spec = HamiltonianSpec {
            j,
            n_sites: N_QUTRITS,
            boundary: cfg.boundary,
        };
        for m in &cfg.methods {
            let eval = Evaluator::new(spec, m.clone(), cfg.grid.t_max, &cfg.optimizer)?;
            let label = m.to_string();
            for (&t, (p, gate_count)) in ts.iter().zip(eval.evaluate_all(&ts)?) {
                rows.push(DynamicsRow {
                    j,
                    t,
                    method: label.clone(),
                    p,
                    gate_count,
                });
            }
        }
    }
    Ok(rows)
}

/// Format with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000000".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}

pub fn to_csv(rows: &[DynamicsRow]) -> String {
    let mut out = String::from("J,t,method,p,gate_count\n");
    for r in rows {
        out += &format!("{},{},{},{},{}\n", sig12(r.j), sig12(r.t), r.method, sig12(r.p), r.gate_count);
    }
    out
}
