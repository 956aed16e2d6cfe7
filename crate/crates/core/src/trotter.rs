//! Trotter step templates for the 3-site spin-1 XY chain, fitting of their
//! mirrored counterparts, and block-substitution compression.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{merge_pass, Circuit, GateInstance, Generator};
use crate::error::{Error, Result};
use crate::linalg::{identity, pow3, CMatrix};
use crate::optimizer::{infidelity_unchecked, matrix_power, minimize, OptResult, OptimizerConfig};
use crate::spin::Axis;

pub const N_QUTRITS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    /// T1's step and a reordering of it that is exact when all angles agree.
    Tref,
}

const X: Generator = Generator::Axis(Axis::X);
const Y: Generator = Generator::Axis(Axis::Y);
const XY: Generator = Generator::XyPair;

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::T1,
        Scheme::T2,
        Scheme::T3,
        Scheme::T4,
        Scheme::T5,
        Scheme::T6,
        Scheme::Tref,
    ];

    /// `(generator, left site)` of one step, in application order.
    pub fn left_template(self) -> &'static [(Generator, usize)] {
        match self {
            Scheme::T1 | Scheme::Tref => &[(X, 0), (X, 1), (Y, 0), (Y, 1)],
            Scheme::T2 => &[(X, 0), (Y, 0), (X, 1), (Y, 1)],
            Scheme::T3 => &[(XY, 0), (XY, 1)],
            Scheme::T4 => &[(X, 0), (Y, 1), (X, 1), (Y, 0)],
            Scheme::T5 => &[(XY, 0), (X, 1), (Y, 1)],
            Scheme::T6 => &[(X, 0), (XY, 1), (Y, 0)],
        }
    }

    /// The mirrored step; parameter `k` drives gate `k`.
    pub fn right_template(self) -> &'static [(Generator, usize)] {
        match self {
            Scheme::T1 => &[(Y, 1), (Y, 0), (X, 1), (X, 0)],
            Scheme::T2 => &[(Y, 1), (X, 1), (Y, 0), (X, 0)],
            Scheme::T3 => &[(XY, 1), (XY, 0)],
            Scheme::T4 => &[(Y, 0), (X, 1), (Y, 1), (X, 0)],
            Scheme::T5 => &[(Y, 1), (X, 1), (XY, 0)],
            Scheme::T6 => &[(Y, 0), (XY, 1), (X, 0)],
            Scheme::Tref => &[(X, 1), (X, 0), (Y, 1), (Y, 0)],
        }
    }

    pub fn param_count(self) -> usize {
        self.right_template().len()
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scheme::T1 => "T1",
            Scheme::T2 => "T2",
            Scheme::T3 => "T3",
            Scheme::T4 => "T4",
            Scheme::T5 => "T5",
            Scheme::T6 => "T6",
            Scheme::Tref => "TREF",
        };
        f.write_str(s)
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

impl Serialize for Scheme {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scheme {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(de)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Gate angle of one step when `n_steps` steps cover `[0, t_total]` under
/// `H = −J Σ (S̃ˣS̃ˣ + S̃ʸS̃ʸ)`.
pub fn step_angle(j: f64, t_total: f64, n_steps: usize) -> f64 {
    -j * t_total / n_steps as f64
}

fn from_template(template: &[(Generator, usize)], angles: impl Iterator<Item = f64>) -> Circuit {
    Circuit {
        n_qutrits: N_QUTRITS,
        gates: template
            .iter()
            .zip(angles)
            .map(|(&(g, s), a)| GateInstance::new(g, s, a))
            .collect(),
    }
}

/// One Trotter step with every gate at angle `theta`.
pub fn wl_circuit(scheme: Scheme, theta: f64) -> Circuit {
    from_template(scheme.left_template(), std::iter::repeat(theta))
}

pub fn wr_circuit(scheme: Scheme, params: &[f64]) -> Result<Circuit> {
    if params.len() != scheme.param_count() {
        return Err(Error::ParamCount {
            scheme: scheme.to_string(),
            expected: scheme.param_count(),
            found: params.len(),
        });
    }
    Ok(from_template(scheme.right_template(), params.iter().copied()))
}

pub fn trotter_circuit(scheme: Scheme, theta: f64, n_steps: usize) -> Result<Circuit> {
    if n_steps == 0 {
        return Err(Error::Precondition("n_steps must be at least 1".into()));
    }
    let step = wl_circuit(scheme, theta);
    let mut c = Circuit::new(N_QUTRITS);
    for _ in 0..n_steps {
        c.extend_from(&step);
    }
    Ok(c)
}

/// `C(W_L^{n_b}, W_R(params)^{n_b})` with the left side precomputed.
pub struct ReflectionCost {
    scheme: Scheme,
    n_b: usize,
    left_power: CMatrix,
}

impl ReflectionCost {
    pub fn new(scheme: Scheme, theta: f64, n_b: usize) -> Result<Self> {
        if n_b == 0 {
            return Err(Error::Precondition("n_b must be at least 1".into()));
        }
        let wl = wl_circuit(scheme, theta).unitary_fast()?;
        Ok(Self {
            scheme,
            n_b,
            left_power: matrix_power(&wl, n_b),
        })
    }

    pub fn eval(&self, params: &[f64]) -> f64 {
        let Ok(c) = wr_circuit(self.scheme, params) else {
            return f64::NAN;
        };
        let mut u = identity(pow3(N_QUTRITS));
        if c.evolve_columns(&mut u).is_err() {
            return f64::NAN;
        }
        let right_power = matrix_power(&u, self.n_b);
        infidelity_unchecked(&self.left_power, &right_power, u.nrows() as f64)
    }
}

/// Fit the mirrored step so that `n_b` copies of it reproduce `n_b` Trotter
/// steps at angle `theta`. The search starts from all parameters equal to
/// `theta`.
pub fn optimize_reflection(scheme: Scheme, theta: f64, n_b: usize, cfg: &OptimizerConfig) -> Result<OptResult> {
    let cost = ReflectionCost::new(scheme, theta, n_b)?;
    let init = vec![theta; scheme.param_count()];
    minimize(&|p: &[f64]| cost.eval(p), &init, cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub original_gate_count: usize,
    pub compressed_gate_count: usize,
    /// Number of `W_R^{n_b}` insertions.
    pub substitutions_performed: usize,
    pub gates_merged: usize,
    /// Infidelity between the compressed and uncompressed circuits.
    pub max_unitary_deviation: Option<f64>,
}

/// Replace Trotter blocks by mirrored ones and merge neighbours.
///
/// Walking left to right: keep one `W_L`, replace the next `n_b` blocks with
/// `W_R(params)`, repeat. A tail shorter than `n_b` blocks after a kept
/// `W_L` stays as `W_L`. Gates that meet at block boundaries with the same
/// generator and sites are then fused by [`merge_pass`]. The report carries
/// the infidelity against the uncompressed circuit.
pub fn compress(
    scheme: Scheme,
    theta: f64,
    n_steps: usize,
    n_b: usize,
    params: &[f64],
) -> Result<(Circuit, CompressionReport)> {
    let (merged, mut report) = compressed_circuit(scheme, theta, n_steps, n_b, params)?;
    let uncompressed = trotter_circuit(scheme, theta, n_steps)?;
    report.max_unitary_deviation = Some(infidelity_unchecked(
        &uncompressed.unitary_fast()?,
        &merged.unitary_fast()?,
        pow3(N_QUTRITS) as f64,
    ));
    Ok((merged, report))
}

/// [`compress`] without the unitary comparison.
pub fn compressed_circuit(
    scheme: Scheme,
    theta: f64,
    n_steps: usize,
    n_b: usize,
    params: &[f64],
) -> Result<(Circuit, CompressionReport)> {
    if n_b == 0 || n_steps < n_b + 1 {
        return Err(Error::Precondition(format!(
            "compression needs n_steps >= n_b + 1 and n_b >= 1 (n_steps = {n_steps}, n_b = {n_b})"
        )));
    }
    let wl = wl_circuit(scheme, theta);
    let wr = wr_circuit(scheme, params)?;

    let mut raw = Circuit::new(N_QUTRITS);
    let mut substitutions = 0;
    let mut pos = 0;
    while pos < n_steps {
        raw.extend_from(&wl);
        pos += 1;
        if n_steps - pos >= n_b {
            for _ in 0..n_b {
                raw.extend_from(&wr);
            }
            pos += n_b;
            substitutions += 1;
        } else {
            while pos < n_steps {
                raw.extend_from(&wl);
                pos += 1;
            }
        }
    }

    let merged = merge_pass(&raw);
    let report = CompressionReport {
        original_gate_count: raw.len(),
        compressed_gate_count: merged.len(),
        substitutions_performed: substitutions,
        gates_merged: raw.len() - merged.len(),
        max_unitary_deviation: None,
    };
    Ok((merged, report))
}

/// Number of gates saved by [`compress`], from closed-form counting.
///
/// Supported pairs are `(T1, 1)`, `(T3, 2)`, `(T2, 4)` and `(T2, 5)`; for
/// `(T2, 4)` the formula `⌊2n/5⌋ − 1` is exact only when `5 | n`.
pub fn predicted_reduced_gates(scheme: Scheme, n_b: usize, n: usize) -> Result<usize> {
    let unsupported = || Error::UnsupportedCountFormula {
        scheme: scheme.to_string(),
        nb: n_b,
    };
    if n < n_b + 1 {
        return Err(Error::Precondition(format!("n = {n} is too short for n_b = {n_b}")));
    }
    match (scheme, n_b) {
        (Scheme::T1, 1) => Ok(n - 1),
        (Scheme::T3, 2) => Ok(if n % 3 == 0 { 2 * n / 3 - 1 } else { 2 * (n / 3) }),
        (Scheme::T2, 4) => Ok(2 * n / 5 - 1),
        (Scheme::T2, 5) => Ok(if n % 6 == 0 { n / 3 - 1 } else { 2 * (n / 6) }),
        _ => Err(unsupported()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius_distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn template_shapes() {
        for s in Scheme::ALL {
            assert_eq!(s.left_template().len(), s.right_template().len(), "{s}");
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        let counts: Vec<usize> = Scheme::ALL.iter().map(|s| s.param_count()).collect();
        assert_eq!(counts, [4, 4, 2, 4, 3, 3, 4]);
        assert!(matches!("T7".parse::<Scheme>(), Err(Error::UnknownScheme(_))));
        assert_eq!(serde_json::to_string(&Scheme::Tref).unwrap(), "\"TREF\"");
    }

    #[test]
    fn left_circuits() {
        let c = wl_circuit(Scheme::T1, 0.3);
        let want = [
            GateInstance::axis(Axis::X, 0, 0.3),
            GateInstance::axis(Axis::X, 1, 0.3),
            GateInstance::axis(Axis::Y, 0, 0.3),
            GateInstance::axis(Axis::Y, 1, 0.3),
        ];
        assert_eq!(c.gates, want);
        assert_eq!(wl_circuit(Scheme::T3, 0.1).gates, [GateInstance::xy(0, 0.1), GateInstance::xy(1, 0.1)]);
        assert_eq!(
            wl_circuit(Scheme::T5, 0.2).gates,
            [
                GateInstance::xy(0, 0.2),
                GateInstance::axis(Axis::X, 1, 0.2),
                GateInstance::axis(Axis::Y, 1, 0.2)
            ]
        );
    }

    #[test]
    fn right_circuits() {
        let c = wr_circuit(Scheme::T1, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(
            c.gates,
            [
                GateInstance::axis(Axis::Y, 1, 1.0),
                GateInstance::axis(Axis::Y, 0, 2.0),
                GateInstance::axis(Axis::X, 1, 3.0),
                GateInstance::axis(Axis::X, 0, 4.0),
            ]
        );
        assert_eq!(
            wr_circuit(Scheme::T3, &[0.5, 0.6]).unwrap().gates,
            [GateInstance::xy(1, 0.5), GateInstance::xy(0, 0.6)]
        );
        assert!(matches!(
            wr_circuit(Scheme::T3, &[0.5]),
            Err(Error::ParamCount { expected: 2, found: 1, .. })
        ));
    }

    #[test]
    fn reference_pair_is_exact_at_equal_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let theta = rng.random_range(-3.0..3.0);
            let l = wl_circuit(Scheme::Tref, theta).unitary_fast().unwrap();
            let r = wr_circuit(Scheme::Tref, &[theta; 4]).unwrap().unitary_fast().unwrap();
            assert!(frobenius_distance(&l, &r) < 1e-12, "{theta}");
        }
    }

    #[test]
    fn zero_angle_costs_nothing() {
        for s in Scheme::ALL {
            let cost = ReflectionCost::new(s, 0.0, 3).unwrap();
            assert!(cost.eval(&vec![0.0; s.param_count()]) < 1e-14, "{s}");
        }
    }

    #[test]
    fn trotter_lengths() {
        assert_eq!(trotter_circuit(Scheme::T1, 0.1, 1).unwrap().len(), 4);
        assert_eq!(trotter_circuit(Scheme::T3, 0.1, 200).unwrap().len(), 400);
        assert!(trotter_circuit(Scheme::T3, 0.1, 0).is_err());
    }

    /// Saved gates from an independent count of boundary fusions: each kept
    /// `W_L` fuses once with the `W_R` run after it and once with the run
    /// before it.
    fn boundary_count(n: usize, n_b: usize) -> usize {
        let p = n / (n_b + 1);
        let r = n - p * (n_b + 1);
        if r == 0 {
            2 * p - 1
        } else {
            2 * p
        }
    }

    #[test]
    fn compression_counts_match_boundary_arithmetic() {
        for (scheme, nb) in [(Scheme::T1, 1), (Scheme::T2, 4), (Scheme::T2, 5), (Scheme::T3, 2), (Scheme::T2, 2)] {
            let params = vec![0.01; scheme.param_count()];
            for n in nb + 1..40 {
                let (c, rep) = compress(scheme, 0.01, n, nb, &params).unwrap();
                assert_eq!(rep.gates_merged, boundary_count(n, nb), "{scheme} nb={nb} n={n}");
                assert_eq!(rep.original_gate_count - rep.compressed_gate_count, rep.gates_merged);
                assert_eq!(c.len(), rep.compressed_gate_count);
            }
        }
    }

    #[test]
    fn headline_counts() {
        let (c, _) = compress(Scheme::T1, 0.02, 200, 1, &[0.02; 4]).unwrap();
        assert_eq!(c.len(), 601);
        let (_, rep) = compress(Scheme::T3, 0.02, 200, 2, &[0.02; 2]).unwrap();
        assert_eq!((rep.substitutions_performed, rep.gates_merged), (66, 132));
        for n in [30, 60, 120, 200] {
            for nb in [4, 5] {
                let (_, rep) = compress(Scheme::T2, 0.02, n, nb, &[0.02; 4]).unwrap();
                assert_eq!(rep.gates_merged, predicted_reduced_gates(Scheme::T2, nb, n).unwrap());
            }
        }
    }

    #[test]
    fn predicted_counts() {
        assert_eq!(predicted_reduced_gates(Scheme::T3, 2, 200).unwrap(), 132);
        assert_eq!(predicted_reduced_gates(Scheme::T2, 5, 60).unwrap(), 19);
        assert_eq!(predicted_reduced_gates(Scheme::T2, 5, 62).unwrap(), 20);
        assert_eq!(predicted_reduced_gates(Scheme::T1, 1, 200).unwrap(), 199);
        assert!(matches!(
            predicted_reduced_gates(Scheme::T4, 2, 30),
            Err(Error::UnsupportedCountFormula { .. })
        ));
        for n in 4..100 {
            assert_eq!(predicted_reduced_gates(Scheme::T3, 2, n).unwrap(), boundary_count(n, 2));
            assert_eq!(predicted_reduced_gates(Scheme::T2, 5, n.max(6)).unwrap(), boundary_count(n.max(6), 5));
        }
    }

    #[test]
    fn compress_rejects_short_circuits() {
        assert!(compress(Scheme::T3, 0.1, 2, 2, &[0.1; 2]).is_err());
        assert!(compress(Scheme::T3, 0.1, 5, 0, &[0.1; 2]).is_err());
        assert!(compress(Scheme::T3, 0.1, 5, 2, &[0.1; 3]).is_err());
    }

    #[test]
    fn compression_with_exact_pair_is_lossless() {
        let theta = -0.025;
        let (_, rep) = compress(Scheme::Tref, theta, 30, 3, &[theta; 4]).unwrap();
        assert!(rep.max_unitary_deviation.unwrap() < 1e-12);
    }

    #[test]
    fn compression_error_respects_composed_bound() {
        use crate::optimizer::composed_infidelity_bound;
        let cfg = OptimizerConfig {
            restarts: 4,
            ..OptimizerConfig::default()
        };
        for (scheme, nb, j) in [(Scheme::T3, 2, 0.55), (Scheme::T2, 4, 1.0), (Scheme::T5, 3, 0.1)] {
            let theta = step_angle(j, 5.0, 60);
            let fit = optimize_reflection(scheme, theta, nb, &cfg).unwrap();
            let (_, rep) = compress(scheme, theta, 60, nb, &fit.best_params).unwrap();
            // each substitution of W_L^nb is off by at most the fitted infidelity
            let bound = composed_infidelity_bound(fit.best_infidelity, rep.substitutions_performed);
            let dev = rep.max_unitary_deviation.unwrap();
            assert!(dev <= bound + 1e-12, "{scheme} nb={nb}: {dev:e} > {bound:e}");
        }
    }

    #[test]
    fn reference_pair_optimizes_to_zero() {
        let cfg = OptimizerConfig {
            restarts: 2,
            ..OptimizerConfig::default()
        };
        let res = optimize_reflection(Scheme::Tref, 0.3, 1, &cfg).unwrap();
        assert!(res.best_infidelity <= 1e-7, "{res:?}");
    }
}
