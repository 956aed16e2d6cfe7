//! Exact turnover (Yang-Baxter-like) identities on three qutrits.
//!
//! With a common two-qutrit gate `R(θ)`,
//!
//! ```text
//! (R(α) ⊗ I)(I ⊗ R(β))(R(γ) ⊗ I) = (I ⊗ R(δ))(R(ε) ⊗ I)(I ⊗ R(ζ))
//! ```
//!
//! holds whenever `ε = α + γ` and `δ + ζ = β` (mod 2π). This module checks
//! it numerically for every supported generator, decomposes it into
//! effective-qubit blocks, and exposes it as a rewrite on [`Circuit`]s.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::circuit::{Circuit, GateInstance, Generator};
use crate::error::{Error, Result};
use crate::gates::closed_form_single_axis;
use crate::linalg::{frobenius_distance, identity, kron, re, to_dynamic, CMatrix, C64};
use crate::spin::{conjugation_for, conjugation_matrix, Axis, AxisWeights};

/// One instance of the turnover relation; `ε` and `ζ` are derived.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TurnoverInstance {
    pub generator: Generator,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl TurnoverInstance {
    pub fn new(generator: Generator, alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        Self {
            generator,
            alpha,
            beta,
            gamma,
            delta,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.alpha + self.gamma
    }

    pub fn zeta(&self) -> f64 {
        self.beta - self.delta
    }
}

/// `‖LHS − RHS‖_F` for an arbitrary gate family and all six angles.
pub fn relation_residual(r: impl Fn(f64) -> CMatrix, angles: [f64; 6]) -> f64 {
    let [alpha, beta, gamma, delta, epsilon, zeta] = angles;
    let i3 = identity(3);
    let left = |g: CMatrix| kron(&g, &i3);
    let right = |g: CMatrix| kron(&i3, &g);
    let lhs = left(r(alpha)) * right(r(beta)) * left(r(gamma));
    let rhs = right(r(delta)) * left(r(epsilon)) * right(r(zeta));
    frobenius_distance(&lhs, &rhs)
}

pub fn turnover_residual(t: &TurnoverInstance) -> f64 {
    let g = t.generator;
    relation_residual(
        |theta| g.matrix(theta),
        [t.alpha, t.beta, t.gamma, t.delta, t.epsilon(), t.zeta()],
    )
}

/// Maximum residual over the displayed single-axis chains with all angles
/// equal (and doubled where two gates fuse), plus the commutation of
/// same-axis neighbours.
pub fn simple_identity_suite(axis: Axis, alpha: f64) -> f64 {
    let g = |site, a| GateInstance::axis(axis, site, a);
    let u = |gates: Vec<GateInstance>| {
        Circuit::with_gates(3, gates)
            .and_then(|c| c.unitary())
            .expect("three-site chain")
    };
    let a2 = 2.0 * alpha;
    let chains = [
        vec![
            u(vec![g(0, alpha), g(1, alpha), g(0, alpha)]),
            u(vec![g(0, a2), g(1, alpha)]),
            u(vec![g(1, alpha), g(0, a2)]),
        ],
        vec![
            u(vec![g(1, alpha), g(0, alpha), g(1, alpha)]),
            u(vec![g(0, alpha), g(1, a2)]),
            u(vec![g(1, a2), g(0, alpha)]),
        ],
        vec![
            u(vec![g(0, alpha), g(1, a2), g(0, alpha)]),
            u(vec![g(1, alpha), g(0, a2), g(1, alpha)]),
        ],
        vec![
            u(vec![g(0, alpha), g(1, alpha)]),
            u(vec![g(1, alpha), g(0, alpha)]),
        ],
    ];
    chains
        .iter()
        .flat_map(|chain| chain.windows(2).map(|w| frobenius_distance(&w[0], &w[1])))
        .fold(0.0, f64::max)
}

/// `R(θ) = exp(+iθ G⊗G)` assembled by conjugating a single-axis gate,
/// `(C⊗C)† U_a(−k²θ) (C⊗C)`, where `C† S̃^a C = G/k`.
pub fn conjugated_family_gate(w: AxisWeights) -> Result<impl Fn(f64) -> CMatrix> {
    let (kind, axis, scale) = conjugation_for(w).ok_or_else(|| {
        Error::Precondition(format!("weights {w} are not a conjugated two- or three-axis family"))
    })?;
    let c = to_dynamic(&conjugation_matrix(kind));
    let cc = kron(&c, &c);
    let cc_dag = cc.adjoint();
    let k2 = scale * scale;
    Ok(move |theta: f64| &cc_dag * closed_form_single_axis(axis, -k2 * theta) * &cc)
}

/// Turnover residual for a conjugated family under the angle constraint.
pub fn conjugated_family_residual(w: AxisWeights, alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<f64> {
    let r = conjugated_family_gate(w)?;
    Ok(relation_residual(
        r,
        [alpha, beta, gamma, delta, alpha + gamma, beta - delta],
    ))
}

/// Generator families exercised by the sampled suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    SingleAxis,
    AxisPairs,
    AllThree,
}

impl Family {
    pub fn generators(self) -> Vec<Generator> {
        match self {
            Family::SingleAxis => Axis::ALL.into_iter().map(Generator::Axis).collect(),
            Family::AxisPairs => canonical_weights(2).into_iter().map(Generator::Weighted).collect(),
            Family::AllThree => canonical_weights(3).into_iter().map(Generator::Weighted).collect(),
        }
    }
}

fn canonical_weights(support: usize) -> Vec<AxisWeights> {
    let mut out: Vec<AxisWeights> = AxisWeights::all()
        .into_iter()
        .filter(|w| w.support() == support)
        .map(|w| w.canonical())
        .collect();
    out.dedup();
    out.sort_by_key(|w| <[i8; 3]>::from(*w));
    out.dedup();
    out
}

/// Angle quadruples drawn uniformly from `[0, 2π)⁴`.
pub fn sample_angles(samples: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| std::array::from_fn(|_| rng.random_range(0.0..TAU)))
        .collect()
}

/// Largest residual over `samples` random constrained quadruples. With
/// `epsilon_shift != 0` the constraint is deliberately broken and the
/// smallest residual is returned instead, so callers can check that every
/// sample fails.
pub fn sampled_turnover(generator: Generator, samples: usize, seed: u64, epsilon_shift: f64) -> f64 {
    let angles = sample_angles(samples, seed);
    let residuals = angles.par_iter().map(|&[a, b, g, d]| {
        relation_residual(|t| generator.matrix(t), [a, b, g, d, a + g + epsilon_shift, b - d])
    });
    if epsilon_shift == 0.0 {
        residuals.reduce(|| 0.0, f64::max)
    } else {
        residuals.reduce(|| f64::INFINITY, f64::min)
    }
}

/// Ordering of the 27 three-qutrit basis states into effective-qubit
/// subspaces for one axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceBlocks {
    /// `permutation[k]` is the original basis index placed at position `k`.
    pub permutation: Vec<usize>,
    pub block_sizes: Vec<usize>,
    /// Active-site pattern of each block, bit 2 for site 0 down to bit 0 for site 2.
    pub patterns: Vec<u8>,
}

/// Group basis states by which sites sit on the spectator level of `axis`
/// (level 0 for `x`). Blocks follow the patterns `000, 00a, 0a0, 0ab, a00,
/// a0b, ab0, abc`; inside a block states keep their original order.
pub fn qubit_subspace_blocks(axis: Axis) -> SubspaceBlocks {
    let spectator = axis.spectator_level();
    let pattern_of = |index: usize| -> u8 {
        let digits = [index / 9, (index / 3) % 3, index % 3];
        digits
            .iter()
            .fold(0u8, |acc, &d| (acc << 1) | u8::from(d != spectator))
    };
    let mut permutation = Vec::with_capacity(27);
    let mut block_sizes = Vec::with_capacity(8);
    let mut patterns = Vec::with_capacity(8);
    for pattern in 0u8..8 {
        let members: Vec<usize> = (0..27).filter(|&i| pattern_of(i) == pattern).collect();
        block_sizes.push(members.len());
        patterns.push(pattern);
        permutation.extend(members);
    }
    SubspaceBlocks {
        permutation,
        block_sizes,
        patterns,
    }
}

impl SubspaceBlocks {
    /// `P` with `(P M Pᵀ)[k, l] = M[perm[k], perm[l]]`.
    pub fn permutation_matrix(&self) -> CMatrix {
        let n = self.permutation.len();
        let mut p = CMatrix::zeros(n, n);
        for (k, &orig) in self.permutation.iter().enumerate() {
            p[(k, orig)] = re(1.0);
        }
        p
    }

    pub fn conjugate(&self, m: &CMatrix) -> CMatrix {
        CMatrix::from_fn(m.nrows(), m.ncols(), |k, l| {
            m[(self.permutation[k], self.permutation[l])]
        })
    }

    fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.block_sizes
            .iter()
            .map(|s| {
                let o = acc;
                acc += s;
                o
            })
            .collect()
    }

    /// Frobenius norm of everything outside the diagonal blocks of an
    /// already-permuted matrix.
    pub fn off_block_mass(&self, permuted: &CMatrix) -> f64 {
        let mut owner = vec![0; permuted.nrows()];
        for (b, (&o, &s)) in self.offsets().iter().zip(&self.block_sizes).enumerate() {
            owner[o..o + s].iter_mut().for_each(|x| *x = b);
        }
        let mut mass = 0.0;
        for i in 0..permuted.nrows() {
            for j in 0..permuted.ncols() {
                if owner[i] != owner[j] {
                    mass += permuted[(i, j)].norm_sqr();
                }
            }
        }
        mass.sqrt()
    }

    pub fn block(&self, permuted: &CMatrix, b: usize) -> CMatrix {
        let o = self.offsets()[b];
        let s = self.block_sizes[b];
        permuted.view((o, o), (s, s)).into_owned()
    }
}

/// Outcome of decomposing both sides of a single-axis turnover into
/// effective-qubit blocks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubspaceCheck {
    /// Largest off-block Frobenius mass of either permuted side.
    pub off_block_mass: f64,
    /// Largest deviation of a block from its predicted qubit operator.
    pub block_residual: f64,
    /// `‖LHS₈ − RHS₈‖_F` on the all-active 8×8 block.
    pub qubit_turnover_residual: f64,
}

/// On a block, a gate acts as `e^{−iθ Y⊗Y}` when both of its sites are
/// active (off the spectator level) and as the identity otherwise, because
/// `S̃^a` restricted to the two active levels is `−Y`.
fn predicted_block(pattern: u8, gates: &[(usize, f64)]) -> CMatrix {
    let active: Vec<usize> = (0..3).filter(|s| pattern & (4 >> s) != 0).collect();
    let k = active.len();
    let mut out = identity(1 << k);
    for &(site, theta) in gates {
        let (Some(a), Some(b)) = (
            active.iter().position(|&x| x == site),
            active.iter().position(|&x| x == site + 1),
        ) else {
            continue;
        };
        // active sites are adjacent qubits in block order
        debug_assert_eq!(b, a + 1);
        let g = kron(&kron(&identity(1 << a), &qubit_yy(theta)), &identity(1 << (k - a - 2)));
        out = g * out;
    }
    out
}

pub fn subspace_check(axis: Axis, alpha: f64, beta: f64, gamma: f64, delta: f64) -> SubspaceCheck {
    let blocks = qubit_subspace_blocks(axis);
    let lhs_gates = [(0, gamma), (1, beta), (0, alpha)];
    let rhs_gates = [(1, beta - delta), (0, alpha + gamma), (1, delta)];
    let side = |gates: &[(usize, f64)]| {
        let c = Circuit {
            n_qutrits: 3,
            gates: gates.iter().map(|&(s, a)| GateInstance::axis(axis, s, a)).collect(),
        };
        blocks.conjugate(&c.unitary().expect("three-qutrit circuit"))
    };
    let (lhs, rhs) = (side(&lhs_gates), side(&rhs_gates));
    let off_block_mass = blocks.off_block_mass(&lhs).max(blocks.off_block_mass(&rhs));
    let mut block_residual: f64 = 0.0;
    for (b, &pattern) in blocks.patterns.iter().enumerate() {
        for (m, gates) in [(&lhs, &lhs_gates), (&rhs, &rhs_gates)] {
            let d = frobenius_distance(&blocks.block(m, b), &predicted_block(pattern, gates));
            block_residual = block_residual.max(d);
        }
    }
    let last = blocks.patterns.len() - 1;
    SubspaceCheck {
        off_block_mass,
        block_residual,
        qubit_turnover_residual: frobenius_distance(&blocks.block(&lhs, last), &blocks.block(&rhs, last)),
    }
}

/// Which way a turnover rewrite moves the middle gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Sites `(i, i+1, i)` become `(i+1, i, i+1)`.
    LeftToRight,
    /// Sites `(i+1, i, i+1)` become `(i, i+1, i)`.
    RightToLeft,
}

/// Replace the three gates starting at `at` by their mirrored triple.
///
/// For gates applied in order with angles `(a₁, a₂, a₃)` the mirrored
/// triple gets `(a₂/2, a₁ + a₃, a₂/2)`: the outer pair fuses into the new
/// middle gate and the old middle angle is split evenly.
pub fn rewrite_turnover(c: &Circuit, at: usize, direction: Direction) -> Result<Circuit> {
    if at + 3 > c.len() {
        return Err(Error::PatternMismatch {
            index: at,
            reason: format!("need three gates starting here, circuit has {}", c.len()),
        });
    }
    let triple = &c.gates[at..at + 3];
    let generator = triple[0].generator.normalized();
    if generator == Generator::XyPair {
        return Err(Error::PatternMismatch {
            index: at,
            reason: "the xy bond gate has no exact turnover".into(),
        });
    }
    for (k, g) in triple.iter().enumerate().skip(1) {
        if g.generator.normalized() != generator {
            return Err(Error::PatternMismatch {
                index: at + k,
                reason: format!("generator {} differs from {}", g.generator, triple[0].generator),
            });
        }
    }
    let outer = triple[0].site;
    let inner = match direction {
        Direction::LeftToRight => Some(outer + 1).filter(|&s| s + 2 <= c.n_qutrits),
        Direction::RightToLeft => outer.checked_sub(1),
    };
    let Some(inner) = inner else {
        return Err(Error::PatternMismatch {
            index: at,
            reason: format!("no room for a {direction:?} turnover starting on site {outer}"),
        });
    };
    let expected = [outer, inner, outer];
    for (k, g) in triple.iter().enumerate() {
        if g.site != expected[k] {
            return Err(Error::PatternMismatch {
                index: at + k,
                reason: format!("expected a gate on site {} for a {direction:?} turnover", expected[k]),
            });
        }
    }
    let half = triple[1].angle / 2.0;
    let fused = triple[0].angle + triple[2].angle;
    let g = triple[0].generator;
    let replacement = [
        GateInstance::new(g, inner, half),
        GateInstance::new(g, outer, fused),
        GateInstance::new(g, inner, half),
    ];
    let mut out = c.clone();
    out.gates.splice(at..at + 3, replacement);
    Ok(out)
}

/// `e^{-iθ Y⊗Y} = cos θ I − i sin θ Y⊗Y`.
pub fn qubit_yy(theta: f64) -> CMatrix {
    let y = CMatrix::from_row_slice(2, 2, &[re(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), re(0.0)]);
    identity(4) * re(theta.cos()) - kron(&y, &y) * C64::new(0.0, theta.sin())
}
