//! Spin-1 operators, permutations and conjugation unitaries on a single qutrit.
//!
//! Two representations are provided. The *standard* one is the usual
//! `z`-basis form with `S^z = diag(1, 0, -1)`; the *adjoint* one writes each
//! operator as a two-level embedding of `-Y`, which makes `(S̃^a)^2` a
//! projector and keeps every two-qutrit gate in closed form. All matrices are
//! literal entry tables.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, re, spin_distance, C64, CMatrix, SpinMatrix, I};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// The qutrit level left untouched by `S̃^a` in the adjoint representation.
    pub fn spectator_level(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// `(b, c)` such that `[S^a, S^b] = i S^c` with `(a, b, c)` cyclic.
    fn cyclic_next(self) -> (Axis, Axis) {
        match self {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::Z, Axis::X),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::Precondition(format!("unknown axis {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Representation {
    Standard,
    Adjoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_value(v: i8) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
}

/// Integer weights `(s_x, s_y, s_z)` of a generator `Σ_a s_a S^a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i8; 3]", into = "[i8; 3]")]
pub struct AxisWeights {
    x: i8,
    y: i8,
    z: i8,
}

impl AxisWeights {
    pub fn new(x: i8, y: i8, z: i8) -> Result<Self> {
        let ok = |v: i8| (-1..=1).contains(&v);
        if !(ok(x) && ok(y) && ok(z)) || (x == 0 && y == 0 && z == 0) {
            return Err(Error::InvalidWeights { x, y, z });
        }
        Ok(Self { x, y, z })
    }

    pub fn single(axis: Axis) -> Self {
        match axis {
            Axis::X => Self { x: 1, y: 0, z: 0 },
            Axis::Y => Self { x: 0, y: 1, z: 0 },
            Axis::Z => Self { x: 0, y: 0, z: 1 },
        }
    }

    pub fn x(&self) -> i8 {
        self.x
    }

    pub fn y(&self) -> i8 {
        self.y
    }

    pub fn z(&self) -> i8 {
        self.z
    }

    pub fn get(&self, axis: Axis) -> i8 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    pub fn support(&self) -> usize {
        [self.x, self.y, self.z].iter().filter(|&&v| v != 0).count()
    }

    /// The axis when exactly one weight is nonzero.
    pub fn single_axis(&self) -> Option<Axis> {
        if self.support() != 1 {
            return None;
        }
        Axis::ALL.into_iter().find(|&a| self.get(a) != 0)
    }

    /// The same generator up to overall sign, normalized so the first nonzero
    /// weight is `+1`. `G ⊗ G` is unchanged by `G → -G`.
    pub fn canonical(&self) -> Self {
        let first = [self.x, self.y, self.z]
            .into_iter()
            .find(|&v| v != 0)
            .unwrap_or(1);
        Self {
            x: self.x * first,
            y: self.y * first,
            z: self.z * first,
        }
    }

    /// All 26 valid weight triples, in lexicographic order.
    pub fn all() -> Vec<Self> {
        let mut out = Vec::with_capacity(26);
        for x in -1..=1 {
            for y in -1..=1 {
                for z in -1..=1 {
                    if let Ok(w) = Self::new(x, y, z) {
                        out.push(w);
                    }
                }
            }
        }
        out
    }
}

impl TryFrom<[i8; 3]> for AxisWeights {
    type Error = Error;

    fn try_from(v: [i8; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<AxisWeights> for [i8; 3] {
    fn from(w: AxisWeights) -> Self {
        [w.x, w.y, w.z]
    }
}

impl fmt::Display for AxisWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

fn mat(rows: [[C64; 3]; 3]) -> SpinMatrix {
    SpinMatrix::new(
        rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0],
        rows[2][1], rows[2][2],
    )
}

const O: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const NEG_I: C64 = C64 { re: 0.0, im: -1.0 };

pub fn spin_operator(axis: Axis, rep: Representation) -> SpinMatrix {
    match rep {
        Representation::Standard => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            match axis {
                Axis::X => mat([[O, re(h), O], [re(h), O, re(h)], [O, re(h), O]]),
                Axis::Y => mat([[O, c(0.0, -h), O], [c(0.0, h), O, c(0.0, -h)], [O, c(0.0, h), O]]),
                Axis::Z => mat([[ONE, O, O], [O, O, O], [O, O, -ONE]]),
            }
        }
        Representation::Adjoint => match axis {
            Axis::X => mat([[O, O, O], [O, O, I], [O, NEG_I, O]]),
            Axis::Y => mat([[O, O, I], [O, O, O], [NEG_I, O, O]]),
            Axis::Z => mat([[O, I, O], [NEG_I, O, O], [O, O, O]]),
        },
    }
}

/// Named single-qutrit permutations and basis-change unitaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Conjugation {
    Py,
    Pz,
    U(Sign),
    V(Sign),
    W(Sign),
    M(Sign, Sign),
}

impl Conjugation {
    pub fn all() -> Vec<Conjugation> {
        let signs = [Sign::Plus, Sign::Minus];
        let mut out = vec![Conjugation::Py, Conjugation::Pz];
        for s in signs {
            out.extend([Conjugation::U(s), Conjugation::V(s), Conjugation::W(s)]);
        }
        for s1 in signs {
            for s2 in signs {
                out.push(Conjugation::M(s1, s2));
            }
        }
        out
    }
}

pub fn conjugation_matrix(kind: Conjugation) -> SpinMatrix {
    let r2 = std::f64::consts::SQRT_2;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        Conjugation::Py => mat([[O, ONE, O], [ONE, O, O], [O, O, ONE]]),
        Conjugation::Pz => mat([[O, ONE, O], [O, O, ONE], [ONE, O, O]]),
        Conjugation::U(s) => {
            let s = s.value();
            mat([[re(-1.0), O, re(s)], [I, O, c(0.0, s)], [O, re(r2), O]]) * re(h)
        }
        Conjugation::V(s) => {
            let s = s.value();
            mat([[O, I, c(0.0, s)], [O, re(-s), ONE], [re(r2), O, O]]) * re(h)
        }
        Conjugation::W(s) => {
            let s = s.value();
            mat([[re(-s), ONE, O], [O, O, re(r2)], [I, c(0.0, s), O]]) * re(h)
        }
        Conjugation::M(s1, s2) => {
            let (s1, s2) = (s1.value(), s2.value());
            let r3 = 3f64.sqrt();
            mat([
                [c(0.0, -s1 * r3), c(0.0, r3), O],
                [c(0.0, -s2), c(0.0, -s1 * s2), c(0.0, 2.0)],
                [re(s2 * r2), re(s1 * s2 * r2), re(r2)],
            ]) * re(1.0 / 6f64.sqrt())
        }
    }
}

/// `Σ_a s_a S^a` in the requested representation.
pub fn weighted_generator(w: AxisWeights, rep: Representation) -> SpinMatrix {
    Axis::ALL
        .into_iter()
        .fold(SpinMatrix::zeros(), |acc, a| {
            acc + spin_operator(a, rep) * re(f64::from(w.get(a)))
        })
}

/// Conjugation `C` and scale `k` with `C† S̃^a C = G / k` for the normalized
/// generator `G = Σ s_b S̃^b`, where `a` is the returned axis.
///
/// Only defined for two- and three-axis weights; single-axis weights need no
/// conjugation.
pub fn conjugation_for(w: AxisWeights) -> Option<(Conjugation, Axis, f64)> {
    let w = w.canonical();
    let (x, y, z) = (w.x, w.y, w.z);
    let sqrt2 = std::f64::consts::SQRT_2;
    match w.support() {
        // U_± relates (S̃^z ± S̃^x) to S̃^y, V_± relates (S̃^y ∓ S̃^z) to S̃^x,
        // W_± relates (S̃^x ∓ S̃^y) to S̃^z.
        2 if y == 0 => Some((
            Conjugation::U(Sign::from_value(z)?),
            Axis::Y,
            -sqrt2 * f64::from(z),
        )),
        2 if x == 0 => Some((Conjugation::V(Sign::from_value(-z)?), Axis::X, -sqrt2)),
        2 if z == 0 => Some((Conjugation::W(Sign::from_value(-y)?), Axis::Z, sqrt2)),
        3 => Some((
            Conjugation::M(Sign::from_value(-y)?, Sign::from_value(z)?),
            Axis::Z,
            3f64.sqrt(),
        )),
        _ => None,
    }
}

fn commutator(a: &SpinMatrix, b: &SpinMatrix) -> SpinMatrix {
    a * b - b * a
}

/// Largest residual over the exact algebraic identities of a representation:
/// the cyclic commutators, the `s = 1` Casimir, the odd/even power
/// identities, and for the adjoint form the projector squares and the
/// vanishing sandwiches `S̃^a S̃^b S̃^a`.
pub fn algebra_report(rep: Representation) -> f64 {
    let ops: Vec<SpinMatrix> = Axis::ALL.iter().map(|&a| spin_operator(a, rep)).collect();
    let idx = |a: Axis| a as usize;
    let mut worst: f64 = 0.0;

    for a in Axis::ALL {
        let (b, cc) = a.cyclic_next();
        let lhs = commutator(&ops[idx(a)], &ops[idx(b)]);
        worst = worst.max(spin_distance(&lhs, &(ops[idx(cc)] * I)));
    }

    let casimir: SpinMatrix = ops.iter().map(|s| s * s).sum();
    worst = worst.max(spin_distance(&casimir, &(SpinMatrix::identity() * re(2.0))));

    for s in &ops {
        // (S^a)^{2n} = (S^a)^2 and (S^a)^{2n+1} = S^a for n = 1..3
        let sq = s * s;
        let mut p = *s;
        for n in 2..=7u32 {
            p *= s;
            let expected = if n % 2 == 0 { sq } else { *s };
            worst = worst.max(spin_distance(&p, &expected));
        }
    }

    if rep == Representation::Adjoint {
        for a in Axis::ALL {
            let sq = ops[idx(a)] * ops[idx(a)];
            let mut diag = SpinMatrix::identity();
            diag[(a.spectator_level(), a.spectator_level())] = O;
            worst = worst.max(spin_distance(&sq, &diag));
            for b in Axis::ALL {
                if a != b {
                    let sandwich = ops[idx(a)] * ops[idx(b)] * ops[idx(a)];
                    worst = worst.max(sandwich.norm());
                }
            }
        }
    }
    worst
}

/// `max_a ‖U_+ S^a U_+† − S̃^a‖_F`.
pub fn basis_change_residual() -> f64 {
    let u = conjugation_matrix(Conjugation::U(Sign::Plus));
    Axis::ALL
        .into_iter()
        .map(|a| {
            let rotated = u * spin_operator(a, Representation::Standard) * u.adjoint();
            spin_distance(&rotated, &spin_operator(a, Representation::Adjoint))
        })
        .fold(0.0, f64::max)
}

/// Largest `‖M M† − I‖_F` over every conjugation matrix.
pub fn conjugation_unitarity_residual() -> f64 {
    Conjugation::all()
        .into_iter()
        .map(|k| {
            let m = conjugation_matrix(k);
            spin_distance(&(m * m.adjoint()), &SpinMatrix::identity())
        })
        .fold(0.0, f64::max)
}

/// Residuals of the conjugation relations `C† S̃^a C = (combination) / k`
/// for all `U_±`, `V_±`, `W_±`, `M_{±±}` and of `P_y`, `P_z` mapping `S̃^x`
/// onto `S̃^y`, `S̃^z`.
pub fn conjugation_relation_residual() -> f64 {
    let adj = |a| spin_operator(a, Representation::Adjoint);
    let sx = adj(Axis::X);
    let mut worst: f64 = 0.0;
    for (p, target) in [(Conjugation::Py, Axis::Y), (Conjugation::Pz, Axis::Z)] {
        let p = conjugation_matrix(p);
        worst = worst.max(spin_distance(&(p * sx * p.adjoint()), &adj(target)));
    }
    for w in AxisWeights::all() {
        if let Some((kind, axis, scale)) = conjugation_for(w) {
            let m = conjugation_matrix(kind);
            let lhs = m.adjoint() * adj(axis) * m;
            let rhs = weighted_generator(w.canonical(), Representation::Adjoint) * re(1.0 / scale);
            worst = worst.max(spin_distance(&lhs, &rhs));
        }
    }
    worst
}

fn pauli() -> (CMatrix, CMatrix, CMatrix) {
    let i2 = CMatrix::identity(2, 2);
    let x = CMatrix::from_row_slice(2, 2, &[O, ONE, ONE, O]);
    let y = CMatrix::from_row_slice(2, 2, &[O, NEG_I, I, O]);
    (i2, x, y)
}

/// `S̃^x` padded with a zero row and column to 4×4.
pub fn padded_adjoint_x() -> CMatrix {
    let sx = spin_operator(Axis::X, Representation::Adjoint);
    CMatrix::from_fn(4, 4, |i, j| if i < 3 && j < 3 { sx[(i, j)] } else { O })
}

/// The 2×2 ladder-like matrix `A = (−i X + Y) / 2`.
pub fn ladder_a() -> CMatrix {
    let (_, x, y) = pauli();
    (x * NEG_I + y) * re(0.5)
}

/// Residual of the literal two-qubit form `I₂ ⊗ A − A ⊗ I₂` against the
/// padded `S̃^x`. This form cannot reproduce the `(1, 2)` entry for any `A`,
/// so the residual is `√6` rather than zero.
pub fn padded_literal_residual() -> f64 {
    let (i2, _, _) = pauli();
    let a = ladder_a();
    let form = i2.kronecker(&a) - a.kronecker(&i2);
    crate::linalg::frobenius_distance(&form, &padded_adjoint_x())
}

/// Residual of `i (A ⊗ A† − A† ⊗ A)` against the padded `S̃^x`, which does
/// hold exactly.
pub fn padded_exchange_residual() -> f64 {
    let a = ladder_a();
    let ad = a.adjoint();
    let form = (a.kronecker(&ad) - ad.kronecker(&a)) * I;
    crate::linalg::frobenius_distance(&form, &padded_adjoint_x())
}
