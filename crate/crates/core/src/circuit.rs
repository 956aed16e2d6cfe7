//! Layered two-qutrit circuits on a line of qutrits.
//!
//! Gates are stored in application order: `gates[0]` acts on the state
//! first. The unitary of `[g1, g2, g3]` is therefore `G3 · G2 · G1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{embed, gate_matrix, xy_pair_gate};
use crate::linalg::{identity, pow3, wrap_angle, CMatrix, CVector, C64, MAX_SITES};
use crate::spin::{Axis, AxisWeights};

/// The generator shared by a gate's exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Generator {
    /// `S̃^a ⊗ S̃^a`.
    Axis(Axis),
    /// `S̃^x ⊗ S̃^x + S̃^y ⊗ S̃^y`.
    XyPair,
    /// `(Σ s_a S̃^a) ⊗ (Σ s_a S̃^a)`.
    Weighted(AxisWeights),
}

impl Generator {
    pub fn matrix(&self, angle: f64) -> CMatrix {
        match *self {
            Generator::Axis(a) => gate_matrix(AxisWeights::single(a), angle),
            Generator::XyPair => xy_pair_gate(angle),
            Generator::Weighted(w) => gate_matrix(w, angle),
        }
    }

    /// Single-axis weights collapse onto [`Generator::Axis`] so that equal
    /// gates compare equal.
    pub fn normalized(self) -> Self {
        match self {
            Generator::Weighted(w) => match w.canonical().single_axis() {
                Some(a) => Generator::Axis(a),
                None => Generator::Weighted(w.canonical()),
            },
            g => g,
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Axis(a) => write!(f, "{a}"),
            Generator::XyPair => f.write_str("xy"),
            Generator::Weighted(w) => write!(f, "w{},{},{}", w.x(), w.y(), w.z()),
        }
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xy" => Ok(Generator::XyPair),
            _ if s.starts_with('w') => {
                let parts: Vec<i8> = s[1..]
                    .split(',')
                    .map(|p| p.trim().parse::<i8>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Precondition(format!("bad weighted generator {s:?}")))?;
                match parts.as_slice() {
                    &[x, y, z] => Ok(Generator::Weighted(AxisWeights::new(x, y, z)?)),
                    _ => Err(Error::Precondition(format!("bad weighted generator {s:?}"))),
                }
            }
            _ => Ok(Generator::Axis(s.parse()?)),
        }
    }
}

impl Serialize for Generator {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Generator {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A two-qutrit gate on sites `(site, site + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateInstance {
    #[serde(rename = "gen")]
    pub generator: Generator,
    pub site: usize,
    pub angle: f64,
}

impl GateInstance {
    pub fn new(generator: Generator, site: usize, angle: f64) -> Self {
        Self {
            generator,
            site,
            angle,
        }
    }

    pub fn axis(axis: Axis, site: usize, angle: f64) -> Self {
        Self::new(Generator::Axis(axis), site, angle)
    }

    pub fn xy(site: usize, angle: f64) -> Self {
        Self::new(Generator::XyPair, site, angle)
    }

    pub fn matrix(&self) -> CMatrix {
        self.generator.matrix(self.angle)
    }

    fn overlaps(&self, other: &GateInstance) -> bool {
        self.site.abs_diff(other.site) < 2
    }

    fn same_slot(&self, other: &GateInstance) -> bool {
        self.site == other.site && self.generator.normalized() == other.generator.normalized()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    #[serde(rename = "n")]
    pub n_qutrits: usize,
    pub gates: Vec<GateInstance>,
}

impl Circuit {
    pub fn new(n_qutrits: usize) -> Self {
        Self {
            n_qutrits,
            gates: Vec::new(),
        }
    }

    pub fn with_gates(n_qutrits: usize, gates: Vec<GateInstance>) -> Result<Self> {
        let c = Self { n_qutrits, gates };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            if g.site + 2 > self.n_qutrits {
                return Err(Error::SiteOutOfRange {
                    site: g.site,
                    n_sites: self.n_qutrits,
                });
            }
            if !g.angle.is_finite() {
                return Err(Error::Precondition(format!(
                    "gate on site {} has non-finite angle",
                    g.site
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: GateInstance) {
        self.gates.push(gate);
    }

    pub fn extend_from(&mut self, other: &Circuit) {
        debug_assert_eq!(self.n_qutrits, other.n_qutrits);
        self.gates.extend_from_slice(&other.gates);
    }

    pub fn dim(&self) -> usize {
        pow3(self.n_qutrits)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Circuit = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    /// Apply every gate, in order, to each column of `m` in place.
    pub fn evolve_columns(&self, m: &mut CMatrix) -> Result<()> {
        let dim = self.dim();
        if m.nrows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.nrows(),
            });
        }
        let mats: Vec<CMatrix> = self.gates.iter().map(GateInstance::matrix).collect();
        for j in 0..m.ncols() {
            let col = m.column_mut(j);
            let amps = col.data.into_slice_mut();
            for (g, u) in self.gates.iter().zip(&mats) {
                apply_gate(amps, self.n_qutrits, g.site, u);
            }
        }
        Ok(())
    }

    /// The unitary as an explicit product of embedded gates.
    pub fn unitary(&self) -> Result<CMatrix> {
        if self.n_qutrits > MAX_SITES {
            return Err(Error::RegisterTooLarge(self.n_qutrits));
        }
        self.validate()?;
        let mut u = identity(self.dim());
        for g in &self.gates {
            u = embed(&g.matrix(), g.site, self.n_qutrits)? * u;
        }
        Ok(u)
    }

    /// The unitary built by contracting each gate into the columns of the
    /// identity; same result as [`Circuit::unitary`], much cheaper.
    pub fn unitary_fast(&self) -> Result<CMatrix> {
        self.validate()?;
        let mut u = identity(self.dim());
        self.evolve_columns(&mut u)?;
        Ok(u)
    }
}

/// Contract a 9×9 gate against the amplitudes of sites `(site, site + 1)`.
pub fn apply_gate(amps: &mut [C64], n_sites: usize, site: usize, gate: &CMatrix) {
    let inner = pow3(n_sites - site - 2);
    let outer = pow3(site);
    let stride_lo = inner;
    let stride_hi = 3 * inner;
    let mut local = [C64::new(0.0, 0.0); 9];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * 9 * inner + i;
            for a in 0..3 {
                for b in 0..3 {
                    local[3 * a + b] = amps[base + a * stride_hi + b * stride_lo];
                }
            }
            for r in 0..9 {
                let mut acc = C64::new(0.0, 0.0);
                for (k, v) in local.iter().enumerate() {
                    acc += gate[(r, k)] * v;
                }
                amps[base + (r / 3) * stride_hi + (r % 3) * stride_lo] = acc;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qutrits: usize,
    amplitudes: CVector,
}

impl StateVector {
    /// Computational basis state with the given ternary digits, site 0 first.
    pub fn basis(levels: &[usize]) -> Result<Self> {
        let n = levels.len();
        let mut index = 0;
        for &l in levels {
            if l > 2 {
                return Err(Error::Precondition(format!("qutrit level {l} out of range")));
            }
            index = index * 3 + l;
        }
        Ok(Self::basis_index(n, index))
    }

    pub fn basis_index(n_qutrits: usize, index: usize) -> Self {
        let mut amplitudes = CVector::zeros(pow3(n_qutrits));
        amplitudes[index] = C64::new(1.0, 0.0);
        Self {
            n_qutrits,
            amplitudes,
        }
    }

    pub fn from_amplitudes(n_qutrits: usize, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != pow3(n_qutrits) {
            return Err(Error::DimensionMismatch {
                expected: pow3(n_qutrits),
                found: amplitudes.len(),
            });
        }
        Ok(Self {
            n_qutrits,
            amplitudes,
        })
    }

    pub fn n_qutrits(&self) -> usize {
        self.n_qutrits
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    /// Apply `c` gate by gate without forming its unitary.
    pub fn apply(&self, c: &Circuit) -> Result<StateVector> {
        if c.n_qutrits != self.n_qutrits {
            return Err(Error::DimensionMismatch {
                expected: c.dim(),
                found: self.amplitudes.len(),
            });
        }
        c.validate()?;
        let mut out = self.clone();
        let amps = out.amplitudes.as_mut_slice();
        for g in &c.gates {
            apply_gate(amps, self.n_qutrits, g.site, &g.matrix());
        }
        Ok(out)
    }
}

/// Fuse gates with identical generator and site pair into one gate with the
/// summed angle.
///
/// A gate may only travel backwards past gates whose sites are disjoint from
/// its own; different generators on overlapping sites are never fused, even
/// where they happen to commute. Merged angles are reported in `(−π, π]`,
/// except for XY-pair gates, whose spectrum `{0, ±1, ±√2}` is not
/// `2π`-periodic; their angles are summed as-is.
pub fn merge_pass(c: &Circuit) -> Circuit {
    let mut out: Vec<GateInstance> = Vec::with_capacity(c.gates.len());
    'next: for g in &c.gates {
        for k in (0..out.len()).rev() {
            if out[k].same_slot(g) {
                let sum = out[k].angle + g.angle;
                out[k].angle = match g.generator {
                    Generator::XyPair => sum,
                    _ => wrap_angle(sum),
                };
                continue 'next;
            }
            if out[k].overlaps(g) {
                break;
            }
        }
        out.push(*g);
    }
    Circuit {
        n_qutrits: c.n_qutrits,
        gates: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius_distance, kron};
    use proptest::prelude::*;

    fn x(site: usize, a: f64) -> GateInstance {
        GateInstance::axis(Axis::X, site, a)
    }

    fn y(site: usize, a: f64) -> GateInstance {
        GateInstance::axis(Axis::Y, site, a)
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = Circuit::new(3);
        assert_eq!(c.unitary().unwrap(), identity(27));
    }

    #[test]
    fn single_gate_two_sites() {
        let c = Circuit::with_gates(2, vec![x(0, 0.7)]).unwrap();
        let u = c.unitary().unwrap();
        assert!(frobenius_distance(&u, &crate::gates::closed_form_single_axis(Axis::X, 0.7)) < 1e-14);
    }

    #[test]
    fn three_gate_order_matches_dense_product() {
        let (a, b, g) = (0.3, -1.2, 2.1);
        let c = Circuit::with_gates(3, vec![x(0, a), x(1, b), x(0, g)]).unwrap();
        let ux = |t| crate::gates::closed_form_single_axis(Axis::X, t);
        let i3 = identity(3);
        let oracle = kron(&ux(g), &i3) * kron(&i3, &ux(b)) * kron(&ux(a), &i3);
        assert!(frobenius_distance(&c.unitary().unwrap(), &oracle) < 1e-12);
        assert!(frobenius_distance(&c.unitary_fast().unwrap(), &oracle) < 1e-12);
    }

    #[test]
    fn x_gate_at_pi_leaves_level_zero_alone() {
        let psi = StateVector::basis(&[0, 0]).unwrap();
        let c = Circuit::with_gates(2, vec![x(0, std::f64::consts::PI)]).unwrap();
        let out = psi.apply(&c).unwrap();
        assert!((out.amplitude(0) - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let psi = StateVector::basis(&[0, 0]).unwrap();
        let c = Circuit::new(3);
        assert!(matches!(psi.apply(&c), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn identity_circuit_keeps_state() {
        let psi = StateVector::basis(&[2, 0, 2]).unwrap();
        assert_eq!(psi.amplitude(20), C64::new(1.0, 0.0));
        let out = psi.apply(&Circuit::new(3)).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn merge_examples() {
        let c = Circuit::with_gates(3, vec![x(0, 0.2), x(0, 0.5)]).unwrap();
        let m = merge_pass(&c);
        assert_eq!(m.gates, vec![x(0, 0.2 + 0.5)]);

        let c = Circuit::with_gates(3, vec![x(0, 0.2), y(0, 0.5)]).unwrap();
        assert_eq!(merge_pass(&c), c);

        let c = Circuit::with_gates(3, vec![x(0, 0.2), x(1, 0.3), x(0, 0.5)]).unwrap();
        assert_eq!(merge_pass(&c), c);
    }

    #[test]
    fn merge_crosses_disjoint_gates() {
        let c = Circuit::with_gates(4, vec![x(0, 0.2), y(2, 0.3), x(0, 0.5)]).unwrap();
        let m = merge_pass(&c);
        assert_eq!(m.len(), 2);
        assert!(frobenius_distance(&m.unitary().unwrap(), &c.unitary().unwrap()) < 1e-12);
    }

    #[test]
    fn merge_cascades_through_fused_gates() {
        let c = Circuit::with_gates(3, vec![x(0, 0.1), x(0, 0.2), x(0, 0.3)]).unwrap();
        let m = merge_pass(&c);
        assert_eq!(m.len(), 1);
        assert!((m.gates[0].angle - 0.6).abs() < 1e-15);
    }

    #[test]
    fn json_schema_field_names() {
        let c = Circuit::with_gates(3, vec![x(0, 0.5), GateInstance::xy(1, -0.25)]).unwrap();
        let s = c.to_json().unwrap();
        assert_eq!(
            s,
            r#"{"n":3,"gates":[{"gen":"x","site":0,"angle":0.5},{"gen":"xy","site":1,"angle":-0.25}]}"#
        );
        assert_eq!(Circuit::from_json(&s).unwrap(), c);
        assert!(Circuit::from_json(r#"{"n":3,"gates":[{"gen":"x","site":2,"angle":0.5}]}"#).is_err());
        assert!(Circuit::from_json(r#"{"n":3,"gates":[{"gen":"q","site":0,"angle":0.5}]}"#).is_err());
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = GateInstance> {
        let gens = prop_oneof![
            Just(Generator::Axis(Axis::X)),
            Just(Generator::Axis(Axis::Y)),
            Just(Generator::Axis(Axis::Z)),
            Just(Generator::XyPair),
            Just(Generator::Weighted(AxisWeights::new(1, -1, 0).unwrap())),
        ];
        (gens, 0..n - 1, -3.2f64..3.2).prop_map(|(g, s, a)| GateInstance::new(g, s, a))
    }

    fn arb_circuit() -> impl Strategy<Value = Circuit> {
        prop::collection::vec(arb_gate(3), 0..30).prop_map(|gates| Circuit { n_qutrits: 3, gates })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn merge_preserves_unitary_and_is_idempotent(c in arb_circuit()) {
            let m = merge_pass(&c);
            prop_assert!(m.len() <= c.len());
            let d = frobenius_distance(&m.unitary_fast().unwrap(), &c.unitary_fast().unwrap());
            prop_assert!(d < 1e-12, "deviation {}", d);
            prop_assert_eq!(merge_pass(&m), m);
        }

        #[test]
        fn apply_matches_dense_unitary(c in arb_circuit(), seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let raw = CVector::from_fn(27, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let psi = StateVector::from_amplitudes(3, raw.normalize()).unwrap();
            let out = psi.apply(&c).unwrap();
            let dense = c.unitary().unwrap() * psi.amplitudes();
            prop_assert!((out.amplitudes() - dense).norm() < 1e-12);
            prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        }
    }
}
