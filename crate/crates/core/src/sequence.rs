//! Composite pulse sequences as trees of coupling blocks and local gates.
//!
//! Children of [`SequenceNode::Concat`] are listed in time order: the first
//! part acts first, so its matrix is the rightmost factor of the product.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::params::{BaseLength, ParamTable, ZzCorrection};
use crate::su4::{kron, pauli_rotation, su2_exp, Mat2, Mat4, PauliIndex, PauliString, Unitary4, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceError {
    #[error("echo operators {0} and {1} commute; the nested sequence needs an anticommuting pair")]
    CommutingEchoes(PauliString, PauliString),
    #[error("echo operator {0} anticommutes with ZZ and would remove the coupling")]
    EchoRemovesCoupling(PauliString),
    #[error("{0} is not a single-qubit rotation generator")]
    NotLocal(PauliString),
}

/// A tensor product of two single-qubit gates, applied instantaneously.
#[derive(Clone)]
pub struct LocalGate {
    label: Arc<str>,
    first: Mat2,
    second: Mat2,
    full: Mat4,
    pauli: Option<PauliString>,
}

impl fmt::Debug for LocalGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LocalGate({})", self.label)
    }
}

impl LocalGate {
    /// `label` names the gate; noise models key systematic errors on it.
    pub fn new(label: impl Into<Arc<str>>, first: Mat2, second: Mat2) -> Self {
        LocalGate { label: label.into(), full: kron(&first, &second), first, second, pauli: None }
    }

    pub fn pauli(p: PauliString) -> Self {
        let mut g = LocalGate::new(p.label(), p.first.matrix(), p.second.matrix());
        g.pauli = Some(p);
        g
    }

    /// `exp(-i (angle/2) σ)` for a generator acting on one qubit only.
    pub fn rotation(p: PauliString, angle: f64) -> Result<Self, SequenceError> {
        let single = |q: PauliIndex| {
            su2_exp(match q {
                PauliIndex::X => [angle / 2.0, 0.0, 0.0],
                PauliIndex::Y => [0.0, angle / 2.0, 0.0],
                PauliIndex::Z => [0.0, 0.0, angle / 2.0],
                PauliIndex::I => [0.0; 3],
            })
        };
        let (a, b) = match (p.first, p.second) {
            (PauliIndex::I, PauliIndex::I) => return Err(SequenceError::NotLocal(p)),
            (q, PauliIndex::I) => (single(q), Mat2::identity()),
            (PauliIndex::I, q) => (Mat2::identity(), single(q)),
            _ => return Err(SequenceError::NotLocal(p)),
        };
        Ok(LocalGate::new(format!("{p}({angle})"), a, b))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn factors(&self) -> (&Mat2, &Mat2) {
        (&self.first, &self.second)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.full
    }

    /// The Pauli string this gate equals, if it was built as one.
    pub fn as_pauli(&self) -> Option<PauliString> {
        self.pauli
    }
}

#[derive(Debug, Clone)]
pub enum SequenceNode {
    /// Coupling evolution that ideally implements `exp(-i (angle/2) ZZ)`.
    Block {
        angle: f64,
    },
    Local(LocalGate),
    /// `echo · inner · echo`.
    Echo {
        echo: PauliString,
        gate: LocalGate,
        inner: Sequence,
    },
    Concat(Vec<Sequence>),
    Power {
        inner: Sequence,
        n: u32,
    },
}

/// Shared, immutable sequence tree.
#[derive(Debug, Clone)]
pub struct Sequence(Arc<SequenceNode>);

/// A leaf visited in time order.
#[derive(Debug, Clone, Copy)]
pub enum Leaf<'a> {
    Block(f64),
    Local(&'a LocalGate),
}

/// Supplies the physical unitary for each leaf of a sequence.
pub trait Realization {
    fn block(&mut self, angle: f64) -> Mat4;
    fn local(&mut self, gate: &LocalGate) -> Mat4;
}

/// Noise-free evaluation: blocks are exact ZZ rotations.
#[derive(Debug, Default, Clone, Copy)]
pub struct Ideal;

impl Realization for Ideal {
    fn block(&mut self, angle: f64) -> Mat4 {
        pauli_rotation(PauliString::ZZ, angle).into_matrix()
    }
    fn local(&mut self, gate: &LocalGate) -> Mat4 {
        *gate.matrix()
    }
}

impl Sequence {
    pub fn new(node: SequenceNode) -> Self {
        Sequence(Arc::new(node))
    }

    pub fn node(&self) -> &SequenceNode {
        &self.0
    }

    pub fn block(angle: f64) -> Self {
        Sequence::new(SequenceNode::Block { angle })
    }

    pub fn local(gate: LocalGate) -> Self {
        Sequence::new(SequenceNode::Local(gate))
    }

    pub fn echo(echo: PauliString, inner: Sequence) -> Self {
        Sequence::new(SequenceNode::Echo { echo, gate: LocalGate::pauli(echo), inner })
    }

    pub fn concat(parts: Vec<Sequence>) -> Self {
        Sequence::new(SequenceNode::Concat(parts))
    }

    pub fn power(inner: Sequence, n: u32) -> Self {
        Sequence::new(SequenceNode::Power { inner, n })
    }

    pub fn evaluate(&self, r: &mut dyn Realization) -> Unitary4 {
        Unitary4::from_matrix_unchecked(apply(self, Mat4::identity(), r))
    }

    pub fn ideal(&self) -> Unitary4 {
        self.evaluate(&mut Ideal)
    }

    pub fn for_each_leaf(&self, f: &mut dyn FnMut(Leaf<'_>)) {
        match self.node() {
            SequenceNode::Block { angle } => f(Leaf::Block(*angle)),
            SequenceNode::Local(g) => f(Leaf::Local(g)),
            SequenceNode::Echo { gate, inner, .. } => {
                f(Leaf::Local(gate));
                inner.for_each_leaf(f);
                f(Leaf::Local(gate));
            }
            SequenceNode::Concat(parts) => parts.iter().for_each(|p| p.for_each_leaf(f)),
            SequenceNode::Power { inner, n } => (0..*n).for_each(|_| inner.for_each_leaf(f)),
        }
    }

    pub fn block_count(&self) -> u64 {
        match self.node() {
            SequenceNode::Block { .. } => 1,
            SequenceNode::Local(_) => 0,
            SequenceNode::Echo { inner, .. } => inner.block_count(),
            SequenceNode::Concat(parts) => parts.iter().map(Sequence::block_count).sum(),
            SequenceNode::Power { inner, n } => *n as u64 * inner.block_count(),
        }
    }

    /// Sum of `|angle|` over all blocks.
    pub fn total_angle(&self) -> f64 {
        match self.node() {
            SequenceNode::Block { angle } => angle.abs(),
            SequenceNode::Local(_) => 0.0,
            SequenceNode::Echo { inner, .. } => inner.total_angle(),
            SequenceNode::Concat(parts) => parts.iter().map(Sequence::total_angle).sum(),
            SequenceNode::Power { inner, n } => *n as f64 * inner.total_angle(),
        }
    }

    /// Duration of the coupling evolution, `Σ|θ| / (2α)`.
    pub fn interaction_time(&self, alpha: f64) -> f64 {
        self.total_angle() / (2.0 * alpha)
    }

    /// Every local gate as written, echoes counted twice.
    pub fn local_gate_count(&self) -> u64 {
        match self.node() {
            SequenceNode::Block { .. } => 0,
            SequenceNode::Local(_) => 1,
            SequenceNode::Echo { inner, .. } => 2 + inner.local_gate_count(),
            SequenceNode::Concat(parts) => parts.iter().map(Sequence::local_gate_count).sum(),
            SequenceNode::Power { inner, n } => *n as u64 * inner.local_gate_count(),
        }
    }

    /// Local operations after merging adjacent local gates, i.e. the number
    /// of maximal runs of local gates between coupling blocks.
    pub fn merged_local_gate_count(&self) -> u64 {
        let mut count = 0;
        let mut in_run = false;
        self.for_each_leaf(&mut |leaf| match leaf {
            Leaf::Block(_) => in_run = false,
            Leaf::Local(_) => {
                if !in_run {
                    count += 1;
                }
                in_run = true;
            }
        });
        count
    }

    /// Replaces blocks for which `f` returns a sequence.
    pub fn substitute_blocks(&self, f: &dyn Fn(f64) -> Option<Sequence>) -> Sequence {
        match self.node() {
            SequenceNode::Block { angle } => f(*angle).unwrap_or_else(|| self.clone()),
            SequenceNode::Local(_) => self.clone(),
            SequenceNode::Echo { echo, inner, .. } => Sequence::echo(*echo, inner.substitute_blocks(f)),
            SequenceNode::Concat(parts) => Sequence::concat(parts.iter().map(|p| p.substitute_blocks(f)).collect()),
            SequenceNode::Power { inner, n } => Sequence::power(inner.substitute_blocks(f), *n),
        }
    }
}

fn apply(seq: &Sequence, acc: Mat4, r: &mut dyn Realization) -> Mat4 {
    match seq.node() {
        SequenceNode::Block { angle } => r.block(*angle) * acc,
        SequenceNode::Local(g) => r.local(g) * acc,
        SequenceNode::Echo { gate, inner, .. } => {
            let acc = r.local(gate) * acc;
            let acc = apply(inner, acc, r);
            r.local(gate) * acc
        }
        SequenceNode::Concat(parts) => parts.iter().fold(acc, |a, p| apply(p, a, r)),
        SequenceNode::Power { inner, n } => (0..*n).fold(acc, |a, _| apply(inner, a, r)),
    }
}

pub fn zz_rotation(angle: f64) -> Sequence {
    Sequence::block(angle)
}

fn rotation(p: PauliString, angle: f64) -> Sequence {
    Sequence::local(LocalGate::rotation(p, angle).expect("generator acts on one qubit"))
}

/// True when the echo commutes with ZZ, so the wrapped sequence stays entangling.
/// An anticommuting echo refocuses the coupling and `length2` yields a local gate.
pub fn echo_preserves_coupling(echo: PauliString) -> bool {
    echo.commutes_with(PauliString::ZZ)
}

/// `inner · echo · inner · echo`.
pub fn length2(inner: Sequence, echo: PauliString) -> Sequence {
    Sequence::concat(vec![Sequence::echo(echo, inner.clone()), inner])
}

/// Two nested length-2 sequences: `U2_outer[U2_inner[inner]]`.
pub fn length4(inner: Sequence, inner_echo: PauliString, outer_echo: PauliString) -> Result<Sequence, SequenceError> {
    for e in [inner_echo, outer_echo] {
        if !echo_preserves_coupling(e) {
            return Err(SequenceError::EchoRemovesCoupling(e));
        }
    }
    if inner_echo.commutes_with(outer_echo) {
        return Err(SequenceError::CommutingEchoes(inner_echo, outer_echo));
    }
    Ok(length2(length2(inner, inner_echo), outer_echo))
}

/// `b b ZZ b ZZ b b` for an arbitrary inner sequence `b`.
pub fn length5_of(inner: Sequence) -> Sequence {
    let b = inner;
    Sequence::concat(vec![b.clone(), b.clone(), Sequence::echo(PauliString::ZZ, b.clone()), b.clone(), b])
}

pub fn length5(theta0: f64) -> Sequence {
    length5_of(zz_rotation(theta0))
}

pub fn length10(theta0: f64, echo: PauliString) -> Sequence {
    length5_of(length2(zz_rotation(theta0 / 2.0), echo))
}

/// Where the length-5 layer sits relative to the two length-2 layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Nesting {
    /// `U5[U2_XX[U2_ZI[b]]]`.
    #[default]
    LengthFiveOutside,
    /// `U2_XX[U2_ZI[U5[b]]]`.
    LengthFiveInside,
}

pub fn length20(theta0: f64) -> Sequence {
    length20_nested(theta0, Nesting::LengthFiveOutside)
}

pub fn length20_nested(theta0: f64, nesting: Nesting) -> Sequence {
    let b = zz_rotation(theta0 / 4.0);
    match nesting {
        Nesting::LengthFiveOutside => length5_of(length2(length2(b, PauliString::ZI), PauliString::XX)),
        Nesting::LengthFiveInside => length2(length2(length5_of(b), PauliString::ZI), PauliString::XX),
    }
}

/// The base sequence `U^(k)`, ideally `exp(-i (5θ0/2) ZZ)`.
pub fn base_sequence(k: BaseLength, theta0: f64) -> Sequence {
    match k {
        BaseLength::K5 => length5(theta0),
        BaseLength::K10 => length10(theta0, PauliString::XX),
        BaseLength::K20 => length20(theta0),
    }
}

/// Echo list of a base sequence, in time order, one entry per local Pauli.
pub fn echo_sequence(seq: &Sequence) -> Vec<PauliString> {
    let mut out = Vec::new();
    seq.for_each_leaf(&mut |leaf| {
        if let Leaf::Local(g) = leaf {
            if let Some(p) = g.as_pauli() {
                out.push(p);
            }
        }
    });
    out
}

fn a1() -> LocalGate {
    let a = PI / (2.0 * 2f64.sqrt());
    let b = 5.0 * PI / (3.0 * 3f64.sqrt());
    LocalGate::new("A1", su2_exp([a, -a, 0.0]), su2_exp([b, b, -b]))
}

fn a2() -> LocalGate {
    LocalGate::new("A2", PauliIndex::X.matrix(), su2_exp([0.0, PI / 4.0, 0.0]))
}

/// CNOT built from two copies of `U^(k)` and closed-form `XI` rotations.
pub fn cnot_two_pulse(k: BaseLength, table: &ParamTable) -> Sequence {
    let u = base_sequence(k, table.theta0);
    let (psi, phi) = (table.two_pulse.psi, table.two_pulse.phi);
    Sequence::concat(vec![
        Sequence::local(a2()),
        rotation(PauliString::XI, psi),
        u.clone(),
        rotation(PauliString::XI, phi),
        u,
        rotation(PauliString::XI, psi),
        Sequence::local(a1()),
    ])
}

/// Wraps `u` so the first-order ZZ error of its blocks cancels:
/// `(∏_{j=4..1} IY(-ψj) u^nj IY(ψj)) · u`.
pub fn zz_corrected(u: &Sequence, c: &ZzCorrection) -> Sequence {
    let mut parts = vec![u.clone()];
    for (&psi, &n) in c.psi().iter().zip(c.n().iter()) {
        parts.push(rotation(PauliString::IY, psi));
        parts.push(Sequence::power(u.clone(), n));
        parts.push(rotation(PauliString::IY, -psi));
    }
    Sequence::concat(parts)
}

/// Fully corrected CNOT `A1 · IY(φ1) · U^(6k) · IY(φ2) · A2`.
pub fn cnot_final(k: BaseLength, table: &ParamTable) -> Sequence {
    let u6 = zz_corrected(&base_sequence(k, table.theta0), &table.cnot);
    let d = table.cnot_dressing;
    Sequence::concat(vec![
        Sequence::local(a2()),
        rotation(PauliString::IY, d.phi2),
        u6,
        rotation(PauliString::IY, d.phi1),
        Sequence::local(a1()),
    ])
}

/// Corrected sequence dressed to implement `exp(-i (5θ0/(2k)) ZZ)`:
/// `XI^m · IY(β) · U^(6k) · XI^m · IY(γ)`.
pub fn self_similar(k: BaseLength, table: &ParamTable) -> Sequence {
    let p = table.self_similar(k);
    let u6 = zz_corrected(&base_sequence(k, table.theta0), &p.correction);
    let flip = || Sequence::local(LocalGate::pauli(PauliString::XI));
    let mut parts = vec![rotation(PauliString::IY, p.dressing.gamma)];
    if p.dressing.m == 1 {
        parts.push(flip());
    }
    parts.push(u6);
    parts.push(rotation(PauliString::IY, p.dressing.beta));
    if p.dressing.m == 1 {
        parts.push(flip());
    }
    Sequence::concat(parts)
}

/// Target of [`self_similar`].
pub fn self_similar_target(k: BaseLength, theta0: f64) -> Unitary4 {
    pauli_rotation(PauliString::ZZ, 5.0 * theta0 / k.k() as f64)
}

/// `cnot_final(20)` with every block replaced by `self_similar(20)`.
pub fn second_order_cnot(table: &ParamTable) -> Sequence {
    let block_angle = table.theta0 / 4.0;
    let inner = self_similar(BaseLength::K20, table);
    cnot_final(BaseLength::K20, table)
        .substitute_blocks(&|angle| ((angle - block_angle).abs() < 1e-15).then(|| inner.clone()))
}

fn hadamard() -> Mat2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Mat2::new(C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0))
}

fn z_phase(angle: f64) -> Mat2 {
    // exp(-i angle Z)
    su2_exp([0.0, 0.0, angle])
}

/// Uncorrected Ising CNOT: `L1 · (π/2)_ZZ · L2`.
pub fn uncorrected_cnot() -> Sequence {
    Sequence::concat(vec![Sequence::local(ising_pre()), zz_rotation(PI / 2.0), Sequence::local(ising_post())])
}

/// CNOT from the length-2 sequence `U2_XX[(π/4)_ZZ]`.
pub fn length2_cnot() -> Sequence {
    Sequence::concat(vec![
        Sequence::local(ising_pre()),
        length2(zz_rotation(PI / 4.0), PauliString::XX),
        Sequence::local(ising_post()),
    ])
}

fn ising_pre() -> LocalGate {
    LocalGate::new("IH", Mat2::identity(), hadamard())
}

fn ising_post() -> LocalGate {
    LocalGate::new("L1", z_phase(-PI / 4.0), hadamard() * z_phase(-PI / 4.0))
}

/// CNOT from two √SWAP-type blocks of an isotropic Heisenberg coupling.
/// Only a CNOT when blocks evolve under `XX + YY + ZZ`.
pub fn sqrt_swap_cnot() -> Sequence {
    Sequence::concat(vec![
        Sequence::local(ising_pre()),
        zz_rotation(PI / 4.0),
        rotation(PauliString::ZI, -PI),
        zz_rotation(PI / 4.0),
        Sequence::local(LocalGate::new("HP", z_phase(PI / 4.0), hadamard() * z_phase(-PI / 4.0))),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{theta0, ParamTable};
    use crate::su4::{cnot, infidelity};

    fn zz(angle: f64) -> Unitary4 {
        pauli_rotation(PauliString::ZZ, angle)
    }

    #[test]
    fn block_is_zz_rotation() {
        let u = zz_rotation(0.3).ideal();
        assert!(infidelity(&u, &zz(0.3)) < 1e-30);
        assert_eq!(zz_rotation(0.3).block_count(), 1);
        assert_eq!(zz_rotation(0.3).local_gate_count(), 0);
    }

    #[test]
    fn length2_doubles_angle() {
        for echo in ["XX", "YY", "ZI", "IZ", "XY", "YX"] {
            let e: PauliString = echo.parse().unwrap();
            let u = length2(zz_rotation(0.4), e).ideal();
            assert!(infidelity(&u, &zz(0.8)) < 1e-28, "{echo}");
        }
        // anticommuting echo refocuses the coupling
        let u = length2(zz_rotation(0.4), PauliString::XI).ideal();
        assert!(infidelity(&u, &Unitary4::identity()) < 1e-28);
        assert!(!echo_preserves_coupling(PauliString::XI));
    }

    #[test]
    fn length4_validation() {
        let b = zz_rotation(0.1);
        assert!(length4(b.clone(), PauliString::ZI, PauliString::XX).is_ok());
        assert_eq!(
            length4(b.clone(), PauliString::ZI, PauliString::IZ).unwrap_err(),
            SequenceError::CommutingEchoes(PauliString::ZI, PauliString::IZ)
        );
        assert!(matches!(length4(b, PauliString::XI, PauliString::XX), Err(SequenceError::EchoRemovesCoupling(_))));
    }

    #[test]
    fn base_sequences_have_same_rotation() {
        let t = theta0();
        let target = zz(5.0 * t);
        for k in BaseLength::ALL {
            let s = base_sequence(k, t);
            assert!(infidelity(&s.ideal(), &target) < 1e-28);
            assert_eq!(s.block_count(), k.k() as u64);
            assert!((s.total_angle() - 5.0 * t).abs() < 1e-14);
        }
        let alt = length20_nested(t, Nesting::LengthFiveInside);
        assert!(infidelity(&alt.ideal(), &target) < 1e-28);
    }

    #[test]
    fn two_pulse_cnot_is_exact() {
        let table = ParamTable::published();
        for k in BaseLength::ALL {
            let s = cnot_two_pulse(k, &table);
            let inf = infidelity(&s.ideal(), &cnot());
            assert!(inf < 1e-28, "k={} {inf:e}", k.k());
            assert_eq!(s.block_count(), 2 * k.k() as u64);
        }
    }

    #[test]
    fn published_final_cnot_intrinsic_infidelity() {
        let table = ParamTable::published();
        for k in [BaseLength::K5, BaseLength::K20] {
            let inf = infidelity(&cnot_final(k, &table).ideal(), &cnot());
            assert!(inf > 1e-13 && inf < 1e-11, "k={} {inf:e}", k.k());
        }
    }

    #[test]
    fn published_self_similar_intrinsic_infidelity() {
        let table = ParamTable::published();
        let expected = [4.6e-13, 7.6e-14, 1.18e-12];
        for (k, e) in BaseLength::ALL.into_iter().zip(expected) {
            let inf = infidelity(&self_similar(k, &table).ideal(), &self_similar_target(k, table.theta0));
            assert!(inf > e / 3.0 && inf < e * 3.0, "k={} {inf:e}", k.k());
        }
    }

    #[test]
    fn uncorrected_baselines_are_exact() {
        assert!(infidelity(&uncorrected_cnot().ideal(), &cnot()) < 1e-28);
        assert!(infidelity(&length2_cnot().ideal(), &cnot()) < 1e-28);
    }

    #[test]
    fn gate_counts() {
        let table = ParamTable::published();
        let t = table.theta0;
        assert_eq!(length5(t).local_gate_count(), 2);
        assert_eq!(length5(t).merged_local_gate_count(), 2);
        assert_eq!(length2(zz_rotation(0.1), PauliString::XX).merged_local_gate_count(), 2);
        let c40 = cnot_two_pulse(BaseLength::K20, &table);
        let c120 = cnot_final(BaseLength::K20, &table);
        assert_eq!(c40.block_count(), 40);
        assert_eq!(c120.block_count(), 120);
        assert_eq!(c40.merged_local_gate_count(), 41);
        assert_eq!(c120.merged_local_gate_count(), 121);
        assert_eq!(c40.local_gate_count(), 69);
        assert_eq!(c120.local_gate_count(), 204);
        assert_eq!(length2_cnot().merged_local_gate_count(), 3);
        let second = second_order_cnot(&table);
        assert_eq!(second.block_count(), 14400);
    }

    #[test]
    fn interaction_time() {
        let t = theta0();
        let s = cnot_final(BaseLength::K20, &ParamTable::published());
        assert!((s.interaction_time(1.0) - 15.0 * t).abs() < 1e-12);
        assert!((s.interaction_time(2.0) - 7.5 * t).abs() < 1e-12);
    }

    #[test]
    fn echo_list() {
        let echoes = echo_sequence(&length5(theta0()));
        assert_eq!(echoes, vec![PauliString::ZZ, PauliString::ZZ]);
        assert_eq!(echo_sequence(&length20(theta0())).len(), 2 + 5 * 2 + 5 * 2 * 2);
    }
}
