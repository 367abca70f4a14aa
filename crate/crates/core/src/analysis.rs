//! First-order error analysis of sequences under a multiplicative block error
//! `exp(-i (θ/2) ZZ) · exp(i Σ δ_kl σ_kl)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::sequence::{Leaf, LocalGate, Realization, Sequence};
use crate::su4::{expm_hermitian, infidelity, pauli_rotation, Hermitian4, Mat4, PauliString, Unitary4, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("noise-free sequence misses the target (infidelity {infidelity:.3e})")]
    TargetMismatch { infidelity: f64 },
    #[error("infidelity does not follow a power law over the given amplitudes")]
    IllConditioned,
    #[error("error amplitudes must be positive and span at least one decade")]
    InvalidAmplitudes,
    #[error("channel {0} commutes with ZZ; the echo condition applies to anticommuting channels")]
    CommutingChannel(PauliString),
    #[error("local gate {0} is not a Pauli operator")]
    NonPauliLocal(String),
}

/// Real error amplitudes on the 16 Pauli strings (the identity entry is a global phase).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorVector([f64; 16]);

impl ErrorVector {
    pub fn zero() -> Self {
        ErrorVector([0.0; 16])
    }

    pub fn single(channel: PauliString, amplitude: f64) -> Self {
        let mut v = ErrorVector::zero();
        v.set(channel, amplitude);
        v
    }

    pub fn get(&self, p: PauliString) -> f64 {
        self.0[p.index()]
    }

    pub fn set(&mut self, p: PauliString, value: f64) {
        self.0[p.index()] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn hamiltonian(&self) -> Hermitian4 {
        let terms: Vec<(PauliString, f64)> = PauliString::all().map(|p| (p, self.get(p))).collect();
        Hermitian4::from_paulis(&terms)
    }

    /// `exp(i Σ δ σ)`.
    pub fn unitary(&self) -> Unitary4 {
        let nonzero: Vec<PauliString> = PauliString::all().filter(|&p| self.get(p) != 0.0).collect();
        match nonzero.as_slice() {
            [] => Unitary4::identity(),
            [p] => pauli_rotation(*p, -2.0 * self.get(*p)),
            _ => expm_hermitian(&self.hamiltonian(), -1.0),
        }
    }
}

impl Serialize for ErrorVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<String, f64> =
            PauliString::all().filter(|&p| self.get(p) != 0.0).map(|p| (p.label(), self.get(p))).collect();
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ErrorVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<PauliString, f64>::deserialize(deserializer)?;
        let mut v = ErrorVector::zero();
        for (p, x) in map {
            v.set(p, x);
        }
        Ok(v)
    }
}

/// Realization where every block carries the same multiplicative error.
#[derive(Debug, Clone)]
pub struct MultiplicativeError {
    error: Mat4,
}

impl MultiplicativeError {
    pub fn new(delta: &ErrorVector) -> Self {
        MultiplicativeError { error: delta.unitary().into_matrix() }
    }
}

impl Realization for MultiplicativeError {
    fn block(&mut self, angle: f64) -> Mat4 {
        pauli_rotation(PauliString::ZZ, angle).into_matrix() * self.error
    }
    fn local(&mut self, gate: &LocalGate) -> Mat4 {
        *gate.matrix()
    }
}

pub fn evaluate_with_error(seq: &Sequence, delta: &ErrorVector) -> Unitary4 {
    seq.evaluate(&mut MultiplicativeError::new(delta))
}

/// `c` with `target† · builder(δ e) ≈ I + i δ Σ c_kl σ_kl`, up to a global phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderError {
    pub coefficients: [C64; 16],
    /// Difference between the two central-difference estimates that were
    /// extrapolated; an upper bound on the truncation error.
    pub richardson_defect: f64,
}

impl FirstOrderError {
    pub fn get(&self, p: PauliString) -> C64 {
        self.coefficients[p.index()]
    }

    /// Norm over the 15 non-identity components.
    pub fn magnitude(&self) -> f64 {
        self.coefficients[1..].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDifference {
    pub step: f64,
    /// Largest accepted infidelity between the noise-free builder and the target.
    pub target_tolerance: f64,
}

impl Default for FiniteDifference {
    fn default() -> Self {
        FiniteDifference { step: 1e-5, target_tolerance: 1e-8 }
    }
}

/// Threshold on [`FirstOrderError::magnitude`] below which a channel counts as suppressed.
pub const SUPPRESSION_THRESHOLD: f64 = 1e-8;

pub fn first_order_error(
    builder: &dyn Fn(&ErrorVector) -> Unitary4,
    target: &Unitary4,
    channel: PauliString,
    fd: &FiniteDifference,
) -> Result<FirstOrderError, AnalysisError> {
    let base = builder(&ErrorVector::zero());
    let inf = infidelity(&base, target);
    if inf > fd.target_tolerance {
        return Err(AnalysisError::TargetMismatch { infidelity: inf });
    }
    let t = (target.matrix().adjoint() * base.matrix()).trace();
    let phase = (t / t.norm()).conj();
    let tdag = target.matrix().adjoint() * phase;
    let at = |h: f64| tdag * builder(&ErrorVector::single(channel, h)).matrix();
    let derivative = |h: f64| (at(h) - at(-h)) / C64::new(2.0 * h, 0.0);

    let d1 = derivative(fd.step);
    let d2 = derivative(fd.step / 2.0);
    let extrapolated = (d2 * C64::new(4.0, 0.0) - d1) / C64::new(3.0, 0.0);
    let mut coefficients = [C64::new(0.0, 0.0); 16];
    for p in PauliString::all() {
        coefficients[p.index()] = (p.matrix() * extrapolated).trace() * C64::new(0.0, -0.25);
    }
    Ok(FirstOrderError { coefficients, richardson_defect: (d2 - d1).norm() })
}

pub fn sequence_first_order_error(
    seq: &Sequence,
    target: &Unitary4,
    channel: PauliString,
    fd: &FiniteDifference,
) -> Result<FirstOrderError, AnalysisError> {
    first_order_error(&|d| evaluate_with_error(seq, d), target, channel, fd)
}

/// Result of fitting `infidelity ∝ δ^slope` over a range of amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuppressionOrder {
    /// `order = slope / 2` is the power of δ in the leading surviving error term.
    Measured { slope: f64, order: u32 },
    /// Infidelity stayed below the floor at every amplitude.
    Absent,
}

/// Infidelities below this are treated as numerically zero.
pub const INFIDELITY_FLOOR: f64 = 1e-26;

pub fn suppression_order(
    builder: &dyn Fn(&ErrorVector) -> Unitary4,
    target: &Unitary4,
    channel: PauliString,
    amplitudes: &[f64],
    floor: f64,
) -> Result<SuppressionOrder, AnalysisError> {
    let (lo, hi) = amplitudes.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &d| (a.min(d), b.max(d)));
    if amplitudes.iter().any(|&d| d <= 0.0) || hi < 10.0 * lo {
        return Err(AnalysisError::InvalidAmplitudes);
    }
    let points: Vec<(f64, f64)> =
        amplitudes.iter().map(|&d| (d, infidelity(&builder(&ErrorVector::single(channel, d)), target))).collect();
    let above: Vec<(f64, f64)> = points.iter().copied().filter(|&(_, f)| f > floor).collect();
    if above.is_empty() {
        return Ok(SuppressionOrder::Absent);
    }
    if above.len() < 2 || above.len() < points.len() {
        return Err(AnalysisError::IllConditioned);
    }
    let slope = log_log_slope(&above);
    if !slope.is_finite() || slope <= 0.0 {
        return Err(AnalysisError::IllConditioned);
    }
    Ok(SuppressionOrder::Measured { slope, order: (slope / 2.0).round() as u32 })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReport {
    pub channel: PauliString,
    pub first_order: FirstOrderError,
    pub suppressed: bool,
    pub order: Option<SuppressionOrder>,
}

impl ChannelReport {
    pub fn magnitude(&self) -> f64 {
        self.first_order.magnitude()
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub fd: FiniteDifference,
    pub threshold: f64,
    /// Amplitudes for the empirical order fit; `None` skips the fit.
    pub order_amplitudes: Option<Vec<f64>>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { fd: FiniteDifference::default(), threshold: SUPPRESSION_THRESHOLD, order_amplitudes: None }
    }
}

/// One report per non-identity channel, in canonical order.
pub fn analyze_channels(
    seq: &Sequence,
    target: &Unitary4,
    opts: &AnalysisOptions,
) -> Result<Vec<ChannelReport>, AnalysisError> {
    let builder = |d: &ErrorVector| evaluate_with_error(seq, d);
    let reference = seq.ideal();
    PauliString::channels()
        .map(|channel| {
            let first_order = first_order_error(&builder, target, channel, &opts.fd)?;
            let order = match &opts.order_amplitudes {
                Some(a) => Some(suppression_order(&builder, &reference, channel, a, INFIDELITY_FLOOR)?),
                None => None,
            };
            Ok(ChannelReport { channel, suppressed: first_order.magnitude() < opts.threshold, first_order, order })
        })
        .collect()
}

/// Pauli frame of every block of a sequence whose local gates are all Pauli
/// operators. The frame of a block is the product of the echoes applied
/// before it; it fixes the signs ξ (for ZZ) and ζ (for an error channel).
#[derive(Debug, Clone, PartialEq)]
pub struct XiZeta {
    frames: Vec<PauliString>,
    angles: Vec<f64>,
}

fn pauli_product(a: PauliString, b: PauliString) -> PauliString {
    use crate::su4::PauliIndex as P;
    let mul = |x: P, y: P| match (x, y) {
        (P::I, q) | (q, P::I) => q,
        (p, q) if p == q => P::I,
        (P::X, P::Y) | (P::Y, P::X) => P::Z,
        (P::Y, P::Z) | (P::Z, P::Y) => P::X,
        _ => P::Y,
    };
    PauliString::new(mul(a.first, b.first), mul(a.second, b.second))
}

impl XiZeta {
    pub fn from_sequence(seq: &Sequence) -> Result<Self, AnalysisError> {
        let mut frame = PauliString::IDENTITY;
        let mut frames = Vec::new();
        let mut angles = Vec::new();
        let mut bad = None;
        seq.for_each_leaf(&mut |leaf| match leaf {
            Leaf::Block(angle) => {
                frames.push(frame);
                angles.push(angle);
            }
            Leaf::Local(g) => match g.as_pauli() {
                Some(p) => frame = pauli_product(p, frame),
                None => bad = bad.take().or_else(|| Some(g.label().to_string())),
            },
        });
        match bad {
            Some(label) => Err(AnalysisError::NonPauliLocal(label)),
            None => Ok(XiZeta { frames, angles }),
        }
    }

    pub fn xi(&self) -> Vec<i8> {
        self.frames.iter().map(|f| PauliString::ZZ.commutation_sign(*f)).collect()
    }

    pub fn zeta(&self, channel: PauliString) -> Vec<i8> {
        self.frames.iter().map(|f| channel.commutation_sign(*f)).collect()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}

/// `(Σ ζ_m cos φ_m, Σ ζ_m sin φ_m)` with `φ_m = Σ_{l<m} ξ_l θ_l`; both vanish
/// iff the first-order error of an anticommuting channel cancels.
pub fn echo_condition_residuals(xz: &XiZeta, channel: PauliString) -> Result<(f64, f64), AnalysisError> {
    if channel.commutes_with(PauliString::ZZ) {
        return Err(AnalysisError::CommutingChannel(channel));
    }
    let (mut re, mut im, mut phase) = (0.0, 0.0, 0.0f64);
    for ((xi, zeta), angle) in xz.xi().into_iter().zip(xz.zeta(channel)).zip(&xz.angles) {
        re += zeta as f64 * phase.cos();
        im += zeta as f64 * phase.sin();
        phase += xi as f64 * angle;
    }
    Ok((re, im))
}

/// `|ζ3 + 2ζ4 cosθ + ζ5 (4cos²θ - 2)|` for a symmetric five-block pattern whose
/// middle block has sign ζ3, its neighbours ζ4 and the outer blocks ζ5.
pub fn length5_condition_residual(theta: f64, z3: i8, z4: i8, z5: i8) -> f64 {
    let c = theta.cos();
    (z3 as f64 + 2.0 * z4 as f64 * c + z5 as f64 * (4.0 * c * c - 2.0)).abs()
}

impl fmt::Display for SuppressionOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SuppressionOrder::Measured { order, .. } => write!(f, "{order}"),
            SuppressionOrder::Absent => write!(f, "none"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::theta0;
    use crate::sequence::{length2, length5, zz_rotation};

    fn xy() -> PauliString {
        "XY".parse().unwrap()
    }

    #[test]
    fn error_unitary_single_and_general() {
        let e = ErrorVector::single(PauliString::XI, 0.01);
        let h = Hermitian4::new(PauliString::XI.matrix()).unwrap();
        let expected = expm_hermitian(&h, -0.01);
        assert!(infidelity(&e.unitary(), &expected) < 1e-30);
        let mut v = ErrorVector::zero();
        v.set(PauliString::XI, 0.01);
        v.set(PauliString::ZZ, -0.02);
        assert!(v.unitary().unitarity_defect() < 1e-14);
        assert!(ErrorVector::zero().is_zero());
    }

    #[test]
    fn error_vector_serde() {
        let mut v = ErrorVector::zero();
        v.set(PauliString::XI, 0.5);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"XI":0.5}"#);
        assert_eq!(serde_json::from_str::<ErrorVector>(&s).unwrap(), v);
    }

    #[test]
    fn bare_block_error_is_the_channel() {
        let seq = zz_rotation(0.7);
        let fo = sequence_first_order_error(&seq, &seq.ideal(), xy(), &FiniteDifference::default()).unwrap();
        // target† · R · exp(iδσ) = I + iδσ + O(δ²)
        assert!((fo.get(xy()) - C64::new(1.0, 0.0)).norm() < 1e-9);
        assert!((fo.magnitude() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn target_mismatch() {
        let seq = zz_rotation(0.7);
        let r = sequence_first_order_error(&seq, &Unitary4::identity(), xy(), &FiniteDifference::default());
        assert!(matches!(r, Err(AnalysisError::TargetMismatch { .. })));
    }

    #[test]
    fn length5_residual_values() {
        let t = theta0();
        assert!(length5_condition_residual(t, -1, 1, 1) < 1e-14);
        assert!((length5_condition_residual(t, 1, 1, 1) - 2.0).abs() < 1e-12);
        assert!(length5_condition_residual(t + 0.1, -1, 1, 1) > 1e-2);
        // the other sign family only vanishes at a larger angle
        let alt = ((1.0 - 13f64.sqrt()) / 4.0).acos();
        assert!(length5_condition_residual(alt, 1, 1, -1) < 1e-14);
        assert!(alt > t);
        assert!(length5_condition_residual(t, 1, 1, -1) > 1e-2);
    }

    #[test]
    fn frames_of_length5() {
        let xz = XiZeta::from_sequence(&length5(theta0())).unwrap();
        assert_eq!(xz.xi(), vec![1; 5]);
        assert_eq!(xz.zeta(PauliString::XI), vec![1, 1, -1, 1, 1]);
        let (re, im) = echo_condition_residuals(&xz, PauliString::XI).unwrap();
        assert!(re.hypot(im) < 1e-14);
        assert!(echo_condition_residuals(&xz, PauliString::ZI).is_err());
    }

    #[test]
    fn residuals_bound_the_numerical_coefficient() {
        let seq = length2(zz_rotation(0.9), PauliString::XX);
        let xz = XiZeta::from_sequence(&seq).unwrap();
        for channel in PauliString::channels().filter(|c| !c.commutes_with(PauliString::ZZ)) {
            let (re, im) = echo_condition_residuals(&xz, channel).unwrap();
            let fo = sequence_first_order_error(&seq, &seq.ideal(), channel, &FiniteDifference::default()).unwrap();
            assert!((fo.magnitude() - re.hypot(im)).abs() < 1e-8, "{channel}");
        }
    }

    #[test]
    fn order_of_uncancelled_and_cancelled_channels() {
        let seq = length5(theta0());
        let target = seq.ideal();
        let builder = |d: &ErrorVector| evaluate_with_error(&seq, d);
        let amps = [1e-5, 3e-5, 1e-4];
        match suppression_order(&builder, &target, PauliString::ZZ, &amps, INFIDELITY_FLOOR).unwrap() {
            SuppressionOrder::Measured { order, .. } => assert_eq!(order, 1),
            other => panic!("{other:?}"),
        }
        match suppression_order(&builder, &target, PauliString::XI, &amps, INFIDELITY_FLOOR).unwrap() {
            SuppressionOrder::Measured { order, .. } => assert_eq!(order, 2),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            suppression_order(&builder, &target, PauliString::XI, &[1e-5, 2e-5], INFIDELITY_FLOOR),
            Err(AnalysisError::InvalidAmplitudes)
        );
    }

    #[test]
    fn exact_cancellation_reports_absent_order() {
        let seq = length2(zz_rotation(0.5), PauliString::XX);
        let target = seq.ideal();
        let builder = |d: &ErrorVector| evaluate_with_error(&seq, d);
        let r = suppression_order(&builder, &target, PauliString::ZI, &[1e-5, 1e-4, 1e-3], INFIDELITY_FLOOR);
        assert_eq!(r, Ok(SuppressionOrder::Absent));
    }
}
