//! Two-qubit operator algebra: Pauli strings, unitaries, exponentials,
//! gate fidelity and local (Makhlin) invariants.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used when validating unitarity and hermiticity on construction.
pub const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("matrix is not unitary (max |U†U - I| = {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("matrix is not Hermitian (max |H - H†| = {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("2x2 matrix is not special unitary (|det - 1| = {defect:.3e})")]
    NotSpecialUnitary { defect: f64 },
    #[error("g1 invariant has imaginary part {imag:.3e}; input is not in the real-g1 class")]
    ComplexInvariant { imag: f64 },
    #[error("invalid Pauli string {0:?}")]
    InvalidPauli(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliIndex {
    I,
    X,
    Y,
    Z,
}

impl PauliIndex {
    pub const ALL: [PauliIndex; 4] = [PauliIndex::I, PauliIndex::X, PauliIndex::Y, PauliIndex::Z];

    pub fn matrix(self) -> Mat2 {
        match self {
            PauliIndex::I => Mat2::identity(),
            PauliIndex::X => Mat2::new(ZERO, ONE, ONE, ZERO),
            PauliIndex::Y => Mat2::new(ZERO, -I, I, ZERO),
            PauliIndex::Z => Mat2::new(ONE, ZERO, ZERO, -ONE),
        }
    }

    /// Two single-qubit Paulis anticommute iff both are non-identity and distinct.
    pub fn anticommutes(self, other: PauliIndex) -> bool {
        self != PauliIndex::I && other != PauliIndex::I && self != other
    }

    fn as_char(self) -> char {
        match self {
            PauliIndex::I => 'I',
            PauliIndex::X => 'X',
            PauliIndex::Y => 'Y',
            PauliIndex::Z => 'Z',
        }
    }

    fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(PauliIndex::I),
            'X' => Some(PauliIndex::X),
            'Y' => Some(PauliIndex::Y),
            'Z' => Some(PauliIndex::Z),
            _ => None,
        }
    }
}

/// A two-qubit Pauli operator `σ_first ⊗ σ_second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub first: PauliIndex,
    pub second: PauliIndex,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString::new(PauliIndex::I, PauliIndex::I);
    pub const ZZ: PauliString = PauliString::new(PauliIndex::Z, PauliIndex::Z);
    pub const XX: PauliString = PauliString::new(PauliIndex::X, PauliIndex::X);
    pub const ZI: PauliString = PauliString::new(PauliIndex::Z, PauliIndex::I);
    pub const XI: PauliString = PauliString::new(PauliIndex::X, PauliIndex::I);
    pub const IY: PauliString = PauliString::new(PauliIndex::I, PauliIndex::Y);
    pub const IZ: PauliString = PauliString::new(PauliIndex::I, PauliIndex::Z);

    pub const fn new(first: PauliIndex, second: PauliIndex) -> Self {
        PauliString { first, second }
    }

    /// All 16 strings in canonical order (II, IX, IY, IZ, XI, ...).
    pub fn all() -> impl Iterator<Item = PauliString> {
        (0..16).map(PauliString::from_index)
    }

    /// The 15 error channels, i.e. every string except the identity.
    pub fn channels() -> impl Iterator<Item = PauliString> {
        (1..16).map(PauliString::from_index)
    }

    pub fn index(self) -> usize {
        4 * self.first as usize + self.second as usize
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < 16, "Pauli string index out of range");
        PauliString::new(PauliIndex::ALL[i / 4], PauliIndex::ALL[i % 4])
    }

    pub fn is_identity(self) -> bool {
        self == PauliString::IDENTITY
    }

    pub fn matrix(self) -> Mat4 {
        kron(&self.first.matrix(), &self.second.matrix())
    }

    /// +1 if the strings commute, -1 if they anticommute.
    pub fn commutation_sign(self, other: PauliString) -> i8 {
        let flips = self.first.anticommutes(other.first) as u8 + self.second.anticommutes(other.second) as u8;
        if flips.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn commutes_with(self, other: PauliString) -> bool {
        self.commutation_sign(other) == 1
    }

    pub fn label(self) -> String {
        format!("{}{}", self.first.as_char(), self.second.as_char())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.first.as_char(), self.second.as_char())
    }
}

impl FromStr for PauliString {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars: Vec<char> = s.trim().chars().collect();
        if chars.len() != 2 {
            return Err(AlgebraError::InvalidPauli(s.to_string()));
        }
        match (PauliIndex::from_char(chars[0]), PauliIndex::from_char(chars[1])) {
            (Some(a), Some(b)) => Ok(PauliString::new(a, b)),
            _ => Err(AlgebraError::InvalidPauli(s.to_string())),
        }
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn pauli_matrix(p: PauliString) -> Unitary4 {
    Unitary4(p.matrix())
}

pub fn commutation_sign(a: PauliString, b: PauliString) -> i8 {
    a.commutation_sign(b)
}

pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

fn max_abs(m: &Mat4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A 4x4 unitary, the value of every gate and sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary4(Mat4);

impl Unitary4 {
    pub fn identity() -> Self {
        Unitary4(Mat4::identity())
    }

    /// Validates unitarity to [`UNITARY_TOL`].
    pub fn new(m: Mat4) -> Result<Self, AlgebraError> {
        let defect = unitarity_defect(&m);
        if defect > UNITARY_TOL {
            return Err(AlgebraError::NotUnitary { defect });
        }
        Ok(Unitary4(m))
    }

    /// Wraps a matrix known to be unitary by construction (products of unitaries).
    pub fn from_matrix_unchecked(m: Mat4) -> Self {
        Unitary4(m)
    }

    pub fn from_local(a: &Mat2, b: &Mat2) -> Self {
        Unitary4(kron(a, b))
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat4 {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Unitary4(self.0.adjoint())
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.0)
    }

    pub fn determinant(&self) -> C64 {
        self.0.determinant()
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, z: C64) -> Self {
        Unitary4(self.0 * z)
    }
}

impl Mul for Unitary4 {
    type Output = Unitary4;
    fn mul(self, rhs: Unitary4) -> Unitary4 {
        Unitary4(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a Unitary4> for &'a Unitary4 {
    type Output = Unitary4;
    fn mul(self, rhs: &Unitary4) -> Unitary4 {
        Unitary4(self.0 * rhs.0)
    }
}

fn unitarity_defect(m: &Mat4) -> f64 {
    max_abs(&(m.adjoint() * m - Mat4::identity()))
}

/// A 4x4 Hermitian generator, in units of the coupling strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hermitian4(Mat4);

impl Hermitian4 {
    pub fn new(m: Mat4) -> Result<Self, AlgebraError> {
        let defect = max_abs(&(m - m.adjoint()));
        if defect > UNITARY_TOL {
            return Err(AlgebraError::NotHermitian { defect });
        }
        Ok(Hermitian4(m))
    }

    pub fn zero() -> Self {
        Hermitian4(Mat4::zeros())
    }

    /// `Σ c_p σ_p` for real coefficients.
    pub fn from_paulis<'a>(terms: impl IntoIterator<Item = &'a (PauliString, f64)>) -> Self {
        let mut m = Mat4::zeros();
        for (p, c) in terms {
            m += p.matrix() * C64::new(*c, 0.0);
        }
        Hermitian4(m)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }
}

/// `exp(-i h t)` through the eigendecomposition of `h`.
pub fn expm_hermitian(h: &Hermitian4, t: f64) -> Unitary4 {
    let eig = h.0.symmetric_eigen();
    let v = eig.eigenvectors;
    let mut phases = Mat4::zeros();
    for k in 0..4 {
        phases[(k, k)] = C64::from_polar(1.0, -eig.eigenvalues[k] * t);
    }
    Unitary4(v * phases * v.adjoint())
}

/// `exp(-i (angle/2) σ_p)`, evaluated in closed form.
pub fn pauli_rotation(p: PauliString, angle: f64) -> Unitary4 {
    let (s, c) = (angle / 2.0).sin_cos();
    Unitary4(Mat4::identity() * C64::new(c, 0.0) - p.matrix() * C64::new(0.0, s))
}

/// Single-qubit `exp(-i v·σ)` for a real 3-vector `v`.
pub fn su2_exp(v: [f64; 3]) -> Mat2 {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if norm == 0.0 {
        return Mat2::identity();
    }
    let (s, c) = norm.sin_cos();
    let gen = PauliIndex::X.matrix() * C64::new(v[0] / norm, 0.0)
        + PauliIndex::Y.matrix() * C64::new(v[1] / norm, 0.0)
        + PauliIndex::Z.matrix() * C64::new(v[2] / norm, 0.0);
    Mat2::identity() * C64::new(c, 0.0) - gen * C64::new(0.0, s)
}

/// Average gate fidelity `(d + |Tr(v†u)|²) / (d(d+1))` with d = 4.
pub fn average_fidelity(u: &Unitary4, v: &Unitary4) -> f64 {
    let t = (v.0.adjoint() * u.0).trace();
    (4.0 + t.norm_sqr()) / 20.0
}

/// `1 - average_fidelity(u, v)`, computed without the cancellation in `1 - F`.
///
/// With `W = v†u` and `p` the phase of `Tr W`, `d - |Tr W| = ‖W - p·I‖²/2`
/// for unitary `W`, so infidelities far below machine epsilon stay resolved.
pub fn infidelity(u: &Unitary4, v: &Unitary4) -> f64 {
    let w = v.0.adjoint() * u.0;
    // long products drift off the unit norm by ~1e-12; that drift is not a gate error
    let w = w / C64::new((w.norm_squared() / 4.0).sqrt(), 0.0);
    let t = w.trace();
    let abs_t = t.norm();
    if abs_t < 1e-8 {
        return (16.0 - abs_t * abs_t) / 20.0;
    }
    let phase = t / abs_t;
    let dist2 = (w - Mat4::identity() * phase).norm_squared();
    (0.5 * dist2 * (4.0 + abs_t) / 20.0).max(0.0)
}

/// Makhlin's pair of local invariants for a gate in the real-g1 class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalInvariants {
    pub g1: f64,
    pub g2: f64,
}

impl LocalInvariants {
    pub fn distance(&self, other: &LocalInvariants) -> f64 {
        ((self.g1 - other.g1).powi(2) + (self.g2 - other.g2).powi(2)).sqrt()
    }
}

/// Tolerance on the imaginary part of g1.
pub const INVARIANT_IMAG_TOL: f64 = 1e-10;

/// Magic (Bell) basis; columns are (|00⟩+|11⟩, −i(|00⟩−|11⟩), −i(|01⟩+|10⟩), |01⟩−|10⟩)/√2.
fn magic_basis() -> Mat4 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = C64::new(h, 0.0);
    let mi = C64::new(0.0, -h);
    let pi = C64::new(0.0, h);
    Mat4::new(
        r, mi, ZERO, ZERO, //
        ZERO, ZERO, mi, r, //
        ZERO, ZERO, mi, -r, //
        r, pi, ZERO, ZERO,
    )
}

/// Complex `(G1, G2)` after normalizing `u` to unit determinant.
pub fn makhlin_invariants_complex(u: &Unitary4) -> (C64, C64) {
    let det = u.determinant();
    let norm = det.powf(-0.25);
    let q = magic_basis();
    let m_basis = q.adjoint() * (u.0 * norm) * q;
    let m = m_basis.transpose() * m_basis;
    let tr = m.trace();
    let tr_sq = (m * m).trace();
    (tr * tr / 16.0, (tr * tr - tr_sq) / 4.0)
}

pub fn makhlin_invariants(u: &Unitary4) -> Result<LocalInvariants, AlgebraError> {
    let (g1, g2) = makhlin_invariants_complex(u);
    if g1.im.abs() > INVARIANT_IMAG_TOL {
        return Err(AlgebraError::ComplexInvariant { imag: g1.im });
    }
    Ok(LocalInvariants { g1: g1.re, g2: g2.re })
}

/// Real coordinates of `m = q1·I + i q2·X + i q3·Y + i q4·Z` (no unitarity check).
pub fn quaternion_components(m: &Mat2) -> [f64; 4] {
    [
        0.5 * (m[(0, 0)] + m[(1, 1)]).re,
        0.5 * (m[(0, 1)] + m[(1, 0)]).im,
        0.5 * (m[(0, 1)] - m[(1, 0)]).re,
        0.5 * (m[(0, 0)] - m[(1, 1)]).im,
    ]
}

/// `(Λ1, Λ2, Λ3, Λ4)` with `a = Λ1·I + iΛ2·X + iΛ3·Y + iΛ4·Z`.
pub fn su2_components(a: &Mat2) -> Result<[f64; 4], AlgebraError> {
    let defect = (a.determinant() - ONE).norm();
    if defect > 1e-10 {
        return Err(AlgebraError::NotSpecialUnitary { defect });
    }
    Ok(quaternion_components(a))
}

/// Inverse of [`quaternion_components`].
pub fn from_quaternion(q: [f64; 4]) -> Mat2 {
    Mat2::identity() * C64::new(q[0], 0.0)
        + PauliIndex::X.matrix() * C64::new(0.0, q[1])
        + PauliIndex::Y.matrix() * C64::new(0.0, q[2])
        + PauliIndex::Z.matrix() * C64::new(0.0, q[3])
}

pub fn cnot() -> Unitary4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    Unitary4(m)
}
