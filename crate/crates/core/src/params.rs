//! Numeric constants and parameter tables for the composite sequences.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("repetition counts {n:?} give 1 + Σn = {total}, expected 6")]
    BadRepetitions { n: [u32; 4], total: u32 },
    #[error("unsupported base sequence length {0}; expected 5, 10 or 20")]
    UnsupportedLength(u32),
}

/// Elementary angle of the length-5 sequence, the root of `4c² + 2c - 3 = 0`
/// in `[0, π/2]` with `c = cos θ0`.
pub fn theta0() -> f64 {
    ((13f64.sqrt() - 1.0) / 4.0).acos()
}

/// Residual of `4cos²θ + 2cosθ - 3`; zero at [`theta0`].
pub fn theta0_polynomial(theta: f64) -> f64 {
    let c = theta.cos();
    4.0 * c * c + 2.0 * c - 3.0
}

/// Angles of the two-pulse CNOT construction, in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPulseAngles {
    pub psi: f64,
    pub phi: f64,
}

impl TwoPulseAngles {
    pub fn closed_form() -> Self {
        let s13 = 13f64.sqrt();
        let psi = 2.0 * ((-57.0 + 16.0 * s13).sqrt() / (4.0 - s13 + 2.0 * (-7.0 + 2.0 * s13).sqrt())).atan();
        let phi = -2.0 * (-1.0 / (2.0 * (-14.0 + 4.0 * s13).sqrt())).acos();
        TwoPulseAngles { psi, phi }
    }
}

/// Length of the base sequence `U^(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum BaseLength {
    K5,
    K10,
    K20,
}

impl BaseLength {
    pub const ALL: [BaseLength; 3] = [BaseLength::K5, BaseLength::K10, BaseLength::K20];

    pub fn k(self) -> u32 {
        match self {
            BaseLength::K5 => 5,
            BaseLength::K10 => 10,
            BaseLength::K20 => 20,
        }
    }

    fn slot(self) -> usize {
        match self {
            BaseLength::K5 => 0,
            BaseLength::K10 => 1,
            BaseLength::K20 => 2,
        }
    }
}

impl TryFrom<u32> for BaseLength {
    type Error = ParamError;
    fn try_from(k: u32) -> Result<Self, ParamError> {
        match k {
            5 => Ok(BaseLength::K5),
            10 => Ok(BaseLength::K10),
            20 => Ok(BaseLength::K20),
            other => Err(ParamError::UnsupportedLength(other)),
        }
    }
}

impl From<BaseLength> for u32 {
    fn from(b: BaseLength) -> u32 {
        b.k()
    }
}

/// Rotation angles and repetition counts of the ZZ-correcting wrapper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCorrection")]
pub struct ZzCorrection {
    psi: [f64; 4],
    n: [u32; 4],
}

#[derive(Deserialize)]
struct RawCorrection {
    psi: [f64; 4],
    n: [u32; 4],
}

impl TryFrom<RawCorrection> for ZzCorrection {
    type Error = ParamError;
    fn try_from(r: RawCorrection) -> Result<Self, ParamError> {
        ZzCorrection::new(r.psi, r.n)
    }
}

impl ZzCorrection {
    pub fn new(psi: [f64; 4], n: [u32; 4]) -> Result<Self, ParamError> {
        let total = 1 + n.iter().sum::<u32>();
        if total != 6 {
            return Err(ParamError::BadRepetitions { n, total });
        }
        Ok(ZzCorrection { psi, n })
    }

    pub fn psi(&self) -> [f64; 4] {
        self.psi
    }

    pub fn n(&self) -> [u32; 4] {
        self.n
    }

    pub fn with_psi(&self, psi: [f64; 4]) -> Self {
        ZzCorrection { psi, n: self.n }
    }
}

/// The four ways of writing 5 as an ordered sum of four positive counts.
pub fn compositions() -> [[u32; 4]; 4] {
    [[2, 1, 1, 1], [1, 2, 1, 1], [1, 1, 2, 1], [1, 1, 1, 2]]
}

/// Local `IY` rotations that turn the corrected sequence into a CNOT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnotDressing {
    pub phi1: f64,
    pub phi2: f64,
}

/// Local dressing that turns the corrected sequence into `(5θ0/k)_ZZ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationDressing {
    pub m: u8,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarParams {
    pub correction: ZzCorrection,
    pub dressing: RotationDressing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTable {
    pub theta0: f64,
    pub two_pulse: TwoPulseAngles,
    pub cnot: ZzCorrection,
    pub cnot_dressing: CnotDressing,
    /// Indexed by k = 5, 10, 20.
    pub self_similar: [SelfSimilarParams; 3],
}

impl ParamTable {
    /// Values as printed, to six or seven digits.
    pub fn published() -> Self {
        let ss = |psi: [f64; 4], m: u8, beta: f64, gamma: f64| SelfSimilarParams {
            correction: ZzCorrection { psi, n: [1, 2, 1, 1] },
            dressing: RotationDressing { m, beta, gamma },
        };
        ParamTable {
            theta0: theta0(),
            two_pulse: TwoPulseAngles::closed_form(),
            cnot: ZzCorrection { psi: [1.135268, -0.405533, -1.841855, 0.191753], n: [1, 1, 1, 2] },
            cnot_dressing: CnotDressing { phi1: -1.607820, phi2: 0.234035 },
            self_similar: [
                ss([-0.183589, -3.061776, -2.019322, 1.750803], 1, 3.111045, -2.117345),
                ss([-0.103032, -3.129928, -2.583841, 0.844394], 1, 2.290846, -1.850509),
                ss([-0.0522225, -3.138440, -2.862841, 0.418648], 0, -1.216184, 1.430782),
            ],
        }
    }

    /// Published values polished to machine precision by [`crate::optimizer::refine_table`].
    /// Computed once per process.
    pub fn refined() -> &'static ParamTable {
        static REFINED: OnceLock<ParamTable> = OnceLock::new();
        REFINED.get_or_init(|| crate::optimizer::refine_table(&ParamTable::published()))
    }

    pub fn self_similar(&self, k: BaseLength) -> &SelfSimilarParams {
        &self.self_similar[k.slot()]
    }

    pub fn self_similar_mut(&mut self, k: BaseLength) -> &mut SelfSimilarParams {
        &mut self.self_similar[k.slot()]
    }
}
