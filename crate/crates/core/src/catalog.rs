//! Named sequences and JSON sequence descriptors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{BaseLength, ParamError, ParamTable, ZzCorrection};
use crate::sequence::{
    base_sequence, cnot_final, cnot_two_pulse, length2, length2_cnot, length4, length5, length5_of, second_order_cnot,
    self_similar, self_similar_target, sqrt_swap_cnot, uncorrected_cnot, zz_corrected, zz_rotation, LocalGate,
    Sequence, SequenceError,
};
use crate::su4::{cnot, pauli_rotation, AlgebraError, PauliString, Unitary4};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown sequence id {id:?}; known ids: {}", known.join(", "))]
    UnknownSequence { id: String, known: Vec<String> },
    #[error("invalid sequence descriptor: {0}")]
    Descriptor(String),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("could not parse descriptor JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone)]
pub struct NamedSequence {
    pub id: String,
    pub sequence: Sequence,
    /// Gate the noise-free sequence implements (under the noise model it was designed for).
    pub target: Unitary4,
}

const IDS: &[(&str, &str)] = &[
    ("uncorrected-ising", "single (π/2)_ZZ block dressed into a CNOT"),
    ("sqrt-swap-cnot", "two √SWAP blocks of an isotropic exchange coupling dressed into a CNOT"),
    ("length2", "U2_XX[(π/4)_ZZ]"),
    ("length2-cnot", "length-2 sequence dressed into a CNOT"),
    ("length4", "U2_XX[U2_ZI[(π/8)_ZZ]]"),
    ("length5", "length-5 sequence at θ0"),
    ("length10", "length-5 sequence of U2_XX blocks"),
    ("length20", "length-5 sequence of U2_XX[U2_ZI] blocks"),
    ("cnot-k5", "CNOT from two U^(5)"),
    ("cnot-k10", "CNOT from two U^(10)"),
    ("cnot-k20", "CNOT from two U^(20) (40 blocks)"),
    ("cnot-final-k5", "ZZ-corrected CNOT from U^(5)"),
    ("cnot-final-k10", "ZZ-corrected CNOT from U^(10)"),
    ("cnot-final-k20", "ZZ-corrected CNOT from U^(20) (120 blocks)"),
    ("self-similar-k5", "ZZ-corrected rotation (θ0)_ZZ from U^(5)"),
    ("self-similar-k10", "ZZ-corrected rotation (θ0/2)_ZZ from U^(10)"),
    ("self-similar-k20", "ZZ-corrected rotation (θ0/4)_ZZ from U^(20)"),
    ("cnot-second-order", "cnot-final-k20 with each block replaced by self-similar-k20 (14400 blocks)"),
];

const ALIASES: &[(&str, &str)] = &[("length40", "cnot-k20"), ("length120", "cnot-final-k20")];

/// Every accepted id with a one-line description; aliases last.
pub fn sequence_ids() -> Vec<(String, String)> {
    IDS.iter()
        .map(|(id, d)| (id.to_string(), d.to_string()))
        .chain(ALIASES.iter().map(|(a, id)| (a.to_string(), format!("alias of {id}"))))
        .collect()
}

fn known() -> Vec<String> {
    sequence_ids().into_iter().map(|(id, _)| id).collect()
}

fn k_suffix(id: &str, prefix: &str) -> Option<BaseLength> {
    id.strip_prefix(prefix)?.parse::<u32>().ok()?.try_into().ok()
}

pub fn named_sequence(id: &str, table: &ParamTable) -> Result<NamedSequence, CatalogError> {
    let canonical = ALIASES.iter().find(|(a, _)| *a == id).map(|(_, c)| *c).unwrap_or(id);
    let t = table.theta0;
    let rotation = |angle: f64| pauli_rotation(PauliString::ZZ, angle);
    let (sequence, target) = match canonical {
        "uncorrected-ising" => (uncorrected_cnot(), cnot()),
        "sqrt-swap-cnot" => (sqrt_swap_cnot(), cnot()),
        "length2" => (length2(zz_rotation(PI / 4.0), PauliString::XX), rotation(PI / 2.0)),
        "length2-cnot" => (length2_cnot(), cnot()),
        "length4" => (length4(zz_rotation(PI / 8.0), PauliString::ZI, PauliString::XX)?, rotation(PI / 2.0)),
        "length5" => (length5(t), rotation(5.0 * t)),
        "length10" => (base_sequence(BaseLength::K10, t), rotation(5.0 * t)),
        "length20" => (base_sequence(BaseLength::K20, t), rotation(5.0 * t)),
        "cnot-second-order" => (second_order_cnot(table), cnot()),
        other => {
            if let Some(k) = k_suffix(other, "cnot-final-k") {
                (cnot_final(k, table), cnot())
            } else if let Some(k) = k_suffix(other, "cnot-k") {
                (cnot_two_pulse(k, table), cnot())
            } else if let Some(k) = k_suffix(other, "self-similar-k") {
                (self_similar(k, table), self_similar_target(k, t))
            } else {
                return Err(CatalogError::UnknownSequence { id: id.to_string(), known: known() });
            }
        }
    };
    Ok(NamedSequence { id: id.to_string(), sequence, target })
}

/// JSON form of a sequence, e.g. `{"type": "length2", "echo": "XX", "parts": [{"type": "zz", "angle": 0.5}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Descriptor {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    /// One Pauli label, or two separated by a comma for `length4` (inner first).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub echo: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ZzCorrection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<Vec<Descriptor>>,
    /// Repetitions for `power`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
}

impl Descriptor {
    pub fn from_json(s: &str) -> Result<Self, CatalogError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn build(&self, table: &ParamTable) -> Result<Sequence, CatalogError> {
        let err = |m: &str| CatalogError::Descriptor(format!("{}: {m}", self.kind));
        let angle = || self.angle.ok_or_else(|| err("missing angle"));
        let k = || -> Result<BaseLength, CatalogError> { Ok(self.k.ok_or_else(|| err("missing k"))?.try_into()?) };
        let echoes = || -> Result<Vec<PauliString>, CatalogError> {
            let e = self.echo.as_deref().ok_or_else(|| err("missing echo"))?;
            Ok(e.split(',').map(|s| s.parse()).collect::<Result<_, _>>()?)
        };
        let parts = || -> Result<Vec<Sequence>, CatalogError> {
            self.parts.as_deref().unwrap_or_default().iter().map(|p| p.build(table)).collect()
        };
        let single_part = || -> Result<Sequence, CatalogError> {
            let mut p = parts()?;
            if p.len() != 1 {
                return Err(err("expects exactly one part"));
            }
            Ok(p.remove(0))
        };
        let one_echo = || -> Result<PauliString, CatalogError> {
            match echoes()?.as_slice() {
                [e] => Ok(*e),
                _ => Err(err("expects one echo")),
            }
        };

        Ok(match self.kind.as_str() {
            "zz" => zz_rotation(angle()?),
            "pauli" => Sequence::local(LocalGate::pauli(one_echo()?)),
            "rotation" => Sequence::local(LocalGate::rotation(one_echo()?, angle()?)?),
            "length2" => length2(single_part()?, one_echo()?),
            "length4" => match echoes()?.as_slice() {
                [a, b] => length4(single_part()?, *a, *b)?,
                _ => return Err(err("expects two echoes")),
            },
            "length5" => match &self.parts {
                Some(_) => length5_of(single_part()?),
                None => length5(self.angle.unwrap_or(table.theta0)),
            },
            "base" => base_sequence(k()?, table.theta0),
            "cnot-two-pulse" => cnot_two_pulse(k()?, table),
            "zz-corrected" => {
                let c = self.params.ok_or_else(|| err("missing params"))?;
                zz_corrected(&base_sequence(k()?, table.theta0), &c)
            }
            "cnot-final" => cnot_final(k()?, table),
            "self-similar" => self_similar(k()?, table),
            "second-order-cnot" => second_order_cnot(table),
            "concat" => Sequence::concat(parts()?),
            "power" => Sequence::power(single_part()?, self.n.ok_or_else(|| err("missing n"))?),
            other => return Err(CatalogError::Descriptor(format!("unknown type {other:?}"))),
        })
    }
}
