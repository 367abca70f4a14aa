//! Quasistatic noise models and Monte Carlo infidelity sweeps.
//!
//! Random draws are counter based: every normal variate is addressed by
//! `(seed, sample index, variable id)`, so a sample's noise does not depend on
//! which worker evaluates it or on the σ being swept (σ only rescales draws).

use std::collections::HashMap;
use std::sync::Arc;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::ErrorVector;
use crate::sequence::{sqrt_swap_cnot, LocalGate, Realization, Sequence};
use crate::su4::{infidelity, pauli_rotation, su2_exp, Hermitian4, Mat2, Mat4, PauliString, Unitary4, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("invalid noise scenario: {0}")]
    InvalidScenario(String),
    #[error("the sigma grid is empty")]
    EmptyGrid,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("could not start worker pool: {0}")]
    WorkerPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalNoiseMode {
    /// One perturbation per distinct gate, reused at every invocation.
    Systematic,
    /// A fresh perturbation at every invocation.
    Random,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseScenario {
    /// `α(ZZ + Δx XX + Δy YY)` plus six static single-qubit fields of width `σα`.
    HeisenbergFields {
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "one")]
        delta_x: f64,
        #[serde(default = "one")]
        delta_y: f64,
        #[serde(default)]
        sigma: f64,
    },
    /// `αZZ` plus static terms of width `σα` on the listed channels (all 15 by default).
    IsingFullSu4 {
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default)]
        sigma: f64,
        #[serde(default)]
        channels: Option<Vec<PauliString>>,
    },
    /// Every block is `exp(-i (θ/2) ZZ) · exp(i Σ δ σ)` with fixed `δ`.
    MultiplicativeChannel { delta: ErrorVector },
    /// Perturbs every local gate by `exp(-i a·σ) ⊗ exp(-i b·σ)` with
    /// components of width `scale`; blocks follow `base` (ideal if absent).
    LocalGateNoise {
        mode: LocalNoiseMode,
        scale: f64,
        #[serde(default)]
        base: Option<Box<NoiseScenario>>,
    },
}

impl NoiseScenario {
    pub fn validate(&self) -> Result<(), NoiseError> {
        let bad = |msg: &str| Err(NoiseError::InvalidScenario(msg.to_string()));
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        match self {
            NoiseScenario::HeisenbergFields { alpha, delta_x, delta_y, sigma } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return bad("alpha must be positive");
                }
                if !delta_x.is_finite() || !delta_y.is_finite() {
                    return bad("anisotropies must be finite");
                }
                if !nonneg(*sigma) {
                    return bad("sigma must be non-negative");
                }
            }
            NoiseScenario::IsingFullSu4 { alpha, sigma, channels } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return bad("alpha must be positive");
                }
                if !nonneg(*sigma) {
                    return bad("sigma must be non-negative");
                }
                if let Some(c) = channels {
                    if c.is_empty() || c.iter().any(|p| p.is_identity()) {
                        return bad("channel list must be non-empty and exclude II");
                    }
                }
            }
            NoiseScenario::MultiplicativeChannel { delta } => {
                if !PauliString::all().all(|p| delta.get(p).is_finite()) {
                    return bad("error amplitudes must be finite");
                }
            }
            NoiseScenario::LocalGateNoise { scale, base, .. } => {
                if !nonneg(*scale) {
                    return bad("scale must be non-negative");
                }
                if let Some(b) = base {
                    if matches!(**b, NoiseScenario::LocalGateNoise { .. }) {
                        return bad("local gate noise cannot be nested");
                    }
                    b.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Same scenario with the two-qubit noise width replaced.
    pub fn with_sigma(&self, sigma: f64) -> Self {
        let mut s = self.clone();
        match &mut s {
            NoiseScenario::HeisenbergFields { sigma: x, .. } | NoiseScenario::IsingFullSu4 { sigma: x, .. } => {
                *x = sigma
            }
            NoiseScenario::MultiplicativeChannel { .. } => {}
            NoiseScenario::LocalGateNoise { base, .. } => {
                if let Some(b) = base {
                    **b = b.with_sigma(sigma);
                }
            }
        }
        s
    }

    /// Same scenario with every noise amplitude set to zero.
    pub fn noise_free(&self) -> Self {
        match self.with_sigma(0.0) {
            NoiseScenario::MultiplicativeChannel { .. } => {
                NoiseScenario::MultiplicativeChannel { delta: ErrorVector::zero() }
            }
            NoiseScenario::LocalGateNoise { mode, base, .. } => {
                NoiseScenario::LocalGateNoise { mode, scale: 0.0, base }
            }
            other => other,
        }
    }
}

const HEISENBERG_FIELD_IDS: u64 = 32;
const SYSTEMATIC_BASE: u64 = 64;
const RANDOM_BASE: u64 = 1 << 50;

/// Counter-based source of standard normal variates for one sample.
#[derive(Clone)]
pub struct NoiseKey {
    rng: ChaCha20Rng,
}

impl NoiseKey {
    pub fn new(seed: u64, sample_index: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(sample_index);
        NoiseKey { rng }
    }

    /// Standard normal variate number `var_id` of this sample.
    pub fn normal(&mut self, var_id: u64) -> f64 {
        self.rng.set_word_pos(var_id as u128 * 4);
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        let u1 = ((a >> 11) + 1) as f64 / (1u64 << 53) as f64;
        let u2 = (b >> 11) as f64 / (1u64 << 53) as f64;
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

fn label_id(label: &str) -> u64 {
    let digest = Sha256::digest(label.as_bytes());
    let h = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    SYSTEMATIC_BASE + (h & ((1 << 40) - 1)) * 8
}

enum BlockModel {
    Ideal,
    Hamiltonian { vectors: Mat4, values: [f64; 4], time_scale: f64 },
    Multiplicative(Mat4),
}

enum LocalModel {
    Ideal,
    Noisy {
        mode: LocalNoiseMode,
        scale: f64,
        key: Box<NoiseKey>,
        systematic: HashMap<Arc<str>, (Mat2, Mat2, f64)>,
        invocations: u64,
    },
}

/// One draw of every noise parameter of a scenario.
pub struct NoiseRealization {
    block: BlockModel,
    local: LocalModel,
    cache: Vec<(u64, Mat4)>,
    local_infidelity_sum: f64,
    local_count: u64,
}

fn hamiltonian_model(h: &Hermitian4, alpha: f64) -> BlockModel {
    let eig = h.matrix().symmetric_eigen();
    let values = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2], eig.eigenvalues[3]];
    BlockModel::Hamiltonian { vectors: eig.eigenvectors, values, time_scale: 1.0 / (2.0 * alpha) }
}

fn block_model(scenario: &NoiseScenario, key: &mut NoiseKey) -> BlockModel {
    match scenario {
        NoiseScenario::HeisenbergFields { alpha, delta_x, delta_y, sigma } => {
            let mut terms = vec![
                (PauliString::ZZ, *alpha),
                (PauliString::XX, alpha * delta_x),
                (PauliString::new(crate::su4::PauliIndex::Y, crate::su4::PauliIndex::Y), alpha * delta_y),
            ];
            let fields = ["XI", "YI", "ZI", "IX", "IY", "IZ"];
            for (j, f) in fields.iter().enumerate() {
                let b = sigma * alpha * key.normal(HEISENBERG_FIELD_IDS + j as u64);
                terms.push((f.parse().expect("valid label"), b));
            }
            hamiltonian_model(&Hermitian4::from_paulis(&terms), *alpha)
        }
        NoiseScenario::IsingFullSu4 { alpha, sigma, channels } => {
            let mut terms = vec![(PauliString::ZZ, *alpha)];
            let active: Vec<PauliString> = match channels {
                Some(c) => c.clone(),
                None => PauliString::channels().collect(),
            };
            // draws are indexed by channel, so restricting channels keeps the others' values
            for p in active {
                terms.push((p, sigma * alpha * key.normal(p.index() as u64)));
            }
            hamiltonian_model(&Hermitian4::from_paulis(&terms), *alpha)
        }
        NoiseScenario::MultiplicativeChannel { delta } => BlockModel::Multiplicative(delta.unitary().into_matrix()),
        NoiseScenario::LocalGateNoise { base, .. } => match base {
            Some(b) => block_model(b, key),
            None => BlockModel::Ideal,
        },
    }
}

/// Draws every noise parameter of `scenario` for sample `sample_index`.
pub fn sample_realization(scenario: &NoiseScenario, seed: u64, sample_index: u64) -> NoiseRealization {
    let mut key = NoiseKey::new(seed, sample_index);
    let block = block_model(scenario, &mut key);
    let local = match scenario {
        NoiseScenario::LocalGateNoise { mode, scale, .. } if *scale > 0.0 => LocalModel::Noisy {
            mode: *mode,
            scale: *scale,
            key: Box::new(key),
            systematic: HashMap::new(),
            invocations: 0,
        },
        _ => LocalModel::Ideal,
    };
    NoiseRealization { block, local, cache: Vec::new(), local_infidelity_sum: 0.0, local_count: 0 }
}

fn draw_perturbation(key: &mut NoiseKey, base_id: u64, scale: f64) -> (Mat2, Mat2, f64) {
    let v: Vec<f64> = (0..6).map(|j| scale * key.normal(base_id + j)).collect();
    let single = |w: &[f64]| {
        let norm = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        (su2_exp([w[0], w[1], w[2]]), 2.0 / 3.0 * norm.sin().powi(2))
    };
    let (a, ia) = single(&v[..3]);
    let (b, ib) = single(&v[3..]);
    (a, b, 0.5 * (ia + ib))
}

impl NoiseRealization {
    /// Mean single-qubit infidelity of the local perturbations applied so far,
    /// averaged over both factors of every invocation.
    pub fn local_infidelity_mean(&self) -> f64 {
        if self.local_count == 0 {
            0.0
        } else {
            self.local_infidelity_sum / self.local_count as f64
        }
    }
}

impl Realization for NoiseRealization {
    fn block(&mut self, angle: f64) -> Mat4 {
        let (vectors, values, time_scale) = match &self.block {
            BlockModel::Ideal => return pauli_rotation(PauliString::ZZ, angle).into_matrix(),
            BlockModel::Multiplicative(e) => return pauli_rotation(PauliString::ZZ, angle).into_matrix() * e,
            BlockModel::Hamiltonian { vectors, values, time_scale } => (vectors, values, *time_scale),
        };
        let bits = angle.to_bits();
        if let Some((_, m)) = self.cache.iter().find(|(b, _)| *b == bits) {
            return *m;
        }
        let mut d = Mat4::zeros();
        for k in 0..4 {
            d[(k, k)] = C64::from_polar(1.0, -values[k] * angle * time_scale);
        }
        let m = vectors * d * vectors.adjoint();
        self.cache.push((bits, m));
        m
    }

    fn local(&mut self, gate: &LocalGate) -> Mat4 {
        let LocalModel::Noisy { mode, scale, key, systematic, invocations } = &mut self.local else {
            return *gate.matrix();
        };
        let (a, b, inf) = match mode {
            LocalNoiseMode::Systematic => *systematic
                .entry(Arc::from(gate.label()))
                .or_insert_with(|| draw_perturbation(key, label_id(gate.label()), *scale)),
            LocalNoiseMode::Random => {
                let id = RANDOM_BASE + *invocations * 8;
                *invocations += 1;
                draw_perturbation(key, id, *scale)
            }
        };
        self.local_infidelity_sum += inf;
        self.local_count += 1;
        crate::su4::kron(&a, &b) * gate.matrix()
    }
}

/// The uncorrected √SWAP-based CNOT under a realization.
pub fn uncorrected_cnot_heisenberg(r: &mut NoiseRealization) -> Unitary4 {
    sqrt_swap_cnot().evaluate(r)
}

pub fn corrected_cnot(seq: &Sequence, r: &mut NoiseRealization) -> Unitary4 {
    seq.evaluate(r)
}

/// What the noisy sequence is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// The ideal target gate.
    #[default]
    Target,
    /// The same sequence evaluated without noise; removes intrinsic infidelity.
    NoiseFree,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub sequence_id: String,
    pub sequence: Sequence,
    pub target: Unitary4,
    pub scenario: NoiseScenario,
    pub sigma_grid: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub reference: Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub sequence_id: String,
    pub sigma: f64,
    pub mean_infidelity: f64,
    /// Standard error of the mean; zero for a single sample.
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Default, Clone, Copy)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        }
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, NoiseError> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| NoiseError::WorkerPool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn reference_unitary(seq: &Sequence, target: &Unitary4, scenario: &NoiseScenario, reference: Reference) -> Unitary4 {
    match reference {
        Reference::Target => *target,
        Reference::NoiseFree => seq.evaluate(&mut sample_realization(&scenario.noise_free(), 0, 0)),
    }
}

/// Mean infidelity at each σ. Samples run in parallel on `workers` threads
/// (rayon's default pool if `None`) and are accumulated in index order, so
/// results are bitwise independent of the worker count.
pub fn run_sweep(spec: &SweepSpec, workers: Option<usize>) -> Result<Vec<SweepResult>, NoiseError> {
    spec.scenario.validate()?;
    if spec.sigma_grid.is_empty() {
        return Err(NoiseError::EmptyGrid);
    }
    if spec.n_samples == 0 {
        return Err(NoiseError::NoSamples);
    }
    if spec.sigma_grid.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(NoiseError::InvalidScenario("sigma values must be finite and non-negative".into()));
    }
    let reference = reference_unitary(&spec.sequence, &spec.target, &spec.scenario, spec.reference);
    with_workers(workers, || {
        spec.sigma_grid
            .iter()
            .map(|&sigma| {
                let scenario = spec.scenario.with_sigma(sigma);
                let values: Vec<f64> = (0..spec.n_samples as u64)
                    .into_par_iter()
                    .map(|i| {
                        let mut r = sample_realization(&scenario, spec.seed, i);
                        infidelity(&spec.sequence.evaluate(&mut r), &reference)
                    })
                    .collect();
                let mut w = Welford::default();
                values.iter().for_each(|&v| w.push(v));
                SweepResult {
                    sequence_id: spec.sequence_id.clone(),
                    sigma,
                    mean_infidelity: w.mean,
                    std_error: w.std_error(),
                    n_samples: spec.n_samples,
                    seed: spec.seed,
                }
            })
            .collect()
    })
}

#[derive(Debug, Clone)]
pub struct LocalStudySpec {
    pub sequence_id: String,
    pub sequence: Sequence,
    pub mode: LocalNoiseMode,
    /// Two-qubit noise acting alongside the local-gate errors.
    pub base: Option<NoiseScenario>,
    pub scales: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalStudyPoint {
    pub sequence_id: String,
    pub scale: f64,
    pub sigma: f64,
    pub mean_infidelity: f64,
    pub std_error: f64,
    pub mean_local_infidelity: f64,
    /// Sequence infidelity over the mean single-qubit local-gate infidelity.
    pub ratio: f64,
}

/// Sequence infidelity relative to its noise-free value, compared with the
/// infidelity of the individual local gates, for each `(scale, σ)` pair.
pub fn local_gate_study(spec: &LocalStudySpec, workers: Option<usize>) -> Result<Vec<LocalStudyPoint>, NoiseError> {
    if spec.scales.is_empty() || spec.sigmas.is_empty() {
        return Err(NoiseError::EmptyGrid);
    }
    if spec.n_samples == 0 {
        return Err(NoiseError::NoSamples);
    }
    let template = NoiseScenario::LocalGateNoise { mode: spec.mode, scale: 0.0, base: spec.base.clone().map(Box::new) };
    template.validate()?;
    let reference = spec.sequence.evaluate(&mut sample_realization(&template.noise_free(), 0, 0));

    with_workers(workers, || {
        let mut out = Vec::new();
        for &scale in &spec.scales {
            for &sigma in &spec.sigmas {
                let scenario = match template.with_sigma(sigma) {
                    NoiseScenario::LocalGateNoise { mode, base, .. } => {
                        NoiseScenario::LocalGateNoise { mode, scale, base }
                    }
                    _ => unreachable!("template is local gate noise"),
                };
                let values: Vec<(f64, f64)> = (0..spec.n_samples as u64)
                    .into_par_iter()
                    .map(|i| {
                        let mut r = sample_realization(&scenario, spec.seed, i);
                        let u = spec.sequence.evaluate(&mut r);
                        (infidelity(&u, &reference), r.local_infidelity_mean())
                    })
                    .collect();
                let mut w = Welford::default();
                let mut local = 0.0;
                for &(v, l) in &values {
                    w.push(v);
                    local += l;
                }
                let local = local / values.len() as f64;
                out.push(LocalStudyPoint {
                    sequence_id: spec.sequence_id.clone(),
                    scale,
                    sigma,
                    mean_infidelity: w.mean,
                    std_error: w.std_error(),
                    mean_local_infidelity: local,
                    ratio: if local > 0.0 { w.mean / local } else { f64::NAN },
                });
            }
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{uncorrected_cnot, zz_rotation};
    use crate::su4::cnot;

    #[test]
    fn normals_are_reproducible_and_addressable() {
        let mut a = NoiseKey::new(7, 3);
        let mut b = NoiseKey::new(7, 3);
        let x = a.normal(5);
        let _ = b.normal(9);
        assert_eq!(x, b.normal(5));
        assert_ne!(NoiseKey::new(7, 4).normal(5), x);
        assert_ne!(NoiseKey::new(8, 3).normal(5), x);
    }

    #[test]
    fn normals_have_unit_variance() {
        let mut k = NoiseKey::new(1, 0);
        let xs: Vec<f64> = (0..20_000).map(|i| k.normal(i)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.03 && (var - 1.0).abs() < 0.05, "{mean} {var}");
    }

    #[test]
    fn heisenberg_noise_free_sqrt_swap_cnot_is_exact() {
        let s = NoiseScenario::HeisenbergFields { alpha: 1.0, delta_x: 1.0, delta_y: 1.0, sigma: 0.0 };
        let mut r = sample_realization(&s, 1, 0);
        assert!(infidelity(&uncorrected_cnot_heisenberg(&mut r), &cnot()) < 1e-28);
        let s = NoiseScenario::HeisenbergFields { alpha: 2.5, delta_x: 1.0, delta_y: 1.0, sigma: 0.0 };
        let mut r = sample_realization(&s, 1, 0);
        assert!(infidelity(&uncorrected_cnot_heisenberg(&mut r), &cnot()) < 1e-28);
    }

    #[test]
    fn ising_noise_free_block_matches_ideal() {
        let s = NoiseScenario::IsingFullSu4 { alpha: 2.0, sigma: 0.0, channels: None };
        let mut r = sample_realization(&s, 1, 0);
        let u = zz_rotation(0.37).evaluate(&mut r);
        assert!(infidelity(&u, &pauli_rotation(PauliString::ZZ, 0.37)) < 1e-28);
    }

    #[test]
    fn multiplicative_scenario_matches_analysis_model() {
        let delta = ErrorVector::single(PauliString::XI, 0.01);
        let s = NoiseScenario::MultiplicativeChannel { delta };
        let seq = uncorrected_cnot();
        let a = seq.evaluate(&mut sample_realization(&s, 0, 0));
        let b = crate::analysis::evaluate_with_error(&seq, &delta);
        assert!(infidelity(&a, &b) < 1e-28);
    }

    #[test]
    fn scenario_validation() {
        assert!(NoiseScenario::IsingFullSu4 { alpha: 0.0, sigma: 0.1, channels: None }.validate().is_err());
        assert!(NoiseScenario::IsingFullSu4 { alpha: 1.0, sigma: -0.1, channels: None }.validate().is_err());
        assert!(NoiseScenario::IsingFullSu4 { alpha: 1.0, sigma: 0.1, channels: Some(vec![]) }.validate().is_err());
        let nested = NoiseScenario::LocalGateNoise {
            mode: LocalNoiseMode::Random,
            scale: 0.1,
            base: Some(Box::new(NoiseScenario::LocalGateNoise {
                mode: LocalNoiseMode::Random,
                scale: 0.1,
                base: None,
            })),
        };
        assert!(nested.validate().is_err());
    }

    #[test]
    fn scenario_json() {
        let s: NoiseScenario = serde_json::from_str(r#"{"type":"ising-full-su4","sigma":0.01}"#).unwrap();
        assert_eq!(s, NoiseScenario::IsingFullSu4 { alpha: 1.0, sigma: 0.01, channels: None });
        let s: NoiseScenario =
            serde_json::from_str(r#"{"type":"local-gate-noise","mode":"systematic","scale":0.001}"#).unwrap();
        assert!(matches!(s, NoiseScenario::LocalGateNoise { mode: LocalNoiseMode::Systematic, .. }));
        assert!(serde_json::from_str::<NoiseScenario>(r#"{"type":"ising-full-su4","sigmaa":1}"#).is_err());
    }

    fn ising_spec(n: usize) -> SweepSpec {
        SweepSpec {
            sequence_id: "uncorrected-ising".into(),
            sequence: uncorrected_cnot(),
            target: cnot(),
            scenario: NoiseScenario::IsingFullSu4 { alpha: 1.0, sigma: 0.0, channels: None },
            sigma_grid: vec![1e-3, 1e-2],
            n_samples: n,
            seed: 11,
            reference: Reference::Target,
        }
    }

    #[test]
    fn sweep_basics() {
        let r = run_sweep(&ising_spec(50), Some(2)).unwrap();
        assert_eq!(r.len(), 2);
        // uncorrected error is second order in σ
        let ratio = r[1].mean_infidelity / r[0].mean_infidelity;
        assert!((ratio - 100.0).abs() < 10.0, "{ratio}");
        let one = run_sweep(&ising_spec(1), None).unwrap();
        assert!(one[0].std_error == 0.0 && one[0].mean_infidelity > 0.0);
    }

    #[test]
    fn sweep_errors() {
        let mut s = ising_spec(5);
        s.sigma_grid.clear();
        assert_eq!(run_sweep(&s, None), Err(NoiseError::EmptyGrid));
        let mut s = ising_spec(0);
        s.sigma_grid = vec![0.1];
        assert_eq!(run_sweep(&s, None), Err(NoiseError::NoSamples));
    }

    #[test]
    fn sweep_is_independent_of_workers() {
        let a = run_sweep(&ising_spec(40), Some(1)).unwrap();
        let b = run_sweep(&ising_spec(40), Some(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn systematic_errors_repeat_per_label() {
        let s = NoiseScenario::LocalGateNoise { mode: LocalNoiseMode::Systematic, scale: 1e-2, base: None };
        let g = LocalGate::pauli(PauliString::XX);
        let mut r = sample_realization(&s, 5, 0);
        let a = r.local(&g);
        let b = r.local(&g);
        assert_eq!(a, b);
        let s = NoiseScenario::LocalGateNoise { mode: LocalNoiseMode::Random, scale: 1e-2, base: None };
        let mut r = sample_realization(&s, 5, 0);
        assert_ne!(r.local(&g), r.local(&g));
        assert!(r.local_infidelity_mean() > 0.0);
    }
}
