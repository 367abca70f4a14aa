//! Support code for the `dcnot` binary: run configs, CSV output and the
//! verification checks.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{
    analyze_channels, echo_condition_residuals, evaluate_with_error, length5_condition_residual, suppression_order,
    AnalysisError, AnalysisOptions, SuppressionOrder, XiZeta, INFIDELITY_FLOOR,
};
use crate::catalog::{named_sequence, CatalogError, NamedSequence};
use crate::noise::{
    local_gate_study, run_sweep, LocalNoiseMode, LocalStudyPoint, LocalStudySpec, NoiseError, NoiseScenario, Reference,
    SweepResult, SweepSpec,
};
use crate::optimizer::{objective, refine_table, ObjectiveSpec};
use crate::params::{theta0_polynomial, BaseLength, ParamTable};
use crate::sequence::{cnot_final, second_order_cnot, self_similar, self_similar_target};
use crate::su4::{cnot, infidelity, PauliString};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("could not parse config: {0}")]
    Config(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    /// Process exit code: 2 for anything the user can fix by changing inputs.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// Which parameter set named sequences are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamChoice {
    #[default]
    Published,
    Refined,
}

impl ParamChoice {
    pub fn table(self) -> ParamTable {
        match self {
            ParamChoice::Published => ParamTable::published(),
            ParamChoice::Refined => ParamTable::refined().clone(),
        }
    }
}

/// Either explicit values or `points` log-spaced values from `from` to `to` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaGrid {
    Values(Vec<f64>),
    Log { from: f64, to: f64, points: usize },
}

impl SigmaGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let v = match self {
            SigmaGrid::Values(v) => v.clone(),
            SigmaGrid::Log { from, to, points } => {
                if !(*from > 0.0 && *to > 0.0) {
                    return Err(CliError::Usage("log grid bounds must be positive".into()));
                }
                log_space(*from, *to, *points)
            }
        };
        if v.is_empty() {
            return Err(NoiseError::EmptyGrid.into());
        }
        if v.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(CliError::Usage("sigma values must be finite and non-negative".into()));
        }
        Ok(v)
    }
}

pub fn log_space(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![from],
        _ => {
            let (a, b) = (from.log10(), to.log10());
            (0..points).map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)).collect()
        }
    }
}

fn default_samples() -> usize {
    2000
}

/// Everything a sweep needs; a run is reproducible from this and nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Named sequence ids, one CSV series each.
    pub sequences: Vec<String>,
    pub scenario: NoiseScenario,
    pub sigma_grid: SigmaGrid,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reference: Reference,
    #[serde(default)]
    pub params: ParamChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON form, excluding the output path.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        hex(&Sha256::digest(serde_json::to_vec(&c).expect("config serializes")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.sequences.is_empty() {
            return Err(CliError::Usage("config lists no sequences".into()));
        }
        if self.n_samples == 0 {
            return Err(NoiseError::NoSamples.into());
        }
        self.scenario.validate()?;
        self.sigma_grid.values()?;
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn provenance(command: &str, config_hash: &str, seed: u64) -> String {
    format!("# dcnot {command} {}\n# config_sha256: {config_hash}\n# seed: {seed}\n", env!("CARGO_PKG_VERSION"))
}

/// Runs every series of a sweep config and returns the CSV text.
pub fn run_sweep_config(config: &RunConfig, workers: Option<usize>) -> Result<String, CliError> {
    config.validate()?;
    let table = config.params.table();
    let sigma_grid = config.sigma_grid.values()?;
    let mut out = provenance("sweep", &config.hash(), config.seed);
    out.push_str("sequence_id,sigma,mean_infidelity,std_error,n_samples,seed\n");
    for id in &config.sequences {
        let NamedSequence { sequence, target, .. } = named_sequence(id, &table)?;
        let spec = SweepSpec {
            sequence_id: id.clone(),
            sequence,
            target,
            scenario: config.scenario.clone(),
            sigma_grid: sigma_grid.clone(),
            n_samples: config.n_samples,
            seed: config.seed,
            reference: config.reference,
        };
        for r in run_sweep(&spec, workers)? {
            push_sweep_row(&mut out, &r);
        }
    }
    Ok(out)
}

fn push_sweep_row(out: &mut String, r: &SweepResult) {
    let _ = writeln!(
        out,
        "{},{:e},{:e},{:e},{},{}",
        r.sequence_id, r.sigma, r.mean_infidelity, r.std_error, r.n_samples, r.seed
    );
}

/// Parameters of a local-gate noise study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalNoiseConfig {
    pub sequence: String,
    pub mode: LocalNoiseMode,
    #[serde(default)]
    pub base: Option<NoiseScenario>,
    pub scales: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub params: ParamChoice,
}

impl LocalNoiseConfig {
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }
}

/// Channels a named sequence is built to cancel, when that is fewer than all 15:
/// the two-pulse CNOTs leave `ZZ` alone.
pub fn targeted_channels(id: &str) -> Option<Vec<PauliString>> {
    let two_pulse = id == "length40" || id.starts_with("cnot-k");
    two_pulse.then(|| PauliString::channels().filter(|c| *c != PauliString::ZZ).collect())
}

pub fn run_local_noise(config: &LocalNoiseConfig, workers: Option<usize>) -> Result<String, CliError> {
    if config.scales.is_empty() || config.sigmas.is_empty() {
        return Err(NoiseError::EmptyGrid.into());
    }
    let table = config.params.table();
    let named = named_sequence(&config.sequence, &table)?;
    let spec = LocalStudySpec {
        sequence_id: config.sequence.clone(),
        sequence: named.sequence,
        mode: config.mode,
        base: config.base.clone(),
        scales: config.scales.clone(),
        sigmas: config.sigmas.clone(),
        n_samples: config.n_samples,
        seed: config.seed,
    };
    let mut out = provenance("local-noise", &config.hash(), config.seed);
    out.push_str("sequence_id,scale,sigma,mean_infidelity,std_error,mean_local_infidelity,ratio\n");
    for p in local_gate_study(&spec, workers)? {
        let LocalStudyPoint { sequence_id, scale, sigma, mean_infidelity, std_error, mean_local_infidelity, ratio } = p;
        let _ = writeln!(
            out,
            "{sequence_id},{scale:e},{sigma:e},{mean_infidelity:e},{std_error:e},{mean_local_infidelity:e},{ratio:e}"
        );
    }
    Ok(out)
}

/// Amplitudes used for the empirical order column of `analyze`.
pub const ORDER_AMPLITUDES: [f64; 3] = [1e-3, 3e-3, 1e-2];

/// Channel report as CSV: channel, |first-order coefficient|, suppressed flag, empirical order.
pub fn analyze_csv(id: &str, table: &ParamTable) -> Result<String, CliError> {
    let named = named_sequence(id, table)?;
    let reports = analyze_channels(&named.sequence, &named.target, &AnalysisOptions::default())?;
    let reference = named.sequence.ideal();
    let builder = |d: &crate::analysis::ErrorVector| evaluate_with_error(&named.sequence, d);
    let mut out = String::from("channel,coefficient,suppressed,order\n");
    for r in reports {
        let order = match suppression_order(&builder, &reference, r.channel, &ORDER_AMPLITUDES, INFIDELITY_FLOOR) {
            Ok(SuppressionOrder::Measured { order, .. }) => order.to_string(),
            Ok(SuppressionOrder::Absent) => "none".into(),
            Err(_) => "ill-conditioned".into(),
        };
        let _ = writeln!(out, "{},{:e},{},{}", r.channel, r.magnitude(), r.suppressed, order);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckFn = fn(&ParamTable) -> (bool, String);

const CHECKS: &[(&str, &str, CheckFn)] = &[
    ("theta0-root", "θ0 solves 4cos²θ + 2cosθ - 3 = 0 and is about 0.27π", check_theta0),
    ("length5-condition", "length-5 first-order condition vanishes at θ0", check_length5),
    ("closed-forms", "parameter-free sequences reproduce their targets", check_closed_forms),
    ("cancellation-sets", "first-order coefficients vanish exactly on the expected channels", check_cancellation),
    ("final-cnot-intrinsic", "ZZ-corrected CNOT constructions are noise-free CNOTs", check_final_cnot),
    ("self-similar-intrinsic", "ZZ-corrected rotations hit their targets", check_self_similar),
    ("published-objective", "objective is near zero at the tabulated angles", check_objective),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _, _)| *n).collect()
}

/// Runs every check, or only `only` if given.
pub fn run_checks(table: &ParamTable, only: Option<&str>) -> Result<Vec<CheckOutcome>, CliError> {
    if let Some(name) = only {
        if !CHECKS.iter().any(|(n, _, _)| *n == name) {
            return Err(CliError::Usage(format!("unknown check {name:?}; known checks: {}", check_names().join(", "))));
        }
    }
    Ok(CHECKS
        .iter()
        .filter(|(n, _, _)| only.is_none_or(|o| o == *n))
        .map(|(name, _, f)| {
            let (passed, detail) = f(table);
            CheckOutcome { name, passed, detail }
        })
        .collect())
}

pub fn check_table(outcomes: &[CheckOutcome]) -> String {
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for o in outcomes {
        let mark = if o.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{mark}  {:width$}  {}", o.name, o.detail);
    }
    out
}

fn check_theta0(t: &ParamTable) -> (bool, String) {
    let r = theta0_polynomial(t.theta0).abs();
    let ratio = t.theta0 / std::f64::consts::PI;
    (r < 1e-12 && (ratio - 0.27).abs() < 0.005, format!("residual {r:.1e}, θ0/π = {ratio:.6}"))
}

fn check_length5(t: &ParamTable) -> (bool, String) {
    let closed = length5_condition_residual(t.theta0, -1, 1, 1);
    let seq = crate::sequence::length5(t.theta0);
    let worst = XiZeta::from_sequence(&seq)
        .and_then(|xz| {
            let mut worst = 0.0f64;
            for c in PauliString::channels().filter(|c| !c.commutes_with(PauliString::ZZ)) {
                let (re, im) = echo_condition_residuals(&xz, c)?;
                worst = worst.max(re.hypot(im));
            }
            Ok(worst)
        })
        .unwrap_or(f64::INFINITY);
    (closed < 1e-12 && worst < 1e-12, format!("closed form {closed:.1e}, echo frames {worst:.1e}"))
}

fn worst_infidelity(t: &ParamTable, ids: &[&str]) -> (f64, String) {
    let mut worst = (0.0, String::new());
    for id in ids {
        let inf = match named_sequence(id, t) {
            Ok(s) => infidelity(&s.sequence.ideal(), &s.target),
            Err(_) => f64::INFINITY,
        };
        if inf >= worst.0 {
            worst = (inf, id.to_string());
        }
    }
    worst
}

fn check_closed_forms(t: &ParamTable) -> (bool, String) {
    let ids = [
        "uncorrected-ising",
        "length2",
        "length2-cnot",
        "length4",
        "length5",
        "length10",
        "length20",
        "cnot-k5",
        "cnot-k10",
        "cnot-k20",
    ];
    let (inf, id) = worst_infidelity(t, &ids);
    (inf < 1e-10, format!("worst infidelity {inf:.1e} ({id})"))
}

fn check_cancellation(t: &ParamTable) -> (bool, String) {
    let refined = if *t == ParamTable::published() { ParamTable::refined().clone() } else { refine_table(t) };
    let expected = [("length2", 4), ("length5", 8), ("length20", 14), ("cnot-final-k20", 15)];
    let mut detail = Vec::new();
    let mut ok = true;
    for (id, count) in expected {
        let result = named_sequence(id, &refined).map_err(CliError::from).and_then(|s| {
            let reports = analyze_channels(&s.sequence, &s.target, &AnalysisOptions::default())?;
            let suppressed = reports.iter().filter(|r| r.suppressed).count();
            let separated = reports.iter().all(|r| r.suppressed || r.magnitude() > 1e-2);
            Ok((suppressed, separated))
        });
        match result {
            Ok((n, separated)) => {
                ok &= n == count && separated;
                detail.push(format!("{id} {n}/15"));
            }
            Err(e) => {
                ok = false;
                detail.push(format!("{id}: {e}"));
            }
        }
    }
    (ok, detail.join(", "))
}

fn check_final_cnot(t: &ParamTable) -> (bool, String) {
    let mut worst = (0.0f64, String::new());
    for k in BaseLength::ALL {
        let inf = infidelity(&cnot_final(k, t).ideal(), &cnot());
        if inf >= worst.0 {
            worst = (inf, format!("k = {}", k.k()));
        }
    }
    let second = infidelity(&second_order_cnot(t).ideal(), &cnot());
    let ok = worst.0 < 1e-10 && second < 1e-10;
    (ok, format!("worst {:.1e} ({}), second order {second:.1e}", worst.0, worst.1))
}

fn check_self_similar(t: &ParamTable) -> (bool, String) {
    let mut worst = (0.0f64, 0);
    for k in BaseLength::ALL {
        let inf = infidelity(&self_similar(k, t).ideal(), &self_similar_target(k, t.theta0));
        if inf >= worst.0 {
            worst = (inf, k.k());
        }
    }
    (worst.0 < 1e-10, format!("worst {:.1e} (k = {})", worst.0, worst.1))
}

fn check_objective(t: &ParamTable) -> (bool, String) {
    let mut worst = objective(&t.cnot.psi(), &ObjectiveSpec::cnot(t.cnot.n(), t.theta0));
    let mut which = "cnot".to_string();
    for k in BaseLength::ALL {
        let c = &t.self_similar(k).correction;
        let f = objective(&c.psi(), &ObjectiveSpec::rotation(k, c.n(), t.theta0));
        if f > worst {
            worst = f;
            which = format!("self-similar k = {}", k.k());
        }
    }
    (worst < 1e-9, format!("worst {worst:.1e} ({which})"))
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.into(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_space_endpoints() {
        let v = log_space(1e-4, 1e-2, 5);
        assert_eq!(v.len(), 5);
        assert!((v[0] - 1e-4).abs() < 1e-18 && (v[4] - 1e-2).abs() < 1e-16);
        assert!((v[2] - 1e-3).abs() < 1e-17);
    }

    #[test]
    fn config_parsing() {
        let c = RunConfig::from_json(
            r#"{"sequences":["cnot-k20"],"scenario":{"type":"heisenberg-fields"},
                "sigma_grid":{"from":1e-4,"to":1e-2,"points":3}}"#,
        )
        .unwrap();
        assert_eq!(c.n_samples, 2000);
        assert_eq!(c.sigma_grid.values().unwrap().len(), 3);
        assert!(RunConfig::from_json(
            r#"{"sequences":[],"scenario":{"type":"heisenberg-fields"},"sigma_grid":[],"extra":1}"#
        )
        .is_err());

        let mut empty = c.clone();
        empty.sigma_grid = SigmaGrid::Values(vec![]);
        assert!(matches!(empty.validate(), Err(CliError::Noise(NoiseError::EmptyGrid))));
    }

    #[test]
    fn hash_ignores_output_path() {
        let c = RunConfig::from_json(
            r#"{"sequences":["cnot-k20"],"scenario":{"type":"heisenberg-fields"},"sigma_grid":[1e-3]}"#,
        )
        .unwrap();
        let mut d = c.clone();
        d.output = Some("elsewhere.csv".into());
        assert_eq!(c.hash(), d.hash());
        d.seed = 1;
        assert_ne!(c.hash(), d.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn two_pulse_sequences_leave_zz_out() {
        let c = targeted_channels("length40").unwrap();
        assert_eq!(c.len(), 14);
        assert!(!c.contains(&PauliString::ZZ));
        assert_eq!(targeted_channels("cnot-k5").map(|c| c.len()), Some(14));
        assert_eq!(targeted_channels("length120"), None);
    }

    #[test]
    fn unknown_check_is_usage_error() {
        assert!(matches!(run_checks(&ParamTable::published(), Some("nope")), Err(CliError::Usage(_))));
        let one = run_checks(&ParamTable::published(), Some("theta0-root")).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].passed);
    }
}
