//! JSON report and certificate files.
//!
//! Reports hold only inputs and computed values, so repeated runs with the
//! same config and seed write identical bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sgain_core::certificate::{SmallGainCertificate, VerificationReport};
use sgain_core::gains::{Assumption, AssumptionReport};
use sgain_core::operator::SpectralBracket;
use sgain_core::scenarios::{CheckSummary, GainSummary, PipelineReport, RunSummary};
use sgain_core::sim::{DecayFit, InputSignal};

use crate::{ExitCode, Failure, SCHEMA};

#[derive(Clone, Debug, Serialize)]
pub struct Report<T> {
    pub schema: &'static str,
    pub command: &'static str,
    pub scenario: String,
    pub seed: u64,
    pub exit_code: u8,
    pub message: Option<String>,
    pub body: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(
        command: &'static str,
        scenario: &str,
        seed: u64,
        code: ExitCode,
        message: Option<String>,
        body: T,
    ) -> Self {
        Self { schema: SCHEMA, command, scenario: scenario.into(), seed, exit_code: code.code(), message, body }
    }

    pub fn to_json(&self) -> Result<String, Failure> {
        to_json(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub assumption: Assumption,
    pub symbol: String,
}

impl From<Assumption> for Rejection {
    fn from(a: Assumption) -> Self {
        Self { assumption: a, symbol: a.symbol().into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeBody {
    pub gains: GainSummary,
    pub assumptions: AssumptionReport,
    pub rejected: Option<Rejection>,
    pub bracket: Option<SpectralBracket>,
    /// `None` when the bracket was not reached.
    pub small_gain_holds: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyBody {
    pub analysis: AnalyzeBody,
    pub certificate: Option<SmallGainCertificate>,
    pub verification: Option<VerificationReport>,
    pub certificate_file: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryFile {
    pub input: InputSignal,
    pub file: String,
    pub rows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateBody {
    pub n: usize,
    pub t_end: f64,
    pub h: f64,
    pub certified: bool,
    /// Checked runs; empty when no certificate exists.
    pub runs: Vec<RunSummary>,
    /// `|x|ₚ` decay fit of the unforced run.
    pub norm_fit: Option<DecayFit>,
    pub trajectories: Vec<TrajectoryFile>,
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LabelledRun {
    pub label: String,
    #[serde(flatten)]
    pub run: RunSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityCheck {
    pub samples: usize,
    pub lower: f64,
    pub upper: f64,
    pub violations: usize,
    /// Largest relative excess over either side of the sandwich.
    pub worst_excess: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyBody {
    pub certificate_source: String,
    pub pointwise: VerificationReport,
    pub runs: Vec<LabelledRun>,
    pub coercivity: Option<CoercivityCheck>,
    pub failed_checks: Vec<String>,
}

impl VerifyBody {
    pub fn run_violations(&self) -> usize {
        self.runs.iter().map(|r| run_violations(&r.run)).sum()
    }
}

pub fn run_violations(r: &RunSummary) -> usize {
    let c = |s: &CheckSummary| s.violations;
    c(&r.dissipation) + c(&r.envelope) + r.monotone.as_ref().map_or(0, c)
}

pub type ScenarioBody = PipelineReport;

/// Certificate as written by `certify` and read by `verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub schema: String,
    pub scenario: String,
    pub certificate: SmallGainCertificate,
}

impl CertificateFile {
    pub fn new(scenario: &str, certificate: SmallGainCertificate) -> Self {
        Self { schema: SCHEMA.into(), scenario: scenario.into(), certificate }
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text =
            fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        let file: CertificateFile = serde_json::from_str(&text)
            .map_err(|e| Failure::input(format!("malformed certificate {}: {e}", path.display())))?;
        if file.schema != SCHEMA {
            return Err(Failure::input(format!("certificate schema {:?}, expected {SCHEMA:?}", file.schema)));
        }
        Ok(file)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, Failure> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| Failure::input(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), Failure> {
    fs::write(path, to_json(value)?).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}
