//! The five subcommands. Each writes `<out>/<command>.json` and returns the
//! exit code for the run.

use std::fs;
use std::path::{Path, PathBuf};

use sgain_core::certificate::{assemble_lyapunov, iss_trajectory_bound, verify_certificate, SmallGainCertificate};
use sgain_core::gains::{derive_gains, GainData};
use sgain_core::network::{truncate, TruncatedNetwork};
use sgain_core::scenarios::{
    analyze_small_gain, checked_run, run_config, run_pipeline, ExampleScenario, GainSummary, InitialState, Outcome,
    PipelineOptions, SimPlan,
};
use sgain_core::sim::{fit_decay, integrate, DecayChannel, InputSignal, IntegrateConfig, TrajectoryRecord};
use sgain_core::Error;

use crate::config::{Resolved, RunConfig};
use crate::export::save_trajectory_csv;
use crate::report::{
    run_violations, write_json, AnalyzeBody, CertificateFile, CertifyBody, LabelledRun, Rejection, Report,
    SimulateBody, TrajectoryFile, VerifyBody,
};
use crate::sweep::{coercivity_sweep, random_state, stream};
use crate::{ExitCode, Failure};

pub const CERTIFICATE_FILE: &str = "certificate.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Certify,
    Simulate,
    Verify,
    Scenario,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Certify => "certify",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Scenario => "scenario",
        }
    }
}

/// Where a finished command left its results.
#[derive(Clone, Debug)]
pub struct CommandResult {
    pub code: ExitCode,
    pub summary: String,
    pub report: PathBuf,
}

pub fn execute(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<CommandResult, Failure> {
    let r = cfg.resolve()?;
    fs::create_dir_all(out).map_err(|e| Failure::input(format!("cannot create {}: {e}", out.display())))?;
    let report = out.join(format!("{}.json", cmd.name()));
    let (code, summary) = match cmd {
        Command::Analyze => finish(cmd, &r, &report, analyze(&r)?)?,
        Command::Certify => finish(cmd, &r, &report, certify(&r, out)?)?,
        Command::Simulate => finish(cmd, &r, &report, simulate(&r, out)?)?,
        Command::Verify => finish(cmd, &r, &report, verify(&r, out)?)?,
        Command::Scenario => finish(cmd, &r, &report, scenario(&r, out)?)?,
    };
    Ok(CommandResult { code, summary, report })
}

/// Exit code, one-line summary and report body.
type Done<T> = (ExitCode, String, T);

fn finish<T: serde::Serialize>(
    cmd: Command,
    r: &Resolved,
    path: &Path,
    (code, summary, body): Done<T>,
) -> Result<(ExitCode, String), Failure> {
    let rep = Report::new(cmd.name(), &r.scenario.name, r.seed, code, Some(summary.clone()), body);
    write_json(path, &rep)?;
    Ok((code, summary))
}

struct Analysis {
    body: AnalyzeBody,
    gains: GainData,
    certificate: Option<Result<SmallGainCertificate, Error>>,
}

fn analysis(s: &ExampleScenario) -> Result<Analysis, Failure> {
    let g = derive_gains(&s.generator, &s.params).map_err(Failure::from_core)?;
    let assumptions = g.check_assumptions();
    let rejected = assumptions.first_failure();
    let mut body = AnalyzeBody {
        gains: GainSummary::of(&g),
        assumptions,
        rejected: rejected.map(Rejection::from),
        bracket: None,
        small_gain_holds: None,
    };
    let mut certificate = None;
    if rejected.is_none() {
        let (bracket, cert) = analyze_small_gain(&g, &s.certify);
        body.bracket = bracket;
        body.small_gain_holds = match &cert {
            Ok(_) => Some(true),
            Err(Error::SmallGainViolated(_)) => Some(false),
            Err(_) => None,
        };
        certificate = Some(cert);
    }
    Ok(Analysis { body, gains: g, certificate })
}

fn rejection_message(body: &AnalyzeBody) -> Option<String> {
    body.rejected.as_ref().map(|r| format!("assumption rejected: {} ({:?})", r.symbol, r.assumption))
}

fn analyze(r: &Resolved) -> Result<Done<AnalyzeBody>, Failure> {
    let a = analysis(&r.scenario)?;
    if let Some(msg) = rejection_message(&a.body) {
        return Ok((ExitCode::Assumption, msg, a.body));
    }
    let b = &a.body.bracket;
    let msg = format!(
        "all assumptions pass; λ̲ = {}, γ̄ᵤ = {}, Γ-norm = {}{}",
        a.body.gains.lambda_lo,
        a.body.gains.gamma_u_hi,
        a.body.gains.gamma_norm,
        b.as_ref().map_or(String::new(), |b| format!(", r(Ψ) ∈ [{}, {}]", b.lower, b.upper))
    );
    Ok((ExitCode::Ok, msg, a.body))
}

fn certify(r: &Resolved, out: &Path) -> Result<Done<CertifyBody>, Failure> {
    let a = analysis(&r.scenario)?;
    let mut body = CertifyBody { analysis: a.body, certificate: None, verification: None, certificate_file: None };
    if let Some(msg) = rejection_message(&body.analysis) {
        return Ok((ExitCode::Assumption, msg, body));
    }
    let cert = match a.certificate.expect("assumptions passed") {
        Ok(c) => c,
        Err(e) => {
            let f = Failure::from_core(e);
            if f.code == ExitCode::SmallGain {
                return Ok((f.code, f.message, body));
            }
            return Err(f);
        }
    };
    let report = verify_certificate(&cert, &a.gains, r.certify.check_horizon);
    let code = if report.passed { ExitCode::Ok } else { ExitCode::Verification };
    let msg = format!(
        "r(Ψ) ∈ [{}, {}], r̃ = {}, λ∞ = {}{}",
        cert.bracket.lower,
        cert.bracket.upper,
        cert.r_tilde,
        cert.lambda_inf,
        cert.h_cap.map_or(String::new(), |h| format!(", rates capped at {h}"))
    );
    write_json(&out.join(CERTIFICATE_FILE), &CertificateFile::new(&r.scenario.name, cert.clone()))?;
    body.certificate = Some(cert);
    body.verification = Some(report);
    body.certificate_file = Some(CERTIFICATE_FILE.into());
    Ok((code, msg, body))
}

fn label(u: &InputSignal) -> &'static str {
    if matches!(u, InputSignal::Zero) {
        "unforced"
    } else {
        "forced"
    }
}

/// Whether the plan asks for a forced run; an input on a network without
/// input channels is an error.
fn forced_input(plan: &SimPlan, net: &TruncatedNetwork) -> Result<bool, Failure> {
    if matches!(plan.forced_input, InputSignal::Zero) {
        return Ok(false);
    }
    if net.input_dim() == 0 {
        return Err(Failure::input("sim.input is set but the network has no input channels"));
    }
    Ok(true)
}

fn simulate(r: &Resolved, out: &Path) -> Result<Done<SimulateBody>, Failure> {
    let s = &r.scenario;
    let a = analysis(s)?;
    let plan = &r.plan;
    let net = truncate(&s.generator, plan.n).map_err(Failure::from_core)?;
    let x0 = plan.x0.build(&net).map_err(Failure::from_core)?;
    let cfg = IntegrateConfig { q: s.generator.q, keep_blocks: r.write_states.then_some(plan.n), ..run_config(plan) };
    let mut inputs = vec![InputSignal::Zero];
    if forced_input(plan, &net)? {
        inputs.push(plan.forced_input.clone());
    }
    let cert = a.certificate.and_then(Result::ok);
    let mut body = SimulateBody {
        n: plan.n,
        t_end: plan.t_end,
        h: plan.h,
        certified: cert.is_some(),
        runs: Vec::new(),
        norm_fit: None,
        trajectories: Vec::new(),
        violations: 0,
    };
    let mut trajectories: Vec<(&InputSignal, TrajectoryRecord)> = Vec::new();
    match &cert {
        Some(cert) => {
            let v = assemble_lyapunov(cert, &a.gains);
            let bound = iss_trajectory_bound(&v, v.lambda_inf / 2.0).map_err(Failure::from_core)?;
            for u in &inputs {
                let (run, traj) =
                    checked_run(&net, &x0, u, &cfg, &v, &bound, r.tolerance).map_err(Failure::from_core)?;
                body.violations += run_violations(&run);
                body.runs.push(run);
                trajectories.push((u, traj));
            }
        }
        None => {
            for u in &inputs {
                trajectories.push((u, integrate(&net, &x0, u, &cfg, None).map_err(Failure::from_core)?));
            }
        }
    }
    body.norm_fit = fit_decay(&trajectories[0].1, DecayChannel::StateNorm).ok();
    for (u, traj) in &trajectories {
        let file = format!("trajectory_{}.csv", label(u));
        let rows = save_trajectory_csv(&out.join(&file), traj)?;
        body.trajectories.push(TrajectoryFile { input: (*u).clone(), file, rows });
    }
    let code = if body.violations == 0 { ExitCode::Ok } else { ExitCode::Verification };
    let msg = match (&cert, body.norm_fit) {
        (Some(c), _) => {
            format!("{} checked runs, {} violations, λ∞ = {}", body.runs.len(), body.violations, c.lambda_inf)
        }
        (None, Some(fit)) => format!("uncertified network simulated; |x|ₚ decay rate ≈ {}", fit.rate),
        (None, None) => "uncertified network simulated".into(),
    };
    Ok((code, msg, body))
}

fn verify(r: &Resolved, out: &Path) -> Result<Done<VerifyBody>, Failure> {
    let s = &r.scenario;
    let path = r.certificate.clone().unwrap_or_else(|| out.join(CERTIFICATE_FILE));
    let file = CertificateFile::load(&path)?;
    if file.scenario != s.name {
        return Err(Failure::input(format!(
            "certificate was issued for {:?}, config names {:?}",
            file.scenario, s.name
        )));
    }
    let cert = file.certificate;
    let g = derive_gains(&s.generator, &s.params).map_err(Failure::from_core)?;
    let pointwise = verify_certificate(&cert, &g, r.certify.check_horizon);
    let mut body = VerifyBody {
        certificate_source: path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
        pointwise,
        runs: Vec::new(),
        coercivity: None,
        failed_checks: Vec::new(),
    };
    if !body.pointwise.passed {
        body.failed_checks.push(format!(
            "pointwise scan: worst margin {} at index {}",
            body.pointwise.worst_margin, body.pointwise.worst_index
        ));
    }
    let v = assemble_lyapunov(&cert, &g);
    let plan = &r.plan;
    let net = truncate(&s.generator, plan.n).map_err(Failure::from_core)?;
    match iss_trajectory_bound(&v, v.lambda_inf / 2.0) {
        Err(e) => body.failed_checks.push(format!("envelope: {e}")),
        Ok(bound) => {
            let cfg = IntegrateConfig { q: s.generator.q, ..run_config(plan) };
            let mut starts = vec![("planned".to_string(), plan.x0.clone())];
            for k in 0..r.random_states {
                let values = random_state(&mut stream(r.seed, k as u64), net.state_dim());
                starts.push((format!("random-{k}"), InitialState::Values { values }));
            }
            let forced = forced_input(plan, &net)?;
            for (name, x0) in &starts {
                let x0 = x0.build(&net).map_err(Failure::from_core)?;
                let mut inputs = vec![InputSignal::Zero];
                if forced {
                    inputs.push(plan.forced_input.clone());
                }
                for u in inputs {
                    let (run, _) =
                        checked_run(&net, &x0, &u, &cfg, &v, &bound, r.tolerance).map_err(Failure::from_core)?;
                    let label = format!("{name}/{}", label(&u));
                    if run_violations(&run) > 0 {
                        body.failed_checks.push(format!("run {label}: {} violations", run_violations(&run)));
                    }
                    body.runs.push(LabelledRun { label, run });
                }
            }
        }
    }
    if r.coercivity_samples > 0 {
        let c = coercivity_sweep(&v, &net, r.coercivity_samples, &mut stream(r.seed, u64::from(u32::MAX) + 1));
        if c.violations > 0 {
            body.failed_checks.push(format!("coercivity: {} of {} states", c.violations, c.samples));
        }
        body.coercivity = Some(c);
    }
    let code = if body.failed_checks.is_empty() { ExitCode::Ok } else { ExitCode::Verification };
    let msg = if body.failed_checks.is_empty() {
        format!("certificate holds; {} runs with zero violations", body.runs.len())
    } else {
        format!("{} failed checks: {}", body.failed_checks.len(), body.failed_checks[0])
    };
    Ok((code, msg, body))
}

fn scenario(r: &Resolved, out: &Path) -> Result<Done<sgain_core::scenarios::PipelineReport>, Failure> {
    let opts = PipelineOptions { tolerance: r.tolerance, ..PipelineOptions::default() };
    let rep = run_pipeline(&r.scenario, &opts);
    if let Some(cert) = &rep.certificate {
        write_json(&out.join(CERTIFICATE_FILE), &CertificateFile::new(&r.scenario.name, cert.clone()))?;
    }
    let sim_violations = rep.simulation.as_ref().map_or(0, |s| s.violations());
    let verified = rep.verification.as_ref().is_none_or(|v| v.passed);
    let code = match &rep.outcome {
        None => ExitCode::Input,
        Some(Outcome::RejectAssumption { .. }) => ExitCode::Assumption,
        Some(Outcome::SmallGainViolated) => ExitCode::SmallGain,
        Some(Outcome::Certify) if !verified || sim_violations > 0 || !rep.errors.is_empty() => ExitCode::Verification,
        Some(Outcome::Certify) => ExitCode::Ok,
    };
    let msg = format!(
        "outcome {:?} (expected {:?}){}",
        rep.outcome,
        rep.expected,
        if rep.errors.is_empty() { String::new() } else { format!("; {}", rep.errors.join("; ")) }
    );
    Ok((code, msg, rep))
}
