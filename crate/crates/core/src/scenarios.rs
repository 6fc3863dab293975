//! Shipped example networks and the end-to-end pipeline that runs them.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::certificate::{
    assemble_lyapunov, build_certificate, certify, iss_trajectory_bound, verify_certificate, CertifyConfig,
    CompositeLyapunov, IssBound, SmallGainCertificate, VerificationReport,
};
use crate::error::{Error, Result};
use crate::gains::{derive_gains, Assumption, AssumptionReport, DerivationParams, GainData};
use crate::linalg::Mat;
use crate::network::{
    truncate, ChainCoefficients, Family, LureCoefficients, NetworkGenerator, TrafficCoefficients, TruncatedNetwork,
};
use crate::operator::{build_gain_operator, spectral_bracket, SpectralBracket};
use crate::seq::{Periodic, Seq};
use crate::sim::{
    fit_decay, integrate, verify_dissipation, verify_envelope, verify_monotone, CheckReport, DecayChannel, DecayFit,
    InputSignal, IntegrateConfig, Light, Tolerance, TrajectoryRecord, Violation,
};

pub const SCENARIO_NAMES: [&str; 7] =
    ["chain-a", "chain-fail", "lure-platoon", "traffic", "counter-slow", "counter-gain", "step5"];

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Outcome {
    Certify,
    RejectAssumption { which: Assumption },
    SmallGainViolated,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum InitialState {
    /// Every coordinate of the first `k` blocks set to `value`.
    FirstK { k: usize, value: f64 },
    /// First coordinate of block `index`.
    Unit { index: usize },
    /// Leading coordinates given explicitly, the rest zero.
    Values { values: Vec<f64> },
}

impl InitialState {
    pub fn build(&self, net: &TruncatedNetwork) -> Result<Vec<f64>> {
        let mut x = vec![0.0; net.state_dim()];
        match self {
            &InitialState::FirstK { k, value } => {
                let end = net.offsets()[k.min(net.len())];
                x[..end].iter_mut().for_each(|v| *v = value);
            }
            &InitialState::Unit { index } => {
                if index == 0 || index > net.len() {
                    return Err(Error::InvalidIndex(index));
                }
                x[net.offsets()[index - 1]] = 1.0;
            }
            InitialState::Values { values } => {
                if values.len() > x.len() {
                    return Err(Error::Shape(format!("x⁰ has {} values, network has {}", values.len(), x.len())));
                }
                x[..values.len()].copy_from_slice(values);
            }
        }
        Ok(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimPlan {
    pub n: usize,
    pub t_end: f64,
    pub h: f64,
    pub x0: InitialState,
    /// Input for the forced run; the unforced run always uses `u = 0`.
    pub forced_input: InputSignal,
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub stride: usize,
}

#[cfg(feature = "serde")]
fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExampleScenario {
    pub name: String,
    pub generator: NetworkGenerator,
    pub params: DerivationParams,
    #[cfg_attr(feature = "serde", serde(default))]
    pub certify: CertifyConfig,
    pub sim: SimPlan,
    pub expected: Outcome,
}

pub type Overrides = BTreeMap<String, f64>;

/// Documented override keys per scenario.
pub fn override_keys(name: &str) -> Option<&'static [&'static str]> {
    Some(match name {
        "chain-a" | "chain-fail" => &["b_diag", "b_off", "eps", "delta", "b_u", "zeta"],
        "step5" => &["b_offset", "b_slope", "b_off", "eps", "delta"],
        "lure-platoon" => &["k0", "b0", "sigma", "kappa", "tau"],
        "traffic" => &["v", "l", "c", "e", "r", "eps"],
        "counter-slow" => &["theta"],
        "counter-gain" => &["eps"],
        _ => return None,
    })
}

struct Knobs<'a> {
    map: &'a Overrides,
}

impl Knobs<'_> {
    fn get(&self, key: &str, default: f64) -> f64 {
        self.map.get(key).copied().unwrap_or(default)
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Parameter(format!("override {key} must be positive, got {v}")))
        }
    }

    fn open_unit(&self, key: &str, default: f64, hi: f64) -> Result<f64> {
        let v = self.get(key, default);
        if v > 0.0 && v < hi {
            Ok(v)
        } else {
            Err(Error::Parameter(format!("override {key} must lie in (0, {hi}), got {v}")))
        }
    }
}

fn default_plan(n: usize) -> SimPlan {
    SimPlan {
        n,
        t_end: 10.0,
        h: 1e-3,
        x0: InitialState::FirstK { k: 5, value: 1.0 },
        forced_input: InputSignal::Zero,
        stride: 1,
    }
}

fn chain(name: &str, k: &Knobs, d: [f64; 4], expected: Outcome) -> Result<ExampleScenario> {
    let b = k.positive("b_diag", d[0])?;
    let off = k.get("b_off", d[1]);
    if !off.is_finite() {
        return Err(Error::Parameter("override b_off must be finite".into()));
    }
    let eps = k.positive("eps", d[2])?;
    let delta = k.positive("delta", d[3])?;
    let input = k.map.get("b_u").copied();
    let zeta = match input {
        Some(_) => Some(k.positive("zeta", (0.1f64).min(b / 4.0))?),
        None => None,
    };
    if !(eps + delta + zeta.unwrap_or(0.0) < b) {
        return Err(Error::Parameter(format!("need εᵢ + δᵢ (+ ζᵢ) < bᵢᵢ = {b}")));
    }
    let gen = NetworkGenerator::new(Family::LinearChain(ChainCoefficients {
        diag: b.into(),
        lower: off.into(),
        upper: off.into(),
        input: input.map(Seq::from),
        bound: None,
    }));
    let mut sim = default_plan(100);
    if input.is_some() {
        sim.forced_input = InputSignal::GeometricProfile { amplitude: 1.0, ratio: 0.5 };
    }
    Ok(ExampleScenario {
        name: name.into(),
        generator: gen,
        params: DerivationParams {
            eps: Some(eps.into()),
            delta: Some(delta.into()),
            zeta: zeta.map(Seq::from),
            ..Default::default()
        },
        certify: CertifyConfig::default(),
        sim,
        expected,
    })
}

/// Lyapunov matrix and rate used for the platoon.
pub fn platoon_lyapunov() -> (Mat, f64) {
    (Mat::from_rows(&[&[2.0, 1.0], &[1.0, 1.0]]).unwrap(), 0.9)
}

fn traffic_lights() -> InputSignal {
    let light = |cell, phase| Light { cell, amplitude: 1.0, period: 2.0, duty: 0.5, phase };
    InputSignal::TrafficLights { lights: vec![light(4, 0.0), light(5, 1.0), light(12, 0.0), light(13, 1.0)] }
}

pub fn make_scenario(name: &str, overrides: &Overrides) -> Result<ExampleScenario> {
    let keys = override_keys(name).ok_or_else(|| Error::UnknownScenario(name.to_string()))?;
    if let Some(bad) = overrides.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(Error::Parameter(format!("scenario {name} has no override {bad}; known: {}", keys.join(", "))));
    }
    let k = Knobs { map: overrides };
    let s = match name {
        "chain-a" => chain(name, &k, [1.0, 0.1, 0.1, 0.1], Outcome::Certify)?,
        "chain-fail" => chain(name, &k, [0.75, 0.5, 0.125, 0.125], Outcome::SmallGainViolated)?,
        "step5" => {
            let offset = k.get("b_offset", 0.7);
            let slope = k.positive("b_slope", 0.5)?;
            let eps = k.positive("eps", 0.1)?;
            let delta = k.positive("delta", 0.1)?;
            if !(offset + slope > eps + delta) {
                return Err(Error::Parameter("need b₁₁ > ε + δ".into()));
            }
            let gen = NetworkGenerator::new(Family::LinearChain(ChainCoefficients {
                diag: Seq::power(offset, slope, 1.0),
                lower: k.get("b_off", 0.1).into(),
                upper: k.get("b_off", 0.1).into(),
                input: None,
                bound: None,
            }));
            ExampleScenario {
                name: name.into(),
                generator: gen,
                params: DerivationParams { eps: Some(eps.into()), delta: Some(delta.into()), ..Default::default() },
                certify: CertifyConfig::default(),
                sim: SimPlan { n: 50, t_end: 5.0, ..default_plan(50) },
                expected: Outcome::Certify,
            }
        }
        "lure-platoon" => {
            let coeffs =
                LureCoefficients::platoon(k.positive("k0", 1.0)?, k.positive("b0", 2.0)?, k.get("sigma", 0.02));
            let (m, kappa) = platoon_lyapunov();
            ExampleScenario {
                name: name.into(),
                generator: NetworkGenerator::new(Family::Lure(coeffs)),
                params: DerivationParams {
                    lyapunov: Some(Periodic::constant(m)),
                    kappa: Some(k.positive("kappa", kappa)?.into()),
                    tau: Some(k.get("tau", 0.0).into()),
                    ..Default::default()
                },
                certify: CertifyConfig::default(),
                sim: SimPlan {
                    forced_input: InputSignal::GeometricProfile { amplitude: 1.0, ratio: 0.5 },
                    ..default_plan(50)
                },
                expected: Outcome::Certify,
            }
        }
        "traffic" => {
            let c = TrafficCoefficients {
                speed: k.positive("v", 1.0)?.into(),
                length: k.positive("l", 1.0)?.into(),
                c: k.open_unit("c", 0.1, 0.5)?,
                e: k.open_unit("e", 0.5, 1.0)?,
                r: k.positive("r", 1.0)?,
            };
            ExampleScenario {
                name: name.into(),
                generator: NetworkGenerator::new(Family::Traffic(c)),
                params: DerivationParams {
                    eps: Some(k.positive("eps", crate::gains::DEFAULT_TRAFFIC_EPS)?.into()),
                    ..Default::default()
                },
                certify: CertifyConfig::default(),
                sim: SimPlan { forced_input: traffic_lights(), ..default_plan(100) },
                expected: Outcome::Certify,
            }
        }
        "counter-slow" => ExampleScenario {
            name: name.into(),
            generator: NetworkGenerator::new(Family::CounterSlow),
            params: DerivationParams {
                eps: Some(k.open_unit("theta", crate::gains::DEFAULT_COUNTER_SLOW_THETA, 1.0)?.into()),
                ..Default::default()
            },
            certify: CertifyConfig::default(),
            sim: SimPlan {
                n: 200,
                t_end: 10.0,
                h: 1e-2,
                x0: InitialState::Unit { index: 200 },
                forced_input: InputSignal::Zero,
                stride: 1,
            },
            expected: Outcome::RejectAssumption { which: Assumption::DecayRate },
        },
        "counter-gain" => ExampleScenario {
            name: name.into(),
            generator: NetworkGenerator::new(Family::CounterGain),
            params: DerivationParams {
                eps: Some(k.open_unit("eps", crate::gains::DEFAULT_COUNTER_GAIN_EPS, 1.0)?.into()),
                ..Default::default()
            },
            certify: CertifyConfig::default(),
            sim: SimPlan {
                n: 50,
                t_end: 20.0,
                h: 1e-2,
                x0: InitialState::FirstK { k: 0, value: 0.0 },
                forced_input: InputSignal::ConstantOnFirstK { k: 50, amplitude: 1.0 },
                stride: 1,
            },
            expected: Outcome::RejectAssumption { which: Assumption::InputGain },
        },
        _ => unreachable!(),
    };
    s.generator.validate()?;
    Ok(s)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineOptions {
    pub simulate: bool,
    pub tolerance: Tolerance,
    /// Replaces the scenario's truncation size, horizon or step when set.
    pub n: Option<usize>,
    pub t_end: Option<f64>,
    pub h: Option<f64>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { simulate: true, tolerance: Tolerance::default(), n: None, t_end: None, h: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GainSummary {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub gamma_u_hi: f64,
    pub gamma_norm: f64,
    /// `‖Ψ‖₁,₁` when the rates are eventually periodic.
    pub psi_norm: Option<f64>,
}

impl GainSummary {
    pub fn of(g: &GainData) -> Self {
        let psi_norm = build_gain_operator(g).ok().filter(|op| op.is_exact()).map(|op| op.norm_bound());
        Self {
            lambda_lo: g.lambda_lo(),
            lambda_hi: g.lambda_hi(),
            gamma_u_hi: g.gamma_u_hi(),
            gamma_norm: g.gamma_norm(),
            psi_norm,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckSummary {
    pub checked: usize,
    pub violations: usize,
    pub worst_gap: f64,
    pub first_violation: Option<Violation>,
}

impl From<&CheckReport> for CheckSummary {
    fn from(r: &CheckReport) -> Self {
        Self {
            checked: r.checked,
            violations: r.violations.len(),
            worst_gap: r.worst_gap,
            first_violation: r.violations.first().copied(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunSummary {
    pub input: InputSignal,
    pub u_bound: f64,
    pub samples: usize,
    pub v0: f64,
    pub v_end: f64,
    pub norm0: f64,
    pub norm_end: f64,
    pub dissipation: CheckSummary,
    pub envelope: CheckSummary,
    pub monotone: Option<CheckSummary>,
    pub fit: Option<DecayFit>,
    pub diverged_at: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimulationSummary {
    pub n: usize,
    pub t_end: f64,
    pub h: f64,
    pub envelope_eps: f64,
    pub unforced: RunSummary,
    pub forced: Option<RunSummary>,
}

impl SimulationSummary {
    pub fn violations(&self) -> usize {
        let count = |r: &RunSummary| {
            r.dissipation.violations + r.envelope.violations + r.monotone.as_ref().map_or(0, |m| m.violations)
        };
        count(&self.unforced) + self.forced.as_ref().map_or(0, count)
    }
}

/// Simulations of the rejected counterexamples.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum NegativeControl {
    SlowDecay { n: usize, index: usize, fitted_rate: f64, predicted_rate: f64 },
    UnboundedInputGain { n: usize, amplitude: f64, worst_relative_error: f64, sup_norm: f64 },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineReport {
    pub scenario: String,
    pub expected: Outcome,
    pub outcome: Option<Outcome>,
    pub matches_expected: bool,
    pub gains: Option<GainSummary>,
    pub assumptions: Option<AssumptionReport>,
    pub bracket: Option<SpectralBracket>,
    pub certificate: Option<SmallGainCertificate>,
    pub verification: Option<VerificationReport>,
    pub simulation: Option<SimulationSummary>,
    pub negative_control: Option<NegativeControl>,
    pub errors: Vec<String>,
}

/// Brackets and, when `r(Ψ) < 1`, certifies. Rates needing a cap go
/// through the doubling search.
pub fn analyze_small_gain(
    g: &GainData,
    cfg: &CertifyConfig,
) -> (Option<SpectralBracket>, Result<SmallGainCertificate>) {
    if g.lambda.schedule().is_none() {
        return match certify(g, cfg) {
            Ok((c, _)) => (Some(c.bracket.clone()), Ok(c)),
            Err(e) => (None, Err(e)),
        };
    }
    let bracket = match build_gain_operator(g).and_then(|op| spectral_bracket(&op, &cfg.bracket)) {
        Ok(b) => b,
        Err(e) => return (None, Err(e)),
    };
    let cert = build_certificate(g, &bracket, cfg.rho, cfg);
    (Some(bracket), cert)
}

pub fn run_pipeline(s: &ExampleScenario, opts: &PipelineOptions) -> PipelineReport {
    let mut rep = PipelineReport {
        scenario: s.name.clone(),
        expected: s.expected.clone(),
        outcome: None,
        matches_expected: false,
        gains: None,
        assumptions: None,
        bracket: None,
        certificate: None,
        verification: None,
        simulation: None,
        negative_control: None,
        errors: Vec::new(),
    };
    let mut plan = s.sim.clone();
    plan.n = opts.n.unwrap_or(plan.n);
    plan.t_end = opts.t_end.unwrap_or(plan.t_end);
    plan.h = opts.h.unwrap_or(plan.h);

    let g = match derive_gains(&s.generator, &s.params) {
        Ok(g) => g,
        Err(e) => {
            rep.errors.push(format!("derivation: {e}"));
            return rep;
        }
    };
    rep.gains = Some(GainSummary::of(&g));
    let assumptions = g.check_assumptions();
    let failure = assumptions.first_failure();
    rep.assumptions = Some(assumptions);
    if let Some(which) = failure {
        rep.outcome = Some(Outcome::RejectAssumption { which });
        if opts.simulate {
            match negative_control(s, &plan) {
                Ok(nc) => rep.negative_control = nc,
                Err(e) => rep.errors.push(format!("simulation: {e}")),
            }
        }
        return finish(rep);
    }
    let (bracket, cert) = analyze_small_gain(&g, &s.certify);
    rep.bracket = bracket;
    let cert = match cert {
        Ok(c) => c,
        Err(Error::SmallGainViolated(msg)) => {
            rep.outcome = Some(Outcome::SmallGainViolated);
            rep.errors.push(msg);
            return finish(rep);
        }
        Err(e) => {
            rep.errors.push(format!("certificate: {e}"));
            return finish(rep);
        }
    };
    rep.verification = Some(verify_certificate(&cert, &g, s.certify.check_horizon));
    rep.outcome = Some(Outcome::Certify);
    if opts.simulate {
        let v = assemble_lyapunov(&cert, &g);
        match simulate_certified(s, &plan, &v, opts.tolerance) {
            Ok(sim) => rep.simulation = Some(sim),
            Err(e) => rep.errors.push(format!("simulation: {e}")),
        }
    }
    rep.certificate = Some(cert);
    finish(rep)
}

fn finish(mut rep: PipelineReport) -> PipelineReport {
    rep.matches_expected = rep.outcome.as_ref() == Some(&rep.expected);
    rep
}

/// Unforced and forced runs checked against the dissipation inequality and
/// the envelope with `ε = λ∞/2`.
pub fn simulate_certified(
    s: &ExampleScenario,
    plan: &SimPlan,
    v: &CompositeLyapunov,
    tol: Tolerance,
) -> Result<SimulationSummary> {
    let net = truncate(&s.generator, plan.n)?;
    let x0 = plan.x0.build(&net)?;
    let cfg = IntegrateConfig { q: s.generator.q, ..run_config(plan) };
    let bound = iss_trajectory_bound(v, v.lambda_inf / 2.0)?;
    let unforced = checked_run(&net, &x0, &InputSignal::Zero, &cfg, v, &bound, tol)?.0;
    let forced = if matches!(plan.forced_input, InputSignal::Zero) || net.input_dim() == 0 {
        None
    } else {
        Some(checked_run(&net, &x0, &plan.forced_input, &cfg, v, &bound, tol)?.0)
    };
    Ok(SimulationSummary { n: plan.n, t_end: plan.t_end, h: plan.h, envelope_eps: bound.eps, unforced, forced })
}

/// One trajectory with every applicable check. Monotonicity and the decay
/// fit apply to unforced runs only.
pub fn checked_run(
    net: &TruncatedNetwork,
    x0: &[f64],
    u: &InputSignal,
    cfg: &IntegrateConfig,
    v: &CompositeLyapunov,
    bound: &IssBound,
    tol: Tolerance,
) -> Result<(RunSummary, TrajectoryRecord)> {
    let traj = integrate(net, x0, u, cfg, Some(v))?;
    let vs = traj.v.as_deref().unwrap_or(&[]);
    let zero = matches!(u, InputSignal::Zero);
    let summary = RunSummary {
        input: u.clone(),
        u_bound: traj.u_bound,
        samples: traj.len(),
        v0: vs.first().copied().unwrap_or(0.0),
        v_end: vs.last().copied().unwrap_or(0.0),
        norm0: traj.norm_p[0],
        norm_end: traj.final_state_norm(),
        dissipation: (&verify_dissipation(&traj, v, tol)?).into(),
        envelope: (&verify_envelope(&traj, bound, tol)?).into(),
        monotone: if zero { Some((&verify_monotone(&traj, tol)?).into()) } else { None },
        fit: if zero { fit_decay(&traj, DecayChannel::Lyapunov).ok() } else { None },
        diverged_at: traj.diverged_at,
    };
    Ok((summary, traj))
}

/// Integration settings for a plan.
pub fn run_config(plan: &SimPlan) -> IntegrateConfig {
    IntegrateConfig { t_end: plan.t_end, h: plan.h, stride: plan.stride, ..Default::default() }
}

fn negative_control(s: &ExampleScenario, plan: &SimPlan) -> Result<Option<NegativeControl>> {
    let net = truncate(&s.generator, plan.n)?;
    let x0 = plan.x0.build(&net)?;
    let cfg = run_config(plan);
    match s.generator.family {
        Family::CounterSlow => {
            let index = match plan.x0 {
                InitialState::Unit { index } => index,
                InitialState::FirstK { k, .. } => k,
                InitialState::Values { ref values } => values.iter().rposition(|v| *v != 0.0).map_or(1, |p| p + 1),
            };
            let traj = integrate(&net, &x0, &InputSignal::Zero, &cfg, None)?;
            let fit = fit_decay(&traj, DecayChannel::StateNorm)?;
            Ok(Some(NegativeControl::SlowDecay {
                n: plan.n,
                index,
                fitted_rate: fit.rate,
                predicted_rate: 1.0 / index.max(1) as f64,
            }))
        }
        Family::CounterGain => {
            let cfg = IntegrateConfig { keep_blocks: Some(plan.n), ..cfg };
            let traj = integrate(&net, &x0, &plan.forced_input, &cfg, None)?;
            let last = traj.states.last().ok_or_else(|| Error::InsufficientData("no samples".into()))?;
            let amplitude = plan.forced_input.channel(1, traj.t_end);
            let worst_relative_error = last
                .iter()
                .enumerate()
                .map(|(k, x)| {
                    let target = (k + 1) as f64 * amplitude;
                    ((x - target) / target).abs()
                })
                .fold(0.0, f64::max);
            let sup_norm = last.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            Ok(Some(NegativeControl::UnboundedInputGain { n: plan.n, amplitude, worst_relative_error, sup_norm }))
        }
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> PipelineOptions {
        PipelineOptions { n: Some(20), t_end: Some(1.0), h: Some(1e-2), ..Default::default() }
    }

    #[test]
    fn every_scenario_reaches_expected_outcome() {
        for name in SCENARIO_NAMES {
            let s = make_scenario(name, &Overrides::new()).unwrap();
            let mut o = quick();
            if name == "counter-slow" {
                o.n = None;
            }
            let rep = run_pipeline(&s, &o);
            assert!(rep.matches_expected, "{name}: {:?} {:?}", rep.outcome, rep.errors);
        }
    }

    #[test]
    fn unknown_name_and_bad_override() {
        assert!(matches!(make_scenario("nope", &Overrides::new()), Err(Error::UnknownScenario(_))));
        let mut o = Overrides::new();
        o.insert("c".into(), 0.7);
        assert!(matches!(make_scenario("traffic", &o), Err(Error::Parameter(_))));
        let mut o = Overrides::new();
        o.insert("sigma".into(), 0.1);
        assert!(make_scenario("traffic", &o).is_err());
    }

    #[test]
    fn raising_chain_coupling_violates() {
        let mut o = Overrides::new();
        o.insert("b_off".into(), 0.5);
        let rep = run_pipeline(&make_scenario("chain-a", &o).unwrap(), &quick());
        assert_eq!(rep.outcome, Some(Outcome::SmallGainViolated));
    }
}
