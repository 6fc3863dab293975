//! Fixed-step integration of truncated networks and empirical checks of the
//! certified inequalities along trajectories.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::certificate::{CompositeLyapunov, IssBound};
use crate::error::{Error, Result};
use crate::math;
use crate::network::{truncate, NetworkGenerator, TruncatedNetwork};

/// One traffic light feeding the entry of `cell`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Light {
    pub cell: usize,
    pub amplitude: f64,
    pub period: f64,
    /// Fraction of each period the light is green.
    pub duty: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub phase: f64,
}

impl Light {
    fn value(&self, t: f64) -> f64 {
        let s = (t + self.phase) / self.period;
        if s - math::floor(s) < self.duty {
            self.amplitude
        } else {
            0.0
        }
    }
}

/// External input `u(t) = (u₁(t), u₂(t), ...)`, one entry per input channel.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum InputSignal {
    Zero,
    ConstantOnFirstK {
        k: usize,
        amplitude: f64,
    },
    /// `uₖ = amplitude·ratioᵏ`.
    GeometricProfile {
        amplitude: f64,
        ratio: f64,
    },
    SinusoidOnFirstK {
        k: usize,
        amplitude: f64,
        frequency: f64,
    },
    TrafficLights {
        lights: Vec<Light>,
    },
}

impl InputSignal {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("input {what} must be finite")))
            }
        };
        match self {
            InputSignal::Zero => Ok(()),
            InputSignal::ConstantOnFirstK { amplitude, .. } => finite(*amplitude, "amplitude"),
            InputSignal::GeometricProfile { amplitude, ratio } => {
                finite(*amplitude, "amplitude")?;
                if *ratio > 0.0 && *ratio < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("geometric ratio must lie in (0, 1), got {ratio}")))
                }
            }
            InputSignal::SinusoidOnFirstK { amplitude, frequency, .. } => {
                finite(*amplitude, "amplitude")?;
                finite(*frequency, "frequency")
            }
            InputSignal::TrafficLights { lights } => {
                for l in lights {
                    finite(l.amplitude, "amplitude")?;
                    if l.cell == 0 || !(l.period > 0.0) || !(0.0..=1.0).contains(&l.duty) || !l.phase.is_finite() {
                        return Err(Error::Parameter(format!("invalid light at cell {}", l.cell)));
                    }
                }
                Ok(())
            }
        }
    }

    /// Channel `k ≥ 1` at time `t`.
    pub fn channel(&self, k: usize, t: f64) -> f64 {
        match self {
            InputSignal::Zero => 0.0,
            InputSignal::ConstantOnFirstK { k: n, amplitude } => {
                if k <= *n {
                    *amplitude
                } else {
                    0.0
                }
            }
            InputSignal::GeometricProfile { amplitude, ratio } => amplitude * math::powi(*ratio, k as i32),
            InputSignal::SinusoidOnFirstK { k: n, amplitude, frequency } => {
                if k <= *n {
                    amplitude * math::sin(2.0 * PI * frequency * t)
                } else {
                    0.0
                }
            }
            InputSignal::TrafficLights { lights } => lights.iter().filter(|l| l.cell == k).map(|l| l.value(t)).sum(),
        }
    }

    pub fn sample(&self, t: f64, out: &mut [f64]) {
        if matches!(self, InputSignal::Zero) {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        for (k, v) in out.iter_mut().enumerate() {
            *v = self.channel(k + 1, t);
        }
    }

    /// `|u(t)|_q` over all channels of the infinite signal.
    pub fn norm_at(&self, q: f64, t: f64) -> f64 {
        match self {
            InputSignal::Zero => 0.0,
            InputSignal::ConstantOnFirstK { k, amplitude } => amplitude.abs() * count_norm(*k, q),
            InputSignal::GeometricProfile { .. } => self.norm_bound(q),
            InputSignal::SinusoidOnFirstK { k, amplitude, frequency } => {
                (amplitude * math::sin(2.0 * PI * frequency * t)).abs() * count_norm(*k, q)
            }
            InputSignal::TrafficLights { lights } => {
                let cells = light_cells(lights);
                lq_norm(&cells.iter().map(|&c| self.channel(c, t)).collect::<Vec<_>>(), q)
            }
        }
    }

    /// `‖u‖_{q,∞}`.
    pub fn norm_bound(&self, q: f64) -> f64 {
        match self {
            InputSignal::Zero => 0.0,
            InputSignal::ConstantOnFirstK { k, amplitude } | InputSignal::SinusoidOnFirstK { k, amplitude, .. } => {
                amplitude.abs() * count_norm(*k, q)
            }
            InputSignal::GeometricProfile { amplitude, ratio } => {
                if q.is_infinite() {
                    amplitude.abs() * ratio
                } else {
                    let r = math::powf(*ratio, q);
                    amplitude.abs() * math::powf(r / (1.0 - r), 1.0 / q)
                }
            }
            InputSignal::TrafficLights { lights } => {
                let cells = light_cells(lights);
                let peak: Vec<f64> = cells
                    .iter()
                    .map(|&c| lights.iter().filter(|l| l.cell == c).map(|l| l.amplitude.abs()).sum())
                    .collect();
                lq_norm(&peak, q)
            }
        }
    }
}

fn light_cells(lights: &[Light]) -> Vec<usize> {
    let mut cells: Vec<usize> = lights.iter().map(|l| l.cell).collect();
    cells.sort_unstable();
    cells.dedup();
    cells
}

fn count_norm(k: usize, q: f64) -> f64 {
    if k == 0 {
        0.0
    } else if q.is_infinite() {
        1.0
    } else {
        math::powf(k as f64, 1.0 / q)
    }
}

fn lq_norm(v: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        v.iter().fold(0.0, |a, x| a.max(x.abs()))
    } else if q == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else if q == 2.0 {
        math::sqrt(v.iter().map(|x| x * x).sum())
    } else {
        math::powf(v.iter().map(|x| math::powf(x.abs(), q)).sum(), 1.0 / q)
    }
}

/// `|x|ₚ` with scalar blocks. `p = ∞` gives the sup norm.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    lq_norm(x, p)
}

/// `(Σᵢ |xᵢ|ᵖ)^{1/p}` with Euclidean block norms `|xᵢ|`.
pub fn block_lp_norm(x: &[f64], offsets: &[usize], p: f64) -> f64 {
    let blocks: Vec<f64> = offsets.windows(2).map(|w| math::sqrt(x[w[0]..w[1]].iter().map(|v| v * v).sum())).collect();
    lq_norm(&blocks, p)
}

pub fn lq_input_norm(u: &InputSignal, q: f64, t: f64) -> f64 {
    u.norm_at(q, t)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct IntegrateConfig {
    pub t_end: f64,
    pub h: f64,
    pub q: f64,
    pub blowup: f64,
    /// Record every `stride`-th step.
    pub stride: usize,
    /// Leading blocks whose states are kept; `None` keeps none.
    pub keep_blocks: Option<usize>,
}

impl Default for IntegrateConfig {
    fn default() -> Self {
        Self { t_end: 10.0, h: 1e-3, q: 2.0, blowup: 1e12, stride: 1, keep_blocks: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryRecord {
    pub method: String,
    pub h: f64,
    pub t_end: f64,
    pub p: f64,
    pub q: f64,
    pub t: Vec<f64>,
    pub norm_p: Vec<f64>,
    pub v: Option<Vec<f64>>,
    pub u_norm: Vec<f64>,
    /// `‖u‖_{q,∞}` of the applied signal.
    pub u_bound: f64,
    pub states: Vec<Vec<f64>>,
    pub diverged_at: Option<f64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn final_state_norm(&self) -> f64 {
        self.norm_p.last().copied().unwrap_or(0.0)
    }
}

/// Classical RK4 with inputs evaluated at the stage times.
pub fn integrate(
    net: &TruncatedNetwork,
    x0: &[f64],
    u: &InputSignal,
    cfg: &IntegrateConfig,
    v: Option<&CompositeLyapunov>,
) -> Result<TrajectoryRecord> {
    if !(cfg.h > 0.0) || !(cfg.t_end >= cfg.h) || !cfg.t_end.is_finite() {
        return Err(Error::Parameter(format!("need h > 0 and T ≥ h, got h = {}, T = {}", cfg.h, cfg.t_end)));
    }
    if cfg.stride == 0 {
        return Err(Error::Parameter("record stride must be ≥ 1".into()));
    }
    if x0.len() != net.state_dim() {
        return Err(Error::Shape(format!("x⁰ has length {}, network needs {}", x0.len(), net.state_dim())));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial state"));
    }
    u.validate()?;
    let steps = math::floor(cfg.t_end / cfg.h + 0.5) as usize;
    let n = x0.len();
    let keep = cfg.keep_blocks.map(|k| net.offsets()[k.min(net.len())]);
    let mut rec = TrajectoryRecord {
        method: "rk4".into(),
        h: cfg.h,
        t_end: steps as f64 * cfg.h,
        p: net.p(),
        q: cfg.q,
        t: Vec::new(),
        norm_p: Vec::new(),
        v: v.map(|_| Vec::new()),
        u_norm: Vec::new(),
        u_bound: u.norm_bound(cfg.q),
        states: Vec::new(),
        diverged_at: None,
    };
    let record = |rec: &mut TrajectoryRecord, t: f64, x: &[f64]| -> Result<bool> {
        let norm = block_lp_norm(x, net.offsets(), net.p());
        rec.t.push(t);
        rec.norm_p.push(norm);
        rec.u_norm.push(u.norm_at(cfg.q, t));
        if let (Some(vs), Some(v)) = (rec.v.as_mut(), v) {
            vs.push(v.eval(x)?);
        }
        if let Some(k) = keep {
            rec.states.push(x[..k].to_vec());
        }
        Ok(norm.is_finite() && norm <= cfg.blowup)
    };
    let mut x = x0.to_vec();
    let mut tmp = vec![0.0; n];
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut ub = vec![0.0; net.input_dim()];
    let h = cfg.h;
    record(&mut rec, 0.0, &x)?;
    for s in 0..steps {
        let t = s as f64 * h;
        u.sample(t, &mut ub);
        net.rhs_into(&x, &ub, &mut k[0]);
        u.sample(t + 0.5 * h, &mut ub);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k[0][i];
        }
        net.rhs_into(&tmp, &ub, &mut k[1]);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k[1][i];
        }
        net.rhs_into(&tmp, &ub, &mut k[2]);
        u.sample(t + h, &mut ub);
        for i in 0..n {
            tmp[i] = x[i] + h * k[2][i];
        }
        net.rhs_into(&tmp, &ub, &mut k[3]);
        for i in 0..n {
            x[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        let t1 = (s + 1) as f64 * h;
        let last = s + 1 == steps;
        if (s + 1) % cfg.stride == 0 || last {
            if !record(&mut rec, t1, &x)? {
                rec.diverged_at = Some(t1);
                break;
            }
        } else if x.iter().any(|v| !v.is_finite()) {
            record(&mut rec, t1, &x)?;
            rec.diverged_at = Some(t1);
            break;
        }
    }
    Ok(rec)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Violation {
    pub index: usize,
    pub t: f64,
    /// Amount by which the checked inequality fails.
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
    /// Largest `lhs − rhs` before tolerance.
    pub worst_gap: f64,
    pub horizon: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `tol(h) = c·h·(1 + V)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerance {
    pub c: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { c: 20.0 }
    }
}

impl Tolerance {
    pub fn at(&self, h: f64, v: f64) -> f64 {
        self.c * h * (1.0 + v.abs())
    }
}

fn lyapunov_samples(traj: &TrajectoryRecord) -> Result<&[f64]> {
    let v = traj.v.as_deref().ok_or_else(|| Error::InsufficientData("trajectory has no Lyapunov channel".into()))?;
    if v.len() < 2 {
        return Err(Error::InsufficientData("need at least two samples".into()));
    }
    Ok(v)
}

/// `(V(t+h) − V(t))/h ≤ −λ∞V(t) + μ̄γ̄ᵤ‖u‖^q + tol` at every recorded step.
pub fn verify_dissipation(traj: &TrajectoryRecord, v: &CompositeLyapunov, tol: Tolerance) -> Result<CheckReport> {
    let vs = lyapunov_samples(traj)?;
    let forcing = if traj.u_bound == 0.0 { 0.0 } else { v.input_coefficient() * math::powf(traj.u_bound, v.q) };
    let mut rep =
        CheckReport { checked: 0, violations: Vec::new(), worst_gap: f64::NEG_INFINITY, horizon: traj.t[vs.len() - 1] };
    for i in 0..vs.len() - 1 {
        let dt = traj.t[i + 1] - traj.t[i];
        let gap = (vs[i + 1] - vs[i]) / dt - (-v.lambda_inf * vs[i] + forcing);
        rep.worst_gap = rep.worst_gap.max(gap);
        rep.checked += 1;
        let excess = gap - tol.at(dt, vs[i]);
        if !(excess <= 0.0) {
            rep.violations.push(Violation { index: i, t: traj.t[i], excess });
        }
    }
    Ok(rep)
}

/// `V(φ(t)) ≤ e^{−εt}V(x⁰) + χ(‖u‖)` at every sample.
pub fn verify_envelope(traj: &TrajectoryRecord, bound: &IssBound, tol: Tolerance) -> Result<CheckReport> {
    let vs = lyapunov_samples(traj)?;
    let mut rep =
        CheckReport { checked: 0, violations: Vec::new(), worst_gap: f64::NEG_INFINITY, horizon: traj.t[vs.len() - 1] };
    for (i, (&t, &val)) in traj.t.iter().zip(vs).enumerate() {
        let gap = val - bound.v_envelope(t, vs[0], traj.u_bound);
        rep.worst_gap = rep.worst_gap.max(gap);
        rep.checked += 1;
        let excess = gap - tol.at(traj.h, val);
        if !(excess <= 0.0) {
            rep.violations.push(Violation { index: i, t, excess });
        }
    }
    Ok(rep)
}

/// Whether `V` is nonincreasing within tolerance.
pub fn verify_monotone(traj: &TrajectoryRecord, tol: Tolerance) -> Result<CheckReport> {
    let vs = lyapunov_samples(traj)?;
    let mut rep =
        CheckReport { checked: 0, violations: Vec::new(), worst_gap: f64::NEG_INFINITY, horizon: traj.t[vs.len() - 1] };
    for i in 0..vs.len() - 1 {
        let dt = traj.t[i + 1] - traj.t[i];
        let gap = vs[i + 1] - vs[i];
        rep.worst_gap = rep.worst_gap.max(gap);
        rep.checked += 1;
        let excess = gap - dt * tol.at(dt, vs[i]);
        if !(excess <= 0.0) {
            rep.violations.push(Violation { index: i, t: traj.t[i], excess });
        }
    }
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DecayChannel {
    /// `ln V(t)`.
    Lyapunov,
    /// `ln |x(t)|ₚ`; the rate of the state norm itself.
    StateNorm,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayFit {
    pub channel: DecayChannel,
    pub rate: f64,
    pub prefactor: f64,
    pub samples: usize,
}

pub const FIT_FLOOR: f64 = 1e-10;

/// Least-squares fit of `ln y = ln M − a·t` over samples with `y > 10⁻¹⁰`.
pub fn fit_decay(traj: &TrajectoryRecord, channel: DecayChannel) -> Result<DecayFit> {
    let ys: &[f64] = match channel {
        DecayChannel::Lyapunov => lyapunov_samples(traj)?,
        DecayChannel::StateNorm => &traj.norm_p,
    };
    let pts: Vec<(f64, f64)> = traj
        .t
        .iter()
        .zip(ys)
        .filter(|&(_, &y)| y > FIT_FLOOR && y.is_finite())
        .map(|(&t, &y)| (t, math::ln(y)))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!("{} samples above the fit floor", pts.len())));
    }
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    if !(stt > 0.0) {
        return Err(Error::InsufficientData("fit window spans no time".into()));
    }
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sty / stt;
    Ok(DecayFit { channel, rate: -slope, prefactor: math::exp(my - slope * mt), samples: pts.len() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbeRow {
    pub n: usize,
    pub n_next: usize,
    pub deviation: f64,
}

/// Largest ℓᵖ gap of the first `k` blocks between consecutive truncations.
pub fn truncation_convergence_probe(
    gen: &NetworkGenerator,
    x0_head: &[f64],
    k: usize,
    u: &InputSignal,
    cfg: &IntegrateConfig,
    n_list: &[usize],
) -> Result<Vec<ProbeRow>> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("truncation sizes must increase".into()));
    }
    if n_list.first().is_some_and(|&n| n < k + gen.bandwidth) {
        return Err(Error::Parameter(format!("smallest truncation must be ≥ K + bandwidth = {}", k + gen.bandwidth)));
    }
    let cfg = IntegrateConfig { keep_blocks: Some(k), ..*cfg };
    let mut runs = Vec::with_capacity(n_list.len());
    let mut offsets = Vec::new();
    for &n in n_list {
        let net = truncate(gen, n)?;
        let head = net.offsets()[k];
        if x0_head.len() != head {
            return Err(Error::Shape(format!("x⁰ head has length {}, first {k} blocks need {head}", x0_head.len())));
        }
        let mut x0 = vec![0.0; net.state_dim()];
        x0[..head].copy_from_slice(x0_head);
        runs.push(integrate(&net, &x0, u, &cfg, None)?);
        offsets = net.offsets()[..=k].to_vec();
    }
    let p = gen.p;
    Ok(n_list
        .windows(2)
        .zip(runs.windows(2))
        .map(|(ns, rs)| {
            let deviation = rs[0]
                .states
                .iter()
                .zip(&rs[1].states)
                .map(|(a, b)| {
                    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                    block_lp_norm(&d, &offsets, p)
                })
                .fold(0.0, f64::max);
            ProbeRow { n: ns[0], n_next: ns[1], deviation }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{ChainCoefficients, Family};

    fn decoupled(n: usize) -> (NetworkGenerator, TruncatedNetwork) {
        let gen = NetworkGenerator::new(Family::LinearChain(ChainCoefficients {
            diag: 1.0.into(),
            lower: 0.0.into(),
            upper: 0.0.into(),
            input: None,
            bound: None,
        }));
        let net = truncate(&gen, n).unwrap();
        (gen, net)
    }

    #[test]
    fn norms() {
        assert_eq!(lp_norm(&[1.0, 0.0], 2.0), 1.0);
        assert_eq!(lp_norm(&[1.0; 7], 1.0), 7.0);
        assert!((lp_norm(&[3.0, 4.0], 2.0) - 5.0).abs() < 1e-15);
        assert_eq!(lp_norm(&[3.0, -4.0], f64::INFINITY), 4.0);
        assert!((block_lp_norm(&[3.0, 4.0, 1.0], &[0, 2, 3], 1.0) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_exponential() {
        let (_, net) = decoupled(1);
        let cfg = IntegrateConfig { t_end: 1.0, h: 0.01, ..Default::default() };
        let rec = integrate(&net, &[1.0], &InputSignal::Zero, &cfg, None).unwrap();
        assert!((rec.final_state_norm() - (-1.0f64).exp()).abs() < 1e-9);
        assert_eq!(rec.len(), 101);
    }

    #[test]
    fn geometric_norm_closed_form() {
        let u = InputSignal::GeometricProfile { amplitude: 1.0, ratio: 0.5 };
        let direct: f64 = (1..200).map(|k| 0.25f64.powi(k)).sum::<f64>().sqrt();
        assert!((u.norm_bound(2.0) - direct).abs() < 1e-14);
        assert!(InputSignal::GeometricProfile { amplitude: 1.0, ratio: 1.0 }.validate().is_err());
    }

    #[test]
    fn traffic_lights_cycle() {
        let l = Light { cell: 2, amplitude: 1.0, period: 4.0, duty: 0.5, phase: 0.0 };
        let u = InputSignal::TrafficLights { lights: vec![l] };
        assert_eq!(u.channel(2, 1.0), 1.0);
        assert_eq!(u.channel(2, 3.0), 0.0);
        assert_eq!(u.channel(3, 1.0), 0.0);
        assert_eq!(u.norm_bound(2.0), 1.0);
    }

    #[test]
    fn fit_rejects_short_window() {
        let (_, net) = decoupled(1);
        let cfg = IntegrateConfig { t_end: 1.0, h: 0.5, ..Default::default() };
        let rec = integrate(&net, &[0.0], &InputSignal::Zero, &cfg, None).unwrap();
        assert!(matches!(fit_decay(&rec, DecayChannel::StateNorm), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn probe_decoupled_is_exact() {
        let (gen, _) = decoupled(1);
        let cfg = IntegrateConfig { t_end: 1.0, h: 0.01, ..Default::default() };
        let rows = truncation_convergence_probe(&gen, &[1.0, 0.5], 2, &InputSignal::Zero, &cfg, &[4, 8]).unwrap();
        assert_eq!(rows[0].deviation, 0.0);
        assert!(truncation_convergence_probe(&gen, &[1.0, 0.5], 2, &InputSignal::Zero, &cfg, &[8, 4]).is_err());
    }

    #[test]
    fn bad_step_rejected() {
        let (_, net) = decoupled(1);
        let cfg = IntegrateConfig { t_end: 1.0, h: 0.0, ..Default::default() };
        assert!(integrate(&net, &[1.0], &InputSignal::Zero, &cfg, None).is_err());
        let cfg = IntegrateConfig { t_end: 1.0, h: 0.1, ..Default::default() };
        assert!(integrate(&net, &[f64::NAN], &InputSignal::Zero, &cfg, None).is_err());
    }
}
