//! Lyapunov gain data for each subsystem family.
//!
//! Every subsystem gets `Vᵢ(xᵢ) = xᵢᵀMᵢxᵢ` together with constants such that
//!
//! ```text
//! α̲ᵢ|xᵢ|ᵖ ≤ Vᵢ(xᵢ) ≤ ᾱᵢ|xᵢ|ᵖ
//! ∇Vᵢ·fᵢ ≤ −λᵢVᵢ(xᵢ) + Σⱼ γᵢⱼVⱼ(xⱼ) + γᵢᵤ|uᵢ|^q
//! ```

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::math;
use crate::network::{
    classify_traffic_cell, describe_index_class, ChainCoefficients, Family, LureCoefficients, NetworkGenerator,
    TrafficCoefficients,
};
use crate::seq::{Periodic, Schedule, Seq};

/// `γᵢ,ᵢ₊offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Coupling {
    pub offset: isize,
    pub gain: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NamedSeq {
    pub name: String,
    pub value: Seq,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GainData {
    pub lambda: Seq,
    pub gamma_u: Seq,
    pub alpha_lo: Seq,
    pub alpha_hi: Seq,
    /// Row `i` lists the nonzero-structure couplings of subsystem `i`.
    pub couplings: Periodic<Vec<Coupling>>,
    /// `Mᵢ` of `Vᵢ(xᵢ) = xᵢᵀMᵢxᵢ`.
    pub forms: Periodic<Mat>,
    pub p: f64,
    pub q: f64,
    pub bandwidth: usize,
    /// Free parameters chosen during derivation (`ε`, `δ`, ...).
    pub slack: Vec<NamedSeq>,
}

impl GainData {
    pub fn lambda_lo(&self) -> f64 {
        self.lambda.inf()
    }

    pub fn lambda_hi(&self) -> f64 {
        self.lambda.sup()
    }

    pub fn gamma_u_hi(&self) -> f64 {
        self.gamma_u.sup()
    }

    pub fn alpha_lo_bound(&self) -> f64 {
        self.alpha_lo.inf()
    }

    pub fn alpha_hi_bound(&self) -> f64 {
        self.alpha_hi.sup()
    }

    /// `(j, γᵢⱼ)` for the structural neighbours of `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.couplings.at(i).iter().filter_map(move |c| {
            let j = i as isize + c.offset;
            (j >= 1).then_some((j as usize, c.gain))
        })
    }

    pub fn gamma(&self, i: usize, j: usize) -> f64 {
        self.row(i).filter(|&(k, _)| k == j).map(|(_, g)| g).sum()
    }

    pub fn coupling_schedule(&self) -> Schedule {
        self.couplings.schedule()
    }

    /// Schedule of every per-index quantity, when one exists.
    pub fn schedule(&self) -> Option<Schedule> {
        Some(
            self.couplings
                .schedule()
                .join(self.forms.schedule())
                .join(self.lambda.schedule()?)
                .join(self.gamma_u.schedule()?),
        )
    }

    pub fn state_dim(&self, i: usize) -> usize {
        self.forms.at(i).rows()
    }

    /// `sup_j Σᵢ γᵢⱼ`, exact.
    pub fn gamma_norm(&self) -> f64 {
        let s = self.coupling_schedule();
        let m = self.bandwidth;
        // Column j only sees rows in [j − m, j + m]; beyond s.preamble + m
        // the column sums repeat with the coupling period.
        let cols = s.preamble + m + s.period.max(1);
        let mut sums = vec![0.0; cols + 1];
        for i in 1..=cols + m {
            for (j, g) in self.row(i) {
                if j <= cols {
                    sums[j] += g;
                }
            }
        }
        sums[1..].iter().copied().fold(0.0, f64::max)
    }

    pub fn check_assumptions(&self) -> AssumptionReport {
        let alpha_lo = self.alpha_lo_bound();
        let alpha_hi = self.alpha_hi_bound();
        let lambda_lo = self.lambda_lo();
        let gamma_u_hi = self.gamma_u_hi();
        let gamma_norm = self.gamma_norm();
        let verdicts = vec![
            (Assumption::Coercivity, alpha_lo > 0.0 && alpha_hi.is_finite() && alpha_lo <= alpha_hi),
            (Assumption::DecayRate, lambda_lo > 0.0),
            (Assumption::InputGain, gamma_u_hi.is_finite() && self.gamma_u.inf() >= 0.0),
            (Assumption::GammaBound, gamma_norm.is_finite()),
        ];
        AssumptionReport {
            alpha_lo,
            alpha_hi,
            lambda_lo,
            lambda_hi: self.lambda_hi(),
            gamma_u_hi,
            gamma_norm,
            verdicts,
        }
    }
}

/// Uniformity assumptions, in the order they are checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Assumption {
    /// `0 < α̲ ≤ α̲ᵢ ≤ ᾱᵢ ≤ ᾱ < ∞`.
    Coercivity,
    /// `inf λᵢ = λ̲ > 0`.
    DecayRate,
    /// `sup γᵢᵤ = γ̄ᵤ < ∞`.
    InputGain,
    /// `sup_j Σᵢ γᵢⱼ < ∞`.
    GammaBound,
}

impl Assumption {
    pub fn symbol(self) -> &'static str {
        match self {
            Assumption::Coercivity => "α̲/ᾱ",
            Assumption::DecayRate => "λ̲",
            Assumption::InputGain => "γ̄ᵤ",
            Assumption::GammaBound => "Γ-bound",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AssumptionReport {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub gamma_u_hi: f64,
    pub gamma_norm: f64,
    pub verdicts: Vec<(Assumption, bool)>,
}

impl AssumptionReport {
    pub fn first_failure(&self) -> Option<Assumption> {
        self.verdicts.iter().find(|(_, ok)| !ok).map(|(a, _)| *a)
    }

    pub fn all_pass(&self) -> bool {
        self.first_failure().is_none()
    }
}

/// Grid over `ε, δ ∈ (0, bᵢᵢ)` used when the chain slack is not given.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSearch {
    pub steps: usize,
}

impl Default for GridSearch {
    fn default() -> Self {
        Self { steps: 200 }
    }
}

/// Free parameters of the gain derivations. Unset fields take family defaults.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DerivationParams {
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub eps: Option<Seq>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub delta: Option<Seq>,
    /// Young slack spent on the chain input channel.
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub zeta: Option<Seq>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub grid: Option<GridSearch>,
    /// Lur'e `Mᵢ`.
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub lyapunov: Option<Periodic<Mat>>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub kappa: Option<Seq>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub tau: Option<Seq>,
}

pub const DEFAULT_TRAFFIC_EPS: f64 = 0.1;
pub const DEFAULT_CHAIN_ZETA: f64 = 0.1;
pub const DEFAULT_COUNTER_SLOW_THETA: f64 = 0.5;
pub const DEFAULT_COUNTER_GAIN_EPS: f64 = 0.25;

pub fn derive_gains(gen: &NetworkGenerator, params: &DerivationParams) -> Result<GainData> {
    gen.validate()?;
    let mut g = match &gen.family {
        Family::LinearChain(c) => derive_gains_linear_chain(gen, c, params)?,
        Family::Lure(c) => derive_gains_lure(gen, c, params)?,
        Family::Traffic(c) => derive_gains_traffic(gen, c, params.eps.as_ref())?,
        Family::CounterSlow => counter_slow(params.eps.as_ref())?,
        Family::CounterGain => counter_gain(params.eps.as_ref())?,
    };
    g.bandwidth = gen.bandwidth;
    g.p = gen.p;
    g.q = gen.q;
    Ok(g)
}

fn scalar_form() -> Periodic<Mat> {
    Periodic::constant(Mat::scalar(0.5))
}

fn const_of(s: &Seq, name: &str) -> Result<f64> {
    match s.schedule() {
        Some(sch) if sch.preamble == 0 && sch.period == 1 => Ok(s.at(1)),
        _ => Err(Error::Unsupported(format!("closed-form coefficients need a constant {name}, got {s:?}"))),
    }
}

fn require_schedule(s: &Seq, what: &str) -> Result<Schedule> {
    s.schedule().ok_or_else(|| Error::Unsupported(format!("{what} must be eventually periodic for this family")))
}

/// Best `(ε, δ)` on the grid for one chain row.
fn chain_grid(b: f64, lower: f64, upper: f64, zeta: f64, steps: usize) -> (f64, f64) {
    let (a, c) = (lower * lower, upper * upper);
    let budget = b - zeta;
    let steps = steps.max(2);
    let h = budget / steps as f64;
    match (a == 0.0, c == 0.0) {
        (true, true) => (0.0, 0.0),
        (true, false) => {
            let best = (1..steps)
                .map(|k| k as f64 * h)
                .min_by(|x, y| (c / (x * (budget - x))).total_cmp(&(c / (y * (budget - y)))))
                .unwrap();
            (0.0, best)
        }
        (false, true) => {
            let best = (1..steps)
                .map(|k| k as f64 * h)
                .min_by(|x, y| (a / (x * (budget - x))).total_cmp(&(a / (y * (budget - y)))))
                .unwrap();
            (best, 0.0)
        }
        (false, false) => {
            let mut best = (f64::INFINITY, 0.0, 0.0);
            for ke in 1..steps {
                for kd in 1..steps - ke {
                    let (e, d) = (ke as f64 * h, kd as f64 * h);
                    let f = (a / e + c / d) / (4.0 * (budget - e - d));
                    if f < best.0 {
                        best = (f, e, d);
                    }
                }
            }
            (best.1, best.2)
        }
    }
}

pub fn derive_gains_linear_chain(
    gen: &NetworkGenerator,
    c: &ChainCoefficients,
    params: &DerivationParams,
) -> Result<GainData> {
    let fam = gen.family.schedule();
    let slack_sched = [&params.eps, &params.delta, &params.zeta]
        .into_iter()
        .flatten()
        .try_fold(Schedule::new(0, 1), |acc, s| s.schedule().map(|x| acc.join(x)));
    match (fam, slack_sched) {
        (Some(f), Some(s)) => chain_periodic(gen, c, params, f.join(s)),
        _ => chain_closed_form(gen, c, params),
    }
}

fn chain_periodic(
    gen: &NetworkGenerator,
    c: &ChainCoefficients,
    params: &DerivationParams,
    sched: Schedule,
) -> Result<GainData> {
    let grid = params.grid.unwrap_or_default();
    let has_input = c.input.is_some();
    let mut lam = Vec::new();
    let mut gu = Vec::new();
    let mut rows = Vec::new();
    let (mut eps_v, mut delta_v, mut zeta_v) = (Vec::new(), Vec::new(), Vec::new());
    for i in 1..=sched.horizon() {
        let b = c.diag.at(i);
        let lower = if i >= 2 { c.lower.at(i) } else { 0.0 };
        let upper = c.upper.at(i);
        let bu = c.input.as_ref().map_or(0.0, |s| s.at(i));
        let zeta = match &params.zeta {
            Some(z) => z.at(i),
            None if bu != 0.0 => DEFAULT_CHAIN_ZETA.min(b / 4.0),
            None => 0.0,
        };
        let (eps, delta) = match (&params.eps, &params.delta) {
            (Some(e), Some(d)) => (e.at(i), d.at(i)),
            (Some(e), None) => (e.at(i), chain_grid(b - e.at(i), 0.0, upper, zeta, grid.steps).1),
            (None, Some(d)) => (chain_grid(b - d.at(i), lower, 0.0, zeta, grid.steps).0, d.at(i)),
            (None, None) => chain_grid(b, lower, upper, zeta, grid.steps),
        };
        let l = 2.0 * (b - eps - delta - zeta);
        if !(l > 0.0) {
            return Err(Error::Derivation {
                index_class: describe_index_class(gen, i),
                reason: format!("λ = 2(bᵢᵢ − ε − δ{}) = {l} is not positive", if has_input { " − ζ" } else { "" }),
            });
        }
        let young = |coef: f64, s: f64, name: &str| -> Result<f64> {
            if coef == 0.0 {
                Ok(0.0)
            } else if s > 0.0 {
                Ok(coef * coef / (2.0 * s))
            } else {
                Err(Error::Derivation {
                    index_class: describe_index_class(gen, i),
                    reason: format!("{name} must be positive for a nonzero coupling"),
                })
            }
        };
        let mut row = Vec::with_capacity(2);
        if i >= 2 {
            row.push(Coupling { offset: -1, gain: young(lower, eps, "ε")? });
        }
        row.push(Coupling { offset: 1, gain: young(upper, delta, "δ")? });
        // γᵤ = b_u²/(4ζ): the input term is not split across two neighbours.
        let g_u = if bu == 0.0 {
            0.0
        } else if zeta > 0.0 {
            bu * bu / (4.0 * zeta)
        } else {
            return Err(Error::Derivation {
                index_class: describe_index_class(gen, i),
                reason: "ζ must be positive for a nonzero input coefficient".into(),
            });
        };
        lam.push(l);
        gu.push(g_u);
        rows.push(row);
        eps_v.push(eps);
        delta_v.push(delta);
        zeta_v.push(zeta);
    }
    let split = |v: Vec<f64>| Seq::Periodic(split_table(v, sched));
    let mut slack = vec![
        NamedSeq { name: "eps".into(), value: split(eps_v) },
        NamedSeq { name: "delta".into(), value: split(delta_v) },
    ];
    if has_input {
        slack.push(NamedSeq { name: "zeta".into(), value: split(zeta_v) });
    }
    Ok(GainData {
        lambda: split(lam),
        gamma_u: split(gu),
        alpha_lo: Seq::constant(0.5),
        alpha_hi: Seq::constant(0.5),
        couplings: split_table(rows, sched),
        forms: scalar_form(),
        p: 2.0,
        q: 2.0,
        bandwidth: 1,
        slack,
    })
}

fn split_table<T>(mut v: Vec<T>, sched: Schedule) -> Periodic<T> {
    let period = v.split_off(sched.preamble);
    Periodic { preamble: v, period }
}

/// Closed-form diagonal (or input) rules with constant slack.
fn chain_closed_form(gen: &NetworkGenerator, c: &ChainCoefficients, params: &DerivationParams) -> Result<GainData> {
    let b_lo = c.diag.inf();
    let eps = params.eps.as_ref().map_or(Ok(b_lo / 4.0), |s| const_of(s, "ε"))?;
    let delta = params.delta.as_ref().map_or(Ok(b_lo / 4.0), |s| const_of(s, "δ"))?;
    let zeta = match (&params.zeta, &c.input) {
        (Some(z), _) => const_of(z, "ζ")?,
        (None, Some(_)) => DEFAULT_CHAIN_ZETA.min(b_lo / 4.0),
        (None, None) => 0.0,
    };
    let lambda = c.diag.affine(2.0, -2.0 * (eps + delta + zeta))?;
    if !(lambda.inf() > 0.0) && lambda.schedule().is_some() {
        return Err(Error::Derivation {
            index_class: "all indices".into(),
            reason: format!("λ = 2(bᵢᵢ − ε − δ − ζ) has infimum {}", lambda.inf()),
        });
    }
    if !(lambda.at(1) > 0.0) {
        return Err(Error::Derivation {
            index_class: describe_index_class(gen, 1),
            reason: format!("λ = {} is not positive", lambda.at(1)),
        });
    }
    let ls = require_schedule(&c.lower, "chain lower coupling")?;
    let us = require_schedule(&c.upper, "chain upper coupling")?;
    let sched = ls.join(us).with_preamble_at_least(1);
    let rows = Periodic::tabulate(sched, |i| {
        let mut row = Vec::with_capacity(2);
        if i >= 2 {
            let b = c.lower.at(i);
            row.push(Coupling { offset: -1, gain: if b == 0.0 { 0.0 } else { b * b / (2.0 * eps) } });
        }
        let b = c.upper.at(i);
        row.push(Coupling { offset: 1, gain: if b == 0.0 { 0.0 } else { b * b / (2.0 * delta) } });
        row
    });
    if rows.representatives().flatten().any(|c| !c.gain.is_finite()) {
        return Err(Error::Derivation {
            index_class: "all indices".into(),
            reason: "ε and δ must be positive for nonzero couplings".into(),
        });
    }
    let gamma_u = match &c.input {
        Some(inp) if zeta > 0.0 => inp.scaled_square(1.0 / (4.0 * zeta))?,
        Some(_) => {
            return Err(Error::Derivation {
                index_class: "all indices".into(),
                reason: "ζ must be positive with an input channel".into(),
            })
        }
        None => Seq::constant(0.0),
    };
    let mut slack = vec![
        NamedSeq { name: "eps".into(), value: eps.into() },
        NamedSeq { name: "delta".into(), value: delta.into() },
    ];
    if c.input.is_some() {
        slack.push(NamedSeq { name: "zeta".into(), value: zeta.into() });
    }
    Ok(GainData {
        lambda,
        gamma_u,
        alpha_lo: Seq::constant(0.5),
        alpha_hi: Seq::constant(0.5),
        couplings: rows,
        forms: scalar_form(),
        p: 2.0,
        q: 2.0,
        bandwidth: 1,
        slack,
    })
}

/// Outcome of the S-procedure matrix check.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LmiCheck {
    pub ok: bool,
    /// Largest eigenvalue of the block matrix.
    pub worst: f64,
    pub tolerance: f64,
}

/// Checks
///
/// ```text
/// [ AᵀM + MA + κM − τ·r·l·GᵀG    ME + τ(r+l)/2·Gᵀ ]
/// [ (ME + τ(r+l)/2·Gᵀ)ᵀ           −τ              ]  ⪯ 0
/// ```
#[allow(clippy::too_many_arguments)]
pub fn check_lure_lmi(a: &Mat, m: &Mat, e: &Mat, g: &Mat, kappa: f64, l: f64, r: f64, tau: f64) -> Result<LmiCheck> {
    let n = a.rows();
    if a.cols() != n
        || m.rows() != n
        || m.cols() != n
        || e.rows() != n
        || e.cols() != 1
        || g.rows() != 1
        || g.cols() != n
    {
        return Err(Error::Shape(format!(
            "LMI blocks A {}x{}, M {}x{}, E {}x{}, G {}x{}",
            a.rows(),
            a.cols(),
            m.rows(),
            m.cols(),
            e.rows(),
            e.cols(),
            g.rows(),
            g.cols()
        )));
    }
    if !(tau >= 0.0) {
        return Err(Error::Parameter(format!("S-procedure multiplier τ must be ≥ 0, got {tau}")));
    }
    let at_m = a.transpose().matmul(m)?;
    let gtg = g.transpose().matmul(g)?;
    let top_left = at_m.add(&at_m.transpose())?.add(&m.scaled(kappa))?.add(&gtg.scaled(-tau * r * l))?;
    let top_right = m.matmul(e)?.add(&g.transpose().scaled(tau * 0.5 * (r + l)))?;
    let mut block = Mat::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            block.set(i, j, 0.5 * (top_left.get(i, j) + top_left.get(j, i)));
        }
        block.set(i, n, top_right.get(i, 0));
        block.set(n, i, top_right.get(i, 0));
    }
    block.set(n, n, -tau);
    let ev = block.sym_eigenvalues()?;
    let worst = *ev.last().unwrap();
    let norm = ev.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tolerance = 1e-9 * (1.0 + norm);
    Ok(LmiCheck { ok: worst <= tolerance, worst, tolerance })
}

fn lure_err(gen: &NetworkGenerator, i: usize, reason: String) -> Error {
    Error::Derivation { index_class: describe_index_class(gen, i), reason }
}

pub fn derive_gains_lure(gen: &NetworkGenerator, c: &LureCoefficients, params: &DerivationParams) -> Result<GainData> {
    let m_rule = params
        .lyapunov
        .as_ref()
        .ok_or_else(|| Error::Parameter("Lur'e derivation needs Lyapunov matrices Mᵢ".into()))?;
    let kappa =
        params.kappa.as_ref().ok_or_else(|| Error::Parameter("Lur'e derivation needs decay rates κᵢ".into()))?;
    let tau = params.tau.clone().unwrap_or(Seq::constant(0.0));
    let eps = match &params.eps {
        Some(e) => e.clone(),
        None => kappa.affine(0.25, 0.0)?,
    };
    let fam =
        gen.family.schedule().ok_or_else(|| Error::Unsupported("Lur'e rules must be eventually periodic".into()))?;
    let m_sched = m_rule.schedule();
    // γᵢⱼ reads λ_min(Mⱼ) one index away.
    let shifted = Schedule::new(if m_sched.preamble == 0 { 0 } else { m_sched.preamble + 1 }, m_sched.period);
    let sched = fam
        .join(m_sched)
        .join(shifted)
        .join(require_schedule(kappa, "κ")?)
        .join(require_schedule(&tau, "τ")?)
        .join(require_schedule(&eps, "ε")?);

    let n = c.a.at(1).rows();
    let min_eig = |i: usize| -> Result<(f64, f64)> {
        let m = m_rule.at(i);
        if m.rows() != n || m.cols() != n {
            return Err(Error::Shape(format!("M at index {i} is {}x{}, expected {n}x{n}", m.rows(), m.cols())));
        }
        if !m.is_symmetric(1e-12 * (1.0 + m.max_abs())) {
            return Err(Error::InvalidCertificate(format!("M at index {i} is not symmetric")));
        }
        let ev = m.sym_eigenvalues()?;
        let (lo, hi) = (ev[0], ev[n - 1]);
        if !(lo > 0.0) {
            return Err(Error::InvalidCertificate(format!("M at index {i} is not positive definite (λ_min = {lo})")));
        }
        Ok((lo, hi))
    };

    let mut lam = Vec::new();
    let mut gu = Vec::new();
    let mut a_lo = Vec::new();
    let mut a_hi = Vec::new();
    let mut rows = Vec::new();
    for i in 1..=sched.horizon() {
        let m = m_rule.at(i);
        let (mlo, mhi) = min_eig(i)?;
        let (k, t, e) = (kappa.at(i), tau.at(i), eps.at(i));
        let lmi = check_lure_lmi(c.a.at(i), m, c.e.at(i), c.g.at(i), k, c.sector_l.at(i), c.sector_r.at(i), t)?;
        if !lmi.ok {
            return Err(lure_err(
                gen,
                i,
                format!("S-procedure matrix has eigenvalue {} > {}", lmi.worst, lmi.tolerance),
            ));
        }
        if !(e > 0.0) {
            return Err(lure_err(gen, i, format!("ε = {e} must be positive")));
        }
        let l = k - 2.0 * e;
        if !(l > 0.0) {
            return Err(lure_err(gen, i, format!("λ = κ − 2ε = {l} is not positive")));
        }
        let d = if i >= 2 { c.d_lower.at(i).hcat(c.d_upper.at(i))? } else { c.d_upper.at(i).clone() };
        let dn = d.weighted_norm_sq(m)?;
        let bn = c.b.at(i).weighted_norm_sq(m)?;
        let mut row = Vec::with_capacity(2);
        if i >= 2 {
            row.push(Coupling { offset: -1, gain: dn / (min_eig(i - 1)?.0 * e) });
        }
        row.push(Coupling { offset: 1, gain: dn / (min_eig(i + 1)?.0 * e) });
        lam.push(l);
        gu.push(bn / e);
        a_lo.push(mlo);
        a_hi.push(mhi);
        rows.push(row);
    }
    let split = |v: Vec<f64>| Seq::Periodic(split_table(v, sched));
    Ok(GainData {
        lambda: split(lam),
        gamma_u: split(gu),
        alpha_lo: split(a_lo),
        alpha_hi: split(a_hi),
        couplings: split_table(rows, sched),
        forms: Periodic::tabulate(sched, |i| m_rule.at(i).clone()),
        p: 2.0,
        q: 2.0,
        bandwidth: 1,
        slack: vec![
            NamedSeq { name: "eps".into(), value: eps },
            NamedSeq { name: "kappa".into(), value: kappa.clone() },
            NamedSeq { name: "tau".into(), value: tau },
        ],
    })
}

/// Uniform bounds for the road model as stated in closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrafficBounds {
    pub gamma_bar: f64,
    pub gamma_u_bar: f64,
    pub lambda_bar: f64,
    /// `(2(c v̄)²/(ε̲ l̲²)) / (v̲/l̄ − 2ε̄)`; below one implies `r(Ψ) < 1`.
    pub sufficient_value: f64,
}

pub fn traffic_bounds(c: &TrafficCoefficients, eps: &Seq) -> TrafficBounds {
    let (v_lo, v_hi) = (c.speed.inf(), c.speed.sup());
    let (l_lo, l_hi) = (c.length.inf(), c.length.sup());
    let (e_lo, e_hi) = (eps.inf(), eps.sup());
    let gamma_bar = math::powi(c.c * v_hi, 2) / (e_lo * l_lo * l_lo);
    TrafficBounds {
        gamma_bar,
        gamma_u_bar: c.r * c.r / (2.0 * e_lo),
        lambda_bar: 2.0 * (v_lo / l_hi - 2.0 * e_hi),
        sufficient_value: (2.0 * gamma_bar) / (v_lo / l_hi - 2.0 * e_hi),
    }
}

pub fn derive_gains_traffic(gen: &NetworkGenerator, c: &TrafficCoefficients, eps: Option<&Seq>) -> Result<GainData> {
    let eps = eps.cloned().unwrap_or(Seq::constant(DEFAULT_TRAFFIC_EPS));
    if !(eps.inf() > 0.0) {
        return Err(Error::Parameter(format!("traffic ε must be positive, got inf {}", eps.inf())));
    }
    let bounds = traffic_bounds(c, &eps);
    if !(bounds.lambda_bar > 0.0) {
        return Err(Error::Derivation {
            index_class: "all cells".into(),
            reason: format!("λ̲ = 2(v̲/l̄ − 2ε̄) = {} is not positive", bounds.lambda_bar),
        });
    }
    let fam = gen
        .family
        .schedule()
        .ok_or_else(|| Error::Unsupported("traffic speed and length rules must be eventually periodic".into()))?;
    let sched = fam.join(require_schedule(&eps, "traffic ε")?);
    let flow = |j: usize| c.speed.at(j) / c.length.at(j);
    let mut lam = Vec::new();
    let mut gu = Vec::new();
    let mut rows = Vec::new();
    for i in 1..=sched.horizon() {
        let class = classify_traffic_cell(i);
        let e = eps.at(i);
        let d_sq: f64 = class.offsets().iter().map(|&o| math::powi(c.c * flow((i as isize + o) as usize), 2)).sum();
        let l = 2.0 * (flow(i) + class.exit_multiplier() * c.e - 2.0 * e);
        if !(l > 0.0) {
            return Err(Error::Derivation { index_class: describe_index_class(gen, i), reason: format!("λ = {l}") });
        }
        let b = class.entry_multiplier() * c.r;
        lam.push(l);
        gu.push(b * b / (2.0 * e));
        rows.push(class.offsets().iter().map(|&offset| Coupling { offset, gain: d_sq / (2.0 * e) }).collect());
    }
    let split = |v: Vec<f64>| Seq::Periodic(split_table(v, sched));
    Ok(GainData {
        lambda: split(lam),
        gamma_u: split(gu),
        alpha_lo: Seq::constant(0.5),
        alpha_hi: Seq::constant(0.5),
        couplings: split_table(rows, sched),
        forms: scalar_form(),
        p: 2.0,
        q: 2.0,
        bandwidth: 4,
        slack: vec![NamedSeq { name: "eps".into(), value: eps }],
    })
}

fn decoupled(lambda: Seq, gamma_u: Seq, slack: NamedSeq) -> GainData {
    GainData {
        lambda,
        gamma_u,
        alpha_lo: Seq::constant(0.5),
        alpha_hi: Seq::constant(0.5),
        couplings: Periodic::constant(Vec::new()),
        forms: scalar_form(),
        p: 2.0,
        q: 2.0,
        bandwidth: 1,
        slack: vec![slack],
    }
}

/// `ẋᵢ = −xᵢ/i + uᵢ` with `εᵢ = θ/i`: `λᵢ = 2(1−θ)/i`, `γᵢᵤ = i/(2θ)`.
fn counter_slow(theta: Option<&Seq>) -> Result<GainData> {
    let theta = theta.map_or(Ok(DEFAULT_COUNTER_SLOW_THETA), |s| const_of(s, "θ"))?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Parameter(format!("θ must lie in (0, 1), got {theta}")));
    }
    Ok(decoupled(
        Seq::power(0.0, 2.0 * (1.0 - theta), -1.0),
        Seq::power(0.0, 1.0 / (2.0 * theta), 1.0),
        NamedSeq { name: "theta".to_string(), value: theta.into() },
    ))
}

/// `ẋᵢ = −xᵢ + i·uᵢ`: `λᵢ = 2(1−ε)`, `γᵢᵤ = i²/(2ε)`.
fn counter_gain(eps: Option<&Seq>) -> Result<GainData> {
    let eps = eps.map_or(Ok(DEFAULT_COUNTER_GAIN_EPS), |s| const_of(s, "ε"))?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!("ε must lie in (0, 1), got {eps}")));
    }
    Ok(decoupled(
        Seq::constant(2.0 * (1.0 - eps)),
        Seq::power(0.0, 1.0 / (2.0 * eps), 2.0),
        NamedSeq { name: "eps".to_string(), value: eps.into() },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{ChainCoefficients, Family};

    fn chain(diag: f64, off: f64) -> NetworkGenerator {
        NetworkGenerator::new(Family::LinearChain(ChainCoefficients {
            diag: diag.into(),
            lower: off.into(),
            upper: off.into(),
            input: None,
            bound: None,
        }))
    }

    fn fixed(eps: f64, delta: f64) -> DerivationParams {
        DerivationParams { eps: Some(eps.into()), delta: Some(delta.into()), ..Default::default() }
    }

    #[test]
    fn chain_a_values() {
        let g = derive_gains(&chain(1.0, 0.1), &fixed(0.1, 0.1)).unwrap();
        for i in 1..20 {
            assert!((g.lambda.at(i) - 1.6).abs() < 1e-15);
        }
        assert!((g.gamma(5, 4) - 0.05).abs() < 1e-15);
        assert!((g.gamma(5, 6) - 0.05).abs() < 1e-15);
        assert_eq!(g.gamma(1, 0), 0.0);
        assert!((g.gamma_norm() - 0.1).abs() < 1e-15);
        assert!(g.check_assumptions().all_pass());
    }

    #[test]
    fn decoupled_chain_has_zero_gamma() {
        let g = derive_gains(&chain(1.0, 0.0), &DerivationParams::default()).unwrap();
        assert_eq!(g.gamma_norm(), 0.0);
        assert!((g.lambda.at(3) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn chain_boundary_slack_is_rejected() {
        let err = derive_gains(&chain(1.0, 0.1), &fixed(0.5, 0.5)).unwrap_err();
        assert!(matches!(err, Error::Derivation { .. }));
    }

    #[test]
    fn grid_search_beats_fixed_slack() {
        let g = derive_gains(&chain(1.0, 0.1), &DerivationParams::default()).unwrap();
        let row = (g.gamma(5, 4) + g.gamma(5, 6)) / g.lambda.at(5);
        // Row sum 0.02/(4x(1 − 2x)) at ε = δ = x is smallest at x = 1/4.
        assert!((row - 0.04).abs() < 1e-6, "{row}");
    }

    #[test]
    fn lmi_pure_linear_case() {
        // AᵀM + MA = −2κM with M = I, A = −κI.
        let kappa = 0.7;
        let a = Mat::identity(2).scaled(-kappa);
        let chk =
            check_lure_lmi(&a, &Mat::identity(2), &Mat::zeros(2, 1), &Mat::zeros(1, 2), kappa, 0.0, 1.0, 0.0).unwrap();
        assert!(chk.ok);
        let bad =
            check_lure_lmi(&a, &Mat::identity(2), &Mat::zeros(2, 1), &Mat::zeros(1, 2), 100.0, 0.0, 1.0, 0.0).unwrap();
        assert!(!bad.ok);
        assert!(
            check_lure_lmi(&a, &Mat::identity(3), &Mat::zeros(2, 1), &Mat::zeros(1, 2), 1.0, 0.0, 1.0, 0.0).is_err()
        );
    }

    #[test]
    fn platoon_gains() {
        let gen = NetworkGenerator::new(Family::Lure(LureCoefficients::platoon(1.0, 2.0, 0.02)));
        let m = Mat::from_rows(&[&[2.0, 1.0], &[1.0, 1.0]]).unwrap();
        let params =
            DerivationParams { lyapunov: Some(Periodic::constant(m)), kappa: Some(0.9.into()), ..Default::default() };
        let g = derive_gains(&gen, &params).unwrap();
        let mlo = (3.0 - 5f64.sqrt()) / 2.0;
        let expect = 0.02f64.powi(2) * 10.0 / (mlo * 0.225);
        assert!((g.gamma(4, 3) - expect).abs() < 1e-12);
        assert!((g.lambda.at(4) - 0.45).abs() < 1e-15);
        let psi = g.gamma(4, 3) / g.lambda.at(4);
        assert!((psi - 0.103).abs() < 1e-3, "{psi}");
    }

    #[test]
    fn traffic_s4_gain() {
        let gen = NetworkGenerator::new(Family::Traffic(TrafficCoefficients::default()));
        let g = derive_gains(&gen, &DerivationParams::default()).unwrap();
        assert!((g.gamma(6, 5) - 0.1).abs() < 1e-12);
        assert!((g.gamma(6, 10) - 0.1).abs() < 1e-12);
        assert!((g.gamma_u.at(4) - 5.0).abs() < 1e-12);
        assert_eq!(g.gamma_u.at(6), 0.0);
        let b = traffic_bounds(&TrafficCoefficients::default(), &Seq::constant(0.1));
        assert!((b.sufficient_value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn counterexamples_fail_in_order() {
        let slow = derive_gains(&NetworkGenerator::new(Family::CounterSlow), &DerivationParams::default()).unwrap();
        assert_eq!(slow.check_assumptions().first_failure(), Some(Assumption::DecayRate));
        let gain = derive_gains(&NetworkGenerator::new(Family::CounterGain), &DerivationParams::default()).unwrap();
        assert_eq!(gain.check_assumptions().first_failure(), Some(Assumption::InputGain));
        assert!((gain.gamma_u.at(3) - 18.0).abs() < 1e-12);
    }
}
