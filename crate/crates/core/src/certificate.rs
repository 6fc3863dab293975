//! Scaling vector, decay rate and composite Lyapunov function.
//!
//! With `Θ = Ψᵀ` and a shift `λ > r(Θ)`, the truncated Neumann series
//! `η = Σ_{s≤K} Θˢ𝟙/λˢ⁺¹` satisfies `Θη − λη = Θᴷ⁺¹𝟙/λᴷ⁺¹ − 𝟙`, so
//! `Θη ≤ λη` once the last term is below one. Setting `μᵢ = ηᵢ/λᵢ` turns
//! this into `μᵀ(−Λ + Γ) ≤ −λ∞μᵀ` with `λ∞ = (1 − λ)·λ̲`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gains::GainData;
use crate::linalg::Mat;
use crate::math;
use crate::operator::{build_gain_operator, spectral_bracket, BracketConfig, GainOperator, SpectralBracket, ThetaIter};
use crate::seq::{Periodic, Schedule};

/// `λᵢʰ = min{λᵢ, h}`.
pub fn cap_decay_rates(g: &GainData, h: f64) -> Result<GainData> {
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("rate cap must be positive, got {h}")));
    }
    Ok(GainData { lambda: g.lambda.capped(h), ..g.clone() })
}

/// Power `m₀` with `a = ‖Θ^{m₀}‖/λ^{m₀} < 1`, and `C = max_{r<m₀} ‖Θʳ‖/λʳ`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GelfandWitness {
    pub order: usize,
    pub ratio: f64,
    pub prefactor: f64,
}

impl GelfandWitness {
    /// Picks the order with the fastest per-step contraction.
    /// `norms[k] = ‖Θᵏ‖` for `k = 0..`.
    pub fn find(norms: &[f64], lambda: f64) -> Option<GelfandWitness> {
        let mut best: Option<(f64, usize)> = None;
        for (k, &n) in norms.iter().enumerate().skip(1) {
            let a = n / math::powi(lambda, k as i32);
            if a < 1.0 {
                let rate = if a == 0.0 { 0.0 } else { math::powf(a, 1.0 / k as f64) };
                if best.is_none_or(|(r, _)| rate < r) {
                    best = Some((rate, k));
                }
            }
        }
        let (_, m0) = best?;
        let prefactor = (0..m0).map(|r| norms[r] / math::powi(lambda, r as i32)).fold(0.0, f64::max);
        Some(GelfandWitness { order: m0, ratio: norms[m0] / math::powi(lambda, m0 as i32), prefactor })
    }

    /// Bound on `sup_i Σ_{s>K} (Θˢ𝟙)ᵢ/λˢ⁺¹`.
    pub fn tail(&self, lambda: f64, k: usize) -> f64 {
        if self.ratio == 0.0 {
            return if k + 1 >= self.order { 0.0 } else { f64::INFINITY };
        }
        let blocks = ((k + 1) / self.order) as i32;
        self.prefactor / lambda * self.order as f64 * math::powi(self.ratio, blocks) / (1.0 - self.ratio)
    }

    /// Smallest order `K` whose tail is at most `target`.
    pub fn order_for(&self, lambda: f64, target: f64, k_max: usize) -> usize {
        if self.ratio == 0.0 {
            return self.order.saturating_sub(1);
        }
        let need = target * lambda * (1.0 - self.ratio) / (self.prefactor * self.order as f64);
        let blocks = if need >= 1.0 { 0.0 } else { math::ln(need) / math::ln(self.ratio) };
        let blocks = blocks.max(0.0) as usize + 1;
        (blocks * self.order).saturating_sub(1).min(k_max)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EtaVector {
    pub lambda_shift: f64,
    pub values: Periodic<f64>,
    pub order: usize,
    pub tail_bound: f64,
    pub witness: GelfandWitness,
    /// `sup_i (Θᴷ⁺¹𝟙)ᵢ/λᴷ⁺¹`; `Θη ≤ λη` holds iff this is at most one.
    pub residual: f64,
}

impl EtaVector {
    pub fn at(&self, i: usize) -> f64 {
        *self.values.at(i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct NeumannConfig {
    /// Fixed series order; chosen from the tail target when absent.
    pub order: Option<usize>,
    pub max_order: usize,
    /// Target for `λ·tail`.
    pub tail_target: f64,
    pub budget: usize,
}

impl Default for NeumannConfig {
    fn default() -> Self {
        Self { order: None, max_order: 5_000, tail_target: 1e-12, budget: crate::operator::DEFAULT_MEMORY_BUDGET }
    }
}

/// `ηᵢ = Σ_{s=0}^{K} (Θˢ𝟙)ᵢ/λˢ⁺¹`. `norms[k] = ‖Θᵏ‖` must reach a Gelfand
/// witness below `λ`.
pub fn neumann_eta(op: &GainOperator, lambda: f64, norms: &[f64], cfg: &NeumannConfig) -> Result<EtaVector> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("Neumann shift must be positive, got {lambda}")));
    }
    let witness = GelfandWitness::find(norms, lambda).ok_or_else(|| {
        Error::CannotCertify(format!("no k ≤ {} with ‖Θᵏ‖ < λᵏ for λ = {lambda}", norms.len().saturating_sub(1)))
    })?;
    let k = cfg.order.unwrap_or_else(|| witness.order_for(lambda, cfg.tail_target / lambda, cfg.max_order));
    let sched =
        op.schedule().ok_or_else(|| Error::CannotCertify("η needs an eventually periodic gain operator".into()))?;
    let mut it = ThetaIter::new(op, k + 1, cfg.budget)?;
    let span = sched.preamble + k * op.bandwidth().max(1) + sched.period.max(1);
    let mut eta = vec![0.0; span];
    let inv = 1.0 / lambda;
    for s in 0..=k {
        if s > 0 {
            it.step(lambda);
        }
        for (e, w) in eta.iter_mut().zip(it.prefix(span)) {
            *e += w * inv;
        }
    }
    it.step(lambda);
    let residual = it.sup();
    let preamble = span - sched.period.max(1);
    let period = eta.split_off(preamble);
    Ok(EtaVector {
        lambda_shift: lambda,
        values: Periodic { preamble: eta, period },
        order: k,
        tail_bound: witness.tail(lambda, k),
        witness,
        residual,
    })
}

/// `(Θf)_j` for `j = 1..=cols`.
pub fn theta_apply(op: &GainOperator, f: impl Fn(usize) -> f64, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for i in 1..=cols + op.bandwidth() {
        let fi = f(i);
        for (j, v) in op.row(i) {
            if j <= cols {
                out[j - 1] += v * fi;
            }
        }
    }
    out
}

/// Worst `(Θη)ᵢ − r·ηᵢ` over one period past every preamble.
pub fn eta_margin(op: &GainOperator, eta: &EtaVector, r: f64) -> (f64, usize) {
    let cols = eta.values.preamble.len() + op.bandwidth() + 2 * eta.values.period.len();
    let th = theta_apply(op, |i| eta.at(i), cols);
    th.iter().enumerate().map(|(k, v)| (v - r * eta.at(k + 1), k + 1)).fold((f64::NEG_INFINITY, 0), |a, b| {
        if b.0 > a.0 {
            b
        } else {
            a
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MuSummary {
    pub preamble: Vec<f64>,
    pub period: Vec<f64>,
    pub mu_lo: f64,
    pub mu_hi: f64,
}

impl MuSummary {
    pub fn rule(&self) -> Periodic<f64> {
        Periodic { preamble: self.preamble.clone(), period: self.period.clone() }
    }

    pub fn at(&self, i: usize) -> f64 {
        let i = i.max(1);
        if i <= self.preamble.len() {
            self.preamble[i - 1]
        } else {
            self.period[(i - 1 - self.preamble.len()) % self.period.len()]
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EtaSummary {
    pub lambda_shift: f64,
    pub order: usize,
    pub tail_bound: f64,
    pub residual: f64,
    pub witness: GelfandWitness,
    pub eta_lo: f64,
    pub eta_hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmallGainCertificate {
    pub r_tilde: f64,
    pub lambda_inf: f64,
    pub rho: f64,
    /// `λ̲` of the (possibly capped) rates used for the construction.
    pub lambda_lo: f64,
    pub mu: MuSummary,
    pub bracket: SpectralBracket,
    pub h_cap: Option<f64>,
    pub eta: EtaSummary,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationReport {
    pub passed: bool,
    pub worst_margin: f64,
    pub worst_index: usize,
    /// Indices checked explicitly; a periodic tail check covers the rest.
    pub checked: usize,
    pub tolerance: f64,
    /// First few `(i, margin)` above tolerance.
    pub violations: Vec<(usize, f64)>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CertifyConfig {
    pub rho: Option<f64>,
    pub bracket: BracketConfig,
    pub neumann: NeumannConfig,
    pub check_horizon: Option<usize>,
    pub max_doublings: Option<u32>,
}

const MAX_VIOLATIONS: usize = 16;

/// `−λᵢμᵢ + Σⱼ μⱼγⱼᵢ + λ∞μᵢ ≤ tol` over a horizon covering every preamble,
/// the bandwidth margin and two periods. Rates that are not eventually
/// periodic are handled beyond the horizon through `inf_{i>H} λᵢ`.
pub fn verify_certificate(
    cert: &SmallGainCertificate,
    g: &GainData,
    check_horizon: Option<usize>,
) -> VerificationReport {
    let m = g.bandwidth.max(1);
    let mu_sched = Schedule::new(cert.mu.preamble.len(), cert.mu.period.len().max(1));
    let base = mu_sched.join(g.coupling_schedule());
    let periodic_rates = g.lambda.schedule();
    let sched = periodic_rates.map_or(base, |s| base.join(s));
    let horizon = check_horizon.unwrap_or(0).max(sched.preamble + m + 2 * sched.period);
    let cols = horizon + sched.period;
    let mut inflow = vec![0.0; cols];
    for j in 1..=cols + m {
        let mj = cert.mu.at(j);
        for (i, gamma) in g.row(j) {
            if i <= cols {
                inflow[i - 1] += mj * gamma;
            }
        }
    }
    let mut scale = 0.0f64;
    let mut margins = Vec::with_capacity(cols);
    for i in 1..=horizon {
        let mu = cert.mu.at(i);
        let decay = g.lambda.at(i) * mu;
        scale = scale.max(decay.abs());
        margins.push((i, -decay + inflow[i - 1] + cert.lambda_inf * mu));
    }
    if periodic_rates.is_none() {
        // μ and the inflow repeat beyond the horizon; λᵢ only grows the decay.
        let lam_tail = g.lambda.inf_from(horizon + 1);
        for i in horizon + 1..=cols {
            let mu = cert.mu.at(i);
            margins.push((i, -lam_tail * mu + inflow[i - 1] + cert.lambda_inf * mu));
        }
    }
    let tolerance = 1e-10 * scale.max(1e-300);
    let (mut worst_margin, mut worst_index) = (f64::NEG_INFINITY, 0);
    let mut violations = Vec::new();
    for &(i, v) in &margins {
        if v > worst_margin || v.is_nan() {
            worst_margin = v;
            worst_index = i;
        }
        if !(v <= tolerance) && violations.len() < MAX_VIOLATIONS {
            violations.push((i, v));
        }
    }
    let mu_ok = cert.mu.mu_lo > 0.0 && cert.mu.mu_hi.is_finite();
    VerificationReport {
        passed: mu_ok && violations.is_empty() && cert.lambda_inf > 0.0,
        worst_margin,
        worst_index,
        checked: margins.len(),
        tolerance,
        violations,
    }
}

/// `r̃ ∈ (upper, 1)` as large a fraction toward `upper` as `ρ` allows.
pub fn choose_r_tilde(upper: f64, lambda_lo: f64, rho: f64) -> f64 {
    let r = upper + (1.0 - upper) / 10.0;
    if (r - upper) * lambda_lo > rho {
        upper + rho / lambda_lo
    } else {
        r
    }
}

pub fn build_certificate(
    g: &GainData,
    bracket: &SpectralBracket,
    rho: Option<f64>,
    cfg: &CertifyConfig,
) -> Result<SmallGainCertificate> {
    if !bracket.satisfied {
        return Err(Error::SmallGainViolated(format!(
            "spectral bracket [{}, {}] does not certify r(Ψ) < 1",
            bracket.lower, bracket.upper
        )));
    }
    let op = build_gain_operator(g)?;
    let rate_sched = g
        .lambda
        .schedule()
        .ok_or_else(|| Error::CannotCertify("decay rates are not eventually periodic; cap them first".into()))?;
    let lambda_lo = g.lambda_lo();
    let upper = bracket.upper;
    let rho = rho.unwrap_or(0.1 * (1.0 - upper) * lambda_lo);
    if !(rho > 0.0) {
        return Err(Error::Parameter(format!("slack ρ must be positive, got {rho}")));
    }
    let r_tilde = choose_r_tilde(upper, lambda_lo, rho);
    let norms: Vec<f64> = if bracket.conservative {
        crate::operator::power_norms(&op, cfg.bracket.k_max, cfg.bracket.budget)?
    } else {
        core::iter::once(1.0).chain(bracket.norms.iter().copied()).collect()
    };
    let eta = neumann_eta(&op, r_tilde, &norms, &cfg.neumann)?;
    let sched = eta.values.schedule().join(rate_sched);
    let mu_rule = Periodic::tabulate(sched, |i| eta.at(i) / g.lambda.at(i));
    let mu = MuSummary {
        mu_lo: mu_rule.min_value(),
        mu_hi: mu_rule.max_value(),
        preamble: mu_rule.preamble,
        period: mu_rule.period,
    };
    let cert = SmallGainCertificate {
        r_tilde,
        lambda_inf: (1.0 - r_tilde) * lambda_lo,
        rho,
        lambda_lo,
        mu,
        bracket: bracket.clone(),
        h_cap: None,
        eta: EtaSummary {
            lambda_shift: eta.lambda_shift,
            order: eta.order,
            tail_bound: eta.tail_bound,
            residual: eta.residual,
            witness: eta.witness,
            eta_lo: eta.values.min_value(),
            eta_hi: eta.values.max_value(),
        },
    };
    let report = verify_certificate(&cert, g, cfg.check_horizon);
    if !report.passed {
        return Err(Error::Internal(format!(
            "constructed certificate fails verification: margin {} at index {}",
            report.worst_margin, report.worst_index
        )));
    }
    Ok(cert)
}

/// Brackets `r(Ψ)` and builds a verified certificate. Unbounded or
/// non-periodic rates are capped at `h = 2λ̲, 4λ̲, ...` first.
pub fn certify(g: &GainData, cfg: &CertifyConfig) -> Result<(SmallGainCertificate, GainData)> {
    let needs_cap = g.lambda.schedule().is_none() || !g.lambda_hi().is_finite();
    if !needs_cap {
        let op = build_gain_operator(g)?;
        let bracket = spectral_bracket(&op, &cfg.bracket)?;
        let cert = build_certificate(g, &bracket, cfg.rho, cfg)?;
        return Ok((cert, g.clone()));
    }
    let lambda_lo = g.lambda_lo();
    if !(lambda_lo > 0.0) {
        return Err(Error::CannotCertify(format!("rates have infimum {lambda_lo}")));
    }
    let mut h = 2.0 * lambda_lo;
    let mut last = None;
    for _ in 0..=cfg.max_doublings.unwrap_or(40) {
        let capped = cap_decay_rates(g, h)?;
        if capped.lambda.schedule().is_none() {
            return Err(Error::CannotCertify("capped rates are still not eventually periodic".into()));
        }
        let op = build_gain_operator(&capped)?;
        let bracket = spectral_bracket(&op, &cfg.bracket)?;
        if bracket.satisfied {
            let mut cert = build_certificate(&capped, &bracket, cfg.rho, cfg)?;
            cert.h_cap = Some(h);
            let original = verify_certificate(&cert, g, cfg.check_horizon);
            if !original.passed {
                return Err(Error::Internal(format!(
                    "capped certificate fails on the original rates at index {}",
                    original.worst_index
                )));
            }
            return Ok((cert, capped));
        }
        last = Some(bracket);
        h *= 2.0;
    }
    let b = last.unwrap();
    Err(Error::SmallGainViolated(format!(
        "no rate cap up to h = {} gives r(Ψʰ) < 1 (last bracket [{}, {}])",
        h / 2.0,
        b.lower,
        b.upper
    )))
}

/// `V(x) = Σᵢ μᵢ xᵢᵀMᵢxᵢ` with its coercivity and dissipation constants.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompositeLyapunov {
    pub mu: Periodic<f64>,
    pub forms: Periodic<Mat>,
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub p: f64,
    pub q: f64,
    pub lambda_inf: f64,
    pub gamma_u_hi: f64,
}

pub fn assemble_lyapunov(cert: &SmallGainCertificate, g: &GainData) -> CompositeLyapunov {
    CompositeLyapunov {
        mu: cert.mu.rule(),
        forms: g.forms.clone(),
        mu_lo: cert.mu.mu_lo,
        mu_hi: cert.mu.mu_hi,
        alpha_lo: g.alpha_lo_bound(),
        alpha_hi: g.alpha_hi_bound(),
        p: g.p,
        q: g.q,
        lambda_inf: cert.lambda_inf,
        gamma_u_hi: g.gamma_u_hi(),
    }
}

impl CompositeLyapunov {
    /// `V` on a truncated state made of consecutive blocks `x₁, x₂, ...`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        let mut pos = 0;
        let mut i = 1;
        while pos < x.len() {
            let m = self.forms.at(i);
            let end = pos + m.rows();
            if end > x.len() {
                return Err(Error::Shape(format!("state length {} splits block {i}", x.len())));
            }
            acc += self.mu.at(i) * m.quadratic_form(&x[pos..end]);
            pos = end;
            i += 1;
        }
        Ok(acc)
    }

    /// `(μ̲α̲, μ̄ᾱ)`: `μ̲α̲|x|ₚᵖ ≤ V(x) ≤ μ̄ᾱ|x|ₚᵖ`.
    pub fn coercivity(&self) -> (f64, f64) {
        (self.mu_lo * self.alpha_lo, self.mu_hi * self.alpha_hi)
    }

    /// `μ̄γ̄ᵤ`, the input coefficient of the dissipation inequality.
    pub fn input_coefficient(&self) -> f64 {
        self.mu_hi * self.gamma_u_hi
    }
}

pub fn eval_v(v: &CompositeLyapunov, x: &[f64]) -> Result<f64> {
    v.eval(x)
}

/// `V(φ(t)) ≤ e^{−εt}V(x⁰) + χ(‖u‖)` with `χ(r) = μ̄γ̄ᵤ r^q/(λ∞ − ε)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IssBound {
    pub eps: f64,
    pub lambda_inf: f64,
    pub chi_coefficient: f64,
    pub p: f64,
    pub q: f64,
    pub coercive_lo: f64,
    pub coercive_hi: f64,
}

pub fn iss_trajectory_bound(v: &CompositeLyapunov, eps: f64) -> Result<IssBound> {
    if !(eps > 0.0 && eps < v.lambda_inf) {
        return Err(Error::Parameter(format!("ε must lie in (0, λ∞ = {}), got {eps}", v.lambda_inf)));
    }
    let (lo, hi) = v.coercivity();
    Ok(IssBound {
        eps,
        lambda_inf: v.lambda_inf,
        chi_coefficient: v.input_coefficient() / (v.lambda_inf - eps),
        p: v.p,
        q: v.q,
        coercive_lo: lo,
        coercive_hi: hi,
    })
}

impl IssBound {
    pub fn chi(&self, u_norm: f64) -> f64 {
        if u_norm == 0.0 {
            0.0
        } else {
            self.chi_coefficient * math::powf(u_norm, self.q)
        }
    }

    pub fn v_envelope(&self, t: f64, v0: f64, u_norm: f64) -> f64 {
        math::exp(-self.eps * t) * v0 + self.chi(u_norm)
    }

    /// `|φ(t)|ₚ ≤ (2μ̄ᾱ/(μ̲α̲))^{1/p} e^{−εt/p}|x⁰|ₚ + (2χ/(μ̲α̲))^{1/p}`.
    pub fn norm_envelope(&self, t: f64, x0_norm: f64, u_norm: f64) -> f64 {
        let inv_p = 1.0 / self.p;
        math::powf(2.0 * self.coercive_hi / self.coercive_lo, inv_p) * math::exp(-self.eps * t * inv_p) * x0_norm
            + math::powf(2.0 * self.chi(u_norm) / self.coercive_lo, inv_p)
    }
}
