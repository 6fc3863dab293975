//! The gain operator `Ψ = Λ⁻¹Γ` on `ℓ¹` and bounds on its spectral radius.
//!
//! `‖Ψᵏ‖₁,₁` is the largest column sum of `Ψᵏ`, i.e. `sup_j (Θᵏ𝟙)_j` with
//! `Θ = Ψᵀ`. Since `Ψ` is banded and eventually periodic, `Θˢ𝟙` is periodic
//! beyond index `i₀ + s·m`, so finitely many entries determine the supremum.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::error::{Error, Result};
use crate::gains::{Coupling, GainData};
use crate::math;
use crate::seq::{Periodic, Schedule, Seq};

pub const DEFAULT_MEMORY_BUDGET: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct GainOperator {
    lambda: Seq,
    couplings: Periodic<Vec<Coupling>>,
    bandwidth: usize,
    schedule: Option<Schedule>,
    gamma_norm: f64,
    lambda_lo: f64,
}

pub fn build_gain_operator(g: &GainData) -> Result<GainOperator> {
    let lambda_lo = g.lambda_lo();
    if !(lambda_lo > 0.0) {
        return Err(Error::Parameter(format!("gain operator needs inf λᵢ > 0, got {lambda_lo}")));
    }
    let schedule = g.lambda.schedule().map(|s| s.join(g.coupling_schedule()));
    Ok(GainOperator {
        lambda: g.lambda.clone(),
        couplings: g.couplings.clone(),
        bandwidth: g.bandwidth,
        schedule,
        gamma_norm: g.gamma_norm(),
        lambda_lo,
    })
}

impl GainOperator {
    /// `(j, ψᵢⱼ)` for the structural neighbours of `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let l = self.lambda.at(i);
        self.couplings.at(i).iter().filter_map(move |c| {
            let j = i as isize + c.offset;
            (j >= 1).then_some((j as usize, c.gain / l))
        })
    }

    pub fn psi(&self, i: usize, j: usize) -> f64 {
        self.row(i).filter(|&(k, _)| k == j).map(|(_, v)| v).sum()
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// `Some` when `Ψ` is eventually periodic and norms are exact.
    pub fn schedule(&self) -> Option<Schedule> {
        self.schedule
    }

    pub fn is_exact(&self) -> bool {
        self.schedule.is_some()
    }

    /// Column-sum bound `sup_j Σᵢ γᵢⱼ / λ̲ ≥ ‖Ψ‖₁,₁`.
    pub fn norm_bound(&self) -> f64 {
        self.gamma_norm / self.lambda_lo
    }

    /// Same operator with every `γᵢⱼ` multiplied by `s`.
    pub fn scaled(&self, s: f64) -> GainOperator {
        GainOperator {
            couplings: self
                .couplings
                .map(|row| row.iter().map(|c| Coupling { offset: c.offset, gain: s * c.gain }).collect()),
            gamma_norm: s * self.gamma_norm,
            ..self.clone()
        }
    }

    /// Compressed rows of the leading `n × n` block.
    fn csr(&self, n: usize) -> (Vec<usize>, Vec<(usize, f64)>) {
        let mut ptr = Vec::with_capacity(n + 1);
        let mut ent = Vec::with_capacity(n * 2 * self.bandwidth.max(1));
        ptr.push(0);
        for i in 1..=n {
            ent.extend(self.row(i).filter(|&(j, v)| j <= n && v != 0.0).map(|(j, v)| (j - 1, v)));
            ptr.push(ent.len());
        }
        (ptr, ent)
    }
}

/// Iterates `w ← Θw / scale` from `w = 𝟙`, tracking the prefix on which the
/// finite computation agrees with the infinite one.
pub(crate) struct ThetaIter {
    ptr: Vec<usize>,
    ent: Vec<(usize, f64)>,
    w: Vec<f64>,
    next: Vec<f64>,
    valid: usize,
    bandwidth: usize,
    pub(crate) steps: usize,
    preamble: usize,
    period: usize,
}

impl ThetaIter {
    /// Prepares enough entries to take `k` steps and still read one full
    /// period past the last preamble.
    pub(crate) fn new(op: &GainOperator, k: usize, budget: usize) -> Result<Self> {
        let sched = op
            .schedule
            .ok_or_else(|| Error::Unsupported("exact power norms need an eventually periodic operator".into()))?;
        let m = op.bandwidth.max(1);
        let len = k
            .checked_mul(2 * m)
            .and_then(|v| v.checked_add(sched.preamble + sched.period.max(1)))
            .ok_or_else(|| Error::Resource(format!("power {k} overflows the index range")))?;
        let cost = len.saturating_mul(2 + 2 * m);
        if cost > budget {
            return Err(Error::Resource(format!("Θ^{k} needs about {cost} entries, budget is {budget}")));
        }
        let (ptr, ent) = op.csr(len);
        Ok(Self {
            ptr,
            ent,
            w: vec![1.0; len],
            next: vec![0.0; len],
            valid: len,
            bandwidth: m,
            steps: 0,
            preamble: sched.preamble,
            period: sched.period.max(1),
        })
    }

    pub(crate) fn step(&mut self, scale: f64) {
        let new_valid = self.valid.saturating_sub(self.bandwidth);
        self.next[..self.valid].iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.valid {
            let wi = self.w[i];
            if wi == 0.0 {
                continue;
            }
            for &(j, v) in &self.ent[self.ptr[i]..self.ptr[i + 1]] {
                if j < new_valid {
                    self.next[j] += v * wi;
                }
            }
        }
        let inv = 1.0 / scale;
        for v in &mut self.next[..new_valid] {
            *v *= inv;
        }
        core::mem::swap(&mut self.w, &mut self.next);
        self.valid = new_valid;
        self.steps += 1;
    }

    /// Indices `1..=span()` determine the current vector everywhere.
    pub(crate) fn span(&self) -> usize {
        self.preamble + self.steps * self.bandwidth + self.period
    }

    pub(crate) fn current(&self) -> &[f64] {
        let s = self.span();
        debug_assert!(s <= self.valid, "ThetaIter read beyond its valid prefix");
        &self.w[..s]
    }

    /// First `n` entries; `n` may exceed `span()` while staying valid.
    pub(crate) fn prefix(&self, n: usize) -> &[f64] {
        debug_assert!(n <= self.valid, "ThetaIter read beyond its valid prefix");
        &self.w[..n]
    }

    pub(crate) fn sup(&self) -> f64 {
        self.current().iter().copied().fold(0.0, f64::max)
    }
}

/// `‖Ψᵏ‖₁,₁` for `k = 0..=k_max` (entry 0 is 1).
pub fn power_norms(op: &GainOperator, k_max: usize, budget: usize) -> Result<Vec<f64>> {
    let mut it = ThetaIter::new(op, k_max, budget)?;
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(1.0);
    for _ in 0..k_max {
        it.step(1.0);
        out.push(it.sup());
    }
    Ok(out)
}

/// Exact `‖Ψᵏ‖₁,₁`.
pub fn operator_power_column_sums(op: &GainOperator, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Parameter("power must be at least 1".into()));
    }
    Ok(power_norms(op, k, DEFAULT_MEMORY_BUDGET)?[k])
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BracketConfig {
    pub k_max: usize,
    pub n_max: usize,
    /// Cap on bisection steps per strongly connected block.
    pub max_iter: usize,
    pub rel_gap: f64,
    pub budget: usize,
}

impl Default for BracketConfig {
    fn default() -> Self {
        Self { k_max: 32, n_max: 64, max_iter: 200, rel_gap: 1e-13, budget: DEFAULT_MEMORY_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectralBracket {
    pub lower: f64,
    pub upper: f64,
    pub k_used: usize,
    pub n_used: usize,
    pub satisfied: bool,
    /// Upper bound came from uniform bounds rather than exact powers.
    pub conservative: bool,
    pub lower_converged: bool,
    /// `‖Ψᵏ‖₁,₁` for `k = 1..`.
    pub norms: Vec<f64>,
}

impl SpectralBracket {
    /// `‖Ψᵏ‖` for `k ≥ 0` when known.
    pub fn norm(&self, k: usize) -> Option<f64> {
        if k == 0 {
            Some(1.0)
        } else {
            self.norms.get(k - 1).copied()
        }
    }
}

pub fn spectral_bracket(op: &GainOperator, cfg: &BracketConfig) -> Result<SpectralBracket> {
    if cfg.k_max == 0 {
        return Err(Error::Parameter("k_max must be at least 1".into()));
    }
    if cfg.n_max < op.bandwidth.max(1) {
        return Err(Error::Parameter(format!("N_max {} is below the bandwidth {}", cfg.n_max, op.bandwidth)));
    }
    let (upper, k_used, norms, conservative) = if op.is_exact() {
        let norms = power_norms(op, cfg.k_max, cfg.budget)?;
        let mut best = (f64::INFINITY, 1);
        for (k, &n) in norms.iter().enumerate().skip(1) {
            let root = if n == 0.0 { 0.0 } else { math::powf(n, 1.0 / k as f64) };
            if root < best.0 {
                best = (root, k);
            }
        }
        (best.0, best.1, norms[1..].to_vec(), false)
    } else {
        let b = op.norm_bound();
        (b, 1, vec![b], true)
    };
    let (lower, lower_converged) = truncation_perron(op, cfg.n_max, cfg.max_iter, cfg.rel_gap);
    Ok(SpectralBracket {
        lower,
        upper,
        k_used,
        n_used: cfg.n_max,
        satisfied: upper < 1.0,
        conservative,
        lower_converged,
        norms,
    })
}

/// Lower bound on the Perron root of the leading `n × n` block, taken as
/// the largest root over its strongly connected components.
pub fn truncation_perron(op: &GainOperator, n: usize, max_iter: usize, rel_gap: f64) -> (f64, bool) {
    let (ptr, ent) = op.csr(n);
    let mut graph = DiGraph::<(), ()>::with_capacity(n, ent.len());
    let nodes: Vec<NodeIndex> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for &(j, _) in &ent[ptr[i]..ptr[i + 1]] {
            graph.add_edge(nodes[i], nodes[j], ());
        }
    }
    let mut lower = 0.0f64;
    let mut converged = true;
    let mut local = vec![usize::MAX; n];
    for comp in tarjan_scc(&graph) {
        let idx: Vec<usize> = comp.iter().map(|v| v.index()).collect();
        let self_loop = idx.len() == 1 && ent[ptr[idx[0]]..ptr[idx[0] + 1]].iter().any(|&(j, _)| j == idx[0]);
        if idx.len() == 1 && !self_loop {
            continue;
        }
        for (k, &i) in idx.iter().enumerate() {
            local[i] = k;
        }
        let rows: Vec<Vec<(usize, f64)>> = idx
            .iter()
            .map(|&i| {
                ent[ptr[i]..ptr[i + 1]]
                    .iter()
                    .filter(|&&(j, _)| local[j] != usize::MAX)
                    .map(|&(j, v)| (local[j], v))
                    .collect()
            })
            .collect();
        let (lo, ok) = component_perron(&rows, max_iter, rel_gap);
        lower = lower.max(lo);
        converged &= ok;
        for &i in &idx {
            local[i] = usize::MAX;
        }
    }
    (lower, converged)
}

/// Perron root of one nonnegative block by bisection on `σ`: `σ > r(A)`
/// exactly when `σI − A` is a nonsingular M-matrix, which elimination
/// without pivoting detects through its pivots. The lower end of the final
/// interval is returned.
fn component_perron(rows: &[Vec<(usize, f64)>], max_iter: usize, rel_gap: f64) -> (f64, bool) {
    let row_sum_max = rows.iter().map(|r| r.iter().map(|&(_, v)| v).sum::<f64>()).fold(0.0, f64::max);
    if row_sum_max == 0.0 {
        return (0.0, true);
    }
    let band = Band::new(rows);
    let (mut lo, mut hi) = (0.0f64, row_sum_max);
    for _ in 0..max_iter {
        if hi - lo <= rel_gap * hi {
            return (lo, true);
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if band.is_m_matrix_at(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi - lo <= rel_gap * hi)
}

/// Dense band storage of a square block, `w` diagonals on each side.
struct Band {
    n: usize,
    w: usize,
    /// Row `i`, column `j` at `i * (2w + 1) + (j + w − i)`.
    data: Vec<f64>,
}

impl Band {
    fn new(rows: &[Vec<(usize, f64)>]) -> Self {
        let n = rows.len();
        let w =
            rows.iter().enumerate().flat_map(|(i, r)| r.iter().map(move |&(j, _)| i.abs_diff(j))).max().unwrap_or(0);
        let mut data = vec![0.0; n * (2 * w + 1)];
        for (i, r) in rows.iter().enumerate() {
            for &(j, v) in r {
                data[i * (2 * w + 1) + j + w - i] += v;
            }
        }
        Self { n, w, data }
    }

    /// Whether every pivot of `σI − A` stays positive.
    fn is_m_matrix_at(&self, sigma: f64) -> bool {
        let (n, w) = (self.n, self.w);
        let stride = 2 * w + 1;
        let mut m: Vec<f64> = self.data.iter().map(|v| -v).collect();
        for i in 0..n {
            m[i * stride + w] += sigma;
        }
        for k in 0..n {
            let pivot = m[k * stride + w];
            if !(pivot > 0.0) {
                return false;
            }
            for i in k + 1..(k + w + 1).min(n) {
                let f = m[i * stride + k + w - i] / pivot;
                if f == 0.0 {
                    continue;
                }
                for j in k..(k + w + 1).min(n) {
                    m[i * stride + j + w - i] -= f * m[k * stride + j + w - k];
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gains::{derive_gains, DerivationParams};
    use crate::network::{ChainCoefficients, Family, NetworkGenerator};

    fn chain_op(diag: f64, off: f64, eps: f64) -> GainOperator {
        let gen = NetworkGenerator::new(Family::LinearChain(ChainCoefficients {
            diag: diag.into(),
            lower: off.into(),
            upper: off.into(),
            input: None,
            bound: None,
        }));
        let p = DerivationParams { eps: Some(eps.into()), delta: Some(eps.into()), ..Default::default() };
        build_gain_operator(&derive_gains(&gen, &p).unwrap()).unwrap()
    }

    #[test]
    fn chain_a_entries_and_norm() {
        let op = chain_op(1.0, 0.1, 0.1);
        assert!((op.psi(3, 2) - 0.03125).abs() < 1e-15);
        assert_eq!(op.psi(3, 3), 0.0);
        let n1 = operator_power_column_sums(&op, 1).unwrap();
        assert!((n1 - 0.0625).abs() < 1e-15);
        let n2 = operator_power_column_sums(&op, 2).unwrap();
        assert!(n2 <= n1 * n1 + 1e-18);
    }

    #[test]
    fn chain_a_bracket_matches_toeplitz() {
        let op = chain_op(1.0, 0.1, 0.1);
        let b = spectral_bracket(&op, &BracketConfig::default()).unwrap();
        assert!(b.satisfied && !b.conservative && b.lower_converged);
        assert!(b.upper <= 0.0625 * (1.0 + 1e-12));
        let oracle = 0.0625 * libm::cos(core::f64::consts::PI / 65.0);
        assert!((b.lower - oracle).abs() < 1e-10, "{} vs {oracle}", b.lower);
    }

    #[test]
    fn failing_chain_is_bracketed_above_one() {
        let op = chain_op(1.0, 1.0, 0.25);
        assert!((op.psi(2, 1) - 2.0).abs() < 1e-15);
        let b = spectral_bracket(&op, &BracketConfig::default()).unwrap();
        assert!(!b.satisfied);
        assert!(b.lower > 1.0 && b.lower <= b.upper);
    }

    #[test]
    fn zero_operator() {
        let op = chain_op(1.0, 0.0, 0.1);
        let b = spectral_bracket(&op, &BracketConfig::default()).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
        assert!(b.satisfied);
    }

    #[test]
    fn budget_is_enforced() {
        let op = chain_op(1.0, 0.1, 0.1);
        assert!(matches!(power_norms(&op, 1000, 100), Err(Error::Resource(_))));
    }

    fn perron(rows: &[&[(usize, f64)]]) -> f64 {
        let rows: Vec<Vec<(usize, f64)>> = rows.iter().map(|r| r.to_vec()).collect();
        let (lo, ok) = component_perron(&rows, 200, 1e-14);
        assert!(ok);
        lo
    }

    #[test]
    fn bisection_on_small_blocks() {
        // [[0, 2], [0.5, 0]]: eigenvalues ±1.
        assert!((perron(&[&[(1, 2.0)], &[(0, 0.5)]]) - 1.0).abs() < 1e-13);
        // Upper triangular: the diagonal decides.
        assert!((perron(&[&[(0, 0.5), (1, 3.0)], &[(1, 0.9)]]) - 0.9).abs() < 1e-13);
        // [[a, b], [c, d]] with root (a + d)/2 + sqrt(((a − d)/2)² + bc).
        let (a, b, c, d) = (0.3, 1e-3, 0.7, 0.29);
        let want = (a + d) / 2.0 + (((a - d) / 2.0f64).powi(2) + b * c).sqrt();
        assert!((perron(&[&[(0, a), (1, b)], &[(0, c), (1, d)]]) - want).abs() < 1e-13);
    }

    #[test]
    fn m_matrix_test_brackets_the_root() {
        let rows = vec![vec![(0, 1.0), (1, 0.5)], vec![(0, 0.5), (1, 1.0), (2, 0.5)], vec![(1, 0.5), (2, 1.0)]];
        let band = Band::new(&rows);
        let rho = 1.0 + 0.5 * 2f64.sqrt();
        assert!(band.is_m_matrix_at(rho + 1e-9));
        assert!(!band.is_m_matrix_at(rho - 1e-9));
    }
}
