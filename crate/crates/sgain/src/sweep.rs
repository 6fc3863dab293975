//! Seeded randomized sweeps: certificate soundness over random generators
//! and the coercivity sandwich over random states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sgain_core::certificate::{certify, verify_certificate, CertifyConfig, CompositeLyapunov};
use sgain_core::gains::{derive_gains, DerivationParams};
use sgain_core::network::{ChainCoefficients, Family, NetworkGenerator, TruncatedNetwork};
use sgain_core::seq::Seq;
use sgain_core::sim::block_lp_norm;
use sgain_core::Error;

use crate::report::CoercivityCheck;

/// Independent stream for item `k` of a sweep, so results do not depend on
/// evaluation order.
pub fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

fn table(rng: &mut impl Rng, pre: usize, per: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let mut draw = |n: usize| (0..n).map(|_| rng.gen_range(lo..hi)).collect::<Vec<_>>();
    (draw(pre), draw(per))
}

/// Eventually periodic chain with `εᵢ + δᵢ < bᵢᵢ` at every index.
pub fn random_chain(rng: &mut impl Rng) -> (NetworkGenerator, DerivationParams) {
    let pre = rng.gen_range(0..=2);
    let per = rng.gen_range(1..=3);
    let (bp, bq) = table(rng, pre, per, 0.5, 2.0);
    let (lp, lq) = table(rng, pre, per, -0.6, 0.6);
    let (up, uq) = table(rng, pre, per, -0.6, 0.6);
    let (ep, eq) = table(rng, pre, per, 0.05, 0.45);
    let (dp, dq) = table(rng, pre, per, 0.05, 0.45);
    let scale = |f: Vec<f64>, b: &[f64]| f.iter().zip(b).map(|(f, b)| f * b).collect::<Vec<_>>();
    let seq = |p: Vec<f64>, q: Vec<f64>| Seq::periodic(p, q).expect("nonempty period");
    let gen = NetworkGenerator::new(Family::LinearChain(ChainCoefficients {
        diag: seq(bp.clone(), bq.clone()),
        lower: seq(lp, lq),
        upper: seq(up, uq),
        input: None,
        bound: None,
    }));
    let params = DerivationParams {
        eps: Some(seq(scale(ep, &bp), scale(eq, &bq))),
        delta: Some(seq(scale(dp, &bp), scale(dq, &bq))),
        ..Default::default()
    };
    (gen, params)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SoundnessReport {
    pub generators: usize,
    pub certified: usize,
    pub small_gain_violated: usize,
    /// Generators whose certification stopped with any other error.
    pub other: usize,
    /// Indices whose emitted certificate failed the pointwise scan.
    pub emitted_invalid: Vec<usize>,
    /// Certificates emitted although the bracket lower end reached one.
    pub emitted_above_one: Vec<usize>,
    pub largest_certified_upper: f64,
}

enum Verdict {
    Certified { valid: bool, lower: f64, upper: f64 },
    Violated,
    Other,
}

fn judge(seed: u64, k: usize, cfg: &CertifyConfig) -> Verdict {
    let mut rng = stream(seed, k as u64);
    let (gen, params) = random_chain(&mut rng);
    let g = match derive_gains(&gen, &params) {
        Ok(g) => g,
        Err(_) => return Verdict::Other,
    };
    match certify(&g, cfg) {
        Ok((cert, _)) => Verdict::Certified {
            valid: verify_certificate(&cert, &g, cfg.check_horizon).passed,
            lower: cert.bracket.lower,
            upper: cert.bracket.upper,
        },
        Err(Error::SmallGainViolated(_)) => Verdict::Violated,
        Err(_) => Verdict::Other,
    }
}

/// Certifies `count` random chains and re-verifies every certificate that
/// comes out. Work is split across threads; the report does not depend on
/// the split.
pub fn certificate_soundness_sweep(count: usize, seed: u64, cfg: &CertifyConfig) -> SoundnessReport {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(count.max(1));
    let verdicts: Vec<(usize, Verdict)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| s.spawn(move || (t..count).step_by(threads).map(|k| (k, judge(seed, k, cfg))).collect::<Vec<_>>()))
            .collect();
        let mut all: Vec<_> = handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect();
        all.sort_by_key(|(k, _)| *k);
        all
    });
    let mut rep = SoundnessReport { generators: count, ..Default::default() };
    for (k, v) in verdicts {
        match v {
            Verdict::Certified { valid, lower, upper } => {
                rep.certified += 1;
                rep.largest_certified_upper = rep.largest_certified_upper.max(upper);
                if !valid {
                    rep.emitted_invalid.push(k);
                }
                if lower >= 1.0 {
                    rep.emitted_above_one.push(k);
                }
            }
            Verdict::Violated => rep.small_gain_violated += 1,
            Verdict::Other => rep.other += 1,
        }
    }
    rep
}

/// Random state with entries in `[-1, 1]` scaled by a log-uniform magnitude.
pub fn random_state(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    let mag = 10f64.powf(rng.gen_range(-3.0..3.0));
    (0..dim).map(|_| mag * rng.gen_range(-1.0..1.0)).collect()
}

/// Checks `μ̲α̲|x|ₚᵖ ≤ V(x) ≤ μ̄ᾱ|x|ₚᵖ` on `samples` random states.
pub fn coercivity_sweep(
    v: &CompositeLyapunov,
    net: &TruncatedNetwork,
    samples: usize,
    rng: &mut impl Rng,
) -> CoercivityCheck {
    let (lower, upper) = v.coercivity();
    let mut check = CoercivityCheck { samples, lower, upper, violations: 0, worst_excess: f64::NEG_INFINITY };
    for _ in 0..samples {
        let x = random_state(rng, net.state_dim());
        let np = block_lp_norm(&x, net.offsets(), v.p).powf(v.p);
        let val = match v.eval(&x) {
            Ok(val) => val,
            Err(_) => {
                check.violations += 1;
                continue;
            }
        };
        let excess = ((lower * np - val) / val).max((val - upper * np) / val);
        check.worst_excess = check.worst_excess.max(excess);
        if !(excess <= 1e-12) {
            check.violations += 1;
        }
    }
    check
}
