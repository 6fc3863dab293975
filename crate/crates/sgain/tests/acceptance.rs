//! Acceptance suite: one PASS/FAIL line per criterion, then a single
//! assertion over all of them. Run with `--nocapture` to see the lines.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use serde_json::Value;
use sgain::sweep::{certificate_soundness_sweep, coercivity_sweep, stream};
use sgain_core::certificate::{
    assemble_lyapunov, certify, eta_margin, iss_trajectory_bound, neumann_eta, verify_certificate, CertifyConfig,
    NeumannConfig,
};
use sgain_core::gains::{derive_gains, GainData};
use sgain_core::network::{truncate, ChainCoefficients, Family, NetworkGenerator};
use sgain_core::operator::{build_gain_operator, power_norms, spectral_bracket, BracketConfig, DEFAULT_MEMORY_BUDGET};
use sgain_core::scenarios::{
    checked_run, make_scenario, run_config, run_pipeline, ExampleScenario, NegativeControl, Overrides, PipelineOptions,
};
use sgain_core::sim::{integrate, InputSignal, IntegrateConfig, Tolerance};

type Verdict = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn scenario(name: &str, overrides: &[(&str, f64)]) -> ExampleScenario {
    let o: Overrides = overrides.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    make_scenario(name, &o).unwrap()
}

fn gains(s: &ExampleScenario) -> GainData {
    derive_gains(&s.generator, &s.params).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Runs the binary and returns its exit code and the parsed report.
fn cli(args: &[&str], out: &Path, report: &str) -> (i32, Value) {
    let status =
        Command::new(env!("CARGO_BIN_EXE_sgain")).args(args).arg("--out").arg(out).output().expect("run sgain");
    let text = std::fs::read_to_string(out.join(report)).unwrap_or_else(|_| "null".into());
    (status.status.code().unwrap_or(-1), serde_json::from_str(&text).unwrap())
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let s = scenario("chain-a", &[]);
    let g = gains(&s);
    let op = build_gain_operator(&g).map_err(|e| e.to_string())?;
    for i in 2..=64 {
        ensure!(rel(g.lambda.at(i), 1.6) <= 1e-12, "λ_{i} = {}", g.lambda.at(i));
        ensure!(rel(g.gamma(i, i - 1), 0.05) <= 1e-12 && rel(g.gamma(i, i + 1), 0.05) <= 1e-12, "γ at {i}");
        ensure!(rel(op.psi(i, i + 1), 0.03125) <= 1e-12, "ψ at {i} = {}", op.psi(i, i + 1));
    }
    let b =
        spectral_bracket(&op, &BracketConfig { n_max: 64, ..BracketConfig::default() }).map_err(|e| e.to_string())?;
    let m = DMatrix::from_fn(64, 64, |i, j| if i.abs_diff(j) == 1 { 0.03125 } else { 0.0 });
    let oracle: f64 = m.symmetric_eigenvalues().max();
    let closed = 0.0625 * (std::f64::consts::PI / 65.0).cos();
    ensure!((oracle - closed).abs() < 1e-12, "eigen oracle {oracle} vs closed form {closed}");
    ensure!(b.upper <= 0.0625, "upper {}", b.upper);
    ensure!((b.lower - oracle).abs() <= 1e-6, "lower {} vs oracle {oracle}", b.lower);
    let rep = run_pipeline(&s, &PipelineOptions::default());
    let elapsed = start.elapsed();
    let cert = rep.certificate.as_ref().ok_or("no certificate")?;
    ensure!(rep.verification.as_ref().is_some_and(|v| v.passed), "certificate scan failed");
    ensure!(cert.lambda_inf >= 1.3, "λ∞ = {}", cert.lambda_inf);
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "λ = 1.6, γ = 0.05, ψ = 0.03125; bracket [{:.9}, {}] vs oracle {:.9}; λ∞ = {}; {:.2?}",
        b.lower, b.upper, oracle, cert.lambda_inf, elapsed
    ))
}

fn criterion_2() -> Verdict {
    let s = scenario("chain-a", &[]);
    let g = gains(&s);
    let (cert, _) = certify(&g, &CertifyConfig::default()).map_err(|e| e.to_string())?;
    let op = build_gain_operator(&g).map_err(|e| e.to_string())?;
    let norms = power_norms(&op, 32, DEFAULT_MEMORY_BUDGET).map_err(|e| e.to_string())?;
    let lam = cert.r_tilde;
    let eta = neumann_eta(&op, lam, &norms, &NeumannConfig::default()).map_err(|e| e.to_string())?;
    for i in 1..=1000 {
        ensure!(eta.at(i) >= 1.0 / lam, "η_{i} = {} < 1/λ", eta.at(i));
    }
    let (worst, at) = eta_margin(&op, &eta, lam);
    ensure!(worst <= 0.0, "Θη − r̃η = {worst} at {at}");

    // (λI − Θ)η = 𝟙 on 200 indices; row 200 closes with the far-field value
    // 1/(λ − 2ψ) that η approaches geometrically.
    let n = 200;
    let psi = 0.05 / 1.6;
    let far = 1.0 / (lam - 2.0 * psi);
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            lam
        } else if i.abs_diff(j) == 1 {
            -psi
        } else {
            0.0
        }
    });
    let mut rhs = DVector::from_element(n, 1.0);
    rhs[n - 1] += psi * far;
    let direct = a.lu().solve(&rhs).ok_or("singular oracle")?;
    let tol = eta.tail_bound + 1e-10;
    let mut max_dev = 0.0f64;
    for i in 1..=n {
        max_dev = max_dev.max((eta.at(i) - direct[i - 1]).abs());
    }
    ensure!(max_dev <= tol, "max |η − oracle| = {max_dev} > {tol}");

    let mut others = Vec::new();
    for name in ["traffic", "lure-platoon", "step5"] {
        let g = gains(&scenario(name, &[]));
        let (c, capped) = certify(&g, &CertifyConfig::default()).map_err(|e| format!("{name}: {e}"))?;
        ensure!(c.eta.eta_lo >= 1.0 / c.eta.lambda_shift, "{name}: η̲ below 1/λ");
        let op = build_gain_operator(&capped).map_err(|e| e.to_string())?;
        let norms = power_norms(&op, 32, DEFAULT_MEMORY_BUDGET).map_err(|e| e.to_string())?;
        let e = neumann_eta(&op, c.r_tilde, &norms, &NeumannConfig::default()).map_err(|e| e.to_string())?;
        let (w, at) = eta_margin(&op, &e, c.r_tilde);
        ensure!(w <= 0.0, "{name}: margin {w} at {at}");
        others.push(format!("{name} {w:.2e}"));
    }
    Ok(format!(
        "K = {}, tail {:.1e}; max |η − solve| = {max_dev:.1e}; chain-a margin {worst:.2e}; {}",
        eta.order,
        eta.tail_bound,
        others.join(", ")
    ))
}

fn criterion_3() -> Verdict {
    let mut lines = Vec::new();
    for name in ["chain-a", "traffic"] {
        let start = Instant::now();
        let s = scenario(name, &[]);
        ensure!(s.sim.n == 100 && s.sim.t_end == 10.0 && s.sim.h == 1e-3, "{name}: plan {:?}", s.sim);
        let rep = run_pipeline(&s, &PipelineOptions::default());
        let elapsed = start.elapsed();
        let cert = rep.certificate.as_ref().ok_or(format!("{name}: no certificate {:?}", rep.errors))?;
        let sim = rep.simulation.as_ref().ok_or(format!("{name}: no simulation {:?}", rep.errors))?;
        let diss = sim.unforced.dissipation.violations + sim.forced.as_ref().map_or(0, |f| f.dissipation.violations);
        ensure!(diss == 0, "{name}: {diss} dissipation violations");
        let fit = sim.unforced.fit.ok_or(format!("{name}: no decay fit"))?;
        ensure!(
            fit.rate >= cert.lambda_inf - 0.05,
            "{name}: fitted {} < λ∞ − 0.05 = {}",
            fit.rate,
            cert.lambda_inf - 0.05
        );
        ensure!(elapsed < Duration::from_secs(30), "{name}: took {elapsed:?}");
        lines.push(format!("{name} fit {:.4} ≥ λ∞ {:.4} − 0.05, {:.2?}", fit.rate, cert.lambda_inf, elapsed));
    }
    Ok(lines.join("; "))
}

fn criterion_4() -> Verdict {
    let geometric = InputSignal::GeometricProfile { amplitude: 1.0, ratio: 0.5 };
    let mut lines = Vec::new();
    let mut cases = vec![scenario("chain-a", &[("b_u", 1.0)]), scenario("traffic", &[]), scenario("lure-platoon", &[])];
    for s in &mut cases {
        s.sim.forced_input = geometric.clone();
    }
    for s in &cases {
        let g = gains(s);
        let (cert, _) = certify(&g, &CertifyConfig::default()).map_err(|e| e.to_string())?;
        let v = assemble_lyapunov(&cert, &g);
        let eps = cert.lambda_inf / 2.0;
        let bound = iss_trajectory_bound(&v, eps).map_err(|e| e.to_string())?;
        let net = truncate(&s.generator, s.sim.n).map_err(|e| e.to_string())?;
        let x0 = s.sim.x0.build(&net).map_err(|e| e.to_string())?;
        let cfg = IntegrateConfig { q: s.generator.q, ..run_config(&s.sim) };
        let tol = Tolerance::default();
        let (run, traj) = checked_run(&net, &x0, &geometric, &cfg, &v, &bound, tol).map_err(|e| e.to_string())?;
        // Recomputed from the certificate constants rather than IssBound.
        let u = traj.u_bound;
        ensure!(u > 0.0 && u <= (4.0f64 / 3.0).sqrt() + 1e-12, "{}: ‖u‖ = {u}", s.name);
        let chi = v.mu_hi * g.gamma_u_hi() * u.powf(v.q) / (cert.lambda_inf - eps);
        let vs = traj.v.as_ref().ok_or("no V samples")?;
        let mut worst = f64::NEG_INFINITY;
        for (k, (&t, &val)) in traj.t.iter().zip(vs).enumerate() {
            let env = (-eps * t).exp() * vs[0] + chi;
            let gap = val - env - tol.at(traj.h, val);
            worst = worst.max(val - env);
            ensure!(gap <= 0.0, "{}: V({t}) = {val} above envelope {env} at sample {k}", s.name);
        }
        ensure!(run.envelope.violations == 0, "{}: library envelope check reports violations", s.name);
        lines.push(format!("{} worst V − envelope {worst:.3e}", s.name));
    }
    Ok(lines.join("; "))
}

fn criterion_5() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (code, rep) = cli(&["analyze", "--scenario", "counter-slow"], dir.path(), "analyze.json");
    ensure!(code == 2, "counter-slow analyze exit {code}");
    ensure!(rep["body"]["rejected"]["assumption"] == "decay_rate", "rejection {:?}", rep["body"]["rejected"]);
    let slow = run_pipeline(&scenario("counter-slow", &[]), &PipelineOptions::default());
    let Some(NegativeControl::SlowDecay { n, index, fitted_rate, .. }) = slow.negative_control else {
        return Err(format!("counter-slow: no slow-decay control {:?}", slow.errors));
    };
    ensure!(n == 200 && index == 200, "counter-slow ran N = {n} from e_{index}");
    ensure!(rel(fitted_rate, 1.0 / 200.0) <= 0.2, "fitted rate {fitted_rate}");

    let (code, rep) = cli(&["analyze", "--scenario", "counter-gain"], dir.path(), "analyze.json");
    ensure!(code == 2, "counter-gain analyze exit {code}");
    ensure!(rep["body"]["rejected"]["assumption"] == "input_gain", "rejection {:?}", rep["body"]["rejected"]);
    let gain = run_pipeline(&scenario("counter-gain", &[]), &PipelineOptions::default());
    let Some(NegativeControl::UnboundedInputGain { n, worst_relative_error, .. }) = gain.negative_control else {
        return Err(format!("counter-gain: no input-gain control {:?}", gain.errors));
    };
    ensure!(worst_relative_error <= 0.01, "steady states off by {worst_relative_error}");
    Ok(format!(
        "exit 2 on λ̲ and γ̄ᵤ; slow fit {fitted_rate:.6} vs 0.005; {n} channels within {:.1e} of i·ū",
        worst_relative_error
    ))
}

fn criterion_6() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let s = scenario("chain-fail", &[]);
    let op = build_gain_operator(&gains(&s)).map_err(|e| e.to_string())?;
    let col: f64 = (1..=6).map(|i| op.psi(i, 3)).sum();
    ensure!((col - 2.0).abs() < 1e-12, "ψ column sum {col}");
    let (code, rep) = cli(&["certify", "--scenario", "chain-fail"], dir.path(), "certify.json");
    ensure!(code == 3, "chain-fail certify exit {code}");
    let lower = rep["body"]["analysis"]["bracket"]["lower"].as_f64().ok_or("no bracket in report")?;
    ensure!(lower > 1.0, "bracket lower {lower}");
    ensure!(
        rep["body"]["certificate"].is_null() && !dir.path().join("certificate.json").exists(),
        "certificate emitted"
    );

    let sweep = certificate_soundness_sweep(1000, 0x5eed, &CertifyConfig::default());
    ensure!(sweep.emitted_invalid.is_empty(), "emitted-but-invalid: {:?}", sweep.emitted_invalid);
    ensure!(sweep.emitted_above_one.is_empty(), "emitted with lower ≥ 1: {:?}", sweep.emitted_above_one);
    ensure!(sweep.certified > 0 && sweep.small_gain_violated > 0, "degenerate sweep {sweep:?}");
    Ok(format!(
        "lower {lower:.6}, exit 3; sweep of {}: {} certified, {} violated, {} other, 0 invalid",
        sweep.generators, sweep.certified, sweep.small_gain_violated, sweep.other
    ))
}

fn criterion_7() -> Verdict {
    let s = scenario("step5", &[]);
    let g = gains(&s);
    for i in [1usize, 2, 10, 1000, 1_000_000] {
        ensure!(rel(g.lambda.at(i), 1.0 + i as f64) <= 1e-12, "λ_{i} = {}", g.lambda.at(i));
    }
    ensure!(!g.lambda_hi().is_finite() || g.lambda.schedule().is_none(), "rates look bounded");
    let (cert, capped) = certify(&g, &CertifyConfig::default()).map_err(|e| e.to_string())?;
    let h = cert.h_cap.ok_or("no cap recorded")?;
    ensure!(verify_certificate(&cert, &capped, None).passed, "fails on capped data");
    let full = verify_certificate(&cert, &g, None);
    ensure!(full.passed, "fails on uncapped data at {}", full.worst_index);
    Ok(format!("h = {h}, λ∞ = {:.4}, uncapped scan of {} indices passes", cert.lambda_inf, full.checked))
}

fn criterion_8() -> Verdict {
    let gen = NetworkGenerator::new(Family::LinearChain(ChainCoefficients {
        diag: 1.0.into(),
        lower: 0.0.into(),
        upper: 0.0.into(),
        input: None,
        bound: None,
    }));
    let net = truncate(&gen, 1).map_err(|e| e.to_string())?;
    let err = |h: f64| {
        let cfg = IntegrateConfig { t_end: 1.0, h, ..Default::default() };
        let r = integrate(&net, &[1.0], &InputSignal::Zero, &cfg, None).unwrap();
        (r.final_state_norm() - (-1.0f64).exp()).abs()
    };
    let factor = err(0.1) / err(0.05);
    ensure!((12.0..=20.0).contains(&factor), "RK4 order factor {factor}");

    let mut sandwich = Vec::new();
    for (k, name) in ["chain-a", "lure-platoon", "traffic", "step5"].into_iter().enumerate() {
        let s = scenario(name, &[]);
        let g = gains(&s);
        let (cert, _) = certify(&g, &CertifyConfig::default()).map_err(|e| e.to_string())?;
        let v = assemble_lyapunov(&cert, &g);
        let net = truncate(&s.generator, s.sim.n).map_err(|e| e.to_string())?;
        let c = coercivity_sweep(&v, &net, 10_000, &mut stream(8, k as u64));
        ensure!(c.violations == 0, "{name}: {} sandwich violations", c.violations);
        sandwich.push(format!("{name} {:.1e}", c.worst_excess));
    }

    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    for dir in [&a, &b] {
        for cmd in ["analyze", "certify", "verify", "simulate"] {
            let (code, _) = cli(&[cmd, "--scenario", "chain-a", "--seed", "42"], dir.path(), &format!("{cmd}.json"));
            ensure!(code == 0, "{cmd} exit {code}");
        }
    }
    let mut files = 0;
    for entry in std::fs::read_dir(a.path()).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        let (x, y) = (std::fs::read(a.path().join(&name)), std::fs::read(b.path().join(&name)));
        ensure!(x.is_ok() && x.ok() == y.ok(), "{name:?} differs between runs");
        files += 1;
    }
    Ok(format!("order factor {factor:.3}; sandwich worst excess {}; {files} files byte-identical", sandwich.join(", ")))
}

#[test]
fn acceptance() {
    let criteria: [(u32, fn() -> Verdict); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    // Written to the raw handle so the lines show without --nocapture.
    let mut out = std::io::stdout();
    let mut failed = Vec::new();
    for (n, check) in criteria {
        let start = Instant::now();
        let verdict = check();
        let took = start.elapsed();
        match verdict {
            Ok(detail) => writeln!(out, "criterion {n}: PASS in {took:.2?} ({detail})").unwrap(),
            Err(why) => {
                writeln!(out, "criterion {n}: FAIL in {took:.2?} ({why})").unwrap();
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
