//! Versioned run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sgain_core::certificate::CertifyConfig;
use sgain_core::scenarios::{make_scenario, ExampleScenario, InitialState, Overrides, SimPlan};
use sgain_core::sim::{InputSignal, Tolerance};

use crate::{Failure, SCHEMA};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisKnobs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Doublings of the rate cap tried before giving up.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_doublings: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check_horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neumann_order: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimKnobs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSignal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<InitialState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    /// Adds `x_1..x_d` columns to the trajectory CSV.
    pub write_states: bool,
    /// Extra seeded random initial states checked by `verify`.
    pub random_states: usize,
    pub coercivity_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_tol: Option<f64>,
}

impl Default for SimKnobs {
    fn default() -> Self {
        Self {
            n: None,
            t_end: None,
            h: None,
            input: None,
            x0: None,
            stride: None,
            write_states: false,
            random_states: 2,
            coercivity_samples: 10_000,
            c_tol: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    /// Built-in scenario name; exclusive with `network`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Overrides::is_empty")]
    pub overrides: Overrides,
    /// Fully spelled-out network, gain parameters and simulation plan.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network: Option<ExampleScenario>,
    pub analysis: AnalysisKnobs,
    pub sim: SimKnobs,
    /// Certificate file read by `verify`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA.into(),
            scenario: None,
            overrides: Overrides::new(),
            network: None,
            analysis: AnalysisKnobs::default(),
            sim: SimKnobs::default(),
            certificate: None,
            seed: None,
        }
    }
}

/// Everything a command needs, with knobs applied and ranges checked.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub scenario: ExampleScenario,
    pub certify: CertifyConfig,
    pub plan: SimPlan,
    pub tolerance: Tolerance,
    pub seed: u64,
    pub write_states: bool,
    pub random_states: usize,
    pub coercivity_samples: usize,
    pub certificate: Option<PathBuf>,
}

impl RunConfig {
    pub fn for_scenario(name: &str) -> Self {
        Self { scenario: Some(name.into()), ..Self::default() }
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text =
            fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|f| Failure::input(format!("{}: {}", path.display(), f.message)))
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Failure::input(format!("malformed config: {e}")))?;
        if cfg.schema != SCHEMA {
            return Err(Failure::input(format!("unsupported schema {:?}, expected {SCHEMA:?}", cfg.schema)));
        }
        Ok(cfg)
    }

    pub fn resolve(&self) -> Result<Resolved, Failure> {
        let mut scenario = match (&self.scenario, &self.network) {
            (Some(name), None) => make_scenario(name, &self.overrides).map_err(Failure::from_core)?,
            (None, Some(net)) => {
                if !self.overrides.is_empty() {
                    return Err(Failure::input("overrides apply to built-in scenarios only"));
                }
                net.clone()
            }
            (Some(_), Some(_)) => return Err(Failure::input("config sets both scenario and network")),
            (None, None) => return Err(Failure::input("config names neither a scenario nor a network")),
        };
        let a = &self.analysis;
        let mut certify = scenario.certify;
        if let Some(k) = a.k_max {
            positive_count("analysis.k_max", k)?;
            certify.bracket.k_max = k;
        }
        if let Some(n) = a.n_max {
            positive_count("analysis.n_max", n)?;
            certify.bracket.n_max = n;
        }
        if let Some(rho) = a.rho {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(Failure::input(format!("analysis.rho must be positive, got {rho}")));
            }
            certify.rho = Some(rho);
        }
        certify.max_doublings = a.max_doublings.or(certify.max_doublings);
        certify.check_horizon = a.check_horizon.or(certify.check_horizon);
        certify.neumann.order = a.neumann_order.or(certify.neumann.order);
        scenario.certify = certify;

        let s = &self.sim;
        let mut plan = scenario.sim.clone();
        if let Some(n) = s.n {
            positive_count("sim.n", n)?;
            plan.n = n;
        }
        plan.t_end = s.t_end.unwrap_or(plan.t_end);
        plan.h = s.h.unwrap_or(plan.h);
        if !(plan.h > 0.0 && plan.t_end >= plan.h && plan.t_end.is_finite()) {
            return Err(Failure::input(format!("sim needs h > 0 and T ≥ h, got h = {}, T = {}", plan.h, plan.t_end)));
        }
        if let Some(stride) = s.stride {
            positive_count("sim.stride", stride)?;
            plan.stride = stride;
        }
        if let Some(u) = &s.input {
            u.validate().map_err(Failure::from_core)?;
            plan.forced_input = u.clone();
        }
        if let Some(x0) = &s.x0 {
            plan.x0 = x0.clone();
        }
        let c = s.c_tol.unwrap_or(Tolerance::default().c);
        if !(c > 0.0 && c.is_finite()) {
            return Err(Failure::input(format!("sim.c_tol must be positive, got {c}")));
        }
        scenario.sim = plan.clone();
        Ok(Resolved {
            scenario,
            certify,
            plan,
            tolerance: Tolerance { c },
            seed: self.seed.unwrap_or(0),
            write_states: s.write_states,
            random_states: s.random_states,
            coercivity_samples: s.coercivity_samples,
            certificate: self.certificate.clone(),
        })
    }
}

fn positive_count(name: &str, v: usize) -> Result<(), Failure> {
    if v == 0 {
        Err(Failure::input(format!("{name} must be at least 1")))
    } else {
        Ok(())
    }
}
