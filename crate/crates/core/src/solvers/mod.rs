//! Step functions for the balanced ALM family and the baseline methods, plus
//! the shared driver loop.

mod balanced;
mod baselines;
mod driver;

pub use balanced::{
    alt_split_step, balanced_alm_step, generalized_step, split_balanced_step, AltSplitSystem, RelaxedStep,
};
pub use baselines::{
    admm_step, classic_alm_step, ladmm_step, lalm_step, primal_dual_step, Admm, ClassicAlm, Ladmm, Lalm, PrimalDual,
};
pub use driver::{prepare, run, run_fixed, PreparedMethod, RunHistory};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::ConfigInvalid(format!("{name} must be > 0, got {v}")))
    }
}

/// Parameters of the balanced ALM; `alpha = 1` is the unrelaxed method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalancedAlmConfig {
    pub r: f64,
    pub delta: f64,
    pub alpha: f64,
}

impl BalancedAlmConfig {
    pub fn new(r: f64, delta: f64) -> Self {
        Self { r, delta, alpha: 1.0 }
    }

    pub fn relaxed(r: f64, delta: f64, alpha: f64) -> Self {
        Self { r, delta, alpha }
    }

    pub fn validate(&self) -> Result<()> {
        positive("r", self.r)?;
        positive("delta", self.delta)?;
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::ConfigInvalid(format!(
                "alpha must lie in (0, 2), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Per-block proximal parameters for the multi-block splitting version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub r_list: Vec<f64>,
    pub delta: f64,
}

impl SplitConfig {
    pub fn uniform(p: usize, r: f64, delta: f64) -> Self {
        Self {
            r_list: vec![r; p],
            delta,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.r_list.len() != p {
            return Err(Error::ConfigInvalid(format!(
                "expected {p} block parameters, got {}",
                self.r_list.len()
            )));
        }
        self.r_list.iter().try_for_each(|r| positive("r_i", *r))?;
        positive("delta", self.delta)
    }
}

/// Parameters of the two-block alternative splitting version.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltSplitConfig {
    pub r: f64,
    pub s: f64,
    pub delta: f64,
}

impl AltSplitConfig {
    pub fn validate(&self) -> Result<()> {
        positive("r", self.r)?;
        positive("s", self.s)?;
        positive("delta", self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineMethod {
    ClassicAlm,
    Lalm,
    PrimalDual,
    Admm,
    LinearizedAdmm,
}

/// Inner accelerated proximal-gradient settings for subproblems without a
/// closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerSettings {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for InnerSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 50_000,
        }
    }
}

/// Configuration of a baseline method. `sigma_or_s` is σ for LALM and `s`
/// for the primal-dual method and linearized ADMM; unused otherwise.
///
/// `sharp_bounds` relaxes the LALM / linearized-ADMM step-size condition
/// from `r‖AᵀA‖` to `0.75·r‖AᵀA‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub r: f64,
    pub sigma_or_s: f64,
    pub inner: InnerSettings,
    pub sharp_bounds: bool,
}

impl BaselineConfig {
    pub fn new(method: BaselineMethod, r: f64, sigma_or_s: f64) -> Self {
        Self {
            method,
            r,
            sigma_or_s,
            inner: InnerSettings::default(),
            sharp_bounds: false,
        }
    }

    pub(crate) fn bound_factor(&self) -> f64 {
        if self.sharp_bounds {
            0.75
        } else {
            1.0
        }
    }
}

/// Stopping rule of the driver loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_iters: usize,
    pub kkt_tol: f64,
}

impl StopRule {
    pub fn new(max_iters: usize, kkt_tol: f64) -> Self {
        Self { max_iters, kkt_tol }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::ConfigInvalid("max_iters must be >= 1".into()));
        }
        positive("kkt_tol", self.kkt_tol)
    }
}

/// Any method the driver can run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MethodConfig {
    Balanced(BalancedAlmConfig),
    Split(SplitConfig),
    AltSplit(AltSplitConfig),
    Baseline(BaselineConfig),
}

impl MethodConfig {
    /// Command-line name of the method.
    pub fn name(&self) -> &'static str {
        match self {
            MethodConfig::Balanced(_) => "balanced-alm",
            MethodConfig::Split(_) => "split-alm",
            MethodConfig::AltSplit(_) => "alt-split-alm",
            MethodConfig::Baseline(b) => match b.method {
                BaselineMethod::ClassicAlm => "classic-alm",
                BaselineMethod::Lalm => "lalm",
                BaselineMethod::PrimalDual => "primal-dual",
                BaselineMethod::Admm => "admm",
                BaselineMethod::LinearizedAdmm => "ladmm",
            },
        }
    }

    /// Relaxation factor; 1 for every method except the relaxed balanced ALM.
    pub fn alpha(&self) -> f64 {
        match self {
            MethodConfig::Balanced(c) => c.alpha,
            _ => 1.0,
        }
    }
}
