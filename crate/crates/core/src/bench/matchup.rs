use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spectral_norm_sq;
use crate::par::{self, Execution};
use crate::problem::{Instance, KktResidual, Model, PrimalDualPoint};
use crate::solvers::{
    run, AltSplitConfig, BalancedAlmConfig, BaselineConfig, BaselineMethod, MethodConfig, RunHistory, SplitConfig,
    StopRule,
};

use super::format::write_atomic;

/// Names accepted by [`method_from_name`].
pub const METHOD_NAMES: [&str; 9] = [
    "balanced-alm",
    "split-alm",
    "alt-split-alm",
    "classic-alm",
    "lalm",
    "primal-dual",
    "admm",
    "ladmm",
    "relaxed-alm",
];

/// Shared method parameters; unset step sizes default to 1.01 times the
/// smallest admissible value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MethodParams {
    pub r: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub s: Option<f64>,
    pub sigma: Option<f64>,
    pub sharp_bounds: bool,
}

pub const DEFAULT_R: f64 = 1.0;
pub const DEFAULT_DELTA: f64 = 0.01;
/// Relaxation used by `relaxed-alm` when no alpha is given.
pub const DEFAULT_RELAXATION: f64 = 1.5;

fn above(bound: f64) -> f64 {
    if bound > 0.0 {
        1.01 * bound
    } else {
        1.0
    }
}

fn coupling_norm(instance: &Instance) -> Result<f64> {
    match instance {
        Instance::Single(p) => spectral_norm_sq(&p.a),
        Instance::Separable(p) => spectral_norm_sq(&p.flatten()?.a),
    }
}

fn second_block_norm(instance: &Instance) -> Result<f64> {
    match instance {
        Instance::Separable(p) if p.p() == 2 => spectral_norm_sq(&p.blocks()[1].a),
        _ => Err(Error::ConfigInvalid("ladmm needs a two-block instance".into())),
    }
}

/// Resolves a command-line method name to a full configuration.
pub fn method_from_name(name: &str, params: &MethodParams, instance: &Instance) -> Result<MethodConfig> {
    let r = params.r.unwrap_or(DEFAULT_R);
    let delta = params.delta.unwrap_or(DEFAULT_DELTA);
    let baseline = |method, sigma_or_s| {
        MethodConfig::Baseline(BaselineConfig {
            sharp_bounds: params.sharp_bounds,
            ..BaselineConfig::new(method, r, sigma_or_s)
        })
    };
    Ok(match name {
        "balanced-alm" => MethodConfig::Balanced(BalancedAlmConfig::relaxed(r, delta, params.alpha.unwrap_or(1.0))),
        "relaxed-alm" => MethodConfig::Balanced(BalancedAlmConfig::relaxed(
            r,
            delta,
            params.alpha.unwrap_or(DEFAULT_RELAXATION),
        )),
        "split-alm" => {
            let Instance::Separable(p) = instance else {
                return Err(Error::ConfigInvalid("split-alm needs a separable instance".into()));
            };
            MethodConfig::Split(SplitConfig::uniform(p.p(), r, delta))
        }
        "alt-split-alm" => MethodConfig::AltSplit(AltSplitConfig {
            r,
            s: params.s.unwrap_or(1.0),
            delta,
        }),
        "classic-alm" => baseline(BaselineMethod::ClassicAlm, 0.0),
        "admm" => baseline(BaselineMethod::Admm, 0.0),
        "lalm" => {
            let sigma = match params.sigma {
                Some(v) => v,
                None => above(r * coupling_norm(instance)?),
            };
            baseline(BaselineMethod::Lalm, sigma)
        }
        "primal-dual" => {
            let s = match params.s {
                Some(v) => v,
                None => above(coupling_norm(instance)? / r),
            };
            baseline(BaselineMethod::PrimalDual, s)
        }
        "ladmm" => {
            let s = match params.s {
                Some(v) => v,
                None => above(r * second_block_norm(instance)?),
            };
            baseline(BaselineMethod::LinearizedAdmm, s)
        }
        other => {
            return Err(Error::ConfigInvalid(format!(
                "unknown method {other:?}; expected one of {}",
                METHOD_NAMES.join(", ")
            )))
        }
    })
}

/// Summary of one method's run; `error` is set when the method failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub iterations: usize,
    pub converged: bool,
    pub final_kkt: Option<KktResidual>,
    pub objective_value: Option<f64>,
    pub wall_time_secs: f64,
    pub error: Option<String>,
}

/// A report row together with the history it summarizes.
#[derive(Debug, Clone)]
pub struct MatchupEntry {
    pub row: ReportRow,
    pub history: Option<RunHistory>,
    pub failure: Option<Error>,
}

fn run_one(
    instance: &Instance,
    name: &str,
    params: &MethodParams,
    stop: &StopRule,
    w0: &PrimalDualPoint,
    reference: Option<&PrimalDualPoint>,
) -> MatchupEntry {
    let start = Instant::now();
    let outcome = method_from_name(name, params, instance).and_then(|m| run(instance, &m, stop, w0, reference));
    let wall_time_secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(h) => MatchupEntry {
            row: ReportRow {
                method: name.to_string(),
                iterations: h.iterations(),
                converged: h.converged,
                final_kkt: h.residuals.last().copied(),
                objective_value: Some(instance.objective_value(&h.last().x)),
                wall_time_secs,
                error: None,
            },
            history: Some(h),
            failure: None,
        },
        Err(e) => MatchupEntry {
            row: ReportRow {
                method: name.to_string(),
                iterations: 0,
                converged: false,
                final_kkt: None,
                objective_value: None,
                wall_time_secs,
                error: Some(e.to_string()),
            },
            history: None,
            failure: Some(e),
        },
    }
}

/// Runs every named method from the same `w0`. Failures are recorded in
/// their own row and never stop the other methods.
pub fn run_matchup(
    exec: Execution,
    instance: &Instance,
    methods: &[String],
    params: &MethodParams,
    stop: &StopRule,
    w0: &PrimalDualPoint,
    reference: Option<&PrimalDualPoint>,
) -> Vec<MatchupEntry> {
    par::map(exec, methods, |name| {
        run_one(instance, name, params, stop, w0, reference)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub max_iters: usize,
    pub kkt_tol: f64,
    pub rows: Vec<ReportRow>,
}

pub fn write_report(path: &Path, report: &Report) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Error::Schema(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::problem::{Problem, Sense};
    use crate::prox::{ObjectiveSpec, SetSpec};

    fn scalar() -> Instance {
        Problem::new(
            ObjectiveSpec::quadratic(DenseMatrix::identity(1), vec![0.0]).unwrap(),
            SetSpec::WholeSpace,
            DenseMatrix::identity(1),
            vec![1.0],
            Sense::Equality,
        )
        .unwrap()
        .into()
    }

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn scalar_matchup_agrees() {
        let inst = scalar();
        let stop = StopRule::new(100_000, 1e-9);
        let out = run_matchup(
            Execution::default(),
            &inst,
            &names(&["balanced-alm", "classic-alm", "primal-dual"]),
            &MethodParams::default(),
            &stop,
            &inst.default_start(),
            None,
        );
        for e in &out {
            assert!(e.row.converged, "{:?}", e.row);
            assert!(e.row.final_kkt.unwrap().within(1e-9));
            assert!((e.row.objective_value.unwrap() - 0.5).abs() <= 1e-6);
        }
    }

    #[test]
    fn empty_and_failing_methods() {
        let inst = scalar();
        let stop = StopRule::new(1000, 1e-8);
        assert!(run_matchup(
            Execution::default(),
            &inst,
            &[],
            &MethodParams::default(),
            &stop,
            &inst.default_start(),
            None
        )
        .is_empty());
        let params = MethodParams {
            s: Some(0.5),
            ..MethodParams::default()
        };
        let out = run_matchup(
            Execution::Sequential,
            &inst,
            &names(&["primal-dual", "balanced-alm", "nope"]),
            &params,
            &stop,
            &inst.default_start(),
            None,
        );
        assert!(matches!(out[0].failure, Some(Error::ConfigInvalid(_))));
        assert!(out[1].row.converged);
        assert!(out[2].row.error.is_some());
    }
}
