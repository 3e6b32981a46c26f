use crate::diagnostics::{alt_split_metric, balanced_metric, primal_dual_metric, split_metric};
use crate::error::{Error, Result};
use crate::linalg::{h_quadratic, DenseMatrix};
use crate::multiplier::{build_h0, build_hp, MultiplierMatrix};
use crate::problem::{kkt_residual, Instance, KktResidual, Model, PrimalDualPoint, Problem, Sense, SeparableProblem};

use super::{
    alt_split_step, balanced_alm_step, generalized_step, split_balanced_step, Admm, AltSplitConfig, AltSplitSystem,
    BalancedAlmConfig, BaselineMethod, ClassicAlm, Ladmm, Lalm, MethodConfig, PrimalDual, SplitConfig, StopRule,
};

/// A method bound to an instance with every constant matrix factored.
#[derive(Debug, Clone)]
pub enum PreparedMethod {
    Balanced {
        prob: Problem,
        cfg: BalancedAlmConfig,
        sys: MultiplierMatrix,
    },
    Split {
        prob: SeparableProblem,
        cfg: SplitConfig,
        sys: MultiplierMatrix,
    },
    AltSplit {
        prob: SeparableProblem,
        cfg: AltSplitConfig,
        sys: AltSplitSystem,
    },
    ClassicAlm(ClassicAlm),
    Lalm(Lalm),
    PrimalDual(PrimalDual, DenseMatrix),
    Admm(Admm),
    Ladmm(Ladmm),
}

fn single(instance: &Instance) -> Result<Problem> {
    match instance {
        Instance::Single(p) => Ok(p.clone()),
        Instance::Separable(p) => p.flatten(),
    }
}

fn separable<'a>(instance: &'a Instance, name: &str) -> Result<&'a SeparableProblem> {
    match instance {
        Instance::Separable(p) => Ok(p),
        Instance::Single(_) => Err(Error::ConfigInvalid(format!("{name} needs a separable instance"))),
    }
}

/// Validates `method` against `instance` and factors its constant systems.
pub fn prepare(instance: &Instance, method: &MethodConfig) -> Result<PreparedMethod> {
    Ok(match method {
        MethodConfig::Balanced(cfg) => {
            cfg.validate()?;
            let prob = single(instance)?;
            let sys = build_h0(&prob.a, cfg.r, cfg.delta)?;
            PreparedMethod::Balanced { prob, cfg: *cfg, sys }
        }
        MethodConfig::Split(cfg) => {
            let prob = separable(instance, method.name())?;
            cfg.validate(prob.p())?;
            let blocks: Vec<_> = prob.blocks().iter().zip(&cfg.r_list).map(|(b, r)| (&b.a, *r)).collect();
            let sys = build_hp(&blocks, cfg.delta)?;
            PreparedMethod::Split {
                prob: prob.clone(),
                cfg: cfg.clone(),
                sys,
            }
        }
        MethodConfig::AltSplit(cfg) => {
            let prob = separable(instance, method.name())?;
            let sys = AltSplitSystem::new(prob, cfg)?;
            PreparedMethod::AltSplit {
                prob: prob.clone(),
                cfg: *cfg,
                sys,
            }
        }
        MethodConfig::Baseline(cfg) => match cfg.method {
            BaselineMethod::ClassicAlm => PreparedMethod::ClassicAlm(ClassicAlm::new(&single(instance)?, cfg)?),
            BaselineMethod::Lalm => PreparedMethod::Lalm(Lalm::new(&single(instance)?, cfg)?),
            BaselineMethod::PrimalDual => {
                let prob = single(instance)?;
                let pd = PrimalDual::new(&prob, cfg)?;
                PreparedMethod::PrimalDual(pd, primal_dual_metric(&prob.a, cfg.r, cfg.sigma_or_s))
            }
            BaselineMethod::Admm => PreparedMethod::Admm(Admm::new(separable(instance, method.name())?, cfg)?),
            BaselineMethod::LinearizedAdmm => {
                PreparedMethod::Ladmm(Ladmm::new(separable(instance, method.name())?, cfg)?)
            }
        },
    })
}

impl PreparedMethod {
    /// Next iterate, plus the predictor for relaxed runs.
    pub fn step(&self, w: &PrimalDualPoint) -> Result<(PrimalDualPoint, Option<PrimalDualPoint>)> {
        Ok(match self {
            PreparedMethod::Balanced { prob, cfg, sys } if cfg.alpha == 1.0 => {
                (balanced_alm_step(prob, cfg, sys, w)?, None)
            }
            PreparedMethod::Balanced { prob, cfg, sys } => {
                let out = generalized_step(prob, cfg, sys, w)?;
                (out.next, Some(out.predictor))
            }
            PreparedMethod::Split { prob, cfg, sys } => (split_balanced_step(prob, cfg, sys, w)?, None),
            PreparedMethod::AltSplit { prob, cfg, sys } => (alt_split_step(prob, cfg, sys, w)?, None),
            PreparedMethod::ClassicAlm(m) => (m.step(w)?, None),
            PreparedMethod::Lalm(m) => (m.step(w)?, None),
            PreparedMethod::PrimalDual(m, _) => (m.step(w)?, None),
            PreparedMethod::Admm(m) => (m.step(w)?, None),
            PreparedMethod::Ladmm(m) => (m.step(w)?, None),
        })
    }

    /// Metric in which the method contracts, if it has one here.
    pub fn metric(&self) -> Result<Option<DenseMatrix>> {
        Ok(Some(match self {
            PreparedMethod::Balanced { prob, cfg, .. } => balanced_metric(&prob.a, cfg.r, cfg.delta)?,
            PreparedMethod::Split { prob, cfg, .. } => split_metric(prob, &cfg.r_list, cfg.delta)?,
            PreparedMethod::AltSplit { prob, cfg, .. } => alt_split_metric(prob, cfg.r, cfg.s, cfg.delta)?,
            PreparedMethod::PrimalDual(_, h) => h.clone(),
            PreparedMethod::ClassicAlm(_)
            | PreparedMethod::Lalm(_)
            | PreparedMethod::Admm(_)
            | PreparedMethod::Ladmm(_) => return Ok(None),
        }))
    }
}

/// Everything a run produced. All per-iterate lists have one entry per
/// iterate, `w⁰` included; `predictors[k]` is `w̃ᵏ` for relaxed runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunHistory {
    pub method: MethodConfig,
    pub metric: DenseMatrix,
    pub iterates: Vec<PrimalDualPoint>,
    pub predictors: Vec<PrimalDualPoint>,
    pub residuals: Vec<KktResidual>,
    /// `‖wᵏ − w*‖_H`, empty without a reference.
    pub h_distances: Vec<f64>,
    /// `‖w^{k-1} − wᵏ‖_H`, with a leading 0 for `w⁰`.
    pub successive_h_steps: Vec<f64>,
    pub converged: bool,
}

impl RunHistory {
    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn last(&self) -> &PrimalDualPoint {
        self.iterates.last().expect("history holds w0")
    }

    pub fn alpha(&self) -> f64 {
        self.method.alpha()
    }
}

fn h_norm(h: &DenseMatrix, a: &PrimalDualPoint, b: &PrimalDualPoint) -> Result<f64> {
    Ok(h_quadratic(h, &a.sub(b).stacked())?.max(0.0).sqrt())
}

fn check_start(instance: &Instance, w0: &PrimalDualPoint, reference: Option<&PrimalDualPoint>) -> Result<()> {
    instance.check_point(w0)?;
    if let Some(r) = reference {
        instance.check_point(r)?;
    }
    if instance.sense() == Sense::Inequality && w0.lambda.iter().any(|l| *l < 0.0) {
        return Err(Error::ConfigInvalid(
            "inequality runs need a nonnegative starting multiplier".into(),
        ));
    }
    Ok(())
}

fn drive(
    instance: &Instance,
    method: &MethodConfig,
    prepared: &PreparedMethod,
    w0: &PrimalDualPoint,
    reference: Option<&PrimalDualPoint>,
    max_iters: usize,
    tol: Option<f64>,
) -> Result<RunHistory> {
    let metric = prepared.metric()?.unwrap_or_else(|| DenseMatrix::identity(w0.dim()));
    let within = |r: &KktResidual| tol.is_some_and(|t| r.within(t));
    let first = kkt_residual(instance, w0)?;
    let mut hist = RunHistory {
        method: method.clone(),
        converged: within(&first),
        metric,
        iterates: vec![w0.clone()],
        predictors: Vec::new(),
        residuals: vec![first],
        h_distances: Vec::new(),
        successive_h_steps: vec![0.0],
    };
    if let Some(r) = reference {
        hist.h_distances.push(h_norm(&hist.metric, w0, r)?);
    }
    while !hist.converged && hist.iterations() < max_iters {
        let cur = hist.last();
        let (next, pred) = prepared.step(cur)?;
        hist.successive_h_steps.push(h_norm(&hist.metric, cur, &next)?);
        if let Some(r) = reference {
            hist.h_distances.push(h_norm(&hist.metric, &next, r)?);
        }
        let res = kkt_residual(instance, &next)?;
        hist.converged = within(&res);
        hist.residuals.push(res);
        if let Some(p) = pred {
            hist.predictors.push(p);
        }
        hist.iterates.push(next);
    }
    Ok(hist)
}

/// Iterates `method` from `w0` until every KKT residual component is at most
/// `stop.kkt_tol` or `stop.max_iters` steps were taken.
pub fn run(
    instance: &Instance,
    method: &MethodConfig,
    stop: &StopRule,
    w0: &PrimalDualPoint,
    reference: Option<&PrimalDualPoint>,
) -> Result<RunHistory> {
    stop.validate()?;
    check_start(instance, w0, reference)?;
    let prepared = prepare(instance, method)?;
    drive(
        instance,
        method,
        &prepared,
        w0,
        reference,
        stop.max_iters,
        Some(stop.kkt_tol),
    )
}

/// Takes exactly `iterations` steps with no stopping test; `converged` is
/// always false.
pub fn run_fixed(
    instance: &Instance,
    method: &MethodConfig,
    iterations: usize,
    w0: &PrimalDualPoint,
    reference: Option<&PrimalDualPoint>,
) -> Result<RunHistory> {
    check_start(instance, w0, reference)?;
    let prepared = prepare(instance, method)?;
    drive(instance, method, &prepared, w0, reference, iterations, None)
}
