//! Certificates for the convergence theory: metric matrices, the per-iteration
//! contraction ledger, ergodic averages and the ε-approximate VI gap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{h_quadratic, spectral_norm_sq, vecops, DenseMatrix};
use crate::multiplier::{build_h0, build_h2, build_hp};
use crate::par::{self, Execution};
use crate::problem::{vi_operator, Instance, Model, PrimalDualPoint, SeparableProblem};
use crate::solvers::{run, BalancedAlmConfig, BaselineConfig, BaselineMethod, MethodConfig, RunHistory, StopRule};

/// Tolerance on contraction slack.
pub const CONTRACTION_TOL: f64 = 1e-9;
/// Tolerance on `lhs − bound` of the VI-gap certificate.
pub const GAP_TOL: f64 = 1e-8;
/// Rejection attempts per probe before falling back to projection.
const PROBE_ATTEMPTS: usize = 1000;

/// `[[rI, Aᵀ], [A, H₀]]`
pub fn balanced_metric(a: &DenseMatrix, r: f64, delta: f64) -> Result<DenseMatrix> {
    let h0 = build_h0(a, r, delta)?;
    Ok(saddle_metric(
        &DenseMatrix::scaled_identity(a.cols(), r),
        a,
        h0.matrix(),
    ))
}

/// `[[blockdiag(rᵢI), Aᵀ], [A, H_p]]` with `A = [A₁ … A_p]`.
pub fn split_metric(prob: &SeparableProblem, r_list: &[f64], delta: f64) -> Result<DenseMatrix> {
    if r_list.len() != prob.p() {
        return Err(Error::dims("block parameters", prob.p(), r_list.len()));
    }
    let pairs: Vec<_> = prob.blocks().iter().zip(r_list).map(|(b, r)| (&b.a, *r)).collect();
    let hp = build_hp(&pairs, delta)?;
    let diag: Vec<f64> = prob
        .blocks()
        .iter()
        .zip(r_list)
        .flat_map(|(b, r)| std::iter::repeat_n(*r, b.n()))
        .collect();
    let a = DenseMatrix::hstack(&prob.blocks().iter().map(|b| &b.a).collect::<Vec<_>>())?;
    Ok(saddle_metric(&DenseMatrix::diagonal(&diag), &a, hp.matrix()))
}

/// `[[rA₁ᵀA₁ + δI, 0, A₁ᵀ], [0, sI, A₂ᵀ], [A₁, A₂, H₂]]`
pub fn alt_split_metric(prob: &SeparableProblem, r: f64, s: f64, delta: f64) -> Result<DenseMatrix> {
    let [b1, b2] = prob.blocks() else {
        return Err(Error::ConfigInvalid(
            "alternative splitting needs exactly 2 blocks".into(),
        ));
    };
    let h2 = build_h2(&b2.a, r, s, delta)?;
    let mut top = b1.a.gram_cols().scaled(r);
    top.add_diagonal(delta);
    let top = DenseMatrix::block_diag(&[&top, &DenseMatrix::scaled_identity(b2.n(), s)]);
    let a = DenseMatrix::hstack(&[&b1.a, &b2.a])?;
    Ok(saddle_metric(&top, &a, h2.matrix()))
}

/// `[[rI, Aᵀ], [A, sI]]`
pub fn primal_dual_metric(a: &DenseMatrix, r: f64, s: f64) -> DenseMatrix {
    saddle_metric(
        &DenseMatrix::scaled_identity(a.cols(), r),
        a,
        &DenseMatrix::scaled_identity(a.rows(), s),
    )
}

fn saddle_metric(top: &DenseMatrix, a: &DenseMatrix, bottom: &DenseMatrix) -> DenseMatrix {
    let (m, n) = a.shape();
    let mut h = DenseMatrix::zeros(n + m, n + m);
    h.set_block(0, 0, top);
    h.set_block(0, n, &a.transpose());
    h.set_block(n, 0, a);
    h.set_block(n, n, bottom);
    h
}

/// `w̃_t = (1/(t+1)) Σ_{k=1}^{t+1} wᵏ`
pub fn ergodic_average(history: &RunHistory, t: usize) -> Result<PrimalDualPoint> {
    let needed = t + 2;
    if history.iterates.len() < needed {
        return Err(Error::InsufficientHistory {
            needed,
            got: history.iterates.len(),
        });
    }
    let pts = &history.iterates[1..needed];
    let scale = 1.0 / (t as f64 + 1.0);
    let mean = |get: fn(&PrimalDualPoint) -> &[f64]| -> Vec<f64> {
        let mut acc = vec![0.0; get(&pts[0]).len()];
        for p in pts {
            vecops::axpy(1.0, get(p), &mut acc);
        }
        vecops::scale(scale, &acc)
    };
    Ok(PrimalDualPoint::new(mean(|p| &p.x), mean(|p| &p.lambda)))
}

/// One iteration's contraction check, all distances squared in the H-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionCertificate {
    pub iteration: usize,
    pub dist_before: f64,
    pub dist_after: f64,
    pub step_h: f64,
    pub slack: f64,
}

impl ContractionCertificate {
    pub fn passed(&self) -> bool {
        self.slack >= -CONTRACTION_TOL
    }
}

/// Contraction certificates for every step of `history` against `w_star`.
/// For `alpha ≠ 1` the step length uses the stored predictors.
pub fn contraction_ledger(
    history: &RunHistory,
    h: &DenseMatrix,
    w_star: Option<&PrimalDualPoint>,
    alpha: f64,
) -> Result<Vec<ContractionCertificate>> {
    contraction_ledger_with(Execution::default(), history, h, w_star, alpha)
}

pub fn contraction_ledger_with(
    exec: Execution,
    history: &RunHistory,
    h: &DenseMatrix,
    w_star: Option<&PrimalDualPoint>,
    alpha: f64,
) -> Result<Vec<ContractionCertificate>> {
    let w_star = w_star.ok_or(Error::MissingReference)?;
    let steps = history.iterations();
    let relaxed = alpha != 1.0;
    if relaxed && history.predictors.len() < steps {
        return Err(Error::InsufficientHistory {
            needed: steps,
            got: history.predictors.len(),
        });
    }
    let scale = alpha * (2.0 - alpha);
    let dist = |w: &PrimalDualPoint| h_quadratic(h, &w.sub(w_star).stacked());
    let ks: Vec<usize> = (0..steps).collect();
    par::map(exec, &ks, |&k| {
        let cur = &history.iterates[k];
        let next = &history.iterates[k + 1];
        let target = if relaxed { &history.predictors[k] } else { next };
        let dist_before = dist(cur)?;
        let dist_after = dist(next)?;
        let step_h = h_quadratic(h, &cur.sub(target).stacked())?;
        Ok(ContractionCertificate {
            iteration: k,
            dist_before,
            dist_after,
            step_h,
            slack: dist_before - dist_after - scale * step_h,
        })
    })
    .into_iter()
    .collect()
}

/// Result of probing the ergodic VI gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    pub t: usize,
    pub ergodic_point: PrimalDualPoint,
    pub probe_points: Vec<PrimalDualPoint>,
    /// Largest `lhs(w)` over the probes; `−∞` without probes.
    pub max_lhs: f64,
    /// `‖w − w⁰‖²_H / (2(t+1))` at the probe with the largest excess.
    pub bound: f64,
    /// Largest `lhs(w) − bound(w)`; `−∞` without probes.
    pub worst_excess: f64,
    pub passed: bool,
}

/// `θ(x̃) − θ(x) + (w̃ − w)ᵀF(w)`
pub fn gap_lhs<M: Model + ?Sized>(prob: &M, w_tilde: &PrimalDualPoint, w: &PrimalDualPoint) -> Result<f64> {
    let f = vi_operator(prob, w)?;
    Ok(prob.objective_value(&w_tilde.x) - prob.objective_value(&w.x) + vecops::dot(&w_tilde.sub(w).stacked(), &f))
}

/// `‖w − w⁰‖²_H / (2(t+1))`
pub fn gap_bound(h: &DenseMatrix, w: &PrimalDualPoint, w0: &PrimalDualPoint, t: usize) -> Result<f64> {
    Ok(h_quadratic(h, &w.sub(w0).stacked())? / (2.0 * (t as f64 + 1.0)))
}

/// Probes of `Ω` inside the Euclidean unit ball around `center`: uniform
/// rejection sampling, with projection onto `Ω` after repeated rejection.
pub fn sample_probes<M: Model + ?Sized>(
    prob: &M,
    center: &PrimalDualPoint,
    count: usize,
    seed: u64,
) -> Vec<PrimalDualPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = center.x.len();
    let dim = center.dim();
    let base = center.stacked();
    let draw = |rng: &mut ChaCha8Rng| -> PrimalDualPoint {
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let len = vecops::norm(&dir);
        let radius = rng.random::<f64>().powf(1.0 / dim as f64);
        let scale = if len > 0.0 { radius / len } else { 0.0 };
        let v: Vec<f64> = base.iter().zip(&dir).map(|(c, d)| c + scale * d).collect();
        PrimalDualPoint::from_stacked(&v, n)
    };
    (0..count)
        .map(|_| {
            let mut last = None;
            for _ in 0..PROBE_ATTEMPTS {
                let w = draw(&mut rng);
                if prob.contains(&w, 0.0) {
                    return w;
                }
                last = Some(w);
            }
            let w = last.expect("at least one attempt");
            let mut lambda = w.lambda;
            prob.sense().project_multiplier(&mut lambda);
            PrimalDualPoint::new(prob.project_primal(&w.x), lambda)
        })
        .collect()
}

/// Checks the O(1/t) ergodic gap bound at `probe_count` seeded probes.
pub fn vi_gap<M: Model + Sync + ?Sized>(
    prob: &M,
    history: &RunHistory,
    t: usize,
    probe_count: usize,
    rng_seed: u64,
) -> Result<GapCertificate> {
    vi_gap_with(Execution::default(), prob, history, t, probe_count, rng_seed)
}

pub fn vi_gap_with<M: Model + Sync + ?Sized>(
    exec: Execution,
    prob: &M,
    history: &RunHistory,
    t: usize,
    probe_count: usize,
    rng_seed: u64,
) -> Result<GapCertificate> {
    let w_tilde = ergodic_average(history, t)?;
    let w0 = &history.iterates[0];
    let probes = sample_probes(prob, &w_tilde, probe_count, rng_seed);
    let evals: Vec<Result<(f64, f64)>> = par::map(exec, &probes, |w| {
        Ok((gap_lhs(prob, &w_tilde, w)?, gap_bound(&history.metric, w, w0, t)?))
    });
    let mut max_lhs = f64::NEG_INFINITY;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut bound = 0.0;
    for e in evals {
        let (lhs, b) = e?;
        max_lhs = max_lhs.max(lhs);
        if lhs - b > worst_excess {
            worst_excess = lhs - b;
            bound = b;
        }
    }
    Ok(GapCertificate {
        t,
        ergodic_point: w_tilde,
        probe_points: probes,
        max_lhs,
        bound,
        worst_excess,
        passed: worst_excess <= GAP_TOL,
    })
}

/// Accuracy demanded of a computed reference solution.
pub const REFERENCE_TOL: f64 = 1e-12;
/// Agreement demanded between the two reference runs.
pub const REFERENCE_AGREEMENT: f64 = 1e-10;
const REFERENCE_MAX_ITERS: usize = 1_000_000;

/// High-accuracy saddle point by the balanced ALM, confirmed by the
/// primal-dual method from the same start.
pub fn reference_solution(instance: &Instance, cfg: &BalancedAlmConfig) -> Result<PrimalDualPoint> {
    let stop = StopRule::new(REFERENCE_MAX_ITERS, REFERENCE_TOL);
    let w0 = instance.default_start();
    let primary = run(instance, &MethodConfig::Balanced(*cfg), &stop, &w0, None)?;
    if !primary.converged {
        return Err(Error::NoConvergence {
            what: "reference balanced ALM",
            iterations: primary.iterations(),
        });
    }
    let a = match instance {
        Instance::Single(p) => p.a.clone(),
        Instance::Separable(p) => p.flatten()?.a,
    };
    let norm = spectral_norm_sq(&a)?;
    let r = 1.0;
    let s = 1.01 * norm.max(1e-12) / r + 1e-6;
    let pd = MethodConfig::Baseline(BaselineConfig::new(BaselineMethod::PrimalDual, r, s));
    let check = run(instance, &pd, &stop, &w0, None)?;
    if !check.converged {
        return Err(Error::NoConvergence {
            what: "reference cross-check",
            iterations: check.iterations(),
        });
    }
    let diff = primary.last().max_abs_diff(check.last());
    if diff > REFERENCE_AGREEMENT {
        return Err(Error::InvalidData(format!("reference runs disagree by {diff:e}")));
    }
    Ok(primary.last().clone())
}
