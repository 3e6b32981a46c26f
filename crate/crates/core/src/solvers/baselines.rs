use crate::error::{Error, Result};
use crate::linalg::{cholesky_factor, spectral_norm_sq, vecops, DenseMatrix, SpdFactor};
use crate::problem::{Model, PrimalDualPoint, Problem, Sense, SeparableProblem};
use crate::prox::{prox_constrained, ObjectiveSpec, SetSpec};

use super::{BaselineConfig, BaselineMethod, InnerSettings};

fn expect_method(cfg: &BaselineConfig, method: BaselineMethod) -> Result<()> {
    if cfg.method != method {
        return Err(Error::ConfigInvalid(format!(
            "expected {method:?} config, got {:?}",
            cfg.method
        )));
    }
    if !(cfg.r.is_finite() && cfg.r > 0.0) {
        return Err(Error::ConfigInvalid(format!("r must be > 0, got {}", cfg.r)));
    }
    Ok(())
}

fn equality_only(sense: Sense, method: BaselineMethod) -> Result<()> {
    match sense {
        Sense::Equality => Ok(()),
        Sense::Inequality => Err(Error::ConfigInvalid(format!(
            "{method:?} is only implemented for equality constraints"
        ))),
    }
}

/// `argmin { θ(x) + (r/2)‖Ax − t‖² : x ∈ X }`, in closed form when θ is a
/// quadratic over the whole space with `P + rAᵀA` positive definite, and by
/// FISTA with adaptive restart otherwise.
#[derive(Debug, Clone)]
struct PenalizedSolver {
    objective: ObjectiveSpec,
    set: SetSpec,
    a: DenseMatrix,
    r: f64,
    lipschitz: f64,
    exact: Option<(SpdFactor, Vec<f64>)>,
    inner: InnerSettings,
}

impl PenalizedSolver {
    fn new(objective: &ObjectiveSpec, set: &SetSpec, a: &DenseMatrix, r: f64, inner: InnerSettings) -> Result<Self> {
        let exact = match set {
            SetSpec::WholeSpace => objective.as_quadratic(a.cols()).and_then(|(mut p, c)| {
                p.add_assign_scaled(r, &a.gram_cols()).ok()?;
                cholesky_factor(&p).ok().map(|f| (f, c))
            }),
            _ => None,
        };
        Ok(Self {
            objective: objective.clone(),
            set: set.clone(),
            a: a.clone(),
            r,
            lipschitz: r * spectral_norm_sq(a)?,
            exact,
            inner,
        })
    }

    fn solve(&self, target: &[f64], warm: &[f64]) -> Result<Vec<f64>> {
        if let Some((factor, c)) = &self.exact {
            let mut rhs = vecops::scale(self.r, &self.a.matvec_t(target)?);
            vecops::axpy(-1.0, c, &mut rhs);
            return factor.solve(&rhs);
        }
        // Zero coupling: the smooth part is constant, any unit step is exact.
        let l = if self.lipschitz > 0.0 { self.lipschitz } else { 1.0 };
        let mut x = warm.to_vec();
        let mut y = x.clone();
        let mut t = 1.0_f64;
        for _ in 0..self.inner.max_iters {
            let resid = vecops::sub(&self.a.matvec(&y)?, target);
            let grad = vecops::scale(self.r, &self.a.matvec_t(&resid)?);
            let q: Vec<f64> = y.iter().zip(&grad).map(|(yi, gi)| yi - gi / l).collect();
            let next = prox_constrained(&self.objective, &self.set, l, &q)?;
            let gap = vecops::norm(&vecops::sub(&next, &y));
            if gap <= self.inner.tol * (1.0 + vecops::norm(&next)) {
                return Ok(next);
            }
            let restart = vecops::dot(&vecops::sub(&y, &next), &vecops::sub(&next, &x)) > 0.0;
            if restart {
                t = 1.0;
                y = next.clone();
            } else {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                let beta = (t - 1.0) / t_next;
                y = next.iter().zip(&x).map(|(n, o)| n + beta * (n - o)).collect();
                t = t_next;
            }
            x = next;
        }
        Err(Error::InnerNoConvergence {
            iterations: self.inner.max_iters,
        })
    }
}

/// Classic ALM with an iteratively solved x-subproblem.
#[derive(Debug, Clone)]
pub struct ClassicAlm {
    prob: Problem,
    r: f64,
    solver: PenalizedSolver,
}

impl ClassicAlm {
    pub fn new(prob: &Problem, cfg: &BaselineConfig) -> Result<Self> {
        expect_method(cfg, BaselineMethod::ClassicAlm)?;
        equality_only(prob.sense, cfg.method)?;
        let solver = PenalizedSolver::new(&prob.objective, &prob.set, &prob.a, cfg.r, cfg.inner)?;
        Ok(Self {
            prob: prob.clone(),
            r: cfg.r,
            solver,
        })
    }

    pub fn step(&self, w: &PrimalDualPoint) -> Result<PrimalDualPoint> {
        self.prob.check_point(w)?;
        let target: Vec<f64> = self.prob.b.iter().zip(&w.lambda).map(|(b, l)| b + l / self.r).collect();
        let x = self.solver.solve(&target, &w.x)?;
        let lambda = multiplier_update(&w.lambda, self.r, &self.prob.constraint_residual(&x));
        Ok(PrimalDualPoint::new(x, lambda))
    }
}

/// `λ − r·res`
fn multiplier_update(lambda: &[f64], r: f64, res: &[f64]) -> Vec<f64> {
    lambda.iter().zip(res).map(|(l, v)| l - r * v).collect()
}

/// Linearized ALM: prox step with parameter σ on the linearized penalty.
#[derive(Debug, Clone)]
pub struct Lalm {
    prob: Problem,
    r: f64,
    sigma: f64,
}

impl Lalm {
    pub fn new(prob: &Problem, cfg: &BaselineConfig) -> Result<Self> {
        expect_method(cfg, BaselineMethod::Lalm)?;
        equality_only(prob.sense, cfg.method)?;
        let bound = cfg.bound_factor() * cfg.r * spectral_norm_sq(&prob.a)?;
        if cfg.sigma_or_s.is_nan() || cfg.sigma_or_s <= bound {
            return Err(Error::ConfigInvalid(format!(
                "LALM needs sigma > {bound}, got {}",
                cfg.sigma_or_s
            )));
        }
        Ok(Self {
            prob: prob.clone(),
            r: cfg.r,
            sigma: cfg.sigma_or_s,
        })
    }

    pub fn step(&self, w: &PrimalDualPoint) -> Result<PrimalDualPoint> {
        let p = &self.prob;
        p.check_point(w)?;
        let shifted = multiplier_update(&w.lambda, self.r, &p.constraint_residual(&w.x));
        let g = p.apply_at(&shifted);
        let q: Vec<f64> = w.x.iter().zip(&g).map(|(x, gi)| x + gi / self.sigma).collect();
        let x = p.prox_step(self.sigma, &q)?;
        let lambda = multiplier_update(&w.lambda, self.r, &p.constraint_residual(&x));
        Ok(PrimalDualPoint::new(x, lambda))
    }
}

/// Primal-dual method with the extrapolated multiplier update in metric `sI`.
#[derive(Debug, Clone)]
pub struct PrimalDual {
    prob: Problem,
    r: f64,
    s: f64,
}

impl PrimalDual {
    pub fn new(prob: &Problem, cfg: &BaselineConfig) -> Result<Self> {
        expect_method(cfg, BaselineMethod::PrimalDual)?;
        let norm = spectral_norm_sq(&prob.a)?;
        if cfg.sigma_or_s.is_nan() || cfg.sigma_or_s <= 0.0 || cfg.r * cfg.sigma_or_s <= norm {
            return Err(Error::ConfigInvalid(format!(
                "primal-dual needs r*s > {norm}, got r = {}, s = {}",
                cfg.r, cfg.sigma_or_s
            )));
        }
        Ok(Self {
            prob: prob.clone(),
            r: cfg.r,
            s: cfg.sigma_or_s,
        })
    }

    pub fn step(&self, w: &PrimalDualPoint) -> Result<PrimalDualPoint> {
        let p = &self.prob;
        p.check_point(w)?;
        let g = p.apply_at(&w.lambda);
        let q: Vec<f64> = w.x.iter().zip(&g).map(|(x, gi)| x + gi / self.r).collect();
        let x = p.prox_step(self.r, &q)?;
        let bar: Vec<f64> = x.iter().zip(&w.x).map(|(n, c)| 2.0 * n - c).collect();
        let res = p.constraint_residual(&bar);
        let mut lambda: Vec<f64> = w.lambda.iter().zip(&res).map(|(l, v)| l - v / self.s).collect();
        p.sense.project_multiplier(&mut lambda);
        Ok(PrimalDualPoint::new(x, lambda))
    }
}

fn two_blocks(prob: &SeparableProblem, method: BaselineMethod) -> Result<()> {
    equality_only(prob.sense, method)?;
    if prob.p() != 2 {
        return Err(Error::ConfigInvalid(format!(
            "{method:?} needs exactly 2 blocks, got {}",
            prob.p()
        )));
    }
    Ok(())
}

/// `b − Aⱼxⱼ + λ/r`: target of one block's penalized subproblem.
fn block_target(b: &[f64], other: &[f64], lambda: &[f64], r: f64) -> Vec<f64> {
    b.iter()
        .zip(other)
        .zip(lambda)
        .map(|((bi, oi), li)| bi - oi + li / r)
        .collect()
}

/// Two-block ADMM with Gauss–Seidel block order.
#[derive(Debug, Clone)]
pub struct Admm {
    prob: SeparableProblem,
    r: f64,
    first: PenalizedSolver,
    second: PenalizedSolver,
}

impl Admm {
    pub fn new(prob: &SeparableProblem, cfg: &BaselineConfig) -> Result<Self> {
        expect_method(cfg, BaselineMethod::Admm)?;
        two_blocks(prob, cfg.method)?;
        let [b1, b2] = prob.blocks() else { unreachable!() };
        Ok(Self {
            prob: prob.clone(),
            r: cfg.r,
            first: PenalizedSolver::new(&b1.objective, &b1.set, &b1.a, cfg.r, cfg.inner)?,
            second: PenalizedSolver::new(&b2.objective, &b2.set, &b2.a, cfg.r, cfg.inner)?,
        })
    }

    pub fn step(&self, w: &PrimalDualPoint) -> Result<PrimalDualPoint> {
        let p = &self.prob;
        p.check_point(w)?;
        let [b1, b2] = p.blocks() else { unreachable!() };
        let parts = p.split(&w.x);
        let x1 = self.first.solve(
            &block_target(&p.b, &b2.a.matvec(parts[1])?, &w.lambda, self.r),
            parts[0],
        )?;
        let a1x1 = b1.a.matvec(&x1)?;
        let x2 = self
            .second
            .solve(&block_target(&p.b, &a1x1, &w.lambda, self.r), parts[1])?;
        let mut x = x1;
        x.extend(x2);
        let lambda = multiplier_update(&w.lambda, self.r, &p.constraint_residual(&x));
        Ok(PrimalDualPoint::new(x, lambda))
    }
}

/// ADMM with the second block linearized by `G = sI − rA₂ᵀA₂`.
#[derive(Debug, Clone)]
pub struct Ladmm {
    prob: SeparableProblem,
    r: f64,
    s: f64,
    first: PenalizedSolver,
}

impl Ladmm {
    pub fn new(prob: &SeparableProblem, cfg: &BaselineConfig) -> Result<Self> {
        expect_method(cfg, BaselineMethod::LinearizedAdmm)?;
        two_blocks(prob, cfg.method)?;
        let [b1, b2] = prob.blocks() else { unreachable!() };
        let bound = cfg.bound_factor() * cfg.r * spectral_norm_sq(&b2.a)?;
        if cfg.sigma_or_s.is_nan() || cfg.sigma_or_s <= bound {
            return Err(Error::ConfigInvalid(format!(
                "linearized ADMM needs s > {bound}, got {}",
                cfg.sigma_or_s
            )));
        }
        Ok(Self {
            prob: prob.clone(),
            r: cfg.r,
            s: cfg.sigma_or_s,
            first: PenalizedSolver::new(&b1.objective, &b1.set, &b1.a, cfg.r, cfg.inner)?,
        })
    }

    pub fn step(&self, w: &PrimalDualPoint) -> Result<PrimalDualPoint> {
        let p = &self.prob;
        p.check_point(w)?;
        let [b1, b2] = p.blocks() else { unreachable!() };
        let parts = p.split(&w.x);
        let x1 = self.first.solve(
            &block_target(&p.b, &b2.a.matvec(parts[1])?, &w.lambda, self.r),
            parts[0],
        )?;
        let mut res = b1.a.matvec(&x1)?;
        vecops::axpy(1.0, &b2.a.matvec(parts[1])?, &mut res);
        let res = vecops::sub(&res, &p.b);
        let g = b2.a.matvec_t(&multiplier_update(&w.lambda, self.r, &res))?;
        let q: Vec<f64> = parts[1].iter().zip(&g).map(|(x, gi)| x + gi / self.s).collect();
        let x2 = prox_constrained(&b2.objective, &b2.set, self.s, &q)?;
        let mut x = x1;
        x.extend(x2);
        let lambda = multiplier_update(&w.lambda, self.r, &p.constraint_residual(&x));
        Ok(PrimalDualPoint::new(x, lambda))
    }
}

pub fn classic_alm_step(prob: &Problem, cfg: &BaselineConfig, w: &PrimalDualPoint) -> Result<PrimalDualPoint> {
    ClassicAlm::new(prob, cfg)?.step(w)
}

pub fn lalm_step(prob: &Problem, cfg: &BaselineConfig, w: &PrimalDualPoint) -> Result<PrimalDualPoint> {
    Lalm::new(prob, cfg)?.step(w)
}

pub fn primal_dual_step(prob: &Problem, cfg: &BaselineConfig, w: &PrimalDualPoint) -> Result<PrimalDualPoint> {
    PrimalDual::new(prob, cfg)?.step(w)
}

pub fn admm_step(prob: &SeparableProblem, cfg: &BaselineConfig, w: &PrimalDualPoint) -> Result<PrimalDualPoint> {
    Admm::new(prob, cfg)?.step(w)
}

pub fn ladmm_step(prob: &SeparableProblem, cfg: &BaselineConfig, w: &PrimalDualPoint) -> Result<PrimalDualPoint> {
    Ladmm::new(prob, cfg)?.step(w)
}
