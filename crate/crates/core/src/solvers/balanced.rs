use crate::error::{Error, Result};
use crate::linalg::{cholesky_factor, vecops, DenseMatrix, SpdFactor};
use crate::multiplier::{build_h2, solve_multiplier, MultiplierMatrix};
use crate::problem::{Model, PrimalDualPoint, Problem, SeparableProblem};
use crate::prox::{prox_constrained, ObjectiveSpec, SetSpec};

use super::{AltSplitConfig, BalancedAlmConfig, SplitConfig};

/// `x + (1/r)·g`
fn shifted(x: &[f64], r: f64, g: &[f64]) -> Vec<f64> {
    x.iter().zip(g).map(|(xi, gi)| xi + (1.0 / r) * gi).collect()
}

/// `2x⁺ − x`
fn extrapolate(next: &[f64], cur: &[f64]) -> Vec<f64> {
    next.iter().zip(cur).map(|(n, c)| 2.0 * n - c).collect()
}

fn predictor(prob: &Problem, r: f64, sys: &MultiplierMatrix, w: &PrimalDualPoint) -> Result<PrimalDualPoint> {
    prob.check_point(w)?;
    let q = shifted(&w.x, r, &prob.apply_at(&w.lambda));
    let x = prob.prox_step(r, &q)?;
    let s = vecops::sub(&prob.apply_a(&extrapolate(&x, &w.x)), &prob.b);
    let lambda = solve_multiplier(sys, prob.sense, &w.lambda, &s)?;
    Ok(PrimalDualPoint::new(x, lambda))
}

/// One unrelaxed balanced ALM iteration. `sys` holds `H₀ = (1/r)AAᵀ + δI`.
pub fn balanced_alm_step(
    prob: &Problem,
    cfg: &BalancedAlmConfig,
    sys: &MultiplierMatrix,
    w: &PrimalDualPoint,
) -> Result<PrimalDualPoint> {
    cfg.validate()?;
    if cfg.alpha != 1.0 {
        return Err(Error::ConfigInvalid(format!(
            "balanced_alm_step is unrelaxed; use generalized_step for alpha = {}",
            cfg.alpha
        )));
    }
    predictor(prob, cfg.r, sys, w)
}

/// Predictor `w̃` and relaxed iterate `w⁺ = w − α(w − w̃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedStep {
    pub predictor: PrimalDualPoint,
    pub next: PrimalDualPoint,
}

/// Relaxed balanced ALM iteration; α = 1 returns the predictor unchanged.
pub fn generalized_step(
    prob: &Problem,
    cfg: &BalancedAlmConfig,
    sys: &MultiplierMatrix,
    w: &PrimalDualPoint,
) -> Result<RelaxedStep> {
    cfg.validate()?;
    let pred = predictor(prob, cfg.r, sys, w)?;
    let next = if cfg.alpha == 1.0 {
        pred.clone()
    } else {
        let relax = |cur: &[f64], p: &[f64]| -> Vec<f64> {
            cur.iter().zip(p).map(|(c, pi)| c - cfg.alpha * (c - pi)).collect()
        };
        PrimalDualPoint::new(relax(&w.x, &pred.x), relax(&w.lambda, &pred.lambda))
    };
    Ok(RelaxedStep { predictor: pred, next })
}

/// Jacobi splitting iteration: every block reads only `wᵏ`. `sys` holds
/// `H_p = Σ(1/rᵢ)AᵢAᵢᵀ + δI`.
pub fn split_balanced_step(
    prob: &SeparableProblem,
    cfg: &SplitConfig,
    sys: &MultiplierMatrix,
    w: &PrimalDualPoint,
) -> Result<PrimalDualPoint> {
    cfg.validate(prob.p())?;
    prob.check_point(w)?;
    let mut x = Vec::with_capacity(prob.n());
    let mut s = vec![0.0; prob.m()];
    for ((blk, xi), &r) in prob.blocks().iter().zip(prob.split(&w.x)).zip(&cfg.r_list) {
        let q = shifted(xi, r, &blk.a.matvec_t(&w.lambda)?);
        let next = prox_constrained(&blk.objective, &blk.set, r, &q)?;
        vecops::axpy(1.0, &blk.a.matvec(&extrapolate(&next, xi))?, &mut s);
        x.extend(next);
    }
    let s = vecops::sub(&s, &prob.b);
    let lambda = solve_multiplier(sys, prob.sense, &w.lambda, &s)?;
    Ok(PrimalDualPoint::new(x, lambda))
}

#[derive(Debug, Clone)]
enum FirstBlock {
    /// `(P₁ + rA₁ᵀA₁ + δI)x = A₁ᵀλ − c₁ + (rA₁ᵀA₁ + δI)xᵏ`
    Quadratic {
        factor: SpdFactor,
        proximal: DenseMatrix,
        c: Vec<f64>,
    },
    /// `A₁ᵀA₁ = κI`: plain prox with parameter `rκ + δ`.
    Isotropic { param: f64 },
}

/// Factored data of the alternative splitting: `H₂` and the x₁-solver.
#[derive(Debug, Clone)]
pub struct AltSplitSystem {
    h2: MultiplierMatrix,
    first: FirstBlock,
}

fn isotropic_gram(g: &DenseMatrix) -> Option<f64> {
    let kappa = g.get(0, 0);
    let tol = 1e-12 * kappa.abs().max(1.0);
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let target = if i == j { kappa } else { 0.0 };
            if (g.get(i, j) - target).abs() > tol {
                return None;
            }
        }
    }
    Some(kappa)
}

impl AltSplitSystem {
    pub fn new(prob: &SeparableProblem, cfg: &AltSplitConfig) -> Result<Self> {
        cfg.validate()?;
        if prob.p() != 2 {
            return Err(Error::ConfigInvalid(format!(
                "alternative splitting needs exactly 2 blocks, got {}",
                prob.p()
            )));
        }
        let [b1, b2] = prob.blocks() else { unreachable!() };
        let h2 = build_h2(&b2.a, cfg.r, cfg.s, cfg.delta)?;
        let n1 = b1.n();
        let gram = b1.a.gram_cols();
        let quad = match (&b1.objective, &b1.set) {
            (ObjectiveSpec::L1 { .. }, _) | (_, SetSpec::NonnegativeOrthant | SetSpec::Box { .. }) => None,
            (obj, SetSpec::WholeSpace) => obj.as_quadratic(n1),
        };
        let first = if let Some((p1, c)) = quad {
            let mut proximal = gram.scaled(cfg.r);
            proximal.add_diagonal(cfg.delta);
            let mut system = p1;
            system.add_assign_scaled(1.0, &proximal)?;
            FirstBlock::Quadratic {
                factor: cholesky_factor(&system)?,
                proximal,
                c,
            }
        } else if let Some(kappa) = isotropic_gram(&gram) {
            FirstBlock::Isotropic {
                param: cfg.r * kappa + cfg.delta,
            }
        } else {
            return Err(Error::UnsupportedCombination(
                "x1-subproblem needs a quadratic-like objective over the whole space or A1ᵀA1 = κI".into(),
            ));
        };
        Ok(Self { h2, first })
    }

    /// The multiplier matrix `H₂`.
    pub fn h2(&self) -> &MultiplierMatrix {
        &self.h2
    }
}

/// Alternative splitting iteration for two blocks; both x-updates read `wᵏ`.
pub fn alt_split_step(
    prob: &SeparableProblem,
    cfg: &AltSplitConfig,
    sys: &AltSplitSystem,
    w: &PrimalDualPoint,
) -> Result<PrimalDualPoint> {
    cfg.validate()?;
    prob.check_point(w)?;
    let [b1, b2] = prob.blocks() else {
        return Err(Error::ConfigInvalid(
            "alternative splitting needs exactly 2 blocks".into(),
        ));
    };
    let parts = prob.split(&w.x);
    let (x1, x2) = (parts[0], parts[1]);

    let a1t_l = b1.a.matvec_t(&w.lambda)?;
    let x1_next = match &sys.first {
        FirstBlock::Quadratic { factor, proximal, c } => {
            let mut rhs = proximal.matvec(x1)?;
            vecops::axpy(1.0, &a1t_l, &mut rhs);
            vecops::axpy(-1.0, c, &mut rhs);
            factor.solve(&rhs)?
        }
        FirstBlock::Isotropic { param } => {
            prox_constrained(&b1.objective, &b1.set, *param, &shifted(x1, *param, &a1t_l))?
        }
    };
    let q2 = shifted(x2, cfg.s, &b2.a.matvec_t(&w.lambda)?);
    let x2_next = prox_constrained(&b2.objective, &b2.set, cfg.s, &q2)?;

    let mut s = b1.a.matvec(&extrapolate(&x1_next, x1))?;
    vecops::axpy(1.0, &b2.a.matvec(&extrapolate(&x2_next, x2))?, &mut s);
    let s = vecops::sub(&s, &prob.b);
    let lambda = solve_multiplier(&sys.h2, prob.sense, &w.lambda, &s)?;

    let mut x = x1_next;
    x.extend(x2_next);
    Ok(PrimalDualPoint::new(x, lambda))
}
