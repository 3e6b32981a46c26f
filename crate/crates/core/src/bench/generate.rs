use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_factor, DenseMatrix};
use crate::problem::{Block, Instance, PrimalDualPoint, Problem, Sense, SeparableProblem};
use crate::prox::{ObjectiveSpec, SetSpec};

/// Built-in instance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum InstanceKind {
    /// `min ‖x‖₁ s.t. Ax = A·x_true` with a sparse planted `x_true`.
    BasisPursuit,
    /// `min ½‖y‖² + μ‖z‖₁ s.t. Dz − y = obs`, as two blocks.
    LassoEq,
    /// `min ½xᵀPx + cᵀx s.t. Ax ≥ b, x ≥ 0` with diagonal `P ≻ 0`.
    NonnegQpIneq,
    /// Strongly convex equality QP with its exact saddle point.
    RandomQpEq,
}

/// Size parameters. `blocks` splits `n` for separable kinds; `sparsity` is
/// the planted support size.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
    pub blocks: Option<Vec<usize>>,
    pub sparsity: Option<usize>,
}

impl Dims {
    pub fn new(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            ..Self::default()
        }
    }
}

/// Weight of the l1 term in `lasso_eq`.
pub const LASSO_WEIGHT: f64 = 0.1;

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    DenseMatrix::new(rows, cols, data).expect("finite gaussian entries")
}

fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn sparse_vec(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    let support = rand::seq::index::sample(rng, n, k.min(n));
    for i in support {
        x[i] = rng.sample(StandardNormal);
    }
    x
}

/// A fresh instance of `kind`, with its saddle point when known in closed form.
pub fn generate_instance(kind: InstanceKind, dims: &Dims, seed: u64) -> Result<(Instance, Option<PrimalDualPoint>)> {
    if dims.m == 0 || dims.n == 0 {
        return Err(Error::InvalidDims(format!(
            "m and n must be positive, got {}x{}",
            dims.m, dims.n
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        InstanceKind::BasisPursuit => basis_pursuit(&mut rng, dims).map(|p| (p.into(), None)),
        InstanceKind::LassoEq => lasso_eq(&mut rng, dims).map(|p| (p.into(), None)),
        InstanceKind::NonnegQpIneq => nonneg_qp_ineq(&mut rng, dims).map(|p| (p.into(), None)),
        InstanceKind::RandomQpEq => random_qp_eq(&mut rng, dims),
    }
}

fn basis_pursuit(rng: &mut ChaCha8Rng, dims: &Dims) -> Result<Problem> {
    let (m, n) = (dims.m, dims.n);
    if m > n {
        return Err(Error::InvalidDims(format!("basis pursuit needs m <= n, got {m}x{n}")));
    }
    let a = gaussian(rng, m, n, 1.0 / (m as f64).sqrt());
    let k = dims.sparsity.unwrap_or((n / 10).max(1));
    let x_true = sparse_vec(rng, n, k);
    let b = a.matvec(&x_true)?;
    Problem::new(ObjectiveSpec::l1(1.0), SetSpec::WholeSpace, a, b, Sense::Equality)
}

fn lasso_eq(rng: &mut ChaCha8Rng, dims: &Dims) -> Result<SeparableProblem> {
    let (m, n) = (dims.m, dims.n);
    let d = gaussian(rng, m, n, 1.0 / (m as f64).sqrt());
    let z_true = sparse_vec(rng, n, dims.sparsity.unwrap_or((n / 10).max(1)));
    let mut obs = d.matvec(&z_true)?;
    for o in &mut obs {
        *o += 0.01 * rng.sample::<f64, _>(StandardNormal);
    }
    let residual = Block {
        objective: ObjectiveSpec::quadratic(DenseMatrix::identity(m), vec![0.0; m])?,
        set: SetSpec::WholeSpace,
        a: DenseMatrix::identity(m).scaled(-1.0),
    };
    let coefficients = Block {
        objective: ObjectiveSpec::l1(LASSO_WEIGHT),
        set: SetSpec::WholeSpace,
        a: d,
    };
    SeparableProblem::new(vec![residual, coefficients], obs, Sense::Equality)
}

fn nonneg_qp_ineq(rng: &mut ChaCha8Rng, dims: &Dims) -> Result<Problem> {
    let (m, n) = (dims.m, dims.n);
    let diag: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..3.0)).collect();
    let c = gaussian_vec(rng, n);
    let a = gaussian(rng, m, n, 1.0 / (n as f64).sqrt());
    let x_feas: Vec<f64> = gaussian_vec(rng, n).into_iter().map(f64::abs).collect();
    let b = a
        .matvec(&x_feas)?
        .into_iter()
        .map(|v| v - rng.random_range(0.0..1.0))
        .collect();
    Problem::new(
        ObjectiveSpec::quadratic(DenseMatrix::diagonal(&diag), c)?,
        SetSpec::NonnegativeOrthant,
        a,
        b,
        Sense::Inequality,
    )
}

fn spd(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let g = gaussian(rng, n, n, 1.0 / (n as f64).sqrt());
    let mut p = g.gram_cols();
    p.add_diagonal(1.0);
    p
}

/// `P x − Aᵀλ = −c`, `A x = b` solved through the Schur complement `AP⁻¹Aᵀ`.
fn qp_saddle_point(p: &DenseMatrix, c: &[f64], a: &DenseMatrix, b: &[f64]) -> Result<PrimalDualPoint> {
    let pf = cholesky_factor(p)?;
    let n = p.rows();
    let mut pinv_at = DenseMatrix::zeros(n, a.rows());
    for j in 0..a.rows() {
        let col = pf.solve(a.row(j))?;
        for (i, v) in col.into_iter().enumerate() {
            pinv_at.set(i, j, v);
        }
    }
    let schur = a.matmul(&pinv_at)?;
    let pinv_c = pf.solve(c)?;
    let rhs: Vec<f64> = b.iter().zip(a.matvec(&pinv_c)?).map(|(bi, v)| bi + v).collect();
    let lambda = cholesky_factor(&schur)?.solve(&rhs)?;
    let at_l = a.matvec_t(&lambda)?;
    let x = pf.solve(&at_l.iter().zip(c).map(|(v, ci)| v - ci).collect::<Vec<_>>())?;
    Ok(PrimalDualPoint::new(x, lambda))
}

fn random_qp_eq(rng: &mut ChaCha8Rng, dims: &Dims) -> Result<(Instance, Option<PrimalDualPoint>)> {
    let (m, n) = (dims.m, dims.n);
    if m > n {
        return Err(Error::InvalidDims(format!("random_qp_eq needs m <= n, got {m}x{n}")));
    }
    if m == 1 && n == 1 && dims.blocks.is_none() {
        let p = Problem::new(
            ObjectiveSpec::quadratic(DenseMatrix::identity(1), vec![0.0])?,
            SetSpec::WholeSpace,
            DenseMatrix::identity(1),
            vec![1.0],
            Sense::Equality,
        )?;
        return Ok((p.into(), Some(PrimalDualPoint::new(vec![1.0], vec![1.0]))));
    }
    let sizes = dims.blocks.clone().unwrap_or_else(|| vec![n]);
    if sizes.iter().sum::<usize>() != n || sizes.contains(&0) {
        return Err(Error::InvalidDims(format!(
            "block sizes {sizes:?} do not partition n = {n}"
        )));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let parts: Vec<(DenseMatrix, Vec<f64>, DenseMatrix)> = sizes
        .iter()
        .map(|&ni| (spd(rng, ni), gaussian_vec(rng, ni), gaussian(rng, m, ni, scale)))
        .collect();
    let b = gaussian_vec(rng, m);

    let p_full = DenseMatrix::block_diag(&parts.iter().map(|(p, _, _)| p).collect::<Vec<_>>());
    let c_full: Vec<f64> = parts.iter().flat_map(|(_, c, _)| c.clone()).collect();
    let a_full = DenseMatrix::hstack(&parts.iter().map(|(_, _, a)| a).collect::<Vec<_>>())?;
    let star = qp_saddle_point(&p_full, &c_full, &a_full, &b)?;

    let instance: Instance = if sizes.len() == 1 {
        Problem::new(
            ObjectiveSpec::quadratic(p_full, c_full)?,
            SetSpec::WholeSpace,
            a_full,
            b,
            Sense::Equality,
        )?
        .into()
    } else {
        let blocks = parts
            .into_iter()
            .map(|(p, c, a)| {
                Ok(Block {
                    objective: ObjectiveSpec::quadratic(p, c)?,
                    set: SetSpec::WholeSpace,
                    a,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SeparableProblem::new(blocks, b, Sense::Equality)?.into()
    };
    Ok((instance, Some(star)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{kkt_residual, Model};

    #[test]
    fn scalar_fixture() {
        let (inst, star) = generate_instance(InstanceKind::RandomQpEq, &Dims::new(1, 1), 42).unwrap();
        assert_eq!(star, Some(PrimalDualPoint::new(vec![1.0], vec![1.0])));
        assert_eq!(inst.objective_value(&[1.0]), 0.5);
    }

    #[test]
    fn qp_reference_is_a_saddle_point() {
        for blocks in [None, Some(vec![3, 5])] {
            let dims = Dims {
                blocks,
                ..Dims::new(4, 8)
            };
            let (inst, star) = generate_instance(InstanceKind::RandomQpEq, &dims, 9).unwrap();
            let r = kkt_residual(&inst, &star.unwrap()).unwrap();
            assert!(r.max() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn zero_planted_signal() {
        let dims = Dims {
            sparsity: Some(0),
            ..Dims::new(3, 6)
        };
        let (inst, _) = generate_instance(InstanceKind::BasisPursuit, &dims, 1).unwrap();
        assert!(inst.b().iter().all(|v| *v == 0.0));
        let r = kkt_residual(&inst, &PrimalDualPoint::zeros(6, 3)).unwrap();
        assert_eq!(r.primal, 0.0);
    }

    #[test]
    fn shapes_and_determinism() {
        assert!(generate_instance(InstanceKind::BasisPursuit, &Dims::new(5, 3), 0).is_err());
        assert!(generate_instance(InstanceKind::RandomQpEq, &Dims::new(0, 3), 0).is_err());
        for kind in [
            InstanceKind::LassoEq,
            InstanceKind::NonnegQpIneq,
            InstanceKind::BasisPursuit,
        ] {
            let a = generate_instance(kind, &Dims::new(4, 10), 5).unwrap();
            let b = generate_instance(kind, &Dims::new(4, 10), 5).unwrap();
            assert_eq!(a, b);
        }
        let (lasso, _) = generate_instance(InstanceKind::LassoEq, &Dims::new(4, 10), 5).unwrap();
        assert_eq!((lasso.n(), lasso.m()), (14, 4));
    }

    #[test]
    fn nonneg_qp_is_feasible() {
        let (inst, _) = generate_instance(InstanceKind::NonnegQpIneq, &Dims::new(6, 9), 3).unwrap();
        assert_eq!(inst.sense(), Sense::Inequality);
    }
}
