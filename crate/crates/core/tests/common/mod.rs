//! Instance builders and independent oracles shared by the integration tests.
//! The oracles deliberately avoid the library's own linear algebra.

#![allow(dead_code)]

use balm::bench::{generate_instance, Dims, InstanceKind};
use balm::linalg::DenseMatrix;
use balm::problem::Block;
use balm::{Instance, ObjectiveSpec, PrimalDualPoint, Problem, Sense, SeparableProblem, SetSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, half_width: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-half_width..half_width)).collect()
}

/// `min ½x² s.t. x = 1`, saddle point (1, 1).
pub fn scalar_problem() -> Problem {
    Problem::new(
        ObjectiveSpec::quadratic(DenseMatrix::identity(1), vec![0.0]).unwrap(),
        SetSpec::WholeSpace,
        DenseMatrix::identity(1),
        vec![1.0],
        Sense::Equality,
    )
    .unwrap()
}

/// `min ½x₁² + ½x₂² s.t. x₁ + x₂ = 1`.
pub fn two_block_fixture() -> SeparableProblem {
    let blk = Block {
        objective: ObjectiveSpec::quadratic(DenseMatrix::identity(1), vec![0.0]).unwrap(),
        set: SetSpec::WholeSpace,
        a: DenseMatrix::identity(1),
    };
    SeparableProblem::new(vec![blk.clone(), blk], vec![1.0], Sense::Equality).unwrap()
}

/// Strongly convex equality QP with its exact saddle point.
pub fn equality_qp(seed: u64, m: usize, blocks: Option<Vec<usize>>) -> (Instance, PrimalDualPoint) {
    let n = blocks.as_ref().map_or(m + 3, |b| b.iter().sum());
    let dims = Dims {
        blocks,
        ..Dims::new(m, n)
    };
    let (inst, star) = generate_instance(InstanceKind::RandomQpEq, &dims, seed).unwrap();
    (inst, star.unwrap())
}

/// Inequality QP over the nonnegative orthant.
pub fn inequality_qp(seed: u64, m: usize, n: usize) -> Instance {
    generate_instance(InstanceKind::NonnegQpIneq, &Dims::new(m, n), seed)
        .unwrap()
        .0
}

/// Two-block inequality QP: block 1 is a diagonal quadratic over the whole
/// space, block 2 a diagonal quadratic over the nonnegative orthant.
pub fn inequality_two_block(seed: u64, m: usize, n1: usize, n2: usize) -> SeparableProblem {
    let mut rng = rng(seed);
    let mut block = |n: usize, set: SetSpec| {
        let diag: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        Block {
            objective: ObjectiveSpec::quadratic(DenseMatrix::diagonal(&diag), uniform_vec(&mut rng, n, 1.0)).unwrap(),
            set,
            a: uniform_matrix(&mut rng, m, n),
        }
    };
    let b1 = block(n1, SetSpec::WholeSpace);
    let b2 = block(n2, SetSpec::NonnegativeOrthant);
    let b = uniform_vec(&mut rng, m, 1.0);
    SeparableProblem::new(vec![b1, b2], b, Sense::Inequality).unwrap()
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(*bi);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    Some(x)
}

/// LCP `λ ≥ 0, y = Mλ + q ≥ 0, λᵀy = 0` by trying every support set.
pub fn lcp_enumerate(mat: &[Vec<f64>], q: &[f64]) -> Option<Vec<f64>> {
    let m = q.len();
    let tol = 1e-10 * (1.0 + q.iter().map(|v| v.abs()).fold(0.0, f64::max));
    for mask in 0u32..(1 << m) {
        let support: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let sub: Vec<Vec<f64>> = support
            .iter()
            .map(|&i| support.iter().map(|&j| mat[i][j]).collect())
            .collect();
        let rhs: Vec<f64> = support.iter().map(|&i| -q[i]).collect();
        let Some(sol) = dense_solve(&sub, &rhs) else { continue };
        if sol.iter().any(|v| *v < -tol) {
            continue;
        }
        let mut lambda = vec![0.0; m];
        for (&i, v) in support.iter().zip(sol) {
            lambda[i] = v.max(0.0);
        }
        let feasible = (0..m).all(|i| {
            let y: f64 = (0..m).map(|j| mat[i][j] * lambda[j]).sum::<f64>() + q[i];
            y >= -tol
        });
        if feasible {
            return Some(lambda);
        }
    }
    None
}

/// Minimizer of a convex `f` on `[lo, hi]`: grid scan with step `1e-4`, then
/// interval bisection on the sign of the local slope down to width `1e-9`.
pub fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const STEP: f64 = 1e-4;
    let count = ((hi - lo) / STEP).ceil() as usize;
    let mut best = (f(lo), 0usize);
    for i in 1..=count {
        let y = (lo + i as f64 * STEP).min(hi);
        let v = f(y);
        if v < best.0 {
            best = (v, i);
        }
    }
    let centre = (lo + best.1 as f64 * STEP).min(hi);
    let (mut a, mut b) = ((centre - STEP).max(lo), (centre + STEP).min(hi));
    while b - a > 1e-9 {
        let mid = 0.5 * (a + b);
        let h = 0.25 * (b - a).min(1e-7);
        if f(mid + h) < f(mid - h) {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}
