//! Multiplier subproblem: an SPD linear system for equality constraints, a
//! strictly monotone LCP for inequality constraints.
//!
//! All three metric matrices (`H₀`, `H_p`, `H₂`) are constant across
//! iterations, so they are built and factored once per run.

use crate::error::{Error, Result};
use crate::linalg::{cholesky_factor, vecops, DenseMatrix, SpdFactor};
use crate::problem::Sense;

/// Complementarity tolerance of the LCP certificate, scaled by `1 + ‖s‖`.
pub const LCP_TOL: f64 = 1e-9;
/// Sweep cap of projected Gauss–Seidel.
pub const LCP_MAX_SWEEPS: usize = 10_000;

/// An SPD multiplier metric together with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierMatrix {
    h: DenseMatrix,
    factor: SpdFactor,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::ConfigInvalid(format!("{name} must be > 0, got {v}")))
    }
}

impl MultiplierMatrix {
    /// Factors an explicitly given SPD matrix.
    pub fn from_matrix(h: DenseMatrix) -> Result<Self> {
        let factor = cholesky_factor(&h)?;
        Ok(Self { h, factor })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.h
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.h.rows()
    }

    fn check(&self, lambda_k: &[f64], s_k: &[f64]) -> Result<()> {
        if lambda_k.len() != self.dim() {
            return Err(Error::dims("multiplier", self.dim(), lambda_k.len()));
        }
        if s_k.len() != self.dim() {
            return Err(Error::dims("multiplier rhs", self.dim(), s_k.len()));
        }
        Ok(())
    }

    /// λ with `H(λ − λᵏ) = −sᵏ`.
    pub fn solve_equality(&self, lambda_k: &[f64], s_k: &[f64]) -> Result<Vec<f64>> {
        self.check(lambda_k, s_k)?;
        let delta = self.factor.solve(s_k)?;
        Ok(vecops::sub(lambda_k, &delta))
    }

    /// λ ≥ 0 with `y = H(λ − λᵏ) + sᵏ ≥ 0` and `λᵀy = 0`, by projected
    /// Gauss–Seidel started at λᵏ, followed by an exact solve on the
    /// detected support.
    pub fn solve_lcp(&self, lambda_k: &[f64], s_k: &[f64]) -> Result<Vec<f64>> {
        self.check(lambda_k, s_k)?;
        let m = self.dim();
        // y = Hλ + q with q = s − Hλᵏ
        let h_lk = self.h.matvec(lambda_k)?;
        let q = vecops::sub(s_k, &h_lk);
        let scale = 1.0 + vecops::norm(s_k);
        let diag = self.h.diag();

        let mut lambda: Vec<f64> = lambda_k.iter().map(|l| l.max(0.0)).collect();
        for _ in 0..LCP_MAX_SWEEPS {
            for i in 0..m {
                let yi = vecops::dot(self.h.row(i), &lambda) + q[i];
                lambda[i] = (lambda[i] - yi / diag[i]).max(0.0);
            }
            if lcp_certificate(&self.h, &q, &lambda, scale) {
                if let Some(polished) = self.polish(&q, &lambda, scale) {
                    return Ok(polished);
                }
                return Ok(lambda);
            }
        }
        Err(Error::NoConvergence {
            what: "projected Gauss-Seidel",
            iterations: LCP_MAX_SWEEPS,
        })
    }

    /// Re-solves `H_FF λ_F = −q_F` on the support F of `lambda`; kept only if
    /// the result still certifies.
    fn polish(&self, q: &[f64], lambda: &[f64], scale: f64) -> Option<Vec<f64>> {
        let support: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > 0.0).collect();
        if support.is_empty() {
            return None;
        }
        let k = support.len();
        let mut sub = DenseMatrix::zeros(k, k);
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                sub.set(a, b, self.h.get(i, j));
            }
        }
        let rhs: Vec<f64> = support.iter().map(|&i| -q[i]).collect();
        let sol = cholesky_factor(&sub).ok()?.solve(&rhs).ok()?;
        if sol.iter().any(|v| *v < 0.0) {
            return None;
        }
        let mut out = vec![0.0; lambda.len()];
        for (&i, v) in support.iter().zip(sol) {
            out[i] = v;
        }
        lcp_certificate(&self.h, q, &out, scale).then_some(out)
    }
}

fn lcp_certificate(h: &DenseMatrix, q: &[f64], lambda: &[f64], scale: f64) -> bool {
    let y = vecops::add(&h.matvec(lambda).expect("dims"), q);
    let tol = LCP_TOL * scale;
    let feasible = y.iter().all(|v| *v >= -LCP_TOL);
    let comp = vecops::dot(lambda, &y).abs() <= tol;
    let natural = lambda.iter().zip(&y).all(|(l, v)| l.min(*v).abs() <= tol);
    feasible && comp && natural
}

/// Solves the multiplier subproblem for the given constraint sense.
pub fn solve_multiplier(sys: &MultiplierMatrix, sense: Sense, lambda_k: &[f64], s_k: &[f64]) -> Result<Vec<f64>> {
    match sense {
        Sense::Equality => sys.solve_equality(lambda_k, s_k),
        Sense::Inequality => sys.solve_lcp(lambda_k, s_k),
    }
}

/// `H₀ = (1/r)AAᵀ + δI_m`
pub fn build_h0(a: &DenseMatrix, r: f64, delta: f64) -> Result<MultiplierMatrix> {
    build_hp(&[(a, r)], delta)
}

/// `H_p = Σᵢ (1/rᵢ)AᵢAᵢᵀ + δI_m`
pub fn build_hp(blocks: &[(&DenseMatrix, f64)], delta: f64) -> Result<MultiplierMatrix> {
    positive("delta", delta)?;
    let m = blocks
        .first()
        .map(|(a, _)| a.rows())
        .ok_or_else(|| Error::InvalidDims("no blocks".into()))?;
    let mut h = DenseMatrix::zeros(m, m);
    for (a, r) in blocks {
        positive("r", *r)?;
        if a.rows() != m {
            return Err(Error::dims("block rows", m, a.rows()));
        }
        h.add_assign_scaled(1.0 / r, &a.gram_rows())?;
    }
    h.add_diagonal(delta);
    MultiplierMatrix::from_matrix(h)
}

/// `H₂ = (1/s)A₂A₂ᵀ + (1/r + δ)I_m`
pub fn build_h2(a2: &DenseMatrix, r: f64, s: f64, delta: f64) -> Result<MultiplierMatrix> {
    positive("r", r)?;
    positive("s", s)?;
    positive("delta", delta)?;
    let m = a2.rows();
    let mut h = DenseMatrix::zeros(m, m);
    h.add_assign_scaled(1.0 / s, &a2.gram_rows())?;
    h.add_diagonal(1.0 / r + delta);
    MultiplierMatrix::from_matrix(h)
}
