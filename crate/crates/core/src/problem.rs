//! Problem containers, the variational-inequality operator of the saddle-point
//! conditions, and KKT residuals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{vecops, DenseMatrix};
use crate::prox::{self, ObjectiveSpec, ScalarObjective, SetSpec};

/// Constraint sense `Ax = b` or `Ax ≥ b`. Fixes the multiplier set Λ
/// (whole space or nonnegative orthant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "eq")]
    Equality,
    #[serde(rename = "geq")]
    Inequality,
}

impl Sense {
    pub fn multiplier_set(self) -> SetSpec {
        match self {
            Sense::Equality => SetSpec::WholeSpace,
            Sense::Inequality => SetSpec::NonnegativeOrthant,
        }
    }

    pub fn project_multiplier(self, lambda: &mut [f64]) {
        if self == Sense::Inequality {
            lambda.iter_mut().for_each(|l| *l = l.max(0.0));
        }
    }
}

/// `min θ(x) s.t. Ax = b (or ≥ b), x ∈ X`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub objective: ObjectiveSpec,
    pub set: SetSpec,
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub sense: Sense,
}

impl Problem {
    pub fn new(objective: ObjectiveSpec, set: SetSpec, a: DenseMatrix, b: Vec<f64>, sense: Sense) -> Result<Self> {
        check_block(&objective, &set, &a, b.len())?;
        if !vecops::all_finite(&b) {
            return Err(Error::InvalidData("b must be finite".into()));
        }
        Ok(Self {
            objective,
            set,
            a,
            b,
            sense,
        })
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }
}

fn check_block(objective: &ObjectiveSpec, set: &SetSpec, a: &DenseMatrix, m: usize) -> Result<()> {
    if a.rows() != m {
        return Err(Error::dims("constraint rows", m, a.rows()));
    }
    objective.validate(Some(a.cols()))?;
    set.validate(Some(a.cols()))?;
    if !prox::supports_constrained(objective, set) {
        return Err(Error::UnsupportedCombination(
            "x-subproblem has no closed form for this objective over this set".into(),
        ));
    }
    Ok(())
}

/// One block `(θᵢ, Xᵢ, Aᵢ)` of a separable problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub objective: ObjectiveSpec,
    pub set: SetSpec,
    pub a: DenseMatrix,
}

impl Block {
    pub fn n(&self) -> usize {
        self.a.cols()
    }
}

/// `min Σᵢ θᵢ(xᵢ) s.t. Σᵢ Aᵢxᵢ = b (or ≥ b), xᵢ ∈ Xᵢ` with p ≥ 2 blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableProblem {
    blocks: Vec<Block>,
    pub b: Vec<f64>,
    pub sense: Sense,
}

impl SeparableProblem {
    pub fn new(blocks: Vec<Block>, b: Vec<f64>, sense: Sense) -> Result<Self> {
        if blocks.len() < 2 {
            return Err(Error::InvalidDims(format!(
                "a separable problem needs at least 2 blocks, got {}",
                blocks.len()
            )));
        }
        Self::with_any_block_count(blocks, b, sense)
    }

    /// Same checks as [`SeparableProblem::new`] minus the block-count floor;
    /// used to compare the single-block degenerate case.
    pub(crate) fn with_any_block_count(blocks: Vec<Block>, b: Vec<f64>, sense: Sense) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidDims("no blocks".into()));
        }
        for blk in &blocks {
            check_block(&blk.objective, &blk.set, &blk.a, b.len())?;
        }
        if !vecops::all_finite(&b) {
            return Err(Error::InvalidData("b must be finite".into()));
        }
        Ok(Self { blocks, b, sense })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn p(&self) -> usize {
        self.blocks.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn n(&self) -> usize {
        self.blocks.iter().map(Block::n).sum()
    }

    /// Start offset of each block inside the stacked x.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.blocks
            .iter()
            .map(|b| {
                let o = acc;
                acc += b.n();
                o
            })
            .collect()
    }

    /// Views the stacked `x` as per-block slices.
    pub fn split<'a>(&self, x: &'a [f64]) -> Vec<&'a [f64]> {
        let mut out = Vec::with_capacity(self.blocks.len());
        let mut rest = x;
        for blk in &self.blocks {
            let (head, tail) = rest.split_at(blk.n());
            out.push(head);
            rest = tail;
        }
        out
    }

    /// Merges the blocks into one [`Problem`] over the stacked variable with
    /// `A = [A₁ … A_p]`.
    ///
    /// Requires block objectives that combine into one registered kind:
    /// all quadratic-like (zero/linear/quadratic/separable quadratic) merge
    /// into a block-diagonal quadratic; otherwise all separable terms merge
    /// into a separable sum.
    pub fn flatten(&self) -> Result<Problem> {
        let a = DenseMatrix::hstack(&self.blocks.iter().map(|b| &b.a).collect::<Vec<_>>())?;

        let quads: Option<Vec<(DenseMatrix, Vec<f64>)>> =
            self.blocks.iter().map(|b| b.objective.as_quadratic(b.n())).collect();
        let all_zero = self.blocks.iter().all(|b| b.objective == ObjectiveSpec::Zero);
        let objective = if all_zero {
            ObjectiveSpec::Zero
        } else if let Some(quads) = quads.filter(|_| self.blocks.iter().all(|b| b.set.is_whole_space())) {
            let p = DenseMatrix::block_diag(&quads.iter().map(|(p, _)| p).collect::<Vec<_>>());
            let c = quads.into_iter().flat_map(|(_, c)| c).collect();
            ObjectiveSpec::quadratic(p, c)?
        } else {
            let mut terms: Vec<ScalarObjective> = Vec::with_capacity(self.n());
            for blk in &self.blocks {
                let t = blk.objective.scalar_terms(blk.n()).ok_or_else(|| {
                    Error::UnsupportedCombination("block objectives do not merge into one closed-form prox".into())
                })?;
                terms.extend(t);
            }
            ObjectiveSpec::SeparableSum { terms }
        };

        let set = if self.blocks.iter().all(|b| b.set.is_whole_space()) {
            SetSpec::WholeSpace
        } else {
            let (mut lower, mut upper) = (Vec::new(), Vec::new());
            for blk in &self.blocks {
                for i in 0..blk.n() {
                    let (l, u) = blk.set.bounds(i);
                    lower.push(l);
                    upper.push(u);
                }
            }
            SetSpec::Box { lower, upper }
        };
        Problem::new(objective, set, a, self.b.clone(), self.sense)
    }
}

/// Either problem form; the unit handed to drivers and file I/O.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Single(Problem),
    Separable(SeparableProblem),
}

impl From<Problem> for Instance {
    fn from(p: Problem) -> Self {
        Instance::Single(p)
    }
}

impl From<SeparableProblem> for Instance {
    fn from(p: SeparableProblem) -> Self {
        Instance::Separable(p)
    }
}

/// Iterate `w = (x, λ)`; for separable problems `x` stacks the blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalDualPoint {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl PrimalDualPoint {
    pub fn new(x: Vec<f64>, lambda: Vec<f64>) -> Self {
        Self { x, lambda }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self::new(vec![0.0; n], vec![0.0; m])
    }

    /// Stacked vector `(x, λ)`.
    pub fn stacked(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.x.len() + self.lambda.len());
        v.extend_from_slice(&self.x);
        v.extend_from_slice(&self.lambda);
        v
    }

    pub fn from_stacked(v: &[f64], n: usize) -> Self {
        Self::new(v[..n].to_vec(), v[n..].to_vec())
    }

    pub fn dim(&self) -> usize {
        self.x.len() + self.lambda.len()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(vecops::sub(&self.x, &other.x), vecops::sub(&self.lambda, &other.lambda))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(vecops::add(&self.x, &other.x), vecops::add(&self.lambda, &other.lambda))
    }

    pub fn norm(&self) -> f64 {
        vecops::norm(&self.stacked())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        vecops::norm_inf(&self.sub(other).stacked())
    }
}

/// KKT residual components; all zero exactly at a saddle point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.complementarity)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.primal <= tol && self.dual <= tol && self.complementarity <= tol
    }
}

/// Operations shared by both problem forms: everything the saddle-point
/// conditions need.
pub trait Model {
    fn n(&self) -> usize;
    fn m(&self) -> usize;
    fn sense(&self) -> Sense;
    fn b(&self) -> &[f64];
    /// θ(x)
    fn objective_value(&self, x: &[f64]) -> f64;
    /// `A·x` (for separable problems `Σᵢ Aᵢxᵢ`).
    fn apply_a(&self, x: &[f64]) -> Vec<f64>;
    /// `Aᵀλ`, stacked per block.
    fn apply_at(&self, lambda: &[f64]) -> Vec<f64>;
    /// Blockwise `prox_constrained(θ, X, r, q)`.
    fn prox_step(&self, r: f64, q: &[f64]) -> Result<Vec<f64>>;
    fn project_primal(&self, x: &[f64]) -> Vec<f64>;
    fn primal_contains(&self, x: &[f64], tol: f64) -> bool;

    fn check_point(&self, w: &PrimalDualPoint) -> Result<()> {
        if w.x.len() != self.n() {
            return Err(Error::dims("primal point", self.n(), w.x.len()));
        }
        if w.lambda.len() != self.m() {
            return Err(Error::dims("multiplier", self.m(), w.lambda.len()));
        }
        Ok(())
    }

    /// `Ax − b`
    fn constraint_residual(&self, x: &[f64]) -> Vec<f64> {
        vecops::sub(&self.apply_a(x), self.b())
    }

    /// Default starting point: zeros projected onto `X × Λ`.
    fn default_start(&self) -> PrimalDualPoint {
        PrimalDualPoint::new(self.project_primal(&vec![0.0; self.n()]), vec![0.0; self.m()])
    }

    fn contains(&self, w: &PrimalDualPoint, tol: f64) -> bool {
        self.primal_contains(&w.x, tol) && (self.sense() == Sense::Equality || w.lambda.iter().all(|l| *l >= -tol))
    }
}

impl Model for Problem {
    fn n(&self) -> usize {
        Problem::n(self)
    }
    fn m(&self) -> usize {
        Problem::m(self)
    }
    fn sense(&self) -> Sense {
        self.sense
    }
    fn b(&self) -> &[f64] {
        &self.b
    }
    fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }
    fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        self.a.matvec(x).expect("checked dims")
    }
    fn apply_at(&self, lambda: &[f64]) -> Vec<f64> {
        self.a.matvec_t(lambda).expect("checked dims")
    }
    fn prox_step(&self, r: f64, q: &[f64]) -> Result<Vec<f64>> {
        prox::prox_constrained(&self.objective, &self.set, r, q)
    }
    fn project_primal(&self, x: &[f64]) -> Vec<f64> {
        prox::project(&self.set, x)
    }
    fn primal_contains(&self, x: &[f64], tol: f64) -> bool {
        self.set.contains(x, tol)
    }
}

impl Model for SeparableProblem {
    fn n(&self) -> usize {
        SeparableProblem::n(self)
    }
    fn m(&self) -> usize {
        SeparableProblem::m(self)
    }
    fn sense(&self) -> Sense {
        self.sense
    }
    fn b(&self) -> &[f64] {
        &self.b
    }
    fn objective_value(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .zip(self.split(x))
            .map(|(blk, xi)| blk.objective.value(xi))
            .sum()
    }
    fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        for (blk, xi) in self.blocks.iter().zip(self.split(x)) {
            let v = blk.a.matvec(xi).expect("checked dims");
            vecops::axpy(1.0, &v, &mut out);
        }
        out
    }
    fn apply_at(&self, lambda: &[f64]) -> Vec<f64> {
        self.blocks
            .iter()
            .flat_map(|blk| blk.a.matvec_t(lambda).expect("checked dims"))
            .collect()
    }
    fn prox_step(&self, r: f64, q: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(q.len());
        for (blk, qi) in self.blocks.iter().zip(self.split(q)) {
            out.extend(prox::prox_constrained(&blk.objective, &blk.set, r, qi)?);
        }
        Ok(out)
    }
    fn project_primal(&self, x: &[f64]) -> Vec<f64> {
        self.blocks
            .iter()
            .zip(self.split(x))
            .flat_map(|(blk, xi)| prox::project(&blk.set, xi))
            .collect()
    }
    fn primal_contains(&self, x: &[f64], tol: f64) -> bool {
        self.blocks
            .iter()
            .zip(self.split(x))
            .all(|(blk, xi)| blk.set.contains(xi, tol))
    }
}

macro_rules! delegate {
    ($self:ident, $p:ident => $e:expr) => {
        match $self {
            Instance::Single($p) => $e,
            Instance::Separable($p) => $e,
        }
    };
}

impl Model for Instance {
    fn n(&self) -> usize {
        delegate!(self, p => Model::n(p))
    }
    fn m(&self) -> usize {
        delegate!(self, p => Model::m(p))
    }
    fn sense(&self) -> Sense {
        delegate!(self, p => p.sense)
    }
    fn b(&self) -> &[f64] {
        delegate!(self, p => &p.b)
    }
    fn objective_value(&self, x: &[f64]) -> f64 {
        delegate!(self, p => p.objective_value(x))
    }
    fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        delegate!(self, p => p.apply_a(x))
    }
    fn apply_at(&self, lambda: &[f64]) -> Vec<f64> {
        delegate!(self, p => p.apply_at(lambda))
    }
    fn prox_step(&self, r: f64, q: &[f64]) -> Result<Vec<f64>> {
        delegate!(self, p => p.prox_step(r, q))
    }
    fn project_primal(&self, x: &[f64]) -> Vec<f64> {
        delegate!(self, p => p.project_primal(x))
    }
    fn primal_contains(&self, x: &[f64], tol: f64) -> bool {
        delegate!(self, p => p.primal_contains(x, tol))
    }
}

/// `F(w) = (−Aᵀλ, Ax − b)`, stacked.
pub fn vi_operator<M: Model + ?Sized>(prob: &M, w: &PrimalDualPoint) -> Result<Vec<f64>> {
    prob.check_point(w)?;
    let mut f: Vec<f64> = prob.apply_at(&w.lambda).into_iter().map(|v| -v).collect();
    f.extend(prob.constraint_residual(&w.x));
    Ok(f)
}

/// `L(x, λ) = θ(x) − λᵀ(Ax − b)`
pub fn lagrangian<M: Model + ?Sized>(prob: &M, w: &PrimalDualPoint) -> Result<f64> {
    prob.check_point(w)?;
    Ok(prob.objective_value(&w.x) - vecops::dot(&w.lambda, &prob.constraint_residual(&w.x)))
}

/// Primal infeasibility, natural-map stationarity residual
/// `‖x − P(x + Aᵀλ)‖` (unit prox parameter), and complementarity `|λᵀ(Ax − b)|`.
pub fn kkt_residual<M: Model + ?Sized>(prob: &M, w: &PrimalDualPoint) -> Result<KktResidual> {
    prob.check_point(w)?;
    let res = prob.constraint_residual(&w.x);
    let (primal, complementarity) = match prob.sense() {
        Sense::Equality => (vecops::norm(&res), 0.0),
        Sense::Inequality => {
            let neg: Vec<f64> = res.iter().map(|v| v.min(0.0)).collect();
            (vecops::norm(&neg), vecops::dot(&w.lambda, &res).abs())
        }
    };
    let q = vecops::add(&w.x, &prob.apply_at(&w.lambda));
    let mapped = prob.prox_step(1.0, &q)?;
    let dual = vecops::norm(&vecops::sub(&w.x, &mapped));
    Ok(KktResidual {
        primal,
        dual,
        complementarity,
    })
}
