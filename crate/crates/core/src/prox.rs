//! Closed-form proximity operators and set projections.
//!
//! `prox(θ, r, q)` returns `argmin_y θ(y) + (r/2)‖y − q‖²`. The constrained
//! variant adds `y ∈ X`; it is only available when the minimization
//! decomposes per coordinate (separable θ over a box) or when `X` is the
//! whole space.

use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_factor, vecops, DenseMatrix, SpdFactor};

/// Shift added to `P` when checking positive semidefiniteness.
const PSD_SHIFT: f64 = 1e-10;

/// A one-dimensional convex term, used coordinatewise by
/// [`ObjectiveSpec::SeparableSum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarObjective {
    Zero,
    L1 {
        weight: f64,
    },
    /// `½·p·y² + c·y`
    Quadratic {
        p: f64,
        c: f64,
    },
    Linear {
        c: f64,
    },
}

impl ScalarObjective {
    pub fn value(&self, y: f64) -> f64 {
        match *self {
            ScalarObjective::Zero => 0.0,
            ScalarObjective::L1 { weight } => weight * y.abs(),
            ScalarObjective::Quadratic { p, c } => 0.5 * p * y * y + c * y,
            ScalarObjective::Linear { c } => c * y,
        }
    }

    pub fn prox(&self, r: f64, q: f64) -> f64 {
        match *self {
            ScalarObjective::Zero => q,
            ScalarObjective::L1 { weight } => soft_threshold(q, weight / r),
            ScalarObjective::Quadratic { p, c } => (r * q - c) / (p + r),
            ScalarObjective::Linear { c } => q - c / r,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScalarObjective::Zero => true,
            ScalarObjective::L1 { weight } => weight.is_finite() && weight >= 0.0,
            ScalarObjective::Quadratic { p, c } => p.is_finite() && p >= 0.0 && c.is_finite(),
            ScalarObjective::Linear { c } => c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidData(format!("invalid scalar objective {self:?}")))
        }
    }
}

#[inline]
pub fn soft_threshold(q: f64, tau: f64) -> f64 {
    q.signum() * (q.abs() - tau).max(0.0)
}

/// `½·yᵀPy + cᵀy`, with `(P + rI)` factors cached per `r`.
#[derive(Clone, Serialize, Deserialize)]
pub struct QuadraticTerm {
    p: DenseMatrix,
    c: Vec<f64>,
    #[serde(skip)]
    cache: FactorCache,
}

impl QuadraticTerm {
    pub fn new(p: DenseMatrix, c: Vec<f64>) -> Result<Self> {
        let term = Self {
            p,
            c,
            cache: FactorCache::default(),
        };
        term.validate()?;
        Ok(term)
    }

    pub fn p(&self) -> &DenseMatrix {
        &self.p
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    fn validate(&self) -> Result<()> {
        if self.p.shape() != (self.c.len(), self.c.len()) {
            return Err(Error::dims("quadratic term P", self.c.len(), self.p.rows()));
        }
        if !vecops::all_finite(&self.c) {
            return Err(Error::InvalidData("quadratic term c must be finite".into()));
        }
        let mut shifted = self.p.clone();
        shifted.add_diagonal(PSD_SHIFT);
        cholesky_factor(&shifted)
            .map_err(|e| Error::InvalidData(format!("quadratic term P must be symmetric PSD: {e}")))?;
        Ok(())
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let py = self.p.matvec(y).expect("validated dims");
        0.5 * vecops::dot(y, &py) + vecops::dot(&self.c, y)
    }

    /// Factor of `P + rI`, computed once per distinct `r`.
    fn shifted_factor(&self, r: f64) -> Result<Arc<SpdFactor>> {
        let key = r.to_bits();
        if let Some(f) = self.cache.lookup(key) {
            return Ok(f);
        }
        let mut m = self.p.clone();
        m.add_diagonal(r);
        let factor = Arc::new(cholesky_factor(&m)?);
        Ok(self.cache.insert(key, factor))
    }

    fn prox(&self, r: f64, q: &[f64]) -> Result<Vec<f64>> {
        let rhs: Vec<f64> = q.iter().zip(&self.c).map(|(qi, ci)| r * qi - ci).collect();
        self.shifted_factor(r)?.solve(&rhs)
    }
}

impl fmt::Debug for QuadraticTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadraticTerm")
            .field("p", &self.p)
            .field("c", &self.c)
            .finish()
    }
}

impl PartialEq for QuadraticTerm {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.c == other.c
    }
}

/// Read-mostly cache of `(P + rI)` factors keyed by the bit pattern of `r`.
#[derive(Default)]
struct FactorCache {
    entries: RwLock<Vec<(u64, Arc<SpdFactor>)>>,
}

impl FactorCache {
    fn lookup(&self, key: u64) -> Option<Arc<SpdFactor>> {
        let guard = self.entries.read().unwrap_or_else(|e| e.into_inner());
        guard.iter().find(|(k, _)| *k == key).map(|(_, f)| f.clone())
    }

    fn insert(&self, key: u64, factor: Arc<SpdFactor>) -> Arc<SpdFactor> {
        let mut guard = self.entries.write().unwrap_or_else(|e| e.into_inner());
        if let Some((_, f)) = guard.iter().find(|(k, _)| *k == key) {
            return f.clone();
        }
        guard.push((key, factor.clone()));
        factor
    }
}

impl Clone for FactorCache {
    fn clone(&self) -> Self {
        let guard = self.entries.read().unwrap_or_else(|e| e.into_inner());
        Self {
            entries: RwLock::new(guard.clone()),
        }
    }
}

/// Objective functions with a registered closed-form proximity operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    Zero,
    /// `weight·‖y‖₁`
    L1 {
        weight: f64,
    },
    Quadratic(QuadraticTerm),
    Linear {
        c: Vec<f64>,
    },
    SeparableSum {
        terms: Vec<ScalarObjective>,
    },
}

impl ObjectiveSpec {
    pub fn l1(weight: f64) -> Self {
        ObjectiveSpec::L1 { weight }
    }

    pub fn quadratic(p: DenseMatrix, c: Vec<f64>) -> Result<Self> {
        Ok(ObjectiveSpec::Quadratic(QuadraticTerm::new(p, c)?))
    }

    /// Dimension fixed by the objective's own data, if any.
    pub fn intrinsic_dim(&self) -> Option<usize> {
        match self {
            ObjectiveSpec::Zero | ObjectiveSpec::L1 { .. } => None,
            ObjectiveSpec::Quadratic(q) => Some(q.dim()),
            ObjectiveSpec::Linear { c } => Some(c.len()),
            ObjectiveSpec::SeparableSum { terms } => Some(terms.len()),
        }
    }

    /// Checks parameter invariants and, if given, the variable dimension.
    pub fn validate(&self, dim: Option<usize>) -> Result<()> {
        match self {
            ObjectiveSpec::Zero => {}
            ObjectiveSpec::L1 { weight } => {
                if !(weight.is_finite() && *weight >= 0.0) {
                    return Err(Error::InvalidData(format!("l1 weight must be >= 0, got {weight}")));
                }
            }
            ObjectiveSpec::Quadratic(q) => q.validate()?,
            ObjectiveSpec::Linear { c } => {
                if !vecops::all_finite(c) {
                    return Err(Error::InvalidData("linear term must be finite".into()));
                }
            }
            ObjectiveSpec::SeparableSum { terms } => {
                terms.iter().try_for_each(ScalarObjective::validate)?;
            }
        }
        if let (Some(d), Some(own)) = (dim, self.intrinsic_dim()) {
            if d != own {
                return Err(Error::dims("objective dimension", d, own));
            }
        }
        Ok(())
    }

    /// True when θ(y) = Σᵢ θᵢ(yᵢ).
    pub fn is_separable(&self) -> bool {
        match self {
            ObjectiveSpec::Quadratic(q) => q.p.is_diagonal(),
            _ => true,
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            ObjectiveSpec::Zero => 0.0,
            ObjectiveSpec::L1 { weight } => weight * y.iter().map(|v| v.abs()).sum::<f64>(),
            ObjectiveSpec::Quadratic(q) => q.value(y),
            ObjectiveSpec::Linear { c } => vecops::dot(c, y),
            ObjectiveSpec::SeparableSum { terms } => terms.iter().zip(y).map(|(t, yi)| t.value(*yi)).sum(),
        }
    }

    /// `(P, c)` when θ is a (possibly degenerate) quadratic `½yᵀPy + cᵀy`.
    pub fn as_quadratic(&self, dim: usize) -> Option<(DenseMatrix, Vec<f64>)> {
        match self {
            ObjectiveSpec::Zero => Some((DenseMatrix::zeros(dim, dim), vec![0.0; dim])),
            ObjectiveSpec::Quadratic(q) => Some((q.p.clone(), q.c.clone())),
            ObjectiveSpec::Linear { c } => Some((DenseMatrix::zeros(dim, dim), c.clone())),
            ObjectiveSpec::SeparableSum { terms } => {
                let mut diag = Vec::with_capacity(terms.len());
                let mut lin = Vec::with_capacity(terms.len());
                for t in terms {
                    let (p, c) = match *t {
                        ScalarObjective::Zero => (0.0, 0.0),
                        ScalarObjective::Quadratic { p, c } => (p, c),
                        ScalarObjective::Linear { c } => (0.0, c),
                        ScalarObjective::L1 { .. } => return None,
                    };
                    diag.push(p);
                    lin.push(c);
                }
                Some((DenseMatrix::diagonal(&diag), lin))
            }
            ObjectiveSpec::L1 { .. } => None,
        }
    }

    /// Per-coordinate scalar terms, available when θ is separable.
    pub fn scalar_terms(&self, dim: usize) -> Option<Vec<ScalarObjective>> {
        Some(match self {
            ObjectiveSpec::Zero => vec![ScalarObjective::Zero; dim],
            ObjectiveSpec::L1 { weight } => vec![ScalarObjective::L1 { weight: *weight }; dim],
            ObjectiveSpec::Linear { c } => c.iter().map(|&c| ScalarObjective::Linear { c }).collect(),
            ObjectiveSpec::SeparableSum { terms } => terms.clone(),
            ObjectiveSpec::Quadratic(q) if q.p.is_diagonal() => {
                q.p.diag()
                    .into_iter()
                    .zip(&q.c)
                    .map(|(p, &c)| ScalarObjective::Quadratic { p, c })
                    .collect()
            }
            ObjectiveSpec::Quadratic(_) => return None,
        })
    }

    fn kind_name(&self) -> &'static str {
        match self {
            ObjectiveSpec::Zero => "zero",
            ObjectiveSpec::L1 { .. } => "l1",
            ObjectiveSpec::Quadratic(_) => "quadratic",
            ObjectiveSpec::Linear { .. } => "linear",
            ObjectiveSpec::SeparableSum { .. } => "separable_sum",
        }
    }
}

/// Closed convex sets with an explicit Euclidean projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    WholeSpace,
    NonnegativeOrthant,
    /// Componentwise bounds; infinite bounds are serialized as `null`.
    Box {
        #[serde(with = "extended_reals::lower")]
        lower: Vec<f64>,
        #[serde(with = "extended_reals::upper")]
        upper: Vec<f64>,
    },
}

impl SetSpec {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let set = SetSpec::Box { lower, upper };
        set.validate(None)?;
        Ok(set)
    }

    pub fn validate(&self, dim: Option<usize>) -> Result<()> {
        if let SetSpec::Box { lower, upper } = self {
            if lower.len() != upper.len() {
                return Err(Error::dims("box bounds", lower.len(), upper.len()));
            }
            if let Some(d) = dim {
                if d != lower.len() {
                    return Err(Error::dims("box dimension", d, lower.len()));
                }
            }
            for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
                if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                    return Err(Error::InvalidData(format!("invalid box bounds at {i}: [{l}, {u}]")));
                }
            }
        }
        Ok(())
    }

    pub fn is_whole_space(&self) -> bool {
        match self {
            SetSpec::WholeSpace => true,
            SetSpec::NonnegativeOrthant => false,
            SetSpec::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .all(|(l, u)| *l == f64::NEG_INFINITY && *u == f64::INFINITY),
        }
    }

    /// Bounds of coordinate `i` (infinite when unbounded).
    #[inline]
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        match self {
            SetSpec::WholeSpace => (f64::NEG_INFINITY, f64::INFINITY),
            SetSpec::NonnegativeOrthant => (0.0, f64::INFINITY),
            SetSpec::Box { lower, upper } => (lower[i], upper[i]),
        }
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.iter().enumerate().all(|(i, x)| {
            let (l, u) = self.bounds(i);
            *x >= l - tol && *x <= u + tol
        })
    }
}

/// Bound vectors where `null` stands for −∞ (lower) or +∞ (upper).
mod extended_reals {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    fn encode<S: Serializer>(v: &[f64], infinite: f64, s: S) -> Result<S::Ok, S::Error> {
        let wire: Vec<Option<f64>> = v.iter().map(|x| (*x != infinite).then_some(*x)).collect();
        wire.serialize(s)
    }

    fn decode<'de, D: Deserializer<'de>>(infinite: f64, d: D) -> Result<Vec<f64>, D::Error> {
        let wire: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(wire.into_iter().map(|x| x.unwrap_or(infinite)).collect())
    }

    pub mod lower {
        use super::*;
        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            encode(v, f64::NEG_INFINITY, s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            decode(f64::NEG_INFINITY, d)
        }
    }

    pub mod upper {
        use super::*;
        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            encode(v, f64::INFINITY, s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            decode(f64::INFINITY, d)
        }
    }
}

fn check_r(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::ConfigInvalid(format!("prox parameter must be > 0, got {r}")))
    }
}

/// Unconstrained proximity operator `argmin_y θ(y) + (r/2)‖y − q‖²`.
pub fn prox(theta: &ObjectiveSpec, r: f64, q: &[f64]) -> Result<Vec<f64>> {
    check_r(r)?;
    if let Some(d) = theta.intrinsic_dim() {
        if d != q.len() {
            return Err(Error::dims("prox", d, q.len()));
        }
    }
    Ok(match theta {
        ObjectiveSpec::Zero => q.to_vec(),
        ObjectiveSpec::L1 { weight } => q.iter().map(|v| soft_threshold(*v, weight / r)).collect(),
        ObjectiveSpec::Quadratic(term) => term
            .prox(r, q)
            .map_err(|e| Error::UnsupportedObjective(format!("{}: {e}", theta.kind_name())))?,
        ObjectiveSpec::Linear { c } => q.iter().zip(c).map(|(qi, ci)| qi - ci / r).collect(),
        ObjectiveSpec::SeparableSum { terms } => terms.iter().zip(q).map(|(t, qi)| t.prox(r, *qi)).collect(),
    })
}

/// `argmin { θ(y) + (r/2)‖y − q‖² : y ∈ X }`.
///
/// Supported for any θ over the whole space, and for separable θ over a
/// box or the nonnegative orthant (clipped coordinatewise prox).
pub fn prox_constrained(theta: &ObjectiveSpec, set: &SetSpec, r: f64, q: &[f64]) -> Result<Vec<f64>> {
    set.validate(Some(q.len()))?;
    if set.is_whole_space() {
        return prox(theta, r, q);
    }
    if !theta.is_separable() {
        return Err(Error::UnsupportedCombination(format!(
            "non-separable {} objective over a proper set",
            theta.kind_name()
        )));
    }
    let mut y = prox(theta, r, q)?;
    clip(set, &mut y);
    Ok(y)
}

/// Whether [`prox_constrained`] has a closed form for this pair.
pub fn supports_constrained(theta: &ObjectiveSpec, set: &SetSpec) -> bool {
    set.is_whole_space() || theta.is_separable()
}

/// Euclidean projection onto `X`.
pub fn project(set: &SetSpec, v: &[f64]) -> Vec<f64> {
    let mut y = v.to_vec();
    clip(set, &mut y);
    y
}

fn clip(set: &SetSpec, y: &mut [f64]) {
    if matches!(set, SetSpec::WholeSpace) {
        return;
    }
    for (i, yi) in y.iter_mut().enumerate() {
        let (l, u) = set.bounds(i);
        if *yi < l {
            *yi = l;
        } else if *yi > u {
            *yi = u;
        }
    }
}
