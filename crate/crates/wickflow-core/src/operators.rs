//! Finite-dimensional operator families: coordinatewise families (the
//! generators A), Wick families (the convolution operators B), boundedness
//! certificates, and semigroup providers with declared growth bounds.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};

use crate::chaos::{ChaosExpansion, Coeff};
use crate::error::{CoreError, Result};
use crate::multiindex::{MultiIndex, Truncation};

/// A bounded operator on R^d, in dense or structured form.
#[derive(Clone, Debug, PartialEq)]
pub enum LinearOp {
    /// Scalar multiple of the identity; dimension-agnostic.
    Scalar(f64),
    Diag(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl LinearOp {
    pub fn zero() -> Self {
        LinearOp::Scalar(0.0)
    }

    pub fn identity() -> Self {
        LinearOp::Scalar(1.0)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            LinearOp::Scalar(c) => *c == 0.0,
            LinearOp::Diag(d) => d.iter().all(|&x| x == 0.0),
            LinearOp::Dense(m) => m.iter().all(|&x| x == 0.0),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            LinearOp::Scalar(_) => None,
            LinearOp::Diag(d) => Some(d.len()),
            LinearOp::Dense(m) => Some(m.nrows()),
        }
    }

    pub fn to_dense(&self, d: usize) -> DMatrix<f64> {
        match self {
            LinearOp::Scalar(c) => DMatrix::identity(d, d) * *c,
            LinearOp::Diag(v) => {
                assert_eq!(v.len(), d);
                DMatrix::from_diagonal(v)
            }
            LinearOp::Dense(m) => {
                assert_eq!(m.nrows(), d);
                m.clone()
            }
        }
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            LinearOp::Scalar(c) => v * *c,
            LinearOp::Diag(d) => d.component_mul(v),
            LinearOp::Dense(m) => m * v,
        }
    }

    pub fn apply_coeff(&self, c: &Coeff) -> Result<Coeff> {
        match c {
            Coeff::Scalar(x) => match self {
                LinearOp::Scalar(s) => Ok(Coeff::Scalar(s * x)),
                _ => Err(CoreError::DimensionMismatch(
                    "matrix operator applied to a scalar coefficient".into(),
                )),
            },
            Coeff::Vector(v) => Ok(Coeff::Vector(self.apply(v))),
            Coeff::Traj(t) => Ok(Coeff::Traj(t.iter().map(|v| self.apply(v)).collect())),
        }
    }

    pub fn add(&self, other: &LinearOp, d: usize) -> LinearOp {
        match (self, other) {
            (LinearOp::Scalar(a), LinearOp::Scalar(b)) => LinearOp::Scalar(a + b),
            _ => LinearOp::Dense(self.to_dense(d) + other.to_dense(d)),
        }
    }

    pub fn scale(&self, s: f64) -> LinearOp {
        match self {
            LinearOp::Scalar(c) => LinearOp::Scalar(c * s),
            LinearOp::Diag(v) => LinearOp::Diag(v * s),
            LinearOp::Dense(m) => LinearOp::Dense(m * s),
        }
    }

    /// Spectral norm.
    pub fn op_norm(&self) -> f64 {
        match self {
            LinearOp::Scalar(c) => c.abs(),
            LinearOp::Diag(v) => v.iter().fold(0.0f64, |m, &x| m.max(x.abs())),
            LinearOp::Dense(m) => {
                if m.iter().all(|&x| x == 0.0) {
                    return 0.0;
                }
                m.clone().svd(false, false).singular_values[0]
            }
        }
    }

    /// 1D Laplacian on a periodic grid with spacing `h`.
    pub fn laplacian_1d_periodic(d: usize, h: f64) -> LinearOp {
        let mut m = DMatrix::zeros(d, d);
        let s = 1.0 / (h * h);
        for i in 0..d {
            m[(i, i)] = -2.0 * s;
            m[(i, (i + 1) % d)] = s;
            m[(i, (i + d - 1) % d)] = s;
        }
        LinearOp::Dense(m)
    }

    /// Central-difference first derivative on a periodic grid (the generator
    /// of the periodic shift semigroup).
    pub fn shift_1d_periodic(d: usize, h: f64) -> LinearOp {
        let mut m = DMatrix::zeros(d, d);
        let s = 0.5 / h;
        for i in 0..d {
            m[(i, (i + 1) % d)] = s;
            m[(i, (i + d - 1) % d)] = -s;
        }
        LinearOp::Dense(m)
    }
}

/// A family alpha -> A_alpha, either one shared operator or a per-index map
/// scoped to a working truncation.
#[derive(Clone, Debug)]
pub enum CoordinatewiseFamily {
    Simple(LinearOp),
    PerIndex(BTreeMap<MultiIndex, LinearOp>),
}

impl CoordinatewiseFamily {
    pub fn simple(op: LinearOp) -> Self {
        CoordinatewiseFamily::Simple(op)
    }

    pub fn from_fn(t: &Truncation, f: impl Fn(&MultiIndex) -> LinearOp) -> Self {
        let map = t.enumerate().into_iter().map(|a| {
            let op = f(&a);
            (a, op)
        });
        CoordinatewiseFamily::PerIndex(map.collect())
    }

    pub fn is_simple(&self) -> bool {
        matches!(self, CoordinatewiseFamily::Simple(_))
    }

    pub fn get(&self, alpha: &MultiIndex) -> Result<&LinearOp> {
        match self {
            CoordinatewiseFamily::Simple(op) => Ok(op),
            CoordinatewiseFamily::PerIndex(map) => map
                .get(alpha)
                .ok_or_else(|| CoreError::DomainExceeded(alpha.to_compact_string())),
        }
    }
}

/// `A U = sum_alpha A_alpha(u_alpha) H_alpha`.
pub fn coordinatewise_apply(a: &CoordinatewiseFamily, u: &ChaosExpansion) -> Result<ChaosExpansion> {
    let mut out = ChaosExpansion::new(u.kind());
    for (alpha, c) in u.iter() {
        out.accumulate(alpha.clone(), a.get(alpha)?.apply_coeff(c)?)?;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct PolyBoundReport {
    pub pass: bool,
    pub worst_ratio: f64,
    pub worst_alpha: MultiIndex,
    /// `sum ||o_alpha||^2 (2N)^{-r alpha}` on the truncation (the equivalent
    /// summability form of the bound).
    pub weighted_square_sum: f64,
}

/// Checks `||o_alpha|| <= R (2N)^{r alpha}` per index on the truncation.
pub fn check_polybound(
    fam: &CoordinatewiseFamily,
    t: &Truncation,
    r: f64,
    r_big: f64,
) -> Result<PolyBoundReport> {
    let mut worst_ratio = 0.0;
    let mut worst_alpha = MultiIndex::zero();
    let mut sum = 0.0;
    for alpha in t.enumerate() {
        let norm = fam.get(&alpha)?.op_norm();
        let ratio = norm / (r_big * alpha.weight(r));
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_alpha = alpha.clone();
        }
        sum += norm * norm * alpha.weight(-r);
    }
    Ok(PolyBoundReport {
        pass: worst_ratio <= 1.0 + 1e-12,
        worst_ratio,
        worst_alpha,
        weighted_square_sum: sum,
    })
}

/// One entry of a Wick family: constant or C1-in-time on the solver grid.
#[derive(Clone, Debug)]
pub enum WickEntry {
    Const(LinearOp),
    Varying { vals: Vec<LinearOp>, derivs: Vec<LinearOp> },
}

impl WickEntry {
    fn sup_norm(&self) -> f64 {
        match self {
            WickEntry::Const(op) => op.op_norm(),
            WickEntry::Varying { vals, .. } => {
                vals.iter().map(LinearOp::op_norm).fold(0.0f64, f64::max)
            }
        }
    }

    fn c1_norm(&self) -> f64 {
        match self {
            WickEntry::Const(op) => op.op_norm(),
            WickEntry::Varying { vals, derivs } => {
                vals.iter().map(LinearOp::op_norm).fold(0.0f64, f64::max)
                    + derivs.iter().map(LinearOp::op_norm).fold(0.0f64, f64::max)
            }
        }
    }
}

/// Sparse Wick family `B`, with `B_0` required time-independent.
#[derive(Clone, Debug, Default)]
pub struct WickFamily {
    entries: BTreeMap<MultiIndex, WickEntry>,
}

impl WickFamily {
    pub fn new() -> Self {
        WickFamily::default()
    }

    pub fn set(&mut self, alpha: MultiIndex, op: LinearOp) {
        if op.is_zero() {
            self.entries.remove(&alpha);
        } else {
            self.entries.insert(alpha, WickEntry::Const(op));
        }
    }

    pub fn set_varying(
        &mut self,
        alpha: MultiIndex,
        vals: Vec<LinearOp>,
        derivs: Vec<LinearOp>,
    ) -> Result<()> {
        if alpha.is_zero() {
            return Err(CoreError::InvalidParameter(
                "B_0 must be time-independent".into(),
            ));
        }
        if vals.len() != derivs.len() {
            return Err(CoreError::InvalidParameter(
                "value and derivative grids differ in length".into(),
            ));
        }
        self.entries.insert(alpha, WickEntry::Varying { vals, derivs });
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &WickEntry)> {
        self.entries.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_time_dependent(&self) -> bool {
        self.entries.values().any(|e| matches!(e, WickEntry::Varying { .. }))
    }

    pub fn b_zero(&self) -> LinearOp {
        match self.entries.get(&MultiIndex::zero()) {
            Some(WickEntry::Const(op)) => op.clone(),
            Some(WickEntry::Varying { .. }) => unreachable!("guarded by set_varying"),
            None => LinearOp::zero(),
        }
    }

    pub fn op_at(&self, alpha: &MultiIndex, time_idx: usize) -> Option<&LinearOp> {
        match self.entries.get(alpha)? {
            WickEntry::Const(op) => Some(op),
            WickEntry::Varying { vals, .. } => vals.get(time_idx),
        }
    }

    pub fn deriv_at(&self, alpha: &MultiIndex, time_idx: usize) -> Option<LinearOp> {
        match self.entries.get(alpha)? {
            WickEntry::Const(_) => Some(LinearOp::zero()),
            WickEntry::Varying { derivs, .. } => derivs.get(time_idx).cloned(),
        }
    }

    pub fn sup_norm(&self, alpha: &MultiIndex) -> f64 {
        self.entries.get(alpha).map_or(0.0, WickEntry::sup_norm)
    }

    /// `K = sum_alpha ||B_alpha|| (2N)^{-p alpha / 2}`. For a time-dependent
    /// family the sum runs over the nonzero indices with C1-in-time norms,
    /// matching the summability condition of the continuation argument.
    pub fn k_constant(&self, p: f64) -> f64 {
        if self.is_time_dependent() {
            self.entries
                .iter()
                .filter(|(a, _)| !a.is_zero())
                .map(|(a, e)| e.c1_norm() * a.weight(-p / 2.0))
                .sum()
        } else {
            self.entries
                .iter()
                .map(|(a, e)| e.sup_norm() * a.weight(-p / 2.0))
                .sum()
        }
    }

    /// Same weighted sum over the plain sup norms (all entries).
    pub fn sup_sum(&self, p: f64) -> f64 {
        self.entries
            .iter()
            .map(|(a, e)| e.sup_norm() * a.weight(-p / 2.0))
            .sum()
    }

    /// Weighted sum of the time-derivative sup norms; zero when constant.
    pub fn deriv_sup_sum(&self, p: f64) -> f64 {
        self.entries
            .iter()
            .map(|(a, e)| match e {
                WickEntry::Const(_) => 0.0,
                WickEntry::Varying { derivs, .. } => {
                    derivs.iter().map(LinearOp::op_norm).fold(0.0f64, f64::max)
                        * a.weight(-p / 2.0)
                }
            })
            .sum()
    }
}

/// `(B <> U)_gamma = sum_{alpha + beta = gamma} B_alpha(u_beta)`.
///
/// Time-varying entries need either `time_idx` (vector-kind input) or a
/// trajectory-kind input whose grid matches the entry grids.
pub fn wick_apply(
    b: &WickFamily,
    u: &ChaosExpansion,
    time_idx: Option<usize>,
) -> Result<ChaosExpansion> {
    let mut out = ChaosExpansion::new(u.kind());
    for (ba, entry) in b.entries() {
        for (ua, c) in u.iter() {
            let gamma = ba.add(ua);
            let applied = match (entry, c, time_idx) {
                (WickEntry::Const(op), _, _) => op.apply_coeff(c)?,
                (WickEntry::Varying { vals, .. }, _, Some(i)) => {
                    let op = vals.get(i).ok_or_else(|| {
                        CoreError::InvalidParameter(format!("time index {i} off the B grid"))
                    })?;
                    op.apply_coeff(c)?
                }
                (WickEntry::Varying { vals, .. }, Coeff::Traj(t), None) => {
                    if vals.len() != t.len() {
                        return Err(CoreError::DimensionMismatch(
                            "trajectory grid does not match time-dependent B grid".into(),
                        ));
                    }
                    Coeff::Traj(
                        t.iter()
                            .zip(vals)
                            .map(|(v, op)| op.apply(v))
                            .collect(),
                    )
                }
                (WickEntry::Varying { .. }, _, None) => {
                    return Err(CoreError::InvalidParameter(
                        "time-dependent B needs a time index for non-trajectory input".into(),
                    ))
                }
            };
            out.accumulate(gamma, applied)?;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Certificate for the square-summability route: `||B <> U||^2_{-(p+r+m)}
/// <= M_m (sum ||B_alpha||^2 (2N)^{-r alpha}) (sum ||u_beta||^2 (2N)^{-p beta})`
/// with `M_m` the weight sum over the product support, finite for m > 1.
pub fn verify_wick_bound_l24(
    b: &WickFamily,
    u: &ChaosExpansion,
    p: f64,
    r: f64,
    m: f64,
) -> Result<BoundCheck> {
    let bu = wick_apply(b, u, None)?;
    let q = p + r + m;
    let lhs: f64 = bu.iter().map(|(a, c)| c.norm_sq() * a.weight(-q)).sum();
    let s_b: f64 = b
        .entries()
        .map(|(a, e)| e.sup_norm().powi(2) * a.weight(-r))
        .sum();
    let s_u: f64 = u.iter().map(|(a, c)| c.norm_sq() * a.weight(-p)).sum();
    let mut product_support = std::collections::BTreeSet::new();
    for (ba, _) in b.entries() {
        for (ua, _) in u.iter() {
            product_support.insert(ba.add(ua));
        }
    }
    let m_m: f64 = product_support.iter().map(|g| g.weight(-m)).sum();
    let rhs = m_m * s_b * s_u;
    Ok(BoundCheck { lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-12) })
}

/// Certificate for the Minkowski-inequality route: `||B <> U||^2_{-r} <=
/// (sum ||B_alpha|| (2N)^{-r alpha / 2})^2 sum ||u_beta||^2 (2N)^{-r beta}`.
pub fn verify_wick_bound_l25(b: &WickFamily, u: &ChaosExpansion, r: f64) -> Result<BoundCheck> {
    let bu = wick_apply(b, u, None)?;
    let lhs: f64 = bu.iter().map(|(a, c)| c.norm_sq() * a.weight(-r)).sum();
    let k: f64 = b
        .entries()
        .map(|(a, e)| e.sup_norm() * a.weight(-r / 2.0))
        .sum();
    let s_u: f64 = u.iter().map(|(a, c)| c.norm_sq() * a.weight(-r)).sum();
    let rhs = k * k * s_u;
    Ok(BoundCheck { lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-12) })
}

/// Matrix-exponential semigroup `e^{tA}` with a user-declared growth bound
/// `||T_t|| <= M e^{wt}` and a per-time cache for grid reuse.
#[derive(Debug)]
pub struct SemigroupProvider {
    generator: DMatrix<f64>,
    pub m_bound: f64,
    pub w_bound: f64,
    cache: RwLock<HashMap<u64, Arc<DMatrix<f64>>>>,
}

impl SemigroupProvider {
    pub fn new(generator: &LinearOp, d: usize, m_bound: f64, w_bound: f64) -> Self {
        SemigroupProvider {
            generator: generator.to_dense(d),
            m_bound,
            w_bound,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn exp_at(&self, t: f64) -> Arc<DMatrix<f64>> {
        let key = t.to_bits();
        if let Some(hit) = self.cache.read().unwrap().get(&key) {
            return hit.clone();
        }
        let e = Arc::new((self.generator.clone() * t).exp());
        self.cache.write().unwrap().insert(key, e.clone());
        e
    }

    pub fn action(&self, t: f64, v: &DVector<f64>) -> DVector<f64> {
        assert!(t >= 0.0);
        self.exp_at(t).as_ref() * v
    }

    /// Samples `||e^{tA}||` on the grid against `M e^{wt}`. Violations are a
    /// report, not an error: declared bounds may only hold asymptotically.
    pub fn validate_bound(&self, grid: &[f64], tol: f64) -> Vec<(f64, f64, f64)> {
        let mut violations = Vec::new();
        for &t in grid {
            let norm = LinearOp::Dense(self.exp_at(t).as_ref().clone()).op_norm();
            let bound = self.m_bound * (self.w_bound * t).exp();
            if norm > bound * (1.0 + tol) {
                violations.push((t, norm, bound));
            }
        }
        violations
    }
}
