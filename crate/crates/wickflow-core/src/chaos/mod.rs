//! Chaos expansions `F = sum_alpha f_alpha H_alpha` with scalar, vector, or
//! time-grid coefficients, the Wick algebra on them, and Kondratiev norms.

pub mod hermite;

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{CoreError, Result};
use crate::multiindex::{MultiIndex, Truncation};

/// Coefficient payload. All coefficients of one expansion share a kind.
#[derive(Clone, Debug, PartialEq)]
pub enum Coeff {
    Scalar(f64),
    Vector(DVector<f64>),
    /// One vector per time-grid node.
    Traj(Vec<DVector<f64>>),
}

impl Coeff {
    pub fn is_zero(&self) -> bool {
        match self {
            Coeff::Scalar(x) => *x == 0.0,
            Coeff::Vector(v) => v.iter().all(|&x| x == 0.0),
            Coeff::Traj(t) => t.iter().all(|v| v.iter().all(|&x| x == 0.0)),
        }
    }

    pub fn add(&self, other: &Coeff) -> Result<Coeff> {
        match (self, other) {
            (Coeff::Scalar(a), Coeff::Scalar(b)) => Ok(Coeff::Scalar(a + b)),
            (Coeff::Vector(a), Coeff::Vector(b)) if a.len() == b.len() => Ok(Coeff::Vector(a + b)),
            (Coeff::Traj(a), Coeff::Traj(b)) if a.len() == b.len() => Ok(Coeff::Traj(
                a.iter().zip(b).map(|(x, y)| x + y).collect(),
            )),
            _ => Err(CoreError::KindMismatch("cannot add coefficients".into())),
        }
    }

    pub fn scale(&self, s: f64) -> Coeff {
        match self {
            Coeff::Scalar(a) => Coeff::Scalar(a * s),
            Coeff::Vector(a) => Coeff::Vector(a * s),
            Coeff::Traj(a) => Coeff::Traj(a.iter().map(|v| v * s).collect()),
        }
    }

    /// Squared Euclidean size; trajectories reduce by the sup over nodes.
    pub fn norm_sq(&self) -> f64 {
        match self {
            Coeff::Scalar(a) => a * a,
            Coeff::Vector(v) => v.norm_squared(),
            Coeff::Traj(t) => t
                .iter()
                .map(|v| v.norm_squared())
                .fold(0.0f64, f64::max),
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Coeff::Scalar(a) => Some(*a),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&DVector<f64>> {
        match self {
            Coeff::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_traj(&self) -> Option<&Vec<DVector<f64>>> {
        match self {
            Coeff::Traj(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Scalar,
    Vector(usize),
    /// Dimension and number of time-grid nodes.
    Trajectory(usize, usize),
}

impl Kind {
    /// Errors unless the coefficient has this kind's shape.
    pub fn check(&self, c: &Coeff) -> Result<()> {
        if self.matches(c) {
            Ok(())
        } else {
            Err(CoreError::KindMismatch(format!(
                "coefficient does not match expansion kind {self:?}"
            )))
        }
    }

    fn matches(&self, c: &Coeff) -> bool {
        match (self, c) {
            (Kind::Scalar, Coeff::Scalar(_)) => true,
            (Kind::Vector(d), Coeff::Vector(v)) => v.len() == *d,
            (Kind::Trajectory(d, n), Coeff::Traj(t)) => {
                t.len() == *n && t.iter().all(|v| v.len() == *d)
            }
            _ => false,
        }
    }
}

/// Weighted-norm descriptor: test space (`plus`) carries `(alpha!)^2` and
/// weight `(2N)^{+p alpha}`, the distribution space the plain `(2N)^{-p alpha}`.
#[derive(Clone, Copy, Debug)]
pub struct KondratievNorm {
    pub p: f64,
    pub test_space: bool,
}

impl KondratievNorm {
    pub fn distribution(p: f64) -> Self {
        KondratievNorm { p, test_space: false }
    }
    pub fn test(p: f64) -> Self {
        KondratievNorm { p, test_space: true }
    }
}

/// Sparse chaos expansion in canonical form: no stored coefficient is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ChaosExpansion {
    kind: Kind,
    coeffs: BTreeMap<MultiIndex, Coeff>,
}

impl ChaosExpansion {
    pub fn new(kind: Kind) -> Self {
        ChaosExpansion { kind, coeffs: BTreeMap::new() }
    }

    /// The expansion `1` (unit of the Wick algebra).
    pub fn unit() -> Self {
        let mut e = ChaosExpansion::new(Kind::Scalar);
        e.set(MultiIndex::zero(), Coeff::Scalar(1.0)).unwrap();
        e
    }

    pub fn scalar_basis(alpha: MultiIndex) -> Self {
        let mut e = ChaosExpansion::new(Kind::Scalar);
        e.set(alpha, Coeff::Scalar(1.0)).unwrap();
        e
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            Kind::Scalar => 1,
            Kind::Vector(d) | Kind::Trajectory(d, _) => d,
        }
    }

    pub fn set(&mut self, alpha: MultiIndex, c: Coeff) -> Result<()> {
        if !self.kind.matches(&c) {
            return Err(CoreError::KindMismatch(format!(
                "coefficient at {alpha} does not match expansion kind {:?}",
                self.kind
            )));
        }
        if c.is_zero() {
            self.coeffs.remove(&alpha);
        } else {
            self.coeffs.insert(alpha, c);
        }
        Ok(())
    }

    pub fn accumulate(&mut self, alpha: MultiIndex, c: Coeff) -> Result<()> {
        let merged = match self.coeffs.get(&alpha) {
            Some(prev) => prev.add(&c)?,
            None => c,
        };
        self.set(alpha, merged)
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<&Coeff> {
        self.coeffs.get(alpha)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Coeff)> {
        self.coeffs.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &MultiIndex> {
        self.coeffs.keys()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &ChaosExpansion) -> Result<ChaosExpansion> {
        if self.kind != other.kind {
            return Err(CoreError::KindMismatch("adding expansions of different kinds".into()));
        }
        let mut out = self.clone();
        for (a, c) in other.iter() {
            out.accumulate(a.clone(), c.clone())?;
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> ChaosExpansion {
        let mut out = ChaosExpansion::new(self.kind);
        for (a, c) in self.iter() {
            out.set(a.clone(), c.scale(s)).unwrap();
        }
        out
    }

    /// Expectation is the coefficient at the zero index.
    pub fn expectation(&self) -> Option<&Coeff> {
        self.get(&MultiIndex::zero())
    }

    /// `sum_{alpha > 0} alpha! |f_alpha|^2` for scalar or vector kind.
    pub fn variance(&self) -> Result<f64> {
        if matches!(self.kind, Kind::Trajectory(..)) {
            return Err(CoreError::KindMismatch("variance of a trajectory expansion".into()));
        }
        Ok(self
            .iter()
            .filter(|(a, _)| !a.is_zero())
            .map(|(a, c)| a.factorial_f64() * c.norm_sq())
            .sum())
    }

    /// Weighted squared norm over the stored support.
    pub fn kondratiev_norm_sq(&self, w: KondratievNorm) -> Result<f64> {
        if matches!(self.kind, Kind::Trajectory(..)) {
            return Err(CoreError::KindMismatch(
                "Kondratiev norm of a trajectory expansion; reduce per node first".into(),
            ));
        }
        Ok(self.weighted_sum(w))
    }

    /// Trajectory variant: sup norm per coefficient, then the weighted sum.
    pub fn kondratiev_norm_sq_sup(&self, w: KondratievNorm) -> f64 {
        self.weighted_sum(w)
    }

    fn weighted_sum(&self, w: KondratievNorm) -> f64 {
        let sign = if w.test_space { w.p } else { -w.p };
        self.iter()
            .map(|(a, c)| {
                let fac = if w.test_space {
                    let f = a.factorial_f64();
                    f * f
                } else {
                    1.0
                };
                fac * c.norm_sq() * a.weight(sign)
            })
            .sum()
    }

    /// Drops coefficients outside the truncation; returns the removed
    /// weighted mass `sum |f_alpha|^2 (2N)^{-p alpha}`.
    pub fn truncate(&self, t: &Truncation, p: f64) -> (ChaosExpansion, f64) {
        let mut kept = ChaosExpansion::new(self.kind);
        let mut dropped = 0.0;
        for (a, c) in self.iter() {
            if t.contains(a) {
                kept.set(a.clone(), c.clone()).unwrap();
            } else {
                dropped += c.norm_sq() * a.weight(-p);
            }
        }
        (kept, dropped)
    }
}

fn wick_mul(a: &Coeff, b: &Coeff) -> Result<Coeff> {
    match (a, b) {
        (Coeff::Scalar(x), Coeff::Scalar(y)) => Ok(Coeff::Scalar(x * y)),
        (Coeff::Scalar(x), other) | (other, Coeff::Scalar(x)) => Ok(other.scale(*x)),
        _ => Err(CoreError::KindMismatch(
            "Wick product requires a scalar operand on at least one side".into(),
        )),
    }
}

/// `(F <> G)_gamma = sum_{alpha + beta = gamma} f_alpha g_beta`, computed on
/// the full Minkowski-sum support with no mid-computation truncation.
pub fn wick(f: &ChaosExpansion, g: &ChaosExpansion) -> Result<ChaosExpansion> {
    let kind = match (f.kind, g.kind) {
        (Kind::Scalar, k) | (k, Kind::Scalar) => k,
        _ => {
            return Err(CoreError::KindMismatch(
                "Wick product of two non-scalar expansions".into(),
            ))
        }
    };
    let mut out = ChaosExpansion::new(kind);
    for (a, fa) in f.iter() {
        for (b, gb) in g.iter() {
            out.accumulate(a.add(b), wick_mul(fa, gb)?)?;
        }
    }
    Ok(out)
}

/// Iterated Wick power; `n = 0` yields the unit expansion.
pub fn wick_power(f: &ChaosExpansion, n: u32) -> Result<ChaosExpansion> {
    if f.kind != Kind::Scalar {
        return Err(CoreError::KindMismatch("Wick power of a non-scalar expansion".into()));
    }
    let mut acc = ChaosExpansion::unit();
    for _ in 0..n {
        acc = wick(&acc, f)?;
    }
    Ok(acc)
}
