//! Chaos-expansion calculus: the stochastic gradient, its adjoint, the
//! Ornstein-Uhlenbeck operator and semigroup, and the combinatorial
//! constructions that rewrite coordinatewise operators as Skorokhod
//! integrals and Wick convolutions.

use std::collections::BTreeMap;

use crate::chaos::{ChaosExpansion, Coeff, Kind};
use crate::error::{CoreError, Result};
use crate::multiindex::MultiIndex;
use crate::operators::{wick_apply, CoordinatewiseFamily, LinearOp, WickFamily};

/// Element of X tensor S'(R) tensor the distribution space: a sparse map
/// (alpha, mode k) -> coefficient, the mode standing for the direction xi_k.
///
/// The direction is kept purely as an integer; none of the correspondences
/// below ever evaluate a Hermite function.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionalExpansion {
    kind: Kind,
    coeffs: BTreeMap<(MultiIndex, u32), Coeff>,
}

impl DirectionalExpansion {
    pub fn new(kind: Kind) -> Self {
        DirectionalExpansion { kind, coeffs: BTreeMap::new() }
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn set(&mut self, alpha: MultiIndex, mode: u32, c: Coeff) -> Result<()> {
        assert!(mode >= 1, "modes are indexed from 1");
        self.kind.check(&c)?;
        if c.is_zero() {
            self.coeffs.remove(&(alpha, mode));
        } else {
            self.coeffs.insert((alpha, mode), c);
        }
        Ok(())
    }

    pub fn accumulate(&mut self, alpha: MultiIndex, mode: u32, c: Coeff) -> Result<()> {
        assert!(mode >= 1);
        self.kind.check(&c)?;
        let key = (alpha, mode);
        match self.coeffs.remove(&key) {
            Some(prev) => {
                let sum = prev.add(&c)?;
                if !sum.is_zero() {
                    self.coeffs.insert(key, sum);
                }
            }
            None => {
                if !c.is_zero() {
                    self.coeffs.insert(key, c);
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, alpha: &MultiIndex, mode: u32) -> Option<&Coeff> {
        self.coeffs.get(&(alpha.clone(), mode))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(MultiIndex, u32), &Coeff)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Eigenvalue family of a self-adjoint coordinatewise operator on a declared
/// truncation: alpha -> r_alpha.
#[derive(Clone, Debug, Default)]
pub struct EigenFamily {
    pub r: BTreeMap<MultiIndex, f64>,
}

impl EigenFamily {
    pub fn new() -> Self {
        EigenFamily::default()
    }

    pub fn set(&mut self, alpha: MultiIndex, value: f64) {
        self.r.insert(alpha, value);
    }

    pub fn get(&self, alpha: &MultiIndex) -> f64 {
        self.r.get(alpha).copied().unwrap_or(0.0)
    }
}

/// Stochastic gradient: `D u = sum_alpha sum_k alpha_k u_alpha (x) xi_k (x)
/// H_{alpha - eps_k}`. Drops each index by one chaos level.
pub fn malliavin(f: &ChaosExpansion) -> DirectionalExpansion {
    let mut out = DirectionalExpansion::new(f.kind());
    for (alpha, c) in f.iter() {
        for (pos, &ak) in alpha.entries().iter().enumerate() {
            if ak == 0 {
                continue;
            }
            let k = pos + 1;
            let lower = alpha.sub(&MultiIndex::unit(k)).expect("ak > 0");
            out.accumulate(lower, k as u32, c.scale(ak as f64)).expect("same kind");
        }
    }
    out
}

/// Adjoint of the gradient: `delta(V)` has coefficient
/// `sum_{k: gamma_k > 0} v_{gamma - eps_k, k}` at `gamma`. Raises each index
/// by one chaos level.
pub fn skorokhod(v: &DirectionalExpansion) -> ChaosExpansion {
    let mut out = ChaosExpansion::new(v.kind());
    for ((alpha, k), c) in v.iter() {
        let gamma = alpha.add(&MultiIndex::unit(*k as usize));
        out.accumulate(gamma, c.clone()).expect("same kind");
    }
    out
}

/// Number operator `R u = sum |alpha| u_alpha H_alpha`, the composition
/// `skorokhod(malliavin(u))` computed directly.
pub fn ou_operator(f: &ChaosExpansion) -> ChaosExpansion {
    let mut out = ChaosExpansion::new(f.kind());
    for (alpha, c) in f.iter() {
        let scaled = c.scale(alpha.length() as f64);
        if !scaled.is_zero() {
            out.set(alpha.clone(), scaled).expect("same kind");
        }
    }
    out
}

/// Semigroup generated by `-R`: coefficientwise scaling by `e^{-|alpha| t}`.
pub fn ou_semigroup(f: &ChaosExpansion, t: f64) -> Result<ChaosExpansion> {
    if t < 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "semigroup time must be nonnegative, got {t}"
        )));
    }
    let mut out = ChaosExpansion::new(f.kind());
    for (alpha, c) in f.iter() {
        out.set(alpha.clone(), c.scale((-(alpha.length() as f64) * t).exp()))?;
    }
    Ok(out)
}

/// Rewrites a coordinatewise operator as a Skorokhod integrand:
/// `M_k u = sum_alpha (alpha_k + 1) R_{alpha + eps_k}(u_{alpha + eps_k})
/// / |alpha + eps_k| (x) H_alpha`, so that `skorokhod` of the result agrees
/// with `R u` on every index of positive length. The zero index is out of
/// reach of the adjoint, so `R_0 u_0` (if nonzero) is not reproduced.
pub fn r_to_skorokhod(
    r: &CoordinatewiseFamily,
    u: &ChaosExpansion,
) -> Result<DirectionalExpansion> {
    let mut out = DirectionalExpansion::new(u.kind());
    for (beta, c) in u.iter() {
        let len = beta.length();
        if len == 0 {
            continue;
        }
        let image = r.get(beta)?.apply_coeff(c)?;
        for (pos, &bk) in beta.entries().iter().enumerate() {
            if bk == 0 {
                continue;
            }
            let k = pos + 1;
            let alpha = beta.sub(&MultiIndex::unit(k)).expect("bk > 0");
            out.accumulate(alpha, k as u32, image.scale(bk as f64 / len as f64))?;
        }
    }
    Ok(out)
}

/// Skorokhod integrand of a self-adjoint operator given by eigenvalues,
/// through the default decomposition `r_{k,alpha} = r_alpha alpha_k /
/// |alpha|` over the supported modes. `skorokhod` of the result has
/// coefficient `r_alpha u_alpha` at every alpha of positive length.
pub fn selfadjoint_decomposition(r: &EigenFamily, u: &ChaosExpansion) -> DirectionalExpansion {
    let mut out = DirectionalExpansion::new(u.kind());
    for (alpha, c) in u.iter() {
        let len = alpha.length();
        if len == 0 {
            continue;
        }
        let ra = r.get(alpha);
        if ra == 0.0 {
            continue;
        }
        for (pos, &ak) in alpha.entries().iter().enumerate() {
            if ak == 0 {
                continue;
            }
            let k = pos + 1;
            let lower = alpha.sub(&MultiIndex::unit(k)).expect("ak > 0");
            out.accumulate(lower, k as u32, c.scale(ra * ak as f64 / len as f64))
                .expect("same kind");
        }
    }
    out
}

/// Dual-path evaluation of the operator correspondence: given directions
/// `m_k` (for `k = 1..m`), returns `delta(M u)` and `B <> u` where
/// `B_{eps_k} = m_k`. The two are equal by construction; computing both
/// independently makes the identity a checkable artifact.
pub fn wick_skorokhod_bridge(
    m_ops: &[LinearOp],
    u: &ChaosExpansion,
) -> Result<(ChaosExpansion, ChaosExpansion)> {
    let mut integrand = DirectionalExpansion::new(u.kind());
    let mut b = WickFamily::new();
    for (pos, op) in m_ops.iter().enumerate() {
        let k = pos + 1;
        b.set(MultiIndex::unit(k), op.clone());
        if op.is_zero() {
            continue;
        }
        for (alpha, c) in u.iter() {
            integrand.accumulate(alpha.clone(), k as u32, op.apply_coeff(c)?)?;
        }
    }
    let via_skorokhod = skorokhod(&integrand);
    let via_wick = wick_apply(&b, u, None)?;
    Ok((via_skorokhod, via_wick))
}
