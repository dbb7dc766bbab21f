//! Fredholm solver for the stationary equation `AU + B <> U + F = 0`,
//! where `A` splits into a compact part and a self-adjoint part diagonal on
//! the chaos basis. Hypotheses are checked with explicit margins before any
//! solve; the recursion is one dense linear solve per coefficient.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::calculus::EigenFamily;
use crate::chaos::{ChaosExpansion, Coeff, Kind};
use crate::error::{CoreError, Result};
use crate::multiindex::{MultiIndex, Truncation};
use crate::operators::{CoordinatewiseFamily, WickFamily};

/// Smallest singular value below which the kernel condition is treated as
/// violated.
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct StationaryProblem {
    /// Compact part of each `A_alpha` (any finite matrix at this scale).
    pub a_tilde: CoordinatewiseFamily,
    /// Eigenvalues `r_alpha` of the self-adjoint part.
    pub r: EigenFamily,
    pub b: WickFamily,
    pub f: ChaosExpansion,
    pub p: f64,
    pub truncation: Truncation,
    /// Declared constant dominating `1 / (-r - ||A~|| - ||B_0||)`.
    pub k: f64,
}

/// Margins of the four hypotheses on the truncation; all must be
/// nonnegative (respectively positive where strict) for a solve.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    /// `min_alpha (-r_alpha - ||A~_alpha|| - ||B_0||)`, must be >= 0.
    pub sign_margin: f64,
    pub sign_worst: String,
    /// `K - sup_alpha 1/(-r - ||A~|| - ||B_0||)`, must be > 0.
    pub k_margin: f64,
    /// `1/sqrt(2) - K sum_{beta > 0} ||B_beta|| (2N)^{-p beta/2}`, must be > 0.
    pub wick_margin: f64,
    /// Smallest singular value of `-r Id - A~ - B_0` over the truncation,
    /// must exceed the kernel tolerance.
    pub kernel_min_sv: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct StationarySolution {
    pub u: ChaosExpansion,
    pub conditions: ConditionReport,
    /// Max residual of the original coefficient equation over the truncation.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormBound {
    pub lhs: f64,
    pub rhs: f64,
    /// `M = 1 - 2 K^2 (sum_{beta > 0} ||B_beta|| (2N)^{-p beta/2})^2`.
    #[serde(rename = "M")]
    pub m: f64,
    pub pass: bool,
}

impl StationaryProblem {
    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// Sum entering conditions 2 and the norm bound: strictly positive
    /// indices only, distinct from the evolution solver's constant.
    pub fn wick_sum(&self) -> f64 {
        self.b
            .entries()
            .filter(|(a, _)| !a.is_zero())
            .map(|(a, _)| self.b.sup_norm(a) * a.weight(-self.p / 2.0))
            .sum()
    }

    /// The system matrix `-r_gamma Id - A~_gamma - B_0` (the Fredholm
    /// operator `Id - ((r+1) Id + A~ + B_0)` simplified).
    fn system_matrix(&self, gamma: &MultiIndex, d: usize, b0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let at = self.a_tilde.get(gamma)?.to_dense(d);
        Ok(DMatrix::identity(d, d) * (-self.r.get(gamma)) - at - b0)
    }
}

/// Evaluates every hypothesis with its margin.
pub fn validate(pb: &StationaryProblem) -> Result<ConditionReport> {
    let d = pb.dim();
    let b0 = pb.b.b_zero();
    let b0_norm = b0.op_norm();
    let b0_dense = b0.to_dense(d);
    let mut sign_margin = f64::INFINITY;
    let mut sign_worst = MultiIndex::zero();
    let mut sup_inv = 0.0f64;
    let mut kernel_min_sv = f64::INFINITY;
    for alpha in pb.truncation.enumerate() {
        let at_norm = pb.a_tilde.get(&alpha)?.op_norm();
        let margin = -pb.r.get(&alpha) - at_norm - b0_norm;
        if margin < sign_margin {
            sign_margin = margin;
            sign_worst = alpha.clone();
        }
        if margin > 0.0 {
            sup_inv = sup_inv.max(1.0 / margin);
        } else {
            sup_inv = f64::INFINITY;
        }
        let sys = pb.system_matrix(&alpha, d, &b0_dense)?;
        let svs = sys.svd(false, false).singular_values;
        kernel_min_sv = kernel_min_sv.min(svs[svs.len() - 1]);
    }
    let k_margin = pb.k - sup_inv;
    let wick_margin = std::f64::consts::FRAC_1_SQRT_2 - pb.k * pb.wick_sum();
    let pass = sign_margin >= 0.0
        && k_margin > 0.0
        && wick_margin > 0.0
        && kernel_min_sv > KERNEL_TOL;
    Ok(ConditionReport {
        sign_margin,
        sign_worst: sign_worst.to_compact_string(),
        k_margin,
        wick_margin,
        kernel_min_sv,
        pass,
    })
}

/// Smallest `K` that satisfies condition 2 with a 5% headroom.
pub fn suggest_k(pb: &StationaryProblem) -> Result<f64> {
    let b0_norm = pb.b.b_zero().op_norm();
    let mut sup_inv = 0.0f64;
    for alpha in pb.truncation.enumerate() {
        let margin = -pb.r.get(&alpha) - pb.a_tilde.get(&alpha)?.op_norm() - b0_norm;
        if margin <= 0.0 {
            return Err(CoreError::HypothesisFailed(format!(
                "sign condition fails at {alpha}; no K can help"
            )));
        }
        sup_inv = sup_inv.max(1.0 / margin);
    }
    Ok(1.05 * sup_inv)
}

/// Level-order Fredholm recursion
/// `u_gamma = (-r_gamma Id - A~_gamma - B_0)^{-1} (f_gamma +
/// sum_{beta > 0} B_beta u_{gamma - beta})`.
pub fn solve(pb: &StationaryProblem) -> Result<StationarySolution> {
    let conditions = validate(pb)?;
    if !conditions.pass {
        return Err(CoreError::HypothesisFailed(format!(
            "stationary hypotheses violated: {conditions:?}"
        )));
    }
    let d = pb.dim();
    if pb.f.kind() != Kind::Vector(d) {
        return Err(CoreError::KindMismatch("forcing must be vector kind".into()));
    }
    for alpha in pb.f.support() {
        if !pb.truncation.contains(alpha) {
            return Err(CoreError::DomainExceeded(alpha.to_compact_string()));
        }
    }
    let b0_dense = pb.b.b_zero().to_dense(d);
    let mut u = ChaosExpansion::new(Kind::Vector(d));

    let mut order = pb.truncation.enumerate();
    order.sort_by_key(|a| a.length());
    for gamma in &order {
        let mut rhs = match pb.f.get(gamma) {
            Some(Coeff::Vector(v)) => v.clone(),
            _ => DVector::zeros(d),
        };
        for (beta, _) in pb.b.entries() {
            if beta.is_zero() || !beta.le(gamma) {
                continue;
            }
            let prev = gamma.sub(beta).expect("beta <= gamma");
            if let Some(Coeff::Vector(v)) = u.get(&prev) {
                rhs += pb.b.op_at(beta, 0).expect("entry exists").apply(v);
            }
        }
        let sys = pb.system_matrix(gamma, d, &b0_dense)?;
        let sol = sys
            .lu()
            .solve(&rhs)
            .ok_or_else(|| CoreError::SingularSolve(gamma.to_compact_string()))?;
        u.set(gamma.clone(), Coeff::Vector(sol))?;
    }

    let residual = recursion_residual(pb, &u)?;
    if residual > 1e-10 {
        return Err(CoreError::SingularSolve(format!(
            "recursion residual {residual} above tolerance"
        )));
    }
    Ok(StationarySolution { u, conditions, residual })
}

/// Residual of the original equation `(A~ + r Id + B_0) u_gamma +
/// sum_{beta > 0} B_beta u_{gamma - beta} + f_gamma = 0` per coefficient.
pub fn recursion_residual(pb: &StationaryProblem, u: &ChaosExpansion) -> Result<f64> {
    let d = pb.dim();
    let b0_dense = pb.b.b_zero().to_dense(d);
    let zero = DVector::zeros(d);
    let mut worst = 0.0f64;
    for gamma in pb.truncation.enumerate() {
        let ug = match u.get(&gamma) {
            Some(Coeff::Vector(v)) => v.clone(),
            _ => zero.clone(),
        };
        let mut r = pb.a_tilde.get(&gamma)?.apply(&ug)
            + &ug * pb.r.get(&gamma)
            + &b0_dense * &ug;
        for (beta, _) in pb.b.entries() {
            if beta.is_zero() || !beta.le(&gamma) {
                continue;
            }
            let prev = gamma.sub(beta).expect("beta <= gamma");
            if let Some(Coeff::Vector(v)) = u.get(&prev) {
                r += pb.b.op_at(beta, 0).expect("entry exists").apply(v);
            }
        }
        if let Some(Coeff::Vector(f)) = pb.f.get(&gamma) {
            r += f;
        }
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// The closing estimate: `sum ||u||^2 (2N)^{-p gamma} <= (2K^2/M) sum
/// ||f||^2 (2N)^{-p gamma}` with `M = 1 - 2K^2 (wick sum)^2`.
pub fn norm_bound(pb: &StationaryProblem, sol: &StationarySolution) -> NormBound {
    let wsum = pb.wick_sum();
    let m = 1.0 - 2.0 * pb.k * pb.k * wsum * wsum;
    let lhs: f64 = sol.u.iter().map(|(a, c)| c.norm_sq() * a.weight(-pb.p)).sum();
    let rhs_sum: f64 = pb.f.iter().map(|(a, c)| c.norm_sq() * a.weight(-pb.p)).sum();
    let rhs = 2.0 * pb.k * pb.k / m * rhs_sum;
    NormBound { lhs, rhs, m, pass: m > 0.0 && lhs <= rhs * (1.0 + 1e-12) }
}

/// `r_alpha = c P(|alpha|)` for a polynomial `P` given by coefficients
/// `[p_0, p_1, ..., p_m]`, the spectrum of `c P(R)` with `R` the number
/// operator.
pub fn ou_polynomial_eigs(c: f64, poly: &[f64], t: &Truncation) -> EigenFamily {
    let mut fam = EigenFamily::new();
    for alpha in t.enumerate() {
        let x = alpha.length() as f64;
        let mut val = 0.0;
        for &pc in poly.iter().rev() {
            val = val * x + pc;
        }
        fam.set(alpha, c * val);
    }
    fam
}
