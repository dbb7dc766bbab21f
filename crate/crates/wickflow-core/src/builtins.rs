//! Shipped demo problems at desk scale. Each builds in milliseconds and
//! solves well inside the CLI's 60 second budget.

use nalgebra::{DMatrix, DVector};

use crate::calculus::EigenFamily;
use crate::chaos::hermite::{hermite_fn, hermite_fn_deriv};
use crate::chaos::{ChaosExpansion, Coeff, Kind};
use crate::error::{CoreError, Result};
use crate::evolution::CauchyProblem;
use crate::multiindex::{MultiIndex, Truncation};
use crate::operators::{CoordinatewiseFamily, LinearOp, WickFamily};
use crate::stationary::{self, StationaryProblem};

pub const NAMES: [&str; 7] = [
    "langevin",
    "ou_heat",
    "heat_wick_potential",
    "transport_whitenoise",
    "deterministic_demo",
    "fredholm_demo",
    "ou_polynomial",
];

#[derive(Clone, Debug)]
pub enum BuiltinProblem {
    Evolution(CauchyProblem),
    Stationary(StationaryProblem),
}

pub fn build(name: &str) -> Result<BuiltinProblem> {
    match name {
        "langevin" => Ok(BuiltinProblem::Evolution(langevin(1.0, 16, 2048))),
        "ou_heat" => Ok(BuiltinProblem::Evolution(ou_heat())),
        "heat_wick_potential" => Ok(BuiltinProblem::Evolution(heat_wick_potential())),
        "transport_whitenoise" => Ok(BuiltinProblem::Evolution(transport_whitenoise())),
        "deterministic_demo" => Ok(BuiltinProblem::Evolution(deterministic_demo())),
        "fredholm_demo" => Ok(BuiltinProblem::Stationary(fredholm_demo())),
        "ou_polynomial" => Ok(BuiltinProblem::Stationary(ou_polynomial())),
        other => Err(CoreError::InvalidParameter(format!(
            "unknown builtin problem {other:?}; available: {}",
            NAMES.join(", ")
        ))),
    }
}

fn grid_nodes(t_end: f64, n_steps: usize) -> Vec<f64> {
    let h = t_end / n_steps as f64;
    (0..=n_steps).map(|i| i as f64 * h).collect()
}

/// Scalar Ornstein-Uhlenbeck velocity process `du/dt = -lambda u + W(t)`:
/// white noise in time enters as a first-order forcing `f_{e_k} = xi_k`.
pub fn langevin(lambda: f64, modes: u32, n_steps: usize) -> CauchyProblem {
    let t_end = 1.0;
    let trunc = Truncation::new(1, modes).unwrap();
    let nodes = grid_nodes(t_end, n_steps);
    let n = nodes.len();
    let mut f = ChaosExpansion::new(Kind::Trajectory(1, n));
    let mut fp = ChaosExpansion::new(Kind::Trajectory(1, n));
    for k in 1..=modes {
        let vals = nodes
            .iter()
            .map(|&t| DVector::from_vec(vec![hermite_fn(k, t)]))
            .collect();
        let ders = nodes
            .iter()
            .map(|&t| DVector::from_vec(vec![hermite_fn_deriv(k, t)]))
            .collect();
        f.set(MultiIndex::unit(k as usize), Coeff::Traj(vals)).unwrap();
        fp.set(MultiIndex::unit(k as usize), Coeff::Traj(ders)).unwrap();
    }
    CauchyProblem {
        a: CoordinatewiseFamily::simple(LinearOp::Scalar(-lambda)),
        b: WickFamily::new(),
        u0: ChaosExpansion::new(Kind::Vector(1)),
        f,
        f_prime: fp,
        t_end,
        n_steps,
        p: 2.0,
        truncation: trunc,
        m_bound: 1.0,
        w_bound: 0.0,
    }
}

/// Heat equation of the Ornstein-Uhlenbeck operator, `A_alpha = -|alpha| Id`:
/// every coefficient decays as `exp(-|alpha| t)`.
pub fn ou_heat() -> CauchyProblem {
    let trunc = Truncation::new(4, 6).unwrap();
    let n_steps = 64;
    let a = CoordinatewiseFamily::from_fn(&trunc, |alpha| {
        LinearOp::Scalar(-(alpha.length() as f64))
    });
    let mut u0 = ChaosExpansion::new(Kind::Vector(1));
    for alpha in trunc.enumerate() {
        let v = alpha.weight(-1.0);
        u0.set(alpha, Coeff::Vector(DVector::from_vec(vec![v]))).unwrap();
    }
    CauchyProblem {
        a,
        b: WickFamily::new(),
        u0,
        f: ChaosExpansion::new(Kind::Trajectory(1, n_steps + 1)),
        f_prime: ChaosExpansion::new(Kind::Trajectory(1, n_steps + 1)),
        t_end: 1.0,
        n_steps,
        p: 2.0,
        truncation: trunc,
        m_bound: 1.0,
        w_bound: 0.0,
    }
}

/// Heat equation on a 16 point periodic grid with a Wick-multiplicative
/// spatial white noise potential: `B_{e_k}` multiplies pointwise by the
/// Hermite function `xi_k` sampled on the grid.
pub fn heat_wick_potential() -> CauchyProblem {
    let d = 16;
    let h = 0.5;
    let xs: Vec<f64> = (0..d).map(|j| -4.0 + h * j as f64).collect();
    let trunc = Truncation::new(3, 8).unwrap();
    let n_steps = 128;
    let scale = 0.5;
    let mut b = WickFamily::new();
    for k in 1..=8u32 {
        let diag = DVector::from_iterator(d, xs.iter().map(|&x| scale * hermite_fn(k, x)));
        b.set(MultiIndex::unit(k as usize), LinearOp::Diag(diag));
    }
    let mut u0 = ChaosExpansion::new(Kind::Vector(d));
    let bump = DVector::from_iterator(d, xs.iter().map(|&x| (-x * x).exp()));
    u0.set(MultiIndex::zero(), Coeff::Vector(bump)).unwrap();
    CauchyProblem {
        a: CoordinatewiseFamily::simple(LinearOp::laplacian_1d_periodic(d, h)),
        b,
        u0,
        f: ChaosExpansion::new(Kind::Trajectory(d, n_steps + 1)),
        f_prime: ChaosExpansion::new(Kind::Trajectory(d, n_steps + 1)),
        t_end: 0.5,
        n_steps,
        p: 2.0,
        truncation: trunc,
        m_bound: 1.0,
        w_bound: 0.0,
    }
}

/// Transport on a periodic grid driven by white noise in time: the noise
/// enters through a time-varying Wick family `B_{e_k}(t) = xi_k(t) Id`.
pub fn transport_whitenoise() -> CauchyProblem {
    let d = 16;
    let h = 1.0 / d as f64;
    let trunc = Truncation::new(2, 4).unwrap();
    let t_end = 1.0;
    let n_steps = 128;
    let nodes = grid_nodes(t_end, n_steps);
    let scale = 0.2;
    let mut b = WickFamily::new();
    for k in 1..=4u32 {
        let vals = nodes.iter().map(|&t| LinearOp::Scalar(scale * hermite_fn(k, t))).collect();
        let ders = nodes
            .iter()
            .map(|&t| LinearOp::Scalar(scale * hermite_fn_deriv(k, t)))
            .collect();
        b.set_varying(MultiIndex::unit(k as usize), vals, ders).unwrap();
    }
    let mut u0 = ChaosExpansion::new(Kind::Vector(d));
    let bump = DVector::from_iterator(
        d,
        (0..d).map(|j| (2.0 * std::f64::consts::PI * h * j as f64).sin()),
    );
    u0.set(MultiIndex::zero(), Coeff::Vector(bump)).unwrap();
    CauchyProblem {
        a: CoordinatewiseFamily::simple(LinearOp::shift_1d_periodic(d, h)),
        b,
        u0,
        f: ChaosExpansion::new(Kind::Trajectory(d, n_steps + 1)),
        f_prime: ChaosExpansion::new(Kind::Trajectory(d, n_steps + 1)),
        t_end,
        n_steps,
        p: 4.0,
        truncation: trunc,
        m_bound: 1.0,
        w_bound: 0.05,
    }
}

/// Fully deterministic data, noise only through `B_0`: the solution stays
/// concentrated on the zero index.
pub fn deterministic_demo() -> CauchyProblem {
    let d = 4;
    let trunc = Truncation::new(2, 2).unwrap();
    let t_end = 1.0;
    let n_steps = 64;
    let nodes = grid_nodes(t_end, n_steps);
    let a = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            -1.0
        } else if i + 1 == j {
            0.2
        } else if j + 1 == i {
            -0.2
        } else {
            0.0
        }
    });
    let mut b = WickFamily::new();
    b.set(MultiIndex::zero(), LinearOp::Dense(DMatrix::from_fn(d, d, |i, j| {
        0.05 * ((i + 2 * j) % 3) as f64
    })));
    let dir = DVector::from_fn(d, |i, _| 1.0 / (1.0 + i as f64));
    let mut f = ChaosExpansion::new(Kind::Trajectory(d, nodes.len()));
    let mut fp = ChaosExpansion::new(Kind::Trajectory(d, nodes.len()));
    f.set(
        MultiIndex::zero(),
        Coeff::Traj(nodes.iter().map(|&t| &dir * t.sin()).collect()),
    )
    .unwrap();
    fp.set(
        MultiIndex::zero(),
        Coeff::Traj(nodes.iter().map(|&t| &dir * t.cos()).collect()),
    )
    .unwrap();
    let mut u0 = ChaosExpansion::new(Kind::Vector(d));
    u0.set(MultiIndex::zero(), Coeff::Vector(DVector::from_element(d, 1.0))).unwrap();
    CauchyProblem {
        a: CoordinatewiseFamily::simple(LinearOp::Dense(a)),
        b,
        u0,
        f,
        f_prime: fp,
        t_end,
        n_steps,
        p: 2.0,
        truncation: trunc,
        m_bound: 1.0,
        w_bound: 0.0,
    }
}

/// Scalar stationary demo: `A~ = 0`, `r_alpha = -(2 + |alpha|)`, one Wick
/// entry `B_{e_1} = 0.1`, forcing on the zero index. The hand recursion
/// gives `u_0 = 1/2` and `u_{e_1} = 0.05/3`.
pub fn fredholm_demo() -> StationaryProblem {
    let trunc = Truncation::new(3, 3).unwrap();
    let mut r = EigenFamily::new();
    for alpha in trunc.enumerate() {
        r.set(alpha.clone(), -(2.0 + alpha.length() as f64));
    }
    let mut b = WickFamily::new();
    b.set(MultiIndex::unit(1), LinearOp::Scalar(0.1));
    let mut f = ChaosExpansion::new(Kind::Vector(1));
    f.set(MultiIndex::zero(), Coeff::Vector(DVector::from_vec(vec![1.0]))).unwrap();
    StationaryProblem {
        a_tilde: CoordinatewiseFamily::simple(LinearOp::zero()),
        r,
        b,
        f,
        p: 2.0,
        truncation: trunc,
        k: 0.6,
    }
}

/// Stationary problem whose self-adjoint part is a polynomial in the
/// number operator, `r_alpha = -( |alpha|^2 + |alpha| + 2 )`, with a small
/// compact part and two Wick entries.
pub fn ou_polynomial() -> StationaryProblem {
    let d = 3;
    let trunc = Truncation::new(3, 3).unwrap();
    let r = stationary::ou_polynomial_eigs(-1.0, &[2.0, 1.0, 1.0], &trunc);
    let a_tilde = CoordinatewiseFamily::simple(LinearOp::Dense(DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            -0.3
        } else {
            0.1 * ((i + j) % 2) as f64
        }
    })));
    let mut b = WickFamily::new();
    b.set(MultiIndex::unit(1), LinearOp::Scalar(0.25));
    b.set(MultiIndex::unit(2), LinearOp::Diag(DVector::from_vec(vec![0.2, 0.1, 0.15])));
    let mut f = ChaosExpansion::new(Kind::Vector(d));
    for alpha in trunc.enumerate() {
        let w = alpha.weight(-1.0);
        f.set(alpha, Coeff::Vector(DVector::from_fn(d, |i, _| w / (1.0 + i as f64))))
            .unwrap();
    }
    let mut pb = StationaryProblem {
        a_tilde,
        r,
        b,
        f,
        p: 2.0,
        truncation: trunc,
        k: 0.0,
    };
    pb.k = stationary::suggest_k(&pb).expect("sign condition holds by construction");
    pb
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution;

    #[test]
    fn all_builtins_build() {
        for name in NAMES {
            build(name).unwrap();
        }
        assert!(build("nonsense").is_err());
    }

    #[test]
    fn evolution_builtins_solve_with_passing_certificates() {
        for name in NAMES {
            let BuiltinProblem::Evolution(pb) = build(name).unwrap() else { continue };
            pb.validate().unwrap();
            let sol = evolution::solve(&pb).unwrap();
            let cert = evolution::certificate(&pb, &sol).unwrap();
            assert!(cert.pass(), "{name}: {cert:?}");
        }
    }

    #[test]
    fn stationary_builtins_solve_with_passing_bounds() {
        for name in ["fredholm_demo", "ou_polynomial"] {
            let BuiltinProblem::Stationary(pb) = build(name).unwrap() else { panic!() };
            let sol = stationary::solve(&pb).unwrap();
            assert!(sol.conditions.pass, "{name}");
            let nb = stationary::norm_bound(&pb, &sol);
            assert!(nb.pass, "{name}: {nb:?}");
        }
    }

    #[test]
    fn fredholm_demo_hand_values() {
        let pb = fredholm_demo();
        let sol = stationary::solve(&pb).unwrap();
        let u0 = sol.u.get(&MultiIndex::zero()).unwrap().as_vector().unwrap()[0];
        assert!((u0 - 0.5).abs() < 1e-12);
        let u1 = sol.u.get(&MultiIndex::unit(1)).unwrap().as_vector().unwrap()[0];
        assert!((u1 - 0.05 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn langevin_matches_quadrature() {
        let pb = langevin(2.0, 4, 256);
        let sol = evolution::solve(&pb).unwrap();
        let t = 1.0;
        for k in 1..=4u32 {
            let oracle = crate::quad::adaptive_simpson(
                &|s| (-2.0 * (t - s)).exp() * hermite_fn(k, s),
                0.0,
                t,
                1e-12,
            );
            let got = sol.coeff_at(&MultiIndex::unit(k as usize), 256)[0];
            assert!((got - oracle).abs() < 1e-8, "k={k}: {got} vs {oracle}");
        }
    }
}
