//! JSON problem configs. Every struct rejects unknown fields so that a
//! typo fails loudly with exit code 2 instead of silently running a
//! different problem.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use wickflow_core::builtins::{self, BuiltinProblem};
use wickflow_core::calculus::EigenFamily;
use wickflow_core::chaos::hermite::{hermite_fn, hermite_fn_deriv};
use wickflow_core::evolution::CauchyProblem;
use wickflow_core::stationary::{self, StationaryProblem};
use wickflow_core::{
    ChaosExpansion, Coeff, CoordinatewiseFamily, Kind, LinearOp, MultiIndex, Truncation,
    WickFamily,
};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Builtin(BuiltinSpec),
    Evolution(EvolutionSpec),
    Stationary(StationarySpec),
    RandomEvolution(RandomEvolutionSpec),
    RandomStationary(RandomStationarySpec),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinSpec {
    pub name: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSpec {
    pub n: u32,
    pub m: u32,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Scalar { value: f64 },
    Diag { values: Vec<f64> },
    Dense { rows: Vec<Vec<f64>> },
    Laplacian1dPeriodic { dim: usize, h: f64 },
    Shift1dPeriodic { dim: usize, h: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorFamilySpec {
    Simple(OperatorSpec),
    PerIndex(BTreeMap<String, OperatorSpec>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WickSpec {
    /// Constant operators keyed by compact multi-index strings like `[1]`.
    #[serde(default)]
    pub entries: BTreeMap<String, OperatorSpec>,
    /// Time-varying entries `B_{e_k}(t) = scale xi_k(t) Id`, k up to `modes`.
    #[serde(default)]
    pub white_noise_time: Option<NoiseSpec>,
    /// Spatial entries `B_{e_k} = scale diag(xi_k(x_j))` on the grid
    /// `x_j = x0 + j dx`.
    #[serde(default)]
    pub white_noise_space: Option<SpaceNoiseSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub modes: u32,
    #[serde(default = "one")]
    pub scale: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceNoiseSpec {
    pub modes: u32,
    pub x0: f64,
    pub dx: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    /// Constant-in-time coefficients keyed by compact multi-index strings.
    #[serde(default)]
    pub constant: BTreeMap<String, Vec<f64>>,
    /// First-order forcing `f_{e_k}(t) = scale xi_k(t) (1,...,1)`.
    #[serde(default)]
    pub white_noise_time: Option<NoiseSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    pub a: OperatorFamilySpec,
    #[serde(default)]
    pub b: WickSpec,
    pub u0: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub f: ForcingSpec,
    pub t_end: f64,
    pub n_steps: usize,
    pub p: f64,
    pub truncation: TruncationSpec,
    pub m_bound: f64,
    pub w_bound: f64,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EigenSpec {
    PerIndex(BTreeMap<String, f64>),
    /// `r_alpha = c P(|alpha|)` with `P` given by its coefficient list.
    OuPolynomial { c: f64, coeffs: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySpec {
    pub a_tilde: OperatorFamilySpec,
    pub r: EigenSpec,
    #[serde(default)]
    pub b: WickSpec,
    pub f: BTreeMap<String, Vec<f64>>,
    pub p: f64,
    pub truncation: TruncationSpec,
    /// Omit to derive the constant automatically with 5% headroom.
    #[serde(default)]
    pub k: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomEvolutionSpec {
    pub seed: u64,
    #[serde(default = "default_dim")]
    pub d: usize,
    #[serde(default = "default_order")]
    pub n: u32,
    #[serde(default = "default_modes")]
    pub m: u32,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomStationarySpec {
    pub seed: u64,
    #[serde(default = "default_dim_st")]
    pub d: usize,
    #[serde(default = "default_order")]
    pub n: u32,
    #[serde(default = "default_order")]
    pub m: u32,
}

fn default_dim() -> usize {
    4
}
fn default_dim_st() -> usize {
    3
}
fn default_order() -> u32 {
    3
}
fn default_modes() -> u32 {
    4
}
fn default_steps() -> usize {
    64
}

fn parse_index(s: &str) -> Result<MultiIndex, CliError> {
    MultiIndex::parse_compact(s).map_err(|e| CliError::Config(e.to_string()))
}

fn finite(x: f64, what: &str) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Config(format!("{what} must be finite, got {x}")))
    }
}

impl OperatorSpec {
    fn build(&self, d: usize) -> Result<LinearOp, CliError> {
        let op = match self {
            OperatorSpec::Scalar { value } => {
                LinearOp::Scalar(finite(*value, "scalar operator")?)
            }
            OperatorSpec::Diag { values } => {
                if values.len() != d {
                    return Err(CliError::Config(format!(
                        "diagonal operator has {} entries, state dimension is {d}",
                        values.len()
                    )));
                }
                for v in values {
                    finite(*v, "diagonal entry")?;
                }
                LinearOp::Diag(DVector::from_vec(values.clone()))
            }
            OperatorSpec::Dense { rows } => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(CliError::Config(format!(
                        "dense operator must be {d}x{d}"
                    )));
                }
                for r in rows {
                    for v in r {
                        finite(*v, "matrix entry")?;
                    }
                }
                LinearOp::Dense(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
            }
            OperatorSpec::Laplacian1dPeriodic { dim, h } => {
                check_grid_op(*dim, *h, d)?;
                LinearOp::laplacian_1d_periodic(*dim, *h)
            }
            OperatorSpec::Shift1dPeriodic { dim, h } => {
                check_grid_op(*dim, *h, d)?;
                LinearOp::shift_1d_periodic(*dim, *h)
            }
        };
        Ok(op)
    }
}

fn check_grid_op(dim: usize, h: f64, d: usize) -> Result<(), CliError> {
    if dim != d {
        return Err(CliError::Config(format!(
            "grid operator dimension {dim} does not match state dimension {d}"
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(CliError::Config(format!("grid spacing must be positive, got {h}")));
    }
    Ok(())
}

impl OperatorFamilySpec {
    fn build(&self, d: usize, t: &Truncation) -> Result<CoordinatewiseFamily, CliError> {
        match self {
            OperatorFamilySpec::Simple(op) => {
                Ok(CoordinatewiseFamily::simple(op.build(d)?))
            }
            OperatorFamilySpec::PerIndex(map) => {
                let mut built = BTreeMap::new();
                for (key, op) in map {
                    built.insert(parse_index(key)?, op.build(d)?);
                }
                for alpha in t.enumerate() {
                    if !built.contains_key(&alpha) {
                        return Err(CliError::Config(format!(
                            "per-index operator family misses {alpha} inside the truncation"
                        )));
                    }
                }
                Ok(CoordinatewiseFamily::from_fn(t, |alpha| {
                    built.get(alpha).cloned().expect("coverage checked above")
                }))
            }
        }
    }
}

impl WickSpec {
    fn build(&self, d: usize, nodes: Option<&[f64]>) -> Result<WickFamily, CliError> {
        let mut fam = WickFamily::new();
        for (key, op) in &self.entries {
            fam.set(parse_index(key)?, op.build(d)?);
        }
        if let Some(space) = &self.white_noise_space {
            for k in 1..=space.modes {
                let diag = DVector::from_iterator(
                    d,
                    (0..d).map(|j| {
                        space.scale * hermite_fn(k, space.x0 + space.dx * j as f64)
                    }),
                );
                fam.set(MultiIndex::unit(k as usize), LinearOp::Diag(diag));
            }
        }
        if let Some(time) = &self.white_noise_time {
            let Some(nodes) = nodes else {
                return Err(CliError::Config(
                    "time-varying noise requires an evolution problem".into(),
                ));
            };
            for k in 1..=time.modes {
                let vals = nodes
                    .iter()
                    .map(|&t| LinearOp::Scalar(time.scale * hermite_fn(k, t)))
                    .collect();
                let ders = nodes
                    .iter()
                    .map(|&t| LinearOp::Scalar(time.scale * hermite_fn_deriv(k, t)))
                    .collect();
                fam.set_varying(MultiIndex::unit(k as usize), vals, ders)
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
        }
        Ok(fam)
    }
}

fn build_vector_expansion(
    map: &BTreeMap<String, Vec<f64>>,
    d: usize,
) -> Result<ChaosExpansion, CliError> {
    let mut out = ChaosExpansion::new(Kind::Vector(d));
    for (key, values) in map {
        if values.len() != d {
            return Err(CliError::Config(format!(
                "coefficient at {key} has {} entries, expected {d}",
                values.len()
            )));
        }
        for v in values {
            finite(*v, "coefficient entry")?;
        }
        out.set(parse_index(key)?, Coeff::Vector(DVector::from_vec(values.clone())))
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(out)
}

impl ForcingSpec {
    fn build(
        &self,
        d: usize,
        nodes: &[f64],
    ) -> Result<(ChaosExpansion, ChaosExpansion), CliError> {
        let n = nodes.len();
        let mut f = ChaosExpansion::new(Kind::Trajectory(d, n));
        let mut fp = ChaosExpansion::new(Kind::Trajectory(d, n));
        for (key, values) in &self.constant {
            if values.len() != d {
                return Err(CliError::Config(format!(
                    "forcing at {key} has {} entries, expected {d}",
                    values.len()
                )));
            }
            let v = DVector::from_vec(values.clone());
            f.set(parse_index(key)?, Coeff::Traj(vec![v; n]))
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(noise) = &self.white_noise_time {
            for k in 1..=noise.modes {
                let vals = nodes
                    .iter()
                    .map(|&t| DVector::from_element(d, noise.scale * hermite_fn(k, t)))
                    .collect();
                let ders = nodes
                    .iter()
                    .map(|&t| DVector::from_element(d, noise.scale * hermite_fn_deriv(k, t)))
                    .collect();
                let idx = MultiIndex::unit(k as usize);
                f.set(idx.clone(), Coeff::Traj(vals))
                    .map_err(|e| CliError::Config(e.to_string()))?;
                fp.set(idx, Coeff::Traj(ders))
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
        }
        Ok((f, fp))
    }
}

impl TruncationSpec {
    pub fn build(&self) -> Result<Truncation, CliError> {
        Truncation::new(self.n, self.m).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn state_dim(u0: &BTreeMap<String, Vec<f64>>) -> Result<usize, CliError> {
    u0.values()
        .next()
        .map(|v| v.len())
        .filter(|&d| d > 0)
        .ok_or_else(|| CliError::Config("state dimension undetermined: give at least one nonempty coefficient".into()))
}

impl EvolutionSpec {
    pub fn build(&self) -> Result<CauchyProblem, CliError> {
        let d = state_dim(&self.u0)?;
        if !(self.t_end.is_finite() && self.t_end > 0.0) || self.n_steps == 0 {
            return Err(CliError::Config("need t_end > 0 and n_steps >= 1".into()));
        }
        finite(self.p, "p")?;
        finite(self.m_bound, "m_bound")?;
        finite(self.w_bound, "w_bound")?;
        let truncation = self.truncation.build()?;
        let h = self.t_end / self.n_steps as f64;
        let nodes: Vec<f64> = (0..=self.n_steps).map(|i| i as f64 * h).collect();
        let (f, f_prime) = self.f.build(d, &nodes)?;
        let pb = CauchyProblem {
            a: self.a.build(d, &truncation)?,
            b: self.b.build(d, Some(&nodes))?,
            u0: build_vector_expansion(&self.u0, d)?,
            f,
            f_prime,
            t_end: self.t_end,
            n_steps: self.n_steps,
            p: self.p,
            truncation,
            m_bound: self.m_bound,
            w_bound: self.w_bound,
        };
        pb.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(pb)
    }
}

impl StationarySpec {
    pub fn build(&self) -> Result<StationaryProblem, CliError> {
        let d = state_dim(&self.f)?;
        finite(self.p, "p")?;
        let truncation = self.truncation.build()?;
        let r = match &self.r {
            EigenSpec::PerIndex(map) => {
                let mut fam = EigenFamily::new();
                for (key, val) in map {
                    fam.set(parse_index(key)?, finite(*val, "eigenvalue")?);
                }
                fam
            }
            EigenSpec::OuPolynomial { c, coeffs } => {
                stationary::ou_polynomial_eigs(*c, coeffs, &truncation)
            }
        };
        let mut pb = StationaryProblem {
            a_tilde: self.a_tilde.build(d, &truncation)?,
            r,
            b: self.b.build(d, None)?,
            f: build_vector_expansion(&self.f, d)?,
            p: self.p,
            truncation,
            k: 0.0,
        };
        pb.k = match self.k {
            Some(k) if k.is_finite() && k > 0.0 => k,
            Some(k) => return Err(CliError::Config(format!("K must be positive, got {k}"))),
            None => stationary::suggest_k(&pb)
                .map_err(|e| CliError::Hypothesis(e.to_string()))?,
        };
        Ok(pb)
    }
}

impl RandomEvolutionSpec {
    pub fn build(&self) -> Result<CauchyProblem, CliError> {
        Ok(random_evolution(self.seed, self.d, self.n, self.m, self.n_steps))
    }
}

impl RandomStationarySpec {
    pub fn build(&self) -> Result<StationaryProblem, CliError> {
        Ok(random_stationary(self.seed, self.d, self.n, self.m))
    }
}

/// Random well-posed evolution problem. The drift is diagonally dominant
/// and its log norm is folded into the growth bound, so the semigroup
/// estimate holds with the emitted constants.
pub fn random_evolution(seed: u64, d: usize, n: u32, m: u32, n_steps: usize) -> CauchyProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trunc = Truncation::new(n, m).expect("positive truncation parameters");
    let t_end = 1.0;
    let a = DMatrix::from_fn(d, d, |i, j| {
        let off: f64 = rng.gen_range(-0.1..0.1);
        if i == j {
            -1.2 + off
        } else {
            off
        }
    });
    let sym = (&a + a.transpose()) * 0.5;
    let mu = sym
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let w_bound = mu.max(0.0);
    let mut b = WickFamily::new();
    b.set(
        MultiIndex::zero(),
        LinearOp::Dense(DMatrix::from_fn(d, d, |_, _| rng.gen_range(-0.05..0.05))),
    );
    for k in 1..=2usize.min(m as usize) {
        b.set(
            MultiIndex::unit(k),
            LinearOp::Dense(DMatrix::from_fn(d, d, |_, _| rng.gen_range(-0.15..0.15))),
        );
    }
    let mut u0 = ChaosExpansion::new(Kind::Vector(d));
    let mut f = ChaosExpansion::new(Kind::Trajectory(d, n_steps + 1));
    for alpha in trunc.enumerate() {
        let scale = alpha.weight(-1.0);
        u0.set(
            alpha.clone(),
            Coeff::Vector(DVector::from_fn(d, |_, _| scale * rng.gen_range(-1.0..1.0))),
        )
        .expect("vector kind");
        let v = DVector::from_fn(d, |_, _| scale * rng.gen_range(-1.0..1.0));
        f.set(alpha, Coeff::Traj(vec![v; n_steps + 1])).expect("trajectory kind");
    }
    CauchyProblem {
        a: CoordinatewiseFamily::simple(LinearOp::Dense(a)),
        b,
        u0,
        f,
        f_prime: ChaosExpansion::new(Kind::Trajectory(d, n_steps + 1)),
        t_end,
        n_steps,
        p: 2.0,
        truncation: trunc,
        m_bound: 1.0,
        w_bound,
    }
}

/// Random stationary problem satisfying all four hypotheses by
/// construction; `K` is derived with the standard headroom.
pub fn random_stationary(seed: u64, d: usize, n: u32, m: u32) -> StationaryProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trunc = Truncation::new(n, m).expect("positive truncation parameters");
    let a_tilde = {
        let mats: BTreeMap<MultiIndex, LinearOp> = trunc
            .enumerate()
            .into_iter()
            .map(|alpha| {
                let op = LinearOp::Dense(DMatrix::from_fn(d, d, |_, _| {
                    rng.gen_range(-0.1..0.1)
                }));
                (alpha, op)
            })
            .collect();
        CoordinatewiseFamily::from_fn(&trunc, |alpha| {
            mats.get(alpha).cloned().expect("full coverage")
        })
    };
    let mut r = EigenFamily::new();
    for alpha in trunc.enumerate() {
        r.set(
            alpha.clone(),
            -(2.5 + alpha.length() as f64 + rng.gen_range(0.0..0.3)),
        );
    }
    let mut b = WickFamily::new();
    b.set(MultiIndex::zero(), LinearOp::Scalar(rng.gen_range(-0.1..0.1)));
    for k in 1..=2usize.min(m as usize) {
        b.set(
            MultiIndex::unit(k),
            LinearOp::Dense(DMatrix::from_fn(d, d, |_, _| rng.gen_range(-0.2..0.2))),
        );
    }
    let mut f = ChaosExpansion::new(Kind::Vector(d));
    for alpha in trunc.enumerate() {
        f.set(
            alpha,
            Coeff::Vector(DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0))),
        )
        .expect("vector kind");
    }
    let mut pb = StationaryProblem {
        a_tilde,
        r,
        b,
        f,
        p: 3.0,
        truncation: trunc,
        k: 0.0,
    };
    pb.k = stationary::suggest_k(&pb).expect("sign condition holds by construction");
    pb
}

pub enum BuiltProblem {
    Evolution(CauchyProblem),
    Stationary(StationaryProblem),
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<BuiltProblem, CliError> {
        match &self.problem {
            ProblemSpec::Builtin(spec) => match builtins::build(&spec.name) {
                Ok(BuiltinProblem::Evolution(pb)) => Ok(BuiltProblem::Evolution(pb)),
                Ok(BuiltinProblem::Stationary(pb)) => Ok(BuiltProblem::Stationary(pb)),
                Err(e) => Err(CliError::Config(e.to_string())),
            },
            ProblemSpec::Evolution(spec) => Ok(BuiltProblem::Evolution(spec.build()?)),
            ProblemSpec::Stationary(spec) => Ok(BuiltProblem::Stationary(spec.build()?)),
            ProblemSpec::RandomEvolution(spec) => Ok(BuiltProblem::Evolution(spec.build()?)),
            ProblemSpec::RandomStationary(spec) => Ok(BuiltProblem::Stationary(spec.build()?)),
        }
    }
}
