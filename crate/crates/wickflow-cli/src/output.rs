//! CSV and JSON artifact writers plus the coefficient CSV reader used by
//! the `wick` subcommand. Floats are printed with the shortest
//! round-trip representation, so reruns are byte identical.

use std::fmt::Write as _;

use nalgebra::DVector;

use wickflow_core::chaos::{ChaosExpansion, Coeff, Kind};
use wickflow_core::evolution::SolutionProcess;
use wickflow_core::stationary::StationarySolution;
use wickflow_core::MultiIndex;

use crate::CliError;

/// One row per (node, index): `t,alpha,u_1..u_d,du_1..du_d`. The index
/// column is quoted because the compact form contains commas.
pub fn trajectory_csv(sol: &SolutionProcess) -> String {
    let d = sol.traj.dim();
    let mut out = String::from("t,alpha");
    for i in 1..=d {
        write!(out, ",u_{i}").unwrap();
    }
    for i in 1..=d {
        write!(out, ",du_{i}").unwrap();
    }
    out.push('\n');
    for (node, &t) in sol.grid.iter().enumerate() {
        for (alpha, _) in sol.traj.iter() {
            let u = sol.coeff_at(alpha, node);
            let du = deriv_at(sol, alpha, node, d);
            write!(out, "{t},\"{}\"", alpha.to_compact_string()).unwrap();
            for v in u.iter().chain(du.iter()) {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

fn deriv_at(sol: &SolutionProcess, alpha: &MultiIndex, node: usize, d: usize) -> DVector<f64> {
    match sol.deriv.get(alpha) {
        Some(Coeff::Traj(t)) => t[node].clone(),
        _ => DVector::zeros(d),
    }
}

/// One row per index: `alpha,u_1..u_d`.
pub fn stationary_csv(sol: &StationarySolution) -> String {
    let d = sol.u.dim();
    let mut out = String::from("alpha");
    for i in 1..=d {
        write!(out, ",u_{i}").unwrap();
    }
    out.push('\n');
    for (alpha, c) in sol.u.iter() {
        write!(out, "\"{}\"", alpha.to_compact_string()).unwrap();
        if let Coeff::Vector(v) = c {
            for x in v.iter() {
                write!(out, ",{x}").unwrap();
            }
        }
        out.push('\n');
    }
    out
}

/// Coefficient CSV for chaos expansions: `alpha,v_1..v_d`.
pub fn expansion_csv(f: &ChaosExpansion) -> String {
    let d = f.dim();
    let mut out = String::from("alpha");
    for i in 1..=d {
        write!(out, ",v_{i}").unwrap();
    }
    out.push('\n');
    for (alpha, c) in f.iter() {
        write!(out, "\"{}\"", alpha.to_compact_string()).unwrap();
        match c {
            Coeff::Scalar(x) => write!(out, ",{x}").unwrap(),
            Coeff::Vector(v) => {
                for x in v.iter() {
                    write!(out, ",{x}").unwrap();
                }
            }
            Coeff::Traj(_) => {}
        }
        out.push('\n');
    }
    out
}

fn split_row(line: &str) -> Result<(String, Vec<f64>), CliError> {
    let line = line.trim();
    let rest = line
        .strip_prefix('"')
        .ok_or_else(|| CliError::Config(format!("expected quoted index in row {line:?}")))?;
    let close = rest
        .find('"')
        .ok_or_else(|| CliError::Config(format!("unterminated index in row {line:?}")))?;
    let alpha = rest[..close].to_string();
    let tail = rest[close + 1..].trim_start_matches(',');
    let mut values = Vec::new();
    if !tail.is_empty() {
        for part in tail.split(',') {
            values.push(part.trim().parse::<f64>().map_err(|_| {
                CliError::Config(format!("bad numeric field {part:?} in row {line:?}"))
            })?);
        }
    }
    Ok((alpha, values))
}

/// Reads an expansion written by `expansion_csv`. One-dimensional data
/// loads as a scalar expansion so it is Wick-composable with anything.
pub fn read_expansion_csv(text: &str) -> Result<ChaosExpansion, CliError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config("empty coefficient CSV".into()))?;
    let d = header.split(',').count().saturating_sub(1);
    if d == 0 {
        return Err(CliError::Config("coefficient CSV header must list value columns".into()));
    }
    let kind = if d == 1 { Kind::Scalar } else { Kind::Vector(d) };
    let mut out = ChaosExpansion::new(kind);
    for line in lines {
        let (alpha, values) = split_row(line)?;
        if values.len() != d {
            return Err(CliError::Config(format!(
                "row for {alpha} has {} values, header promises {d}",
                values.len()
            )));
        }
        let idx = MultiIndex::parse_compact(&alpha)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let coeff = if d == 1 {
            Coeff::Scalar(values[0])
        } else {
            Coeff::Vector(DVector::from_vec(values))
        };
        out.set(idx, coeff).map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(out)
}
