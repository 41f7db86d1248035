use std::path::Path;

use ot_kantor::generate::{instance_rng, random_cost, random_measure};
use ot_kantor::io::{self, extended_json, plan_json, scalar_json, solution_json};
use ot_kantor::solver::oracle::{BASIS_ORACLE_MAX, PERMUTATION_ORACLE_MAX};
use ot_kantor::{
    is_coupling, oracle_basis_enumeration, oracle_permutation, solve_kantorovich, validate_metric, verify_coupling_via_test_functions,
    singleton_indicator_pairs, wasserstein_distance, DiscreteMeasure, Extended, OtError, Scalar,
    WassersteinParams,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::{FileKind, OracleChoice, Report, RunConfig, Status};

pub fn solve<T: Scalar>(path: &Path) -> Result<Report, OtError> {
    let problem = io::load_problem::<T>(path)?;
    let sol = solve_kantorovich(&problem.mu1, &problem.mu2, &problem.cost)?;
    let status = if sol.is_feasible() { Status::Ok } else { Status::Infeasible };
    Ok(Report::new(status, solution_json(&sol, &problem.mu1, &problem.mu2)))
}

pub fn distance<T: Scalar>(space: &Path, mu1: &Path, mu2: &Path, config: &RunConfig<T>) -> Result<Report, OtError> {
    let space = io::load_space::<T>(space)?;
    let mu1 = io::load_measure::<T>(mu1)?;
    let mu2 = io::load_measure::<T>(mu2)?;
    let params = WassersteinParams::new(config.p, config.tol.clone())?;
    let w = wasserstein_distance(&mu1, &mu2, &space, &params)?;
    Ok(Report::new(
        Status::Ok,
        json!({
            "mode": T::MODE.to_string(),
            "p": config.p,
            "w_p": scalar_json(&w.value),
            "transport_cost": scalar_json(&w.transport_cost),
            "plan": plan_json(&w.plan, &mu1, &mu2),
        }),
    ))
}

pub fn oracle_check<T: Scalar>(
    n: usize,
    m: usize,
    instances: usize,
    uniform: bool,
    choice: OracleChoice,
    config: &RunConfig<T>,
) -> Result<Report, OtError> {
    if n == 0 || m == 0 {
        return Err(OtError::Parameter("instance sizes must be positive".into()));
    }
    if uniform && n != m {
        return Err(OtError::Parameter("uniform instances must be square".into()));
    }
    let (use_basis, use_perm) = match choice {
        OracleChoice::Auto => (!uniform, uniform),
        OracleChoice::Basis => (true, false),
        OracleChoice::Permutation => (false, true),
        OracleChoice::Both => (true, true),
    };
    if use_perm && !uniform {
        return Err(OtError::Parameter("the permutation oracle needs --uniform".into()));
    }
    if use_basis && n + m > BASIS_ORACLE_MAX {
        return Err(OtError::Parameter(format!("{n}x{m} exceeds the basis-enumeration limit n + m ≤ {BASIS_ORACLE_MAX}")));
    }
    if use_perm && n > PERMUTATION_ORACLE_MAX {
        return Err(OtError::Parameter(format!("n = {n} exceeds the permutation-oracle limit {PERMUTATION_ORACLE_MAX}")));
    }
    let rows: Vec<Result<(Value, Option<T>), OtError>> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let mut r = instance_rng(config.seed, k);
            let (mu1, mu2) = if uniform {
                (DiscreteMeasure::uniform(n)?, DiscreteMeasure::uniform(m)?)
            } else {
                (random_measure(&mut r, n, 12, 0.15), random_measure(&mut r, m, 12, 0.15))
            };
            let c = random_cost::<T, _>(&mut r, n, m, 0, 20);
            let solver = solve_kantorovich(&mu1, &mu2, &c)?.optimal_cost;
            let mut row = json!({ "instance": k, "solver_cost": extended_json(&solver) });
            let mut worst: Option<T> = Some(T::zero());
            let mut compare = |name: &str, cost: Extended<T>| {
                row[name] = extended_json(&cost);
                let gap = match (&solver, &cost) {
                    (Extended::Finite(a), Extended::Finite(b)) => Some((a.clone() - b.clone()).abs_val()),
                    (Extended::PosInf, Extended::PosInf) => Some(T::zero()),
                    _ => None,
                };
                worst = match (worst.take(), gap) {
                    (Some(w), Some(g)) => Some(T::max_val(w, g)),
                    _ => None,
                };
            };
            if use_basis {
                compare("basis_cost", oracle_basis_enumeration(&mu1, &mu2, &c)?.optimal_cost);
            }
            if use_perm {
                compare("permutation_cost", oracle_permutation(&mu1, &mu2, &c)?.optimal_cost);
            }
            Ok((row, worst))
        })
        .collect();
    let mut table = Vec::with_capacity(instances);
    let mut max_gap = Some(T::zero());
    for row in rows {
        let (row, gap) = row?;
        table.push(row);
        max_gap = match (max_gap, gap) {
            (Some(a), Some(b)) => Some(T::max_val(a, b)),
            _ => None,
        };
    }
    let passed = max_gap.as_ref().is_some_and(|g| *g <= config.tol);
    let mut oracles = Vec::new();
    if use_basis {
        oracles.push("basis");
    }
    if use_perm {
        oracles.push("permutation");
    }
    Ok(Report::verdict(
        passed,
        json!({
            "mode": T::MODE.to_string(),
            "size": [n, m],
            "uniform": uniform,
            "oracles": oracles,
            "instances": table,
            "max_discrepancy": max_gap.map_or(Value::String("+inf".into()), |g| scalar_json(&g)),
            "passed": passed,
        }),
    ))
}

/// Parse failures are input errors; well-formed content that breaks an invariant is a verification failure.
fn invariant_failure(e: OtError) -> Result<Report, OtError> {
    match e {
        OtError::Parse { .. } | OtError::Io { .. } => Err(e),
        other => Ok(Report::verdict(false, json!({ "valid": false, "error": other.to_string() }))),
    }
}

pub fn validate<T: Scalar>(kind: FileKind, path: &Path, config: &RunConfig<T>) -> Result<Report, OtError> {
    let value = io::read_json(path)?;
    match kind {
        FileKind::Space => validate_space::<T>(&value, config),
        FileKind::Measure => match io::measure_from_json::<T>(&value) {
            Ok(mu) => Ok(Report::verdict(
                true,
                json!({ "valid": true, "atoms": mu.len(), "total_mass": scalar_json(&mu.total_mass()), "space": mu.space_id() }),
            )),
            Err(e) => invariant_failure(e),
        },
        FileKind::Plan => {
            let file = match io::load_plan::<T>(path) {
                Ok(file) => file,
                Err(e) => return invariant_failure(e),
            };
            let (Some(mu1), Some(mu2)) = (&file.mu1, &file.mu2) else {
                return Ok(Report::verdict(
                    true,
                    json!({ "valid": true, "shape": [file.plan.rows(), file.plan.cols()], "total_mass": scalar_json(&file.plan.total_mass()) }),
                ));
            };
            Ok(coupling_report(&file.plan, mu1, mu2, &config.tol)?)
        }
    }
}

/// Marginal check plus the singleton-indicator cross-check of one claimed coupling.
pub fn coupling_report<T: Scalar>(
    plan: &ot_kantor::TransportPlan<T>,
    mu1: &DiscreteMeasure<T>,
    mu2: &DiscreteMeasure<T>,
    tol: &T,
) -> Result<Report, OtError> {
    let report = is_coupling(plan, mu1, mu2, tol)?;
    let pairs = singleton_indicator_pairs(plan.rows(), plan.cols());
    let test_failures = verify_coupling_via_test_functions(plan, mu1, mu2, &pairs, tol)?;
    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|v| json!({ "constraint": v.constraint.to_string(), "expected": scalar_json(&v.expected), "actual": scalar_json(&v.actual) }))
        .collect();
    let valid = report.is_valid();
    Ok(Report::verdict(
        valid,
        json!({
            "valid": valid,
            "violations": violations,
            "test_function_failures": test_failures.len(),
            "characterizations_agree": valid == test_failures.is_empty(),
        }),
    ))
}

fn validate_space<T: Scalar>(value: &Value, config: &RunConfig<T>) -> Result<Report, OtError> {
    let dist: Vec<Vec<T>> = if let Some(dist) = value.get("dist") {
        io::parse_matrix(dist, "dist")?
    } else {
        // Point clouds are metric by construction; building one surfaces coincident points.
        match io::space_from_json::<T>(value) {
            Ok(space) => space.distances().to_vec(),
            Err(e) => return invariant_failure(e),
        }
    };
    let violations = match validate_metric(&dist, &config.tol) {
        Ok(v) => v,
        Err(e @ OtError::Shape(_)) => return invariant_failure(e),
        Err(e) => return Err(e),
    };
    let listed: Vec<Value> = violations
        .iter()
        .map(|v| json!({ "axiom": v.axiom.to_string(), "indices": v.indices, "excess": scalar_json(&v.excess) }))
        .collect();
    Ok(Report::verdict(violations.is_empty(), json!({ "valid": violations.is_empty(), "points": dist.len(), "violations": listed })))
}
