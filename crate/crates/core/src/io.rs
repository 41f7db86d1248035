//! JSON file formats for spaces, measures, plans and problems.
//!
//! Numbers are accepted as JSON numbers or strings (`"0.25"`, `"1/4"`,
//! `"+inf"` where infinities are allowed). In rational mode decimal literals
//! are read exactly. Output renders every scalar as a string: `"p/q"` in
//! rational mode, 17 significant digits in float mode.
//!
//! Space file: `{"id"?, "labels"?, "dist": [[..]]}` or
//! `{"id"?, "labels"?, "points": [[..]], "norm"?: p | "inf"}` (default ℓ²).
//! Measure file: `[w..]` or `{"space"?, "weights": [w..]}`.
//! Plan file: `[[..]]` or `{"matrix": [[..]], "mu1"?, "mu2"?}`.
//! Problem file: `{"mu1", "mu2", "cost": [[..]]}` or
//! `{"mu1", "mu2", "space", "p"?}`, with optional lower bound `"a1"`, `"a2"`.
//! Wherever a measure or space is expected, a string is read as a path
//! relative to the enclosing file.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::coupling::TransportPlan;
use crate::error::{OtError, Result};
use crate::measure::DiscreteMeasure;
use crate::scalar::{Extended, Scalar};
use crate::solver::OTSolution;
use crate::space::{power_cost, CostMatrix, FiniteMetricSpace, NormOrder};

pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| OtError::Io { path: path.display().to_string(), message: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| OtError::parse(path.display().to_string(), e.to_string()))
}

/// Pretty-printed with a trailing newline; key order is sorted, so output is deterministic.
pub fn to_json_string(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    text
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    fs::write(path, to_json_string(value)).map_err(|e| OtError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name).ok_or_else(|| OtError::parse(name, "missing"))
}

fn as_object<'a>(v: &'a Value, name: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| OtError::parse(name, "expected an object"))
}

fn as_array<'a>(v: &'a Value, name: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| OtError::parse(name, "expected an array"))
}

fn literal(v: &Value, name: &str) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.trim().to_string()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(OtError::parse(name, "expected a number or numeric string")),
    }
}

pub fn parse_scalar<T: Scalar>(v: &Value, name: &str) -> Result<T> {
    let text = literal(v, name)?;
    T::parse_literal(&text).ok_or_else(|| OtError::parse(name, format!("`{text}` is not a finite number")))
}

pub fn parse_extended<T: Scalar>(v: &Value, name: &str) -> Result<Extended<T>> {
    let text = literal(v, name)?;
    Extended::parse_literal(&text).ok_or_else(|| OtError::parse(name, format!("`{text}` is not a number or +inf")))
}

pub fn parse_vector<T: Scalar>(v: &Value, name: &str) -> Result<Vec<T>> {
    as_array(v, name)?.iter().enumerate().map(|(i, x)| parse_scalar(x, &format!("{name}[{i}]"))).collect()
}

pub fn parse_matrix<T: Scalar>(v: &Value, name: &str) -> Result<Vec<Vec<T>>> {
    as_array(v, name)?.iter().enumerate().map(|(i, row)| parse_vector(row, &format!("{name}[{i}]"))).collect()
}

fn parse_extended_matrix<T: Scalar>(v: &Value, name: &str) -> Result<Vec<Vec<Extended<T>>>> {
    as_array(v, name)?
        .iter()
        .enumerate()
        .map(|(i, row)| {
            as_array(row, &format!("{name}[{i}]"))?
                .iter()
                .enumerate()
                .map(|(j, x)| parse_extended(x, &format!("{name}[{i}][{j}]")))
                .collect()
        })
        .collect()
}

/// Follows a string value to the JSON file it names.
fn inline_or_file(v: &Value, base: &Path) -> Result<(Value, PathBuf)> {
    match v {
        Value::String(s) => {
            let path = base.join(s);
            let inner = read_json(&path)?;
            Ok((inner, base_dir(&path)))
        }
        other => Ok((other.clone(), base.to_path_buf())),
    }
}

fn annotate(err: OtError, name: &str) -> OtError {
    match err {
        OtError::Parse { field, message } => OtError::Parse { field: format!("{name}.{field}"), message },
        other => other,
    }
}

pub fn space_from_json<T: Scalar>(v: &Value) -> Result<FiniteMetricSpace<T>> {
    let obj = as_object(v, "space")?;
    let mut space = if let Some(dist) = obj.get("dist") {
        let dist = parse_matrix::<T>(dist, "dist")?;
        let labels = (0..dist.len()).map(|i| i.to_string()).collect();
        FiniteMetricSpace::new(labels, dist, &T::default_tol())?
    } else if let Some(points) = obj.get("points") {
        let points = parse_matrix::<T>(points, "points")?;
        let norm = match obj.get("norm") {
            None => NormOrder::Finite(2.0),
            Some(Value::String(s)) if matches!(s.as_str(), "inf" | "+inf" | "infinity") => NormOrder::Infinity,
            Some(Value::Number(n)) => NormOrder::new(n.as_f64().unwrap_or(f64::NAN)).map_err(|e| OtError::parse("norm", e.to_string()))?,
            Some(_) => return Err(OtError::parse("norm", "expected a number ≥ 1 or \"inf\"")),
        };
        FiniteMetricSpace::from_point_cloud(&points, norm)?
    } else {
        return Err(OtError::parse("dist", "missing (or give \"points\")"));
    };
    if let Some(labels) = obj.get("labels") {
        let labels = as_array(labels, "labels")?
            .iter()
            .map(|l| l.as_str().map(str::to_string).ok_or_else(|| OtError::parse("labels", "expected strings")))
            .collect::<Result<Vec<_>>>()?;
        space = space.with_labels(labels)?;
    }
    if let Some(id) = obj.get("id") {
        space = space.with_id(id.as_str().ok_or_else(|| OtError::parse("id", "expected a string"))?);
    }
    Ok(space)
}

pub fn measure_from_json<T: Scalar>(v: &Value) -> Result<DiscreteMeasure<T>> {
    match v {
        Value::Array(_) => DiscreteMeasure::new(parse_vector(v, "weights")?),
        Value::Object(obj) => {
            let mu = DiscreteMeasure::new(parse_vector(field(obj, "weights")?, "weights")?)?;
            match obj.get("space") {
                Some(Value::String(id)) => Ok(mu.with_space(id.clone())),
                Some(_) => Err(OtError::parse("space", "expected a space id string")),
                None => Ok(mu),
            }
        }
        _ => Err(OtError::parse("weights", "expected an array or an object")),
    }
}

/// A plan together with the marginals it claims to couple, when the file names them.
#[derive(Clone, Debug)]
pub struct PlanFile<T> {
    pub plan: TransportPlan<T>,
    pub mu1: Option<DiscreteMeasure<T>>,
    pub mu2: Option<DiscreteMeasure<T>>,
}

fn plan_from_value<T: Scalar>(v: &Value, base: &Path) -> Result<PlanFile<T>> {
    match v {
        Value::Array(_) => Ok(PlanFile { plan: TransportPlan::new(parse_matrix(v, "matrix")?)?, mu1: None, mu2: None }),
        Value::Object(obj) => {
            let plan = TransportPlan::new(parse_matrix(field(obj, "matrix")?, "matrix")?)?;
            let marginal = |name: &str| -> Result<Option<DiscreteMeasure<T>>> {
                obj.get(name)
                    .map(|m| {
                        let (m, _) = inline_or_file(m, base)?;
                        measure_from_json(&m).map_err(|e| annotate(e, name))
                    })
                    .transpose()
            };
            Ok(PlanFile { plan, mu1: marginal("mu1")?, mu2: marginal("mu2")? })
        }
        _ => Err(OtError::parse("matrix", "expected an array or an object")),
    }
}

pub fn plan_from_json<T: Scalar>(v: &Value) -> Result<PlanFile<T>> {
    plan_from_value(v, Path::new(""))
}

/// Marginals and cost of one transport problem.
#[derive(Clone, Debug)]
pub struct Problem<T> {
    pub mu1: DiscreteMeasure<T>,
    pub mu2: DiscreteMeasure<T>,
    pub cost: CostMatrix<T>,
    pub space: Option<FiniteMetricSpace<T>>,
}

fn problem_from_value<T: Scalar>(v: &Value, base: &Path) -> Result<Problem<T>> {
    let obj = as_object(v, "problem")?;
    let measure = |name: &str| -> Result<DiscreteMeasure<T>> {
        let (m, _) = inline_or_file(field(obj, name)?, base)?;
        measure_from_json(&m).map_err(|e| annotate(e, name))
    };
    let mu1 = measure("mu1")?;
    let mu2 = measure("mu2")?;
    let (mut cost, space) = if let Some(c) = obj.get("cost") {
        (CostMatrix::new(parse_extended_matrix(c, "cost")?)?, None)
    } else if let Some(s) = obj.get("space") {
        let (s, _) = inline_or_file(s, base)?;
        let space = space_from_json::<T>(&s).map_err(|e| annotate(e, "space"))?;
        let p = match obj.get("p") {
            None => 1.0,
            Some(p) => p.as_f64().ok_or_else(|| OtError::parse("p", "expected a number"))?,
        };
        (power_cost(&space, p)?, Some(space))
    } else {
        return Err(OtError::parse("cost", "missing (or give \"space\")"));
    };
    match (obj.get("a1"), obj.get("a2")) {
        (None, None) => {}
        (Some(a1), Some(a2)) => cost = cost.with_lower_bound(parse_vector(a1, "a1")?, parse_vector(a2, "a2")?)?,
        (None, Some(_)) => return Err(OtError::parse("a1", "missing while a2 is given")),
        (Some(_), None) => return Err(OtError::parse("a2", "missing while a1 is given")),
    }
    Ok(Problem { mu1, mu2, cost, space })
}

pub fn problem_from_json<T: Scalar>(v: &Value) -> Result<Problem<T>> {
    problem_from_value(v, Path::new(""))
}

pub fn load_space<T: Scalar>(path: &Path) -> Result<FiniteMetricSpace<T>> {
    space_from_json(&read_json(path)?)
}

pub fn load_measure<T: Scalar>(path: &Path) -> Result<DiscreteMeasure<T>> {
    measure_from_json(&read_json(path)?)
}

pub fn load_plan<T: Scalar>(path: &Path) -> Result<PlanFile<T>> {
    plan_from_value(&read_json(path)?, &base_dir(path))
}

pub fn load_problem<T: Scalar>(path: &Path) -> Result<Problem<T>> {
    problem_from_value(&read_json(path)?, &base_dir(path))
}

pub fn scalar_json<T: Scalar>(x: &T) -> Value {
    Value::String(x.render())
}

pub fn extended_json<T: Scalar>(x: &Extended<T>) -> Value {
    Value::String(x.render())
}

pub fn vector_json<T: Scalar>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(scalar_json).collect())
}

pub fn matrix_json<T: Scalar>(rows: &[Vec<T>]) -> Value {
    Value::Array(rows.iter().map(|r| vector_json(r)).collect())
}

pub fn measure_json<T: Scalar>(mu: &DiscreteMeasure<T>) -> Value {
    let mut obj = Map::new();
    obj.insert("weights".into(), vector_json(mu.weights()));
    if let Some(id) = mu.space_id() {
        obj.insert("space".into(), Value::String(id.into()));
    }
    Value::Object(obj)
}

/// Plan file whose marginals are embedded, so it reloads as a self-contained coupling claim.
pub fn plan_json<T: Scalar>(plan: &TransportPlan<T>, mu1: &DiscreteMeasure<T>, mu2: &DiscreteMeasure<T>) -> Value {
    json!({
        "matrix": matrix_json(&plan.to_rows()),
        "mu1": measure_json(mu1),
        "mu2": measure_json(mu2),
    })
}

pub fn solution_json<T: Scalar>(sol: &OTSolution<T>, mu1: &DiscreteMeasure<T>, mu2: &DiscreteMeasure<T>) -> Value {
    let infeasibility = match &sol.infeasibility {
        None => Value::Null,
        Some(cut) => json!({
            "rows": cut.rows,
            "reachable_cols": cut.reachable_cols,
            "row_mass": scalar_json(&cut.row_mass),
            "reachable_col_mass": scalar_json(&cut.reachable_col_mass),
        }),
    };
    json!({
        "mode": sol.mode.to_string(),
        "optimal_cost": extended_json(&sol.optimal_cost),
        "iterations": sol.iterations,
        "feasible": sol.is_feasible(),
        "plan": plan_json(&sol.plan, mu1, mu2),
        "infeasibility": infeasibility,
    })
}
