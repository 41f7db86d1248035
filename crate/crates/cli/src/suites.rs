//! Property batteries behind `verify <suite>`.

use std::path::Path;

use ot_kantor::generate::{instance_rng, random_cloud, random_cost, random_mask, random_measure, random_plan, random_subset, SeededRng};
use ot_kantor::io::{self, extended_json, scalar_json};
use ot_kantor::{
    check_moreau_yosida_properties, glue, glued_marginal_13, is_coupling, liminf_cost_check, marginals, metric_axiom_suite,
    singleton_indicator_pairs, solve_kantorovich, tail_mass_bound_check, triangle_witness, verify_coupling_via_test_functions,
    verify_restriction_optimality, CostMatrix, DiscreteMeasure, Extended, ExtendedFunction, NormOrder, OtError, Scalar, TransportPlan,
    WassersteinParams,
};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::commands::coupling_report;
use crate::{Report, RunConfig, Status, Suite};

pub struct Inputs<'a> {
    pub cases: Option<usize>,
    pub plan: Option<&'a Path>,
    pub glue: Option<(&'a Path, &'a Path)>,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Coupling => "coupling",
            Suite::Metric => "metric",
            Suite::Glue => "glue",
            Suite::Restriction => "restriction",
            Suite::MoreauYosida => "moreau-yosida",
            Suite::Liminf => "liminf",
            Suite::Tail => "tail",
        }
    }

    fn default_cases(self) -> usize {
        match self {
            Suite::Metric => 10,
            Suite::Liminf => 40,
            Suite::Coupling | Suite::Tail => 500,
            _ => 200,
        }
    }
}

/// One generated case: `None` on success, otherwise a counterexample description.
type Case = Result<Option<Value>, OtError>;

fn battery<F>(cases: usize, seed: u64, run: F) -> Result<Vec<Value>, OtError>
where
    F: Fn(usize, &mut SeededRng) -> Case + Sync,
{
    let outcomes: Vec<Case> = (0..cases).into_par_iter().map(|k| run(k, &mut instance_rng(seed, k))).collect();
    let mut failures = Vec::new();
    for outcome in outcomes {
        if let Some(f) = outcome? {
            failures.push(f);
        }
    }
    Ok(failures)
}

pub fn verify<T: Scalar>(suite: Suite, inputs: &Inputs, config: &RunConfig<T>) -> Result<Report, OtError> {
    match (suite, inputs.plan, inputs.glue) {
        (Suite::Coupling, Some(plan), _) => return verify_plan_file::<T>(plan, config),
        (Suite::Glue, _, Some((a, b))) => return verify_glue_files::<T>(a, b, config),
        (_, Some(_), _) => return Err(OtError::Parameter("--plan applies to the coupling suite only".into())),
        (_, _, Some(_)) => return Err(OtError::Parameter("--plan12/--plan23 apply to the glue suite only".into())),
        _ => {}
    }
    let cases = inputs.cases.unwrap_or_else(|| suite.default_cases());
    if cases == 0 {
        return Err(OtError::Parameter("--cases must be positive".into()));
    }
    let seed = config.seed;
    let tol = &config.tol;
    let mut extra = json!({});
    let failures = match suite {
        Suite::Coupling => battery(cases, seed, |k, r| coupling_case::<T>(k, r, tol))?,
        Suite::Metric => {
            let (failures, summary) = metric_suite::<T>(cases, seed, config)?;
            extra = summary;
            failures
        }
        Suite::Glue => battery(cases, seed, |k, r| glue_case::<T>(k, r, config))?,
        Suite::Restriction => battery(cases, seed, |_, r| restriction_case::<T>(r, tol))?,
        Suite::MoreauYosida => battery(cases, seed, |_, r| moreau_yosida_case::<T>(r))?,
        Suite::Liminf => {
            let sequence_tol = T::max_val(tol.clone(), T::ratio(1, 1_000_000_000));
            extra = json!({ "sequence_tol": scalar_json(&sequence_tol) });
            let mut failures = liminf_fixture::<T>(&sequence_tol)?.into_iter().collect::<Vec<_>>();
            failures.extend(battery(cases, seed, |_, r| liminf_case::<T>(r, &sequence_tol))?);
            failures
        }
        Suite::Tail => battery(cases, seed, |_, r| tail_case::<T>(r, tol))?,
    };
    let passed = failures.is_empty();
    let mut body = json!({
        "suite": suite.name(),
        "mode": T::MODE.to_string(),
        "seed": seed,
        "cases": cases,
        "tol": scalar_json(tol),
        "passed": passed,
        "failures": failures,
    });
    if let (Value::Object(body), Value::Object(extra)) = (&mut body, extra) {
        body.extend(extra);
    }
    Ok(Report::verdict(passed, body))
}

fn verify_plan_file<T: Scalar>(path: &Path, config: &RunConfig<T>) -> Result<Report, OtError> {
    let file = io::load_plan::<T>(path)?;
    let (Some(mu1), Some(mu2)) = (&file.mu1, &file.mu2) else {
        return Err(OtError::parse("mu1", "plan file must embed both marginals to be verified"));
    };
    let mut report = coupling_report(&file.plan, mu1, mu2, &config.tol)?;
    report.body["suite"] = "coupling".into();
    report.body["passed"] = (report.status == Status::Ok).into();
    Ok(report)
}

fn verify_glue_files<T: Scalar>(a: &Path, b: &Path, config: &RunConfig<T>) -> Result<Report, OtError> {
    let pi12 = io::load_plan::<T>(a)?.plan;
    let pi23 = io::load_plan::<T>(b)?.plan;
    match glue(&pi12, &pi23, &config.tol) {
        Ok(g) => {
            let exact = g.marginal_12().entries().iter().zip(pi12.entries()).all(|(x, y)| x.eq_tol(y, &config.tol))
                && g.marginal_23().entries().iter().zip(pi23.entries()).all(|(x, y)| x.eq_tol(y, &config.tol));
            let pi13 = glued_marginal_13(&g);
            Ok(Report::verdict(
                exact,
                json!({
                    "suite": "glue",
                    "passed": exact,
                    "dims": [g.dims().0, g.dims().1, g.dims().2],
                    "marginal_13": io::matrix_json(&pi13.to_rows()),
                }),
            ))
        }
        Err(OtError::Glue { index, left, right }) => Ok(Report::verdict(
            false,
            json!({
                "suite": "glue",
                "passed": false,
                "worst_index": index,
                "left_marginal": left,
                "right_marginal": right,
                "error": format!("middle marginals disagree; worst index {index}"),
            }),
        )),
        Err(e) => Err(e),
    }
}

fn coupling_case<T: Scalar>(k: usize, r: &mut SeededRng, tol: &T) -> Case {
    let rows = r.random_range(1..=5);
    let cols = r.random_range(1..=5);
    let plan: TransportPlan<T> = random_plan(r, rows, cols, 9, 0.3);
    let (mu1, mu2) = marginals(&plan)?;
    let (plan, mu1, mu2, corrupted) = match k % 3 {
        0 => (plan, mu1, mu2, false),
        1 => {
            let mut flat = plan.entries().to_vec();
            let from = (0..flat.len()).find(|&i| !flat[i].is_zero()).expect("plan has mass");
            let to = r.random_range(0..flat.len());
            let delta = flat[from].clone() / T::from_int(2);
            flat[from] -= delta.clone();
            flat[to] += delta;
            (TransportPlan::from_flat(rows, cols, flat)?, mu1, mu2, true)
        }
        _ => {
            let other = random_measure(r, cols, 9, 0.2);
            (plan, mu1, other, true)
        }
    };
    let direct = is_coupling(&plan, &mu1, &mu2, tol)?.is_valid();
    let pairs = singleton_indicator_pairs(rows, cols);
    let via = verify_coupling_via_test_functions(&plan, &mu1, &mu2, &pairs, tol)?.is_empty();

    let c = random_cost::<T, _>(r, rows, cols, 0, 9);
    let solved = solve_kantorovich(&mu1, &mu2, &c)?;
    let solver_ok = is_coupling(&solved.plan, &mu1, &mu2, tol)?.is_valid();
    Ok((direct != via || !solver_ok).then(|| {
        json!({ "case": k, "corrupted": corrupted, "is_coupling": direct, "test_functions": via, "solver_plan_valid": solver_ok })
    }))
}

fn metric_suite<T: Scalar>(measures: usize, seed: u64, config: &RunConfig<T>) -> Result<(Vec<Value>, Value), OtError> {
    if measures < 2 {
        return Err(OtError::Parameter("metric suite needs at least two measures".into()));
    }
    let mut r = instance_rng(seed, 0);
    let space = random_cloud::<T, _>(&mut r, 8, 2, 50, NormOrder::Finite(2.0));
    let family: Vec<DiscreteMeasure<T>> = (0..measures).map(|_| random_measure(&mut r, 8, 20, 0.25)).collect();
    let report = metric_axiom_suite(&family, &space, &WassersteinParams::new(config.p, config.tol.clone())?)?;
    let failures = report
        .axioms
        .iter()
        .filter(|a| !a.passed())
        .map(|a| json!({ "axiom": a.axiom.to_string(), "tuples": a.failures }))
        .collect();
    let checked: serde_json::Map<String, Value> = report.axioms.iter().map(|a| (a.axiom.to_string(), Value::from(a.checked))).collect();
    Ok((failures, json!({ "p": config.p, "points": 8, "checked": checked })))
}

fn glue_case<T: Scalar>(k: usize, r: &mut SeededRng, config: &RunConfig<T>) -> Case {
    let n = r.random_range(2..=5);
    let space = random_cloud::<T, _>(r, n, 2, 12, NormOrder::Finite(2.0));
    // Every fourth case tends to put zero-weight atoms in the middle measure.
    let zero_prob = if k.is_multiple_of(4) { 0.4 } else { 0.0 };
    let mu1 = random_measure(r, n, 9, 0.2);
    let mu2: DiscreteMeasure<T> = random_measure(r, n, 9, zero_prob);
    let mu3 = random_measure(r, n, 9, 0.2);
    let pi12 = solve_kantorovich(&mu1, &mu2, &random_cost::<T, _>(r, n, n, 0, 9))?.plan;
    let pi23 = solve_kantorovich(&mu2, &mu3, &random_cost::<T, _>(r, n, n, 0, 9))?.plan;
    let tol = &config.tol;
    let g = glue(&pi12, &pi23, tol)?;
    let close = |a: &TransportPlan<T>, b: &TransportPlan<T>| a.entries().iter().zip(b.entries()).all(|(x, y)| x.eq_tol(y, tol));
    let marginals_ok = close(&g.marginal_12(), &pi12) && close(&g.marginal_23(), &pi23);
    let p13_ok = is_coupling(&glued_marginal_13(&g), &mu1, &mu3, tol)?.is_valid();
    let witness = triangle_witness(&mu1, &mu2, &mu3, &space, &WassersteinParams::new(config.p, tol.clone())?)?;
    Ok((!(marginals_ok && p13_ok && witness.holds)).then(|| {
        json!({
            "case": k,
            "marginals_exact": marginals_ok,
            "marginal_13_is_coupling": p13_ok,
            "w13": scalar_json(&witness.w13),
            "glued_cost_13": scalar_json(&witness.glued_cost_13),
            "w12_plus_w23": scalar_json(&(witness.w12.clone() + witness.w23.clone())),
        })
    }))
}

fn restriction_case<T: Scalar>(r: &mut SeededRng, tol: &T) -> Case {
    let rows = r.random_range(1..=5);
    let cols = r.random_range(1..=5);
    let mu1 = random_measure(r, rows, 9, 0.1);
    let mu2 = random_measure(r, cols, 9, 0.1);
    let c = random_cost::<T, _>(r, rows, cols, 0, 15);
    let sol = solve_kantorovich(&mu1, &mu2, &c)?;
    // Redraw until the mask keeps positive mass.
    loop {
        let mask = random_mask(r, rows, cols, 0.6);
        match verify_restriction_optimality(&sol, &mask, &c, tol) {
            Ok(check) => {
                return Ok((!check.holds).then(|| {
                    json!({
                        "mask": mask,
                        "restricted_cost": extended_json(&check.restricted_cost),
                        "resolved_cost": extended_json(&check.resolved_cost),
                    })
                }))
            }
            Err(OtError::EmptyRestriction) => continue,
            Err(e) => return Err(e),
        }
    }
}

fn moreau_yosida_case<T: Scalar>(r: &mut SeededRng) -> Case {
    let n = r.random_range(2..=10);
    let space = random_cloud::<T, _>(r, n, 2, 15, NormOrder::Finite(1.0));
    let mut values: Vec<Extended<T>> = (0..n)
        .map(|_| if r.random_bool(0.2) { Extended::PosInf } else { Extended::Finite(T::ratio(r.random_range(-20..=40), r.random_range(1..=4))) })
        .collect();
    if values.iter().all(Extended::is_infinite) {
        values[0] = Extended::Finite(T::zero());
    }
    let f = ExtendedFunction::new(values)?;
    let report = check_moreau_yosida_properties(&f, &space, 12)?;
    Ok((!report.passed()).then(|| {
        json!({
            "values": f.values().iter().map(extended_json).collect::<Vec<_>>(),
            "monotone": report.monotone,
            "dominated": report.dominated,
            "lipschitz": report.lipschitz,
            "exact_past_threshold": report.exact_past_threshold,
            "diverges_where_infinite": report.diverges_where_infinite,
        })
    }))
}

/// Plans with vanishing mass on a `+∞` cell: the cost jumps down in the limit.
fn liminf_fixture<T: Scalar>(tol: &T) -> Result<Option<Value>, OtError> {
    let half = T::ratio(1, 2);
    let c = CostMatrix::new(vec![vec![Extended::PosInf, Extended::Finite(T::zero())], vec![Extended::Finite(T::zero()); 2]])?;
    let limit = TransportPlan::new(vec![vec![T::zero(), half.clone()], vec![half.clone(), T::zero()]])?;
    let plans = (1..=16u32)
        .map(|k| {
            let eps = T::ratio(1, 10i64.pow(k));
            TransportPlan::new(vec![vec![eps.clone(), half.clone() - eps.clone()], vec![half.clone() - eps.clone(), eps]])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = liminf_cost_check(&plans, &limit, &c, tol)?;
    Ok((!(report.holds && report.strict)).then(|| {
        json!({ "case": "infinite-cell fixture", "liminf": extended_json(&report.liminf_value), "limit": extended_json(&report.limit_value) })
    }))
}

fn liminf_case<T: Scalar>(r: &mut SeededRng, tol: &T) -> Case {
    let rows = r.random_range(1..=4);
    let cols = r.random_range(1..=4);
    let limit: TransportPlan<T> = random_plan(r, rows, cols, 9, 0.3);
    let other: TransportPlan<T> = random_plan(r, rows, cols, 9, 0.3);
    let c = random_cost::<T, _>(r, rows, cols, 0, 10);
    // π_k = (1 − 10⁻ᵏ) π + 10⁻ᵏ σ
    let plans = (1..=16u32)
        .map(|k| {
            let eps = T::ratio(1, 10i64.pow(k));
            let flat = limit.entries().iter().zip(other.entries()).map(|(a, b)| (T::one() - eps.clone()) * a.clone() + eps.clone() * b.clone()).collect();
            TransportPlan::from_flat(rows, cols, flat)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = liminf_cost_check(&plans, &limit, &c, tol)?;
    Ok((!(report.holds && report.equality == Some(true))).then(|| {
        json!({ "liminf": extended_json(&report.liminf_value), "limit": extended_json(&report.limit_value), "equality": report.equality })
    }))
}

fn tail_case<T: Scalar>(r: &mut SeededRng, tol: &T) -> Case {
    let rows = r.random_range(1..=6);
    let cols = r.random_range(1..=6);
    let plan: TransportPlan<T> = random_plan(r, rows, cols, 9, 0.3);
    let k1 = random_subset(r, rows, 0.6);
    let k2 = random_subset(r, cols, 0.6);
    let bound = tail_mass_bound_check(&plan, &k1, &k2, tol)?;
    Ok((!bound.holds).then(|| {
        json!({ "k1": k1, "k2": k2, "outside_mass": scalar_json(&bound.outside_mass), "marginal_tails": scalar_json(&bound.marginal_tails) })
    }))
}
