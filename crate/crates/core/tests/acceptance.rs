//! Acceptance battery: ten criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the summary lines are always
//! printed; the process exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use ot_kantor::generate::{cost_from_integers, normalize, random_cloud, random_cost, random_integer_costs, random_mask, random_measure, random_plan, random_subset, random_weights, rng};
use ot_kantor::*;

/// Float tolerance for the metric battery.
const METRIC_TOL: f64 = 1e-9;
/// Relative agreement between float and exact costs at scale.
const SCALE_REL_TOL: f64 = 1e-6;
const SCALE_TIME_LIMIT: Duration = Duration::from_secs(10);
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(60);

struct Outcome {
    passed: bool,
    detail: String,
}

fn q(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

fn zero() -> Rational {
    q(0, 1)
}

struct OracleRun {
    basis_instances: usize,
    basis_mismatches: Vec<u64>,
    perm_instances: usize,
    perm_mismatches: Vec<u64>,
    coupling_failures: Vec<u64>,
    elapsed: Duration,
}

fn oracle_runs() -> OracleRun {
    const BASIS: u64 = 1000;
    const PERM: u64 = 500;
    let start = Instant::now();
    let basis: Vec<(bool, bool)> = (0..BASIS)
        .into_par_iter()
        .map(|seed| {
            let mut r = rng(seed);
            let rows = r.random_range(1..=7);
            let cols = r.random_range(1..=8 - rows);
            let mu1: DiscreteMeasure<Rational> = random_measure(&mut r, rows, 12, 0.15);
            let mu2: DiscreteMeasure<Rational> = random_measure(&mut r, cols, 12, 0.15);
            let c = random_cost(&mut r, rows, cols, -5, 20);
            let sol = solve_kantorovich(&mu1, &mu2, &c).expect("solver");
            let oracle = oracle_basis_enumeration(&mu1, &mu2, &c).expect("oracle");
            let coupled = is_coupling(&sol.plan, &mu1, &mu2, &zero()).expect("shape").is_valid();
            (sol.optimal_cost == oracle.optimal_cost, coupled)
        })
        .collect();
    let perm: Vec<(bool, bool)> = (0..PERM)
        .into_par_iter()
        .map(|seed| {
            let mut r = rng(10_000 + seed);
            let n = r.random_range(1..=6);
            let mu = DiscreteMeasure::<Rational>::uniform(n).unwrap();
            let c = random_cost(&mut r, n, n, 0, 30);
            let sol = solve_kantorovich(&mu, &mu, &c).expect("solver");
            let oracle = oracle_permutation(&mu, &mu, &c).expect("oracle");
            let coupled = is_coupling(&sol.plan, &mu, &mu, &zero()).expect("shape").is_valid();
            (sol.optimal_cost == oracle.optimal_cost, coupled)
        })
        .collect();
    let failing = |v: &[(bool, bool)], offset: u64, pick: fn(&(bool, bool)) -> bool| -> Vec<u64> {
        v.iter().enumerate().filter(|(_, x)| !pick(x)).map(|(k, _)| offset + k as u64).collect()
    };
    let mut coupling_failures = failing(&basis, 0, |x| x.1);
    coupling_failures.extend(failing(&perm, 10_000, |x| x.1));
    OracleRun {
        basis_instances: basis.len(),
        basis_mismatches: failing(&basis, 0, |x| x.0),
        perm_instances: perm.len(),
        perm_mismatches: failing(&perm, 10_000, |x| x.0),
        coupling_failures,
        elapsed: start.elapsed(),
    }
}

fn criterion_oracle(run: &OracleRun) -> Outcome {
    let passed = run.basis_instances >= 1000
        && run.perm_instances >= 500
        && run.basis_mismatches.is_empty()
        && run.perm_mismatches.is_empty()
        && run.elapsed < ORACLE_TIME_LIMIT;
    Outcome {
        passed,
        detail: format!(
            "{} basis-enumeration instances ({} mismatches), {} permutation instances ({} mismatches), {:.1?}",
            run.basis_instances,
            run.basis_mismatches.len(),
            run.perm_instances,
            run.perm_mismatches.len(),
            run.elapsed
        ),
    }
}

fn criterion_feasibility(run: &OracleRun) -> Outcome {
    let total = run.basis_instances + run.perm_instances;
    Outcome {
        passed: run.coupling_failures.is_empty(),
        detail: format!("{total} solver plans checked exactly, failing seeds {:?}", run.coupling_failures),
    }
}

fn criterion_test_functions() -> Outcome {
    let mut agree = 0;
    let mut disagree = Vec::new();
    let (mut valid, mut invalid) = (0, 0);
    for seed in 0..600u64 {
        let mut r = rng(20_000 + seed);
        let rows = r.random_range(1..=5);
        let cols = r.random_range(1..=5);
        let plan: TransportPlan<Rational> = random_plan(&mut r, rows, cols, 9, 0.3);
        let (mu1, mu2) = marginals(&plan).unwrap();
        let (plan, mu1, mu2) = match seed % 3 {
            0 => (plan, mu1, mu2),
            1 => {
                // Move mass between two cells; marginals usually change.
                let mut flat = plan.entries().to_vec();
                let from = (0..flat.len()).find(|&k| flat[k] > zero()).unwrap();
                let to = r.random_range(0..flat.len());
                let delta = flat[from].clone() / Rational::from_int(2);
                flat[from] -= delta.clone();
                flat[to] += delta;
                (TransportPlan::from_flat(rows, cols, flat).unwrap(), mu1, mu2)
            }
            _ => {
                let other: DiscreteMeasure<Rational> = random_measure(&mut r, cols, 9, 0.2);
                (plan, mu1, other)
            }
        };
        let direct = is_coupling(&plan, &mu1, &mu2, &zero()).unwrap().is_valid();
        let pairs = singleton_indicator_pairs(rows, cols);
        let via_tests = verify_coupling_via_test_functions(&plan, &mu1, &mu2, &pairs, &zero()).unwrap().is_empty();
        if direct {
            valid += 1;
        } else {
            invalid += 1;
        }
        if direct == via_tests {
            agree += 1;
        } else {
            disagree.push(seed);
        }
    }
    Outcome {
        passed: disagree.is_empty() && agree >= 500 && valid > 0 && invalid > 0,
        detail: format!("{agree} agreements ({valid} valid, {invalid} corrupted), disagreements {disagree:?}"),
    }
}

fn criterion_metric() -> Outcome {
    let tol = METRIC_TOL;
    let mut notes = Vec::new();
    let mut passed = true;
    let mut r = rng(30_000);
    let space: FiniteMetricSpace<f64> = random_cloud(&mut r, 8, 2, 50, NormOrder::Finite(2.0));
    let measures: Vec<DiscreteMeasure<f64>> = (0..10).map(|_| random_measure(&mut r, 8, 20, 0.25)).collect();
    for p in [1.0, 2.0] {
        let report = metric_axiom_suite(&measures, &space, &WassersteinParams::new(p, tol).unwrap()).unwrap();
        let triangles = report.outcome(WassersteinAxiom::Triangle).map_or(0, |o| o.checked);
        passed &= report.passed() && triangles == 720;
        let failing: Vec<String> = report.axioms.iter().filter(|a| !a.passed()).map(|a| a.axiom.to_string()).collect();
        notes.push(format!("float p={p}: {triangles} triangles, failing {failing:?}"));
    }

    let mut r = rng(30_001);
    let space: FiniteMetricSpace<Rational> = random_cloud(&mut r, 8, 2, 50, NormOrder::Finite(2.0));
    let measures: Vec<DiscreteMeasure<Rational>> = (0..10).map(|_| random_measure(&mut r, 8, 20, 0.25)).collect();
    let report = metric_axiom_suite(&measures, &space, &WassersteinParams::new(1.0, zero()).unwrap()).unwrap();
    let exact_ok = [WassersteinAxiom::Symmetry, WassersteinAxiom::Triangle].iter().all(|&a| report.outcome(a).is_some_and(AxiomOutcome::passed));
    passed &= exact_ok;
    notes.push(format!("rational p=1 symmetry and triangle exact: {exact_ok}"));
    Outcome { passed, detail: notes.join("; ") }
}

fn criterion_gluing() -> Outcome {
    let mut pairs = 0;
    let mut zero_atom_cases = 0;
    let mut failures = Vec::new();
    for seed in 0..240u64 {
        let mut r = rng(40_000 + seed);
        let n = r.random_range(2..=5);
        let space: FiniteMetricSpace<Rational> = random_cloud(&mut r, n, 2, 12, NormOrder::Finite(2.0));
        let zero_prob = if seed % 4 == 0 { 0.4 } else { 0.0 };
        let mu1: DiscreteMeasure<Rational> = random_measure(&mut r, n, 9, 0.2);
        let mu2: DiscreteMeasure<Rational> = random_measure(&mut r, n, 9, zero_prob);
        let mu3: DiscreteMeasure<Rational> = random_measure(&mut r, n, 9, 0.2);
        let pi12 = solve_kantorovich(&mu1, &mu2, &random_cost(&mut r, n, n, 0, 9)).unwrap().plan;
        let pi23 = solve_kantorovich(&mu2, &mu3, &random_cost(&mut r, n, n, 0, 9)).unwrap().plan;
        let g = glue(&pi12, &pi23, &zero()).unwrap();
        let marginals_exact = g.marginal_12() == pi12 && g.marginal_23() == pi23;
        let p13 = is_coupling(&glued_marginal_13(&g), &mu1, &mu3, &zero()).unwrap().is_valid();
        let witness = triangle_witness(&mu1, &mu2, &mu3, &space, &WassersteinParams::new(1.0, zero()).unwrap()).unwrap();
        if mu2.weights().iter().any(|w| *w == zero()) {
            zero_atom_cases += 1;
        }
        pairs += 1;
        if !(marginals_exact && p13 && witness.holds) {
            failures.push(seed);
        }
    }
    Outcome {
        passed: failures.is_empty() && pairs >= 200 && zero_atom_cases >= 20,
        detail: format!("{pairs} glued pairs, {zero_atom_cases} with a zero-weight middle atom, failing seeds {failures:?}"),
    }
}

fn criterion_restriction() -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut seed = 50_000u64;
    while checked < 220 {
        seed += 1;
        let mut r = rng(seed);
        let rows = r.random_range(1..=5);
        let cols = r.random_range(1..=5);
        let mu1: DiscreteMeasure<Rational> = random_measure(&mut r, rows, 9, 0.1);
        let mu2: DiscreteMeasure<Rational> = random_measure(&mut r, cols, 9, 0.1);
        let c = random_cost(&mut r, rows, cols, 0, 15);
        let sol = solve_kantorovich(&mu1, &mu2, &c).unwrap();
        let mask = random_mask(&mut r, rows, cols, 0.6);
        match verify_restriction_optimality(&sol, &mask, &c, &zero()) {
            Ok(check) => {
                checked += 1;
                if !check.holds {
                    failures.push(seed);
                }
            }
            Err(OtError::EmptyRestriction) => continue,
            Err(e) => panic!("restriction seed {seed}: {e}"),
        }
    }
    Outcome { passed: failures.is_empty(), detail: format!("{checked} masks with positive mass, failing seeds {failures:?}") }
}

fn criterion_moreau_yosida() -> Outcome {
    let mut failures = Vec::new();
    let mut with_infinity = 0;
    let cases = 120u64;
    for seed in 0..cases {
        let mut r = rng(60_000 + seed);
        let n = r.random_range(2..=10);
        let space: FiniteMetricSpace<Rational> = random_cloud(&mut r, n, 2, 15, NormOrder::Finite(1.0));
        let mut values: Vec<Extended<Rational>> =
            (0..n).map(|_| if r.random_bool(0.2) { Extended::PosInf } else { Extended::Finite(q(r.random_range(-20..=40), r.random_range(1..=4))) }).collect();
        if values.iter().all(Extended::is_infinite) {
            values[0] = Extended::Finite(zero());
        }
        if values.iter().any(Extended::is_infinite) {
            with_infinity += 1;
        }
        let f = ExtendedFunction::new(values).unwrap();
        let report = check_moreau_yosida_properties(&f, &space, 12).unwrap();
        if !report.passed() {
            failures.push(seed);
        }
    }
    Outcome {
        passed: failures.is_empty() && cases >= 100,
        detail: format!("{cases} functions on spaces of 2..=10 points ({with_infinity} with +inf values), failing seeds {failures:?}"),
    }
}

fn criterion_tail() -> Outcome {
    let mut failures = Vec::new();
    let cases = 600u64;
    for seed in 0..cases {
        let mut r = rng(70_000 + seed);
        let rows = r.random_range(1..=6);
        let cols = r.random_range(1..=6);
        let plan: TransportPlan<Rational> = random_plan(&mut r, rows, cols, 9, 0.3);
        let k1 = random_subset(&mut r, rows, 0.6);
        let k2 = random_subset(&mut r, cols, 0.6);
        if !tail_mass_bound_check(&plan, &k1, &k2, &zero()).unwrap().holds {
            failures.push(seed);
        }
    }
    Outcome { passed: failures.is_empty(), detail: format!("{cases} (coupling, K1, K2) triples, failing seeds {failures:?}") }
}

fn criterion_liminf() -> Outcome {
    let tol = q(1, 1_000_000_000);
    let mut notes = Vec::new();

    // Mass 10⁻ᵏ on a +∞ cell: every element costs +∞, the limit costs 0.
    let c = CostMatrix::new(vec![vec![Extended::PosInf, Extended::Finite(zero())], vec![Extended::Finite(zero()), Extended::Finite(zero())]]).unwrap();
    let limit = TransportPlan::new(vec![vec![zero(), q(1, 2)], vec![q(1, 2), zero()]]).unwrap();
    let plans: Vec<_> = (1..=20)
        .map(|k| {
            let eps = Rational::from_int(1) / Rational::from_int(10i64.pow(k.min(18)));
            TransportPlan::new(vec![vec![eps.clone(), q(1, 2) - eps.clone()], vec![q(1, 2) - eps.clone(), eps]]).unwrap()
        })
        .collect();
    let fixture = liminf_cost_check(&plans, &limit, &c, &tol).unwrap();
    let strict_ok = fixture.holds && fixture.strict && fixture.liminf_value.is_infinite();
    notes.push(format!("+inf fixture strict: {strict_ok}"));

    let mut finite_failures = Vec::new();
    let cases = 60u64;
    for seed in 0..cases {
        let mut r = rng(80_000 + seed);
        let rows = r.random_range(1..=4);
        let cols = r.random_range(1..=4);
        let limit: TransportPlan<Rational> = random_plan(&mut r, rows, cols, 9, 0.3);
        let target: TransportPlan<Rational> = random_plan(&mut r, rows, cols, 9, 0.3);
        let c = random_cost(&mut r, rows, cols, 0, 10);
        // π_k = (1 − 10⁻ᵏ) π + 10⁻ᵏ σ.
        let plans: Vec<_> = (1..=16)
            .map(|k| {
                let eps = q(1, 10i64.pow(k));
                let flat = limit.entries().iter().zip(target.entries()).map(|(a, b)| (q(1, 1) - eps.clone()) * a.clone() + eps.clone() * b.clone()).collect();
                TransportPlan::from_flat(rows, cols, flat).unwrap()
            })
            .collect();
        let report = liminf_cost_check(&plans, &limit, &c, &tol).unwrap();
        if !(report.holds && report.equality == Some(true)) {
            finite_failures.push(seed);
        }
    }
    notes.push(format!("{cases} finite-cost sequences with equality, failing seeds {finite_failures:?}"));
    Outcome { passed: strict_ok && finite_failures.is_empty(), detail: notes.join("; ") }
}

fn criterion_scale() -> Outcome {
    let n = 500;
    let mut r = rng(90_000);
    let w1 = random_weights(&mut r, n, 1000, 0.0);
    let w2 = random_weights(&mut r, n, 1000, 0.0);
    let costs = random_integer_costs(&mut r, n, n, 0, 1000);

    let mu1 = DiscreteMeasure::<f64>::new(normalize(&w1)).unwrap();
    let mu2 = DiscreteMeasure::<f64>::new(normalize(&w2)).unwrap();
    let c = cost_from_integers::<f64>(&costs);
    let start = Instant::now();
    let big = solve_kantorovich(&mu1, &mu2, &c).unwrap();
    let elapsed = start.elapsed();
    let big_ok = big.optimal_cost.is_finite() && is_coupling(&big.plan, &mu1, &mu2, &1e-9).unwrap().is_valid();

    // Same instance downscaled to the leading 50 atoms and renormalized.
    let m = 50;
    let small_costs: Vec<Vec<i64>> = costs[..m].iter().map(|row| row[..m].to_vec()).collect();
    let float = solve_kantorovich(
        &DiscreteMeasure::<f64>::new(normalize(&w1[..m])).unwrap(),
        &DiscreteMeasure::<f64>::new(normalize(&w2[..m])).unwrap(),
        &cost_from_integers::<f64>(&small_costs),
    )
    .unwrap()
    .optimal_cost
    .to_f64();
    let exact = solve_kantorovich(
        &DiscreteMeasure::<Rational>::new(normalize(&w1[..m])).unwrap(),
        &DiscreteMeasure::<Rational>::new(normalize(&w2[..m])).unwrap(),
        &cost_from_integers::<Rational>(&small_costs),
    )
    .unwrap()
    .optimal_cost
    .to_f64();
    let rel = (float - exact).abs() / exact.abs().max(f64::MIN_POSITIVE);
    Outcome {
        passed: big_ok && elapsed < SCALE_TIME_LIMIT && rel <= SCALE_REL_TOL,
        detail: format!("{n}x{n} float solve in {elapsed:.2?} ({} pivots); {m}x{m} float vs exact relative gap {rel:.2e}", big.iterations),
    }
}

fn main() {
    let oracle = oracle_runs();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("oracle equivalence", Box::new(|| criterion_oracle(&oracle))),
        ("solver plans are couplings", Box::new(|| criterion_feasibility(&oracle))),
        ("test-function characterization of couplings", Box::new(criterion_test_functions)),
        ("Wasserstein metric axioms", Box::new(criterion_metric)),
        ("gluing and triangle witnesses", Box::new(criterion_gluing)),
        ("restriction optimality", Box::new(criterion_restriction)),
        ("Moreau-Yosida approximation", Box::new(criterion_moreau_yosida)),
        ("coupling tail bound", Box::new(criterion_tail)),
        ("liminf inequality", Box::new(criterion_liminf)),
        ("scale and float accuracy", Box::new(criterion_scale)),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        if !outcome.passed {
            failed += 1;
        }
        println!("[{verdict}] criterion {:>2} {name}: {}", k + 1, outcome.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
