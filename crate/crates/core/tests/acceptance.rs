//! One line per acceptance criterion. Run with `cargo test -p tropdiv --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use tropdiv::approx::{approx_divide, ApproxConfig};
use tropdiv::composite::{
    box_maximizer, check_quotient_inequalities, weights_below_dividend, CompositePolynomial, InequalityInstance, ReluUnit,
};
use tropdiv::exact::{epigraph_generators, exact_divide, exact_divide_detailed};
use tropdiv::lp::{solve_lp, LinearProgram, LpStatus};
use tropdiv::nn::{count_params, ParamShape};
use tropdiv::polyhedral::{hrep_of, hull_of_union, vrep_of, HRep, VRep};
use tropdiv::rng::seeded;
use tropdiv::scalar::{rat, rat_int};
use tropdiv::{DivisionProblem, Rational, Scalar, TropicalPolynomial, TropicalTerm};

use common::{grid, nontrivial_problem, rational_grid, small_poly, Envelope};

type Verdict = Result<(bool, String), String>;

fn poly(dim: usize, terms: &[(&[(i64, i64)], (i64, i64))]) -> TropicalPolynomial<Rational> {
    let terms =
        terms.iter().map(|(a, b)| TropicalTerm::new(a.iter().map(|&(n, d)| rat(n, d)).collect(), rat(b.0, b.1))).collect();
    TropicalPolynomial::new(dim, terms).unwrap()
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

fn golden_1d() -> DivisionProblem<Rational> {
    let p = poly(1, &[(&[(-2, 1)], (-1, 1)), (&[(0, 1)], (1, 1)), (&[(1, 1)], (1, 1)), (&[(3, 1)], (-3, 1))]);
    let d = poly(1, &[(&[(1, 1)], (0, 1)), (&[(2, 1)], (-1, 1))]);
    DivisionProblem::new(p, d).unwrap()
}

fn golden_2d() -> DivisionProblem<Rational> {
    let p = poly(2, &[(&[(0, 1), (0, 1)], (0, 1)), (&[(3, 1), (3, 1)], (0, 1)), (&[(6, 1), (0, 1)], (0, 1))]);
    let d = poly(2, &[(&[(1, 1), (0, 1)], (0, 1)), (&[(1, 1), (1, 1)], (0, 1)), (&[(2, 1), (1, 1)], (0, 1))]);
    DivisionProblem::new(p, d).unwrap()
}

fn describe(p: &TropicalPolynomial<Rational>) -> String {
    let terms: Vec<String> = p
        .canonical()
        .terms()
        .iter()
        .map(|t| {
            let a: Vec<String> = t.a.iter().map(|v| v.to_string()).collect();
            format!("[{}].x {} {}", a.join(","), if t.b < rat_int(0) { "-" } else { "+" }, t.b.abs_val())
        })
        .collect();
    format!("max({})", terms.join(", "))
}

fn golden_1d_division() -> Verdict {
    let problem = golden_1d();
    let start = Instant::now();
    let result = exact_divide(&problem).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let expected_q = poly(1, &[(&[(-3, 1)], (1, 1)), (&[(-1, 1)], (1, 1)), (&[(-1, 2)], (1, 1)), (&[(1, 1)], (-2, 1))]);
    let expected_r = poly(1, &[(&[(1, 1)], (1, 1))]);
    let q_ok = result.quotient.canonical() == expected_q.canonical();
    let r_ok = result.remainder.canonical() == expected_r.canonical();
    Ok((
        q_ok && r_ok && within(elapsed, 1.0),
        format!(
            "q = {} (expected {}), r matches: {r_ok}, {:.3}s",
            describe(&result.quotient),
            describe(&expected_q),
            elapsed.as_secs_f64()
        ),
    ))
}

fn golden_2d_division() -> Verdict {
    let problem = golden_2d();
    let start = Instant::now();
    let result = exact_divide(&problem).map_err(|e| e.to_string())?;
    let sum = problem.divisor.tropical_sum(&result.quotient).and_then(|s| s.prune_dominated()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let expected_q = poly(2, &[(&[(3, 2), (3, 2)], (0, 1)), (&[(3, 1), (0, 1)], (0, 1)), (&[(0, 1), (0, 1)], (0, 1))]);
    let expected_sum = poly(
        2,
        &[
            (&[(1, 1), (0, 1)], (0, 1)),
            (&[(1, 1), (1, 1)], (0, 1)),
            (&[(5, 2), (5, 2)], (0, 1)),
            (&[(7, 2), (5, 2)], (0, 1)),
            (&[(5, 1), (1, 1)], (0, 1)),
            (&[(4, 1), (0, 1)], (0, 1)),
        ],
    );
    let q_ok = result.quotient.canonical() == expected_q.canonical();
    let sum_ok = sum.canonical() == expected_sum.canonical();
    Ok((
        q_ok && sum_ok && within(elapsed, 1.0),
        format!(
            "q = {}, d+q has {} terms (six expected: {sum_ok}), {:.3}s",
            describe(&result.quotient),
            sum.len(),
            elapsed.as_secs_f64()
        ),
    ))
}

fn alternating_on_golden_2d() -> Verdict {
    let problem = golden_2d();
    let problem = DivisionProblem::new(problem.dividend.to_f64(), problem.divisor.to_f64()).unwrap();
    let config = ApproxConfig { terms: 3, samples: 200, max_iters: 20, restarts: 1, seed: 7, tol: 1e-6 };
    let start = Instant::now();
    let out = approx_divide(&problem, &config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let log = &out.fit.restarts[out.fit.best_restart];
    let exact = [[1.5, 1.5, 0.0], [0.0, 0.0, 0.0], [3.0, 0.0, 0.0]];
    let mut worst: f64 = 0.0;
    let mut matched = [false; 3];
    for t in out.result.quotient.terms() {
        let v = [t.a[0], t.a[1], t.b];
        let (k, gap) = exact
            .iter()
            .enumerate()
            .filter(|(k, _)| !matched[*k])
            .map(|(k, e)| (k, e.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .ok_or("more fitted terms than exact terms")?;
        matched[k] = true;
        worst = worst.max(gap);
    }
    let all = matched.iter().all(|&m| m);
    Ok((
        log.converged && log.iterations <= 5 && all && worst <= 0.05 && within(elapsed, 5.0),
        format!(
            "converged: {} after {} iterations, largest deviation {:.4}, {:.3}s",
            log.converged,
            log.iterations,
            worst,
            elapsed.as_secs_f64()
        ),
    ))
}

fn residual_monotonicity() -> Verdict {
    let mut rng = seeded(60);
    let mut checked = 0;
    let mut worst_negative: f64 = 0.0;
    let mut worst_increase: f64 = f64::NEG_INFINITY;
    for _ in 0..50 {
        let dim = rng.random_range(1..=2);
        let exact = nontrivial_problem(&mut rng, dim, 6, 3);
        let problem = DivisionProblem::new(exact.dividend.to_f64(), exact.divisor.to_f64()).unwrap();
        let terms = rng.random_range(1..=4);
        for seed in 0..3 {
            let config = ApproxConfig { terms, samples: 100, max_iters: 25, restarts: 2, seed, tol: 1e-6 };
            let out = approx_divide(&problem, &config).map_err(|e| e.to_string())?;
            for log in &out.fit.restarts {
                for e in &log.trace {
                    worst_negative = worst_negative.min(*e);
                }
                for w in log.trace.windows(2) {
                    worst_increase = worst_increase.max(w[1] - w[0]);
                }
            }
            checked += 1;
        }
    }
    Ok((
        worst_negative >= -1e-9 && worst_increase <= 1e-9,
        format!("{checked} runs, min e(t) {worst_negative:.3e}, largest step increase {worst_increase:.3e}"),
    ))
}

fn envelope_oracle() -> Verdict {
    let mut rng = seeded(25);
    let mut worst: f64 = 0.0;
    let mut nontrivial = 0;
    for k in 0..25 {
        let dim = 1 + k % 2;
        let problem = nontrivial_problem(&mut rng, dim, 6, 3);
        let q = exact_divide(&problem).map_err(|e| e.to_string())?.quotient.to_f64();
        let oracle = Envelope::new(&problem.dividend, &problem.divisor);
        if !q.is_neg_inf() {
            nontrivial += 1;
        }
        let points = if dim == 1 { grid(1, 10_000, -5.0, 5.0) } else { grid(2, 100, -5.0, 5.0) };
        for x in &points {
            let a = q.eval(x).to_f64();
            let b = oracle.eval(x);
            let gap = if a == b { 0.0 } else { (a - b).abs() };
            worst = worst.max(gap);
        }
    }
    Ok((worst <= 1e-6, format!("25 problems ({nontrivial} nontrivial), 10^4 points each, largest gap {worst:.3e}")))
}

fn inequality_instance(rng: &mut tropdiv::rng::Rng, dim: usize, exact_dividends: bool) -> InequalityInstance {
    let d = small_poly(rng, dim, 2);
    let (p1, p2) = if exact_dividends {
        let q1 = small_poly(rng, dim, 2);
        let q2 = small_poly(rng, dim, 2);
        (d.tropical_sum(&q1).unwrap(), d.tropical_sum(&q2).unwrap())
    } else {
        (small_poly(rng, dim, 3), small_poly(rng, dim, 3))
    };
    InequalityInstance {
        p1,
        p2,
        d,
        p: small_poly(rng, dim, 3),
        d1: small_poly(rng, dim, 2),
        d2: small_poly(rng, dim, 2),
        monomial: common::int_term(rng, dim, 2, 2),
    }
}

fn remainder_inequality_weight_suites() -> Verdict {
    let mut rng = seeded(378);
    let mut notes = Vec::new();
    let mut pass = true;

    // Remainders cannot be divided further.
    let mut effective_again = 0;
    for k in 0..25 {
        let dim = 1 + k % 2;
        let d = small_poly(&mut rng, dim, 3);
        let p = small_poly(&mut rng, dim, 5);
        let r = exact_divide(&DivisionProblem::new(p, d.clone()).unwrap()).map_err(|e| e.to_string())?.remainder;
        let again = exact_divide(&DivisionProblem::new(r.clone(), d).unwrap()).map_err(|e| e.to_string())?;
        let probes = rational_grid(dim, -3, 3, 2);
        if again.effective || !again.remainder.agrees_on(&r, &probes) {
            effective_again += 1;
        }
    }
    pass &= effective_again == 0;
    notes.push(format!("re-division effective {effective_again}/25"));

    // Quotient inequalities.
    let names = ["sum-dividend", "max-dividend", "sum-divisor", "max-divisor"];
    let mut failures = [0usize; 4];
    let mut equality_missing = 0;
    for k in 0..25 {
        let dim = 1 + k % 2;
        let inst = inequality_instance(&mut rng, dim, k % 3 == 0);
        let g = if dim == 1 { rational_grid(1, -4, 4, 4) } else { rational_grid(2, -3, 3, 2) };
        let report = check_quotient_inequalities(&inst, &g).map_err(|e| e.to_string())?;
        for (i, name) in names.iter().enumerate() {
            if !report.get(name).unwrap().holds {
                failures[i] += 1;
            }
        }
        if report.exact_dividends
            && !(report.get("sum-dividend").unwrap().equality && report.get("max-dividend").unwrap().equality)
        {
            equality_missing += 1;
        }
    }
    pass &= failures.iter().all(|&f| f == 0) && equality_missing == 0;
    notes.push(format!(
        "inequality failures {}; equality missing in {equality_missing} exact cases",
        names.iter().zip(&failures).map(|(n, f)| format!("{n} {f}/25")).collect::<Vec<_>>().join(", ")
    ));

    // Weight conditions against sampling.
    let mut disagreements = 0;
    for k in 0..100 {
        let n = 2 + k % 2;
        let (p, a, bias) = loop {
            let a = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
            if a.determinant().abs() > 0.3 {
                let bias: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let units = (0..n).map(|c| ReluUnit::new(a.column(c).iter().copied().collect(), bias[c])).collect();
                break (CompositePolynomial::new(n, units).unwrap(), a, bias);
            }
        };
        let m = rng.random_range(1..=3);
        let mut mu: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(0.0..0.9 / m as f64)).collect()).collect();
        let mut offsets: Vec<f64> = (0..m).map(|_| -rng.random_range(0.0..1.0)).collect();
        if k % 2 == 1 {
            let (i, c) = (rng.random_range(0..m), rng.random_range(0..n));
            match rng.random_range(0..3) {
                0 => mu[i][c] = -0.3,
                1 => {
                    let total: f64 = mu.iter().map(|row| row[c]).sum::<f64>().max(1e-3);
                    for row in mu.iter_mut() {
                        row[c] = if total > 1e-3 { row[c] * 1.3 / total } else { 1.3 / m as f64 };
                    }
                }
                _ => offsets[i] = 0.3,
            }
        }
        let candidate: Vec<ReluUnit> = mu
            .iter()
            .zip(&offsets)
            .map(|(w, c)| {
                let slope = &a * DVector::from_column_slice(w);
                let b = bias.iter().zip(w).map(|(x, y)| x * y).sum::<f64>() + c;
                ReluUnit::new(slope.iter().copied().collect(), b)
            })
            .collect();
        let claimed = weights_below_dividend(&p, &candidate).map_err(|e| e.to_string())?;
        let mut samples: Vec<Vec<f64>> = Vec::new();
        for scale in [1.0, 10.0, 100.0, 1000.0] {
            for _ in 0..1000 {
                samples.push(
                    (0..n)
                        .map(|_| {
                            scale * {
                                let z: f64 = StandardNormal.sample(&mut rng);
                                z
                            }
                        })
                        .collect::<Vec<f64>>(),
                );
            }
        }
        let kink = a.transpose().lu().solve(&DVector::from_iterator(n, bias.iter().map(|b| -b))).ok_or("singular")?;
        for _ in 0..200 {
            samples.push(
                kink.iter()
                    .map(|k| {
                        k + 0.05 * {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            z
                        }
                    })
                    .collect(),
            );
        }
        samples.push(kink.iter().copied().collect());
        let q = CompositePolynomial::new(n, candidate).unwrap();
        let observed = samples.iter().all(|x| q.eval(x) <= p.eval(x) + 1e-9 * (1.0 + p.eval(x).abs()));
        if claimed != observed {
            disagreements += 1;
        }
    }
    pass &= disagreements == 0;
    notes.push(format!("weight test vs sampling disagreements {disagreements}/100"));

    // Threshold rule against the simplex solver.
    let mut box_mismatch = 0;
    for _ in 0..200 {
        let dim = rng.random_range(1..=6);
        let upper: Vec<f64> = (0..dim).map(|_| rng.random_range(0..=12) as f64 / 4.0).collect();
        let direction: Vec<f64> = (0..dim).map(|_| rng.random_range(-4..=4) as f64 / 2.0).collect();
        let rule = box_maximizer(&upper, &direction);
        let mut lp = LinearProgram::<Rational>::new(dim);
        lp.maximize(direction.iter().map(|&v| Rational::from_f64(v)).collect());
        for (i, &w) in upper.iter().enumerate() {
            lp.bounds(i, Some(rat_int(0)), Some(Rational::from_f64(w)));
        }
        let out = solve_lp(&lp).map_err(|e| e.to_string())?;
        let rule_value: Rational = rule.iter().zip(&direction).map(|(a, s)| Rational::from_f64(a * s)).sum();
        let same_point = (0..dim).all(|i| direction[i] == 0.0 || Rational::from_f64(rule[i]) == out.x[i]);
        if out.status != LpStatus::Optimal || out.objective != rule_value || !same_point {
            box_mismatch += 1;
        }
    }
    pass &= box_mismatch == 0;
    notes.push(format!("threshold rule vs LP mismatches {box_mismatch}/200"));
    Ok((pass, notes.join("; ")))
}

fn parameter_counts() -> Verdict {
    let cases = [
        (ParamShape::Dense { sizes: vec![768, 100, 1] }, 77001),
        (ParamShape::MaxoutBinary { input_dim: 768, terms: 10 }, 15381),
        (ParamShape::MaxoutBinary { input_dim: 768, terms: 5 }, 7691),
        (ParamShape::MaxoutBinary { input_dim: 768, terms: 3 }, 4615),
        (ParamShape::TropicalPair { input_dim: 2048, units: 1024 }, 2098177),
        (ParamShape::MaxoutBinary { input_dim: 2048, terms: 5 }, 20491),
        (ParamShape::MaxoutBinary { input_dim: 2048, terms: 3 }, 12295),
    ];
    let got: Vec<u64> = cases.iter().map(|(s, _)| count_params(s)).collect();
    let ok = cases.iter().zip(&got).all(|((_, want), g)| g == want);
    Ok((ok, format!("{got:?}")))
}

fn random_hrep(rng: &mut tropdiv::rng::Rng) -> HRep {
    let dim = rng.random_range(1..=3);
    let mut h = HRep::new(dim);
    for _ in 0..rng.random_range(1..=6) {
        let row = (0..dim).map(|_| rat_int(rng.random_range(-3..=3))).collect();
        h.push(row, rat_int(rng.random_range(-4..=4))).unwrap();
    }
    h
}

/// Whether every inequality of `b` holds on all of `a`, by minimizing each row over `a`.
fn implies(a: &HRep, b: &HRep) -> Result<bool, String> {
    for (row, rhs) in b.rows.iter().zip(&b.rhs) {
        let mut lp = LinearProgram::<Rational>::new(a.dim);
        lp.minimize(row.clone());
        for (r, v) in a.rows.iter().zip(&a.rhs) {
            lp.geq(r.clone(), v.clone());
        }
        let out = solve_lp(&lp).map_err(|e| e.to_string())?;
        match out.status {
            LpStatus::Optimal if out.objective >= *rhs => {}
            LpStatus::Infeasible => return Ok(true),
            _ => return Ok(false),
        }
    }
    Ok(true)
}

fn is_feasible(h: &HRep) -> Result<bool, String> {
    let mut lp = LinearProgram::<Rational>::new(h.dim);
    for (r, v) in h.rows.iter().zip(&h.rhs) {
        lp.geq(r.clone(), v.clone());
    }
    Ok(solve_lp(&lp).map_err(|e| e.to_string())?.status != LpStatus::Infeasible)
}

fn polyhedral_round_trip() -> Verdict {
    let mut rng = seeded(100);
    let mut failures = 0;
    let mut empty = 0;
    for _ in 0..100 {
        let h = random_hrep(&mut rng);
        let v = vrep_of(&h).map_err(|e| e.to_string())?;
        if v.is_empty() {
            empty += 1;
            if is_feasible(&h)? {
                failures += 1;
            }
            continue;
        }
        let back = hrep_of(&v).map_err(|e| e.to_string())?;
        if !(implies(&h, &back)? && implies(&back, &h)?) {
            failures += 1;
        }
    }

    let problem = golden_1d();
    let detail = exact_divide_detailed(&problem).map_err(|e| e.to_string())?;
    let parts: Vec<VRep> = detail.cells.iter().filter(|c| c.full_dimensional).map(|c| epigraph_generators(&problem, c)).collect();
    let hull = hull_of_union(&parts).map_err(|e| e.to_string())?.canonical();
    let expected = VRep {
        dim: 2,
        vertices: vec![vec![rat_int(-1), rat_int(2)], vec![rat_int(0), rat_int(1)], vec![rat_int(2), rat_int(0)]],
        rays: vec![vec![rat_int(-1), rat_int(3)], vec![rat_int(1), rat_int(1)]],
    }
    .canonical();
    let figure_ok = parts.len() == 5 && hull == expected;
    Ok((
        failures == 0 && figure_ok,
        format!(
            "round trip failures {failures}/100 ({empty} empty); {} cell epigraphs, hull generators match: {figure_ok}",
            parts.len()
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("one-dimensional golden division", golden_1d_division),
        ("two-dimensional golden division", golden_2d_division),
        ("alternating division on the two-dimensional golden problem", alternating_on_golden_2d),
        ("residual monotonicity suite", residual_monotonicity),
        ("convex envelope oracle", envelope_oracle),
        ("remainder, quotient inequality, weight and threshold suites", remainder_inequality_weight_suites),
        ("parameter counts", parameter_counts),
        ("polyhedral round trip and golden cell hull", polyhedral_round_trip),
    ];
    let mut passed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let (ok, detail) = match std::panic::catch_unwind(check) {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        passed += ok as usize;
        println!("{} {name} [{:.2}s]: {detail}", if ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    println!("{passed}/{} criteria passed", criteria.len());
}
