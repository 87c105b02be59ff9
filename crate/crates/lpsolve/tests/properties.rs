//! Solver invariants on random LPs that are feasible by construction.

use geolith_lp::{solve, LpModel, Sense, SolveOptions, Status};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Case {
    x0: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    c: Vec<f64>,
    rows: Vec<(Vec<f64>, Sense, f64)>,
}

fn sense() -> impl Strategy<Value = Sense> {
    prop_oneof![Just(Sense::Le), Just(Sense::Ge), Just(Sense::Eq)]
}

/// Rows are placed so that `x0` satisfies them; slack keeps inequalities loose.
fn case() -> impl Strategy<Value = Case> {
    (1usize..=10, 1usize..=8).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec((-5.0..5.0f64, 0.0..4.0f64, 0.0..4.0f64), n),
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec((prop::collection::vec(-3i32..=3, n), sense(), 0.0..3.0f64), m),
        )
            .prop_map(|(boxes, c, raw)| {
                let x0: Vec<f64> = boxes.iter().map(|b| b.0).collect();
                let lo = boxes.iter().map(|b| b.0 - b.1).collect();
                let hi = boxes.iter().map(|b| b.0 + b.2).collect();
                let rows = raw
                    .into_iter()
                    .map(|(a, s, slack)| {
                        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
                        let act: f64 = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
                        let rhs = match s {
                            Sense::Le => act + slack,
                            Sense::Ge => act - slack,
                            Sense::Eq => act,
                        };
                        (a, s, rhs)
                    })
                    .collect();
                Case { x0, lo, hi, c, rows }
            })
    })
}

fn model(k: &Case, scale: f64, reverse_rows: bool) -> LpModel {
    let mut m = LpModel::new("prop");
    let vars: Vec<_> = (0..k.c.len())
        .map(|j| m.add_var(format!("x{j}"), k.lo[j], k.hi[j], scale * k.c[j]))
        .collect();
    let mut order: Vec<usize> = (0..k.rows.len()).collect();
    if reverse_rows {
        order.reverse();
    }
    for i in order {
        let (a, s, rhs) = &k.rows[i];
        let terms: Vec<_> = a.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, &v)| (vars[j], v)).collect();
        m.add_constraint(format!("r{i}"), terms, *s, *rhs);
    }
    m
}

fn tol(v: f64) -> f64 {
    1e-7 * (1.0 + v.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn feasible_boxed_lp_is_solved_to_a_point_no_worse_than_the_seed(k in case()) {
        let m = model(&k, 1.0, false);
        let sol = solve(&m, &SolveOptions::default(), None).unwrap();
        prop_assert_eq!(sol.status, Status::Optimal);
        prop_assert!(m.max_violation(&sol.primal) < 1e-7);
        let seed = m.objective_value(&k.x0);
        prop_assert!(sol.objective <= seed + tol(seed), "{} > {}", sol.objective, seed);
        prop_assert!((m.objective_value(&sol.primal) - sol.objective).abs() <= tol(sol.objective));
    }

    #[test]
    fn optimum_scales_with_the_objective_and_ignores_row_order(k in case(), scale in 0.1..20.0f64) {
        let base = solve(&model(&k, 1.0, false), &SolveOptions::default(), None).unwrap();
        let scaled = solve(&model(&k, scale, true), &SolveOptions::default(), None).unwrap();
        prop_assert_eq!(scaled.status, Status::Optimal);
        let want = scale * base.objective;
        prop_assert!((scaled.objective - want).abs() <= 1e-6 * (1.0 + want.abs()), "{} vs {}", scaled.objective, want);
    }

    #[test]
    fn warm_start_from_the_optimal_basis_reproduces_the_optimum(k in case()) {
        let m = model(&k, 1.0, false);
        let cold = solve(&m, &SolveOptions::default(), None).unwrap();
        let warm = solve(&m, &SolveOptions::default(), cold.basis.as_ref()).unwrap();
        prop_assert_eq!(warm.status, Status::Optimal);
        prop_assert!((warm.objective - cold.objective).abs() <= tol(cold.objective));
        prop_assert!(warm.stats.iterations <= cold.stats.iterations);
    }
}
