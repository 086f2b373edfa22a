use csrp::lp::{solve_lp, solve_mip, LpProblem, ObjectiveSense, RowSense, Status};
use proptest::prelude::*;

/// A feasible, bounded maximisation: nonnegative rows with a positive
/// right-hand side plus a cap on the variable sum.
fn bounded_lp() -> impl Strategy<Value = LpProblem<f64>> {
    (1usize..6, 1usize..6).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-5.0f64..10.0, n),
            prop::collection::vec(prop::collection::vec(0.0f64..5.0, n), m),
            prop::collection::vec(1.0f64..20.0, m),
        )
            .prop_map(move |(c, rows, rhs)| {
                let mut p = LpProblem::maximize(c);
                for (row, b) in rows.into_iter().zip(rhs) {
                    p.add_row(row, RowSense::Le, b);
                }
                p.add_row(vec![1.0; n], RowSense::Le, 10.0);
                p
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn optimum_is_feasible_and_scales(p in bounded_lp(), k in 0.1f64..10.0) {
        let sol = solve_lp(&p).unwrap();
        prop_assert_eq!(sol.status, Status::Optimal);
        prop_assert!(p.max_violation(&sol.x) <= 1e-9);
        prop_assert!((p.objective_value(&sol.x) - sol.objective).abs() <= 1e-9 * (1.0 + sol.objective.abs()));

        let mut scaled = p.clone();
        scaled.objective.iter_mut().for_each(|c| *c *= k);
        let s2 = solve_lp(&scaled).unwrap();
        prop_assert!((s2.objective - k * sol.objective).abs() <= 1e-7 * (1.0 + s2.objective.abs()));
    }

    #[test]
    fn redundant_row_changes_nothing(p in bounded_lp()) {
        let sol = solve_lp(&p).unwrap();
        let mut q = p.clone();
        let n = q.num_vars();
        q.add_row(vec![1.0; n], RowSense::Le, 1e3);
        let s2 = solve_lp(&q).unwrap();
        prop_assert!((s2.objective - sol.objective).abs() <= 1e-9 * (1.0 + sol.objective.abs()));
    }

    #[test]
    fn minimising_the_negation_agrees(p in bounded_lp()) {
        let max = solve_lp(&p).unwrap();
        let mut q = p.clone();
        q.sense = ObjectiveSense::Minimize;
        q.objective.iter_mut().for_each(|c| *c = -*c);
        let min = solve_lp(&q).unwrap();
        prop_assert!((min.objective + max.objective).abs() <= 1e-9 * (1.0 + max.objective.abs()));
    }

    #[test]
    fn mip_never_beats_its_relaxation(p in bounded_lp()) {
        let relaxed = solve_lp(&p).unwrap();
        let mut q = p.clone();
        for j in 0..q.num_vars() {
            q.set_integer(j, true);
        }
        let mip = solve_mip(&q).unwrap();
        prop_assert_eq!(mip.status, Status::Optimal);
        prop_assert!(mip.objective <= relaxed.objective + 1e-9);
        prop_assert!(mip.x.iter().all(|v| (v - v.round()).abs() <= 1e-9));
    }
}

#[test]
fn single_precision_matches_double() {
    let mut p64 = LpProblem::maximize(vec![3.0f64, 2.0]);
    p64.add_row(vec![1.0, 1.0], RowSense::Le, 4.0);
    p64.add_row(vec![1.0, 3.0], RowSense::Le, 6.0);
    let mut p32 = LpProblem::maximize(vec![3.0f32, 2.0]);
    p32.add_row(vec![1.0, 1.0], RowSense::Le, 4.0);
    p32.add_row(vec![1.0, 3.0], RowSense::Le, 6.0);
    let a = solve_lp(&p64).unwrap();
    let b = solve_lp(&p32).unwrap();
    assert_eq!(a.status, Status::Optimal);
    assert!((a.objective - 12.0).abs() < 1e-12);
    assert!((b.objective - 12.0).abs() < 1e-5);
}

#[test]
fn infeasible_and_unbounded_are_reported() {
    let mut p = LpProblem::<f64>::maximize(vec![1.0]);
    p.add_row(vec![1.0], RowSense::Ge, 5.0);
    p.add_row(vec![1.0], RowSense::Le, 2.0);
    assert_eq!(solve_lp(&p).unwrap().status, Status::Infeasible);

    let mut p = LpProblem::<f64>::maximize(vec![1.0, 1.0]);
    p.add_row(vec![1.0, -1.0], RowSense::Le, 1.0);
    let sol = solve_lp(&p).unwrap();
    assert_eq!(sol.status, Status::Unbounded);
    let ray = sol.ray.unwrap();
    assert!(ray[0] - ray[1] <= 1e-12 && ray[0] + ray[1] > 0.0);
}
