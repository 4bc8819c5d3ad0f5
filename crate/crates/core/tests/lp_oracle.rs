use proptest::prelude::*;
use upmr_core::oracle::lp_vertex_oracle;
use upmr_lp::{solve_lp, Comparator, LinearProgram, LpStatus};

#[derive(Debug, Clone)]
struct RandomLp {
    bounds: Vec<(f64, f64)>,
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, u8, f64)>,
    /// Point inside the bounds that every row admits.
    anchor: Vec<f64>,
}

impl RandomLp {
    fn build(&self, cost_scale: f64) -> LinearProgram {
        let mut lp = LinearProgram::new();
        let vars: Vec<_> = self
            .bounds
            .iter()
            .zip(&self.objective)
            .enumerate()
            .map(|(j, (&(lo, hi), &c))| lp.add_var(format!("x{j}"), lo, hi, c * cost_scale))
            .collect();
        for (i, (a, kind, slack)) in self.rows.iter().enumerate() {
            let act: f64 = a.iter().zip(&self.anchor).map(|(a, x)| a * x).sum();
            let (cmp, rhs) = match kind {
                0 => (Comparator::Le, act + slack),
                1 => (Comparator::Ge, act - slack),
                _ => (Comparator::Eq, act),
            };
            lp.add_row(format!("r{i}"), vars.iter().copied().zip(a.iter().copied()), cmp, rhs);
        }
        lp
    }
}

fn random_lp() -> impl Strategy<Value = RandomLp> {
    (1usize..=5, 0usize..=5).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec((-5.0..0.0f64, 0.5..10.0f64), n),
            prop::collection::vec(-5.0..5.0f64, n),
            prop::collection::vec((prop::collection::vec(-3.0..3.0f64, n), 0u8..5, 0.0..4.0f64), m),
            prop::collection::vec(0.0..1.0f64, n),
        )
            .prop_map(|(b, objective, rows, t)| {
                let bounds: Vec<(f64, f64)> = b.iter().map(|&(lo, w)| (lo, lo + w)).collect();
                let anchor = bounds.iter().zip(&t).map(|(&(lo, hi), &t)| lo + t * (hi - lo)).collect();
                // At most one equality row.
                let mut seen_eq = false;
                let rows = rows
                    .into_iter()
                    .map(|(a, k, s)| {
                        let k = match k {
                            0 | 1 => 0,
                            2 | 3 => 1,
                            _ if !seen_eq => {
                                seen_eq = true;
                                2
                            }
                            _ => 0,
                        };
                        (a, k, s)
                    })
                    .collect();
                RandomLp { bounds, objective, rows, anchor }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn simplex_matches_vertex_enumeration(p in random_lp()) {
        let lp = p.build(1.0);
        let sol = solve_lp(&lp).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        prop_assert!(lp.max_violation(&sol.values) <= 1e-7);
        let best = lp_vertex_oracle(&lp).unwrap().expect("anchor point is feasible");
        prop_assert!((sol.objective - best).abs() <= 1e-6 * best.abs().max(1.0),
            "simplex {} vs vertices {}", sol.objective, best);
    }

    #[test]
    fn objective_scales_linearly(p in random_lp(), k in prop::sample::select(vec![1e-4, 1e-2, 1e2, 1e4])) {
        let base = solve_lp(&p.build(1.0)).unwrap();
        let scaled = solve_lp(&p.build(k)).unwrap();
        prop_assert!((scaled.objective - k * base.objective).abs() <= 1e-6 * (k * base.objective).abs().max(k));
    }
}

#[test]
fn one_outsized_cost_does_not_mask_the_rest() {
    // max −1e6·w + Σ small gains; w is never worth raising.
    let mut lp = LinearProgram::new();
    let w = lp.add_var("w", 0.0, 10.0, -1e6);
    let xs: Vec<_> = (0..4).map(|j| lp.add_var(format!("x{j}"), 0.0, 1.0, 1e-3 * (j + 1) as f64)).collect();
    lp.add_row("budget", xs.iter().map(|&x| (x, 1.0)), Comparator::Le, 2.0);
    lp.add_row("link", [(w, 1.0), (xs[0], -1.0)], Comparator::Ge, -1.0);
    let sol = solve_lp(&lp).unwrap();
    assert!((sol.objective - 7e-3).abs() < 1e-12, "{}", sol.objective);
    let best = lp_vertex_oracle(&lp).unwrap().unwrap();
    assert!((best - sol.objective).abs() < 1e-12);
}
