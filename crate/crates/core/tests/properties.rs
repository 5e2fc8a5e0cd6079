use proptest::prelude::*;

use payrule::bidder::Strategy as Shade;
use payrule::center::{center_lp, Budget, CenterLp, PaymentRule};
use payrule::distributions::{DistributionSpec, Family};
use payrule::grid::Grid;
use payrule::rules::{calibrate_against, realize, RuleFamily};

fn small_grid() -> Grid {
    Grid::new(0.0, 10.0, 50, 20).unwrap()
}

fn family() -> impl proptest::strategy::Strategy<Value = Family> {
    prop_oneof![
        (-0.3f64..1.5).prop_map(|shape| Family::Gpd {
            location: 0.0,
            scale: 1.0,
            shape
        }),
        (1.0f64..4.0, 0.5f64..2.0, 0.5f64..3.0).prop_map(|(c, k, scale)| Family::BurrXii { c, k, scale }),
        (0.0f64..10.0, 0.5f64..4.0).prop_map(|(mean, stddev)| Family::Normal { mean, stddev }),
        Just(Family::Uniform),
    ]
}

/// Plain LP instance with positive costs, weights and caps.
fn lp_instance() -> impl proptest::strategy::Strategy<Value = (CenterLp, f64)> {
    (2usize..=10)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0.01f64..1.0, n),
                prop::collection::vec(0.0f64..1.0, n),
                prop::collection::vec(0.1f64..10.0, n),
                0.0f64..1.0,
            )
        })
        .prop_map(|(c, w, cap, frac)| {
            let lp = CenterLp::new(c, w, cap);
            let k = frac * lp.max_collectible();
            (lp, k)
        })
}

/// Exhaustive vertex search for `min c.r  s.t. w.r >= k, 0 <= r <= cap`.
fn brute_force(lp: &CenterLp, k: f64) -> f64 {
    let n = lp.costs.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        let r: Vec<f64> = (0..n)
            .map(|i| if mask >> i & 1 == 1 { lp.caps[i] } else { 0.0 })
            .collect();
        let got = lp.collected(&r);
        if got >= k * (1.0 - 1e-12) {
            best = best.min(lp.objective(&r));
        }
        for j in 0..n {
            if lp.weights[j] == 0.0 {
                continue;
            }
            let x = (k - (got - lp.weights[j] * r[j])) / lp.weights[j];
            if (0.0..=lp.caps[j]).contains(&x) {
                let mut r2 = r.clone();
                r2[j] = x;
                best = best.min(lp.objective(&r2));
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn center_solutions_are_bang_bang(fam in family(), gamma in 0.0f64..1.0, s in 0.0f64..2.0) {
        let grid = small_grid();
        let f = DistributionSpec::on_grid(fam, &grid).unwrap();
        let budget = Budget::for_distribution(gamma, &f, &grid).unwrap();
        let lp = center_lp(&f, &f, &Shade::Constant(s), &grid);
        prop_assume!(budget.k <= lp.max_collectible());
        let rule = PaymentRule::new(grid, lp.solve(budget.k).unwrap()).unwrap();
        prop_assert!(rule.interior_bins(1e-9).len() <= 1);
        prop_assert!((lp.collected(rule.values()) - budget.k).abs() <= 1e-9 * budget.k.max(1.0));
    }

    #[test]
    fn greedy_matches_brute_force((lp, k) in lp_instance()) {
        let greedy = lp.objective(&lp.solve(k).unwrap());
        let oracle = brute_force(&lp, k);
        prop_assert!((greedy - oracle).abs() <= 1e-9 * oracle.abs().max(1e-12), "{greedy} vs {oracle}");
    }

    #[test]
    fn more_budget_costs_more((lp, k) in lp_instance(), extra in 0.0f64..1.0) {
        let k2 = k + extra * (lp.max_collectible() - k);
        let a = lp.solve(k).unwrap();
        let b = lp.solve(k2).unwrap();
        prop_assert!(lp.objective(&b) >= lp.objective(&a) - 1e-12);
        // the fill order does not depend on k, so every level rises
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(y >= &(x - 1e-12));
        }
    }

    #[test]
    fn cdf_integrates_pdf(fam in family(), a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let grid = Grid::standard();
        let f = DistributionSpec::on_grid(fam, &grid).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let integral = grid.integrate(|x| f.pdf(x), lo, hi);
        prop_assert!((integral - (f.cdf(hi) - f.cdf(lo))).abs() < 1e-4, "{integral}");
        prop_assert!(f.cdf(hi) >= f.cdf(lo));
    }

    #[test]
    fn calibrated_parameter_tracks_budget(shape in -0.2f64..1.2, s in 0.0f64..0.5, g1 in 0.05f64..0.5, g2 in 0.05f64..0.5) {
        let grid = small_grid();
        let f = DistributionSpec::on_grid(Family::Gpd { location: 0.0, scale: 1.0, shape }, &grid).unwrap();
        let lp = center_lp(&f, &f, &Shade::Constant(s), &grid);
        let (lo, hi) = if g1 < g2 { (g1, g2) } else { (g2, g1) };
        let k = |g: f64| Budget::for_distribution(g, &f, &grid).unwrap().k;
        for family in [RuleFamily::Threshold, RuleFamily::Large, RuleFamily::Small] {
            let (Ok(a), Ok(b)) = (calibrate_against(family, &lp, k(lo), &grid), calibrate_against(family, &lp, k(hi), &grid)) else {
                continue;
            };
            // Small charges more as its cutoff falls, the others as theirs rises
            if family == RuleFamily::Small {
                prop_assert!(b.parameter <= a.parameter + 1e-9);
            } else {
                prop_assert!(b.parameter >= a.parameter - 1e-9);
            }
            prop_assert!(lp.collected(realize(family, b.parameter, &grid).values()) >= lp.collected(a.rule.values()) - 1e-12);
        }
    }
}
