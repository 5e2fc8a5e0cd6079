use payrule::bidder::Strategy;
use payrule::center::center_lp;
use payrule::distributions::{DistributionSpec, Family};
use payrule::equilibrium::{find_equilibrium, EquilibriumConfig};
use payrule::grid::Grid;
use payrule::rules::{calibrate_against, diagnose, RuleFamily};

fn gpd(shape: f64, grid: &Grid) -> DistributionSpec {
    DistributionSpec::on_grid(
        Family::Gpd {
            location: 0.0,
            scale: 1.0,
            shape,
        },
        grid,
    )
    .unwrap()
}

fn config() -> EquilibriumConfig {
    EquilibriumConfig {
        gamma: 0.25,
        ..Default::default()
    }
}

/// First and last charged bin of a rule.
fn charged_span(values: &[f64]) -> (usize, usize) {
    let charged: Vec<usize> = (0..values.len()).filter(|&b| values[b] > 1e-9).collect();
    (*charged.first().unwrap(), *charged.last().unwrap())
}

#[test]
fn small_cutoff_matches_center_solution_for_heavy_tail() {
    let grid = Grid::standard();
    let f = gpd(1.0, &grid);
    let eq = find_equilibrium(&f, &config(), &grid).unwrap();
    let lp = center_lp(&f, &f, &eq.strategy, &grid);
    let small = calibrate_against(RuleFamily::Small, &lp, eq.budget.k, &grid).unwrap();
    let (first, _) = charged_span(eq.rule.values());
    let cutoff_bin = grid.bin_of(small.parameter).unwrap();
    assert!(
        cutoff_bin.abs_diff(first) <= 1,
        "cutoff bin {cutoff_bin}, center starts at {first}"
    );
}

#[test]
fn large_cutoff_matches_center_solution_for_bounded_tail() {
    let grid = Grid::standard();
    let f = gpd(-0.1, &grid);
    let eq = find_equilibrium(&f, &config(), &grid).unwrap();
    let lp = center_lp(&f, &f, &eq.strategy, &grid);
    let large = calibrate_against(RuleFamily::Large, &lp, eq.budget.k, &grid).unwrap();
    let (_, last) = charged_span(eq.rule.values());
    let cutoff_bin = grid.bin_of(large.parameter).unwrap();
    assert!(
        cutoff_bin.abs_diff(last) <= 1,
        "cutoff bin {cutoff_bin}, center ends at {last}"
    );
    assert_eq!(eq.rule.values()[0], grid.midpoint(0));
}

#[test]
fn burr_charges_both_ends() {
    let grid = Grid::standard();
    let f = DistributionSpec::on_grid(
        Family::BurrXii {
            c: 2.0,
            k: 1.0,
            scale: 1.0,
        },
        &grid,
    )
    .unwrap();
    let eq = find_equilibrium(&f, &config(), &grid).unwrap();
    let v = eq.rule.values();
    assert!(eq.converged);
    assert_eq!(v[0], grid.midpoint(0));
    // the band sits just past the mode at 1/sqrt(3), where the density falls
    for psi in [1.0, 1.5, 2.0, 3.0] {
        assert_eq!(v[grid.bin_of(psi).unwrap()], 0.0, "{psi}");
    }
    assert_eq!(v[40], grid.midpoint(40));
}

#[test]
fn equilibrium_rule_beats_reference_rules_at_truth() {
    let grid = Grid::standard();
    let f = gpd(1.0, &grid);
    let eq = find_equilibrium(&f, &config(), &grid).unwrap();
    let lp = center_lp(&f, &f, &eq.strategy, &grid);
    let best = eq.rule.regret_at_truth(&f);
    for family in [RuleFamily::Threshold, RuleFamily::Small, RuleFamily::Large] {
        let r = calibrate_against(family, &lp, eq.budget.k, &grid).unwrap();
        assert!(r.rule.regret_at_truth(&f) >= best - 1e-9, "{family:?}");
    }
}

#[test]
fn small_rule_invites_less_shading_than_threshold_under_heavy_blinding() {
    let grid = Grid::new(0.0, 10.0, 50, 40).unwrap();
    let f = gpd(1.0, &grid);
    let s = Strategy::truthful();
    let lp = center_lp(&f, &f, &s, &grid);
    let k = 0.2 * payrule::center::k_vcg(&f, &grid);
    let small = calibrate_against(RuleFamily::Small, &lp, k, &grid).unwrap();
    let thr = calibrate_against(RuleFamily::Threshold, &lp, k, &grid).unwrap();
    let ds = diagnose(&small.rule, &f, 1000.0, &s, &grid).unwrap();
    let dt = diagnose(&thr.rule, &f, 1000.0, &s, &grid).unwrap();
    assert!(ds.regret_at_truth <= dt.regret_at_truth);
    assert!(ds.worst_case_regret >= dt.worst_case_regret);
    assert!(
        ds.deviation_incentive <= dt.deviation_incentive,
        "{} vs {}",
        ds.deviation_incentive,
        dt.deviation_incentive
    );
}
