//! Calibrates the closed-form reference rules to the same budget and
//! compares their diagnostics with the equilibrium rule.

use payrule::bidder::{best_response_constant, Strategy};
use payrule::distributions::{DistributionSpec, Family};
use payrule::equilibrium::{find_equilibrium, EquilibriumConfig};
use payrule::grid::Grid;
use payrule::rules::{calibrate, diagnose, RuleFamily};

fn main() -> payrule::Result<()> {
    let grid = Grid::standard();
    let f = DistributionSpec::on_grid(
        Family::Gpd {
            location: 0.0,
            scale: 1.0,
            shape: 1.0,
        },
        &grid,
    )?;
    let config = EquilibriumConfig {
        gamma: 0.25,
        ..Default::default()
    };
    let eq = find_equilibrium(&f, &config, &grid)?;
    let mu_sigma = 1000.0;

    println!("rule        param   at-truth  worst    DI        collected  shade");
    let d = diagnose(&eq.rule, &f, mu_sigma, &eq.strategy, &grid)?;
    println!(
        "equilibrium  {:>5}  {:.5}   {:.4}   {:.2e}  {:.5}    {:.4}",
        "-", d.regret_at_truth, d.worst_case_regret, d.deviation_incentive, d.budget_collected, d.best_response_shade
    );
    for family in [RuleFamily::Threshold, RuleFamily::Small, RuleFamily::Large] {
        let r = match calibrate(family, &f, &eq.strategy, &eq.budget, &grid) {
            Ok(r) => r,
            Err(e) => {
                println!("{:<11}  {e}", family.name());
                continue;
            }
        };
        // collected from bidders who best respond to this rule
        let s = Strategy::constant(best_response_constant(&r.rule, &f, &grid))?;
        let d = diagnose(&r.rule, &f, mu_sigma, &s, &grid)?;
        println!(
            "{:<11}  {:>5.3}  {:.5}   {:.4}   {:.2e}  {:.5}    {:.4}",
            family.name(),
            r.parameter,
            d.regret_at_truth,
            d.worst_case_regret,
            d.deviation_incentive,
            d.budget_collected,
            d.best_response_shade
        );
    }
    Ok(())
}
