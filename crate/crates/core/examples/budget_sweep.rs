//! Equilibrium shade of GPD(0, 1, 1) bidders as the budget share grows.

use payrule::distributions::{DistributionSpec, Family};
use payrule::equilibrium::{find_equilibrium, EquilibriumConfig};
use payrule::grid::Grid;

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
    println!("gamma  shade    collected  rounds");
    for gamma in [0.0, 0.1, 0.2, 0.25, 0.3, 0.4, 0.5, 0.75] {
        let config = EquilibriumConfig {
            gamma,
            ..Default::default()
        };
        match find_equilibrium(&f, &config, &grid) {
            Ok(t) => println!(
                "{gamma:<5}  {:<7.4}  {:<9.5}  {}",
                t.shade().unwrap(),
                t.collected,
                t.rounds.len()
            ),
            // no rule raises the budget once bidders shade in response
            Err(e) if e.is_infeasible() => println!("{gamma:<5}  infeasible ({e})"),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}
