//! A unimodal Burr XII profit distribution makes the center give the full
//! discount to bidders near the peak and charge both tails.

use payrule::distributions::{DistributionSpec, Family};
use payrule::equilibrium::{find_equilibrium, EquilibriumConfig};
use payrule::grid::Grid;

fn main() -> payrule::Result<()> {
    let grid = Grid::standard();
    let f = DistributionSpec::on_grid(
        Family::BurrXii {
            c: 2.0,
            k: 1.0,
            scale: 1.0,
        },
        &grid,
    )?;
    let config = EquilibriumConfig {
        gamma: 0.25,
        ..Default::default()
    };
    let trace = find_equilibrium(&f, &config, &grid)?;
    println!("s* = {:.4} after {} rounds", trace.shade().unwrap(), trace.rounds.len());
    println!("  psi     f(psi)   r(psi)");
    for (b, psi) in grid.midpoints().into_iter().enumerate().step_by(2) {
        println!("{psi:>5.2}  {:>8.5}  {:>7.4}", f.pdf(psi), trace.rule.values()[b]);
    }
    Ok(())
}
