//! The greedy ratio method against the exact knapsack LP, for a fixed
//! constant shade.

use payrule::bidder::Strategy;
use payrule::center::{solve_center, solve_center_ratio, Budget};
use payrule::distributions::{DistributionSpec, Family};
use payrule::grid::Grid;

fn main() -> payrule::Result<()> {
    let grid = Grid::standard();
    let shade = 0.2;
    let strategy = Strategy::constant(shade)?;
    for shape in [-0.1, 0.01, 1.0] {
        let f = DistributionSpec::on_grid(
            Family::Gpd {
                location: 0.0,
                scale: 1.0,
                shape,
            },
            &grid,
        )?;
        let budget = Budget::for_distribution(0.25, &f, &grid)?;
        let ratio = solve_center_ratio(&f, &strategy, &budget, &grid)?;
        let exact = solve_center(&f, &f, &strategy, &budget, &grid)?;
        println!(
            "shape {shape:>5}: ratio method regret {:.6}, LP regret {:.6}, max |dr| {:.2e}",
            ratio.rule.regret_at_truth(&f),
            exact.regret_at_truth(&f),
            ratio.rule.sup_distance(&exact)
        );
        let first: Vec<String> = ratio.order[..5]
            .iter()
            .map(|&b| format!("{:.1}", grid.midpoint(b)))
            .collect();
        println!("             filled first at psi = {}", first.join(", "));
    }
    Ok(())
}
