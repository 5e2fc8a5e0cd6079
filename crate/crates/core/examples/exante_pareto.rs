//! Ex-ante equilibrium for GPD-distributed potential profit at three tail
//! shapes. Usage: `cargo run --release --example exante_pareto [gamma]`.

use payrule::distributions::{DistributionSpec, Family};
use payrule::equilibrium::{find_equilibrium, EquilibriumConfig};
use payrule::grid::Grid;

fn main() -> payrule::Result<()> {
    let gamma: f64 = std::env::args().nth(1).map_or(0.25, |a| a.parse().expect("gamma"));
    let grid = Grid::standard();
    let config = EquilibriumConfig {
        gamma,
        ..Default::default()
    };
    for shape in [-0.1, 0.01, 1.0] {
        let f = DistributionSpec::on_grid(
            Family::Gpd {
                location: 0.0,
                scale: 1.0,
                shape,
            },
            &grid,
        )?;
        match find_equilibrium(&f, &config, &grid) {
            Ok(trace) => {
                let charged = trace.rule.charged_bins(1e-9);
                let band: String = charged.iter().map(|&c| if c { '#' } else { '.' }).collect();
                println!(
                    "shape {shape:>5}: s* = {:.4}  rounds {}  converged {}",
                    trace.shade().unwrap(),
                    trace.rounds.len(),
                    trace.converged
                );
                println!("             charged bins {band}");
            }
            Err(e) => println!("shape {shape:>5}: {e}"),
        }
    }
    Ok(())
}
